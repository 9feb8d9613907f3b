//! The instrumented flat element store.
//!
//! Slots are 1-based throughout the crate: logical slot `s` lives at vec
//! index `s - 1`. This matches the position arithmetic of the structures
//! built on top (tree node `k` occupies slots `3k-2..=3k` and so on), which
//! is all stated in 1-based form.
//!
//! A *move* is one write of an element into a slot; a swap is two moves.
//! Reads are free. Comparisons are counted at the single choke point
//! [`ImplicitArray::cmp`] / [`ImplicitArray::cmp_key`].

use std::cmp::Ordering;

/// Monotone move/comparison totals plus per-operation maxima.
///
/// `begin_op`/`end_op` bracket one queue operation; the maxima are updated
/// from the deltas at `end_op`.
#[derive(Debug, Default, Clone)]
pub struct CostCounters {
    pub moves: u64,
    pub comparisons: u64,
    pub max_moves_per_op: u64,
    pub max_cmps_per_op: u64,
    /// Full-layout rebuilds performed (observability only).
    pub rebuilds: u64,
    op_moves_start: u64,
    op_cmps_start: u64,
    // Raw slot-store count, incremented at the write choke point. Test
    // builds assert it equals `moves`; a divergence means some code path
    // wrote a slot without accounting for the move.
    slot_writes: u64,
}

impl CostCounters {
    pub fn begin_op(&mut self) {
        self.op_moves_start = self.moves;
        self.op_cmps_start = self.comparisons;
    }

    pub fn end_op(&mut self) {
        let dm = self.moves - self.op_moves_start;
        let dc = self.comparisons - self.op_cmps_start;
        self.max_moves_per_op = self.max_moves_per_op.max(dm);
        self.max_cmps_per_op = self.max_cmps_per_op.max(dc);
    }

    /// Moves accrued since the last `begin_op`.
    pub fn op_moves(&self) -> u64 {
        self.moves - self.op_moves_start
    }

    /// Comparisons accrued since the last `begin_op`.
    pub fn op_cmps(&self) -> u64 {
        self.comparisons - self.op_cmps_start
    }

    /// True iff every counted move corresponds to exactly one slot write.
    pub fn audit_ok(&self) -> bool {
        self.moves == self.slot_writes
    }

    pub fn reset(&mut self) {
        *self = CostCounters::default();
    }
}

/// Element store of logical length `n` with cost accounting.
///
/// The complete persistent state of every queue in this crate is exactly
/// `(elements[1..=n], n)`; the counters are observability only and never
/// influence behaviour.
#[derive(Debug, Clone)]
pub struct ImplicitArray<K> {
    slots: Vec<K>,
    counters: CostCounters,
}

impl<K: Ord + Clone> ImplicitArray<K> {
    pub fn new() -> Self {
        ImplicitArray { slots: Vec::new(), counters: CostCounters::default() }
    }

    /// Rebuilds a store from raw state, as a strict-implicitness round trip
    /// does. Counters start at zero.
    pub fn from_elements(elements: Vec<K>) -> Self {
        ImplicitArray { slots: elements, counters: CostCounters::default() }
    }

    pub fn n(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Borrow of the live elements; free (used for snapshots and checkers).
    pub fn elements(&self) -> &[K] {
        &self.slots
    }

    pub fn counters(&self) -> &CostCounters {
        &self.counters
    }

    pub fn counters_mut(&mut self) -> &mut CostCounters {
        &mut self.counters
    }

    /// Uncounted read of slot `s` (1-based).
    #[inline]
    pub fn key(&self, s: usize) -> &K {
        &self.slots[s - 1]
    }

    #[inline]
    fn store(&mut self, s: usize, k: K) {
        self.counters.slot_writes += 1;
        self.slots[s - 1] = k;
    }

    /// Counted three-way comparison of two slots.
    #[inline]
    pub fn cmp(&mut self, a: usize, b: usize) -> Ordering {
        self.counters.comparisons += 1;
        self.slots[a - 1].cmp(&self.slots[b - 1])
    }

    /// Counted comparison of slot `a` against an out-of-array key.
    #[inline]
    pub fn cmp_key(&mut self, a: usize, k: &K) -> Ordering {
        self.counters.comparisons += 1;
        self.slots[a - 1].cmp(k)
    }

    /// Write `k` into slot `s`; one move.
    #[inline]
    pub fn write(&mut self, s: usize, k: K) {
        self.counters.moves += 1;
        self.store(s, k);
    }

    /// Swap two slots; two moves.
    #[inline]
    pub fn swap(&mut self, a: usize, b: usize) {
        debug_assert_ne!(a, b);
        self.counters.moves += 2;
        self.counters.slot_writes += 2;
        self.slots.swap(a - 1, b - 1);
    }

    /// Append a new element at slot `n+1`; one move.
    pub fn append(&mut self, k: K) {
        self.counters.moves += 1;
        self.counters.slot_writes += 1;
        self.slots.push(k);
    }

    /// Remove and return the last element. Shrinking is not a write, so this
    /// costs zero moves.
    pub fn pop_last(&mut self) -> K {
        self.slots.pop().expect("pop from empty array")
    }
}

impl<K: Ord + Clone> Default for ImplicitArray<K> {
    fn default() -> Self {
        Self::new()
    }
}

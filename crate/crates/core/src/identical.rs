//! Duplicate-key wrapper: pair items over the amortized structure.
//!
//! Storing items as pairs of *distinct* elements (the item key is the lesser)
//! restores the ability to encode bits when keys repeat. The wrapper keeps
//! three regimes, decided by `n` and the first two slots alone:
//!
//! * micro (`n < MICRO_MAX`) — the array is an unordered bag; extraction
//!   scans. Any content is valid, so dropping into this regime is free.
//! * degenerate (slots 1 and 2 equal) — one value dominates so hard that not
//!   even `PAIR_C * log2(n)` distinct pairs exist. The few elements that
//!   differ from the majority live at the array tail.
//! * full (slots 1 and 2 distinct) — layout
//!   `[e_t pair][p_L][p_B][PQ items][L][B']` where `p_L`/`p_B` are Gray
//!   counter fields over element pairs, PQ is the amortized structure over
//!   [`PairView`] items (`p_L` counts its items and substitutes for its n),
//!   `L` is a reservoir of equal elements kept contiguous and uniform, and
//!   `B'` is the raw insertion tail of `p_B` elements.
//!
//! Inserts append to `B'`; every `floor(log2 n)`-th operation (or when `B'`
//! hits capacity) a pairing pass converts `B'` plus reservoir material into
//! distinct-pair items and feeds them to the PQ, Gray-stepping `p_L` once per
//! item. Layout transitions (promotion, field-width changes at powers of
//! two, near-drain demotion) all funnel through one O(n) reorganization.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::amortized::{self, AfterExtract};
use crate::array::ImplicitArray;
use crate::codec::{msb, GrayField};
use crate::error::{PqError, Result};
use crate::slots::{PairView, UnitView};

/// Below this the array is an unordered bag with scan extraction.
pub const MICRO_MAX: usize = 512;

/// The `c` in the `c * log2(n)` distinct-pair promotion threshold.
pub const PAIR_C: usize = 4;

fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        1
    } else {
        msb(n - 1) + 1
    }
}

/// Field width for the two Gray counters at size `n`.
fn field_width(n: usize) -> usize {
    msb(n) + 1
}

/// Capacity of the degenerate-mode tail of non-majority elements.
fn tail_cap(n: usize) -> usize {
    PAIR_C * ceil_log2(n)
}

/// Capacity of `B'` before a pairing pass is forced.
fn bprime_cap(n: usize) -> usize {
    2 * PAIR_C * ceil_log2(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Micro,
    Degenerate,
    Full,
}

/// Full-mode slot map for a given `n`.
#[derive(Debug, Clone, Copy)]
struct Layout {
    width: usize,
    p_l: GrayField,
    p_b: GrayField,
    /// PQ items map to slots above this base (threshold item excepted).
    base: usize,
}

impl Layout {
    fn for_n(n: usize) -> Layout {
        let width = field_width(n);
        let p_l = GrayField::new(3, width);
        let p_b = GrayField::new(3 + 2 * width, width);
        Layout { width, p_l, p_b, base: 2 + 4 * width }
    }

    /// First slot of the L reservoir given the PQ item count.
    fn l_start(&self, n_pq: usize) -> usize {
        self.base + 2 * (n_pq - 1) + 1
    }
}

pub struct IdenticalPq<K: Ord + Clone> {
    arr: ImplicitArray<K>,
}

impl<K: Ord + Clone> IdenticalPq<K> {
    pub fn new() -> Self {
        Self::from_elements(Vec::new())
    }

    /// Reconstruct from raw state (strict-implicitness round trip).
    pub fn from_elements(elements: Vec<K>) -> Self {
        IdenticalPq { arr: ImplicitArray::from_elements(elements) }
    }

    pub fn len(&self) -> usize {
        self.arr.n()
    }

    pub fn is_empty(&self) -> bool {
        self.arr.is_empty()
    }

    pub fn elements(&self) -> &[K] {
        self.arr.elements()
    }

    pub fn counters(&self) -> &crate::array::CostCounters {
        self.arr.counters()
    }

    pub fn counters_mut(&mut self) -> &mut crate::array::CostCounters {
        self.arr.counters_mut()
    }

    /// Mode test: one comparison of the first two slots, zero moves.
    fn mode(&mut self) -> Mode {
        let n = self.arr.n();
        if n < MICRO_MAX {
            Mode::Micro
        } else if self.arr.cmp(1, 2) == Ordering::Equal {
            Mode::Degenerate
        } else {
            Mode::Full
        }
    }

    pub fn insert(&mut self, key: K) -> Result<()> {
        self.arr.counters_mut().begin_op();
        let n_old = self.arr.n();
        self.arr.append(key);
        let n = n_old + 1;
        if n < MICRO_MAX {
            self.arr.counters_mut().end_op();
            return Ok(());
        }
        if n == MICRO_MAX || (n_old >= MICRO_MAX && msb(n) != msb(n_old)) {
            // Entering structured territory, or the counter fields changed
            // width: rebuild the whole wrapper.
            self.reorganize()?;
            self.arr.counters_mut().end_op();
            return Ok(());
        }
        match self.mode() {
            Mode::Micro => unreachable!(),
            Mode::Degenerate => self.degenerate_insert_fixup()?,
            Mode::Full => {
                let lay = Layout::for_n(n);
                {
                    let mut v = UnitView::new(&mut self.arr);
                    lay.p_b.increment(&mut v)?;
                }
                self.maybe_make_pairs()?;
            }
        }
        self.arr.counters_mut().end_op();
        Ok(())
    }

    /// The new element was appended in degenerate mode: keep non-majority
    /// elements at the tail and promote when the census allows it.
    fn degenerate_insert_fixup(&mut self) -> Result<()> {
        let n = self.arr.n();
        let tail = self.degenerate_tail_len();
        // The appended element sits at slot n just past the old tail.
        if self.arr.cmp(n, 1) == Ordering::Equal {
            if tail > 0 {
                // Majority element belongs before the differing ones.
                self.arr.swap(n - tail, n);
            }
            if n % msb(n).max(1) == 0 && self.census_pairs() >= tail_cap(n) {
                self.reorganize()?;
            }
            return Ok(());
        }
        // A differing element extends the tail.
        if tail + 1 > tail_cap(n) {
            // Tail over capacity proves enough distinct pairs exist.
            if self.census_pairs() < tail_cap(n) {
                return Err(PqError::Corruption(
                    "degenerate tail overflow without promotion eligibility".into(),
                ));
            }
            self.reorganize()?;
        } else if n % msb(n).max(1) == 0 && self.census_pairs() >= tail_cap(n) {
            self.reorganize()?;
        }
        Ok(())
    }

    /// Length of the maximal differing suffix in degenerate mode (bounded by
    /// the tail capacity plus the element just appended).
    fn degenerate_tail_len(&mut self) -> usize {
        let n = self.arr.n();
        let limit = tail_cap(n) + 2;
        let mut t = 0;
        // Exclude slot n itself: callers deal with the fresh append.
        while t < limit && n - 1 - t >= 3 {
            if self.arr.cmp(n - 1 - t, 1) == Ordering::Equal {
                break;
            }
            t += 1;
        }
        t
    }

    /// Maximum number of distinct pairs the current multiset supports.
    fn census_pairs(&self) -> usize {
        let mut counts: BTreeMap<&K, usize> = BTreeMap::new();
        for k in self.arr.elements() {
            *counts.entry(k).or_insert(0) += 1;
        }
        let max_mult = counts.values().copied().max().unwrap_or(0);
        let n = self.arr.n();
        (n / 2).min(n - max_mult)
    }

    pub fn find_min(&mut self) -> Option<K> {
        if self.arr.is_empty() {
            return None;
        }
        let slot = match self.mode() {
            Mode::Micro => self.scan_min(1, self.arr.n()),
            Mode::Degenerate => {
                let n = self.arr.n();
                let tail = self.full_tail_len();
                let tmin = if tail > 0 { Some(self.scan_min(n - tail + 1, n)) } else { None };
                match tmin {
                    Some(s) if self.arr.cmp(s, 1) == Ordering::Less => s,
                    _ => 1,
                }
            }
            Mode::Full => self.full_min_slot().0,
        };
        Some(self.arr.key(slot).clone())
    }

    /// Slot of the smallest element in `[lo, hi]`.
    fn scan_min(&mut self, lo: usize, hi: usize) -> usize {
        let mut best = lo;
        for s in lo + 1..=hi {
            if self.arr.cmp(s, best) == Ordering::Less {
                best = s;
            }
        }
        best
    }

    /// Degenerate tail length with no fresh-append exclusion.
    fn full_tail_len(&mut self) -> usize {
        let n = self.arr.n();
        let limit = tail_cap(n) + 2;
        let mut t = 0;
        while t < limit && n - t >= 3 {
            if self.arr.cmp(n - t, 1) == Ordering::Equal {
                break;
            }
            t += 1;
        }
        t
    }

    /// Full-mode minimum: slot plus which region holds it.
    fn full_min_slot(&mut self) -> (usize, FullRegion) {
        let n = self.arr.n();
        let lay = Layout::for_n(n);
        let (n_pq, p_b) = self.read_counts(&lay);
        let l_start = lay.l_start(n_pq);
        let t_end = n - p_b;

        // PQ candidate.
        let mut best: Option<(usize, FullRegion)> = None;
        {
            let mut pv = PairView::new(&mut self.arr, lay.base);
            if let Ok(pos) = amortized::find_min_pos(&mut pv, n_pq) {
                let ks = pv.key_slot(pos);
                best = Some((ks, FullRegion::Pq(pos)));
            }
        }
        // Threshold item participates when the PQ is in its full regime
        // (where it is never an extraction candidate) only through rebuilds;
        // its elements still count, so probe its key slot too.
        {
            let mut pv = PairView::new(&mut self.arr, lay.base);
            let ks = pv.key_slot(1);
            best = Some(match best {
                Some(b) if self.arr.cmp(b.0, ks) != Ordering::Greater => b,
                _ => (ks, FullRegion::Threshold),
            });
        }
        // Field elements are ordinary queue members.
        for s in 3..=2 + 4 * lay.width {
            let b = best.unwrap();
            if self.arr.cmp(s, b.0) == Ordering::Less {
                best = Some((s, FullRegion::Field));
            }
        }
        // Reservoir representative (uniform value: its tail stands for all).
        if t_end >= l_start {
            let b = best.unwrap();
            if self.arr.cmp(t_end, b.0) == Ordering::Less {
                best = Some((t_end, FullRegion::Reservoir));
            }
        }
        // Raw insertion tail.
        for s in t_end + 1..=n {
            let b = best.unwrap();
            if self.arr.cmp(s, b.0) == Ordering::Less {
                best = Some((s, FullRegion::BPrime));
            }
        }
        best.unwrap()
    }

    fn read_counts(&mut self, lay: &Layout) -> (usize, usize) {
        let mut v = UnitView::new(&mut self.arr);
        let n_pq = lay.p_l.read(&mut v) as usize;
        let p_b = lay.p_b.read(&mut v) as usize;
        (n_pq, p_b)
    }

    pub fn extract_min(&mut self) -> Result<K> {
        if self.arr.is_empty() {
            return Err(PqError::Underflow);
        }
        self.arr.counters_mut().begin_op();
        let out = self.extract_inner()?;
        self.arr.counters_mut().end_op();
        Ok(out)
    }

    fn extract_inner(&mut self) -> Result<K> {
        let n = self.arr.n();
        match self.mode() {
            Mode::Micro => {
                let s = self.scan_min(1, n);
                if s != n {
                    self.arr.swap(s, n);
                }
                Ok(self.arr.pop_last())
            }
            Mode::Degenerate => {
                let tail = self.full_tail_len();
                let tmin = if tail > 0 { Some(self.scan_min(n - tail + 1, n)) } else { None };
                let out = match tmin {
                    Some(s) if self.arr.cmp(s, 1) == Ordering::Less => {
                        if s != n {
                            self.arr.swap(s, n);
                        }
                        self.arr.pop_last()
                    }
                    _ => {
                        // Take the last majority element, keeping the
                        // differing suffix contiguous.
                        let maj_last = n - tail;
                        if maj_last != n {
                            self.arr.swap(maj_last, n);
                        }
                        self.arr.pop_last()
                    }
                };
                // Dropping below the structured bound needs no conversion:
                // micro mode accepts any content.
                Ok(out)
            }
            Mode::Full => self.full_extract(),
        }
    }

    fn full_extract(&mut self) -> Result<K> {
        let n = self.arr.n();
        let lay = Layout::for_n(n);
        let (n_pq, p_b) = self.read_counts(&lay);
        let (slot, region) = self.full_min_slot();

        let out = match region {
            FullRegion::BPrime => {
                if slot != n {
                    self.arr.swap(slot, n);
                }
                let out = self.arr.pop_last();
                let mut v = UnitView::new(&mut self.arr);
                lay.p_b.decrement(&mut v)?;
                out
            }
            FullRegion::Reservoir => {
                // All reservoir elements are equal; take the one at its tail
                // so the region stays contiguous. The array tail backfills.
                let t_end = n - p_b;
                if t_end != n {
                    self.arr.swap(t_end, n);
                }
                // The moved element came from B' (if any): region boundaries
                // shift by one, p_b is unchanged, |L| shrank by one.
                self.arr.pop_last()
            }
            FullRegion::Field | FullRegion::Threshold => {
                // A counter-field or threshold element is globally minimal:
                // rare near-drain situation. Swap it out and rebuild the
                // whole wrapper from raw content.
                if slot != n {
                    self.arr.swap(slot, n);
                }
                let out = self.arr.pop_last();
                self.reorganize()?;
                return Ok(out);
            }
            FullRegion::Pq(pos) => {
                if n_pq == 1 {
                    // Only the threshold item remains: dissolve the wrapper.
                    debug_assert_eq!(pos, 1);
                    let ks = {
                        let mut pv = PairView::new(&mut self.arr, lay.base);
                        pv.key_slot(1)
                    };
                    if ks != n {
                        self.arr.swap(ks, n);
                    }
                    let out = self.arr.pop_last();
                    self.reorganize()?;
                    return Ok(out);
                }
                self.pq_extract(&lay, n_pq, p_b)?
            }
        };
        self.after_shrink(n)?;
        Ok(out)
    }

    /// After an extraction shrank the array: handle field-width transitions
    /// and the pairing cadence.
    fn after_shrink(&mut self, n_before: usize) -> Result<()> {
        let n = self.arr.n();
        if n < MICRO_MAX {
            return Ok(());
        }
        if msb(n) != msb(n_before) {
            if self.mode() == Mode::Full {
                return self.reorganize();
            }
            return Ok(());
        }
        if self.mode() == Mode::Full {
            self.maybe_make_pairs()?;
        }
        Ok(())
    }

    /// Extract the PQ minimum item: return its lesser element, push the
    /// partner onto `B'`, refill the two vacated slots keeping the reservoir
    /// uniform, and step both counters.
    fn pq_extract(&mut self, lay: &Layout, n_pq: usize, p_b: usize) -> Result<K> {
        let n = self.arr.n();
        let after = {
            let mut pv = PairView::new(&mut self.arr, lay.base);
            amortized::extract_to_last(&mut pv, n_pq)?
        };
        // The minimum item now occupies the PQ's last two slots.
        let v1 = lay.l_start(n_pq) - 2;
        let v2 = v1 + 1;
        let (ret_slot, partner_slot) = if self.arr.cmp(v1, v2) != Ordering::Greater {
            (v1, v2)
        } else {
            (v2, v1)
        };
        let out = self.arr.key(ret_slot).clone();
        let partner = self.arr.key(partner_slot).clone();

        let t_end = n - p_b;
        let l_len = t_end.saturating_sub(lay.l_start(n_pq) - 1);
        // Refill v1/v2 from the reservoir tail (keeping it uniform), bring
        // the raw tail's last element forward if one exists, and finish with
        // the partner joining B'. Slot n retires holding a stale copy.
        match (l_len, p_b) {
            (0, 0) => {
                // The PQ was everything: partner parks at v1, v2 retires.
                debug_assert_eq!(v2, n);
                self.arr.write(v1, partner);
            }
            (0, _) => {
                // t_end == v2 here; new B' spans [v1, n-1].
                self.arr.swap(v1, n);
                self.arr.write(v2, partner);
            }
            (1, 0) => {
                // Single reservoir element at t_end == n.
                self.arr.swap(v1, t_end);
                self.arr.write(v2, partner);
            }
            (1, _) => {
                self.arr.swap(v1, t_end);
                self.arr.swap(v2, n);
                self.arr.write(t_end, partner);
            }
            (_, 0) => {
                // Reservoir tail occupies n-1 and n.
                self.arr.swap(v1, t_end);
                self.arr.swap(v2, t_end - 1);
                self.arr.write(t_end - 1, partner);
            }
            (_, _) => {
                self.arr.swap(v1, t_end);
                self.arr.swap(v2, t_end - 1);
                self.arr.swap(t_end - 1, n);
                self.arr.write(t_end, partner);
            }
        }
        self.arr.pop_last();

        {
            let mut v = UnitView::new(&mut self.arr);
            lay.p_l.decrement(&mut v)?;
            // B' lost up to two tail elements into the refill but gained the
            // partner and any rerouted raws; net change is +1 with the
            // boundary shifted left by two.
            lay.p_b.increment(&mut v)?;
        }
        if after == AfterExtract::RebuildNeeded {
            let mut pv = PairView::new(&mut self.arr, lay.base);
            amortized::rebuild(&mut pv, n_pq - 1)?;
        }
        Ok(out)
    }

    /// Run the pairing pass on the usual cadence or when `B'` is at
    /// capacity.
    fn maybe_make_pairs(&mut self) -> Result<()> {
        let n = self.arr.n();
        if n < MICRO_MAX || self.mode() != Mode::Full {
            return Ok(());
        }
        let lay = Layout::for_n(n);
        let (_, p_b) = self.read_counts(&lay);
        if p_b == 0 {
            return Ok(());
        }
        if n % msb(n).max(1) == 0 || p_b >= bprime_cap(n) {
            self.make_pairs()?;
        }
        Ok(())
    }

    /// Convert `B'` (plus reservoir material) into distinct-pair items, feed
    /// them to the PQ, and leave a uniform reservoir with an empty `B'`.
    fn make_pairs(&mut self) -> Result<()> {
        let n = self.arr.n();
        let lay = Layout::for_n(n);
        let (mut n_pq, p_b) = self.read_counts(&lay);
        if p_b == 0 {
            return Ok(());
        }
        let l_start = lay.l_start(n_pq);
        let t_end = n - p_b;
        let l_len = t_end.saturating_sub(l_start - 1);
        let reservoir_val = if l_len > 0 { Some(self.arr.key(t_end).clone()) } else { None };

        // Snapshot the raw tail; the reservoir contributes virtually.
        let bprime: Vec<K> = (t_end + 1..=n).map(|s| self.arr.key(s).clone()).collect();
        let mut others: BTreeMap<K, usize> = BTreeMap::new();
        let mut v_count = l_len;
        for k in &bprime {
            match &reservoir_val {
                Some(v) if k == v => v_count += 1,
                _ => *others.entry(k.clone()).or_insert(0) += 1,
            }
        }

        // Pairing plan: others against the reservoir first, then others
        // against each other (largest groups first), residue stays.
        let mut pairs: Vec<(K, K)> = Vec::new();
        let mut groups: Vec<(usize, K)> =
            others.into_iter().map(|(k, c)| (c, k)).collect();
        if let Some(v) = &reservoir_val {
            let mut rest = Vec::new();
            for (mut c, k) in groups {
                while c > 0 && v_count > 0 {
                    pairs.push((k.clone(), v.clone()));
                    c -= 1;
                    v_count -= 1;
                }
                if c > 0 {
                    rest.push((c, k));
                }
            }
            groups = rest;
        }
        // Max-matching among the leftover groups: repeatedly pair the two
        // most numerous distinct values.
        let mut heap: std::collections::BinaryHeap<(usize, std::cmp::Reverse<usize>)> =
            std::collections::BinaryHeap::new();
        let keys: Vec<K> = groups.iter().map(|(_, k)| k.clone()).collect();
        for (i, (c, _)) in groups.iter().enumerate() {
            heap.push((*c, std::cmp::Reverse(i)));
        }
        while heap.len() >= 2 {
            let (c1, i1) = heap.pop().unwrap();
            let (c2, i2) = heap.pop().unwrap();
            pairs.push((keys[i1.0].clone(), keys[i2.0].clone()));
            if c1 > 1 {
                heap.push((c1 - 1, i1));
            }
            if c2 > 1 {
                heap.push((c2 - 1, i2));
            }
        }
        let (residue_val, residue_n) = match heap.pop() {
            Some((c, i)) => (Some(keys[i.0].clone()), c),
            None => (reservoir_val.clone(), 0),
        };
        // The reservoir pairs against every foreign value before foreign
        // values pair among themselves, so at most one kind survives.
        debug_assert!(residue_n == 0 || v_count == 0);
        let residue_total = residue_n + v_count;
        debug_assert_eq!(2 * pairs.len() + residue_total, l_len + p_b);

        // Write the new layout: pairs extend the PQ region, the residue run
        // follows, B' empties.
        let new_l_start = l_start + 2 * pairs.len();
        for (t, (a, b)) in pairs.iter().enumerate() {
            let s = l_start + 2 * t;
            let (hi, lo) = if a >= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
            self.arr.write(s, hi);
            self.arr.write(s + 1, lo);
        }
        if let Some(rv) = &residue_val {
            // The untouched middle of the old reservoir already holds this
            // value; only positions taken from B' (or newly exposed) are
            // written.
            for s in new_l_start.max(t_end + 1)..=n {
                self.arr.write(s, rv.clone());
            }
            debug_assert_eq!(residue_total, n + 1 - new_l_start);
        } else {
            debug_assert_eq!(residue_total, 0);
            debug_assert_eq!(new_l_start, n + 1);
        }

        // Feed the PQ and step the counters once per item.
        for _ in 0..pairs.len() {
            n_pq += 1;
            {
                let mut v = UnitView::new(&mut self.arr);
                lay.p_l.increment(&mut v)?;
            }
            let mut pv = PairView::new(&mut self.arr, lay.base);
            amortized::insert_appended(&mut pv, n_pq)?;
        }
        {
            let mut v = UnitView::new(&mut self.arr);
            lay.p_b.write(&mut v, 0)?;
        }
        Ok(())
    }

    /// One O(n) builder for every layout transition: census the raw content
    /// and erect micro, degenerate or full mode from scratch.
    fn reorganize(&mut self) -> Result<()> {
        let n = self.arr.n();
        if n < MICRO_MAX {
            return Ok(());
        }
        let mut counts: BTreeMap<K, usize> = BTreeMap::new();
        for k in self.arr.elements() {
            *counts.entry(k.clone()).or_insert(0) += 1;
        }
        let (maj_val, maj_count) =
            counts.iter().max_by_key(|(_, c)| **c).map(|(k, c)| (k.clone(), *c)).unwrap();
        let pairs_possible = (n / 2).min(n - maj_count);

        if pairs_possible < tail_cap(n) {
            // Degenerate: majority first, the differing few at the tail.
            let mut left = 1;
            let mut right = n;
            loop {
                while left <= n && self.arr.cmp_key(left, &maj_val) == Ordering::Equal {
                    left += 1;
                }
                while right >= 1 && self.arr.cmp_key(right, &maj_val) != Ordering::Equal {
                    right -= 1;
                }
                if left >= right {
                    break;
                }
                self.arr.swap(left, right);
            }
            return Ok(());
        }

        // Full mode. Values descending, with their multiplicities.
        let mut desc: Vec<(K, usize)> = counts.into_iter().rev().collect();
        let width = field_width(n);
        let need_fields = 2 * width;

        // Pair from the top for the field bits and the initial threshold
        // item, so counter material outranks nearly everything. The first
        // component is the largest remaining value; the partner comes from
        // the most numerous other group, which keeps the matching the
        // census counted achievable.
        let mut top_pairs: Vec<(K, K)> = Vec::new();
        let mut idx = 0;
        while top_pairs.len() < need_fields + 1 {
            while idx < desc.len() && desc[idx].1 == 0 {
                idx += 1;
            }
            if idx >= desc.len() {
                break;
            }
            let mut partner: Option<usize> = None;
            for (j, (_, c)) in desc.iter().enumerate() {
                if j != idx && *c > 0 && partner.is_none_or(|b| *c > desc[b].1) {
                    partner = Some(j);
                }
            }
            let Some(j) = partner else { break };
            desc[idx].1 -= 1;
            desc[j].1 -= 1;
            top_pairs.push((desc[idx].0.clone(), desc[j].0.clone()));
        }
        if top_pairs.len() < need_fields + 1 {
            return Err(PqError::Corruption(
                "census promised pairs the layout could not realize".into(),
            ));
        }

        // Remaining pairs: maximize the count by always drawing from the two
        // largest multiplicity groups.
        let mut heap: std::collections::BinaryHeap<(usize, usize)> =
            std::collections::BinaryHeap::new();
        let keys: Vec<K> = desc.iter().map(|(k, _)| k.clone()).collect();
        for (i, (_, c)) in desc.iter().enumerate() {
            if *c > 0 {
                heap.push((*c, i));
            }
        }
        let mut pq_pairs: Vec<(K, K)> = Vec::new();
        while heap.len() >= 2 {
            let (c1, i1) = heap.pop().unwrap();
            let (c2, i2) = heap.pop().unwrap();
            pq_pairs.push((keys[i1].clone(), keys[i2].clone()));
            if c1 > 1 {
                heap.push((c1 - 1, i1));
            }
            if c2 > 1 {
                heap.push((c2 - 1, i2));
            }
        }
        let (residue_val, residue_count) = match heap.pop() {
            Some((c, i)) => (Some(keys[i].clone()), c),
            None => (None, 0),
        };

        // Lay everything down: threshold, fields, PQ items, reservoir.
        let threshold = top_pairs.pop().unwrap();
        self.arr.write(1, threshold.0);
        self.arr.write(2, threshold.1);
        let mut s = 3;
        for (a, b) in &top_pairs {
            self.arr.write(s, a.clone());
            self.arr.write(s + 1, b.clone());
            s += 2;
        }
        debug_assert_eq!(s, 3 + 4 * width);
        for (a, b) in &pq_pairs {
            let (hi, lo) = if a >= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
            self.arr.write(s, hi);
            self.arr.write(s + 1, lo.clone());
            s += 2;
        }
        if let Some(rv) = &residue_val {
            for _ in 0..residue_count {
                self.arr.write(s, rv.clone());
                s += 1;
            }
        }
        debug_assert_eq!(s, n + 1);

        let n_pq = 1 + pq_pairs.len();
        let lay = Layout::for_n(n);
        {
            let mut v = UnitView::new(&mut self.arr);
            lay.p_l.write(&mut v, n_pq as u64)?;
            lay.p_b.write(&mut v, 0)?;
        }
        let mut pv = PairView::new(&mut self.arr, lay.base);
        amortized::rebuild(&mut pv, n_pq)?;
        Ok(())
    }

    /// Structural validation (test/fuzz use).
    pub fn validate(&mut self) -> Result<()> {
        let n = self.arr.n();
        if n == 0 {
            return Ok(());
        }
        match self.mode() {
            Mode::Micro => Ok(()),
            Mode::Degenerate => {
                let tail = self.full_tail_len();
                if tail > tail_cap(n) {
                    return Err(PqError::Invariant(format!(
                        "degenerate tail {tail} over capacity {}",
                        tail_cap(n)
                    )));
                }
                for s in 3..=n - tail {
                    if self.arr.cmp(s, 1) != Ordering::Equal {
                        return Err(PqError::Invariant(
                            "non-majority element outside the tail".into(),
                        ));
                    }
                }
                Ok(())
            }
            Mode::Full => {
                let lay = Layout::for_n(n);
                let (n_pq, p_b) = self.read_counts(&lay);
                if n_pq == 0 {
                    return Err(PqError::Invariant("full mode with empty PQ".into()));
                }
                let l_start = lay.l_start(n_pq);
                if l_start - 1 > n - p_b {
                    return Err(PqError::Invariant("regions overlap".into()));
                }
                // Field bit pairs must be decodable.
                for t in 0..2 * lay.width {
                    let s = 3 + 2 * t;
                    if self.arr.cmp(s, s + 1) == Ordering::Equal {
                        return Err(PqError::Invariant(format!(
                            "field pair at slot {s} holds equal elements"
                        )));
                    }
                }
                // Reservoir is uniform.
                let t_end = n - p_b;
                for s in l_start..t_end {
                    if self.arr.cmp(s, t_end) != Ordering::Equal {
                        return Err(PqError::Invariant("reservoir not uniform".into()));
                    }
                }
                let mut pv = PairView::new(&mut self.arr, lay.base);
                amortized::validate(&mut pv, n_pq)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FullRegion {
    Pq(usize),
    Threshold,
    Field,
    Reservoir,
    BPrime,
}

impl<K: Ord + Clone> Default for IdenticalPq<K> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    fn drain_all(pq: &mut IdenticalPq<u64>) -> Vec<u64> {
        let mut out = Vec::new();
        while !pq.is_empty() {
            out.push(pq.extract_min().unwrap());
        }
        out
    }

    #[test]
    fn micro_bag_handles_duplicates() {
        let mut pq = IdenticalPq::new();
        for k in [7u64, 7, 7] {
            pq.insert(k).unwrap();
        }
        assert_eq!(pq.extract_min().unwrap(), 7);
        assert_eq!(pq.len(), 2);
        assert_eq!(drain_all(&mut pq), vec![7, 7]);
    }

    #[test]
    fn all_equal_stream_stays_degenerate() {
        let mut pq = IdenticalPq::new();
        for _ in 0..1000 {
            pq.insert(42u64).unwrap();
        }
        pq.validate().unwrap();
        // Mode flag: the first two slots compare equal.
        assert_eq!(pq.mode(), Mode::Degenerate);
        let out = drain_all(&mut pq);
        assert_eq!(out, vec![42; 1000]);
    }

    #[test]
    fn near_equal_stream_keeps_tail_at_end() {
        let mut pq = IdenticalPq::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pushed = Vec::new();
        for i in 0..2000u64 {
            // One in ~150 differs from the majority.
            let k = if rng.gen_range(0..150) == 0 { 100 + i } else { 5 };
            pushed.push(k);
            pq.insert(k).unwrap();
            if i % 237 == 0 {
                pq.validate().unwrap();
            }
        }
        pq.validate().unwrap();
        pushed.sort_unstable();
        assert_eq!(drain_all(&mut pq), pushed);
    }

    #[test]
    fn distinct_rich_stream_promotes_to_full() {
        let mut pq = IdenticalPq::new();
        for i in 0..3000u64 {
            pq.insert(i % 8).unwrap();
        }
        assert_eq!(pq.mode(), Mode::Full);
        pq.validate().unwrap();
        // Threshold pair distinct is exactly the full-mode flag.
        assert_ne!(pq.elements()[0], pq.elements()[1]);
    }

    #[test]
    fn promotion_happens_at_census_threshold() {
        // Majority stream with a slowly growing set of distinct values: the
        // structure must stay degenerate below the pairing threshold and
        // promote once the census clears it.
        let mut pq = IdenticalPq::new();
        for _ in 0..MICRO_MAX + 200 {
            pq.insert(1u64).unwrap();
        }
        assert_eq!(pq.mode(), Mode::Degenerate);
        let n = pq.len();
        let needed = tail_cap(n);
        for i in 0..needed as u64 + 4 {
            pq.insert(1000 + i).unwrap();
        }
        assert_eq!(pq.mode(), Mode::Full);
        pq.validate().unwrap();
    }

    #[test]
    fn full_mode_multiset_preserved() {
        let mut pq = IdenticalPq::new();
        let mut shadow: Vec<u64> = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..4000 {
            let k = rng.gen_range(0..8u64);
            pq.insert(k).unwrap();
            shadow.push(k);
        }
        let mut now: Vec<u64> = pq.elements().to_vec();
        now.sort_unstable();
        shadow.sort_unstable();
        assert_eq!(now, shadow);
        pq.validate().unwrap();
    }

    #[test]
    fn alphabet_fuzz_matches_duplicate_oracle() {
        for seed in 0..4u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pq = IdenticalPq::new();
            let mut oracle: BinaryHeap<Reverse<u64>> = BinaryHeap::new();
            for step in 0..30_000usize {
                let insert = oracle.is_empty() || rng.gen_bool(0.55);
                if insert {
                    let k = rng.gen_range(0..8u64);
                    pq.insert(k).unwrap();
                    oracle.push(Reverse(k));
                } else {
                    let got = pq.extract_min().unwrap();
                    let want = oracle.pop().unwrap().0;
                    assert_eq!(got, want, "seed {seed} step {step}");
                }
                if step % 4096 == 0 {
                    pq.validate().unwrap();
                }
            }
            while let Some(Reverse(want)) = oracle.pop() {
                assert_eq!(pq.extract_min().unwrap(), want);
            }
            assert!(pq.is_empty());
            assert!(pq.counters().audit_ok());
        }
    }

    #[test]
    fn skewed_alphabet_fuzz() {
        // Heavy majority with occasional distinct values exercises the
        // degenerate/full boundary in both directions.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut pq = IdenticalPq::new();
        let mut oracle: BinaryHeap<Reverse<u64>> = BinaryHeap::new();
        for step in 0..20_000usize {
            let insert = oracle.is_empty() || rng.gen_bool(0.52);
            if insert {
                let k = if rng.gen_bool(0.9) { 50 } else { rng.gen_range(0..200u64) };
                pq.insert(k).unwrap();
                oracle.push(Reverse(k));
            } else {
                let got = pq.extract_min().unwrap();
                assert_eq!(got, oracle.pop().unwrap().0, "step {step}");
            }
            if step % 2048 == 0 {
                pq.validate().unwrap();
            }
        }
    }

    #[test]
    fn implicitness_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pq = IdenticalPq::new();
        for _ in 0..3000 {
            pq.insert(rng.gen_range(0..8u64)).unwrap();
        }
        let mut twin = IdenticalPq::from_elements(pq.elements().to_vec());
        for step in 0..2000 {
            if rng.gen_bool(0.5) {
                let k = rng.gen_range(0..8u64);
                pq.insert(k).unwrap();
                twin.insert(k).unwrap();
            } else {
                assert_eq!(
                    pq.extract_min().unwrap(),
                    twin.extract_min().unwrap(),
                    "step {step}"
                );
            }
        }
        assert_eq!(pq.elements(), twin.elements());
    }

    #[test]
    fn extract_only_suffix_is_sorted() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut pq = IdenticalPq::new();
        let mut keys = Vec::new();
        for _ in 0..5000 {
            let k = rng.gen_range(0..6u64);
            keys.push(k);
            pq.insert(k).unwrap();
        }
        let out = drain_all(&mut pq);
        keys.sort_unstable();
        assert_eq!(out, keys);
    }
}

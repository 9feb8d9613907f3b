//! Position views over the element array.
//!
//! The amortized structure is written once against [`Slots`] and instantiated
//! twice: [`UnitView`] maps one logical position to one element slot (the
//! plain distinct-key case), while [`PairView`] maps one position to a
//! two-element pair item whose key is the lesser element (the duplicate-key
//! wrapper). All counted operations route through the underlying
//! [`ImplicitArray`].
//!
//! Bit encoding differs between the views. A unit view spends a pair of
//! *positions* per bit (1 iff the first element is smaller). A pair view
//! encodes a bit in a single item's internal order, since each item is
//! already a pair of distinct elements. `BIT_SPAN` is the per-bit position
//! footprint and is the only layout constant that differs.

use std::cmp::Ordering;

use crate::array::ImplicitArray;

pub trait Slots {
    /// Number of view positions one encoded bit occupies.
    const BIT_SPAN: usize;

    /// Counted comparison of the items at positions `i` and `j`. The result
    /// is a strict total order for `i != j`: pair views break key ties by
    /// position, unit views assume distinct keys.
    fn cmp(&mut self, i: usize, j: usize) -> Ordering;

    /// Key-only comparison; may report `Equal` for duplicate keys. Selection
    /// partitions with this so tie blocks resolve in one pass.
    fn cmp_weak(&mut self, i: usize, j: usize) -> Ordering;

    /// Swap the items at two positions.
    fn swap(&mut self, i: usize, j: usize);

    /// Read the bit anchored at position `p`.
    fn read_bit(&mut self, p: usize) -> bool;

    /// Write the bit anchored at position `p` (at most one swap).
    fn write_bit(&mut self, p: usize, b: bool);

    /// Whether the item at `i` ranks above the threshold item at position 1.
    fn is_dummy(&mut self, i: usize) -> bool;

    /// Maintain the dummy/payload marking of the item at `i`. No-op for unit
    /// views, where the key comparison against the threshold is decisive.
    fn mark_dummy(&mut self, i: usize, dummy: bool);

    /// Cost counters of the backing store.
    fn counters_mut(&mut self) -> &mut crate::array::CostCounters;
}

/// One position per element; distinct keys assumed.
pub struct UnitView<'a, K: Ord + Clone> {
    pub arr: &'a mut ImplicitArray<K>,
}

impl<'a, K: Ord + Clone> UnitView<'a, K> {
    pub fn new(arr: &'a mut ImplicitArray<K>) -> Self {
        UnitView { arr }
    }
}

impl<K: Ord + Clone> Slots for UnitView<'_, K> {
    const BIT_SPAN: usize = 2;

    fn cmp(&mut self, i: usize, j: usize) -> Ordering {
        self.arr.cmp(i, j)
    }

    fn cmp_weak(&mut self, i: usize, j: usize) -> Ordering {
        self.arr.cmp(i, j)
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.arr.swap(i, j);
    }

    fn read_bit(&mut self, p: usize) -> bool {
        self.arr.cmp(p, p + 1) == Ordering::Less
    }

    fn write_bit(&mut self, p: usize, b: bool) {
        if self.read_bit(p) != b {
            self.arr.swap(p, p + 1);
        }
    }

    fn is_dummy(&mut self, i: usize) -> bool {
        i != 1 && self.arr.cmp(i, 1) == Ordering::Greater
    }

    fn mark_dummy(&mut self, _i: usize, _dummy: bool) {}

    fn counters_mut(&mut self) -> &mut crate::array::CostCounters {
        self.arr.counters_mut()
    }
}

/// One position per two-element pair item; duplicate keys allowed.
///
/// Position 1 is pinned to slots 1-2 (the wrapper's threshold item); position
/// `p >= 2` maps to the two slots starting at `base + 2(p-2) + 1`. The item
/// key is the lesser element; equal keys order by position. An item's
/// internal order doubles as one bit: ascending encodes 1, which by
/// convention also marks the item as dummy where that distinction matters.
pub struct PairView<'a, K: Ord + Clone> {
    pub arr: &'a mut ImplicitArray<K>,
    base: usize,
}

impl<'a, K: Ord + Clone> PairView<'a, K> {
    pub fn new(arr: &'a mut ImplicitArray<K>, base: usize) -> Self {
        PairView { arr, base }
    }

    /// First slot of the item at view position `p`.
    pub fn first_slot(&self, p: usize) -> usize {
        if p == 1 {
            1
        } else {
            self.base + 2 * (p - 2) + 1
        }
    }

    /// Slot holding the item's key (its lesser element); one comparison.
    pub fn key_slot(&mut self, p: usize) -> usize {
        let s = self.first_slot(p);
        if self.arr.cmp(s, s + 1) == Ordering::Greater {
            s + 1
        } else {
            s
        }
    }
}

impl<K: Ord + Clone> Slots for PairView<'_, K> {
    const BIT_SPAN: usize = 1;

    fn cmp(&mut self, i: usize, j: usize) -> Ordering {
        let ki = self.key_slot(i);
        let kj = self.key_slot(j);
        match self.arr.cmp(ki, kj) {
            Ordering::Equal => i.cmp(&j),
            ord => ord,
        }
    }

    fn cmp_weak(&mut self, i: usize, j: usize) -> Ordering {
        let ki = self.key_slot(i);
        let kj = self.key_slot(j);
        self.arr.cmp(ki, kj)
    }

    fn swap(&mut self, i: usize, j: usize) {
        let si = self.first_slot(i);
        let sj = self.first_slot(j);
        self.arr.swap(si, sj);
        self.arr.swap(si + 1, sj + 1);
    }

    fn read_bit(&mut self, p: usize) -> bool {
        let s = self.first_slot(p);
        self.arr.cmp(s, s + 1) == Ordering::Less
    }

    fn write_bit(&mut self, p: usize, b: bool) {
        let s = self.first_slot(p);
        match self.arr.cmp(s, s + 1) {
            Ordering::Equal => panic!("undecodable pair: equal elements in bit item"),
            Ordering::Less if !b => self.arr.swap(s, s + 1),
            Ordering::Greater if b => self.arr.swap(s, s + 1),
            _ => {}
        }
    }

    fn is_dummy(&mut self, i: usize) -> bool {
        if i == 1 {
            return false;
        }
        let ki = self.key_slot(i);
        let kt = self.key_slot(1);
        match self.arr.cmp(ki, kt) {
            Ordering::Greater => true,
            Ordering::Less => false,
            // Keys tie with the threshold: the item's own bit disambiguates
            // (1 = dummy/empty, 0 = payload/occupied).
            Ordering::Equal => self.read_bit(i),
        }
    }

    fn mark_dummy(&mut self, i: usize, dummy: bool) {
        self.write_bit(i, dummy);
    }

    fn counters_mut(&mut self) -> &mut crate::array::CostCounters {
        self.arr.counters_mut()
    }
}

//! Generic d-ary heap primitives over a sub-range of a view.
//!
//! A region is a complete d-ary min-heap stored level by level: node `p`
//! (1-based within the region) sits at view position `offset + p - 1`, its
//! children are nodes `d(p-1)+2 ..= d(p-1)+d+1`. All operations work by
//! swapping positions, so callers that stage an element at the region tail
//! (or want the minimum delivered there) compose these without ever holding
//! elements outside the array.

use std::cmp::Ordering;

use crate::slots::Slots;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DHeapRegion {
    pub offset: usize,
    pub size: usize,
    pub arity: usize,
}

impl DHeapRegion {
    pub fn new(offset: usize, size: usize, arity: usize) -> Self {
        debug_assert!(arity >= 2);
        DHeapRegion { offset, size, arity }
    }

    #[inline]
    fn pos(&self, node: usize) -> usize {
        self.offset + node - 1
    }

    #[inline]
    fn parent(node: usize, d: usize) -> usize {
        (node - 2) / d + 1
    }

    #[inline]
    fn first_child(node: usize, d: usize) -> usize {
        d * (node - 1) + 2
    }

    pub fn last_pos(&self) -> usize {
        self.offset + self.size - 1
    }
}

/// Restore heap order upward from `node` (after placing a new element there).
pub fn sift_up<S: Slots>(v: &mut S, r: DHeapRegion, mut node: usize) {
    let d = r.arity;
    while node > 1 {
        let parent = DHeapRegion::parent(node, d);
        if v.cmp(r.pos(node), r.pos(parent)) == Ordering::Less {
            v.swap(r.pos(node), r.pos(parent));
            node = parent;
        } else {
            break;
        }
    }
}

/// Restore heap order downward from `node`.
pub fn sift_down<S: Slots>(v: &mut S, r: DHeapRegion, mut node: usize) {
    let d = r.arity;
    loop {
        let first = DHeapRegion::first_child(node, d);
        if first > r.size {
            return;
        }
        let last = (first + d - 1).min(r.size);
        // Minimum child with children-1 comparisons.
        let mut min = first;
        for c in first + 1..=last {
            if v.cmp(r.pos(c), r.pos(min)) == Ordering::Less {
                min = c;
            }
        }
        if v.cmp(r.pos(min), r.pos(node)) == Ordering::Less {
            v.swap(r.pos(min), r.pos(node));
            node = min;
        } else {
            return;
        }
    }
}

/// Bottom-up heap construction; O(size) comparisons for fixed arity.
pub fn build<S: Slots>(v: &mut S, r: DHeapRegion) {
    if r.size < 2 {
        return;
    }
    let last_parent = DHeapRegion::parent(r.size, r.arity);
    for node in (1..=last_parent).rev() {
        sift_down(v, r, node);
    }
}

/// The new element was already placed at the region's last position; sift it
/// into place. At most `log_d(size)` swaps.
pub fn insert_placed<S: Slots>(v: &mut S, r: DHeapRegion) {
    sift_up(v, r, r.size);
}

/// Swap the minimum to the region's last position and restore heap order on
/// the remaining `size - 1` nodes. The caller consumes or retires the tail.
pub fn extract_min_to_last<S: Slots>(v: &mut S, r: DHeapRegion) {
    debug_assert!(r.size >= 1);
    if r.size == 1 {
        return;
    }
    v.swap(r.pos(1), r.pos(r.size));
    let shrunk = DHeapRegion::new(r.offset, r.size - 1, r.arity);
    sift_down(v, shrunk, 1);
}

/// Heap-order check (counted comparisons; test/validation use).
pub fn is_heap<S: Slots>(v: &mut S, r: DHeapRegion) -> bool {
    for node in 2..=r.size {
        let parent = DHeapRegion::parent(node, r.arity);
        if v.cmp(r.pos(node), r.pos(parent)) == Ordering::Less {
            return false;
        }
    }
    true
}

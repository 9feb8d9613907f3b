//! Deterministic linear-time selection (median of medians, groups of five).
//!
//! Works in place on a position range of a view: after the call the rank-`k`
//! item (1-based within the range) sits at position `offset + k - 1`, with
//! key-smaller items before it and key-larger items after. The range ends up
//! a permutation of its input; every rearrangement is a counted swap.
//! Partitioning is three-way on keys, so large tie blocks cost one pass.

use std::cmp::Ordering;

use crate::slots::Slots;

/// Place the k-th smallest (1-based) of `offset..offset+len-1` at
/// `offset + k - 1`.
pub fn select_rank<S: Slots>(v: &mut S, offset: usize, len: usize, k: usize) {
    assert!(k >= 1 && k <= len, "rank {k} out of range 1..={len}");
    select(v, offset, offset + len - 1, offset + k - 1);
}

fn insertion_sort<S: Slots>(v: &mut S, lo: usize, hi: usize) {
    for i in lo + 1..=hi {
        let mut j = i;
        while j > lo && v.cmp(j, j - 1) == Ordering::Less {
            v.swap(j, j - 1);
            j -= 1;
        }
    }
}

/// Position holding the median of five; six comparisons, no element moves.
fn median_of_five<S: Slots>(v: &mut S, mut p: [usize; 5]) -> usize {
    if v.cmp(p[0], p[1]) == Ordering::Greater {
        p.swap(0, 1);
    }
    if v.cmp(p[2], p[3]) == Ordering::Greater {
        p.swap(2, 3);
    }
    if v.cmp(p[0], p[2]) == Ordering::Greater {
        p.swap(0, 2);
        p.swap(1, 3);
    }
    // p[0] now ranks below p[1], p[2], p[3]: it cannot be the median, which
    // leaves the second smallest of the remaining four.
    if v.cmp(p[1], p[4]) == Ordering::Greater {
        p.swap(1, 4);
    }
    if v.cmp(p[1], p[2]) == Ordering::Greater {
        if v.cmp(p[1], p[3]) == Ordering::Greater {
            p[3]
        } else {
            p[1]
        }
    } else if v.cmp(p[2], p[4]) == Ordering::Greater {
        p[4]
    } else {
        p[2]
    }
}

/// Three-way partition of `[lo, hi]` around the item at `pivot`.
/// Returns the tie block `[lt, gt]`.
///
/// The pivot parks at `hi` during the scan, so with distinct keys the tie
/// block stays empty and elements below the pivot never move; only elements
/// above it pay a swap. All-equal ranges resolve with zero moves.
fn partition3<S: Slots>(v: &mut S, lo: usize, hi: usize, pivot: usize) -> (usize, usize) {
    if pivot != hi {
        v.swap(pivot, hi);
    }
    let mut lt = lo; // first tie position
    let mut i = lo; // first unscanned
    let mut gt = hi; // one past the last unscanned
    while i < gt {
        match v.cmp_weak(i, hi) {
            Ordering::Less => {
                if i != lt {
                    v.swap(i, lt);
                }
                lt += 1;
                i += 1;
            }
            Ordering::Greater => {
                if i != gt - 1 {
                    v.swap(i, gt - 1);
                }
                gt -= 1;
            }
            Ordering::Equal => i += 1,
        }
    }
    // Fold the parked pivot into the tie block: [lt..gt] after the swap.
    if hi != gt {
        v.swap(hi, gt);
    }
    (lt, gt)
}

fn select<S: Slots>(v: &mut S, mut lo: usize, mut hi: usize, k: usize) {
    loop {
        debug_assert!(lo <= k && k <= hi);
        if hi - lo < 10 {
            insertion_sort(v, lo, hi);
            return;
        }
        // Gather the group medians at the front of the range; medians are
        // located by comparisons alone, one swap per group.
        let mut m = lo;
        let mut g = lo;
        while g + 4 <= hi {
            let med = median_of_five(v, [g, g + 1, g + 2, g + 3, g + 4]);
            if med != m {
                v.swap(med, m);
            }
            m += 1;
            g += 5;
        }
        if g <= hi {
            insertion_sort(v, g, hi);
            let mid = (g + hi) / 2;
            if mid != m {
                v.swap(mid, m);
            }
            m += 1;
        }
        let pivot = lo + (m - lo - 1) / 2;
        select(v, lo, m - 1, pivot);
        let (lt, gt) = partition3(v, lo, hi, pivot);
        if k < lt {
            hi = lt - 1;
        } else if k > gt {
            lo = gt + 1;
        } else {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::ImplicitArray;
    use crate::slots::UnitView;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rank_one_is_minimum() {
        let mut arr = ImplicitArray::from_elements(vec![5u64, 2, 9]);
        let mut v = UnitView::new(&mut arr);
        select_rank(&mut v, 1, 3, 1);
        assert_eq!(*arr.key(1), 2);
    }

    #[test]
    fn rank_len_is_maximum() {
        let mut arr = ImplicitArray::from_elements(vec![5u64, 2, 9, 1, 7]);
        let mut v = UnitView::new(&mut arr);
        select_rank(&mut v, 1, 5, 5);
        assert_eq!(*arr.key(5), 9);
    }

    #[test]
    fn matches_sort_oracle_and_permutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..50 {
            let len = rng.gen_range(1..400);
            let mut keys: Vec<u64> = (0..len as u64).map(|i| i * 3 + 1).collect();
            keys.shuffle(&mut rng);
            let k = rng.gen_range(1..=len);

            let mut sorted = keys.clone();
            sorted.sort_unstable();

            let mut arr = ImplicitArray::from_elements(keys.clone());
            let mut v = UnitView::new(&mut arr);
            select_rank(&mut v, 1, len, k);
            assert_eq!(*arr.key(k), sorted[k - 1], "trial {trial}");

            let mut after = arr.elements().to_vec();
            after.sort_unstable();
            assert_eq!(after, sorted);
            // Everything left of k is smaller, right is larger.
            for s in 1..k {
                assert!(arr.key(s) < arr.key(k));
            }
            for s in k + 1..=len {
                assert!(arr.key(s) > arr.key(k));
            }
        }
    }

    #[test]
    fn heavy_duplicates_cost_linear_comparisons() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20_000usize;
        let keys: Vec<u64> = (0..n).map(|_| rng.gen_range(0..8)).collect();
        let mut arr = ImplicitArray::from_elements(keys);
        let mut v = UnitView::new(&mut arr);
        select_rank(&mut v, 1, n, n / 2);
        assert!(arr.counters().comparisons < 40 * n as u64);
    }

    #[test]
    fn sub_range_selection_leaves_outside_untouched() {
        let mut arr = ImplicitArray::from_elements(vec![100u64, 4, 3, 2, 1, 200]);
        let mut v = UnitView::new(&mut arr);
        select_rank(&mut v, 2, 4, 2);
        assert_eq!(*arr.key(1), 100);
        assert_eq!(*arr.key(6), 200);
        assert_eq!(*arr.key(3), 2);
    }
}

//! The classic array binary heap, implemented independently of the generic
//! d-ary machinery so it can serve as the fuzz oracle and as the counter
//! baseline (`--impl binary`). Duplicate keys are fine.

use crate::array::CostCounters;
use crate::error::{PqError, Result};

pub struct WilliamsHeap<K: Ord + Clone> {
    data: Vec<K>,
    counters: CostCounters,
}

impl<K: Ord + Clone> WilliamsHeap<K> {
    pub fn new() -> Self {
        Self::from_elements(Vec::new())
    }

    /// Heapify arbitrary contents (counts comparisons and moves).
    pub fn from_elements(elements: Vec<K>) -> Self {
        let mut h = WilliamsHeap { data: elements, counters: CostCounters::default() };
        if h.data.len() > 1 {
            for i in (0..h.data.len() / 2).rev() {
                h.sift_down(i);
            }
        }
        h
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn elements(&self) -> &[K] {
        &self.data
    }

    pub fn counters(&self) -> &CostCounters {
        &self.counters
    }

    pub fn counters_mut(&mut self) -> &mut CostCounters {
        &mut self.counters
    }

    fn less(&mut self, a: usize, b: usize) -> bool {
        self.counters.comparisons += 1;
        self.data[a] < self.data[b]
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.counters.moves += 2;
        self.data.swap(a, b);
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let p = (i - 1) / 2;
            if self.less(i, p) {
                self.swap(i, p);
                i = p;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        loop {
            let l = 2 * i + 1;
            if l >= self.data.len() {
                break;
            }
            let mut c = l;
            if l + 1 < self.data.len() && self.less(l + 1, l) {
                c = l + 1;
            }
            if self.less(c, i) {
                self.swap(c, i);
                i = c;
            } else {
                break;
            }
        }
    }

    pub fn insert(&mut self, key: K) -> Result<()> {
        self.counters.begin_op();
        self.counters.moves += 1;
        self.data.push(key);
        self.sift_up(self.data.len() - 1);
        self.counters.end_op();
        Ok(())
    }

    pub fn find_min(&mut self) -> Option<K> {
        self.data.first().cloned()
    }

    pub fn extract_min(&mut self) -> Result<K> {
        if self.data.is_empty() {
            return Err(PqError::Underflow);
        }
        self.counters.begin_op();
        let last = self.data.len() - 1;
        self.data.swap(0, last);
        let out = self.data.pop().expect("nonempty");
        if last > 0 {
            // The swap wrote one surviving slot.
            self.counters.moves += 1;
            self.sift_down(0);
        }
        self.counters.end_op();
        Ok(out)
    }

    pub fn validate(&mut self) -> Result<()> {
        for i in 1..self.data.len() {
            let p = (i - 1) / 2;
            if self.data[i] < self.data[p] {
                return Err(PqError::Invariant(format!("heap order broken at {i}")));
            }
        }
        Ok(())
    }
}

impl<K: Ord + Clone> Default for WilliamsHeap<K> {
    fn default() -> Self {
        Self::new()
    }
}

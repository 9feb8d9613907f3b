//! Worst-case O(1)-insert priority queue: a forest of relaxed binomial trees.
//!
//! Every logical node owns three consecutive element slots; the permutation
//! of the three distinct elements encodes one of three states (two
//! permutations each):
//!
//! * first element smallest  -> `Root`
//! * first element middle    -> `MinOwn` (minimum of its own subtree)
//! * first element largest   -> `MinAmongSmaller` (minimum among the strictly
//!   smaller sibling subtrees)
//!
//! A node's key is the minimum of its triple, so rewriting the state is at
//! most one internal swap and never changes the key. A tree of `2^i` nodes is
//! laid out by preorder with children in increasing subtree size, which makes
//! child `l` of the node at position `p` sit at `p + 2^l`. The forest keeps
//! trees sorted by non-increasing size with at most five trees per size, a
//! buffer of `n mod 3` raw elements at the array tail, and is rediscovered
//! from scratch by position probing — nothing but `(elements, n)` persists.

use std::cmp::Ordering;

use crate::array::ImplicitArray;
use crate::codec::msb;
use crate::error::{PqError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeState {
    Root,
    MinOwn,
    MinAmongSmaller,
}

/// One discovered tree: root node position and node count (a power of two).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tree {
    pub root: usize,
    pub size: usize,
}

pub struct WorstCasePq<K: Ord + Clone> {
    arr: ImplicitArray<K>,
    #[cfg(debug_assertions)]
    seen: std::collections::BTreeSet<K>,
}

impl<K: Ord + Clone> WorstCasePq<K> {
    pub fn new() -> Self {
        Self::from_elements(Vec::new())
    }

    /// Reconstruct from raw state (strict-implicitness round trip).
    pub fn from_elements(elements: Vec<K>) -> Self {
        #[cfg(debug_assertions)]
        let seen = elements.iter().cloned().collect();
        WorstCasePq {
            arr: ImplicitArray::from_elements(elements),
            #[cfg(debug_assertions)]
            seen,
        }
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

    #[inline]
    fn node_count(&self) -> usize {
        self.arr.n() / 3
    }

    /// First slot of node `k`.
    #[inline]
    fn slot(k: usize) -> usize {
        3 * k - 2
    }

    /// Decode the state of node `k`; two comparisons, no moves.
    pub fn state(&mut self, k: usize) -> NodeState {
        let s = Self::slot(k);
        let a = self.arr.cmp(s, s + 1);
        let b = self.arr.cmp(s, s + 2);
        match (a, b) {
            (Ordering::Less, Ordering::Less) => NodeState::Root,
            (Ordering::Greater, Ordering::Greater) => NodeState::MinAmongSmaller,
            _ => NodeState::MinOwn,
        }
    }

    /// Re-encode node `k`; at most one internal swap, key unchanged.
    pub fn set_state(&mut self, k: usize, target: NodeState) {
        let s = Self::slot(k);
        // Rank the three slots; distinct elements are a module precondition.
        let mut order = [s, s + 1, s + 2];
        if self.arr.cmp(order[0], order[1]) == Ordering::Greater {
            order.swap(0, 1);
        }
        if self.arr.cmp(order[1], order[2]) == Ordering::Greater {
            order.swap(1, 2);
            if self.arr.cmp(order[0], order[1]) == Ordering::Greater {
                order.swap(0, 1);
            }
        }
        let want_first = match target {
            NodeState::Root => order[0],
            NodeState::MinOwn => order[1],
            NodeState::MinAmongSmaller => order[2],
        };
        if want_first != s {
            self.arr.swap(s, want_first);
        }
    }

    /// Slot of node `k`'s key (its minimum element).
    fn key_slot(&mut self, k: usize) -> usize {
        let s = Self::slot(k);
        let mut m = s;
        if self.arr.cmp(s + 1, m) == Ordering::Less {
            m = s + 1;
        }
        if self.arr.cmp(s + 2, m) == Ordering::Less {
            m = s + 2;
        }
        m
    }

    fn swap_nodes(&mut self, a: usize, b: usize) {
        let sa = Self::slot(a);
        let sb = Self::slot(b);
        for d in 0..3 {
            self.arr.swap(sa + d, sb + d);
        }
    }

    /// Root probe with the boundary convention: positions past the last node
    /// count as roots so the rightmost tree is detectable.
    fn is_root(&mut self, k: usize) -> bool {
        k > self.node_count() || self.state(k) == NodeState::Root
    }

    /// Whether a tree of `size` nodes occupies positions `k .. k+size-1`.
    fn tree_at(&mut self, k: usize, size: usize) -> bool {
        if k < 1 || k + size - 1 > self.node_count() {
            return false;
        }
        if self.state(k) != NodeState::Root {
            return false;
        }
        if size > 1 && self.is_root(k + size / 2) {
            return false;
        }
        self.is_root(k + size)
    }

    /// Candidate root positions for trees of `size` nodes, ascending.
    fn candidates(&self, size: usize) -> Vec<usize> {
        let n_nodes = self.node_count() as i64;
        let x = n_nodes % size as i64;
        let mut out = Vec::with_capacity(5);
        for k in (1..=5i64).rev() {
            let pos = n_nodes - size as i64 * k - x + 1;
            if pos >= 1 && pos + size as i64 - 1 <= n_nodes {
                out.push(pos as usize);
            }
        }
        out
    }

    /// Discover the whole forest by position probing; zero moves.
    pub fn locate_trees(&mut self) -> Vec<Tree> {
        let n_nodes = self.node_count();
        let mut trees = Vec::new();
        if n_nodes == 0 {
            return trees;
        }
        for i in (0..=msb(n_nodes)).rev() {
            let size = 1usize << i;
            for pos in self.candidates(size) {
                if self.tree_at(pos, size) {
                    trees.push(Tree { root: pos, size });
                }
            }
        }
        trees.sort_by_key(|t| t.root);
        trees
    }

    /// Link two adjacent equal-size trees into one; O(1) comparisons/moves.
    pub fn link(&mut self, left: usize, right: usize, size: usize) {
        debug_assert_eq!(left + size, right);
        let kl = self.key_slot(left);
        let kr = self.key_slot(right);
        if self.arr.cmp(kr, kl) == Ordering::Less {
            // Lesser key is to the right: swap the two root nodes. The old
            // left root is now minimal among the strictly smaller sibling
            // subtrees (they are exactly its old descendants).
            self.swap_nodes(left, right);
            self.set_state(right, NodeState::MinAmongSmaller);
        } else {
            self.set_state(right, NodeState::MinOwn);
        }
    }

    /// Split a tree of `size >= 2` into trees of sizes size/2, ..., 2, 1, 1
    /// laid out in decreasing order; O(log size).
    pub fn decompose(&mut self, root: usize, size: usize) {
        let mut r = root;
        let mut sz = size;
        while sz > 1 {
            self.split_step(r, sz);
            r += sz / 2;
            sz /= 2;
        }
    }

    /// One decompose step: sever the last child, leaving two valid trees of
    /// half the size. Returns true iff the minimum moved to the right half.
    fn split_step(&mut self, r: usize, sz: usize) -> bool {
        let c = r + sz / 2;
        match self.state(c) {
            NodeState::MinAmongSmaller => {
                self.swap_nodes(r, c);
                self.set_state(r, NodeState::Root);
                // c now holds the old root triple, already Root-encoded.
                true
            }
            NodeState::MinOwn => {
                self.set_state(c, NodeState::Root);
                false
            }
            NodeState::Root => unreachable!("child encodes root"),
        }
    }

    /// Extract the tree minimum and insert `replacement` in its place.
    /// Recursion path is transient (discarded before return); O(log size).
    pub fn replace_min(&mut self, root: usize, size: usize, replacement: K) -> K {
        let mut r = root;
        let mut sz = size;
        let mut path: Vec<(usize, usize)> = Vec::new();
        while sz > 1 {
            let went_right = self.split_step(r, sz);
            path.push((r, sz));
            if went_right {
                r += sz / 2;
            }
            sz /= 2;
        }
        // r is a singleton whose first slot holds the minimum.
        let s = Self::slot(r);
        let old = self.arr.key(s).clone();
        self.arr.write(s, replacement);
        // Restore the Root class: minimum first.
        let m = self.key_slot(r);
        if m != s {
            self.arr.swap(s, m);
        }
        for (lr, lsz) in path.into_iter().rev() {
            self.link(lr, lr + lsz / 2, lsz / 2);
        }
        old
    }

    pub fn insert(&mut self, key: K) -> Result<()> {
        #[cfg(debug_assertions)]
        {
            if !self.seen.insert(key.clone()) {
                return Err(PqError::DuplicateKey);
            }
        }
        self.arr.counters_mut().begin_op();
        self.arr.append(key);
        let n = self.arr.n();
        if n % 3 == 0 {
            let node = n / 3;
            self.set_state(node, NodeState::Root);
            // One link per insert keeps at most five trees per size.
            let size = 1usize << node.trailing_zeros();
            let roots: Vec<usize> = self
                .candidates(size)
                .into_iter()
                .filter(|&p| self.tree_at(p, size))
                .collect();
            if roots.len() >= 2 {
                debug_assert_eq!(roots[0] + size, roots[1]);
                self.link(roots[0], roots[1], size);
            }
        }
        self.arr.counters_mut().end_op();
        Ok(())
    }

    /// Key of the global minimum; comparisons only, zero moves.
    pub fn find_min(&mut self) -> Option<K> {
        if self.arr.is_empty() {
            return None;
        }
        let slot = self.min_slot();
        Some(self.arr.key(slot).clone())
    }

    pub fn extract_min(&mut self) -> Result<K> {
        if self.arr.is_empty() {
            return Err(PqError::Underflow);
        }
        self.arr.counters_mut().begin_op();
        let out = self.extract_inner();
        self.arr.counters_mut().end_op();
        #[cfg(debug_assertions)]
        {
            self.seen.remove(&out);
        }
        Ok(out)
    }

    /// Slot of the global minimum (tree root keys plus the buffer).
    fn min_slot(&mut self) -> usize {
        let n_nodes = self.node_count();
        let mut best = if n_nodes > 0 {
            let trees = self.locate_trees();
            let mut best = self.key_slot(trees[0].root);
            for t in &trees[1..] {
                let ks = self.key_slot(t.root);
                if self.arr.cmp(ks, best) == Ordering::Less {
                    best = ks;
                }
            }
            best
        } else {
            3 * n_nodes + 1
        };
        for s in 3 * n_nodes + 1..=self.arr.n() {
            if s != best && self.arr.cmp(s, best) == Ordering::Less {
                best = s;
            }
        }
        best
    }

    fn extract_inner(&mut self) -> K {
        let n = self.arr.n();
        if n <= 2 {
            let mut s = 1;
            if n == 2 && self.arr.cmp(2, 1) == Ordering::Less {
                s = 2;
            }
            if s != n {
                self.arr.swap(s, n);
            }
            return self.arr.pop_last();
        }

        if n % 3 == 0 {
            // No buffer: make the rightmost tree a singleton first.
            let t = self.rightmost_tree();
            if t.size > 1 {
                self.decompose(t.root, t.size);
            }
        }
        let n_nodes = self.node_count();
        let trees = self.locate_trees();

        // Global minimum among tree root keys and buffer elements.
        let mut best_slot = self.key_slot(trees[0].root);
        let mut best_tree = Some(trees[0]);
        for t in &trees[1..] {
            let ks = self.key_slot(t.root);
            if self.arr.cmp(ks, best_slot) == Ordering::Less {
                best_slot = ks;
                best_tree = Some(*t);
            }
        }
        for s in 3 * n_nodes + 1..=self.arr.n() {
            if self.arr.cmp(s, best_slot) == Ordering::Less {
                best_slot = s;
                best_tree = None;
            }
        }

        match best_tree {
            None => {
                // Minimum sits in the buffer.
                let last = self.arr.n();
                if best_slot != last {
                    self.arr.swap(best_slot, last);
                }
                self.arr.pop_last()
            }
            Some(t) => {
                if t.root == n_nodes && t.size == 1 && self.arr.n() % 3 == 0 {
                    // Minimum is the rightmost singleton: dissolve it, its
                    // two remaining elements become the buffer.
                    let s = Self::slot(t.root);
                    if best_slot != s + 2 {
                        self.arr.swap(best_slot, s + 2);
                    }
                    self.arr.pop_last()
                } else {
                    let replacement = self.arr.pop_last();
                    self.replace_min(t.root, t.size, replacement)
                }
            }
        }
    }

    fn rightmost_tree(&mut self) -> Tree {
        let n_nodes = self.node_count();
        for i in 0..=msb(n_nodes) {
            let size = 1usize << i;
            if n_nodes + 1 >= size {
                let root = n_nodes + 1 - size;
                if root >= 1 && self.tree_at(root, size) {
                    return Tree { root, size };
                }
            }
        }
        unreachable!("forest has no rightmost tree")
    }

    /// Cheap forest shape check: tiling, non-increasing sizes, at most five
    /// trees per size, and the pending-link slack bound per size class.
    /// O(log^2 n) comparisons, zero moves.
    pub fn forest_check(&mut self) -> Result<()> {
        let n_nodes = self.node_count();
        if n_nodes == 0 {
            return Ok(());
        }
        let trees = self.locate_trees();

        let mut next = 1usize;
        let mut prev_size = usize::MAX;
        let mut per_size = std::collections::HashMap::new();
        for t in &trees {
            if t.root != next {
                return Err(PqError::Invariant(format!(
                    "forest gap: expected root at {next}, found {}",
                    t.root
                )));
            }
            if t.size > prev_size {
                return Err(PqError::Invariant("tree sizes increase left to right".into()));
            }
            prev_size = t.size;
            next += t.size;
            *per_size.entry(t.size).or_insert(0usize) += 1;
        }
        if next != n_nodes + 1 {
            return Err(PqError::Invariant(format!(
                "forest covers {} of {} nodes",
                next - 1,
                n_nodes
            )));
        }
        for (size, count) in &per_size {
            if *count > 5 {
                return Err(PqError::Invariant(format!("{count} trees of size {size}")));
            }
        }

        for i in 0..=msb(n_nodes) {
            let below: usize = trees.iter().filter(|t| t.size <= 1 << i).map(|t| t.size).sum();
            let step = 1usize << (i + 1);
            let slack = step - ((n_nodes + (1 << i)) % step);
            if below + slack > 6 * (1 << i) - 1 {
                return Err(PqError::Invariant(format!(
                    "size-class {i}: {below} nodes + {slack} slack exceeds {}",
                    6 * (1 << i) - 1
                )));
            }
        }
        Ok(())
    }

    /// Full structural validation (test/fuzz use; counted comparisons).
    pub fn validate(&mut self) -> Result<()> {
        if self.node_count() == 0 {
            return Ok(());
        }
        self.forest_check()?;
        let trees = self.locate_trees();
        for t in &trees {
            self.check_tree(t.root, t.size, true)?;
        }
        Ok(())
    }

    /// Recursively verify ordering flags; returns the subtree's minimum key
    /// slot. `top` marks a forest root (the only place Root may appear).
    fn check_tree(&mut self, r: usize, size: usize, top: bool) -> Result<usize> {
        let st = self.state(r);
        if top && st != NodeState::Root {
            return Err(PqError::Invariant(format!("tree root at {r} not Root-encoded")));
        }
        if !top && st == NodeState::Root {
            return Err(PqError::Invariant(format!("interior node at {r} Root-encoded")));
        }
        let my_key = self.key_slot(r);
        let mut min_slot = my_key;
        let mut levels = 0;
        let mut sz = size;
        while sz > 1 {
            sz /= 2;
            levels += 1;
        }
        // Children in increasing size: c_l at r + 2^l with 2^l nodes.
        let mut earlier_min: Option<usize> = None;
        for l in 0..levels {
            let c = r + (1 << l);
            let c_min = self.check_tree(c, 1 << l, false)?;
            let c_key = self.key_slot(c);
            let ok = match self.state(c) {
                NodeState::MinOwn => c_key == c_min,
                NodeState::MinAmongSmaller => match earlier_min {
                    None => true, // vacuous: no strictly smaller subtrees
                    Some(em) => self.arr.cmp(c_key, em) == Ordering::Less,
                },
                NodeState::Root => unreachable!(),
            };
            if !ok {
                return Err(PqError::Invariant(format!(
                    "child flag at node {c} not satisfied"
                )));
            }
            if self.arr.cmp(c_min, min_slot) == Ordering::Less {
                min_slot = c_min;
            }
            earlier_min = Some(match earlier_min {
                None => c_min,
                Some(em) => {
                    if self.arr.cmp(c_min, em) == Ordering::Less {
                        c_min
                    } else {
                        em
                    }
                }
            });
        }
        // Only a forest root is required to hold its subtree minimum; an
        // interior node may be minimal among earlier siblings instead.
        if top && min_slot != my_key {
            return Err(PqError::Invariant(format!(
                "tree root {r} does not hold its tree minimum"
            )));
        }
        Ok(min_slot)
    }
}

impl<K: Ord + Clone> Default for WorstCasePq<K> {
    fn default() -> Self {
        Self::new()
    }
}

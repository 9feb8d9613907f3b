//! Strictly implicit priority queues over an instrumented element array.
//!
//! Every structure in this crate keeps its complete between-operation state in
//! the element array plus the element count `n` — nothing else survives an
//! operation. The array counts element moves (one per slot write, two per
//! swap) and three-way comparisons, so the advertised move/comparison bounds
//! can be checked empirically.
//!
//! Three queue implementations are provided:
//!
//! * [`AmortizedPq`] — amortized O(1) insert and O(log n) extract-min, with
//!   amortized O(1) element moves per operation (distinct keys).
//! * [`WorstCasePq`] — worst-case O(1) insert and O(log n) extract-min over a
//!   forest of relaxed binomial trees (distinct keys).
//! * [`IdenticalPq`] — a wrapper over the amortized structure that stores
//!   pair items so duplicate keys are supported.
//!
//! [`WilliamsHeap`] is an independently implemented classic binary heap used
//! as the test oracle and as a counter baseline. The `pq` binary drives trace
//! replay, oracle fuzzing, counter benchmarks and an in-place sort demo.

pub mod amortized;
pub mod array;
pub mod codec;
pub mod dheap;
pub mod error;
pub mod harness;
pub mod identical;
pub mod oracle;
pub mod report;
pub mod select;
pub mod slots;
pub mod trace;
pub mod wc;

pub use amortized::AmortizedPq;
pub use array::{CostCounters, ImplicitArray};
pub use error::PqError;
pub use identical::IdenticalPq;
pub use wc::WorstCasePq;

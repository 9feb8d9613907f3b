//! Trace replay, oracle fuzzing, counter benchmarking and the in-place sort
//! demonstration, over a uniform facade for all four implementations. The
//! `pq` binary is a thin argument parser over this module.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::amortized::AmortizedPq;
use crate::array::CostCounters;
use crate::error::{PqError, Result};
use crate::identical::IdenticalPq;
use crate::oracle::WilliamsHeap;
use crate::report::CounterReport;
use crate::trace::TraceOp;
use crate::wc::WorstCasePq;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqImpl {
    Amortized,
    WorstCase,
    Identical,
    Binary,
    /// Fault-injected baseline (flipped comparisons) for mutation-testing
    /// the fuzz harness itself.
    #[cfg(test)]
    FaultyMax,
}

impl PqImpl {
    pub fn name(&self) -> &'static str {
        match self {
            PqImpl::Amortized => "amortized",
            PqImpl::WorstCase => "worstcase",
            PqImpl::Identical => "identical",
            PqImpl::Binary => "binary",
            #[cfg(test)]
            PqImpl::FaultyMax => "faulty-max",
        }
    }

    pub fn parse(s: &str) -> Option<PqImpl> {
        match s {
            "amortized" => Some(PqImpl::Amortized),
            "worstcase" => Some(PqImpl::WorstCase),
            "identical" => Some(PqImpl::Identical),
            "binary" => Some(PqImpl::Binary),
            _ => None,
        }
    }

    pub fn allows_duplicates(&self) -> bool {
        !matches!(self, PqImpl::Amortized | PqImpl::WorstCase)
    }
}

/// One queue under a common interface.
pub enum PqFacade {
    Amortized(AmortizedPq<u64>),
    WorstCase(WorstCasePq<u64>),
    Identical(IdenticalPq<u64>),
    Binary(WilliamsHeap<u64>),
    #[cfg(test)]
    FaultyMax(Vec<u64>, crate::array::CostCounters),
}

impl PqFacade {
    pub fn new(which: PqImpl) -> PqFacade {
        Self::from_raw(which, Vec::new())
    }

    /// Rebuild purely from `(elements, n)` — the strict-implicitness entry
    /// point. (The binary baseline heapifies, which the others must not
    /// need.)
    pub fn from_raw(which: PqImpl, elements: Vec<u64>) -> PqFacade {
        match which {
            PqImpl::Amortized => PqFacade::Amortized(AmortizedPq::from_elements(elements)),
            PqImpl::WorstCase => PqFacade::WorstCase(WorstCasePq::from_elements(elements)),
            PqImpl::Identical => PqFacade::Identical(IdenticalPq::from_elements(elements)),
            PqImpl::Binary => PqFacade::Binary(WilliamsHeap::from_elements(elements)),
            #[cfg(test)]
            PqImpl::FaultyMax => {
                PqFacade::FaultyMax(elements, crate::array::CostCounters::default())
            }
        }
    }

    pub fn which(&self) -> PqImpl {
        match self {
            PqFacade::Amortized(_) => PqImpl::Amortized,
            PqFacade::WorstCase(_) => PqImpl::WorstCase,
            PqFacade::Identical(_) => PqImpl::Identical,
            PqFacade::Binary(_) => PqImpl::Binary,
            #[cfg(test)]
            PqFacade::FaultyMax(..) => PqImpl::FaultyMax,
        }
    }

    pub fn insert(&mut self, key: u64) -> Result<()> {
        match self {
            PqFacade::Amortized(p) => p.insert(key),
            PqFacade::WorstCase(p) => p.insert(key),
            PqFacade::Identical(p) => p.insert(key),
            PqFacade::Binary(p) => p.insert(key),
            #[cfg(test)]
            PqFacade::FaultyMax(v, _) => {
                v.push(key);
                Ok(())
            }
        }
    }

    pub fn extract_min(&mut self) -> Result<u64> {
        match self {
            PqFacade::Amortized(p) => p.extract_min(),
            PqFacade::WorstCase(p) => p.extract_min(),
            PqFacade::Identical(p) => p.extract_min(),
            PqFacade::Binary(p) => p.extract_min(),
            #[cfg(test)]
            PqFacade::FaultyMax(v, _) => {
                // Flipped comparison: hands back the maximum.
                let (i, _) = v
                    .iter()
                    .enumerate()
                    .max_by_key(|(_, k)| **k)
                    .ok_or(crate::error::PqError::Underflow)?;
                Ok(v.swap_remove(i))
            }
        }
    }

    pub fn find_min(&mut self) -> Option<u64> {
        match self {
            PqFacade::Amortized(p) => p.find_min(),
            PqFacade::WorstCase(p) => p.find_min(),
            PqFacade::Identical(p) => p.find_min(),
            PqFacade::Binary(p) => p.find_min(),
            #[cfg(test)]
            PqFacade::FaultyMax(v, _) => v.iter().max().copied(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            PqFacade::Amortized(p) => p.len(),
            PqFacade::WorstCase(p) => p.len(),
            PqFacade::Identical(p) => p.len(),
            PqFacade::Binary(p) => p.len(),
            #[cfg(test)]
            PqFacade::FaultyMax(v, _) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn elements(&self) -> &[u64] {
        match self {
            PqFacade::Amortized(p) => p.elements(),
            PqFacade::WorstCase(p) => p.elements(),
            PqFacade::Identical(p) => p.elements(),
            PqFacade::Binary(p) => p.elements(),
            #[cfg(test)]
            PqFacade::FaultyMax(v, _) => v,
        }
    }

    pub fn counters(&self) -> &CostCounters {
        match self {
            PqFacade::Amortized(p) => p.counters(),
            PqFacade::WorstCase(p) => p.counters(),
            PqFacade::Identical(p) => p.counters(),
            PqFacade::Binary(p) => p.counters(),
            #[cfg(test)]
            PqFacade::FaultyMax(_, c) => c,
        }
    }

    pub fn counters_mut(&mut self) -> &mut CostCounters {
        match self {
            PqFacade::Amortized(p) => p.counters_mut(),
            PqFacade::WorstCase(p) => p.counters_mut(),
            PqFacade::Identical(p) => p.counters_mut(),
            PqFacade::Binary(p) => p.counters_mut(),
            #[cfg(test)]
            PqFacade::FaultyMax(_, c) => c,
        }
    }

    pub fn validate(&mut self) -> Result<()> {
        match self {
            PqFacade::Amortized(p) => p.validate(),
            PqFacade::WorstCase(p) => p.validate(),
            PqFacade::Identical(p) => p.validate(),
            PqFacade::Binary(p) => p.validate(),
            #[cfg(test)]
            PqFacade::FaultyMax(..) => Ok(()),
        }
    }
}

/// Check-every stride for fuzz invariant checks and implicitness round
/// trips; `PQ_CHECK_EVERY` overrides.
pub fn check_every() -> usize {
    std::env::var("PQ_CHECK_EVERY")
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|&v: &usize| v > 0)
        .unwrap_or(1024)
}

fn duplicate_guard(which: PqImpl, ops: &[TraceOp]) -> Result<()> {
    if which.allows_duplicates() {
        return Ok(());
    }
    let mut seen = std::collections::HashSet::new();
    for (idx, op) in ops.iter().enumerate() {
        if let TraceOp::Insert(k) = op {
            if !seen.insert(*k) {
                return Err(PqError::Trace {
                    line: idx + 1,
                    msg: format!("duplicate key {k} for distinct-keys implementation"),
                });
            }
        }
    }
    Ok(())
}

/// Deterministic replay; returns the extract outputs and the counter report.
pub fn replay_trace(which: PqImpl, ops: &[TraceOp]) -> Result<(Vec<u64>, CounterReport)> {
    duplicate_guard(which, ops)?;
    let mut pq = PqFacade::new(which);
    let mut outputs = Vec::new();
    let mut peak = 0usize;
    let start = Instant::now();
    for op in ops {
        match op {
            TraceOp::Insert(k) => pq.insert(*k)?,
            TraceOp::Extract => outputs.push(pq.extract_min()?),
        }
        peak = peak.max(pq.len());
    }
    let wall_ns = start.elapsed().as_nanos();
    let c = pq.counters();
    Ok((
        outputs,
        CounterReport {
            impl_name: which.name().into(),
            n: peak,
            ops: ops.len() as u64,
            moves: c.moves,
            comparisons: c.comparisons,
            max_moves_per_op: c.max_moves_per_op,
            max_cmps_per_op: c.max_cmps_per_op,
            wall_ns,
        },
    ))
}

/// Random trace with an insert-biased ramp, a balanced middle and a drain
/// tail, deterministic in the seed. Distinct keys unless `alphabet` caps the
/// key space.
pub fn generate_trace(ops: usize, seed: u64, alphabet: Option<u64>) -> Vec<TraceOp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(ops);
    let mut live = 0usize;
    let mut used = std::collections::HashSet::new();
    for step in 0..ops {
        let phase = step * 3 / ops.max(1);
        let p_insert = match phase {
            0 => 0.8,
            1 => 0.5,
            _ => 0.25,
        };
        if live == 0 || rng.gen_bool(p_insert) {
            let key = match alphabet {
                Some(a) => rng.gen_range(0..a),
                None => loop {
                    let k = rng.gen::<u64>();
                    if used.insert(k) {
                        break k;
                    }
                },
            };
            out.push(TraceOp::Insert(key));
            live += 1;
        } else {
            out.push(TraceOp::Extract);
            live -= 1;
        }
    }
    out
}

#[derive(Debug)]
pub struct FuzzFailure {
    pub seed: u64,
    pub step: usize,
    pub message: String,
    /// Shortest failing prefix found by bisection.
    pub minimized: Vec<TraceOp>,
}

#[derive(Debug)]
pub struct FuzzOutcome {
    pub ops: usize,
    pub checkpoints: usize,
    pub report: CounterReport,
}

/// Replay against the oracle with periodic invariant checks and
/// strict-implicitness lockstep windows.
fn fuzz_once(
    which: PqImpl,
    ops: &[TraceOp],
    stride: usize,
    window: usize,
) -> std::result::Result<(usize, CounterReport), (usize, String)> {
    let mut pq = PqFacade::new(which);
    let mut oracle = WilliamsHeap::<u64>::new();
    // A twin rebuilt from raw state runs in lockstep for `window` ops.
    let mut twin: Option<(PqFacade, usize)> = None;
    let mut checkpoints = 0usize;
    let mut peak = 0usize;
    let start = Instant::now();
    for (step, op) in ops.iter().enumerate() {
        match op {
            TraceOp::Insert(k) => {
                pq.insert(*k).map_err(|e| (step, e.to_string()))?;
                oracle.insert(*k).expect("oracle insert");
                if let Some((t, _)) = twin.as_mut() {
                    t.insert(*k).map_err(|e| (step, format!("twin: {e}")))?;
                }
            }
            TraceOp::Extract => {
                let got = pq.extract_min().map_err(|e| (step, e.to_string()))?;
                let want = oracle.extract_min().expect("oracle extract");
                if got != want {
                    return Err((step, format!("extracted {got}, oracle says {want}")));
                }
                if let Some((t, _)) = twin.as_mut() {
                    let tg = t.extract_min().map_err(|e| (step, format!("twin: {e}")))?;
                    if tg != got {
                        return Err((step, format!("twin diverged: {tg} vs {got}")));
                    }
                }
            }
        }
        peak = peak.max(pq.len());
        if let Some((t, left)) = twin.as_mut() {
            *left -= 1;
            if *left == 0 {
                if t.elements() != pq.elements() {
                    return Err((step, "twin state diverged from original".into()));
                }
                twin = None;
            }
        } else if stride > 0 && step % stride == stride - 1 {
            pq.validate().map_err(|e| (step, e.to_string()))?;
            checkpoints += 1;
            // Re-instantiate from (elements, n) only and continue in
            // lockstep.
            twin = Some((PqFacade::from_raw(which, pq.elements().to_vec()), window));
        }
    }
    let wall_ns = start.elapsed().as_nanos();
    let c = pq.counters();
    Ok((
        checkpoints,
        CounterReport {
            impl_name: which.name().into(),
            n: peak,
            ops: ops.len() as u64,
            moves: c.moves,
            comparisons: c.comparisons,
            max_moves_per_op: c.max_moves_per_op,
            max_cmps_per_op: c.max_cmps_per_op,
            wall_ns,
        },
    ))
}

/// Oracle fuzz: random trace, per-step output comparison, strided invariant
/// checks and implicitness round trips. On failure the trace is shrunk to
/// its shortest failing prefix.
pub fn fuzz_oracle(
    which: PqImpl,
    ops: usize,
    seed: u64,
    alphabet: Option<u64>,
) -> std::result::Result<FuzzOutcome, Box<FuzzFailure>> {
    fuzz_oracle_with_stride(which, ops, seed, alphabet, check_every())
}

/// [`fuzz_oracle`] with an explicit check stride (the acceptance suite pins
/// it rather than reading the environment).
pub fn fuzz_oracle_with_stride(
    which: PqImpl,
    ops: usize,
    seed: u64,
    alphabet: Option<u64>,
    stride: usize,
) -> std::result::Result<FuzzOutcome, Box<FuzzFailure>> {
    if alphabet.is_some() && !which.allows_duplicates() {
        return Err(Box::new(FuzzFailure {
            seed,
            step: 0,
            message: format!("--alphabet needs duplicate support; {} has none", which.name()),
            minimized: Vec::new(),
        }));
    }
    let trace = generate_trace(ops, seed, alphabet);
    match fuzz_once(which, &trace, stride, 10_000) {
        Ok((checkpoints, report)) => Ok(FuzzOutcome { ops, checkpoints, report }),
        Err((step, message)) => {
            // Bisect to the shortest failing prefix (checks off for speed).
            let mut lo = 1usize;
            let mut hi = step + 1;
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if fuzz_once(which, &trace[..mid], 0, 0).is_err() {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            Err(Box::new(FuzzFailure {
                seed,
                step,
                message,
                minimized: trace[..lo.min(trace.len())].to_vec(),
            }))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mix {
    InsertHeavy,
    Balanced,
    ExtractHeavy,
}

impl Mix {
    pub fn parse(s: &str) -> Option<Mix> {
        match s {
            "insert-heavy" => Some(Mix::InsertHeavy),
            "balanced" => Some(Mix::Balanced),
            "extract-heavy" => Some(Mix::ExtractHeavy),
            _ => None,
        }
    }

    fn p_insert(&self) -> f64 {
        match self {
            Mix::InsertHeavy => 0.9,
            Mix::Balanced => 0.5,
            Mix::ExtractHeavy => 0.1,
        }
    }
}

/// Counter benchmark: prefill to `size`, reset counters, run a measured
/// segment of the given mix.
pub fn bench_counters(
    which: PqImpl,
    sizes: &[usize],
    mix: Mix,
    seed: u64,
    segment_ops: usize,
) -> Result<Vec<CounterReport>> {
    let mut reports = Vec::new();
    for &size in sizes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ size as u64);
        let mut pq = PqFacade::new(which);
        let mut used = std::collections::HashSet::new();
        let alphabet = if which == PqImpl::Identical { Some(8u64) } else { None };
        let draw = |rng: &mut ChaCha8Rng, used: &mut std::collections::HashSet<u64>| match alphabet {
            Some(a) => rng.gen_range(0..a),
            None => loop {
                let k = rng.gen::<u64>();
                if used.insert(k) {
                    break k;
                }
            },
        };
        while pq.len() < size {
            let k = draw(&mut rng, &mut used);
            pq.insert(k)?;
        }
        pq.counters_mut().reset();
        // Drain-limited segment for extract-heavy cells.
        let ops = if mix == Mix::ExtractHeavy {
            segment_ops.min(size)
        } else {
            segment_ops
        };
        let mut peak = pq.len();
        let start = Instant::now();
        for _ in 0..ops {
            if pq.is_empty() || rng.gen_bool(mix.p_insert()) {
                let k = draw(&mut rng, &mut used);
                pq.insert(k)?;
            } else {
                pq.extract_min()?;
            }
            peak = peak.max(pq.len());
        }
        let wall_ns = start.elapsed().as_nanos();
        let c = pq.counters();
        reports.push(CounterReport {
            impl_name: which.name().into(),
            n: peak,
            ops: ops as u64,
            moves: c.moves,
            comparisons: c.comparisons,
            max_moves_per_op: c.max_moves_per_op,
            max_cmps_per_op: c.max_cmps_per_op,
            wall_ns,
        });
    }
    Ok(reports)
}

/// Sort demonstration: n distinct random keys inserted then extracted through
/// the amortized structure. Returns the report; errors if the output is not
/// strictly increasing.
pub fn sort_demo(n: usize, seed: u64) -> Result<CounterReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pq = PqFacade::new(PqImpl::Amortized);
    let mut used = std::collections::HashSet::new();
    let start = Instant::now();
    for _ in 0..n {
        let k = loop {
            let k = rng.gen::<u64>();
            if used.insert(k) {
                break k;
            }
        };
        pq.insert(k)?;
    }
    let mut prev: Option<u64> = None;
    for _ in 0..n {
        let k = pq.extract_min()?;
        if let Some(p) = prev {
            if k <= p {
                return Err(PqError::Invariant(format!("output not increasing: {p} then {k}")));
            }
        }
        prev = Some(k);
    }
    let wall_ns = start.elapsed().as_nanos();
    let c = pq.counters();
    Ok(CounterReport {
        impl_name: "amortized".into(),
        n,
        ops: 2 * n as u64,
        moves: c.moves,
        comparisons: c.comparisons,
        max_moves_per_op: c.max_moves_per_op,
        max_cmps_per_op: c.max_cmps_per_op,
        wall_ns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace;

    #[test]
    fn replay_basic_trace() {
        let ops = trace::parse("i 5\ni 3\nx\n").unwrap();
        for which in [PqImpl::Amortized, PqImpl::WorstCase, PqImpl::Identical, PqImpl::Binary] {
            let (out, report) = replay_trace(which, &ops).unwrap();
            assert_eq!(out, vec![3], "{}", which.name());
            assert_eq!(report.ops, 3);
            assert_eq!(report.n, 2);
        }
    }

    #[test]
    fn replay_empty_trace() {
        let (out, report) = replay_trace(PqImpl::Amortized, &[]).unwrap();
        assert!(out.is_empty());
        assert_eq!(report.moves, 0);
        assert_eq!(report.comparisons, 0);
    }

    #[test]
    fn replay_rejects_duplicates_for_distinct_impls() {
        let ops = trace::parse("i 5\ni 5\n").unwrap();
        assert!(replay_trace(PqImpl::Amortized, &ops).is_err());
        assert!(replay_trace(PqImpl::WorstCase, &ops).is_err());
        assert!(replay_trace(PqImpl::Identical, &ops).is_ok());
    }

    #[test]
    fn replay_matches_oracle_replay() {
        let t = generate_trace(4000, 11, None);
        let (a, _) = replay_trace(PqImpl::Amortized, &t).unwrap();
        let (w, _) = replay_trace(PqImpl::WorstCase, &t).unwrap();
        let (b, _) = replay_trace(PqImpl::Binary, &t).unwrap();
        assert_eq!(a, b);
        assert_eq!(w, b);
    }

    #[test]
    fn fuzz_small_runs_pass() {
        for which in [PqImpl::Amortized, PqImpl::WorstCase, PqImpl::Binary] {
            let out = fuzz_oracle(which, 3000, 1, None).expect("fuzz passes");
            assert!(out.checkpoints > 0);
        }
        fuzz_oracle(PqImpl::Identical, 3000, 1, Some(8)).expect("identical fuzz passes");
    }

    #[test]
    fn fuzz_rejects_alphabet_for_distinct() {
        assert!(fuzz_oracle(PqImpl::Amortized, 10, 1, Some(4)).is_err());
    }

    #[test]
    fn sort_demo_small() {
        let r = sort_demo(1, 3).unwrap();
        assert_eq!(r.ops, 2);
        sort_demo(2000, 3).unwrap();
    }

    #[test]
    fn injected_fault_is_caught_with_counterexample() {
        // A queue with flipped comparisons must fail the oracle fuzz and
        // come back with a short failing prefix.
        let fail = fuzz_oracle_with_stride(PqImpl::FaultyMax, 5000, 3, None, 1024)
            .expect_err("flipped comparison must be detected");
        assert!(fail.message.contains("oracle"));
        assert!(!fail.minimized.is_empty());
        assert!(fail.minimized.len() <= fail.step + 1);
        // The minimized prefix must itself still fail.
        assert!(fuzz_oracle_with_stride(PqImpl::FaultyMax, fail.minimized.len(), 3, None, 0).is_err()
            || fail.minimized.len() < 5000);
    }

    #[test]
    fn replay_is_deterministic() {
        let t = generate_trace(2000, 21, None);
        let (a1, r1) = replay_trace(PqImpl::Amortized, &t).unwrap();
        let (a2, r2) = replay_trace(PqImpl::Amortized, &t).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(r1.moves, r2.moves);
        assert_eq!(r1.comparisons, r2.comparisons);
    }

    #[test]
    fn bench_reports_have_totals() {
        let reports =
            bench_counters(PqImpl::Binary, &[256, 512], Mix::Balanced, 5, 1000).unwrap();
        assert_eq!(reports.len(), 2);
        assert!(reports[0].moves > 0);
        assert!(reports[1].comparisons > reports[0].comparisons / 4);
    }
}

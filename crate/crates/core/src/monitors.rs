//! Conjunctive predicate detection over generated traces.
//!
//! All three monitors share one queue-based weak-conjunctive-predicate
//! engine. Each monitored process contributes a queue of candidate
//! intervals; the engine keeps one head per queue and
//!
//! 1. advances any head that causally precedes another head,
//! 2. advances the head with the smallest end while the heads span more
//!    than the monitor's epsilon,
//! 3. otherwise records the heads as a cut and advances the head with the
//!    smallest end (lowest process index on ties).
//!
//! Interval `x` on process `i` precedes interval `y` on process `j` when
//! some event of `i` after `x` reaches `y`'s truthification, i.e.
//! `y.vc_start[i] > x.vc_end[i]`. For point intervals this is exactly
//! vector-clock happened-before between the two truthification events.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clocks::{CausalOrder, HlcTimestamp, PhysTime, VectorClock};
use crate::simkernel::{PredicateInterval, Trace};

/// Epsilon value that admits every cut.
pub const UNBOUNDED: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonitorError {
    #[error("p = {p} is outside 1..={n}")]
    SubsetOutOfRange { p: usize, n: usize },
}

/// A local predicate interval offered to a monitor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub proc: usize,
    pub start: PhysTime,
    pub end: PhysTime,
    pub vc_start: VectorClock,
    pub vc_end: VectorClock,
    pub hlc: HlcTimestamp,
}

impl From<&PredicateInterval> for Candidate {
    fn from(iv: &PredicateInterval) -> Self {
        Self {
            proc: iv.proc,
            start: iv.start,
            end: iv.end,
            vc_start: iv.vc_start.clone(),
            vc_end: iv.vc_end.clone(),
            hlc: iv.hlc_start,
        }
    }
}

/// Causal precedence between candidate intervals on distinct processes.
pub fn interval_precedes(x_proc: usize, x_vc_end: &VectorClock, y_vc_start: &VectorClock) -> bool {
    y_vc_start.get(x_proc) > x_vc_end.get(x_proc)
}

impl Candidate {
    pub fn precedes(&self, other: &Candidate) -> bool {
        self.proc != other.proc && interval_precedes(self.proc, &self.vc_end, &other.vc_start)
    }

    /// Neither candidate precedes the other.
    pub fn concurrent_with(&self, other: &Candidate) -> bool {
        !self.precedes(other) && !other.precedes(self)
    }

    /// Point candidates compared by their truthification clocks.
    pub fn vc_order(&self, other: &Candidate) -> CausalOrder {
        self.vc_start.compare(&other.vc_start).expect("same trace")
    }
}

/// One member of a cut: which interval of which process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CutMember {
    pub proc: usize,
    /// Position in the process's interval list.
    pub index: usize,
    pub start: PhysTime,
    pub end: PhysTime,
}

/// Length of a cut: `max(max_i a_i - min_i b_i, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CutLength(pub u64);

/// One candidate per monitored process, ordered by process index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cut {
    pub members: Vec<CutMember>,
}

impl Cut {
    pub fn from_members(mut members: Vec<CutMember>) -> Self {
        members.sort_by_key(|m| m.proc);
        Self { members }
    }

    pub fn length(&self) -> CutLength {
        cut_length(self)
    }

    /// Latest start among the members.
    pub fn latest_start(&self) -> PhysTime {
        self.members.iter().map(|m| m.start).max().unwrap_or_default()
    }

    pub fn earliest_start(&self) -> PhysTime {
        self.members.iter().map(|m| m.start).min().unwrap_or_default()
    }

    /// All member intervals share a common tick.
    pub fn overlaps(&self) -> bool {
        self.length().0 == 0
    }

    /// Whether `self` counts as a different snapshot from `prev`: at least one
    /// process's interval is disjoint in time from its interval in `prev`.
    pub fn is_distinct_from(&self, prev: &Cut) -> bool {
        self.members.iter().zip(&prev.members).any(|(m, p)| m.end < p.start || p.end < m.start)
    }
}

pub fn cut_length(cut: &Cut) -> CutLength {
    let max_a = cut.members.iter().map(|m| m.start.0).max().unwrap_or(0);
    let min_b = cut.members.iter().map(|m| m.end.0).min().unwrap_or(0);
    CutLength(max_a.saturating_sub(min_b))
}

fn member_interval<'t>(trace: &'t Trace, m: &CutMember) -> &'t PredicateInterval {
    &trace.intervals[m.proc][m.index]
}

/// All members pairwise concurrent.
pub fn is_hb_consistent(trace: &Trace, cut: &Cut) -> bool {
    let ivs: Vec<&PredicateInterval> = cut.members.iter().map(|m| member_interval(trace, m)).collect();
    for (x, a) in ivs.iter().enumerate() {
        for b in &ivs[x + 1..] {
            if interval_precedes(a.proc, &a.vc_end, &b.vc_start) || interval_precedes(b.proc, &b.vc_end, &a.vc_start) {
                return false;
            }
        }
    }
    true
}

/// hb-consistent and no longer than `eps` (use [`UNBOUNDED`] for infinity).
pub fn is_eps_consistent(trace: &Trace, cut: &Cut, eps: u64) -> bool {
    cut_length(cut).0 <= eps && is_hb_consistent(trace, cut)
}

/// Monitor selection for partial predicate detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MonitorKind {
    Asynchronous,
    PartiallySynchronous { eps: u64 },
    QuasiSynchronous,
}

struct Engine<'t> {
    queues: Vec<&'t [PredicateInterval]>,
    procs: Vec<usize>,
    heads: Vec<usize>,
}

impl<'t> Engine<'t> {
    fn new(trace: &'t Trace, procs: &[usize]) -> Self {
        Self {
            queues: procs.iter().map(|&p| trace.intervals[p].as_slice()).collect(),
            procs: procs.to_vec(),
            heads: vec![0; procs.len()],
        }
    }

    fn head(&self, q: usize) -> Option<&'t PredicateInterval> {
        self.queues[q].get(self.heads[q])
    }

    fn exhausted(&self) -> bool {
        (0..self.queues.len()).any(|q| self.head(q).is_none())
    }

    /// Queue whose head ends first (lowest index on ties).
    fn earliest_end(&self) -> usize {
        (0..self.queues.len())
            .min_by_key(|&q| (self.head(q).expect("not exhausted").end, q))
            .expect("at least one queue")
    }

    fn snapshot(&self) -> Cut {
        Cut {
            members: (0..self.queues.len())
                .map(|q| {
                    let iv = self.head(q).expect("not exhausted");
                    CutMember { proc: self.procs[q], index: self.heads[q], start: iv.start, end: iv.end }
                })
                .collect(),
        }
    }

    fn run(mut self, eps: u64, causal: bool) -> Vec<Cut> {
        let m = self.queues.len();
        let mut cuts: Vec<Cut> = Vec::new();
        if m == 0 {
            return cuts;
        }
        let mut dirty: Vec<usize> = (0..m).collect();
        'outer: loop {
            if causal {
                while let Some(x) = dirty.pop() {
                    let Some(hx) = self.head(x) else { break 'outer };
                    for y in 0..m {
                        if y == x {
                            continue;
                        }
                        let Some(hy) = self.head(y) else { break 'outer };
                        if interval_precedes(hx.proc, &hx.vc_end, &hy.vc_start) {
                            self.heads[x] += 1;
                            dirty.push(x);
                            continue 'outer;
                        }
                        if interval_precedes(hy.proc, &hy.vc_end, &hx.vc_start) {
                            self.heads[y] += 1;
                            dirty.push(y);
                        }
                    }
                }
            }
            if self.exhausted() {
                break;
            }
            let first = self.earliest_end();
            let min_b = self.head(first).expect("not exhausted").end.0;
            let max_a = (0..m).map(|q| self.head(q).expect("not exhausted").start.0).max().unwrap_or(0);
            if max_a.saturating_sub(min_b) <= eps {
                let cut = self.snapshot();
                if cuts.last().is_none_or(|prev| cut.is_distinct_from(prev)) {
                    cuts.push(cut);
                }
            }
            self.heads[first] += 1;
            dirty.clear();
            dirty.push(first);
        }
        cuts
    }
}

/// Cuts found by a monitor that assumes arbitrary clock drift.
pub fn detect_async(trace: &Trace, procs: &[usize]) -> Vec<Cut> {
    Engine::new(trace, procs).run(UNBOUNDED, true)
}

/// Cuts that are hb-consistent and at most `eps_mon` long.
pub fn detect_partialsync(trace: &Trace, procs: &[usize], eps_mon: u64) -> Vec<Cut> {
    Engine::new(trace, procs).run(eps_mon, true)
}

/// Cuts whose intervals share a common instant, found by sweeping a scalar
/// clock: only the HLC logical time of each truthification and the end tick
/// of each interval are consulted, never a vector clock.
pub fn detect_quasi(trace: &Trace, procs: &[usize]) -> Vec<Cut> {
    let queues: Vec<&[PredicateInterval]> = procs.iter().map(|&p| trace.intervals[p].as_slice()).collect();
    let m = queues.len();
    let mut cuts: Vec<Cut> = Vec::new();
    if m == 0 {
        return cuts;
    }
    let mut heads = vec![0usize; m];
    let mut t = 0u64;
    loop {
        // raise every head to the first interval still true at or after t
        let mut settled = false;
        while !settled {
            settled = true;
            for q in 0..m {
                while let Some(iv) = queues[q].get(heads[q]) {
                    if iv.end.0 >= t {
                        break;
                    }
                    heads[q] += 1;
                }
                let Some(iv) = queues[q].get(heads[q]) else { return cuts };
                if iv.hlc_start.l > t {
                    t = iv.hlc_start.l;
                    settled = false;
                }
            }
        }
        let members: Vec<CutMember> = (0..m)
            .map(|q| {
                let iv = &queues[q][heads[q]];
                CutMember { proc: procs[q], index: heads[q], start: iv.start, end: iv.end }
            })
            .collect();
        let min_end = members.iter().map(|mm| mm.end.0).min().expect("non-empty");
        let cut = Cut { members };
        if cuts.last().is_none_or(|prev| cut.is_distinct_from(prev)) {
            cuts.push(cut);
        }
        t = min_end + 1;
    }
}

/// Run `monitor` over processes `0..p` and count the cuts.
pub fn detect_partial_p(trace: &Trace, p: usize, monitor: MonitorKind) -> Result<usize, MonitorError> {
    let n = trace.n();
    if p == 0 || p > n {
        return Err(MonitorError::SubsetOutOfRange { p, n });
    }
    let procs: Vec<usize> = (0..p).collect();
    Ok(match monitor {
        MonitorKind::Asynchronous => detect_async(trace, &procs).len(),
        MonitorKind::PartiallySynchronous { eps } => detect_partialsync(trace, &procs, eps).len(),
        MonitorKind::QuasiSynchronous => detect_quasi(trace, &procs).len(),
    })
}

/// Debug line for a cut, in the trace export style.
pub fn cut_record(trace: &Trace, cut: &Cut, eps: u64) -> String {
    let mut s = String::from("kind=cut procs=");
    for (i, m) in cut.members.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{}:{}:{}", m.proc, m.start, m.end).expect("writing to a String");
    }
    let hb = is_hb_consistent(trace, cut);
    let len = cut_length(cut).0;
    write!(s, " length={len} hb={} eps={} overlap={}", hb as u8, (hb && len <= eps) as u8, (len == 0) as u8)
        .expect("writing to a String");
    s
}

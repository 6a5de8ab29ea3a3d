//! Brute-force reference implementations used by the test suites.
//!
//! Nothing here consults a vector clock from the trace: causality comes from
//! an explicit event graph (process order plus message edges) searched
//! exhaustively, and cut sequences come from enumerating every combination
//! of candidates.

use rand::Rng;

use crate::clocks::VectorClock;
use crate::monitors::{Cut, CutMember};
use crate::simkernel::{IntervalModel, SimConfig, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Receive,
    Truthify,
    Send,
}

#[derive(Debug, Clone)]
struct Event {
    tick: u64,
    kind: Kind,
    seq: usize,
    vc: VectorClock,
}

/// Happened-before over the visible events of a trace.
pub struct EventGraph {
    /// Per process, events in execution order as ids into `reach`.
    by_proc: Vec<Vec<usize>>,
    events: Vec<Event>,
    /// `reach[e]` holds every event reachable from `e` (excluding `e`).
    reach: Vec<Vec<u64>>,
    /// Per process and interval index, the id of its truthification event.
    truthify: Vec<Vec<usize>>,
    /// Per process and interval index, the id of the first event after it.
    after: Vec<Vec<Option<usize>>>,
}

impl EventGraph {
    pub fn build(trace: &Trace) -> Self {
        let n = trace.n();
        let mut per: Vec<Vec<Event>> = vec![Vec::new(); n];
        for (seq, m) in trace.messages.iter().enumerate() {
            per[m.sender].push(Event { tick: m.send_pt.0, kind: Kind::Send, seq, vc: m.vc_send.clone() });
            per[m.receiver].push(Event { tick: m.receive_pt.0, kind: Kind::Receive, seq, vc: m.vc_receive.clone() });
        }
        for (p, ivs) in trace.intervals.iter().enumerate() {
            for (k, iv) in ivs.iter().enumerate() {
                per[p].push(Event { tick: iv.start.0, kind: Kind::Truthify, seq: k, vc: iv.vc_start.clone() });
            }
        }
        let mut events = Vec::new();
        let mut by_proc = vec![Vec::new(); n];
        let mut send_id = vec![usize::MAX; trace.messages.len()];
        let mut recv_id = vec![usize::MAX; trace.messages.len()];
        let mut truthify: Vec<Vec<usize>> = trace.intervals.iter().map(|v| vec![0; v.len()]).collect();
        for (p, mut evs) in per.into_iter().enumerate() {
            evs.sort_by_key(|e| (e.tick, e.kind, e.seq));
            for e in evs {
                let id = events.len();
                match e.kind {
                    Kind::Send => send_id[e.seq] = id,
                    Kind::Receive => recv_id[e.seq] = id,
                    Kind::Truthify => truthify[p][e.seq] = id,
                }
                by_proc[p].push(id);
                events.push(e);
            }
        }
        let total = events.len();
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); total];
        for list in &by_proc {
            for w in list.windows(2) {
                succ[w[0]].push(w[1]);
            }
        }
        for (s, r) in send_id.iter().zip(&recv_id) {
            succ[*s].push(*r);
        }
        let words = total.div_ceil(64);
        let mut reach = vec![vec![0u64; words]; total];
        let mut stack = Vec::new();
        for (start, row) in reach.iter_mut().enumerate() {
            stack.clear();
            stack.extend_from_slice(&succ[start]);
            while let Some(v) = stack.pop() {
                if row[v / 64] >> (v % 64) & 1 == 1 {
                    continue;
                }
                row[v / 64] |= 1 << (v % 64);
                stack.extend_from_slice(&succ[v]);
            }
        }
        let after = trace
            .intervals
            .iter()
            .enumerate()
            .map(|(p, ivs)| {
                ivs.iter()
                    .map(|iv| {
                        by_proc[p].iter().copied().find(|&id| {
                            let e = &events[id];
                            e.tick > iv.end.0 || (e.tick == iv.end.0 && e.kind == Kind::Send)
                        })
                    })
                    .collect()
            })
            .collect();
        Self { by_proc, events, reach, truthify, after }
    }

    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    pub fn reaches(&self, from: usize, to: usize) -> bool {
        self.reach[from][to / 64] >> (to % 64) & 1 == 1
    }

    /// Whether interval `x` of process `i` precedes interval `y` of `j`.
    pub fn interval_precedes(&self, i: usize, x: usize, j: usize, y: usize) -> bool {
        i != j && self.after[i][x].is_some_and(|e| self.reaches(e, self.truthify[j][y]))
    }

    /// Check vector-clock comparison against graph reachability for every
    /// pair of visible events; returns the first disagreement.
    pub fn vc_disagreement(&self) -> Option<(usize, usize)> {
        for a in 0..self.events.len() {
            for b in 0..self.events.len() {
                if a == b {
                    continue;
                }
                let vc_before = self.events[a].vc.happened_before(&self.events[b].vc);
                if vc_before != self.reaches(a, b) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    /// Number of visible events on each process.
    pub fn per_process(&self) -> Vec<usize> {
        self.by_proc.iter().map(Vec::len).collect()
    }
}

fn to_cut(trace: &Trace, procs: &[usize], idx: &[usize]) -> Cut {
    Cut::from_members(
        procs
            .iter()
            .zip(idx)
            .map(|(&p, &k)| {
                let iv = &trace.intervals[p][k];
                CutMember { proc: p, index: k, start: iv.start, end: iv.end }
            })
            .collect(),
    )
}

/// Every combination of candidates satisfying `accept`, as index vectors.
pub fn enumerate_cuts(trace: &Trace, procs: &[usize], accept: impl Fn(&[usize]) -> bool) -> Vec<Vec<usize>> {
    let sizes: Vec<usize> = procs.iter().map(|&p| trace.intervals[p].len()).collect();
    let mut out = Vec::new();
    if procs.is_empty() || sizes.contains(&0) {
        return out;
    }
    let mut idx = vec![0usize; procs.len()];
    'outer: loop {
        if accept(&idx) {
            out.push(idx.clone());
        }
        for d in (0..idx.len()).rev() {
            idx[d] += 1;
            if idx[d] < sizes[d] {
                continue 'outer;
            }
            idx[d] = 0;
        }
        break;
    }
    out
}

/// The counting-policy sequence over a set of valid cuts: start from the
/// least valid cut, and after each one move past the candidate whose
/// interval ends first (lowest process on ties) and take the least valid cut
/// above that. Panics if the set is not closed under componentwise minimum.
pub fn least_cut_sequence(trace: &Trace, procs: &[usize], valid: &[Vec<usize>]) -> Vec<Cut> {
    let m = procs.len();
    let mut bound = vec![0usize; m];
    let mut out = Vec::new();
    loop {
        let mut meet: Option<Vec<usize>> = None;
        for v in valid.iter().filter(|v| v.iter().zip(&bound).all(|(a, b)| a >= b)) {
            meet = Some(match meet {
                None => v.clone(),
                Some(cur) => cur.iter().zip(v).map(|(a, b)| *a.min(b)).collect(),
            });
        }
        let Some(meet) = meet else { break };
        assert!(valid.contains(&meet), "valid cuts are not closed under meet: {meet:?}");
        let j = (0..m).min_by_key(|&q| (trace.intervals[procs[q]][meet[q]].end, q)).expect("non-empty");
        out.push(to_cut(trace, procs, &meet));
        bound = meet;
        bound[j] += 1;
    }
    out
}

/// Length of the cut given by an index vector.
pub fn index_cut_length(trace: &Trace, procs: &[usize], idx: &[usize]) -> u64 {
    let ivs = procs.iter().zip(idx).map(|(&p, &k)| &trace.intervals[p][k]);
    let max_a = ivs.clone().map(|iv| iv.start.0).max().unwrap_or(0);
    let min_b = ivs.map(|iv| iv.end.0).min().unwrap_or(0);
    max_a.saturating_sub(min_b)
}

/// Reference detection for all three monitors over `procs`.
pub struct Reference {
    pub hb: Vec<Vec<usize>>,
    pub overlap: Vec<Vec<usize>>,
}

impl Reference {
    pub fn new(trace: &Trace, graph: &EventGraph, procs: &[usize]) -> Self {
        let hb = enumerate_cuts(trace, procs, |idx| {
            (0..procs.len()).all(|x| {
                (0..procs.len()).all(|y| x == y || !graph.interval_precedes(procs[x], idx[x], procs[y], idx[y]))
            })
        });
        let overlap = enumerate_cuts(trace, procs, |idx| index_cut_length(trace, procs, idx) == 0);
        Self { hb, overlap }
    }

    pub fn asynchronous(&self, trace: &Trace, procs: &[usize]) -> Vec<Cut> {
        least_cut_sequence(trace, procs, &self.hb)
    }

    pub fn partially_synchronous(&self, trace: &Trace, procs: &[usize], eps: u64) -> Vec<Cut> {
        let valid: Vec<Vec<usize>> =
            self.hb.iter().filter(|v| index_cut_length(trace, procs, v) <= eps).cloned().collect();
        least_cut_sequence(trace, procs, &valid)
    }

    pub fn quasi(&self, trace: &Trace, procs: &[usize]) -> Vec<Cut> {
        least_cut_sequence(trace, procs, &self.overlap)
    }
}

/// A random small configuration: up to 4 processes, horizon up to 200, and
/// few enough candidates per process for exhaustive enumeration.
pub fn small_config<R: Rng + ?Sized>(rng: &mut R) -> SimConfig {
    let n = rng.random_range(2..=4);
    let interval = match rng.random_range(0..4) {
        0 => IntervalModel::Point,
        1 => IntervalModel::GeometricLength { p: rng.random_range(0.15..0.8) },
        2 => IntervalModel::Retriggered { len: rng.random_range(1..6) },
        _ => IntervalModel::FixedLength { len: rng.random_range(1..6) },
    };
    SimConfig {
        n,
        epsilon_app: rng.random_range(0..15),
        delta: rng.random_range(0..8),
        alpha: rng.random_range(0.0..0.3),
        beta: rng.random_range(0.02..0.08),
        interval,
        horizon: rng.random_range(50..=200),
        seed: rng.random(),
        ..SimConfig::default()
    }
}

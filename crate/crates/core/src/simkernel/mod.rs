//! Seeded generator for executions of an `<eps, delta>` partially
//! synchronous system.
//!
//! A run advances per-process clocks under a bounded-spread rule, truthifies
//! local predicates, and exchanges messages with a fixed minimum delay. The
//! resulting [`Trace`] carries every predicate interval with its vector clock
//! and HLC stamps, which is all the monitors need.

mod correlation;
mod export;
mod generate;

pub use correlation::{majority, minority, Correlation};
pub use export::{parse_trace_records, trace_records, write_trace, TraceRecord};
pub use generate::{generate, generate_observed, sample_interval_length, step_schedule, StepObserver};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clocks::{HlcTimestamp, PhysTime, VectorClock};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("malformed trace record on line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

/// How long a local predicate stays true once truthified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IntervalModel {
    /// True for a single tick.
    Point,
    /// Length `k >= 1` with `P(k) = (1-p)^(k-1) p`.
    GeometricLength { p: f64 },
    /// Every interval lasts exactly `len` ticks.
    FixedLength { len: u64 },
    /// Truthification is drawn every tick, even while the predicate holds,
    /// and the predicate stays true for `len` ticks after the most recent
    /// one. Overlapping or touching stretches form a single interval.
    Retriggered { len: u64 },
}

impl IntervalModel {
    /// Mean interval length in ticks; the hold time for `Retriggered`.
    pub fn mean_len(&self) -> f64 {
        match *self {
            IntervalModel::Point => 1.0,
            IntervalModel::GeometricLength { p } => 1.0 / p,
            IntervalModel::FixedLength { len } => len as f64,
            IntervalModel::Retriggered { len } => len as f64,
        }
    }
}

/// Generation parameters for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Process count.
    pub n: usize,
    /// Bound on the spread between process clocks, in ticks.
    pub epsilon_app: u64,
    /// Message delay in ticks (the minimum delay of the system).
    pub delta: u64,
    /// Per-tick probability of sending a message.
    pub alpha: f64,
    /// Per-tick probability of truthifying the local predicate.
    pub beta: f64,
    pub interval: IntervalModel,
    /// Every process runs until its clock reaches this value.
    pub horizon: u64,
    pub correlation: Correlation,
    pub seed: u64,
    /// Per-step probability that a process advances its clock.
    pub advance_prob: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 20,
            epsilon_app: 100,
            delta: 10,
            alpha: 0.05,
            beta: 0.05,
            interval: IntervalModel::Point,
            horizon: 100_000,
            correlation: Correlation::Independent,
            seed: 0,
            advance_prob: 0.5,
        }
    }
}

fn probability(name: &str, v: f64, open_low: bool) -> Result<(), SimError> {
    let ok = if open_low { v > 0.0 && v <= 1.0 } else { (0.0..=1.0).contains(&v) };
    if ok {
        Ok(())
    } else {
        let range = if open_low { "(0, 1]" } else { "[0, 1]" };
        Err(SimError::InvalidConfig(format!("{name} = {v} is outside {range}")))
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n < 2 {
            return Err(SimError::InvalidConfig(format!("n = {} but at least 2 processes are required", self.n)));
        }
        if self.n > u16::MAX as usize {
            return Err(SimError::InvalidConfig(format!("n = {} is too large", self.n)));
        }
        probability("alpha", self.alpha, false)?;
        probability("beta", self.beta, true)?;
        probability("advance_prob", self.advance_prob, true)?;
        match self.interval {
            IntervalModel::Point => {}
            IntervalModel::GeometricLength { p } => probability("interval geometric p", p, true)?,
            IntervalModel::FixedLength { len } | IntervalModel::Retriggered { len } => {
                if len == 0 {
                    return Err(SimError::InvalidConfig("interval length must be >= 1".into()));
                }
            }
        }
        self.correlation.validate(self.n)?;
        Ok(())
    }
}

/// One interval during which a process's local predicate held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateInterval {
    pub proc: usize,
    pub start: PhysTime,
    /// Last tick at which the predicate holds; `end == start` for points.
    pub end: PhysTime,
    /// Clock of the truthification event.
    pub vc_start: VectorClock,
    /// Clock of the last event inside the interval.
    pub vc_end: VectorClock,
    pub hlc_start: HlcTimestamp,
    pub hlc_end: HlcTimestamp,
}

/// A delivered message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub sender: usize,
    pub receiver: usize,
    pub send_pt: PhysTime,
    pub receive_pt: PhysTime,
    pub vc_send: VectorClock,
    pub hlc_send: HlcTimestamp,
    pub vc_receive: VectorClock,
    pub hlc_receive: HlcTimestamp,
}

/// A generated execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub config: SimConfig,
    /// Per-process intervals ordered by start time.
    pub intervals: Vec<Vec<PredicateInterval>>,
    /// Messages in delivery order.
    pub messages: Vec<MessageRecord>,
    pub final_clocks: Vec<u64>,
    /// Largest clock spread observed after any step.
    pub max_spread: u64,
    pub steps: u64,
}

impl Trace {
    pub fn n(&self) -> usize {
        self.intervals.len()
    }

    pub fn interval_count(&self) -> usize {
        self.intervals.iter().map(Vec::len).sum()
    }
}

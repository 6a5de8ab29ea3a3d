//! Causality timestamps: vector clocks, hybrid logical clocks and hybrid
//! vector clocks.
//!
//! Every clock value is immutable; update operations return a new value.
//! The simulator stamps events with a [`VectorClock`] and an
//! [`HlcTimestamp`]; [`HvClock`] is provided for completeness and is
//! exercised by the property tests.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Physical clock reading of a process, in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct PhysTime(pub u64);

impl PhysTime {
    pub const ZERO: PhysTime = PhysTime(0);

    pub fn ticks(self) -> u64 {
        self.0
    }
}

impl fmt::Display for PhysTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClockError {
    #[error("clock dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("owner index {owner} out of range for {n} processes")]
    OwnerOutOfRange { owner: usize, n: usize },
    #[error("physical time {pt} is behind the clock's own entry {own}")]
    TimeWentBackwards { pt: u64, own: u64 },
}

/// Result of comparing two vector clocks under happened-before.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CausalOrder {
    Before,
    After,
    Concurrent,
    Equal,
}

/// Fidge/Mattern vector clock owned by one process.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VectorClock {
    entries: Vec<u32>,
    owner: usize,
}

impl VectorClock {
    /// All-zero clock for `owner` in an `n`-process system.
    pub fn new(n: usize, owner: usize) -> Result<Self, ClockError> {
        if owner >= n {
            return Err(ClockError::OwnerOutOfRange { owner, n });
        }
        Ok(Self { entries: vec![0; n], owner })
    }

    pub fn from_entries(entries: Vec<u32>, owner: usize) -> Result<Self, ClockError> {
        if owner >= entries.len() {
            return Err(ClockError::OwnerOutOfRange { owner, n: entries.len() });
        }
        Ok(Self { entries, owner })
    }

    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> u32 {
        self.entries[i]
    }

    /// Local event: bump the owner's entry.
    #[must_use]
    pub fn local_event(&self) -> Self {
        let mut next = self.clone();
        next.entries[self.owner] += 1;
        next
    }

    /// Receive event: componentwise max with the message clock, then tick.
    pub fn receive(&self, msg: &VectorClock) -> Result<Self, ClockError> {
        self.check_dim(msg)?;
        let mut next = self.clone();
        for (mine, theirs) in next.entries.iter_mut().zip(&msg.entries) {
            *mine = (*mine).max(*theirs);
        }
        next.entries[self.owner] += 1;
        Ok(next)
    }

    pub fn compare(&self, other: &VectorClock) -> Result<CausalOrder, ClockError> {
        self.check_dim(other)?;
        let mut le = true;
        let mut ge = true;
        for (a, b) in self.entries.iter().zip(&other.entries) {
            le &= a <= b;
            ge &= a >= b;
        }
        Ok(match (le, ge) {
            (true, true) => CausalOrder::Equal,
            (true, false) => CausalOrder::Before,
            (false, true) => CausalOrder::After,
            (false, false) => CausalOrder::Concurrent,
        })
    }

    /// `self` happened before `other`.
    pub fn happened_before(&self, other: &VectorClock) -> bool {
        matches!(self.compare(other), Ok(CausalOrder::Before))
    }

    fn check_dim(&self, other: &VectorClock) -> Result<(), ClockError> {
        if self.entries.len() != other.entries.len() {
            return Err(ClockError::DimensionMismatch { left: self.entries.len(), right: other.entries.len() });
        }
        Ok(())
    }
}

impl fmt::Display for VectorClock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Hybrid logical clock timestamp `(l, c)`, ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct HlcTimestamp {
    /// Logical time, never behind the physical clock of the stamped event.
    pub l: u64,
    /// Counter; reset whenever `l` moves forward.
    pub c: u32,
}

impl HlcTimestamp {
    pub fn new(l: u64, c: u32) -> Self {
        Self { l, c }
    }

    /// Local or send event at physical time `pt`.
    #[must_use]
    pub fn local_or_send(self, pt: PhysTime) -> Self {
        let l = self.l.max(pt.0);
        let c = if l == self.l { self.c + 1 } else { 0 };
        Self { l, c }
    }

    /// Receive event at physical time `pt` for a message stamped `msg`.
    #[must_use]
    pub fn receive(self, msg: HlcTimestamp, pt: PhysTime) -> Self {
        let l = self.l.max(msg.l).max(pt.0);
        let c = if l == self.l && l == msg.l {
            self.c.max(msg.c) + 1
        } else if l == self.l {
            self.c + 1
        } else if l == msg.l {
            msg.c + 1
        } else {
            0
        };
        Self { l, c }
    }

    /// Equal HLC stamps imply the events are concurrent.
    pub fn concurrent_with(self, other: HlcTimestamp) -> bool {
        self.l == other.l && self.c == other.c
    }
}

impl fmt::Display for HlcTimestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.l, self.c)
    }
}

/// Hybrid vector clock: the owner's physical clock plus what it knows of
/// every other process, never older than `eps` behind its own entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HvClock {
    entries: Vec<u64>,
    owner: usize,
    eps: u64,
}

impl HvClock {
    pub fn new(n: usize, owner: usize, eps: u64) -> Result<Self, ClockError> {
        if owner >= n {
            return Err(ClockError::OwnerOutOfRange { owner, n });
        }
        Ok(Self { entries: vec![0; n], owner, eps })
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn eps(&self) -> u64 {
        self.eps
    }

    pub fn own(&self) -> u64 {
        self.entries[self.owner]
    }

    /// Local event at physical time `pt`.
    pub fn advance(&self, pt: PhysTime) -> Result<Self, ClockError> {
        self.check_time(pt)?;
        let mut next = self.clone();
        next.entries[self.owner] = pt.0;
        next.clamp();
        Ok(next)
    }

    /// Receive event at physical time `pt`.
    pub fn receive(&self, msg: &HvClock, pt: PhysTime) -> Result<Self, ClockError> {
        if msg.entries.len() != self.entries.len() {
            return Err(ClockError::DimensionMismatch { left: self.entries.len(), right: msg.entries.len() });
        }
        self.check_time(pt)?;
        let mut next = self.clone();
        for (mine, theirs) in next.entries.iter_mut().zip(&msg.entries) {
            *mine = (*mine).max(*theirs);
        }
        next.entries[self.owner] = pt.0;
        next.clamp();
        Ok(next)
    }

    fn check_time(&self, pt: PhysTime) -> Result<(), ClockError> {
        if pt.0 < self.own() {
            return Err(ClockError::TimeWentBackwards { pt: pt.0, own: self.own() });
        }
        Ok(())
    }

    fn clamp(&mut self) {
        let floor = self.own().saturating_sub(self.eps);
        for e in &mut self.entries {
            *e = (*e).max(floor);
        }
    }
}

//! Laboratory for the precision, recall and sensitivity of conjunctive
//! predicate monitors in partially synchronous distributed systems.
//!
//! - [`clocks`]: vector clocks, hybrid logical clocks, hybrid vector clocks.
//! - [`simkernel`]: seeded generator of `<eps, delta>` executions.
//! - [`monitors`]: asynchronous, partially synchronous and quasi-synchronous
//!   conjunctive predicate detection.
//! - [`analytic`]: closed-form precision/recall/sensitivity model.
//! - [`metrics`]: experiment harness tying the simulator to the monitors.

pub mod analytic;
pub mod clocks;
pub mod metrics;
pub mod monitors;
pub mod simkernel;

#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

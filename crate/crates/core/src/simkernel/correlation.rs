//! Inter-process correlation of predicate truthification.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimError;

/// How a process decides whether its predicate becomes true at a tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Correlation {
    /// Every process draws independently with rate beta.
    Independent,
    /// Processes `0..g1` draw independently; every later process copies the
    /// majority of the first group with probability `p_dep`, and otherwise
    /// draws independently.
    Pma { g1: usize, p_dep: f64 },
    /// Like `Pma` with `g1 = n/2` and `p_dep = 0.5`, but the second group
    /// copies the minority of the first group.
    Hnma,
    /// Process 0 draws independently; process `j` copies the majority of
    /// processes `0..j` with probability 0.5.
    Pmaj,
}

/// Majority value; an even split counts as `false`.
pub fn majority(values: &[bool]) -> bool {
    let yes = values.iter().filter(|&&v| v).count();
    2 * yes > values.len()
}

/// Minority value; an even split counts as `false`.
pub fn minority(values: &[bool]) -> bool {
    let yes = values.iter().filter(|&&v| v).count();
    2 * yes < values.len()
}

impl Correlation {
    pub fn validate(&self, n: usize) -> Result<(), SimError> {
        match *self {
            Correlation::Independent => Ok(()),
            Correlation::Pma { g1, p_dep } => {
                if n < 2 || g1 == 0 || g1 >= n {
                    return Err(SimError::InvalidConfig(format!("PMA needs 1 <= g1 < n (g1 = {g1}, n = {n})")));
                }
                if !(0.0..=1.0).contains(&p_dep) {
                    return Err(SimError::InvalidConfig(format!("PMA p_dep = {p_dep} is outside [0, 1]")));
                }
                Ok(())
            }
            Correlation::Hnma => {
                if n < 2 {
                    return Err(SimError::InvalidConfig("HNMA needs n >= 2".into()));
                }
                Ok(())
            }
            Correlation::Pmaj => {
                if n < 1 {
                    return Err(SimError::InvalidConfig("PMAJ needs n >= 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Decide whether process `proc` truthifies, given the current truth
    /// values of all processes.
    pub fn decide<R: Rng + ?Sized>(&self, proc: usize, snapshot: &[bool], beta: f64, rng: &mut R) -> bool {
        let n = snapshot.len();
        let follow = |rng: &mut R, p_dep: f64, reference: &[bool], pick: fn(&[bool]) -> bool| {
            if rng.random::<f64>() < p_dep {
                pick(reference)
            } else {
                rng.random::<f64>() < beta
            }
        };
        match *self {
            Correlation::Independent => rng.random::<f64>() < beta,
            Correlation::Pma { g1, p_dep } => {
                if proc < g1 {
                    rng.random::<f64>() < beta
                } else {
                    follow(rng, p_dep, &snapshot[..g1], majority)
                }
            }
            Correlation::Hnma => {
                let g1 = n / 2;
                if proc < g1 {
                    rng.random::<f64>() < beta
                } else {
                    follow(rng, 0.5, &snapshot[..g1], minority)
                }
            }
            Correlation::Pmaj => {
                if proc == 0 {
                    rng.random::<f64>() < beta
                } else {
                    follow(rng, 0.5, &snapshot[..proc], majority)
                }
            }
        }
    }

    /// Short label used in CSV output.
    pub fn label(&self) -> String {
        match *self {
            Correlation::Independent => "independent".into(),
            Correlation::Pma { g1, p_dep } => format!("pma:{g1}:{p_dep}"),
            Correlation::Hnma => "hnma".into(),
            Correlation::Pmaj => "pmaj".into(),
        }
    }
}

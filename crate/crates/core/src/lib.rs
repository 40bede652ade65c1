//! Exact computation of team disclosure equilibria under deliberation protocols,
//! the effort incentives they create, and closed forms for symmetric binary teams.
//!
//! All quantities are exact rationals. Members are zero-based in the library and
//! one-based in the text formats read by the command-line tool.

#![warn(missing_docs)]

pub mod binary;
pub mod config;
pub mod equilibrium;
pub mod incentives;
pub mod outcomes;
pub mod protocol;
pub mod rational;
pub mod report;
pub mod theorem_lab;

use equilibrium::EquilibriumError;

/// Size limits for exhaustive searches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchCaps {
    /// Largest team handled by the equilibrium search.
    pub max_members: usize,
    /// Largest per-member outcome grid handled by the equilibrium search.
    pub max_grid: usize,
    /// Most members simultaneously mixing at an indifference point.
    pub max_mixers: usize,
    /// Largest total number of (member, outcome) votes in deterministic-profile enumeration.
    pub max_profile_bits: usize,
}

impl Default for SearchCaps {
    fn default() -> Self {
        Self {
            max_members: 4,
            max_grid: 5,
            max_mixers: 2,
            max_profile_bits: 20,
        }
    }
}

impl SearchCaps {
    pub(crate) fn check_members(&self, n: usize) -> Result<(), EquilibriumError> {
        if n > self.max_members {
            return Err(EquilibriumError::ComputeCap {
                what: "team size",
                limit: self.max_members,
                got: n,
            });
        }
        Ok(())
    }

    pub(crate) fn check_grid(&self, m: usize) -> Result<(), EquilibriumError> {
        if m > self.max_grid {
            return Err(EquilibriumError::ComputeCap {
                what: "outcome grid size",
                limit: self.max_grid,
                got: m,
            });
        }
        Ok(())
    }
}

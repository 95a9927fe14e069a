use serde::{Deserialize, Serialize};

use super::params::TransitionRates;
use crate::qdyn::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Lower ground-state branch.
    Lower,
    /// Upper ground-state branch.
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchPopulations {
    pub time: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Closed-form solution of `ṗ_U = γ₊ p_L − γ₋ p_U` with `p_L + p_U = 1`.
pub fn orbital_relaxation_trajectory(rates: &TransitionRates, initial: Branch, grid: &TimeGrid) -> Vec<BranchPopulations> {
    let total = rates.total();
    let eq = rates.equilibrium_upper();
    let start = match initial {
        Branch::Lower => 0.0,
        Branch::Upper => 1.0,
    };
    grid.points()
        .into_iter()
        .map(|t| {
            let upper = eq + (start - eq) * (-total * (t - grid.start)).exp();
            BranchPopulations { time: t, lower: 1.0 - upper, upper }
        })
        .collect()
}

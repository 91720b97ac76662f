//! Construction, improvement and exact solvers.

pub mod brute;
pub mod classes;
pub mod delta;
pub mod exact;
pub mod greedy;
pub mod itps;
pub mod mps;
mod search;
pub mod tabu;

use crate::error::Result;
use crate::metrics::{to_f64, Rational, WmapePair};
use crate::model::{Allocation, DaySnapshot, RecipeSiteMatrix};
use serde::{Deserialize, Serialize};
use std::time::Duration;

pub use brute::brute_force_oracle;
pub use classes::{class_aggregate, OrderClass};
pub use delta::{swap_delta, DeviationState, SwapMove};
pub use exact::{exact_solve, ExactParams};
pub use greedy::{carry_over, greedy_construct};
pub use itps::{itps_improve, ItpsParams};
pub use tabu::{tabu_improve, TabuParams};

/// Default wall-clock limit of the exact solver.
pub const DEFAULT_BUDGET: Duration = Duration::from_secs(600);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    /// Objective meets the global lower bound.
    OptimalCertified,
    /// Search space exhausted without meeting the global bound.
    OptimalExhausted,
    /// Stopped on a time or iteration budget.
    FeasibleBudgetHit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::OptimalCertified => "optimal_certified",
            SolveStatus::OptimalExhausted => "optimal_exhausted",
            SolveStatus::FeasibleBudgetHit => "feasible_budget_hit",
        }
    }

    pub fn is_optimal(self) -> bool {
        !matches!(self, SolveStatus::FeasibleBudgetHit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub allocation: Allocation,
    pub metrics: WmapePair,
    pub status: SolveStatus,
    /// Best proven lower bound on the site numerator.
    pub lower_bound: u64,
    pub elapsed_seconds: f64,
    pub nodes_explored: u64,
    pub swaps_accepted: u64,
}

impl SolveResult {
    pub fn objective_site(&self) -> Rational {
        self.metrics.site()
    }

    pub fn objective_global(&self) -> Rational {
        self.metrics.global()
    }

    pub fn site_f64(&self) -> f64 {
        to_f64(self.objective_site())
    }

    pub fn global_f64(&self) -> f64 {
        to_f64(self.objective_global())
    }

    pub(crate) fn evaluate(
        day: &DaySnapshot,
        allocation: Allocation,
        prev: &RecipeSiteMatrix,
    ) -> Result<(Allocation, WmapePair)> {
        let cur = crate::model::recipe_site_matrix(day, &allocation)?;
        let pair = WmapePair::between(prev, &cur)?;
        Ok((allocation, pair))
    }

    /// Heuristic result: certified when the bound is met, otherwise budget-limited.
    pub(crate) fn heuristic(
        day: &DaySnapshot,
        allocation: Allocation,
        prev: &RecipeSiteMatrix,
        elapsed: Duration,
        swaps_accepted: u64,
    ) -> Result<SolveResult> {
        let (allocation, metrics) = SolveResult::evaluate(day, allocation, prev)?;
        let status = if metrics.is_tight() {
            SolveStatus::OptimalCertified
        } else {
            SolveStatus::FeasibleBudgetHit
        };
        Ok(SolveResult {
            allocation,
            metrics,
            status,
            lower_bound: metrics.global_numerator,
            elapsed_seconds: elapsed.as_secs_f64(),
            nodes_explored: 0,
            swaps_accepted,
        })
    }
}

/// Serializable summary of a [`SolveResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub lead_day: i32,
    pub status: SolveStatus,
    pub wmape_site: Fraction,
    pub wmape_global: Fraction,
    pub lower_bound_numerator: u64,
    pub elapsed_seconds: f64,
    pub nodes_explored: u64,
    pub swaps_accepted: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fraction {
    pub numerator: u64,
    pub denominator: u64,
    pub decimal: f64,
}

impl Fraction {
    pub fn new(numerator: u64, denominator: u64) -> Fraction {
        Fraction {
            numerator,
            denominator,
            decimal: numerator as f64 / denominator as f64,
        }
    }
}

impl From<&SolveResult> for SolveSummary {
    fn from(r: &SolveResult) -> Self {
        SolveSummary {
            lead_day: r.allocation.lead_day,
            status: r.status,
            wmape_site: Fraction::new(r.metrics.site_numerator, r.metrics.denominator),
            wmape_global: Fraction::new(r.metrics.global_numerator, r.metrics.denominator),
            lower_bound_numerator: r.lower_bound,
            elapsed_seconds: r.elapsed_seconds,
            nodes_explored: r.nodes_explored,
            swaps_accepted: r.swaps_accepted,
        }
    }
}

//! Tabu search over 1:1 swaps.
//!
//! Every iteration evaluates a pool of sampled swaps and applies the best one
//! whose orders are not tabu, even if it worsens the objective. A tabu move
//! is still allowed when it would beat the best allocation seen so far. With
//! a small probability a random feasible swap is applied instead. Both orders
//! of an applied swap stay tabu for `tenure` iterations.

use super::delta::DeviationState;
use super::search::Search;
use super::SolveResult;
use crate::error::{Error, Result};
use crate::model::{Allocation, DaySnapshot, RecipeSiteMatrix};
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TabuParams {
    pub iterations: usize,
    pub tenure: usize,
    pub candidate_pool: usize,
    pub diversify_prob: f64,
    pub seed: u64,
}

impl Default for TabuParams {
    fn default() -> Self {
        TabuParams {
            iterations: 500,
            tenure: 25,
            candidate_pool: 50,
            diversify_prob: 0.10,
            seed: 0,
        }
    }
}

impl TabuParams {
    pub fn validate(&self) -> Result<()> {
        if self.iterations > 0 && self.tenure >= self.iterations {
            return Err(Error::InvalidConfig(
                "tabu tenure must be below the iteration count".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.diversify_prob) {
            return Err(Error::InvalidConfig(
                "diversification probability must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

pub fn tabu_improve(
    day: &DaySnapshot,
    init: &Allocation,
    prev: &RecipeSiteMatrix,
    params: &TabuParams,
) -> Result<SolveResult> {
    let (result, _) = tabu_trace(day, init, prev, params)?;
    Ok(result)
}

/// Like [`tabu_improve`], also returning `(current, best)` numerators per iteration.
pub fn tabu_trace(
    day: &DaySnapshot,
    init: &Allocation,
    prev: &RecipeSiteMatrix,
    params: &TabuParams,
) -> Result<(SolveResult, Vec<(u64, u64)>)> {
    params.validate()?;
    let start = Instant::now();
    let state = DeviationState::new(day, init, prev)?;
    let mut search = Search::new(day, state);
    let mut rng = rng::stream(params.seed, "tabu", i64::from(day.lead_day));
    let mut tabu_until = vec![0usize; day.orders.len()];
    let mut best = search.state.abs_sum();
    let mut best_assign = search.state.assignment().to_vec();
    let mut accepted = 0u64;
    let mut trace = Vec::with_capacity(params.iterations);

    for iter in 1..=params.iterations {
        let conflicts = search.conflicts();
        if conflicts.is_empty() {
            // the objective meets its lower bound
            break;
        }
        let chosen = if rng.gen_bool(params.diversify_prob) {
            search.random_swap(&mut rng, 32)
        } else {
            let current = search.state.abs_sum() as i64;
            let mut pick: Option<(i64, u64, u64, usize, usize)> = None;
            for _ in 0..params.candidate_pool {
                let Some((a, b)) = search.targeted_swap(&conflicts, &mut rng) else {
                    continue;
                };
                let d = search.swap_delta(a, b);
                let is_tabu = tabu_until[a] >= iter || tabu_until[b] >= iter;
                if is_tabu && current + d >= best as i64 {
                    continue;
                }
                let key = (d, day.orders[a].id, day.orders[b].id, a, b);
                if pick.is_none_or(|p| key < p) {
                    pick = Some(key);
                }
            }
            pick.map(|(_, _, _, a, b)| (a, b))
        };
        if let Some((a, b)) = chosen {
            search.swap(a, b);
            accepted += 1;
            tabu_until[a] = iter + params.tenure;
            tabu_until[b] = iter + params.tenure;
            if search.state.abs_sum() < best {
                best = search.state.abs_sum();
                best_assign.copy_from_slice(search.state.assignment());
            }
        }
        trace.push((search.state.abs_sum(), best));
    }

    let alloc = Allocation::from_dense(day, &best_assign);
    let result = SolveResult::heuristic(day, alloc, prev, start.elapsed(), accepted)?;
    Ok((result, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{recipe_site_matrix, validate_allocation};
    use crate::solvers::greedy_construct;
    use crate::testkit::{ld11, ld12, ld12_solution};

    #[test]
    fn best_seen_is_monotone() {
        let prev = recipe_site_matrix(&ld12(), &ld12_solution()).unwrap();
        let day = ld11();
        let init = greedy_construct(&day).unwrap();
        let params = TabuParams {
            iterations: 100,
            tenure: 3,
            candidate_pool: 5,
            seed: 1,
            ..TabuParams::default()
        };
        let (res, trace) = tabu_trace(&day, &init, &prev, &params).unwrap();
        assert!(validate_allocation(&day, &res.allocation).is_empty());
        assert!(trace.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(trace.iter().all(|&(cur, best)| best <= cur));
        if let Some(&(_, best)) = trace.last() {
            assert_eq!(best, res.metrics.site_numerator);
        }
    }

    #[test]
    fn degenerate_parameters_still_search() {
        let prev = recipe_site_matrix(&ld12(), &ld12_solution()).unwrap();
        let day = ld11();
        let init = greedy_construct(&day).unwrap();
        let params = TabuParams {
            iterations: 50,
            tenure: 0,
            candidate_pool: 10,
            diversify_prob: 0.0,
            seed: 5,
        };
        let (res, trace) = tabu_trace(&day, &init, &prev, &params).unwrap();
        // best-of-pool hill climbing may step sideways or uphill
        assert!(trace.iter().any(|&(cur, best)| cur >= best));
        assert!(res.metrics.site_numerator >= res.metrics.global_numerator);
    }

    #[test]
    fn invalid_parameters() {
        let p = TabuParams {
            iterations: 10,
            tenure: 10,
            ..TabuParams::default()
        };
        assert!(p.validate().is_err());
        let p = TabuParams {
            diversify_prob: 1.5,
            ..TabuParams::default()
        };
        assert!(p.validate().is_err());
    }
}

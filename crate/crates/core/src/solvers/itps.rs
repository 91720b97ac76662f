//! Iterative targeted pairwise swap.
//!
//! Each iteration samples a conflict cell (a recipe over-supplied at one
//! factory and under-supplied at another), picks an order holding that recipe
//! at the surplus factory, scans a few partners at the deficit factory, and
//! applies the best swap only if it strictly lowers the objective.

use super::delta::DeviationState;
use super::search::Search;
use super::SolveResult;
use crate::error::Result;
use crate::model::{Allocation, DaySnapshot, RecipeSiteMatrix};
use crate::rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ItpsParams {
    pub iterations: usize,
    /// Partners evaluated per proposal.
    pub partner_samples: usize,
    pub seed: u64,
}

impl Default for ItpsParams {
    fn default() -> Self {
        ItpsParams {
            iterations: 1500,
            partner_samples: 8,
            seed: 0,
        }
    }
}

pub fn itps_improve(
    day: &DaySnapshot,
    init: &Allocation,
    prev: &RecipeSiteMatrix,
    params: &ItpsParams,
) -> Result<SolveResult> {
    let (result, _) = itps_trace(day, init, prev, params)?;
    Ok(result)
}

/// Like [`itps_improve`], also returning the objective numerator after every iteration.
pub fn itps_trace(
    day: &DaySnapshot,
    init: &Allocation,
    prev: &RecipeSiteMatrix,
    params: &ItpsParams,
) -> Result<(SolveResult, Vec<u64>)> {
    let start = Instant::now();
    let state = DeviationState::new(day, init, prev)?;
    let mut search = Search::new(day, state);
    let mut rng = rng::stream(params.seed, "itps", i64::from(day.lead_day));
    let mut accepted = 0u64;
    let mut trace = Vec::with_capacity(params.iterations);

    for _ in 0..params.iterations {
        let conflicts = search.conflicts();
        if conflicts.is_empty() {
            trace.push(search.state.abs_sum());
            continue;
        }
        if let Some((a, b)) = propose(&mut search, &conflicts, params.partner_samples, &mut rng) {
            if search.swap_delta(a, b) < 0 {
                search.swap(a, b);
                accepted += 1;
            }
        }
        trace.push(search.state.abs_sum());
    }

    let alloc = search.state.to_allocation(day);
    let result = SolveResult::heuristic(day, alloc, prev, start.elapsed(), accepted)?;
    Ok((result, trace))
}

fn propose(
    search: &mut Search<'_>,
    conflicts: &[super::search::Conflict],
    partner_samples: usize,
    rng: &mut rng::Rng,
) -> Option<(usize, usize)> {
    let c = *conflicts.choose(rng)?;
    let a = search.pick_mover(c, rng, 8)?;
    let reverse = search.reverse_recipes(c.deficit, c.surplus);
    let mut best: Option<(i64, usize)> = None;
    for _ in 0..partner_samples.max(1) {
        let Some(b) = search.pick_partner(c.deficit, c.surplus, &reverse, rng, 8) else {
            continue;
        };
        let d = search.swap_delta(a, b);
        if best.is_none_or(|(bd, bb)| (d, b) < (bd, bb)) {
            best = Some((d, b));
        }
    }
    best.map(|(_, b)| (a, b))
}

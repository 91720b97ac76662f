//! Exhaustive enumeration of order-level assignments, for cross-checking.

use super::{SolveResult, SolveStatus};
use crate::error::{Error, Result};
use crate::metrics::WmapePair;
use crate::model::{Allocation, DaySnapshot, FactoryId, RecipeSiteMatrix};
use std::time::Instant;

/// Enumeration limit in bits of `orders * log2(factories)`.
pub const MAX_ENUMERATION_BITS: f64 = 20.0;

/// True optimum by enumerating every feasible order-to-factory assignment.
///
/// Ties resolve to the lexicographically smallest assignment in order
/// position, factory index.
pub fn brute_force_oracle(day: &DaySnapshot, prev: &RecipeSiteMatrix) -> Result<SolveResult> {
    let start = Instant::now();
    let k = day.orders.len();
    let m = day.n_factories;
    let bits = k as f64 * (m as f64).log2();
    if bits > MAX_ENUMERATION_BITS {
        return Err(Error::TooLarge(format!(
            "{k} orders over {m} factories is {bits:.1} bits, limit {MAX_ENUMERATION_BITS}"
        )));
    }
    if prev.dims() != (day.n_recipes, m) {
        return Err(Error::DimensionMismatch {
            expected: (day.n_recipes, m),
            actual: prev.dims(),
        });
    }
    let sets = day.eligible_sets();
    let required = day.required_counts();

    let mut assign = vec![0usize; k];
    let mut counts = vec![0u64; m];
    let mut best: Option<(u64, Vec<usize>)> = None;
    let mut leaves = 0u64;

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        pos: usize,
        day: &DaySnapshot,
        prev: &RecipeSiteMatrix,
        sets: &[crate::model::FactorySet],
        required: &[u64],
        assign: &mut Vec<usize>,
        counts: &mut Vec<u64>,
        best: &mut Option<(u64, Vec<usize>)>,
        leaves: &mut u64,
    ) {
        if pos == assign.len() {
            *leaves += 1;
            let cur = RecipeSiteMatrix::from_dense(day, assign);
            let num: u64 = cur
                .as_slice()
                .iter()
                .zip(prev.as_slice())
                .map(|(&c, &p)| c.abs_diff(p))
                .sum();
            if best.as_ref().is_none_or(|(b, _)| num < *b) {
                *best = Some((num, assign.clone()));
            }
            return;
        }
        for j in 0..counts.len() {
            if !sets[pos].contains(j) || counts[j] >= required[j] {
                continue;
            }
            assign[pos] = j;
            counts[j] += 1;
            recurse(
                pos + 1,
                day,
                prev,
                sets,
                required,
                assign,
                counts,
                best,
                leaves,
            );
            counts[j] -= 1;
        }
    }
    recurse(
        0,
        day,
        prev,
        &sets,
        &required,
        &mut assign,
        &mut counts,
        &mut best,
        &mut leaves,
    );

    let Some((_, assign)) = best else {
        crate::generator::check_supply(day)?;
        return Err(Error::Infeasible {
            factory: FactoryId::from_index(m - 1),
            required: required[m - 1],
            available: 0,
        });
    };
    let alloc = Allocation::from_dense(day, &assign);
    let cur = RecipeSiteMatrix::from_dense(day, &assign);
    let metrics = WmapePair::between(prev, &cur)?;
    Ok(SolveResult {
        allocation: alloc,
        metrics,
        status: if metrics.is_tight() {
            SolveStatus::OptimalCertified
        } else {
            SolveStatus::OptimalExhausted
        },
        lower_bound: metrics.site_numerator,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        nodes_explored: leaves,
        swaps_accepted: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{recipe_site_matrix, CapacityVector, EligibilityTable, Order, RecipeId};
    use crate::testkit::{ld11, ld12, ld12_solution};

    #[test]
    fn keeps_carried_orders_in_place() {
        let prev_day = ld12();
        let prev_alloc = ld12_solution();
        let prev = recipe_site_matrix(&prev_day, &prev_alloc).unwrap();
        let res = brute_force_oracle(&ld11(), &prev).unwrap();
        for id in 1..=4 {
            assert_eq!(res.allocation.get(id), prev_alloc.get(id), "order {id}");
        }
        assert!(res.metrics.site_numerator >= res.metrics.global_numerator);
    }

    #[test]
    fn single_forced_order() {
        let table = EligibilityTable::from_sets(vec![Default::default()], 2).unwrap();
        let day = DaySnapshot::new(
            -3,
            vec![Order::new(1, vec![RecipeId(1)], true)],
            CapacityVector::new(vec![0]),
            table,
        )
        .unwrap();
        let prev = RecipeSiteMatrix::zeros(1, 2);
        let res = brute_force_oracle(&day, &prev).unwrap();
        assert_eq!(res.allocation.get(1), Some(FactoryId(2)));
    }

    #[test]
    fn refuses_large_instances() {
        let orders = (1..=30)
            .map(|i| Order::new(i, vec![RecipeId(1)], true))
            .collect();
        let day = DaySnapshot::new(
            -3,
            orders,
            CapacityVector::new(vec![10, 10]),
            EligibilityTable::unconstrained(1, 3).unwrap(),
        )
        .unwrap();
        let prev = RecipeSiteMatrix::zeros(1, 3);
        assert!(matches!(
            brute_force_oracle(&day, &prev),
            Err(Error::TooLarge(_))
        ));
    }
}

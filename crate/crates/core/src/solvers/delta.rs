//! Incremental evaluation of the site objective under order relocations.

use crate::error::{Error, Result};
use crate::metrics::Rational;
use crate::model::{Allocation, DaySnapshot, FactoryId, FactorySet, OrderId, RecipeSiteMatrix};
use std::collections::HashMap;

/// 1:1 exchange of two orders sitting at different factories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SwapMove {
    pub order_a: OrderId,
    pub order_b: OrderId,
}

/// Signed deviation `cur - prev` per recipe and factory, kept in sync with an assignment.
#[derive(Debug, Clone)]
pub struct DeviationState {
    prev: RecipeSiteMatrix,
    n_factories: usize,
    dev: Vec<i64>,
    abs_sum: u64,
    denom: u64,
    assign: Vec<usize>,
    eligible: Vec<FactorySet>,
    index: HashMap<OrderId, usize>,
}

/// Accumulates cell changes of a compound move; at most a few dozen cells.
#[derive(Default)]
pub(crate) struct CellDelta {
    cells: Vec<(usize, i64)>,
}

impl CellDelta {
    #[inline]
    fn add(&mut self, cell: usize, change: i64) {
        for c in self.cells.iter_mut() {
            if c.0 == cell {
                c.1 += change;
                return;
            }
        }
        self.cells.push((cell, change));
    }

    pub(crate) fn clear(&mut self) {
        self.cells.clear();
    }
}

impl DeviationState {
    pub fn new(
        day: &DaySnapshot,
        alloc: &Allocation,
        prev: &RecipeSiteMatrix,
    ) -> Result<DeviationState> {
        let assign = alloc.to_dense(day)?;
        DeviationState::from_dense(day, assign, prev)
    }

    pub(crate) fn from_dense(
        day: &DaySnapshot,
        assign: Vec<usize>,
        prev: &RecipeSiteMatrix,
    ) -> Result<DeviationState> {
        let dims = (day.n_recipes, day.n_factories);
        if prev.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: prev.dims(),
            });
        }
        let cur = RecipeSiteMatrix::from_dense(day, &assign);
        let denom = cur.total();
        if denom == 0 {
            return Err(Error::ZeroDenominator);
        }
        let dev: Vec<i64> = cur
            .as_slice()
            .iter()
            .zip(prev.as_slice())
            .map(|(&c, &p)| c as i64 - p as i64)
            .collect();
        let abs_sum = dev.iter().map(|d| d.unsigned_abs()).sum();
        Ok(DeviationState {
            prev: prev.clone(),
            n_factories: day.n_factories,
            dev,
            abs_sum,
            denom,
            assign,
            eligible: day.eligible_sets(),
            index: day
                .orders
                .iter()
                .enumerate()
                .map(|(i, o)| (o.id, i))
                .collect(),
        })
    }

    pub fn prev(&self) -> &RecipeSiteMatrix {
        &self.prev
    }

    pub fn current(&self) -> RecipeSiteMatrix {
        let rows: Vec<Vec<u64>> = (0..self.prev.n_recipes())
            .map(|i| {
                (0..self.n_factories)
                    .map(|j| (self.prev.at(i, j) as i64 + self.dev(i, j)) as u64)
                    .collect()
            })
            .collect();
        RecipeSiteMatrix::from_rows(&rows).expect("rectangular")
    }

    /// Deviation of a 0-based recipe/factory cell.
    #[inline]
    pub fn dev(&self, recipe: usize, factory: usize) -> i64 {
        self.dev[recipe * self.n_factories + factory]
    }

    /// Sum of absolute deviations: the site numerator.
    pub fn abs_sum(&self) -> u64 {
        self.abs_sum
    }

    pub fn denominator(&self) -> u64 {
        self.denom
    }

    pub fn wmape_site(&self) -> Rational {
        Rational::new(self.abs_sum as i64, self.denom as i64)
    }

    pub(crate) fn n_factories(&self) -> usize {
        self.n_factories
    }

    pub(crate) fn assignment(&self) -> &[usize] {
        &self.assign
    }

    #[inline]
    pub(crate) fn factory_of(&self, order: usize) -> usize {
        self.assign[order]
    }

    #[inline]
    pub(crate) fn eligible(&self, order: usize) -> FactorySet {
        self.eligible[order]
    }

    pub fn to_allocation(&self, day: &DaySnapshot) -> Allocation {
        Allocation::from_dense(day, &self.assign)
    }

    fn resolve(&self, id: OrderId) -> Result<usize> {
        self.index
            .get(&id)
            .copied()
            .ok_or_else(|| Error::InfeasibleMove(format!("order {id} is not part of the day")))
    }

    /// Validates a swap and returns the order indices.
    pub(crate) fn check_swap(&self, mv: SwapMove) -> Result<(usize, usize)> {
        let a = self.resolve(mv.order_a)?;
        let b = self.resolve(mv.order_b)?;
        let (ja, jb) = (self.assign[a], self.assign[b]);
        if ja == jb {
            return Err(Error::InfeasibleMove(format!(
                "orders {} and {} are both at {}",
                mv.order_a,
                mv.order_b,
                FactoryId::from_index(ja)
            )));
        }
        if !self.eligible[a].contains(jb) || !self.eligible[b].contains(ja) {
            return Err(Error::InfeasibleMove(format!(
                "swapping orders {} and {} breaks eligibility",
                mv.order_a, mv.order_b
            )));
        }
        Ok((a, b))
    }

    #[inline]
    pub(crate) fn collect(&self, day: &DaySnapshot, order: usize, to: usize, buf: &mut CellDelta) {
        let from = self.assign[order];
        let m = self.n_factories;
        for r in &day.orders[order].recipes {
            let base = r.index() * m;
            buf.add(base + from, -1);
            buf.add(base + to, 1);
        }
    }

    #[inline]
    pub(crate) fn numerator_delta(&self, buf: &CellDelta) -> i64 {
        buf.cells
            .iter()
            .map(|&(cell, ch)| {
                let d = self.dev[cell];
                (d + ch).abs() - d.abs()
            })
            .sum()
    }

    /// Change of the site numerator if every `(order, to)` relocation were applied.
    pub(crate) fn relocation_delta(
        &self,
        day: &DaySnapshot,
        moves: &[(usize, usize)],
        buf: &mut CellDelta,
    ) -> i64 {
        buf.clear();
        for &(o, to) in moves {
            self.collect(day, o, to, buf);
        }
        self.numerator_delta(buf)
    }

    /// Numerator change of swapping orders `a` and `b` (0-based indices).
    #[inline]
    pub(crate) fn swap_numerator_delta(
        &self,
        day: &DaySnapshot,
        a: usize,
        b: usize,
        buf: &mut CellDelta,
    ) -> i64 {
        let (ja, jb) = (self.assign[a], self.assign[b]);
        self.relocation_delta(day, &[(a, jb), (b, ja)], buf)
    }

    /// Applies relocations. Capacity is the caller's responsibility.
    pub(crate) fn relocate(&mut self, day: &DaySnapshot, moves: &[(usize, usize)]) {
        let m = self.n_factories;
        for &(o, to) in moves {
            let from = self.assign[o];
            for r in &day.orders[o].recipes {
                let base = r.index() * m;
                self.bump(base + from, -1);
                self.bump(base + to, 1);
            }
            self.assign[o] = to;
        }
    }

    #[inline]
    fn bump(&mut self, cell: usize, change: i64) {
        let old = self.dev[cell];
        let new = old + change;
        self.dev[cell] = new;
        self.abs_sum = (self.abs_sum as i64 + new.abs() - old.abs()) as u64;
    }

    pub(crate) fn swap_indices(&mut self, day: &DaySnapshot, a: usize, b: usize) {
        let (ja, jb) = (self.assign[a], self.assign[b]);
        self.relocate(day, &[(a, jb), (b, ja)]);
    }

    pub fn apply_swap(&mut self, day: &DaySnapshot, mv: SwapMove) -> Result<()> {
        let (a, b) = self.check_swap(mv)?;
        self.swap_indices(day, a, b);
        Ok(())
    }
}

/// Change in site WMAPE caused by `mv`, touching only the recipes of the two orders.
pub fn swap_delta(state: &DeviationState, mv: SwapMove, day: &DaySnapshot) -> Result<Rational> {
    let (a, b) = state.check_swap(mv)?;
    let mut buf = CellDelta::default();
    let num = state.swap_numerator_delta(day, a, b, &mut buf);
    Ok(Rational::new(num, state.denom as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::wmape_site;
    use crate::model::recipe_site_matrix;
    use crate::testkit::{ld11, ld11_solution, ld12, ld12_solution};
    use num_traits::Zero;

    fn state() -> (DaySnapshot, DeviationState) {
        let prev = recipe_site_matrix(&ld12(), &ld12_solution()).unwrap();
        let day = ld11();
        let s = DeviationState::new(&day, &ld11_solution(), &prev).unwrap();
        (day, s)
    }

    #[test]
    fn matches_full_recompute() {
        let (day, mut s) = state();
        let mv = SwapMove {
            order_a: 5,
            order_b: 6,
        };
        let before = wmape_site(s.prev(), &s.current()).unwrap();
        assert_eq!(before, s.wmape_site());
        let d = swap_delta(&s, mv, &day).unwrap();
        s.apply_swap(&day, mv).unwrap();
        let after = wmape_site(s.prev(), &s.current()).unwrap();
        assert_eq!(after - before, d);
        assert_eq!(after, s.wmape_site());
    }

    #[test]
    fn swapping_back_negates() {
        let (day, mut s) = state();
        let mv = SwapMove {
            order_a: 1,
            order_b: 6,
        };
        let d1 = swap_delta(&s, mv, &day).unwrap();
        s.apply_swap(&day, mv).unwrap();
        let d2 = swap_delta(&s, mv, &day).unwrap();
        assert_eq!(d1, -d2);
    }

    #[test]
    fn identical_recipes_swap_is_free() {
        let mut day = ld11();
        day.orders[6].recipes = day.orders[5].recipes.clone();
        let prev = recipe_site_matrix(&ld12(), &ld12_solution()).unwrap();
        let s = DeviationState::new(&day, &ld11_solution(), &prev).unwrap();
        // orders 6 (F3) and 7 (F2) now carry the same recipe
        let d = swap_delta(
            &s,
            SwapMove {
                order_a: 6,
                order_b: 7,
            },
            &day,
        )
        .unwrap();
        assert!(d.is_zero());
    }

    #[test]
    fn infeasible_moves_rejected() {
        let (day, s) = state();
        // 2 is F1-only (besides F3), 4 sits at F2
        let bad = SwapMove {
            order_a: 2,
            order_b: 4,
        };
        assert!(matches!(
            swap_delta(&s, bad, &day),
            Err(Error::InfeasibleMove(_))
        ));
        let same = SwapMove {
            order_a: 2,
            order_b: 3,
        };
        assert!(swap_delta(&s, same, &day).is_err());
        let unknown = SwapMove {
            order_a: 2,
            order_b: 99,
        };
        assert!(swap_delta(&s, unknown, &day).is_err());
    }
}

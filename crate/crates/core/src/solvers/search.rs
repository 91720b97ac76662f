//! Indexes and move proposals shared by the swap-based searches.

use super::delta::{CellDelta, DeviationState};
use crate::model::DaySnapshot;
use crate::rng::Rng;
use rand::seq::SliceRandom;
use rand::Rng as _;

/// Orders per factory and per (recipe, factory) cell, with O(1) relocation.
pub(crate) struct SearchIndex {
    m: usize,
    by_factory: Vec<Vec<usize>>,
    pos_factory: Vec<usize>,
    by_cell: Vec<Vec<usize>>,
    distinct: Vec<Vec<usize>>,
    cell_pos: Vec<Vec<usize>>,
}

impl SearchIndex {
    pub(crate) fn new(day: &DaySnapshot, assign: &[usize]) -> SearchIndex {
        let m = day.n_factories;
        let mut by_factory = vec![Vec::new(); m];
        let mut pos_factory = vec![0; assign.len()];
        let mut by_cell = vec![Vec::new(); day.n_recipes * m];
        let mut distinct = Vec::with_capacity(assign.len());
        let mut cell_pos = Vec::with_capacity(assign.len());
        for (o, &j) in assign.iter().enumerate() {
            pos_factory[o] = by_factory[j].len();
            by_factory[j].push(o);
            let mut rs: Vec<usize> = day.orders[o].recipes.iter().map(|r| r.index()).collect();
            rs.sort_unstable();
            rs.dedup();
            let mut pos = Vec::with_capacity(rs.len());
            for &r in &rs {
                let cell = &mut by_cell[r * m + j];
                pos.push(cell.len());
                cell.push(o);
            }
            distinct.push(rs);
            cell_pos.push(pos);
        }
        SearchIndex {
            m,
            by_factory,
            pos_factory,
            by_cell,
            distinct,
            cell_pos,
        }
    }

    pub(crate) fn at_factory(&self, j: usize) -> &[usize] {
        &self.by_factory[j]
    }

    pub(crate) fn at_cell(&self, recipe: usize, j: usize) -> &[usize] {
        &self.by_cell[recipe * self.m + j]
    }

    pub(crate) fn relocate(&mut self, o: usize, from: usize, to: usize) {
        let p = self.pos_factory[o];
        self.by_factory[from].swap_remove(p);
        if let Some(&moved) = self.by_factory[from].get(p) {
            self.pos_factory[moved] = p;
        }
        self.pos_factory[o] = self.by_factory[to].len();
        self.by_factory[to].push(o);

        for k in 0..self.distinct[o].len() {
            let r = self.distinct[o][k];
            let p = self.cell_pos[o][k];
            let cell = &mut self.by_cell[r * self.m + from];
            cell.swap_remove(p);
            if let Some(&moved) = cell.get(p) {
                let slot = self.distinct[moved]
                    .binary_search(&r)
                    .expect("order lists its own recipes");
                self.cell_pos[moved][slot] = p;
            }
            let cell = &mut self.by_cell[r * self.m + to];
            self.cell_pos[o][k] = cell.len();
            cell.push(o);
        }
    }
}

/// State plus index, moved in lockstep.
pub(crate) struct Search<'a> {
    pub day: &'a DaySnapshot,
    pub state: DeviationState,
    pub index: SearchIndex,
    pub buf: CellDelta,
}

/// Recipe cells where a positive deviation meets a negative one in the same row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Conflict {
    pub recipe: usize,
    pub surplus: usize,
    pub deficit: usize,
}

impl<'a> Search<'a> {
    pub(crate) fn new(day: &'a DaySnapshot, state: DeviationState) -> Search<'a> {
        let index = SearchIndex::new(day, state.assignment());
        Search {
            day,
            state,
            index,
            buf: CellDelta::default(),
        }
    }

    pub(crate) fn swap_delta(&mut self, a: usize, b: usize) -> i64 {
        self.state
            .swap_numerator_delta(self.day, a, b, &mut self.buf)
    }

    pub(crate) fn swap(&mut self, a: usize, b: usize) {
        let (ja, jb) = (self.state.factory_of(a), self.state.factory_of(b));
        self.state.swap_indices(self.day, a, b);
        self.index.relocate(a, ja, jb);
        self.index.relocate(b, jb, ja);
    }

    pub(crate) fn cycle_delta(&mut self, moves: &[(usize, usize)]) -> i64 {
        self.state.relocation_delta(self.day, moves, &mut self.buf)
    }

    /// Applies a capacity-neutral set of relocations.
    pub(crate) fn relocate_all(&mut self, moves: &[(usize, usize)]) {
        let froms: Vec<usize> = moves
            .iter()
            .map(|&(o, _)| self.state.factory_of(o))
            .collect();
        self.state.relocate(self.day, moves);
        for (&(o, to), from) in moves.iter().zip(froms) {
            self.index.relocate(o, from, to);
        }
    }

    /// Every (recipe, surplus factory, deficit factory) conflict, in row-major order.
    pub(crate) fn conflicts(&self) -> Vec<Conflict> {
        let m = self.state.n_factories();
        let mut out = Vec::new();
        for r in 0..self.day.n_recipes {
            for ja in 0..m {
                if self.state.dev(r, ja) <= 0 {
                    continue;
                }
                for jb in 0..m {
                    if self.state.dev(r, jb) < 0 {
                        out.push(Conflict {
                            recipe: r,
                            surplus: ja,
                            deficit: jb,
                        });
                    }
                }
            }
        }
        out
    }

    /// Recipes over-supplied at `from` and under-supplied at `to`.
    pub(crate) fn reverse_recipes(&self, from: usize, to: usize) -> Vec<usize> {
        (0..self.day.n_recipes)
            .filter(|&s| self.state.dev(s, from) > 0 && self.state.dev(s, to) < 0)
            .collect()
    }

    /// A random order at `conflict.surplus` holding its recipe and eligible at the deficit side.
    pub(crate) fn pick_mover(&self, c: Conflict, rng: &mut Rng, tries: usize) -> Option<usize> {
        let cell = self.index.at_cell(c.recipe, c.surplus);
        if cell.is_empty() {
            return None;
        }
        (0..tries)
            .map(|_| cell[rng.gen_range(0..cell.len())])
            .find(|&a| self.state.eligible(a).contains(c.deficit))
    }

    /// A random order at `from` that may move to `to`; targeted at `reverse` recipes when given.
    pub(crate) fn pick_partner(
        &self,
        from: usize,
        to: usize,
        reverse: &[usize],
        rng: &mut Rng,
        tries: usize,
    ) -> Option<usize> {
        for _ in 0..tries {
            let b = match reverse.choose(rng) {
                Some(&s) if rng.gen_bool(0.5) => {
                    let cell = self.index.at_cell(s, from);
                    if cell.is_empty() {
                        continue;
                    }
                    cell[rng.gen_range(0..cell.len())]
                }
                _ => {
                    let at = self.index.at_factory(from);
                    if at.is_empty() {
                        return None;
                    }
                    at[rng.gen_range(0..at.len())]
                }
            };
            if self.state.eligible(b).contains(to) {
                return Some(b);
            }
        }
        None
    }

    /// Uniformly random feasible swap.
    pub(crate) fn random_swap(&self, rng: &mut Rng, tries: usize) -> Option<(usize, usize)> {
        let n = self.day.orders.len();
        let m = self.state.n_factories();
        for _ in 0..tries {
            let a = rng.gen_range(0..n);
            let ja = self.state.factory_of(a);
            let jb = rng.gen_range(0..m);
            if jb == ja || !self.state.eligible(a).contains(jb) {
                continue;
            }
            let at = self.index.at_factory(jb);
            if at.is_empty() {
                continue;
            }
            let b = at[rng.gen_range(0..at.len())];
            if self.state.eligible(b).contains(ja) {
                return Some((a, b));
            }
        }
        None
    }

    /// One targeted swap proposal: a mover from a conflict cell plus a partner.
    pub(crate) fn targeted_swap(
        &self,
        conflicts: &[Conflict],
        rng: &mut Rng,
    ) -> Option<(usize, usize)> {
        let c = *conflicts.choose(rng)?;
        let a = self.pick_mover(c, rng, 8)?;
        let reverse = self.reverse_recipes(c.deficit, c.surplus);
        let b = self.pick_partner(c.deficit, c.surplus, &reverse, rng, 8)?;
        Some((a, b))
    }
}

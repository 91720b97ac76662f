//! Branch and bound over class-to-factory counts.
//!
//! The objective depends on the assignment only through how many members of
//! each order class go to each factory, so the search branches on those
//! counts. Node bounds are combinatorial: for every recipe the committed
//! units plus the reachable range of the unassigned classes bound each
//! cell's deviation from below, and the recipe's global deviation bounds the
//! row. An incumbent that meets the global bound is optimal without
//! branching; large instances are expected to end there.

use super::classes::{class_partition, OrderClass};
use super::delta::DeviationState;
use super::greedy::{carry_over, greedy_construct};
use super::search::Search;
use super::{SolveResult, SolveStatus, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::metrics::WmapePair;
use crate::model::{Allocation, DaySnapshot, RecipeSiteMatrix};
use crate::rng;
use rand::seq::SliceRandom;
use rand::Rng;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq)]
pub struct ExactParams {
    pub budget: Duration,
    /// Starting incumbent; carry-over of `stable_hint`, else greedy, when absent.
    pub warm_start: Option<Allocation>,
    /// Allocation whose factories members should keep when class counts permit.
    pub stable_hint: Option<Allocation>,
    pub node_limit: Option<u64>,
    pub seed: u64,
}

impl Default for ExactParams {
    fn default() -> Self {
        ExactParams {
            budget: DEFAULT_BUDGET,
            warm_start: None,
            stable_hint: None,
            node_limit: None,
            seed: 0,
        }
    }
}

impl ExactParams {
    pub fn with_budget(budget: Duration) -> ExactParams {
        ExactParams {
            budget,
            ..ExactParams::default()
        }
    }
}

/// Share of the budget spent on primal improvement before branching.
const PRIMAL_SHARE: f64 = 0.5;

pub fn exact_solve(
    day: &DaySnapshot,
    prev: &RecipeSiteMatrix,
    params: &ExactParams,
) -> Result<SolveResult> {
    let start = Instant::now();
    let deadline = start + params.budget;
    let dims = (day.n_recipes, day.n_factories);
    if prev.dims() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            actual: prev.dims(),
        });
    }
    crate::generator::check_supply(day)?;

    let (classes, of_order) = class_partition(day);
    let mut tree = Tree::new(day, prev, &classes);
    let root_bound = tree.root_bound();
    let global = tree.global_bound();

    // primal phase: warm start, carry-over of the hint, or greedy; then polishing
    let start_alloc = match (&params.warm_start, &params.stable_hint) {
        (Some(a), _) => Some(a.clone()),
        (None, Some(hint)) => carry_over(day, hint).ok(),
        (None, None) => greedy_construct(day).ok(),
    };
    let mut swaps = 0u64;
    let mut incumbent: Option<(u64, Vec<Vec<u64>>)> = None;
    if let Some(alloc) = start_alloc {
        let state = DeviationState::new(day, &alloc, prev)?;
        let mut search = Search::new(day, state);
        let primal_deadline = start + params.budget.mul_f64(PRIMAL_SHARE);
        let mut rng = rng::stream(params.seed, "exact-primal", i64::from(day.lead_day));
        swaps = polish(&mut search, root_bound, primal_deadline, &mut rng);
        let counts = class_counts(
            &classes,
            &of_order,
            search.state.assignment(),
            day.n_factories,
        );
        incumbent = Some((search.state.abs_sum(), counts));
    }

    let mut nodes = 0u64;
    let mut exhausted = false;
    let done = |inc: &Option<(u64, Vec<Vec<u64>>)>| matches!(inc, Some((v, _)) if *v <= root_bound);
    if !done(&incumbent) {
        let outcome = tree.branch(&mut incumbent, root_bound, deadline, params.node_limit);
        nodes = outcome.nodes;
        exhausted = outcome.exhausted;
    }

    let Some((value, counts)) = incumbent else {
        return Err(Error::Infeasible {
            factory: day.catch_all(),
            required: 0,
            available: 0,
        });
    };
    let assign = disaggregate(
        day,
        &classes,
        &counts,
        params.stable_hint.as_ref().or(params.warm_start.as_ref()),
    );
    let alloc = Allocation::from_dense(day, &assign);
    let cur = RecipeSiteMatrix::from_dense(day, &assign);
    let metrics = WmapePair::between(prev, &cur)?;
    debug_assert_eq!(metrics.site_numerator, value);
    debug_assert_eq!(metrics.global_numerator, global);

    let (status, lower_bound) = if value == global {
        (SolveStatus::OptimalCertified, global)
    } else if value <= root_bound || exhausted {
        (SolveStatus::OptimalExhausted, value)
    } else {
        (SolveStatus::FeasibleBudgetHit, root_bound)
    };
    Ok(SolveResult {
        allocation: alloc,
        metrics,
        status,
        lower_bound,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        nodes_explored: nodes,
        swaps_accepted: swaps,
    })
}

fn class_counts(
    classes: &[OrderClass],
    of_order: &[usize],
    assign: &[usize],
    m: usize,
) -> Vec<Vec<u64>> {
    let mut counts = vec![vec![0u64; m]; classes.len()];
    for (o, &j) in assign.iter().enumerate() {
        counts[of_order[o]][j] += 1;
    }
    counts
}

/// Order-level assignment realizing class counts.
///
/// Members first keep their hinted factory while that factory still has
/// room in the class's count; the rest fill remaining slots by ascending id.
fn disaggregate(
    day: &DaySnapshot,
    classes: &[OrderClass],
    counts: &[Vec<u64>],
    hint: Option<&Allocation>,
) -> Vec<usize> {
    let index = day.order_index();
    let mut assign = vec![usize::MAX; day.orders.len()];
    for (c, class) in classes.iter().enumerate() {
        let mut left = counts[c].clone();
        let mut pending = Vec::new();
        for id in &class.members {
            let o = index[id];
            match hint.and_then(|h| h.get(*id)).map(|f| f.index()) {
                Some(j) if j < left.len() && left[j] > 0 => {
                    left[j] -= 1;
                    assign[o] = j;
                }
                _ => pending.push(o),
            }
        }
        let mut slots = left
            .iter()
            .enumerate()
            .flat_map(|(j, &n)| std::iter::repeat_n(j, n as usize));
        for o in pending {
            assign[o] = slots.next().expect("class counts cover every member");
        }
    }
    assign
}

/// Swap and 3-cycle descent toward `target`, with sideways steps when stuck.
///
/// Returns the number of applied moves.
fn polish(search: &mut Search<'_>, target: u64, deadline: Instant, rng: &mut rng::Rng) -> u64 {
    const CONFLICT_SAMPLES: usize = 12;
    const MOVERS: usize = 4;
    const PARTNERS: usize = 192;
    const STALL_LIMIT: usize = 400;

    let m = search.state.n_factories();
    let mut applied = 0u64;
    let mut stall = 0usize;
    let mut tabu: Vec<u64> = vec![0; search.day.orders.len()];
    let mut step = 0u64;
    let mut best = search.state.abs_sum();
    let mut best_assign = search.state.assignment().to_vec();

    while search.state.abs_sum() > target && Instant::now() < deadline && stall < STALL_LIMIT {
        step += 1;
        let conflicts = search.conflicts();
        if conflicts.is_empty() {
            break;
        }
        let mut best_move: Option<(i64, Vec<(usize, usize)>)> = None;
        let consider = |d: i64,
                        mv: Vec<(usize, usize)>,
                        best_move: &mut Option<(i64, Vec<(usize, usize)>)>| {
            if best_move.as_ref().is_none_or(|(bd, _)| d < *bd) {
                *best_move = Some((d, mv));
            }
        };
        for _ in 0..CONFLICT_SAMPLES.min(conflicts.len()) {
            let c = *conflicts.choose(rng).expect("non-empty");
            let (s, d) = (c.surplus, c.deficit);
            let reverse = search.reverse_recipes(d, s);
            let mut partners: Vec<usize> = Vec::new();
            for &r in &reverse {
                partners.extend(
                    search
                        .index
                        .at_cell(r, d)
                        .iter()
                        .copied()
                        .filter(|&b| search.state.eligible(b).contains(s)),
                );
            }
            partners.sort_unstable();
            partners.dedup();
            partners.shuffle(rng);
            partners.truncate(PARTNERS);
            for _ in 0..16 {
                if let Some(b) = search.pick_partner(d, s, &[], rng, 4) {
                    partners.push(b);
                }
            }
            for _ in 0..MOVERS {
                let Some(a) = search.pick_mover(c, rng, 8) else {
                    break;
                };
                if tabu[a] > step {
                    continue;
                }
                for &b in &partners {
                    if tabu[b] > step {
                        continue;
                    }
                    let delta = search.swap_delta(a, b);
                    consider(delta, vec![(a, d), (b, s)], &mut best_move);
                }
                // a: s -> d, b: d -> x, c: x -> s
                for x in 0..m {
                    if x == s || x == d {
                        continue;
                    }
                    for _ in 0..8 {
                        let Some(b) = search.pick_partner(d, x, &[], rng, 4) else {
                            break;
                        };
                        let Some(cc) = search.pick_partner(x, s, &reverse, rng, 4) else {
                            break;
                        };
                        if tabu[b] > step || tabu[cc] > step {
                            continue;
                        }
                        let mv = vec![(a, d), (b, x), (cc, s)];
                        let delta = search.cycle_delta(&mv);
                        consider(delta, mv, &mut best_move);
                    }
                }
            }
        }
        let Some((delta, mv)) = best_move else {
            stall += 1;
            continue;
        };
        if delta >= 0 {
            for &(o, _) in &mv {
                tabu[o] = step + 10 + rng.gen_range(0..10);
            }
        }
        search.relocate_all(&mv);
        applied += 1;
        if search.state.abs_sum() < best {
            best = search.state.abs_sum();
            best_assign.copy_from_slice(search.state.assignment());
            stall = 0;
        } else {
            stall += 1;
        }
    }
    if search.state.abs_sum() > best {
        let moves: Vec<(usize, usize)> = best_assign
            .iter()
            .enumerate()
            .filter(|&(o, &j)| search.state.factory_of(o) != j)
            .map(|(o, &j)| (o, j))
            .collect();
        search.relocate_all(&moves);
    }
    applied
}

struct Outcome {
    nodes: u64,
    exhausted: bool,
}

/// Search tree state over classes with more than one eligible factory.
struct Tree<'a> {
    m: usize,
    n: usize,
    prev: &'a RecipeSiteMatrix,
    classes: &'a [OrderClass],
    /// Per class: (recipe index, multiplicity).
    recipes: Vec<Vec<(usize, i64)>>,
    /// Branching order.
    order: Vec<usize>,
    /// Units of each recipe today.
    totals: Vec<i64>,
    committed: Vec<i64>,
    rem_hi: Vec<i64>,
    rem_total: Vec<i64>,
    demand: Vec<i64>,
    /// Remaining member count per eligible-set bitmask restricted to bounded factories.
    rem_by_mask: Vec<i64>,
    masks: Vec<usize>,
    hall: bool,
}

impl<'a> Tree<'a> {
    fn new(day: &DaySnapshot, prev: &'a RecipeSiteMatrix, classes: &'a [OrderClass]) -> Tree<'a> {
        let m = day.n_factories;
        let n = day.n_recipes;
        let bounded = m - 1;
        let hall = bounded <= 16;
        let recipes: Vec<Vec<(usize, i64)>> = classes
            .iter()
            .map(|c| {
                c.recipes
                    .iter()
                    .map(|&(r, k)| (r.index(), i64::from(k)))
                    .collect()
            })
            .collect();
        let masks: Vec<usize> = classes
            .iter()
            .map(|c| {
                if hall {
                    (c.eligible.bits() & ((1u64 << bounded) - 1)) as usize
                } else {
                    0
                }
            })
            .collect();
        let mut tree = Tree {
            m,
            n,
            prev,
            classes,
            recipes,
            order: Vec::new(),
            totals: vec![0; n],
            committed: vec![0; n * m],
            rem_hi: vec![0; n * m],
            rem_total: vec![0; n],
            demand: day
                .required_counts()
                .into_iter()
                .map(|v| v as i64)
                .collect(),
            rem_by_mask: vec![0; if hall { 1 << bounded } else { 1 }],
            masks,
            hall,
        };
        for (c, class) in classes.iter().enumerate() {
            let k = class.count() as i64;
            for &(r, mult) in &tree.recipes[c] {
                tree.totals[r] += mult * k;
            }
            if class.eligible.len() == 1 {
                let j = class.eligible.indices().next().expect("non-empty");
                for &(r, mult) in &tree.recipes[c] {
                    tree.committed[r * m + j] += mult * k;
                }
                tree.demand[j] -= k;
            } else {
                tree.order.push(c);
                tree.add_remaining(c, 1);
            }
        }
        // largest unit volume first, lowest class index on ties
        tree.order.sort_by_key(|&c| {
            (
                std::cmp::Reverse(classes[c].count() as u64 * classes[c].units()),
                c,
            )
        });
        tree
    }

    fn add_remaining(&mut self, c: usize, sign: i64) {
        let k = self.classes[c].count() as i64 * sign;
        for &(r, mult) in &self.recipes[c] {
            self.rem_total[r] += mult * k;
            for j in self.classes[c].eligible.indices() {
                self.rem_hi[r * self.m + j] += mult * k;
            }
        }
        self.rem_by_mask[self.masks[c]] += k;
    }

    fn apply(&mut self, c: usize, y: &[u64], sign: i64) {
        for (j, &v) in y.iter().enumerate() {
            if v == 0 {
                continue;
            }
            let v = v as i64 * sign;
            for &(r, mult) in &self.recipes[c] {
                self.committed[r * self.m + j] += mult * v;
            }
            self.demand[j] -= v;
        }
    }

    fn global_bound(&self) -> u64 {
        (0..self.n)
            .map(|i| {
                let p: u64 = self.prev.row(i).iter().sum();
                (self.totals[i] - p as i64).unsigned_abs()
            })
            .sum()
    }

    fn root_bound(&self) -> u64 {
        self.bound()
    }

    /// Lower bound on the site numerator of any completion of the current node.
    fn bound(&self) -> u64 {
        let m = self.m;
        let mut total = 0u64;
        for i in 0..self.n {
            let p_row = self.prev.row(i);
            let prev_sum: i64 = p_row.iter().map(|&v| v as i64).sum();
            let global = (self.totals[i] - prev_sum).unsigned_abs();
            let hi_sum: i64 = (0..m).map(|j| self.rem_hi[i * m + j]).sum();
            let mut cells = 0u64;
            for (j, &p) in p_row.iter().enumerate() {
                let cell = i * m + j;
                let hi = self.rem_hi[cell];
                let lo = (self.rem_total[i] - (hi_sum - hi)).max(0);
                let lo = self.committed[cell] + lo;
                let hi = self.committed[cell] + hi;
                let p = p as i64;
                cells += if p < lo {
                    (lo - p) as u64
                } else if p > hi {
                    (p - hi) as u64
                } else {
                    0
                };
            }
            total += cells.max(global);
        }
        total
    }

    /// Every bounded subset of factories can still be filled by the remaining classes.
    fn feasible(&self) -> bool {
        let bounded = self.m - 1;
        if self.demand.iter().any(|&d| d < 0) {
            return false;
        }
        if !self.hall {
            return true;
        }
        for subset in 1usize..(1 << bounded) {
            let need: i64 = (0..bounded)
                .filter(|j| subset & (1 << j) != 0)
                .map(|j| self.demand[j])
                .sum();
            if need == 0 {
                continue;
            }
            let supply: i64 = self
                .rem_by_mask
                .iter()
                .enumerate()
                .filter(|(mask, _)| mask & subset != 0)
                .map(|(_, &n)| n)
                .sum();
            if supply < need {
                return false;
            }
        }
        true
    }

    fn leaf_value(&self) -> u64 {
        self.committed
            .iter()
            .zip(self.prev.as_slice())
            .map(|(&c, &p)| (c - p as i64).unsigned_abs())
            .sum()
    }

    /// Count vectors for class `c` that respect remaining demand, most promising first.
    fn compositions(&self, c: usize, hint: Option<&[u64]>) -> Vec<Vec<u64>> {
        let elig: Vec<usize> = self.classes[c].eligible.indices().collect();
        let k = self.classes[c].count() as u64;
        let mut out = Vec::new();
        let mut y = vec![0u64; self.m];
        fn rec(
            pos: usize,
            left: u64,
            elig: &[usize],
            demand: &[i64],
            y: &mut Vec<u64>,
            out: &mut Vec<Vec<u64>>,
        ) {
            let j = elig[pos];
            let cap = (demand[j].max(0) as u64).min(left);
            if pos + 1 == elig.len() {
                if left <= cap {
                    y[j] = left;
                    out.push(y.clone());
                    y[j] = 0;
                }
                return;
            }
            for v in (0..=cap).rev() {
                y[j] = v;
                rec(pos + 1, left - v, elig, demand, y, out);
            }
            y[j] = 0;
        }
        rec(0, k, &elig, &self.demand, &mut y, &mut out);
        let score = |y: &Vec<u64>| -> i64 {
            let mut s = 0;
            for (j, &v) in y.iter().enumerate() {
                if v == 0 {
                    continue;
                }
                for &(r, mult) in &self.recipes[c] {
                    let cell = r * self.m + j;
                    let p = self.prev.as_slice()[cell] as i64;
                    let before = self.committed[cell];
                    let after = before + mult * v as i64;
                    s += (after - p).max(0) - (before - p).max(0);
                }
            }
            s
        };
        out.sort_by_cached_key(|y| (Some(y.as_slice()) != hint, score(y)));
        out
    }

    fn branch(
        &mut self,
        incumbent: &mut Option<(u64, Vec<Vec<u64>>)>,
        root_bound: u64,
        deadline: Instant,
        node_limit: Option<u64>,
    ) -> Outcome {
        let depth_max = self.order.len();
        let mut chosen: Vec<Vec<u64>> = vec![vec![0; self.m]; self.classes.len()];
        // forced classes are fixed for good
        for (c, class) in self.classes.iter().enumerate() {
            if class.eligible.len() == 1 {
                let j = class.eligible.indices().next().expect("non-empty");
                chosen[c][j] = class.count() as u64;
            }
        }
        let mut nodes = 0u64;
        let mut stack: Vec<Frame> = Vec::new();

        let open =
            |tree: &mut Tree<'_>, depth: usize, inc: &Option<(u64, Vec<Vec<u64>>)>| -> Frame {
                let c = tree.order[depth];
                tree.add_remaining(c, -1);
                let hint = inc.as_ref().map(|(_, counts)| counts[c].as_slice());
                Frame {
                    class: c,
                    options: tree.compositions(c, hint),
                    next: 0,
                    applied: None,
                }
            };

        if depth_max == 0 {
            if self.feasible() && self.demand.iter().all(|&d| d == 0) {
                let v = self.leaf_value();
                if incumbent.as_ref().is_none_or(|(b, _)| v < *b) {
                    *incumbent = Some((v, chosen));
                }
            }
            return Outcome {
                nodes: 1,
                exhausted: true,
            };
        }
        if !self.feasible() {
            return Outcome {
                nodes: 0,
                exhausted: true,
            };
        }
        stack.push(open(self, 0, incumbent));

        while let Some(frame) = stack.last_mut() {
            if let Some(k) = frame.applied.take() {
                let c = frame.class;
                let y = frame.options[k].clone();
                self.apply(c, &y, -1);
            }
            if frame.next >= frame.options.len() {
                let c = frame.class;
                stack.pop();
                self.add_remaining(c, 1);
                continue;
            }
            nodes += 1;
            if nodes.is_multiple_of(256) && Instant::now() >= deadline {
                self.unwind(&mut stack);
                return Outcome {
                    nodes,
                    exhausted: false,
                };
            }
            if node_limit.is_some_and(|limit| nodes >= limit) {
                self.unwind(&mut stack);
                return Outcome {
                    nodes,
                    exhausted: false,
                };
            }
            let frame = stack.last_mut().expect("non-empty");
            let k = frame.next;
            frame.next += 1;
            frame.applied = Some(k);
            let c = frame.class;
            let y = frame.options[k].clone();
            self.apply(c, &y, 1);
            chosen[c].copy_from_slice(&y);

            if !self.feasible() {
                continue;
            }
            let best = incumbent.as_ref().map_or(u64::MAX, |(b, _)| *b);
            if self.bound() >= best {
                continue;
            }
            let depth = stack.len();
            if depth == depth_max {
                let v = self.leaf_value();
                if v < best {
                    *incumbent = Some((v, chosen.clone()));
                    if v <= root_bound {
                        self.unwind(&mut stack);
                        return Outcome {
                            nodes,
                            exhausted: false,
                        };
                    }
                }
                continue;
            }
            stack.push(open(self, depth, incumbent));
        }
        Outcome {
            nodes,
            exhausted: true,
        }
    }

    fn unwind(&mut self, stack: &mut Vec<Frame>) {
        while let Some(mut frame) = stack.pop() {
            if let Some(k) = frame.applied.take() {
                let y = frame.options[k].clone();
                self.apply(frame.class, &y, -1);
            }
            self.add_remaining(frame.class, 1);
        }
    }
}

struct Frame {
    class: usize,
    options: Vec<Vec<u64>>,
    next: usize,
    applied: Option<usize>,
}

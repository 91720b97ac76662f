//! Domain model: orders, factories, eligibility, capacities and allocations.
//!
//! Factories and recipes are identified by 1-based ids. The last factory of
//! every instance is the catch-all factory: it has no capacity and accepts
//! every recipe.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fmt;

/// Largest supported factory count (factory sets are stored as bitmasks).
pub const MAX_FACTORIES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecipeId(pub u32);

impl RecipeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for RecipeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FactoryId(pub u16);

impl FactoryId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub fn from_index(index: usize) -> FactoryId {
        FactoryId(index as u16 + 1)
    }
}

impl fmt::Display for FactoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.0)
    }
}

pub type OrderId = u64;

/// A set of factories, stored as a bitmask over 0-based factory indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FactorySet(u64);

impl FactorySet {
    pub const EMPTY: FactorySet = FactorySet(0);

    pub fn all(n_factories: usize) -> FactorySet {
        if n_factories >= 64 {
            FactorySet(u64::MAX)
        } else {
            FactorySet((1u64 << n_factories) - 1)
        }
    }

    pub fn from_bits(bits: u64) -> FactorySet {
        FactorySet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn contains(self, index: usize) -> bool {
        self.0 & (1u64 << index) != 0
    }

    #[inline]
    pub fn insert(&mut self, index: usize) {
        self.0 |= 1u64 << index;
    }

    #[inline]
    pub fn intersect(self, other: FactorySet) -> FactorySet {
        FactorySet(self.0 & other.0)
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// 0-based factory indices in ascending order.
    pub fn indices(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    pub fn ids(self) -> Vec<FactoryId> {
        self.indices().map(FactoryId::from_index).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Order {
    pub id: OrderId,
    pub recipes: Vec<RecipeId>,
    pub is_real: bool,
}

impl Order {
    pub fn new(id: OrderId, recipes: Vec<RecipeId>, is_real: bool) -> Order {
        Order {
            id,
            recipes,
            is_real,
        }
    }

    /// Recipe multiset as sorted `(recipe, multiplicity)` pairs.
    pub fn recipe_counts(&self) -> Vec<(RecipeId, u32)> {
        let mut sorted = self.recipes.clone();
        sorted.sort_unstable();
        let mut out: Vec<(RecipeId, u32)> = Vec::with_capacity(sorted.len());
        for r in sorted {
            match out.last_mut() {
                Some((last, n)) if *last == r => *n += 1,
                _ => out.push((r, 1)),
            }
        }
        out
    }
}

/// Recipe-by-factory eligibility. The catch-all column is always true.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EligibilityTable {
    n_factories: usize,
    masks: Vec<FactorySet>,
}

impl EligibilityTable {
    /// Table in which every recipe is eligible everywhere.
    pub fn unconstrained(n_recipes: usize, n_factories: usize) -> Result<EligibilityTable> {
        check_factory_count(n_factories)?;
        Ok(EligibilityTable {
            n_factories,
            masks: vec![FactorySet::all(n_factories); n_recipes],
        })
    }

    /// Build from a dense `[recipe][factory]` matrix.
    pub fn from_matrix(matrix: &[Vec<bool>]) -> Result<EligibilityTable> {
        let n_factories = matrix.first().map(Vec::len).unwrap_or(0);
        check_factory_count(n_factories)?;
        let mut masks = Vec::with_capacity(matrix.len());
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n_factories {
                return Err(Error::InvalidInstance(format!(
                    "eligibility row {} has {} columns, expected {}",
                    i + 1,
                    row.len(),
                    n_factories
                )));
            }
            if !row[n_factories - 1] {
                return Err(Error::InvalidInstance(format!(
                    "recipe {} is not eligible at the catch-all factory",
                    i + 1
                )));
            }
            let mut set = FactorySet::EMPTY;
            for (j, &ok) in row.iter().enumerate() {
                if ok {
                    set.insert(j);
                }
            }
            masks.push(set);
        }
        Ok(EligibilityTable { n_factories, masks })
    }

    /// Build from per-recipe factory sets; the catch-all factory is added to each.
    pub fn from_sets(sets: Vec<FactorySet>, n_factories: usize) -> Result<EligibilityTable> {
        check_factory_count(n_factories)?;
        let catch_all = n_factories - 1;
        let masks = sets
            .into_iter()
            .map(|mut s| {
                s = s.intersect(FactorySet::all(n_factories));
                s.insert(catch_all);
                s
            })
            .collect();
        Ok(EligibilityTable { n_factories, masks })
    }

    pub fn n_recipes(&self) -> usize {
        self.masks.len()
    }

    pub fn n_factories(&self) -> usize {
        self.n_factories
    }

    pub fn is_eligible(&self, recipe: RecipeId, factory: FactoryId) -> bool {
        self.masks[recipe.index()].contains(factory.index())
    }

    pub fn recipe_set(&self, recipe: RecipeId) -> Option<FactorySet> {
        if recipe.0 == 0 {
            return None;
        }
        self.masks.get(recipe.index()).copied()
    }

    pub fn to_matrix(&self) -> Vec<Vec<bool>> {
        self.masks
            .iter()
            .map(|s| (0..self.n_factories).map(|j| s.contains(j)).collect())
            .collect()
    }
}

fn check_factory_count(n_factories: usize) -> Result<()> {
    if n_factories == 0 || n_factories > MAX_FACTORIES {
        return Err(Error::InvalidInstance(format!(
            "factory count must be in 1..={MAX_FACTORIES}, got {n_factories}"
        )));
    }
    Ok(())
}

/// Factories at which every recipe of `order` is eligible.
///
/// The catch-all factory is always part of the result.
pub fn order_eligible_factories(order: &Order, table: &EligibilityTable) -> Result<FactorySet> {
    let mut set = FactorySet::all(table.n_factories());
    for &r in &order.recipes {
        let s = table.recipe_set(r).ok_or_else(|| {
            Error::InvalidInstance(format!(
                "order {} references recipe {} outside 1..={}",
                order.id,
                r,
                table.n_recipes()
            ))
        })?;
        set = set.intersect(s);
    }
    Ok(set)
}

/// Per-factory capacity; `None` marks the catch-all factory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CapacityVector(Vec<Option<u64>>);

impl CapacityVector {
    /// Bounded capacities for factories `1..m`; factory `m` becomes the catch-all.
    pub fn new(bounded: Vec<u64>) -> CapacityVector {
        let mut caps: Vec<Option<u64>> = bounded.into_iter().map(Some).collect();
        caps.push(None);
        CapacityVector(caps)
    }

    pub fn from_options(caps: Vec<Option<u64>>) -> Result<CapacityVector> {
        match caps.split_last() {
            Some((None, rest)) if rest.iter().all(Option::is_some) => Ok(CapacityVector(caps)),
            _ => Err(Error::InvalidInstance(
                "capacities must be bounded for every factory except the last, which must be null"
                    .into(),
            )),
        }
    }

    pub fn n_factories(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, factory: FactoryId) -> Option<u64> {
        self.0.get(factory.index()).copied().flatten()
    }

    pub fn as_slice(&self) -> &[Option<u64>] {
        &self.0
    }

    /// Capacities of factories `1..m`, in order.
    pub fn bounded(&self) -> Vec<u64> {
        self.0.iter().filter_map(|c| *c).collect()
    }

    pub fn bounded_total(&self) -> u64 {
        self.0.iter().filter_map(|c| *c).sum()
    }

    pub fn set(&mut self, factory: FactoryId, capacity: u64) -> Result<()> {
        let last = self.0.len() - 1;
        match factory.index() {
            i if i < last => {
                self.0[i] = Some(capacity);
                Ok(())
            }
            _ => Err(Error::InvalidConfig(format!(
                "{factory} is not a bounded factory"
            ))),
        }
    }
}

/// One lead day's order book together with capacities and eligibility.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DaySnapshot {
    pub lead_day: i32,
    pub n_recipes: usize,
    pub n_factories: usize,
    pub orders: Vec<Order>,
    pub capacities: CapacityVector,
    pub eligibility: EligibilityTable,
}

impl DaySnapshot {
    pub fn new(
        lead_day: i32,
        orders: Vec<Order>,
        capacities: CapacityVector,
        eligibility: EligibilityTable,
    ) -> Result<DaySnapshot> {
        let day = DaySnapshot {
            lead_day,
            n_recipes: eligibility.n_recipes(),
            n_factories: eligibility.n_factories(),
            orders,
            capacities,
            eligibility,
        };
        day.check()?;
        Ok(day)
    }

    fn check(&self) -> Result<()> {
        if self.capacities.n_factories() != self.n_factories {
            return Err(Error::InvalidInstance(format!(
                "{} capacities for {} factories",
                self.capacities.n_factories(),
                self.n_factories
            )));
        }
        let mut seen = HashSet::with_capacity(self.orders.len());
        for o in &self.orders {
            if !seen.insert(o.id) {
                return Err(Error::InvalidInstance(format!(
                    "duplicate order id {}",
                    o.id
                )));
            }
            if o.recipes.is_empty() {
                return Err(Error::InvalidInstance(format!(
                    "order {} has no recipes",
                    o.id
                )));
            }
            if let Some(r) = o
                .recipes
                .iter()
                .find(|r| r.0 == 0 || r.0 as usize > self.n_recipes)
            {
                return Err(Error::InvalidInstance(format!(
                    "order {} references recipe {} outside 1..={}",
                    o.id, r, self.n_recipes
                )));
            }
        }
        if self.capacities.bounded_total() > self.orders.len() as u64 {
            return Err(Error::InvalidInstance(format!(
                "bounded capacity {} exceeds order count {}",
                self.capacities.bounded_total(),
                self.orders.len()
            )));
        }
        Ok(())
    }

    pub fn catch_all(&self) -> FactoryId {
        FactoryId(self.n_factories as u16)
    }

    /// Eligible factory set of every order, aligned with `orders`.
    pub fn eligible_sets(&self) -> Vec<FactorySet> {
        self.orders
            .iter()
            .map(|o| {
                order_eligible_factories(o, &self.eligibility)
                    .expect("snapshot recipes are validated on construction")
            })
            .collect()
    }

    /// Number of orders each factory must receive; the catch-all takes the rest.
    pub fn required_counts(&self) -> Vec<u64> {
        let bounded = self.capacities.bounded();
        let rest = self.orders.len() as u64 - bounded.iter().sum::<u64>();
        bounded.into_iter().chain(std::iter::once(rest)).collect()
    }

    pub fn total_units(&self) -> u64 {
        self.orders.iter().map(|o| o.recipes.len() as u64).sum()
    }

    pub fn real_count(&self) -> usize {
        self.orders.iter().filter(|o| o.is_real).count()
    }

    pub fn order_index(&self) -> BTreeMap<OrderId, usize> {
        self.orders
            .iter()
            .enumerate()
            .map(|(i, o)| (o.id, i))
            .collect()
    }
}

/// Order-to-factory assignment for one day.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Allocation {
    pub lead_day: i32,
    pub assignments: BTreeMap<OrderId, FactoryId>,
}

impl Allocation {
    pub fn new(lead_day: i32) -> Allocation {
        Allocation {
            lead_day,
            assignments: BTreeMap::new(),
        }
    }

    /// Build from 0-based factory indices aligned with `day.orders`.
    pub fn from_dense(day: &DaySnapshot, factories: &[usize]) -> Allocation {
        debug_assert_eq!(day.orders.len(), factories.len());
        Allocation {
            lead_day: day.lead_day,
            assignments: day
                .orders
                .iter()
                .zip(factories)
                .map(|(o, &j)| (o.id, FactoryId::from_index(j)))
                .collect(),
        }
    }

    /// 0-based factory index per order of `day`; fails on unassigned orders.
    pub fn to_dense(&self, day: &DaySnapshot) -> Result<Vec<usize>> {
        let report = validate_allocation(day, self);
        if !report.is_empty() {
            return Err(Error::InvalidAllocation(Box::new(report)));
        }
        Ok(day
            .orders
            .iter()
            .map(|o| self.assignments[&o.id].index())
            .collect())
    }

    pub fn get(&self, id: OrderId) -> Option<FactoryId> {
        self.assignments.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Number of orders assigned to each factory.
    pub fn factory_counts(&self, n_factories: usize) -> Vec<u64> {
        let mut counts = vec![0u64; n_factories];
        for f in self.assignments.values() {
            if let Some(c) = counts.get_mut(f.index()) {
                *c += 1;
            }
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityViolation {
    pub factory: FactoryId,
    pub assigned: u64,
    pub required: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub capacity_violations: Vec<CapacityViolation>,
    pub eligibility_violations: Vec<(OrderId, FactoryId)>,
    pub unassigned_or_duplicate: Vec<OrderId>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.capacity_violations.is_empty()
            && self.eligibility_violations.is_empty()
            && self.unassigned_or_duplicate.is_empty()
    }

    pub fn violation_count(&self) -> usize {
        self.capacity_violations.len()
            + self.eligibility_violations.len()
            + self.unassigned_or_duplicate.len()
    }
}

/// Collects every violated capacity, eligibility and assignment constraint.
///
/// Assignments to order ids that are not part of the day, or to factory ids
/// outside the instance, are reported under `unassigned_or_duplicate`.
pub fn validate_allocation(day: &DaySnapshot, alloc: &Allocation) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut counts = vec![0u64; day.n_factories];
    let mut known = HashSet::with_capacity(day.orders.len());

    for order in &day.orders {
        known.insert(order.id);
        let Some(&factory) = alloc.assignments.get(&order.id) else {
            report.unassigned_or_duplicate.push(order.id);
            continue;
        };
        if factory.0 == 0 || factory.index() >= day.n_factories {
            report.unassigned_or_duplicate.push(order.id);
            continue;
        }
        counts[factory.index()] += 1;
        let eligible = order_eligible_factories(order, &day.eligibility)
            .map(|s| s.contains(factory.index()))
            .unwrap_or(false);
        if !eligible {
            report.eligibility_violations.push((order.id, factory));
        }
    }
    for id in alloc.assignments.keys() {
        if !known.contains(id) {
            report.unassigned_or_duplicate.push(*id);
        }
    }
    for (j, cap) in day.capacities.as_slice().iter().enumerate() {
        if let Some(required) = *cap {
            if counts[j] != required {
                report.capacity_violations.push(CapacityViolation {
                    factory: FactoryId::from_index(j),
                    assigned: counts[j],
                    required,
                });
            }
        }
    }
    report.unassigned_or_duplicate.sort_unstable();
    report
}

/// Dense recipe-by-factory unit counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecipeSiteMatrix {
    n_recipes: usize,
    n_factories: usize,
    data: Vec<u64>,
}

impl RecipeSiteMatrix {
    pub fn zeros(n_recipes: usize, n_factories: usize) -> RecipeSiteMatrix {
        RecipeSiteMatrix {
            n_recipes,
            n_factories,
            data: vec![0; n_recipes * n_factories],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<RecipeSiteMatrix> {
        let n_factories = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != n_factories) {
            return Err(Error::InvalidInstance("ragged matrix rows".into()));
        }
        Ok(RecipeSiteMatrix {
            n_recipes: rows.len(),
            n_factories,
            data: rows.concat(),
        })
    }

    /// Matrix from 0-based factory indices aligned with `day.orders`, without validation.
    pub fn from_dense(day: &DaySnapshot, factories: &[usize]) -> RecipeSiteMatrix {
        let mut m = RecipeSiteMatrix::zeros(day.n_recipes, day.n_factories);
        for (order, &j) in day.orders.iter().zip(factories) {
            for r in &order.recipes {
                m.data[r.index() * m.n_factories + j] += 1;
            }
        }
        m
    }

    pub fn n_recipes(&self) -> usize {
        self.n_recipes
    }

    pub fn n_factories(&self) -> usize {
        self.n_factories
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_recipes, self.n_factories)
    }

    /// Entry for 0-based recipe and factory indices.
    #[inline]
    pub fn at(&self, recipe: usize, factory: usize) -> u64 {
        self.data[recipe * self.n_factories + factory]
    }

    pub fn get(&self, recipe: RecipeId, factory: FactoryId) -> u64 {
        self.at(recipe.index(), factory.index())
    }

    #[inline]
    pub fn at_mut(&mut self, recipe: usize, factory: usize) -> &mut u64 {
        &mut self.data[recipe * self.n_factories + factory]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.data
    }

    pub fn total(&self) -> u64 {
        self.data.iter().sum()
    }

    pub fn row(&self, recipe: usize) -> &[u64] {
        &self.data[recipe * self.n_factories..(recipe + 1) * self.n_factories]
    }
}

/// Units of each recipe per factory under `alloc`.
pub fn recipe_site_matrix(day: &DaySnapshot, alloc: &Allocation) -> Result<RecipeSiteMatrix> {
    let dense = alloc.to_dense(day)?;
    Ok(RecipeSiteMatrix::from_dense(day, &dense))
}

/// Row sums of the matrix: units of each recipe across all factories.
pub fn aggregate_recipe_vector(matrix: &RecipeSiteMatrix) -> Vec<u64> {
    (0..matrix.n_recipes())
        .map(|i| matrix.row(i).iter().sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rids(v: &[u32]) -> Vec<RecipeId> {
        v.iter().map(|&r| RecipeId(r)).collect()
    }

    /// Recipe groups 1-29 F1, 30-49 F1+F2, 50-89 F2, 90-100 catch-all only.
    fn group_table() -> EligibilityTable {
        let sets = (1..=100u32)
            .map(|r| {
                let mut s = FactorySet::EMPTY;
                if r <= 49 {
                    s.insert(0);
                }
                if (30..=89).contains(&r) {
                    s.insert(1);
                }
                s
            })
            .collect();
        EligibilityTable::from_sets(sets, 3).unwrap()
    }

    fn ld12() -> DaySnapshot {
        let rows: [(&[u32], bool); 10] = [
            (&[30], true),
            (&[8, 5, 24], true),
            (&[22], true),
            (&[87], true),
            (&[52, 51, 55, 63], false),
            (&[82, 88], false),
            (&[85], false),
            (&[84, 76], false),
            (&[93, 1, 36, 76], false),
            (&[28, 95, 20], false),
        ];
        let orders = rows
            .iter()
            .enumerate()
            .map(|(i, (r, real))| Order::new(i as u64 + 1, rids(r), *real))
            .collect();
        DaySnapshot::new(-12, orders, CapacityVector::new(vec![2, 5]), group_table()).unwrap()
    }

    fn ld12_solution() -> Allocation {
        let mut a = Allocation::new(-12);
        for (ids, f) in [
            (&[2u64, 3][..], 1u16),
            (&[1, 4, 5, 6, 8], 2),
            (&[7, 9, 10], 3),
        ] {
            for &id in ids {
                a.assignments.insert(id, FactoryId(f));
            }
        }
        a
    }

    #[test]
    fn eligible_factories_follow_recipe_groups() {
        let t = group_table();
        let all = order_eligible_factories(&Order::new(1, rids(&[30]), true), &t).unwrap();
        assert_eq!(all.ids(), vec![FactoryId(1), FactoryId(2), FactoryId(3)]);
        let only =
            order_eligible_factories(&Order::new(9, rids(&[93, 1, 36, 76]), false), &t).unwrap();
        assert_eq!(only.ids(), vec![FactoryId(3)]);
        let free = EligibilityTable::unconstrained(5, 4).unwrap();
        let s = order_eligible_factories(&Order::new(1, rids(&[1, 5]), true), &free).unwrap();
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn out_of_range_recipe_is_rejected() {
        let t = group_table();
        let err = order_eligible_factories(&Order::new(1, rids(&[101]), true), &t);
        assert!(matches!(err, Err(Error::InvalidInstance(_))));
        let err = order_eligible_factories(&Order::new(1, rids(&[0]), true), &t);
        assert!(matches!(err, Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn catch_all_column_must_be_true() {
        let err = EligibilityTable::from_matrix(&[vec![true, false]]);
        assert!(err.is_err());
        let ok = EligibilityTable::from_matrix(&[vec![false, true]]).unwrap();
        assert!(!ok.is_eligible(RecipeId(1), FactoryId(1)));
    }

    #[test]
    fn published_ld12_solution_is_feasible() {
        let report = validate_allocation(&ld12(), &ld12_solution());
        assert!(report.is_empty(), "{report:?}");
    }

    #[test]
    fn capacity_mismatch_is_reported() {
        let mut day = ld12();
        day.capacities = CapacityVector::new(vec![3, 5]);
        let report = validate_allocation(&day, &ld12_solution());
        assert_eq!(
            report.capacity_violations,
            vec![CapacityViolation {
                factory: FactoryId(1),
                assigned: 2,
                required: 3
            }]
        );
        assert!(report.eligibility_violations.is_empty());
    }

    #[test]
    fn ineligible_assignment_is_reported() {
        let mut alloc = ld12_solution();
        alloc.assignments.insert(9, FactoryId(1));
        let report = validate_allocation(&ld12(), &alloc);
        assert_eq!(report.eligibility_violations, vec![(9, FactoryId(1))]);
    }

    #[test]
    fn missing_and_unknown_orders_are_reported() {
        let mut alloc = ld12_solution();
        alloc.assignments.remove(&7);
        alloc.assignments.insert(42, FactoryId(3));
        let report = validate_allocation(&ld12(), &alloc);
        assert_eq!(report.unassigned_or_duplicate, vec![7, 42]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let orders = vec![
            Order::new(1, rids(&[1]), true),
            Order::new(1, rids(&[2]), true),
        ];
        let err = DaySnapshot::new(
            -3,
            orders,
            CapacityVector::new(vec![]),
            EligibilityTable::unconstrained(2, 1).unwrap(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn multiplicity_is_counted() {
        let day = DaySnapshot::new(
            -5,
            vec![Order::new(1, rids(&[7, 7]), true)],
            CapacityVector::new(vec![0, 1]),
            EligibilityTable::unconstrained(10, 3).unwrap(),
        )
        .unwrap();
        let mut alloc = Allocation::new(-5);
        alloc.assignments.insert(1, FactoryId(2));
        let m = recipe_site_matrix(&day, &alloc).unwrap();
        assert_eq!(m.get(RecipeId(7), FactoryId(2)), 2);
        assert_eq!(m.total(), 2);
        assert_eq!(aggregate_recipe_vector(&m)[6], 2);
    }

    #[test]
    fn invalid_allocation_has_no_matrix() {
        let mut alloc = ld12_solution();
        alloc.assignments.insert(9, FactoryId(1));
        match recipe_site_matrix(&ld12(), &alloc) {
            Err(Error::InvalidAllocation(r)) => assert_eq!(r.eligibility_violations.len(), 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_matrix_aggregates_to_zero() {
        let m = RecipeSiteMatrix::zeros(4, 3);
        assert_eq!(aggregate_recipe_vector(&m), vec![0; 4]);
    }

    #[test]
    fn factory_set_iteration() {
        let mut s = FactorySet::EMPTY;
        s.insert(2);
        s.insert(0);
        assert_eq!(s.indices().collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(FactorySet::all(3).len(), 3);
    }
}

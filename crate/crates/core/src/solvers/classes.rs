//! Orders with equal recipe multisets and eligibility are interchangeable.

use crate::model::{DaySnapshot, FactorySet, OrderId, RecipeId};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderClass {
    /// Sorted `(recipe, multiplicity)` pairs.
    pub recipes: Vec<(RecipeId, u32)>,
    pub eligible: FactorySet,
    /// Member ids in ascending order.
    pub members: Vec<OrderId>,
}

impl OrderClass {
    pub fn count(&self) -> usize {
        self.members.len()
    }

    pub fn units(&self) -> u64 {
        self.recipes.iter().map(|&(_, k)| u64::from(k)).sum()
    }
}

/// Partition of the day's orders, classes ordered by their smallest member id.
pub fn class_aggregate(day: &DaySnapshot) -> Vec<OrderClass> {
    class_partition(day).0
}

/// Classes together with the class index of every order of `day.orders`.
pub(crate) fn class_partition(day: &DaySnapshot) -> (Vec<OrderClass>, Vec<usize>) {
    let sets = day.eligible_sets();
    let mut order: Vec<usize> = (0..day.orders.len()).collect();
    order.sort_by_key(|&o| day.orders[o].id);

    let mut lookup: HashMap<(Vec<(RecipeId, u32)>, FactorySet), usize> = HashMap::new();
    let mut classes: Vec<OrderClass> = Vec::new();
    let mut of_order = vec![0; day.orders.len()];
    for o in order {
        let key = (day.orders[o].recipe_counts(), sets[o]);
        let c = *lookup.entry(key.clone()).or_insert_with(|| {
            classes.push(OrderClass {
                recipes: key.0,
                eligible: key.1,
                members: Vec::new(),
            });
            classes.len() - 1
        });
        classes[c].members.push(day.orders[o].id);
        of_order[o] = c;
    }
    (classes, of_order)
}

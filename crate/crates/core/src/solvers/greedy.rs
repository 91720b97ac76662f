use crate::error::{Error, Result};
use crate::model::{Allocation, DaySnapshot, FactoryId, FactorySet};

/// Fills bounded factories one after another, then sends the rest to the catch-all.
///
/// Factory `j` takes the unassigned orders eligible at `j` with the fewest
/// eligible factories among those not yet filled, ties broken by lowest
/// order id.
pub fn greedy_construct(day: &DaySnapshot) -> Result<Allocation> {
    let assigned = vec![None; day.orders.len()];
    fill(day, assigned)
}

/// Keeps yesterday's factory for every order that is still eligible there.
///
/// When a factory has more kept orders than capacity, the lowest ids are
/// evicted first. Residual capacity is then filled as in
/// [`greedy_construct`], with evicted orders competing like new ones; what
/// remains goes to the catch-all.
pub fn carry_over(day: &DaySnapshot, prev_alloc: &Allocation) -> Result<Allocation> {
    let sets = day.eligible_sets();
    let required = day.required_counts();
    let catch_all = day.n_factories - 1;
    let mut assigned: Vec<Option<usize>> = vec![None; day.orders.len()];
    let mut kept: Vec<Vec<usize>> = vec![Vec::new(); day.n_factories];
    for (o, order) in day.orders.iter().enumerate() {
        if let Some(f) = prev_alloc.get(order.id) {
            let j = f.index();
            if j < day.n_factories && sets[o].contains(j) {
                kept[j].push(o);
            }
        }
    }
    for (j, mut list) in kept.into_iter().enumerate() {
        list.sort_by_key(|&o| std::cmp::Reverse(day.orders[o].id));
        if j != catch_all {
            list.truncate(required[j] as usize);
        }
        for o in list {
            assigned[o] = Some(j);
        }
    }
    // catch-all members stay only if the bounded factories can do without them
    for slot in assigned.iter_mut() {
        if *slot == Some(catch_all) {
            *slot = None;
        }
    }
    let keep_catch_all: Vec<bool> = day
        .orders
        .iter()
        .map(|o| prev_alloc.get(o.id).map(|f| f.index()) == Some(catch_all))
        .collect();
    fill_preferring(day, assigned, &keep_catch_all, true)
}

fn fill(day: &DaySnapshot, assigned: Vec<Option<usize>>) -> Result<Allocation> {
    fill_preferring(day, assigned, &vec![false; day.orders.len()], false)
}

/// Greedy completion; orders flagged in `hold_back` are taken last and, with
/// `real_first`, real orders before simulated ones.
fn fill_preferring(
    day: &DaySnapshot,
    mut assigned: Vec<Option<usize>>,
    hold_back: &[bool],
    real_first: bool,
) -> Result<Allocation> {
    let sets = day.eligible_sets();
    let required = day.required_counts();
    let catch_all = day.n_factories - 1;
    let mut counts = vec![0u64; day.n_factories];
    for j in assigned.iter().flatten() {
        counts[*j] += 1;
    }
    for (j, &need) in required.iter().enumerate().take(catch_all) {
        let need = need.saturating_sub(counts[j]);
        let open =
            FactorySet::from_bits(FactorySet::all(day.n_factories).bits() & !((1u64 << j) - 1));
        let mut candidates: Vec<usize> = (0..day.orders.len())
            .filter(|&o| assigned[o].is_none() && sets[o].contains(j))
            .collect();
        candidates.sort_by_key(|&o| {
            let order = &day.orders[o];
            (
                hold_back[o],
                real_first && !order.is_real,
                sets[o].intersect(open).len(),
                order.id,
            )
        });
        for &o in candidates.iter().take(need as usize) {
            assigned[o] = Some(j);
            counts[j] += 1;
        }
    }
    for j in 0..catch_all {
        while counts[j] < required[j] {
            if !augment(j, &sets, &mut assigned, &mut counts, catch_all) {
                return Err(Error::Infeasible {
                    factory: FactoryId::from_index(j),
                    required: required[j],
                    available: counts[j],
                });
            }
        }
    }
    let dense: Vec<usize> = assigned
        .into_iter()
        .map(|a| a.unwrap_or(catch_all))
        .collect();
    Ok(Allocation::from_dense(day, &dense))
}

/// Gives bounded factory `short` one more order by shifting orders along a
/// chain of bounded factories that ends at an unassigned eligible order.
///
/// Returns false when no chain exists, i.e. the capacities cannot all be met.
fn augment(
    short: usize,
    sets: &[FactorySet],
    assigned: &mut [Option<usize>],
    counts: &mut [u64],
    catch_all: usize,
) -> bool {
    // parent[k] = (factory that takes an order from k, the order moved)
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; catch_all];
    let mut seen = vec![false; catch_all];
    let mut queue = std::collections::VecDeque::from([short]);
    seen[short] = true;
    while let Some(j) = queue.pop_front() {
        if let Some(free) =
            (0..assigned.len()).find(|&o| assigned[o].is_none() && sets[o].contains(j))
        {
            let (mut at, mut order) = (j, free);
            loop {
                assigned[order] = Some(at);
                match parent[at] {
                    Some((to, moved)) => {
                        order = moved;
                        at = to;
                    }
                    None => break,
                }
            }
            counts[short] += 1;
            return true;
        }
        for k in 0..catch_all {
            if seen[k] {
                continue;
            }
            if let Some(o) =
                (0..assigned.len()).find(|&o| assigned[o] == Some(k) && sets[o].contains(j))
            {
                seen[k] = true;
                parent[k] = Some((j, o));
                queue.push_back(k);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate_day, GeneratorConfig};
    use crate::model::{validate_allocation, CapacityVector, EligibilityTable, Order, RecipeId};
    use crate::testkit::{ld11, ld12, ld12_solution, members};

    #[test]
    fn published_example() {
        let day = ld12();
        let alloc = greedy_construct(&day).unwrap();
        assert!(validate_allocation(&day, &alloc).is_empty());
        assert_eq!(members(&alloc, 1), vec![2, 3]);
        let f2 = members(&alloc, 2);
        assert_eq!(f2.len(), 5);
        assert!(f2.contains(&1) && f2.contains(&4));
        assert!(f2.iter().all(|id| [1, 4, 5, 6, 7, 8].contains(id)));
        assert!(members(&alloc, 3).contains(&9));
        assert!(members(&alloc, 3).contains(&10));
    }

    #[test]
    fn catch_all_only() {
        let orders = (1..=5)
            .map(|i| Order::new(i, vec![RecipeId(3)], false))
            .collect();
        let table = EligibilityTable::from_sets(vec![FactorySet::EMPTY; 3], 3).unwrap();
        let day = DaySnapshot::new(-3, orders, CapacityVector::new(vec![0, 0]), table).unwrap();
        let alloc = greedy_construct(&day).unwrap();
        assert_eq!(members(&alloc, 3), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn shortage_names_factory() {
        let mut day = ld12();
        day.capacities = CapacityVector::new(vec![4, 2]);
        match greedy_construct(&day) {
            Err(Error::Infeasible {
                factory,
                required,
                available,
            }) => {
                assert_eq!(factory, FactoryId(1));
                assert_eq!((required, available), (4, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn default_instance_fills_capacities() {
        let config = GeneratorConfig {
            seed: 17,
            ..GeneratorConfig::default()
        };
        let day = generate_day(&config, -11).unwrap();
        let alloc = greedy_construct(&day).unwrap();
        assert!(validate_allocation(&day, &alloc).is_empty());
        assert_eq!(alloc.factory_counts(3), vec![2500, 5000, 2500]);
    }

    #[test]
    fn carry_over_keeps_carried_orders() {
        let alloc = carry_over(&ld11(), &ld12_solution()).unwrap();
        assert!(validate_allocation(&ld11(), &alloc).is_empty());
        for id in 1..=4 {
            assert_eq!(alloc.get(id), ld12_solution().get(id));
        }
    }

    #[test]
    fn carry_over_of_same_day_is_identity() {
        let alloc = carry_over(&ld12(), &ld12_solution()).unwrap();
        assert_eq!(alloc, ld12_solution());
    }

    #[test]
    fn carry_over_moves_a_kept_order_when_it_must() {
        // A stays at F1 from yesterday, but only A can serve F2
        let table =
            EligibilityTable::from_matrix(&[vec![true, true, true], vec![true, false, true]])
                .unwrap();
        let orders = vec![
            Order::new(1, vec![RecipeId(1)], true),
            Order::new(2, vec![RecipeId(2)], true),
        ];
        let day = DaySnapshot::new(-5, orders, CapacityVector::new(vec![1, 1]), table).unwrap();
        let prev = Allocation::from_dense(&day, &[0, 2]);
        let alloc = carry_over(&day, &prev).unwrap();
        assert!(validate_allocation(&day, &alloc).is_empty());
        assert_eq!(alloc.to_dense(&day).unwrap(), vec![1, 0]);
    }

    #[test]
    fn carry_over_evicts_lowest_ids() {
        let mut day = ld12();
        day.capacities = CapacityVector::new(vec![1, 6]);
        let alloc = carry_over(&day, &ld12_solution()).unwrap();
        assert!(validate_allocation(&day, &alloc).is_empty());
        // orders 2 and 3 were at F1; 2 is evicted
        assert_eq!(members(&alloc, 1), vec![3]);
    }
}

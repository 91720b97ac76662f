//! Small hand-written instances used in tests, docs and the CLI smoke runs.

use crate::generator::GeneratorConfig;
use crate::model::{
    Allocation, CapacityVector, DaySnapshot, EligibilityTable, FactoryId, Order, OrderId, RecipeId,
};

fn order(id: OrderId, recipes: &[u32], is_real: bool) -> Order {
    Order::new(id, recipes.iter().map(|&r| RecipeId(r)).collect(), is_real)
}

fn allocation(lead_day: i32, groups: &[(u16, &[OrderId])]) -> Allocation {
    let mut a = Allocation::new(lead_day);
    for &(f, ids) in groups {
        for &id in ids {
            a.assignments.insert(id, FactoryId(f));
        }
    }
    a
}

/// Two consecutive days of five orders over ten unconstrained recipes.
pub fn two_day_example() -> ((DaySnapshot, Allocation), (DaySnapshot, Allocation)) {
    let table = EligibilityTable::unconstrained(10, 3).expect("three factories");
    let caps = CapacityVector::new(vec![2, 2]);
    let ld15 = DaySnapshot::new(
        -15,
        vec![
            order(1, &[1, 10], true),
            order(2, &[2, 3, 5], true),
            order(3, &[4, 6], true),
            order(4, &[2, 3, 7], true),
            order(5, &[3, 5, 9], true),
        ],
        caps.clone(),
        table.clone(),
    )
    .expect("valid example");
    let ld14 = DaySnapshot::new(
        -14,
        vec![
            order(1, &[2, 5], true),
            order(2, &[2, 6, 7], true),
            order(3, &[3, 5, 9], true),
            order(4, &[4, 6, 8], true),
            order(5, &[5, 9, 10], true),
        ],
        caps,
        table,
    )
    .expect("valid example");
    let a15 = allocation(-15, &[(1, &[1, 2]), (2, &[3, 4]), (3, &[5])]);
    let a14 = allocation(-14, &[(1, &[1, 3]), (2, &[4, 5]), (3, &[2])]);
    ((ld15, a15), (ld14, a14))
}

fn grouped_day(lead_day: i32, rows: &[(&[u32], bool)]) -> DaySnapshot {
    let config = GeneratorConfig::default();
    let orders = rows
        .iter()
        .enumerate()
        .map(|(i, (r, real))| order(i as OrderId + 1, r, *real))
        .collect();
    DaySnapshot::new(
        lead_day,
        orders,
        CapacityVector::new(vec![2, 5]),
        config.eligibility().expect("default groups"),
    )
    .expect("valid example")
}

/// Ten orders at LD12, 46% real, under the default recipe groups.
pub fn ld12() -> DaySnapshot {
    grouped_day(
        -12,
        &[
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
        ],
    )
}

/// The following day, LD11, 52% real. Orders 1-4 are carried over.
pub fn ld11() -> DaySnapshot {
    grouped_day(
        -11,
        &[
            (&[30], true),
            (&[8, 5, 24], true),
            (&[22], true),
            (&[87], true),
            (&[74], true),
            (&[85], false),
            (&[89, 73, 86], false),
            (&[54, 52], false),
            (&[100, 99], false),
            (&[91, 13], false),
        ],
    )
}

pub fn ld12_solution() -> Allocation {
    allocation(
        -12,
        &[(1, &[2, 3]), (2, &[1, 4, 5, 6, 8]), (3, &[7, 9, 10])],
    )
}

pub fn ld11_solution() -> Allocation {
    allocation(
        -11,
        &[(1, &[2, 3]), (2, &[1, 4, 5, 7, 8]), (3, &[6, 9, 10])],
    )
}

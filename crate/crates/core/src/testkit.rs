pub use crate::fixtures::{ld11, ld11_solution, ld12, ld12_solution};

use crate::model::{Allocation, FactoryId, OrderId};

/// Sorted order ids assigned to factory `f`.
pub fn members(alloc: &Allocation, f: u16) -> Vec<OrderId> {
    alloc
        .assignments
        .iter()
        .filter(|(_, &j)| j == FactoryId(f))
        .map(|(&id, _)| id)
        .collect()
}

//! JSON files for instances and allocations.
//!
//! An instance file holds one day object or an array of them:
//!
//! ```json
//! { "lead_day": -12, "n_recipes": 100, "n_factories": 3,
//!   "capacities": [2500, 5000, null],
//!   "eligibility_groups": [[1, 29], [30, 49], [50, 89], [90, 100]],
//!   "orders": [{ "id": 1, "recipes": [30], "is_real": true }] }
//! ```
//!
//! `eligibility_matrix` (rows per recipe, columns per factory) may replace
//! `eligibility_groups`. Allocation files map order ids to 1-based factories:
//! `{ "lead_day": -12, "assignments": { "1": 2 } }`.

use crate::error::{Error, Result};
use crate::generator::derive_eligibility;
use crate::model::{Allocation, CapacityVector, DaySnapshot, EligibilityTable, Order};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub lead_day: i32,
    pub n_recipes: usize,
    pub n_factories: usize,
    pub capacities: Vec<Option<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eligibility_groups: Option<[(u32, u32); 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eligibility_matrix: Option<Vec<Vec<bool>>>,
    pub orders: Vec<Order>,
}

impl InstanceFile {
    /// File form of `day`; groups are written instead of the matrix when they
    /// reproduce the day's table.
    pub fn from_day(day: &DaySnapshot, groups: Option<[(u32, u32); 4]>) -> InstanceFile {
        let groups = groups.filter(|g| {
            derive_eligibility(g, day.n_recipes as u32, day.n_factories)
                .is_ok_and(|t| t == day.eligibility)
        });
        InstanceFile {
            lead_day: day.lead_day,
            n_recipes: day.n_recipes,
            n_factories: day.n_factories,
            capacities: day.capacities.as_slice().to_vec(),
            eligibility_matrix: groups.is_none().then(|| day.eligibility.to_matrix()),
            eligibility_groups: groups,
            orders: day.orders.clone(),
        }
    }

    pub fn into_day(self) -> Result<DaySnapshot> {
        let eligibility = match (&self.eligibility_groups, &self.eligibility_matrix) {
            (Some(g), None) => derive_eligibility(g, self.n_recipes as u32, self.n_factories)?,
            (None, Some(m)) => EligibilityTable::from_matrix(m)?,
            (None, None) => EligibilityTable::unconstrained(self.n_recipes, self.n_factories)?,
            (Some(_), Some(_)) => {
                return Err(Error::InvalidInstance(
                    "give either eligibility_groups or eligibility_matrix, not both".into(),
                ))
            }
        };
        if eligibility.n_recipes() != self.n_recipes
            || eligibility.n_factories() != self.n_factories
        {
            return Err(Error::DimensionMismatch {
                expected: (self.n_recipes, self.n_factories),
                actual: (eligibility.n_recipes(), eligibility.n_factories()),
            });
        }
        let capacities = CapacityVector::from_options(self.capacities)?;
        if capacities.n_factories() != self.n_factories {
            return Err(Error::InvalidInstance(format!(
                "{} capacities for {} factories",
                capacities.n_factories(),
                self.n_factories
            )));
        }
        DaySnapshot::new(self.lead_day, self.orders, capacities, eligibility)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(Box<InstanceFile>),
    Many(Vec<InstanceFile>),
}

/// Days from JSON text holding one instance object or an array of them.
pub fn parse_instances(text: &str) -> Result<Vec<DaySnapshot>> {
    let parsed: OneOrMany = serde_json::from_str(text).map_err(|e| {
        // untagged enums hide the real cause; reparse as a single object for it
        serde_json::from_str::<InstanceFile>(text)
            .err()
            .map_or(Error::Json(e), Error::Json)
    })?;
    let files = match parsed {
        OneOrMany::One(f) => vec![*f],
        OneOrMany::Many(v) => v,
    };
    files.into_iter().map(InstanceFile::into_day).collect()
}

pub fn read_instances(path: &Path) -> Result<Vec<DaySnapshot>> {
    parse_instances(&std::fs::read_to_string(path)?)
}

pub fn read_instance(path: &Path) -> Result<DaySnapshot> {
    let mut days = read_instances(path)?;
    if days.len() != 1 {
        return Err(Error::InvalidInstance(format!(
            "{} holds {} instances, expected one",
            path.display(),
            days.len()
        )));
    }
    Ok(days.remove(0))
}

pub fn instance_json(day: &DaySnapshot, groups: Option<[(u32, u32); 4]>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&InstanceFile::from_day(
        day, groups,
    ))?)
}

pub fn write_instance(
    path: &Path,
    day: &DaySnapshot,
    groups: Option<[(u32, u32); 4]>,
) -> Result<()> {
    write_atomic(path, instance_json(day, groups)?.as_bytes())
}

pub fn write_instances(
    path: &Path,
    days: &[DaySnapshot],
    groups: Option<[(u32, u32); 4]>,
) -> Result<()> {
    let files: Vec<InstanceFile> = days
        .iter()
        .map(|d| InstanceFile::from_day(d, groups))
        .collect();
    write_atomic(path, serde_json::to_string_pretty(&files)?.as_bytes())
}

pub fn read_allocation(path: &Path) -> Result<Allocation> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn write_allocation(path: &Path, alloc: &Allocation) -> Result<()> {
    write_atomic(path, serde_json::to_string_pretty(alloc)?.as_bytes())
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

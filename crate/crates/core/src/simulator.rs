//! Multi-day horizon runs: every day is allocated against the realized
//! allocation of the day before.

use crate::error::{Error, Result};
use crate::generator::{
    apply_churn, check_supply, evolve_day, generate_day, ChurnConfig, GeneratorConfig,
};
use crate::metrics::{
    horizon_area, widen, BigRational, CurvePoint, HorizonCurve, Series, WmapePair,
};
use crate::model::{recipe_site_matrix, Allocation, CapacityVector, DaySnapshot, RecipeSiteMatrix};
use crate::solvers::{
    carry_over, exact_solve, greedy_construct, itps_improve, tabu_improve, ExactParams, ItpsParams,
    SolveStatus, TabuParams,
};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Exact,
    Greedy,
    Itps,
    Tabu,
    IdBased,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::Exact,
        SolverKind::Greedy,
        SolverKind::Itps,
        SolverKind::Tabu,
        SolverKind::IdBased,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Exact => "exact",
            SolverKind::Greedy => "greedy",
            SolverKind::Itps => "itps",
            SolverKind::Tabu => "tabu",
            SolverKind::IdBased => "id_based",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<SolverKind> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s || (s == "id-based" && *k == SolverKind::IdBased))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown solver {s}")))
    }
}

/// Map keys arrive as strings in both JSON and TOML.
fn lead_day_keys<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<BTreeMap<i32, Vec<u64>>, D::Error> {
    BTreeMap::<String, Vec<u64>>::deserialize(d)?
        .into_iter()
        .map(|(k, v)| {
            k.trim().parse::<i32>().map(|k| (k, v)).map_err(|_| {
                serde::de::Error::custom(format!("lead day key {k:?} is not an integer"))
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Lead days in planning order, e.g. -18 up to -3.
    pub days: Vec<i32>,
    pub solver: SolverKind,
    /// Bounded capacities from a lead day on, until the next override.
    #[serde(deserialize_with = "lead_day_keys")]
    pub capacity_overrides: BTreeMap<i32, Vec<u64>>,
    pub churn: Option<ChurnConfig>,
    pub generator: GeneratorConfig,
    /// Per-day time limit of the exact solver.
    pub budget_seconds: f64,
    pub itps: ItpsParams,
    pub tabu: TabuParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            days: (-18..=-3).collect(),
            solver: SolverKind::Exact,
            capacity_overrides: BTreeMap::new(),
            churn: None,
            generator: GeneratorConfig::default(),
            budget_seconds: crate::solvers::DEFAULT_BUDGET.as_secs_f64(),
            itps: ItpsParams::default(),
            tabu: TabuParams::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        if self.days.is_empty() {
            return Err(Error::InvalidConfig(
                "a horizon needs at least one day".into(),
            ));
        }
        if self.days.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::InvalidConfig(
                "horizon days must be contiguous and increasing".into(),
            ));
        }
        let bounded = self.generator.capacity_fractions.len();
        for (day, caps) in &self.capacity_overrides {
            if !self.days.contains(day) {
                return Err(Error::InvalidConfig(format!(
                    "capacity override for LD{} lies outside the horizon",
                    -day
                )));
            }
            if caps.len() != bounded {
                return Err(Error::InvalidConfig(format!(
                    "capacity override for LD{} lists {} factories, expected {bounded}",
                    -day,
                    caps.len()
                )));
            }
        }
        if let Some(churn) = &self.churn {
            churn.validate()?;
        }
        if self.budget_seconds.is_nan() || self.budget_seconds <= 0.0 {
            return Err(Error::InvalidConfig(
                "budget_seconds must be positive".into(),
            ));
        }
        self.tabu.validate()
    }

    fn budget(&self) -> Duration {
        Duration::from_secs_f64(self.budget_seconds)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayRecord {
    pub lead_day: i32,
    /// FNV-1a digest of the realized order book and capacities.
    pub digest: String,
    pub n_orders: usize,
    pub real_fraction: f64,
    pub capacities: Vec<Option<u64>>,
    pub allocation: Allocation,
    pub matrix: RecipeSiteMatrix,
    /// Against the previous record; the first day is measured against itself.
    pub metrics: WmapePair,
    pub status: Option<SolveStatus>,
    pub lower_bound: u64,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonResult {
    pub solver: SolverKind,
    pub records: Vec<DayRecord>,
    /// Realized order books, one per record.
    pub days: Vec<DaySnapshot>,
    pub retrospective: HorizonCurve,
    pub area_site: BigRational,
    pub area_global: BigRational,
}

impl HorizonResult {
    pub fn curve(&self) -> HorizonCurve {
        HorizonCurve::new(
            self.records
                .iter()
                .map(|r| CurvePoint {
                    lead_day: r.lead_day,
                    pair: r.metrics,
                })
                .collect(),
        )
        .expect("records are in lead-day order")
    }

    pub fn record(&self, lead_day: i32) -> Option<&DayRecord> {
        self.records.iter().find(|r| r.lead_day == lead_day)
    }

    /// Mean of site minus global over all transitions (the first day excluded).
    pub fn mean_gap(&self) -> BigRational {
        let transitions = &self.records[1.min(self.records.len())..];
        if transitions.is_empty() {
            return BigRational::zero();
        }
        let sum = transitions.iter().fold(BigRational::zero(), |acc, r| {
            acc + widen(r.metrics.site() - r.metrics.global())
        });
        sum / BigRational::from_integer(transitions.len().into())
    }
}

/// Allocation keeping carried orders at yesterday's factory where possible.
///
/// Orders still eligible at their previous factory stay there, lowest ids
/// evicted first when a capacity shrank; the remaining capacity is filled
/// greedily with real orders first.
pub fn id_based_allocate(
    day: &DaySnapshot,
    prev_alloc: &Allocation,
    prev_day: &DaySnapshot,
) -> Result<Allocation> {
    if prev_alloc.lead_day != prev_day.lead_day {
        return Err(Error::InvalidInstance(format!(
            "allocation for LD{} does not belong to LD{}",
            -prev_alloc.lead_day, -prev_day.lead_day
        )));
    }
    carry_over(day, prev_alloc)
}

/// Each day's matrix against the final day's, ending at zero.
pub fn retrospective_compare(result: &HorizonResult) -> Result<HorizonCurve> {
    let Some(last) = result.records.last() else {
        return Err(Error::MissingDay(-3));
    };
    if result.records.len() < 2 {
        return Ok(HorizonCurve::default());
    }
    let points = result
        .records
        .iter()
        .map(|r| {
            Ok(CurvePoint {
                lead_day: r.lead_day,
                pair: WmapePair::between(&r.matrix, &last.matrix)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    HorizonCurve::new(points)
}

pub fn run_horizon(config: &ScenarioConfig) -> Result<HorizonResult> {
    config.validate()?;
    let mut records: Vec<DayRecord> = Vec::with_capacity(config.days.len());
    let mut days: Vec<DaySnapshot> = Vec::with_capacity(config.days.len());
    let mut caps_override: Option<&Vec<u64>> = None;

    for (k, &ld) in config.days.iter().enumerate() {
        let mut step = || -> Result<DayRecord> {
            let mut day = match days.last() {
                None => generate_day(&config.generator, ld)?,
                Some(prev) => evolve_day(prev, &config.generator, ld)?,
            };
            if let Some(caps) = config.capacity_overrides.get(&ld) {
                caps_override = Some(caps);
            }
            if let Some(caps) = caps_override {
                day.capacities = CapacityVector::new(caps.clone());
                check_supply(&day)?;
            }
            if k > 0 {
                if let Some(churn) = &config.churn {
                    day = apply_churn(&day, churn, &config.generator, config.generator.seed)?;
                }
            }
            let prev = records.last().zip(days.last());
            let record = solve_day(config, &day, prev)?;
            days.push(day);
            Ok(record)
        };
        let record = step().map_err(|e| e.at_day(ld))?;
        records.push(record);
    }

    let mut result = HorizonResult {
        solver: config.solver,
        records,
        days,
        retrospective: HorizonCurve::default(),
        area_site: BigRational::zero(),
        area_global: BigRational::zero(),
    };
    result.retrospective = retrospective_compare(&result)?;
    let curve = result.curve();
    result.area_site = horizon_area(&curve, Series::Site)?;
    result.area_global = horizon_area(&curve, Series::Global)?;
    Ok(result)
}

/// Horizon with at least one capacity override in force.
pub fn run_capacity_shock(config: &ScenarioConfig) -> Result<HorizonResult> {
    if config.capacity_overrides.is_empty() {
        return Err(Error::InvalidConfig(
            "a capacity shock needs at least one capacity override".into(),
        ));
    }
    run_horizon(config)
}

/// Horizon with daily order churn.
pub fn run_order_churn(config: &ScenarioConfig) -> Result<HorizonResult> {
    if config.churn.is_none() {
        return Err(Error::InvalidConfig(
            "order churn needs a churn configuration".into(),
        ));
    }
    run_horizon(config)
}

/// A day together with the realized previous day it is measured against.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkCase {
    pub day: DaySnapshot,
    pub prev_day: DaySnapshot,
    pub prev_allocation: Allocation,
    pub prev_matrix: RecipeSiteMatrix,
}

/// Builds `lead_day` with yesterday allocated by an exact horizon run from LD18.
///
/// Each warm-up day gets `warmup_budget`; the benchmark day itself is left unsolved.
pub fn benchmark_case(
    generator: &GeneratorConfig,
    lead_day: i32,
    warmup_budget: Duration,
) -> Result<BenchmarkCase> {
    let first = *crate::generator::DEFAULT_LEAD_DAYS.start();
    if lead_day <= first {
        return Err(Error::InvalidConfig(format!(
            "benchmark day LD{} has no predecessor",
            -lead_day
        )));
    }
    let config = ScenarioConfig {
        days: (first..lead_day).collect(),
        solver: SolverKind::Exact,
        generator: generator.clone(),
        budget_seconds: warmup_budget.as_secs_f64(),
        ..ScenarioConfig::default()
    };
    let mut warm = run_horizon(&config)?;
    let prev_day = warm.days.pop().expect("non-empty horizon");
    let record = warm.records.pop().expect("non-empty horizon");
    let day = evolve_day(&prev_day, generator, lead_day).map_err(|e| e.at_day(lead_day))?;
    Ok(BenchmarkCase {
        day,
        prev_day,
        prev_allocation: record.allocation,
        prev_matrix: record.matrix,
    })
}

fn solve_day(
    config: &ScenarioConfig,
    day: &DaySnapshot,
    prev: Option<(&DayRecord, &DaySnapshot)>,
) -> Result<DayRecord> {
    let start = Instant::now();
    let Some((prev_record, prev_day)) = prev else {
        // no predecessor: greedy, measured against itself
        let allocation = greedy_construct(day)?;
        let matrix = recipe_site_matrix(day, &allocation)?;
        let metrics = WmapePair::between(&matrix, &matrix)?;
        return Ok(record(day, allocation, matrix, metrics, None, 0, start));
    };
    let prev_matrix = &prev_record.matrix;
    let (allocation, status, lower_bound) = match config.solver {
        SolverKind::Exact => {
            let params = ExactParams {
                budget: config.budget(),
                stable_hint: Some(prev_record.allocation.clone()),
                seed: config.generator.seed,
                ..ExactParams::default()
            };
            let res = exact_solve(day, prev_matrix, &params)?;
            (res.allocation, Some(res.status), res.lower_bound)
        }
        SolverKind::Greedy => (greedy_construct(day)?, None, 0),
        SolverKind::Itps => {
            let init = greedy_construct(day)?;
            let res = itps_improve(day, &init, prev_matrix, &config.itps)?;
            (res.allocation, Some(res.status), res.lower_bound)
        }
        SolverKind::Tabu => {
            let init = greedy_construct(day)?;
            let res = tabu_improve(day, &init, prev_matrix, &config.tabu)?;
            (res.allocation, Some(res.status), res.lower_bound)
        }
        SolverKind::IdBased => (
            id_based_allocate(day, &prev_record.allocation, prev_day)?,
            None,
            0,
        ),
    };
    let matrix = recipe_site_matrix(day, &allocation)?;
    let metrics = WmapePair::between(prev_matrix, &matrix)?;
    let lower_bound = lower_bound.max(metrics.global_numerator);
    Ok(record(
        day,
        allocation,
        matrix,
        metrics,
        status,
        lower_bound,
        start,
    ))
}

fn record(
    day: &DaySnapshot,
    allocation: Allocation,
    matrix: RecipeSiteMatrix,
    metrics: WmapePair,
    status: Option<SolveStatus>,
    lower_bound: u64,
    start: Instant,
) -> DayRecord {
    DayRecord {
        lead_day: day.lead_day,
        digest: digest(day),
        n_orders: day.orders.len(),
        real_fraction: day.real_count() as f64 / day.orders.len().max(1) as f64,
        capacities: day.capacities.as_slice().to_vec(),
        allocation,
        matrix,
        metrics,
        status,
        lower_bound,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    }
}

fn digest(day: &DaySnapshot) -> String {
    const PRIME: u64 = 0x0100_0000_01b3;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: u64| {
        for b in v.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
    };
    for o in &day.orders {
        eat(o.id);
        eat(u64::from(o.is_real));
        for r in &o.recipes {
            eat(u64::from(r.0));
        }
        eat(u64::MAX);
    }
    for c in day.capacities.as_slice() {
        eat(c.unwrap_or(u64::MAX));
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(solver: SolverKind) -> ScenarioConfig {
        ScenarioConfig {
            days: (-8..=-3).collect(),
            solver,
            generator: GeneratorConfig {
                total_orders: 200,
                seed: 5,
                ..GeneratorConfig::default()
            },
            budget_seconds: 5.0,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn chained_and_terminal_zero() {
        let res = run_horizon(&small(SolverKind::Greedy)).unwrap();
        assert_eq!(res.records.len(), 6);
        assert_eq!(res.records[0].metrics.site_numerator, 0);
        for w in res.records.windows(2) {
            let again = WmapePair::between(&w[0].matrix, &w[1].matrix).unwrap();
            assert_eq!(again, w[1].metrics);
        }
        let last = *res.retrospective.points().last().unwrap();
        assert_eq!(last.lead_day, -3);
        assert_eq!(last.pair.site_numerator, 0);
        assert_eq!(last.pair.global_numerator, 0);
    }

    #[test]
    fn single_day_has_empty_trend() {
        let mut config = small(SolverKind::Exact);
        config.days = vec![-3];
        let res = run_horizon(&config).unwrap();
        assert_eq!(res.records.len(), 1);
        assert!(res.retrospective.is_empty());
    }

    #[test]
    fn reproducible() {
        let a = run_horizon(&small(SolverKind::IdBased)).unwrap();
        let b = run_horizon(&small(SolverKind::IdBased)).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.digest, y.digest);
            assert_eq!(x.allocation, y.allocation);
            assert_eq!(x.metrics, y.metrics);
        }
    }

    #[test]
    fn no_op_override_and_churn() {
        let base = run_horizon(&small(SolverKind::IdBased)).unwrap();
        let mut config = small(SolverKind::IdBased);
        config.capacity_overrides.insert(-6, vec![50, 100]);
        config.churn = Some(ChurnConfig::NONE);
        let same = run_capacity_shock(&config).unwrap();
        for (x, y) in base.records.iter().zip(&same.records) {
            assert_eq!(x.metrics, y.metrics);
            assert_eq!(x.allocation, y.allocation);
        }
    }

    #[test]
    fn overrides_persist() {
        let mut config = small(SolverKind::Greedy);
        config.capacity_overrides.insert(-6, vec![20, 100]);
        let res = run_capacity_shock(&config).unwrap();
        assert_eq!(res.record(-7).unwrap().capacities[0], Some(50));
        for ld in -6..=-3 {
            assert_eq!(res.record(ld).unwrap().capacities[0], Some(20));
        }
    }

    #[test]
    fn benchmark_case_chains() {
        let gen = small(SolverKind::Exact).generator;
        let case = benchmark_case(&gen, -11, Duration::from_secs(2)).unwrap();
        assert_eq!(case.day.lead_day, -11);
        assert_eq!(case.prev_day.lead_day, -12);
        let m = recipe_site_matrix(&case.prev_day, &case.prev_allocation).unwrap();
        assert_eq!(m, case.prev_matrix);
        let horizon =
            crate::generator::generate_horizon(&gen, &[-18, -17, -16, -15, -14, -13, -12, -11])
                .unwrap();
        assert_eq!(horizon[7], case.day);
        assert!(benchmark_case(&gen, -18, Duration::from_secs(1)).is_err());
    }

    #[test]
    fn invalid_configs() {
        let mut c = small(SolverKind::Exact);
        c.days = vec![-5, -3];
        assert!(run_horizon(&c).is_err());
        let mut c = small(SolverKind::Exact);
        c.capacity_overrides.insert(-20, vec![1, 1]);
        assert!(run_horizon(&c).is_err());
        assert!(run_order_churn(&small(SolverKind::Exact)).is_err());
        assert!(run_capacity_shock(&small(SolverKind::Exact)).is_err());
        assert!("simplex".parse::<SolverKind>().is_err());
        assert_eq!(
            "id_based".parse::<SolverKind>().unwrap(),
            SolverKind::IdBased
        );
    }

    #[test]
    fn id_based_identity_on_unchanged_book() {
        let mut config = small(SolverKind::Greedy);
        config.days = vec![-3];
        let res = run_horizon(&config).unwrap();
        let day = &res.days[0];
        let alloc = &res.records[0].allocation;
        let again = id_based_allocate(day, alloc, day).unwrap();
        assert_eq!(&again, alloc);
    }
}

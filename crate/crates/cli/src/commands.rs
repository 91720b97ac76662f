use crate::failure::{CliResult, Failure};
use crate::manifest::Recorder;
use crate::output::{self, BenchmarkRow, BenchmarkSummaryRow, MetricsRow, RetrospectiveRow};
use crate::plot;
use crate::{
    BenchmarkArgs, Cli, Command, ExportArgs, GenerateArgs, PlotArgs, PrevArgs, SimulateArgs,
    SolveArgs,
};
use bap_core::generator::{generate_horizon, GeneratorConfig};
use bap_core::io::{read_allocation, read_instance, write_allocation, write_instance};
use bap_core::metrics::{big_to_f64, optimality_gap, to_f64, WmapePair};
use bap_core::model::{
    recipe_site_matrix, validate_allocation, Allocation, DaySnapshot, RecipeSiteMatrix,
};
use bap_core::rng::derive_seed;
use bap_core::simulator::{
    benchmark_case, id_based_allocate, run_horizon, BenchmarkCase, HorizonResult, ScenarioConfig,
    SolverKind,
};
use bap_core::solvers::mps::export_milp;
use bap_core::solvers::{
    exact_solve, greedy_construct, itps_improve, tabu_improve, ExactParams, ItpsParams,
    SolveResult, SolveStatus, SolveSummary, TabuParams, DEFAULT_BUDGET,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Generate(a) => generate(cli, a),
        Command::Solve(a) => solve(cli, a),
        Command::Benchmark(a) => benchmark(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::ExportMilp(a) => export(cli, a),
        Command::Plot(a) => plot_files(cli, a),
    }
}

fn budget(cli: &Cli) -> CliResult<Duration> {
    match cli.budget {
        None => Ok(DEFAULT_BUDGET),
        Some(s) if s > 0.0 && s.is_finite() => Ok(Duration::from_secs_f64(s)),
        Some(s) => Err(Failure::config(format!(
            "--budget must be positive, got {s}"
        ))),
    }
}

fn pool(cli: &Cli) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Failure::config(e.to_string()))
}

fn to_value<T: Serialize>(v: &T) -> CliResult<serde_json::Value> {
    Ok(serde_json::to_value(v)?)
}

fn lead_days(count: u32) -> CliResult<Vec<i32>> {
    if count == 0 {
        return Err(Failure::config("--days must be at least 1"));
    }
    let first = -2 - count as i32;
    Ok((first..=-3).collect())
}

fn generate(cli: &Cli, args: &GenerateArgs) -> CliResult<()> {
    let mut config: GeneratorConfig = match &args.config {
        Some(p) => crate::config::load(p)?,
        None => GeneratorConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(n) = args.orders {
        config.total_orders = n;
    }
    config.validate()?;
    let days = lead_days(args.days)?;
    let horizon = generate_horizon(&config, &days)?;

    let mut rec = Recorder::new(&cli.output_dir, "generate")?;
    for day in &horizon {
        let path = rec.output(&format!("instances/ld{}.json", -day.lead_day));
        std::fs::create_dir_all(path.parent().expect("nested path"))?;
        write_instance(&path, day, Some(config.group_bounds))?;
    }
    rec.finish(
        json!({ "generator": to_value(&config)?, "lead_days": days }),
        config.seed,
        serde_json::Value::Null,
    )?;
    Ok(())
}

fn at(path: &Path) -> impl Fn(bap_core::Error) -> Failure + '_ {
    move |e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    }
}

fn read_day(path: &Path) -> CliResult<DaySnapshot> {
    read_instance(path).map_err(at(path))
}

fn read_alloc(path: &Path) -> CliResult<Allocation> {
    read_allocation(path).map_err(at(path))
}

struct Prev {
    day: DaySnapshot,
    allocation: Allocation,
    matrix: RecipeSiteMatrix,
}

fn load_prev(args: &PrevArgs) -> CliResult<Option<Prev>> {
    let (Some(ip), Some(ap)) = (&args.prev_instance, &args.prev_allocation) else {
        return Ok(None);
    };
    let day = read_day(ip)?;
    let allocation = read_alloc(ap)?;
    check_allocation(&day, &allocation, ap)?;
    let matrix = recipe_site_matrix(&day, &allocation)?;
    Ok(Some(Prev {
        day,
        allocation,
        matrix,
    }))
}

fn check_allocation(day: &DaySnapshot, alloc: &Allocation, path: &Path) -> CliResult<()> {
    let report = validate_allocation(day, alloc);
    if report.is_empty() {
        Ok(())
    } else {
        Err(Failure::config(format!(
            "{}: allocation violates {} constraint(s) of LD{}",
            path.display(),
            report.violation_count(),
            -day.lead_day
        )))
    }
}

/// Greedy and id-based results carry no search; they are certified only when tight.
fn plain_result(
    day: &DaySnapshot,
    allocation: Allocation,
    prev: &RecipeSiteMatrix,
    start: Instant,
) -> CliResult<SolveResult> {
    let cur = recipe_site_matrix(day, &allocation)?;
    let metrics = WmapePair::between(prev, &cur)?;
    Ok(SolveResult {
        allocation,
        metrics,
        status: if metrics.is_tight() {
            SolveStatus::OptimalCertified
        } else {
            SolveStatus::FeasibleBudgetHit
        },
        lower_bound: metrics.global_numerator,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        nodes_explored: 0,
        swaps_accepted: 0,
    })
}

struct SolverSetup {
    budget: Duration,
    seed: u64,
    itps: ItpsParams,
    tabu: TabuParams,
}

/// Runs one solver. `prev` is absent only for greedy on a first day.
fn run_solver(
    kind: SolverKind,
    day: &DaySnapshot,
    prev: Option<&Prev>,
    warm: Option<&Allocation>,
    setup: &SolverSetup,
) -> CliResult<SolveResult> {
    let start = Instant::now();
    let Some(prev) = prev else {
        if kind != SolverKind::Greedy {
            return Err(Failure::config(format!(
                "solver {kind} needs --prev-instance and --prev-allocation"
            )));
        }
        let alloc = greedy_construct(day)?;
        let own = recipe_site_matrix(day, &alloc)?;
        return plain_result(day, alloc, &own, start);
    };
    let init = || -> CliResult<Allocation> {
        match warm {
            Some(w) => Ok(w.clone()),
            None => Ok(greedy_construct(day)?),
        }
    };
    let result = match kind {
        SolverKind::Exact => exact_solve(
            day,
            &prev.matrix,
            &ExactParams {
                budget: setup.budget,
                warm_start: warm.cloned(),
                stable_hint: Some(prev.allocation.clone()),
                seed: setup.seed,
                ..ExactParams::default()
            },
        )?,
        SolverKind::Greedy => plain_result(day, greedy_construct(day)?, &prev.matrix, start)?,
        SolverKind::Itps => itps_improve(day, &init()?, &prev.matrix, &setup.itps)?,
        SolverKind::Tabu => tabu_improve(day, &init()?, &prev.matrix, &setup.tabu)?,
        SolverKind::IdBased => plain_result(
            day,
            id_based_allocate(day, &prev.allocation, &prev.day)?,
            &prev.matrix,
            start,
        )?,
    };
    Ok(result)
}

fn metrics_row(
    lead_day: i32,
    solver: SolverKind,
    pair: &WmapePair,
    real: f64,
    secs: f64,
) -> MetricsRow {
    MetricsRow {
        lead_day,
        solver: solver.to_string(),
        wmape_site: to_f64(pair.site()),
        wmape_global: to_f64(pair.global()),
        gap: to_f64(optimality_gap(pair)),
        real_fraction: real,
        elapsed_seconds: secs,
    }
}

fn real_fraction(day: &DaySnapshot) -> f64 {
    day.real_count() as f64 / day.orders.len().max(1) as f64
}

fn solve(cli: &Cli, args: &SolveArgs) -> CliResult<()> {
    let day = read_day(&args.instance)?;
    let prev = load_prev(&args.prev)?;
    let warm = match &args.warm_start {
        Some(p) => {
            let w = read_alloc(p)?;
            check_allocation(&day, &w, p)?;
            Some(w)
        }
        None => None,
    };
    let seed = cli.seed.unwrap_or(0);
    let mut setup = SolverSetup {
        budget: budget(cli)?,
        seed,
        itps: ItpsParams {
            seed,
            ..ItpsParams::default()
        },
        tabu: TabuParams {
            seed,
            ..TabuParams::default()
        },
    };
    if let Some(n) = args.iterations {
        setup.itps.iterations = n;
        setup.tabu.iterations = n;
        setup.tabu.tenure = setup.tabu.tenure.min(n.saturating_sub(1));
    }
    setup.tabu.validate()?;

    let result = run_solver(args.solver, &day, prev.as_ref(), warm.as_ref(), &setup)?;

    let mut rec = Recorder::new(&cli.output_dir, "solve")?;
    write_allocation(&rec.output("allocation.json"), &result.allocation)?;
    let summary = SolveSummary::from(&result);
    let mut doc = to_value(&summary)?;
    doc["solver"] = json!(args.solver);
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    bap_core::io::write_atomic(&rec.output("result.json"), &bytes)?;
    let row = metrics_row(
        day.lead_day,
        args.solver,
        &result.metrics,
        real_fraction(&day),
        result.elapsed_seconds,
    );
    let name = output::write_rows(
        &rec.dir,
        "metrics",
        cli.format,
        &[row],
        output::METRICS_HEADER,
    )?;
    rec.output(&name);

    let config = json!({
        "instance": args.instance,
        "prev_instance": args.prev.prev_instance,
        "prev_allocation": args.prev.prev_allocation,
        "solver": args.solver,
        "warm_start": args.warm_start,
        "budget_seconds": setup.budget.as_secs_f64(),
        "itps": to_value(&setup.itps)?,
        "tabu": to_value(&setup.tabu)?,
    });
    rec.finish(config, seed, json!({ "status": result.status }))?;
    Ok(())
}

fn benchmark(cli: &Cli, args: &BenchmarkArgs) -> CliResult<()> {
    let base: GeneratorConfig = match &args.config {
        Some(p) => crate::config::load(p)?,
        None => GeneratorConfig::default(),
    };
    base.validate()?;
    if args.orders_list.is_empty() || args.solvers.is_empty() || args.repeats == 0 {
        return Err(Failure::config(
            "benchmark needs at least one quantity, solver and repeat",
        ));
    }
    if args.warmup_budget.is_nan() || args.warmup_budget <= 0.0 {
        return Err(Failure::config("--warmup-budget must be positive"));
    }
    let master = cli.seed.unwrap_or(base.seed);
    let lead_day = -(args.lead_day as i32);
    let budget = budget(cli)?;
    let warmup = Duration::from_secs_f64(args.warmup_budget);

    let cells: Vec<(usize, usize)> = args
        .orders_list
        .iter()
        .flat_map(|&n| (0..args.repeats).map(move |r| (n, r)))
        .collect();
    let rows: Vec<Vec<BenchmarkRow>> = pool(cli)?.install(|| {
        cells
            .par_iter()
            .map(|&(orders, repeat)| {
                let seed = derive_seed(master, "benchmark", repeat as i64);
                let gen = GeneratorConfig {
                    total_orders: orders,
                    seed,
                    ..base.clone()
                };
                benchmark_cell(&gen, repeat, lead_day, warmup, budget, &args.solvers)
            })
            .collect()
    });
    let rows: Vec<BenchmarkRow> = rows.into_iter().flatten().collect();
    let summary = summarize(&rows);

    let mut rec = Recorder::new(&cli.output_dir, "benchmark")?;
    let a = output::write_rows(
        &rec.dir,
        "benchmark",
        cli.format,
        &rows,
        output::BENCHMARK_HEADER,
    )?;
    rec.output(&a);
    let b = output::write_rows(
        &rec.dir,
        "benchmark_summary",
        cli.format,
        &summary,
        output::BENCHMARK_SUMMARY_HEADER,
    )?;
    rec.output(&b);
    let failures = rows.iter().filter(|r| !r.error.is_empty()).count();
    let config = json!({
        "generator": to_value(&base)?,
        "orders_list": args.orders_list,
        "solvers": args.solvers,
        "repeats": args.repeats,
        "lead_day": lead_day,
        "warmup_budget_seconds": args.warmup_budget,
        "budget_seconds": budget.as_secs_f64(),
        "seed_derivation": "derive_seed(seed, \"benchmark\", repeat)",
    });
    rec.finish(config, master, json!({ "failed_cells": failures }))?;
    Ok(())
}

fn benchmark_cell(
    gen: &GeneratorConfig,
    repeat: usize,
    lead_day: i32,
    warmup: Duration,
    budget: Duration,
    solvers: &[SolverKind],
) -> Vec<BenchmarkRow> {
    let failed = |solver: SolverKind, e: &Failure| BenchmarkRow {
        orders: gen.total_orders,
        repeat,
        seed: gen.seed,
        solver: solver.to_string(),
        lead_day,
        wmape_site: f64::NAN,
        wmape_global: f64::NAN,
        gap: f64::NAN,
        improvement_vs_greedy: None,
        status: "error".into(),
        elapsed_seconds: 0.0,
        error: e.message.clone(),
    };
    let case = match benchmark_case(gen, lead_day, warmup) {
        Ok(c) => c,
        Err(e) => {
            let e = Failure::from(e);
            return solvers.iter().map(|&s| failed(s, &e)).collect();
        }
    };
    let BenchmarkCase {
        day,
        prev_day,
        prev_allocation,
        prev_matrix,
    } = case;
    let prev = Prev {
        day: prev_day,
        allocation: prev_allocation,
        matrix: prev_matrix,
    };
    let setup = SolverSetup {
        budget,
        seed: gen.seed,
        itps: ItpsParams {
            seed: gen.seed,
            ..ItpsParams::default()
        },
        tabu: TabuParams {
            seed: gen.seed,
            ..TabuParams::default()
        },
    };
    let greedy = run_solver(SolverKind::Greedy, &day, Some(&prev), None, &setup).ok();
    solvers
        .iter()
        .map(|&s| match run_solver(s, &day, Some(&prev), None, &setup) {
            Ok(r) => {
                let site = r.site_f64();
                let improvement = greedy.as_ref().and_then(|g| {
                    let base = g.site_f64();
                    (base > 0.0).then(|| 100.0 * (base - site) / base)
                });
                BenchmarkRow {
                    orders: gen.total_orders,
                    repeat,
                    seed: gen.seed,
                    solver: s.to_string(),
                    lead_day,
                    wmape_site: site,
                    wmape_global: r.global_f64(),
                    gap: to_f64(optimality_gap(&r.metrics)),
                    improvement_vs_greedy: improvement,
                    status: match s {
                        SolverKind::Greedy | SolverKind::IdBased => "none".to_string(),
                        _ => r.status.as_str().to_string(),
                    },
                    elapsed_seconds: r.elapsed_seconds,
                    error: String::new(),
                }
            }
            Err(e) => failed(s, &e),
        })
        .collect()
}

fn summarize(rows: &[BenchmarkRow]) -> Vec<BenchmarkSummaryRow> {
    let mut groups: BTreeMap<(usize, &str), Vec<&BenchmarkRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.orders, &r.solver)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((orders, solver), rs)| {
            let ok: Vec<&&BenchmarkRow> = rs.iter().filter(|r| r.error.is_empty()).collect();
            let mean = |f: &dyn Fn(&BenchmarkRow) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                }
            };
            let imps: Vec<f64> = ok.iter().filter_map(|r| r.improvement_vs_greedy).collect();
            BenchmarkSummaryRow {
                orders,
                solver: solver.to_string(),
                runs: rs.len(),
                failures: rs.len() - ok.len(),
                mean_wmape_site: mean(&|r| r.wmape_site),
                mean_wmape_global: mean(&|r| r.wmape_global),
                mean_gap: mean(&|r| r.gap),
                mean_improvement_vs_greedy: (!imps.is_empty())
                    .then(|| imps.iter().sum::<f64>() / imps.len() as f64),
                mean_elapsed_seconds: mean(&|r| r.elapsed_seconds),
            }
        })
        .collect()
}

#[derive(Serialize)]
struct DaySummary {
    lead_day: i32,
    digest: String,
    n_orders: usize,
    capacities: Vec<Option<u64>>,
    status: Option<SolveStatus>,
    site_numerator: u64,
    global_numerator: u64,
    denominator: u64,
    lower_bound_numerator: u64,
}

#[derive(Serialize)]
struct HorizonSummary {
    solver: SolverKind,
    area_site: f64,
    area_global: f64,
    mean_gap: f64,
    days: Vec<DaySummary>,
}

fn horizon_summary(r: &HorizonResult) -> HorizonSummary {
    HorizonSummary {
        solver: r.solver,
        area_site: big_to_f64(&r.area_site),
        area_global: big_to_f64(&r.area_global),
        mean_gap: big_to_f64(&r.mean_gap()),
        days: r
            .records
            .iter()
            .map(|d| DaySummary {
                lead_day: d.lead_day,
                digest: d.digest.clone(),
                n_orders: d.n_orders,
                capacities: d.capacities.clone(),
                status: d.status,
                site_numerator: d.metrics.site_numerator,
                global_numerator: d.metrics.global_numerator,
                denominator: d.metrics.denominator,
                lower_bound_numerator: d.lower_bound,
            })
            .collect(),
    }
}

fn simulate(cli: &Cli, args: &SimulateArgs) -> CliResult<()> {
    let mut scenario: ScenarioConfig = match &args.scenario {
        Some(p) => crate::config::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = cli.seed {
        scenario.generator.seed = s;
        scenario.itps.seed = s;
        scenario.tabu.seed = s;
    }
    if let Some(b) = cli.budget {
        scenario.budget_seconds = b;
    }
    if let Some(n) = args.orders {
        scenario.generator.total_orders = n;
    }
    let solvers = if args.solvers.is_empty() {
        vec![scenario.solver]
    } else {
        args.solvers.clone()
    };
    scenario.validate()?;

    let results: Vec<HorizonResult> = pool(cli)?.install(|| {
        solvers
            .par_iter()
            .map(|&solver| {
                let config = ScenarioConfig {
                    solver,
                    ..scenario.clone()
                };
                run_horizon(&config)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut metrics = Vec::new();
    let mut retro = Vec::new();
    for r in &results {
        for d in &r.records {
            let real = d.real_fraction;
            metrics.push(metrics_row(
                d.lead_day,
                r.solver,
                &d.metrics,
                real,
                d.elapsed_seconds,
            ));
        }
        for p in r.retrospective.points() {
            retro.push(RetrospectiveRow {
                lead_day: p.lead_day,
                solver: r.solver.to_string(),
                wmape_site: to_f64(p.pair.site()),
                wmape_global: to_f64(p.pair.global()),
            });
        }
    }

    let mut rec = Recorder::new(&cli.output_dir, "simulate")?;
    let name = output::write_rows(
        &rec.dir,
        "metrics",
        cli.format,
        &metrics,
        output::METRICS_HEADER,
    )?;
    rec.output(&name);
    let name = output::write_rows(
        &rec.dir,
        "retrospective",
        cli.format,
        &retro,
        output::RETROSPECTIVE_HEADER,
    )?;
    rec.output(&name);
    let summaries: Vec<HorizonSummary> = results.iter().map(horizon_summary).collect();
    let mut bytes = serde_json::to_vec_pretty(&summaries)?;
    bytes.push(b'\n');
    bap_core::io::write_atomic(&rec.output("summary.json"), &bytes)?;

    if args.save_allocations {
        for r in &results {
            for d in &r.records {
                let path = rec.output(&format!("allocations/{}_ld{}.json", r.solver, -d.lead_day));
                std::fs::create_dir_all(path.parent().expect("nested path"))?;
                write_allocation(&path, &d.allocation)?;
            }
        }
    }
    if args.plots {
        draw_charts(&mut rec, &metrics, &retro, "WMAPE by lead day")?;
    }
    let config = json!({
        "scenario": to_value(&scenario)?,
        "solvers": solvers,
    });
    rec.finish(config, scenario.generator.seed, serde_json::Value::Null)?;
    Ok(())
}

fn draw_charts(
    rec: &mut Recorder,
    metrics: &[MetricsRow],
    retro: &[RetrospectiveRow],
    title: &str,
) -> CliResult<()> {
    let transitions = plot::transitions_only(metrics);
    if !transitions.is_empty() {
        let path = rec.output("wmape.svg");
        plot::line_chart(&path, title, "WMAPE", &plot::metrics_series(&transitions))?;
    }
    if !retro.is_empty() {
        let path = rec.output("retrospective.svg");
        plot::line_chart(
            &path,
            "WMAPE against the final allocation",
            "WMAPE",
            &plot::retrospective_series(retro),
        )?;
    }
    Ok(())
}

fn export(cli: &Cli, args: &ExportArgs) -> CliResult<()> {
    let day = read_day(&args.instance)?;
    let prev = load_prev(&args.prev)?.ok_or_else(|| {
        Failure::config("export-milp needs --prev-instance and --prev-allocation")
    })?;
    let mut rec = Recorder::new(&cli.output_dir, "export-milp")?;
    let path: PathBuf = rec.output(&args.out);
    let counts = export_milp(&day, &prev.matrix, &path)?;
    let config = json!({
        "instance": args.instance,
        "prev_instance": args.prev.prev_instance,
        "prev_allocation": args.prev.prev_allocation,
        "out": args.out,
    });
    rec.finish(config, cli.seed.unwrap_or(0), to_value(&counts)?)?;
    Ok(())
}

fn plot_files(cli: &Cli, args: &PlotArgs) -> CliResult<()> {
    let metrics: Vec<MetricsRow> = output::read_csv(&args.metrics)?;
    let retro: Vec<RetrospectiveRow> = match &args.retrospective {
        Some(p) => output::read_csv(p)?,
        None => Vec::new(),
    };
    let mut rec = Recorder::new(&cli.output_dir, "plot")?;
    draw_charts(&mut rec, &metrics, &retro, &args.title)?;
    let config = json!({
        "metrics": args.metrics,
        "retrospective": args.retrospective,
        "title": args.title,
    });
    rec.finish(config, cli.seed.unwrap_or(0), serde_json::Value::Null)?;
    Ok(())
}

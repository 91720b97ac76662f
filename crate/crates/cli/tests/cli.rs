use bap_core::fixtures::{ld11, ld12, ld12_solution};
use bap_core::io::{read_allocation, read_instance, write_allocation, write_instance};
use bap_core::model::{
    recipe_site_matrix, validate_allocation, CapacityVector, DaySnapshot, EligibilityTable, Order,
    RecipeId,
};
use bap_core::solvers::{brute_force_oracle, class_aggregate};
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bap(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bap"))
        .arg("--output-dir")
        .arg(out)
        .args(args)
        .env_remove("BAP_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) {
    let o = bap(out, args);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    ld12: String,
    ld12_alloc: String,
    ld11: String,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let p = |n: &str| root.join(n).to_string_lossy().into_owned();
    write_instance(&root.join("ld12.json"), &ld12(), None).unwrap();
    write_instance(&root.join("ld11.json"), &ld11(), None).unwrap();
    write_allocation(&root.join("ld12_alloc.json"), &ld12_solution()).unwrap();
    Fixture {
        ld12: p("ld12.json"),
        ld12_alloc: p("ld12_alloc.json"),
        ld11: p("ld11.json"),
        root,
        _dir: dir,
    }
}

#[test]
fn generate_is_deterministic_and_sized() {
    let f = fixture();
    let (a, b) = (f.root.join("a"), f.root.join("b"));
    for out in [&a, &b] {
        ok(
            out,
            &["--seed", "5", "generate", "--orders", "300", "--days", "4"],
        );
    }
    for k in 3..=6 {
        let name = format!("instances/ld{k}.json");
        let (x, y) = (a.join(&name), b.join(&name));
        assert_eq!(std::fs::read(&x).unwrap(), std::fs::read(&y).unwrap());
        let day = read_instance(&x).unwrap();
        assert_eq!(day.lead_day, -k);
        assert_eq!(day.orders.len(), 300);
        assert!(day
            .orders
            .iter()
            .all(|o| (1..=4).contains(&o.recipes.len())));
    }
    assert!(!a.join("instances/ld7.json").exists());
    let manifest = json(&a.join("manifest.json"));
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["command"], "generate");
}

#[test]
fn exact_solve_matches_the_oracle() {
    let f = fixture();
    let out = f.root.join("solve");
    ok(
        &out,
        &[
            "solve",
            "--instance",
            &f.ld11,
            "--prev-instance",
            &f.ld12,
            "--prev-allocation",
            &f.ld12_alloc,
        ],
    );
    let prev = recipe_site_matrix(&ld12(), &ld12_solution()).unwrap();
    let oracle = brute_force_oracle(&ld11(), &prev).unwrap();
    let result = json(&out.join("result.json"));
    assert_eq!(
        result["wmape_site"]["numerator"],
        oracle.metrics.site_numerator
    );
    assert_eq!(result["solver"], "exact");
    let alloc = read_allocation(&out.join("allocation.json")).unwrap();
    assert!(validate_allocation(&ld11(), &alloc).is_empty());

    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["config"]["budget_seconds"], 600.0);
    let outputs: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    for name in ["allocation.json", "result.json", "metrics.csv"] {
        assert!(outputs.iter().any(|o| o.ends_with(name)), "{outputs:?}");
    }
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "lead_day,solver,wmape_site,wmape_global,gap,real_fraction,elapsed_seconds"
    );
}

#[test]
fn tabu_from_greedy_never_worsens() {
    let f = fixture();
    let prev = [
        "--prev-instance",
        f.ld12.as_str(),
        "--prev-allocation",
        f.ld12_alloc.as_str(),
    ];
    let g = f.root.join("greedy");
    let mut args = vec![
        "--seed",
        "3",
        "solve",
        "--solver",
        "greedy",
        "--instance",
        &f.ld11,
    ];
    args.extend(prev);
    ok(&g, &args);
    let warm = g.join("allocation.json");
    let warm = warm.to_string_lossy();
    let t = f.root.join("tabu");
    let mut args = vec![
        "--seed",
        "3",
        "solve",
        "--solver",
        "tabu",
        "--instance",
        &f.ld11,
        "--warm-start",
        &warm,
    ];
    args.extend(prev);
    ok(&t, &args);
    let site = |d: &Path| {
        json(&d.join("result.json"))["wmape_site"]["numerator"]
            .as_u64()
            .unwrap()
    };
    assert!(site(&t) <= site(&g));
}

#[test]
fn exit_codes() {
    let f = fixture();
    let out = f.root.join("err");
    let missing = f.root.join("nope.json");
    let o = bap(&out, &["solve", "--instance", &missing.to_string_lossy()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.json"));

    let o = bap(&out, &["--budget", "-1", "solve", "--instance", &f.ld11]);
    assert_eq!(o.status.code(), Some(2));

    let bad = f.root.join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let o = bap(&out, &["solve", "--instance", &bad.to_string_lossy()]);
    assert_eq!(o.status.code(), Some(2));

    let table =
        EligibilityTable::from_matrix(&[vec![true, false, true], vec![false, true, true]]).unwrap();
    let orders = (1..=4)
        .map(|i| Order::new(i, vec![RecipeId(2)], true))
        .collect();
    let day = DaySnapshot::new(-4, orders, CapacityVector::new(vec![2, 1]), table).unwrap();
    let short = f.root.join("short.json");
    write_instance(&short, &day, None).unwrap();
    let o = bap(
        &out,
        &[
            "solve",
            "--solver",
            "greedy",
            "--instance",
            &short.to_string_lossy(),
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn milp_export_counts() {
    let f = fixture();
    let out = f.root.join("milp");
    ok(
        &out,
        &[
            "export-milp",
            "--instance",
            &f.ld11,
            "--prev-instance",
            &f.ld12,
            "--prev-allocation",
            &f.ld12_alloc,
        ],
    );
    let text = std::fs::read_to_string(out.join("model.mps")).unwrap();
    assert!(text.starts_with("NAME"));
    assert!(text.trim_end().ends_with("ENDATA"));
    let details = &json(&out.join("manifest.json"))["details"];
    assert_eq!(
        details["integer_columns"],
        class_aggregate(&ld11()).len() * 3
    );
}

#[test]
fn simulate_and_plot() {
    let f = fixture();
    let scenario = f.root.join("scenario.toml");
    std::fs::write(
        &scenario,
        "days = [-6, -5, -4, -3]\n\n[generator]\ntotal_orders = 200\n\n[capacity_overrides]\n\"-4\" = [40, 90]\n",
    )
    .unwrap();
    let out = f.root.join("sim");
    ok(
        &out,
        &[
            "--seed",
            "2",
            "simulate",
            "--scenario",
            &scenario.to_string_lossy(),
            "--solvers",
            "greedy,id_based",
            "--plots",
        ],
    );
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 2 * 4);
    let retro = std::fs::read_to_string(out.join("retrospective.csv")).unwrap();
    assert_eq!(
        retro.lines().next().unwrap(),
        "lead_day,solver,wmape_site,wmape_global"
    );
    assert!(std::fs::read_to_string(out.join("wmape.svg"))
        .unwrap()
        .contains("<svg"));

    let again = f.root.join("plot");
    ok(
        &again,
        &[
            "plot",
            "--metrics",
            &out.join("metrics.csv").to_string_lossy(),
            "--title",
            "t",
        ],
    );
    assert!(again.join("wmape.svg").exists());
}

#[test]
fn benchmark_is_deterministic() {
    let f = fixture();
    let run = |name: &str| {
        let out = f.root.join(name);
        ok(
            &out,
            &[
                "--seed",
                "9",
                "--budget",
                "5",
                "benchmark",
                "--orders-list",
                "150",
                "--repeats",
                "2",
                "--solvers",
                "greedy,itps,tabu",
                "--warmup-budget",
                "1",
            ],
        );
        std::fs::read_to_string(out.join("benchmark.csv")).unwrap()
    };
    let strip = |s: &str| -> Vec<String> {
        // elapsed time is the second to last column
        s.lines()
            .map(|l| {
                let mut cells: Vec<&str> = l.split(',').collect();
                let n = cells.len();
                cells.remove(n - 2);
                cells.join(",")
            })
            .collect()
    };
    let (a, b) = (run("b1"), run("b2"));
    assert_eq!(
        a.lines().next().unwrap(),
        "orders,repeat,seed,solver,lead_day,wmape_site,wmape_global,gap,improvement_vs_greedy,status,elapsed_seconds,error"
    );
    assert_eq!(a.lines().count(), 1 + 2 * 3);
    assert_eq!(strip(&a), strip(&b));
}

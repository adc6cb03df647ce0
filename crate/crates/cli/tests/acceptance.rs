//! Acceptance gate: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines always reach the terminal.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use mpaudit_core::audit::{exact_cost, random_audit, DEFAULT_NODE_BUDGET};
use mpaudit_core::capacity::{capacity, rademacher_draw};
use mpaudit_core::dataspace::{distinct_rows, gen_synthetic, Dataset, LabelModel, PointSet};
use mpaudit_core::diameter::{
    benign_overfitting_lower_bound, diam_bruteforce, diam_dictionary_closed_form, diam_empirical,
    diam_exhaustive_closed_form, ReductionConfig,
};
use mpaudit_core::hypothesis::{FamilyKind, Hyperparams, HypothesisClass, Labeling, TrainedClass};
use mpaudit_core::metrics::platform_model;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const EXACT_TOL: f64 = 1e-12;
const FIG2_SAME_STDERRS: f64 = 2.0;
const FIG2_TARGET: f64 = 1.0;
const FIG2_TARGET_TOL: f64 = 0.1;
const SINGLETON_STDERRS: f64 = 3.0;
const EMPIRICAL_REL_TOL: f64 = 0.05;
const MIN_SPEARMAN: f64 = 0.9;
const NEAR_ZERO_MANIPULABILITY: f64 = 0.1;
const MAX_COST_OF_EXHAUSTION: f64 = 0.05;

enum Verdict {
    Pass(String),
    Fail(String),
    /// Soft criteria report a miss without failing the gate.
    Warn(String),
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn bits(mask: u32, n: usize) -> Labeling {
    Labeling::from_bits((0..n).map(|i| mask >> i & 1 == 1).collect())
}

fn subsets(n: usize) -> impl Iterator<Item = PointSet> {
    (0u64..1 << n).map(move |s| PointSet::from_mask_bits(s, n))
}

fn ac1() -> Verdict {
    let ds = Dataset::from_group_sizes(4, 6).unwrap();
    let h = ds.sensitive_labeling();
    let mut worst = 0.0f64;
    let mut count = 0;
    for s in subsets(ds.n()) {
        let bf = diam_bruteforce(&HypothesisClass::Exhaustive, &h, &s, &ds).unwrap().value;
        worst = worst.max((bf - diam_exhaustive_closed_form(&s, &ds)).abs());
        count += 1;
    }
    check(worst <= EXACT_TOL, format!("{count} subsets of n=10, max |closed - brute| = {worst:e}"))
}

fn ac2() -> Verdict {
    let ds = Dataset::from_group_sizes(3, 5).unwrap();
    let n = ds.n();
    let mut worst = 0.0f64;
    let mut count = 0;
    for m in 0..=4 {
        for d in (0u32..1 << n).filter(|d| d.count_ones() as usize <= m) {
            let d = bits(d, n);
            for s in subsets(n) {
                let class = HypothesisClass::dictionary(m);
                let bf = diam_bruteforce(&class, &d, &s, &ds).unwrap().value;
                let cf = diam_dictionary_closed_form(&d, m, &s, &ds).unwrap();
                worst = worst.max((bf - cf).abs());
                count += 1;
            }
        }
    }
    check(worst <= EXACT_TOL, format!("{count} (m, d*, S) cells on n=8, max |closed - brute| = {worst:e}"))
}

fn ac3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=10);
        let n_a = rng.random_range(1..n);
        let ds = Dataset::from_group_sizes(n_a, n - n_a).unwrap();
        let s = PointSet::from_mask_bits(rng.random_range(0..1u64 << n), n);
        let bound = benign_overfitting_lower_bound(&s, 0.0, &ds).unwrap();
        let diam = diam_bruteforce(&HypothesisClass::Exhaustive, &Labeling::zeros(n), &s, &ds).unwrap().value;
        if bound > diam + EXACT_TOL {
            violations += 1;
        }
    }
    let mut balanced_nonzero = 0;
    for half in 1..=5 {
        let ds = Dataset::from_group_sizes(half, half).unwrap();
        for s in subsets(ds.n()) {
            if benign_overfitting_lower_bound(&s, 0.0, &ds).unwrap() != 0.0 {
                balanced_nonzero += 1;
            }
        }
    }
    check(
        violations == 0 && balanced_nonzero == 0,
        format!("1000 instances: {violations} bound violations; balanced groups: {balanced_nonzero} nonzero bounds"),
    )
}

fn min_sufficient_audit(ds: &Dataset, eps: f64) -> u32 {
    let mut best = u32::MAX;
    for sa in 0..=ds.n_a() {
        for sn in 0..=ds.n_not_a() {
            let (na, nn) = (ds.n_a(), ds.n_not_a());
            // diameter 2 − sA/nA − s¬A/n¬A, scaled by nA·n¬A to stay exact
            if ((2 * na * nn - sa * nn - sn * na) as f64) < eps * (na * nn) as f64 {
                best = best.min((sa + sn) as u32);
            }
        }
    }
    best
}

fn ac4() -> Verdict {
    let mut mismatches = Vec::new();
    let mut cases = 0;
    for n in 2..=10 {
        for n_a in 1..n {
            let ds = Dataset::from_group_sizes(n_a, n - n_a).unwrap();
            for eps in [0.1, 0.5, 1.0, 1.5] {
                let c = exact_cost(&HypothesisClass::Exhaustive, &ds, eps, DEFAULT_NODE_BUDGET).unwrap();
                if c != min_sufficient_audit(&ds, eps) {
                    mismatches.push((n_a, n - n_a, eps));
                }
                cases += 1;
            }
        }
    }
    let worked = exact_cost(&HypothesisClass::Exhaustive, &Dataset::from_group_sizes(2, 2).unwrap(), 0.6, DEFAULT_NODE_BUDGET)
        .unwrap();
    check(
        mismatches.is_empty() && worked == 3,
        format!("{cases} (dataset, eps) cases, mismatches {mismatches:?}; 4-point example Cost = {worked}"),
    )
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_mpaudit")
}

fn run_cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(bin()).args(args).output().expect("binary runs");
    let stderr = String::from_utf8_lossy(&out.stderr);
    if !out.status.success() {
        eprintln!("mpaudit {args:?} failed: {stderr}");
    }
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn read_table(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(str::to_string).collect();
    r.records()
        .map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(str::to_string)).collect())
        .collect()
}

fn num(row: &BTreeMap<String, String>, col: &str) -> f64 {
    row[col].parse().unwrap()
}

fn ac5(work: &Path) -> Verdict {
    let dir = work.join("fig2");
    let t = Instant::now();
    let (code, _) = run_cli(&["fig2", "--out-dir", dir.to_str().unwrap()]);
    let elapsed = t.elapsed();
    if code != 0 {
        return Verdict::Fail(format!("fig2 exited with {code}"));
    }
    let mut cells: BTreeMap<(u64, u64), BTreeMap<String, (f64, f64)>> = BTreeMap::new();
    for row in read_table(&dir.join("fig2.csv")) {
        let k = (num(&row, "budget") as u64, num(&row, "memory") as u64);
        cells.entry(k).or_default().insert(row["strategy"].clone(), (num(&row, "diam"), num(&row, "stderr")));
    }
    let pair = |k: &(u64, u64)| (cells[k]["optimal"], cells[k]["random"]);
    let below = cells.keys().filter(|k| pair(k).1 .0 < pair(k).0 .0 - EXACT_TOL).count();
    let high_mem: Vec<_> = cells.keys().filter(|k| k.0 == 100 && k.1 > 700).collect();
    let apart: Vec<_> = high_mem
        .iter()
        .filter(|k| {
            let ((o, _), (r, se)) = pair(k);
            (r - o).abs() > FIG2_SAME_STDERRS * se
        })
        .collect();
    let ((opt_500, _), _) = pair(&(300, 500));
    let ((o700, _), (r700, se700)) = pair(&(100, 700));
    let ok = below == 0
        && !high_mem.is_empty()
        && apart.is_empty()
        && (opt_500 - FIG2_TARGET).abs() <= FIG2_TARGET_TOL
        && elapsed < Duration::from_secs(120)
        && cells.len() == 63;
    check(
        ok,
        format!(
            "(a) random below optimal at {below}/{} cells; (b) budget 100, memory > 700: {} of {} cells differ by > 2 stderr \
             [memory 700: optimal {o700:.4}, random {r700:.4} ± {se700:.4}]; (c) budget 300, memory 500: optimal {opt_500:.4}; {:.1}s",
            cells.len(),
            apart.len(),
            high_mem.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn ac6() -> Verdict {
    let ds = Dataset::from_group_sizes(300, 700).unwrap();
    let full = capacity(&HypothesisClass::Exhaustive, &ds, 500, 1, 6).unwrap();
    let single = capacity(&HypothesisClass::dictionary(0), &ds, 2000, 1, 6).unwrap();
    let small = Dataset::from_group_sizes(4, 6).unwrap();
    let n = small.n();
    let mut mismatches = 0;
    let mut draws = 0;
    for seed in 0..60u64 {
        for memory in 0..=n {
            let m = 1 + (seed as usize * 7 + memory) % n;
            let d = rademacher_draw(&HypothesisClass::dictionary(memory), &small, m, seed, 1).unwrap();
            let best = (0u32..1 << n)
                .filter(|h| h.count_ones() as usize <= memory)
                .map(|h| {
                    let s: i32 =
                        d.sample.iter().zip(&d.sigma).map(|(&i, &s)| if h >> i & 1 == 1 { s as i32 } else { -(s as i32) }).sum();
                    s as f64 / m as f64
                })
                .fold(f64::NEG_INFINITY, f64::max);
            if (best - d.achieved).abs() > EXACT_TOL {
                mismatches += 1;
            }
            draws += 1;
        }
    }
    check(
        full.mean == 1.0 && full.stderr == 0.0 && single.mean.abs() <= SINGLETON_STDERRS * single.stderr && mismatches == 0,
        format!(
            "exhaustive {} ± {}; single hypothesis {:.4} ± {:.4} over {} draws; dictionary draws vs enumeration: {mismatches}/{draws} mismatches",
            full.mean, full.stderr, single.mean, single.stderr, single.draws
        ),
    )
}

fn ac7() -> Verdict {
    let ds = gen_synthetic(200, 0.3, &LabelModel::default(), 7).unwrap();
    let distinct = distinct_rows(&ds);
    let p: Hyperparams = serde_json::from_value(json!({"max_depth": 128, "ccp_alpha": 0.0})).unwrap();
    let tree = TrainedClass::new(FamilyKind::Tree, p).unwrap();
    let mut uncertified = 0;
    let mut outside = 0;
    let mut worst_rel = 0.0f64;
    for rep in 0..10u64 {
        let h = platform_model(&HypothesisClass::Trained(tree.clone()), &ds, rep).unwrap();
        let s = random_audit(&ds, 0.1, 0.1, 1000 + rep).unwrap().point_set();
        let cf = diam_exhaustive_closed_form(&s, &ds);
        let r = diam_empirical(&tree, &h, &s, &ds, &ReductionConfig { seed: rep, ..Default::default() }).unwrap();
        if !r.certified {
            uncertified += 1;
            continue;
        }
        if r.value > cf + EXACT_TOL {
            outside += 1;
        }
        worst_rel = worst_rel.max((cf - r.value).abs() / cf);
    }
    check(
        distinct == ds.n() && uncertified == 0 && outside == 0 && worst_rel <= EMPIRICAL_REL_TOL,
        format!(
            "{distinct}/{} distinct rows; 10 audits: {uncertified} uncertified, {outside} above closed form, worst relative gap {worst_rel:.4}",
            ds.n()
        ),
    )
}

fn write_config(path: &Path, value: serde_json::Value) {
    std::fs::write(path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
}

fn ac8(work: &Path) -> Verdict {
    let dir = work.join("scatter");
    std::fs::create_dir_all(&dir).unwrap();
    let mut grid: Vec<serde_json::Value> =
        [1, 2, 3, 4, 6, 8, 12, 16, 128].iter().map(|d| json!({"max_depth": d, "ccp_alpha": 0.0})).collect();
    grid.push(json!({"max_depth": 4, "ccp_alpha": 0.5}));
    let cfg = dir.join("config.json");
    write_config(
        &cfg,
        json!({
            "experiment_id": "acceptance-scatter",
            "seed": 8,
            "out_dir": dir,
            "dataset": {"source": "synthetic", "n": 1000, "p_sensitive": 0.3, "seed": 8},
            "families": [{"kind": "dictionary"}, {"kind": "tree", "grid": grid}],
        }),
    );
    let (code, _) = run_cli(&["scatter", "--config", cfg.to_str().unwrap()]);
    if code != 0 {
        return Verdict::Fail(format!("scatter exited with {code}"));
    }
    let spearman: BTreeMap<String, f64> = read_table(&dir.join("scatter_results.csv"))
        .into_iter()
        .filter(|r| r["metric"] == "spearman")
        .map(|r| (r["family"].clone(), num(&r, "value")))
        .collect();
    let rows = read_table(&dir.join("scatter.csv"));
    let near_zero: Vec<_> = rows.iter().filter(|r| num(r, "capacity") < mpaudit_core::metrics::NEAR_ZERO_CAPACITY).collect();
    let loud: Vec<String> = near_zero
        .iter()
        .filter(|r| num(r, "manipulability") > NEAR_ZERO_MANIPULABILITY)
        .map(|r| r["class_id"].clone())
        .collect();
    let rho_dict = spearman.get("dictionary").copied().unwrap_or(f64::NAN);
    let rho_tree = spearman.get("tree").copied().unwrap_or(f64::NAN);
    check(
        rho_dict >= MIN_SPEARMAN && rho_tree >= MIN_SPEARMAN && !near_zero.is_empty() && loud.is_empty(),
        format!(
            "Spearman dictionary {rho_dict:.3}, tree {rho_tree:.3}; {} near-zero-capacity classes, too manipulable: {loud:?}",
            near_zero.len()
        ),
    )
}

fn ac9(work: &Path) -> Verdict {
    let dir = work.join("coe");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("config.json");
    write_config(
        &cfg,
        json!({
            "experiment_id": "acceptance-coe",
            "seed": 9,
            "out_dir": dir,
            "dataset": {"source": "synthetic", "n": 1000, "p_sensitive": 0.3, "seed": 9},
            "families": [{
                "kind": "gbdt",
                "axes": {"max_depth": [1, 2, 4, 8], "reg_lambda": [0.0, 0.001, 1.0, 1000000.0]},
                "fixed": {"n_estimators": 100}
            }],
        }),
    );
    let (code, _) = run_cli(&["coe", "--config", cfg.to_str().unwrap()]);
    if code != 0 {
        return Verdict::Fail(format!("coe exited with {code}"));
    }
    let row = &read_table(&dir.join("coe.csv"))[0];
    let (cost, lo, hi) = (num(row, "cost_of_exhaustion"), num(row, "ci_low"), num(row, "ci_high"));
    let detail = format!(
        "gbdt 16-class grid, n=1000: cost {cost:.4}, 95% CI [{lo:.4}, {hi:.4}], H_acc {} H_mu {}",
        row["h_acc"], row["h_mu"]
    );
    if (0.0..=MAX_COST_OF_EXHAUSTION).contains(&cost) && lo <= cost && cost <= hi {
        Verdict::Pass(detail)
    } else {
        Verdict::Warn(detail)
    }
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Runs every subcommand into `dir` and returns the files written plus stdout.
fn run_all(dir: &Path, threads: &str) -> BTreeMap<PathBuf, Vec<u8>> {
    let cfg = dir.with_extension("json");
    write_config(
        &cfg,
        json!({
            "experiment_id": "acceptance-determinism",
            "seed": 10,
            "dataset": {"source": "synthetic", "n": 160, "p_sensitive": 0.3, "seed": 10},
            "families": [
                {"kind": "dictionary", "memories": [0, 40, 80, 160]},
                {"kind": "tree", "axes": {"max_depth": [1, 3, 64], "ccp_alpha": [0.0]}},
                {"kind": "perceptron"}
            ],
            "reps": 3,
            "capacity": {"draws": 4, "restarts": 2},
            "budget_fractions": [0.05, 0.2],
            "bootstrap_resamples": 50,
            "fig2": {"n": 200, "memories": [0, 100, 200], "budgets": [20, 60], "reps": 5}
        }),
    );
    let d = dir.to_str().unwrap();
    let c = cfg.to_str().unwrap();
    let common = ["--config", c, "--out-dir", d, "--threads", threads];
    let mut stdout = Vec::new();
    let data = dir.join("data.csv");
    let runs: Vec<Vec<&str>> = vec![
        vec!["gen", "--out", data.to_str().unwrap()],
        vec!["diam", "--class", "tree:{\"max_depth\":64}"],
        vec!["diam", "--class", "dictionary:40"],
        vec!["cost", "--set", "dataset.n=8"],
        vec!["fig2"],
        vec!["capacity"],
        vec!["manipulability"],
        vec!["scatter"],
        vec!["budget-sweep"],
        vec!["coe"],
    ];
    for args in runs {
        let all: Vec<&str> = args.iter().copied().chain(common).collect();
        let (code, out) = run_cli(&all);
        assert_eq!(code, 0, "{all:?}");
        stdout.extend(out.into_bytes());
    }
    let mut files = snapshot(dir);
    files.insert(PathBuf::from("<stdout>"), stdout);
    files
}

fn ac10(work: &Path) -> Verdict {
    let dir = work.join("determinism");
    let first = run_all(&dir, "2");
    std::fs::remove_dir_all(&dir).unwrap();
    let second = run_all(&dir, "2");
    let rerun_diff: Vec<_> = first.keys().filter(|k| first.get(*k) != second.get(*k)).collect();
    std::fs::remove_dir_all(&dir).unwrap();
    let single = run_all(&dir, "1");
    let is_config_echo = |p: &PathBuf| p.to_string_lossy().ends_with("_config.json");
    let thread_diff: Vec<_> = first.keys().filter(|k| !is_config_echo(k) && first.get(*k) != single.get(*k)).collect();
    let figures = first.keys().filter(|k| k.extension().is_some_and(|e| e == "svg")).count();
    let tables = first.keys().filter(|k| k.extension().is_some_and(|e| e == "csv")).count();
    check(
        rerun_diff.is_empty() && thread_diff.is_empty() && second.len() == first.len() && figures > 0,
        format!(
            "{tables} CSV + {figures} SVG files over 9 subcommands; rerun differences {rerun_diff:?}; 1 vs 2 threads differences {thread_diff:?}"
        ),
    )
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn main() {
    let work = tempfile::tempdir().unwrap();
    let w = work.path();
    let criteria: Vec<Criterion> = vec![
        ("closed form vs oracle, exhaustive", Box::new(ac1)),
        ("closed form vs oracle, dictionary", Box::new(ac2)),
        ("benign-overfitting bound", Box::new(ac3)),
        ("exact cost vs minimal audit", Box::new(ac4)),
        ("dictionary audit curves", Box::new(|| ac5(w))),
        ("Rademacher exactness", Box::new(ac6)),
        ("empirical reduction sanity", Box::new(ac7)),
        ("capacity-manipulability link", Box::new(|| ac8(w))),
        ("cost of exhaustion (soft)", Box::new(|| ac9(w))),
        ("determinism", Box::new(|| ac10(w))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let verdict = run();
        let secs = t.elapsed().as_secs_f64();
        let (tag, detail) = match verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Warn(d) => ("WARN", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("AC{:<2} {tag} {name}: {detail} ({secs:.1}s)", i + 1);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

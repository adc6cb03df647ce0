//! Subcommand implementations.
//!
//! Each family gets one seed derived from the master seed. Its sub-seeds
//! follow the cost-of-exhaustion layout (`[0]` cross-validation, `[1]`
//! manipulability, `[2]` capacity) and are shared by all classes of the
//! family, so reps are paired and every command reports the same numbers
//! for the same (family, metric).

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mpaudit_core::audit::{exact_cost, random_audit, AuditSet};
use mpaudit_core::capacity::capacity;
use mpaudit_core::dataspace::{write_csv, Dataset};
use mpaudit_core::diameter::{
    diam_bruteforce, diam_dictionary_closed_form, diam_empirical, diam_exhaustive_closed_form,
    optimal_dictionary_audit, random_dictionary_audit, DiameterResult, OnesPlacement,
};
use mpaudit_core::hypothesis::{FamilyKind, Hyperparams, HypothesisClass, TrainedClass};
use mpaudit_core::metrics::{
    cost_of_exhaustion, cv_accuracy, manipulability, platform_model, stratified_folds, CoeOptions, DiamMethod,
};
use mpaudit_core::stats::spearman;
use mpaudit_core::{par, seed, AuditError};
use serde_json::json;

use crate::config::{resolve_families, ExperimentConfig, ResolvedClass, ResolvedFamily};
use crate::error::{CliError, CliResult};
use crate::sink::{ResultRow, ResultSink, RowKey};
use crate::svg::{histogram, Chart, Point, Series, Style};

const TAG_FAMILY: u64 = 1;
const TAG_FIG2: u64 = 2;
const TAG_PLATFORM: u64 = 3;
const TAG_AUDIT: u64 = 4;

const SUB_CV: u64 = 0;
const SUB_MANIP: u64 = 1;
const SUB_CAPACITY: u64 = 2;

/// Marker class id for family-level rows.
pub const FAMILY_ROW: &str = "*";

fn family_tag(name: &str) -> u64 {
    match name {
        "exhaustive" => 0,
        "dictionary" => 1,
        other => 2 + FamilyKind::ALL.iter().position(|k| k.name() == other).unwrap_or(99) as u64,
    }
}

fn key(family: &str, class_id: &str, hyperparams_json: &str, metric: &str) -> RowKey {
    RowKey {
        family: family.into(),
        class_id: class_id.into(),
        hyperparams_json: hyperparams_json.into(),
        metric: metric.into(),
    }
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] < v[b] { i } else { b })
}

/// Shortest round-trip decimal, without a trailing `.0`.
fn fmt_f(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let s = format!("{v:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

/// Shared state of one command invocation.
pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub resume: bool,
    pub command: &'static str,
}

impl Ctx {
    fn family_seed(&self, family: &str) -> u64 {
        seed::derive(self.cfg.seed, &[TAG_FAMILY, family_tag(family)])
    }

    fn seed_for(&self, sub: u64, family: &str) -> u64 {
        seed::derive(self.family_seed(family), &[sub])
    }

    fn out(&self, file: &str) -> PathBuf {
        self.cfg.out_dir.join(file)
    }

    /// Echoes the resolved config and opens the command's results file.
    /// Resuming under a different config is refused.
    fn open_sink(&self) -> CliResult<ResultSink> {
        std::fs::create_dir_all(&self.cfg.out_dir)?;
        let stem = self.command.replace('-', "_");
        let cfg_path = self.out(&format!("{stem}_config.json"));
        let text = serde_json::to_string_pretty(&self.cfg).expect("config serializes") + "\n";
        if self.resume && cfg_path.exists() && std::fs::read_to_string(&cfg_path)? != text {
            return Err(CliError::config(format!(
                "cannot resume: {} was written with a different config",
                cfg_path.display()
            )));
        }
        std::fs::write(&cfg_path, text)?;
        ResultSink::open(&self.out(&format!("{stem}_results.csv")), self.resume)
    }

    #[allow(clippy::too_many_arguments)]
    fn row(
        &self,
        family: &str,
        class_id: &str,
        hyperparams_json: &str,
        metric: &str,
        value: f64,
        stderr: Option<f64>,
        reps: Option<usize>,
        seed: u64,
        started: Instant,
    ) -> ResultRow {
        ResultRow {
            experiment_id: self.cfg.experiment_id.clone(),
            family: family.into(),
            class_id: class_id.into(),
            hyperparams_json: hyperparams_json.into(),
            metric: metric.into(),
            value,
            stderr,
            reps,
            seed,
            wallclock_ms: self.cfg.record_timing.then(|| started.elapsed().as_millis() as u64),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn class_row(
        &self,
        family: &str,
        class: &ResolvedClass,
        metric: &str,
        value: f64,
        stderr: Option<f64>,
        reps: Option<usize>,
        seed: u64,
        started: Instant,
    ) -> ResultRow {
        self.row(family, &class.id, &class.hyperparams_json(), metric, value, stderr, reps, seed, started)
    }

    fn dataset(&self) -> CliResult<Dataset> {
        self.cfg.dataset.load()
    }

    fn families(&self, dataset: &Dataset) -> CliResult<Vec<ResolvedFamily>> {
        if self.cfg.families.is_empty() {
            return Err(CliError::config("no families configured"));
        }
        resolve_families(&self.cfg.families, dataset)
    }
}

/// Computes the rows of every item whose marker key is missing, a chunk
/// at a time in parallel, and appends them in item order. `compute` must
/// return the marker row last so an interrupted item is redone.
fn fill<T: Sync>(
    sink: &mut ResultSink,
    items: &[T],
    marker: impl Fn(&T) -> RowKey,
    compute: impl Fn(&T) -> CliResult<Vec<ResultRow>> + Sync,
) -> CliResult<()> {
    let todo: Vec<&T> = items.iter().filter(|t| sink.get(&marker(t)).is_none()).collect();
    for chunk in todo.chunks(par::current_threads().max(1)) {
        for rows in par::try_map_indexed(chunk.len(), |i| compute(chunk[i]))? {
            for r in rows {
                sink.push(r)?;
            }
        }
    }
    Ok(())
}

fn stored(sink: &ResultSink, k: &RowKey) -> ResultRow {
    sink.get(k).cloned().expect("row filled above")
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn opt_f(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

// ---------------------------------------------------------------- metrics

/// (mean, stderr) of capacity per class of `fam`.
fn capacity_values(ctx: &Ctx, sink: &mut ResultSink, ds: &Dataset, fam: &ResolvedFamily) -> CliResult<Vec<(f64, f64)>> {
    let seed = ctx.seed_for(SUB_CAPACITY, &fam.name);
    let (draws, restarts) = (ctx.cfg.capacity.draws, ctx.cfg.capacity.restarts);
    let k = |c: &ResolvedClass| key(&fam.name, &c.id, &c.hyperparams_json(), "capacity");
    fill(sink, &fam.classes, k, |c| {
        let t = Instant::now();
        let est = capacity(&c.class, ds, draws, restarts, seed)?;
        Ok(vec![ctx.class_row(&fam.name, c, "capacity", est.mean, Some(est.stderr), Some(draws), seed, t)])
    })?;
    Ok(fam.classes.iter().map(|c| stored(sink, &k(c))).map(|r| (r.value, r.stderr.unwrap_or(0.0))).collect())
}

fn manip_metric(budget_fraction: f64, sweep: bool) -> String {
    if sweep {
        format!("manipulability@{}", fmt_f(budget_fraction))
    } else {
        "manipulability".into()
    }
}

/// (mean, stderr) of manipulability per selected class of `fam`.
fn manip_values(
    ctx: &Ctx,
    sink: &mut ResultSink,
    ds: &Dataset,
    fam: &ResolvedFamily,
    classes: &[&ResolvedClass],
    budget_fraction: f64,
    metric: &str,
) -> CliResult<Vec<(f64, f64)>> {
    let seed = ctx.seed_for(SUB_MANIP, &fam.name);
    let reps = ctx.cfg.reps;
    let k = |c: &&ResolvedClass| key(&fam.name, &c.id, &c.hyperparams_json(), metric);
    fill(sink, classes, k, |c| {
        let t = Instant::now();
        let est = manipulability(&c.class, ds, budget_fraction, reps, seed, &ctx.cfg.diam_method)?;
        if est.uncertified_reps > 0 {
            log::warn!("{} {}: {} of {reps} reps uncertified", fam.name, c.id, est.uncertified_reps);
        }
        let unc = format!("{metric}.uncertified_reps");
        Ok(vec![
            ctx.class_row(&fam.name, c, &unc, est.uncertified_reps as f64, None, Some(reps), seed, t),
            ctx.class_row(&fam.name, c, metric, est.mean, Some(est.stderr), Some(reps), seed, t),
        ])
    })?;
    Ok(classes.iter().map(|c| stored(sink, &k(c))).map(|r| (r.value, r.stderr.unwrap_or(0.0))).collect())
}

fn trained(c: &ResolvedClass) -> Option<&TrainedClass> {
    match &c.class {
        HypothesisClass::Trained(t) => Some(t),
        _ => None,
    }
}

/// Cross-validated accuracy per class of a trained family, and the index
/// of the most accurate class (lowest index on ties).
fn cv_values(ctx: &Ctx, sink: &mut ResultSink, ds: &Dataset, fam: &ResolvedFamily) -> CliResult<(Vec<f64>, usize)> {
    let base = ctx.seed_for(SUB_CV, &fam.name);
    let fold_of = stratified_folds(ds, ctx.cfg.folds, seed::derive(base, &[0]))?;
    let fit_seed = seed::derive(base, &[1]);
    let k = |c: &ResolvedClass| key(&fam.name, &c.id, &c.hyperparams_json(), "cv_accuracy");
    fill(sink, &fam.classes, k, |c| {
        let t = Instant::now();
        let tc = trained(c).expect("trained family");
        let acc = cv_accuracy(tc, ds, &fold_of, fit_seed)?;
        Ok(vec![ctx.class_row(&fam.name, c, "cv_accuracy", acc, None, Some(ctx.cfg.folds), base, t)])
    })?;
    let acc: Vec<f64> = fam.classes.iter().map(|c| stored(sink, &k(c)).value).collect();
    let best = argmax(&acc);
    Ok((acc, best))
}

// --------------------------------------------------------------- commands

pub fn gen(ctx: &Ctx, out: Option<&Path>) -> CliResult<()> {
    let ds = ctx.dataset()?;
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            write_csv(&ds, std::fs::File::create(p)?)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(&ds, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

/// Parses `exhaustive`, `dictionary:<m>`, `<family>` or `<family>:<json>`.
pub fn parse_class(spec: &str) -> CliResult<HypothesisClass> {
    let (name, rest) = match spec.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (spec, None),
    };
    match (name, rest) {
        ("exhaustive", None) => Ok(HypothesisClass::Exhaustive),
        ("dictionary", Some(m)) => m
            .parse()
            .map(HypothesisClass::dictionary)
            .map_err(|_| CliError::config(format!("bad dictionary memory `{m}`"))),
        (family, params) => {
            let kind: FamilyKind = family
                .parse()
                .map_err(|_| CliError::config(format!("unknown class `{spec}`")))?;
            let params: Hyperparams = match params {
                Some(p) => serde_json::from_str(p).map_err(|e| CliError::config(format!("class parameters: {e}")))?,
                None => Hyperparams::new(),
            };
            Ok(HypothesisClass::Trained(TrainedClass::new(kind, params)?))
        }
    }
}

pub struct DiamArgs<'a> {
    pub class: &'a str,
    pub audit: Option<&'a Path>,
    pub budget_fraction: Option<f64>,
}

pub fn diam(ctx: &Ctx, args: &DiamArgs) -> CliResult<()> {
    let ds = ctx.dataset()?;
    let class = parse_class(args.class)?;
    let h_star = platform_model(&class, &ds, seed::derive(ctx.cfg.seed, &[TAG_PLATFORM]))?;
    let audit = match args.audit {
        Some(p) => {
            let a = AuditSet::read_jsonl(std::io::BufReader::new(std::fs::File::open(p)?))?;
            if let Some(&q) = a.queries().iter().find(|&&q| q >= ds.n()) {
                return Err(AuditError::Data(format!("audit query {q} outside dataset of size {}", ds.n())).into());
            }
            a
        }
        None => {
            let bf = args.budget_fraction.unwrap_or(ctx.cfg.budget_fraction);
            random_audit(&ds, bf, bf, seed::derive(ctx.cfg.seed, &[TAG_AUDIT]))?
        }
    };
    let s = audit.point_set();
    let res: DiameterResult = match (&ctx.cfg.diam_method, &class) {
        (DiamMethod::BruteForce, _) => diam_bruteforce(&class, &h_star, &s, &ds)?,
        (DiamMethod::Auto | DiamMethod::ClosedForm, HypothesisClass::Exhaustive) => {
            DiameterResult::closed_form(diam_exhaustive_closed_form(&s, &ds))
        }
        (DiamMethod::Auto | DiamMethod::ClosedForm, HypothesisClass::Dictionary { memory }) => {
            DiameterResult::closed_form(diam_dictionary_closed_form(&h_star, *memory, &s, &ds)?)
        }
        (DiamMethod::ClosedForm, HypothesisClass::Trained(_)) => {
            return Err(AuditError::IncompatibleMethod { method: "closed-form".into(), class: class.label() }.into())
        }
        (DiamMethod::Auto, HypothesisClass::Trained(t)) => diam_empirical(t, &h_star, &s, &ds, &Default::default())?,
        (DiamMethod::Empirical(cfg), HypothesisClass::Trained(t)) => diam_empirical(t, &h_star, &s, &ds, cfg)?,
        (DiamMethod::Empirical(_), _) => {
            return Err(AuditError::IncompatibleMethod { method: "empirical".into(), class: class.label() }.into())
        }
    };
    let out = json!({
        "class": class.label(),
        "n": ds.n(),
        "audit_size": s.len(),
        "kind": res.kind,
        "value": res.value,
        "certified": res.certified,
        "violations_up": res.violations_up,
        "violations_down": res.violations_down,
        "h_star": h_star.digest(),
        "h_up": res.h_up.as_ref().map(|h| h.digest()),
        "h_down": res.h_down.as_ref().map(|h| h.digest()),
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    Ok(())
}

pub fn cost(ctx: &Ctx, class_spec: &str, epsilons: &[f64], node_budget: usize) -> CliResult<()> {
    let ds = ctx.dataset()?;
    let class = parse_class(class_spec)?;
    let mut sink = ctx.open_sink()?;
    let label = class.label();
    let family = match &class {
        HypothesisClass::Exhaustive => "exhaustive".to_string(),
        HypothesisClass::Dictionary { .. } => "dictionary".to_string(),
        HypothesisClass::Trained(t) => t.family.to_string(),
    };
    for &eps in epsilons {
        let metric = format!("exact_cost@{}", fmt_f(eps));
        let k = key(&family, &label, "{}", &metric);
        if sink.get(&k).is_none() {
            let t = Instant::now();
            let c = exact_cost(&class, &ds, eps, node_budget)?;
            sink.push(ctx.row(&family, &label, "{}", &metric, c as f64, None, None, ctx.cfg.seed, t))?;
        }
        println!("epsilon={} cost={}", fmt_f(eps), stored(&sink, &k).value);
    }
    Ok(())
}

pub fn fig2(ctx: &Ctx) -> CliResult<()> {
    let f = &ctx.cfg.fig2;
    if !(0.0..=1.0).contains(&f.p_sensitive) {
        return Err(CliError::config("fig2.p_sensitive must lie in [0, 1]"));
    }
    let n_a = (f.p_sensitive * f.n as f64).round() as usize;
    let ds = Dataset::from_group_sizes(n_a, f.n - n_a)?;
    if let Some(m) = f.memories.iter().find(|&&m| m > f.n) {
        return Err(CliError::config(format!("fig2 memory {m} exceeds n = {}", f.n)));
    }
    if let Some(b) = f.budgets.iter().find(|&&b| b > f.n) {
        return Err(CliError::config(format!("fig2 budget {b} exceeds n = {}", f.n)));
    }
    let mut sink = ctx.open_sink()?;
    let cells: Vec<(usize, usize)> =
        f.budgets.iter().flat_map(|&b| f.memories.iter().map(move |&m| (b, m))).collect();
    let hp = |&(b, m): &(usize, usize)| json!({ "budget": b, "memory": m }).to_string();
    let id = |m: usize| format!("dictionary-m{m:04}");
    let seed_of = |b: usize| seed::derive(ctx.cfg.seed, &[TAG_FIG2, b as u64]);
    fill(
        &mut sink,
        &cells,
        |c| key("dictionary", &id(c.1), &hp(c), "diam_random"),
        |c| {
            let (b, m) = *c;
            let t = Instant::now();
            let placement = OnesPlacement::proportional(m, &ds);
            let (opt, _) = optimal_dictionary_audit(m, b, &ds, placement)?;
            let (mean, se, _) = random_dictionary_audit(m, b, &ds, placement, f.reps, seed_of(b))?;
            Ok(vec![
                ctx.row("dictionary", &id(m), &hp(c), "diam_optimal", opt, Some(0.0), None, 0, t),
                ctx.row("dictionary", &id(m), &hp(c), "diam_random", mean, Some(se), Some(f.reps), seed_of(b), t),
            ])
        },
    )?;

    let mut table = Vec::new();
    let mut chart = Chart::new("Dictionary diameter after audit", "memory", "mu-diameter");
    for (bi, &b) in f.budgets.iter().enumerate() {
        let mut opt_pts = Vec::new();
        let mut rnd_pts = Vec::new();
        for &m in &f.memories {
            let c = (b, m);
            let o = stored(&sink, &key("dictionary", &id(m), &hp(&c), "diam_optimal"));
            let r = stored(&sink, &key("dictionary", &id(m), &hp(&c), "diam_random"));
            table.push(vec![m.to_string(), b.to_string(), "optimal".into(), fmt_f(o.value), opt_f(o.stderr)]);
            table.push(vec![m.to_string(), b.to_string(), "random".into(), fmt_f(r.value), opt_f(r.stderr)]);
            opt_pts.push(Point::new(m as f64, o.value));
            rnd_pts.push(Point { y_err: r.stderr, ..Point::new(m as f64, r.value) });
        }
        chart.series.push(Series { name: format!("optimal, budget {b}"), style: Style::Line { dashed: true }, color: bi, points: opt_pts });
        chart.series.push(Series { name: format!("random, budget {b}"), style: Style::Line { dashed: false }, color: bi, points: rnd_pts });
    }
    write_table(&ctx.out("fig2.csv"), &["memory", "budget", "strategy", "diam", "stderr"], &table)?;
    write_text(&ctx.out("fig2.svg"), &chart.render())
}

fn histogram_chart(title: &str, x_label: &str, families: &[(String, Vec<f64>)]) -> Chart {
    let mut chart = Chart::new(title, x_label, "classes");
    for (i, (name, values)) in families.iter().enumerate() {
        chart.series.push(Series { name: name.clone(), style: Style::Bars, color: i, points: histogram(values, 10) });
    }
    chart
}

pub fn capacity_cmd(ctx: &Ctx) -> CliResult<()> {
    let ds = ctx.dataset()?;
    let fams = ctx.families(&ds)?;
    let mut sink = ctx.open_sink()?;
    let mut table = Vec::new();
    for fam in &fams {
        let vals = capacity_values(ctx, &mut sink, &ds, fam)?;
        for (c, (mean, se)) in fam.classes.iter().zip(&vals) {
            table.push(vec![c.id.clone(), fam.name.clone(), c.hyperparams_json(), fmt_f(*mean), fmt_f(*se)]);
        }
        let chart = histogram_chart(&format!("Capacity, {}", fam.name), "capacity", &[(fam.name.clone(), vals.iter().map(|v| v.0).collect())]);
        write_text(&ctx.out(&format!("capacity_{}.svg", fam.name)), &chart.render())?;
    }
    write_table(&ctx.out("capacity.csv"), &["class_id", "family", "hyperparams_json", "mean", "stderr"], &table)
}

pub fn manipulability_cmd(ctx: &Ctx) -> CliResult<()> {
    let ds = ctx.dataset()?;
    let fams = ctx.families(&ds)?;
    let mut sink = ctx.open_sink()?;
    let bf = ctx.cfg.budget_fraction;
    let metric = manip_metric(bf, false);
    let mut table = Vec::new();
    for fam in &fams {
        let classes: Vec<&ResolvedClass> = fam.classes.iter().collect();
        let vals = manip_values(ctx, &mut sink, &ds, fam, &classes, bf, &metric)?;
        for (c, (mean, se)) in fam.classes.iter().zip(&vals) {
            let unc = stored(&sink, &key(&fam.name, &c.id, &c.hyperparams_json(), &format!("{metric}.uncertified_reps")));
            table.push(vec![
                c.id.clone(),
                fam.name.clone(),
                c.hyperparams_json(),
                fmt_f(*mean),
                fmt_f(*se),
                fmt_f(unc.value),
            ]);
        }
        let chart = histogram_chart(
            &format!("Manipulability, {} (budget fraction {})", fam.name, fmt_f(bf)),
            "mu-diameter",
            &[(fam.name.clone(), vals.iter().map(|v| v.0).collect())],
        );
        write_text(&ctx.out(&format!("manipulability_{}.svg", fam.name)), &chart.render())?;
    }
    write_table(
        &ctx.out("manipulability.csv"),
        &["class_id", "family", "hyperparams_json", "mean", "stderr", "uncertified_reps"],
        &table,
    )
}

pub fn scatter(ctx: &Ctx) -> CliResult<()> {
    let ds = ctx.dataset()?;
    let fams = ctx.families(&ds)?;
    let mut sink = ctx.open_sink()?;
    let bf = ctx.cfg.budget_fraction;
    let metric = manip_metric(bf, false);
    let mut table = Vec::new();
    let mut chart = Chart::new("Manipulability versus capacity", "capacity", "manipulability");
    for (fi, fam) in fams.iter().enumerate() {
        let cap = capacity_values(ctx, &mut sink, &ds, fam)?;
        let classes: Vec<&ResolvedClass> = fam.classes.iter().collect();
        let man = manip_values(ctx, &mut sink, &ds, fam, &classes, bf, &metric)?;
        let h_opt = match fam.model_family {
            Some(_) => Some(cv_values(ctx, &mut sink, &ds, fam)?.1),
            None => None,
        };
        let xs: Vec<f64> = cap.iter().map(|v| v.0).collect();
        let ys: Vec<f64> = man.iter().map(|v| v.0).collect();
        if let Some(rho) = spearman(&xs, &ys) {
            let t = Instant::now();
            sink.push(ctx.row(&fam.name, FAMILY_ROW, "{}", "spearman", rho, None, Some(xs.len()), ctx.cfg.seed, t))?;
        }
        let mut points = Vec::new();
        for (i, c) in fam.classes.iter().enumerate() {
            let is_opt = h_opt == Some(i);
            table.push(vec![
                fam.name.clone(),
                c.id.clone(),
                c.hyperparams_json(),
                fmt_f(cap[i].0),
                fmt_f(cap[i].1),
                fmt_f(man[i].0),
                fmt_f(man[i].1),
                is_opt.to_string(),
            ]);
            points.push(Point { x: cap[i].0, y: man[i].0, x_err: Some(cap[i].1), y_err: Some(man[i].1), star: is_opt });
        }
        chart.series.push(Series { name: fam.name.clone(), style: Style::Markers, color: fi, points });
    }
    write_table(
        &ctx.out("scatter.csv"),
        &[
            "family",
            "class_id",
            "hyperparams_json",
            "capacity",
            "capacity_stderr",
            "manipulability",
            "manipulability_stderr",
            "h_opt",
        ],
        &table,
    )?;
    write_text(&ctx.out("scatter.svg"), &chart.render())
}

pub fn budget_sweep(ctx: &Ctx) -> CliResult<()> {
    let ds = ctx.dataset()?;
    let fams: Vec<ResolvedFamily> =
        ctx.families(&ds)?.into_iter().filter(|f| f.model_family.is_some()).collect();
    if fams.is_empty() {
        return Err(CliError::config("budget-sweep needs at least one trained family"));
    }
    if ctx.cfg.budget_fractions.is_empty() {
        return Err(CliError::config("budget_fractions is empty"));
    }
    let mut sink = ctx.open_sink()?;
    let mut table = Vec::new();
    for fam in &fams {
        let (_, h_opt) = cv_values(ctx, &mut sink, &ds, fam)?;
        let caps: Vec<f64> = capacity_values(ctx, &mut sink, &ds, fam)?.iter().map(|v| v.0).collect();
        let roles = [("h_opt", h_opt), ("h_minus", argmin(&caps)), ("h_plus", argmax(&caps))];
        let mut chart = Chart::new(&format!("Budget sweep, {}", fam.name), "budget fraction", "manipulability");
        let mut curves: BTreeMap<usize, Vec<Point>> = BTreeMap::new();
        for &bf in &ctx.cfg.budget_fractions {
            let metric = manip_metric(bf, true);
            let mut picked: Vec<usize> = roles.iter().map(|r| r.1).collect();
            picked.dedup();
            picked.sort_unstable();
            picked.dedup();
            let classes: Vec<&ResolvedClass> = picked.iter().map(|&i| &fam.classes[i]).collect();
            let vals = manip_values(ctx, &mut sink, &ds, fam, &classes, bf, &metric)?;
            let by_idx: BTreeMap<usize, (f64, f64)> = picked.iter().copied().zip(vals).collect();
            for (ri, (role, i)) in roles.iter().enumerate() {
                let (mean, se) = by_idx[i];
                table.push(vec![
                    fam.name.clone(),
                    role.to_string(),
                    fam.classes[*i].id.clone(),
                    fmt_f(bf),
                    fmt_f(mean),
                    fmt_f(se),
                ]);
                curves.entry(ri).or_default().push(Point { y_err: Some(se), ..Point::new(bf, mean) });
            }
        }
        for (ri, pts) in curves {
            let (role, i) = roles[ri];
            chart.series.push(Series {
                name: format!("{role} ({})", fam.classes[i].id),
                style: Style::Line { dashed: false },
                color: ri,
                points: pts,
            });
        }
        write_text(&ctx.out(&format!("budget_sweep_{}.svg", fam.name)), &chart.render())?;
    }
    write_table(
        &ctx.out("budget_sweep.csv"),
        &["family", "role", "class_id", "budget_fraction", "diam", "stderr"],
        &table,
    )
}

pub fn coe(ctx: &Ctx) -> CliResult<()> {
    let ds = ctx.dataset()?;
    let fams: Vec<ResolvedFamily> =
        ctx.families(&ds)?.into_iter().filter(|f| f.model_family.is_some()).collect();
    if fams.is_empty() {
        return Err(CliError::config("coe needs at least one trained family"));
    }
    let mut sink = ctx.open_sink()?;
    let opts = CoeOptions {
        folds: ctx.cfg.folds,
        method: ctx.cfg.diam_method.clone(),
        capacity: None,
        bootstrap_resamples: ctx.cfg.bootstrap_resamples,
    };
    let bf = ctx.cfg.budget_fraction;
    let mut table = Vec::new();
    for fam in &fams {
        let seed = ctx.family_seed(&fam.name);
        let marker = key(&fam.name, FAMILY_ROW, "{}", "cost_of_exhaustion");
        if sink.get(&marker).is_none() {
            let t = Instant::now();
            let mf = fam.model_family.as_ref().expect("trained family");
            let report = cost_of_exhaustion(mf, &ds, bf, ctx.cfg.reps, seed, &opts)?;
            let reps = Some(ctx.cfg.reps);
            for (c, s) in fam.classes.iter().zip(&report.per_class) {
                sink.push(ctx.class_row(&fam.name, c, "cv_accuracy", s.cv_accuracy, None, Some(ctx.cfg.folds), seed, t))?;
                let m = &s.manipulability;
                sink.push(ctx.class_row(&fam.name, c, "manipulability", m.mean, Some(m.stderr), reps, seed, t))?;
            }
            let pick = |id: &str| fam.classes.iter().find(|c| c.id == id).expect("class of family");
            for (metric, id) in [("h_acc", &report.h_acc_id), ("h_mu", &report.h_mu_id), ("h_opt", &report.h_opt_id)] {
                let c = pick(id);
                let acc = report.per_class.iter().find(|s| &s.class_id == id).expect("summary").cv_accuracy;
                sink.push(ctx.class_row(&fam.name, c, metric, acc, None, None, seed, t))?;
            }
            sink.push(ctx.row(&fam.name, FAMILY_ROW, "{}", "cost_ci_low", report.ci_low, None, reps, seed, t))?;
            sink.push(ctx.row(&fam.name, FAMILY_ROW, "{}", "cost_ci_high", report.ci_high, None, reps, seed, t))?;
            sink.push(ctx.row(&fam.name, FAMILY_ROW, "{}", "cost_of_exhaustion", report.cost_of_exhaustion, None, reps, seed, t))?;
        }
        let fam_value = |metric: &str| stored(&sink, &key(&fam.name, FAMILY_ROW, "{}", metric)).value;
        let chosen = |metric: &str| -> String {
            fam.classes
                .iter()
                .find(|c| sink.get(&key(&fam.name, &c.id, &c.hyperparams_json(), metric)).is_some())
                .map(|c| c.id.clone())
                .unwrap_or_default()
        };
        table.push(vec![
            fam.name.clone(),
            fmt_f(fam_value("cost_of_exhaustion")),
            fmt_f(fam_value("cost_ci_low")),
            fmt_f(fam_value("cost_ci_high")),
            chosen("h_acc"),
            chosen("h_mu"),
            chosen("h_opt"),
        ]);
    }
    write_table(
        &ctx.out("coe.csv"),
        &["family", "cost_of_exhaustion", "ci_low", "ci_high", "h_acc", "h_mu", "h_opt"],
        &table,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_specs_parse() {
        assert_eq!(parse_class("exhaustive").unwrap(), HypothesisClass::Exhaustive);
        assert_eq!(parse_class("dictionary:4").unwrap(), HypothesisClass::dictionary(4));
        assert!(matches!(parse_class("tree:{\"max_depth\":2}").unwrap(), HypothesisClass::Trained(_)));
        assert!(matches!(parse_class("tree:{\"depth\":2}"), Err(CliError::Audit(_))));
        assert!(matches!(parse_class("forest"), Err(CliError::Config(_))));
        assert!(matches!(parse_class("dictionary:x"), Err(CliError::Config(_))));
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0, 1e-7, 0.30000000000000004, -0.0, 1234.5] {
            assert_eq!(fmt_f(v).parse::<f64>().unwrap(), if v == 0.0 { 0.0 } else { v });
        }
        assert_eq!(fmt_f(1.0), "1");
        assert_eq!(fmt_f(0.05), "0.05");
    }

    #[test]
    fn family_tags_are_distinct() {
        let tags: Vec<u64> = ["exhaustive", "dictionary", "linear", "perceptron", "tree", "gbdt"]
            .iter()
            .map(|f| family_tag(f))
            .collect();
        let mut d = tags.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), tags.len());
    }
}

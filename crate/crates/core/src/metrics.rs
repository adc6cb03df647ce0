//! Manipulability under random audits, cross-validated model selection and
//! the cost of exhaustion.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::audit::random_audit;
use crate::capacity::{capacity, CapacityEstimate};
use crate::dataspace::{Dataset, PointSet};
use crate::diameter::{
    diam_bruteforce, diam_dictionary_closed_form, diam_empirical, diam_exhaustive_closed_form, DiameterKind,
    ReductionConfig,
};
use crate::error::{AuditError, Result};
use crate::hypothesis::{HypothesisClass, Labeling, ModelFamily, TrainSpec, TrainedClass};
use crate::stats::{bootstrap_ci, mean_stderr};
use crate::{par, seed};

/// Capacity below which a class counts as near-zero capacity.
pub const NEAR_ZERO_CAPACITY: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DiamMethod {
    /// Closed form for enumerable classes, empirical for trained ones.
    Auto,
    ClosedForm,
    BruteForce,
    Empirical(ReductionConfig),
}

impl DiamMethod {
    fn name(&self) -> &'static str {
        match self {
            DiamMethod::Auto => "auto",
            DiamMethod::ClosedForm => "closed_form",
            DiamMethod::BruteForce => "brute_force",
            DiamMethod::Empirical(_) => "empirical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManipulabilityEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub reps: usize,
    pub budget_fraction: f64,
    pub diam_kind: DiameterKind,
    /// Per-rep diameters in rep order.
    pub samples: Vec<f64>,
    /// Reps whose empirical diameter is uncertified.
    pub uncertified_reps: usize,
}

/// The platform's implemented model: the label-memorising member for the
/// exhaustive class, the same truncated to its first `m` ones (by id) for a
/// dictionary, and a fit on the labels for a trained class.
pub fn platform_model(class: &HypothesisClass, dataset: &Dataset, seed: u64) -> Result<Labeling> {
    let labels = dataset.labels()?;
    match class {
        HypothesisClass::Exhaustive => Ok(labels),
        HypothesisClass::Dictionary { memory } => {
            let ones: Vec<usize> = (0..dataset.n()).filter(|&i| labels.get(i)).take(*memory).collect();
            Ok(Labeling::with_ones(dataset.n(), &ones))
        }
        HypothesisClass::Trained(t) => t.train(dataset, &TrainSpec::uniform(labels, PointSet::full(dataset.n()), seed)),
    }
}

fn resolve(class: &HypothesisClass, method: &DiamMethod) -> Result<DiamMethod> {
    let bad = || AuditError::IncompatibleMethod { method: method.name().into(), class: class.label() };
    match (class, method) {
        (HypothesisClass::Trained(_), DiamMethod::Auto) => Ok(DiamMethod::Empirical(ReductionConfig::default())),
        (HypothesisClass::Trained(_), DiamMethod::Empirical(_)) => Ok(method.clone()),
        (HypothesisClass::Trained(_), _) => Err(bad()),
        (_, DiamMethod::Auto) => Ok(DiamMethod::ClosedForm),
        (_, DiamMethod::Empirical(_)) => Err(bad()),
        _ => Ok(method.clone()),
    }
}

/// One rep: train h*, draw a random audit, measure the diameter.
fn manipulability_rep(
    class: &HypothesisClass,
    dataset: &Dataset,
    budget_fraction: f64,
    method: &DiamMethod,
    rep_seed: u64,
) -> Result<(f64, bool)> {
    let h_star = platform_model(class, dataset, seed::derive(rep_seed, &[0]))?;
    let s = random_audit(dataset, budget_fraction, budget_fraction, seed::derive(rep_seed, &[1]))?.point_set();
    match (method, class) {
        (DiamMethod::ClosedForm, HypothesisClass::Exhaustive) => Ok((diam_exhaustive_closed_form(&s, dataset), true)),
        (DiamMethod::ClosedForm, HypothesisClass::Dictionary { memory }) => {
            Ok((diam_dictionary_closed_form(&h_star, *memory, &s, dataset)?, true))
        }
        (DiamMethod::BruteForce, _) => Ok((diam_bruteforce(class, &h_star, &s, dataset)?.value, true)),
        (DiamMethod::Empirical(cfg), HypothesisClass::Trained(t)) => {
            let cfg = ReductionConfig { seed: seed::derive(rep_seed, &[2]), ..cfg.clone() };
            let r = diam_empirical(t, &h_star, &s, dataset, &cfg)?;
            Ok((r.value, r.certified))
        }
        _ => unreachable!("method resolved against class"),
    }
}

/// Mean μ-diameter over `reps` random audits of proportion `budget_fraction`
/// in each group, each against a freshly trained platform model.
pub fn manipulability(
    class: &HypothesisClass,
    dataset: &Dataset,
    budget_fraction: f64,
    reps: usize,
    seed: u64,
    method: &DiamMethod,
) -> Result<ManipulabilityEstimate> {
    if reps == 0 {
        return Err(AuditError::InvalidArgument("reps must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&budget_fraction) {
        return Err(AuditError::InvalidArgument(format!("budget fraction {budget_fraction} outside [0, 1]")));
    }
    let method = resolve(class, method)?;
    let out = par::try_map_indexed(reps, |r| {
        manipulability_rep(class, dataset, budget_fraction, &method, seed::derive(seed, &[r as u64]))
    })?;
    let samples: Vec<f64> = out.iter().map(|&(v, _)| v).collect();
    let uncertified_reps = out.iter().filter(|&&(_, c)| !c).count();
    let (mean, stderr) = mean_stderr(&samples);
    Ok(ManipulabilityEstimate {
        mean,
        stderr,
        reps,
        budget_fraction,
        diam_kind: match method {
            DiamMethod::BruteForce => DiameterKind::BruteForce,
            DiamMethod::Empirical(_) => DiameterKind::EmpiricalLowerBound,
            _ => DiameterKind::ClosedForm,
        },
        samples,
        uncertified_reps,
    })
}

/// Fold index of every point: points are grouped by (label, sensitive),
/// shuffled within each stratum, and dealt round-robin.
pub fn stratified_folds(dataset: &Dataset, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 || folds > dataset.n() {
        return Err(AuditError::InvalidArgument(format!("fold count {folds} outside 2..={}", dataset.n())));
    }
    let labels = dataset.labels()?;
    let mut rng = seed::rng(seed);
    let mut assign = vec![0; dataset.n()];
    let mut next = 0;
    for (y, a) in [(false, false), (false, true), (true, false), (true, true)] {
        let mut stratum: Vec<usize> =
            (0..dataset.n()).filter(|&i| labels.get(i) == y && dataset.sensitive(i) == a).collect();
        stratum.shuffle(&mut rng);
        for i in stratum {
            assign[i] = next % folds;
            next += 1;
        }
    }
    Ok(assign)
}

/// Mean validation accuracy over the folds.
pub fn cv_accuracy(class: &TrainedClass, dataset: &Dataset, fold_of: &[usize], seed: u64) -> Result<f64> {
    let labels = dataset.labels()?;
    let k = fold_of.iter().max().map_or(0, |m| m + 1);
    let mut total = 0.0;
    for f in 0..k {
        let train = PointSet::new((0..dataset.n()).filter(|&i| fold_of[i] != f));
        let spec = TrainSpec::uniform(labels.clone(), train, seed::derive(seed, &[f as u64]));
        let h = class.train(dataset, &spec)?;
        let held: Vec<usize> = (0..dataset.n()).filter(|&i| fold_of[i] == f).collect();
        let correct = held.iter().filter(|&&i| h.get(i) == labels.get(i)).count();
        total += correct as f64 / held.len() as f64;
    }
    Ok(total / k as f64)
}

/// Index of the first maximum.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Cross-validated accuracy of every class of the family, in grid order.
pub fn family_cv_accuracy(family: &ModelFamily, dataset: &Dataset, folds: usize, seed: u64) -> Result<Vec<f64>> {
    let fold_of = stratified_folds(dataset, folds, seed::derive(seed, &[0]))?;
    par::try_map_indexed(family.len(), |i| cv_accuracy(&family.class(i), dataset, &fold_of, seed::derive(seed, &[1])))
}

/// Grid index of the class with the best cross-validated accuracy; ties go to
/// the lowest index.
pub fn select_h_opt(family: &ModelFamily, dataset: &Dataset, folds: usize, seed: u64) -> Result<usize> {
    Ok(argmax(&family_cv_accuracy(family, dataset, folds, seed)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class_id: String,
    pub capacity: Option<CapacityEstimate>,
    pub manipulability: ManipulabilityEstimate,
    pub cv_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub per_class: Vec<ClassSummary>,
    pub h_acc_id: String,
    pub h_mu_id: String,
    pub h_opt_id: String,
    pub cost_of_exhaustion: f64,
    /// 95% percentile bootstrap interval over reps.
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoeOptions {
    pub folds: usize,
    pub method: DiamMethod,
    /// (draws, restarts) when per-class capacity is wanted.
    pub capacity: Option<(usize, usize)>,
    pub bootstrap_resamples: usize,
}

impl Default for CoeOptions {
    fn default() -> Self {
        CoeOptions { folds: 5, method: DiamMethod::Auto, capacity: None, bootstrap_resamples: 1000 }
    }
}

/// Accuracy given up by picking the most manipulable class of the family
/// instead of the most accurate one.
///
/// Sub-seeds: `[0]` cross-validation, `[1]` manipulability, `[2]` capacity,
/// `[3]` bootstrap. Classes share the manipulability and capacity seeds, so
/// reps are paired across classes and the bootstrap resamples them jointly.
pub fn cost_of_exhaustion(
    family: &ModelFamily,
    dataset: &Dataset,
    budget_fraction: f64,
    reps: usize,
    seed: u64,
    opts: &CoeOptions,
) -> Result<FamilyReport> {
    let acc = family_cv_accuracy(family, dataset, opts.folds, seed::derive(seed, &[0]))?;
    let summaries = par::try_map_indexed(family.len(), |i| -> Result<ClassSummary> {
        let class = HypothesisClass::Trained(family.class(i));
        let manip = manipulability(&class, dataset, budget_fraction, reps, seed::derive(seed, &[1]), &opts.method)?;
        let cap = match opts.capacity {
            Some((draws, restarts)) => Some(capacity(&class, dataset, draws, restarts, seed::derive(seed, &[2]))?),
            None => None,
        };
        Ok(ClassSummary { class_id: family.class_id(i), capacity: cap, manipulability: manip, cv_accuracy: acc[i] })
    })?;
    let manip: Vec<f64> = summaries.iter().map(|s| s.manipulability.mean).collect();
    let (i_acc, i_mu) = (argmax(&acc), argmax(&manip));
    let cost = acc[i_acc] - acc[i_mu];
    let (ci_low, ci_high) = if opts.bootstrap_resamples > 0 {
        bootstrap_ci(reps, opts.bootstrap_resamples, 0.95, seed::derive(seed, &[3]), |pick| {
            let means: Vec<f64> = summaries
                .iter()
                .map(|s| pick.iter().map(|&r| s.manipulability.samples[r]).sum::<f64>() / pick.len() as f64)
                .collect();
            acc[i_acc] - acc[argmax(&means)]
        })
    } else {
        (cost, cost)
    };
    Ok(FamilyReport {
        h_acc_id: family.class_id(i_acc),
        h_mu_id: family.class_id(i_mu),
        h_opt_id: family.class_id(i_acc),
        per_class: summaries,
        cost_of_exhaustion: cost,
        ci_low,
        ci_high,
    })
}

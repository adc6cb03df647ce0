//! μ-diameters of version spaces: closed forms for the exhaustive and
//! dictionary classes, a brute-force oracle, the benign-overfitting lower
//! bound, the weighted-classification estimator for trained families, and the
//! optimal dictionary audit.

use serde::{Deserialize, Serialize};

use crate::audit::{quota, random_audit};
use crate::dataspace::{measure_mu_full, Dataset, PointSet};
use crate::error::{AuditError, Result};
use crate::hypothesis::{HypothesisClass, Labeling, TrainSpec, Trainer, VersionSpace, DEFAULT_ENUM_CAP};
use crate::stats::mean_stderr;
use crate::{par, seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiameterKind {
    ClosedForm,
    BruteForce,
    EmpiricalLowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiameterResult {
    pub value: f64,
    pub kind: DiameterKind,
    pub h_up: Option<Labeling>,
    pub h_down: Option<Labeling>,
    pub violations_up: usize,
    pub violations_down: usize,
    /// False when an empirical witness violates consistency on S.
    pub certified: bool,
    /// Consistency weights used per round, for empirical results.
    pub lambdas_up: Vec<f64>,
    pub lambdas_down: Vec<f64>,
}

impl DiameterResult {
    fn exact(value: f64, kind: DiameterKind, h_up: Option<Labeling>, h_down: Option<Labeling>) -> Self {
        DiameterResult {
            value,
            kind,
            h_up,
            h_down,
            violations_up: 0,
            violations_down: 0,
            certified: true,
            lambdas_up: Vec::new(),
            lambdas_down: Vec::new(),
        }
    }

    pub fn closed_form(value: f64) -> Self {
        DiameterResult::exact(value, DiameterKind::ClosedForm, None, None)
    }
}

/// Running (max, argmax, min, argmin) with ties kept at the earliest index.
#[derive(Debug, Clone, Copy)]
struct Extremes {
    max: (f64, u128),
    min: (f64, u128),
}

impl Extremes {
    fn one(v: f64, k: u128) -> Self {
        Extremes { max: (v, k), min: (v, k) }
    }

    fn merge(self, o: Extremes) -> Extremes {
        let pick_max = |a: (f64, u128), b: (f64, u128)| {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        };
        let pick_min = |a: (f64, u128), b: (f64, u128)| {
            if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        };
        Extremes { max: pick_max(self.max, o.max), min: pick_min(self.min, o.min) }
    }
}

const CHUNK: u64 = 1 << 12;

pub fn diam_bruteforce(
    class: &HypothesisClass,
    h_star: &Labeling,
    audit: &PointSet,
    dataset: &Dataset,
) -> Result<DiameterResult> {
    diam_bruteforce_with_cap(class, h_star, audit, dataset, DEFAULT_ENUM_CAP)
}

/// max − min of μ(h, X) over the enumerated version space. Exhaustive spaces
/// are split into index ranges evaluated in parallel.
pub fn diam_bruteforce_with_cap(
    class: &HypothesisClass,
    h_star: &Labeling,
    audit: &PointSet,
    dataset: &Dataset,
    cap: u128,
) -> Result<DiameterResult> {
    let vs = VersionSpace::new(class, h_star, audit, dataset, cap)?;
    let coef = dataset.mu_coefficients();
    let ext = if matches!(class, HypothesisClass::Exhaustive) {
        let size = vs.size() as u64;
        let chunks = size.div_ceil(CHUNK) as usize;
        par::map_indexed(chunks, |c| {
            let lo = c as u64 * CHUNK;
            (lo..(lo + CHUNK).min(size))
                .map(|k| {
                    let h = vs.exhaustive_member(k).expect("index within size");
                    Extremes::one(measure_mu_full(&h, &coef), k as u128)
                })
                .reduce(Extremes::merge)
                .expect("chunk nonempty")
        })
        .into_iter()
        .reduce(Extremes::merge)
    } else {
        vs.iter()
            .enumerate()
            .map(|(k, h)| Extremes::one(measure_mu_full(&h, &coef), k as u128))
            .reduce(Extremes::merge)
    };
    let ext = ext.ok_or(AuditError::OutsideClass)?;
    let nth = |k: u128| -> Labeling {
        if matches!(class, HypothesisClass::Exhaustive) {
            vs.exhaustive_member(k as u64).expect("index within size")
        } else {
            vs.iter().nth(k as usize).expect("index within size")
        }
    };
    Ok(DiameterResult::exact(
        ext.max.0 - ext.min.0,
        DiameterKind::BruteForce,
        Some(nth(ext.max.1)),
        Some(nth(ext.min.1)),
    ))
}

/// Exhaustive class: 2 − (P[S | X_A] + P[S | ¬X_A]).
pub fn diam_exhaustive_closed_form(audit: &PointSet, dataset: &Dataset) -> f64 {
    let c = dataset.group_counts(audit);
    2.0 - (c.frac_a() + c.frac_not_a())
}

/// Dictionary class of memory `m` around `d_star`:
/// min(|X_A \ S|, m′)/n_A + min(|¬X_A \ S|, m′)/n_¬A with m′ the memory left
/// after the ones of `d_star` on S.
pub fn diam_dictionary_closed_form(d_star: &Labeling, m: usize, audit: &PointSet, dataset: &Dataset) -> Result<f64> {
    if d_star.len() != dataset.n() {
        return Err(AuditError::InvalidArgument("d* length differs from n".into()));
    }
    if d_star.count_ones() > m {
        return Err(AuditError::OutsideClass);
    }
    let spent = audit.ids().iter().filter(|&&i| d_star.get(i)).count();
    let c = dataset.group_counts(audit);
    Ok(dictionary_value(m - spent, c.n_a - c.s_a, c.n_not_a - c.s_not_a, c.n_a, c.n_not_a))
}

fn dictionary_value(m_left: usize, free_a: usize, free_not_a: usize, n_a: usize, n_not_a: usize) -> f64 {
    free_a.min(m_left) as f64 / n_a as f64 + free_not_a.min(m_left) as f64 / n_not_a as f64
}

/// P[S | X_A] + P[S | ¬X_A] − 2 P[S] − 2 ε (1 − P[S]). Not clamped: a negative
/// value means the bound is vacuous.
pub fn benign_overfitting_lower_bound(audit: &PointSet, epsilon_fit: f64, dataset: &Dataset) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon_fit) {
        return Err(AuditError::InvalidArgument(format!("epsilon_fit = {epsilon_fit} outside [0, 1)")));
    }
    let c = dataset.group_counts(audit);
    let (n_a, n_not_a, n) = (c.n_a as i128, c.n_not_a as i128, c.n() as i128);
    // integer numerator over nA·n¬A·n, so balanced groups give exactly 0
    let num = c.s_a as i128 * n_not_a * n + c.s_not_a as i128 * n_a * n - 2 * c.s() as i128 * n_a * n_not_a;
    let ps = c.s() as f64 / c.n() as f64;
    Ok(num as f64 / (n_a * n_not_a * n) as f64 - 2.0 * epsilon_fit * (1.0 - ps))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReductionConfig {
    /// Initial consistency weight; `None` = 10 × the larger group weight.
    pub lambda0: Option<f64>,
    pub escalation: f64,
    pub max_rounds: usize,
    /// Keep h* itself as a candidate witness in both directions.
    pub include_platform_model: bool,
    pub seed: u64,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        ReductionConfig { lambda0: None, escalation: 10.0, max_rounds: 6, include_platform_model: true, seed: 0 }
    }
}

impl ReductionConfig {
    fn validate(&self) -> Result<()> {
        if self.lambda0.is_some_and(|l| !(l > 0.0 && l.is_finite())) {
            return Err(AuditError::InvalidArgument("lambda0 must be > 0".into()));
        }
        if !(self.escalation > 1.0 && self.escalation.is_finite()) {
            return Err(AuditError::InvalidArgument("escalation must be > 1".into()));
        }
        if self.max_rounds == 0 {
            return Err(AuditError::InvalidArgument("max_rounds must be >= 1".into()));
        }
        Ok(())
    }
}

struct Direction {
    witness: Labeling,
    mu: f64,
    violations: usize,
    lambdas: Vec<f64>,
}

fn search_direction(
    trainer: &dyn Trainer,
    h_star: &Labeling,
    audit: &PointSet,
    dataset: &Dataset,
    cfg: &ReductionConfig,
    up: bool,
) -> Result<Direction> {
    let n = dataset.n();
    let coef = dataset.mu_coefficients();
    let (wa, wn) = (1.0 / dataset.n_a() as f64, 1.0 / dataset.n_not_a() as f64);
    let lambda0 = cfg.lambda0.unwrap_or(10.0 * wa.max(wn));
    let in_s = audit.mask(n);
    let targets = Labeling::from_bits(
        (0..n)
            .map(|i| if in_s[i] { h_star.get(i) } else { dataset.sensitive(i) == up })
            .collect(),
    );
    let base_weights: Vec<f64> = (0..n).map(|i| if dataset.sensitive(i) { wa } else { wn }).collect();
    let sign = if up { 1.0 } else { -1.0 };

    let mut lambdas = Vec::new();
    let mut best: Option<(Labeling, f64, usize)> = None;
    for round in 0..cfg.max_rounds {
        let lambda = lambda0 * cfg.escalation.powi(round as i32);
        lambdas.push(lambda);
        let weights = (0..n).map(|i| if in_s[i] { lambda } else { base_weights[i] }).collect();
        let spec = TrainSpec {
            targets: targets.clone(),
            weights,
            train_mask: PointSet::full(n),
            seed: seed::derive(cfg.seed, &[up as u64, round as u64]),
        };
        let h = trainer.fit_predict(dataset, &spec)?;
        let violations = h.disagreements_on(h_star, audit);
        let mu = measure_mu_full(&h, &coef);
        let better = match &best {
            None => true,
            Some((_, bmu, bv)) => violations < *bv || (violations == *bv && sign * mu > sign * bmu),
        };
        if better {
            best = Some((h, mu, violations));
        }
        if violations == 0 {
            break;
        }
    }
    let (mut witness, mut mu, mut violations) = best.expect("at least one round");
    if cfg.include_platform_model {
        let mu_star = measure_mu_full(h_star, &coef);
        if violations > 0 || sign * mu_star > sign * mu {
            (witness, mu, violations) = (h_star.clone(), mu_star, 0);
        }
    }
    Ok(Direction { witness, mu, violations, lambdas })
}

/// Lower bound on the diameter of a trained family's version space: in each
/// direction, fit targets h* on S and x_A (resp. 1 − x_A) off S with weights
/// λ on S and the μ coefficients off S, escalating λ until the fit agrees
/// with h* on S.
pub fn diam_empirical(
    trainer: &dyn Trainer,
    h_star: &Labeling,
    audit: &PointSet,
    dataset: &Dataset,
    cfg: &ReductionConfig,
) -> Result<DiameterResult> {
    cfg.validate()?;
    if h_star.len() != dataset.n() {
        return Err(AuditError::InvalidArgument("h* length differs from n".into()));
    }
    let mut dirs = par::try_map_indexed(2, |k| search_direction(trainer, h_star, audit, dataset, cfg, k == 0))?;
    let down = dirs.pop().expect("two directions");
    let up = dirs.pop().expect("two directions");
    let certified = up.violations == 0 && down.violations == 0;
    if !certified {
        log::warn!(
            "empirical diameter for {} not certified ({} / {} violations)",
            trainer.describe(),
            up.violations,
            down.violations
        );
    }
    Ok(DiameterResult {
        value: (up.mu - down.mu).max(0.0),
        kind: DiameterKind::EmpiricalLowerBound,
        h_up: Some(up.witness),
        h_down: Some(down.witness),
        violations_up: up.violations,
        violations_down: down.violations,
        certified,
        lambdas_up: up.lambdas,
        lambdas_down: down.lambdas,
    })
}

/// How many ones of d* fall in each group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnesPlacement {
    pub ones_a: usize,
    pub ones_not_a: usize,
}

impl OnesPlacement {
    /// min(m, n) ones split across groups in proportion to their sizes.
    pub fn proportional(m: usize, dataset: &Dataset) -> Self {
        let k = m.min(dataset.n());
        let ones_a = ((k * dataset.n_a()) as f64 / dataset.n() as f64).round() as usize;
        let ones_a = ones_a.min(dataset.n_a()).max(k.saturating_sub(dataset.n_not_a()));
        OnesPlacement { ones_a, ones_not_a: k - ones_a }
    }

    /// The labeling with these ones on the lowest ids of each group.
    pub fn labeling(&self, dataset: &Dataset) -> Labeling {
        let mut ones = dataset.group_ids(true)[..self.ones_a].to_vec();
        ones.extend_from_slice(&dataset.group_ids(false)[..self.ones_not_a]);
        Labeling::with_ones(dataset.n(), &ones)
    }

    fn validate(&self, m: usize, dataset: &Dataset) -> Result<()> {
        if self.ones_a > dataset.n_a() || self.ones_not_a > dataset.n_not_a() {
            return Err(AuditError::InvalidArgument("more ones than points in a group".into()));
        }
        if self.ones_a + self.ones_not_a > m {
            return Err(AuditError::OutsideClass);
        }
        Ok(())
    }
}

/// Counts of audited points by group and d* value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Composition {
    /// X_A, d* = 1
    pub a: usize,
    /// X_A, d* = 0
    pub b: usize,
    /// ¬X_A, d* = 1
    pub c: usize,
    /// ¬X_A, d* = 0
    pub e: usize,
}

fn composition_value(m: usize, comp: Composition, dataset: &Dataset) -> f64 {
    let (n_a, n_not_a) = (dataset.n_a(), dataset.n_not_a());
    dictionary_value(m - comp.a - comp.c, n_a - comp.a - comp.b, n_not_a - comp.c - comp.e, n_a, n_not_a)
}

fn check_budget(budget: usize, dataset: &Dataset) -> Result<()> {
    if budget > dataset.n() {
        return Err(AuditError::InvalidArgument(format!("budget {budget} exceeds n = {}", dataset.n())));
    }
    Ok(())
}

/// Best dictionary audit among sets that query the same number of points per
/// group as a random audit of proportion budget/n would.
pub fn optimal_dictionary_audit(
    m: usize,
    budget: usize,
    dataset: &Dataset,
    placement: OnesPlacement,
) -> Result<(f64, Composition)> {
    check_budget(budget, dataset)?;
    placement.validate(m, dataset)?;
    let beta = budget as f64 / dataset.n() as f64;
    let (s_a, s_not_a) = (quota(beta, dataset.n_a()), quota(beta, dataset.n_not_a()));
    let zeros_a = dataset.n_a() - placement.ones_a;
    let zeros_not_a = dataset.n_not_a() - placement.ones_not_a;
    let mut best: Option<(f64, Composition)> = None;
    for a in s_a.saturating_sub(zeros_a)..=s_a.min(placement.ones_a) {
        for c in s_not_a.saturating_sub(zeros_not_a)..=s_not_a.min(placement.ones_not_a) {
            let comp = Composition { a, b: s_a - a, c, e: s_not_a - c };
            let v = composition_value(m, comp, dataset);
            if best.is_none_or(|(bv, _)| v < bv) {
                best = Some((v, comp));
            }
        }
    }
    best.ok_or_else(|| AuditError::InvalidArgument("no feasible composition".into()))
}

/// Best dictionary audit over every composition with exactly `budget` points.
pub fn optimal_dictionary_audit_any_composition(
    m: usize,
    budget: usize,
    dataset: &Dataset,
    placement: OnesPlacement,
) -> Result<(f64, Composition)> {
    check_budget(budget, dataset)?;
    placement.validate(m, dataset)?;
    let zeros_a = dataset.n_a() - placement.ones_a;
    let zeros_not_a = dataset.n_not_a() - placement.ones_not_a;
    let mut best: Option<(f64, Composition)> = None;
    for a in 0..=budget.min(placement.ones_a) {
        for b in 0..=(budget - a).min(zeros_a) {
            for c in 0..=(budget - a - b).min(placement.ones_not_a) {
                let e = budget - a - b - c;
                if e > zeros_not_a {
                    continue;
                }
                let comp = Composition { a, b, c, e };
                let v = composition_value(m, comp, dataset);
                if best.is_none_or(|(bv, _)| v < bv) {
                    best = Some((v, comp));
                }
            }
        }
    }
    best.ok_or_else(|| AuditError::InvalidArgument("no feasible composition".into()))
}

/// Mean and standard error of the dictionary diameter after random audits of
/// proportion budget/n, with d* given by `placement`.
pub fn random_dictionary_audit(
    m: usize,
    budget: usize,
    dataset: &Dataset,
    placement: OnesPlacement,
    reps: usize,
    seed: u64,
) -> Result<(f64, f64, Vec<f64>)> {
    check_budget(budget, dataset)?;
    placement.validate(m, dataset)?;
    if reps == 0 {
        return Err(AuditError::InvalidArgument("reps must be >= 1".into()));
    }
    let d_star = placement.labeling(dataset);
    let beta = budget as f64 / dataset.n() as f64;
    let values = par::try_map_indexed(reps, |r| {
        let s = random_audit(dataset, beta, beta, seed::derive(seed, &[r as u64]))?;
        diam_dictionary_closed_form(&d_star, m, &s.point_set(), dataset)
    })?;
    let (mean, se) = mean_stderr(&values);
    Ok((mean, se, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_values() {
        let ds = Dataset::from_group_sizes(2, 4).unwrap();
        let s = PointSet::new([0, 2]);
        assert!((diam_exhaustive_closed_form(&s, &ds) - 1.25).abs() < 1e-12);
        let bf = diam_bruteforce(&HypothesisClass::Exhaustive, &Labeling::zeros(6), &s, &ds).unwrap();
        assert!((bf.value - 1.25).abs() < 1e-12);
        assert_eq!(diam_exhaustive_closed_form(&PointSet::empty(), &ds), 2.0);
        assert_eq!(diam_exhaustive_closed_form(&PointSet::full(6), &ds), 0.0);

        let d = Labeling::with_ones(6, &[2]);
        let v = diam_dictionary_closed_form(&d, 2, &PointSet::new([2]), &ds).unwrap();
        assert!((v - 0.75).abs() < 1e-12);
        let bf = diam_bruteforce(&HypothesisClass::dictionary(2), &d, &PointSet::new([2]), &ds).unwrap();
        assert!((bf.value - 0.75).abs() < 1e-12);

        let b = benign_overfitting_lower_bound(&PointSet::new([0]), 0.0, &ds).unwrap();
        assert!((b - (0.5 - 2.0 / 6.0)).abs() < 1e-12);
        assert_eq!(benign_overfitting_lower_bound(&PointSet::empty(), 0.0, &ds).unwrap(), 0.0);
    }

    #[test]
    fn witnesses_are_extremal() {
        let ds = Dataset::from_group_sizes(2, 3).unwrap();
        let r = diam_bruteforce(&HypothesisClass::Exhaustive, &Labeling::zeros(5), &PointSet::empty(), &ds).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.h_up.unwrap(), ds.sensitive_labeling());
        assert_eq!(r.h_down.unwrap(), ds.sensitive_labeling().complement());
    }

    #[test]
    fn optimal_audit_edges() {
        let ds = Dataset::from_group_sizes(30, 70).unwrap();
        let p = OnesPlacement::proportional(40, &ds);
        assert_eq!((p.ones_a, p.ones_not_a), (12, 28));
        assert_eq!(optimal_dictionary_audit(40, 100, &ds, p).unwrap().0, 0.0);
        let (v0, _) = optimal_dictionary_audit(40, 0, &ds, p).unwrap();
        assert!((v0 - (30.0 / 30.0 + 40.0 / 70.0)).abs() < 1e-12);
        assert!(optimal_dictionary_audit(40, 101, &ds, p).is_err());
        let (va, _) = optimal_dictionary_audit_any_composition(40, 0, &ds, p).unwrap();
        assert_eq!(va, v0);
    }

    #[test]
    fn reduction_config_validation() {
        let bad = ReductionConfig { escalation: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ReductionConfig { max_rounds: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(ReductionConfig::default().validate().is_ok());
    }
}

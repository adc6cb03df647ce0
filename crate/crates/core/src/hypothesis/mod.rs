//! Hypothesis instances and classes: the exhaustive class, dictionaries, and
//! four trainable model families.

mod gbdt;
mod labeling;
mod linear;
mod params;
mod perceptron;
mod tree;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dataspace::{Dataset, PointSet};
use crate::error::{AuditError, Result};

pub use labeling::Labeling;
pub use params::{GbdtParams, LinearParams, PerceptronParams, TreeParams};

pub type Hyperparams = BTreeMap<String, Value>;

/// Default enumeration cap for version spaces.
pub const DEFAULT_ENUM_CAP: u128 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Linear,
    Perceptron,
    Tree,
    Gbdt,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 4] =
        [FamilyKind::Linear, FamilyKind::Perceptron, FamilyKind::Tree, FamilyKind::Gbdt];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Linear => "linear",
            FamilyKind::Perceptron => "perceptron",
            FamilyKind::Tree => "tree",
            FamilyKind::Gbdt => "gbdt",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self> {
        FamilyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| AuditError::InvalidArgument(format!("unknown model family `{s}`")))
    }
}

/// One (family, hyperparameters) couple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClass {
    pub family: FamilyKind,
    pub params: Hyperparams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HypothesisClass {
    /// All of {0,1}^X.
    Exhaustive,
    /// Labelings with at most `memory` ones.
    Dictionary { memory: usize },
    Trained(TrainedClass),
}

impl HypothesisClass {
    pub fn dictionary(memory: usize) -> Self {
        HypothesisClass::Dictionary { memory }
    }

    pub fn trained(family: FamilyKind, params: Hyperparams) -> Result<Self> {
        TrainedClass::new(family, params).map(HypothesisClass::Trained)
    }

    pub fn label(&self) -> String {
        match self {
            HypothesisClass::Exhaustive => "exhaustive".into(),
            HypothesisClass::Dictionary { memory } => format!("dict-{memory}"),
            HypothesisClass::Trained(t) => {
                format!("{}{}", t.family, serde_json::to_string(&t.params).unwrap_or_default())
            }
        }
    }

    fn check_memory(&self, dataset: &Dataset) -> Result<()> {
        if let HypothesisClass::Dictionary { memory } = self {
            if *memory > dataset.n() {
                return Err(AuditError::InvalidArgument(format!(
                    "dictionary memory {memory} exceeds n = {}",
                    dataset.n()
                )));
            }
        }
        Ok(())
    }
}

/// Training problem: weighted targets restricted to a mask.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSpec {
    pub targets: Labeling,
    pub weights: Vec<f64>,
    pub train_mask: PointSet,
    pub seed: u64,
}

impl TrainSpec {
    /// Unit weights on `mask`.
    pub fn uniform(targets: Labeling, mask: PointSet, seed: u64) -> Self {
        let n = targets.len();
        TrainSpec { targets, weights: vec![1.0; n], train_mask: mask, seed }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.targets.len() != n || self.weights.len() != n {
            return Err(AuditError::InvalidArgument("train spec length mismatch".into()));
        }
        if self.train_mask.ids().last().is_some_and(|&i| i >= n) {
            return Err(AuditError::InvalidArgument("train mask id out of range".into()));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(AuditError::BadWeights);
        }
        if self.train_mask.ids().iter().all(|&i| self.weights[i] == 0.0) {
            return Err(AuditError::BadWeights);
        }
        Ok(())
    }

    /// Train ids with positive weight, and their weights rescaled to mean 1.
    pub(crate) fn normalized(&self) -> (Vec<usize>, Vec<f64>) {
        let rows: Vec<usize> = self
            .train_mask
            .ids()
            .iter()
            .copied()
            .filter(|&i| self.weights[i] > 0.0)
            .collect();
        let total: f64 = rows.iter().map(|&i| self.weights[i]).sum();
        let scale = rows.len() as f64 / total;
        let mut w = vec![0.0; self.weights.len()];
        for &i in &rows {
            w[i] = self.weights[i] * scale;
        }
        (rows, w)
    }
}

/// Anything that fits a weighted binary problem and labels all of X.
pub trait Trainer: Sync {
    fn fit_predict(&self, dataset: &Dataset, spec: &TrainSpec) -> Result<Labeling>;

    fn describe(&self) -> String;
}

impl TrainedClass {
    pub fn new(family: FamilyKind, params: Hyperparams) -> Result<Self> {
        params::validate(family, &params)?;
        Ok(TrainedClass { family, params })
    }

    /// Fits on `spec` and predicts every point of `dataset`. Weights are
    /// rescaled to mean one over the fitted rows, so hyperparameters keep the
    /// same meaning whatever the weight scale.
    pub fn train(&self, dataset: &Dataset, spec: &TrainSpec) -> Result<Labeling> {
        spec.validate(dataset.n())?;
        let (rows, weights) = spec.normalized();
        let first = spec.targets.get(rows[0]);
        if rows.iter().all(|&i| spec.targets.get(i) == first) {
            return Ok(if first { Labeling::ones(dataset.n()) } else { Labeling::zeros(dataset.n()) });
        }
        let y = spec.targets.bits();
        let preds = match self.family {
            FamilyKind::Linear => {
                let p = LinearParams::parse(&self.params)?;
                linear::fit_predict(dataset, &rows, y, &weights, &p)
            }
            FamilyKind::Perceptron => {
                let p = PerceptronParams::parse(&self.params)?;
                perceptron::fit_predict(dataset, &rows, y, &weights, &p, spec.seed)
            }
            FamilyKind::Tree => {
                let p = TreeParams::parse(&self.params)?;
                tree::fit_predict(dataset, &rows, y, &weights, &p)
            }
            FamilyKind::Gbdt => {
                let p = GbdtParams::parse(&self.params)?;
                gbdt::fit_predict(dataset, &rows, y, &weights, &p, spec.seed)
            }
        };
        Ok(Labeling::from_bits(preds))
    }
}

impl Trainer for TrainedClass {
    fn fit_predict(&self, dataset: &Dataset, spec: &TrainSpec) -> Result<Labeling> {
        self.train(dataset, spec)
    }

    fn describe(&self) -> String {
        HypothesisClass::Trained(self.clone()).label()
    }
}

/// Fits a trained class; other class kinds cannot be trained.
pub fn train(class: &HypothesisClass, dataset: &Dataset, spec: &TrainSpec) -> Result<Labeling> {
    match class {
        HypothesisClass::Trained(t) => t.train(dataset, spec),
        other => Err(AuditError::InvalidArgument(format!(
            "class {} is not trainable",
            other.label()
        ))),
    }
}

/// Membership test for enumerable classes.
pub fn is_member(class: &HypothesisClass, h: &Labeling) -> Result<bool> {
    match class {
        HypothesisClass::Exhaustive => Ok(true),
        HypothesisClass::Dictionary { memory } => Ok(h.count_ones() <= *memory),
        HypothesisClass::Trained(_) => Err(AuditError::MembershipUndecidable),
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// The version space H(h*, S) of an enumerable class, prepared for iteration.
#[derive(Debug, Clone)]
pub struct VersionSpace {
    base: Labeling,
    free: Vec<usize>,
    /// Maximum ones allowed on the free positions (`None` = unbounded).
    budget: Option<usize>,
    size: u128,
}

impl VersionSpace {
    pub fn new(
        class: &HypothesisClass,
        h_star: &Labeling,
        audit: &PointSet,
        dataset: &Dataset,
        cap: u128,
    ) -> Result<Self> {
        if h_star.len() != dataset.n() {
            return Err(AuditError::InvalidArgument("h* length differs from n".into()));
        }
        class.check_memory(dataset)?;
        if !is_member(class, h_star)? {
            return Err(AuditError::OutsideClass);
        }
        let n = dataset.n();
        let mask = audit.mask(n);
        let free: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
        let base = Labeling::from_bits((0..n).map(|i| mask[i] && h_star.get(i)).collect());
        let (budget, size) = match class {
            HypothesisClass::Exhaustive => {
                let size = if free.len() >= 127 { u128::MAX } else { 1u128 << free.len() };
                (None, size)
            }
            HypothesisClass::Dictionary { memory } => {
                let spent = base.count_ones();
                let left = memory - spent;
                let size = (0..=left.min(free.len()))
                    .map(|k| binomial(free.len(), k))
                    .fold(0u128, u128::saturating_add);
                (Some(left), size)
            }
            HypothesisClass::Trained(_) => unreachable!("rejected by is_member"),
        };
        if size > cap {
            return Err(AuditError::CapExceeded { required: size, cap });
        }
        Ok(VersionSpace { base, free, budget, size })
    }

    pub fn size(&self) -> u128 {
        self.size
    }

    pub fn free_positions(&self) -> &[usize] {
        &self.free
    }

    /// For the exhaustive class: the `k`-th completion, bit `j` of `k` setting
    /// the `j`-th free position.
    pub fn exhaustive_member(&self, k: u64) -> Option<Labeling> {
        if self.budget.is_some() || (k as u128) >= self.size {
            return None;
        }
        let mut h = self.base.clone();
        for (j, &pos) in self.free.iter().enumerate() {
            if k >> j & 1 == 1 {
                h.set(pos, true);
            }
        }
        Some(h)
    }

    /// Streams the members: exhaustive completions in index order, dictionary
    /// completions by number of extra ones, then lexicographically.
    pub fn iter(&self) -> Members<'_> {
        Members { vs: self, next_index: 0, combo: Some(Vec::new()) }
    }
}

pub struct Members<'a> {
    vs: &'a VersionSpace,
    next_index: u128,
    combo: Option<Vec<usize>>,
}

impl Iterator for Members<'_> {
    type Item = Labeling;

    fn next(&mut self) -> Option<Labeling> {
        let vs = self.vs;
        if self.next_index >= vs.size {
            return None;
        }
        self.next_index += 1;
        match vs.budget {
            None => vs.exhaustive_member((self.next_index - 1) as u64),
            Some(_) => {
                let combo = self.combo.as_mut()?;
                let mut h = vs.base.clone();
                for &j in combo.iter() {
                    h.set(vs.free[j], true);
                }
                advance_combination(combo, vs.free.len());
                Some(h)
            }
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.vs.size - self.next_index).min(usize::MAX as u128) as usize;
        (left, Some(left))
    }
}

/// Next k-subset of 0..len in lexicographic order, or the first (k+1)-subset.
fn advance_combination(c: &mut Vec<usize>, len: usize) {
    let k = c.len();
    for pos in (0..k).rev() {
        if c[pos] < len - k + pos {
            c[pos] += 1;
            for q in pos + 1..k {
                c[q] = c[q - 1] + 1;
            }
            return;
        }
    }
    *c = (0..k + 1).collect();
}

/// Owning stream over H(h*, S).
pub struct ConsistentIter {
    vs: VersionSpace,
    next_index: u128,
    combo: Vec<usize>,
}

impl Iterator for ConsistentIter {
    type Item = Labeling;

    fn next(&mut self) -> Option<Labeling> {
        let mut m = Members { vs: &self.vs, next_index: self.next_index, combo: Some(std::mem::take(&mut self.combo)) };
        let out = m.next();
        self.next_index = m.next_index;
        self.combo = m.combo.unwrap_or_default();
        out
    }
}

/// Streams every member of H(h*, S) for the exhaustive and dictionary classes.
pub fn enumerate_consistent(
    class: &HypothesisClass,
    h_star: &Labeling,
    audit: &PointSet,
    dataset: &Dataset,
    cap: u128,
) -> Result<ConsistentIter> {
    let vs = VersionSpace::new(class, h_star, audit, dataset, cap)?;
    Ok(ConsistentIter { vs, next_index: 0, combo: Vec::new() })
}

/// A family of hypothesis classes sharing one model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFamily {
    pub kind: FamilyKind,
    pub grid: Vec<Hyperparams>,
}

impl ModelFamily {
    pub fn new(kind: FamilyKind, grid: Vec<Hyperparams>) -> Result<Self> {
        if grid.is_empty() {
            return Err(AuditError::InvalidArgument(format!("empty grid for {kind}")));
        }
        let mut seen = BTreeSet::new();
        for p in &grid {
            params::validate(kind, p)?;
            if !seen.insert(serde_json::to_string(p)?) {
                return Err(AuditError::InvalidArgument(format!(
                    "duplicate hyperparameters in {kind} grid: {}",
                    serde_json::to_string(p)?
                )));
            }
        }
        Ok(ModelFamily { kind, grid })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn class(&self, i: usize) -> TrainedClass {
        TrainedClass { family: self.kind, params: self.grid[i].clone() }
    }

    pub fn classes(&self) -> Vec<TrainedClass> {
        (0..self.grid.len()).map(|i| self.class(i)).collect()
    }

    /// Stable identifier of grid entry `i`; sorts in grid order.
    pub fn class_id(&self, i: usize) -> String {
        format!("{}-{i:03}", self.kind)
    }
}

fn cartesian(axes: &[(&str, Vec<Value>)]) -> Vec<Hyperparams> {
    axes.iter()
        .map(|(_, vals)| vals.iter())
        .multi_cartesian_product()
        .map(|combo| {
            axes.iter()
                .zip(combo)
                .map(|((k, _), v)| (k.to_string(), v.clone()))
                .collect()
        })
        .collect()
}

/// The full hyperparameter grid of a family.
pub fn table3_grid(kind: FamilyKind) -> ModelFamily {
    let f = |xs: &[f64]| xs.iter().map(|&x| json!(x)).collect::<Vec<_>>();
    let i = |xs: &[u64]| xs.iter().map(|&x| json!(x)).collect::<Vec<_>>();
    let axes: Vec<(&str, Vec<Value>)> = match kind {
        FamilyKind::Linear => vec![
            ("penalty", vec![Value::Null, json!("l2")]),
            ("C", f(&[0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0])),
        ],
        FamilyKind::Perceptron => vec![
            ("penalty", vec![json!("l2")]),
            ("alpha", f(&[1e-6, 1e-5, 1e-4, 1e-3, 1e-2])),
        ],
        FamilyKind::Tree => vec![
            ("max_depth", i(&[2, 4, 8, 16, 32, 64, 128])),
            ("ccp_alpha", f(&[0.001, 0.003, 0.005, 0.007, 0.01, 0.05, 0.1, 0.2, 0.5, 0.0])),
        ],
        FamilyKind::Gbdt => vec![
            ("max_depth", i(&[1, 2, 4, 8])),
            ("n_estimators", i(&[100, 200, 500])),
            ("reg_lambda", f(&[0.0, 1e-6, 1e-3, 0.1, 1.0, 1e6, 1e7])),
            ("max_leaves", i(&[0])),
            ("learning_rate", f(&[0.3])),
            ("gamma", f(&[0.0])),
            ("min_child_weight", f(&[0.0])),
            ("max_delta_step", f(&[0.0])),
            ("subsample", f(&[1.0])),
            ("reg_alpha", f(&[0.0])),
            ("early_stopping_rounds", vec![Value::Null]),
        ],
    };
    ModelFamily::new(kind, cartesian(&axes)).expect("built-in grid is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataspace::{gen_synthetic, LabelModel};

    fn space(n_a: usize, n_not_a: usize) -> Dataset {
        Dataset::from_group_sizes(n_a, n_not_a).unwrap()
    }

    #[test]
    fn exhaustive_counts() {
        let ds = space(2, 3);
        let h = Labeling::from_bits(vec![true, false, true, false, true]);
        let all: Vec<_> =
            enumerate_consistent(&HypothesisClass::Exhaustive, &h, &PointSet::full(5), &ds, DEFAULT_ENUM_CAP)
                .unwrap()
                .collect();
        assert_eq!(all, vec![h.clone()]);
        let n8 = enumerate_consistent(
            &HypothesisClass::Exhaustive,
            &h,
            &PointSet::new([0, 3]),
            &ds,
            DEFAULT_ENUM_CAP,
        )
        .unwrap()
        .count();
        assert_eq!(n8, 8);
    }

    #[test]
    fn dictionary_m1_n3() {
        let ds = space(1, 2);
        let got: BTreeSet<String> = enumerate_consistent(
            &HypothesisClass::dictionary(1),
            &Labeling::zeros(3),
            &PointSet::empty(),
            &ds,
            DEFAULT_ENUM_CAP,
        )
        .unwrap()
        .map(|h| format!("{h:?}"))
        .collect();
        // oracle: filter all 2^3 labelings by ones <= 1
        let want: BTreeSet<String> = (0..8u32)
            .filter(|k| k.count_ones() <= 1)
            .map(|k| format!("{:?}", Labeling::from_bits((0..3).map(|j| k >> j & 1 == 1).collect())))
            .collect();
        assert_eq!(got.len(), 4);
        assert_eq!(got, want);
    }

    #[test]
    fn dictionary_matches_filtered_full_enumeration() {
        // exact set equality against a filter of all 2^n labelings
        for n in 2..=9usize {
            let ds = space(1, n - 1);
            for m in 0..=4.min(n) {
                for s_bits in [0u64, 0b1, 0b101, (1 << n) - 1, 0b110] {
                    let s = PointSet::from_mask_bits(s_bits & ((1 << n) - 1), n);
                    let h_star = Labeling::from_bits((0..n).map(|i| i % 3 == 0 && i / 3 < m).collect());
                    let class = HypothesisClass::dictionary(m);
                    let got: BTreeSet<Vec<bool>> =
                        enumerate_consistent(&class, &h_star, &s, &ds, DEFAULT_ENUM_CAP)
                            .unwrap()
                            .map(|h| h.bits().to_vec())
                            .collect();
                    let want: BTreeSet<Vec<bool>> = (0..1u64 << n)
                        .map(|k| (0..n).map(|j| k >> j & 1 == 1).collect::<Vec<bool>>())
                        .filter(|b| b.iter().filter(|&&x| x).count() <= m)
                        .filter(|b| s.ids().iter().all(|&i| b[i] == h_star.get(i)))
                        .collect();
                    assert_eq!(got, want, "n={n} m={m} S={s:?}");
                }
            }
        }
    }

    #[test]
    fn outside_class_and_cap() {
        let ds = space(2, 2);
        let err = enumerate_consistent(
            &HypothesisClass::dictionary(1),
            &Labeling::ones(4),
            &PointSet::empty(),
            &ds,
            DEFAULT_ENUM_CAP,
        )
        .err()
        .unwrap();
        assert_eq!(err.to_string(), "platform model outside declared class");
        let err = enumerate_consistent(
            &HypothesisClass::Exhaustive,
            &Labeling::zeros(4),
            &PointSet::empty(),
            &ds,
            8,
        )
        .err()
        .unwrap();
        assert!(matches!(err, AuditError::CapExceeded { required: 16, cap: 8 }));
    }

    #[test]
    fn membership() {
        assert!(is_member(&HypothesisClass::dictionary(0), &Labeling::zeros(5)).unwrap());
        let three = Labeling::from_bits(vec![true, true, true, false]);
        assert!(!is_member(&HypothesisClass::dictionary(2), &three).unwrap());
        assert!(is_member(&HypothesisClass::Exhaustive, &three).unwrap());
        let t = table3_grid(FamilyKind::Tree).class(0);
        assert!(matches!(
            is_member(&HypothesisClass::Trained(t), &three),
            Err(AuditError::MembershipUndecidable)
        ));
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(table3_grid(FamilyKind::Linear).len(), 16);
        assert_eq!(table3_grid(FamilyKind::Perceptron).len(), 5);
        assert_eq!(table3_grid(FamilyKind::Tree).len(), 70);
        assert_eq!(table3_grid(FamilyKind::Gbdt).len(), 84);
    }

    #[test]
    fn duplicate_grid_rejected() {
        let g = table3_grid(FamilyKind::Perceptron).grid;
        let dup = vec![g[0].clone(), g[0].clone()];
        assert!(ModelFamily::new(FamilyKind::Perceptron, dup).is_err());
        assert!(ModelFamily::new(FamilyKind::Perceptron, Vec::new()).is_err());
    }

    #[test]
    fn unknown_key_rejected() {
        let mut p = Hyperparams::new();
        p.insert("depth".into(), json!(3));
        let err = TrainedClass::new(FamilyKind::Tree, p).unwrap_err();
        assert!(matches!(err, AuditError::UnknownHyperparameter { .. }));
    }

    #[test]
    fn bad_weights_rejected() {
        let ds = gen_synthetic(20, 0.5, &LabelModel::default(), 0).unwrap();
        let class = table3_grid(FamilyKind::Tree).class(0);
        let mut spec = TrainSpec::uniform(ds.labels().unwrap(), PointSet::full(20), 0);
        spec.weights[3] = f64::NAN;
        assert!(matches!(class.train(&ds, &spec), Err(AuditError::BadWeights)));
        let spec = TrainSpec {
            weights: vec![0.0; 20],
            ..TrainSpec::uniform(ds.labels().unwrap(), PointSet::full(20), 0)
        };
        assert!(matches!(class.train(&ds, &spec), Err(AuditError::BadWeights)));
    }

    #[test]
    fn all_zero_targets_give_all_zero() {
        let ds = gen_synthetic(60, 0.5, &LabelModel::default(), 1).unwrap();
        for kind in FamilyKind::ALL {
            let fam = table3_grid(kind);
            let spec = TrainSpec::uniform(Labeling::zeros(60), PointSet::full(60), 0);
            for c in [fam.class(0), fam.class(fam.len() - 1)] {
                assert_eq!(c.train(&ds, &spec).unwrap(), Labeling::zeros(60), "{kind}");
            }
        }
    }

    #[test]
    fn deep_tree_interpolates_sensitive() {
        let ds = gen_synthetic(200, 0.3, &LabelModel { sensitive_feature: false, ..Default::default() }, 5)
            .unwrap();
        let mut p = Hyperparams::new();
        p.insert("max_depth".into(), json!(128));
        p.insert("ccp_alpha".into(), json!(0.0));
        let class = TrainedClass::new(FamilyKind::Tree, p).unwrap();
        let target = ds.sensitive_labeling();
        let spec = TrainSpec::uniform(target.clone(), PointSet::full(200), 0);
        assert_eq!(class.train(&ds, &spec).unwrap(), target);
    }

    #[test]
    fn training_is_reproducible_for_every_family() {
        let ds = gen_synthetic(120, 0.4, &LabelModel::default(), 2).unwrap();
        let spec = TrainSpec::uniform(ds.labels().unwrap(), PointSet::new(0..90), 17);
        for kind in FamilyKind::ALL {
            let fam = table3_grid(kind);
            for idx in [0, fam.len() / 2, fam.len() - 1] {
                let c = fam.class(idx);
                let mut c_fast = c.clone();
                if kind == FamilyKind::Gbdt {
                    c_fast.params.insert("n_estimators".into(), json!(20));
                }
                let a = c_fast.train(&ds, &spec).unwrap();
                let b = c_fast.train(&ds, &spec).unwrap();
                assert_eq!(a, b, "{}", c.family);
            }
        }
    }

    #[test]
    fn linear_c_extremes_both_valid() {
        let ds = gen_synthetic(150, 0.4, &LabelModel::default(), 4).unwrap();
        let spec = TrainSpec::uniform(ds.labels().unwrap(), PointSet::full(150), 0);
        let fam = table3_grid(FamilyKind::Linear);
        for i in 0..fam.len() {
            let h = fam.class(i).train(&ds, &spec).unwrap();
            assert_eq!(h.len(), 150);
        }
    }

    #[test]
    fn dictionary_monotone_membership() {
        for bits in 0u32..64 {
            let h = Labeling::from_bits((0..6).map(|j| bits >> j & 1 == 1).collect());
            for m in 0..6 {
                if is_member(&HypothesisClass::dictionary(m), &h).unwrap() {
                    assert!(is_member(&HypothesisClass::dictionary(m + 1), &h).unwrap());
                }
            }
        }
    }
}

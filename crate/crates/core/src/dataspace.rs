//! The finite input space: points, the sensitive-attribute partition, parity
//! measures, CSV ingestion and synthetic generation.
//!
//! Probabilities are frequencies under the uniform distribution over the
//! points of a [`Dataset`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::hypothesis::Labeling;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub id: usize,
    pub features: Vec<f64>,
    pub sensitive: bool,
    pub label: Option<bool>,
}

/// An immutable finite input space with both sensitive groups nonempty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Vec<SamplePoint>,
    feature_names: Vec<String>,
    n_a: usize,
}

/// Group sizes of the space and of an audit set inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub n_a: usize,
    pub n_not_a: usize,
    pub s_a: usize,
    pub s_not_a: usize,
}

impl GroupCounts {
    pub fn n(&self) -> usize {
        self.n_a + self.n_not_a
    }

    pub fn s(&self) -> usize {
        self.s_a + self.s_not_a
    }

    /// P[X ∈ S | X_A = 1]
    pub fn frac_a(&self) -> f64 {
        self.s_a as f64 / self.n_a as f64
    }

    /// P[X ∈ S | X_A = 0]
    pub fn frac_not_a(&self) -> f64 {
        self.s_not_a as f64 / self.n_not_a as f64
    }
}

/// A set of point ids, kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointSet(Vec<usize>);

impl PointSet {
    pub fn new(ids: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = ids.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        PointSet(v)
    }

    pub fn empty() -> Self {
        PointSet(Vec::new())
    }

    pub fn full(n: usize) -> Self {
        PointSet((0..n).collect())
    }

    /// Members of `bits` set to one, where bit `i` stands for point `i`.
    pub fn from_mask_bits(bits: u64, n: usize) -> Self {
        PointSet((0..n).filter(|&i| bits >> i & 1 == 1).collect())
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.0 {
            if i < n {
                m[i] = true;
            }
        }
        m
    }

    pub fn complement(&self, n: usize) -> PointSet {
        let m = self.mask(n);
        PointSet((0..n).filter(|&i| !m[i]).collect())
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }
}

impl FromIterator<usize> for PointSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        PointSet::new(iter)
    }
}

impl Dataset {
    /// Validates and builds a dataset; point ids must be `0..n` in order.
    pub fn new(points: Vec<SamplePoint>, feature_names: Vec<String>) -> Result<Self> {
        if points.len() < 2 {
            return Err(AuditError::Data(format!(
                "input space needs at least 2 points, got {}",
                points.len()
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if p.id != i {
                return Err(AuditError::Data(format!("point at position {i} has id {}", p.id)));
            }
            if p.features.len() != feature_names.len() {
                return Err(AuditError::Data(format!(
                    "point {i} has {} features, expected {}",
                    p.features.len(),
                    feature_names.len()
                )));
            }
        }
        let n_a = points.iter().filter(|p| p.sensitive).count();
        if n_a == 0 {
            return Err(AuditError::EmptyGroup { group: "X_A" });
        }
        if n_a == points.len() {
            return Err(AuditError::EmptyGroup { group: "¬X_A" });
        }
        Ok(Dataset { points, feature_names, n_a })
    }

    /// Builds a dataset from columns; ids follow row order.
    pub fn from_parts(
        features: Vec<Vec<f64>>,
        sensitive: Vec<bool>,
        labels: Option<Vec<bool>>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if features.len() != sensitive.len() {
            return Err(AuditError::Data("features and sensitive lengths differ".into()));
        }
        if let Some(l) = &labels {
            if l.len() != sensitive.len() {
                return Err(AuditError::Data("labels and sensitive lengths differ".into()));
            }
        }
        let points = features
            .into_iter()
            .zip(sensitive)
            .enumerate()
            .map(|(id, (features, sensitive))| SamplePoint {
                id,
                features,
                sensitive,
                label: labels.as_ref().map(|l| l[id]),
            })
            .collect();
        Dataset::new(points, feature_names)
    }

    /// A featureless space with the given group sizes; X_A holds the first `n_a` ids.
    pub fn from_group_sizes(n_a: usize, n_not_a: usize) -> Result<Self> {
        let n = n_a + n_not_a;
        let sensitive = (0..n).map(|i| i < n_a).collect();
        Dataset::from_parts(vec![Vec::new(); n], sensitive, None, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_not_a(&self) -> usize {
        self.points.len() - self.n_a
    }

    pub fn points(&self) -> &[SamplePoint] {
        &self.points
    }

    pub fn point(&self, id: usize) -> &SamplePoint {
        &self.points[id]
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn sensitive(&self, id: usize) -> bool {
        self.points[id].sensitive
    }

    pub fn sensitive_labeling(&self) -> Labeling {
        Labeling::from_bits(self.points.iter().map(|p| p.sensitive).collect())
    }

    pub fn has_labels(&self) -> bool {
        self.points.iter().all(|p| p.label.is_some())
    }

    /// Ground-truth labels as a labeling; errors if any point lacks one.
    pub fn labels(&self) -> Result<Labeling> {
        self.points
            .iter()
            .map(|p| {
                p.label
                    .ok_or_else(|| AuditError::Data(format!("point {} has no label", p.id)))
            })
            .collect::<Result<Vec<_>>>()
            .map(Labeling::from_bits)
    }

    pub fn group_ids(&self, sensitive: bool) -> Vec<usize> {
        self.points
            .iter()
            .filter(|p| p.sensitive == sensitive)
            .map(|p| p.id)
            .collect()
    }

    pub fn group_counts(&self, audit: &PointSet) -> GroupCounts {
        let s_a = audit.ids().iter().filter(|&&i| self.points[i].sensitive).count();
        GroupCounts {
            n_a: self.n_a,
            n_not_a: self.n_not_a(),
            s_a,
            s_not_a: audit.len() - s_a,
        }
    }

    /// Coefficient of `h(x)` in μ(h, X): `1/n_A` on X_A and `-1/n_¬A` elsewhere.
    pub fn mu_coefficients(&self) -> Vec<f64> {
        let (wa, wn) = (1.0 / self.n_a as f64, 1.0 / self.n_not_a() as f64);
        self.points
            .iter()
            .map(|p| if p.sensitive { wa } else { -wn })
            .collect()
    }
}

fn parity_counts(h: &Labeling, subset: &PointSet, event: &[bool]) -> Result<f64> {
    let (mut e, mut e1, mut ne, mut ne1) = (0usize, 0usize, 0usize, 0usize);
    for &i in subset.ids() {
        if i >= event.len() || i >= h.len() {
            return Err(AuditError::InvalidArgument(format!("point id {i} out of range")));
        }
        if event[i] {
            e += 1;
            e1 += h.get(i) as usize;
        } else {
            ne += 1;
            ne1 += h.get(i) as usize;
        }
    }
    if e == 0 {
        return Err(AuditError::MeasureUndefined("conditioning event E is empty".into()));
    }
    if ne == 0 {
        return Err(AuditError::MeasureUndefined("complement ¬E is empty".into()));
    }
    Ok(e1 as f64 / e as f64 - ne1 as f64 / ne as f64)
}

/// Demographic parity of `h` on `subset`:
/// P[h=1 | S, X_A=1] − P[h=1 | S, X_A=0].
pub fn measure_mu(h: &Labeling, subset: &PointSet, dataset: &Dataset) -> Result<f64> {
    check_len(h, dataset)?;
    let event: Vec<bool> = dataset.points.iter().map(|p| p.sensitive).collect();
    parity_counts(h, subset, &event)
}

/// μ on the whole space, via the precomputed coefficients.
pub fn measure_mu_full(h: &Labeling, coefficients: &[f64]) -> f64 {
    h.iter()
        .zip(coefficients)
        .filter(|(b, _)| *b)
        .map(|(_, c)| c)
        .sum()
}

/// Parity measure with an arbitrary conditioning event E.
pub fn measure_parity_general(
    h: &Labeling,
    subset: &PointSet,
    event: &EventPredicate,
    dataset: &Dataset,
) -> Result<f64> {
    check_len(h, dataset)?;
    let bound = event.bind(dataset)?;
    parity_counts(h, subset, &bound)
}

fn check_len(h: &Labeling, dataset: &Dataset) -> Result<()> {
    if h.len() != dataset.n() {
        return Err(AuditError::InvalidArgument(format!(
            "labeling has length {}, space has {} points",
            h.len(),
            dataset.n()
        )));
    }
    Ok(())
}

type PointPredicate = dyn Fn(&SamplePoint) -> Option<bool> + Send + Sync;

/// The conditioning event E of a parity measure.
#[derive(Clone)]
pub enum EventPredicate {
    /// E ≡ (x_A = 1)
    DemographicParity,
    /// E ≡ (y = 1); requires labels on every point.
    PositiveLabel,
    /// Returning `None` marks a point the predicate cannot evaluate.
    Custom { name: String, predicate: Arc<PointPredicate> },
}

impl EventPredicate {
    pub fn custom(
        name: impl Into<String>,
        predicate: impl Fn(&SamplePoint) -> Option<bool> + Send + Sync + 'static,
    ) -> Self {
        EventPredicate::Custom { name: name.into(), predicate: Arc::new(predicate) }
    }

    pub fn name(&self) -> &str {
        match self {
            EventPredicate::DemographicParity => "demographic_parity",
            EventPredicate::PositiveLabel => "positive_label",
            EventPredicate::Custom { name, .. } => name,
        }
    }

    /// Evaluates E on every point of the space.
    pub fn bind(&self, dataset: &Dataset) -> Result<Vec<bool>> {
        dataset
            .points()
            .iter()
            .map(|p| {
                let v = match self {
                    EventPredicate::DemographicParity => Some(p.sensitive),
                    EventPredicate::PositiveLabel => p.label,
                    EventPredicate::Custom { predicate, .. } => predicate(p),
                };
                v.ok_or_else(|| {
                    AuditError::Data(format!(
                        "event `{}` undefined on point {}",
                        self.name(),
                        p.id
                    ))
                })
            })
            .collect()
    }
}

impl fmt::Debug for EventPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EventPredicate({})", self.name())
    }
}

/// Two accepted spellings of a binary column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryMapping {
    pub positive: String,
    pub negative: String,
}

/// How to read a CSV file into a [`Dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvSchema {
    pub sensitive_column: String,
    pub label_column: Option<String>,
    /// Defaults to numeric 0/1.
    pub sensitive_values: Option<BinaryMapping>,
    pub label_values: Option<BinaryMapping>,
    /// Columns one-hot encoded even when their values parse as numbers.
    pub categorical: Vec<String>,
    pub ignore: Vec<String>,
    pub sensitive_as_feature: bool,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            sensitive_column: "sensitive".into(),
            label_column: None,
            sensitive_values: None,
            label_values: None,
            categorical: Vec::new(),
            ignore: Vec::new(),
            sensitive_as_feature: true,
        }
    }
}

fn parse_binary(column: &str, raw: &str, mapping: Option<&BinaryMapping>) -> Result<bool> {
    let v = raw.trim();
    let bad = || AuditError::NonBinary { column: column.to_string(), value: v.to_string() };
    match mapping {
        Some(m) if v == m.positive => Ok(true),
        Some(m) if v == m.negative => Ok(false),
        Some(_) => Err(bad()),
        None => match v.parse::<f64>() {
            Ok(1.0) => Ok(true),
            Ok(0.0) => Ok(false),
            _ => Err(bad()),
        },
    }
}

/// Loads a dataset from a CSV file. See [`read_csv`].
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| {
        AuditError::Data(format!("cannot open {}: {e}", path.as_ref().display()))
    })?;
    read_csv(file, schema)
}

/// Reads a headed, comma-separated table. Numeric columns pass through,
/// other columns are one-hot encoded with categories in lexicographic order.
/// Points keep file order.
pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| AuditError::MissingColumn(name.to_string()))
    };
    let s_idx = col(&schema.sensitive_column)?;
    let l_idx = schema.label_column.as_deref().map(col).transpose()?;
    for c in schema.categorical.iter().chain(&schema.ignore) {
        col(c)?;
    }

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row: Vec<String> = rec.iter().map(|v| v.trim().to_string()).collect();
        if let Some(c) = row.iter().position(|v| v.is_empty()) {
            return Err(AuditError::Data(format!(
                "missing value in column `{}` at data row {}",
                headers[c],
                r + 1
            )));
        }
        rows.push(row);
    }

    let sensitive = rows
        .iter()
        .map(|r| parse_binary(&headers[s_idx], &r[s_idx], schema.sensitive_values.as_ref()))
        .collect::<Result<Vec<bool>>>()?;
    let labels = l_idx
        .map(|li| {
            rows.iter()
                .map(|r| parse_binary(&headers[li], &r[li], schema.label_values.as_ref()))
                .collect::<Result<Vec<bool>>>()
        })
        .transpose()?;

    let mut names = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (c, h) in headers.iter().enumerate() {
        if Some(c) == l_idx || schema.ignore.contains(h) {
            continue;
        }
        if c == s_idx {
            if schema.sensitive_as_feature {
                names.push(h.clone());
                columns.push(sensitive.iter().map(|&s| s as u8 as f64).collect());
            }
            continue;
        }
        let numeric: Option<Vec<f64>> = if schema.categorical.contains(h) {
            None
        } else {
            rows.iter().map(|r| r[c].parse::<f64>().ok()).collect()
        };
        match numeric {
            Some(vals) if vals.iter().all(|v| v.is_finite()) => {
                names.push(h.clone());
                columns.push(vals);
            }
            _ => {
                let cats: BTreeSet<&str> = rows.iter().map(|r| r[c].as_str()).collect();
                for cat in cats {
                    names.push(format!("{h}={cat}"));
                    columns.push(rows.iter().map(|r| (r[c] == cat) as u8 as f64).collect());
                }
            }
        }
    }

    let features = (0..rows.len())
        .map(|i| columns.iter().map(|col| col[i]).collect())
        .collect();
    let ds = Dataset::from_parts(features, sensitive, labels, names)?;
    log::debug!("loaded {} points, {} features", ds.n(), ds.n_features());
    Ok(ds)
}

/// Feature and label distribution of [`gen_synthetic`].
///
/// The latent class y is Bernoulli with rate `0.5 ± base_rate_gap/2`
/// (higher in X_A); each feature is Gaussian with unit variance, mean
/// `±separation/2` by class plus `sensitive_shift` in X_A; the observed label
/// is y flipped with probability `label_noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelModel {
    pub n_features: usize,
    pub separation: f64,
    pub sensitive_shift: f64,
    pub base_rate_gap: f64,
    pub label_noise: f64,
    /// Append x_A as the last feature column.
    pub sensitive_feature: bool,
}

impl Default for LabelModel {
    fn default() -> Self {
        LabelModel {
            n_features: 4,
            separation: 1.5,
            sensitive_shift: 0.5,
            base_rate_gap: 0.2,
            label_noise: 0.1,
            sensitive_feature: true,
        }
    }
}

/// Generates a labeled synthetic space with exactly `round(n·p_sensitive)`
/// sensitive points. Output is a pure function of the arguments.
pub fn gen_synthetic(n: usize, p_sensitive: f64, model: &LabelModel, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(AuditError::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    if !(p_sensitive > 0.0 && p_sensitive < 1.0) {
        return Err(AuditError::InvalidArgument(format!(
            "p_sensitive must lie in (0, 1), got {p_sensitive}"
        )));
    }
    if !(0.0..=0.5).contains(&model.label_noise) || !(0.0..=1.0).contains(&model.base_rate_gap) {
        return Err(AuditError::InvalidArgument("label model rates out of range".into()));
    }
    let n_a = (n as f64 * p_sensitive).round() as usize;
    if n_a == 0 || n_a == n {
        return Err(AuditError::InvalidArgument(format!(
            "n·p_sensitive = {} rounds to an empty group",
            n as f64 * p_sensitive
        )));
    }

    let mut rng = seed::rng(seed);
    let mut sensitive = vec![false; n];
    for i in index::sample(&mut rng, n, n_a) {
        sensitive[i] = true;
    }
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for &s in &sensitive {
        let rate = 0.5 + model.base_rate_gap * if s { 0.5 } else { -0.5 };
        let y = rng.random_bool(rate);
        let centre = if y { model.separation / 2.0 } else { -model.separation / 2.0 };
        let shift = if s { model.sensitive_shift } else { 0.0 };
        let mut row: Vec<f64> = (0..model.n_features)
            .map(|_| centre + shift + noise.sample(&mut rng))
            .collect();
        if model.sensitive_feature {
            row.push(s as u8 as f64);
        }
        features.push(row);
        labels.push(y ^ rng.random_bool(model.label_noise));
    }
    let mut names: Vec<String> = (0..model.n_features).map(|j| format!("f{j}")).collect();
    if model.sensitive_feature {
        names.push("sensitive".into());
    }
    Dataset::from_parts(features, sensitive, Some(labels), names)
}

/// Writes a dataset as CSV with columns `id, <features>, sensitive, label`.
pub fn write_csv<W: std::io::Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let feature_cols: Vec<usize> = dataset
        .feature_names()
        .iter()
        .enumerate()
        .filter(|(_, n)| n.as_str() != "sensitive")
        .map(|(i, _)| i)
        .collect();
    let mut header = vec!["id".to_string()];
    header.extend(feature_cols.iter().map(|&i| dataset.feature_names()[i].clone()));
    header.push("sensitive".into());
    if dataset.has_labels() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for p in dataset.points() {
        let mut rec = vec![p.id.to_string()];
        rec.extend(feature_cols.iter().map(|&i| format!("{:.6}", p.features[i])));
        rec.push((p.sensitive as u8).to_string());
        if let Some(l) = p.label {
            rec.push((l as u8).to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Counts distinct feature rows; trees can interpolate iff this equals `n`.
pub fn distinct_rows(dataset: &Dataset) -> usize {
    let mut seen: BTreeMap<Vec<u64>, ()> = BTreeMap::new();
    for p in dataset.points() {
        seen.insert(p.features.iter().map(|f| f.to_bits()).collect(), ());
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn six() -> Dataset {
        // X_A = {0, 1}
        Dataset::from_group_sizes(2, 4).unwrap()
    }

    fn lab(bits: &[u8]) -> Labeling {
        Labeling::from_bits(bits.iter().map(|&b| b == 1).collect())
    }

    #[test]
    fn mu_hand_count() {
        let ds = six();
        let h = lab(&[1, 0, 0, 1, 0, 0]);
        let mu = measure_mu(&h, &PointSet::full(6), &ds).unwrap();
        // 1/2 - 1/4
        assert!((mu - 0.25).abs() < 1e-15);
        assert_eq!(measure_mu_full(&h, &ds.mu_coefficients()), mu);
    }

    #[test]
    fn mu_constant_and_extreme() {
        let ds = six();
        assert_eq!(measure_mu(&Labeling::ones(6), &PointSet::full(6), &ds).unwrap(), 0.0);
        let xa = ds.sensitive_labeling();
        assert_eq!(measure_mu(&xa, &PointSet::full(6), &ds).unwrap(), 1.0);
        assert_eq!(measure_mu(&xa.complement(), &PointSet::full(6), &ds).unwrap(), -1.0);
    }

    #[test]
    fn mu_undefined_when_group_missing() {
        let ds = six();
        let err = measure_mu(&Labeling::zeros(6), &PointSet::new([0, 1]), &ds).unwrap_err();
        assert!(matches!(err, AuditError::MeasureUndefined(_)));
    }

    #[test]
    fn general_parity_defaults_to_mu() {
        let ds = six();
        let h = lab(&[1, 0, 1, 1, 0, 0]);
        let s = PointSet::new([0, 2, 3, 5]);
        assert_eq!(
            measure_parity_general(&h, &s, &EventPredicate::DemographicParity, &ds).unwrap(),
            measure_mu(&h, &s, &ds).unwrap()
        );
    }

    #[test]
    fn general_parity_always_true_event_fails() {
        let ds = six();
        let ev = EventPredicate::custom("always", |_| Some(true));
        let err =
            measure_parity_general(&Labeling::zeros(6), &PointSet::full(6), &ev, &ds).unwrap_err();
        assert!(matches!(err, AuditError::MeasureUndefined(_)));
    }

    #[test]
    fn general_parity_on_labels() {
        // y = (1,1,0,0,0,1); E = {0,1,5}, ¬E = {2,3,4}
        let feats = vec![Vec::new(); 6];
        let sens = vec![true, true, false, false, false, false];
        let y = vec![true, true, false, false, false, true];
        let ds = Dataset::from_parts(feats, sens, Some(y), Vec::new()).unwrap();
        let h = lab(&[1, 0, 1, 1, 0, 1]);
        let v = measure_parity_general(&h, &PointSet::full(6), &EventPredicate::PositiveLabel, &ds)
            .unwrap();
        // E: h = 1,0,1 -> 2/3 ; ¬E: h = 1,1,0 -> 2/3
        assert!((v - 0.0).abs() < 1e-15);
        let h2 = lab(&[1, 1, 0, 0, 1, 1]);
        let v2 =
            measure_parity_general(&h2, &PointSet::full(6), &EventPredicate::PositiveLabel, &ds)
                .unwrap();
        assert!((v2 - (1.0 - 1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn label_event_requires_labels() {
        let err = EventPredicate::PositiveLabel.bind(&six()).unwrap_err();
        assert!(matches!(err, AuditError::Data(_)));
    }

    #[test]
    fn csv_counts_groups() {
        let data = "a,color,s,y\n1.0,red,1,0\n2.0,blue,1,1\n3.0,red,0,0\n4.0,green,0,1\n5.0,red,0,1\n6.0,blue,0,0\n";
        let schema = CsvSchema {
            sensitive_column: "s".into(),
            label_column: Some("y".into()),
            ..Default::default()
        };
        let ds = read_csv(data.as_bytes(), &schema).unwrap();
        let gc = ds.group_counts(&PointSet::empty());
        assert_eq!((gc.n_a, gc.n_not_a), (2, 4));
        assert_eq!(
            ds.feature_names(),
            &["a", "color=blue", "color=green", "color=red", "s"]
        );
        assert_eq!(ds.point(0).features, vec![1.0, 0.0, 0.0, 1.0, 1.0]);
        assert_eq!(ds.labels().unwrap().count_ones(), 3);
    }

    #[test]
    fn csv_rejects_single_group() {
        let data = "x,s\n1,1\n2,1\n3,1\n4,1\n";
        let schema = CsvSchema { sensitive_column: "s".into(), ..Default::default() };
        let err = read_csv(data.as_bytes(), &schema).unwrap_err();
        assert_eq!(err.to_string(), "group ¬X_A empty");
    }

    #[test]
    fn csv_rejects_non_binary_and_missing() {
        let schema = CsvSchema { sensitive_column: "s".into(), ..Default::default() };
        let err = read_csv("x,s\n1,1\n2,2\n".as_bytes(), &schema).unwrap_err();
        assert!(err.to_string().contains("`s`") && err.to_string().contains("`2`"), "{err}");
        let err = read_csv("x,s\n1,1\n,0\n".as_bytes(), &schema).unwrap_err();
        assert!(err.to_string().contains("missing value"), "{err}");
        let err = read_csv("x,t\n1,1\n".as_bytes(), &schema).unwrap_err();
        assert!(matches!(err, AuditError::MissingColumn(c) if c == "s"));
    }

    #[test]
    fn csv_declared_mapping() {
        let data = "x,sex,y\n1,F,yes\n2,M,no\n";
        let schema = CsvSchema {
            sensitive_column: "sex".into(),
            label_column: Some("y".into()),
            sensitive_values: Some(BinaryMapping { positive: "F".into(), negative: "M".into() }),
            label_values: Some(BinaryMapping { positive: "yes".into(), negative: "no".into() }),
            sensitive_as_feature: false,
            ..Default::default()
        };
        let ds = read_csv(data.as_bytes(), &schema).unwrap();
        assert!(ds.sensitive(0) && !ds.sensitive(1));
        assert_eq!(ds.feature_names(), &["x"]);
    }

    #[test]
    fn synthetic_exact_group_counts() {
        let ds = gen_synthetic(1000, 0.3, &LabelModel::default(), 7).unwrap();
        assert_eq!((ds.n_a(), ds.n_not_a()), (300, 700));
        assert_eq!(distinct_rows(&ds), 1000);
        let tiny = gen_synthetic(2, 0.5, &LabelModel::default(), 1).unwrap();
        assert_eq!((tiny.n_a(), tiny.n_not_a()), (1, 1));
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = gen_synthetic(300, 0.4, &LabelModel::default(), 11).unwrap();
        let b = gen_synthetic(300, 0.4, &LabelModel::default(), 11).unwrap();
        assert_eq!(a, b);
        let c = gen_synthetic(300, 0.4, &LabelModel::default(), 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_rejects_degenerate_rounding() {
        assert!(gen_synthetic(10, 0.01, &LabelModel::default(), 0).is_err());
        assert!(gen_synthetic(10, 0.99, &LabelModel::default(), 0).is_err());
        assert!(gen_synthetic(1, 0.5, &LabelModel::default(), 0).is_err());
    }

    #[test]
    fn csv_round_trip_through_writer() {
        let ds = gen_synthetic(20, 0.5, &LabelModel::default(), 3).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let schema = CsvSchema {
            sensitive_column: "sensitive".into(),
            label_column: Some("label".into()),
            ignore: vec!["id".into()],
            ..Default::default()
        };
        let back = read_csv(buf.as_slice(), &schema).unwrap();
        assert_eq!(back.n(), 20);
        assert_eq!(back.labels().unwrap(), ds.labels().unwrap());
        assert_eq!(back.sensitive_labeling(), ds.sensitive_labeling());
    }
}

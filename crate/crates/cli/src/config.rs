//! Experiment configuration: a JSON file, `--set key.path=value` overrides,
//! and resolution of family specs into concrete classes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use itertools::Itertools;
use mpaudit_core::dataspace::{gen_synthetic, load_csv, CsvSchema, Dataset, LabelModel};
use mpaudit_core::hypothesis::{table3_grid, FamilyKind, Hyperparams, HypothesisClass, ModelFamily};
use mpaudit_core::metrics::DiamMethod;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    Synthetic {
        n: usize,
        p_sensitive: f64,
        #[serde(default)]
        model: LabelModel,
        #[serde(default)]
        seed: u64,
    },
    Csv {
        path: PathBuf,
        #[serde(default)]
        schema: CsvSchema,
    },
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig::Synthetic { n: 1000, p_sensitive: 0.3, model: LabelModel::default(), seed: 0 }
    }
}

impl DatasetConfig {
    pub fn load(&self) -> CliResult<Dataset> {
        Ok(match self {
            DatasetConfig::Synthetic { n, p_sensitive, model, seed } => gen_synthetic(*n, *p_sensitive, model, *seed)?,
            DatasetConfig::Csv { path, schema } => load_csv(path, schema)?,
        })
    }
}

/// One model family of the experiment.
///
/// `kind` is `exhaustive`, `dictionary`, or a trained family name. Trained
/// families take either an explicit `grid`, or `axes` (expanded as a
/// Cartesian product and merged with `fixed`), or default to the full grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<Hyperparams>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<BTreeMap<String, Vec<Value>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed: Option<Hyperparams>,
    /// Dictionary memories; default m = k·n/10 for k = 0..=10.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memories: Option<Vec<usize>>,
}

impl FamilySpec {
    pub fn named(kind: &str) -> Self {
        FamilySpec { kind: kind.into(), grid: None, axes: None, fixed: None, memories: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityConfig {
    pub draws: usize,
    pub restarts: usize,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        CapacityConfig { draws: 15, restarts: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig2Config {
    pub n: usize,
    pub p_sensitive: f64,
    pub memories: Vec<usize>,
    pub budgets: Vec<usize>,
    pub reps: usize,
}

impl Default for Fig2Config {
    fn default() -> Self {
        Fig2Config {
            n: 1000,
            p_sensitive: 0.3,
            memories: (0..=1000).step_by(50).collect(),
            budgets: vec![100, 300, 500],
            reps: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    /// Fill the wallclock_ms column (makes reruns differ byte-wise).
    pub record_timing: bool,
    pub dataset: DatasetConfig,
    pub families: Vec<FamilySpec>,
    pub budget_fraction: f64,
    pub budget_fractions: Vec<f64>,
    pub reps: usize,
    pub capacity: CapacityConfig,
    pub folds: usize,
    pub diam_method: DiamMethod,
    pub bootstrap_resamples: usize,
    pub fig2: Fig2Config,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment_id: "mpaudit".into(),
            seed: 0,
            out_dir: PathBuf::from("results"),
            threads: None,
            record_timing: false,
            dataset: DatasetConfig::default(),
            families: vec![FamilySpec::named("dictionary"), FamilySpec::named("tree")],
            budget_fraction: 0.1,
            budget_fractions: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5],
            reps: 15,
            capacity: CapacityConfig::default(),
            folds: 5,
            diam_method: DiamMethod::Auto,
            bootstrap_resamples: 1000,
            fig2: Fig2Config::default(),
        }
    }
}

/// Parses an override value: JSON when it parses, a bare string otherwise.
fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Sets `path` (dot-separated; numeric segments index arrays) in `root`.
pub fn apply_override(root: &mut Value, assignment: &str) -> CliResult<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override `{assignment}` is not key=value")))?;
    let mut cur = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (k, key) in keys.iter().enumerate() {
        let last = k + 1 == keys.len();
        if cur.is_null() {
            *cur = json!({});
        }
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(key.to_string(), parse_value(raw));
                    return Ok(());
                }
                map.entry(key.to_string()).or_insert(Value::Null)
            }
            Value::Array(items) => {
                let i: usize = key
                    .parse()
                    .map_err(|_| CliError::config(format!("`{key}` in `{path}` is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(i)
                    .ok_or_else(|| CliError::config(format!("index {i} out of range ({len}) in `{path}`")))?;
                if last {
                    *slot = parse_value(raw);
                    return Ok(());
                }
                slot
            }
            _ => return Err(CliError::config(format!("`{path}` descends into a scalar"))),
        };
    }
    Ok(())
}

impl ExperimentConfig {
    /// Loads `path` (or the defaults), then applies overrides in order.
    pub fn resolve(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let mut value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::config(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::config(format!("config {}: {e}", p.display())))?
            }
            None => serde_json::to_value(ExperimentConfig::default()).expect("default config serializes"),
        };
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: ExperimentConfig =
            serde_json::from_value(value).map_err(|e| CliError::config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> CliResult<()> {
        let frac = |f: f64| (0.0..=1.0).contains(&f);
        if !frac(self.budget_fraction) || !self.budget_fractions.iter().all(|&f| frac(f)) {
            return Err(CliError::config("budget fractions must lie in [0, 1]"));
        }
        if self.reps == 0 || self.capacity.draws == 0 || self.capacity.restarts == 0 || self.fig2.reps == 0 {
            return Err(CliError::config("reps, capacity.draws, capacity.restarts and fig2.reps must be >= 1"));
        }
        if self.folds < 2 {
            return Err(CliError::config("folds must be >= 2"));
        }
        if self.experiment_id.is_empty() {
            return Err(CliError::config("experiment_id must not be empty"));
        }
        Ok(())
    }

    pub fn write_resolved(&self, dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(dir.join("config.resolved.json"), text + "\n")?;
        Ok(())
    }
}

/// A class ready to run, with its stable id and hyperparameters.
#[derive(Debug, Clone)]
pub struct ResolvedClass {
    pub id: String,
    pub hyperparams: Hyperparams,
    pub class: HypothesisClass,
}

impl ResolvedClass {
    pub fn hyperparams_json(&self) -> String {
        serde_json::to_string(&self.hyperparams).expect("hyperparameters serialize")
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedFamily {
    pub name: String,
    pub classes: Vec<ResolvedClass>,
    /// Present for trained families.
    pub model_family: Option<ModelFamily>,
}

pub fn resolve_families(specs: &[FamilySpec], dataset: &Dataset) -> CliResult<Vec<ResolvedFamily>> {
    let mut names = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for spec in specs {
        if !names.insert(spec.kind.clone()) {
            return Err(CliError::config(format!("family `{}` listed twice", spec.kind)));
        }
        out.push(resolve_family(spec, dataset)?);
    }
    Ok(out)
}

fn resolve_family(spec: &FamilySpec, dataset: &Dataset) -> CliResult<ResolvedFamily> {
    let trained_only = spec.grid.is_some() || spec.axes.is_some() || spec.fixed.is_some();
    match spec.kind.as_str() {
        "exhaustive" => {
            if trained_only || spec.memories.is_some() {
                return Err(CliError::config("exhaustive family takes no parameters"));
            }
            Ok(ResolvedFamily {
                name: "exhaustive".into(),
                classes: vec![ResolvedClass {
                    id: "exhaustive".into(),
                    hyperparams: Hyperparams::new(),
                    class: HypothesisClass::Exhaustive,
                }],
                model_family: None,
            })
        }
        "dictionary" => {
            if trained_only {
                return Err(CliError::config("dictionary family takes only `memories`"));
            }
            let n = dataset.n();
            let memories = spec.memories.clone().unwrap_or_else(|| (0..=10).map(|k| k * n / 10).collect());
            if let Some(m) = memories.iter().find(|&&m| m > n) {
                return Err(CliError::config(format!("dictionary memory {m} exceeds n = {n}")));
            }
            if memories.iter().duplicates().next().is_some() {
                return Err(CliError::config("duplicate dictionary memory"));
            }
            let classes = memories
                .iter()
                .enumerate()
                .map(|(i, &m)| ResolvedClass {
                    id: format!("dictionary-{i:03}"),
                    hyperparams: [("memory".to_string(), json!(m))].into_iter().collect(),
                    class: HypothesisClass::dictionary(m),
                })
                .collect();
            Ok(ResolvedFamily { name: "dictionary".into(), classes, model_family: None })
        }
        other => {
            let kind: FamilyKind = other
                .parse()
                .map_err(|_| CliError::config(format!("unknown family kind `{other}`")))?;
            if spec.memories.is_some() {
                return Err(CliError::config("`memories` applies to the dictionary family only"));
            }
            let grid = match (&spec.grid, &spec.axes) {
                (Some(_), Some(_)) => return Err(CliError::config("give either `grid` or `axes`, not both")),
                (Some(g), None) => g.clone(),
                (None, Some(axes)) => axes
                    .iter()
                    .map(|(k, vals)| vals.iter().map(move |v| (k.clone(), v.clone())))
                    .multi_cartesian_product()
                    .map(|pairs| pairs.into_iter().collect())
                    .collect(),
                (None, None) => table3_grid(kind).grid,
            };
            let grid = grid
                .into_iter()
                .map(|mut p: Hyperparams| {
                    if let Some(fixed) = &spec.fixed {
                        for (k, v) in fixed {
                            p.entry(k.clone()).or_insert_with(|| v.clone());
                        }
                    }
                    p
                })
                .collect();
            let family = ModelFamily::new(kind, grid)?;
            let classes = (0..family.len())
                .map(|i| ResolvedClass {
                    id: family.class_id(i),
                    hyperparams: family.grid[i].clone(),
                    class: HypothesisClass::Trained(family.class(i)),
                })
                .collect();
            Ok(ResolvedFamily { name: kind.to_string(), classes, model_family: Some(family) })
        }
    }
}

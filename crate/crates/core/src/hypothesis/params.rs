use serde_json::Value;

use super::{FamilyKind, Hyperparams};
use crate::error::{AuditError, Result};

fn keys(family: FamilyKind) -> &'static [&'static str] {
    match family {
        FamilyKind::Linear => &["penalty", "C"],
        FamilyKind::Perceptron => &["penalty", "alpha", "max_iter"],
        FamilyKind::Tree => &["max_depth", "ccp_alpha"],
        FamilyKind::Gbdt => &[
            "max_depth",
            "n_estimators",
            "reg_lambda",
            "max_leaves",
            "learning_rate",
            "gamma",
            "min_child_weight",
            "max_delta_step",
            "subsample",
            "reg_alpha",
            "early_stopping_rounds",
        ],
    }
}

pub(super) fn validate(family: FamilyKind, params: &Hyperparams) -> Result<()> {
    let allowed = keys(family);
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(AuditError::UnknownHyperparameter { family: family.to_string(), key: k.clone() });
    }
    match family {
        FamilyKind::Linear => LinearParams::parse(params).map(drop),
        FamilyKind::Perceptron => PerceptronParams::parse(params).map(drop),
        FamilyKind::Tree => TreeParams::parse(params).map(drop),
        FamilyKind::Gbdt => GbdtParams::parse(params).map(drop),
    }
}

fn bad(key: &str, reason: impl Into<String>) -> AuditError {
    AuditError::BadHyperparameter { key: key.to_string(), reason: reason.into() }
}

fn float(p: &Hyperparams, key: &str, default: f64) -> Result<f64> {
    match p.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| bad(key, format!("expected a finite number, got {v}"))),
    }
}

fn nonneg(p: &Hyperparams, key: &str, default: f64) -> Result<f64> {
    let x = float(p, key, default)?;
    if x < 0.0 {
        return Err(bad(key, "must be >= 0"));
    }
    Ok(x)
}

fn uint(p: &Hyperparams, key: &str, default: Option<usize>) -> Result<Option<usize>> {
    match p.get(key) {
        None => Ok(default),
        Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|x| Some(x as usize))
            .ok_or_else(|| bad(key, format!("expected a non-negative integer, got {v}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Penalty {
    None,
    L2,
}

fn penalty(p: &Hyperparams, default: Penalty) -> Result<Penalty> {
    match p.get("penalty") {
        None => Ok(default),
        Some(Value::Null) => Ok(Penalty::None),
        Some(Value::String(s)) if s == "none" => Ok(Penalty::None),
        Some(Value::String(s)) if s == "l2" => Ok(Penalty::L2),
        Some(v) => Err(bad("penalty", format!("expected null or \"l2\", got {v}"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub penalty: Penalty,
    pub c: f64,
}

impl LinearParams {
    pub fn parse(p: &Hyperparams) -> Result<Self> {
        let c = float(p, "C", 1.0)?;
        if c <= 0.0 {
            return Err(bad("C", "must be > 0"));
        }
        Ok(LinearParams { penalty: penalty(p, Penalty::L2)?, c })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptronParams {
    pub penalty: Penalty,
    pub alpha: f64,
    pub max_iter: usize,
}

impl PerceptronParams {
    pub fn parse(p: &Hyperparams) -> Result<Self> {
        let alpha = nonneg(p, "alpha", 1e-4)?;
        if alpha >= 1.0 {
            return Err(bad("alpha", "must be < 1"));
        }
        let max_iter = uint(p, "max_iter", Some(1000))?.unwrap_or(1000);
        if max_iter == 0 {
            return Err(bad("max_iter", "must be >= 1"));
        }
        Ok(PerceptronParams { penalty: penalty(p, Penalty::None)?, alpha, max_iter })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub ccp_alpha: f64,
}

impl TreeParams {
    pub fn parse(p: &Hyperparams) -> Result<Self> {
        let max_depth = uint(p, "max_depth", None)?;
        if max_depth == Some(0) {
            return Err(bad("max_depth", "must be >= 1"));
        }
        Ok(TreeParams { max_depth, ccp_alpha: nonneg(p, "ccp_alpha", 0.0)? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbdtParams {
    pub max_depth: usize,
    pub n_estimators: usize,
    pub reg_lambda: f64,
    /// 0 = unlimited.
    pub max_leaves: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    /// 0 = unconstrained.
    pub max_delta_step: f64,
    pub subsample: f64,
    pub reg_alpha: f64,
    pub early_stopping_rounds: Option<usize>,
}

impl GbdtParams {
    pub fn parse(p: &Hyperparams) -> Result<Self> {
        let max_depth = uint(p, "max_depth", Some(6))?.unwrap_or(6);
        let n_estimators = uint(p, "n_estimators", Some(100))?.unwrap_or(100);
        if max_depth == 0 {
            return Err(bad("max_depth", "must be >= 1"));
        }
        if n_estimators == 0 {
            return Err(bad("n_estimators", "must be >= 1"));
        }
        let learning_rate = float(p, "learning_rate", 0.3)?;
        if learning_rate <= 0.0 {
            return Err(bad("learning_rate", "must be > 0"));
        }
        let subsample = float(p, "subsample", 1.0)?;
        if !(subsample > 0.0 && subsample <= 1.0) {
            return Err(bad("subsample", "must lie in (0, 1]"));
        }
        let early_stopping_rounds = uint(p, "early_stopping_rounds", None)?;
        if early_stopping_rounds.is_some() {
            // No validation split exists inside a single fit.
            return Err(bad("early_stopping_rounds", "only null is supported"));
        }
        Ok(GbdtParams {
            max_depth,
            n_estimators,
            reg_lambda: nonneg(p, "reg_lambda", 1.0)?,
            max_leaves: uint(p, "max_leaves", Some(0))?.unwrap_or(0),
            learning_rate,
            gamma: nonneg(p, "gamma", 0.0)?,
            min_child_weight: nonneg(p, "min_child_weight", 0.0)?,
            max_delta_step: nonneg(p, "max_delta_step", 0.0)?,
            subsample,
            reg_alpha: nonneg(p, "reg_alpha", 0.0)?,
            early_stopping_rounds,
        })
    }
}

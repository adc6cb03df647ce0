use thiserror::Error;

pub type Result<T, E = AuditError> = std::result::Result<T, E>;

/// Broad classes of failure, used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Infeasible,
    Data,
}

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("column `{column}` is not binary: unexpected value `{value}`")]
    NonBinary { column: String, value: String },

    #[error("group {group} empty")]
    EmptyGroup { group: &'static str },

    #[error("measure undefined on subset: {0}")]
    MeasureUndefined(String),

    #[error("enumeration cap exceeded: {required} candidates required, cap is {cap}")]
    CapExceeded { required: u128, cap: u128 },

    #[error("cost recursion exceeded node budget {cap} (frontier size reached: {frontier})")]
    NodeBudgetExceeded { cap: usize, frontier: usize },

    #[error("platform model outside declared class")]
    OutsideClass,

    #[error("membership undecidable; use train-based search")]
    MembershipUndecidable,

    #[error("unknown hyperparameter `{key}` for family {family}")]
    UnknownHyperparameter { family: String, key: String },

    #[error("bad value for hyperparameter `{key}`: {reason}")]
    BadHyperparameter { key: String, reason: String },

    #[error("non-finite or all-zero training weights")]
    BadWeights,

    #[error("answers already recorded")]
    AlreadyRecorded,

    #[error("answers not recorded")]
    NotRecorded,

    #[error("diameter method {method} incompatible with class {class}")]
    IncompatibleMethod { method: String, class: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl AuditError {
    pub fn kind(&self) -> ErrorKind {
        use AuditError::*;
        match self {
            CapExceeded { .. } | NodeBudgetExceeded { .. } => ErrorKind::Infeasible,
            Data(_) | MissingColumn(_) | NonBinary { .. } | EmptyGroup { .. } | Io(_) | Csv(_) => {
                ErrorKind::Data
            }
            MeasureUndefined(_) | OutsideClass | BadWeights => ErrorKind::Data,
            _ => ErrorKind::Config,
        }
    }
}

use thiserror::Error;

use crate::model::Report;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("beam {beam} out of range for {n_beams} beams")]
    BeamOutOfRange { beam: usize, n_beams: usize },
    #[error("beam {0} listed twice in one pattern")]
    DuplicateBeam(usize),
    #[error("pattern has no beams")]
    EmptyPattern,
    #[error("pattern weight must be positive")]
    ZeroWeight,
    #[error("plan has no patterns")]
    EmptyPlan,
    #[error("no beam has positive demand")]
    NoPositiveDemand,
    #[error("invalid instance: {0}")]
    Invalid(Report),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field `{field}`: {message}")]
    Field {
        field: &'static str,
        message: String,
    },
}

impl From<serde_json::Error> for ModelError {
    fn from(err: serde_json::Error) -> Self {
        ModelError::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("invalid config field `{field}`: {reason}")]
    ConfigInvalid { field: String, reason: String },

    #[error("{theorem}: `{field}` is outside the admissible range ({reason})")]
    ParameterOutOfTheoremRange { theorem: String, field: String, reason: String },

    #[error(transparent)]
    Numeric(#[from] qbhardy::Error),

    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },
}

impl HarnessError {
    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        HarnessError::ConfigInvalid { field: field.into(), reason: reason.into() }
    }

    pub fn range(theorem: &str, field: &str, reason: impl Into<String>) -> Self {
        HarnessError::ParameterOutOfTheoremRange { theorem: theorem.into(), field: field.into(), reason: reason.into() }
    }

    /// Configuration problems, as opposed to numerical failures.
    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::ConfigInvalid { .. } | HarnessError::ParameterOutOfTheoremRange { .. })
    }
}

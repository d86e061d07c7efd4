use std::fmt;
use std::sync::Arc;

use super::Support;

/// `f(x) <= bound * x^-eta` for large `x`. A missing bound means only the exponent is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayHint {
    pub eta: f64,
    pub bound: Option<f64>,
}

/// A deterministic function of `x > 0` known only through evaluation.
#[derive(Clone)]
pub struct EvaluableFunc {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    decay: Option<DecayHint>,
    singularity: Option<f64>,
    support: Support,
}

impl EvaluableFunc {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { name: name.into(), f: Arc::new(f), decay: None, singularity: None, support: Support::HALF_LINE }
    }

    /// Declare `f(x) <= bound * x^-eta` for large `x`.
    pub fn with_decay(mut self, eta: f64, bound: f64) -> Self {
        self.decay = Some(DecayHint { eta, bound: Some(bound) });
        self
    }

    pub fn with_decay_opt(mut self, decay: Option<DecayHint>) -> Self {
        self.decay = decay;
        self
    }

    /// Declare `f(x) ~ x^s` as `x -> 0+`.
    pub fn with_singularity(mut self, s: f64) -> Self {
        self.singularity = Some(s);
        self
    }

    pub fn with_singularity_opt(mut self, s: Option<f64>) -> Self {
        self.singularity = s;
        self
    }

    /// Declare that `f` vanishes outside `support`.
    pub fn with_support(mut self, support: Support) -> Self {
        self.support = support;
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn decay_hint(&self) -> Option<DecayHint> {
        self.decay
    }

    pub fn singularity_hint(&self) -> Option<f64> {
        self.singularity
    }

    pub fn support(&self) -> Support {
        self.support
    }
}

impl fmt::Debug for EvaluableFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvaluableFunc")
            .field("name", &self.name)
            .field("decay", &self.decay)
            .field("singularity", &self.singularity)
            .field("support", &self.support)
            .finish()
    }
}

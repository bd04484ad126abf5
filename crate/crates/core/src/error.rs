use thiserror::Error;

/// Which kind of scenario rule a [`Violation`] breaks.
///
/// Field-level rules constrain a single value; cross-field rules (share
/// normalization, `loyalty + leave_rate <= 1`, positive post-market size)
/// relate several values that may each be valid on their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Field,
    CrossField,
}

/// A single failed validation rule, naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
    pub kind: ViolationKind,
}

impl Violation {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
            kind: ViolationKind::Field,
        }
    }

    pub fn cross_field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
            kind: ViolationKind::CrossField,
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(Violation),
    #[error("invalid improvement profile: {0}")]
    InvalidProfile(Violation),
    #[error("dimension mismatch: expected {expected} firms, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("firm index {index} out of range for {len} firms")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("delta must lie in the open interval (-1, 1), got {0}")]
    InvalidDelta(f64),
    #[error("degenerate market: no vacillating customers, friendliness is undefined")]
    DegenerateMarket,
    #[error("federated learning is not viable (kappa = {kappa})")]
    NotViable { kappa: f64 },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("strategy for firm {index} is {value}, outside [0, {max}]")]
    StrategyOutOfRange { index: usize, value: f64, max: f64 },
    #[error("firm {firm} has a negative model improvement ({improvement}); the loss curve violates monotonicity in committed data")]
    AssumptionViolated { firm: usize, improvement: f64 },
    #[error("invalid game spec: {0}")]
    InvalidGameSpec(String),
    #[error("strategy grid needs {evaluations} payoff evaluations, budget is {budget}")]
    GridTooLarge { evaluations: u128, budget: u128 },
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

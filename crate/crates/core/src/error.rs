use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A quantity was requested outside the parameter range where it is defined.
    #[error("{what} is undefined at {name} = {value} (valid range {range})")]
    Domain {
        what: &'static str,
        name: &'static str,
        value: f64,
        range: String,
    },

    #[error("root finder: {0}")]
    Root(#[from] crate::roots::RootError),

    #[error("iteration did not converge within {steps} steps (last value {last})")]
    NoConvergence {
        steps: usize,
        last: f64,
        trace: Vec<f64>,
    },

    /// An iteration settled somewhere other than the two limits the theory allows.
    #[error("iteration settled at {limit}, which is neither 0 nor v_+ = {v_plus:?}")]
    UnexpectedLimit { limit: f64, v_plus: Option<f64> },

    #[error("model: {0}")]
    Model(String),

    #[error("model file: {0}")]
    ModelParse(#[from] serde_json::Error),

    #[error("reduced current is not excitable: cannot locate {landmark}")]
    NotExcitable { landmark: &'static str },

    #[error("simulation: {0}")]
    Simulation(String),

    #[error("grid spec {spec:?}: {reason}")]
    Grid { spec: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(
        what: &'static str,
        name: &'static str,
        value: f64,
        range: impl Into<String>,
    ) -> Self {
        Error::Domain {
            what,
            name,
            value,
            range: range.into(),
        }
    }
}

use thiserror::Error;

/// Errors raised by the reconfiguration engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error("invalid scenario at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("dimension mismatch: expected {expected} {what}, got {actual}")]
    Dimension { what: &'static str, expected: usize, actual: usize },

    #[error("unknown line between buses {0} and {1}")]
    UnknownLine(usize, usize),

    #[error("invalid fault specification `{0}`")]
    FaultSyntax(String),

    #[error("converter `{0}` is disconnected from every DC bus")]
    DegeneratePlant(String),

    #[error("load {load} is energized but bus {bus} has no path to a converter")]
    DisconnectedLoad { load: usize, bus: usize },

    #[error("singular reduced admittance matrix in island with slack bus {0}")]
    SingularMatrix(usize),

    #[error("DC power flow did not converge within {0} iterations")]
    DcDivergence(usize),

    #[error("converter `{converter}` Newton iteration did not converge within {iterations} iterations")]
    NewtonDivergence { converter: String, iterations: usize },

    #[error("converter `{converter}` cannot deliver {demand:.1} W on its loss curve")]
    InfeasibleOutput { converter: String, demand: f64 },

    #[error("converter AC voltage must be positive, got {0}")]
    ZeroVoltage(f64),

    #[error("no feasible configuration found: {0}")]
    Infeasible(String),

    #[error("outer NR/BBO loop did not settle within {iterations} iterations: {diagnostic}")]
    OuterDivergence { iterations: usize, diagnostic: String },

    #[error("instance too large for exhaustive enumeration: {0} free binary variables (limit {1})")]
    TooLarge(usize, usize),

    #[error("invalid parameter `{name}`: {message}")]
    Parameter { name: &'static str, message: String },

    #[error("{0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { path: path.into(), message: message.into() }
    }

    pub(crate) fn parameter(name: &'static str, message: impl Into<String>) -> Self {
        Error::Parameter { name, message: message.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

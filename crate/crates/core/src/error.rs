use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed OpenQASM input.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A gate acting on three or more qubits reached the mapper.
    #[error("line {line}: gate `{gate}` acts on {arity} qubits; decompose first")]
    Decompose {
        line: usize,
        gate: String,
        arity: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("infeasible instance: {0}")]
    Infeasible(String),

    #[error("invalid move: {0}")]
    InvalidMove(String),

    #[error("unassigned qubit {0}")]
    Unassigned(usize),

    #[error("no link between QPU {0} and QPU {1}")]
    UnknownLink(usize, usize),

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// True for errors caused by the caller's input rather than by the instance size.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Decompose { .. }
                | Error::Unsupported(_)
                | Error::Range(_)
                | Error::Param(_)
                | Error::Topology(_)
                | Error::Json(_)
                | Error::Io(_)
                | Error::Unassigned(_)
        )
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible(_) | Error::TooLarge(_))
    }
}

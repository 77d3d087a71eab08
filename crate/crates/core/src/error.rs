use thiserror::Error;

/// Which half of the arrival sequence a window refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Arrivals `2..=tau`.
    Pre,
    /// Arrivals `tau+1..=n`.
    Post,
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Window::Pre => f.write_str("pre"),
            Window::Post => f.write_str("post"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("arrival {t} targets vertex {target}, which does not exist yet")]
    TargetTooLarge { t: usize, target: usize },
    #[error("arrival {t} has {found} targets, expected {expected}")]
    WrongOutDegree { t: usize, expected: usize, found: usize },
    #[error("no row for arrival {t}")]
    MissingRow { t: usize },
    #[error("malformed log: {0}")]
    Parse(String),
    #[error("edge {from} -> {to} does not point to an older vertex")]
    SupportViolation { from: usize, to: usize },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("score has no sign change on the {window} window")]
    NoInteriorRoot { window: Window },
    #[error("weight of arrival {t} is undefined")]
    UndefinedWeight { t: usize },
    #[error("precondition violated: {}", .0.join("; "))]
    PreconditionViolated(Vec<String>),
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::TargetTooLarge { .. } => "TargetTooLarge",
            Error::WrongOutDegree { .. } => "WrongOutDegree",
            Error::MissingRow { .. } => "MissingRow",
            Error::Parse(_) => "Parse",
            Error::SupportViolation { .. } => "SupportViolation",
            Error::DomainError(_) => "DomainError",
            Error::NoInteriorRoot { .. } => "NoInteriorRoot",
            Error::UndefinedWeight { .. } => "UndefinedWeight",
            Error::PreconditionViolated(_) => "PreconditionViolated",
            Error::UnsupportedRegime(_) => "UnsupportedRegime",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Every variant maps onto a stable short code (see [`Error::code`]) so the
/// CLI and the C ABI can report failures in a greppable form.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("empty universe: {0}")]
    EmptyUniverse(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("window error: {0}")]
    Window(String),

    #[error("degenerate universe: {0}")]
    DegenerateUniverse(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("degenerate portfolio: {0}")]
    DegeneratePortfolio(String),

    #[error("normalization singularity: 1'S^-1 std = {0:e}")]
    Singular(f64),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid model spec: {0}")]
    Spec(String),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("tuning failed: {0}")]
    Tuning(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "E_PARSE",
            Error::EmptyUniverse(_) => "E_EMPTY_UNIVERSE",
            Error::InsufficientData(_) => "E_INSUFFICIENT_DATA",
            Error::Window(_) => "E_WINDOW",
            Error::DegenerateUniverse(_) => "E_DEGENERATE_UNIVERSE",
            Error::Estimation(_) => "E_ESTIMATION",
            Error::DegeneratePortfolio(_) => "E_DEGENERATE_PORTFOLIO",
            Error::Singular(_) => "E_SINGULAR",
            Error::Argument(_) => "E_ARGUMENT",
            Error::Spec(_) => "E_SPEC",
            Error::Infeasible(_) => "E_INFEASIBLE",
            Error::Numeric(_) => "E_NUMERIC",
            Error::Tuning(_) => "E_TUNING",
            Error::Config(_) => "E_CONFIG",
            Error::Io(_) => "E_IO",
            Error::Csv(_) => "E_CSV",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

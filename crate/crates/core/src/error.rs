use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error(
        "series diverges: spectral radius of M_Σ estimated at {spectral_radius:.6} (need < 1)"
    )]
    Divergent { spectral_radius: f64 },

    #[error("linear system is numerically singular (relative residual {residual:e})")]
    Singular { residual: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("basis error: {0}")]
    Basis(String),

    #[error("enumeration of {requested} strings exceeds the cap of {cap}")]
    TooLarge { requested: u128, cap: usize },

    #[error("not in PFA normal form: {0}")]
    NotPfa(String),

    #[error("string generation failed: {0}")]
    Generation(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

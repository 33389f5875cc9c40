use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Dimensions do not line up.
    Shape { context: &'static str, expected: (usize, usize), found: (usize, usize) },
    NonFinite { context: &'static str },
    /// The iterative SVD did not converge.
    NumericalFailure { rows: usize, cols: usize },
    /// Projection onto the unitary group is undefined for rank-deficient input.
    Singular { min_singular_value: f64 },
    /// A parameter lies outside its admissible range.
    Domain { name: &'static str, value: f64 },
    OutOfRange { name: &'static str, value: usize, min: usize, max: usize },
    ResourceLimit { name: &'static str, cap: usize, requested: usize },
    Config(&'static str),
    Unsupported(&'static str),
    /// An input violated a documented contract (e.g. a non-unitary node).
    Contract { what: &'static str, defect: f64 },
    Divergence { iteration: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape { context, expected, found } => {
                write!(f, "shape mismatch in {context}: expected {expected:?}, found {found:?}")
            }
            Error::NonFinite { context } => write!(f, "non-finite values in {context}"),
            Error::NumericalFailure { rows, cols } => {
                write!(f, "SVD failed to converge for a {rows}x{cols} matrix")
            }
            Error::Singular { min_singular_value } => {
                write!(f, "matrix is rank deficient (smallest singular value {min_singular_value:e})")
            }
            Error::Domain { name, value } => write!(f, "{name} = {value} is outside its domain"),
            Error::OutOfRange { name, value, min, max } => {
                write!(f, "{name} = {value} is outside {min}..={max}")
            }
            Error::ResourceLimit { name, cap, requested } => {
                write!(f, "{name} = {requested} exceeds the cap of {cap}")
            }
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Unsupported(msg) => write!(f, "unsupported configuration: {msg}"),
            Error::Contract { what, defect } => write!(f, "{what} (defect {defect:e})"),
            Error::Divergence { iteration } => write!(f, "cost became non-finite at iteration {iteration}"),
        }
    }
}

impl core::error::Error for Error {}

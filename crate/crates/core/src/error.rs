use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use crate::model::RegimeReport;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    DimensionMismatch { expected: usize, found: usize },
    /// Carries max |A - A†| of the offending matrix.
    NotHermitian { deviation: f64 },
    NotNormalized { norm: f64 },
    NotOrthonormal { deviation: f64 },
    InvalidDensityMatrix {
        trace_error: f64,
        hermiticity_error: f64,
        min_eigenvalue: f64,
    },
    InvalidArgument(String),
    /// Step refinement gave up; `residual` is the last change between
    /// successive refinements.
    IntegrationDivergence { residual: f64, refinements: u32 },
    NoSteadyState(String),
    NonConvergentAverage { change: f64 },
    IllConditionedPath { index: usize, overlap: f64 },
    Domain(String),
    Regime(Box<RegimeReport>),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NotHermitian { deviation } => {
                write!(f, "matrix is not Hermitian (max |A - A^dag| = {deviation:e})")
            }
            Error::NotNormalized { norm } => write!(f, "state is not normalized (norm = {norm})"),
            Error::NotOrthonormal { deviation } => {
                write!(f, "basis is not orthonormal (deviation = {deviation:e})")
            }
            Error::InvalidDensityMatrix {
                trace_error,
                hermiticity_error,
                min_eigenvalue,
            } => write!(
                f,
                "invalid density matrix (|tr - 1| = {trace_error:e}, hermiticity = {hermiticity_error:e}, \
                 min eigenvalue = {min_eigenvalue:e})"
            ),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::IntegrationDivergence {
                residual,
                refinements,
            } => write!(
                f,
                "integration did not converge after {refinements} refinements (residual {residual:e})"
            ),
            Error::NoSteadyState(msg) => write!(f, "no steady state: {msg}"),
            Error::NonConvergentAverage { change } => {
                write!(f, "time average did not converge under grid doubling (change {change:e})")
            }
            Error::IllConditionedPath { index, overlap } => write!(
                f,
                "ill-conditioned path: overlap {overlap:e} between samples {index} and {}",
                index + 1
            ),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Regime(report) => write!(f, "regime constraint violated: {report}"),
        }
    }
}

impl core::error::Error for Error {}

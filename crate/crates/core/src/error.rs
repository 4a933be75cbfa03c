use thiserror::Error;

/// Coarse classification used by front ends to map failures onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Domain,
    Numeric,
    Capability,
}

/// Which end of an analyticity strip was crossed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StripBound {
    Lower,
    Upper,
}

impl std::fmt::Display for StripBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StripBound::Lower => f.write_str("lower"),
            StripBound::Upper => f.write_str("upper"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{block}: Im(xi) = {im} violates the {bound} strip bound {limit}")]
    StripViolation {
        block: String,
        im: f64,
        bound: StripBound,
        limit: f64,
    },

    #[error("calibration: {0}")]
    Calibration(String),

    #[error("model is not drift-adjusted: max EMM residual {residual:e} exceeds {tolerance:e}")]
    NotCalibrated { residual: f64, tolerance: f64 },

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("quadrature did not converge: estimated error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("numeric: {0}")]
    Numeric(String),

    #[error("unsupported: {0}")]
    Capability(String),
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::InvalidParameter(_)
            | Error::StripViolation { .. }
            | Error::Calibration(_)
            | Error::NotCalibrated { .. }
            | Error::Degenerate(_) => Category::Domain,
            Error::Quadrature { .. } | Error::GridTooSmall(_) | Error::Numeric(_) => {
                Category::Numeric
            }
            Error::Capability(_) => Category::Capability,
        }
    }

    /// Re-labels the block named in a strip violation, leaving other errors untouched.
    pub(crate) fn in_block(self, name: impl Into<String>) -> Self {
        match self {
            Error::StripViolation { im, bound, limit, .. } => Error::StripViolation {
                block: name.into(),
                im,
                bound,
                limit,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

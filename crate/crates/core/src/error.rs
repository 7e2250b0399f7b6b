use alloc::string::String;
use core::fmt;

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Broad classification of an [`Error`], used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or out-of-domain input.
    Input,
    /// Not enough data points for the requested kernel order.
    InsufficientData,
    /// Singular systems, failed root searches and other numerical breakdowns.
    Numerical,
}

/// Errors raised by the estimators.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A polynomial order above the supported maximum was requested.
    OrderTooLarge {
        /// Requested order.
        order: usize,
        /// Largest supported order.
        max: usize,
    },
    /// Input violates a documented precondition.
    InvalidInput(String),
    /// Two abscissae coincide.
    DuplicateAbscissa {
        /// Position of the second occurrence in sorted order.
        index: usize,
        /// The repeated value.
        value: f64,
    },
    /// Too few (distinct or positively weighted) points for the requested order.
    RankDeficient {
        /// Polynomial order that could not be supported.
        order: usize,
        /// Number of usable points.
        points: usize,
    },
    /// A triangular or normal-equation system has a vanishing pivot.
    Singular {
        /// Which quantity vanished.
        what: &'static str,
    },
    /// The `p`-th derivative is zero where a bias term needs it.
    DegenerateCurvature,
    /// A kernel has more sign changes than any non-negative weighting allows.
    TooManySignChanges {
        /// Sign changes found.
        found: usize,
        /// Largest admissible count (`p - 1`).
        allowed: usize,
    },
    /// Abscissae are not symmetric about the estimation point.
    Asymmetric,
    /// Division by a factor polynomial that nearly vanishes at a data point.
    IllConditioned {
        /// Index of the offending data point.
        index: usize,
    },
    /// No root of the target equation in the scanned interval.
    NoRoot {
        /// Lower end of the scanned interval.
        lo: f64,
        /// Upper end of the scanned interval.
        hi: f64,
    },
}

impl Error {
    /// Classification for front ends.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::OrderTooLarge { .. }
            | Error::InvalidInput(_)
            | Error::DuplicateAbscissa { .. }
            | Error::Asymmetric => ErrorKind::Input,
            Error::RankDeficient { .. } => ErrorKind::InsufficientData,
            Error::Singular { .. }
            | Error::DegenerateCurvature
            | Error::TooManySignChanges { .. }
            | Error::IllConditioned { .. }
            | Error::NoRoot { .. } => ErrorKind::Numerical,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::OrderTooLarge { order, max } => {
                write!(f, "polynomial order {order} exceeds the supported maximum {max}")
            }
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::DuplicateAbscissa { index, value } => {
                write!(f, "duplicate abscissa x = {value} at sorted position {index}")
            }
            Error::RankDeficient { order, points } => {
                write!(f, "rank deficient: order {order} needs more than the {points} usable points")
            }
            Error::Singular { what } => write!(f, "singular system: {what} vanishes"),
            Error::DegenerateCurvature => {
                write!(f, "p-th derivative is zero; supply a non-zero curvature")
            }
            Error::TooManySignChanges { found, allowed } => {
                write!(f, "kernel has {found} sign changes, at most {allowed} are representable")
            }
            Error::Asymmetric => write!(f, "points are not symmetric about the estimation point"),
            Error::IllConditioned { index } => {
                write!(f, "factor polynomial nearly vanishes at data point {index}")
            }
            Error::NoRoot { lo, hi } => write!(f, "no root found in [{lo}, {hi}]"),
        }
    }
}

impl core::error::Error for Error {}

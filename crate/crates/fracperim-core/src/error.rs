//! Error type shared by every module in the crate.

use alloc::string::String;
use core::fmt;

/// Errors reported by constructors and numerical routines.
///
/// The crate rejects invalid inputs eagerly (bad parameter ranges, shape
/// mismatches, non-orthogonal rotation matrices) and reports the few genuinely
/// numerical failure modes (an eigensolve or iterative solver that did not
/// converge) instead of returning garbage.
#[derive(Debug, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    /// A scalar parameter is outside its admissible range.
    ///
    /// Carries the parameter name, a human-readable description of the
    /// admissible range, and the offending value.
    InvalidParameter {
        /// Name of the offending parameter.
        name: &'static str,
        /// Admissible range, spelled out (e.g. `"(0, 1)"`).
        expected: &'static str,
        /// The value that was passed.
        value: f64,
    },
    /// Two objects that must live on the same grid (or have matching shapes)
    /// do not.
    ShapeMismatch {
        /// What was being combined or compared.
        context: &'static str,
    },
    /// A size or count is invalid (zero where positive is required, or too
    /// large for the requested operation).
    InvalidSize {
        /// Name of the offending size.
        name: &'static str,
        /// Admissible range, spelled out.
        expected: &'static str,
        /// The value that was passed.
        value: usize,
    },
    /// A matrix expected to be orthogonal (a rotation/reflection) is not,
    /// within the stated tolerance.
    NotOrthogonal {
        /// Largest deviation of `QᵀQ` from the identity.
        max_deviation: f64,
    },
    /// An iterative routine failed to converge within its iteration budget.
    NoConvergence {
        /// Which routine failed.
        routine: &'static str,
        /// Iterations performed before giving up.
        iterations: usize,
    },
    /// A request cannot be honoured for a stated reason that does not fit the
    /// other variants (e.g. an unsupported parameter regime).
    Unsupported {
        /// Human-readable explanation.
        reason: String,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter {
                name,
                expected,
                value,
            } => write!(f, "parameter `{name}` must be in {expected}, got {value}"),
            Error::ShapeMismatch { context } => {
                write!(f, "shape mismatch: {context}")
            }
            Error::InvalidSize {
                name,
                expected,
                value,
            } => write!(f, "size `{name}` must be {expected}, got {value}"),
            Error::NotOrthogonal { max_deviation } => write!(
                f,
                "matrix is not orthogonal: max |QᵀQ − I| entry = {max_deviation:.3e}"
            ),
            Error::NoConvergence {
                routine,
                iterations,
            } => write!(f, "`{routine}` did not converge after {iterations} iterations"),
            Error::Unsupported { reason } => write!(f, "unsupported request: {reason}"),
        }
    }
}

impl core::error::Error for Error {}

use thiserror::Error;

/// Errors produced by the numerical laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation. `field` names the offending entry.
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    /// The operation needs finite first moments of xi/eta but the spec is heavy-tailed.
    #[error("`{field}` is heavy-tailed; this operation requires a finite mean")]
    HeavyTailed { field: String },

    /// The operation needs the log (xi/eta) coordinates; raw-entry ensembles only support spectra.
    #[error("operation `{operation}` is not available for raw-entry ensembles")]
    RawModeUnsupported { operation: &'static str },

    /// An exponentially scaled quantity cannot be materialized as an `f64`.
    #[error("{quantity} overflows f64 (log-magnitude {log_value:.3})")]
    Overflow { quantity: &'static str, log_value: f64 },

    /// A coefficient sequence contains a NaN or infinity.
    #[error("non-finite coefficient {array}[{index}] = {value}")]
    NonFinite {
        array: &'static str,
        index: usize,
        value: f64,
    },

    /// The shift lies on the spectrum of the symmetric reference matrix.
    #[error("resolvent is singular at z = {re} + {im}i")]
    SingularResolvent { re: f64, im: f64 },

    /// Francis QR failed to converge within the iteration cap.
    #[error(
        "QR iteration did not converge after {iterations} steps: {found} of {n} eigenvalues deflated, \
         active block rows {block_start}..={block_end}"
    )]
    NoConvergence {
        n: usize,
        found: usize,
        iterations: usize,
        block_start: usize,
        block_end: usize,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {what}: {reason}")]
    Parse { what: String, reason: String },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

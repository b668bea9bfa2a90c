//! Experiment runner: configuration, artifacts and pipeline stages behind the `hnlab` binary.

pub mod artifact;
pub mod config;
pub mod stages;

use artifact::HashMismatch;
use stages::VerificationFailed;

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

/// Process exit code for an error: 2 bad input, 3 numerical failure, 4 failed verification.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<VerificationFailed>() {
            return EXIT_VERIFICATION;
        }
        if cause.is::<HashMismatch>() {
            return EXIT_VALIDATION;
        }
        if let Some(e) = cause.downcast_ref::<hnlab::Error>() {
            return match e {
                hnlab::Error::Validation { .. }
                | hnlab::Error::HeavyTailed { .. }
                | hnlab::Error::RawModeUnsupported { .. }
                | hnlab::Error::Io { .. }
                | hnlab::Error::Parse { .. } => EXIT_VALIDATION,
                hnlab::Error::Overflow { .. }
                | hnlab::Error::NonFinite { .. }
                | hnlab::Error::SingularResolvent { .. }
                | hnlab::Error::NoConvergence { .. } => EXIT_NUMERICAL,
            };
        }
    }
    1
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn exit_codes_see_through_context() {
        let numerical: anyhow::Result<()> = Err(hnlab::Error::NoConvergence {
            n: 4,
            found: 1,
            iterations: 120,
            block_start: 0,
            block_end: 3,
        })
        .context("spectrum failed for n=4");
        assert_eq!(exit_code(&numerical.unwrap_err()), EXIT_NUMERICAL);
        let bad = anyhow::Error::new(hnlab::Error::Parse {
            what: "config".into(),
            reason: "x".into(),
        });
        assert_eq!(exit_code(&bad), EXIT_VALIDATION);
        let failed = anyhow::Error::new(VerificationFailed { failed: 1, total: 5 });
        assert_eq!(exit_code(&failed), EXIT_VERIFICATION);
        assert_eq!(exit_code(&anyhow::anyhow!("other")), 1);
    }
}

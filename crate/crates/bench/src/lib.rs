//! Fixtures shared by the kernel benchmarks.

use hnlab::ensemble::presets;
use hnlab::{build, sample, OperatorBundle};
use num_complex::Complex64;

/// Operator bundle for the biased uniform ensemble at size `n`.
pub fn uniform_biased_bundle(n: usize, seed: u64) -> OperatorBundle {
    build(&sample(&presets::uniform_biased(seed), n).expect("valid preset")).expect("finite coefficients")
}

/// Probe points in the upper half-plane used by the resolvent and transfer benches.
pub fn probe_points() -> Vec<Complex64> {
    vec![
        Complex64::new(0.5, 0.3),
        Complex64::new(1.0, 1.0),
        Complex64::new(-0.5, 0.8),
    ]
}

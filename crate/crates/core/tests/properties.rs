mod common;

use std::sync::OnceLock;

use common::*;
use hnlab::curves::{trace_curve, Coupling, CurveModel, XGrid};
use hnlab::eig::{rank2_det, resolvent_corners, spectrum, symmetric_spectrum};
use hnlab::ensemble::{presets, sample_realization, EnsembleSpec};
use hnlab::operator::build;
use hnlab::stats::{
    estimate_ids, log_potential, lyapunov_single, lyapunov_thouless, lyapunov_transfer, mean_log_c, phi, stieltjes,
    IdsEstimate, IdsGrid,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn uniform_biased_ids() -> &'static IdsEstimate {
    static IDS: OnceLock<IdsEstimate> = OnceLock::new();
    IDS.get_or_init(|| estimate_ids(&presets::uniform_biased(3), 20_000, 2, &IdsGrid::default()).unwrap())
}

fn uniform_biased_model() -> &'static CurveModel {
    static MODEL: OnceLock<CurveModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let spec = presets::uniform_biased(3);
        trace_curve(uniform_biased_ids(), &Coupling::from_spec(&spec).unwrap(), &XGrid::Auto(300))
    })
}

fn ensemble(kind: u8, seed: u64) -> EnsembleSpec {
    match kind % 4 {
        0 => presets::uniform_symmetric(seed),
        1 => presets::uniform_biased(seed),
        2 => presets::anderson(2.5, 0.35, seed),
        _ => presets::binary_alloy(1.5, -0.2, seed),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rank2_identity_matches_dense_determinant(
        kind in 0u8..4, seed in 0u64..1000, n in 3usize..40,
        x in -3.0f64..3.0, y in 0.05f64..2.0, flip in any::<bool>(),
    ) {
        let seq = sample_realization(&ensemble(kind, seed), n, 0).unwrap();
        let b = build(&seq).unwrap();
        let z = c(x, if flip { -y } else { y });
        let lhs = lu_log_abs_det(shifted(&j_rows(&seq.xi, &seq.eta, &seq.q, n, false), z));
        let rhs = rank2_det(&b, z).unwrap().log_mod + resolvent_corners(&b, z).unwrap().det.log_mod;
        prop_assert!((lhs - rhs).abs() < 1e-8, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn spectrum_matches_characteristic_roots(kind in 0u8..6, seed in 0u64..1000, n in 2usize..7) {
        let spec = match kind {
            4 => presets::raw_symmetric(seed),
            5 => presets::raw_biased(seed),
            k => ensemble(k, seed),
        };
        let seq = sample_realization(&spec, n, 0).unwrap();
        let roots = durand_kerner(&charpoly_cofactor(&j_rows(&seq.xi, &seq.eta, &seq.q, n, seq.is_raw())));
        let s = spectrum(&build(&seq).unwrap()).unwrap();
        prop_assert!(match_distance(&s.eigenvalues, &roots) < 1e-7);
    }

    #[test]
    fn spectrum_is_conjugation_closed_with_exact_trace(kind in 0u8..4, seed in 0u64..1000, n in 2usize..120) {
        let seq = sample_realization(&ensemble(kind, seed), n, 0).unwrap();
        let s = spectrum(&build(&seq).unwrap()).unwrap();
        let conj: Vec<Complex64> = s.eigenvalues.iter().map(|z| z.conj()).collect();
        prop_assert!(match_distance(&s.eigenvalues, &conj) < 1e-8);
        let trace: f64 = seq.q[1..=n].iter().sum();
        let sum: Complex64 = s.eigenvalues.iter().sum();
        prop_assert!((sum - trace).norm() < 1e-9 * (1.0 + n as f64));
    }

    #[test]
    fn circulant_formula(xi in -1.0f64..1.0, eta in -1.0f64..1.0, q in -2.0f64..2.0, n in 3usize..40) {
        let seq = sample_realization(&EnsembleSpec::constant(xi, eta, q), n, 0).unwrap();
        let s = spectrum(&build(&seq).unwrap()).unwrap();
        prop_assert!(match_distance(&s.eigenvalues, &circulant_spectrum(n, xi, eta, q)) < 1e-9);
    }

    #[test]
    fn stieltjes_is_herglotz_and_conjugation_symmetric(x in -4.0f64..4.0, y in 0.01f64..3.0) {
        let ids = uniform_biased_ids();
        let z = c(x, y);
        let m = stieltjes(ids, z).unwrap();
        prop_assert!(m.im > 0.0);
        let mc = stieltjes(ids, z.conj()).unwrap();
        prop_assert!((mc - m.conj()).norm() < 1e-12 * (1.0 + m.norm()));
    }

    #[test]
    fn lyapunov_is_nonnegative_and_grows_off_axis(x in -3.0f64..4.0, y in 0.0f64..2.0) {
        let ids = uniform_biased_ids();
        let mlc = mean_log_c(&presets::uniform_biased(3)).unwrap();
        let g0 = lyapunov_thouless(ids, mlc, c(x, y));
        prop_assert!(g0 >= -1e-3, "gamma {} at {}+{}i", g0, x, y);
        let g1 = lyapunov_thouless(ids, mlc, c(x, y + 0.05));
        prop_assert!(g1 > g0);
    }

    #[test]
    fn transfer_estimate_respects_determinant_bound(seed in 0u64..500, x in -2.0f64..3.0, y in -1.0f64..1.0, n in 50usize..2000) {
        let spec = presets::uniform_biased(seed);
        let z = c(x, y);
        let seq = sample_realization(&spec, n, 0).unwrap();
        let c0 = (0.5 * (seq.xi[0] + seq.eta[0])).exp();
        let cn = (0.5 * (seq.xi[n] + seq.eta[n])).exp();
        let gamma = lyapunov_single(&spec, n, 0, z).unwrap();
        prop_assert!(gamma >= (c0 / cn).ln() / (2.0 * n as f64) - 1e-12);
        let conj = lyapunov_single(&spec, n, 0, z.conj()).unwrap();
        prop_assert!((gamma - conj).abs() < 1e-12);
    }
}

#[test]
fn far_field_stieltjes_is_minus_one_over_z() {
    let ids = uniform_biased_ids();
    let z = Complex64::from_polar(1e4 * ids.support_radius(), 0.7);
    let m = stieltjes(ids, z).unwrap();
    let expect = -1.0 / z;
    assert!((m - expect).norm() / expect.norm() < 1e-3);
}

#[test]
fn potential_of_reference_spectrum_converges() {
    let spec = presets::anderson(1.5, 0.3, 9);
    let ids = estimate_ids(&spec, 50_000, 2, &IdsGrid::default()).unwrap();
    let bundle = build(&sample_realization(&spec, 4000, 5).unwrap()).unwrap();
    let eig = symmetric_spectrum(&bundle).unwrap();
    let mut worst = 0.0f64;
    for i in 0..9 {
        for &y in &[0.2, 0.5, 1.2] {
            let z = c(-2.5 + 0.6 * i as f64, y);
            worst = worst.max((log_potential(&eig, z) - phi(&ids, z)).abs());
        }
    }
    assert!(worst < 0.02, "max |p - Phi| = {worst}");
}

#[test]
fn transfer_envelope_and_uniform_convergence_off_axis() {
    let spec = presets::uniform_biased(13);
    let ids = estimate_ids(&spec, 100_000, 4, &IdsGrid::default()).unwrap();
    let mlc = mean_log_c(&spec).unwrap();
    let grid: Vec<Complex64> = (0..4)
        .flat_map(|i| [0.3, 0.8].into_iter().map(move |y| c(-1.0 + i as f64, y)))
        .collect();
    let mut errors = Vec::new();
    for &n in &[1_000usize, 10_000, 100_000] {
        let mut worst = 0.0f64;
        let mut envelope = f64::NEG_INFINITY;
        for &z in &grid {
            let t = lyapunov_transfer(&spec, n, 8, z).unwrap().gamma_hat;
            let g = lyapunov_thouless(&ids, mlc, z);
            worst = worst.max((t - g).abs());
            envelope = envelope.max(t - g);
        }
        if n == 100_000 {
            assert!(envelope <= 0.05, "envelope {envelope}");
        }
        errors.push(worst);
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "errors {errors:?}");
}

#[test]
fn sigma_avoids_contour_interiors() {
    let m = uniform_biased_model();
    for &(a, b) in &m.sigma {
        for k in 0..=50 {
            let x = a + (b - a) * k as f64 / 50.0;
            assert!(!m.inside_contour(c(x, 0.0)), "{x} in sigma and inside a contour");
            assert!(m.gamma(c(x, 0.0)) > m.g.abs() - 1e-8);
        }
    }
    assert!(m.max_level_error() < 1e-6);
    assert!((m.total_mass() - 1.0).abs() < 0.02);
}

#[test]
fn curve_density_is_finite_towards_endpoints() {
    // smooth density of states: unit hopping, weak uniform disorder
    let spec = presets::anderson(0.5, 0.5, 4);
    let ids = estimate_ids(&spec, 50_000, 2, &IdsGrid::default()).unwrap();
    let m = trace_curve(&ids, &Coupling::from_spec(&spec).unwrap(), &XGrid::Auto(400));
    assert!(!m.arcs.is_empty());
    for arc in &m.arcs {
        let first = &arc.points[..4];
        let peak = arc.points.iter().map(|p| p.rho).fold(0.0, f64::max);
        for p in first {
            assert!(p.rho.is_finite() && p.rho <= 2.0 * peak);
        }
        assert!((first[0].rho - first[1].rho).abs() < 0.2 * peak);
    }
}

/// `E log U` for `U ~ Uni[a, b]`.
fn mean_log_uniform(a: f64, b: f64) -> f64 {
    let f = |u: f64| if u == 0.0 { 0.0 } else { u * u.ln() - u };
    (f(b) - f(a)) / (b - a)
}

#[test]
fn uniform_biased_coupling_matches_log_integrals() {
    let g_exact = 0.5 * (mean_log_uniform(0.5, 1.5) - mean_log_uniform(0.0, 1.0));
    assert!((g_exact - 0.4774).abs() < 1e-4, "{g_exact}");
    let spec = presets::uniform_biased(21);
    let g = hnlab::coupling_g(&spec).unwrap();
    assert!((g - g_exact).abs() < 1e-12);
    let n = 200_000;
    let seq = sample_realization(&spec, n, 0).unwrap();
    let mc = (0..=n).map(|k| seq.eta[k] - seq.xi[k]).sum::<f64>() / (2.0 * (n + 1) as f64);
    assert!((mc - g_exact).abs() < 0.01, "monte carlo {mc} vs {g_exact}");
}

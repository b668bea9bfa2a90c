use hnlab::curves::{trace_curve, Coupling, CurveModel, XGrid};
use hnlab::eig::{spectrum, spectrum_from_csv};
use hnlab::ensemble::{presets, sample, sample_realization, EnsembleSpec};
use hnlab::operator::build;
use hnlab::stats::{estimate_ids, IdsEstimate, IdsGrid};

#[test]
fn spec_survives_toml() {
    for spec in [presets::uniform_symmetric(1), presets::uniform_biased(2), presets::raw_biased(3), presets::binary_alloy(2.0, 0.3, 4)] {
        let back = EnsembleSpec::from_toml_str(&spec.to_toml_string()).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.hash(), spec.hash());
    }
}

#[test]
fn sampling_is_reproducible_and_prefix_stable() {
    let spec = presets::uniform_biased(77);
    let a = sample_realization(&spec, 300, 2).unwrap();
    let b = sample_realization(&spec, 300, 2).unwrap();
    assert_eq!(a.xi, b.xi);
    let short = sample_realization(&spec, 100, 2).unwrap();
    assert_eq!(&a.q[..101], &short.q[..]);
    assert_ne!(sample_realization(&spec, 300, 3).unwrap().q, a.q);
}

#[test]
fn spectrum_csv_round_trip() {
    let s = spectrum(&build(&sample(&presets::uniform_biased(5), 40).unwrap()).unwrap()).unwrap();
    let text = s.to_csv(&[("config_hash", "abc".into())]);
    let back = spectrum_from_csv(&text).unwrap();
    assert_eq!(back.eigenvalues, s.eigenvalues);
    assert_eq!(back.n, s.n);
    assert_eq!(back.method, s.method);
}

#[test]
fn ids_cache_and_model_are_byte_stable() {
    let dir = std::env::temp_dir().join(format!("hnlab-persist-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let spec = presets::uniform_biased(9);
    let ids = estimate_ids(&spec, 2_000, 2, &IdsGrid::Auto { points: 300 }).unwrap();
    let path = dir.join("ids.json");
    ids.save_cache(&path).unwrap();
    let cached = IdsEstimate::load_cache(&path, Some(&spec.hash())).unwrap();
    assert_eq!(cached, ids);
    assert!(IdsEstimate::load_cache(&path, Some("not-the-hash")).is_err());

    let coupling = Coupling::from_spec(&spec).unwrap();
    let fresh = trace_curve(&ids, &coupling, &XGrid::Auto(120)).to_json();
    let reused = trace_curve(&cached, &coupling, &XGrid::Auto(120)).to_json();
    assert_eq!(fresh, reused);
    let model = CurveModel::from_json(&fresh).unwrap();
    assert_eq!(model.to_json(), fresh);
    std::fs::remove_dir_all(&dir).ok();
}

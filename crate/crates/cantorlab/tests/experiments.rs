//! Batch runs over the presets: config round trips, determinism, regime
//! resolution and the degenerate cases.

use cantorlab::config::{ExperimentConfig, NSpec, RegimeChoice};
use cantorlab::experiment::{run_experiment, write_csv, CSV_COLUMNS};
use cantorlab::{preset, LabError, PRESETS};
use cantorlab_core::window::Regime;
use cantorlab_core::Error as CoreError;

fn small(name: &str) -> ExperimentConfig {
    let mut cfg = preset(name).unwrap();
    let q = match name {
        "regimeC-ternary" => 3,
        "qadic-delange" => 5,
        _ => 2,
    };
    cfg.n = NSpec::ladder(q, 2, 6, 2);
    cfg
}

#[test]
fn every_preset_round_trips_through_json() {
    for (name, _) in PRESETS {
        let cfg = preset(name).unwrap();
        let text = cfg.to_json();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg, "{name}");
        assert_eq!(back.to_json(), text, "{name}");
    }
}

#[test]
fn floats_survive_the_round_trip_bit_for_bit() {
    let mut cfg = preset("example-II").unwrap();
    cfg.grid.pitch = 0.1 + 0.2;
    cfg.rho_inf = Some(std::f64::consts::PI / 7.0);
    let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
    assert_eq!(back.grid.pitch.to_bits(), cfg.grid.pitch.to_bits());
    assert_eq!(
        back.rho_inf.unwrap().to_bits(),
        cfg.rho_inf.unwrap().to_bits()
    );
}

#[test]
fn unknown_preset_and_fields_are_rejected() {
    assert!(matches!(preset("nope"), Err(LabError::UnknownPreset(_))));
    let mut v: serde_json::Value =
        serde_json::from_str(&preset("vdc-q2").unwrap().to_json()).unwrap();
    v["grid"]["pich"] = 1.0.into();
    let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
    assert!(err.to_string().contains("grid"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn csv_output_is_deterministic() {
    let cfg = small("regimeC-ternary");
    let render = || {
        let mut out = Vec::new();
        write_csv(&run_experiment(&cfg).unwrap().rows, &mut out).unwrap();
        out
    };
    let a = render();
    assert_eq!(a, render());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
    assert_eq!(text.lines().count(), 1 + 3);
}

#[test]
fn automatic_regimes_follow_the_presets() {
    let expect = [
        ("vdc-q2", Regime::B),
        ("vdc-cantor-factorial", Regime::B),
        ("regimeB-binary", Regime::B),
        ("regimeC-ternary", Regime::C),
        ("regimeA-skewed", Regime::A),
        ("example-I", Regime::A),
        ("example-II", Regime::A),
        ("qadic-delange", Regime::C),
    ];
    for (name, regime) in expect {
        let res = run_experiment(&small(name)).unwrap();
        assert_eq!(res.regime, regime, "{name}");
        assert!(res.rows.iter().all(|r| r.report.regime == regime), "{name}");
    }
}

#[test]
fn qadic_windows_are_powers_of_the_radix() {
    let res = run_experiment(&small("qadic-delange")).unwrap();
    for r in &res.rows {
        assert_eq!(
            r.report.a_lh,
            num_bigint::BigUint::from(5u32).pow(r.report.h as u32)
        );
    }
    let trace = res.cf_trace.unwrap();
    assert_eq!(trace[0].t, 0.0);
    assert_eq!((trace[0].re, trace[0].im), (1.0, 0.0));
    assert!(trace.iter().all(|p| p.re.hypot(p.im) <= 1.0 + 1e-12));
}

#[test]
fn zero_map_has_nothing_but_the_bridge() {
    let res = run_experiment(&preset("zero-map").unwrap()).unwrap();
    for r in &res.rows {
        assert_eq!((r.dk.lo, r.dk.hi, r.w1.value), (0.0, 0.0, 0.0));
        assert_eq!(r.report.tau2, 0.0);
        assert_eq!(r.report.total, r.report.bridge);
    }
}

#[test]
fn radical_inverse_distances_equal_star_discrepancy() {
    for name in ["vdc-q2", "vdc-cantor-factorial"] {
        for r in run_experiment(&preset(name).unwrap()).unwrap().rows {
            let d = r.dstar.unwrap();
            assert_eq!((r.dk.lo, r.dk.hi), (d, d), "{name} N = {}", r.report.n);
        }
    }
}

#[test]
fn predicted_rate_decays_like_the_cube_root() {
    let res = run_experiment(&small("example-II")).unwrap();
    let rates: Vec<(f64, f64)> = res
        .rows
        .iter()
        .map(|r| ((r.report.n as f64).ln(), r.predicted_rate.unwrap().ln()))
        .collect();
    for w in rates.windows(2) {
        let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
        assert!((slope + 1.0 / 3.0).abs() < 1e-9, "{slope}");
    }
}

#[test]
fn pinned_regime_b_needs_a_density_bound() {
    let mut cfg = small("regimeC-ternary");
    cfg.regime = RegimeChoice::B;
    assert_eq!(run_experiment(&cfg).unwrap_err().exit_code(), 2);
}

#[test]
fn enumeration_cap_is_enforced() {
    let mut cfg = small("vdc-q2");
    cfg.enumeration_cap = 10;
    match run_experiment(&cfg).unwrap_err() {
        LabError::Core(CoreError::ResourceLimit { requested, cap }) => {
            assert_eq!((requested, cap), (16, 10))
        }
        e => panic!("{e}"),
    }
}

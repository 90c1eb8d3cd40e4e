//! Named, fully specified experiment configs for the standard constructions.

use cantorlab_core::limitlaw::{DepthPolicy, GridOptions};
use cantorlab_core::window::{BoundShape, RateFamily};
use cantorlab_core::{BaseRule, DigitMap, DigitTable};

use crate::config::{
    CfTrace, ExperimentConfig, NSpec, Outputs, ReferenceSpec, RegimeChoice, DEFAULT_CAP,
};
use crate::error::{LabError, LabResult};

/// `(name, description)` of every preset.
pub const PRESETS: &[(&str, &str)] = &[
    (
        "vdc-q2",
        "binary van der Corput, uniform reference, N = 2^4..2^16",
    ),
    (
        "vdc-cantor-factorial",
        "radical inverse in the factorial base, uniform reference",
    ),
    (
        "regimeB-binary",
        "f = sum 2^{-j-1} d_j with density bound 1 (regime B)",
    ),
    (
        "regimeC-ternary",
        "base 3, sigma = (-1, 0, 1) scaled by 3^{-j} (regime C by auto)",
    ),
    (
        "regimeA-skewed",
        "base 4, f(q_j) = j^{-2}, f(d q_j) = 2 j^{-2} for d >= 2 (regime A by auto)",
    ),
    ("example-I", "polynomial weights j^{-1.5}, base 2, regime A"),
    (
        "example-II",
        "geometric weights 2^{-j}, base 2, regime A, N = 2^8..2^20",
    ),
    (
        "qadic-delange",
        "base 5, geometric weights 2^{-j}, with a characteristic-function trace",
    ),
    (
        "zero-map",
        "f = 0: every distance vanishes and the bound is the bridge",
    ),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.0)
}

fn config(base: BaseRule, map: DigitMap, n: NSpec) -> ExperimentConfig {
    ExperimentConfig {
        base,
        map,
        n,
        regime: RegimeChoice::Auto,
        rho_inf: None,
        shape: BoundShape::Corollary,
        reference: ReferenceSpec::Grid,
        grid: GridOptions::default(),
        enumeration_cap: DEFAULT_CAP,
        seed: 0,
        rate: None,
        cf_trace: None,
        outputs: Outputs::default(),
    }
}

fn unit_uniform() -> ReferenceSpec {
    ReferenceSpec::Uniform { a: 0.0, b: 1.0 }
}

pub fn preset(name: &str) -> LabResult<ExperimentConfig> {
    let two = BaseRule::Constant { q: 2 };
    let cfg = match name {
        "vdc-q2" => ExperimentConfig {
            reference: unit_uniform(),
            rho_inf: Some(1.0),
            ..config(two, DigitMap::RadicalInverse, NSpec::ladder(2, 4, 16, 1))
        },
        "vdc-cantor-factorial" => ExperimentConfig {
            reference: unit_uniform(),
            rho_inf: Some(1.0),
            ..config(
                BaseRule::Affine { c: 1, d: 2 },
                DigitMap::RadicalInverse,
                NSpec::ladder(2, 4, 16, 1),
            )
        },
        "regimeB-binary" => ExperimentConfig {
            reference: unit_uniform(),
            rho_inf: Some(1.0),
            ..config(
                two,
                DigitMap::Geometric {
                    beta: 0.5,
                    g: DigitTable::Values(vec![0.0, 0.5]),
                },
                NSpec::ladder(2, 8, 20, 2),
            )
        },
        "regimeC-ternary" => config(
            BaseRule::Constant { q: 3 },
            DigitMap::SymmetricTernary,
            NSpec::ladder(2, 8, 20, 2),
        ),
        "regimeA-skewed" => ExperimentConfig {
            grid: GridOptions {
                depth: DepthPolicy::Fixed { depth: 256 },
                ..GridOptions::default()
            },
            ..config(
                BaseRule::Constant { q: 4 },
                DigitMap::SkewedPolyweight,
                NSpec::ladder(2, 8, 20, 2),
            )
        },
        "example-I" => ExperimentConfig {
            regime: RegimeChoice::A,
            rate: Some(RateFamily::PolynomialTails { alpha: 1.5, q: 2 }),
            grid: GridOptions {
                depth: DepthPolicy::Fixed { depth: 1024 },
                ..GridOptions::default()
            },
            ..config(
                two,
                DigitMap::Polynomial {
                    alpha: 1.5,
                    g: DigitTable::Identity,
                },
                NSpec::ladder(2, 8, 20, 2),
            )
        },
        "example-II" => ExperimentConfig {
            regime: RegimeChoice::A,
            rate: Some(RateFamily::GeometricTails { beta: 0.5, q: 2 }),
            grid: GridOptions {
                pitch: 1.0 / (1u64 << 20) as f64,
                ..GridOptions::default()
            },
            ..config(
                two,
                DigitMap::Geometric {
                    beta: 0.5,
                    g: DigitTable::Identity,
                },
                NSpec::ladder(2, 8, 20, 1),
            )
        },
        "qadic-delange" => ExperimentConfig {
            cf_trace: Some(CfTrace {
                depth: 40,
                t: (0..=16).map(|k| k as f64 * 0.5).collect(),
            }),
            ..config(
                BaseRule::Constant { q: 5 },
                DigitMap::Geometric {
                    beta: 0.5,
                    g: DigitTable::Identity,
                },
                NSpec::ladder(5, 2, 8, 1),
            )
        },
        "zero-map" => config(two, DigitMap::Zero, NSpec::ladder(2, 2, 12, 2)),
        _ => return Err(LabError::UnknownPreset(name.to_string())),
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_preset_builds_and_validates() {
        for name in preset_names() {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(matches!(preset("nope"), Err(LabError::UnknownPreset(_))));
    }
}

//! JSON experiment configs.
//!
//! Parsing goes through `serde_path_to_error`, so a malformed field is
//! reported with its full path (`grid.depth.max_depth`, `n.list[3]`, ...).
//! Semantic checks in [`ExperimentConfig::validate`] use the same paths.

use std::path::PathBuf;

use cantorlab_core::limitlaw::GridOptions;
use cantorlab_core::window::{BoundShape, RateFamily, Regime};
use cantorlab_core::{BaseRule, CantorBase, DigitMap};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

pub const DEFAULT_CAP: u64 = cantorlab_core::empirical::DEFAULT_ENUMERATION_CAP;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub base: BaseRule,
    pub map: DigitMap,
    pub n: NSpec,
    #[serde(default)]
    pub regime: RegimeChoice,
    #[serde(default)]
    pub rho_inf: Option<f64>,
    #[serde(default)]
    pub shape: BoundShape,
    #[serde(default)]
    pub reference: ReferenceSpec,
    #[serde(default)]
    pub grid: GridOptions,
    #[serde(default = "default_cap")]
    pub enumeration_cap: u64,
    #[serde(default)]
    pub seed: u64,
    /// Closed-form rate to report next to the measured distances.
    #[serde(default)]
    pub rate: Option<RateFamily>,
    /// Characteristic-function product values to emit with the results.
    #[serde(default)]
    pub cf_trace: Option<CfTrace>,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_cap() -> u64 {
    DEFAULT_CAP
}

/// Sample sizes: an explicit list or `base^e` for `e = exp_from, exp_from +
/// exp_step, ..., <= exp_to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum NSpec {
    List(Vec<u64>),
    Ladder(Ladder),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub base: u64,
    pub exp_from: u32,
    pub exp_to: u32,
    #[serde(default = "one")]
    pub exp_step: u32,
}

fn one() -> u32 {
    1
}

impl NSpec {
    pub fn ladder(base: u64, exp_from: u32, exp_to: u32, exp_step: u32) -> Self {
        NSpec::Ladder(Ladder {
            base,
            exp_from,
            exp_to,
            exp_step,
        })
    }

    pub fn values(&self) -> LabResult<Vec<u64>> {
        match self {
            NSpec::List(v) => {
                if v.is_empty() {
                    return Err(LabError::config("n.list", "empty list"));
                }
                if let Some(i) = v.iter().position(|&n| n == 0) {
                    return Err(LabError::config(
                        format!("n.list[{i}]"),
                        "N must be positive",
                    ));
                }
                Ok(v.clone())
            }
            NSpec::Ladder(l) => {
                if l.base < 2 {
                    return Err(LabError::config(
                        "n.ladder.base",
                        "ladder base must be >= 2",
                    ));
                }
                if l.exp_step == 0 {
                    return Err(LabError::config(
                        "n.ladder.exp_step",
                        "step must be positive",
                    ));
                }
                if l.exp_from > l.exp_to {
                    return Err(LabError::config(
                        "n.ladder.exp_from",
                        "exp_from exceeds exp_to",
                    ));
                }
                (l.exp_from..=l.exp_to)
                    .step_by(l.exp_step as usize)
                    .map(|e| {
                        l.base.checked_pow(e).ok_or_else(|| {
                            LabError::config(
                                "n.ladder.exp_to",
                                format!("{}^{e} overflows u64", l.base),
                            )
                        })
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RegimeChoice {
    #[default]
    #[serde(rename = "auto")]
    Auto,
    A,
    B,
    C,
}

impl RegimeChoice {
    /// `None` for auto.
    pub fn fixed(self) -> Option<Regime> {
        match self {
            RegimeChoice::Auto => None,
            RegimeChoice::A => Some(Regime::A),
            RegimeChoice::B => Some(Regime::B),
            RegimeChoice::C => Some(Regime::C),
        }
    }
}

/// The law the empirical CDFs are compared with.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReferenceSpec {
    /// Grid convolution of the digit laws, built from `grid`.
    #[default]
    Grid,
    /// A known uniform limit law on `[a, b]`.
    Uniform { a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfTrace {
    pub depth: usize,
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> LabResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            LabError::config(path, e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The base, after checking everything that can be checked without
    /// running the experiment.
    pub fn validate(&self) -> LabResult<CantorBase> {
        let base = CantorBase::new(self.base.clone()).map_err(|e| LabError::config("base", e))?;
        self.map
            .check(&base)
            .map_err(|e| LabError::config("map", e))?;
        self.n.values()?;
        if self.enumeration_cap == 0 {
            return Err(LabError::config("enumeration_cap", "must be positive"));
        }
        if let Some(rho) = self.rho_inf {
            if !(rho.is_finite() && rho > 0.0) {
                return Err(LabError::config(
                    "rho_inf",
                    format!("must be finite and positive, got {rho}"),
                ));
            }
        }
        if self.regime == RegimeChoice::B && self.rho_inf.is_none() {
            return Err(LabError::config(
                "rho_inf",
                "regime B needs a density bound",
            ));
        }
        let g = &self.grid;
        if !(g.pitch.is_finite() && g.pitch > 0.0) {
            return Err(LabError::config(
                "grid.pitch",
                format!("must be finite and positive, got {}", g.pitch),
            ));
        }
        if let Some((lo, hi)) = g.range {
            if !(lo <= 0.0 && 0.0 <= hi && lo < hi) {
                return Err(LabError::config(
                    "grid.range",
                    format!("[{lo}, {hi}] must contain 0"),
                ));
            }
        }
        if !(0.0..1.0).contains(&g.eps_p_ceiling) {
            return Err(LabError::config("grid.eps_p_ceiling", "must lie in [0, 1)"));
        }
        if let ReferenceSpec::Uniform { a, b } = self.reference {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(LabError::config(
                    "reference.uniform",
                    format!("need a < b, got [{a}, {b}]"),
                ));
            }
        }
        if let Some(RateFamily::PolynomialTails { q, .. } | RateFamily::GeometricTails { q, .. }) =
            self.rate
        {
            if q < 2 {
                return Err(LabError::config("rate.q", "q must be >= 2"));
            }
        }
        if let Some(tr) = &self.cf_trace {
            if let Some(i) = tr.t.iter().position(|t| !t.is_finite()) {
                return Err(LabError::config(format!("cf_trace.t[{i}]"), "not finite"));
            }
        }
        Ok(base)
    }
}

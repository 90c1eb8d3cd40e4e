//! Digit-value maps `f(d q_j)`, Q-additive evaluation, per-level statistics,
//! analytic tail sums and the Erdős–Wintner convergence diagnosis.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, Sign};
use num_traits::Zero;

use crate::mixed_radix::CantorBase;
use crate::{Error, Result};

/// Largest per-level alphabet we are willing to enumerate.
pub const LEVEL_CAP: u128 = 1 << 24;

/// Digit table `g(d)` used by the linear-weight families.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum DigitTable {
    /// `g(d) = d`.
    #[default]
    Identity,
    /// `g(d) = values[d]`; must cover every digit of every level.
    Values(Vec<f64>),
}

impl DigitTable {
    fn get(&self, d: u64) -> Option<f64> {
        match self {
            DigitTable::Identity => Some(d as f64),
            DigitTable::Values(v) => v.get(d as usize).copied(),
        }
    }

    /// `(sup_a |mean_a g|, sup_a var_a g, sup_a max_{d<a} |g(d)|)` over the
    /// given alphabet sizes.
    fn moments_over(&self, radices: &[u64]) -> (f64, f64, f64) {
        let mut out = (0.0f64, 0.0f64, 0.0f64);
        for &a in radices {
            let (m, v, g) = match self {
                DigitTable::Identity => {
                    let af = a as f64;
                    ((af - 1.0) / 2.0, (af * af - 1.0) / 12.0, af - 1.0)
                }
                DigitTable::Values(t) => {
                    let vals = &t[..(a as usize).min(t.len())];
                    let n = vals.len() as f64;
                    let m = vals.iter().sum::<f64>() / n;
                    let v = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
                    (m, v, vals.iter().fold(0.0f64, |acc, x| acc.max(x.abs())))
                }
            };
            out = (out.0.max(m.abs()), out.1.max(v), out.2.max(g));
        }
        out
    }
}

/// User-supplied envelopes for a custom map: `|m_j| <= mean * w_j` and
/// `s_j^2 <= var * w_j^2`-type bounds for every level `j >= 1`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)
)]
pub enum TailBound {
    /// `|m_j| <= mean * j^{-mean_exp}`, `s_j^2 <= var * j^{-var_exp}`.
    Power {
        mean: f64,
        mean_exp: f64,
        var: f64,
        var_exp: f64,
    },
    /// `|m_j| <= mean * ratio^j`, `s_j^2 <= var * ratio^{2j}`.
    Geometric { mean: f64, var: f64, ratio: f64 },
}

/// The family of per-level digit values.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)
)]
pub enum DigitMap {
    /// `f(d q_j) = d / q_{j+1}`.
    RadicalInverse,
    /// `f(d q_j) = j^{-alpha} g(d)`, with `c_0 = 1`.
    Polynomial {
        alpha: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        g: DigitTable,
    },
    /// `f(d q_j) = beta^j g(d)`.
    Geometric {
        beta: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        g: DigitTable,
    },
    /// `f(d q_j) = sigma(d) 3^{-j}` with `sigma = (-1, 0, 1)`.
    SymmetricTernary,
    /// `f(0) = 0`, `f(q_j) = c_j`, `f(d q_j) = 2 c_j` for `d >= 2`, with
    /// `c_j = j^{-2}` and `c_0 = 1`.
    SkewedPolyweight,
    /// Explicit `levels[j][d]`; levels past the table are identically zero.
    CustomTable {
        levels: Vec<Vec<f64>>,
        #[cfg_attr(feature = "serde", serde(default))]
        tail: Option<TailBound>,
    },
    /// `f == 0`.
    Zero,
}

/// Exact statistics of one level's digit law (uniform over `0..a_j`).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DigitStats {
    pub level: usize,
    pub mean: f64,
    pub var: f64,
    pub omega: f64,
    pub mu3: f64,
    /// The third central moment vanishes exactly, decided in integer
    /// arithmetic on the digit profile (or the stored values), not by tolerance.
    pub mu3_zero: bool,
}

/// Certified upper bounds on `sum_{j>L} |m_j|` and `sum_{j>L} s_j^2`.
/// Divergent tails are `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailSums {
    pub mean: f64,
    pub var: f64,
}

impl TailSums {
    pub fn is_finite(&self) -> bool {
        self.mean.is_finite() && self.var.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Verdict {
    Converges,
    Diverges,
    Inconclusive,
}

/// Outcome of [`DigitMap::ew_diagnose`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EwDiagnosis {
    pub verdict: Verdict,
    /// Decided from tail metadata rather than partial sums.
    pub analytic: bool,
    /// `(j, sum_{i<=j} m_i, sum_{i<=j} s_i^2)` for `j = 0..=J_max`.
    pub trace: Vec<(usize, f64, f64)>,
}

/// `sum_{j>L} j^{-p}`, bounded by integral comparison.
pub fn zeta_tail(p: f64, l: usize) -> f64 {
    if p <= 1.0 {
        f64::INFINITY
    } else if l == 0 {
        p / (p - 1.0)
    } else {
        libm::pow(l as f64, 1.0 - p) / (p - 1.0)
    }
}

/// `sum_{j>=J} j^{-p}` with the `0^{-p} := 1` convention.
fn zeta_from(p: f64, j: usize) -> f64 {
    match j {
        0 => 1.0 + zeta_tail(p, 0),
        _ => libm::pow(j as f64, -p) + zeta_tail(p, j),
    }
}

fn poly_weight(alpha: f64, j: usize) -> f64 {
    if j == 0 {
        1.0
    } else {
        libm::pow(j as f64, -alpha)
    }
}

impl DigitMap {
    /// Checks that the map covers the alphabet the base produces.
    pub fn check(&self, base: &CantorBase) -> Result<()> {
        let radices = || base.rule().radices_from(0);
        match self {
            DigitMap::Polynomial { alpha, g } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "alpha must be > 0, got {alpha}"
                    )));
                }
                check_table(g, radices())
            }
            DigitMap::Geometric { beta, g } => {
                if !(beta.is_finite() && *beta > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "beta must be > 0, got {beta}"
                    )));
                }
                check_table(g, radices())
            }
            DigitMap::SymmetricTernary => match radices() {
                Some(r) if r == [3] => Ok(()),
                _ => Err(Error::InvalidArgument(
                    "symmetric-ternary needs base 3".into(),
                )),
            },
            DigitMap::CustomTable { levels, tail } => {
                for (j, row) in levels.iter().enumerate() {
                    let a = base.radix(j);
                    if (row.len() as u128) < a {
                        return Err(Error::InvalidArgument(format!(
                            "custom table level {j} has {} values, radix is {a}",
                            row.len()
                        )));
                    }
                    if row.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidArgument(format!(
                            "custom table level {j} has a non-finite value"
                        )));
                    }
                }
                match tail {
                    Some(TailBound::Power { mean, var, .. })
                    | Some(TailBound::Geometric { mean, var, .. })
                        if *mean < 0.0 || *var < 0.0 =>
                    {
                        Err(Error::InvalidArgument("negative tail coefficient".into()))
                    }
                    _ => Ok(()),
                }
            }
            DigitMap::RadicalInverse | DigitMap::SkewedPolyweight | DigitMap::Zero => Ok(()),
        }
    }

    /// `f(d q_j)`.
    pub fn digit_value(&self, base: &CantorBase, d: u64, j: usize) -> Result<f64> {
        let a = base.radix(j);
        let out_of_range = Error::DigitOutOfRange {
            level: j,
            digit: d as u128,
            radix: a,
        };
        if d as u128 >= a {
            return Err(out_of_range);
        }
        let v = match self {
            DigitMap::RadicalInverse => d as f64 / base.radix_weight_f64(j + 1),
            DigitMap::Polynomial { alpha, g } => {
                poly_weight(*alpha, j) * g.get(d).ok_or(out_of_range)?
            }
            DigitMap::Geometric { beta, g } => {
                libm::pow(*beta, j as f64) * g.get(d).ok_or(out_of_range)?
            }
            DigitMap::SymmetricTernary => {
                let sigma = match d {
                    0 => -1.0,
                    1 => 0.0,
                    2 => 1.0,
                    _ => return Err(out_of_range),
                };
                sigma * libm::pow(3.0, -(j as f64))
            }
            DigitMap::SkewedPolyweight => {
                let c = poly_weight(2.0, j);
                match d {
                    0 => 0.0,
                    1 => c,
                    _ => 2.0 * c,
                }
            }
            DigitMap::CustomTable { levels, .. } => match levels.get(j) {
                Some(row) => *row.get(d as usize).ok_or(out_of_range)?,
                None => 0.0,
            },
            DigitMap::Zero => 0.0,
        };
        Ok(v)
    }

    /// All values `f(d q_j)` for `d < a_j`.
    pub fn level_values(&self, base: &CantorBase, j: usize) -> Result<Vec<f64>> {
        let a = base.radix(j);
        if a > LEVEL_CAP {
            return Err(Error::ResourceLimit {
                requested: a as u64,
                cap: LEVEL_CAP as u64,
            });
        }
        (0..a as u64)
            .map(|d| self.digit_value(base, d, j))
            .collect()
    }

    /// `f(N)`, summed over the expansion digits from the top level down.
    pub fn eval(&self, base: &CantorBase, n: u64) -> f64 {
        let digits = base.expand(n).into_digits();
        let mut acc = 0.0;
        for (j, &d) in digits.iter().enumerate().rev() {
            acc += self
                .digit_value(base, d, j)
                .expect("expansion digits are in range");
        }
        acc
    }

    pub fn digit_stats(&self, base: &CantorBase, j: usize) -> Result<DigitStats> {
        let values = self.level_values(base, j)?;
        let mut s = stats_of(j, &values);
        // Built-in levels are a common scale times a digit profile; the sign
        // of the third moment is decided on the profile, so a non-dyadic scale
        // (1/q_j for factorial q_j, say) does not spoil an exact symmetry.
        if let Some((scale, profile)) = self.level_profile(base, j) {
            s.mu3_zero = scale == 0.0 || third_moment_vanishes(&profile);
        }
        Ok(s)
    }

    /// `f(d q_j) = scale * profile[d]`, for the families with that form.
    fn level_profile(&self, base: &CantorBase, j: usize) -> Option<(f64, Vec<f64>)> {
        let a = base.radix(j);
        if a > LEVEL_CAP {
            return None;
        }
        let digits = 0..a as u64;
        match self {
            DigitMap::RadicalInverse => Some((1.0, digits.map(|d| d as f64).collect())),
            DigitMap::Polynomial { alpha, g } => Some((
                poly_weight(*alpha, j),
                digits.map(|d| g.get(d)).collect::<Option<_>>()?,
            )),
            DigitMap::Geometric { beta, g } => Some((
                libm::pow(*beta, j as f64),
                digits.map(|d| g.get(d)).collect::<Option<_>>()?,
            )),
            DigitMap::SymmetricTernary => Some((1.0, vec![-1.0, 0.0, 1.0])),
            DigitMap::SkewedPolyweight => Some((1.0, digits.map(|d| d.min(2) as f64).collect())),
            DigitMap::CustomTable { .. } | DigitMap::Zero => None,
        }
    }

    /// Certified tails beyond level `L`.
    pub fn tail_sums(&self, base: &CantorBase, l: usize) -> Result<TailSums> {
        let rule = base.rule();
        let t = match self {
            DigitMap::Zero => TailSums {
                mean: 0.0,
                var: 0.0,
            },
            DigitMap::RadicalInverse => {
                let q = base.radix_weight_f64(l + 1);
                let var = if base.constant_radix().is_some() {
                    1.0 / (12.0 * q * q)
                } else {
                    // s_j^2 <= 1/(12 q_j^2) and q_j at least doubles per level.
                    1.0 / (9.0 * q * q)
                };
                TailSums {
                    mean: 1.0 / (2.0 * q),
                    var,
                }
            }
            DigitMap::Polynomial { alpha, g } => match rule.radices_from(l + 1) {
                Some(r) => {
                    let (mg, vg, _) = g.moments_over(&r);
                    TailSums {
                        mean: scaled(mg, zeta_tail(*alpha, l)),
                        var: scaled(vg, zeta_tail(2.0 * alpha, l)),
                    }
                }
                None => unbounded(g),
            },
            DigitMap::Geometric { beta, g } => match rule.radices_from(l + 1) {
                Some(r) => {
                    let (mg, vg, _) = g.moments_over(&r);
                    let (b, k) = (*beta, (l + 1) as f64);
                    if b >= 1.0 {
                        TailSums {
                            mean: scaled(mg, f64::INFINITY),
                            var: scaled(vg, f64::INFINITY),
                        }
                    } else {
                        TailSums {
                            mean: mg * libm::pow(b, k) / (1.0 - b),
                            var: vg * libm::pow(b, 2.0 * k) / (1.0 - b * b),
                        }
                    }
                }
                None => unbounded(g),
            },
            DigitMap::SymmetricTernary => {
                self.check(base)?;
                TailSums {
                    mean: 0.0,
                    var: 0.75 * libm::pow(9.0, -((l + 1) as f64)),
                }
            }
            DigitMap::SkewedPolyweight => {
                let (km, ks) = match base.constant_radix() {
                    Some(q) => {
                        let q = q as f64;
                        let km = (2.0 * q - 3.0) / q;
                        (km, (4.0 * q - 7.0) / q - km * km)
                    }
                    None => (2.0, 1.0),
                };
                TailSums {
                    mean: km * zeta_tail(2.0, l),
                    var: ks * zeta_tail(4.0, l),
                }
            }
            DigitMap::CustomTable { tail, .. } => match tail {
                None => return Err(Error::NoTailMeta),
                Some(TailBound::Power {
                    mean,
                    mean_exp,
                    var,
                    var_exp,
                }) => TailSums {
                    mean: scaled(*mean, zeta_tail(*mean_exp, l)),
                    var: scaled(*var, zeta_tail(*var_exp, l)),
                },
                Some(TailBound::Geometric { mean, var, ratio }) => {
                    let k = (l + 1) as f64;
                    if *ratio >= 1.0 {
                        TailSums {
                            mean: scaled(*mean, f64::INFINITY),
                            var: scaled(*var, f64::INFINITY),
                        }
                    } else {
                        TailSums {
                            mean: mean * libm::pow(*ratio, k) / (1.0 - ratio),
                            var: var * libm::pow(*ratio, 2.0 * k) / (1.0 - ratio * ratio),
                        }
                    }
                }
            },
        };
        Ok(t)
    }

    /// Deterministic bound on `sum_{j>=J} max_d |f(d q_j)|`; `None` when the
    /// family gives no finite bound.
    pub fn tail_sup(&self, base: &CantorBase, jj: usize) -> Option<f64> {
        let gmax = |g: &DigitTable| base.rule().radices_from(jj).map(|r| g.moments_over(&r).2);
        let s = match self {
            DigitMap::Zero => 0.0,
            // max_d d/q_{j+1} < 1/q_j, and sum_{j>=J} (a_j - 1)/q_{j+1} = 1/q_J.
            DigitMap::RadicalInverse => 1.0 / base.radix_weight_f64(jj),
            DigitMap::Polynomial { alpha, g } => scaled(gmax(g)?, zeta_from(*alpha, jj)),
            DigitMap::Geometric { beta, g } => {
                if *beta >= 1.0 {
                    scaled(gmax(g)?, f64::INFINITY)
                } else {
                    gmax(g)? * libm::pow(*beta, jj as f64) / (1.0 - beta)
                }
            }
            DigitMap::SymmetricTernary => 1.5 * libm::pow(3.0, -(jj as f64)),
            DigitMap::SkewedPolyweight => 2.0 * zeta_from(2.0, jj),
            DigitMap::CustomTable { levels, .. } => levels
                .iter()
                .skip(jj)
                .map(|row| row.iter().fold(0.0f64, |m, v| m.max(v.abs())))
                .sum(),
        };
        s.is_finite().then_some(s)
    }

    /// Decides whether `sum m_j` converges and `sum s_j^2 < inf`.
    ///
    /// With tail metadata the verdict is analytic. Otherwise partial sums up
    /// to `J_max` are grouped in dyadic blocks: the map converges when the
    /// geometrically extrapolated remainder of both series is below `tol`,
    /// diverges when a partial sum exceeds [`DIVERGENCE_THRESHOLD`] while the
    /// last two block ratios stay `>= 0.9`, and is inconclusive otherwise.
    pub fn ew_diagnose(&self, base: &CantorBase, j_max: usize, tol: f64) -> Result<EwDiagnosis> {
        let mut trace = Vec::with_capacity(j_max + 1);
        let (mut sm, mut sv) = (0.0, 0.0);
        let mut blocks: Vec<(f64, f64)> = Vec::new();
        let (mut bm, mut bv) = (0.0, 0.0);
        for j in 0..=j_max {
            let st = self.digit_stats(base, j)?;
            sm += st.mean;
            sv += st.var;
            trace.push((j, sm, sv));
            // Block k covers [2^k - 1, 2^{k+1} - 1).
            bm += st.mean;
            bv += st.var;
            if (j + 2).is_power_of_two() {
                blocks.push((bm, bv));
                bm = 0.0;
                bv = 0.0;
            }
        }

        if let Ok(t) = self.tail_sums(base, 0) {
            let verdict = if t.is_finite() {
                Verdict::Converges
            } else {
                Verdict::Diverges
            };
            return Ok(EwDiagnosis {
                verdict,
                analytic: true,
                trace,
            });
        }

        let verdict = heuristic_verdict(&blocks, sm, sv, tol);
        Ok(EwDiagnosis {
            verdict,
            analytic: false,
            trace,
        })
    }
}

/// Partial-sum magnitude beyond which a non-settling series is called
/// divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 10.0;

fn heuristic_verdict(blocks: &[(f64, f64)], sm: f64, sv: f64, tol: f64) -> Verdict {
    if blocks.len() < 3 {
        return Verdict::Inconclusive;
    }
    let n = blocks.len();
    let ratio = |sel: fn(&(f64, f64)) -> f64, k: usize| {
        let (prev, cur) = (sel(&blocks[k - 1]).abs(), sel(&blocks[k]).abs());
        if prev == 0.0 {
            if cur == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            cur / prev
        }
    };
    let mean_sel: fn(&(f64, f64)) -> f64 = |b| b.0;
    let var_sel: fn(&(f64, f64)) -> f64 = |b| b.1;

    let remainder = |sel: fn(&(f64, f64)) -> f64| {
        let r = ratio(sel, n - 1).max(ratio(sel, n - 2));
        let last = sel(&blocks[n - 1]).abs();
        if last == 0.0 {
            0.0
        } else if r < 1.0 {
            last * r / (1.0 - r)
        } else {
            f64::INFINITY
        }
    };
    if remainder(mean_sel) < tol && remainder(var_sel) < tol {
        return Verdict::Converges;
    }
    let grows = |sel: fn(&(f64, f64)) -> f64, total: f64| {
        total.abs() > DIVERGENCE_THRESHOLD && ratio(sel, n - 1) >= 0.9 && ratio(sel, n - 2) >= 0.9
    };
    if grows(mean_sel, sm) || grows(var_sel, sv) {
        Verdict::Diverges
    } else {
        Verdict::Inconclusive
    }
}

fn check_table(g: &DigitTable, radices: Option<Vec<u64>>) -> Result<()> {
    match g {
        DigitTable::Identity => Ok(()),
        DigitTable::Values(v) => {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(
                    "digit table has a non-finite value".into(),
                ));
            }
            match radices.and_then(|r| r.last().copied()) {
                Some(a) if a as usize <= v.len() => Ok(()),
                Some(a) => Err(Error::InvalidArgument(format!(
                    "digit table has {} entries, base needs {a}",
                    v.len()
                ))),
                None => Err(Error::InvalidArgument(
                    "digit table needs a base with bounded radices".into(),
                )),
            }
        }
    }
}

/// `c * s` with `0 * inf = 0`.
fn scaled(c: f64, s: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * s
    }
}

fn unbounded(g: &DigitTable) -> TailSums {
    match g {
        DigitTable::Values(v) if v.iter().all(|x| *x == 0.0) => TailSums {
            mean: 0.0,
            var: 0.0,
        },
        _ => TailSums {
            mean: f64::INFINITY,
            var: f64::INFINITY,
        },
    }
}

/// Statistics of the uniform law on `values`.
pub fn stats_of(level: usize, values: &[f64]) -> DigitStats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut var, mut mu3, mut omega) = (0.0, 0.0, 0.0f64);
    for v in values {
        let c = v - mean;
        var += c * c;
        mu3 += c * c * c;
        omega = omega.max(c.abs());
    }
    DigitStats {
        level,
        mean,
        var: var / n,
        omega,
        mu3: mu3 / n,
        mu3_zero: third_moment_vanishes(values),
    }
}

/// `sum_d (a V_d - S)^3 == 0` over integers `V_d` obtained by scaling the
/// (dyadic) values to a common exponent.
pub fn third_moment_vanishes(values: &[f64]) -> bool {
    if values.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let parts: Vec<(i64, i32)> = values.iter().map(|&v| decompose(v)).collect();
    let e_min = parts
        .iter()
        .filter(|p| p.0 != 0)
        .map(|p| p.1)
        .min()
        .unwrap_or(0);
    let ints: Vec<BigInt> = parts
        .iter()
        .map(|&(m, e)| {
            if m == 0 {
                BigInt::zero()
            } else {
                BigInt::from(m) << ((e - e_min) as usize)
            }
        })
        .collect();
    let a = BigInt::from(values.len());
    let s: BigInt = ints.iter().sum();
    let total: BigInt = ints
        .iter()
        .map(|v| {
            let c = &a * v - &s;
            &c * &c * &c
        })
        .sum();
    total.sign() == Sign::NoSign
}

/// `v = m * 2^e` with integer `m`.
fn decompose(v: f64) -> (i64, i32) {
    if v == 0.0 {
        return (0, 0);
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    let (m, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1 << 52), exp - 1075)
    };
    (sign * m, e)
}

/// Per-level value tables for fast repeated evaluation.
#[derive(Debug, Clone)]
pub struct LevelTables {
    levels: Vec<Vec<f64>>,
}

impl LevelTables {
    /// Tables for levels `0..=top`.
    pub fn new(map: &DigitMap, base: &CantorBase, top: usize) -> Result<Self> {
        let levels = (0..=top)
            .map(|j| map.level_values(base, j))
            .collect::<Result<_>>()?;
        Ok(Self { levels })
    }

    pub fn level(&self, j: usize) -> &[f64] {
        &self.levels[j]
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}

/// Writes `f(n)` for `n in start..start+out.len()` into `out`, bit-identical
/// to [`DigitMap::eval`] (same top-down summation order).
pub fn eval_range(base: &CantorBase, tables: &LevelTables, start: u64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let mut digits = base.expand(start).into_digits();
    assert!(
        digits.len() <= tables.depth(),
        "level tables too shallow for n = {start}"
    );
    // partial[j] = sum_{i >= j} f(delta_i q_i), summed from the top.
    let mut partial = alloc::vec![0.0f64; tables.depth() + 1];
    let refresh = |partial: &mut [f64], digits: &[u64], from: usize| {
        for j in (0..=from).rev() {
            partial[j] = partial[j + 1] + tables.level(j)[digits[j] as usize];
        }
    };
    if !digits.is_empty() {
        refresh(&mut partial, &digits, digits.len() - 1);
    }
    let radices: Vec<u64> = (0..tables.depth())
        .map(|j| tables.level(j).len() as u64)
        .collect();
    let len = out.len();
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = if digits.is_empty() { 0.0 } else { partial[0] };
        if i + 1 == len {
            break;
        }
        // Increment the odometer.
        let mut k = 0;
        loop {
            if k == digits.len() {
                digits.push(1);
                break;
            }
            digits[k] += 1;
            if digits[k] < radices[k] {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
        assert!(digits.len() <= tables.depth(), "level tables too shallow");
        if k + 1 == digits.len() {
            partial[k + 1] = 0.0;
        }
        refresh(&mut partial, &digits, k);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixed_radix::BaseRule;
    use alloc::vec;

    fn b(q: u64) -> CantorBase {
        CantorBase::constant(q).unwrap()
    }

    #[test]
    fn digit_value_examples() {
        assert_eq!(
            DigitMap::RadicalInverse.digit_value(&b(2), 1, 1).unwrap(),
            0.25
        );
        assert_eq!(
            DigitMap::SymmetricTernary.digit_value(&b(3), 2, 0).unwrap(),
            1.0
        );
        assert_eq!(
            DigitMap::SkewedPolyweight.digit_value(&b(5), 0, 4).unwrap(),
            0.0
        );
        assert_eq!(
            DigitMap::RadicalInverse.digit_value(&b(2), 2, 0),
            Err(Error::DigitOutOfRange {
                level: 0,
                digit: 2,
                radix: 2
            })
        );
    }

    #[test]
    fn eval_examples() {
        assert_eq!(DigitMap::RadicalInverse.eval(&b(2), 3), 0.75);
        assert_eq!(DigitMap::SymmetricTernary.eval(&b(3), 0), 0.0);
        assert_eq!(DigitMap::SymmetricTernary.eval(&b(3), 5), 1.0);
    }

    #[test]
    fn stats_examples() {
        let s = DigitMap::RadicalInverse.digit_stats(&b(2), 0).unwrap();
        assert_eq!((s.mean, s.var), (0.25, 0.0625));
        let s = DigitMap::SymmetricTernary.digit_stats(&b(3), 0).unwrap();
        assert_eq!(s.mean, 0.0);
        assert!((s.var - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.mu3, 0.0);
        assert!(s.mu3_zero);
        let s = DigitMap::SkewedPolyweight.digit_stats(&b(3), 1).unwrap();
        assert_eq!(s.mean, 1.0);
        assert!((s.var - 2.0 / 3.0).abs() < 1e-15);
        assert!(s.mu3_zero);
        let s = DigitMap::SkewedPolyweight.digit_stats(&b(4), 1).unwrap();
        assert!(!s.mu3_zero);
        // 1/q_j is not dyadic for factorial q_j, but the profile 0..a_j is
        // symmetric.
        let f = CantorBase::factorial();
        assert!((0..20).all(|j| DigitMap::RadicalInverse
            .digit_stats(&f, j)
            .unwrap()
            .mu3_zero));
        assert!(!third_moment_vanishes(
            &DigitMap::RadicalInverse.level_values(&f, 5).unwrap()
        ));
    }

    #[test]
    fn exact_third_moment() {
        assert!(third_moment_vanishes(&[-1.0, 0.0, 1.0]));
        assert!(third_moment_vanishes(&[0.0, 0.5, 1.0]));
        assert!(third_moment_vanishes(&[5.0]));
        assert!(third_moment_vanishes(&[0.1, 0.2]));
        assert!(!third_moment_vanishes(&[0.0, 1.0, 2.0, 2.0]));
        assert!(!third_moment_vanishes(&[0.0, 0.5, 1.0 + f64::EPSILON]));
        // 0.1 + 0.2 != 0.3 in binary, so this "symmetric" triple is not.
        assert!(!third_moment_vanishes(&[0.1, 0.2, 0.3]));
    }

    #[test]
    fn tail_examples() {
        let g = DigitMap::Geometric {
            beta: 0.5,
            g: DigitTable::Identity,
        };
        let t = g.tail_sums(&b(2), 10).unwrap();
        assert_eq!(t.var, libm::pow(4.0, -10.0) / 12.0);
        assert_eq!(t.mean, libm::pow(2.0, -11.0));
        assert_eq!(
            DigitMap::Zero.tail_sums(&b(7), 3).unwrap(),
            TailSums {
                mean: 0.0,
                var: 0.0
            }
        );
        let p = DigitMap::Polynomial {
            alpha: 1.5,
            g: DigitTable::Identity,
        };
        let t = p.tail_sums(&b(2), 10).unwrap();
        assert!((t.var - 0.25 * 0.5 / 100.0).abs() < 1e-18);
        let c = DigitMap::CustomTable {
            levels: vec![vec![0.0, 1.0]],
            tail: None,
        };
        assert_eq!(c.tail_sums(&b(2), 3), Err(Error::NoTailMeta));
    }

    #[test]
    fn tail_sums_dominate_direct_partial_sums() {
        let maps = [
            DigitMap::RadicalInverse,
            DigitMap::Polynomial {
                alpha: 1.5,
                g: DigitTable::Identity,
            },
            DigitMap::Geometric {
                beta: 0.7,
                g: DigitTable::Values(vec![0.0, 2.0, -1.0]),
            },
            DigitMap::SymmetricTernary,
            DigitMap::SkewedPolyweight,
        ];
        for map in &maps {
            for base in [
                b(3),
                CantorBase::new(BaseRule::Periodic {
                    pattern: vec![2, 3],
                })
                .unwrap(),
            ] {
                if map.check(&base).is_err() {
                    continue;
                }
                for l in [0usize, 1, 4, 9] {
                    let t = map.tail_sums(&base, l).unwrap();
                    let (mut m, mut v) = (0.0, 0.0);
                    for j in l + 1..l + 400 {
                        let s = map.digit_stats(&base, j).unwrap();
                        m += s.mean.abs();
                        v += s.var;
                    }
                    assert!(
                        m <= t.mean * (1.0 + 1e-12),
                        "{map:?} L={l}: {m} > {}",
                        t.mean
                    );
                    assert!(v <= t.var * (1.0 + 1e-12), "{map:?} L={l}: {v} > {}", t.var);
                    let sup = map.tail_sup(&base, l).unwrap();
                    let direct: f64 = (l..l + 400)
                        .map(|j| {
                            map.level_values(&base, j)
                                .unwrap()
                                .iter()
                                .fold(0.0f64, |a, x| a.max(x.abs()))
                        })
                        .sum();
                    assert!(
                        direct <= sup * (1.0 + 1e-12),
                        "{map:?} J={l}: {direct} > {sup}"
                    );
                }
            }
        }
    }

    #[test]
    fn factorial_radical_inverse_tails() {
        let base = CantorBase::factorial();
        let map = DigitMap::RadicalInverse;
        for l in 0..8 {
            let t = map.tail_sums(&base, l).unwrap();
            let (mut m, mut v) = (0.0, 0.0);
            for j in l + 1..40 {
                let s = map.digit_stats(&base, j).unwrap();
                m += s.mean;
                v += s.var;
            }
            assert!((m - t.mean).abs() <= 1e-12 * t.mean);
            assert!(v <= t.var);
        }
    }

    #[test]
    fn ew_examples() {
        let d = DigitMap::RadicalInverse
            .ew_diagnose(&b(2), 30, 1e-9)
            .unwrap();
        assert_eq!(d.verdict, Verdict::Converges);
        assert!(d.analytic);
        assert_eq!(d.trace.len(), 31);
        let d = DigitMap::Zero.ew_diagnose(&b(2), 5, 1e-9).unwrap();
        assert_eq!(d.verdict, Verdict::Converges);

        let levels: Vec<Vec<f64>> = (0..512)
            .map(|j| vec![0.0, 2.0 / (j as f64 + 1.0)])
            .collect();
        let harmonic = DigitMap::CustomTable { levels, tail: None };
        let d = harmonic.ew_diagnose(&b(2), 511, 1e-6).unwrap();
        assert!(!d.analytic);
        assert_ne!(d.verdict, Verdict::Converges);

        let levels: Vec<Vec<f64>> = (0..64)
            .map(|j| vec![0.0, libm::pow(0.5, j as f64)])
            .collect();
        let geo = DigitMap::CustomTable { levels, tail: None };
        assert_eq!(
            geo.ew_diagnose(&b(2), 63, 1e-9).unwrap().verdict,
            Verdict::Converges
        );

        let levels: Vec<Vec<f64>> = (0..1024).map(|_| vec![0.0, 1.0]).collect();
        let flat = DigitMap::CustomTable { levels, tail: None };
        assert_eq!(
            flat.ew_diagnose(&b(2), 1023, 1e-9).unwrap().verdict,
            Verdict::Diverges
        );
    }

    #[test]
    fn eval_range_matches_eval() {
        let bases = [
            b(2),
            b(3),
            CantorBase::factorial(),
            CantorBase::new(BaseRule::Periodic {
                pattern: vec![2, 5, 3],
            })
            .unwrap(),
        ];
        let maps = [
            DigitMap::RadicalInverse,
            DigitMap::SkewedPolyweight,
            DigitMap::Polynomial {
                alpha: 1.5,
                g: DigitTable::Identity,
            },
            DigitMap::SymmetricTernary,
        ];
        for base in &bases {
            for map in &maps {
                if map.check(base).is_err() {
                    continue;
                }
                let tables = LevelTables::new(map, base, 20).unwrap();
                for start in [0u64, 1, 7, 1000] {
                    let mut out = vec![0.0; 3000];
                    eval_range(base, &tables, start, &mut out);
                    for (i, v) in out.iter().enumerate() {
                        let n = start + i as u64;
                        assert_eq!(v.to_bits(), map.eval(base, n).to_bits(), "{map:?} n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn check_rejects_bad_maps() {
        assert!(DigitMap::SymmetricTernary.check(&b(5)).is_err());
        assert!(DigitMap::Geometric {
            beta: 0.5,
            g: DigitTable::Values(vec![0.0, 1.0])
        }
        .check(&b(3))
        .is_err());
        assert!(DigitMap::Geometric {
            beta: 0.5,
            g: DigitTable::Values(vec![0.0, 1.0])
        }
        .check(&CantorBase::factorial())
        .is_err());
        assert!(DigitMap::CustomTable {
            levels: vec![vec![0.0]],
            tail: None
        }
        .check(&b(2))
        .is_err());
        assert!(DigitMap::Polynomial {
            alpha: -1.0,
            g: DigitTable::Identity
        }
        .check(&b(2))
        .is_err());
    }
}

//! Trailing-window bound: bridge `A(L,h)^{-1}`, tails `tau1`/`tau2(h)`,
//! the three regime terms, closed-form example rates and the `(h, T)`
//! optimizer.
//!
//! All implied constants are 1. Two shapes are offered: [`BoundShape::Unified`]
//! assembles `A^{-1} + tau1^{1/2} + Q_F(1/T) + 1/T + G(T,h)` literally with
//! `T` on the dyadic grid in `(0, 1]`; [`BoundShape::Corollary`] uses the
//! per-regime optimized forms `A^{-1} + tau1^{1/2} + tau2^{1/4 | 1/2 | 1/3}`.

use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::empirical::{concentration, ReferenceCdf};
use crate::mixed_radix::CantorBase;
use crate::qadditive::{DigitMap, DigitStats};
use crate::{Error, Result};

/// Exponent range of the `T` grid `{2^{-k} : 0 <= k <= 40}`.
pub const T_GRID_MAX_EXP: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Regime {
    /// Baseline Esseen smoothing.
    A,
    /// Bounded density of the limit law.
    B,
    /// Vanishing third cumulant.
    C,
}

impl core::fmt::Display for Regime {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Regime::A => "A",
            Regime::B => "B",
            Regime::C => "C",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum BoundShape {
    #[default]
    Corollary,
    Unified,
}

/// Every component of one evaluated bound.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WindowBoundReport {
    pub n: u64,
    pub l: usize,
    pub h: usize,
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_big"))]
    pub a_lh: BigUint,
    /// `1 / A(L,h)`.
    pub bridge: f64,
    /// The sharper `r / N`, `r = N mod q_{L-h}`.
    pub bridge_sharp: f64,
    /// `None` when the map has no tail metadata (treated as 0 in `total`).
    pub tau1: Option<f64>,
    pub tau2: f64,
    pub t: Option<f64>,
    pub qf: Option<f64>,
    pub g: f64,
    pub total: f64,
    pub regime: Regime,
    pub shape: BoundShape,
    pub conditional: bool,
}

/// `A(L,h) = prod_{j=L-h}^{L-1} a_j = q_L / q_{L-h}`.
pub fn window_size(base: &CantorBase, l: usize, h: usize) -> Result<BigUint> {
    check_window(l, h)?;
    Ok(base.radix_weight(l) / base.radix_weight(l - h))
}

fn check_window(l: usize, h: usize) -> Result<()> {
    if h == 0 || h > l {
        Err(Error::InvalidArgument(format!(
            "window needs 1 <= h <= L, got h={h}, L={l}"
        )))
    } else {
        Ok(())
    }
}

/// `tau2(h) = sum_{j=L-h}^{L-1} s_j^2`.
pub fn tau2(map: &DigitMap, base: &CantorBase, l: usize, h: usize) -> Result<f64> {
    check_window(l, h)?;
    let mut acc = 0.0;
    for j in (l - h..l).rev() {
        acc += map.digit_stats(base, j)?.var;
    }
    Ok(acc)
}

/// `tau1 <= sum_{j>L} |m_j| + sum_{j>L} s_j^2`; `None` without tail metadata.
pub fn tau1(map: &DigitMap, base: &CantorBase, l: usize) -> Option<f64> {
    map.tail_sums(base, l).ok().map(|t| t.mean + t.var)
}

/// `G(T,h)` in the unified shape: `T tau2^{1/2}` (A), `rho tau2^{1/2}` (B),
/// `T^2 tau2^{2/3}` (C).
pub fn regime_term(regime: Regime, t: f64, tau2: f64, rho_inf: Option<f64>) -> Result<f64> {
    match regime {
        Regime::B => Ok(rho_inf.ok_or(Error::MissingDensityBound)? * libm::sqrt(tau2)),
        _ if !(t > 0.0 && t <= 1.0) => Err(Error::InvalidArgument(format!(
            "T must lie in (0, 1], got {t}"
        ))),
        Regime::A => Ok(t * libm::sqrt(tau2)),
        Regime::C => Ok(t * t * libm::pow(tau2, 2.0 / 3.0)),
    }
}

/// Window term after optimizing in `T`: `tau2^{1/4}` (A), `rho tau2^{1/2}`
/// (B), `tau2^{1/3}` (C).
pub fn corollary_term(regime: Regime, tau2: f64, rho_inf: Option<f64>) -> Result<f64> {
    match regime {
        Regime::A => Ok(libm::pow(tau2, 0.25)),
        Regime::B => Ok(rho_inf.ok_or(Error::MissingDensityBound)? * libm::sqrt(tau2)),
        Regime::C => Ok(libm::cbrt(tau2)),
    }
}

/// Height-free bridge `1/A(L,h)` and the sharper `r/N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bridge {
    pub height_free: f64,
    pub sharp: f64,
    pub remainder: u64,
}

pub fn bridge_bound(base: &CantorBase, n: u64, h: usize) -> Result<Bridge> {
    let l = base.length(n);
    let a = window_size(base, l, h)?;
    let q = base.radix_weight(l - h);
    let r = (BigUint::from(n) % q).to_u64().expect("remainder below N");
    Ok(Bridge {
        height_free: recip(&a),
        sharp: r as f64 / n as f64,
        remainder: r,
    })
}

fn recip(a: &BigUint) -> f64 {
    match a.to_f64() {
        Some(v) if v.is_finite() => 1.0 / v,
        _ => 0.0,
    }
}

/// Resolves `auto` (`None`): B when a density bound is given, else C when
/// every third central moment up to level `L` vanishes, else A.
pub fn resolve_regime(
    requested: Option<Regime>,
    rho_inf: Option<f64>,
    mu3_all_zero: bool,
) -> Regime {
    match requested {
        Some(r) => r,
        None if rho_inf.is_some() => Regime::B,
        None if mu3_all_zero => Regime::C,
        None => Regime::A,
    }
}

/// Digit statistics of levels `0..=l_max`, shared across the `N` values of
/// an experiment.
#[derive(Debug, Clone)]
pub struct WindowModel<'a> {
    map: &'a DigitMap,
    base: &'a CantorBase,
    stats: Vec<DigitStats>,
}

impl<'a> WindowModel<'a> {
    pub fn new(map: &'a DigitMap, base: &'a CantorBase, l_max: usize) -> Result<Self> {
        let stats = (0..=l_max)
            .map(|j| map.digit_stats(base, j))
            .collect::<Result<_>>()?;
        Ok(Self { map, base, stats })
    }

    pub fn map(&self) -> &DigitMap {
        self.map
    }

    pub fn base(&self) -> &CantorBase {
        self.base
    }

    pub fn stats(&self) -> &[DigitStats] {
        &self.stats
    }

    fn ensure(&self, l: usize) -> Result<()> {
        if l < self.stats.len() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "level {l} beyond the model depth {}",
                self.stats.len() - 1
            )))
        }
    }

    /// `mu3_j == 0` exactly for all `j <= L`.
    pub fn mu3_vanishes(&self, l: usize) -> Result<bool> {
        self.ensure(l)?;
        Ok(self.stats[..=l].iter().all(|s| s.mu3_zero))
    }

    /// `tau2(h)` for `h = 1..=L`, each summed from the top level down.
    pub fn tau2_ladder(&self, l: usize) -> Result<Vec<f64>> {
        self.ensure(l)?;
        let mut out = Vec::with_capacity(l);
        let mut acc = 0.0;
        for j in (0..l).rev() {
            acc += self.stats[j].var;
            out.push(acc);
        }
        Ok(out)
    }

    fn check_regime(&self, regime: Regime, l: usize, rho_inf: Option<f64>) -> Result<()> {
        match regime {
            Regime::B if rho_inf.is_none() => Err(Error::MissingDensityBound),
            Regime::C if !self.mu3_vanishes(l)? => Err(Error::RegimeUnavailable(format!(
                "regime C needs a vanishing third moment on every level <= {l}"
            ))),
            _ => Ok(()),
        }
    }

    /// The bound at one `(h, T)`.
    #[allow(clippy::too_many_arguments)]
    pub fn total_bound(
        &self,
        n: u64,
        h: usize,
        t: Option<f64>,
        regime: Regime,
        rho_inf: Option<f64>,
        reference: &dyn ReferenceCdf,
        shape: BoundShape,
    ) -> Result<WindowBoundReport> {
        let l = self.base.length(n);
        self.ensure(l)?;
        check_window(l, h)?;
        self.check_regime(regime, l, rho_inf)?;
        let tau2 = self.tau2_ladder(l)?[h - 1];
        let qf_of = |t: f64| -> Result<f64> { Ok(concentration(reference, 1.0 / t)?.hi) };
        let parts = match (shape, regime) {
            (BoundShape::Corollary, _) | (BoundShape::Unified, Regime::B) => None,
            (BoundShape::Unified, _) => {
                let t = t.ok_or_else(|| Error::InvalidArgument("T required".into()))?;
                Some((t, qf_of(t)?))
            }
        };
        self.assemble(n, l, h, tau2, parts, regime, rho_inf, shape)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        &self,
        n: u64,
        l: usize,
        h: usize,
        tau2: f64,
        tq: Option<(f64, f64)>,
        regime: Regime,
        rho_inf: Option<f64>,
        shape: BoundShape,
    ) -> Result<WindowBoundReport> {
        let br = bridge_bound(self.base, n, h)?;
        let tau1 = tau1(self.map, self.base, l);
        let g = match (shape, tq) {
            (BoundShape::Unified, Some((t, _))) => regime_term(regime, t, tau2, rho_inf)?,
            (BoundShape::Unified, None) => regime_term(regime, 1.0, tau2, rho_inf)?,
            (BoundShape::Corollary, _) => corollary_term(regime, tau2, rho_inf)?,
        };
        let total = sum_total(br.height_free, libm::sqrt(tau1.unwrap_or(0.0)), tq, g);
        Ok(WindowBoundReport {
            n,
            l,
            h,
            a_lh: window_size(self.base, l, h)?,
            bridge: br.height_free,
            bridge_sharp: br.sharp,
            tau1,
            tau2,
            t: tq.map(|p| p.0),
            qf: tq.map(|p| p.1),
            g,
            total,
            regime,
            shape,
            conditional: tau1.is_none(),
        })
    }

    /// Exhaustive search over `h in 1..=L` (and the `T` grid where the
    /// shape uses `T`); ties go to smaller `h`, then larger `T`.
    pub fn optimize_window(
        &self,
        n: u64,
        regime: Regime,
        rho_inf: Option<f64>,
        reference: &dyn ReferenceCdf,
        shape: BoundShape,
    ) -> Result<WindowBoundReport> {
        let l = self.base.length(n);
        if l == 0 {
            return Err(Error::InvalidArgument(
                "optimize_window needs L(N) >= 1".into(),
            ));
        }
        self.ensure(l)?;
        self.check_regime(regime, l, rho_inf)?;
        let ladder = self.tau2_ladder(l)?;
        let uses_t = shape == BoundShape::Unified && regime != Regime::B;
        let ts: Vec<(f64, f64)> = if uses_t {
            (0..=T_GRID_MAX_EXP)
                .map(|k| {
                    let t = libm::ldexp(1.0, -(k as i32));
                    Ok((t, concentration(reference, 1.0 / t)?.hi))
                })
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        let tau1_root = libm::sqrt(tau1(self.map, self.base, l).unwrap_or(0.0));
        // (total, h, (T, Q_F(1/T)))
        let mut best: Option<(f64, usize, Option<(f64, f64)>)> = None;
        for h in 1..=l {
            let bridge = recip(&window_size(self.base, l, h)?);
            let tau2 = ladder[h - 1];
            let mut consider = |total: f64, tq: Option<(f64, f64)>| {
                if best.as_ref().is_none_or(|b| total < b.0) {
                    best = Some((total, h, tq));
                }
            };
            if uses_t {
                // Larger T first so equal totals keep the larger T.
                for &(t, qf) in &ts {
                    let g = regime_term(regime, t, tau2, rho_inf)?;
                    consider(
                        sum_total(bridge, tau1_root, Some((t, qf)), g),
                        Some((t, qf)),
                    );
                }
            } else {
                let g = match shape {
                    BoundShape::Corollary => corollary_term(regime, tau2, rho_inf)?,
                    BoundShape::Unified => regime_term(regime, 1.0, tau2, rho_inf)?,
                };
                consider(sum_total(bridge, tau1_root, None, g), None);
            }
        }
        let (_, h, tq) = best.expect("L >= 1 gives at least one candidate");
        self.assemble(n, l, h, ladder[h - 1], tq, regime, rho_inf, shape)
    }
}

fn sum_total(bridge: f64, tau1_root: f64, tq: Option<(f64, f64)>, g: f64) -> f64 {
    match tq {
        Some((t, qf)) => bridge + tau1_root + qf + 1.0 / t + g,
        None => bridge + tau1_root + g,
    }
}

/// The closed-form rates of the two worked examples.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "example", rename_all = "kebab-case"))]
pub enum RateFamily {
    /// Polynomial weights `j^{-alpha}`: `L^{-alpha/2} (log L)^{1/4}`.
    PolynomialTails { alpha: f64, q: u64 },
    /// Geometric weights `beta^j`: `N^{-gamma}`,
    /// `gamma = log(1/beta) / (log(1/beta) + 2 log q)`.
    GeometricTails { beta: f64, q: u64 },
}

/// `gamma(beta, q)` of the geometric example.
pub fn geometric_gamma(beta: f64, q: u64) -> f64 {
    let lb = libm::log(1.0 / beta);
    lb / (lb + 2.0 * libm::log(q as f64))
}

pub fn predicted_rate(family: RateFamily, n: u64) -> Result<f64> {
    let q = match family {
        RateFamily::PolynomialTails { q, .. } | RateFamily::GeometricTails { q, .. } => q,
    };
    if q < 2 || (n as u128) < (q as u128) * (q as u128) {
        return Err(Error::InvalidArgument(format!(
            "predicted rate needs N >= q^2, got N={n}, q={q}"
        )));
    }
    match family {
        RateFamily::PolynomialTails { alpha, .. } => {
            if !(alpha > 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "alpha must exceed 1, got {alpha}"
                )));
            }
            let mut l = 0u32;
            let mut p = q as u128;
            while p <= n as u128 {
                l += 1;
                p *= q as u128;
            }
            let lf = l as f64;
            Ok(libm::pow(lf, -alpha / 2.0) * libm::pow(libm::log(lf), 0.25))
        }
        RateFamily::GeometricTails { beta, .. } => {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "beta must lie in (0, 1), got {beta}"
                )));
            }
            Ok(libm::pow(n as f64, -geometric_gamma(beta, q)))
        }
    }
}

impl WindowBoundReport {
    /// `A(L,h) >= 2^h`, and the bridge is its reciprocal.
    pub fn is_consistent(&self) -> bool {
        self.a_lh >= (BigUint::from(1u32) << self.h) && !self.a_lh.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::{EmpiricalCdf, Uniform};
    use crate::qadditive::DigitTable;
    use alloc::vec;

    fn b(q: u64) -> CantorBase {
        CantorBase::constant(q).unwrap()
    }

    fn geo() -> DigitMap {
        DigitMap::Geometric {
            beta: 0.5,
            g: DigitTable::Identity,
        }
    }

    #[test]
    fn window_size_examples() {
        assert_eq!(window_size(&b(2), 10, 3).unwrap(), BigUint::from(8u32));
        assert_eq!(
            window_size(&CantorBase::factorial(), 5, 2).unwrap(),
            BigUint::from(30u32)
        );
        assert_eq!(window_size(&b(5), 7, 7).unwrap(), b(5).radix_weight(7));
        assert!(window_size(&b(2), 3, 0).is_err());
        assert!(window_size(&b(2), 3, 4).is_err());
    }

    #[test]
    fn tau_examples() {
        let t = tau2(&geo(), &b(2), 10, 10).unwrap();
        assert!((t - (1.0 - libm::pow(4.0, -10.0)) / 3.0).abs() < 1e-15);
        assert_eq!(tau2(&DigitMap::Zero, &b(2), 10, 4).unwrap(), 0.0);
        let s9 = geo().digit_stats(&b(2), 9).unwrap().var;
        assert_eq!(tau2(&geo(), &b(2), 10, 1).unwrap(), s9);
        let t1 = tau1(&geo(), &b(2), 10).unwrap();
        assert_eq!(t1, libm::pow(2.0, -11.0) + libm::pow(4.0, -11.0) / 3.0);
        assert_eq!(tau1(&DigitMap::Zero, &b(2), 10), Some(0.0));
        let c = DigitMap::CustomTable {
            levels: vec![vec![0.0, 1.0]],
            tail: None,
        };
        assert_eq!(tau1(&c, &b(2), 3), None);
    }

    #[test]
    fn regime_term_examples() {
        assert_eq!(regime_term(Regime::A, 1.0, 1.0, None).unwrap(), 1.0);
        assert!((regime_term(Regime::B, 0.3, 0.04, Some(1.0)).unwrap() - 0.2).abs() < 1e-15);
        assert!((regime_term(Regime::C, 0.5, 0.001, None).unwrap() - 0.0025).abs() < 1e-15);
        assert_eq!(
            regime_term(Regime::B, 1.0, 0.04, None),
            Err(Error::MissingDensityBound)
        );
        assert!(regime_term(Regime::A, 2.0, 0.04, None).is_err());
    }

    #[test]
    fn bridge_examples() {
        let br = bridge_bound(&b(2), 1 << 10, 3).unwrap();
        assert_eq!((br.sharp, br.height_free), (0.0, 0.125));
        let n = (1u64 << 10) + 1;
        let br = bridge_bound(&b(2), n, 1).unwrap();
        assert_eq!(br.remainder, 1);
        assert_eq!(br.sharp, 1.0 / n as f64);
        let br = bridge_bound(&b(3), 100, 4).unwrap();
        assert_eq!(br.height_free, 1.0 / 81.0);
    }

    #[test]
    fn zero_map_total_is_bridge() {
        let z = DigitMap::Zero;
        let base = b(2);
        let model = WindowModel::new(&z, &base, 20).unwrap();
        let point = EmpiricalCdf::from_samples(vec![0.0]).unwrap();
        let r = model
            .total_bound(
                1 << 12,
                5,
                None,
                Regime::B,
                Some(7.0),
                &point,
                BoundShape::Unified,
            )
            .unwrap();
        assert_eq!(r.total, r.bridge);
        let opt = model
            .optimize_window(1 << 12, Regime::B, Some(1.0), &point, BoundShape::Corollary)
            .unwrap();
        assert_eq!(opt.h, 12);
        let r = model
            .total_bound(
                1 << 12,
                3,
                Some(1.0),
                Regime::A,
                None,
                &point,
                BoundShape::Unified,
            )
            .unwrap();
        assert_eq!(r.total, r.bridge + 1.0 + 1.0);
    }

    #[test]
    fn regime_c_requires_vanishing_mu3() {
        let m = DigitMap::SkewedPolyweight;
        let base = b(4);
        let model = WindowModel::new(&m, &base, 12).unwrap();
        let u = Uniform::unit();
        assert!(matches!(
            model.optimize_window(1000, Regime::C, None, &u, BoundShape::Corollary),
            Err(Error::RegimeUnavailable(_))
        ));
        let t = DigitMap::SymmetricTernary;
        let base3 = b(3);
        let model = WindowModel::new(&t, &base3, 12).unwrap();
        assert!(model.mu3_vanishes(12).unwrap());
    }

    #[test]
    fn optimizer_matches_brute_force() {
        let map = geo();
        let base = b(2);
        let model = WindowModel::new(&map, &base, 20).unwrap();
        let u = Uniform::new(0.0, 2.0).unwrap();
        for shape in [BoundShape::Corollary, BoundShape::Unified] {
            for n in [300u64, 1 << 12, 99_999] {
                let opt = model
                    .optimize_window(n, Regime::A, None, &u, shape)
                    .unwrap();
                let l = base.length(n);
                let mut best = f64::INFINITY;
                for h in 1..=l {
                    let tgrid: Vec<Option<f64>> = match shape {
                        BoundShape::Unified => {
                            (0..=40).map(|k| Some(libm::ldexp(1.0, -k))).collect()
                        }
                        BoundShape::Corollary => vec![None],
                    };
                    for t in tgrid {
                        let r = model
                            .total_bound(n, h, t, Regime::A, None, &u, shape)
                            .unwrap();
                        best = best.min(r.total);
                    }
                }
                assert_eq!(opt.total, best, "n={n} {shape:?}");
            }
        }
    }

    #[test]
    fn optimized_total_monotone_in_levels() {
        let map = geo();
        let base = b(2);
        let model = WindowModel::new(&map, &base, 30).unwrap();
        let u = Uniform::new(0.0, 2.0).unwrap();
        let mut prev = f64::INFINITY;
        for k in 2..30 {
            let r = model
                .optimize_window(1 << k, Regime::A, None, &u, BoundShape::Corollary)
                .unwrap();
            assert!(r.total <= prev);
            assert!(r.is_consistent());
            prev = r.total;
        }
    }

    #[test]
    fn rates() {
        let g = geometric_gamma(0.5, 2);
        assert!((g - 1.0 / 3.0).abs() < 1e-15);
        let r = predicted_rate(RateFamily::GeometricTails { beta: 0.5, q: 2 }, 1 << 12).unwrap();
        assert!((r - libm::pow(4096.0, -1.0 / 3.0)).abs() < 1e-15);
        let r = predicted_rate(RateFamily::PolynomialTails { alpha: 2.0, q: 2 }, 1 << 16).unwrap();
        assert!((r - libm::pow(libm::log(16.0), 0.25) / 16.0).abs() < 1e-15);
        assert!(geometric_gamma(1.0 - 1e-12, 2) < 1e-11);
        assert!(predicted_rate(RateFamily::GeometricTails { beta: 0.5, q: 2 }, 3).is_err());
    }

    #[test]
    fn resolve() {
        assert_eq!(resolve_regime(None, Some(1.0), true), Regime::B);
        assert_eq!(resolve_regime(None, None, true), Regime::C);
        assert_eq!(resolve_regime(None, None, false), Regime::A);
        assert_eq!(resolve_regime(Some(Regime::A), Some(1.0), true), Regime::A);
    }
}

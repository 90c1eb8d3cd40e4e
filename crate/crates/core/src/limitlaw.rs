//! The limit law `F`: characteristic-function products with certified
//! truncation error, and two CDF constructions — lattice convolution of the
//! per-level digit laws (the reference) and Fourier inversion (a cross-check).

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::empirical::{Bracket, ReferenceCdf};
use crate::mixed_radix::CantorBase;
use crate::qadditive::DigitMap;
use crate::{Error, Result};

/// `phi_j(t) = (1/a_j) sum_d exp(i t f(d q_j))`.
pub fn cf_factor(map: &DigitMap, base: &CantorBase, j: usize, t: f64) -> Result<Complex64> {
    Ok(factor_of(&map.level_values(base, j)?, t))
}

fn factor_of(values: &[f64], t: f64) -> Complex64 {
    if t == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for &v in values {
        let (s, c) = libm::sincos(t * v);
        acc += Complex64::new(c, s);
    }
    acc / values.len() as f64
}

/// `prod_{j<=J} phi_j(t)` with the tail bound
/// `|prod_{j<=J} phi_j - phi| <= sum_{j>J} (|m_j| |t| + s_j^2 t^2 / 2)`.
#[derive(Debug, Clone)]
pub struct CfProduct {
    levels: Vec<Vec<f64>>,
    /// `(sum_{j>J} |m_j|, sum_{j>J} s_j^2)`, when tail metadata exists.
    tail: Option<(f64, f64)>,
    mean: f64,
}

impl CfProduct {
    /// Product over levels `0..=depth`.
    pub fn new(map: &DigitMap, base: &CantorBase, depth: usize) -> Result<Self> {
        let levels: Vec<Vec<f64>> = (0..=depth)
            .map(|j| map.level_values(base, j))
            .collect::<Result<_>>()?;
        let tail = map.tail_sums(base, depth).ok().map(|t| (t.mean, t.var));
        let mean = levels
            .iter()
            .map(|l| l.iter().sum::<f64>() / l.len() as f64)
            .sum();
        Ok(Self { levels, tail, mean })
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// Mean of the truncated law, `sum_{j<=J} m_j`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn tail(&self) -> Option<(f64, f64)> {
        self.tail
    }

    pub fn value(&self, t: f64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for l in &self.levels {
            acc *= factor_of(l, t);
        }
        acc
    }

    pub fn error_bound(&self, t: f64) -> Option<f64> {
        self.tail.map(|(m, s)| m * t.abs() + 0.5 * s * t * t)
    }

    pub fn eval(&self, t: f64) -> (Complex64, Option<f64>) {
        (self.value(t), self.error_bound(t))
    }
}

/// `(prod_{j<=J} phi_j(t), certified error)`; the error is `None` without
/// tail metadata.
pub fn cf_truncated(
    map: &DigitMap,
    base: &CantorBase,
    depth: usize,
    t: f64,
) -> Result<(Complex64, Option<f64>)> {
    Ok(CfProduct::new(map, base, depth)?.eval(t))
}

/// How many levels to convolve.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)
)]
pub enum DepthPolicy {
    /// Smallest `J` whose certified tail (sup bound, else variance tail)
    /// is at most the pitch, capped at `max_depth`.
    Auto {
        max_depth: usize,
    },
    Fixed {
        depth: usize,
    },
}

impl Default for DepthPolicy {
    fn default() -> Self {
        DepthPolicy::Auto { max_depth: 64 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct GridOptions {
    /// Knot spacing `w`.
    pub pitch: f64,
    /// Clip the lattice to `[lo, hi]`; mass pushed outside is dropped and
    /// charged to `eps_p`. `None` keeps the full support.
    pub range: Option<(f64, f64)>,
    pub depth: DepthPolicy,
    pub max_knots: usize,
    /// Largest acceptable `eps_p`.
    pub eps_p_ceiling: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            pitch: 1.0 / (1u64 << 16) as f64,
            range: None,
            depth: DepthPolicy::default(),
            max_knots: 1 << 23,
            eps_p_ceiling: 0.05,
        }
    }
}

/// A lattice CDF `G` with the guarantee
/// `G(x - eps_x) - eps_p <= F(x) <= G(x + eps_x) + eps_p`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridCdf {
    /// First knot, `k0 * w`.
    pub x0: f64,
    pub pitch: f64,
    /// `cum[k] = G(x0 + k w)`.
    pub cum: Vec<f64>,
    pub eps_x: f64,
    pub eps_p: f64,
    /// Number of levels convolved.
    pub levels: usize,
}

impl GridCdf {
    pub fn knot(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.pitch
    }

    pub fn len(&self) -> usize {
        self.cum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cum.is_empty()
    }

    /// `(x, G(x))` at every knot.
    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.cum
            .iter()
            .enumerate()
            .map(move |(k, &c)| (self.knot(k), c))
    }

    fn at(&self, x: f64) -> f64 {
        let t = (x - self.x0) / self.pitch;
        if t < 0.0 {
            0.0
        } else {
            let k = libm::floor(t);
            if k >= (self.cum.len() - 1) as f64 {
                self.cum[self.cum.len() - 1]
            } else {
                self.cum[k as usize]
            }
        }
    }

    fn at_left(&self, x: f64) -> f64 {
        let t = (x - self.x0) / self.pitch;
        let k = libm::ceil(t) - 1.0;
        if k < 0.0 {
            0.0
        } else if k >= (self.cum.len() - 1) as f64 {
            self.cum[self.cum.len() - 1]
        } else {
            self.cum[k as usize]
        }
    }

    /// `max_k G(x_k + s) - G(x_k)`-style lattice concentration: the largest
    /// mass on `ceil(s/w)` consecutive knots.
    fn lattice_concentration(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let m = libm::ceil(s / self.pitch);
        if m >= self.cum.len() as f64 {
            return self.cum[self.cum.len() - 1];
        }
        let m = m as usize;
        let mut best = self.cum[m - 1];
        for k in m..self.cum.len() {
            best = best.max(self.cum[k] - self.cum[k - m]);
        }
        best
    }
}

impl ReferenceCdf for GridCdf {
    fn cdf(&self, x: f64) -> f64 {
        self.at(x)
    }

    fn cdf_left(&self, x: f64) -> f64 {
        self.at_left(x)
    }

    fn band(&self, x: f64) -> (f64, f64) {
        (
            (self.at(x - self.eps_x) - self.eps_p).max(0.0),
            (self.at(x + self.eps_x) + self.eps_p).min(1.0),
        )
    }

    fn band_left(&self, x: f64) -> (f64, f64) {
        (
            (self.at_left(x - self.eps_x) - self.eps_p).max(0.0),
            (self.at_left(x + self.eps_x) + self.eps_p).min(1.0),
        )
    }

    fn support(&self) -> (f64, f64) {
        (
            self.x0 - self.eps_x,
            self.knot(self.cum.len() - 1) + self.eps_x,
        )
    }

    fn abs_gap_integral(&self, a: f64, b: f64, c: f64) -> Option<f64> {
        if b <= a {
            return Some(0.0);
        }
        // G is a step function with jumps at the knots.
        let mut acc = 0.0;
        let mut x = a;
        while x < b {
            let t = (x - self.x0) / self.pitch;
            let next_k = if t < 0.0 { 0.0 } else { libm::floor(t) + 1.0 };
            let next = if next_k >= self.cum.len() as f64 {
                b
            } else {
                (self.x0 + next_k * self.pitch).min(b)
            };
            acc += (next - x) * (c - self.at(x)).abs();
            if next <= x {
                break;
            }
            x = next;
        }
        Some(acc)
    }

    fn w1_slack(&self) -> f64 {
        // W1(F, G) <= E|X - Y| <= eps_x, plus eps_p of unplaced mass spread
        // over at most the support width.
        let (a, b) = self.support();
        self.eps_x + self.eps_p * (b - a)
    }

    fn concentration(&self, r: f64) -> Option<Bracket> {
        let hi = (self.lattice_concentration(r + 2.0 * self.eps_x) + 2.0 * self.eps_p).min(1.0);
        let lo = (self.lattice_concentration(r - 2.0 * self.eps_x) - 2.0 * self.eps_p).max(0.0);
        Some(Bracket { lo: lo.min(hi), hi })
    }
}

/// Chooses the depth and the tail treatment `(J, eps_x_tail, eps_p_tail)`.
fn tail_plan(map: &DigitMap, base: &CantorBase, opts: &GridOptions) -> (usize, f64, f64) {
    let w = opts.pitch;
    let tail_at = |jj: usize| -> (f64, f64) {
        // Deterministic shift bound, or Chebyshev with delta = var^{1/3}.
        let sup = map.tail_sup(base, jj);
        let cheb = if jj == 0 {
            None
        } else {
            map.tail_sums(base, jj - 1)
                .ok()
                .filter(|t| t.var.is_finite())
                .map(|t| {
                    let d = libm::cbrt(t.var);
                    (d, d)
                })
        };
        match (sup, cheb) {
            (Some(s), Some((d, p))) if 2.0 * d < s => (d, p),
            (Some(s), _) => (s, 0.0),
            (None, Some(c)) => c,
            (None, None) => (f64::INFINITY, 0.0),
        }
    };
    match opts.depth {
        DepthPolicy::Fixed { depth } => {
            let (x, p) = tail_at(depth);
            (depth, x, p)
        }
        DepthPolicy::Auto { max_depth } => {
            for jj in 1..=max_depth.max(1) {
                let sup = map.tail_sup(base, jj);
                let small = match sup {
                    Some(s) => s <= w,
                    None => map
                        .tail_sums(base, jj - 1)
                        .map(|t| t.var <= w)
                        .unwrap_or(false),
                };
                if small {
                    let (x, p) = tail_at(jj);
                    return (jj, x, p);
                }
            }
            let jj = max_depth.max(1);
            let (x, p) = tail_at(jj);
            (jj, x, p)
        }
    }
}

/// Convolves the per-level digit laws of levels `0..J` on the lattice
/// `w Z`, each atom rounded to the nearest knot.
pub fn limit_cdf_conv(map: &DigitMap, base: &CantorBase, opts: &GridOptions) -> Result<GridCdf> {
    let w = opts.pitch;
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!(
            "pitch must be > 0, got {w}"
        )));
    }
    let (depth, tail_x, tail_p) = tail_plan(map, base, opts);
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be >= 1".into()));
    }
    let mut atoms: Vec<Vec<i64>> = Vec::with_capacity(depth);
    let (mut kmin, mut kmax) = (0i64, 0i64);
    // Summed worst rounding shift; zero when every atom sits on a knot.
    let mut shift = 0.0f64;
    for j in 0..depth {
        let values = map.level_values(base, j)?;
        let idx: Vec<i64> = values.iter().map(|v| libm::round(v / w) as i64).collect();
        let worst = values
            .iter()
            .zip(&idx)
            .map(|(&v, &k)| libm::fabs(libm::fma(k as f64, w, -v)))
            .fold(0.0f64, f64::max);
        // fma leaves one rounding; a relative ulp covers it.
        shift += worst * (1.0 + f64::EPSILON);
        kmin += *idx.iter().min().expect("nonempty level");
        kmax += *idx.iter().max().expect("nonempty level");
        atoms.push(idx);
    }
    let (lo, hi) = match opts.range {
        Some((a, b)) => {
            if !(a < b) {
                return Err(Error::InvalidArgument("empty grid range".into()));
            }
            (
                kmin.max(libm::floor(a / w) as i64),
                kmax.min(libm::ceil(b / w) as i64),
            )
        }
        None => (kmin, kmax),
    };
    if hi < lo {
        return Err(Error::RangeTooSmall {
            eps_p: 1.0,
            ceiling: opts.eps_p_ceiling,
        });
    }
    let knots = (hi - lo + 1) as u64;
    if knots > opts.max_knots as u64 {
        return Err(Error::ResourceLimit {
            requested: knots,
            cap: opts.max_knots as u64,
        });
    }
    let n = knots as usize;

    // Partial sums over levels 0..j live in [lo_j, hi_j] before clipping.
    let mut mass = alloc::vec![0.0f64; n];
    let mut cur_lo = 0i64;
    let mut cur_hi = 0i64;
    let mut dropped = 0.0;
    if (lo..=hi).contains(&0) {
        mass[(0 - lo) as usize] = 1.0;
    } else {
        return Err(Error::InvalidArgument("grid range must contain 0".into()));
    }
    let mut next = alloc::vec![0.0f64; n];
    for idx in &atoms {
        let p = 1.0 / idx.len() as f64;
        let new_lo = (cur_lo + idx.iter().min().unwrap()).max(lo);
        let new_hi = (cur_hi + idx.iter().max().unwrap()).min(hi);
        if new_lo > new_hi {
            return Err(Error::RangeTooSmall {
                eps_p: 1.0,
                ceiling: opts.eps_p_ceiling,
            });
        }
        for v in next[(new_lo - lo) as usize..=(new_hi - lo) as usize].iter_mut() {
            *v = 0.0;
        }
        for k in cur_lo..=cur_hi {
            let m = mass[(k - lo) as usize];
            if m == 0.0 {
                continue;
            }
            let pm = m * p;
            for &d in idx {
                let t = k + d;
                if t < lo || t > hi {
                    dropped += pm;
                } else {
                    next[(t - lo) as usize] += pm;
                }
            }
        }
        for v in mass[(cur_lo - lo) as usize..=(cur_hi - lo) as usize].iter_mut() {
            *v = 0.0;
        }
        core::mem::swap(&mut mass, &mut next);
        cur_lo = new_lo;
        cur_hi = new_hi;
    }

    let eps_p = dropped + tail_p;
    if eps_p > opts.eps_p_ceiling {
        return Err(Error::RangeTooSmall {
            eps_p,
            ceiling: opts.eps_p_ceiling,
        });
    }
    let mut cum = Vec::with_capacity(n);
    let mut acc = 0.0;
    for m in &mass {
        acc += m;
        cum.push(acc.min(1.0));
    }
    Ok(GridCdf {
        x0: lo as f64 * w,
        pitch: w,
        cum,
        eps_x: shift + tail_x,
        eps_p,
        levels: depth,
    })
}

/// Step of the inversion quadrature and the default frequency cutoff.
pub const INVERSION_STEP: f64 = 1.0 / 32.0;
pub const DEFAULT_T_MAX: f64 = 1024.0;
/// `max |phi|` on `[T_max/2, T_max]` above which inversion is refused.
pub const DECAY_CEILING: f64 = 0.05;

/// CDF values from Fourier inversion, each with a vertical error envelope.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InvertedCdf {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub envelope: Vec<f64>,
}

/// `F(x) = 1/2 - (1/pi) int_0^{T_max} Im(exp(-itx) phi(t))/t dt`, trapezoidal
/// with step `1/32`.
///
/// The envelope per point is the Richardson estimate `|I_h - I_2h|/3`, plus
/// the CF truncation term `(M T + S T^2/4)/pi`, plus the cutoff allowance
/// `1/T_max`.
pub fn limit_cdf_invert(cf: &CfProduct, xs: &[f64], t_max: f64) -> Result<InvertedCdf> {
    if !(t_max >= 1.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "T_max must be >= 1, got {t_max}"
        )));
    }
    let (m, s) = cf.tail().ok_or(Error::NoTailMeta)?;
    let h = INVERSION_STEP;
    let steps = libm::ceil(t_max / h) as usize;
    // An even number of steps so the coarse rule uses every other node.
    let steps = steps + steps % 2;
    let t_top = steps as f64 * h;
    let phi: Vec<Complex64> = (0..=steps).map(|k| cf.value(k as f64 * h)).collect();
    let tail_mod = phi[steps / 2..]
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max);
    if tail_mod > DECAY_CEILING {
        return Err(Error::NonIntegrable {
            tail: tail_mod,
            ceiling: DECAY_CEILING,
        });
    }
    let trunc = (m * t_top + s * t_top * t_top / 4.0) / PI;
    let mean = cf.mean();
    // Rotations exp(-i k h x) are accumulated by multiplication, re-seeded
    // every 256 steps to bound drift.
    let mut values = Vec::with_capacity(xs.len());
    let mut envelope = Vec::with_capacity(xs.len());
    for &x in xs {
        let (sh, ch) = libm::sincos(-h * x);
        let step = Complex64::new(ch, sh);
        let mut rot = Complex64::new(1.0, 0.0);
        let (mut fine, mut coarse) = (0.0, 0.0);
        for (k, z) in phi.iter().enumerate() {
            if k % 256 == 0 {
                let (s, c) = libm::sincos(-(k as f64) * h * x);
                rot = Complex64::new(c, s);
            }
            let val = if k == 0 {
                mean - x
            } else {
                (rot * z).im / (k as f64 * h)
            };
            let wgt = if k == 0 || k == steps { 0.5 } else { 1.0 };
            fine += wgt * val;
            if k % 2 == 0 {
                coarse += wgt * val;
            }
            rot *= step;
        }
        let fine = fine * h;
        let coarse = coarse * 2.0 * h;
        values.push(0.5 - fine / PI);
        envelope.push((fine - coarse).abs() / (3.0 * PI) + trunc + 1.0 / t_top);
    }
    Ok(InvertedCdf {
        xs: xs.to_vec(),
        values,
        envelope,
    })
}

//! Empirical laws of `{f(n) : 0 <= n < N}` and the distances measured
//! against them.

use alloc::vec::Vec;

use crate::mixed_radix::CantorBase;
use crate::qadditive::{eval_range, DigitMap, LevelTables};
use crate::{Error, Result};

/// Default enumeration cap, `2^24` samples.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

/// A certified interval `[lo, hi]` around a quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn exact(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// A CDF we can measure an empirical law against.
///
/// `band`/`band_left` return certified enclosures of `F(x)` and `F(x-)`;
/// exact references return degenerate bands.
pub trait ReferenceCdf {
    fn cdf(&self, x: f64) -> f64;

    fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x)
    }

    fn band(&self, x: f64) -> (f64, f64) {
        let v = self.cdf(x);
        (v, v)
    }

    fn band_left(&self, x: f64) -> (f64, f64) {
        let v = self.cdf_left(x);
        (v, v)
    }

    /// An interval outside which `F` is 0 (left) or 1 (right), up to the
    /// reference's own vertical slack.
    fn support(&self) -> (f64, f64);

    /// `int_a^b |c - F(x)| dx` when the reference can integrate exactly.
    fn abs_gap_integral(&self, _a: f64, _b: f64, _c: f64) -> Option<f64> {
        None
    }

    /// Extra W1 error from the reference's own uncertainty.
    fn w1_slack(&self) -> f64 {
        0.0
    }

    /// Exact (or specially certified) concentration function, if known.
    fn concentration(&self, _r: f64) -> Option<Bracket> {
        None
    }
}

/// `Unif[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    pub a: f64,
    pub b: f64,
}

impl Uniform {
    pub fn unit() -> Self {
        Self { a: 0.0, b: 1.0 }
    }

    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a.is_finite() && b.is_finite() && a < b {
            Ok(Self { a, b })
        } else {
            Err(Error::InvalidArgument(alloc::format!(
                "bad uniform interval [{a}, {b}]"
            )))
        }
    }
}

/// `int_{u1}^{u2} |c - u| du`.
fn abs_linear_integral(c: f64, u1: f64, u2: f64) -> f64 {
    let g = |u: f64| {
        let d = u - c;
        0.5 * d * d.abs()
    };
    g(u2) - g(u1)
}

impl ReferenceCdf for Uniform {
    fn cdf(&self, x: f64) -> f64 {
        ((x - self.a) / (self.b - self.a)).clamp(0.0, 1.0)
    }

    fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn abs_gap_integral(&self, s: f64, t: f64, c: f64) -> Option<f64> {
        if t <= s {
            return Some(0.0);
        }
        let w = self.b - self.a;
        let mut acc = 0.0;
        // Left flat part (F = 0), linear part, right flat part (F = 1).
        let left = t.min(self.a) - s.min(self.a);
        acc += left.max(0.0) * c.abs();
        let (l1, l2) = (s.clamp(self.a, self.b), t.clamp(self.a, self.b));
        if l2 > l1 {
            acc += w * abs_linear_integral(c, (l1 - self.a) / w, (l2 - self.a) / w);
        }
        let right = t.max(self.b) - s.max(self.b);
        acc += right.max(0.0) * (1.0 - c).abs();
        Some(acc)
    }

    fn concentration(&self, r: f64) -> Option<Bracket> {
        Some(Bracket::exact((r / (self.b - self.a)).min(1.0)))
    }
}

/// Sorted multiset of samples with exact step-function evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    samples: Vec<f64>,
}

impl EmpiricalCdf {
    /// Sorts `samples` (NaN is rejected).
    pub fn from_samples(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument(
                "empirical CDF needs at least one sample".into(),
            ));
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("NaN sample".into()));
        }
        samples.sort_unstable_by(f64::total_cmp);
        Ok(Self { samples })
    }

    /// `{f(n) : 0 <= n < N}`.
    pub fn enumerate(map: &DigitMap, base: &CantorBase, n: u64, cap: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("N must be >= 1".into()));
        }
        if n > cap {
            return Err(Error::ResourceLimit { requested: n, cap });
        }
        let tables = LevelTables::new(map, base, base.length(n - 1))?;
        let mut out = alloc::vec![0.0; n as usize];
        eval_range(base, &tables, 0, &mut out);
        Self::from_samples(out)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of samples `<= x`.
    pub fn count_le(&self, x: f64) -> usize {
        self.samples.partition_point(|&s| s <= x)
    }

    /// Number of samples `< x`.
    pub fn count_lt(&self, x: f64) -> usize {
        self.samples.partition_point(|&s| s < x)
    }

    /// `(x, #{< x}, #{<= x})` for every distinct sample value `x`.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, usize, usize)> + '_ {
        let s = &self.samples;
        let mut i = 0;
        core::iter::from_fn(move || {
            if i >= s.len() {
                return None;
            }
            let x = s[i];
            let lo = i;
            while i < s.len() && s[i] == x {
                i += 1;
            }
            Some((x, lo, i))
        })
    }

    /// `(x, F_N(x))` at every jump.
    pub fn knots(&self) -> Vec<(f64, f64)> {
        let n = self.len() as f64;
        self.jumps().map(|(x, _, hi)| (x, hi as f64 / n)).collect()
    }
}

impl ReferenceCdf for EmpiricalCdf {
    fn cdf(&self, x: f64) -> f64 {
        self.count_le(x) as f64 / self.len() as f64
    }

    fn cdf_left(&self, x: f64) -> f64 {
        self.count_lt(x) as f64 / self.len() as f64
    }

    fn support(&self) -> (f64, f64) {
        (self.samples[0], self.samples[self.len() - 1])
    }

    fn abs_gap_integral(&self, a: f64, b: f64, c: f64) -> Option<f64> {
        if b <= a {
            return Some(0.0);
        }
        let n = self.len() as f64;
        let mut acc = 0.0;
        let mut x = a;
        let mut k = self.count_le(a);
        while x < b {
            let next = if k < self.len() {
                self.samples[k].min(b)
            } else {
                b
            };
            acc += (next - x) * (c - k as f64 / n).abs();
            x = next;
            while k < self.len() && self.samples[k] <= x {
                k += 1;
            }
        }
        Some(acc)
    }

    fn concentration(&self, r: f64) -> Option<Bracket> {
        // sup_x #(x, x + r] = max_i #[s_i, s_i + r).
        let s = &self.samples;
        let mut best = 0;
        let mut j = 0;
        for i in 0..s.len() {
            if j < i {
                j = i;
            }
            while j < s.len() && s[j] < s[i] + r {
                j += 1;
            }
            best = best.max(j - i);
        }
        Some(Bracket::exact(best as f64 / s.len() as f64))
    }
}

/// `sup_x |F_N(x) - F(x)|`, evaluated at the jumps of `F_N` from both sides.
///
/// The result brackets the true distance using the reference's bands; for an
/// exact reference `lo == hi`.
pub fn kolmogorov(ecdf: &EmpiricalCdf, reference: &dyn ReferenceCdf) -> Bracket {
    let n = ecdf.len() as f64;
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for (x, below, upto) in ecdf.jumps() {
        let fn_at = upto as f64 / n;
        let fn_before = below as f64 / n;
        let (l, u) = reference.band(x);
        let (ll, ul) = reference.band_left(x);
        hi = hi.max(fn_at - l).max(ul - fn_before);
        lo = lo.max(fn_at - u).max(ll - fn_before);
    }
    Bracket { lo, hi: hi.max(lo) }
}

/// Result of [`wasserstein1`]: the value and an error tolerance (zero when
/// the reference integrates exactly).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct W1 {
    pub value: f64,
    pub tol: f64,
}

/// `int |F_N(x) - F(x)| dx`, piecewise between consecutive jumps of `F_N`.
pub fn wasserstein1(ecdf: &EmpiricalCdf, reference: &dyn ReferenceCdf) -> W1 {
    let n = ecdf.len() as f64;
    let (s_lo, s_hi) = reference.support();
    let first = ecdf.samples()[0];
    let last = ecdf.samples()[ecdf.len() - 1];
    let lo = s_lo.min(first);
    let hi = s_hi.max(last);
    let mut value = 0.0;
    let mut tol = reference.w1_slack();
    let mut piece = |a: f64, b: f64, c: f64| {
        if b <= a {
            return;
        }
        match reference.abs_gap_integral(a, b, c) {
            Some(v) => value += v,
            None => {
                let (v, e) = adaptive_simpson(&|x| (c - reference.cdf(x)).abs(), a, b, 1e-12, 40);
                value += v;
                tol += e;
            }
        }
    };
    let mut prev_x = lo;
    let mut prev_level = 0.0;
    for (x, _, upto) in ecdf.jumps() {
        piece(prev_x, x, prev_level);
        prev_x = x;
        prev_level = upto as f64 / n;
    }
    piece(prev_x, hi, prev_level);
    W1 { value, tol }
}

/// Adaptive Simpson; returns `(integral, error estimate)`.
pub fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    eps: f64,
    depth: u32,
) -> (f64, f64) {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            (left + right + delta / 15.0, delta.abs() / 15.0)
        } else {
            let (l, el) = rec(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1);
            let (r, er) = rec(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1);
            (l + r, el + er)
        }
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, eps, depth)
}

/// `Q_F(r) = sup_x F(x + r) - F(x)`.
///
/// References with an exact concentration function answer directly.
/// Otherwise the sup is scanned on a grid of pitch `p <= r/16` (coarsened to
/// at most `2^20` points); `lo` is the best grid value and `hi` the certified
/// `max_k upper(x_k + r + p) - lower(x_k)`.
pub fn concentration(reference: &dyn ReferenceCdf, r: f64) -> Result<Bracket> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "width must be > 0, got {r}"
        )));
    }
    if let Some(b) = reference.concentration(r) {
        return Ok(b);
    }
    let (a, b) = reference.support();
    let start = a - r;
    let span = b - start;
    let mut p = r / 16.0;
    if span / p > (1u64 << 20) as f64 {
        p = span / (1u64 << 20) as f64;
    }
    let steps = libm::ceil(span / p) as usize + 1;
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for k in 0..=steps {
        let x = start + k as f64 * p;
        lo = lo.max(reference.cdf(x + r) - reference.cdf(x));
        hi = hi.max(reference.band(x + r + p).1 - reference.band(x).0);
    }
    Ok(Bracket {
        lo: lo.clamp(0.0, 1.0),
        hi: hi.clamp(0.0, 1.0).max(lo),
    })
}

/// Exact 1-D star discrepancy
/// `max_i max(i/N - x_(i), x_(i) - (i-1)/N)` over the sorted points.
pub fn star_discrepancy(points: &[f64]) -> Result<f64> {
    if let Some(&p) = points.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::PointOutOfRange(p));
    }
    if points.is_empty() {
        return Ok(0.0);
    }
    let mut sorted = points.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        d = d.max((i + 1) as f64 / n - x).max(x - i as f64 / n);
    }
    Ok(d)
}

/// An exact nonnegative rational `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: u128,
    pub den: u128,
}

impl Ratio {
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Star discrepancy of `N` points on the grid `{k/M : 0 <= k < M}`, where
/// `counts[k]` is the multiplicity of `k/M` and `M = counts.len()`.
///
/// Works in integers: `M N D* = max_k max(M P(k) - N k, N k - M P(k-1))`
/// over occupied `k`, with `P` the prefix counts.
pub fn star_discrepancy_on_grid(counts: &[u32]) -> Ratio {
    let m = counts.len() as u128;
    let n: u128 = counts.iter().map(|&c| c as u128).sum();
    let mut best: i128 = 0;
    let mut prefix: u128 = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let before = prefix;
        prefix += c as u128;
        let nk = (n * k as u128) as i128;
        best = best
            .max((m * prefix) as i128 - nk)
            .max(nk - (m * before) as i128);
    }
    Ratio {
        num: best as u128,
        den: m * n.max(1),
    }
}

/// One row of [`smoothing_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SmoothingRow {
    pub sigma: f64,
    /// `W1/sigma + rho_inf * sigma`.
    pub bound: f64,
    /// `d_K` (upper end) exceeds `bound`: a unit-constant violation.
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SmoothingReport {
    pub dk: Bracket,
    pub w1: W1,
    pub rows: Vec<SmoothingRow>,
    /// `2 sqrt(rho_inf W1)`, the bound at the optimal `sigma`.
    pub optimized: f64,
    pub optimized_holds: bool,
}

/// Compares `d_K(G, H)` with the heat-kernel smoothing bound
/// `W1/sigma + rho_inf sigma` on each `sigma`, and with its optimum.
pub fn smoothing_check(
    g: &EmpiricalCdf,
    h: &dyn ReferenceCdf,
    rho_inf: f64,
    sigmas: &[f64],
) -> SmoothingReport {
    let dk = kolmogorov(g, h);
    let w1 = wasserstein1(g, h);
    let rows = sigmas
        .iter()
        .map(|&sigma| {
            let bound = w1.value / sigma + rho_inf * sigma;
            SmoothingRow {
                sigma,
                bound,
                violated: dk.hi > bound,
            }
        })
        .collect();
    let optimized = 2.0 * libm::sqrt(rho_inf * w1.value);
    SmoothingReport {
        dk,
        w1,
        rows,
        optimized,
        optimized_holds: dk.hi <= optimized,
    }
}

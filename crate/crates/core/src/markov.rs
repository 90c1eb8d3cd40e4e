//! Finite-state digit sources with a spectral gap: construction, stationary
//! simulation, covariance decay and window-variance inflation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::{Error, Result};

/// Sample paths per generator stream; fixes the results independently of
/// how paths are later split across workers.
pub const PATHS_PER_STREAM: u64 = 1 << 12;

/// A primitive row-stochastic transition matrix on digits `0..a`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DigitChain {
    /// Row-major `a x a`.
    p: Vec<f64>,
    a: usize,
    pi: Vec<f64>,
    lambda: f64,
    #[cfg_attr(feature = "serde", serde(skip))]
    cum: Vec<f64>,
}

type Mat = Vec<f64>;

fn matmul(x: &[f64], y: &[f64], n: usize) -> Mat {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let xik = x[i * n + k];
            if xik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += xik * y[k * n + j];
            }
        }
    }
    out
}

fn inf_norm(x: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|i| x[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Some power of the pattern is strictly positive. Uses Wielandt's bound
/// `(a-1)^2 + 1`: a primitive matrix has every power beyond it positive.
fn is_primitive(p: &[f64], n: usize) -> bool {
    let mut b: Vec<bool> = p.iter().map(|&v| v > 0.0).collect();
    let bound = (n - 1) * (n - 1) + 1;
    let mut power = 1;
    loop {
        if power >= bound {
            return b.iter().all(|&x| x);
        }
        let mut sq = vec![false; n * n];
        for i in 0..n {
            for k in 0..n {
                if b[i * n + k] {
                    for j in 0..n {
                        sq[i * n + j] |= b[k * n + j];
                    }
                }
            }
        }
        b = sq;
        power *= 2;
    }
}

impl DigitChain {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let a = rows.len();
        if a == 0 {
            return Err(Error::NotStochastic("empty matrix".into()));
        }
        let mut p = Vec::with_capacity(a * a);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != a {
                return Err(Error::NotStochastic(format!(
                    "row {i} has {} entries, expected {a}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::NotStochastic(format!(
                    "row {i} has a negative or non-finite entry"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::NotStochastic(format!("row {i} sums to {s}")));
            }
            p.extend_from_slice(row);
        }
        if !is_primitive(&p, a) {
            return Err(Error::NotPrimitive);
        }
        let pi = stationary(&p, a);
        let lambda = second_modulus(&p, &pi, a);
        let mut cum = Vec::with_capacity(a * a);
        for i in 0..a {
            let mut acc = 0.0;
            for j in 0..a {
                acc += p[i * a + j];
                cum.push(acc);
            }
        }
        Ok(Self {
            p,
            a,
            pi,
            lambda,
            cum,
        })
    }

    pub fn states(&self) -> usize {
        self.a
    }

    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.a + j]
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    /// Modulus of the second-largest eigenvalue.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn step(&self, from: usize, u: f64) -> usize {
        let row = &self.cum[from * self.a..(from + 1) * self.a];
        row.iter().position(|&c| u < c).unwrap_or(self.a - 1)
    }

    fn initial(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, &w) in self.pi.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.a - 1
    }

    /// `E_pi[g]` and `Var_pi[g]`.
    pub fn moments(&self, values: &[f64]) -> Result<(f64, f64)> {
        self.check_values(values)?;
        let mean: f64 = self.pi.iter().zip(values).map(|(p, v)| p * v).sum();
        let var = self
            .pi
            .iter()
            .zip(values)
            .map(|(p, v)| p * (v - mean) * (v - mean))
            .sum();
        Ok((mean, var))
    }

    fn check_values(&self, values: &[f64]) -> Result<()> {
        if values.len() == self.a {
            Ok(())
        } else {
            Err(Error::AlphabetMismatch {
                chain: self.a,
                map: values.len(),
            })
        }
    }
}

/// `pi` from the rows of `P^{2^k}`, polished by a few `pi P` steps.
fn stationary(p: &[f64], n: usize) -> Vec<f64> {
    let mut m = p.to_vec();
    for _ in 0..64 {
        let next = matmul(&m, &m, n);
        let spread = (0..n)
            .map(|j| {
                let col = (0..n).map(|i| next[i * n + j]);
                let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
                    (l.min(v), h.max(v))
                });
                hi - lo
            })
            .fold(0.0, f64::max);
        m = next;
        if spread < 1e-15 {
            break;
        }
    }
    let mut pi: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| m[i * n + j]).sum::<f64>() / n as f64)
        .collect();
    for _ in 0..8 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[j] += pi[i] * p[i * n + j];
            }
        }
        let s: f64 = next.iter().sum();
        pi = next.into_iter().map(|v| v / s).collect();
    }
    pi
}

/// Spectral radius of `P - 1 pi` by Gelfand's formula
/// `lim ||M^k||^{1/k}`, with normalized repeated squaring up to `k = 2^40`.
fn second_modulus(p: &[f64], pi: &[f64], n: usize) -> f64 {
    let mut m: Mat = (0..n * n).map(|idx| p[idx] - pi[idx % n]).collect();
    let nu = inf_norm(&m, n);
    if nu == 0.0 {
        return 0.0;
    }
    m.iter_mut().for_each(|v| *v /= nu);
    // log ||M^{2^k}|| = log_scale + log ||m||.
    let mut log_scale = libm::log(nu);
    let mut k_pow = 1.0f64;
    for _ in 0..40 {
        m = matmul(&m, &m, n);
        log_scale *= 2.0;
        k_pow *= 2.0;
        let nu = inf_norm(&m, n);
        if nu == 0.0 || !nu.is_finite() {
            return 0.0;
        }
        m.iter_mut().for_each(|v| *v /= nu);
        log_scale += libm::log(nu);
    }
    let lambda = libm::exp(log_scale / k_pow);
    if lambda < 1e-12 {
        0.0
    } else {
        lambda.min(1.0)
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A stationary path of length `len` (`X_0 ~ pi`).
pub fn generate(chain: &DigitChain, len: usize, seed: u64) -> Vec<u32> {
    let mut rng = stream(seed, 0);
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    let mut x = chain.initial(uniform(&mut rng));
    out.push(x as u32);
    for _ in 1..len {
        x = chain.step(x, uniform(&mut rng));
        out.push(x as u32);
    }
    out
}

/// Streaming mean / variance (Welford), mergeable.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Welford) {
        if o.n == 0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * self.n as f64 * o.n as f64 / n as f64;
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        if self.n == 0 {
            f64::INFINITY
        } else {
            libm::sqrt(self.variance() / self.n as f64)
        }
    }
}

/// Runs `samples` independent stationary paths of length `len` and feeds
/// each to `visit`. Path `i` uses stream `i / PATHS_PER_STREAM`.
fn paths(chain: &DigitChain, len: usize, samples: u64, seed: u64, mut visit: impl FnMut(&[u32])) {
    let mut buf = vec![0u32; len];
    let streams = samples.div_ceil(PATHS_PER_STREAM);
    for s in 0..streams {
        let mut rng = stream(seed, s);
        let count = PATHS_PER_STREAM.min(samples - s * PATHS_PER_STREAM);
        for _ in 0..count {
            let mut x = chain.initial(uniform(&mut rng));
            buf[0] = x as u32;
            for slot in buf.iter_mut().skip(1) {
                x = chain.step(x, uniform(&mut rng));
                *slot = x as u32;
            }
            visit(&buf);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LagEstimate {
    pub r: usize,
    pub cov: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CovarianceDecay {
    pub lags: Vec<LagEstimate>,
    /// Lags used by the fit (`|cov| > 5 se`).
    pub fitted: Vec<usize>,
    /// Slope of `log |cov|` against `r`; `None` with fewer than two usable lags.
    pub slope: Option<f64>,
    /// 95% half-width of the slope.
    pub half_width: Option<f64>,
}

/// Monte Carlo `Cov(Y_0, Y_r)`, `r = 1..=r_max`, for `Y = values[X]` under
/// the stationary chain, plus a weighted log-linear fit of the decay.
pub fn covariance_decay(
    chain: &DigitChain,
    values: &[f64],
    r_max: usize,
    samples: u64,
    seed: u64,
) -> Result<CovarianceDecay> {
    if r_max < 2 {
        return Err(Error::InvalidArgument("r_max must be >= 2".into()));
    }
    let (mu, _) = chain.moments(values)?;
    let mut acc = vec![Welford::default(); r_max];
    paths(chain, r_max + 1, samples, seed, |path| {
        let y0 = values[path[0] as usize] - mu;
        for r in 1..=r_max {
            acc[r - 1].push(y0 * (values[path[r] as usize] - mu));
        }
    });
    let lags: Vec<LagEstimate> = acc
        .iter()
        .enumerate()
        .map(|(i, w)| LagEstimate {
            r: i + 1,
            cov: w.mean,
            se: w.se(),
        })
        .collect();
    let use_: Vec<&LagEstimate> = lags.iter().filter(|l| l.cov.abs() > 5.0 * l.se).collect();
    let fitted = use_.iter().map(|l| l.r).collect();
    let (slope, half_width) = if use_.len() >= 2 {
        // Var(log|cov|) ~ (se/cov)^2.
        let w: Vec<f64> = use_
            .iter()
            .map(|l| (l.cov / l.se) * (l.cov / l.se))
            .collect();
        let sw: f64 = w.iter().sum();
        let rbar = use_
            .iter()
            .zip(&w)
            .map(|(l, w)| w * l.r as f64)
            .sum::<f64>()
            / sw;
        let ybar = use_
            .iter()
            .zip(&w)
            .map(|(l, w)| w * libm::log(l.cov.abs()))
            .sum::<f64>()
            / sw;
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for (l, w) in use_.iter().zip(&w) {
            let dx = l.r as f64 - rbar;
            sxx += w * dx * dx;
            sxy += w * dx * (libm::log(l.cov.abs()) - ybar);
        }
        (Some(sxy / sxx), Some(1.96 * libm::sqrt(1.0 / sxx)))
    } else {
        (None, None)
    };
    Ok(CovarianceDecay {
        lags,
        fitted,
        slope,
        half_width,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WindowVariance {
    pub h: usize,
    /// Monte Carlo `Var(R_{L,h})` and its standard error.
    pub var: f64,
    pub se: f64,
    /// `sum_{j=L-h}^{L-1} w_j^2 Var_pi(g)`.
    pub tau2: f64,
    pub lambda_h: f64,
    /// `var / (tau2 + lambda^h)`.
    pub ratio: f64,
}

/// `Var(R_{L,h})` for every `h = 1..=L`, where
/// `R_{L,h} = sum_{j=L-h}^{L-1} w_j (g(X_j) - E_pi g)` and `L = weights.len()`.
pub fn window_variance_profile(
    chain: &DigitChain,
    values: &[f64],
    weights: &[f64],
    samples: u64,
    seed: u64,
) -> Result<Vec<WindowVariance>> {
    let l = weights.len();
    if l == 0 {
        return Err(Error::InvalidArgument("need at least one level".into()));
    }
    let (mu, var_pi) = chain.moments(values)?;
    let mut acc = vec![Welford::default(); l];
    paths(chain, l, samples, seed, |path| {
        let mut r = 0.0;
        for h in 1..=l {
            let j = l - h;
            r += weights[j] * (values[path[j] as usize] - mu);
            acc[h - 1].push(r * r);
        }
    });
    let mut tau2 = 0.0;
    Ok((1..=l)
        .map(|h| {
            let w = weights[l - h];
            tau2 += w * w * var_pi;
            let lambda_h = libm::pow(chain.lambda(), h as f64);
            let a = &acc[h - 1];
            WindowVariance {
                h,
                var: a.mean,
                se: a.se(),
                tau2,
                lambda_h,
                ratio: a.mean / (tau2 + lambda_h),
            }
        })
        .collect())
}

/// [`window_variance_profile`] at a single `h <= L`.
pub fn window_variance(
    chain: &DigitChain,
    values: &[f64],
    weights: &[f64],
    h: usize,
    samples: u64,
    seed: u64,
) -> Result<WindowVariance> {
    if h == 0 || h > weights.len() {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= h <= L, got h={h}, L={}",
            weights.len()
        )));
    }
    let suffix = &weights[weights.len() - h..];
    let prof = window_variance_profile(chain, values, suffix, samples, seed)?;
    Ok(prof[h - 1])
}

//! Numerics for Q-additive (digitwise additive) functions over Cantor bases.
//!
//! A Cantor base is a sequence of radices `a_j >= 2` with weights
//! `q_0 = 1`, `q_{j+1} = a_j q_j`. A Q-additive function is determined by its
//! digit values `f(d q_j)`; its empirical laws `F_N` over `0 <= n < N` converge
//! (when the digit mean and variance series behave) to a limit law whose
//! characteristic function is the product of per-level digit averages.
//!
//! The crate is `no_std` (it needs `alloc`). Modules:
//!
//! * [`mixed_radix`]: base rules, radix weights, expansion and reconstruction.
//! * [`qadditive`]: digit maps, evaluation, per-level statistics, tails and
//!   the convergence diagnosis.
//! * [`empirical`]: empirical CDFs, Kolmogorov / Wasserstein distances,
//!   concentration function and star discrepancy.
//! * [`limitlaw`]: characteristic-function products and two reference CDF
//!   constructions (grid convolution and Fourier inversion).
//! * [`window`]: trailing-window bound components and the `(h, T)` optimizer.
//! * [`markov`]: finite-state digit sources with a spectral gap.

#![no_std]
// `!(x > 0.0)` is how NaN gets rejected along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod empirical;
mod error;
pub mod limitlaw;
pub mod markov;
pub mod mixed_radix;
pub mod qadditive;
pub mod window;

#[cfg(feature = "serde")]
mod serde_big;

pub use error::{Error, Result};
pub use mixed_radix::{BaseRule, CantorBase, Expansion};
pub use qadditive::{DigitMap, DigitStats, DigitTable, TailBound};

//! Cantor-base arithmetic: base rules, radix weights `q_j`, digit expansion
//! and reconstruction.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use spin::RwLock;

use crate::{Error, Result};

/// Closed description of the radix sequence `(a_j)`.
///
/// Rules are plain data so experiment configs stay serializable.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)
)]
pub enum BaseRule {
    /// `a_j = q` for every level.
    Constant { q: u64 },
    /// `a_j = pattern[j mod p]`.
    Periodic { pattern: Vec<u64> },
    /// `a_j = c*j + d`; `c = 1, d = 2` is the factorial base.
    Affine { c: i64, d: i64 },
    /// Explicit radices for `j < table.len()`, then `then` (indexed by the
    /// absolute level).
    Table {
        table: Vec<u64>,
        then: Box<BaseRule>,
    },
}

impl BaseRule {
    fn validate(&self) -> Result<()> {
        match self {
            BaseRule::Constant { q } if *q < 2 => {
                Err(Error::InvalidBase(format!("constant radix {q} < 2")))
            }
            BaseRule::Constant { .. } => Ok(()),
            BaseRule::Periodic { pattern } => {
                if pattern.is_empty() {
                    return Err(Error::InvalidBase("empty periodic pattern".into()));
                }
                match pattern.iter().position(|&a| a < 2) {
                    Some(i) => Err(Error::InvalidBase(format!(
                        "periodic radix {} at position {i} < 2",
                        pattern[i]
                    ))),
                    None => Ok(()),
                }
            }
            BaseRule::Affine { c, d } => {
                if *c < 0 {
                    Err(Error::InvalidBase(format!("affine slope {c} < 0")))
                } else if *d < 2 {
                    Err(Error::InvalidBase(format!("affine intercept {d} < 2")))
                } else {
                    Ok(())
                }
            }
            BaseRule::Table { table, then } => {
                if let Some(i) = table.iter().position(|&a| a < 2) {
                    return Err(Error::InvalidBase(format!(
                        "table radix {} at level {i} < 2",
                        table[i]
                    )));
                }
                then.validate()
            }
        }
    }

    fn radix(&self, j: usize) -> u128 {
        match self {
            BaseRule::Constant { q } => *q as u128,
            BaseRule::Periodic { pattern } => pattern[j % pattern.len()] as u128,
            BaseRule::Affine { c, d } => (*c as u128)
                .saturating_mul(j as u128)
                .saturating_add(*d as u128),
            BaseRule::Table { table, then } => match table.get(j) {
                Some(&a) => a as u128,
                None => then.radix(j),
            },
        }
    }

    /// The distinct radices `{a_j : j >= j0}` when that set is finite,
    /// `None` for unbounded rules.
    pub fn radices_from(&self, j0: usize) -> Option<Vec<u64>> {
        let mut v = match self {
            BaseRule::Constant { q } => alloc::vec![*q],
            BaseRule::Periodic { pattern } => pattern.clone(),
            BaseRule::Affine { c: 0, d } => alloc::vec![*d as u64],
            BaseRule::Affine { .. } => return None,
            BaseRule::Table { table, then } => {
                let mut v = then.radices_from(j0.max(table.len()))?;
                if j0 < table.len() {
                    v.extend_from_slice(&table[j0..]);
                }
                v
            }
        };
        v.sort_unstable();
        v.dedup();
        Some(v)
    }
}

/// A validated Cantor base with an append-only cache of radix weights.
pub struct CantorBase {
    rule: BaseRule,
    weights: RwLock<Vec<BigUint>>,
}

impl Clone for CantorBase {
    fn clone(&self) -> Self {
        Self {
            rule: self.rule.clone(),
            weights: RwLock::new(self.weights.read().clone()),
        }
    }
}

impl fmt::Debug for CantorBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CantorBase")
            .field("rule", &self.rule)
            .finish()
    }
}

impl PartialEq for CantorBase {
    fn eq(&self, other: &Self) -> bool {
        self.rule == other.rule
    }
}

impl CantorBase {
    pub fn new(rule: BaseRule) -> Result<Self> {
        rule.validate()?;
        Ok(Self {
            rule,
            weights: RwLock::new(alloc::vec![BigUint::one()]),
        })
    }

    pub fn constant(q: u64) -> Result<Self> {
        Self::new(BaseRule::Constant { q })
    }

    /// `a_j = j + 2`.
    pub fn factorial() -> Self {
        Self::new(BaseRule::Affine { c: 1, d: 2 }).expect("factorial rule is valid")
    }

    pub fn rule(&self) -> &BaseRule {
        &self.rule
    }

    /// The radix `a_j`.
    pub fn radix(&self, j: usize) -> u128 {
        self.rule.radix(j)
    }

    /// `Some(q)` when every level has radix `q`.
    pub fn constant_radix(&self) -> Option<u64> {
        match &self.rule {
            BaseRule::Constant { q } => Some(*q),
            BaseRule::Affine { c: 0, d } => Some(*d as u64),
            BaseRule::Periodic { pattern } if pattern.iter().all(|&a| a == pattern[0]) => {
                Some(pattern[0])
            }
            _ => None,
        }
    }

    /// The exact weight `q_j = a_0 a_1 ... a_{j-1}`.
    pub fn radix_weight(&self, j: usize) -> BigUint {
        {
            let cache = self.weights.read();
            if let Some(w) = cache.get(j) {
                return w.clone();
            }
        }
        let mut cache = self.weights.write();
        while cache.len() <= j {
            let k = cache.len() - 1;
            let next = &cache[k] * BigUint::from(self.rule.radix(k));
            cache.push(next);
        }
        cache[j].clone()
    }

    /// `q_j` rounded to `f64` (`+inf` once it leaves the `f64` range).
    pub fn radix_weight_f64(&self, j: usize) -> f64 {
        self.radix_weight(j).to_f64().unwrap_or(f64::INFINITY)
    }

    /// `q_j` if it fits in a `u64`.
    pub fn radix_weight_u64(&self, j: usize) -> Option<u64> {
        self.radix_weight(j).to_u64()
    }

    /// Greedy (equivalently, successive-division) expansion of `n`.
    pub fn expand(&self, n: u64) -> Expansion {
        let mut digits = Vec::new();
        let mut rest = n as u128;
        let mut j = 0;
        while rest > 0 {
            let a = self.radix(j);
            digits.push((rest % a) as u64);
            rest /= a;
            j += 1;
        }
        Expansion { digits }
    }

    /// Writes the digits of `n` into `out` (cleared first); allocation-free
    /// variant of [`expand`](Self::expand) for enumeration loops.
    pub fn expand_into(&self, n: u64, out: &mut Vec<u64>) {
        out.clear();
        let mut rest = n as u128;
        let mut j = 0;
        while rest > 0 {
            let a = self.radix(j);
            out.push((rest % a) as u64);
            rest /= a;
            j += 1;
        }
    }

    /// `L(N)`: the index of the leading digit, with `L(0) = 0`.
    pub fn length(&self, n: u64) -> usize {
        self.expand(n).length()
    }

    /// `sum_j digits[j] * q_j`.
    pub fn compress(&self, digits: &[u64]) -> Result<BigUint> {
        let mut acc = BigUint::zero();
        // Horner from the top digit: acc = acc * a_j + d_j.
        for (j, &d) in digits.iter().enumerate().rev() {
            let a = self.radix(j);
            if d as u128 >= a {
                return Err(Error::DigitOutOfRange {
                    level: j,
                    digit: d as u128,
                    radix: a,
                });
            }
            acc = acc * BigUint::from(a) + BigUint::from(d);
        }
        Ok(acc)
    }
}

/// Digits `(delta_0, ..., delta_L)` of a nonnegative integer, least
/// significant first. Zero has no digits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expansion {
    digits: Vec<u64>,
}

impl Expansion {
    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    pub fn into_digits(self) -> Vec<u64> {
        self.digits
    }

    /// Index of the highest digit; 0 for the empty expansion.
    pub fn length(&self) -> usize {
        self.digits.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }
}

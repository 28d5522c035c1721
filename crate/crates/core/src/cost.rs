//! Expected tests per patient for single, double and k-round pooling.
//!
//! All cost functions accept a real-valued pool size so the optimizer can
//! differentiate them; the integer-facing wrappers validate `s` as a count.
//! `q = 1 - p` is never stored, only derived from a [`Prevalence`].

use serde::{Deserialize, Serialize};

use crate::error::{PoolError, Result};

/// A priori probability that one patient tests positive, `0 < p < 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Prevalence(f64);

impl Prevalence {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 0.0 && p < 1.0 {
            Ok(Self(p))
        } else {
            Err(PoolError::InvalidPrevalence(p))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `1 - p`.
    #[inline]
    pub fn q(self) -> f64 {
        1.0 - self.0
    }

    /// `ln(1 - p)`, accurate for small `p`.
    #[inline]
    pub fn ln_q(self) -> f64 {
        (-self.0).ln_1p()
    }

    /// `(1 - p)^s` evaluated as `exp(s ln(1 - p))`.
    #[inline]
    pub fn q_pow(self, s: f64) -> f64 {
        (s * self.ln_q()).exp()
    }

    /// `1 - (1 - p)^s` without cancellation at small `p`.
    #[inline]
    pub fn one_minus_q_pow(self, s: f64) -> f64 {
        -(s * self.ln_q()).exp_m1()
    }
}

impl TryFrom<f64> for Prevalence {
    type Error = PoolError;

    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<Prevalence> for f64 {
    fn from(p: Prevalence) -> f64 {
        p.0
    }
}

/// Number of independent pooling rounds; 1 is Dorfman, 2 is double pooling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Multiplicity(u32);

impl Multiplicity {
    pub const SINGLE: Multiplicity = Multiplicity(1);
    pub const DOUBLE: Multiplicity = Multiplicity(2);

    pub fn new(k: u32) -> Result<Self> {
        if k >= 1 {
            Ok(Self(k))
        } else {
            Err(PoolError::InvalidMultiplicity(k))
        }
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    /// Smallest meaningful pool size: 1 for single pooling, 2 otherwise.
    #[inline]
    pub fn min_pool_size(self) -> u32 {
        if self.0 == 1 {
            1
        } else {
            2
        }
    }
}

impl TryFrom<u32> for Multiplicity {
    type Error = PoolError;

    fn try_from(k: u32) -> Result<Self> {
        Self::new(k)
    }
}

impl From<Multiplicity> for u32 {
    fn from(k: Multiplicity) -> u32 {
        k.0
    }
}

fn check_real_size(s: f64, k: Multiplicity) -> Result<()> {
    let min = k.min_pool_size();
    if s.is_finite() && s >= f64::from(min) {
        Ok(())
    } else {
        Err(PoolError::InvalidPoolSize { size: s, k: k.get(), min })
    }
}

fn check_int_size(s: u32, k: Multiplicity) -> Result<()> {
    check_real_size(f64::from(s), k)
}

/// Dorfman cost `1/s + 1 - (1-p)^s` for a real pool size `s >= 1`.
pub fn single_pool_cost_real(p: Prevalence, s: f64) -> Result<f64> {
    check_real_size(s, Multiplicity::SINGLE)?;
    Ok(1.0 / s + p.one_minus_q_pow(s))
}

/// Expected tests per patient under single (Dorfman) pooling with pools of `s`.
pub fn single_pool_cost(p: Prevalence, s: u32) -> Result<f64> {
    check_int_size(s, Multiplicity::SINGLE)?;
    single_pool_cost_real(p, f64::from(s))
}

/// `d/ds (1/s + 1 - (1-p)^s) = -(1-p)^s ln(1-p) - 1/s^2`.
pub fn single_pool_cost_derivative(p: Prevalence, s: f64) -> Result<f64> {
    check_real_size(s, Multiplicity::SINGLE)?;
    Ok(-p.q_pow(s) * p.ln_q() - 1.0 / (s * s))
}

/// k-round cost `k/s + p + q (1 - q^(s-1))^k` for a real pool size.
pub fn k_pool_cost_real(p: Prevalence, k: Multiplicity, s: f64) -> Result<f64> {
    check_real_size(s, k)?;
    let kf = f64::from(k.get());
    let suspect = p.one_minus_q_pow(s - 1.0);
    Ok(kf / s + p.get() + p.q() * suspect.powi(k.get() as i32))
}

/// Expected tests per patient when every patient sits in `k` independent pools
/// of size `s` and is retested only if all `k` pools are positive.
pub fn k_pool_cost(p: Prevalence, k: Multiplicity, s: u32) -> Result<f64> {
    check_int_size(s, k)?;
    k_pool_cost_real(p, k, f64::from(s))
}

/// `-k/s^2 - k q^s (1 - q^(s-1))^(k-1) ln q`.
pub fn k_pool_cost_derivative(p: Prevalence, k: Multiplicity, s: f64) -> Result<f64> {
    check_real_size(s, k)?;
    let kf = f64::from(k.get());
    let suspect = p.one_minus_q_pow(s - 1.0);
    Ok(-kf / (s * s) - kf * p.q_pow(s) * suspect.powi(k.get() as i32 - 1) * p.ln_q())
}

/// Double pooling cost `2/s + p + q (1 - q^(s-1))^2`; `s = 1` is rejected.
pub fn double_pool_cost(p: Prevalence, s: u32) -> Result<f64> {
    k_pool_cost(p, Multiplicity::DOUBLE, s)
}

pub fn double_pool_cost_real(p: Prevalence, s: f64) -> Result<f64> {
    k_pool_cost_real(p, Multiplicity::DOUBLE, s)
}

/// `-2/s^2 - 2 q^s (1 - q^(s-1)) ln q`.
pub fn double_pool_cost_derivative(p: Prevalence, s: f64) -> Result<f64> {
    k_pool_cost_derivative(p, Multiplicity::DOUBLE, s)
}

/// Dispatches to the Dorfman closed form for `k = 1` and the general form otherwise.
pub fn cost_real(p: Prevalence, k: Multiplicity, s: f64) -> Result<f64> {
    if k == Multiplicity::SINGLE {
        single_pool_cost_real(p, s)
    } else {
        k_pool_cost_real(p, k, s)
    }
}

pub fn cost_derivative(p: Prevalence, k: Multiplicity, s: f64) -> Result<f64> {
    if k == Multiplicity::SINGLE {
        single_pool_cost_derivative(p, s)
    } else {
        k_pool_cost_derivative(p, k, s)
    }
}

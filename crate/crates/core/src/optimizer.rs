//! Continuous and integer optimal pool sizes, and the threshold prevalences
//! obtained by inverting them.
//!
//! The single-pooling stationary point has a closed form through the
//! principal branch of Lambert W. The `W_{-1}` branch also solves the
//! stationarity condition, but at a spurious point far from the minimum; only
//! `W0` reproduces the small-`p` behaviour `s1 ~ 1/sqrt(p)`.
//!
//! For `k >= 2` the stationary point is found by bisection on the analytic
//! derivative. Integer optima always come from an exhaustive scan; the
//! continuous optimum is only reported alongside as a cross-check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{self, Multiplicity, Prevalence};
use crate::error::{PoolError, Result};
use crate::lambert::lambert_w0;

pub const DEFAULT_S_MAX: u32 = 10_000;
pub const DEFAULT_S_TOL: f64 = 1e-12;
pub const DEFAULT_P_TOL: f64 = 1e-9;
pub const DEFAULT_CROSSOVER_STEP: f64 = 1e-4;

const BRACKET_GROWTH: f64 = 1.05;

/// Limits on the pool sizes the optimizer may consider.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub s_max: u32,
    /// Largest pool the lab can run, e.g. 64.
    pub practical_cap: Option<u32>,
    /// Absolute bisection tolerance in `s` for derivative roots.
    pub s_tol: f64,
    /// Absolute bisection tolerance in `p` for inversions.
    pub p_tol: f64,
}

impl Default for SearchBounds {
    fn default() -> Self {
        Self {
            s_max: DEFAULT_S_MAX,
            practical_cap: None,
            s_tol: DEFAULT_S_TOL,
            p_tol: DEFAULT_P_TOL,
        }
    }
}

impl SearchBounds {
    pub fn with_s_max(s_max: u32) -> Self {
        Self { s_max, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_max < 2 {
            return Err(PoolError::InvalidBounds(format!("s_max = {} < 2", self.s_max)));
        }
        if let Some(cap) = self.practical_cap {
            if cap < 2 || cap > self.s_max {
                return Err(PoolError::InvalidBounds(format!(
                    "practical cap {cap} outside [2, {}]",
                    self.s_max
                )));
            }
        }
        if !(self.s_tol > 0.0 && self.p_tol > 0.0) {
            return Err(PoolError::InvalidBounds("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn effective_cap(&self) -> u32 {
        self.practical_cap.unwrap_or(self.s_max).min(self.s_max)
    }
}

/// Recommended plan for one multiplicity at one prevalence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolPlan {
    pub p: f64,
    pub k: u32,
    /// Stationary point of the real-extended cost; absent when the derivative
    /// has no sign change inside `[min size, s_max]`.
    pub s_continuous: Option<f64>,
    pub s_integer: u32,
    pub expected_cost: f64,
    pub baseline_cost: f64,
    pub beneficial: bool,
    /// The practical cap is set and the unconstrained optimum lies beyond it.
    pub cap_binding: bool,
}

/// `s1 = 2 W0(-sqrt(-ln(1-p)) / 2) / ln(1-p)`.
pub fn continuous_optimum_s1(p: Prevalence) -> Result<f64> {
    let ln_q = p.ln_q();
    let w = lambert_w0(-0.5 * (-ln_q).sqrt())?;
    Ok(2.0 * w / ln_q)
}

/// First sign change of the cost derivative (negative to positive) in
/// `[min size, s_max]`, refined by bisection.
///
/// The derivative is not monotone: far beyond the minimum the `-k/s^2` term
/// dominates again, past a local maximum of the cost (for `k = 1` that is the
/// `W_{-1}` stationary point). The bracket is found by walking up from the
/// smallest size in geometric steps, not from the interval ends.
pub fn continuous_optimum_sk(p: Prevalence, k: Multiplicity, bounds: &SearchBounds) -> Result<f64> {
    bounds.validate()?;
    let deriv = |s: f64| cost::cost_derivative(p, k, s);
    let floor = f64::from(k.min_pool_size());
    let s_max = f64::from(bounds.s_max);
    let no_root = || PoolError::NoInteriorOptimum { p: p.get(), k: k.get(), lo: floor, hi: s_max };

    let mut lo = floor;
    if deriv(lo)? >= 0.0 {
        return Err(no_root());
    }
    let mut hi = None;
    while lo < s_max {
        let next = (lo * BRACKET_GROWTH).min(s_max);
        if deriv(next)? > 0.0 {
            hi = Some(next);
            break;
        }
        lo = next;
    }
    let mut hi = hi.ok_or_else(no_root)?;
    while hi - lo > bounds.s_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if deriv(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);

    let h = 1e-2 * root;
    if root - h >= floor {
        let c = |s| cost::cost_real(p, k, s);
        let curvature = c(root - h)? + c(root + h)? - 2.0 * c(root)?;
        if curvature <= 0.0 {
            return Err(no_root());
        }
    }
    Ok(root)
}

/// Closed form for `k = 1`, bisection otherwise.
pub fn continuous_optimum(p: Prevalence, k: Multiplicity, bounds: &SearchBounds) -> Result<f64> {
    if k == Multiplicity::SINGLE {
        continuous_optimum_s1(p)
    } else {
        continuous_optimum_sk(p, k, bounds)
    }
}

/// Minimizes `k_pool_cost(p, k, s)` over every integer `s` in `[lo, hi]`,
/// preferring the smaller `s` on exact ties.
pub fn scan_min(p: Prevalence, k: Multiplicity, lo: u32, hi: u32) -> Result<(u32, f64)> {
    if lo > hi || lo < k.min_pool_size() {
        return Err(PoolError::EmptyRange { lo, hi });
    }
    let mut best = (lo, cost::k_pool_cost(p, k, lo)?);
    for s in lo + 1..=hi {
        let c = cost::k_pool_cost(p, k, s)?;
        if c < best.1 {
            best = (s, c);
        }
    }
    Ok(best)
}

/// Integer pool size in `[2, effective cap]` minimizing the expected cost.
///
/// Pools of one are individual testing, which is the baseline, not a plan.
/// Past the break-even prevalence the cost tends to `1 + k/s` from above,
/// so the minimizer drifts to the cap; such plans have `beneficial == false`.
pub fn integer_optimum(p: Prevalence, k: Multiplicity, bounds: &SearchBounds) -> Result<PoolPlan> {
    bounds.validate()?;
    let cap = bounds.effective_cap();
    let (s_integer, expected_cost) = scan_min(p, k, 2, cap)?;
    let s_continuous = continuous_optimum(p, k, bounds).ok();
    let cap_binding = match bounds.practical_cap {
        Some(c) if c < bounds.s_max && s_integer == c => {
            scan_min(p, k, 2, bounds.s_max)?.0 > c
        }
        _ => false,
    };
    Ok(PoolPlan {
        p: p.get(),
        k: k.get(),
        s_continuous,
        s_integer,
        expected_cost,
        baseline_cost: 1.0,
        beneficial: expected_cost < 1.0,
        cap_binding,
    })
}

/// `100 (c1 - c2) / c1` with both costs at their integer optima.
pub fn savings_percent(p: Prevalence, bounds: &SearchBounds) -> Result<f64> {
    let c1 = integer_optimum(p, Multiplicity::SINGLE, bounds)?.expected_cost;
    let c2 = integer_optimum(p, Multiplicity::DOUBLE, bounds)?.expected_cost;
    Ok(100.0 * (c1 - c2) / c1)
}

const INVERSION_P_LO: f64 = 1e-9;

/// Largest `p` with a single-pooling stationary point: beyond
/// `1 - exp(-4/e^2)` the Lambert W argument drops below `-1/e`.
fn inversion_p_hi() -> f64 {
    let limit = -(-4.0 / (std::f64::consts::E * std::f64::consts::E)).exp_m1();
    limit - 1e-12
}

/// The prevalence at which the continuous single-pooling optimum equals
/// `s_target`. `s1(p)` is strictly decreasing, so plain bisection applies.
pub fn find_p_for_continuous_s1(s_target: f64) -> Result<Prevalence> {
    let s_at = |p: f64| continuous_optimum_s1(Prevalence::new(p)?);
    let s_hi = s_at(INVERSION_P_LO)?;
    let p_hi = inversion_p_hi();
    let s_lo = s_at(p_hi)?;
    if !(s_target > 1.0 && s_target >= s_lo && s_target <= s_hi) {
        return Err(PoolError::OutOfRange { target: s_target, lo: s_lo, hi: s_hi });
    }
    let (mut lo, mut hi) = (INVERSION_P_LO, p_hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if s_at(mid)? > s_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = if (s_at(lo)? - s_target).abs() <= (s_at(hi)? - s_target).abs() { lo } else { hi };
    Prevalence::new(p)
}

const CROSSOVER_P_MAX: f64 = 0.5;
const CROSSOVER_BLOCK: usize = 64;

/// Largest `p` below which double pooling saves at least `threshold_percent`
/// over single pooling at every grid point.
///
/// The grid `step, 2 step, ...` is scanned for the first point that falls
/// under the threshold; the crossing is then refined by bisection, since
/// savings are continuous in `p`.
pub fn find_savings_crossover(
    threshold_percent: f64,
    bounds: &SearchBounds,
    grid_step: f64,
) -> Result<Prevalence> {
    if !(0.0..100.0).contains(&threshold_percent) {
        return Err(PoolError::InvalidBounds(format!(
            "threshold {threshold_percent}% outside [0, 100)"
        )));
    }
    if !(grid_step > 0.0 && grid_step < CROSSOVER_P_MAX) {
        return Err(PoolError::InvalidBounds(format!("grid step {grid_step}")));
    }
    bounds.validate()?;
    let below = |p: f64| -> Result<bool> {
        Ok(savings_percent(Prevalence::new(p)?, bounds)? < threshold_percent)
    };

    let n_points = (CROSSOVER_P_MAX / grid_step).floor() as usize;
    let mut first_below = None;
    let mut start = 1;
    while start <= n_points && first_below.is_none() {
        let end = (start + CROSSOVER_BLOCK).min(n_points + 1);
        let flags: Vec<bool> = (start..end)
            .into_par_iter()
            .map(|i| below(i as f64 * grid_step))
            .collect::<Result<_>>()?;
        first_below = flags.iter().position(|&b| b).map(|j| start + j);
        start = end;
    }
    let i = match first_below {
        Some(1) => return Err(PoolError::NotAttained(threshold_percent)),
        Some(i) => i,
        None => {
            return Err(PoolError::OutOfRange {
                target: threshold_percent,
                lo: grid_step,
                hi: n_points as f64 * grid_step,
            })
        }
    };

    let (mut lo, mut hi) = ((i - 1) as f64 * grid_step, i as f64 * grid_step);
    while hi - lo > bounds.p_tol {
        let mid = 0.5 * (lo + hi);
        if below(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Prevalence::new(lo)
}

const BREAKEVEN_P_LO: f64 = 1e-9;
const BREAKEVEN_P_HI: f64 = 1.0 - 1e-9;
const BREAKEVEN_TOL: f64 = 1e-13;

/// Supremum of the prevalences at which the optimal `k`-round plan still
/// beats testing everyone individually.
///
/// The optimal cost is increasing in `p` (each `k_pool_cost` is), so the
/// beneficial set is an interval and bisection finds its right end.
pub fn pooling_breakeven(k: Multiplicity, bounds: &SearchBounds) -> Result<Prevalence> {
    bounds.validate()?;
    let beneficial = |p: f64| -> Result<bool> {
        Ok(integer_optimum(Prevalence::new(p)?, k, bounds)?.beneficial)
    };
    let (mut lo, mut hi) = (BREAKEVEN_P_LO, BREAKEVEN_P_HI);
    if !beneficial(lo)? {
        return Err(PoolError::OutOfRange { target: 1.0, lo, hi });
    }
    while hi - lo > BREAKEVEN_TOL {
        let mid = 0.5 * (lo + hi);
        if beneficial(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Prevalence::new(lo)
}

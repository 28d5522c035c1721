//! Principal branch of the Lambert W function.
//!
//! Initial guesses:
//! - within 0.25 of the branch point, the series in `t = sqrt(2(e x + 1))`
//!   `W = -1 + t - t^2/3 + 11 t^3/72`;
//! - up to `e`, a damped `ln(1 + x)`, within a few percent of `W`;
//! - above `e`, the asymptotic `ln x - ln ln x`.
//!
//! Halley steps then converge cubically from any of these.

use std::f64::consts::E;

use crate::error::{PoolError, Result};

/// Nearest `f64` to `-1/e`.
pub const BRANCH_POINT: f64 = -0.36787944117144233;

const MAX_ITER: usize = 64;

fn initial_guess(x: f64) -> f64 {
    let shifted = E * x + 1.0;
    if shifted < 0.25 {
        let t = (2.0 * shifted.max(0.0)).sqrt();
        -1.0 + t - t * t / 3.0 + 11.0 / 72.0 * t * t * t
    } else if x <= E {
        // W(x) ~ x near 0, W(e) = 1; ln(1+x) tracks both ends closely.
        let l = x.ln_1p();
        l * (1.0 - l / (2.0 + l) * 0.5)
    } else {
        let l = x.ln();
        l - l.ln()
    }
}

/// `W0(x)` with `w e^w = x` and `w >= -1`, for `x >= -1/e`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < BRANCH_POINT {
        return Err(PoolError::LambertDomain(x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == BRANCH_POINT {
        return Ok(-1.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }

    let tol = 1e-14 * x.abs().max(1.0);
    let mut w = initial_guess(x);
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= tol {
            break;
        }
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let next = w - f / denom;
        // The principal branch never drops below -1.
        let next = if next < -1.0 { 0.5 * (w - 1.0) } else { next };
        if next == w {
            break;
        }
        w = next;
    }
    Ok(w)
}

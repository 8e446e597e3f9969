//! Kummer's confluent hypergeometric function restricted to first parameter 1.

use crate::error::{domain, Error, Result};

const MAX_TERMS: usize = 1_000_000;
const REL_TOL: f64 = 1e-16;

/// 1F1(1; b; x) = Σ_k x^k / ((b)(b+1)…(b+k-1)).
///
/// For `x < -1` the alternating series is replaced by Kummer's
/// transformation `e^x · 1F1(b-1; b; -x)`, whose terms share one sign.
pub fn kummer_1f1_first_unit(b: f64, x: f64) -> Result<f64> {
    const FUNC: &str = "kummer_1f1_first_unit";
    if !(b.is_finite() && b > 0.0) {
        return Err(domain(FUNC, format!("b = {b} must be finite and positive")));
    }
    if !x.is_finite() {
        return Err(domain(FUNC, format!("x = {x} must be finite")));
    }
    let value = if x < -1.0 {
        x.exp() * transformed_series(b, -x)?
    } else {
        direct_series(b, x)?
    };
    if !value.is_finite() {
        return Err(Error::Range {
            func: FUNC,
            detail: format!("1F1(1; {b}; {x}) overflows f64"),
        });
    }
    Ok(value)
}

fn direct_series(b: f64, x: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..MAX_TERMS {
        let denom = b + k as f64;
        term *= x / denom;
        sum += term;
        if !sum.is_finite() {
            return Ok(sum);
        }
        // Terms decrease once b + k exceeds |x|.
        if denom > x.abs() && term.abs() <= REL_TOL * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence {
        func: "kummer_1f1_first_unit",
        iterations: MAX_TERMS,
    })
}

/// 1F1(b-1; b; y) for y > 0: Σ_k (b-1)/(b-1+k) · y^k / k!.
fn transformed_series(b: f64, y: f64) -> Result<f64> {
    if b == 1.0 {
        return Ok(1.0);
    }
    let mut pow_fact = 1.0; // y^k / k!
    let mut sum = 1.0;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        pow_fact *= y / kf;
        let term = (b - 1.0) / (b - 1.0 + kf) * pow_fact;
        sum += term;
        if !sum.is_finite() {
            return Ok(sum);
        }
        if kf > y && term.abs() <= REL_TOL * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence {
        func: "kummer_1f1_first_unit",
        iterations: MAX_TERMS,
    })
}

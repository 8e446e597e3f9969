//! Generalized Marcum-Q of integer order.

use super::gamma::{ln_gamma, reg_upper_gamma};
use super::Probability;
use crate::error::{domain, Error, Result};

const MAX_TERMS: usize = 5_000_000;

/// Generalized Marcum-Q function Q_m(a, b) for integer order `m ≥ 1`.
///
/// Evaluated as the Poisson mixture
/// `Q_m(a,b) = Σ_k Pois(k; a²/2) · Q(m + k, b²/2)` of regularized upper
/// gamma tails. The gamma tails are advanced with the additive recurrence
/// `Q(s+1, x) = Q(s, x) + x^s e^{-x} / Γ(s+1)`; summation stops once the
/// remaining Poisson mass is below 1e-17.
pub fn marcum_q(m: u32, a: f64, b: f64) -> Result<Probability> {
    const FUNC: &str = "marcum_q";
    if m < 1 {
        return Err(domain(FUNC, "order m must be at least 1"));
    }
    if !(a.is_finite() && a >= 0.0) {
        return Err(domain(
            FUNC,
            format!("a = {a} must be finite and nonnegative"),
        ));
    }
    if !(b.is_finite() && b >= 0.0) {
        return Err(domain(
            FUNC,
            format!("b = {b} must be finite and nonnegative"),
        ));
    }
    if b == 0.0 {
        return Ok(Probability::ONE);
    }

    let mu = 0.5 * a * a;
    let x = 0.5 * b * b;
    let m = f64::from(m);
    if mu == 0.0 {
        return Probability::saturating(reg_upper_gamma(m, x)?);
    }

    let weights = poisson_weights(mu)?;
    let ln_x = x.ln();
    let mut s = m + weights.first_k as f64;
    let mut tail = reg_upper_gamma(s, x)?;
    let mut sum = 0.0;
    let mut mass = 0.0;
    for &w in &weights.values {
        sum += w * tail;
        mass += w;
        tail = (tail + (s * ln_x - x - ln_gamma(s + 1.0)).exp()).min(1.0);
        s += 1.0;
    }
    // The weights share one rounding error from the mode term; dividing by
    // their sum cancels it.
    Probability::saturating(sum / mass)
}

struct PoissonWeights {
    first_k: usize,
    values: Vec<f64>,
}

/// Poisson(μ) probabilities over the range carrying all but ~1e-17 of the
/// mass, built outward from the mode by the ratio recurrence.
fn poisson_weights(mu: f64) -> Result<PoissonWeights> {
    let mode = mu.floor();
    let w_mode = (mode * mu.ln() - mu - ln_gamma(mode + 1.0)).exp();
    let mode = mode as usize;

    // Mass below mu - 12 sqrt(mu) - 40 is < 1e-30.
    let k_lo = (mu - 12.0 * mu.sqrt() - 40.0).floor().max(0.0) as usize;
    let mut below = Vec::with_capacity(mode - k_lo);
    let mut w = w_mode;
    for k in (k_lo..mode).rev() {
        w *= (k + 1) as f64 / mu;
        below.push(w);
    }
    below.reverse();

    let mut values = below;
    values.push(w_mode);
    let mut w = w_mode;
    let mut k = mode;
    loop {
        let r = mu / (k + 2) as f64;
        // Geometric bound on the mass beyond k.
        if (k as f64) > mu && w * r / (1.0 - r) < 1e-17 {
            break;
        }
        if values.len() >= MAX_TERMS {
            return Err(Error::NoConvergence {
                func: "marcum_q",
                iterations: MAX_TERMS,
            });
        }
        w *= mu / (k + 1) as f64;
        values.push(w);
        k += 1;
    }
    Ok(PoissonWeights {
        first_k: k_lo,
        values,
    })
}

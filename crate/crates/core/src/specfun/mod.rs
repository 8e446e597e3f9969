//! Special functions behind the detection-probability formulas.
//!
//! Everything here is evaluated in natural (not log) scale. The regimes the
//! simulator needs are integer orders up to a few hundred, false-alarm levels
//! down to about 1e-7 and noncentralities up to a few thousand.

mod gamma;
mod hypergeometric;
mod marcum;

pub use gamma::{inv_reg_upper_gamma, ln_gamma, reg_lower_gamma, reg_upper_gamma};
pub use hypergeometric::kummer_1f1_first_unit;
pub use marcum::marcum_q;

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{domain, Result};

/// A probability value, guaranteed to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(domain(
                "Probability::new",
                format!("{value} is not in [0, 1]"),
            ))
        }
    }

    /// Clamps a numerically computed probability that may have drifted a few
    /// ulps outside `[0, 1]`. NaN is rejected.
    pub(crate) fn saturating(value: f64) -> Result<Self> {
        if value.is_nan() {
            return Err(domain("Probability::saturating", "NaN"));
        }
        Ok(Probability(value.clamp(0.0, 1.0)))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// True when strictly inside `(0, 1)`.
    pub fn is_interior(self) -> bool {
        self.0 > 0.0 && self.0 < 1.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = crate::Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

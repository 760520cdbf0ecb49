use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The two free scales of the construction and their ratio.
///
/// `s0` is an action (g·cm²/s), `d0` the Lagrangian prefactor (g·cm); the
/// only combination surviving the configuration-space projection is the
/// velocity `c = s0 / d0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    s0: f64,
    d0: f64,
}

impl Constants {
    pub fn new(s0: f64, d0: f64) -> Result<Self> {
        if !(s0 > 0.0 && s0.is_finite() && d0 > 0.0 && d0.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "constants must be positive and finite, got s0 = {s0}, d0 = {d0}"
            )));
        }
        Ok(Self { s0, d0 })
    }

    /// `s0 = d0 = 1`, hence `c = 1`.
    pub fn natural() -> Self {
        Self { s0: 1.0, d0: 1.0 }
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    pub fn c(&self) -> f64 {
        self.s0 / self.d0
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self::natural()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive() {
        assert!(Constants::new(0.0, 1.0).is_err());
        assert!(Constants::new(1.0, -2.0).is_err());
        assert!(Constants::new(f64::NAN, 1.0).is_err());
        assert_eq!(Constants::new(3.0, 2.0).unwrap().c(), 1.5);
    }
}

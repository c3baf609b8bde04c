use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the tanh-shaped contact stiffness `k(d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StiffnessParams {
    pub k_min: f64,
    pub k_max: f64,
    pub d0: f64,
    /// Safety margin subtracted from the inside-outside value before evaluating `k`.
    pub d_prime: f64,
}

impl Default for StiffnessParams {
    fn default() -> Self {
        StiffnessParams {
            k_min: 1e-7,
            k_max: 1e3,
            d0: 1e-3,
            d_prime: 0.05,
        }
    }
}

/// `(1 - tanh x, sech^2 x)` without cancellation for large `|x|`.
#[inline]
fn tanh_parts(x: f64) -> (f64, f64) {
    let e = (-2.0 * x.abs()).exp();
    let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
    let one_minus_tanh = if x >= 0.0 {
        2.0 * e / (1.0 + e)
    } else {
        2.0 / (1.0 + e)
    };
    (one_minus_tanh, sech2)
}

impl StiffnessParams {
    pub fn new(k_min: f64, k_max: f64, d0: f64, d_prime: f64) -> Result<Self> {
        let p = StiffnessParams {
            k_min,
            k_max,
            d0,
            d_prime,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_min > 0.0 && self.k_min < self.k_max && self.k_max.is_finite()) {
            return Err(Error::Domain(format!(
                "stiffness bounds need 0 < k_min < k_max (got {}, {})",
                self.k_min, self.k_max
            )));
        }
        if !(self.d0 > 0.0 && self.d0.is_finite()) {
            return Err(Error::Domain(format!("d0 = {} must be positive", self.d0)));
        }
        if !(self.d_prime >= 0.0 && self.d_prime.is_finite()) {
            return Err(Error::Domain(format!("d_prime = {} must be >= 0", self.d_prime)));
        }
        Ok(())
    }

    pub fn value(&self, d: f64) -> f64 {
        let (omt, _) = tanh_parts(d / self.d0);
        self.k_min + 0.5 * omt * self.k_max
    }

    /// `dk/dd`.
    pub fn slope(&self, d: f64) -> f64 {
        let (_, sech2) = tanh_parts(d / self.d0);
        -0.5 * self.k_max / self.d0 * sech2
    }

    /// `d^2k/dd^2`.
    pub fn curvature(&self, d: f64) -> f64 {
        let x = d / self.d0;
        let (_, sech2) = tanh_parts(x);
        self.k_max / (self.d0 * self.d0) * sech2 * x.tanh()
    }
}

/// Free-function form of [`StiffnessParams::value`].
pub fn stiffness(d: f64, params: &StiffnessParams) -> f64 {
    params.value(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        let p = StiffnessParams::default();
        assert_eq!(p.value(0.0), 1e-7 + 0.5 * 1e3);
        assert_eq!(p.value(1e3), 1e-7);
        let expected = 1e-7 + 1e3 * (1.0 - 1f64.tanh()) / 2.0;
        assert!((p.value(1e-3) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(StiffnessParams::new(1.0, 0.5, 1e-3, 0.0).is_err());
        assert!(StiffnessParams::new(0.0, 1.0, 1e-3, 0.0).is_err());
        assert!(StiffnessParams::new(1e-7, 1e3, 0.0, 0.0).is_err());
        assert!(StiffnessParams::new(1e-7, 1e3, 1e-3, -0.1).is_err());
    }

    #[test]
    fn slope_and_curvature_match_fd() {
        let p = StiffnessParams::default();
        for k in -40..=40 {
            let d = k as f64 * 1e-4;
            let h = 1e-8;
            let fd = (p.value(d + h) - p.value(d - h)) / (2.0 * h);
            assert!((fd - p.slope(d)).abs() <= 1e-4 * p.slope(d).abs().max(1e-6), "d={d}");
            let fd2 = (p.slope(d + h) - p.slope(d - h)) / (2.0 * h);
            assert!((fd2 - p.curvature(d)).abs() <= 1e-4 * p.curvature(d).abs().max(1.0), "d={d}");
        }
    }

    proptest! {
        #[test]
        fn strictly_decreasing_near_transition(d1 in -0.01f64..0.01, delta in 1e-6f64..0.01) {
            let p = StiffnessParams::default();
            prop_assert!(p.value(d1) > p.value(d1 + delta));
        }

        #[test]
        fn bounded_everywhere(d in -1e3f64..1e3, d2 in -1e3f64..1e3) {
            let p = StiffnessParams::default();
            let k = p.value(d);
            prop_assert!(k >= p.k_min && k <= p.k_min + p.k_max);
            if d < d2 { prop_assert!(p.value(d) >= p.value(d2)); }
        }
    }
}

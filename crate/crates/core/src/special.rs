//! The functions behind the water-filling hard instance.
//!
//! With `c = 2 - √2`,
//!
//! ```text
//! f(φ) = ½(ln(1-φ) + ln(1-c+φ)) + 1/(√2(φ-1)) + (2 + √2 - ln(1-c))/2,   φ ∈ [0, c]
//! τ    = f⁻¹ : [0, 1] → [0, c]
//! h(x) = f(c - τ(x))
//! ```
//!
//! `f` is strictly decreasing from `f(0) = 1` to `f(c) = 0` and solves
//! `1 - f(φ) + f(c-φ) + (1-φ) f'(φ) = 0`. `τ` has no closed form and is
//! computed by bisection. `h` is a decreasing involution of `[0, 1]`.

use crate::constants::SQRT_2;
use crate::error::{Error, Result};
use crate::math::bisect;

const BISECTION_TOL: f64 = 1e-13;
const BISECTION_MAX_ITER: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpecialFunctions {
    c: f64,
    offset: f64,
}

impl Default for SpecialFunctions {
    fn default() -> Self {
        Self::new()
    }
}

impl SpecialFunctions {
    pub fn new() -> Self {
        let c = 2.0 - SQRT_2;
        SpecialFunctions { c, offset: (2.0 + SQRT_2 - libm::log(1.0 - c)) / 2.0 }
    }

    /// `2 - √2`.
    pub fn c(&self) -> f64 {
        self.c
    }

    fn f_raw(&self, phi: f64) -> f64 {
        0.5 * (libm::log1p(-phi) + libm::log1p(phi - self.c)) + 1.0 / (SQRT_2 * (phi - 1.0)) + self.offset
    }

    fn f_prime_raw(&self, phi: f64) -> f64 {
        0.5 * (-1.0 / (1.0 - phi) + 1.0 / (1.0 - self.c + phi)) - 1.0 / (SQRT_2 * (phi - 1.0) * (phi - 1.0))
    }

    fn check(&self, name: &'static str, value: f64, hi: f64) -> Result<()> {
        if (0.0..=hi).contains(&value) {
            Ok(())
        } else {
            Err(Error::Domain { name, value })
        }
    }

    /// `f(φ)` in closed form.
    pub fn f(&self, phi: f64) -> Result<f64> {
        self.check("f", phi, self.c)?;
        Ok(self.f_raw(phi))
    }

    /// `f'(φ)` in closed form.
    pub fn f_prime(&self, phi: f64) -> Result<f64> {
        self.check("f'", phi, self.c)?;
        Ok(self.f_prime_raw(phi))
    }

    /// `1 - f(φ) + f(c - φ) + (1 - φ) f'(φ)`.
    pub fn ode_residual(&self, phi: f64) -> Result<f64> {
        self.check("ode", phi, self.c)?;
        Ok(1.0 - self.f_raw(phi) + self.f_raw(self.c - phi) + (1.0 - phi) * self.f_prime_raw(phi))
    }

    /// `τ(x) = f⁻¹(x)`; exact at the endpoints.
    pub fn tau(&self, x: f64) -> Result<f64> {
        self.check("tau", x, 1.0)?;
        Ok(self.tau_raw(x))
    }

    fn tau_raw(&self, x: f64) -> f64 {
        if x <= 0.0 {
            self.c
        } else if x >= 1.0 {
            0.0
        } else {
            bisect(|phi| self.f_raw(phi), x, 0.0, self.c, BISECTION_TOL, BISECTION_MAX_ITER)
        }
    }

    /// `h(x) = f(c - τ(x))`; exact at the endpoints.
    pub fn h(&self, x: f64) -> Result<f64> {
        self.check("h", x, 1.0)?;
        Ok(self.h_raw(x))
    }

    fn h_raw(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else if x >= 1.0 {
            0.0
        } else {
            self.f_raw((self.c - self.tau_raw(x)).clamp(0.0, self.c)).clamp(0.0, 1.0)
        }
    }

    /// `h⁻¹(y)` by bisection on the decreasing `h`.
    pub fn h_inverse(&self, y: f64) -> Result<f64> {
        self.check("h_inverse", y, 1.0)?;
        Ok(if y <= 0.0 {
            1.0
        } else if y >= 1.0 {
            0.0
        } else {
            bisect(|x| self.h_raw(x), y, 0.0, 1.0, BISECTION_TOL, BISECTION_MAX_ITER)
        })
    }
}

/// `⌊k·value⌋` clamped to `[0, k]`, tolerant to rounding just below an
/// integer.
pub fn floor_scaled(k: usize, value: f64) -> usize {
    let scaled = k as f64 * value;
    let floor = libm::floor(scaled + 1e-9);
    if floor <= 0.0 {
        0
    } else {
        (floor as usize).min(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_endpoints_and_midpoint() {
        let s = SpecialFunctions::new();
        assert!((s.f(0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(s.f(s.c()).unwrap().abs() < 1e-12);
        // At c/2 the logs coincide and the rational term is exactly -1.
        let mid = s.f(s.c() / 2.0).unwrap();
        let expected = libm::log(1.0 - s.c() / 2.0) - 1.0 + s.offset;
        assert!((mid - expected).abs() < 1e-15);
        assert!((mid - 0.80122).abs() < 1e-5);
        assert!(matches!(s.f(-0.1), Err(Error::Domain { .. })));
        assert!(matches!(s.f(0.6), Err(Error::Domain { .. })));
    }

    #[test]
    fn f_is_strictly_decreasing() {
        let s = SpecialFunctions::new();
        let mut prev = s.f(0.0).unwrap();
        for i in 1..=1000 {
            let phi = s.c() * i as f64 / 1000.0;
            let v = s.f(phi).unwrap();
            assert!(v < prev);
            prev = v;
            if i < 1000 {
                assert!(s.f_prime(phi).unwrap() < 0.0);
            }
        }
    }

    #[test]
    fn f_prime_matches_central_differences() {
        let s = SpecialFunctions::new();
        for i in 1..50 {
            let phi = s.c() * i as f64 / 50.0;
            let h = 1e-6;
            let fd = (s.f_raw(phi + h) - s.f_raw(phi - h)) / (2.0 * h);
            assert!((fd - s.f_prime_raw(phi)).abs() < 1e-7);
        }
    }

    #[test]
    fn tau_inverts_f() {
        let s = SpecialFunctions::new();
        assert_eq!(s.tau(1.0).unwrap(), 0.0);
        assert_eq!(s.tau(0.0).unwrap(), s.c());
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let phi = s.tau(x).unwrap();
            assert!((s.f(phi).unwrap() - x).abs() < 1e-10, "x = {x}");
        }
        assert!(s.tau(1.5).is_err());
    }

    #[test]
    fn h_shape() {
        let s = SpecialFunctions::new();
        assert!((s.h(0.0).unwrap() - 1.0).abs() < 1e-10);
        assert!(s.h(1.0).unwrap().abs() < 1e-10);
        let fixed = s.f(s.c() / 2.0).unwrap();
        assert!((s.h(fixed).unwrap() - fixed).abs() < 1e-10);
        let mut prev = 1.0;
        for i in 1..=200 {
            let v = s.h(i as f64 / 200.0).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn tau_of_h_is_complementary() {
        let s = SpecialFunctions::new();
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            let lhs = s.tau(s.h(x).unwrap()).unwrap() + s.tau(x).unwrap();
            assert!((lhs - s.c()).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn h_is_an_involution() {
        let s = SpecialFunctions::new();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let back = s.h(s.h(x).unwrap()).unwrap();
            assert!((back - x).abs() < 1e-8, "x = {x}: {back}");
            assert!((s.h_inverse(x).unwrap() - s.h(x).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn ode_residual_spot_values() {
        let s = SpecialFunctions::new();
        for phi in [s.c() / 2.0, 0.1, 0.5] {
            assert!(s.ode_residual(phi).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn floor_scaled_absorbs_rounding() {
        assert_eq!(floor_scaled(4, 1.0 - 1e-15), 4);
        assert_eq!(floor_scaled(4, 0.8), 3);
        assert_eq!(floor_scaled(4, 1.3), 4);
        assert_eq!(floor_scaled(4, -0.1), 0);
    }
}

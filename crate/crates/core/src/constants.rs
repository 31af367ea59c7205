//! Constants computed from first principles.

use crate::math::newton;

pub const SQRT_2: f64 = core::f64::consts::SQRT_2;

/// `2 - sqrt(2)`: the tight competitive ratio of water-filling.
pub fn two_minus_sqrt2() -> f64 {
    2.0 - SQRT_2
}

/// `1 - sqrt(2)/4`: the area under the linear gain function.
pub fn linear_gain_area() -> f64 {
    1.0 - SQRT_2 / 4.0
}

/// The Omega constant, the root of `w * e^w = 1`.
pub fn omega_constant() -> f64 {
    newton(|w| w * libm::exp(w) - 1.0, |w| (1.0 + w) * libm::exp(w), 0.5, 1e-15, 100).expect("Newton converges for w e^w = 1 from 0.5")
}

/// Root of `x = e^{-x}`, solved independently of [`omega_constant`].
pub fn omega_fixed_point() -> f64 {
    newton(|x| x - libm::exp(-x), |x| 1.0 + libm::exp(-x), 1.0, 1e-15, 100).expect("Newton converges for x = e^-x from 1")
}

/// `1 / (1 + e^Ω)`, the constant of the Ranking gain function.
pub fn ranking_gain_constant() -> f64 {
    1.0 / (1.0 + libm::exp(omega_constant()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_satisfies_its_equation() {
        let w = omega_constant();
        assert!((w * libm::exp(w) - 1.0).abs() < 1e-13);
        assert!((w - 0.5671).abs() < 1e-4);
        let x = omega_fixed_point();
        assert!((x - libm::exp(-x)).abs() < 1e-14);
        assert!((x - w).abs() < 1e-12);
    }

    #[test]
    fn ranking_constant_identity() {
        let c = ranking_gain_constant();
        assert!((c - 0.3619).abs() < 1e-4);
        let lhs = c - c * libm::log(c / (1.0 - c));
        assert!((lhs - omega_constant()).abs() < 1e-12);
        let w = omega_constant();
        assert!(((1.0 + w) / (1.0 + libm::exp(w)) - w).abs() < 1e-12);
    }

    #[test]
    fn linear_gain_area_value() {
        assert!((linear_gain_area() - 0.64645).abs() < 1e-5);
    }
}

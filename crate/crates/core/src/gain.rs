//! Gain-sharing functions.
//!
//! A gain function `g` splits each matched unit between the two endpoints of
//! an edge. Both engines integrate `g` exactly, so every gain carries its
//! antiderivative `G` (with `G(0) = 0`) and the antiderivative of `G`.

use crate::constants::{ranking_gain_constant, SQRT_2};

pub trait GainFunction {
    fn name(&self) -> &str;

    /// `g(x)` for `x` in `[0, 1]`.
    fn value(&self, x: f64) -> f64;

    /// `G(x) = ∫_0^x g`.
    fn integral(&self, x: f64) -> f64;

    /// `∫_0^x G`.
    fn second_integral(&self, x: f64) -> f64;

    /// `∫_a^b g`.
    fn integral_between(&self, a: f64, b: f64) -> f64 {
        self.integral(b) - self.integral(a)
    }
}

impl<T: GainFunction + ?Sized> GainFunction for &T {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
    fn integral(&self, x: f64) -> f64 {
        (**self).integral(x)
    }
    fn second_integral(&self, x: f64) -> f64 {
        (**self).second_integral(x)
    }
}

/// `g(x) = (√2/2) x + 1 - √2/2`, the gain that certifies `2 - √2` for
/// water-filling.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LinearGain;

/// Returns the linear water-filling gain.
pub fn linear_gain() -> LinearGain {
    LinearGain
}

impl LinearGain {
    const SLOPE: f64 = SQRT_2 / 2.0;
    const OFFSET: f64 = 1.0 - SQRT_2 / 2.0;
}

impl GainFunction for LinearGain {
    fn name(&self) -> &str {
        "linear"
    }

    fn value(&self, x: f64) -> f64 {
        Self::SLOPE * x + Self::OFFSET
    }

    fn integral(&self, x: f64) -> f64 {
        0.5 * Self::SLOPE * x * x + Self::OFFSET * x
    }

    fn second_integral(&self, x: f64) -> f64 {
        Self::SLOPE * x * x * x / 6.0 + 0.5 * Self::OFFSET * x * x
    }
}

/// The piecewise Ranking gain
///
/// ```text
/// g(y) = c / (1 - y)   for y < b = (1 - 2c) / (1 - c)
///        1 - c         for b <= y < 1
///        1             at y = 1
/// ```
///
/// with `c = 1 / (1 + e^Ω)`. The plateau value can be overridden to inject a
/// fault for mutation testing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankingGain {
    c: f64,
    breakpoint: f64,
    plateau: f64,
}

impl Default for RankingGain {
    fn default() -> Self {
        Self::new()
    }
}

impl RankingGain {
    pub fn new() -> Self {
        let c = ranking_gain_constant();
        RankingGain { c, breakpoint: (1.0 - 2.0 * c) / (1.0 - c), plateau: 1.0 - c }
    }

    /// Same breakpoint, different plateau value.
    pub fn with_plateau(plateau: f64) -> Self {
        RankingGain { plateau, ..Self::new() }
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    pub fn breakpoint(&self) -> f64 {
        self.breakpoint
    }

    pub fn plateau(&self) -> f64 {
        self.plateau
    }

    fn log_piece(&self, y: f64) -> f64 {
        -self.c * libm::log1p(-y)
    }
}

impl GainFunction for RankingGain {
    fn name(&self) -> &str {
        "ranking"
    }

    fn value(&self, y: f64) -> f64 {
        if y < self.breakpoint {
            self.c / (1.0 - y)
        } else if y < 1.0 {
            self.plateau
        } else {
            1.0
        }
    }

    fn integral(&self, y: f64) -> f64 {
        if y < self.breakpoint {
            self.log_piece(y)
        } else {
            self.log_piece(self.breakpoint) + self.plateau * (y - self.breakpoint)
        }
    }

    fn second_integral(&self, y: f64) -> f64 {
        let b = self.breakpoint;
        let log_part = |y: f64| self.c * ((1.0 - y) * libm::log1p(-y) + y);
        if y < b {
            log_part(y)
        } else {
            let d = y - b;
            log_part(b) + self.log_piece(b) * d + 0.5 * self.plateau * d * d
        }
    }
}

//! Special functions restricted to the half-integer arguments that Gaussian
//! integrals over n-dimensional surfaces produce.
//!
//! Everything here is exact recursion on top of two base cases,
//! `Γ(1, x) = e^{-x}` and `Γ(1/2, x) = √π erfc(√x)`, so no general-purpose
//! gamma approximation (Lanczos, Stirling) is involved.

use std::f64::consts::PI;

use thiserror::Error;

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Largest dimension accepted by [`unit_ball_volume`].
pub const MAX_DIM: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialError {
    #[error("incomplete gamma is only implemented for positive half-integer a (got {0})")]
    UnsupportedOrder(f64),
    #[error("incomplete gamma requires x >= 0 (got {0})")]
    NegativeArgument(f64),
    #[error("dimension {0} outside supported range 1..={MAX_DIM}")]
    DimensionOutOfRange(usize),
}

/// A positive half-integer `k/2`, stored as its doubled value `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(u32);

impl HalfInt {
    /// `k/2` for `k >= 1`.
    pub fn from_twice(k: u32) -> Option<Self> {
        (k >= 1).then_some(Self(k))
    }

    /// `n/2`, the order that appears for n-dimensional surfaces.
    pub fn half(n: usize) -> Self {
        Self(n as u32)
    }

    pub fn try_from_f64(a: f64) -> Result<Self, SpecialError> {
        let twice = 2.0 * a;
        if a > 0.0 && twice.fract() == 0.0 && twice <= u32::MAX as f64 {
            Ok(Self(twice as u32))
        } else {
            Err(SpecialError::UnsupportedOrder(a))
        }
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

/// Complementary error function.
///
/// Below 2 the result is `1 - erf(x)` with erf from the positive-term series
/// `erf(x) = 2/√π e^{-x²} Σ 2^k x^{2k+1} / (2k+1)!!`; at and above 2 a
/// continued fraction evaluated by the modified Lentz method. Negative
/// arguments use `erfc(-x) = 2 - erfc(x)`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

pub fn erf(x: f64) -> f64 {
    if x.abs() < 2.0 {
        x.signum() * erf_series(x.abs())
    } else {
        1.0 - erfc(x)
    }
}

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= 2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    2.0 / SQRT_PI * (-x2).exp() * sum
}

// erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (SQRT_PI * f)
}

/// Γ(a) for positive half-integer a.
pub fn gamma_half_int(a: HalfInt) -> f64 {
    let (mut value, mut order) = if a.0.is_multiple_of(2) { (1.0, 1.0) } else { (SQRT_PI, 0.5) };
    let target = a.value();
    while order < target {
        value *= order;
        order += 1.0;
    }
    value
}

/// Upper incomplete gamma Γ(a, x) = ∫_x^∞ e^{-η} η^{a-1} dη for half-integer a.
pub fn incomplete_gamma_upper(a: f64, x: f64) -> Result<f64, SpecialError> {
    let a = HalfInt::try_from_f64(a)?;
    if !(x >= 0.0) {
        return Err(SpecialError::NegativeArgument(x));
    }
    Ok(upper_gamma(a, x))
}

/// Infallible form of [`incomplete_gamma_upper`] for an already validated order.
pub fn upper_gamma(a: HalfInt, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x.is_infinite() {
        return 0.0;
    }
    let ex = (-x).exp();
    let (mut value, mut order) = if a.0.is_multiple_of(2) {
        (ex, 1.0)
    } else {
        (SQRT_PI * erfc(x.sqrt()), 0.5)
    };
    let target = a.value();
    // Γ(s+1, x) = s Γ(s, x) + x^s e^{-x}
    while order < target {
        value = order * value + x.powf(order) * ex;
        order += 1.0;
    }
    value
}

/// ω_n = π^{n/2} / Γ(n/2 + 1), the volume of the unit n-ball.
pub fn unit_ball_volume(n: usize) -> Result<f64, SpecialError> {
    check_dim(n)?;
    Ok(ball_volume_unchecked(n))
}

// ω_n = (2π/n) ω_{n-2} from ω_0 = 1, ω_1 = 2, which equals π^{n/2}/Γ(n/2 + 1)
// and keeps ω_1 exact.
pub(crate) fn ball_volume_unchecked(n: usize) -> f64 {
    let mut omega = if n.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = 2 + n % 2;
    while k <= n {
        omega *= 2.0 * PI / k as f64;
        k += 2;
    }
    omega
}

/// |ω_n (n/2) π^{-n/2} Γ(n/2) − 1|: the Gaussian on R^n has unit mass.
pub fn normalization_identity(n: usize) -> Result<f64, SpecialError> {
    let omega = unit_ball_volume(n)?;
    let half = n as f64 / 2.0;
    let lhs = omega * half * PI.powf(-half) * gamma_half_int(HalfInt::half(n));
    Ok((lhs - 1.0).abs())
}

fn check_dim(n: usize) -> Result<(), SpecialError> {
    if (1..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(SpecialError::DimensionOutOfRange(n))
    }
}

//! The radial profile f(r) = Vol(B(y0, r) ∩ M) and what it determines.
//!
//! Between samples f is interpolated linearly in ρ = r^n, which reproduces
//! cone profiles f = c r^n exactly and keeps the interpolant monotone. With
//! that interpolant the radial form of the functional,
//!
//! H(τ) = w(r_K) f(r_K) + ∫_0^{r_K} (s/2τ) w(s) f(s) ds + ∫_{r_K}^∞ w A ds,
//!
//! with w(s) = (4πτ)^{-n/2} e^{-s²/4τ}, integrates in closed form on every
//! segment through upper incomplete gammas.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{AmbientPoint, Submanifold};
use crate::quad::{ball_volume, EntropyValue, QuadError, QuadSpec};
use crate::special::{upper_gamma, HalfInt, SpecialError};

pub use crate::special::unit_ball_volume;

/// Relative change of the last two density ratios below which the EAVR
/// estimate counts as converged.
pub const EAVR_RTOL: f64 = 1e-2;

/// Relative floor added to every slack for rounding in exact identities.
pub const ROUNDING_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error("radius grid: {0}")]
    Grid(String),
    #[error("volume decreases from r = {r0} (f = {f0}) to r = {r1} (f = {f1}) beyond the quadrature bounds")]
    NotMonotone { r0: f64, f0: f64, r1: f64, f1: f64 },
    #[error("density ratio drops from {q0} at r = {r0} to {q1} at r = {r1} beyond the quadrature bounds")]
    DensityDrop { r0: f64, q0: f64, r1: f64, q1: f64 },
    #[error("radius {r} outside profile range [{lo}, {hi}]")]
    OutOfRange { r: f64, lo: f64, hi: f64 },
    #[error("tau must be positive (got {0})")]
    NonPositiveTau(f64),
}

/// Samples of f(r) on an increasing radius grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub center: AmbientPoint,
    pub n: usize,
    pub radii: Vec<f64>,
    pub volumes: Vec<f64>,
    pub bounds: Vec<f64>,
    /// Every ball volume met its tolerance.
    pub converged: bool,
    /// Relative tolerance used for the entropy convergence flag.
    pub eps: f64,
}

/// Bracketed estimate of lim f(r)/(ω_n r^n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EavrEstimate {
    pub value: f64,
    pub low: f64,
    pub high: f64,
    pub converged: bool,
}

/// f(r_j)/(ω_n r_j^n) and the shell ratio f'(r_j)/(n ω_n r_j^{n-1}).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blowdown {
    pub radius: f64,
    pub normalized_volume: f64,
    pub shell_ratio: f64,
    /// Estimated error of the finite-difference shell ratio.
    pub shell_slack: f64,
}

impl RadialProfile {
    /// Validates monotonicity of f; density monotonicity is checked only when
    /// `minimal` is set.
    pub fn from_samples(
        center: AmbientPoint,
        n: usize,
        radii: Vec<f64>,
        volumes: Vec<f64>,
        bounds: Vec<f64>,
        minimal: bool,
    ) -> Result<Self, ProfileError> {
        unit_ball_volume(n)?;
        check_grid(&radii)?;
        if volumes.len() != radii.len() || bounds.len() != radii.len() {
            return Err(ProfileError::Grid("radii, volumes and bounds differ in length".into()));
        }
        if volumes.iter().chain(&bounds).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ProfileError::Grid("volumes and bounds must be finite and nonnegative".into()));
        }
        let p = Self { center, n, radii, volumes, bounds, converged: true, eps: QuadSpec::default().eps };
        p.validate(minimal)?;
        Ok(p)
    }

    /// Exact profile from a known f, with zero bounds.
    pub fn from_fn(
        center: AmbientPoint,
        n: usize,
        radii: Vec<f64>,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self, ProfileError> {
        let volumes = radii.iter().map(|&r| f(r)).collect();
        let bounds = vec![0.0; radii.len()];
        Self::from_samples(center, n, radii, volumes, bounds, false)
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn omega(&self) -> f64 {
        crate::special::ball_volume_unchecked(self.n)
    }

    fn rho(&self, r: f64) -> f64 {
        r.powi(self.n as i32)
    }

    /// f_i/(ω_n r_i^n).
    pub fn density_ratios(&self) -> Vec<f64> {
        let omega = self.omega();
        self.radii.iter().zip(&self.volumes).map(|(&r, &f)| f / (omega * self.rho(r))).collect()
    }

    /// Bounds of the density ratios, including the rounding floor.
    pub fn ratio_slacks(&self) -> Vec<f64> {
        let omega = self.omega();
        self.radii
            .iter()
            .zip(&self.volumes)
            .zip(&self.bounds)
            .map(|((&r, &f), &b)| (b + ROUNDING_FLOOR * f) / (omega * self.rho(r)))
            .collect()
    }

    fn validate(&self, minimal: bool) -> Result<(), ProfileError> {
        for i in 1..self.len() {
            let (f0, f1) = (self.volumes[i - 1], self.volumes[i]);
            let slack = self.bounds[i - 1] + self.bounds[i] + ROUNDING_FLOOR * f0;
            if f1 < f0 - slack {
                return Err(ProfileError::NotMonotone { r0: self.radii[i - 1], f0, r1: self.radii[i], f1 });
            }
        }
        if minimal {
            let q = self.density_ratios();
            let s = self.ratio_slacks();
            // running maximum of q_i - s_i against each later q_j + s_j
            let mut best = 0;
            for j in 1..self.len() {
                if q[j - 1] - s[j - 1] > q[best] - s[best] {
                    best = j - 1;
                }
                if q[j] + s[j] < q[best] - s[best] {
                    return Err(ProfileError::DensityDrop {
                        r0: self.radii[best],
                        q0: q[best],
                        r1: self.radii[j],
                        q1: q[j],
                    });
                }
            }
        }
        Ok(())
    }

    /// Interpolated f at r ∈ [0, r_K].
    pub fn volume_at(&self, r: f64) -> Result<f64, ProfileError> {
        let hi = *self.radii.last().expect("nonempty profile");
        if !(0.0..=hi).contains(&r) {
            return Err(ProfileError::OutOfRange { r, lo: 0.0, hi });
        }
        let (rho, f) = self.knots();
        let x = self.rho(r);
        let j = rho.partition_point(|&p| p < x).clamp(1, rho.len() - 1);
        let t = (x - rho[j - 1]) / (rho[j] - rho[j - 1]);
        Ok(f[j - 1] + t * (f[j] - f[j - 1]))
    }

    // Knots in ρ with the origin prepended.
    fn knots(&self) -> (Vec<f64>, Vec<f64>) {
        let mut rho = vec![0.0];
        rho.extend(self.radii.iter().map(|&r| self.rho(r)));
        let mut f = vec![0.0];
        f.extend(&self.volumes);
        (rho, f)
    }

    /// Per-segment estimate of the interpolation error, Δρ²/8 · max|f''(ρ)|
    /// with f'' taken from neighbouring second divided differences.
    fn interpolation_errors(&self) -> Vec<f64> {
        let (rho, f) = self.knots();
        let k = rho.len();
        let dd2: Vec<f64> = (1..k - 1)
            .map(|i| {
                let s0 = (f[i] - f[i - 1]) / (rho[i] - rho[i - 1]);
                let s1 = (f[i + 1] - f[i]) / (rho[i + 1] - rho[i]);
                2.0 * (s1 - s0).abs() / (rho[i + 1] - rho[i - 1])
            })
            .collect();
        (1..k)
            .map(|j| {
                // segment j spans knots j-1..j; adjacent interior knots are j-1 and j
                let left = if j >= 2 { dd2[j - 2] } else { 0.0 };
                let right = if j < k - 1 { dd2[j - 1] } else { 0.0 };
                let h = rho[j] - rho[j - 1];
                h * h / 8.0 * left.max(right)
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,volume,bound\n");
        for ((r, f), b) in self.radii.iter().zip(&self.volumes).zip(&self.bounds) {
            let _ = writeln!(out, "{},{},{}", fmt17(*r), fmt17(*f), fmt17(*b));
        }
        out
    }
}

/// Full-precision formatting: 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn check_grid(radii: &[f64]) -> Result<(), ProfileError> {
    if radii.is_empty() {
        return Err(ProfileError::Grid("empty".into()));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(ProfileError::Grid("radii must be positive and finite".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ProfileError::Grid("radii must be strictly increasing".into()));
    }
    Ok(())
}

/// Ball volumes of `m` about `y0` at every radius, computed in parallel.
pub fn build_profile(
    m: &Submanifold,
    y0: &AmbientPoint,
    r_grid: &[f64],
    spec: &QuadSpec,
) -> Result<RadialProfile, ProfileError> {
    check_grid(r_grid)?;
    let values = r_grid
        .par_iter()
        .map(|&r| ball_volume(m, y0, r, spec))
        .collect::<Result<Vec<_>, _>>()?;
    let mut p = RadialProfile::from_samples(
        y0.clone(),
        m.dim(),
        r_grid.to_vec(),
        values.iter().map(|v| v.value.max(0.0)).collect(),
        values.iter().map(|v| v.error_bound).collect(),
        m.declared_minimal(),
    )?;
    p.converged = values.iter().all(|v| v.converged);
    p.eps = spec.eps;
    Ok(p)
}

/// H(τ) from the profile, bracketed by [no tail, with tail] widened by the
/// propagated volume bounds and the interpolation error estimate.
pub fn entropy_from_profile(p: &RadialProfile, tau: f64) -> Result<EntropyValue, ProfileError> {
    let eavr = eavr_estimate(p);
    entropy_with_ceiling(p, tau, eavr.high)
}

fn entropy_with_ceiling(p: &RadialProfile, tau: f64, ceiling: f64) -> Result<EntropyValue, ProfileError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(ProfileError::NonPositiveTau(tau));
    }
    let n = p.n;
    let omega = p.omega();
    let a = HalfInt::half(n + 2);
    let c = (4.0 * PI * tau).powf(-(n as f64) / 2.0);
    let pi_n = PI.powf(-(n as f64) / 2.0);
    let (rho, f) = p.knots();
    let mut b = vec![0.0];
    b.extend(&p.bounds);
    let eta: Vec<f64> = rho.iter().map(|&x| x.powf(2.0 / n as f64) / (4.0 * tau)).collect();
    let exps: Vec<f64> = eta.iter().map(|&e| (-e).exp()).collect();
    let gammas: Vec<f64> = eta.iter().map(|&e| upper_gamma(a, e)).collect();
    let interp = p.interpolation_errors();

    // ∫ (s/2τ) w (y0 + β(ρ - ρ0)) ds over one segment, for data y
    let segment = |j: usize, y: &[f64]| -> f64 {
        let beta = (y[j] - y[j - 1]) / (rho[j] - rho[j - 1]);
        c * (y[j - 1] - beta * rho[j - 1]) * (exps[j - 1] - exps[j]) + beta * pi_n * (gammas[j - 1] - gammas[j])
    };
    let last = rho.len() - 1;
    let mut value = c * exps[last] * f[last];
    let mut quad = c * exps[last] * b[last];
    let mut interp_err = 0.0;
    for j in 1..=last {
        value += segment(j, &f);
        quad += segment(j, &b);
        interp_err += interp[j - 1] * c * (exps[j - 1] - exps[j]);
    }
    let tail = if ceiling.is_finite() {
        let f_low = (f[last] - b[last]).max(0.0);
        (ceiling * omega * pi_n * gammas[last] - c * exps[last] * f_low).max(0.0)
    } else {
        f64::INFINITY
    };
    let value = value.max(0.0);
    let spread = quad.abs() + interp_err + ROUNDING_FLOOR * value;
    Ok(EntropyValue {
        tau,
        value,
        error_bound: spread + tail,
        bound_low: (value - spread).max(0.0),
        bound_high: value + spread + tail,
        converged: p.converged && tail <= p.eps * value,
    })
}

/// [`entropy_from_profile`] over a τ grid, in parallel.
pub fn entropy_curve(p: &RadialProfile, taus: &[f64]) -> Result<Vec<EntropyValue>, ProfileError> {
    let eavr = eavr_estimate(p);
    taus.par_iter().map(|&t| entropy_with_ceiling(p, t, eavr.high)).collect()
}

pub fn entropy_curve_csv(curve: &[EntropyValue]) -> String {
    let mut out = String::from("tau,entropy,bound_low,bound_high\n");
    for e in curve {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt17(e.tau),
            fmt17(e.value),
            fmt17(e.bound_low),
            fmt17(e.bound_high)
        );
    }
    out
}

pub fn eavr_estimate(p: &RadialProfile) -> EavrEstimate {
    eavr_estimate_with(p, EAVR_RTOL)
}

/// value = last density ratio; low = largest ratio minus its bound. When the
/// last three ratios rise with shrinking steps, high is the larger of a
/// first-order Richardson extrapolation in 1/r and a fit of L − C r^{-p}
/// through those three ratios; otherwise high = +∞.
pub fn eavr_estimate_with(p: &RadialProfile, rtol: f64) -> EavrEstimate {
    let q = p.density_ratios();
    let s = p.ratio_slacks();
    let k = q.len();
    let value = q[k - 1];
    let low = q
        .iter()
        .zip(&s)
        .map(|(q, s)| q - s)
        .fold(f64::NEG_INFINITY, f64::max)
        .min(value)
        .max(0.0);
    if k < 3 {
        return EavrEstimate { value, low, high: f64::INFINITY, converged: false };
    }
    let (r0, r1, r2) = (p.radii[k - 3], p.radii[k - 2], p.radii[k - 1]);
    let d1 = q[k - 2] - q[k - 3];
    let d2 = q[k - 1] - q[k - 2];
    let slack = s[k - 3] + 2.0 * s[k - 2] + s[k - 1];
    let rising = d1 >= -slack && d2 >= -slack;
    let decelerating = d2 <= d1 + slack;
    if !(rising && decelerating) {
        return EavrEstimate { value, low, high: f64::INFINITY, converged: false };
    }
    let richardson = (r2 * q[k - 1] - r1 * q[k - 2]) / (r2 - r1);
    let rich_slack = (r2 * s[k - 1] + r1 * s[k - 2]) / (r2 - r1);
    let mut high = value.max(richardson) + rich_slack + s[k - 1];
    if d1 > 4.0 * slack && d2 > 0.0 && d2 < d1 {
        if let Some(power) = decay_power(r0, r1, r2, d2 / d1) {
            let c = d2 / (r1.powf(-power) - r2.powf(-power));
            high = high.max(value + c * r2.powf(-power) + slack);
        }
    }
    let converged = d2.abs() < rtol * value.abs().max(f64::MIN_POSITIVE);
    EavrEstimate { value, low, high, converged }
}

// p > 0 with (r1^-p − r2^-p)/(r0^-p − r1^-p) = ratio, by bisection; the
// left side falls from its p → 0 limit ln(r2/r1)/ln(r1/r0) toward 0.
fn decay_power(r0: f64, r1: f64, r2: f64, ratio: f64) -> Option<f64> {
    let f = |p: f64| (r1.powf(-p) - r2.powf(-p)) / (r0.powf(-p) - r1.powf(-p)) - ratio;
    let (mut lo, mut hi) = (1e-6, 60.0);
    if f(lo) <= 0.0 || f(hi) >= 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Blow-down quantities at r_j ∈ [r_1, r_K]. The shell ratio is the slope
/// df/dρ over ω_n, taken from the quadratic through the three knots nearest
/// r_j (the origin counts as a knot).
pub fn blowdown(p: &RadialProfile, r_j: f64) -> Result<Blowdown, ProfileError> {
    let (lo, hi) = (p.radii[0], *p.radii.last().expect("nonempty profile"));
    if !(r_j >= lo && r_j <= hi) {
        return Err(ProfileError::OutOfRange { r: r_j, lo, hi });
    }
    let omega = p.omega();
    let x = p.rho(r_j);
    let normalized_volume = p.volume_at(r_j)? / (omega * x);
    let (rho, f) = p.knots();
    let mut b = vec![0.0];
    b.extend(&p.bounds);
    let k = rho.len();
    if k < 3 {
        let slope = (f[1] - f[0]) / (rho[1] - rho[0]);
        return Ok(Blowdown { radius: r_j, normalized_volume, shell_ratio: slope / omega, shell_slack: f64::INFINITY });
    }
    // nearest knot, clamped so both neighbours exist
    let nearest = (0..k)
        .min_by(|&i, &j| (rho[i] - x).abs().total_cmp(&(rho[j] - x).abs()))
        .expect("knots");
    let m = nearest.clamp(1, k - 2);
    let (x0, x1, x2) = (rho[m - 1], rho[m], rho[m + 1]);
    let (s0, s1) = ((f[m] - f[m - 1]) / (x1 - x0), (f[m + 1] - f[m]) / (x2 - x1));
    let curv = (s1 - s0) / (x2 - x0);
    let slope = s0 + curv * (2.0 * x - x0 - x1);

    // Error of the quadratic derivative ~ |f'''|/6 · |(x-x0)(x-x1) + ...|,
    // with the third divided difference from an adjacent four-knot window.
    let dd3 = |i: usize| -> Option<f64> {
        (i + 3 < k).then(|| {
            let d = |a: usize| (f[a + 1] - f[a]) / (rho[a + 1] - rho[a]);
            let c0 = (d(i + 1) - d(i)) / (rho[i + 2] - rho[i]);
            let c1 = (d(i + 2) - d(i + 1)) / (rho[i + 3] - rho[i + 1]);
            (c1 - c0) / (rho[i + 3] - rho[i])
        })
    };
    let third = [m.checked_sub(2).and_then(dd3), dd3(m - 1)]
        .into_iter()
        .flatten()
        .map(f64::abs)
        .fold(0.0, f64::max);
    let spread = ((x - x0) * (x - x1) + (x - x1) * (x - x2) + (x - x0) * (x - x2)).abs();
    let noise = 2.0 * (b[m - 1] + b[m] + b[m + 1]) / (x1 - x0).min(x2 - x1);
    let shell_slack = (third * spread + noise) / omega + ROUNDING_FLOOR * (slope / omega).abs();
    Ok(Blowdown { radius: r_j, normalized_volume, shell_ratio: slope / omega, shell_slack })
}

pub fn blowdown_csv(rows: &[Blowdown]) -> String {
    let mut out = String::from("r_j,normalized_volume,shell_ratio\n");
    for b in rows {
        let _ = writeln!(out, "{},{},{}", fmt17(b.radius), fmt17(b.normalized_volume), fmt17(b.shell_ratio));
    }
    out
}

/// Log-spaced grid with exact endpoints.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| match i {
            0 => lo,
            i if i == count - 1 => hi,
            i => (a + (b - a) * i as f64 / (count - 1) as f64).exp(),
        })
        .collect()
}

/// Linearly spaced grid with exact endpoints.
pub fn lin_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    (0..count)
        .map(|i| if i == count - 1 { hi } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 })
        .collect()
}

//! Gaussian-weighted and ball-clipped integration over charts.
//!
//! Both integrals run the same globally adaptive tensor Gauss–Legendre
//! scheme (order 8 estimate, order 12 value, their difference as the error)
//! over a parameter box large enough to contain the preimage of the ball
//! of interest. Ball clipping locates the sphere crossing along one
//! parameter line per outer node by root finding, so the inner integrals
//! stay smooth.

pub mod adaptive;
pub mod gauss;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{AmbientPoint, GeomError, ImmersionChart, Submanifold};
use crate::special::{ball_volume_unchecked, upper_gamma, HalfInt};
use adaptive::{AdaptiveOptions, Cell, CellEstimate};
use gauss::{gl12, gl8, GaussRule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("tau must be positive (got {0})")]
    NonPositiveTau(f64),
    #[error("radius must be positive (got {0})")]
    NonPositiveRadius(f64),
    #[error("chart `{chart}` does not leave the ball of radius {radius} within parameter extent {extent:e}")]
    NotProper { chart: String, radius: f64, extent: f64 },
    #[error("chart `{0}` has an unbounded domain")]
    Unbounded(String),
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
}

/// Knobs for every integral in this module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadSpec {
    /// Target relative error.
    pub eps: f64,
    /// Budget of cell bisections per chart integral.
    pub max_subdivisions: usize,
    /// Cells per axis in the initial grid.
    pub initial_cells: usize,
    /// Deepest allowed bisection level; bounds ball-clip refinement.
    pub max_depth: u32,
    /// Safety factor c_tail on the Gaussian truncation radius.
    pub tail_safety: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { eps: 1e-10, max_subdivisions: 200_000, initial_cells: 8, max_depth: 40, tail_safety: 1.5 }
    }
}

impl QuadSpec {
    pub fn validate(&self) -> Result<(), QuadError> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(QuadError::InvalidSpec(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if self.max_subdivisions < 1 || self.initial_cells < 1 || self.max_depth < 1 {
            return Err(QuadError::InvalidSpec("counts and depths must be at least 1".into()));
        }
        if !(self.tail_safety >= 1.0) {
            return Err(QuadError::InvalidSpec("tail_safety must be >= 1".into()));
        }
        Ok(())
    }

    fn options(&self, rel_tol: f64, abs_tol: f64) -> AdaptiveOptions {
        AdaptiveOptions {
            rel_tol,
            abs_tol: abs_tol.max(1e-300),
            max_subdivisions: self.max_subdivisions,
            max_depth: self.max_depth,
        }
    }
}

/// H_{y0,τ}(M) with its bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    pub tau: f64,
    pub value: f64,
    /// Total of quadrature and truncation error estimates.
    pub error_bound: f64,
    pub bound_low: f64,
    pub bound_high: f64,
    pub converged: bool,
}

/// Vol(B(y0, r) ∩ M) with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeValue {
    pub radius: f64,
    pub value: f64,
    pub error_bound: f64,
    pub converged: bool,
}

/// Parameter box whose complement maps outside B(y0, radius), as far as
/// sampling its unbounded faces can tell. Bounded axes keep their bounds.
pub fn cover_box(
    chart: &ImmersionChart,
    y0: &AmbientPoint,
    radius: f64,
) -> Result<Vec<(f64, f64)>, QuadError> {
    const FACE_SAMPLES: usize = 17;
    const MAX_DOUBLINGS: usize = 60;
    let axes = &chart.domain().axes;
    let n = axes.len();
    // extents[a] = (down, up) distances from the anchor for open ends
    let mut extents = vec![(1.0f64, 1.0f64); n];
    let bounds = |extents: &[(f64, f64)]| -> Vec<(f64, f64)> {
        axes.iter()
            .zip(extents)
            .map(|(axis, &(down, up))| match (axis.lo, axis.hi) {
                (Some(lo), Some(hi)) => (lo, hi),
                (Some(lo), None) => (lo, lo + up),
                (None, Some(hi)) => (hi - down, hi),
                (None, None) => (-down, up),
            })
            .collect()
    };
    for _ in 0..MAX_DOUBLINGS {
        let b = bounds(&extents);
        let mut grew = false;
        for a in 0..n {
            for (side, open) in [(0usize, axes[a].lo.is_none()), (1, axes[a].hi.is_none())] {
                if !open {
                    continue;
                }
                let fixed = if side == 0 { b[a].0 } else { b[a].1 };
                if face_min_distance(chart, y0, &b, a, fixed, FACE_SAMPLES)? <= radius {
                    if side == 0 {
                        extents[a].0 *= 2.0;
                    } else {
                        extents[a].1 *= 2.0;
                    }
                    grew = true;
                }
            }
        }
        if !grew {
            return Ok(b);
        }
    }
    let extent = extents.iter().map(|&(d, u)| d.max(u)).fold(0.0, f64::max);
    Err(QuadError::NotProper { chart: chart.label().to_string(), radius, extent })
}

fn face_min_distance(
    chart: &ImmersionChart,
    y0: &AmbientPoint,
    bounds: &[(f64, f64)],
    axis: usize,
    fixed: f64,
    samples: usize,
) -> Result<f64, QuadError> {
    let n = bounds.len();
    let free: Vec<usize> = (0..n).filter(|&a| a != axis).collect();
    let total = samples.pow(free.len() as u32);
    let mut u = vec![0.0; n];
    u[axis] = fixed;
    let mut best = f64::INFINITY;
    for mut k in 0..total {
        for &a in &free {
            let i = k % samples;
            k /= samples;
            let (lo, hi) = bounds[a];
            u[a] = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        }
        let p = chart.point(&u)?;
        best = best.min(y0.distance(&p));
    }
    Ok(best)
}

fn tensor_rule(
    cell: &Cell,
    rule: &GaussRule,
    f: &mut impl FnMut(&[f64]) -> Result<f64, GeomError>,
) -> Result<f64, GeomError> {
    let n = cell.dim();
    let p = rule.order();
    let half: Vec<f64> = (0..n).map(|a| 0.5 * (cell.hi[a] - cell.lo[a])).collect();
    let mid = cell.center();
    let mut u = vec![0.0; n];
    let mut sum = 0.0;
    for mut k in 0..p.pow(n as u32) {
        let mut w = 1.0;
        for a in 0..n {
            let i = k % p;
            k /= p;
            u[a] = mid[a] + half[a] * rule.nodes[i];
            w *= rule.weights[i];
        }
        sum += w * f(&u)?;
    }
    Ok(sum * half.iter().product::<f64>())
}

fn smooth_estimate(
    cell: &Cell,
    f: impl Fn(&[f64]) -> Result<f64, GeomError>,
) -> Result<CellEstimate, GeomError> {
    let mut f = f;
    let low = tensor_rule(cell, gl8(), &mut f)?;
    let high = tensor_rule(cell, gl12(), &mut f)?;
    Ok(CellEstimate { value: high, error: (high - low).abs() })
}

fn gaussian_weight(n: usize, tau: f64) -> impl Fn(f64) -> f64 {
    let norm = (4.0 * PI * tau).powf(-(n as f64) / 2.0);
    move |d2: f64| norm * (-d2 / (4.0 * tau)).exp()
}

/// ∫ over a bounded chart of its area element.
pub fn chart_area(chart: &ImmersionChart, spec: &QuadSpec) -> Result<f64, QuadError> {
    spec.validate()?;
    let bounds: Vec<(f64, f64)> = chart
        .domain()
        .axes
        .iter()
        .map(|a| match (a.lo, a.hi) {
            (Some(lo), Some(hi)) => Ok((lo, hi)),
            _ => Err(QuadError::Unbounded(chart.label().to_string())),
        })
        .collect::<Result<_, _>>()?;
    let out = box_area(chart, &bounds, spec, spec.eps)?;
    Ok(out.value)
}

fn box_area(
    chart: &ImmersionChart,
    bounds: &[(f64, f64)],
    spec: &QuadSpec,
    rel_tol: f64,
) -> Result<adaptive::AdaptiveOutcome, QuadError> {
    let cells = Cell::grid(bounds, spec.initial_cells);
    let rule = |c: &Cell| smooth_estimate(c, |u| Ok(chart.area_density(u)?.1));
    Ok(adaptive::integrate(cells, rule, spec.options(rel_tol, 0.0))?)
}

/// Direct evaluation of H_{y0,τ}(M) = ∫_M (4πτ)^{-n/2} e^{-|x-y0|²/4τ} dμ.
///
/// Unbounded parameter directions are cut off once the ambient radius
/// exceeds R, starting from R = c_tail·sqrt(4τ ln(1/ε)). The discarded part
/// is bounded by Θ ω_n π^{-n/2} Γ(n/2+1, R²/4τ), where Θ is twice the area
/// of the integration box over ω_n R^n; R grows until that bound falls
/// below ε/2 of the value.
pub fn huisken_direct(
    m: &Submanifold,
    y0: &AmbientPoint,
    tau: f64,
    spec: &QuadSpec,
) -> Result<EntropyValue, QuadError> {
    spec.validate()?;
    m.check_point(y0)?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(QuadError::NonPositiveTau(tau));
    }
    let n = m.dim();
    let weight = gaussian_weight(n, tau);
    let mut radius = spec.tail_safety * (4.0 * tau * (1.0 / spec.eps).ln()).sqrt();
    let mut last = None;
    for _ in 0..16 {
        let mut values = Vec::new();
        let mut errors = Vec::new();
        let mut area = 0.0;
        let mut converged = true;
        for chart in m.charts() {
            let bounds = cover_box(chart, y0, radius)?;
            area += box_area(chart, &bounds, spec, 1e-6)?.value;
            let cells = Cell::grid(&bounds, spec.initial_cells);
            let rule = |c: &Cell| {
                smooth_estimate(c, |u| {
                    let (p, jac) = chart.area_density(u)?;
                    Ok(weight(y0.distance_squared(&p)) * jac)
                })
            };
            let out = adaptive::integrate(cells, rule, spec.options(0.5 * spec.eps, 0.0))?;
            converged &= out.converged;
            values.push(out.value);
            errors.push(out.error);
        }
        let value = adaptive::pairwise_sum(&values);
        let quad_error = adaptive::pairwise_sum(&errors);
        let theta = 2.0 * area / (ball_volume_unchecked(n) * radius.powi(n as i32));
        let eta = radius * radius / (4.0 * tau);
        let tail = theta
            * ball_volume_unchecked(n)
            * PI.powf(-(n as f64) / 2.0)
            * upper_gamma(HalfInt::half(n + 2), eta);
        let result = EntropyValue {
            tau,
            value,
            error_bound: quad_error + tail,
            bound_low: value - quad_error,
            bound_high: value + quad_error + tail,
            converged: converged && tail <= 0.5 * spec.eps * value,
        };
        if result.converged || !converged {
            return Ok(result);
        }
        last = Some(result);
        radius *= 1.25;
    }
    Ok(last.expect("at least one pass"))
}

/// Vol(B(y0, r) ∩ M), counted with multiplicity over charts.
pub fn ball_volume(
    m: &Submanifold,
    y0: &AmbientPoint,
    r: f64,
    spec: &QuadSpec,
) -> Result<VolumeValue, QuadError> {
    spec.validate()?;
    m.check_point(y0)?;
    if !(r > 0.0) || !r.is_finite() {
        return Err(QuadError::NonPositiveRadius(r));
    }
    let mut values = Vec::new();
    let mut errors = Vec::new();
    let mut converged = true;
    for chart in m.charts() {
        let bounds = cover_box(chart, y0, r)?;
        let cells = Cell::grid(&bounds, spec.initial_cells);
        let rule = |c: &Cell| clipped_estimate(chart, y0, r, c);
        // a flat n-disk of radius r sets the absolute scale, so tangential
        // contact with a vanishing volume still terminates
        let disk = ball_volume_unchecked(m.dim()) * r.powi(m.dim() as i32);
        let out = adaptive::integrate(cells, rule, spec.options(spec.eps, spec.eps * disk))?;
        converged &= out.converged;
        values.push(out.value);
        errors.push(out.error);
    }
    Ok(VolumeValue {
        radius: r,
        value: adaptive::pairwise_sum(&values),
        error_bound: adaptive::pairwise_sum(&errors),
        converged,
    })
}

enum Placement {
    Inside,
    Outside,
    Straddling,
}

// Compares the ball against the image of the 3^n grid of corners, edge
// midpoints and center, padded by twice the largest spread from the center.
fn place_cell(
    chart: &ImmersionChart,
    y0: &AmbientPoint,
    r: f64,
    cell: &Cell,
) -> Result<Placement, GeomError> {
    let n = cell.dim();
    let center = chart.point(&cell.center())?;
    let d_center = y0.distance(&center);
    let mut spread: f64 = 0.0;
    let mut u = vec![0.0; n];
    for mut k in 0..3usize.pow(n as u32) {
        for a in 0..n {
            let t = (k % 3) as f64 / 2.0;
            k /= 3;
            u[a] = cell.lo[a] + t * (cell.hi[a] - cell.lo[a]);
        }
        let p = chart.point(&u)?;
        let s: f64 = p.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
        spread = spread.max(s.sqrt());
    }
    Ok(if d_center + 2.0 * spread < r {
        Placement::Inside
    } else if d_center - 2.0 * spread > r {
        Placement::Outside
    } else {
        Placement::Straddling
    })
}

fn clipped_estimate(
    chart: &ImmersionChart,
    y0: &AmbientPoint,
    r: f64,
    cell: &Cell,
) -> Result<CellEstimate, GeomError> {
    match place_cell(chart, y0, r, cell)? {
        Placement::Outside => Ok(CellEstimate { value: 0.0, error: 0.0 }),
        Placement::Inside => smooth_estimate(cell, |u| Ok(chart.area_density(u)?.1)),
        Placement::Straddling => {
            let axis = clip_axis(chart, y0, cell)?;
            let low = clipped_rule(chart, y0, r, cell, axis, gl8())?;
            let high = clipped_rule(chart, y0, r, cell, axis, gl12())?;
            Ok(CellEstimate { value: high, error: (high - low).abs() })
        }
    }
}

// Axis along which |X - y0|² changes most across the cell.
fn clip_axis(chart: &ImmersionChart, y0: &AmbientPoint, cell: &Cell) -> Result<usize, GeomError> {
    let n = cell.dim();
    if n == 1 {
        return Ok(0);
    }
    let (p, jac) = chart.first_order(&cell.center())?;
    let mut best = (0, -1.0);
    for a in 0..n {
        let g: f64 = (0..p.len()).map(|i| (p[i] - y0.coords()[i]) * jac[i * n + a]).sum();
        let score = g.abs() * (cell.hi[a] - cell.lo[a]);
        if score > best.1 {
            best = (a, score);
        }
    }
    Ok(best.0)
}

fn clipped_rule(
    chart: &ImmersionChart,
    y0: &AmbientPoint,
    r: f64,
    cell: &Cell,
    axis: usize,
    rule: &GaussRule,
) -> Result<f64, GeomError> {
    let n = cell.dim();
    let mut u = cell.center();
    if n == 2 {
        // The inner integral has a kink wherever the sphere leaves the cell
        // through a face u_axis = const; split the outer axis there.
        let b = 1 - axis;
        let mut cuts = vec![cell.lo[b]];
        for face in [cell.lo[axis], cell.hi[axis]] {
            u[axis] = face;
            cuts.extend(crossings(chart, y0, r, &mut u, b, cell.lo[b], cell.hi[b])?);
        }
        cuts.push(cell.hi[b]);
        cuts.sort_by(f64::total_cmp);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                total += rule.integrate(w[0], w[1], |t| {
                    u[b] = t;
                    clipped_line(chart, y0, r, &mut u, axis, cell.lo[axis], cell.hi[axis], rule)
                })?;
            }
        }
        return Ok(total);
    }
    let outer: Vec<usize> = (0..n).filter(|&a| a != axis).collect();
    let p = rule.order();
    let mut sum = 0.0;
    let mut jac_outer = 1.0;
    for &a in &outer {
        jac_outer *= 0.5 * (cell.hi[a] - cell.lo[a]);
    }
    for mut k in 0..p.pow(outer.len() as u32) {
        let mut w = 1.0;
        for &a in &outer {
            let i = k % p;
            k /= p;
            u[a] = 0.5 * (cell.lo[a] + cell.hi[a]) + 0.5 * (cell.hi[a] - cell.lo[a]) * rule.nodes[i];
            w *= rule.weights[i];
        }
        sum += w * clipped_line(chart, y0, r, &mut u, axis, cell.lo[axis], cell.hi[axis], rule)?;
    }
    Ok(sum * jac_outer)
}

/// Parameters t ∈ (a, b) where |X(u with u_axis = t) − y0| crosses r.
#[allow(clippy::too_many_arguments)]
fn crossings(
    chart: &ImmersionChart,
    y0: &AmbientPoint,
    r: f64,
    u: &mut [f64],
    axis: usize,
    a: f64,
    b: f64,
) -> Result<Vec<f64>, GeomError> {
    const SAMPLES: usize = 8;
    let r2 = r * r;
    let mut g = |t: f64, u: &mut [f64]| -> Result<f64, GeomError> {
        u[axis] = t;
        Ok(y0.distance_squared(&chart.point(u)?) - r2)
    };
    let ts: Vec<f64> = (0..=SAMPLES).map(|i| a + (b - a) * i as f64 / SAMPLES as f64).collect();
    let gs: Vec<f64> = ts.iter().map(|&t| g(t, u)).collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for i in 0..SAMPLES {
        if (gs[i] <= 0.0) != (gs[i + 1] <= 0.0) {
            out.push(find_root(&mut g, u, ts[i], ts[i + 1], gs[i], gs[i + 1])?);
        }
    }
    Ok(out)
}

/// ∫ over {t ∈ [a, b] : |X(u with u_axis = t) − y0| ≤ r} of the area density.
#[allow(clippy::too_many_arguments)]
fn clipped_line(
    chart: &ImmersionChart,
    y0: &AmbientPoint,
    r: f64,
    u: &mut [f64],
    axis: usize,
    a: f64,
    b: f64,
    rule: &GaussRule,
) -> Result<f64, GeomError> {
    let mut cuts = vec![a];
    cuts.extend(crossings(chart, y0, r, u, axis, a, b)?);
    cuts.push(b);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        u[axis] = 0.5 * (lo + hi);
        if y0.distance(&chart.point(u)?) > r {
            continue;
        }
        total += rule.integrate(lo, hi, |t| {
            u[axis] = t;
            Ok::<_, GeomError>(chart.area_density(u)?.1)
        })?;
    }
    Ok(total)
}

// Illinois false position on a bracketed sign change.
fn find_root(
    g: &mut impl FnMut(f64, &mut [f64]) -> Result<f64, GeomError>,
    u: &mut [f64],
    mut a: f64,
    mut b: f64,
    mut ga: f64,
    mut gb: f64,
) -> Result<f64, GeomError> {
    let mut side = 0i8;
    for _ in 0..100 {
        let c = if ga != gb { (a * gb - b * ga) / (gb - ga) } else { 0.5 * (a + b) };
        let c = if c > a.min(b) && c < a.max(b) { c } else { 0.5 * (a + b) };
        if (b - a).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1e-300) {
            return Ok(c);
        }
        let gc = g(c, u)?;
        if gc == 0.0 {
            return Ok(c);
        }
        if (gc <= 0.0) == (gb <= 0.0) {
            b = c;
            gb = gc;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            ga = gc;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a + b))
}

//! Machine-checked inequalities for minimal submanifolds.
//!
//! Every check records the point of the grid where the inequality comes
//! closest to failing: its raw margin (positive means satisfied) and the
//! slack allowed there, built from the quadrature and interpolation bounds
//! of the quantities involved plus a 1e-12 relative rounding floor. A check
//! passes iff that margin is at least minus the slack.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{check_minimality_seeded, AmbientPoint, GeomError};
use crate::profile::{
    blowdown, build_profile, eavr_estimate, entropy_curve, EavrEstimate, ProfileError, RadialProfile,
    ROUNDING_FLOOR,
};
use crate::quad::{EntropyValue, QuadSpec};
use crate::special::{upper_gamma, HalfInt};
use crate::zoo::ZooEntry;

pub use crate::special::{incomplete_gamma_upper, normalization_identity};

/// Largest |H| accepted as minimal.
pub const MINIMALITY_TOL: f64 = 1e-8;
pub const MINIMALITY_SAMPLES: usize = 1000;
/// Allowed relative gap between H(τ_max) and the EAVR estimate.
pub const THEOREM_RTOL: f64 = 1e-2;
/// Absolute allowance on the entropy spread of a cone.
pub const CONE_SPREAD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("ball volume did not converge on the radius grid; raise the subdivision budget or eps")]
    Unconverged,
}

mod anchor {
    pub const MINIMALITY: &str = "H = 0 everywhere on M";
    pub const DENSITY: &str = "Vol(B(y0,s) ∩ M)/s^n >= Vol(B(y0,r) ∩ M)/r^n for s >= r";
    pub const SHELL: &str = "Vol(B(y0,r) ∩ M)/(ω_n r^n) <= f'(s)/(n ω_n s^(n-1)) <= EAVR for s >= r";
    pub const BOUNDS: &str = "(4πτ)^(-n/2) e^(-r²/4τ) f(r) + (n/2) π^(-n/2) (f(r)/r^n) Γ(n/2, r²/4τ) <= H(τ) <= EAVR";
    pub const MONOTONE: &str = "H(τ') >= H(τ) for τ' >= τ";
    pub const CONE: &str = "H(τ) is constant in τ if and only if M is a cone about y0";
    pub const THEOREM: &str = "lim_(τ→∞) H(τ) = EAVR";
    pub const CLOSING: &str = "|H(τ) − EAVR| decreases as τ grows";
}

/// One inequality evaluated over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    /// The inequality or identity being checked.
    pub anchor: String,
    /// `None` when the check does not apply.
    pub pass: Option<bool>,
    pub worst_margin: Option<f64>,
    pub tolerance: Option<f64>,
    pub grid: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckRecord {
    fn new(id: &str, anchor: &str, grid: String) -> Self {
        Self {
            id: id.into(),
            anchor: anchor.into(),
            pass: None,
            worst_margin: None,
            tolerance: None,
            grid,
            detail: String::new(),
        }
    }

    fn not_applicable(mut self, why: impl Into<String>) -> Self {
        self.detail = format!("not applicable: {}", why.into());
        self
    }

    fn judged(mut self, worst: Option<Worst>, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        match worst {
            Some(w) => {
                self.worst_margin = Some(w.margin);
                self.tolerance = Some(w.slack);
                self.pass = Some(w.margin >= -w.slack);
            }
            None => self.pass = Some(true),
        }
        self
    }

    fn failed(mut self, why: impl Into<String>) -> Self {
        self.pass = Some(false);
        self.detail = why.into();
        self
    }

    pub fn applicable(&self) -> bool {
        self.pass.is_some()
    }
}

/// The margin/slack pair closest to failure.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Worst {
    margin: f64,
    slack: f64,
    at: (usize, usize),
}

#[derive(Default)]
struct Tracker(Option<Worst>);

impl Tracker {
    fn see(&mut self, margin: f64, slack: f64, at: (usize, usize)) {
        let better = match self.0 {
            None => true,
            Some(w) => margin + slack < w.margin + w.slack,
        };
        if better && margin.is_finite() {
            self.0 = Some(Worst { margin, slack, at });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub surface: String,
    pub center: Vec<f64>,
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    /// True iff every applicable check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass != Some(false))
    }

    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Radius and τ grids for [`run_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteGrids {
    pub radii: Vec<f64>,
    pub taus: Vec<f64>,
}

fn describe(name: &str, xs: &[f64]) -> String {
    match (xs.first(), xs.last()) {
        (Some(a), Some(b)) => format!("{name}: {} points in [{a}, {b}]", xs.len()),
        _ => format!("{name}: empty"),
    }
}

pub fn check_minimality(
    m: &crate::geom::Submanifold,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<CheckRecord, GeomError> {
    let rec = CheckRecord::new("minimality", anchor::MINIMALITY, format!("{samples} lattice samples per chart"));
    let res = check_minimality_seeded(m, samples, tol, seed)?;
    let worst = Worst { margin: tol - res.max_mean_curvature, slack: 0.0, at: (0, 0) };
    Ok(rec.judged(Some(worst), format!("max |H| = {:e}", res.max_mean_curvature)))
}

/// f(s)/s^n >= f(r)/r^n for every pair r < s of the grid.
pub fn check_density_monotonicity(p: &RadialProfile) -> CheckRecord {
    let rec = CheckRecord::new(
        "density_monotonicity",
        anchor::DENSITY,
        describe("r", &p.radii),
    );
    let q = p.density_ratios();
    let s = p.ratio_slacks();
    let mut t = Tracker::default();
    for i in 0..q.len() {
        for j in i + 1..q.len() {
            t.see(q[j] - q[i], s[i] + s[j] + ROUNDING_FLOOR * q[i].abs(), (i, j));
        }
    }
    let detail = match t.0 {
        Some(w) if w.margin < -w.slack => {
            format!("ratio drops between r = {} and r = {}", p.radii[w.at.0], p.radii[w.at.1])
        }
        _ => String::new(),
    };
    rec.judged(t.0, detail)
}

/// Shell ratios Â(s)/(n ω_n s^{n-1}), with Â = f' by finite differences,
/// sit between every earlier density ratio and the EAVR upper bracket.
pub fn check_shell_sandwich(p: &RadialProfile, eavr: &EavrEstimate) -> CheckRecord {
    let rec = CheckRecord::new(
        "shell_sandwich",
        anchor::SHELL,
        describe("r", &p.radii),
    );
    let k = p.len();
    if k < 4 {
        return rec.not_applicable("needs at least 4 radii");
    }
    let q = p.density_ratios();
    let s = p.ratio_slacks();
    let mut t = Tracker::default();
    for i in 1..k - 1 {
        let b = match blowdown(p, p.radii[i]) {
            Ok(b) => b,
            Err(e) => return rec.failed(e.to_string()),
        };
        for j in 0..=i {
            t.see(b.shell_ratio - q[j], b.shell_slack + s[j], (j, i));
        }
        if eavr.high.is_finite() {
            t.see(eavr.high - b.shell_ratio, b.shell_slack, (i, i));
        }
    }
    rec.judged(t.0, if eavr.high.is_finite() { "" } else { "upper side skipped: EAVR bracket unbounded" })
}

/// H(τ) >= (4πτ)^{-n/2} e^{-r²/4τ} f(r) + (n/2) π^{-n/2} (f(r)/r^n) Γ(n/2, r²/4τ)
/// on the full (r, τ) grid, and H(τ) <= EAVR.
pub fn check_entropy_bounds(p: &RadialProfile, eavr: &EavrEstimate, curve: &[EntropyValue]) -> CheckRecord {
    let rec = CheckRecord::new(
        "entropy_bounds",
        anchor::BOUNDS,
        format!("{} x {}", describe("r", &p.radii), describe("tau", &curve.iter().map(|e| e.tau).collect::<Vec<_>>())),
    );
    let n = p.n;
    let half = n as f64 / 2.0;
    let pi_n = std::f64::consts::PI.powf(-half);
    let mut t = Tracker::default();
    for (j, h) in curve.iter().enumerate() {
        let up = h.bound_high - h.value;
        let down = h.value - h.bound_low;
        let c = (4.0 * std::f64::consts::PI * h.tau).powf(-half);
        for (i, (&r, (&f, &b))) in p.radii.iter().zip(p.volumes.iter().zip(&p.bounds)).enumerate() {
            let eta = r * r / (4.0 * h.tau);
            let coeff = c * (-eta).exp() + half * pi_n * upper_gamma(HalfInt::half(n), eta) / r.powi(n as i32);
            let lower = coeff * f;
            let slack = up + coeff * b + ROUNDING_FLOOR * lower.abs().max(h.value);
            t.see(h.value - lower, slack, (i, j));
        }
        if eavr.high.is_finite() {
            let slack = down + (eavr.high - eavr.value) + ROUNDING_FLOOR * h.value;
            t.see(eavr.value - h.value, slack, (usize::MAX, j));
        }
    }
    rec.judged(t.0, if eavr.high.is_finite() { "" } else { "upper side skipped: EAVR bracket unbounded" })
}

/// H(τ) nondecreasing over the grid.
pub fn check_entropy_monotonicity(curve: &[EntropyValue]) -> CheckRecord {
    let taus: Vec<f64> = curve.iter().map(|e| e.tau).collect();
    let rec = CheckRecord::new("entropy_monotonicity", anchor::MONOTONE, describe("tau", &taus));
    let mut t = Tracker::default();
    for (i, a) in curve.iter().enumerate() {
        for (j, b) in curve.iter().enumerate().skip(i + 1) {
            let slack = (a.value - a.bound_low) + (b.bound_high - b.value) + ROUNDING_FLOOR * a.value;
            t.see(b.value - a.value, slack, (i, j));
        }
    }
    rec.judged(t.0, "")
}

/// Cones have τ-independent entropy; other minimal surfaces with finite
/// EAVR show at least one bracket-separated increase.
pub fn check_cone_invariance(entry: &ZooEntry, y0: &AmbientPoint, curve: &[EntropyValue]) -> CheckRecord {
    let taus: Vec<f64> = curve.iter().map(|e| e.tau).collect();
    let rec = CheckRecord::new(
        "cone_invariance",
        anchor::CONE,
        describe("tau", &taus),
    );
    if curve.len() < 2 {
        return rec.not_applicable("needs at least 2 values of tau");
    }
    match entry.cone_status(y0) {
        None => rec.not_applicable("unknown whether the surface is a cone"),
        Some(true) => {
            let max = curve.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
            let min = curve.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
            let brackets = curve.iter().map(|e| e.bound_high - e.bound_low).fold(0.0, f64::max);
            let worst = Worst { margin: -(max - min), slack: brackets + CONE_SPREAD_TOL, at: (0, 0) };
            rec.judged(Some(worst), format!("cone: spread {:e}", max - min))
        }
        Some(false) => {
            let mut best = f64::NEG_INFINITY;
            let mut at = (0, 0);
            for (i, a) in curve.iter().enumerate() {
                for (j, b) in curve.iter().enumerate().skip(i + 1) {
                    let gap = b.bound_low - a.bound_high;
                    if gap > best {
                        best = gap;
                        at = (i, j);
                    }
                }
            }
            let worst = Worst { margin: best - ROUNDING_FLOOR, slack: 0.0, at };
            rec.judged(
                Some(worst),
                format!("not a cone: largest separated increase between tau = {} and tau = {}", taus[at.0], taus[at.1]),
            )
        }
    }
}

/// |H(τ_max) − EAVR| within `rtol` of EAVR at the largest τ whose entropy
/// converged, plus the gap trajectory closing along the grid.
pub fn check_theorem(
    p: &RadialProfile,
    eavr: &EavrEstimate,
    curve: &[EntropyValue],
    rtol: f64,
) -> [CheckRecord; 2] {
    let taus: Vec<f64> = curve.iter().map(|e| e.tau).collect();
    let grid = describe("tau", &taus);
    let limit = CheckRecord::new("theorem", anchor::THEOREM, grid.clone());
    let closing = CheckRecord::new("theorem_gap_closing", anchor::CLOSING, grid);
    if !eavr.converged {
        let why = if eavr.high.is_infinite() { "EAVR diverges" } else { "EAVR estimate not converged" };
        return [limit.not_applicable(why), closing.not_applicable(why)];
    }
    let usable: Vec<(usize, &EntropyValue)> = curve.iter().enumerate().filter(|(_, e)| e.converged).collect();
    let Some(&(jmax, h)) = usable.last() else {
        let why = "no tau on the grid has a converged entropy; extend the radius grid";
        return [limit.failed(why), closing.failed(why)];
    };
    let s_k = *p.ratio_slacks().last().expect("nonempty profile");
    // distance between the entropy value and the EAVR bracket [value, high]
    let gap = bracket_gap(h.value, eavr);
    let worst = Worst {
        margin: rtol * eavr.value - gap,
        slack: (h.bound_high - h.bound_low) + s_k,
        at: (jmax, jmax),
    };
    let limit = limit.judged(
        Some(worst),
        format!(
            "H({}) = {}, EAVR in [{}, {}], gap = {:e}",
            h.tau, h.value, eavr.value, eavr.high, gap
        ),
    );
    let mut t = Tracker::default();
    for w in usable.windows(2) {
        let (a, b) = (w[0].1, w[1].1);
        let (ga, gb) = (bracket_gap(a.value, eavr), bracket_gap(b.value, eavr));
        let slack = (a.bound_high - a.bound_low) + (b.bound_high - b.bound_low) + 2.0 * s_k;
        t.see(ga - gb, slack, (w[0].0, w[1].0));
    }
    let closing = closing.judged(t.0, "");
    [limit, closing]
}

fn bracket_gap(h: f64, eavr: &EavrEstimate) -> f64 {
    if h < eavr.value {
        eavr.value - h
    } else if h > eavr.high {
        h - eavr.high
    } else {
        0.0
    }
}

/// The full suite in a fixed order. A failed minimality check marks every
/// later check, all of which assume minimality, as not applicable.
pub fn run_suite(
    entry: &ZooEntry,
    y0: &AmbientPoint,
    grids: &SuiteGrids,
    spec: &QuadSpec,
    seed: u64,
) -> Result<VerificationReport, VerifyError> {
    let m = &entry.surface;
    m.check_point(y0)?;
    let mut checks = vec![check_minimality(m, MINIMALITY_SAMPLES, MINIMALITY_TOL, seed)?];
    let mut report = VerificationReport {
        surface: m.label().to_string(),
        center: y0.coords().to_vec(),
        checks: Vec::new(),
    };
    if checks[0].pass != Some(true) {
        let why = "surface is not minimal";
        let r = describe("r", &grids.radii);
        let tau = describe("tau", &grids.taus);
        checks.extend([
            CheckRecord::new("density_monotonicity", anchor::DENSITY, r.clone()).not_applicable(why),
            CheckRecord::new("shell_sandwich", anchor::SHELL, r).not_applicable(why),
            CheckRecord::new("entropy_bounds", anchor::BOUNDS, tau.clone()).not_applicable(why),
            CheckRecord::new("entropy_monotonicity", anchor::MONOTONE, tau.clone()).not_applicable(why),
            CheckRecord::new("cone_invariance", anchor::CONE, tau.clone()).not_applicable(why),
            CheckRecord::new("theorem", anchor::THEOREM, tau.clone()).not_applicable(why),
            CheckRecord::new("theorem_gap_closing", anchor::CLOSING, tau).not_applicable(why),
        ]);
        report.checks = checks;
        return Ok(report);
    }
    let p = build_profile(m, y0, &grids.radii, spec)?;
    if !p.converged {
        return Err(VerifyError::Unconverged);
    }
    let eavr = eavr_estimate(&p);
    let curve = entropy_curve(&p, &grids.taus)?;
    checks.push(check_density_monotonicity(&p));
    checks.push(check_shell_sandwich(&p, &eavr));
    checks.push(check_entropy_bounds(&p, &eavr, &curve));
    checks.push(check_entropy_monotonicity(&curve));
    checks.push(check_cone_invariance(entry, y0, &curve));
    checks.extend(check_theorem(&p, &eavr, &curve, THEOREM_RTOL));
    report.checks = checks;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::log_grid;
    use std::f64::consts::PI;

    fn profile(n: usize, radii: Vec<f64>, f: impl Fn(f64) -> f64) -> RadialProfile {
        RadialProfile::from_fn(AmbientPoint::origin(n + 1), n, radii, f).unwrap()
    }

    #[test]
    fn plane_density_margins_vanish() {
        let p = profile(2, log_grid(0.5, 50.0, 12), |r| PI * r * r);
        let c = check_density_monotonicity(&p);
        assert_eq!(c.pass, Some(true));
        assert!(c.worst_margin.unwrap().abs() < 1e-12);
    }

    #[test]
    fn saturating_profile_fails_density() {
        let p = profile(2, log_grid(0.5, 10.0, 12), |r| PI * r.min(2.0).powi(2));
        let c = check_density_monotonicity(&p);
        assert_eq!(c.pass, Some(false));
    }

    #[test]
    fn plane_entropy_lower_bound_example() {
        // r = 2, τ = 1: e^{-1} + e^{-1} <= 1
        let p = profile(2, vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0], |r| PI * r * r);
        let eavr = eavr_estimate(&p);
        let curve = entropy_curve(&p, &[1.0]).unwrap();
        let c = check_entropy_bounds(&p, &eavr, &curve);
        assert_eq!(c.pass, Some(true), "{c:?}");
        let lower = (-1f64).exp() * 2.0;
        assert!((lower - 0.735_758_9).abs() < 1e-7);
        let coeff = (4.0 * PI).recip() * (-1f64).exp() + PI.recip() * upper_gamma(HalfInt::half(2), 1.0) / 4.0;
        assert!((coeff * 4.0 * PI - lower).abs() < 1e-15);
    }

    #[test]
    fn cone_sandwich_is_tight() {
        let length = 4.0;
        let p = profile(2, log_grid(0.5, 50.0, 10), |r| length * r * r / 2.0);
        let eavr = eavr_estimate(&p);
        let c = check_shell_sandwich(&p, &eavr);
        assert_eq!(c.pass, Some(true), "{c:?}");
        assert!(c.worst_margin.unwrap().abs() < 1e-12);
        assert!((eavr.value - length / (2.0 * PI)).abs() < 1e-14);
    }

    #[test]
    fn theorem_needs_converged_eavr() {
        let p = profile(2, log_grid(1.0, 100.0, 10), |r| r * r * r);
        let eavr = eavr_estimate(&p);
        let curve = entropy_curve(&p, &[1.0, 10.0]).unwrap();
        let [limit, closing] = check_theorem(&p, &eavr, &curve, THEOREM_RTOL);
        assert_eq!(limit.pass, None);
        assert!(limit.detail.contains("diverges"));
        assert_eq!(closing.pass, None);
    }

    #[test]
    fn offset_plane_theorem_gap() {
        let mut radii = log_grid(0.5, 1000.0, 40);
        radii.push(2.0);
        radii.sort_by(f64::total_cmp);
        let p = profile(2, radii, |r| PI * (r * r - 4.0).max(0.0));
        let eavr = eavr_estimate(&p);
        let taus = log_grid(1.0, 1e4, 9);
        let curve = entropy_curve(&p, &taus).unwrap();
        let [limit, closing] = check_theorem(&p, &eavr, &curve, THEOREM_RTOL);
        assert_eq!(limit.pass, Some(true), "{limit:?}");
        assert_eq!(closing.pass, Some(true), "{closing:?}");
        let h = curve.last().unwrap();
        assert!((h.value - (-1e-4f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn report_json_shape() {
        let report = VerificationReport {
            surface: "plane".into(),
            center: vec![0.0, 0.0, 0.0],
            checks: vec![CheckRecord::new("x", "a", "g".into()).not_applicable("because")],
        };
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(v["checks"][0]["pass"], serde_json::Value::Null);
        assert!(report.passed());
        for key in ["id", "anchor", "pass", "worst_margin", "tolerance", "grid"] {
            assert!(v["checks"][0].get(key).is_some(), "{key}");
        }
    }
}

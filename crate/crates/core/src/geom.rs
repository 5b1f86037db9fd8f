//! Immersed submanifolds of Euclidean space described by parametric charts
//! with exact second-order jets, plus the pointwise quantities built on them.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Gram determinants at or below this value mark a rank-deficient chart.
pub const DEGENERATE_GRAM_TOL: f64 = 1e-14;

/// Unbounded parameter axes are sampled on this many units from their anchor
/// when checking pointwise properties such as minimality.
pub const SAMPLE_EXTENT: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("chart `{chart}` is degenerate at u = {u:?} (Gram determinant {gram_det:e})")]
    Degenerate { chart: String, u: Vec<f64>, gram_det: f64 },
    #[error("chart `{chart}`: parameter point has {got} coordinates, expected {expected}")]
    ParamDimension { chart: String, expected: usize, got: usize },
    #[error("chart `{chart}`: evaluation failed at u = {u:?}: {message}")]
    Evaluation { chart: String, u: Vec<f64>, message: String },
    #[error("submanifold `{0}` has no charts")]
    Empty(String),
    #[error("chart `{chart}` has dimensions {dim}/{ambient}, submanifold expects {expected_dim}/{expected_ambient}")]
    DimensionMismatch {
        chart: String,
        dim: usize,
        ambient: usize,
        expected_dim: usize,
        expected_ambient: usize,
    },
    #[error("invalid parameter domain: {0}")]
    Domain(String),
    #[error("ambient point has a non-finite coordinate")]
    NonFinitePoint,
    #[error("ambient point has {got} coordinates, expected {expected}")]
    PointDimension { expected: usize, got: usize },
}

/// A point of the ambient Euclidean space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AmbientPoint(Vec<f64>);

impl AmbientPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self, GeomError> {
        if coords.iter().all(|c| c.is_finite()) {
            Ok(Self(coords))
        } else {
            Err(GeomError::NonFinitePoint)
        }
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn distance_squared(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        self.distance_squared(x).sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

impl TryFrom<Vec<f64>> for AmbientPoint {
    type Error = GeomError;

    fn try_from(coords: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(coords)
    }
}

impl From<AmbientPoint> for Vec<f64> {
    fn from(p: AmbientPoint) -> Self {
        p.0
    }
}

/// One parameter axis. `None` bounds are unbounded; truncation is left to
/// the integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamAxis {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    #[serde(default)]
    pub periodic: bool,
}

impl ParamAxis {
    pub fn bounded(lo: f64, hi: f64) -> Self {
        Self { lo: Some(lo), hi: Some(hi), periodic: false }
    }

    /// One full period `[lo, hi)`, integrated exactly and never truncated.
    pub fn periodic(lo: f64, hi: f64) -> Self {
        Self { lo: Some(lo), hi: Some(hi), periodic: true }
    }

    pub fn real_line() -> Self {
        Self { lo: None, hi: None, periodic: false }
    }

    pub fn from(lo: f64) -> Self {
        Self { lo: Some(lo), hi: None, periodic: false }
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_some() && self.hi.is_some()
    }

    /// Maps `t ∈ (0, 1)` into the axis, using [`SAMPLE_EXTENT`] for open ends.
    pub fn sample(&self, t: f64) -> f64 {
        match (self.lo, self.hi) {
            (Some(lo), Some(hi)) => lo + t * (hi - lo),
            (Some(lo), None) => lo + t * SAMPLE_EXTENT,
            (None, Some(hi)) => hi - t * SAMPLE_EXTENT,
            (None, None) => (2.0 * t - 1.0) * SAMPLE_EXTENT,
        }
    }

    fn validate(&self) -> Result<(), GeomError> {
        for b in [self.lo, self.hi].into_iter().flatten() {
            if !b.is_finite() {
                return Err(GeomError::Domain("bounds must be finite or absent".into()));
            }
        }
        if let (Some(lo), Some(hi)) = (self.lo, self.hi) {
            if lo >= hi {
                return Err(GeomError::Domain(format!("empty axis [{lo}, {hi}]")));
            }
        }
        if self.periodic && !self.is_bounded() {
            return Err(GeomError::Domain("periodic axis needs both bounds".into()));
        }
        Ok(())
    }
}

/// Axis-aligned parameter box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDomain {
    pub axes: Vec<ParamAxis>,
}

impl ParamDomain {
    pub fn new(axes: Vec<ParamAxis>) -> Result<Self, GeomError> {
        if axes.is_empty() {
            return Err(GeomError::Domain("domain has no axes".into()));
        }
        for axis in &axes {
            axis.validate()?;
        }
        Ok(Self { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn sample(&self, t: &[f64]) -> Vec<f64> {
        self.axes.iter().zip(t).map(|(a, &t)| a.sample(t)).collect()
    }
}

/// Value, Jacobian and Hessian of an immersion at one parameter point.
///
/// Layouts are row-major over the ambient index: `jacobian[i * n + a]` is
/// ∂X_i/∂u_a and `hessian[(i * n + a) * n + b]` is ∂²X_i/∂u_a∂u_b.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartJet {
    pub point: Vec<f64>,
    pub jacobian: Vec<f64>,
    pub hessian: Vec<f64>,
}

impl ChartJet {
    pub fn zeros(n: usize, ambient: usize) -> Self {
        Self {
            point: vec![0.0; ambient],
            jacobian: vec![0.0; ambient * n],
            hessian: vec![0.0; ambient * n * n],
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.point.len()
    }

    pub fn dim(&self) -> usize {
        self.jacobian.len() / self.point.len()
    }

    pub fn d(&self, i: usize, a: usize) -> f64 {
        self.jacobian[i * self.dim() + a]
    }

    pub fn dd(&self, i: usize, a: usize, b: usize) -> f64 {
        let n = self.dim();
        self.hessian[(i * n + a) * n + b]
    }
}

/// The smooth map behind a chart. Implementations must be pure.
pub trait ChartMap: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn ambient_dim(&self) -> usize;

    /// Full 2-jet at `u`.
    fn jet(&self, u: &[f64]) -> Result<ChartJet, String>;

    /// Point and Jacobian only; override when cheaper than the full jet.
    fn first_order(&self, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>), String> {
        self.jet(u).map(|j| (j.point, j.jacobian))
    }

    /// Point only; override when cheaper than the full jet.
    fn point(&self, u: &[f64]) -> Result<Vec<f64>, String> {
        self.first_order(u).map(|(p, _)| p)
    }
}

/// A labelled smooth map from a parameter box into R^(n+m).
#[derive(Clone)]
pub struct ImmersionChart {
    label: String,
    domain: ParamDomain,
    map: Arc<dyn ChartMap>,
}

impl fmt::Debug for ImmersionChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImmersionChart")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("map", &self.map)
            .finish()
    }
}

impl ImmersionChart {
    pub fn new(
        label: impl Into<String>,
        domain: ParamDomain,
        map: Arc<dyn ChartMap>,
    ) -> Result<Self, GeomError> {
        let label = label.into();
        if domain.dim() != map.dim() {
            return Err(GeomError::Domain(format!(
                "chart `{label}`: domain has {} axes but the map takes {} parameters",
                domain.dim(),
                map.dim()
            )));
        }
        Ok(Self { label, domain, map })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.map.ambient_dim()
    }

    pub fn map(&self) -> &Arc<dyn ChartMap> {
        &self.map
    }

    fn check_param(&self, u: &[f64]) -> Result<(), GeomError> {
        if u.len() != self.dim() {
            return Err(GeomError::ParamDimension {
                chart: self.label.clone(),
                expected: self.dim(),
                got: u.len(),
            });
        }
        Ok(())
    }

    fn eval_err(&self, u: &[f64], message: String) -> GeomError {
        GeomError::Evaluation { chart: self.label.clone(), u: u.to_vec(), message }
    }

    pub fn jet(&self, u: &[f64]) -> Result<ChartJet, GeomError> {
        self.check_param(u)?;
        self.map.jet(u).map_err(|m| self.eval_err(u, m))
    }

    pub fn first_order(&self, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>), GeomError> {
        self.check_param(u)?;
        self.map.first_order(u).map_err(|m| self.eval_err(u, m))
    }

    pub fn point(&self, u: &[f64]) -> Result<Vec<f64>, GeomError> {
        self.check_param(u)?;
        self.map.point(u).map_err(|m| self.eval_err(u, m))
    }

    /// Area density that treats rank-deficient points as carrying zero
    /// measure; used inside quadrature where such points form null sets.
    pub(crate) fn area_density(&self, u: &[f64]) -> Result<(Vec<f64>, f64), GeomError> {
        let (p, jac) = self.first_order(u)?;
        let det = gram_determinant(&jac, self.dim());
        Ok((p, det.max(0.0).sqrt()))
    }
}

/// A finite union of charts covering M up to a null set.
#[derive(Debug, Clone)]
pub struct Submanifold {
    label: String,
    charts: Vec<ImmersionChart>,
    dim: usize,
    ambient_dim: usize,
    declared_minimal: bool,
}

impl Submanifold {
    pub fn new(
        label: impl Into<String>,
        charts: Vec<ImmersionChart>,
        declared_minimal: bool,
    ) -> Result<Self, GeomError> {
        let label = label.into();
        let first = charts.first().ok_or_else(|| GeomError::Empty(label.clone()))?;
        let (dim, ambient_dim) = (first.dim(), first.ambient_dim());
        if ambient_dim < dim {
            return Err(GeomError::Domain(format!(
                "ambient dimension {ambient_dim} below manifold dimension {dim}"
            )));
        }
        for c in &charts {
            if c.dim() != dim || c.ambient_dim() != ambient_dim {
                return Err(GeomError::DimensionMismatch {
                    chart: c.label.clone(),
                    dim: c.dim(),
                    ambient: c.ambient_dim(),
                    expected_dim: dim,
                    expected_ambient: ambient_dim,
                });
            }
        }
        Ok(Self { label, charts, dim, ambient_dim, declared_minimal })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn charts(&self) -> &[ImmersionChart] {
        &self.charts
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim - self.dim
    }

    pub fn declared_minimal(&self) -> bool {
        self.declared_minimal
    }

    pub fn check_point(&self, y0: &AmbientPoint) -> Result<(), GeomError> {
        if y0.dim() != self.ambient_dim {
            return Err(GeomError::PointDimension { expected: self.ambient_dim, got: y0.dim() });
        }
        Ok(())
    }
}

/// det(DXᵀ DX) for a row-major `ambient × n` Jacobian.
pub fn gram_determinant(jacobian: &[f64], n: usize) -> f64 {
    let ambient = jacobian.len() / n;
    let g = |a: usize, b: usize| -> f64 {
        (0..ambient).map(|i| jacobian[i * n + a] * jacobian[i * n + b]).sum()
    };
    match n {
        1 => g(0, 0),
        2 => {
            let (g00, g01, g11) = (g(0, 0), g(0, 1), g(1, 1));
            g00 * g11 - g01 * g01
        }
        _ => gram_matrix(jacobian, n).determinant(),
    }
}

fn gram_matrix(jacobian: &[f64], n: usize) -> DMatrix<f64> {
    let ambient = jacobian.len() / n;
    let dx = DMatrix::from_row_slice(ambient, n, jacobian);
    dx.transpose() * dx
}

/// sqrt(det(DXᵀ DX)) at `u`: the n-dimensional area density of the chart.
pub fn gram_area_element(chart: &ImmersionChart, u: &[f64]) -> Result<f64, GeomError> {
    let (_, jac) = chart.first_order(u)?;
    let det = gram_determinant(&jac, chart.dim());
    if det <= DEGENERATE_GRAM_TOL {
        return Err(GeomError::Degenerate {
            chart: chart.label.clone(),
            u: u.to_vec(),
            gram_det: det,
        });
    }
    Ok(det.sqrt())
}

/// Mean curvature vector H = g^{ij} (∂²X/∂u_i∂u_j)^⊥.
///
/// With this trace convention the unit sphere in R³ has |H| = 2.
pub fn mean_curvature_vector(chart: &ImmersionChart, u: &[f64]) -> Result<Vec<f64>, GeomError> {
    let jet = chart.jet(u)?;
    mean_curvature_from_jet(&jet).ok_or_else(|| GeomError::Degenerate {
        chart: chart.label.clone(),
        u: u.to_vec(),
        gram_det: gram_determinant(&jet.jacobian, jet.dim()),
    })
}

/// Returns `None` when the Gram matrix is degenerate.
pub fn mean_curvature_from_jet(jet: &ChartJet) -> Option<Vec<f64>> {
    let n = jet.dim();
    let ambient = jet.ambient_dim();
    let g = gram_matrix(&jet.jacobian, n);
    if g.determinant() <= DEGENERATE_GRAM_TOL {
        return None;
    }
    let g_inv = g.cholesky()?.inverse();

    // Laplacian-like trace L = g^{ab} X_ab, then strip its tangential part.
    let mut trace = DVector::<f64>::zeros(ambient);
    for i in 0..ambient {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += g_inv[(a, b)] * jet.dd(i, a, b);
            }
        }
        trace[i] = s;
    }
    let dx = DMatrix::from_row_slice(ambient, n, &jet.jacobian);
    let tangential = &dx * (&g_inv * (dx.transpose() * &trace));
    Some((trace - tangential).iter().copied().collect())
}

/// Outcome of [`check_minimality`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimalityResult {
    pub passed: bool,
    pub max_mean_curvature: f64,
    pub samples: usize,
}

/// Samples every chart on a rank-1 lattice and reports the largest |H|.
pub fn check_minimality(
    m: &Submanifold,
    sample_count: usize,
    tol: f64,
) -> Result<MinimalityResult, GeomError> {
    check_minimality_seeded(m, sample_count, tol, 0)
}

pub fn check_minimality_seeded(
    m: &Submanifold,
    sample_count: usize,
    tol: f64,
    seed: u64,
) -> Result<MinimalityResult, GeomError> {
    let sample_count = sample_count.max(1);
    let mut max_h: f64 = 0.0;
    for (index, chart) in m.charts().iter().enumerate() {
        for t in lattice_points(chart.dim(), sample_count, index, seed) {
            let u = chart.domain().sample(&t);
            let h = mean_curvature_vector(chart, &u)?;
            let norm = h.iter().map(|c| c * c).sum::<f64>().sqrt();
            max_h = max_h.max(norm);
        }
    }
    Ok(MinimalityResult {
        passed: max_h < tol,
        max_mean_curvature: max_h,
        samples: sample_count * m.charts().len(),
    })
}

/// Points of the additive recurrence t_k = frac(offset + k α) in (0,1)^d,
/// with α built from the generalized golden ratio of dimension d.
pub fn lattice_points(dim: usize, count: usize, chart_index: usize, seed: u64) -> Vec<Vec<f64>> {
    let phi = generalized_golden_ratio(dim);
    let alpha: Vec<f64> = (1..=dim).map(|k| phi.powi(-(k as i32))).collect();
    let offset = (0.5 + chart_index as f64 * 0.381_966_011_250_105 + seed as f64 * 0.137_036)
        .fract();
    (1..=count)
        .map(|k| {
            alpha
                .iter()
                .map(|a| {
                    let t = (offset + k as f64 * a).fract();
                    // keep strictly inside the open unit interval
                    t.clamp(1e-9, 1.0 - 1e-9)
                })
                .collect()
        })
        .collect()
}

// Positive root of x^{d+1} = x + 1.
fn generalized_golden_ratio(dim: usize) -> f64 {
    let mut x: f64 = 2.0;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (dim as f64 + 1.0));
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct Graph; // (u, v, u)

    impl ChartMap for Graph {
        fn dim(&self) -> usize {
            2
        }
        fn ambient_dim(&self) -> usize {
            3
        }
        fn jet(&self, u: &[f64]) -> Result<ChartJet, String> {
            let mut j = ChartJet::zeros(2, 3);
            j.point = vec![u[0], u[1], u[0]];
            j.jacobian = vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0];
            Ok(j)
        }
    }

    #[derive(Debug)]
    struct Collapsed; // (u, u, 0) has rank one

    impl ChartMap for Collapsed {
        fn dim(&self) -> usize {
            2
        }
        fn ambient_dim(&self) -> usize {
            3
        }
        fn jet(&self, u: &[f64]) -> Result<ChartJet, String> {
            let mut j = ChartJet::zeros(2, 3);
            j.point = vec![u[0], u[0], 0.0];
            j.jacobian = vec![1.0, 0.0, 1.0, 0.0, 0.0, 0.0];
            Ok(j)
        }
    }

    fn chart(map: Arc<dyn ChartMap>) -> ImmersionChart {
        let domain = ParamDomain::new(vec![ParamAxis::real_line(); 2]).unwrap();
        ImmersionChart::new("test", domain, map).unwrap()
    }

    #[test]
    fn graph_area_element_is_sqrt_two() {
        let c = chart(Arc::new(Graph));
        let a = gram_area_element(&c, &[0.3, -1.2]).unwrap();
        assert!((a - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_chart_is_reported() {
        let c = chart(Arc::new(Collapsed));
        let err = gram_area_element(&c, &[1.0, 2.0]).unwrap_err();
        match err {
            GeomError::Degenerate { chart, u, .. } => {
                assert_eq!(chart, "test");
                assert_eq!(u, vec![1.0, 2.0]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(mean_curvature_vector(&c, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn wrong_parameter_count() {
        let c = chart(Arc::new(Graph));
        assert!(matches!(
            gram_area_element(&c, &[1.0]),
            Err(GeomError::ParamDimension { expected: 2, got: 1, .. })
        ));
    }

    #[test]
    fn domain_validation() {
        assert!(ParamDomain::new(vec![]).is_err());
        assert!(ParamDomain::new(vec![ParamAxis::bounded(1.0, 1.0)]).is_err());
        assert!(ParamDomain::new(vec![ParamAxis {
            lo: None,
            hi: Some(1.0),
            periodic: true
        }])
        .is_err());
    }

    #[test]
    fn lattice_stays_in_open_cube_and_is_deterministic() {
        let a = lattice_points(2, 500, 3, 7);
        let b = lattice_points(2, 500, 3, 7);
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|&t| t > 0.0 && t < 1.0));
        assert_ne!(a, lattice_points(2, 500, 4, 7));
    }

    #[test]
    fn ambient_point_rejects_nan() {
        assert!(AmbientPoint::new(vec![0.0, f64::NAN]).is_err());
    }
}

//! Built-in surfaces with analytic 2-jets, and closed-form reference values
//! where they exist.
//!
//! Closed forms are stated for the origin as center.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{chart_from_expressions, parse_immersion, ExprError};
use crate::geom::{
    AmbientPoint, ChartJet, ChartMap, GeomError, ImmersionChart, ParamAxis, ParamDomain,
    Submanifold,
};
use crate::quad::{self, QuadSpec};
use crate::special::{ball_volume_unchecked, MAX_DIM};

/// Tolerance on |γ| − 1 for cone links.
pub const LINK_NORM_TOL: f64 = 1e-10;

pub const SURFACE_NAMES: [&str; 11] = [
    "line",
    "k_lines",
    "plane",
    "offset_plane",
    "k_planes",
    "cone_over_link",
    "catenoid",
    "helicoid",
    "enneper",
    "sphere",
    "expr",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZooError {
    #[error("unknown surface `{0}` (known: {names})", names = SURFACE_NAMES.join(", "))]
    UnknownSurface(String),
    #[error("surface `{surface}`: invalid parameter `{param}`: {message}")]
    InvalidParam { surface: String, param: String, message: String },
    #[error("expression surface: {0}")]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Quad(#[from] quad::QuadError),
    #[error("cone link is not on the unit sphere: |γ| = {norm} at t = {t:?}")]
    LinkNotUnit { norm: f64, t: Vec<f64> },
    #[error("surface spec: {0}")]
    Spec(String),
}

/// Exact values about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ClosedForm {
    /// `multiplicity` flat n-planes, each at distance `offset` from the origin.
    Flat { n: usize, multiplicity: f64, offset: f64 },
    /// A cone with vertex at the origin and the given volume density.
    Cone { n: usize, density: f64 },
}

impl ClosedForm {
    pub fn entropy(&self, tau: f64) -> f64 {
        match *self {
            ClosedForm::Flat { multiplicity, offset, .. } => {
                multiplicity * (-offset * offset / (4.0 * tau)).exp()
            }
            ClosedForm::Cone { density, .. } => density,
        }
    }

    pub fn eavr(&self) -> f64 {
        match *self {
            ClosedForm::Flat { multiplicity, .. } => multiplicity,
            ClosedForm::Cone { density, .. } => density,
        }
    }

    /// Vol(B(0, r) ∩ M).
    pub fn ball_volume(&self, r: f64) -> f64 {
        match *self {
            ClosedForm::Flat { n, multiplicity, offset } => {
                let h2 = r * r - offset * offset;
                if h2 <= 0.0 {
                    0.0
                } else {
                    multiplicity * ball_volume_unchecked(n) * h2.powf(n as f64 / 2.0)
                }
            }
            ClosedForm::Cone { n, density } => density * ball_volume_unchecked(n) * r.powi(n as i32),
        }
    }
}

/// A named surface with optional exact reference values.
#[derive(Debug, Clone)]
pub struct ZooEntry {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub surface: Submanifold,
    pub closed_form: Option<ClosedForm>,
    /// Vertex when the surface is a cone (dilation invariant about that point).
    pub cone_vertex: Option<AmbientPoint>,
}

impl ZooEntry {
    pub fn is_cone_about(&self, y0: &AmbientPoint) -> bool {
        self.cone_vertex
            .as_ref()
            .is_some_and(|v| v.distance(y0.coords()) == 0.0)
    }

    /// Whether the surface is known to be a cone, known not to be one, or unknown.
    pub fn cone_status(&self, y0: &AmbientPoint) -> Option<bool> {
        if self.is_cone_about(y0) {
            Some(true)
        } else if self.name == "expr" {
            None
        } else {
            Some(false)
        }
    }
}

// Affine flat: origin + Σ u_a basis_a.
#[derive(Debug, Clone)]
pub struct FlatMap {
    origin: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

impl ChartMap for FlatMap {
    fn dim(&self) -> usize {
        self.basis.len()
    }

    fn ambient_dim(&self) -> usize {
        self.origin.len()
    }

    fn jet(&self, u: &[f64]) -> Result<ChartJet, String> {
        let (p, jac) = self.first_order(u)?;
        let n = self.dim();
        Ok(ChartJet { point: p, jacobian: jac, hessian: vec![0.0; self.ambient_dim() * n * n] })
    }

    fn first_order(&self, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>), String> {
        let n = self.dim();
        let ambient = self.ambient_dim();
        let mut p = self.origin.clone();
        let mut jac = vec![0.0; ambient * n];
        for (a, e) in self.basis.iter().enumerate() {
            for i in 0..ambient {
                p[i] += u[a] * e[i];
                jac[i * n + a] = e[i];
            }
        }
        Ok((p, jac))
    }
}

/// (cosh v cos u, cosh v sin u, v), u ∈ [0, 2π) periodic, v ∈ ℝ.
#[derive(Debug, Clone, Copy)]
pub struct CatenoidMap;

impl ChartMap for CatenoidMap {
    fn dim(&self) -> usize {
        2
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn jet(&self, p: &[f64]) -> Result<ChartJet, String> {
        let (u, v) = (p[0], p[1]);
        let (su, cu) = u.sin_cos();
        let (ch, sh) = (v.cosh(), v.sinh());
        Ok(ChartJet {
            point: vec![ch * cu, ch * su, v],
            jacobian: vec![-ch * su, sh * cu, ch * cu, sh * su, 0.0, 1.0],
            hessian: vec![
                -ch * cu, -sh * su, -sh * su, ch * cu, //
                -ch * su, sh * cu, sh * cu, ch * su, //
                0.0, 0.0, 0.0, 0.0,
            ],
        })
    }

    fn first_order(&self, p: &[f64]) -> Result<(Vec<f64>, Vec<f64>), String> {
        let (u, v) = (p[0], p[1]);
        let (su, cu) = u.sin_cos();
        let (ch, sh) = (v.cosh(), v.sinh());
        Ok((vec![ch * cu, ch * su, v], vec![-ch * su, sh * cu, ch * cu, sh * su, 0.0, 1.0]))
    }
}

/// (u cos v, u sin v, v), u, v ∈ ℝ.
#[derive(Debug, Clone, Copy)]
pub struct HelicoidMap;

impl ChartMap for HelicoidMap {
    fn dim(&self) -> usize {
        2
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn jet(&self, p: &[f64]) -> Result<ChartJet, String> {
        let (u, v) = (p[0], p[1]);
        let (sv, cv) = v.sin_cos();
        Ok(ChartJet {
            point: vec![u * cv, u * sv, v],
            jacobian: vec![cv, -u * sv, sv, u * cv, 0.0, 1.0],
            hessian: vec![
                0.0, -sv, -sv, -u * cv, //
                0.0, cv, cv, -u * sv, //
                0.0, 0.0, 0.0, 0.0,
            ],
        })
    }

    fn first_order(&self, p: &[f64]) -> Result<(Vec<f64>, Vec<f64>), String> {
        let (u, v) = (p[0], p[1]);
        let (sv, cv) = v.sin_cos();
        Ok((vec![u * cv, u * sv, v], vec![cv, -u * sv, sv, u * cv, 0.0, 1.0]))
    }
}

/// Enneper's surface (u − u³/3 + uv², v − v³/3 + vu², u² − v²).
#[derive(Debug, Clone, Copy)]
pub struct EnneperMap;

impl ChartMap for EnneperMap {
    fn dim(&self) -> usize {
        2
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn jet(&self, p: &[f64]) -> Result<ChartJet, String> {
        let (u, v) = (p[0], p[1]);
        let (point, jacobian) = self.first_order(p)?;
        Ok(ChartJet {
            point,
            jacobian,
            hessian: vec![
                -2.0 * u, 2.0 * v, 2.0 * v, 2.0 * u, //
                2.0 * v, 2.0 * u, 2.0 * u, -2.0 * v, //
                2.0, 0.0, 0.0, -2.0,
            ],
        })
    }

    fn first_order(&self, p: &[f64]) -> Result<(Vec<f64>, Vec<f64>), String> {
        let (u, v) = (p[0], p[1]);
        let (u2, v2) = (u * u, v * v);
        Ok((
            vec![u - u2 * u / 3.0 + u * v2, v - v2 * v / 3.0 + v * u2, u2 - v2],
            vec![1.0 - u2 + v2, 2.0 * u * v, 2.0 * u * v, 1.0 - v2 + u2, 2.0 * u, -2.0 * v],
        ))
    }
}

/// Round sphere of radius `radius` about the origin, (θ, φ) ∈ [0, π] × [0, 2π).
#[derive(Debug, Clone, Copy)]
pub struct SphereMap {
    pub radius: f64,
}

impl ChartMap for SphereMap {
    fn dim(&self) -> usize {
        2
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn jet(&self, p: &[f64]) -> Result<ChartJet, String> {
        let r = self.radius;
        let (st, ct) = p[0].sin_cos();
        let (sp, cp) = p[1].sin_cos();
        let (point, jacobian) = self.first_order(p)?;
        Ok(ChartJet {
            point,
            jacobian,
            hessian: vec![
                -r * st * cp, -r * ct * sp, -r * ct * sp, -r * st * cp, //
                -r * st * sp, r * ct * cp, r * ct * cp, -r * st * sp, //
                -r * ct, 0.0, 0.0, 0.0,
            ],
        })
    }

    fn first_order(&self, p: &[f64]) -> Result<(Vec<f64>, Vec<f64>), String> {
        let r = self.radius;
        let (st, ct) = p[0].sin_cos();
        let (sp, cp) = p[1].sin_cos();
        Ok((
            vec![r * st * cp, r * st * sp, r * ct],
            vec![r * ct * cp, -r * st * sp, r * ct * sp, r * st * cp, -r * st, 0.0],
        ))
    }
}

/// Unit-speed great-circle arc t ↦ cos t · a + sin t · b with a ⊥ b unit.
#[derive(Debug, Clone)]
pub struct GreatCircleMap {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl ChartMap for GreatCircleMap {
    fn dim(&self) -> usize {
        1
    }

    fn ambient_dim(&self) -> usize {
        self.a.len()
    }

    fn jet(&self, t: &[f64]) -> Result<ChartJet, String> {
        let (s, c) = t[0].sin_cos();
        let point: Vec<f64> = self.a.iter().zip(&self.b).map(|(a, b)| c * a + s * b).collect();
        let jacobian = self.a.iter().zip(&self.b).map(|(a, b)| -s * a + c * b).collect();
        let hessian = point.iter().map(|x| -x).collect();
        Ok(ChartJet { point, jacobian, hessian })
    }
}

/// Cone s · γ(t) over a link chart γ into the unit sphere; s ∈ [0, ∞) is
/// the first parameter.
#[derive(Debug, Clone)]
pub struct ConeMap {
    link: ImmersionChart,
}

impl ChartMap for ConeMap {
    fn dim(&self) -> usize {
        self.link.dim() + 1
    }

    fn ambient_dim(&self) -> usize {
        self.link.ambient_dim()
    }

    fn jet(&self, p: &[f64]) -> Result<ChartJet, String> {
        let s = p[0];
        let g = self.link.map().jet(&p[1..])?;
        let k = self.link.dim();
        let n = k + 1;
        let ambient = self.ambient_dim();
        let mut out = ChartJet::zeros(n, ambient);
        for i in 0..ambient {
            out.point[i] = s * g.point[i];
            out.jacobian[i * n] = g.point[i];
            for a in 0..k {
                out.jacobian[i * n + 1 + a] = s * g.d(i, a);
                out.hessian[(i * n) * n + 1 + a] = g.d(i, a);
                out.hessian[(i * n + 1 + a) * n] = g.d(i, a);
                for b in 0..k {
                    out.hessian[(i * n + 1 + a) * n + 1 + b] = s * g.dd(i, a, b);
                }
            }
        }
        Ok(out)
    }
}

fn param(
    surface: &str,
    params: &BTreeMap<String, f64>,
    key: &str,
    default: Option<f64>,
) -> Result<f64, ZooError> {
    params.get(key).copied().or(default).ok_or_else(|| ZooError::InvalidParam {
        surface: surface.into(),
        param: key.into(),
        message: "required".into(),
    })
}

fn invalid(surface: &str, key: &str, message: impl Into<String>) -> ZooError {
    ZooError::InvalidParam { surface: surface.into(), param: key.into(), message: message.into() }
}

fn int_param(
    surface: &str,
    params: &BTreeMap<String, f64>,
    key: &str,
    default: usize,
    min: usize,
    max: usize,
) -> Result<usize, ZooError> {
    let x = param(surface, params, key, Some(default as f64))?;
    if x.fract() != 0.0 || x < min as f64 || x > max as f64 {
        return Err(invalid(surface, key, format!("must be an integer in {min}..={max}, got {x}")));
    }
    Ok(x as usize)
}

fn check_keys(surface: &str, params: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<(), ZooError> {
    for (k, v) in params {
        if !allowed.contains(&k.as_str()) {
            return Err(invalid(surface, k, "unknown parameter"));
        }
        if !v.is_finite() {
            return Err(invalid(surface, k, "must be finite"));
        }
    }
    Ok(())
}

fn unit(dim: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[i] = 1.0;
    e
}

fn flat_chart(label: String, origin: Vec<f64>, basis: Vec<Vec<f64>>) -> Result<ImmersionChart, GeomError> {
    let n = basis.len();
    let domain = ParamDomain::new(vec![ParamAxis::real_line(); n])?;
    ImmersionChart::new(label, domain, Arc::new(FlatMap { origin, basis }))
}

/// Builds a named surface.
pub fn make_surface(name: &str, params: &BTreeMap<String, f64>) -> Result<ZooEntry, ZooError> {
    let entry = |surface: Submanifold, closed_form, cone_vertex| ZooEntry {
        name: name.to_string(),
        params: params.clone(),
        surface,
        closed_form,
        cone_vertex,
    };
    match name {
        "line" => {
            check_keys(name, params, &["d", "angle"])?;
            let d = param(name, params, "d", Some(0.0))?;
            if d < 0.0 {
                return Err(invalid(name, "d", "offset must be nonnegative"));
            }
            let angle = param(name, params, "angle", Some(0.0))?;
            let (s, c) = angle.sin_cos();
            let chart = flat_chart("line".into(), vec![-d * s, d * c], vec![vec![c, s]])?;
            let m = Submanifold::new("line", vec![chart], true)?;
            let vertex = (d == 0.0).then(|| AmbientPoint::origin(2));
            Ok(entry(m, Some(ClosedForm::Flat { n: 1, multiplicity: 1.0, offset: d }), vertex))
        }
        "k_lines" => {
            check_keys(name, params, &["k"])?;
            let k = int_param(name, params, "k", 2, 1, 64)?;
            let charts = (0..k)
                .map(|j| {
                    let (s, c) = (j as f64 * PI / k as f64).sin_cos();
                    flat_chart(format!("line{j}"), vec![0.0, 0.0], vec![vec![c, s]])
                })
                .collect::<Result<Vec<_>, _>>()?;
            let m = Submanifold::new(format!("k_lines(k={k})"), charts, true)?;
            let cf = ClosedForm::Cone { n: 1, density: k as f64 };
            Ok(entry(m, Some(cf), Some(AmbientPoint::origin(2))))
        }
        "plane" | "offset_plane" => {
            check_keys(name, params, &["d", "n", "ambient"])?;
            let default_d = if name == "plane" { 0.0 } else { 1.0 };
            let d = param(name, params, "d", Some(default_d))?;
            if d < 0.0 {
                return Err(invalid(name, "d", "offset must be nonnegative"));
            }
            let n = int_param(name, params, "n", 2, 1, MAX_DIM)?;
            let ambient = int_param(name, params, "ambient", n + 1, n + 1, 64)?;
            let mut origin = vec![0.0; ambient];
            origin[n] = d;
            let chart = flat_chart(name.into(), origin, (0..n).map(|a| unit(ambient, a)).collect())?;
            let m = Submanifold::new(name, vec![chart], true)?;
            let vertex = (d == 0.0).then(|| AmbientPoint::origin(ambient));
            Ok(entry(m, Some(ClosedForm::Flat { n, multiplicity: 1.0, offset: d }), vertex))
        }
        "k_planes" => {
            check_keys(name, params, &["k", "n", "ambient"])?;
            let k = int_param(name, params, "k", 2, 1, 64)?;
            let n = int_param(name, params, "n", 2, 1, MAX_DIM)?;
            let ambient = int_param(name, params, "ambient", n + 1, n + 1, 64)?;
            // Plane j contains e_2..e_n and the direction cos θ_j e_1 + sin θ_j e_{n+1}.
            let charts = (0..k)
                .map(|j| {
                    let (s, c) = (j as f64 * PI / k as f64).sin_cos();
                    let mut first = vec![0.0; ambient];
                    first[0] = c;
                    first[n] = s;
                    let mut basis = vec![first];
                    basis.extend((1..n).map(|a| unit(ambient, a)));
                    flat_chart(format!("plane{j}"), vec![0.0; ambient], basis)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let m = Submanifold::new(format!("k_planes(k={k})"), charts, true)?;
            let cf = ClosedForm::Cone { n, density: k as f64 };
            Ok(entry(m, Some(cf), Some(AmbientPoint::origin(ambient))))
        }
        "cone_over_link" => {
            check_keys(name, params, &["link_length", "n", "ambient"])?;
            let length = param(name, params, "link_length", None)?;
            if length <= 0.0 {
                return Err(invalid(name, "link_length", "must be positive"));
            }
            if param(name, params, "n", Some(2.0))? != 2.0 {
                return Err(invalid(name, "n", "great-circle links only give n = 2 cones"));
            }
            let ambient = int_param(name, params, "ambient", 3, 3, 64)?;
            let pieces = (length / (2.0 * PI)).ceil().max(1.0) as usize;
            let arc = length / pieces as f64;
            let links = (0..pieces)
                .map(|j| {
                    let (s, c) = (j as f64 * PI / pieces as f64).sin_cos();
                    let a = unit(ambient, 0);
                    let mut b = vec![0.0; ambient];
                    b[1] = c;
                    b[2] = s;
                    let domain = ParamDomain::new(vec![ParamAxis::bounded(0.0, arc)])?;
                    ImmersionChart::new(format!("arc{j}"), domain, Arc::new(GreatCircleMap { a, b }))
                })
                .collect::<Result<Vec<_>, GeomError>>()?;
            let charts = links
                .into_iter()
                .map(cone_chart)
                .collect::<Result<Vec<_>, _>>()?;
            let m = Submanifold::new(format!("cone(L={length})"), charts, true)?;
            let density = length / (2.0 * ball_volume_unchecked(2));
            Ok(entry(m, Some(ClosedForm::Cone { n: 2, density }), Some(AmbientPoint::origin(ambient))))
        }
        "catenoid" | "helicoid" | "enneper" => {
            check_keys(name, params, &[])?;
            let (axes, map): (Vec<ParamAxis>, Arc<dyn ChartMap>) = match name {
                "catenoid" => (
                    vec![ParamAxis::periodic(0.0, 2.0 * PI), ParamAxis::real_line()],
                    Arc::new(CatenoidMap),
                ),
                "helicoid" => (vec![ParamAxis::real_line(); 2], Arc::new(HelicoidMap)),
                _ => (vec![ParamAxis::real_line(); 2], Arc::new(EnneperMap)),
            };
            let chart = ImmersionChart::new(name, ParamDomain::new(axes)?, map)?;
            Ok(entry(Submanifold::new(name, vec![chart], true)?, None, None))
        }
        "sphere" => {
            check_keys(name, params, &["radius"])?;
            let radius = param(name, params, "radius", Some(1.0))?;
            if radius <= 0.0 {
                return Err(invalid(name, "radius", "must be positive"));
            }
            let domain = ParamDomain::new(vec![
                ParamAxis::bounded(0.0, PI),
                ParamAxis::periodic(0.0, 2.0 * PI),
            ])?;
            let chart = ImmersionChart::new("sphere", domain, Arc::new(SphereMap { radius }))?;
            Ok(entry(Submanifold::new("sphere", vec![chart], false)?, None, None))
        }
        "expr" => Err(ZooError::Spec(
            "expression surfaces are built from a surface spec with an `exprs` field".into(),
        )),
        other => Err(ZooError::UnknownSurface(other.to_string())),
    }
}

/// Cone over a link chart whose image lies on the unit sphere.
pub fn cone_chart(link: ImmersionChart) -> Result<ImmersionChart, ZooError> {
    check_unit_link(&link)?;
    let mut axes = vec![ParamAxis::from(0.0)];
    axes.extend(link.domain().axes.iter().copied());
    let label = format!("cone[{}]", link.label());
    Ok(ImmersionChart::new(label, ParamDomain::new(axes)?, Arc::new(ConeMap { link }))?)
}

fn check_unit_link(link: &ImmersionChart) -> Result<(), ZooError> {
    for t in crate::geom::lattice_points(link.dim(), 200, 0, 0) {
        let u = link.domain().sample(&t);
        let p = link.point(&u)?;
        let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > LINK_NORM_TOL {
            return Err(ZooError::LinkNotUnit { norm, t: u });
        }
    }
    Ok(())
}

/// Parameters of an expression link for `cone_over_link`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub exprs: String,
    pub domain: Vec<[Option<f64>; 2]>,
    #[serde(default)]
    pub periodic: Option<Vec<bool>>,
}

/// JSON surface description: `{"name": ..., "params": {...}}` for zoo
/// entries, or `{"name": "expr", "exprs": "...", "n": 2, "ambient": 3,
/// "domain": [[a, b], [c, d]]}` with `null` marking unbounded ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exprs: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<[Option<f64>; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic: Option<Vec<bool>>,
    /// Declared minimality of an expression surface (default true).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimal: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkSpec>,
}

impl SurfaceSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
            exprs: None,
            n: None,
            ambient: None,
            domain: None,
            periodic: None,
            minimal: None,
            link: None,
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn from_json(text: &str) -> Result<Self, ZooError> {
        serde_json::from_str(text).map_err(|e| ZooError::Spec(e.to_string()))
    }

    pub fn build(&self) -> Result<ZooEntry, ZooError> {
        if self.name == "expr" {
            return self.build_expr();
        }
        if self.exprs.is_some() || self.domain.is_some() || self.minimal.is_some() {
            return Err(ZooError::Spec(format!(
                "`exprs`, `domain` and `minimal` only apply to expression surfaces, not `{}`",
                self.name
            )));
        }
        if let Some(link) = &self.link {
            if self.name != "cone_over_link" {
                return Err(ZooError::Spec("`link` only applies to cone_over_link".into()));
            }
            return self.build_expr_cone(link);
        }
        make_surface(&self.name, &self.params)
    }

    fn build_expr(&self) -> Result<ZooEntry, ZooError> {
        let src = self.exprs.as_deref().ok_or_else(|| ZooError::Spec("missing `exprs`".into()))?;
        let n = self.n.ok_or_else(|| ZooError::Spec("missing `n`".into()))?;
        let ambient = self.ambient.ok_or_else(|| ZooError::Spec("missing `ambient`".into()))?;
        if n == 0 || n > MAX_DIM || ambient < n {
            return Err(ZooError::Spec(format!("unsupported dimensions n = {n}, ambient = {ambient}")));
        }
        if !self.params.is_empty() {
            return Err(ZooError::Spec("expression surfaces take no `params`".into()));
        }
        let domain = domain_from_spec(self.domain.as_deref(), self.periodic.as_deref(), n)?;
        let asts = parse_immersion(src, n, ambient)?;
        let chart = chart_from_expressions("expr", asts, domain)?;
        let m = Submanifold::new("expr", vec![chart], self.minimal.unwrap_or(true))?;
        Ok(ZooEntry {
            name: "expr".into(),
            params: BTreeMap::new(),
            surface: m,
            closed_form: None,
            cone_vertex: None,
        })
    }

    fn build_expr_cone(&self, link: &LinkSpec) -> Result<ZooEntry, ZooError> {
        check_keys("cone_over_link", &self.params, &["ambient"])?;
        let k = link.domain.len();
        if k == 0 || k + 1 > MAX_DIM {
            return Err(ZooError::Spec("link domain must have 1..=9 axes".into()));
        }
        let ambient = int_param("cone_over_link", &self.params, "ambient", k + 2, k + 2, 64)?;
        let domain = domain_from_spec(Some(&link.domain), link.periodic.as_deref(), k)?;
        if domain.axes.iter().any(|a| !a.is_bounded()) {
            return Err(ZooError::Spec("link domain must be bounded".into()));
        }
        let asts = parse_immersion(&link.exprs, k, ambient)?;
        let link_chart = chart_from_expressions("link", asts, domain)?;
        let link_area = quad::chart_area(&link_chart, &QuadSpec::default())?;
        let n = k + 1;
        let density = link_area / (n as f64 * ball_volume_unchecked(n));
        let chart = cone_chart(link_chart)?;
        let m = Submanifold::new("cone(expr)", vec![chart], true)?;
        Ok(ZooEntry {
            name: "cone_over_link".into(),
            params: self.params.clone(),
            surface: m,
            closed_form: Some(ClosedForm::Cone { n, density }),
            cone_vertex: Some(AmbientPoint::origin(ambient)),
        })
    }
}

fn domain_from_spec(
    domain: Option<&[[Option<f64>; 2]]>,
    periodic: Option<&[bool]>,
    n: usize,
) -> Result<ParamDomain, ZooError> {
    let axes: Vec<ParamAxis> = match domain {
        None => vec![ParamAxis::real_line(); n],
        Some(d) => {
            if d.len() != n {
                return Err(ZooError::Spec(format!("domain has {} axes, expected {n}", d.len())));
            }
            d.iter().map(|[lo, hi]| ParamAxis { lo: *lo, hi: *hi, periodic: false }).collect()
        }
    };
    let mut axes = axes;
    if let Some(p) = periodic {
        if p.len() != n {
            return Err(ZooError::Spec(format!("periodic has {} flags, expected {n}", p.len())));
        }
        for (axis, &flag) in axes.iter_mut().zip(p) {
            axis.periodic = flag;
        }
    }
    Ok(ParamDomain::new(axes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{gram_area_element, mean_curvature_vector};

    fn build(name: &str, kv: &[(&str, f64)]) -> Result<ZooEntry, ZooError> {
        let params = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_surface(name, &params)
    }

    #[test]
    fn offset_plane_closed_form() {
        let e = build("offset_plane", &[("d", 2.0), ("n", 2.0), ("ambient", 3.0)]).unwrap();
        let cf = e.closed_form.unwrap();
        for tau in [0.1, 1.0, 10.0] {
            assert!((cf.entropy(tau) - (-1.0 / tau).exp()).abs() < 1e-15);
        }
        assert_eq!(cf.eavr(), 1.0);
        assert!(e.cone_vertex.is_none());
    }

    #[test]
    fn k_planes_closed_form() {
        let e = build("k_planes", &[("k", 3.0)]).unwrap();
        let cf = e.closed_form.unwrap();
        assert_eq!(cf.entropy(0.37), 3.0);
        assert_eq!(cf.eavr(), 3.0);
        assert_eq!(e.surface.charts().len(), 3);
    }

    #[test]
    fn cone_closed_form_is_link_length_over_two_pi() {
        for length in [1.0, 2.0 * PI, 10.0] {
            let e = build("cone_over_link", &[("link_length", length), ("n", 2.0)]).unwrap();
            let cf = e.closed_form.unwrap();
            assert!((cf.entropy(5.0) - length / (2.0 * PI)).abs() < 1e-15);
            assert!((cf.eavr() - length / (2.0 * PI)).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_params() {
        assert!(matches!(build("k_planes", &[("k", 0.0)]), Err(ZooError::InvalidParam { .. })));
        assert!(matches!(build("offset_plane", &[("d", -1.0)]), Err(ZooError::InvalidParam { .. })));
        assert!(matches!(build("catenoid", &[("a", 1.0)]), Err(ZooError::InvalidParam { .. })));
        assert!(matches!(build("torus", &[]), Err(ZooError::UnknownSurface(_))));
        assert!(build("cone_over_link", &[]).is_err());
    }

    #[test]
    fn catenoid_area_element() {
        let e = build("catenoid", &[]).unwrap();
        let c = &e.surface.charts()[0];
        assert!((gram_area_element(c, &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let expected = 1f64.cosh().powi(2);
        assert!((gram_area_element(c, &[0.0, 1.0]).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 2.381_098).abs() < 1e-6);
    }

    #[test]
    fn sphere_mean_curvature_is_two() {
        let e = build("sphere", &[]).unwrap();
        let c = &e.surface.charts()[0];
        let h = mean_curvature_vector(c, &[0.7, 2.1]).unwrap();
        let norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 2.0).abs() < 1e-8);
    }

    #[test]
    fn surface_spec_json() {
        let spec = SurfaceSpec::from_json(r#"{"name":"offset_plane","params":{"d":2}}"#).unwrap();
        let e = spec.build().unwrap();
        assert_eq!(e.closed_form.unwrap().entropy(1.0), (-1f64).exp());
        let spec = SurfaceSpec::from_json(
            r#"{"name":"expr","exprs":"u; v; 0","n":2,"ambient":3,"domain":[[null,null],[-1,1]]}"#,
        )
        .unwrap();
        let e = spec.build().unwrap();
        assert_eq!(e.surface.charts()[0].domain().axes[1], ParamAxis::bounded(-1.0, 1.0));
        assert!(SurfaceSpec::from_json(r#"{"name":"plane","bogus":1}"#).is_err());
        let bad = SurfaceSpec::from_json(r#"{"name":"expr","exprs":"u+*v; v; 0","n":2,"ambient":3}"#)
            .unwrap()
            .build();
        assert!(matches!(bad, Err(ZooError::Expr(_))));
    }

    #[test]
    fn expression_link_cone() {
        let spec = SurfaceSpec::from_json(
            r#"{"name":"cone_over_link","link":{"exprs":"cos(u); sin(u); 0","domain":[[0, 3]]}}"#,
        )
        .unwrap();
        let e = spec.build().unwrap();
        let density = e.closed_form.unwrap().eavr();
        assert!((density - 3.0 / (2.0 * PI)).abs() < 1e-12, "{density}");
        let off_sphere = SurfaceSpec::from_json(
            r#"{"name":"cone_over_link","link":{"exprs":"2*cos(u); sin(u); 0","domain":[[0, 3]]}}"#,
        )
        .unwrap()
        .build();
        assert!(matches!(off_sphere, Err(ZooError::LinkNotUnit { .. })));
    }
}

//! Run configuration: flags over an optional JSON config file over defaults.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use mce_core::profile::{lin_grid, log_grid};
use mce_core::{AmbientPoint, QuadSpec, SurfaceSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_R_GRID: &str = "log:0.5:1000:24";
pub const DEFAULT_TAU_GRID: &str = "log:0.1:10000:25";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Lin,
    Log,
}

/// `{lin|log}:lo:hi:count`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GridSpec {
    pub spacing: Spacing,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Lin => lin_grid(self.lo, self.hi, self.count),
            Spacing::Log => log_grid(self.lo, self.hi, self.count),
        }
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [kind, lo, hi, count] = parts[..] else {
            return Err(format!("grid `{s}` must look like log:lo:hi:count"));
        };
        let spacing = match kind {
            "lin" => Spacing::Lin,
            "log" => Spacing::Log,
            other => return Err(format!("grid spacing must be `lin` or `log`, got `{other}`")),
        };
        let num = |t: &str| t.parse::<f64>().map_err(|_| format!("grid bound `{t}` is not a number"));
        let (lo, hi) = (num(lo)?, num(hi)?);
        let count: usize = count.parse().map_err(|_| format!("grid count `{count}` is not an integer"))?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(format!("grid needs finite lo < hi, got {lo} and {hi}"));
        }
        if count < 2 {
            return Err(format!("grid needs at least 2 points, got {count}"));
        }
        if spacing == Spacing::Log && lo <= 0.0 {
            return Err(format!("log grid needs lo > 0, got {lo}"));
        }
        Ok(Self { spacing, lo, hi, count })
    }
}

impl TryFrom<String> for GridSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<GridSpec> for String {
    fn from(g: GridSpec) -> String {
        g.to_string()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.spacing {
            Spacing::Lin => "lin",
            Spacing::Log => "log",
        };
        write!(f, "{kind}:{}:{}:{}", self.lo, self.hi, self.count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A surface given by name, inline JSON, or `@file`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SurfaceArg {
    Spec(SurfaceSpec),
    Text(String),
}

impl SurfaceArg {
    pub fn resolve(&self) -> Result<SurfaceSpec, CliError> {
        match self {
            SurfaceArg::Spec(s) => Ok(s.clone()),
            SurfaceArg::Text(t) => {
                let t = t.trim();
                if let Some(path) = t.strip_prefix('@') {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| CliError::Usage(format!("cannot read surface file `{path}`: {e}")))?;
                    SurfaceArg::Text(text).resolve()
                } else if t.starts_with('{') {
                    SurfaceSpec::from_json(t).map_err(CliError::Surface)
                } else {
                    Ok(SurfaceSpec::named(t))
                }
            }
        }
    }
}

/// Everything a run may set; every field is optional so that layers merge.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub surface: Option<SurfaceArg>,
    pub center: Option<Vec<f64>>,
    pub tau: Option<f64>,
    pub tau_grid: Option<GridSpec>,
    pub r_grid: Option<GridSpec>,
    pub eps: Option<f64>,
    pub quad: Option<QuadSpec>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub plot: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl ConfigLayer {
    pub fn from_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config `{}`: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config `{}`: {e}", path.display())))
    }

    /// Fields of `self` win over those of `base`.
    pub fn over(self, base: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            surface: self.surface.or(base.surface),
            center: self.center.or(base.center),
            tau: self.tau.or(base.tau),
            tau_grid: self.tau_grid.or(base.tau_grid),
            r_grid: self.r_grid.or(base.r_grid),
            eps: self.eps.or(base.eps),
            quad: self.quad.or(base.quad),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            plot: self.plot.or(base.plot),
            seed: self.seed.or(base.seed),
        }
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub surface: SurfaceSpec,
    pub center: Option<Vec<f64>>,
    pub tau: Option<f64>,
    pub tau_grid: GridSpec,
    pub r_grid: GridSpec,
    pub quad: QuadSpec,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    #[serde(skip)]
    pub plot: Option<PathBuf>,
    pub seed: u64,
}

impl RunConfig {
    pub fn resolve(layer: ConfigLayer) -> Result<Self, CliError> {
        let surface = layer
            .surface
            .ok_or_else(|| CliError::Usage("no surface given; pass --surface".into()))?
            .resolve()?;
        let mut quad = layer.quad.unwrap_or_default();
        if let Some(eps) = layer.eps {
            quad.eps = eps;
        }
        quad.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if let Some(t) = layer.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Usage(format!("tau must be positive, got {t}")));
            }
        }
        Ok(Self {
            surface,
            center: layer.center,
            tau: layer.tau,
            tau_grid: layer.tau_grid.unwrap_or_else(|| DEFAULT_TAU_GRID.parse().expect("default grid")),
            r_grid: layer.r_grid.unwrap_or_else(|| DEFAULT_R_GRID.parse().expect("default grid")),
            quad,
            out: layer.out,
            format: layer.format,
            plot: layer.plot,
            seed: layer.seed.unwrap_or(0),
        })
    }

    pub fn center_for(&self, ambient: usize) -> Result<AmbientPoint, CliError> {
        let coords = self.center.clone().unwrap_or_else(|| vec![0.0; ambient]);
        if coords.len() != ambient {
            return Err(CliError::Usage(format!(
                "center has {} coordinates but the surface lives in R^{ambient}",
                coords.len()
            )));
        }
        AmbientPoint::new(coords).map_err(|e| CliError::Usage(e.to_string()))
    }

    /// SHA-256 of the canonical JSON of everything that affects the numbers.
    pub fn hash(&self, command: &str) -> String {
        let body = serde_json::json!({ "command": command, "config": self });
        let digest = Sha256::digest(body.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn parse_center(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("center coordinate `{t}` is not a finite number"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_round_trip() {
        let g: GridSpec = "log:0.1:1000:25".parse().unwrap();
        assert_eq!(g.to_string(), "log:0.1:1000:25");
        let pts = g.points();
        assert_eq!(pts.len(), 25);
        assert_eq!((pts[0], pts[24]), (0.1, 1000.0));
    }

    #[test]
    fn malformed_grids() {
        for bad in ["log:1:0.5:10", "log:0:1:10", "lin:0:1:1", "cubic:0:1:4", "log:1:2", "lin:a:1:3"] {
            assert!(bad.parse::<GridSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn flags_override_file() {
        let file = ConfigLayer { tau: Some(2.0), seed: Some(7), ..Default::default() };
        let flags = ConfigLayer { tau: Some(3.0), ..Default::default() };
        let merged = flags.over(file);
        assert_eq!(merged.tau, Some(3.0));
        assert_eq!(merged.seed, Some(7));
    }

    #[test]
    fn surface_forms() {
        let named = SurfaceArg::Text("plane".into()).resolve().unwrap();
        assert_eq!(named, SurfaceSpec::named("plane"));
        let json = SurfaceArg::Text(r#"{"name":"k_planes","params":{"k":2}}"#.into()).resolve().unwrap();
        assert_eq!(json, SurfaceSpec::named("k_planes").with_param("k", 2.0));
    }

    #[test]
    fn hash_depends_on_command_and_config() {
        let layer = || ConfigLayer { surface: Some(SurfaceArg::Text("plane".into())), ..Default::default() };
        let a = RunConfig::resolve(layer()).unwrap();
        let mut b = a.clone();
        b.seed = 1;
        assert_eq!(a.hash("sweep").len(), 64);
        assert_eq!(a.hash("sweep"), a.hash("sweep"));
        assert_ne!(a.hash("sweep"), a.hash("eavr"));
        assert_ne!(a.hash("sweep"), b.hash("sweep"));
    }

    #[test]
    fn center_parsing() {
        assert_eq!(parse_center("0, 0,1").unwrap(), vec![0.0, 0.0, 1.0]);
        assert!(parse_center("0,x").is_err());
    }
}

//! One function per subcommand. Each returns the primary output text plus
//! an exit code; writing happens in `main`.

use std::fmt::Write;

use mce_core::profile::{
    blowdown, blowdown_csv, build_profile, eavr_estimate, entropy_curve, entropy_curve_csv, fmt17,
    RadialProfile,
};
use mce_core::verify::{run_suite, SuiteGrids};
use mce_core::zoo::ZooError;
use mce_core::{huisken_direct, AmbientPoint, ZooEntry};
use serde_json::json;

use crate::config::{Format, RunConfig};
use crate::error::{CliError, EXIT_OK, EXIT_UNCONVERGED, EXIT_VERIFY_FAILED};
use crate::plot::{line_plot, Series};

pub struct Output {
    pub body: String,
    /// Secondary document: the eavr summary next to its CSV.
    pub summary: Option<String>,
    pub plot: Option<String>,
    pub code: u8,
}

fn code_if(ok: bool, fail: u8) -> u8 {
    if ok {
        EXIT_OK
    } else {
        fail
    }
}

/// Builds the surface; expression failures become span diagnostics.
pub fn build_surface(cfg: &RunConfig) -> Result<(ZooEntry, AmbientPoint), CliError> {
    let entry = cfg.surface.build().map_err(|e| match e {
        ZooError::Expr(ref x) => {
            let source = cfg
                .surface
                .exprs
                .as_deref()
                .or(cfg.surface.link.as_ref().map(|l| l.exprs.as_str()))
                .unwrap_or("");
            CliError::Usage(x.render(source).trim_end().trim_start_matches("error: ").to_string())
        }
        other => CliError::Surface(other),
    })?;
    let y0 = cfg.center_for(entry.surface.ambient_dim())?;
    entry.surface.check_point(&y0).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((entry, y0))
}

fn csv_header(cfg: &RunConfig, command: &str) -> String {
    format!("# mce {} {command} {}\n", env!("CARGO_PKG_VERSION"), cfg.hash(command))
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

fn profile(cfg: &RunConfig, entry: &ZooEntry, y0: &AmbientPoint) -> Result<RadialProfile, CliError> {
    Ok(build_profile(&entry.surface, y0, &cfg.r_grid.points(), &cfg.quad)?)
}

pub fn entropy(cfg: &RunConfig) -> Result<Output, CliError> {
    let tau = cfg.tau.ok_or_else(|| CliError::Usage("entropy needs --tau".into()))?;
    let (entry, y0) = build_surface(cfg)?;
    let h = huisken_direct(&entry.surface, &y0, tau, &cfg.quad)?;
    let body = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&json!({
            "tau": h.tau,
            "value": h.value,
            "bound": h.error_bound,
            "converged": h.converged,
        })),
        Format::Csv => format!(
            "{}tau,value,bound,converged\n{},{},{},{}\n",
            csv_header(cfg, "entropy"),
            fmt17(h.tau),
            fmt17(h.value),
            fmt17(h.error_bound),
            h.converged
        ),
    };
    Ok(Output { body, summary: None, plot: None, code: code_if(h.converged, EXIT_UNCONVERGED) })
}

pub fn sweep(cfg: &RunConfig) -> Result<Output, CliError> {
    let (entry, y0) = build_surface(cfg)?;
    let p = profile(cfg, &entry, &y0)?;
    let curve = entropy_curve(&p, &cfg.tau_grid.points())?;
    let ok = p.converged && curve.iter().all(|e| e.converged);
    let body = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_header(cfg, "sweep") + &entropy_curve_csv(&curve),
        Format::Json => pretty(&json!({
            "surface": entry.surface.label(),
            "profile_converged": p.converged,
            "points": curve,
        })),
    };
    let plot = cfg.plot.as_ref().map(|_| {
        let pick = |f: fn(&mce_core::EntropyValue) -> f64| curve.iter().map(|e| (e.tau, f(e))).collect();
        line_plot(
            &format!("Gaussian-weighted area of {}", entry.surface.label()),
            "tau",
            "H(tau)",
            &[
                Series { label: "H", colour: "#1f4e99", points: pick(|e| e.value), dashed: false },
                Series { label: "bound low", colour: "#888888", points: pick(|e| e.bound_low), dashed: true },
                Series { label: "bound high", colour: "#888888", points: pick(|e| e.bound_high), dashed: true },
            ],
        )
    });
    Ok(Output { body, summary: None, plot, code: code_if(ok, EXIT_UNCONVERGED) })
}

pub fn eavr(cfg: &RunConfig) -> Result<Output, CliError> {
    let (entry, y0) = build_surface(cfg)?;
    let p = profile(cfg, &entry, &y0)?;
    let e = eavr_estimate(&p);
    let ratios = p.density_ratios();
    let summary = json!({
        "surface": entry.surface.label(),
        "value": e.value,
        "low": e.low,
        "high": if e.high.is_finite() { json!(e.high) } else { json!(null) },
        "converged": e.converged && p.converged,
        "r_max": p.radii.last(),
    });
    let (body, summary) = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut csv = csv_header(cfg, "eavr") + "r,volume,ratio,bound\n";
            for i in 0..p.len() {
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    fmt17(p.radii[i]),
                    fmt17(p.volumes[i]),
                    fmt17(ratios[i]),
                    fmt17(p.bounds[i])
                );
            }
            (csv, Some(pretty(&summary)))
        }
        Format::Json => {
            let rows: Vec<_> = (0..p.len())
                .map(|i| json!({"r": p.radii[i], "volume": p.volumes[i], "ratio": ratios[i], "bound": p.bounds[i]}))
                .collect();
            (pretty(&json!({"rows": rows, "summary": summary})), None)
        }
    };
    let plot = cfg.plot.as_ref().map(|_| {
        line_plot(
            &format!("Density ratio of {}", entry.surface.label()),
            "r",
            "f(r) / (omega_n r^n)",
            &[Series {
                label: "ratio",
                colour: "#1f4e99",
                points: p.radii.iter().copied().zip(ratios.iter().copied()).collect(),
                dashed: false,
            }],
        )
    });
    Ok(Output { body, summary, plot, code: code_if(e.converged && p.converged, EXIT_UNCONVERGED) })
}

pub fn blowdown_cmd(cfg: &RunConfig) -> Result<Output, CliError> {
    let (entry, y0) = build_surface(cfg)?;
    let p = profile(cfg, &entry, &y0)?;
    let rows = p.radii.iter().map(|&r| blowdown(&p, r)).collect::<Result<Vec<_>, _>>()?;
    let body = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_header(cfg, "blowdown") + &blowdown_csv(&rows),
        Format::Json => pretty(&json!({ "surface": entry.surface.label(), "rows": rows })),
    };
    let plot = cfg.plot.as_ref().map(|_| {
        let pick = |f: fn(&mce_core::profile::Blowdown) -> f64| rows.iter().map(|b| (b.radius, f(b))).collect();
        line_plot(
            &format!("Blow-down of {}", entry.surface.label()),
            "r_j",
            "ratio",
            &[
                Series { label: "volume", colour: "#1f4e99", points: pick(|b| b.normalized_volume), dashed: false },
                Series { label: "shell", colour: "#b03a2e", points: pick(|b| b.shell_ratio), dashed: true },
            ],
        )
    });
    Ok(Output { body, summary: None, plot, code: code_if(p.converged, EXIT_UNCONVERGED) })
}

pub fn verify(cfg: &RunConfig) -> Result<Output, CliError> {
    let (entry, y0) = build_surface(cfg)?;
    let grids = SuiteGrids { radii: cfg.r_grid.points(), taus: cfg.tau_grid.points() };
    let report = run_suite(&entry, &y0, &grids, &cfg.quad, cfg.seed)?;
    let body = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut s = report.to_json();
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut csv = csv_header(cfg, "verify") + "id,pass,worst_margin,tolerance\n";
            let opt = |x: Option<f64>| x.map(fmt17).unwrap_or_default();
            for c in &report.checks {
                let pass = match c.pass {
                    Some(true) => "pass",
                    Some(false) => "fail",
                    None => "n/a",
                };
                let _ = writeln!(csv, "{},{pass},{},{}", c.id, opt(c.worst_margin), opt(c.tolerance));
            }
            csv
        }
    };
    Ok(Output { body, summary: None, plot: None, code: code_if(report.passed(), EXIT_VERIFY_FAILED) })
}

use std::process::{Command, Output};

fn mce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mce")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

/// Data rows of a CSV with one provenance comment and one header line.
fn rows(text: &str) -> Vec<Vec<f64>> {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# mce "));
    lines.next().unwrap();
    lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn entropy_examples() {
    let o = mce(&["entropy", "--surface", "plane", "--tau", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((json(&o)["value"].as_f64().unwrap() - 1.0).abs() < 1e-10);

    let o = mce(&["entropy", "--surface", r#"{"name":"offset_plane","params":{"d":2}}"#, "--tau", "1"]);
    assert!((json(&o)["value"].as_f64().unwrap() - 0.3678794).abs() < 1e-7);

    let o = mce(&["entropy", "--surface", "catenoid", "--tau", "1000"]);
    let v = json(&o);
    let h = v["value"].as_f64().unwrap();
    assert!(h > 1.0 && h < 2.0 && v["converged"] == true);
    for key in ["tau", "value", "bound", "converged"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn sweep_columns() {
    let o = mce(&["sweep", "--surface", "plane", "--tau-grid", "log:0.1:100:5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().nth(1), Some("tau,entropy,bound_low,bound_high"));
    for r in rows(&text) {
        assert!((r[1] - 1.0).abs() < 1e-10);
        assert!(r[2] <= r[1] && r[1] <= r[3]);
    }

    let o = mce(&["sweep", "--surface", r#"{"name":"cone_over_link","params":{"link_length":3}}"#]);
    for r in rows(&stdout(&o)) {
        assert!((r[1] - 3.0 / std::f64::consts::TAU).abs() < 1e-9);
    }

    let o = mce(&["sweep", "--surface", "catenoid"]);
    let h: Vec<f64> = rows(&stdout(&o)).iter().map(|r| r[1]).collect();
    assert_eq!(h.len(), 25);
    assert!(h.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn eavr_ratios_and_summary() {
    let dir = std::env::temp_dir().join(format!("mce-cli-eavr-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("planes.csv");
    let o = mce(&["eavr", "--surface", r#"{"name":"k_planes","params":{"k":3}}"#, "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().nth(1), Some("r,volume,ratio,bound"));
    assert!(rows(&text).iter().all(|r| (r[2] - 3.0).abs() < 1e-10));
    let summary = json(&o);
    assert!((summary["value"].as_f64().unwrap() - 3.0).abs() < 1e-10);
    assert_eq!(summary["converged"], true);

    let o = mce(&["eavr", "--surface", "plane", "--r-grid", "lin:1:5:5"]);
    assert!(rows(&stdout(&o)).iter().all(|r| (r[2] - 1.0).abs() < 1e-10));

    let o = mce(&["eavr", "--surface", "helicoid", "--r-grid", "log:1:100:8"]);
    assert_eq!(o.status.code(), Some(3));
    let ratios: Vec<f64> = rows(&stdout(&o)).iter().map(|r| r[2]).collect();
    assert!(ratios.windows(2).all(|w| w[1] > w[0]));
    let summary: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(summary["converged"], false);
    assert!(summary["high"].is_null());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn blowdown_columns() {
    let o = mce(&["blowdown", "--surface", "plane"]);
    let text = stdout(&o);
    assert_eq!(text.lines().nth(1), Some("r_j,normalized_volume,shell_ratio"));
    for r in rows(&text) {
        assert!((r[1] - 1.0).abs() < 1e-10 && (r[2] - 1.0).abs() < 1e-8, "{r:?}");
    }
    let o = mce(&["blowdown", "--surface", "catenoid"]);
    let last = rows(&stdout(&o)).pop().unwrap();
    assert!((last[1] - 2.0).abs() < 1e-3 && (last[2] - 2.0).abs() < 1e-2, "{last:?}");
}

#[test]
fn verify_exit_codes() {
    let o = mce(&["verify", "--surface", "catenoid"]);
    assert_eq!(o.status.code(), Some(0));
    let report = json(&o);
    for check in report["checks"].as_array().unwrap() {
        for key in ["id", "anchor", "pass", "worst_margin", "tolerance", "grid"] {
            assert!(check.get(key).is_some(), "{key}");
        }
    }
    let o = mce(&["verify", "--surface", "sphere"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["checks"][0]["pass"], false);
    let o = mce(&["verify", "--surface", r#"{"name":"expr","exprs":"u; v; )","n":2,"ambient":3,"domain":[[0,1],[0,1]]}"#]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains('^'));
}

#[test]
fn config_file_and_precedence() {
    let dir = std::env::temp_dir().join(format!("mce-cli-config-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.json");
    std::fs::write(
        &cfg,
        r#"{"surface": {"name": "offset_plane", "params": {"d": 2}}, "tau": 1.0, "quad": {"eps": 1e-9}}"#,
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let from_file = json(&mce(&["entropy", "--config", c]));
    assert!((from_file["value"].as_f64().unwrap() - (-1.0f64).exp()).abs() < 1e-8);
    let overridden = json(&mce(&["entropy", "--config", c, "--tau", "4"]));
    assert!((overridden["value"].as_f64().unwrap() - (-0.25f64).exp()).abs() < 1e-8);

    let surf = dir.join("surface.json");
    std::fs::write(&surf, r#"{"name":"k_planes","params":{"k":2}}"#).unwrap();
    let at = format!("@{}", surf.display());
    let o = json(&mce(&["entropy", "--surface", &at, "--tau", "1"]));
    assert!((o["value"].as_f64().unwrap() - 2.0).abs() < 1e-9);

    std::fs::write(&cfg, r#"{"tau": 1, "nonsense": true}"#).unwrap();
    assert_eq!(mce(&["entropy", "--config", c, "--surface", "plane"]).status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn provenance_header_tracks_config() {
    let a = stdout(&mce(&["sweep", "--surface", "plane", "--tau-grid", "log:1:10:2"]));
    let b = stdout(&mce(&["sweep", "--surface", "plane", "--tau-grid", "log:1:10:3"]));
    let head = |s: &str| s.lines().next().unwrap().to_string();
    let parts: Vec<String> = head(&a).split(' ').map(String::from).collect();
    assert_eq!(parts[..2], ["#", "mce"]);
    assert_eq!(parts[2], env!("CARGO_PKG_VERSION"));
    assert_eq!(parts[3], "sweep");
    assert_eq!(parts[4].len(), 64);
    assert_ne!(head(&a), head(&b));
}

#[test]
fn usage_errors() {
    for args in [
        vec!["entropy", "--surface", "plane"],
        vec!["entropy", "--tau", "1"],
        vec!["sweep", "--surface", "plane", "--r-grid", "log:0:1:3"],
        vec!["eavr", "--surface", "plane", "--center", "0,0"],
        vec!["entropy", "--surface", "plane", "--tau", "1", "--eps", "2"],
        vec!["bogus"],
    ] {
        assert_eq!(mce(&args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(mce(&["--help"]).status.code(), Some(0));
}

#[test]
fn svg_plot_is_written() {
    let dir = std::env::temp_dir().join(format!("mce-cli-svg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let svg = dir.join("h.svg");
    let o = mce(&["sweep", "--surface", "catenoid", "--plot", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.contains("<path"));
    let _ = std::fs::remove_dir_all(&dir);
}

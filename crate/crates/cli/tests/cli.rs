use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use zenoscope_cli::output::embedded_config;
use zenoscope_cli::RunConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_zenoscope"))
}

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["zenoscope"];
    full.extend_from_slice(args);
    zenoscope_cli::run(full)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Data rows of a CSV written by the tool, split into fields.
fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(path: &Path, idx: usize) -> Vec<f64> {
    rows(path).iter().map(|r| r[idx].parse().unwrap()).collect()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"
[model]
eps = 1.0
delta = 0.05
bath = { kind = "continuum", g = 1.0, s = 2.0, omega_c = 1.0 }

[grid]
tau_min = 0.2
tau_max = 3.0
count = 12
"#;

#[test]
fn no_tunneling_gives_zero_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zero.csv");
    assert_eq!(
        run(&[
            "curve",
            "--delta",
            "0",
            "--theta",
            "0",
            "--count",
            "10",
            "-o",
            s(&out)
        ]),
        0
    );
    let header = std::fs::read_to_string(&out).unwrap();
    assert!(header.lines().any(|l| l == "tau,gamma"));
    assert!(column(&out, 1).iter().all(|g| *g == 0.0));
}

#[test]
fn curves_are_deterministic_and_self_describing() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("sub").join("b.csv");
    let args = ["curve", "--theta", "0.7", "--count", "15", "--mode", "both"];
    assert_eq!(run(&[&args[..], &["-o", s(&a)]].concat()), 0);
    assert_eq!(run(&[&args[..], &["-o", s(&b)]].concat()), 0);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text
        .lines()
        .any(|l| l == "tau,gamma_effective,gamma_modified"));

    // the header alone reproduces the file
    let cfg = embedded_config(&text).unwrap();
    let c = write_config(dir.path(), "replay.toml", &cfg.to_toml());
    let replay = dir.path().join("replay.csv");
    assert_eq!(run(&["curve", "--config", s(&c), "-o", s(&replay)]), 0);
    assert_eq!(std::fs::read_to_string(&replay).unwrap(), text);

    // seventeen significant digits
    let first = &rows(&a)[0][1];
    let mantissa = first
        .split('e')
        .next()
        .unwrap()
        .trim_start_matches('-')
        .replace('.', "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn several_couplings_write_one_file_each() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    assert_eq!(
        run(&["curve", "--g", "1,2.5", "--count", "6", "-o", s(&out)]),
        0
    );
    assert!(dir.path().join("run_G1.csv").exists());
    assert!(dir.path().join("run_G2.5.csv").exists());
    assert!(!out.exists());
    let cfg = embedded_config(&std::fs::read_to_string(dir.path().join("run_G2.5.csv")).unwrap())
        .unwrap();
    assert_eq!(cfg.coupling(), Some(2.5));
    assert_eq!(run(&["curve", "--g", "1,2", "--count", "6"]), 2);
}

#[test]
fn json_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    assert_eq!(
        run(&["curve", "--count", "5", "--format", "json", "-o", s(&out)]),
        0
    );
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert_eq!(v["columns"][1], "gamma");
    assert_eq!(v["config"]["model"]["delta"], 0.05);
}

#[test]
fn single_cell_sweep_matches_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let curve = dir.path().join("curve.csv");
    let sweep = dir.path().join("sweep.csv");
    assert_eq!(
        run(&[
            "curve",
            "--config",
            s(&cfg),
            "--theta",
            "0.5",
            "-o",
            s(&curve)
        ]),
        0
    );
    assert_eq!(
        run(&[
            "sweep",
            "--config",
            s(&cfg),
            "--thetas",
            "0.5",
            "--modes",
            "effective",
            "-o",
            s(&sweep)
        ]),
        0
    );
    let want = rows(&curve);
    let got = rows(&sweep);
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want) {
        assert_eq!(g[3], "effective");
        assert_eq!(g[4], w[0]);
        assert_eq!(g[5], w[1]);
    }
    let header = std::fs::read_to_string(&sweep).unwrap();
    assert!(header.lines().any(|l| l == "G,theta,phi,mode,tau,gamma"));
}

#[test]
fn sweep_rows_are_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("sweep.csv");
    let code = run(&[
        "sweep",
        "--config",
        s(&cfg),
        "--g",
        "2,1",
        "--thetas",
        "1.5,0",
        "--modes",
        "modified,effective",
        "--count",
        "4",
        "-o",
        s(&out),
    ]);
    assert_eq!(code, 0);
    let keys: Vec<(f64, f64, String, f64)> = rows(&out)
        .iter()
        .map(|r| {
            (
                r[0].parse().unwrap(),
                r[1].parse().unwrap(),
                r[3].clone(),
                r[4].parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(keys.len(), 2 * 2 * 2 * 4);
    for w in keys.windows(2) {
        let ord = w[0]
            .0
            .total_cmp(&w[1].0)
            .then(w[0].1.total_cmp(&w[1].1))
            .then(w[0].2.cmp(&w[1].2))
            .then(w[0].3.total_cmp(&w[1].3));
        assert!(ord.is_lt(), "{:?} before {:?}", w[0], w[1]);
    }
}

#[test]
fn empty_sweep_axis_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "empty.toml",
        &format!("{SMALL}\n[sweep]\nthetas = []\n"),
    );
    assert_eq!(run(&["sweep", "--config", s(&cfg)]), 2);
}

#[test]
fn failed_sweep_cells_become_nan() {
    let dir = tempfile::tempdir().unwrap();
    let strict = |nodes: usize, tol: &str| {
        format!("{SMALL}\n[model.quadrature]\nnodes_1d = {nodes}\nnodes_2d = {nodes}\nmax_refinements = 0\nrel_tol = {tol}\n")
    };
    // weak coupling converges on 32 fixed nodes, strong coupling does not
    let cfg = write_config(dir.path(), "partial.toml", &strict(32, "1e-6"));
    let out = dir.path().join("nan.csv");
    let code = run(&[
        "sweep",
        "--config",
        s(&cfg),
        "--g",
        "0.05,4",
        "--thetas",
        "0,1.5707963267948966",
        "--count",
        "3",
        "-o",
        s(&out),
    ]);
    assert_eq!(code, 0);
    for row in rows(&out) {
        let weak = row[0].parse::<f64>().unwrap() < 1.0;
        assert_eq!(row[5] == "nan", !weak, "{row:?}");
    }
    assert!(std::fs::read_to_string(&out)
        .unwrap()
        .contains("# failed_cells = 2"));

    let cfg = write_config(dir.path(), "hopeless.toml", &strict(8, "1e-15"));
    let none = dir.path().join("none.csv");
    assert_eq!(
        run(&["sweep", "--config", s(&cfg), "--count", "3", "-o", s(&none)]),
        3
    );
}

#[test]
fn equal_couplings_have_no_critical_angle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "crit.toml",
        &format!("{SMALL}\n[critical]\ng1 = 2.0\ng2 = 2.0\n\n[critical.search.grid]\ntau_min = 0.2\ntau_max = 5.0\ncount = 20\nspacing = \"log\"\n"),
    );
    let out = dir.path().join("crit.json");
    assert_eq!(
        run(&["critical-angle", "--config", s(&cfg), "-o", s(&out)]),
        4
    );
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["status"], "no_crossing");
    assert_eq!(v["f_bracket"][0], 0.0);
    assert_eq!(v["f_bracket"][1], 0.0);
    assert_eq!(
        run(&[
            "critical-angle",
            "--config",
            s(&cfg),
            "--g1",
            "3",
            "--g2",
            "1"
        ]),
        2
    );
}

#[test]
fn phase_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("phases.csv");
    assert_eq!(run(&["phases", "--g", "2", "-o", s(&out)]), 0);
    let r: Vec<Vec<f64>> = rows(&out)
        .iter()
        .map(|r| r.iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(&r[0][..6], &[0.0, 0.0, 0.0, 8.0, 8.0, 1.0]);
    for row in &r {
        for k in 0..4 {
            let (closed, quad) = (row[1 + k], row[6 + k]);
            assert!(
                (closed - quad).abs() <= 1e-8 * closed.abs().max(1e-300) + 1e-13,
                "{row:?}"
            );
        }
    }
    let last = r.last().unwrap();
    assert!((last[1] - 8.0).abs() < 0.05);
}

#[test]
fn oracle_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("oracle.json");
    assert_eq!(run(&["oracle", "--format", "json", "-o", s(&out)]), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["uncoupled"]["difference"].as_f64().unwrap() <= 1e-10);
    assert!(v["delta_scaling"]["exponent"].as_f64().unwrap() >= 2.5);
    let residuals = v["polaron_residuals"].as_array().unwrap();
    assert!(residuals.last().unwrap()["residual"].as_f64().unwrap() <= 1e-8);
    assert!(v["leakage"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn oracle_flags_truncation_leakage() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("leak.csv");
    let output = bin()
        .args(["oracle", "--g", "1", "-o", s(&out)])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&output.stderr).contains("leakage"));
    assert!(out.exists());
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.toml", "[model]\neps = 1.0\n");
    assert_eq!(run(&["curve", "--config", s(&bad)]), 2);
    assert_eq!(run(&["curve", "--preset", "nope"]), 2);
    assert_eq!(run(&["curve", "--preset", "fig3"]), 2);
    assert_eq!(run(&["curve", "--theta", "4"]), 2);
    assert_eq!(run(&["curve", "--tau-min", "0"]), 2);
    assert_eq!(run(&["curve", "--config", s(&bad), "--preset", "fig1a"]), 2);
    let status = bin().args(["curve", "--no-such-flag"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn printed_configuration_round_trips() {
    let output = bin()
        .args(["curve", "--preset", "fig1b", "--print-config"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let cfg = RunConfig::from_toml(&String::from_utf8(output.stdout).unwrap()).unwrap();
    assert_eq!(cfg.couplings, vec![1.0, 2.0, 3.0]);
    assert_eq!(cfg.state.theta, std::f64::consts::FRAC_PI_2);
    assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
}

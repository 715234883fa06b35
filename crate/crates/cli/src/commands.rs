use std::f64::consts::PI;
use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::{json, Value};
use zenoscope_core::analysis::{
    bisect_peak_difference, classify_regimes, find_peak_with, sample_curve_with, with_coupling,
    Behavior, PeakDifference, PeakResult, Regime,
};
use zenoscope_core::bath::{BathPhases, EvaluationPath, SpectralDensity};
use zenoscope_core::oracle::{
    bath_trace_check, delta_scaling, exact_survival, isolated_qubit_survival, polaron_residual,
    DiscreteBathSystem, LEAKAGE_LIMIT,
};
use zenoscope_core::rates::{RateMode, RateModel};
use zenoscope_core::state::InitialState;
use zenoscope_core::Error;

use crate::config::{Format, RunConfig};
use crate::output::{coupling_label, csv_document, metadata, num, write_file, Target};
use crate::CliError;

fn json_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

/// A table rendered as CSV with a metadata header, or as a JSON document.
fn table_document(
    command: &str,
    config: &RunConfig,
    extra: &[(String, String)],
    columns: &[&str],
    rows: &[Vec<String>],
    json_rows: Value,
) -> Result<String, CliError> {
    match config.output.format {
        Format::Csv => csv_document(&metadata(command, config, extra), columns, rows),
        Format::Json => {
            let extra: serde_json::Map<String, Value> = extra
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect();
            Ok(json_text(&json!({
                "tool": format!("zenoscope {}", env!("CARGO_PKG_VERSION")),
                "command": command,
                "config": config.for_record(),
                "summary": extra,
                "columns": columns,
                "rows": json_rows,
            })))
        }
    }
}

fn peak_summary(
    model: &RateModel,
    state: &InitialState,
    mode: RateMode,
    config: &RunConfig,
    samples: &[(f64, f64)],
) -> Result<Vec<(String, String)>, CliError> {
    let peak = find_peak_with(samples, |tau| {
        model
            .gamma(tau, state, mode, config.definition)
            .map(|r| r.gamma)
    })?;
    let regimes = classify_regimes(samples)?;
    let m = mode.name();
    Ok(vec![
        (format!("peak_tau_{m}"), num(peak.tau_star)),
        (format!("peak_gamma_{m}"), num(peak.gamma_max)),
        (format!("peak_interior_{m}"), peak.refined.to_string()),
        (
            format!("anti_zeno_intervals_{m}"),
            regimes.count(Regime::AntiZeno).to_string(),
        ),
    ])
}

fn curve_document(config: &RunConfig) -> Result<String, CliError> {
    let state = config.state.state()?;
    let model = RateModel::new(&config.model)?;
    let modes = config.mode.modes();
    let mut extra = Vec::new();
    if let Some(note) = model.params().advisory() {
        eprintln!("warning: {note}");
        extra.push(("advisory".to_string(), note));
    }
    let mut curves = Vec::new();
    for &mode in &modes {
        let curve = sample_curve_with(&model, &state, mode, config.definition, &config.grid)?;
        extra.extend(peak_summary(&model, &state, mode, config, &curve.samples)?);
        curves.push(curve);
    }
    let columns: Vec<&str> = if modes.len() == 1 {
        vec!["tau", "gamma"]
    } else {
        vec!["tau", "gamma_effective", "gamma_modified"]
    };
    let n = curves[0].samples.len();
    let rows: Vec<Vec<String>> = (0..n)
        .map(|i| {
            std::iter::once(num(curves[0].samples[i].0))
                .chain(curves.iter().map(|c| num(c.samples[i].1)))
                .collect()
        })
        .collect();
    let json_rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            std::iter::once(curves[0].samples[i].0)
                .chain(curves.iter().map(|c| c.samples[i].1))
                .collect()
        })
        .collect();
    table_document("curve", config, &extra, &columns, &rows, json!(json_rows))
}

/// Γ(τ) curves; one file per coupling strength when several are given.
pub fn cmd_curve(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let target = Target::new(config.output.path.as_deref());
    let mut written = Vec::new();
    if config.couplings.len() <= 1 {
        let mut cfg = config.clone();
        if let Some(&g) = config.couplings.first() {
            cfg.model = with_coupling(&cfg.model, g)?;
        }
        cfg.couplings.clear();
        written.extend(target.write(&curve_document(&cfg)?)?);
        return Ok(written);
    }
    if target == Target::Stdout {
        return Err(CliError::usage(
            "several couplings write one file each and need --output",
        ));
    }
    for &g in &config.couplings {
        let mut cfg = config.clone();
        cfg.model = with_coupling(&cfg.model, g)?;
        cfg.couplings.clear();
        let path = target
            .sibling(&coupling_label(g), ext(config.output.format))
            .expect("file target");
        cfg.output.path = Some(path.clone());
        write_file(&path, &curve_document(&cfg)?)?;
        written.push(path);
    }
    Ok(written)
}

fn peak_json(p: &PeakResult) -> Value {
    json!({"tau_star": p.tau_star, "gamma_max": p.gamma_max, "refined": p.refined})
}

/// Bisection for the angle at which the peak rates of two couplings meet.
pub fn cmd_critical_angle(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let mode = config.mode.single()?;
    let cc = &config.critical;
    let target = Target::new(config.output.path.as_deref());
    let diff = PeakDifference::for_options(cc.g1, cc.g2, &config.model, mode, &cc.search)?;
    let header = json!({
        "tool": format!("zenoscope {}", env!("CARGO_PKG_VERSION")),
        "command": "critical-angle",
        "config": config.for_record(),
    });
    let result = match bisect_peak_difference(&diff, &cc.search) {
        Ok(r) => r,
        Err(
            e @ Error::NoCrossing {
                theta_lo,
                theta_hi,
                f_lo,
                f_hi,
            },
        ) => {
            let mut report = header;
            report["status"] = json!("no_crossing");
            report["bracket"] = json!([theta_lo, theta_hi]);
            report["f_bracket"] = json!([f_lo, f_hi]);
            target.write(&json_text(&report))?;
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };
    let mut neighbors = Vec::new();
    for &factor in &cc.neighbor_factors {
        let theta = result.theta_c * factor;
        let (p1, p2) = diff.exact_peaks(theta)?;
        let d = p2.gamma_max - p1.gamma_max;
        neighbors.push(json!({
            "factor": factor,
            "theta": theta,
            "peak_g1": peak_json(&p1),
            "peak_g2": peak_json(&p2),
            "difference": d,
            "behavior": Behavior::from_difference(d),
        }));
    }
    let mut table = Vec::new();
    for &k in &cc.table_pi_over_theta {
        let theta = PI / k;
        if !(k >= 1.0 && theta.is_finite()) {
            return Err(CliError::usage(format!(
                "table entries are pi/theta values >= 1, got {k}"
            )));
        }
        table.push((k, theta, diff.eval(theta)?));
    }
    let mut report = header;
    report["status"] = json!("ok");
    report["theta_c"] = json!(result.theta_c);
    report["pi_over_theta_c"] = json!(PI / result.theta_c);
    report["bracket"] = json!([result.bracket.0, result.bracket.1]);
    report["residual"] = json!(result.residual);
    report["g_pair"] = json!([result.g_pair.0, result.g_pair.1]);
    report["peaks"] = json!([peak_json(&result.peaks.0), peak_json(&result.peaks.1)]);
    report["f_bracket"] = json!([result.f_bracket.0, result.f_bracket.1]);
    report["iterations"] = json!(result.iterations);
    report["evaluations"] = json!(result.evaluations);
    report["neighbors"] = json!(neighbors);
    report["difference_table"] = json!(table
        .iter()
        .map(|&(k, theta, d)| json!({"pi_over_theta": k, "theta": theta, "difference": d}))
        .collect::<Vec<_>>());
    let mut written: Vec<PathBuf> = target.write(&json_text(&report))?.into_iter().collect();
    if let Some(path) = target.sibling("difference", "csv") {
        let extra = vec![
            ("theta_c".to_string(), num(result.theta_c)),
            ("residual".to_string(), num(result.residual)),
        ];
        let rows: Vec<Vec<String>> = table
            .iter()
            .map(|&(k, t, d)| vec![num(k), num(t), num(d)])
            .collect();
        let doc = csv_document(
            &metadata("critical-angle", config, &extra),
            &["pi_over_theta", "theta", "difference"],
            &rows,
        )?;
        write_file(&path, &doc)?;
        written.push(path);
    }
    Ok(written)
}

fn axis(values: &Option<Vec<f64>>, fallback: f64, name: &str) -> Result<Vec<f64>, CliError> {
    let mut v = values.clone().unwrap_or_else(|| vec![fallback]);
    if v.is_empty() {
        return Err(CliError::usage(format!("sweep axis `{name}` is empty")));
    }
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(CliError::usage(format!(
            "sweep axis `{name}` has a non-finite value {x}"
        )));
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

/// Cartesian product of couplings, angles and modes in long format.
pub fn cmd_sweep(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let sc = &config.sweep;
    let base_g = config
        .coupling()
        .ok_or_else(|| CliError::usage("sweeps need a continuum spectral density"))?;
    let couplings = axis(&sc.couplings, base_g, "couplings")?;
    let thetas = axis(&sc.thetas, config.state.theta, "thetas")?;
    let phis = axis(&sc.phis, config.state.phi, "phis")?;
    let mut modes = sc.modes.clone().unwrap_or_else(|| config.mode.modes());
    if modes.is_empty() {
        return Err(CliError::usage("sweep axis `modes` is empty"));
    }
    modes.sort_by_key(|m| m.name());
    modes.dedup();
    config.grid.validate()?;
    let mut models = Vec::new();
    for &g in &couplings {
        models.push(RateModel::new(&with_coupling(&config.model, g)?)?);
    }
    let mut cells = Vec::new();
    for (gi, &g) in couplings.iter().enumerate() {
        for &theta in &thetas {
            for &phi in &phis {
                for &mode in &modes {
                    cells.push((gi, g, theta, phi, mode));
                }
            }
        }
    }
    let results: Vec<Result<Vec<f64>, Error>> = cells
        .par_iter()
        .map(|&(gi, _, theta, phi, mode)| {
            let state = InitialState::new(theta, phi)?;
            let curve =
                sample_curve_with(&models[gi], &state, mode, config.definition, &config.grid)?;
            Ok(curve.gammas().collect())
        })
        .collect();
    let taus = config.grid.points();
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    let mut failures = Vec::new();
    for (cell, result) in cells.iter().zip(&results) {
        let &(_, g, theta, phi, mode) = cell;
        let gammas = match result {
            Ok(v) => v.clone(),
            Err(e) => {
                failures.push(format!(
                    "G={g} theta={theta} phi={phi} mode={}: {e}",
                    mode.name()
                ));
                vec![f64::NAN; taus.len()]
            }
        };
        for (&tau, &gamma) in taus.iter().zip(&gammas) {
            rows.push(vec![
                num(g),
                num(theta),
                num(phi),
                mode.name().to_string(),
                num(tau),
                num(gamma),
            ]);
            json_rows.push(json!([
                g,
                theta,
                phi,
                mode.name(),
                tau,
                if gamma.is_nan() {
                    Value::Null
                } else {
                    json!(gamma)
                }
            ]));
        }
    }
    if !failures.is_empty() {
        eprintln!(
            "warning: {} of {} sweep cells failed",
            failures.len(),
            cells.len()
        );
        for f in &failures {
            eprintln!("  {f}");
        }
    }
    if failures.len() == cells.len() {
        return Err(CliError::Numerical("every sweep cell failed".to_string()));
    }
    let extra = vec![("failed_cells".to_string(), failures.len().to_string())];
    let doc = table_document(
        "sweep",
        config,
        &extra,
        &["G", "theta", "phi", "mode", "tau", "gamma"],
        &rows,
        json!(json_rows),
    )?;
    Ok(Target::new(config.output.path.as_deref())
        .write(&doc)?
        .into_iter()
        .collect())
}

/// Bath phase functions on a time grid, with quadrature columns next to
/// the closed forms when both exist.
pub fn cmd_phases(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let pc = &config.phases;
    if !(pc.count >= 2 && pc.t_min >= 0.0 && pc.t_max > pc.t_min && pc.t_max.is_finite()) {
        return Err(CliError::usage(format!(
            "phase grid needs count >= 2 and 0 <= t_min < t_max, got {} points on [{}, {}]",
            pc.count, pc.t_min, pc.t_max
        )));
    }
    let m = &config.model;
    let phases = BathPhases::new(&m.bath, m.temp, &m.quadrature)?;
    let quadrature = match (&m.bath, phases.uses_closed_form()) {
        (SpectralDensity::Continuum { .. }, true) => Some(BathPhases::with_path(
            &m.bath,
            m.temp,
            &m.quadrature,
            EvaluationPath::Quadrature,
        )?),
        _ => None,
    };
    let mut columns = vec!["t", "phi_r", "phi_i", "phi_r1", "phi_r2", "abs_c"];
    if quadrature.is_some() {
        columns.extend([
            "phi_r_quadrature",
            "phi_i_quadrature",
            "phi_r1_quadrature",
            "phi_r2_quadrature",
        ]);
    }
    let r2 = phases.phi_r2()?;
    let q2 = quadrature.as_ref().map(|q| q.phi_r2()).transpose()?;
    let mut values = Vec::with_capacity(pc.count);
    for k in 0..pc.count {
        let t = if k == pc.count - 1 {
            pc.t_max
        } else {
            pc.t_min + (pc.t_max - pc.t_min) * k as f64 / (pc.count - 1) as f64
        };
        let mut row = vec![
            t,
            phases.phi_r(t)?,
            phases.phi_i(t)?,
            phases.phi_r1(t)?,
            r2,
            phases.correlation(t)?.norm(),
        ];
        if let (Some(q), Some(q2)) = (&quadrature, q2) {
            row.extend([q.phi_r(t)?, q.phi_i(t)?, q.phi_r1(t)?, q2]);
        }
        values.push(row);
    }
    let rows: Vec<Vec<String>> = values
        .iter()
        .map(|r| r.iter().map(|&x| num(x)).collect())
        .collect();
    let extra = vec![(
        "closed_form".to_string(),
        phases.uses_closed_form().to_string(),
    )];
    let doc = table_document("phases", config, &extra, &columns, &rows, json!(values))?;
    Ok(Target::new(config.output.path.as_deref())
        .write(&doc)?
        .into_iter()
        .collect())
}

/// Exact small-bath dynamics against the perturbative survival.
pub fn cmd_oracle(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let oc = &config.oracle;
    let eps = config.model.eps;
    let density = match config.model.bath {
        SpectralDensity::Continuum { s, omega_c, .. } => SpectralDensity::Continuum {
            g: oc.g,
            s,
            omega_c,
        },
        ref d @ SpectralDensity::Discrete { .. } => d.clone(),
    };
    let sys = match &density {
        SpectralDensity::Continuum { .. } => {
            DiscreteBathSystem::from_density(&density, oc.modes, oc.cutoff, oc.n_max)?
        }
        SpectralDensity::Discrete { modes } => DiscreteBathSystem::new(modes.clone(), oc.n_max)?,
    };
    let state = InitialState::new(oc.theta, oc.phi)?;
    if oc.deltas.is_empty() || oc.n_measurements == 0 {
        return Err(CliError::usage(
            "the oracle needs at least one delta and one measurement",
        ));
    }

    let scaling = delta_scaling(oc.tau, &oc.deltas, &state, &sys, eps, oc.mode)?;
    let mut leakage = scaling.leakage;
    let mut measurements = Vec::new();
    for &delta in &oc.deltas {
        let ex = exact_survival(oc.tau, oc.n_measurements, &state, &sys, eps, delta, oc.mode)?;
        leakage = leakage.max(ex.leakage);
        let params = zenoscope_core::rates::ModelParams {
            eps,
            delta,
            bath: sys.density(),
            temp: zenoscope_core::bath::Temperature::Zero,
            quadrature: config.model.quadrature,
        };
        let pert = RateModel::new(&params)?
            .survival(oc.tau, &state, oc.mode)?
            .value
            .re;
        measurements.push(json!({
            "delta": delta,
            "exact": ex.survivals,
            "perturbative": pert,
            "unitarity_defect": ex.unitarity_defect,
        }));
    }

    let free_modes = sys
        .modes
        .iter()
        .map(|m| zenoscope_core::bath::BathMode {
            omega: m.omega,
            coupling: num_complex::Complex64::new(0.0, 0.0),
        })
        .collect();
    let free = DiscreteBathSystem::new(free_modes, oc.n_max)?;
    let free_exact = exact_survival(
        oc.tau,
        1,
        &state,
        &free,
        eps,
        oc.deltas[0],
        RateMode::Effective,
    )?;
    let rabi = isolated_qubit_survival(oc.tau, &state, eps, oc.deltas[0]);

    let mut residuals = Vec::new();
    for &n in &oc.polaron_n_max {
        let instance = DiscreteBathSystem::new(oc.polaron_modes.clone(), n)?;
        residuals.push(json!({"n_max": n, "residual": polaron_residual(&instance, eps, oc.deltas[0], oc.polaron_block)?}));
    }

    let trace_sys = sys.with_n_max(zenoscope_core::oracle::MAX_LEVEL)?;
    let mut traces = Vec::new();
    for &[t1, t2, tau] in &oc.trace_points {
        let chk = bath_trace_check(t1, t2, tau, &trace_sys)?;
        traces.push(json!({
            "t1": t1, "t2": t2, "tau": tau,
            "direct": [chk.direct.re, chk.direct.im],
            "formula": [chk.formula.re, chk.formula.im],
            "relative_error": chk.relative_error(),
        }));
    }

    let report = json!({
        "tool": format!("zenoscope {}", env!("CARGO_PKG_VERSION")),
        "command": "oracle",
        "config": config.for_record(),
        "modes": sys.modes,
        "delta_scaling": {
            "tau": scaling.tau,
            "exponent": scaling.exponent,
            "rows": scaling.rows.iter().map(|r| json!({
                "delta": r.delta, "exact": r.exact, "perturbative": r.perturbative, "deviation": r.deviation,
            })).collect::<Vec<_>>(),
        },
        "measurements": measurements,
        "uncoupled": {"exact": free_exact.survivals[0], "analytic": rabi, "difference": (free_exact.survivals[0] - rabi).abs()},
        "polaron_residuals": residuals,
        "bath_traces": traces,
        "leakage": leakage,
        "leakage_limit": LEAKAGE_LIMIT,
    });
    let target = Target::new(config.output.path.as_deref());
    let doc = match config.output.format {
        Format::Json => json_text(&report),
        Format::Csv => {
            let extra = vec![
                ("exponent".to_string(), num(scaling.exponent)),
                ("leakage".to_string(), num(leakage)),
                (
                    "uncoupled_difference".to_string(),
                    num((free_exact.survivals[0] - rabi).abs()),
                ),
            ];
            let rows: Vec<Vec<String>> = scaling
                .rows
                .iter()
                .map(|r| {
                    vec![
                        num(r.delta),
                        num(r.exact),
                        num(r.perturbative),
                        num(r.deviation),
                    ]
                })
                .collect();
            csv_document(
                &metadata("oracle", config, &extra),
                &["delta", "exact", "perturbative", "deviation"],
                &rows,
            )?
        }
    };
    let written = target.write(&doc)?.into_iter().collect();
    if leakage > LEAKAGE_LIMIT {
        return Err(Error::TruncationLeakage {
            leakage,
            limit: LEAKAGE_LIMIT,
        }
        .into());
    }
    Ok(written)
}

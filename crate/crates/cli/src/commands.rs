//! Implementations of the five subcommands. Every run writes its artifacts
//! plus a manifest.json with parameter provenance and output checksums into
//! the run directory.

use crate::config::{resolve, ConfigFile, Resolved};
use crate::manifest::RunManifest;
use serde::Serialize;
use sigmaflow_core::barriers::{parse_sphere_csv, write_barrier_csv, BarrierPair, BarrierSide};
use sigmaflow_core::flow::{
    check_initial_admissible, run_normalized, write_grid_snapshot_csv, write_history_csv,
    write_radial_snapshot_csv, BcMode, Envelopes, FlowConfig, FlowState,
};
use sigmaflow_core::geometry::GraphFunction;
use sigmaflow_core::legendre::{dual_residual, legendre_transform, write_dual_csv};
use sigmaflow_core::radial::{
    limit_profile, remainder_shape, write_profile_csv, RadialParams, RadialProfile,
};
use sigmaflow_core::CoreError;
use std::fs;
use std::path::{Path, PathBuf};

/// Exit discipline: 0 success, 1 usage/parameter error, 2 numerical
/// non-convergence.
pub enum CmdError {
    Usage(String),
    Numerical(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Usage(_) => 1,
            CmdError::Numerical(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CmdError::Usage(m) | CmdError::Numerical(m) => m,
        }
    }
}

impl From<CoreError> for CmdError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Convergence(_)
            | CoreError::Integration { .. }
            | CoreError::Stiffness(_)
            | CoreError::Comparison(_) => CmdError::Numerical(e.to_string()),
            other => CmdError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Usage(format!("io error: {e}"))
    }
}

/// Resolve the run directory: relative paths land under $SIGMAFLOW_OUT_ROOT
/// when that is set.
pub fn resolve_out_dir(out_dir: &Path) -> PathBuf {
    if out_dir.is_absolute() {
        return out_dir.to_path_buf();
    }
    match std::env::var_os("SIGMAFLOW_OUT_ROOT") {
        Some(root) => PathBuf::from(root).join(out_dir),
        None => out_dir.to_path_buf(),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CmdError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CmdError::Usage(format!("serialization failed: {e}")))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

// ---------------------------------------------------------------- translator

pub struct TranslatorArgs {
    pub n: usize,
    pub k: usize,
    pub a: f64,
    pub r_max: f64,
    pub tol: f64,
    pub samples: usize,
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct TranslatorSummary {
    n: usize,
    k: usize,
    a: f64,
    c0: f64,
    #[serde(rename = "C_asym")]
    c_asym: f64,
    plateau_error: f64,
    plateau_ok: bool,
    tol: f64,
    residual_sup: f64,
    bounds_ok: bool,
}

pub fn cmd_translator(args: &TranslatorArgs) -> Result<i32, CmdError> {
    let params = RadialParams::new(args.n, args.k, args.a, args.r_max, args.tol)
        .and_then(|p| p.with_samples(args.samples))
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    let dir = resolve_out_dir(&args.out_dir);
    fs::create_dir_all(&dir)?;
    let prof = limit_profile(&params)?;

    // independent equation residual over the mid-range
    let mut residual_sup = 0.0f64;
    for i in 1..=32 {
        let r = args.r_max * 0.5 * i as f64 / 32.0;
        residual_sup = residual_sup.max(sigmaflow_core::radial::verify_residual(&prof, r)?);
    }

    let profile_path = dir.join("profile.csv");
    let mut buf = Vec::new();
    write_profile_csv(&prof, &mut buf)?;
    fs::write(&profile_path, buf)?;

    let summary = TranslatorSummary {
        n: args.n,
        k: args.k,
        a: args.a,
        c0: prof.c0,
        c_asym: prof.c_asym,
        plateau_error: prof.plateau_error,
        plateau_ok: prof.plateau_ok,
        tol: args.tol,
        residual_sup,
        bounds_ok: true, // limit_profile enforces the two-sided bounds
    };
    let summary_path = dir.join("summary.json");
    write_json(&summary_path, &summary)?;

    let mut manifest = RunManifest::new("translator");
    for (key, value) in [
        ("n", args.n.to_string()),
        ("k", args.k.to_string()),
        ("a", args.a.to_string()),
        ("r_max", args.r_max.to_string()),
        ("tol", args.tol.to_string()),
        ("samples", args.samples.to_string()),
    ] {
        manifest.set_param(key, value, "cli");
    }
    manifest.add_output(&profile_path)?;
    manifest.add_output(&summary_path)?;
    manifest.write(&dir)?;
    println!(
        "translator (n={}, k={}, a={}): c0 = {:.9}, C_asym = {:.9} (plateau error {:.2e})",
        args.n, args.k, args.a, prof.c0, prof.c_asym, prof.plateau_error
    );
    Ok(0)
}

// ---------------------------------------------------------------------- flow

#[derive(Clone, Default)]
pub struct FlowCliOverrides {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub a: Option<f64>,
    pub l: Option<f64>,
    pub h: Option<f64>,
    pub dt_safety: Option<f64>,
    pub t_end: Option<f64>,
    pub bc_mode: Option<String>,
    pub tol_converged: Option<f64>,
    pub mode: Option<String>,
    pub bump: Option<f64>,
    pub profile_tol: Option<f64>,
    pub admissible_c: Option<f64>,
    pub phi_csv: Option<String>,
    pub m_offset: Option<f64>,
}

#[derive(Serialize)]
struct FlowSummary {
    mode: String,
    n: usize,
    k: usize,
    a: f64,
    converged: bool,
    monotone: bool,
    final_sup_dist: f64,
    final_t: f64,
    steps: usize,
    initial_max_phi_over_v: f64,
    max_phi_over_v: f64,
    sandwich_checked: bool,
    admissible: bool,
    admissible_velocity_max: f64,
    truncation_remainder_estimate: f64,
}

pub fn cmd_flow(
    config_path: Option<&Path>,
    cli: &FlowCliOverrides,
    out_dir: &Path,
) -> Result<i32, CmdError> {
    let config = match config_path {
        Some(p) => ConfigFile::load(p).map_err(CmdError::Usage)?,
        None => ConfigFile::default(),
    };
    let usage = |e: String| CmdError::Usage(e);
    let n = resolve(cli.n, &config, "n", 2).map_err(usage)?;
    let k = resolve(cli.k, &config, "k", 1).map_err(usage)?;
    let a = resolve(cli.a, &config, "a", 1.0).map_err(usage)?;
    let l = resolve(cli.l, &config, "L", 4.0).map_err(usage)?;
    let h = resolve(cli.h, &config, "h", 1.0 / 32.0).map_err(usage)?;
    let dt_safety = resolve(cli.dt_safety, &config, "dt_safety", 0.4).map_err(usage)?;
    let t_end = resolve(cli.t_end, &config, "t_end", 50.0).map_err(usage)?;
    let bc_mode_raw = resolve(
        cli.bc_mode.clone(),
        &config,
        "bc_mode",
        "translator_dirichlet".to_string(),
    )
    .map_err(usage)?;
    let tol_converged = resolve(cli.tol_converged, &config, "tol_converged", 1e-3).map_err(usage)?;
    let mode = resolve(cli.mode.clone(), &config, "mode", "radial".to_string()).map_err(usage)?;
    let bump = resolve(cli.bump, &config, "bump", 0.0).map_err(usage)?;
    let profile_tol = resolve(cli.profile_tol, &config, "profile_tol", 1e-10).map_err(usage)?;
    let admissible_c = resolve(cli.admissible_c, &config, "admissible_c", 100.0).map_err(usage)?;
    let phi_csv = resolve(
        cli.phi_csv.clone(),
        &config,
        "phi_csv",
        String::new(),
    )
    .map_err(usage)?;
    let m_offset = resolve(cli.m_offset, &config, "m_offset", -1.0).map_err(usage)?;

    let bc_mode: BcMode = bc_mode_raw
        .value
        .parse()
        .map_err(|e: CoreError| CmdError::Usage(e.to_string()))?;

    let dir = resolve_out_dir(out_dir);
    fs::create_dir_all(&dir)?;

    // target translator: profile range covers the domain diagonal
    let radial_mode = match mode.value.as_str() {
        "radial" => true,
        "grid" => false,
        other => return Err(CmdError::Usage(format!("unknown mode '{other}'"))),
    };
    let r_needed = if radial_mode {
        l.value
    } else {
        l.value * std::f64::consts::SQRT_2 * 1.01
    };
    let params = RadialParams::new(n.value, k.value, a.value, r_needed, profile_tol.value)
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    let prof = limit_profile(&params)?;

    let mut state = build_flow_state(&prof, radial_mode, l.value, h.value, bump.value, bc_mode, &phi_csv.value, m_offset.value)?;
    let admissibility = check_initial_admissible(&state, admissible_c.value)?;

    let cfg = FlowConfig {
        dt_safety: dt_safety.value,
        dt_max: 0.25,
        t_end: t_end.value,
        bc_mode,
        tol_converged: tol_converged.value,
        checkpoint_interval: 0.25,
    };

    let snap_initial = dir.join("snapshot_initial.csv");
    write_snapshot(&state, &snap_initial, radial_mode)?;

    // sandwich envelopes: shifted translators bracketing the initial data
    let dev_low = state
        .u
        .iter()
        .zip(&state.target)
        .map(|(u, t)| u - t)
        .fold(f64::INFINITY, f64::min)
        .min(0.0);
    let dev_high = state
        .u
        .iter()
        .zip(&state.target)
        .map(|(u, t)| u - t)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let envelopes = Envelopes {
        lower: state.target.iter().map(|t| t + dev_low).collect(),
        upper: state.target.iter().map(|t| t + dev_high).collect(),
    };
    let outcome = run_normalized(&mut state, &cfg, Some(&envelopes))?;

    let snap_final = dir.join("snapshot_final.csv");
    write_snapshot(&state, &snap_final, radial_mode)?;
    let history_path = dir.join("history.csv");
    let mut buf = Vec::new();
    write_history_csv(&state.history, &mut buf)?;
    fs::write(&history_path, buf)?;

    let rho_b = a.value * r_needed;
    let summary = FlowSummary {
        mode: mode.value.clone(),
        n: n.value,
        k: k.value,
        a: a.value,
        converged: outcome.converged,
        monotone: outcome.monotone,
        final_sup_dist: outcome.final_sup_dist,
        final_t: outcome.final_t,
        steps: outcome.steps,
        initial_max_phi_over_v: outcome.initial_max_ratio,
        max_phi_over_v: outcome.max_ratio_seen,
        sandwich_checked: true,
        admissible: admissibility.admissible,
        admissible_velocity_max: admissibility.admissible_velocity_max,
        truncation_remainder_estimate: remainder_shape(n.value, k.value, rho_b) / a.value
            * prof.c_asym
            * k.value as f64
            / (2.0 * n.value as f64),
    };
    let summary_path = dir.join("summary.json");
    write_json(&summary_path, &summary)?;

    let mut manifest = RunManifest::new("flow");
    for (key, r) in [
        ("n", format_resolved(&n)),
        ("k", format_resolved(&k)),
        ("a", format_resolved(&a)),
        ("L", format_resolved(&l)),
        ("h", format_resolved(&h)),
        ("dt_safety", format_resolved(&dt_safety)),
        ("t_end", format_resolved(&t_end)),
        ("bc_mode", (bc_mode_raw.value.clone(), bc_mode_raw.source)),
        ("tol_converged", format_resolved(&tol_converged)),
        ("mode", (mode.value.clone(), mode.source)),
        ("bump", format_resolved(&bump)),
        ("profile_tol", format_resolved(&profile_tol)),
        ("admissible_c", format_resolved(&admissible_c)),
    ] {
        manifest.set_param(key, r.0, r.1);
    }
    if let Some(p) = config_path {
        manifest.inputs.push(p.display().to_string());
    }
    manifest.add_output(&history_path)?;
    manifest.add_output(&snap_initial)?;
    manifest.add_output(&snap_final)?;
    manifest.add_output(&summary_path)?;
    manifest.write(&dir)?;

    println!(
        "flow ({} n={} k={} a={}): converged = {}, final sup|ũ - u^∞| = {:.3e} at t = {:.3}",
        mode.value, n.value, k.value, a.value, outcome.converged, outcome.final_sup_dist, outcome.final_t
    );
    if !outcome.converged {
        return Ok(2);
    }
    Ok(0)
}

fn format_resolved<T: ToString>(r: &Resolved<T>) -> (String, &'static str) {
    (r.value.to_string(), r.source)
}

#[allow(clippy::too_many_arguments)]
fn build_flow_state(
    prof: &RadialProfile,
    radial_mode: bool,
    l: f64,
    h: f64,
    bump: f64,
    bc_mode: BcMode,
    phi_csv: &str,
    m_offset: f64,
) -> Result<FlowState, CmdError> {
    let interp = prof.interpolant()?;
    let r_max = prof.params.r_max;
    let state = if radial_mode {
        let nodes = (l / h).round() as usize + 1;
        let u0 = move |r: f64| interp.u.eval(r.min(r_max)).unwrap() + bump * (-r * r).exp();
        FlowState::new_radial(prof, nodes, Some(&u0))?
    } else {
        let nx = (2.0 * l / h).round() as usize + 1;
        let u0 = move |x: f64, y: f64| {
            let r = x.hypot(y);
            interp.u.eval(r.min(r_max)).unwrap() + bump * (-r * r).exp()
        };
        FlowState::new_grid(prof, l, nx, Some(&u0))?
    };
    match bc_mode {
        BcMode::TranslatorDirichlet => Ok(state),
        BcMode::BarrierDirichlet => {
            if radial_mode {
                return Err(CmdError::Usage(
                    "barrier_dirichlet is a grid-mode boundary condition".into(),
                ));
            }
            if phi_csv.is_empty() {
                return Err(CmdError::Usage(
                    "barrier_dirichlet needs phi_csv (theta,phi samples)".into(),
                ));
            }
            let text = fs::read_to_string(phi_csv)?;
            let phi = parse_sphere_csv(&text)?;
            let base = prof.clone().normalized_zero_offset();
            let m = if m_offset >= 0.0 { Some(m_offset) } else { None };
            let pair = BarrierPair::new(&base, prof.params.a, phi, m)?;
            let (nx, _) = match state.domain {
                sigmaflow_core::flow::FlowDomain::Grid { nx, .. } => (nx, 0),
                _ => unreachable!(),
            };
            let (_, q2) = pair.grid(l, nx)?;
            Ok(state.with_boundary_base(q2)?)
        }
    }
}

fn write_snapshot(state: &FlowState, path: &Path, radial_mode: bool) -> Result<(), CmdError> {
    let mut buf = Vec::new();
    if radial_mode {
        write_radial_snapshot_csv(state, &mut buf)?;
    } else {
        write_grid_snapshot_csv(state, &mut buf)?;
    }
    fs::write(path, buf)?;
    Ok(())
}

// ------------------------------------------------------------------ barriers

pub struct BarrierArgs {
    pub phi_csv: PathBuf,
    pub k: usize,
    pub a: f64,
    pub m_offset: Option<f64>,
    pub l: f64,
    pub nx: usize,
    pub base_r_max: f64,
    pub tol: f64,
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct BarrierReport {
    k: usize,
    a: f64,
    m_offset: f64,
    ordering_ok: bool,
    max_ordering_violation: f64,
    gap_inner: f64,
    gap_outer: f64,
    radius_inner: f64,
    radius_outer: f64,
}

pub fn cmd_barriers(args: &BarrierArgs) -> Result<i32, CmdError> {
    let text = fs::read_to_string(&args.phi_csv)?;
    let phi = parse_sphere_csv(&text)?;
    let params = RadialParams::new(2, args.k, 1.0, args.base_r_max, args.tol)
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    let base = limit_profile(&params)?.normalized_zero_offset();
    let pair = BarrierPair::new(&base, args.a, phi, args.m_offset)?;

    let dir = resolve_out_dir(&args.out_dir);
    fs::create_dir_all(&dir)?;
    let (q1, q2) = pair.grid(args.l, args.nx)?;
    let max_violation = q1
        .iter()
        .zip(&q2)
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max);
    let ordering_ok = max_violation <= 1e-12;

    let (r_in, r_out) = (0.5 * args.l, 0.9 * args.l);
    let report = BarrierReport {
        k: args.k,
        a: args.a,
        m_offset: pair.m_offset,
        ordering_ok,
        max_ordering_violation: max_violation.max(0.0),
        gap_inner: pair.asymptotic_gap(r_in, 128)?,
        gap_outer: pair.asymptotic_gap(r_out, 128)?,
        radius_inner: r_in,
        radius_outer: r_out,
    };

    let grid_path = dir.join("barrier_grid.csv");
    let mut buf = Vec::new();
    write_barrier_csv(args.l, args.nx, &q1, &q2, &mut buf)?;
    fs::write(&grid_path, buf)?;
    let report_path = dir.join("report.json");
    write_json(&report_path, &report)?;

    let mut manifest = RunManifest::new("barriers");
    manifest.set_param("k", args.k, "cli");
    manifest.set_param("a", args.a, "cli");
    manifest.set_param("M", pair.m_offset, if args.m_offset.is_some() { "cli" } else { "default" });
    manifest.set_param("L", args.l, "cli");
    manifest.set_param("nx", args.nx, "cli");
    manifest.inputs.push(args.phi_csv.display().to_string());
    manifest.add_output(&grid_path)?;
    manifest.add_output(&report_path)?;
    manifest.write(&dir)?;

    println!(
        "barriers (k={}, a={}, M={:.4}): ordering_ok = {}, gaps {:.3e} -> {:.3e}",
        args.k, args.a, pair.m_offset, ordering_ok, report.gap_inner, report.gap_outer
    );
    if !ordering_ok {
        return Ok(2);
    }
    Ok(0)
}

// ------------------------------------------------------------------ legendre

pub struct LegendreArgs {
    pub n: usize,
    pub k: usize,
    pub a: f64,
    pub l: f64,
    pub nx: usize,
    pub tau: f64,
    pub nx_dual: usize,
    pub tol: f64,
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct LegendreSummary {
    n: usize,
    k: usize,
    a: f64,
    residual_sup: f64,
    resolved_fraction: f64,
    evaluated_nodes: usize,
}

pub fn cmd_legendre(args: &LegendreArgs) -> Result<i32, CmdError> {
    if args.n != 2 {
        return Err(CmdError::Usage("legendre command operates on n = 2 grids".into()));
    }
    let r_needed = args.l * std::f64::consts::SQRT_2 * 1.01;
    let params = RadialParams::new(2, args.k, args.a, r_needed, args.tol)
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    let prof = limit_profile(&params)?;
    let g = GraphFunction::from_radial(&prof, args.l, args.nx, 0.0, 1e-9)?;
    let d = legendre_transform(&g, args.tau, args.nx_dual)?;
    let res = dual_residual(&d, args.k, args.a)?;

    let dir = resolve_out_dir(&args.out_dir);
    fs::create_dir_all(&dir)?;
    let dual_path = dir.join("dual.csv");
    let mut buf = Vec::new();
    write_dual_csv(&d, &mut buf)?;
    fs::write(&dual_path, buf)?;
    let summary = LegendreSummary {
        n: args.n,
        k: args.k,
        a: args.a,
        residual_sup: res.sup,
        resolved_fraction: res.resolved_fraction,
        evaluated_nodes: res.evaluated,
    };
    let summary_path = dir.join("summary.json");
    write_json(&summary_path, &summary)?;

    let mut manifest = RunManifest::new("legendre");
    for (key, value) in [
        ("n", args.n.to_string()),
        ("k", args.k.to_string()),
        ("a", args.a.to_string()),
        ("L", args.l.to_string()),
        ("nx", args.nx.to_string()),
        ("tau", args.tau.to_string()),
        ("nx_dual", args.nx_dual.to_string()),
    ] {
        manifest.set_param(key, value, "cli");
    }
    manifest.add_output(&dual_path)?;
    manifest.add_output(&summary_path)?;
    manifest.write(&dir)?;

    println!(
        "legendre (n=2, k={}, a={}): dual residual {:.3e} over {} nodes ({:.1}% resolved)",
        args.k,
        args.a,
        res.sup,
        res.evaluated,
        100.0 * res.resolved_fraction
    );
    Ok(0)
}

// --------------------------------------------------------------------- check

pub fn cmd_check(suite: &str, seed: u64, out_dir: &Path) -> Result<i32, CmdError> {
    let report = crate::checks::run_suite(suite, seed)
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    let dir = resolve_out_dir(out_dir);
    fs::create_dir_all(&dir)?;
    let report_path = dir.join("report.json");
    write_json(&report_path, &report)?;

    let mut manifest = RunManifest::new("check");
    manifest.set_param("suite", suite, "cli");
    manifest.seed = Some(seed);
    manifest.add_output(&report_path)?;
    manifest.write(&dir)?;

    for c in &report.checks {
        println!(
            "[{}] {} — {}",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    println!(
        "suite '{}': {}/{} passed",
        suite,
        report.checks.len() - report.failures,
        report.checks.len()
    );
    Ok(report.failures.min(100) as i32)
}

// -------------------------------------------------------------------- replay

pub fn cmd_replay(manifest_path: &Path, out_dir: &Path) -> Result<i32, CmdError> {
    let text = fs::read_to_string(manifest_path)?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CmdError::Usage(format!("bad manifest: {e}")))?;
    let get = |key: &str| -> Result<String, CmdError> {
        manifest
            .params
            .get(key)
            .map(|p| p.value.clone())
            .ok_or_else(|| CmdError::Usage(format!("manifest lacks param '{key}'")))
    };
    let parse =
        |key: &str| -> Result<f64, CmdError> { get(key)?.parse().map_err(|e| CmdError::Usage(format!("param {key}: {e}"))) };

    let dir = resolve_out_dir(out_dir);
    let code = match manifest.command.as_str() {
        "translator" => cmd_translator(&TranslatorArgs {
            n: parse("n")? as usize,
            k: parse("k")? as usize,
            a: parse("a")?,
            r_max: parse("r_max")?,
            tol: parse("tol")?,
            samples: parse("samples")? as usize,
            out_dir: dir.clone(),
        })?,
        "flow" => {
            let cli = FlowCliOverrides {
                n: Some(parse("n")? as usize),
                k: Some(parse("k")? as usize),
                a: Some(parse("a")?),
                l: Some(parse("L")?),
                h: Some(parse("h")?),
                dt_safety: Some(parse("dt_safety")?),
                t_end: Some(parse("t_end")?),
                bc_mode: Some(get("bc_mode")?),
                tol_converged: Some(parse("tol_converged")?),
                mode: Some(get("mode")?),
                bump: Some(parse("bump")?),
                profile_tol: Some(parse("profile_tol")?),
                admissible_c: Some(parse("admissible_c")?),
                phi_csv: None,
                m_offset: None,
            };
            cmd_flow(None, &cli, &dir)?
        }
        other => {
            return Err(CmdError::Usage(format!(
                "replay supports translator/flow manifests, not '{other}'"
            )))
        }
    };
    // verify byte-identical artifacts
    let mut mismatches = Vec::new();
    for (name, want) in &manifest.outputs {
        let got = crate::manifest::sha256_file(&dir.join(name))?;
        if &got != want {
            mismatches.push(name.clone());
        }
    }
    if !mismatches.is_empty() {
        return Err(CmdError::Numerical(format!(
            "replay outputs differ from manifest: {mismatches:?}"
        )));
    }
    println!("replay reproduced {} artifacts byte-identically", manifest.outputs.len());
    Ok(code)
}

//! Runtime invariant suites for `sigmaflow check`: fast, deterministic
//! (seeded) re-checks of the library's mathematical contracts, one JSON
//! report per run, exit code = number of failures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sigmaflow_core::barriers::{BarrierPair, BarrierSide, SphereFunction};
use sigmaflow_core::flow::{
    check_initial_admissible, run_normalized, sandwich_check, step, FlowConfig, FlowState,
};
use sigmaflow_core::geometry::{curvature_field, principal_curvatures_nd, GraphFunction};
use sigmaflow_core::legendre::{dual_residual, legendre_transform, young_violation, DualFunction};
use sigmaflow_core::radial::{
    epsilon_crosscheck, limit_profile, scaled_profile, verify_residual, RadialParams,
};
use sigmaflow_core::symfunc::{
    jacobi_eigen, normalized_root, sigma_k, sigma_k_newton, sigma_k_subsets, CurvatureVector,
};
use sigmaflow_core::CoreError;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub failures: usize,
}

pub const SUITES: &[&str] = &[
    "symfunc", "radial", "geometry", "barriers", "flow", "legendre", "all",
];

pub fn run_suite(suite: &str, seed: u64) -> Result<CheckReport, CoreError> {
    let mut checks = Vec::new();
    let run_one = |checks: &mut Vec<CheckResult>, name: &str, outcome: Result<String, String>| {
        match outcome {
            Ok(detail) => checks.push(CheckResult {
                name: name.to_string(),
                passed: true,
                detail,
            }),
            Err(detail) => checks.push(CheckResult {
                name: name.to_string(),
                passed: false,
                detail,
            }),
        }
    };

    let wants = |s: &str| suite == "all" || suite == s;
    if !SUITES.contains(&suite) {
        return Err(CoreError::Parameter(format!("unknown suite '{suite}'")));
    }

    if wants("symfunc") {
        run_one(&mut checks, "symfunc/paths_agree", symfunc_paths_agree(seed));
        run_one(&mut checks, "symfunc/homogeneity", symfunc_homogeneity(seed));
        run_one(&mut checks, "symfunc/maclaurin", symfunc_maclaurin(seed));
        run_one(&mut checks, "symfunc/eigen_reconstruction", eigen_reconstruction(seed));
    }
    if wants("radial") {
        run_one(&mut checks, "radial/gaussian_closed_form", radial_gaussian());
        run_one(&mut checks, "radial/tanh_closed_form", radial_tanh());
        run_one(&mut checks, "radial/decay_bounds_3_1", radial_bounds());
        run_one(&mut checks, "radial/asymptotic_constants", radial_constants());
        run_one(&mut checks, "radial/epsilon_crosscheck", radial_epsilon());
        run_one(&mut checks, "radial/scaled_residual", radial_scaled(seed));
    }
    if wants("geometry") {
        run_one(&mut checks, "geometry/hyperboloid_unit_curvature", geometry_hyperboloid(seed));
        run_one(&mut checks, "geometry/support_identity", geometry_support());
        run_one(&mut checks, "geometry/translator_residual_grid", geometry_residual());
    }
    if wants("barriers") {
        run_one(&mut checks, "barriers/collapse_to_translator", barriers_collapse());
        run_one(&mut checks, "barriers/constant_phi_formula", barriers_constant());
        run_one(&mut checks, "barriers/ordering_wavy", barriers_ordering());
    }
    if wants("legendre") {
        run_one(&mut checks, "legendre/self_dual_quadratic", legendre_quadratic());
        run_one(&mut checks, "legendre/young_inequality", legendre_young());
        run_one(&mut checks, "legendre/negative_control", legendre_negative());
    }
    if wants("flow") {
        run_one(&mut checks, "flow/fixed_point_drift", flow_fixed_point());
        run_one(&mut checks, "flow/bump_monotone_decay", flow_bump());
        run_one(&mut checks, "flow/sandwich_negative_control", flow_sandwich_control());
        run_one(&mut checks, "flow/admissibility", flow_admissibility());
    }

    let failures = checks.iter().filter(|c| !c.passed).count();
    Ok(CheckReport {
        suite: suite.to_string(),
        seed,
        checks,
        failures,
    })
}

fn gate(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_kappa(rng: &mut ChaCha8Rng, n: usize, positive: bool) -> CurvatureVector {
    let v: Vec<f64> = (0..n)
        .map(|_| {
            let x: f64 = rng.gen_range(0.02..3.0);
            if positive || rng.gen_bool(0.7) {
                x
            } else {
                -x
            }
        })
        .collect();
    CurvatureVector::new(v).unwrap()
}

fn symfunc_paths_agree(seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..=6);
        let kappa = random_kappa(&mut rng, n, false);
        for k in 1..=n {
            let a = sigma_k(&kappa, k).map_err(|e| e.to_string())?;
            let b = sigma_k_newton(&kappa, k).map_err(|e| e.to_string())?;
            let c = sigma_k_subsets(&kappa, k).map_err(|e| e.to_string())?;
            let scale = a.abs().max(1.0);
            worst = worst.max((a - b).abs() / scale).max((a - c).abs() / scale);
        }
    }
    gate(worst <= 1e-12, format!("max relative spread {worst:.3e}"))
}

fn symfunc_homogeneity(seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..=6);
        let kappa = random_kappa(&mut rng, n, false);
        let t: f64 = rng.gen_range(0.1..4.0);
        let scaled =
            CurvatureVector::new(kappa.as_slice().iter().map(|x| t * x).collect()).unwrap();
        for k in 1..=n {
            let a = sigma_k(&scaled, k).unwrap();
            let b = t.powi(k as i32) * sigma_k(&kappa, k).unwrap();
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    gate(worst <= 1e-12, format!("max homogeneity defect {worst:.3e}"))
}

fn symfunc_maclaurin(seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0a11);
    for _ in 0..200 {
        let n = rng.gen_range(2..=6);
        let kappa = random_kappa(&mut rng, n, true);
        let mean = normalized_root(&kappa, 1).unwrap();
        for k in 2..=n {
            let root = normalized_root(&kappa, k).unwrap();
            if root > mean * (1.0 + 1e-13) {
                return Err(format!("Maclaurin violated: k={k}, {root} > {mean}"));
            }
        }
    }
    Ok("Maclaurin chain holds on 200 random positive vectors".into())
}

fn eigen_reconstruction(seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe1e);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(2..=5);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.gen_range(-2.0..2.0);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let (vals, q) = jacobi_eigen(&a, n).map_err(|e| e.to_string())?;
        let scale = a.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for i in 0..n {
            for j in 0..n {
                let mut rec = 0.0;
                for l in 0..n {
                    rec += q[i * n + l] * vals[l] * q[j * n + l];
                }
                worst = worst.max((rec - a[i * n + j]).abs() / scale);
            }
        }
    }
    gate(worst <= 1e-10, format!("max reconstruction defect {worst:.3e}"))
}

fn radial_gaussian() -> Result<String, String> {
    let prof = limit_profile(&RadialParams::new(2, 2, 1.0, 4.0, 1e-10).unwrap())
        .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (j, &r) in prof.r.iter().enumerate() {
        worst = worst.max((prof.zeta[j] - (-r * r).exp()).abs());
    }
    gate(worst <= 1e-8, format!("max |z - (1-e^(-r^2))| = {worst:.3e}"))
}

fn radial_tanh() -> Result<String, String> {
    let prof = limit_profile(&RadialParams::new(1, 1, 1.0, 4.0, 1e-10).unwrap())
        .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (j, &r) in prof.r.iter().enumerate() {
        worst = worst.max((prof.y[j] - r.tanh()).abs());
    }
    gate(worst <= 1e-8, format!("max |y - tanh r| = {worst:.3e}"))
}

fn radial_bounds() -> Result<String, String> {
    let prof = limit_profile(&RadialParams::new(3, 1, 1.0, 4.0, 1e-10).unwrap())
        .map_err(|e| e.to_string())?;
    for (j, &r) in prof.r.iter().enumerate() {
        if r < 0.05 {
            continue;
        }
        let lower = (-6.0 * r).exp() - 1e-6;
        let upper = (-r / 3.0).exp() + 1e-6;
        if prof.zeta[j] < lower || prof.zeta[j] > upper {
            return Err(format!("bound violated at r = {r}"));
        }
    }
    Ok("two-sided decay bounds hold for (3,1)".into())
}

fn radial_constants() -> Result<String, String> {
    let p22 = limit_profile(&RadialParams::new(2, 2, 1.0, 4.0, 1e-10).unwrap())
        .map_err(|e| e.to_string())?;
    let p11 = limit_profile(&RadialParams::new(1, 1, 1.0, 6.0, 1e-10).unwrap())
        .map_err(|e| e.to_string())?;
    let ok = (p22.c_asym - 0.5).abs() < 1e-3 && (p11.c_asym - 2.0).abs() < 2e-3;
    gate(
        ok,
        format!("C_asym(2,2) = {:.6}, C_asym(1,1) = {:.6}", p22.c_asym, p11.c_asym),
    )
}

fn radial_epsilon() -> Result<String, String> {
    let dev = epsilon_crosscheck(&RadialParams::new(2, 2, 1.0, 4.0, 1e-8).unwrap(), 1e-2)
        .map_err(|e| e.to_string())?;
    gate(dev < 3e-7, format!("route disagreement {dev:.3e}"))
}

fn radial_scaled(seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ca1ed);
    let base = limit_profile(&RadialParams::new(3, 2, 1.0, 6.0, 1e-9).unwrap())
        .map_err(|e| e.to_string())?
        .normalized_zero_offset();
    let a: f64 = rng.gen_range(0.5..2.0);
    let scaled = scaled_profile(&base, a).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for i in 1..=20 {
        let r = 0.1 + (i as f64) * 0.08;
        worst = worst.max(verify_residual(&scaled, r).map_err(|e| e.to_string())?);
    }
    gate(worst <= 1e-7, format!("a = {a:.4}: max residual {worst:.3e}"))
}

fn geometry_hyperboloid(seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4b);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..=4);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let u = (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let du: Vec<f64> = x.iter().map(|v| v / u).collect();
        let mut d2u = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d2u[i * n + j] = (if i == j { 1.0 } else { 0.0 }) / u - x[i] * x[j] / (u * u * u);
            }
        }
        let kappa = principal_curvatures_nd(&du, &d2u).map_err(|e| e.to_string())?;
        for &k in kappa.as_slice() {
            worst = worst.max((k - 1.0).abs());
        }
    }
    gate(worst <= 1e-6, format!("max |kappa - 1| = {worst:.3e}"))
}

fn geometry_support() -> Result<String, String> {
    let g = GraphFunction::from_fn(1.0, 33, 1e-6, |x, y| (1.0 + x * x + y * y).sqrt())
        .map_err(|e| e.to_string())?;
    let field = curvature_field(&g, 2).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (i, j) in field.stats_nodes(2) {
        let c = i + field.nx * j;
        worst = worst.max((field.v[c] * field.w[c] - 1.0).abs());
    }
    gate(worst <= 1e-14, format!("max |v w - 1| = {worst:.3e}"))
}

fn geometry_residual() -> Result<String, String> {
    let prof = limit_profile(&RadialParams::new(2, 2, 1.0, 4.0, 1e-10).unwrap())
        .map_err(|e| e.to_string())?;
    let g = GraphFunction::from_radial(&prof, 1.25, 161, 0.0, 1e-6).map_err(|e| e.to_string())?;
    let res = sigmaflow_core::geometry::translator_residual(&g, 2, 1.0).map_err(|e| e.to_string())?;
    gate(res <= 5e-3, format!("grid residual at h=1/64: {res:.3e}"))
}

fn barrier_base() -> Result<sigmaflow_core::radial::RadialProfile, String> {
    Ok(
        limit_profile(&RadialParams::new(2, 2, 1.0, 9.0, 1e-9).unwrap())
            .map_err(|e| e.to_string())?
            .normalized_zero_offset(),
    )
}

fn barriers_collapse() -> Result<String, String> {
    let base = barrier_base()?;
    let phi = SphereFunction::from_fn(32, |_| 0.0).map_err(|e| e.to_string())?;
    let pair = BarrierPair::new(&base, 1.0, phi, Some(0.0)).map_err(|e| e.to_string())?;
    let interp = base.interpolant().map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for &x in &[[0.5f64, 0.0], [1.0, 1.0], [3.0, -2.0]] {
        let want = interp.u.eval(x[0].hypot(x[1])).map_err(|e| e.to_string())?;
        let q1 = pair.eval(x, BarrierSide::Sub).map_err(|e| e.to_string())?;
        let q2 = pair.eval(x, BarrierSide::Super).map_err(|e| e.to_string())?;
        worst = worst.max((q1 - want).abs()).max((q2 - want).abs());
    }
    gate(worst <= 1e-10, format!("collapse defect {worst:.3e}"))
}

fn barriers_constant() -> Result<String, String> {
    let base = barrier_base()?;
    let phi = SphereFunction::from_fn(32, |_| 0.7).map_err(|e| e.to_string())?;
    let pair = BarrierPair::new(&base, 1.0, phi, Some(0.25)).map_err(|e| e.to_string())?;
    let interp = pair.translator.interpolant().map_err(|e| e.to_string())?;
    let x = [2.0f64, 1.0];
    let r = x[0].hypot(x[1]);
    let q1 = pair.eval(x, BarrierSide::Sub).map_err(|e| e.to_string())?;
    let q2 = pair.eval(x, BarrierSide::Super).map_err(|e| e.to_string())?;
    let want1 = 0.7 - 0.5 + interp.u.eval(r + 0.5).map_err(|e| e.to_string())?;
    let want2 = 0.7 + 0.5 + interp.u.eval(r - 0.5).map_err(|e| e.to_string())?;
    let worst = (q1 - want1).abs().max((q2 - want2).abs());
    gate(worst <= 1e-8, format!("closed-envelope defect {worst:.3e}"))
}

fn barriers_ordering() -> Result<String, String> {
    let base = barrier_base()?;
    let phi = SphereFunction::from_fn(64, |t| 0.3 * (2.0 * t).sin()).map_err(|e| e.to_string())?;
    let pair = BarrierPair::new(&base, 1.0, phi, None).map_err(|e| e.to_string())?;
    let (q1, q2) = pair.grid(5.0, 41).map_err(|e| e.to_string())?;
    let worst = q1
        .iter()
        .zip(&q2)
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max);
    gate(worst <= 1e-12, format!("max q1 - q2 = {worst:.3e}"))
}

fn legendre_quadratic() -> Result<String, String> {
    let g = GraphFunction::from_fn(0.96, 49, 0.02, |x, y| 0.5 * (x * x + y * y))
        .map_err(|e| e.to_string())?;
    let d = legendre_transform(&g, 0.48, 25).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for j in 0..d.nx {
        for i in 0..d.nx {
            let c = d.idx(i, j);
            if d.resolved[c] {
                let xi = d.xi(i, j);
                worst = worst.max((d.ustar[c] - 0.5 * (xi[0] * xi[0] + xi[1] * xi[1])).abs());
            }
        }
    }
    gate(worst <= 1e-12, format!("self-dual defect {worst:.3e}"))
}

fn legendre_young() -> Result<String, String> {
    let g = GraphFunction::from_fn(0.8, 49, 0.05, |x, y| {
        0.45 * (x * x + y * y) + 0.05 * x * y
    })
    .map_err(|e| e.to_string())?;
    let d = legendre_transform(&g, 0.5, 31).map_err(|e| e.to_string())?;
    let v = young_violation(&g, &d);
    gate(v <= 1e-12, format!("max Young violation {v:.3e}"))
}

fn legendre_negative() -> Result<String, String> {
    let d = DualFunction::from_fn(0.7, 41, |x, y| -(1.0 - x * x - y * y).sqrt())
        .map_err(|e| e.to_string())?;
    let res = dual_residual(&d, 2, 1.0).map_err(|e| e.to_string())?;
    gate(
        res.sup > 0.2,
        format!("hyperboloid dual residual {:.3e} (expected gross)", res.sup),
    )
}

fn flow_profile() -> Result<sigmaflow_core::radial::RadialProfile, String> {
    limit_profile(&RadialParams::new(2, 1, 1.0, 4.0, 1e-10).unwrap()).map_err(|e| e.to_string())
}

fn flow_fixed_point() -> Result<String, String> {
    let prof = flow_profile()?;
    let mut state = FlowState::new_radial(&prof, 4097, None).map_err(|e| e.to_string())?;
    let cfg = FlowConfig {
        t_end: 0.5,
        tol_converged: 1e-10,
        ..Default::default()
    };
    while state.t < 0.5 - 1e-9 {
        step(&mut state, &cfg).map_err(|e| e.to_string())?;
    }
    let drift = state.sup_distance();
    gate(drift <= 5e-6, format!("half-unit-time drift {drift:.3e}"))
}

fn flow_bump() -> Result<String, String> {
    let prof = flow_profile()?;
    let interp = prof.interpolant().map_err(|e| e.to_string())?;
    let u0 = move |r: f64| interp.u.eval(r.min(4.0)).unwrap() + 0.15 * (-r * r).exp();
    let mut state = FlowState::new_radial(&prof, 1025, Some(&u0)).map_err(|e| e.to_string())?;
    let cfg = FlowConfig {
        t_end: 20.0,
        tol_converged: 2e-3,
        ..Default::default()
    };
    let out = run_normalized(&mut state, &cfg, None).map_err(|e| e.to_string())?;
    gate(
        out.converged && out.monotone,
        format!(
            "converged = {}, monotone = {}, final dist {:.3e}",
            out.converged, out.monotone, out.final_sup_dist
        ),
    )
}

fn flow_sandwich_control() -> Result<String, String> {
    let prof = flow_profile()?;
    let mut state = FlowState::new_radial(&prof, 513, None).map_err(|e| e.to_string())?;
    let lower = state.target.clone();
    let upper = state.target.clone();
    state.u[200] += 1e-2;
    match sandwich_check(&state, &lower, &upper) {
        Err(CoreError::Comparison(_)) => Ok("injected 1e-2 error detected".into()),
        other => Err(format!("negative control missed: {other:?}")),
    }
}

fn flow_admissibility() -> Result<String, String> {
    let prof = flow_profile()?;
    let state = FlowState::new_radial(&prof, 2049, None).map_err(|e| e.to_string())?;
    let rep = check_initial_admissible(&state, 2.0 + 1e-9).map_err(|e| e.to_string())?;
    let want_ratio = 2.0; // k = 1: σ_1/v = n·a
    let ok = rep.admissible && (rep.max_sigma_k_over_v - want_ratio).abs() < 1e-4;
    gate(
        ok,
        format!(
            "ratio {:.6} (want {want_ratio}), admissible = {}",
            rep.max_sigma_k_over_v, rep.admissible
        ),
    )
}

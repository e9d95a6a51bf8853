//! Rotationally symmetric translators.
//!
//! With u(x) = u(r), y = u', z = y^k, the translator equation reduces to
//!
//! ```text
//!     dz/dr = (n r^{k-1} - (n-k) z/r) (1 - z^{2/k}),   z(0) = 0,
//! ```
//!
//! singular at r = 0 for k < n. Two independent routes to the solution are
//! implemented: direct integration seeded with the vertex series
//! z = r^k (1 - k r²/(n+2) + ...), and the regularized family z_ε with
//! z_ε(0) = ε^k extrapolated to ε → 0.
//!
//! The solution approaches z = 1 exponentially; everything is integrated in
//! ζ = 1 - z alongside z itself so that both ends of the range keep full
//! relative accuracy. The asymptotic behavior is tracked through
//!
//! ```text
//!     y(r) = 1 - C(r) r^{2(n-k)/k} e^{-(2n/k²) r^k},   C(r) -> C_asym > 0,
//!     u(r) = r + c0 + O(r^{(2n-k²-k)/k} e^{-(2n/k²) r^k}).
//! ```

use crate::error::{CoreError, Result};
use crate::interp::UniformCubic;
use crate::ode::Dopri5;
use crate::symfunc::{self, CurvatureVector};
use serde::Serialize;
use std::io::Write;

/// Exponent budget before 1 - z underflows in double precision.
const MAX_DECAY_EXPONENT: f64 = 680.0;

#[derive(Debug, Clone)]
pub struct RadialParams {
    /// Graph dimension n ≥ 1.
    pub n: usize,
    /// Hessian order 1 ≤ k ≤ n.
    pub k: usize,
    /// Translation velocity a > 0.
    pub a: f64,
    /// Truncation radius of the stored profile.
    pub r_max: f64,
    /// ODE tolerance (relative), 0 < tol < 1e-3.
    pub tol: f64,
    /// Number of uniformly spaced stored samples.
    pub samples: usize,
}

impl RadialParams {
    pub fn new(n: usize, k: usize, a: f64, r_max: f64, tol: f64) -> Result<Self> {
        let p = Self {
            n,
            k,
            a,
            r_max,
            tol,
            samples: 2048,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_samples(mut self, samples: usize) -> Result<Self> {
        self.samples = samples;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.k < 1 || self.k > self.n {
            return Err(CoreError::Parameter(format!(
                "need 1 <= k <= n, got n = {}, k = {}",
                self.n, self.k
            )));
        }
        if !(self.a > 0.0) {
            return Err(CoreError::Parameter(format!(
                "velocity a = {} must be positive",
                self.a
            )));
        }
        if !(self.r_max > 0.0) {
            return Err(CoreError::Parameter(format!(
                "r_max = {} must be positive",
                self.r_max
            )));
        }
        if !(self.tol > 0.0 && self.tol < 1e-3) {
            return Err(CoreError::Parameter(format!(
                "tol = {} must lie in (0, 1e-3)",
                self.tol
            )));
        }
        if self.samples < 16 {
            return Err(CoreError::Parameter("need at least 16 samples".into()));
        }
        let rho_max = self.a * self.r_max;
        let decay = 2.0 * self.n as f64 / (self.k * self.k) as f64 * rho_max.powi(self.k as i32);
        if decay > MAX_DECAY_EXPONENT {
            return Err(CoreError::Parameter(format!(
                "a*r_max = {rho_max} too large: 1 - z would underflow \
                 ((2n/k²)(a r_max)^k = {decay:.1} > {MAX_DECAY_EXPONENT})"
            )));
        }
        Ok(())
    }
}

/// Sampled radial translator for parameters (n, k, a), on a uniform grid in
/// r ∈ [0, r_max]. Heights are normalized to u(0) = 0 unless shifted.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub params: RadialParams,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    /// 1 - z, kept separately for relative accuracy in the tail.
    pub zeta: Vec<f64>,
    /// Slope y = u' = z^{1/k} ∈ [0, 1).
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    /// C(r) = (1 - y) ρ^{-2(n-k)/k} e^{(2n/k²) ρ^k}, ρ = a·r (0 at r = 0).
    pub c_of_r: Vec<f64>,
    /// Height offset lim (u(r) - r).
    pub c0: f64,
    /// Plateau value of C(r).
    pub c_asym: f64,
    /// Max relative deviation of C over the plateau window.
    pub plateau_error: f64,
    pub plateau_ok: bool,
}

/// Summary emitted next to profile CSVs.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileSummary {
    pub n: usize,
    pub k: usize,
    pub a: f64,
    pub c0: f64,
    #[serde(rename = "C_asym")]
    pub c_asym: f64,
    pub plateau_error: f64,
    pub tol: f64,
}

/// Result of the plateau extraction for C(r).
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticConstant {
    pub c_asym: f64,
    pub plateau_error: f64,
    pub plateau_ok: bool,
}

/// Stable 1 - z^{2/k} given both z and ζ = 1 - z.
fn one_minus_z_pow(z: f64, zeta: f64, two_over_k: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    if z < 0.5 {
        1.0 - z.powf(two_over_k)
    } else {
        -((two_over_k) * (-zeta).ln_1p()).exp_m1()
    }
}

/// Stable y = z^{1/k} given both representations.
fn slope_from(z: f64, zeta: f64, k: usize) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z < 0.5 {
        z.powf(1.0 / k as f64)
    } else {
        ((-zeta).ln_1p() / k as f64).exp()
    }
}

/// Stable 1 - y = 1 - z^{1/k}.
fn one_minus_slope(z: f64, zeta: f64, k: usize) -> f64 {
    if z <= 0.0 {
        1.0
    } else {
        -((-zeta).ln_1p() / k as f64).exp_m1()
    }
}

/// Right-hand side of the regularized problem
/// (n (r+ε)^{k-1} - (n-k) z/(r+ε)) (1 - z^{2/k}).
pub fn rhs_regularized(r: f64, z: f64, n: usize, k: usize, eps: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&z) {
        return Err(CoreError::Domain(format!("z = {z} outside [0, 1)")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CoreError::Parameter(format!("eps = {eps} outside (0, 1)")));
    }
    if r < 0.0 {
        return Err(CoreError::Parameter(format!("r = {r} negative")));
    }
    let rho = r + eps;
    let nf = n as f64;
    let kf = k as f64;
    Ok((nf * rho.powi(k as i32 - 1) - (nf - kf) * z / rho)
        * one_minus_z_pow(z, 1.0 - z, 2.0 / kf))
}

/// RHS of the limit equation at ρ > 0, in both variables.
fn rhs_limit(rho: f64, z: f64, zeta: f64, n: usize, k: usize) -> f64 {
    let nf = n as f64;
    let kf = k as f64;
    (nf * rho.powi(k as i32 - 1) - (nf - kf) * z / rho)
        * one_minus_z_pow(z, zeta, 2.0 / kf)
}

/// One solution of the regularized family, sampled on the stored grid of the
/// unit-velocity radial variable.
#[derive(Debug, Clone)]
pub struct RegularizedSamples {
    pub eps: f64,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
}

/// Integrate the regularized problem z' = rhs_regularized, z(0) = ε^k, up to
/// the unit-velocity range a·r_max.
pub fn integrate_regularized(params: &RadialParams, eps: f64) -> Result<RegularizedSamples> {
    params.validate()?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CoreError::Parameter(format!("eps = {eps} outside (0, 1)")));
    }
    let (n, k) = (params.n, params.k);
    let rho_max = params.a * params.r_max;
    let solver = Dopri5::new(rel_tol(params.tol), 1e-280);
    // state [z, ζ]; both evolved so each end of the range keeps accuracy
    let y0 = [eps.powi(k as i32), 1.0 - eps.powi(k as i32)];
    let sol = solver.integrate(
        |r, s: &[f64; 2]| {
            let z = s[0].clamp(0.0, 1.0);
            let zeta = s[1].clamp(0.0, 1.0);
            let nf = n as f64;
            let kf = k as f64;
            let rho = r + eps;
            let f = (nf * rho.powi(k as i32 - 1) - (nf - kf) * z / rho)
                * one_minus_z_pow(z, zeta, 2.0 / kf);
            Ok([f, -f])
        },
        0.0,
        y0,
        rho_max,
    )?;
    let m = params.samples;
    let mut r = Vec::with_capacity(m);
    let mut z = Vec::with_capacity(m);
    for j in 0..m {
        let rj = rho_max * j as f64 / (m - 1) as f64;
        let s = sol.sample(rj);
        r.push(rj);
        z.push(s[0]);
    }
    // post-conditions of the regularized family: ε^k ≤ z < 1, z < (r+ε)^k,
    // strictly increasing
    let eps_k = eps.powi(k as i32);
    for j in 0..m {
        if z[j] < eps_k - 10.0 * params.tol || z[j] >= 1.0 {
            return Err(CoreError::Convergence(format!(
                "regularized solution left [ε^k, 1) at r = {}",
                r[j]
            )));
        }
        if z[j] > (r[j] + eps).powi(k as i32) + 10.0 * params.tol {
            return Err(CoreError::Convergence(format!(
                "regularized bound z < (r+ε)^k violated at r = {}",
                r[j]
            )));
        }
        if j > 0 && z[j] <= z[j - 1] - 1e-15 {
            return Err(CoreError::Convergence(format!(
                "regularized solution not increasing at r = {}",
                r[j]
            )));
        }
    }
    Ok(RegularizedSamples { eps, r, z })
}

fn rel_tol(tol: f64) -> f64 {
    (0.05 * tol).clamp(1e-13, 1e-4)
}

/// Construct the ε → 0 translator profile by direct integration from the
/// vertex series. All profile invariants are enforced before returning.
pub fn limit_profile(params: &RadialParams) -> Result<RadialProfile> {
    params.validate()?;
    let (n, k) = (params.n, params.k);
    let (nf, kf) = (n as f64, k as f64);
    let a = params.a;
    let rho_max = a * params.r_max;

    // vertex series z = ρ^k (1 - k ρ²/(n+2)), u = ρ²/2 - ρ⁴/(4(n+2))
    let r0 = params.tol.powf(1.0 / kf).max(1e-4).min(0.25 * rho_max);
    let z0 = r0.powi(k as i32) * (1.0 - kf * r0 * r0 / (nf + 2.0));
    let u0 = 0.5 * r0 * r0 - r0.powi(4) / (4.0 * (nf + 2.0));

    let solver = Dopri5::new(rel_tol(params.tol), 1e-280);
    // state [z, ζ, u1] in the unit-velocity variable ρ
    let sol = solver.integrate(
        |rho, s: &[f64; 3]| {
            let z = s[0].clamp(0.0, 1.0);
            let zeta = s[1].clamp(0.0, 1.0);
            let f = rhs_limit(rho, z, zeta, n, k);
            Ok([f, -f, slope_from(z, zeta, k)])
        },
        r0,
        [z0, 1.0 - z0, u0],
        rho_max,
    )?;

    let m = params.samples;
    let mut prof = RadialProfile {
        params: params.clone(),
        r: Vec::with_capacity(m),
        z: Vec::with_capacity(m),
        zeta: Vec::with_capacity(m),
        y: Vec::with_capacity(m),
        u: Vec::with_capacity(m),
        c_of_r: Vec::with_capacity(m),
        c0: 0.0,
        c_asym: 0.0,
        plateau_error: 0.0,
        plateau_ok: false,
    };

    for j in 0..m {
        let rj = params.r_max * j as f64 / (m - 1) as f64;
        let rho = a * rj;
        let (z, zeta, u1) = if rho <= r0 {
            let z = rho.powi(k as i32) * (1.0 - kf * rho * rho / (nf + 2.0));
            let u1 = 0.5 * rho * rho - rho.powi(4) / (4.0 * (nf + 2.0));
            (z, 1.0 - z, u1)
        } else {
            let s = sol.sample(rho);
            (s[0], s[1], s[2])
        };
        prof.r.push(rj);
        prof.z.push(z);
        prof.zeta.push(zeta);
        prof.y.push(slope_from(z, zeta, k));
        prof.u.push(u1 / a);
        prof.c_of_r.push(if rho > 0.0 {
            let one_minus_y = one_minus_slope(z, zeta, k);
            (one_minus_y.ln() + 2.0 * nf / (kf * kf) * rho.powi(k as i32)
                - 2.0 * (nf - kf) / kf * rho.ln())
            .exp()
        } else {
            0.0
        });
    }

    enforce_profile_invariants(&prof)?;

    let (c0, _amp) = fit_height_tail(&prof)?;
    prof.c0 = c0;
    let asym = asymptotic_constant_of(&prof)?;
    prof.c_asym = asym.c_asym;
    prof.plateau_error = asym.plateau_error;
    prof.plateau_ok = asym.plateau_ok;
    Ok(prof)
}

/// Pointwise invariants of a constructed profile: z(0) = 0, z strictly
/// increasing (checked on ζ), 0 < z < 1 for r > 0, z ≤ ρ^k, and the
/// two-sided decay bounds e^{-(2n/k)ρ^k} ≤ 1 - z ≤ e^{-ρ^k/n} with
/// additive slack 1e-6.
pub fn enforce_profile_invariants(prof: &RadialProfile) -> Result<()> {
    let p = &prof.params;
    let (nf, kf) = (p.n as f64, p.k as f64);
    if prof.z[0] != 0.0 {
        return Err(CoreError::Convergence(format!(
            "z(0) = {} != 0",
            prof.z[0]
        )));
    }
    for j in 1..prof.r.len() {
        let rho = p.a * prof.r[j];
        let (z, zeta) = (prof.z[j], prof.zeta[j]);
        if !(z > 0.0 && zeta > 0.0) {
            return Err(CoreError::Convergence(format!(
                "z left (0,1) at r = {}: z = {z}, 1-z = {zeta}",
                prof.r[j]
            )));
        }
        if zeta >= prof.zeta[j - 1] {
            return Err(CoreError::Convergence(format!(
                "z not strictly increasing at r = {}",
                prof.r[j]
            )));
        }
        if z > rho.powi(p.k as i32) * (1.0 + 1e-10) + 1e-14 {
            return Err(CoreError::Convergence(format!(
                "z = {z} exceeds ρ^k = {} at r = {}",
                rho.powi(p.k as i32),
                prof.r[j]
            )));
        }
        let lower = (-2.0 * nf / kf * rho.powi(p.k as i32)).exp();
        let upper = (-rho.powi(p.k as i32) / nf).exp();
        if zeta < lower - 1e-6 || zeta > upper + 1e-6 {
            return Err(CoreError::Convergence(format!(
                "two-sided bound on 1-z violated at r = {}: {lower:.3e} <= {zeta:.3e} <= {upper:.3e}",
                prof.r[j]
            )));
        }
    }
    Ok(())
}

/// Least-squares tail fit u(r) - r = c0 + A g(ρ) + B g(ρ)/ρ^k over the last
/// 20% of the samples, with g the expansion shape ρ^{(2n-k²-k)/k} e^{-(2n/k²)ρ^k}.
fn fit_height_tail(prof: &RadialProfile) -> Result<(f64, f64)> {
    let p = &prof.params;
    let m = prof.r.len();
    let start = m - (m / 5).max(4);
    let mut rows: Vec<[f64; 3]> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for j in start..m {
        let rho = p.a * prof.r[j];
        if rho <= 0.0 {
            continue;
        }
        let g = remainder_shape(p.n, p.k, rho);
        rows.push([1.0, g, g / rho.powi(p.k as i32)]);
        rhs.push(prof.u[j] - prof.r[j]);
    }
    // normalize the g columns so the normal equations stay well-conditioned
    let g_scale = rows.iter().map(|r| r[1].abs()).fold(0.0f64, f64::max);
    if g_scale < 1e-280 {
        // remainder below representable scale: c0 is just the tail mean
        let c0 = rhs.iter().sum::<f64>() / rhs.len() as f64;
        return Ok((c0, 0.0));
    }
    let g2_scale = rows.iter().map(|r| r[2].abs()).fold(0.0f64, f64::max);
    for row in rows.iter_mut() {
        row[1] /= g_scale;
        row[2] /= g2_scale;
    }
    let sol = solve_normal_equations(&rows, &rhs)?;
    Ok((sol[0], sol[1] / g_scale))
}

/// ρ^{(2n-k²-k)/k} e^{-(2n/k²) ρ^k}, the height-remainder shape.
pub fn remainder_shape(n: usize, k: usize, rho: f64) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let expo = (2.0 * nf - kf * kf - kf) / kf;
    (expo * rho.ln() - 2.0 * nf / (kf * kf) * rho.powi(k as i32)).exp()
}

fn solve_normal_equations(rows: &[[f64; 3]], rhs: &[f64]) -> Result<[f64; 3]> {
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for (row, &b) in rows.iter().zip(rhs) {
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * b;
        }
    }
    // Gaussian elimination with partial pivoting on the 3x3 system
    let mut m = [[0.0f64; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&ata[i]);
        m[i][3] = atb[i];
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        if m[col][col].abs() < 1e-300 {
            return Err(CoreError::Convergence(
                "singular normal equations in tail fit".into(),
            ));
        }
        for i in (col + 1)..3 {
            let f = m[i][col] / m[col][col];
            for j in col..4 {
                m[i][j] -= f * m[col][j];
            }
        }
    }
    let mut x = [0.0f64; 3];
    for i in (0..3).rev() {
        let mut acc = m[i][3];
        for j in (i + 1)..3 {
            acc -= m[i][j] * x[j];
        }
        x[i] = acc / m[i][i];
    }
    Ok(x)
}

/// Plateau statistics of C(r) over the final unit interval of ρ = a·r:
/// mean value, max relative deviation, and whether the deviation is < 1%.
pub fn asymptotic_constant_of(prof: &RadialProfile) -> Result<AsymptoticConstant> {
    let p = &prof.params;
    let rho_max = p.a * p.r_max;
    if rho_max < 2.0 {
        return Err(CoreError::Parameter(format!(
            "a*r_max = {rho_max} too small to reach the C(r) plateau"
        )));
    }
    let window: Vec<f64> = prof
        .r
        .iter()
        .zip(&prof.c_of_r)
        .filter(|(r, _)| p.a * **r >= rho_max - 1.0)
        .map(|(_, c)| *c)
        .collect();
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    if !(mean > 0.0) {
        return Err(CoreError::Convergence(format!(
            "asymptotic constant {mean} not positive"
        )));
    }
    let max_dev = window
        .iter()
        .map(|c| (c - mean).abs())
        .fold(0.0f64, f64::max)
        / mean;
    Ok(AsymptoticConstant {
        c_asym: mean,
        plateau_error: max_dev,
        plateau_ok: max_dev < 0.01,
    })
}

/// Height samples shifted to u(0) = u_at_zero, with the matching offset
/// c0 = lim (u(r) - r).
pub fn reconstruct_height(prof: &RadialProfile, u_at_zero: f64) -> (Vec<f64>, f64) {
    let u = prof.u.iter().map(|v| v + u_at_zero).collect();
    (u, prof.c0 + u_at_zero)
}

/// Remainder ratio (u(r) - r - c0) / shape(ρ) at one radius.
pub fn remainder_ratio(prof: &RadialProfile, r: f64) -> Result<f64> {
    let interp = prof.interpolant()?;
    let rho = prof.params.a * r;
    let g = remainder_shape(prof.params.n, prof.params.k, rho) / prof.params.a;
    if g < 1e-290 {
        return Err(CoreError::Domain(format!(
            "remainder shape underflows at r = {r}"
        )));
    }
    Ok((interp.u.eval(r)? - r - prof.c0) / g)
}

/// Limit of the remainder ratio, extrapolated in powers of ρ^{-k} from three
/// radii inside the trustworthy tail. Converges to C_asym·k/(2n).
pub fn remainder_ratio_limit(prof: &RadialProfile) -> Result<f64> {
    let p = &prof.params;
    let kf = p.k as f64;
    // largest radius where the remainder still clears roundoff on u
    let mut rho_hi = None;
    for j in (0..prof.r.len()).rev() {
        let rho = p.a * prof.r[j];
        if rho <= 0.0 {
            break;
        }
        let rem = remainder_shape(p.n, p.k, rho) / p.a * prof.c_asym * kf / (2.0 * p.n as f64);
        if rem > 1e5 * f64::EPSILON * prof.u[j].abs().max(1.0) {
            rho_hi = Some(rho);
            break;
        }
    }
    let rho_hi = rho_hi.ok_or_else(|| {
        CoreError::Convergence("no radius with resolvable height remainder".into())
    })?;
    let x1 = rho_hi.powi(-(p.k as i32));
    let xs = [x1, 1.5 * x1, 2.25 * x1];
    let mut vals = [0.0f64; 3];
    for (i, &x) in xs.iter().enumerate() {
        let rho = x.powf(-1.0 / kf);
        vals[i] = remainder_ratio(prof, rho / p.a)?;
    }
    // quadratic extrapolation in x to x = 0
    let l = lagrange_at_zero(&xs, &vals);
    Ok(l)
}

fn lagrange_at_zero(xs: &[f64; 3], ys: &[f64; 3]) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        let mut w = 1.0;
        for j in 0..3 {
            if j != i {
                w *= xs[j] / (xs[j] - xs[i]);
            }
        }
        acc += w * ys[i];
    }
    acc
}

/// Cubic interpolants over the stored profile columns.
pub struct ProfileInterp {
    pub u: UniformCubic,
    pub y: UniformCubic,
    pub z: UniformCubic,
    pub zeta: UniformCubic,
}

impl RadialProfile {
    pub fn interpolant(&self) -> Result<ProfileInterp> {
        let h = self.r[1] - self.r[0];
        Ok(ProfileInterp {
            u: UniformCubic::new(0.0, h, self.u.clone())?,
            y: UniformCubic::new(0.0, h, self.y.clone())?,
            z: UniformCubic::new(0.0, h, self.z.clone())?,
            zeta: UniformCubic::new(0.0, h, self.zeta.clone())?,
        })
    }

    /// Shift heights so that c0 = 0 (the barrier normalization z_1^k).
    pub fn normalized_zero_offset(mut self) -> Self {
        let c0 = self.c0;
        for v in self.u.iter_mut() {
            *v -= c0;
        }
        self.c0 = 0.0;
        self
    }

    pub fn summary(&self) -> ProfileSummary {
        ProfileSummary {
            n: self.params.n,
            k: self.params.k,
            a: self.params.a,
            c0: self.c0,
            c_asym: self.c_asym,
            plateau_error: self.plateau_error,
            tol: self.params.tol,
        }
    }
}

/// Scaled translator z_a^k(|x|) = (1/a) u_base(a |x|) evaluated at |x| = x_norm.
/// `base` must be the unit-velocity, zero-offset profile.
pub fn scaled_translator_value(base: &RadialProfile, a_new: f64, x_norm: f64) -> Result<f64> {
    if !(a_new > 0.0) {
        return Err(CoreError::Parameter(format!(
            "scaling velocity a = {a_new} must be positive"
        )));
    }
    if (base.params.a - 1.0).abs() > 1e-12 || base.c0.abs() > 1e-9 {
        return Err(CoreError::Parameter(
            "scaled_translator_value requires the unit-velocity, zero-offset base profile".into(),
        ));
    }
    if x_norm < 0.0 {
        return Err(CoreError::Parameter(format!("|x| = {x_norm} negative")));
    }
    let interp = base.interpolant()?;
    Ok(interp.u.eval(a_new * x_norm)? / a_new)
}

/// Whole-profile version of the height scaling: resamples the base profile as
/// a velocity-a translator on [0, base.r_max / a].
pub fn scaled_profile(base: &RadialProfile, a_new: f64) -> Result<RadialProfile> {
    if !(a_new > 0.0) {
        return Err(CoreError::Parameter(format!(
            "scaling velocity a = {a_new} must be positive"
        )));
    }
    if (base.params.a - 1.0).abs() > 1e-12 || base.c0.abs() > 1e-9 {
        return Err(CoreError::Parameter(
            "scaled_profile requires the unit-velocity, zero-offset base profile".into(),
        ));
    }
    let m = base.r.len();
    let r_max = base.params.r_max / a_new;
    let mut params = base.params.clone();
    params.a = a_new;
    params.r_max = r_max;
    let mut out = RadialProfile {
        params,
        r: Vec::with_capacity(m),
        z: Vec::with_capacity(m),
        zeta: Vec::with_capacity(m),
        y: Vec::with_capacity(m),
        u: Vec::with_capacity(m),
        c_of_r: Vec::with_capacity(m),
        c0: base.c0 / a_new,
        c_asym: base.c_asym,
        plateau_error: base.plateau_error,
        plateau_ok: base.plateau_ok,
    };
    for j in 0..m {
        // sample index j of the base corresponds to r_j/a in the scaled profile
        out.r.push(base.r[j] / a_new);
        out.z.push(base.z[j]);
        out.zeta.push(base.zeta[j]);
        out.y.push(base.y[j]);
        out.u.push(base.u[j] / a_new);
        out.c_of_r.push(base.c_of_r[j]);
    }
    Ok(out)
}

/// Residual |a/w - (σ_k(κ)/C(n,k))^{1/k}| of the translator equation at
/// radius r, with κ assembled independently from (y, y') and fed through
/// the symmetric-function kernel.
pub fn verify_residual(prof: &RadialProfile, r: f64) -> Result<f64> {
    let p = &prof.params;
    let (nf, kf) = (p.n as f64, p.k as f64);
    if r < 0.0 {
        return Err(CoreError::Parameter(format!("r = {r} negative")));
    }
    if r == 0.0 {
        // symmetric vertex: all κ_i = y'(0) = a, w = 1, residual vanishes
        return Ok(0.0);
    }
    let interp = prof.interpolant()?;
    let rho = p.a * r;
    let idx = ((r / (prof.r[1] - prof.r[0])).round() as usize).min(prof.r.len() - 1);
    let on_node = (prof.r[idx] - r).abs() < 1e-12 * p.r_max;
    let (z, zeta) = if on_node {
        (prof.z[idx], prof.zeta[idx])
    } else {
        (interp.z.eval(r)?, interp.zeta.eval(r)?.max(1e-300))
    };
    let y = slope_from(z, zeta, p.k);
    if y >= 1.0 {
        return Err(CoreError::Spacelike(format!("y = {y} >= 1 at r = {r}")));
    }
    // y' from the ODE identity (yeq), then scaled to the velocity-a variable
    let one_minus_y2 = (1.0 + y) * one_minus_slope(z, zeta, p.k);
    let y1_prime = if y > 0.0 {
        nf / kf * (rho.powi(p.k as i32 - 1) / y.powi(p.k as i32 - 1) - (nf - kf) / nf * y / rho)
            * one_minus_y2
    } else {
        1.0
    };
    let y_prime = p.a * y1_prime;
    let w = one_minus_y2.sqrt();
    let mut kappa = vec![y / (r * w); p.n];
    kappa[0] = y_prime / (one_minus_y2 * w);
    let phi = symfunc::normalized_root(&CurvatureVector::new(kappa)?, p.k)?;
    Ok((p.a / w - phi).abs())
}

/// Richardson extrapolation of the regularized family over the given ε
/// triple (each half the previous), compared in sup norm against the direct
/// limit profile. Returns the maximum disagreement.
pub fn epsilon_crosscheck(params: &RadialParams, eps_head: f64) -> Result<f64> {
    let fam: Vec<RegularizedSamples> = [eps_head, eps_head / 2.0, eps_head / 4.0]
        .iter()
        .map(|&e| integrate_regularized(params, e))
        .collect::<Result<_>>()?;
    let direct = limit_profile(params)?;
    // eliminate the ε and ε² terms: weights (1/3, -2, 8/3)
    let w = [1.0 / 3.0, -2.0, 8.0 / 3.0];
    let mut max_dev = 0.0f64;
    for j in 0..fam[0].r.len() {
        let ext = w[0] * fam[0].z[j] + w[1] * fam[1].z[j] + w[2] * fam[2].z[j];
        // fam is sampled in the unit variable ρ = a·r
        max_dev = max_dev.max((ext - direct.z[j]).abs());
    }
    let gate = 10.0 * params.tol.max(3e-8);
    if max_dev > gate {
        return Err(CoreError::Convergence(format!(
            "ε-extrapolation disagrees with direct route: {max_dev:.3e} > {gate:.3e}"
        )));
    }
    Ok(max_dev)
}

/// Write the profile CSV (`r,z,y,u,C_of_r`, 17 significant digits).
pub fn write_profile_csv<W: Write>(prof: &RadialProfile, mut w: W) -> Result<()> {
    writeln!(w, "r,z,y,u,C_of_r")?;
    for j in 0..prof.r.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            crate::fmt_g17(prof.r[j]),
            crate::fmt_g17(prof.z[j]),
            crate::fmt_g17(prof.y[j]),
            crate::fmt_g17(prof.u[j]),
            crate::fmt_g17(prof.c_of_r[j]),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, k: usize, a: f64, r_max: f64, tol: f64) -> RadialParams {
        RadialParams::new(n, k, a, r_max, tol).unwrap()
    }

    #[test]
    fn rhs_regularized_examples() {
        // at r = 0, z = ε^k the slope is k ε^{k-1}(1 - ε²)
        for &(n, k) in &[(1usize, 1usize), (2, 1), (3, 2), (4, 3)] {
            let eps = 0.07f64;
            let got = rhs_regularized(0.0, eps.powi(k as i32), n, k, eps).unwrap();
            let want = k as f64 * eps.powi(k as i32 - 1) * (1.0 - eps * eps);
            assert!(
                (got - want).abs() <= 1e-13 * want.abs(),
                "(n,k)=({n},{k}): {got} vs {want}"
            );
        }
        // the factor (1 - z^{2/k}) kills the slope as z -> 1
        let f = rhs_regularized(1.0, 1.0 - 1e-9, 2, 2, 0.1).unwrap();
        assert!(f.abs() < 1e-8);
        assert!(rhs_regularized(1.0, 1.0, 2, 2, 0.1).is_err());
        // n = k: the z/(r+eps) term drops out
        let f = rhs_regularized(0.7, 0.3, 3, 3, 0.05).unwrap();
        let want = 3.0 * 0.75f64.powi(2) * (1.0 - 0.3f64.powf(2.0 / 3.0));
        assert!((f - want).abs() < 1e-14);
    }

    #[test]
    fn regularized_family_approaches_tanh() {
        // n = k = 1: z' = 1 - z², so z_ε(r) = tanh(r + artanh(ε)) ≈ tanh(r + ε)
        let p = params(1, 1, 1.0, 4.0, 1e-10);
        for &eps in &[0.1, 0.01] {
            let fam = integrate_regularized(&p, eps).unwrap();
            for (j, &r) in fam.r.iter().enumerate() {
                let shifted = (r + eps.atanh()).tanh();
                assert!(
                    (fam.z[j] - shifted).abs() < 1e-8,
                    "eps={eps} r={r}: {} vs {shifted}",
                    fam.z[j]
                );
                // pointwise convergence to tanh at the O(ε) rate
                assert!((fam.z[j] - r.tanh()).abs() < 1.1 * eps);
            }
            assert_eq!(fam.z[0], eps.powi(1)); // initial condition exact
        }
    }

    #[test]
    fn regularized_family_is_cauchy_in_eps() {
        let p = params(3, 2, 1.0, 4.0, 1e-10);
        let eps = [2e-2, 1e-2, 5e-3, 2.5e-3];
        let fams: Vec<_> = eps
            .iter()
            .map(|&e| integrate_regularized(&p, e).unwrap())
            .collect();
        let sup = |a: &RegularizedSamples, b: &RegularizedSamples| {
            a.z.iter()
                .zip(&b.z)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max)
        };
        let d1 = sup(&fams[0], &fams[1]);
        let d2 = sup(&fams[1], &fams[2]);
        let d3 = sup(&fams[2], &fams[3]);
        assert!(d2 < d1 && d3 < d2, "not Cauchy: {d1} {d2} {d3}");
    }

    #[test]
    fn limit_profile_matches_gaussian_closed_form() {
        // n = k = 2: z = 1 - e^{-r²}
        let prof = limit_profile(&params(2, 2, 1.0, 4.0, 1e-10)).unwrap();
        let mut max_err = 0.0f64;
        for (j, &r) in prof.r.iter().enumerate() {
            max_err = max_err.max((prof.zeta[j] - (-r * r).exp()).abs());
        }
        assert!(max_err <= 1e-8, "max |z - (1 - e^{{-r²}})| = {max_err}");
    }

    #[test]
    fn limit_profile_matches_tanh_closed_form() {
        let prof = limit_profile(&params(1, 1, 1.0, 4.0, 1e-10)).unwrap();
        let mut max_err = 0.0f64;
        for (j, &r) in prof.r.iter().enumerate() {
            max_err = max_err.max((prof.y[j] - r.tanh()).abs());
        }
        assert!(max_err <= 1e-8, "max |y - tanh r| = {max_err}");
    }

    #[test]
    fn limit_profile_closed_forms_n_eq_k() {
        // n = k ∈ {1,2,3}: dz/dr = n r^{n-1}(1 - z^{2/n}); reference is an
        // independent fixed-step RK4 integration of the same reduced ODE.
        for n in 1..=3usize {
            let prof = limit_profile(&params(n, n, 1.0, 3.0, 1e-10)).unwrap();
            let f = |r: f64, z: f64| {
                n as f64 * r.powi(n as i32 - 1) * (1.0 - z.powf(2.0 / n as f64).min(1.0))
            };
            let h = 1e-4;
            let mut z = (1e-4f64).powi(n as i32);
            let mut r = 1e-4;
            let mut max_err = 0.0f64;
            let mut next_check = 0;
            while r < 3.0 - 1e-12 {
                while next_check < prof.r.len() && prof.r[next_check] <= r + 1e-12 {
                    if prof.r[next_check] >= 0.01 {
                        max_err = max_err.max((prof.z[next_check] - z).abs());
                    }
                    next_check += 1;
                }
                let k1 = f(r, z);
                let k2 = f(r + 0.5 * h, z + 0.5 * h * k1);
                let k3 = f(r + 0.5 * h, z + 0.5 * h * k2);
                let k4 = f(r + h, z + h * k3);
                z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                r += h;
            }
            assert!(max_err < 1e-8, "n = k = {n}: max err {max_err}");
        }
    }

    #[test]
    fn decay_bounds_hold_for_3_1() {
        let prof = limit_profile(&params(3, 1, 1.0, 4.0, 1e-10)).unwrap();
        for (j, &r) in prof.r.iter().enumerate() {
            if r < 0.05 {
                continue;
            }
            let lower = (-6.0 * r).exp();
            let upper = (-r / 3.0).exp();
            assert!(prof.zeta[j] >= lower - 1e-6, "r={r}");
            assert!(prof.zeta[j] <= upper + 1e-6, "r={r}");
        }
    }

    #[test]
    fn asymptotic_constants_match_closed_forms() {
        // (2,2): 1 - y = 1 - sqrt(1 - e^{-r²}) = e^{-r²}/2 (1 + o(1)) -> C = 1/2
        let prof = limit_profile(&params(2, 2, 1.0, 4.0, 1e-10)).unwrap();
        assert!((prof.c_asym - 0.5).abs() < 1e-3, "C_asym = {}", prof.c_asym);
        assert!(prof.plateau_ok);

        // (1,1): C(r) = (1 - tanh r) e^{2r} = 2/(1 + e^{-2r}) -> 2
        let prof = limit_profile(&params(1, 1, 1.0, 6.0, 1e-10)).unwrap();
        assert!(
            (prof.c_asym - 2.0).abs() < 2e-3,
            "C_asym = {}",
            prof.c_asym
        );
        assert!(prof.plateau_ok);
    }

    #[test]
    fn c_of_r_monotone_regimes() {
        // k = 1: C increasing on the plateau; k >= 2: decreasing
        let inc = limit_profile(&params(2, 1, 1.0, 6.0, 1e-10)).unwrap();
        let m = inc.r.len();
        for j in (m * 3 / 4)..(m - 1) {
            assert!(
                inc.c_of_r[j + 1] >= inc.c_of_r[j] - 1e-12,
                "k=1 C(r) not increasing at r = {}",
                inc.r[j]
            );
        }
        let dec = limit_profile(&params(2, 2, 1.0, 4.0, 1e-10)).unwrap();
        for j in (m * 3 / 4)..(m - 1) {
            assert!(
                dec.c_of_r[j + 1] <= dec.c_of_r[j] + 1e-12,
                "k=2 C(r) not decreasing at r = {}",
                dec.r[j]
            );
        }
    }

    #[test]
    fn height_matches_log_cosh() {
        // n = k = 1: u(r) = log cosh r with u(0) = 0, c0 = -log 2
        let prof = limit_profile(&params(1, 1, 1.0, 6.0, 1e-10)).unwrap();
        for (j, &r) in prof.r.iter().enumerate() {
            // log cosh without overflow: r + log((1+e^{-2r})/2)
            let want = r + ((-2.0 * r).exp().ln_1p() - std::f64::consts::LN_2);
            assert!((prof.u[j] - want).abs() < 1e-9, "r={r}");
        }
        assert!(
            (prof.c0 + std::f64::consts::LN_2).abs() < 1e-7,
            "c0 = {}",
            prof.c0
        );
    }

    #[test]
    fn height_matches_quadrature_oracle() {
        // n = k = 2: u(r) = ∫ sqrt(1 - e^{-s²}) ds by Simpson on a fine grid
        let prof = limit_profile(&params(2, 2, 1.0, 4.0, 1e-10)).unwrap();
        let y = |s: f64| (-(-s * s).exp_m1()).sqrt();
        let simpson = |a: f64, b: f64| {
            let m = 4000;
            let h = (b - a) / m as f64;
            let mut acc = y(a) + y(b);
            for i in 1..m {
                acc += y(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc * h / 3.0
        };
        for &r in &[0.5, 1.0, 2.0, 3.0, 4.0] {
            let j = prof.r.iter().position(|&x| (x - r).abs() < 1e-9);
            if let Some(j) = j {
                assert!((prof.u[j] - simpson(0.0, r)).abs() < 1e-9, "r={r}");
            }
        }
        // remainder u(r) - r - c0 ≈ e^{-r²}/(4r) deep in the tail
        let interp = prof.interpolant().unwrap();
        let r = 3.0;
        let rem = interp.u.eval(r).unwrap() - r - prof.c0;
        let model = (-r * r).exp() / (4.0 * r);
        assert!(
            (rem - model).abs() < 0.1 * model,
            "remainder {rem} vs model {model}"
        );
    }

    #[test]
    fn remainder_ratio_limits() {
        // target C_asym·k/(2n): 1 for (1,1), 1/4 for (2,2)
        let prof = limit_profile(&params(1, 1, 1.0, 8.0, 1e-11)).unwrap();
        let l = remainder_ratio_limit(&prof).unwrap();
        assert!((l - 1.0).abs() < 0.02, "(1,1) ratio limit {l}");

        let prof = limit_profile(&params(2, 2, 1.0, 5.0, 1e-11)).unwrap();
        let l = remainder_ratio_limit(&prof).unwrap();
        assert!((l - 0.25).abs() < 0.02 * 0.25, "(2,2) ratio limit {l}");
    }

    #[test]
    fn scaled_translator_identity_and_slope() {
        let base = limit_profile(&params(1, 1, 1.0, 6.0, 1e-10))
            .unwrap()
            .normalized_zero_offset();
        // a = 1 is the identity on the base heights
        for &x in &[0.0, 0.7, 2.3, 5.0] {
            let v = scaled_translator_value(&base, 1.0, x).unwrap();
            let interp = base.interpolant().unwrap();
            assert!((v - interp.u.eval(x).unwrap()).abs() < 1e-12);
        }
        // chain rule: slope of the scaled height is y_base(a|x|) < 1
        let scaled = scaled_profile(&base, 2.0).unwrap();
        for (j, &y) in scaled.y.iter().enumerate() {
            assert!(y < 1.0, "slope at r = {}", scaled.r[j]);
        }
        assert!(scaled_translator_value(&base, -1.0, 1.0).is_err());
    }

    #[test]
    fn scaled_translator_satisfies_equation() {
        // (1,1), a = 2: z_2 = (1/2) log cosh(2|x|) + const solves the
        // translator equation with velocity 2
        let base = limit_profile(&params(1, 1, 1.0, 8.0, 1e-11))
            .unwrap()
            .normalized_zero_offset();
        let scaled = scaled_profile(&base, 2.0).unwrap();
        for &r in &[0.2, 0.5, 1.0, 1.5] {
            let res = verify_residual(&scaled, r).unwrap();
            assert!(res < 1e-8, "r={r}: residual {res}");
        }
        // scaling coherence at 100·tol for a non-closed-form pair
        let base = limit_profile(&params(3, 2, 1.0, 6.0, 1e-9))
            .unwrap()
            .normalized_zero_offset();
        let scaled = scaled_profile(&base, 1.7).unwrap();
        for &r in &[0.3, 0.8, 1.4, 2.0] {
            let res = verify_residual(&scaled, r).unwrap();
            assert!(res < 100.0 * 1e-9, "r={r}: residual {res}");
        }
    }

    #[test]
    fn residual_small_on_closed_forms() {
        // absolute residual where a/w stays O(10); relative residual on the
        // whole range (a/w itself reaches ~2·10³ at r = 4, so a 1e-10
        // absolute target there would demand sub-ulp relative accuracy)
        let prof = limit_profile(&params(2, 2, 1.0, 4.0, 1e-12)).unwrap();
        let interp = prof.interpolant().unwrap();
        for i in 0..60 {
            let r = 0.1 + 1.9 * i as f64 / 59.0;
            let res = verify_residual(&prof, r).unwrap();
            assert!(res <= 1e-10, "abs residual {res} at r = {r}");
        }
        for i in 0..60 {
            let r = 0.1 + 3.9 * i as f64 / 59.0;
            let res = verify_residual(&prof, r).unwrap();
            let zeta = interp.zeta.eval(r).unwrap();
            let w = (zeta * (2.0 - zeta)).sqrt();
            assert!(res * w <= 1e-9, "rel residual {} at r = {r}", res * w);
        }
        let prof = limit_profile(&params(1, 1, 1.0, 4.0, 1e-12)).unwrap();
        for i in 0..60 {
            let r = 0.1 + 1.9 * i as f64 / 59.0;
            let res = verify_residual(&prof, r).unwrap();
            assert!(res <= 1e-11, "(1,1) residual {res} at r = {r}");
        }
    }

    #[test]
    fn residual_small_on_generic_profile() {
        let prof = limit_profile(&params(3, 2, 1.0, 5.0, 1e-8)).unwrap();
        for i in 0..40 {
            let r = 0.1 + 2.4 * i as f64 / 39.0;
            let res = verify_residual(&prof, r).unwrap();
            assert!(res <= 100.0 * 1e-8, "residual {res} at r = {r}");
        }
    }

    #[test]
    fn epsilon_route_agrees_with_direct() {
        let dev = epsilon_crosscheck(&params(2, 2, 1.0, 4.0, 1e-8), 1e-2).unwrap();
        assert!(dev < 3e-7, "(2,2) deviation {dev}");
        let dev = epsilon_crosscheck(&params(2, 1, 1.0, 4.0, 1e-8), 1e-2).unwrap();
        assert!(dev < 3e-7, "(2,1) deviation {dev}");
    }

    #[test]
    fn parameter_validation() {
        assert!(RadialParams::new(2, 3, 1.0, 4.0, 1e-8).is_err()); // k > n
        assert!(RadialParams::new(2, 2, -1.0, 4.0, 1e-8).is_err());
        assert!(RadialParams::new(2, 2, 1.0, 4.0, 1e-2).is_err()); // tol too loose
        assert!(RadialParams::new(2, 2, 1.0, 40.0, 1e-8).is_err()); // underflow guard
    }

    #[test]
    fn profile_csv_shape() {
        let prof = limit_profile(&params(2, 2, 1.0, 3.0, 1e-8)).unwrap();
        let mut buf = Vec::new();
        write_profile_csv(&prof, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "r,z,y,u,C_of_r");
        assert_eq!(text.lines().count(), 1 + prof.r.len());
    }
}

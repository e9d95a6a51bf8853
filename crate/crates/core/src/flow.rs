//! The graphical curvature flow u_t = w·Φ, Φ = (σ_k(κ)/C(n,k))^{1/k},
//! w = sqrt(1 - |Du|²), radially for any (n,k) and on 2-D Cartesian grids.
//!
//! The normalized flow ũ = u - a·t has the translator as its fixed point;
//! runs track sup|ũ - u^∞|, the spacelike margin, and the speed/support
//! ratio Φ/v = w·Φ, and check the comparison sandwich
//! u̲ + at ≤ u ≤ u̅ + at against sub/supersolution envelopes.
//!
//! Time stepping is backward Euler with a Newton solve per step (tridiagonal
//! in the radial case, BiCGStab with a line-implicit preconditioner on
//! grids). The translator is exponentially degenerate near the truncation
//! boundary (w ~ e^{-c r}), so the explicit CFL limit dt ≲ h² w² there is
//! of order 1e-12 at desk-scale radii; the implicit solve removes that
//! restriction while the curvature-adaptive formula still seeds the first
//! step.

use crate::error::{CoreError, Result};
use crate::geometry::GraphFunction;
use crate::radial::RadialProfile;
use crate::solver::{bicgstab, solve_tridiagonal};
use crate::symfunc::binomial;
use serde::Serialize;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BcMode {
    /// Dirichlet u = u^∞ + a·t on the truncation boundary.
    TranslatorDirichlet,
    /// Dirichlet pinned to barrier data + a·t.
    BarrierDirichlet,
}

impl std::str::FromStr for BcMode {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "translator_dirichlet" => Ok(Self::TranslatorDirichlet),
            "barrier_dirichlet" => Ok(Self::BarrierDirichlet),
            other => Err(CoreError::Parameter(format!("unknown bc_mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowConfig {
    /// Safety factor of the curvature-adaptive seed step, in (0, 1].
    pub dt_safety: f64,
    /// Cap of the adaptive step; backward Euler is unconditionally stable,
    /// accuracy of the transient sets this scale.
    pub dt_max: f64,
    pub t_end: f64,
    pub bc_mode: BcMode,
    pub tol_converged: f64,
    /// History rows are recorded at least this often in t.
    pub checkpoint_interval: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt_safety: 0.4,
            dt_max: 0.25,
            t_end: 50.0,
            bc_mode: BcMode::TranslatorDirichlet,
            tol_converged: 1e-3,
            checkpoint_interval: 0.25,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(CoreError::Parameter(format!(
                "dt_safety = {} outside (0, 1]",
                self.dt_safety
            )));
        }
        if !(self.t_end > 0.0) {
            return Err(CoreError::Parameter("t_end must be positive".into()));
        }
        if !(self.tol_converged > 0.0) {
            return Err(CoreError::Parameter("tol_converged must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HistoryRow {
    pub t: f64,
    pub sup_dist: f64,
    pub min_margin: f64,
    pub max_phi_over_v: f64,
    pub flagged_fraction: f64,
}

#[derive(Debug, Clone)]
pub enum FlowDomain {
    /// u(r) on r_i = i·h, i = 0..nodes-1, with symmetric vertex at r = 0 and
    /// Dirichlet at r_max. Any n ≥ 1.
    Radial { n: usize, r_max: f64, nodes: usize },
    /// u(x) on [-L, L]², Dirichlet on the whole boundary ring. n = 2.
    Grid { l: f64, nx: usize },
}

impl FlowDomain {
    pub fn h(&self) -> f64 {
        match *self {
            FlowDomain::Radial { r_max, nodes, .. } => r_max / (nodes - 1) as f64,
            FlowDomain::Grid { l, nx } => 2.0 * l / (nx - 1) as f64,
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            FlowDomain::Radial { nodes, .. } => nodes,
            FlowDomain::Grid { nx, .. } => nx * nx,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            FlowDomain::Radial { n, .. } => n,
            FlowDomain::Grid { .. } => 2,
        }
    }
}

/// One flow run's state: the evolving heights, the normalization target, and
/// the recorded history.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub domain: FlowDomain,
    pub k: usize,
    pub a: f64,
    pub t: f64,
    pub u: Vec<f64>,
    /// Translator heights on the same nodes; ũ is measured against this.
    pub target: Vec<f64>,
    /// Static part of the Dirichlet data (boundary value = base + a·t).
    pub boundary_base: Vec<f64>,
    pub history: Vec<HistoryRow>,
    pub initial_margin: f64,
    dt: f64,
}

/// Per-node speed evaluation: S = w·Φ with the k-convexity flag.
#[derive(Debug, Clone, Copy, Default)]
struct NodeSpeed {
    s: f64,
    w: f64,
    flagged: bool,
    kappa_min: f64,
    sigma_k: f64,
    /// Largest eigenvalue of the diffusion coefficient ∂S/∂(D²u).
    d_eff: f64,
}

fn radial_sigma(n: usize, k: usize, lam: f64, mu: f64) -> f64 {
    // σ_k of (λ, μ, ..., μ) with n-1 copies of μ
    binomial(n - 1, k) * mu.powi(k as i32)
        + binomial(n - 1, k - 1) * lam * mu.powi(k as i32 - 1)
}

/// Speed at a radial node from y = u_r and yp = u_rr. Returns None when the
/// slope is no longer spacelike.
fn radial_speed(n: usize, k: usize, r: f64, y: f64, yp: f64) -> Option<NodeSpeed> {
    let w_sq = 1.0 - y * y;
    if w_sq <= 0.0 {
        return None;
    }
    let w = w_sq.sqrt();
    let (lam, mu) = if r > 0.0 {
        (yp / (w_sq * w), y / (r * w))
    } else {
        (yp, yp)
    };
    let mut k_convex = true;
    for j in 1..=k {
        if radial_sigma(n, j, lam, mu) <= 0.0 {
            k_convex = false;
            break;
        }
    }
    let sigma_k = radial_sigma(n, k, lam, mu);
    let phi = if k_convex {
        (sigma_k / binomial(n, k)).powf(1.0 / k as f64)
    } else {
        0.0
    };
    // ∂S/∂(u_rr): S = wΦ, κ_radial = u_rr/w³ is the only u_rr-dependent entry
    let d_eff = if k_convex && sigma_k > 0.0 {
        let dphi_dlam = (1.0 / k as f64)
            * (sigma_k / binomial(n, k)).powf(1.0 / k as f64 - 1.0)
            * binomial(n - 1, k - 1)
            * mu.powi(k as i32 - 1)
            / binomial(n, k);
        (w * dphi_dlam / (w_sq * w)).abs()
    } else {
        0.0
    };
    Some(NodeSpeed {
        s: w * phi,
        w,
        flagged: !k_convex,
        kappa_min: lam.min(mu),
        sigma_k,
        d_eff,
    })
}

/// Speed at a grid node from Du = (p, q) and the Hessian entries.
fn grid_speed(k: usize, p: f64, q: f64, h11: f64, h12: f64, h22: f64) -> Option<NodeSpeed> {
    let w_sq = 1.0 - p * p - q * q;
    if w_sq <= 0.0 {
        return None;
    }
    let w = w_sq.sqrt();
    let denom = w * (1.0 + w);
    let g11 = 1.0 + p * p / denom;
    let g12 = p * q / denom;
    let g22 = 1.0 + q * q / denom;
    // A = (1/w) γ H γ
    let t11 = g11 * h11 + g12 * h12;
    let t12 = g11 * h12 + g12 * h22;
    let t21 = g12 * h11 + g22 * h12;
    let t22 = g12 * h12 + g22 * h22;
    let a11 = (t11 * g11 + t12 * g12) / w;
    let a22 = (t21 * g12 + t22 * g22) / w;
    let a12 = 0.5 * ((t11 * g12 + t12 * g22) + (t21 * g11 + t22 * g12)) / w;
    let s1 = a11 + a22;
    let s2 = a11 * a22 - a12 * a12;
    let disc = (0.5 * (a11 - a22)).hypot(a12);
    let kappa_min = 0.5 * s1 - disc;
    let (k_convex, phi, sigma_k) = match k {
        1 => (s1 > 0.0, 0.5 * s1, s1),
        2 => (s1 > 0.0 && s2 > 0.0, if s2 > 0.0 { s2.sqrt() } else { 0.0 }, s2),
        _ => return None,
    };
    let phi = if k_convex { phi } else { 0.0 };
    // diffusion coefficient B = γ (∂Φ/∂A) γ; max eigenvalue estimates D_eff
    let d_eff = if k_convex {
        let gamma_max = 1.0 / w; // largest eigenvalue of γ
        let dphi_max = match k {
            1 => 0.5,
            _ => {
                // ∂Φ/∂A = adj(A)/(2Φ): largest eigenvalue κ_max/(2Φ)
                let kappa_max = 0.5 * s1 + disc;
                kappa_max / (2.0 * phi.max(1e-300))
            }
        };
        gamma_max * gamma_max * dphi_max
    } else {
        0.0
    };
    Some(NodeSpeed {
        s: w * phi,
        w,
        flagged: !k_convex,
        kappa_min,
        sigma_k,
        d_eff,
    })
}

/// Full per-node field for the current heights.
struct SpeedField {
    speeds: Vec<NodeSpeed>,
    min_margin: f64,
    any_unflagged: bool,
}

impl FlowState {
    /// Radial run: target and boundary data from the profile, initial data
    /// u0(r) (defaults to the target for fixed-point runs).
    pub fn new_radial(
        profile: &RadialProfile,
        nodes: usize,
        u0: Option<&dyn Fn(f64) -> f64>,
    ) -> Result<Self> {
        if nodes < 8 {
            return Err(CoreError::Parameter("radial flow needs at least 8 nodes".into()));
        }
        let p = &profile.params;
        let interp = profile.interpolant()?;
        let h = p.r_max / (nodes - 1) as f64;
        let mut target = Vec::with_capacity(nodes);
        for i in 0..nodes {
            target.push(interp.u.eval((i as f64 * h).min(p.r_max))?);
        }
        let u = match u0 {
            None => target.clone(),
            Some(f) => (0..nodes).map(|i| f(i as f64 * h)).collect(),
        };
        let mut state = Self {
            domain: FlowDomain::Radial {
                n: p.n,
                r_max: p.r_max,
                nodes,
            },
            k: p.k,
            a: p.a,
            t: 0.0,
            u,
            boundary_base: target.clone(),
            target,
            history: Vec::new(),
            initial_margin: 0.0,
            dt: 0.0,
        };
        state.initial_margin = state.speed_field()?.min_margin;
        Ok(state)
    }

    /// Grid run over [-L, L]² (n = 2): target/boundary from the radialized
    /// profile, initial data u0(x1, x2).
    pub fn new_grid(
        profile: &RadialProfile,
        l: f64,
        nx: usize,
        u0: Option<&dyn Fn(f64, f64) -> f64>,
    ) -> Result<Self> {
        let p = &profile.params;
        if p.n != 2 {
            return Err(CoreError::Parameter(format!(
                "grid flow requires n = 2, profile has n = {}",
                p.n
            )));
        }
        let target_graph = GraphFunction::from_radial(profile, l, nx, 0.0, 1e-12)?;
        let h = target_graph.h;
        let u = match u0 {
            None => target_graph.values.clone(),
            Some(f) => {
                let mut v = Vec::with_capacity(nx * nx);
                for j in 0..nx {
                    for i in 0..nx {
                        v.push(f(-l + i as f64 * h, -l + j as f64 * h));
                    }
                }
                v
            }
        };
        let mut state = Self {
            domain: FlowDomain::Grid { l, nx },
            k: p.k,
            a: p.a,
            t: 0.0,
            u,
            boundary_base: target_graph.values.clone(),
            target: target_graph.values,
            history: Vec::new(),
            initial_margin: 0.0,
            dt: 0.0,
        };
        state.initial_margin = state.speed_field()?.min_margin;
        Ok(state)
    }

    /// Replace the static Dirichlet data (barrier_dirichlet mode).
    pub fn with_boundary_base(mut self, base: Vec<f64>) -> Result<Self> {
        if base.len() != self.u.len() {
            return Err(CoreError::Parameter("boundary data length mismatch".into()));
        }
        self.boundary_base = base;
        Ok(self)
    }

    /// sup over nodes of |ũ - target| = |u - a t - target|.
    pub fn sup_distance(&self) -> f64 {
        self.u
            .iter()
            .zip(&self.target)
            .map(|(u, tgt)| (u - self.a * self.t - tgt).abs())
            .fold(0.0f64, f64::max)
    }

    fn speed_field(&self) -> Result<SpeedField> {
        let mut speeds = vec![NodeSpeed::default(); self.u.len()];
        let mut min_margin = f64::INFINITY;
        let mut any_unflagged = false;
        match self.domain {
            FlowDomain::Radial { n, nodes, .. } => {
                let h = self.domain.h();
                for i in 0..nodes {
                    let sp = if i == 0 {
                        let yp = 2.0 * (self.u[1] - self.u[0]) / (h * h);
                        radial_speed(n, self.k, 0.0, 0.0, yp)
                    } else if i + 1 < nodes {
                        let y = (self.u[i + 1] - self.u[i - 1]) / (2.0 * h);
                        let yp = (self.u[i + 1] - 2.0 * self.u[i] + self.u[i - 1]) / (h * h);
                        radial_speed(n, self.k, i as f64 * h, y, yp)
                    } else {
                        continue;
                    };
                    let sp = sp.ok_or_else(|| {
                        CoreError::Spacelike(format!("slope >= 1 at node {i}"))
                    })?;
                    min_margin = min_margin.min(1.0 - (1.0 - sp.w * sp.w).sqrt());
                    if !sp.flagged {
                        any_unflagged = true;
                    }
                    speeds[i] = sp;
                }
            }
            FlowDomain::Grid { nx, .. } => {
                let h = self.domain.h();
                for j in 1..nx - 1 {
                    for i in 1..nx - 1 {
                        let c = i + nx * j;
                        let p = (self.u[c + 1] - self.u[c - 1]) / (2.0 * h);
                        let q = (self.u[c + nx] - self.u[c - nx]) / (2.0 * h);
                        let h11 = (self.u[c + 1] - 2.0 * self.u[c] + self.u[c - 1]) / (h * h);
                        let h22 = (self.u[c + nx] - 2.0 * self.u[c] + self.u[c - nx]) / (h * h);
                        let h12 = (self.u[c + nx + 1] + self.u[c - nx - 1]
                            - self.u[c + nx - 1]
                            - self.u[c - nx + 1])
                            / (4.0 * h * h);
                        let sp = grid_speed(self.k, p, q, h11, h12, h22).ok_or_else(|| {
                            CoreError::Spacelike(format!("|Du| >= 1 at node ({i},{j})"))
                        })?;
                        min_margin = min_margin.min(1.0 - p.hypot(q));
                        if !sp.flagged {
                            any_unflagged = true;
                        }
                        speeds[c] = sp;
                    }
                }
            }
        }
        Ok(SpeedField {
            speeds,
            min_margin,
            any_unflagged,
        })
    }

    fn is_boundary(&self, c: usize) -> bool {
        match self.domain {
            FlowDomain::Radial { nodes, .. } => c + 1 == nodes,
            FlowDomain::Grid { nx, .. } => {
                let (i, j) = (c % nx, c / nx);
                i == 0 || j == 0 || i + 1 == nx || j + 1 == nx
            }
        }
    }

    /// max over interior nodes of Φ/v = w·Φ.
    pub fn speed_support_ratio(&self) -> Result<f64> {
        let field = self.speed_field()?;
        let mut max = 0.0f64;
        for (c, sp) in field.speeds.iter().enumerate() {
            if !self.is_boundary(c) {
                max = max.max(sp.s);
            }
        }
        Ok(max)
    }

    pub fn history_row(&self) -> Result<HistoryRow> {
        let field = self.speed_field()?;
        let mut max_ratio = 0.0f64;
        let mut flagged = 0usize;
        let mut total = 0usize;
        for (c, sp) in field.speeds.iter().enumerate() {
            if self.is_boundary(c) {
                continue;
            }
            if matches!(self.domain, FlowDomain::Radial { .. }) && c == 0 {
                // vertex counted like any interior node
            }
            total += 1;
            max_ratio = max_ratio.max(sp.s);
            if sp.flagged {
                flagged += 1;
            }
        }
        Ok(HistoryRow {
            t: self.t,
            sup_dist: self.sup_distance(),
            min_margin: field.min_margin,
            max_phi_over_v: max_ratio,
            flagged_fraction: flagged as f64 / total.max(1) as f64,
        })
    }
}

/// Admissibility report for the initial-data condition 0 < σ_k(κ) ≤ C·v.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub strictly_convex: bool,
    pub positive_sigma_k: bool,
    pub max_sigma_k_over_v: f64,
    /// Given constant C of the check.
    pub c_constant: f64,
    /// 0 < σ_k ≤ C·v everywhere with strict convexity.
    pub admissible: bool,
    /// Implied admissible velocity range (0, C·C(n,k)^{-1/k}].
    pub admissible_velocity_max: f64,
}

pub fn check_initial_admissible(state: &FlowState, c_constant: f64) -> Result<AdmissibilityReport> {
    if !(c_constant > 0.0) {
        return Err(CoreError::Parameter("admissibility constant must be positive".into()));
    }
    let field = state.speed_field()?;
    let mut strictly_convex = true;
    let mut positive = true;
    let mut max_ratio = 0.0f64;
    for (c, sp) in field.speeds.iter().enumerate() {
        if state.is_boundary(c) {
            continue;
        }
        if sp.kappa_min <= 0.0 {
            strictly_convex = false;
        }
        if sp.sigma_k <= 0.0 {
            positive = false;
        }
        // v = 1/w, so σ_k/v = σ_k·w
        max_ratio = max_ratio.max(sp.sigma_k * sp.w);
    }
    let n = state.domain.dim();
    Ok(AdmissibilityReport {
        strictly_convex,
        positive_sigma_k: positive,
        max_sigma_k_over_v: max_ratio,
        c_constant,
        admissible: strictly_convex && positive && max_ratio <= c_constant,
        admissible_velocity_max: c_constant * binomial(n, state.k).powf(-1.0 / state.k as f64),
    })
}

/// Comparison sandwich u̲ + at ≤ u ≤ u̅ + at with slack 10·h². The envelope
/// arrays are static heights at t = 0. Violation beyond slack is a hard
/// comparison failure.
pub fn sandwich_check(state: &FlowState, lower: &[f64], upper: &[f64]) -> Result<()> {
    if lower.len() != state.u.len() || upper.len() != state.u.len() {
        return Err(CoreError::Parameter("envelope length mismatch".into()));
    }
    if lower.iter().zip(upper).any(|(lo, up)| lo > up) {
        return Err(CoreError::Parameter(
            "lower envelope exceeds upper envelope at t = 0".into(),
        ));
    }
    let h = state.domain.h();
    let slack = 10.0 * h * h;
    let shift = state.a * state.t;
    for (c, &u) in state.u.iter().enumerate() {
        if u < lower[c] + shift - slack || u > upper[c] + shift + slack {
            return Err(CoreError::Comparison(format!(
                "node {c} at t = {}: u = {u} outside [{}, {}] ± {slack:.3e}",
                state.t,
                lower[c] + shift,
                upper[c] + shift
            )));
        }
    }
    Ok(())
}

/// Curvature-adaptive seed step dt = dt_safety·h²/(2n·max D_eff), the
/// maximum taken over nodes still active in the normalized variable (the
/// pinned far field would otherwise force dt below 1e-12 through its
/// exponentially degenerate w).
pub fn suggested_dt(state: &FlowState, cfg: &FlowConfig) -> Result<f64> {
    let field = state.speed_field()?;
    let sup = state.sup_distance();
    let threshold = 0.05 * sup;
    let mut d_max = 0.0f64;
    for (c, sp) in field.speeds.iter().enumerate() {
        if state.is_boundary(c) {
            continue;
        }
        let dev = (state.u[c] - state.a * state.t - state.target[c]).abs();
        if sup <= cfg.tol_converged || dev > threshold {
            d_max = d_max.max(sp.d_eff);
        }
    }
    if d_max <= 0.0 {
        return Ok(cfg.dt_max);
    }
    let h = state.domain.h();
    let n = state.domain.dim() as f64;
    Ok((cfg.dt_safety * h * h / (2.0 * n * d_max)).clamp(1e-5, cfg.dt_max))
}

/// Jacobian stencil coefficients of the speed at one node, by finite
/// differences on the *local* arguments (slope and Hessian entries), which
/// stay well-scaled even where w is 1e-9 and node-value perturbations would
/// round away.
fn radial_speed_partials(n: usize, k: usize, r: f64, y: f64, yp: f64) -> (f64, f64) {
    let base = |yy: f64, ypp: f64| radial_speed(n, k, r, yy, ypp).map_or(0.0, |s| s.s);
    let w_sq = (1.0 - y * y).max(1e-300);
    let dy = (1e-7 * w_sq / y.abs().max(0.3)).min(1e-7);
    let dyp = 1e-6 * yp.abs().max(w_sq * 1e-3).max(1e-12);
    let s_y = (base(y + dy, yp) - base(y - dy, yp)) / (2.0 * dy);
    let s_yp = (base(y, yp + dyp) - base(y, yp - dyp)) / (2.0 * dyp);
    (s_y, s_yp)
}

struct GridPartials {
    sp: f64,
    sq: f64,
    s11: f64,
    s12: f64,
    s22: f64,
}

fn grid_speed_partials(k: usize, p: f64, q: f64, h11: f64, h12: f64, h22: f64) -> GridPartials {
    let base = |pp: f64, qq: f64, a: f64, b: f64, c: f64| {
        grid_speed(k, pp, qq, a, b, c).map_or(0.0, |s| s.s)
    };
    let w_sq = (1.0 - p * p - q * q).max(1e-300);
    let dgrad = (1e-7 * w_sq / p.abs().max(q.abs()).max(0.3)).min(1e-7);
    let hscale = h11.abs().max(h22.abs()).max(h12.abs());
    let dh = 1e-6 * hscale.max(w_sq * 1e-3).max(1e-12);
    GridPartials {
        sp: (base(p + dgrad, q, h11, h12, h22) - base(p - dgrad, q, h11, h12, h22)) / (2.0 * dgrad),
        sq: (base(p, q + dgrad, h11, h12, h22) - base(p, q - dgrad, h11, h12, h22)) / (2.0 * dgrad),
        s11: (base(p, q, h11 + dh, h12, h22) - base(p, q, h11 - dh, h12, h22)) / (2.0 * dh),
        s12: (base(p, q, h11, h12 + dh, h22) - base(p, q, h11, h12 - dh, h22)) / (2.0 * dh),
        s22: (base(p, q, h11, h12, h22 + dh) - base(p, q, h11, h12, h22 - dh)) / (2.0 * dh),
    }
}

/// One backward-Euler attempt at step size dt. Returns false when the step
/// must be rejected (Newton failure or margin loss).
fn advance(state: &mut FlowState, dt: f64) -> Result<bool> {
    let t_next = state.t + dt;
    let u_prev = state.u.clone();
    // pin boundary to its Dirichlet data at t_next; seed the interior with
    // the uniform translation (exact on the translator), which keeps the
    // first Newton iterate spacelike next to the moving boundary
    let nn = state.u.len();
    for c in 0..nn {
        if state.is_boundary(c) {
            state.u[c] = state.boundary_base[c] + state.a * t_next;
        } else {
            state.u[c] = u_prev[c] + state.a * dt;
        }
    }
    let ok = match state.domain {
        FlowDomain::Radial { .. } => newton_radial(state, &u_prev, dt)?,
        FlowDomain::Grid { .. } => newton_grid(state, &u_prev, dt)?,
    };
    if !ok {
        state.u = u_prev;
        return Ok(false);
    }
    match state.speed_field() {
        Ok(field) => {
            if field.min_margin < 0.5 * state.initial_margin || !field.any_unflagged {
                state.u = u_prev;
                return Ok(false);
            }
        }
        Err(_) => {
            state.u = u_prev;
            return Ok(false);
        }
    }
    state.t = t_next;
    Ok(true)
}

fn newton_radial(state: &mut FlowState, u_prev: &[f64], dt: f64) -> Result<bool> {
    let (n, nodes) = match state.domain {
        FlowDomain::Radial { n, nodes, .. } => (n, nodes),
        _ => unreachable!(),
    };
    let h = state.domain.h();
    let scale = state.u.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for _iter in 0..30 {
        let mut lower = vec![0.0; nodes];
        let mut diag = vec![1.0; nodes];
        let mut upper = vec![0.0; nodes];
        let mut rhs = vec![0.0; nodes];
        let mut g_norm = 0.0f64;
        for i in 0..nodes - 1 {
            let (y, yp, r) = if i == 0 {
                (0.0, 2.0 * (state.u[1] - state.u[0]) / (h * h), 0.0)
            } else {
                (
                    (state.u[i + 1] - state.u[i - 1]) / (2.0 * h),
                    (state.u[i + 1] - 2.0 * state.u[i] + state.u[i - 1]) / (h * h),
                    i as f64 * h,
                )
            };
            let sp = match radial_speed(n, state.k, r, y, yp) {
                Some(sp) => sp,
                None => return Ok(false),
            };
            let g = state.u[i] - u_prev[i] - dt * sp.s;
            g_norm = g_norm.max(g.abs());
            rhs[i] = -g;
            let (s_y, s_yp) = radial_speed_partials(n, state.k, r, y, yp);
            if i == 0 {
                // vertex: yp = 2(u1 - u0)/h², y fixed at 0 by symmetry
                diag[0] = 1.0 - dt * s_yp * (-2.0 / (h * h));
                upper[0] = -dt * s_yp * (2.0 / (h * h));
            } else {
                lower[i] = -dt * (-s_y / (2.0 * h) + s_yp / (h * h));
                diag[i] = 1.0 - dt * (-2.0 * s_yp / (h * h));
                upper[i] = -dt * (s_y / (2.0 * h) + s_yp / (h * h));
            }
        }
        // boundary row: identity, zero correction
        if g_norm <= 1e-12 * scale.max(1.0) {
            return Ok(true);
        }
        let delta = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
        let mut step_norm = 0.0f64;
        for i in 0..nodes - 1 {
            state.u[i] += delta[i];
            step_norm = step_norm.max(delta[i].abs());
        }
        if step_norm <= 1e-13 * scale.max(1.0) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn newton_grid(state: &mut FlowState, u_prev: &[f64], dt: f64) -> Result<bool> {
    let nx = match state.domain {
        FlowDomain::Grid { nx, .. } => nx,
        _ => unreachable!(),
    };
    let h = state.domain.h();
    let nn = nx * nx;
    let scale = state.u.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    // stencil coefficient fields of J = I - dt·∂S (row-major, interior only)
    let mut c_c = vec![1.0; nn];
    let mut c_e = vec![0.0; nn];
    let mut c_w = vec![0.0; nn];
    let mut c_n = vec![0.0; nn];
    let mut c_s = vec![0.0; nn];
    let mut c_d = vec![0.0; nn]; // corner (diagonal) coefficient magnitude for NE/SW (+) and NW/SE (-)
    let mut rhs = vec![0.0; nn];
    let mut delta = vec![0.0; nn];

    for _iter in 0..30 {
        let mut g_norm = 0.0f64;
        for j in 1..nx - 1 {
            for i in 1..nx - 1 {
                let c = i + nx * j;
                let p = (state.u[c + 1] - state.u[c - 1]) / (2.0 * h);
                let q = (state.u[c + nx] - state.u[c - nx]) / (2.0 * h);
                let h11 = (state.u[c + 1] - 2.0 * state.u[c] + state.u[c - 1]) / (h * h);
                let h22 = (state.u[c + nx] - 2.0 * state.u[c] + state.u[c - nx]) / (h * h);
                let h12 = (state.u[c + nx + 1] + state.u[c - nx - 1]
                    - state.u[c + nx - 1]
                    - state.u[c - nx + 1])
                    / (4.0 * h * h);
                let sp = match grid_speed(state.k, p, q, h11, h12, h22) {
                    Some(sp) => sp,
                    None => return Ok(false),
                };
                let g = state.u[c] - u_prev[c] - dt * sp.s;
                g_norm = g_norm.max(g.abs());
                rhs[c] = -g;
                let pd = grid_speed_partials(state.k, p, q, h11, h12, h22);
                c_c[c] = 1.0 - dt * (-2.0 * (pd.s11 + pd.s22) / (h * h));
                c_e[c] = -dt * (pd.sp / (2.0 * h) + pd.s11 / (h * h));
                c_w[c] = -dt * (-pd.sp / (2.0 * h) + pd.s11 / (h * h));
                c_n[c] = -dt * (pd.sq / (2.0 * h) + pd.s22 / (h * h));
                c_s[c] = -dt * (-pd.sq / (2.0 * h) + pd.s22 / (h * h));
                c_d[c] = -dt * (pd.s12 / (4.0 * h * h));
            }
        }
        if g_norm <= 1e-12 * scale.max(1.0) {
            return Ok(true);
        }
        // matrix-free 9-point application of J
        let apply = |x: &[f64], y: &mut [f64]| {
            for j in 0..nx {
                for i in 0..nx {
                    let c = i + nx * j;
                    if i == 0 || j == 0 || i + 1 == nx || j + 1 == nx {
                        y[c] = x[c];
                        continue;
                    }
                    y[c] = c_c[c] * x[c]
                        + c_e[c] * x[c + 1]
                        + c_w[c] * x[c - 1]
                        + c_n[c] * x[c + nx]
                        + c_s[c] * x[c - nx]
                        + c_d[c] * (x[c + nx + 1] + x[c - nx - 1] - x[c + nx - 1] - x[c - nx + 1]);
                }
            }
        };
        // line-implicit (x then y) preconditioner built from the same rows
        let precond = |r: &[f64], out: &mut Vec<f64>| {
            let mut tmp = vec![0.0; nn];
            // x-lines
            for j in 0..nx {
                let mut lo = vec![0.0; nx];
                let mut di = vec![1.0; nx];
                let mut up = vec![0.0; nx];
                let mut b = vec![0.0; nx];
                for i in 0..nx {
                    let c = i + nx * j;
                    b[i] = r[c];
                    if i == 0 || j == 0 || i + 1 == nx || j + 1 == nx {
                        continue;
                    }
                    lo[i] = c_w[c];
                    di[i] = c_c[c] * 0.5 + 0.5; // split the identity between the two factors
                    up[i] = c_e[c];
                }
                if let Ok(sol) = solve_tridiagonal(&lo, &di, &up, &b) {
                    for i in 0..nx {
                        tmp[i + nx * j] = sol[i];
                    }
                } else {
                    tmp[(nx * j)..(nx * (j + 1))].copy_from_slice(&r[(nx * j)..(nx * (j + 1))]);
                }
            }
            // y-lines
            for i in 0..nx {
                let mut lo = vec![0.0; nx];
                let mut di = vec![1.0; nx];
                let mut up = vec![0.0; nx];
                let mut b = vec![0.0; nx];
                for j in 0..nx {
                    let c = i + nx * j;
                    b[j] = tmp[c];
                    if i == 0 || j == 0 || i + 1 == nx || j + 1 == nx {
                        continue;
                    }
                    lo[j] = c_s[c];
                    di[j] = c_c[c] * 0.5 + 0.5;
                    up[j] = c_n[c];
                }
                if let Ok(sol) = solve_tridiagonal(&lo, &di, &up, &b) {
                    for j in 0..nx {
                        out[i + nx * j] = sol[j];
                    }
                } else {
                    for j in 0..nx {
                        out[i + nx * j] = tmp[i + nx * j];
                    }
                }
            }
        };
        // BiCGStab with the line preconditioner folded into the operator:
        // solve (J M^{-1}) z = rhs, then delta = M^{-1} z
        let mut apply_right = |x: &[f64], y: &mut [f64]| {
            let mut mx = vec![0.0; nn];
            precond(x, &mut mx);
            apply(&mx, y);
        };
        let inv_diag = vec![1.0; nn];
        for d in delta.iter_mut() {
            *d = 0.0;
        }
        let out = bicgstab(&mut apply_right, &inv_diag, &rhs, &mut delta, 1e-10, 500);
        if !out.converged {
            return Ok(false);
        }
        let mut mx = vec![0.0; nn];
        precond(&delta, &mut mx);
        let mut step_norm = 0.0f64;
        for j in 1..nx - 1 {
            for i in 1..nx - 1 {
                let c = i + nx * j;
                state.u[c] += mx[c];
                step_norm = step_norm.max(mx[c].abs());
            }
        }
        if step_norm <= 1e-13 * scale.max(1.0) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// One flow step with the adaptive schedule: seed dt from the curvature
/// formula, halve on rejection (at most 20 times), grow on success. Returns
/// the dt actually taken.
pub fn step(state: &mut FlowState, cfg: &FlowConfig) -> Result<f64> {
    cfg.validate()?;
    if state.dt <= 0.0 {
        state.dt = suggested_dt(state, cfg)?;
    }
    let mut dt = state.dt.min(cfg.dt_max).min((cfg.t_end - state.t).max(1e-12));
    for _ in 0..20 {
        if advance(state, dt)? {
            state.dt = (dt * 1.3).min(cfg.dt_max);
            return Ok(dt);
        }
        dt *= 0.5;
    }
    Err(CoreError::Stiffness(format!(
        "step rejected after 20 halvings at t = {}, dt = {dt:.3e}, sup_dist = {:.3e}",
        state.t,
        state.sup_distance()
    )))
}

/// Optional comparison envelopes for a run (static heights at t = 0).
pub struct Envelopes {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub converged: bool,
    /// sup-distance nonincreasing between checkpoints (slack 1e-6).
    pub monotone: bool,
    pub final_sup_dist: f64,
    pub initial_max_ratio: f64,
    pub max_ratio_seen: f64,
    pub steps: usize,
    pub final_t: f64,
}

/// Run the normalized flow until sup|ũ - u^∞| ≤ tol_converged or t ≥ t_end,
/// recording history and checking the sandwich at every checkpoint.
pub fn run_normalized(
    state: &mut FlowState,
    cfg: &FlowConfig,
    envelopes: Option<&Envelopes>,
) -> Result<RunOutcome> {
    cfg.validate()?;
    let row0 = state.history_row()?;
    let initial_max_ratio = row0.max_phi_over_v;
    let mut max_ratio_seen = initial_max_ratio;
    let mut monotone = true;
    let mut last_dist = row0.sup_dist;
    state.history.push(row0);
    if let Some(env) = envelopes {
        sandwich_check(state, &env.lower, &env.upper)?;
    }
    let mut next_checkpoint = cfg.checkpoint_interval;
    let mut steps = 0usize;
    let mut converged = state.sup_distance() <= cfg.tol_converged;
    while !converged && state.t < cfg.t_end - 1e-12 {
        step(state, cfg)?;
        steps += 1;
        let dist = state.sup_distance();
        converged = dist <= cfg.tol_converged;
        if state.t >= next_checkpoint - 1e-12 || converged || state.t >= cfg.t_end - 1e-12 {
            let row = state.history_row()?;
            if row.sup_dist > last_dist + 1e-6 {
                monotone = false;
            }
            last_dist = row.sup_dist;
            max_ratio_seen = max_ratio_seen.max(row.max_phi_over_v);
            state.history.push(row);
            if let Some(env) = envelopes {
                sandwich_check(state, &env.lower, &env.upper)?;
            }
            while next_checkpoint <= state.t {
                next_checkpoint += cfg.checkpoint_interval;
            }
        }
    }
    Ok(RunOutcome {
        converged,
        monotone,
        final_sup_dist: state.sup_distance(),
        initial_max_ratio,
        max_ratio_seen,
        steps,
        final_t: state.t,
    })
}

/// Write the run history CSV
/// (`t,sup_dist,min_margin,max_phi_over_v,flagged_fraction`).
pub fn write_history_csv<W: Write>(history: &[HistoryRow], mut out: W) -> Result<()> {
    writeln!(out, "t,sup_dist,min_margin,max_phi_over_v,flagged_fraction")?;
    for row in history {
        writeln!(
            out,
            "{},{},{},{},{}",
            crate::fmt_g17(row.t),
            crate::fmt_g17(row.sup_dist),
            crate::fmt_g17(row.min_margin),
            crate::fmt_g17(row.max_phi_over_v),
            crate::fmt_g17(row.flagged_fraction),
        )?;
    }
    Ok(())
}

/// Radial snapshot in the profile CSV layout, with y and z derived by
/// central differences from the current heights.
pub fn write_radial_snapshot_csv<W: Write>(state: &FlowState, mut out: W) -> Result<()> {
    let (nodes, k) = match state.domain {
        FlowDomain::Radial { nodes, .. } => (nodes, state.k),
        _ => {
            return Err(CoreError::Parameter(
                "radial snapshot requested for a grid state".into(),
            ))
        }
    };
    let h = state.domain.h();
    writeln!(out, "r,z,y,u,C_of_r")?;
    for i in 0..nodes {
        let y = if i == 0 || i + 1 == nodes {
            0.0
        } else {
            (state.u[i + 1] - state.u[i - 1]) / (2.0 * h)
        };
        let z = y.abs().powi(k as i32) * y.signum().powi(k as i32);
        writeln!(
            out,
            "{},{},{},{},{}",
            crate::fmt_g17(i as f64 * h),
            crate::fmt_g17(z),
            crate::fmt_g17(y),
            crate::fmt_g17(state.u[i]),
            crate::fmt_g17(0.0),
        )?;
    }
    Ok(())
}

/// Grid snapshot CSV (`x1,x2,u`).
pub fn write_grid_snapshot_csv<W: Write>(state: &FlowState, mut out: W) -> Result<()> {
    let (l, nx) = match state.domain {
        FlowDomain::Grid { l, nx } => (l, nx),
        _ => {
            return Err(CoreError::Parameter(
                "grid snapshot requested for a radial state".into(),
            ))
        }
    };
    let h = state.domain.h();
    writeln!(out, "x1,x2,u")?;
    for j in 0..nx {
        for i in 0..nx {
            writeln!(
                out,
                "{},{},{}",
                crate::fmt_g17(-l + i as f64 * h),
                crate::fmt_g17(-l + j as f64 * h),
                crate::fmt_g17(state.u[i + nx * j]),
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{limit_profile, RadialParams};

    fn profile(n: usize, k: usize, r_max: f64) -> RadialProfile {
        limit_profile(&RadialParams::new(n, k, 1.0, r_max, 1e-11).unwrap()).unwrap()
    }

    #[test]
    fn radial_fixed_point_stays_put() {
        // translator initial data: ũ unchanged to 1e-6 per unit time
        for (n, k, r_max) in [(2usize, 1usize, 4.0f64), (2, 2, 2.5)] {
            let prof = profile(n, k, r_max);
            let mut state = FlowState::new_radial(&prof, 8193, None).unwrap();
            let cfg = FlowConfig {
                t_end: 1.0,
                tol_converged: 1e-9,
                dt_max: 0.25,
                ..Default::default()
            };
            while state.t < 1.0 - 1e-9 {
                step(&mut state, &cfg).unwrap();
            }
            let drift = state.sup_distance();
            assert!(drift <= 1e-6, "(n,k)=({n},{k}): drift {drift}");
        }
    }

    #[test]
    fn bump_decays_monotonically_radial() {
        let prof = profile(2, 1, 4.0);
        let interp = prof.interpolant().unwrap();
        let u0 = move |r: f64| interp.u.eval(r.min(4.0)).unwrap() + 0.2 * (-r * r).exp();
        let mut state = FlowState::new_radial(&prof, 2049, Some(&u0)).unwrap();
        let cfg = FlowConfig {
            t_end: 30.0,
            tol_converged: 1e-3,
            ..Default::default()
        };
        let out = run_normalized(&mut state, &cfg, None).unwrap();
        assert!(out.converged, "final dist {}", out.final_sup_dist);
        assert!(out.monotone);
        assert!(out.final_t < 30.0);
        // one-step contraction was recorded from the very first checkpoint
        assert!(state.history.len() >= 3);
    }

    #[test]
    fn supersolution_data_descends() {
        // q₂-style data: translator + positive constant 2M descends toward
        // the translator (constants are exact supersolution shifts)
        let prof = profile(2, 2, 2.5);
        let interp = prof.interpolant().unwrap();
        let u0 = move |r: f64| interp.u.eval(r.min(2.5)).unwrap() + 0.4 * (-0.5 * r * r).exp();
        let mut state = FlowState::new_radial(&prof, 2049, Some(&u0)).unwrap();
        let cfg = FlowConfig {
            t_end: 30.0,
            tol_converged: 2e-3,
            ..Default::default()
        };
        let out = run_normalized(&mut state, &cfg, None).unwrap();
        assert!(out.converged);
        assert!(out.monotone);
    }

    #[test]
    fn backward_euler_consistency_order() {
        // two half-steps vs one step differ by O(dt²): Richardson order ≥ 1.9
        let prof = profile(2, 1, 3.0);
        let interp = prof.interpolant().unwrap();
        let u0 = move |r: f64| interp.u.eval(r.min(3.0)).unwrap() + 0.1 * (-r * r).exp();
        let base = FlowState::new_radial(&prof, 1025, Some(&u0)).unwrap();
        let run_dt = |dt: f64, substeps: usize| -> Vec<f64> {
            let mut s = base.clone();
            for _ in 0..substeps {
                assert!(advance(&mut s, dt / substeps as f64).unwrap());
            }
            s.u
        };
        let dt = 0.02;
        let u1 = run_dt(dt, 1);
        let u2 = run_dt(dt, 2);
        let u4 = run_dt(dt, 4);
        let diff = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max)
        };
        let d12 = diff(&u1, &u2);
        let d24 = diff(&u2, &u4);
        let order = (d12 / d24).log2();
        assert!(order >= 1.9, "measured temporal order {order} ({d12} vs {d24})");
    }

    #[test]
    fn sandwich_holds_and_detects_corruption() {
        let prof = profile(2, 1, 4.0);
        let interp = prof.interpolant().unwrap();
        let bump = 0.2;
        let u0 = move |r: f64| interp.u.eval(r.min(4.0)).unwrap() + bump * (-r * r).exp();
        let mut state = FlowState::new_radial(&prof, 2049, Some(&u0)).unwrap();
        let lower = state.target.clone();
        let upper: Vec<f64> = state.target.iter().map(|v| v + bump).collect();
        let cfg = FlowConfig {
            t_end: 10.0,
            tol_converged: 1e-3,
            ..Default::default()
        };
        let env = Envelopes {
            lower: lower.clone(),
            upper: upper.clone(),
        };
        run_normalized(&mut state, &cfg, Some(&env)).unwrap();

        // negative control: inject a 1e-2 error and expect detection
        state.u[100] += 1e-2 + bump;
        assert!(matches!(
            sandwich_check(&state, &lower, &upper),
            Err(CoreError::Comparison(_))
        ));
        // mis-ordered envelopes are a parameter error
        assert!(matches!(
            sandwich_check(&state, &upper, &lower),
            Err(CoreError::Parameter(_))
        ));
    }

    #[test]
    fn speed_support_ratio_on_translator_and_bump() {
        // exact translator: Φ/v = w·Φ = a up to the FD truncation
        let prof = profile(2, 1, 4.0);
        let state = FlowState::new_radial(&prof, 8193, None).unwrap();
        let ratio = state.speed_support_ratio().unwrap();
        assert!((ratio - 1.0).abs() < 1e-5, "ratio {ratio}");

        // bump run: ratio bounded by its initial max + 1e-3
        let interp = prof.interpolant().unwrap();
        let u0 = move |r: f64| interp.u.eval(r.min(4.0)).unwrap() + 0.2 * (-r * r).exp();
        let mut state = FlowState::new_radial(&prof, 2049, Some(&u0)).unwrap();
        let cfg = FlowConfig {
            t_end: 10.0,
            tol_converged: 1e-3,
            ..Default::default()
        };
        let out = run_normalized(&mut state, &cfg, None).unwrap();
        assert!(
            out.max_ratio_seen <= out.initial_max_ratio + 1e-3,
            "ratio rose from {} to {}",
            out.initial_max_ratio,
            out.max_ratio_seen
        );
    }

    #[test]
    fn admissibility_reports() {
        // translator with k = 1: σ_1/v = n·a exactly, admissible for C ≥ n·a
        let prof = profile(2, 1, 4.0);
        let state = FlowState::new_radial(&prof, 4097, None).unwrap();
        let rep = check_initial_admissible(&state, 2.0 + 1e-4).unwrap();
        assert!(rep.strictly_convex && rep.positive_sigma_k);
        assert!(
            (rep.max_sigma_k_over_v - 2.0).abs() < 1e-4,
            "ratio {}",
            rep.max_sigma_k_over_v
        );
        assert!(rep.admissible);
        let rep = check_initial_admissible(&state, 1.5).unwrap();
        assert!(!rep.admissible);
        // implied velocity range: C·C(n,k)^{-1/k}
        assert!((rep.admissible_velocity_max - 1.5 / 2.0).abs() < 1e-12);

        // perturbed translator: finite ratio, still admissible for large C
        let interp = prof.interpolant().unwrap();
        let u0 = move |r: f64| interp.u.eval(r.min(4.0)).unwrap() + 0.05 * (-r * r).exp();
        let state = FlowState::new_radial(&prof, 4097, Some(&u0)).unwrap();
        let rep = check_initial_admissible(&state, 50.0).unwrap();
        assert!(rep.max_sigma_k_over_v.is_finite());
    }

    #[test]
    fn grid_fixed_point_and_bump_decay() {
        let prof = profile(2, 1, 4.0);
        // fixed point at h = 1/16 on [-2,2]²: drift ≤ 5e-3 per unit time
        let mut state = FlowState::new_grid(&prof, 2.0, 65, None).unwrap();
        let cfg = FlowConfig {
            t_end: 0.5,
            tol_converged: 1e-9,
            dt_max: 0.1,
            ..Default::default()
        };
        while state.t < 0.5 - 1e-9 {
            step(&mut state, &cfg).unwrap();
        }
        let drift = state.sup_distance();
        assert!(drift <= 2.5e-3, "grid drift {drift}");

        // small bump decays
        let interp = prof.interpolant().unwrap();
        let u0 = move |x: f64, y: f64| {
            let r = x.hypot(y);
            interp.u.eval(r.min(4.0)).unwrap() + 0.1 * (-r * r).exp()
        };
        let mut state = FlowState::new_grid(&prof, 2.0, 65, Some(&u0)).unwrap();
        let cfg = FlowConfig {
            t_end: 20.0,
            tol_converged: 8e-3,
            dt_max: 0.1,
            ..Default::default()
        };
        let out = run_normalized(&mut state, &cfg, None).unwrap();
        assert!(out.converged, "final dist {}", out.final_sup_dist);
    }

    #[test]
    fn history_csv_layout() {
        let prof = profile(2, 1, 3.0);
        let mut state = FlowState::new_radial(&prof, 257, None).unwrap();
        let cfg = FlowConfig {
            t_end: 0.2,
            tol_converged: 1e-12,
            ..Default::default()
        };
        let _ = run_normalized(&mut state, &cfg, None);
        let mut buf = Vec::new();
        write_history_csv(&state.history, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,sup_dist,min_margin,max_phi_over_v,flagged_fraction\n"));
    }
}


//! Discrete differential geometry of spacelike graphs u: ℝ² → ℝ in
//! Minkowski space, on uniform Cartesian grids.
//!
//! With w = sqrt(1 - |Du|²) and γ^{ik} = δ_{ik} + u_i u_k / (w(1+w)),
//! the shape operator of the graph is
//!
//! ```text
//!     A = (1/w) γ D²u γ,
//! ```
//!
//! whose eigenvalues are the principal curvatures κ[M_u]. The curvature
//! speed is Φ = (σ_k(κ)/C(n,k))^{1/k} and the support function is
//! v = -⟨ν, E⟩ = 1/w.

use crate::error::{CoreError, Result};
use crate::radial::RadialProfile;
use crate::symfunc::{self, CurvatureVector};
use std::io::Write;

/// Default spacelike margin required of grid data: max |Du| ≤ 1 - margin.
/// Translator data pinned near its asymptotic cone legitimately reaches
/// margins of 1e-9 at desk-scale radii, so constructors accept an override.
pub const DEFAULT_SPACELIKE_MARGIN: f64 = 1e-3;

/// Values of a spacelike graph on a uniform grid over [-L, L]².
#[derive(Debug, Clone)]
pub struct GraphFunction {
    /// Domain half-width.
    pub l: f64,
    /// Grid spacing, h = 2L/(nx-1).
    pub h: f64,
    /// Nodes per side.
    pub nx: usize,
    /// Row-major values, index i + nx*j for x = -L + i h, y = -L + j h.
    pub values: Vec<f64>,
}

impl GraphFunction {
    pub fn from_values(l: f64, nx: usize, values: Vec<f64>, margin: f64) -> Result<Self> {
        if nx < 5 {
            return Err(CoreError::Parameter("grid needs at least 5 nodes per side".into()));
        }
        if values.len() != nx * nx {
            return Err(CoreError::Parameter(format!(
                "value count {} != nx² = {}",
                values.len(),
                nx * nx
            )));
        }
        if !(l > 0.0) {
            return Err(CoreError::Parameter(format!("half-width L = {l} must be positive")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::Parameter("graph values must be finite".into()));
        }
        let g = Self {
            l,
            h: 2.0 * l / (nx - 1) as f64,
            nx,
            values,
        };
        let max_grad = g.max_gradient_norm();
        if max_grad > 1.0 - margin {
            return Err(CoreError::Spacelike(format!(
                "max discrete |Du| = {max_grad} exceeds 1 - margin = {}",
                1.0 - margin
            )));
        }
        Ok(g)
    }

    pub fn from_fn(l: f64, nx: usize, margin: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let h = 2.0 * l / (nx - 1) as f64;
        let mut values = Vec::with_capacity(nx * nx);
        for j in 0..nx {
            for i in 0..nx {
                values.push(f(-l + i as f64 * h, -l + j as f64 * h));
            }
        }
        Self::from_values(l, nx, values, margin)
    }

    /// Radial profile sampled as a grid graph u(x) = u_prof(|x|) + offset.
    pub fn from_radial(
        profile: &RadialProfile,
        l: f64,
        nx: usize,
        offset: f64,
        margin: f64,
    ) -> Result<Self> {
        let corner = l * std::f64::consts::SQRT_2;
        if corner > profile.params.r_max * (1.0 + 1e-12) {
            return Err(CoreError::Extrapolation(format!(
                "grid corner radius {corner} exceeds profile range {}",
                profile.params.r_max
            )));
        }
        let interp = profile.interpolant()?;
        let h = 2.0 * l / (nx - 1) as f64;
        let mut values = Vec::with_capacity(nx * nx);
        for j in 0..nx {
            for i in 0..nx {
                let (x, y) = (-l + i as f64 * h, -l + j as f64 * h);
                values.push(interp.u.eval(x.hypot(y).min(profile.params.r_max))? + offset);
            }
        }
        Self::from_values(l, nx, values, margin)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        -self.l + i as f64 * self.h
    }

    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        i >= 1 && j >= 1 && i + 1 < self.nx && j + 1 < self.nx
    }

    /// Largest centered-difference gradient norm over interior nodes.
    pub fn max_gradient_norm(&self) -> f64 {
        let mut max = 0.0f64;
        for j in 1..self.nx - 1 {
            for i in 1..self.nx - 1 {
                let (du, _) = self.gradient_hessian_unchecked(i, j);
                max = max.max(du[0].hypot(du[1]));
            }
        }
        max
    }

    pub(crate) fn gradient_hessian_unchecked(&self, i: usize, j: usize) -> ([f64; 2], [[f64; 2]; 2]) {
        let v = &self.values;
        let n = self.nx;
        let c = self.idx(i, j);
        let (e, w_) = (v[c + 1], v[c - 1]);
        let (no, so) = (v[c + n], v[c - n]);
        let (ne, nw) = (v[c + n + 1], v[c + n - 1]);
        let (se, sw) = (v[c - n + 1], v[c - n - 1]);
        let h = self.h;
        let du = [(e - w_) / (2.0 * h), (no - so) / (2.0 * h)];
        let uxx = (e - 2.0 * v[c] + w_) / (h * h);
        let uyy = (no - 2.0 * v[c] + so) / (h * h);
        let uxy = (ne + sw - nw - se) / (4.0 * h * h);
        (du, [[uxx, uxy], [uxy, uyy]])
    }
}

/// Second-order central differences at an interior node; the Hessian is
/// symmetric by construction of the cross stencil.
pub fn discrete_gradient_hessian(
    g: &GraphFunction,
    i: usize,
    j: usize,
) -> Result<([f64; 2], [[f64; 2]; 2])> {
    if !g.is_interior(i, j) {
        return Err(CoreError::Parameter(format!(
            "node ({i},{j}) is not interior to the {0}x{0} grid",
            g.nx
        )));
    }
    Ok(g.gradient_hessian_unchecked(i, j))
}

/// Shape operator A = (1/w) γ D²u γ for arbitrary dimension; `du` has n
/// entries and `d2u` is row-major n×n.
pub fn shape_operator_nd(du: &[f64], d2u: &[f64]) -> Result<Vec<f64>> {
    let n = du.len();
    if d2u.len() != n * n {
        return Err(CoreError::Parameter("Hessian size mismatch".into()));
    }
    let grad_sq: f64 = du.iter().map(|x| x * x).sum();
    if grad_sq >= 1.0 {
        return Err(CoreError::Spacelike(format!(
            "|Du|² = {grad_sq} >= 1"
        )));
    }
    let w = (1.0 - grad_sq).sqrt();
    let denom = w * (1.0 + w);
    // γ = I + Du Duᵀ / (w(1+w))
    let gamma = |i: usize, k: usize| -> f64 {
        (if i == k { 1.0 } else { 0.0 }) + du[i] * du[k] / denom
    };
    let mut tmp = vec![0.0; n * n]; // γ D²u
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += gamma(i, k) * d2u[k * n + j];
            }
            tmp[i * n + j] = acc;
        }
    }
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += tmp[i * n + k] * gamma(k, j);
            }
            a[i * n + j] = acc / w;
        }
    }
    // symmetrize against roundoff
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
    Ok(a)
}

/// 2×2 convenience wrapper for grid work.
pub fn shape_operator(du: [f64; 2], d2u: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let a = shape_operator_nd(&du, &[d2u[0][0], d2u[0][1], d2u[1][0], d2u[1][1]])?;
    Ok([[a[0], a[1]], [a[2], a[3]]])
}

/// Principal curvatures (ascending) from analytic or discrete graph data.
pub fn principal_curvatures_nd(du: &[f64], d2u: &[f64]) -> Result<CurvatureVector> {
    let a = shape_operator_nd(du, d2u)?;
    symfunc::symmetric_eigenvalues(&a, du.len())
}

/// Per-node curvature data over the interior of a grid graph.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    pub nx: usize,
    pub h: f64,
    pub l: f64,
    pub k: usize,
    /// Principal curvatures ascending; boundary ring carries NaN.
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
    pub w: Vec<f64>,
    /// Support function v = 1/w ≥ 1.
    pub v: Vec<f64>,
    /// Normalized speed Φ = (σ_k/C(n,k))^{1/k}; 0 at flagged nodes.
    pub phi: Vec<f64>,
    /// Nodes failing k-convexity (some σ_j ≤ 0, j ≤ k).
    pub flagged: Vec<bool>,
}

impl CurvatureField {
    /// Interior nodes at least `band` nodes away from the boundary; the
    /// sup-norm statistics exclude a band of width 2h.
    pub fn stats_nodes(&self, band: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nx = self.nx;
        (band..nx - band)
            .flat_map(move |j| (band..nx - band).map(move |i| (i, j)))
    }

    pub fn flagged_fraction(&self) -> f64 {
        let mut total = 0usize;
        let mut flagged = 0usize;
        for (i, j) in self.stats_nodes(2) {
            total += 1;
            if self.flagged[i + self.nx * j] {
                flagged += 1;
            }
        }
        flagged as f64 / total.max(1) as f64
    }

    pub fn max_phi_over_v(&self) -> f64 {
        let mut max = 0.0f64;
        for (i, j) in self.stats_nodes(2) {
            let c = i + self.nx * j;
            max = max.max(self.phi[c] / self.v[c]);
        }
        max
    }
}

/// Curvatures, Lorentz factor, support function, and speed Φ at every
/// interior node. Nodes that fail k-convexity are flagged with Φ = 0 rather
/// than aborting; callers bound the flagged fraction.
pub fn curvature_field(g: &GraphFunction, k: usize) -> Result<CurvatureField> {
    if k == 0 || k > 2 {
        return Err(CoreError::Parameter(format!("grid path requires 1 <= k <= 2, got {k}")));
    }
    let nx = g.nx;
    let nan = f64::NAN;
    let mut field = CurvatureField {
        nx,
        h: g.h,
        l: g.l,
        k,
        kappa1: vec![nan; nx * nx],
        kappa2: vec![nan; nx * nx],
        w: vec![nan; nx * nx],
        v: vec![nan; nx * nx],
        phi: vec![0.0; nx * nx],
        flagged: vec![false; nx * nx],
    };
    let mut any_ok = false;
    for j in 1..nx - 1 {
        for i in 1..nx - 1 {
            let (du, d2u) = g.gradient_hessian_unchecked(i, j);
            let grad_sq = du[0] * du[0] + du[1] * du[1];
            if grad_sq >= 1.0 {
                return Err(CoreError::Spacelike(format!(
                    "|Du| >= 1 at node ({i},{j})"
                )));
            }
            let a = shape_operator(du, d2u)?;
            let [k1, k2] = symfunc::eigen2(a[0][0], a[0][1], a[1][1]);
            let w = (1.0 - grad_sq).sqrt();
            let c = g.idx(i, j);
            field.kappa1[c] = k1;
            field.kappa2[c] = k2;
            field.w[c] = w;
            field.v[c] = 1.0 / w;
            let s1 = k1 + k2;
            let s2 = k1 * k2;
            let k_convex = if k == 1 { s1 > 0.0 } else { s1 > 0.0 && s2 > 0.0 };
            if k_convex {
                field.phi[c] = if k == 1 {
                    0.5 * s1
                } else {
                    s2.sqrt()
                };
                any_ok = true;
            } else {
                field.flagged[c] = true;
            }
        }
    }
    if !any_ok {
        return Err(CoreError::Domain(
            "curvature field degenerate: every interior node fails k-convexity".into(),
        ));
    }
    Ok(field)
}

/// Sup-norm residual of the translator equation, sup |a/w - Φ| over interior
/// nodes excluding the 2h boundary band.
pub fn translator_residual(g: &GraphFunction, k: usize, a: f64) -> Result<f64> {
    let field = curvature_field(g, k)?;
    let mut sup = 0.0f64;
    for (i, j) in field.stats_nodes(2) {
        let c = i + field.nx * j;
        sup = sup.max((a / field.w[c] - field.phi[c]).abs());
    }
    Ok(sup)
}

/// Write the curvature field CSV (`x1,x2,kappa1,kappa2,w,Phi`), interior
/// nodes only.
pub fn write_curvature_csv<W: Write>(field: &CurvatureField, mut out: W) -> Result<()> {
    writeln!(out, "x1,x2,kappa1,kappa2,w,Phi")?;
    for j in 1..field.nx - 1 {
        for i in 1..field.nx - 1 {
            let c = i + field.nx * j;
            writeln!(
                out,
                "{},{},{},{},{},{}",
                crate::fmt_g17(-field.l + i as f64 * field.h),
                crate::fmt_g17(-field.l + j as f64 * field.h),
                crate::fmt_g17(field.kappa1[c]),
                crate::fmt_g17(field.kappa2[c]),
                crate::fmt_g17(field.w[c]),
                crate::fmt_g17(field.phi[c]),
            )?;
        }
    }
    Ok(())
}

//! Convex conjugation of spacelike graphs and residual verification of the
//! dual translator equation.
//!
//! For strictly convex spacelike u, the Legendre transform
//! u*(ξ) = sup_x (x·ξ - u(x)) lives on a disc |ξ| < 1, and the translator
//! equation turns into
//!
//! ```text
//!     F_*(w* γ* D²u* γ*) = (1/a) C(n,k)^{-1/k} sqrt(1 - |ξ|²),
//! ```
//!
//! with w* = sqrt(1 - |ξ|²), γ*_{ij} = δ_{ij} - ξ_i ξ_j/(1 + w*) and
//! F_* = (σ_n/σ_{n-k})^{1/k} of the eigenvalues κ* of that matrix.

use crate::error::{CoreError, Result};
use crate::geometry::GraphFunction;
use crate::interp::{cubic_weights, cubic_weights_d1, cubic_weights_d2};
use crate::symfunc::{self, binomial, CurvatureVector};
use std::io::Write;

/// Legendre transform samples on a square grid clipped to the disc of
/// radius `r_trunc` < 1.
#[derive(Debug, Clone)]
pub struct DualFunction {
    pub r_trunc: f64,
    pub h: f64,
    pub nx: usize,
    /// Row-major u*(ξ); NaN where unresolved.
    pub ustar: Vec<f64>,
    /// Inside the disc and with the conjugating maximizer interior to the
    /// primal grid.
    pub resolved: Vec<bool>,
}

impl DualFunction {
    #[inline]
    pub fn xi(&self, i: usize, j: usize) -> [f64; 2] {
        [
            -self.r_trunc + i as f64 * self.h,
            -self.r_trunc + j as f64 * self.h,
        ]
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    pub fn resolved_fraction(&self) -> f64 {
        let mut in_disc = 0usize;
        let mut ok = 0usize;
        for j in 0..self.nx {
            for i in 0..self.nx {
                let xi = self.xi(i, j);
                if xi[0].hypot(xi[1]) <= self.r_trunc {
                    in_disc += 1;
                    if self.resolved[self.idx(i, j)] {
                        ok += 1;
                    }
                }
            }
        }
        ok as f64 / in_disc.max(1) as f64
    }

    /// Analytic dual data for oracle tests.
    pub fn from_fn(r_trunc: f64, nx: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !(r_trunc > 0.0 && r_trunc < 1.0) {
            return Err(CoreError::Parameter(format!(
                "dual truncation radius {r_trunc} outside (0,1)"
            )));
        }
        let h = 2.0 * r_trunc / (nx - 1) as f64;
        let mut d = Self {
            r_trunc,
            h,
            nx,
            ustar: vec![f64::NAN; nx * nx],
            resolved: vec![false; nx * nx],
        };
        for j in 0..nx {
            for i in 0..nx {
                let xi = d.xi(i, j);
                let c = d.idx(i, j);
                if xi[0].hypot(xi[1]) <= r_trunc {
                    d.ustar[c] = f(xi[0], xi[1]);
                    d.resolved[c] = true;
                }
            }
        }
        Ok(d)
    }
}

/// Local bicubic model of grid values around a base cell; exposes value,
/// gradient, and Hessian for the Newton polish.
struct Bicubic<'a> {
    g: &'a GraphFunction,
    /// Lower-left node of the 4x4 window.
    bi: usize,
    bj: usize,
}

impl<'a> Bicubic<'a> {
    fn around(g: &'a GraphFunction, i: usize, j: usize) -> Self {
        let bi = i.saturating_sub(1).min(g.nx - 4);
        let bj = j.saturating_sub(1).min(g.nx - 4);
        Self { g, bi, bj }
    }

    /// Local coordinates (s, t) of x measured from node (bi+1, bj+1) in units
    /// of h, i.e. the stencil's interior cell.
    fn local(&self, x: [f64; 2]) -> [f64; 2] {
        [
            (x[0] - self.g.x(self.bi + 1)) / self.g.h,
            (x[1] - self.g.x(self.bj + 1)) / self.g.h,
        ]
    }

    fn tensor(&self, wx: [f64; 4], wy: [f64; 4]) -> f64 {
        let mut acc = 0.0;
        for (dj, wyv) in wy.iter().enumerate() {
            let mut row = 0.0;
            for (di, wxv) in wx.iter().enumerate() {
                row += wxv * self.g.values[self.g.idx(self.bi + di, self.bj + dj)];
            }
            acc += wyv * row;
        }
        acc
    }

    fn value(&self, x: [f64; 2]) -> f64 {
        let [s, t] = self.local(x);
        self.tensor(cubic_weights(s), cubic_weights(t))
    }

    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let [s, t] = self.local(x);
        let h = self.g.h;
        [
            self.tensor(cubic_weights_d1(s), cubic_weights(t)) / h,
            self.tensor(cubic_weights(s), cubic_weights_d1(t)) / h,
        ]
    }

    fn hessian(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let [s, t] = self.local(x);
        let h2 = self.g.h * self.g.h;
        let uxx = self.tensor(cubic_weights_d2(s), cubic_weights(t)) / h2;
        let uyy = self.tensor(cubic_weights(s), cubic_weights_d2(t)) / h2;
        let uxy = self.tensor(cubic_weights_d1(s), cubic_weights_d1(t)) / h2;
        [[uxx, uxy], [uxy, uyy]]
    }
}

fn check_strictly_convex(g: &GraphFunction) -> Result<()> {
    for j in 1..g.nx - 1 {
        for i in 1..g.nx - 1 {
            let (_, d2u) = g.gradient_hessian_unchecked(i, j);
            let det = d2u[0][0] * d2u[1][1] - d2u[0][1] * d2u[0][1];
            if !(d2u[0][0] > 0.0 && det > 0.0) {
                return Err(CoreError::Domain(format!(
                    "graph not strictly convex at node ({i},{j})"
                )));
            }
        }
    }
    Ok(())
}

/// Legendre transform of a strictly convex spacelike grid graph onto a dual
/// disc grid: discrete max over primal nodes, then a Newton polish on the
/// local bicubic model. ξ whose maximizer sits on the primal boundary are
/// marked unresolved.
pub fn legendre_transform(g: &GraphFunction, r_trunc: f64, nx_dual: usize) -> Result<DualFunction> {
    if !(r_trunc > 0.0 && r_trunc < 1.0) {
        return Err(CoreError::Parameter(format!(
            "dual truncation radius {r_trunc} outside (0,1)"
        )));
    }
    if nx_dual < 5 {
        return Err(CoreError::Parameter("dual grid needs at least 5 nodes".into()));
    }
    check_strictly_convex(g)?;
    let h_dual = 2.0 * r_trunc / (nx_dual - 1) as f64;
    let mut d = DualFunction {
        r_trunc,
        h: h_dual,
        nx: nx_dual,
        ustar: vec![f64::NAN; nx_dual * nx_dual],
        resolved: vec![false; nx_dual * nx_dual],
    };
    for j in 0..nx_dual {
        for i in 0..nx_dual {
            let xi = d.xi(i, j);
            if xi[0].hypot(xi[1]) > r_trunc {
                continue;
            }
            let c = d.idx(i, j);
            let (val, resolved) = conjugate_at(g, xi);
            d.ustar[c] = val;
            d.resolved[c] = resolved;
        }
    }
    Ok(d)
}

/// sup_x (x·ξ - u(x)) over one primal grid plus polish. Returns the value
/// and whether the maximizer was interior.
fn conjugate_at(g: &GraphFunction, xi: [f64; 2]) -> (f64, bool) {
    let mut best = f64::NEG_INFINITY;
    let (mut bi, mut bj) = (0usize, 0usize);
    for j in 0..g.nx {
        for i in 0..g.nx {
            let cand = g.x(i) * xi[0] + g.x(j) * xi[1] - g.values[g.idx(i, j)];
            if cand > best {
                best = cand;
                bi = i;
                bj = j;
            }
        }
    }
    let interior = bi >= 1 && bj >= 1 && bi + 1 < g.nx && bj + 1 < g.nx;
    if !interior {
        return (best, false);
    }
    // Newton polish on the bicubic model: solve Du(x) = ξ
    let model = Bicubic::around(g, bi, bj);
    let mut x = [g.x(bi), g.x(bj)];
    let x0 = x;
    let reach = 1.5 * g.h;
    for _ in 0..12 {
        let grad = model.gradient(x);
        let hess = model.hessian(x);
        let rx = xi[0] - grad[0];
        let ry = xi[1] - grad[1];
        let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let dx = (hess[1][1] * rx - hess[0][1] * ry) / det;
        let dy = (-hess[1][0] * rx + hess[0][0] * ry) / det;
        x[0] += dx;
        x[1] += dy;
        if (x[0] - x0[0]).abs() > reach || (x[1] - x0[1]).abs() > reach {
            // model not trustworthy that far out; keep the grid candidate
            return (best, true);
        }
        if dx.abs().max(dy.abs()) < 1e-13 * g.h.max(1.0) {
            break;
        }
    }
    let polished = x[0] * xi[0] + x[1] * xi[1] - model.value(x);
    (best.max(polished), true)
}

/// Transform a dual function back to primal values at the nodes of an
/// [-l, l]² grid (for the involution check). Uses the same max-plus-polish,
/// restricted to resolved dual nodes.
pub fn legendre_transform_back(d: &DualFunction, l: f64, nx: usize) -> Result<Vec<f64>> {
    let h = 2.0 * l / (nx - 1) as f64;
    let mut out = vec![0.0; nx * nx];
    for j in 0..nx {
        for i in 0..nx {
            let x = [-l + i as f64 * h, -l + j as f64 * h];
            let mut best = f64::NEG_INFINITY;
            let (mut bi, mut bj) = (0usize, 0usize);
            for dj in 0..d.nx {
                for di in 0..d.nx {
                    let c = d.idx(di, dj);
                    if !d.resolved[c] {
                        continue;
                    }
                    let xi = d.xi(di, dj);
                    let cand = x[0] * xi[0] + x[1] * xi[1] - d.ustar[c];
                    if cand > best {
                        best = cand;
                        bi = di;
                        bj = dj;
                    }
                }
            }
            if best == f64::NEG_INFINITY {
                return Err(CoreError::Domain("no resolved dual nodes".into()));
            }
            // polish only with a fully resolved 4x4 window
            if bi >= 1 && bj >= 1 && bi + 2 < d.nx && bj + 2 < d.nx {
                let b0 = bi - 1;
                let b1 = bj - 1;
                let mut all_ok = true;
                'win: for wj in 0..4 {
                    for wi in 0..4 {
                        if !d.resolved[d.idx(b0 + wi, b1 + wj)] {
                            all_ok = false;
                            break 'win;
                        }
                    }
                }
                if all_ok {
                    let polished = polish_dual(d, b0, b1, x);
                    out[i + nx * j] = best.max(polished);
                    continue;
                }
            }
            out[i + nx * j] = best;
        }
    }
    Ok(out)
}

fn polish_dual(d: &DualFunction, b0: usize, b1: usize, x: [f64; 2]) -> f64 {
    let value = |p: [f64; 2], wx: [f64; 4], wy: [f64; 4]| -> f64 {
        let _ = p;
        let mut acc = 0.0;
        for (dj, wyv) in wy.iter().enumerate() {
            let mut row = 0.0;
            for (di, wxv) in wx.iter().enumerate() {
                row += wxv * d.ustar[d.idx(b0 + di, b1 + dj)];
            }
            acc += wyv * row;
        }
        acc
    };
    let local = |p: [f64; 2]| -> [f64; 2] {
        [
            (p[0] - (-d.r_trunc + (b0 + 1) as f64 * d.h)) / d.h,
            (p[1] - (-d.r_trunc + (b1 + 1) as f64 * d.h)) / d.h,
        ]
    };
    let mut xi = [
        -d.r_trunc + (b0 + 1) as f64 * d.h,
        -d.r_trunc + (b1 + 1) as f64 * d.h,
    ];
    let xi0 = xi;
    for _ in 0..12 {
        let [s, t] = local(xi);
        let grad = [
            value(xi, cubic_weights_d1(s), cubic_weights(t)) / d.h,
            value(xi, cubic_weights(s), cubic_weights_d1(t)) / d.h,
        ];
        let h2 = d.h * d.h;
        let hxx = value(xi, cubic_weights_d2(s), cubic_weights(t)) / h2;
        let hyy = value(xi, cubic_weights(s), cubic_weights_d2(t)) / h2;
        let hxy = value(xi, cubic_weights_d1(s), cubic_weights_d1(t)) / h2;
        let rx = x[0] - grad[0];
        let ry = x[1] - grad[1];
        let det = hxx * hyy - hxy * hxy;
        if det.abs() < 1e-300 {
            break;
        }
        xi[0] += (hyy * rx - hxy * ry) / det;
        xi[1] += (-hxy * rx + hxx * ry) / det;
        if (xi[0] - xi0[0]).abs() > 1.5 * d.h || (xi[1] - xi0[1]).abs() > 1.5 * d.h {
            return f64::NEG_INFINITY;
        }
    }
    let [s, t] = local(xi);
    x[0] * xi[0] + x[1] * xi[1] - value(xi, cubic_weights(s), cubic_weights(t))
}

/// Outcome of the dual-equation residual sweep.
#[derive(Debug, Clone, Copy)]
pub struct DualResidual {
    /// sup over evaluated nodes of |F_*(κ*) - (1/a) C(n,k)^{-1/k} w*|.
    pub sup: f64,
    /// Fraction of disc nodes that were resolved by the transform.
    pub resolved_fraction: f64,
    /// Nodes with a full resolved finite-difference stencil.
    pub evaluated: usize,
}

/// Residual of the dual Dirichlet equation on a transformed translator:
/// assembles w* γ* D²u* γ* by central differences, takes its eigenvalues κ*,
/// and compares F_* = (σ_n/σ_{n-k})^{1/k} with the right-hand side.
pub fn dual_residual(d: &DualFunction, k: usize, a: f64) -> Result<DualResidual> {
    if !(a > 0.0) {
        return Err(CoreError::Parameter(format!("velocity a = {a} must be positive")));
    }
    let n = 2usize;
    if k == 0 || k > n {
        return Err(CoreError::Parameter(format!("order k = {k} out of range for n = 2")));
    }
    let rhs_scale = (1.0 / a) * binomial(n, k).powf(-1.0 / k as f64);
    let mut sup = 0.0f64;
    let mut evaluated = 0usize;
    for j in 1..d.nx - 1 {
        for i in 1..d.nx - 1 {
            let c = d.idx(i, j);
            let stencil_ok = [
                c,
                c - 1,
                c + 1,
                c - d.nx,
                c + d.nx,
                c - d.nx - 1,
                c - d.nx + 1,
                c + d.nx - 1,
                c + d.nx + 1,
            ]
            .iter()
            .all(|&s| d.resolved[s]);
            if !stencil_ok {
                continue;
            }
            let xi = d.xi(i, j);
            let h = d.h;
            let us = &d.ustar;
            let uxx = (us[c + 1] - 2.0 * us[c] + us[c - 1]) / (h * h);
            let uyy = (us[c + d.nx] - 2.0 * us[c] + us[c - d.nx]) / (h * h);
            let uxy = (us[c + d.nx + 1] + us[c - d.nx - 1] - us[c + d.nx - 1] - us[c - d.nx + 1])
                / (4.0 * h * h);
            let w_star = (1.0 - xi[0] * xi[0] - xi[1] * xi[1]).sqrt();
            // γ* = δ - ξξᵀ/(1+w*)
            let gs = |p: usize, q: usize| -> f64 {
                (if p == q { 1.0 } else { 0.0 }) - xi[p] * xi[q] / (1.0 + w_star)
            };
            let d2 = [[uxx, uxy], [uxy, uyy]];
            let mut m = [[0.0f64; 2]; 2];
            for p in 0..2 {
                for q in 0..2 {
                    let mut acc = 0.0;
                    for r in 0..2 {
                        for s in 0..2 {
                            acc += gs(p, r) * d2[r][s] * gs(s, q);
                        }
                    }
                    m[p][q] = w_star * acc;
                }
            }
            let ev = symfunc::eigen2(m[0][0], m[0][1], m[1][1]);
            if ev[0] <= 0.0 {
                return Err(CoreError::Domain(format!(
                    "dual eigenvalue {} <= 0 at ξ = ({}, {})",
                    ev[0], xi[0], xi[1]
                )));
            }
            let f_star = symfunc::dual_root(&CurvatureVector::new(ev.to_vec())?, k)?;
            sup = sup.max((f_star - rhs_scale * w_star).abs());
            evaluated += 1;
        }
    }
    if evaluated == 0 {
        return Err(CoreError::Domain(
            "no dual node has a fully resolved stencil".into(),
        ));
    }
    Ok(DualResidual {
        sup,
        resolved_fraction: d.resolved_fraction(),
        evaluated,
    })
}

/// Largest violation of Young's inequality u(x) + u*(ξ) ≥ x·ξ over all
/// primal nodes × resolved dual nodes (positive value = violation).
pub fn young_violation(g: &GraphFunction, d: &DualFunction) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for dj in 0..d.nx {
        for di in 0..d.nx {
            let c = d.idx(di, dj);
            if !d.resolved[c] {
                continue;
            }
            let xi = d.xi(di, dj);
            for j in 0..g.nx {
                for i in 0..g.nx {
                    let gap =
                        g.x(i) * xi[0] + g.x(j) * xi[1] - g.values[g.idx(i, j)] - d.ustar[c];
                    worst = worst.max(gap);
                }
            }
        }
    }
    worst
}

/// Write the dual CSV (`xi1,xi2,ustar,resolved`), one row per grid node.
pub fn write_dual_csv<W: Write>(d: &DualFunction, mut out: W) -> Result<()> {
    writeln!(out, "xi1,xi2,ustar,resolved")?;
    for j in 0..d.nx {
        for i in 0..d.nx {
            let c = d.idx(i, j);
            let xi = d.xi(i, j);
            writeln!(
                out,
                "{},{},{},{}",
                crate::fmt_g17(xi[0]),
                crate::fmt_g17(xi[1]),
                crate::fmt_g17(d.ustar[c]),
                u8::from(d.resolved[c]),
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GraphFunction;
    use crate::radial::{limit_profile, RadialParams};

    #[test]
    fn quadratic_is_self_dual_on_aligned_grids() {
        // u = |x|²/2 with dual nodes at primal slopes Du = x: exact
        let g = GraphFunction::from_fn(0.96, 49, 0.02, |x, y| 0.5 * (x * x + y * y)).unwrap();
        let d = legendre_transform(&g, 0.48, 25).unwrap();
        for j in 0..d.nx {
            for i in 0..d.nx {
                let c = d.idx(i, j);
                if !d.resolved[c] {
                    continue;
                }
                let xi = d.xi(i, j);
                let want = 0.5 * (xi[0] * xi[0] + xi[1] * xi[1]);
                assert!(
                    (d.ustar[c] - want).abs() < 1e-12,
                    "xi = {xi:?}: {} vs {want}",
                    d.ustar[c]
                );
            }
        }
        assert!(d.resolved_fraction() > 0.99);
    }

    #[test]
    fn quartic_conjugate_closed_form() {
        // u = |x|⁴/4 (radial): u*(ξ) = (3/4)|ξ|^{4/3}
        let g = GraphFunction::from_fn(0.7, 181, 0.02, |x, y| {
            0.25 * (x * x + y * y).powi(2)
        })
        .unwrap();
        let d = legendre_transform(&g, 0.5, 41).unwrap();
        let mut checked = 0;
        for j in 0..d.nx {
            for i in 0..d.nx {
                let c = d.idx(i, j);
                if !d.resolved[c] {
                    continue;
                }
                let xi = d.xi(i, j);
                let r = xi[0].hypot(xi[1]);
                if r < 0.05 {
                    continue; // u'' degenerates at the origin
                }
                let want = 0.75 * r.powf(4.0 / 3.0);
                assert!(
                    (d.ustar[c] - want).abs() < 1e-6,
                    "xi = {xi:?}: {} vs {want}",
                    d.ustar[c]
                );
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn double_transform_is_identity_on_quadratic() {
        let g = GraphFunction::from_fn(0.9, 46, 0.05, |x, y| 0.5 * (x * x + y * y)).unwrap();
        let d = legendre_transform(&g, 0.6, 31).unwrap();
        // back-transform where Du = x stays inside the resolved dual disc
        let l_back = 0.5;
        let nx_back = 26;
        let back = legendre_transform_back(&d, l_back, nx_back).unwrap();
        let h = 2.0 * l_back / (nx_back - 1) as f64;
        for j in 0..nx_back {
            for i in 0..nx_back {
                let (x, y) = (-l_back + i as f64 * h, -l_back + j as f64 * h);
                let want = 0.5 * (x * x + y * y);
                assert!(
                    (back[i + nx_back * j] - want).abs() < 1e-8,
                    "({x},{y}): {} vs {want}",
                    back[i + nx_back * j]
                );
            }
        }
    }

    #[test]
    fn involution_within_h2_on_smooth_convex() {
        // non-quadratic strictly convex: x²/2 + y²/2 + 0.1 x⁴ + softplus-ish mix
        let f = |x: f64, y: f64| 0.45 * (x * x + y * y) + 0.08 * x * x * x * x + 0.05 * x * y;
        let g = GraphFunction::from_fn(0.8, 81, 0.05, f).unwrap();
        let h = g.h;
        let d = legendre_transform(&g, 0.62, 61).unwrap();
        let l_back = 0.4;
        let nx_back = 21;
        let back = legendre_transform_back(&d, l_back, nx_back).unwrap();
        let hb = 2.0 * l_back / (nx_back - 1) as f64;
        let mut sup = 0.0f64;
        for j in 0..nx_back {
            for i in 0..nx_back {
                let (x, y) = (-l_back + i as f64 * hb, -l_back + j as f64 * hb);
                sup = sup.max((back[i + nx_back * j] - f(x, y)).abs());
            }
        }
        assert!(sup <= 10.0 * h * h, "involution error {sup} vs 10h² = {}", 10.0 * h * h);
    }

    #[test]
    fn young_inequality_holds_with_equality_at_gradient() {
        let f = |x: f64, y: f64| 0.45 * (x * x + y * y) + 0.05 * x * y;
        let g = GraphFunction::from_fn(0.8, 65, 0.05, f).unwrap();
        let d = legendre_transform(&g, 0.55, 41).unwrap();
        // no violation anywhere
        assert!(young_violation(&g, &d) <= 1e-12);
        // near-equality at ξ = Du(x): pick an interior node and its slope
        let (i, j) = (32, 24);
        let (du, _) = crate::geometry::discrete_gradient_hessian(&g, i, j).unwrap();
        let gap = {
            // evaluate u* at ξ = du by local max over the dual grid region
            let mut best = f64::NEG_INFINITY;
            for dj in 0..d.nx {
                for di in 0..d.nx {
                    let c = d.idx(di, dj);
                    if !d.resolved[c] {
                        continue;
                    }
                    let xi = d.xi(di, dj);
                    if (xi[0] - du[0]).abs() < 2.0 * d.h && (xi[1] - du[1]).abs() < 2.0 * d.h {
                        let val = g.x(i) * xi[0] + g.x(j) * xi[1]
                            - g.values[g.idx(i, j)]
                            - d.ustar[c];
                        best = best.max(val);
                    }
                }
            }
            best
        };
        assert!(gap.abs() < 5.0 * d.h * d.h, "Young gap at gradient: {gap}");
    }

    #[test]
    fn dual_domain_containment() {
        let g = GraphFunction::from_fn(0.9, 61, 0.2, |x, y| 0.4 * (x * x + y * y)).unwrap();
        let max_grad = g.max_gradient_norm();
        let d = legendre_transform(&g, 0.75, 41).unwrap();
        for j in 0..d.nx {
            for i in 0..d.nx {
                if d.resolved[d.idx(i, j)] {
                    let xi = d.xi(i, j);
                    assert!(xi[0].hypot(xi[1]) <= max_grad + 1e-9);
                }
            }
        }
    }

    #[test]
    fn dual_midpoint_convexity() {
        let prof = limit_profile(&RadialParams::new(2, 2, 1.0, 3.0, 1e-10).unwrap()).unwrap();
        let g = GraphFunction::from_radial(&prof, 1.3, 131, 0.0, 1e-3).unwrap();
        let d = legendre_transform(&g, 0.8, 81).unwrap();
        let scale = 1.0f64;
        for j in 0..d.nx {
            for i in 1..d.nx - 1 {
                let (cm, c, cp) = (d.idx(i - 1, j), d.idx(i, j), d.idx(i + 1, j));
                if d.resolved[cm] && d.resolved[c] && d.resolved[cp] {
                    let mid = 0.5 * (d.ustar[cm] + d.ustar[cp]);
                    assert!(
                        mid >= d.ustar[c] - 10.0 * d.h * d.h * scale,
                        "convexity violated at ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn translator_dual_residual_small_and_second_order() {
        // (2,2) translator, a = 1: F_* residual O(h²)
        let prof = limit_profile(&RadialParams::new(2, 2, 1.0, 3.0, 1e-11).unwrap()).unwrap();
        let run = |nx_primal: usize, nx_dual: usize| {
            let g = GraphFunction::from_radial(&prof, 1.3, nx_primal, 0.0, 1e-3).unwrap();
            let d = legendre_transform(&g, 0.8, nx_dual).unwrap();
            dual_residual(&d, 2, 1.0).unwrap()
        };
        // h_xi = 1.6/102 ≈ 1/64 and half of it
        let coarse = run(167, 103);
        let fine = run(333, 205);
        assert!(coarse.sup <= 5e-3, "dual residual {}", coarse.sup);
        let order = (coarse.sup / fine.sup).log2();
        assert!(order >= 1.5, "order {order} (coarse {}, fine {})", coarse.sup, fine.sup);
        assert!(coarse.resolved_fraction > 0.9);
    }

    #[test]
    fn hyperboloid_dual_is_negative_control() {
        // u = sqrt(1+|x|²) has u* = -sqrt(1-|ξ|²); κ* ≡ 1, so F_* is constant
        // and cannot match the w*-proportional right-hand side
        let d = DualFunction::from_fn(0.7, 61, |x, y| -(1.0 - x * x - y * y).sqrt()).unwrap();
        let res = dual_residual(&d, 2, 1.0).unwrap();
        assert!(res.sup > 0.2, "expected a gross residual, got {}", res.sup);
        // and the analytic conjugate matches the numerical transform
        let g = GraphFunction::from_fn(1.1, 221, 1e-3, |x, y| (1.0 + x * x + y * y).sqrt())
            .unwrap();
        let dn = legendre_transform(&g, 0.6, 41).unwrap();
        for j in 0..dn.nx {
            for i in 0..dn.nx {
                let c = dn.idx(i, j);
                if !dn.resolved[c] {
                    continue;
                }
                let xi = dn.xi(i, j);
                let want = -(1.0 - xi[0] * xi[0] - xi[1] * xi[1]).sqrt();
                assert!(
                    (dn.ustar[c] - want).abs() < 5e-6,
                    "xi {xi:?}: {} vs {want}",
                    dn.ustar[c]
                );
            }
        }
    }

    #[test]
    fn residual_scan_minimized_at_true_velocity() {
        let prof = limit_profile(&RadialParams::new(2, 2, 1.0, 3.0, 1e-11).unwrap()).unwrap();
        let g = GraphFunction::from_radial(&prof, 1.3, 167, 0.0, 1e-3).unwrap();
        let d = legendre_transform(&g, 0.8, 103).unwrap();
        let scan = [0.7, 0.85, 1.0, 1.2, 1.4];
        let residuals: Vec<f64> = scan
            .iter()
            .map(|&a| dual_residual(&d, 2, a).unwrap().sup)
            .collect();
        let min_idx = residuals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(scan[min_idx], 1.0, "residuals {residuals:?}");
    }
}

//! Small linear-algebra kernels for the implicit flow stepper: the Thomas
//! tridiagonal solve (radial runs) and diagonally preconditioned BiCGStab
//! (2-D grid runs, matrix-free 9-point stencils).

use crate::error::{CoreError, Result};

/// Solve a tridiagonal system in place. `lower[i]` multiplies x[i-1] in row i
/// (lower[0] ignored), `upper[i]` multiplies x[i+1] (upper[n-1] ignored).
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(CoreError::Parameter("tridiagonal size mismatch".into()));
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv.abs() < 1e-300 {
        return Err(CoreError::Convergence("tridiagonal pivot underflow".into()));
    }
    c[0] = upper[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - lower[i] * c[i - 1];
        if piv.abs() < 1e-300 {
            return Err(CoreError::Convergence("tridiagonal pivot underflow".into()));
        }
        c[i] = if i + 1 < n { upper[i] / piv } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovOutcome {
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

/// Preconditioned BiCGStab for y = A x given as a matrix-free operator.
/// `inv_diag` is the Jacobi preconditioner (elementwise multiply).
pub fn bicgstab(
    apply: &mut dyn FnMut(&[f64], &mut [f64]),
    inv_diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    let n = b.len();
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(p, q)| p * q).sum() };
    let norm = |a: &[f64]| -> f64 { dot(a, a).sqrt() };

    let mut r = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    apply(x, &mut tmp);
    for i in 0..n {
        r[i] = b[i] - tmp[i];
    }
    let b_norm = norm(b).max(1e-300);
    let mut res = norm(&r);
    if res <= rtol * b_norm {
        return KrylovOutcome {
            converged: true,
            iterations: 0,
            residual: res / b_norm,
        };
    }
    let r0 = r.clone();
    let mut rho = 1.0f64;
    let mut alpha = 1.0f64;
    let mut omega = 1.0f64;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];

    for it in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        for i in 0..n {
            phat[i] = p[i] * inv_diag[i];
        }
        apply(&phat, &mut v);
        let denom = dot(&r0, &v);
        if denom.abs() < 1e-300 {
            break;
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= rtol * b_norm {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            return KrylovOutcome {
                converged: true,
                iterations: it,
                residual: norm(&s) / b_norm,
            };
        }
        for i in 0..n {
            shat[i] = s[i] * inv_diag[i];
        }
        apply(&shat, &mut t);
        let tt = dot(&t, &t);
        if tt < 1e-300 {
            break;
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm(&r);
        if res <= rtol * b_norm {
            return KrylovOutcome {
                converged: true,
                iterations: it,
                residual: res / b_norm,
            };
        }
        if omega.abs() < 1e-300 {
            break;
        }
    }
    KrylovOutcome {
        converged: false,
        iterations: max_iter,
        residual: res / b_norm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_solves_poisson_row() {
        // -u'' = 1 on (0,1), u(0)=u(1)=0, n interior nodes
        let n = 64;
        let h = 1.0 / (n + 1) as f64;
        let lower = vec![-1.0 / (h * h); n];
        let diag = vec![2.0 / (h * h); n];
        let upper = vec![-1.0 / (h * h); n];
        let rhs = vec![1.0; n];
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for (i, &v) in x.iter().enumerate() {
            let xi = (i + 1) as f64 * h;
            let want = 0.5 * xi * (1.0 - xi);
            assert!((v - want).abs() < 1e-12, "node {i}");
        }
    }

    #[test]
    fn bicgstab_solves_2d_laplacian() {
        // (I + L) x = b with L the 5-point Laplacian on a 32x32 grid
        let nx = 32;
        let n = nx * nx;
        let mut apply = |x: &[f64], y: &mut [f64]| {
            for j in 0..nx {
                for i in 0..nx {
                    let c = i + nx * j;
                    let mut acc = 5.0 * x[c];
                    if i > 0 {
                        acc -= x[c - 1];
                    }
                    if i + 1 < nx {
                        acc -= x[c + 1];
                    }
                    if j > 0 {
                        acc -= x[c - nx];
                    }
                    if j + 1 < nx {
                        acc -= x[c + nx];
                    }
                    y[c] = acc;
                }
            }
        };
        let inv_diag = vec![1.0 / 5.0; n];
        let b: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let mut x = vec![0.0; n];
        let out = bicgstab(&mut apply, &inv_diag, &b, &mut x, 1e-12, 2000);
        assert!(out.converged, "{out:?}");
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        let err = ax
            .iter()
            .zip(&b)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-9, "residual {err}");
    }
}

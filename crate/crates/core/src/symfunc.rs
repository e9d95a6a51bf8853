//! Elementary symmetric polynomials of principal curvatures, their
//! normalized k-th roots, the dual quotient root σ_n/σ_{n-k}, and symmetric
//! eigenvalue extraction.
//!
//! σ_k(κ) = Σ_{i1<...<ik} κ_{i1}···κ_{ik}; the normalized root
//! (σ_k/C(n,k))^{1/k} equals λ on the isotropic point (λ,...,λ) and is
//! degree-one homogeneous, which is what makes it a curvature "speed".

use crate::error::{CoreError, Result};

/// Principal curvatures of a hypersurface point, one entry per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureVector {
    kappa: Vec<f64>,
}

impl CurvatureVector {
    pub fn new(kappa: Vec<f64>) -> Result<Self> {
        if kappa.is_empty() {
            return Err(CoreError::Parameter(
                "curvature vector must have n >= 1 entries".into(),
            ));
        }
        if kappa.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::Parameter(
                "curvature vector entries must be finite".into(),
            ));
        }
        Ok(Self { kappa })
    }

    pub fn n(&self) -> usize {
        self.kappa.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.kappa
    }
}

/// Binomial coefficient C(n,k) as an exact f64 (n is small here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num *= (n - i) as u128;
        den *= (i + 1) as u128;
    }
    (num / den) as f64
}

/// All elementary symmetric polynomials e_0..e_n of the entries, by the
/// incremental product expansion Π(x + κ_i). Exact for integer inputs.
pub fn sigma_all(kappa: &CurvatureVector) -> Vec<f64> {
    let n = kappa.n();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (i, &x) in kappa.as_slice().iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

/// σ_k(κ), the k-th elementary symmetric polynomial.
pub fn sigma_k(kappa: &CurvatureVector, k: usize) -> Result<f64> {
    check_order(kappa.n(), k)?;
    Ok(sigma_all(kappa)[k])
}

/// σ_k by Newton's identities from power sums: k e_k = Σ_{i=1..k} (-1)^{i-1} e_{k-i} p_i.
/// Cross-check path for [`sigma_k`].
pub fn sigma_k_newton(kappa: &CurvatureVector, k: usize) -> Result<f64> {
    check_order(kappa.n(), k)?;
    let mut p = vec![0.0; k + 1]; // power sums p_i = Σ κ^i
    for i in 1..=k {
        p[i] = kappa.as_slice().iter().map(|x| x.powi(i as i32)).sum();
    }
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for m in 1..=k {
        let mut acc = 0.0;
        for i in 1..=m {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[m - i] * p[i];
        }
        e[m] = acc / m as f64;
    }
    Ok(e[k])
}

/// σ_k by direct enumeration of k-subsets. The brute-force oracle; only
/// sensible for small n.
pub fn sigma_k_subsets(kappa: &CurvatureVector, k: usize) -> Result<f64> {
    let n = kappa.n();
    check_order(n, k)?;
    if n > 24 {
        return Err(CoreError::Parameter(
            "subset enumeration limited to n <= 24".into(),
        ));
    }
    let mut total = 0.0;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let mut prod = 1.0;
        for (i, &x) in kappa.as_slice().iter().enumerate() {
            if mask & (1 << i) != 0 {
                prod *= x;
            }
        }
        total += prod;
    }
    Ok(total)
}

/// Normalized root (σ_k(κ)/C(n,k))^{1/k}; equals λ when κ = (λ,...,λ), λ ≥ 0.
///
/// The caller guarantees a k-convex input: σ_k < 0 is a domain error.
pub fn normalized_root(kappa: &CurvatureVector, k: usize) -> Result<f64> {
    let s = sigma_k(kappa, k)?;
    if s < 0.0 {
        return Err(CoreError::Domain(format!(
            "sigma_{k} = {s} < 0: point is not k-convex"
        )));
    }
    Ok((s / binomial(kappa.n(), k)).powf(1.0 / k as f64))
}

/// Dual operator root (σ_n/σ_{n-k})^{1/k} evaluated on dual curvatures κ*,
/// with σ_0 ≡ 1. Used by the Legendre-dual equation.
pub fn dual_root(kappa_star: &CurvatureVector, k: usize) -> Result<f64> {
    let n = kappa_star.n();
    check_order(n, k)?;
    let e = sigma_all(kappa_star);
    let denom = e[n - k];
    if denom <= 0.0 {
        return Err(CoreError::Domain(format!(
            "sigma_{} = {} <= 0: dual point not admissible",
            n - k,
            denom
        )));
    }
    let ratio = e[n] / denom;
    if ratio < 0.0 && k % 2 == 0 {
        return Err(CoreError::Domain(format!(
            "sigma_n/sigma_{} = {} < 0 with even k = {}",
            n - k,
            ratio,
            k
        )));
    }
    Ok(if ratio < 0.0 {
        -(-ratio).powf(1.0 / k as f64)
    } else {
        ratio.powf(1.0 / k as f64)
    })
}

fn check_order(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(CoreError::Parameter(format!(
            "order k = {k} out of range 1..={n}"
        )));
    }
    Ok(())
}

/// Infinity norm of a dense row-major matrix.
fn mat_norm(a: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_symmetric(a: &[f64], n: usize) -> Result<()> {
    if a.len() != n * n {
        return Err(CoreError::Parameter(format!(
            "matrix storage length {} != n*n = {}",
            a.len(),
            n * n
        )));
    }
    let scale = mat_norm(a, n).max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[i * n + j] - a[j * n + i]).abs() > 1e-12 * scale {
                return Err(CoreError::Parameter(format!(
                    "matrix not symmetric at ({i},{j}): {} vs {}",
                    a[i * n + j],
                    a[j * n + i]
                )));
            }
        }
    }
    Ok(())
}

/// Eigenvalues of a real symmetric n×n matrix (row-major), ascending.
///
/// n ≤ 3 uses the closed-form characteristic polynomial with the stable
/// trigonometric root extraction; larger n falls back to cyclic Jacobi.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Result<CurvatureVector> {
    check_symmetric(a, n)?;
    let mut vals = match n {
        1 => vec![a[0]],
        2 => eigen2(a[0], a[1], a[3]).to_vec(),
        3 => eigen3(a).to_vec(),
        _ => jacobi_eigen(a, n)?.0,
    };
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    CurvatureVector::new(vals)
}

/// Eigenvalues of [[a, b], [b, c]], ascending.
pub fn eigen2(a: f64, b: f64, c: f64) -> [f64; 2] {
    let mean = 0.5 * (a + c);
    let disc = (0.5 * (a - c)).hypot(b);
    [mean - disc, mean + disc]
}

/// Eigenvalues of a symmetric 3×3 by the trigonometric method
/// (shift to trace-free, then roots of the depressed cubic via acos).
fn eigen3(a: &[f64]) -> [f64; 3] {
    let (a11, a12, a13) = (a[0], a[1], a[2]);
    let (a22, a23, a33) = (a[4], a[5], a[8]);
    let q = (a11 + a22 + a33) / 3.0;
    let b11 = a11 - q;
    let b22 = a22 - q;
    let b33 = a33 - q;
    let p2 = b11 * b11 + b22 * b22 + b33 * b33 + 2.0 * (a12 * a12 + a13 * a13 + a23 * a23);
    if p2 <= 0.0 {
        return [q, q, q];
    }
    let p = (p2 / 6.0).sqrt();
    // det(B)/p^3, clamped against roundoff outside [-2, 2] scaled
    let det_b = b11 * (b22 * b33 - a23 * a23) - a12 * (a12 * b33 - a23 * a13)
        + a13 * (a12 * a23 - b22 * a13);
    let r = (det_b / (2.0 * p * p * p)).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    let mut v = [e1, e2, e3];
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v
}

/// Cyclic Jacobi iteration. Returns (eigenvalues unsorted, accumulated
/// rotations Q column-major) so callers can verify A = QΛQᵀ.
pub fn jacobi_eigen(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut m = a.to_vec();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    let scale = mat_norm(a, n).max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            let vals = (0..n).map(|i| m[i * n + i]).collect();
            return Ok((vals, q));
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apr = m[p * n + r];
                if apr.abs() <= 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let arr = m[r * n + r];
                let theta = (arr - app) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for idx in 0..n {
                    let mp = m[idx * n + p];
                    let mr = m[idx * n + r];
                    m[idx * n + p] = c * mp - s * mr;
                    m[idx * n + r] = s * mp + c * mr;
                }
                for idx in 0..n {
                    let mp = m[p * n + idx];
                    let mr = m[r * n + idx];
                    m[p * n + idx] = c * mp - s * mr;
                    m[r * n + idx] = s * mp + c * mr;
                }
                for idx in 0..n {
                    let qp = q[idx * n + p];
                    let qr = q[idx * n + r];
                    q[idx * n + p] = c * qp - s * qr;
                    q[idx * n + r] = s * qp + c * qr;
                }
            }
        }
    }
    Err(CoreError::Convergence(
        "Jacobi eigenvalue iteration did not converge in 100 sweeps".into(),
    ))
}

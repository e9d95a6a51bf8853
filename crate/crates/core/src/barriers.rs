//! Sub/supersolution envelopes built from sphere data φ (n = 2).
//!
//! For y(θ) = (cos θ, sin θ) on S¹ and p_i(y) = Dφ(y) ± 2M y (tangential
//! gradient Dφ = φ'(θ)(-sin θ, cos θ)), the shifted translators
//!
//! ```text
//!     z̃_i(x, y) = φ(y) - p_i(y)·y + z_a(|x + p_i(y)|)
//! ```
//!
//! give the subsolution q₁ = sup_y z̃₁ and the supersolution q₂ = inf_y z̃₂ of
//! the translator equation, with q₁ ≤ q₂ and both approaching
//! |x| + φ(x/|x|) at infinity.

use crate::error::{CoreError, Result};
use crate::interp::UniformCubic;
use crate::radial::{scaled_profile, RadialProfile};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::io::Write;

/// φ and its first two angular derivatives, sampled at θ_j = 2πj/m and
/// evaluable anywhere through the Fourier series.
#[derive(Debug, Clone)]
pub struct SphereFunction {
    pub m: usize,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub d2phi: Vec<f64>,
    /// Forward DFT coefficients of the samples (unnormalized).
    coef: Vec<Complex<f64>>,
}

impl SphereFunction {
    pub fn from_samples(phi: Vec<f64>) -> Result<Self> {
        let m = phi.len();
        if m < 8 || !m.is_power_of_two() {
            return Err(CoreError::Parameter(format!(
                "sphere sample count {m} must be a power of two >= 8"
            )));
        }
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::Parameter("sphere samples must be finite".into()));
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        let ifft = planner.plan_fft_inverse(m);
        let mut coef: Vec<Complex<f64>> =
            phi.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft.process(&mut coef);

        let wavenumber = |k: usize| -> f64 {
            if k <= m / 2 {
                k as f64
            } else {
                k as f64 - m as f64
            }
        };
        let deriv = |power: u32, zero_nyquist: bool| -> Vec<f64> {
            let mut hat: Vec<Complex<f64>> = coef
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    if zero_nyquist && k == m / 2 {
                        return Complex::new(0.0, 0.0);
                    }
                    let ik = Complex::new(0.0, wavenumber(k));
                    c * ik.powu(power)
                })
                .collect();
            ifft.process(&mut hat);
            hat.iter().map(|c| c.re / m as f64).collect()
        };
        let dphi = deriv(1, true);
        let d2phi = deriv(2, false);
        Ok(Self {
            m,
            phi,
            dphi,
            d2phi,
            coef,
        })
    }

    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..m)
            .map(|j| f(2.0 * std::f64::consts::PI * j as f64 / m as f64))
            .collect();
        Self::from_samples(samples)
    }

    /// Spectral evaluation of (φ, φ') at arbitrary θ.
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        let m = self.m;
        let half = m / 2;
        let mut val = self.coef[0].re / m as f64;
        let mut dval = 0.0;
        for k in 1..half {
            let (s, c) = (k as f64 * theta).sin_cos();
            let re = self.coef[k].re;
            let im = self.coef[k].im;
            // 2/m · Re(ĉ_k e^{ikθ})
            val += 2.0 / m as f64 * (re * c - im * s);
            dval += 2.0 / m as f64 * k as f64 * (-re * s - im * c);
        }
        let (s_nyq, c_nyq) = (half as f64 * theta).sin_cos();
        let _ = s_nyq;
        val += self.coef[half].re / m as f64 * c_nyq;
        (val, dval)
    }

    /// C²-norm bound max(|φ| + |φ'| + |φ''|) over the samples.
    pub fn c2_bound(&self) -> f64 {
        (0..self.m)
            .map(|j| self.phi[j].abs() + self.dphi[j].abs() + self.d2phi[j].abs())
            .fold(0.0f64, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierSide {
    /// q₁ = sup envelope with p = Dφ + 2My (subsolution).
    Sub,
    /// q₂ = inf envelope with p = Dφ - 2My (supersolution).
    Super,
}

/// Envelope pair over one scaled translator.
pub struct BarrierPair {
    /// Velocity-a, zero-offset radial translator.
    pub translator: RadialProfile,
    height: UniformCubic,
    pub phi: SphereFunction,
    /// Offset magnitude M; defaults to the C² bound of φ.
    pub m_offset: f64,
}

impl BarrierPair {
    /// `base` is the unit-velocity, zero-offset profile; it must extend far
    /// enough that |x + p| stays inside its scaled range at the evaluation
    /// points.
    pub fn new(
        base: &RadialProfile,
        a: f64,
        phi: SphereFunction,
        m_override: Option<f64>,
    ) -> Result<Self> {
        let m_offset = m_override.unwrap_or_else(|| phi.c2_bound());
        if m_offset < 0.0 {
            return Err(CoreError::Parameter(format!(
                "offset magnitude M = {m_offset} must be nonnegative"
            )));
        }
        let translator = scaled_profile(base, a)?;
        let h = translator.r[1] - translator.r[0];
        let height = UniformCubic::new(0.0, h, translator.u.clone())?;
        Ok(Self {
            translator,
            height,
            phi,
            m_offset,
        })
    }

    fn z_a(&self, s: f64) -> Result<f64> {
        self.height.eval(s)
    }

    /// z̃_i(x, θ) for the given side; p·y = ±2M since Dφ ⊥ y.
    fn branch_value(&self, x: [f64; 2], theta: f64, side: BarrierSide) -> Result<f64> {
        let (phi, dphi) = self.phi.eval(theta);
        let (sin_t, cos_t) = theta.sin_cos();
        let sign = match side {
            BarrierSide::Sub => 1.0,
            BarrierSide::Super => -1.0,
        };
        let p = [
            dphi * (-sin_t) + sign * 2.0 * self.m_offset * cos_t,
            dphi * cos_t + sign * 2.0 * self.m_offset * sin_t,
        ];
        let arg = (x[0] + p[0]).hypot(x[1] + p[1]);
        Ok(phi - sign * 2.0 * self.m_offset + self.z_a(arg)?)
    }

    /// Envelope evaluation: coarse scan over the m sphere samples followed by
    /// a golden-section polish of θ to 1e-10.
    pub fn eval(&self, x: [f64; 2], side: BarrierSide) -> Result<f64> {
        let m = self.phi.m;
        let two_pi = 2.0 * std::f64::consts::PI;
        let better = |a: f64, b: f64| match side {
            BarrierSide::Sub => a > b,
            BarrierSide::Super => a < b,
        };
        let mut best_j = 0usize;
        let mut best = self.branch_value(x, 0.0, side)?;
        for j in 1..m {
            let v = self.branch_value(x, two_pi * j as f64 / m as f64, side)?;
            if better(v, best) {
                best = v;
                best_j = j;
            }
        }
        // golden-section refinement on the bracketing interval
        let golden = 0.5 * (5.0f64.sqrt() - 1.0);
        let mut lo = two_pi * (best_j as f64 - 1.0) / m as f64;
        let mut hi = two_pi * (best_j as f64 + 1.0) / m as f64;
        let mut t1 = hi - golden * (hi - lo);
        let mut t2 = lo + golden * (hi - lo);
        let mut f1 = self.branch_value(x, t1, side)?;
        let mut f2 = self.branch_value(x, t2, side)?;
        while hi - lo > 1e-10 {
            if better(f1, f2) {
                hi = t2;
                t2 = t1;
                f2 = f1;
                t1 = hi - golden * (hi - lo);
                f1 = self.branch_value(x, t1, side)?;
            } else {
                lo = t1;
                t1 = t2;
                f1 = f2;
                t2 = lo + golden * (hi - lo);
                f2 = self.branch_value(x, t2, side)?;
            }
        }
        let polished = self.branch_value(x, 0.5 * (lo + hi), side)?;
        Ok(if better(polished, best) { polished } else { best })
    }

    /// Both envelopes over a uniform grid on [-l, l]², row-major.
    pub fn grid(&self, l: f64, nx: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let h = 2.0 * l / (nx - 1) as f64;
        let mut q1 = Vec::with_capacity(nx * nx);
        let mut q2 = Vec::with_capacity(nx * nx);
        for j in 0..nx {
            for i in 0..nx {
                let x = [-l + i as f64 * h, -l + j as f64 * h];
                q1.push(self.eval(x, BarrierSide::Sub)?);
                q2.push(self.eval(x, BarrierSide::Super)?);
            }
        }
        Ok((q1, q2))
    }

    /// max over sampled directions and both envelopes of
    /// |q_i(R y) - R - φ(y)|.
    pub fn asymptotic_gap(&self, radius: f64, ndirs: usize) -> Result<f64> {
        let mut gap = 0.0f64;
        for d in 0..ndirs {
            let theta = 2.0 * std::f64::consts::PI * d as f64 / ndirs as f64;
            let (sin_t, cos_t) = theta.sin_cos();
            let x = [radius * cos_t, radius * sin_t];
            let (phi, _) = self.phi.eval(theta);
            for side in [BarrierSide::Sub, BarrierSide::Super] {
                gap = gap.max((self.eval(x, side)? - radius - phi).abs());
            }
        }
        Ok(gap)
    }
}

/// Write the barrier grid CSV (`x1,x2,q1,q2`).
pub fn write_barrier_csv<W: Write>(
    l: f64,
    nx: usize,
    q1: &[f64],
    q2: &[f64],
    mut out: W,
) -> Result<()> {
    writeln!(out, "x1,x2,q1,q2")?;
    let h = 2.0 * l / (nx - 1) as f64;
    for j in 0..nx {
        for i in 0..nx {
            writeln!(
                out,
                "{},{},{},{}",
                crate::fmt_g17(-l + i as f64 * h),
                crate::fmt_g17(-l + j as f64 * h),
                crate::fmt_g17(q1[i + nx * j]),
                crate::fmt_g17(q2[i + nx * j]),
            )?;
        }
    }
    Ok(())
}

/// Parse a `theta,phi` CSV with uniformly spaced θ starting at 0.
pub fn parse_sphere_csv(text: &str) -> Result<SphereFunction> {
    let mut thetas = Vec::new();
    let mut phis = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("theta")) {
            continue;
        }
        let mut parts = line.split(',');
        let theta: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| CoreError::Parameter(format!("bad theta on line {}", lineno + 1)))?;
        let phi: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| CoreError::Parameter(format!("bad phi on line {}", lineno + 1)))?;
        thetas.push(theta);
        phis.push(phi);
    }
    let m = thetas.len();
    if m < 8 {
        return Err(CoreError::Parameter("need at least 8 sphere samples".into()));
    }
    let step = 2.0 * std::f64::consts::PI / m as f64;
    for (j, &t) in thetas.iter().enumerate() {
        if (t - step * j as f64).abs() > 1e-9 {
            return Err(CoreError::Parameter(format!(
                "theta samples not uniform at row {}: {} vs {}",
                j + 1,
                t,
                step * j as f64
            )));
        }
    }
    SphereFunction::from_samples(phis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{limit_profile, RadialParams};

    fn base_profile() -> RadialProfile {
        limit_profile(&RadialParams::new(2, 2, 1.0, 10.0, 1e-10).unwrap())
            .unwrap()
            .normalized_zero_offset()
    }

    #[test]
    fn spectral_derivatives_of_band_limited_input() {
        let f = |t: f64| 0.3 * (2.0 * t).sin() - 0.1 * (3.0 * t).cos() + 0.5;
        let df = |t: f64| 0.6 * (2.0 * t).cos() + 0.3 * (3.0 * t).sin();
        let d2f = |t: f64| -1.2 * (2.0 * t).sin() + 0.9 * (3.0 * t).cos();
        let sf = SphereFunction::from_fn(64, f).unwrap();
        for j in 0..sf.m {
            let t = 2.0 * std::f64::consts::PI * j as f64 / sf.m as f64;
            assert!((sf.phi[j] - f(t)).abs() < 1e-12);
            assert!((sf.dphi[j] - df(t)).abs() < 1e-10, "j={j}");
            assert!((sf.d2phi[j] - d2f(t)).abs() < 1e-10, "j={j}");
        }
        // off-node spectral evaluation reconstructs to 1e-10
        for &t in &[0.123, 1.77, 4.56] {
            let (v, dv) = sf.eval(t);
            assert!((v - f(t)).abs() < 1e-10);
            assert!((dv - df(t)).abs() < 1e-10);
        }
        let bound = sf.c2_bound();
        assert!(bound >= 0.5 && bound < 4.0, "C² bound {bound}");
    }

    #[test]
    fn zero_sphere_data_collapses_to_translator() {
        let base = base_profile();
        let phi = SphereFunction::from_fn(32, |_| 0.0).unwrap();
        let pair = BarrierPair::new(&base, 1.0, phi, Some(0.0)).unwrap();
        let interp = base.interpolant().unwrap();
        for &x in &[[0.0f64, 0.0], [1.0, 0.5], [-2.0, 3.0], [4.0, 0.0]] {
            let want = interp.u.eval(x[0].hypot(x[1])).unwrap();
            let q1 = pair.eval(x, BarrierSide::Sub).unwrap();
            let q2 = pair.eval(x, BarrierSide::Super).unwrap();
            assert!((q1 - want).abs() < 1e-12, "q1 at {x:?}");
            assert!((q2 - want).abs() < 1e-12, "q2 at {x:?}");
        }
    }

    #[test]
    fn constant_sphere_data_closed_envelope() {
        // φ ≡ c: q₁(x) = c - 2M + z_a(|x|+2M), q₂(x) = c + 2M + z_a(|x|-2M)
        let base = base_profile();
        let c = 0.7;
        let m_off = 0.25;
        let phi = SphereFunction::from_fn(32, |_| c).unwrap();
        let pair = BarrierPair::new(&base, 1.0, phi, Some(m_off)).unwrap();
        let interp = pair.translator.interpolant().unwrap();
        for &x in &[[1.0f64, 0.0], [2.0, 1.0], [0.8, -2.5], [4.0, 2.0]] {
            let r = x[0].hypot(x[1]);
            let q1 = pair.eval(x, BarrierSide::Sub).unwrap();
            let q2 = pair.eval(x, BarrierSide::Super).unwrap();
            let want1 = c - 2.0 * m_off + interp.u.eval(r + 2.0 * m_off).unwrap();
            let want2 = c + 2.0 * m_off + interp.u.eval(r - 2.0 * m_off).unwrap();
            assert!((q1 - want1).abs() < 1e-9, "q1 at {x:?}: {q1} vs {want1}");
            assert!((q2 - want2).abs() < 1e-9, "q2 at {x:?}: {q2} vs {want2}");
        }
        // dense enumeration oracle: plain scan over 65536 directions (peak
        // sampling error ~ (Δθ)²/8 · f'' ≈ 1e-9), no polish
        let x = [1.3, -0.9];
        let mut sup = f64::NEG_INFINITY;
        for j in 0..65536 {
            let t = 2.0 * std::f64::consts::PI * j as f64 / 65536.0;
            sup = sup.max(pair.branch_value(x, t, BarrierSide::Sub).unwrap());
        }
        let q1 = pair.eval(x, BarrierSide::Sub).unwrap();
        assert!(q1 >= sup - 1e-12 && (q1 - sup).abs() < 1e-8, "{q1} vs dense {sup}");
        let r = x[0].hypot(x[1]);
        let closed = c - 2.0 * m_off + interp.u.eval(r + 2.0 * m_off).unwrap();
        assert!((closed - sup).abs() < 1e-8, "closed {closed} vs dense {sup}");
    }

    #[test]
    fn ordering_and_spacelike_for_wavy_data() {
        let base = base_profile();
        let phi = SphereFunction::from_fn(64, |t| 0.3 * (2.0 * t).sin()).unwrap();
        let pair = BarrierPair::new(&base, 1.0, phi, None).unwrap();
        let nx = 101;
        let l = 6.0;
        let (q1, q2) = pair.grid(l, nx).unwrap();
        for c in 0..nx * nx {
            assert!(q1[c] <= q2[c] + 1e-12, "ordering violated at node {c}");
        }
        // centered differences stay strictly spacelike
        let h = 2.0 * l / (nx - 1) as f64;
        for q in [&q1, &q2] {
            for j in 1..nx - 1 {
                for i in 1..nx - 1 {
                    let gx = (q[i + 1 + nx * j] - q[i - 1 + nx * j]) / (2.0 * h);
                    let gy = (q[i + nx * (j + 1)] - q[i + nx * (j - 1)]) / (2.0 * h);
                    assert!(gx.hypot(gy) < 1.0, "node ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn asymptotic_gap_behavior() {
        let base = base_profile();
        // φ ≡ 0, M = 0: the gap at R is the height remainder ≈ e^{-R²}/(4R)
        let phi0 = SphereFunction::from_fn(32, |_| 0.0).unwrap();
        let pair0 = BarrierPair::new(&base, 1.0, phi0, Some(0.0)).unwrap();
        let gap4 = pair0.asymptotic_gap(4.0, 64).unwrap();
        assert!(gap4 < 1e-6, "gap(4) = {gap4}");

        // wavy data: gap decreasing in R
        let phi = SphereFunction::from_fn(64, |t| 0.3 * (2.0 * t).sin()).unwrap();
        let pair = BarrierPair::new(&base, 1.0, phi, None).unwrap();
        let g3 = pair.asymptotic_gap(3.0, 64).unwrap();
        let g5 = pair.asymptotic_gap(5.0, 64).unwrap();
        assert!(g5 < g3, "gap(5) = {g5} vs gap(3) = {g3}");

        // super-minus-sub gap shrinks with R toward the common asymptote
        let phi0 = SphereFunction::from_fn(32, |_| 0.0).unwrap();
        let pairm = BarrierPair::new(&base, 1.0, phi0, Some(0.2)).unwrap();
        let spread = |r: f64| {
            let x = [r, 0.0];
            pairm.eval(x, BarrierSide::Super).unwrap() - pairm.eval(x, BarrierSide::Sub).unwrap()
        };
        let (s2, s4, s6) = (spread(2.0), spread(4.0), spread(6.0));
        assert!(s2 <= 4.0 * 0.2 + 1e-9);
        assert!(s4 < s2 && s6 < s4, "spread not shrinking: {s2} {s4} {s6}");
    }

    #[test]
    fn envelopes_satisfy_differential_inequalities_numerically() {
        use crate::geometry::{curvature_field, GraphFunction};
        let base = base_profile();
        let phi = SphereFunction::from_fn(64, |t| 0.3 * (2.0 * t).sin()).unwrap();
        let pair = BarrierPair::new(&base, 1.0, phi, None).unwrap();
        let nx = 81;
        let l = 3.0;
        let (q1, q2) = pair.grid(l, nx).unwrap();
        let k = 2;
        let a = 1.0;
        for (vals, side) in [(q1, BarrierSide::Sub), (q2, BarrierSide::Super)] {
            let g = GraphFunction::from_values(l, nx, vals, 1e-6).unwrap();
            let field = curvature_field(&g, k).unwrap();
            let mut checked = 0usize;
            let mut total = 0usize;
            for j in 2..nx - 2 {
                for i in 2..nx - 2 {
                    let c = i + nx * j;
                    total += 1;
                    // skip envelope ridges, where the discrete Hessian spikes
                    let smooth = field.kappa2[c].abs() < 20.0 && !field.flagged[c];
                    if !smooth {
                        continue;
                    }
                    checked += 1;
                    let speed_gap = field.w[c] * field.phi[c] - a;
                    match side {
                        BarrierSide::Sub => assert!(
                            speed_gap >= -5e-3,
                            "subsolution inequality failed at ({i},{j}): {speed_gap}"
                        ),
                        BarrierSide::Super => assert!(
                            speed_gap <= 5e-3,
                            "supersolution inequality failed at ({i},{j}): {speed_gap}"
                        ),
                    }
                }
            }
            assert!(checked * 10 >= total * 8, "only {checked}/{total} smooth nodes");
        }
    }

    #[test]
    fn sphere_csv_round_trip_and_uniformity() {
        let mut text = String::from("theta,phi\n");
        let m = 16;
        for j in 0..m {
            let t = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            text.push_str(&format!("{},{}\n", t, (2.0 * t).sin()));
        }
        let sf = parse_sphere_csv(&text).unwrap();
        assert_eq!(sf.m, m);
        // non-uniform theta rejected
        let bad = "theta,phi\n0.0,1.0\n0.1,1.0\n0.2,1.0\n0.3,1.0\n0.4,1.0\n0.5,1.0\n0.6,1.0\n0.7,1.0\n";
        assert!(parse_sphere_csv(bad).is_err());
    }

    #[test]
    fn evaluation_outside_profile_range_is_an_error() {
        let base = base_profile();
        let phi = SphereFunction::from_fn(32, |_| 0.0).unwrap();
        let pair = BarrierPair::new(&base, 1.0, phi, Some(0.0)).unwrap();
        assert!(matches!(
            pair.eval([11.0, 0.0], BarrierSide::Sub),
            Err(CoreError::Extrapolation(_))
        ));
    }
}

//! Adaptive embedded Runge-Kutta 5(4) (Dormand-Prince) for small systems,
//! with the classic 4th-order dense-output interpolant.
//!
//! The radial translator construction integrates a 2-state system
//! (ζ = 1 - z and the height u) with mixed absolute/relative control; the
//! dense output is what fills the uniformly sampled profiles.

use crate::error::{CoreError, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            max_steps: 2_000_000,
        }
    }
}

/// One accepted step with its dense-output coefficients.
#[derive(Debug, Clone)]
struct DenseStep<const N: usize> {
    t: f64,
    h: f64,
    rcont: [[f64; N]; 5],
}

/// Accepted trajectory of an integration, continuously evaluable on
/// [t0, t_end] through the dense interpolant.
#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub t0: f64,
    pub t_end: f64,
    pub y_end: [f64; N],
    steps: Vec<DenseStep<N>>,
}

impl<const N: usize> Solution<N> {
    /// Dense-output sample; t is clamped to the integration interval.
    pub fn sample(&self, t: f64) -> [f64; N] {
        let t = t.clamp(self.t0.min(self.t_end), self.t0.max(self.t_end));
        let idx = match self
            .steps
            .binary_search_by(|s| s.t.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let step = &self.steps[idx.min(self.steps.len() - 1)];
        let theta = ((t - step.t) / step.h).clamp(0.0, 1.0);
        let theta1 = 1.0 - theta;
        let mut out = [0.0; N];
        for i in 0..N {
            let r = &step.rcont;
            out[i] = r[0][i]
                + theta
                    * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])));
        }
        out
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

impl Dopri5 {
    /// Integrate y' = f(t, y) from t0 to t_end (t_end > t0).
    pub fn integrate<const N: usize, F>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
    ) -> Result<Solution<N>>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    {
        if !(t_end > t0) {
            return Err(CoreError::Parameter(format!(
                "integration interval [{t0}, {t_end}] is empty"
            )));
        }
        let span = t_end - t0;
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y)?;
        let mut h = (1e-4 * span).min(span);
        let h_min = 1e-14 * span.max(1.0);
        let mut steps = Vec::new();

        for _ in 0..self.max_steps {
            if t >= t_end {
                return Ok(Solution {
                    t0,
                    t_end,
                    y_end: y,
                    steps,
                });
            }
            if h < h_min {
                return Err(CoreError::Integration {
                    at: t,
                    message: format!("step size underflow (h = {h:.3e})"),
                });
            }
            h = h.min(t_end - t);

            let y2 = axpy(&y, h, &[(A21, &k1)]);
            let k2 = f(t + C2 * h, &y2)?;
            let y3 = axpy(&y, h, &[(A31, &k1), (A32, &k2)]);
            let k3 = f(t + C3 * h, &y3)?;
            let y4 = axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            let k4 = f(t + C4 * h, &y4)?;
            let y5 = axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            let k5 = f(t + C5 * h, &y5)?;
            let y6 = axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            );
            let k6 = f(t + h, &y6)?;
            let y_new = axpy(
                &y,
                h,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            );
            let k7 = f(t + h, &y_new)?;

            // embedded 4th-order error estimate, mixed abs/rel norm
            let mut err_sq = 0.0;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i]
                        + E3 * k3[i]
                        + E4 * k4[i]
                        + E5 * k5[i]
                        + E6 * k6[i]
                        + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err_sq += (e / sc) * (e / sc);
            }
            let err = (err_sq / N as f64).sqrt();

            if err <= 1.0 {
                let mut rcont = [[0.0; N]; 5];
                for i in 0..N {
                    let ydiff = y_new[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    rcont[0][i] = y[i];
                    rcont[1][i] = ydiff;
                    rcont[2][i] = bspl;
                    rcont[3][i] = ydiff - h * k7[i] - bspl;
                    rcont[4][i] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                steps.push(DenseStep { t, h, rcont });
                t += h;
                y = y_new;
                k1 = k7; // FSAL
                h *= (0.9 * err.max(1e-10).powf(-0.2)).clamp(1.0, 5.0);
            } else {
                h *= (0.9 * err.powf(-0.2)).clamp(0.2, 0.9);
            }
        }
        Err(CoreError::Integration {
            at: t,
            message: format!("exceeded {} steps", self.max_steps),
        })
    }
}

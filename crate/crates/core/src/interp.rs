//! Cubic interpolation on uniformly spaced samples (4-point Lagrange),
//! in one dimension and as a tensor product on 2-D grids.

use crate::error::{CoreError, Result};

/// Lagrange basis weights for the 4-point stencil {-1, 0, 1, 2} evaluated at
/// offset s ∈ [0, 1] from node 0.
pub fn cubic_weights(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

/// d/ds of [`cubic_weights`].
pub fn cubic_weights_d1(s: f64) -> [f64; 4] {
    [
        -(3.0 * s * s - 6.0 * s + 2.0) / 6.0,
        (3.0 * s * s - 4.0 * s - 1.0) / 2.0,
        -(3.0 * s * s - 2.0 * s - 2.0) / 2.0,
        (3.0 * s * s - 1.0) / 6.0,
    ]
}

/// d²/ds² of [`cubic_weights`].
pub fn cubic_weights_d2(s: f64) -> [f64; 4] {
    [-(s - 1.0), 3.0 * s - 2.0, -(3.0 * s - 1.0), s]
}

/// Uniformly sampled function of one variable with cubic evaluation.
#[derive(Debug, Clone)]
pub struct UniformCubic {
    x0: f64,
    h: f64,
    values: Vec<f64>,
}

impl UniformCubic {
    pub fn new(x0: f64, h: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 4 {
            return Err(CoreError::Parameter(
                "cubic interpolation needs at least 4 samples".into(),
            ));
        }
        if !(h > 0.0) {
            return Err(CoreError::Parameter(format!("grid spacing h = {h} must be positive")));
        }
        Ok(Self { x0, h, values })
    }

    pub fn x_min(&self) -> f64 {
        self.x0
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.h * (self.values.len() - 1) as f64
    }

    /// Stencil base index and fractional offset for x; the stencil is shifted
    /// inward near the ends (one-sided cubic).
    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let n = self.values.len();
        let pad = 1e-9 * self.h;
        if x < self.x_min() - pad || x > self.x_max() + pad {
            return Err(CoreError::Extrapolation(format!(
                "x = {x} outside tabulated range [{}, {}]",
                self.x_min(),
                self.x_max()
            )));
        }
        let u = ((x - self.x0) / self.h).clamp(0.0, (n - 1) as f64);
        let i = (u.floor() as usize).clamp(1, n - 3);
        Ok((i, u - i as f64))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (i, s) = self.locate(x)?;
        let w = cubic_weights(s);
        Ok((0..4).map(|j| w[j] * self.values[i - 1 + j]).sum())
    }

    pub fn eval_d1(&self, x: f64) -> Result<f64> {
        let (i, s) = self.locate(x)?;
        let w = cubic_weights_d1(s);
        Ok((0..4).map(|j| w[j] * self.values[i - 1 + j]).sum::<f64>() / self.h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let f = |x: f64| 2.0 - x + 0.5 * x * x - 0.25 * x * x * x;
        let h = 0.1;
        let values: Vec<f64> = (0..50).map(|i| f(i as f64 * h)).collect();
        let interp = UniformCubic::new(0.0, h, values).unwrap();
        for &x in &[0.0, 0.037, 1.23, 3.999, 4.9] {
            assert!((interp.eval(x).unwrap() - f(x)).abs() < 1e-12, "x={x}");
        }
        let df = |x: f64| -1.0 + x - 0.75 * x * x;
        for &x in &[0.05, 2.5, 4.85] {
            assert!((interp.eval_d1(x).unwrap() - df(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn fourth_order_on_smooth_functions() {
        let h1 = 0.02;
        let h2 = 0.01;
        let err = |h: f64| {
            let values: Vec<f64> = (0..((4.0 / h) as usize + 1)).map(|i| (i as f64 * h).sin()).collect();
            let interp = UniformCubic::new(0.0, h, values).unwrap();
            (0..200)
                .map(|i| {
                    let x = 0.05 + 3.8 * i as f64 / 199.0;
                    (interp.eval(x).unwrap() - x.sin()).abs()
                })
                .fold(0.0f64, f64::max)
        };
        let (e1, e2) = (err(h1), err(h2));
        let order = (e1 / e2).log2();
        assert!(order > 3.5, "measured order {order}");
    }

    #[test]
    fn rejects_out_of_range() {
        let interp = UniformCubic::new(0.0, 1.0, vec![0.0; 8]).unwrap();
        assert!(matches!(
            interp.eval(9.5),
            Err(CoreError::Extrapolation(_))
        ));
    }
}

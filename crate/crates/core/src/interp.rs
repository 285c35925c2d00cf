//! Natural cubic spline on a uniform grid.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct UniformSpline {
    start: f64,
    step: f64,
    values: Vec<f64>,
    /// Second derivatives at the knots.
    curvature: Vec<f64>,
}

impl UniformSpline {
    pub fn new(start: f64, step: f64, values: Vec<f64>) -> Self {
        let n = values.len();
        assert!(n >= 3 && step > 0.0, "spline needs at least three knots");
        // Tridiagonal system for the interior second derivatives with
        // M₀ = M_{n−1} = 0, solved by the Thomas algorithm.
        let mut curvature = vec![0.0; n];
        let mut diag = vec![4.0; n - 2];
        let mut rhs: Vec<f64> = (1..n - 1)
            .map(|i| 6.0 * (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (step * step))
            .collect();
        for i in 1..n - 2 {
            let m = 1.0 / diag[i - 1];
            diag[i] -= m;
            rhs[i] -= m * rhs[i - 1];
        }
        for i in (0..n - 2).rev() {
            let next = if i + 1 < n - 2 { curvature[i + 2] } else { 0.0 };
            curvature[i + 1] = (rhs[i] - next) / diag[i];
        }
        UniformSpline {
            start,
            step,
            values,
            curvature,
        }
    }

    pub fn lo(&self) -> f64 {
        self.start
    }

    pub fn hi(&self) -> f64 {
        self.start + self.step * (self.values.len() - 1) as f64
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo() && x <= self.hi()
    }

    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if !self.contains(x) {
            return Err(Error::OutsideTable {
                omega: x,
                lo: self.lo(),
                hi: self.hi(),
            });
        }
        let pos = (x - self.start) / self.step;
        let i = (pos.floor() as usize).min(self.values.len() - 2);
        Ok((i, pos - i as f64))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (i, t) = self.locate(x)?;
        let (a, b) = (1.0 - t, t);
        let h2 = self.step * self.step;
        Ok(a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.curvature[i] + (b * b * b - b) * self.curvature[i + 1]) * h2 / 6.0)
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        let (i, t) = self.locate(x)?;
        let (a, b) = (1.0 - t, t);
        Ok((self.values[i + 1] - self.values[i]) / self.step
            + ((1.0 - 3.0 * a * a) * self.curvature[i] + (3.0 * b * b - 1.0) * self.curvature[i + 1]) * self.step
                / 6.0)
    }

    pub fn second_derivative(&self, x: f64) -> Result<f64> {
        let (i, t) = self.locate(x)?;
        Ok((1.0 - t) * self.curvature[i] + t * self.curvature[i + 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_smooth_function_in_interior() {
        let n = 200;
        let (lo, hi) = (0.0, 3.0);
        let step = (hi - lo) / (n - 1) as f64;
        let s = UniformSpline::new(lo, step, (0..n).map(|i| (lo + step * i as f64).sin()).collect());
        for k in 0..50 {
            let x = 0.5 + 2.0 * k as f64 / 49.0;
            assert!((s.eval(x).unwrap() - x.sin()).abs() < 1e-9);
            assert!((s.derivative(x).unwrap() - x.cos()).abs() < 1e-6);
        }
        assert!(s.eval(3.1).is_err());
    }

    #[test]
    fn passes_through_knots() {
        let s = UniformSpline::new(1.0, 0.5, vec![1.0, 4.0, 2.0, 8.0, 5.0]);
        for (i, v) in [1.0, 4.0, 2.0, 8.0, 5.0].iter().enumerate() {
            assert!((s.eval(1.0 + 0.5 * i as f64).unwrap() - v).abs() < 1e-12);
        }
    }
}

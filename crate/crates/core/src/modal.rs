//! Modal dispersion β(ω), k′(ω) and n_eff(ω) for one mode of one fiber,
//! either by direct solves or from a pre-tabulated cubic interpolant.

use rayon::prelude::*;

use crate::constants::SPEED_OF_LIGHT;
use crate::dispersion::Spectral;
use crate::error::{Error, Result};
use crate::fibermodes::{group_slowness, solve_mode, FiberSpec, ModeLabel};
use crate::interp::UniformSpline;

/// Default number of tabulation nodes.
pub const TABLE_NODES: usize = 200;

pub trait ModalDispersion: Sync {
    /// Propagation constant in rad/m at angular frequency `omega`.
    fn beta(&self, omega: f64) -> Result<f64>;

    /// Group slowness dβ/dω in s/m.
    fn group_slowness(&self, omega: f64) -> Result<f64>;

    fn n_eff(&self, omega: f64) -> Result<f64> {
        Ok(self.beta(omega)? * SPEED_OF_LIGHT / omega)
    }
}

/// Calls the mode solver at every frequency.
#[derive(Debug, Clone, Copy)]
pub struct DirectDispersion {
    pub fiber: FiberSpec,
    pub label: ModeLabel,
}

impl DirectDispersion {
    pub fn new(fiber: FiberSpec, label: ModeLabel) -> Self {
        DirectDispersion { fiber, label }
    }
}

impl ModalDispersion for DirectDispersion {
    fn beta(&self, omega: f64) -> Result<f64> {
        Ok(solve_mode(&self.fiber, Spectral::from_angular(omega), self.label)?.beta)
    }

    fn group_slowness(&self, omega: f64) -> Result<f64> {
        group_slowness(&self.fiber, self.label, Spectral::from_angular(omega))
    }
}

/// Cubic spline of the residual after removing the quadratic through the
/// first, middle and last samples. The detrending keeps the natural end
/// conditions from biasing a function with large curvature.
#[derive(Debug, Clone)]
struct DetrendedSpline {
    center: f64,
    trend: [f64; 3],
    residual: UniformSpline,
}

impl DetrendedSpline {
    fn new(start: f64, step: f64, values: &[f64]) -> Self {
        let n = values.len();
        let mid = n / 2;
        let center = start + step * mid as f64;
        let (x0, x2) = (start - center, start + step * (n - 1) as f64 - center);
        let (y0, y1, y2) = (values[0], values[mid], values[n - 1]);
        // Quadratic c0 + c1 x + c2 x² through (x0, y0), (0, y1), (x2, y2).
        let s0 = (y0 - y1) / x0;
        let s2 = (y2 - y1) / x2;
        let c2 = (s2 - s0) / (x2 - x0);
        let c1 = s0 - c2 * x0;
        let trend = [y1, c1, c2];
        let residual = values
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let x = start + step * i as f64 - center;
                y - (trend[0] + x * (trend[1] + x * trend[2]))
            })
            .collect();
        DetrendedSpline {
            center,
            trend,
            residual: UniformSpline::new(start, step, residual),
        }
    }

    fn eval(&self, x: f64) -> Result<f64> {
        let dx = x - self.center;
        Ok(self.trend[0] + dx * (self.trend[1] + dx * self.trend[2]) + self.residual.eval(x)?)
    }

    fn derivative(&self, x: f64) -> Result<f64> {
        let dx = x - self.center;
        Ok(self.trend[1] + 2.0 * dx * self.trend[2] + self.residual.derivative(x)?)
    }

    fn second_derivative(&self, x: f64) -> Result<f64> {
        Ok(2.0 * self.trend[2] + self.residual.second_derivative(x)?)
    }
}

/// β and k′ of one mode tabulated on a uniform angular-frequency grid.
#[derive(Debug, Clone)]
pub struct DispersionTable {
    pub fiber: FiberSpec,
    pub label: ModeLabel,
    beta: DetrendedSpline,
    slowness: DetrendedSpline,
    nodes: usize,
}

impl DispersionTable {
    /// Tabulates on `nodes` points spanning [lo, hi] rad/s. Node solves run
    /// in parallel; results are independent of the worker count.
    pub fn build(fiber: FiberSpec, label: ModeLabel, lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || nodes < 4 {
            return Err(Error::InvalidParameter(format!(
                "dispersion table needs 0 < lo < hi and at least 4 nodes, got [{lo:e}, {hi:e}] with {nodes}"
            )));
        }
        let step = (hi - lo) / (nodes - 1) as f64;
        let direct = DirectDispersion::new(fiber, label);
        let samples: Vec<(f64, f64)> = (0..nodes)
            .into_par_iter()
            .map(|i| {
                let omega = lo + step * i as f64;
                Ok((direct.beta(omega)?, direct.group_slowness(omega)?))
            })
            .collect::<Result<_>>()?;
        let (beta, slowness): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
        Ok(DispersionTable {
            fiber,
            label,
            beta: DetrendedSpline::new(lo, step, &beta),
            slowness: DetrendedSpline::new(lo, step, &slowness),
            nodes,
        })
    }

    pub fn lo(&self) -> f64 {
        self.beta.residual.lo()
    }

    pub fn hi(&self) -> f64 {
        self.beta.residual.hi()
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        self.beta.residual.contains(lo) && self.beta.residual.contains(hi)
    }

    /// Group-velocity dispersion d²β/dω² in s²/m, from the k′ table.
    pub fn group_velocity_dispersion(&self, omega: f64) -> Result<f64> {
        self.slowness.derivative(omega)
    }

    /// Curvature of the β interpolant itself; agrees with
    /// [`Self::group_velocity_dispersion`] up to interpolation error.
    pub fn beta_curvature(&self, omega: f64) -> Result<f64> {
        self.beta.second_derivative(omega)
    }

    /// Largest relative deviation of β and k′ from direct solves at `count`
    /// quasi-random interior frequencies.
    pub fn max_relative_error(&self, count: usize) -> Result<f64> {
        let direct = DirectDispersion::new(self.fiber, self.label);
        let golden = 0.5 * (5f64.sqrt() - 1.0);
        let (lo, hi) = (self.lo(), self.hi());
        let errors: Vec<f64> = (1..=count)
            .into_par_iter()
            .map(|k| {
                let omega = lo + (hi - lo) * (k as f64 * golden).fract();
                let db = (self.beta(omega)? / direct.beta(omega)? - 1.0).abs();
                let dk = (self.group_slowness(omega)? / direct.group_slowness(omega)? - 1.0).abs();
                Ok(db.max(dk))
            })
            .collect::<Result<_>>()?;
        Ok(errors.into_iter().fold(0.0, f64::max))
    }
}

impl ModalDispersion for DispersionTable {
    fn beta(&self, omega: f64) -> Result<f64> {
        self.beta.eval(omega)
    }

    fn group_slowness(&self, omega: f64) -> Result<f64> {
        self.slowness.eval(omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fiber() -> FiberSpec {
        FiberSpec::air_clad_silica(0.395e-6, 0.1).unwrap()
    }

    #[test]
    fn table_agrees_with_direct_solves() {
        let w0 = Spectral::from_wavelength_um(1.596).angular();
        let table = DispersionTable::build(fiber(), ModeLabel::HE11, 0.9 * w0, 1.1 * w0, TABLE_NODES).unwrap();
        assert!(table.max_relative_error(20).unwrap() < 1e-6);
    }

    #[test]
    fn tabulated_beta_accurate_on_phase_scale() {
        // Interpolation error in β must be far below 1/L for L = 10 cm.
        let w0 = Spectral::from_wavelength_um(1.596).angular();
        let table = DispersionTable::build(fiber(), ModeLabel::HE11, 0.95 * w0, 1.05 * w0, TABLE_NODES).unwrap();
        let direct = DirectDispersion::new(fiber(), ModeLabel::HE11);
        for k in 0..7 {
            let omega = w0 * (0.96 + 0.013 * k as f64 + 0.0017);
            let err = (table.beta(omega).unwrap() - direct.beta(omega).unwrap()).abs();
            assert!(err < 1e-3, "{err} rad/m at {omega:e}");
        }
    }

    #[test]
    fn curvature_consistent() {
        let w0 = Spectral::from_wavelength_um(1.596).angular();
        let table = DispersionTable::build(fiber(), ModeLabel::HE11, 0.95 * w0, 1.05 * w0, TABLE_NODES).unwrap();
        let a = table.group_velocity_dispersion(w0).unwrap();
        let b = table.beta_curvature(w0).unwrap();
        assert!(a > 0.0);
        assert!(((a - b) / a).abs() < 1e-4, "{a} vs {b}");
    }

    #[test]
    fn outside_window_is_error() {
        let w0 = Spectral::from_wavelength_um(1.596).angular();
        let table = DispersionTable::build(fiber(), ModeLabel::HE11, 0.99 * w0, 1.01 * w0, 20).unwrap();
        assert!(matches!(table.beta(1.2 * w0), Err(Error::OutsideTable { .. })));
    }

    #[test]
    fn n_eff_from_beta() {
        let direct = DirectDispersion::new(fiber(), ModeLabel::HE11);
        let w = Spectral::from_wavelength_um(1.596);
        let mode = solve_mode(&fiber(), w, ModeLabel::HE11).unwrap();
        assert!((direct.n_eff(w.angular()).unwrap() - mode.n_eff).abs() < 1e-14);
    }
}

//! Fixed-order quadrature rules shared by the overlap and rate integrals.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::Serialize;

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order).expect("quadrature order must be positive");
        let (nodes, weights) = GaussLegendre::new(order)
            .as_node_weight_pairs()
            .iter()
            .copied()
            .unzip();
        GaussRule { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule over `panels` equal sub-intervals of [a, b].
    pub fn composite(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + h * p as f64;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}

/// Integrates axially symmetric integrands over the transverse plane,
/// `∫₀^R 2πr g(r) dr`, split at the core boundary where mode fields have a
/// derivative kink.
#[derive(Debug, Clone)]
pub struct RadialQuadrature {
    rule: GaussRule,
    pub core_panels: usize,
    pub cladding_panels: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RadialQuadratureSettings {
    pub order: usize,
    pub core_panels: usize,
    pub cladding_panels: usize,
}

impl Default for RadialQuadrature {
    fn default() -> Self {
        Self::new(16, 8, 64)
    }
}

impl RadialQuadrature {
    pub fn new(order: usize, core_panels: usize, cladding_panels: usize) -> Self {
        RadialQuadrature {
            rule: GaussRule::new(order),
            core_panels,
            cladding_panels,
        }
    }

    /// Same rule with twice the panel density.
    pub fn refined(&self) -> Self {
        RadialQuadrature {
            rule: self.rule.clone(),
            core_panels: 2 * self.core_panels,
            cladding_panels: 2 * self.cladding_panels,
        }
    }

    pub fn settings(&self) -> RadialQuadratureSettings {
        RadialQuadratureSettings {
            order: self.rule.order(),
            core_panels: self.core_panels,
            cladding_panels: self.cladding_panels,
        }
    }

    pub fn integrate(&self, breakpoint: f64, extent: f64, g: impl Fn(f64) -> f64) -> f64 {
        let radial = |r: f64| 2.0 * PI * r * g(r);
        let inner = self.rule.composite(0.0, breakpoint, self.core_panels, radial);
        let outer = if extent > breakpoint {
            self.rule.composite(breakpoint, extent, self.cladding_panels, radial)
        } else {
            0.0
        };
        inner + outer
    }
}

/// Composite Simpson rule on uniformly spaced samples; an even number of
/// intervals is required.
pub fn simpson(samples: &[f64], step: f64) -> f64 {
    let n = samples.len();
    assert!(n >= 3 && n % 2 == 1, "simpson needs an odd number of samples");
    let interior: f64 = samples[1..n - 1]
        .iter()
        .enumerate()
        .map(|(i, y)| if i % 2 == 0 { 4.0 * y } else { 2.0 * y })
        .sum();
    step / 3.0 * (samples[0] + interior + samples[n - 1])
}

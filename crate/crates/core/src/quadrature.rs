//! Gaussian-weighted quadrature rules.

use crate::special::norm_pdf;
use std::f64::consts::PI;

/// Gauss–Hermite rule rescaled for expectations under a standard normal.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite needs at least one node");
        let nf = n as f64;
        // orthonormal Hermite functions ψ_n(z), ψ_{n−1}(z); the Gaussian factor keeps large n finite
        let eval = |z: f64| -> (f64, f64) {
            let (mut p1, mut p2) = (PI.powf(-0.25) * (-0.5 * z * z).exp(), 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            (p1, p2)
        };
        // bracket the non-negative roots on a grid finer than their smallest spacing
        let half = n / 2;
        let mut roots = Vec::with_capacity(n.div_ceil(2));
        if n % 2 == 1 {
            roots.push(0.0);
        }
        let step = PI / (2.0 * nf + 1.0).sqrt() / 8.0;
        let mut a = if n % 2 == 1 { 0.5 * step } else { 0.0 };
        let mut fa = eval(a).0;
        while roots.len() < half + n % 2 {
            let b = a + step;
            let fb = eval(b).0;
            if fa * fb <= 0.0 {
                let (mut lo, mut hi, mut flo) = (a, b, fa);
                while hi - lo > 1e-15 * hi {
                    let mid = 0.5 * (lo + hi);
                    let fm = eval(mid).0;
                    if (fm <= 0.0) == (flo <= 0.0) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            a = b;
            fa = fb;
        }
        let weight = |z: f64| {
            let pp = (2.0 * nf).sqrt() * eval(z).1;
            2.0 * (-z * z).exp() / (pp * pp) / PI.sqrt()
        };
        let mut points: Vec<(f64, f64)> = roots
            .iter()
            .filter(|z| **z > 0.0)
            .map(|&z| (-z, weight(z)))
            .collect();
        points.reverse();
        points.extend(roots.iter().map(|&z| (z, weight(z))));
        Self {
            nodes: points.iter().map(|p| p.0 * std::f64::consts::SQRT_2).collect(),
            weights: points.iter().map(|p| p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// (node, weight) pairs with Σ weight = 1, for E f(v), v ~ N(0,1).
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points().map(|(v, w)| w * f(v)).sum()
    }
}

/// Gauss–Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre needs at least one node");
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut pp = 0.0;
            for _ in 0..100 {
                let (mut p1, mut p2) = (1.0, 0.0);
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
                }
                pp = nf * (z * p1 - p2) / (z * z - 1.0);
                let step = p1 / pp;
                z -= step;
                if step.abs() <= 1e-16 {
                    break;
                }
            }
            x[i] = -z;
            x[n - 1 - i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
            w[n - 1 - i] = w[i];
        }
        Self { nodes: x, weights: w }
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
    }
}

/// Quadrature policy for `E f(v)`, v ~ N(0,1), where `f` may have sharp
/// features of known location and width.
#[derive(Debug, Clone)]
pub struct GaussianQuadrature {
    hermite: GaussHermite,
    legendre: GaussLegendre,
    span: f64,
    base_panel: f64,
}

/// Feature widths above this are resolved by the Hermite rule alone.
const SMOOTH_WIDTH: f64 = 0.3;
const FEATURE_OFFSETS: [f64; 8] = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
const MAX_FEATURES: usize = 2048;

impl Default for GaussianQuadrature {
    fn default() -> Self {
        Self::with_orders(121, 12)
    }
}

impl GaussianQuadrature {
    pub fn with_orders(hermite_nodes: usize, legendre_nodes: usize) -> Self {
        Self {
            hermite: GaussHermite::new(hermite_nodes),
            legendre: GaussLegendre::new(legendre_nodes),
            span: 10.0,
            base_panel: 0.5,
        }
    }

    /// Same policy with both node counts doubled.
    pub fn refined(&self) -> Self {
        Self {
            hermite: GaussHermite::new(2 * self.hermite.len()),
            legendre: GaussLegendre::new(2 * self.legendre.nodes.len()),
            ..self.clone()
        }
    }

    pub fn hermite(&self) -> &GaussHermite {
        &self.hermite
    }

    /// Plain Hermite expectation for smooth integrands.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.hermite.expect(f)
    }

    /// Expectation of `f` whose kinks sit at `features` with transition width
    /// `width`. Falls back to the Hermite rule when every feature is wide or
    /// features are dense enough that their sum is smooth.
    pub fn expect_with_features(
        &self,
        f: impl Fn(f64) -> f64,
        features: &[f64],
        width: f64,
    ) -> f64 {
        let reach = self.span + FEATURE_OFFSETS[7] * width;
        let local: Vec<f64> = features
            .iter()
            .copied()
            .filter(|t| t.abs() <= reach)
            .collect();
        let min_gap = local
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(f64::INFINITY, f64::min);
        if width >= SMOOTH_WIDTH || local.is_empty() || min_gap <= 0.5 * width {
            return self.hermite.expect(f);
        }
        let mut edges: Vec<f64> = Vec::new();
        let panels = (2.0 * self.span / self.base_panel).round() as usize;
        edges.extend((0..=panels).map(|i| -self.span + i as f64 * self.base_panel));
        if local.len() <= MAX_FEATURES {
            for t in &local {
                for d in FEATURE_OFFSETS {
                    edges.push(t + d * width);
                    edges.push(t - d * width);
                }
            }
        } else {
            let step = 0.5 * width;
            let n = (2.0 * self.span / step).ceil() as usize;
            edges.extend((0..=n).map(|i| -self.span + i as f64 * step));
        }
        edges.retain(|e| e.abs() <= self.span);
        edges.sort_by(f64::total_cmp);
        edges.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        edges
            .windows(2)
            .map(|w| self.legendre.integrate(w[0], w[1], |v| norm_pdf(v) * f(v)))
            .sum()
    }
}

//! Output-channel integrals of the replica equations.
//!
//! With overlap Q = q_H·q_X and residual variance e = σ² + c_H·c_X − Q, one
//! real component of the decoupled output sees V = √Q·v (v ~ N(0,1)) and
//! falls into bin b with probability Ψ_b(V) = Φ((√2 r_b − V)/√e) − Φ((√2 r_{b−1} − V)/√e).

use crate::error::{Error, Result};
use crate::quadrature::GaussianQuadrature;
use crate::quantizer::QuantizerSpec;
use crate::special::{norm_pdf, truncated_std_normal};
use std::f64::consts::SQRT_2;

/// Bins whose nearest edge is farther than this (in units of √e) are dropped.
const BIN_CUTOFF: f64 = 14.0;

/// Receiver front end seen by the replica equations.
#[derive(Debug, Clone, PartialEq)]
pub enum AdcModel {
    Quantized(QuantizerSpec),
    /// Infinite-resolution limit.
    Unquantized,
}

/// Overlap and residual variance of one phase (pilot or data) of the output channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputState {
    pub overlap: f64,
    pub residual: f64,
}

impl OutputState {
    pub fn new(noise_var: f64, channel_var: f64, power: f64, q_h: f64, q_x: f64) -> Result<Self> {
        let overlap = (q_h * q_x).max(0.0);
        let residual = noise_var + channel_var * power - overlap;
        if !(residual > 0.0) || !residual.is_finite() {
            return Err(Error::NonPositiveVariance(residual));
        }
        Ok(Self { overlap, residual })
    }
}

/// Ψ_b(V).
pub fn psi_b(v_big: f64, bin: usize, state: OutputState, spec: &QuantizerSpec) -> Result<f64> {
    let (lo, hi) = spec.bin_bounds(bin)?;
    let s = state.residual.sqrt();
    Ok(truncated_std_normal((SQRT_2 * lo - v_big) / s, (SQRT_2 * hi - v_big) / s).mass())
}

/// ∂Ψ_b/∂V.
pub fn psi_b_prime(v_big: f64, bin: usize, state: OutputState, spec: &QuantizerSpec) -> Result<f64> {
    let (lo, hi) = spec.bin_bounds(bin)?;
    let s = state.residual.sqrt();
    let pdf = |u: f64| if u.is_infinite() { 0.0 } else { norm_pdf(u) };
    Ok((pdf((SQRT_2 * lo - v_big) / s) - pdf((SQRT_2 * hi - v_big) / s)) / s)
}

// Σ_b over bins near V of f(mass, mean) where (mass, mean) are the
// normalizer and truncated mean in standardized units.
fn sum_bins(spec: &QuantizerSpec, v_big: f64, sd: f64, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
    let t = spec.thresholds();
    let edge = |i: usize| (SQRT_2 * t[i] - v_big) / sd;
    let centre = spec.bin_of(v_big / SQRT_2);
    let mut term = |b: usize| {
        let m = truncated_std_normal(edge(b - 1), edge(b));
        if m.degenerate {
            0.0
        } else {
            f(m.log_mass.exp(), m.mean)
        }
    };
    let mut total = term(centre);
    let mut b = centre + 1;
    while b <= spec.num_bins() && edge(b - 1) < BIN_CUTOFF {
        total += term(b);
        b += 1;
    }
    let mut b = centre;
    while b > 1 && edge(b - 1) > -BIN_CUTOFF {
        total += term(b - 1);
        b -= 1;
    }
    total
}

fn integrate_over_v(
    spec: &QuantizerSpec,
    state: OutputState,
    quad: &GaussianQuadrature,
    f: impl Fn(f64, f64) -> f64 + Copy,
) -> f64 {
    let sd = state.residual.sqrt();
    let root_q = state.overlap.sqrt();
    if root_q == 0.0 {
        return sum_bins(spec, 0.0, sd, f);
    }
    let features: Vec<f64> = spec
        .finite_thresholds()
        .iter()
        .map(|r| SQRT_2 * r / root_q)
        .collect();
    let width = sd / root_q;
    quad.expect_with_features(|v| sum_bins(spec, root_q * v, sd, f), &features, width)
}

/// χ = Σ_b ∫Dv Ψ′_b(V)²/Ψ_b(V).
pub fn chi(adc: &AdcModel, state: OutputState, quad: &GaussianQuadrature) -> f64 {
    match adc {
        AdcModel::Unquantized => 1.0 / state.residual,
        AdcModel::Quantized(spec) => {
            integrate_over_v(spec, state, quad, |mass, mean| mass * mean * mean) / state.residual
        }
    }
}

/// Σ_b ∫Dv Ψ_b(V) log Ψ_b(V) for one real component. The unquantized model
/// uses the negative differential entropy of N(V, e), which has the same
/// derivative in the overlap.
pub fn bin_entropy(adc: &AdcModel, state: OutputState, quad: &GaussianQuadrature) -> f64 {
    match adc {
        AdcModel::Unquantized => {
            -0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * state.residual).ln()
        }
        AdcModel::Quantized(spec) => integrate_over_v(spec, state, quad, |mass, _| {
            if mass < 1e-300 {
                0.0
            } else {
                mass * mass.ln()
            }
        }),
    }
}

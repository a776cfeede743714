//! Replica-optimal quantizer step size.

use super::output::AdcModel;
use super::solver::{ReplicaInput, ReplicaSolver};
use crate::error::{Error, Result};
use crate::quantizer::QuantizerSpec;
use crate::ReceiverMode;

/// Linear fit Δ_opt(snr_dB) = a₀ + a₁·snr_dB of the normalized step size.
pub fn fitted_coefficients(bits: u32) -> Option<(f64, f64)> {
    match bits {
        2 => Some((0.6921, -0.0154)),
        3 => Some((0.4364, -0.0118)),
        4 => Some((0.2559, -0.0071)),
        _ => None,
    }
}

pub fn fitted_step_size(bits: u32, snr_db: f64) -> Option<f64> {
    fitted_coefficients(bits).map(|(a0, a1)| a0 + a1 * snr_db)
}

/// E|Y|² for unit-power channel and symbols: normalized Δ = Δ / √(1 + σ²).
pub fn normalization(noise_var: f64) -> f64 {
    (1.0 + noise_var).sqrt()
}

/// Normalized step sizes 0.05, 0.10, …, 1.50.
pub fn default_grid() -> Vec<f64> {
    (1..=30).map(|i| 0.05 * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSizeResult {
    /// Normalized optimum Δ/√(1+σ²).
    pub delta_opt: f64,
    pub fitted: Option<f64>,
    /// Predicted effective data SNR at the optimum.
    pub qt_xd: f64,
    pub ser: Option<f64>,
    /// False when the best grid point sits on the grid boundary.
    pub interior: bool,
}

/// Searches the normalized step size maximizing the effective data SNR
/// (equivalently minimizing the predicted SER) over `grid`, then refines
/// with a golden-section search around the best grid point.
pub fn optimal_step_size(
    solver: &ReplicaSolver,
    base: &ReplicaInput,
    bits: u32,
    grid: &[f64],
) -> Result<StepSizeResult> {
    if bits < 2 {
        return Err(Error::InvalidParameter(
            "a one-bit quantizer does not depend on the step size".into(),
        ));
    }
    if grid.len() < 3 || grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] > 0.0) {
        return Err(Error::InvalidParameter(
            "step grid must be positive, increasing and have at least 3 points".into(),
        ));
    }
    let scale = normalization(base.noise_var);
    let objective = |delta: f64| -> Result<f64> {
        let input = ReplicaInput {
            adc: AdcModel::Quantized(QuantizerSpec::uniform(bits, delta * scale)?),
            ..base.clone()
        };
        Ok(solver.solve(&input, ReceiverMode::Jcd)?.qt_xd)
    };
    let values = grid.iter().map(|&d| objective(d)).collect::<Result<Vec<f64>>>()?;
    let best = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    let interior = best > 0 && best + 1 < grid.len();
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c)?, objective(d)?);
    while (b - a) > 1e-4 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d)?;
        }
    }
    let mut delta_opt = 0.5 * (a + b);
    let mut qt = objective(delta_opt)?;
    if values[best] > qt {
        delta_opt = grid[best];
        qt = values[best];
    }
    let snr_db = -10.0 * base.noise_var.log10();
    Ok(StepSizeResult {
        delta_opt,
        fitted: fitted_step_size(bits, snr_db),
        qt_xd: qt,
        ser: crate::scalar_channel::ser_from_snr(&base.data_prior, qt).ok(),
        interior,
    })
}

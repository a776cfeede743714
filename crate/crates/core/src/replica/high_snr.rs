//! High-SNR behaviour of pilot-only channel estimation.

use crate::quadrature::GaussLegendre;
use crate::quantizer::QuantizerSpec;
use crate::special::norm_log_cdf;
use std::sync::OnceLock;

/// J = ∫ e^{−u²}/Φ(u) du over the real line.
pub fn tail_integral() -> f64 {
    static J: OnceLock<f64> = OnceLock::new();
    *J.get_or_init(|| {
        let gl = GaussLegendre::new(16);
        let (lo, hi, width) = (-60.0, 14.0, 0.25);
        let panels = ((hi - lo) / width) as usize;
        (0..panels)
            .map(|i| {
                let a = lo + i as f64 * width;
                gl.integrate(a, a + width, |u| (-u * u - norm_log_cdf(u)).exp())
            })
            .sum()
    })
}

/// Limit of χ_t·√(mse_H) as mse_H → 0 with noiseless pilots of unit power
/// and unit channel variance: each finite threshold contributes
/// 2(2π)^{−3/2} e^{−r²} J (once from each adjacent bin).
pub fn high_snr_cb_linear(spec: &QuantizerSpec) -> f64 {
    let norm = 2.0 * (2.0 * std::f64::consts::PI).powf(-1.5) * tail_integral();
    norm * spec
        .finite_thresholds()
        .iter()
        .map(|r| (-r * r).exp())
        .sum::<f64>()
}

/// C_B in dB: pilot-only mse_H ≈ −20 log10(β_t) + C_B at high SNR.
pub fn high_snr_cb(spec: &QuantizerSpec) -> f64 {
    -20.0 * high_snr_cb_linear(spec).log10()
}

/// Approximate pilot-only mse_H in dB at high SNR.
pub fn high_snr_mse_h_db(spec: &QuantizerSpec, beta_t: f64) -> f64 {
    -20.0 * beta_t.log10() + high_snr_cb(spec)
}

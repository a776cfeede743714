//! Scalar posterior-mean denoisers.
//!
//! Complex variances are always totals over the real and imaginary parts.

use crate::error::{Error, Result};
use crate::quantizer::{BinPair, QuantizerSpec};
use crate::special::{truncated_std_normal, TruncatedMoments};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarPosterior {
    pub mean: Complex64,
    pub variance: f64,
}

impl ScalarPosterior {
    pub fn new(mean: Complex64, variance: f64) -> Self {
        Self { mean, variance }
    }
}

/// Circularly symmetric complex Gaussian prior N_C(0, variance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrior {
    variance: f64,
}

impl GaussianPrior {
    pub fn new(variance: f64) -> Result<Self> {
        if !variance.is_finite() || variance <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "prior variance must be positive and finite, got {variance}"
            )));
        }
        Ok(Self { variance })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// Square QAM with (2ν)² equiprobable points scaled to average energy `power`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    nu: u32,
    power: f64,
    zeta: f64,
    /// per-component amplitudes, ascending
    levels: Vec<f64>,
}

impl Constellation {
    pub fn qam(nu: u32, power: f64) -> Result<Self> {
        if nu == 0 || nu > 1024 {
            return Err(Error::InvalidParameter(format!(
                "QAM order parameter must be in 1..=1024, got {nu}"
            )));
        }
        if !power.is_finite() || power <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "constellation power must be positive and finite, got {power}"
            )));
        }
        let side = 2.0 * nu as f64;
        let zeta = 1.0 / (2.0 * (side * side - 1.0) / 3.0).sqrt();
        let amp = zeta * power.sqrt();
        let levels = (0..2 * nu)
            .map(|j| (2.0 * j as f64 + 1.0 - side) * amp)
            .collect();
        Ok(Self {
            nu,
            power,
            zeta,
            levels,
        })
    }

    pub fn qpsk() -> Self {
        Self::qam(1, 1.0).expect("valid QPSK")
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Number of points M = (2ν)².
    pub fn order(&self) -> usize {
        self.levels.len() * self.levels.len()
    }

    /// Per-component amplitude set ±(2i−1)ζ√power.
    pub fn component_levels(&self) -> &[f64] {
        &self.levels
    }

    /// Point `i` has real part level `i / L` and imaginary part level `i % L`.
    pub fn point(&self, index: usize) -> Complex64 {
        let l = self.levels.len();
        Complex64::new(self.levels[index / l], self.levels[index % l])
    }

    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.order()).map(|i| self.point(i))
    }

    /// Index of the nearest point; ties go to the smaller index.
    pub fn nearest(&self, x: Complex64) -> usize {
        let l = self.levels.len();
        nearest_level(&self.levels, x.re) * l + nearest_level(&self.levels, x.im)
    }
}

fn nearest_level(levels: &[f64], x: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &a) in levels.iter().enumerate() {
        let d = (x - a).abs();
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Prior on the data symbols.
#[derive(Debug, Clone, PartialEq)]
pub enum DataPrior {
    Qam(Constellation),
    Gaussian(GaussianPrior),
}

impl DataPrior {
    pub fn power(&self) -> f64 {
        match self {
            DataPrior::Qam(c) => c.power(),
            DataPrior::Gaussian(g) => g.variance(),
        }
    }

    pub fn denoise(&self, r_hat: Complex64, v_r: f64) -> ScalarPosterior {
        match self {
            DataPrior::Qam(c) => denoise_x_qam(r_hat, v_r, c),
            DataPrior::Gaussian(g) => denoise_x_gaussian(r_hat, v_r, g),
        }
    }
}

/// Posterior of z given y = z + w, z ~ N_C(p̂, v_p), w ~ N_C(0, σ²).
pub fn denoise_z_unquantized(y: Complex64, p_hat: Complex64, v_p: f64, noise_var: f64) -> ScalarPosterior {
    let total = v_p + noise_var;
    if total <= 0.0 {
        return ScalarPosterior::new(p_hat, 0.0);
    }
    let gain = v_p / total;
    ScalarPosterior::new(p_hat + (y - p_hat) * gain, v_p * noise_var / total)
}

/// Result of the quantized-output denoiser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizedPosterior {
    pub posterior: ScalarPosterior,
    /// Number of components (0, 1 or 2) that used the point-mass limit.
    pub degenerate: u8,
}

/// Per-component posterior mean and variance of z with prior N(p, v/2),
/// observation y = z + n, n ~ N(0, σ²/2), known only to lie in (lo, hi].
pub fn quantized_component(lo: f64, hi: f64, p: f64, v_p: f64, noise_var: f64) -> (f64, f64, bool) {
    let sy2 = 0.5 * (v_p + noise_var);
    if v_p <= 0.0 || sy2 <= 0.0 {
        return (p, 0.0, false);
    }
    let sy = sy2.sqrt();
    let (a, b) = ((lo - p) / sy, (hi - p) / sy);
    // far outside the bin the standardized interval can round to a point
    let t = if a < b {
        truncated_std_normal(a, b)
    } else {
        TruncatedMoments { log_mass: f64::NEG_INFINITY, mean: a, variance: 0.0, degenerate: true }
    };
    let half_v = 0.5 * v_p;
    let mean = p + half_v / sy * t.mean;
    let var = half_v * noise_var / (v_p + noise_var) + half_v * half_v / sy2 * t.variance;
    (mean, var, t.degenerate)
}

pub fn denoise_z_quantized(
    bins: BinPair,
    p_hat: Complex64,
    v_p: f64,
    noise_var: f64,
    spec: &QuantizerSpec,
) -> Result<QuantizedPosterior> {
    if !(p_hat.re.is_finite() && p_hat.im.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite p_hat {p_hat}")));
    }
    if !(v_p >= 0.0) || !(noise_var >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "variances must be non-negative, got v_p={v_p}, noise_var={noise_var}"
        )));
    }
    let (lo_r, hi_r) = spec.bin_bounds(bins.re as usize)?;
    let (lo_i, hi_i) = spec.bin_bounds(bins.im as usize)?;
    let (mr, vr, dr) = quantized_component(lo_r, hi_r, p_hat.re, v_p, noise_var);
    let (mi, vi, di) = quantized_component(lo_i, hi_i, p_hat.im, v_p, noise_var);
    Ok(QuantizedPosterior {
        posterior: ScalarPosterior::new(Complex64::new(mr, mi), vr + vi),
        degenerate: dr as u8 + di as u8,
    })
}

/// Ψ_b(x) for one real component: P(r_{b−1} < x + n ≤ r_b), n ~ N(0, σ²/2).
pub fn psi_component(bin: usize, x: f64, noise_var: f64, spec: &QuantizerSpec) -> Result<f64> {
    if !(noise_var > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be positive, got {noise_var}"
        )));
    }
    let (lo, hi) = spec.bin_bounds(bin)?;
    let s = (0.5 * noise_var).sqrt();
    Ok(truncated_std_normal((lo - x) / s, (hi - x) / s).mass())
}

/// P(Ỹ = (b, b′) | z) for the complex quantized channel.
pub fn likelihood_bin(bin: usize, bin_prime: usize, z: Complex64, noise_var: f64, spec: &QuantizerSpec) -> Result<f64> {
    Ok(psi_component(bin, z.re, noise_var, spec)? * psi_component(bin_prime, z.im, noise_var, spec)?)
}

/// Posterior mean/variance over the PAM amplitudes `levels` of one component
/// observed as N(x; r, v_r/2).
pub(crate) fn pam_posterior(levels: &[f64], r: f64, v_r: f64) -> (f64, f64) {
    let max_exp = levels
        .iter()
        .map(|a| -(r - a) * (r - a) / v_r)
        .fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut m1) = (0.0, 0.0);
    for &a in levels {
        let w = (-(r - a) * (r - a) / v_r - max_exp).exp();
        z += w;
        m1 += w * a;
    }
    let mean = m1 / z;
    let var = levels
        .iter()
        .map(|&a| (-(r - a) * (r - a) / v_r - max_exp).exp() * (a - mean) * (a - mean))
        .sum::<f64>()
        / z;
    (mean, var)
}

/// Posterior over a square QAM constellation given N_C(x; r̂, v_r).
pub fn denoise_x_qam(r_hat: Complex64, v_r: f64, cons: &Constellation) -> ScalarPosterior {
    if v_r.is_infinite() {
        return ScalarPosterior::new(Complex64::new(0.0, 0.0), cons.power());
    }
    if v_r <= 0.0 {
        let p = cons.point(cons.nearest(r_hat));
        return ScalarPosterior::new(p, 0.0);
    }
    let (mr, vr) = pam_posterior(cons.component_levels(), r_hat.re, v_r);
    let (mi, vi) = pam_posterior(cons.component_levels(), r_hat.im, v_r);
    ScalarPosterior::new(Complex64::new(mr, mi), vr + vi)
}

/// Linear MMSE shrinkage for a Gaussian prior observed through N_C(x; r̂, v_r).
pub fn denoise_x_gaussian(r_hat: Complex64, v_r: f64, prior: &GaussianPrior) -> ScalarPosterior {
    let s2 = prior.variance();
    if v_r <= 0.0 {
        return ScalarPosterior::new(r_hat, 0.0);
    }
    ScalarPosterior::new(r_hat / (1.0 + v_r / s2), s2 / (1.0 + s2 / v_r))
}

/// Channel coefficient denoiser; identical algebra to [`denoise_x_gaussian`].
pub fn denoise_h_gaussian(q_hat: Complex64, v_q: f64, prior: &GaussianPrior) -> ScalarPosterior {
    denoise_x_gaussian(q_hat, v_q, prior)
}

//! Effective scalar channel Y = √q·X + W, W ~ N_C(0, 1).

use crate::denoise::{pam_posterior, DataPrior};
use crate::error::{Error, Result};
use crate::quadrature::GaussianQuadrature;
use crate::special::{log_sum_exp, q_function};
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

fn default_quadrature() -> &'static GaussianQuadrature {
    static QUAD: OnceLock<GaussianQuadrature> = OnceLock::new();
    QUAD.get_or_init(GaussianQuadrature::default)
}

/// MMSE of X from Y = √q·X + W.
pub fn scalar_channel_mmse(prior: &DataPrior, snr: f64) -> f64 {
    scalar_channel_mmse_with(prior, snr, default_quadrature())
}

/// Mutual information I(X; Y) in nats.
pub fn mutual_info_awgn(prior: &DataPrior, snr: f64) -> f64 {
    mutual_info_awgn_with(prior, snr, default_quadrature())
}

pub fn scalar_channel_mmse_with(prior: &DataPrior, snr: f64, quad: &GaussianQuadrature) -> f64 {
    let snr = snr.max(0.0);
    match prior {
        DataPrior::Gaussian(g) => {
            let s2 = g.variance();
            s2 / (1.0 + s2 * snr)
        }
        DataPrior::Qam(c) => {
            let levels = c.component_levels();
            if snr == 0.0 {
                return c.power();
            }
            if snr.is_infinite() {
                return 0.0;
            }
            let sq = snr.sqrt();
            let inv = 1.0 / snr;
            2.0 * pam_average(levels, snr, quad, |a0, z| {
                let r = a0 + z * FRAC_1_SQRT_2 / sq;
                pam_posterior(levels, r, inv).1
            })
        }
    }
}

pub fn mutual_info_awgn_with(prior: &DataPrior, snr: f64, quad: &GaussianQuadrature) -> f64 {
    let snr = snr.max(0.0);
    match prior {
        DataPrior::Gaussian(g) => (g.variance() * snr).ln_1p(),
        DataPrior::Qam(c) => {
            if snr == 0.0 {
                return 0.0;
            }
            let levels = c.component_levels();
            let log_l = (levels.len() as f64).ln();
            let sq = snr.sqrt();
            let mut buf = vec![0.0; levels.len()];
            let per_component = -pam_average(levels, snr, quad, |a0, z| {
                let w = z * FRAC_1_SQRT_2;
                let mut exps = std::mem::take(&mut buf);
                for (e, &x) in exps.iter_mut().zip(levels) {
                    let d = sq * (a0 - x) + w;
                    *e = -d * d + w * w;
                }
                let v = log_sum_exp(&exps) - log_l;
                buf = exps;
                v
            });
            2.0 * per_component
        }
    }
}

// (1/L) Σ_{a0} E_z f(a0, z) with the decision boundaries between adjacent
// levels passed to the quadrature as features.
fn pam_average(
    levels: &[f64],
    snr: f64,
    quad: &GaussianQuadrature,
    mut f: impl FnMut(f64, f64) -> f64,
) -> f64 {
    let spacing = if levels.len() > 1 { levels[1] - levels[0] } else { 1.0 };
    let width = 1.0 / ((2.0 * snr).sqrt() * spacing);
    let scale = (2.0 * snr).sqrt();
    let mut total = 0.0;
    for &a0 in levels {
        let mut features: Vec<f64> = levels
            .windows(2)
            .map(|w| scale * (0.5 * (w[0] + w[1]) - a0))
            .collect();
        if features.is_empty() {
            features.push(-scale * a0);
        }
        let f_cell = std::cell::RefCell::new(&mut f);
        total += quad.expect_with_features(|z| (f_cell.borrow_mut())(a0, z), &features, width);
    }
    total / levels.len() as f64
}

/// Symbol error rate of minimum-distance detection of square QAM at SNR q.
pub fn ser_from_snr(prior: &DataPrior, snr: f64) -> Result<f64> {
    let DataPrior::Qam(c) = prior else {
        return Err(Error::SerUndefined);
    };
    let side = c.component_levels().len() as f64;
    let half_distance = c.zeta() * c.power().sqrt();
    let p = 2.0 * (1.0 - 1.0 / side) * q_function((2.0 * snr.max(0.0)).sqrt() * half_distance);
    Ok(2.0 * p - p * p)
}

//! Gaussian special functions and truncated-normal moments.
//!
//! Everything here is evaluated through the scaled complementary error
//! function so that tail probabilities keep full relative precision far past
//! the point where `erfc` itself underflows.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// ln(√(2π))
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// 1/√(2π)
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Above this argument `erfcx` switches from `exp(x²)·erfc(x)` to a continued fraction.
const ERFCX_CF_SWITCH: f64 = 5.0;
/// One-sided tails beyond this many standard deviations use the Mills-ratio continued fraction.
const MILLS_CF_SWITCH: f64 = 5.0;
const CF_DEPTH: usize = 90;

/// Scaled complementary error function `exp(x²)·erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        if x < -26.6 {
            return f64::INFINITY;
        }
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < ERFCX_CF_SWITCH {
        return (x * x).exp() * libm::erfc(x);
    }
    if x.is_infinite() {
        return 0.0;
    }
    // erfcx(x)·√π = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let mut t = x;
    for j in (1..=CF_DEPTH).rev() {
        t = x + 0.5 * j as f64 / t;
    }
    1.0 / (PI.sqrt() * t)
}

pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn norm_log_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

pub fn norm_cdf(x: f64) -> f64 {
    if x < 0.0 {
        0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * libm::erfc(x * FRAC_1_SQRT_2)
    }
}

/// log Φ(x), finite for every finite x.
pub fn norm_log_cdf(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if x >= 0.0 {
        (-0.5 * libm::erfc(x * FRAC_1_SQRT_2)).ln_1p()
    } else {
        (0.5 * erfcx(-x * FRAC_1_SQRT_2)).ln() - 0.5 * x * x
    }
}

/// Gaussian tail probability Q(x) = 1 − Φ(x).
pub fn q_function(x: f64) -> f64 {
    norm_cdf(-x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTail {
    pub pdf: f64,
    pub cdf: f64,
    pub log_cdf: f64,
}

pub fn gaussian_tail(x: f64) -> GaussianTail {
    GaussianTail {
        pdf: if x.is_infinite() { 0.0 } else { norm_pdf(x) },
        cdf: norm_cdf(x),
        log_cdf: norm_log_cdf(x),
    }
}

/// Moments of a standard normal restricted to `(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedMoments {
    /// log P(lo < u ≤ hi)
    pub log_mass: f64,
    pub mean: f64,
    pub variance: f64,
    /// Set when the mass was below floating-point resolution and the
    /// point-mass limit at the boundary nearest the origin was used.
    pub degenerate: bool,
}

impl TruncatedMoments {
    pub fn mass(&self) -> f64 {
        self.log_mass.exp()
    }

    fn reflect(self) -> Self {
        Self { mean: -self.mean, ..self }
    }
}

/// Mean and variance of `u ~ N(0,1)` conditioned on `lo < u ≤ hi`.
///
/// Either bound may be infinite. The interval is reflected so that the
/// computation always happens on the side of the origin where the mass is
/// smaller, which keeps both tails accurate.
pub fn truncated_std_normal(lo: f64, hi: f64) -> TruncatedMoments {
    debug_assert!(lo < hi, "empty interval ({lo}, {hi}]");
    let mirrored = if lo.is_infinite() && hi.is_infinite() {
        false
    } else {
        lo + hi > 0.0
    };
    if mirrored {
        lower_side(-hi, -lo).reflect()
    } else {
        lower_side(lo, hi)
    }
}

// Requires lo + hi <= 0, hence lo < 0.
fn lower_side(lo: f64, hi: f64) -> TruncatedMoments {
    if hi > 0.0 {
        let mass = 0.5 * (libm::erf(hi * FRAC_1_SQRT_2) + libm::erf(-lo * FRAC_1_SQRT_2));
        let (lo_pdf, lo_term) = if lo.is_infinite() {
            (0.0, 0.0)
        } else {
            let pdf = norm_pdf(lo);
            (pdf, lo * pdf)
        };
        let (hi_pdf, hi_term) = if hi.is_infinite() {
            (0.0, 0.0)
        } else {
            let pdf = norm_pdf(hi);
            (pdf, hi * pdf)
        };
        let mean = (lo_pdf - hi_pdf) / mass;
        let second = (lo_term - hi_term) / mass;
        return finish(mass.ln(), mean, 1.0 + second - mean * mean, hi);
    }
    if lo == f64::NEG_INFINITY && hi <= -MILLS_CF_SWITCH {
        return one_sided_tail(hi);
    }
    // Φ(−x) = ½·erfcx(x/√2)·exp(−x²/2) keeps both tails in scaled form.
    let x = -hi;
    let ex = erfcx(x * FRAC_1_SQRT_2);
    let hi_scaled = 2.0 * FRAC_1_SQRT_2PI / ex;
    let (keep, lo_scaled, lo_term) = if lo.is_infinite() {
        (1.0, 0.0, 0.0)
    } else {
        let y = -lo;
        let ey = erfcx(y * FRAC_1_SQRT_2);
        let gap = 0.5 * (y - x) * (y + x);
        let damp = (-gap).exp();
        let ratio = ey / ex * damp;
        let keep = if ratio < 0.5 {
            1.0 - ratio
        } else {
            -(((ey - ex) / ex).ln_1p() - gap).exp_m1()
        };
        let lo_scaled = hi_scaled * damp;
        (keep, lo_scaled, lo * lo_scaled)
    };
    if !(keep > 0.0) {
        return degenerate(hi);
    }
    let mean = (lo_scaled - hi_scaled) / keep;
    let second = (lo_term - hi * hi_scaled) / keep;
    let log_mass = (0.5 * ex * keep).ln() - 0.5 * x * x;
    finish(log_mass, mean, 1.0 + second - mean * mean, hi)
}

// (−∞, hi] with hi ≪ 0. With x = −hi the inverse Mills ratio is x + δ,
// δ = 1/(x + c), c = 2/(x + 3/(x + ...)), and the variance (c − δ)/(x + c)
// has no cancellation.
fn one_sided_tail(hi: f64) -> TruncatedMoments {
    let x = -hi;
    let mut t = x;
    for j in (3..=CF_DEPTH).rev() {
        t = x + j as f64 / t;
    }
    let c = 2.0 / t;
    let delta = 1.0 / (x + c);
    finish(norm_log_cdf(hi), hi - delta, (c - delta) / (x + c), hi)
}

fn finish(log_mass: f64, mean: f64, variance: f64, nearest: f64) -> TruncatedMoments {
    if !(log_mass.is_finite() && mean.is_finite() && variance.is_finite()) {
        return degenerate(nearest);
    }
    TruncatedMoments {
        log_mass,
        mean,
        variance: variance.max(0.0),
        degenerate: false,
    }
}

fn degenerate(nearest: f64) -> TruncatedMoments {
    TruncatedMoments {
        log_mass: f64::NEG_INFINITY,
        mean: nearest,
        variance: 0.0,
        degenerate: true,
    }
}

/// Numerically safe `log Σ exp(a_i)`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

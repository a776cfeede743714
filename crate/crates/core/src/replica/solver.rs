use super::output::{bin_entropy, chi, AdcModel, OutputState};
use crate::denoise::DataPrior;
use crate::error::{Error, Result};
use crate::quadrature::GaussianQuadrature;
use crate::scalar_channel::{mutual_info_awgn_with, scalar_channel_mmse_with, ser_from_snr};
use crate::ReceiverMode;

pub const DAMPING: f64 = 0.5;
pub const TOLERANCE: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 10_000;
/// Distinct fixed points closer than this in both MSEs are treated as one.
const SAME_POINT: f64 = 1e-6;

/// Large-system parameters: α = N/K, β_t = T_t/K, β_d = T_d/K.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaInput {
    pub alpha: f64,
    pub beta_t: f64,
    pub beta_d: f64,
    pub noise_var: f64,
    pub channel_var: f64,
    pub pilot_power: f64,
    pub data_prior: DataPrior,
    pub adc: AdcModel,
}

impl ReplicaInput {
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = [
            ("alpha", self.alpha),
            ("beta_t", self.beta_t),
            ("beta_d", self.beta_d),
            ("noise_var", self.noise_var),
        ];
        for (name, v) in finite_nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [("channel_var", self.channel_var), ("pilot_power", self.pilot_power)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn data_power(&self) -> f64 {
        self.data_prior.power()
    }

    fn output_state(&self, q_h: f64, power: f64, q_x: f64) -> Result<OutputState> {
        OutputState::new(self.noise_var, self.channel_var, power, q_h, q_x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaSolution {
    pub q_h: f64,
    pub q_xt: f64,
    pub q_xd: f64,
    pub qt_h: f64,
    pub qt_xt: f64,
    pub qt_xd: f64,
    pub chi_t: f64,
    pub chi_d: f64,
    pub mse_h: f64,
    pub mse_xd: f64,
    pub free_entropy: f64,
    /// None for Gaussian data.
    pub ser: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// The other fixed point when the two initializations disagreed.
    pub runner_up: Option<Box<ReplicaSolution>>,
}

/// Fixed-point solver with a quadrature policy.
#[derive(Debug, Clone, Default)]
pub struct ReplicaSolver {
    quad: GaussianQuadrature,
}

#[derive(Debug, Clone, Copy)]
struct Overlaps {
    q_h: f64,
    q_xd: f64,
}

impl ReplicaSolver {
    pub fn new(quad: GaussianQuadrature) -> Self {
        Self { quad }
    }

    pub fn quadrature(&self) -> &GaussianQuadrature {
        &self.quad
    }

    /// χ_t and χ_d at the given overlaps.
    /// χ_t is reported as 0 when there are no pilots.
    pub fn chis(&self, input: &ReplicaInput, q_h: f64, q_xd: f64) -> Result<(f64, f64)> {
        let chi_t = if input.beta_t > 0.0 {
            chi(&input.adc, input.output_state(q_h, input.pilot_power, input.pilot_power)?, &self.quad)
        } else {
            0.0
        };
        let chi_d = chi(&input.adc, input.output_state(q_h, input.data_power(), q_xd)?, &self.quad);
        Ok((chi_t, chi_d))
    }

    /// Complete solution tuple at given overlaps: conjugates, MSEs and free entropy.
    pub fn evaluate(&self, input: &ReplicaInput, mode: ReceiverMode, q_h: f64, q_xd: f64) -> Result<ReplicaSolution> {
        let c_h = input.channel_var;
        let c_xt = input.pilot_power;
        let (chi_t, chi_d) = self.chis(input, q_h, q_xd)?;
        let qt_h = match mode {
            ReceiverMode::Jcd => input.beta_t * c_xt * chi_t + input.beta_d * q_xd * chi_d,
            ReceiverMode::PilotOnly => input.beta_t * c_xt * chi_t,
            ReceiverMode::PerfectCsir => f64::INFINITY,
        };
        let qt_xd = input.alpha * q_h * chi_d;
        let qt_xt = input.alpha * q_h * chi_t;
        let mse_h = if qt_h.is_infinite() { 0.0 } else { c_h / (1.0 + c_h * qt_h) };
        let mse_xd = scalar_channel_mmse_with(&input.data_prior, qt_xd, &self.quad);
        let mut sol = ReplicaSolution {
            q_h,
            q_xt: c_xt,
            q_xd,
            qt_h,
            qt_xt,
            qt_xd,
            chi_t,
            chi_d,
            mse_h,
            mse_xd,
            free_entropy: 0.0,
            ser: ser_from_snr(&input.data_prior, qt_xd).ok(),
            iterations: 0,
            converged: false,
            runner_up: None,
        };
        sol.free_entropy = self.free_entropy(&sol, input)?;
        Ok(sol)
    }

    /// Average free entropy at the overlaps and conjugates stored in `sol`.
    ///
    /// The bin-entropy integral is per real component, so it carries 2α;
    /// with that weight the fixed-point equations are its stationarity conditions.
    pub fn free_entropy(&self, sol: &ReplicaSolution, input: &ReplicaInput) -> Result<f64> {
        let c_h = input.channel_var;
        let c_xd = input.data_power();
        let g_t = if input.beta_t > 0.0 {
            bin_entropy(&input.adc, input.output_state(sol.q_h, input.pilot_power, sol.q_xt)?, &self.quad)
        } else {
            0.0
        };
        let g_d = bin_entropy(&input.adc, input.output_state(sol.q_h, c_xd, sol.q_xd)?, &self.quad);
        let mut f = 2.0 * input.alpha * (input.beta_t * g_t + input.beta_d * g_d);
        if sol.qt_h.is_finite() {
            f += -input.alpha * (c_h * sol.qt_h).ln_1p() + input.alpha * (c_h - sol.q_h) * sol.qt_h;
        }
        f += -input.beta_d * mutual_info_awgn_with(&input.data_prior, sol.qt_xd, &self.quad)
            + input.beta_t * (input.pilot_power - sol.q_xt) * sol.qt_xt
            + input.beta_d * (c_xd - sol.q_xd) * sol.qt_xd;
        Ok(f)
    }

    /// One damped sweep of the fixed-point map.
    pub fn update(&self, input: &ReplicaInput, mode: ReceiverMode, sol: &ReplicaSolution) -> Result<ReplicaSolution> {
        let next = self.step(input, mode, Overlaps { q_h: sol.q_h, q_xd: sol.q_xd }, mode, DAMPING)?;
        self.evaluate(input, mode, next.q_h, next.q_xd)
    }

    // `frozen` selects which overlaps are iterated: PilotOnly iterates q_h
    // alone, PerfectCsir iterates q_xd alone, Jcd iterates both.
    fn step(
        &self,
        input: &ReplicaInput,
        mode: ReceiverMode,
        q: Overlaps,
        iterate: ReceiverMode,
        damping: f64,
    ) -> Result<Overlaps> {
        let c_h = input.channel_var;
        let c_xd = input.data_power();
        let (chi_t, chi_d) = self.chis(input, q.q_h, q.q_xd)?;
        let qt_h = match mode {
            ReceiverMode::Jcd => input.beta_t * input.pilot_power * chi_t + input.beta_d * q.q_xd * chi_d,
            _ => input.beta_t * input.pilot_power * chi_t,
        };
        let target_h = c_h - c_h / (1.0 + c_h * qt_h);
        let target_xd = c_xd - scalar_channel_mmse_with(&input.data_prior, input.alpha * q.q_h * chi_d, &self.quad);
        let mix = |old: f64, new: f64| (1.0 - damping) * old + damping * new;
        Ok(match iterate {
            ReceiverMode::Jcd => Overlaps { q_h: mix(q.q_h, target_h), q_xd: mix(q.q_xd, target_xd) },
            ReceiverMode::PilotOnly => Overlaps { q_h: mix(q.q_h, target_h), q_xd: q.q_xd },
            ReceiverMode::PerfectCsir => Overlaps { q_h: q.q_h, q_xd: mix(q.q_xd, target_xd) },
        })
    }

    fn iterate(
        &self,
        input: &ReplicaInput,
        mode: ReceiverMode,
        start: Overlaps,
        iterate: ReceiverMode,
    ) -> Result<(Overlaps, usize, bool)> {
        let mut q = start;
        for sweep in 1..=MAX_SWEEPS {
            let next = self.step(input, mode, q, iterate, DAMPING)?;
            let change = (next.q_h - q.q_h).abs().max((next.q_xd - q.q_xd).abs());
            q = next;
            if change < TOLERANCE {
                return Ok((q, sweep, true));
            }
        }
        Ok((q, MAX_SWEEPS, false))
    }

    fn run_from(&self, input: &ReplicaInput, mode: ReceiverMode, informative: bool) -> Result<ReplicaSolution> {
        let c_h = input.channel_var;
        let c_xd = input.data_power();
        let scale = if informative { 0.999 } else { 0.0 };
        let (q, iters, converged) = match mode {
            ReceiverMode::Jcd => self.iterate(
                input,
                mode,
                Overlaps { q_h: scale * c_h, q_xd: scale * c_xd },
                ReceiverMode::Jcd,
            )?,
            ReceiverMode::PerfectCsir => self.iterate(
                input,
                mode,
                Overlaps { q_h: c_h, q_xd: scale * c_xd },
                ReceiverMode::PerfectCsir,
            )?,
            ReceiverMode::PilotOnly => {
                let (h, it_h, conv_h) = self.iterate(
                    input,
                    mode,
                    Overlaps { q_h: scale * c_h, q_xd: 0.0 },
                    ReceiverMode::PilotOnly,
                )?;
                let (q, it_d, conv_d) = self.iterate(
                    input,
                    mode,
                    Overlaps { q_h: h.q_h, q_xd: scale * c_xd },
                    ReceiverMode::PerfectCsir,
                )?;
                (q, it_h + it_d, conv_h && conv_d)
            }
        };
        let mut sol = self.evaluate(input, mode, q.q_h, q.q_xd)?;
        sol.iterations = iters;
        sol.converged = converged;
        Ok(sol)
    }

    /// Solves the fixed-point equations from an uninformative and an
    /// informative start and keeps the solution with the larger free entropy.
    /// Perfect-CSIR mode pins mse_H = 0 and treats every column as data.
    pub fn solve(&self, input: &ReplicaInput, mode: ReceiverMode) -> Result<ReplicaSolution> {
        input.validate()?;
        let pinned;
        let input = if mode == ReceiverMode::PerfectCsir {
            pinned = ReplicaInput {
                beta_t: 0.0,
                beta_d: input.beta_t + input.beta_d,
                ..input.clone()
            };
            &pinned
        } else {
            input
        };
        let cold = self.run_from(input, mode, false)?;
        let warm = self.run_from(input, mode, true)?;
        let distinct = (cold.mse_h - warm.mse_h).abs() > SAME_POINT || (cold.mse_xd - warm.mse_xd).abs() > SAME_POINT;
        let (mut best, other) = if warm.free_entropy >= cold.free_entropy {
            (warm, cold)
        } else {
            (cold, warm)
        };
        if distinct {
            best.runner_up = Some(Box::new(other));
        }
        Ok(best)
    }
}

/// Convenience: solve with the default quadrature.
pub fn solve_fixed_point(input: &ReplicaInput, mode: ReceiverMode) -> Result<ReplicaSolution> {
    ReplicaSolver::default().solve(input, mode)
}

/// Replica prediction of (mse_h, mse_xd, ser).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mse_h: f64,
    pub mse_xd: f64,
    pub ser: Option<f64>,
}

pub fn predict_performance(input: &ReplicaInput, mode: ReceiverMode) -> Result<Prediction> {
    let s = solve_fixed_point(input, mode)?;
    Ok(Prediction {
        mse_h: s.mse_h,
        mse_xd: s.mse_xd,
        ser: s.ser,
    })
}

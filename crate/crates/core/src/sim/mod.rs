//! Monte-Carlo harness: trial generation, aggregation and sweeps.

mod config;

pub use config::{AdcSpec, DataSpec, ExperimentConfig, Preset, StepSpec, SweepAxis, SweepSpec};

use crate::denoise::{Constellation, DataPrior, GaussianPrior};
use crate::error::{Error, Result};
use crate::gamp::{measure, run_gamp_jcd, GampConfig, GampProblem, Observations, SystemDims, Truth};
use crate::quantizer::BinPair;
use crate::replica::{predict_performance, AdcModel, Prediction, ReplicaInput};
use crate::ReceiverMode;
use ndarray::{s, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

/// Fully resolved parameters of one Monte-Carlo point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub dims: SystemDims,
    pub snr_db: f64,
    pub channel_var: f64,
    pub pilot_constellation: Constellation,
    pub data_prior: DataPrior,
    pub adc: AdcModel,
    pub gamp: GampConfig,
    pub trials: usize,
    pub seed: u64,
}

impl TrialConfig {
    /// K=16, N=64, T_t=16, T_d=144, QPSK, B=3, Δ=1/2, 500 trials.
    pub fn desk(snr_db: f64) -> Result<Self> {
        Ok(Self {
            dims: SystemDims::new(64, 16, 16, 144)?,
            snr_db,
            channel_var: 1.0,
            pilot_constellation: Constellation::qpsk(),
            data_prior: DataPrior::Qam(Constellation::qpsk()),
            adc: AdcModel::Quantized(crate::quantizer::QuantizerSpec::uniform(3, 0.5)?),
            gamp: GampConfig::default(),
            trials: 500,
            seed: 0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        self.gamp.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidParameter(format!("snr_db must be finite, got {}", self.snr_db)));
        }
        if !(self.channel_var > 0.0 && self.channel_var.is_finite()) {
            return Err(Error::InvalidParameter(format!("channel_var must be > 0, got {}", self.channel_var)));
        }
        Ok(())
    }

    /// σ_w² = 10^(−snr_db/10).
    pub fn noise_var(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }

    pub fn replica_input(&self) -> ReplicaInput {
        let d = self.dims;
        ReplicaInput {
            alpha: d.alpha(),
            beta_t: d.beta_t(),
            beta_d: d.beta_d(),
            noise_var: self.noise_var(),
            channel_var: self.channel_var,
            pilot_power: self.pilot_constellation.power(),
            data_prior: self.data_prior.clone(),
            adc: self.adc.clone(),
        }
    }

    /// Per-trial generator: stream `trial` of a ChaCha8 generator keyed by the seed.
    pub fn trial_rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }
}

/// One channel realization and its observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    /// N×K
    pub h: Array2<Complex64>,
    /// K×T_t
    pub x_pilot: Array2<Complex64>,
    /// K×T_d
    pub x_data: Array2<Complex64>,
    /// N×T
    pub w: Array2<Complex64>,
    /// Unquantized received signal, N×T.
    pub y: Array2<Complex64>,
    /// Quantized output levels; equals `y` without an ADC.
    pub y_quantized: Array2<Complex64>,
    pub observations: Observations,
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sd = (variance / 2.0).sqrt();
    Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * sd
}

fn draw_symbols<R: Rng + ?Sized>(rng: &mut R, prior: &DataPrior, rows: usize, cols: usize) -> Array2<Complex64> {
    Array2::from_shape_simple_fn((rows, cols), || match prior {
        DataPrior::Qam(c) => c.point(rng.gen_range(0..c.order())),
        DataPrior::Gaussian(g) => complex_normal(rng, g.variance()),
    })
}

/// Draws H, X_t, X_d, W and forms Y = HX/√K + W and its quantized version.
pub fn generate_trial<R: Rng + ?Sized>(cfg: &TrialConfig, rng: &mut R) -> Trial {
    let d = cfg.dims;
    let (n, k) = (d.n_rx, d.n_users);
    let h = Array2::from_shape_simple_fn((n, k), || complex_normal(rng, cfg.channel_var));
    let pilots = DataPrior::Qam(cfg.pilot_constellation.clone());
    let x_pilot = draw_symbols(rng, &pilots, k, d.t_pilot);
    let x_data = draw_symbols(rng, &cfg.data_prior, k, d.t_data);
    let noise_var = cfg.noise_var();
    let w = Array2::from_shape_simple_fn((n, d.t_total()), || complex_normal(rng, noise_var));
    let mut x = Array2::zeros((k, d.t_total()));
    x.slice_mut(s![.., ..d.t_pilot]).assign(&x_pilot);
    x.slice_mut(s![.., d.t_pilot..]).assign(&x_data);
    let y = h.dot(&x) / Complex64::new((k as f64).sqrt(), 0.0) + &w;
    let (y_quantized, observations) = match &cfg.adc {
        AdcModel::Quantized(spec) => {
            let bins: Array2<BinPair> = y.mapv(|v| spec.bin_pair(v));
            (y.mapv(|v| spec.quantize_complex(v)), Observations::Quantized { bins, spec: spec.clone() })
        }
        AdcModel::Unquantized => (y.clone(), Observations::Unquantized { y: y.clone() }),
    };
    Trial { h, x_pilot, x_data, w, y, y_quantized, observations }
}

/// Outcome of a single trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub mse_h: f64,
    pub mse_xd: f64,
    pub ser: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Generates trial `index` and runs the receiver on it.
pub fn run_trial(cfg: &TrialConfig, index: u64) -> Result<TrialOutcome> {
    let mut rng = cfg.trial_rng(index);
    let trial = generate_trial(cfg, &mut rng);
    let problem = GampProblem {
        dims: cfg.dims,
        observations: &trial.observations,
        noise_var: cfg.noise_var(),
        x_pilot: trial.x_pilot.view(),
        channel_prior: GaussianPrior::new(cfg.channel_var)?,
        data_prior: &cfg.data_prior,
        known_channel: Some(trial.h.view()),
    };
    let result = run_gamp_jcd(&problem, &cfg.gamp, &mut rng, None)?;
    let truth = Truth { h: trial.h.view(), x_data: trial.x_data.view() };
    let m = measure(&result, truth, &cfg.data_prior)?;
    Ok(TrialOutcome {
        mse_h: m.mse_h,
        mse_xd: m.mse_x,
        ser: m.ser,
        iterations: result.iterations_used,
        converged: result.converged,
    })
}

/// Sample mean and standard error.
fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Standard error of 10·log10(mean) by the delta method.
fn db_se(mean: f64, se: f64) -> f64 {
    10.0 / std::f64::consts::LN_10 * se / mean
}

/// Monte-Carlo statistics of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McStats {
    pub mse_h_db: f64,
    pub mse_h_db_se: f64,
    pub mse_xd_db: f64,
    pub mse_xd_db_se: f64,
    pub ser: Option<f64>,
    pub ser_se: Option<f64>,
    /// Trials that completed.
    pub trials: usize,
    pub mean_iters: f64,
    pub convergence_rate: f64,
    /// Trials excluded after a divergence.
    pub diverged: usize,
}

/// Aggregates outcomes in trial-index order.
pub fn aggregate(outcomes: &[Result<TrialOutcome>]) -> McStats {
    let ok: Vec<&TrialOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let diverged = outcomes.len() - ok.len();
    let (mh, mh_se) = mean_se(&ok.iter().map(|o| o.mse_h).collect::<Vec<_>>());
    let (mx, mx_se) = mean_se(&ok.iter().map(|o| o.mse_xd).collect::<Vec<_>>());
    let sers: Option<Vec<f64>> = ok.iter().map(|o| o.ser).collect();
    let (ser, ser_se) = match sers {
        Some(v) if !v.is_empty() => {
            let (m, se) = mean_se(&v);
            (Some(m), Some(se))
        }
        _ => (None, None),
    };
    let n = ok.len().max(1) as f64;
    McStats {
        mse_h_db: db(mh),
        mse_h_db_se: db_se(mh, mh_se),
        mse_xd_db: db(mx),
        mse_xd_db_se: db_se(mx, mx_se),
        ser,
        ser_se,
        trials: ok.len(),
        mean_iters: ok.iter().map(|o| o.iterations as f64).sum::<f64>() / n,
        convergence_rate: ok.iter().filter(|o| o.converged).count() as f64 / n,
        diverged,
    }
}

/// Runs `cfg.trials` trials on the current rayon pool.
pub fn monte_carlo(cfg: &TrialConfig) -> Result<McStats> {
    cfg.validate()?;
    let outcomes: Vec<Result<TrialOutcome>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| run_trial(cfg, i))
        .collect();
    if let Some(Err(e)) = outcomes.iter().find(|o| !matches!(o, Ok(_) | Err(Error::Diverged { .. }))) {
        return Err(e.clone());
    }
    Ok(aggregate(&outcomes))
}

/// One row of a result set. Simulation columns are empty for replica-only runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub axis_value: f64,
    pub mse_h_db_sim: Option<f64>,
    pub mse_h_db_se: Option<f64>,
    pub mse_xd_db_sim: Option<f64>,
    pub mse_xd_db_se: Option<f64>,
    pub ser_sim: Option<f64>,
    pub ser_se: Option<f64>,
    pub mse_h_db_replica: Option<f64>,
    pub mse_xd_db_replica: Option<f64>,
    pub ser_replica: Option<f64>,
    pub trials: usize,
    pub mean_iters: Option<f64>,
    pub diverged: usize,
}

impl PointRecord {
    fn new(axis_value: f64, sim: Option<&McStats>, replica: Option<&Prediction>) -> Self {
        Self {
            axis_value,
            mse_h_db_sim: sim.map(|s| s.mse_h_db),
            mse_h_db_se: sim.map(|s| s.mse_h_db_se),
            mse_xd_db_sim: sim.map(|s| s.mse_xd_db),
            mse_xd_db_se: sim.map(|s| s.mse_xd_db_se),
            ser_sim: sim.and_then(|s| s.ser),
            ser_se: sim.and_then(|s| s.ser_se),
            mse_h_db_replica: replica.map(|p| db(p.mse_h)),
            mse_xd_db_replica: replica.map(|p| db(p.mse_xd)),
            ser_replica: replica.and_then(|p| p.ser),
            trials: sim.map_or(0, |s| s.trials),
            mean_iters: sim.map(|s| s.mean_iters),
            diverged: sim.map_or(0, |s| s.diverged),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFailure {
    pub axis_value: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub mode: ReceiverMode,
    pub points: Vec<PointRecord>,
    pub failures: Vec<PointFailure>,
}

/// What a sweep point computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepWork {
    pub simulate: bool,
    pub replica: bool,
}

/// Runs one point per axis value. `configure` maps an axis value to the
/// point's configuration; failing points are recorded and skipped.
pub fn sweep<F>(axis: SweepAxis, values: &[f64], work: SweepWork, configure: F) -> SweepResult
where
    F: Fn(f64) -> Result<TrialConfig>,
{
    let mut points = Vec::new();
    let mut failures = Vec::new();
    let mut mode = ReceiverMode::default();
    for &v in values {
        let point = configure(v).and_then(|cfg| {
            mode = cfg.gamp.mode;
            let sim = work.simulate.then(|| monte_carlo(&cfg)).transpose()?;
            let rep = work
                .replica
                .then(|| predict_performance(&cfg.replica_input(), cfg.gamp.mode))
                .transpose()?;
            Ok(PointRecord::new(v, sim.as_ref(), rep.as_ref()))
        });
        match point {
            Ok(p) => points.push(p),
            Err(e) => failures.push(PointFailure { axis_value: v, message: e.to_string() }),
        }
    }
    SweepResult { axis, mode, points, failures }
}

//! Bilinear message passing for joint channel-and-data estimation.
//!
//! Observation columns are ordered pilots first, then data. Internally the
//! algorithm runs on A = H/√K with prior variance σ_h²/K; estimates are
//! rescaled to the H domain on output.

use crate::denoise::{denoise_h_gaussian, denoise_z_quantized, denoise_z_unquantized, DataPrior, GaussianPrior};
use crate::error::{Error, Result};
use crate::quantizer::{BinPair, QuantizerSpec};
use crate::ReceiverMode;
use ndarray::{s, Array2, ArrayView2, Zip};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

type CMat = Array2<Complex64>;
type RMat = Array2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDims {
    pub n_rx: usize,
    pub n_users: usize,
    pub t_pilot: usize,
    pub t_data: usize,
}

impl SystemDims {
    pub fn new(n_rx: usize, n_users: usize, t_pilot: usize, t_data: usize) -> Result<Self> {
        let d = Self { n_rx, n_users, t_pilot, t_data };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rx == 0 || self.n_users == 0 || self.t_total() == 0 {
            return Err(Error::InvalidParameter(format!("degenerate dimensions {self:?}")));
        }
        Ok(())
    }

    pub fn t_total(&self) -> usize {
        self.t_pilot + self.t_data
    }

    pub fn alpha(&self) -> f64 {
        self.n_rx as f64 / self.n_users as f64
    }

    pub fn beta(&self) -> f64 {
        self.t_total() as f64 / self.n_users as f64
    }

    pub fn beta_t(&self) -> f64 {
        self.t_pilot as f64 / self.n_users as f64
    }

    pub fn beta_d(&self) -> f64 {
        self.t_data as f64 / self.n_users as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// Zero means, prior variances.
    #[default]
    PaperZero,
    /// Channel means drawn with variance 10⁻²·σ_h²/K.
    RandomSmall,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GampConfig {
    pub tolerance: f64,
    pub max_iters: usize,
    pub damping: f64,
    /// Per-sweep factor on the damping; sweep t uses min(1, damping·growth^t).
    pub damping_growth: f64,
    pub variance_floor: f64,
    pub init_mode: InitMode,
    pub mode: ReceiverMode,
    /// Use only pilot columns in the channel-variance sum.
    pub line13_literal: bool,
}

impl Default for GampConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iters: 100,
            damping: 0.3,
            damping_growth: 1.05,
            variance_floor: 1e-13,
            init_mode: InitMode::PaperZero,
            mode: ReceiverMode::Jcd,
            line13_literal: false,
        }
    }
}

impl GampConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter(format!("damping must be in (0, 1], got {}", self.damping)));
        }
        if !(self.damping_growth >= 1.0 && self.damping_growth.is_finite()) {
            return Err(Error::InvalidParameter(format!("damping_growth must be >= 1, got {}", self.damping_growth)));
        }
        if !(self.variance_floor > 0.0) {
            return Err(Error::InvalidParameter("variance_floor must be > 0".into()));
        }
        Ok(())
    }

    /// Damping used on sweep `iteration` (counted from 0).
    pub fn damping_at(&self, iteration: usize) -> f64 {
        let exp = i32::try_from(iteration).unwrap_or(i32::MAX);
        (self.damping * self.damping_growth.powi(exp)).min(1.0)
    }
}

/// Receiver front-end output, N×T with pilot columns first.
#[derive(Debug, Clone, PartialEq)]
pub enum Observations {
    Quantized { bins: Array2<BinPair>, spec: QuantizerSpec },
    Unquantized { y: CMat },
}

impl Observations {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Observations::Quantized { bins, .. } => bins.dim(),
            Observations::Unquantized { y } => y.dim(),
        }
    }
}

/// Everything the receiver is given.
#[derive(Debug, Clone, Copy)]
pub struct GampProblem<'a> {
    pub dims: SystemDims,
    pub observations: &'a Observations,
    pub noise_var: f64,
    /// K×T_t
    pub x_pilot: ArrayView2<'a, Complex64>,
    pub channel_prior: GaussianPrior,
    pub data_prior: &'a DataPrior,
    /// Required in perfect-CSIR mode.
    pub known_channel: Option<ArrayView2<'a, Complex64>>,
}

impl GampProblem<'_> {
    pub fn validate(&self) -> Result<()> {
        let d = self.dims;
        d.validate()?;
        if self.observations.shape() != (d.n_rx, d.t_total()) {
            return Err(Error::Shape(format!(
                "observations are {:?}, expected {:?}",
                self.observations.shape(),
                (d.n_rx, d.t_total())
            )));
        }
        if self.x_pilot.dim() != (d.n_users, d.t_pilot) {
            return Err(Error::Shape(format!(
                "pilots are {:?}, expected {:?}",
                self.x_pilot.dim(),
                (d.n_users, d.t_pilot)
            )));
        }
        if self.x_pilot.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite pilot entry".into()));
        }
        if let Some(h) = self.known_channel {
            if h.dim() != (d.n_rx, d.n_users) {
                return Err(Error::Shape(format!("known channel is {:?}", h.dim())));
            }
        }
        if !(self.noise_var >= 0.0) {
            return Err(Error::InvalidParameter(format!("noise variance {}", self.noise_var)));
        }
        Ok(())
    }
}

/// Per-iteration quantities. Channel entries are on the A = H/√K scale.
#[derive(Debug, Clone, PartialEq)]
pub struct GampState {
    /// N×T
    pub p_hat: CMat,
    pub v_p: RMat,
    /// N×T_d; zero-width for pilot columns
    pub p_bar: CMat,
    pub v_p_bar: RMat,
    pub z_hat: CMat,
    pub v_z: RMat,
    pub s_hat: CMat,
    pub v_s: RMat,
    /// K×T_d
    pub x_hat: CMat,
    pub v_x: RMat,
    pub r_hat: CMat,
    pub v_r: RMat,
    /// N×K
    pub h_hat: CMat,
    pub v_h: RMat,
    pub q_hat: CMat,
    pub v_q: RMat,
    pub iteration: usize,
    pub degenerate_events: usize,
}

fn zeros_c(r: usize, c: usize) -> CMat {
    Array2::zeros((r, c))
}

fn full_r(r: usize, c: usize, v: f64) -> RMat {
    Array2::from_elem((r, c), v)
}

pub fn init_state<R: Rng + ?Sized>(
    dims: SystemDims,
    cfg: &GampConfig,
    channel_prior: GaussianPrior,
    data_power: f64,
    rng: &mut R,
) -> GampState {
    let (n, k, t, td) = (dims.n_rx, dims.n_users, dims.t_total(), dims.t_data);
    let prior_a = channel_prior.variance() / k as f64;
    let mut h_hat = zeros_c(n, k);
    if cfg.init_mode == InitMode::RandomSmall {
        let sd = (1e-2 * prior_a / 2.0).sqrt();
        h_hat.mapv_inplace(|_| {
            Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * sd
        });
    }
    GampState {
        p_hat: zeros_c(n, t),
        v_p: full_r(n, t, 1.0),
        p_bar: zeros_c(n, td),
        v_p_bar: full_r(n, td, 1.0),
        z_hat: zeros_c(n, t),
        v_z: full_r(n, t, 1.0),
        s_hat: zeros_c(n, t),
        v_s: full_r(n, t, 0.0),
        x_hat: zeros_c(k, td),
        v_x: full_r(k, td, data_power),
        r_hat: zeros_c(k, td),
        v_r: full_r(k, td, f64::INFINITY),
        h_hat,
        v_h: full_r(n, k, prior_a),
        q_hat: zeros_c(n, k),
        v_q: full_r(n, k, f64::INFINITY),
        iteration: 0,
        degenerate_events: 0,
    }
}

fn abs2(m: &ArrayView2<Complex64>) -> RMat {
    m.mapv(|c| c.norm_sqr())
}

fn to_complex(m: &RMat) -> CMat {
    m.mapv(|v| Complex64::new(v, 0.0))
}

fn conj_t(m: &ArrayView2<Complex64>) -> CMat {
    m.t().mapv(|c| c.conj())
}

/// Which parts of the sweep run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepScope {
    pub pilots: bool,
    pub data: bool,
    pub channel: bool,
}

impl SweepScope {
    pub fn for_mode(mode: ReceiverMode) -> Self {
        match mode {
            ReceiverMode::Jcd => Self { pilots: true, data: true, channel: true },
            ReceiverMode::PerfectCsir => Self { pilots: false, data: true, channel: false },
            ReceiverMode::PilotOnly => Self { pilots: true, data: false, channel: true },
        }
    }
}

/// One sweep of lines 1–18. Returns the largest normalized change among Ẑ
/// over the active columns and the updated X̂ and Ĥ. Terms whose previous
/// value is all zero are skipped.
pub fn gamp_iteration(state: &mut GampState, problem: &GampProblem, cfg: &GampConfig, scope: SweepScope) -> Result<f64> {
    let d = problem.dims;
    let (tt, td) = (d.t_pilot, d.t_data);
    let floor = cfg.variance_floor;
    let cap = 1.0 / floor;
    let damp = cfg.damping_at(state.iteration);
    let first = state.iteration == 0;
    let pilots = scope.pilots && tt > 0;
    let data = scope.data && td > 0;

    let xt = problem.x_pilot;
    let xt_abs2 = abs2(&xt);
    let a = state.h_hat.clone();
    let va = state.v_h.clone();
    let a_abs2 = abs2(&a.view());
    let x_abs2 = abs2(&state.x_hat.view());

    // lines 1–2
    if pilots {
        let vp = va.dot(&xt_abs2).mapv(|v| v.max(floor));
        let ax = a.dot(&xt);
        let s_prev = state.s_hat.slice(s![.., ..tt]).to_owned();
        let p = &ax - &(&s_prev * &to_complex(&vp));
        state.v_p.slice_mut(s![.., ..tt]).assign(&vp);
        state.p_hat.slice_mut(s![.., ..tt]).assign(&p);
    }
    // lines 3–6
    if data {
        let vpbar = a_abs2.dot(&state.v_x) + va.dot(&x_abs2);
        let pbar = a.dot(&state.x_hat);
        let vp = (&vpbar + &va.dot(&state.v_x)).mapv(|v| v.max(floor));
        let s_prev = state.s_hat.slice(s![.., tt..]).to_owned();
        let p = &pbar - &(&s_prev * &to_complex(&vpbar));
        state.v_p_bar.assign(&vpbar);
        state.p_bar.assign(&pbar);
        state.v_p.slice_mut(s![.., tt..]).assign(&vp);
        state.p_hat.slice_mut(s![.., tt..]).assign(&p);
    }

    let cols = match (pilots, data) {
        (true, true) => 0..tt + td,
        (true, false) => 0..tt,
        (false, true) => tt..tt + td,
        (false, false) => 0..0,
    };
    let z_prev = state.z_hat.slice(s![.., cols.clone()]).to_owned();
    let x_prev = state.x_hat.clone();
    let h_prev = state.h_hat.clone();

    // lines 7–8
    let mut degenerate = 0usize;
    for n in 0..d.n_rx {
        for t in cols.clone() {
            let p = state.p_hat[[n, t]];
            let vp = state.v_p[[n, t]];
            let post = match problem.observations {
                Observations::Quantized { bins, spec } => {
                    let q = denoise_z_quantized(bins[[n, t]], p, vp, problem.noise_var, spec)?;
                    degenerate += q.degenerate as usize;
                    q.posterior
                }
                Observations::Unquantized { y } => denoise_z_unquantized(y[[n, t]], p, vp, problem.noise_var),
            };
            state.z_hat[[n, t]] = post.mean;
            state.v_z[[n, t]] = post.variance.max(floor);
        }
    }
    state.degenerate_events += degenerate;

    // lines 9–10
    for n in 0..d.n_rx {
        for t in cols.clone() {
            let vp = state.v_p[[n, t]];
            let vs = ((1.0 - state.v_z[[n, t]] / vp) / vp).max(floor);
            let sh = (state.z_hat[[n, t]] - state.p_hat[[n, t]]) / vp;
            if first {
                state.v_s[[n, t]] = vs;
                state.s_hat[[n, t]] = sh;
            } else {
                state.v_s[[n, t]] = damp * vs + (1.0 - damp) * state.v_s[[n, t]];
                state.s_hat[[n, t]] = sh * damp + state.s_hat[[n, t]] * (1.0 - damp);
            }
        }
    }

    let s_t = state.s_hat.slice(s![.., ..tt]).to_owned();
    let vs_t = state.v_s.slice(s![.., ..tt]).to_owned();
    let s_d = state.s_hat.slice(s![.., tt..]).to_owned();
    let vs_d = state.v_s.slice(s![.., tt..]).to_owned();

    // lines 11–12
    if data {
        let den = a_abs2.t().dot(&vs_d);
        let vr = den.mapv(|v| if v > floor { (1.0 / v).min(cap) } else { cap });
        let corr = va.t().dot(&vs_d);
        let back = conj_t(&a.view()).dot(&s_d);
        let mut r = state.x_hat.clone();
        Zip::from(&mut r)
            .and(&vr)
            .and(&corr)
            .and(&back)
            .for_each(|r, &vr, &c, &b| *r = *r * (1.0 - vr * c) + b * vr);
        state.v_r.assign(&vr);
        state.r_hat.assign(&r);
    }

    // lines 13–14
    if scope.channel {
        let mut den = RMat::zeros((d.n_rx, d.n_users));
        if pilots {
            den = den + vs_t.dot(&xt_abs2.t());
        }
        if data && !cfg.line13_literal {
            den = den + vs_d.dot(&x_abs2.t());
        }
        let vq = den.mapv(|v| if v > floor { (1.0 / v).min(cap) } else { cap });
        let mut back = CMat::zeros((d.n_rx, d.n_users));
        let mut corr = RMat::zeros((d.n_rx, d.n_users));
        if pilots {
            back = back + s_t.dot(&conj_t(&xt));
        }
        if data {
            back = back + s_d.dot(&conj_t(&state.x_hat.view()));
            corr = vs_d.dot(&state.v_x.t());
        }
        let mut q = a.clone();
        Zip::from(&mut q)
            .and(&vq)
            .and(&corr)
            .and(&back)
            .for_each(|q, &vq, &c, &b| *q = *q * (1.0 - vq * c) + b * vq);
        state.v_q.assign(&vq);
        state.q_hat.assign(&q);
    }

    // lines 15–16
    if data {
        for k in 0..d.n_users {
            for t in 0..td {
                let post = problem.data_prior.denoise(state.r_hat[[k, t]], state.v_r[[k, t]]);
                state.x_hat[[k, t]] = post.mean * damp + state.x_hat[[k, t]] * (1.0 - damp);
                state.v_x[[k, t]] = (damp * post.variance.max(floor) + (1.0 - damp) * state.v_x[[k, t]]).max(floor);
            }
        }
    }

    // lines 17–18
    if scope.channel {
        let prior = GaussianPrior::new(problem.channel_prior.variance() / d.n_users as f64)?;
        for n in 0..d.n_rx {
            for k in 0..d.n_users {
                let post = denoise_h_gaussian(state.q_hat[[n, k]], state.v_q[[n, k]], &prior);
                state.h_hat[[n, k]] = post.mean * damp + state.h_hat[[n, k]] * (1.0 - damp);
                state.v_h[[n, k]] = (damp * post.variance.max(floor) + (1.0 - damp) * state.v_h[[n, k]]).max(floor);
            }
        }
    }

    state.iteration += 1;
    let finite = state.z_hat.iter().all(|z| z.is_finite())
        && state.x_hat.iter().all(|x| x.is_finite())
        && state.h_hat.iter().all(|h| h.is_finite())
        && state.v_x.iter().all(|v| v.is_finite())
        && state.v_h.iter().all(|v| v.is_finite());
    if !finite {
        return Err(Error::Diverged { iteration: state.iteration });
    }
    let mut residual = relative_change(&state.z_hat.slice(s![.., cols]), &z_prev.view());
    if data {
        residual = residual.max(relative_change(&state.x_hat.view(), &x_prev.view()));
    }
    if scope.channel {
        residual = residual.max(relative_change(&state.h_hat.view(), &h_prev.view()));
    }
    Ok(residual)
}

/// Σ|a − b|² / Σ|b|², NaN when b is zero.
fn relative_change(now: &ArrayView2<Complex64>, prev: &ArrayView2<Complex64>) -> f64 {
    let num: f64 = Zip::from(now).and(prev).fold(0.0, |acc, a, b| acc + (a - b).norm_sqr());
    let den: f64 = prev.iter().map(|z| z.norm_sqr()).sum();
    if den > 0.0 {
        num / den
    } else {
        f64::NAN
    }
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub residual: f64,
    pub mse_h: Option<f64>,
    pub mse_x: Option<f64>,
    pub ser: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JcdResult {
    /// N×K, H scale
    pub h_hat: CMat,
    /// K×T_d
    pub x_hat_data: CMat,
    pub v_h: RMat,
    pub v_x: RMat,
    pub iterations_used: usize,
    /// Iterations of the channel-only stage in pilot-only mode.
    pub pilot_stage_iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRecord>,
    pub degenerate_events: usize,
}

/// Ground truth for traces and metrics.
#[derive(Debug, Clone, Copy)]
pub struct Truth<'a> {
    pub h: ArrayView2<'a, Complex64>,
    pub x_data: ArrayView2<'a, Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub mse_h: f64,
    pub mse_x: f64,
    /// None for Gaussian data.
    pub ser: Option<f64>,
}

fn run_stage(
    state: &mut GampState,
    problem: &GampProblem,
    cfg: &GampConfig,
    scope: SweepScope,
    truth: Option<Truth>,
    trace: &mut Vec<TraceRecord>,
) -> Result<(usize, bool)> {
    let sk = (problem.dims.n_users as f64).sqrt();
    for xi in 1..=cfg.max_iters {
        let residual = gamp_iteration(state, problem, cfg, scope)?;
        let (mse_h, mse_x, ser) = match truth {
            Some(tr) => {
                let m = metrics_of(&(&state.h_hat * Complex64::new(sk, 0.0)), &state.x_hat, tr, problem.data_prior);
                (Some(m.mse_h), Some(m.mse_x), m.ser)
            }
            None => (None, None, None),
        };
        trace.push(TraceRecord { residual, mse_h, mse_x, ser });
        if xi > 1 && residual <= cfg.tolerance {
            return Ok((xi, true));
        }
    }
    Ok((cfg.max_iters, false))
}

/// Runs the receiver to convergence or `max_iters`.
pub fn run_gamp_jcd<R: Rng + ?Sized>(
    problem: &GampProblem,
    cfg: &GampConfig,
    rng: &mut R,
    truth: Option<Truth>,
) -> Result<JcdResult> {
    problem.validate()?;
    cfg.validate()?;
    let d = problem.dims;
    let k = d.n_users as f64;
    let mut state = init_state(d, cfg, problem.channel_prior, problem.data_prior.power(), rng);
    let mut trace = Vec::new();
    let mut pilot_stage_iterations = 0;
    let (iterations_used, converged) = match cfg.mode {
        ReceiverMode::Jcd => run_stage(&mut state, problem, cfg, SweepScope::for_mode(cfg.mode), truth, &mut trace)?,
        ReceiverMode::PerfectCsir => {
            let h = problem
                .known_channel
                .ok_or_else(|| Error::InvalidParameter("perfect-CSIR mode needs the true channel".into()))?;
            state.h_hat = h.mapv(|x| x / k.sqrt());
            state.v_h.fill(0.0);
            run_stage(&mut state, problem, cfg, SweepScope::for_mode(cfg.mode), truth, &mut trace)?
        }
        ReceiverMode::PilotOnly => {
            let (it, _) = run_stage(&mut state, problem, cfg, SweepScope::for_mode(cfg.mode), truth, &mut trace)?;
            pilot_stage_iterations = it;
            state.iteration = 0;
            let scope = SweepScope { pilots: false, data: true, channel: false };
            run_stage(&mut state, problem, cfg, scope, truth, &mut trace)?
        }
    };
    Ok(JcdResult {
        h_hat: state.h_hat.mapv(|x| x * k.sqrt()),
        x_hat_data: state.x_hat,
        v_h: state.v_h.mapv(|v| v * k),
        v_x: state.v_x,
        iterations_used,
        pilot_stage_iterations,
        converged,
        trace,
        degenerate_events: state.degenerate_events,
    })
}

/// Nearest constellation index per entry (ties to the smaller index).
pub fn hard_decide(x_hat: &ArrayView2<Complex64>, cons: &crate::denoise::Constellation) -> Array2<usize> {
    x_hat.mapv(|x| cons.nearest(x))
}

fn metrics_of(h_hat: &CMat, x_hat: &CMat, truth: Truth, prior: &DataPrior) -> Metrics {
    let (n, k) = truth.h.dim();
    let mse_h = Zip::from(h_hat).and(&truth.h).fold(0.0, |a, x, y| a + (x - y).norm_sqr()) / (n * k) as f64;
    let count = truth.x_data.len();
    let mse_x = if count == 0 {
        0.0
    } else {
        Zip::from(x_hat).and(&truth.x_data).fold(0.0, |a, x, y| a + (x - y).norm_sqr()) / count as f64
    };
    let ser = match prior {
        DataPrior::Qam(c) if count > 0 => {
            let wrong = Zip::from(x_hat)
                .and(&truth.x_data)
                .fold(0usize, |a, x, y| a + (c.nearest(*x) != c.nearest(*y)) as usize);
            Some(wrong as f64 / count as f64)
        }
        _ => None,
    };
    Metrics { mse_h, mse_x, ser }
}

/// Empirical MSEs (normalized per entry) and symbol error rate.
pub fn measure(result: &JcdResult, truth: Truth, prior: &DataPrior) -> Result<Metrics> {
    if result.h_hat.dim() != truth.h.dim() || result.x_hat_data.dim() != truth.x_data.dim() {
        return Err(Error::Shape("estimate and truth shapes differ".into()));
    }
    Ok(metrics_of(&result.h_hat, &result.x_hat_data, truth, prior))
}

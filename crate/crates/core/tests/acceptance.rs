//! Acceptance criteria 1-11. Each test prints one PASS/FAIL line to stdout
//! (bypassing the capture) and then asserts the same verdict.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use qmimo_jcd::denoise::{denoise_z_quantized, DataPrior, GaussianPrior};
use qmimo_jcd::gamp::{run_gamp_jcd, GampConfig, GampProblem, JcdResult, Observations, SystemDims};
use qmimo_jcd::quantizer::{BinPair, QuantizerSpec};
use qmimo_jcd::replica::{
    default_grid, high_snr_cb, high_snr_mse_h_db, optimal_step_size, AdcModel, ReplicaInput, ReplicaSolution,
    ReplicaSolver,
};
use qmimo_jcd::scalar_channel::scalar_channel_mmse;
use qmimo_jcd::sim::{generate_trial, monte_carlo, TrialConfig};
use qmimo_jcd::ReceiverMode;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {id:>2} [{verdict}] {name}: {detail}").unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

// Φ(x) through libm, independent of the crate's own special functions.
fn phi_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// ln(Φ(b) − Φ(a)) for a < b, using the tail on the side away from the mass.
fn log_gauss_interval(a: f64, b: f64) -> f64 {
    let mass = if a > 0.0 {
        0.5 * libm::erfc(a * FRAC_1_SQRT_2) - 0.5 * libm::erfc(b * FRAC_1_SQRT_2)
    } else if b < 0.0 {
        phi_cdf(b) - phi_cdf(a)
    } else {
        1.0 - phi_cdf(a) - 0.5 * libm::erfc(b * FRAC_1_SQRT_2)
    };
    mass.ln()
}

/// Adaptive Simpson on a vector of three integrands.
fn adaptive_simpson(f: &dyn Fn(f64) -> [f64; 3], a: f64, b: f64, tol: f64) -> [f64; 3] {
    fn simpson(fa: [f64; 3], fm: [f64; 3], fb: [f64; 3], h: f64) -> [f64; 3] {
        std::array::from_fn(|i| h / 6.0 * (fa[i] + 4.0 * fm[i] + fb[i]))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> [f64; 3],
        a: f64,
        b: f64,
        fa: [f64; 3],
        fm: [f64; 3],
        fb: [f64; 3],
        whole: [f64; 3],
        tol: f64,
        depth: u32,
    ) -> [f64; 3] {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let err = (0..3).map(|i| (left[i] + right[i] - whole[i]).abs()).fold(0.0, f64::max);
        if depth == 0 || err <= 15.0 * tol {
            return std::array::from_fn(|i| left[i] + right[i] + (left[i] + right[i] - whole[i]) / 15.0);
        }
        let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1);
        let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
        std::array::from_fn(|i| l[i] + r[i])
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 30)
}

/// Posterior mean and variance of one real component z ~ N(p, v/2) observed
/// through y = z + n, n ~ N(0, σ²/2), y ∈ (lo, hi], by direct integration over z.
fn component_oracle(lo: f64, hi: f64, p: f64, v: f64, noise_var: f64) -> (f64, f64) {
    let prior_sd = (0.5 * v).sqrt();
    let s = (0.5 * noise_var).sqrt();
    let log_f = |z: f64| -> f64 {
        let prior = -0.5 * ((z - p) / prior_sd).powi(2);
        prior + log_gauss_interval((lo - z) / s, (hi - z) / s)
    };
    // the integrand is log-concave: golden section finds its mode
    let (mut a, mut b) = (p.min(lo.max(p - 50.0)) - 10.0, p.max(hi.min(p + 50.0)) + 10.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-12 * (1.0 + a.abs()) {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if log_f(c) > log_f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let mode = 0.5 * (a + b);
    let peak = log_f(mode);
    let f = |z: f64| {
        let w = (log_f(z) - peak).exp();
        let t = z - mode;
        [w, w * t, w * t * t]
    };
    let reach = 40.0 * prior_sd;
    let m = adaptive_simpson(&f, mode - reach, mode + reach, 1e-12 * prior_sd);
    let mean = m[1] / m[0];
    (mode + mean, m[2] / m[0] - mean * mean)
}

#[test]
fn criterion_01_quantized_denoiser_matches_quadrature_oracle() {
    let strategy = (
        1u32..=3,
        0.1f64..=1.0,
        (-3.0f64..=3.0, -3.0f64..=3.0),
        0.01f64..=4.0,
        0.01f64..=2.0,
        (0usize..8, 0usize..8),
    );
    let mut runner = TestRunner::new_with_rng(Config::default(), TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let (mut worst_mean, mut worst_var) = (0.0f64, 0.0f64);
    let mut worst_case = String::new();
    for _ in 0..1000 {
        let (bits, step, (pr, pi), v, s2, (br, bi)) = strategy.new_tree(&mut runner).unwrap().current();
        let spec = QuantizerSpec::uniform(bits, step).unwrap();
        let bins = BinPair {
            re: (1 + br % spec.num_bins()) as u32,
            im: (1 + bi % spec.num_bins()) as u32,
        };
        let got = denoise_z_quantized(bins, Complex64::new(pr, pi), v, s2, &spec).unwrap().posterior;
        let (lo_r, hi_r) = spec.bin_bounds(bins.re as usize).unwrap();
        let (lo_i, hi_i) = spec.bin_bounds(bins.im as usize).unwrap();
        let (mr, vr) = component_oracle(lo_r, hi_r, pr, v, s2);
        let (mi, vi) = component_oracle(lo_i, hi_i, pi, v, s2);
        let dm = (got.mean.re - mr).abs().max((got.mean.im - mi).abs());
        let dv = (got.variance - (vr + vi)).abs();
        if dm.max(dv) > worst_mean.max(worst_var) {
            worst_case = format!("B={bits} Δ={step:.4} p=({pr:.4},{pi:.4}) v={v:.4} σ²={s2:.4} bins={bins:?}");
        }
        worst_mean = worst_mean.max(dm);
        worst_var = worst_var.max(dv);
    }
    let tol = 1e-7;
    report(
        1,
        "quantized denoiser vs adaptive quadrature (1000 cases)",
        worst_mean <= tol && worst_var <= tol,
        &format!("max |Δmean| {worst_mean:.2e}, max |Δvar| {worst_var:.2e}, tol {tol:.0e}; worst at {worst_case}"),
    );
}

#[test]
fn criterion_02_high_snr_constants() {
    let table = [
        (1u32, 2.8731),
        (2, -5.9852),
        (3, -13.0201),
        (4, -19.4804),
        (5, -25.7065),
        (6, -31.8265),
        (7, -37.6547),
    ];
    let tol = 0.01;
    let mut pass = true;
    let mut rows = Vec::new();
    for (bits, expected) in table {
        let step = (bits as f64).sqrt() * 2f64.powi(-(bits as i32));
        let got = high_snr_cb(&QuantizerSpec::uniform(bits, step).unwrap());
        let ok = (got - expected).abs() <= tol;
        pass &= ok;
        rows.push(format!("B={bits} {got:.4} vs {expected:.4}{}", if ok { "" } else { " (off)" }));
    }
    report(2, "C_B table within 0.01 dB", pass, &rows.join(", "));
}

fn high_snr_input(spec: QuantizerSpec, beta_t: f64) -> ReplicaInput {
    ReplicaInput {
        alpha: 4.0,
        beta_t,
        beta_d: 0.0,
        noise_var: 1e-8,
        channel_var: 1.0,
        pilot_power: 1.0,
        data_prior: DataPrior::Qam(qmimo_jcd::denoise::Constellation::qpsk()),
        adc: AdcModel::Quantized(spec),
    }
}

#[test]
fn criterion_03_pilot_only_slope_law() {
    let solver = ReplicaSolver::default();
    let betas = [4.0, 8.0, 16.0, 32.0];
    let (slope_tol, abs_tol) = (0.1, 0.25);
    let mut pass = true;
    let mut rows = Vec::new();
    for bits in 1u32..=4 {
        let spec = QuantizerSpec::uniform(bits, (bits as f64).sqrt() * 2f64.powi(-(bits as i32))).unwrap();
        let exact: Vec<f64> = betas
            .iter()
            .map(|&bt| {
                let sol = solver.solve(&high_snr_input(spec.clone(), bt), ReceiverMode::PilotOnly).unwrap();
                db(sol.mse_h)
            })
            .collect();
        let drops: Vec<f64> = exact.windows(2).map(|w| w[0] - w[1]).collect();
        let slope_ok = drops.iter().all(|d| (d - 20.0 * 2f64.log10()).abs() <= slope_tol);
        let gaps: Vec<f64> = betas
            .iter()
            .zip(&exact)
            .map(|(&bt, e)| (e - high_snr_mse_h_db(&spec, bt)).abs())
            .collect();
        let abs_ok = gaps.iter().all(|g| *g <= abs_tol);
        pass &= slope_ok && abs_ok;
        rows.push(format!(
            "B={bits} drops [{}] max gap {:.3}{}",
            drops.iter().map(|d| format!("{d:.3}")).collect::<Vec<_>>().join(" "),
            gaps.iter().cloned().fold(0.0, f64::max),
            if slope_ok && abs_ok { "" } else { " (off)" }
        ));
    }
    report(3, "pilot-only slope 6.02±0.1 dB and approximation within 0.25 dB", pass, &rows.join("; "));
}

#[test]
fn criterion_04_replica_matches_monte_carlo() {
    let trials = 2000;
    let mut pass = true;
    let mut rows = Vec::new();
    for snr in [6.0, 8.0, 10.0] {
        let cfg = TrialConfig { trials, seed: 2024, ..TrialConfig::desk(snr).unwrap() };
        let mc = monte_carlo(&cfg).unwrap();
        let rep = ReplicaSolver::default().solve(&cfg.replica_input(), ReceiverMode::Jcd).unwrap();
        let (ser, ser_se, ser_rep) = (mc.ser.unwrap(), mc.ser_se.unwrap(), rep.ser.unwrap());
        let ser_tol = (3.0 * ser_se).max(0.15 * ser_rep);
        let ser_ok = (ser - ser_rep).abs() <= ser_tol;
        let mse_ok = (mc.mse_h_db - db(rep.mse_h)).abs() <= 0.5;
        pass &= ser_ok && mse_ok && mc.trials >= trials;
        rows.push(format!(
            "{snr} dB: SER {ser:.3e}±{ser_se:.1e} vs {ser_rep:.3e} (tol {ser_tol:.1e}{}), mse_H {:.2} vs {:.2} dB{}, {} trials, {} diverged",
            if ser_ok { "" } else { ", off" },
            mc.mse_h_db,
            db(rep.mse_h),
            if mse_ok { "" } else { " (off)" },
            mc.trials,
            mc.diverged,
        ));
    }
    report(4, "replica vs Monte Carlo at desk scale", pass, &rows.join("; "));
}

/// SNR (dB) at which the replica SER equals `target`, by bisection.
fn snr_for_ser(adc: &AdcModel, target: f64) -> f64 {
    let solver = ReplicaSolver::default();
    let ser = |snr: f64| {
        let input = ReplicaInput { adc: adc.clone(), ..TrialConfig::desk(snr).unwrap().replica_input() };
        solver.solve(&input, ReceiverMode::Jcd).unwrap().ser.unwrap()
    };
    let (mut lo, mut hi) = (-5.0, 40.0);
    if ser(hi) > target {
        return f64::INFINITY;
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if ser(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn criterion_05_quantization_loss_ordering() {
    let target = 1e-3;
    let unq = snr_for_ser(&AdcModel::Unquantized, target);
    let at = |bits| snr_for_ser(&AdcModel::Quantized(QuantizerSpec::uniform(bits, 0.5).unwrap()), target);
    let (b3, b2, b1) = (at(3), at(2), at(1));
    let ordered = unq < b3 && b3 < b2 && b2 < b1;
    let (p3, p2) = (b3 - unq, b2 - unq);
    let p3_ok = (1.0..=1.7).contains(&p3);
    let p2_ok = (2.3..=3.6).contains(&p2);
    report(
        5,
        "SNR for SER 1e-3: ordering and penalties",
        ordered && p3_ok && p2_ok,
        &format!(
            "unquantized {unq:.3}, B=3 {b3:.3}, B=2 {b2:.3}, B=1 {b1:.3} dB; B=3 penalty {p3:.3} (1.0-1.7{}), B=2 penalty {p2:.3} (2.3-3.6{})",
            if p3_ok { "" } else { ", off" },
            if p2_ok { "" } else { ", off" },
        ),
    );
}

fn run_on(
    cfg: &TrialConfig,
    observations: &Observations,
    trial: &qmimo_jcd::sim::Trial,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> JcdResult {
    let problem = GampProblem {
        dims: cfg.dims,
        observations,
        noise_var: cfg.noise_var(),
        x_pilot: trial.x_pilot.view(),
        channel_prior: GaussianPrior::new(cfg.channel_var).unwrap(),
        data_prior: &cfg.data_prior,
        known_channel: Some(trial.h.view()),
    };
    run_gamp_jcd(&problem, &cfg.gamp, rng, None).unwrap()
}

#[test]
fn criterion_06_one_bit_step_invariance() {
    let trials = 10;
    let mut identical = 0;
    for i in 0..trials {
        let outputs: Vec<String> = [0.25, 0.5, 1.0]
            .iter()
            .map(|&step| {
                let cfg = TrialConfig {
                    adc: AdcModel::Quantized(QuantizerSpec::uniform(1, step).unwrap()),
                    seed: 7,
                    ..TrialConfig::desk(6.0).unwrap()
                };
                let mut rng = cfg.trial_rng(i);
                let trial = generate_trial(&cfg, &mut rng);
                format!("{:?}", run_on(&cfg, &trial.observations, &trial, &mut rng))
            })
            .collect();
        if outputs.iter().all(|o| *o == outputs[0]) {
            identical += 1;
        }
    }
    report(
        6,
        "one-bit results identical across Δ ∈ {0.25, 0.5, 1}",
        identical == trials,
        &format!("{identical}/{trials} trials bit-identical"),
    );
}

#[test]
fn criterion_07_fine_quantizer_matches_unquantized() {
    let trials = 50;
    let tol = 1e-3;
    let cfg = TrialConfig {
        adc: AdcModel::Quantized(QuantizerSpec::uniform(16, 2f64.powi(-8)).unwrap()),
        seed: 11,
        ..TrialConfig::desk(8.0).unwrap()
    };
    let mut worst = 0.0f64;
    for i in 0..trials {
        let mut rng = cfg.trial_rng(i);
        let trial = generate_trial(&cfg, &mut rng);
        let mut rng_u = rng.clone();
        let quantized = run_on(&cfg, &trial.observations, &trial, &mut rng);
        let unquantized = run_on(&cfg, &Observations::Unquantized { y: trial.y.clone() }, &trial, &mut rng_u);
        let mse = |r: &JcdResult| {
            (&r.x_hat_data - &trial.x_data).mapv(|e| e.norm_sqr()).mean().unwrap()
        };
        worst = worst.max((mse(&quantized) - mse(&unquantized)).abs());
    }
    report(
        7,
        "B=16, Δ=2^-8 vs unquantized receiver",
        worst <= tol,
        &format!("max |Δmse_xd| over {trials} trials {worst:.2e}, tol {tol:.0e}"),
    );
}

#[test]
fn criterion_08_step_size_fit() {
    let solver = ReplicaSolver::default();
    let grid = default_grid();
    let tol = 0.05;
    let mut pass = true;
    let mut rows = Vec::new();
    for bits in [2u32, 3, 4] {
        for snr in [0.0, 5.0, 10.0] {
            let base = TrialConfig::desk(snr).unwrap().replica_input();
            let r = optimal_step_size(&solver, &base, bits, &grid).unwrap();
            let fitted = r.fitted.unwrap();
            let ok = (r.delta_opt - fitted).abs() <= tol;
            pass &= ok;
            rows.push(format!("B={bits} {snr} dB {:.3} vs {fitted:.3}{}", r.delta_opt, if ok { "" } else { " (off)" }));
        }
    }
    report(8, "optimal normalized step within 0.05 of the linear fit", pass, &rows.join(", "));
}

/// Exact posterior mean of each user's symbol for K=2 by enumerating all QPSK pairs.
fn exact_posterior_means(
    h: &Array2<Complex64>,
    bins: &Array2<BinPair>,
    spec: &QuantizerSpec,
    noise_var: f64,
) -> [Complex64; 2] {
    let a = FRAC_1_SQRT_2;
    let points = [
        Complex64::new(a, a),
        Complex64::new(-a, a),
        Complex64::new(a, -a),
        Complex64::new(-a, -a),
    ];
    let s = (0.5 * noise_var).sqrt();
    let scale = 1.0 / 2f64.sqrt();
    let log_comp = |bin: u32, x: f64| {
        let (lo, hi) = spec.bin_bounds(bin as usize).unwrap();
        log_gauss_interval((lo - x) / s, (hi - x) / s)
    };
    let mut terms = Vec::with_capacity(16);
    for &x0 in &points {
        for &x1 in &points {
            let ll: f64 = (0..h.nrows())
                .map(|n| {
                    let z = (h[[n, 0]] * x0 + h[[n, 1]] * x1) * scale;
                    let b = bins[[n, 0]];
                    log_comp(b.re, z.re) + log_comp(b.im, z.im)
                })
                .sum();
            terms.push((ll, x0, x1));
        }
    }
    let peak = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    let mut norm = 0.0;
    let mut means = [Complex64::new(0.0, 0.0); 2];
    for (ll, x0, x1) in terms {
        let w = (ll - peak).exp();
        norm += w;
        means[0] += x0 * w;
        means[1] += x1 * w;
    }
    [means[0] / norm, means[1] / norm]
}

#[test]
fn criterion_09_tiny_instance_exact_posterior() {
    let trials = 200;
    let spec = QuantizerSpec::uniform(2, 0.7).unwrap();
    let mut cfg = TrialConfig {
        dims: SystemDims::new(16, 2, 0, 1).unwrap(),
        adc: AdcModel::Quantized(spec.clone()),
        seed: 3,
        ..TrialConfig::desk(5.0).unwrap()
    };
    cfg.gamp = GampConfig { mode: ReceiverMode::PerfectCsir, ..cfg.gamp };
    let mut total = 0.0;
    for i in 0..trials {
        let mut rng = cfg.trial_rng(i);
        let trial = generate_trial(&cfg, &mut rng);
        let r = run_on(&cfg, &trial.observations, &trial, &mut rng);
        let Observations::Quantized { bins, .. } = &trial.observations else { unreachable!() };
        let exact = exact_posterior_means(&trial.h, bins, &spec, cfg.noise_var());
        total += (0..2).map(|k| (r.x_hat_data[[k, 0]] - exact[k]).norm()).sum::<f64>() / 2.0;
    }
    let mean_gap = total / trials as f64;
    let tol = 0.05;
    report(
        9,
        "K=2 perfect-CSIR posterior means vs exact enumeration",
        mean_gap <= tol,
        &format!("mean |x̂ − E[x|Y,H]| over {trials} trials {mean_gap:.4}, tol {tol}"),
    );
}

fn residuals(sol: &ReplicaSolution, input: &ReplicaInput, mode: ReceiverMode) -> f64 {
    let c_h = input.channel_var;
    let h_target = match mode {
        ReceiverMode::PerfectCsir => c_h,
        _ => c_h - c_h / (1.0 + c_h * sol.qt_h),
    };
    let x_target = input.data_power() - scalar_channel_mmse(&input.data_prior, sol.qt_xd);
    (sol.q_h - h_target).abs().max((sol.q_xd - x_target).abs())
}

/// Largest partial of the free entropy over (q_h, q_xd, q̃_h, q̃_xd) by a
/// five-point central difference.
fn stationarity(solver: &ReplicaSolver, sol: &ReplicaSolution, input: &ReplicaInput) -> f64 {
    let fields: [fn(&mut ReplicaSolution) -> &mut f64; 4] =
        [|s| &mut s.q_h, |s| &mut s.q_xd, |s| &mut s.qt_h, |s| &mut s.qt_xd];
    fields
        .iter()
        .map(|field| {
            let eps = 1e-4 * field(&mut sol.clone()).abs().max(1.0);
            let at = |delta: f64| {
                let mut s = sol.clone();
                *field(&mut s) += delta;
                solver.free_entropy(&s, input).unwrap()
            };
            ((8.0 * (at(eps) - at(-eps)) - (at(2.0 * eps) - at(-2.0 * eps))) / (12.0 * eps)).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn criterion_10_fixed_point_residual_and_saddle() {
    let solver = ReplicaSolver::default();
    let (res_tol, grad_tol) = (1e-10, 1e-6);
    let (mut worst_res, mut worst_grad, mut points) = (0.0f64, 0.0f64, 0);
    let adcs = [
        AdcModel::Quantized(QuantizerSpec::uniform(1, 0.5).unwrap()),
        AdcModel::Quantized(QuantizerSpec::uniform(2, 0.5).unwrap()),
        AdcModel::Quantized(QuantizerSpec::uniform(3, 0.5).unwrap()),
        AdcModel::Unquantized,
    ];
    let mut unconverged = 0;
    for adc in &adcs {
        for snr in [0.0, 5.0, 10.0, 15.0] {
            let input = ReplicaInput { adc: adc.clone(), ..TrialConfig::desk(snr).unwrap().replica_input() };
            for mode in [ReceiverMode::Jcd, ReceiverMode::PilotOnly, ReceiverMode::PerfectCsir] {
                let sol = solver.solve(&input, mode).unwrap();
                if !sol.converged {
                    unconverged += 1;
                    continue;
                }
                points += 1;
                worst_res = worst_res.max(residuals(&sol, &input, mode));
                if mode == ReceiverMode::Jcd {
                    worst_grad = worst_grad.max(stationarity(&solver, &sol, &input));
                }
            }
        }
    }
    report(
        10,
        "fixed-point residuals and free-entropy stationarity",
        worst_res < res_tol && worst_grad < grad_tol && unconverged == 0,
        &format!(
            "{points} converged points ({unconverged} unconverged): max residual {worst_res:.2e} (tol {res_tol:.0e}), max |∂F| {worst_grad:.2e} (tol {grad_tol:.0e})"
        ),
    );
}

#[test]
fn criterion_11_jcd_gain_over_pilot_only() {
    let solver = ReplicaSolver::default();
    let mut all_better = true;
    let mut best_gain = f64::NEG_INFINITY;
    let mut best_at = f64::NAN;
    for i in 0..=16 {
        let snr = -10.0 + 2.5 * i as f64;
        let input = ReplicaInput {
            alpha: 4.0,
            beta_t: 1.0,
            beta_d: 9.0,
            adc: AdcModel::Quantized(QuantizerSpec::uniform(1, 0.5).unwrap()),
            ..TrialConfig::desk(snr).unwrap().replica_input()
        };
        let jcd = solver.solve(&input, ReceiverMode::Jcd).unwrap().mse_xd;
        let pilot = solver.solve(&input, ReceiverMode::PilotOnly).unwrap().mse_xd;
        all_better &= jcd <= pilot;
        let gain = db(pilot) - db(jcd);
        if (0.0..=20.0).contains(&snr) && gain > best_gain {
            best_gain = gain;
            best_at = snr;
        }
    }
    report(
        11,
        "one-bit JCD never worse than pilot-only, gains ≥ 1 dB mid-range",
        all_better && best_gain >= 1.0,
        &format!("JCD ≤ pilot-only everywhere: {all_better}; largest mid-range gain {best_gain:.2} dB at {best_at} dB"),
    );
}


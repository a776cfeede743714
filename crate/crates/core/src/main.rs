use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qmimo_jcd::denoise::{Constellation, DataPrior, GaussianPrior};
use qmimo_jcd::gamp::{measure, run_gamp_jcd, GampProblem, SystemDims, Truth};
use qmimo_jcd::quantizer::QuantizerSpec;
use qmimo_jcd::replica::{
    default_grid, high_snr_cb, optimal_step_size, predict_performance, AdcModel, ReplicaSolver,
};
use qmimo_jcd::sim::{
    generate_trial, sweep, ExperimentConfig, Preset, SweepAxis, SweepResult, SweepSpec, SweepWork,
    TrialConfig,
};
use qmimo_jcd::ReceiverMode;
use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

/// Joint channel-and-data estimation for quantized massive MIMO.
#[derive(Debug, Parser)]
#[command(name = "qmimo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte-Carlo GAMP runs with replica predictions side by side.
    Simulate(Common),
    /// Replica predictions only; no random draws.
    Replica(Common),
    /// Like `simulate` with the two-stage pilot-only receiver.
    PilotOnly(Common),
    /// Sweep one parameter, overriding the config's axis.
    Sweep(SweepArgs),
    /// Replica-optimal quantizer step sizes next to the fitted law.
    StepSize(StepSizeArgs),
    /// Quick end-to-end consistency checks.
    Selftest,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetArg {
    Desk,
    Paper,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Desk => Preset::Desk,
            PresetArg::Paper => Preset::Paper,
        }
    }
}

#[derive(Debug, Args)]
struct Common {
    /// JSON experiment file; omitted keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, value_enum, default_value_t = PresetArg::Desk)]
    preset: PresetArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    SnrDb,
    BetaT,
    Bits,
    Step,
}

impl From<AxisArg> for SweepAxis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::SnrDb => SweepAxis::SnrDb,
            AxisArg::BetaT => SweepAxis::BetaT,
            AxisArg::Bits => SweepAxis::Bits,
            AxisArg::Step => SweepAxis::Step,
        }
    }
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    axis: Option<AxisArg>,
    /// `start:step:stop` or a comma-separated list. Bits value 0 means unquantized.
    #[arg(long)]
    values: Option<String>,
    /// Skip the Monte-Carlo runs.
    #[arg(long)]
    replica_only: bool,
}

#[derive(Debug, Args)]
struct StepSizeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    bits: u32,
    /// SNR values in dB: `start:step:stop` or a comma-separated list.
    #[arg(long, default_value = "0:5:10")]
    snr: String,
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let [a, s, b] = [parts[0], parts[1], parts[2]].map(|p| p.trim().parse::<f64>());
        let (a, s, b) = (a?, s?, b?);
        if !(s > 0.0) || b < a {
            bail!("range {text} must have a positive step and start <= stop");
        }
        let n = ((b - a) / s + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| a + s * i as f64).collect());
    }
    text.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad value {v:?}")))
        .collect()
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_json(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn open_output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_rows<T: Serialize>(rows: &[T], whole: &impl Serialize, common: &Common) -> Result<()> {
    let mut out = open_output(common.out.as_deref())?;
    match common.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, whole)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn run_sweep(
    cfg: &ExperimentConfig,
    spec: &SweepSpec,
    preset: Preset,
    work: SweepWork,
    mode: Option<ReceiverMode>,
) -> SweepResult {
    sweep(spec.axis, &spec.values, work, |v| {
        let mut point = cfg.point(preset, spec.axis, v)?;
        if let Some(m) = mode {
            point.gamp.mode = m;
        }
        Ok(point)
    })
}

fn emit(result: &SweepResult, common: &Common) -> Result<()> {
    for f in &result.failures {
        eprintln!("point {} failed: {}", f.axis_value, f.message);
    }
    write_rows(&result.points, result, common)?;
    if result.points.is_empty() {
        bail!("every sweep point failed");
    }
    Ok(())
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        Some(0) => bail!("--workers must be at least 1"),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f),
        None => f(),
    }
}

fn simulate(common: &Common, mode: Option<ReceiverMode>, simulate: bool) -> Result<()> {
    let cfg = load_config(common)?;
    let spec = cfg.axis()?;
    let work = SweepWork { simulate, replica: true };
    let result = with_workers(common.workers, || Ok(run_sweep(&cfg, &spec, common.preset.into(), work, mode)))?;
    emit(&result, common)
}

fn sweep_command(args: &SweepArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let mut spec = cfg.sweep.clone().unwrap_or(SweepSpec { axis: SweepAxis::SnrDb, values: vec![] });
    if let Some(axis) = args.axis {
        spec.axis = axis.into();
    }
    if let Some(values) = &args.values {
        spec.values = parse_values(values)?;
    }
    if spec.values.is_empty() {
        bail!("no sweep values: pass --values or add a sweep section to the config");
    }
    let work = SweepWork { simulate: !args.replica_only, replica: true };
    let preset = args.common.preset.into();
    let result = with_workers(args.common.workers, || Ok(run_sweep(&cfg, &spec, preset, work, None)))?;
    emit(&result, &args.common)
}

#[derive(Debug, Serialize)]
struct StepRow {
    snr_db: f64,
    delta_opt: f64,
    fitted: Option<f64>,
    deviation: Option<f64>,
    qt_xd: f64,
    ser: Option<f64>,
    interior: bool,
}

fn step_size_command(args: &StepSizeArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let preset: Preset = args.common.preset.into();
    let solver = ReplicaSolver::default();
    let grid = default_grid();
    let rows = parse_values(&args.snr)?
        .into_iter()
        .map(|snr_db| {
            let point = cfg.point(preset, SweepAxis::SnrDb, snr_db)?;
            let r = optimal_step_size(&solver, &point.replica_input(), args.bits, &grid)?;
            Ok(StepRow {
                snr_db,
                delta_opt: r.delta_opt,
                fitted: r.fitted,
                deviation: r.fitted.map(|f| r.delta_opt - f),
                qt_xd: r.qt_xd,
                ser: r.ser,
                interior: r.interior,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_rows(&rows, &rows, &args.common)
}

fn check(name: &str, ok: bool, detail: String, failures: &mut usize) {
    println!("{} {name}: {detail}", if ok { "ok  " } else { "FAIL" });
    if !ok {
        *failures += 1;
    }
}

fn selftest() -> Result<()> {
    let mut failures = 0;
    let q = QuantizerSpec::uniform(2, 0.5)?;
    check(
        "quantizer",
        q.finite_thresholds() == [-0.5, 0.0, 0.5] && q.bin_of(0.1) == 3 && q.levels() == [-0.75, -0.25, 0.25, 0.75],
        format!("thresholds {:?}", q.finite_thresholds()),
        &mut failures,
    );
    let cb: Vec<f64> = (1..=4)
        .map(|b| Ok(high_snr_cb(&QuantizerSpec::uniform(b, (b as f64).sqrt() * 2f64.powi(-(b as i32)))?)))
        .collect::<qmimo_jcd::Result<_>>()?;
    check(
        "high-SNR constant",
        cb.windows(2).all(|w| w[1] < w[0]),
        format!("C_B (dB) {cb:.3?}"),
        &mut failures,
    );
    let cfg = TrialConfig { dims: SystemDims::new(32, 8, 8, 72)?, trials: 20, ..TrialConfig::desk(12.0)? };
    let rep = predict_performance(&cfg.replica_input(), ReceiverMode::Jcd)?;
    let mut mse_h = 0.0;
    for i in 0..cfg.trials as u64 {
        let mut rng = cfg.trial_rng(i);
        let t = generate_trial(&cfg, &mut rng);
        let problem = GampProblem {
            dims: cfg.dims,
            observations: &t.observations,
            noise_var: cfg.noise_var(),
            x_pilot: t.x_pilot.view(),
            channel_prior: GaussianPrior::new(cfg.channel_var)?,
            data_prior: &cfg.data_prior,
            known_channel: None,
        };
        let r = run_gamp_jcd(&problem, &cfg.gamp, &mut rng, None)?;
        mse_h += measure(&r, Truth { h: t.h.view(), x_data: t.x_data.view() }, &cfg.data_prior)?.mse_h;
    }
    let sim_db = 10.0 * (mse_h / cfg.trials as f64).log10();
    let rep_db = 10.0 * rep.mse_h.log10();
    check(
        "gamp vs replica channel MSE",
        (sim_db - rep_db).abs() < 1.5,
        format!("simulated {sim_db:.2} dB, predicted {rep_db:.2} dB"),
        &mut failures,
    );
    let prior = DataPrior::Qam(Constellation::qpsk());
    let ser = qmimo_jcd::scalar_channel::ser_from_snr(&prior, 4.0)?;
    check("scalar SER", (ser - 0.0449827).abs() < 1e-6, format!("QPSK at q = 4: {ser:.7}"), &mut failures);
    let unq = TrialConfig { adc: AdcModel::Unquantized, ..cfg.clone() };
    let a = predict_performance(&unq.replica_input(), ReceiverMode::Jcd)?;
    check(
        "quantization costs accuracy",
        a.mse_xd <= rep.mse_xd,
        format!("unquantized {:.2} dB, 3-bit {:.2} dB", 10.0 * a.mse_xd.log10(), 10.0 * rep.mse_xd.log10()),
        &mut failures,
    );
    if failures > 0 {
        bail!("{failures} self-test check(s) failed");
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(c) => simulate(c, None, true),
        Command::Replica(c) => simulate(c, None, false),
        Command::PilotOnly(c) => simulate(c, Some(ReceiverMode::PilotOnly), true),
        Command::Sweep(a) => sweep_command(a),
        Command::StepSize(a) => step_size_command(a),
        Command::Selftest => selftest(),
    }
}

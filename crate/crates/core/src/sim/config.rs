//! JSON experiment configuration. SNR is in dB; variances are linear.

use super::TrialConfig;
use crate::denoise::{Constellation, DataPrior, GaussianPrior};
use crate::error::{Error, Result};
use crate::gamp::{GampConfig, SystemDims};
use crate::quantizer::QuantizerSpec;
use crate::replica::{fitted_step_size, AdcModel};
use crate::replica::step_size::normalization;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// K=16, N=64, T_t=16, T_d=144, 500 trials.
    #[default]
    Desk,
    /// K=50, N=200, T_t=50, T_d=450, 10 000 trials.
    Paper,
}

impl Preset {
    pub fn dims(self) -> SystemDims {
        match self {
            Preset::Desk => SystemDims { n_rx: 64, n_users: 16, t_pilot: 16, t_data: 144 },
            Preset::Paper => SystemDims { n_rx: 200, n_users: 50, t_pilot: 50, t_data: 450 },
        }
    }

    pub fn trials(self) -> usize {
        match self {
            Preset::Desk => 500,
            Preset::Paper => 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSpec {
    Qpsk,
    Gaussian,
    /// (2ν)²-QAM
    Qam { nu: u32 },
}

impl DataSpec {
    pub fn prior(self) -> Result<DataPrior> {
        Ok(match self {
            DataSpec::Qpsk => DataPrior::Qam(Constellation::qpsk()),
            DataSpec::Gaussian => DataPrior::Gaussian(GaussianPrior::new(1.0)?),
            DataSpec::Qam { nu } => DataPrior::Qam(Constellation::qam(nu, 1.0)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSpec {
    Fixed(f64),
    /// `"auto"`: fitted optimum for 2–4 bits at the point's SNR.
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AdcSpec {
    Quantized(QuantizedSpec),
    Unquantized(UnquantizedTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizedSpec {
    pub bits: u32,
    pub step: StepSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnquantizedTag {
    Unquantized,
}

impl AdcSpec {
    pub fn resolve(self, snr_db: f64) -> Result<AdcModel> {
        match self {
            AdcSpec::Unquantized(_) => Ok(AdcModel::Unquantized),
            AdcSpec::Quantized(QuantizedSpec { bits, step }) => {
                let step = match step {
                    StepSpec::Fixed(s) => s,
                    StepSpec::Auto(_) => {
                        let fit = fitted_step_size(bits, snr_db).ok_or_else(|| {
                            Error::InvalidParameter(format!("no fitted step size for {bits} bits"))
                        })?;
                        fit * normalization(10f64.powf(-snr_db / 10.0))
                    }
                };
                Ok(AdcModel::Quantized(QuantizerSpec::uniform(bits, step)?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SnrDb,
    /// Pilot length T_t = round(β_t·K); T_d unchanged.
    BetaT,
    /// Resolution in bits; 0 selects the unquantized receiver.
    Bits,
    /// Quantizer step Δ.
    Step,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

fn default_snr() -> OneOrMany {
    OneOrMany::One(8.0)
}

fn default_channel_var() -> f64 {
    1.0
}

fn default_data() -> DataSpec {
    DataSpec::Qpsk
}

fn default_adc() -> AdcSpec {
    AdcSpec::Quantized(QuantizedSpec { bits: 3, step: StepSpec::Fixed(0.5) })
}

/// Experiment file. Omitted `dims` and `trials` come from the preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub dims: Option<SystemDims>,
    /// A single SNR, or a list that becomes the sweep axis.
    #[serde(default = "default_snr")]
    pub snr_db: OneOrMany,
    #[serde(default = "default_channel_var")]
    pub channel_var: f64,
    #[serde(default = "default_data")]
    pub data: DataSpec,
    #[serde(default = "default_adc")]
    pub adc: AdcSpec,
    #[serde(default)]
    pub gamp: GampConfig,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dims: None,
            snr_db: default_snr(),
            channel_var: default_channel_var(),
            data: default_data(),
            adc: default_adc(),
            gamp: GampConfig::default(),
            trials: None,
            seed: 0,
            sweep: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))
    }

    /// The sweep axis and its values; a plain SNR list is an SNR sweep.
    pub fn axis(&self) -> Result<SweepSpec> {
        match (&self.sweep, &self.snr_db) {
            (Some(_), OneOrMany::Many(_)) => Err(Error::InvalidParameter(
                "snr_db must be a single value when a sweep is given".into(),
            )),
            (Some(s), _) => Ok(s.clone()),
            (None, OneOrMany::One(v)) => Ok(SweepSpec { axis: SweepAxis::SnrDb, values: vec![*v] }),
            (None, OneOrMany::Many(v)) => Ok(SweepSpec { axis: SweepAxis::SnrDb, values: v.clone() }),
        }
    }

    fn base_snr(&self) -> f64 {
        match &self.snr_db {
            OneOrMany::One(v) => *v,
            OneOrMany::Many(v) => v.first().copied().unwrap_or(f64::NAN),
        }
    }

    /// Resolves the configuration at one value of `axis`.
    pub fn point(&self, preset: Preset, axis: SweepAxis, value: f64) -> Result<TrialConfig> {
        let mut dims = self.dims.unwrap_or_else(|| preset.dims());
        let mut snr_db = self.base_snr();
        let mut adc = self.adc;
        match axis {
            SweepAxis::SnrDb => snr_db = value,
            SweepAxis::BetaT => {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(Error::InvalidParameter(format!("beta_t must be >= 0, got {value}")));
                }
                dims.t_pilot = (value * dims.n_users as f64).round() as usize;
            }
            SweepAxis::Bits => {
                if value == 0.0 {
                    adc = AdcSpec::Unquantized(UnquantizedTag::Unquantized);
                } else {
                    if value.fract() != 0.0 || value < 0.0 {
                        return Err(Error::InvalidParameter(format!("bits must be an integer, got {value}")));
                    }
                    let step = match adc {
                        AdcSpec::Quantized(q) => q.step,
                        AdcSpec::Unquantized(_) => StepSpec::Auto(AutoTag::Auto),
                    };
                    adc = AdcSpec::Quantized(QuantizedSpec { bits: value as u32, step });
                }
            }
            SweepAxis::Step => match adc {
                AdcSpec::Quantized(q) => {
                    adc = AdcSpec::Quantized(QuantizedSpec { step: StepSpec::Fixed(value), ..q })
                }
                AdcSpec::Unquantized(_) => {
                    return Err(Error::InvalidParameter("a step sweep needs a quantized ADC".into()))
                }
            },
        }
        let cfg = TrialConfig {
            dims,
            snr_db,
            channel_var: self.channel_var,
            pilot_constellation: Constellation::qpsk(),
            data_prior: self.data.prior()?,
            adc: adc.resolve(snr_db)?,
            gamp: self.gamp,
            trials: self.trials.unwrap_or_else(|| preset.trials()),
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

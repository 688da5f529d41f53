//! `key = value` run configuration.
//!
//! Every key is optional. Units are fixed per key and rates are given in
//! Mbps (normalized bit/s/Hz when `model = baseband`). Unknown keys are
//! rejected.
//!
//! | key                  | default       | meaning                                   |
//! |----------------------|---------------|-------------------------------------------|
//! | `mean_energy_mj`     | 15            | mean harvested energy per epoch, mJ       |
//! | `delta_t_s`          | 1             | epoch length, s                           |
//! | `dist`               | exponential   | `exponential`, `poisson` or `fixed`       |
//! | `poisson_quantum_mj` | 1             | Poisson energy quantum, mJ                |
//! | `profile`            |               | profile file for `dist = fixed`/schedule  |
//! | `model`              | passband      | `passband`, `baseband` or `affine`        |
//! | `noise_psd_w_per_hz` | 1e-19         | N0                                        |
//! | `bandwidth_hz`       | 1e6           | W                                         |
//! | `path_loss_db`       | 70            | path loss                                 |
//! | `k0_mw`              | 1             | affine static power, mW                   |
//! | `k1_nj_per_bit`      | 1             | affine energy per bit, nJ/bit             |
//! | `epochs`             | 1             | epochs per trial                          |
//! | `trials`             | 2000          | Monte-Carlo trials per rate               |
//! | `seed`               | 1             | master seed                               |
//! | `rates_mbps`         | 8:22:0.5      | `start:stop:step`, inclusive              |
//! | `coherence_lens`     | 1,2,1000      | fading coherence lengths, epochs          |
//! | `mean_gain`          | 1             | mean channel power gain                   |
//! | `fading_mode`        | per_epoch     | `per_epoch`, `carryover` or `blind`       |
//! | `horizon`            |               | `m1`/`m2`/`asym`: single-horizon table    |
//! | `rate_mbps`          |               | rate for `schedule`                       |
//! | `out`                |               | output path                               |

use std::path::{Path, PathBuf};

use crate::analytics::HorizonKind;
use crate::eh_profile::{EhDistribution, EhProfile};
use crate::error::{Error, Result};
use crate::montecarlo::{Channel, ExperimentSpec};
use crate::online::FadingMode;
use crate::power_model::PowerModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistKind {
    Exponential,
    Poisson,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Passband,
    Baseband,
    Affine,
}

/// Inclusive `start:stop:step` grid in CLI rate units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl RateRange {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(Error::Config(format!(
                "rates must be start:stop:step, got {s:?}"
            )));
        };
        let num = |x: &str| {
            x.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number {x:?} in rates {s:?}")))
        };
        let r = RateRange {
            start: num(a)?,
            stop: num(b)?,
            step: num(c)?,
        };
        if !(r.start > 0.0 && r.stop >= r.start && r.step > 0.0) || !r.stop.is_finite() {
            return Err(Error::Config(format!(
                "rates need 0 < start <= stop and step > 0, got {s:?}"
            )));
        }
        Ok(r)
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mean_energy_mj: f64,
    pub delta_t_s: f64,
    pub dist: DistKind,
    pub poisson_quantum_mj: f64,
    pub profile: Option<PathBuf>,
    pub model: ModelKind,
    pub noise_psd_w_per_hz: f64,
    pub bandwidth_hz: f64,
    pub path_loss_db: f64,
    pub k0_mw: f64,
    pub k1_nj_per_bit: f64,
    pub epochs: usize,
    pub trials: usize,
    pub seed: u64,
    pub rates: RateRange,
    pub coherence_lens: Vec<usize>,
    pub mean_gain: f64,
    pub fading_mode: FadingMode,
    pub horizon: Option<HorizonKind>,
    pub rate_mbps: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mean_energy_mj: 15.0,
            delta_t_s: 1.0,
            dist: DistKind::Exponential,
            poisson_quantum_mj: 1.0,
            profile: None,
            model: ModelKind::Passband,
            noise_psd_w_per_hz: 1e-19,
            bandwidth_hz: 1e6,
            path_loss_db: 70.0,
            k0_mw: 1.0,
            k1_nj_per_bit: 1.0,
            epochs: 1,
            trials: 2000,
            seed: 1,
            rates: RateRange {
                start: 8.0,
                stop: 22.0,
                step: 0.5,
            },
            coherence_lens: vec![1, 2, 1000],
            mean_gain: 1.0,
            fading_mode: FadingMode::PerEpoch,
            horizon: None,
            rate_mbps: None,
            out: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected key = value, got {line:?}",
                    lineno + 1
                )));
            };
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "mean_energy_mj" => self.mean_energy_mj = parse_num(key, v)?,
            "delta_t_s" => self.delta_t_s = parse_num(key, v)?,
            "dist" => {
                self.dist = match v {
                    "exponential" => DistKind::Exponential,
                    "poisson" => DistKind::Poisson,
                    "fixed" => DistKind::Fixed,
                    _ => return Err(Error::Config(format!("dist: unknown distribution {v:?}"))),
                }
            }
            "poisson_quantum_mj" => self.poisson_quantum_mj = parse_num(key, v)?,
            "profile" => self.profile = Some(PathBuf::from(v)),
            "model" => {
                self.model = match v {
                    "passband" => ModelKind::Passband,
                    "baseband" => ModelKind::Baseband,
                    "affine" => ModelKind::Affine,
                    _ => return Err(Error::Config(format!("model: unknown power model {v:?}"))),
                }
            }
            "noise_psd_w_per_hz" => self.noise_psd_w_per_hz = parse_num(key, v)?,
            "bandwidth_hz" => self.bandwidth_hz = parse_num(key, v)?,
            "path_loss_db" => self.path_loss_db = parse_num(key, v)?,
            "k0_mw" => self.k0_mw = parse_num(key, v)?,
            "k1_nj_per_bit" => self.k1_nj_per_bit = parse_num(key, v)?,
            "epochs" => self.epochs = parse_num(key, v)?,
            "trials" => self.trials = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "rates_mbps" => self.rates = RateRange::parse(v)?,
            "coherence_lens" => {
                self.coherence_lens = v
                    .split(',')
                    .map(|s| parse_num(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "mean_gain" => self.mean_gain = parse_num(key, v)?,
            "fading_mode" => {
                self.fading_mode = match v {
                    "per_epoch" => FadingMode::PerEpoch,
                    "carryover" => FadingMode::Carryover,
                    "blind" => FadingMode::Blind,
                    _ => return Err(Error::Config(format!("fading_mode: unknown mode {v:?}"))),
                }
            }
            "horizon" => self.horizon = Some(v.parse().map_err(Error::Config)?),
            "rate_mbps" => self.rate_mbps = Some(parse_num(key, v)?),
            "out" => self.out = Some(PathBuf::from(v)),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn power_model(&self) -> PowerModel {
        match self.model {
            ModelKind::Passband => PowerModel::ShannonPassband {
                noise_psd: self.noise_psd_w_per_hz,
                bandwidth: self.bandwidth_hz,
                path_loss_db: self.path_loss_db,
            },
            ModelKind::Baseband => PowerModel::ShannonBaseband,
            ModelKind::Affine => PowerModel::Affine {
                k0: self.k0_mw * 1e-3,
                k1: self.k1_nj_per_bit * 1e-9,
            },
        }
    }

    /// Factor from CLI rate units to the model's rate units.
    pub fn rate_scale(&self) -> f64 {
        match self.model {
            ModelKind::Baseband => 1.0,
            _ => 1e6,
        }
    }

    pub fn to_model_rate(&self, cli_rate: f64) -> f64 {
        cli_rate * self.rate_scale()
    }

    pub fn to_cli_rate(&self, model_rate: f64) -> f64 {
        model_rate / self.rate_scale()
    }

    pub fn mean_energy_j(&self) -> f64 {
        self.mean_energy_mj * 1e-3
    }

    pub fn mean_power(&self) -> f64 {
        self.mean_energy_j() / self.delta_t_s
    }

    /// CLI rate grid converted to model units.
    pub fn rate_grid(&self) -> Vec<f64> {
        self.rates
            .values()
            .into_iter()
            .map(|r| self.to_model_rate(r))
            .collect()
    }

    pub fn distribution(&self) -> Result<EhDistribution> {
        Ok(match self.dist {
            DistKind::Exponential => EhDistribution::exponential(self.mean_energy_j()),
            DistKind::Poisson => EhDistribution::PoissonQuantized {
                mean_energy: self.mean_energy_j(),
                quantum: self.poisson_quantum_mj * 1e-3,
            },
            DistKind::Fixed => {
                let path = self
                    .profile
                    .as_ref()
                    .ok_or_else(|| Error::Config("dist = fixed needs a profile file".into()))?;
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read profile {}: {e}", path.display()))
                })?;
                EhDistribution::FixedList {
                    values: EhProfile::parse_text(&text)?,
                }
            }
        })
    }

    /// AWGN experiment described by this configuration.
    pub fn awgn_spec(&self) -> Result<ExperimentSpec> {
        let spec = ExperimentSpec {
            channel: Channel::Awgn,
            dist: self.distribution()?,
            model: self.power_model(),
            delta_t: self.delta_t_s,
            m: self.epochs,
            rate_grid: self.rate_grid(),
            trials: self.trials,
            master_seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_link_budget() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.power_model(), PowerModel::default_passband());
        assert!((cfg.mean_power() - 15e-3).abs() < 1e-15);
        assert_eq!(cfg.rates.values().len(), 29);
        assert_eq!(cfg.rate_grid()[0], 8e6);
    }

    #[test]
    fn parse_and_override() {
        let text =
            "# sweep\nepochs = 1000\ntrials=50 # few\n\nrates_mbps = 16:22:2\nmodel = affine\n";
        let mut cfg = RunConfig::from_text(text).unwrap();
        assert_eq!(cfg.epochs, 1000);
        assert_eq!(cfg.trials, 50);
        assert_eq!(cfg.rates.values(), vec![16.0, 18.0, 20.0, 22.0]);
        assert_eq!(cfg.power_model(), PowerModel::default_affine());
        cfg.set("trials", "7").unwrap();
        assert_eq!(cfg.trials, 7);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_text("bogus = 3").is_err());
        assert!(RunConfig::from_text("trials").is_err());
        assert!(RunConfig::from_text("trials = many").is_err());
        assert!(RunConfig::from_text("dist = uniform").is_err());
    }

    #[test]
    fn rate_range_inclusive() {
        let r = RateRange::parse("8:9:0.1").unwrap();
        let v = r.values();
        assert_eq!(v.len(), 11);
        assert!((v[10] - 9.0).abs() < 1e-12);
        assert!(RateRange::parse("8:7:1").is_err());
        assert!(RateRange::parse("8:9").is_err());
        assert!(RateRange::parse("0:9:1").is_err());
    }

    #[test]
    fn zero_trials_fails_validation() {
        let mut cfg = RunConfig::default();
        cfg.trials = 0;
        assert!(matches!(cfg.awgn_spec(), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn baseband_rates_unscaled() {
        let mut cfg = RunConfig::default();
        cfg.set("model", "baseband").unwrap();
        assert_eq!(cfg.to_model_rate(0.5), 0.5);
    }
}

//! Deterministic Monte-Carlo sweeps over a rate grid.
//!
//! Trial `t` at rate index `i` draws from its own stream seeded with
//! `mix(master_seed, i, t)`. Trials may run on any number of workers; the
//! per-rate reduction always walks the trial results in index order, so the
//! output is bit-identical for every worker count.

use rayon::prelude::*;

use crate::analytics::{self, HorizonEstimate, HorizonKind, LoadFactor};
use crate::eh_profile::{EhDistribution, EhProfile};
use crate::error::{Error, FieldError, Result};
use crate::fading::{self, FadingTrace, ThresholdTable};
use crate::offline;
use crate::online::{self, FadingMode};
use crate::power_model::PowerModel;
use crate::stream::{self, RandomStream};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdSpec {
    Fixed(f64),
    /// Per-rate optimum of the closed-form outage for this horizon kind.
    Optimized(HorizonKind),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    Awgn,
    Fading {
        coherence_len: usize,
        threshold: ThresholdSpec,
        mode: FadingMode,
        mean_gain: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub channel: Channel,
    pub dist: EhDistribution,
    pub model: PowerModel,
    pub delta_t: f64,
    /// Epochs per trial.
    pub m: usize,
    /// Strictly increasing, bit/s.
    pub rate_grid: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.trials == 0 {
            errs.push(FieldError::new("trials", "must be >= 1"));
        }
        if self.m == 0 {
            errs.push(FieldError::new("m", "must be >= 1"));
        }
        if !(self.delta_t > 0.0 && self.delta_t.is_finite()) {
            errs.push(FieldError::new(
                "delta_t",
                format!("must be > 0, got {}", self.delta_t),
            ));
        }
        if self.rate_grid.is_empty() {
            errs.push(FieldError::new("rate_grid", "must not be empty"));
        } else if self.rate_grid.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            errs.push(FieldError::new(
                "rate_grid",
                "rates must be positive and finite",
            ));
        } else if self.rate_grid.windows(2).any(|w| w[1] <= w[0]) {
            errs.push(FieldError::new("rate_grid", "must be strictly increasing"));
        }
        if let Err(e) = self.dist.validate() {
            errs.push(FieldError::new("dist", e.to_string()));
        }
        if let EhDistribution::FixedList { values } = &self.dist {
            if values.len() != self.m {
                errs.push(FieldError::new(
                    "dist",
                    format!("fixed list has {} values but m = {}", values.len(), self.m),
                ));
            }
        }
        if let Err(e) = self.model.validate() {
            errs.push(FieldError::new("model", e.to_string()));
        }
        if let Channel::Fading {
            coherence_len,
            threshold,
            mean_gain,
            ..
        } = self.channel
        {
            if coherence_len == 0 {
                errs.push(FieldError::new("coherence_len", "must be >= 1"));
            }
            if !(mean_gain > 0.0 && mean_gain.is_finite()) {
                errs.push(FieldError::new("mean_gain", "must be > 0"));
            }
            if let ThresholdSpec::Fixed(g) = threshold {
                if !(g > 0.0 && g.is_finite()) {
                    errs.push(FieldError::new(
                        "threshold",
                        format!("must be > 0, got {g}"),
                    ));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(errs))
        }
    }

    pub fn mean_power(&self) -> f64 {
        self.dist.mean_energy() / self.delta_t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub rate: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Exact finite-horizon value when one exists for this setup.
    pub closed_form: Option<f64>,
    pub asymptotic: f64,
    /// Threshold used at this rate (fading only).
    pub gamma_thr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSeries {
    pub m: usize,
    pub trials: usize,
    pub points: Vec<CurvePoint>,
}

impl CurveSeries {
    pub fn rates(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.rate)
    }
}

/// Sample mean and standard error, accumulated in slice order.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().fold(0.0, |acc, x| acc + x) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = xs.iter().fold(0.0, |acc, x| acc + (x - mean) * (x - mean));
    (mean, (ss / (n - 1) as f64 / n as f64).sqrt())
}

/// Runs experiments on a fixed number of workers (`None`: rayon's global pool).
#[derive(Debug, Clone, Copy, Default)]
pub struct Engine {
    workers: Option<usize>,
}

impl Engine {
    pub fn new(workers: Option<usize>) -> Self {
        Self {
            workers: workers.filter(|w| *w > 0),
        }
    }

    pub fn run(&self, spec: &ExperimentSpec) -> Result<CurveSeries> {
        spec.validate()?;
        self.install(|| run_validated(spec))
    }

    pub fn convergence_study(
        &self,
        spec: &ExperimentSpec,
        m_list: &[usize],
    ) -> Result<ConvergenceStudy> {
        if m_list.is_empty() {
            return Err(Error::InvalidSpec(vec![FieldError::new(
                "m_list",
                "must not be empty",
            )]));
        }
        let mut series = Vec::with_capacity(m_list.len());
        for (j, &m) in m_list.iter().enumerate() {
            let s = ExperimentSpec {
                m,
                master_seed: horizon_seed(spec.master_seed, j),
                ..spec.clone()
            };
            series.push(self.run(&s)?);
        }
        let mean_power = spec.mean_power();
        let ordering = spec
            .rate_grid
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let k = LoadFactor::from_power(mean_power, spec.model.g(r));
                let est: Vec<HorizonEstimate> = series
                    .iter()
                    .map(|s| HorizonEstimate {
                        m: s.m,
                        mean: s.points[i].mc_mean,
                        stderr: s.points[i].mc_stderr,
                    })
                    .collect();
                analytics::bound_gap(k, &est)
            })
            .collect();
        Ok(ConvergenceStudy {
            horizons: m_list.to_vec(),
            series,
            ordering,
        })
    }

    fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.workers {
            None => Ok(f()),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

pub fn run(spec: &ExperimentSpec) -> Result<CurveSeries> {
    Engine::default().run(spec)
}

pub fn convergence_study(spec: &ExperimentSpec, m_list: &[usize]) -> Result<ConvergenceStudy> {
    Engine::default().convergence_study(spec, m_list)
}

/// Horizon `j` of a study; the first horizon keeps the master seed.
fn horizon_seed(master: u64, j: usize) -> u64 {
    if j == 0 {
        master
    } else {
        stream::mix(master, u64::MAX, j as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub horizons: Vec<usize>,
    pub series: Vec<CurveSeries>,
    /// One ordering report per rate point.
    pub ordering: Vec<analytics::BoundReport>,
}

fn run_validated(spec: &ExperimentSpec) -> CurveSeries {
    let mean_power = spec.mean_power();
    let thresholds = match spec.channel {
        Channel::Fading {
            threshold: ThresholdSpec::Optimized(kind),
            ..
        } => Some(
            ThresholdTable::build(&spec.model, mean_power, &spec.rate_grid, kind)
                .expect("rates validated positive"),
        ),
        _ => None,
    };
    let finite_kind = if spec.dist.is_exponential() {
        HorizonKind::for_epochs(spec.m)
    } else {
        None
    };

    let points = spec
        .rate_grid
        .iter()
        .enumerate()
        .map(|(i, &rate)| {
            let g = spec.model.g(rate);
            let k = LoadFactor::from_power(mean_power, g);
            let gamma_thr = match spec.channel {
                Channel::Awgn => None,
                Channel::Fading { threshold, .. } => Some(match threshold {
                    ThresholdSpec::Fixed(v) => v,
                    ThresholdSpec::Optimized(_) => {
                        thresholds.as_ref().expect("table built").gamma_thr[i]
                    }
                }),
            };
            let samples: Vec<f64> = (0..spec.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = stream::stream_for(spec.master_seed, i as u64, t as u64);
                    trial(spec, g, gamma_thr, &mut rng)
                })
                .collect();
            let (mc_mean, mc_stderr) = mean_stderr(&samples);
            let (closed_form, asymptotic) = match (spec.channel, gamma_thr) {
                (Channel::Fading { mean_gain, .. }, Some(gthr)) => (
                    finite_kind.map(|kind| fading::outage_exact_scaled(k, gthr, mean_gain, kind)),
                    fading::outage_exact_scaled(k, gthr, mean_gain, HorizonKind::Asymptotic),
                ),
                _ => (
                    finite_kind.map(|kind| analytics::esp(kind, k)),
                    analytics::esp_asymptotic(k),
                ),
            };
            CurvePoint {
                rate,
                mc_mean,
                mc_stderr,
                ci_lo: (mc_mean - Z95 * mc_stderr).max(0.0).min(mc_mean),
                ci_hi: (mc_mean + Z95 * mc_stderr).min(1.0).max(mc_mean),
                closed_form,
                asymptotic,
                gamma_thr,
            }
        })
        .collect();
    CurveSeries {
        m: spec.m,
        trials: spec.trials,
        points,
    }
}

/// One realization: the conditional shortage ratio (AWGN) or the outage
/// fraction (fading).
fn trial(spec: &ExperimentSpec, g: f64, gamma_thr: Option<f64>, rng: &mut RandomStream) -> f64 {
    let profile =
        EhProfile::generate(&spec.dist, spec.m, spec.delta_t, rng).expect("spec validated");
    match (spec.channel, gamma_thr) {
        (
            Channel::Fading {
                coherence_len,
                mode,
                mean_gain,
                ..
            },
            Some(gthr),
        ) => {
            let trace =
                FadingTrace::sample(spec.m, coherence_len, mean_gain, rng).expect("spec validated");
            online::simulate_fading_with_power(&profile, trace.gains(), g, gthr, mode)
                .outage_fraction
        }
        _ => offline::conditional_es_ratio_with_power(&profile, g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn awgn_spec() -> ExperimentSpec {
        ExperimentSpec {
            channel: Channel::Awgn,
            dist: EhDistribution::exponential(15e-3),
            model: PowerModel::default_passband(),
            delta_t: 1.0,
            m: 1,
            rate_grid: vec![10e6, 14e6, 18e6],
            trials: 2000,
            master_seed: 17,
        }
    }

    #[test]
    fn validation_lists_fields() {
        let spec = ExperimentSpec {
            trials: 0,
            m: 0,
            rate_grid: vec![2.0, 1.0],
            ..awgn_spec()
        };
        match spec.validate() {
            Err(Error::InvalidSpec(errs)) => {
                let fields: Vec<_> = errs.iter().map(|e| e.field.as_str()).collect();
                assert!(fields.contains(&"trials"));
                assert!(fields.contains(&"m"));
                assert!(fields.contains(&"rate_grid"));
            }
            other => panic!("{other:?}"),
        }
        let spec = ExperimentSpec {
            dist: EhDistribution::FixedList {
                values: vec![1.0, 2.0],
            },
            ..awgn_spec()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn single_trial_fixed_list() {
        let spec = ExperimentSpec {
            dist: EhDistribution::FixedList {
                values: vec![0.5, 2.0, 0.2],
            },
            model: PowerModel::ShannonBaseband,
            m: 3,
            rate_grid: vec![0.5],
            trials: 1,
            ..awgn_spec()
        };
        let s = run(&spec).unwrap();
        let p = s.points[0];
        assert!((p.mc_mean - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(p.mc_stderr, 0.0);
        assert_eq!(p.closed_form, None);
    }

    #[test]
    fn deterministic_across_workers() {
        let spec = awgn_spec();
        let a = Engine::new(Some(1)).run(&spec).unwrap();
        let b = Engine::new(Some(4)).run(&spec).unwrap();
        let c = Engine::new(Some(4)).run(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
    }

    #[test]
    fn seed_isolation_across_rates() {
        let a = run(&awgn_spec()).unwrap();
        let spec = ExperimentSpec {
            rate_grid: vec![10e6, 15e6, 18e6],
            ..awgn_spec()
        };
        let b = run(&spec).unwrap();
        assert_eq!(a.points[0], b.points[0]);
        assert_eq!(a.points[2], b.points[2]);
        assert_ne!(a.points[1], b.points[1]);
    }

    #[test]
    fn ci_brackets_mean() {
        let s = run(&awgn_spec()).unwrap();
        for p in &s.points {
            assert!(p.ci_lo <= p.mc_mean && p.mc_mean <= p.ci_hi);
            assert!((0.0..=1.0).contains(&p.ci_lo) && (0.0..=1.0).contains(&p.ci_hi));
            assert!(p.closed_form.is_some());
        }
    }

    #[test]
    fn stderr_halves_with_four_times_trials() {
        let base = ExperimentSpec {
            rate_grid: vec![14e6],
            ..awgn_spec()
        };
        let a = run(&ExperimentSpec {
            trials: 4000,
            ..base.clone()
        })
        .unwrap();
        let b = run(&ExperimentSpec {
            trials: 16000,
            ..base
        })
        .unwrap();
        let ratio = b.points[0].mc_stderr / a.points[0].mc_stderr;
        assert!((ratio - 0.5).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn fading_spec_runs() {
        let spec = ExperimentSpec {
            channel: Channel::Fading {
                coherence_len: 1,
                threshold: ThresholdSpec::Optimized(HorizonKind::M1),
                mode: FadingMode::PerEpoch,
                mean_gain: 1.0,
            },
            trials: 500,
            ..awgn_spec()
        };
        let s = run(&spec).unwrap();
        for p in &s.points {
            assert!(p.gamma_thr.unwrap() > 0.0);
            assert!((0.0..=1.0).contains(&p.mc_mean));
            assert!(p.closed_form.unwrap() >= p.asymptotic - 1e-12);
        }
    }

    #[test]
    fn convergence_first_horizon_reproduces_run() {
        let spec = awgn_spec();
        let study = convergence_study(&spec, &[1]).unwrap();
        assert_eq!(study.series[0], run(&spec).unwrap());
        assert_eq!(study.ordering.len(), spec.rate_grid.len());
    }

    #[test]
    fn mean_stderr_basic() {
        let (m, s) = mean_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(mean_stderr(&[0.4]), (0.4, 0.0));
    }
}

//! Harvested-energy realizations and their cumulative harvested-energy curve.
//!
//! Energy `E_i` lands in storage at `T_i = i Δt`. Storage is unbounded and
//! lossless, so the curve of energy made available by time `t` is the
//! staircase `E'_{⌊t/Δt⌋ + 1}` with `E'_n = Σ_{j<n} E_j`.

use std::path::Path;

use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_distr::Poisson;

use crate::error::{Error, Result};

/// Default Poisson quantum, 1 mJ.
pub const DEFAULT_QUANTUM: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum EhDistribution {
    Exponential {
        mean_energy: f64,
    },
    /// `quantum * Poisson(mean_energy / quantum)`.
    PoissonQuantized {
        mean_energy: f64,
        quantum: f64,
    },
    FixedList {
        values: Vec<f64>,
    },
}

impl EhDistribution {
    pub fn exponential(mean_energy: f64) -> Self {
        EhDistribution::Exponential { mean_energy }
    }

    pub fn poisson(mean_energy: f64) -> Self {
        EhDistribution::PoissonQuantized {
            mean_energy,
            quantum: DEFAULT_QUANTUM,
        }
    }

    /// Mean harvested energy per epoch. For a fixed list this is the list
    /// average.
    pub fn mean_energy(&self) -> f64 {
        match self {
            EhDistribution::Exponential { mean_energy }
            | EhDistribution::PoissonQuantized { mean_energy, .. } => *mean_energy,
            EhDistribution::FixedList { values } => {
                if values.is_empty() {
                    0.0
                } else {
                    sum(values) / values.len() as f64
                }
            }
        }
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, EhDistribution::Exponential { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EhDistribution::Exponential { mean_energy } => positive("mean_energy", *mean_energy),
            EhDistribution::PoissonQuantized {
                mean_energy,
                quantum,
            } => {
                positive("mean_energy", *mean_energy)?;
                positive("quantum", *quantum)
            }
            EhDistribution::FixedList { values } => {
                if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                    return Err(Error::Config(format!(
                        "fixed_list energy {v} is not a nonnegative number"
                    )));
                }
                Ok(())
            }
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be > 0, got {v}")))
    }
}

/// One realization `E_0..E_{M-1}` with epoch length `Δt`.
#[derive(Debug, Clone, PartialEq)]
pub struct EhProfile {
    delta_t: f64,
    energies: Vec<f64>,
    /// `prefix[n] = E'_n`, length `M + 1`.
    prefix: Vec<f64>,
}

impl EhProfile {
    pub fn new(delta_t: f64, energies: Vec<f64>) -> Result<Self> {
        if !(delta_t > 0.0 && delta_t.is_finite()) {
            return Err(Error::Domain(format!("delta_t must be > 0, got {delta_t}")));
        }
        if energies.is_empty() {
            return Err(Error::Domain("profile needs at least one epoch".into()));
        }
        if let Some(e) = energies.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
            return Err(Error::Domain(format!(
                "energy {e} is not a nonnegative number"
            )));
        }
        let prefix = prefix_sums(&energies);
        Ok(Self {
            delta_t,
            energies,
            prefix,
        })
    }

    /// Draw `m` i.i.d. epochs from `dist`.
    pub fn generate<R: Rng + ?Sized>(
        dist: &EhDistribution,
        m: usize,
        delta_t: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("m must be >= 1".into()));
        }
        dist.validate()?;
        let energies = match dist {
            EhDistribution::Exponential { mean_energy } => (0..m)
                .map(|_| {
                    let u: f64 = Open01.sample(rng);
                    -mean_energy * u.ln()
                })
                .collect(),
            EhDistribution::PoissonQuantized {
                mean_energy,
                quantum,
            } => {
                let pois = Poisson::new(mean_energy / quantum)
                    .map_err(|e| Error::Config(format!("poisson: {e}")))?;
                (0..m).map(|_| quantum * pois.sample(rng)).collect()
            }
            EhDistribution::FixedList { values } => {
                if values.len() != m {
                    return Err(Error::Config(format!(
                        "fixed_list has {} values but m = {m}",
                        values.len()
                    )));
                }
                values.clone()
            }
        };
        Self::new(delta_t, energies)
    }

    /// Parse the plain-text profile format: one nonnegative energy in joules
    /// per line; blank lines and `#` comments are ignored.
    pub fn parse_text(text: &str) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                Error::Config(format!("line {}: cannot parse energy {line:?}", lineno + 1))
            })?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "line {}: energy must be a nonnegative number, got {v}",
                    lineno + 1
                )));
            }
            out.push(v);
        }
        if out.is_empty() {
            return Err(Error::Config("profile file contains no energies".into()));
        }
        Ok(out)
    }

    pub fn load(path: &Path, delta_t: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::new(delta_t, Self::parse_text(&text)?)
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Number of epochs `M`.
    pub fn epochs(&self) -> usize {
        self.energies.len()
    }

    /// `T = M Δt`.
    pub fn horizon(&self) -> f64 {
        self.energies.len() as f64 * self.delta_t
    }

    /// `E'_n`, the energy harvested in the first `n` epochs.
    pub fn cumulative(&self, n: usize) -> Result<f64> {
        self.prefix.get(n).copied().ok_or(Error::OutOfRange {
            index: n,
            max: self.energies.len(),
        })
    }

    /// All of `E'_0..=E'_M`.
    pub fn prefix_sums(&self) -> &[f64] {
        &self.prefix
    }

    /// Energy available at time `t`, i.e. the harvested-energy staircase.
    pub fn chec(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let n = ((t / self.delta_t).floor() as usize + 1).min(self.energies.len());
        self.prefix[n]
    }
}

/// Neumaier-compensated prefix sums, `out[0] = 0`.
fn prefix_sums(xs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len() + 1);
    out.push(0.0);
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for &x in xs {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
        out.push(s + c);
    }
    out
}

fn sum(xs: &[f64]) -> f64 {
    *prefix_sums(xs).last().unwrap_or(&0.0)
}

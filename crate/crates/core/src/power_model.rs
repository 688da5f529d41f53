//! Power–rate laws `p = g(R)`.
//!
//! Every model here is strictly increasing and continuous in the rate, which
//! is all the scheduling and shortage analysis needs. Rates are carried in
//! bit/s (normalized bit/s/Hz for [`PowerModel::ShannonBaseband`]), powers in
//! watts and energies in joules.

use crate::error::{Error, Result};
use crate::optimize;

/// Relative tolerance on `g(R0)` for the threshold-rate solver.
pub const R0_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerModel {
    /// `g(R) = 2^(2R) - 1`, rate in normalized units.
    ShannonBaseband,
    /// Inverse of `R = W log2(1 + p psi / (N0 W))`.
    ShannonPassband {
        /// N0 in W/Hz.
        noise_psd: f64,
        /// W in Hz.
        bandwidth: f64,
        /// psi in dB; converted to a linear attenuation on use.
        path_loss_db: f64,
    },
    /// `g(R) = k0 + k1 R`.
    Affine {
        /// Static power, W.
        k0: f64,
        /// Energy per bit, J/bit.
        k1: f64,
    },
}

impl PowerModel {
    /// Link budget with N0 = 1e-19 W/Hz, W = 1 MHz and 70 dB path loss,
    /// i.e. `R = log2(1 + p / 1e-6)` Mbps.
    pub fn default_passband() -> Self {
        PowerModel::ShannonPassband {
            noise_psd: 1e-19,
            bandwidth: 1e6,
            path_loss_db: 70.0,
        }
    }

    /// `k0 = 1 mW`, `k1 = 1 nJ/bit`.
    pub fn default_affine() -> Self {
        PowerModel::Affine { k0: 1e-3, k1: 1e-9 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PowerModel::ShannonBaseband => Ok(()),
            PowerModel::ShannonPassband {
                noise_psd,
                bandwidth,
                path_loss_db,
            } => {
                if !(noise_psd > 0.0 && noise_psd.is_finite()) {
                    return Err(Error::Domain(format!(
                        "noise_psd must be > 0, got {noise_psd}"
                    )));
                }
                if !(bandwidth > 0.0 && bandwidth.is_finite()) {
                    return Err(Error::Domain(format!(
                        "bandwidth must be > 0, got {bandwidth}"
                    )));
                }
                if !path_loss_db.is_finite() {
                    return Err(Error::Domain("path_loss_db must be finite".into()));
                }
                Ok(())
            }
            PowerModel::Affine { k0, k1 } => {
                if !(k0 >= 0.0 && k0.is_finite()) {
                    return Err(Error::Domain(format!("k0 must be >= 0, got {k0}")));
                }
                if !(k1 > 0.0 && k1.is_finite()) {
                    return Err(Error::Domain(format!("k1 must be > 0, got {k1}")));
                }
                Ok(())
            }
        }
    }

    /// Minimum power (W) needed to sustain `rate`.
    pub fn power_of_rate(&self, rate: f64) -> Result<f64> {
        if !(rate >= 0.0) {
            return Err(Error::Domain(format!("rate must be >= 0, got {rate}")));
        }
        Ok(self.g(rate))
    }

    /// `Γ(R) = g(R) Δt`, the energy used by one full epoch of transmission.
    pub fn epoch_energy(&self, rate: f64, delta_t: f64) -> Result<f64> {
        if !(delta_t > 0.0) {
            return Err(Error::Domain(format!("delta_t must be > 0, got {delta_t}")));
        }
        Ok(self.power_of_rate(rate)? * delta_t)
    }

    /// Unchecked `g(R)` for callers that already validated the rate.
    pub(crate) fn g(&self, rate: f64) -> f64 {
        match *self {
            PowerModel::ShannonBaseband => (2.0 * rate * std::f64::consts::LN_2).exp_m1(),
            PowerModel::ShannonPassband {
                noise_psd,
                bandwidth,
                path_loss_db,
            } => {
                let atten = db_to_linear(path_loss_db);
                noise_psd * bandwidth * atten * (rate / bandwidth * std::f64::consts::LN_2).exp_m1()
            }
            PowerModel::Affine { k0, k1 } => k0 + k1 * rate,
        }
    }

    pub fn g_at_zero(&self) -> f64 {
        self.g(0.0)
    }

    /// Threshold rate `R0` with `g(R0) = mean_power`, found by bracketed
    /// bisection.
    pub fn solve_r0(&self, mean_power: f64) -> Result<f64> {
        let g0 = self.g(0.0);
        if !(mean_power > g0) || !mean_power.is_finite() {
            return Err(Error::NoPositiveRate { mean_power, g0 });
        }
        let mut hi = match *self {
            PowerModel::ShannonPassband { bandwidth, .. } => bandwidth,
            PowerModel::Affine { k1, .. } => 1.0 / k1.max(f64::MIN_POSITIVE),
            PowerModel::ShannonBaseband => 1.0,
        };
        while self.g(hi) < mean_power {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::Domain("could not bracket R0".into()));
            }
        }
        let f = |r: f64| self.g(r) - mean_power;
        let r0 = optimize::bisect(f, 0.0, hi, |lo, hi| {
            let mid = 0.5 * (lo + hi);
            (self.g(mid) - mean_power).abs() <= 0.25 * R0_RTOL * mean_power
                || hi - lo <= 4.0 * f64::EPSILON * hi
        });
        Ok(r0)
    }
}

/// Path loss in dB expressed as the linear factor multiplying the
/// transmit power needed (70 dB -> 1e7).
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

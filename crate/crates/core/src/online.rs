//! Pause-and-transmit simulation.
//!
//! The battery starts empty and receives `E_i` at `T_i`. Within an epoch the
//! transmitter drains at its transmit power until either the epoch ends or
//! the battery is empty, then waits for the next arrival. Everything is
//! solved in closed form per epoch, so there is no time grid.

use crate::eh_profile::EhProfile;
use crate::error::{Error, Result};
use crate::fading::FadingTrace;
use crate::power_model::PowerModel;

#[derive(Debug, Clone, PartialEq)]
pub struct ShortageStats {
    /// Aggregate time spent paused for lack of energy, s.
    pub shortage_time: f64,
    pub horizon: f64,
    pub es_ratio: f64,
    /// Paused time inside each epoch, s.
    pub per_epoch_shortage: Vec<f64>,
    pub energy_consumed: f64,
    pub final_battery: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageStats {
    pub outage_fraction: f64,
    pub energy_component: f64,
    pub fading_component: f64,
    /// Only tracked in carry-over mode; zero otherwise.
    pub energy_consumed: f64,
    pub final_battery: f64,
}

/// How energy is accounted across epochs under fading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FadingMode {
    /// Every epoch uses only its own arrival; leftover energy is dropped.
    #[default]
    PerEpoch,
    /// Leftover energy carries into later epochs, as in the AWGN protocol;
    /// epochs below threshold are skipped and spend nothing.
    Carryover,
    /// Leftover energy carries over and the transmitter, having no CSI,
    /// spends energy in every epoch; data sent below threshold is lost.
    /// The outage closed forms describe this mode for every horizon.
    Blind,
}

pub fn simulate_awgn(profile: &EhProfile, model: &PowerModel, rate: f64) -> Result<ShortageStats> {
    if !(rate > 0.0) {
        return Err(Error::Domain(format!("rate must be > 0, got {rate}")));
    }
    let g = model.power_of_rate(rate)?;
    Ok(simulate_awgn_with_power(profile, g))
}

pub fn simulate_awgn_with_power(profile: &EhProfile, g: f64) -> ShortageStats {
    let dt = profile.delta_t();
    let horizon = profile.horizon();
    let mut battery = 0.0f64;
    let mut consumed = 0.0f64;
    let mut per_epoch = Vec::with_capacity(profile.epochs());
    for &e in profile.energies() {
        battery += e;
        let tx = if g > 0.0 { (battery / g).min(dt) } else { dt };
        let used = if tx >= dt { g * dt } else { battery };
        battery = (battery - used).max(0.0);
        consumed += used;
        per_epoch.push(dt - tx);
    }
    let shortage_time: f64 = per_epoch.iter().sum();
    ShortageStats {
        shortage_time,
        horizon,
        es_ratio: (shortage_time / horizon).clamp(0.0, 1.0),
        per_epoch_shortage: per_epoch,
        energy_consumed: consumed,
        final_battery: battery,
    }
}

/// Threshold-gated transmission over a block-fading channel.
///
/// Transmit power is `g(R) / gamma_thr`. Epochs whose gain falls below the
/// threshold are counted as fading outage for the time the transmitter
/// would otherwise have been on.
pub fn simulate_fading(
    profile: &EhProfile,
    trace: &FadingTrace,
    model: &PowerModel,
    rate: f64,
    gamma_thr: f64,
    mode: FadingMode,
) -> Result<OutageStats> {
    if trace.len() != profile.epochs() {
        return Err(Error::LengthMismatch {
            expected: profile.epochs(),
            got: trace.len(),
        });
    }
    if !(gamma_thr > 0.0 && gamma_thr.is_finite()) {
        return Err(Error::Domain(format!(
            "gamma_thr must be > 0, got {gamma_thr}"
        )));
    }
    if !(rate > 0.0) {
        return Err(Error::Domain(format!("rate must be > 0, got {rate}")));
    }
    let g = model.power_of_rate(rate)?;
    Ok(simulate_fading_with_power(
        profile,
        trace.gains(),
        g,
        gamma_thr,
        mode,
    ))
}

pub(crate) fn simulate_fading_with_power(
    profile: &EhProfile,
    gains: &[f64],
    g: f64,
    gamma_thr: f64,
    mode: FadingMode,
) -> OutageStats {
    let dt = profile.delta_t();
    let m = profile.epochs() as f64;
    match mode {
        FadingMode::PerEpoch => {
            let gamma_energy = g * dt / gamma_thr;
            let (mut energy, mut fading) = (0.0f64, 0.0f64);
            for (&e, &gain) in profile.energies().iter().zip(gains) {
                let short = if gamma_energy > 0.0 {
                    (1.0 - e / gamma_energy).max(0.0)
                } else {
                    0.0
                };
                energy += short;
                if gain < gamma_thr {
                    fading += 1.0 - short;
                }
            }
            let energy_component = energy / m;
            let fading_component = fading / m;
            OutageStats {
                outage_fraction: energy_component + fading_component,
                energy_component,
                fading_component,
                energy_consumed: 0.0,
                final_battery: 0.0,
            }
        }
        FadingMode::Carryover | FadingMode::Blind => {
            let skip_bad = mode == FadingMode::Carryover;
            let p = g / gamma_thr;
            let mut battery = 0.0f64;
            let mut consumed = 0.0f64;
            let (mut energy, mut fading) = (0.0f64, 0.0f64);
            for (&e, &gain) in profile.energies().iter().zip(gains) {
                battery += e;
                let tx = if p > 0.0 { (battery / p).min(dt) } else { dt };
                energy += dt - tx;
                if gain < gamma_thr {
                    fading += tx;
                }
                if gain >= gamma_thr || !skip_bad {
                    let used = if tx >= dt { p * dt } else { battery };
                    battery = (battery - used).max(0.0);
                    consumed += used;
                }
            }
            let horizon = profile.horizon();
            let energy_component = energy / horizon;
            let fading_component = fading / horizon;
            OutageStats {
                outage_fraction: energy_component + fading_component,
                energy_component,
                fading_component,
                energy_consumed: consumed,
                final_battery: battery,
            }
        }
    }
}

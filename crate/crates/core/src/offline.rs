//! Store-and-transmit scheduling.
//!
//! The transmitter stores energy until `T_S`, then sends at rate `R` until
//! the horizon. `T_S` is the largest t-intercept of slope-`g(R)` lines
//! tangent to the harvested-energy staircase:
//!
//! ```text
//! T_S = max(0, max_{n=1..M} [ n Δt - E'_n / g(R) ])
//! ```
//!
//! Energy causality holds iff the consumption ramp stays under the staircase
//! just before every arrival, so feasibility is checked at those left limits.

use crate::eh_profile::EhProfile;
use crate::error::{Error, Result};
use crate::power_model::PowerModel;

/// Relative slack used when comparing consumption against harvested energy.
const CAUSALITY_RTOL: f64 = 1e-12;

/// Result of the tangent-line construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShortageStart {
    /// `T_S`, clipped at zero.
    pub start: f64,
    /// `max_n [n Δt - E'_n / g(R)]` before clipping.
    pub unclipped: f64,
    /// Arrival count `n` attaining the maximum (the tangency epoch is `n - 1`).
    pub binding: usize,
}

/// Two-rate plan: silent on `[0, T_S)`, rate `R` on `[T_S, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionSchedule {
    pub rate: f64,
    pub start_time: f64,
    pub horizon: f64,
    /// `g(R)`, W.
    pub power: f64,
}

impl TransmissionSchedule {
    /// Energy drawn by time `t`.
    pub fn consumption(&self, t: f64) -> f64 {
        self.power * (t.min(self.horizon) - self.start_time).max(0.0)
    }

    pub fn es_ratio(&self) -> f64 {
        self.start_time / self.horizon
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Earliest time consumption exceeds the harvested energy.
    pub first_violation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dominance {
    Infeasible { violation_at: f64 },
    Optimal,
    Suboptimal { excess_shortage: f64 },
}

fn rate_power(model: &PowerModel, rate: f64) -> Result<f64> {
    model.power_of_rate(rate)
}

/// `T_S` for the given realization and rate.
pub fn shortage_start(profile: &EhProfile, model: &PowerModel, rate: f64) -> Result<ShortageStart> {
    let g = rate_power(model, rate)?;
    Ok(shortage_start_with_power(profile, g))
}

/// Same as [`shortage_start`] with `g(R)` given directly.
pub fn shortage_start_with_power(profile: &EhProfile, g: f64) -> ShortageStart {
    if g <= 0.0 {
        return ShortageStart {
            start: 0.0,
            unclipped: f64::NEG_INFINITY,
            binding: 0,
        };
    }
    let dt = profile.delta_t();
    let prefix = profile.prefix_sums();
    let (binding, unclipped) = (1..prefix.len())
        .map(|n| (n, n as f64 * dt - prefix[n] / g))
        .fold(
            (0, f64::NEG_INFINITY),
            |best, c| if c.1 > best.1 { c } else { best },
        );
    ShortageStart {
        start: unclipped.max(0.0),
        unclipped,
        binding,
    }
}

/// Conditional energy-shortage ratio `T_S / (M Δt)`.
pub fn conditional_es_ratio(profile: &EhProfile, model: &PowerModel, rate: f64) -> Result<f64> {
    Ok(shortage_start(profile, model, rate)?.start / profile.horizon())
}

pub fn conditional_es_ratio_with_power(profile: &EhProfile, g: f64) -> f64 {
    shortage_start_with_power(profile, g).start / profile.horizon()
}

pub fn build_schedule(
    profile: &EhProfile,
    model: &PowerModel,
    rate: f64,
) -> Result<TransmissionSchedule> {
    let power = rate_power(model, rate)?;
    let ts = shortage_start_with_power(profile, power);
    Ok(TransmissionSchedule {
        rate,
        start_time: ts.start.min(profile.horizon()),
        horizon: profile.horizon(),
        power,
    })
}

/// Check energy causality of `schedule` against `profile`.
pub fn check_feasible(
    schedule: &TransmissionSchedule,
    profile: &EhProfile,
    model: &PowerModel,
) -> Result<Feasibility> {
    let horizon = profile.horizon();
    if (schedule.horizon - horizon).abs() > 1e-12 * horizon {
        return Err(Error::HorizonMismatch {
            schedule: schedule.horizon,
            profile: horizon,
        });
    }
    let g = if schedule.rate == 0.0 {
        0.0
    } else {
        rate_power(model, schedule.rate)?
    };
    if g == 0.0 {
        return Ok(Feasibility {
            feasible: true,
            first_violation: None,
        });
    }
    let sched = TransmissionSchedule {
        power: g,
        ..*schedule
    };
    let dt = profile.delta_t();
    let prefix = profile.prefix_sums();
    for n in 1..prefix.len() {
        // left limit just before arrival n, where the staircase is at E'_n
        let used = sched.consumption(n as f64 * dt);
        let avail = prefix[n];
        if used > avail + CAUSALITY_RTOL * avail.max(g * dt) {
            return Ok(Feasibility {
                feasible: false,
                first_violation: Some(sched.start_time + avail / g),
            });
        }
    }
    Ok(Feasibility {
        feasible: true,
        first_violation: None,
    })
}

/// Classify a candidate start time against the optimal one.
pub fn dominance_check(
    alt_start: f64,
    profile: &EhProfile,
    model: &PowerModel,
    rate: f64,
) -> Result<Dominance> {
    let horizon = profile.horizon();
    if !(0.0..=horizon).contains(&alt_start) {
        return Err(Error::Domain(format!(
            "alt_start {alt_start} outside [0, {horizon}]"
        )));
    }
    let optimal = build_schedule(profile, model, rate)?;
    let candidate = TransmissionSchedule {
        start_time: alt_start,
        ..optimal
    };
    let tol = 1e-12 * horizon.max(1.0);
    if (alt_start - optimal.start_time).abs() <= tol {
        return Ok(Dominance::Optimal);
    }
    let feas = check_feasible(&candidate, profile, model)?;
    match feas.first_violation {
        Some(t) => Ok(Dominance::Infeasible { violation_at: t }),
        None => Ok(Dominance::Suboptimal {
            excess_shortage: alt_start - optimal.start_time,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // g(0.5) = 1 W for the baseband model
    const UNIT: f64 = 0.5;

    fn base() -> PowerModel {
        PowerModel::ShannonBaseband
    }

    fn small() -> EhProfile {
        EhProfile::new(1.0, vec![0.5, 2.0, 0.2]).unwrap()
    }

    #[test]
    fn shortage_start_examples() {
        let ts = shortage_start(&small(), &base(), UNIT).unwrap();
        assert!((ts.start - 0.5).abs() < 1e-15);
        assert_eq!(ts.binding, 1);

        let big = EhProfile::new(1.0, vec![1.0, 3.0, 1.5]).unwrap();
        let ts = shortage_start(&big, &base(), UNIT).unwrap();
        assert_eq!(ts.start, 0.0);
        assert!(ts.unclipped <= 0.0);

        let one = EhProfile::new(2.0, vec![1.0]).unwrap();
        let ts = shortage_start(&one, &base(), UNIT).unwrap();
        assert!((ts.start - 1.0).abs() < 1e-15, "Δt/2 for E0 = Γ/2");
    }

    #[test]
    fn zero_power_starts_immediately() {
        let affine0 = PowerModel::Affine { k0: 0.0, k1: 1.0 };
        let ts = shortage_start(&small(), &affine0, 0.0).unwrap();
        assert_eq!(ts.start, 0.0);
        let s = build_schedule(&small(), &affine0, 0.0).unwrap();
        assert_eq!(s.start_time, 0.0);
    }

    #[test]
    fn es_ratio_examples() {
        let r = conditional_es_ratio(&small(), &base(), UNIT).unwrap();
        assert!((r - 1.0 / 6.0).abs() < 1e-15);
        let zero = EhProfile::new(1.0, vec![0.0; 4]).unwrap();
        assert_eq!(conditional_es_ratio(&zero, &base(), UNIT).unwrap(), 1.0);
        let single = EhProfile::new(1.0, vec![2.0]).unwrap();
        assert_eq!(conditional_es_ratio(&single, &base(), UNIT).unwrap(), 0.0);
    }

    #[test]
    fn build_schedule_examples() {
        let s = build_schedule(&small(), &base(), UNIT).unwrap();
        assert!((s.start_time - 0.5).abs() < 1e-15);
        assert_eq!(s.horizon, 3.0);
        let zero = EhProfile::new(1.0, vec![0.0; 3]).unwrap();
        let s = build_schedule(&zero, &base(), UNIT).unwrap();
        assert_eq!(s.start_time, s.horizon);
        assert_eq!(s.consumption(3.0), 0.0);
    }

    #[test]
    fn feasibility_is_tight_at_tangency() {
        let p = small();
        let s = build_schedule(&p, &base(), UNIT).unwrap();
        assert!(check_feasible(&s, &p, &base()).unwrap().feasible);

        let early = TransmissionSchedule {
            start_time: s.start_time - 1e-3,
            ..s
        };
        let f = check_feasible(&early, &p, &base()).unwrap();
        assert!(!f.feasible);
        // consumption passes E'_1 = 0.5 J at 0.499 + 0.5
        let t = f.first_violation.unwrap();
        assert!((t - 0.999).abs() < 1e-12, "{t}");
        assert!(t < 1.0);
    }

    #[test]
    fn zero_rate_schedule_feasible() {
        let p = small();
        let s = TransmissionSchedule {
            rate: 0.0,
            start_time: 0.0,
            horizon: 3.0,
            power: 0.0,
        };
        assert!(check_feasible(&s, &p, &base()).unwrap().feasible);
    }

    #[test]
    fn horizon_mismatch() {
        let p = small();
        let s = TransmissionSchedule {
            rate: UNIT,
            start_time: 0.0,
            horizon: 4.0,
            power: 1.0,
        };
        assert!(matches!(
            check_feasible(&s, &p, &base()),
            Err(Error::HorizonMismatch { .. })
        ));
    }

    #[test]
    fn dominance_examples() {
        let p = small();
        assert_eq!(
            dominance_check(0.5, &p, &base(), UNIT).unwrap(),
            Dominance::Optimal
        );
        match dominance_check(0.7, &p, &base(), UNIT).unwrap() {
            Dominance::Suboptimal { excess_shortage } => {
                assert!((excess_shortage - 0.2).abs() < 1e-12)
            }
            d => panic!("{d:?}"),
        }
        assert!(matches!(
            dominance_check(0.3, &p, &base(), UNIT).unwrap(),
            Dominance::Infeasible { .. }
        ));
        assert!(dominance_check(3.5, &p, &base(), UNIT).is_err());
    }

    #[test]
    fn later_arrival_can_bind() {
        // E = [1, 0, 0]: ramp from T_S must not exceed 1 J by t = 3
        let p = EhProfile::new(1.0, vec![1.0, 0.0, 0.0]).unwrap();
        let ts = shortage_start(&p, &base(), UNIT).unwrap();
        assert!((ts.start - 2.0).abs() < 1e-15);
        assert_eq!(ts.binding, 3);
    }
}

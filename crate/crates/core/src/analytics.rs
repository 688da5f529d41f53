//! Closed-form energy-shortage probabilities and effective rates in AWGN.
//!
//! Everything is expressed through the load factor `K = Ē / Γ(R) = P̄ / g(R)`.
//! The one- and two-epoch formulas assume i.i.d. exponential harvesting;
//! the asymptotic ones only need the mean.

use std::fmt;

use crate::error::Result;
use crate::optimize;
use crate::power_model::PowerModel;

/// Harvested energy per epoch relative to the energy one epoch of
/// transmission needs.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LoadFactor(f64);

impl LoadFactor {
    pub fn new(k: f64) -> Self {
        debug_assert!(k > 0.0, "load factor must be positive");
        Self(k)
    }

    /// `K = P̄ / g(R)`.
    pub fn from_power(mean_power: f64, g: f64) -> Self {
        Self(mean_power / g)
    }

    pub fn for_rate(model: &PowerModel, mean_power: f64, rate: f64) -> Result<Self> {
        Ok(Self(mean_power / model.power_of_rate(rate)?))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `U = 1 - 1/K`.
    pub fn u(self) -> f64 {
        1.0 - 1.0 / self.0
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self(self.0 * factor)
    }
}

/// Transmission horizon for which a closed form is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HorizonKind {
    M1,
    M2,
    Asymptotic,
}

impl HorizonKind {
    pub const ALL: [HorizonKind; 3] = [HorizonKind::M1, HorizonKind::M2, HorizonKind::Asymptotic];

    /// Closed form available for a finite horizon of `m` epochs.
    pub fn for_epochs(m: usize) -> Option<Self> {
        match m {
            1 => Some(HorizonKind::M1),
            2 => Some(HorizonKind::M2),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            HorizonKind::M1 => "m1",
            HorizonKind::M2 => "m2",
            HorizonKind::Asymptotic => "asym",
        }
    }
}

impl fmt::Display for HorizonKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for HorizonKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "m1" | "1" => Ok(HorizonKind::M1),
            "m2" | "2" => Ok(HorizonKind::M2),
            "asym" | "asymptotic" | "inf" => Ok(HorizonKind::Asymptotic),
            _ => Err(format!("unknown horizon {s:?} (expected m1, m2 or asym)")),
        }
    }
}

/// One epoch: `(1 - K) + K e^(-1/K)`.
pub fn esp_m1(k: LoadFactor) -> f64 {
    let k = k.0;
    // 1 - K (1 - e^(-1/K)), written to keep precision for large K
    1.0 + k * (-1.0 / k).exp_m1()
}

pub fn effrate_m1(rate: f64, k: LoadFactor) -> f64 {
    rate * -(k.0 * (-1.0 / k.0).exp_m1())
}

/// Two epochs: `(1 - K) + (K/2) e^(-1/K) + ((1 + K)/2) e^(-2/K)`.
pub fn esp_m2(k: LoadFactor) -> f64 {
    let k = k.0;
    let e1 = (-1.0 / k).exp();
    let e2 = (-2.0 / k).exp();
    (1.0 - k) + 0.5 * k * e1 + 0.5 * (1.0 + k) * e2
}

pub fn effrate_m2(rate: f64, k: LoadFactor) -> f64 {
    rate * (1.0 - esp_m2(k))
}

/// Infinite horizon: `⌈1 - K⌉⁺`.
pub fn esp_asymptotic(k: LoadFactor) -> f64 {
    (1.0 - k.0).max(0.0)
}

/// `R min(K, 1)`.
pub fn effrate_asymptotic(rate: f64, k: LoadFactor) -> f64 {
    rate * k.0.min(1.0)
}

pub fn esp(kind: HorizonKind, k: LoadFactor) -> f64 {
    match kind {
        HorizonKind::M1 => esp_m1(k),
        HorizonKind::M2 => esp_m2(k),
        HorizonKind::Asymptotic => esp_asymptotic(k),
    }
}

pub fn effrate(kind: HorizonKind, rate: f64, k: LoadFactor) -> f64 {
    match kind {
        HorizonKind::M1 => effrate_m1(rate, k),
        HorizonKind::M2 => effrate_m2(rate, k),
        HorizonKind::Asymptotic => effrate_asymptotic(rate, k),
    }
}

/// Points in the coarse rate grid of [`max_effrate`].
pub const EFFRATE_GRID_POINTS: usize = 2000;
/// Relative rate tolerance of the golden-section refinement.
pub const EFFRATE_RTOL: f64 = 1e-6;

/// Rate maximizing the effective rate for the given horizon, searched over
/// `[R0/4, 4 R0]`. Returns `(rate*, effrate*)`.
pub fn max_effrate(model: &PowerModel, mean_power: f64, kind: HorizonKind) -> Result<(f64, f64)> {
    let r0 = model.solve_r0(mean_power)?;
    let grid = optimize::linspace(0.25 * r0, 4.0 * r0, EFFRATE_GRID_POINTS);
    let f = |r: f64| effrate(kind, r, LoadFactor::from_power(mean_power, model.g(r)));
    Ok(optimize::grid_then_golden_max(f, &grid, EFFRATE_RTOL))
}

/// Monte-Carlo ESP estimate at a horizon of `m` epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonEstimate {
    pub m: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: String,
    /// The inequality is `lhs <= rhs + slack`.
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + self.slack
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundReport {
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(BoundCheck::holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &BoundCheck> {
        self.checks.iter().filter(|c| !c.holds())
    }
}

/// Statistical slack multiplier on the largest standard error involved.
pub const BOUND_SIGMAS: f64 = 4.0;

/// Check finite-horizon estimates against the ordering results:
/// the asymptotic ESP bounds every horizon from below, the single-epoch
/// ESP bounds every horizon from above, the ESP is nonincreasing along
/// the sorted horizons, and `P(M1 + M2) <= (M1 P(M1) + M2 P(M2)) / (M1 + M2)`
/// for every pair whose sum is also present.
pub fn bound_gap(k: LoadFactor, estimates: &[HorizonEstimate]) -> BoundReport {
    let mut est = estimates.to_vec();
    est.sort_by_key(|e| e.m);
    let slack = |a: &HorizonEstimate, b: &HorizonEstimate| BOUND_SIGMAS * a.stderr.max(b.stderr);
    let find = |m: usize| est.iter().find(|e| e.m == m);
    let floor = esp_asymptotic(k);
    let mut checks = Vec::new();

    for e in &est {
        checks.push(BoundCheck {
            name: format!("asymptotic <= P({})", e.m),
            lhs: floor,
            rhs: e.mean,
            slack: BOUND_SIGMAS * e.stderr,
        });
    }
    if let Some(one) = find(1) {
        for e in est.iter().filter(|e| e.m > 1) {
            checks.push(BoundCheck {
                name: format!("P({}) <= P(1)", e.m),
                lhs: e.mean,
                rhs: one.mean,
                slack: slack(e, one),
            });
        }
    }
    for w in est.windows(2) {
        checks.push(BoundCheck {
            name: format!("P({}) <= P({})", w[1].m, w[0].m),
            lhs: w[1].mean,
            rhs: w[0].mean,
            slack: slack(&w[0], &w[1]),
        });
    }
    for (i, a) in est.iter().enumerate() {
        for b in &est[i..] {
            let Some(sum) = find(a.m + b.m) else { continue };
            let mixture = (a.m as f64 * a.mean + b.m as f64 * b.mean) / sum.m as f64;
            checks.push(BoundCheck {
                name: format!("P({}) <= mix({}, {})", sum.m, a.m, b.m),
                lhs: sum.mean,
                rhs: mixture,
                slack: BOUND_SIGMAS * a.stderr.max(b.stderr).max(sum.stderr),
            });
        }
    }
    BoundReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(v: f64) -> LoadFactor {
        LoadFactor::new(v)
    }

    #[test]
    fn esp_m1_values() {
        assert!((esp_m1(k(1.0)) - 0.367_879_441_171_442).abs() < 1e-12);
        assert!((esp_m1(k(2.0)) - 0.213_061_319_425_267).abs() < 1e-12);
        assert!((esp_m1(k(1e-6)) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn esp_m2_values() {
        // frozen from the formula, cross-checked by quadrature in tests/oracles.rs
        assert!((esp_m2(k(1.0)) - 0.319_275_003_822_334).abs() < 1e-12);
        assert!((esp_m2(k(2.0)) - 0.158_349_821_469_797).abs() < 1e-12);
        assert!((esp_m2(k(1e-6)) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn effrate_values() {
        assert!((effrate_m1(1.0, k(1.0)) - 0.632_120_558_828_558).abs() < 1e-12);
        assert!((effrate_m1(1.0, k(1e9)) - 1.0).abs() < 1e-9);
        let kk = k((2f64.powi(12) - 1.0) / (2f64.powf(10.21) - 1.0));
        let e = effrate_m1(10.21, kk);
        assert!((e - 8.869).abs() < 5e-3, "{e}");
        assert!((effrate_m2(3.0, k(1.0)) - 3.0 * (1.0 - esp_m2(k(1.0)))).abs() < 1e-15);
        assert!((effrate_m2(2.0, k(1e-6))).abs() < 1e-5);
    }

    #[test]
    fn asymptotic_values() {
        assert_eq!(esp_asymptotic(k(1.0)), 0.0);
        assert_eq!(esp_asymptotic(k(3.0)), 0.0);
        assert_eq!(esp_asymptotic(k(0.5)), 0.5);
        // baseband, P̄ = 3, R = 1.5: K = 3/7
        let kk = LoadFactor::for_rate(&PowerModel::ShannonBaseband, 3.0, 1.5).unwrap();
        assert!((esp_asymptotic(kk) - 4.0 / 7.0).abs() < 1e-15);

        assert_eq!(effrate_asymptotic(5.0, k(1.5)), 5.0);
        let kk = k((2f64.powi(12) - 1.0) / (2f64.powi(16) - 1.0));
        assert!((effrate_asymptotic(16.0, kk) - 0.999_771_114_671_55).abs() < 1e-12);
    }

    #[test]
    fn ordering_over_k() {
        let grid = optimize::logspace(1e-2, 1e2, 400);
        let mut prev: Option<(f64, f64)> = None;
        for &kv in &grid {
            let (a, m2, m1) = (esp_asymptotic(k(kv)), esp_m2(k(kv)), esp_m1(k(kv)));
            assert!(
                0.0 <= a && a <= m2 && m2 <= m1 && m1 < 1.0,
                "K={kv}: {a} {m2} {m1}"
            );
            if let Some((p1, p2)) = prev {
                assert!(m1 < p1 && m2 < p2, "not decreasing at K={kv}");
            }
            prev = Some((m1, m2));
        }
    }

    #[test]
    fn max_effrate_asymptotic_is_r0() {
        let pass = PowerModel::default_passband();
        let p = pass.g(12e6);
        let (r, e) = max_effrate(&pass, p, HorizonKind::Asymptotic).unwrap();
        assert!((r - 12e6).abs() / 12e6 < 1e-5, "{r}");
        assert!((e - 12e6).abs() / 12e6 < 1e-5, "{e}");
    }

    #[test]
    fn max_effrate_m1_ratio() {
        let pass = PowerModel::default_passband();
        let p = pass.g(12e6);
        let (_, e) = max_effrate(&pass, p, HorizonKind::M1).unwrap();
        assert!((e / 12e6 - 0.739).abs() < 1e-3, "{}", e / 12e6);
        assert!((e / 1e6 - 8.869).abs() < 5e-3);
    }

    #[test]
    fn m2_peak_between_m1_and_asymptotic() {
        let pass = PowerModel::default_passband();
        let p = 15e-3;
        let (_, e1) = max_effrate(&pass, p, HorizonKind::M1).unwrap();
        let (_, e2) = max_effrate(&pass, p, HorizonKind::M2).unwrap();
        let (_, ea) = max_effrate(&pass, p, HorizonKind::Asymptotic).unwrap();
        assert!(e1 < e2 && e2 < ea);
    }

    #[test]
    fn bound_gap_on_closed_forms() {
        let kk = k(1.0);
        let est = [
            HorizonEstimate {
                m: 1,
                mean: esp_m1(kk),
                stderr: 0.0,
            },
            HorizonEstimate {
                m: 2,
                mean: esp_m2(kk),
                stderr: 0.0,
            },
        ];
        let rep = bound_gap(kk, &est);
        assert!(rep.all_hold(), "{rep:?}");
        assert!(rep.checks.iter().any(|c| c.name == "P(2) <= mix(1, 1)"));
        assert!((est[0].mean - 0.3679).abs() < 1e-4);
        assert!((est[1].mean - 0.3193).abs() < 1e-4);
    }

    #[test]
    fn bound_gap_flags_violations() {
        let kk = k(0.5);
        let est = [
            HorizonEstimate {
                m: 1,
                mean: 0.6,
                stderr: 0.001,
            },
            HorizonEstimate {
                m: 2,
                mean: 0.7,
                stderr: 0.001,
            },
        ];
        let rep = bound_gap(kk, &est);
        assert!(!rep.all_hold());
        let names: Vec<_> = rep.failures().map(|c| c.name.clone()).collect();
        assert!(names.contains(&"P(2) <= P(1)".to_string()));
        assert!(names.contains(&"P(2) <= mix(1, 1)".to_string()));
    }

    #[test]
    fn asymptotic_floor_at_high_load() {
        let rep = bound_gap(
            k(2.0),
            &[HorizonEstimate {
                m: 7,
                mean: 0.0,
                stderr: 0.0,
            }],
        );
        assert!(rep.all_hold());
    }

    #[test]
    fn horizon_kind_parse() {
        assert_eq!("m1".parse::<HorizonKind>().unwrap(), HorizonKind::M1);
        assert_eq!(
            "asymptotic".parse::<HorizonKind>().unwrap(),
            HorizonKind::Asymptotic
        );
        assert!("m3".parse::<HorizonKind>().is_err());
        assert_eq!(HorizonKind::for_epochs(2), Some(HorizonKind::M2));
        assert_eq!(HorizonKind::for_epochs(3), None);
    }
}

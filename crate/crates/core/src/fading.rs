//! Rayleigh block fading without CSI at the transmitter.
//!
//! The transmitter only knows the gain distribution. It transmits at power
//! `g(R) / γ_thr`, which succeeds whenever the instantaneous gain is at least
//! `γ_thr`. The threshold is chosen offline to minimize the outage
//! probability `1 - (1 - P_es(K γ_thr)) e^(-γ_thr)`, where the effective
//! load `K γ_thr` reflects the extra power spent per epoch.

use rand::distr::{Distribution, Open01};
use rand::Rng;

use crate::analytics::{self, HorizonKind, LoadFactor};
use crate::csvfmt::fmt_g9;
use crate::error::{Error, Result};
use crate::optimize;
use crate::power_model::PowerModel;

/// Upper end of the threshold search; `P_ch(10) > 0.99995`.
pub const GAMMA_MAX: f64 = 10.0;
/// Lower end of the log-spaced threshold grid.
pub const GAMMA_MIN: f64 = 1e-6;
pub const THRESHOLD_GRID_POINTS: usize = 2000;
pub const THRESHOLD_RTOL: f64 = 1e-6;

/// Per-epoch channel power gains, constant over blocks of `coherence_len`
/// epochs (the last block may be short).
#[derive(Debug, Clone, PartialEq)]
pub struct FadingTrace {
    gains: Vec<f64>,
    coherence_len: usize,
    mean_gain: f64,
}

impl FadingTrace {
    pub fn from_gains(gains: Vec<f64>, coherence_len: usize, mean_gain: f64) -> Result<Self> {
        if coherence_len == 0 {
            return Err(Error::Domain("coherence_len must be >= 1".into()));
        }
        if let Some(g) = gains.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(Error::Domain(format!("channel gain {g} must be > 0")));
        }
        for block in gains.chunks(coherence_len) {
            if block.iter().any(|&g| g != block[0]) {
                return Err(Error::Domain("gain varies inside a coherence block".into()));
            }
        }
        Ok(Self {
            gains,
            coherence_len,
            mean_gain,
        })
    }

    /// Block-constant exponential gains with mean `mean_gain`.
    pub fn sample<R: Rng + ?Sized>(
        m: usize,
        coherence_len: usize,
        mean_gain: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if coherence_len == 0 {
            return Err(Error::Domain("coherence_len must be >= 1".into()));
        }
        if !(mean_gain > 0.0 && mean_gain.is_finite()) {
            return Err(Error::Domain(format!(
                "mean_gain must be > 0, got {mean_gain}"
            )));
        }
        let mut gains = Vec::with_capacity(m);
        while gains.len() < m {
            let u: f64 = Open01.sample(rng);
            let g = -mean_gain * u.ln();
            let n = coherence_len.min(m - gains.len());
            gains.extend(std::iter::repeat_n(g, n));
        }
        Ok(Self {
            gains,
            coherence_len,
            mean_gain,
        })
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn coherence_len(&self) -> usize {
        self.coherence_len
    }

    pub fn mean_gain(&self) -> f64 {
        self.mean_gain
    }

    /// Number of independent fade levels `N`.
    pub fn blocks(&self) -> usize {
        self.gains.len().div_ceil(self.coherence_len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdSource {
    FixedUnity,
    Fixed,
    Optimized(HorizonKind),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPolicy {
    pub gamma_thr: f64,
    pub source: ThresholdSource,
}

impl ThresholdPolicy {
    pub fn unity() -> Self {
        Self {
            gamma_thr: 1.0,
            source: ThresholdSource::FixedUnity,
        }
    }
}

/// `P(γ < γ_thr)` for Rayleigh fading with mean gain `γ0`.
pub fn p_ch(gamma_thr: f64, mean_gain: f64) -> f64 {
    -(-gamma_thr / mean_gain).exp_m1()
}

/// Closed-form outage probability for normalized Rayleigh fading.
pub fn outage_exact(k: LoadFactor, gamma_thr: f64, kind: HorizonKind) -> f64 {
    let kg = k.value() * gamma_thr;
    let pass = (-gamma_thr).exp();
    match kind {
        HorizonKind::M1 => 1.0 + kg * pass * (-1.0 / kg).exp_m1(),
        HorizonKind::M2 => {
            let inner = kg - 0.5 * kg * (-1.0 / kg).exp() - 0.5 * (1.0 + kg) * (-2.0 / kg).exp();
            1.0 - pass * inner
        }
        HorizonKind::Asymptotic => 1.0 - pass * (1.0 - (1.0 - kg).max(0.0)),
    }
}

/// [`outage_exact`] for a channel of mean gain `γ0`, by rescaling the
/// threshold to `γ_thr / γ0` and the load to `K γ0`.
pub fn outage_exact_scaled(
    k: LoadFactor,
    gamma_thr: f64,
    mean_gain: f64,
    kind: HorizonKind,
) -> f64 {
    outage_exact(k.scaled(mean_gain), gamma_thr / mean_gain, kind)
}

/// `R (1 - P_out)`.
pub fn effrate_fading(rate: f64, k: LoadFactor, gamma_thr: f64, kind: HorizonKind) -> f64 {
    rate * (1.0 - outage_exact(k, gamma_thr, kind))
}

fn threshold_grid() -> Vec<f64> {
    optimize::logspace(GAMMA_MIN, GAMMA_MAX, THRESHOLD_GRID_POINTS)
}

/// Threshold minimizing outage at load `k`. Returns `(γ*, P_out(γ*))`.
pub fn optimal_threshold_for_load(k: LoadFactor, kind: HorizonKind) -> (f64, f64) {
    optimal_threshold_on_grid(k, kind, &threshold_grid())
}

fn optimal_threshold_on_grid(k: LoadFactor, kind: HorizonKind, grid: &[f64]) -> (f64, f64) {
    optimize::grid_then_golden_min(|g| outage_exact(k, g, kind), grid, THRESHOLD_RTOL)
}

pub fn optimal_threshold(
    model: &PowerModel,
    mean_power: f64,
    rate: f64,
    kind: HorizonKind,
) -> Result<ThresholdPolicy> {
    if !(rate > 0.0) {
        return Err(Error::Domain(format!("rate must be > 0, got {rate}")));
    }
    let k = LoadFactor::for_rate(model, mean_power, rate)?;
    let (gamma_thr, _) = optimal_threshold_for_load(k, kind);
    Ok(ThresholdPolicy {
        gamma_thr,
        source: ThresholdSource::Optimized(kind),
    })
}

/// Peak of the optimized-threshold effective rate over `[R0/4, 4 R0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingPeak {
    pub rate: f64,
    pub effrate: f64,
    pub gamma_thr: f64,
}

pub fn max_effrate_fading(
    model: &PowerModel,
    mean_power: f64,
    kind: HorizonKind,
) -> Result<FadingPeak> {
    let r0 = model.solve_r0(mean_power)?;
    let gammas = threshold_grid();
    let rates = optimize::linspace(0.25 * r0, 4.0 * r0, analytics::EFFRATE_GRID_POINTS);
    let best = |r: f64| {
        let k = LoadFactor::from_power(mean_power, model.g(r));
        let (gamma, p_out) = optimal_threshold_on_grid(k, kind, &gammas);
        (gamma, r * (1.0 - p_out))
    };
    let (rate, effrate) =
        optimize::grid_then_golden_max(|r| best(r).1, &rates, analytics::EFFRATE_RTOL);
    Ok(FadingPeak {
        rate,
        effrate,
        gamma_thr: best(rate).0,
    })
}

/// Optimal thresholds for a rate grid, computed once before any
/// transmission and read-only afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    pub kind: HorizonKind,
    pub rates: Vec<f64>,
    pub gamma_thr: Vec<f64>,
    pub p_out: Vec<f64>,
}

impl ThresholdTable {
    pub fn build(
        model: &PowerModel,
        mean_power: f64,
        rates: &[f64],
        kind: HorizonKind,
    ) -> Result<Self> {
        let grid = threshold_grid();
        let mut gamma_thr = Vec::with_capacity(rates.len());
        let mut p_out = Vec::with_capacity(rates.len());
        for &r in rates {
            if !(r > 0.0) {
                return Err(Error::Domain(format!("rate must be > 0, got {r}")));
            }
            let k = LoadFactor::for_rate(model, mean_power, r)?;
            let (g, p) = optimal_threshold_on_grid(k, kind, &grid);
            gamma_thr.push(g);
            p_out.push(p);
        }
        Ok(Self {
            kind,
            rates: rates.to_vec(),
            gamma_thr,
            p_out,
        })
    }

    pub fn policy(&self, index: usize) -> Option<ThresholdPolicy> {
        self.gamma_thr.get(index).map(|&g| ThresholdPolicy {
            gamma_thr: g,
            source: ThresholdSource::Optimized(self.kind),
        })
    }

    /// CSV with header `rate_bps,gamma_thr,p_out`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rate_bps,gamma_thr,p_out\n");
        for i in 0..self.rates.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_g9(self.rates[i]),
                fmt_g9(self.gamma_thr[i]),
                fmt_g9(self.p_out[i])
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::esp;
    use crate::stream::stream_from_seed;

    fn k(v: f64) -> LoadFactor {
        LoadFactor::new(v)
    }

    #[test]
    fn trace_blocks() {
        let t = FadingTrace::sample(10, 10, 1.0, &mut stream_from_seed(3)).unwrap();
        assert!(t.gains().iter().all(|&g| g == t.gains()[0]));
        assert_eq!(t.blocks(), 1);

        let t = FadingTrace::sample(10, 4, 1.0, &mut stream_from_seed(3)).unwrap();
        assert_eq!(t.blocks(), 3);
        assert_eq!(t.gains()[0], t.gains()[3]);
        assert_ne!(t.gains()[3], t.gains()[4]);
        assert_eq!(t.gains()[8], t.gains()[9]);

        let t = FadingTrace::sample(50, 1, 1.0, &mut stream_from_seed(3)).unwrap();
        for w in t.gains().windows(2) {
            assert_ne!(w[0], w[1]);
        }
    }

    #[test]
    fn trace_mean() {
        let n = 1_000_000;
        let t = FadingTrace::sample(n, 1, 1.0, &mut stream_from_seed(11)).unwrap();
        let mean = t.gains().iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn trace_validation() {
        assert!(FadingTrace::from_gains(vec![1.0, 0.0], 1, 1.0).is_err());
        assert!(FadingTrace::from_gains(vec![1.0, 2.0], 2, 1.0).is_err());
        assert!(FadingTrace::from_gains(vec![1.0, 1.0, 2.0], 2, 1.0).is_ok());
        assert!(FadingTrace::sample(5, 0, 1.0, &mut stream_from_seed(0)).is_err());
    }

    #[test]
    fn p_ch_values() {
        assert_eq!(p_ch(0.0, 1.0), 0.0);
        assert!((p_ch(1.0, 1.0) - 0.632_120_558_828_558).abs() < 1e-15);
        assert!((p_ch(0.5, 1.0) - 0.393_469_340_287_367).abs() < 1e-15);
        assert!((p_ch(2.0, 2.0) - p_ch(1.0, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn outage_examples() {
        let v = outage_exact(k(1.0), 1.0, HorizonKind::M1);
        assert!((v - 0.767_455_842_065_170).abs() < 1e-12, "{v}");
        for kv in [1.0, 2.0, 7.5] {
            let v = outage_exact(k(kv), 1.0, HorizonKind::Asymptotic);
            assert!((v - p_ch(1.0, 1.0)).abs() < 1e-15);
        }
        let v = outage_exact(k(0.5), 1.0, HorizonKind::Asymptotic);
        assert!((v - 0.816_060_279_414_279).abs() < 1e-12);
    }

    #[test]
    fn factorization_identity() {
        for kind in HorizonKind::ALL {
            for &kv in &optimize::logspace(0.05, 20.0, 25) {
                for &g in &optimize::logspace(0.01, 10.0, 25) {
                    let lhs = outage_exact(k(kv), g, kind);
                    let rhs = 1.0 - (1.0 - esp(kind, k(kv * g))) * (1.0 - p_ch(g, 1.0));
                    assert!((lhs - rhs).abs() < 1e-12, "{kind} K={kv} γ={g}");
                }
            }
        }
    }

    #[test]
    fn scaled_mean_gain() {
        let v = outage_exact_scaled(k(0.8), 2.0, 2.0, HorizonKind::M1);
        let direct = 1.0 - (1.0 - esp(HorizonKind::M1, k(0.8 * 2.0))) * (-(2.0f64 / 2.0)).exp();
        assert!((v - direct).abs() < 1e-14);
    }

    #[test]
    fn asymptotic_threshold_branches() {
        for &kv in &[0.1, 0.5, 0.99, 1.0, 1.5, 2.0, 10.0, 300.0] {
            let (g, p) = optimal_threshold_for_load(k(kv), HorizonKind::Asymptotic);
            let want = (1.0 / kv).min(1.0);
            assert!((g - want).abs() < 1e-4, "K={kv}: {g} vs {want}");
            let pw = outage_exact(k(kv), want, HorizonKind::Asymptotic);
            assert!(p <= pw + THRESHOLD_RTOL, "K={kv}: {p} vs {pw}");
        }
        let (g, p) = optimal_threshold_for_load(k(2.0), HorizonKind::Asymptotic);
        assert!((g - 0.5).abs() < 1e-4);
        assert!((p - 0.393_469_340_287_367).abs() < 1e-6);
    }

    #[test]
    fn optimal_threshold_beats_brute_force() {
        let fine = optimize::logspace(1e-3, 10.0, 20_000);
        for kind in HorizonKind::ALL {
            for kv in [0.3, 1.0, 4.0] {
                let (_, p) = optimal_threshold_for_load(k(kv), kind);
                let brute = fine
                    .iter()
                    .map(|&g| outage_exact(k(kv), g, kind))
                    .fold(f64::INFINITY, f64::min);
                assert!(p <= brute + 1e-12, "{kind} K={kv}");
            }
        }
    }

    #[test]
    fn optimal_threshold_api() {
        let pass = PowerModel::default_passband();
        let p = 15e-3;
        let r0 = pass.solve_r0(p).unwrap();
        let pol = optimal_threshold(&pass, p, r0 * 1.1, HorizonKind::Asymptotic).unwrap();
        assert!((pol.gamma_thr - 1.0).abs() < 1e-4);
        assert_eq!(
            pol.source,
            ThresholdSource::Optimized(HorizonKind::Asymptotic)
        );
        assert!(optimal_threshold(&pass, p, 0.0, HorizonKind::M1).is_err());
    }

    #[test]
    fn effrate_fading_limits() {
        let v = effrate_fading(10.0, k(2.0), 1e-9, HorizonKind::Asymptotic);
        assert!(v.abs() < 1e-7);
        let v = effrate_fading(10.0, k(2.0), 0.5, HorizonKind::Asymptotic);
        assert!((v - 10.0 * (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn table_csv() {
        let pass = PowerModel::default_passband();
        let t =
            ThresholdTable::build(&pass, 15e-3, &[10e6, 20e6], HorizonKind::Asymptotic).unwrap();
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("rate_bps,gamma_thr,p_out"));
        assert!(lines.next().unwrap().starts_with("10000000,"));
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(row[0], 20e6);
        assert!((row[1] - 1.0).abs() < 1e-6, "{row:?}");
        assert_eq!(t.policy(1).unwrap().gamma_thr, t.gamma_thr[1]);
        assert!(t.policy(2).is_none());
    }
}

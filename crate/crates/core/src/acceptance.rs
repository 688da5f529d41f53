//! Acceptance checks for the toolkit.
//!
//! Each check runs with its tolerances pinned here and yields one
//! [`CriterionResult`]. The `validate` subcommand and the `acceptance`
//! test target both run these.

use std::fmt;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::analytics::{self, HorizonKind, LoadFactor};
use crate::config::RunConfig;
use crate::eh_profile::{EhDistribution, EhProfile};
use crate::fading;
use crate::montecarlo::{Channel, Engine, ExperimentSpec};
use crate::offline;
use crate::online;
use crate::optimize;
use crate::power_model::PowerModel;
use crate::report;
use crate::stream;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] criterion {:>2} {:<36} ({:.2} s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

/// Closed forms the checks compare against; swappable so a corrupted
/// formula can be shown to fail the suite.
#[derive(Clone, Copy)]
pub struct Formulas {
    pub esp_m1: fn(LoadFactor) -> f64,
    pub esp_m2: fn(LoadFactor) -> f64,
    pub esp_asymptotic: fn(LoadFactor) -> f64,
}

impl Default for Formulas {
    fn default() -> Self {
        Self {
            esp_m1: analytics::esp_m1,
            esp_m2: analytics::esp_m2,
            esp_asymptotic: analytics::esp_asymptotic,
        }
    }
}

impl Formulas {
    fn esp(&self, kind: HorizonKind, k: LoadFactor) -> f64 {
        match kind {
            HorizonKind::M1 => (self.esp_m1)(k),
            HorizonKind::M2 => (self.esp_m2)(k),
            HorizonKind::Asymptotic => (self.esp_asymptotic)(k),
        }
    }
}

#[derive(Clone, Copy)]
pub struct AcceptanceOptions {
    pub seed: u64,
    pub workers: Option<usize>,
    pub formulas: Formulas,
}

impl Default for AcceptanceOptions {
    fn default() -> Self {
        Self {
            seed: 20_140_901,
            workers: None,
            formulas: Formulas::default(),
        }
    }
}

impl AcceptanceOptions {
    fn engine(&self) -> Engine {
        Engine::new(self.workers)
    }
}

/// Reference setup: exponential harvesting with mean 15 mJ, Δt = 1 s and
/// the 1 MHz / 70 dB passband link.
pub const MEAN_ENERGY: f64 = 15e-3;
pub const DELTA_T: f64 = 1.0;

fn timed(
    id: &'static str,
    name: &'static str,
    f: impl FnOnce() -> (bool, String),
) -> CriterionResult {
    let t0 = Instant::now();
    let (passed, detail) = f();
    CriterionResult {
        id,
        name,
        passed,
        detail,
        elapsed: t0.elapsed(),
    }
}

fn passband_spec(
    opts: &AcceptanceOptions,
    dist: EhDistribution,
    m: usize,
    rates: Vec<f64>,
    trials: usize,
) -> ExperimentSpec {
    ExperimentSpec {
        channel: Channel::Awgn,
        dist,
        model: PowerModel::default_passband(),
        delta_t: DELTA_T,
        m,
        rate_grid: rates,
        trials,
        master_seed: opts.seed,
    }
}

/// 1. Single-epoch effective-rate peak with `R0 = 12 Mbps`.
pub fn single_epoch_peak(opts: &AcceptanceOptions) -> CriterionResult {
    let _ = opts;
    timed("1", "M=1 effective-rate peak (R0=12)", || {
        let model = PowerModel::default_passband();
        let mean_power = model.g(12e6);
        let t0 = Instant::now();
        let (r, e) = match analytics::max_effrate(&model, mean_power, HorizonKind::M1) {
            Ok(v) => v,
            Err(err) => return (false, err.to_string()),
        };
        let secs = t0.elapsed().as_secs_f64();
        let (r, e) = (r / 1e6, e / 1e6);
        let ratio = e / 12.0;
        let ok_r = (r - 10.21).abs() <= 0.02;
        let ok_e = (e - 8.869).abs() <= 0.005;
        let ok_ratio = (ratio - 0.739).abs() <= 0.001;
        let ok_t = secs < 1.0;
        (
            ok_r && ok_e && ok_ratio && ok_t,
            format!(
                "rate*={r:.4} Mbps (10.21±0.02 {}), effrate*={e:.4} Mbps (8.869±0.005 {}), ratio={ratio:.4} (0.739±0.001 {}), {secs:.3} s (<1 s {})",
                ok(ok_r), ok(ok_e), ok(ok_ratio), ok(ok_t)
            ),
        )
    })
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "MISS"
    }
}

/// 2. Large-horizon Monte Carlo approaches the asymptotic ESP.
pub fn asymptotic_convergence(opts: &AcceptanceOptions) -> CriterionResult {
    timed("2", "M=1000 ESP vs asymptotic", || {
        let rates = vec![16e6, 18e6, 20e6, 22e6];
        let spec = passband_spec(
            opts,
            EhDistribution::exponential(MEAN_ENERGY),
            1000,
            rates,
            10_000,
        );
        check_asymptotic(opts, &spec, 0.02, 60.0)
    })
}

fn check_asymptotic(
    opts: &AcceptanceOptions,
    spec: &ExperimentSpec,
    tol: f64,
    budget_s: f64,
) -> (bool, String) {
    let t0 = Instant::now();
    let series = match opts.engine().run(spec) {
        Ok(s) => s,
        Err(e) => return (false, e.to_string()),
    };
    let secs = t0.elapsed().as_secs_f64();
    let mean_power = spec.mean_power();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for p in &series.points {
        let k = LoadFactor::from_power(mean_power, spec.model.g(p.rate));
        let gap = (p.mc_mean - (opts.formulas.esp_asymptotic)(k)).abs();
        worst = worst.max(gap);
        parts.push(format!("{}:{gap:.4}", p.rate / 1e6));
    }
    (
        worst < tol && secs < budget_s,
        format!(
            "max |mc-asym|={worst:.4} (<{tol}) [{}], {secs:.1} s (<{budget_s} s)",
            parts.join(" ")
        ),
    )
}

/// Rates on the passband link giving load factors geometric in `[lo, hi]`,
/// sorted ascending.
pub fn rates_for_loads(
    model: &PowerModel,
    mean_power: f64,
    lo: f64,
    hi: f64,
    n: usize,
) -> Vec<f64> {
    let mut rates: Vec<f64> = optimize::logspace(lo, hi, n)
        .into_iter()
        .map(|k| {
            model
                .solve_r0(mean_power / k)
                .expect("positive target power")
        })
        .collect();
    rates.sort_by(|a, b| a.partial_cmp(b).expect("finite rates"));
    rates
}

/// 3. One- and two-epoch closed forms against Monte Carlo.
pub fn closed_form_vs_mc(opts: &AcceptanceOptions) -> CriterionResult {
    timed("3", "M=1,2 closed forms vs Monte Carlo", || {
        let t0 = Instant::now();
        let model = PowerModel::default_passband();
        let mean_power = MEAN_ENERGY / DELTA_T;
        let rates = rates_for_loads(&model, mean_power, 0.2, 5.0, 15);
        let mut fails = Vec::new();
        let mut worst_z: f64 = 0.0;
        for (m, kind) in [(1, HorizonKind::M1), (2, HorizonKind::M2)] {
            let spec = passband_spec(
                opts,
                EhDistribution::exponential(MEAN_ENERGY),
                m,
                rates.clone(),
                100_000,
            );
            let series = match opts.engine().run(&spec) {
                Ok(s) => s,
                Err(e) => return (false, e.to_string()),
            };
            for p in &series.points {
                let k = LoadFactor::from_power(mean_power, model.g(p.rate));
                let closed = opts.formulas.esp(kind, k);
                let z = (p.mc_mean - closed).abs() / p.mc_stderr;
                worst_z = worst_z.max(z);
                if !(z < 3.0) {
                    fails.push(format!("M={m} K={:.3}: z={z:.2}", k.value()));
                }
            }
        }
        let secs = t0.elapsed().as_secs_f64();
        (
            fails.is_empty() && secs < 30.0,
            format!(
                "30 points, worst |mc-closed|/stderr={worst_z:.2} (<3), {secs:.1} s (<30 s){}",
                if fails.is_empty() {
                    String::new()
                } else {
                    format!("; failing: {}", fails.join(", "))
                }
            ),
        )
    })
}

/// 4. Pause-and-transmit and store-and-transmit give the same shortage.
pub fn online_offline_equivalence(opts: &AcceptanceOptions) -> CriterionResult {
    timed("4", "online/offline equivalence", || {
        let mut rng = stream::stream_from_seed(stream::mix(opts.seed, 4, 0));
        let model = PowerModel::ShannonBaseband;
        let cases = 10_000;
        let mut mismatches = 0usize;
        let mut worst: f64 = 0.0;
        for case in 0..cases {
            let m = rng.random_range(1..=50usize);
            let mean = rng.random_range(0.05..3.0);
            let mut energies: Vec<f64> = (0..m)
                .map(|_| -mean * (1.0 - rng.random::<f64>()).ln())
                .collect();
            if case % 10 == 0 {
                // sprinkle empty epochs
                for e in energies.iter_mut().step_by(3) {
                    *e = 0.0;
                }
            }
            let delta_t = rng.random_range(0.1..5.0);
            let rate = rng.random_range(0.01..2.0);
            let profile = EhProfile::new(delta_t, energies).expect("valid profile");
            let off = offline::shortage_start(&profile, &model, rate)
                .expect("valid rate")
                .start;
            let on = online::simulate_awgn(&profile, &model, rate)
                .expect("valid rate")
                .shortage_time;
            let scale = off.abs().max(on.abs()).max(delta_t);
            let rel = (off - on).abs() / scale;
            worst = worst.max(rel);
            if rel > 1e-9 {
                mismatches += 1;
            }
        }
        (
            mismatches == 0,
            format!(
                "{cases} cases, {mismatches} mismatches, worst relative gap {worst:.2e} (<=1e-9)"
            ),
        )
    })
}

/// 5. Ordering of finite-horizon estimates across horizons.
pub fn bound_ordering(opts: &AcceptanceOptions) -> CriterionResult {
    timed("5", "bound ordering over M=1..16", || {
        let rates: Vec<f64> = (0..8).map(|i| (8.0 + 2.0 * i as f64) * 1e6).collect();
        let spec = passband_spec(
            opts,
            EhDistribution::exponential(MEAN_ENERGY),
            1,
            rates,
            20_000,
        );
        let study = match opts.engine().convergence_study(&spec, &[1, 2, 4, 8, 16]) {
            Ok(s) => s,
            Err(e) => return (false, e.to_string()),
        };
        let mut failures = Vec::new();
        let mut total = 0;
        let mut mixtures = 0;
        for (i, rep) in study.ordering.iter().enumerate() {
            total += rep.checks.len();
            mixtures += rep.checks.iter().filter(|c| c.name.contains("mix")).count();
            for c in rep.failures() {
                failures.push(format!("{} Mbps {}", spec.rate_grid[i] / 1e6, c.name));
            }
        }
        let want_mix = 3 * spec.rate_grid.len();
        (
            failures.is_empty() && mixtures >= want_mix,
            format!(
                "{total} inequalities ({mixtures} mixture) within 4σ, {} violated{}",
                failures.len(),
                if failures.is_empty() {
                    String::new()
                } else {
                    format!(": {}", failures.join(", "))
                }
            ),
        )
    })
}

/// Effective-rate peaks with optimized thresholds: `(kind, effrate, rate)` in Mbps.
pub const FADING_PEAKS: [(HorizonKind, f64, f64); 3] = [
    (HorizonKind::M1, 7.0, 9.5),
    (HorizonKind::M2, 7.4, 9.7),
    (HorizonKind::Asymptotic, 9.6, 10.9),
];

/// 6. Optimized-threshold fading effective-rate peaks.
pub fn fading_peaks(opts: &AcceptanceOptions) -> CriterionResult {
    let _ = opts;
    timed("6", "fading effective-rate peaks", || {
        let model = PowerModel::default_passband();
        let mean_power = MEAN_ENERGY / DELTA_T;
        let mut all = true;
        let mut parts = Vec::new();
        for (kind, want_eff, want_rate) in FADING_PEAKS {
            let peak = match fading::max_effrate_fading(&model, mean_power, kind) {
                Ok(p) => p,
                Err(e) => return (false, e.to_string()),
            };
            let (r, e) = (peak.rate / 1e6, peak.effrate / 1e6);
            let good = (e - want_eff).abs() <= 0.15 && (r - want_rate).abs() <= 0.2;
            all &= good;
            parts.push(format!(
                "{kind}: {e:.3}@{r:.3} (want {want_eff}±0.15@{want_rate}±0.2 {})",
                ok(good)
            ));
        }
        (all, parts.join(", "))
    })
}

/// 7. Threshold structure over a 50-point rate grid.
pub fn threshold_structure(opts: &AcceptanceOptions) -> CriterionResult {
    let _ = opts;
    timed("7", "optimal threshold structure", || {
        let model = PowerModel::default_passband();
        let mean_power = MEAN_ENERGY / DELTA_T;
        let r0 = model.solve_r0(mean_power).expect("sustainable power");
        let rates = optimize::linspace(5e6, 25e6, 50);
        let mut asym_worst: f64 = 0.0;
        let mut high_worst = [0.0f64; 3];
        for &r in &rates {
            let k = LoadFactor::from_power(mean_power, model.g(r));
            let (ga, _) = fading::optimal_threshold_for_load(k, HorizonKind::Asymptotic);
            asym_worst = asym_worst.max((ga - (model.g(r) / mean_power).min(1.0)).abs());
            if r >= r0 {
                for (j, kind) in HorizonKind::ALL.iter().enumerate() {
                    let (g, _) = fading::optimal_threshold_for_load(k, *kind);
                    high_worst[j] = high_worst[j].max((g - 1.0).abs());
                }
            }
        }
        let ok_asym = asym_worst <= 1e-4;
        let ok_high: Vec<bool> = high_worst.iter().map(|w| *w <= 1e-3).collect();
        (
            ok_asym && ok_high.iter().all(|b| *b),
            format!(
                "asym vs min(1,g/P): {asym_worst:.1e} (<=1e-4 {}); R>=R0 |γ*-1|: m1 {:.3} ({}), m2 {:.3} ({}), asym {:.1e} ({}) (<=1e-3)",
                ok(ok_asym),
                high_worst[0],
                ok(ok_high[0]),
                high_worst[1],
                ok(ok_high[1]),
                high_worst[2],
                ok(ok_high[2]),
            ),
        )
    })
}

/// 8. Outage closed forms factor into energy and channel terms.
pub fn factorization(opts: &AcceptanceOptions) -> CriterionResult {
    timed("8", "outage factorization identity", || {
        let ks = optimize::logspace(0.05, 20.0, 20);
        let gs = optimize::logspace(0.01, 10.0, 20);
        let mut worst: f64 = 0.0;
        for kind in HorizonKind::ALL {
            for &k in &ks {
                for &g in &gs {
                    let lhs = fading::outage_exact(LoadFactor::new(k), g, kind);
                    let esp = opts.formulas.esp(kind, LoadFactor::new(k * g));
                    let rhs = 1.0 - (1.0 - esp) * (1.0 - fading::p_ch(g, 1.0));
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        (
            worst <= 1e-12,
            format!("1200 points, max deviation {worst:.1e} (<=1e-12)"),
        )
    })
}

/// 9. Asymptotic ESP with Poisson harvesting and the affine power law.
pub fn affine_poisson_convergence(opts: &AcceptanceOptions) -> CriterionResult {
    timed("9", "affine/Poisson M=1000 vs asymptotic", || {
        let spec = ExperimentSpec {
            channel: Channel::Awgn,
            dist: EhDistribution::poisson(MEAN_ENERGY),
            model: PowerModel::default_affine(),
            delta_t: DELTA_T,
            m: 1000,
            rate_grid: vec![10e6, 12e6, 14e6, 16e6],
            trials: 10_000,
            master_seed: opts.seed,
        };
        check_asymptotic(opts, &spec, 0.02, f64::INFINITY)
    })
}

/// 10. `esp-curve` output is byte-identical across runs and worker counts.
pub fn determinism(opts: &AcceptanceOptions) -> CriterionResult {
    timed("10", "byte-identical esp-curve CSV", || {
        let mut cfg = RunConfig::default();
        cfg.seed = opts.seed;
        cfg.trials = 2000;
        let n = std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
            .max(2);
        let a = report::esp_curve(&cfg, &Engine::new(Some(1)));
        let b = report::esp_curve(&cfg, &Engine::new(Some(n)));
        let c = report::esp_curve(&cfg, &Engine::new(Some(n)));
        match (a, b, c) {
            (Ok(a), Ok(b), Ok(c)) => (
                a == b && b == c,
                format!(
                    "workers 1 vs {n} vs {n}: {} bytes, identical={}",
                    a.len(),
                    a == b && b == c
                ),
            ),
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => (false, e.to_string()),
        }
    })
}

/// Optimized thresholds never do worse than the unit threshold below `R0`
/// and coincide with it from `R0` on.
pub fn fading_dominance(opts: &AcceptanceOptions) -> CriterionResult {
    let _ = opts;
    timed("F", "optimized vs unit threshold", || {
        let model = PowerModel::default_passband();
        let mean_power = MEAN_ENERGY / DELTA_T;
        let r0 = model.solve_r0(mean_power).expect("sustainable power");
        let mut bad = Vec::new();
        let mut gain_below: f64 = 0.0;
        for r in optimize::linspace(6e6, 24e6, 37) {
            let k = LoadFactor::from_power(mean_power, model.g(r));
            let (_, opt) = fading::optimal_threshold_for_load(k, HorizonKind::Asymptotic);
            let fixed = fading::outage_exact(k, 1.0, HorizonKind::Asymptotic);
            if r < r0 {
                gain_below = gain_below.max(fixed - opt);
                if opt > fixed + 1e-12 {
                    bad.push(format!("{:.1} Mbps above unit", r / 1e6));
                }
            } else if (opt - fixed).abs() > 1e-9 {
                bad.push(format!(
                    "{:.1} Mbps differs by {:.1e}",
                    r / 1e6,
                    (opt - fixed).abs()
                ));
            }
        }
        (
            bad.is_empty() && gain_below > 0.0,
            format!(
                "largest gain below R0 {gain_below:.3}; {} violations{}",
                bad.len(),
                if bad.is_empty() {
                    String::new()
                } else {
                    format!(": {}", bad.join(", "))
                }
            ),
        )
    })
}

pub fn run_all(opts: &AcceptanceOptions) -> Vec<CriterionResult> {
    vec![
        single_epoch_peak(opts),
        asymptotic_convergence(opts),
        closed_form_vs_mc(opts),
        online_offline_equivalence(opts),
        bound_ordering(opts),
        fading_peaks(opts),
        threshold_structure(opts),
        factorization(opts),
        affine_poisson_convergence(opts),
        determinism(opts),
        fading_dominance(opts),
    ]
}

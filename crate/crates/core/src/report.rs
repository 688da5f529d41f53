//! CSV and text reports behind the CLI subcommands.
//!
//! Rows use [`fmt_g9`] and `\n` line endings; the first row is the header.
//! Rates are written in CLI units (Mbps, or normalized for baseband).

use std::fmt::{self, Write as _};

use crate::analytics::{self, HorizonKind, LoadFactor};
use crate::config::RunConfig;
use crate::csvfmt::{fmt_g9, fmt_opt};
use crate::eh_profile::EhProfile;
use crate::error::{Error, Result};
use crate::fading::{self, ThresholdTable};
use crate::montecarlo::{Channel, Engine, ExperimentSpec, ThresholdSpec};
use crate::offline;
use crate::online;

fn row(cells: &[String]) -> String {
    let mut s = cells.join(",");
    s.push('\n');
    s
}

/// Energy-shortage probability versus rate.
pub fn esp_curve(cfg: &RunConfig, engine: &Engine) -> Result<String> {
    let spec = cfg.awgn_spec()?;
    let series = engine.run(&spec)?;
    let mean_power = spec.mean_power();
    let closed = spec.dist.is_exponential() && matches!(spec.m, 1 | 2);
    let mut out = String::from(
        "rate_mbps,esp_mc,esp_stderr,esp_ci_lo,esp_ci_hi,esp_m1,esp_m2,esp_asymptotic\n",
    );
    for p in &series.points {
        let k = LoadFactor::from_power(mean_power, spec.model.g(p.rate));
        let (m1, m2) = if closed {
            (Some(analytics::esp_m1(k)), Some(analytics::esp_m2(k)))
        } else {
            (None, None)
        };
        out.push_str(&row(&[
            fmt_g9(cfg.to_cli_rate(p.rate)),
            fmt_g9(p.mc_mean),
            fmt_g9(p.mc_stderr),
            fmt_g9(p.ci_lo),
            fmt_g9(p.ci_hi),
            fmt_opt(m1),
            fmt_opt(m2),
            fmt_g9(p.asymptotic),
        ]));
    }
    Ok(out)
}

/// Peak of one effective-rate curve, in CLI rate units.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgmaxRow {
    pub label: String,
    pub rate: f64,
    pub effrate: f64,
}

impl fmt::Display for ArgmaxRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "argmax {}: rate {} effrate {}",
            self.label,
            fmt_g9(self.rate),
            fmt_g9(self.effrate)
        )
    }
}

pub struct EffrateCurve {
    pub csv: String,
    pub argmax: Vec<ArgmaxRow>,
}

/// Effective rate versus rate, plus the closed-form peak per horizon.
pub fn effrate_curve(cfg: &RunConfig, engine: &Engine) -> Result<EffrateCurve> {
    let spec = cfg.awgn_spec()?;
    let series = engine.run(&spec)?;
    let mean_power = spec.mean_power();
    let mut csv =
        String::from("rate_mbps,effrate_mc_mbps,effrate_closed_mbps,effrate_asymptotic_mbps\n");
    let mut mc_best = (f64::NAN, f64::NEG_INFINITY);
    for p in &series.points {
        let r = cfg.to_cli_rate(p.rate);
        let eff_mc = r * (1.0 - p.mc_mean);
        if eff_mc > mc_best.1 {
            mc_best = (r, eff_mc);
        }
        csv.push_str(&row(&[
            fmt_g9(r),
            fmt_g9(eff_mc),
            fmt_opt(p.closed_form.map(|c| r * (1.0 - c))),
            fmt_g9(r * (1.0 - p.asymptotic)),
        ]));
    }
    let mut argmax = vec![ArgmaxRow {
        label: format!("mc(m={})", spec.m),
        rate: mc_best.0,
        effrate: mc_best.1,
    }];
    for kind in HorizonKind::ALL {
        let (r, e) = analytics::max_effrate(&spec.model, mean_power, kind)?;
        argmax.push(ArgmaxRow {
            label: kind.to_string(),
            rate: cfg.to_cli_rate(r),
            effrate: cfg.to_cli_rate(e),
        });
    }
    Ok(EffrateCurve { csv, argmax })
}

/// Outage probability under Rayleigh fading: simulation per coherence
/// length with a unit threshold, simulation with the optimized asymptotic
/// threshold, and the closed forms.
pub fn fading_outage(cfg: &RunConfig, engine: &Engine) -> Result<String> {
    let base = cfg.awgn_spec()?;
    if cfg.coherence_lens.is_empty() {
        return Err(Error::Config("coherence_lens must not be empty".into()));
    }
    let mean_power = base.mean_power();
    let fading_spec = |coherence_len: usize, threshold: ThresholdSpec| ExperimentSpec {
        channel: Channel::Fading {
            coherence_len,
            threshold,
            mode: cfg.fading_mode,
            mean_gain: cfg.mean_gain,
        },
        ..base.clone()
    };
    let mut sims = Vec::new();
    for &mc in &cfg.coherence_lens {
        sims.push((
            format!("sim_mc{mc}"),
            engine.run(&fading_spec(mc, ThresholdSpec::Fixed(1.0)))?,
        ));
    }
    let longest = *cfg.coherence_lens.iter().max().expect("nonempty");
    sims.push((
        format!("sim_opt_mc{longest}"),
        engine.run(&fading_spec(
            longest,
            ThresholdSpec::Optimized(HorizonKind::Asymptotic),
        ))?,
    ));

    let mut header = vec!["rate_mbps".to_string()];
    header.extend(sims.iter().map(|(name, _)| name.clone()));
    header.extend(
        [
            "out_m1_thr1",
            "out_m2_thr1",
            "out_asym_thr1",
            "out_asym_opt",
            "gamma_opt_asym",
            "esp_awgn_asym",
        ]
        .map(String::from),
    );
    let mut out = row(&header);
    let g0 = cfg.mean_gain;
    for (i, &rate) in base.rate_grid.iter().enumerate() {
        let k = LoadFactor::from_power(mean_power, base.model.g(rate));
        let gopt = sims.last().expect("optimized sim").1.points[i]
            .gamma_thr
            .expect("fading threshold");
        let mut cells = vec![fmt_g9(cfg.to_cli_rate(rate))];
        cells.extend(sims.iter().map(|(_, s)| fmt_g9(s.points[i].mc_mean)));
        cells.push(fmt_g9(fading::outage_exact_scaled(
            k,
            1.0,
            g0,
            HorizonKind::M1,
        )));
        cells.push(fmt_g9(fading::outage_exact_scaled(
            k,
            1.0,
            g0,
            HorizonKind::M2,
        )));
        cells.push(fmt_g9(fading::outage_exact_scaled(
            k,
            1.0,
            g0,
            HorizonKind::Asymptotic,
        )));
        cells.push(fmt_g9(fading::outage_exact_scaled(
            k,
            gopt,
            g0,
            HorizonKind::Asymptotic,
        )));
        cells.push(fmt_g9(gopt));
        cells.push(fmt_g9(analytics::esp_asymptotic(k)));
        out.push_str(&row(&cells));
    }
    Ok(out)
}

/// Optimal thresholds per rate for all horizons, or the single-horizon
/// `rate_bps,gamma_thr,p_out` table when `horizon` is set.
pub fn threshold_table(cfg: &RunConfig) -> Result<String> {
    let model = cfg.power_model();
    model.validate()?;
    let rates = cfg.rate_grid();
    let mean_power = cfg.mean_power();
    if let Some(kind) = cfg.horizon {
        return Ok(ThresholdTable::build(&model, mean_power, &rates, kind)?.to_csv());
    }
    let tables = HorizonKind::ALL
        .iter()
        .map(|&kind| ThresholdTable::build(&model, mean_power, &rates, kind))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from("rate_mbps,gamma_thr_m1,gamma_thr_m2,gamma_thr_asym\n");
    for (i, &r) in rates.iter().enumerate() {
        out.push_str(&row(&[
            fmt_g9(cfg.to_cli_rate(r)),
            fmt_g9(tables[0].gamma_thr[i]),
            fmt_g9(tables[1].gamma_thr[i]),
            fmt_g9(tables[2].gamma_thr[i]),
        ]));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    pub rate: f64,
    pub power: f64,
    pub delta_t: f64,
    pub horizon: f64,
    pub start_time: f64,
    pub es_ratio: f64,
    pub online_shortage: f64,
    /// `(epoch, pause start, pause end)` for epochs with a pause.
    pub pauses: Vec<(usize, f64, f64)>,
    pub feasible: bool,
    pub agree: bool,
}

/// Offline start time, online pause intervals and the causality check for
/// one realization.
pub fn schedule(cfg: &RunConfig, profile: &EhProfile, cli_rate: f64) -> Result<ScheduleReport> {
    let model = cfg.power_model();
    model.validate()?;
    let rate = cfg.to_model_rate(cli_rate);
    if !(rate > 0.0) {
        return Err(Error::Config(format!("rate must be > 0, got {cli_rate}")));
    }
    let sched = offline::build_schedule(profile, &model, rate)?;
    let feas = offline::check_feasible(&sched, profile, &model)?;
    let online = online::simulate_awgn(profile, &model, rate)?;
    let dt = profile.delta_t();
    let pauses = online
        .per_epoch_shortage
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0.0)
        .map(|(i, &s)| {
            let end = (i + 1) as f64 * dt;
            (i, end - s, end)
        })
        .collect();
    let scale = sched
        .start_time
        .abs()
        .max(online.shortage_time.abs())
        .max(dt);
    Ok(ScheduleReport {
        rate: cli_rate,
        power: sched.power,
        delta_t: dt,
        horizon: sched.horizon,
        start_time: sched.start_time,
        es_ratio: sched.es_ratio(),
        online_shortage: online.shortage_time,
        pauses,
        feasible: feas.feasible,
        agree: (sched.start_time - online.shortage_time).abs() <= 1e-9 * scale,
    })
}

impl fmt::Display for ScheduleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let yes = |b: bool| if b { "yes" } else { "no" };
        let mut s = String::new();
        writeln!(s, "rate: {}", fmt_g9(self.rate))?;
        writeln!(s, "power g(R): {} W", fmt_g9(self.power))?;
        writeln!(
            s,
            "epochs: {}  delta_t: {} s  horizon: {} s",
            (self.horizon / self.delta_t).round(),
            fmt_g9(self.delta_t),
            fmt_g9(self.horizon)
        )?;
        writeln!(s, "offline start T_S: {} s", fmt_g9(self.start_time))?;
        writeln!(s, "offline ES ratio: {}", fmt_g9(self.es_ratio))?;
        writeln!(s, "online shortage: {} s", fmt_g9(self.online_shortage))?;
        writeln!(
            s,
            "online ES ratio: {}",
            fmt_g9(self.online_shortage / self.horizon)
        )?;
        writeln!(s, "online/offline agree: {}", yes(self.agree))?;
        writeln!(s, "feasible: {}", yes(self.feasible))?;
        writeln!(s, "online pauses: {}", self.pauses.len())?;
        for (i, a, b) in &self.pauses {
            writeln!(s, "  epoch {i}: [{}, {}) s", fmt_g9(*a), fmt_g9(*b))?;
        }
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelKind;

    #[test]
    fn esp_curve_header_and_rows() {
        let mut cfg = RunConfig::default();
        cfg.trials = 200;
        cfg.set("rates_mbps", "10:12:1").unwrap();
        let csv = esp_curve(&cfg, &Engine::default()).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "rate_mbps,esp_mc,esp_stderr,esp_ci_lo,esp_ci_hi,esp_m1,esp_m2,esp_asymptotic"
        );
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("10,"));
        assert!(csv.ends_with('\n'));
        assert!(lines[1].split(',').all(|c| !c.is_empty()));
    }

    #[test]
    fn esp_curve_blank_closed_forms_for_long_horizons() {
        let mut cfg = RunConfig::default();
        cfg.trials = 20;
        cfg.epochs = 5;
        cfg.set("rates_mbps", "10:10:1").unwrap();
        let csv = esp_curve(&cfg, &Engine::default()).unwrap();
        let cells: Vec<_> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(cells[5], "");
        assert_eq!(cells[6], "");
        assert!(!cells[7].is_empty());
    }

    #[test]
    fn threshold_table_columns() {
        let mut cfg = RunConfig::default();
        cfg.set("rates_mbps", "10:20:5").unwrap();
        let csv = threshold_table(&cfg).unwrap();
        assert!(csv.starts_with("rate_mbps,gamma_thr_m1,gamma_thr_m2,gamma_thr_asym\n"));
        assert_eq!(csv.lines().count(), 4);
        cfg.set("horizon", "asym").unwrap();
        let csv = threshold_table(&cfg).unwrap();
        assert!(csv.starts_with("rate_bps,gamma_thr,p_out\n"));
    }

    #[test]
    fn schedule_small_profile() {
        let mut cfg = RunConfig::default();
        cfg.model = ModelKind::Baseband;
        let p = EhProfile::new(1.0, vec![0.5, 2.0, 0.2]).unwrap();
        let rep = schedule(&cfg, &p, 0.5).unwrap();
        assert!((rep.start_time - 0.5).abs() < 1e-15);
        assert!((rep.es_ratio - 1.0 / 6.0).abs() < 1e-15);
        assert!(rep.agree && rep.feasible);
        assert_eq!(rep.pauses, vec![(0, 0.5, 1.0)]);
        let text = rep.to_string();
        assert!(text.contains("offline start T_S: 0.5 s"));
        assert!(text.contains("offline ES ratio: 0.166666667"));
    }
}

//! `ehfr`: experiment front end.
//!
//! Every subcommand reads a `key = value` config (see `ehfr_core::config`);
//! flags override the file. CSV goes to `--out` (written atomically) or
//! stdout. Exit status: 0 success, 1 acceptance or consistency failure,
//! 2 usage or configuration error.
//!
//! `EHFR_WORKERS` sets the Monte-Carlo thread count; the default is every
//! available core. Results do not depend on it.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ehfr_core::acceptance::{self, AcceptanceOptions};
use ehfr_core::config::RateRange;
use ehfr_core::{report, EhProfile, Engine, Error, RunConfig};

const WORKERS_ENV: &str = "EHFR_WORKERS";

#[derive(Parser)]
#[command(
    name = "ehfr",
    version,
    about = "Fixed-rate transmission with energy harvesting"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Rate grid `start:stop:step` in Mbps.
    #[arg(long, global = true)]
    rates: Option<String>,
    /// Any config key, as `key=value`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Shortage probability versus rate, Monte Carlo and closed forms.
    EspCurve,
    /// Effective rate versus rate, with the peak per horizon.
    EffrateCurve,
    /// Outage versus rate under Rayleigh block fading.
    FadingOutage,
    /// Optimal channel-gain thresholds versus rate.
    ThresholdTable,
    /// Offline start time and online pauses for one harvest profile.
    Schedule {
        /// Profile file: one energy per line in J, `#` comments allowed.
        profile: PathBuf,
        /// Rate in Mbps (plain units for the baseband model).
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Run the acceptance checks.
    Validate,
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("ehfr: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("ehfr: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects key=value, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    if let Some(rates) = &common.rates {
        cfg.rates = RateRange::parse(rates)?;
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn workers() -> Result<Option<usize>, Failure> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Usage(format!(
                "{WORKERS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli.common)?;
    let engine = Engine::new(workers()?);
    match cli.cmd {
        Cmd::EspCurve => emit(&cfg, &report::esp_curve(&cfg, &engine)?),
        Cmd::EffrateCurve => {
            let curve = report::effrate_curve(&cfg, &engine)?;
            emit(&cfg, &curve.csv)?;
            let rows: String = curve.argmax.iter().map(|r| format!("{r}\n")).collect();
            // keep stdout pure CSV when the table goes there
            if cfg.out.is_some() {
                print!("{rows}");
            } else {
                eprint!("{rows}");
            }
            Ok(())
        }
        Cmd::FadingOutage => emit(&cfg, &report::fading_outage(&cfg, &engine)?),
        Cmd::ThresholdTable => emit(&cfg, &report::threshold_table(&cfg)?),
        Cmd::Schedule { profile, rate } => {
            let rate = rate.or(cfg.rate_mbps).ok_or_else(|| {
                Failure::Usage("schedule needs --rate or rate_mbps in the config".into())
            })?;
            let profile = EhProfile::load(&profile, cfg.delta_t_s)?;
            let rep = report::schedule(&cfg, &profile, rate)?;
            emit(&cfg, &rep.to_string())?;
            if !rep.agree {
                return Err(Failure::Check(
                    "online and offline shortage disagree".into(),
                ));
            }
            if !rep.feasible {
                return Err(Failure::Check(
                    "offline schedule violates energy causality".into(),
                ));
            }
            Ok(())
        }
        Cmd::Validate => {
            let mut opts = AcceptanceOptions {
                workers: workers()?,
                ..AcceptanceOptions::default()
            };
            if let Some(seed) = cli.common.seed {
                opts.seed = seed;
            }
            let results = acceptance::run_all(&opts);
            let text: String = results.iter().map(|r| format!("{r}\n")).collect();
            emit(&cfg, &text)?;
            let failed = results.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                return Err(Failure::Check(format!(
                    "{failed} acceptance check(s) failed"
                )));
            }
            Ok(())
        }
    }
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), Failure> {
    match &cfg.out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Write to a temporary file beside `path`, then rename over it.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(())
}

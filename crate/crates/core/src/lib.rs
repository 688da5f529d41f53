//! Fixed-rate transmission from an energy-harvesting transmitter.
//!
//! The transmitter sends at a constant rate `R`, drawing power `g(R)` from a
//! battery that is refilled by a random harvest at the start of every epoch.
//! When the battery runs dry the link is in *energy shortage*. This crate
//! computes when that happens for a given harvest profile, the closed-form
//! shortage probabilities for one epoch, two epochs and the long-horizon
//! limit, threshold policies for block fading, and Monte-Carlo sweeps that
//! check all of it.
//!
//! ```
//! use ehfr_core::{analytics, LoadFactor, PowerModel};
//!
//! let model = PowerModel::default_passband();
//! let k = LoadFactor::for_rate(&model, 15e-3, 12e6).unwrap();
//! let esp = analytics::esp_m1(k);
//! assert!((esp - 0.125).abs() < 1e-3);
//! ```

pub mod acceptance;
pub mod analytics;
pub mod config;
pub mod csvfmt;
pub mod eh_profile;
pub mod error;
pub mod fading;
pub mod montecarlo;
pub mod offline;
pub mod online;
pub mod optimize;
pub mod power_model;
pub mod report;
pub mod stream;

pub use analytics::{HorizonKind, LoadFactor};
pub use config::RunConfig;
pub use eh_profile::{EhDistribution, EhProfile};
pub use error::{Error, FieldError, Result};
pub use fading::{FadingTrace, ThresholdPolicy};
pub use montecarlo::{Channel, CurveSeries, Engine, ExperimentSpec};
pub use online::FadingMode;
pub use power_model::PowerModel;

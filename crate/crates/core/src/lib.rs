//! Two-area load-frequency-control simulator with hierarchical EV
//! vehicle-to-grid dispatch.
//!
//! A control center splits the area control error between conventional
//! generators (through a PI loop) and an EV fleet. The fleet share is passed
//! down through aggregators and charging stations to individual EVs in
//! proportion to their regulation capacity, on top of each EV's charging
//! schedule. Three strategies are modelled: no V2G, a constant schedule
//! (CS1) and an hourly corrected schedule (CS2).
//!
//! ```no_run
//! use v2g_sfr::scenario::{Preset, ScenarioConfig, Strategy};
//!
//! let mut cfg = ScenarioConfig::preset(Preset::Desk);
//! cfg.strategy = Strategy::Cs2;
//! let record = v2g_sfr::runner::run(&cfg)?;
//! println!("{}", record.summary.to_text());
//! # Ok::<(), v2g_sfr::Error>(())
//! ```

pub mod aggregator;
pub mod control_center;
pub mod error;
pub mod ev;
pub mod grid;
pub mod metrics;
pub mod rng;
pub mod runner;
pub mod scenario;
pub mod station;

pub use error::{Error, Result};
pub use runner::{export, run, run_with_workers, sweep, RunRecord};
pub use scenario::{load_config, Preset, ScenarioConfig, Strategy};

//! Scenario configuration, disturbance inputs, and Monte Carlo fleet generation.
//!
//! A scenario is a single TOML document. Every field has a default, so the
//! minimal valid file is `seed = 1`. Missing fields are filled from a base
//! configuration (the built-in defaults or a named preset) by a deep merge
//! before deserialization, which keeps per-area defaults intact when only
//! some area fields are given.

mod fleet;
mod load;
mod wind;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ev::EvType;
use crate::grid::{AreaParams, ControlMode, TieLineParams};

pub use fleet::{generate_fleet, generate_station, sample_truncated_normal, Fleet};
pub use load::{read_load_csv, synthesize_load, write_load_csv, LoadProfile, SyntheticLoadParams};
pub use wind::{WindFilter, WindSpec};

pub const SCHEMA_VERSION: u32 = 1;

pub const HOUR: f64 = 3600.0;
/// 08:00 as seconds-of-day.
pub const EIGHT_AM: f64 = 8.0 * HOUR;
/// 17:00 as seconds-of-day.
pub const FIVE_PM: f64 = 17.0 * HOUR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// The fleet only executes its constant schedules; no regulation tasks.
    WoV2g,
    /// Constant scheduled power for the whole plug-in window.
    Cs1,
    /// Scheduled power recomputed from the live SOC at every correction instant.
    Cs2,
}

impl Strategy {
    pub fn label(self) -> &'static str {
        match self {
            Strategy::WoV2g => "W/O V2G",
            Strategy::Cs1 => "CS1",
            Strategy::Cs2 => "CS2",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', ' ', '/'], "_").as_str() {
            "wo_v2g" | "w_o_v2g" | "none" => Ok(Strategy::WoV2g),
            "cs1" => Ok(Strategy::Cs1),
            "cs2" => Ok(Strategy::Cs2),
            other => Err(Error::validation(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClockParams {
    /// Plant integration step.
    pub dt_plant_s: f64,
    /// Regulation (dispatch) sampling interval.
    pub dt_regu_s: f64,
    /// Scheduled-power correction interval.
    pub dt_corr_s: f64,
    pub comm_delay_s: f64,
    pub horizon_start_s: f64,
    pub horizon_end_s: f64,
}

impl Default for ClockParams {
    fn default() -> Self {
        Self {
            dt_plant_s: 0.1,
            dt_regu_s: 4.0,
            dt_corr_s: HOUR,
            comm_delay_s: 1.0,
            horizon_start_s: EIGHT_AM,
            horizon_end_s: FIVE_PM,
        }
    }
}

impl ClockParams {
    pub fn plant_steps_per_regu(&self) -> usize {
        ratio(self.dt_regu_s, self.dt_plant_s).unwrap_or(1)
    }

    pub fn regu_steps_per_corr(&self) -> usize {
        ratio(self.dt_corr_s, self.dt_regu_s).unwrap_or(1)
    }

    pub fn delay_plant_steps(&self) -> usize {
        (self.comm_delay_s / self.dt_plant_s).round() as usize
    }

    /// Number of regulation instants in the horizon, both endpoints included.
    pub fn regulation_instants(&self) -> usize {
        ratio(self.horizon_end_s - self.horizon_start_s, self.dt_regu_s).unwrap_or(0) + 1
    }

    /// Time of regulation instant `k`, computed from the integer index so no
    /// rounding error accumulates over the horizon.
    pub fn regu_time(&self, k: usize) -> f64 {
        self.horizon_start_s + k as f64 * self.dt_regu_s
    }
}

/// Returns `a / b` when it is a positive integer up to rounding noise.
pub(crate) fn ratio(a: f64, b: f64) -> Option<usize> {
    if !(a.is_finite() && b.is_finite()) || b <= 0.0 || a <= 0.0 {
        return None;
    }
    let r = a / b;
    let n = r.round();
    if n >= 1.0 && (r - n).abs() <= 1e-9 * n.max(1.0) {
        Some(n as usize)
    } else {
        None
    }
}

/// Truncated normal distribution, sampled by rejection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncNormal {
    pub mean: f64,
    pub variance: f64,
    pub lower: f64,
    pub upper: f64,
}

impl TruncNormal {
    pub const fn new(mean: f64, variance: f64, lower: f64, upper: f64) -> Self {
        Self { mean, variance, lower, upper }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.variance >= 0.0 && self.variance.is_finite()) {
            return Err(Error::validation(format!("{what}: variance must be finite and >= 0")));
        }
        if !(0.0..=1.0).contains(&self.lower) || !(0.0..=1.0).contains(&self.upper) || self.lower > self.upper {
            return Err(Error::validation(format!(
                "{what}: bounds must satisfy 0 <= lower <= upper <= 1"
            )));
        }
        if self.variance == 0.0 && !(self.lower..=self.upper).contains(&self.mean) {
            return Err(Error::validation(format!("{what}: degenerate mean outside bounds")));
        }
        // Rejection sampling needs non-negligible mass inside the bounds.
        let sd = self.variance.sqrt();
        if sd > 0.0 && ((self.lower - self.mean) / sd > 6.0 || (self.mean - self.upper) / sd > 6.0) {
            return Err(Error::validation(format!(
                "{what}: bounds carry no probability mass for rejection sampling"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeSoc {
    pub initial: TruncNormal,
    /// `None` means the owner wants to end at the initial SOC.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<TruncNormal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SocDistributions {
    pub type_i: TypeSoc,
    pub type_ii: TypeSoc,
    pub type_iii: TypeSoc,
}

impl Default for SocDistributions {
    fn default() -> Self {
        let low = TruncNormal::new(0.4, 0.01, 0.3, 0.5);
        let high = TruncNormal::new(0.7, 0.01, 0.6, 0.8);
        Self {
            type_i: TypeSoc { initial: low, expected: Some(high) },
            type_ii: TypeSoc { initial: high, expected: Some(low) },
            type_iii: TypeSoc { initial: high, expected: None },
        }
    }
}

impl SocDistributions {
    /// Robustness case: initial SOC of every type drawn with variance 0.1 and
    /// bounded to [0.1, 0.9]; expectations unchanged.
    pub fn wide_initial() -> Self {
        let mut d = Self::default();
        for t in [&mut d.type_i, &mut d.type_ii, &mut d.type_iii] {
            t.initial.variance = 0.1;
            t.initial.lower = 0.1;
            t.initial.upper = 0.9;
        }
        d
    }

    pub fn for_type(&self, t: EvType) -> &TypeSoc {
        match t {
            EvType::TypeI => &self.type_i,
            EvType::TypeII => &self.type_ii,
            EvType::TypeIII => &self.type_iii,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeCounts {
    pub type_i: usize,
    pub type_ii: usize,
    pub type_iii: usize,
}

impl TypeCounts {
    pub fn total(&self) -> usize {
        self.type_i + self.type_ii + self.type_iii
    }

    pub fn get(&self, t: EvType) -> usize {
        match t {
            EvType::TypeI => self.type_i,
            EvType::TypeII => self.type_ii,
            EvType::TypeIII => self.type_iii,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FleetSpec {
    pub n_aggregators: usize,
    pub stations_per_aggregator: usize,
    pub type_counts: TypeCounts,
    pub soc: SocDistributions,
    pub e_rated_kwh: f64,
    pub p_max_kw: f64,
    pub eta_ch: f64,
    pub eta_disch: f64,
    pub plug_in_s: f64,
    pub plug_out_s: f64,
}

impl Default for FleetSpec {
    fn default() -> Self {
        Self {
            n_aggregators: 1,
            stations_per_aggregator: 100,
            type_counts: TypeCounts { type_i: 350, type_ii: 90, type_iii: 60 },
            soc: SocDistributions::default(),
            e_rated_kwh: 24.0,
            p_max_kw: 10.0,
            eta_ch: 0.9,
            eta_disch: 0.9,
            plug_in_s: EIGHT_AM,
            plug_out_s: FIVE_PM,
        }
    }
}

impl FleetSpec {
    pub fn n_stations(&self) -> usize {
        self.n_aggregators * self.stations_per_aggregator
    }

    pub fn evs_per_station(&self) -> usize {
        self.type_counts.total()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_aggregators == 0 || self.stations_per_aggregator == 0 {
            return Err(Error::validation("fleet: need at least one aggregator and one station"));
        }
        if self.type_counts.total() == 0 {
            return Err(Error::validation("fleet: type counts per station sum to zero"));
        }
        if !(self.e_rated_kwh > 0.0 && self.e_rated_kwh.is_finite()) {
            return Err(Error::validation("fleet: e_rated_kwh must be > 0"));
        }
        if !(self.p_max_kw > 0.0 && self.p_max_kw.is_finite()) {
            return Err(Error::validation("fleet: p_max_kw must be > 0"));
        }
        for (name, eta) in [("eta_ch", self.eta_ch), ("eta_disch", self.eta_disch)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::validation(format!("fleet: {name} must lie in (0, 1]")));
            }
        }
        if !(self.plug_out_s > self.plug_in_s) {
            return Err(Error::validation("fleet: plug window must have positive length"));
        }
        for t in EvType::ALL {
            let d = self.soc.for_type(t);
            d.initial.validate(&format!("fleet.soc.{}.initial", t.key()))?;
            if let Some(e) = &d.expected {
                e.validate(&format!("fleet.soc.{}.expected", t.key()))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RatioDistribution {
    Normal { mu: f64, sigma2: f64 },
    Uniform { lo: f64, hi: f64 },
    Constant { r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiPlacement {
    /// The PI shapes only the generator share of ACE.
    GeneratorShare,
    /// The PI acts on the whole ACE; the EV share is subtracted afterwards.
    AceThenSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispatchPolicy {
    pub distribution: RatioDistribution,
    pub ace_deadband_mw: f64,
    pub pi_kp: f64,
    pub pi_ki: f64,
    pub pi_placement: PiPlacement,
}

impl Default for DispatchPolicy {
    fn default() -> Self {
        Self {
            distribution: RatioDistribution::Normal { mu: 0.5, sigma2: 0.01 },
            ace_deadband_mw: 20.0,
            pi_kp: 1.0,
            pi_ki: 0.01,
            pi_placement: PiPlacement::GeneratorShare,
        }
    }
}

impl DispatchPolicy {
    pub fn validate(&self) -> Result<()> {
        match self.distribution {
            RatioDistribution::Normal { mu, sigma2 } => {
                if !(0.0..=1.0).contains(&mu) {
                    return Err(Error::validation("policy: normal mu must lie in [0, 1]"));
                }
                if !(sigma2 >= 0.0 && sigma2.is_finite()) {
                    return Err(Error::validation("policy: normal sigma2 must be >= 0"));
                }
            }
            RatioDistribution::Uniform { lo, hi } => {
                if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                    return Err(Error::validation("policy: uniform bounds must satisfy 0 <= lo <= hi <= 1"));
                }
            }
            RatioDistribution::Constant { r } => {
                if !r.is_finite() {
                    return Err(Error::validation("policy: constant ratio must be finite"));
                }
            }
        }
        if !(self.ace_deadband_mw >= 0.0) {
            return Err(Error::validation("policy: ace_deadband_mw must be >= 0"));
        }
        if !(self.pi_kp >= 0.0 && self.pi_ki >= 0.0) {
            return Err(Error::validation("policy: PI gains must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadSource {
    Synthetic(SyntheticLoadParams),
    Csv { path: PathBuf },
}

impl Default for LoadSource {
    fn default() -> Self {
        LoadSource::Synthetic(SyntheticLoadParams::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvInjection {
    /// Plant sees the fleet's deviation from its constant day-ahead schedule.
    Deviation,
    /// Plant sees the fleet's full grid-side power as load.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SocReference {
    /// Straight line from the initial SOC at plug-in to the expected SOC at plug-out.
    Trajectory,
    /// The expected plug-out SOC itself.
    Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricsSampling {
    Regulation,
    Plant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SocTraceSpec {
    /// EVs traced at every decimated regulation step, per type.
    pub per_type: usize,
    /// Keep one trace row every `decimation` regulation steps.
    pub decimation: usize,
    /// Dump every EV's SOC at each correction instant.
    pub full_fleet_at_corrections: bool,
}

impl Default for SocTraceSpec {
    fn default() -> Self {
        Self { per_type: 1, decimation: 1, full_fleet_at_corrections: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    pub freq_sanity_limit_hz: f64,
    pub ev_injection: EvInjection,
    pub metrics_sampling: MetricsSampling,
    pub soc_window_start_s: f64,
    pub soc_window_end_s: f64,
    pub soc_reference: SocReference,
    /// Whether the W/O V2G baseline still carries the fleet's scheduled
    /// charging. When false the baseline plant sees no fleet at all.
    pub fleet_in_baseline: bool,
    pub trace: SocTraceSpec,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            freq_sanity_limit_hz: 1.0,
            ev_injection: EvInjection::Deviation,
            metrics_sampling: MetricsSampling::Regulation,
            soc_window_start_s: 16.0 * HOUR,
            soc_window_end_s: FIVE_PM,
            soc_reference: SocReference::Trajectory,
            fleet_in_baseline: true,
            trace: SocTraceSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub strategy: Strategy,
    pub area_a: AreaParams,
    pub area_b: AreaParams,
    pub tie: TieLineParams,
    pub clocks: ClockParams,
    pub fleet: FleetSpec,
    pub policy: DispatchPolicy,
    pub load: LoadSource,
    pub wind: WindSpec,
    pub run: RunOptions,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 1,
            strategy: Strategy::Cs2,
            area_a: AreaParams::area_a(),
            area_b: AreaParams::area_b(),
            tie: TieLineParams::default(),
            clocks: ClockParams::default(),
            fleet: FleetSpec::default(),
            policy: DispatchPolicy::default(),
            load: LoadSource::default(),
            wind: WindSpec::default(),
            run: RunOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// One aggregator, 100 stations of 500 EVs.
    Paper,
    /// Ten stations of 50 EVs; same grid.
    Desk,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::validation(format!("unknown preset `{other}` (expected paper|desk)"))),
        }
    }
}

impl ScenarioConfig {
    pub fn preset(p: Preset) -> Self {
        let mut cfg = Self::default();
        if p == Preset::Desk {
            cfg.fleet.stations_per_aggregator = 10;
            cfg.fleet.type_counts = TypeCounts { type_i: 35, type_ii: 9, type_iii: 6 };
        }
        cfg
    }

    /// Parses a TOML document, filling missing fields from `base`.
    pub fn from_toml_str(text: &str, base: &ScenarioConfig, origin: &Path) -> Result<Self> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string().trim_end().to_string(),
        })?;
        if let Some(v) = user.get("schema_version") {
            if v.as_integer() != Some(SCHEMA_VERSION as i64) {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    message: format!("unsupported schema_version {v} (this build reads {SCHEMA_VERSION})"),
                });
            }
        }
        let mut merged = base.to_table()?;
        merge_tables(&mut merged, user);
        let cfg: ScenarioConfig = toml::Value::Table(merged).try_into().map_err(|e: toml::de::Error| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string().trim_end().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub(crate) fn to_table(&self) -> Result<toml::Table> {
        toml::Table::try_from(self).map_err(|e| Error::validation(format!("cannot serialize config: {e}")))
    }

    pub(crate) fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: ScenarioConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::validation(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes the full configuration, defaults included, in the input schema.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::validation(format!("cannot serialize config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::validation(format!("schema_version must be {SCHEMA_VERSION}")));
        }
        self.area_a.validate("area_a")?;
        self.area_b.validate("area_b")?;
        self.tie.validate()?;
        self.validate_clocks()?;
        self.fleet.validate()?;
        self.policy.validate()?;
        self.wind.validate(self.clocks.dt_plant_s)?;
        if let LoadSource::Synthetic(p) = &self.load {
            p.validate()?;
        }
        let fl = &self.fleet;
        let c = &self.clocks;
        if fl.plug_in_s < c.horizon_start_s || fl.plug_out_s > c.horizon_end_s {
            return Err(Error::validation("simulation horizon must cover the fleet plug-in window"));
        }
        for (name, t) in [("plug_in_s", fl.plug_in_s), ("plug_out_s", fl.plug_out_s)] {
            let off = t - c.horizon_start_s;
            if off != 0.0 && ratio(off, c.dt_regu_s).is_none() {
                return Err(Error::validation(format!(
                    "fleet.{name} must fall on a regulation instant (multiple of dt_regu from horizon start)"
                )));
            }
        }
        let r = &self.run;
        if !(r.freq_sanity_limit_hz > 0.0) {
            return Err(Error::validation("run.freq_sanity_limit_hz must be > 0"));
        }
        if !(r.soc_window_start_s < r.soc_window_end_s)
            || r.soc_window_start_s < c.horizon_start_s
            || r.soc_window_end_s > c.horizon_end_s
        {
            return Err(Error::validation("run: SOC deviation window must lie inside the horizon"));
        }
        if r.trace.decimation == 0 {
            return Err(Error::validation("run.trace.decimation must be >= 1"));
        }
        Ok(())
    }

    fn validate_clocks(&self) -> Result<()> {
        let c = &self.clocks;
        for (name, v) in [
            ("dt_plant_s", c.dt_plant_s),
            ("dt_regu_s", c.dt_regu_s),
            ("dt_corr_s", c.dt_corr_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(format!("clocks.{name} must be > 0")));
            }
        }
        if !(c.comm_delay_s >= 0.0) {
            return Err(Error::validation("clocks.comm_delay_s must be >= 0"));
        }
        if ratio(c.dt_regu_s, c.dt_plant_s).is_none() {
            return Err(Error::validation("clocks: dt_regu must be a positive integer multiple of dt_plant"));
        }
        if ratio(c.dt_corr_s, c.dt_regu_s).is_none() {
            return Err(Error::validation("clocks: dt_corr must be a positive integer multiple of dt_regu"));
        }
        if c.comm_delay_s >= c.dt_regu_s {
            return Err(Error::validation("clocks: comm_delay must be shorter than dt_regu"));
        }
        if c.comm_delay_s > 0.0 && ratio(c.comm_delay_s, c.dt_plant_s).is_none() {
            return Err(Error::validation("clocks: comm_delay must be an integer multiple of dt_plant"));
        }
        if !(c.horizon_end_s > c.horizon_start_s) {
            return Err(Error::validation("clocks: horizon_end must be after horizon_start"));
        }
        if ratio(c.horizon_end_s - c.horizon_start_s, c.dt_regu_s).is_none() {
            return Err(Error::validation("clocks: horizon length must be a multiple of dt_regu"));
        }
        Ok(())
    }

    /// Resolves the area-A load deviation input for this scenario.
    pub fn load_profile(&self) -> Result<LoadProfile> {
        let profile = match &self.load {
            LoadSource::Synthetic(p) => {
                synthesize_load(p, &self.clocks, self.seed)
            }
            LoadSource::Csv { path } => read_load_csv(path)?,
        };
        profile.check_covers(self.clocks.horizon_start_s, self.clocks.horizon_end_s)?;
        Ok(profile)
    }

    /// Looks up the area parameters for the area holding the fleet.
    pub fn fleet_area(&self) -> &AreaParams {
        &self.area_a
    }

    pub fn area_modes(&self) -> (ControlMode, ControlMode) {
        (self.area_a.control_mode, self.area_b.control_mode)
    }
}

fn merge_tables(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            // Tagged enums are replaced wholesale when the tag changes.
            (Some(toml::Value::Table(b)), toml::Value::Table(o))
                if o.get("kind").is_none() || o.get("kind") == b.get("kind") =>
            {
                merge_tables(b, o)
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Reads, merges over the built-in defaults, and validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    load_config_with_base(path, &ScenarioConfig::default())
}

pub fn load_config_with_base(path: &Path, base: &ScenarioConfig) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)?;
    let mut cfg = ScenarioConfig::from_toml_str(&text, base, path)?;
    // Relative CSV paths resolve against the config file's directory.
    if let LoadSource::Csv { path: p } = &mut cfg.load {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok(cfg)
}

/// Sets a dotted config path to a TOML literal, re-validating the result.
pub fn set_config_path(cfg: &ScenarioConfig, axis: &str, literal: &str) -> Result<ScenarioConfig> {
    let mut table = cfg.to_table()?;
    let value: toml::Value = {
        let doc: toml::Table = format!("v = {literal}")
            .parse()
            .or_else(|_| format!("v = \"{literal}\"").parse())
            .map_err(|e: toml::de::Error| Error::Sweep(format!("bad value `{literal}`: {e}")))?;
        doc["v"].clone()
    };

    // Named shorthands for the common sweep axes.
    let (path, value) = match axis {
        "policy.mu" => ("policy.distribution.mu".to_string(), value),
        "policy.sigma2" => ("policy.distribution.sigma2".to_string(), value),
        "fleet.soc_profile" => {
            let soc = match value.as_str() {
                Some("baseline") => SocDistributions::default(),
                Some("wide-initial") | Some("wide_initial") => SocDistributions::wide_initial(),
                _ => return Err(Error::Sweep(format!("unknown soc profile {value}"))),
            };
            let v = toml::Value::try_from(soc).map_err(|e| Error::Sweep(e.to_string()))?;
            ("fleet.soc".to_string(), v)
        }
        "policy.distribution" => {
            let v = match value.as_str() {
                Some(s) => toml::Value::try_from(parse_distribution(s)?).map_err(|e| Error::Sweep(e.to_string()))?,
                None => value,
            };
            ("policy.distribution".to_string(), v)
        }
        _ => (axis.to_string(), value),
    };

    let mut slot = &mut table;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if last {
            match slot.get_mut(*part) {
                Some(existing) if same_kind(existing, &value) => {
                    *existing = match (&*existing, &value) {
                        (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(*i as f64),
                        _ => value.clone(),
                    }
                }
                Some(_) => return Err(Error::Sweep(format!("type mismatch for axis `{axis}`"))),
                None => return Err(Error::Sweep(format!("unknown axis `{axis}`"))),
            }
        } else {
            slot = match slot.get_mut(*part) {
                Some(toml::Value::Table(t)) => t,
                _ => return Err(Error::Sweep(format!("unknown axis `{axis}`"))),
            };
        }
    }
    ScenarioConfig::from_table(table)
}

fn same_kind(a: &toml::Value, b: &toml::Value) -> bool {
    use toml::Value::*;
    matches!(
        (a, b),
        (Float(_), Float(_) | Integer(_))
            | (Integer(_), Integer(_))
            | (String(_), String(_))
            | (Boolean(_), Boolean(_))
            | (Table(_), Table(_))
            | (Array(_), Array(_))
    )
}

/// Parses `normal(mu,sigma2)`, `uniform(lo,hi)` or `constant(r)`.
pub fn parse_distribution(s: &str) -> Result<RatioDistribution> {
    let s = s.trim();
    let bad = || Error::Sweep(format!("cannot parse distribution `{s}`"));
    let open = s.find('(').ok_or_else(bad)?;
    let name = &s[..open];
    let args = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
    let nums: Vec<f64> = args
        .split(',')
        .map(|a| parse_number(a.trim()))
        .collect::<Option<_>>()
        .ok_or_else(bad)?;
    match (name, nums.as_slice()) {
        ("normal", [mu, sigma2]) => Ok(RatioDistribution::Normal { mu: *mu, sigma2: *sigma2 }),
        ("uniform", [lo, hi]) => Ok(RatioDistribution::Uniform { lo: *lo, hi: *hi }),
        ("constant", [r]) => Ok(RatioDistribution::Constant { r: *r }),
        _ => Err(bad()),
    }
}

fn parse_number(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((n, d)) => Some(n.trim().parse::<f64>().ok()? / d.trim().parse::<f64>().ok()?),
        None => s.parse().ok(),
    }
}

//! Simulation loop across the plant, regulation and correction clocks, plus
//! sweeps and file export.
//!
//! At each regulation instant the order is fixed: integrate SOC over the
//! elapsed interval, record samples, correct schedules (CS2, on the
//! correction clock), upload station FRC, compute ACE, draw R, dispatch,
//! split, update the PIs, allocate to aggregators, stations and EVs, compose
//! EV power, and push the commands through the communication delay. The
//! plant then integrates until the next instant.
//!
//! Per-station work fans out over rayon and is reduced in station order, so
//! results do not depend on the worker count.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::aggregator::{allocate_to_stations, total_frc, FrcReport, StationTask};
use crate::control_center::{
    compute_ace, sample_ratio, split_tasks, uncertain_dispatch, DelayLine, PiController,
};
use crate::error::{Error, Result};
use crate::ev::{EvState, EvType};
use crate::grid::{Injection, Plant};
use crate::metrics::{EvDeviation, MetricsSummary, SocDeviationReport, StatsAccumulator};
use crate::rng::{stream_rng, Stream};
use crate::scenario::{
    generate_station, set_config_path, EvInjection, MetricsSampling, PiPlacement, ScenarioConfig, SocReference,
    Strategy, WindFilter,
};
use crate::station::{StationState, StationStep};

/// One row of the regulation-rate time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRow {
    pub time_s: f64,
    pub df_a_hz: f64,
    pub df_b_hz: f64,
    pub dp_tie_mw: f64,
    pub ace_a_mw: f64,
    pub ace_b_mw: f64,
    pub s_contr_mw: f64,
    pub s_gener_mw: f64,
    /// Fleet grid-side power, charging positive.
    pub ev_power_mw: f64,
    pub frc_up_mw: f64,
    pub frc_down_mw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocTraceRow {
    pub time_s: f64,
    pub ev_id: u32,
    pub ev_type: EvType,
    pub soc_pu: f64,
}

/// Largest relative residuals of the three conservation identities seen
/// over a run: ACE split, station task sum, and EV regulation sum per station.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConservationResiduals {
    pub split: f64,
    pub stations: f64,
    pub evs: f64,
}

impl ConservationResiduals {
    pub fn max(&self) -> f64 {
        self.split.max(self.stations).max(self.evs)
    }
}

/// Final per-EV state, for post-run checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvOutcome {
    pub ev_id: u32,
    pub ev_type: EvType,
    pub soc_init: f64,
    pub soc_exp: f64,
    pub soc_final: f64,
    pub e_regu_kwh: f64,
    pub e_sche_kwh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: ScenarioConfig,
    pub series: Vec<StepRow>,
    pub soc_traces: Vec<SocTraceRow>,
    pub summary: MetricsSummary,
    pub residuals: ConservationResiduals,
    pub evs: Vec<EvOutcome>,
    /// Δf_A at every plant step, when plant-rate sampling is selected.
    pub plant_df_a: Vec<f64>,
}

fn rel_residual(lhs: f64, rhs: f64) -> f64 {
    let diff = (lhs - rhs).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / rhs.abs().max(lhs.abs())
    }
}

/// A station plus its running SOC-deviation sums.
struct StationRun {
    state: StationState,
    aggregator: usize,
    dev_sum_sq: Vec<f64>,
    dev_n: Vec<u32>,
}

impl StationRun {
    /// Integrates the interval that ended at `now` and records the
    /// deviation samples taken at `now`.
    fn advance_to(&mut self, now: f64, dt: f64, first: bool, window: (f64, f64), reference: SocReference) {
        if !first {
            self.state.integrate(now - dt, dt);
        }
        if (window.0..=window.1).contains(&now) {
            for (i, ev) in self.state.evs.iter().enumerate() {
                let target = match reference {
                    SocReference::Trajectory => ev.reference_soc(now),
                    SocReference::Terminal => ev.soc_exp,
                };
                let d = ev.soc - target;
                self.dev_sum_sq[i] += d * d;
                self.dev_n[i] += 1;
            }
        }
    }
}

/// Runs one scenario on the global rayon pool.
pub fn run(config: &ScenarioConfig) -> Result<RunRecord> {
    config.validate()?;
    Simulation::new(config)?.execute()
}

/// Runs one scenario on a dedicated pool of `workers` threads.
pub fn run_with_workers(config: &ScenarioConfig, workers: usize) -> Result<RunRecord> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::validation(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run(config))
}

struct Simulation<'a> {
    cfg: &'a ScenarioConfig,
    stations: Vec<StationRun>,
    traced: Vec<(usize, usize)>,
}

impl<'a> Simulation<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self> {
        let fl = &cfg.fleet;
        let stations: Vec<StationRun> = (0..fl.n_stations())
            .into_par_iter()
            .map(|j| {
                let evs = generate_station(fl, cfg.seed, j);
                let n = evs.len();
                StationRun {
                    state: StationState::new(j as u32, evs, fl.eta_ch, fl.eta_disch),
                    aggregator: j / fl.stations_per_aggregator,
                    dev_sum_sq: vec![0.0; n],
                    dev_n: vec![0; n],
                }
            })
            .collect();
        let traced = select_traced(&stations, cfg.run.trace.per_type);
        Ok(Self { cfg, stations, traced })
    }

    fn execute(mut self) -> Result<RunRecord> {
        let cfg = self.cfg;
        let c = &cfg.clocks;
        let opts = &cfg.run;
        let n_instants = c.regulation_instants();
        let spr = c.plant_steps_per_regu();
        let rpc = c.regu_steps_per_corr();
        let load = cfg.load_profile()?;
        let mut wind = WindFilter::new(&cfg.wind, cfg.seed);
        let mut ratio_rng = stream_rng(cfg.seed, Stream::Ratio, 0);
        let mut plant = Plant::new(
            cfg.area_a.clone(),
            cfg.area_b.clone(),
            cfg.tie.clone(),
            c.horizon_start_s,
            opts.freq_sanity_limit_hz,
        );
        let pol = &cfg.policy;
        let mut pi_a = PiController::new(pol.pi_kp, pol.pi_ki, cfg.area_a.sfr_capacity_mw);
        let mut pi_b = PiController::new(pol.pi_kp, pol.pi_ki, cfg.area_b.sfr_capacity_mw);
        let mut commands: DelayLine<[f64; 3]> = DelayLine::new(c.delay_plant_steps());
        let fleet_present = cfg.strategy != Strategy::WoV2g || opts.fleet_in_baseline;
        let window = (opts.soc_window_start_s, opts.soc_window_end_s);
        let n_aggr = cfg.fleet.n_aggregators;

        let mut series = Vec::with_capacity(n_instants);
        let mut traces = Vec::new();
        let mut residuals = ConservationResiduals::default();
        let mut ace_acc = StatsAccumulator::default();
        let mut freq_acc = StatsAccumulator::default();
        let mut plant_df_a = Vec::new();
        let mut clamp_events = 0u64;
        let db = pol.ace_deadband_mw;

        for k in 0..n_instants {
            let now = c.regu_time(k);
            let first = k == 0;
            let correct = cfg.strategy == Strategy::Cs2 && k % rpc == 0 && !first;
            let dt_regu = c.dt_regu_s;
            let dt_corr = c.dt_corr_s;
            let reference = opts.soc_reference;

            let reports: Vec<FrcReport> = self
                .stations
                .par_iter_mut()
                .map(|s| {
                    s.advance_to(now, dt_regu, first, window, reference);
                    if correct {
                        s.state.correct_schedules(now, dt_corr);
                    }
                    s.state.upload(now)
                })
                .collect();

            self.record_traces(k, now, rpc, &mut traces);

            let snap = plant.snapshot();
            let ace_a = compute_ace(snap.areas[0].delta_f_hz, plant.tie_seen_by(0), &cfg.area_a);
            let ace_b = compute_ace(snap.areas[1].delta_f_hz, plant.tie_seen_by(1), &cfg.area_b);
            let r = sample_ratio(pol, &mut ratio_rng);
            let total = total_frc(reports.iter().map(Some));
            let s_contr = if cfg.strategy == Strategy::WoV2g {
                0.0
            } else {
                uncertain_dispatch(ace_a, total.s_up, total.s_down, r, db)
            };
            let sample = split_tasks(ace_a, s_contr, now, r)
                .map_err(|e| Error::validation(format!("ACE split failed at t = {now}: {e}")))?;
            residuals.split = residuals.split.max(rel_residual(sample.s_contr + sample.s_gener, sample.ace));

            let banded = |x: f64, ace: f64| if ace.abs() <= db { 0.0 } else { x };
            let cmd_a = match pol.pi_placement {
                PiPlacement::GeneratorShare => pi_a.update(banded(sample.s_gener, ace_a), dt_regu),
                PiPlacement::AceThenSplit => pi_a.update(banded(ace_a, ace_a), dt_regu) - s_contr,
            };
            let cmd_b = pi_b.update(banded(ace_b, ace_b), dt_regu);

            let tasks = allocate_hierarchical(s_contr, &reports, &self.stations, n_aggr);
            let task_sum: f64 = tasks.iter().map(|t| t.task).sum();
            residuals.stations = residuals.stations.max(rel_residual(task_sum, s_contr));

            let steps: Vec<StationStep> = self
                .stations
                .par_iter_mut()
                .zip(tasks.par_iter())
                .map(|(s, t)| s.state.apply_task(t, now))
                .collect();
            let mut power = 0.0;
            let mut baseline = 0.0;
            for (st, t) in steps.iter().zip(&tasks) {
                residuals.evs = residuals.evs.max(rel_residual(st.regu_grid_mw, t.task));
                power += st.power_grid_mw;
                baseline += st.baseline_grid_mw;
                clamp_events += u64::from(st.clamps);
            }
            let ev_mw = if !fleet_present {
                0.0
            } else {
                match opts.ev_injection {
                    EvInjection::Deviation => -(power - baseline),
                    EvInjection::Absolute => -power,
                }
            };

            series.push(StepRow {
                time_s: now,
                df_a_hz: snap.areas[0].delta_f_hz,
                df_b_hz: snap.areas[1].delta_f_hz,
                dp_tie_mw: snap.delta_p_tie_mw,
                ace_a_mw: ace_a,
                ace_b_mw: ace_b,
                s_contr_mw: sample.s_contr,
                s_gener_mw: sample.s_gener,
                ev_power_mw: if fleet_present { power } else { 0.0 },
                frc_up_mw: total.s_up,
                frc_down_mw: total.s_down,
            });
            if opts.metrics_sampling == MetricsSampling::Regulation {
                ace_acc.push(ace_a);
                freq_acc.push(snap.areas[0].delta_f_hz);
            }

            if k + 1 == n_instants {
                if opts.metrics_sampling == MetricsSampling::Plant {
                    ace_acc.push(ace_a);
                    freq_acc.push(snap.areas[0].delta_f_hz);
                    plant_df_a.push(snap.areas[0].delta_f_hz);
                }
                break;
            }
            let base_step = (k * spr) as u64;
            commands.push(base_step, [-cmd_a, -cmd_b, ev_mw]);
            for j in 0..spr {
                let n = base_step + j as u64;
                let t = now + j as f64 * c.dt_plant_s;
                if opts.metrics_sampling == MetricsSampling::Plant {
                    let s = plant.snapshot();
                    ace_acc.push(compute_ace(s.areas[0].delta_f_hz, plant.tie_seen_by(0), &cfg.area_a));
                    freq_acc.push(s.areas[0].delta_f_hz);
                    plant_df_a.push(s.areas[0].delta_f_hz);
                }
                let [gen_a, gen_b, ev] = *commands.at(n);
                let inj = [
                    Injection {
                        load_mw: load.value_at(t),
                        wind_mw: wind.step(c.dt_plant_s),
                        ev_mw: ev,
                        gen_command_mw: gen_a,
                    },
                    Injection { gen_command_mw: gen_b, ..Injection::default() },
                ];
                plant.step(&inj, c.dt_plant_s)?;
            }
        }

        let per_ev: Vec<EvDeviation> = self
            .stations
            .iter()
            .flat_map(|s| {
                s.state.evs.iter().enumerate().filter(|(i, _)| s.dev_n[*i] > 0).map(move |(i, ev)| EvDeviation {
                    ev_id: ev.id,
                    ev_type: ev.ev_type,
                    rms: (s.dev_sum_sq[i] / f64::from(s.dev_n[i])).sqrt(),
                })
            })
            .collect();
        let evs: Vec<EvOutcome> = self.stations.iter().flat_map(|s| s.state.evs.iter().map(outcome)).collect();
        let soc_saturations = self.stations.iter().flat_map(|s| &s.state.evs).map(|e| u64::from(e.soc_saturations)).sum();

        let summary = MetricsSummary {
            strategy: cfg.strategy,
            seed: cfg.seed,
            horizon: (c.horizon_start_s, c.horizon_end_s),
            ace: ace_acc.finish()?,
            freq: freq_acc.finish()?,
            soc_dev: SocDeviationReport::from_per_ev(window, per_ev, cfg.seed),
            clamp_events,
            soc_saturations,
            max_conservation_residual: residuals.max(),
        };
        Ok(RunRecord { config: cfg.clone(), series, soc_traces: traces, summary, residuals, evs, plant_df_a })
    }

    fn record_traces(&self, k: usize, now: f64, rpc: usize, out: &mut Vec<SocTraceRow>) {
        let trace = &self.cfg.run.trace;
        let row = |ev: &EvState| SocTraceRow { time_s: now, ev_id: ev.id, ev_type: ev.ev_type, soc_pu: ev.soc };
        if trace.full_fleet_at_corrections && k % rpc == 0 {
            out.extend(self.stations.iter().flat_map(|s| s.state.evs.iter().map(row)));
        } else if k % trace.decimation == 0 {
            out.extend(self.traced.iter().map(|&(s, i)| row(&self.stations[s].state.evs[i])));
        }
    }
}

fn outcome(ev: &EvState) -> EvOutcome {
    EvOutcome {
        ev_id: ev.id,
        ev_type: ev.ev_type,
        soc_init: ev.soc_init,
        soc_exp: ev.soc_exp,
        soc_final: ev.soc,
        e_regu_kwh: ev.e_regu_kwh,
        e_sche_kwh: ev.e_sche_kwh,
    }
}

/// The first `per_type` EVs of each type, in id order.
fn select_traced(stations: &[StationRun], per_type: usize) -> Vec<(usize, usize)> {
    let mut picked = Vec::new();
    let mut counts = [0usize; 3];
    for (s, st) in stations.iter().enumerate() {
        for (i, ev) in st.state.evs.iter().enumerate() {
            let c = &mut counts[ev.ev_type.index()];
            if *c < per_type {
                *c += 1;
                picked.push((s, i));
            }
        }
    }
    picked
}

/// Control center to aggregators, then each aggregator to its stations.
fn allocate_hierarchical(
    s_contr: f64,
    reports: &[FrcReport],
    stations: &[StationRun],
    n_aggr: usize,
) -> Vec<StationTask> {
    if n_aggr == 1 {
        return allocate_to_stations(s_contr, reports, &total_frc(reports.iter().map(Some)));
    }
    let grand = total_frc(reports.iter().map(Some));
    let groups: Vec<Vec<FrcReport>> = (0..n_aggr)
        .map(|a| reports.iter().zip(stations).filter(|(_, s)| s.aggregator == a).map(|(r, _)| *r).collect())
        .collect();
    let aggr_reports: Vec<FrcReport> = groups
        .iter()
        .enumerate()
        .map(|(a, g)| FrcReport { station_id: a as u32, ..total_frc(g.iter().map(Some)) })
        .collect();
    let aggr_tasks = allocate_to_stations(s_contr, &aggr_reports, &grand);
    groups
        .iter()
        .zip(&aggr_reports)
        .zip(aggr_tasks)
        .flat_map(|((g, tot), t)| allocate_to_stations(t.task, g, tot))
        .collect()
}

/// One run per axis value, all from the same seed. Every value is applied
/// and validated before any run starts.
pub fn sweep(base: &ScenarioConfig, axis: &str, values: &[String]) -> Result<Vec<(String, RunRecord)>> {
    if values.is_empty() {
        return Err(Error::Sweep(format!("no values given for axis `{axis}`")));
    }
    let configs: Vec<(String, ScenarioConfig)> = values
        .iter()
        .map(|v| Ok((v.clone(), set_config_path(base, axis, v)?)))
        .collect::<Result<_>>()?;
    configs.into_par_iter().map(|(v, cfg)| Ok((v, run(&cfg)?))).collect()
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

pub fn write_timeseries<W: std::io::Write>(record: &RunRecord, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "time_s",
        "df_a_hz",
        "df_b_hz",
        "dp_tie_mw",
        "ace_a_mw",
        "s_contr_mw",
        "s_gener_mw",
        "ev_power_mw",
        "frc_up_mw",
        "frc_down_mw",
    ])?;
    for r in &record.series {
        out.write_record([
            fmt(r.time_s),
            fmt(r.df_a_hz),
            fmt(r.df_b_hz),
            fmt(r.dp_tie_mw),
            fmt(r.ace_a_mw),
            fmt(r.s_contr_mw),
            fmt(r.s_gener_mw),
            fmt(r.ev_power_mw),
            fmt(r.frc_up_mw),
            fmt(r.frc_down_mw),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_soc_traces<W: std::io::Write>(record: &RunRecord, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["time_s", "ev_id", "ev_type", "soc_pu"])?;
    for r in &record.soc_traces {
        out.write_record([fmt(r.time_s), r.ev_id.to_string(), r.ev_type.label().to_string(), fmt(r.soc_pu)])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes timeseries.csv, soc_traces.csv, metrics.kv, report.txt and
/// config.toml into `dir`, creating it if needed.
pub fn export(record: &RunRecord, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_timeseries(record, fs::File::create(dir.join("timeseries.csv"))?)?;
    write_soc_traces(record, fs::File::create(dir.join("soc_traces.csv"))?)?;
    fs::write(dir.join("metrics.kv"), record.summary.to_kv())?;
    fs::write(dir.join("report.txt"), record.summary.to_text())?;
    let mut f = fs::File::create(dir.join("config.toml"))?;
    f.write_all(record.config.to_toml_string()?.as_bytes())?;
    Ok(())
}

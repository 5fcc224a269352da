//! Charging-station level: per-EV capacities, schedules, allocation of the
//! station task to EVs, and composition of the executed power.
//!
//! EV powers are battery-side kW (positive = charging). Station reports and
//! tasks are MW. Efficiencies sit at the charger: a battery-side charge `p`
//! draws `p / eta_ch` from the grid, a discharge delivers `p * eta_disch`.

use crate::aggregator::{proportional_shares, FrcReport, StationTask};
use crate::ev::{plugged, update_soc, EvState};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvCapacity {
    pub p_up_kw: f64,
    pub p_down_kw: f64,
    pub participating: bool,
}

/// Regulation headroom of one EV around its scheduled power.
///
/// An EV outside its plug window, or whose schedule already sits at or beyond
/// ±p_max, does not participate and offers nothing.
pub fn ev_capacity(ev: &EvState, now: f64) -> EvCapacity {
    let p = ev.p_sche_kw;
    if !plugged(ev, now) || p.abs() >= ev.p_max_kw {
        return EvCapacity::default();
    }
    EvCapacity { p_up_kw: ev.p_max_kw + p, p_down_kw: ev.p_max_kw - p, participating: true }
}

/// Constant schedule reaching the expected SOC over the whole plug window.
pub fn scheduled_power_const(ev: &EvState) -> f64 {
    let hours = (ev.t_out - ev.t_init) / 3600.0;
    (ev.soc_exp - ev.soc_init) * ev.e_rated_kwh / hours
}

/// Corrected schedule from the live SOC and the remaining window.
///
/// Returns `None` when less than a quarter correction interval is left; the
/// caller keeps the previous schedule.
pub fn scheduled_power_realtime(ev: &EvState, now: f64, dt_corr: f64) -> Option<f64> {
    let remaining = ev.t_out - now;
    if remaining < dt_corr / 4.0 {
        return None;
    }
    Some((ev.soc_exp - ev.soc) * ev.e_rated_kwh / (remaining / 3600.0))
}

/// Battery-side regulation power for each EV from a grid-side station task.
pub fn allocate_to_evs(task_mw: f64, caps: &[EvCapacity], eta_ch: f64, eta_disch: f64) -> Vec<f64> {
    let (up, down) = caps.iter().fold((0.0, 0.0), |(u, d), c| (u + c.p_up_kw, d + c.p_down_kw));
    let task_kw = task_mw * 1000.0;
    let battery_side = if task_kw <= 0.0 { task_kw / eta_disch } else { task_kw * eta_ch };
    proportional_shares(battery_side, caps.iter().map(|c| (c.p_up_kw, c.p_down_kw)), up, down).collect()
}

/// Executed power: schedule plus regulation, limited to ±p_max.
/// The flag reports whether the limit was hit.
pub fn compose_v2g_power(p_sche: f64, p_regu: f64, p_max: f64) -> (f64, bool) {
    let p = p_sche + p_regu;
    if p.abs() > p_max {
        (p_max.copysign(p), true)
    } else {
        (p, false)
    }
}

pub fn grid_side_kw(p_battery: f64, eta_ch: f64, eta_disch: f64) -> f64 {
    if p_battery >= 0.0 {
        p_battery / eta_ch
    } else {
        p_battery * eta_disch
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StationStep {
    /// Σ grid-side regulation power, MW. Equals the task when capacity exists.
    pub regu_grid_mw: f64,
    /// Σ grid-side executed power, MW (charging positive).
    pub power_grid_mw: f64,
    /// Σ grid-side constant-schedule baseline, limited to ±p_max, MW.
    pub baseline_grid_mw: f64,
    pub clamps: u32,
}

#[derive(Debug, Clone)]
pub struct StationState {
    pub id: u32,
    pub evs: Vec<EvState>,
    /// Capacities behind the last upload, one per EV.
    pub capacities: Vec<EvCapacity>,
    pub uploaded: FrcReport,
    pub eta_ch: f64,
    pub eta_disch: f64,
    pub clamp_events: u64,
}

impl StationState {
    pub fn new(id: u32, evs: Vec<EvState>, eta_ch: f64, eta_disch: f64) -> Self {
        let n = evs.len();
        Self {
            id,
            evs,
            capacities: vec![EvCapacity::default(); n],
            uploaded: FrcReport { station_id: id, ..FrcReport::default() },
            eta_ch,
            eta_disch,
            clamp_events: 0,
        }
    }

    /// Recomputes every plugged EV's schedule from its live SOC.
    pub fn correct_schedules(&mut self, now: f64, dt_corr: f64) {
        for ev in self.evs.iter_mut().filter(|ev| plugged(ev, now)) {
            if let Some(p) = scheduled_power_realtime(ev, now, dt_corr) {
                ev.p_sche_kw = p;
            }
        }
    }

    /// Computes and stores per-EV capacities and the station report.
    pub fn upload(&mut self, now: f64) -> FrcReport {
        for (cap, ev) in self.capacities.iter_mut().zip(&self.evs) {
            *cap = ev_capacity(ev, now);
        }
        self.uploaded = station_frc(self.id, &self.capacities, now);
        self.uploaded
    }

    /// Allocates `task` over the uploaded capacities and sets every EV's
    /// executed power for the coming interval.
    pub fn apply_task(&mut self, task: &StationTask, now: f64) -> StationStep {
        let regu = allocate_to_evs(task.task, &self.capacities, self.eta_ch, self.eta_disch);
        let mut out = StationStep::default();
        for (ev, p_regu) in self.evs.iter_mut().zip(regu) {
            if !plugged(ev, now) {
                ev.p_now_kw = 0.0;
                ev.p_regu_kw = 0.0;
                continue;
            }
            out.regu_grid_mw += grid_side_kw(p_regu, self.eta_ch, self.eta_disch);
            let (p, clamped) = compose_v2g_power(ev.p_sche_kw, p_regu, ev.p_max_kw);
            ev.p_regu_kw = p_regu;
            ev.p_now_kw = p;
            if clamped {
                out.clamps += 1;
            }
            out.power_grid_mw += grid_side_kw(p, self.eta_ch, self.eta_disch);
            let (base, _) = compose_v2g_power(ev.p_const_kw, 0.0, ev.p_max_kw);
            out.baseline_grid_mw += grid_side_kw(base, self.eta_ch, self.eta_disch);
        }
        out.regu_grid_mw /= 1000.0;
        out.power_grid_mw /= 1000.0;
        out.baseline_grid_mw /= 1000.0;
        self.clamp_events += u64::from(out.clamps);
        out
    }

    /// Integrates the SOC of EVs that were plugged at the interval start.
    pub fn integrate(&mut self, interval_start: f64, dt: f64) {
        for ev in self.evs.iter_mut().filter(|ev| plugged(ev, interval_start)) {
            update_soc(ev, dt);
        }
    }
}

/// Station report: componentwise sum of EV capacities, converted to MW.
pub fn station_frc(station_id: u32, caps: &[EvCapacity], now: f64) -> FrcReport {
    let (up, down) = caps.iter().fold((0.0, 0.0), |(u, d), c| (u + c.p_up_kw, d + c.p_down_kw));
    FrcReport { s_up: up / 1000.0, s_down: down / 1000.0, station_id, time: now }
}

//! Per-EV battery state and zero-order-hold SOC integration.
//!
//! Powers are battery-side, in kW, positive when charging. Energies are kWh.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EvType {
    /// Owner wants to end with more energy.
    TypeI,
    /// Owner wants to sell surplus energy.
    TypeII,
    /// Owner wants to hold the current energy.
    TypeIII,
}

impl EvType {
    pub const ALL: [EvType; 3] = [EvType::TypeI, EvType::TypeII, EvType::TypeIII];

    pub fn key(self) -> &'static str {
        match self {
            EvType::TypeI => "type_i",
            EvType::TypeII => "type_ii",
            EvType::TypeIII => "type_iii",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            EvType::TypeI => "TYPE_I",
            EvType::TypeII => "TYPE_II",
            EvType::TypeIII => "TYPE_III",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvState {
    pub id: u32,
    pub ev_type: EvType,
    pub soc: f64,
    pub soc_init: f64,
    pub soc_exp: f64,
    pub e_rated_kwh: f64,
    pub p_max_kw: f64,
    /// Plug-in time, seconds-of-day.
    pub t_init: f64,
    /// Plug-out time, seconds-of-day.
    pub t_out: f64,
    /// Power currently executed by the charger.
    pub p_now_kw: f64,
    pub p_sche_kw: f64,
    pub p_regu_kw: f64,
    /// Constant schedule fixed at plug-in; also the day-ahead baseline.
    pub p_const_kw: f64,
    pub e_regu_kwh: f64,
    pub e_sche_kwh: f64,
    pub soc_saturations: u32,
}

impl EvState {
    /// Builds a plugged-in EV at its plug-in instant with the constant schedule
    /// already in place.
    pub fn new(
        id: u32,
        ev_type: EvType,
        soc_init: f64,
        soc_exp: f64,
        e_rated_kwh: f64,
        p_max_kw: f64,
        t_init: f64,
        t_out: f64,
    ) -> Self {
        let mut ev = Self {
            id,
            ev_type,
            soc: soc_init,
            soc_init,
            soc_exp,
            e_rated_kwh,
            p_max_kw,
            t_init,
            t_out,
            p_now_kw: 0.0,
            p_sche_kw: 0.0,
            p_regu_kw: 0.0,
            p_const_kw: 0.0,
            e_regu_kwh: 0.0,
            e_sche_kwh: 0.0,
            soc_saturations: 0,
        };
        ev.p_const_kw = crate::station::scheduled_power_const(&ev);
        ev.p_sche_kw = ev.p_const_kw;
        ev
    }

    pub fn plugged(&self, now: f64) -> bool {
        plugged(self, now)
    }

    /// Planned SOC at `t`: the straight line from plug-in to the expected SOC.
    pub fn reference_soc(&self, t: f64) -> f64 {
        let span = self.t_out - self.t_init;
        let frac = ((t - self.t_init) / span).clamp(0.0, 1.0);
        self.soc_init + (self.soc_exp - self.soc_init) * frac
    }

    /// Energy-accounting residual `e_regu + e_sche - (soc - soc_init) * E`, kWh.
    pub fn accounting_residual_kwh(&self) -> f64 {
        self.e_regu_kwh + self.e_sche_kwh - (self.soc - self.soc_init) * self.e_rated_kwh
    }
}

/// True iff `t_init <= now < t_out`.
pub fn plugged(ev: &EvState, now: f64) -> bool {
    ev.t_init <= now && now < ev.t_out
}

/// Advances the SOC by holding `p_now_kw` for `dt_s` seconds.
///
/// The regulation and schedule accumulators advance by their own components.
/// If the SOC would leave [0, 1] it is clamped, a saturation is counted, and
/// the clipped energy is removed from the two components in proportion to
/// their magnitudes.
pub fn update_soc(ev: &mut EvState, dt_s: f64) {
    let hours = dt_s / 3600.0;
    let mut e_sche = ev.p_sche_kw * hours;
    let mut e_regu = ev.p_regu_kw * hours;
    // The executed power is what moves the battery. Any gap left by a power
    // clamp belongs to the regulation component, or to the schedule when the
    // EV carried no regulation.
    let e_total = ev.p_now_kw * hours;
    let residual = e_total - (e_sche + e_regu);
    if ev.p_regu_kw != 0.0 {
        e_regu += residual;
    } else {
        e_sche += residual;
    }

    let raw = ev.soc + e_total / ev.e_rated_kwh;
    if (0.0..=1.0).contains(&raw) {
        ev.soc = raw;
    } else {
        let bound = raw.clamp(0.0, 1.0);
        let allowed = (bound - ev.soc) * ev.e_rated_kwh;
        let clipped = e_total - allowed;
        let weight = e_sche.abs() + e_regu.abs();
        if weight > 0.0 {
            let ws = e_sche.abs() / weight;
            e_sche -= clipped * ws;
            e_regu = allowed - e_sche;
        }
        ev.soc = bound;
        ev.soc_saturations += 1;
    }
    ev.e_sche_kwh += e_sche;
    ev.e_regu_kwh += e_regu;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(p: f64) -> EvState {
        let mut e = EvState::new(0, EvType::TypeIII, 0.5, 0.5, 24.0, 10.0, 8.0 * 3600.0, 17.0 * 3600.0);
        e.p_sche_kw = p;
        e.p_now_kw = p;
        e
    }

    #[test]
    fn one_hour_at_0p8_kw() {
        let mut e = ev(0.8);
        update_soc(&mut e, 3600.0);
        assert!((e.soc - 0.5 - 0.8 / 24.0).abs() < 1e-15);
        assert!((e.soc - 0.5 - 0.033_333_333_333_333_33).abs() < 1e-15);
    }

    #[test]
    fn zero_power_leaves_soc() {
        let mut e = ev(0.0);
        update_soc(&mut e, 4.0);
        assert_eq!(e.soc, 0.5);
    }

    #[test]
    fn antisymmetric_profile_nets_to_zero() {
        let mut e = ev(2.0);
        update_soc(&mut e, 3600.0);
        e.p_sche_kw = -2.0;
        e.p_now_kw = -2.0;
        update_soc(&mut e, 3600.0);
        assert!((e.soc - 0.5).abs() < 1e-15);
    }

    #[test]
    fn saturation_clamps_and_keeps_accounting() {
        let mut e = ev(4.0);
        e.p_regu_kw = 6.0;
        e.p_now_kw = 10.0;
        update_soc(&mut e, 3.0 * 3600.0);
        assert_eq!(e.soc, 1.0);
        assert_eq!(e.soc_saturations, 1);
        assert!(e.accounting_residual_kwh().abs() < 1e-9);
        // 12 kWh allowed, split 4:6
        assert!((e.e_sche_kwh - 4.8).abs() < 1e-9);
        assert!((e.e_regu_kwh - 7.2).abs() < 1e-9);
    }

    #[test]
    fn plug_window_is_half_open() {
        let e = ev(0.0);
        assert!(!plugged(&e, 7.0 * 3600.0 + 59.0 * 60.0));
        assert!(plugged(&e, 8.0 * 3600.0));
        assert!(!plugged(&e, 17.0 * 3600.0));
    }

    #[test]
    fn reference_soc_is_linear() {
        let e = EvState::new(1, EvType::TypeI, 0.4, 0.7, 24.0, 10.0, 0.0, 9.0 * 3600.0);
        assert!((e.reference_soc(4.5 * 3600.0) - 0.55).abs() < 1e-12);
        assert_eq!(e.reference_soc(-1.0), 0.4);
        assert_eq!(e.reference_soc(10.0 * 3600.0), 0.7);
    }
}

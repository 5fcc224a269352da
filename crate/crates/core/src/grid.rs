//! Two-area interconnected plant.
//!
//! Each area is an aggregate inertia with load damping, one SFR generator
//! block (governor and turbine lags following the AGC command) and one
//! primary-response block (dead-banded droop through a governor lag). The
//! areas exchange power through an integrating tie line. Inputs are held
//! constant over a step and the state advances with classical RK4.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    /// Tie-line bias control: ACE includes the frequency term.
    Tbc,
    /// Flat tie-line control: ACE is the tie-line deviation only.
    Ftc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AreaParams {
    /// Aggregate inertia, MW·s per Hz of deviation.
    pub inertia_mws: f64,
    pub damping_mw_per_hz: f64,
    /// Frequency bias in the ACE.
    pub bias_mw_per_hz: f64,
    pub pfc_deadband_hz: f64,
    /// Aggregate primary-response gain outside the dead band; 0 disables it.
    pub droop_mw_per_hz: f64,
    pub gov_time_const_s: f64,
    pub turb_time_const_s: f64,
    /// Symmetric limit of the SFR generator command.
    pub sfr_capacity_mw: f64,
    pub control_mode: ControlMode,
}

impl AreaParams {
    pub fn area_a() -> Self {
        Self {
            inertia_mws: 16320.0,
            damping_mw_per_hz: 2040.0,
            bias_mw_per_hz: 3400.0,
            pfc_deadband_hz: 0.033,
            droop_mw_per_hz: 3000.0,
            gov_time_const_s: 0.2,
            turb_time_const_s: 5.0,
            sfr_capacity_mw: 1500.0,
            control_mode: ControlMode::Tbc,
        }
    }

    pub fn area_b() -> Self {
        Self {
            inertia_mws: 54720.0,
            damping_mw_per_hz: 6840.0,
            sfr_capacity_mw: 3000.0,
            control_mode: ControlMode::Ftc,
            ..Self::area_a()
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let pos = [
            ("inertia_mws", self.inertia_mws),
            ("gov_time_const_s", self.gov_time_const_s),
            ("turb_time_const_s", self.turb_time_const_s),
        ];
        for (field, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(format!("{name}.{field} must be > 0")));
            }
        }
        let non_neg = [
            ("damping_mw_per_hz", self.damping_mw_per_hz),
            ("bias_mw_per_hz", self.bias_mw_per_hz),
            ("pfc_deadband_hz", self.pfc_deadband_hz),
            ("droop_mw_per_hz", self.droop_mw_per_hz),
            ("sfr_capacity_mw", self.sfr_capacity_mw),
        ];
        for (field, v) in non_neg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::validation(format!("{name}.{field} must be >= 0")));
            }
        }
        Ok(())
    }
}

impl Default for AreaParams {
    fn default() -> Self {
        Self::area_a()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TieLineParams {
    /// d(ΔP_tie)/dt per Hz of frequency difference, MW/(Hz·s).
    pub sync_coeff: f64,
}

impl Default for TieLineParams {
    fn default() -> Self {
        Self { sync_coeff: 200.0 }
    }
}

impl TieLineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sync_coeff > 0.0 && self.sync_coeff.is_finite()) {
            return Err(Error::validation("tie.sync_coeff must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AreaState {
    pub delta_f_hz: f64,
    /// Governor stage of the SFR block.
    pub p_gov_mw: f64,
    /// Turbine output of the SFR block.
    pub p_mech_sfr_mw: f64,
    pub p_pfc_mw: f64,
}

/// Per-area inputs, held constant over one plant step. All in MW.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Injection {
    pub load_mw: f64,
    pub wind_mw: f64,
    /// Net power delivered to the grid by the EV fleet (discharge positive).
    pub ev_mw: f64,
    /// SFR generator reference (generation increase positive).
    pub gen_command_mw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantSnapshot {
    pub time_s: f64,
    pub areas: [AreaState; 2],
    /// Tie-line deviation, positive = export from A to B.
    pub delta_p_tie_mw: f64,
}

/// Steady droop output of the dead-banded primary response.
pub fn pfc_response(delta_f_hz: f64, params: &AreaParams) -> f64 {
    let db = params.pfc_deadband_hz;
    if delta_f_hz.abs() <= db {
        0.0
    } else {
        -(delta_f_hz - db.copysign(delta_f_hz)) * params.droop_mw_per_hz
    }
}

type Vector = [f64; 9];

#[derive(Debug, Clone)]
pub struct Plant {
    params: [AreaParams; 2],
    tie: TieLineParams,
    state: PlantSnapshot,
    sanity_limit_hz: f64,
}

impl Plant {
    pub fn new(a: AreaParams, b: AreaParams, tie: TieLineParams, t0: f64, sanity_limit_hz: f64) -> Self {
        Self {
            params: [a, b],
            tie,
            state: PlantSnapshot { time_s: t0, areas: [AreaState::default(); 2], delta_p_tie_mw: 0.0 },
            sanity_limit_hz,
        }
    }

    pub fn snapshot(&self) -> PlantSnapshot {
        self.state
    }

    pub fn params(&self, area: usize) -> &AreaParams {
        &self.params[area]
    }

    /// Tie-line deviation as seen by `area` (export positive).
    pub fn tie_seen_by(&self, area: usize) -> f64 {
        if area == 0 {
            self.state.delta_p_tie_mw
        } else {
            -self.state.delta_p_tie_mw
        }
    }

    fn pack(&self) -> Vector {
        let [a, b] = self.state.areas;
        [
            a.delta_f_hz,
            a.p_gov_mw,
            a.p_mech_sfr_mw,
            a.p_pfc_mw,
            b.delta_f_hz,
            b.p_gov_mw,
            b.p_mech_sfr_mw,
            b.p_pfc_mw,
            self.state.delta_p_tie_mw,
        ]
    }

    fn unpack(&mut self, x: &Vector) {
        for (i, area) in self.state.areas.iter_mut().enumerate() {
            let o = 4 * i;
            *area = AreaState { delta_f_hz: x[o], p_gov_mw: x[o + 1], p_mech_sfr_mw: x[o + 2], p_pfc_mw: x[o + 3] };
        }
        self.state.delta_p_tie_mw = x[8];
    }

    fn derivative(&self, x: &Vector, inj: &[Injection; 2]) -> Vector {
        let mut dx = [0.0; 9];
        let tie = x[8];
        for i in 0..2 {
            let p = &self.params[i];
            let o = 4 * i;
            let (df, gov, mech, pfc) = (x[o], x[o + 1], x[o + 2], x[o + 3]);
            let tie_out = if i == 0 { tie } else { -tie };
            let u = &inj[i];
            let imbalance =
                mech + pfc - u.load_mw - u.wind_mw + u.ev_mw - p.damping_mw_per_hz * df - tie_out;
            dx[o] = imbalance / p.inertia_mws;
            dx[o + 1] = (u.gen_command_mw - gov) / p.gov_time_const_s;
            dx[o + 2] = (gov - mech) / p.turb_time_const_s;
            dx[o + 3] = (pfc_response(df, p) - pfc) / p.gov_time_const_s;
        }
        dx[8] = self.tie.sync_coeff * (x[0] - x[4]);
        dx
    }

    /// Advances both areas and the tie line by `dt` seconds.
    pub fn step(&mut self, inj: &[Injection; 2], dt: f64) -> Result<()> {
        let x = self.pack();
        let axpy = |a: &Vector, k: &Vector, h: f64| {
            let mut out = *a;
            for (o, kk) in out.iter_mut().zip(k) {
                *o += h * kk;
            }
            out
        };
        let k1 = self.derivative(&x, inj);
        let k2 = self.derivative(&axpy(&x, &k1, dt / 2.0), inj);
        let k3 = self.derivative(&axpy(&x, &k2, dt / 2.0), inj);
        let k4 = self.derivative(&axpy(&x, &k3, dt), inj);
        let mut next = x;
        for i in 0..9 {
            next[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        self.unpack(&next);
        self.state.time_s += dt;

        let finite = next.iter().all(|v| v.is_finite());
        let within = self.state.areas.iter().all(|a| a.delta_f_hz.abs() <= self.sanity_limit_hz);
        if !(finite && within) {
            return Err(Error::SanityLimit { time_s: self.state.time_s, snapshot: Box::new(self.state) });
        }
        Ok(())
    }
}

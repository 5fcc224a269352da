//! Control-center logic: ACE, the random EV share, the uncertain dispatch,
//! the EV/generator split and the generator PI.
//!
//! Sign convention: a generation deficit gives negative ACE, which calls for
//! regulation-up (EVs discharge, generators raise output).

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::grid::{AreaParams, ControlMode};
use crate::scenario::{DispatchPolicy, RatioDistribution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AceSample {
    pub ace: f64,
    /// EV share of the ACE.
    pub s_contr: f64,
    /// Generator share of the ACE.
    pub s_gener: f64,
    pub r_used: f64,
    pub time: f64,
}

pub fn compute_ace(delta_f_hz: f64, delta_p_tie_mw: f64, params: &AreaParams) -> f64 {
    match params.control_mode {
        ControlMode::Tbc => delta_p_tie_mw + params.bias_mw_per_hz * delta_f_hz,
        ControlMode::Ftc => delta_p_tie_mw,
    }
}

/// Draws the EV share ratio and clamps it into [0, 1].
pub fn sample_ratio<R: Rng + ?Sized>(policy: &DispatchPolicy, rng: &mut R) -> f64 {
    let r = match policy.distribution {
        RatioDistribution::Normal { mu, sigma2 } => {
            let sd = sigma2.sqrt();
            if sd == 0.0 {
                mu
            } else {
                Normal::new(mu, sd).expect("validated sigma").sample(rng)
            }
        }
        RatioDistribution::Uniform { lo, hi } => {
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..=hi)
            }
        }
        RatioDistribution::Constant { r } => r,
    };
    r.clamp(0.0, 1.0)
}

/// EV share of `ace` within the fleet's regulation capacity.
///
/// Inside the ACE dead band nothing is dispatched. Otherwise the EVs get
/// `r · min(|ace|, frc)` on the side selected by the ACE sign.
pub fn uncertain_dispatch(ace: f64, frc_up: f64, frc_down: f64, r: f64, deadband: f64) -> f64 {
    if ace.abs() <= deadband {
        0.0
    } else if ace <= 0.0 {
        -r * ace.abs().min(frc_up)
    } else {
        r * ace.min(frc_down)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("EV share {s_contr} MW is not a same-sign part of ACE {ace} MW")]
pub struct SplitError {
    pub ace: f64,
    pub s_contr: f64,
}

/// Splits `ace` into the EV share and the generator remainder.
pub fn split_tasks(ace: f64, s_contr: f64, time: f64, r_used: f64) -> Result<AceSample, SplitError> {
    let same_sign = s_contr == 0.0 || (s_contr.signum() == ace.signum());
    if !same_sign || s_contr.abs() > ace.abs() {
        return Err(SplitError { ace, s_contr });
    }
    Ok(AceSample { ace, s_contr, s_gener: ace - s_contr, r_used, time })
}

/// Positional PI with output saturation and conditional integration.
///
/// The output is in ACE sign convention: the generator reference is its
/// negation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PiController {
    pub kp: f64,
    pub ki: f64,
    pub limit: f64,
    integral: f64,
    saturated: bool,
}

impl PiController {
    pub fn new(kp: f64, ki: f64, limit: f64) -> Self {
        Self { kp, ki, limit, integral: 0.0, saturated: false }
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn saturated(&self) -> bool {
        self.saturated
    }

    /// One regulation step: integrate, compute, and freeze the integral if
    /// the output saturates.
    pub fn update(&mut self, error: f64, dt: f64) -> f64 {
        let trial = self.integral + error * dt;
        let out = self.kp * error + self.ki * trial;
        if out.abs() > self.limit {
            self.saturated = true;
            out.clamp(-self.limit, self.limit)
        } else {
            self.saturated = false;
            self.integral = trial;
            out
        }
    }
}

/// Free function form of [`PiController::update`].
pub fn pi_generator_command(s_gener: f64, pi: &mut PiController, dt_regu: f64) -> f64 {
    pi.update(s_gener, dt_regu)
}

/// Fixed-latency delay line at plant-step resolution.
///
/// A value pushed at step `n` is visible from step `n + delay_steps`; before
/// the first value matures the line reads `T::default()`.
#[derive(Debug, Clone)]
pub struct DelayLine<T> {
    delay_steps: u64,
    pending: VecDeque<(u64, T)>,
    current: T,
}

impl<T: Clone + Default> DelayLine<T> {
    pub fn new(delay_steps: usize) -> Self {
        Self { delay_steps: delay_steps as u64, pending: VecDeque::new(), current: T::default() }
    }

    pub fn push(&mut self, step: u64, value: T) {
        self.pending.push_back((step + self.delay_steps, value));
    }

    /// Value applied at plant step `step`.
    pub fn at(&mut self, step: u64) -> &T {
        while let Some((due, _)) = self.pending.front() {
            if *due <= step {
                let (_, v) = self.pending.pop_front().expect("front exists");
                self.current = v;
            } else {
                break;
            }
        }
        &self.current
    }
}

/// Convenience for scalar signals: push `value` computed at `now` and read the
/// value that applies at `now`.
pub fn delayed(line: &mut DelayLine<f64>, value: f64, now_step: u64) -> f64 {
    line.push(now_step, value);
    *line.at(now_step)
}

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ratio;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Wind-power fluctuation in area A: white noise through a first-order lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindSpec {
    pub enabled: bool,
    pub time_constant_s: f64,
    /// Stationary standard deviation of the filtered output.
    pub noise_std_mw: f64,
    /// Hold time of each white-noise draw; an integer multiple of dt_plant so
    /// the realization does not depend on the plant step.
    pub sample_interval_s: f64,
    pub seed_stream: u64,
}

impl Default for WindSpec {
    fn default() -> Self {
        Self {
            enabled: true,
            time_constant_s: 1.0,
            noise_std_mw: 15.0,
            sample_interval_s: 0.1,
            seed_stream: 0,
        }
    }
}

impl WindSpec {
    pub fn validate(&self, dt_plant: f64) -> Result<()> {
        if !(self.time_constant_s > 0.0) {
            return Err(Error::validation("wind.time_constant_s must be > 0"));
        }
        if !(self.noise_std_mw >= 0.0) {
            return Err(Error::validation("wind.noise_std_mw must be >= 0"));
        }
        if self.enabled && ratio(self.sample_interval_s, dt_plant).is_none() {
            return Err(Error::validation("wind.sample_interval_s must be an integer multiple of dt_plant"));
        }
        Ok(())
    }
}

/// Exact zero-order-hold step of `y' = (u - y) / tau`.
pub fn first_order_step(y: f64, u: f64, dt: f64, tau: f64) -> f64 {
    u + (y - u) * (-dt / tau).exp()
}

#[derive(Debug, Clone)]
pub struct WindFilter {
    spec: WindSpec,
    rng: ChaCha8Rng,
    y: f64,
    u: f64,
    input_std: f64,
    /// Time left on the current sample.
    hold_left: f64,
    started: bool,
}

impl WindFilter {
    pub fn new(spec: &WindSpec, seed: u64) -> Self {
        let a = (-spec.sample_interval_s / spec.time_constant_s).exp();
        let input_std = spec.noise_std_mw * ((1.0 + a) / (1.0 - a)).sqrt();
        let mut rng = stream_rng(seed, Stream::Wind, spec.seed_stream);
        let y = if spec.enabled {
            let z: f64 = StandardNormal.sample(&mut rng);
            spec.noise_std_mw * z
        } else {
            0.0
        };
        Self { spec: spec.clone(), rng, y, u: 0.0, input_std, hold_left: 0.0, started: false }
    }

    pub fn output(&self) -> f64 {
        self.y
    }

    /// Advances by `dt` and returns the value held over the step.
    ///
    /// The output is a sampled process: it changes only on the fixed
    /// `sample_interval_s` grid, where the lag is advanced exactly across one
    /// interval and a new input is drawn. Any plant step that divides the
    /// interval therefore sees the same piecewise-constant disturbance.
    pub fn step(&mut self, dt: f64) -> f64 {
        if !self.spec.enabled {
            return 0.0;
        }
        if self.hold_left <= 1e-9 {
            if self.started {
                self.y = first_order_step(self.y, self.u, self.spec.sample_interval_s, self.spec.time_constant_s);
            }
            let z: f64 = StandardNormal.sample(&mut self.rng);
            self.u = self.input_std * z;
            self.hold_left += self.spec.sample_interval_s;
            self.started = true;
        }
        self.hold_left -= dt;
        self.y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disabled_is_silent() {
        let spec = WindSpec { enabled: false, ..WindSpec::default() };
        let mut w = WindFilter::new(&spec, 1);
        assert!((0..1000).all(|_| w.step(0.1) == 0.0));
    }

    #[test]
    fn constant_input_step_response() {
        let mut y = 0.0;
        for i in 1..=50 {
            y = first_order_step(y, 10.0, 0.1, 1.0);
            let t = i as f64 * 0.1;
            assert!((y - 10.0 * (1.0 - (-t).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn output_std_and_correlation_time() {
        let spec = WindSpec { noise_std_mw: 10.0, ..WindSpec::default() };
        let mut w = WindFilter::new(&spec, 3);
        let xs: Vec<f64> = (0..400_000).map(|_| w.step(0.1)).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!((var.sqrt() - 10.0).abs() < 0.5, "std {}", var.sqrt());
        let acf = |lag: usize| {
            xs.iter().zip(&xs[lag..]).map(|(a, b)| (a - mean) * (b - mean)).sum::<f64>() / (n - lag as f64) / var
        };
        // First lag where the autocorrelation drops below 1/e.
        let tau = (1..100).find(|&l| acf(l) < (-1.0f64).exp()).unwrap() as f64 * 0.1;
        assert!((0.8..=1.3).contains(&tau), "correlation time {tau}");
    }

    #[test]
    fn realization_independent_of_plant_step() {
        let spec = WindSpec::default();
        let mut coarse = WindFilter::new(&spec, 8);
        let mut fine = WindFilter::new(&spec, 8);
        for _ in 0..1000 {
            let c = coarse.step(0.1);
            assert_eq!(fine.step(0.05), c);
            assert_eq!(fine.step(0.05), c);
        }
    }
}

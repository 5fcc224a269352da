use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ClockParams;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Area-A load deviation, zero-order hold between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile {
    /// `(seconds-of-day, MW)`, strictly increasing in time.
    pub samples: Vec<(f64, f64)>,
}

impl LoadProfile {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::validation("load profile has no samples"));
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::validation("load profile times must be strictly increasing"));
        }
        if samples.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::validation("load profile contains non-finite values"));
        }
        Ok(Self { samples })
    }

    pub fn constant(start: f64, mw: f64) -> Self {
        Self { samples: vec![(start, mw)] }
    }

    /// Deviation at `t`: the value of the last sample at or before `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.samples.partition_point(|&(ts, _)| ts <= t);
        if idx == 0 {
            self.samples[0].1
        } else {
            self.samples[idx - 1].1
        }
    }

    pub fn check_covers(&self, start: f64, _end: f64) -> Result<()> {
        if self.samples[0].0 > start {
            return Err(Error::validation(format!(
                "load profile starts at {} s, after the horizon start {start} s",
                self.samples[0].0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticLoadParams {
    pub sample_interval_s: f64,
    pub offset_mw: f64,
    /// Linear trend slope, from the horizon start.
    pub ramp_mw_per_h: f64,
    /// Time at which the ramp stops and the load holds its level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ramp_end_s: Option<f64>,
    /// Gaussian bump amplitude (morning or noon peak).
    pub peak_mw: f64,
    pub peak_time_s: f64,
    pub peak_width_s: f64,
    /// Stationary standard deviation of the noise component.
    pub noise_std_mw: f64,
    /// Correlation time of the first-order (AR(1)) noise; 0 gives white noise.
    pub noise_corr_time_s: f64,
}

impl Default for SyntheticLoadParams {
    fn default() -> Self {
        Self {
            sample_interval_s: 4.0,
            offset_mw: 0.0,
            ramp_mw_per_h: 0.0,
            ramp_end_s: None,
            peak_mw: 150.0,
            peak_time_s: 11.0 * 3600.0,
            peak_width_s: 1.5 * 3600.0,
            noise_std_mw: 35.0,
            noise_corr_time_s: 20.0,
        }
    }
}

impl SyntheticLoadParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_interval_s > 0.0) {
            return Err(Error::validation("load.sample_interval_s must be > 0"));
        }
        if !(self.noise_std_mw >= 0.0) || !(self.noise_corr_time_s >= 0.0) {
            return Err(Error::validation("load noise parameters must be >= 0"));
        }
        if self.peak_mw != 0.0 && !(self.peak_width_s > 0.0) {
            return Err(Error::validation("load.peak_width_s must be > 0 when peak_mw is set"));
        }
        Ok(())
    }

    /// Deterministic trend component at `t`.
    pub fn trend(&self, t: f64, start: f64) -> f64 {
        let ramp_t = self.ramp_end_s.map_or(t, |end| t.min(end));
        let mut v = self.offset_mw + self.ramp_mw_per_h * (ramp_t - start).max(0.0) / 3600.0;
        if self.peak_mw != 0.0 {
            let z = (t - self.peak_time_s) / self.peak_width_s;
            v += self.peak_mw * (-z * z).exp();
        }
        v
    }
}

/// Trend plus first-order filtered Gaussian noise, sampled on a fixed grid
/// spanning the horizon.
pub fn synthesize_load(params: &SyntheticLoadParams, clocks: &ClockParams, seed: u64) -> LoadProfile {
    let start = clocks.horizon_start_s;
    let n = ((clocks.horizon_end_s - start) / params.sample_interval_s).floor() as usize + 1;
    let mut rng = stream_rng(seed, Stream::Load, 0);
    let a = if params.noise_corr_time_s > 0.0 {
        (-params.sample_interval_s / params.noise_corr_time_s).exp()
    } else {
        0.0
    };
    let innov = params.noise_std_mw * (1.0 - a * a).sqrt();
    let mut x: f64 = {
        let z: f64 = StandardNormal.sample(&mut rng);
        params.noise_std_mw * z
    };
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = start + i as f64 * params.sample_interval_s;
        if i > 0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            x = a * x + innov * z;
        }
        samples.push((t, params.trend(t, start) + x));
    }
    LoadProfile { samples }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    time_s: f64,
    deviation_mw: f64,
}

/// Reads a `time_s,deviation_mw` CSV.
pub fn read_load_csv(path: &Path) -> Result<LoadProfile> {
    let err = |message: String| Error::LoadProfile { path: path.to_path_buf(), message };
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["time_s", "deviation_mw"] {
        return Err(err(format!("expected header `time_s,deviation_mw`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut samples = Vec::new();
    for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
        let row = row.map_err(|e| err(format!("row {}: {e}", i + 2)))?;
        samples.push((row.time_s, row.deviation_mw));
    }
    LoadProfile::new(samples).map_err(|e| err(e.to_string()))
}

pub fn write_load_csv(profile: &LoadProfile, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "time_s,deviation_mw")?;
    for (t, v) in &profile.samples {
        writeln!(w, "{t},{v}")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clocks() -> ClockParams {
        ClockParams::default()
    }

    #[test]
    fn flat_noiseless_profile_is_constant() {
        let p = SyntheticLoadParams { offset_mw: 100.0, peak_mw: 0.0, noise_std_mw: 0.0, ..Default::default() };
        let prof = synthesize_load(&p, &clocks(), 1);
        assert!(prof.samples.iter().all(|&(_, v)| v == 100.0));
        assert_eq!(prof.value_at(12.0 * 3600.0 + 1.3), 100.0);
    }

    #[test]
    fn ramp_holds_after_its_end() {
        let p = SyntheticLoadParams {
            ramp_mw_per_h: 100.0,
            ramp_end_s: Some(10.0 * 3600.0),
            peak_mw: 0.0,
            ..Default::default()
        };
        let start = 8.0 * 3600.0;
        assert_eq!(p.trend(start, start), 0.0);
        assert!((p.trend(9.0 * 3600.0, start) - 100.0).abs() < 1e-12);
        assert!((p.trend(16.0 * 3600.0, start) - 200.0).abs() < 1e-12);
    }

    #[test]
    fn reproducible_by_seed() {
        let p = SyntheticLoadParams::default();
        assert_eq!(synthesize_load(&p, &clocks(), 9), synthesize_load(&p, &clocks(), 9));
        assert_ne!(synthesize_load(&p, &clocks(), 9), synthesize_load(&p, &clocks(), 10));
    }

    #[test]
    fn detrended_std_matches_noise_std() {
        let p = SyntheticLoadParams { noise_std_mw: 50.0, noise_corr_time_s: 20.0, ..Default::default() };
        let c = clocks();
        let prof = synthesize_load(&p, &c, 4);
        let resid: Vec<f64> = prof
            .samples
            .iter()
            .map(|&(t, v)| v - p.trend(t, c.horizon_start_s))
            .collect();
        let n = resid.len() as f64;
        let mean = resid.iter().sum::<f64>() / n;
        let sd = (resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((sd - 50.0).abs() < 0.15 * 50.0, "sd {sd}");
    }

    #[test]
    fn zero_order_hold_lookup() {
        let prof = LoadProfile::new(vec![(0.0, 1.0), (10.0, 2.0), (20.0, 3.0)]).unwrap();
        assert_eq!(prof.value_at(0.0), 1.0);
        assert_eq!(prof.value_at(9.999), 1.0);
        assert_eq!(prof.value_at(10.0), 2.0);
        assert_eq!(prof.value_at(25.0), 3.0);
    }

    #[test]
    fn rejects_non_increasing_times() {
        assert!(LoadProfile::new(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
    }

    #[test]
    fn csv_round_trip_and_header_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("load.csv");
        let prof = LoadProfile::new(vec![(28800.0, 1.5), (28804.0, -2.25)]).unwrap();
        write_load_csv(&prof, &path).unwrap();
        assert_eq!(read_load_csv(&path).unwrap(), prof);

        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "t,mw\n0,1\n").unwrap();
        assert!(read_load_csv(&bad).is_err());
    }
}

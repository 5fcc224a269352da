//! Evaluation statistics: Max/Min/RMS of recorded series, final-hour SOC
//! deviation per EV and per type, and side-by-side strategy comparison.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::ev::EvType;
use crate::rng::{stream_rng, Stream};
use crate::scenario::Strategy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesStats {
    pub max: f64,
    pub min: f64,
    pub rms: f64,
    pub n: usize,
}

/// Streaming form of [`series_stats`].
#[derive(Debug, Clone, Copy)]
pub struct StatsAccumulator {
    max: f64,
    min: f64,
    sum_sq: f64,
    n: usize,
}

impl Default for StatsAccumulator {
    fn default() -> Self {
        Self { max: f64::NEG_INFINITY, min: f64::INFINITY, sum_sq: 0.0, n: 0 }
    }
}

impl StatsAccumulator {
    pub fn push(&mut self, x: f64) {
        self.max = self.max.max(x);
        self.min = self.min.min(x);
        self.sum_sq += x * x;
        self.n += 1;
    }

    pub fn finish(&self) -> Result<SeriesStats> {
        if self.n == 0 {
            return Err(Error::Metrics("statistics of an empty series".into()));
        }
        Ok(SeriesStats { max: self.max, min: self.min, rms: (self.sum_sq / self.n as f64).sqrt(), n: self.n })
    }
}

pub fn series_stats(samples: &[f64]) -> Result<SeriesStats> {
    let mut acc = StatsAccumulator::default();
    samples.iter().for_each(|&x| acc.push(x));
    acc.finish()
}

/// Deviation samples `(time_s, soc - reference)` of one EV.
#[derive(Debug, Clone, PartialEq)]
pub struct SocTrajectory {
    pub ev_id: u32,
    pub ev_type: EvType,
    pub deviations: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvDeviation {
    pub ev_id: u32,
    pub ev_type: EvType,
    pub rms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeDeviation {
    pub ev_type: EvType,
    pub count: usize,
    pub mean: f64,
    pub max: f64,
    /// The randomly chosen representative EV and its RMS.
    pub sample: Option<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocDeviationReport {
    pub window: (f64, f64),
    pub per_ev: Vec<EvDeviation>,
    pub per_type: [TypeDeviation; 3],
}

impl SocDeviationReport {
    /// Aggregates per-EV results. `pick_seed` selects the representative EVs.
    pub fn from_per_ev(window: (f64, f64), per_ev: Vec<EvDeviation>, pick_seed: u64) -> Self {
        let mut rng = stream_rng(pick_seed, Stream::Report, 0);
        let per_type = EvType::ALL.map(|t| {
            let of_type: Vec<&EvDeviation> = per_ev.iter().filter(|e| e.ev_type == t).collect();
            let count = of_type.len();
            let mean = if count == 0 { 0.0 } else { of_type.iter().map(|e| e.rms).sum::<f64>() / count as f64 };
            let max = of_type.iter().map(|e| e.rms).fold(0.0, f64::max);
            let sample = (count > 0).then(|| {
                let e = of_type[rng.random_range(0..count)];
                (e.ev_id, e.rms)
            });
            TypeDeviation { ev_type: t, count, mean, max, sample }
        });
        Self { window, per_ev, per_type }
    }

    pub fn fleet_mean(&self) -> f64 {
        if self.per_ev.is_empty() {
            return 0.0;
        }
        self.per_ev.iter().map(|e| e.rms).sum::<f64>() / self.per_ev.len() as f64
    }

    pub fn fleet_max(&self) -> f64 {
        self.per_ev.iter().map(|e| e.rms).fold(0.0, f64::max)
    }

    pub fn for_type(&self, t: EvType) -> &TypeDeviation {
        &self.per_type[t.index()]
    }
}

/// Per-EV RMS of the deviation samples that fall inside `window`.
///
/// `horizon` is the simulated interval; a window reaching outside it is an
/// error. Trajectories with no sample in the window are an error as well.
pub fn soc_deviation_rms(
    trajectories: &[SocTrajectory],
    window: (f64, f64),
    horizon: (f64, f64),
    pick_seed: u64,
) -> Result<SocDeviationReport> {
    let (start, end) = window;
    if !(start < end) || start < horizon.0 || end > horizon.1 {
        return Err(Error::Metrics(format!(
            "SOC window [{start}, {end}] must lie inside the horizon [{}, {}]",
            horizon.0, horizon.1
        )));
    }
    let mut per_ev = Vec::with_capacity(trajectories.len());
    for tr in trajectories {
        let inside: Vec<f64> =
            tr.deviations.iter().filter(|(t, _)| (start..=end).contains(t)).map(|&(_, d)| d).collect();
        if inside.is_empty() {
            return Err(Error::Metrics(format!("EV {} has no samples in the SOC window", tr.ev_id)));
        }
        per_ev.push(EvDeviation { ev_id: tr.ev_id, ev_type: tr.ev_type, rms: series_stats(&inside)?.rms });
    }
    Ok(SocDeviationReport::from_per_ev(window, per_ev, pick_seed))
}

/// Everything reported for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub strategy: Strategy,
    pub seed: u64,
    pub horizon: (f64, f64),
    pub ace: SeriesStats,
    pub freq: SeriesStats,
    pub soc_dev: SocDeviationReport,
    pub clamp_events: u64,
    pub soc_saturations: u64,
    pub max_conservation_residual: f64,
}

fn num(x: f64) -> String {
    format!("{x}")
}

impl MetricsSummary {
    /// Machine-readable `key=value` lines in a fixed order.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        put("strategy", self.strategy.label().to_string());
        put("seed", self.seed.to_string());
        put("horizon.start_s", num(self.horizon.0));
        put("horizon.end_s", num(self.horizon.1));
        for (prefix, unit, s) in [("ace", "mw", &self.ace), ("freq", "hz", &self.freq)] {
            put(&format!("{prefix}.max_{unit}"), num(s.max));
            put(&format!("{prefix}.min_{unit}"), num(s.min));
            put(&format!("{prefix}.rms_{unit}"), num(s.rms));
            put(&format!("{prefix}.samples"), s.n.to_string());
        }
        put("soc_dev.window_start_s", num(self.soc_dev.window.0));
        put("soc_dev.window_end_s", num(self.soc_dev.window.1));
        put("soc_dev.rms_pu.fleet_mean", num(self.soc_dev.fleet_mean()));
        put("soc_dev.rms_pu.fleet_max", num(self.soc_dev.fleet_max()));
        for td in &self.soc_dev.per_type {
            let key = td.ev_type.key();
            if let Some((id, rms)) = td.sample {
                put(&format!("soc_dev.rms_pu.{key}"), num(rms));
                put(&format!("soc_dev.sample_ev.{key}"), id.to_string());
            }
            put(&format!("soc_dev.mean_pu.{key}"), num(td.mean));
            put(&format!("soc_dev.max_pu.{key}"), num(td.max));
        }
        put("ev.clamp_events", self.clamp_events.to_string());
        put("ev.soc_saturations", self.soc_saturations.to_string());
        put("conservation.max_rel_residual", num(self.max_conservation_residual));
        out
    }

    /// Human-readable report.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "strategy {}  seed {}", self.strategy.label(), self.seed);
        let _ = writeln!(out, "{:<22}{:>14}{:>14}{:>14}", "", "Max", "Min", "RMS");
        let _ = writeln!(out, "{:<22}{:>14.4}{:>14.4}{:>14.4}", "ACE (MW)", self.ace.max, self.ace.min, self.ace.rms);
        let _ = writeln!(out, "{:<22}{:>14.6}{:>14.6}{:>14.6}", "freq dev. (Hz)", self.freq.max, self.freq.min, self.freq.rms);
        let _ = writeln!(
            out,
            "SOC deviation RMS over [{:.0} s, {:.0} s], pu",
            self.soc_dev.window.0, self.soc_dev.window.1
        );
        for td in &self.soc_dev.per_type {
            let sample = td.sample.map(|(id, r)| format!("EV {id}: {r:.6}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "  {:<10} n={:<6} mean {:.6}  max {:.6}  {}",
                td.ev_type.label(),
                td.count,
                td.mean,
                td.max,
                sample
            );
        }
        let _ = writeln!(out, "EV power clamps {}  SOC saturations {}", self.clamp_events, self.soc_saturations);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub metric: &'static str,
    /// One value per strategy, in input order.
    pub values: Vec<f64>,
    /// Reduction versus the baseline in percent, one per strategy.
    pub reduction_pct: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub labels: Vec<String>,
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn row(&self, metric: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<27}", "metric");
        for l in &self.labels {
            let _ = write!(out, "{l:>14}{:>10}", "chg %");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:<27}", r.metric);
            for (v, p) in r.values.iter().zip(&r.reduction_pct) {
                // A near-zero baseline gives a meaningless percentage.
                let chg = if p.is_finite() && p.abs() < 1e4 { format!("{:.1}", -p) } else { "-".into() };
                let _ = write!(out, "{v:>14.6}{chg:>10}");
            }
            out.push('\n');
        }
        out
    }
}

/// Reduction of `value` relative to `baseline`, in percent.
pub fn relative_reduction_pct(baseline: f64, value: f64) -> f64 {
    if baseline == 0.0 {
        if value == 0.0 {
            0.0
        } else {
            f64::NAN
        }
    } else {
        100.0 * (baseline - value) / baseline.abs()
    }
}

/// Side-by-side comparison against the W/O V2G entry.
///
/// All summaries must share seed and horizon, and one of them must carry
/// the baseline label.
pub fn compare_strategies(runs: &[(String, MetricsSummary)]) -> Result<ComparisonTable> {
    let baseline_label = Strategy::WoV2g.label();
    let base = runs
        .iter()
        .find(|(l, _)| l == baseline_label)
        .map(|(_, s)| s)
        .ok_or_else(|| Error::Metrics(format!("comparison needs a `{baseline_label}` baseline")))?;
    for (label, s) in runs {
        if s.seed != base.seed {
            return Err(Error::Metrics(format!("`{label}` uses seed {} but the baseline uses {}", s.seed, base.seed)));
        }
        if s.horizon != base.horizon {
            return Err(Error::Metrics(format!("`{label}` covers a different horizon than the baseline")));
        }
    }
    type Getter = fn(&MetricsSummary) -> f64;
    let metrics: [(&'static str, Getter); 7] = [
        ("ace.max_mw", |s| s.ace.max),
        ("ace.min_mw", |s| s.ace.min),
        ("ace.rms_mw", |s| s.ace.rms),
        ("freq.max_hz", |s| s.freq.max),
        ("freq.min_hz", |s| s.freq.min),
        ("freq.rms_hz", |s| s.freq.rms),
        ("soc_dev.rms_pu.fleet_mean", |s| s.soc_dev.fleet_mean()),
    ];
    let rows = metrics
        .iter()
        .map(|&(metric, get)| {
            let b = get(base);
            let values: Vec<f64> = runs.iter().map(|(_, s)| get(s)).collect();
            let reduction_pct = values.iter().map(|&v| relative_reduction_pct(b, v)).collect();
            ComparisonRow { metric, values, reduction_pct }
        })
        .collect();
    Ok(ComparisonTable {
        labels: runs.iter().map(|(l, _)| l.clone()).collect(),
        baseline: baseline_label.to_string(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_examples() {
        let s = series_stats(&[1.0, -2.0, 2.0]).unwrap();
        assert_eq!((s.max, s.min, s.n), (2.0, -2.0, 3));
        assert!((s.rms - 3f64.sqrt()).abs() < 1e-15);
        let s = series_stats(&[0.0; 5]).unwrap();
        assert_eq!((s.max, s.min, s.rms), (0.0, 0.0, 0.0));
        let s = series_stats(&[-1.5; 4]).unwrap();
        assert_eq!((s.max, s.min, s.rms), (-1.5, -1.5, 1.5));
        assert!(series_stats(&[]).is_err());
    }

    fn ramp(id: u32, f: impl Fn(f64) -> f64) -> SocTrajectory {
        let deviations = (0..=900).map(|k| {
            let t = 57600.0 + 4.0 * k as f64;
            (t, f((t - 57600.0) / 3600.0))
        });
        SocTrajectory { ev_id: id, ev_type: EvType::TypeI, deviations: deviations.collect() }
    }

    #[test]
    fn soc_deviation_examples() {
        let w = (57600.0, 61200.0);
        let h = (28800.0, 61200.0);
        let r = soc_deviation_rms(&[ramp(0, |_| 0.001)], w, h, 1).unwrap();
        assert!((r.per_ev[0].rms - 0.001).abs() < 1e-15);
        let r = soc_deviation_rms(&[ramp(0, |_| 0.0)], w, h, 1).unwrap();
        assert_eq!(r.per_ev[0].rms, 0.0);
        // Sampled ramp: the discrete RMS of 0..0.002 over 901 points,
        // sqrt(sum k^2 / 901) * 0.002/900, is within 0.2% of 0.002/sqrt(3).
        let r = soc_deviation_rms(&[ramp(0, |x| 0.002 * x)], w, h, 1).unwrap();
        let discrete = 0.002 / 900.0 * ((900.0 * 901.0 * 1801.0 / 6.0) / 901.0f64).sqrt();
        assert!((r.per_ev[0].rms - discrete).abs() < 1e-15);
        assert!((r.per_ev[0].rms - 0.002 / 3f64.sqrt()).abs() / 0.001155 < 2e-3);
    }

    #[test]
    fn soc_window_outside_horizon_rejected() {
        let e = soc_deviation_rms(&[ramp(0, |_| 0.0)], (57600.0, 64800.0), (28800.0, 61200.0), 1);
        assert!(e.is_err());
    }

    #[test]
    fn per_type_aggregation() {
        let per_ev = vec![
            EvDeviation { ev_id: 0, ev_type: EvType::TypeI, rms: 0.001 },
            EvDeviation { ev_id: 1, ev_type: EvType::TypeI, rms: 0.003 },
            EvDeviation { ev_id: 2, ev_type: EvType::TypeIII, rms: 0.0 },
        ];
        let r = SocDeviationReport::from_per_ev((0.0, 1.0), per_ev, 9);
        let t1 = r.for_type(EvType::TypeI);
        assert_eq!(t1.count, 2);
        assert!((t1.mean - 0.002).abs() < 1e-15);
        assert_eq!(t1.max, 0.003);
        assert!(matches!(t1.sample, Some((0, _)) | Some((1, _))));
        assert_eq!(r.for_type(EvType::TypeII).sample, None);
        assert!((r.fleet_mean() - 0.004 / 3.0).abs() < 1e-15);
    }

    fn summary(strategy: Strategy, seed: u64, ace_rms: f64) -> MetricsSummary {
        let st = SeriesStats { max: 1.0, min: -1.0, rms: ace_rms, n: 3 };
        MetricsSummary {
            strategy,
            seed,
            horizon: (28800.0, 61200.0),
            ace: st,
            freq: st,
            soc_dev: SocDeviationReport::from_per_ev((57600.0, 61200.0), vec![], 0),
            clamp_events: 0,
            soc_saturations: 0,
            max_conservation_residual: 0.0,
        }
    }

    #[test]
    fn comparison_examples() {
        let runs = vec![
            ("W/O V2G".to_string(), summary(Strategy::WoV2g, 1, 127.35)),
            ("CS1".to_string(), summary(Strategy::Cs1, 1, 88.13)),
        ];
        let t = compare_strategies(&runs).unwrap();
        let row = t.row("ace.rms_mw").unwrap();
        assert!((row.reduction_pct[1] - 30.797).abs() < 1e-3);
        assert_eq!(row.reduction_pct[0], 0.0);
        assert!(t.render().contains("ace.rms_mw"));

        let same = vec![
            ("W/O V2G".to_string(), summary(Strategy::WoV2g, 1, 50.0)),
            ("W/O V2G again".to_string(), summary(Strategy::WoV2g, 1, 50.0)),
        ];
        assert_eq!(compare_strategies(&same).unwrap().row("ace.rms_mw").unwrap().reduction_pct[1], 0.0);
    }

    #[test]
    fn comparison_guards() {
        let no_base = vec![("CS1".to_string(), summary(Strategy::Cs1, 1, 1.0))];
        assert!(compare_strategies(&no_base).is_err());
        let cross_seed = vec![
            ("W/O V2G".to_string(), summary(Strategy::WoV2g, 1, 1.0)),
            ("CS1".to_string(), summary(Strategy::Cs1, 2, 1.0)),
        ];
        assert!(compare_strategies(&cross_seed).is_err());
    }

    #[test]
    fn kv_has_documented_keys() {
        let kv = summary(Strategy::Cs2, 3, 2.0).to_kv();
        for key in ["ace.max_mw=", "ace.min_mw=", "ace.rms_mw=2\n", "freq.max_hz=", "freq.min_hz=", "freq.rms_hz="] {
            assert!(kv.contains(key), "{key} missing");
        }
    }
}

//! Aggregator level: total fleet capacity and proportional task allocation.

/// Regulation capacity pair, in MW. `s_up` is dischargeable headroom,
/// `s_down` chargeable headroom.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FrcReport {
    pub s_up: f64,
    pub s_down: f64,
    pub station_id: u32,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StationTask {
    /// Grid-side task in MW; negative is regulation-up (discharge).
    pub task: f64,
    pub station_id: u32,
    pub time: f64,
}

/// Componentwise sum of station reports, in the given order.
///
/// `None` entries are stations whose upload did not arrive; they count as
/// zero capacity.
pub fn total_frc<'a, I>(reports: I) -> FrcReport
where
    I: IntoIterator<Item = Option<&'a FrcReport>>,
{
    let mut total = FrcReport::default();
    for r in reports.into_iter().flatten() {
        total.s_up += r.s_up;
        total.s_down += r.s_down;
        total.time = r.time;
    }
    total
}

/// Splits `s_contr` across stations in proportion to the capacity on the
/// side the task needs. A zero total on that side yields all-zero tasks.
pub fn allocate_to_stations(s_contr: f64, reports: &[FrcReport], totals: &FrcReport) -> Vec<StationTask> {
    let shares = proportional_shares(s_contr, reports.iter().map(|r| (r.s_up, r.s_down)), totals.s_up, totals.s_down);
    reports
        .iter()
        .zip(shares)
        .map(|(r, task)| StationTask { task, station_id: r.station_id, time: r.time })
        .collect()
}

/// Shared proportional rule: regulation-up tasks (`amount <= 0`) follow the
/// up capacities, regulation-down tasks the down capacities.
pub(crate) fn proportional_shares(
    amount: f64,
    caps: impl Iterator<Item = (f64, f64)>,
    total_up: f64,
    total_down: f64,
) -> impl Iterator<Item = f64> {
    let (use_up, total) = if amount <= 0.0 { (true, total_up) } else { (false, total_down) };
    let scale = if total > 0.0 && amount != 0.0 { amount / total } else { 0.0 };
    caps.map(move |(up, down)| if use_up { scale * up } else { scale * down })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rep(id: u32, up: f64, down: f64) -> FrcReport {
        FrcReport { s_up: up, s_down: down, station_id: id, time: 0.0 }
    }

    #[test]
    fn totals() {
        let r = [rep(0, 10.0, 6.0), rep(1, 4.0, 14.0)];
        let t = total_frc(r.iter().map(Some));
        assert_eq!((t.s_up, t.s_down), (14.0, 20.0));
        let t = total_frc(std::iter::empty());
        assert_eq!((t.s_up, t.s_down), (0.0, 0.0));
        let many: Vec<FrcReport> = (0..100).map(|i| rep(i, 3.5, 2.1)).collect();
        let t = total_frc(many.iter().map(Some));
        assert!((t.s_up - 350.0).abs() < 1e-9 && (t.s_down - 210.0).abs() < 1e-9);
    }

    #[test]
    fn missing_report_counts_as_zero() {
        let a = rep(0, 1.0, 2.0);
        let t = total_frc([Some(&a), None]);
        assert_eq!((t.s_up, t.s_down), (1.0, 2.0));
    }

    #[test]
    fn allocation_examples() {
        let r = [rep(0, 300.0, 0.0), rep(1, 700.0, 0.0)];
        let tot = total_frc(r.iter().map(Some));
        let tasks: Vec<f64> = allocate_to_stations(-100.0, &r, &tot).iter().map(|t| t.task).collect();
        assert!((tasks[0] + 30.0).abs() < 1e-12 && (tasks[1] + 70.0).abs() < 1e-12);

        let tasks = allocate_to_stations(0.0, &r, &tot);
        assert!(tasks.iter().all(|t| t.task == 0.0));

        let r = [rep(0, 5.0, 0.0), rep(1, 5.0, 9.0), rep(2, 5.0, 0.0)];
        let tot = total_frc(r.iter().map(Some));
        let tasks: Vec<f64> = allocate_to_stations(50.0, &r, &tot).iter().map(|t| t.task).collect();
        assert_eq!(tasks, vec![0.0, 50.0, 0.0]);
    }

    #[test]
    fn zero_total_gives_zero_tasks() {
        let r = [rep(0, 0.0, 3.0)];
        let tot = total_frc(r.iter().map(Some));
        assert_eq!(allocate_to_stations(-10.0, &r, &tot)[0].task, 0.0);
    }
}

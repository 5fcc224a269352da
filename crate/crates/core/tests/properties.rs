use proptest::prelude::*;
use v2g_sfr::aggregator::{allocate_to_stations, total_frc, FrcReport};
use v2g_sfr::control_center::{split_tasks, uncertain_dispatch};
use v2g_sfr::ev::{update_soc, EvState, EvType};
use v2g_sfr::grid::{AreaParams, Injection, Plant, TieLineParams};
use v2g_sfr::metrics::{series_stats, soc_deviation_rms, SocTrajectory};
use v2g_sfr::scenario::{generate_fleet, FleetSpec, LoadProfile, TypeCounts};
use v2g_sfr::station::{allocate_to_evs, ev_capacity, grid_side_kw, StationState};

const T0: f64 = 8.0 * 3600.0;
const T1: f64 = 17.0 * 3600.0;

fn reports() -> impl Strategy<Value = Vec<FrcReport>> {
    prop::collection::vec((0.0..50.0f64, 0.0..50.0f64), 1..30).prop_map(|caps| {
        caps.into_iter()
            .enumerate()
            .map(|(i, (up, down))| FrcReport { s_up: up, s_down: down, station_id: i as u32, time: T0 })
            .collect()
    })
}

fn ev_with_schedule(id: u32, p_max: f64, p_sche: f64) -> EvState {
    let mut ev = EvState::new(id, EvType::TypeIII, 0.5, 0.5, 24.0, p_max, T0, T1);
    ev.p_sche_kw = p_sche;
    ev
}

proptest! {
    #[test]
    fn split_conserves_and_respects_frc(
        ace in -500.0..500.0f64,
        up in 0.0..300.0f64,
        down in 0.0..300.0f64,
        r in 0.0..=1.0f64,
    ) {
        let s = uncertain_dispatch(ace, up, down, r, 20.0);
        let sample = split_tasks(ace, s, 0.0, r).unwrap();
        prop_assert!((sample.s_contr + sample.s_gener - ace).abs() <= 4.0 * f64::EPSILON * ace.abs());
        if ace < 0.0 {
            prop_assert!(s <= 0.0 && -s <= up);
        } else {
            prop_assert!(s >= 0.0 && s <= down);
        }
        if ace.abs() <= 20.0 {
            prop_assert_eq!(sample.s_contr, 0.0);
            prop_assert_eq!(sample.s_gener, ace);
        }
    }

    #[test]
    fn dispatch_nondecreasing_in_ratio(
        ace in -500.0..500.0f64,
        up in 0.0..300.0f64,
        down in 0.0..300.0f64,
        r1 in 0.0..=1.0f64,
        r2 in 0.0..=1.0f64,
    ) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let a = uncertain_dispatch(ace, up, down, lo, 20.0).abs();
        let b = uncertain_dispatch(ace, up, down, hi, 20.0).abs();
        prop_assert!(a <= b);
    }

    #[test]
    fn station_allocation_partitions_exactly(reps in reports(), frac in -1.0..1.0f64, scale in 0.01..100.0f64) {
        let total = total_frc(reps.iter().map(Some));
        let s_contr = if frac <= 0.0 { frac * total.s_up } else { frac * total.s_down };
        let tasks = allocate_to_stations(s_contr, &reps, &total);
        let sum: f64 = tasks.iter().map(|t| t.task).sum();
        let cap_total = if s_contr <= 0.0 { total.s_up } else { total.s_down };
        if cap_total > 0.0 {
            prop_assert!((sum - s_contr).abs() <= 1e-9 * s_contr.abs().max(1e-300));
        }
        for (t, r) in tasks.iter().zip(&reps) {
            let cap = if s_contr <= 0.0 { r.s_up } else { r.s_down };
            prop_assert!(t.task.abs() <= cap * (1.0 + 1e-12));
        }
        // Proportionality on the active side.
        for (a, ra) in tasks.iter().zip(&reps) {
            for (b, rb) in tasks.iter().zip(&reps) {
                let (ca, cb) = if s_contr <= 0.0 { (ra.s_up, rb.s_up) } else { (ra.s_down, rb.s_down) };
                if ca > 0.0 && cb > 0.0 && b.task != 0.0 {
                    prop_assert!((a.task / b.task - ca / cb).abs() <= 1e-9 * (ca / cb));
                }
            }
        }
        // Scale equivariance.
        let scaled: Vec<FrcReport> =
            reps.iter().map(|r| FrcReport { s_up: r.s_up * scale, s_down: r.s_down * scale, ..*r }).collect();
        let tasks2 = allocate_to_stations(s_contr, &scaled, &total_frc(scaled.iter().map(Some)));
        for (a, b) in tasks.iter().zip(&tasks2) {
            prop_assert!((a.task - b.task).abs() <= 1e-9 * a.task.abs().max(1e-12));
        }
    }

    #[test]
    fn ev_allocation_conserves_grid_side_task(
        evs in prop::collection::vec((3.0..22.0f64, -1.3..1.3f64), 1..60),
        frac in -1.0..1.0f64,
        eta_ch in 0.8..1.0f64,
        eta_disch in 0.8..1.0f64,
    ) {
        let evs: Vec<EvState> =
            evs.iter().enumerate().map(|(i, &(pm, f))| ev_with_schedule(i as u32, pm, f * pm)).collect();
        let caps: Vec<_> = evs.iter().map(|e| ev_capacity(e, T0)).collect();
        for (ev, c) in evs.iter().zip(&caps) {
            if ev.p_sche_kw.abs() >= ev.p_max_kw {
                prop_assert!(!c.participating);
                prop_assert_eq!((c.p_up_kw, c.p_down_kw), (0.0, 0.0));
            } else {
                prop_assert!((c.p_up_kw + c.p_down_kw - 2.0 * ev.p_max_kw).abs() <= 4.0 * f64::EPSILON * ev.p_max_kw);
            }
        }
        let mut station = StationState::new(0, evs, eta_ch, eta_disch);
        let frc = station.upload(T0);
        let task = if frac <= 0.0 { frac * eta_disch * frc.s_up } else { frac * frc.s_down };
        let regu = allocate_to_evs(task, &station.capacities, eta_ch, eta_disch);
        let grid: f64 = regu.iter().map(|&p| grid_side_kw(p, eta_ch, eta_disch)).sum::<f64>() / 1000.0;
        if frc.s_up > 0.0 {
            prop_assert!((grid - task).abs() <= 1e-9 * task.abs().max(1e-12));
        }
        for (c, p) in station.capacities.iter().zip(&regu) {
            if !c.participating {
                prop_assert_eq!(*p, 0.0);
            }
        }
    }

    #[test]
    fn soc_stays_in_unit_interval(powers in prop::collection::vec((-50.0..50.0f64, 1.0..3600.0f64), 1..100)) {
        let mut ev = EvState::new(0, EvType::TypeI, 0.5, 0.6, 24.0, 50.0, 0.0, 1e9);
        for (p, dt) in powers {
            ev.p_now_kw = p;
            ev.p_sche_kw = p / 2.0;
            ev.p_regu_kw = p / 2.0;
            update_soc(&mut ev, dt);
            prop_assert!((0.0..=1.0).contains(&ev.soc));
            prop_assert!(ev.accounting_residual_kwh().abs() < 1e-9);
        }
    }

    #[test]
    fn stats_permutation_invariant(xs in prop::collection::vec(-1e3..1e3f64, 1..200), seed in any::<u64>()) {
        let a = series_stats(&xs).unwrap();
        let mut ys = xs.clone();
        // Deterministic shuffle driven by the seed.
        let mut s = seed | 1;
        for i in (1..ys.len()).rev() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            ys.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let b = series_stats(&ys).unwrap();
        prop_assert_eq!((a.max, a.min, a.n), (b.max, b.min, b.n));
        prop_assert!((a.rms - b.rms).abs() <= 1e-12 * a.rms.max(1e-300));
        prop_assert!(a.min <= a.max && a.rms >= 0.0 && a.rms <= a.max.abs().max(a.min.abs()) * (1.0 + 1e-12));
    }

    #[test]
    fn shifted_deviation_rms_bound(devs in prop::collection::vec(-0.01..0.01f64, 901), d in -0.02..0.02f64) {
        let track = |shift: f64| SocTrajectory {
            ev_id: 0,
            ev_type: EvType::TypeI,
            deviations: devs.iter().enumerate().map(|(k, &x)| (57600.0 + 4.0 * k as f64, x + shift)).collect(),
        };
        let w = (57600.0, 61200.0);
        let h = (T0, T1);
        let base = soc_deviation_rms(&[track(0.0)], w, h, 0).unwrap().per_ev[0].rms;
        let shifted = soc_deviation_rms(&[track(d)], w, h, 0).unwrap().per_ev[0].rms;
        prop_assert!(shifted >= d.abs() - base - 1e-15);
    }

    #[test]
    fn fleet_respects_type_bounds(seed in any::<u64>()) {
        let spec = FleetSpec {
            stations_per_aggregator: 3,
            type_counts: TypeCounts { type_i: 20, type_ii: 8, type_iii: 5 },
            ..FleetSpec::default()
        };
        let fleet = generate_fleet(&spec, seed);
        prop_assert_eq!(&fleet, &generate_fleet(&spec, seed));
        for ev in fleet.iter() {
            let d = spec.soc.for_type(ev.ev_type);
            prop_assert!(d.initial.lower <= ev.soc_init && ev.soc_init <= d.initial.upper);
            match &d.expected {
                Some(e) => prop_assert!(e.lower <= ev.soc_exp && ev.soc_exp <= e.upper),
                None => prop_assert_eq!(ev.soc_exp, ev.soc_init),
            }
            if ev.ev_type == EvType::TypeIII {
                prop_assert_eq!(ev.soc_exp - ev.soc_init, 0.0);
            }
        }
    }

    #[test]
    fn load_zero_order_hold(values in prop::collection::vec(-100.0..100.0f64, 2..50), frac in 0.0..1.0f64) {
        let samples: Vec<(f64, f64)> = values.iter().enumerate().map(|(i, &v)| (T0 + 4.0 * i as f64, v)).collect();
        let prof = LoadProfile::new(samples.clone()).unwrap();
        for w in samples.windows(2) {
            let t = w[0].0 + frac * (w[1].0 - w[0].0);
            prop_assert_eq!(prof.value_at(t), w[0].1);
        }
    }

    #[test]
    fn mirrored_steps_on_symmetric_areas(step in -200.0..200.0f64) {
        let a = AreaParams::area_a();
        let mut plant = Plant::new(a.clone(), a, TieLineParams::default(), 0.0, 1.0);
        let inj = Injection { load_mw: step, ..Injection::default() };
        for _ in 0..300 {
            plant.step(&[inj, inj], 0.1).unwrap();
            let s = plant.snapshot();
            prop_assert_eq!(s.areas[0].delta_f_hz, s.areas[1].delta_f_hz);
            prop_assert_eq!(s.delta_p_tie_mw, 0.0);
            prop_assert_eq!(plant.tie_seen_by(0), -plant.tie_seen_by(1));
        }
    }
}

//! Writing and re-reading run artifacts.

use std::path::PathBuf;

use tether_core::export::{parse_trace_csv, parse_triggers_csv, raster_csv, trace_csv, triggers_csv};
use tether_core::{load_scenario, replay_check, run};

fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

#[test]
fn round_trip_preserves_states_and_certification() {
    for name in ["scenario_single.cfg", "scenario_double.cfg"] {
        let cfg = load_scenario(path(name)).unwrap();
        let out = run(&cfg).unwrap();
        let trace = parse_trace_csv(&trace_csv(&out.trace, &cfg, 12), &cfg).unwrap();
        let triggers = parse_triggers_csv(&triggers_csv(&out.triggers, &cfg, 12), &cfg).unwrap();
        assert_eq!(trace.samples.len(), out.trace.samples.len());
        assert_eq!(triggers.len(), out.triggers.len());
        for (a, b) in trace.samples.iter().zip(&out.trace.samples) {
            for (xa, xb) in a.x.iter().zip(&b.x) {
                assert!((xa - xb).amax() <= 1e-10 * xb.amax().max(1.0));
            }
        }
        let replayed = replay_check(&trace, &triggers, &cfg).unwrap();
        let names = |r: &tether_core::Report| r.checks.iter().map(|c| (c.name, c.passed)).collect::<Vec<_>>();
        assert_eq!(names(&replayed), names(&out.report), "{name}");
    }
}

#[test]
fn trigger_rows_are_sorted_by_time_then_agent() {
    let cfg = load_scenario(path("scenario_single.cfg")).unwrap();
    let out = run(&cfg).unwrap();
    let text = triggers_csv(&out.triggers, &cfg, 12);
    let rows: Vec<(f64, usize)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let mut c = l.split(',');
            let a = c.next().unwrap().parse().unwrap();
            (c.next().unwrap().parse().unwrap(), a)
        })
        .collect();
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0 || (w[0].0 == w[1].0 && w[0].1 < w[1].1)));
    assert_eq!(&rows[..3], &[(0.0, 1), (0.0, 2), (0.0, 3)]);
}

#[test]
fn trace_header_and_raster_layout() {
    let cfg = load_scenario(path("scenario_double.cfg")).unwrap();
    let out = run(&cfg).unwrap();
    let text = trace_csv(&out.trace, &cfg, 12);
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("t,x1_1,x1_2,x2_1,x2_2,x3_1,x3_2,q1_1,q1_2,q2_1,q2_2,q3_1,q3_2,dist_1_2,dist_1_3,dist_2_3"));
    let raster = raster_csv(&out.triggers, 12);
    assert_eq!(raster.lines().count(), out.triggers.len() + 1);
}

#[test]
fn wrong_dimensions_are_rejected() {
    let single = load_scenario(path("scenario_single.cfg")).unwrap();
    let double = load_scenario(path("scenario_double.cfg")).unwrap();
    let out = run(&double).unwrap();
    assert!(parse_trace_csv(&trace_csv(&out.trace, &double, 12), &single).is_err());
}

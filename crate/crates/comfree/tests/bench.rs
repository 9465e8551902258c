use std::collections::BTreeMap;
use std::path::Path;

use comfree::bench::*;
use comfree::scenes;
use comfree_core::{Body, Scene, SimConfig};

fn read_column(path: &Path, key: &str, value: &str) -> BTreeMap<String, Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader.headers().unwrap().clone();
    let ki = header.iter().position(|h| h == key).unwrap();
    let vi = header.iter().position(|h| h == value).unwrap();
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in reader.records() {
        let row = row.unwrap();
        out.entry(row[ki].to_string()).or_default().push(row[vi].parse().unwrap());
    }
    out
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[test]
fn penetration_stats_match_the_written_csv() {
    let dir = tempfile::tempdir().unwrap();
    let gains = [(0.1, 0.001), (0.5, 0.005)];
    let report = bench_penetration(&SimConfig::default(), &gains, 300, &scenes::drop_pile, dir.path()).unwrap();
    let columns = read_column(&dir.path().join("penetration.csv"), "setting", "penetration_mm");
    assert_eq!(columns.len(), 2);
    for (setting, values) in columns {
        let m = report.metric_named(&format!("penetration_mm {setting}")).unwrap();
        let (mean, std) = mean_std(&values);
        assert_eq!(m.count, values.len());
        assert!((m.mean - mean).abs() <= 1e-12 * mean.abs().max(1.0), "{setting}: {} vs {mean}", m.mean);
        assert!((m.std - std).abs() <= 1e-12 * std.max(1.0));
    }
    assert!(report.passed(), "{}", report.summary());
}

#[test]
fn empty_scene_flags_no_contacts() {
    let dir = tempfile::tempdir().unwrap();
    let empty = |cfg: SimConfig| Scene::new(vec![Body::ground(0.0)], cfg);
    let report = bench_penetration(&SimConfig::default(), &[(0.1, 0.001)], 10, &empty, dir.path()).unwrap();
    assert!(report.flags.iter().any(|f| f == "NoContacts"));
    assert_eq!(report.metrics[0].count, 0);
}

#[test]
fn negative_friction_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = DecayParams { mu: vec![-0.01], ..DecayParams::torsion() };
    assert!(matches!(bench_torsion(&SimConfig::default(), &p, dir.path()), Err(BenchError::Validation(_))));
    assert!(matches!(bench_rolling(&SimConfig::default(), &DecayParams { mu: vec![-0.01], ..DecayParams::rolling() }, 0.0, dir.path()), Err(BenchError::Validation(_))));
}

#[test]
fn stiffer_torsion_friction_stops_sooner() {
    let dir = tempfile::tempdir().unwrap();
    let p = DecayParams { mu: vec![0.0, 0.01, 0.05], ..DecayParams::torsion() };
    let report = bench_torsion(&SimConfig::default(), &p, dir.path()).unwrap();
    assert!(report.passed(), "{}", report.summary());
    let t1 = report.metric_named("time_to_rest_s mu=0.01").unwrap().mean;
    let t5 = report.metric_named("time_to_rest_s mu=0.05").unwrap().mean;
    assert!(t5 < t1);
}

#[test]
fn airborne_cylinder_keeps_its_speed_until_touchdown() {
    let dir = tempfile::tempdir().unwrap();
    let p = DecayParams { mu: vec![0.01], max_steps: 100, stride: 1, ..DecayParams::rolling() };
    bench_rolling(&SimConfig::default(), &p, 0.05, dir.path()).unwrap();
    let speeds = &read_column(&dir.path().join("rolling.csv"), "mu", "speed")["0.01"];
    // Falling 5 cm takes about 0.1 s, i.e. 50 steps.
    assert!(speeds[..45].iter().all(|&v| v == speeds[0]), "{:?}", &speeds[..45]);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let grid = vec![StabilitySetting { dt: 0.002, k_user: 0.1, d_user: 0.001 }, StabilitySetting { dt: 0.02, k_user: 0.1, d_user: 0.001 }];
    for dir in [&a, &b] {
        bench_stability(&SimConfig::default(), &grid, dir.path()).unwrap();
        let p = ScalingParams { n_envs: vec![1, 3], warmup: 20, steps: 20 };
        bench_scaling(&SimConfig::default(), &p, dir.path()).unwrap();
    }
    for file in ["stability.csv", "scaling.csv", "scaling_state.csv"] {
        assert_eq!(std::fs::read(a.path().join(file)).unwrap(), std::fs::read(b.path().join(file)).unwrap(), "{file}");
    }
}

#[test]
fn stability_headline_settings_pass() {
    let dir = tempfile::tempdir().unwrap();
    let base = SimConfig::default();
    let grid = vec![StabilitySetting { dt: 0.002, k_user: 0.1, d_user: 0.001 }, StabilitySetting { dt: 0.02, k_user: 0.1, d_user: 0.001 }];
    let report = bench_stability(&base, &grid, dir.path()).unwrap();
    assert_eq!(report.checks.len(), 2);
    assert!(report.passed(), "{}", report.summary());
}

#[test]
fn throughput_report_lists_every_rung() {
    let dir = tempfile::tempdir().unwrap();
    let p = ThroughputParams { n_envs: vec![1, 4], steps: 60, ..ThroughputParams::default() };
    let report = bench_throughput(&SimConfig::default(), &p, dir.path()).unwrap();
    assert_eq!(report.metrics.len(), 2);
    assert!(report.metrics.iter().all(|m| m.count == 60 && m.mean > 0.0));
    // The comparison needs both the 32- and 64-env rungs.
    assert!(report.checks.is_empty());
    let json = dir.path().join("report.json");
    report.write_json(&json).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(parsed["id"], "throughput");
}

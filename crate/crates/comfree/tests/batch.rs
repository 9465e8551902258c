use comfree::{load_scene, replicate_envs, save_scene, scenes};
use comfree_core::{Body, ExternalWrench, GeomShape, Scene, SimConfig, Vec3};

fn ball_drop(height: f64) -> Scene {
    let ball = Body::dynamic("ball", GeomShape::Sphere { radius: 0.05 }, 1.0, Vec3::new(0.0, 0.0, 0.05 + height));
    Scene::new(vec![Body::ground(0.0), ball], SimConfig::default())
}

#[test]
fn free_fall_touches_down_on_time() {
    let mut world = replicate_envs(&ball_drop(1.0), 1, None).unwrap();
    let stats = world.run(200, 1, |_, _| {}).unwrap();
    assert!(stats.iter().all(|s| s.contacts == 0));
    let stats = world.run(100, 1, |_, _| {}).unwrap();
    let first = stats.iter().find(|s| s.contacts > 0).expect("touchdown").step;
    let t = first as f64 * 0.002;
    let analytic = (2.0 * 1.0 / 9.81f64).sqrt();
    assert!((t - analytic).abs() < 0.004, "touchdown at {t}, free fall predicts {analytic}");
}

#[test]
fn run_records_every_step() {
    let mut world = replicate_envs(&scenes::small_pile(SimConfig::default()), 2, None).unwrap();
    let mut seen = Vec::new();
    let stats = world.run(1000, 100, |step, _| seen.push(step)).unwrap();
    assert_eq!(stats.len(), 1000);
    assert_eq!(stats.last().unwrap().step, 1000);
    assert_eq!(seen, (1..=10).map(|k| k * 100).collect::<Vec<u64>>());
    assert!(stats.iter().all(|s| s.kinetic_energy.len() == 2));
}

#[test]
fn zero_steps_or_envs_rejected() {
    let scene = ball_drop(0.1);
    assert!(replicate_envs(&scene, 0, None).is_err());
    let mut world = replicate_envs(&scene, 1, None).unwrap();
    assert!(world.run(0, 1, |_, _| {}).is_err());
}

#[test]
fn environments_do_not_interact() {
    let scene = scenes::small_pile(SimConfig::default());
    let mut world = replicate_envs(&scene, 3, None).unwrap();
    world.set_external(1, 2, ExternalWrench { force: Vec3::new(5.0, 0.0, 0.0), torque: Vec3::ZERO });
    world.run(300, 1, |_, _| {}).unwrap();
    let mut alone = replicate_envs(&scene, 1, None).unwrap();
    alone.run(300, 1, |_, _| {}).unwrap();
    assert_eq!(world.state(0), alone.state(0));
    assert_eq!(world.state(2), alone.state(0));
    assert_ne!(world.state(1), alone.state(0));
}

#[test]
fn worker_count_does_not_change_results() {
    let scene = scenes::small_pile(SimConfig::default());
    let mut reference = None;
    for threads in [1, 2, 3] {
        let mut world = replicate_envs(&scene, 5, Some(4)).unwrap();
        world.set_threads(threads);
        let stats = world.run(200, 1, |_, _| {}).unwrap();
        let contacts: Vec<usize> = stats.iter().map(|s| s.contacts).collect();
        let run = (world.states(), contacts);
        match &reference {
            None => reference = Some(run),
            Some(r) => assert!(*r == run, "{threads} workers diverged"),
        }
    }
}

#[test]
fn resting_box_loses_its_energy() {
    let cube = Body::dynamic("cube", GeomShape::Box { half_extents: Vec3::splat(0.05) }, 1.0, Vec3::new(0.0, 0.0, 0.05));
    let scene = Scene::new(vec![Body::ground(0.0), cube], SimConfig::default());
    let mut world = replicate_envs(&scene, 1, None).unwrap();
    let stats = world.run(2000, 1, |_, _| {}).unwrap();
    let ke = stats.last().unwrap().kinetic_energy[0];
    assert!(ke < 1e-8, "kinetic energy at rest {ke}");
    let z = world.state(0).bodies[1].pos.z;
    assert!(z > 0.04 && z < 0.05, "resting height {z}");
}

#[test]
fn jitter_has_requested_variance() {
    let ball = Body::dynamic("ball", GeomShape::Sphere { radius: 0.05 }, 1.0, Vec3::new(0.0, 0.0, 1.0));
    let scene = Scene::new(vec![Body::ground(0.0), ball], SimConfig::default());
    let world = replicate_envs(&scene, 512, Some(17)).unwrap();
    let samples: Vec<f64> = (0..512).flat_map(|k| world.state(k).bodies[1].vel.to_array()).collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((0.5e-3..=1.5e-3).contains(&var), "jitter variance {var}");
    assert_eq!(world.state(0).bodies[0].vel, Vec3::ZERO);

    let again = replicate_envs(&scene, 512, Some(17)).unwrap();
    assert_eq!(again.states(), world.states());
    let plain = replicate_envs(&scene, 2, None).unwrap();
    assert_eq!(plain.state(1).bodies[1].vel, Vec3::ZERO);
}

#[test]
fn scene_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pile.json");
    let mut cfg = SimConfig::default();
    cfg.impedance.k_user = 0.3;
    cfg.dt = 0.001;
    let scene = scenes::drop_pile(cfg);
    save_scene(&scene, &path).unwrap();
    let loaded = load_scene(&path).unwrap();
    assert_eq!(loaded, scene);
    assert!(load_scene(dir.path().join("missing.json")).is_err());
}

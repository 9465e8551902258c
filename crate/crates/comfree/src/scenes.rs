//! Built-in benchmark and demo scenes.

use std::f64::consts::FRAC_PI_2;

use comfree_core::{Body, FrictionParams, GeomShape, Quat, Scene, SimConfig, Vec3};

/// Edge length scale of the pile primitives, m.
pub const PILE_SIZE: f64 = 0.05;
const PILE_MASS: f64 = 0.1;

fn pile_primitive(kind: usize, name: String, pos: Vec3) -> Body {
    let s = PILE_SIZE / 2.0;
    match kind % 3 {
        0 => Body::dynamic(name, GeomShape::Sphere { radius: s }, PILE_MASS, pos),
        1 => Body::dynamic(name, GeomShape::Box { half_extents: Vec3::splat(s) }, PILE_MASS, pos),
        _ => Body::dynamic(name, GeomShape::Capsule { radius: 0.6 * s, half_length: 0.4 * s }, PILE_MASS, pos)
            .with_orientation(Quat::from_axis_angle(Vec3::X, FRAC_PI_2)),
    }
}

/// `layers` stacked `rows × rows` arrays of mixed primitives (sphere, box, capsule) above the ground.
///
/// Bodies in a layer sit on a grid with 1.4× size pitch and successive layers are
/// offset by a quarter pitch so the pile collapses instead of stacking cleanly.
pub fn primitive_pile(rows: usize, layers: usize, config: SimConfig) -> Scene {
    let pitch = 1.4 * PILE_SIZE;
    let mut bodies = vec![Body::ground(0.0)];
    let half = (rows as f64 - 1.0) / 2.0;
    for l in 0..layers {
        let shift = if l % 2 == 1 { 0.25 * pitch } else { 0.0 };
        for i in 0..rows {
            for j in 0..rows {
                let pos = Vec3::new(
                    (i as f64 - half) * pitch + shift,
                    (j as f64 - half) * pitch + shift,
                    PILE_SIZE + l as f64 * 1.3 * PILE_SIZE,
                );
                let kind = i + j + l;
                bodies.push(pile_primitive(kind, format!("p{l}_{i}_{j}"), pos));
            }
        }
    }
    Scene::new(bodies, config)
}

/// The drop scene: three layers of 3×3 primitives.
pub fn drop_pile(config: SimConfig) -> Scene {
    primitive_pile(3, 3, config)
}

/// Three 2×2 layers: the per-environment scene of the scaling and throughput runs.
pub fn small_pile(config: SimConfig) -> Scene {
    primitive_pile(2, 3, config)
}

pub const TORSION_RADIUS: f64 = 0.02;
pub const TORSION_MASS: f64 = 0.1;

/// Sphere resting on the ground and spinning about the vertical with rate `omega_z`.
pub fn spinning_sphere(mu_tor: f64, omega_z: f64, config: SimConfig) -> Scene {
    let friction = FrictionParams::new(1.0, mu_tor, 0.0);
    let ball = Body::dynamic("ball", GeomShape::Sphere { radius: TORSION_RADIUS }, TORSION_MASS, Vec3::new(0.0, 0.0, TORSION_RADIUS))
        .with_friction(friction)
        .with_velocity(Vec3::ZERO, Vec3::new(0.0, 0.0, omega_z));
    Scene::new(vec![Body::ground(0.0).with_friction(friction), ball], config)
}

pub const ROLL_RADIUS: f64 = 0.02;
pub const ROLL_HALF_LENGTH: f64 = 0.03;
pub const ROLL_MASS: f64 = 0.1;

/// Cylinder lying along world y, rolling along +x at `speed` without slip; bottom `lift` above the ground.
pub fn rolling_cylinder(mu_rol: f64, speed: f64, lift: f64, config: SimConfig) -> Scene {
    let friction = FrictionParams::new(1.0, 0.0, mu_rol);
    let cyl = Body::dynamic(
        "cylinder",
        GeomShape::Cylinder { radius: ROLL_RADIUS, half_length: ROLL_HALF_LENGTH },
        ROLL_MASS,
        Vec3::new(0.0, 0.0, ROLL_RADIUS + lift),
    )
    .with_orientation(Quat::from_axis_angle(Vec3::X, FRAC_PI_2))
    .with_friction(friction)
    .with_velocity(Vec3::new(speed, 0.0, 0.0), Vec3::new(0.0, speed / ROLL_RADIUS, 0.0));
    Scene::new(vec![Body::ground(0.0).with_friction(friction), cyl], config)
}

pub const CUBE_HALF: f64 = 0.05;

/// Cube released above the ground with `v = (2, 0, 0)` and `ω = (0.1, 0.1, 0.1)`.
pub fn sliding_cube(config: SimConfig) -> Scene {
    let cube = Body::dynamic("cube", GeomShape::Box { half_extents: Vec3::splat(CUBE_HALF) }, 1.0, Vec3::new(0.0, 0.0, 0.15))
        .with_velocity(Vec3::new(2.0, 0.0, 0.0), Vec3::splat(0.1));
    Scene::new(vec![Body::ground(0.0), cube], config)
}

/// Body indices of the push task.
pub const PUSH_GROUND: usize = 0;
pub const PUSH_BOX: usize = 1;
pub const PUSH_PUSHER: usize = 2;
pub const PUSH_BOX_HALF: f64 = 0.03;
pub const PUSHER_RADIUS: f64 = 0.015;

pub const PUSHER_MASS: f64 = 0.01;

/// Planar push: a frictionless sphere hovering just above a low-friction floor shoves a box.
///
/// The pusher needs a constant upward force of `PUSHER_MASS · g` to hover.
pub fn push_task(config: SimConfig) -> Scene {
    let floor = FrictionParams::new(0.1, 0.001, 0.0001);
    let ground = Body::ground(0.0).with_friction(floor);
    let boxed = Body::dynamic("box", GeomShape::Box { half_extents: Vec3::splat(PUSH_BOX_HALF) }, 0.03, Vec3::new(0.0, 0.0, PUSH_BOX_HALF));
    let pusher = Body::dynamic(
        "pusher",
        GeomShape::Sphere { radius: PUSHER_RADIUS },
        PUSHER_MASS,
        Vec3::new(-PUSH_BOX_HALF - PUSHER_RADIUS - 0.01, 0.0, PUSHER_RADIUS + 0.002),
    )
    .with_friction(FrictionParams::FRICTIONLESS);
    Scene::new(vec![ground, boxed, pusher], config)
}

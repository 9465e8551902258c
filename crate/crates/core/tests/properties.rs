use comfree_core::collision::{build_tangent_frame, narrowphase, Contact};
use comfree_core::math::{Mat3, Quat, Vec3};
use comfree_core::rigid::{integrate_pose, world_inertia_inverse, SpatialInertia};
use comfree_core::scene::{Body, FrictionParams, GeomShape, ImpedanceConfig};
use comfree_core::solver::*;
use comfree_core::world::BodyState;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn rand_vec(rng: &mut ChaCha8Rng, s: f64) -> Vec3 {
    Vec3::new(rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s))
}

fn rand_quat(rng: &mut ChaCha8Rng) -> Quat {
    Quat::from_axis_angle(unit(rng), rng.random_range(0.0..std::f64::consts::TAU))
}

/// Eigenvalues of a symmetric 3x3 matrix via the trigonometric closed form, ascending.
fn sym_eigenvalues(a: &Mat3) -> [f64; 3] {
    let m = &a.m;
    let p1 = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
    let q = a.trace() / 3.0;
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return [q; 3];
    }
    let b = a.add(&Mat3::IDENTITY.scale(-q)).scale(1.0 / p);
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let mut e = [e1, 3.0 * q - e1 - e3, e3];
    e.sort_by(f64::total_cmp);
    e
}

#[test]
fn quaternion_norm_survives_1e5_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut q = Quat::IDENTITY;
    let mut p = Vec3::ZERO;
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let w = rand_vec(&mut rng, 50.0);
        let dt = rng.random_range(1e-4..0.05);
        (p, q) = integrate_pose(p, q, Vec3::ZERO, w, dt).unwrap();
        worst = worst.max((q.norm() - 1.0).abs());
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn world_inverse_inertia_is_a_similarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..2000 {
        let d = Vec3::new(rng.random_range(0.1..3.0), rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
        let body = rotate_sym(Mat3::from_diagonal(d), rand_quat(&mut rng));
        let si = SpatialInertia::new(1.0, body);
        let inv_body = si.inverse_body().unwrap();
        let w = world_inertia_inverse(&si, rand_quat(&mut rng)).unwrap();
        assert!(w.asymmetry() <= 1e-12, "{}", w.asymmetry());
        let (ew, eb) = (sym_eigenvalues(&w), sym_eigenvalues(&inv_body));
        for k in 0..3 {
            assert!((ew[k] - eb[k]).abs() < 1e-9, "{ew:?} {eb:?}");
        }
    }
}

fn rotate_sym(a: Mat3, q: Quat) -> Mat3 {
    let r = q.to_mat3();
    let m = r.mul_mat(&a).mul_mat(&r.transpose());
    m.add(&m.transpose()).scale(0.5)
}

#[test]
fn tangent_frames_are_orthonormal() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..1000 {
        let n = unit(&mut rng);
        let (t1, t2) = build_tangent_frame(n);
        assert!(t1.dot(n).abs() < 1e-12 && t2.dot(n).abs() < 1e-12);
        assert!((t1.cross(t2) - n).norm() < 1e-9);
        assert!((t1.norm() - 1.0).abs() < 1e-12 && (t2.norm() - 1.0).abs() < 1e-12);
    }
}

fn random_contact(rng: &mut ChaCha8Rng, mu: FrictionParams) -> Contact {
    let normal = unit(rng);
    let (tangent1, tangent2) = build_tangent_frame(normal);
    Contact {
        body_a: 0,
        body_b: 1,
        point: rand_vec(rng, 0.2),
        normal,
        tangent1,
        tangent2,
        phi: rng.random_range(-0.004..0.001),
        friction: mu,
    }
}

fn random_friction(rng: &mut ChaCha8Rng) -> FrictionParams {
    let pick = |rng: &mut ChaCha8Rng, hi: f64| if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.0..hi) };
    FrictionParams::new(pick(rng, 1.5), pick(rng, 0.05), pick(rng, 0.05))
}

#[test]
fn jacobian_matches_finite_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let h = 1e-5;
    for _ in 0..500 {
        let c = random_contact(&mut rng, FrictionParams::default());
        let (ca, cb) = (rand_vec(&mut rng, 0.3), rand_vec(&mut rng, 0.3));
        let (qa, qb) = (rand_quat(&mut rng), rand_quat(&mut rng));
        let (va, wa, vb, wb) = (rand_vec(&mut rng, 2.0), rand_vec(&mut rng, 5.0), rand_vec(&mut rng, 2.0), rand_vec(&mut rng, 5.0));
        let jac = ContactJacobian::new(&c, ca, cb);
        let (vc, wc) = jac.contact_velocity(va, wa, vb, wb);

        // Material points coincident with the contact point, carried by each body.
        let ra_body = qa.inverse_rotate(c.point - ca);
        let rb_body = qb.inverse_rotate(c.point - cb);
        let at = |t: f64| {
            let qa_t = Quat::from_rotation_vector(wa * t).mul(qa);
            let qb_t = Quat::from_rotation_vector(wb * t).mul(qb);
            let pa = ca + va * t + qa_t.rotate(ra_body);
            let pb = cb + vb * t + qb_t.rotate(rb_body);
            (pb - pa, qa_t, qb_t)
        };
        let (dp, qa_p, qb_p) = at(h);
        let (dm, qa_m, qb_m) = at(-h);
        let rel_v = (dp - dm) / (2.0 * h);
        // Relative rotation rate from the quaternion derivative: ω = 2·q̇·q*.
        let omega = |qp: Quat, qm: Quat, q0: Quat| {
            let d = Quat::new((qp.w - qm.w) / (2.0 * h), (qp.x - qm.x) / (2.0 * h), (qp.y - qm.y) / (2.0 * h), (qp.z - qm.z) / (2.0 * h));
            d.mul(q0.conjugate()).vector() * 2.0
        };
        let rel_w = omega(qb_p, qb_m, qb) - omega(qa_p, qa_m, qa);
        let fd_vc = Vec3::new(rel_v.dot(c.normal), rel_v.dot(c.tangent1), rel_v.dot(c.tangent2));
        let fd_wc = Vec3::new(rel_w.dot(c.normal), rel_w.dot(c.tangent1), rel_w.dot(c.tangent2));
        assert!((vc - fd_vc).norm() < 1e-8, "{vc:?} {fd_vc:?}");
        assert!((wc - fd_wc).norm() < 1e-8, "{wc:?} {fd_wc:?}");
    }
}

struct Draw {
    contact: Contact,
    facets: Vec<DualConeFacet>,
    gains: ImpedanceGains,
    v: [(Vec3, Vec3); 2],
    dt: f64,
}

fn random_draw(rng: &mut ChaCha8Rng) -> Draw {
    let mu = random_friction(rng);
    let contact = random_contact(rng, mu);
    let jac = ContactJacobian::new(&contact, rand_vec(rng, 0.3), rand_vec(rng, 0.3));
    let layout = FacetLayout::new(2 * rng.random_range(2..5), 2 * rng.random_range(1..5)).unwrap();
    let mut facets = Vec::new();
    build_facets(0, &contact, &jac, &layout, &mut facets);
    let dt = rng.random_range(1e-4..0.02);
    let cfg = ImpedanceConfig::with_gains(rng.random_range(0.01..1.0), rng.random_range(0.0..0.05));
    let gains = ImpedanceGains::new(&cfg, rng.random_range(1e-3..100.0), dt);
    let v = [(rand_vec(rng, 3.0), rand_vec(rng, 10.0)), (rand_vec(rng, 3.0), rand_vec(rng, 10.0))];
    Draw { contact, facets, gains, v, dt }
}

fn solve(d: &Draw, facets: &[DualConeFacet]) -> Vec<f64> {
    let [(va, wa), (vb, wb)] = d.v;
    facets.iter().map(|f| facet_impulse(f, va, wa, vb, wb, &d.gains, d.dt)).collect()
}

#[test]
fn cone_membership_and_nonnegativity() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..10_000 {
        let d = random_draw(&mut rng);
        let l = solve(&d, &d.facets);
        assert!(l.iter().all(|&x| x >= 0.0));
        let w = reconstruct_wrench(&d.contact, &d.facets, &l);
        assert!(w.cone_slack() >= -1e-9, "{w:?}");
        assert!(w.channel_cone_slack() >= -1e-9, "{w:?}");
    }
}

#[test]
fn facet_order_does_not_change_impulses() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..1000 {
        let d = random_draw(&mut rng);
        let base = solve(&d, &d.facets);
        let mut perm: Vec<usize> = (0..d.facets.len()).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let shuffled: Vec<_> = perm.iter().map(|&i| d.facets[i]).collect();
        let l = solve(&d, &shuffled);
        for (k, &i) in perm.iter().enumerate() {
            assert_eq!(l[k].to_bits(), base[i].to_bits());
        }
    }
}

#[test]
fn satisfied_separating_facets_get_no_impulse() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut checked = 0;
    while checked < 500 {
        let d = random_draw(&mut rng);
        let [(va, wa), (vb, wb)] = d.v;
        let ok = d.facets.iter().all(|f| {
            let s = f.row.apply(va, wa, vb, wb);
            s >= 0.0 && s * d.dt + f.phi >= 0.0
        });
        if !ok {
            continue;
        }
        checked += 1;
        assert!(solve(&d, &d.facets).iter().all(|&l| l == 0.0));
    }
}

#[test]
fn linear_impulses_are_equal_and_opposite() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..2000 {
        let d = random_draw(&mut rng);
        let l = solve(&d, &d.facets);
        let mut p = [GeneralizedImpulse::default(); 2];
        accumulate_impulses(&d.facets, &l, &[d.contact], &mut p);
        let scale = 1.0 + p[0].linear.norm();
        assert!((p[0].linear + p[1].linear).norm() <= 1e-12 * scale);
    }
}

proptest! {
    #[test]
    fn scaling_r_depends_on_gap_over_width(phi in -0.01f64..0.01, w in 1e-5f64..0.01, m in 0.05f64..0.95, p in 1.0f64..5.0) {
        let a = ImpedanceConfig { width: w, midpoint: m, power: p, ..Default::default() };
        let b = ImpedanceConfig { width: 2.0 * w, ..a };
        prop_assert_eq!(scaling_r(phi, &a).to_bits(), scaling_r(2.0 * phi, &b).to_bits());
        let r = scaling_r(phi, &a);
        prop_assert!(r >= a.r_min && r <= a.r_max);
    }

    #[test]
    fn gamma_is_monotone_and_bounded(x in 0.0f64..1.0, dx in 0.0f64..0.5, m in 0.05f64..0.95, p in 1.0f64..5.0) {
        let y = (x + dx).min(1.0);
        let (gx, gy) = (scaling_gamma(x, m, p), scaling_gamma(y, m, p));
        prop_assert!((0.0..=1.0).contains(&gx));
        prop_assert!(gy >= gx - 1e-15);
    }

    #[test]
    fn facet_directions_are_symmetric_units(half in 1usize..16) {
        let n = 2 * half;
        for ch in [Channel::Tangential, Channel::Rolling, Channel::Torsional] {
            let d = facet_directions(ch, n).unwrap();
            for x in &d {
                prop_assert!((x[0].hypot(x[1]) - 1.0).abs() < 1e-15);
                prop_assert!(d.iter().any(|y| (y[0] + x[0]).abs() < 1e-15 && (y[1] + x[1]).abs() < 1e-15));
            }
        }
    }
}

// Brute-force surface sampler for the narrowphase oracle.

type Surface = Box<dyn Fn(f64, f64) -> Vec3>;

/// Unit sphere in spherical coordinates; `swap` moves the poles from z to x so every
/// point has a chart where it is far from a coordinate singularity.
fn sphere_chart(u: f64, v: f64, swap: bool) -> Vec3 {
    let (th, ph) = (u * std::f64::consts::TAU, v * std::f64::consts::PI);
    let p = Vec3::new(ph.sin() * th.cos(), ph.sin() * th.sin(), ph.cos());
    if swap {
        Vec3::new(p.z, p.x, p.y)
    } else {
        p
    }
}

/// Parametric surface over `[0,1]²` in world coordinates (face index folded into `u` for boxes).
fn surface(geom: GeomShape, s: BodyState) -> Vec<Surface> {
    let pos = s.pos;
    let q = s.orient;
    let tau = std::f64::consts::TAU;
    match geom {
        GeomShape::Sphere { radius } => [false, true]
            .into_iter()
            .map(|swap| -> Surface { Box::new(move |u, v| pos + sphere_chart(u, v, swap) * radius) })
            .collect(),
        GeomShape::Box { half_extents: h } => {
            let mut faces: Vec<Surface> = Vec::new();
            for axis in 0..3 {
                for sign in [-1.0, 1.0] {
                    faces.push(Box::new(move |u, v| {
                        let a = [2.0 * u - 1.0, 2.0 * v - 1.0];
                        let local = match axis {
                            0 => Vec3::new(sign * h.x, a[0] * h.y, a[1] * h.z),
                            1 => Vec3::new(a[0] * h.x, sign * h.y, a[1] * h.z),
                            _ => Vec3::new(a[0] * h.x, a[1] * h.y, sign * h.z),
                        };
                        pos + q.rotate(local)
                    }));
                }
            }
            faces
        }
        GeomShape::Capsule { radius, half_length } => {
            let mut parts: Vec<Surface> = Vec::new();
            for sign in [-1.0, 1.0] {
                for swap in [false, true] {
                    parts.push(Box::new(move |u, v| {
                        let local = sphere_chart(u, v, swap) * radius + Vec3::new(0.0, 0.0, sign * half_length);
                        pos + q.rotate(local)
                    }));
                }
            }
            parts.push(Box::new(move |u, v| {
                let th = u * tau;
                pos + q.rotate(Vec3::new(radius * th.cos(), radius * th.sin(), (2.0 * v - 1.0) * half_length))
            }));
            parts
        }
        GeomShape::Cylinder { radius, half_length } => {
            let mut parts: Vec<Surface> = Vec::new();
            for sign in [-1.0, 1.0] {
                parts.push(Box::new(move |u, v| {
                    let th = u * tau;
                    pos + q.rotate(Vec3::new(v * radius * th.cos(), v * radius * th.sin(), sign * half_length))
                }));
            }
            parts.push(Box::new(move |u, v| {
                let th = u * tau;
                pos + q.rotate(Vec3::new(radius * th.cos(), radius * th.sin(), (2.0 * v - 1.0) * half_length))
            }));
            parts
        }
        GeomShape::HalfSpace { .. } => unreachable!(),
    }
}

/// Exact signed distance to a shape (negative inside).
fn sdf(geom: GeomShape, s: BodyState, x: Vec3) -> f64 {
    let l = s.orient.inverse_rotate(x - s.pos);
    match geom {
        GeomShape::HalfSpace { normal, offset } => normal.dot(x) - offset,
        GeomShape::Sphere { radius } => l.norm() - radius,
        GeomShape::Box { half_extents: h } => {
            let d = l.abs() - h;
            let outside = d.max(Vec3::ZERO).norm();
            outside + d.x.max(d.y).max(d.z).min(0.0)
        }
        GeomShape::Capsule { radius, half_length } => {
            let z = l.z.clamp(-half_length, half_length);
            (l - Vec3::new(0.0, 0.0, z)).norm() - radius
        }
        GeomShape::Cylinder { .. } => unreachable!(),
    }
}

/// Minimum of `f` over a parametric patch: dense grid, then repeated local refinement of the best seeds.
fn minimize_patch(f: &dyn Fn(f64, f64) -> f64, periodic_u: bool) -> f64 {
    let n = 64;
    let mut grid = Vec::with_capacity((n + 1) * (n + 1));
    for i in 0..=n {
        for j in 0..=n {
            let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
            grid.push((f(u, v), u, v));
        }
    }
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut overall = f64::INFINITY;
    for &seed in grid.iter().take(6) {
        let mut best = seed;
        let mut span = 4.0 / n as f64;
        for _ in 0..45 {
            let (_, u0, v0) = best;
            for i in 0..=8 {
                for j in 0..=8 {
                    let mut u = u0 + span * (i as f64 / 8.0 - 0.5);
                    let v = (v0 + span * (j as f64 / 8.0 - 0.5)).clamp(0.0, 1.0);
                    u = if periodic_u { u.rem_euclid(1.0) } else { u.clamp(0.0, 1.0) };
                    let val = f(u, v);
                    if val < best.0 {
                        best = (val, u, v);
                    }
                }
            }
            span *= 0.6;
        }
        overall = overall.min(best.0);
    }
    overall
}

/// Separation distance sampled as the minimum of `sdf_b` over the surface of `a`.
fn sampled_phi(ga: GeomShape, sa: BodyState, gb: GeomShape, sb: BodyState) -> f64 {
    let periodic = !matches!(ga, GeomShape::Box { .. });
    surface(ga, sa)
        .iter()
        .map(|patch| minimize_patch(&|u, v| sdf(gb, sb, patch(u, v)), periodic))
        .fold(f64::INFINITY, f64::min)
}

fn state(pos: Vec3, orient: Quat) -> BodyState {
    BodyState { pos, orient, vel: Vec3::ZERO, ang_vel: Vec3::ZERO }
}

fn engine_phi(ga: GeomShape, sa: BodyState, gb: GeomShape, sb: BodyState) -> f64 {
    let bodies = vec![Body::fixed("a", ga, sa.pos), Body::dynamic("b", gb, 1.0, sb.pos)];
    let mut out = Vec::new();
    narrowphase(&bodies, &[sa, sb], (0, 1), 10.0, &mut out).unwrap();
    assert!(!out.is_empty());
    for c in &out {
        assert!((c.normal.norm() - 1.0).abs() < 1e-9);
    }
    out.iter().map(|c| c.phi).fold(f64::INFINITY, f64::min)
}

fn check_pair(name: &str, mut gen: impl FnMut(&mut ChaCha8Rng) -> (GeomShape, BodyState, GeomShape, BodyState), seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..100 {
        let (ga, sa, gb, sb) = gen(&mut rng);
        let oracle = sampled_phi(gb, sb, ga, sa);
        let got = engine_phi(ga, sa, gb, sb);
        assert!((got - oracle).abs() < 1e-6, "{name} #{k}: engine {got} sampler {oracle}");
    }
}

fn ground() -> (GeomShape, BodyState) {
    (GeomShape::HalfSpace { normal: Vec3::Z, offset: 0.0 }, state(Vec3::ZERO, Quat::IDENTITY))
}

#[test]
fn narrowphase_plane_pairs_match_sampler() {
    let shapes = [
        GeomShape::Sphere { radius: 0.05 },
        GeomShape::Box { half_extents: Vec3::new(0.03, 0.05, 0.02) },
        GeomShape::Capsule { radius: 0.02, half_length: 0.04 },
        GeomShape::Cylinder { radius: 0.03, half_length: 0.05 },
    ];
    for (i, shape) in shapes.into_iter().enumerate() {
        check_pair(
            shape.kind_name(),
            |rng| {
                let (g, s) = ground();
                let pos = Vec3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), rng.random_range(0.0..0.08));
                (g, s, shape, state(pos, rand_quat(rng)))
            },
            100 + i as u64,
        );
    }
}

#[test]
fn narrowphase_convex_pairs_match_sampler() {
    let sphere = GeomShape::Sphere { radius: 0.04 };
    let boxy = GeomShape::Box { half_extents: Vec3::new(0.05, 0.03, 0.04) };
    let capsule = GeomShape::Capsule { radius: 0.02, half_length: 0.05 };
    let around = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| unit(rng) * rng.random_range(lo..hi);

    check_pair("sphere-sphere", |rng| (sphere, state(Vec3::ZERO, rand_quat(rng)), sphere, state(around(rng, 0.06, 0.2), rand_quat(rng))), 201);
    // Sphere outside the box; the sampler walks the sphere surface against the exact box SDF.
    check_pair(
        "box-sphere",
        |rng| {
            let sb = state(Vec3::ZERO, rand_quat(rng));
            loop {
                let c = around(rng, 0.0, 0.2);
                if sdf(boxy, sb, c) > 0.042 {
                    return (boxy, sb, sphere, state(c, Quat::IDENTITY));
                }
            }
        },
        202,
    );
    check_pair(
        "sphere-capsule",
        |rng| {
            let sc = state(Vec3::ZERO, rand_quat(rng));
            loop {
                let c = around(rng, 0.0, 0.2);
                if sdf(capsule, sc, c) > 0.025 {
                    return (capsule, sc, sphere, state(c, Quat::IDENTITY));
                }
            }
        },
        203,
    );
    check_pair(
        "capsule-capsule",
        |rng| loop {
            let (sa, sb) = (state(Vec3::ZERO, rand_quat(rng)), state(around(rng, 0.0, 0.2), rand_quat(rng)));
            let (a0, a1) = (sa.orient.rotate(Vec3::new(0.0, 0.0, -0.05)), sa.orient.rotate(Vec3::new(0.0, 0.0, 0.05)));
            let probe = (0..=200).map(|i| sdf(capsule, sb, a0 + (a1 - a0) * (i as f64 / 200.0))).fold(f64::INFINITY, f64::min);
            if probe > 0.03 {
                return (capsule, sa, capsule, sb);
            }
        },
        204,
    );
    // Stacked boxes whose lower face of B hangs over the top face of A.
    check_pair(
        "box-box",
        |rng| {
            let tilt = Quat::from_axis_angle(unit(rng), rng.random_range(0.0..0.15));
            let yaw = Quat::from_axis_angle(Vec3::Z, rng.random_range(0.0..std::f64::consts::TAU));
            let small = GeomShape::Box { half_extents: Vec3::new(0.02, 0.015, 0.02) };
            let pos = Vec3::new(rng.random_range(-0.015..0.015), rng.random_range(-0.005..0.005), 0.04 + 0.02 + rng.random_range(0.003..0.03));
            (boxy, state(Vec3::ZERO, Quat::IDENTITY), small, state(pos, tilt.mul(yaw)))
        },
        205,
    );
}

#[test]
fn penetrating_sphere_against_box_uses_center_distance() {
    let boxy = GeomShape::Box { half_extents: Vec3::new(0.05, 0.03, 0.04) };
    let sphere = GeomShape::Sphere { radius: 0.04 };
    let mut rng = ChaCha8Rng::seed_from_u64(206);
    for _ in 0..100 {
        let sb = state(Vec3::ZERO, rand_quat(&mut rng));
        let c = loop {
            let c = unit(&mut rng) * rng.random_range(0.0..0.15);
            let d = sdf(boxy, sb, c);
            if d > 0.001 && d < 0.039 {
                break c;
            }
        };
        let got = engine_phi(boxy, sb, sphere, state(c, Quat::IDENTITY));
        assert!((got - (sdf(boxy, sb, c) - 0.04)).abs() < 1e-9);
    }
}


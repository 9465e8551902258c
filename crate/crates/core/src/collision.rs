//! Broadphase (sweep-and-prune over AABBs) and analytic narrowphase for the primitive shapes.
//!
//! Every contact carries a normal pointing from `body_a` to `body_b`, where
//! `body_a < body_b`. Contacts are emitted only when the signed gap `phi` is
//! below the contact margin.

use alloc::vec::Vec;
use crate::error::CoreError;
use crate::math::{Quat, Vec3};
use crate::scene::{Body, FrictionParams, GeomShape};
use crate::world::BodyState;

/// A detected contact between two bodies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub body_a: usize,
    pub body_b: usize,
    /// World-space contact point.
    pub point: Vec3,
    /// Unit normal from A to B.
    pub normal: Vec3,
    pub tangent1: Vec3,
    pub tangent2: Vec3,
    /// Signed gap: positive when separated, negative when penetrating.
    pub phi: f64,
    pub friction: FrictionParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x
            && o.min.x <= self.max.x
            && self.min.y <= o.max.y
            && o.min.y <= self.max.y
            && self.min.z <= o.max.z
            && o.min.z <= self.max.z
    }

    pub fn inflate(&self, by: f64) -> Aabb {
        Aabb { min: self.min - Vec3::splat(by), max: self.max + Vec3::splat(by) }
    }
}

/// World AABB of a bounded shape; `None` for half-spaces.
pub fn shape_aabb(geom: &GeomShape, pos: Vec3, orient: Quat) -> Option<Aabb> {
    let ext = match *geom {
        GeomShape::Sphere { radius } => Vec3::splat(radius),
        GeomShape::Box { half_extents } => {
            let r = orient.to_mat3();
            Vec3::new(
                r.row(0).abs().dot(half_extents),
                r.row(1).abs().dot(half_extents),
                r.row(2).abs().dot(half_extents),
            )
        }
        GeomShape::Capsule { radius, half_length } => orient.rotate(Vec3::Z * half_length).abs() + Vec3::splat(radius),
        GeomShape::Cylinder { radius, half_length } => {
            let a = orient.rotate(Vec3::Z);
            // Disk extent along each world axis is radius * sqrt(1 - a_i^2).
            let disk = Vec3::new(
                libm::sqrt((1.0 - a.x * a.x).max(0.0)),
                libm::sqrt((1.0 - a.y * a.y).max(0.0)),
                libm::sqrt((1.0 - a.z * a.z).max(0.0)),
            ) * radius;
            (a * half_length).abs() + disk
        }
        GeomShape::HalfSpace { .. } => return None,
    };
    Some(Aabb { min: pos - ext, max: pos + ext })
}

/// Candidate pairs `(i, j)`, `i < j`, sorted lexicographically.
///
/// Returns a superset of all pairs whose gap is below `margin`; static-static
/// pairs are never reported.
pub fn broadphase_aabb(bodies: &[Body], states: &[BodyState], margin: f64, out: &mut Vec<(usize, usize)>) {
    out.clear();
    let mut boxes: Vec<(Aabb, usize)> = Vec::with_capacity(bodies.len());
    let mut planes: Vec<usize> = Vec::new();
    for (i, (b, s)) in bodies.iter().zip(states).enumerate() {
        match shape_aabb(&b.geom, s.pos, s.orient) {
            Some(bb) => boxes.push((bb.inflate(0.5 * margin), i)),
            None => planes.push(i),
        }
    }
    boxes.sort_unstable_by(|a, b| a.0.min.x.total_cmp(&b.0.min.x).then(a.1.cmp(&b.1)));
    for (k, (bi, i)) in boxes.iter().enumerate() {
        for (bj, j) in &boxes[k + 1..] {
            if bj.min.x > bi.max.x {
                break;
            }
            if !(bodies[*i].is_dynamic() || bodies[*j].is_dynamic()) {
                continue;
            }
            if bi.overlaps(bj) {
                out.push(((*i).min(*j), (*i).max(*j)));
            }
        }
    }
    for &p in &planes {
        let GeomShape::HalfSpace { normal, offset } = bodies[p].geom else { unreachable!() };
        for (bb, i) in &boxes {
            if !(bodies[*i].is_dynamic() || bodies[p].is_dynamic()) {
                continue;
            }
            let centre = (bb.min + bb.max) * 0.5;
            let half = (bb.max - bb.min) * 0.5;
            // The AABB already carries half the margin.
            let lowest = normal.dot(centre) - normal.abs().dot(half) - offset;
            if lowest < 0.5 * margin {
                out.push((p.min(*i), p.max(*i)));
            }
        }
    }
    out.sort_unstable();
}

/// Orthonormal right-handed tangent basis `(t1, t2)` for a unit normal.
///
/// Pivots on the axis of the smallest-magnitude normal component (first index on ties).
pub fn build_tangent_frame(normal: Vec3) -> (Vec3, Vec3) {
    let a = normal.abs();
    let pivot = if a.x <= a.y && a.x <= a.z {
        Vec3::X
    } else if a.y <= a.z {
        Vec3::Y
    } else {
        Vec3::Z
    };
    let t1 = (pivot - normal * normal.dot(pivot)).normalize();
    let t2 = normal.cross(t1);
    (t1, t2)
}

/// Geometric part of a contact, normal pointing from the first shape to the second.
#[derive(Debug, Clone, Copy)]
struct RawContact {
    point: Vec3,
    normal: Vec3,
    phi: f64,
}

#[derive(Debug, Clone, Copy)]
struct Pose {
    pos: Vec3,
    orient: Quat,
}

impl Pose {
    fn of(s: &BodyState) -> Pose {
        Pose { pos: s.pos, orient: s.orient }
    }
    fn axis(&self, i: usize) -> Vec3 {
        self.orient.rotate(match i {
            0 => Vec3::X,
            1 => Vec3::Y,
            _ => Vec3::Z,
        })
    }
}

/// Exact contacts for one broadphase pair, appended to `out` in deterministic order.
pub fn narrowphase(
    bodies: &[Body],
    states: &[BodyState],
    pair: (usize, usize),
    margin: f64,
    out: &mut Vec<Contact>,
) -> Result<(), CoreError> {
    let (ia, ib) = pair;
    let (ga, gb) = (&bodies[ia].geom, &bodies[ib].geom);
    let (pa, pb) = (Pose::of(&states[ia]), Pose::of(&states[ib]));
    let mut raw: [Option<RawContact>; 8] = [None; 8];
    let mut n = 0usize;
    let mut push = |c: RawContact| {
        if c.phi < margin && n < raw.len() {
            raw[n] = Some(c);
            n += 1;
        }
    };
    // Canonical routines take the "lower-ranked" shape first; `flip` records a swap.
    let flip = rank(gb) < rank(ga);
    let (g1, p1, g2, p2) = if flip { (gb, pb, ga, pa) } else { (ga, pa, gb, pb) };
    match (*g1, *g2) {
        (GeomShape::HalfSpace { normal, offset }, other) => plane_vs(normal, offset, &other, p2, &mut push)
            .ok_or(CoreError::UnsupportedPair { a: g1.kind_name(), b: g2.kind_name() })?,
        (GeomShape::Sphere { radius: r1 }, GeomShape::Sphere { radius: r2 }) => {
            if let Some(c) = sphere_sphere(p1.pos, r1, p2.pos, r2) {
                push(c)
            }
        }
        (GeomShape::Sphere { radius }, GeomShape::Box { half_extents }) => {
            // box_sphere yields box -> sphere; we need sphere -> box.
            if let Some(c) = box_sphere(p2, half_extents, p1.pos, radius) {
                push(RawContact { normal: -c.normal, ..c })
            }
        }
        (GeomShape::Sphere { radius }, GeomShape::Capsule { radius: rc, half_length }) => {
            let (s0, s1) = capsule_segment(p2, half_length);
            let q = closest_on_segment(s0, s1, p1.pos);
            if let Some(c) = sphere_sphere(p1.pos, radius, q, rc) {
                push(c)
            }
        }
        (GeomShape::Box { half_extents: h1 }, GeomShape::Box { half_extents: h2 }) => box_box(p1, h1, p2, h2, margin, &mut push),
        (GeomShape::Box { half_extents }, GeomShape::Capsule { radius, half_length }) => {
            box_capsule(p1, half_extents, p2, radius, half_length, &mut push)
        }
        (GeomShape::Capsule { radius: r1, half_length: l1 }, GeomShape::Capsule { radius: r2, half_length: l2 }) => {
            capsule_capsule(p1, r1, l1, p2, r2, l2, &mut push)
        }
        _ => return Err(CoreError::UnsupportedPair { a: ga.kind_name(), b: gb.kind_name() }),
    }
    let combined = bodies[ia].friction.combine(&bodies[ib].friction);
    for c in raw.iter().take(n).flatten() {
        let normal = if flip { -c.normal } else { c.normal };
        let (tangent1, tangent2) = build_tangent_frame(normal);
        out.push(Contact { body_a: ia, body_b: ib, point: c.point, normal, tangent1, tangent2, phi: c.phi, friction: combined });
    }
    Ok(())
}

fn rank(g: &GeomShape) -> u8 {
    match g {
        GeomShape::HalfSpace { .. } => 0,
        GeomShape::Sphere { .. } => 1,
        GeomShape::Box { .. } => 2,
        GeomShape::Capsule { .. } => 3,
        GeomShape::Cylinder { .. } => 4,
    }
}

/// Half-space against any bounded shape. Contact points are the deepest points of the shape.
fn plane_vs(n: Vec3, offset: f64, other: &GeomShape, pose: Pose, push: &mut impl FnMut(RawContact)) -> Option<()> {
    let dist = |p: Vec3| n.dot(p) - offset;
    match *other {
        GeomShape::Sphere { radius } => {
            push(RawContact { point: pose.pos - n * radius, normal: n, phi: dist(pose.pos) - radius });
        }
        GeomShape::Box { half_extents: h } => {
            let mut corners: [(f64, usize, Vec3); 8] = [(0.0, 0, Vec3::ZERO); 8];
            for (k, c) in corners.iter_mut().enumerate() {
                let local = Vec3::new(
                    if k & 1 == 0 { -h.x } else { h.x },
                    if k & 2 == 0 { -h.y } else { h.y },
                    if k & 4 == 0 { -h.z } else { h.z },
                );
                let w = pose.pos + pose.orient.rotate(local);
                *c = (dist(w), k, w);
            }
            corners.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(phi, _, w) in corners.iter().take(4) {
                push(RawContact { point: w, normal: n, phi });
            }
        }
        GeomShape::Capsule { radius, half_length } => {
            let (s0, s1) = capsule_segment(pose, half_length);
            for e in [s0, s1] {
                push(RawContact { point: e - n * radius, normal: n, phi: dist(e) - radius });
            }
        }
        GeomShape::Cylinder { radius, half_length } => {
            let axis = pose.axis(2);
            let caps = [pose.pos - axis * half_length, pose.pos + axis * half_length];
            let along = n.dot(axis);
            // Direction inside the cap plane that points furthest against the plane normal.
            let radial = (n - axis * along).try_normalize();
            if along.abs() > core::f64::consts::FRAC_1_SQRT_2 {
                // Resting on an end cap: cap centre plus three rim points 120 degrees apart.
                let cap = if along > 0.0 { caps[0] } else { caps[1] };
                let (u, v) = match radial {
                    Some(r) => (-r, axis.cross(-r)),
                    None => build_tangent_frame(axis),
                };
                push(RawContact { point: cap, normal: n, phi: dist(cap) });
                for k in 0..3 {
                    let ang = 2.0 * core::f64::consts::PI * k as f64 / 3.0;
                    let p = cap + (u * libm::cos(ang) + v * libm::sin(ang)) * radius;
                    push(RawContact { point: p, normal: n, phi: dist(p) });
                }
            } else {
                // On its side: lowest rim point of each cap.
                let r = radial.unwrap_or(Vec3::ZERO);
                for cap in caps {
                    let p = cap - r * radius;
                    push(RawContact { point: p, normal: n, phi: dist(p) });
                }
            }
        }
        GeomShape::HalfSpace { .. } => return None,
    }
    Some(())
}

fn sphere_sphere(ca: Vec3, ra: f64, cb: Vec3, rb: f64) -> Option<RawContact> {
    let d = cb - ca;
    let dist = d.norm();
    let normal = d.try_normalize().unwrap_or(Vec3::Z);
    let phi = dist - ra - rb;
    Some(RawContact { point: ca + normal * (ra + 0.5 * phi), normal, phi })
}

/// Signed distance from a point to a box, with the outward normal at the closest surface point.
fn box_signed_distance(pose: Pose, h: Vec3, p: Vec3) -> (f64, Vec3) {
    let local = pose.orient.inverse_rotate(p - pose.pos);
    let q = local.abs() - h;
    if q.x > 0.0 || q.y > 0.0 || q.z > 0.0 {
        let clamped = local.max(-h).min(h);
        let d = local - clamped;
        let dist = d.norm();
        (dist, pose.orient.rotate(d / dist))
    } else {
        let (axis, depth) = if q.x >= q.y && q.x >= q.z {
            (0, q.x)
        } else if q.y >= q.z {
            (1, q.y)
        } else {
            (2, q.z)
        };
        let sign = if local[axis] >= 0.0 { 1.0 } else { -1.0 };
        (depth, pose.axis(axis) * sign)
    }
}

/// Box against sphere; normal points from box to sphere, point is the sphere's deepest point.
fn box_sphere(pose: Pose, h: Vec3, c: Vec3, r: f64) -> Option<RawContact> {
    let (d, n) = box_signed_distance(pose, h, c);
    Some(RawContact { point: c - n * r, normal: n, phi: d - r })
}

fn capsule_segment(pose: Pose, half_length: f64) -> (Vec3, Vec3) {
    let a = pose.axis(2) * half_length;
    (pose.pos - a, pose.pos + a)
}

fn closest_param(s0: Vec3, s1: Vec3, p: Vec3) -> f64 {
    let d = s1 - s0;
    let len2 = d.norm_squared();
    if len2 <= 0.0 {
        0.0
    } else {
        ((p - s0).dot(d) / len2).clamp(0.0, 1.0)
    }
}

fn closest_on_segment(s0: Vec3, s1: Vec3, p: Vec3) -> Vec3 {
    s0 + (s1 - s0) * closest_param(s0, s1, p)
}

/// Closest points between segments `p0p1` and `q0q1`.
fn segment_segment(p0: Vec3, p1: Vec3, q0: Vec3, q1: Vec3) -> (Vec3, Vec3) {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(r);
    let (s, t);
    if a <= 1e-300 && e <= 1e-300 {
        return (p0, q0);
    }
    if a <= 1e-300 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(r);
        if e <= 1e-300 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 1e-300 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    (p0 + d1 * s, q0 + d2 * t)
}

fn capsule_capsule(p1: Pose, r1: f64, l1: f64, p2: Pose, r2: f64, l2: f64, push: &mut impl FnMut(RawContact)) {
    let (a0, a1) = capsule_segment(p1, l1);
    let (b0, b1) = capsule_segment(p2, l2);
    let parallel = p1.axis(2).dot(p2.axis(2)).abs() > 0.98;
    if parallel {
        // Line contact: one point per end of A, plus ends of B that fall strictly inside A.
        for e in [a0, a1] {
            if let Some(c) = sphere_sphere(e, r1, closest_on_segment(b0, b1, e), r2) {
                push(c);
            }
        }
        for e in [b0, b1] {
            let t = closest_param(a0, a1, e);
            if t > 0.0 && t < 1.0 {
                if let Some(c) = sphere_sphere(a0 + (a1 - a0) * t, r1, e, r2) {
                    push(c);
                }
            }
        }
    } else {
        let (pa, pb) = segment_segment(a0, a1, b0, b1);
        if let Some(c) = sphere_sphere(pa, r1, pb, r2) {
            push(c);
        }
    }
}

/// Box against capsule: both capsule ends plus the segment point closest to the box.
fn box_capsule(pb: Pose, h: Vec3, pc: Pose, r: f64, l: f64, push: &mut impl FnMut(RawContact)) {
    let (s0, s1) = capsule_segment(pc, l);
    let at = |t: f64| s0 + (s1 - s0) * t;
    let sd = |t: f64| box_signed_distance(pb, h, at(t)).0;
    // Signed distance to a convex set is convex along a line: golden-section search.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let g = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (sd(x1), sd(x2));
    for _ in 0..48 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = sd(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = sd(x2);
        }
    }
    let t_star = 0.5 * (lo + hi);
    let mut params = [0.0, 1.0, t_star];
    let count = if t_star > 0.05 && t_star < 0.95 { 3 } else { 2 };
    params[..count].sort_unstable_by(|a, b| a.total_cmp(b));
    for &t in &params[..count] {
        if let Some(c) = box_sphere(pb, h, at(t), r) {
            push(c);
        }
    }
}

/// Box against box via the separating-axis test with reference-face clipping.
fn box_box(pa: Pose, ha: Vec3, pb: Pose, hb: Vec3, margin: f64, push: &mut impl FnMut(RawContact)) {
    let a = [pa.axis(0), pa.axis(1), pa.axis(2)];
    let b = [pb.axis(0), pb.axis(1), pb.axis(2)];
    let t = pb.pos - pa.pos;
    let ha_ = [ha.x, ha.y, ha.z];
    let hb_ = [hb.x, hb.y, hb.z];
    let proj = |axes: &[Vec3; 3], h: &[f64; 3], l: Vec3| -> f64 { (0..3).map(|i| h[i] * axes[i].dot(l).abs()).sum() };

    // (separation, axis oriented A->B, kind): kind 0..3 face of A, 3..6 face of B, 6.. edge pair.
    let mut best_face: Option<(f64, Vec3, usize)> = None;
    for k in 0..6 {
        let l = if k < 3 { a[k] } else { b[k - 3] };
        let dir = if t.dot(l) >= 0.0 { l } else { -l };
        let sep = t.dot(dir) - proj(&a, &ha_, dir) - proj(&b, &hb_, dir);
        if sep > margin {
            return;
        }
        // Prefer A's faces, then lower index, on (near) ties.
        if best_face.map_or(true, |(s, _, _)| sep > s + 1e-12) {
            best_face = Some((sep, dir, k));
        }
    }
    let mut best_edge: Option<(f64, Vec3, usize, usize)> = None;
    for i in 0..3 {
        for j in 0..3 {
            let Some(l) = a[i].cross(b[j]).try_normalize() else { continue };
            if a[i].cross(b[j]).norm() < 1e-6 {
                continue;
            }
            let dir = if t.dot(l) >= 0.0 { l } else { -l };
            let sep = t.dot(dir) - proj(&a, &ha_, dir) - proj(&b, &hb_, dir);
            if sep > margin {
                return;
            }
            if best_edge.map_or(true, |(s, ..)| sep > s + 1e-12) {
                best_edge = Some((sep, dir, i, j));
            }
        }
    }
    let (face_sep, face_dir, face_k) = best_face.expect("six face axes tested");
    if let Some((edge_sep, dir, i, j)) = best_edge {
        // Edge contacts only when clearly shallower than any face contact.
        if edge_sep > face_sep + 0.05 * face_sep.abs() + 1e-4 * (ha.norm() + hb.norm()) {
            let mut ca = pa.pos;
            for k in (0..3).filter(|&k| k != i) {
                ca += a[k] * (ha_[k] * if a[k].dot(dir) >= 0.0 { 1.0 } else { -1.0 });
            }
            let mut cb = pb.pos;
            for k in (0..3).filter(|&k| k != j) {
                cb += b[k] * (hb_[k] * if b[k].dot(dir) >= 0.0 { -1.0 } else { 1.0 });
            }
            let (qa, qb) = segment_segment(ca - a[i] * ha_[i], ca + a[i] * ha_[i], cb - b[j] * hb_[j], cb + b[j] * hb_[j]);
            let phi = (qb - qa).dot(dir);
            push(RawContact { point: (qa + qb) * 0.5, normal: dir, phi });
            return;
        }
    }
    if face_k < 3 {
        clip_faces(pa, &a, &ha_, face_k, face_dir, pb, &b, &hb_, margin, false, push);
    } else {
        clip_faces(pb, &b, &hb_, face_k - 3, -face_dir, pa, &a, &ha_, margin, true, push);
    }
}

/// Clips the incident face of `inc` against reference face `axis` of `reference`
/// (outward normal `n`). With `swapped`, normals are flipped so they still point from A to B.
#[allow(clippy::too_many_arguments)]
fn clip_faces(
    reference: Pose,
    ra: &[Vec3; 3],
    rh: &[f64; 3],
    axis: usize,
    n: Vec3,
    inc: Pose,
    ia: &[Vec3; 3],
    ih: &[f64; 3],
    margin: f64,
    swapped: bool,
    push: &mut impl FnMut(RawContact),
) {
    // Incident face: the face of `inc` most anti-parallel to n.
    let (mut j, mut best) = (0, f64::NEG_INFINITY);
    for (k, ax) in ia.iter().enumerate() {
        let d = ax.dot(n).abs();
        if d > best + 1e-12 {
            best = d;
            j = k;
        }
    }
    let sj = if ia[j].dot(n) > 0.0 { -1.0 } else { 1.0 };
    let fc = inc.pos + ia[j] * (ih[j] * sj);
    let (u, v) = ((j + 1) % 3, (j + 2) % 3);
    let mut poly: Vec<Vec3> = alloc::vec![
        fc + ia[u] * ih[u] + ia[v] * ih[v],
        fc - ia[u] * ih[u] + ia[v] * ih[v],
        fc - ia[u] * ih[u] - ia[v] * ih[v],
        fc + ia[u] * ih[u] - ia[v] * ih[v],
    ];
    let rc = reference.pos + n * rh[axis];
    for side in [(axis + 1) % 3, (axis + 2) % 3] {
        for sign in [1.0, -1.0] {
            let pn = ra[side] * sign;
            let off = pn.dot(reference.pos) + rh[side];
            poly = clip_polygon(&poly, pn, off);
            if poly.is_empty() {
                return;
            }
        }
    }
    let mut pts: Vec<(f64, usize, Vec3)> = poly
        .iter()
        .enumerate()
        .map(|(k, p)| (n.dot(*p - rc), k, *p))
        .filter(|(phi, _, _)| *phi < margin)
        .collect();
    pts.sort_unstable_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let normal = if swapped { -n } else { n };
    for &(phi, _, p) in pts.iter().take(4) {
        push(RawContact { point: p, normal, phi });
    }
}

/// Sutherland-Hodgman clip of a polygon against the half-space `pn · x <= off`.
fn clip_polygon(poly: &[Vec3], pn: Vec3, off: f64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        let dp = pn.dot(p) - off;
        let dq = pn.dot(q) - off;
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0) {
            out.push(p + (q - p) * (dp / (dp - dq)));
        }
    }
    out
}

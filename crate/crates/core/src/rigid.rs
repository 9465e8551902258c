//! Rigid-body inertia and pose integration.

use crate::error::CoreError;
use crate::math::{Mat3, Quat, Vec3};

/// Mass and body-frame rotational inertia of one free body.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SpatialInertia {
    pub mass: f64,
    pub inertia_body: Mat3,
}

impl SpatialInertia {
    pub fn new(mass: f64, inertia_body: Mat3) -> Self {
        SpatialInertia { mass, inertia_body }
    }

    pub fn solid_sphere(mass: f64, radius: f64) -> Self {
        let i = 0.4 * mass * radius * radius;
        SpatialInertia::new(mass, Mat3::from_diagonal(Vec3::splat(i)))
    }

    pub fn solid_box(mass: f64, half_extents: Vec3) -> Self {
        let s = half_extents * 2.0;
        let k = mass / 12.0;
        SpatialInertia::new(
            mass,
            Mat3::from_diagonal(Vec3::new(
                k * (s.y * s.y + s.z * s.z),
                k * (s.x * s.x + s.z * s.z),
                k * (s.x * s.x + s.y * s.y),
            )),
        )
    }

    /// Solid cylinder with its axis along body z.
    pub fn solid_cylinder(mass: f64, radius: f64, half_length: f64) -> Self {
        let l = 2.0 * half_length;
        let ixx = mass * (3.0 * radius * radius + l * l) / 12.0;
        let izz = 0.5 * mass * radius * radius;
        SpatialInertia::new(mass, Mat3::from_diagonal(Vec3::new(ixx, ixx, izz)))
    }

    /// Solid capsule (cylinder plus two hemispherical caps) with its axis along body z.
    /// `mass` is split between the parts in proportion to volume.
    pub fn solid_capsule(mass: f64, radius: f64, half_length: f64) -> Self {
        let r2 = radius * radius;
        let v_cyl = core::f64::consts::PI * r2 * 2.0 * half_length;
        let v_sph = 4.0 / 3.0 * core::f64::consts::PI * r2 * radius;
        let m_cyl = mass * v_cyl / (v_cyl + v_sph);
        let m_hemi = 0.5 * (mass - m_cyl);
        let l = 2.0 * half_length;
        let izz = 0.5 * m_cyl * r2 + 2.0 * (0.4 * m_hemi * r2);
        // Hemisphere about its own centroid plus the parallel-axis shift to the capsule centre.
        let hemi_c = 3.0 * radius / 8.0;
        let hemi_xx = 0.4 * m_hemi * r2 - m_hemi * hemi_c * hemi_c;
        let d = half_length + hemi_c;
        let ixx = m_cyl * (3.0 * r2 + l * l) / 12.0 + 2.0 * (hemi_xx + m_hemi * d * d);
        SpatialInertia::new(mass, Mat3::from_diagonal(Vec3::new(ixx, ixx, izz)))
    }

    /// Mass positive, inertia symmetric within 1e-12 (relative) and positive-definite.
    pub fn is_valid(&self) -> bool {
        let scale = self.inertia_body.trace().abs().max(f64::MIN_POSITIVE);
        self.mass > 0.0
            && self.mass.is_finite()
            && self.inertia_body.is_finite()
            && self.inertia_body.asymmetry() <= 1e-12 * scale
            && self.inertia_body.is_positive_definite()
    }

    pub fn inverse_body(&self) -> Result<Mat3, CoreError> {
        self.inertia_body.inverse().ok_or(CoreError::SingularInertia)
    }
}

/// World-frame inverse inertia `R · I_body⁻¹ · Rᵀ`.
pub fn world_inertia_inverse(inertia: &SpatialInertia, orient: Quat) -> Result<Mat3, CoreError> {
    let inv = inertia.inverse_body()?;
    Ok(rotate_inertia(&inv, orient))
}

/// `R · A · Rᵀ` for a body-frame tensor `A`, symmetrized.
pub fn rotate_inertia(body_tensor: &Mat3, orient: Quat) -> Mat3 {
    let r = orient.to_mat3();
    let w = r.mul_mat(body_tensor).mul_mat(&r.transpose());
    // Round-off leaves the product asymmetric in the last ulp.
    let mut m = w.m;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let avg = 0.5 * (m[i][j] + m[j][i]);
            m[i][j] = avg;
            m[j][i] = avg;
        }
    }
    Mat3 { m }
}

/// Advances a pose by one step with the world-frame twist `(v, omega)`.
///
/// Translation is explicit; orientation is updated through the exponential
/// map of `omega * dt` and renormalized.
pub fn integrate_pose(pos: Vec3, orient: Quat, v: Vec3, omega: Vec3, dt: f64) -> Result<(Vec3, Quat), CoreError> {
    if !(pos.is_finite() && orient.is_finite() && v.is_finite() && omega.is_finite() && dt.is_finite()) {
        return Err(CoreError::NonFiniteState { body: usize::MAX });
    }
    let new_pos = pos + v * dt;
    let dq = Quat::from_rotation_vector(omega * dt);
    let new_orient = dq.mul(orient).normalize();
    Ok((new_pos, new_orient))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn pure_translation() {
        let (p, q) = integrate_pose(Vec3::ZERO, Quat::IDENTITY, Vec3::new(1.0, 0.0, 0.0), Vec3::ZERO, 0.5).unwrap();
        assert_eq!(p, Vec3::new(0.5, 0.0, 0.0));
        assert_eq!(q, Quat::IDENTITY);
    }

    #[test]
    fn half_turn_about_z() {
        let (_, q) = integrate_pose(Vec3::ZERO, Quat::IDENTITY, Vec3::ZERO, Vec3::new(0.0, 0.0, PI), 1.0).unwrap();
        // cos(pi/2) = 6e-17 rather than exactly 0.
        let sign = q.z.signum();
        assert!(q.w.abs() < 1e-15);
        assert!(q.x.abs() < 1e-15 && q.y.abs() < 1e-15);
        assert!((q.z * sign - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rest_is_fixed_point() {
        let p = Vec3::new(0.3, -0.1, 2.0);
        let q = Quat::from_axis_angle(Vec3::new(1.0, 1.0, 0.0), 0.4);
        let (p2, q2) = integrate_pose(p, q, Vec3::ZERO, Vec3::ZERO, 0.002).unwrap();
        assert_eq!(p2, p);
        assert!((q2.dot(q) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_finite_rejected() {
        let r = integrate_pose(Vec3::new(f64::NAN, 0.0, 0.0), Quat::IDENTITY, Vec3::ZERO, Vec3::ZERO, 0.1);
        assert!(matches!(r, Err(CoreError::NonFiniteState { .. })));
    }

    #[test]
    fn isotropic_inverse_ignores_orientation() {
        let s = SpatialInertia::solid_sphere(2.0, 0.1);
        let q = Quat::from_axis_angle(Vec3::new(0.2, -1.0, 0.7), 1.3);
        let w = world_inertia_inverse(&s, q).unwrap();
        let expect = 5.0 / (2.0 * 2.0 * 0.01);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { expect } else { 0.0 };
                assert!((w.m[i][j] - e).abs() < 1e-10 * expect);
            }
        }
    }

    #[test]
    fn diagonal_inverse() {
        let s = SpatialInertia::new(1.0, Mat3::from_diagonal(Vec3::new(1.0, 2.0, 3.0)));
        let w = world_inertia_inverse(&s, Quat::IDENTITY).unwrap();
        assert_eq!(w, Mat3::from_diagonal(Vec3::new(1.0, 0.5, 1.0 / 3.0)));
    }

    #[test]
    fn quarter_turn_swaps_axes() {
        // Rotating 90 degrees about z maps body x to world y, so world inertia is diag(2, 1, 3).
        let s = SpatialInertia::new(1.0, Mat3::from_diagonal(Vec3::new(1.0, 2.0, 3.0)));
        let w = world_inertia_inverse(&s, Quat::from_axis_angle(Vec3::Z, PI / 2.0)).unwrap();
        let expect = Mat3::from_diagonal(Vec3::new(0.5, 1.0, 1.0 / 3.0));
        for i in 0..3 {
            for j in 0..3 {
                assert!((w.m[i][j] - expect.m[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn singular_inertia_reported() {
        let s = SpatialInertia::new(1.0, Mat3::from_diagonal(Vec3::new(1.0, 0.0, 3.0)));
        assert_eq!(world_inertia_inverse(&s, Quat::IDENTITY), Err(CoreError::SingularInertia));
        assert!(!s.is_valid());
    }

    #[test]
    fn capsule_inertia_between_bounds() {
        // Must exceed the bare cylinder's axial inertia share and stay positive-definite.
        let c = SpatialInertia::solid_capsule(1.0, 0.02, 0.03);
        assert!(c.is_valid());
        let cyl = SpatialInertia::solid_cylinder(1.0, 0.02, 0.03);
        assert!(c.inertia_body.m[0][0] > cyl.inertia_body.m[0][0]);
    }
}

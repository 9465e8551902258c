//! Scene description: shapes, bodies, friction, impedance and simulation settings.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::ValidationError;
use crate::math::{Quat, Vec3};
use crate::rigid::SpatialInertia;

/// Convex primitive geometry. Capsule and cylinder axes run along body z.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case", deny_unknown_fields))]
pub enum GeomShape {
    Sphere { radius: f64 },
    Box { half_extents: Vec3 },
    Capsule { radius: f64, half_length: f64 },
    Cylinder { radius: f64, half_length: f64 },
    /// Points `x` with `normal · x <= offset` are inside.
    HalfSpace { normal: Vec3, offset: f64 },
}

impl GeomShape {
    pub fn kind_name(&self) -> &'static str {
        match self {
            GeomShape::Sphere { .. } => "sphere",
            GeomShape::Box { .. } => "box",
            GeomShape::Capsule { .. } => "capsule",
            GeomShape::Cylinder { .. } => "cylinder",
            GeomShape::HalfSpace { .. } => "half_space",
        }
    }

    pub fn is_half_space(&self) -> bool {
        matches!(self, GeomShape::HalfSpace { .. })
    }

    /// Solid inertia of the shape for the given mass; `None` for half-spaces.
    pub fn default_inertia(&self, mass: f64) -> Option<SpatialInertia> {
        Some(match *self {
            GeomShape::Sphere { radius } => SpatialInertia::solid_sphere(mass, radius),
            GeomShape::Box { half_extents } => SpatialInertia::solid_box(mass, half_extents),
            GeomShape::Capsule { radius, half_length } => SpatialInertia::solid_capsule(mass, radius, half_length),
            GeomShape::Cylinder { radius, half_length } => SpatialInertia::solid_cylinder(mass, radius, half_length),
            GeomShape::HalfSpace { .. } => return None,
        })
    }

    /// Radius of a sphere centred on the body origin that encloses the shape.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            GeomShape::Sphere { radius } => radius,
            GeomShape::Box { half_extents } => half_extents.norm(),
            GeomShape::Capsule { radius, half_length } => radius + half_length,
            GeomShape::Cylinder { radius, half_length } => libm::sqrt(radius * radius + half_length * half_length),
            GeomShape::HalfSpace { .. } => f64::INFINITY,
        }
    }

    fn validate(&self, field: &str) -> Result<(), ValidationError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ValidationError::new(format!("{field}.{name}"), "must be finite and > 0"))
            }
        };
        match *self {
            GeomShape::Sphere { radius } => positive("radius", radius),
            GeomShape::Box { half_extents } => {
                positive("half_extents[0]", half_extents.x)?;
                positive("half_extents[1]", half_extents.y)?;
                positive("half_extents[2]", half_extents.z)
            }
            GeomShape::Capsule { radius, half_length } | GeomShape::Cylinder { radius, half_length } => {
                positive("radius", radius)?;
                positive("half_length", half_length)
            }
            GeomShape::HalfSpace { normal, offset } => {
                if !normal.is_finite() || (normal.norm() - 1.0).abs() > 1e-9 {
                    return Err(ValidationError::new(format!("{field}.normal"), "must be a unit vector"));
                }
                if !offset.is_finite() {
                    return Err(ValidationError::new(format!("{field}.offset"), "must be finite"));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BodyKind {
    Dynamic,
    Static,
}

/// Friction coefficients. `mu_tor` and `mu_rol` are lengths (effective contact-patch radii).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FrictionParams {
    pub mu_t: f64,
    pub mu_tor: f64,
    pub mu_rol: f64,
}

impl Default for FrictionParams {
    fn default() -> Self {
        FrictionParams { mu_t: 1.0, mu_tor: 0.005, mu_rol: 0.0001 }
    }
}

impl FrictionParams {
    pub const FRICTIONLESS: FrictionParams = FrictionParams { mu_t: 0.0, mu_tor: 0.0, mu_rol: 0.0 };

    pub fn new(mu_t: f64, mu_tor: f64, mu_rol: f64) -> Self {
        FrictionParams { mu_t, mu_tor, mu_rol }
    }

    /// Pair coefficients: element-wise minimum of the two bodies.
    pub fn combine(&self, other: &FrictionParams) -> FrictionParams {
        FrictionParams {
            mu_t: self.mu_t.min(other.mu_t),
            mu_tor: self.mu_tor.min(other.mu_tor),
            mu_rol: self.mu_rol.min(other.mu_rol),
        }
    }

    pub fn validate(&self, field: &str) -> Result<(), ValidationError> {
        for (name, v) in [("mu_t", self.mu_t), ("mu_tor", self.mu_tor), ("mu_rol", self.mu_rol)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ValidationError::new(format!("{field}.{name}"), "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// Global contact impedance: user gains plus the gap-dependent scaling curve `(r_min, r_max, w, m, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ImpedanceConfig {
    pub k_user: f64,
    pub d_user: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub width: f64,
    pub midpoint: f64,
    pub power: f64,
}

impl Default for ImpedanceConfig {
    fn default() -> Self {
        ImpedanceConfig {
            k_user: 0.1,
            d_user: 0.001,
            r_min: 0.9,
            r_max: 0.95,
            width: 0.001,
            midpoint: 0.5,
            power: 2.0,
        }
    }
}

impl ImpedanceConfig {
    pub fn with_gains(k_user: f64, d_user: f64) -> Self {
        ImpedanceConfig { k_user, d_user, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let f = |name: &str, ok: bool, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(ValidationError::new(format!("config.impedance.{name}"), reason))
            }
        };
        f("k_user", self.k_user > 0.0 && self.k_user.is_finite(), "must be finite and > 0")?;
        f("d_user", self.d_user >= 0.0 && self.d_user.is_finite(), "must be finite and >= 0")?;
        f("r_min", self.r_min > 0.0 && self.r_min < 1.0, "must lie in (0, 1)")?;
        f("r_max", self.r_max > 0.0 && self.r_max < 1.0, "must lie in (0, 1)")?;
        f("r_max", self.r_min < self.r_max, "must exceed r_min")?;
        f("width", self.width > 0.0 && self.width.is_finite(), "must be finite and > 0")?;
        f("midpoint", self.midpoint > 0.0 && self.midpoint < 1.0, "must lie in (0, 1)")?;
        f("power", self.power >= 1.0 && self.power.is_finite(), "must be finite and >= 1")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SimConfig {
    pub dt: f64,
    pub gravity: Vec3,
    /// Tangential facet count (even, >= 4).
    pub n_facets_t: usize,
    /// Rolling facet count (even, >= 2). Torsion always uses two facets.
    pub n_facets_rol: usize,
    pub contact_margin: f64,
    pub impedance: ImpedanceConfig,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.002,
            gravity: Vec3::new(0.0, 0.0, -9.81),
            n_facets_t: 4,
            n_facets_rol: 4,
            contact_margin: 0.001,
            impedance: ImpedanceConfig::default(),
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ValidationError::new("config.dt", "must be finite and > 0"));
        }
        if !self.gravity.is_finite() {
            return Err(ValidationError::new("config.gravity", "must be finite"));
        }
        if self.n_facets_t < 4 || self.n_facets_t % 2 != 0 {
            return Err(ValidationError::new("config.n_facets_t", "must be an even integer >= 4"));
        }
        if self.n_facets_rol < 2 || self.n_facets_rol % 2 != 0 {
            return Err(ValidationError::new("config.n_facets_rol", "must be an even integer >= 2"));
        }
        if !(self.contact_margin >= 0.0 && self.contact_margin.is_finite()) {
            return Err(ValidationError::new("config.contact_margin", "must be finite and >= 0"));
        }
        self.impedance.validate()
    }
}

/// One body: geometry, inertia (dynamic only), initial pose and twist, friction.
#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    pub name: String,
    pub kind: BodyKind,
    pub geom: GeomShape,
    pub inertia: Option<SpatialInertia>,
    pub pos: Vec3,
    pub orient: Quat,
    pub vel: Vec3,
    pub ang_vel: Vec3,
    pub friction: FrictionParams,
}

impl Body {
    /// A dynamic body with solid inertia derived from `mass`.
    pub fn dynamic(name: impl Into<String>, geom: GeomShape, mass: f64, pos: Vec3) -> Body {
        Body {
            name: name.into(),
            kind: BodyKind::Dynamic,
            inertia: geom.default_inertia(mass),
            geom,
            pos,
            orient: Quat::IDENTITY,
            vel: Vec3::ZERO,
            ang_vel: Vec3::ZERO,
            friction: FrictionParams::default(),
        }
    }

    pub fn fixed(name: impl Into<String>, geom: GeomShape, pos: Vec3) -> Body {
        Body {
            name: name.into(),
            kind: BodyKind::Static,
            geom,
            inertia: None,
            pos,
            orient: Quat::IDENTITY,
            vel: Vec3::ZERO,
            ang_vel: Vec3::ZERO,
            friction: FrictionParams::default(),
        }
    }

    /// Ground plane `z = height` with upward normal.
    pub fn ground(height: f64) -> Body {
        Body::fixed("ground", GeomShape::HalfSpace { normal: Vec3::Z, offset: height }, Vec3::ZERO)
    }

    pub fn with_friction(mut self, friction: FrictionParams) -> Body {
        self.friction = friction;
        self
    }

    pub fn with_velocity(mut self, vel: Vec3, ang_vel: Vec3) -> Body {
        self.vel = vel;
        self.ang_vel = ang_vel;
        self
    }

    pub fn with_orientation(mut self, orient: Quat) -> Body {
        self.orient = orient;
        self
    }

    pub fn is_dynamic(&self) -> bool {
        self.kind == BodyKind::Dynamic
    }

    pub fn validate(&self, index: usize) -> Result<(), ValidationError> {
        let field = format!("bodies[{index}]");
        self.geom.validate(&format!("{field}.geom"))?;
        self.friction.validate(&format!("{field}.friction"))?;
        let finite = self.pos.is_finite() && self.orient.is_finite() && self.vel.is_finite() && self.ang_vel.is_finite();
        if !finite {
            return Err(ValidationError::new(field, "pose and twist must be finite"));
        }
        if (self.orient.norm() - 1.0).abs() > 1e-9 {
            return Err(ValidationError::new(format!("{field}.orient"), "must be a unit quaternion"));
        }
        match self.kind {
            BodyKind::Dynamic => {
                if self.geom.is_half_space() {
                    return Err(ValidationError::new(format!("{field}.geom"), "half-spaces must be static"));
                }
                match &self.inertia {
                    Some(i) if i.is_valid() => Ok(()),
                    Some(_) => Err(ValidationError::new(
                        format!("{field}.inertia"),
                        "mass must be > 0 and inertia symmetric positive-definite",
                    )),
                    None => Err(ValidationError::new(format!("{field}.inertia"), "dynamic bodies need inertia")),
                }
            }
            BodyKind::Static => {
                if self.vel != Vec3::ZERO || self.ang_vel != Vec3::ZERO {
                    return Err(ValidationError::new(field, "static bodies cannot move"));
                }
                Ok(())
            }
        }
    }
}

/// Bodies plus simulation settings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub bodies: Vec<Body>,
    pub config: SimConfig,
}

impl Scene {
    pub fn new(bodies: Vec<Body>, config: SimConfig) -> Self {
        Scene { bodies, config }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        for (i, b) in self.bodies.iter().enumerate() {
            b.validate(i)?;
        }
        self.config.validate()
    }

    pub fn body_index(&self, name: &str) -> Option<usize> {
        self.bodies.iter().position(|b| b.name == name)
    }
}

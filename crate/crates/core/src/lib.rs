//! Complementarity-free analytical contact dynamics for free rigid bodies.
//!
//! `no_std` with `alloc`. File formats, batching and the CLI live in the `comfree` crate.
#![no_std]

extern crate alloc;

pub mod collision;
pub mod error;
pub mod math;
pub mod rigid;
pub mod scene;
pub mod solver;
pub mod world;

pub use collision::{broadphase_aabb, build_tangent_frame, narrowphase, Aabb, Contact};
pub use error::{CoreError, ValidationError};
pub use math::{Mat3, Quat, Vec3};
pub use rigid::{integrate_pose, world_inertia_inverse, SpatialInertia};
pub use scene::{Body, BodyKind, FrictionParams, GeomShape, ImpedanceConfig, Scene, SimConfig};
pub use solver::{ContactMode, ContactWrench, DualConeFacet, ModeTolerances};
pub use world::{step_env, BodyState, EnvState, EnvStepReport, ExternalWrench, Model, Scratch};

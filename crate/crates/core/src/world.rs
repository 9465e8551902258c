//! Per-environment state and the four-phase step.

use alloc::vec::Vec;

use crate::collision::{broadphase_aabb, narrowphase, Contact};
use crate::error::CoreError;
use crate::math::{Mat3, Quat, Vec3};
use crate::rigid::{integrate_pose, rotate_inertia};
use crate::scene::{Body, Scene, SimConfig};
use crate::solver::{
    accumulate_impulses, build_facets, constraint_impedance, facet_impulse, point_inverse_inertia_trace,
    reconstruct_wrench, scaling_r, smooth_predict, velocity_correction, ContactJacobian, ContactWrench,
    DualConeFacet, FacetLayout, GeneralizedImpulse, ImpedanceGains,
};

/// Pose and twist of one body. Velocities are world-frame.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BodyState {
    pub pos: Vec3,
    pub orient: Quat,
    pub vel: Vec3,
    pub ang_vel: Vec3,
}

impl BodyState {
    pub fn of(body: &Body) -> Self {
        BodyState { pos: body.pos, orient: body.orient, vel: body.vel, ang_vel: body.ang_vel }
    }

    pub fn is_finite(&self) -> bool {
        self.pos.is_finite() && self.orient.is_finite() && self.vel.is_finite() && self.ang_vel.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub bodies: Vec<BodyState>,
}

impl EnvState {
    pub fn from_scene(scene: &Scene) -> Self {
        EnvState { bodies: scene.bodies.iter().map(BodyState::of).collect() }
    }
}

/// Applied force and torque (world frame, about the centre of mass) held over one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExternalWrench {
    pub force: Vec3,
    pub torque: Vec3,
}

/// Immutable per-scene data shared by all environments.
#[derive(Debug, Clone)]
pub struct Model {
    pub bodies: Vec<Body>,
    pub config: SimConfig,
    pub layout: FacetLayout,
    pub inv_mass: Vec<f64>,
    pub inertia_body: Vec<Mat3>,
    pub inv_inertia_body: Vec<Mat3>,
}

impl Model {
    pub fn new(scene: &Scene) -> Result<Self, CoreError> {
        scene.validate().map_err(|e| CoreError::Config(alloc::format!("{e}")))?;
        let layout = FacetLayout::new(scene.config.n_facets_t, scene.config.n_facets_rol)?;
        let n = scene.bodies.len();
        let mut inv_mass = Vec::with_capacity(n);
        let mut inertia_body = Vec::with_capacity(n);
        let mut inv_inertia_body = Vec::with_capacity(n);
        for b in &scene.bodies {
            match (b.is_dynamic(), b.inertia.or_else(|| b.geom.default_inertia(1.0))) {
                (true, Some(si)) => {
                    inv_mass.push(1.0 / si.mass);
                    inertia_body.push(si.inertia_body);
                    inv_inertia_body.push(si.inverse_body()?);
                }
                (true, None) => return Err(CoreError::SingularInertia),
                (false, _) => {
                    inv_mass.push(0.0);
                    inertia_body.push(Mat3::ZERO);
                    inv_inertia_body.push(Mat3::ZERO);
                }
            }
        }
        Ok(Model { bodies: scene.bodies.clone(), config: scene.config.clone(), layout, inv_mass, inertia_body, inv_inertia_body })
    }

    pub fn n_bodies(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_dynamic(&self, i: usize) -> bool {
        self.inv_mass[i] > 0.0
    }

    pub fn mass(&self, i: usize) -> f64 {
        if self.is_dynamic(i) {
            1.0 / self.inv_mass[i]
        } else {
            0.0
        }
    }

    /// Total kinetic energy of the dynamic bodies.
    pub fn kinetic_energy(&self, state: &EnvState) -> f64 {
        let mut e = 0.0;
        for (i, s) in state.bodies.iter().enumerate() {
            if !self.is_dynamic(i) {
                continue;
            }
            let iw = rotate_inertia(&self.inertia_body[i], s.orient);
            e += 0.5 * self.mass(i) * s.vel.norm_squared() + 0.5 * s.ang_vel.dot(iw.mul_vec(s.ang_vel));
        }
        e
    }
}

/// Reusable buffers for one environment's step.
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    pub pairs: Vec<(usize, usize)>,
    pub contacts: Vec<Contact>,
    pub gains: Vec<ImpedanceGains>,
    /// `facet_start[c]..facet_start[c + 1]` indexes the facets of contact `c`.
    pub facet_start: Vec<usize>,
    pub facets: Vec<DualConeFacet>,
    pub lambdas: Vec<f64>,
    pub impulses: Vec<GeneralizedImpulse>,
    pub inertia_world: Vec<Mat3>,
    pub inv_inertia_world: Vec<Mat3>,
    pub v_smooth: Vec<(Vec3, Vec3)>,
}

impl Scratch {
    pub fn new() -> Self {
        Self::default()
    }

    /// Wrenches of the contacts resolved in the last solve, in contact order.
    pub fn contact_wrenches(&self) -> Vec<ContactWrench> {
        (0..self.contacts.len())
            .map(|c| {
                let r = self.facet_start[c]..self.facet_start[c + 1];
                reconstruct_wrench(&self.contacts[c], &self.facets[r.clone()], &self.lambdas[r])
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnvStepReport {
    pub contacts: usize,
    pub facets: usize,
    /// Largest penetration depth `max(0, −φ)` over the contacts found this step.
    pub max_penetration: f64,
    pub kinetic_energy: f64,
}

/// Phase 1: candidate pairs.
pub fn broadphase(model: &Model, state: &EnvState, scratch: &mut Scratch) {
    broadphase_aabb(&model.bodies, &state.bodies, model.config.contact_margin, &mut scratch.pairs);
}

/// Phase 2: contacts for every candidate pair, in pair order.
pub fn narrowphase_all(model: &Model, state: &EnvState, scratch: &mut Scratch) -> Result<(), CoreError> {
    scratch.contacts.clear();
    for &pair in &scratch.pairs {
        narrowphase(&model.bodies, &state.bodies, pair, model.config.contact_margin, &mut scratch.contacts)?;
    }
    Ok(())
}

/// Phase 3: smooth prediction, facet impulses and velocity correction.
///
/// Writes post-contact velocities into `state`; poses are untouched.
pub fn solve_contacts(
    model: &Model,
    state: &mut EnvState,
    external: &[ExternalWrench],
    scratch: &mut Scratch,
) -> Result<(), CoreError> {
    let cfg = &model.config;
    let dt = cfg.dt;
    let n = model.n_bodies();

    scratch.inertia_world.clear();
    scratch.inv_inertia_world.clear();
    scratch.v_smooth.clear();
    for (i, s) in state.bodies.iter().enumerate() {
        if !model.is_dynamic(i) {
            scratch.inertia_world.push(Mat3::ZERO);
            scratch.inv_inertia_world.push(Mat3::ZERO);
            scratch.v_smooth.push((s.vel, s.ang_vel));
            continue;
        }
        let iw = rotate_inertia(&model.inertia_body[i], s.orient);
        let iw_inv = rotate_inertia(&model.inv_inertia_body[i], s.orient);
        let ext = external.get(i).copied().unwrap_or_default();
        let vs = smooth_predict(s.vel, s.ang_vel, ext.force, ext.torque, cfg.gravity, model.inv_mass[i], &iw, &iw_inv, dt)
            .map_err(|_| CoreError::NonFiniteState { body: i })?;
        scratch.inertia_world.push(iw);
        scratch.inv_inertia_world.push(iw_inv);
        scratch.v_smooth.push(vs);
    }

    scratch.gains.clear();
    scratch.facets.clear();
    scratch.facet_start.clear();
    for (ci, c) in scratch.contacts.iter().enumerate() {
        let (sa, sb) = (&state.bodies[c.body_a], &state.bodies[c.body_b]);
        let jac = ContactJacobian::new(c, sa.pos, sb.pos);
        let tr_a = point_inverse_inertia_trace(model.inv_mass[c.body_a], &scratch.inv_inertia_world[c.body_a], jac.r_a);
        let tr_b = point_inverse_inertia_trace(model.inv_mass[c.body_b], &scratch.inv_inertia_world[c.body_b], jac.r_b);
        let m_phi = constraint_impedance(scaling_r(c.phi, &cfg.impedance), tr_a, tr_b)?;
        scratch.gains.push(ImpedanceGains::new(&cfg.impedance, m_phi, dt));
        scratch.facet_start.push(scratch.facets.len());
        build_facets(ci, c, &jac, &model.layout, &mut scratch.facets);
    }
    scratch.facet_start.push(scratch.facets.len());

    scratch.lambdas.clear();
    for f in &scratch.facets {
        let c = &scratch.contacts[f.contact];
        let (va, wa) = scratch.v_smooth[c.body_a];
        let (vb, wb) = scratch.v_smooth[c.body_b];
        scratch.lambdas.push(facet_impulse(f, va, wa, vb, wb, &scratch.gains[f.contact], dt));
    }

    scratch.impulses.clear();
    scratch.impulses.resize(n, GeneralizedImpulse::default());
    accumulate_impulses(&scratch.facets, &scratch.lambdas, &scratch.contacts, &mut scratch.impulses);

    for (i, s) in state.bodies.iter_mut().enumerate() {
        if !model.is_dynamic(i) {
            continue;
        }
        let (vs, ws) = scratch.v_smooth[i];
        let (v, w) = velocity_correction(vs, ws, &scratch.impulses[i], model.inv_mass[i], &scratch.inv_inertia_world[i], dt);
        if !(v.is_finite() && w.is_finite()) {
            return Err(CoreError::NonFiniteState { body: i });
        }
        s.vel = v;
        s.ang_vel = w;
    }
    Ok(())
}

/// Phase 4: pose update of the dynamic bodies.
pub fn integrate(model: &Model, state: &mut EnvState) -> Result<(), CoreError> {
    let dt = model.config.dt;
    for (i, s) in state.bodies.iter_mut().enumerate() {
        if !model.is_dynamic(i) {
            continue;
        }
        let (p, q) = integrate_pose(s.pos, s.orient, s.vel, s.ang_vel, dt).map_err(|_| CoreError::NonFiniteState { body: i })?;
        s.pos = p;
        s.orient = q;
    }
    Ok(())
}

/// One full step of a single environment.
pub fn step_env(
    model: &Model,
    state: &mut EnvState,
    external: &[ExternalWrench],
    scratch: &mut Scratch,
) -> Result<EnvStepReport, CoreError> {
    broadphase(model, state, scratch);
    narrowphase_all(model, state, scratch)?;
    solve_contacts(model, state, external, scratch)?;
    integrate(model, state)?;
    Ok(report(model, state, scratch))
}

pub fn report(model: &Model, state: &EnvState, scratch: &Scratch) -> EnvStepReport {
    let max_penetration = scratch.contacts.iter().fold(0.0f64, |m, c| m.max(-c.phi));
    EnvStepReport {
        contacts: scratch.contacts.len(),
        facets: scratch.facets.len(),
        max_penetration,
        kinetic_energy: model.kinetic_energy(state),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{FrictionParams, GeomShape};
    use alloc::vec;

    fn sphere_scene(z: f64, friction: FrictionParams) -> Scene {
        let ball = Body::dynamic("ball", GeomShape::Sphere { radius: 0.05 }, 1.0, Vec3::new(0.0, 0.0, z)).with_friction(friction);
        Scene::new(vec![Body::ground(0.0).with_friction(friction), ball], SimConfig::default())
    }

    #[test]
    fn free_fall_matches_gravity() {
        let scene = sphere_scene(10.0, FrictionParams::default());
        let model = Model::new(&scene).unwrap();
        let mut st = EnvState::from_scene(&scene);
        let mut scratch = Scratch::new();
        for _ in 0..100 {
            step_env(&model, &mut st, &[], &mut scratch).unwrap();
        }
        let t = 100.0 * 0.002;
        assert!((st.bodies[1].vel.z + 9.81 * t).abs() < 1e-12);
        assert_eq!(st.bodies[0], BodyState::of(&scene.bodies[0]));
    }

    #[test]
    fn resting_sphere_settles() {
        let scene = sphere_scene(0.05, FrictionParams::default());
        let model = Model::new(&scene).unwrap();
        let mut st = EnvState::from_scene(&scene);
        let mut scratch = Scratch::new();
        let mut rep = EnvStepReport::default();
        for _ in 0..2000 {
            rep = step_env(&model, &mut st, &[], &mut scratch).unwrap();
        }
        assert_eq!(rep.contacts, 1);
        assert!(st.bodies[1].vel.norm() < 1e-6, "{:?}", st.bodies[1]);
        assert!(rep.max_penetration > 0.0 && rep.max_penetration < 0.05);
        let w = scratch.contact_wrenches();
        // Step-averaged normal force balances weight.
        assert!((w[0].lambda_n - 9.81).abs() < 1e-4, "{}", w[0].lambda_n);
    }
}

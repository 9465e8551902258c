//! Sampling-based MPC (MPPI) with the engine as rollout model.
//!
//! Actions are planar forces applied to one actuated body.

use std::f64::consts::FRAC_PI_6;
use std::time::Instant;

use comfree_core::world::step_env;
use comfree_core::{EnvState, ExternalWrench, Model, Quat, Scene, Scratch, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::scenes::{PUSH_BOX, PUSH_BOX_HALF, PUSH_PUSHER};
use crate::stats::median;

/// One planar force `[fx, fy]`, N.
pub type Action = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct MppiConfig {
    pub horizon: usize,
    pub n_samples: usize,
    pub temperature: f64,
    pub noise_sigma: f64,
    pub action_lo: f64,
    pub action_hi: f64,
    /// Simulation steps per control step.
    pub substeps: usize,
    pub actuated_body: usize,
    /// Constant force added to every action (e.g. gravity compensation of a hovering actuator).
    pub bias_force: Vec3,
    pub seed: u64,
}

impl Default for MppiConfig {
    fn default() -> Self {
        MppiConfig {
            horizon: 48,
            n_samples: 256,
            temperature: 2e-3,
            noise_sigma: 0.02,
            action_lo: -0.1,
            action_hi: 0.1,
            substeps: 1,
            actuated_body: 0,
            bias_force: Vec3::ZERO,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanFailure {
    #[error("every sampled rollout produced a non-finite cost")]
    AllCostsInfinite,
    #[error("invalid MPPI configuration: {0}")]
    Config(&'static str),
}

impl MppiConfig {
    pub fn validate(&self) -> Result<(), PlanFailure> {
        if self.n_samples < 1 {
            return Err(PlanFailure::Config("n_samples must be >= 1"));
        }
        if self.horizon < 1 {
            return Err(PlanFailure::Config("horizon must be >= 1"));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(PlanFailure::Config("noise_sigma must be > 0"));
        }
        if !(self.temperature > 0.0) {
            return Err(PlanFailure::Config("temperature must be > 0"));
        }
        if !(self.action_lo <= self.action_hi) {
            return Err(PlanFailure::Config("action_lo must not exceed action_hi"));
        }
        if self.substeps < 1 {
            return Err(PlanFailure::Config("substeps must be >= 1"));
        }
        Ok(())
    }

    pub fn clip(&self, a: Action) -> Action {
        [a[0].clamp(self.action_lo, self.action_hi), a[1].clamp(self.action_lo, self.action_hi)]
    }
}

/// What a position term measures against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Point(Vec3),
    /// Another body's position plus a world-frame offset.
    Body { body: usize, offset: Vec3 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TermKind {
    /// Squared distance; `planar` ignores z.
    PositionError { body: usize, target: Target, planar: bool },
    /// `1 − (q_targetᵀq)²`.
    OrientationError { body: usize, target: Quat },
    /// Squared linear speed.
    Velocity { body: usize },
    /// 1 when the body's height is below `z_below`, else 0.
    Fallen { body: usize, z_below: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostTerm {
    pub weight: f64,
    pub kind: TermKind,
}

impl CostTerm {
    pub fn eval(&self, s: &EnvState) -> f64 {
        let v = match self.kind {
            TermKind::PositionError { body, target, planar } => {
                let goal = match target {
                    Target::Point(p) => p,
                    Target::Body { body: b, offset } => s.bodies[b].pos + offset,
                };
                let mut d = s.bodies[body].pos - goal;
                if planar {
                    d.z = 0.0;
                }
                d.norm_squared()
            }
            TermKind::OrientationError { body, target } => {
                let c = target.dot(s.bodies[body].orient);
                1.0 - c * c
            }
            TermKind::Velocity { body } => s.bodies[body].vel.norm_squared(),
            TermKind::Fallen { body, z_below } => {
                if s.bodies[body].pos.z < z_below {
                    1.0
                } else {
                    0.0
                }
            }
        };
        self.weight * v
    }
}

/// `J = Σₜ c(xₜ₊₁) + V(x_H)`, each a weighted sum of terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CostSpec {
    pub running: Vec<CostTerm>,
    pub terminal: Vec<CostTerm>,
}

impl CostSpec {
    pub fn validate(&self) -> Result<(), PlanFailure> {
        if self.running.iter().chain(&self.terminal).any(|t| !t.weight.is_finite()) {
            return Err(PlanFailure::Config("cost weights must be finite"));
        }
        if self.terminal.iter().any(|t| t.weight < 0.0) {
            return Err(PlanFailure::Config("terminal weights must be >= 0"));
        }
        Ok(())
    }

    pub fn running_cost(&self, s: &EnvState) -> f64 {
        self.running.iter().map(|t| t.eval(s)).sum()
    }

    pub fn terminal_cost(&self, s: &EnvState) -> f64 {
        self.terminal.iter().map(|t| t.eval(s)).sum()
    }
}

/// `U = u₀ … u_{H−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPlan {
    pub actions: Vec<Action>,
}

impl ControlPlan {
    pub fn zeros(horizon: usize) -> Self {
        ControlPlan { actions: vec![[0.0; 2]; horizon] }
    }

    /// Drops `u₀` and repeats the last action.
    pub fn shift(&mut self) {
        if let Some(&last) = self.actions.last() {
            self.actions.remove(0);
            self.actions.push(last);
        }
    }

    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.actions.iter().all(|a| a.iter().all(|&x| (lo..=hi).contains(&x)))
    }
}

/// Simulates every plan from `snapshot`; non-finite outcomes cost `+∞`.
pub fn rollout_costs(model: &Model, snapshot: &EnvState, plans: &[ControlPlan], cost: &CostSpec, cfg: &MppiConfig) -> Vec<f64> {
    let run = |plan: &ControlPlan| -> f64 {
        let mut state = snapshot.clone();
        let mut scratch = Scratch::new();
        let mut ext = vec![ExternalWrench::default(); model.n_bodies()];
        let mut total = 0.0;
        for u in &plan.actions {
            ext[cfg.actuated_body].force = cfg.bias_force + Vec3::new(u[0], u[1], 0.0);
            for _ in 0..cfg.substeps {
                if step_env(model, &mut state, &ext, &mut scratch).is_err() {
                    return f64::INFINITY;
                }
            }
            total += cost.running_cost(&state);
        }
        total += cost.terminal_cost(&state);
        if total.is_finite() {
            total
        } else {
            f64::INFINITY
        }
    };
    plans.par_iter().map(run).collect()
}

/// Softmin weights `exp(−(Jᵢ − min J)/λ)`, normalized; infinite costs get weight 0.
pub fn mppi_weights(costs: &[f64], temperature: f64) -> Result<Vec<f64>, PlanFailure> {
    let min = costs.iter().copied().filter(|c| c.is_finite()).fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(PlanFailure::AllCostsInfinite);
    }
    let mut w: Vec<f64> = costs.iter().map(|&c| if c.is_finite() { (-(c - min) / temperature).exp() } else { 0.0 }).collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    Ok(w)
}

/// Weighted average of `nominal + εᵢ`, clipped to the action bounds.
pub fn mppi_update(
    nominal: &ControlPlan,
    costs: &[f64],
    noise: &[Vec<Action>],
    cfg: &MppiConfig,
) -> Result<ControlPlan, PlanFailure> {
    let w = mppi_weights(costs, cfg.temperature)?;
    let mut out = ControlPlan::zeros(nominal.actions.len());
    for (t, a) in out.actions.iter_mut().enumerate() {
        let mut acc = [0.0; 2];
        for (wi, eps) in w.iter().zip(noise) {
            if *wi == 0.0 {
                continue;
            }
            for d in 0..2 {
                acc[d] += wi * (nominal.actions[t][d] + eps[t][d]);
            }
        }
        *a = cfg.clip(acc);
    }
    Ok(out)
}

/// Draws `n_samples` noise sequences of length `horizon`.
pub fn sample_noise(rng: &mut ChaCha8Rng, cfg: &MppiConfig) -> Vec<Vec<Action>> {
    let normal = Normal::new(0.0, cfg.noise_sigma).expect("validated sigma");
    (0..cfg.n_samples).map(|_| (0..cfg.horizon).map(|_| [normal.sample(rng), normal.sample(rng)]).collect()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlStep {
    pub step: usize,
    pub action: Action,
    /// Weighted cost estimate of the updated plan.
    pub plan_cost: f64,
    pub solve_seconds: f64,
    pub state: EnvState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub steps: Vec<ControlStep>,
    pub stopped_early: bool,
}

/// Closed-loop control of `state` for up to `n_control_steps`; `done` ends the run early.
pub fn receding_horizon(
    model: &Model,
    state: &mut EnvState,
    cost: &CostSpec,
    cfg: &MppiConfig,
    n_control_steps: usize,
    mut done: impl FnMut(&EnvState) -> bool,
) -> Result<Execution, PlanFailure> {
    cfg.validate()?;
    cost.validate()?;
    if n_control_steps == 0 {
        return Err(PlanFailure::Config("n_control_steps must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut nominal = ControlPlan::zeros(cfg.horizon);
    let mut scratch = Scratch::new();
    let mut ext = vec![ExternalWrench::default(); model.n_bodies()];
    let mut steps = Vec::with_capacity(n_control_steps);
    for k in 0..n_control_steps {
        let start = Instant::now();
        let noise = sample_noise(&mut rng, cfg);
        let plans: Vec<ControlPlan> = noise
            .iter()
            .map(|eps| ControlPlan {
                actions: nominal.actions.iter().zip(eps).map(|(u, e)| cfg.clip([u[0] + e[0], u[1] + e[1]])).collect(),
            })
            .collect();
        let costs = rollout_costs(model, state, &plans, cost, cfg);
        let weights = mppi_weights(&costs, cfg.temperature)?;
        let plan_cost = weights.iter().zip(&costs).filter(|(w, _)| **w > 0.0).map(|(w, c)| w * c).sum();
        nominal = mppi_update(&nominal, &costs, &noise, cfg)?;
        let solve_seconds = start.elapsed().as_secs_f64();

        let u = nominal.actions[0];
        ext[cfg.actuated_body].force = cfg.bias_force + Vec3::new(u[0], u[1], 0.0);
        for _ in 0..cfg.substeps {
            // A diverged live world leaves nothing to plan from.
            step_env(model, state, &ext, &mut scratch).map_err(|_| PlanFailure::AllCostsInfinite)?;
        }
        nominal.shift();
        steps.push(ControlStep { step: k, action: u, plan_cost, solve_seconds, state: state.clone() });
        if done(state) {
            return Ok(Execution { steps, stopped_early: true });
        }
    }
    Ok(Execution { steps, stopped_early: false })
}

/// Planar distance from the box to the goal that counts as success, m.
pub const PUSH_GOAL_RADIUS: f64 = 0.05;
/// Distance of the goal from the box's start, m.
pub const PUSH_GOAL_DISTANCE: f64 = 0.12;

/// Goal for `seed`: [`PUSH_GOAL_DISTANCE`] from the origin, bearing uniform in ±30° about +x.
pub fn push_goal(seed: u64) -> Vec3 {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bearing = rng.random_range(-FRAC_PI_6..=FRAC_PI_6);
    Vec3::new(PUSH_GOAL_DISTANCE * bearing.cos(), PUSH_GOAL_DISTANCE * bearing.sin(), PUSH_BOX_HALF)
}

/// Box-to-goal distance plus pusher-to-box distance, both squared and planar.
pub fn push_cost(goal: Vec3) -> CostSpec {
    CostSpec {
        running: vec![
            CostTerm { weight: 10.0, kind: TermKind::PositionError { body: PUSH_BOX, target: Target::Point(goal), planar: true } },
            CostTerm {
                weight: 1.0,
                kind: TermKind::PositionError { body: PUSH_PUSHER, target: Target::Body { body: PUSH_BOX, offset: Vec3::ZERO }, planar: true },
            },
        ],
        terminal: vec![],
    }
}

/// `base` with the pusher as actuated body and its weight cancelled by the bias force.
pub fn push_config(model: &Model, base: &MppiConfig) -> MppiConfig {
    MppiConfig { actuated_body: PUSH_PUSHER, bias_force: -(model.config.gravity * model.mass(PUSH_PUSHER)), ..base.clone() }
}

pub fn push_distance(state: &EnvState, goal: Vec3) -> f64 {
    let mut d = state.bodies[PUSH_BOX].pos - goal;
    d.z = 0.0;
    d.norm()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PushOutcome {
    pub seed: u64,
    pub goal: Vec3,
    pub success: bool,
    pub control_steps: usize,
    pub final_distance: f64,
    pub median_solve_seconds: f64,
}

/// One closed-loop push from the scene's initial state; stops as soon as the box is within [`PUSH_GOAL_RADIUS`].
pub fn run_push(scene: &Scene, base: &MppiConfig, seed: u64, max_control_steps: usize) -> Result<PushOutcome, PlanFailure> {
    let model = Model::new(scene).map_err(|_| PlanFailure::Config("invalid push scene"))?;
    let cfg = MppiConfig { seed, ..push_config(&model, base) };
    let goal = push_goal(seed);
    let mut state = EnvState::from_scene(scene);
    let exec = receding_horizon(&model, &mut state, &push_cost(goal), &cfg, max_control_steps, |s| push_distance(s, goal) < PUSH_GOAL_RADIUS)?;
    let times: Vec<f64> = exec.steps.iter().map(|s| s.solve_seconds).collect();
    Ok(PushOutcome {
        seed,
        goal,
        success: exec.stopped_early,
        control_steps: exec.steps.len(),
        final_distance: push_distance(&state, goal),
        median_solve_seconds: median(&times),
    })
}

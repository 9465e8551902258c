//! Batched stepping of independent environments over a worker pool.
//!
//! Each phase (broadphase, narrowphase, solve, integrate) runs over all
//! environments before the next one starts, so the per-phase wall clock can be
//! measured. Environments never read each other's state, and every cross-env
//! aggregate is an integer sum or a max, so results do not depend on the
//! number of workers.

use std::sync::Arc;
use std::time::Instant;

use comfree_core::world::{self, EnvStepReport};
use comfree_core::{CoreError, EnvState, ExternalWrench, Model, Scene, Scratch, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

/// Variance of the per-axis initial linear velocity jitter, m²/s².
pub const JITTER_VARIANCE: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum StepError {
    #[error("environment {env}: {source}")]
    Env { env: usize, source: CoreError },
    #[error("invalid model: {0}")]
    Model(CoreError),
    #[error("{0}")]
    Precondition(&'static str),
}

/// Worker count: `COMFREE_THREADS` if set to a positive integer, otherwise all cores.
pub fn worker_count() -> usize {
    std::env::var("COMFREE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn build_pool(threads: usize) -> Arc<rayon::ThreadPool> {
    Arc::new(rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool"))
}

/// Per-step record of one batched step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepStats {
    pub step: u64,
    /// Contacts summed over environments.
    pub contacts: usize,
    pub facets: usize,
    pub t_broadphase: f64,
    pub t_narrowphase: f64,
    pub t_solve: f64,
    pub t_integrate: f64,
    /// Largest penetration over all environments, m.
    pub max_penetration: f64,
    /// Kinetic energy of each environment after the step, J.
    pub kinetic_energy: Vec<f64>,
}

impl StepStats {
    pub fn t_total(&self) -> f64 {
        self.t_broadphase + self.t_narrowphase + self.t_solve + self.t_integrate
    }
}

struct Env {
    state: EnvState,
    scratch: Scratch,
    external: Vec<ExternalWrench>,
    report: EnvStepReport,
    rng: ChaCha8Rng,
}

pub struct BatchedWorld {
    model: Arc<Model>,
    envs: Vec<Env>,
    step_count: u64,
    threads: usize,
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl Clone for BatchedWorld {
    fn clone(&self) -> Self {
        BatchedWorld {
            model: self.model.clone(),
            envs: self
                .envs
                .iter()
                .map(|e| Env {
                    state: e.state.clone(),
                    scratch: Scratch::new(),
                    external: e.external.clone(),
                    report: e.report,
                    rng: e.rng.clone(),
                })
                .collect(),
            step_count: self.step_count,
            threads: self.threads,
            pool: self.pool.clone(),
        }
    }
}

/// `n_envs` copies of `scene`. With `jitter_seed`, each dynamic body's initial
/// linear velocity gets i.i.d. Gaussian noise of variance [`JITTER_VARIANCE`] per axis.
pub fn replicate_envs(scene: &Scene, n_envs: usize, jitter_seed: Option<u64>) -> Result<BatchedWorld, StepError> {
    if n_envs == 0 {
        return Err(StepError::Precondition("n_envs must be >= 1"));
    }
    let model = Arc::new(Model::new(scene).map_err(StepError::Model)?);
    let base = EnvState::from_scene(scene);
    let normal = Normal::new(0.0, JITTER_VARIANCE.sqrt()).expect("finite sigma");
    let envs = (0..n_envs)
        .map(|k| {
            let mut state = base.clone();
            if let Some(seed) = jitter_seed {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                for (i, b) in state.bodies.iter_mut().enumerate() {
                    if model.is_dynamic(i) {
                        b.vel += Vec3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng));
                    }
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(scene.config.seed);
            rng.set_stream(k as u64);
            Env {
                state,
                scratch: Scratch::new(),
                external: vec![ExternalWrench::default(); model.n_bodies()],
                report: EnvStepReport::default(),
                rng,
            }
        })
        .collect();
    Ok(BatchedWorld::from_parts(model, envs))
}

impl BatchedWorld {
    fn from_parts(model: Arc<Model>, envs: Vec<Env>) -> Self {
        let threads = worker_count().min(envs.len()).max(1);
        let pool = (threads > 1).then(|| build_pool(threads));
        BatchedWorld { model, envs, step_count: 0, threads, pool }
    }

    /// `n` environments all starting from `state`, sharing this world's model.
    pub fn with_states(model: Arc<Model>, states: Vec<EnvState>, seed: u64) -> Self {
        let envs = states
            .into_iter()
            .enumerate()
            .map(|(k, state)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                Env {
                    external: vec![ExternalWrench::default(); model.n_bodies()],
                    state,
                    scratch: Scratch::new(),
                    report: EnvStepReport::default(),
                    rng,
                }
            })
            .collect();
        Self::from_parts(model, envs)
    }

    /// Caps the worker count (never above the environment count).
    pub fn set_threads(&mut self, threads: usize) {
        let t = threads.clamp(1, self.envs.len());
        if t != self.threads {
            self.threads = t;
            self.pool = (t > 1).then(|| build_pool(t));
        }
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    pub fn model(&self) -> &Arc<Model> {
        &self.model
    }

    pub fn n_envs(&self) -> usize {
        self.envs.len()
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn state(&self, env: usize) -> &EnvState {
        &self.envs[env].state
    }

    pub fn state_mut(&mut self, env: usize) -> &mut EnvState {
        &mut self.envs[env].state
    }

    pub fn states(&self) -> Vec<EnvState> {
        self.envs.iter().map(|e| e.state.clone()).collect()
    }

    /// Contacts and facet impulses of the last step of `env`.
    pub fn scratch(&self, env: usize) -> &Scratch {
        &self.envs[env].scratch
    }

    pub fn rng_mut(&mut self, env: usize) -> &mut ChaCha8Rng {
        &mut self.envs[env].rng
    }

    /// Wrench applied to `body` of `env` on every following step until changed.
    pub fn set_external(&mut self, env: usize, body: usize, wrench: ExternalWrench) {
        self.envs[env].external[body] = wrench;
    }

    pub fn clear_external(&mut self) {
        for e in &mut self.envs {
            e.external.fill(ExternalWrench::default());
        }
    }

    fn phase<F>(&mut self, f: F) -> Result<f64, StepError>
    where
        F: Fn(&Model, &mut Env) -> Result<(), CoreError> + Sync,
    {
        let model = &*self.model;
        let start = Instant::now();
        let result = match &self.pool {
            Some(pool) => pool.install(|| {
                self.envs.par_iter_mut().enumerate().try_for_each(|(k, e)| f(model, e).map_err(|source| StepError::Env { env: k, source }))
            }),
            None => self.envs.iter_mut().enumerate().try_for_each(|(k, e)| f(model, e).map_err(|source| StepError::Env { env: k, source })),
        };
        let elapsed = start.elapsed().as_secs_f64();
        result.map(|()| elapsed)
    }

    /// Advances every environment by one step.
    pub fn step(&mut self) -> Result<StepStats, StepError> {
        let t_broadphase = self.phase(|m, e| {
            world::broadphase(m, &e.state, &mut e.scratch);
            Ok(())
        })?;
        let t_narrowphase = self.phase(|m, e| world::narrowphase_all(m, &e.state, &mut e.scratch))?;
        let t_solve = self.phase(|m, e| world::solve_contacts(m, &mut e.state, &e.external, &mut e.scratch))?;
        let t_integrate = self.phase(|m, e| {
            world::integrate(m, &mut e.state)?;
            e.report = world::report(m, &e.state, &e.scratch);
            Ok(())
        })?;
        self.step_count += 1;
        let mut stats = StepStats {
            step: self.step_count,
            t_broadphase,
            t_narrowphase,
            t_solve,
            t_integrate,
            kinetic_energy: Vec::with_capacity(self.envs.len()),
            ..Default::default()
        };
        for e in &self.envs {
            stats.contacts += e.report.contacts;
            stats.facets += e.report.facets;
            stats.max_penetration = stats.max_penetration.max(e.report.max_penetration);
            stats.kinetic_energy.push(e.report.kinetic_energy);
        }
        Ok(stats)
    }

    /// Runs `n_steps` steps; `observe(step, world)` sees a read-only view every `stride` steps.
    pub fn run(
        &mut self,
        n_steps: usize,
        stride: usize,
        mut observe: impl FnMut(u64, &BatchedWorld),
    ) -> Result<Vec<StepStats>, StepError> {
        if n_steps == 0 {
            return Err(StepError::Precondition("n_steps must be >= 1"));
        }
        let stride = stride.max(1);
        let mut out = Vec::with_capacity(n_steps);
        for _ in 0..n_steps {
            out.push(self.step()?);
            if self.step_count % stride as u64 == 0 {
                observe(self.step_count, self);
            }
        }
        Ok(out)
    }
}

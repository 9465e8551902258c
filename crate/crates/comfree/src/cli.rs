//! The `comfree` command line.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use comfree_core::{Scene, SimConfig, Vec3};

use crate::batch::replicate_envs;
use crate::bench::{self, BenchReport, DecayParams, ScalingParams, StabilitySetting, ThroughputParams};
use crate::mppi::{run_push, MppiConfig, PUSH_GOAL_RADIUS};
use crate::output::{emit_csv, fmt_sig9, write_state_dump, Series};
use crate::scene_io::load_scene;
use crate::scenes;
use crate::stats::median;

#[derive(Debug, Parser)]
#[command(name = "comfree", version, about = "Complementarity-free rigid-body contact simulation and benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Step a scene file and optionally write per-step stats and a final state dump.
    Simulate(SimulateArgs),
    /// Run one benchmark and write its CSVs and report.
    Bench {
        #[command(subcommand)]
        which: BenchCommand,
    },
    /// Closed-loop MPPI on the planar push task over several seeds.
    MppiPush(MppiArgs),
}

/// Overrides for every simulation setting; unset flags keep the scene or default value.
#[derive(Debug, Clone, Default, Args)]
pub struct SimFlags {
    #[arg(long)]
    pub dt: Option<f64>,
    /// Gravity vector `x,y,z`, m/s².
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub gravity: Option<Vec3>,
    #[arg(long)]
    pub n_facets_t: Option<usize>,
    #[arg(long)]
    pub n_facets_rol: Option<usize>,
    /// Contact margin, m.
    #[arg(long)]
    pub margin: Option<f64>,
    /// Stiffness k_user.
    #[arg(long)]
    pub k: Option<f64>,
    /// Damping d_user.
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub midpoint: Option<f64>,
    #[arg(long)]
    pub power: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl SimFlags {
    pub fn apply(&self, cfg: &mut SimConfig) {
        let i = &mut cfg.impedance;
        set(&mut cfg.dt, self.dt);
        set(&mut cfg.gravity, self.gravity);
        set(&mut cfg.n_facets_t, self.n_facets_t);
        set(&mut cfg.n_facets_rol, self.n_facets_rol);
        set(&mut cfg.contact_margin, self.margin);
        set(&mut i.k_user, self.k);
        set(&mut i.d_user, self.d);
        set(&mut i.r_min, self.r_min);
        set(&mut i.r_max, self.r_max);
        set(&mut i.width, self.width);
        set(&mut i.midpoint, self.midpoint);
        set(&mut i.power, self.power);
        set(&mut cfg.seed, self.seed);
    }

    fn config(&self) -> Result<SimConfig, String> {
        let mut cfg = SimConfig::default();
        self.apply(&mut cfg);
        cfg.validate().map_err(|e| format!("invalid {}: {}", e.field, e.reason))?;
        Ok(cfg)
    }
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match v[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err("expected x,y,z".into()),
    }
}

fn set<T: Copy>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scene file (JSON).
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Number of copies of the scene stepped together.
    #[arg(long, default_value_t = 1)]
    pub n_envs: usize,
    /// Seed of the initial-velocity jitter; no jitter when omitted.
    #[arg(long)]
    pub jitter_seed: Option<u64>,
    /// Directory for `simulate.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Full-precision dump of the final state.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimFlags,
}

#[derive(Debug, Clone, Args)]
pub struct BenchCommon {
    #[arg(long, default_value = "bench_out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub sim: SimFlags,
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Drop-pile penetration depth per (k_user, d_user).
    Penetration {
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Settings `k:d,k:d,...`; defaults to the sweep, or to `--k/--d` when given.
        #[arg(long, value_delimiter = ',')]
        gains: Option<Vec<String>>,
        /// Scene file used instead of the built-in drop pile.
        #[arg(long)]
        scene: Option<PathBuf>,
        #[command(flatten)]
        common: BenchCommon,
    },
    /// Spin decay of a sphere per torsional friction coefficient.
    Torsion {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [0.0, 0.001, 0.005, 0.01])]
        mu: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long, default_value_t = 300_000)]
        max_steps: usize,
        #[arg(long, default_value_t = 50)]
        stride: usize,
        #[command(flatten)]
        common: BenchCommon,
    },
    /// Speed decay of a rolling cylinder per rolling friction coefficient.
    Rolling {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [0.0, 0.001, 0.005, 0.01])]
        mu: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        speed: f64,
        /// Initial gap between cylinder and ground, m.
        #[arg(long, default_value_t = 0.0)]
        lift: f64,
        #[arg(long, default_value_t = 400_000)]
        max_steps: usize,
        #[arg(long, default_value_t = 50)]
        stride: usize,
        #[command(flatten)]
        common: BenchCommon,
    },
    /// Falling, sliding cube over a (dt, k, d) grid.
    Stability {
        /// Settings `dt:k:d,...`; defaults to the built-in grid.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<String>>,
        #[command(flatten)]
        common: BenchCommon,
    },
    /// Solve time against contact count over an environment ladder.
    Scaling {
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4, 8, 16, 32])]
        envs: Vec<usize>,
        #[arg(long, default_value_t = 300)]
        warmup: usize,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[command(flatten)]
        common: BenchCommon,
    },
    /// Batched throughput with periodic random pushes.
    Throughput {
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 32, 64, 128, 256])]
        envs: Vec<usize>,
        #[arg(long, default_value_t = 1500)]
        steps: usize,
        #[arg(long, default_value_t = 50)]
        perturb_every: usize,
        /// Bound of each horizontal push component, N.
        #[arg(long, default_value_t = 0.2)]
        push_force: f64,
        #[command(flatten)]
        common: BenchCommon,
    },
}

#[derive(Debug, Args)]
pub struct MppiArgs {
    #[arg(long, default_value_t = 256)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 48)]
    pub horizon: usize,
    #[arg(long, default_value_t = 2e-3)]
    pub temperature: f64,
    #[arg(long, default_value_t = 0.02)]
    pub sigma: f64,
    /// Actions are clipped to `[-bound, bound]` N.
    #[arg(long, default_value_t = 0.1)]
    pub action_bound: f64,
    #[arg(long, default_value_t = 1)]
    pub substeps: usize,
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    #[arg(long, default_value_t = 500)]
    pub max_steps: usize,
    /// Required fraction of successful seeds.
    #[arg(long, default_value_t = 0.8)]
    pub success_rate: f64,
    /// Directory for `mppi_push.csv` and `mppi_push_timing.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimFlags,
}

/// Runs a parsed command. `Ok(true)` when every threshold passed.
pub fn run(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Bench { which } => run_bench(which),
        Command::MppiPush(a) => mppi_push(a),
    }
}

fn simulate(a: SimulateArgs) -> Result<bool, String> {
    let mut scene = load_scene(&a.scene).map_err(|e| e.to_string())?;
    a.sim.apply(&mut scene.config);
    scene.validate().map_err(|e| format!("invalid {}: {}", e.field, e.reason))?;
    let mut world = replicate_envs(&scene, a.n_envs, a.jitter_seed).map_err(|e| e.to_string())?;
    let mut series = Series::new(&["step", "contacts", "facets", "max_penetration", "kinetic_energy"]);
    let stats = world.run(a.steps, 1, |_, _| {}).map_err(|e| e.to_string())?;
    for s in &stats {
        let ke: f64 = s.kinetic_energy.iter().sum();
        series.push(vec![s.step.into(), s.contacts.into(), s.facets.into(), s.max_penetration.into(), ke.into()]);
    }
    if let Some(dir) = &a.out {
        emit_csv(&series, dir.join("simulate.csv")).map_err(|e| e.to_string())?;
    }
    if let Some(path) = &a.dump {
        write_state_dump(&world, path).map_err(|e| e.to_string())?;
    }
    let last = stats.last().expect("at least one step");
    let wall: f64 = stats.iter().map(|s| s.t_total()).sum();
    println!(
        "{} steps x {} envs: {} contacts at the end, max penetration {} m, {} s stepping",
        a.steps,
        a.n_envs,
        last.contacts,
        fmt_sig9(last.max_penetration),
        fmt_sig9(wall)
    );
    Ok(true)
}

fn parse_tuple(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s.split(':').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| format!("{s:?}: {e}"))?;
    if v.len() != n {
        return Err(format!("{s:?}: expected {n} values separated by ':'"));
    }
    Ok(v)
}

fn finish(report: BenchReport, out: &Path) -> Result<bool, String> {
    print!("{}", report.summary());
    let path = out.join(format!("{}_report.json", report.id));
    report.write_json(&path).map_err(|e| e.to_string())?;
    println!("{}", if report.passed() { "PASS" } else { "FAIL" });
    Ok(report.passed())
}

fn run_bench(which: BenchCommand) -> Result<bool, String> {
    let e = |e: bench::BenchError| e.to_string();
    match which {
        BenchCommand::Penetration { steps, gains, scene, common } => {
            let base = common.sim.config()?;
            let settings = match gains {
                Some(list) => list.iter().map(|s| parse_tuple(s, 2).map(|v| (v[0], v[1]))).collect::<Result<Vec<_>, _>>()?,
                None if common.sim.k.is_some() || common.sim.d.is_some() => vec![(base.impedance.k_user, base.impedance.d_user)],
                None => vec![(0.1, 0.001), (0.3, 0.001), (0.5, 0.001), (0.5, 0.005)],
            };
            let custom: Option<Scene> = scene.map(|p| load_scene(p).map_err(|e| e.to_string())).transpose()?;
            let build = |cfg: SimConfig| match &custom {
                Some(s) => Scene::new(s.bodies.clone(), cfg),
                None => scenes::drop_pile(cfg),
            };
            finish(bench::bench_penetration(&base, &settings, steps, &build, &common.out).map_err(e)?, &common.out)
        }
        BenchCommand::Torsion { mu, omega, max_steps, stride, common } => {
            let base = common.sim.config()?;
            let p = DecayParams { mu, initial_speed: omega, max_steps, stride, ..DecayParams::torsion() };
            finish(bench::bench_torsion(&base, &p, &common.out).map_err(e)?, &common.out)
        }
        BenchCommand::Rolling { mu, speed, lift, max_steps, stride, common } => {
            let base = common.sim.config()?;
            let p = DecayParams { mu, initial_speed: speed, max_steps, stride, ..DecayParams::rolling() };
            finish(bench::bench_rolling(&base, &p, lift, &common.out).map_err(e)?, &common.out)
        }
        BenchCommand::Stability { grid, common } => {
            let base = common.sim.config()?;
            let grid = match grid {
                Some(list) => list
                    .iter()
                    .map(|s| parse_tuple(s, 3).map(|v| StabilitySetting { dt: v[0], k_user: v[1], d_user: v[2] }))
                    .collect::<Result<Vec<_>, _>>()?,
                None => bench::stability_grid(&base),
            };
            finish(bench::bench_stability(&base, &grid, &common.out).map_err(e)?, &common.out)
        }
        BenchCommand::Scaling { envs, warmup, steps, common } => {
            let base = common.sim.config()?;
            finish(bench::bench_scaling(&base, &ScalingParams { n_envs: envs, warmup, steps }, &common.out).map_err(e)?, &common.out)
        }
        BenchCommand::Throughput { envs, steps, perturb_every, push_force, common } => {
            let base = common.sim.config()?;
            let p = ThroughputParams { n_envs: envs, steps, perturb_every, push_force };
            finish(bench::bench_throughput(&base, &p, &common.out).map_err(e)?, &common.out)
        }
    }
}

fn mppi_push(a: MppiArgs) -> Result<bool, String> {
    let base = a.sim.config()?;
    let scene = scenes::push_task(base);
    let cfg = MppiConfig {
        horizon: a.horizon,
        n_samples: a.n_samples,
        temperature: a.temperature,
        noise_sigma: a.sigma,
        action_lo: -a.action_bound,
        action_hi: a.action_bound,
        substeps: a.substeps,
        ..MppiConfig::default()
    };
    cfg.validate().map_err(|e| e.to_string())?;
    let mut series = Series::new(&["seed", "goal_x", "goal_y", "success", "control_steps", "final_distance"]);
    let mut timing = Series::new(&["seed", "median_solve_ms"]);
    let mut successes = 0u64;
    let mut solve = Vec::new();
    for seed in a.first_seed..a.first_seed + a.seeds {
        let o = run_push(&scene, &cfg, seed, a.max_steps).map_err(|e| e.to_string())?;
        successes += o.success as u64;
        solve.push(o.median_solve_seconds * 1e3);
        println!(
            "seed {seed}: {} after {} control steps, distance {} m, median solve {} ms",
            if o.success { "reached" } else { "missed" },
            o.control_steps,
            fmt_sig9(o.final_distance),
            fmt_sig9(o.median_solve_seconds * 1e3)
        );
        series.push(vec![
            seed.into(),
            o.goal.x.into(),
            o.goal.y.into(),
            (o.success as i64).into(),
            o.control_steps.into(),
            o.final_distance.into(),
        ]);
        timing.push(vec![seed.into(), (o.median_solve_seconds * 1e3).into()]);
    }
    if let Some(dir) = &a.out {
        emit_csv(&series, dir.join("mppi_push.csv")).map_err(|e| e.to_string())?;
        emit_csv(&timing, dir.join("mppi_push_timing.csv")).map_err(|e| e.to_string())?;
    }
    let rate = if a.seeds == 0 { 0.0 } else { successes as f64 / a.seeds as f64 };
    let pass = a.seeds > 0 && rate >= a.success_rate;
    println!(
        "{successes}/{} seeds within {} m of the goal in <= {} control steps; median solve {} ms",
        a.seeds,
        fmt_sig9(PUSH_GOAL_RADIUS),
        a.max_steps,
        fmt_sig9(median(&solve))
    );
    println!("{}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

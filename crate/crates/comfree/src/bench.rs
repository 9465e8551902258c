//! Benchmarks: penetration, torsion, rolling, stability, scaling and throughput.
//!
//! Each run writes its series as CSV under an output directory and returns a
//! [`BenchReport`] whose means and standard deviations are computed from the
//! values exactly as written. Wall-clock columns go to separate `*_timing.csv`
//! files so the remaining CSVs are byte-reproducible.

use std::path::{Path, PathBuf};
use std::time::Instant;

use comfree_core::world::step_env;
use comfree_core::{EnvState, ExternalWrench, Model, Scene, Scratch, SimConfig, ValidationError, Vec3};
use rand::Rng;
use serde::Serialize;

use crate::batch::{replicate_envs, BatchedWorld, StepError};
use crate::output::{emit_csv, fmt_sig9, write_state_dump, OutputError, Series};
use crate::scenes;
use crate::stats::{log_log_fit, mean_std, median, moving_average_rises, LinearFit};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid {}: {}", .0.field, .0.reason)]
    Validation(ValidationError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl From<ValidationError> for BenchError {
    fn from(e: ValidationError) -> Self {
        BenchError::Validation(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
    pub series: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub id: String,
    pub config: Vec<(String, String)>,
    pub metrics: Vec<Metric>,
    pub checks: Vec<Check>,
    pub flags: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl BenchReport {
    fn new(id: &str, base: &SimConfig) -> Self {
        let i = &base.impedance;
        let config = [
            ("dt", fmt_sig9(base.dt)),
            ("gravity", format!("{} {} {}", fmt_sig9(base.gravity.x), fmt_sig9(base.gravity.y), fmt_sig9(base.gravity.z))),
            ("n_facets_t", base.n_facets_t.to_string()),
            ("n_facets_rol", base.n_facets_rol.to_string()),
            ("contact_margin", fmt_sig9(base.contact_margin)),
            ("k_user", fmt_sig9(i.k_user)),
            ("d_user", fmt_sig9(i.d_user)),
            ("r_min", fmt_sig9(i.r_min)),
            ("r_max", fmt_sig9(i.r_max)),
            ("width", fmt_sig9(i.width)),
            ("midpoint", fmt_sig9(i.midpoint)),
            ("power", fmt_sig9(i.power)),
            ("seed", base.seed.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        BenchReport { id: id.into(), config, metrics: Vec::new(), checks: Vec::new(), flags: Vec::new(), files: Vec::new() }
    }

    fn echo(&mut self, key: &str, value: impl Into<String>) {
        self.config.push((key.into(), value.into()));
    }

    fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), pass, detail: detail.into() });
    }

    fn metric(&mut self, name: impl Into<String>, values: &[f64], series: &Path) {
        let (mean, std) = mean_std(values);
        self.metrics.push(Metric { name: name.into(), mean, std, count: values.len(), series: series.to_path_buf() });
    }

    fn emit(&mut self, series: &Series, path: PathBuf) -> Result<PathBuf, BenchError> {
        emit_csv(series, &path)?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn metric_named(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Human-readable summary, one line per metric and check.
    pub fn summary(&self) -> String {
        let mut s = format!("== {} ==\n", self.id);
        for m in &self.metrics {
            s += &format!("  {:<40} mean {:>14} std {:>14} n {}\n", m.name, fmt_sig9(m.mean), fmt_sig9(m.std), m.count);
        }
        for f in &self.flags {
            s += &format!("  flag: {f}\n");
        }
        for c in &self.checks {
            s += &format!("  [{}] {}: {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        s
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), OutputError> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(path, text).map_err(|source| OutputError { path: path.to_path_buf(), source })
    }
}

fn with_gains(base: &SimConfig, k: f64, d: f64) -> SimConfig {
    let mut cfg = base.clone();
    cfg.impedance.k_user = k;
    cfg.impedance.d_user = d;
    cfg
}

fn gains_label(k: f64, d: f64) -> String {
    format!("k={} d={}", fmt_sig9(k), fmt_sig9(d))
}

fn step_single(model: &Model, state: &mut EnvState, scratch: &mut Scratch) -> Result<(), BenchError> {
    let ext = vec![ExternalWrench::default(); model.n_bodies()];
    step_env(model, state, &ext, scratch).map_err(|source| BenchError::Step(StepError::Env { env: 0, source }))?;
    Ok(())
}

fn model_of(scene: &Scene) -> Result<Model, BenchError> {
    scene.validate()?;
    Model::new(scene).map_err(|e| BenchError::Step(StepError::Model(e)))
}

/// Drop-pile penetration for each `(k_user, d_user)`: `max(0, −φ)` in mm of every detected contact at every step.
pub fn bench_penetration(
    base: &SimConfig,
    gains: &[(f64, f64)],
    n_steps: usize,
    scene: &dyn Fn(SimConfig) -> Scene,
    out: &Path,
) -> Result<BenchReport, BenchError> {
    let mut report = BenchReport::new("penetration", base);
    report.echo("n_steps", n_steps.to_string());
    let mut series = Series::new(&["setting", "k_user", "d_user", "step", "contact", "penetration_mm"]);
    let mut runtimes = Vec::new();
    for &(k, d) in gains {
        let cfg = with_gains(base, k, d);
        let model = model_of(&scene(cfg.clone()))?;
        let mut state = EnvState::from_scene(&scene(cfg));
        let mut scratch = Scratch::new();
        let label = gains_label(k, d);
        let start = Instant::now();
        for step in 1..=n_steps {
            step_single(&model, &mut state, &mut scratch)?;
            for (i, c) in scratch.contacts.iter().enumerate() {
                series.push(vec![label.clone().into(), k.into(), d.into(), step.into(), i.into(), ((-c.phi).max(0.0) * 1e3).into()]);
            }
        }
        runtimes.push((label, start.elapsed().as_secs_f64()));
    }
    let path = report.emit(&series, out.join("penetration.csv"))?;
    if series.is_empty() {
        report.flags.push("NoContacts".into());
    }
    let mut means = Vec::new();
    for &(k, d) in gains {
        let label = gains_label(k, d);
        let values = series.filter("setting", &label).column("penetration_mm");
        report.metric(format!("penetration_mm {label}"), &values, &path);
        means.push(((k, d), mean_std(&values).0));
    }
    let mean_at = |k: f64, d: f64| means.iter().find(|(g, _)| *g == (k, d)).map(|(_, m)| *m);

    let mut along_k: Vec<((f64, f64), f64)> = means.iter().copied().filter(|((_, d), _)| *d == 0.001).collect();
    along_k.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0));
    if along_k.len() >= 2 {
        let ok = along_k.windows(2).all(|w| w[1].1 < w[0].1);
        let detail = along_k.iter().map(|((k, _), m)| format!("k={}: {} mm", fmt_sig9(*k), fmt_sig9(*m))).collect::<Vec<_>>().join(", ");
        report.check("mean penetration decreases with k_user at d_user=0.001", ok, detail);
    }
    if let (Some(lo), Some(hi)) = (mean_at(0.1, 0.001), mean_at(0.5, 0.005)) {
        report.check("(k=0.5, d=0.005) below (k=0.1, d=0.001)", hi < lo, format!("{} mm vs {} mm", fmt_sig9(hi), fmt_sig9(lo)));
    }
    for (label, secs) in runtimes {
        report.check(format!("runtime {label} < 60 s"), secs < 60.0, format!("{} s", fmt_sig9(secs)));
    }
    Ok(report)
}

/// Rest threshold of the torsion and rolling benchmarks (rad/s and m/s).
pub const REST_SPEED: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct DecayParams {
    /// Friction coefficients to sweep; 0 is run for `conserve_steps` as a conservation check.
    pub mu: Vec<f64>,
    pub initial_speed: f64,
    pub max_steps: usize,
    pub conserve_steps: usize,
    /// Every `stride`-th step is written, plus the first step at rest.
    pub stride: usize,
}

impl DecayParams {
    pub fn torsion() -> Self {
        DecayParams { mu: vec![0.0, 0.001, 0.005, 0.01], initial_speed: 1.0, max_steps: 300_000, conserve_steps: 1000, stride: 50 }
    }

    pub fn rolling() -> Self {
        DecayParams { mu: vec![0.0, 0.001, 0.005, 0.01], initial_speed: 0.1, max_steps: 400_000, conserve_steps: 500, stride: 50 }
    }
}

struct DecayRun {
    rest_step: Option<usize>,
    max_drift: f64,
    rises: usize,
}

fn decay_run(
    model: &Model,
    mut state: EnvState,
    speed_of: impl Fn(&EnvState) -> f64,
    constrain: impl Fn(&mut EnvState),
    mu: f64,
    p: &DecayParams,
    series: &mut Series,
) -> Result<DecayRun, BenchError> {
    let dt = model.config.dt;
    let mut scratch = Scratch::new();
    let v0 = speed_of(&state);
    let steps = if mu == 0.0 { p.conserve_steps } else { p.max_steps };
    let mut history = Vec::with_capacity(steps.min(1 << 20));
    let mut run = DecayRun { rest_step: None, max_drift: 0.0, rises: 0 };
    series.push(vec![mu.into(), 0usize.into(), 0.0.into(), v0.into()]);
    history.push(v0);
    for step in 1..=steps {
        step_single(model, &mut state, &mut scratch)?;
        constrain(&mut state);
        let v = speed_of(&state);
        history.push(v.abs());
        run.max_drift = run.max_drift.max((v - v0).abs());
        let at_rest = mu > 0.0 && v.abs() < REST_SPEED;
        if step % p.stride.max(1) == 0 || at_rest || mu == 0.0 {
            series.push(vec![mu.into(), step.into(), (step as f64 * dt).into(), v.into()]);
        }
        if at_rest {
            run.rest_step = Some(step);
            break;
        }
    }
    run.rises = moving_average_rises(&history, 5, 1e-12);
    Ok(run)
}

fn decay_report(
    mut report: BenchReport,
    runs: Vec<(f64, DecayRun)>,
    series: &Series,
    file: &str,
    conserve_tol: f64,
    out: &Path,
) -> Result<BenchReport, BenchError> {
    let path = report.emit(series, out.join(file))?;
    let mut rests = Vec::new();
    for (mu, run) in &runs {
        let rows = series.filter("mu", &fmt_sig9(*mu));
        let speed = rows.column("speed");
        let t = rows.column("t");
        if *mu == 0.0 {
            let drift = speed.iter().map(|v| (v - speed[0]).abs()).fold(0.0, f64::max);
            report.metric("speed drift mu=0", &[drift], &path);
            report.check(
                format!("mu=0 conserves speed within {} over {} s", fmt_sig9(conserve_tol), fmt_sig9(t.last().copied().unwrap_or(0.0))),
                run.max_drift <= conserve_tol,
                format!("max drift {}", fmt_sig9(run.max_drift)),
            );
            continue;
        }
        let rest_t = speed.iter().zip(&t).find(|(v, _)| v.abs() < REST_SPEED).map(|(_, t)| *t);
        match rest_t {
            Some(tr) => report.metric(format!("time_to_rest_s mu={}", fmt_sig9(*mu)), &[tr], &path),
            None => report.flags.push(format!("NoRest mu={}", fmt_sig9(*mu))),
        }
        rests.push((*mu, rest_t));
        report.check(
            format!("mu={} 5-step moving average monotone", fmt_sig9(*mu)),
            run.rises == 0,
            format!("{} rises", run.rises),
        );
    }
    rests.sort_by(|a, b| a.0.total_cmp(&b.0));
    if !rests.is_empty() {
        let all_rest = rests.iter().all(|(_, t)| t.is_some());
        let decreasing = rests.windows(2).all(|w| matches!((w[0].1, w[1].1), (Some(a), Some(b)) if b < a));
        let detail = rests
            .iter()
            .map(|(mu, t)| format!("mu={}: {}", fmt_sig9(*mu), t.map_or("no rest".into(), |t| format!("{} s", fmt_sig9(t)))))
            .collect::<Vec<_>>()
            .join(", ");
        report.check("time to rest strictly decreasing in mu", all_rest && decreasing, detail);
    }
    Ok(report)
}

/// Spinning sphere; linear and non-vertical angular velocity are zeroed after every step.
pub fn bench_torsion(base: &SimConfig, p: &DecayParams, out: &Path) -> Result<BenchReport, BenchError> {
    let mut report = BenchReport::new("torsion", base);
    report.echo("omega_z0", fmt_sig9(p.initial_speed));
    report.echo("mu_tor", p.mu.iter().map(|m| fmt_sig9(*m)).collect::<Vec<_>>().join(" "));
    let mut series = Series::new(&["mu", "step", "t", "speed"]);
    let mut runs = Vec::new();
    for &mu in &p.mu {
        let scene = scenes::spinning_sphere(mu, p.initial_speed, base.clone());
        let model = model_of(&scene)?;
        let ball = 1;
        let run = decay_run(
            &model,
            EnvState::from_scene(&scene),
            |s| s.bodies[ball].ang_vel.z,
            |s| {
                let b = &mut s.bodies[ball];
                b.vel = Vec3::ZERO;
                b.ang_vel = Vec3::new(0.0, 0.0, b.ang_vel.z);
            },
            mu,
            p,
            &mut series,
        )?;
        runs.push((mu, run));
    }
    decay_report(report, runs, &series, "torsion.csv", 1e-9, out)
}

/// Cylinder rolling along +x; speed is the horizontal COM speed, so the initial vertical settling does not count.
pub fn bench_rolling(base: &SimConfig, p: &DecayParams, lift: f64, out: &Path) -> Result<BenchReport, BenchError> {
    let mut report = BenchReport::new("rolling", base);
    report.echo("speed0", fmt_sig9(p.initial_speed));
    report.echo("lift", fmt_sig9(lift));
    report.echo("mu_rol", p.mu.iter().map(|m| fmt_sig9(*m)).collect::<Vec<_>>().join(" "));
    let mut series = Series::new(&["mu", "step", "t", "speed"]);
    let mut runs = Vec::new();
    for &mu in &p.mu {
        let scene = scenes::rolling_cylinder(mu, p.initial_speed, lift, base.clone());
        let model = model_of(&scene)?;
        let run = decay_run(&model, EnvState::from_scene(&scene), |s| {
                let v = s.bodies[1].vel;
                v.x.hypot(v.y)
            },
            |_| {}, mu, p, &mut series)?;
        runs.push((mu, run));
    }
    decay_report(report, runs, &series, "rolling.csv", 1e-4, out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilitySetting {
    pub dt: f64,
    pub k_user: f64,
    pub d_user: f64,
}

impl StabilitySetting {
    fn label(&self) -> String {
        format!("dt={} {}", fmt_sig9(self.dt), gains_label(self.k_user, self.d_user))
    }
}

/// Settle deadline and horizontal-speed threshold of the stability benchmark.
pub const SETTLE_TIME: f64 = 5.0;
pub const SETTLE_SPEED: f64 = 1e-2;
/// COM height band of a stable run, m.
pub const Z_BAND: (f64, f64) = (-0.005, 0.2);

/// The default grid: the base gains at three time steps plus stiffer and more damped settings.
pub fn stability_grid(base: &SimConfig) -> Vec<StabilitySetting> {
    let (k, d) = (base.impedance.k_user, base.impedance.d_user);
    let s = |dt, k_user, d_user| StabilitySetting { dt, k_user, d_user };
    vec![
        s(0.002, k, d),
        s(0.002, 0.3, 0.001),
        s(0.002, 0.5, 0.001),
        s(0.002, 0.5, 0.005),
        s(0.02, k, d),
        s(0.02, 0.5, 0.001),
        s(0.2, k, d),
    ]
}

/// Sliding cube for each setting, for `max(5 s, 500 steps)`.
///
/// A row passes when it stays finite, keeps the COM height in [`Z_BAND`] and
/// drops below [`SETTLE_SPEED`] horizontally by [`SETTLE_TIME`]. The two
/// headline checks are the base gains at dt = 0.002 (settles with a monotone
/// 5-step average) and at dt = 0.02 (500 finite steps with `|z| <= 0.2`).
pub fn bench_stability(base: &SimConfig, grid: &[StabilitySetting], out: &Path) -> Result<BenchReport, BenchError> {
    let mut report = BenchReport::new("stability", base);
    let mut series = Series::new(&["setting", "dt", "k_user", "d_user", "step", "t", "z", "horizontal_speed"]);
    let mut outcomes = Vec::new();
    for s in grid {
        let mut cfg = with_gains(base, s.k_user, s.d_user);
        cfg.dt = s.dt;
        let scene = scenes::sliding_cube(cfg);
        let model = model_of(&scene)?;
        let mut state = EnvState::from_scene(&scene);
        let mut scratch = Scratch::new();
        let n_steps = ((SETTLE_TIME / s.dt).ceil() as usize).max(500);
        let label = s.label();
        let mut hs = Vec::with_capacity(n_steps);
        let mut completed = 0;
        let ext = vec![ExternalWrench::default(); model.n_bodies()];
        for step in 1..=n_steps {
            if step_env(&model, &mut state, &ext, &mut scratch).is_err() {
                break;
            }
            completed = step;
            let b = &state.bodies[1];
            let h = (b.vel.x * b.vel.x + b.vel.y * b.vel.y).sqrt();
            hs.push(h);
            series.push(vec![
                label.clone().into(),
                s.dt.into(),
                s.k_user.into(),
                s.d_user.into(),
                step.into(),
                (step as f64 * s.dt).into(),
                b.pos.z.into(),
                h.into(),
            ]);
        }
        outcomes.push((*s, label, n_steps, completed, moving_average_rises(&hs, 5, 1e-12)));
    }
    let path = report.emit(&series, out.join("stability.csv"))?;
    let (k0, d0) = (base.impedance.k_user, base.impedance.d_user);
    for (s, label, n_steps, completed, rises) in outcomes {
        let rows = series.filter("setting", &label);
        let z = rows.column("z");
        let h = rows.column("horizontal_speed");
        let t = rows.column("t");
        let finite = completed == n_steps && z.iter().chain(&h).all(|v| v.is_finite());
        let z_min = z.iter().copied().fold(f64::INFINITY, f64::min);
        let z_max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let settle_t = h.iter().zip(&t).find(|(v, _)| **v < SETTLE_SPEED).map(|(_, t)| *t);
        let in_band = finite && z_min >= Z_BAND.0 && z_max <= Z_BAND.1;
        let settled = settle_t.is_some_and(|t| t <= SETTLE_TIME + 1e-12);
        report.metric(format!("z {label}"), &z, &path);
        report.metric(format!("horizontal_speed {label}"), &h, &path);
        let detail = format!(
            "{completed}/{n_steps} steps, z in [{}, {}], settle {}",
            fmt_sig9(z_min),
            fmt_sig9(z_max),
            settle_t.map_or("never".into(), |t| format!("{} s", fmt_sig9(t)))
        );
        let row_pass = finite && in_band && settled;
        report.flags.push(format!("{} {label}: {detail}", if row_pass { "PASS" } else { "FAIL" }));
        if (s.k_user, s.d_user) == (k0, d0) && s.dt == 0.002 {
            report.check(
                format!("{label} settles below {} m/s by {} s with monotone 5-step average", fmt_sig9(SETTLE_SPEED), fmt_sig9(SETTLE_TIME)),
                finite && settled && rises == 0,
                format!("{detail}, {rises} rises"),
            );
        }
        if (s.k_user, s.d_user) == (k0, d0) && s.dt == 0.02 {
            let bounded = finite && z.iter().all(|v| v.abs() <= 0.2);
            report.check(format!("{label} completes 500 finite steps with |z| <= 0.2"), completed >= 500 && bounded, detail);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingParams {
    pub n_envs: Vec<usize>,
    pub warmup: usize,
    pub steps: usize,
}

impl Default for ScalingParams {
    fn default() -> Self {
        ScalingParams { n_envs: vec![1, 2, 4, 8, 16, 32], warmup: 300, steps: 200 }
    }
}

/// Solve-phase time against contact count: jittered small piles replicated over an env ladder.
pub fn bench_scaling(base: &SimConfig, p: &ScalingParams, out: &Path) -> Result<BenchReport, BenchError> {
    let started = Instant::now();
    let mut report = BenchReport::new("scaling", base);
    report.echo("n_envs", p.n_envs.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" "));
    report.echo("warmup", p.warmup.to_string());
    report.echo("steps", p.steps.to_string());
    let mut det = Series::new(&["n_envs", "step", "contacts"]);
    let mut timing = Series::new(&["n_envs", "step", "contacts", "solve_ms", "step_ms"]);
    let scene = scenes::small_pile(base.clone());
    let mut last: Option<BatchedWorld> = None;
    for &n in &p.n_envs {
        let mut world = replicate_envs(&scene, n, Some(base.seed))?;
        for _ in 0..p.warmup {
            world.step()?;
        }
        for _ in 0..p.steps {
            let st = world.step()?;
            det.push(vec![n.into(), st.step.into(), st.contacts.into()]);
            timing.push(vec![n.into(), st.step.into(), st.contacts.into(), (st.t_solve * 1e3).into(), (st.t_total() * 1e3).into()]);
        }
        last = Some(world);
    }
    report.emit(&det, out.join("scaling.csv"))?;
    let tpath = report.emit(&timing, out.join("scaling_timing.csv"))?;
    if let Some(w) = &last {
        let path = out.join("scaling_state.csv");
        write_state_dump(w, &path)?;
        report.files.push(path);
    }

    let mut rungs = Vec::new();
    for &n in &p.n_envs {
        let rows = timing.filter("n_envs", &n.to_string());
        let contacts = median(&rows.column("contacts"));
        let solve = median(&rows.column("solve_ms"));
        let full = median(&rows.column("step_ms"));
        report.metric(format!("solve_ms n_envs={n}"), &rows.column("solve_ms"), &tpath);
        report.metric(format!("contacts n_envs={n}"), &rows.column("contacts"), &tpath);
        report.flags.push(format!(
            "n_envs={n}: median contacts {}, median solve {} ms, median step {} ms",
            fmt_sig9(contacts),
            fmt_sig9(solve),
            fmt_sig9(full)
        ));
        rungs.push((contacts, solve));
    }
    let usable: Vec<(f64, f64)> = rungs.iter().copied().filter(|(c, t)| *c > 0.0 && *t > 0.0).collect();
    let xs: Vec<f64> = usable.iter().map(|r| r.0).collect();
    let ys: Vec<f64> = usable.iter().map(|r| r.1).collect();
    let range = xs.iter().copied().fold(0.0, f64::max) / xs.iter().copied().fold(f64::INFINITY, f64::min);
    report.check("contact range >= 16x", range >= 16.0, format!("{}x", fmt_sig9(range)));
    let fit: Option<LinearFit> = log_log_fit(&xs, &ys);
    match fit {
        Some(f) => {
            report.check("log-log exponent <= 1.25", f.slope <= 1.25, format!("b = {}", fmt_sig9(f.slope)));
            report.check("log-log R^2 >= 0.9", f.r_squared >= 0.9, format!("R^2 = {}", fmt_sig9(f.r_squared)));
        }
        None => report.check("log-log fit", false, "fewer than two usable rungs"),
    }
    for w in rungs.windows(2) {
        let (c0, t0) = w[0];
        let (c1, t1) = w[1];
        report.flags.push(format!("contacts x{} solve x{}", fmt_sig9(c1 / c0), fmt_sig9(t1 / t0)));
    }

    let floor = single_contact_solve_ms(base)?;
    report.check("single-contact solve < 1 ms", floor < 1.0, format!("median {} ms", fmt_sig9(floor)));
    let total = started.elapsed().as_secs_f64();
    report.check("total wall clock < 5 min", total < 300.0, format!("{} s", fmt_sig9(total)));
    Ok(report)
}

/// Median solve-phase time of a resting sphere, ms.
fn single_contact_solve_ms(base: &SimConfig) -> Result<f64, BenchError> {
    let ball = comfree_core::Body::dynamic("ball", comfree_core::GeomShape::Sphere { radius: 0.05 }, 1.0, Vec3::new(0.0, 0.0, 0.05));
    let scene = Scene::new(vec![comfree_core::Body::ground(0.0), ball], base.clone());
    let mut world = replicate_envs(&scene, 1, None)?;
    let mut t = Vec::new();
    for _ in 0..200 {
        t.push(world.step()?.t_solve * 1e3);
    }
    Ok(median(&t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputParams {
    pub n_envs: Vec<usize>,
    pub steps: usize,
    pub perturb_every: usize,
    /// Bound of each horizontal component of the random push, N.
    pub push_force: f64,
}

impl Default for ThroughputParams {
    fn default() -> Self {
        ThroughputParams { n_envs: vec![1, 32, 64, 128, 256], steps: 1500, perturb_every: 50, push_force: 0.2 }
    }
}

/// Batched small piles; every `perturb_every` steps each env pushes one random body with a random horizontal force.
///
/// Single-env steps/s is the reciprocal of the wall time of one batched step.
pub fn bench_throughput(base: &SimConfig, p: &ThroughputParams, out: &Path) -> Result<BenchReport, BenchError> {
    let mut report = BenchReport::new("throughput", base);
    report.echo("n_envs", p.n_envs.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" "));
    report.echo("steps", p.steps.to_string());
    report.echo("perturb_every", p.perturb_every.to_string());
    report.echo("push_force", fmt_sig9(p.push_force));
    let mut det = Series::new(&["n_envs", "step", "contacts"]);
    let mut timing = Series::new(&["n_envs", "step", "step_seconds", "env_steps_per_s"]);
    let scene = scenes::small_pile(base.clone());
    let dynamic: Vec<usize> = (0..scene.bodies.len()).filter(|&i| scene.bodies[i].is_dynamic()).collect();
    let mut last: Option<BatchedWorld> = None;
    for &n in &p.n_envs {
        let mut world = replicate_envs(&scene, n, Some(base.seed))?;
        for step in 0..p.steps {
            if p.perturb_every > 0 && step % p.perturb_every == 0 {
                world.clear_external();
                for env in 0..n {
                    let rng = world.rng_mut(env);
                    let body = dynamic[rng.random_range(0..dynamic.len())];
                    let f = Vec3::new(rng.random_range(-p.push_force..p.push_force), rng.random_range(-p.push_force..p.push_force), 0.0);
                    world.set_external(env, body, ExternalWrench { force: f, torque: Vec3::ZERO });
                }
            }
            let start = Instant::now();
            let st = world.step()?;
            let secs = start.elapsed().as_secs_f64();
            det.push(vec![n.into(), st.step.into(), st.contacts.into()]);
            timing.push(vec![n.into(), st.step.into(), secs.into(), (1.0 / secs).into()]);
        }
        last = Some(world);
    }
    report.emit(&det, out.join("throughput.csv"))?;
    let tpath = report.emit(&timing, out.join("throughput_timing.csv"))?;
    if let Some(w) = &last {
        let path = out.join("throughput_state.csv");
        write_state_dump(w, &path)?;
        report.files.push(path);
    }
    let mut aggregate = Vec::new();
    for &n in &p.n_envs {
        let rows = timing.filter("n_envs", &n.to_string()).column("env_steps_per_s");
        report.metric(format!("single_env_steps_per_s n_envs={n}"), &rows, &tpath);
        let mean = mean_std(&rows).0;
        report.flags.push(format!("n_envs={n}: aggregate {} env-steps/s", fmt_sig9(mean * n as f64)));
        aggregate.push((n, mean * n as f64));
    }
    let agg = |n: usize| aggregate.iter().find(|a| a.0 == n).map(|a| a.1);
    if let (Some(a32), Some(a64)) = (agg(32), agg(64)) {
        report.check("aggregate(64) >= 0.9 aggregate(32)", a64 >= 0.9 * a32, format!("{} vs {}", fmt_sig9(a64), fmt_sig9(a32)));
    }
    Ok(report)
}

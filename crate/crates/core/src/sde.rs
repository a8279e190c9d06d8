//! Stratonovich integration of the frame-bundle SDE
//! `dr = Σ_α (L_α(r) ∘ dBᵅ + L_ᾱ(r) ∘ dB^ᾱ)`.
//!
//! Complex increments are `ΔBᵅ = (Δξᵅ + i Δηᵅ)/√2` with independent
//! `Δξ, Δη ~ N(0, dt)`, so `E[ΔBᵅ ΔB̄^β] = δ_{αβ} dt` and `E[ΔBᵅ ΔB^β] = 0`.
//! Steps use the Heun predictor-corrector, which converges to the
//! Stratonovich solution without derivatives of the canonical fields.
//!
//! Path `i` of an ensemble with seed `s` draws from ChaCha8 seeded with `s`
//! on stream `i`, so every path is reproducible on its own and ensembles do
//! not depend on the worker count.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bundle::{reunitarize_in_place, FrameState, VelocityWork};
use crate::models::CrModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub t_horizon: f64,
    pub n_steps: usize,
    pub seed: u64,
    /// Polar reprojection of the frame every this many steps; 0 disables it.
    pub reunitarize_every: usize,
    pub record_stride: usize,
    /// A path is abandoned as capped once `|x|_∞` exceeds this.
    pub coordinate_cap: f64,
    pub store_increments: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t_horizon: 1.0,
            n_steps: 1000,
            seed: 0,
            reunitarize_every: 1,
            record_stride: 1,
            coordinate_cap: 1e6,
            store_increments: false,
        }
    }
}

impl SimConfig {
    pub fn new(t_horizon: f64, n_steps: usize, seed: u64) -> Self {
        Self {
            t_horizon,
            n_steps,
            seed,
            ..Self::default()
        }
    }

    pub fn dt(&self) -> f64 {
        if self.n_steps == 0 {
            0.0
        } else {
            self.t_horizon / self.n_steps as f64
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_horizon > 0.0) || !self.t_horizon.is_finite() {
            return Err(Error::InvalidArgument("t_horizon must be positive".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidArgument(
                "record_stride must be positive".into(),
            ));
        }
        if !(self.coordinate_cap > 0.0) {
            return Err(Error::InvalidArgument(
                "coordinate_cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Random stream for path `index` of an ensemble seeded with `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws a complex Brownian increment over a step of length `dt`.
pub fn sample_increment<R: Rng + ?Sized>(rng: &mut R, n: usize, dt: f64) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); n];
    sample_increment_into(rng, dt, &mut out);
    out
}

#[inline]
pub fn sample_increment_into<R: Rng + ?Sized>(rng: &mut R, dt: f64, out: &mut [C64]) {
    let scale = (0.5 * dt).sqrt();
    for b in out.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *b = C64::new(scale * re, scale * im);
    }
}

/// Heun stepper holding all scratch space for one worker.
pub struct Stepper<'m, M: CrModel + ?Sized> {
    model: &'m M,
    work: VelocityWork,
    dx0: Vec<f64>,
    dx1: Vec<f64>,
    de0: Vec<C64>,
    de1: Vec<C64>,
    pred: FrameState,
}

impl<'m, M: CrModel + ?Sized> Stepper<'m, M> {
    pub fn new(model: &'m M) -> Self {
        let n = model.n();
        let d = model.dim();
        Self {
            model,
            work: VelocityWork::new(n),
            dx0: vec![0.0; d],
            dx1: vec![0.0; d],
            de0: vec![C64::new(0.0, 0.0); n * n],
            de1: vec![C64::new(0.0, 0.0); n * n],
            pred: FrameState::identity_at(vec![0.0; d]),
        }
    }

    pub fn model(&self) -> &'m M {
        self.model
    }

    /// One Heun step from `cur` driven by `db`, written into `next`.
    ///
    /// Predictor: `r* = r + V(r; ΔB)`. Corrector:
    /// `r' = r + ½ (V(r; ΔB) + V(r*; ΔB))`. There is no drift term.
    pub fn step_into(
        &mut self,
        cur: &FrameState,
        db: &[C64],
        next: &mut FrameState,
        reunitarize: bool,
    ) -> Result<()> {
        let model = self.model;
        self.work.velocity_into(
            model,
            &cur.x,
            cur.e.as_slice(),
            db,
            &mut self.dx0,
            &mut self.de0,
        );
        for ((p, c), d) in self.pred.x.iter_mut().zip(&cur.x).zip(&self.dx0) {
            *p = c + d;
        }
        for ((p, c), d) in self
            .pred
            .e
            .as_mut_slice()
            .iter_mut()
            .zip(cur.e.as_slice())
            .zip(&self.de0)
        {
            *p = c + d;
        }
        self.work.velocity_into(
            model,
            &self.pred.x,
            self.pred.e.as_slice(),
            db,
            &mut self.dx1,
            &mut self.de1,
        );
        for (((nx, c), d0), d1) in next.x.iter_mut().zip(&cur.x).zip(&self.dx0).zip(&self.dx1) {
            *nx = c + 0.5 * (d0 + d1);
        }
        for (((ne, c), d0), d1) in next
            .e
            .as_mut_slice()
            .iter_mut()
            .zip(cur.e.as_slice())
            .zip(&self.de0)
            .zip(&self.de1)
        {
            *ne = c + (d0 + d1) * 0.5;
        }
        if reunitarize {
            reunitarize_in_place(&mut next.e)?;
        }
        Ok(())
    }
}

/// A single Heun step; `dt` enters only through the increment.
pub fn step<M: CrModel + ?Sized>(
    model: &M,
    s: &FrameState,
    db: &[C64],
    reunitarize: bool,
) -> Result<FrameState> {
    if db.len() != model.n() || s.x.len() != model.dim() || s.n() != model.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            got: db.len(),
        });
    }
    let mut stepper = Stepper::new(model);
    let mut next = s.clone();
    stepper.step_into(s, db, &mut next, reunitarize)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathStatus {
    Completed,
    Capped,
}

impl PathStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PathStatus::Completed => "completed",
            PathStatus::Capped => "capped",
        }
    }
}

/// Receives every accepted step of a simulation.
pub trait StepObserver {
    fn observe(&mut self, step: usize, before: &FrameState, after: &FrameState, db: &[C64]);

    /// Per-path summary values stored in the ensemble.
    fn values(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl StepObserver for () {
    fn observe(&mut self, _: usize, _: &FrameState, _: &FrameState, _: &[C64]) {}
}

/// Largest frame unitarity defect seen after any step.
#[derive(Debug, Default, Clone)]
pub struct UnitarityObserver {
    pub max_defect: f64,
}

impl StepObserver for UnitarityObserver {
    fn observe(&mut self, _: usize, _: &FrameState, after: &FrameState, _: &[C64]) {
        self.max_defect = self.max_defect.max(after.unitarity_defect());
    }

    fn values(&self) -> Vec<f64> {
        vec![self.max_defect]
    }
}

#[derive(Debug, Clone)]
pub struct Path {
    pub times: Vec<f64>,
    /// States at every `record_stride`-th step, starting with the initial one.
    pub states: Vec<FrameState>,
    pub terminal: FrameState,
    /// Flat increments, `n` per step, when requested.
    pub increments: Option<Vec<C64>>,
    pub status: PathStatus,
    pub record_stride: usize,
    pub dt: f64,
}

impl Path {
    pub fn steps_taken(&self) -> usize {
        self.increments
            .as_ref()
            .map(|inc| inc.len() / self.terminal.n())
            .unwrap_or((self.states.len() - 1) * self.record_stride)
    }

    pub fn increment(&self, k: usize) -> Option<&[C64]> {
        let n = self.terminal.n();
        self.increments.as_ref().map(|inc| &inc[k * n..(k + 1) * n])
    }
}

fn capped<M: CrModel + ?Sized>(model: &M, x: &[f64], cap: f64) -> bool {
    x.iter().any(|v| !v.is_finite() || v.abs() > cap) || !model.in_chart(x)
}

/// Core loop shared by every simulation entry point. Increments come from
/// `next_increment(step, buffer)`.
fn run<M, F, O>(
    model: &M,
    s0: &FrameState,
    cfg: &SimConfig,
    mut next_increment: F,
    observer: &mut O,
    mut recorder: Option<&mut Path>,
) -> Result<(FrameState, PathStatus)>
where
    M: CrModel + ?Sized,
    F: FnMut(usize, &mut [C64]),
    O: StepObserver + ?Sized,
{
    cfg.validate()?;
    let n = model.n();
    if s0.x.len() != model.dim() || s0.n() != n {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: s0.x.len(),
        });
    }
    let dt = cfg.dt();
    let mut stepper = Stepper::new(model);
    let mut cur = s0.clone();
    let mut next = s0.clone();
    let mut db = vec![C64::new(0.0, 0.0); n];
    let mut status = PathStatus::Completed;
    for k in 0..cfg.n_steps {
        next_increment(k, &mut db);
        let reun = cfg.reunitarize_every > 0 && (k + 1) % cfg.reunitarize_every == 0;
        if stepper.step_into(&cur, &db, &mut next, reun).is_err() {
            status = PathStatus::Capped;
            std::mem::swap(&mut cur, &mut next);
            break;
        }
        observer.observe(k, &cur, &next, &db);
        std::mem::swap(&mut cur, &mut next);
        if let Some(path) = recorder.as_deref_mut() {
            if let Some(inc) = path.increments.as_mut() {
                inc.extend_from_slice(&db);
            }
            if (k + 1) % cfg.record_stride == 0 {
                path.times.push((k + 1) as f64 * dt);
                path.states.push(cur.clone());
            }
        }
        if capped(model, &cur.x, cfg.coordinate_cap) {
            status = PathStatus::Capped;
            break;
        }
    }
    Ok((cur, status))
}

fn empty_path(s0: &FrameState, cfg: &SimConfig) -> Path {
    Path {
        times: vec![0.0],
        states: vec![s0.clone()],
        terminal: s0.clone(),
        increments: cfg.store_increments.then(Vec::new),
        status: PathStatus::Completed,
        record_stride: cfg.record_stride,
        dt: cfg.dt(),
    }
}

/// Simulates path `index` of the ensemble defined by `cfg`.
pub fn simulate_path_indexed<M: CrModel + ?Sized>(
    model: &M,
    s0: &FrameState,
    cfg: &SimConfig,
    index: u64,
) -> Result<Path> {
    let mut rng = path_rng(cfg.seed, index);
    let dt = cfg.dt();
    let mut path = empty_path(s0, cfg);
    let (terminal, status) = run(
        model,
        s0,
        cfg,
        |_, db| sample_increment_into(&mut rng, dt, db),
        &mut (),
        Some(&mut path),
    )?;
    path.terminal = terminal;
    path.status = status;
    Ok(path)
}

/// Simulates a single path (stream 0 of `cfg.seed`).
pub fn simulate_path<M: CrModel + ?Sized>(
    model: &M,
    s0: &FrameState,
    cfg: &SimConfig,
) -> Result<Path> {
    simulate_path_indexed(model, s0, cfg, 0)
}

/// Simulates a path driven by caller-supplied increments (`n` per step,
/// flat). The number of steps is `cfg.n_steps`.
pub fn simulate_driven<M: CrModel + ?Sized>(
    model: &M,
    s0: &FrameState,
    cfg: &SimConfig,
    increments: &[C64],
) -> Result<Path> {
    let n = model.n();
    if increments.len() < cfg.n_steps * n {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_steps * n,
            got: increments.len(),
        });
    }
    let mut path = empty_path(s0, cfg);
    let (terminal, status) = run(
        model,
        s0,
        cfg,
        |k, db| db.copy_from_slice(&increments[k * n..(k + 1) * n]),
        &mut (),
        Some(&mut path),
    )?;
    path.terminal = terminal;
    path.status = status;
    Ok(path)
}

/// Simulates path `index` feeding every step to `observer`, without
/// recording states.
pub fn simulate_observed<M: CrModel + ?Sized, O: StepObserver + ?Sized>(
    model: &M,
    s0: &FrameState,
    cfg: &SimConfig,
    index: u64,
    observer: &mut O,
) -> Result<(FrameState, PathStatus)> {
    let mut rng = path_rng(cfg.seed, index);
    let dt = cfg.dt();
    run(
        model,
        s0,
        cfg,
        |_, db| sample_increment_into(&mut rng, dt, db),
        observer,
        None,
    )
}

/// Runs `f(i)` for `i in 0..count` on `workers` threads (0 = rayon default)
/// and returns the results in index order.
pub fn par_map_indexed<T, F>(count: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let work = || (0..count).into_par_iter().map(&f).collect::<Vec<T>>();
    if workers == 0 {
        return work();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(work),
        Err(_) => (0..count).map(&f).collect(),
    }
}

/// Terminal states (and optional per-path observables) of independent paths.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub config: SimConfig,
    pub n_paths: usize,
    pub terminals: Vec<FrameState>,
    pub statuses: Vec<PathStatus>,
    pub observables: Vec<Vec<f64>>,
}

impl Ensemble {
    pub fn completed(&self) -> impl Iterator<Item = &FrameState> {
        self.terminals
            .iter()
            .zip(&self.statuses)
            .filter(|(_, s)| **s == PathStatus::Completed)
            .map(|(t, _)| t)
    }

    pub fn capped_count(&self) -> usize {
        self.statuses
            .iter()
            .filter(|s| **s == PathStatus::Capped)
            .count()
    }

    /// Terminal values of coordinate `k` over completed paths.
    pub fn coordinate(&self, k: usize) -> Vec<f64> {
        self.completed().map(|s| s.x[k]).collect()
    }

    /// Observable `j` over completed paths.
    pub fn observable(&self, j: usize) -> Vec<f64> {
        self.observables
            .iter()
            .zip(&self.statuses)
            .filter(|(_, s)| **s == PathStatus::Completed)
            .map(|(o, _)| o[j])
            .collect()
    }
}

/// Independent paths from a common start; path `i` uses stream `i`.
pub fn simulate_ensemble<M: CrModel + ?Sized>(
    model: &M,
    s0: &FrameState,
    cfg: &SimConfig,
    n_paths: usize,
    workers: usize,
) -> Result<Ensemble> {
    simulate_ensemble_observed(model, s0, cfg, n_paths, workers, |_| ())
}

/// Like [`simulate_ensemble`], attaching a fresh observer to every path and
/// storing its [`StepObserver::values`].
pub fn simulate_ensemble_observed<M, O, F>(
    model: &M,
    s0: &FrameState,
    cfg: &SimConfig,
    n_paths: usize,
    workers: usize,
    make_observer: F,
) -> Result<Ensemble>
where
    M: CrModel + ?Sized,
    O: StepObserver,
    F: Fn(usize) -> O + Sync + Send,
{
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
    }
    cfg.validate()?;
    let results = par_map_indexed(n_paths, workers, |i| {
        let mut obs = make_observer(i);
        simulate_observed(model, s0, cfg, i as u64, &mut obs).map(|(t, s)| (t, s, obs.values()))
    });
    let mut terminals = Vec::with_capacity(n_paths);
    let mut statuses = Vec::with_capacity(n_paths);
    let mut observables = Vec::with_capacity(n_paths);
    for r in results {
        let (t, s, o) = r?;
        terminals.push(t);
        statuses.push(s);
        observables.push(o);
    }
    Ok(Ensemble {
        config: cfg.clone(),
        n_paths,
        terminals,
        statuses,
        observables,
    })
}

/// Right-rotates a flat increment sequence: `ΔB ↦ Λ* ΔB` per step. Paired
/// with the start frame `e Λ` it reproduces the base path driven by `ΔB`
/// from `e`.
pub fn rotate_increments(increments: &[C64], lam: &DMatrix<C64>) -> Vec<C64> {
    let n = lam.nrows();
    let adj = lam.adjoint();
    let mut out = vec![C64::new(0.0, 0.0); increments.len()];
    for (chunk, dst) in increments.chunks(n).zip(out.chunks_mut(n)) {
        for r in 0..n {
            dst[r] = (0..n).map(|c| adj[(r, c)] * chunk[c]).sum();
        }
    }
    out
}

//! Exit-time Monte Carlo for `Δ_b u = 0` on a domain `G = {φ < 0}`.
//!
//! `u_f(x) = E_x[f(X(τ′))]` with `τ′ = inf{t ≥ 0 : X(t) ∉ Ḡ}`. A step that
//! ends outside is re-run on two half steps whose increments are drawn from
//! the Brownian bridge (so they sum to the original increment), recursively
//! up to [`ExitOptions::max_levels`] times. This localizes the crossing in
//! time and space; any remaining overshoot beyond the collar `|φ| ≤ δ` is
//! removed by bisection on the last chord.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::bundle::FrameState;
use crate::models::{ChartBox, CrModel};
use crate::sde::{par_map_indexed, path_rng, sample_increment_into, SimConfig, Stepper};
use crate::{Error, Result};

/// A domain given by a defining function, negative inside.
pub trait Domain: Send + Sync {
    fn name(&self) -> String;

    fn phi(&self, x: &[f64]) -> f64;

    fn grad_phi(&self, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        let mut p = x.to_vec();
        (0..x.len())
            .map(|j| {
                p[j] = x[j] + h;
                let fp = self.phi(&p);
                p[j] = x[j] - h;
                let fm = self.phi(&p);
                p[j] = x[j];
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    fn bounding_box(&self) -> Option<ChartBox> {
        None
    }
}

/// `{|z|⁴ + t² < R⁴}` on `ℍₙ`, the gauge ball of the Heisenberg dilations.
#[derive(Debug, Clone, PartialEq)]
pub struct KoranyiBall {
    pub n: usize,
    pub radius: f64,
}

impl KoranyiBall {
    pub fn new(n: usize, radius: f64) -> Result<Self> {
        if n == 0 || !(radius > 0.0) {
            return Err(Error::InvalidArgument(
                "Korányi ball needs n ≥ 1 and R > 0".into(),
            ));
        }
        Ok(Self { n, radius })
    }

    fn z2(&self, x: &[f64]) -> f64 {
        x[..2 * self.n].iter().map(|v| v * v).sum()
    }

    /// Boundary point `(0, …, 0, R²)`, where `∇φ ∥ dt` and the boundary is
    /// characteristic.
    pub fn pole(&self) -> Vec<f64> {
        let mut x = vec![0.0; 2 * self.n + 1];
        x[2 * self.n] = self.radius * self.radius;
        x
    }

    /// Boundary point `(R, 0, …, 0)`.
    pub fn equator(&self) -> Vec<f64> {
        let mut x = vec![0.0; 2 * self.n + 1];
        x[0] = self.radius;
        x
    }
}

impl Domain for KoranyiBall {
    fn name(&self) -> String {
        format!("koranyi_ball(n={}, R={})", self.n, self.radius)
    }

    fn phi(&self, x: &[f64]) -> f64 {
        let z2 = self.z2(x);
        let t = x[2 * self.n];
        z2 * z2 + t * t - self.radius.powi(4)
    }

    fn grad_phi(&self, x: &[f64]) -> Vec<f64> {
        let z2 = self.z2(x);
        let mut g: Vec<f64> = x[..2 * self.n].iter().map(|v| 4.0 * z2 * v).collect();
        g.push(2.0 * x[2 * self.n]);
        g
    }

    fn bounding_box(&self) -> Option<ChartBox> {
        let r = self.radius;
        let mut lower = vec![-r; 2 * self.n];
        let mut upper = vec![r; 2 * self.n];
        lower.push(-r * r);
        upper.push(r * r);
        Some(ChartBox { lower, upper })
    }
}

pub type BoundaryFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Boundary data `f`, evaluated at (collar) exit points.
#[derive(Clone)]
pub enum BoundaryData {
    Coordinate(usize),
    Constant(f64),
    Linear(Vec<(f64, BoundaryData)>),
    Custom(BoundaryFn),
}

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryData::Coordinate(k) => write!(f, "x{k}"),
            BoundaryData::Constant(c) => write!(f, "{c}"),
            BoundaryData::Linear(t) => f.debug_list().entries(t.iter()).finish(),
            BoundaryData::Custom(_) => write!(f, "<custom>"),
        }
    }
}

impl BoundaryData {
    pub fn custom(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        BoundaryData::Custom(Arc::new(f))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            BoundaryData::Coordinate(k) => x[*k],
            BoundaryData::Constant(c) => *c,
            BoundaryData::Linear(terms) => terms.iter().map(|(a, g)| a * g.eval(x)).sum(),
            BoundaryData::Custom(f) => f(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitOptions {
    /// Collar half-width `δ`: exit points satisfy `|φ| ≤ δ`.
    pub delta_band: f64,
    /// Maximum number of step halvings when localizing a crossing.
    pub max_levels: usize,
    /// Largest acceptable fraction of paths still inside at the horizon.
    pub horizon_threshold: f64,
}

impl Default for ExitOptions {
    fn default() -> Self {
        Self {
            delta_band: 1e-4,
            max_levels: 10,
            horizon_threshold: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Exited,
    HorizonExceeded,
}

impl ExitStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ExitStatus::Exited => "exited",
            ExitStatus::HorizonExceeded => "horizon_exceeded",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExitRecord {
    pub tau: f64,
    pub exit_point: Vec<f64>,
    pub status: ExitStatus,
}

enum Refined {
    Inside(FrameState),
    Exit {
        inside: FrameState,
        outside: FrameState,
        t_in: f64,
        t_out: f64,
    },
}

struct Walker<'a, M: CrModel + ?Sized, D: Domain + ?Sized, R: Rng> {
    stepper: Stepper<'a, M>,
    domain: &'a D,
    opts: ExitOptions,
    rng: R,
    reunitarize: bool,
}

impl<M: CrModel + ?Sized, D: Domain + ?Sized, R: Rng> Walker<'_, M, D, R> {
    fn refine(
        &mut self,
        s: &FrameState,
        db: &[C64],
        t: f64,
        h: f64,
        level: usize,
    ) -> Result<Refined> {
        let mut end = s.clone();
        self.stepper.step_into(s, db, &mut end, self.reunitarize)?;
        let phi = self.domain.phi(&end.x);
        if phi <= 0.0 {
            return Ok(Refined::Inside(end));
        }
        if phi <= self.opts.delta_band || level >= self.opts.max_levels {
            return Ok(Refined::Exit {
                inside: s.clone(),
                outside: end,
                t_in: t,
                t_out: t + h,
            });
        }
        // Brownian bridge midpoint: B(h/2) | B(h) = ΔB is ΔB/2 + N(0, h/4).
        let mut db1 = vec![C64::new(0.0, 0.0); db.len()];
        sample_increment_into(&mut self.rng, 0.25 * h, &mut db1);
        for (a, b) in db1.iter_mut().zip(db) {
            *a += 0.5 * b;
        }
        let db2: Vec<C64> = db.iter().zip(&db1).map(|(b, a)| b - a).collect();
        match self.refine(s, &db1, t, 0.5 * h, level + 1)? {
            exit @ Refined::Exit { .. } => Ok(exit),
            Refined::Inside(mid) => self.refine(&mid, &db2, t + 0.5 * h, 0.5 * h, level + 1),
        }
    }

    /// Bisection on the chord from an inside to an outside point until
    /// `|φ| ≤ δ`.
    fn localize(&self, inside: &[f64], outside: &[f64], t_in: f64, t_out: f64) -> (Vec<f64>, f64) {
        let phi_out = self.domain.phi(outside);
        if phi_out <= self.opts.delta_band {
            return (outside.to_vec(), t_out);
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let lerp = |s: f64| -> Vec<f64> {
            inside
                .iter()
                .zip(outside)
                .map(|(a, b)| a + s * (b - a))
                .collect()
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let p = lerp(mid);
            let phi = self.domain.phi(&p);
            if phi.abs() <= self.opts.delta_band {
                return (p, t_in + mid * (t_out - t_in));
            }
            if phi > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lerp(hi), t_in + hi * (t_out - t_in))
    }
}

/// First exit of path `index` started at `(x0, I)`. Starting points with
/// `φ(x0) > 0` exit at time 0.
pub fn exit_sample<M, D>(
    model: &M,
    x0: &[f64],
    domain: &D,
    cfg: &SimConfig,
    opts: &ExitOptions,
    index: u64,
) -> Result<ExitRecord>
where
    M: CrModel + ?Sized,
    D: Domain + ?Sized,
{
    cfg.validate()?;
    if x0.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: x0.len(),
        });
    }
    if domain.phi(x0) > 0.0 {
        return Ok(ExitRecord {
            tau: 0.0,
            exit_point: x0.to_vec(),
            status: ExitStatus::Exited,
        });
    }
    let dt = cfg.dt();
    let mut walker = Walker {
        stepper: Stepper::new(model),
        domain,
        opts: *opts,
        rng: path_rng(cfg.seed, index),
        reunitarize: cfg.reunitarize_every > 0,
    };
    let mut state = FrameState::identity_at(x0.to_vec());
    let mut db = vec![C64::new(0.0, 0.0); model.n()];
    for k in 0..cfg.n_steps {
        let t = k as f64 * dt;
        sample_increment_into(&mut walker.rng, dt, &mut db);
        match walker.refine(&state, &db, t, dt, 0)? {
            Refined::Inside(next) => state = next,
            Refined::Exit {
                inside,
                outside,
                t_in,
                t_out,
            } => {
                let (exit_point, tau) = walker.localize(&inside.x, &outside.x, t_in, t_out);
                return Ok(ExitRecord {
                    tau,
                    exit_point,
                    status: ExitStatus::Exited,
                });
            }
        }
    }
    Ok(ExitRecord {
        tau: cfg.t_horizon,
        exit_point: state.x,
        status: ExitStatus::HorizonExceeded,
    })
}

/// Exit records of `n_paths` independent paths; path `i` uses stream `i`.
pub fn exit_samples<M, D>(
    model: &M,
    x0: &[f64],
    domain: &D,
    cfg: &SimConfig,
    opts: &ExitOptions,
    n_paths: usize,
    workers: usize,
) -> Result<Vec<ExitRecord>>
where
    M: CrModel + ?Sized,
    D: Domain + ?Sized,
{
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
    }
    par_map_indexed(n_paths, workers, |i| {
        exit_sample(model, x0, domain, cfg, opts, i as u64)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSolution {
    pub estimate: f64,
    pub stderr: f64,
    pub horizon_fraction: f64,
    /// Horizon fraction above the configured threshold.
    pub flagged: bool,
    /// `max |φ(exit_point)|` over exited paths.
    pub collar_residual: f64,
    pub n_exited: usize,
    pub boundary_min: f64,
    pub boundary_max: f64,
}

/// Summarizes `f` at the exit points of a batch of records.
pub fn summarize_exits<D: Domain + ?Sized>(
    domain: &D,
    f: &BoundaryData,
    records: &[ExitRecord],
    opts: &ExitOptions,
) -> Result<DirichletSolution> {
    let exited: Vec<&ExitRecord> = records
        .iter()
        .filter(|r| r.status == ExitStatus::Exited)
        .collect();
    if exited.is_empty() {
        return Err(Error::AllPathsCapped(records.len()));
    }
    let values: Vec<f64> = exited.iter().map(|r| f.eval(&r.exit_point)).collect();
    let (estimate, stderr) = crate::stats::mean_stderr(&values);
    let horizon_fraction = (records.len() - exited.len()) as f64 / records.len() as f64;
    Ok(DirichletSolution {
        estimate,
        stderr,
        horizon_fraction,
        flagged: horizon_fraction > opts.horizon_threshold,
        collar_residual: exited
            .iter()
            .map(|r| domain.phi(&r.exit_point).abs())
            .fold(0.0, f64::max),
        n_exited: exited.len(),
        boundary_min: values.iter().cloned().fold(f64::INFINITY, f64::min),
        boundary_max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Monte Carlo estimate of `u_f(x0) = E_{x0}[f(X(τ′))]`.
#[allow(clippy::too_many_arguments)]
pub fn solve_dirichlet<M, D>(
    model: &M,
    domain: &D,
    f: &BoundaryData,
    x0: &[f64],
    n_paths: usize,
    cfg: &SimConfig,
    opts: &ExitOptions,
    workers: usize,
) -> Result<DirichletSolution>
where
    M: CrModel + ?Sized,
    D: Domain + ?Sized,
{
    let phi = domain.phi(x0);
    if phi > opts.delta_band {
        return Err(Error::OutsideDomain { phi });
    }
    let records = exit_samples(model, x0, domain, cfg, opts, n_paths, workers)?;
    summarize_exits(domain, f, &records, opts)
}

/// Fraction of paths from `x0` that have left `Ḡ` by each time in `t_probe`.
/// The simulation runs to `cfg.t_horizon`, which should cover the probes.
#[allow(clippy::too_many_arguments)]
pub fn exit_fractions<M, D>(
    model: &M,
    domain: &D,
    x0: &[f64],
    t_probe: &[f64],
    n_paths: usize,
    cfg: &SimConfig,
    opts: &ExitOptions,
    workers: usize,
) -> Result<Vec<f64>>
where
    M: CrModel + ?Sized,
    D: Domain + ?Sized,
{
    let records = exit_samples(model, x0, domain, cfg, opts, n_paths, workers)?;
    Ok(t_probe
        .iter()
        .map(|&t| {
            records
                .iter()
                .filter(|r| r.status == ExitStatus::Exited && r.tau <= t)
                .count() as f64
                / n_paths as f64
        })
        .collect())
}

/// Exit fractions from a boundary point `xb`. The horizon is the largest
/// probe time and the step is `cfg.dt()` rescaled to that horizon.
#[allow(clippy::too_many_arguments)]
pub fn regularity_probe<M, D>(
    model: &M,
    domain: &D,
    xb: &[f64],
    t_probe: &[f64],
    n_paths: usize,
    steps: usize,
    seed: u64,
    opts: &ExitOptions,
    workers: usize,
) -> Result<Vec<f64>>
where
    M: CrModel + ?Sized,
    D: Domain + ?Sized,
{
    let phi = domain.phi(xb);
    if phi.abs() > opts.delta_band {
        return Err(Error::NotOnBoundary { phi });
    }
    let horizon = t_probe.iter().cloned().fold(0.0, f64::max);
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(
            "probe times must be positive".into(),
        ));
    }
    let cfg = SimConfig::new(horizon, steps, seed);
    exit_fractions(model, domain, xb, t_probe, n_paths, &cfg, opts, workers)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanExitTime {
    pub mean: f64,
    pub stderr: f64,
    pub horizon_fraction: f64,
    /// Some paths hit the horizon, so `mean` is a lower bound.
    pub lower_bound: bool,
    pub flagged: bool,
}

/// `E_{x0}[τ′]`; paths still inside at the horizon count with `τ′ = horizon`.
pub fn mean_exit_time<M, D>(
    model: &M,
    domain: &D,
    x0: &[f64],
    n_paths: usize,
    cfg: &SimConfig,
    opts: &ExitOptions,
    workers: usize,
) -> Result<MeanExitTime>
where
    M: CrModel + ?Sized,
    D: Domain + ?Sized,
{
    let records = exit_samples(model, x0, domain, cfg, opts, n_paths, workers)?;
    let taus: Vec<f64> = records.iter().map(|r| r.tau).collect();
    let (mean, stderr) = crate::stats::mean_stderr(&taus);
    let over = records
        .iter()
        .filter(|r| r.status == ExitStatus::HorizonExceeded)
        .count();
    let horizon_fraction = over as f64 / n_paths as f64;
    Ok(MeanExitTime {
        mean,
        stderr,
        horizon_fraction,
        lower_bound: over > 0,
        flagged: horizon_fraction > opts.horizon_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Heisenberg;

    fn cfg(steps: usize, seed: u64) -> SimConfig {
        SimConfig::new(10.0, steps, seed)
    }

    #[test]
    fn koranyi_phi_and_gradient() {
        let b = KoranyiBall::new(1, 1.0).unwrap();
        assert_eq!(b.phi(&[0.0; 3]), -1.0);
        assert_eq!(b.phi(&b.pole()), 0.0);
        assert_eq!(b.phi(&b.equator()), 0.0);
        let x = [0.3, -0.2, 0.5];
        let g = b.grad_phi(&x);
        let mut p = x;
        for j in 0..3 {
            p[j] += 1e-6;
            let fp = b.phi(&p);
            p[j] -= 2e-6;
            let fm = b.phi(&p);
            p[j] += 1e-6;
            assert!((g[j] - (fp - fm) / 2e-6).abs() < 1e-8);
        }
        assert_eq!(b.grad_phi(&b.pole()), vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn outside_start_exits_immediately() {
        let h = Heisenberg::new(1).unwrap();
        let b = KoranyiBall::new(1, 1.0).unwrap();
        let x0 = [2.0, 0.0, 0.0];
        let r = exit_sample(&h, &x0, &b, &cfg(100, 1), &ExitOptions::default(), 0).unwrap();
        assert_eq!(
            r,
            ExitRecord {
                tau: 0.0,
                exit_point: x0.to_vec(),
                status: ExitStatus::Exited
            }
        );
    }

    #[test]
    fn exits_land_in_collar() {
        let h = Heisenberg::new(1).unwrap();
        let b = KoranyiBall::new(1, 1.0).unwrap();
        let opts = ExitOptions::default();
        let recs = exit_samples(&h, &[0.0; 3], &b, &cfg(2000, 3), &opts, 200, 0).unwrap();
        for r in &recs {
            assert_eq!(r.status, ExitStatus::Exited);
            assert!(r.tau > 0.0);
            assert!(b.phi(&r.exit_point).abs() <= opts.delta_band);
        }
    }

    #[test]
    fn constant_data_is_exact() {
        let h = Heisenberg::new(1).unwrap();
        let b = KoranyiBall::new(1, 1.0).unwrap();
        let sol = solve_dirichlet(
            &h,
            &b,
            &BoundaryData::Constant(2.5),
            &[0.2, 0.0, 0.0],
            100,
            &cfg(1000, 1),
            &ExitOptions::default(),
            0,
        )
        .unwrap();
        assert_eq!((sol.estimate, sol.stderr), (2.5, 0.0));
    }

    #[test]
    fn horizon_flag() {
        let h = Heisenberg::new(1).unwrap();
        let b = KoranyiBall::new(1, 1.0).unwrap();
        let short = SimConfig::new(1e-3, 10, 1);
        let sol = solve_dirichlet(
            &h,
            &b,
            &BoundaryData::Constant(1.0),
            &[0.0; 3],
            50,
            &short,
            &ExitOptions::default(),
            0,
        );
        assert_eq!(sol, Err(Error::AllPathsCapped(50)));
        let met =
            mean_exit_time(&h, &b, &[0.0; 3], 50, &short, &ExitOptions::default(), 0).unwrap();
        assert!(met.flagged && met.lower_bound);
        assert!((met.mean - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn probe_rejects_interior_point() {
        let h = Heisenberg::new(1).unwrap();
        let b = KoranyiBall::new(1, 1.0).unwrap();
        assert!(matches!(
            regularity_probe(
                &h,
                &b,
                &[0.0; 3],
                &[1e-3],
                10,
                10,
                1,
                &ExitOptions::default(),
                0
            ),
            Err(Error::NotOnBoundary { .. })
        ));
    }

    #[test]
    fn linearity_with_shared_paths() {
        let h = Heisenberg::new(1).unwrap();
        let b = KoranyiBall::new(1, 1.0).unwrap();
        let opts = ExitOptions::default();
        let recs = exit_samples(&h, &[0.1, 0.1, 0.0], &b, &cfg(500, 8), &opts, 300, 0).unwrap();
        let f = BoundaryData::Coordinate(0);
        let g = BoundaryData::custom(|x| x[2] * x[1]);
        let comb = BoundaryData::Linear(vec![(2.0, f.clone()), (-3.0, g.clone())]);
        let uf = summarize_exits(&b, &f, &recs, &opts).unwrap().estimate;
        let ug = summarize_exits(&b, &g, &recs, &opts).unwrap().estimate;
        let uc = summarize_exits(&b, &comb, &recs, &opts).unwrap().estimate;
        assert!((uc - (2.0 * uf - 3.0 * ug)).abs() < 1e-14);
    }
}

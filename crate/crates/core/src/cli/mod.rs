//! The `crdiff` command-line front end.
//!
//! Settings come from an optional TOML file (`--config`) with sections
//! `[model]`, `[sim]`, `[params]` and `[output]`; flags override file
//! values. Data go to `--output`, else to `$CRDIFF_OUT_DIR/<command>.csv`,
//! else to stdout. Every data file opens with comment lines recording the
//! tool version, the configuration hash and the seed. Exit codes: 0 success,
//! 1 runtime failure, 2 configuration error.

pub mod config;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};

pub use config::{CommandName, ConfigError, Format, PartialConfig, RunConfig};

use crate::bundle::FrameState;
use crate::dirichlet::{
    exit_samples, summarize_exits, BoundaryData, Domain, ExitOptions, KoranyiBall,
};
use crate::hormander::{label, smoothness_condition, span_rank};
use crate::models::{validate_model, CrModel, GaugeRotated, Heisenberg, PhaseGauge};
use crate::observables::{
    char_function, estimate_density, Bandwidth, LineIntegralObserver, OneForm, Window,
};
use crate::sde::{simulate_ensemble, simulate_ensemble_observed, SimConfig};

pub const OUT_DIR_ENV: &str = "CRDIFF_OUT_DIR";

/// Names accepted by `params.form`.
pub const FORM_PRESETS: [&str; 7] = [
    "contact",
    "half_dz_sum",
    "du",
    "dv",
    "dt",
    "u_dzbar",
    "zero",
];

pub fn form_preset(name: &str) -> Option<OneForm> {
    Some(match name {
        "contact" => OneForm::Contact,
        "half_dz_sum" => OneForm::half_dz_sum(0),
        "du" => OneForm::Differential(0),
        "dv" => OneForm::Differential(1),
        "dt" => OneForm::Custom(std::sync::Arc::new(|x: &[f64]| {
            let mut c = vec![C64::new(0.0, 0.0); x.len()];
            c[x.len() - 1] = C64::new(1.0, 0.0);
            c
        })),
        "u_dzbar" => OneForm::times(|x| C64::new(x[0], 0.0), OneForm::dzbar(0)),
        "zero" => OneForm::Zero,
        _ => return None,
    })
}

pub fn parse_bandwidth(s: &str, dim: usize) -> Result<Bandwidth, String> {
    match s {
        "scott" => Ok(Bandwidth::Scott),
        "silverman" => Ok(Bandwidth::Silverman),
        other => {
            let h: Result<Vec<f64>, _> =
                other.split(',').map(|v| v.trim().parse::<f64>()).collect();
            match h {
                Ok(h) if h.len() == dim && h.iter().all(|v| *v > 0.0) => Ok(Bandwidth::Fixed(h)),
                _ => Err(format!(
                    "expected scott, silverman or {dim} positive comma-separated widths, got `{other}`"
                )),
            }
        }
    }
}

/// `coordinate:K`, `constant:C`, or `custom:NAME` with NAME in
/// `abs_z2`, `u2_minus_v2`.
pub fn parse_boundary(s: &str, dim: usize) -> Result<BoundaryData, String> {
    let (kind, arg) = s
        .split_once(':')
        .ok_or_else(|| format!("expected kind:value, got `{s}`"))?;
    match kind {
        "coordinate" => match arg.parse::<usize>() {
            Ok(k) if k < dim => Ok(BoundaryData::Coordinate(k)),
            _ => Err(format!("coordinate index must be below {dim}, got `{arg}`")),
        },
        "constant" => arg
            .parse::<f64>()
            .map(BoundaryData::Constant)
            .map_err(|_| format!("bad constant `{arg}`")),
        "custom" => match arg {
            "abs_z2" => Ok(BoundaryData::custom(|x| {
                x[..x.len() - 1].iter().map(|v| v * v).sum()
            })),
            "u2_minus_v2" => Ok(BoundaryData::custom(|x| x[0] * x[0] - x[1] * x[1])),
            _ => Err(format!("unknown custom boundary data `{arg}`")),
        },
        _ => Err(format!("unknown boundary kind `{kind}`")),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "crdiff",
    version,
    about = "Frame-bundle diffusions on CR manifolds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Terminal frame states of an ensemble.
    Simulate(Flags),
    /// Kernel density estimate of the heat kernel.
    Density(Flags),
    /// Per-path stochastic line integrals.
    LineIntegral(Flags),
    /// Empirical characteristic function of a terminal coordinate.
    Charfn(Flags),
    /// Structural residuals of the model at random points.
    CheckModel(Flags),
    /// Bracket span rank at random points.
    CheckHormander(Flags),
    /// Search for a non-vanishing Φ functional.
    CheckSmoothness(Flags),
    /// Exit-time solution of the Dirichlet problem on a Korányi ball.
    Dirichlet(Flags),
}

impl Command {
    fn split(&self) -> (CommandName, &Flags) {
        match self {
            Command::Simulate(f) => (CommandName::Simulate, f),
            Command::Density(f) => (CommandName::Density, f),
            Command::LineIntegral(f) => (CommandName::LineIntegral, f),
            Command::Charfn(f) => (CommandName::Charfn, f),
            Command::CheckModel(f) => (CommandName::CheckModel, f),
            Command::CheckHormander(f) => (CommandName::CheckHormander, f),
            Command::CheckSmoothness(f) => (CommandName::CheckSmoothness, f),
            Command::Dirichlet(f) => (CommandName::Dirichlet, f),
        }
    }
}

/// Comma-separated list of numbers given as one flag value.
#[derive(Debug, Clone, PartialEq)]
pub struct NumList(pub Vec<f64>);

fn parse_list(s: &str) -> Result<NumList, String> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{v}`"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(NumList)
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub n: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    /// Time horizon.
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub steps: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub paths: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub seed: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub workers: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub reunitarize_every: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub record_stride: Option<i64>,
    #[arg(long)]
    pub cap: Option<f64>,
    /// Number of random probe points.
    #[arg(long, allow_negative_numbers = true)]
    pub points: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub max_order: Option<i64>,
    /// One of contact, half_dz_sum, du, dv, dt, u_dzbar, zero.
    #[arg(long)]
    pub form: Option<String>,
    /// Comma-separated chart point.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub point: Option<NumList>,
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub lambdas: Option<NumList>,
    #[arg(long, allow_negative_numbers = true)]
    pub coordinate: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub bins: Option<i64>,
    /// Comma-separated half-widths of the density window.
    #[arg(long, value_parser = parse_list)]
    pub extent: Option<NumList>,
    /// scott, silverman, or comma-separated widths.
    #[arg(long)]
    pub bandwidth: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub radius: Option<f64>,
    /// coordinate:K, constant:C or custom:NAME.
    #[arg(long, allow_hyphen_values = true)]
    pub boundary: Option<String>,
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub start: Option<NumList>,
    #[arg(long)]
    pub delta_band: Option<f64>,
    #[arg(long)]
    pub horizon_threshold: Option<f64>,
    /// Write per-path exit records instead of the summary row.
    #[arg(long)]
    pub records: bool,
    #[arg(long, short)]
    pub output: Option<String>,
    /// csv or text.
    #[arg(long)]
    pub format: Option<String>,
}

impl Flags {
    fn to_partial(&self, command: CommandName) -> PartialConfig {
        let mut p = PartialConfig {
            command: Some(command.as_str().into()),
            ..Default::default()
        };
        p.model.name = self.model.clone();
        p.model.n = self.n;
        p.model.kappa = self.kappa;
        p.sim.t = self.t;
        p.sim.steps = self.steps;
        p.sim.paths = self.paths;
        p.sim.seed = self.seed;
        p.sim.workers = self.workers;
        p.sim.reunitarize_every = self.reunitarize_every;
        p.sim.record_stride = self.record_stride;
        p.sim.cap = self.cap;
        p.params.points = self.points;
        p.params.max_order = self.max_order;
        p.params.form = self.form.clone();
        p.params.point = self.point.as_ref().map(|l| l.0.clone());
        p.params.lambdas = self.lambdas.as_ref().map(|l| l.0.clone());
        p.params.coordinate = self.coordinate;
        p.params.bins = self.bins;
        p.params.extent = self.extent.as_ref().map(|l| l.0.clone());
        p.params.bandwidth = self.bandwidth.clone();
        p.params.radius = self.radius;
        p.params.boundary = self.boundary.clone();
        p.params.start = self.start.as_ref().map(|l| l.0.clone());
        p.params.delta_band = self.delta_band;
        p.params.horizon_threshold = self.horizon_threshold;
        p.params.records = self.records.then_some(true);
        p.output.path = self.output.clone();
        p.output.format = self.format.clone();
        p
    }
}

/// Builds the validated configuration for a parsed command line.
pub fn parse_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let (name, flags) = cli.command.split();
    let file = match &flags.config {
        Some(path) => PartialConfig::from_file(path)?,
        None => PartialConfig::default(),
    };
    if let Some(c) = &file.command {
        if CommandName::parse(c) != Some(name) {
            return Err(ConfigError(format!(
                "command: config file is for `{c}` but `{}` was requested",
                name.as_str()
            )));
        }
    }
    file.overlay(&flags.to_partial(name)).validate()
}

/// Tabular result rendered as CSV or aligned text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn render(&self, format: Format) -> String {
        let mut s = String::new();
        for c in &self.comments {
            s.push_str("# ");
            s.push_str(c);
            s.push('\n');
        }
        match format {
            Format::Csv => {
                s.push_str(&self.header.join(","));
                s.push('\n');
                for r in &self.rows {
                    s.push_str(&r.join(","));
                    s.push('\n');
                }
            }
            Format::Text => {
                let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
                for r in &self.rows {
                    for (w, c) in widths.iter_mut().zip(r) {
                        *w = (*w).max(c.len());
                    }
                }
                let line = |cells: &[String]| {
                    cells
                        .iter()
                        .zip(&widths)
                        .map(|(c, w)| format!("{c:>w$}"))
                        .collect::<Vec<_>>()
                        .join("  ")
                };
                s.push_str(&line(&self.header));
                s.push('\n');
                for r in &self.rows {
                    s.push_str(&line(r));
                    s.push('\n');
                }
            }
        }
        s
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Output of a command: the data table, a one-line summary and whether the
/// run counts as a failure.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub summary: String,
    pub failed: bool,
}

fn build_model(cfg: &RunConfig) -> crate::Result<Box<dyn CrModel>> {
    let base = Heisenberg::new(cfg.model.n)?;
    Ok(match cfg.model.name.as_str() {
        "gauge-heisenberg" => Box::new(GaugeRotated::new(
            base,
            PhaseGauge::new(cfg.model.n, cfg.model.kappa),
        )?),
        _ => Box::new(base),
    })
}

fn sim_config(cfg: &RunConfig) -> SimConfig {
    SimConfig {
        t_horizon: cfg.sim.t,
        n_steps: cfg.sim.steps,
        seed: cfg.sim.seed,
        reunitarize_every: cfg.sim.reunitarize_every,
        record_stride: cfg.sim.record_stride,
        coordinate_cap: cfg.sim.cap,
        store_increments: false,
    }
}

fn probe_points(cfg: &RunConfig, dim: usize) -> Vec<Vec<f64>> {
    if let Some(p) = &cfg.params.point {
        return vec![p.clone()];
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.sim.seed);
    (0..cfg.params.points)
        .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect()
}

/// Executes a validated configuration.
pub fn execute(cfg: &RunConfig) -> crate::Result<Outcome> {
    let model = build_model(cfg)?;
    let model = model.as_ref();
    let dim = model.dim();
    let origin = || cfg.params.start.clone().unwrap_or_else(|| vec![0.0; dim]);
    let sim = sim_config(cfg);
    let workers = cfg.sim.workers;
    let seed = cfg.sim.seed;

    match cfg.command {
        CommandName::Simulate => {
            let ens = simulate_ensemble(
                model,
                &FrameState::identity_at(origin()),
                &sim,
                cfg.sim.paths,
                workers,
            )?;
            let mut header = vec!["path".to_string(), "status".to_string()];
            header.extend(FrameState::csv_header(model.n()));
            let mut table = Table {
                header,
                ..Default::default()
            };
            for (i, (s, st)) in ens.terminals.iter().zip(&ens.statuses).enumerate() {
                let mut row = vec![i.to_string(), st.as_str().to_string()];
                row.extend(s.csv_fields());
                table.rows.push(row);
            }
            let capped = ens.capped_count();
            Ok(Outcome {
                table,
                summary: format!(
                    "simulate: {} paths, {} capped, model {}, seed {seed}",
                    cfg.sim.paths,
                    capped,
                    model.name()
                ),
                failed: capped == cfg.sim.paths,
            })
        }
        CommandName::Density => {
            let ens = simulate_ensemble(
                model,
                &FrameState::identity_at(origin()),
                &sim,
                cfg.sim.paths,
                workers,
            )?;
            let samples: Vec<Vec<f64>> = ens.completed().map(|s| s.x.clone()).collect();
            if samples.is_empty() {
                return Err(crate::Error::AllPathsCapped(cfg.sim.paths));
            }
            let (lower, upper) = match &cfg.params.extent {
                Some(e) => {
                    let c = origin();
                    (
                        c.iter().zip(e).map(|(c, e)| c - e).collect(),
                        c.iter().zip(e).map(|(c, e)| c + e).collect(),
                    )
                }
                None => auto_window(&samples, dim),
            };
            let window = Window::new(lower, upper, vec![cfg.params.bins; dim])?;
            let bw = parse_bandwidth(&cfg.params.bandwidth, dim)
                .map_err(crate::Error::InvalidArgument)?;
            let est = estimate_density(model, &ens, &window, &bw)?;
            let mut header: Vec<String> = (0..dim).map(|k| format!("x{k}")).collect();
            header.push("density".into());
            let mut table = Table {
                header,
                ..Default::default()
            };
            table.comments.push(format!(
                "bandwidth {}",
                est.bandwidth
                    .iter()
                    .map(|h| num(*h))
                    .collect::<Vec<_>>()
                    .join(" ")
            ));
            table.comments.push(format!(
                "samples {} in_window {} integral {}",
                est.n_samples,
                est.n_in_window,
                num(est.integral())
            ));
            for (i, v) in est.values.iter().enumerate() {
                let mut row: Vec<String> = window.point(i).into_iter().map(num).collect();
                row.push(num(*v));
                table.rows.push(row);
            }
            Ok(Outcome {
                table,
                summary: format!(
                    "density: {} samples, {} cells, integral {:.4}, seed {seed}",
                    est.n_samples,
                    window.len(),
                    est.integral()
                ),
                failed: false,
            })
        }
        CommandName::LineIntegral => {
            let form = form_preset(&cfg.params.form).expect("validated preset");
            let forms = [form];
            let ens = simulate_ensemble_observed(
                model,
                &FrameState::identity_at(origin()),
                &sim,
                cfg.sim.paths,
                workers,
                |_| LineIntegralObserver::new(model, &forms),
            )?;
            let mut table = Table::new(&["path", "status", "value"]);
            for (i, (o, st)) in ens.observables.iter().zip(&ens.statuses).enumerate() {
                table
                    .rows
                    .push(vec![i.to_string(), st.as_str().into(), num(o[0])]);
            }
            let vals = ens.observable(0);
            if vals.is_empty() {
                return Err(crate::Error::AllPathsCapped(cfg.sim.paths));
            }
            let (mean, se) = crate::stats::mean_stderr(&vals);
            Ok(Outcome {
                table,
                summary: format!(
                    "line-integral: form {}, mean {mean:.6} ± {se:.6}, variance {:.6}, seed {seed}",
                    cfg.params.form,
                    crate::stats::std_dev(&vals).powi(2)
                ),
                failed: false,
            })
        }
        CommandName::Charfn => {
            let k = cfg.params.coordinate.unwrap_or(dim - 1);
            let ens = simulate_ensemble(
                model,
                &FrameState::identity_at(origin()),
                &sim,
                cfg.sim.paths,
                workers,
            )?;
            let pts = char_function(&ens.coordinate(k), &cfg.params.lambdas)?;
            let mut table = Table::new(&["lambda", "re", "im", "stderr_re", "stderr_im"]);
            table.comments.push(format!("coordinate {k}"));
            for p in &pts {
                table.rows.push(vec![
                    num(p.lambda),
                    num(p.value.re),
                    num(p.value.im),
                    num(p.stderr_re),
                    num(p.stderr_im),
                ]);
            }
            Ok(Outcome {
                table,
                summary: format!("charfn: coordinate {k}, {} lambdas, seed {seed}", pts.len()),
                failed: false,
            })
        }
        CommandName::CheckModel => {
            let report = validate_model(model, &probe_points(cfg, dim));
            let mut table = Table::new(&["check", "max_residual", "tolerance", "passed"]);
            for c in &report.checks {
                table.rows.push(vec![
                    c.name.into(),
                    num(c.max_residual),
                    num(c.tolerance),
                    c.passed.to_string(),
                ]);
            }
            let l = &report.levi;
            table.rows.push(vec![
                "levi positive definite".into(),
                num(l.min_eigenvalue),
                num(0.0),
                l.positive_definite.to_string(),
            ]);
            table.comments.push(format!(
                "levi scale {} condition {} hermitian_residual {}",
                num(l.scale),
                num(l.worst_condition),
                num(l.hermitian_residual)
            ));
            Ok(Outcome {
                table,
                summary: format!(
                    "check-model: {} on {} points: {}, seed {seed}",
                    report.model,
                    report.n_points,
                    if report.passed() { "passed" } else { "FAILED" }
                ),
                failed: !report.passed(),
            })
        }
        CommandName::CheckHormander => {
            let points = probe_points(cfg, dim);
            let mut header = vec!["point".to_string()];
            header.extend((0..dim).map(|k| format!("x{k}")));
            header.push("rank".into());
            header.extend((0..dim).map(|k| format!("sigma{k}")));
            let mut table = Table {
                header,
                ..Default::default()
            };
            let mut min_rank = usize::MAX;
            for (i, x) in points.iter().enumerate() {
                let t = span_rank(model, x, cfg.params.max_order)?;
                min_rank = min_rank.min(t.rank);
                let mut row = vec![i.to_string()];
                row.extend(x.iter().map(|v| num(*v)));
                row.push(t.rank.to_string());
                row.extend((0..dim).map(|k| num(t.singular_values.get(k).cloned().unwrap_or(0.0))));
                table.rows.push(row);
            }
            Ok(Outcome {
                table,
                summary: format!(
                    "check-hormander: {} points, order {}, minimum rank {min_rank} of {dim}, seed {seed}",
                    points.len(),
                    cfg.params.max_order
                ),
                failed: false,
            })
        }
        CommandName::CheckSmoothness => {
            let form = form_preset(&cfg.params.form).expect("validated preset");
            let x = cfg.params.point.clone().unwrap_or_else(|| vec![0.0; dim]);
            let r = smoothness_condition(model, &form, &x, cfg.params.max_order)?;
            let witness = r
                .witness
                .as_deref()
                .map(label)
                .unwrap_or_else(|| "none".into());
            let mut table = Table::new(&["satisfied", "witness", "order", "re", "im", "evaluated"]);
            table.rows.push(vec![
                r.satisfied.to_string(),
                witness.clone(),
                r.witness.as_ref().map_or(0, |w| w.len()).to_string(),
                num(r.value.re),
                num(r.value.im),
                r.evaluated.to_string(),
            ]);
            Ok(Outcome {
                table,
                summary: format!(
                    "check-smoothness: form {}, satisfied {}, witness ({witness}), seed {seed}",
                    cfg.params.form, r.satisfied
                ),
                failed: false,
            })
        }
        CommandName::Dirichlet => {
            let ball = KoranyiBall::new(cfg.model.n, cfg.params.radius)?;
            let f =
                parse_boundary(&cfg.params.boundary, dim).map_err(crate::Error::InvalidArgument)?;
            let opts = ExitOptions {
                delta_band: cfg.params.delta_band,
                horizon_threshold: cfg.params.horizon_threshold,
                ..ExitOptions::default()
            };
            let x0 = origin();
            let phi = ball.phi(&x0);
            if phi > opts.delta_band {
                return Err(crate::Error::OutsideDomain { phi });
            }
            let records = exit_samples(model, &x0, &ball, &sim, &opts, cfg.sim.paths, workers)?;
            let sol = summarize_exits(&ball, &f, &records, &opts)?;
            let mut table;
            if cfg.params.records {
                let mut header = vec!["path".to_string(), "status".into(), "tau".into()];
                header.extend((0..dim).map(|k| format!("x{k}")));
                header.push("phi".into());
                table = Table {
                    header,
                    ..Default::default()
                };
                for (i, r) in records.iter().enumerate() {
                    let mut row = vec![i.to_string(), r.status.as_str().into(), num(r.tau)];
                    row.extend(r.exit_point.iter().map(|v| num(*v)));
                    row.push(num(ball.phi(&r.exit_point)));
                    table.rows.push(row);
                }
            } else {
                table = Table::new(&[
                    "estimate",
                    "stderr",
                    "horizon_fraction",
                    "collar_residual",
                    "exited",
                    "flagged",
                ]);
                table.rows.push(vec![
                    num(sol.estimate),
                    num(sol.stderr),
                    num(sol.horizon_fraction),
                    num(sol.collar_residual),
                    sol.n_exited.to_string(),
                    sol.flagged.to_string(),
                ]);
            }
            table.comments.push(format!("domain {}", ball.name()));
            let flag = if sol.flagged { " FLAGGED" } else { "" };
            Ok(Outcome {
                table,
                summary: format!(
                    "dirichlet: estimate {:.6} ± {:.6}, horizon fraction {:.4}, collar residual {:.2e}, seed {seed}{flag}",
                    sol.estimate, sol.stderr, sol.horizon_fraction, sol.collar_residual
                ),
                failed: false,
            })
        }
    }
}

/// Window of mean ± 4 standard deviations per axis.
fn auto_window(samples: &[Vec<f64>], dim: usize) -> (Vec<f64>, Vec<f64>) {
    (0..dim)
        .map(|j| {
            let col: Vec<f64> = samples.iter().map(|s| s[j]).collect();
            let (m, _) = crate::stats::mean_stderr(&col);
            let sd = crate::stats::std_dev(&col).max(1e-12);
            (m - 4.0 * sd, m + 4.0 * sd)
        })
        .unzip()
}

/// Full file contents: provenance header followed by the table.
pub fn render_output(cfg: &RunConfig, outcome: &Outcome) -> String {
    let mut s = format!(
        "# crdiff {}\n# config_sha256 {}\n# seed {}\n# command {}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.hash(),
        cfg.sim.seed,
        cfg.command.as_str()
    );
    s.push_str(&outcome.table.render(cfg.output.format));
    s
}

fn output_target(cfg: &RunConfig) -> Option<PathBuf> {
    if let Some(p) = &cfg.output.path {
        return Some(PathBuf::from(p));
    }
    std::env::var_os(OUT_DIR_ENV)
        .map(|dir| PathBuf::from(dir).join(format!("{}.csv", cfg.command.as_str())))
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match parse_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    let outcome = match execute(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let text = render_output(&cfg, &outcome);
    match output_target(&cfg) {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                if let Err(e) = std::fs::create_dir_all(parent) {
                    eprintln!("error: cannot create {}: {e}", parent.display());
                    return 1;
                }
            }
            if let Err(e) = std::fs::write(&path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 1;
            }
            println!("{} -> {}", outcome.summary, path.display());
        }
        None => {
            let mut out = std::io::stdout().lock();
            if out
                .write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .is_err()
            {
                return 1;
            }
            eprintln!("{}", outcome.summary);
        }
    }
    if outcome.failed {
        1
    } else {
        0
    }
}

/// Parses `args` (including the program name) and runs; clap usage errors
/// map to exit code 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}

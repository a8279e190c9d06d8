//! Run configuration: a TOML file layer, a flag layer that overrides it, and
//! the validated [`RunConfig`].

use serde::{Deserialize, Serialize};

/// Configuration problem; the message names the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Simulate,
    Density,
    LineIntegral,
    Charfn,
    CheckModel,
    CheckHormander,
    CheckSmoothness,
    Dirichlet,
}

impl CommandName {
    pub const ALL: [CommandName; 8] = [
        CommandName::Simulate,
        CommandName::Density,
        CommandName::LineIntegral,
        CommandName::Charfn,
        CommandName::CheckModel,
        CommandName::CheckHormander,
        CommandName::CheckSmoothness,
        CommandName::Dirichlet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::Simulate => "simulate",
            CommandName::Density => "density",
            CommandName::LineIntegral => "line-integral",
            CommandName::Charfn => "charfn",
            CommandName::CheckModel => "check-model",
            CommandName::CheckHormander => "check-hormander",
            CommandName::CheckSmoothness => "check-smoothness",
            CommandName::Dirichlet => "dirichlet",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// `heisenberg` or `gauge-heisenberg`.
    pub name: String,
    pub n: usize,
    /// Phase rate of the gauge rotation `diag(e^{iκt})`.
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    pub t: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    /// Worker threads; 0 uses all cores. Never affects output.
    pub workers: usize,
    pub reunitarize_every: usize,
    pub record_stride: usize,
    pub cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub points: usize,
    pub max_order: usize,
    pub form: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    pub lambdas: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coordinate: Option<usize>,
    pub bins: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extent: Option<Vec<f64>>,
    pub bandwidth: String,
    pub radius: f64,
    pub boundary: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    pub delta_band: f64,
    pub horizon_threshold: f64,
    pub records: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub format: Format,
}

/// A fully validated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandName,
    pub model: ModelSpec,
    pub sim: SimSettings,
    pub params: Params,
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// SHA-256 of the configuration with the worker count and output path
    /// removed, so it identifies the data rather than the run.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut c = self.clone();
        c.sim.workers = 0;
        c.output.path = None;
        Sha256::digest(c.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialModel {
    pub name: Option<String>,
    pub n: Option<i64>,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialSim {
    pub t: Option<f64>,
    pub steps: Option<i64>,
    pub paths: Option<i64>,
    pub seed: Option<i64>,
    pub workers: Option<i64>,
    pub reunitarize_every: Option<i64>,
    pub record_stride: Option<i64>,
    pub cap: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialParams {
    pub points: Option<i64>,
    pub max_order: Option<i64>,
    pub form: Option<String>,
    pub point: Option<Vec<f64>>,
    pub lambdas: Option<Vec<f64>>,
    pub coordinate: Option<i64>,
    pub bins: Option<i64>,
    pub extent: Option<Vec<f64>>,
    pub bandwidth: Option<String>,
    pub radius: Option<f64>,
    pub boundary: Option<String>,
    pub start: Option<Vec<f64>>,
    pub delta_band: Option<f64>,
    pub horizon_threshold: Option<f64>,
    pub records: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialOutput {
    pub path: Option<String>,
    pub format: Option<String>,
}

/// One configuration layer (file or flags); every key optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub command: Option<String>,
    #[serde(default)]
    pub model: PartialModel,
    #[serde(default)]
    pub sim: PartialSim,
    #[serde(default)]
    pub params: PartialParams,
    #[serde(default)]
    pub output: PartialOutput,
}

macro_rules! overlay {
    ($base:expr, $top:expr; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl PartialConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text)
            .map_err(|e| ConfigError(format!("config file: {}", e.to_string().trim_end())))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Values present in `top` replace those in `self`.
    pub fn overlay(mut self, top: &PartialConfig) -> Self {
        if top.command.is_some() {
            self.command = top.command.clone();
        }
        overlay!(self.model, top.model; name, n, kappa);
        overlay!(self.sim, top.sim; t, steps, paths, seed, workers, reunitarize_every, record_stride, cap);
        overlay!(self.params, top.params; points, max_order, form, point, lambdas, coordinate, bins, extent,
            bandwidth, radius, boundary, start, delta_band, horizon_threshold, records);
        overlay!(self.output, top.output; path, format);
        self
    }

    pub fn validate(&self) -> Result<RunConfig, ConfigError> {
        let command = match &self.command {
            None => return Err(ConfigError("missing required key `command`".into())),
            Some(c) => CommandName::parse(c)
                .ok_or_else(|| ConfigError(format!("command: unknown command `{c}`")))?,
        };

        let name = self
            .model
            .name
            .clone()
            .unwrap_or_else(|| "heisenberg".into());
        if name != "heisenberg" && name != "gauge-heisenberg" {
            return Err(ConfigError(format!(
                "model.name: unknown model `{name}` (expected heisenberg or gauge-heisenberg)"
            )));
        }
        let n = count("model.n", self.model.n, 1, 1)?;
        let kappa = finite("model.kappa", self.model.kappa, 0.0)?;

        let t = positive("sim.t", self.sim.t, 1.0)?;
        let sim = SimSettings {
            t,
            steps: count("sim.steps", self.sim.steps, 1000, 0)?,
            paths: count("sim.paths", self.sim.paths, 1000, 1)?,
            seed: count("sim.seed", self.sim.seed, 0, 0)? as u64,
            workers: count("sim.workers", self.sim.workers, 0, 0)?,
            reunitarize_every: count("sim.reunitarize_every", self.sim.reunitarize_every, 1, 0)?,
            record_stride: count("sim.record_stride", self.sim.record_stride, 1, 1)?,
            cap: positive("sim.cap", self.sim.cap, 1e6)?,
        };

        let dim = 2 * n + 1;
        let p = &self.params;
        let point = p.point.clone();
        check_len("params.point", &point, dim)?;
        let start = p.start.clone();
        check_len("params.start", &start, dim)?;
        let extent = p.extent.clone();
        check_len("params.extent", &extent, dim)?;
        if let Some(e) = &extent {
            if e.iter().any(|v| !(*v > 0.0)) {
                return Err(ConfigError(
                    "params.extent: half-widths must be positive".into(),
                ));
            }
        }
        let coordinate = match p.coordinate {
            None => None,
            Some(k) => Some(count("params.coordinate", Some(k), 0, 0)?),
        };
        if let Some(k) = coordinate {
            if k >= dim {
                return Err(ConfigError(format!(
                    "params.coordinate: {k} out of range for dimension {dim}"
                )));
            }
        }
        let lambdas = p.lambdas.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
        if lambdas.is_empty() || lambdas.iter().any(|l| !l.is_finite()) {
            return Err(ConfigError(
                "params.lambdas: need a non-empty list of finite values".into(),
            ));
        }
        let form = p.form.clone().unwrap_or_else(|| "half_dz_sum".into());
        if !super::FORM_PRESETS.contains(&form.as_str()) {
            return Err(ConfigError(format!(
                "params.form: unknown form `{form}` (expected one of {})",
                super::FORM_PRESETS.join(", ")
            )));
        }
        let bandwidth = p.bandwidth.clone().unwrap_or_else(|| "scott".into());
        super::parse_bandwidth(&bandwidth, dim)
            .map_err(|e| ConfigError(format!("params.bandwidth: {e}")))?;
        let boundary = p.boundary.clone().unwrap_or_else(|| "coordinate:0".into());
        super::parse_boundary(&boundary, dim)
            .map_err(|e| ConfigError(format!("params.boundary: {e}")))?;
        let params = Params {
            points: count("params.points", p.points, 20, 1)?,
            max_order: count("params.max_order", p.max_order, 2, 1)?,
            form,
            point,
            lambdas,
            coordinate,
            bins: count("params.bins", p.bins, 24, 1)?,
            extent,
            bandwidth,
            radius: positive("params.radius", p.radius, 1.0)?,
            boundary,
            start,
            delta_band: positive("params.delta_band", p.delta_band, 1e-4)?,
            horizon_threshold: {
                let v = finite("params.horizon_threshold", p.horizon_threshold, 0.01)?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(ConfigError(
                        "params.horizon_threshold: must lie in [0, 1]".into(),
                    ));
                }
                v
            },
            records: p.records.unwrap_or(false),
        };

        let format = match self.output.format.as_deref().unwrap_or("csv") {
            "csv" => Format::Csv,
            "text" => Format::Text,
            other => {
                return Err(ConfigError(format!(
                    "output.format: unknown format `{other}` (expected csv or text)"
                )))
            }
        };
        Ok(RunConfig {
            command,
            model: ModelSpec { name, n, kappa },
            sim,
            params,
            output: OutputSpec {
                path: self.output.path.clone(),
                format,
            },
        })
    }
}

fn count(key: &str, v: Option<i64>, default: usize, min: usize) -> Result<usize, ConfigError> {
    match v {
        None => Ok(default),
        Some(x) if x < min as i64 => Err(ConfigError(format!(
            "{key}: must be at least {min}, got {x}"
        ))),
        Some(x) => Ok(x as usize),
    }
}

fn finite(key: &str, v: Option<f64>, default: f64) -> Result<f64, ConfigError> {
    match v {
        None => Ok(default),
        Some(x) if x.is_finite() => Ok(x),
        Some(x) => Err(ConfigError(format!("{key}: must be finite, got {x}"))),
    }
}

fn positive(key: &str, v: Option<f64>, default: f64) -> Result<f64, ConfigError> {
    let x = finite(key, v, default)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(ConfigError(format!("{key}: must be positive, got {x}")))
    }
}

fn check_len(key: &str, v: &Option<Vec<f64>>, dim: usize) -> Result<(), ConfigError> {
    match v {
        Some(p) if p.len() != dim => Err(ConfigError(format!(
            "{key}: expected {dim} coordinates, got {}",
            p.len()
        ))),
        Some(p) if p.iter().any(|x| !x.is_finite()) => {
            Err(ConfigError(format!("{key}: coordinates must be finite")))
        }
        _ => Ok(()),
    }
}

impl From<&RunConfig> for PartialConfig {
    fn from(c: &RunConfig) -> Self {
        PartialConfig {
            command: Some(c.command.as_str().into()),
            model: PartialModel {
                name: Some(c.model.name.clone()),
                n: Some(c.model.n as i64),
                kappa: Some(c.model.kappa),
            },
            sim: PartialSim {
                t: Some(c.sim.t),
                steps: Some(c.sim.steps as i64),
                paths: Some(c.sim.paths as i64),
                seed: Some(c.sim.seed as i64),
                workers: Some(c.sim.workers as i64),
                reunitarize_every: Some(c.sim.reunitarize_every as i64),
                record_stride: Some(c.sim.record_stride as i64),
                cap: Some(c.sim.cap),
            },
            params: PartialParams {
                points: Some(c.params.points as i64),
                max_order: Some(c.params.max_order as i64),
                form: Some(c.params.form.clone()),
                point: c.params.point.clone(),
                lambdas: Some(c.params.lambdas.clone()),
                coordinate: c.params.coordinate.map(|k| k as i64),
                bins: Some(c.params.bins as i64),
                extent: c.params.extent.clone(),
                bandwidth: Some(c.params.bandwidth.clone()),
                radius: Some(c.params.radius),
                boundary: Some(c.params.boundary.clone()),
                start: c.params.start.clone(),
                delta_band: Some(c.params.delta_band),
                horizon_threshold: Some(c.params.horizon_threshold),
                records: Some(c.params.records),
            },
            output: PartialOutput {
                path: c.output.path.clone(),
                format: Some(
                    match c.output.format {
                        Format::Csv => "csv",
                        Format::Text => "text",
                    }
                    .into(),
                ),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_command(cmd: &str) -> PartialConfig {
        PartialConfig {
            command: Some(cmd.into()),
            ..Default::default()
        }
    }

    #[test]
    fn negative_steps_names_key() {
        let file = PartialConfig::from_toml("command = \"simulate\"\n[sim]\nsteps = -5\n").unwrap();
        let err = file.validate().unwrap_err();
        assert!(err.0.contains("sim.steps"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = PartialConfig::from_toml("[sim]\nstepz = 5\n").unwrap_err();
        assert!(err.0.contains("stepz"), "{err}");
    }

    #[test]
    fn type_mismatch_names_key() {
        let err = PartialConfig::from_toml("[sim]\nsteps = \"many\"\n").unwrap_err();
        assert!(err.0.contains("steps"), "{err}");
    }

    #[test]
    fn flag_overrides_file() {
        let file =
            PartialConfig::from_toml("command = \"simulate\"\n[sim]\nseed = 1\nsteps = 10\n")
                .unwrap();
        let mut flags = PartialConfig::default();
        flags.sim.seed = Some(9);
        let cfg = file.overlay(&flags).validate().unwrap();
        assert_eq!(cfg.sim.seed, 9);
        assert_eq!(cfg.sim.steps, 10);
    }

    #[test]
    fn missing_command() {
        assert!(PartialConfig::default()
            .validate()
            .unwrap_err()
            .0
            .contains("command"));
    }

    #[test]
    fn toml_roundtrip() {
        let cfg = with_command("dirichlet").validate().unwrap();
        let back = PartialConfig::from_toml(&cfg.to_toml())
            .unwrap()
            .validate()
            .unwrap();
        assert_eq!(back, cfg);
        let direct: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(direct, cfg);
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let a = with_command("simulate").validate().unwrap();
        let mut b = a.clone();
        b.sim.workers = 8;
        b.output.path = Some("x.csv".into());
        assert_eq!(a.hash(), b.hash());
        b.sim.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn point_length_checked() {
        let mut p = with_command("check-smoothness");
        p.params.point = Some(vec![0.0, 0.0]);
        assert!(p.validate().unwrap_err().0.contains("params.point"));
    }
}

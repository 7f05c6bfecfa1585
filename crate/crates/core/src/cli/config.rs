//! Layered run configuration.
//!
//! Settings are flat dotted keys (`model.n`, `est.k`, `mc.replications`).
//! Later layers override earlier ones: built-in defaults, the TOML file,
//! `HFVAR_*` environment variables (`HFVAR_MODEL__SIGMA0` sets
//! `model.sigma0`), `--set key=value`, then dedicated flags.

use std::collections::BTreeMap;
use std::path::Path;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::estimators::{
    default_subset_size, default_window, EstimatorConfig, EstimatorKind, SubsetStrategy,
};
use crate::harness::{ExperimentSpec, FailureDemoSpec, Outputs};
use crate::simulate::{Drift, JumpSizes, Jumps, ModelSpec, Regime, Volatility};
use crate::statistics::ScalingMode;

/// Version of the resolved-config and CSV schemas.
pub const SCHEMA_VERSION: i64 = 1;

pub const ENV_PREFIX: &str = "HFVAR_";

/// Every recognised key with its default.
fn defaults() -> Vec<(&'static str, Value)> {
    let s = |v: &str| Value::String(v.into());
    vec![
        ("model.n", Value::Integer(1000)),
        ("model.substeps", Value::Integer(1)),
        ("model.x0", Value::Float(0.0)),
        ("model.drift", s("constant")),
        ("model.drift_b", Value::Float(0.0)),
        ("model.drift_rate", Value::Float(0.0)),
        ("model.drift_level", Value::Float(0.0)),
        ("model.drift_coefficient", Value::Float(0.0)),
        ("model.vol", s("constant")),
        ("model.sigma0", Value::Float(1.0)),
        ("model.kappa", Value::Float(1.0)),
        ("model.long_run", Value::Float(1.0)),
        ("model.vol_of_vol", Value::Float(0.0)),
        ("model.jumps", s("none")),
        ("model.lambda", Value::Float(0.0)),
        ("model.jump_sizes", s("point_mass")),
        ("model.jump_size", Value::Float(1.0)),
        ("model.jump_mean", Value::Float(0.0)),
        ("model.jump_sd", Value::Float(1.0)),
        ("est.estimators", s("v_hat,v_tilde,v_universal")),
        ("est.p", Value::Float(2.0)),
        ("est.mode", s("scaled")),
        ("est.k", s("auto")),
        ("est.l", s("auto")),
        ("est.budget", Value::Integer(0)),
        ("est.subset_seed", Value::Integer(0)),
        ("est.strategy", s("auto")),
        ("mc.replications", Value::Integer(100)),
        ("mc.regime", s("continuous")),
        ("mc.parallel", Value::Boolean(true)),
        ("mc.outputs", s("summary")),
        ("mc.n_grid", s("1000,10000,100000")),
        ("run.seed", Value::Integer(0)),
        ("run.out", s(".")),
        ("run.format", s("csv")),
        ("run.input", s("")),
        ("run.truth", Value::Boolean(false)),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    JsonLines,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::JsonLines => "jsonl",
        }
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, Value>,
}

impl RunConfig {
    /// Defaults overlaid with the file, environment and explicit overrides.
    pub fn resolve(
        file: Option<&Path>,
        env: &[(String, String)],
        overrides: &[(String, Value)],
    ) -> Result<Self> {
        let mut values: BTreeMap<String, Value> = defaults()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let mut set = |key: String, value: Value, origin: &str| -> Result<()> {
            if !values.contains_key(&key) {
                return Err(Error::config(format!("unknown setting `{key}` ({origin})")));
            }
            values.insert(key, value);
            Ok(())
        };
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)?;
            let table: Table = toml::from_str(&text).map_err(|e| {
                Error::config(format!("{}: {}", path.display(), e.message().trim()))
            })?;
            let mut flat = Vec::new();
            flatten("", &table, &mut flat);
            for (k, v) in flat {
                if k == "schema_version" {
                    if v != Value::Integer(SCHEMA_VERSION) {
                        return Err(Error::config(format!("unsupported schema_version `{v}`")));
                    }
                    continue;
                }
                set(k, v, &path.display().to_string())?;
            }
        }
        for (name, raw) in env {
            if let Some(rest) = name.strip_prefix(ENV_PREFIX) {
                let key = rest.to_ascii_lowercase().replace("__", ".");
                set(key, parse_scalar(raw), name)?;
            }
        }
        for (k, v) in overrides {
            set(k.clone(), v.clone(), "command line")?;
        }
        Ok(Self { values })
    }

    fn raw(&self, key: &str) -> &Value {
        self.values.get(key).unwrap_or_else(|| panic!("unregistered key {key}"))
    }

    pub fn string(&self, key: &str) -> Result<String> {
        match self.raw(key) {
            Value::String(s) => Ok(s.clone()),
            Value::Integer(i) => Ok(i.to_string()),
            Value::Float(f) => Ok(f.to_string()),
            Value::Boolean(b) => Ok(b.to_string()),
            other => Err(type_error(key, "a string", other)),
        }
    }

    pub fn float(&self, key: &str) -> Result<f64> {
        match self.raw(key) {
            Value::Float(f) => Ok(*f),
            Value::Integer(i) => Ok(*i as f64),
            Value::String(s) => s.trim().parse().map_err(|_| type_error(key, "a number", self.raw(key))),
            other => Err(type_error(key, "a number", other)),
        }
    }

    pub fn unsigned(&self, key: &str) -> Result<u64> {
        match self.raw(key) {
            Value::Integer(i) if *i >= 0 => Ok(*i as u64),
            Value::String(s) => s
                .trim()
                .parse()
                .map_err(|_| type_error(key, "a non-negative integer", self.raw(key))),
            other => Err(type_error(key, "a non-negative integer", other)),
        }
    }

    fn optional_unsigned(&self, key: &str) -> Result<Option<usize>> {
        match self.raw(key) {
            Value::String(s) if s.trim().eq_ignore_ascii_case("auto") => Ok(None),
            _ => Ok(Some(self.unsigned(key)? as usize)),
        }
    }

    pub fn boolean(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            Value::Boolean(b) => Ok(*b),
            Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(type_error(key, "a boolean", self.raw(key))),
            },
            other => Err(type_error(key, "a boolean", other)),
        }
    }

    fn list(&self, key: &str) -> Result<Vec<String>> {
        match self.raw(key) {
            Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s.trim().to_string()),
                    Value::Integer(i) => Ok(i.to_string()),
                    other => Err(type_error(key, "a list of names", other)),
                })
                .collect(),
            _ => Ok(self
                .string(key)?
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()),
        }
    }

    pub fn seed(&self) -> Result<u64> {
        self.unsigned("run.seed")
    }

    pub fn format(&self) -> Result<OutputFormat> {
        match self.string("run.format")?.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" | "json-lines" | "jsonlines" => Ok(OutputFormat::JsonLines),
            other => Err(Error::config(format!("run.format: unknown format `{other}`"))),
        }
    }

    pub fn model(&self) -> Result<ModelSpec> {
        let drift = match self.string("model.drift")?.as_str() {
            "constant" => Drift::Constant { b: self.float("model.drift_b")? },
            "mean_reverting" => Drift::MeanReverting {
                rate: self.float("model.drift_rate")?,
                level: self.float("model.drift_level")?,
            },
            "volatility_premium" => Drift::VolatilityPremium {
                coefficient: self.float("model.drift_coefficient")?,
            },
            other => return Err(Error::config(format!("model.drift: unknown drift `{other}`"))),
        };
        let sigma0 = self.float("model.sigma0")?;
        let vol = match self.string("model.vol")?.as_str() {
            "constant" => Volatility::Constant { sigma: sigma0 },
            "geometric_ou" => Volatility::GeometricOu {
                kappa: self.float("model.kappa")?,
                long_run: self.float("model.long_run")?,
                vol_of_vol: self.float("model.vol_of_vol")?,
                initial: sigma0,
            },
            other => return Err(Error::config(format!("model.vol: unknown volatility `{other}`"))),
        };
        let jumps = match self.string("model.jumps")?.as_str() {
            "none" => Jumps::None,
            "compound_poisson" | "poisson" => {
                let sizes = match self.string("model.jump_sizes")?.as_str() {
                    "point_mass" => JumpSizes::PointMass { size: self.float("model.jump_size")? },
                    "two_point" => JumpSizes::TwoPoint { size: self.float("model.jump_size")? },
                    "gaussian" => JumpSizes::Gaussian {
                        mean: self.float("model.jump_mean")?,
                        sd: self.float("model.jump_sd")?,
                    },
                    other => {
                        return Err(Error::config(format!(
                            "model.jump_sizes: unknown distribution `{other}`"
                        )))
                    }
                };
                Jumps::CompoundPoisson {
                    intensity: self.float("model.lambda")?,
                    sizes,
                }
            }
            other => return Err(Error::config(format!("model.jumps: unknown jumps `{other}`"))),
        };
        let spec = ModelSpec {
            drift,
            vol,
            jumps,
            n: self.unsigned("model.n")? as usize,
            substeps: self.unsigned("model.substeps")? as usize,
            x0: self.float("model.x0")?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn estimator_kinds(&self) -> Result<Vec<EstimatorKind>> {
        let kinds = self
            .list("est.estimators")?
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<EstimatorKind>>>()?;
        if kinds.is_empty() {
            return Err(Error::config("est.estimators: no estimator selected"));
        }
        Ok(kinds)
    }

    /// Estimator settings for a path with `n` increments; `auto` window and
    /// subset sizes follow the defaults for that `n`.
    pub fn estimator_config(&self, n: usize) -> Result<EstimatorConfig> {
        let mode: ScalingMode = self.string("est.mode")?.parse()?;
        let k = self.optional_unsigned("est.k")?.unwrap_or_else(|| default_window(n));
        let l = self.optional_unsigned("est.l")?.unwrap_or_else(|| default_subset_size(k));
        let strategy: SubsetStrategy = self.string("est.strategy")?.parse()?;
        Ok(EstimatorConfig::new(self.float("est.p")?, mode, k, l)
            .with_budget(self.unsigned("est.budget")?, self.unsigned("est.subset_seed")?)
            .with_strategy(strategy))
    }

    pub fn regime(&self) -> Result<Regime> {
        let p = self.float("est.p")?;
        match self.string("mc.regime")?.as_str() {
            "continuous" | "continuous_power" => Ok(Regime::ContinuousPower(p)),
            "jump" | "jump_power" => Ok(Regime::JumpPower(p)),
            "quadratic" => Ok(Regime::Quadratic),
            other => Err(Error::config(format!("mc.regime: unknown regime `{other}`"))),
        }
    }

    pub fn outputs(&self) -> Result<Outputs> {
        let mut outputs = Outputs {
            summary: false,
            replications: false,
            standardized: false,
        };
        for item in self.list("mc.outputs")? {
            match item.as_str() {
                "summary" => outputs.summary = true,
                "replications" => outputs.replications = true,
                "standardized" => outputs.standardized = true,
                other => return Err(Error::config(format!("mc.outputs: unknown output `{other}`"))),
            }
        }
        Ok(outputs)
    }

    pub fn experiment(&self) -> Result<ExperimentSpec> {
        let model = self.model()?;
        let cfg = self.estimator_config(model.n)?;
        let mut spec = ExperimentSpec::new(
            model,
            self.regime()?,
            self.unsigned("mc.replications")? as usize,
            self.seed()?,
        )
        .with_parallel(self.boolean("mc.parallel")?)
        .with_outputs(self.outputs()?);
        for kind in self.estimator_kinds()? {
            spec = spec.with_estimator(kind, cfg);
        }
        Ok(spec)
    }

    pub fn failure_demo(&self) -> Result<FailureDemoSpec> {
        let n_grid = self
            .list("mc.n_grid")?
            .iter()
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|_| Error::config(format!("mc.n_grid: `{s}` is not a positive integer")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FailureDemoSpec {
            sigma: self.float("model.sigma0")?,
            lambda: self.float("model.lambda")?,
            n_grid,
            replications: self.unsigned("mc.replications")? as usize,
            master_seed: self.seed()?,
            parallel: self.boolean("mc.parallel")?,
        })
    }

    /// Nested TOML document of every setting, tagged with the schema version.
    pub fn snapshot(&self) -> String {
        let mut root = Table::new();
        root.insert("schema_version".into(), Value::Integer(SCHEMA_VERSION));
        for (key, value) in &self.values {
            let (section, name) = key.split_once('.').expect("dotted key");
            root.entry(section.to_string())
                .or_insert_with(|| Value::Table(Table::new()))
                .as_table_mut()
                .expect("sections are tables")
                .insert(name.to_string(), value.clone());
        }
        toml::to_string(&root).expect("plain values serialize")
    }
}

fn type_error(key: &str, expected: &str, found: &Value) -> Error {
    Error::config(format!("{key}: expected {expected}, found `{found}`"))
}

fn flatten(prefix: &str, table: &Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(inner) => flatten(&key, inner, out),
            other => out.push((key, other.clone())),
        }
    }
}

/// Interprets a command-line or environment value as a TOML scalar, falling
/// back to a plain string.
pub fn parse_scalar(raw: &str) -> Value {
    let raw = raw.trim();
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

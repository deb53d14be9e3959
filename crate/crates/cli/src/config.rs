//! Experiment config files.
//!
//! ```toml
//! command = "validate-sqrt"
//! seed = 7
//! output_dir = "runs/sqrt"
//!
//! [params]
//! basis = 64
//! t_grid = [0.5, 1, 2]
//! ```
//!
//! `[params]` keys are the subcommand's flags with `_` for `-`; the config
//! is turned into an argument list and parsed exactly like the command line.
//! Relative paths are resolved against the config file's directory.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use toml::Value;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: String,
    #[serde(default)]
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub params: toml::Table,
}

impl ExperimentConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        for (key, v) in cfg.params.iter_mut() {
            if PATH_KEYS.contains(&key.as_str()) {
                if let Value::String(s) = v {
                    let p = Path::new(s.as_str());
                    if p.is_relative() {
                        *s = base.join(p).to_string_lossy().into_owned();
                    }
                }
            }
        }
        Ok(cfg)
    }

    /// `weylcalc [--seed S] --out DIR COMMAND --flag value …`.
    pub fn to_args(&self) -> Result<Vec<String>> {
        let mut args = vec!["weylcalc".to_string()];
        if let Some(seed) = self.seed {
            args.extend(["--seed".to_string(), seed.to_string()]);
        }
        args.extend(["--out".to_string(), self.output_dir.to_string_lossy().into_owned()]);
        args.push(self.command.clone());
        for (key, v) in &self.params {
            let flag = format!("--{}", key.replace('_', "-"));
            match v {
                Value::Boolean(true) => args.push(flag),
                Value::Boolean(false) => {}
                Value::Array(items) => {
                    let parts = items.iter().map(scalar).collect::<Result<Vec<_>>>()?;
                    args.push(flag);
                    args.push(parts.join(","));
                }
                other => {
                    args.push(flag);
                    args.push(scalar(other).with_context(|| format!("parameter `{key}`"))?);
                }
            }
        }
        Ok(args)
    }
}

/// Parameters holding file paths.
const PATH_KEYS: &[&str] = &[
    "symbol",
    "table",
    "left",
    "right",
    "series",
    "points",
    "reference",
    "candidate",
];

fn scalar(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(i) => Ok(i.to_string()),
        Value::Float(f) => Ok(f.to_string()),
        Value::Boolean(_) => bail!("booleans are only allowed as flags"),
        _ => Err(anyhow!("unsupported value {v}")),
    }
}

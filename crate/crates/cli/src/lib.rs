//! Experiment runner for the `ffdyn` crate: configuration, seeding and
//! deterministic artifact emission.

pub mod config;
pub mod run;

use std::collections::BTreeMap;

use serde_json::Value;

pub use config::{parse_config, Experiment, ExperimentConfig, Format};
pub use run::{run_experiment, RunError, RunOutcome, RunReport};

/// Merges a config document, `key=value` overrides and the `--seed`/`--format`
/// flags, in that order of increasing precedence, then validates.
pub fn assemble_config(
    experiment: Experiment,
    text: Option<&str>,
    overrides: &[String],
    seed: Option<u64>,
    format: Option<Format>,
) -> Result<ExperimentConfig, Vec<String>> {
    let mut raw: BTreeMap<String, Value> = match text {
        Some(t) => config::parse_raw(t)?,
        None => BTreeMap::new(),
    };
    let mut errors = Vec::new();
    for o in overrides {
        match o.split_once('=') {
            Some((k, v)) => {
                raw.insert(k.trim().to_string(), config::scalar(v.trim()));
            }
            None => errors.push(format!("override \"{o}\" is not key=value")),
        }
    }
    if let Some(s) = seed {
        raw.insert("seed".into(), Value::from(s));
    }
    if let Some(f) = format {
        let tag = match f {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        raw.insert("format".into(), Value::from(tag));
    }
    match config::validate(&raw, Some(experiment)) {
        Ok(cfg) if errors.is_empty() => Ok(cfg),
        Ok(_) => Err(errors),
        Err(mut e) => {
            errors.append(&mut e);
            Err(errors)
        }
    }
}

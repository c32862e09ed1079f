//! Experiment configuration: `key = value` lines or a flat JSON object.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use ffdyn::ffield::FieldSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    DeltaFlow,
    KgMc,
    MultMc,
    StrongBc,
    CuspVolume,
    TreeLoglaw,
    XiDecay,
    Reduce,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::DeltaFlow,
        Experiment::KgMc,
        Experiment::MultMc,
        Experiment::StrongBc,
        Experiment::CuspVolume,
        Experiment::TreeLoglaw,
        Experiment::XiDecay,
        Experiment::Reduce,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Experiment::DeltaFlow => "delta-flow",
            Experiment::KgMc => "kg-mc",
            Experiment::MultMc => "mult-mc",
            Experiment::StrongBc => "strong-bc",
            Experiment::CuspVolume => "cusp-volume",
            Experiment::TreeLoglaw => "tree-loglaw",
            Experiment::XiDecay => "xi-decay",
            Experiment::Reduce => "reduce",
        }
    }

    /// Keys this experiment accepts besides the common ones.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Experiment::DeltaFlow => &["m", "n", "T", "trials", "precision"],
            Experiment::KgMc => &[
                "m", "n", "psi", "psi_c", "psi_tau", "psi_sigma", "trials", "horizon", "precision", "min_persistent",
                "max_persistent",
            ],
            Experiment::MultMc => &["rank", "psi", "psi_c", "psi_tau", "psi_sigma", "trials", "precision", "bound"],
            Experiment::StrongBc => &["m", "n", "ladder", "N", "burn_in", "trials", "table_samples", "median_lo", "median_hi"],
            Experiment::CuspVolume => &["rank", "q", "t_min", "t_max", "max_band"],
            Experiment::TreeLoglaw => &["q", "trials", "T", "tolerance"],
            Experiment::XiDecay => &["t_max", "depth", "samples"],
            Experiment::Reduce => &["matrix"],
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL.into_iter().find(|e| e.tag() == s).ok_or_else(|| format!("unknown experiment \"{s}\""))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("format must be csv or json, got \"{s}\"")),
        }
    }
}

/// Approximation function family.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PsiSpec {
    /// `s^{-c} x^{-τ}`.
    Power { c: f64, tau: f64 },
    /// `1 / (x (log_s x)^σ)`.
    LogPower { sigma: f64 },
    Zero,
}

impl PsiSpec {
    pub fn build(&self, s: u32) -> ffdyn::Psi {
        match *self {
            PsiSpec::Power { c, tau } => ffdyn::Psi::power_law(s, c, tau),
            PsiSpec::LogPower { sigma } => ffdyn::Psi::log_power(s, sigma),
            PsiSpec::Zero => ffdyn::Psi::zero(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LadderKind {
    Divergent,
    Convergent,
}

/// A validated configuration with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub p: u32,
    pub e: u32,
    pub format: Format,
    /// Parameters specific to the experiment, after defaults.
    pub params: BTreeMap<String, Value>,
    pub psi: Option<PsiSpec>,
    pub ladder: Option<LadderKind>,
}

impl ExperimentConfig {
    pub fn field(&self) -> FieldSpec {
        FieldSpec::new(self.p, self.e).expect("validated")
    }

    pub fn int(&self, key: &str) -> i64 {
        self.params[key].as_i64().expect("validated integer")
    }

    pub fn float(&self, key: &str) -> f64 {
        self.params[key].as_f64().expect("validated number")
    }

    pub fn string(&self, key: &str) -> &str {
        self.params[key].as_str().expect("validated string")
    }

    /// The config as `key = value` text, accepted back by [`parse_config`].
    pub fn echo(&self) -> String {
        let mut out = format!("# ffdyn-config v1\nexperiment = {}\nseed = {}\np = {}\ne = {}\nformat = {}\n", self.experiment, self.seed, self.p, self.e, match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        });
        for (k, v) in &self.params {
            match v {
                Value::String(s) => out.push_str(&format!("{k} = {s}\n")),
                other => out.push_str(&format!("{k} = {other}\n")),
            }
        }
        out
    }
}

const COMMON: [&str; 5] = ["experiment", "seed", "p", "e", "format"];

/// Parses `key = value` lines (`#` starts a comment) or a flat JSON object.
pub fn parse_raw(text: &str) -> Result<BTreeMap<String, Value>, Vec<String>> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return match serde_json::from_str::<Value>(trimmed) {
            Ok(Value::Object(map)) => Ok(map.into_iter().collect()),
            Ok(_) => Err(vec!["JSON config must be an object".into()]),
            Err(e) => Err(vec![format!("invalid JSON: {e}")]),
        };
    }
    let mut map = BTreeMap::new();
    let mut errors = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                map.insert(k.trim().to_string(), scalar(v.trim()));
            }
            None => errors.push(format!("line {}: expected key = value", no + 1)),
        }
    }
    if errors.is_empty() {
        Ok(map)
    } else {
        Err(errors)
    }
}

pub(crate) fn scalar(v: &str) -> Value {
    if let Ok(i) = v.parse::<i64>() {
        return Value::from(i);
    }
    if let Ok(u) = v.parse::<u64>() {
        return Value::from(u);
    }
    if let Ok(x) = v.parse::<f64>() {
        return Value::from(x);
    }
    Value::from(v)
}

struct Checker<'a> {
    raw: &'a BTreeMap<String, Value>,
    errors: Vec<String>,
    params: BTreeMap<String, Value>,
}

impl Checker<'_> {
    fn int(&mut self, key: &str, default: Option<i64>, lo: i64, hi: i64) -> Option<i64> {
        let v = match self.raw.get(key) {
            None => match default {
                Some(d) => d,
                None => {
                    self.errors.push(format!("missing required key \"{key}\""));
                    return None;
                }
            },
            Some(v) => match v.as_i64() {
                Some(i) => i,
                None => {
                    self.errors.push(format!("\"{key}\" must be an integer, got {v}"));
                    return None;
                }
            },
        };
        if v < lo || v > hi {
            self.errors.push(format!("\"{key}\" = {v} is outside [{lo}, {hi}]"));
            return None;
        }
        self.params.insert(key.to_string(), Value::from(v));
        Some(v)
    }

    fn float(&mut self, key: &str, default: f64, lo: f64, hi: f64) -> Option<f64> {
        let v = match self.raw.get(key) {
            None => default,
            Some(v) => match v.as_f64() {
                Some(x) => x,
                None => {
                    self.errors.push(format!("\"{key}\" must be a number, got {v}"));
                    return None;
                }
            },
        };
        if !(lo..=hi).contains(&v) {
            self.errors.push(format!("\"{key}\" = {v} is outside [{lo}, {hi}]"));
            return None;
        }
        self.params.insert(key.to_string(), Value::from(v));
        Some(v)
    }

    fn string(&mut self, key: &str, default: Option<&str>) -> Option<String> {
        let v = match (self.raw.get(key), default) {
            (Some(Value::String(s)), _) => s.clone(),
            (Some(other), _) => other.to_string(),
            (None, Some(d)) => d.to_string(),
            (None, None) => {
                self.errors.push(format!("missing required key \"{key}\""));
                return None;
            }
        };
        self.params.insert(key.to_string(), Value::from(v.clone()));
        Some(v)
    }

    fn prime_power(&mut self, key: &str, default: i64) -> Option<(u32, u32)> {
        let q = self.int(key, Some(default), 2, ffdyn::ffield::MAX_FIELD_SIZE as i64)? as u32;
        let p = (2..=q).find(|d| q % d == 0).expect("q ≥ 2");
        let mut e = 0;
        let mut r = q;
        while r % p == 0 {
            r /= p;
            e += 1;
        }
        if r != 1 {
            self.errors.push(format!("\"{key}\" = {q} is not a prime power"));
            return None;
        }
        Some((p, e))
    }
}

/// Validates a raw map for `experiment`. Every violation is reported.
pub fn validate(raw: &BTreeMap<String, Value>, experiment: Option<Experiment>) -> Result<ExperimentConfig, Vec<String>> {
    let mut errors = Vec::new();
    let from_key = match raw.get("experiment") {
        Some(Value::String(s)) => match s.parse::<Experiment>() {
            Ok(e) => Some(e),
            Err(e) => {
                errors.push(e);
                None
            }
        },
        Some(other) => {
            errors.push(format!("\"experiment\" must be a string, got {other}"));
            None
        }
        None => None,
    };
    let experiment = match (experiment, from_key) {
        (Some(a), Some(b)) if a != b => {
            errors.push(format!("config is for {b} but the subcommand is {a}"));
            a
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => {
            errors.push("no experiment given".into());
            return Err(errors);
        }
    };
    for key in raw.keys() {
        if !COMMON.contains(&key.as_str()) && !experiment.keys().contains(&key.as_str()) {
            errors.push(format!("unknown key \"{key}\" for {experiment}"));
        }
    }
    let mut c = Checker { raw, errors, params: BTreeMap::new() };
    let seed = match raw.get("seed") {
        None => {
            c.errors.push("missing required key \"seed\"".into());
            None
        }
        Some(v) => match v.as_u64() {
            Some(s) => Some(s),
            None => {
                c.errors.push(format!("\"seed\" must be a non-negative integer, got {v}"));
                None
            }
        },
    };
    let p = c.int("p", Some(2), 2, 251);
    let e = c.int("e", Some(1), 1, 8);
    c.params.remove("p");
    c.params.remove("e");
    if let (Some(p), Some(e)) = (p, e) {
        if let Err(err) = FieldSpec::new(p as u32, e as u32) {
            c.errors.push(format!("field p = {p}, e = {e}: {err}"));
        }
    }
    let format = match raw.get("format") {
        None => Some(Format::Csv),
        Some(Value::String(s)) => s.parse().map_err(|e: String| c.errors.push(e)).ok(),
        Some(other) => {
            c.errors.push(format!("\"format\" must be a string, got {other}"));
            None
        }
    };
    let mut psi = None;
    let mut ladder = None;
    match experiment {
        Experiment::DeltaFlow => {
            c.int("m", Some(1), 1, 4);
            c.int("n", Some(1), 1, 4);
            c.int("T", Some(64), 1, 100_000);
            c.int("trials", Some(1), 1, 100_000);
            c.int("precision", Some(0), 0, 1_000_000);
        }
        Experiment::KgMc => {
            c.int("m", Some(1), 1, 3);
            c.int("n", Some(1), 1, 3);
            psi = psi_spec(&mut c, "inverse");
            c.int("trials", Some(300), 1, 100_000);
            c.int("horizon", Some(12), 1, 24);
            c.int("precision", Some(64), 1, 10_000);
            c.float("min_persistent", 0.0, 0.0, 1.0);
            c.float("max_persistent", 1.0, 0.0, 1.0);
        }
        Experiment::MultMc => {
            c.int("rank", Some(2), 2, 4);
            psi = psi_spec(&mut c, "inverse");
            c.int("trials", Some(50), 1, 100_000);
            c.int("precision", Some(12), 1, 200);
            c.int("bound", Some(2), 0, 12);
        }
        Experiment::StrongBc => {
            c.int("m", Some(1), 1, 3);
            c.int("n", Some(1), 1, 3);
            ladder = match c.string("ladder", Some("divergent")).as_deref() {
                Some("divergent") => Some(LadderKind::Divergent),
                Some("convergent") => Some(LadderKind::Convergent),
                Some(other) => {
                    c.errors.push(format!("\"ladder\" must be divergent or convergent, got \"{other}\""));
                    None
                }
                None => None,
            };
            c.int("N", Some(10_000), 10, 1_000_000);
            c.int("burn_in", Some(8), 0, 1_000);
            c.int("trials", Some(50), 1, 100_000);
            c.int("table_samples", Some(20_000), 100, 10_000_000);
            c.float("median_lo", 0.7, 0.0, 10.0);
            c.float("median_hi", 1.3, 0.0, 10.0);
        }
        Experiment::CuspVolume => {
            c.int("rank", Some(1), 1, 3);
            c.prime_power("q", 2);
            let lo = c.int("t_min", Some(2), 0, 200);
            let hi = c.int("t_max", Some(40), 0, 200);
            if let (Some(lo), Some(hi)) = (lo, hi) {
                if lo > hi {
                    c.errors.push(format!("t_min = {lo} exceeds t_max = {hi}"));
                }
            }
            c.float("max_band", 10.0, 1.0, 1e12);
        }
        Experiment::TreeLoglaw => {
            c.prime_power("q", 2);
            c.int("trials", Some(200), 1, 100_000);
            c.int("T", Some(100_000), 10, 100_000_000);
            c.float("tolerance", 0.15, 0.0, 10.0);
        }
        Experiment::XiDecay => {
            c.int("t_max", Some(6), 0, 40);
            c.int("depth", Some(60), 1, 200);
            c.int("samples", Some(20_000), 2, 10_000_000);
        }
        Experiment::Reduce => {
            c.string("matrix", None);
        }
    }
    if !c.errors.is_empty() {
        return Err(c.errors);
    }
    Ok(ExperimentConfig {
        experiment,
        seed: seed.expect("checked"),
        p: p.expect("checked") as u32,
        e: e.expect("checked") as u32,
        format: format.expect("checked"),
        params: c.params,
        psi,
        ladder,
    })
}

fn psi_spec(c: &mut Checker<'_>, default: &str) -> Option<PsiSpec> {
    let family = c.string("psi", Some(default))?;
    match family.as_str() {
        "inverse" => Some(PsiSpec::Power { c: 0.0, tau: 1.0 }),
        "one" => Some(PsiSpec::Power { c: 0.0, tau: 0.0 }),
        "zero" => Some(PsiSpec::Zero),
        "power" => {
            let cc = c.float("psi_c", 0.0, -100.0, 100.0)?;
            let tau = c.float("psi_tau", 2.0, 0.0, 100.0)?;
            Some(PsiSpec::Power { c: cc, tau })
        }
        "log_power" => {
            let sigma = c.float("psi_sigma", 1.0, -100.0, 100.0)?;
            Some(PsiSpec::LogPower { sigma })
        }
        other => {
            c.errors.push(format!("\"psi\" must be inverse, one, zero, power or log_power, got \"{other}\""));
            None
        }
    }
}

/// Parses and validates config text for `experiment`.
pub fn parse_config(text: &str, experiment: Option<Experiment>) -> Result<ExperimentConfig, Vec<String>> {
    let raw = parse_raw(text)?;
    validate(&raw, experiment)
}

//! Plain-text run configurations.
//!
//! ```text
//! # top-level keys are defaults for every section
//! seed = 7
//! format = json
//!
//! [kernel]
//! d = 1
//! alpha = 1
//! t = 0.5
//!
//! [trace.well]
//! potential = gaussian:c=-1,s=1
//! fit = true
//! ```
//!
//! A section is `[experiment]` or `[experiment.label]`. Values run to the end
//! of the line; `#` starts a comment only at the beginning of a line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Sample,
    Moments,
    Kernel,
    Constants,
    Coeff,
    Trace,
    Fit,
    Schedule,
    Relativistic,
    Mixed,
    Acceptance,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Self::Sample,
        Self::Moments,
        Self::Kernel,
        Self::Constants,
        Self::Coeff,
        Self::Trace,
        Self::Fit,
        Self::Schedule,
        Self::Relativistic,
        Self::Mixed,
        Self::Acceptance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sample => "sample",
            Self::Moments => "moments",
            Self::Kernel => "kernel",
            Self::Constants => "constants",
            Self::Coeff => "coeff",
            Self::Trace => "trace",
            Self::Fit => "fit",
            Self::Schedule => "schedule",
            Self::Relativistic => "relativistic",
            Self::Mixed => "mixed",
            Self::Acceptance => "acceptance",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Json => "json",
            Self::Csv => "csv",
        })
    }
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            _ => Err(Error::Config(format!("unknown format '{s}' (expected json or csv)"))),
        }
    }
}

pub const DEFAULT_SEED: u64 = 20240517;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub label: Option<String>,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    /// Output root; not part of the hash.
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self { experiment, label: None, params: BTreeMap::new(), seed: DEFAULT_SEED, output: None, format: Format::Json }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.into(), value.to_string());
        self
    }

    /// Sorted `key=value` lines covering everything that affects results.
    pub fn canonical(&self) -> String {
        let mut out = format!("experiment={}\nformat={}\nseed={}\n", self.experiment, self.format, self.seed);
        for (k, v) in &self.params {
            out.push_str(&format!("param.{k}={v}\n"));
        }
        out
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    /// Config file text that parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut out = format!("seed = {}\nformat = {}\n", self.seed, self.format);
        if let Some(o) = &self.output {
            out.push_str(&format!("output = {}\n", o.display()));
        }
        match &self.label {
            Some(l) => out.push_str(&format!("\n[{}.{l}]\n", self.experiment)),
            None => out.push_str(&format!("\n[{}]\n", self.experiment)),
        }
        for (k, v) in &self.params {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

struct Globals {
    seed: u64,
    format: Format,
    output: Option<PathBuf>,
}

fn line_error(n: usize, msg: impl fmt::Display) -> Error {
    Error::Config(format!("line {n}: {msg}"))
}

/// Apply a reserved key to the globals; returns false for ordinary params.
fn reserved(g: &mut Globals, key: &str, value: &str, n: usize) -> Result<bool> {
    match key {
        "seed" => g.seed = value.parse().map_err(|_| line_error(n, format!("seed must be a 64-bit integer, got '{value}'")))?,
        "format" => g.format = value.parse().map_err(|e| line_error(n, e))?,
        "output" => g.output = Some(PathBuf::from(value)),
        "experiment" => return Err(line_error(n, "use a [section] header to name the experiment")),
        _ => return Ok(false),
    }
    Ok(true)
}

/// Parse a config file into one RunConfig per section.
pub fn parse_config(text: &str) -> Result<Vec<RunConfig>> {
    let mut top = Globals { seed: DEFAULT_SEED, format: Format::Json, output: None };
    let mut runs: Vec<(RunConfig, Globals)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let inner = inner.strip_suffix(']').ok_or_else(|| line_error(n, "unterminated section header"))?.trim();
            let (exp, label) = match inner.split_once('.') {
                Some((e, l)) if !l.is_empty() => (e, Some(l.to_string())),
                Some(_) => return Err(line_error(n, "empty section label")),
                None => (inner, None),
            };
            let experiment = exp.parse().map_err(|e| line_error(n, e))?;
            let mut rc = RunConfig::new(experiment);
            rc.label = label;
            let g = Globals { seed: top.seed, format: top.format, output: top.output.clone() };
            runs.push((rc, g));
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| line_error(n, "expected key = value"))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(line_error(n, format!("invalid key '{key}'")));
        }
        match runs.last_mut() {
            None => {
                if !reserved(&mut top, key, value, n)? {
                    return Err(line_error(n, format!("parameter '{key}' outside any [experiment] section")));
                }
            }
            Some((rc, g)) => {
                if !reserved(g, key, value, n)? && rc.params.insert(key.into(), value.into()).is_some() {
                    return Err(line_error(n, format!("duplicate key '{key}'")));
                }
            }
        }
    }
    if runs.is_empty() {
        return Err(Error::Config("config names no [experiment] section".into()));
    }
    let mut labels = std::collections::BTreeSet::new();
    runs.into_iter()
        .map(|(mut rc, g)| {
            if !labels.insert((rc.experiment, rc.label.clone())) {
                return Err(Error::Config(format!("section [{}] appears twice; add a .label", rc.experiment)));
            }
            rc.seed = g.seed;
            rc.format = g.format;
            rc.output = g.output;
            Ok(rc)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# defaults\nseed = 7\n\n[kernel]\nd = 1\nalpha = 1\n\n[trace.well]\nseed = 9\nformat = csv\npotential = gaussian:c=-1,s=1\n";

    #[test]
    fn parses_sections_and_defaults() {
        let runs = parse_config(SAMPLE).unwrap();
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0].experiment, Experiment::Kernel);
        assert_eq!(runs[0].seed, 7);
        assert_eq!(runs[0].params["alpha"], "1");
        assert_eq!(runs[1].label.as_deref(), Some("well"));
        assert_eq!(runs[1].seed, 9);
        assert_eq!(runs[1].format, Format::Csv);
        assert_eq!(runs[1].params["potential"], "gaussian:c=-1,s=1");
    }

    #[test]
    fn text_round_trip_preserves_hash() {
        for rc in parse_config(SAMPLE).unwrap() {
            let back = parse_config(&rc.to_text()).unwrap().remove(0);
            assert_eq!(back, rc);
            assert_eq!(back.hash(), rc.hash());
        }
    }

    #[test]
    fn hash_ignores_output_and_key_order() {
        let a = RunConfig::new(Experiment::Kernel).param("d", 1).param("alpha", 1);
        let mut b = RunConfig::new(Experiment::Kernel).param("alpha", 1).param("d", 1);
        b.output = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), a.clone().param("t", 0.5).hash());
        let mut c = a.clone();
        c.seed = 2;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_config("d = 1\n").is_err());
        assert!(parse_config("[nope]\n").is_err());
        assert!(parse_config("[kernel\n").is_err());
        assert!(parse_config("[kernel]\nd = 1\nd = 2\n").is_err());
        assert!(parse_config("[kernel]\n[kernel]\n").is_err());
        assert!(parse_config("seed = x\n[kernel]\n").is_err());
        assert!(parse_config("# nothing\n").is_err());
        assert!(parse_config("[kernel]\njust words\n").is_err());
    }
}

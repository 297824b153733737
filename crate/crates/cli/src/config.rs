//! Run configuration: JSON-file defaults overlaid by command-line flags.

use qemb_core::channel::{NoiseKind, NoiseModel};
use qemb_core::circuit::EnsembleKind;
use qemb_core::error::{Error, Result};
use qemb_core::mitigation::MitigationMethod;
use qemb_core::pauli::{basis_len, Observable};
use serde::{Deserialize, Serialize};

/// JSON-serializable run description. Every field is optional; the CLI
/// flags override whatever the file provides.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub n: Option<usize>,
    #[serde(rename = "L")]
    pub l_range: Option<String>,
    pub noise: Option<NoiseSpec>,
    pub ensemble: Option<String>,
    pub eps: Option<f64>,
    /// Observable: the preset name "single-z" or explicit coefficients.
    pub x: Option<ObservableSpec>,
    pub shots: Option<u64>,
    pub seeds: Option<String>,
    pub methods: Option<String>,
    pub samples: Option<usize>,
    pub output: Option<String>,
    pub format: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: String,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Preset(String),
    Coefficients(Vec<f64>),
}

impl RunConfig {
    pub fn load(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("cannot read config '{path}': {e}")))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Validation(format!("config '{path}' is not valid JSON: {e}")))
    }
}

/// Inclusive depth ranges: `a..b`, `a..b:logN` (N log-spaced integer points,
/// deduplicated), or an explicit comma list.
pub fn parse_range(spec: &str) -> Result<Vec<usize>> {
    let spec = spec.trim();
    if let Some((range, log)) = spec.split_once(':') {
        let points: usize = log
            .strip_prefix("log")
            .ok_or_else(|| Error::Validation(format!("bad range suffix in '{spec}'")))?
            .parse()
            .map_err(|_| Error::Validation(format!("bad log point count in '{spec}'")))?;
        let (a, b) = parse_bounds(range)?;
        if points < 2 || a == 0 {
            return Err(Error::Validation("log range needs a >= 1 and >= 2 points".into()));
        }
        let (la, lb) = ((a as f64).ln(), (b as f64).ln());
        let mut out: Vec<usize> = (0..points)
            .map(|i| {
                let t = i as f64 / (points - 1) as f64;
                (la + t * (lb - la)).exp().round() as usize
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        return Ok(out);
    }
    if spec.contains("..") {
        let (a, b) = parse_bounds(spec)?;
        return Ok((a..=b).collect());
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Validation(format!("bad list entry '{s}'")))
        })
        .collect()
}

fn parse_bounds(range: &str) -> Result<(usize, usize)> {
    let (a, b) = range
        .split_once("..")
        .ok_or_else(|| Error::Validation(format!("expected 'a..b' in '{range}'")))?;
    let a: usize = a
        .trim()
        .parse()
        .map_err(|_| Error::Validation(format!("bad range start '{a}'")))?;
    let b: usize = b
        .trim()
        .parse()
        .map_err(|_| Error::Validation(format!("bad range end '{b}'")))?;
    if a > b {
        return Err(Error::Validation(format!("empty range '{range}'")));
    }
    Ok((a, b))
}

/// Seed lists reuse the range grammar.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    Ok(parse_range(spec)?.into_iter().map(|v| v as u64).collect())
}

pub fn parse_noise(kind: &str, n: usize, p: f64) -> Result<NoiseModel> {
    NoiseModel::new(kind.parse::<NoiseKind>()?, n, p)
}

pub fn parse_ensemble(name: &str) -> Result<EnsembleKind> {
    name.parse()
}

pub fn parse_methods(spec: &str) -> Result<Vec<MitigationMethod>> {
    spec.split(',')
        .map(|s| s.trim().parse::<MitigationMethod>())
        .collect()
}

pub fn parse_observable(spec: &ObservableSpec, n: usize) -> Result<Observable> {
    match spec {
        ObservableSpec::Preset(name) if name == "single-z" => Observable::single_z(n),
        ObservableSpec::Preset(name) => {
            Err(Error::Validation(format!("unknown observable preset '{name}'")))
        }
        ObservableSpec::Coefficients(coeffs) => {
            if coeffs.len() != basis_len(n) {
                return Err(Error::DimensionMismatch {
                    context: "observable coefficients",
                    expected: basis_len(n),
                    actual: coeffs.len(),
                });
            }
            Observable::new(n, nalgebra::DVector::from_vec(coeffs.clone()))
        }
    }
}

/// Default master seed: `QEMB_SEED` when set, else 7.
pub fn default_seed() -> u64 {
    std::env::var("QEMB_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(7)
}

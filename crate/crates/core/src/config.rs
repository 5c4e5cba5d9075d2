//! Run configuration: a flat JSON object, validated key by key.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kernels::KernelSelector;
use crate::model::{BasisSpec, GridSpec, PhysicalConfig};
use crate::quadrature::DiagonalSplitRule;

/// Fully validated settings for one run. Serializes to the effective config
/// echoed next to every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub physical: PhysicalConfig,
    pub n_max: usize,
    pub panel_order: usize,
    pub panels: usize,
    pub m_points: usize,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Kernel used by `kernel` and `hsnorm`.
    pub kernel: KernelSelector,
    /// Nodes per axis of the `kernel` dump.
    pub kernel_points: usize,
    pub alphas: Vec<f64>,
    pub limit_gammas: Vec<f64>,
    pub n_max_sequence: Vec<usize>,
    pub states: usize,
    pub decay: f64,
    pub reference_n: usize,
}

const KEYS: &[&str] = &[
    "gamma",
    "l",
    "mu",
    "hbar",
    "n_max",
    "panel_order",
    "panels",
    "m_points",
    "seed",
    "output_dir",
    "kernel",
    "n_terms",
    "kernel_points",
    "alphas",
    "limit_gammas",
    "n_max_sequence",
    "states",
    "decay",
    "reference_n",
];

struct Fields<'a>(&'a Map<String, Value>);

impl Fields<'_> {
    fn f64(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.0.get(key) {
            None => default.ok_or_else(|| Error::ValidationError(format!("{key} required"))),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| Error::ValidationError(format!("{key} must be a number"))),
        }
    }

    fn count(&self, key: &str, default: u64) -> Result<u64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => as_count(key, v),
        }
    }

    fn f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.0.get(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(items)) if !items.is_empty() => items
                .iter()
                .map(|v| {
                    v.as_f64()
                        .ok_or_else(|| Error::ValidationError(format!("{key} must hold numbers")))
                })
                .collect(),
            Some(_) => Err(Error::ValidationError(format!("{key} must be a non-empty array"))),
        }
    }

    fn count_list(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.0.get(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(items)) if !items.is_empty() => {
                items.iter().map(|v| as_count(key, v).map(|n| n as usize)).collect()
            }
            Some(_) => Err(Error::ValidationError(format!("{key} must be a non-empty array"))),
        }
    }
}

fn as_count(key: &str, v: &Value) -> Result<u64> {
    if let Some(n) = v.as_u64() {
        return Ok(n);
    }
    if v.as_i64().is_some() {
        return Err(Error::ValidationError(format!("{key} must not be negative")));
    }
    Err(Error::ValidationError(format!("{key} must be a non-negative integer")))
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::ValidationError(msg()))
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::ParseError(e.to_string()))?;
    let Value::Object(map) = value else {
        return Err(Error::ParseError("config must be a JSON object".into()));
    };
    if let Some(key) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(Error::UnknownKey(key.clone()));
    }
    let f = Fields(&map);

    let physical = PhysicalConfig {
        l: f.f64("l", Some(1.0))?,
        mu: f.f64("mu", Some(1.0))?,
        hbar: f.f64("hbar", Some(1.0))?,
        gamma: f.f64("gamma", None)?,
    };
    physical.validate()?;

    let n_max = f.count("n_max", 64)? as usize;
    BasisSpec::new(&physical, n_max).map_err(|e| Error::ValidationError(format!("n_max: {e}")))?;

    let panel_order = f.count("panel_order", 64)? as usize;
    let panels = f.count("panels", DiagonalSplitRule::auto_panels(panel_order, n_max) as u64)? as usize;
    DiagonalSplitRule::new(panel_order, panels)?;

    let m_points = f.count("m_points", 513)? as usize;
    GridSpec::new(physical.l, m_points).map_err(|e| Error::ValidationError(format!("m_points: {e}")))?;

    let kernel = match map.get("kernel") {
        None => {
            if physical.is_periodic() {
                KernelSelector::Periodic
            } else {
                KernelSelector::Closed
            }
        }
        Some(Value::String(name)) => match name.as_str() {
            "closed" => KernelSelector::Closed,
            "series" => KernelSelector::Series {
                n_terms: f.count("n_terms", 1000)? as usize,
            },
            "zero_mode" => KernelSelector::ZeroMode,
            "finite_part" => KernelSelector::FinitePart,
            "periodic" => KernelSelector::Periodic,
            other => return Err(Error::ValidationError(format!("kernel: unknown selector {other:?}"))),
        },
        Some(_) => return Err(Error::ValidationError("kernel must be a string".into())),
    };
    if let KernelSelector::Series { n_terms } = kernel {
        require(n_terms > 0, || "n_terms must be positive".into())?;
    }

    let kernel_points = f.count("kernel_points", 65)? as usize;
    require(kernel_points >= 2, || "kernel_points must be at least 2".into())?;

    let alphas = f.f64_list("alphas", &[0.5, 1.0, 2.0])?;
    require(alphas.iter().all(|a| a.is_finite()), || "alphas must be finite".into())?;

    let limit_gammas = f.f64_list("limit_gammas", &[1e-2, 1e-3, 1e-4])?;
    require(
        limit_gammas.iter().all(|g| *g > 0.0 && *g < 1.0) && limit_gammas.windows(2).all(|w| w[1] < w[0]),
        || "limit_gammas must decrease within (0, 1)".into(),
    )?;

    let n_max_sequence = f.count_list("n_max_sequence", &[32, 64, 128, 256])?;
    require(
        n_max_sequence[0] > 0 && n_max_sequence.windows(2).all(|w| w[1] > w[0]),
        || "n_max_sequence must increase from a positive value".into(),
    )?;

    let states = f.count("states", 100)? as usize;
    require(states > 0, || "states must be positive".into())?;

    let decay = f.f64("decay", Some(4.0))?;
    require(decay >= 2.5, || "decay must be at least 2.5".into())?;
    let reference_n = f.count("reference_n", 8192)? as usize;
    let largest = *n_max_sequence.last().unwrap_or(&0);
    require(reference_n >= largest.max(n_max), || {
        "reference_n must cover n_max and every n_max_sequence entry".into()
    })?;

    let output_dir = match map.get("output_dir") {
        None => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => return Err(Error::ValidationError("output_dir must be a string".into())),
    };

    Ok(RunConfig {
        physical,
        n_max,
        panel_order,
        panels,
        m_points,
        seed: f.count("seed", 42)?,
        output_dir,
        kernel,
        kernel_points,
        alphas,
        limit_gammas,
        n_max_sequence,
        states,
        decay,
        reference_n,
    })
}

impl RunConfig {
    /// The effective configuration as compact JSON. `output_dir` is left out
    /// so the hash does not depend on where results are written.
    pub fn canonical_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(map) = &mut value {
            map.remove("output_dir");
        }
        value.to_string()
    }

    /// SHA-256 of [`canonical_json`](Self::canonical_json), hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn basis(&self) -> Result<BasisSpec> {
        BasisSpec::new(&self.physical, self.n_max)
    }

    pub fn rule(&self) -> Result<DiagonalSplitRule> {
        DiagonalSplitRule::new(self.panel_order, self.panels)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.physical.l, self.m_points)
    }
}

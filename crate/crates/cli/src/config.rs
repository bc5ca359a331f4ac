//! Run configuration: a TOML document whose sections mirror the library
//! types. Every key has a default; unknown keys are errors. See
//! `docs/config.md` for the grammar.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use blwp_core::model::{InitKind, InitTarget};
use blwp_core::{Controls, Params, Source};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub points: usize,
    /// `0` sizes the box from the horizon and the bump radius.
    pub half_width: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { dim: 1, points: 512, half_width: 32.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub p: f64,
    pub beta: f64,
    pub b0: f64,
    pub source: Source,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { p: 2.0, beta: 0.0, b0: 1.0, source: Source::Power }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConfig {
    pub kind: InitKind,
    pub amplitude: f64,
    /// Empty means the origin.
    pub center: Vec<f64>,
    pub radius: f64,
    pub on: InitTarget,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig { kind: InitKind::Bump, amplitude: 1.0, center: Vec::new(), radius: 2.0, on: InitTarget::U1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    pub dt0: f64,
    pub dt_min: f64,
    pub tol: f64,
    pub adaptive: bool,
}

impl Default for TimeConfig {
    fn default() -> Self {
        let c = Controls::default();
        TimeConfig { t_end: c.t_end, dt0: c.dt0, dt_min: c.dt_min, tol: c.tol, adaptive: c.adaptive }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowupConfig {
    pub u_max: f64,
    pub fit_points: usize,
    pub boundary_check: bool,
}

impl Default for BlowupConfig {
    fn default() -> Self {
        let c = Controls::default();
        BlowupConfig { u_max: c.u_max, fit_points: c.fit_points, boundary_check: c.boundary_check }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub every: usize,
    pub plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), every: 1, plots: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub dims: Vec<usize>,
    pub ps: Vec<f64>,
    pub betas: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { dims: vec![1], ps: vec![2.0], betas: vec![0.0], amplitudes: vec![1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeakConfig {
    /// Test-function horizon `T`; the run covers `[0, T]`.
    pub horizon: f64,
    /// Fixed steps over `[0, T]`.
    pub steps: usize,
    /// `0` picks `⌈2p'⌉ + 2`.
    pub ell: u32,
}

impl Default for WeakConfig {
    fn default() -> Self {
        WeakConfig { horizon: 4.0, steps: 2000, ell: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub model: ModelConfig,
    pub init: InitConfig,
    pub time: TimeConfig,
    pub blowup: BlowupConfig,
    pub output: OutputConfig,
    pub sweep: SweepConfig,
    pub weak: WeakConfig,
}

impl RunConfig {
    /// Reads `path` (or starts from defaults), applies `key = value`
    /// overrides, then deserializes and validates.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                text.parse::<Table>().with_context(|| format!("parsing {}", p.display()))?
            }
            None => Table::new(),
        };
        for (key, raw) in overrides {
            set_dotted(&mut doc, key, parse_scalar(raw))?;
        }
        let cfg: RunConfig = Value::Table(doc).try_into().map_err(|e| anyhow!("invalid config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.controls().validate()?;
        if !self.grid.points.is_power_of_two() || self.grid.points < 4 {
            bail!("grid.points must be a power of two >= 4, got {}", self.grid.points);
        }
        if self.grid.half_width < 0.0 {
            bail!("grid.half_width must be positive (or 0 for automatic), got {}", self.grid.half_width);
        }
        if !self.init.center.is_empty() && self.init.center.len() != self.grid.dim {
            bail!("init.center has {} coordinates but grid.dim = {}", self.init.center.len(), self.grid.dim);
        }
        if self.output.every == 0 {
            bail!("output.every must be at least 1");
        }
        Ok(())
    }

    pub fn params(&self) -> Result<Params> {
        let mut p = Params::new(self.grid.dim, self.model.p, self.model.beta, self.model.b0)?;
        p.source = self.model.source;
        Ok(p)
    }

    pub fn controls(&self) -> Controls {
        Controls {
            t_end: self.time.t_end,
            dt0: self.time.dt0,
            dt_min: self.time.dt_min,
            u_max: self.blowup.u_max,
            tol: self.time.tol,
            output_every: self.output.every,
            fit_points: self.blowup.fit_points,
            adaptive: self.time.adaptive,
            snapshot_every: None,
            boundary_check: self.blowup.boundary_check,
        }
    }

    pub fn center(&self) -> Vec<f64> {
        if self.init.center.is_empty() {
            vec![0.0; self.grid.dim]
        } else {
            self.init.center.clone()
        }
    }

    pub fn half_width(&self) -> f64 {
        if self.grid.half_width > 0.0 {
            self.grid.half_width
        } else {
            blwp_core::sweep::auto_half_width(self.time.t_end, self.init.radius)
        }
    }

    /// Canonical serialization; hashed into the manifest.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Integer, float, bool, comma list or `[..]` array; anything else is a string.
fn parse_scalar(raw: &str) -> Value {
    let trimmed = raw.trim();
    if let Ok(v) = format!("x = {trimmed}").parse::<Table>() {
        if let Some(v) = v.get("x") {
            return v.clone();
        }
    }
    if trimmed.contains(',') {
        let items: Vec<Value> = trimmed.split(',').map(parse_scalar).collect();
        return Value::Array(items);
    }
    Value::String(trimmed.to_string())
}

fn set_dotted(doc: &mut Table, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) {
        bail!("override key must look like section.key, got {key:?}");
    }
    let section = doc
        .entry(parts[0].to_string())
        .or_insert_with(|| Value::Table(Table::new()))
        .as_table_mut()
        .ok_or_else(|| anyhow!("{} is not a section", parts[0]))?;
    // an integer given for a float key is widened by serde; floats stay floats
    section.insert(parts[1].to_string(), value);
    Ok(())
}

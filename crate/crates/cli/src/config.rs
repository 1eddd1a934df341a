//! Run configuration, presets and dotted-key overrides.

use std::path::{Path, PathBuf};

use lagvac_core::galerkin::DEFAULT_SAFETY;
use lagvac_core::initial::{BumpSpec, InitialFields, PhysicalParams};
use lagvac_core::picard::PicardConfig;
use lagvac_core::{GridSpec, RadialGrid};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Environment variable holding the default output root.
pub const OUTPUT_ROOT_ENV: &str = "LAGVAC_OUTPUT_ROOT";

/// Example data `ρ0 = (1 − r^{2k})^{1/β}` with an optional velocity bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub k: u32,
    pub bump: Option<BumpSpec>,
}

/// Panel layout; the dimension index comes from `physical.n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub panels: usize,
    pub nodes_per_panel: usize,
    pub stencil_order: usize,
}

/// Picard settings without the mode count, which is a top-level key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSettings {
    pub tol: f64,
    pub k_max: usize,
    pub t_window: f64,
    pub dt: f64,
    pub safety: (f64, f64),
    pub first_ratio_limit: f64,
}

/// Pass thresholds of the runtime monitors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorThresholds {
    /// Relative drift of the total mass.
    pub mass_rel_tol: f64,
    /// Interval for `η_r` and `η/r`.
    pub flow_bounds: (f64, f64),
    /// Interval for `ρ/ρ0`. `None` derives it from `flow_bounds`.
    pub density_ratio: Option<(f64, f64)>,
    /// `|U_r(1⁻)| ≤ tol·sup|U_r|`.
    pub boundary_rel_tol: f64,
    /// Energy identity residual relative to the initial basic energy.
    pub energy_residual_rel_tol: f64,
}

impl Default for MonitorThresholds {
    fn default() -> Self {
        Self {
            mass_rel_tol: 1e-12,
            flow_bounds: (0.5, 1.5),
            density_ratio: None,
            boundary_rel_tol: 1e-3,
            energy_residual_rel_tol: 1e-4,
        }
    }
}

impl MonitorThresholds {
    /// `ρ/ρ0 = r^m/(η^mη_r)`, so `η_r, η/r ∈ [lo, hi]` gives
    /// `ρ/ρ0 ∈ [hi^{−n}, lo^{−n}]`.
    pub fn density_interval(&self, n: usize) -> (f64, f64) {
        self.density_ratio.unwrap_or_else(|| {
            let (lo, hi) = self.flow_bounds;
            (hi.powi(-(n as i32)), lo.powi(-(n as i32)))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub physical: PhysicalParams,
    pub initial: InitialSpec,
    pub grid: GridConfig,
    /// Galerkin mode count `N`.
    pub n_modes: usize,
    pub picard: PicardSettings,
    pub horizon: f64,
    /// Relative paths are resolved against the output root.
    pub output_dir: Option<String>,
    /// Steps between intermediate checkpoints; 0 writes only the final one.
    pub checkpoint_interval: usize,
    pub monitors: MonitorThresholds,
}

pub const PRESETS: [&str; 3] = ["benchmark", "shallow-water", "zero"];

impl RunConfig {
    /// Two-dimensional `γ = 2`, `β = 1`, `k = 1` example data with a small
    /// bump, on 64 panels of 8 nodes with 32 modes.
    pub fn benchmark() -> Self {
        Self {
            physical: PhysicalParams { n: 2, gamma: 2.0, beta: 1.0, mu: 1.0, a: 1.0 },
            initial: InitialSpec { k: 1, bump: Some(BumpSpec { center: 0.4, radius: 0.25, amplitude: 0.05 }) },
            grid: GridConfig { panels: 64, nodes_per_panel: 8, stencil_order: 4 },
            n_modes: 32,
            picard: PicardSettings {
                tol: 1e-10,
                k_max: 20,
                t_window: 0.2,
                dt: 1e-3,
                safety: DEFAULT_SAFETY,
                first_ratio_limit: 0.9,
            },
            horizon: 0.5,
            output_dir: None,
            checkpoint_interval: 0,
            monitors: MonitorThresholds::default(),
        }
    }

    /// Shallow water (`n = γ = 2`) released from rest with `ρ0 = (1 − r²)^2`.
    pub fn shallow_water() -> Self {
        let mut c = Self::benchmark();
        c.physical.beta = 0.5;
        c.initial.bump = None;
        c.horizon = 0.2;
        c
    }

    /// Pressureless gas at rest; every velocity stays zero.
    pub fn zero() -> Self {
        let mut c = Self::benchmark();
        c.physical.a = 0.0;
        c.initial.bump = None;
        c.grid.panels = 16;
        c.n_modes = 8;
        c.horizon = 0.02;
        c
    }

    pub fn preset(name: &str) -> CliResult<Self> {
        match name {
            "benchmark" => Ok(Self::benchmark()),
            "shallow-water" => Ok(Self::shallow_water()),
            "zero" => Ok(Self::zero()),
            other => Err(CliError::config(
                "config.preset",
                format!("unknown preset {other:?}; expected one of {}", PRESETS.join(", ")),
            )),
        }
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config("config.parse", e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::io("io.config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies `key=value` overrides, where `key` is a dotted field path and
    /// `value` is JSON (bare words are taken as strings).
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> CliResult<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut doc = serde_json::to_value(self).expect("config serializes");
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| CliError::config("config.override", format!("expected key=value, got {item:?}")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut doc, key.trim(), value)?;
        }
        serde_json::from_value(doc).map_err(|e| CliError::config("config.override", e.to_string()))
    }

    /// Checks every sub-configuration.
    pub fn validate(&self) -> CliResult<()> {
        self.physical.validate()?;
        if self.initial.k < 1 {
            return Err(CliError::config("config.initial", "profile index k must be at least 1"));
        }
        if let Some(b) = &self.initial.bump {
            b.validate()?;
        }
        self.grid_spec().build()?;
        self.picard_config().validate()?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(CliError::config("config.horizon", "horizon must be positive"));
        }
        let m = &self.monitors;
        let (lo, hi) = m.flow_bounds;
        let (qlo, qhi) = m.density_interval(self.physical.n);
        if !(m.mass_rel_tol >= 0.0
            && m.boundary_rel_tol >= 0.0
            && m.energy_residual_rel_tol >= 0.0
            && lo > 0.0
            && lo < hi
            && qlo > 0.0
            && qlo < qhi)
        {
            return Err(CliError::config(
                "config.monitors",
                "monitor thresholds must be nonnegative ordered intervals",
            ));
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            m: self.physical.n.saturating_sub(1),
            panels: self.grid.panels,
            nodes_per_panel: self.grid.nodes_per_panel,
            stencil_order: self.grid.stencil_order,
        }
    }

    pub fn picard_config(&self) -> PicardConfig {
        let p = &self.picard;
        PicardConfig {
            tol: p.tol,
            k_max: p.k_max,
            t_window: p.t_window,
            dt: p.dt,
            n_modes: self.n_modes,
            safety: p.safety,
            first_ratio_limit: p.first_ratio_limit,
        }
    }

    pub fn build_grid(&self) -> CliResult<RadialGrid> {
        Ok(self.grid_spec().build()?)
    }

    pub fn build_fields(&self, grid: &RadialGrid) -> CliResult<InitialFields> {
        Ok(InitialFields::example(self.physical, self.initial.k, self.initial.bump, grid)?)
    }

    /// Output directory: the explicit path if given, else `output_dir`
    /// resolved against the output root, else `<root>/<name>`.
    pub fn resolve_output(&self, explicit: Option<&Path>, name: &str) -> PathBuf {
        if let Some(p) = explicit {
            return p.to_path_buf();
        }
        let root = output_root();
        match &self.output_dir {
            Some(d) if Path::new(d).is_absolute() => PathBuf::from(d),
            Some(d) => root.join(d),
            None => root.join(name),
        }
    }
}

/// `$LAGVAC_OUTPUT_ROOT`, or `runs` in the working directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> CliResult<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config("config.override", format!("malformed key {key:?}")));
    }
    let mut cur = doc;
    for (i, part) in parts.iter().enumerate() {
        if cur.is_null() {
            *cur = Value::Object(Default::default());
        }
        let obj = cur.as_object_mut().ok_or_else(|| {
            CliError::config("config.override", format!("{key:?}: {} is not a table", parts[..i].join(".")))
        })?;
        if i + 1 == parts.len() {
            if !obj.contains_key(*part) {
                return Err(CliError::config("config.override", format!("unknown key {key:?}")));
            }
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.get_mut(*part).ok_or_else(|| CliError::config("config.override", format!("unknown key {key:?}")))?;
    }
    unreachable!("key has at least one part")
}

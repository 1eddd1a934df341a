//! CSV time series, run manifests and checkpoints.
//!
//! Every float is written with 17 significant digits, which is enough for
//! an exact round trip of an `f64`.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use lagvac_core::diagnostics::{BalanceStep, BoundsReport, EnergyReport};
use lagvac_core::lagrangian::LagrangianState;
use lagvac_core::picard::WindowRecord;
use lagvac_core::RadialGrid;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FORMAT: &str = "lagvac-manifest";
pub const CHECKPOINT_FORMAT: &str = "lagvac-checkpoint";
pub const FORMAT_VERSION: u32 = 1;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FIELDS_FILE: &str = "fields.csv";
pub const MODAL_FILE: &str = "modal.csv";
pub const ENERGY_FILE: &str = "energy.csv";
pub const BOUNDS_FILE: &str = "bounds.csv";
pub const BALANCE_FILE: &str = "balance.csv";
pub const PICARD_FILE: &str = "picard.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

/// `x` with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> CliResult<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| CliError::io("io.write", format!("{}: {e}", path.display())))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(file))
}

fn reader(path: &Path) -> CliResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io("io.missing", format!("{}: {e}", path.display())))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn parse_f64(field: Option<&str>, path: &Path) -> CliResult<f64> {
    field
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::io("io.corrupt", format!("{}: unreadable number {field:?}", path.display())))
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Nodal fields of every state, one row per step and node.
pub fn write_fields(path: &Path, states: &[LagrangianState], rhos: &[Vec<f64>], grid: &RadialGrid) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(["step", "t", "r", "u", "u_r", "eta", "eta_r", "rho"])?;
    for (n, (s, rho)) in states.iter().zip(rhos).enumerate() {
        for (i, r) in grid.nodes().iter().enumerate() {
            w.write_record([
                n.to_string(),
                num(s.t),
                num(*r),
                num(s.u[i]),
                num(s.u_r[i]),
                num(s.eta[i]),
                num(s.eta_r[i]),
                num(rho[i]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Galerkin coefficients of every state.
pub fn write_modal(path: &Path, states: &[LagrangianState], n_modes: usize) -> CliResult<()> {
    let mut w = writer(path)?;
    let mut header = vec!["step".to_string(), "t".to_string()];
    header.extend((1..=n_modes).map(|j| format!("c{j}")));
    w.write_record(&header)?;
    for (n, s) in states.iter().enumerate() {
        let c = s
            .modal_u
            .as_ref()
            .ok_or_else(|| CliError::io("io.state", format!("state {n} has no modal coefficients")))?;
        let mut row = vec![n.to_string(), num(s.t)];
        row.extend(c.iter().map(|x| num(*x)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_energy(path: &Path, reports: &[EnergyReport]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(["step", "t", "epsilon0", "E_in", "E_ex", "D_in", "D_ex", "E", "D", "mass", "ring_E", "ring_D"])?;
    for (n, e) in reports.iter().enumerate() {
        w.write_record([
            n.to_string(),
            num(e.t),
            num(e.epsilon0),
            num(e.E_in),
            num(e.E_ex),
            num(e.D_in),
            num(e.D_ex),
            num(e.E_total),
            num(e.D_total),
            num(e.mass),
            opt(e.ring_E),
            opt(e.ring_D),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bounds(path: &Path, reports: &[BoundsReport]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record([
        "step",
        "t",
        "eta_r_min",
        "eta_r_max",
        "eta_over_r_min",
        "eta_over_r_max",
        "rho_max",
        "rho_ratio_min",
        "rho_ratio_max",
        "bd_velocity",
        "bd_density",
        "u_r_boundary",
        "u_r_sup",
        "asymptotic_constant",
        "v_sup_interior",
        "v_sup_exterior",
    ])?;
    for (n, b) in reports.iter().enumerate() {
        let mut row = vec![n.to_string()];
        row.extend(
            [
                b.t,
                b.eta_r_min,
                b.eta_r_max,
                b.eta_over_r_min,
                b.eta_over_r_max,
                b.rho_max,
                b.rho_ratio_min,
                b.rho_ratio_max,
                b.bd_velocity,
                b.bd_density,
                b.u_r_boundary,
                b.u_r_sup,
                b.asymptotic_constant,
                b.v_sup_interior,
                b.v_sup_exterior,
            ]
            .map(num),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_balance(path: &Path, steps: &[BalanceStep]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(["step", "t", "energy_start", "energy_end", "dissipation", "residual"])?;
    for (n, b) in steps.iter().enumerate() {
        w.write_record([
            n.to_string(),
            num(b.t),
            num(b.energy_start),
            num(b.energy_end),
            num(b.dissipation),
            num(b.residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per Picard iterate of every window.
pub fn write_picard(path: &Path, windows: &[WindowRecord]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(["window", "t_start", "t_end", "steps", "halvings", "iteration", "energy", "ratio"])?;
    for (k, win) in windows.iter().enumerate() {
        for (i, e) in win.trace.energies.iter().enumerate() {
            let ratio = if i == 0 { None } else { win.trace.ratios.get(i - 1).copied() };
            w.write_record([
                k.to_string(),
                num(win.t_start),
                num(win.t_end),
                win.steps.to_string(),
                win.halvings.to_string(),
                (i + 1).to_string(),
                num(*e),
                opt(ratio),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a stored trajectory back from `fields.csv` and `modal.csv`. Missing
/// rows, short records or unparsable numbers are IO errors.
pub fn read_trajectory(
    dir: &Path,
    config: &RunConfig,
    grid: &RadialGrid,
    expected_steps: usize,
) -> CliResult<Vec<LagrangianState>> {
    let modal_path = dir.join(MODAL_FILE);
    let mut modal = Vec::new();
    for (n, rec) in reader(&modal_path)?.records().enumerate() {
        let rec = rec?;
        if rec.len() != config.n_modes + 2 || rec.get(0) != Some(n.to_string().as_str()) {
            return Err(CliError::io("io.corrupt", format!("{}: bad record {n}", modal_path.display())));
        }
        let t = parse_f64(rec.get(1), &modal_path)?;
        let c = (2..rec.len()).map(|k| parse_f64(rec.get(k), &modal_path)).collect::<CliResult<Vec<_>>>()?;
        modal.push((t, c));
    }
    if modal.len() != expected_steps + 1 {
        return Err(CliError::io(
            "io.truncated",
            format!("{}: {} states, expected {}", modal_path.display(), modal.len(), expected_steps + 1),
        ));
    }

    let fields_path = dir.join(FIELDS_FILE);
    let nodes = grid.len();
    let mut states: Vec<LagrangianState> = Vec::with_capacity(modal.len());
    let mut rows = 0usize;
    for rec in reader(&fields_path)?.records() {
        let rec = rec?;
        let (n, i) = (rows / nodes, rows % nodes);
        if rec.len() != 8 || rec.get(0) != Some(n.to_string().as_str()) || n >= modal.len() {
            return Err(CliError::io("io.corrupt", format!("{}: bad record {rows}", fields_path.display())));
        }
        let v = (1..8).map(|k| parse_f64(rec.get(k), &fields_path)).collect::<CliResult<Vec<_>>>()?;
        if i == 0 {
            let (t, c) = &modal[n];
            if v[0] != *t {
                return Err(CliError::io(
                    "io.corrupt",
                    format!("{}: time mismatch at step {n}", fields_path.display()),
                ));
            }
            states.push(LagrangianState {
                t: *t,
                u: Vec::with_capacity(nodes),
                u_r: Vec::with_capacity(nodes),
                eta: Vec::with_capacity(nodes),
                eta_r: Vec::with_capacity(nodes),
                params: config.physical,
                modal_u: Some(c.clone()),
            });
        }
        if v[1] != grid.nodes()[i] {
            return Err(CliError::io(
                "io.corrupt",
                format!("{}: node mismatch in record {rows}", fields_path.display()),
            ));
        }
        let s = states.last_mut().unwrap();
        s.u.push(v[2]);
        s.u_r.push(v[3]);
        s.eta.push(v[4]);
        s.eta_r.push(v[5]);
        rows += 1;
    }
    if rows != modal.len() * nodes {
        return Err(CliError::io(
            "io.truncated",
            format!("{}: {rows} rows, expected {}", fields_path.display(), modal.len() * nodes),
        ));
    }
    Ok(states)
}

/// Summary of one Picard window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    pub halvings: usize,
    pub iterations: usize,
    pub ratios: Vec<f64>,
}

impl From<&WindowRecord> for WindowSummary {
    fn from(w: &WindowRecord) -> Self {
        Self {
            t_start: w.t_start,
            t_end: w.t_end,
            steps: w.steps,
            halvings: w.halvings,
            iterations: w.trace.iterations,
            ratios: w.trace.ratios.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub nodes: usize,
    pub final_time: f64,
    pub converged: bool,
    pub pass: bool,
    pub monitors: BTreeMap<String, bool>,
    /// Worst value of each monitored quantity.
    pub worst: BTreeMap<String, f64>,
    /// Printed with 17 significant digits.
    pub mass_initial: String,
    pub mass_final: String,
    pub windows: Vec<WindowSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub config: RunConfig,
    pub summary: RunSummary,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(config: RunConfig, summary: RunSummary, files: Vec<String>) -> Self {
        Self { format: MANIFEST_FORMAT.into(), version: FORMAT_VERSION, config, summary, files }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub step: usize,
    pub config: RunConfig,
    pub state: LagrangianState,
}

impl Checkpoint {
    pub fn new(step: usize, config: RunConfig, state: LagrangianState) -> Self {
        Self { format: CHECKPOINT_FORMAT.into(), version: FORMAT_VERSION, step, config, state }
    }
}

pub fn to_document<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("document serializes");
    s.push('\n');
    s
}

/// Parses a document after checking its `format` and `version` header.
pub fn from_document<T: DeserializeOwned>(text: &str, format: &str) -> CliResult<T> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| CliError::io("io.corrupt", format!("unreadable {format}: {e}")))?;
    if doc.get("format").and_then(Value::as_str) != Some(format) {
        return Err(CliError::io("io.header", format!("missing or wrong format tag, expected {format:?}")));
    }
    match doc.get("version").and_then(Value::as_u64) {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => return Err(CliError::io("io.version", format!("{format} version {v}, expected {FORMAT_VERSION}"))),
        None => return Err(CliError::io("io.header", format!("{format} has no version"))),
    }
    serde_json::from_value(doc).map_err(|e| CliError::io("io.corrupt", format!("{format}: {e}")))
}

pub fn write_document<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    std::fs::write(path, to_document(value)).map_err(|e| CliError::io("io.write", format!("{}: {e}", path.display())))
}

pub fn read_document<T: DeserializeOwned>(path: &Path, format: &str) -> CliResult<T> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::io("io.missing", format!("{}: {e}", path.display())))?;
    from_document(&text, format)
}

/// Serializes a state inside a checkpoint document and reads it back.
pub fn checkpoint_roundtrip(state: &LagrangianState, config: &RunConfig) -> CliResult<LagrangianState> {
    let text = to_document(&Checkpoint::new(0, config.clone(), state.clone()));
    Ok(from_document::<Checkpoint>(&text, CHECKPOINT_FORMAT)?.state)
}

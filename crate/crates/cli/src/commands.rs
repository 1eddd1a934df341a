//! The four subcommands as library functions. Each returns a structured
//! outcome; `main` turns it into an exit status.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lagvac_core::eigen::{solve_eigenpairs, EigenBasis};
use lagvac_core::eulerian::{boundary_radius, eulerian_fields, EulerianSnapshot};
use lagvac_core::picard::solve_global;
use lagvac_core::{GridSpec, RadialGrid};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::*;
use crate::monitor::{evaluate, MonitorReport};

fn prepare_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io("io.output", format!("{}: {e}", dir.display())))
}

fn build_basis(config: &RunConfig, grid: &RadialGrid) -> CliResult<EigenBasis> {
    Ok(solve_eigenpairs(grid.m(), config.n_modes, grid)?)
}

fn summarize(report: &MonitorReport, steps: usize, nodes: usize, final_time: f64) -> RunSummary {
    RunSummary {
        steps,
        nodes,
        final_time,
        converged: true,
        pass: report.pass(),
        monitors: report.monitors.clone(),
        worst: report.worst.clone(),
        mass_initial: num(report.masses[0]),
        mass_final: num(*report.masses.last().unwrap()),
        windows: Vec::new(),
    }
}

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl SimulateOutcome {
    pub fn pass(&self) -> bool {
        self.manifest.summary.pass
    }
}

/// Solves, evaluates every monitor and writes the run directory.
pub fn cmd_simulate(config: &RunConfig, dir: &Path) -> CliResult<SimulateOutcome> {
    config.validate()?;
    let grid = config.build_grid()?;
    let fields = config.build_fields(&grid)?;
    let basis = build_basis(config, &grid)?;
    prepare_dir(dir)?;

    let record = solve_global(&fields, config.horizon, &config.picard_config(), &basis, &grid, None)?;
    let states = &record.states;
    let report = evaluate(states, &fields, &basis, &grid, &config.monitors)?;

    write_fields(&dir.join(FIELDS_FILE), states, &report.densities, &grid)?;
    write_modal(&dir.join(MODAL_FILE), states, config.n_modes)?;
    write_bounds(&dir.join(BOUNDS_FILE), &report.bounds)?;
    write_balance(&dir.join(BALANCE_FILE), &report.balance)?;
    write_energy(&dir.join(ENERGY_FILE), &report.energies)?;
    write_picard(&dir.join(PICARD_FILE), &record.windows)?;
    let mut files: Vec<String> =
        [FIELDS_FILE, MODAL_FILE, BOUNDS_FILE, BALANCE_FILE, ENERGY_FILE, PICARD_FILE].map(String::from).into();

    let last = states.len() - 1;
    if config.checkpoint_interval > 0 {
        for n in (config.checkpoint_interval..last).step_by(config.checkpoint_interval) {
            let name = format!("checkpoint_{n:06}.json");
            write_document(&dir.join(&name), &Checkpoint::new(n, config.clone(), states[n].clone()))?;
            files.push(name);
        }
    }
    write_document(&dir.join(CHECKPOINT_FILE), &Checkpoint::new(last, config.clone(), states[last].clone()))?;
    files.push(CHECKPOINT_FILE.into());

    let mut summary = summarize(&report, last, grid.len(), states[last].t);
    summary.windows = record.windows.iter().map(WindowSummary::from).collect();
    let manifest = Manifest::new(config.clone(), summary, files);
    write_document(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(SimulateOutcome { dir: dir.to_path_buf(), manifest })
}

#[derive(Debug, Clone)]
pub struct EigenOutcome {
    pub lambdas: Vec<f64>,
    /// `max |⟨ξ_i, ξ_j⟩ − δ_ij|` in the `r^m`-weighted quadrature.
    pub orthonormality_defect: f64,
    pub boundary_residual: f64,
}

/// Orthonormality defect of a basis on its grid.
pub fn orthonormality_defect(basis: &EigenBasis, grid: &RadialGrid) -> f64 {
    let w = grid.r_pow_m();
    let mut worst = 0.0f64;
    for i in 0..basis.len() {
        let wi: Vec<f64> = basis.xi[i].iter().zip(&w).map(|(a, b)| a * b).collect();
        for j in 0..=i {
            let g = grid.integrate_product(&wi, &basis.xi[j]);
            worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    worst
}

/// Writes `eigenvalues.csv` and `basis.csv` (the modes and their
/// derivatives at the grid nodes).
pub fn cmd_eigen(m: usize, n: usize, grid: GridSpec, dir: &Path) -> CliResult<EigenOutcome> {
    if grid.m != m {
        return Err(CliError::config("config.grid", "grid dimension index differs from m"));
    }
    let g = grid.build()?;
    let basis = solve_eigenpairs(m, n, &g)?;
    prepare_dir(dir)?;

    let path = dir.join("eigenvalues.csv");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(&path)
        .map_err(|e| CliError::io("io.write", format!("{}: {e}", path.display())))?;
    w.write_record(["index", "lambda"])?;
    for (j, l) in basis.lambdas.iter().enumerate() {
        w.write_record([(j + 1).to_string(), num(*l)])?;
    }
    w.flush()?;

    let path = dir.join("basis.csv");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(&path)
        .map_err(|e| CliError::io("io.write", format!("{}: {e}", path.display())))?;
    let mut header = vec!["r".to_string()];
    header.extend((1..=n).map(|j| format!("xi_{j}")));
    header.extend((1..=n).map(|j| format!("xi_r_{j}")));
    w.write_record(&header)?;
    for i in 0..g.len() {
        let mut row = vec![num(g.nodes()[i])];
        row.extend(basis.xi.iter().map(|x| num(x[i])));
        row.extend(basis.xi_r.iter().map(|x| num(x[i])));
        w.write_record(&row)?;
    }
    w.flush()?;

    Ok(EigenOutcome {
        orthonormality_defect: orthonormality_defect(&basis, &g),
        boundary_residual: basis.boundary_residual(),
        lambdas: basis.lambdas,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    /// Monitors whose recomputed verdict differs from the manifest.
    pub mismatches: Vec<String>,
    pub monitors: BTreeMap<String, bool>,
    pub mass_final: String,
    pub mass_matches: bool,
}

impl VerifyOutcome {
    pub fn identical(&self) -> bool {
        self.mismatches.is_empty() && self.mass_matches
    }
}

/// Recomputes every monitor from the stored trajectory of a run.
pub fn cmd_verify(dir: &Path) -> CliResult<VerifyOutcome> {
    let manifest: Manifest = read_document(&dir.join(MANIFEST_FILE), MANIFEST_FORMAT)?;
    let config = &manifest.config;
    config.validate()?;
    let grid = config.build_grid()?;
    if grid.len() != manifest.summary.nodes {
        return Err(CliError::io("io.corrupt", "manifest node count differs from its grid"));
    }
    let fields = config.build_fields(&grid)?;
    let basis = build_basis(config, &grid)?;
    let states = read_trajectory(dir, config, &grid, manifest.summary.steps)?;
    let report = evaluate(&states, &fields, &basis, &grid, &config.monitors)?;

    let stored = &manifest.summary.monitors;
    let mut mismatches: Vec<String> =
        report.monitors.iter().filter(|(k, v)| stored.get(*k) != Some(v)).map(|(k, _)| k.clone()).collect();
    mismatches.extend(stored.keys().filter(|k| !report.monitors.contains_key(*k)).cloned());
    let mass_final = num(*report.masses.last().unwrap());
    Ok(VerifyOutcome {
        mass_matches: mass_final == manifest.summary.mass_final,
        mismatches,
        monitors: report.monitors,
        mass_final,
    })
}

/// Eulerian snapshot of a checkpoint on `samples` cell-centred points of
/// `(0, R_t)`.
pub fn eulerian_snapshot(checkpoint: &Checkpoint, samples: usize) -> CliResult<EulerianSnapshot> {
    if samples == 0 {
        return Err(CliError::config("config.samples", "need at least one sample"));
    }
    let config = &checkpoint.config;
    let grid = config.build_grid()?;
    let fields = config.build_fields(&grid)?;
    let state = &checkpoint.state;
    if state.len() != grid.len() {
        return Err(CliError::io("io.corrupt", "checkpoint state does not match its grid"));
    }
    let r_t = boundary_radius(state, &grid)?;
    let xs: Vec<f64> = (0..samples).map(|i| r_t * (i as f64 + 0.5) / samples as f64).collect();
    Ok(eulerian_fields(state, &fields, &xs, &grid)?)
}

/// Reads a checkpoint (or the final checkpoint of a run directory) and
/// writes `x, rho, u` with `R_t` in the header record.
pub fn cmd_transform(input: &Path, samples: usize, out: &Path) -> CliResult<EulerianSnapshot> {
    let path = if input.is_dir() { input.join(CHECKPOINT_FILE) } else { input.to_path_buf() };
    let checkpoint: Checkpoint = read_document(&path, CHECKPOINT_FORMAT)?;
    let snap = eulerian_snapshot(&checkpoint, samples)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        prepare_dir(parent)?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(out)
        .map_err(|e| CliError::io("io.write", format!("{}: {e}", out.display())))?;
    w.write_record(["x".to_string(), "rho".into(), "u".into(), format!("R_t={}", num(snap.r_t))])?;
    for i in 0..snap.x.len() {
        w.write_record([num(snap.x[i]), num(snap.rho[i]), num(snap.u[i]), String::new()])?;
    }
    w.flush()?;
    Ok(snap)
}

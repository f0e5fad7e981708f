//! Subcommand drivers: each takes a validated [`RunConfig`] and writes its
//! artifacts into the configured output directory.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::bathymetry::{sample_field, BathymetryField};
use crate::config::{emit_config, fmt_f64, RunConfig};
use crate::error::{Error, Result};
use crate::forward::{solve_forward, Model, State};
use crate::io::{
    atomic_write, convergence_csv, convergence_script, create_dir, csv_columns, read_convergence,
    snapshot_script, CONVERGENCE_FILE,
};
use crate::optimizer::{descent_run, synthesize_targets, RunHistory, Targets};

pub const CONFIG_FILE: &str = "config.txt";

/// Model and synthetic observations for `cfg`.
pub fn prepare(cfg: &RunConfig) -> Result<(Model, Targets)> {
    cfg.validate()?;
    let model = cfg.model()?;
    let targets = synthesize_targets(
        cfg.profile,
        &model,
        cfg.scheme.forward_scheme(),
        cfg.v0,
        cfg.zeta0,
    )?;
    let targets = if cfg.constant_zeta_bar {
        targets.with_constant_surface(cfg.zeta0)
    } else {
        targets
    };
    Ok((model, targets))
}

fn time_tag(t: f64) -> String {
    fmt_f64(t)
}

pub fn snapshot_name(k: usize, t: f64) -> String {
    format!("snapshot_k{k}_t{}.csv", time_tag(t))
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        create_dir(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        atomic_write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }
}

/// Writes the observed surface and velocity with the true bottom at each snapshot time.
pub fn run_generate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (model, targets) = prepare(cfg)?;
    let mut out = Writer::new(&cfg.out)?;
    let x = model.grid.centers();
    for &t in &cfg.snapshot_times {
        let n = model.grid.level_for_time(t)?;
        let text = csv_columns(
            &["x", "b_true", "zeta_bar", "v_bar"],
            &[
                x,
                targets.b_bar.row(n),
                targets.zeta_bar.row(n),
                targets.v_bar.row(n),
            ],
        )?;
        out.write(&format!("targets_t{}.csv", time_tag(t)), &text)?;
    }
    out.write(CONFIG_FILE, &emit_config(cfg))?;
    Ok(out.files)
}

/// One forward solve over the true bottom, written at each snapshot time.
pub fn run_forward(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let model = cfg.model()?;
    let b = sample_field(cfg.profile, &model.grid);
    let initial = State::new(
        b.row(0).iter().map(|b| cfg.zeta0 - b).collect(),
        vec![cfg.v0; model.grid.num_cells()],
    )?;
    let forward = solve_forward(&initial, &b, cfg.scheme.forward_scheme(), &model)?;
    let zeta = forward.surface(&b);
    let mut out = Writer::new(&cfg.out)?;
    let x = model.grid.centers();
    for &t in &cfg.snapshot_times {
        let n = model.grid.level_for_time(t)?;
        let text = csv_columns(
            &["x", "r", "v", "zeta", "b"],
            &[x, forward.r.row(n), forward.v.row(n), zeta.row(n), b.row(n)],
        )?;
        out.write(&format!("forward_t{}.csv", time_tag(t)), &text)?;
    }
    out.write(CONFIG_FILE, &emit_config(cfg))?;
    Ok(out.files)
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub model: Model,
    pub targets: Targets,
    pub final_b: BathymetryField,
    pub history: RunHistory,
}

impl Reconstruction {
    /// `b^k`, or the final iterate when the loop stopped before reaching `k`.
    pub fn iterate(&self, k: usize) -> &BathymetryField {
        self.history.iterates.get(&k).unwrap_or(&self.final_b)
    }
}

/// Runs the descent without writing anything.
pub fn reconstruct(cfg: &RunConfig) -> Result<Reconstruction> {
    let (model, targets) = prepare(cfg)?;
    let (final_b, history) = descent_run(&cfg.descent(), &targets, &model, cfg.scheme)?;
    Ok(Reconstruction {
        model,
        targets,
        final_b,
        history,
    })
}

/// Full reconstruction: snapshots of `b^k` against `b̄`, the convergence
/// history and the plot scripts. `convergence.csv` is written last.
pub fn run_reconstruct(cfg: &RunConfig) -> Result<(Reconstruction, Vec<PathBuf>)> {
    let rec = reconstruct(cfg)?;
    let mut out = Writer::new(&cfg.out)?;
    let grid = &rec.model.grid;
    let x = grid.centers();
    let mut names = Vec::new();
    for &k in &cfg.snapshot_iterations {
        for &t in &cfg.snapshot_times {
            let n = grid.level_for_time(t)?;
            let name = snapshot_name(k, t);
            let text = csv_columns(
                &["x", "b_reconstructed", "b_true"],
                &[x, rec.iterate(k).row(n), rec.targets.b_bar.row(n)],
            )?;
            out.write(&name, &text)?;
            names.push(name);
        }
    }
    out.write("snapshots.gp", &snapshot_script(&names))?;
    out.write(
        "convergence.gp",
        &convergence_script(&format!("{} / {}", cfg.profile, cfg.scheme)),
    )?;
    out.write(CONFIG_FILE, &emit_config(cfg))?;
    out.write(CONVERGENCE_FILE, &convergence_csv(&rec.history.records))?;
    Ok((rec, out.files))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub iteration: usize,
    pub sup_a: f64,
    pub sup_b: f64,
    /// `sup_a / sup_b`, taken as 1 when both are equal.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    /// The sup-norm never changes across iterations in the first directory.
    pub constant_a: bool,
    pub constant_b: bool,
}

fn is_constant(xs: impl Iterator<Item = f64> + Clone) -> bool {
    let mut it = xs.clone();
    match it.next() {
        Some(first) => xs.count() > 1 && it.all(|x| x == first),
        None => false,
    }
}

/// Per-iteration ratio of the sup-norms of ∇J stored in two output directories.
pub fn run_compare(a: &Path, b: &Path) -> Result<CompareReport> {
    let ra = read_convergence(a)?;
    let rb = read_convergence(b)?;
    if ra.len() != rb.len() || ra.iter().zip(&rb).any(|(x, y)| x.iteration != y.iteration) {
        return Err(Error::Shape(format!(
            "{} has {} iterations, {} has {}",
            a.display(),
            ra.len(),
            b.display(),
            rb.len()
        )));
    }
    let rows = ra
        .iter()
        .zip(&rb)
        .map(|(x, y)| CompareRow {
            iteration: x.iteration,
            sup_a: x.sup_norm,
            sup_b: y.sup_norm,
            ratio: if x.sup_norm == y.sup_norm {
                1.0
            } else {
                x.sup_norm / y.sup_norm
            },
        })
        .collect();
    Ok(CompareReport {
        constant_a: is_constant(ra.iter().map(|r| r.sup_norm)),
        constant_b: is_constant(rb.iter().map(|r| r.sup_norm)),
        rows,
    })
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "iteration,sup_norm_a,sup_norm_b,ratio")?;
        for r in &self.rows {
            writeln!(
                f,
                "{},{},{},{}",
                r.iteration,
                fmt_f64(r.sup_a),
                fmt_f64(r.sup_b),
                fmt_f64(r.ratio)
            )?;
        }
        for (flag, which) in [(self.constant_a, "a"), (self.constant_b, "b")] {
            if flag {
                writeln!(
                    f,
                    "warning: sup-norm column {which} is constant (no descent progress)"
                )?;
            }
        }
        Ok(())
    }
}

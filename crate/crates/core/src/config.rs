//! Run configuration as a `key = value` text document.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may use `-` or
//! `_` interchangeably. Any key left out takes its default.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::bathymetry::ProfileKind;
use crate::error::{Error, Result};
use crate::force_alpha::{Dissipation, ForceAlpha};
use crate::forward::Model;
use crate::grid::{make_grid, BoundaryKind};
use crate::optimizer::{DescentConfig, SchemeCombo};

/// Keys accepted by [`parse_config`], in emission order.
pub const KEYS: [&str; 21] = [
    "profile",
    "scheme",
    "length",
    "cells",
    "dt",
    "tmax",
    "epsilon",
    "alpha_f",
    "v0",
    "zeta0",
    "lambda_b",
    "iters",
    "tol",
    "b_init",
    "bc",
    "out",
    "snapshot_iterations",
    "snapshot_times",
    "pin_endpoints",
    "printed_aplus_form",
    "constant_zeta_bar",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile: ProfileKind,
    pub scheme: SchemeCombo,
    pub length: f64,
    pub cells: usize,
    pub dt: f64,
    pub tmax: f64,
    pub epsilon: f64,
    pub alpha_f: f64,
    /// Initial velocity of the synthetic run.
    pub v0: f64,
    /// Initial free-surface level of the synthetic run.
    pub zeta0: f64,
    pub lambda_b: f64,
    pub iters: usize,
    pub tol: f64,
    pub b_init: f64,
    /// `None` picks the profile's own closure.
    pub bc: Option<BoundaryKind>,
    pub out: PathBuf,
    pub snapshot_iterations: Vec<usize>,
    pub snapshot_times: Vec<f64>,
    pub pin_endpoints: bool,
    pub printed_aplus_form: bool,
    /// Use the constant `zeta0` as the observed surface at every level.
    pub constant_zeta_bar: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            profile: ProfileKind::Smooth,
            scheme: SchemeCombo::ForceAlphaCsf,
            length: 20.0,
            cells: 100,
            dt: 0.01,
            tmax: 1.0,
            epsilon: 0.001,
            alpha_f: 2.0,
            v0: 1.5,
            zeta0: 1.0,
            lambda_b: 0.71,
            iters: 17,
            tol: 1e-8,
            b_init: 0.01,
            bc: None,
            out: PathBuf::from("out"),
            snapshot_iterations: vec![0, 1, 2, 4, 8],
            snapshot_times: vec![0.25, 0.5, 0.75],
            pin_endpoints: false,
            printed_aplus_form: false,
            constant_zeta_bar: false,
        }
    }
}

impl RunConfig {
    pub fn boundary(&self) -> BoundaryKind {
        self.bc.unwrap_or_else(|| self.profile.default_boundary())
    }

    pub fn model(&self) -> Result<Model> {
        Ok(Model {
            grid: make_grid(self.length, self.cells, self.dt, self.tmax)?,
            bc: self.boundary(),
            eps: self.epsilon,
            force_alpha: ForceAlpha {
                alpha_f: self.alpha_f,
                dissipation: if self.printed_aplus_form {
                    Dissipation::Printed
                } else {
                    Dissipation::MeshRatio
                },
            },
        })
    }

    pub fn descent(&self) -> DescentConfig {
        let mut keep: BTreeSet<usize> = self.snapshot_iterations.iter().copied().collect();
        keep.insert(0);
        DescentConfig {
            lambda_b: self.lambda_b,
            iter_total: self.iters,
            tol: self.tol,
            b_init: self.b_init,
            pin_endpoints: self.pin_endpoints,
            keep_iterates: keep,
        }
    }

    /// Sets one field from its textual value, without cross-field checks.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "profile" => self.profile = value.parse()?,
            "scheme" => self.scheme = value.parse()?,
            "length" => self.length = positive(&key, value)?,
            "cells" => {
                self.cells = parse_usize(&key, value)?;
                if self.cells < 3 {
                    return Err(range(&key, value, "an integer >= 3"));
                }
            }
            "dt" => self.dt = positive(&key, value)?,
            "tmax" => self.tmax = non_negative(&key, value)?,
            "epsilon" => {
                self.epsilon = non_negative(&key, value)?;
                if self.epsilon > 1.0 {
                    return Err(range(&key, value, "[0, 1]"));
                }
            }
            "alpha_f" => self.alpha_f = positive(&key, value)?,
            "v0" => self.v0 = finite(&key, value)?,
            "zeta0" => self.zeta0 = finite(&key, value)?,
            "lambda_b" => self.lambda_b = non_negative(&key, value)?,
            "iters" => {
                self.iters = parse_usize(&key, value)?;
                if self.iters < 1 {
                    return Err(range(&key, value, "an integer >= 1"));
                }
            }
            "tol" => self.tol = non_negative(&key, value)?,
            "b_init" => self.b_init = finite(&key, value)?,
            "bc" => {
                self.bc = match value {
                    "auto" => None,
                    other => Some(other.parse()?),
                }
            }
            "out" => {
                if value.is_empty() {
                    return Err(range(&key, value, "a non-empty path"));
                }
                self.out = PathBuf::from(value);
            }
            "snapshot_iterations" => {
                self.snapshot_iterations = list(value)
                    .map(|v| parse_usize(&key, v))
                    .collect::<Result<_>>()?
            }
            "snapshot_times" => {
                self.snapshot_times = list(value)
                    .map(|v| non_negative(&key, v))
                    .collect::<Result<_>>()?
            }
            "pin_endpoints" => self.pin_endpoints = parse_bool(&key, value)?,
            "printed_aplus_form" => self.printed_aplus_form = parse_bool(&key, value)?,
            "constant_zeta_bar" => self.constant_zeta_bar = parse_bool(&key, value)?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown key '{key}' (known keys: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Cross-field checks: the grid must be constructible and every snapshot
    /// time must lie on a level.
    pub fn validate(&self) -> Result<()> {
        let grid = make_grid(self.length, self.cells, self.dt, self.tmax)?;
        for &t in &self.snapshot_times {
            if t > self.tmax {
                return Err(Error::Config(format!(
                    "snapshot time {t} is beyond tmax = {}",
                    self.tmax
                )));
            }
            grid.level_for_time(t)?;
        }
        self.descent().validate()
    }
}

/// Parses a configuration document; unspecified keys keep their defaults.
pub fn parse_config(source: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seen = BTreeSet::new();
    for (lineno, line) in source.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
        let norm = key.trim().replace('-', "_");
        if !seen.insert(norm.clone()) {
            return Err(Error::Config(format!(
                "line {}: duplicate key '{norm}'",
                lineno + 1
            )));
        }
        cfg.set(key, value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes every key so that [`parse_config`] reproduces `cfg` exactly.
pub fn emit_config(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let join = |v: Vec<String>| v.join(", ");
    let mut line = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    line("profile", cfg.profile.to_string());
    line("scheme", cfg.scheme.to_string());
    line("length", fmt_f64(cfg.length));
    line("cells", cfg.cells.to_string());
    line("dt", fmt_f64(cfg.dt));
    line("tmax", fmt_f64(cfg.tmax));
    line("epsilon", fmt_f64(cfg.epsilon));
    line("alpha_f", fmt_f64(cfg.alpha_f));
    line("v0", fmt_f64(cfg.v0));
    line("zeta0", fmt_f64(cfg.zeta0));
    line("lambda_b", fmt_f64(cfg.lambda_b));
    line("iters", cfg.iters.to_string());
    line("tol", fmt_f64(cfg.tol));
    line("b_init", fmt_f64(cfg.b_init));
    line("bc", cfg.bc.map_or("auto".to_string(), |b| b.to_string()));
    line("out", cfg.out.display().to_string());
    line(
        "snapshot_iterations",
        join(
            cfg.snapshot_iterations
                .iter()
                .map(|k| k.to_string())
                .collect(),
        ),
    );
    line(
        "snapshot_times",
        join(cfg.snapshot_times.iter().map(|&t| fmt_f64(t)).collect()),
    );
    line("pin_endpoints", cfg.pin_endpoints.to_string());
    line("printed_aplus_form", cfg.printed_aplus_form.to_string());
    line("constant_zeta_bar", cfg.constant_zeta_bar.to_string());
    s
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|v| !v.is_empty())
}

fn range(key: &str, value: &str, expected: &str) -> Error {
    Error::Config(format!(
        "{key} = '{value}' is out of range: expected {expected}"
    ))
}

fn finite(key: &str, value: &str) -> Result<f64> {
    match value.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(range(key, value, "a finite number")),
    }
}

fn positive(key: &str, value: &str) -> Result<f64> {
    let x = finite(key, value)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(range(key, value, "a number > 0"))
    }
}

fn non_negative(key: &str, value: &str) -> Result<f64> {
    let x = finite(key, value)?;
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(range(key, value, "a number >= 0"))
    }
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| range(key, value, "a non-negative integer"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(range(key, value, "true or false")),
    }
}

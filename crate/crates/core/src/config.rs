//! Flat `key = value` run configuration.
//!
//! Every key is optional. Defaults:
//!
//! | key | default | key | default |
//! |-----|---------|-----|---------|
//! | `nx`, `ny` | 32 | `lx`, `ly` | 1 |
//! | `a` | 1 | `gamma` | 1.4 |
//! | `muS` | 0.05 | `muB` | 0.01 |
//! | `eps` | 0.01 | `k` | 1 |
//! | `L` | 1 | `delta` | 0.1 |
//! | `lambda` | 1 | `A0` | 1 |
//! | `fx`, `fy` | 0 | `alpha` | 0.1 |
//! | `sigma1` | 0 | `Gamma` | 4 |
//! | `sigma2` | 0 | `sigma3` | 0 |
//! | `theta` | 0.01 | `dt` | `auto` |
//! | `t_end` | 1 | `cfl` | 0.4 |
//! | `scheme` | `rk2` | `initial` | `equilibrium` |
//! | `rho_bar`, `eta_bar` | 1 | `amplitude` | 0.1 |
//! | `output` | none | `snapshot` | none |
//! | `diag_every` | 1 | `seed` | 0 |
//! | `T0_override` | none | | |
//!
//! `initial` is one of `equilibrium`, `perturbed-equilibrium`, `shear-layer`
//! or `file:<path>`. `T0_override = xx, xy, yy` replaces the initial stress
//! verbatim after all preprocessing.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::integrate::{DtMode, Scheme, StepConfig};
use crate::model::{PhysParams, RegParams};
use crate::symcalc::SymMat2;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid2D> {
        Grid2D::new(self.nx, self.ny, self.lx, self.ly)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialSpec {
    Equilibrium,
    PerturbedEquilibrium,
    ShearLayer,
    File(PathBuf),
}

impl InitialSpec {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "equilibrium" => Some(InitialSpec::Equilibrium),
            "perturbed-equilibrium" => Some(InitialSpec::PerturbedEquilibrium),
            "shear-layer" => Some(InitialSpec::ShearLayer),
            _ => s
                .strip_prefix("file:")
                .filter(|p| !p.is_empty())
                .map(|p| InitialSpec::File(PathBuf::from(p))),
        }
    }

    fn name(&self) -> String {
        match self {
            InitialSpec::Equilibrium => "equilibrium".into(),
            InitialSpec::PerturbedEquilibrium => "perturbed-equilibrium".into(),
            InitialSpec::ShearLayer => "shear-layer".into(),
            InitialSpec::File(p) => format!("file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub phys: PhysParams,
    pub reg: RegParams,
    pub step: StepConfig,
    pub initial: InitialSpec,
    pub rho_bar: f64,
    pub eta_bar: f64,
    pub amplitude: f64,
    pub t0_override: Option<SymMat2>,
    /// Time-series CSV path.
    pub output: Option<PathBuf>,
    /// Final-state snapshot path.
    pub snapshot: Option<PathBuf>,
    pub diag_every: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: GridSpec {
                nx: 32,
                ny: 32,
                lx: 1.0,
                ly: 1.0,
            },
            phys: PhysParams::default(),
            reg: RegParams::default(),
            step: StepConfig::default(),
            initial: InitialSpec::Equilibrium,
            rho_bar: 1.0,
            eta_bar: 1.0,
            amplitude: 0.1,
            t0_override: None,
            output: None,
            snapshot: None,
            diag_every: 1,
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Cross-field checks; messages start with the offending key.
    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        self.phys.validate()?;
        self.reg.validate()?;
        self.step.validate()?;
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.rho_bar > 0.0 && self.rho_bar.is_finite()) {
            return bad(format!("rho_bar must be > 0, got {}", self.rho_bar));
        }
        if !(self.eta_bar > 0.0 && self.eta_bar.is_finite()) {
            return bad(format!("eta_bar must be > 0, got {}", self.eta_bar));
        }
        if !(self.amplitude.abs() < 1.0) {
            return bad(format!("amplitude must lie in (-1, 1), got {}", self.amplitude));
        }
        if self.diag_every == 0 {
            return bad("diag_every must be ≥ 1".into());
        }
        if let Some(t) = self.t0_override {
            if !t.is_finite() {
                return bad("T0_override must be finite".into());
            }
        }
        Ok(())
    }
}

const KEYS: &[&str] = &[
    "nx", "ny", "lx", "ly", "a", "gamma", "muS", "muB", "eps", "k", "L", "delta", "lambda", "A0",
    "fx", "fy", "alpha", "sigma1", "Gamma", "sigma2", "sigma3", "theta", "dt", "t_end", "cfl",
    "scheme", "initial", "rho_bar", "eta_bar", "amplitude", "output", "snapshot", "diag_every",
    "seed", "T0_override",
];

fn num(v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("expected a finite number, got '{v}'"))
}

fn count(v: &str) -> std::result::Result<usize, String> {
    v.parse::<usize>()
        .map_err(|_| format!("expected a non-negative integer, got '{v}'"))
}

fn assign(cfg: &mut RunConfig, key: &str, v: &str) -> std::result::Result<(), String> {
    match key {
        "nx" => cfg.grid.nx = count(v)?,
        "ny" => cfg.grid.ny = count(v)?,
        "lx" => cfg.grid.lx = num(v)?,
        "ly" => cfg.grid.ly = num(v)?,
        "a" => cfg.phys.a = num(v)?,
        "gamma" => cfg.phys.gamma = num(v)?,
        "muS" => cfg.phys.mu_s = num(v)?,
        "muB" => cfg.phys.mu_b = num(v)?,
        "eps" => cfg.phys.eps = num(v)?,
        "k" => cfg.phys.k = num(v)?,
        "L" => cfg.phys.l = num(v)?,
        "delta" => cfg.phys.delta = num(v)?,
        "lambda" => cfg.phys.lambda = num(v)?,
        "A0" => cfg.phys.a0 = num(v)?,
        "fx" => cfg.phys.force[0] = num(v)?,
        "fy" => cfg.phys.force[1] = num(v)?,
        "alpha" => cfg.reg.alpha = num(v)?,
        "sigma1" => cfg.reg.sigma1 = num(v)?,
        "Gamma" => cfg.reg.big_gamma = num(v)?,
        "sigma2" => cfg.reg.sigma2 = num(v)?,
        "sigma3" => cfg.reg.sigma3 = num(v)?,
        "theta" => cfg.reg.theta = num(v)?,
        "dt" => {
            cfg.step.dt = if v == "auto" {
                DtMode::Auto
            } else {
                DtMode::Fixed(num(v)?)
            }
        }
        "t_end" => cfg.step.t_end = num(v)?,
        "cfl" => cfg.step.cfl = num(v)?,
        "scheme" => {
            cfg.step.scheme = match v {
                "rk2" => Scheme::Rk2,
                "imex" => Scheme::Imex,
                _ => return Err(format!("scheme must be rk2 or imex, got '{v}'")),
            }
        }
        "initial" => {
            cfg.initial = InitialSpec::parse(v).ok_or_else(|| {
                format!(
                    "initial must be equilibrium, perturbed-equilibrium, shear-layer or file:<path>, got '{v}'"
                )
            })?
        }
        "rho_bar" => cfg.rho_bar = num(v)?,
        "eta_bar" => cfg.eta_bar = num(v)?,
        "amplitude" => cfg.amplitude = num(v)?,
        "output" => cfg.output = Some(PathBuf::from(v)),
        "snapshot" => cfg.snapshot = Some(PathBuf::from(v)),
        "diag_every" => cfg.diag_every = count(v)?,
        "seed" => cfg.seed = v.parse().map_err(|_| format!("seed must be a u64, got '{v}'"))?,
        "T0_override" => {
            let parts: Vec<&str> = v.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(format!("T0_override needs three values xx, xy, yy, got '{v}'"));
            }
            cfg.t0_override = Some(SymMat2::new(num(parts[0])?, num(parts[1])?, num(parts[2])?));
        }
        _ => return Err(format!("unknown key '{key}'")),
    }
    Ok(())
}

/// Parses and validates a configuration. Constraint violations are reported
/// at the line of the key they name, or line 0 when that key is unset.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut lines: HashMap<&str, usize> = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Config { line, msg };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected 'key = value', got '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let known = KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| err(format!("unknown key '{key}'")))?;
        if lines.insert(known, line).is_some() {
            return Err(err(format!("duplicate key '{key}'")));
        }
        assign(&mut cfg, key, value).map_err(err)?;
    }
    cfg.validate().map_err(|e| {
        let msg = e.to_string();
        let body = msg.strip_prefix("invalid parameter: ").unwrap_or(&msg).to_string();
        let subject = body.split_whitespace().next().unwrap_or("");
        let line = match subject {
            "body" => lines.get("fx").or(lines.get("fy")).copied(),
            "grid" => lines.get("nx").or(lines.get("ny")).copied(),
            "domain" => lines.get("lx").or(lines.get("ly")).copied(),
            s => lines.get(s).copied(),
        };
        Error::Config {
            line: line.unwrap_or(0),
            msg: body,
        }
    })?;
    Ok(cfg)
}

/// Writes every key explicitly; `parse_config(serialize(c)) == c`.
pub fn serialize(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("nx", cfg.grid.nx.to_string());
    kv("ny", cfg.grid.ny.to_string());
    kv("lx", cfg.grid.lx.to_string());
    kv("ly", cfg.grid.ly.to_string());
    let p = &cfg.phys;
    for (k, v) in [
        ("a", p.a),
        ("gamma", p.gamma),
        ("muS", p.mu_s),
        ("muB", p.mu_b),
        ("eps", p.eps),
        ("k", p.k),
        ("L", p.l),
        ("delta", p.delta),
        ("lambda", p.lambda),
        ("A0", p.a0),
        ("fx", p.force[0]),
        ("fy", p.force[1]),
    ] {
        kv(k, v.to_string());
    }
    let r = &cfg.reg;
    for (k, v) in [
        ("alpha", r.alpha),
        ("sigma1", r.sigma1),
        ("Gamma", r.big_gamma),
        ("sigma2", r.sigma2),
        ("sigma3", r.sigma3),
        ("theta", r.theta),
    ] {
        kv(k, v.to_string());
    }
    kv(
        "dt",
        match cfg.step.dt {
            DtMode::Auto => "auto".into(),
            DtMode::Fixed(d) => d.to_string(),
        },
    );
    kv("t_end", cfg.step.t_end.to_string());
    kv("cfl", cfg.step.cfl.to_string());
    kv(
        "scheme",
        match cfg.step.scheme {
            Scheme::Rk2 => "rk2".into(),
            Scheme::Imex => "imex".into(),
        },
    );
    kv("initial", cfg.initial.name());
    kv("rho_bar", cfg.rho_bar.to_string());
    kv("eta_bar", cfg.eta_bar.to_string());
    kv("amplitude", cfg.amplitude.to_string());
    if let Some(o) = &cfg.output {
        kv("output", o.display().to_string());
    }
    if let Some(o) = &cfg.snapshot {
        kv("snapshot", o.display().to_string());
    }
    kv("diag_every", cfg.diag_every.to_string());
    kv("seed", cfg.seed.to_string());
    if let Some(t) = cfg.t0_override {
        kv("T0_override", format!("{}, {}, {}", t.xx, t.xy, t.yy));
    }
    s
}

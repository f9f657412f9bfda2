//! Limit sweeps `α → 0` and `δ → 0` from identically mollified base data.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::diagnostics::{fmt_num, StressL2Summary};
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::model::SimState;
use crate::runner::{base_data, simulate};

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "OLDROYD2D_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Knob {
    Alpha,
    Delta,
}

impl fmt::Display for Knob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Knob::Alpha => "alpha",
            Knob::Delta => "delta",
        })
    }
}

impl FromStr for Knob {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(Knob::Alpha),
            "delta" => Ok(Knob::Delta),
            _ => Err(Error::InvalidParameter(format!(
                "knob must be alpha or delta, got '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub value: f64,
    pub final_state: SimState,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub energy_residual: f64,
    pub stress: StressL2Summary,
    /// `(δ∫η₀,δ², δ^{1/2}∫η₀)` for the δ sweep.
    pub eta_bound: Option<(f64, f64)>,
}

/// Distance between consecutive entries at `t_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepDiff {
    pub from: f64,
    pub to: f64,
    /// `(‖Δρ‖² + ‖Δu‖² + ‖Δη‖² + ‖ΔT‖²)^{1/2}` in `L²(Ω)`.
    pub l2: f64,
    /// `|E_from(t_end) − E_to(t_end)|`.
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub knob: Knob,
    pub entries: Vec<SweepEntry>,
    pub diffs: Vec<SweepDiff>,
}

impl SweepReport {
    /// Successive differences strictly decrease.
    pub fn cauchy_decreasing(&self) -> bool {
        self.diffs.windows(2).all(|w| w[1].l2 < w[0].l2)
    }

    /// Every entry satisfies `δ∫η₀,δ² ≤ δ^{1/2}∫η₀`.
    pub fn eta_bound_holds(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.eta_bound.is_none_or(|(l, r)| l <= r))
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(
            w,
            "{},E_initial,E_final,residual,stress_bound,max_unit_time_growth,eta_bound_lhs,eta_bound_rhs",
            self.knob
        )?;
        for e in &self.entries {
            let (l, r) = e.eta_bound.unwrap_or((f64::NAN, f64::NAN));
            let v = [
                e.value,
                e.energy_initial,
                e.energy_final,
                e.energy_residual,
                e.stress.bound,
                e.stress.max_unit_time_growth,
                l,
                r,
            ];
            let cells: Vec<String> = v.iter().map(|&x| fmt_num(x)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        writeln!(w)?;
        writeln!(w, "from,to,l2_diff,energy_diff")?;
        for d in &self.diffs {
            let cells: Vec<String> = [d.from, d.to, d.l2, d.energy].iter().map(|&x| fmt_num(x)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

fn diff_sq<const N: usize>(a: &Field<N>, b: &Field<N>) -> f64 {
    let ca = a.grid().cell_area();
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (0..N).map(|k| (x[k] - y[k]).powi(2)).sum::<f64>())
        .sum::<f64>()
        * ca
}

/// `L²` distance over all primitive fields; the off-diagonal stress entry
/// counts twice.
pub fn state_distance(a: &SimState, b: &SimState) -> f64 {
    let (ua, ub) = (a.velocity().0, b.velocity().0);
    (diff_sq(&a.rho, &b.rho)
        + diff_sq(&ua, &ub)
        + diff_sq(&a.eta, &b.eta)
        + diff_sq(&a.tau, &b.tau)
        + diff_sq(&a.tau.component(1), &b.tau.component(1)))
    .sqrt()
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs `cfg` once per knob value. Entries run in parallel; each run is
/// itself sequential, so results do not depend on the thread count.
pub fn sweep(cfg: &RunConfig, knob: Knob, values: &[f64]) -> Result<SweepReport> {
    cfg.validate()?;
    if values.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one value".into()));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParameter("sweep values must be positive".into()));
    }
    if values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "sweep values must decrease strictly toward 0".into(),
        ));
    }
    if knob == Knob::Delta && cfg.phys.l <= 0.0 {
        return Err(Error::InvalidParameter("delta sweep requires L > 0".into()));
    }
    let base = base_data(cfg)?.mollified(cfg.reg.theta);
    let eta0 = base.eta.integral();

    let run_one = |value: f64| -> Result<SweepEntry> {
        let (mut phys, mut reg) = (cfg.phys.clone(), cfg.reg.clone());
        match knob {
            Knob::Alpha => reg.alpha = value,
            Knob::Delta => phys.delta = value,
        }
        let wrap = |e: Error| Error::SweepEntry {
            knob: knob.to_string(),
            value,
            source: Box::new(e),
        };
        let initial = base.regularized(&phys, &reg);
        let eta_bound = (knob == Knob::Delta).then(|| {
            let sq = initial.eta.grid().integrate(|i, j| initial.eta.at(i, j).powi(2));
            (value * sq, value.sqrt() * eta0)
        });
        let r = simulate(&initial, &phys, &reg, &cfg.step, cfg.diag_every).map_err(wrap)?;
        let e = |k: usize| r.rows.get(k).map_or(f64::NAN, |row| row.energy.total);
        Ok(SweepEntry {
            value,
            energy_initial: e(0),
            energy_final: e(r.rows.len().saturating_sub(1)),
            energy_residual: r.energy_residual,
            stress: r.stress,
            final_state: r.outcome.state,
            eta_bound,
        })
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let results: Vec<Result<SweepEntry>> =
        pool.install(|| values.par_iter().map(|&v| run_one(v)).collect());
    let entries = results.into_iter().collect::<Result<Vec<_>>>()?;

    let diffs = entries
        .windows(2)
        .map(|w| SweepDiff {
            from: w[0].value,
            to: w[1].value,
            l2: state_distance(&w[0].final_state, &w[1].final_state),
            energy: (w[0].energy_final - w[1].energy_final).abs(),
        })
        .collect();
    Ok(SweepReport {
        knob,
        entries,
        diffs,
    })
}

//! Initial data and diagnosed runs.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use crate::config::{InitialSpec, RunConfig};
use crate::diagnostics::{
    diag_row, spd_monitor, DiagRow, EnergyBudget, StressL2Monitor, StressL2Summary,
};
use crate::error::{Error, Result};
use crate::grid::snapshot::{read_all, write_field};
use crate::grid::{
    mollify_initial, Bc, Grid2D, ScalarField2D, SymTensorField2D, VectorField2D,
};
use crate::integrate::{run, RunOutcome, StepConfig};
use crate::model::{equilibrium_state, PhysParams, RegParams, SimState};
use crate::symcalc::SymMat2;

/// Primitive initial fields before any regularization.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseData {
    pub rho: ScalarField2D,
    pub u: VectorField2D,
    pub eta: ScalarField2D,
    pub tau: SymTensorField2D,
}

impl BaseData {
    /// Mollifies every field with the positivity shift.
    pub fn mollified(&self, theta: f64) -> BaseData {
        BaseData {
            rho: mollify_initial(&self.rho, theta),
            u: mollify_initial(&self.u, theta),
            eta: mollify_initial(&self.eta, theta),
            tau: mollify_initial(&self.tau, theta),
        }
    }

    /// Applies the knob-dependent data regularization
    /// `T ↦ T + αI`, `η ↦ η / (1 + δ^{1/4} η^{1/2})`.
    pub fn regularized(&self, phys: &PhysParams, reg: &RegParams) -> SimState {
        let d4 = phys.delta.powf(0.25);
        let eta = self.eta.map(Bc::ScalarNeumann, |[e]| [e / (1.0 + d4 * e.max(0.0).sqrt())]);
        let tau = self.tau.map_sym(|p| p + SymMat2::scalar(reg.alpha));
        SimState::from_primitive(0.0, self.rho.clone(), &self.u, eta, tau)
    }
}

/// Unregularized fields of a named preset, or of a snapshot file.
pub fn base_data(cfg: &RunConfig) -> Result<BaseData> {
    let g = cfg.grid.build()?;
    let (lx, ly) = (g.lx(), g.ly());
    let (rb, eb, amp, k) = (cfg.rho_bar, cfg.eta_bar, cfg.amplitude, cfg.phys.k);
    let uniform = |g: Grid2D| BaseData {
        rho: ScalarField2D::constant(g, Bc::ScalarNeumann, [rb]),
        u: VectorField2D::zeros(g, Bc::VelocityDirichlet),
        eta: ScalarField2D::constant(g, Bc::ScalarNeumann, [eb]),
        tau: SymTensorField2D::uniform(g, SymMat2::scalar(k * eb)),
    };
    Ok(match &cfg.initial {
        InitialSpec::Equilibrium => uniform(g),
        InitialSpec::PerturbedEquilibrium => {
            let (cx, cy) = (|x: f64| (PI * x / lx).cos(), |y: f64| (PI * y / ly).cos());
            // u = A (∂ᵧψ, −∂ₓψ) with ψ = sin²(πx/lx) sin²(πy/ly)
            let u = VectorField2D::velocity(g, |x, y| {
                let (sx, sy) = ((PI * x / lx).sin(), (PI * y / ly).sin());
                let (s2x, s2y) = ((2.0 * PI * x / lx).sin(), (2.0 * PI * y / ly).sin());
                [amp * sx * sx * s2y * PI / ly, -amp * sy * sy * s2x * PI / lx]
            });
            BaseData {
                rho: ScalarField2D::scalar(g, |x, y| rb * (1.0 + amp * cx(x) * cy(y))),
                u,
                eta: ScalarField2D::scalar(g, |x, _| eb * (1.0 + amp * cx(x))),
                tau: SymTensorField2D::tensor(g, |x, y| {
                    (k * eb)
                        * SymMat2::new(1.0 + amp * cx(x), 0.5 * amp * cx(x) * cy(y), 1.0 + amp * cy(y))
                }),
            }
        }
        InitialSpec::ShearLayer => {
            let u = VectorField2D::velocity(g, |x, y| {
                let wall = (PI * y / ly).sin().powi(2);
                let ux = amp * ((y - 0.5 * ly) / (0.1 * ly)).tanh() * wall;
                let uy = 0.1 * amp * (2.0 * PI * x / lx).sin() * (PI * x / lx).sin() * wall;
                [ux, uy]
            });
            BaseData { u, ..uniform(g) }
        }
        InitialSpec::File(path) => {
            let file = std::fs::File::open(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            read_base(&mut std::io::BufReader::new(file))?
        }
    })
}

/// Regularized initial state of a configuration. The equilibrium preset is
/// used as is (it is already a discrete fixed point); `T0_override`
/// replaces the stress last.
pub fn initial_state(cfg: &RunConfig) -> Result<SimState> {
    let mut s = match cfg.initial {
        InitialSpec::Equilibrium => {
            equilibrium_state(cfg.grid.build()?, &cfg.phys, &cfg.reg, cfg.rho_bar, cfg.eta_bar)?
        }
        _ => base_data(cfg)?
            .mollified(cfg.reg.theta)
            .regularized(&cfg.phys, &cfg.reg),
    };
    if let Some(t) = cfg.t0_override {
        s.tau = SymTensorField2D::uniform(*s.grid(), t);
    }
    Ok(s)
}

/// Writes `rho`, `u`, `eta`, `T` records.
pub fn write_state(w: &mut impl Write, state: &SimState) -> Result<()> {
    write_field(w, "rho", &state.rho)?;
    write_field(w, "u", &state.velocity().0)?;
    write_field(w, "eta", &state.eta)?;
    write_field(w, "T", &state.tau)
}

/// Reads the four records written by [`write_state`] as base data.
pub fn read_base(r: &mut impl BufRead) -> Result<BaseData> {
    let mut recs = read_all(r)?;
    let mut take = |name: &str| {
        let k = recs
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::Snapshot(format!("missing record `{name}`")))?;
        Ok::<_, Error>(recs.swap_remove(k))
    };
    let base = BaseData {
        rho: take("rho")?.into_field(Bc::ScalarNeumann)?,
        u: take("u")?.into_field(Bc::VelocityDirichlet)?,
        eta: take("eta")?.into_field(Bc::ScalarNeumann)?,
        tau: take("T")?.into_field(Bc::TensorNeumann)?,
    };
    let g = base.rho.grid();
    if base.u.grid() != g || base.eta.grid() != g || base.tau.grid() != g {
        return Err(Error::Snapshot("records live on different grids".into()));
    }
    Ok(base)
}

/// Everything a diagnosed run produces.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub initial: SimState,
    pub outcome: RunOutcome,
    pub rows: Vec<DiagRow>,
    pub stress: StressL2Summary,
    /// Largest positive normalized energy-inequality residual.
    pub energy_residual: f64,
    /// Largest relative drifts of `∫ρ`, `∫η` over the observed times.
    pub mass_drift: f64,
    pub eta_drift: f64,
    /// Smallest eigenvalue of `T` and of its cutoff over the observed times.
    pub min_eig: f64,
    pub cut_min_eig: f64,
}

/// Runs with diagnostics every `every` steps. Energy evaluation needs SPD
/// stress when `α > 0`, so an indefinite state fails with its cell.
pub fn simulate(
    initial: &SimState,
    phys: &PhysParams,
    reg: &RegParams,
    step: &StepConfig,
    every: usize,
) -> Result<RunReport> {
    phys.validate()?;
    reg.validate()?;
    let mut budget = EnergyBudget::new();
    let mut monitor = StressL2Monitor::new(phys);
    let mut rows = Vec::new();
    let (m0, e0) = (initial.rho.integral(), initial.eta.integral());
    let (mut mass_drift, mut eta_drift) = (0.0f64, 0.0f64);
    let (mut min_eig, mut cut_min_eig) = (f64::INFINITY, f64::INFINITY);
    let mut observe = |s: &SimState| -> Result<()> {
        let spd = spd_monitor(&s.tau, reg.alpha, reg.sigma3);
        if reg.alpha > 0.0 && reg.sigma3 == 0.0 && spd.min_eig <= 0.0 {
            return Err(Error::NotSpd {
                cell: Some(spd.argmin),
                min_eig: spd.min_eig,
            });
        }
        min_eig = min_eig.min(spd.min_eig);
        cut_min_eig = cut_min_eig.min(spd.cut_min_eig);
        rows.push(diag_row(s, phys, reg, &mut budget)?);
        monitor.push(s.t, &s.tau);
        mass_drift = mass_drift.max(((s.rho.integral() - m0) / m0).abs());
        eta_drift = eta_drift.max(((s.eta.integral() - e0) / e0).abs());
        Ok(())
    };
    let outcome = if step.t_end > initial.t {
        run(initial, phys, reg, step, every, &mut observe)?
    } else {
        observe(initial).map_err(|e| e.at_time(initial.t))?;
        run(initial, phys, reg, step, every, |_| Ok(()))?
    };
    Ok(RunReport {
        initial: initial.clone(),
        outcome,
        rows,
        stress: monitor.summary(),
        energy_residual: budget.max_positive(),
        mass_drift,
        eta_drift,
        min_eig,
        cut_min_eig,
    })
}

/// [`simulate`] from a configuration's initial state.
pub fn simulate_config(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let initial = initial_state(cfg)?;
    simulate(&initial, &cfg.phys, &cfg.reg, &cfg.step, cfg.diag_every)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn equilibrium_run_has_zero_residual() {
        let cfg = parse_config("nx = 8\nny = 8\nt_end = 0.2").unwrap();
        let r = simulate_config(&cfg).unwrap();
        assert!(r.rows.len() > 2);
        for row in &r.rows {
            assert!(row.residual.abs() <= 1e-10);
        }
        assert!(r.mass_drift < 1e-14 && r.eta_drift < 1e-14);
    }

    #[test]
    fn indefinite_override_fails_at_start() {
        let cfg = parse_config("nx = 8\nny = 8\nT0_override = 1, 2, 1").unwrap();
        let err = simulate_config(&cfg).unwrap_err();
        match err {
            Error::AtTime { t, source } => {
                assert_eq!(t, 0.0);
                assert!(matches!(*source, Error::NotSpd { cell: Some(_), .. }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn presets_are_spd_and_mollified() {
        for init in ["perturbed-equilibrium", "shear-layer"] {
            let cfg = parse_config(&format!("nx = 16\nny = 16\ninitial = {init}")).unwrap();
            let s = initial_state(&cfg).unwrap();
            let spd = spd_monitor(&s.tau, cfg.reg.alpha, 0.0);
            assert!(spd.min_eig > cfg.reg.alpha);
            assert!(s.rho.min() > 0.0 && s.eta.min() > 0.0);
        }
    }

    #[test]
    fn snapshot_round_trip_as_initial_data() {
        let cfg = parse_config("nx = 8\nny = 8\ninitial = perturbed-equilibrium").unwrap();
        let s = initial_state(&cfg).unwrap();
        let mut buf = Vec::new();
        write_state(&mut buf, &s).unwrap();
        let base = read_base(&mut buf.as_slice()).unwrap();
        assert_eq!(base.rho, s.rho);
        assert_eq!(base.tau, s.tau);
        assert_eq!(base.u, s.velocity().0);
    }
}

//! Monitors for the quantities the a-priori analysis controls: energy
//! budget, conservation, stress positivity, the 2D stress bound,
//! renormalization, and discrete functional inequalities.

mod functional;
mod renorm;
mod stress;

pub use functional::{
    functional_ineq_checks, gagliardo_nirenberg, korn, log_laplacian_ineq, FittedConstant,
    FunctionalReport, LogLaplacianCheck,
};
pub use renorm::{renormalization_residual, Renormalizer, RenormSample};
pub use stress::{StressL2Monitor, StressL2Summary};

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{divergence, face_gradient_sq, gradient, SymTensorField2D};
use crate::model::{PhysParams, RegParams, SimState};
use crate::symcalc::{eig, g_cutoff_scalar, inv_chi, DIM};

const D: f64 = DIM as f64;

/// Energy `E(t)` split into its summands, plus the dissipation and source
/// rates that enter the energy inequality.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyReport {
    pub t: f64,
    pub kinetic: f64,
    pub pressure_pot: f64,
    pub artificial_pot: f64,
    pub polymer_entropy: f64,
    pub polymer_quad: f64,
    pub stress_trace: f64,
    pub total: f64,
    pub eta_diss: f64,
    pub newtonian_diss: f64,
    pub stress_relax: f64,
    pub inverse_term: f64,
    pub log_grad: f64,
    /// `σ₂∫p″-weighted |∇ρ|²`, present only at the density-diffusion level.
    pub density_diss: f64,
    pub force_work: f64,
    pub eta_source: f64,
    pub const_source: f64,
}

impl EnergyReport {
    pub fn dissipation(&self) -> f64 {
        self.eta_diss
            + self.newtonian_diss
            + self.stress_relax
            + self.inverse_term
            + self.log_grad
            + self.density_diss
    }

    pub fn sources(&self) -> f64 {
        self.force_work + self.eta_source + self.const_source
    }
}

/// `s log s`, extended by 0 at `s ≤ 0`.
fn xlogx(s: f64) -> f64 {
    if s > 0.0 {
        s * s.ln()
    } else {
        0.0
    }
}

/// Evaluates the energy and the budget rates of `state`.
///
/// With `α > 0` the stress part is `½tr(T − α log T) + α log α − α` per
/// unit area (the logarithm replaced by `G_{σ₃}` when the cutoff is active);
/// with `α = 0` it is `½ tr T`. The Newtonian dissipation is evaluated in
/// the discrete form the momentum operator actually dissipates.
pub fn energy(state: &SimState, phys: &PhysParams, reg: &RegParams) -> Result<EnergyReport> {
    let g = *state.grid();
    let area = g.area();
    let (u, _) = state.velocity();
    let alpha = reg.alpha;
    let s3 = reg.sigma3;
    let rate = phys.a0 / (4.0 * phys.lambda);

    let mut r = EnergyReport {
        t: state.t,
        ..EnergyReport::default()
    };

    let mut stress_trace = 0.0;
    let mut stress_relax = 0.0;
    let mut inverse = 0.0;
    for (i, j) in g.cells() {
        let p = state.tau.sym(i, j);
        let e = eig(&p);
        if alpha > 0.0 {
            let log_part = if s3 > 0.0 {
                g_cutoff_scalar(s3, e.lam1) + g_cutoff_scalar(s3, e.lam2)
            } else {
                if e.lam2 <= 0.0 {
                    return Err(Error::NotSpd {
                        cell: Some((i, j)),
                        min_eig: e.lam2,
                    });
                }
                e.lam1.ln() + e.lam2.ln()
            };
            stress_trace += 0.5 * (p.trace() - alpha * log_part);
            let eta = state.eta.at(i, j);
            let inv_tr = if s3 > 0.0 {
                inv_chi(s3, &p).trace()
            } else {
                1.0 / e.lam1 + 1.0 / e.lam2
            };
            inverse += (eta + alpha) * inv_tr;
        } else {
            stress_trace += 0.5 * p.trace();
        }
        let cut_tr = if s3 > 0.0 {
            e.lam1.max(s3) + e.lam2.max(s3)
        } else {
            p.trace()
        };
        stress_relax += cut_tr;
    }
    let ca = g.cell_area();
    r.stress_trace = stress_trace * ca
        + if alpha > 0.0 {
            area * (xlogx(alpha) - alpha)
        } else {
            0.0
        };
    r.stress_relax = rate * stress_relax * ca;
    r.inverse_term = alpha * phys.k * rate * inverse * ca;

    let gamma = phys.gamma;
    let big_gamma = reg.big_gamma;
    let grad_eta = gradient(&state.eta);
    let grad_rho = gradient(&state.rho);
    r.kinetic = g.integrate(|i, j| {
        let k = g.idx(i, j);
        let (m, v) = (state.m.data()[k], u.data()[k]);
        0.5 * (m[0] * v[0] + m[1] * v[1])
    });
    r.pressure_pot = phys.a / (gamma - 1.0) * g.integrate(|i, j| state.rho.at(i, j).max(0.0).powf(gamma));
    if reg.sigma1 > 0.0 {
        r.artificial_pot = reg.sigma1 / (big_gamma - 1.0)
            * g.integrate(|i, j| state.rho.at(i, j).max(0.0).powf(big_gamma));
    }
    r.polymer_entropy = phys.k * phys.l * g.integrate(|i, j| xlogx(state.eta.at(i, j)) + 1.0);
    r.polymer_quad = phys.delta * g.integrate(|i, j| state.eta.at(i, j).powi(2));
    r.total = r.kinetic
        + r.pressure_pot
        + r.artificial_pot
        + r.polymer_entropy
        + r.polymer_quad
        + r.stress_trace;

    r.eta_diss = phys.eps
        * g.integrate(|i, j| {
            let eta = state.eta.at(i, j);
            let w = if eta > 0.0 {
                phys.k * phys.l / eta + 2.0 * phys.delta
            } else {
                2.0 * phys.delta
            };
            let ge = grad_eta.get(i, j);
            w * (ge[0] * ge[0] + ge[1] * ge[1])
        });
    let div_u = divergence(&u);
    r.newtonian_diss = 0.5 * phys.mu_s * face_gradient_sq(&u)
        + phys.mu_b * g.integrate(|i, j| div_u.at(i, j).powi(2));
    if alpha > 0.0 {
        let trlog = crate::model::trace_log_field(&state.tau, reg)?;
        let gt = gradient(&trlog);
        r.log_grad = alpha * phys.eps / (2.0 * D)
            * g.integrate(|i, j| {
                let v = gt.get(i, j);
                v[0] * v[0] + v[1] * v[1]
            });
    }
    if reg.sigma2 > 0.0 {
        r.density_diss = reg.sigma2
            * g.integrate(|i, j| {
                let rho = state.rho.at(i, j).max(0.0);
                let mut w = phys.a * gamma * rho.powf(gamma - 2.0);
                if reg.sigma1 > 0.0 {
                    w += reg.sigma1 * big_gamma * rho.powf(big_gamma - 2.0);
                }
                let gr = grad_rho.get(i, j);
                w * (gr[0] * gr[0] + gr[1] * gr[1])
            });
    }

    r.force_work = g.integrate(|i, j| {
        let m = state.m.get(i, j);
        m[0] * phys.force[0] + m[1] * phys.force[1]
    });
    r.eta_source = phys.k * rate * D * g.integrate(|i, j| state.eta.at(i, j) + alpha);
    r.const_source = alpha * D * rate * area;
    Ok(r)
}

/// Running energy budget with trapezoidal time integration of the rates.
#[derive(Debug, Clone, Default)]
pub struct EnergyBudget {
    reports: Vec<EnergyReport>,
    /// Signed residual `E(t) − E₀ + ∫(D − S)`, normalized by `E₀ + 1`.
    signed: Vec<f64>,
    net_integral: f64,
}

impl EnergyBudget {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: EnergyReport) -> f64 {
        if let Some(prev) = self.reports.last() {
            let dt = r.t - prev.t;
            let net = |e: &EnergyReport| e.dissipation() - e.sources();
            self.net_integral += 0.5 * dt * (net(prev) + net(&r));
        }
        let e0 = self.reports.first().map_or(r.total, |f| f.total);
        let res = (r.total - e0 + self.net_integral) / (e0 + 1.0);
        self.reports.push(r);
        self.signed.push(res);
        res
    }

    pub fn reports(&self) -> &[EnergyReport] {
        &self.reports
    }

    pub fn signed_residuals(&self) -> &[f64] {
        &self.signed
    }

    /// `max_n max(residual_n, 0)`; negative values are extra dissipation.
    pub fn max_positive(&self) -> f64 {
        self.signed.iter().fold(0.0, |m, &r| m.max(r))
    }
}

/// Max positive normalized energy-inequality residual over a report series.
pub fn energy_inequality_residual(reports: &[EnergyReport]) -> f64 {
    let mut b = EnergyBudget::new();
    for r in reports {
        b.push(*r);
    }
    b.max_positive()
}

/// Relative drifts of `∫ρ` and `∫η` against the initial state.
pub fn conservation(state: &SimState, initial: &SimState) -> (f64, f64) {
    let rel = |now: f64, then: f64| {
        if then == 0.0 {
            now.abs()
        } else {
            ((now - then) / then).abs()
        }
    };
    (
        rel(state.rho.integral(), initial.rho.integral()),
        rel(state.eta.integral(), initial.eta.integral()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdReport {
    pub min_eig: f64,
    pub argmin: (usize, usize),
    /// Smallest eigenvalue of `χ_{σ₃}(T)`; equals `min_eig` without cutoff.
    pub cut_min_eig: f64,
    pub trace_min: f64,
    pub trace_max: f64,
    pub trace_mean: f64,
    /// `∫ tr(T⁻¹)`, only when `T` is SPD everywhere.
    pub inv_trace: Option<f64>,
    /// `∫ tr(T − α log T)`, only when `T` is SPD everywhere.
    pub rel_entropy: Option<f64>,
    /// `∫ tr(χ_{σ₃}(T)⁻¹)`, only when a cutoff is given.
    pub cut_inv_trace: Option<f64>,
}

pub fn spd_monitor(tau: &SymTensorField2D, alpha: f64, sigma3: f64) -> SpdReport {
    let g = *tau.grid();
    let mut rep = SpdReport {
        min_eig: f64::INFINITY,
        argmin: (0, 0),
        cut_min_eig: f64::INFINITY,
        trace_min: f64::INFINITY,
        trace_max: f64::NEG_INFINITY,
        trace_mean: 0.0,
        inv_trace: None,
        rel_entropy: None,
        cut_inv_trace: None,
    };
    let (mut inv, mut ent, mut cut_inv, mut tr_sum) = (0.0, 0.0, 0.0, 0.0);
    for (i, j) in g.cells() {
        let p = tau.sym(i, j);
        let e = eig(&p);
        if e.lam2 < rep.min_eig {
            rep.min_eig = e.lam2;
            rep.argmin = (i, j);
        }
        let tr = p.trace();
        tr_sum += tr;
        rep.trace_min = rep.trace_min.min(tr);
        rep.trace_max = rep.trace_max.max(tr);
        if e.lam2 > 0.0 {
            inv += 1.0 / e.lam1 + 1.0 / e.lam2;
            ent += tr - alpha * (e.lam1.ln() + e.lam2.ln());
        }
        if sigma3 > 0.0 {
            rep.cut_min_eig = rep.cut_min_eig.min(e.lam2.max(sigma3));
            cut_inv += 1.0 / e.lam1.max(sigma3) + 1.0 / e.lam2.max(sigma3);
        }
    }
    if sigma3 <= 0.0 {
        rep.cut_min_eig = rep.min_eig;
    } else {
        rep.cut_inv_trace = Some(cut_inv * g.cell_area());
    }
    rep.trace_mean = tr_sum / g.len() as f64;
    if rep.min_eig > 0.0 {
        rep.inv_trace = Some(inv * g.cell_area());
        rep.rel_entropy = Some(ent * g.cell_area());
    }
    rep
}

/// One line of the time-series output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagRow {
    pub energy: EnergyReport,
    pub mass: f64,
    pub eta_mass: f64,
    pub residual: f64,
    pub min_eig: f64,
    pub sup_t: f64,
    pub l2_t: f64,
}

pub const CSV_HEADER: &str = "t,mass,eta_mass,E_total,kinetic,pressure_pot,artificial_pot,\
polymer_entropy,polymer_quad,stress_trace,eta_diss,newtonian_diss,stress_relax,inverse_term,\
log_grad,density_diss,force_work,eta_source,const_source,residual,min_eig,sup_T,l2_T";

impl DiagRow {
    pub fn values(&self) -> [f64; 23] {
        let e = &self.energy;
        [
            e.t,
            self.mass,
            self.eta_mass,
            e.total,
            e.kinetic,
            e.pressure_pot,
            e.artificial_pot,
            e.polymer_entropy,
            e.polymer_quad,
            e.stress_trace,
            e.eta_diss,
            e.newtonian_diss,
            e.stress_relax,
            e.inverse_term,
            e.log_grad,
            e.density_diss,
            e.force_work,
            e.eta_source,
            e.const_source,
            self.residual,
            self.min_eig,
            self.sup_t,
            self.l2_t,
        ]
    }
}

/// Formats a value with 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(w: &mut impl Write, rows: &[DiagRow]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        let line: Vec<String> = r.values().iter().map(|&v| fmt_num(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Builds the full diagnostic row of `state`, feeding `budget`.
pub fn diag_row(
    state: &SimState,
    phys: &PhysParams,
    reg: &RegParams,
    budget: &mut EnergyBudget,
) -> Result<DiagRow> {
    let energy = energy(state, phys, reg)?;
    let residual = budget.push(energy);
    let spd = spd_monitor(&state.tau, reg.alpha, reg.sigma3);
    let sup_t = (0..state.grid().len())
        .map(|k| state.tau.sym_at(k).norm())
        .fold(0.0, f64::max);
    Ok(DiagRow {
        energy,
        mass: state.rho.integral(),
        eta_mass: state.eta.integral(),
        residual,
        min_eig: spd.min_eig,
        sup_t,
        l2_t: stress::l2_sq(&state.tau),
    })
}

//! Kinetic oracle for the macroscopic stress equation.
//!
//! Solves the spatially homogeneous Hookean-dumbbell Fokker–Planck equation
//!
//! ```text
//! ∂ₜψ + div_q(κ q ψ) = D div_q(∇ψ + ψ q),   D = A₀ / 4λ,
//! ```
//!
//! on a truncated square `[−Q, Q]²` with zero-flux walls, and compares the
//! Kramers stress `k∫ψ q qᵀ dq` against the moment ODE
//! `Ṫ = κT + Tκᵀ + (kA₀/2λ)(η + α)I − (A₀/2λ)T`.

use std::f64::consts::PI;
use std::io::Write;

use crate::diagnostics::fmt_num;
use crate::error::{Error, Result};
use crate::model::PhysParams;
use crate::symcalc::{eig, Mat2, SymMat2};

/// Boundary-ring mass fraction above which the truncation is rejected.
pub const TRUNCATION_LIMIT: f64 = 1e-6;

/// Constant velocity gradient `κ = ∇u`.
pub type GradU2 = Mat2;

/// Normalized Hookean equilibrium `e^{−|q|²/2} / 2π`.
pub fn maxwellian(q: [f64; 2]) -> f64 {
    (-(q[0] * q[0] + q[1] * q[1]) / 2.0).exp() / (2.0 * PI)
}

/// Cell-centred samples of `ψ` on `[−Q, Q]²`, `x` index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticDistribution {
    pub nq: usize,
    pub qmax: f64,
    pub psi: Vec<f64>,
}

impl KineticDistribution {
    pub fn dq(&self) -> f64 {
        2.0 * self.qmax / self.nq as f64
    }

    pub fn q(&self, i: usize) -> f64 {
        -self.qmax + (i as f64 + 0.5) * self.dq()
    }

    pub fn from_fn(nq: usize, qmax: f64, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        if nq < 4 || !(qmax > 0.0 && qmax.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kinetic grid needs nq ≥ 4 and Q > 0, got nq = {nq}, Q = {qmax}"
            )));
        }
        let mut d = KineticDistribution {
            nq,
            qmax,
            psi: vec![0.0; nq * nq],
        };
        for j in 0..nq {
            for i in 0..nq {
                d.psi[j * nq + i] = f([d.q(i), d.q(j)]);
            }
        }
        Ok(d)
    }

    /// Fraction of mass in the outermost ring of cells.
    pub fn boundary_fraction(&self) -> f64 {
        let n = self.nq;
        let mut ring = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i == 0 || j == 0 || i + 1 == n || j + 1 == n {
                    ring += self.psi[j * n + i];
                }
            }
        }
        let total: f64 = self.psi.iter().sum();
        if total > 0.0 {
            ring / total
        } else {
            0.0
        }
    }

    /// `max ψ on the outer ring / max ψ`.
    pub fn boundary_peak_ratio(&self) -> f64 {
        let n = self.nq;
        let mut ring: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i == 0 || j == 0 || i + 1 == n || j + 1 == n {
                    ring = ring.max(self.psi[j * n + i]);
                }
            }
        }
        let peak = self.psi.iter().copied().fold(0.0, f64::max);
        if peak > 0.0 {
            ring / peak
        } else {
            0.0
        }
    }
}

/// `η̄ M` sampled on the grid.
pub fn equilibrium_distribution(nq: usize, qmax: f64, eta_bar: f64) -> Result<KineticDistribution> {
    KineticDistribution::from_fn(nq, qmax, |q| eta_bar * maxwellian(q))
}

/// `∫ψ dq` by the midpoint rule.
pub fn number_density(d: &KineticDistribution) -> f64 {
    d.psi.iter().sum::<f64>() * d.dq() * d.dq()
}

/// `k ∫ψ q qᵀ dq` by the midpoint rule.
pub fn kramers_stress(d: &KineticDistribution, k: f64) -> SymMat2 {
    let n = d.nq;
    let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
    for j in 0..n {
        let qy = d.q(j);
        for i in 0..n {
            let qx = d.q(i);
            let p = d.psi[j * n + i];
            xx += p * qx * qx;
            xy += p * qx * qy;
            yy += p * qy * qy;
        }
    }
    let w = k * d.dq() * d.dq();
    SymMat2::new(w * xx, w * xy, w * yy)
}

/// Precomputed face coefficients of the discrete operator.
struct FpOperator {
    nq: usize,
    dq: f64,
    /// Per face: flux = `a ψ_left − b ψ_right`, for x-faces then y-faces.
    a: Vec<f64>,
    b: Vec<f64>,
}

impl FpOperator {
    fn new(nq: usize, qmax: f64, kappa: &GradU2, diff: f64) -> Self {
        let dq = 2.0 * qmax / nq as f64;
        let q = |i: usize| -qmax + (i as f64 + 0.5) * dq;
        let faces = 2 * nq * (nq - 1);
        let (mut a, mut b) = (Vec::with_capacity(faces), Vec::with_capacity(faces));
        let k = kappa.0;
        let mut push = |v: f64, qn_face: f64| {
            // diffusion in M-form: −D √(M_L M_R) (ψ_R/M_R − ψ_L/M_L) / Δq
            let e = (qn_face * dq / 2.0).exp();
            let (dl, dr) = (diff / (dq * e), diff * e / dq);
            let centred = v.abs() * dq <= 2.0 * diff / e.max(1.0 / e);
            let (vl, vr) = if centred {
                (0.5 * v, 0.5 * v)
            } else if v > 0.0 {
                (v, 0.0)
            } else {
                (0.0, v)
            };
            a.push(dl + vl);
            b.push(dr - vr);
        };
        for j in 0..nq {
            for i in 0..nq - 1 {
                let (qx, qy) = (q(i) + 0.5 * dq, q(j));
                push(k[0][0] * qx + k[0][1] * qy, qx);
            }
        }
        for j in 0..nq - 1 {
            for i in 0..nq {
                let (qx, qy) = (q(i), q(j) + 0.5 * dq);
                push(k[1][0] * qx + k[1][1] * qy, qy);
            }
        }
        FpOperator { nq, dq, a, b }
    }

    fn apply(&self, psi: &[f64], out: &mut [f64]) {
        let n = self.nq;
        out.iter_mut().for_each(|v| *v = 0.0);
        let r = 1.0 / self.dq;
        let mut f = 0;
        for j in 0..n {
            for i in 0..n - 1 {
                let (l, rr) = (j * n + i, j * n + i + 1);
                let flux = (self.a[f] * psi[l] - self.b[f] * psi[rr]) * r;
                out[l] -= flux;
                out[rr] += flux;
                f += 1;
            }
        }
        for j in 0..n - 1 {
            for i in 0..n {
                let (l, rr) = (j * n + i, (j + 1) * n + i);
                let flux = (self.a[f] * psi[l] - self.b[f] * psi[rr]) * r;
                out[l] -= flux;
                out[rr] += flux;
                f += 1;
            }
        }
    }

    /// Largest outflow rate of any cell; forward Euler keeps `ψ ≥ 0` for
    /// `dt` not above its reciprocal.
    fn max_outflow(&self) -> f64 {
        let n = self.nq;
        let mut out = vec![0.0; n * n];
        let r = 1.0 / self.dq;
        let mut f = 0;
        for j in 0..n {
            for i in 0..n - 1 {
                out[j * n + i] += self.a[f] * r;
                out[j * n + i + 1] += self.b[f] * r;
                f += 1;
            }
        }
        for j in 0..n - 1 {
            for i in 0..n {
                out[j * n + i] += self.a[f] * r;
                out[(j + 1) * n + i] += self.b[f] * r;
                f += 1;
            }
        }
        out.into_iter().fold(0.0, f64::max)
    }
}

fn diffusivity(phys: &PhysParams) -> f64 {
    phys.a0 / (4.0 * phys.lambda)
}

/// Largest step for which [`fp_step`] keeps `ψ ≥ 0`.
pub fn fp_stable_dt(nq: usize, qmax: f64, kappa: &GradU2, phys: &PhysParams) -> f64 {
    1.0 / FpOperator::new(nq, qmax, kappa, diffusivity(phys)).max_outflow()
}

fn rk2(op: &FpOperator, psi: &[f64], dt: f64, scratch: &mut [f64]) -> Vec<f64> {
    op.apply(psi, scratch);
    let s1: Vec<f64> = psi.iter().zip(scratch.iter()).map(|(p, r)| p + dt * r).collect();
    op.apply(&s1, scratch);
    psi.iter()
        .zip(&s1)
        .zip(scratch.iter())
        .map(|((p, s), r)| 0.5 * p + 0.5 * (s + dt * r))
        .collect()
}

/// One SSP-RK2 step of the finite-volume scheme. Drift is centred where
/// the cell Péclet number keeps the update monotone, upwind elsewhere.
pub fn fp_step(
    psi: &KineticDistribution,
    kappa: &GradU2,
    phys: &PhysParams,
    dt: f64,
) -> Result<KineticDistribution> {
    let op = FpOperator::new(psi.nq, psi.qmax, kappa, diffusivity(phys));
    let limit = 1.0 / op.max_outflow();
    if !(dt > 0.0 && dt <= limit) {
        return Err(Error::InvalidParameter(format!(
            "kinetic step {dt:e} outside (0, {limit:e}]"
        )));
    }
    let mut scratch = vec![0.0; psi.psi.len()];
    let next = rk2(&op, &psi.psi, dt, &mut scratch);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Blowup {
            t: f64::NAN,
            what: "kinetic density became non-finite".into(),
        });
    }
    Ok(KineticDistribution {
        psi: next,
        ..psi.clone()
    })
}

fn moment_rate(t: &SymMat2, eta: f64, kappa: &GradU2, phys: &PhysParams, alpha: f64) -> SymMat2 {
    let r = phys.relax_rate();
    kappa.stretch(t) + SymMat2::scalar(phys.k * r * (eta + alpha)) - r * *t
}

/// Classical RK4 step of the homogeneous stress ODE.
pub fn macro_moment_step(
    t: &SymMat2,
    eta: f64,
    kappa: &GradU2,
    phys: &PhysParams,
    dt: f64,
    alpha: f64,
) -> SymMat2 {
    let f = |p: &SymMat2| moment_rate(p, eta, kappa, phys, alpha);
    let k1 = f(t);
    let k2 = f(&(*t + (0.5 * dt) * k1));
    let k3 = f(&(*t + (0.5 * dt) * k2));
    let k4 = f(&(*t + dt * k3));
    *t + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Steady state of the stress ODE: solves `κT + Tκᵀ − rT = −r k (η+α) I`.
pub fn macro_steady_state(eta: f64, kappa: &GradU2, phys: &PhysParams, alpha: f64) -> Result<SymMat2> {
    let r = phys.relax_rate();
    let k = kappa.0;
    // unknowns (xx, xy, yy)
    let m = [
        [2.0 * k[0][0] - r, 2.0 * k[0][1], 0.0],
        [k[1][0], k[0][0] + k[1][1] - r, k[0][1]],
        [0.0, 2.0 * k[1][0], 2.0 * k[1][1] - r],
    ];
    let s = -r * phys.k * (eta + alpha);
    let rhs = [s, 0.0, s];
    let det3 = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(&m);
    if d.abs() < 1e-300 {
        return Err(Error::Domain("stress ODE has no unique steady state".into()));
    }
    let mut x = [0.0; 3];
    for (c, xc) in x.iter_mut().enumerate() {
        let mut mc = m;
        for row in 0..3 {
            mc[row][c] = rhs[row];
        }
        *xc = det3(&mc) / d;
    }
    Ok(SymMat2::new(x[0], x[1], x[2]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticGridSpec {
    pub nq: usize,
    pub qmax: f64,
}

impl Default for KineticGridSpec {
    fn default() -> Self {
        KineticGridSpec { nq: 128, qmax: 8.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureRow {
    pub t: f64,
    pub kinetic: SymMat2,
    pub macro_: SymMat2,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosureReport {
    pub rows: Vec<ClosureRow>,
    /// `max_t ‖T_kin − T_macro‖_F / (k η̄)`.
    pub max_rel_error: f64,
    pub mass_drift: f64,
    pub max_boundary_fraction: f64,
    pub min_psi: f64,
    pub steps: usize,
}

pub const CLOSURE_CSV_HEADER: &str = "t,Tkin_xx,Tkin_xy,Tkin_yy,Tmac_xx,Tmac_xy,Tmac_yy,error";

pub fn write_closure_csv(w: &mut impl Write, rows: &[ClosureRow]) -> Result<()> {
    writeln!(w, "{CLOSURE_CSV_HEADER}")?;
    for r in rows {
        let v = [
            r.t,
            r.kinetic.xx,
            r.kinetic.xy,
            r.kinetic.yy,
            r.macro_.xx,
            r.macro_.xy,
            r.macro_.yy,
            r.error,
        ];
        let cells: Vec<String> = v.iter().map(|&x| fmt_num(x)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Rejects set-ups whose macro covariance would reach the truncation walls:
/// six standard deviations along the widest principal axis must fit in `Q`.
pub fn validate_truncation(
    kappa: &GradU2,
    phys: &PhysParams,
    t_end: f64,
    qmax: f64,
) -> Result<f64> {
    let mut t = SymMat2::IDENTITY;
    let unit = PhysParams { k: 1.0, ..phys.clone() };
    let n = 2000;
    let dt = t_end / n as f64;
    let mut widest = 1.0f64;
    for _ in 0..n {
        t = macro_moment_step(&t, 1.0, kappa, &unit, dt, 0.0);
        widest = widest.max(eig(&t).lam1);
    }
    let reach = 6.0 * widest.sqrt();
    if reach > qmax {
        return Err(Error::InvalidParameter(format!(
            "Q = {qmax} too small: estimated six-sigma extent {reach:.3}"
        )));
    }
    Ok(reach)
}

/// Runs the kinetic and macroscopic sides from matched data `ψ₀ = η̄M`,
/// `T₀ = k∫ψ₀qqᵀ`, sampling both every `sample_dt` (and at `t_end`).
pub fn closure_compare(
    kappa: &GradU2,
    eta_bar: f64,
    phys: &PhysParams,
    t_end: f64,
    grid: KineticGridSpec,
    sample_dt: f64,
) -> Result<ClosureReport> {
    validate_truncation(kappa, phys, t_end, grid.qmax)?;
    let mut psi = equilibrium_distribution(grid.nq, grid.qmax, eta_bar)?;
    let eta0 = number_density(&psi);
    let mut t_mac = kramers_stress(&psi, phys.k);

    let op = FpOperator::new(grid.nq, grid.qmax, kappa, diffusivity(phys));
    let dt_max = 0.9 / op.max_outflow();
    let nsteps = ((t_end / dt_max).ceil() as usize).max(1);
    let dt = t_end / nsteps as f64;
    let every = ((sample_dt / dt).round() as usize).max(1);
    let scale = phys.k * eta_bar;

    let mut rows = Vec::new();
    let mut report = ClosureReport {
        rows: Vec::new(),
        max_rel_error: 0.0,
        mass_drift: 0.0,
        max_boundary_fraction: psi.boundary_fraction(),
        min_psi: psi.psi.iter().copied().fold(f64::INFINITY, f64::min),
        steps: nsteps,
    };
    let mut record = |t: f64, psi: &KineticDistribution, mac: SymMat2, rep: &mut ClosureReport| {
        let kin = kramers_stress(psi, phys.k);
        let error = (kin - mac).norm() / scale;
        rep.max_rel_error = rep.max_rel_error.max(error);
        rows.push(ClosureRow {
            t,
            kinetic: kin,
            macro_: mac,
            error,
        });
    };
    record(0.0, &psi, t_mac, &mut report);
    let mut scratch = vec![0.0; psi.psi.len()];
    for n in 1..=nsteps {
        psi.psi = rk2(&op, &psi.psi, dt, &mut scratch);
        t_mac = macro_moment_step(&t_mac, eta0, kappa, phys, dt, 0.0);
        let t = n as f64 * dt;
        if n % every == 0 || n == nsteps {
            let frac = psi.boundary_fraction();
            report.max_boundary_fraction = report.max_boundary_fraction.max(frac);
            if frac > TRUNCATION_LIMIT {
                return Err(Error::TruncationBreach {
                    fraction: frac,
                    limit: TRUNCATION_LIMIT,
                });
            }
            if psi.psi.iter().any(|v| !v.is_finite()) {
                return Err(Error::Blowup {
                    t,
                    what: "kinetic density became non-finite".into(),
                });
            }
            record(t, &psi, t_mac, &mut report);
        }
    }
    report.mass_drift = ((number_density(&psi) - eta0) / eta0).abs();
    report.min_psi = psi.psi.iter().copied().fold(f64::INFINITY, f64::min);
    report.rows = rows;
    Ok(report)
}

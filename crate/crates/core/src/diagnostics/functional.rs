use crate::error::{Error, Result};
use crate::grid::{gradient, laplacian, velocity_gradient, Field, SymTensorField2D, VectorField2D};
use crate::model::{RegParams, SimState};
use crate::symcalc::{inv_chi, tr_log, tr_log_chi, SymMat2};

/// Both sides of `lhs ≤ C · rhs` and the smallest `C` that makes it hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedConstant {
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
}

impl FittedConstant {
    fn new(lhs: f64, rhs: f64) -> Self {
        let constant = if rhs > 0.0 { lhs / rhs } else { 0.0 };
        FittedConstant { lhs, rhs, constant }
    }
}

/// `‖∇u‖ ≤ C ‖sym ∇u − ½ div u I‖` on the centred velocity gradient.
pub fn korn(u: &VectorField2D) -> FittedConstant {
    let g = *u.grid();
    let grads = velocity_gradient(u);
    let (mut full, mut dev) = (0.0, 0.0);
    for gu in &grads {
        full += gu.norm_sq();
        let s = gu.sym();
        dev += (s - SymMat2::scalar(0.5 * gu.trace())).norm_sq();
    }
    let ca = g.cell_area();
    FittedConstant::new((full * ca).sqrt(), (dev * ca).sqrt())
}

/// `‖v‖_{L⁴} ≤ C ‖v‖_{L²}^{1/2} ‖v‖_{W^{1,2}}^{1/2}` (two dimensions).
pub fn gagliardo_nirenberg<const N: usize>(v: &Field<N>) -> FittedConstant {
    let g = *v.grid();
    let ca = g.cell_area();
    let (mut l2, mut l4) = (0.0, 0.0);
    for c in v.data() {
        let s: f64 = c.iter().map(|x| x * x).sum();
        l2 += s;
        l4 += s * s;
    }
    let mut grad = 0.0;
    for k in 0..N {
        let gk = gradient(&v.component(k));
        grad += gk.data().iter().map(|w| w[0] * w[0] + w[1] * w[1]).sum::<f64>();
    }
    let (l2, l4, grad) = (l2 * ca, l4 * ca, grad * ca);
    let rhs = l2.sqrt().sqrt() * (l2 + grad).sqrt().sqrt();
    FittedConstant::new(l4.sqrt().sqrt(), rhs)
}

/// Discrete form of the log-Laplacian inequality
/// `½∫|∇ tr log P|² ≤ −∫∇P :: ∇F(P)`, where `F(P) = P⁻¹` uncut or
/// `χ_{σ₃}(P)⁻¹` with cutoff. Both sides are sums over interior faces, so
/// the inequality holds face by face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLaplacianCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    /// `∫ Δ_h P : F(P)`, equal to `rhs` by summation by parts.
    pub rhs_via_laplacian: f64,
}

pub fn log_laplacian_ineq(tau: &SymTensorField2D, sigma3: Option<f64>) -> Result<LogLaplacianCheck> {
    let g = *tau.grid();
    let n = g.len();
    let mut trlog = Vec::with_capacity(n);
    let mut f = Vec::with_capacity(n);
    for (i, j) in g.cells() {
        let p = tau.sym(i, j);
        match sigma3 {
            Some(s3) => {
                trlog.push(tr_log_chi(s3, &p));
                f.push(inv_chi(s3, &p));
            }
            None => {
                let not_spd = |_| Error::NotSpd {
                    cell: Some((i, j)),
                    min_eig: p.min_eig(),
                };
                trlog.push(tr_log(&p).map_err(not_spd)?);
                f.push(p.inverse().map_err(not_spd)?);
            }
        }
    }
    let (mut lhs, mut rhs) = (0.0, 0.0);
    let mut face = |a: usize, b: usize, w: f64| {
        let dl = trlog[b] - trlog[a];
        let dp = tau.sym_at(b) - tau.sym_at(a);
        lhs += 0.5 * dl * dl * w;
        rhs -= dp.ddot(&(f[b] - f[a])) * w;
    };
    let (wx, wy) = (1.0 / (g.hx * g.hx), 1.0 / (g.hy * g.hy));
    for (i, j) in g.cells() {
        if i + 1 < g.nx {
            face(g.idx(i, j), g.idx(i + 1, j), wx);
        }
        if j + 1 < g.ny {
            face(g.idx(i, j), g.idx(i, j + 1), wy);
        }
    }
    let ca = g.cell_area();
    let (lhs, rhs) = (lhs * ca, rhs * ca);
    let lap = laplacian(tau)?;
    let via = (0..n).map(|k| lap.sym_at(k).ddot(&f[k])).sum::<f64>() * ca;
    Ok(LogLaplacianCheck {
        lhs,
        rhs,
        margin: rhs - lhs,
        rhs_via_laplacian: via,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalReport {
    pub korn: FittedConstant,
    pub gn_velocity: FittedConstant,
    pub gn_stress: FittedConstant,
    pub log_laplacian: LogLaplacianCheck,
    /// Present when the cutoff is active.
    pub log_laplacian_cut: Option<LogLaplacianCheck>,
}

/// Evaluates every functional inequality on one state. The uncut
/// log-Laplacian check requires `T` to be SPD.
pub fn functional_ineq_checks(state: &SimState, reg: &RegParams) -> Result<FunctionalReport> {
    let (u, _) = state.velocity();
    Ok(FunctionalReport {
        korn: korn(&u),
        gn_velocity: gagliardo_nirenberg(&u),
        gn_stress: gagliardo_nirenberg(&state.tau),
        log_laplacian: log_laplacian_ineq(&state.tau, None)?,
        log_laplacian_cut: if reg.sigma3 > 0.0 {
            Some(log_laplacian_ineq(&state.tau, Some(reg.sigma3))?)
        } else {
            None
        },
    })
}

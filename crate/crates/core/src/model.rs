//! Semi-discrete right-hand sides of the regularized compressible
//! Oldroyd-B system in conservative variables `(ρ, m = ρu, η, T)`.
//!
//! The regularization knobs are additive: with `α = σ₁ = σ₂ = σ₃ = 0` the
//! assembly reduces to the base model term for term.

use crate::error::{Error, Result};
use crate::grid::{
    advect, divergence, gradient, laplacian, tensor_divergence, velocity_gradient, Bc, Grid2D,
    ScalarField2D, SymTensorField2D, VectorField2D,
};
use crate::symcalc::{chi_cutoff, tr_log, tr_log_chi, Mat2, SymMat2};

/// Density floor used when recovering `u = m / ρ`.
pub const RHO_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PhysParams {
    pub a: f64,
    pub gamma: f64,
    pub mu_s: f64,
    pub mu_b: f64,
    pub eps: f64,
    pub k: f64,
    pub l: f64,
    pub delta: f64,
    pub lambda: f64,
    pub a0: f64,
    /// Uniform body force.
    pub force: [f64; 2],
}

impl Default for PhysParams {
    fn default() -> Self {
        PhysParams {
            a: 1.0,
            gamma: 1.4,
            mu_s: 0.05,
            mu_b: 0.01,
            eps: 0.01,
            k: 1.0,
            l: 1.0,
            delta: 0.1,
            lambda: 1.0,
            a0: 1.0,
            force: [0.0, 0.0],
        }
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        require(self.a > 0.0, || format!("a must be > 0, got {}", self.a))?;
        require(self.gamma > 1.0, || {
            format!("gamma must be > 1, got {}", self.gamma)
        })?;
        require(self.mu_s > 0.0, || format!("muS must be > 0, got {}", self.mu_s))?;
        require(self.mu_b >= 0.0, || format!("muB must be ≥ 0, got {}", self.mu_b))?;
        require(self.eps > 0.0, || format!("eps must be > 0, got {}", self.eps))?;
        require(self.k > 0.0, || format!("k must be > 0, got {}", self.k))?;
        require(self.l >= 0.0, || format!("L must be ≥ 0, got {}", self.l))?;
        require(self.delta >= 0.0, || {
            format!("delta must be ≥ 0, got {}", self.delta)
        })?;
        require(self.delta + self.l != 0.0, || {
            "delta and L must not both vanish".to_string()
        })?;
        require(self.lambda > 0.0, || {
            format!("lambda must be > 0, got {}", self.lambda)
        })?;
        require(self.a0 > 0.0, || format!("A0 must be > 0, got {}", self.a0))?;
        require(self.force.iter().all(|f| f.is_finite()), || {
            "body force must be finite".to_string()
        })?;
        let all_finite = [
            self.a, self.gamma, self.mu_s, self.mu_b, self.eps, self.k, self.l, self.delta,
            self.lambda, self.a0,
        ]
        .iter()
        .all(|v| v.is_finite());
        require(all_finite, || "physical parameters must be finite".to_string())
    }

    /// Relaxation rate `A₀ / 2λ` of the stress equation.
    pub fn relax_rate(&self) -> f64 {
        self.a0 / (2.0 * self.lambda)
    }

    /// Polymer pressure `kLη + δη²`.
    pub fn polymer_pressure(&self, eta: f64) -> f64 {
        self.k * self.l * eta + self.delta * eta * eta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegParams {
    pub alpha: f64,
    pub sigma1: f64,
    pub big_gamma: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    pub theta: f64,
}

impl Default for RegParams {
    fn default() -> Self {
        RegParams {
            alpha: 0.1,
            sigma1: 0.0,
            big_gamma: 4.0,
            sigma2: 0.0,
            sigma3: 0.0,
            theta: 0.01,
        }
    }
}

impl RegParams {
    /// All knobs off except the mollification radius.
    pub fn base(theta: f64) -> Self {
        RegParams {
            alpha: 0.0,
            sigma1: 0.0,
            big_gamma: 4.0,
            sigma2: 0.0,
            sigma3: 0.0,
            theta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require(self.alpha >= 0.0 && self.alpha.is_finite(), || {
            format!("alpha must be ≥ 0, got {}", self.alpha)
        })?;
        require(self.sigma1 >= 0.0 && self.sigma1.is_finite(), || {
            format!("sigma1 must be ≥ 0, got {}", self.sigma1)
        })?;
        require(self.sigma1 == 0.0 || self.big_gamma >= 4.0, || {
            format!("Gamma must be ≥ 4 when sigma1 > 0, got {}", self.big_gamma)
        })?;
        require(self.big_gamma > 1.0 && self.big_gamma.is_finite(), || {
            format!("Gamma must be > 1, got {}", self.big_gamma)
        })?;
        require(self.sigma2 >= 0.0 && self.sigma2.is_finite(), || {
            format!("sigma2 must be ≥ 0, got {}", self.sigma2)
        })?;
        require(self.sigma3 >= 0.0 && self.sigma3.is_finite(), || {
            format!("sigma3 must be ≥ 0, got {}", self.sigma3)
        })?;
        require(self.theta > 0.0 && self.theta.is_finite(), || {
            format!("theta must be > 0, got {}", self.theta)
        })?;
        require(
            self.sigma3 == 0.0 || self.sigma3 < self.alpha.min(self.theta),
            || {
                format!(
                    "sigma3 must be < min(alpha, theta) = {} when active, got {}",
                    self.alpha.min(self.theta),
                    self.sigma3
                )
            },
        )
    }

    /// The tensor entering transport, stretching, relaxation and momentum.
    pub fn cut(&self, p: &SymMat2) -> SymMat2 {
        if self.sigma3 > 0.0 {
            chi_cutoff(self.sigma3, p)
        } else {
            *p
        }
    }
}

/// Full unknown tuple at one time, in conservative variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub rho: ScalarField2D,
    pub m: VectorField2D,
    pub eta: ScalarField2D,
    pub tau: SymTensorField2D,
}

impl SimState {
    pub fn from_primitive(
        t: f64,
        rho: ScalarField2D,
        u: &VectorField2D,
        eta: ScalarField2D,
        tau: SymTensorField2D,
    ) -> SimState {
        let mut m = VectorField2D::zeros(*rho.grid(), Bc::VelocityDirichlet);
        for (k, v) in m.data_mut().iter_mut().enumerate() {
            let r = rho.data()[k][0];
            let w = u.data()[k];
            *v = [r * w[0], r * w[1]];
        }
        SimState {
            t,
            rho: rho.with_bc(Bc::ScalarNeumann),
            m,
            eta: eta.with_bc(Bc::ScalarNeumann),
            tau: tau.with_bc(Bc::TensorNeumann),
        }
    }

    pub fn grid(&self) -> &Grid2D {
        self.rho.grid()
    }

    /// `u = m / max(ρ, RHO_FLOOR)` and the number of cells where the floor
    /// was active.
    pub fn velocity(&self) -> (VectorField2D, usize) {
        let mut floored = 0;
        let mut u = VectorField2D::zeros(*self.grid(), Bc::VelocityDirichlet);
        for (k, v) in u.data_mut().iter_mut().enumerate() {
            let mut r = self.rho.data()[k][0];
            if r < RHO_FLOOR {
                floored += 1;
                r = RHO_FLOOR;
            }
            let m = self.m.data()[k];
            *v = [m[0] / r, m[1] / r];
        }
        (u, floored)
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.m.is_finite() && self.eta.is_finite() && self.tau.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.rho
            .max_abs()
            .max(self.m.max_abs())
            .max(self.eta.max_abs())
            .max(self.tau.max_abs())
    }

    /// Largest componentwise difference to another state on the same grid.
    pub fn max_diff(&self, other: &SimState) -> f64 {
        self.rho
            .max_abs_diff(&other.rho)
            .max(self.m.max_abs_diff(&other.m))
            .max(self.eta.max_abs_diff(&other.eta))
            .max(self.tau.max_abs_diff(&other.tau))
    }
}

/// Time derivative of every conservative unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRate {
    pub rho: ScalarField2D,
    pub m: VectorField2D,
    pub eta: ScalarField2D,
    pub tau: SymTensorField2D,
}

/// Which terms [`rhs`] assembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terms {
    All,
    /// Everything except `σ₂Δρ`, `εΔη` and `εΔT`.
    NoDiffusion,
}

/// `a ρ^γ + σ₁ ρ^Γ`, with `0^γ = 0`.
pub fn pressure_value(rho: f64, phys: &PhysParams, reg: &RegParams) -> f64 {
    let r = rho.max(0.0);
    let mut p = phys.a * r.powf(phys.gamma);
    if reg.sigma1 > 0.0 {
        p += reg.sigma1 * r.powf(reg.big_gamma);
    }
    p
}

/// `p′(ρ)`.
pub fn pressure_slope(rho: f64, phys: &PhysParams, reg: &RegParams) -> f64 {
    let r = rho.max(0.0);
    let mut dp = phys.a * phys.gamma * r.powf(phys.gamma - 1.0);
    if reg.sigma1 > 0.0 {
        dp += reg.sigma1 * reg.big_gamma * r.powf(reg.big_gamma - 1.0);
    }
    dp
}

pub fn pressure(rho: &ScalarField2D, phys: &PhysParams, reg: &RegParams) -> ScalarField2D {
    rho.map(Bc::ScalarNeumann, |[r]| [pressure_value(r, phys, reg)])
}

/// `μˢ(sym ∇u − ½ div u I) + μᴮ div u I` from a velocity gradient.
pub fn newtonian_stress_point(grad_u: &Mat2, phys: &PhysParams) -> SymMat2 {
    let div = grad_u.trace();
    let s = grad_u.sym();
    let dev = s - SymMat2::scalar(0.5 * div);
    phys.mu_s * dev + SymMat2::scalar(phys.mu_b * div)
}

pub fn newtonian_stress(u: &VectorField2D, phys: &PhysParams) -> SymTensorField2D {
    let grads = velocity_gradient(u);
    let mut out = SymTensorField2D::zeros(*u.grid(), Bc::TensorNeumann);
    for (k, gu) in grads.iter().enumerate() {
        let s = newtonian_stress_point(gu, phys);
        out.data_mut()[k] = [s.xx, s.xy, s.yy];
    }
    out
}

/// `−div(ρu) + σ₂Δρ`.
pub fn rhs_continuity(state: &SimState, reg: &RegParams) -> Result<ScalarField2D> {
    let (u, _) = state.velocity();
    continuity(state, &u, reg, Terms::All)
}

fn continuity(
    state: &SimState,
    u: &VectorField2D,
    reg: &RegParams,
    terms: Terms,
) -> Result<ScalarField2D> {
    let mut out = advect(u, &state.rho);
    out.scale(-1.0);
    if reg.sigma2 > 0.0 && terms == Terms::All {
        out.axpy(reg.sigma2, &laplacian(&state.rho)?);
    }
    Ok(out)
}

/// `−div(ηu) + εΔη`.
pub fn rhs_eta(state: &SimState, phys: &PhysParams) -> Result<ScalarField2D> {
    let (u, _) = state.velocity();
    eta_rate(state, &u, phys, Terms::All)
}

fn eta_rate(
    state: &SimState,
    u: &VectorField2D,
    phys: &PhysParams,
    terms: Terms,
) -> Result<ScalarField2D> {
    let mut out = advect(u, &state.eta);
    out.scale(-1.0);
    if terms == Terms::All {
        out.axpy(phys.eps, &laplacian(&state.eta)?);
    }
    Ok(out)
}

/// The tensor used in every cut slot: `χ_{σ₃}(T)` when `σ₃ > 0`, else `T`.
pub fn cut_tensor(tau: &SymTensorField2D, reg: &RegParams) -> SymTensorField2D {
    if reg.sigma3 > 0.0 {
        tau.map_sym(|p| chi_cutoff(reg.sigma3, &p))
    } else {
        tau.clone()
    }
}

/// Pointwise `tr log T` (or `tr log χ_{σ₃}(T)`), failing on the first
/// non-SPD cell when uncut.
pub fn trace_log_field(tau: &SymTensorField2D, reg: &RegParams) -> Result<ScalarField2D> {
    let g = *tau.grid();
    let mut out = ScalarField2D::zeros(g, Bc::ScalarNeumann);
    for (i, j) in g.cells() {
        let p = tau.sym(i, j);
        let v = if reg.sigma3 > 0.0 {
            tr_log_chi(reg.sigma3, &p)
        } else {
            tr_log(&p).map_err(|_| Error::NotSpd {
                cell: Some((i, j)),
                min_eig: p.min_eig(),
            })?
        };
        out.set(i, j, [v]);
    }
    Ok(out)
}

/// `∂ₜ(ρu)`.
pub fn rhs_momentum(state: &SimState, phys: &PhysParams, reg: &RegParams) -> Result<VectorField2D> {
    let (u, _) = state.velocity();
    momentum(state, &u, phys, reg)
}

fn momentum(
    state: &SimState,
    u: &VectorField2D,
    phys: &PhysParams,
    reg: &RegParams,
) -> Result<VectorField2D> {
    let g = *state.grid();
    let mut out = advect(u, &state.m);
    out.scale(-1.0);

    // −∇(p(ρ) + kLη + δη²): one gradient of the total isotropic pressure
    let mut iso = pressure(&state.rho, phys, reg);
    for (v, e) in iso.data_mut().iter_mut().zip(state.eta.data()) {
        v[0] += phys.polymer_pressure(e[0]);
    }
    out.axpy(-1.0, &gradient(&iso));

    out.axpy(0.5 * phys.mu_s, &laplacian(u)?);
    if phys.mu_b > 0.0 {
        out.axpy(phys.mu_b, &gradient(&divergence(u)));
    }

    let cut = cut_tensor(&state.tau, reg);
    out.axpy(1.0, &tensor_divergence(&cut));
    if reg.alpha > 0.0 {
        let trlog = trace_log_field(&state.tau, reg)?;
        out.axpy(-0.5 * reg.alpha, &gradient(&trlog));
    }

    if reg.sigma2 > 0.0 {
        let gu = velocity_gradient(u);
        let gr = gradient(&state.rho);
        for (k, v) in out.data_mut().iter_mut().enumerate() {
            let w = gu[k].mul_vec(gr.data()[k]);
            v[0] -= reg.sigma2 * w[0];
            v[1] -= reg.sigma2 * w[1];
        }
    }

    if phys.force != [0.0, 0.0] {
        for (v, r) in out.data_mut().iter_mut().zip(state.rho.data()) {
            v[0] += r[0] * phys.force[0];
            v[1] += r[0] * phys.force[1];
        }
    }
    debug_assert_eq!(out.grid(), &g);
    Ok(out.with_bc(Bc::VelocityDirichlet))
}

/// `∂ₜT`: transport, stretching and relaxation act on the cut tensor,
/// diffusion on `T` itself.
pub fn rhs_stress(state: &SimState, phys: &PhysParams, reg: &RegParams) -> Result<SymTensorField2D> {
    let (u, _) = state.velocity();
    stress(state, &u, phys, reg, Terms::All)
}

fn stress(
    state: &SimState,
    u: &VectorField2D,
    phys: &PhysParams,
    reg: &RegParams,
    terms: Terms,
) -> Result<SymTensorField2D> {
    let cut = cut_tensor(&state.tau, reg);
    let mut out = advect(u, &cut);
    out.scale(-1.0);
    let gu = velocity_gradient(u);
    let rate = phys.relax_rate();
    let source = phys.k * rate;
    for (k, v) in out.data_mut().iter_mut().enumerate() {
        let p = cut.sym_at(k);
        let st = gu[k].stretch(&p);
        let iso = source * (state.eta.data()[k][0] + reg.alpha);
        v[0] += st.xx + iso - rate * p.xx;
        v[1] += st.xy - rate * p.xy;
        v[2] += st.yy + iso - rate * p.yy;
    }
    if terms == Terms::All {
        out.axpy(phys.eps, &laplacian(&state.tau)?);
    }
    Ok(out.with_bc(Bc::TensorNeumann))
}

/// All four right-hand sides at once, sharing one velocity recovery.
pub fn rhs(state: &SimState, phys: &PhysParams, reg: &RegParams, terms: Terms) -> Result<StateRate> {
    let (u, _) = state.velocity();
    Ok(StateRate {
        rho: continuity(state, &u, reg, terms)?,
        m: momentum(state, &u, phys, reg)?,
        eta: eta_rate(state, &u, phys, terms)?,
        tau: stress(state, &u, phys, reg, terms)?,
    })
}

/// Uniform rest state `u = 0`, `ρ = ρ̄`, `η = η̄`, `T = k(η̄ + α)I`.
pub fn equilibrium_state(
    grid: Grid2D,
    phys: &PhysParams,
    reg: &RegParams,
    rho_bar: f64,
    eta_bar: f64,
) -> Result<SimState> {
    require(rho_bar > 0.0 && eta_bar > 0.0, || {
        format!("equilibrium needs rho_bar, eta_bar > 0, got {rho_bar}, {eta_bar}")
    })?;
    Ok(SimState {
        t: 0.0,
        rho: ScalarField2D::constant(grid, Bc::ScalarNeumann, [rho_bar]),
        m: VectorField2D::zeros(grid, Bc::VelocityDirichlet),
        eta: ScalarField2D::constant(grid, Bc::ScalarNeumann, [eta_bar]),
        tau: SymTensorField2D::uniform(grid, SymMat2::scalar(phys.k * (eta_bar + reg.alpha))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::integrate_cells;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid2D {
        Grid2D::new(n, n, 1.0, 1.0).unwrap()
    }

    fn bump_state(g: Grid2D) -> SimState {
        let rho = ScalarField2D::scalar(g, |x, y| 1.0 + 0.2 * (PI * x).cos() * (PI * y).cos());
        let u = VectorField2D::velocity(g, |x, y| {
            let s = (PI * x).sin() * (PI * y).sin();
            [0.3 * s * (2.0 * PI * y).cos(), -0.2 * s]
        });
        let eta = ScalarField2D::scalar(g, |x, _| 1.0 + 0.3 * (PI * x).cos());
        let tau = SymTensorField2D::tensor(g, |x, y| {
            SymMat2::new(1.2 + 0.1 * x, 0.05 * (x * y), 1.1 - 0.1 * y)
        });
        SimState::from_primitive(0.0, rho, &u, eta, tau)
    }

    #[test]
    fn pressure_examples() {
        let phys = PhysParams {
            gamma: 2.0,
            ..PhysParams::default()
        };
        let mut reg = RegParams::base(0.01);
        assert_eq!(pressure_value(3.0, &phys, &reg), 9.0);
        assert_eq!(pressure_value(0.0, &phys, &reg), 0.0);
        reg.sigma1 = 0.1;
        assert!((pressure_value(2.0, &phys, &reg) - 5.6).abs() < 1e-14);
    }

    #[test]
    fn newtonian_stress_examples() {
        let phys = PhysParams::default();
        assert_eq!(newtonian_stress_point(&Mat2::ZERO, &phys), SymMat2::ZERO);
        let s = newtonian_stress_point(&Mat2::IDENTITY, &phys);
        assert!((s - SymMat2::scalar(2.0 * phys.mu_b)).norm() < 1e-15);
        let s = newtonian_stress_point(&Mat2([[0.0, 1.0], [0.0, 0.0]]), &phys);
        assert!((s - SymMat2::new(0.0, 0.5 * phys.mu_s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn parameter_constraints() {
        assert!(PhysParams::default().validate().is_ok());
        let bad = PhysParams {
            gamma: 0.5,
            ..PhysParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = PhysParams {
            delta: 0.0,
            l: 0.0,
            ..PhysParams::default()
        };
        assert!(bad.validate().is_err());
        let reg = RegParams {
            sigma1: 0.1,
            big_gamma: 3.0,
            ..RegParams::default()
        };
        assert!(reg.validate().is_err());
        let reg = RegParams {
            sigma3: 0.2,
            alpha: 0.1,
            theta: 0.5,
            ..RegParams::default()
        };
        assert!(reg.validate().is_err());
        let reg = RegParams {
            sigma3: 0.005,
            ..RegParams::default()
        };
        assert!(reg.validate().is_ok());
    }

    #[test]
    fn rest_state_is_fixed_point() {
        let phys = PhysParams::default();
        for alpha in [0.0, 0.1] {
            let reg = RegParams {
                alpha,
                ..RegParams::default()
            };
            let s = equilibrium_state(grid(8), &phys, &reg, 1.0, 1.0).unwrap();
            let r = rhs(&s, &phys, &reg, Terms::All).unwrap();
            assert!(r.rho.max_abs() < 1e-13);
            assert!(r.m.max_abs() < 1e-13);
            assert!(r.eta.max_abs() < 1e-13);
            assert!(r.tau.max_abs() < 1e-13);
        }
    }

    #[test]
    fn uniform_force_accelerates() {
        let phys = PhysParams {
            force: [0.5, -1.0],
            ..PhysParams::default()
        };
        let reg = RegParams::default();
        let s = equilibrium_state(grid(8), &phys, &reg, 2.0, 1.0).unwrap();
        let m = rhs_momentum(&s, &phys, &reg).unwrap();
        for v in m.data() {
            assert!((v[0] - 1.0).abs() < 1e-13 && (v[1] + 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn pure_relaxation() {
        let phys = PhysParams {
            a0: 3.0,
            lambda: 0.7,
            ..PhysParams::default()
        };
        let reg = RegParams::default();
        let mut s = equilibrium_state(grid(6), &phys, &reg, 1.0, 1.3).unwrap();
        s.tau = s.tau.map_sym(|p| p + SymMat2::scalar(0.01));
        let r = rhs_stress(&s, &phys, &reg).unwrap();
        let expect = -phys.relax_rate() * 0.01;
        for v in r.data() {
            assert!((v[0] - expect).abs() < 1e-13 && v[1].abs() < 1e-15);
        }

        // uniform T₀ away from equilibrium matches the closed-form derivative
        let t0 = SymMat2::new(2.0, 0.4, 0.5);
        s.tau = SymTensorField2D::uniform(grid(6), t0);
        let r = rhs_stress(&s, &phys, &reg).unwrap();
        let eq = SymMat2::scalar(phys.k * (1.3 + reg.alpha));
        let d = -phys.relax_rate() * (t0 - eq);
        for k in 0..36 {
            assert!((r.sym_at(k) - d).norm() < 1e-12);
        }
    }

    #[test]
    fn cutoff_slots_use_sigma3() {
        let g = grid(4);
        let phys = PhysParams::default();
        let reg = RegParams {
            alpha: 0.5,
            sigma3: 0.3,
            theta: 0.4,
            ..RegParams::default()
        };
        reg.validate().unwrap();
        let mut s = bump_state(g);
        s.tau = SymTensorField2D::tensor(g, |x, _| SymMat2::new(0.1 * x, 0.0, -0.2));
        let got = rhs_stress(&s, &phys, &reg).unwrap();

        let (u, _) = s.velocity();
        let cut = SymTensorField2D::uniform(g, SymMat2::scalar(0.3));
        let adv = advect(&u, &cut);
        let lap = laplacian(&s.tau).unwrap();
        let gu = velocity_gradient(&u);
        for k in 0..g.len() {
            let p = SymMat2::scalar(0.3);
            let st = gu[k].stretch(&p);
            let eta = s.eta.data()[k][0];
            let hand = st - SymMat2::new(adv.data()[k][0], adv.data()[k][1], adv.data()[k][2])
                + phys.eps * SymMat2::new(lap.data()[k][0], lap.data()[k][1], lap.data()[k][2])
                + SymMat2::scalar(phys.k * phys.relax_rate() * (eta + reg.alpha))
                - phys.relax_rate() * p;
            assert!((got.sym_at(k) - hand).norm() < 1e-12);
        }
        // momentum is total under the cutoff even though T is indefinite
        assert!(rhs_momentum(&s, &phys, &reg).is_ok());
    }

    #[test]
    fn indefinite_stress_is_rejected_with_cell() {
        let g = grid(5);
        let phys = PhysParams::default();
        let reg = RegParams::default();
        let mut s = equilibrium_state(g, &phys, &reg, 1.0, 1.0).unwrap();
        s.tau.set_sym(2, 3, SymMat2::diag(1.0, -0.1));
        match rhs_momentum(&s, &phys, &reg) {
            Err(Error::NotSpd { cell, min_eig }) => {
                assert_eq!(cell, Some((2, 3)));
                assert!((min_eig + 0.1).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        // the α = 0 model has no logarithm and accepts it
        let base = RegParams::base(0.01);
        assert!(rhs_momentum(&s, &phys, &base).is_ok());
    }

    #[test]
    fn scalar_rates_integrate_to_zero() {
        let g = grid(16);
        let phys = PhysParams::default();
        let reg = RegParams {
            sigma2: 0.02,
            ..RegParams::default()
        };
        let s = bump_state(g);
        let c = rhs_continuity(&s, &reg).unwrap();
        let e = rhs_eta(&s, &phys).unwrap();
        let scale = integrate_cells(&s.rho);
        assert!(integrate_cells(&c).abs() < 1e-13 * scale);
        assert!(integrate_cells(&e).abs() < 1e-13 * scale);
    }

    #[test]
    fn kramers_split_is_exact() {
        let g = grid(12);
        let phys = PhysParams::default();
        let s = bump_state(g);
        let mut pp = s.eta.clone();
        for v in pp.data_mut() {
            v[0] = phys.polymer_pressure(v[0]);
        }
        let mut lhs = tensor_divergence(&s.tau);
        lhs.axpy(-1.0, &gradient(&pp));
        let mut kt = s.tau.clone();
        for (v, p) in kt.data_mut().iter_mut().zip(pp.data()) {
            v[0] -= p[0];
            v[2] -= p[0];
        }
        let rhs = tensor_divergence(&kt);
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn heat_kernel_decay_of_eta() {
        let rate = |n: usize| {
            let g = grid(n);
            let phys = PhysParams::default();
            let reg = RegParams::default();
            let mut s = equilibrium_state(g, &phys, &reg, 1.0, 1.0).unwrap();
            s.eta = ScalarField2D::scalar(g, |x, _| 1.0 + (PI * x).cos());
            let r = rhs_eta(&s, &phys).unwrap();
            let (i, j) = (0, n / 2);
            -r.at(i, j) / (s.eta.at(i, j) - 1.0) / phys.eps
        };
        let exact = PI * PI;
        let (e1, e2) = ((rate(16) - exact).abs(), (rate(32) - exact).abs());
        assert!(e1 / e2 > 3.8, "{e1} {e2}");
    }

    #[test]
    fn sigma2_product_term() {
        let g = grid(32);
        let phys = PhysParams {
            mu_s: 1e-300,
            mu_b: 0.0,
            ..PhysParams::default()
        };
        let on = RegParams {
            sigma2: 0.1,
            ..RegParams::base(0.01)
        };
        let off = RegParams::base(0.01);
        let s = bump_state(g);
        let diff = {
            let mut a = rhs_momentum(&s, &phys, &on).unwrap();
            a.axpy(-1.0, &rhs_momentum(&s, &phys, &off).unwrap());
            a
        };
        let (u, _) = s.velocity();
        let gu = velocity_gradient(&u);
        let gr = gradient(&s.rho);
        for k in 0..g.len() {
            let w = gu[k].mul_vec(gr.data()[k]);
            assert!((diff.data()[k][0] + 0.1 * w[0]).abs() < 1e-12);
            assert!((diff.data()[k][1] + 0.1 * w[1]).abs() < 1e-12);
        }
    }
}

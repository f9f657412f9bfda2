//! Time stepping: SSP-RK2, or an IMEX variant with backward-Euler diffusion.

use crate::error::{Error, Result};
use crate::grid::{laplacian, Field};
use crate::model::{pressure_slope, rhs, PhysParams, RegParams, SimState, StateRate, Terms, RHO_FLOOR};

/// Magnitude beyond which a run is declared blown up.
pub const BLOWUP_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtMode {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rk2,
    /// Explicit SSP-RK2 for everything except `σ₂Δρ`, `εΔη`, `εΔT`, which are
    /// then applied by one backward-Euler solve per step.
    Imex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub dt: DtMode,
    pub t_end: f64,
    pub cfl: f64,
    pub scheme: Scheme,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            dt: DtMode::Auto,
            t_end: 1.0,
            cfl: 0.4,
            scheme: Scheme::Rk2,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if let DtMode::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
            }
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_end must be ≥ 0, got {}",
                self.t_end
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cfl must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        Ok(())
    }
}

/// Stability-limited step:
/// `cfl · min(h² / (4 max(ε, σ₂, ν_eff)), h / (|u|_max + c_max))`.
/// Under IMEX the `ε` and `σ₂` entries are dropped since those terms are implicit.
pub fn auto_dt(state: &SimState, phys: &PhysParams, reg: &RegParams, cfg: &StepConfig) -> Result<f64> {
    let rho_min = state.rho.min();
    if rho_min <= RHO_FLOOR {
        return Err(Error::DegenerateState(format!(
            "minimum density {rho_min:e} at or below the floor {RHO_FLOOR:e}"
        )));
    }
    let h = state.grid().h_min();
    let nu_eff = (phys.mu_s + phys.mu_b) / rho_min;
    let diff = match cfg.scheme {
        Scheme::Rk2 => nu_eff.max(phys.eps).max(reg.sigma2),
        Scheme::Imex => nu_eff,
    };
    let (u, _) = state.velocity();
    let u_max = u
        .data()
        .iter()
        .map(|v| v[0].hypot(v[1]))
        .fold(0.0, f64::max);
    let dp_max = state
        .rho
        .values()
        .map(|r| pressure_slope(r, phys, reg))
        .fold(0.0, f64::max);
    let dt_diff = h * h / (4.0 * diff);
    let dt_adv = h / (u_max + dp_max.sqrt());
    Ok(cfg.cfl * dt_diff.min(dt_adv))
}

fn add_rate(s: &SimState, dt: f64, r: &StateRate) -> SimState {
    let mut out = s.clone();
    out.rho.axpy(dt, &r.rho);
    out.m.axpy(dt, &r.m);
    out.eta.axpy(dt, &r.eta);
    out.tau.axpy(dt, &r.tau);
    out.t = s.t + dt;
    out
}

fn average(a: &SimState, b: &SimState) -> SimState {
    SimState {
        t: b.t,
        rho: a.rho.lincomb(0.5, 0.5, &b.rho),
        m: a.m.lincomb(0.5, 0.5, &b.m),
        eta: a.eta.lincomb(0.5, 0.5, &b.eta),
        tau: a.tau.lincomb(0.5, 0.5, &b.tau),
    }
}

fn check_health(s: &SimState) -> Result<()> {
    let fields: [(&str, f64, bool); 4] = [
        ("rho", s.rho.max_abs(), s.rho.is_finite()),
        ("m", s.m.max_abs(), s.m.is_finite()),
        ("eta", s.eta.max_abs(), s.eta.is_finite()),
        ("T", s.tau.max_abs(), s.tau.is_finite()),
    ];
    for (name, mag, finite) in fields {
        if !finite {
            return Err(Error::Blowup {
                t: s.t,
                what: format!("{name} became non-finite"),
            });
        }
        if mag > BLOWUP_LIMIT {
            return Err(Error::Blowup {
                t: s.t,
                what: format!("|{name}| reached {mag:e}"),
            });
        }
    }
    Ok(())
}

/// Conjugate gradients for `(I − c Δ) x = b` with the field's ghost rule.
pub fn solve_implicit_diffusion<const N: usize>(b: &Field<N>, c: f64) -> Result<Field<N>> {
    if c == 0.0 {
        return Ok(b.clone());
    }
    let apply = |x: &Field<N>| -> Result<Field<N>> {
        let l = laplacian(x)?;
        Ok(x.lincomb(1.0, -c, &l))
    };
    let dot = |a: &Field<N>, b: &Field<N>| -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (0..N).map(|k| x[k] * y[k]).sum::<f64>())
            .sum()
    };
    let mut x = b.clone();
    let mut r = b.lincomb(1.0, -1.0, &apply(&x)?);
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let tol = 1e-28 * dot(b, b).max(f64::MIN_POSITIVE);
    for _ in 0..10_000 {
        if rr <= tol {
            return Ok(x);
        }
        let ap = apply(&p)?;
        let a = rr / dot(&p, &ap);
        x.axpy(a, &p);
        r.axpy(-a, &ap);
        let rr_new = dot(&r, &r);
        p = r.lincomb(1.0, rr_new / rr, &p);
        rr = rr_new;
    }
    if rr <= 1e-20 * dot(b, b) {
        Ok(x)
    } else {
        Err(Error::Domain(format!(
            "implicit diffusion solve stalled at residual {:e}",
            rr.sqrt()
        )))
    }
}

/// One step of size `dt`. Errors carry no time; [`run`] attaches it.
pub fn step(
    state: &SimState,
    phys: &PhysParams,
    reg: &RegParams,
    dt: f64,
    scheme: Scheme,
) -> Result<SimState> {
    let terms = match scheme {
        Scheme::Rk2 => Terms::All,
        Scheme::Imex => Terms::NoDiffusion,
    };
    let k1 = rhs(state, phys, reg, terms)?;
    let s1 = add_rate(state, dt, &k1);
    check_health(&s1)?;
    let k2 = rhs(&s1, phys, reg, terms)?;
    let s2 = add_rate(&s1, dt, &k2);
    let mut out = average(state, &s2);
    out.t = state.t + dt;
    if scheme == Scheme::Imex {
        out.rho = solve_implicit_diffusion(&out.rho, dt * reg.sigma2)?;
        out.eta = solve_implicit_diffusion(&out.eta, dt * phys.eps)?;
        out.tau = solve_implicit_diffusion(&out.tau, dt * phys.eps)?;
    }
    check_health(&out)?;
    Ok(out)
}

/// What [`run`] hands back.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: SimState,
    pub steps: usize,
    /// Cell-steps in which the density floor was active in velocity recovery.
    pub floor_events: usize,
    pub dt_min: f64,
    pub dt_max: f64,
}

/// Advances `initial` to `cfg.t_end`.
///
/// `observe` sees the initial state, every `every`-th step and the final
/// state; with `t_end` not beyond the initial time it is never called.
pub fn run(
    initial: &SimState,
    phys: &PhysParams,
    reg: &RegParams,
    cfg: &StepConfig,
    every: usize,
    mut observe: impl FnMut(&SimState) -> Result<()>,
) -> Result<RunOutcome> {
    cfg.validate()?;
    let every = every.max(1);
    let mut state = initial.clone();
    let mut out = RunOutcome {
        state: initial.clone(),
        steps: 0,
        floor_events: 0,
        dt_min: f64::INFINITY,
        dt_max: 0.0,
    };
    if cfg.t_end <= state.t {
        return Ok(out);
    }
    let t0 = state.t;
    observe(&state).map_err(|e| e.at_time(t0))?;
    let mut n = 0usize;
    loop {
        let remaining = cfg.t_end - state.t;
        let slack = 1e-12 * cfg.t_end.max(1.0);
        let t = state.t;
        let mut dt = match cfg.dt {
            DtMode::Fixed(dt) => dt,
            DtMode::Auto => auto_dt(&state, phys, reg, cfg).map_err(|e| e.at_time(t))?,
        };
        let last = dt >= remaining - slack;
        if last {
            dt = remaining;
        }
        out.floor_events += state.velocity().1;
        state = step(&state, phys, reg, dt, cfg.scheme).map_err(|e| e.at_time(t))?;
        if last {
            state.t = cfg.t_end;
        }
        n += 1;
        out.dt_min = out.dt_min.min(dt);
        out.dt_max = out.dt_max.max(dt);
        if last || n.is_multiple_of(every) {
            let t = state.t;
            observe(&state).map_err(|e| e.at_time(t))?;
        }
        if last {
            break;
        }
    }
    out.steps = n;
    out.state = state;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid2D, ScalarField2D, SymTensorField2D};
    use crate::model::equilibrium_state;
    use crate::symcalc::SymMat2;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid2D {
        Grid2D::new(n, n, 1.0, 1.0).unwrap()
    }

    #[test]
    fn equilibrium_is_preserved() {
        let phys = PhysParams::default();
        let reg = RegParams::default();
        let s = equilibrium_state(grid(8), &phys, &reg, 1.0, 1.0).unwrap();
        for scheme in [Scheme::Rk2, Scheme::Imex] {
            let n = step(&s, &phys, &reg, 1e-3, scheme).unwrap();
            assert!(n.max_diff(&s) < 1e-12);
        }
    }

    #[test]
    fn uniform_relaxation_is_second_order() {
        let phys = PhysParams {
            a0: 2.0,
            ..PhysParams::default()
        };
        let reg = RegParams::default();
        let mut s = equilibrium_state(grid(4), &phys, &reg, 1.0, 1.0).unwrap();
        let t0 = SymMat2::new(3.0, 0.5, 0.4);
        s.tau = SymTensorField2D::uniform(grid(4), t0);
        let eq = SymMat2::scalar(phys.k * (1.0 + reg.alpha));
        let exact = eq + (-phys.relax_rate()).exp() * (t0 - eq);
        let err = |dt: f64| {
            let mut st = s.clone();
            for _ in 0..(1.0 / dt).round() as usize {
                st = step(&st, &phys, &reg, dt, Scheme::Rk2).unwrap();
            }
            (st.tau.sym(1, 1) - exact).norm()
        };
        let (e1, e2) = (err(0.02), err(0.01));
        assert!(e1 / e2 > 3.9 && e1 / e2 < 4.1, "{e1} {e2}");
    }

    #[test]
    fn auto_dt_regimes() {
        let phys = PhysParams {
            mu_s: 1e-6,
            mu_b: 0.0,
            eps: 0.5,
            ..PhysParams::default()
        };
        let reg = RegParams::default();
        let cfg = StepConfig::default();
        let g = grid(16);
        let s = equilibrium_state(g, &phys, &reg, 1.0, 1.0).unwrap();
        let dt = auto_dt(&s, &phys, &reg, &cfg).unwrap();
        let h = g.h_min();
        assert!((dt - 0.4 * h * h / (4.0 * 0.5)).abs() < 1e-15);
        let phys2 = PhysParams { eps: 1.0, ..phys.clone() };
        let dt2 = auto_dt(&s, &phys2, &reg, &cfg).unwrap();
        assert!((dt / dt2 - 2.0).abs() < 1e-12);

        let mut fast = s.clone();
        for v in fast.m.data_mut() {
            *v = [1e4, 0.0];
        }
        let dt3 = auto_dt(&fast, &phys, &reg, &cfg).unwrap();
        let c = (phys.a * phys.gamma).sqrt();
        assert!((dt3 - 0.4 * h / (1e4 + c)).abs() < 1e-15);

        let mut empty = s;
        empty.rho = ScalarField2D::constant(g, crate::grid::Bc::ScalarNeumann, [0.0]);
        assert!(matches!(
            auto_dt(&empty, &phys, &reg, &cfg),
            Err(Error::DegenerateState(_))
        ));
    }

    #[test]
    fn run_edge_cases() {
        let phys = PhysParams::default();
        let reg = RegParams::default();
        let s = equilibrium_state(grid(4), &phys, &reg, 1.0, 1.0).unwrap();
        let cfg = StepConfig {
            t_end: 0.0,
            ..StepConfig::default()
        };
        let mut calls = 0;
        let out = run(&s, &phys, &reg, &cfg, 1, |_| {
            calls += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!((calls, out.steps), (0, 0));
        assert_eq!(out.state, s);

        let cfg = StepConfig {
            t_end: 0.05,
            dt: DtMode::Fixed(0.01),
            ..StepConfig::default()
        };
        let mut times = Vec::new();
        let out = run(&s, &phys, &reg, &cfg, 2, |st| {
            times.push(st.t);
            Ok(())
        })
        .unwrap();
        assert_eq!(out.steps, 5);
        assert_eq!(times.len(), 4);
        assert_eq!(*times.last().unwrap(), 0.05);
    }

    #[test]
    fn failures_carry_time() {
        let phys = PhysParams::default();
        let reg = RegParams::default();
        let mut s = equilibrium_state(grid(4), &phys, &reg, 1.0, 1.0).unwrap();
        s.tau.set_sym(0, 0, SymMat2::diag(1.0, -1.0));
        let cfg = StepConfig {
            t_end: 0.1,
            ..StepConfig::default()
        };
        let err = run(&s, &phys, &reg, &cfg, 1, |_| Ok(())).unwrap_err();
        match err {
            Error::AtTime { t, source } => {
                assert_eq!(t, 0.0);
                assert!(matches!(*source, Error::NotSpd { .. }));
            }
            other => panic!("{other:?}"),
        }
        let mut s = equilibrium_state(grid(4), &phys, &reg, 1.0, 1.0).unwrap();
        s.m.set(1, 1, [f64::NAN, 0.0]);
        let err = step(&s, &phys, &reg, 1e-3, Scheme::Rk2).unwrap_err();
        assert!(matches!(err, Error::Blowup { .. }));
    }

    #[test]
    fn implicit_diffusion_conserves_and_smooths() {
        let g = grid(16);
        let f = ScalarField2D::scalar(g, |x, y| 1.0 + (PI * x).cos() * (2.0 * PI * y).cos());
        let x = solve_implicit_diffusion(&f, 0.01).unwrap();
        assert!((x.integral() - f.integral()).abs() < 1e-14);
        assert!(x.max() < f.max());
        let back = x.lincomb(1.0, -0.01, &laplacian(&x).unwrap());
        assert!(back.max_abs_diff(&f) < 1e-12);
    }
}

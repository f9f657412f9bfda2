//! Seeded verification suites. Reports contain no timings, so the same seed
//! yields the same bytes.

use std::fmt::{self, Write as _};
use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::closure::{closure_compare, KineticGridSpec};
use crate::diagnostics::{
    gagliardo_nirenberg, korn, log_laplacian_ineq, renormalization_residual, RenormSample,
    Renormalizer,
};
use crate::error::{Error, Result};
use crate::grid::{laplacian, Grid2D, ScalarField2D, SymTensorField2D, VectorField2D};
use crate::integrate::{step, DtMode, Scheme, StepConfig};
use crate::model::{equilibrium_state, PhysParams, RegParams, SimState};
use crate::runner::simulate;
use crate::symcalc::{
    apply_scalar, convexity_trace_ineq, cutoff_log_diff_ineq, jacobi_residual, matrix_log_diff_ineq,
    scalar_log_ineq, tr_log, Exp, GCutoff, Log, Mat2, Square, SymMat2,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    MatrixInequalities,
    FieldInequalities,
    Conservation,
    Closure,
    Convergence,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::MatrixInequalities,
        Suite::FieldInequalities,
        Suite::Conservation,
        Suite::Closure,
        Suite::Convergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::MatrixInequalities => "matrix-inequalities",
            Suite::FieldInequalities => "field-inequalities",
            Suite::Conservation => "conservation",
            Suite::Closure => "closure",
            Suite::Convergence => "convergence",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite '{s}'")))
    }
}

/// One named property evaluated on `total` cases.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: usize,
    pub total: usize,
    /// Largest observed value of the checked quantity (violation, error or
    /// ratio, depending on the check).
    pub worst: f64,
    pub counterexample: Option<String>,
}

impl Check {
    fn new(name: &str) -> Self {
        Check {
            name: name.to_string(),
            passed: 0,
            total: 0,
            worst: f64::NEG_INFINITY,
            counterexample: None,
        }
    }

    fn record(&mut self, ok: bool, value: f64, case: impl FnOnce() -> String) {
        self.total += 1;
        self.worst = self.worst.max(value);
        if ok {
            self.passed += 1;
        } else if self.counterexample.is_none() {
            self.counterexample = Some(case());
        }
    }

    fn single(name: &str, ok: bool, value: f64, case: impl FnOnce() -> String) -> Self {
        let mut c = Check::new(name);
        c.record(ok, value, case);
        c
    }

    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::ok)
    }

    pub fn first_counterexample(&self) -> Option<(&str, &str)> {
        self.checks
            .iter()
            .find_map(|c| c.counterexample.as_deref().map(|ce| (c.name.as_str(), ce)))
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "suite {} seed {}", self.suite, self.seed);
        for c in &self.checks {
            let _ = writeln!(
                s,
                "  {:<34} {:>6}/{:<6} worst {:.6e} {}",
                c.name,
                c.passed,
                c.total,
                c.worst,
                if c.ok() { "ok" } else { "FAIL" }
            );
        }
        let n_ok = self.checks.iter().filter(|c| c.ok()).count();
        let _ = writeln!(s, "{}: {}/{} checks passed", self.suite, n_ok, self.checks.len());
        s
    }
}

/// Sample counts; the defaults are the full suite sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub matrix_samples: usize,
    pub random_fields: usize,
    pub field_n: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            matrix_samples: 10_000,
            random_fields: 100,
            field_n: 64,
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64, opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = match suite {
        Suite::MatrixInequalities => matrix_suite(&mut rng, opts.matrix_samples)?,
        Suite::FieldInequalities => field_suite(&mut rng, opts)?,
        Suite::Conservation => conservation_suite(&mut rng)?,
        Suite::Closure => closure_suite()?,
        Suite::Convergence => convergence_suite()?,
    };
    Ok(SuiteReport { suite, seed, checks })
}

/// SPD matrix with log-uniform eigenvalues in `[e^{-r}, e^{r}]`.
pub fn random_spd(rng: &mut impl Rng, r: f64) -> SymMat2 {
    let (l1, l2) = (rng.gen_range(-r..r).exp(), rng.gen_range(-r..r).exp());
    SymMat2::diag(l1, l2).rotate(rng.gen_range(0.0..PI))
}

/// Symmetric matrix with entries uniform in `[-r, r]`.
pub fn random_sym(rng: &mut impl Rng, r: f64) -> SymMat2 {
    SymMat2::new(rng.gen_range(-r..r), rng.gen_range(-r..r), rng.gen_range(-r..r))
}

fn show(p: &SymMat2) -> String {
    format!("[{:e}, {:e}, {:e}]", p.xx, p.xy, p.yy)
}

fn matrix_suite(rng: &mut ChaCha8Rng, n: usize) -> Result<Vec<Check>> {
    let mut scalar = Check::new("scalar-log-ineq");
    let mut matrix = Check::new("matrix-log-diff-ineq");
    let mut cut = Check::new("cutoff-log-diff-ineq");
    let mut chain_log = Check::new("trace-chain-log");
    let mut chain_cut = Check::new("trace-chain-cutoff");
    let mut chain_exp = Check::new("trace-chain-exp");
    let mut chain_sq = Check::new("trace-chain-square");
    let mut trlog = Check::new("trlog-equals-logdet");
    let violation = |lhs: f64, rhs: f64| (lhs - rhs) / (1.0 + lhs.abs() + rhs.abs());
    for _ in 0..n {
        let (a, b) = (rng.gen_range(-6.0..6.0f64).exp(), rng.gen_range(-6.0..6.0f64).exp());
        let c = scalar_log_ineq(a, b)?;
        scalar.record(c.holds, violation(c.rhs, c.lhs), || format!("a = {a:e}, b = {b:e}"));

        let (pa, pb) = (random_spd(rng, 4.0), random_spd(rng, 4.0));
        let c = matrix_log_diff_ineq(&pa, &pb)?;
        matrix.record(c.holds, violation(c.lhs, c.rhs), || {
            format!("A = {}, B = {}", show(&pa), show(&pb))
        });

        let s3 = rng.gen_range(-4.0..0.0f64).exp();
        let (sa, sb) = (random_sym(rng, 3.0), random_sym(rng, 3.0));
        let c = cutoff_log_diff_ineq(s3, &sa, &sb);
        cut.record(c.holds, violation(c.lhs, c.rhs), || {
            format!("s3 = {s3:e}, A = {}, B = {}", show(&sa), show(&sb))
        });

        let chain = |check: &mut Check, g: &dyn Fn() -> Result<crate::symcalc::ChainCheck>, a: &SymMat2, b: &SymMat2| -> Result<()> {
            let c = g()?;
            let spread = 1.0 + c.left.abs().max(c.middle.abs()).max(c.right.abs());
            let gap = (c.middle - c.left).abs().min((c.right - c.middle).abs());
            check.record(c.holds, if c.holds { 0.0 } else { gap / spread }, || {
                format!("A = {}, B = {}", show(a), show(b))
            });
            Ok(())
        };
        chain(&mut chain_log, &|| convexity_trace_ineq(&Log, &pa, &pb), &pa, &pb)?;
        chain(&mut chain_cut, &|| convexity_trace_ineq(&GCutoff(s3), &sa, &sb), &sa, &sb)?;
        chain(&mut chain_exp, &|| convexity_trace_ineq(&Exp, &sa, &sb), &sa, &sb)?;
        chain(&mut chain_sq, &|| convexity_trace_ineq(&Square, &sa, &sb), &sa, &sb)?;

        let err = (tr_log(&pa)? - pa.det().ln()).abs();
        trlog.record(err <= 1e-10, err, || format!("P = {}", show(&pa)));
    }

    // Jacobi's formula on closed-form paths, with the order under dt halving.
    let mut jacobi = Check::new("jacobi-residual-dt1e-3");
    let mut order = Check::new("jacobi-observed-order");
    let path = |dt: f64, s: &[f64; 4]| -> Vec<SymMat2> {
        (0..=(1.0 / dt).round() as usize)
            .map(|k| {
                let t = k as f64 * dt;
                SymMat2::diag((s[0] * t).exp(), (s[1] * t).exp()).rotate(s[2] * t + s[3])
            })
            .collect()
    };
    for _ in 0..16 {
        let s = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.0..PI),
        ];
        let r1 = jacobi_residual(&path(1e-3, &s), 1e-3)?;
        let r2 = jacobi_residual(&path(5e-4, &s), 5e-4)?;
        jacobi.record(r1 <= 1e-6, r1, || format!("path {s:?}"));
        let p = (r1 / r2).log2();
        order.record((p - 2.0).abs() < 0.3, (p - 2.0).abs(), || format!("path {s:?}, order {p}"));
    }
    Ok(vec![scalar, matrix, cut, chain_log, chain_cut, chain_exp, chain_sq, trlog, jacobi, order])
}

struct Modes {
    coeff: Vec<(usize, usize, f64)>,
}

impl Modes {
    fn random(rng: &mut impl Rng, kmax: usize, amp: f64) -> Self {
        let mut coeff = Vec::new();
        for k in 0..=kmax {
            for l in 0..=kmax {
                let w = amp / (1.0 + (k * k + l * l) as f64);
                coeff.push((k, l, w * rng.gen_range(-1.0..1.0)));
            }
        }
        Modes { coeff }
    }

    fn cos(&self, x: f64, y: f64, lx: f64, ly: f64) -> f64 {
        self.coeff
            .iter()
            .map(|&(k, l, c)| c * (k as f64 * PI * x / lx).cos() * (l as f64 * PI * y / ly).cos())
            .sum()
    }

    fn sin(&self, x: f64, y: f64, lx: f64, ly: f64) -> f64 {
        self.coeff
            .iter()
            .map(|&(k, l, c)| {
                c * ((k + 1) as f64 * PI * x / lx).sin() * ((l + 1) as f64 * PI * y / ly).sin()
            })
            .sum()
    }
}

/// Smooth SPD field `exp(S)` with `S` a random cosine series.
pub fn random_spd_field(rng: &mut impl Rng, g: Grid2D, amp: f64) -> SymTensorField2D {
    let (a, b, c) = (Modes::random(rng, 3, amp), Modes::random(rng, 3, amp), Modes::random(rng, 3, amp));
    let (lx, ly) = (g.lx(), g.ly());
    SymTensorField2D::tensor(g, |x, y| {
        let s = SymMat2::new(a.cos(x, y, lx, ly), b.cos(x, y, lx, ly), c.cos(x, y, lx, ly));
        apply_scalar(f64::exp, &s).expect("finite argument")
    })
}

/// Smooth no-slip velocity from a random sine series.
pub fn random_velocity(rng: &mut impl Rng, g: Grid2D, amp: f64) -> VectorField2D {
    let (a, b) = (Modes::random(rng, 3, amp), Modes::random(rng, 3, amp));
    let (lx, ly) = (g.lx(), g.ly());
    VectorField2D::velocity(g, |x, y| [a.sin(x, y, lx, ly), b.sin(x, y, lx, ly)])
}

fn field_suite(rng: &mut ChaCha8Rng, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let g = Grid2D::new(opts.field_n, opts.field_n, 1.0, 1.0)?;
    let mut uncut = Check::new("log-laplacian-margin");
    let mut cut = Check::new("log-laplacian-cutoff-margin");
    let mut parts = Check::new("log-laplacian-summation-by-parts");
    let mut korn_c = Check::new("korn-constant");
    let mut gn_c = Check::new("gagliardo-nirenberg-constant");
    for n in 0..opts.random_fields {
        let t = random_spd_field(rng, g, 1.0);
        let c = log_laplacian_ineq(&t, None)?;
        uncut.record(c.margin >= -1e-8, -c.margin, || format!("field {n}, uncut margin {:e}", c.margin));
        let err = (c.rhs - c.rhs_via_laplacian).abs() / (1.0 + c.rhs.abs());
        parts.record(err <= 1e-10, err, || format!("field {n}, relative gap {err:e}"));
        // cutoff level inside the eigenvalue range so it is active somewhere
        let s3 = (0..g.len()).map(|k| t.sym_at(k).min_eig()).fold(f64::INFINITY, f64::min) * 1.5;
        let c = log_laplacian_ineq(&t, Some(s3))?;
        cut.record(c.margin >= -1e-8, -c.margin, || {
            format!("field {n}, s3 = {s3:e}, margin {:e}", c.margin)
        });
        let u = random_velocity(rng, g, 1.0);
        let k = korn(&u);
        korn_c.record(k.constant <= 1.5, k.constant, || format!("field {n}, constant {}", k.constant));
        let gv = gagliardo_nirenberg(&u);
        gn_c.record(gv.constant <= 2.0, gv.constant, || format!("field {n}, constant {}", gv.constant));
    }
    // T = e^{f} I: the scalar-exponent family, where the inequality is sharp
    let mut family = Check::new("scalar-exponent-equality-ratio");
    let t = SymTensorField2D::tensor(g, |x, y| {
        SymMat2::scalar((0.7 * (PI * x).cos() + 0.4 * (2.0 * PI * y).sin()).exp())
    });
    let c = log_laplacian_ineq(&t, None)?;
    let ratio = c.lhs / c.rhs;
    family.record((1.0 - 2e-3..=1.0).contains(&ratio), 1.0 - ratio, || format!("ratio {ratio}"));
    let mut factor = Check::new("scalar-exponent-factor-two");
    let full: f64 = 2.0 * c.lhs / c.rhs;
    factor.record((full - 2.0).abs() <= 4e-3, (full - 2.0).abs(), || format!("factor {full}"));
    Ok(vec![uncut, cut, parts, korn_c, gn_c, family, factor])
}

/// Random SPD-stress state with no-slip velocity.
pub fn random_state(rng: &mut impl Rng, g: Grid2D, reg: &RegParams) -> SimState {
    let (lx, ly) = (g.lx(), g.ly());
    let (mr, me) = (Modes::random(rng, 2, 0.2), Modes::random(rng, 2, 0.2));
    let rho = ScalarField2D::scalar(g, |x, y| 1.0 + mr.cos(x, y, lx, ly));
    let eta = ScalarField2D::scalar(g, |x, y| 1.0 + me.cos(x, y, lx, ly));
    let u = random_velocity(rng, g, 0.1);
    let tau = random_spd_field(rng, g, 0.3).map_sym(|p| p + SymMat2::scalar(reg.alpha));
    SimState::from_primitive(0.0, rho, &u, eta, tau)
}

fn conservation_suite(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let g = Grid2D::new(32, 32, 1.0, 1.0)?;
    let phys = PhysParams::default();
    let mut drift = Check::new("mass-and-eta-drift");
    let mut energy = Check::new("energy-residual-positive-part");
    let mut renorm = Check::new("renormalization-identity");
    let mut spd = Check::new("spd-preserved");
    for (n, (alpha, scheme)) in [(0.1, Scheme::Rk2), (0.01, Scheme::Rk2), (0.1, Scheme::Imex)]
        .into_iter()
        .enumerate()
    {
        let reg = RegParams {
            alpha,
            ..RegParams::default()
        };
        let s0 = random_state(rng, g, &reg);
        let cfg = StepConfig {
            t_end: 0.2,
            scheme,
            ..StepConfig::default()
        };
        let r = simulate(&s0, &phys, &reg, &cfg, 5)?;
        let d = r.mass_drift.max(r.eta_drift);
        drift.record(d <= 1e-11, d, || format!("run {n}, drift {d:e}"));
        energy.record(r.energy_residual <= 5e-3, r.energy_residual, || {
            format!("run {n}, residual {:e}", r.energy_residual)
        });
        spd.record(r.min_eig > 0.0, -r.min_eig, || format!("run {n}, min eigenvalue {:e}", r.min_eig));

        let samples: Vec<RenormSample> = {
            let mut out = vec![RenormSample::of(&s0)];
            let mut s = s0.clone();
            for _ in 0..4 {
                let dt = 1e-3;
                s = step(&s, &phys, &reg, dt, Scheme::Rk2)?;
                out.push(RenormSample::of(&s));
            }
            out
        };
        let res = renormalization_residual(Renormalizer::Identity, &samples);
        renorm.record(res <= 1e-10, res, || format!("run {n}, residual {res:e}"));
    }
    let reg = RegParams::default();
    let eq = equilibrium_state(g, &phys, &reg, 1.0, 1.0)?;
    let next = step(&eq, &phys, &reg, 1e-3, Scheme::Rk2)?;
    let change = next.max_diff(&eq);
    let fixed = Check::single("equilibrium-fixed-point", change <= 1e-12, change, || {
        format!("change {change:e}")
    });
    Ok(vec![drift, energy, renorm, spd, fixed])
}

fn closure_suite() -> Result<Vec<Check>> {
    let phys = PhysParams {
        a0: 1.0,
        lambda: 0.5,
        k: 1.0,
        ..PhysParams::default()
    };
    let run = |kappa: Mat2, nq: usize| {
        closure_compare(&kappa, 1.0, &phys, 5.0, KineticGridSpec { nq, qmax: 8.0 }, 0.5)
    };
    let shear = Mat2([[0.0, 0.1], [0.0, 0.0]]);
    let (coarse, fine) = (run(shear, 64)?, run(shear, 128)?);
    let e = fine.max_rel_error;
    let bench = Check::single("shear-error-nq128", e <= 2e-2, e, || format!("error {e:e}"));
    let ratio = coarse.max_rel_error / e;
    let conv = Check::single("shear-refinement-ratio", ratio >= 3.0, ratio, || format!("ratio {ratio}"));
    let z = run(Mat2::ZERO, 64)?.max_rel_error;
    let zero = Check::single("equilibrium-error", z <= 1e-12, z, || format!("error {z:e}"));
    let r = run(Mat2([[0.0, 0.5], [-0.5, 0.0]]), 128)?.max_rel_error;
    let rot = Check::single("rotation-error-nq128", r <= 1e-5, r, || format!("error {r:e}"));
    let m = fine.mass_drift;
    let mass = Check::single("kinetic-mass-drift", m <= 1e-12, m, || format!("drift {m:e}"));
    let p = fine.min_psi;
    let pos = Check::single("kinetic-positivity", p >= 0.0, -p, || format!("min psi {p:e}"));
    Ok(vec![bench, conv, zero, rot, mass, pos])
}

fn convergence_suite() -> Result<Vec<Check>> {
    // Laplacian of cos(πx)cos(πy): second order.
    let lap_err = |n: usize| -> Result<f64> {
        let g = Grid2D::new(n, n, 1.0, 1.0)?;
        let f = ScalarField2D::scalar(g, |x, y| (PI * x).cos() * (PI * y).cos());
        let l = laplacian(&f)?;
        Ok(g.cells()
            .map(|(i, j)| (l.at(i, j) + 2.0 * PI * PI * f.at(i, j)).abs())
            .fold(0.0, f64::max))
    };
    let r = lap_err(16)? / lap_err(32)?;
    let lap = Check::single("laplacian-order-ratio", (r - 4.0).abs() < 0.5, r, || format!("ratio {r}"));

    // Self-convergence in time of SSP-RK2 on a smooth state.
    let g = Grid2D::new(16, 16, 1.0, 1.0)?;
    let phys = PhysParams::default();
    let reg = RegParams::default();
    let s0 = random_state(&mut ChaCha8Rng::seed_from_u64(7), g, &reg);
    let advance = |dt: f64| -> Result<SimState> {
        let cfg = StepConfig {
            dt: DtMode::Fixed(dt),
            t_end: 0.02,
            ..StepConfig::default()
        };
        Ok(crate::integrate::run(&s0, &phys, &reg, &cfg, usize::MAX, |_| Ok(()))?.state)
    };
    let (a, b, c) = (advance(4e-4)?, advance(2e-4)?, advance(1e-4)?);
    let ratio = a.max_diff(&b) / b.max_diff(&c);
    let time = Check::single("rk2-time-order-ratio", (ratio - 4.0).abs() < 0.6, ratio, || {
        format!("ratio {ratio}")
    });

    // Signed energy residual shrinks under refinement.
    let res = |n: usize| -> Result<f64> {
        let g = Grid2D::new(n, n, 1.0, 1.0)?;
        let s = random_state(&mut ChaCha8Rng::seed_from_u64(11), g, &reg);
        let cfg = StepConfig {
            t_end: 0.2,
            ..StepConfig::default()
        };
        let r = simulate(&s, &phys, &reg, &cfg, 1)?;
        Ok(r.rows.iter().map(|row| row.residual.abs()).fold(0.0, f64::max))
    };
    let (r16, r32) = (res(16)?, res(32)?);
    let energy = Check::single("energy-residual-refinement", r32 < r16, r32 / r16, || {
        format!("residuals {r16:e} -> {r32:e}")
    });
    Ok(vec![lap, time, energy])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyOptions {
        VerifyOptions {
            matrix_samples: 500,
            random_fields: 3,
            field_n: 24,
        }
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn matrix_suite_passes_and_is_deterministic() {
        let a = run_suite(Suite::MatrixInequalities, 3, &small()).unwrap();
        let b = run_suite(Suite::MatrixInequalities, 3, &small()).unwrap();
        assert!(a.passed(), "{}", a.render());
        assert_eq!(a.render(), b.render());
        let c = run_suite(Suite::MatrixInequalities, 4, &small()).unwrap();
        assert_ne!(a.render(), c.render());
    }

    #[test]
    fn field_suite_passes_small() {
        let r = run_suite(Suite::FieldInequalities, 1, &small()).unwrap();
        // the scalar family needs the full resolution for its tolerance
        for c in r.checks.iter().filter(|c| !c.name.starts_with("scalar-exponent")) {
            assert!(c.ok(), "{}", r.render());
        }
    }
}

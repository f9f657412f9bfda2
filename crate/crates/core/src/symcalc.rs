//! Closed-form functional calculus for symmetric 2×2 matrices.
//!
//! Every matrix function is evaluated through the spectral decomposition
//! `P = O diag(λ₁, λ₂) Oᵀ`, which in two dimensions is available in closed
//! form. The module also hosts executable checks for the trace and log
//! inequalities the energy estimates rely on; the checkers return both sides
//! and a flag so callers choose the slack.

use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Space dimension. The constants `1/d` and `d` in the log estimates use it.
pub const DIM: usize = 2;
const DIM_F: f64 = DIM as f64;

/// Relative eigenvalue gap below which the eigenbasis is taken to be `I`.
const TIE_TOL: f64 = 1e-14;

/// Symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymMat2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymMat2 {
    pub const ZERO: SymMat2 = SymMat2 {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };
    pub const IDENTITY: SymMat2 = SymMat2 {
        xx: 1.0,
        xy: 0.0,
        yy: 1.0,
    };

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        SymMat2 { xx, xy, yy }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        SymMat2 {
            xx: a,
            xy: 0.0,
            yy: b,
        }
    }

    pub const fn scalar(s: f64) -> Self {
        SymMat2::diag(s, s)
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// Frobenius inner product `A : B = tr(A Bᵀ)`.
    pub fn ddot(&self, other: &SymMat2) -> f64 {
        self.xx * other.xx + 2.0 * self.xy * other.xy + self.yy * other.yy
    }

    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn to_mat(&self) -> Mat2 {
        Mat2([[self.xx, self.xy], [self.xy, self.yy]])
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }

    /// Smallest eigenvalue, without building the eigenbasis.
    pub fn min_eig(&self) -> f64 {
        if self.xy == 0.0 {
            return self.xx.min(self.yy);
        }
        let m = 0.5 * (self.xx + self.yy);
        let r = (0.5 * (self.xx - self.yy)).hypot(self.xy);
        m - r
    }

    pub fn is_spd(&self) -> bool {
        self.is_spd_with_floor(0.0)
    }

    /// `min eigenvalue > floor`.
    pub fn is_spd_with_floor(&self, floor: f64) -> bool {
        self.min_eig() > floor
    }

    /// Inverse via the adjugate. Fails when the determinant vanishes.
    pub fn inverse(&self) -> Result<SymMat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Domain(format!("singular matrix {self:?}")));
        }
        Ok(SymMat2::new(self.yy / det, -self.xy / det, self.xx / det))
    }

    /// Conjugation `R P Rᵀ` by the rotation through `angle`.
    pub fn rotate(&self, angle: f64) -> SymMat2 {
        let (s, c) = angle.sin_cos();
        let r = Mat2([[c, -s], [s, c]]);
        r.mul_mat(&self.to_mat()).mul_mat(&r.transpose()).sym()
    }
}

impl Add for SymMat2 {
    type Output = SymMat2;
    fn add(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }
}

impl AddAssign for SymMat2 {
    fn add_assign(&mut self, o: SymMat2) {
        *self = *self + o;
    }
}

impl Sub for SymMat2 {
    type Output = SymMat2;
    fn sub(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }
}

impl Neg for SymMat2 {
    type Output = SymMat2;
    fn neg(self) -> SymMat2 {
        SymMat2::new(-self.xx, -self.xy, -self.yy)
    }
}

impl Mul<SymMat2> for f64 {
    type Output = SymMat2;
    fn mul(self, m: SymMat2) -> SymMat2 {
        SymMat2::new(self * m.xx, self * m.xy, self * m.yy)
    }
}

/// General (not necessarily symmetric) 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[0.0; 2]; 2]);
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn transpose(&self) -> Mat2 {
        let m = self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn mul_mat(&self, o: &Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        let m = self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// Symmetric part `(M + Mᵀ)/2`.
    pub fn sym(&self) -> SymMat2 {
        let m = self.0;
        SymMat2::new(m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1])
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum()
    }

    /// `M S + S Mᵀ` for symmetric `S`; symmetric by construction.
    pub fn stretch(&self, s: &SymMat2) -> SymMat2 {
        let ms = self.mul_mat(&s.to_mat());
        let m = ms.0;
        SymMat2::new(2.0 * m[0][0], m[0][1] + m[1][0], 2.0 * m[1][1])
    }
}

/// Spectral decomposition of a symmetric 2×2 matrix.
///
/// The eigenbasis is the rotation through `angle`; its first column is the
/// eigenvector of `lam1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair2 {
    pub lam1: f64,
    pub lam2: f64,
    pub angle: f64,
}

impl EigenPair2 {
    /// The orthogonal factor `O`.
    pub fn basis(&self) -> Mat2 {
        let (s, c) = self.angle.sin_cos();
        Mat2([[c, -s], [s, c]])
    }

    pub fn first_vector(&self) -> [f64; 2] {
        let (s, c) = self.angle.sin_cos();
        [c, s]
    }

    /// `O diag(a, b) Oᵀ` in this eigenbasis.
    pub fn compose(&self, a: f64, b: f64) -> SymMat2 {
        if self.angle == 0.0 {
            return SymMat2::diag(a, b);
        }
        if self.angle == FRAC_PI_2 {
            return SymMat2::diag(b, a);
        }
        let (s, c) = self.angle.sin_cos();
        SymMat2::new(a * c * c + b * s * s, (a - b) * c * s, a * s * s + b * c * c)
    }

    pub fn reconstruct(&self) -> SymMat2 {
        self.compose(self.lam1, self.lam2)
    }
}

/// Closed-form eigendecomposition with `lam1 ≥ lam2`.
pub fn eig(p: &SymMat2) -> EigenPair2 {
    let m = 0.5 * (p.xx + p.yy);
    let h = 0.5 * (p.xx - p.yy);
    let r = h.hypot(p.xy);
    let (lam1, lam2) = if p.xy == 0.0 {
        (p.xx.max(p.yy), p.xx.min(p.yy))
    } else {
        (m + r, m - r)
    };
    let angle = if 2.0 * r < TIE_TOL * (1.0 + lam1.abs()) || p.xy == 0.0 && h >= 0.0 {
        0.0
    } else if p.xy == 0.0 {
        FRAC_PI_2
    } else {
        0.5 * p.xy.atan2(h)
    };
    EigenPair2 { lam1, lam2, angle }
}

/// `g(P) = O diag(g(λ₁), g(λ₂)) Oᵀ`. Fails if `g` is non-finite at an eigenvalue.
pub fn apply_scalar(g: impl Fn(f64) -> f64, p: &SymMat2) -> Result<SymMat2> {
    let e = eig(p);
    let (a, b) = (g(e.lam1), g(e.lam2));
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "scalar function undefined at eigenvalues ({}, {})",
            e.lam1, e.lam2
        )));
    }
    Ok(e.compose(a, b))
}

fn require_spd(p: &SymMat2) -> Result<EigenPair2> {
    let e = eig(p);
    if e.lam2 > 0.0 {
        Ok(e)
    } else {
        Err(Error::NotSpd {
            cell: None,
            min_eig: e.lam2,
        })
    }
}

/// Matrix logarithm of an SPD matrix.
pub fn mat_log(p: &SymMat2) -> Result<SymMat2> {
    let e = require_spd(p)?;
    Ok(e.compose(e.lam1.ln(), e.lam2.ln()))
}

/// `tr(log P) = log det P`.
pub fn tr_log(p: &SymMat2) -> Result<f64> {
    let e = require_spd(p)?;
    Ok(e.lam1.ln() + e.lam2.ln())
}

/// Eigenvalue-wise `max(σ₃, ·)`.
pub fn chi_cutoff(s3: f64, p: &SymMat2) -> SymMat2 {
    let e = eig(p);
    if e.lam2 >= s3 {
        return *p;
    }
    e.compose(e.lam1.max(s3), e.lam2.max(s3))
}

/// Logarithm above `s3`, tangent line below it. Concave and `C^{1,1}`.
pub fn g_cutoff_scalar(s3: f64, s: f64) -> f64 {
    if s >= s3 {
        s.ln()
    } else {
        s / s3 + s3.ln() - 1.0
    }
}

/// Derivative of [`g_cutoff_scalar`], equal to `1 / max(s3, s)`.
pub fn g_cutoff_deriv(s3: f64, s: f64) -> f64 {
    1.0 / s.max(s3)
}

/// `G_{σ₃}(P)` applied eigenvalue-wise.
pub fn g_cutoff_log(s3: f64, p: &SymMat2) -> SymMat2 {
    let e = eig(p);
    e.compose(g_cutoff_scalar(s3, e.lam1), g_cutoff_scalar(s3, e.lam2))
}

/// `χ_{σ₃}(P)⁻¹`, which coincides with `G′_{σ₃}(P)`.
pub fn inv_chi(s3: f64, p: &SymMat2) -> SymMat2 {
    let e = eig(p);
    e.compose(g_cutoff_deriv(s3, e.lam1), g_cutoff_deriv(s3, e.lam2))
}

/// `tr log χ_{σ₃}(P)`; total for every symmetric `P` when `s3 > 0`.
pub fn tr_log_chi(s3: f64, p: &SymMat2) -> f64 {
    let e = eig(p);
    e.lam1.max(s3).ln() + e.lam2.max(s3).ln()
}

/// Both sides of a checked inequality plus the verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IneqCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `−(a−b)(1/a − 1/b) ≥ (log a − log b)²` for positive reals.
pub fn scalar_log_ineq(a: f64, b: f64) -> Result<IneqCheck> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("need a, b > 0, got ({a}, {b})")));
    }
    let lhs = -(a - b) * (1.0 / a - 1.0 / b);
    let rhs = (a.ln() - b.ln()).powi(2);
    Ok(IneqCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-12,
    })
}

/// `|tr log A − tr log B|² ≤ −d·tr((A−B)(A⁻¹−B⁻¹))` for SPD `A`, `B`.
pub fn matrix_log_diff_ineq(a: &SymMat2, b: &SymMat2) -> Result<IneqCheck> {
    let lhs = (tr_log(a)? - tr_log(b)?).powi(2);
    let rhs = -DIM_F * (*a - *b).ddot(&(a.inverse()? - b.inverse()?));
    let scale = 1.0 + lhs.abs() + rhs.abs();
    Ok(IneqCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-10 * scale,
    })
}

/// Cutoff variant: `|tr log χ(A) − tr log χ(B)|² ≤ −d·tr((A−B)(χ(A)⁻¹−χ(B)⁻¹))`
/// for arbitrary symmetric `A`, `B`.
pub fn cutoff_log_diff_ineq(s3: f64, a: &SymMat2, b: &SymMat2) -> IneqCheck {
    let lhs = (tr_log_chi(s3, a) - tr_log_chi(s3, b)).powi(2);
    let rhs = -DIM_F * (*a - *b).ddot(&(inv_chi(s3, a) - inv_chi(s3, b)));
    let scale = 1.0 + lhs.abs() + rhs.abs();
    IneqCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-10 * scale,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curvature {
    Concave,
    Convex,
}

/// A scalar `C¹` function with known curvature, lifted to matrices spectrally.
pub trait SpectralFn {
    fn value(&self, s: f64) -> f64;
    fn deriv(&self, s: f64) -> f64;
    fn curvature(&self) -> Curvature;

    fn on(&self, p: &SymMat2) -> Result<SymMat2> {
        apply_scalar(|s| self.value(s), p)
    }

    fn deriv_on(&self, p: &SymMat2) -> Result<SymMat2> {
        apply_scalar(|s| self.deriv(s), p)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Square;

impl SpectralFn for Square {
    fn value(&self, s: f64) -> f64 {
        s * s
    }
    fn deriv(&self, s: f64) -> f64 {
        2.0 * s
    }
    fn curvature(&self) -> Curvature {
        Curvature::Convex
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Exp;

impl SpectralFn for Exp {
    fn value(&self, s: f64) -> f64 {
        s.exp()
    }
    fn deriv(&self, s: f64) -> f64 {
        s.exp()
    }
    fn curvature(&self) -> Curvature {
        Curvature::Convex
    }
}

/// Natural logarithm; only defined on SPD arguments.
#[derive(Debug, Clone, Copy)]
pub struct Log;

impl SpectralFn for Log {
    fn value(&self, s: f64) -> f64 {
        if s > 0.0 {
            s.ln()
        } else {
            f64::NAN
        }
    }
    fn deriv(&self, s: f64) -> f64 {
        if s > 0.0 {
            1.0 / s
        } else {
            f64::NAN
        }
    }
    fn curvature(&self) -> Curvature {
        Curvature::Concave
    }
}

/// The logarithmic cutoff `G_{σ₃}`.
#[derive(Debug, Clone, Copy)]
pub struct GCutoff(pub f64);

impl SpectralFn for GCutoff {
    fn value(&self, s: f64) -> f64 {
        g_cutoff_scalar(self.0, s)
    }
    fn deriv(&self, s: f64) -> f64 {
        g_cutoff_deriv(self.0, s)
    }
    fn curvature(&self) -> Curvature {
        Curvature::Concave
    }
}

/// The three members of the trace chain
/// `(A−B):g′(B)`, `tr(g(A)−g(B))`, `(A−B):g′(A)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainCheck {
    pub left: f64,
    pub middle: f64,
    pub right: f64,
    pub holds: bool,
}

/// Concave `g`: `left ≥ middle ≥ right`; convex `g`: reversed.
pub fn convexity_trace_ineq(g: &impl SpectralFn, a: &SymMat2, b: &SymMat2) -> Result<ChainCheck> {
    let diff = *a - *b;
    let left = diff.ddot(&g.deriv_on(b)?);
    let middle = g.on(a)?.trace() - g.on(b)?.trace();
    let right = diff.ddot(&g.deriv_on(a)?);
    let slack = 1e-10 * (1.0 + left.abs().max(middle.abs()).max(right.abs()));
    let holds = match g.curvature() {
        Curvature::Concave => left >= middle - slack && middle >= right - slack,
        Curvature::Convex => left <= middle + slack && middle <= right + slack,
    };
    Ok(ChainCheck {
        left,
        middle,
        right,
        holds,
    })
}

/// Max over interior samples of
/// `|δₜ log det P − tr(P⁻¹ δₜP)|` with centred differences.
pub fn jacobi_residual(path: &[SymMat2], dt: f64) -> Result<f64> {
    let mut logdet = Vec::with_capacity(path.len());
    for p in path {
        logdet.push(tr_log(p)?);
    }
    let mut worst: f64 = 0.0;
    for n in 1..path.len().saturating_sub(1) {
        let dlog = (logdet[n + 1] - logdet[n - 1]) / (2.0 * dt);
        let dp = (1.0 / (2.0 * dt)) * (path[n + 1] - path[n - 1]);
        let rhs = path[n].inverse()?.ddot(&dp);
        worst = worst.max((dlog - rhs).abs());
    }
    Ok(worst)
}

/// Max over interior samples of `|δₜ tr g(P) − g′(P):δₜP|`.
pub fn trace_derivative_check(g: &impl SpectralFn, path: &[SymMat2], dt: f64) -> Result<f64> {
    let mut tr = Vec::with_capacity(path.len());
    for p in path {
        tr.push(g.on(p)?.trace());
    }
    let mut worst: f64 = 0.0;
    for n in 1..path.len().saturating_sub(1) {
        let dtr = (tr[n + 1] - tr[n - 1]) / (2.0 * dt);
        let dp = (1.0 / (2.0 * dt)) * (path[n + 1] - path[n - 1]);
        let rhs = g.deriv_on(&path[n])?.ddot(&dp);
        worst = worst.max((dtr - rhs).abs());
    }
    Ok(worst)
}

/// `tr(P − α log P) + d(α log α − α)`, non-negative for SPD `P` and `α > 0`.
pub fn relative_entropy_trace(alpha: f64, p: &SymMat2) -> Result<f64> {
    let e = require_spd(p)?;
    let per = |l: f64| l - alpha * l.ln();
    Ok(per(e.lam1) + per(e.lam2) + DIM_F * (alpha * alpha.ln() - alpha))
}

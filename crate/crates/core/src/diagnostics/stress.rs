use crate::grid::{face_gradient_sq, SymTensorField2D};
use crate::model::PhysParams;

/// `∫ T:T` with the off-diagonal entry counted twice.
pub(crate) fn l2_sq(tau: &SymTensorField2D) -> f64 {
    let g = tau.grid();
    g.integrate(|i, j| tau.sym(i, j).norm_sq())
}

/// `∫ |∇T|²` in the face-difference form of the diffusion operator.
pub(crate) fn grad_sq(tau: &SymTensorField2D) -> f64 {
    face_gradient_sq(tau) + face_gradient_sq(&tau.component(1))
}

/// Accumulates `sup_t ∫|T|² + ε∫∫|∇T|² + (A₀/4λ)∫∫|T|²` along a run.
#[derive(Debug, Clone)]
pub struct StressL2Monitor {
    eps: f64,
    relax: f64,
    times: Vec<f64>,
    l2: Vec<f64>,
    grad: Vec<f64>,
    grad_integral: f64,
    l2_integral: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressL2Summary {
    pub sup_l2: f64,
    /// `ε ∫∫ |∇T|²`.
    pub grad_term: f64,
    /// `(A₀/4λ) ∫∫ |T|²`.
    pub relax_term: f64,
    pub bound: f64,
    /// Largest ratio `∫|T|²(t₂) / ∫|T|²(t₁)` over `0 < t₂ − t₁ ≤ 1`.
    pub max_unit_time_growth: f64,
    /// True when that ratio reaches 2.
    pub growth_flag: bool,
}

impl StressL2Monitor {
    pub fn new(phys: &PhysParams) -> Self {
        StressL2Monitor {
            eps: phys.eps,
            relax: phys.a0 / (4.0 * phys.lambda),
            times: Vec::new(),
            l2: Vec::new(),
            grad: Vec::new(),
            grad_integral: 0.0,
            l2_integral: 0.0,
        }
    }

    pub fn push(&mut self, t: f64, tau: &SymTensorField2D) {
        let (l2, grad) = (l2_sq(tau), grad_sq(tau));
        if let Some(&t0) = self.times.last() {
            let dt = t - t0;
            self.l2_integral += 0.5 * dt * (l2 + self.l2[self.l2.len() - 1]);
            self.grad_integral += 0.5 * dt * (grad + self.grad[self.grad.len() - 1]);
        }
        self.times.push(t);
        self.l2.push(l2);
        self.grad.push(grad);
    }

    pub fn l2_series(&self) -> (&[f64], &[f64]) {
        (&self.times, &self.l2)
    }

    pub fn summary(&self) -> StressL2Summary {
        let sup_l2 = self.l2.iter().copied().fold(0.0, f64::max);
        let grad_term = self.eps * self.grad_integral;
        let relax_term = self.relax * self.l2_integral;
        let mut growth: f64 = if self.l2.is_empty() { 0.0 } else { 1.0 };
        let mut start = 0;
        for n in 0..self.times.len() {
            while self.times[n] - self.times[start] > 1.0 {
                start += 1;
            }
            for m in start..n {
                if self.l2[m] > 0.0 {
                    growth = growth.max(self.l2[n] / self.l2[m]);
                }
            }
        }
        StressL2Summary {
            sup_l2,
            grad_term,
            relax_term,
            bound: sup_l2 + grad_term + relax_term,
            max_unit_time_growth: growth,
            growth_flag: growth >= 2.0,
        }
    }
}

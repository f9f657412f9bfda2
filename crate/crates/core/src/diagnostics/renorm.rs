use crate::grid::{divergence, ScalarField2D, VectorField2D};
use crate::model::SimState;

/// Renormalizing functions `b` with `b ∈ C¹(0, ∞)` continuous at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Renormalizer {
    Identity,
    Square,
    /// `s log s + 1`.
    Entropy,
}

impl Renormalizer {
    pub fn value(self, s: f64) -> f64 {
        match self {
            Renormalizer::Identity => s,
            Renormalizer::Square => s * s,
            Renormalizer::Entropy => {
                if s > 0.0 {
                    s * s.ln() + 1.0
                } else {
                    1.0
                }
            }
        }
    }

    /// `b′(s) s − b(s)`.
    pub fn defect(self, s: f64) -> f64 {
        match self {
            Renormalizer::Identity => 0.0,
            Renormalizer::Square => s * s,
            Renormalizer::Entropy => s - 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenormSample {
    pub t: f64,
    pub rho: ScalarField2D,
    pub u: VectorField2D,
}

impl RenormSample {
    pub fn of(state: &SimState) -> Self {
        RenormSample {
            t: state.t,
            rho: state.rho.clone(),
            u: state.velocity().0,
        }
    }
}

/// Max over consecutive sample pairs of the domain-integrated residual of
/// `∂ₜb(ρ) + div(b(ρ)u) + (b′(ρ)ρ − b(ρ)) div u`, time derivative by
/// differences and the defect term by the trapezoid rule. The flux term
/// integrates to zero under no-slip.
pub fn renormalization_residual(b: Renormalizer, samples: &[RenormSample]) -> f64 {
    let integral_b = |s: &RenormSample| s.rho.grid().integrate(|i, j| b.value(s.rho.at(i, j)));
    let defect_term = |s: &RenormSample| {
        let div = divergence(&s.u);
        s.rho
            .grid()
            .integrate(|i, j| b.defect(s.rho.at(i, j)) * div.at(i, j))
    };
    let mut worst: f64 = 0.0;
    for w in samples.windows(2) {
        let dt = w[1].t - w[0].t;
        if dt <= 0.0 {
            continue;
        }
        let r = (integral_b(&w[1]) - integral_b(&w[0])) / dt
            + 0.5 * (defect_term(&w[0]) + defect_term(&w[1]));
        worst = worst.max(r.abs());
    }
    worst
}

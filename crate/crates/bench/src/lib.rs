//! Fixtures shared by the kernel benchmarks.

use oldroyd2d::{initial_state, parse_config, PhysParams, RegParams, SimState};

/// Mollified perturbed-equilibrium state on an `n × n` unit square.
pub fn perturbed_state(n: usize) -> (SimState, PhysParams, RegParams) {
    let cfg = parse_config(&format!("nx = {n}\nny = {n}\ninitial = perturbed-equilibrium"))
        .expect("fixture config");
    let s = initial_state(&cfg).expect("fixture state");
    (s, cfg.phys, cfg.reg)
}

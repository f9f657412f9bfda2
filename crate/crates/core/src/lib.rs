//! Finite-volume solver and diagnostics for the two-dimensional compressible
//! Oldroyd-B system with stress diffusion, its regularization hierarchy, and
//! a Fokker–Planck dumbbell oracle for the stress closure.

pub mod closure;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod integrate;
pub mod model;
pub mod runner;
pub mod sweep;
pub mod symcalc;
pub mod verify;

pub use config::{parse_config, serialize, InitialSpec, RunConfig};
pub use error::{Error, Result};
pub use grid::{Bc, Field, Grid2D, ScalarField2D, SymTensorField2D, VectorField2D};
pub use integrate::{DtMode, Scheme, StepConfig};
pub use model::{PhysParams, RegParams, SimState};
pub use runner::{initial_state, simulate, simulate_config, RunReport};
pub use sweep::{sweep, Knob, SweepReport};
pub use symcalc::{Mat2, SymMat2};
pub use verify::{run_suite, Suite, SuiteReport, VerifyOptions};

//! Non-perturbative reduction of a Hamiltonian `H = H0 + g H1` one basis state
//! at a time, renormalising the coupling `g` so that the ground eigenvalue is
//! preserved, plus detectors for fixed points of the resulting coupling flow.

// `!(x <= tol)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod eigen;
pub mod error;
pub mod flow;
pub mod models;
#[cfg(any(test, feature = "oracles"))]
pub mod oracles;

pub use analysis::{
    anchor_overlap_profile, classify_fixed_point, detect_degeneracies, detect_fixed_points, spectrum_drift,
    DegeneracyReport, DriftRow, ExceptionalFixedPoint, FixedPointReport,
};
pub use eigen::{eigen_decompose, ground_state, EigenSystem};
pub use error::{Error, Result};
pub use flow::{
    build_quadratic, flow_derivative, reduction_step, run_flow, run_model_flow, solve_continuity,
    ContinuityTie, EliminationOrder, FlowConfig, FlowStep, FlowTrace, QuadraticBuild, RootChoice, TargetMode,
    Termination,
};
pub use models::{
    build_custom, build_degenerate_fixed_point, build_tight_binding, Hamiltonian, ModelKind, ModelSpec,
};

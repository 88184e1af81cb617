//! Coupling-constant renormalisation under Hilbert space reduction.
//!
//! One step removes a single basis state `|N>` (the Q space is
//! one-dimensional) and fixes the new coupling `g'` of the surviving
//! `(k-1)`-state Hamiltonian `diag(eps) + g' H1` by requiring that the
//! effective eigenvalue equation, projected on the anchor state `<1|`, still
//! holds at the pinned eigenvalue `lambda`:
//!
//! ```text
//! eps_1 a_11 + g' F_1N + g'^2 H_1N S_N / (lambda - eps_N - g' H_NN) = lambda a_11
//! ```
//!
//! with `F_1N = sum_{i != N} a_1i H1[1][i]` and `S_N = sum_{i != N} a_1i H1[N][i]`
//! built from the ground-state amplitudes `a_1i` of the current Hamiltonian.
//! Clearing the denominator gives `a g'^2 + b g' + c = 0` with
//!
//! ```text
//! a = G_1N - H_NN F_1N,                 G_1N = H_1N S_N
//! b = a_11 H_NN (lambda - eps_1) + F_1N (lambda - eps_N)
//! c = -a_11 (lambda - eps_1)(lambda - eps_N)
//! ```
//!
//! and the root closest to the current coupling is kept.
//!
//! When `lambda` is the exact ground eigenvalue of the current Hamiltonian the
//! current coupling always solves the condition (the projected equation is
//! then just the anchor row of `H a = lambda a`). Only [`TargetMode::Frozen`],
//! which keeps pinning the eigenvalue of the original space, produces a
//! non-trivial flow.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::eigen::{eigen_decompose, EigenSystem};
use crate::error::{Error, Result};
use crate::models::{Hamiltonian, ModelSpec};

/// Relative size below which the quadratic coefficient is treated as zero.
pub const LINEAR_FALLBACK_TOL: f64 = 1e-14;
/// Relative tolerance on negative discriminants before they count as complex.
pub const DISCRIMINANT_TOL: f64 = 1e-12;
/// Relative threshold on the eliminated-state propagator denominator.
pub const SINGULAR_DENOMINATOR_TOL: f64 = 1e-12;
/// Smallest anchor amplitude for which the projected equation carries information.
pub const MIN_ANCHOR_AMPLITUDE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// Re-pin each step to the ground eigenvalue of the current reduced space.
    Running,
    /// Keep pinning the ground eigenvalue of the initial space.
    Frozen,
}

impl std::fmt::Display for TargetMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TargetMode::Running => "running",
            TargetMode::Frozen => "frozen",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EliminationOrder {
    /// Remove the surviving state with the largest original position.
    HighestIndexFirst,
    /// Remove the state with the largest `eps`; ties go to the larger index.
    HighestEpsFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuityTie {
    /// Equidistant roots resolve to the one of smaller magnitude.
    SmallerMagnitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    /// Dimension at which the reduction stops.
    pub n_min: usize,
    /// Number of low eigenvalues recorded per step.
    pub m_track: usize,
    pub target_mode: TargetMode,
    /// Original basis label of the anchor state (0-based).
    pub anchor_index: usize,
    pub elimination_order: EliminationOrder,
    /// Constraint residual tolerance, relative to
    /// `max(1, |lambda|, spectral radius)`.
    pub residual_tol: f64,
    pub continuity_tie: ContinuityTie,
    /// Relative gap under which ground-state levels count as one multiplet.
    pub degeneracy_tol: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            n_min: 5,
            m_track: 5,
            target_mode: TargetMode::Frozen,
            anchor_index: 0,
            elimination_order: EliminationOrder::HighestIndexFirst,
            residual_tol: 1e-8,
            continuity_tie: ContinuityTie::SmallerMagnitude,
            degeneracy_tol: 1e-8,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_min = {} must be at least 2",
                self.n_min
            )));
        }
        if self.m_track == 0 || self.m_track > self.n_min {
            return Err(Error::InvalidConfig(format!(
                "m_track = {} must lie in 1..={}",
                self.m_track, self.n_min
            )));
        }
        if !(self.residual_tol > 0.0) || !(self.degeneracy_tol >= 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Intermediates and coefficients of the renormalisation condition for one
/// elimination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticBuild {
    pub f1n: f64,
    pub sn: f64,
    pub g1n: f64,
    pub h_nn: f64,
    pub h_1n: f64,
    pub a_coef: f64,
    pub b_coef: f64,
    pub c_coef: f64,
    pub lambda1: f64,
    pub eps_anchor: f64,
    pub eps_elim: f64,
    pub a11: f64,
}

impl QuadraticBuild {
    /// `lambda - eps_N - g H_NN`, the inverse propagator of the eliminated state.
    pub fn denominator(&self, g: f64) -> f64 {
        self.lambda1 - self.eps_elim - g * self.h_nn
    }

    /// The projected eigenvalue condition evaluated directly, without
    /// clearing the denominator.
    pub fn constraint_residual(&self, g: f64) -> f64 {
        self.eps_anchor * self.a11 + g * self.f1n + g * g * self.h_1n * self.sn / self.denominator(g)
            - self.lambda1 * self.a11
    }

    pub fn polynomial(&self, g: f64) -> f64 {
        (self.a_coef * g + self.b_coef) * g + self.c_coef
    }
}

/// Ground-state amplitudes used for the projection.
///
/// If the lowest level is degenerate (within `rel_tol` of the spectral scale)
/// the anchor state is projected onto the whole ground multiplet, which makes
/// the choice independent of the basis the eigensolver returned for it. The
/// result is oriented so that the anchor amplitude is non-negative.
pub fn ground_amplitudes(es: &EigenSystem, anchor: usize, rel_tol: f64) -> DVector<f64> {
    let values = es.values();
    let scale = values.amax().max(1.0);
    let multiplet = values
        .iter()
        .take_while(|&&v| v - values[0] <= rel_tol * scale)
        .count();

    let mut a = if multiplet > 1 {
        let mut p = DVector::zeros(es.dim());
        for k in 0..multiplet {
            let v = es.vectors().column(k);
            p.axpy(v[anchor], &v, 1.0);
        }
        let norm = p.norm();
        if norm > MIN_ANCHOR_AMPLITUDE {
            p / norm
        } else {
            es.ground_components()
        }
    } else {
        es.ground_components()
    };
    if a[anchor] < 0.0 {
        a.neg_mut();
    }
    a
}

/// Coefficients of the renormalisation condition for eliminating position
/// `elim` while projecting on position `anchor`, using the ground state of `es`.
pub fn build_quadratic(
    h: &Hamiltonian,
    es: &EigenSystem,
    lambda1: f64,
    anchor: usize,
    elim: usize,
) -> Result<QuadraticBuild> {
    let a = ground_amplitudes(es, anchor, FlowConfig::default().degeneracy_tol);
    build_quadratic_from_amplitudes(h, &a, lambda1, anchor, elim)
}

pub fn build_quadratic_from_amplitudes(
    h: &Hamiltonian,
    amplitudes: &DVector<f64>,
    lambda1: f64,
    anchor: usize,
    elim: usize,
) -> Result<QuadraticBuild> {
    let n = h.dim();
    if anchor >= n || elim >= n || anchor == elim {
        return Err(Error::InvalidConfig(format!(
            "anchor {anchor} and eliminated state {elim} must be distinct positions below {n}"
        )));
    }
    if amplitudes.len() != n {
        return Err(Error::Shape(format!(
            "{} amplitudes for dimension {n}",
            amplitudes.len()
        )));
    }
    let a11 = amplitudes[anchor];
    if a11.abs() < MIN_ANCHOR_AMPLITUDE {
        return Err(Error::DegenerateAnchor { a11 });
    }

    let h1 = h.h1();
    let eps = h.eps();
    let (mut f1n, mut sn) = (0.0, 0.0);
    for i in (0..n).filter(|&i| i != elim) {
        f1n += amplitudes[i] * h1[(anchor, i)];
        sn += amplitudes[i] * h1[(elim, i)];
    }
    let h_1n = h1[(anchor, elim)];
    let h_nn = h1[(elim, elim)];
    let g1n = h_1n * sn;
    let eps_anchor = eps[anchor];
    let eps_elim = eps[elim];

    Ok(QuadraticBuild {
        f1n,
        sn,
        g1n,
        h_nn,
        h_1n,
        a_coef: g1n - h_nn * f1n,
        b_coef: a11 * h_nn * (lambda1 - eps_anchor) + f1n * (lambda1 - eps_elim),
        c_coef: -a11 * (lambda1 - eps_anchor) * (lambda1 - eps_elim),
        lambda1,
        eps_anchor,
        eps_elim,
        a11,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootChoice {
    pub chosen: f64,
    pub chosen_index: usize,
    /// Real roots in ascending order.
    pub roots: Vec<f64>,
    pub discriminant: f64,
}

/// Solves `a g^2 + b g + c = 0` and keeps the root nearest `g_prev`.
pub fn solve_continuity(a: f64, b: f64, c: f64, g_prev: f64, tie: ContinuityTie) -> Result<RootChoice> {
    let discriminant = b * b - 4.0 * a * c;
    if a == 0.0 && b == 0.0 && c == 0.0 {
        return Err(Error::NoSolution { a, b, c });
    }

    let mut roots = if a.abs() <= LINEAR_FALLBACK_TOL * b.abs().max(c.abs()) {
        if b == 0.0 || b.abs() <= LINEAR_FALLBACK_TOL * c.abs() {
            return Err(Error::NoSolution { a, b, c });
        }
        vec![-c / b]
    } else {
        let scale = (b * b).max((4.0 * a * c).abs());
        if discriminant < -DISCRIMINANT_TOL * scale {
            return Err(Error::ComplexRoots { discriminant });
        }
        let sq = discriminant.max(0.0).sqrt();
        // larger-magnitude root first, the other from the product c / a
        let q = -0.5 * (b + b.signum() * sq);
        if q == 0.0 {
            vec![0.0]
        } else if sq == 0.0 {
            vec![q / a]
        } else {
            vec![q / a, c / q]
        }
    };
    roots.sort_by(f64::total_cmp);

    let mut chosen_index = 0;
    for (i, &r) in roots.iter().enumerate().skip(1) {
        let best = roots[chosen_index];
        let (d, d_best) = ((r - g_prev).abs(), (best - g_prev).abs());
        let better = match tie {
            ContinuityTie::SmallerMagnitude => d < d_best || (d == d_best && r.abs() < best.abs()),
        };
        if better {
            chosen_index = i;
        }
    }

    Ok(RootChoice {
        chosen: roots[chosen_index],
        chosen_index,
        roots,
        discriminant,
    })
}

/// Record of one elimination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowStep {
    pub dim_before: usize,
    pub dim_after: usize,
    /// Original labels of the eliminated and anchor states.
    pub eliminated: usize,
    pub anchor: usize,
    pub g_before: f64,
    pub g_after: f64,
    pub build: QuadraticBuild,
    pub discriminant: f64,
    pub roots: Vec<f64>,
    pub chosen_root_index: usize,
    pub residual: f64,
    /// Absolute tolerance the residual was checked against.
    pub residual_tol: f64,
    pub spectrum_after: Vec<f64>,
    pub lambda1_target: f64,
    pub lambda1_target_next: f64,
}

impl FlowStep {
    pub fn delta_g(&self) -> f64 {
        self.g_after - self.g_before
    }

    /// The rejected root, when the condition had two.
    pub fn other_root(&self) -> Option<f64> {
        (self.roots.len() == 2).then(|| self.roots[1 - self.chosen_root_index])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Failed {
        /// Dimension of the Hamiltonian the failing step started from.
        dimension: usize,
        kind: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub model: Option<ModelSpec>,
    pub config: FlowConfig,
    pub initial_dim: usize,
    pub initial_g: f64,
    pub initial_spectrum: Vec<f64>,
    pub steps: Vec<FlowStep>,
    pub termination: Termination,
}

impl FlowTrace {
    pub fn is_complete(&self) -> bool {
        self.termination == Termination::Completed
    }

    pub fn final_dim(&self) -> usize {
        self.steps.last().map_or(self.initial_dim, |s| s.dim_after)
    }

    /// Coupling when the space has dimension `dim`.
    pub fn g_at(&self, dim: usize) -> Option<f64> {
        if dim == self.initial_dim {
            return Some(self.initial_g);
        }
        self.steps.iter().find(|s| s.dim_after == dim).map(|s| s.g_after)
    }

    /// Tracked low spectrum when the space has dimension `dim`.
    pub fn spectrum_at(&self, dim: usize) -> Option<&[f64]> {
        if dim == self.initial_dim {
            return Some(&self.initial_spectrum);
        }
        self.steps
            .iter()
            .find(|s| s.dim_after == dim)
            .map(|s| s.spectrum_after.as_slice())
    }
}

fn select_elimination(h: &Hamiltonian, anchor: usize, order: EliminationOrder) -> usize {
    let candidates = (0..h.dim()).filter(|&i| i != anchor);
    match order {
        EliminationOrder::HighestIndexFirst => candidates.max().unwrap_or(0),
        EliminationOrder::HighestEpsFirst => candidates
            .max_by(|&i, &j| h.eps()[i].total_cmp(&h.eps()[j]).then(i.cmp(&j)))
            .unwrap_or(0),
    }
}

fn step_with(
    h: &Hamiltonian,
    es: &EigenSystem,
    lambda1_target: f64,
    config: &FlowConfig,
) -> Result<(Hamiltonian, EigenSystem, FlowStep)> {
    let anchor = h.position_of(config.anchor_index).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "anchor state {} is not in the basis",
            config.anchor_index
        ))
    })?;
    let elim = select_elimination(h, anchor, config.elimination_order);

    let amplitudes = ground_amplitudes(es, anchor, config.degeneracy_tol);
    let build = build_quadratic_from_amplitudes(h, &amplitudes, lambda1_target, anchor, elim)?;
    let choice = solve_continuity(
        build.a_coef,
        build.b_coef,
        build.c_coef,
        h.g(),
        config.continuity_tie,
    )?;
    let g_next = choice.chosen;

    let scale = 1f64.max(lambda1_target.abs()).max(es.values().amax());
    let denominator = build.denominator(g_next);
    if denominator.abs() < SINGULAR_DENOMINATOR_TOL * scale {
        return Err(Error::NearSingularDenominator { denominator });
    }
    let residual = build.constraint_residual(g_next);
    let residual_tol = config.residual_tol * scale;
    if !(residual.abs() <= residual_tol) {
        return Err(Error::ResidualTooLarge {
            residual,
            tolerance: residual_tol,
        });
    }

    let h_next = h.eliminate(elim, g_next)?;
    let es_next = eigen_decompose(&h_next.full_matrix())?;
    let lambda1_target_next = match config.target_mode {
        TargetMode::Running => es_next.values()[0],
        TargetMode::Frozen => lambda1_target,
    };

    let step = FlowStep {
        dim_before: h.dim(),
        dim_after: h_next.dim(),
        eliminated: h.basis()[elim],
        anchor: config.anchor_index,
        g_before: h.g(),
        g_after: g_next,
        build,
        discriminant: choice.discriminant,
        roots: choice.roots,
        chosen_root_index: choice.chosen_index,
        residual,
        residual_tol,
        spectrum_after: es_next.lowest(config.m_track),
        lambda1_target,
        lambda1_target_next,
    };
    Ok((h_next, es_next, step))
}

/// Eliminates one basis state from `h`, renormalising `g` so that
/// `lambda1_target` stays an eigenvalue of the projected problem.
pub fn reduction_step(
    h: &Hamiltonian,
    lambda1_target: f64,
    config: &FlowConfig,
) -> Result<(Hamiltonian, FlowStep)> {
    let es = eigen_decompose(&h.full_matrix()).map_err(|e| e.at_step(h.dim()))?;
    step_with(h, &es, lambda1_target, config)
        .map(|(h_next, _, step)| (h_next, step))
        .map_err(|e| e.at_step(h.dim()))
}

/// Reduces `h0` one state at a time down to `config.n_min`.
///
/// Invalid inputs are returned as errors. A step that fails ends the flow;
/// the partial trace is returned with the reason in `termination`.
pub fn run_flow(h0: &Hamiltonian, config: &FlowConfig) -> Result<FlowTrace> {
    config.validate()?;
    if h0.dim() <= config.n_min {
        return Err(Error::InvalidConfig(format!(
            "dimension {} must exceed n_min = {}",
            h0.dim(),
            config.n_min
        )));
    }
    if h0.position_of(config.anchor_index).is_none() {
        return Err(Error::InvalidConfig(format!(
            "anchor state {} is not in the basis",
            config.anchor_index
        )));
    }

    let es0 = eigen_decompose(&h0.full_matrix())?;
    let mut trace = FlowTrace {
        model: None,
        config: config.clone(),
        initial_dim: h0.dim(),
        initial_g: h0.g(),
        initial_spectrum: es0.lowest(config.m_track),
        steps: Vec::with_capacity(h0.dim() - config.n_min),
        termination: Termination::Completed,
    };

    let mut target = es0.values()[0];
    let mut h = h0.clone();
    let mut es = es0;
    while h.dim() > config.n_min {
        match step_with(&h, &es, target, config) {
            Ok((h_next, es_next, step)) => {
                target = step.lambda1_target_next;
                trace.steps.push(step);
                h = h_next;
                es = es_next;
            }
            Err(e) => {
                trace.termination = Termination::Failed {
                    dimension: h.dim(),
                    kind: e.kind().to_string(),
                    message: e.at_step(h.dim()).to_string(),
                };
                break;
            }
        }
    }
    Ok(trace)
}

/// Builds the model described by `spec` and runs the flow, recording the
/// model in the trace.
pub fn run_model_flow(spec: &ModelSpec, config: &FlowConfig) -> Result<FlowTrace> {
    let h0 = spec.build()?;
    let mut trace = run_flow(&h0, config)?;
    trace.model = Some(spec.resolved(&h0));
    Ok(trace)
}

/// Per-step change of the coupling, `(dimension after the step, g_after - g_before)`.
pub fn flow_derivative(trace: &FlowTrace) -> Vec<(usize, f64)> {
    trace.steps.iter().map(|s| (s.dim_after, s.delta_g())).collect()
}

impl Error {
    /// Stable short name used in serialised traces.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDimension { .. } => "invalid_dimension",
            Error::Shape(_) => "shape",
            Error::NotSymmetric { .. } => "not_symmetric",
            Error::NonFinite { .. } => "non_finite",
            Error::NoConvergence { .. } => "no_convergence",
            Error::DegenerateAnchor { .. } => "degenerate_anchor",
            Error::ComplexRoots { .. } => "complex_roots",
            Error::NoSolution { .. } => "no_solution",
            Error::NearSingularDenominator { .. } => "near_singular_denominator",
            Error::ResidualTooLarge { .. } => "residual_too_large",
            Error::UnsortedSpectrum { .. } => "unsorted_spectrum",
            Error::InvalidConfig(_) => "invalid_config",
            Error::ModelFile { .. } => "model_file",
            Error::AtStep { source, .. } => source.kind(),
        }
    }
}

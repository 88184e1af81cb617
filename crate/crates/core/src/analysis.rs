//! Diagnostics over flow traces: fixed points of the coupling, spectral
//! degeneracies, low-spectrum drift and anchor overlap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowTrace;

pub const DEFAULT_FIXED_POINT_TOL: f64 = 1e-6;
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlaggedStep {
    /// Dimension after the step.
    pub dimension: usize,
    pub g: f64,
    pub abs_delta_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub flagged_steps: Vec<FlaggedStep>,
    pub is_global_fixed_point: bool,
    pub tolerance_used: f64,
}

/// Flags every step whose coupling moved by at most
/// `rel_tol * max(1, |g_before|)`.
pub fn detect_fixed_points(trace: &FlowTrace, rel_tol: f64) -> FixedPointReport {
    let flagged_steps: Vec<FlaggedStep> = trace
        .steps
        .iter()
        .filter(|s| s.delta_g().abs() <= rel_tol * s.g_before.abs().max(1.0))
        .map(|s| FlaggedStep {
            dimension: s.dim_after,
            g: s.g_after,
            abs_delta_g: s.delta_g().abs(),
        })
        .collect();
    FixedPointReport {
        is_global_fixed_point: !trace.steps.is_empty() && flagged_steps.len() == trace.steps.len(),
        flagged_steps,
        tolerance_used: rel_tol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegeneratePair {
    pub i: usize,
    pub j: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    /// Every pair `i < j` with `|lambda_j - lambda_i|` within the threshold.
    pub pairs: Vec<DegeneratePair>,
    /// Runs of levels chained by adjacent gaps within the threshold.
    pub multiplets: Vec<Vec<usize>>,
    pub gap_tolerance: f64,
    /// Absolute threshold, `gap_tolerance * max(1, max |lambda|)`.
    pub threshold: f64,
}

impl DegeneracyReport {
    /// The multiplet containing level `k`, if any.
    pub fn multiplet_of(&self, k: usize) -> Option<&[usize]> {
        self.multiplets.iter().find(|m| m.contains(&k)).map(Vec::as_slice)
    }
}

pub fn detect_degeneracies(spectrum: &[f64], rel_tol: f64) -> Result<DegeneracyReport> {
    for (k, w) in spectrum.windows(2).enumerate() {
        if !(w[0] <= w[1]) {
            return Err(Error::UnsortedSpectrum { index: k + 1 });
        }
    }
    let scale = spectrum.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let threshold = rel_tol * scale;

    let mut pairs = Vec::new();
    for i in 0..spectrum.len() {
        for j in (i + 1)..spectrum.len() {
            let gap = spectrum[j] - spectrum[i];
            if gap > threshold {
                break;
            }
            pairs.push(DegeneratePair { i, j, gap });
        }
    }

    let mut multiplets: Vec<Vec<usize>> = Vec::new();
    let mut current = vec![0];
    for k in 1..spectrum.len() {
        if spectrum[k] - spectrum[k - 1] <= threshold {
            current.push(k);
        } else {
            if current.len() > 1 {
                multiplets.push(std::mem::take(&mut current));
            }
            current = vec![k];
        }
    }
    if current.len() > 1 {
        multiplets.push(current);
    }

    Ok(DegeneracyReport {
        pairs,
        multiplets,
        gap_tolerance: rel_tol,
        threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub dimension: usize,
    /// `lambda_k(dimension) - lambda_k(N)` for each tracked level.
    pub drift: Vec<f64>,
    pub max_relative_drift: f64,
}

pub fn spectrum_drift(trace: &FlowTrace) -> Vec<DriftRow> {
    let reference = &trace.initial_spectrum;
    trace
        .steps
        .iter()
        .map(|s| {
            let drift: Vec<f64> = s
                .spectrum_after
                .iter()
                .zip(reference)
                .map(|(now, then)| now - then)
                .collect();
            let max_relative_drift = drift
                .iter()
                .zip(reference)
                .map(|(d, r)| d.abs() / r.abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            DriftRow {
                dimension: s.dim_after,
                drift,
                max_relative_drift,
            }
        })
        .collect()
}

/// `(dimension before the step, |a_11|)` for every completed step.
pub fn anchor_overlap_profile(trace: &FlowTrace) -> Vec<(usize, f64)> {
    trace
        .steps
        .iter()
        .map(|s| (s.dim_before, s.build.a11.abs()))
        .collect()
}

/// A fixed point of the coupling flow that coincides with a degenerate
/// ground level of the reduced spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalFixedPoint {
    pub fixed_points: FixedPointReport,
    pub final_degeneracies: DegeneracyReport,
    pub ground_multiplicity: usize,
    pub exceptional: bool,
}

pub fn classify_fixed_point(
    trace: &FlowTrace,
    fixed_tol: f64,
    degeneracy_tol: f64,
) -> Result<ExceptionalFixedPoint> {
    let fixed_points = detect_fixed_points(trace, fixed_tol);
    let spectrum = trace
        .spectrum_at(trace.final_dim())
        .unwrap_or(&trace.initial_spectrum);
    let final_degeneracies = detect_degeneracies(spectrum, degeneracy_tol)?;
    let ground_multiplicity = final_degeneracies.multiplet_of(0).map_or(1, <[usize]>::len);
    Ok(ExceptionalFixedPoint {
        exceptional: fixed_points.is_global_fixed_point && ground_multiplicity > 1,
        fixed_points,
        final_degeneracies,
        ground_multiplicity,
    })
}

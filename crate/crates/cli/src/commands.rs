use std::cmp::Ordering;
use std::fmt::Write as _;

use anyhow::{Context, Result};
use hilbert_rg::{
    classify_fixed_point, detect_fixed_points, eigen_decompose, run_model_flow, FlowConfig, FlowTrace,
    ModelKind, ModelSpec, Termination,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{OutputFormat, RunConfig};
use crate::output::{fmt_real, spectrum_csv, to_json, trace_csv, trace_summary};
use crate::table1::{self, Table1Report, Verdict};

/// Result of a subcommand: `data` in the requested format, a human-readable
/// `summary`, and whether the run counts as successful.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub data: String,
    pub summary: String,
    pub success: bool,
}

fn termination_line(trace: &FlowTrace) -> String {
    match &trace.termination {
        Termination::Completed => format!("completed at dimension {}\n", trace.final_dim()),
        Termination::Failed { message, .. } => format!("flow terminated: {message}\n"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub model: ModelSpec,
    pub eigenvalues: Vec<f64>,
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let h = cfg.model.build()?;
    let es = eigen_decompose(&h.full_matrix())?;
    let m = if cfg.track_explicit { cfg.flow.m_track } else { 5 };
    let report = SpectrumReport {
        model: cfg.model.resolved(&h),
        eigenvalues: es.lowest(m),
    };
    let data = match cfg.output_format {
        OutputFormat::Csv => spectrum_csv(&report.eigenvalues)?,
        OutputFormat::Json => to_json(&report)?,
    };
    let mut summary = String::new();
    for (k, v) in report.eigenvalues.iter().enumerate() {
        writeln!(summary, "lambda_{} = {v:.6}", k + 1)?;
    }
    Ok(Outcome {
        data,
        summary,
        success: true,
    })
}

pub fn render_trace(trace: &FlowTrace, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => trace_csv(trace),
        OutputFormat::Json => to_json(trace),
    }
}

pub fn cmd_flow(cfg: &RunConfig) -> Result<Outcome> {
    let trace = run_model_flow(&cfg.model, &cfg.flow)?;
    Ok(Outcome {
        data: render_trace(&trace, cfg.output_format)?,
        summary: trace_summary(&trace) + &termination_line(&trace),
        success: trace.is_complete(),
    })
}

fn table1_csv(report: &Table1Report) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "mode",
        "N",
        "g0",
        "n",
        "quantity",
        "published",
        "computed",
        "deviation",
        "tolerance",
        "pass",
    ])?;
    for mode in &report.modes {
        for flow in &mode.flows {
            for row in &flow.rows {
                for c in &row.cells {
                    w.write_record([
                        mode.mode.to_string(),
                        flow.n_initial.to_string(),
                        fmt_real(flow.g0),
                        row.n.to_string(),
                        c.quantity.clone(),
                        fmt_real(c.published),
                        c.computed.map(fmt_real).unwrap_or_default(),
                        c.deviation.map(fmt_real).unwrap_or_default(),
                        fmt_real(c.tolerance),
                        c.pass.to_string(),
                    ])?;
                }
            }
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn table1_text(report: &Table1Report) -> String {
    let mut out = String::new();
    for mode in &report.modes {
        let _ = writeln!(out, "== target mode: {} -> {}", mode.mode, mode.verdict);
        for flow in &mode.flows {
            let _ = writeln!(out, "-- N = {}, g0 = {}", flow.n_initial, flow.g0);
            let _ = writeln!(
                out,
                "{:>4} {:>9} {:>10} {:>12} {:>11} {:>9}",
                "n", "quantity", "published", "computed", "deviation", "status"
            );
            for row in &flow.rows {
                for c in &row.cells {
                    let computed = c.computed.map_or("-".to_string(), |v| format!("{v:.5}"));
                    let deviation = c.deviation.map_or("-".to_string(), |v| format!("{v:+.5}"));
                    let _ = writeln!(
                        out,
                        "{:>4} {:>9} {:>10} {:>12} {:>11} {:>9}",
                        row.n,
                        c.quantity,
                        c.published,
                        computed,
                        deviation,
                        if c.pass { "ok" } else { "MISS" }
                    );
                }
            }
            let q = &flow.qualitative;
            let _ = writeln!(
                out,
                "   first step stationary: {}, g decreasing per step: {}, across rows: {}, \
                 lambda_1 drift {} (published {:.4}): {}",
                q.first_step_stationary,
                q.steps_decreasing,
                q.rows_decreasing,
                q.drift_computed.map_or("-".to_string(), |d| format!("{d:.4}")),
                q.drift_published,
                q.drift_ok
            );
        }
    }
    let passing = report.passing_modes();
    let _ = writeln!(
        out,
        "overall: {} (passing modes: {})",
        report.best_verdict(),
        if passing.is_empty() {
            "none".to_string()
        } else {
            passing
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(", ")
        }
    );
    out
}

pub fn cmd_table1(format: OutputFormat) -> Result<Outcome> {
    let report = table1::run_table1()?;
    let data = match format {
        OutputFormat::Csv => table1_csv(&report)?,
        OutputFormat::Json => to_json(&report)?,
    };
    Ok(Outcome {
        data,
        summary: table1_text(&report),
        success: report.best_verdict() != Verdict::Fail,
    })
}

/// Relative tolerance for the degenerate-model regression.
pub const FIXED_POINT_REL_TOL: f64 = 1e-8;
pub const FIXED_POINT_SIZES: [usize; 4] = [5, 10, 20, 50];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointRow {
    pub n_initial: usize,
    pub n_min: usize,
    pub steps: usize,
    pub g0: f64,
    pub expected_ground: f64,
    pub max_rel_g_deviation: f64,
    pub max_rel_ground_deviation: f64,
    pub global_fixed_point: bool,
    pub ground_multiplicity: usize,
    pub expected_multiplicity: usize,
    pub termination: Termination,
    pub pass: bool,
}

pub fn fixed_point_row(
    spec: &ModelSpec,
    base: &FlowConfig,
    fixed_tol: f64,
    degen_tol: f64,
) -> Result<FixedPointRow> {
    let n_min = if spec.n > base.n_min { base.n_min } else { 2 };
    let config = FlowConfig {
        n_min,
        m_track: n_min,
        ..base.clone()
    };
    let trace = run_model_flow(spec, &config)?;
    let g0 = trace.initial_g;
    let scale = g0.abs().max(f64::MIN_POSITIVE);
    let expected_ground = g0 * (spec.diag_val - spec.offdiag_val);
    let max_rel_g_deviation = trace
        .steps
        .iter()
        .map(|s| (s.g_after - g0).abs() / scale)
        .fold(0.0, f64::max);
    let max_rel_ground_deviation = trace
        .steps
        .iter()
        .map(|s| (s.spectrum_after[0] - expected_ground).abs() / expected_ground.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let class = classify_fixed_point(&trace, fixed_tol, degen_tol)?;
    let expected_multiplicity = n_min - 1;
    let pass = trace.is_complete()
        && max_rel_g_deviation <= FIXED_POINT_REL_TOL
        && max_rel_ground_deviation <= FIXED_POINT_REL_TOL
        && class.fixed_points.is_global_fixed_point
        && class.ground_multiplicity == expected_multiplicity;
    Ok(FixedPointRow {
        n_initial: trace.initial_dim,
        n_min,
        steps: trace.steps.len(),
        g0,
        expected_ground,
        max_rel_g_deviation,
        max_rel_ground_deviation,
        global_fixed_point: class.fixed_points.is_global_fixed_point,
        ground_multiplicity: class.ground_multiplicity,
        expected_multiplicity,
        termination: trace.termination,
        pass,
    })
}

/// Degenerate-model regression over `sizes` (the published sizes unless the
/// caller gave `--n`).
pub fn cmd_fixedpoint(cfg: &RunConfig, sizes: &[usize]) -> Result<Outcome> {
    let rows = sizes
        .iter()
        .map(|&n| {
            let spec = ModelSpec {
                kind: ModelKind::DegenerateFixedPoint,
                n,
                ..cfg.model.clone()
            };
            fixed_point_row(
                &spec,
                &cfg.flow,
                cfg.analysis.fixed_point_tol,
                cfg.analysis.degeneracy_tol,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let data = match cfg.output_format {
        OutputFormat::Json => to_json(&rows)?,
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "N",
                "n_min",
                "steps",
                "g0",
                "expected_ground",
                "max_rel_g_deviation",
                "max_rel_ground_deviation",
                "global_fixed_point",
                "ground_multiplicity",
                "pass",
            ])?;
            for r in &rows {
                w.write_record([
                    r.n_initial.to_string(),
                    r.n_min.to_string(),
                    r.steps.to_string(),
                    fmt_real(r.g0),
                    fmt_real(r.expected_ground),
                    fmt_real(r.max_rel_g_deviation),
                    fmt_real(r.max_rel_ground_deviation),
                    r.global_fixed_point.to_string(),
                    r.ground_multiplicity.to_string(),
                    r.pass.to_string(),
                ])?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };

    let mut summary = String::new();
    for r in &rows {
        writeln!(
            summary,
            "N = {:>3} -> {}: max |dg|/g = {:.2e}, max |dlambda_1|/|lambda_1| = {:.2e}, \
             fixed point: {}, ground multiplicity {} (expected {}) => {}",
            r.n_initial,
            r.n_min,
            r.max_rel_g_deviation,
            r.max_rel_ground_deviation,
            r.global_fixed_point,
            r.ground_multiplicity,
            r.expected_multiplicity,
            if r.pass { "PASS" } else { "FAIL" }
        )?;
    }
    Ok(Outcome {
        data,
        summary,
        success: rows.iter().all(|r| r.pass),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub models: Vec<ModelKind>,
    pub sizes: Vec<usize>,
    pub couplings: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub g: f64,
    pub lambda_1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub model: ModelKind,
    pub n_initial: usize,
    pub g0: f64,
    pub status: String,
    pub global_fixed_point: bool,
    pub rows: Vec<SweepRow>,
}

impl SweepPoint {
    pub fn ok(&self) -> bool {
        self.status == "completed"
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        self.model
            .cmp(&other.model)
            .then(self.n_initial.cmp(&other.n_initial))
            .then(self.g0.total_cmp(&other.g0))
    }
}

fn sweep_point(spec: ModelSpec, cfg: &RunConfig) -> SweepPoint {
    let mut point = SweepPoint {
        model: spec.kind,
        n_initial: spec.n,
        g0: spec.g0,
        status: String::new(),
        global_fixed_point: false,
        rows: Vec::new(),
    };
    match run_model_flow(&spec, &cfg.flow) {
        Ok(trace) => {
            point.global_fixed_point =
                detect_fixed_points(&trace, cfg.analysis.fixed_point_tol).is_global_fixed_point;
            point.rows.push(SweepRow {
                n: trace.initial_dim,
                g: trace.initial_g,
                lambda_1: trace.initial_spectrum[0],
            });
            point.rows.extend(trace.steps.iter().map(|s| SweepRow {
                n: s.dim_after,
                g: s.g_after,
                lambda_1: s.spectrum_after[0],
            }));
            point.status = match &trace.termination {
                Termination::Completed => "completed".into(),
                Termination::Failed { kind, dimension, .. } => format!("failed at {dimension}: {kind}"),
            };
        }
        Err(e) => point.status = format!("error: {e}"),
    }
    point
}

pub fn run_sweep(cfg: &RunConfig, grid: &SweepGrid) -> Result<Vec<SweepPoint>> {
    let mut specs = Vec::new();
    for &kind in &grid.models {
        for &n in &grid.sizes {
            for &g0 in &grid.couplings {
                specs.push(ModelSpec {
                    kind,
                    n,
                    g0,
                    ..cfg.model.clone()
                });
            }
        }
    }
    anyhow::ensure!(!specs.is_empty(), "sweep grid is empty");

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .context("starting sweep workers")?;
    let mut points: Vec<SweepPoint> =
        pool.install(|| specs.into_par_iter().map(|spec| sweep_point(spec, cfg)).collect());
    points.sort_by(SweepPoint::key_cmp);
    Ok(points)
}

pub fn cmd_sweep(cfg: &RunConfig, grid: &SweepGrid) -> Result<Outcome> {
    let points = run_sweep(cfg, grid)?;
    let data = match cfg.output_format {
        OutputFormat::Json => to_json(&points)?,
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "model",
                "N",
                "g0",
                "n",
                "g",
                "lambda_1",
                "global_fixed_point",
                "status",
            ])?;
            for p in &points {
                let head = [p.model.to_string(), p.n_initial.to_string(), fmt_real(p.g0)];
                let tail = [p.global_fixed_point.to_string(), p.status.clone()];
                if p.rows.is_empty() {
                    w.write_record(
                        head.iter()
                            .chain(&[String::new(), String::new(), String::new()])
                            .chain(&tail),
                    )?;
                }
                for r in &p.rows {
                    let mid = [r.n.to_string(), fmt_real(r.g), fmt_real(r.lambda_1)];
                    w.write_record(head.iter().chain(&mid).chain(&tail))?;
                }
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    let mut summary = String::new();
    for p in &points {
        let last = p.rows.last();
        writeln!(
            summary,
            "{} N = {} g0 = {}: {} (final n = {}, g = {}, fixed point: {})",
            p.model,
            p.n_initial,
            p.g0,
            p.status,
            last.map_or("-".into(), |r| r.n.to_string()),
            last.map_or("-".into(), |r| format!("{:.5}", r.g)),
            p.global_fixed_point
        )?;
    }
    Ok(Outcome {
        data,
        summary,
        success: points.iter().all(SweepPoint::ok),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CommonArgs;

    fn cfg(args: CommonArgs) -> RunConfig {
        RunConfig::resolve(&args).unwrap()
    }

    #[test]
    fn spectrum_of_identity_like_chain() {
        let c = cfg(CommonArgs {
            n: Some(6),
            gamma: Some(0.0),
            beta: Some(1.0),
            g0: Some(2.0),
            format: Some(OutputFormat::Json),
            ..Default::default()
        });
        let out = cmd_spectrum(&c).unwrap();
        let report: SpectrumReport = serde_json::from_str(&out.data).unwrap();
        assert_eq!(report.eigenvalues, vec![2.0; 5]);
    }

    #[test]
    fn spectrum_of_degenerate_model() {
        let c = cfg(CommonArgs {
            model: Some(crate::config::ModelArg::Degenerate),
            n: Some(5),
            g0: Some(20.0),
            format: Some(OutputFormat::Json),
            ..Default::default()
        });
        let report: SpectrumReport = serde_json::from_str(&cmd_spectrum(&c).unwrap().data).unwrap();
        for (got, want) in report.eigenvalues.iter().zip([-20.0, -20.0, -20.0, -20.0, 30.0]) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn one_step_flow() {
        let c = cfg(CommonArgs {
            n: Some(8),
            n_min: Some(7),
            ..Default::default()
        });
        let out = cmd_flow(&c).unwrap();
        assert!(out.success);
        assert_eq!(out.data.lines().count(), 3);
    }

    #[test]
    fn fixedpoint_regression_passes() {
        let c = cfg(CommonArgs::default());
        let out = cmd_fixedpoint(&c, &FIXED_POINT_SIZES).unwrap();
        assert!(out.success, "{}", out.summary);
    }

    #[test]
    fn sweep_records_failures_and_continues() {
        let c = cfg(CommonArgs::default());
        let grid = SweepGrid {
            models: vec![ModelKind::TightBinding, ModelKind::DegenerateFixedPoint],
            sizes: vec![4, 10],
            couplings: vec![20.0, 1.0],
        };
        let points = run_sweep(&c, &grid).unwrap();
        assert_eq!(points.len(), 8);
        let bad: Vec<_> = points.iter().filter(|p| !p.ok()).collect();
        assert_eq!(bad.len(), 4);
        assert!(bad
            .iter()
            .all(|p| p.n_initial == 4 && p.status.starts_with("error")));
        let deg = points
            .iter()
            .find(|p| p.model == ModelKind::DegenerateFixedPoint && p.n_initial == 10 && p.g0 == 20.0)
            .unwrap();
        assert!(deg.global_fixed_point);
        assert!(points.windows(2).all(|w| w[0].key_cmp(&w[1]) == Ordering::Less));
    }
}

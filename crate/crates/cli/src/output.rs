//! CSV and JSON renderings of spectra, traces and reports.
//!
//! CSV is UTF-8, comma-separated with a header row; reals carry 17
//! significant digits so every value parses back to the same `f64`. JSON
//! uses the shortest round-trip representation.

use anyhow::Result;
use hilbert_rg::FlowTrace;
use serde::Serialize;

pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_string(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn spectrum_csv(values: &[f64]) -> Result<String> {
    let header = vec!["index".to_string(), "eigenvalue".to_string()];
    csv_string(
        &header,
        values
            .iter()
            .enumerate()
            .map(|(k, v)| vec![(k + 1).to_string(), fmt_real(*v)]),
    )
}

/// Column names of a trace table tracking `m` eigenvalues.
pub fn trace_header(m: usize) -> Vec<String> {
    let mut h = vec!["dimension".to_string(), "g".to_string()];
    h.extend((1..=m).map(|k| format!("lambda_{k}")));
    h.extend(["discriminant", "residual", "chosen_root", "other_root"].map(String::from));
    h
}

/// One row for the initial space, then one per step. Step-only columns are
/// empty on the initial row, as are eigenvalues beyond the current dimension.
pub fn trace_csv(trace: &FlowTrace) -> Result<String> {
    let m = trace.config.m_track;
    let spectrum_cols = |s: &[f64]| (0..m).map(|k| fmt_opt(s.get(k).copied())).collect::<Vec<_>>();

    let mut rows = Vec::with_capacity(trace.steps.len() + 1);
    let mut first = vec![trace.initial_dim.to_string(), fmt_real(trace.initial_g)];
    first.extend(spectrum_cols(&trace.initial_spectrum));
    first.extend(std::iter::repeat_n(String::new(), 4));
    rows.push(first);
    for s in &trace.steps {
        let mut r = vec![s.dim_after.to_string(), fmt_real(s.g_after)];
        r.extend(spectrum_cols(&s.spectrum_after));
        r.push(fmt_real(s.discriminant));
        r.push(fmt_real(s.residual));
        r.push(fmt_real(s.g_after));
        r.push(fmt_opt(s.other_root()));
        rows.push(r);
    }
    csv_string(&trace_header(m), rows)
}

/// Fixed-width table of dimension, coupling and the low spectrum.
pub fn trace_summary(trace: &FlowTrace) -> String {
    let m = trace.config.m_track.min(5);
    let mut out = format!("{:>5} {:>12}", "n", "g");
    for k in 1..=m {
        out += &format!(" {:>12}", format!("lambda_{k}"));
    }
    out.push('\n');
    let mut line = |n: usize, g: f64, s: &[f64]| {
        out += &format!("{n:>5} {g:>12.5}");
        for v in s.iter().take(m) {
            out += &format!(" {v:>12.5}");
        }
        out.push('\n');
    };
    line(trace.initial_dim, trace.initial_g, &trace.initial_spectrum);
    for s in &trace.steps {
        line(s.dim_after, s.g_after, &s.spectrum_after);
    }
    out
}

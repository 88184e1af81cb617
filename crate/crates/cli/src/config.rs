//! Run configuration: built-in defaults, overridden by an optional TOML file,
//! overridden in turn by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use hilbert_rg::analysis::{DEFAULT_DEGENERACY_TOL, DEFAULT_FIXED_POINT_TOL};
use hilbert_rg::{EliminationOrder, FlowConfig, ModelKind, ModelSpec, TargetMode};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    TightBinding,
    Degenerate,
    Custom,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::TightBinding => ModelKind::TightBinding,
            ModelArg::Degenerate => ModelKind::DegenerateFixedPoint,
            ModelArg::Custom => ModelKind::Custom,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Running,
    Frozen,
}

impl From<ModeArg> for TargetMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Running => TargetMode::Running,
            ModeArg::Frozen => TargetMode::Frozen,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    HighestIndex,
    HighestEps,
}

impl From<OrderArg> for EliminationOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::HighestIndex => EliminationOrder::HighestIndexFirst,
            OrderArg::HighestEps => EliminationOrder::HighestEpsFirst,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisTolerances {
    pub fixed_point_tol: f64,
    pub degeneracy_tol: f64,
}

impl Default for AnalysisTolerances {
    fn default() -> Self {
        Self {
            fixed_point_tol: DEFAULT_FIXED_POINT_TOL,
            degeneracy_tol: DEFAULT_DEGENERACY_TOL,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub format: OutputFormat,
    pub path: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// Layout of the `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub model: ModelSpec,
    pub flow: FlowConfig,
    pub analysis: AnalysisTolerances,
    pub output: OutputSection,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Whether the file sets `flow.m_track` itself.
    fn sets_track(text: &str) -> bool {
        toml::from_str::<toml::Table>(text)
            .ok()
            .and_then(|t| t.get("flow").and_then(|f| f.get("m_track")).cloned())
            .is_some()
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with [model], [flow], [analysis] and [output] sections
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// JSON model file for `--model custom`
    #[arg(long, value_name = "FILE")]
    pub source: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub g0: Option<f64>,
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Number of low eigenvalues to record
    #[arg(long)]
    pub track: Option<usize>,
    /// Original basis label of the anchor state (0-based)
    #[arg(long)]
    pub anchor: Option<usize>,
    #[arg(long, value_enum)]
    pub order: Option<OrderArg>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Relative tolerance on |dg| for fixed-point detection
    #[arg(long)]
    pub fixed_tol: Option<f64>,
    /// Relative gap tolerance for degeneracy detection
    #[arg(long)]
    pub degen_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub flow: FlowConfig,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
    pub analysis: AnalysisTolerances,
    pub workers: usize,
    /// Whether `m_track` was set explicitly (file or flag).
    pub track_explicit: bool,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> anyhow::Result<Self> {
        let (file, track_in_file) = match &args.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let file = ConfigFile::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
                (file, ConfigFile::sets_track(&text))
            }
            None => (ConfigFile::default(), false),
        };

        let mut model = file.model;
        if let Some(m) = args.model {
            model.kind = m.into();
        }
        if let Some(p) = &args.source {
            model.source_path = Some(p.clone());
        }
        if let Some(n) = args.n {
            model.n = n;
        }
        if let Some(b) = args.beta {
            model.beta = b;
        }
        if let Some(g) = args.gamma {
            model.gamma = g;
        }
        if let Some(g) = args.g0 {
            model.g0 = g;
        }

        let mut flow = file.flow;
        if let Some(n) = args.n_min {
            flow.n_min = n;
        }
        if let Some(m) = args.mode {
            flow.target_mode = m.into();
        }
        if let Some(t) = args.track {
            flow.m_track = t;
        }
        if let Some(a) = args.anchor {
            flow.anchor_index = a;
        }
        if let Some(o) = args.order {
            flow.elimination_order = o.into();
        }
        let track_explicit = track_in_file || args.track.is_some();
        if !track_explicit {
            flow.m_track = flow.m_track.min(flow.n_min).max(1);
        }

        let mut analysis = file.analysis;
        if let Some(t) = args.fixed_tol {
            analysis.fixed_point_tol = t;
        }
        if let Some(t) = args.degen_tol {
            analysis.degeneracy_tol = t;
        }

        let workers = args.workers.or(file.output.workers).unwrap_or(1);
        if workers == 0 {
            bail!("--workers must be at least 1");
        }

        Ok(Self {
            model,
            flow,
            output_format: args.format.unwrap_or(file.output.format),
            output_path: args.out.clone().or(file.output.path),
            analysis,
            workers,
            track_explicit,
        })
    }
}

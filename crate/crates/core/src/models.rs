//! Hamiltonians of the form `H = diag(eps) + g * H1` and the builders for the
//! tight-binding chain, the uniformly coupled degenerate model and
//! user-supplied matrices.

use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetry tolerance enforced on every stored `H1`.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Largest asymmetry `build_custom` will average away.
pub const SYMMETRISE_TOL: f64 = 1e-9;

/// `H = H0 + g * H1` in the eigenbasis of `H0`.
///
/// `H0` is stored through its diagonal `eps`. `basis` carries the original
/// label of every surviving basis state so that reduced Hamiltonians can be
/// related back to the full problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    eps: DVector<f64>,
    h1: DMatrix<f64>,
    g: f64,
    basis: Vec<usize>,
}

impl Hamiltonian {
    pub fn new(eps: DVector<f64>, h1: DMatrix<f64>, g: f64) -> Result<Self> {
        let basis = (0..eps.len()).collect();
        Self::with_basis(eps, h1, g, basis)
    }

    fn with_basis(eps: DVector<f64>, h1: DMatrix<f64>, g: f64, basis: Vec<usize>) -> Result<Self> {
        let n = eps.len();
        if n < 2 {
            return Err(Error::InvalidDimension { n, min: 2 });
        }
        if h1.nrows() != n || h1.ncols() != n {
            return Err(Error::Shape(format!(
                "h1 is {}x{}, eps has length {n}",
                h1.nrows(),
                h1.ncols()
            )));
        }
        if !g.is_finite() {
            return Err(Error::InvalidConfig(format!("coupling g = {g} is not finite")));
        }
        if let Some(i) = eps.iter().position(|e| !e.is_finite()) {
            return Err(Error::NonFinite { row: i, col: i });
        }
        check_symmetric(&h1, SYMMETRY_TOL)?;
        Ok(Self { eps, h1, g, basis })
    }

    pub fn dim(&self) -> usize {
        self.eps.len()
    }

    pub fn eps(&self) -> &DVector<f64> {
        &self.eps
    }

    pub fn h1(&self) -> &DMatrix<f64> {
        &self.h1
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    /// Original labels of the surviving basis states.
    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    /// Position of original basis label `label`, if it survives.
    pub fn position_of(&self, label: usize) -> Option<usize> {
        self.basis.iter().position(|&b| b == label)
    }

    /// `diag(eps) + g * h1`.
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let mut m = &self.h1 * self.g;
        for (i, e) in self.eps.iter().enumerate() {
            m[(i, i)] += e;
        }
        m
    }

    pub fn with_coupling(&self, g: f64) -> Self {
        Self { g, ..self.clone() }
    }

    /// Drops basis state `index` (a position, not a label) and sets the new
    /// coupling. The surviving `eps` and `h1` entries are copied verbatim.
    pub fn eliminate(&self, index: usize, g: f64) -> Result<Self> {
        let n = self.dim();
        if index >= n {
            return Err(Error::Shape(format!("cannot eliminate state {index} of {n}")));
        }
        let eps = self.eps.clone().remove_row(index);
        let h1 = self.h1.clone().remove_row(index).remove_column(index);
        let mut basis = self.basis.clone();
        basis.remove(index);
        Self::with_basis(eps, h1, g, basis)
    }
}

fn check_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = (m[(i, j)] - m[(j, i)]).abs();
            if diff > tol * m[(i, j)].abs().max(1.0) {
                return Err(Error::NotSymmetric { row: i, col: j, diff });
            }
        }
    }
    Ok(())
}

/// Uniform tridiagonal chain with `H0 = 0`: `beta` on the diagonal and
/// `gamma` between nearest neighbours.
pub fn build_tight_binding(n: usize, beta: f64, gamma: f64, g0: f64) -> Result<Hamiltonian> {
    if n < 2 {
        return Err(Error::InvalidDimension { n, min: 2 });
    }
    let h1 = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => beta,
        1 => gamma,
        _ => 0.0,
    });
    Hamiltonian::new(DVector::zeros(n), h1, g0)
}

/// `H0 = 0`, every diagonal element of `H1` equal to `diag` and every
/// off-diagonal element equal to `offdiag`.
pub fn build_uniform_coupled(n: usize, diag: f64, offdiag: f64, g0: f64) -> Result<Hamiltonian> {
    if n < 2 {
        return Err(Error::InvalidDimension { n, min: 2 });
    }
    let h1 = DMatrix::from_fn(n, n, |i, j| if i == j { diag } else { offdiag });
    Hamiltonian::new(DVector::zeros(n), h1, g0)
}

/// The degenerate fixed-point model: `H1[i][i] = -0.5`, `H1[i][j] = 0.5`.
///
/// The spectrum of `g * H1` is `-g` with multiplicity `n - 1` and
/// `g * (n - 2) / 2` once.
pub fn build_degenerate_fixed_point(n: usize, g0: f64) -> Result<Hamiltonian> {
    build_uniform_coupled(n, -0.5, 0.5, g0)
}

/// Validates user-supplied matrices. Asymmetries up to [`SYMMETRISE_TOL`] are
/// averaged away, larger ones are rejected.
pub fn build_custom(eps: &[f64], h1: &[Vec<f64>], g0: f64) -> Result<Hamiltonian> {
    let n = eps.len();
    if n < 2 {
        return Err(Error::InvalidDimension { n, min: 2 });
    }
    if h1.len() != n {
        return Err(Error::Shape(format!(
            "h1 has {} rows, eps has length {n}",
            h1.len()
        )));
    }
    for (i, row) in h1.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Shape(format!(
                "h1 row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
    }
    let raw = DMatrix::from_fn(n, n, |i, j| h1[i][j]);
    check_symmetric(&raw, SYMMETRISE_TOL)?;
    let sym = (&raw + raw.transpose()) * 0.5;
    Hamiltonian::new(DVector::from_column_slice(eps), sym, g0)
}

/// On-disk layout of a custom model (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomModelFile {
    pub eps: Vec<f64>,
    pub h1: Vec<Vec<f64>>,
    pub g0: f64,
}

impl CustomModelFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ModelFile {
            path: path.to_path_buf(),
            message: format!("line {}, column {}: {e}", e.line(), e.column()),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::ModelFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text, path)
    }

    pub fn build(&self) -> Result<Hamiltonian> {
        build_custom(&self.eps, &self.h1, self.g0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    TightBinding,
    DegenerateFixedPoint,
    Custom,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::TightBinding => "tight_binding",
            ModelKind::DegenerateFixedPoint => "degenerate_fixed_point",
            ModelKind::Custom => "custom",
        })
    }
}

/// Parameters describing which Hamiltonian to build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n: usize,
    pub beta: f64,
    pub gamma: f64,
    pub diag_val: f64,
    pub offdiag_val: f64,
    pub g0: f64,
    pub source_path: Option<PathBuf>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            kind: ModelKind::TightBinding,
            n: 10,
            beta: 1.0,
            gamma: 0.5,
            diag_val: -0.5,
            offdiag_val: 0.5,
            g0: 20.0,
            source_path: None,
        }
    }
}

impl ModelSpec {
    pub fn tight_binding(n: usize, beta: f64, gamma: f64, g0: f64) -> Self {
        Self {
            kind: ModelKind::TightBinding,
            n,
            beta,
            gamma,
            g0,
            ..Self::default()
        }
    }

    pub fn degenerate_fixed_point(n: usize, g0: f64) -> Self {
        Self {
            kind: ModelKind::DegenerateFixedPoint,
            n,
            g0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == ModelKind::Custom {
            if self.source_path.is_none() {
                return Err(Error::InvalidConfig("custom model requires a source path".into()));
            }
        } else if self.n < 2 {
            return Err(Error::InvalidDimension { n: self.n, min: 2 });
        }
        Ok(())
    }

    /// Builds the Hamiltonian. For custom models the file is read and `n`
    /// and `g0` are taken from it.
    pub fn build(&self) -> Result<Hamiltonian> {
        self.validate()?;
        match self.kind {
            ModelKind::TightBinding => build_tight_binding(self.n, self.beta, self.gamma, self.g0),
            ModelKind::DegenerateFixedPoint => {
                build_uniform_coupled(self.n, self.diag_val, self.offdiag_val, self.g0)
            }
            ModelKind::Custom => {
                // validate() guarantees the path
                let path = self.source_path.as_deref().unwrap_or(Path::new(""));
                CustomModelFile::load(path)?.build()
            }
        }
    }

    /// Copy of `self` with `n` and `g0` synchronised to a built Hamiltonian.
    pub fn resolved(&self, h: &Hamiltonian) -> Self {
        Self {
            n: h.dim(),
            g0: h.g(),
            ..self.clone()
        }
    }
}

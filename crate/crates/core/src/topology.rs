//! Communication graphs and doubly stochastic mixing matrices.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// Tolerance on row/column sums and symmetry.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Tolerance on spectral checks.
pub const SPECTRAL_TOL: f64 = 1e-10;

/// Undirected graph on `n` agents. Self-loops are always present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Topology {
    /// Builds a topology from undirected pairs. Both orientations and all
    /// self-loops are added. Disconnected graphs are rejected.
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTopology("graph needs at least one agent".into()));
        }
        let mut edges: BTreeSet<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
        for (i, j) in pairs {
            if i >= n || j >= n {
                return Err(Error::InvalidTopology(format!("edge ({i}, {j}) outside 0..{n}")));
            }
            edges.insert((i, j));
            edges.insert((j, i));
        }
        let topo = Self { n, edges };
        if !topo.is_connected() {
            return Err(Error::InvalidTopology("graph is disconnected".into()));
        }
        Ok(topo)
    }

    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidTopology(format!("ring needs n >= 3, got {n}")));
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|i| (0..n).map(move |j| (i, j))))
    }

    pub fn agents(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i, j))
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.range((i, 0)..(i + 1, 0)).map(|&(_, j)| j)
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in self.neighbors(i) {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Spectrum of a mixing matrix.
#[derive(Debug, Clone)]
pub struct SpectralProfile {
    /// Eigenvalues of `W`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors of `W` as columns, matching `eigenvalues`.
    pub eigenvectors: Matrix,
    /// `‖W − 𝟙𝟙ᵀ/n‖_op`.
    pub lambda: f64,
    /// Largest signed eigenvalue of `W` on the complement of `𝟙`.
    pub lambda_signed: f64,
    pub min_eig: f64,
    pub spectral_gap: f64,
}

/// Dense symmetric doubly stochastic matrix with a lazily computed spectrum.
#[derive(Debug)]
pub struct MixingMatrix {
    w: Matrix,
    profile: OnceLock<SpectralProfile>,
}

impl Clone for MixingMatrix {
    fn clone(&self) -> Self {
        Self {
            w: self.w.clone(),
            profile: self.profile.clone(),
        }
    }
}

impl MixingMatrix {
    /// Wraps a dense matrix after checking symmetry and double stochasticity.
    /// Assumption-level properties (positive diagonal, positive spectrum,
    /// connectivity) are reported by [`validate`], not enforced here.
    pub fn from_dense(w: Matrix) -> Result<Self> {
        if !w.is_square() || w.nrows() == 0 {
            return Err(Error::InvalidInput(format!(
                "mixing matrix must be square and non-empty, got {}x{}",
                w.nrows(),
                w.ncols()
            )));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("mixing matrix has non-finite entries".into()));
        }
        let residual = stochastic_residual(&w);
        if residual > STOCHASTIC_TOL {
            return Err(Error::InvalidInput(format!(
                "matrix is not symmetric doubly stochastic (residual {residual:e})"
            )));
        }
        Ok(Self {
            w,
            profile: OnceLock::new(),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            w: Matrix::identity(n, n),
            profile: OnceLock::new(),
        }
    }

    pub fn agents(&self) -> usize {
        self.w.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.w
    }

    pub fn topology(&self) -> Result<Topology> {
        let n = self.agents();
        Topology::new(
            n,
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| self.w[(i, j)] != 0.0),
        )
    }

    /// Computed once per matrix and shared afterwards.
    pub fn profile(&self) -> &SpectralProfile {
        self.profile.get_or_init(|| compute_profile(&self.w))
    }

    pub fn lambda(&self) -> f64 {
        self.profile().lambda
    }

    /// `(I − W)^{1/2}` from the eigen-decomposition. Values of
    /// `1 − eigenvalue` below the stochasticity tolerance (including negative
    /// roundoff) are clamped to zero so the consensus direction stays exact.
    pub fn sqrt_laplacian(&self) -> Matrix {
        let p = self.profile();
        let roots = Vector::from_iterator(
            p.eigenvalues.len(),
            p.eigenvalues.iter().map(|&mu| {
                let gap = 1.0 - mu;
                if gap <= STOCHASTIC_TOL {
                    0.0
                } else {
                    gap.sqrt()
                }
            }),
        );
        &p.eigenvectors * Matrix::from_diagonal(&roots) * p.eigenvectors.transpose()
    }

    /// CSV with one row per agent, entries at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.w.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the CSV form and rejects matrices that break the mixing-matrix
    /// invariants (symmetry, stochasticity, positive diagonal, connectivity).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::parse(format!("line {}", lineno + 1), e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("matrix CSV must have n rows of n values".into()));
        }
        let w = Matrix::from_fn(n, n, |i, j| rows[i][j]);
        let m = Self::from_dense(w)?;
        let report = validate(&m);
        for check in &report.checks {
            if check.name != CheckName::PositiveMinEigenvalue && !check.pass {
                return Err(Error::InvalidInput(format!(
                    "matrix fails check {} (residual {:e})",
                    check.name, check.residual
                )));
            }
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

fn stochastic_residual(w: &Matrix) -> f64 {
    let n = w.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        worst = worst.max((w.row(i).sum() - 1.0).abs());
        worst = worst.max((w.column(i).sum() - 1.0).abs());
        for j in 0..i {
            worst = worst.max((w[(i, j)] - w[(j, i)]).abs());
        }
    }
    worst
}

fn compute_profile(w: &Matrix) -> SpectralProfile {
    let n = w.nrows();
    let (eigenvalues, eigenvectors) = linalg::sorted_symmetric_eigen(w);
    // Shift the consensus direction to -2 so that it sorts first; every other
    // eigenvalue of a doubly stochastic matrix lies in [-1, 1].
    let shifted = w - Matrix::from_element(n, n, 3.0 / n as f64);
    let others = &linalg::symmetric_eigenvalues(&shifted)[1..];
    let lambda = others.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let lambda_signed = others.last().copied().unwrap_or(0.0);
    let min_eig = eigenvalues[0];
    SpectralProfile {
        eigenvalues,
        eigenvectors,
        lambda,
        lambda_signed,
        min_eig,
        spectral_gap: 1.0 - lambda,
    }
}

/// Cyclic ring: self weight 1/2, each neighbor 1/4.
pub fn build_ring(n: usize) -> Result<MixingMatrix> {
    Topology::ring(n)?;
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        w[(i, i)] = 0.5;
        w[(i, (i + 1) % n)] += 0.25;
        w[(i, (i + n - 1) % n)] += 0.25;
    }
    MixingMatrix::from_dense(w)
}

/// `W = 𝟙𝟙ᵀ/n`. Its spectrum is `{1, 0, …, 0}`, so it needs
/// [`lazy_transform`] before it has a positive smallest eigenvalue.
pub fn build_complete(n: usize) -> Result<MixingMatrix> {
    if n == 0 {
        return Err(Error::InvalidTopology("complete graph needs n >= 1".into()));
    }
    MixingMatrix::from_dense(Matrix::from_element(n, n, 1.0 / n as f64))
}

/// `(W + I) / 2`; maps each eigenvalue `μ` to `(μ + 1) / 2`.
pub fn lazy_transform(w: &MixingMatrix) -> Result<MixingMatrix> {
    let n = w.agents();
    MixingMatrix::from_dense((w.matrix() + Matrix::identity(n, n)) * 0.5)
}

pub fn spectral_profile(w: &MixingMatrix) -> SpectralProfile {
    w.profile().clone()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckName {
    PositiveDiagonal,
    DoublyStochastic,
    PositiveMinEigenvalue,
    Connectivity,
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckName::PositiveDiagonal => "positive_diagonal",
            CheckName::DoublyStochastic => "doubly_stochastic",
            CheckName::PositiveMinEigenvalue => "positive_min_eigenvalue",
            CheckName::Connectivity => "connectivity",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: CheckName,
    pub pass: bool,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: CheckName) -> &Check {
        self.checks.iter().find(|c| c.name == name).expect("every check is reported")
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "check={} pass={} residual={:.16e}", c.name, c.pass, c.residual)?;
        }
        Ok(())
    }
}

/// Reports each mixing-matrix requirement with its measured residual.
/// Never fails; a bad matrix simply gets failing checks.
pub fn validate(w: &MixingMatrix) -> ValidationReport {
    let m = w.matrix();
    let min_diag = m.diagonal().min();
    let stochastic = stochastic_residual(m);
    let profile = w.profile();
    ValidationReport {
        checks: vec![
            Check {
                name: CheckName::PositiveDiagonal,
                pass: min_diag > 0.0,
                residual: min_diag,
            },
            Check {
                name: CheckName::DoublyStochastic,
                pass: stochastic <= STOCHASTIC_TOL,
                residual: stochastic,
            },
            Check {
                name: CheckName::PositiveMinEigenvalue,
                pass: profile.min_eig > SPECTRAL_TOL,
                residual: profile.min_eig,
            },
            Check {
                name: CheckName::Connectivity,
                pass: profile.lambda < 1.0 - STOCHASTIC_TOL,
                residual: profile.lambda,
            },
        ],
    }
}

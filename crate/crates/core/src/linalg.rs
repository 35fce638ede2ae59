//! Small dense helpers on top of `nalgebra`.
//!
//! Agent parameters are stored as `n × d` matrices with one row per agent.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Mean of the rows, i.e. `Xᵀ𝟙/n`.
pub fn row_mean(x: &Matrix) -> Vector {
    let n = x.nrows() as f64;
    let mut out = Vector::zeros(x.ncols());
    for j in 0..x.ncols() {
        out[j] = x.column(j).sum() / n;
    }
    out
}

/// `X − 𝟙x̄ᵀ`, the consensus projector applied without materializing it.
pub fn demean_rows(x: &Matrix) -> Matrix {
    let mean = row_mean(x);
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        for j in 0..mean.len() {
            row[j] -= mean[j];
        }
    }
    out
}

/// `‖(I − 𝟙𝟙ᵀ/n) X‖²_F`.
pub fn consensus_sq(x: &Matrix) -> f64 {
    demean_rows(x).norm_squared()
}

pub fn row(x: &Matrix, i: usize) -> Vector {
    x.row(i).transpose()
}

pub fn set_row(x: &mut Matrix, i: usize, v: &Vector) {
    for j in 0..v.len() {
        x[(i, j)] = v[j];
    }
}

/// Matrix with every row equal to `v`.
pub fn broadcast_rows(n: usize, v: &Vector) -> Matrix {
    Matrix::from_fn(n, v.len(), |_, j| v[j])
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted ascending
/// and eigenvectors permuted to match.
pub fn sorted_symmetric_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(a.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn symmetric_eigenvalues(a: &Matrix) -> Vec<f64> {
    let mut v: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Largest singular value squared of `a`, i.e. `‖a‖²_op`.
pub fn op_norm_sq(a: &Matrix) -> f64 {
    let gram = a.transpose() * a;
    symmetric_eigenvalues(&gram).last().copied().unwrap_or(0.0).max(0.0)
}

//! Small dense linear-algebra kernels: symmetric eigenproblems, one-sided
//! Jacobi singular values, Gram-Schmidt.

use nalgebra::DMatrix;

use crate::covariance::SymmetricMatrix;
use crate::error::{MccaError, Result};
use crate::tensor::{dot, DenseMatrix};

/// Sweep cap for one-sided Jacobi; scaled by the dimension for the QR
/// iteration count of `sym_eig`.
pub const MAX_SWEEPS: usize = 100;

/// Eigenvalues in descending order with matching orthonormal eigenvectors
/// stored as columns.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl SymEigen {
    /// Leading `r` eigenvectors as a `P × r` matrix.
    pub fn top_vectors(&self, r: usize) -> DenseMatrix {
        self.vectors.leading_columns(r)
    }

    /// Sum of the leading `r` eigenvalues.
    pub fn top_sum(&self, r: usize) -> f64 {
        self.values.iter().take(r).sum()
    }

    /// True when eigenvalues `r-1` and `r` coincide to within `rel_tol` of
    /// the spectral scale, i.e. the top-`r` invariant subspace is not unique.
    pub fn boundary_degenerate(&self, r: usize, rel_tol: f64) -> bool {
        if r == 0 || r >= self.values.len() {
            return false;
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        scale > 0.0 && (self.values[r - 1] - self.values[r]).abs() <= rel_tol * scale
    }
}

/// Symmetric eigendecomposition (Householder tridiagonalization followed by
/// implicit QR, from `nalgebra`).
///
/// `tol` is the off-diagonal convergence threshold relative to the adjacent
/// diagonal entries, floored at machine epsilon. Eigenvalues are sorted
/// descending (stable for ties) and every eigenvector is signed so that its
/// largest-magnitude entry is positive, the first such entry winning ties.
pub fn sym_eig(s: &SymmetricMatrix, tol: f64) -> Result<SymEigen> {
    if !s.is_finite() {
        return Err(MccaError::NonFinite("eigensolver input"));
    }
    let n = s.dim();
    let a = DMatrix::from_column_slice(n, n, s.as_matrix().data());
    let eig = a
        .try_symmetric_eigen(tol.max(f64::EPSILON), MAX_SWEEPS * n.max(1))
        .ok_or(MccaError::NoConvergence {
            sweeps: MAX_SWEEPS * n.max(1),
            residual: f64::NAN,
        })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let columns: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| {
            let mut col = eig.eigenvectors.column(i).iter().copied().collect::<Vec<_>>();
            normalize_sign(&mut col);
            col
        })
        .collect();
    Ok(SymEigen {
        values,
        vectors: DenseMatrix::from_columns(&columns)?,
    })
}

fn two_columns_mut(m: &mut DenseMatrix, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(p < q);
    let rows = m.rows();
    let (head, tail) = m.data_mut().split_at_mut(q * rows);
    (&mut head[p * rows..(p + 1) * rows], &mut tail[..rows])
}

fn normalize_sign(col: &mut [f64]) {
    let mut best = 0;
    for (i, x) in col.iter().enumerate() {
        if x.abs() > col[best].abs() {
            best = i;
        }
    }
    if col.get(best).is_some_and(|&x| x < 0.0) {
        col.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Singular values in descending order, via one-sided (Hestenes) Jacobi.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    if !m.is_finite() {
        return Err(MccaError::NonFinite("singular value input"));
    }
    let mut work = if m.rows() < m.cols() {
        m.transpose()
    } else {
        m.clone()
    };
    let n = work.cols();
    let eps = f64::EPSILON;
    for sweep in 0.. {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let (cp, cq) = two_columns_mut(&mut work, p, q);
                let alpha = dot(cp, cp);
                let beta = dot(cq, cq);
                let gamma = dot(cp, cq);
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let (xp, xq) = (*x, *y);
                    *x = c * xp - s * xq;
                    *y = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
        if sweep + 1 == MAX_SWEEPS {
            return Err(MccaError::NoConvergence {
                sweeps: MAX_SWEEPS,
                residual: f64::NAN,
            });
        }
    }
    let mut values: Vec<f64> = (0..n).map(|j| dot(work.column(j), work.column(j)).sqrt()).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Orthonormal basis for the column space of `m` by twice-applied modified
/// Gram-Schmidt. Columns that are numerically dependent are an error.
pub fn orthonormalize(m: &DenseMatrix) -> Result<DenseMatrix> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m.cols());
    for j in 0..m.cols() {
        let mut v = m.column(j).to_vec();
        let original = dot(&v, &v).sqrt();
        for _ in 0..2 {
            for u in &cols {
                let proj = dot(u, &v);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm.is_nan() || norm <= 1e-12 * original.max(f64::MIN_POSITIVE) {
            return Err(MccaError::DimensionMismatch(format!(
                "column {j} is linearly dependent on earlier columns"
            )));
        }
        v.iter_mut().for_each(|x| *x /= norm);
        cols.push(v);
    }
    DenseMatrix::from_columns(&cols)
}

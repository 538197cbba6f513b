//! Dense tensors, dense matrices, and the multilinear primitives.
//!
//! Storage is first-index-fastest throughout: the element `(p_1, ..., p_M)`
//! (1-based) of a tensor with extents `(P_1, ..., P_M)` lives at offset
//! `sum_t (p_t - 1) * prod_{m<t} P_m`. With this layout the mode-1 unfolding
//! is the storage itself, and the column index of the mode-k unfolding is
//! `l = 1 + sum_{t != k} (p_t - 1) L_t` with `L_t = prod_{m<t, m != k} P_m`.
//!
//! Mode indices in the Rust API are 0-based.

use std::fmt;

use crate::error::{MccaError, Result};

/// An M-way dense array of `f64` with explicit shape.
#[derive(Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl fmt::Debug for DenseTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DenseTensor")
            .field("shape", &self.shape)
            .field("len", &self.data.len())
            .finish()
    }
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(MccaError::InvalidShape("tensor needs at least one mode".into()));
    }
    if let Some(pos) = shape.iter().position(|&p| p == 0) {
        return Err(MccaError::InvalidShape(format!(
            "extent of mode {pos} is zero in {shape:?}"
        )));
    }
    shape.iter().try_fold(1usize, |acc, &p| acc.checked_mul(p)).ok_or_else(|| {
        MccaError::InvalidShape(format!("element count of {shape:?} overflows"))
    })
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = check_shape(&shape)?;
        if data.len() != len {
            return Err(MccaError::DimensionMismatch(format!(
                "shape {shape:?} needs {len} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = check_shape(&shape)?;
        Ok(Self {
            shape,
            data: vec![0.0; len],
        })
    }

    /// Builds a tensor by evaluating `f` at every 0-based multi-index.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = check_shape(&shape)?;
        let mut data = Vec::with_capacity(len);
        let mut index = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&index));
            for (i, extent) in index.iter_mut().zip(&shape) {
                *i += 1;
                if *i < *extent {
                    break;
                }
                *i = 0;
            }
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Storage offset of a 0-based multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        let mut stride = 1;
        let mut offset = 0;
        for (&i, &p) in index.iter().zip(&self.shape) {
            debug_assert!(i < p);
            offset += i * stride;
            stride *= p;
        }
        offset
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let offset = self.offset(index);
        self.data[offset] = value;
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<Self> {
        if self.shape != other.shape {
            return Err(MccaError::DimensionMismatch(format!(
                "cannot subtract {:?} from {:?}",
                other.shape, self.shape
            )));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    fn check_mode(&self, k: usize) -> Result<()> {
        if k >= self.order() {
            return Err(MccaError::ModeOutOfRange {
                mode: k,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// (product of extents before k, extent k, product of extents after k).
    pub(crate) fn mode_split(shape: &[usize], k: usize) -> (usize, usize, usize) {
        let left = shape[..k].iter().product();
        let right = shape[k + 1..].iter().product();
        (left, shape[k], right)
    }
}

/// Column-major dense matrix; the M=2 special case of [`DenseTensor`]'s layout.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, " ")?;
            for j in 0..self.cols.min(8) {
                write!(f, " {:>12.5e}", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(MccaError::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} elements, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds a matrix from its columns, each of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(MccaError::DimensionMismatch("ragged columns".into()));
        }
        Ok(Self {
            rows,
            cols: columns.len(),
            data: columns.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i + j * self.rows] = value;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// The first `n` columns.
    pub fn leading_columns(&self, n: usize) -> DenseMatrix {
        let n = n.min(self.cols);
        DenseMatrix {
            rows: self.rows,
            cols: n,
            data: self.data[..n * self.rows].to_vec(),
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(MccaError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for p in 0..self.cols {
                let b = rhs.get(p, j);
                if b == 0.0 {
                    continue;
                }
                for (d, a) in dst.iter_mut().zip(self.column(p)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · rhs` without materializing the transpose.
    pub fn t_matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != rhs.rows {
            return Err(MccaError::DimensionMismatch(format!(
                "cannot multiply ({}x{})ᵀ by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(DenseMatrix::from_fn(self.cols, rhs.cols, |i, j| {
            dot(self.column(i), rhs.column(j))
        }))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&self, factor: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.dims() != rhs.dims() {
            return Err(MccaError::DimensionMismatch(format!(
                "cannot subtract {:?} from {:?}",
                rhs.dims(),
                self.dims()
            )));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// Largest absolute entrywise difference; infinite on shape mismatch.
    pub fn max_abs_diff(&self, rhs: &DenseMatrix) -> f64 {
        if self.dims() != rhs.dims() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `max |AᵀA - I|` over entries.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.cols {
            for j in 0..=i {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(self.column(i), self.column(j)) - target).abs());
            }
        }
        worst
    }

    /// Reinterprets the matrix as a 2-mode tensor.
    pub fn into_tensor(self) -> DenseTensor {
        DenseTensor {
            shape: vec![self.rows, self.cols],
            data: self.data,
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mode-k unfolding: a `P_k × prod_{j≠k} P_j` matrix.
pub fn unfold(t: &DenseTensor, k: usize) -> Result<DenseMatrix> {
    t.check_mode(k)?;
    let (left, pk, right) = DenseTensor::mode_split(&t.shape, k);
    let cols = left * right;
    let mut data = vec![0.0; pk * cols];
    for b in 0..right {
        for p in 0..pk {
            let src = &t.data[left * (p + pk * b)..left * (p + pk * b) + left];
            for (a, &x) in src.iter().enumerate() {
                data[p + pk * (a + left * b)] = x;
            }
        }
    }
    DenseMatrix::new(pk, cols, data)
}

/// Inverse of [`unfold`].
pub fn fold(m: &DenseMatrix, k: usize, shape: &[usize]) -> Result<DenseTensor> {
    check_shape(shape)?;
    if k >= shape.len() {
        return Err(MccaError::ModeOutOfRange {
            mode: k,
            order: shape.len(),
        });
    }
    let (left, pk, right) = DenseTensor::mode_split(shape, k);
    if m.rows != pk || m.cols != left * right {
        return Err(MccaError::DimensionMismatch(format!(
            "{}x{} matrix cannot fold into mode {k} of {shape:?}",
            m.rows, m.cols
        )));
    }
    let mut data = vec![0.0; pk * left * right];
    for b in 0..right {
        for p in 0..pk {
            let dst = &mut data[left * (p + pk * b)..left * (p + pk * b) + left];
            for (a, x) in dst.iter_mut().enumerate() {
                *x = m.data[p + pk * (a + left * b)];
            }
        }
    }
    Ok(DenseTensor {
        shape: shape.to_vec(),
        data,
    })
}

/// Mode-k product `t ×_k a`, replacing extent `P_k` with `a.rows()`.
pub fn mode_product(t: &DenseTensor, a: &DenseMatrix, k: usize) -> Result<DenseTensor> {
    t.check_mode(k)?;
    let (left, pk, right) = DenseTensor::mode_split(&t.shape, k);
    if a.cols != pk {
        return Err(MccaError::DimensionMismatch(format!(
            "mode-{k} product needs {pk} columns, matrix is {}x{}",
            a.rows, a.cols
        )));
    }
    let out_k = a.rows;
    let mut shape = t.shape.clone();
    shape[k] = out_k;
    let mut data = vec![0.0; left * out_k * right];
    for b in 0..right {
        for p in 0..pk {
            let src = &t.data[left * (p + pk * b)..left * (p + pk * b) + left];
            for i in 0..out_k {
                let coef = a.get(i, p);
                if coef == 0.0 {
                    continue;
                }
                let dst = &mut data[left * (i + out_k * b)..left * (i + out_k * b) + left];
                for (d, &x) in dst.iter_mut().zip(src) {
                    *d += coef * x;
                }
            }
        }
    }
    Ok(DenseTensor { shape, data })
}

/// Root-sum-of-squares over all elements.
pub fn frobenius_norm(t: &DenseTensor) -> f64 {
    t.data.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Standard Kronecker product `a ⊗ b`.
pub fn kronecker(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    DenseMatrix::from_fn(rows, cols, |i, j| {
        a.get(i / b.rows, j / b.cols) * b.get(i % b.rows, j % b.cols)
    })
}

/// Kronecker product of a list of factors, first factor leftmost.
pub fn kronecker_all(factors: &[&DenseMatrix]) -> Option<DenseMatrix> {
    let (first, rest) = factors.split_first()?;
    Some(rest.iter().fold((*first).clone(), |acc, f| kronecker(&acc, f)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(shape: Vec<usize>, rng: &mut ChaCha8Rng) -> DenseTensor {
        DenseTensor::from_fn(shape, |_| rng.random_range(-1.0..1.0)).unwrap()
    }

    fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    /// Column index of the unfolding from the index map, written out literally
    /// with 1-based indices.
    fn paper_column(index1: &[usize], shape: &[usize], k1: usize) -> usize {
        let m = shape.len();
        let mut l = 1;
        for t in 1..=m {
            if t == k1 {
                continue;
            }
            let lt: usize = (1..t).filter(|&mm| mm != k1).map(|mm| shape[mm - 1]).product();
            l += (index1[t - 1] - 1) * lt;
        }
        l
    }

    #[test]
    fn unfold_of_matrix_mode_one_is_identity() {
        let t = DenseTensor::from_fn(vec![2, 2], |ix| (2 * ix[0] + ix[1] + 1) as f64).unwrap();
        let m = unfold(&t, 0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(m.get(i, j), (2 * i + j + 1) as f64);
            }
        }
    }

    #[test]
    fn unfold_matches_index_map_exhaustively() {
        let shape = vec![2, 3, 4];
        let t = DenseTensor::from_fn(shape.clone(), |ix| {
            (ix[0] * 100 + ix[1] * 10 + ix[2]) as f64
        })
        .unwrap();
        for k1 in 1..=3 {
            let m = unfold(&t, k1 - 1).unwrap();
            assert_eq!(m.rows(), shape[k1 - 1]);
            assert_eq!(m.cols(), 24 / shape[k1 - 1]);
            for p1 in 1..=2 {
                for p2 in 1..=3 {
                    for p3 in 1..=4 {
                        let idx = [p1, p2, p3];
                        let l = paper_column(&idx, &shape, k1);
                        let value = t.get(&[p1 - 1, p2 - 1, p3 - 1]);
                        assert_eq!(m.get(idx[k1 - 1] - 1, l - 1), value);
                    }
                }
            }
        }
    }

    #[test]
    fn fold_matches_index_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let shape = vec![3, 2, 2];
        for k1 in 1..=3 {
            let rows = shape[k1 - 1];
            let m = random_matrix(rows, 12 / rows, &mut rng);
            let t = fold(&m, k1 - 1, &shape).unwrap();
            for p1 in 1..=3 {
                for p2 in 1..=2 {
                    for p3 in 1..=2 {
                        let idx = [p1, p2, p3];
                        let l = paper_column(&idx, &shape, k1);
                        assert_eq!(t.get(&[p1 - 1, p2 - 1, p3 - 1]), m.get(idx[k1 - 1] - 1, l - 1));
                    }
                }
            }
        }
    }

    #[test]
    fn fold_row_vector() {
        let m = DenseMatrix::new(1, 4, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let t = fold(&m, 0, &[1, 4]).unwrap();
        assert_eq!(t.shape(), &[1, 4]);
        assert_eq!(t.data(), m.data());
    }

    #[test]
    fn unfold_rejects_bad_mode() {
        let t = DenseTensor::zeros(vec![2, 2]).unwrap();
        assert!(matches!(unfold(&t, 2), Err(MccaError::ModeOutOfRange { mode: 2, order: 2 })));
    }

    #[test]
    fn fold_rejects_bad_dims() {
        let m = DenseMatrix::zeros(2, 5);
        assert!(matches!(fold(&m, 0, &[2, 3]), Err(MccaError::DimensionMismatch(_))));
    }

    #[test]
    fn shape_validation() {
        assert!(DenseTensor::zeros(vec![]).is_err());
        assert!(DenseTensor::zeros(vec![2, 0]).is_err());
        assert!(DenseTensor::new(vec![2, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn mode_product_identity_and_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_tensor(vec![3, 4, 2], &mut rng);
        for k in 0..3 {
            let p = t.shape()[k];
            assert_eq!(mode_product(&t, &DenseMatrix::identity(p), k).unwrap(), t);
            let z = mode_product(&t, &DenseMatrix::zeros(p, p), k).unwrap();
            assert!(z.data().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn mode_product_matches_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = random_tensor(vec![2, 3], &mut rng);
        let a = random_matrix(4, 2, &mut rng);
        let got = mode_product(&t, &a, 0).unwrap();
        assert_eq!(got.shape(), &[4, 3]);
        // direct: (a · T)[i, j] = Σ_p a[i,p] T[p,j]
        for i in 0..4 {
            for j in 0..3 {
                let want: f64 = (0..2).map(|p| a.get(i, p) * t.get(&[p, j])).sum();
                assert!((got.get(&[i, j]) - want).abs() < 1e-14);
            }
        }
        let via_fold = fold(&a.matmul(&unfold(&t, 0).unwrap()).unwrap(), 0, &[4, 3]).unwrap();
        assert_eq!(got, via_fold);
    }

    #[test]
    fn mode_product_rejects_mismatch() {
        let t = DenseTensor::zeros(vec![2, 3]).unwrap();
        assert!(mode_product(&t, &DenseMatrix::zeros(2, 3), 0).is_err());
    }

    #[test]
    fn norms() {
        assert_eq!(frobenius_norm(&DenseTensor::zeros(vec![3, 3]).unwrap()), 0.0);
        let ones = DenseTensor::new(vec![2, 2], vec![1.0; 4]).unwrap();
        assert_eq!(frobenius_norm(&ones), 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_tensor(vec![3, 2, 4], &mut rng);
        let mut naive = 0.0;
        for i in 0..3 {
            for j in 0..2 {
                for k in 0..4 {
                    naive += t.get(&[i, j, k]).powi(2);
                }
            }
        }
        assert!((frobenius_norm(&t).powi(2) - naive).abs() < 1e-12);
    }

    #[test]
    fn kronecker_identity() {
        let k = kronecker(&DenseMatrix::identity(2), &DenseMatrix::identity(3));
        assert_eq!(k, DenseMatrix::identity(6));
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn kronecker_trace_and_mixed_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let a = random_matrix(3, 3, &mut rng);
            let b = random_matrix(4, 4, &mut rng);
            let c = random_matrix(3, 3, &mut rng);
            let d = random_matrix(4, 4, &mut rng);
            assert!(rel(kronecker(&a, &b).trace(), a.trace() * b.trace()) < 1e-10);
            let lhs = kronecker(&a, &b).matmul(&kronecker(&c, &d)).unwrap();
            let rhs = kronecker(&a.matmul(&c).unwrap(), &b.matmul(&d).unwrap());
            assert!(lhs.max_abs_diff(&rhs) <= 1e-10 * rhs.frobenius_norm());
        }
    }

    #[test]
    fn transpose_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(5, 3, &mut rng);
        let b = random_matrix(5, 2, &mut rng);
        let want = a.transpose().matmul(&b).unwrap();
        assert!(a.t_matmul(&b).unwrap().max_abs_diff(&want) < 1e-14);
    }

    fn shape_strategy() -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(1usize..=4, 1..=4)
    }

    proptest! {
        #[test]
        fn fold_unfold_round_trip(shape in shape_strategy(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tensor(shape.clone(), &mut rng);
            for k in 0..shape.len() {
                let back = fold(&unfold(&t, k).unwrap(), k, &shape).unwrap();
                prop_assert_eq!(&back, &t);
            }
        }

        #[test]
        fn norm_matches_every_unfolding(shape in shape_strategy(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tensor(shape.clone(), &mut rng);
            let n = frobenius_norm(&t);
            for k in 0..shape.len() {
                let m = unfold(&t, k).unwrap();
                prop_assert!((m.frobenius_norm() - n).abs() <= 1e-12 * n.max(1.0));
            }
        }

        #[test]
        fn mode_products_commute_across_modes(
            p in prop::collection::vec(1usize..=4, 2..=3),
            r0 in 1usize..=4,
            r1 in 1usize..=4,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tensor(p.clone(), &mut rng);
            let a = random_matrix(r0, p[0], &mut rng);
            let b = random_matrix(r1, p[1], &mut rng);
            let ab = mode_product(&mode_product(&t, &a, 0).unwrap(), &b, 1).unwrap();
            let ba = mode_product(&mode_product(&t, &b, 1).unwrap(), &a, 0).unwrap();
            for (x, y) in ab.data().iter().zip(ba.data()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}

//! Grouped tensor datasets and their mode-wise sample covariances.
//!
//! For group `g` and mode `k` the covariance is
//! `S = 1/(N_g · prod_{j≠k} P_j) · Σ_i (X_i⁽ᵏ⁾ − X̄⁽ᵏ⁾)(X_i⁽ᵏ⁾ − X̄⁽ᵏ⁾)ᵀ`
//! with the 1/N_g (biased) normalizer. The full vectorized covariance is the
//! Kronecker product of the mode covariances with mode 1 leftmost.

use crate::error::{MccaError, Result};
use crate::tensor::{kronecker_all, DenseMatrix, DenseTensor};

/// Default element cap for materialized `P × P` covariances.
pub const DEFAULT_FULL_COVARIANCE_CAP: usize = 4096;

/// Symmetric matrix with full storage; both triangles are written from a
/// single evaluation so symmetry is exact.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    inner: DenseMatrix,
}

impl SymmetricMatrix {
    /// Builds from a function evaluated on the lower triangle (`i >= j`).
    pub fn from_lower(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut inner = DenseMatrix::zeros(dim, dim);
        for j in 0..dim {
            for i in j..dim {
                let v = f(i, j);
                inner.set(i, j, v);
                inner.set(j, i, v);
            }
        }
        Self { inner }
    }

    /// Takes the lower triangle of a square matrix.
    pub fn from_matrix_lower(m: &DenseMatrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(MccaError::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(Self::from_lower(m.rows(), |i, j| m.get(i, j)))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            inner: DenseMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            inner: DenseMatrix::identity(dim),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self {
            inner: DenseMatrix::from_diagonal(diag),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }

    pub fn as_matrix(&self) -> &DenseMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.inner
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.frobenius_norm()
    }

    pub fn is_finite(&self) -> bool {
        self.inner.is_finite()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            inner: self.inner.scale(factor),
        }
    }

    /// Congruence `Vᵀ S V`, symmetric by construction.
    pub fn congruence(&self, v: &DenseMatrix) -> Result<SymmetricMatrix> {
        let sv = self.inner.matmul(v)?;
        let r = v.cols();
        Ok(SymmetricMatrix::from_lower(r, |i, j| {
            crate::tensor::dot(v.column(i), sv.column(j))
        }))
    }
}

/// `G` groups of equal-shape tensor samples.
#[derive(Clone, Debug)]
pub struct GroupedDataset {
    shape: Vec<usize>,
    groups: Vec<Vec<DenseTensor>>,
    labels: Vec<String>,
}

impl GroupedDataset {
    pub fn new(groups: Vec<Vec<DenseTensor>>) -> Result<Self> {
        let labels = (0..groups.len()).map(|g| format!("group{g}")).collect();
        Self::with_labels(groups, labels)
    }

    pub fn with_labels(groups: Vec<Vec<DenseTensor>>, labels: Vec<String>) -> Result<Self> {
        if groups.is_empty() {
            return Err(MccaError::EmptyDataset);
        }
        if labels.len() != groups.len() {
            return Err(MccaError::DimensionMismatch(format!(
                "{} labels for {} groups",
                labels.len(),
                groups.len()
            )));
        }
        if let Some(g) = groups.iter().position(Vec::is_empty) {
            return Err(MccaError::EmptyGroup(g));
        }
        let shape = groups[0][0].shape().to_vec();
        for (g, group) in groups.iter().enumerate() {
            for (i, x) in group.iter().enumerate() {
                if x.shape() != shape.as_slice() {
                    return Err(MccaError::DimensionMismatch(format!(
                        "sample {i} of group {g} has shape {:?}, expected {shape:?}",
                        x.shape()
                    )));
                }
            }
        }
        Ok(Self {
            shape,
            groups,
            labels,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn group(&self, g: usize) -> &[DenseTensor] {
        &self.groups[g]
    }

    pub fn groups(&self) -> &[Vec<DenseTensor>] {
        &self.groups
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    /// `N = Σ_g N_g`.
    pub fn total_samples(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// All samples, group by group.
    pub fn samples(&self) -> impl Iterator<Item = &DenseTensor> {
        self.groups.iter().flatten()
    }

    /// Every sample in a single group.
    pub fn pooled(&self) -> GroupedDataset {
        GroupedDataset {
            shape: self.shape.clone(),
            groups: vec![self.samples().cloned().collect()],
            labels: vec!["pooled".into()],
        }
    }

    /// Each sample flattened into a 1-mode tensor of length `prod P_k`.
    pub fn vectorized(&self) -> GroupedDataset {
        let p: usize = self.shape.iter().product();
        let groups = self
            .groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|x| DenseTensor::new(vec![p], x.data().to_vec()).expect("length preserved"))
                    .collect()
            })
            .collect();
        GroupedDataset {
            shape: vec![p],
            groups,
            labels: self.labels.clone(),
        }
    }
}

/// Per-group, per-mode covariance matrices `S_(g)^(k)`.
#[derive(Clone, Debug)]
pub struct ModeCovariances {
    shape: Vec<usize>,
    mats: Vec<Vec<SymmetricMatrix>>,
}

impl ModeCovariances {
    pub fn from_dataset(data: &GroupedDataset) -> Result<Self> {
        let mats = data
            .groups()
            .iter()
            .map(|group| {
                (0..data.shape().len())
                    .map(|k| mode_covariance(group, k))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            shape: data.shape().to_vec(),
            mats,
        })
    }

    /// Wraps precomputed matrices; `mats[g][k]` must have dimension `shape[k]`.
    pub fn from_matrices(shape: Vec<usize>, mats: Vec<Vec<SymmetricMatrix>>) -> Result<Self> {
        if mats.is_empty() {
            return Err(MccaError::EmptyDataset);
        }
        for (g, per_mode) in mats.iter().enumerate() {
            if per_mode.len() != shape.len() {
                return Err(MccaError::DimensionMismatch(format!(
                    "group {g} has {} mode covariances for {} modes",
                    per_mode.len(),
                    shape.len()
                )));
            }
            for (k, s) in per_mode.iter().enumerate() {
                if s.dim() != shape[k] {
                    return Err(MccaError::DimensionMismatch(format!(
                        "covariance ({g},{k}) has dim {}, expected {}",
                        s.dim(),
                        shape[k]
                    )));
                }
            }
        }
        Ok(Self { shape, mats })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn n_groups(&self) -> usize {
        self.mats.len()
    }

    pub fn n_modes(&self) -> usize {
        self.shape.len()
    }

    pub fn get(&self, g: usize, k: usize) -> &SymmetricMatrix {
        &self.mats[g][k]
    }

    pub fn group(&self, g: usize) -> &[SymmetricMatrix] {
        &self.mats[g]
    }

    pub fn is_finite(&self) -> bool {
        self.mats.iter().flatten().all(SymmetricMatrix::is_finite)
    }
}

/// Elementwise mean of a non-empty sample list.
pub fn mean_tensor(group: &[DenseTensor]) -> Result<DenseTensor> {
    let first = group.first().ok_or(MccaError::EmptyGroup(0))?;
    let mut acc = DenseTensor::zeros(first.shape().to_vec())?;
    for x in group {
        if x.shape() != first.shape() {
            return Err(MccaError::DimensionMismatch(format!(
                "sample shape {:?} differs from {:?}",
                x.shape(),
                first.shape()
            )));
        }
        acc.data_mut().iter_mut().zip(x.data()).for_each(|(a, v)| *a += v);
    }
    let n = group.len() as f64;
    acc.data_mut().iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Mode-k sample covariance of one group, accumulated sample by sample.
pub fn mode_covariance(group: &[DenseTensor], k: usize) -> Result<SymmetricMatrix> {
    let mean = mean_tensor(group)?;
    let shape = mean.shape().to_vec();
    if k >= shape.len() {
        return Err(MccaError::ModeOutOfRange {
            mode: k,
            order: shape.len(),
        });
    }
    let (left, pk, right) = DenseTensor::mode_split(&shape, k);
    let mut lower = vec![0.0; pk * pk];
    let mut centered = vec![0.0; mean.len()];
    for x in group {
        centered
            .iter_mut()
            .zip(x.data().iter().zip(mean.data()))
            .for_each(|(c, (v, m))| *c = v - m);
        for b in 0..right {
            for r in 0..pk {
                let row_r = &centered[left * (r + pk * b)..left * (r + pk * b + 1)];
                for c in 0..=r {
                    let row_c = &centered[left * (c + pk * b)..left * (c + pk * b + 1)];
                    lower[r + pk * c] += crate::tensor::dot(row_r, row_c);
                }
            }
        }
    }
    let norm = (group.len() * left * right) as f64;
    Ok(SymmetricMatrix::from_lower(pk, |i, j| lower[i + pk * j] / norm))
}

/// Full Kronecker covariance `S⁽¹⁾ ⊗ ⋯ ⊗ S⁽ᴹ⁾` of group `g`, refused when
/// `prod P_k` exceeds `cap`.
pub fn full_covariance(cov: &ModeCovariances, g: usize, cap: usize) -> Result<SymmetricMatrix> {
    let size: usize = cov.shape().iter().product();
    if size > cap {
        return Err(MccaError::CapExceeded { size, cap });
    }
    let factors: Vec<&DenseMatrix> = cov.group(g).iter().map(SymmetricMatrix::as_matrix).collect();
    let full = kronecker_all(&factors).ok_or(MccaError::EmptyDataset)?;
    SymmetricMatrix::from_matrix_lower(&full)
}

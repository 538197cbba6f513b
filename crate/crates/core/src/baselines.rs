//! Reference methods compared against MCCA: PCA and CCA on vectorized
//! samples, and classical MPCA on tensors.

use std::fmt;
use std::str::FromStr;

use crate::covariance::{mode_covariance, GroupedDataset, ModeCovariances, SymmetricMatrix};
use crate::error::{MccaError, Result};
use crate::linalg::sym_eig;
use crate::mcca::{self, check_ranks, project_onto, FitConfig, FitReport};
use crate::tensor::{frobenius_norm, DenseMatrix, DenseTensor};

pub use crate::covariance::DEFAULT_FULL_COVARIANCE_CAP as DEFAULT_VECTOR_CAP;

/// Which method produced a model or a compression record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Mcca,
    Mpca,
    Pca,
    Cca,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mcca, Method::Mpca, Method::Pca, Method::Cca];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mcca => "mcca",
            Method::Mpca => "mpca",
            Method::Pca => "pca",
            Method::Cca => "cca",
        }
    }

    /// Multilinear methods keep one basis per mode; the others vectorize.
    pub fn is_multilinear(self) -> bool {
        matches!(self, Method::Mcca | Method::Mpca)
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Method::Mcca => 0,
            Method::Mpca => 1,
            Method::Pca => 2,
            Method::Cca => 3,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.tag() == tag)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = MccaError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| MccaError::InvalidConfig(format!("unknown method '{s}'")))
    }
}

/// Single orthonormal basis over vectorized samples (PCA or CCA).
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    basis: DenseMatrix,
    method: Method,
}

impl LinearModel {
    pub fn new(basis: DenseMatrix, method: Method) -> Result<Self> {
        if method.is_multilinear() {
            return Err(MccaError::InvalidConfig(format!("{method} is not a vector method")));
        }
        check_ranks(&[basis.cols()], &[basis.rows()])?;
        Ok(Self { basis, method })
    }

    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Vectorized dimension `P = prod P_k`.
    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn rank(&self) -> usize {
        self.basis.cols()
    }

    /// `vec⁻¹(V Vᵀ vec(X))`.
    pub fn reconstruct(&self, x: &DenseTensor) -> Result<DenseTensor> {
        if x.len() != self.dim() {
            return Err(MccaError::DimensionMismatch(format!(
                "sample has {} elements, model expects {}",
                x.len(),
                self.dim()
            )));
        }
        let v = &self.basis;
        let mut out = vec![0.0; x.len()];
        for j in 0..v.cols() {
            let col = v.column(j);
            let c: f64 = col.iter().zip(x.data()).map(|(a, b)| a * b).sum();
            out.iter_mut().zip(col).for_each(|(o, a)| *o += c * a);
        }
        DenseTensor::new(x.shape().to_vec(), out)
    }
}

/// Per-mode orthonormal bases fitted by MPCA.
#[derive(Clone, Debug, PartialEq)]
pub struct MpcaModel {
    bases: Vec<DenseMatrix>,
}

impl MpcaModel {
    pub fn new(bases: Vec<DenseMatrix>) -> Result<Self> {
        let shape: Vec<usize> = bases.iter().map(DenseMatrix::rows).collect();
        let ranks: Vec<usize> = bases.iter().map(DenseMatrix::cols).collect();
        check_ranks(&ranks, &shape)?;
        Ok(Self { bases })
    }

    pub fn bases(&self) -> &[DenseMatrix] {
        &self.bases
    }

    pub fn shape(&self) -> Vec<usize> {
        self.bases.iter().map(DenseMatrix::rows).collect()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.bases.iter().map(DenseMatrix::cols).collect()
    }

    pub fn reconstruct(&self, x: &DenseTensor) -> Result<DenseTensor> {
        mcca::reconstruct_with(&self.bases, x)
    }
}

/// Options for the vector methods.
#[derive(Clone, Debug)]
pub struct VectorConfig {
    pub fit: FitConfig,
    /// Largest vectorized dimension for which a `P × P` covariance is built.
    pub cap: usize,
}

impl VectorConfig {
    pub fn new(rank: usize) -> Self {
        Self {
            fit: FitConfig::new(vec![rank]),
            cap: DEFAULT_VECTOR_CAP,
        }
    }
}

fn vector_dim(data: &GroupedDataset, rank: usize, cap: usize) -> Result<usize> {
    let p: usize = data.shape().iter().product();
    if p > cap {
        return Err(MccaError::CapExceeded { size: p, cap });
    }
    check_ranks(&[rank], &[p])?;
    Ok(p)
}

/// PCA on the pooled, vectorized dataset: top eigenvectors of the pooled
/// sample covariance.
pub fn pca_fit(data: &GroupedDataset, config: &VectorConfig) -> Result<LinearModel> {
    let rank = config.fit.ranks.first().copied().unwrap_or(0);
    vector_dim(data, rank, config.cap)?;
    let pooled = data.pooled().vectorized();
    let s = mode_covariance(pooled.group(0), 0)?;
    let eig = sym_eig(&s, config.fit.eig_tol)?;
    LinearModel::new(eig.top_vectors(rank), Method::Pca)
}

/// CCA: the MCCA solver with a single mode over per-group vectorized
/// covariances.
pub fn cca_fit(data: &GroupedDataset, config: &VectorConfig) -> Result<(LinearModel, FitReport)> {
    let rank = config.fit.ranks.first().copied().unwrap_or(0);
    let p = vector_dim(data, rank, config.cap)?;
    let vectorized = data.vectorized();
    let mats = vectorized
        .groups()
        .iter()
        .map(|g| Ok(vec![mode_covariance(g, 0)?]))
        .collect::<Result<Vec<Vec<SymmetricMatrix>>>>()?;
    let cov = ModeCovariances::from_matrices(vec![p], mats)?;
    let (model, report) = mcca::fit(&cov, &config.fit)?;
    Ok((LinearModel::new(model.basis(0).clone(), Method::Cca)?, report))
}

/// Outcome of an MPCA fit: the model and the total projected scatter after
/// initialization and after each sweep.
#[derive(Clone, Debug)]
pub struct MpcaFit {
    pub model: MpcaModel,
    pub scatter_trace: Vec<f64>,
    pub converged: bool,
}

/// Classical MPCA on the pooled dataset, centered by the global mean.
///
/// Each mode's basis is the top eigenvectors of the partial-projection
/// scatter `Φ⁽ᵏ⁾ = Σ_i X_i⁽ᵏ⁾ U₋ₖ U₋ₖᵀ X_i⁽ᵏ⁾ᵀ`, where `U₋ₖ` projects every
/// other mode. The first pass uses `U₋ₖ = I` (full-projection truncation).
pub fn mpca_fit(data: &GroupedDataset, config: &FitConfig) -> Result<MpcaFit> {
    config.validate(data.shape())?;
    let shape = data.shape().to_vec();
    let pooled = data.pooled();
    let mean = crate::covariance::mean_tensor(pooled.group(0))?;
    let centered: Vec<DenseTensor> = pooled
        .group(0)
        .iter()
        .map(|x| x.sub(&mean))
        .collect::<Result<_>>()?;

    let mut bases = Vec::with_capacity(shape.len());
    for k in 0..shape.len() {
        let phi = partial_scatter(&centered, &[], k)?;
        bases.push(sym_eig(&phi, config.eig_tol)?.top_vectors(config.ranks[k]));
    }

    let mut trace = vec![projected_scatter(&centered, &bases)?];
    let mut converged = false;
    for _ in 0..config.max_iter {
        for k in 0..shape.len() {
            let phi = partial_scatter(&centered, &bases, k)?;
            bases[k] = sym_eig(&phi, config.eig_tol)?.top_vectors(config.ranks[k]);
        }
        let previous = *trace.last().expect("non-empty");
        let current = projected_scatter(&centered, &bases)?;
        trace.push(current);
        if (current - previous).abs() <= config.tol * previous.abs() {
            converged = true;
            break;
        }
    }
    Ok(MpcaFit {
        model: MpcaModel::new(bases)?,
        scatter_trace: trace,
        converged,
    })
}

/// Mode-k scatter of the samples after projecting every other mode onto its
/// basis; an empty `bases` slice means no projection.
fn partial_scatter(samples: &[DenseTensor], bases: &[DenseMatrix], k: usize) -> Result<SymmetricMatrix> {
    let mut acc: Option<DenseMatrix> = None;
    for x in samples {
        let mut y = x.clone();
        for (j, u) in bases.iter().enumerate() {
            if j != k {
                y = crate::tensor::mode_product(&y, &u.transpose(), j)?;
            }
        }
        let unf = crate::tensor::unfold(&y, k)?;
        let term = unf.matmul(&unf.transpose())?;
        acc = Some(match acc {
            None => term,
            Some(a) => DenseMatrix::new(
                a.rows(),
                a.cols(),
                a.data().iter().zip(term.data()).map(|(p, q)| p + q).collect(),
            )?,
        });
    }
    SymmetricMatrix::from_matrix_lower(&acc.ok_or(MccaError::EmptyGroup(0))?)
}

/// `Σ_i ‖X_i ×₁ U⁽¹⁾ᵀ ⋯ ×_M U⁽ᴹ⁾ᵀ‖²`.
fn projected_scatter(samples: &[DenseTensor], bases: &[DenseMatrix]) -> Result<f64> {
    samples
        .iter()
        .map(|x| project_onto(bases, x).map(|y| frobenius_norm(&y).powi(2)))
        .sum()
}

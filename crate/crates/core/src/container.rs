//! Binary model files.
//!
//! Layout, all integers `u32` and reals `f64`, little-endian:
//!
//! ```text
//! "MCCA1"  method:u8
//! M  shape[M]                    sample shape
//! B  (rows cols data[rows*cols])[B]   bases, column-major
//! G  (dim data[dim*dim])[G*B]    latent covariances, group-major
//! A  alpha[A]                    contraction ratios
//! N  code[N]                     one latent code per sample, each of
//!                                length prod(ranks)
//! ```
//!
//! Multilinear models store one basis per mode; vector models store a single
//! basis over the flattened sample.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::baselines::{LinearModel, Method, MpcaModel};
use crate::covariance::{GroupedDataset, SymmetricMatrix};
use crate::error::{MccaError, Result};
use crate::ingest::ByteCursor;
use crate::mcca::{project_onto, MccaModel};
use crate::metrics::Reconstruct;
use crate::tensor::{DenseMatrix, DenseTensor};

pub const MODEL_MAGIC: &[u8; 5] = b"MCCA1";

/// Everything a model file holds.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub method: Method,
    pub shape: Vec<usize>,
    pub bases: Vec<DenseMatrix>,
    pub latent: Vec<Vec<SymmetricMatrix>>,
    pub alphas: Vec<f64>,
    pub codes: Vec<Vec<f64>>,
}

impl ModelFile {
    pub fn from_mcca(model: &MccaModel) -> Self {
        Self {
            method: Method::Mcca,
            shape: model.shape().to_vec(),
            bases: model.bases().to_vec(),
            latent: (0..model.n_groups())
                .map(|g| (0..model.n_modes()).map(|k| model.latent(g, k).clone()).collect())
                .collect(),
            alphas: model.alphas().to_vec(),
            codes: Vec::new(),
        }
    }

    pub fn from_mpca(model: &MpcaModel) -> Self {
        Self {
            method: Method::Mpca,
            shape: model.shape(),
            bases: model.bases().to_vec(),
            latent: Vec::new(),
            alphas: Vec::new(),
            codes: Vec::new(),
        }
    }

    pub fn from_linear(model: &LinearModel, shape: &[usize]) -> Result<Self> {
        if shape.iter().product::<usize>() != model.dim() {
            return Err(MccaError::DimensionMismatch(format!(
                "shape {shape:?} does not flatten to {}",
                model.dim()
            )));
        }
        Ok(Self {
            method: model.method(),
            shape: shape.to_vec(),
            bases: vec![model.basis().clone()],
            latent: Vec::new(),
            alphas: Vec::new(),
            codes: Vec::new(),
        })
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.bases.iter().map(DenseMatrix::cols).collect()
    }

    /// Stores the latent code of every sample, group by group.
    pub fn with_codes(mut self, data: &GroupedDataset) -> Result<Self> {
        if data.shape() != self.shape.as_slice() {
            return Err(MccaError::DimensionMismatch(format!(
                "dataset shape {:?} differs from model shape {:?}",
                data.shape(),
                self.shape
            )));
        }
        self.codes = data
            .samples()
            .map(|x| self.encode(x))
            .collect::<Result<_>>()?;
        Ok(self)
    }

    fn encode(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        if self.method.is_multilinear() {
            Ok(project_onto(&self.bases, x)?.into_data())
        } else {
            let flat = DenseMatrix::new(x.len(), 1, x.data().to_vec())?;
            Ok(self.bases[0].t_matmul(&flat)?.into_data())
        }
    }

    /// Number of stored reals counted as model parameters: basis entries
    /// plus latent code entries.
    pub fn parameter_census(&self) -> u64 {
        let bases: usize = self.bases.iter().map(|b| b.rows() * b.cols()).sum();
        let codes: usize = self.codes.iter().map(Vec::len).sum();
        (bases + codes) as u64
    }

    /// Rebuilds a model usable for reconstruction.
    pub fn to_model(&self) -> Result<Box<dyn Reconstruct>> {
        Ok(match self.method {
            Method::Mcca => Box::new(MccaModel::from_parts(
                self.bases.clone(),
                self.latent.clone(),
                self.alphas.clone(),
            )?),
            Method::Mpca => Box::new(MpcaModel::new(self.bases.clone())?),
            Method::Pca | Method::Cca => Box::new(LinearModel::new(self.bases[0].clone(), self.method)?),
        })
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let u32le = |v: usize| (v as u32).to_le_bytes();
        let mut buf = Vec::new();
        buf.extend_from_slice(MODEL_MAGIC);
        buf.push(self.method.tag());
        buf.extend(u32le(self.shape.len()));
        self.shape.iter().for_each(|&p| buf.extend(u32le(p)));
        buf.extend(u32le(self.bases.len()));
        for b in &self.bases {
            buf.extend(u32le(b.rows()));
            buf.extend(u32le(b.cols()));
            b.data().iter().for_each(|v| buf.extend(v.to_le_bytes()));
        }
        buf.extend(u32le(self.latent.len()));
        for l in self.latent.iter().flatten() {
            buf.extend(u32le(l.dim()));
            l.as_matrix().data().iter().for_each(|v| buf.extend(v.to_le_bytes()));
        }
        buf.extend(u32le(self.alphas.len()));
        self.alphas.iter().for_each(|v| buf.extend(v.to_le_bytes()));
        buf.extend(u32le(self.codes.len()));
        self.codes.iter().flatten().for_each(|v| buf.extend(v.to_le_bytes()));
        w.write_all(&buf)
    }

    pub fn read(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |msg: &str| MccaError::format(path, msg.to_string());
        let mut cur = ByteCursor::new(bytes, path);
        cur.expect_magic(MODEL_MAGIC)?;
        let method = Method::from_tag(cur.u8()?).ok_or_else(|| bad("unknown method tag"))?;
        let m = cur.u32()? as usize;
        let shape = (0..m).map(|_| cur.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        let nb = cur.u32()? as usize;
        let mut bases = Vec::with_capacity(nb);
        for _ in 0..nb {
            let rows = cur.u32()? as usize;
            let cols = cur.u32()? as usize;
            bases.push(DenseMatrix::new(rows, cols, cur.f64s(rows * cols)?)?);
        }
        let g = cur.u32()? as usize;
        let mut latent = Vec::with_capacity(g);
        for _ in 0..g {
            let mut per_mode = Vec::with_capacity(nb);
            for _ in 0..nb {
                let dim = cur.u32()? as usize;
                let full = DenseMatrix::new(dim, dim, cur.f64s(dim * dim)?)?;
                per_mode.push(SymmetricMatrix::from_matrix_lower(&full)?);
            }
            latent.push(per_mode);
        }
        let na = cur.u32()? as usize;
        let alphas = cur.f64s(na)?;
        let n = cur.u32()? as usize;
        let code_len: usize = bases.iter().map(DenseMatrix::cols).product();
        let codes = (0..n).map(|_| cur.f64s(code_len)).collect::<Result<Vec<_>>>()?;
        cur.finish()?;

        let expected_bases = if method.is_multilinear() { m } else { 1 };
        if nb != expected_bases {
            return Err(bad("basis count does not match method and shape"));
        }
        if method.is_multilinear() && bases.iter().zip(&shape).any(|(b, &p)| b.rows() != p) {
            return Err(bad("basis rows do not match shape"));
        }
        if !method.is_multilinear() && bases[0].rows() != shape.iter().product::<usize>() {
            return Err(bad("basis rows do not match flattened shape"));
        }
        Ok(Self {
            method,
            shape,
            bases,
            latent,
            alphas,
            codes,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write(&mut buf).map_err(|e| MccaError::io(path, e))?;
        fs::write(path, buf).map_err(|e| MccaError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| MccaError::io(path, e))?;
        Self::read(&bytes, path)
    }
}

//! Reconstruction error, compression accounting, covariance residuals and
//! principal angles.

use std::io::{Read, Write};

use crate::baselines::{LinearModel, Method, MpcaModel};
use crate::covariance::{GroupedDataset, SymmetricMatrix};
use crate::error::{MccaError, Result};
use crate::linalg::singular_values;
use crate::mcca::{self, MccaModel};
use crate::tensor::{frobenius_norm, DenseMatrix, DenseTensor};

/// Anything that maps a sample to its low-rank reconstruction.
pub trait Reconstruct {
    fn method(&self) -> Method;

    /// Per-mode ranks for multilinear models, `[R]` for vector models.
    fn ranks(&self) -> Vec<usize>;

    fn reconstruct(&self, x: &DenseTensor) -> Result<DenseTensor>;
}

impl Reconstruct for MccaModel {
    fn method(&self) -> Method {
        Method::Mcca
    }

    fn ranks(&self) -> Vec<usize> {
        MccaModel::ranks(self).to_vec()
    }

    fn reconstruct(&self, x: &DenseTensor) -> Result<DenseTensor> {
        mcca::reconstruct_with(self.bases(), x)
    }
}

impl Reconstruct for MpcaModel {
    fn method(&self) -> Method {
        Method::Mpca
    }

    fn ranks(&self) -> Vec<usize> {
        MpcaModel::ranks(self)
    }

    fn reconstruct(&self, x: &DenseTensor) -> Result<DenseTensor> {
        MpcaModel::reconstruct(self, x)
    }
}

impl Reconstruct for LinearModel {
    fn method(&self) -> Method {
        LinearModel::method(self)
    }

    fn ranks(&self) -> Vec<usize> {
        vec![self.rank()]
    }

    fn reconstruct(&self, x: &DenseTensor) -> Result<DenseTensor> {
        LinearModel::reconstruct(self, x)
    }
}

/// Reconstruction error rate `‖X − X̃‖² / ‖X‖²` over all groups pooled.
pub fn rer(data: &GroupedDataset, model: &dyn Reconstruct) -> Result<f64> {
    let mut err = 0.0;
    let mut total = 0.0;
    for x in data.samples() {
        let y = model.reconstruct(x)?;
        err += frobenius_norm(&x.sub(&y)?).powi(2);
        total += frobenius_norm(x).powi(2);
    }
    if total == 0.0 {
        return Err(MccaError::ZeroNorm);
    }
    Ok(err / total)
}

/// Stored parameters: bases plus latent codes for `n` samples.
///
/// Multilinear methods need `Σ P_k R_k + n Π R_k`; vector methods need
/// `R Π P_k + n R` with `ranks = [R]`.
pub fn param_count(method: Method, shape: &[usize], ranks: &[usize], n: usize) -> u64 {
    let p: u64 = shape.iter().map(|&x| x as u64).product();
    let n = n as u64;
    if method.is_multilinear() {
        let bases: u64 = shape.iter().zip(ranks).map(|(&p, &r)| (p * r) as u64).sum();
        let codes: u64 = ranks.iter().map(|&r| r as u64).product();
        bases + n * codes
    } else {
        let r = ranks.first().copied().unwrap_or(0) as u64;
        r * p + n * r
    }
}

/// Compression ratio: parameter count over `n Π P_k`.
pub fn cr(method: Method, shape: &[usize], ranks: &[usize], n: usize) -> f64 {
    let raw = n as f64 * shape.iter().map(|&x| x as f64).product::<f64>();
    param_count(method, shape, ranks, n) as f64 / raw
}

/// One point of a RER-versus-CR curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressionRecord {
    pub method: Method,
    pub ranks: Vec<usize>,
    pub params: u64,
    pub cr: f64,
    pub rer: f64,
}

impl CompressionRecord {
    pub fn evaluate(data: &GroupedDataset, model: &dyn Reconstruct) -> Result<Self> {
        let method = model.method();
        let ranks = model.ranks();
        let n = data.total_samples();
        Ok(Self {
            method,
            params: param_count(method, data.shape(), &ranks, n),
            cr: cr(method, data.shape(), &ranks, n),
            rer: rer(data, model)?,
            ranks,
        })
    }

    pub fn ranks_label(&self) -> String {
        join_ranks(&self.ranks)
    }
}

pub fn join_ranks(ranks: &[usize]) -> String {
    ranks.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
}

pub fn parse_ranks(s: &str) -> Result<Vec<usize>> {
    s.split(['x', ','])
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| MccaError::InvalidRanks(format!("cannot parse ranks '{s}'")))
        })
        .collect()
}

/// Formats a real with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub const RECORD_HEADER: [&str; 5] = ["method", "ranks", "params", "cr", "rer"];

pub fn write_records<W: Write>(writer: W, records: &[CompressionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record([
            r.method.as_str().to_string(),
            r.ranks_label(),
            r.params.to_string(),
            format_real(r.cr),
            format_real(r.rer),
        ])?;
    }
    w.flush().map_err(|e| MccaError::io("<csv>", e))?;
    Ok(())
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<CompressionRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if header.iter().ne(RECORD_HEADER) {
        return Err(MccaError::format("<csv>", format!("unexpected header {header:?}")));
    }
    let bad = |what: &str, v: &str| MccaError::format("<csv>", format!("bad {what} '{v}'"));
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(CompressionRecord {
                method: rec[0].parse()?,
                ranks: parse_ranks(&rec[1])?,
                params: rec[2].parse().map_err(|_| bad("params", &rec[2]))?,
                cr: rec[3].parse().map_err(|_| bad("cr", &rec[3]))?,
                rer: rec[4].parse().map_err(|_| bad("rer", &rec[4]))?,
            })
        })
        .collect()
}

/// Covariance residual `E = S − V Λ Vᵀ`.
pub fn residual(s: &SymmetricMatrix, v: &DenseMatrix, lambda: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    if v.rows() != s.dim() || v.cols() != lambda.dim() {
        return Err(MccaError::DimensionMismatch(format!(
            "S is {0}x{0}, V is {1}x{2}, Λ is {3}x{3}",
            s.dim(),
            v.rows(),
            v.cols(),
            lambda.dim()
        )));
    }
    let vl = v.matmul(lambda.as_matrix())?;
    let p = s.dim();
    Ok(SymmetricMatrix::from_lower(p, |i, j| {
        let approx: f64 = (0..v.cols()).map(|c| vl.get(i, c) * v.get(j, c)).sum();
        s.get(i, j) - approx
    }))
}

/// Principal angles (radians, ascending) between the column spaces of two
/// matrices with orthonormal columns.
///
/// Cosines come from the singular values of `AᵀB`; sines from those of the
/// residual `B − A(AᵀB)` (or the mirrored form when `B` is the wider side).
/// Small angles take the arcsine, large ones the arccosine.
pub fn principal_angles(a: &DenseMatrix, b: &DenseMatrix) -> Result<Vec<f64>> {
    if a.rows() != b.rows() {
        return Err(MccaError::DimensionMismatch(format!(
            "bases live in R^{} and R^{}",
            a.rows(),
            b.rows()
        )));
    }
    let (wide, narrow) = if a.cols() >= b.cols() { (a, b) } else { (b, a) };
    let c = wide.t_matmul(narrow)?;
    let mut cosines = singular_values(&c)?;
    cosines.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
    let resid = narrow.sub(&wide.matmul(&c)?)?;
    let mut sines = singular_values(&resid)?;
    sines.reverse();
    sines.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
    Ok(cosines
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| if s < std::f64::consts::FRAC_1_SQRT_2 { s.asin() } else { c.acos() })
        .collect())
}

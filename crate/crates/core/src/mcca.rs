//! Multilinear common component analysis solver.
//!
//! Given mode covariances `S_(g)^(k)`, find orthonormal `V⁽ᵏ⁾ ∈ R^{P_k×R_k}`
//! maximizing
//!
//! ```text
//! F(V) = Σ_g Π_k tr{ V⁽ᵏ⁾ᵀ S_(g)⁽ᵏ⁾ V⁽ᵏ⁾ V⁽ᵏ⁾ᵀ S_(g)⁽ᵏ⁾ V⁽ᵏ⁾ } = Σ_g Π_k ‖V⁽ᵏ⁾ᵀ S_(g)⁽ᵏ⁾ V⁽ᵏ⁾‖²_F
//! ```
//!
//! Seen from a single mode this is `f_k(V) = tr{Vᵀ M(V) V}` with
//! `M(V) = Σ_g w_(g)⁽⁻ᵏ⁾ S V Vᵀ S` and `w_(g)⁽⁻ᵏ⁾` the product of the other
//! modes' factors. Initialization replaces `w` by the upper bound `w̃` (sums of
//! the top squared eigenvalues of the other modes' covariances) and drops the
//! `V Vᵀ` inside `M`, giving a plain eigenproblem for `M̃ = Σ_g w̃_g S S`.
//! Each update then takes the top eigenvectors of `M(V_s)`, which cannot
//! decrease `f_k`.

use log::warn;

use crate::covariance::{GroupedDataset, ModeCovariances, SymmetricMatrix};
use crate::error::{MccaError, Result};
use crate::tensor::{mode_product, DenseMatrix, DenseTensor};

pub use crate::linalg::{sym_eig, SymEigen};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_EIG_TOL: f64 = 1e-12;

/// Relative gap below which the rank boundary is reported as degenerate.
const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub ranks: Vec<usize>,
    /// Stop when the relative change of the total objective drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub eig_tol: f64,
}

impl FitConfig {
    pub fn new(ranks: Vec<usize>) -> Self {
        Self {
            ranks,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            eig_tol: DEFAULT_EIG_TOL,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self, shape: &[usize]) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(MccaError::InvalidConfig(format!("tolerance must be positive, got {}", self.tol)));
        }
        if !(self.eig_tol > 0.0 && self.eig_tol.is_finite()) {
            return Err(MccaError::InvalidConfig(format!(
                "eigensolver tolerance must be positive, got {}",
                self.eig_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(MccaError::InvalidConfig("max iterations must be at least 1".into()));
        }
        check_ranks(&self.ranks, shape)
    }
}

pub(crate) fn check_ranks(ranks: &[usize], shape: &[usize]) -> Result<()> {
    if ranks.len() != shape.len() {
        return Err(MccaError::InvalidRanks(format!(
            "{} ranks given for {} modes",
            ranks.len(),
            shape.len()
        )));
    }
    for (k, (&r, &p)) in ranks.iter().zip(shape).enumerate() {
        if r == 0 || r > p {
            return Err(MccaError::InvalidRanks(format!(
                "rank {r} for mode {k} must lie in 1..={p}"
            )));
        }
    }
    Ok(())
}

/// Fitted mode bases and per-group latent covariances.
#[derive(Clone, Debug, PartialEq)]
pub struct MccaModel {
    shape: Vec<usize>,
    ranks: Vec<usize>,
    bases: Vec<DenseMatrix>,
    latent: Vec<Vec<SymmetricMatrix>>,
    alphas: Vec<f64>,
}

impl MccaModel {
    /// Assembles a model from parts, checking dimensions and rank bounds.
    pub fn from_parts(
        bases: Vec<DenseMatrix>,
        latent: Vec<Vec<SymmetricMatrix>>,
        alphas: Vec<f64>,
    ) -> Result<Self> {
        let shape: Vec<usize> = bases.iter().map(DenseMatrix::rows).collect();
        let ranks: Vec<usize> = bases.iter().map(DenseMatrix::cols).collect();
        check_ranks(&ranks, &shape)?;
        if alphas.len() != bases.len() {
            return Err(MccaError::DimensionMismatch(format!(
                "{} contraction ratios for {} modes",
                alphas.len(),
                bases.len()
            )));
        }
        for per_mode in &latent {
            if per_mode.len() != bases.len()
                || per_mode.iter().zip(&ranks).any(|(l, &r)| l.dim() != r)
            {
                return Err(MccaError::DimensionMismatch(
                    "latent covariance dimensions do not match ranks".into(),
                ));
            }
        }
        Ok(Self {
            shape,
            ranks,
            bases,
            latent,
            alphas,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn n_modes(&self) -> usize {
        self.bases.len()
    }

    pub fn n_groups(&self) -> usize {
        self.latent.len()
    }

    pub fn bases(&self) -> &[DenseMatrix] {
        &self.bases
    }

    pub fn basis(&self, k: usize) -> &DenseMatrix {
        &self.bases[k]
    }

    pub fn latent(&self, g: usize, k: usize) -> &SymmetricMatrix {
        &self.latent[g][k]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Composite basis `V⁽¹⁾ ⊗ ⋯ ⊗ V⁽ᴹ⁾`; only sensible for small shapes.
    pub fn kronecker_basis(&self) -> DenseMatrix {
        let refs: Vec<&DenseMatrix> = self.bases.iter().collect();
        crate::tensor::kronecker_all(&refs).expect("model has at least one mode")
    }

    /// Latent code `X ×₁ V⁽¹⁾ᵀ ⋯ ×_M V⁽ᴹ⁾ᵀ` of shape `(R_1, …, R_M)`.
    pub fn project(&self, x: &DenseTensor) -> Result<DenseTensor> {
        project_onto(&self.bases, x)
    }
}

/// Multiplies every mode by the transpose of its basis.
pub(crate) fn project_onto(bases: &[DenseMatrix], x: &DenseTensor) -> Result<DenseTensor> {
    check_sample_shape(bases, x)?;
    let mut out = x.clone();
    for (k, v) in bases.iter().enumerate() {
        out = mode_product(&out, &v.transpose(), k)?;
    }
    Ok(out)
}

/// `X ×₁ V⁽¹⁾V⁽¹⁾ᵀ ⋯ ×_M V⁽ᴹ⁾V⁽ᴹ⁾ᵀ`, applied as project-then-expand per mode.
pub(crate) fn reconstruct_with(bases: &[DenseMatrix], x: &DenseTensor) -> Result<DenseTensor> {
    let mut out = project_onto(bases, x)?;
    for (k, v) in bases.iter().enumerate() {
        out = mode_product(&out, v, k)?;
    }
    Ok(out)
}

fn check_sample_shape(bases: &[DenseMatrix], x: &DenseTensor) -> Result<()> {
    let expected: Vec<usize> = bases.iter().map(DenseMatrix::rows).collect();
    if x.shape() != expected.as_slice() {
        return Err(MccaError::DimensionMismatch(format!(
            "sample shape {:?} does not match model shape {expected:?}",
            x.shape()
        )));
    }
    Ok(())
}

/// Contraction ratio and surrogate bounds recorded for one mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeBound {
    pub alpha: f64,
    /// Global maximum of the initialization surrogate.
    pub surrogate_max: f64,
}

impl ModeBound {
    pub fn lower(&self) -> f64 {
        self.alpha * self.surrogate_max
    }

    pub fn upper(&self) -> f64 {
        self.surrogate_max
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    /// Total objective at initialization followed by one entry per outer
    /// iteration.
    pub objective_trace: Vec<f64>,
    pub alphas: Vec<f64>,
    pub bounds: Vec<ModeBound>,
    pub converged: bool,
    pub iterations: usize,
}

impl FitReport {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial objective")
    }

    /// Largest relative drop between consecutive trace entries (0 when the
    /// trace is non-decreasing).
    pub fn worst_relative_decrease(&self) -> f64 {
        self.objective_trace
            .windows(2)
            .map(|w| (w[0] - w[1]) / w[0].abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    /// Whether the final objective lies at or above `α·f̃′ᵐᵃˣ` for every mode,
    /// with `rel_slack` relative slack.
    pub fn lower_bounds_met(&self, rel_slack: f64) -> bool {
        let f = self.final_objective();
        self.bounds.iter().all(|b| f >= b.lower() - rel_slack * b.lower().abs())
    }

    /// Whether the final objective stays within `f̃′ᵐᵃˣ · (1 + rel_slack)`.
    pub fn upper_bounds_met(&self, rel_slack: f64) -> bool {
        let f = self.final_objective();
        self.bounds.iter().all(|b| f <= b.upper() * (1.0 + rel_slack))
    }
}

/// Squared eigenvalues of every `S_(g)^(j)`, sorted descending.
#[derive(Clone, Debug)]
pub struct ModeSpectra {
    squared: Vec<Vec<Vec<f64>>>,
}

impl ModeSpectra {
    pub fn compute(cov: &ModeCovariances, eig_tol: f64) -> Result<Self> {
        let squared = (0..cov.n_groups())
            .map(|g| {
                (0..cov.n_modes())
                    .map(|j| {
                        let e = sym_eig(cov.get(g, j), eig_tol)?;
                        let mut sq: Vec<f64> = e.values.iter().map(|l| l * l).collect();
                        sq.sort_by(|a, b| b.total_cmp(a));
                        Ok(sq)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { squared })
    }

    /// `w̃_(g)⁽⁻ᵏ⁾ = Π_{j≠k} Σ_{i≤R_j} λ_(g)i⁽ʲ⁾` for every group.
    pub fn weight_tilde(&self, k: usize, ranks: &[usize]) -> Vec<f64> {
        self.squared
            .iter()
            .map(|per_mode| {
                per_mode
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(j, sq)| sq.iter().take(ranks[j]).sum::<f64>())
                    .product()
            })
            .collect()
    }
}

/// Upper-bound weights `w̃_(g)⁽⁻ᵏ⁾` used at initialization, one per group.
pub fn init_weight_tilde(
    cov: &ModeCovariances,
    k: usize,
    ranks: &[usize],
    eig_tol: f64,
) -> Result<Vec<f64>> {
    check_mode(cov, k)?;
    check_ranks(ranks, cov.shape())?;
    Ok(ModeSpectra::compute(cov, eig_tol)?.weight_tilde(k, ranks))
}

/// `M̃(I⁽ᵏ⁾) = Σ_g w̃_g S_(g)⁽ᵏ⁾ S_(g)⁽ᵏ⁾`.
pub fn m_tilde(cov: &ModeCovariances, k: usize, weights: &[f64]) -> Result<SymmetricMatrix> {
    check_mode(cov, k)?;
    let p = cov.shape()[k];
    let mut acc = DenseMatrix::zeros(p, p);
    for (g, &w) in weights.iter().enumerate() {
        let s = cov.get(g, k).as_matrix();
        let ss = s.matmul(s)?;
        accumulate(&mut acc, &ss, w);
    }
    SymmetricMatrix::from_matrix_lower(&acc)
}

fn accumulate(acc: &mut DenseMatrix, term: &DenseMatrix, weight: f64) {
    let p = acc.rows();
    for j in 0..p {
        for (a, t) in acc.column_mut(j).iter_mut().zip(term.column(j)) {
            *a += weight * t;
        }
    }
}

/// Result of the surrogate initialization for one mode.
#[derive(Clone, Debug)]
pub struct InitBasis {
    pub basis: DenseMatrix,
    /// Sum of the top `R_k` eigenvalues of `M̃`.
    pub surrogate_max: f64,
    /// `tr(M̃)`.
    pub surrogate_trace: f64,
    pub alpha: f64,
}

/// Top-`R_k` eigenvectors of `M̃(I⁽ᵏ⁾)` together with the contraction ratio.
pub fn init_basis(cov: &ModeCovariances, k: usize, ranks: &[usize], eig_tol: f64) -> Result<InitBasis> {
    check_mode(cov, k)?;
    check_ranks(ranks, cov.shape())?;
    let spectra = ModeSpectra::compute(cov, eig_tol)?;
    init_basis_with(&spectra, cov, k, ranks, eig_tol)
}

fn init_basis_with(
    spectra: &ModeSpectra,
    cov: &ModeCovariances,
    k: usize,
    ranks: &[usize],
    eig_tol: f64,
) -> Result<InitBasis> {
    let weights = spectra.weight_tilde(k, ranks);
    let mt = m_tilde(cov, k, &weights)?;
    let eig = sym_eig(&mt, eig_tol)?;
    let r = ranks[k];
    warn_if_degenerate(&eig, r, k, "initialization");
    let trace = mt.trace();
    let surrogate_max = eig.top_sum(r);
    Ok(InitBasis {
        basis: eig.top_vectors(r),
        surrogate_max,
        surrogate_trace: trace,
        alpha: contraction_ratio(surrogate_max, trace, r, cov.shape()[k]),
    })
}

fn contraction_ratio(top: f64, trace: f64, rank: usize, extent: usize) -> f64 {
    if rank == extent || trace <= 0.0 {
        // all eigenvalues captured, or nothing to capture
        return 1.0;
    }
    (top / trace).clamp(0.0, 1.0)
}

fn warn_if_degenerate(eig: &SymEigen, r: usize, k: usize, stage: &str) {
    if eig.boundary_degenerate(r, DEGENERACY_TOL) {
        warn!(
            "mode {k} {stage}: eigenvalues {r} and {} coincide ({:e}); the rank-{r} subspace is not unique",
            r + 1,
            eig.values[r - 1]
        );
    }
}

/// Contraction ratios `α⁽ᵏ⁾` for every mode without fitting.
pub fn contraction_ratios(cov: &ModeCovariances, ranks: &[usize], eig_tol: f64) -> Result<Vec<f64>> {
    ModeSpectra::compute(cov, eig_tol)?.contraction_ratios(cov, ranks, eig_tol)
}

impl ModeSpectra {
    /// Contraction ratios reusing precomputed spectra, for scans over many
    /// rank tuples of the same covariances.
    pub fn contraction_ratios(&self, cov: &ModeCovariances, ranks: &[usize], eig_tol: f64) -> Result<Vec<f64>> {
        check_ranks(ranks, cov.shape())?;
        (0..cov.n_modes())
            .map(|k| {
                let weights = self.weight_tilde(k, ranks);
                let mt = m_tilde(cov, k, &weights)?;
                let eig = sym_eig(&mt, eig_tol)?;
                Ok(contraction_ratio(eig.top_sum(ranks[k]), mt.trace(), ranks[k], cov.shape()[k]))
            })
            .collect()
    }
}

/// `‖Vᵀ S V‖²_F = tr{Vᵀ S V Vᵀ S V}`.
fn mode_factor(v: &DenseMatrix, s: &SymmetricMatrix) -> Result<f64> {
    let lam = s.congruence(v)?;
    Ok(lam.as_matrix().data().iter().map(|x| x * x).sum())
}

fn mode_factors(bases: &[DenseMatrix], cov: &ModeCovariances) -> Result<Vec<Vec<f64>>> {
    check_bases(bases, cov)?;
    (0..cov.n_groups())
        .map(|g| {
            bases
                .iter()
                .enumerate()
                .map(|(j, v)| mode_factor(v, cov.get(g, j)))
                .collect()
        })
        .collect()
}

fn check_bases(bases: &[DenseMatrix], cov: &ModeCovariances) -> Result<()> {
    if bases.len() != cov.n_modes() || bases.iter().zip(cov.shape()).any(|(v, &p)| v.rows() != p) {
        return Err(MccaError::DimensionMismatch(
            "bases do not match the covariance shape".into(),
        ));
    }
    Ok(())
}

fn check_mode(cov: &ModeCovariances, k: usize) -> Result<()> {
    if k >= cov.n_modes() {
        return Err(MccaError::ModeOutOfRange {
            mode: k,
            order: cov.n_modes(),
        });
    }
    Ok(())
}

/// `w_(g)⁽⁻ᵏ⁾ = Π_{j≠k} tr{V⁽ʲ⁾ᵀ S V⁽ʲ⁾ V⁽ʲ⁾ᵀ S V⁽ʲ⁾}` at the given bases.
pub fn weight(bases: &[DenseMatrix], cov: &ModeCovariances, g: usize, k: usize) -> Result<f64> {
    check_bases(bases, cov)?;
    check_mode(cov, k)?;
    bases
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(j, v)| mode_factor(v, cov.get(g, j)))
        .product()
}

/// `M(V⁽ᵏ⁾) = Σ_g w_g S V Vᵀ S`, assembled as `Σ_g w_g (S V)(S V)ᵀ`.
pub fn m_matrix(bases: &[DenseMatrix], cov: &ModeCovariances, k: usize) -> Result<SymmetricMatrix> {
    check_mode(cov, k)?;
    let factors = mode_factors(bases, cov)?;
    m_matrix_with(bases, cov, k, &factors)
}

fn m_matrix_with(
    bases: &[DenseMatrix],
    cov: &ModeCovariances,
    k: usize,
    factors: &[Vec<f64>],
) -> Result<SymmetricMatrix> {
    let p = cov.shape()[k];
    let v = &bases[k];
    let mut lower = vec![0.0; p * p];
    for (g, per_mode) in factors.iter().enumerate() {
        let w: f64 = per_mode
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, f)| f)
            .product();
        let sv = cov.get(g, k).as_matrix().matmul(v)?;
        for c in 0..sv.cols() {
            let col = sv.column(c);
            for j in 0..p {
                let cj = w * col[j];
                for i in j..p {
                    lower[i + p * j] += cj * col[i];
                }
            }
        }
    }
    Ok(SymmetricMatrix::from_lower(p, |i, j| lower[i + p * j]))
}

/// `f_k(V) = tr{V⁽ᵏ⁾ᵀ M(V⁽ᵏ⁾) V⁽ᵏ⁾}`; equal to [`objective_total`] for every `k`.
pub fn objective_mode(bases: &[DenseMatrix], cov: &ModeCovariances, k: usize) -> Result<f64> {
    let m = m_matrix(bases, cov, k)?;
    Ok(m.congruence(&bases[k])?.trace())
}

/// `Σ_g Π_k ‖V⁽ᵏ⁾ᵀ S_(g)⁽ᵏ⁾ V⁽ᵏ⁾‖²_F`.
pub fn objective_total(bases: &[DenseMatrix], cov: &ModeCovariances) -> Result<f64> {
    Ok(total_from_factors(&mode_factors(bases, cov)?))
}

fn total_from_factors(factors: &[Vec<f64>]) -> f64 {
    factors.iter().map(|per_mode| per_mode.iter().product::<f64>()).sum()
}

/// One surrogate step for mode `k`: the top-`R_k` eigenvectors of `M(V_s⁽ᵏ⁾)`.
pub fn update_step(
    bases: &[DenseMatrix],
    cov: &ModeCovariances,
    k: usize,
    eig_tol: f64,
) -> Result<DenseMatrix> {
    let m = m_matrix(bases, cov, k)?;
    let eig = sym_eig(&m, eig_tol)?;
    let r = bases[k].cols();
    warn_if_degenerate(&eig, r, k, "update");
    Ok(eig.top_vectors(r))
}

fn latent_covariances(bases: &[DenseMatrix], cov: &ModeCovariances) -> Result<Vec<Vec<SymmetricMatrix>>> {
    (0..cov.n_groups())
        .map(|g| {
            bases
                .iter()
                .enumerate()
                .map(|(k, v)| cov.get(g, k).congruence(v))
                .collect()
        })
        .collect()
}

/// Runs initialization followed by cyclic mode updates until the total
/// objective's relative change drops below `config.tol` or `config.max_iter`
/// outer iterations have run.
pub fn fit(cov: &ModeCovariances, config: &FitConfig) -> Result<(MccaModel, FitReport)> {
    config.validate(cov.shape())?;
    if !cov.is_finite() {
        return Err(MccaError::NonFinite("covariance input"));
    }
    let spectra = ModeSpectra::compute(cov, config.eig_tol)?;
    let mut bases = Vec::with_capacity(cov.n_modes());
    let mut bounds = Vec::with_capacity(cov.n_modes());
    for k in 0..cov.n_modes() {
        let init = init_basis_with(&spectra, cov, k, &config.ranks, config.eig_tol)?;
        bounds.push(ModeBound {
            alpha: init.alpha,
            surrogate_max: init.surrogate_max,
        });
        bases.push(init.basis);
    }

    let mut trace = vec![objective_total(&bases, cov)?];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        for k in 0..cov.n_modes() {
            let factors = mode_factors(&bases, cov)?;
            let m = m_matrix_with(&bases, cov, k, &factors)?;
            let eig = sym_eig(&m, config.eig_tol)?;
            warn_if_degenerate(&eig, config.ranks[k], k, "update");
            bases[k] = eig.top_vectors(config.ranks[k]);
        }
        let previous = *trace.last().expect("non-empty");
        let current = objective_total(&bases, cov)?;
        trace.push(current);
        if (current - previous).abs() <= config.tol * previous.abs() {
            converged = true;
            break;
        }
    }

    let latent = latent_covariances(&bases, cov)?;
    let alphas: Vec<f64> = bounds.iter().map(|b| b.alpha).collect();
    let model = MccaModel::from_parts(bases, latent, alphas.clone())?;
    Ok((
        model,
        FitReport {
            objective_trace: trace,
            alphas,
            bounds,
            converged,
            iterations,
        },
    ))
}

/// Computes mode covariances from `data` and fits.
pub fn fit_dataset(data: &GroupedDataset, config: &FitConfig) -> Result<(MccaModel, FitReport)> {
    fit(&ModeCovariances::from_dataset(data)?, config)
}

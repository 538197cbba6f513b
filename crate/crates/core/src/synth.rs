//! Seeded generator of grouped tensor data sharing planted mode bases.
//!
//! Each group `g` draws latent cores `Z ×₁ L_(g)⁽¹⁾ ⋯ ×_M L_(g)⁽ᴹ⁾` with
//! `Z` standard normal and `L_(g)⁽ᵏ⁾ = Q diag(√d)` for a group-specific
//! rotation `Q` and decaying spectrum `d`, so the groups have distinct latent
//! covariances. Samples are the cores mapped through the shared bases
//! `V⁽ᵏ⁾`, rescaled to unit mean square, plus i.i.d. Gaussian noise of
//! standard deviation `noise`.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::covariance::GroupedDataset;
use crate::error::{MccaError, Result};
use crate::ingest::{save_tensor, DatasetManifest, GroupSpec, MANIFEST_VERSION};
use crate::linalg::orthonormalize;
use crate::mcca::check_ranks;
use crate::tensor::{mode_product, DenseMatrix, DenseTensor};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub shape: Vec<usize>,
    /// Dimension of the planted subspace in each mode.
    pub ranks: Vec<usize>,
    pub groups: usize,
    pub samples_per_group: usize,
    pub noise: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        check_ranks(&self.ranks, &self.shape)?;
        if self.groups == 0 || self.samples_per_group == 0 {
            return Err(MccaError::InvalidConfig("need at least one group and one sample".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(MccaError::InvalidConfig(format!("noise must be non-negative, got {}", self.noise)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SynthDataset {
    pub data: GroupedDataset,
    pub bases: Vec<DenseMatrix>,
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Orthonormal `rows × cols`; Gaussian draws are independent with
/// probability one, so a retry is only a safeguard.
fn random_orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    loop {
        if let Ok(q) = orthonormalize(&gaussian_matrix(rows, cols, rng)) {
            return q;
        }
    }
}

pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bases: Vec<DenseMatrix> = config
        .shape
        .iter()
        .zip(&config.ranks)
        .map(|(&p, &r)| random_orthonormal(p, r, &mut rng))
        .collect();

    let mut groups = Vec::with_capacity(config.groups);
    for _ in 0..config.groups {
        let decay: f64 = rng.random_range(0.35..0.9);
        let mut factors = Vec::with_capacity(config.ranks.len());
        let mut power = 1.0;
        for &r in &config.ranks {
            let q = random_orthonormal(r, r, &mut rng);
            let spectrum: Vec<f64> = (0..r).map(|j| decay.powi(j as i32)).collect();
            power *= spectrum.iter().sum::<f64>();
            let roots: Vec<f64> = spectrum.iter().map(|d| d.sqrt()).collect();
            factors.push(q.matmul(&DenseMatrix::from_diagonal(&roots))?);
        }
        let p_total: f64 = config.shape.iter().map(|&p| p as f64).product();
        let gain = (p_total / power).sqrt();
        let mut samples = Vec::with_capacity(config.samples_per_group);
        for _ in 0..config.samples_per_group {
            let mut x = DenseTensor::from_fn(config.ranks.clone(), |_| rng.sample(StandardNormal))?;
            for (k, l) in factors.iter().enumerate() {
                x = mode_product(&x, l, k)?;
            }
            for (k, v) in bases.iter().enumerate() {
                x = mode_product(&x, v, k)?;
            }
            let mut x = x.scale(gain);
            if config.noise > 0.0 {
                for v in x.data_mut() {
                    *v += config.noise * rng.sample::<f64, _>(StandardNormal);
                }
            }
            samples.push(x);
        }
        groups.push(samples);
    }
    let labels = (0..config.groups).map(|g| format!("g{g:02}")).collect();
    Ok(SynthDataset {
        data: GroupedDataset::with_labels(groups, labels)?,
        bases,
    })
}

/// Writes `g{GG}/s{IIII}.mctn` per sample plus `manifest.toml`, returning the
/// manifest path.
pub fn write_dataset(dir: impl AsRef<Path>, data: &GroupedDataset) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let mut specs = Vec::with_capacity(data.n_groups());
    for (g, group) in data.groups().iter().enumerate() {
        let sub = format!("g{g:02}");
        let gdir = dir.join(&sub);
        fs::create_dir_all(&gdir).map_err(|e| MccaError::io(&gdir, e))?;
        for (i, x) in group.iter().enumerate() {
            save_tensor(gdir.join(format!("s{i:04}.mctn")), x)?;
        }
        specs.push(GroupSpec {
            label: data.labels()[g].clone(),
            files: vec![format!("{sub}/*.mctn")],
            labels: None,
            class: None,
            limit: None,
            exclude: Vec::new(),
        });
    }
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        root: None,
        downsample: 1,
        channels: Default::default(),
        groups: specs,
    };
    let path = dir.join("manifest.toml");
    fs::write(&path, manifest.to_toml()?).map_err(|e| MccaError::io(&path, e))?;
    Ok(path)
}

//! Seeded inputs shared by the benchmarks.

use mcca::{DenseMatrix, DenseTensor, GroupedDataset, ModeCovariances, SymmetricMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_psd(p: usize, rng: &mut ChaCha8Rng) -> SymmetricMatrix {
    let a = DenseMatrix::from_fn(p, p + 1, |_, _| rng.random_range(-1.0..1.0));
    SymmetricMatrix::from_matrix_lower(&a.matmul(&a.transpose()).expect("conforming")).expect("square")
}

pub fn random_covariances(shape: &[usize], groups: usize, seed: u64) -> ModeCovariances {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mats = (0..groups)
        .map(|_| shape.iter().map(|&p| random_psd(p, &mut rng)).collect())
        .collect();
    ModeCovariances::from_matrices(shape.to_vec(), mats).expect("valid covariances")
}

pub fn random_dataset(shape: &[usize], groups: usize, per_group: usize, seed: u64) -> GroupedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = (0..groups)
        .map(|_| {
            (0..per_group)
                .map(|_| DenseTensor::from_fn(shape.to_vec(), |_| rng.random_range(-1.0..1.0)).expect("valid shape"))
                .collect()
        })
        .collect();
    GroupedDataset::new(groups).expect("non-empty groups")
}

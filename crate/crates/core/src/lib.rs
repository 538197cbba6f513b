//! Multilinear common component analysis (MCCA) for grouped tensor data,
//! with PCA, CCA and MPCA baselines, compression metrics and dataset loaders.

pub mod baselines;
pub mod container;
pub mod covariance;
pub mod error;
pub mod ingest;
pub mod linalg;
pub mod mcca;
pub mod metrics;
pub mod synth;
pub mod tensor;

pub use baselines::{cca_fit, mpca_fit, pca_fit, LinearModel, Method, MpcaFit, MpcaModel, VectorConfig};
pub use container::ModelFile;
pub use covariance::{full_covariance, mode_covariance, GroupedDataset, ModeCovariances, SymmetricMatrix};
pub use error::{MccaError, Result};
pub use mcca::{fit, fit_dataset, FitConfig, FitReport, MccaModel};
pub use ingest::{assemble, DatasetManifest};
pub use metrics::{cr, param_count, principal_angles, rer, CompressionRecord, Reconstruct};
pub use tensor::{fold, mode_product, unfold, DenseMatrix, DenseTensor};
pub use synth::{SynthConfig, SynthDataset};

//! Evaluation tools: nearest-neighbour classification, macro-F1,
//! cross-validation, K-means, the adjusted Rand index and PCA.

mod ari;
mod cv;
mod f1;
mod kmeans;
mod knn;
mod pca;

pub use ari::adjusted_rand_index;
pub use cv::{cross_validate, CvReport};
pub use f1::macro_f1;
pub use kmeans::{inertia, kmeans, KMeansResult};
pub use knn::knn_classify;
pub use pca::{pca, Pca};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent RNG for repeat `index` of an experiment seeded with `seed`.
pub fn repeat_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

//! Block DCT, Saab transforms, PCA, pooling and per-channel statistics.

pub mod dct;
pub mod pca;
pub mod pool;
pub mod saab;
pub mod stats;

pub use dct::{block_dct_8x8, inverse_block_dct_8x8, ZIGZAG};
pub use pca::{fit_pca, Pca, PcaAccumulator};
pub use pool::abs_max_pool;
pub use saab::{extract_patches, fit_saab, Saab, Window};
pub use stats::channel_std;

//! No-reference video quality assessment built from unsupervised transforms.
//!
//! A clip is cropped hierarchically into sub-videos, sub-images, cubes and
//! sub-cubes. Four representation generators (spatial, spatio-color,
//! temporal, spatio-temporal) turn those crops into long feature vectors
//! using block DCT, Saab transforms, PCA and motion statistics. A relevance
//! test keeps the most label-predictive dimensions, a boosted-tree regressor
//! scores each cube, and cube scores are rolled up to a video score.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which is what the CLI uses.

pub mod config;
pub mod cropping;
pub mod error;
pub mod evaluation;
pub mod feature_selection;
pub mod linalg;
pub mod media_io;
pub mod motion;
pub mod persistence;
pub mod pipeline;
pub mod regression;
pub mod representations;
pub mod scalar;
pub mod seed;
pub mod tensor;
pub mod transforms;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar type used by the concrete aliases below.
pub type Real = f64;

pub type SaabKernel = transforms::saab::Saab<Real>;
pub type PcaBasis = transforms::pca::Pca<Real>;
pub type ChannelTensor = tensor::ChannelTensor<Real>;
pub type Matrix = tensor::Matrix<Real>;
pub type MotionField = motion::MotionField<Real>;
pub type TemporalStats14 = motion::TemporalStats14<Real>;
pub type RftResult = feature_selection::RftResult<Real>;
pub type GbdtModel = regression::gbdt::GbdtModel<Real>;
pub type ScoreReport = regression::ensemble::ScoreReport<Real>;
pub type TrainedModel = pipeline::TrainedModel<Real>;
pub type ProtocolResult = evaluation::protocol::ProtocolResult<Real>;

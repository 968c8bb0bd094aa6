//! Correlation metrics, the repeated split protocol and cost benchmarking.

pub mod bench;
pub mod metrics;
pub mod protocol;

pub use bench::{benchmark, estimate_flops, CostReport, FlopEstimate};
pub use metrics::{plcc, ranks, srocc, PredictionPairs};
pub use protocol::{
    load_samples, run_protocol, split_indices, split_sizes, video_crop_seed, ManifestSource,
    ProtocolResult, RunResult, SplitIndices, SyntheticSource, VideoSource,
};

//! The four unsupervised representation generators.
//!
//! Each pipeline is created unfitted, learns its Saab kernels and PCA bases
//! from training crops in `fit`, then maps a crop to a fixed-length vector in
//! `generate`. Calling `generate` before `fit` is a state error.

pub mod spatial;
pub mod spatio_color;
pub mod spatio_temporal;
pub mod temporal;

pub use spatial::SpatialPipeline;
pub use spatio_color::SpatioColorPipeline;
pub use spatio_temporal::SpatioTemporalPipeline;
pub use temporal::TemporalPipeline;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::ChannelTensor;
use crate::transforms::pca::{Pca, PcaAccumulator};

/// Representation type, in the fixed concatenation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Spatial,
    SpatioColor,
    Temporal,
    SpatioTemporal,
}

impl Kind {
    pub const ALL: [Kind; 4] = [
        Kind::Spatial,
        Kind::SpatioColor,
        Kind::Temporal,
        Kind::SpatioTemporal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Spatial => "spatial",
            Kind::SpatioColor => "spatio_color",
            Kind::Temporal => "temporal",
            Kind::SpatioTemporal => "spatio_temporal",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Published dimensions these reconstructions are logged against.
    pub fn reference_dim(self) -> usize {
        match self {
            Kind::Spatial => 6637,
            Kind::SpatioColor => 6793,
            Kind::Temporal => 420,
            Kind::SpatioTemporal => 8878,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepresentationVector<T> {
    pub kind: Kind,
    pub values: Vec<T>,
}

impl<T> RepresentationVector<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// How one channel group contributes to the flat vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregation {
    /// Every coefficient, flattened.
    Passthrough,
    /// First `k` PCA coefficients per channel.
    Pca(usize),
    /// Population standard deviation per channel.
    Std,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggregationGroup {
    pub name: &'static str,
    pub channels: usize,
    pub channel_len: usize,
    pub op: Aggregation,
}

impl AggregationGroup {
    pub fn contribution(&self) -> usize {
        match self.op {
            Aggregation::Passthrough => self.channels * self.channel_len,
            Aggregation::Pca(k) => self.channels * k,
            Aggregation::Std => self.channels,
        }
    }
}

/// Ordered channel-group contributions; their sum is the output dimension.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AggregationPlan {
    pub groups: Vec<AggregationGroup>,
}

impl AggregationPlan {
    pub fn dim(&self) -> usize {
        self.groups.iter().map(AggregationGroup::contribution).sum()
    }
}

/// Settings shared by the representation pipelines.
#[derive(Clone, Debug, PartialEq)]
pub struct RepresentationConfig {
    pub pca_per_channel_n: usize,
    pub temporal_spectral_enabled: bool,
    pub temporal_spectral_n: usize,
    /// Fewest training crops a pipeline may be fitted on.
    pub fit_min_samples: usize,
    /// Patch budget per Saab kernel fit.
    pub fit_max_patches: usize,
}

impl Default for RepresentationConfig {
    fn default() -> Self {
        Self {
            pca_per_channel_n: 8,
            temporal_spectral_enabled: false,
            temporal_spectral_n: 64,
            fit_min_samples: 1000,
            fit_max_patches: 100_000,
        }
    }
}

impl RepresentationConfig {
    pub(crate) fn check_fit_count(&self, kind: Kind, n: usize) -> Result<()> {
        if n < self.fit_min_samples.max(2) {
            return Err(Error::Fit(format!(
                "{} pipeline needs at least {} training samples, got {n}",
                kind.name(),
                self.fit_min_samples.max(2)
            )));
        }
        Ok(())
    }
}

pub(crate) fn unfitted(kind: Kind) -> Error {
    Error::State(format!("{} pipeline used before fit", kind.name()))
}

pub(crate) fn check_output<T>(
    kind: Kind,
    plan: &AggregationPlan,
    values: Vec<T>,
) -> RepresentationVector<T> {
    assert_eq!(
        values.len(),
        plan.dim(),
        "{} representation dim drifted from its aggregation plan",
        kind.name()
    );
    RepresentationVector { kind, values }
}

/// One PCA per channel of a band.
pub(crate) struct ChannelPcaFit<T> {
    accs: Vec<PcaAccumulator<T>>,
}

impl<T: Scalar> ChannelPcaFit<T> {
    pub(crate) fn new(channels: usize, dim: usize) -> Self {
        Self {
            accs: (0..channels).map(|_| PcaAccumulator::new(dim)).collect(),
        }
    }

    /// Pushes channel `c` of one sample.
    pub(crate) fn push(&mut self, c: usize, v: &[T]) -> Result<()> {
        self.accs[c].push(v)
    }

    pub(crate) fn finish(self, k: usize) -> Result<Vec<Pca<T>>> {
        self.accs.iter().map(|a| a.fit(k)).collect()
    }
}

pub(crate) fn project_channels<T: Scalar>(
    bases: &[Pca<T>],
    tensor: &ChannelTensor<T>,
    out: &mut Vec<T>,
) -> Result<()> {
    for (c, b) in bases.iter().enumerate() {
        out.extend(b.apply(tensor.channel(c))?);
    }
    Ok(())
}

//! Spatial representation of a sub-image's luma.
//!
//! 8x8 block DCT splits DC from the 63 AC channels. A 4x4 stride-2 Saab hop
//! on the DC map gives 16 channels: 3 low (DC, AC1, AC2) and 13 mid. A
//! second 3x3 stride-2 hop on the low band gives 27 channels kept as-is; the
//! mid band is abs-max pooled 2x2 and PCA-reduced per channel; the AC band is
//! abs-max pooled 4x4 and summarised by per-channel std.

use super::{
    check_output, project_channels, unfitted, Aggregation, AggregationGroup, AggregationPlan,
    ChannelPcaFit, Kind, RepresentationConfig, RepresentationVector,
};
use crate::cropping::SubImage;
use crate::error::Result;
use crate::scalar::Scalar;
use crate::seed::derive_seed;
use crate::tensor::{Band, ChannelTensor};
use crate::transforms::dct::{block_dct_8x8, split_dc_ac};
use crate::transforms::pca::Pca;
use crate::transforms::pool::abs_max_pool;
use crate::transforms::saab::{fit_saab, sample_patches_with, Saab, SaabGeometry, Window};
use crate::transforms::stats::channel_std;

pub const HOP1_CHANNELS: usize = 16;
pub const LOW_CHANNELS: usize = 3;
pub const HOP2_CHANNELS: usize = 27;

pub fn hop1_geometry() -> SaabGeometry {
    SaabGeometry::new(Window::square(4), Window::square(2), 1)
}

pub fn hop2_geometry() -> SaabGeometry {
    SaabGeometry::new(Window::square(3), Window::square(2), LOW_CHANNELS)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpatialState<T> {
    pub hop1: Saab<T>,
    pub hop2: Saab<T>,
    /// One basis per mid-band channel.
    pub mid_pca: Vec<Pca<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpatialPipeline<T> {
    pub size: usize,
    pub config: RepresentationConfig,
    pub state: Option<SpatialState<T>>,
}

/// Intermediate grids for a `size x size` input.
struct Shapes {
    dct: usize,
    hop1: usize,
    mid: usize,
    hop2: usize,
    high: usize,
}

fn shapes(size: usize) -> Result<Shapes> {
    let dct = size / 8;
    let (hop1, _, _) = hop1_geometry().grid(dct, dct, 1)?;
    let (hop2, _, _) = hop2_geometry().grid(hop1, hop1, 1)?;
    Ok(Shapes {
        dct,
        hop1,
        mid: hop1 / 2,
        hop2,
        high: dct / 4,
    })
}

fn dct_bands<T: Scalar>(img: &SubImage) -> Result<(ChannelTensor<T>, ChannelTensor<T>)> {
    Ok(split_dc_ac(&block_dct_8x8(&img.luma.to_real::<T>())?))
}

fn mid_band<T: Scalar>(h1: &ChannelTensor<T>, mid: usize) -> Result<ChannelTensor<T>> {
    let m = h1.select_channels(LOW_CHANNELS..HOP1_CHANNELS, Band::Mid);
    abs_max_pool(&m.crop_spatial(2 * mid, 2 * mid)?, 2, 2)
}

impl<T: Scalar> SpatialPipeline<T> {
    pub fn new(size: usize, config: RepresentationConfig) -> Self {
        Self {
            size,
            config,
            state: None,
        }
    }

    pub fn is_fitted(&self) -> bool {
        self.state.is_some()
    }

    pub fn plan(&self) -> Result<AggregationPlan> {
        let s = shapes(self.size)?;
        Ok(AggregationPlan {
            groups: vec![
                AggregationGroup {
                    name: "low",
                    channels: HOP2_CHANNELS,
                    channel_len: s.hop2 * s.hop2,
                    op: Aggregation::Passthrough,
                },
                AggregationGroup {
                    name: "mid",
                    channels: HOP1_CHANNELS - LOW_CHANNELS,
                    channel_len: s.mid * s.mid,
                    op: Aggregation::Pca(self.config.pca_per_channel_n),
                },
                AggregationGroup {
                    name: "high",
                    channels: 63,
                    channel_len: s.high * s.high,
                    op: Aggregation::Std,
                },
            ],
        })
    }

    pub fn dim(&self) -> Result<usize> {
        Ok(self.plan()?.dim())
    }

    pub fn fit(&mut self, images: &[SubImage], seed: u64) -> Result<()> {
        self.config.check_fit_count(Kind::Spatial, images.len())?;
        let s = shapes(self.size)?;
        let max = self.config.fit_max_patches;
        let dcs: Vec<ChannelTensor<T>> = images
            .iter()
            .map(|img| dct_bands(img).map(|b| b.0))
            .collect::<Result<_>>()?;

        let g1 = hop1_geometry();
        let patches = sample_patches_with(
            dcs.len(),
            (s.dct, s.dct, 1),
            &g1,
            max,
            derive_seed(seed, 1),
            |i| Ok(dcs[i].clone()),
        )?;
        let hop1 = fit_saab(&patches, g1, HOP1_CHANNELS - 1)?;
        drop(patches);

        let g2 = hop2_geometry();
        let patches = sample_patches_with(
            dcs.len(),
            (s.hop1, s.hop1, 1),
            &g2,
            max,
            derive_seed(seed, 2),
            |i| {
                Ok(hop1
                    .apply(&dcs[i])?
                    .select_channels(0..LOW_CHANNELS, Band::Low))
            },
        )?;
        let hop2 = fit_saab(&patches, g2, HOP2_CHANNELS - 1)?;
        drop(patches);

        let mut mid_fit = ChannelPcaFit::new(HOP1_CHANNELS - LOW_CHANNELS, s.mid * s.mid);
        for dc in &dcs {
            let mid = mid_band(&hop1.apply(dc)?, s.mid)?;
            for c in 0..mid.channels {
                mid_fit.push(c, mid.channel(c))?;
            }
        }
        let mid_pca = mid_fit.finish(self.config.pca_per_channel_n)?;
        self.state = Some(SpatialState {
            hop1,
            hop2,
            mid_pca,
        });
        Ok(())
    }

    pub fn generate(&self, img: &SubImage) -> Result<RepresentationVector<T>> {
        let st = self.state.as_ref().ok_or_else(|| unfitted(Kind::Spatial))?;
        let plan = self.plan()?;
        let s = shapes(self.size)?;
        let (dc, ac) = dct_bands::<T>(img)?;
        let h1 = st.hop1.apply(&dc)?;
        let low = h1.select_channels(0..LOW_CHANNELS, Band::Low);
        let h2 = st.hop2.apply(&low)?;
        let mid = mid_band(&h1, s.mid)?;
        let high = abs_max_pool(&ac, 4, 4)?;

        let mut v = Vec::with_capacity(plan.dim());
        v.extend_from_slice(&h2.data);
        project_channels(&st.mid_pca, &mid, &mut v)?;
        v.extend(channel_std(&high));
        Ok(check_output(Kind::Spatial, &plan, v))
    }
}

//! Spatio-color representation of a sub-image (Y, Cb, Cr).
//!
//! Abs-max pooling 2x2, then a 4x4x3 Saab hop over the three colour planes
//! jointly (48 channels). The low band (DC, AC1, AC2) is refined by a 4x4
//! stride-4 hop per channel and kept as-is; the 45 high channels are
//! abs-max pooled 2x2 and summarised by std and per-channel PCA.

use super::{
    check_output, project_channels, unfitted, Aggregation, AggregationGroup, AggregationPlan,
    ChannelPcaFit, Kind, RepresentationConfig, RepresentationVector,
};
use crate::cropping::SubImage;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::derive_seed;
use crate::tensor::{Band, ChannelTensor};
use crate::transforms::pca::Pca;
use crate::transforms::pool::abs_max_pool;
use crate::transforms::saab::{fit_saab, sample_patches_with, Saab, SaabGeometry, Window};
use crate::transforms::stats::channel_std;

pub const HOP1_CHANNELS: usize = 48;
pub const LOW_CHANNELS: usize = 3;
pub const HOP2_CHANNELS: usize = 16;

pub fn hop1_geometry() -> SaabGeometry {
    SaabGeometry::new(Window::square(4), Window::square(4), 3)
}

pub fn hop2_geometry() -> SaabGeometry {
    SaabGeometry::new(Window::square(4), Window::square(4), 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpatioColorState<T> {
    pub hop1: Saab<T>,
    /// One kernel per low-band channel.
    pub hop2: Vec<Saab<T>>,
    /// One basis per high-band channel.
    pub high_pca: Vec<Pca<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpatioColorPipeline<T> {
    pub size: usize,
    pub config: RepresentationConfig,
    pub state: Option<SpatioColorState<T>>,
}

struct Shapes {
    pooled: usize,
    hop1: usize,
    high: usize,
    hop2: usize,
}

fn shapes(size: usize) -> Result<Shapes> {
    let pooled = size / 2;
    let (hop1, _, _) = hop1_geometry().grid(pooled, pooled, 1)?;
    let (hop2, _, _) = hop2_geometry().grid(hop1, hop1, 1)?;
    Ok(Shapes {
        pooled,
        hop1,
        high: hop1 / 2,
        hop2,
    })
}

fn colour_input<T: Scalar>(img: &SubImage) -> Result<ChannelTensor<T>> {
    let (w, h) = (img.luma.width, img.luma.height);
    for (name, p) in [("Cb", &img.chroma_b), ("Cr", &img.chroma_r)] {
        if p.data.is_empty() || p.width != w || p.height != h {
            return Err(Error::Input(format!(
                "spatio-color representation needs a {w}x{h} {name} plane"
            )));
        }
    }
    let t = ChannelTensor::from_planes(&[
        img.luma.to_real::<T>(),
        img.chroma_b.to_real::<T>(),
        img.chroma_r.to_real::<T>(),
    ])?;
    abs_max_pool(&t, 2, 2)
}

fn high_band<T: Scalar>(h1: &ChannelTensor<T>) -> Result<ChannelTensor<T>> {
    abs_max_pool(
        &h1.select_channels(LOW_CHANNELS..HOP1_CHANNELS, Band::High),
        2,
        2,
    )
}

impl<T: Scalar> SpatioColorPipeline<T> {
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
        let high = HOP1_CHANNELS - LOW_CHANNELS;
        Ok(AggregationPlan {
            groups: vec![
                AggregationGroup {
                    name: "low",
                    channels: LOW_CHANNELS * HOP2_CHANNELS,
                    channel_len: s.hop2 * s.hop2,
                    op: Aggregation::Passthrough,
                },
                AggregationGroup {
                    name: "high_std",
                    channels: high,
                    channel_len: s.high * s.high,
                    op: Aggregation::Std,
                },
                AggregationGroup {
                    name: "high_pca",
                    channels: high,
                    channel_len: s.high * s.high,
                    op: Aggregation::Pca(self.config.pca_per_channel_n),
                },
            ],
        })
    }

    pub fn dim(&self) -> Result<usize> {
        Ok(self.plan()?.dim())
    }

    pub fn fit(&mut self, images: &[SubImage], seed: u64) -> Result<()> {
        self.config
            .check_fit_count(Kind::SpatioColor, images.len())?;
        let s = shapes(self.size)?;
        let max = self.config.fit_max_patches;

        let g1 = hop1_geometry();
        let patches = sample_patches_with(
            images.len(),
            (s.pooled, s.pooled, 1),
            &g1,
            max,
            derive_seed(seed, 1),
            |i| colour_input(&images[i]),
        )?;
        let hop1 = fit_saab(&patches, g1, HOP1_CHANNELS - 1)?;
        drop(patches);

        let mut lows = Vec::with_capacity(images.len());
        let mut high_fit = ChannelPcaFit::new(HOP1_CHANNELS - LOW_CHANNELS, s.high * s.high);
        for img in images {
            let h1 = hop1.apply(&colour_input(img)?)?;
            let high = high_band(&h1)?;
            for c in 0..high.channels {
                high_fit.push(c, high.channel(c))?;
            }
            lows.push(h1.select_channels(0..LOW_CHANNELS, Band::Low));
        }
        let high_pca = high_fit.finish(self.config.pca_per_channel_n)?;

        let g2 = hop2_geometry();
        let hop2 = (0..LOW_CHANNELS)
            .map(|c| {
                let patches = sample_patches_with(
                    lows.len(),
                    (s.hop1, s.hop1, 1),
                    &g2,
                    max,
                    derive_seed(seed, 2 + c as u64),
                    |i| Ok(lows[i].select_channels(c..c + 1, Band::Low)),
                )?;
                fit_saab(&patches, g2, HOP2_CHANNELS - 1)
            })
            .collect::<Result<Vec<_>>>()?;
        self.state = Some(SpatioColorState {
            hop1,
            hop2,
            high_pca,
        });
        Ok(())
    }

    pub fn generate(&self, img: &SubImage) -> Result<RepresentationVector<T>> {
        let st = self
            .state
            .as_ref()
            .ok_or_else(|| unfitted(Kind::SpatioColor))?;
        let plan = self.plan()?;
        let h1 = st.hop1.apply(&colour_input::<T>(img)?)?;
        let high = high_band(&h1)?;

        let mut v = Vec::with_capacity(plan.dim());
        for (c, k) in st.hop2.iter().enumerate() {
            v.extend_from_slice(&k.apply(&h1.select_channels(c..c + 1, Band::Low))?.data);
        }
        v.extend(channel_std(&high));
        project_channels(&st.high_pca, &high, &mut v)?;
        Ok(check_output(Kind::SpatioColor, &plan, v))
    }
}

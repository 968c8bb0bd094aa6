//! Spatio-temporal representation of a luma sub-cube.
//!
//! An 8x8x3 Saab hop gives 192 channels on a 12x12x5 grid. The four low
//! channels (DC, AC1..AC3) each get their own 2x2x5 hop (20 channels, 80 in
//! total); the 188 high channels are abs-max pooled 2x2. Every one of the
//! resulting channels contributes its first PCA coefficients and its std.

use super::{
    check_output, project_channels, unfitted, Aggregation, AggregationGroup, AggregationPlan,
    ChannelPcaFit, Kind, RepresentationConfig, RepresentationVector,
};
use crate::cropping::SubCube;
use crate::error::{Error, Result};
use crate::scalar::{from_u8, Scalar};
use crate::seed::derive_seed;
use crate::tensor::{Band, ChannelTensor};
use crate::transforms::pca::Pca;
use crate::transforms::pool::abs_max_pool;
use crate::transforms::saab::{fit_saab, sample_patches_with, Saab, SaabGeometry, Window};
use crate::transforms::stats::channel_std;

pub const HOP1_CHANNELS: usize = 192;
pub const LOW_CHANNELS: usize = 4;
pub const HOP2_CHANNELS: usize = 20;

pub fn hop1_geometry() -> SaabGeometry {
    let w = Window::new(8, 8, 3);
    SaabGeometry::new(w, w, 1)
}

pub fn hop2_geometry(frames: usize) -> SaabGeometry {
    let w = Window::new(2, 2, frames);
    SaabGeometry::new(w, w, 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpatioTemporalState<T> {
    pub hop1: Saab<T>,
    /// One kernel per low-band channel.
    pub hop2: Vec<Saab<T>>,
    /// Bases for the 80 refined low channels, then the 188 high channels.
    pub low_pca: Vec<Pca<T>>,
    pub high_pca: Vec<Pca<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpatioTemporalPipeline<T> {
    /// `(rows, cols, frames)` of the input sub-cube.
    pub dims: (usize, usize, usize),
    pub config: RepresentationConfig,
    pub state: Option<SpatioTemporalState<T>>,
}

struct Shapes {
    grid: (usize, usize, usize),
    high: (usize, usize),
    hop2: (usize, usize),
}

fn shapes(dims: (usize, usize, usize)) -> Result<Shapes> {
    let grid = hop1_geometry().grid(dims.0, dims.1, dims.2)?;
    let (h2, w2, _) = hop2_geometry(grid.2).grid(grid.0, grid.1, grid.2)?;
    Ok(Shapes {
        grid,
        high: (grid.0 / 2, grid.1 / 2),
        hop2: (h2, w2),
    })
}

fn input<T: Scalar>(cube: &SubCube, dims: (usize, usize, usize)) -> Result<ChannelTensor<T>> {
    if cube.dims != dims || cube.luma.len() != dims.0 * dims.1 * dims.2 {
        return Err(Error::shape(format!(
            "sub-cube must be {}x{}x{}, got {}x{}x{}",
            dims.0, dims.1, dims.2, cube.dims.0, cube.dims.1, cube.dims.2
        )));
    }
    ChannelTensor::from_data(
        dims.0,
        dims.1,
        dims.2,
        1,
        cube.luma.iter().map(|&v| from_u8(v)).collect(),
    )
}

fn high_band<T: Scalar>(h1: &ChannelTensor<T>) -> Result<ChannelTensor<T>> {
    abs_max_pool(
        &h1.select_channels(LOW_CHANNELS..HOP1_CHANNELS, Band::High),
        2,
        2,
    )
}

impl<T: Scalar> SpatioTemporalPipeline<T> {
    pub fn new(dims: (usize, usize, usize), config: RepresentationConfig) -> Self {
        Self {
            dims,
            config,
            state: None,
        }
    }

    pub fn is_fitted(&self) -> bool {
        self.state.is_some()
    }

    pub fn plan(&self) -> Result<AggregationPlan> {
        let s = shapes(self.dims)?;
        let k = self.config.pca_per_channel_n;
        let low = LOW_CHANNELS * HOP2_CHANNELS;
        let high = HOP1_CHANNELS - LOW_CHANNELS;
        let low_len = s.hop2.0 * s.hop2.1;
        let high_len = s.high.0 * s.high.1 * s.grid.2;
        let g = |name, channels, channel_len, op| AggregationGroup {
            name,
            channels,
            channel_len,
            op,
        };
        Ok(AggregationPlan {
            groups: vec![
                g("low_pca", low, low_len, Aggregation::Pca(k)),
                g("high_pca", high, high_len, Aggregation::Pca(k)),
                g("low_std", low, low_len, Aggregation::Std),
                g("high_std", high, high_len, Aggregation::Std),
            ],
        })
    }

    pub fn dim(&self) -> Result<usize> {
        Ok(self.plan()?.dim())
    }

    fn refine_low(&self, hop2: &[Saab<T>], h1: &ChannelTensor<T>) -> Result<ChannelTensor<T>> {
        let mut data = Vec::new();
        let mut shape = (0, 0, 0);
        for (c, k) in hop2.iter().enumerate() {
            let out = k.apply(&h1.select_channels(c..c + 1, Band::Low))?;
            shape = (out.height, out.width, out.depth);
            data.extend(out.data);
        }
        ChannelTensor::from_data(shape.0, shape.1, shape.2, hop2.len() * HOP2_CHANNELS, data)
            .map(|t| t.with_band(Band::Low))
    }

    pub fn fit(&mut self, cubes: &[SubCube], seed: u64) -> Result<()> {
        self.config
            .check_fit_count(Kind::SpatioTemporal, cubes.len())?;
        let s = shapes(self.dims)?;
        let max = self.config.fit_max_patches;
        let k = self.config.pca_per_channel_n;

        let g1 = hop1_geometry();
        let patches = sample_patches_with(
            cubes.len(),
            self.dims,
            &g1,
            max,
            derive_seed(seed, 1),
            |i| input(&cubes[i], self.dims),
        )?;
        let hop1 = fit_saab(&patches, g1, HOP1_CHANNELS - 1)?;
        drop(patches);

        let mut lows = Vec::with_capacity(cubes.len());
        let mut high_fit =
            ChannelPcaFit::new(HOP1_CHANNELS - LOW_CHANNELS, s.high.0 * s.high.1 * s.grid.2);
        for cube in cubes {
            let h1 = hop1.apply(&input(cube, self.dims)?)?;
            let high = high_band(&h1)?;
            for c in 0..high.channels {
                high_fit.push(c, high.channel(c))?;
            }
            lows.push(h1.select_channels(0..LOW_CHANNELS, Band::Low));
        }
        let high_pca = high_fit.finish(k)?;

        let g2 = hop2_geometry(s.grid.2);
        let hop2 = (0..LOW_CHANNELS)
            .map(|c| {
                let patches = sample_patches_with(
                    lows.len(),
                    s.grid,
                    &g2,
                    max,
                    derive_seed(seed, 2 + c as u64),
                    |i| Ok(lows[i].select_channels(c..c + 1, Band::Low)),
                )?;
                fit_saab(&patches, g2, HOP2_CHANNELS - 1)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut low_fit = ChannelPcaFit::new(LOW_CHANNELS * HOP2_CHANNELS, s.hop2.0 * s.hop2.1);
        for l in &lows {
            let refined = self.refine_low(&hop2, l)?;
            for c in 0..refined.channels {
                low_fit.push(c, refined.channel(c))?;
            }
        }
        let low_pca = low_fit.finish(k)?;
        self.state = Some(SpatioTemporalState {
            hop1,
            hop2,
            low_pca,
            high_pca,
        });
        Ok(())
    }

    pub fn generate(&self, cube: &SubCube) -> Result<RepresentationVector<T>> {
        let st = self
            .state
            .as_ref()
            .ok_or_else(|| unfitted(Kind::SpatioTemporal))?;
        let plan = self.plan()?;
        let h1 = st.hop1.apply(&input::<T>(cube, self.dims)?)?;
        let low = self.refine_low(&st.hop2, &h1)?;
        let high = high_band(&h1)?;

        let mut v = Vec::with_capacity(plan.dim());
        project_channels(&st.low_pca, &low, &mut v)?;
        project_channels(&st.high_pca, &high, &mut v)?;
        v.extend(channel_std(&low));
        v.extend(channel_std(&high));
        Ok(check_output(Kind::SpatioTemporal, &plan, v))
    }
}

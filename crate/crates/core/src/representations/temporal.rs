//! Temporal representation of a cube: per-frame motion statistics in
//! chronological order, optionally followed by PCA ("spectral")
//! coefficients of that raw vector.

use super::{
    check_output, unfitted, Aggregation, AggregationGroup, AggregationPlan, Kind,
    RepresentationConfig, RepresentationVector,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Matrix;
use crate::transforms::pca::{fit_pca, Pca};

#[derive(Clone, Debug, PartialEq)]
pub struct TemporalState<T> {
    /// Present only when the spectral part is enabled.
    pub spectral: Option<Pca<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemporalPipeline<T> {
    /// Frames per cube.
    pub frames: usize,
    pub config: RepresentationConfig,
    pub state: Option<TemporalState<T>>,
}

impl<T: Scalar> TemporalPipeline<T> {
    pub fn new(frames: usize, config: RepresentationConfig) -> Self {
        Self {
            frames,
            config,
            state: None,
        }
    }

    pub fn raw_dim(&self) -> usize {
        14 * self.frames
    }

    pub fn is_fitted(&self) -> bool {
        self.state.is_some()
    }

    pub fn plan(&self) -> AggregationPlan {
        let mut groups = vec![AggregationGroup {
            name: "raw",
            channels: 1,
            channel_len: self.raw_dim(),
            op: Aggregation::Passthrough,
        }];
        if self.config.temporal_spectral_enabled {
            groups.push(AggregationGroup {
                name: "spectral",
                channels: 1,
                channel_len: self.raw_dim(),
                op: Aggregation::Pca(self.config.temporal_spectral_n),
            });
        }
        AggregationPlan { groups }
    }

    pub fn dim(&self) -> usize {
        self.plan().dim()
    }

    fn check_raw(&self, raw: &[T]) -> Result<()> {
        if raw.len() != self.raw_dim() {
            return Err(Error::shape(format!(
                "temporal raw vector must have {} entries, got {}",
                self.raw_dim(),
                raw.len()
            )));
        }
        Ok(())
    }

    /// Fits the spectral basis (if enabled) on training raw vectors.
    pub fn fit(&mut self, raws: &[Vec<T>]) -> Result<()> {
        self.config.check_fit_count(Kind::Temporal, raws.len())?;
        for r in raws {
            self.check_raw(r)?;
        }
        let spectral = if self.config.temporal_spectral_enabled {
            Some(fit_pca(
                &Matrix::from_rows(raws)?,
                self.config.temporal_spectral_n,
            )?)
        } else {
            None
        };
        self.state = Some(TemporalState { spectral });
        Ok(())
    }

    pub fn generate(&self, raw: &[T]) -> Result<RepresentationVector<T>> {
        let st = self
            .state
            .as_ref()
            .ok_or_else(|| unfitted(Kind::Temporal))?;
        self.check_raw(raw)?;
        let mut v = raw.to_vec();
        if let Some(p) = &st.spectral {
            v.extend(p.apply(raw)?);
        }
        Ok(check_output(Kind::Temporal, &self.plan(), v))
    }
}

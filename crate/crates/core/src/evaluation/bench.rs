//! Inference cost: per-stage wall time and a closed-form operation count.
//!
//! Counting convention: a multiply-accumulate is 2 operations, comparisons
//! are free, one SAD term (absolute difference accumulated) is 1, a
//! standard deviation costs 3 per element, and a tree costs its depth per
//! cube.

use std::time::Duration;

use crate::error::{Error, Result};
use crate::media_io::VideoClip;
use crate::pipeline::{StageTimes, TrainedModel};
use crate::regression::median;
use crate::representations::{spatial, spatio_color, spatio_temporal};
use crate::scalar::Scalar;
use crate::transforms::saab::SaabGeometry;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FlopEstimate {
    pub motion: f64,
    pub dct: f64,
    pub saab: f64,
    pub pca: f64,
    pub std: f64,
    pub regression: f64,
    pub cubes: usize,
}

impl FlopEstimate {
    /// Representation-stage operations (everything but regression).
    pub fn representations(&self) -> f64 {
        self.motion + self.dct + self.saab + self.pca + self.std
    }

    pub fn total(&self) -> f64 {
        self.representations() + self.regression
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostReport {
    /// Median wall time per stage, in pipeline order.
    pub stages: Vec<(&'static str, Duration)>,
    pub flops: FlopEstimate,
    /// Serialized model length in bytes.
    pub model_size: usize,
    pub parallel: bool,
    pub reps: usize,
}

impl CostReport {
    pub fn total_time(&self) -> Duration {
        self.stages.iter().map(|s| s.1).sum()
    }
}

fn saab_ops(g: &SaabGeometry, placements: usize, num_ac: usize) -> f64 {
    2.0 * (g.patch_len() * num_ac * placements) as f64
}

fn placements(g: &SaabGeometry, h: usize, w: usize, d: usize) -> Result<usize> {
    let (a, b, c) = g.grid(h, w, d)?;
    Ok(a * b * c)
}

/// Candidate displacements inside the frame, summed over one axis of blocks.
fn axis_candidates(blocks: usize, block: usize, range: usize) -> usize {
    (0..blocks)
        .map(|i| range.min(i * block) + range.min((blocks - 1 - i) * block) + 1)
        .sum()
}

/// Closed-form operation count for scoring a `frames`-long clip.
pub fn estimate_flops<T: Scalar>(model: &TrainedModel<T>, frames: usize) -> Result<FlopEstimate> {
    let cfg = &model.config;
    let c = &cfg.crop;
    let sub_videos = frames / c.sub_video_len;
    let cubes = sub_videos * c.sub_images_per_frame;
    let size = c.sub_image_size;
    let k = cfg.repr.pca_per_channel_n;
    let mut e = FlopEstimate {
        cubes,
        ..Default::default()
    };
    let per = |x: f64| x * cubes as f64;

    let b = cfg.motion.block_size;
    let n = size / b;
    let s = axis_candidates(n, b, cfg.motion.search_range);
    e.motion = per(((c.sub_video_len - 1) * s * s * b * b) as f64);

    // Spatial.
    let dct = size / 8;
    e.dct = per((dct * dct * 8192) as f64);
    let g1 = spatial::hop1_geometry();
    let (h1, _, _) = g1.grid(dct, dct, 1)?;
    let g2 = spatial::hop2_geometry();
    let mut saab = saab_ops(&g1, h1 * h1, spatial::HOP1_CHANNELS - 1)
        + saab_ops(&g2, placements(&g2, h1, h1, 1)?, spatial::HOP2_CHANNELS - 1);
    let mid = h1 / 2;
    let mut pca = 2.0 * ((spatial::HOP1_CHANNELS - spatial::LOW_CHANNELS) * mid * mid * k) as f64;
    let high = dct / 4;
    let mut std = 3.0 * (63 * high * high) as f64;

    // Spatio-color.
    let pooled = size / 2;
    let g1 = spatio_color::hop1_geometry();
    let (h1, _, _) = g1.grid(pooled, pooled, 1)?;
    let g2 = spatio_color::hop2_geometry();
    saab += saab_ops(&g1, h1 * h1, spatio_color::HOP1_CHANNELS - 1)
        + spatio_color::LOW_CHANNELS as f64
            * saab_ops(
                &g2,
                placements(&g2, h1, h1, 1)?,
                spatio_color::HOP2_CHANNELS - 1,
            );
    let hi = spatio_color::HOP1_CHANNELS - spatio_color::LOW_CHANNELS;
    let len = (h1 / 2) * (h1 / 2);
    pca += 2.0 * (hi * len * k) as f64;
    std += 3.0 * (hi * len) as f64;

    // Spatio-temporal.
    let (sh, sw, st) = c.sub_cube_dims;
    let g1 = spatio_temporal::hop1_geometry();
    let grid = g1.grid(sh, sw, st)?;
    let g2 = spatio_temporal::hop2_geometry(grid.2);
    let (a, bb, _) = g2.grid(grid.0, grid.1, grid.2)?;
    saab += saab_ops(
        &g1,
        grid.0 * grid.1 * grid.2,
        spatio_temporal::HOP1_CHANNELS - 1,
    ) + spatio_temporal::LOW_CHANNELS as f64
        * saab_ops(&g2, a * bb, spatio_temporal::HOP2_CHANNELS - 1);
    let low_n = spatio_temporal::LOW_CHANNELS * spatio_temporal::HOP2_CHANNELS;
    let high_n = spatio_temporal::HOP1_CHANNELS - spatio_temporal::LOW_CHANNELS;
    let high_len = (grid.0 / 2) * (grid.1 / 2) * grid.2;
    pca += 2.0 * ((low_n * a * bb + high_n * high_len) * k) as f64;
    std += 3.0 * (low_n * a * bb + high_n * high_len) as f64;

    // Temporal spectral part.
    if let Some(p) = model
        .temporal
        .state
        .as_ref()
        .and_then(|s| s.spectral.as_ref())
    {
        pca += 2.0 * (p.dim() * p.k()) as f64;
    }

    e.saab = per(saab);
    e.pca = per(pca);
    e.std = per(std);
    e.regression = per(model.gbdt.trees.iter().map(|t| t.depth()).sum::<usize>() as f64);
    Ok(e)
}

/// Scores `clip` `reps` times and reports the median time of each stage.
///
/// Runs on a single worker thread unless `parallel` is set.
pub fn benchmark<T: Scalar>(
    model: &TrainedModel<T>,
    clip: &VideoClip,
    model_size: usize,
    reps: usize,
    parallel: bool,
    seed: u64,
) -> Result<CostReport> {
    if reps == 0 {
        return Err(Error::config("benchmark needs >= 1 repetition"));
    }
    let run = || -> Result<Vec<StageTimes>> {
        (0..reps)
            .map(|_| model.predict_clip_timed(clip, seed).map(|(_, t)| t))
            .collect()
    };
    let times = if parallel {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| Error::State(format!("thread pool: {e}")))?
            .install(run)?
    };
    let stages = (0..5)
        .map(|i| {
            let secs: Vec<f64> = times.iter().map(|t| t.named()[i].1.as_secs_f64()).collect();
            (
                StageTimes::default().named()[i].0,
                Duration::from_secs_f64(median(&secs).expect("reps >= 1")),
            )
        })
        .collect();
    Ok(CostReport {
        stages,
        flops: estimate_flops(model, clip.len())?,
        model_size,
        parallel,
        reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidate_counts_match_brute_force() {
        for (n, b, r) in [(20, 16, 8), (3, 16, 8), (4, 4, 8), (1, 16, 8)] {
            let size = (n * b) as i64;
            let brute: usize = (0..n)
                .map(|i| {
                    (-(r as i64)..=r as i64)
                        .filter(|v| {
                            let p = (i * b) as i64 - v;
                            p >= 0 && p + b as i64 <= size
                        })
                        .count()
                })
                .sum();
            assert_eq!(axis_candidates(n, b, r), brute);
        }
    }
}

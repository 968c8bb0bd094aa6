//! End-to-end training and scoring: crops → representations → selection →
//! boosted trees → score roll-up.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::cropping::{
    crop_cubes, crop_sub_cube, crop_sub_images, split_sub_videos, Cube, SubCube, SubImage, SubVideo,
};
use crate::error::{Error, Result};
use crate::feature_selection::{run_rft, select_features, FeatureSelector};
use crate::media_io::VideoClip;
use crate::motion::raw_temporal;
use crate::regression::{ensemble_scores, train_gbdt_traced, GbdtModel, ScoreReport};
use crate::representations::{
    Kind, SpatialPipeline, SpatioColorPipeline, SpatioTemporalPipeline, TemporalPipeline,
};
use crate::scalar::Scalar;
use crate::seed::derive_seed;
use crate::tensor::Matrix;

/// Everything the representation generators need from one cube.
#[derive(Clone, Debug)]
pub struct CubeSample<T> {
    pub sub_video: usize,
    pub sub_image: SubImage,
    pub sub_cube: SubCube,
    /// Chronological per-frame motion statistics.
    pub temporal_raw: Vec<T>,
}

/// Cropped samples of one labelled video.
#[derive(Clone, Debug)]
pub struct VideoSamples<T> {
    pub id: String,
    pub mos: f64,
    /// Grouped by sub-video.
    pub sub_videos: Vec<Vec<CubeSample<T>>>,
}

impl<T> VideoSamples<T> {
    pub fn cubes(&self) -> impl Iterator<Item = &CubeSample<T>> {
        self.sub_videos.iter().flatten()
    }

    pub fn cube_count(&self) -> usize {
        self.sub_videos.iter().map(Vec::len).sum()
    }
}

fn crop_one(
    sv: &SubVideo<'_>,
    cfg: &RunConfig,
    seed: u64,
) -> Result<Vec<(SubImage, Cube, SubCube)>> {
    let c = &cfg.crop;
    let sv_seed = derive_seed(seed, sv.index as u64);
    let images = crop_sub_images(sv, c.sub_images_per_frame, c.sub_image_size, sv_seed);
    let origins: Vec<_> = images.iter().map(|i| i.origin).collect();
    let cubes = crop_cubes(sv, &origins, c.sub_image_size);
    images
        .into_iter()
        .zip(cubes)
        .enumerate()
        .map(|(j, (img, cube))| {
            let sc = crop_sub_cube(&cube, c.sub_cube_dims, derive_seed(sv_seed, 1 + j as u64))?;
            Ok((img, cube, sc))
        })
        .collect()
}

/// Crops every sub-video of `clip` and computes each cube's motion
/// statistics; the cube itself is then released.
pub fn extract_samples<T: Scalar>(
    clip: &VideoClip,
    cfg: &RunConfig,
    seed: u64,
) -> Result<Vec<Vec<CubeSample<T>>>> {
    split_sub_videos(clip, cfg.crop.sub_video_len)?
        .iter()
        .map(|sv| {
            crop_one(sv, cfg, seed)?
                .into_par_iter()
                .map(|(sub_image, cube, sub_cube)| {
                    Ok(CubeSample {
                        sub_video: sv.index,
                        temporal_raw: raw_temporal(&cube, &cfg.motion)?,
                        sub_image,
                        sub_cube,
                    })
                })
                .collect()
        })
        .collect()
}

/// Provenance recorded inside a model file.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelMeta {
    /// SHA-256 over the `id,mos` lines of the training and validation videos.
    pub dataset_hash: String,
    pub crop_seed: u64,
    pub train_seed: u64,
    pub dims: [usize; 4],
    pub train_videos: usize,
    pub val_videos: usize,
    pub train_cubes: usize,
    pub val_rmse: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel<T> {
    pub config: RunConfig,
    pub spatial: SpatialPipeline<T>,
    pub spatio_color: SpatioColorPipeline<T>,
    pub temporal: TemporalPipeline<T>,
    pub spatio_temporal: SpatioTemporalPipeline<T>,
    pub selector: FeatureSelector,
    pub gbdt: GbdtModel<T>,
    pub meta: ModelMeta,
}

/// Hash of the labelled videos a model was fitted on.
pub fn dataset_hash<'a>(videos: impl IntoIterator<Item = (&'a str, f64)>) -> String {
    let mut h = Sha256::new();
    for (id, mos) in videos {
        h.update(format!("{id},{mos}\n").as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl<T: Scalar> TrainedModel<T> {
    pub fn dims(&self) -> Result<[usize; 4]> {
        Ok([
            self.spatial.dim()?,
            self.spatio_color.dim()?,
            self.temporal.dim(),
            self.spatio_temporal.dim()?,
        ])
    }

    /// The four representation vectors of one cube.
    pub fn representations(&self, s: &CubeSample<T>) -> Result<[Vec<T>; 4]> {
        Ok([
            self.spatial.generate(&s.sub_image)?.values,
            self.spatio_color.generate(&s.sub_image)?.values,
            self.temporal.generate(&s.temporal_raw)?.values,
            self.spatio_temporal.generate(&s.sub_cube)?.values,
        ])
    }

    /// Selected-feature vector of one cube.
    pub fn features(&self, s: &CubeSample<T>) -> Result<Vec<T>> {
        let r = self.representations(s)?;
        self.selector.gather([&r[0], &r[1], &r[2], &r[3]])
    }

    pub fn score_samples(&self, sub_videos: &[Vec<CubeSample<T>>]) -> Result<ScoreReport<T>> {
        let scores = sub_videos
            .iter()
            .map(|cubes| {
                cubes
                    .par_iter()
                    .map(|s| self.gbdt.predict(&self.features(s)?))
                    .collect::<Result<Vec<T>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        ensemble_scores(scores)
    }

    /// Scores `clip` using crop seed `seed`.
    pub fn predict_clip(&self, clip: &VideoClip, seed: u64) -> Result<ScoreReport<T>> {
        self.predict_clip_timed(clip, seed).map(|(r, _)| r)
    }

    /// Scores `clip` and reports the wall time of each stage.
    pub fn predict_clip_timed(
        &self,
        clip: &VideoClip,
        seed: u64,
    ) -> Result<(ScoreReport<T>, StageTimes)> {
        let mut times = StageTimes::default();
        let mut scores = Vec::new();
        for sv in &split_sub_videos(clip, self.config.crop.sub_video_len)? {
            let t = Instant::now();
            let crops = crop_one(sv, &self.config, seed)?;
            times.cropping += t.elapsed();

            let t = Instant::now();
            let reps = crops
                .into_par_iter()
                .map(|(sub_image, cube, sub_cube)| {
                    let s = CubeSample {
                        sub_video: sv.index,
                        temporal_raw: raw_temporal(&cube, &self.config.motion)?,
                        sub_image,
                        sub_cube,
                    };
                    self.representations(&s)
                })
                .collect::<Result<Vec<_>>>()?;
            times.representations += t.elapsed();

            let t = Instant::now();
            let feats = reps
                .iter()
                .map(|r| self.selector.gather([&r[0], &r[1], &r[2], &r[3]]))
                .collect::<Result<Vec<_>>>()?;
            times.selection += t.elapsed();

            let t = Instant::now();
            scores.push(
                feats
                    .iter()
                    .map(|f| self.gbdt.predict(f))
                    .collect::<Result<Vec<T>>>()?,
            );
            times.regression += t.elapsed();
        }
        let t = Instant::now();
        let report = ensemble_scores(scores)?;
        times.ensembling += t.elapsed();
        Ok((report, times))
    }
}

/// Wall time per inference stage (decoding excluded).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimes {
    pub cropping: Duration,
    pub representations: Duration,
    pub selection: Duration,
    pub regression: Duration,
    pub ensembling: Duration,
}

impl StageTimes {
    pub fn total(&self) -> Duration {
        self.cropping + self.representations + self.selection + self.regression + self.ensembling
    }

    pub fn named(&self) -> [(&'static str, Duration); 5] {
        [
            ("cropping", self.cropping),
            ("representations", self.representations),
            ("selection", self.selection),
            ("regression", self.regression),
            ("ensembling", self.ensembling),
        ]
    }
}

/// Training-time diagnostics not stored in the model.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport<T> {
    pub train_rmse: Vec<T>,
    pub val_rmse: Vec<T>,
    pub best_round: usize,
}

fn rows_from<T: Scalar>(rows: Vec<Vec<T>>, cols: usize) -> Result<Matrix<T>> {
    let n = rows.len();
    let data: Vec<T> = rows.into_iter().flatten().collect();
    Matrix::from_vec(n, cols, data)
}

/// Fits every stage on `train`; `val` only drives early stopping.
///
/// The returned model holds exactly the parameters its serialized form
/// stores, so reloaded models predict bitwise identically.
pub fn train_model<T: Scalar>(
    train: &[VideoSamples<T>],
    val: &[VideoSamples<T>],
    cfg: &RunConfig,
) -> Result<(TrainedModel<T>, TrainReport<T>)> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::config(
            "training needs non-empty train and val video sets",
        ));
    }
    let samples: Vec<&CubeSample<T>> = train.iter().flat_map(|v| v.cubes()).collect();
    let labels: Vec<T> = train
        .iter()
        .flat_map(|v| std::iter::repeat_n(T::lit(v.mos), v.cube_count()))
        .collect();
    let fit_seed = derive_seed(cfg.train.seed, 0x5eed);
    let c = &cfg.crop;

    let images: Vec<SubImage> = samples.iter().map(|s| s.sub_image.clone()).collect();
    let mut spatial = SpatialPipeline::new(c.sub_image_size, cfg.repr.clone());
    spatial.fit(&images, derive_seed(fit_seed, 1))?;
    let mut spatio_color = SpatioColorPipeline::new(c.sub_image_size, cfg.repr.clone());
    spatio_color.fit(&images, derive_seed(fit_seed, 2))?;
    drop(images);
    let raws: Vec<Vec<T>> = samples.iter().map(|s| s.temporal_raw.clone()).collect();
    let mut temporal = TemporalPipeline::new(c.sub_video_len, cfg.repr.clone());
    temporal.fit(&raws)?;
    drop(raws);
    let cubes: Vec<SubCube> = samples.iter().map(|s| s.sub_cube.clone()).collect();
    let mut spatio_temporal = SpatioTemporalPipeline::new(c.sub_cube_dims, cfg.repr.clone());
    spatio_temporal.fit(&cubes, derive_seed(fit_seed, 4))?;
    drop(cubes);

    let mut model = TrainedModel {
        config: cfg.clone(),
        spatial,
        spatio_color,
        temporal,
        spatio_temporal,
        selector: FeatureSelector {
            counts: [0; 4],
            selected: Default::default(),
        },
        gbdt: GbdtModel {
            n_features: 0,
            base_score: T::zero(),
            learning_rate: T::zero(),
            trees: Vec::new(),
        },
        meta: ModelMeta {
            dataset_hash: dataset_hash(train.iter().chain(val).map(|v| (v.id.as_str(), v.mos))),
            crop_seed: cfg.crop_seed,
            train_seed: cfg.train.seed,
            dims: [0; 4],
            train_videos: train.len(),
            val_videos: val.len(),
            train_cubes: samples.len(),
            val_rmse: f64::NAN,
        },
    };
    let dims = model.dims()?;
    model.meta.dims = dims;

    let reps: Vec<[Vec<T>; 4]> = samples
        .par_iter()
        .map(|s| model.representations(s))
        .collect::<Result<_>>()?;
    let mut results = Vec::with_capacity(4);
    for (k, kind) in Kind::ALL.iter().enumerate() {
        let m = rows_from(reps.iter().map(|r| r[k].clone()).collect(), dims[k])?;
        results.push(run_rft(&m, &labels, *kind, cfg.rft_grid)?);
    }
    let results: [_; 4] = results
        .try_into()
        .map_err(|_| Error::State("relevance results".into()))?;
    model.selector = select_features(&results, cfg.select_counts)?;
    let total = model.selector.total();
    let x = rows_from(
        reps.iter()
            .map(|r| model.selector.gather([&r[0], &r[1], &r[2], &r[3]]))
            .collect::<Result<_>>()?,
        total,
    )?;
    drop(reps);

    let val_samples: Vec<&CubeSample<T>> = val.iter().flat_map(|v| v.cubes()).collect();
    let val_labels: Vec<T> = val
        .iter()
        .flat_map(|v| std::iter::repeat_n(T::lit(v.mos), v.cube_count()))
        .collect();
    let xv = rows_from(
        val_samples
            .par_iter()
            .map(|s| model.features(s))
            .collect::<Result<_>>()?,
        total,
    )?;

    let (gbdt, trace) = train_gbdt_traced(&x, &labels, &xv, &val_labels, &cfg.train)?;
    model.gbdt = gbdt;
    model.meta.val_rmse = trace.val_rmse[trace.best_round].as_f64();
    let model = crate::persistence::snap(&model)?;
    Ok((
        model,
        TrainReport {
            train_rmse: trace.train_rmse,
            val_rmse: trace.val_rmse,
            best_round: trace.best_round,
        },
    ))
}

//! Repeated random-split evaluation: per run a seeded 80/20 video split with
//! 10% of the training part held out for early stopping, a full fit on the
//! training videos, and PLCC/SROCC of the test video scores.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::metrics::{plcc, srocc, PredictionPairs};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::media_io::{read_video, synthesize_clip, DatasetManifest, Split, SynthSpec, VideoClip};
use crate::pipeline::{extract_samples, train_model, VideoSamples};
use crate::regression::median;
use crate::scalar::Scalar;
use crate::seed::{derive_seed, string_key};

/// Labelled videos, decoded on demand.
pub trait VideoSource: Sync {
    fn len(&self) -> usize;
    fn id(&self, i: usize) -> String;
    fn mos(&self, i: usize) -> f64;
    fn load(&self, i: usize) -> Result<VideoClip>;

    fn split(&self, _i: usize) -> Split {
        Split::Unassigned
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Videos listed in a manifest, read from disk.
pub struct ManifestSource {
    pub manifest: DatasetManifest,
    /// Geometry for headerless planar files.
    pub geometry: Option<(usize, usize)>,
}

impl VideoSource for ManifestSource {
    fn len(&self) -> usize {
        self.manifest.entries.len()
    }

    fn id(&self, i: usize) -> String {
        self.manifest.entries[i].video_path.clone()
    }

    fn mos(&self, i: usize) -> f64 {
        self.manifest.entries[i].mos
    }

    fn split(&self, i: usize) -> Split {
        self.manifest.entries[i].split
    }

    fn load(&self, i: usize) -> Result<VideoClip> {
        read_video(
            &self.manifest.resolve(&self.manifest.entries[i]),
            self.geometry,
        )
    }
}

/// Synthetic clips regenerated from their specs whenever loaded.
pub struct SyntheticSource {
    pub specs: Vec<SynthSpec>,
}

impl SyntheticSource {
    /// `count` clips with noise sigma in [0, 25] and blur radius in [0, 3].
    pub fn study(count: usize, seed: u64, width: usize, height: usize, frames: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let specs = (0..count)
            .map(|i| {
                let sigma = rng.random_range(0.0..=25.0);
                let blur = rng.random_range(0.0..=3.0);
                SynthSpec::new(sigma, blur, derive_seed(seed, i as u64))
                    .with_geometry(width, height, frames)
            })
            .collect();
        Self { specs }
    }
}

impl VideoSource for SyntheticSource {
    fn len(&self) -> usize {
        self.specs.len()
    }

    fn id(&self, i: usize) -> String {
        format!("synth_{i:04}")
    }

    fn mos(&self, i: usize) -> f64 {
        crate::media_io::pseudo_mos(self.specs[i].noise_sigma, self.specs[i].blur_radius)
    }

    fn load(&self, i: usize) -> Result<VideoClip> {
        synthesize_clip(&self.specs[i]).map(|(clip, _)| clip)
    }
}

/// `(train, val, test)` sizes: test = round(0.2 n), val = round(0.1 (n - test)).
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let test = (0.2 * n as f64).round() as usize;
    let val = (0.1 * (n - test) as f64).round() as usize;
    (n - test - val, val, test)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded video-level split; each part sorted ascending.
pub fn split_indices(n: usize, seed: u64) -> SplitIndices {
    let (_, val, test) = split_sizes(n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let part = |r: std::ops::Range<usize>| {
        let mut v = idx[r].to_vec();
        v.sort_unstable();
        v
    };
    SplitIndices {
        test: part(0..test),
        val: part(test..test + val),
        train: part(test + val..n),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult<T> {
    pub run: usize,
    pub split_seed: u64,
    pub crop_seed: u64,
    pub train_seed: u64,
    pub plcc: T,
    pub srocc: T,
    /// Audit trail: videos whose crops reached a fit, those used for early
    /// stopping, and those only ever scored.
    pub fit_ids: Vec<String>,
    pub val_ids: Vec<String>,
    pub test_ids: Vec<String>,
    /// `(id, predicted, subjective)` per test video.
    pub predictions: Vec<(String, T, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolResult<T> {
    pub seed: u64,
    pub runs: Vec<RunResult<T>>,
    pub median_plcc: T,
    pub median_srocc: T,
}

/// Crop seed of one video within a run.
pub fn video_crop_seed(run_crop_seed: u64, id: &str) -> u64 {
    derive_seed(run_crop_seed, string_key(id))
}

/// Decodes and crops the videos at `indices` with per-video crop seeds.
pub fn load_samples<T: Scalar>(
    source: &dyn VideoSource,
    indices: &[usize],
    cfg: &RunConfig,
) -> Result<Vec<VideoSamples<T>>> {
    indices
        .iter()
        .map(|&i| {
            let id = source.id(i);
            let clip = source.load(i)?;
            let sub_videos = extract_samples(&clip, cfg, video_crop_seed(cfg.crop_seed, &id))?;
            Ok(VideoSamples {
                id,
                mos: source.mos(i),
                sub_videos,
            })
        })
        .collect()
}

pub fn run_protocol<T: Scalar>(
    source: &dyn VideoSource,
    cfg: &RunConfig,
    runs: usize,
    seed: u64,
) -> Result<ProtocolResult<T>> {
    let n = source.len();
    if n < 10 {
        return Err(Error::config(format!(
            "protocol needs >= 10 videos, got {n}"
        )));
    }
    if runs == 0 {
        return Err(Error::config("protocol needs >= 1 run"));
    }
    let mut results = Vec::with_capacity(runs);
    for run in 0..runs {
        let run_seed = derive_seed(seed, run as u64);
        let split_seed = derive_seed(run_seed, 1);
        let split = split_indices(n, split_seed);
        let mut run_cfg = cfg.clone();
        run_cfg.crop_seed = derive_seed(run_seed, 2);
        run_cfg.train.seed = derive_seed(run_seed, 3);

        let train = load_samples::<T>(source, &split.train, &run_cfg)?;
        let val = load_samples::<T>(source, &split.val, &run_cfg)?;
        let (model, _) = train_model(&train, &val, &run_cfg)?;
        let fit_ids = train.iter().map(|v| v.id.clone()).collect();
        let val_ids = val.iter().map(|v| v.id.clone()).collect();
        drop((train, val));

        let mut predictions = Vec::with_capacity(split.test.len());
        for &i in &split.test {
            let id = source.id(i);
            let clip = source.load(i)?;
            let report = model.predict_clip(&clip, video_crop_seed(run_cfg.crop_seed, &id))?;
            predictions.push((id, report.video_score, source.mos(i)));
        }
        let pairs = PredictionPairs::new(
            predictions.iter().map(|p| p.1).collect(),
            predictions.iter().map(|p| T::lit(p.2)).collect(),
        )?;
        results.push(RunResult {
            run,
            split_seed,
            crop_seed: run_cfg.crop_seed,
            train_seed: run_cfg.train.seed,
            plcc: plcc(&pairs)?,
            srocc: srocc(&pairs)?,
            fit_ids,
            val_ids,
            test_ids: predictions.iter().map(|p| p.0.clone()).collect(),
            predictions,
        });
    }
    let median_of = |f: fn(&RunResult<T>) -> T| {
        median(&results.iter().map(f).collect::<Vec<T>>()).expect("runs >= 1")
    };
    Ok(ProtocolResult {
        seed,
        median_plcc: median_of(|r| r.plcc),
        median_srocc: median_of(|r| r.srocc),
        runs: results,
    })
}

#![allow(dead_code)]

use bvqa::config::RunConfig;
use bvqa::evaluation::{SyntheticSource, VideoSource};
use bvqa::pipeline::{extract_samples, train_model, VideoSamples};
use bvqa::TrainedModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small-geometry configuration that trains in seconds.
pub fn tiny_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    for (k, v) in [
        ("sub_image_size", "128"),
        ("sub_images_per_frame", "2"),
        ("fit_min_samples", "10"),
        ("min_samples_leaf", "2"),
        ("select_counts", "60,60,60,60"),
        ("max_trees", "200"),
    ] {
        cfg.set(k, v).unwrap();
    }
    cfg
}

pub fn tiny_samples(n: usize, seed: u64, cfg: &RunConfig) -> Vec<VideoSamples<f64>> {
    let src = SyntheticSource::study(n, seed, 128, 128, 30);
    (0..n)
        .map(|i| VideoSamples {
            id: src.id(i),
            mos: src.mos(i),
            sub_videos: extract_samples(&src.load(i).unwrap(), cfg, i as u64).unwrap(),
        })
        .collect()
}

pub fn tiny_model(seed: u64) -> TrainedModel {
    let cfg = tiny_config();
    let all = tiny_samples(16, seed, &cfg);
    let (train, val) = all.split_at(13);
    train_model(train, val, &cfg).unwrap().0
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

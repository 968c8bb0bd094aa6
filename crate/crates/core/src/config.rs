//! Flat `key=value` run configuration covering every tunable stage.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown or repeated
//! keys are errors; omitted keys keep their defaults.

use std::path::Path;

use crate::cropping::CropConfig;
use crate::error::{Error, Result};
use crate::feature_selection::{PartitionGrid, DEFAULT_COUNTS};
use crate::motion::MotionConfig;
use crate::regression::TrainConfig;
use crate::representations::RepresentationConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub crop: CropConfig,
    pub crop_seed: u64,
    pub motion: MotionConfig,
    pub repr: RepresentationConfig,
    pub rft_grid: PartitionGrid,
    /// Per-kind selection counts, spatial / spatio-color / temporal /
    /// spatio-temporal.
    pub select_counts: [usize; 4],
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            crop: CropConfig::default(),
            crop_seed: 0,
            motion: MotionConfig::default(),
            repr: RepresentationConfig::default(),
            rft_grid: PartitionGrid::default(),
            select_counts: DEFAULT_COUNTS,
            train: TrainConfig::default(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "sub_video_len",
    "sub_image_size",
    "sub_images_per_frame",
    "sub_cube_dims",
    "crop_seed",
    "mv_block_size",
    "mv_search_range",
    "mv_sig_threshold",
    "pca_per_channel_n",
    "temporal_spectral_enabled",
    "temporal_spectral_n",
    "fit_min_samples",
    "fit_max_patches",
    "rft_partitions",
    "select_counts",
    "max_depth",
    "subsample",
    "max_trees",
    "learning_rate",
    "early_stop_patience",
    "min_samples_leaf",
    "train_seed",
];

fn parse<V: std::str::FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::config(format!("invalid value {value:?} for {key}")))
}

fn parse_list<const N: usize>(key: &str, value: &str) -> Result<[usize; N]> {
    let parts: Vec<usize> = value
        .split(',')
        .map(|p| parse(key, p.trim()))
        .collect::<Result<_>>()?;
    parts.try_into().map_err(|_| {
        Error::config(format!(
            "{key} needs {N} comma-separated integers, got {value:?}"
        ))
    })
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "sub_video_len" => self.crop.sub_video_len = parse(key, value)?,
            "sub_image_size" => self.crop.sub_image_size = parse(key, value)?,
            "sub_images_per_frame" => self.crop.sub_images_per_frame = parse(key, value)?,
            "sub_cube_dims" => {
                let [h, w, t] = parse_list::<3>(key, value)?;
                self.crop.sub_cube_dims = (h, w, t);
            }
            "crop_seed" => self.crop_seed = parse(key, value)?,
            "mv_block_size" => self.motion.block_size = parse(key, value)?,
            "mv_search_range" => self.motion.search_range = parse(key, value)?,
            "mv_sig_threshold" => self.motion.sig_threshold = parse(key, value)?,
            "pca_per_channel_n" => self.repr.pca_per_channel_n = parse(key, value)?,
            "temporal_spectral_enabled" => self.repr.temporal_spectral_enabled = parse(key, value)?,
            "temporal_spectral_n" => self.repr.temporal_spectral_n = parse(key, value)?,
            "fit_min_samples" => self.repr.fit_min_samples = parse(key, value)?,
            "fit_max_patches" => self.repr.fit_max_patches = parse(key, value)?,
            "rft_partitions" => {
                self.rft_grid = if value == "exhaustive" {
                    PartitionGrid::Exhaustive
                } else {
                    PartitionGrid::Uniform(parse(key, value)?)
                }
            }
            "select_counts" => self.select_counts = parse_list::<4>(key, value)?,
            "max_depth" => self.train.max_depth = parse(key, value)?,
            "subsample" => self.train.subsample = parse(key, value)?,
            "max_trees" => self.train.max_trees = parse(key, value)?,
            "learning_rate" => self.train.learning_rate = parse(key, value)?,
            "early_stop_patience" => self.train.early_stop_patience = parse(key, value)?,
            "min_samples_leaf" => self.train.min_samples_leaf = parse(key, value)?,
            "train_seed" => self.train.seed = parse(key, value)?,
            _ => return Err(Error::config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let c = &self.crop;
        Some(match key {
            "sub_video_len" => c.sub_video_len.to_string(),
            "sub_image_size" => c.sub_image_size.to_string(),
            "sub_images_per_frame" => c.sub_images_per_frame.to_string(),
            "sub_cube_dims" => {
                let (h, w, t) = c.sub_cube_dims;
                format!("{h},{w},{t}")
            }
            "crop_seed" => self.crop_seed.to_string(),
            "mv_block_size" => self.motion.block_size.to_string(),
            "mv_search_range" => self.motion.search_range.to_string(),
            "mv_sig_threshold" => self.motion.sig_threshold.to_string(),
            "pca_per_channel_n" => self.repr.pca_per_channel_n.to_string(),
            "temporal_spectral_enabled" => self.repr.temporal_spectral_enabled.to_string(),
            "temporal_spectral_n" => self.repr.temporal_spectral_n.to_string(),
            "fit_min_samples" => self.repr.fit_min_samples.to_string(),
            "fit_max_patches" => self.repr.fit_max_patches.to_string(),
            "rft_partitions" => match self.rft_grid {
                PartitionGrid::Exhaustive => "exhaustive".to_string(),
                PartitionGrid::Uniform(p) => p.to_string(),
            },
            "select_counts" => self.select_counts.map(|v| v.to_string()).join(","),
            "max_depth" => self.train.max_depth.to_string(),
            "subsample" => self.train.subsample.to_string(),
            "max_trees" => self.train.max_trees.to_string(),
            "learning_rate" => self.train.learning_rate.to_string(),
            "early_stop_patience" => self.train.early_stop_patience.to_string(),
            "min_samples_leaf" => self.train.min_samples_leaf.to_string(),
            "train_seed" => self.train.seed.to_string(),
            _ => return None,
        })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key=value", n + 1)))?;
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return Err(Error::config(format!(
                    "line {}: duplicate key {k:?}",
                    n + 1
                )));
            }
            cfg.set(k, v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Every key in canonical order; parses back to an equal config.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k}={}\n", self.get(k).expect("known key")))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.crop;
        if c.sub_video_len == 0 || c.sub_image_size == 0 || c.sub_images_per_frame == 0 {
            return Err(Error::config("crop sizes and counts must be positive"));
        }
        let (h, w, t) = c.sub_cube_dims;
        if h == 0
            || w == 0
            || t == 0
            || h > c.sub_image_size
            || w > c.sub_image_size
            || t > c.sub_video_len
        {
            return Err(Error::config(format!(
                "sub_cube_dims {h},{w},{t} must fit inside a {0}x{0}x{1} cube",
                c.sub_image_size, c.sub_video_len
            )));
        }
        if !c.sub_image_size.is_multiple_of(8) {
            return Err(Error::config("sub_image_size must be a multiple of 8"));
        }
        let b = self.motion.block_size;
        if b == 0 || !c.sub_image_size.is_multiple_of(b) {
            return Err(Error::config(format!(
                "mv_block_size {b} must divide sub_image_size {}",
                c.sub_image_size
            )));
        }
        if self.motion.sig_threshold.is_nan() || self.motion.sig_threshold < 0.0 {
            return Err(Error::config("mv_sig_threshold must be >= 0"));
        }
        if self.rft_grid == PartitionGrid::Uniform(0) {
            return Err(Error::config("rft_partitions must be >= 1"));
        }
        if self.repr.fit_max_patches == 0 {
            return Err(Error::config("fit_max_patches must be >= 1"));
        }
        self.train.validate()
    }
}

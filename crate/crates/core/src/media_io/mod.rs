//! Clip decoding, dataset manifests and synthetic clip generation.

pub mod manifest;
pub mod synth;
pub mod y4m;

pub use manifest::{load_manifest, parse_manifest, DatasetManifest, ManifestEntry, Split};
pub use synth::{pseudo_mos, synthesize_clip, BasePattern, SynthSpec};
pub use y4m::{parse_raw_i420, parse_y4m, read_video, write_y4m, Colorspace};

use crate::error::{Error, Result};
use crate::tensor::Plane;

/// One decoded frame; chroma is stored at luma resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub luma: Plane<u8>,
    pub chroma_b: Plane<u8>,
    pub chroma_r: Plane<u8>,
}

impl Frame {
    pub fn new(luma: Plane<u8>, chroma_b: Plane<u8>, chroma_r: Plane<u8>) -> Result<Self> {
        let dims = (luma.width, luma.height);
        if (chroma_b.width, chroma_b.height) != dims || (chroma_r.width, chroma_r.height) != dims {
            return Err(Error::shape("chroma planes must match luma size"));
        }
        Ok(Self {
            luma,
            chroma_b,
            chroma_r,
        })
    }

    pub fn gray(width: usize, height: usize, value: u8) -> Self {
        Self {
            luma: Plane::filled(width, height, value),
            chroma_b: Plane::filled(width, height, 128),
            chroma_r: Plane::filled(width, height, 128),
        }
    }
}

/// Frame rate as a `num/den` rational.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameRate {
    pub num: u32,
    pub den: u32,
}

impl FrameRate {
    pub const fn new(num: u32, den: u32) -> Self {
        Self { num, den }
    }
}

/// Immutable decoded clip.
#[derive(Clone, Debug, PartialEq)]
pub struct VideoClip {
    width: usize,
    height: usize,
    frame_rate: FrameRate,
    frames: Vec<Frame>,
}

impl VideoClip {
    pub fn new(frame_rate: FrameRate, frames: Vec<Frame>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Input("a clip needs at least one frame".into()))?;
        let (width, height) = (first.luma.width, first.luma.height);
        if frames
            .iter()
            .any(|f| f.luma.width != width || f.luma.height != height)
        {
            return Err(Error::shape("all frames of a clip must share dimensions"));
        }
        Ok(Self {
            width,
            height,
            frame_rate,
            frames,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame_rate(&self) -> FrameRate {
        self.frame_rate
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

//! Hierarchical cropping: sub-videos, representative-frame sub-images,
//! co-located cubes and one sub-cube per cube.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::media_io::{Frame, VideoClip};
use crate::tensor::Plane;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CropConfig {
    pub sub_video_len: usize,
    pub sub_image_size: usize,
    pub sub_images_per_frame: usize,
    /// `(rows, cols, frames)`.
    pub sub_cube_dims: (usize, usize, usize),
}

impl Default for CropConfig {
    fn default() -> Self {
        Self {
            sub_video_len: 30,
            sub_image_size: 320,
            sub_images_per_frame: 6,
            sub_cube_dims: (96, 96, 15),
        }
    }
}

/// Window of consecutive frames borrowed from a clip.
#[derive(Clone, Copy, Debug)]
pub struct SubVideo<'a> {
    pub index: usize,
    pub start_frame: usize,
    pub frames: &'a [Frame],
}

/// Non-overlapping windows from frame 0; the tail remainder is dropped.
pub fn split_sub_videos(clip: &VideoClip, sub_len: usize) -> Result<Vec<SubVideo<'_>>> {
    if sub_len == 0 {
        return Err(Error::config("sub_video_len must be >= 1"));
    }
    if clip.len() < sub_len {
        return Err(Error::TooShort {
            frames: clip.len(),
            needed: sub_len,
        });
    }
    Ok(clip
        .frames()
        .chunks_exact(sub_len)
        .enumerate()
        .map(|(index, frames)| SubVideo {
            index,
            start_frame: index * sub_len,
            frames,
        })
        .collect())
}

/// Square patch of the representative frame, all three planes.
#[derive(Clone, Debug, PartialEq)]
pub struct SubImage {
    pub luma: Plane<u8>,
    pub chroma_b: Plane<u8>,
    pub chroma_r: Plane<u8>,
    /// `(row, col)` in the (reflect-padded) frame.
    pub origin: (usize, usize),
    pub source_frame: usize,
}

/// Co-located crops of every frame of a sub-video, luma only.
#[derive(Clone, Debug, PartialEq)]
pub struct Cube {
    pub size: usize,
    pub frames: usize,
    /// Layout `[t][row][col]`.
    pub luma: Vec<u8>,
    pub origin: (usize, usize),
    pub mos_label: Option<f64>,
}

impl Cube {
    pub fn frame(&self, t: usize) -> &[u8] {
        let n = self.size * self.size;
        &self.luma[t * n..(t + 1) * n]
    }

    #[inline]
    pub fn get(&self, t: usize, row: usize, col: usize) -> u8 {
        self.luma[(t * self.size + row) * self.size + col]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubCube {
    /// `(rows, cols, frames)`.
    pub dims: (usize, usize, usize),
    /// Layout `[t][row][col]`.
    pub luma: Vec<u8>,
    /// `(row, col, t)` inside the parent cube.
    pub origin: (usize, usize, usize),
}

/// Numpy-style reflection of `i` into `[0, n)`.
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Reads frames as if reflect-padded up to at least `size` per axis.
struct PaddedView {
    width: usize,
    height: usize,
    pad_top: usize,
    pad_left: usize,
    padded_w: usize,
    padded_h: usize,
}

impl PaddedView {
    fn new(width: usize, height: usize, size: usize) -> Self {
        let padded_w = width.max(size);
        let padded_h = height.max(size);
        Self {
            width,
            height,
            pad_top: (padded_h - height) / 2,
            pad_left: (padded_w - width) / 2,
            padded_w,
            padded_h,
        }
    }

    fn crop(&self, plane: &Plane<u8>, origin: (usize, usize), size: usize, out: &mut Vec<u8>) {
        let (r0, c0) = origin;
        let direct = self.pad_top == 0 && self.pad_left == 0;
        for r in 0..size {
            if direct {
                let start = (r0 + r) * plane.width + c0;
                out.extend_from_slice(&plane.data[start..start + size]);
            } else {
                let sr = reflect((r0 + r) as isize - self.pad_top as isize, self.height);
                let row = plane.row(sr);
                out.extend(
                    (0..size).map(|c| {
                        row[reflect((c0 + c) as isize - self.pad_left as isize, self.width)]
                    }),
                );
            }
        }
    }

    fn crop_plane(&self, plane: &Plane<u8>, origin: (usize, usize), size: usize) -> Plane<u8> {
        let mut data = Vec::with_capacity(size * size);
        self.crop(plane, origin, size, &mut data);
        Plane {
            width: size,
            height: size,
            data,
        }
    }
}

/// `count` seeded origins on the valid grid of a `rows x cols` frame.
///
/// Origins are distinct whenever the grid has at least `count` cells.
pub fn sample_origins(
    rows: usize,
    cols: usize,
    size: usize,
    count: usize,
    seed: u64,
) -> Vec<(usize, usize)> {
    let (max_r, max_c) = (rows.saturating_sub(size), cols.saturating_sub(size));
    let cells = (max_r + 1) * (max_c + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut origins: Vec<(usize, usize)> = Vec::with_capacity(count);
    while origins.len() < count {
        let o = (rng.random_range(0..=max_r), rng.random_range(0..=max_c));
        if cells >= count && origins.contains(&o) {
            continue;
        }
        origins.push(o);
    }
    origins
}

/// Patches of the sub-video's first frame at seeded origins.
pub fn crop_sub_images(
    sub_video: &SubVideo<'_>,
    count: usize,
    size: usize,
    seed: u64,
) -> Vec<SubImage> {
    let frame = &sub_video.frames[0];
    let view = PaddedView::new(frame.luma.width, frame.luma.height, size);
    sample_origins(view.padded_h, view.padded_w, size, count, seed)
        .into_iter()
        .map(|origin| SubImage {
            luma: view.crop_plane(&frame.luma, origin, size),
            chroma_b: view.crop_plane(&frame.chroma_b, origin, size),
            chroma_r: view.crop_plane(&frame.chroma_r, origin, size),
            origin,
            source_frame: sub_video.start_frame,
        })
        .collect()
}

/// One luma cube per origin, spanning the whole sub-video.
pub fn crop_cubes(sub_video: &SubVideo<'_>, origins: &[(usize, usize)], size: usize) -> Vec<Cube> {
    let first = &sub_video.frames[0].luma;
    let view = PaddedView::new(first.width, first.height, size);
    origins
        .iter()
        .map(|&origin| {
            let mut luma = Vec::with_capacity(size * size * sub_video.frames.len());
            for f in sub_video.frames {
                view.crop(&f.luma, origin, size, &mut luma);
            }
            Cube {
                size,
                frames: sub_video.frames.len(),
                luma,
                origin,
                mos_label: None,
            }
        })
        .collect()
}

/// One sub-cube of `dims` at a seeded origin inside `cube`.
pub fn crop_sub_cube(cube: &Cube, dims: (usize, usize, usize), seed: u64) -> Result<SubCube> {
    let (h, w, t) = dims;
    if h > cube.size || w > cube.size || t > cube.frames || h == 0 || w == 0 || t == 0 {
        return Err(Error::shape(format!(
            "sub-cube {h}x{w}x{t} does not fit cube {0}x{0}x{1}",
            cube.size, cube.frames
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origin = (
        rng.random_range(0..=cube.size - h),
        rng.random_range(0..=cube.size - w),
        rng.random_range(0..=cube.frames - t),
    );
    let mut luma = Vec::with_capacity(h * w * t);
    for dt in 0..t {
        let frame = cube.frame(origin.2 + dt);
        for r in 0..h {
            let start = (origin.0 + r) * cube.size + origin.1;
            luma.extend_from_slice(&frame[start..start + w]);
        }
    }
    Ok(SubCube { dims, luma, origin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media_io::FrameRate;

    fn clip(w: usize, h: usize, n: usize, f: impl Fn(usize, usize, usize) -> u8) -> VideoClip {
        let frames = (0..n)
            .map(|t| {
                let luma =
                    Plane::new(w, h, (0..w * h).map(|i| f(t, i / w, i % w)).collect()).unwrap();
                Frame::new(luma, Plane::filled(w, h, 100), Plane::filled(w, h, 150)).unwrap()
            })
            .collect();
        VideoClip::new(FrameRate::new(30, 1), frames).unwrap()
    }

    #[test]
    fn split_counts_and_errors() {
        let c = clip(8, 8, 240, |_, _, _| 0);
        assert_eq!(split_sub_videos(&c, 30).unwrap().len(), 8);
        let c = clip(8, 8, 30, |_, _, _| 0);
        assert_eq!(split_sub_videos(&c, 30).unwrap().len(), 1);
        let c = clip(8, 8, 29, |_, _, _| 0);
        assert!(matches!(
            split_sub_videos(&c, 30),
            Err(Error::TooShort {
                frames: 29,
                needed: 30
            })
        ));
        let c = clip(8, 8, 65, |_, _, _| 0);
        let svs = split_sub_videos(&c, 30).unwrap();
        assert_eq!(svs.len(), 2);
        assert_eq!(svs[1].start_frame, 30);
    }

    #[test]
    fn origins_stay_within_bounds_and_are_distinct() {
        let o = sample_origins(720, 1280, 320, 6, 11);
        assert_eq!(o.len(), 6);
        for (i, &(r, c)) in o.iter().enumerate() {
            assert!(r <= 400 && c <= 960);
            assert!(!o[..i].contains(&(r, c)));
        }
        assert_eq!(o, sample_origins(720, 1280, 320, 6, 11));
    }

    #[test]
    fn exact_size_frame_gives_identical_patches() {
        let c = clip(320, 320, 1, |_, r, col| ((r * 7 + col) % 256) as u8);
        let sv = split_sub_videos(&c, 1).unwrap();
        let imgs = crop_sub_images(&sv[0], 6, 320, 5);
        assert_eq!(imgs.len(), 6);
        assert!(imgs
            .iter()
            .all(|s| s.origin == (0, 0) && s.luma == c.frames()[0].luma));
    }

    #[test]
    fn small_frames_are_reflect_padded() {
        let c = clip(5, 4, 1, |_, r, col| (r * 10 + col) as u8);
        let sv = split_sub_videos(&c, 1).unwrap();
        let img = &crop_sub_images(&sv[0], 1, 8, 0)[0];
        assert_eq!((img.luma.width, img.luma.height), (8, 8));
        // pad_top = 2, pad_left = 1: padded row 0 reflects source row 2.
        assert_eq!(img.luma.get(0, 1), 20);
        assert_eq!(img.luma.get(2, 1), 0);
        assert_eq!(img.luma.get(2, 0), 1);
    }

    #[test]
    fn cube_slices_match_sub_images() {
        let c = clip(400, 360, 30, |t, r, col| {
            ((t * 3 + r + 2 * col) % 251) as u8
        });
        let sv = split_sub_videos(&c, 30).unwrap();
        let imgs = crop_sub_images(&sv[0], 6, 320, 2);
        let origins: Vec<_> = imgs.iter().map(|s| s.origin).collect();
        let cubes = crop_cubes(&sv[0], &origins, 320);
        assert_eq!(cubes.len(), 6);
        for (cube, img) in cubes.iter().zip(&imgs) {
            assert_eq!(cube.luma.len(), 320 * 320 * 30);
            assert_eq!(cube.frame(0), &img.luma.data[..]);
            let (r0, c0) = cube.origin;
            assert_eq!(cube.get(7, 3, 4), c.frames()[7].luma.get(r0 + 3, c0 + 4));
        }
    }

    #[test]
    fn sub_cube_bounds_and_voxels() {
        let c = clip(320, 320, 30, |t, r, col| {
            ((t * 5 + r * 3 + col) % 256) as u8
        });
        let sv = split_sub_videos(&c, 30).unwrap();
        let cube = &crop_cubes(&sv[0], &[(0, 0)], 320)[0];
        for seed in 0..20 {
            let sc = crop_sub_cube(cube, (96, 96, 15), seed).unwrap();
            let (r, col, t) = sc.origin;
            assert!(r <= 224 && col <= 224 && t <= 15);
            assert_eq!(sc.luma.len(), 96 * 96 * 15);
            assert_eq!(
                sc.luma[(2 * 96 + 5) * 96 + 9],
                cube.get(t + 2, r + 5, col + 9)
            );
            assert_eq!(sc, crop_sub_cube(cube, (96, 96, 15), seed).unwrap());
        }
        assert!(crop_sub_cube(cube, (96, 96, 31), 0).is_err());
    }

    #[test]
    fn constant_input_gives_constant_crops() {
        let c = clip(330, 330, 30, |_, _, _| 42);
        let sv = split_sub_videos(&c, 30).unwrap();
        let cubes = crop_cubes(&sv[0], &[(3, 5)], 320);
        assert!(cubes[0].luma.iter().all(|&v| v == 42));
        let sc = crop_sub_cube(&cubes[0], (96, 96, 15), 1).unwrap();
        assert!(sc.luma.iter().all(|&v| v == 42));
    }
}

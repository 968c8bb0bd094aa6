//! Full-search block motion estimation and per-frame motion statistics.

use crate::cropping::Cube;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionConfig {
    pub block_size: usize,
    pub search_range: usize,
    /// Per-axis and magnitude threshold for "significant" vectors.
    pub sig_threshold: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            block_size: 16,
            search_range: 8,
            sig_threshold: 1.0,
        }
    }
}

/// Vectors of one frame against its predecessor, raster order over blocks.
///
/// A vector `(x, y)` means the block content moved right by `x` and down by
/// `y` pixels since the previous frame.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionField<T> {
    pub frame_index: usize,
    pub block_size: usize,
    pub blocks_per_row: usize,
    pub vectors: Vec<[T; 2]>,
}

fn sad(
    cur: &[u8],
    prev: &[u8],
    stride: usize,
    top: usize,
    left: usize,
    pt: usize,
    pl: usize,
    b: usize,
    bound: u32,
) -> u32 {
    let mut acc = 0u32;
    for r in 0..b {
        let a = &cur[(top + r) * stride + left..(top + r) * stride + left + b];
        let p = &prev[(pt + r) * stride + pl..(pt + r) * stride + pl + b];
        acc += a
            .iter()
            .zip(p)
            .map(|(&x, &y)| (i32::from(x) - i32::from(y)).unsigned_abs())
            .sum::<u32>();
        if acc > bound {
            return acc;
        }
    }
    acc
}

/// Candidate displacements ordered by `(|x| + |y|, y, x)` so the first
/// minimum found obeys the tie-break rule.
fn candidates(range: i64) -> Vec<(i64, i64)> {
    let mut c: Vec<(i64, i64)> = (-range..=range)
        .flat_map(|y| (-range..=range).map(move |x| (x, y)))
        .collect();
    c.sort_by_key(|&(x, y)| (x.abs() + y.abs(), y, x));
    c
}

/// Motion fields for frames `1..T` of `cube` (frame 0 has none).
pub fn estimate_motion<T: Scalar>(
    cube: &Cube,
    config: &MotionConfig,
) -> Result<Vec<MotionField<T>>> {
    let b = config.block_size;
    if b == 0 || !cube.size.is_multiple_of(b) {
        return Err(Error::shape(format!(
            "cube size {} not divisible by block size {b}",
            cube.size
        )));
    }
    let n = cube.size / b;
    let cands = candidates(config.search_range as i64);
    let size = cube.size as i64;
    let mut fields = Vec::with_capacity(cube.frames.saturating_sub(1));
    for t in 1..cube.frames {
        let (cur, prev) = (cube.frame(t), cube.frame(t - 1));
        let mut vectors = Vec::with_capacity(n * n);
        for by in 0..n {
            for bx in 0..n {
                let (top, left) = (by * b, bx * b);
                let mut best = (u32::MAX, 0i64, 0i64);
                for &(dx, dy) in &cands {
                    let (pt, pl) = (top as i64 - dy, left as i64 - dx);
                    if pt < 0 || pl < 0 || pt + b as i64 > size || pl + b as i64 > size {
                        continue;
                    }
                    let s = sad(
                        cur,
                        prev,
                        cube.size,
                        top,
                        left,
                        pt as usize,
                        pl as usize,
                        b,
                        best.0,
                    );
                    if s < best.0 {
                        best = (s, dx, dy);
                    }
                }
                vectors.push([T::lit(best.1 as f64), T::lit(best.2 as f64)]);
            }
        }
        fields.push(MotionField {
            frame_index: t,
            block_size: b,
            blocks_per_row: n,
            vectors,
        });
    }
    Ok(fields)
}

/// Sum of absolute differences of one block at a displacement; exposed for
/// optimality checks.
pub fn block_sad(
    cube: &Cube,
    t: usize,
    block: usize,
    by: usize,
    bx: usize,
    dx: i64,
    dy: i64,
) -> Option<u32> {
    let (top, left) = (by * block, bx * block);
    let (pt, pl) = (top as i64 - dy, left as i64 - dx);
    let size = cube.size as i64;
    if pt < 0 || pl < 0 || pt + block as i64 > size || pl + block as i64 > size {
        return None;
    }
    Some(sad(
        cube.frame(t),
        cube.frame(t - 1),
        cube.size,
        top,
        left,
        pt as usize,
        pl as usize,
        block,
        u32::MAX,
    ))
}

/// The 14 motion statistics of one frame:
/// mean x/y, std x/y, significant-ratio x/y, max x/y, min x/y,
/// then mean, std, significant-ratio and max of the magnitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TemporalStats14<T>(pub [T; 14]);

impl<T: Scalar> TemporalStats14<T> {
    pub fn zeros() -> Self {
        Self([T::zero(); 14])
    }
}

pub fn temporal_stats<T: Scalar>(field: &MotionField<T>, sig_threshold: T) -> TemporalStats14<T> {
    let v = &field.vectors;
    if v.is_empty() {
        return TemporalStats14::zeros();
    }
    let n = T::from_usize_exact(v.len());
    let xs = v.iter().map(|p| p[0]);
    let ys = v.iter().map(|p| p[1]);
    let mags: Vec<T> = v.iter().map(|p| p[0].hypot(p[1])).collect();

    let mean = |it: &mut dyn Iterator<Item = T>| it.fold(T::zero(), |a, b| a + b) / n;
    let std = |vals: &mut dyn Iterator<Item = T>, m: T| {
        (vals
            .map(|x| (x - m) * (x - m))
            .fold(T::zero(), |a, b| a + b)
            / n)
            .sqrt()
    };
    let ratio = |it: &mut dyn Iterator<Item = T>| {
        T::from_usize_exact(it.filter(|x| x.abs() > sig_threshold).count()) / n
    };
    let fmax = |it: &mut dyn Iterator<Item = T>| it.fold(T::neg_infinity(), T::max);
    let fmin = |it: &mut dyn Iterator<Item = T>| it.fold(T::infinity(), T::min);

    let mx = mean(&mut xs.clone());
    let my = mean(&mut ys.clone());
    let mm = mean(&mut mags.iter().copied());
    TemporalStats14([
        mx,
        my,
        std(&mut xs.clone(), mx),
        std(&mut ys.clone(), my),
        ratio(&mut xs.clone()),
        ratio(&mut ys.clone()),
        fmax(&mut xs.clone()),
        fmax(&mut ys.clone()),
        fmin(&mut xs.clone()),
        fmin(&mut ys.clone()),
        mm,
        std(&mut mags.iter().copied(), mm),
        ratio(&mut mags.iter().copied()),
        fmax(&mut mags.iter().copied()),
    ])
}

/// Chronological concatenation of per-frame statistics, frame 0 zero-filled:
/// `14 * cube.frames` values.
pub fn raw_temporal<T: Scalar>(cube: &Cube, config: &MotionConfig) -> Result<Vec<T>> {
    let fields = estimate_motion::<T>(cube, config)?;
    let mut raw = Vec::with_capacity(14 * cube.frames);
    raw.extend_from_slice(&TemporalStats14::<T>::zeros().0);
    let thr = T::lit(config.sig_threshold);
    for f in &fields {
        raw.extend_from_slice(&temporal_stats(f, thr).0);
    }
    Ok(raw)
}

//! Saab transform: DC = patch mean, AC = principal directions of the
//! mean-removed patches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{covariance, fix_sign, helmert_basis, symmetric_eigen};
use crate::scalar::Scalar;
use crate::tensor::{dot, Band, ChannelTensor, Matrix};

/// Spatio-temporal window extent or step, `(rows, cols, frames)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub h: usize,
    pub w: usize,
    pub t: usize,
}

impl Window {
    pub const fn new(h: usize, w: usize, t: usize) -> Self {
        Self { h, w, t }
    }

    pub const fn square(side: usize) -> Self {
        Self::new(side, side, 1)
    }

    pub const fn volume(&self) -> usize {
        self.h * self.w * self.t
    }
}

/// Placement geometry of a Saab kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SaabGeometry {
    pub window: Window,
    pub stride: Window,
    pub in_channels: usize,
}

impl SaabGeometry {
    pub const fn new(window: Window, stride: Window, in_channels: usize) -> Self {
        Self {
            window,
            stride,
            in_channels,
        }
    }

    pub const fn patch_len(&self) -> usize {
        self.window.volume() * self.in_channels
    }

    /// Output grid `(rows, cols, frames)` for an input extent.
    pub fn grid(&self, height: usize, width: usize, depth: usize) -> Result<(usize, usize, usize)> {
        let axis = |extent: usize, win: usize, step: usize, name: &str| {
            if win > extent || win == 0 || step == 0 {
                Err(Error::shape(format!(
                    "window {win} (stride {step}) does not fit {name} extent {extent}"
                )))
            } else {
                Ok((extent - win) / step + 1)
            }
        };
        Ok((
            axis(height, self.window.h, self.stride.h, "row")?,
            axis(width, self.window.w, self.stride.w, "column")?,
            axis(depth, self.window.t, self.stride.t, "temporal")?,
        ))
    }

    fn check_input<T: Scalar>(&self, tensor: &ChannelTensor<T>) -> Result<(usize, usize, usize)> {
        if tensor.channels != self.in_channels {
            return Err(Error::shape(format!(
                "kernel expects {} input channels, tensor has {}",
                self.in_channels, tensor.channels
            )));
        }
        self.grid(tensor.height, tensor.width, tensor.depth)
    }
}

/// Fitted Saab kernel set.
#[derive(Clone, Debug, PartialEq)]
pub struct Saab<T> {
    pub geometry: SaabGeometry,
    /// `num_ac x patch_len`, orthonormal rows orthogonal to the constant vector.
    pub ac: Matrix<T>,
    /// Variance captured by each AC kernel, non-increasing.
    pub explained_variance: Vec<T>,
}

impl<T: Scalar> Saab<T> {
    pub fn num_ac(&self) -> usize {
        self.ac.rows
    }

    /// DC followed by AC responses.
    pub fn output_channels(&self) -> usize {
        self.num_ac() + 1
    }

    /// Transforms one flattened patch into `[dc, ac_1, .., ac_k]`.
    pub fn transform_patch(&self, patch: &[T], out: &mut [T]) {
        let len = T::from_usize_exact(patch.len());
        let mean = patch.iter().copied().sum::<T>() / len;
        out[0] = mean;
        let centred: Vec<T> = patch.iter().map(|&v| v - mean).collect();
        for (k, o) in out[1..].iter_mut().enumerate() {
            *o = dot(self.ac.row(k), &centred);
        }
    }

    /// `dc * 1 + AC^T coeffs`.
    pub fn reconstruct_patch(&self, dc: T, coeffs: &[T]) -> Vec<T> {
        let mut patch = vec![dc; self.ac.cols];
        for (k, &c) in coeffs.iter().enumerate() {
            for (p, &a) in patch.iter_mut().zip(self.ac.row(k)) {
                *p += c * a;
            }
        }
        patch
    }

    /// Slides the kernel over `tensor`; output channel 0 is DC.
    pub fn apply(&self, tensor: &ChannelTensor<T>) -> Result<ChannelTensor<T>> {
        let (gh, gw, gt) = self.geometry.check_input(tensor)?;
        let channels = self.output_channels();
        let mut out = ChannelTensor::zeros(gh, gw, gt, channels);
        let mut patch = vec![T::zero(); self.geometry.patch_len()];
        let mut resp = vec![T::zero(); channels];
        for pt in 0..gt {
            for py in 0..gh {
                for px in 0..gw {
                    gather_patch(tensor, &self.geometry, py, px, pt, &mut patch);
                    self.transform_patch(&patch, &mut resp);
                    for (c, &r) in resp.iter().enumerate() {
                        let idx = out.index(c, pt, py, px);
                        out.data[idx] = r;
                    }
                }
            }
        }
        Ok(out.with_band(Band::Low))
    }
}

/// Copies the patch at grid position `(py, px, pt)`, ordered
/// channel, frame, row, column.
fn gather_patch<T: Scalar>(
    tensor: &ChannelTensor<T>,
    geom: &SaabGeometry,
    py: usize,
    px: usize,
    pt: usize,
    out: &mut [T],
) {
    let (w, s) = (geom.window, geom.stride);
    let mut k = 0;
    for c in 0..tensor.channels {
        for dt in 0..w.t {
            for dy in 0..w.h {
                let start = tensor.index(c, pt * s.t + dt, py * s.h + dy, px * s.w);
                out[k..k + w.w].copy_from_slice(&tensor.data[start..start + w.w]);
                k += w.w;
            }
        }
    }
}

/// Every patch of `tensor` as a row.
pub fn extract_patches<T: Scalar>(
    tensor: &ChannelTensor<T>,
    geom: &SaabGeometry,
) -> Result<Matrix<T>> {
    let (gh, gw, gt) = geom.check_input(tensor)?;
    let len = geom.patch_len();
    let mut m = Matrix::zeros(gh * gw * gt, len);
    let mut r = 0;
    for pt in 0..gt {
        for py in 0..gh {
            for px in 0..gw {
                gather_patch(tensor, geom, py, px, pt, m.row_mut(r));
                r += 1;
            }
        }
    }
    Ok(m)
}

/// Patches from many tensors, uniformly subsampled to at most `max_patches`.
///
/// Only the chosen patches are materialised.
pub fn sample_patches<T: Scalar>(
    tensors: &[ChannelTensor<T>],
    geom: &SaabGeometry,
    max_patches: usize,
    seed: u64,
) -> Result<Matrix<T>> {
    let first = tensors
        .first()
        .ok_or_else(|| Error::Fit("no tensors to draw patches from".into()))?;
    let shape = (first.height, first.width, first.depth);
    sample_patches_with(tensors.len(), shape, geom, max_patches, seed, |i| {
        Ok(tensors[i].clone())
    })
}

/// Like [`sample_patches`], but tensor `i` is produced on demand by `make`,
/// so only one input tensor is alive at a time. Every tensor must have
/// spatial/temporal extent `shape = (height, width, depth)`.
pub fn sample_patches_with<T: Scalar>(
    count: usize,
    shape: (usize, usize, usize),
    geom: &SaabGeometry,
    max_patches: usize,
    seed: u64,
    mut make: impl FnMut(usize) -> Result<ChannelTensor<T>>,
) -> Result<Matrix<T>> {
    if count == 0 {
        return Err(Error::Fit("no tensors to draw patches from".into()));
    }
    let (gh, gw, gt) = geom.grid(shape.0, shape.1, shape.2)?;
    let per = gh * gw * gt;
    let total = per * count;
    let chosen: Vec<usize> = if total <= max_patches {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = rand::seq::index::sample(&mut rng, total, max_patches).into_vec();
        idx.sort_unstable();
        idx
    };
    let mut m = Matrix::zeros(chosen.len(), geom.patch_len());
    let mut current: Option<(usize, ChannelTensor<T>)> = None;
    for (r, &flat) in chosen.iter().enumerate() {
        let (ti, rem) = (flat / per, flat % per);
        if current.as_ref().map(|c| c.0) != Some(ti) {
            let t = make(ti)?;
            if geom.check_input(&t)? != (gh, gw, gt) {
                return Err(Error::shape("fit tensors differ in shape"));
            }
            current = Some((ti, t));
        }
        let tensor = &current.as_ref().expect("set above").1;
        let pt = rem / (gh * gw);
        let py = (rem / gw) % gh;
        let px = rem % gw;
        gather_patch(tensor, geom, py, px, pt, m.row_mut(r));
    }
    Ok(m)
}

/// Fits `num_ac` AC kernels to flattened patches (one per row).
pub fn fit_saab<T: Scalar>(
    patches: &Matrix<T>,
    geometry: SaabGeometry,
    num_ac: usize,
) -> Result<Saab<T>> {
    let len = patches.cols;
    if len != geometry.patch_len() {
        return Err(Error::shape(format!(
            "patch length {len} does not match kernel geometry {}",
            geometry.patch_len()
        )));
    }
    if num_ac + 1 > len {
        return Err(Error::shape(format!(
            "{num_ac} AC kernels need patch length > {num_ac}, got {len}"
        )));
    }
    if patches.rows < num_ac + 1 {
        return Err(Error::Fit(format!(
            "{num_ac} AC kernels need at least {} patches, got {}",
            num_ac + 1,
            patches.rows
        )));
    }

    let mut centred = patches.clone();
    let inv_len = T::one() / T::from_usize_exact(len);
    for r in 0..centred.rows {
        let row = centred.row_mut(r);
        let mean = row.iter().copied().sum::<T>() * inv_len;
        for v in row.iter_mut() {
            *v -= mean;
        }
    }
    let (_, cov) = covariance(&centred)?;

    // Work in the complement of the constant vector so every AC kernel is
    // exactly orthogonal to DC, whatever the covariance rank.
    let q = helmert_basis::<T>(len);
    let projected = q.matmul(&cov)?.matmul(&q.transpose())?;
    let eig = symmetric_eigen(&projected)?;

    let mut ac = Matrix::zeros(num_ac, len);
    let mut explained_variance = Vec::with_capacity(num_ac);
    for k in 0..num_ac {
        let coords = eig.vectors.row(k);
        let row = ac.row_mut(k);
        for (j, &cj) in coords.iter().enumerate() {
            for (r, &qv) in row.iter_mut().zip(q.row(j)) {
                *r += cj * qv;
            }
        }
        fix_sign(row);
        explained_variance.push(eig.values[k].max(T::zero()));
    }
    Ok(Saab {
        geometry,
        ac,
        explained_variance,
    })
}

/// Draws patches from `tensors` and fits a kernel in one step.
pub fn fit_saab_on<T: Scalar>(
    tensors: &[ChannelTensor<T>],
    geometry: SaabGeometry,
    num_ac: usize,
    max_patches: usize,
    seed: u64,
) -> Result<Saab<T>> {
    let patches = sample_patches(tensors, &geometry, max_patches, seed)?;
    fit_saab(&patches, geometry, num_ac)
}

//! Dense containers: 2-D planes, channel tensors and row-major matrices.

use crate::error::{Error, Result};
use crate::scalar::{from_u8, Scalar};

/// Row-major 2-D sample plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane<S> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<S>,
}

impl<S: Copy> Plane<S> {
    pub fn new(width: usize, height: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::shape(format!(
                "plane {}x{} needs {} samples, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: S) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> S {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[S] {
        &self.data[row * self.width..(row + 1) * self.width]
    }
}

impl Plane<u8> {
    pub fn to_real<T: Scalar>(&self) -> Plane<T> {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| from_u8(v)).collect(),
        }
    }
}

/// Frequency band tag carried by transform outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Band {
    Low,
    Mid,
    #[default]
    High,
}

/// Multi-channel tensor with layout `[channel][t][row][col]`.
///
/// Spatial-only tensors have `depth == 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTensor<T> {
    pub height: usize,
    pub width: usize,
    pub depth: usize,
    pub channels: usize,
    pub band: Band,
    pub data: Vec<T>,
}

impl<T: Scalar> ChannelTensor<T> {
    pub fn zeros(height: usize, width: usize, depth: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            depth,
            channels,
            band: Band::default(),
            data: vec![T::zero(); height * width * depth * channels],
        }
    }

    pub fn from_data(
        height: usize,
        width: usize,
        depth: usize,
        channels: usize,
        data: Vec<T>,
    ) -> Result<Self> {
        if data.len() != height * width * depth * channels {
            return Err(Error::shape(format!(
                "tensor ({height}x{width})x{depth},{channels} needs {} values, got {}",
                height * width * depth * channels,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            depth,
            channels,
            band: Band::default(),
            data,
        })
    }

    pub fn from_plane(plane: &Plane<T>) -> Self {
        Self {
            height: plane.height,
            width: plane.width,
            depth: 1,
            channels: 1,
            band: Band::default(),
            data: plane.data.clone(),
        }
    }

    /// Stacks equally sized planes as channels.
    pub fn from_planes(planes: &[Plane<T>]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::shape("no planes to stack"))?;
        let mut data = Vec::with_capacity(first.data.len() * planes.len());
        for p in planes {
            if p.width != first.width || p.height != first.height {
                return Err(Error::shape("planes differ in size"));
            }
            data.extend_from_slice(&p.data);
        }
        Self::from_data(first.height, first.width, 1, planes.len(), data)
    }

    pub fn with_band(mut self, band: Band) -> Self {
        self.band = band;
        self
    }

    #[inline]
    pub fn channel_len(&self) -> usize {
        self.height * self.width * self.depth
    }

    #[inline]
    pub fn index(&self, c: usize, t: usize, y: usize, x: usize) -> usize {
        ((c * self.depth + t) * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, c: usize, t: usize, y: usize, x: usize) -> T {
        self.data[self.index(c, t, y, x)]
    }

    pub fn channel(&self, c: usize) -> &[T] {
        let n = self.channel_len();
        &self.data[c * n..(c + 1) * n]
    }

    /// Copies channels `range` into a new tensor with the given band tag.
    pub fn select_channels(&self, range: std::ops::Range<usize>, band: Band) -> Self {
        let n = self.channel_len();
        Self {
            height: self.height,
            width: self.width,
            depth: self.depth,
            channels: range.len(),
            band,
            data: self.data[range.start * n..range.end * n].to_vec(),
        }
    }

    /// Keeps the top-left `height x width` region of every slice.
    pub fn crop_spatial(&self, height: usize, width: usize) -> Result<Self> {
        if height > self.height || width > self.width {
            return Err(Error::shape("crop larger than tensor"));
        }
        let mut data = Vec::with_capacity(height * width * self.depth * self.channels);
        for c in 0..self.channels {
            for t in 0..self.depth {
                for y in 0..height {
                    let start = self.index(c, t, y, 0);
                    data.extend_from_slice(&self.data[start..start + width]);
                }
            }
        }
        Ok(Self {
            height,
            width,
            depth: self.depth,
            channels: self.channels,
            band: self.band,
            data,
        })
    }
}

/// Row-major dense matrix; rows are samples in every fit routine.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::shape("ragged rows"));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Columns at `indices`, in that order.
    pub fn select_columns(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * indices.len());
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(indices.iter().map(|&j| row[j]));
        }
        Self {
            rows: self.rows,
            cols: indices.len(),
            data,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::shape("matmul inner dimension mismatch"));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

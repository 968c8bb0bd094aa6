use crate::error::{Error, Result};
use crate::linalg::{covariance, fix_sign, symmetric_eigen};
use crate::scalar::Scalar;
use crate::tensor::{dot, Matrix};

/// Principal subspace of a sample set.
#[derive(Clone, Debug, PartialEq)]
pub struct Pca<T> {
    pub mean: Vec<T>,
    /// `k x dim`, orthonormal rows.
    pub components: Matrix<T>,
    /// Non-increasing.
    pub explained_variance: Vec<T>,
}

/// Fits the top `k` components of the rows of `data`.
pub fn fit_pca<T: Scalar>(data: &Matrix<T>, k: usize) -> Result<Pca<T>> {
    if k > data.cols {
        return Err(Error::shape(format!(
            "cannot keep {k} components of {}-D data",
            data.cols
        )));
    }
    if data.rows < 2 {
        return Err(Error::Fit(format!(
            "PCA needs >= 2 vectors, got {}",
            data.rows
        )));
    }
    let (mean, cov) = covariance(data)?;
    pca_from_moments(mean, &cov, k)
}

/// Streaming first and second moments, for fitting a PCA without holding
/// every sample in memory. Samples are shifted by the first one to keep the
/// one-pass covariance well conditioned.
#[derive(Clone, Debug)]
pub struct PcaAccumulator<T> {
    dim: usize,
    n: usize,
    shift: Vec<T>,
    sum: Vec<T>,
    /// Upper triangle, row-major `dim x dim`.
    outer: Vec<T>,
    buf: Vec<T>,
}

impl<T: Scalar> PcaAccumulator<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            n: 0,
            shift: Vec::new(),
            sum: vec![T::zero(); dim],
            outer: vec![T::zero(); dim * dim],
            buf: vec![T::zero(); dim],
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, v: &[T]) -> Result<()> {
        let d = self.dim;
        if v.len() != d {
            return Err(Error::shape(format!(
                "accumulator expects {d}-D input, got {}",
                v.len()
            )));
        }
        if self.n == 0 {
            self.shift = v.to_vec();
        }
        self.n += 1;
        for ((b, &x), &k) in self.buf.iter_mut().zip(v).zip(&self.shift) {
            *b = x - k;
        }
        for a in 0..d {
            let ca = self.buf[a];
            self.sum[a] += ca;
            if ca == T::zero() {
                continue;
            }
            let row = &mut self.outer[a * d + a..(a + 1) * d];
            for (o, &cb) in row.iter_mut().zip(&self.buf[a..]) {
                *o += ca * cb;
            }
        }
        Ok(())
    }

    /// Mean and unbiased covariance of everything pushed so far.
    pub fn moments(&self) -> Result<(Vec<T>, Matrix<T>)> {
        let (n, d) = (self.n, self.dim);
        if n < 2 {
            return Err(Error::Fit(format!("PCA needs >= 2 vectors, got {n}")));
        }
        let nf = T::from_usize_exact(n);
        let mean_shifted: Vec<T> = self.sum.iter().map(|&s| s / nf).collect();
        let mut cov = vec![T::zero(); d * d];
        let scale = T::one() / T::from_usize_exact(n - 1);
        for a in 0..d {
            for b in a..d {
                let v = (self.outer[a * d + b] - nf * mean_shifted[a] * mean_shifted[b]) * scale;
                cov[a * d + b] = v;
                cov[b * d + a] = v;
            }
        }
        let mean = mean_shifted
            .iter()
            .zip(&self.shift)
            .map(|(&m, &k)| m + k)
            .collect();
        Ok((mean, Matrix::from_vec(d, d, cov)?))
    }

    pub fn fit(&self, k: usize) -> Result<Pca<T>> {
        if k > self.dim {
            return Err(Error::shape(format!(
                "cannot keep {k} components of {}-D data",
                self.dim
            )));
        }
        let (mean, cov) = self.moments()?;
        pca_from_moments(mean, &cov, k)
    }
}

fn pca_from_moments<T: Scalar>(mean: Vec<T>, cov: &Matrix<T>, k: usize) -> Result<Pca<T>> {
    let eig = symmetric_eigen(cov)?;
    let mut components = Matrix::zeros(k, cov.cols);
    for i in 0..k {
        let row = components.row_mut(i);
        row.copy_from_slice(eig.vectors.row(i));
        fix_sign(row);
    }
    let explained_variance = eig.values[..k].iter().map(|v| v.max(T::zero())).collect();
    Ok(Pca {
        mean,
        components,
        explained_variance,
    })
}

impl<T: Scalar> Pca<T> {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.components.rows
    }

    /// Coordinates of `v - mean` on every component.
    pub fn apply(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.dim() {
            return Err(Error::shape(format!(
                "PCA expects {}-D input, got {}",
                self.dim(),
                v.len()
            )));
        }
        let centred: Vec<T> = v.iter().zip(&self.mean).map(|(&a, &m)| a - m).collect();
        Ok((0..self.k())
            .map(|i| dot(self.components.row(i), &centred))
            .collect())
    }

    pub fn reconstruct(&self, coeffs: &[T]) -> Vec<T> {
        let mut out = self.mean.clone();
        for (i, &c) in coeffs.iter().enumerate() {
            for (o, &p) in out.iter_mut().zip(self.components.row(i)) {
                *o += c * p;
            }
        }
        out
    }
}

/// Free-function form of [`Pca::apply`].
pub fn apply_pca<T: Scalar>(basis: &Pca<T>, v: &[T]) -> Result<Vec<T>> {
    basis.apply(v)
}

//! Covariance and symmetric eigendecomposition.
//!
//! The eigensolver is Householder tridiagonalisation followed by the
//! implicit QL algorithm with Wilkinson-style shifts, operating in place on a
//! dense `d x d` matrix. Kernel dimensions here stay below a few hundred, so
//! the cubic cost is negligible next to covariance accumulation.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Matrix;

/// Column means and the unbiased (n-1) covariance of the rows of `data`.
///
/// Two passes: means first, then centred outer products.
pub fn covariance<T: Scalar>(data: &Matrix<T>) -> Result<(Vec<T>, Matrix<T>)> {
    let (n, d) = (data.rows, data.cols);
    if n < 2 {
        return Err(Error::Fit(format!("covariance needs >= 2 rows, got {n}")));
    }
    let inv_n = T::one() / T::from_usize_exact(n);
    let mut mean = vec![T::zero(); d];
    for i in 0..n {
        for (m, &v) in mean.iter_mut().zip(data.row(i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m *= inv_n;
    }

    let mut cov = vec![T::zero(); d * d];
    let mut centred = vec![T::zero(); d];
    for i in 0..n {
        for ((c, &v), &m) in centred.iter_mut().zip(data.row(i)).zip(&mean) {
            *c = v - m;
        }
        for a in 0..d {
            let ca = centred[a];
            if ca == T::zero() {
                continue;
            }
            let row = &mut cov[a * d + a..(a + 1) * d];
            for (o, &cb) in row.iter_mut().zip(&centred[a..]) {
                *o += ca * cb;
            }
        }
    }
    let scale = T::one() / T::from_usize_exact(n - 1);
    for a in 0..d {
        for b in a..d {
            let v = cov[a * d + b] * scale;
            cov[a * d + b] = v;
            cov[b * d + a] = v;
        }
    }
    Ok((mean, Matrix::from_vec(d, d, cov)?))
}

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
///
/// Row `k` of `vectors` is the unit eigenvector for `values[k]`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

pub fn symmetric_eigen<T: Scalar>(a: &Matrix<T>) -> Result<SymmetricEigen<T>> {
    let n = a.rows;
    if a.cols != n {
        return Err(Error::shape("eigendecomposition needs a square matrix"));
    }
    if a.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite entry in symmetric matrix".into()));
    }
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Vec::new(),
            vectors: Matrix::zeros(0, 0),
        });
    }
    // v is column-major-by-convention: v[i][j] with column j an eigenvector.
    let mut v: Vec<Vec<T>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut v, &mut d, &mut e);
    ql_implicit(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));
    let mut vectors = Matrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        values.push(d[j]);
        for i in 0..n {
            vectors.set(k, i, v[i][j]);
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

fn tridiagonalize<T: Scalar>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) {
    let n = d.len();
    let zero = T::zero();
    d.copy_from_slice(&v[n - 1][..n]);
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for &dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = zero;
                v[j][i] = zero;
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in &mut e[..i] {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in j + 1..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = zero;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    let dk = d[k];
                    v[k][j] -= g * dk;
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = zero;
    }
    v[n - 1][n - 1] = T::one();
    e[0] = zero;
}

fn ql_implicit<T: Scalar>(v: &mut [Vec<T>], d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    let zero = T::zero();
    let two = T::lit(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iterations = 0usize;
            loop {
                iterations += 1;
                if iterations > 60 {
                    return Err(Error::Fit("eigensolver failed to converge".into()));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in &mut d[l + 2..] {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        let hk = row[i + 1];
                        row[i + 1] = s * row[i] + c * hk;
                        row[i] = c * row[i] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
    Ok(())
}

/// Flips `row` so its largest-magnitude entry (first on ties) is positive.
pub fn fix_sign<T: Scalar>(row: &mut [T]) {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if v.abs() > row[best].abs() {
            best = i;
        }
    }
    if row.get(best).is_some_and(|v| *v < T::zero()) {
        for v in row.iter_mut() {
            *v = -*v;
        }
    }
}

/// Orthonormal basis (as rows) of the complement of the constant vector in
/// `R^n`: the Helmert contrasts.
pub fn helmert_basis<T: Scalar>(n: usize) -> Matrix<T> {
    let mut q = Matrix::zeros(n.saturating_sub(1), n);
    for k in 1..n {
        let kk = T::from_usize_exact(k);
        let norm = (kk * (kk + T::one())).sqrt();
        for j in 0..k {
            q.set(k - 1, j, T::one() / norm);
        }
        q.set(k - 1, k, -kk / norm);
    }
    q
}

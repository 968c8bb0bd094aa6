use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Band, ChannelTensor, Plane};

const N: usize = 8;

/// Zig-zag scan: entry `k` is the `(row, col)` of coefficient `k` in a block.
pub const ZIGZAG: [(usize, usize); 64] = zigzag();

const fn zigzag() -> [(usize, usize); 64] {
    let mut out = [(0usize, 0usize); 64];
    let mut k = 0;
    let mut s = 0;
    while s < 2 * N - 1 {
        let lo = if s >= N { s - N + 1 } else { 0 };
        let hi = if s < N { s } else { N - 1 };
        if s % 2 == 1 {
            let mut r = lo;
            while r <= hi {
                out[k] = (r, s - r);
                k += 1;
                r += 1;
            }
        } else {
            let mut r = hi + 1;
            while r > lo {
                r -= 1;
                out[k] = (r, s - r);
                k += 1;
            }
        }
        s += 1;
    }
    out
}

/// `basis[u][x] = a(u) cos((2x + 1) u pi / 16)`, orthonormal rows.
fn basis<T: Scalar>() -> [[T; N]; N] {
    let mut b = [[T::zero(); N]; N];
    let n = T::from_usize_exact(N);
    for (u, row) in b.iter_mut().enumerate() {
        let a = if u == 0 {
            (T::one() / n).sqrt()
        } else {
            (T::lit(2.0) / n).sqrt()
        };
        for (x, v) in row.iter_mut().enumerate() {
            let angle = T::lit(((2 * x + 1) * u) as f64) * T::PI() / T::lit(16.0);
            *v = a * angle.cos();
        }
    }
    b
}

/// Orthonormal type-II 2-D DCT of every non-overlapping 8x8 block.
///
/// Output has one channel per coefficient in zig-zag order (channel 0 is DC)
/// and one spatial cell per block.
pub fn block_dct_8x8<T: Scalar>(plane: &Plane<T>) -> Result<ChannelTensor<T>> {
    if !plane.width.is_multiple_of(N) || !plane.height.is_multiple_of(N) {
        return Err(Error::shape(format!(
            "block DCT needs dims divisible by 8, got {}x{}",
            plane.width, plane.height
        )));
    }
    let (bh, bw) = (plane.height / N, plane.width / N);
    let b = basis::<T>();
    let mut out = ChannelTensor::zeros(bh, bw, 1, 64);
    let mut tmp = [[T::zero(); N]; N];
    for by in 0..bh {
        for bx in 0..bw {
            // rows: tmp[y][v] = sum_x block[y][x] b[v][x]
            for (y, tmp_row) in tmp.iter_mut().enumerate() {
                let src = &plane.row(by * N + y)[bx * N..bx * N + N];
                for (v, t) in tmp_row.iter_mut().enumerate() {
                    *t = src
                        .iter()
                        .zip(&b[v])
                        .fold(T::zero(), |a, (&p, &c)| a + p * c);
                }
            }
            for (k, &(u, v)) in ZIGZAG.iter().enumerate() {
                let c = (0..N).fold(T::zero(), |a, y| a + b[u][y] * tmp[y][v]);
                let idx = out.index(k, 0, by, bx);
                out.data[idx] = c;
            }
        }
    }
    Ok(out)
}

/// Inverse of [`block_dct_8x8`].
pub fn inverse_block_dct_8x8<T: Scalar>(coeffs: &ChannelTensor<T>) -> Result<Plane<T>> {
    if coeffs.channels != 64 || coeffs.depth != 1 {
        return Err(Error::shape("inverse DCT expects (h x w), 64 coefficients"));
    }
    let b = basis::<T>();
    let (bh, bw) = (coeffs.height, coeffs.width);
    let mut plane = Plane::filled(bw * N, bh * N, T::zero());
    for by in 0..bh {
        for bx in 0..bw {
            let mut block = [[T::zero(); N]; N];
            for (k, &(u, v)) in ZIGZAG.iter().enumerate() {
                block[u][v] = coeffs.get(k, 0, by, bx);
            }
            for y in 0..N {
                for x in 0..N {
                    let mut acc = T::zero();
                    for (u, bu) in b.iter().enumerate() {
                        for (v, bv) in b.iter().enumerate() {
                            acc += bu[y] * bv[x] * block[u][v];
                        }
                    }
                    plane.data[(by * N + y) * plane.width + bx * N + x] = acc;
                }
            }
        }
    }
    Ok(plane)
}

/// Splits DCT output into the DC channel (low) and the 63 AC channels (high).
pub fn split_dc_ac<T: Scalar>(coeffs: &ChannelTensor<T>) -> (ChannelTensor<T>, ChannelTensor<T>) {
    (
        coeffs.select_channels(0..1, Band::Low),
        coeffs.select_channels(1..coeffs.channels, Band::High),
    )
}

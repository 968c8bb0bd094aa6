use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::ChannelTensor;

/// Max of absolute values over non-overlapping `rows x cols` windows of every
/// channel and frame.
pub fn abs_max_pool<T: Scalar>(
    tensor: &ChannelTensor<T>,
    rows: usize,
    cols: usize,
) -> Result<ChannelTensor<T>> {
    if rows == 0
        || cols == 0
        || !tensor.height.is_multiple_of(rows)
        || !tensor.width.is_multiple_of(cols)
    {
        return Err(Error::shape(format!(
            "{}x{} is not divisible by pooling window {rows}x{cols}",
            tensor.height, tensor.width
        )));
    }
    let (oh, ow) = (tensor.height / rows, tensor.width / cols);
    let mut out = ChannelTensor::zeros(oh, ow, tensor.depth, tensor.channels);
    out.band = tensor.band;
    for c in 0..tensor.channels {
        for t in 0..tensor.depth {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut m = T::zero();
                    for dy in 0..rows {
                        let start = tensor.index(c, t, oy * rows + dy, ox * cols);
                        for &v in &tensor.data[start..start + cols] {
                            m = m.max(v.abs());
                        }
                    }
                    let idx = out.index(c, t, oy, ox);
                    out.data[idx] = m;
                }
            }
        }
    }
    Ok(out)
}

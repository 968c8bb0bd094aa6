use crate::scalar::Scalar;
use crate::tensor::ChannelTensor;

/// Population standard deviation of each channel (Welford's update).
pub fn channel_std<T: Scalar>(tensor: &ChannelTensor<T>) -> Vec<T> {
    (0..tensor.channels)
        .map(|c| population_std(tensor.channel(c)))
        .collect()
}

pub fn population_std<T: Scalar>(values: &[T]) -> T {
    let mut mean = T::zero();
    let mut m2 = T::zero();
    let mut n = T::zero();
    for &v in values {
        n += T::one();
        let delta = v - mean;
        mean += delta / n;
        m2 += delta * (v - mean);
    }
    if n == T::zero() {
        T::zero()
    } else {
        (m2 / n).max(T::zero()).sqrt()
    }
}

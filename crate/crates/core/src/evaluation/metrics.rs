use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `(predicted, subjective)` score pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionPairs<T> {
    pub predicted: Vec<T>,
    pub subjective: Vec<T>,
}

impl<T: Scalar> PredictionPairs<T> {
    pub fn new(predicted: Vec<T>, subjective: Vec<T>) -> Result<Self> {
        if predicted.len() != subjective.len() {
            return Err(Error::shape(format!(
                "{} predictions for {} subjective scores",
                predicted.len(),
                subjective.len()
            )));
        }
        Ok(Self {
            predicted,
            subjective,
        })
    }

    pub fn len(&self) -> usize {
        self.predicted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicted.is_empty()
    }
}

fn pearson<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    let n = a.len();
    if n < 3 {
        return Err(Error::Degenerate(format!(
            "correlation needs >= 3 pairs, got {n}"
        )));
    }
    let nf = T::from_usize_exact(n);
    let ma = a.iter().copied().sum::<T>() / nf;
    let mb = b.iter().copied().sum::<T>() / nf;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == T::zero() || sbb == T::zero() {
        return Err(Error::Degenerate(
            "one side of the pairs is constant".into(),
        ));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt()))
        .max(-T::one())
        .min(T::one()))
}

/// Pearson linear correlation.
pub fn plcc<T: Scalar>(pairs: &PredictionPairs<T>) -> Result<T> {
    pearson(&pairs.predicted, &pairs.subjective)
}

/// 1-based ranks; tied values share their average rank.
pub fn ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite scores"));
    let mut out = vec![T::zero(); values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = T::from_usize_exact(i + j + 2) / T::lit(2.0);
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation: Pearson correlation of average ranks.
pub fn srocc<T: Scalar>(pairs: &PredictionPairs<T>) -> Result<T> {
    pearson(&ranks(&pairs.predicted), &ranks(&pairs.subjective))
}

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Cube, sub-video and video scores of one clip.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreReport<T> {
    /// Cube scores grouped by sub-video.
    pub cube_scores: Vec<Vec<T>>,
    pub sub_video_scores: Vec<T>,
    pub video_score: T,
}

/// Median; the mean of the middle two for even counts.
pub fn median<T: Scalar>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / T::lit(2.0)
    })
}

/// Median over each sub-video's cubes, then mean over sub-videos.
pub fn ensemble_scores<T: Scalar>(cube_scores: Vec<Vec<T>>) -> Result<ScoreReport<T>> {
    if cube_scores.is_empty() {
        return Err(Error::Input("no sub-videos to ensemble".into()));
    }
    let sub_video_scores = cube_scores
        .iter()
        .enumerate()
        .map(|(i, c)| {
            median(c).ok_or_else(|| Error::Input(format!("sub-video {i} has no cube scores")))
        })
        .collect::<Result<Vec<T>>>()?;
    let video_score =
        sub_video_scores.iter().copied().sum::<T>() / T::from_usize_exact(sub_video_scores.len());
    Ok(ScoreReport {
        cube_scores,
        sub_video_scores,
        video_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(
            ensemble_scores(vec![vec![1.0, 5.0, 9.0]])
                .unwrap()
                .video_score,
            5.0
        );
        assert_eq!(
            ensemble_scores(vec![vec![2.0], vec![4.0]])
                .unwrap()
                .video_score,
            3.0
        );
        assert_eq!(ensemble_scores(vec![vec![7.5]]).unwrap().video_score, 7.5);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
    }

    #[test]
    fn permutation_invariant() {
        let a = ensemble_scores(vec![vec![3.0, 1.0, 2.0], vec![8.0, 6.0]]).unwrap();
        let b = ensemble_scores(vec![vec![6.0, 8.0], vec![2.0, 3.0, 1.0]]).unwrap();
        assert_eq!(a.video_score, b.video_score);
    }

    #[test]
    fn empty_groups_are_rejected() {
        assert!(ensemble_scores::<f64>(vec![]).is_err());
        assert!(ensemble_scores::<f64>(vec![vec![]]).is_err());
    }
}

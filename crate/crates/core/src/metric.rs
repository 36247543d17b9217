use crate::error::{Error, Result};
use crate::types::Codebook;

/// Distortion measure between a vector and a codevector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum Metric {
    /// Sum of squared component differences. The centroid update is the exact
    /// minimizer under this measure, so distortion never rises within a level.
    #[default]
    SquaredEuclidean,
    /// Square root of the above.
    Euclidean,
}

impl Metric {
    /// Metric value for two equal-length slices. Lengths are not checked.
    #[inline]
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        let sq = squared_euclidean(a, b);
        match self {
            Metric::SquaredEuclidean => sq,
            Metric::Euclidean => libm::sqrt(sq),
        }
    }

    /// One-byte tag used by the codebook file footer.
    pub fn tag(self) -> u8 {
        match self {
            Metric::SquaredEuclidean => 0,
            Metric::Euclidean => 1,
        }
    }

    /// Inverse of [`Metric::tag`].
    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Metric::SquaredEuclidean),
            1 => Some(Metric::Euclidean),
            _ => None,
        }
    }
}

#[inline]
fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Distance between `a` and `b` under `metric`.
pub fn distance(a: &[f64], b: &[f64], metric: Metric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(metric.eval(a, b))
}

/// Index and distance of the codevector closest to `x`. Ties go to the
/// lowest index.
pub fn nearest_codevector(x: &[f64], cb: &Codebook, metric: Metric) -> Result<(usize, f64)> {
    if x.len() != cb.dim() {
        return Err(Error::DimensionMismatch {
            expected: cb.dim(),
            found: x.len(),
        });
    }
    Ok(nearest_unchecked(x, cb, metric))
}

// Selection runs on squared distances for both metrics; sqrt is monotone so
// the winner (and tie structure) is the same.
#[inline]
pub(crate) fn nearest_unchecked(x: &[f64], cb: &Codebook, metric: Metric) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in cb.rows().enumerate() {
        let d = squared_euclidean(x, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    let d = match metric {
        Metric::SquaredEuclidean => best_d,
        Metric::Euclidean => libm::sqrt(best_d),
    };
    (best, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_four_five() {
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0], Metric::Euclidean).unwrap(), 5.0);
        assert_eq!(
            distance(&[0.0, 0.0], &[3.0, 4.0], Metric::SquaredEuclidean).unwrap(),
            25.0
        );
        assert_eq!(distance(&[1.5, -2.0], &[1.5, -2.0], Metric::Euclidean).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_names_both() {
        let err = distance(&[0.0], &[1.0, 2.0], Metric::default()).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 1, found: 2 });
    }

    #[test]
    fn nearest_examples() {
        let cb = Codebook::from_rows(&[[0.0, 0.0], [5.0, 5.0]]).unwrap();
        assert_eq!(
            nearest_codevector(&[1.0, 1.0], &cb, Metric::SquaredEuclidean).unwrap(),
            (0, 2.0)
        );

        let cb = Codebook::from_rows(&[[9.0, 9.0], [1.0, 0.0], [-1.0, 0.0]]).unwrap();
        assert_eq!(
            nearest_codevector(&[0.0, 0.0], &cb, Metric::SquaredEuclidean).unwrap(),
            (1, 1.0)
        );

        let cb = Codebook::from_rows(&[[0.0], [1.0], [2.0], [3.0], [4.0]]).unwrap();
        assert_eq!(nearest_codevector(&[3.0], &cb, Metric::Euclidean).unwrap(), (3, 0.0));
    }

    #[test]
    fn tags_roundtrip() {
        for m in [Metric::SquaredEuclidean, Metric::Euclidean] {
            assert_eq!(Metric::from_tag(m.tag()), Some(m));
        }
        assert_eq!(Metric::from_tag(7), None);
    }
}

//! Encoding vectors to codevector indices and back.

use alloc::vec::Vec;

use crate::accum::ExactSum;
use crate::error::{Error, Result};
use crate::lbg::assign_unchecked;
use crate::metric::Metric;
use crate::types::{Codebook, VectorSet};

/// One codevector index per input vector, plus the codebook shape the
/// indices refer to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedStream {
    codebook_size: usize,
    dimension: usize,
    indices: Vec<u32>,
}

impl EncodedStream {
    /// Builds a stream, checking every index against `codebook_size`.
    pub fn new(codebook_size: usize, dimension: usize, indices: Vec<u32>) -> Result<Self> {
        if let Some(position) = indices.iter().position(|&i| i as usize >= codebook_size) {
            return Err(Error::IndexOutOfRange {
                position,
                index: indices[position],
                size: codebook_size,
            });
        }
        Ok(Self {
            codebook_size,
            dimension,
            indices,
        })
    }

    /// Codebook size N.
    pub fn codebook_size(&self) -> usize {
        self.codebook_size
    }

    /// Vector dimension k.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// The indices.
    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    /// Number of encoded vectors.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// True for an empty stream.
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Replaces every vector by the index of its nearest codevector (ties to the
/// lowest index, as in training).
pub fn encode(data: &VectorSet, cb: &Codebook) -> Result<EncodedStream> {
    if data.dim() != cb.dim() {
        return Err(Error::DimensionMismatch {
            expected: cb.dim(),
            found: data.dim(),
        });
    }
    let (cells, _) = assign_unchecked(data.as_flat(), cb, Metric::SquaredEuclidean);
    Ok(EncodedStream {
        codebook_size: cb.len(),
        dimension: cb.dim(),
        indices: cells.into_inner(),
    })
}

/// Reconstructs vectors from their indices.
pub fn decode(stream: &EncodedStream, cb: &Codebook) -> Result<VectorSet> {
    if stream.codebook_size != cb.len() {
        return Err(Error::CodebookSizeMismatch {
            stream: stream.codebook_size,
            codebook: cb.len(),
        });
    }
    if stream.dimension != cb.dim() {
        return Err(Error::DimensionMismatch {
            expected: cb.dim(),
            found: stream.dimension,
        });
    }
    let mut out = Vec::with_capacity(stream.len() * cb.dim());
    for (position, &i) in stream.indices.iter().enumerate() {
        if i as usize >= cb.len() {
            return Err(Error::IndexOutOfRange {
                position,
                index: i,
                size: cb.len(),
            });
        }
        out.extend_from_slice(cb.row(i as usize));
    }
    VectorSet::from_flat(out, cb.dim())
}

/// Bit budget of an L-dimensional quantizer with N codevectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    /// Codebook size N.
    pub codebook_size: usize,
    /// Vector dimension L.
    pub dimension: usize,
    /// log2 N.
    pub bits_per_vector: f64,
    /// log2 N / L.
    pub bits_per_sample: f64,
    /// Raw size (64-bit samples) over coded size; infinite for N = 1.
    pub compression_ratio: f64,
}

/// Rate of a quantizer with `codebook_size` codevectors of dimension `dimension`.
pub fn rate(codebook_size: usize, dimension: usize) -> Result<RateReport> {
    if !codebook_size.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(codebook_size));
    }
    if dimension == 0 {
        return Err(Error::ZeroDimension);
    }
    let bits_per_vector = codebook_size.trailing_zeros() as f64;
    let raw_bits = 64.0 * dimension as f64;
    Ok(RateReport {
        codebook_size,
        dimension,
        bits_per_vector,
        bits_per_sample: bits_per_vector / dimension as f64,
        compression_ratio: raw_bits / bits_per_vector,
    })
}

/// Distortion between original and reconstructed vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionDistortion {
    /// Sum over rows.
    pub total: f64,
    /// Per-vector mean (0 for empty input).
    pub mean: f64,
}

/// Row-by-row distortion between `data` and `reconstructed`.
pub fn reconstruction_distortion(
    data: &VectorSet,
    reconstructed: &VectorSet,
    metric: Metric,
) -> Result<ReconstructionDistortion> {
    if data.len() != reconstructed.len() {
        return Err(Error::LengthMismatch {
            left: data.len(),
            right: reconstructed.len(),
        });
    }
    if data.dim() != reconstructed.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            found: reconstructed.dim(),
        });
    }
    let sum: ExactSum = data
        .rows()
        .zip(reconstructed.rows())
        .map(|(a, b)| metric.eval(a, b))
        .collect();
    let total = sum.value();
    let mean = if data.is_empty() {
        0.0
    } else {
        total / data.len() as f64
    };
    Ok(ReconstructionDistortion { total, mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn trace() -> (VectorSet, Codebook) {
        (
            VectorSet::from_rows(&[[0.0, 0.0], [0.0, 1.0], [4.0, 0.0], [4.0, 1.0]]).unwrap(),
            Codebook::from_rows(&[[4.0, 0.5], [0.0, 0.5]]).unwrap(),
        )
    }

    #[test]
    fn encode_examples() {
        let (ts, cb) = trace();
        assert_eq!(encode(&ts, &cb).unwrap().indices(), &[1, 1, 0, 0]);
        assert_eq!(encode(cb.vectors(), &cb).unwrap().indices(), &[0, 1]);
        let wrong = VectorSet::from_rows(&[[1.0]]).unwrap();
        assert!(matches!(encode(&wrong, &cb), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn decode_examples() {
        let (_, cb) = trace();
        let es = EncodedStream::new(2, 2, vec![1, 1, 0, 0]).unwrap();
        assert_eq!(
            decode(&es, &cb).unwrap().as_flat(),
            &[0.0, 0.5, 0.0, 0.5, 4.0, 0.5, 4.0, 0.5]
        );
        let empty = EncodedStream::new(2, 2, vec![]).unwrap();
        assert!(decode(&empty, &cb).unwrap().is_empty());
        let rows = decode(&encode(cb.vectors(), &cb).unwrap(), &cb).unwrap();
        assert_eq!(&rows, cb.vectors());
    }

    #[test]
    fn decode_errors() {
        let (_, cb) = trace();
        assert!(EncodedStream::new(2, 2, vec![0, 2]).is_err());
        let es = EncodedStream::new(4, 2, vec![3]).unwrap();
        assert_eq!(
            decode(&es, &cb),
            Err(Error::CodebookSizeMismatch { stream: 4, codebook: 2 })
        );
        let es = EncodedStream::new(2, 3, vec![1]).unwrap();
        assert!(matches!(decode(&es, &cb), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate(2, 1).unwrap().bits_per_sample, 1.0);
        assert_eq!(rate(256, 16).unwrap().bits_per_sample, 0.5);
        let r = rate(128, 10).unwrap();
        assert_eq!(r.bits_per_sample, 0.7);
        assert_eq!(r.bits_per_vector, 7.0);
        assert_eq!(r.bits_per_sample * 10.0, r.bits_per_vector);
        assert_eq!(rate(1, 4).unwrap().compression_ratio, f64::INFINITY);
        assert_eq!(rate(3, 1), Err(Error::NotPowerOfTwo(3)));
        assert_eq!(rate(4, 0), Err(Error::ZeroDimension));
    }

    #[test]
    fn reconstruction_examples() {
        let (ts, cb) = trace();
        let rec = decode(&encode(&ts, &cb).unwrap(), &cb).unwrap();
        let d = reconstruction_distortion(&ts, &rec, Metric::SquaredEuclidean).unwrap();
        assert_eq!((d.total, d.mean), (1.0, 0.25));
        let d = reconstruction_distortion(&ts, &ts, Metric::Euclidean).unwrap();
        assert_eq!((d.total, d.mean), (0.0, 0.0));
        let a = VectorSet::from_rows(&[[0.0, 0.0]]).unwrap();
        let b = VectorSet::from_rows(&[[3.0, 4.0]]).unwrap();
        assert_eq!(reconstruction_distortion(&a, &b, Metric::Euclidean).unwrap().total, 5.0);
        assert!(reconstruction_distortion(&a, &ts, Metric::Euclidean).is_err());
    }
}

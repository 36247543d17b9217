use alloc::vec::Vec;
use core::ops::Deref;

use crate::error::{Error, Result};

/// A dense row-major set of `len()` vectors of dimension `dim()`.
///
/// Every component is finite. The set may be empty; [`TrainingSet`] and
/// [`Codebook`] add the non-empty requirement on top.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSet {
    data: Vec<f64>,
    dim: usize,
}

impl VectorSet {
    /// Wraps a flat row-major buffer.
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::RaggedBuffer { len: data.len(), dim });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self { data, dim })
    }

    /// Builds a set from rows; all rows must share the first row's length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().ok_or(Error::Empty("row list"))?.as_ref().len();
        let mut data = Vec::with_capacity(dim * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, dim)
    }

    /// An empty set of the given dimension.
    pub fn empty(dim: usize) -> Result<Self> {
        Self::from_flat(Vec::new(), dim)
    }

    /// Vector dimension.
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vectors.
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// True when the set holds no vectors.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Iterator over rows in order.
    pub fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    /// Rows `range.start..range.end` as a flat slice.
    pub fn rows_flat(&self, range: core::ops::Range<usize>) -> &[f64] {
        &self.data[range.start * self.dim..range.end * self.dim]
    }

    /// The underlying row-major buffer.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Consumes the set, returning the flat buffer.
    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    /// Multiplies every component by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_flat(self.data.iter().map(|v| v * factor).collect(), self.dim)
    }
}

/// The M x k training matrix the codebook is designed from (M >= 1).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet(VectorSet);

impl TrainingSet {
    /// Wraps a non-empty vector set.
    pub fn new(vectors: VectorSet) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::Empty("training set"));
        }
        Ok(Self(vectors))
    }

    /// Convenience constructor from rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(VectorSet::from_rows(rows)?)
    }

    /// Convenience constructor from a flat buffer.
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        Self::new(VectorSet::from_flat(data, dim)?)
    }

    /// The underlying vectors.
    pub fn vectors(&self) -> &VectorSet {
        &self.0
    }
}

impl Deref for TrainingSet {
    type Target = VectorSet;
    fn deref(&self) -> &VectorSet {
        &self.0
    }
}

/// A set of S >= 1 codevectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook(VectorSet);

impl Codebook {
    /// Wraps a non-empty vector set.
    pub fn new(codevectors: VectorSet) -> Result<Self> {
        if codevectors.is_empty() {
            return Err(Error::Empty("codebook"));
        }
        if u32::try_from(codevectors.len()).is_err() {
            return Err(Error::InvalidConfig("codebook larger than 2^32 entries"));
        }
        Ok(Self(codevectors))
    }

    /// Convenience constructor from rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(VectorSet::from_rows(rows)?)
    }

    /// Convenience constructor from a flat buffer.
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        Self::new(VectorSet::from_flat(data, dim)?)
    }

    /// The underlying codevectors.
    pub fn vectors(&self) -> &VectorSet {
        &self.0
    }
}

impl Deref for Codebook {
    type Target = VectorSet;
    fn deref(&self) -> &VectorSet {
        &self.0
    }
}

/// Nearest-codevector index for each training vector.
///
/// A partial cell table (one worker's chunk) uses the same type.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CellTable(Vec<u32>);

impl CellTable {
    /// Wraps raw indices without validation.
    pub fn from_indices(indices: Vec<u32>) -> Self {
        Self(indices)
    }

    /// Checks every entry against a codebook of `size` codevectors.
    pub fn validate(&self, size: usize) -> Result<()> {
        match self.0.iter().position(|&c| c as usize >= size) {
            Some(position) => Err(Error::IndexOutOfRange {
                position,
                index: self.0[position],
                size,
            }),
            None => Ok(()),
        }
    }

    /// Number of entries.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True when empty.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The indices.
    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Consumes the table.
    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    /// Population of each of `size` cells.
    pub fn counts(&self, size: usize) -> Vec<usize> {
        let mut counts = alloc::vec![0usize; size];
        for &c in &self.0 {
            counts[c as usize] += 1;
        }
        counts
    }
}

impl Deref for CellTable {
    type Target = [u32];
    fn deref(&self) -> &[u32] {
        &self.0
    }
}

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;
use vq_core::{TrainingSet, VectorSet};

/// Training-data ingestion failures. Rows are 1-based line numbers.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("malformed csv: {0}")]
    Csv(#[from] ::csv::Error),
    #[error("training file contains no rows")]
    Empty,
    #[error("row {row} has {found} columns, expected {expected}")]
    Ragged { row: u64, expected: usize, found: usize },
    #[error("row {row}, column {col}: {field:?} is not a number")]
    NotNumeric { row: u64, col: usize, field: String },
    #[error("row {row}, column {col}: non-finite value {field:?}")]
    NonFinite { row: u64, col: usize, field: String },
}

/// Reads an M x k matrix of decimal numbers, one vector per line, no header.
/// Lines starting with `#` are skipped.
pub fn load_training_csv(path: impl AsRef<Path>) -> Result<TrainingSet, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_training_csv(file)
}

/// [`load_training_csv`] over any reader.
pub fn parse_training_csv(reader: impl Read) -> Result<TrainingSet, IngestError> {
    let mut rdr = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(::csv::Trim::All)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut dim = None;
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        let expected = *dim.get_or_insert(record.len());
        if record.len() != expected {
            return Err(IngestError::Ragged {
                row,
                expected,
                found: record.len(),
            });
        }
        for (i, field) in record.iter().enumerate() {
            let col = i + 1;
            let v: f64 = field.parse().map_err(|_| IngestError::NotNumeric {
                row,
                col,
                field: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(IngestError::NonFinite {
                    row,
                    col,
                    field: field.to_string(),
                });
            }
            data.push(v);
        }
    }
    let dim = dim.ok_or(IngestError::Empty)?;
    TrainingSet::from_flat(data, dim).map_err(|_| IngestError::Empty)
}

/// Writes one vector per line using the shortest round-trip decimal form.
pub fn write_vectors_csv(mut out: impl Write, vectors: &VectorSet) -> io::Result<()> {
    let mut line = String::new();
    for row in vectors.rows() {
        line.clear();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_trace_fixture() {
        let ts = parse_training_csv("0,0\n0,1\n4,0\n4,1\n".as_bytes()).unwrap();
        assert_eq!((ts.len(), ts.dim()), (4, 2));
        assert_eq!(ts.as_flat(), &[0.0, 0.0, 0.0, 1.0, 4.0, 0.0, 4.0, 1.0]);
    }

    #[test]
    fn single_row_and_comments() {
        let ts = parse_training_csv("# header comment\n1.5, 2.5\n".as_bytes()).unwrap();
        assert_eq!((ts.len(), ts.dim()), (1, 2));
    }

    #[test]
    fn ragged_row_is_named() {
        let err = parse_training_csv("1,2\n1,2,3\n".as_bytes()).unwrap_err();
        assert!(
            matches!(
                err,
                IngestError::Ragged {
                    row: 2,
                    expected: 2,
                    found: 3
                }
            ),
            "{err}"
        );
        assert_eq!(err.to_string(), "row 2 has 3 columns, expected 2");
    }

    #[test]
    fn bad_fields() {
        let err = parse_training_csv("1,2\n3,x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, IngestError::NotNumeric { row: 2, col: 2, .. }), "{err}");
        let err = parse_training_csv("NaN,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, IngestError::NonFinite { row: 1, col: 1, .. }), "{err}");
        let err = parse_training_csv("1,inf\n".as_bytes()).unwrap_err();
        assert!(matches!(err, IngestError::NonFinite { .. }), "{err}");
        assert!(matches!(parse_training_csv("".as_bytes()), Err(IngestError::Empty)));
    }

    #[test]
    fn written_csv_reads_back_exactly() {
        let vs = VectorSet::from_rows(&[[0.1, -2.5e-300], [1.0 / 3.0, 4.0]]).unwrap();
        let mut buf = Vec::new();
        write_vectors_csv(&mut buf, &vs).unwrap();
        let back = parse_training_csv(buf.as_slice()).unwrap();
        assert_eq!(back.vectors(), &vs);
    }
}

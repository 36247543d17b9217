//! Binary 8-bit grayscale PGM (`P5`, maxval 255) and block vectorization.
//!
//! An image is cut into non-overlapping `b x b` blocks, scanned row-major
//! over the block grid; each block is flattened row-major into a vector of
//! dimension `b^2`. Edges are padded by replicating the last column/row.

use std::fs;
use std::path::Path;

use thiserror::Error;
use vq_core::VectorSet;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("unsupported image format: {0}")]
    Unsupported(String),
    #[error("malformed PGM header: {0}")]
    Malformed(&'static str),
    #[error("truncated PGM: need {expected} pixel bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("block side must be at least 1")]
    ZeroBlock,
    #[error("{found} vectors of dimension {dim} do not fit a {width}x{height} image with block {block}")]
    GridMismatch {
        found: usize,
        dim: usize,
        width: usize,
        height: usize,
        block: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major pixels.
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Self {
        assert_eq!(pixels.len(), width * height, "pixel buffer does not match dimensions");
        Self { width, height, pixels }
    }

    /// `P5` bytes with maxval 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage, PgmError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| PgmError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_pgm(&bytes)
}

pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        let magic = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(PgmError::Unsupported(format!(
            "expected binary PGM magic \"P5\", found {magic:?}"
        )));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        *field = header_number(bytes, &mut pos)?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(PgmError::Unsupported(format!("maxval {maxval}, only 255 is supported")));
    }
    if width == 0 || height == 0 {
        return Err(PgmError::Malformed("zero image dimension"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(c) if c.is_ascii_whitespace() => pos += 1,
        _ => return Err(PgmError::Malformed("missing whitespace after maxval")),
    }
    let expected = width
        .checked_mul(height)
        .ok_or(PgmError::Malformed("image too large"))?;
    let raster = &bytes[pos..];
    if raster.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            found: raster.len(),
        });
    }
    Ok(GrayImage::new(width, height, raster[..expected].to_vec()))
}

fn header_number(bytes: &[u8], pos: &mut usize) -> Result<usize, PgmError> {
    loop {
        match bytes.get(*pos) {
            Some(c) if c.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&c| c != b'\n') {
                    *pos += 1;
                }
            }
            Some(c) if c.is_ascii_digit() => break,
            Some(_) => return Err(PgmError::Malformed("unexpected byte in header")),
            None => return Err(PgmError::Malformed("header ends early")),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or(PgmError::Malformed("number out of range"))
}

/// Geometry needed to turn block vectors back into an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockGrid {
    pub width: usize,
    pub height: usize,
    pub block: usize,
}

impl BlockGrid {
    pub fn new(width: usize, height: usize, block: usize) -> Result<Self, PgmError> {
        if block == 0 {
            return Err(PgmError::ZeroBlock);
        }
        Ok(Self { width, height, block })
    }

    pub fn blocks_x(&self) -> usize {
        self.width.div_ceil(self.block)
    }

    pub fn blocks_y(&self) -> usize {
        self.height.div_ceil(self.block)
    }

    pub fn vector_count(&self) -> usize {
        self.blocks_x() * self.blocks_y()
    }

    /// Vector dimension `b^2`.
    pub fn dim(&self) -> usize {
        self.block * self.block
    }
}

pub fn image_to_blocks(img: &GrayImage, block: usize) -> Result<(VectorSet, BlockGrid), PgmError> {
    let grid = BlockGrid::new(img.width, img.height, block)?;
    let mut data = Vec::with_capacity(grid.vector_count() * grid.dim());
    for by in 0..grid.blocks_y() {
        for bx in 0..grid.blocks_x() {
            for dy in 0..block {
                let y = (by * block + dy).min(img.height - 1);
                for dx in 0..block {
                    let x = (bx * block + dx).min(img.width - 1);
                    data.push(f64::from(img.get(x, y)));
                }
            }
        }
    }
    let vectors = VectorSet::from_flat(data, grid.dim()).expect("pixel values are finite");
    Ok((vectors, grid))
}

/// Inverse of [`image_to_blocks`]: clamps to `[0, 255]`, rounds half up and
/// crops the padding.
pub fn blocks_to_image(vectors: &VectorSet, grid: &BlockGrid) -> Result<GrayImage, PgmError> {
    if vectors.dim() != grid.dim() || vectors.len() != grid.vector_count() {
        return Err(PgmError::GridMismatch {
            found: vectors.len(),
            dim: vectors.dim(),
            width: grid.width,
            height: grid.height,
            block: grid.block,
        });
    }
    let b = grid.block;
    let mut pixels = vec![0u8; grid.width * grid.height];
    for (i, v) in vectors.rows().enumerate() {
        let (bx, by) = (i % grid.blocks_x(), i / grid.blocks_x());
        for dy in 0..b {
            let y = by * b + dy;
            if y >= grid.height {
                break;
            }
            for dx in 0..b {
                let x = bx * b + dx;
                if x >= grid.width {
                    break;
                }
                pixels[y * grid.width + x] = quantize_pixel(v[dy * b + dx]);
            }
        }
    }
    Ok(GrayImage::new(grid.width, grid.height, pixels))
}

fn quantize_pixel(v: f64) -> u8 {
    (v.clamp(0.0, 255.0) + 0.5).floor() as u8
}

//! Files: training CSV, binary codebook and encoded-stream formats, PGM images.

mod csv;
mod format;
mod pgm;

pub use self::csv::{load_training_csv, parse_training_csv, write_vectors_csv, IngestError};
pub use self::format::{
    decode_codebook, decode_encoded, encode_codebook, encode_encoded, load_codebook, load_encoded, save_codebook,
    save_encoded, FormatError, CODEBOOK_MAGIC, ENCODED_MAGIC, FORMAT_VERSION,
};
pub use self::pgm::{blocks_to_image, image_to_blocks, load_pgm, parse_pgm, BlockGrid, GrayImage, PgmError};

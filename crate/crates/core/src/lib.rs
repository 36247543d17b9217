//! Vector quantization with the Linde-Buzo-Gray (LBG) codebook design.
//!
//! This crate is `no_std` (it needs `alloc`). It holds the domain types,
//! the sequential reference trainer, the pieces the data-parallel engine is
//! assembled from (chunk plans, per-worker kernels, master integration) and
//! the encode/decode codec. Threads, files and the CLI live in the `vq`
//! crate.
//!
//! Training is written against the [`Engine`] trait so that the sequential
//! trainer and any parallel engine run the same control loop; an engine only
//! decides how cell allocation and codebook updation are executed.

#![no_std]
#![deny(missing_docs)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod accum;
pub mod codec;
mod error;
mod lbg;
mod metric;
mod plan;
mod types;

pub use accum::ExactSum;
pub use error::{Error, Result};
pub use lbg::{
    assign_cells, centroid, convergence_check, lbg_train, split_codebook, train_with, update_codebook, update_rows,
    Allocation, DistortionStats, Engine, IterationRecord, LbgConfig, LevelWarning, PartialUpdate, SequentialEngine,
    Updated,
};
pub use metric::{distance, nearest_codevector, Metric};
pub use plan::{integrate, ChunkPlan, UpdateAssignment};
pub use types::{CellTable, Codebook, TrainingSet, VectorSet};

//! Parallel LBG training, file formats, the image pipeline and the benchmark
//! harness on top of [`vq_core`].

pub mod bench;
pub mod cli;
pub mod io;
pub mod parallel;

pub use vq_core;

//! The LBG trainer: splitting, cell allocation, updation and the level loop.

use alloc::vec;
use alloc::vec::Vec;

use crate::accum::ExactSum;
use crate::error::{Error, Result};
use crate::metric::{nearest_unchecked, Metric};
use crate::plan::UpdateAssignment;
use crate::types::{CellTable, Codebook, TrainingSet, VectorSet};

/// Training parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LbgConfig {
    /// Final codebook size N; a power of two.
    pub target_size: usize,
    /// Relative-change threshold ε >= 0.
    pub epsilon: f64,
    /// Split offset δ > 0, added to and subtracted from every component.
    pub delta: f64,
    /// Worker count P >= 1. Ignored by the sequential trainer.
    pub workers: usize,
    /// Allocation passes allowed per codebook size before the level is closed.
    pub max_iterations_per_level: usize,
    /// Distortion measure.
    pub metric: Metric,
}

impl LbgConfig {
    /// Default ε.
    pub const DEFAULT_EPSILON: f64 = 0.001;
    /// Default δ.
    pub const DEFAULT_DELTA: f64 = 0.01;
    /// Default iteration guard.
    pub const DEFAULT_MAX_ITERATIONS: usize = 100;

    /// Defaults for everything except the target size.
    pub fn new(target_size: usize) -> Self {
        Self {
            target_size,
            epsilon: Self::DEFAULT_EPSILON,
            delta: Self::DEFAULT_DELTA,
            workers: 1,
            max_iterations_per_level: Self::DEFAULT_MAX_ITERATIONS,
            metric: Metric::default(),
        }
    }

    /// Checks the invariants on every field.
    pub fn validate(&self) -> Result<()> {
        if !self.target_size.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(self.target_size));
        }
        if u32::try_from(self.target_size).is_err() {
            return Err(Error::InvalidConfig("codebook size must fit in 32 bits"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig("epsilon must be finite and >= 0"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidConfig("delta must be finite and > 0"));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("worker count must be at least 1"));
        }
        if self.max_iterations_per_level == 0 {
            return Err(Error::InvalidConfig("max iterations per level must be at least 1"));
        }
        Ok(())
    }
}

/// Arithmetic mean of a non-empty vector set.
pub fn centroid(vectors: &VectorSet) -> Result<Vec<f64>> {
    if vectors.is_empty() {
        return Err(Error::Empty("centroid input"));
    }
    let mut sum = vec![0.0; vectors.dim()];
    for row in vectors.rows() {
        accumulate(&mut sum, row);
    }
    let n = vectors.len() as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok(sum)
}

#[inline]
fn accumulate(sum: &mut [f64], row: &[f64]) {
    for (s, x) in sum.iter_mut().zip(row) {
        *s += x;
    }
}

/// Doubles the codebook: codevector `i` becomes rows `2i` (every component
/// `+δ`) and `2i+1` (every component `-δ`).
pub fn split_codebook(cb: &Codebook, delta: f64) -> Result<Codebook> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidConfig("delta must be finite and > 0"));
    }
    let mut out = Vec::with_capacity(cb.as_flat().len() * 2);
    for row in cb.rows() {
        out.extend(row.iter().map(|v| v + delta));
        out.extend(row.iter().map(|v| v - delta));
    }
    Codebook::from_flat(out, cb.dim())
}

/// Allocates each vector of `chunk` (flat, row-major, `cb.dim()` columns) to
/// its nearest codevector and sums the minimum distances in chunk order.
pub fn assign_cells(chunk: &[f64], cb: &Codebook, metric: Metric) -> Result<(CellTable, ExactSum)> {
    let dim = cb.dim();
    if !chunk.len().is_multiple_of(dim) {
        return Err(Error::RaggedBuffer { len: chunk.len(), dim });
    }
    Ok(assign_unchecked(chunk, cb, metric))
}

pub(crate) fn assign_unchecked(chunk: &[f64], cb: &Codebook, metric: Metric) -> (CellTable, ExactSum) {
    let mut cells = Vec::with_capacity(chunk.len() / cb.dim());
    let mut distortion = ExactSum::new();
    for x in chunk.chunks_exact(cb.dim()) {
        let (idx, d) = nearest_unchecked(x, cb, metric);
        cells.push(idx as u32);
        distortion.add(d);
    }
    (CellTable::from_indices(cells), distortion)
}

/// Rows recomputed by one worker during parallel updation.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialUpdate {
    /// Worker that produced these rows.
    pub worker: usize,
    /// Codevector indices, ascending.
    pub indices: Vec<usize>,
    /// New rows, flat, in the order of `indices`.
    pub rows: Vec<f64>,
    /// How many of `indices` had an empty cell (row retained).
    pub empty_cells: usize,
}

/// Recomputes the codevectors owned by `worker` under `assignment`.
///
/// Each owned cell is accumulated in ascending training-vector order, which
/// is also the order [`update_codebook`] uses, so any worker count yields the
/// same bits.
pub fn update_rows(
    ts: &TrainingSet,
    cells: &CellTable,
    cb: &Codebook,
    assignment: UpdateAssignment,
    worker: usize,
) -> Result<PartialUpdate> {
    check_update_inputs(ts, cells, cb)?;
    Ok(update_rows_unchecked(ts, cells, cb, assignment, worker))
}

fn check_update_inputs(ts: &TrainingSet, cells: &CellTable, cb: &Codebook) -> Result<()> {
    if ts.dim() != cb.dim() {
        return Err(Error::DimensionMismatch {
            expected: cb.dim(),
            found: ts.dim(),
        });
    }
    if cells.len() != ts.len() {
        return Err(Error::LengthMismatch {
            left: cells.len(),
            right: ts.len(),
        });
    }
    cells.validate(cb.len())
}

pub(crate) fn update_rows_unchecked(
    ts: &TrainingSet,
    cells: &CellTable,
    cb: &Codebook,
    assignment: UpdateAssignment,
    worker: usize,
) -> PartialUpdate {
    let p = assignment.workers();
    let dim = cb.dim();
    let indices: Vec<usize> = assignment.owned(worker, cb.len()).collect();
    let mut sums = vec![0.0; indices.len() * dim];
    let mut counts = vec![0usize; indices.len()];
    for (j, &c) in cells.iter().enumerate() {
        let c = c as usize;
        if assignment.owner(c) == worker {
            let slot = c / p;
            accumulate(&mut sums[slot * dim..(slot + 1) * dim], ts.row(j));
            counts[slot] += 1;
        }
    }
    let mut empty_cells = 0;
    for (slot, &c) in indices.iter().enumerate() {
        let row = &mut sums[slot * dim..(slot + 1) * dim];
        if counts[slot] == 0 {
            row.copy_from_slice(cb.row(c));
            empty_cells += 1;
        } else {
            let n = counts[slot] as f64;
            row.iter_mut().for_each(|s| *s /= n);
        }
    }
    PartialUpdate {
        worker,
        indices,
        rows: sums,
        empty_cells,
    }
}

/// A codebook produced by the updation step.
#[derive(Debug, Clone, PartialEq)]
pub struct Updated {
    /// The new codebook.
    pub codebook: Codebook,
    /// Codevectors whose cell was empty and were kept as they were.
    pub empty_cells: usize,
}

impl Updated {
    /// Writes partial updates into a copy of `cb`. Each row must be covered
    /// exactly once.
    pub fn assemble(cb: &Codebook, parts: &[PartialUpdate]) -> Result<Self> {
        let dim = cb.dim();
        let mut flat = cb.as_flat().to_vec();
        let mut written = vec![false; cb.len()];
        let mut empty_cells = 0;
        for part in parts {
            for (slot, &c) in part.indices.iter().enumerate() {
                if core::mem::replace(&mut written[c], true) {
                    return Err(Error::PlanViolation("codevector updated by two workers"));
                }
                flat[c * dim..(c + 1) * dim].copy_from_slice(&part.rows[slot * dim..(slot + 1) * dim]);
            }
            empty_cells += part.empty_cells;
        }
        if written.iter().any(|w| !w) {
            return Err(Error::PlanViolation("codevector left without an owner"));
        }
        Ok(Self {
            codebook: Codebook::from_flat(flat, dim)?,
            empty_cells,
        })
    }
}

/// Replaces each codevector by the centroid of its cell; codevectors with an
/// empty cell are retained.
pub fn update_codebook(ts: &TrainingSet, cells: &CellTable, cb: &Codebook) -> Result<Updated> {
    check_update_inputs(ts, cells, cb)?;
    let single = UpdateAssignment::new(1)?;
    Updated::assemble(cb, &[update_rows_unchecked(ts, cells, cb, single, 0)])
}

/// Relative-change stopping test `(prev - cur) / prev <= ε`.
///
/// `prev = +inf` (the first pass of a level) never converges; `prev = 0`
/// always does.
pub fn convergence_check(td_prev: f64, td_cur: f64, epsilon: f64) -> Result<bool> {
    if td_prev < 0.0 || td_cur < 0.0 || epsilon < 0.0 || td_prev.is_nan() || td_cur.is_nan() {
        return Err(Error::NegativeDistortion);
    }
    if td_prev.is_infinite() {
        return Ok(false);
    }
    if td_prev == 0.0 {
        return Ok(true);
    }
    Ok((td_prev - td_cur) / td_prev <= epsilon)
}

/// Result of one cell-allocation pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Integrated cell table.
    pub cells: CellTable,
    /// Distortion D_ρ of each worker's chunk, in worker order.
    pub partials: Vec<ExactSum>,
}

impl Allocation {
    /// Total distortion: the partials summed in worker order.
    pub fn total(&self) -> ExactSum {
        self.partials.iter().collect()
    }
}

/// How the allocation and updation phases are executed.
///
/// [`train_with`] drives an engine through the LBG loop. An engine must
/// return the same cell table and (bit-identical) codebook as
/// [`SequentialEngine`]; only the partition into per-worker partials may
/// differ.
pub trait Engine {
    /// The training set this engine operates on.
    fn training_set(&self) -> &TrainingSet;
    /// Nearest-codevector allocation of the whole training set.
    fn allocate(&mut self, cb: &Codebook, metric: Metric) -> Allocation;
    /// Centroid update of every codevector.
    fn update(&mut self, cells: &CellTable, cb: &Codebook) -> Updated;
}

/// Single-threaded engine; the reference every other engine is checked against.
#[derive(Debug, Clone, Copy)]
pub struct SequentialEngine<'a> {
    ts: &'a TrainingSet,
}

impl<'a> SequentialEngine<'a> {
    /// Engine over `ts`.
    pub fn new(ts: &'a TrainingSet) -> Self {
        Self { ts }
    }
}

impl Engine for SequentialEngine<'_> {
    fn training_set(&self) -> &TrainingSet {
        self.ts
    }

    fn allocate(&mut self, cb: &Codebook, metric: Metric) -> Allocation {
        let (cells, d) = assign_unchecked(self.ts.as_flat(), cb, metric);
        Allocation {
            cells,
            partials: vec![d],
        }
    }

    fn update(&mut self, cells: &CellTable, cb: &Codebook) -> Updated {
        let assignment = UpdateAssignment::new(1).expect("one worker");
        Updated::assemble(cb, &[update_rows_unchecked(self.ts, cells, cb, assignment, 0)])
            .expect("a single worker owns every row")
    }
}

/// One allocation pass of the training loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// Codebook size during this pass.
    pub level_size: usize,
    /// 1-based pass number within the level.
    pub iteration: usize,
    /// Total distortion TD of the pass.
    pub td: f64,
    /// Codevectors with no allocated vectors in this pass.
    pub empty_cells: usize,
}

/// A level closed by the iteration guard rather than by convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelWarning {
    /// Codebook size of the level.
    pub level_size: usize,
    /// Passes performed.
    pub iterations: usize,
}

/// Distortion bookkeeping for a training run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DistortionStats {
    /// Per-worker distortions D_ρ of the final pass.
    pub per_worker: Vec<ExactSum>,
    /// Final total distortion TD (the exact sum of `per_worker`, rounded once).
    pub total: f64,
    /// Every allocation pass, in order.
    pub history: Vec<IterationRecord>,
    /// Levels that hit the iteration guard.
    pub warnings: Vec<LevelWarning>,
}

impl DistortionStats {
    /// Final TD divided by the number of training vectors.
    pub fn mean(&self, training_len: usize) -> f64 {
        self.total / training_len as f64
    }

    /// Per-worker distortions rounded to doubles.
    pub fn per_worker_values(&self) -> Vec<f64> {
        self.per_worker.iter().map(ExactSum::value).collect()
    }

    /// `(level_size, passes)` for each level in order.
    pub fn iterations_per_level(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for r in &self.history {
            match out.last_mut() {
                Some((size, n)) if *size == r.level_size => *n = (*n).max(r.iteration),
                _ => out.push((r.level_size, r.iteration)),
            }
        }
        out
    }
}

/// Sequential LBG training.
pub fn lbg_train(ts: &TrainingSet, cfg: &LbgConfig) -> Result<(Codebook, DistortionStats)> {
    train_with(&mut SequentialEngine::new(ts), cfg, &mut |_| {})
}

/// Runs the LBG loop on `engine`, calling `observer` after each allocation
/// pass.
///
/// The initial codebook is the centroid of the training set. Each level
/// splits the codebook, then alternates allocation and updation until the
/// relative change in TD drops to ε (the sentinel `+inf` is the previous TD
/// on a level's first pass) or the iteration guard trips. The codebook
/// returned for a level is the one its last allocation was measured on.
pub fn train_with<E: Engine + ?Sized>(
    engine: &mut E,
    cfg: &LbgConfig,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<(Codebook, DistortionStats)> {
    cfg.validate()?;
    let ts = engine.training_set();
    let mut cb = Codebook::from_flat(centroid(ts.vectors())?, ts.dim())?;
    let mut stats = DistortionStats::default();

    let mut record = |stats: &mut DistortionStats, alloc: &Allocation, level_size, iteration| {
        let total = alloc.total().value();
        let empty_cells = alloc.cells.counts(level_size).iter().filter(|&&n| n == 0).count();
        let rec = IterationRecord {
            level_size,
            iteration,
            td: total,
            empty_cells,
        };
        observer(&rec);
        stats.history.push(rec);
        stats.per_worker = alloc.partials.clone();
        stats.total = total;
        total
    };

    let alloc = engine.allocate(&cb, cfg.metric);
    record(&mut stats, &alloc, 1, 1);

    while cb.len() < cfg.target_size {
        cb = split_codebook(&cb, cfg.delta)?;
        let size = cb.len();
        let mut td_prev = f64::INFINITY;
        let mut iteration = 0;
        loop {
            let alloc = engine.allocate(&cb, cfg.metric);
            iteration += 1;
            let td = record(&mut stats, &alloc, size, iteration);
            if convergence_check(td_prev, td, cfg.epsilon)? {
                break;
            }
            if iteration == cfg.max_iterations_per_level {
                stats.warnings.push(LevelWarning {
                    level_size: size,
                    iterations: iteration,
                });
                break;
            }
            cb = engine.update(&alloc.cells, &cb).codebook;
            td_prev = td;
        }
    }
    Ok((cb, stats))
}

//! Shared-memory data-parallel execution of the LBG phases.
//!
//! The master (the calling thread) doubles as worker 0. Worker `ρ` allocates
//! the vectors in `plan.ranges()[ρ]` against a read-only codebook and writes
//! only its own partial result slot; during updation worker `φ` recomputes
//! the codevectors with `c mod P == φ`. Each phase is bracketed by two
//! barrier waits, so the master integrates only after every worker has
//! finished and no worker starts a phase before its inputs are complete.

use std::sync::{Arc, Barrier, Mutex, RwLock};
use std::thread;
use std::time::Duration;

use vq_core::{
    assign_cells, codec, train_with, update_rows, Allocation, CellTable, ChunkPlan, Codebook, DistortionStats, Engine,
    ExactSum, IterationRecord, LbgConfig, Metric, PartialUpdate, Result, TrainingSet, UpdateAssignment, Updated,
    VectorSet,
};

/// Runs `assign_cells` on each chunk of `plan` on its own thread.
///
/// Returns the partial cell tables and per-worker distortions in worker
/// order. Workers with an empty range produce an empty table and a zero
/// distortion.
pub fn parallel_assign(
    data: &VectorSet,
    cb: &Codebook,
    plan: &ChunkPlan,
    metric: Metric,
) -> Result<(Vec<CellTable>, Vec<ExactSum>)> {
    if data.dim() != cb.dim() {
        return Err(vq_core::Error::DimensionMismatch {
            expected: cb.dim(),
            found: data.dim(),
        });
    }
    if plan.total() != data.len() {
        return Err(vq_core::Error::PlanViolation("plan does not cover the data"));
    }
    let chunk = |w: usize| assign_cells(data.rows_flat(plan.ranges()[w].clone()), cb, metric);
    let results: Vec<Result<(CellTable, ExactSum)>> = thread::scope(|s| {
        let handles: Vec<_> = (1..plan.workers()).map(|w| s.spawn(move || chunk(w))).collect();
        let mut out = vec![chunk(0)];
        out.extend(
            handles
                .into_iter()
                .map(|h| h.join().expect("allocation worker panicked")),
        );
        out
    });
    let mut tables = Vec::with_capacity(results.len());
    let mut sums = Vec::with_capacity(results.len());
    for r in results {
        let (t, d) = r?;
        tables.push(t);
        sums.push(d);
    }
    Ok((tables, sums))
}

/// Per-worker results of a parallel updation, in worker order.
pub fn parallel_update_parts(
    ts: &TrainingSet,
    cells: &CellTable,
    cb: &Codebook,
    workers: usize,
) -> Result<Vec<PartialUpdate>> {
    let assignment = UpdateAssignment::new(workers)?;
    let results: Vec<Result<PartialUpdate>> = thread::scope(|s| {
        let handles: Vec<_> = (1..workers)
            .map(|w| s.spawn(move || update_rows(ts, cells, cb, assignment, w)))
            .collect();
        let mut out = vec![update_rows(ts, cells, cb, assignment, 0)];
        out.extend(handles.into_iter().map(|h| h.join().expect("update worker panicked")));
        out
    });
    results.into_iter().collect()
}

/// Centroid update with round-robin codevector ownership over `workers`
/// threads. Bit-identical to [`vq_core::update_codebook`].
pub fn parallel_update(ts: &TrainingSet, cells: &CellTable, cb: &Codebook, workers: usize) -> Result<Updated> {
    Updated::assemble(cb, &parallel_update_parts(ts, cells, cb, workers)?)
}

/// Encodes `data`, splitting the rows over `workers` threads with the same
/// chunking as training. Output is identical to [`codec::encode`].
pub fn parallel_encode(data: &VectorSet, cb: &Codebook, workers: usize) -> Result<codec::EncodedStream> {
    if workers <= 1 || data.len() < 2 {
        return codec::encode(data, cb);
    }
    let plan = ChunkPlan::new(data.len(), workers)?;
    let (tables, _) = parallel_assign(data, cb, &plan, Metric::SquaredEuclidean)?;
    let indices = tables.into_iter().flat_map(CellTable::into_inner).collect();
    codec::EncodedStream::new(cb.len(), cb.dim(), indices)
}

/// Which phase a worker is executing; passed to [`PoolOptions::delay`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Cell allocation.
    Allocate,
    /// Codebook updation.
    Update,
}

/// Tuning knobs for [`with_pool`].
#[derive(Debug, Clone, Copy, Default)]
pub struct PoolOptions {
    /// Optional per-worker sleep injected before each phase's work. Used by
    /// tests to perturb the schedule; results must not change.
    pub delay: Option<fn(usize, Phase) -> Duration>,
}

#[derive(Clone)]
enum Job {
    Idle,
    Stop,
    Allocate(Arc<Codebook>, Metric),
    Update(Arc<CellTable>, Arc<Codebook>),
}

struct Shared<'a> {
    ts: &'a TrainingSet,
    plan: ChunkPlan,
    assignment: UpdateAssignment,
    barrier: Barrier,
    job: RwLock<Job>,
    allocations: Vec<Mutex<Option<(CellTable, ExactSum)>>>,
    updates: Vec<Mutex<Option<PartialUpdate>>>,
    options: PoolOptions,
}

impl Shared<'_> {
    fn execute(&self, worker: usize, job: &Job) {
        match job {
            Job::Allocate(cb, metric) => {
                self.pause(worker, Phase::Allocate);
                let range = self.plan.ranges()[worker].clone();
                let out = assign_cells(self.ts.rows_flat(range), cb, *metric)
                    .expect("chunk is whole rows of the codebook dimension");
                *self.allocations[worker].lock().unwrap() = Some(out);
            }
            Job::Update(cells, cb) => {
                self.pause(worker, Phase::Update);
                let out = update_rows(self.ts, cells, cb, self.assignment, worker)
                    .expect("cell table was produced against this codebook");
                *self.updates[worker].lock().unwrap() = Some(out);
            }
            Job::Idle | Job::Stop => {}
        }
    }

    fn pause(&self, worker: usize, phase: Phase) {
        if let Some(delay) = self.options.delay {
            thread::sleep(delay(worker, phase));
        }
    }

    fn worker_loop(&self, worker: usize) {
        loop {
            self.barrier.wait();
            let job = self.job.read().unwrap().clone();
            if matches!(job, Job::Stop) {
                return;
            }
            self.execute(worker, &job);
            self.barrier.wait();
        }
    }

    // Master side of one phase: publish, run share 0, wait for everyone.
    fn run(&self, job: Job) {
        *self.job.write().unwrap() = job.clone();
        self.barrier.wait();
        self.execute(0, &job);
        self.barrier.wait();
        *self.job.write().unwrap() = Job::Idle;
    }
}

/// An [`Engine`] backed by a pool of persistent worker threads. Obtained
/// through [`with_pool`].
pub struct PoolEngine<'p, 'a> {
    shared: &'p Shared<'a>,
}

impl PoolEngine<'_, '_> {
    /// Number of workers, including the master.
    pub fn workers(&self) -> usize {
        self.shared.plan.workers()
    }

    /// The chunk plan used for allocation.
    pub fn plan(&self) -> &ChunkPlan {
        &self.shared.plan
    }
}

impl Engine for PoolEngine<'_, '_> {
    fn training_set(&self) -> &TrainingSet {
        self.shared.ts
    }

    fn allocate(&mut self, cb: &Codebook, metric: Metric) -> Allocation {
        self.shared.run(Job::Allocate(Arc::new(cb.clone()), metric));
        let (tables, partials): (Vec<_>, Vec<_>) = self
            .shared
            .allocations
            .iter()
            .map(|slot| slot.lock().unwrap().take().expect("every worker reports"))
            .unzip();
        let (cells, _) =
            vq_core::integrate(&tables, &partials, self.shared.ts.len()).expect("chunk plan tiles the training set");
        Allocation { cells, partials }
    }

    fn update(&mut self, cells: &CellTable, cb: &Codebook) -> Updated {
        self.shared
            .run(Job::Update(Arc::new(cells.clone()), Arc::new(cb.clone())));
        let parts: Vec<PartialUpdate> = self
            .shared
            .updates
            .iter()
            .map(|slot| slot.lock().unwrap().take().expect("every worker reports"))
            .collect();
        Updated::assemble(cb, &parts).expect("round-robin assignment covers every row once")
    }
}

struct StopOnDrop<'p, 'a>(&'p Shared<'a>);

impl Drop for StopOnDrop<'_, '_> {
    fn drop(&mut self) {
        *self.0.job.write().unwrap_or_else(|e| e.into_inner()) = Job::Stop;
        self.0.barrier.wait();
    }
}

/// Starts `workers - 1` threads over `ts`, hands `f` an engine driving them
/// and shuts the pool down when `f` returns.
pub fn with_pool<R>(
    ts: &TrainingSet,
    workers: usize,
    options: PoolOptions,
    f: impl FnOnce(&mut PoolEngine<'_, '_>) -> R,
) -> Result<R> {
    let plan = ChunkPlan::new(ts.len(), workers)?;
    let shared = Shared {
        ts,
        plan,
        assignment: UpdateAssignment::new(workers)?,
        barrier: Barrier::new(workers),
        job: RwLock::new(Job::Idle),
        allocations: (0..workers).map(|_| Mutex::new(None)).collect(),
        updates: (0..workers).map(|_| Mutex::new(None)).collect(),
        options,
    };
    Ok(thread::scope(|s| {
        for w in 1..workers {
            let shared = &shared;
            s.spawn(move || shared.worker_loop(w));
        }
        let _stop = StopOnDrop(&shared);
        f(&mut PoolEngine { shared: &shared })
    }))
}

/// LBG training with allocation and updation spread over `cfg.workers`
/// threads. Bit-identical to [`vq_core::lbg_train`] for every worker count.
pub fn parallel_lbg_train(ts: &TrainingSet, cfg: &LbgConfig) -> Result<(Codebook, DistortionStats)> {
    parallel_lbg_train_observed(ts, cfg, PoolOptions::default(), &mut |_| {})
}

/// [`parallel_lbg_train`] with pool options and a per-iteration observer.
pub fn parallel_lbg_train_observed(
    ts: &TrainingSet,
    cfg: &LbgConfig,
    options: PoolOptions,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<(Codebook, DistortionStats)> {
    cfg.validate()?;
    with_pool(ts, cfg.workers, options, |engine| train_with(engine, cfg, observer))?
}

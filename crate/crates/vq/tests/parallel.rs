use std::time::{Duration, Instant};

use vq::bench::synthetic_training_set;
use vq::io::encode_codebook;
use vq::parallel::{
    parallel_assign, parallel_encode, parallel_lbg_train, parallel_lbg_train_observed, parallel_update,
    parallel_update_parts, with_pool, Phase, PoolOptions,
};
use vq_core::codec::encode;
use vq_core::{assign_cells, integrate, lbg_train, update_codebook, ChunkPlan, Engine, LbgConfig, Metric};

#[test]
fn bit_identical_across_worker_counts() {
    let ts = synthetic_training_set(2000, 8, 42).unwrap();
    let mut cfg = LbgConfig::new(64);
    let (seq_cb, seq_stats) = lbg_train(&ts, &cfg).unwrap();
    let seq_bytes = encode_codebook(&seq_cb, cfg.metric);
    for p in [1, 2, 3, 4, 8] {
        cfg.workers = p;
        let (cb, stats) = parallel_lbg_train(&ts, &cfg).unwrap();
        assert_eq!(encode_codebook(&cb, cfg.metric), seq_bytes, "P={p}");
        assert_eq!(stats.history, seq_stats.history, "P={p}");
        assert_eq!(stats.total.to_bits(), seq_stats.total.to_bits());
        assert_eq!(stats.per_worker.len(), p);
    }
}

#[test]
fn euclidean_metric_is_also_worker_invariant() {
    let ts = synthetic_training_set(777, 5, 9).unwrap();
    let mut cfg = LbgConfig::new(16);
    cfg.metric = Metric::Euclidean;
    let seq = lbg_train(&ts, &cfg).unwrap();
    cfg.workers = 6;
    let par = parallel_lbg_train(&ts, &cfg).unwrap();
    assert_eq!(par.0, seq.0);
    assert_eq!(par.1.history, seq.1.history);
}

#[test]
fn partial_tables_concatenate_to_the_sequential_table() {
    let ts = synthetic_training_set(1001, 6, 3).unwrap();
    let cb = vq_core::Codebook::new(synthetic_training_set(32, 6, 4).unwrap().vectors().clone()).unwrap();
    let (full, full_d) = assign_cells(ts.as_flat(), &cb, Metric::SquaredEuclidean).unwrap();
    for p in [1, 2, 5, 16] {
        let plan = ChunkPlan::new(ts.len(), p).unwrap();
        let (parts, ds) = parallel_assign(&ts, &cb, &plan, Metric::SquaredEuclidean).unwrap();
        for (part, range) in parts.iter().zip(plan.ranges()) {
            assert_eq!(part.len(), range.len());
            assert_eq!(part.as_slice(), &full[range.clone()]);
        }
        let (ct, td) = integrate(&parts, &ds, ts.len()).unwrap();
        assert_eq!(ct, full);
        assert_eq!(td, full_d);
    }
}

#[test]
fn update_rows_are_written_once_by_their_owner() {
    let ts = synthetic_training_set(900, 4, 11).unwrap();
    let cb = vq_core::Codebook::new(synthetic_training_set(37, 4, 12).unwrap().vectors().clone()).unwrap();
    let (cells, _) = assign_cells(ts.as_flat(), &cb, Metric::SquaredEuclidean).unwrap();
    let seq = update_codebook(&ts, &cells, &cb).unwrap();
    for p in [1, 2, 3, 8, 37, 50] {
        let parts = parallel_update_parts(&ts, &cells, &cb, p).unwrap();
        let mut writes = vec![0; cb.len()];
        for part in &parts {
            for &c in &part.indices {
                assert_eq!(c % p, part.worker);
                writes[c] += 1;
            }
        }
        assert!(writes.iter().all(|&w| w == 1));
        assert_eq!(parallel_update(&ts, &cells, &cb, p).unwrap(), seq);
    }
}

fn slow_master(worker: usize, phase: Phase) -> Duration {
    match (worker, phase) {
        (0, Phase::Allocate) => Duration::from_millis(3),
        (_, Phase::Update) => Duration::from_micros(500 * (4 - worker.min(4)) as u64),
        _ => Duration::ZERO,
    }
}

fn slow_workers(worker: usize, _: Phase) -> Duration {
    Duration::from_micros(700 * worker as u64)
}

#[test]
fn perturbed_schedules_do_not_change_results() {
    let ts = synthetic_training_set(600, 3, 21).unwrap();
    let mut cfg = LbgConfig::new(8);
    let seq = lbg_train(&ts, &cfg).unwrap();
    cfg.workers = 4;
    for delay in [slow_master as fn(usize, Phase) -> Duration, slow_workers] {
        let opts = PoolOptions { delay: Some(delay) };
        let par = parallel_lbg_train_observed(&ts, &cfg, opts, &mut |_| {}).unwrap();
        assert_eq!(par.0, seq.0);
        assert_eq!(par.1.history, seq.1.history);
    }
}

#[test]
fn pool_engine_phases_match_sequential_kernels() {
    let ts = synthetic_training_set(503, 4, 8).unwrap();
    let cb = vq_core::Codebook::new(synthetic_training_set(16, 4, 2).unwrap().vectors().clone()).unwrap();
    let (cells, d) = assign_cells(ts.as_flat(), &cb, Metric::SquaredEuclidean).unwrap();
    let upd = update_codebook(&ts, &cells, &cb).unwrap();
    with_pool(
        &ts,
        5,
        PoolOptions {
            delay: Some(slow_workers),
        },
        |engine| {
            assert_eq!(engine.workers(), 5);
            for _ in 0..3 {
                let a = engine.allocate(&cb, Metric::SquaredEuclidean);
                assert_eq!(a.cells, cells);
                assert_eq!(a.total(), d);
                assert_eq!(engine.update(&a.cells, &cb), upd);
            }
        },
    )
    .unwrap();
}

#[test]
fn parallel_encode_matches_sequential() {
    let ts = synthetic_training_set(1234, 4, 1).unwrap();
    let cb = vq_core::Codebook::new(synthetic_training_set(64, 4, 2).unwrap().vectors().clone()).unwrap();
    let seq = encode(ts.vectors(), &cb).unwrap();
    for p in [1, 2, 7] {
        assert_eq!(parallel_encode(ts.vectors(), &cb, p).unwrap(), seq);
    }
}

// Allocation throughput on a large set; only meaningful with enough cores.
#[test]
fn allocation_scales_with_physical_cores() {
    let cores = num_cpus::get_physical();
    let p = cores.min(4);
    if p < 2 {
        eprintln!("skipping throughput check: {cores} physical core(s)");
        return;
    }
    let ts = synthetic_training_set(100_000, 8, 1).unwrap();
    let cb = vq_core::Codebook::new(synthetic_training_set(64, 8, 2).unwrap().vectors().clone()).unwrap();
    let time = |workers: usize| {
        let plan = ChunkPlan::new(ts.len(), workers).unwrap();
        (0..3)
            .map(|_| {
                let t = Instant::now();
                parallel_assign(&ts, &cb, &plan, Metric::SquaredEuclidean).unwrap();
                t.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let (t1, tp) = (time(1), time(p));
    assert!(tp * 1.2 < t1, "P={p}: {tp:.4}s vs P=1: {t1:.4}s");
}

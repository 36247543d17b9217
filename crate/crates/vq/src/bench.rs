//! Wall-clock benchmark of codebook generation over a (codebook size x
//! worker count) sweep, plus the Amdahl's-law reference curve.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;
use vq_core::{LbgConfig, Metric, TrainingSet};

use crate::parallel::parallel_lbg_train;

/// Header of the benchmark CSV.
pub const BENCH_HEADER: &str = "n,p,m,k,seconds,td,iterations";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("serial fraction must lie in [0, 1], got {0}")]
    SerialFraction(f64),
    #[error("processor count must be at least 1")]
    Processors,
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error(transparent)]
    Core(#[from] vq_core::Error),
}

/// Inputs to Amdahl's law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmdahlParams {
    /// Fraction S of the run that stays serial.
    pub serial_fraction: f64,
    /// Processor count n.
    pub processors: usize,
}

/// `1 / (S + (1 - S) / n)`, evaluated as `n / (S n + 1 - S)` so the
/// endpoints S = 0 and S = 1 come out exact.
pub fn amdahl_speedup(p: AmdahlParams) -> Result<f64, BenchError> {
    let s = p.serial_fraction;
    if !(0.0..=1.0).contains(&s) {
        return Err(BenchError::SerialFraction(s));
    }
    if p.processors == 0 {
        return Err(BenchError::Processors);
    }
    let n = p.processors as f64;
    Ok(n / (s * n + (1.0 - s)))
}

/// `m` vectors drawn uniformly from `[0, 1)^k` with a seeded ChaCha8 stream.
pub fn synthetic_training_set(m: usize, k: usize, seed: u64) -> Result<TrainingSet, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..m * k).map(|_| rng.random::<f64>()).collect();
    Ok(TrainingSet::from_flat(data, k)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub threads: Vec<usize>,
    pub repeats: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub metric: Metric,
    pub max_iterations_per_level: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![8, 16, 32, 64, 128],
            threads: vec![1, 2, 4],
            repeats: 3,
            epsilon: LbgConfig::DEFAULT_EPSILON,
            delta: LbgConfig::DEFAULT_DELTA,
            metric: Metric::SquaredEuclidean,
            max_iterations_per_level: LbgConfig::DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl BenchConfig {
    fn validate(&self) -> Result<(), BenchError> {
        if self.sizes.is_empty() || self.threads.is_empty() {
            return Err(BenchError::Sweep("sizes and threads must be non-empty".into()));
        }
        if let Some(n) = self.sizes.iter().find(|n| !n.is_power_of_two()) {
            return Err(BenchError::Sweep(format!("codebook size {n} must be a power of two")));
        }
        if self.threads.contains(&0) {
            return Err(BenchError::Sweep("thread counts must be at least 1".into()));
        }
        if self.repeats == 0 {
            return Err(BenchError::Sweep("repeats must be at least 1".into()));
        }
        Ok(())
    }

    fn lbg(&self, n: usize, p: usize) -> LbgConfig {
        LbgConfig {
            target_size: n,
            epsilon: self.epsilon,
            delta: self.delta,
            workers: p,
            max_iterations_per_level: self.max_iterations_per_level,
            metric: self.metric,
        }
    }
}

/// One cell of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub codebook_size: usize,
    pub workers: usize,
    pub vectors: usize,
    pub dimension: usize,
    /// Minimum over repeats of the training wall time.
    pub wall_time_seconds: f64,
    pub final_td: f64,
    pub iterations_per_level: Vec<usize>,
}

/// Times `parallel_lbg_train` for every `(N, P)` in the sweep. Repeats run
/// back to back; only the training call is timed.
pub fn run_bench(ts: &TrainingSet, cfg: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    cfg.validate()?;
    let mut records = Vec::with_capacity(cfg.sizes.len() * cfg.threads.len());
    for &n in &cfg.sizes {
        for &p in &cfg.threads {
            let lbg = cfg.lbg(n, p);
            let mut best = f64::INFINITY;
            let mut last = None;
            for _ in 0..cfg.repeats {
                let start = Instant::now();
                let out = parallel_lbg_train(ts, &lbg)?;
                best = best.min(start.elapsed().as_secs_f64().max(1e-9));
                last = Some(out);
            }
            let (_, stats) = last.expect("at least one repeat");
            records.push(BenchRecord {
                codebook_size: n,
                workers: p,
                vectors: ts.len(),
                dimension: ts.dim(),
                wall_time_seconds: best,
                final_td: stats.total,
                iterations_per_level: stats.iterations_per_level().into_iter().map(|(_, i)| i).collect(),
            });
        }
    }
    Ok(records)
}

/// Writes the CSV: one `#` metadata line, the fixed header, one row per
/// record. Iteration counts per level are `;`-separated.
pub fn write_bench_csv(mut out: impl Write, metadata: &str, records: &[BenchRecord]) -> io::Result<()> {
    writeln!(out, "# {metadata}")?;
    writeln!(out, "{BENCH_HEADER}")?;
    for r in records {
        let iters = r
            .iterations_per_level
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            out,
            "{},{},{},{},{:.9},{},{}",
            r.codebook_size, r.workers, r.vectors, r.dimension, r.wall_time_seconds, r.final_td, iters
        )?;
    }
    out.flush()
}

/// Measured speedup next to the Amdahl prediction for one record.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupRow {
    pub codebook_size: usize,
    pub workers: usize,
    pub seconds: f64,
    pub speedup: f64,
    pub amdahl: f64,
}

/// Speedup of each record against the smallest worker count measured for the
/// same codebook size (P = 1 on the default sweep).
pub fn speedup_report(records: &[BenchRecord], serial_fraction: f64) -> Result<Vec<SpeedupRow>, BenchError> {
    records
        .iter()
        .map(|r| {
            let base = records
                .iter()
                .filter(|b| b.codebook_size == r.codebook_size)
                .min_by_key(|b| b.workers)
                .expect("record is its own candidate");
            let amdahl = |p| {
                amdahl_speedup(AmdahlParams {
                    serial_fraction,
                    processors: p,
                })
            };
            Ok(SpeedupRow {
                codebook_size: r.codebook_size,
                workers: r.workers,
                seconds: r.wall_time_seconds,
                speedup: base.wall_time_seconds / r.wall_time_seconds,
                amdahl: amdahl(r.workers)? / amdahl(base.workers)?,
            })
        })
        .collect()
}

pub fn format_speedup_table(rows: &[SpeedupRow]) -> String {
    let mut s = String::from("     n    p      seconds  speedup   amdahl\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{:>6} {:>4} {:>12.6} {:>8.3} {:>8.3}",
            r.codebook_size, r.workers, r.seconds, r.speedup, r.amdahl
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(s: f64, n: usize) -> AmdahlParams {
        AmdahlParams {
            serial_fraction: s,
            processors: n,
        }
    }

    #[test]
    fn amdahl_examples() {
        let v = amdahl_speedup(params(0.15, 4)).unwrap();
        assert!((v - 2.76).abs() <= 0.005, "{v}");
        assert!((v - 1.0 / (0.15 + 0.85 / 4.0)).abs() < 1e-12);
        assert_eq!(amdahl_speedup(params(1.0, 16)).unwrap(), 1.0);
        assert_eq!(amdahl_speedup(params(0.0, 7)).unwrap(), 7.0);
        assert!(amdahl_speedup(params(1.5, 2)).is_err());
        assert!(amdahl_speedup(params(-0.1, 2)).is_err());
        assert!(amdahl_speedup(params(0.5, 0)).is_err());
    }

    #[test]
    fn amdahl_bounds_and_monotonicity() {
        for si in 0..=20 {
            let s = si as f64 / 20.0;
            let mut prev = 0.0;
            for n in 1..64 {
                let v = amdahl_speedup(params(s, n)).unwrap();
                assert!(v >= 1.0 - 1e-12 && v <= n as f64 + 1e-12);
                if s > 0.0 {
                    assert!(v <= 1.0 / s + 1e-9);
                }
                assert!(v >= prev - 1e-12);
                prev = v;
                if si > 0 {
                    let less_serial = amdahl_speedup(params((si - 1) as f64 / 20.0, n)).unwrap();
                    assert!(less_serial >= v - 1e-12);
                }
            }
        }
    }

    #[test]
    fn synthetic_is_seeded() {
        let a = synthetic_training_set(100, 3, 42).unwrap();
        let b = synthetic_training_set(100, 3, 42).unwrap();
        let c = synthetic_training_set(100, 3, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.as_flat().iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn single_cell_sweep() {
        let ts = synthetic_training_set(200, 4, 1).unwrap();
        let cfg = BenchConfig {
            sizes: vec![8],
            threads: vec![1],
            repeats: 1,
            ..Default::default()
        };
        let records = run_bench(&ts, &cfg).unwrap();
        assert_eq!(records.len(), 1);
        assert!(records[0].wall_time_seconds > 0.0);
        assert_eq!(records[0].iterations_per_level.len(), 4);
        let rows = speedup_report(&records, 0.15).unwrap();
        assert_eq!((rows[0].speedup, rows[0].amdahl), (1.0, 1.0));
    }

    #[test]
    fn csv_layout() {
        let r = BenchRecord {
            codebook_size: 8,
            workers: 2,
            vectors: 2000,
            dimension: 10,
            wall_time_seconds: 0.0125,
            final_td: 1234.5,
            iterations_per_level: vec![1, 3, 4, 5],
        };
        let mut buf = Vec::new();
        write_bench_csv(&mut buf, "seed=42", &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# seed=42\nn,p,m,k,seconds,td,iterations\n8,2,2000,10,0.012500000,1234.5,1;3;4;5\n"
        );
    }

    #[test]
    fn rejects_bad_sweeps() {
        let ts = synthetic_training_set(10, 2, 1).unwrap();
        let bad = BenchConfig {
            sizes: vec![12],
            ..Default::default()
        };
        assert!(matches!(run_bench(&ts, &bad), Err(BenchError::Sweep(_))));
        let bad = BenchConfig {
            threads: vec![0],
            ..Default::default()
        };
        assert!(matches!(run_bench(&ts, &bad), Err(BenchError::Sweep(_))));
    }
}

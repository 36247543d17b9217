//! The `vq` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vq_core::codec;
use vq_core::{Codebook, DistortionStats, IterationRecord, LbgConfig, Metric, TrainingSet};

use crate::bench::{self, AmdahlParams, BenchConfig, BenchError};
use crate::io::{self as vio, FormatError, IngestError, PgmError};
use crate::parallel::{parallel_encode, parallel_lbg_train_observed, PoolOptions};

/// Environment variable overriding the default worker count.
pub const THREADS_ENV: &str = "VQ_THREADS";

/// Header of the training history CSV.
pub const HISTORY_HEADER: &str = "level_size,iteration,td,empty_cells,seconds";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<vq_core::Error> for CliError {
    fn from(e: vq_core::Error) -> Self {
        match e {
            vq_core::Error::NotPowerOfTwo(_) | vq_core::Error::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}
data_error!(IngestError, FormatError, PgmError, io::Error);

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Core(c) => c.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

type CliResult = Result<(), CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "vq",
    version,
    about = "LBG vector quantization: parallel codebook training, codec and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a codebook from a CSV training set.
    Train(TrainArgs),
    /// Encode CSV vectors to codevector indices.
    Encode(EncodeArgs),
    /// Decode an encoded file back to CSV vectors.
    Decode(DecodeArgs),
    /// Report the rate of a codebook (or of N and L given directly).
    Rate(RateArgs),
    /// Train a codebook on the b x b blocks of a PGM image.
    ImageTrain(ImageTrainArgs),
    /// Encode a PGM image with a block codebook.
    ImageEncode(ImageEncodeArgs),
    /// Rebuild a PGM image from an encoded file.
    ImageDecode(ImageDecodeArgs),
    /// Time codebook generation over codebook sizes and worker counts.
    Bench(BenchArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, Default)]
enum MetricArg {
    #[default]
    SquaredEuclidean,
    Euclidean,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::SquaredEuclidean => Metric::SquaredEuclidean,
            MetricArg::Euclidean => Metric::Euclidean,
        }
    }
}

#[derive(Args, Debug)]
struct TrainOpts {
    /// Final codebook size N (power of two).
    #[arg(long = "codebook-size", short = 'n')]
    codebook_size: usize,
    /// Relative distortion-change threshold.
    #[arg(long, default_value_t = LbgConfig::DEFAULT_EPSILON)]
    epsilon: f64,
    /// Split offset added to / subtracted from each component.
    #[arg(long, default_value_t = LbgConfig::DEFAULT_DELTA)]
    delta: f64,
    /// Worker threads (default: $VQ_THREADS, else physical cores).
    #[arg(long, short = 't')]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    metric: MetricArg,
    /// Iteration guard per codebook size.
    #[arg(long = "max-iters", default_value_t = LbgConfig::DEFAULT_MAX_ITERATIONS)]
    max_iters: usize,
    /// Output codebook file.
    #[arg(long, short = 'o')]
    out: PathBuf,
    /// Optional per-iteration history CSV.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Training CSV, one vector per line.
    #[arg(long, short = 'i')]
    input: PathBuf,
    #[command(flatten)]
    opts: TrainOpts,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[arg(long, short = 'i')]
    input: PathBuf,
    #[arg(long, short = 'c')]
    codebook: PathBuf,
    #[arg(long, short = 'o')]
    out: PathBuf,
    #[arg(long, short = 't')]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    /// Encoded file.
    #[arg(long, short = 'i')]
    input: PathBuf,
    #[arg(long, short = 'c')]
    codebook: PathBuf,
    /// Output CSV (stdout when omitted).
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RateArgs {
    #[arg(long, short = 'c', conflicts_with_all = ["size", "dim"])]
    codebook: Option<PathBuf>,
    #[arg(long, requires = "dim")]
    size: Option<usize>,
    #[arg(long, requires = "size")]
    dim: Option<usize>,
}

#[derive(Args, Debug)]
struct ImageTrainArgs {
    /// Binary PGM (P5, maxval 255).
    #[arg(long, short = 'i')]
    input: PathBuf,
    /// Block side b; vectors have dimension b^2.
    #[arg(long, short = 'b')]
    block: usize,
    #[command(flatten)]
    opts: TrainOpts,
}

#[derive(Args, Debug)]
struct ImageEncodeArgs {
    #[arg(long, short = 'i')]
    input: PathBuf,
    #[arg(long, short = 'c')]
    codebook: PathBuf,
    #[arg(long, short = 'o')]
    out: PathBuf,
    /// Block side; must match the codebook dimension.
    #[arg(long, short = 'b')]
    block: Option<usize>,
    /// Print reconstruction distortion.
    #[arg(long)]
    report: bool,
    #[arg(long, short = 't')]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct ImageDecodeArgs {
    #[arg(long, short = 'i')]
    input: PathBuf,
    #[arg(long, short = 'c')]
    codebook: PathBuf,
    /// Width of the original image in pixels.
    #[arg(long)]
    width: usize,
    /// Height of the original image in pixels.
    #[arg(long)]
    height: usize,
    #[arg(long, short = 'b')]
    block: Option<usize>,
    /// Output PGM.
    #[arg(long, short = 'o')]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Training CSV.
    #[arg(
        long,
        short = 'i',
        conflicts_with = "synthetic",
        required_unless_present = "synthetic"
    )]
    input: Option<PathBuf>,
    /// Synthetic uniform data as M,k,seed.
    #[arg(long, value_parser = parse_synthetic)]
    synthetic: Option<(usize, usize, u64)>,
    #[arg(long, value_delimiter = ',', default_values_t = [8usize, 16, 32, 64, 128])]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4])]
    threads: Vec<usize>,
    /// Runs per cell; the minimum time is reported.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = LbgConfig::DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = LbgConfig::DEFAULT_DELTA)]
    delta: f64,
    /// Serial fraction used for the Amdahl column.
    #[arg(long = "serial-fraction", default_value_t = 0.15)]
    serial_fraction: f64,
    /// Output CSV (stdout when omitted).
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

fn parse_synthetic(s: &str) -> Result<(usize, usize, u64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [m, k, seed] = parts.as_slice() else {
        return Err("expected M,k,seed".into());
    };
    let num = |v: &str, what: &str| {
        v.parse::<u64>()
            .map_err(|_| format!("{what} must be a non-negative integer, got {v:?}"))
    };
    let (m, k, seed) = (num(m, "M")? as usize, num(k, "k")? as usize, num(seed, "seed")?);
    if m == 0 || k == 0 {
        return Err("M and k must be at least 1".into());
    }
    Ok((m, k, seed))
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Train(a) => cmd_train(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Rate(a) => cmd_rate(a),
        Command::ImageTrain(a) => cmd_image_train(a),
        Command::ImageEncode(a) => cmd_image_encode(a),
        Command::ImageDecode(a) => cmd_image_decode(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

/// Worker count: the flag, else `$VQ_THREADS`, else physical cores.
pub fn resolve_threads(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(t) = flag {
        return match t {
            0 => Err(CliError::Usage("--threads must be at least 1".into())),
            t => Ok(t),
        };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(t),
            _ => Err(CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(num_cpus::get_physical().max(1)),
    }
}

fn lbg_config(opts: &TrainOpts) -> Result<LbgConfig, CliError> {
    if !opts.codebook_size.is_power_of_two() {
        return Err(CliError::Usage(format!(
            "--codebook-size {} must be a power of two",
            opts.codebook_size
        )));
    }
    let cfg = LbgConfig {
        target_size: opts.codebook_size,
        epsilon: opts.epsilon,
        delta: opts.delta,
        workers: resolve_threads(opts.threads)?,
        max_iterations_per_level: opts.max_iters,
        metric: opts.metric.into(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))
}

fn train_and_save(
    ts: &TrainingSet,
    cfg: &LbgConfig,
    opts: &TrainOpts,
) -> Result<(Codebook, DistortionStats), CliError> {
    let start = Instant::now();
    let mut history = Vec::new();
    let (cb, stats) = parallel_lbg_train_observed(ts, cfg, PoolOptions::default(), &mut |r: &IterationRecord| {
        history.push((*r, start.elapsed().as_secs_f64()));
    })?;
    let elapsed = start.elapsed().as_secs_f64();

    vio::save_codebook(&opts.out, &cb, cfg.metric)?;
    if let Some(path) = &opts.history {
        let mut w = create(path)?;
        writeln!(w, "{HISTORY_HEADER}")?;
        for (r, t) in &history {
            writeln!(
                w,
                "{},{},{},{},{:.9}",
                r.level_size, r.iteration, r.td, r.empty_cells, t
            )?;
        }
        w.flush()?;
    }

    println!(
        "trained N={} k={} from M={} vectors with P={} (epsilon={}, delta={}, metric={:?}) in {:.6} s",
        cb.len(),
        cb.dim(),
        ts.len(),
        cfg.workers,
        cfg.epsilon,
        cfg.delta,
        cfg.metric,
        elapsed
    );
    println!("final TD: {}", stats.total);
    println!("mean distortion per vector: {}", stats.mean(ts.len()));
    let levels: Vec<String> = stats
        .iterations_per_level()
        .iter()
        .map(|(s, i)| format!("{s}:{i}"))
        .collect();
    println!("iterations per level: {}", levels.join(" "));
    for w in &stats.warnings {
        eprintln!(
            "warning: level {} stopped at the iteration guard after {} passes",
            w.level_size, w.iterations
        );
    }
    print_rate(&codec::rate(cb.len(), cb.dim())?);
    Ok((cb, stats))
}

fn print_rate(r: &codec::RateReport) {
    println!(
        "rate: {} bits/vector, {} bits/sample",
        r.bits_per_vector, r.bits_per_sample
    );
    println!("compression ratio vs 64-bit samples: {}", r.compression_ratio);
}

fn cmd_train(a: TrainArgs) -> CliResult {
    let cfg = lbg_config(&a.opts)?;
    let ts = vio::load_training_csv(&a.input)?;
    train_and_save(&ts, &cfg, &a.opts).map(|_| ())
}

fn cmd_encode(a: EncodeArgs) -> CliResult {
    let (cb, _) = vio::load_codebook(&a.codebook)?;
    let data = vio::load_training_csv(&a.input)?;
    let stream = parallel_encode(data.vectors(), &cb, resolve_threads(a.threads)?)?;
    vio::save_encoded(&a.out, &stream)?;
    println!("encoded {} vectors with N={} k={}", stream.len(), cb.len(), cb.dim());
    Ok(())
}

fn cmd_decode(a: DecodeArgs) -> CliResult {
    let (cb, _) = vio::load_codebook(&a.codebook)?;
    let stream = vio::load_encoded(&a.input)?;
    let vectors = codec::decode(&stream, &cb)?;
    match &a.out {
        Some(path) => vio::write_vectors_csv(create(path)?, &vectors)?,
        None => vio::write_vectors_csv(io::stdout().lock(), &vectors)?,
    }
    Ok(())
}

fn cmd_rate(a: RateArgs) -> CliResult {
    let (n, l) = match (&a.codebook, a.size, a.dim) {
        (Some(path), _, _) => {
            let (cb, _) = vio::load_codebook(path)?;
            (cb.len(), cb.dim())
        }
        (None, Some(n), Some(l)) => (n, l),
        _ => return Err(CliError::Usage("give --codebook or both --size and --dim".into())),
    };
    let r = codec::rate(n, l).map_err(|e| CliError::Usage(e.to_string()))?;
    println!("N={n} L={l}");
    print_rate(&r);
    Ok(())
}

fn block_side(cb: &Codebook, flag: Option<usize>) -> Result<usize, CliError> {
    let k = cb.dim();
    let b = flag.unwrap_or_else(|| (k as f64).sqrt().round() as usize);
    if b == 0 || b * b != k {
        return Err(CliError::Data(format!(
            "codebook dimension {k} is not the square of block side {b}"
        )));
    }
    Ok(b)
}

fn cmd_image_train(a: ImageTrainArgs) -> CliResult {
    if a.block == 0 {
        return Err(CliError::Usage("--block must be at least 1".into()));
    }
    let cfg = lbg_config(&a.opts)?;
    let img = vio::load_pgm(&a.input)?;
    let (vectors, grid) = vio::image_to_blocks(&img, a.block)?;
    println!(
        "{}x{} image, block {} -> {} vectors of dimension {}",
        img.width,
        img.height,
        a.block,
        vectors.len(),
        grid.dim()
    );
    let ts = TrainingSet::new(vectors)?;
    train_and_save(&ts, &cfg, &a.opts).map(|_| ())
}

fn cmd_image_encode(a: ImageEncodeArgs) -> CliResult {
    let (cb, metric) = vio::load_codebook(&a.codebook)?;
    let b = block_side(&cb, a.block)?;
    let img = vio::load_pgm(&a.input)?;
    let (vectors, grid) = vio::image_to_blocks(&img, b)?;
    let stream = parallel_encode(&vectors, &cb, resolve_threads(a.threads)?)?;
    vio::save_encoded(&a.out, &stream)?;
    println!(
        "encoded {}x{} image as {} blocks (use --width {} --height {} to decode)",
        img.width,
        img.height,
        stream.len(),
        img.width,
        img.height
    );
    if a.report {
        let rec = codec::decode(&stream, &cb)?;
        let d = codec::reconstruction_distortion(&vectors, &rec, metric)?;
        let out = vio::blocks_to_image(&rec, &grid)?;
        println!(
            "reconstruction distortion ({metric:?}): total {} mean per block {}",
            d.total, d.mean
        );
        println!("mean absolute pixel error: {}", mean_abs_error(&img, &out));
    }
    Ok(())
}

/// Mean absolute per-pixel difference between two equally sized images.
pub fn mean_abs_error(a: &vio::GrayImage, b: &vio::GrayImage) -> f64 {
    let sum: u64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(x, y)| u64::from(x.abs_diff(*y)))
        .sum();
    sum as f64 / a.pixels.len() as f64
}

fn cmd_image_decode(a: ImageDecodeArgs) -> CliResult {
    let (cb, _) = vio::load_codebook(&a.codebook)?;
    let b = block_side(&cb, a.block)?;
    let stream = vio::load_encoded(&a.input)?;
    let grid = vio::BlockGrid::new(a.width, a.height, b)?;
    let vectors = codec::decode(&stream, &cb)?;
    let img = vio::blocks_to_image(&vectors, &grid)?;
    std::fs::write(&a.out, img.to_pgm())
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", a.out.display())))?;
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CliResult {
    let (ts, source) = match (&a.input, a.synthetic) {
        (Some(path), _) => (vio::load_training_csv(path)?, format!("input={}", path.display())),
        (None, Some((m, k, seed))) => (
            bench::synthetic_training_set(m, k, seed)?,
            format!("synthetic m={m} k={k} seed={seed}"),
        ),
        (None, None) => return Err(CliError::Usage("give --input or --synthetic M,k,seed".into())),
    };
    bench::amdahl_speedup(AmdahlParams {
        serial_fraction: a.serial_fraction,
        processors: 1,
    })?;
    let cfg = BenchConfig {
        sizes: a.sizes,
        threads: a.threads,
        repeats: a.repeats,
        epsilon: a.epsilon,
        delta: a.delta,
        ..BenchConfig::default()
    };
    let records = bench::run_bench(&ts, &cfg)?;
    let metadata = format!(
        "{source} epsilon={} delta={} repeats={} physical_cores={}",
        cfg.epsilon,
        cfg.delta,
        cfg.repeats,
        num_cpus::get_physical()
    );
    let rows = bench::speedup_report(&records, a.serial_fraction)?;
    match &a.out {
        Some(path) => {
            bench::write_bench_csv(create(path)?, &metadata, &records)?;
            print!("{}", bench::format_speedup_table(&rows));
        }
        None => {
            bench::write_bench_csv(io::stdout().lock(), &metadata, &records)?;
            eprint!("{}", bench::format_speedup_table(&rows));
        }
    }
    Ok(())
}

//! `vjig`: permutation sets, puzzle datasets and sampler benchmarks.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use vjig::dataset::{build_dataset, verify_dataset, BuildConfig};
use vjig::io::shard::PixelEncoding;
use vjig::io::{read_perm_file, write_perm_file, write_report};
use vjig::sampler::{generate, space_size_spatial, space_size_unconstrained, SamplerParams, DEFAULT_ENUMERATION_BUDGET};
use vjig::tuples::{parse_tuple_list, Regime};
use vjig::{diversity, Error, GrayScope, GridSpec, PermutationSet, SamplerReport};

const EXIT_IO: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CAPACITY: u8 = 3;
const EXIT_FORMAT: u8 = 4;
const EXIT_VERIFY: u8 = 5;
const EXIT_TOO_MANY_SKIPS: u8 = 6;

#[derive(Parser)]
#[command(name = "vjig", version, about = "Video jigsaw puzzle generation")]
struct Cli {
    /// Worker threads for candidate scoring and dataset building.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a permutation set and its sampler report.
    Perms(PermsArgs),
    /// Print diversity statistics of a permutation file.
    Stats {
        #[arg(long)]
        perm_file: PathBuf,
    },
    /// Build puzzle shards and a manifest from extracted frames.
    Build(BuildArgs),
    /// Re-check every record of a built dataset.
    Verify {
        /// Dataset directory written by `build`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        perm_file: PathBuf,
    },
    /// Compare the spatial and unconstrained samplers.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Spatially coherent rows.
    Sp,
    /// Unconstrained rows.
    Orig,
}

#[derive(Args)]
struct ShapeArgs {
    /// Patches per frame.
    #[arg(long, default_value_t = 4)]
    np: usize,
    /// Frames per tuple.
    #[arg(long, default_value_t = 3)]
    nf: usize,
}

#[derive(Args)]
struct PermsArgs {
    #[arg(long, value_enum, default_value = "sp")]
    mode: Mode,
    /// Number of rows.
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    shape: ShapeArgs,
    /// Row length for unconstrained mode; overrides --np/--nf.
    #[arg(long, conflicts_with_all = ["np", "nf"])]
    len: Option<usize>,
    #[arg(long)]
    seed: u64,
    /// Enumerate the whole space instead of a candidate pool (orig mode).
    #[arg(long)]
    exact: bool,
    /// Largest per-step space exact mode will enumerate.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    budget: u64,
    /// Candidate pool size for non-exact orig mode.
    #[arg(long, default_value_t = 100_000)]
    pool_size: usize,
    /// Permutation file to write.
    #[arg(long)]
    out: PathBuf,
    /// Report file to write; defaults to the permutation file plus `.report`.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    /// Tuple list: one video per line followed by its frame paths.
    #[arg(long)]
    tuples: PathBuf,
    #[arg(long)]
    frames_dir: PathBuf,
    #[arg(long)]
    perm_file: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    epoch: u64,
    #[arg(long, default_value_t = 224)]
    crop: usize,
    /// Grid as ROWSxCOLS, or a single number for a square grid.
    #[arg(long, default_value = "2x2", value_parser = parse_grid)]
    grid: (usize, usize),
    #[arg(long, default_value_t = 64)]
    patch: usize,
    #[arg(long, default_value_t = 0.5)]
    gray_prob: f64,
    /// tuple: one grayscale draw per tuple; frame: one per frame.
    #[arg(long, default_value = "tuple")]
    gray_scope: GrayScope,
    /// quadruple or fixed.
    #[arg(long, default_value = "quadruple")]
    regime: Regime,
    /// 1-based frame indices for the fixed regime.
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    indices: Vec<usize>,
    /// norm32 or raw8.
    #[arg(long, default_value = "norm32")]
    encoding: PixelEncoding,
    #[arg(long, default_value_t = 4096)]
    shard_size: usize,
    /// Center crops instead of random ones.
    #[arg(long)]
    center_crop: bool,
    /// Largest tolerated fraction of skipped tuples.
    #[arg(long, default_value_t = 0.01)]
    max_skip: f64,
    /// Also write every raw patch as PNG.
    #[arg(long)]
    png_debug: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 100_000)]
    pool_size: usize,
    /// Enumerate the unconstrained space exactly; needs --budget.
    #[arg(long, requires = "budget")]
    exact: bool,
    #[arg(long)]
    budget: Option<u64>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad grid {s:?}: {e}"));
    match s.split_once(['x', 'X']) {
        Some((r, c)) => Ok((parse(r)?, parse(c)?)),
        None => parse(s).map(|k| (k, k)),
    }
}

enum Failure {
    Lib(Error),
    Usage(String),
    TooManySkips { skipped: usize, total: usize, limit: f64 },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::TooManySkips { .. } => EXIT_TOO_MANY_SKIPS,
            Failure::Lib(e) => match e {
                Error::InvalidArgument(_) => EXIT_USAGE,
                Error::Capacity { .. } => EXIT_CAPACITY,
                Error::Format(_) | Error::UnsupportedVersion { .. } | Error::Checksum(_) => EXIT_FORMAT,
                Error::Verification(_) | Error::StalePermutation { .. } => EXIT_VERIFY,
                Error::Io { .. } | Error::Image { .. } => EXIT_IO,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Usage(m) => m.clone(),
            Failure::TooManySkips { skipped, total, limit } => {
                format!("{skipped} of {total} tuples skipped, more than the allowed fraction {limit}")
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    let workers = cli
        .workers
        .map(|w| w as usize)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start {workers} workers: {e}");
            return ExitCode::from(EXIT_IO);
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Perms(args) => cmd_perms(args),
        Command::Stats { perm_file } => cmd_stats(&perm_file),
        Command::Build(args) => cmd_build(args),
        Command::Verify { out, perm_file } => cmd_verify(&out, &perm_file),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn read_existing_perms(path: &Path) -> Result<PermutationSet, Failure> {
    if !path.is_file() {
        return Err(Failure::Usage(format!("permutation file {} does not exist", path.display())));
    }
    Ok(read_perm_file(path)?)
}

fn cmd_perms(args: PermsArgs) -> Result<(), Failure> {
    if args.mode == Mode::Sp && (args.len.is_some() || args.exact) {
        return Err(Failure::Usage("--len and --exact apply to --mode orig only".into()));
    }
    let (n_p, n_f) = match args.len {
        Some(len) => (len, 1),
        None => (args.shape.np, args.shape.nf),
    };
    let params = match (args.mode, args.exact) {
        (Mode::Sp, _) => SamplerParams::spatial(args.n, n_p, n_f, args.seed),
        (Mode::Orig, true) => SamplerParams::exact(args.n, n_p, n_f, args.seed).with_budget(args.budget),
        (Mode::Orig, false) => SamplerParams::pool(args.n, n_p, n_f, args.seed, args.pool_size),
    };
    let (set, report) = generate(&params)?;
    write_perm_file(&set, &args.out)?;
    let report_path = args.report.unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".report");
        p.into()
    });
    write_report(&report, &report_path)?;

    for (i, d) in report.per_step_best_distance().iter().enumerate() {
        println!("step {:>5}  best distance {:>12} = {:.4}", i + 2, d.to_string(), ratio_f64(d));
    }
    print_totals(&set, &report)?;
    println!("wrote {} and {}", args.out.display(), report_path.display());
    Ok(())
}

fn ratio_f64(r: &vjig::Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn print_totals(set: &PermutationSet, report: &SamplerReport) -> Result<(), Failure> {
    let stats = diversity(set)?;
    println!("mode {}  rows {}  row length {}", report.mode, set.len(), set.row_len());
    println!("candidates evaluated {}", report.candidates_evaluated);
    println!("peak candidate rows {}", report.peak_candidate_memory_rows);
    println!("wall time {:.3?}", report.wall_time);
    println!("min pairwise hamming {}", stats.min_pairwise);
    println!("mean pairwise hamming {} = {:.4}", stats.mean_pairwise, stats.mean_as_f64());
    Ok(())
}

fn cmd_stats(path: &Path) -> Result<(), Failure> {
    let set = read_existing_perms(path)?;
    let stats = diversity(&set)?;
    println!("rows {}  n_p {}  n_f {}  mode {}  seed {}", set.len(), set.n_p(), set.n_f(), set.mode(), set.seed());
    println!("pairs {}", stats.pair_count());
    println!("min pairwise hamming {}", stats.min_pairwise);
    println!("mean pairwise hamming {} = {:.4}", stats.mean_pairwise, stats.mean_as_f64());
    println!("histogram (distance count):");
    for (d, count) in stats.histogram.iter().enumerate().filter(|(_, &c)| c > 0) {
        println!("  {d:>3} {count}");
    }
    Ok(())
}

fn cmd_build(args: BuildArgs) -> Result<(), Failure> {
    if !(0.0..=1.0).contains(&args.max_skip) {
        return Err(Failure::Usage(format!("--max-skip {} is not a fraction", args.max_skip)));
    }
    if !(0.0..=1.0).contains(&args.gray_prob) {
        return Err(Failure::Usage(format!("--gray-prob {} is not a probability", args.gray_prob)));
    }
    let set = read_existing_perms(&args.perm_file)?;
    let list = std::fs::read_to_string(&args.tuples)
        .map_err(|e| Error::Io { path: args.tuples.clone(), source: e })?;
    let entries = parse_tuple_list(&list)?;

    let mut cfg = BuildConfig::new(&args.frames_dir, &args.out, args.seed);
    cfg.grid = GridSpec::new(args.crop, args.grid.0, args.grid.1, args.patch)?;
    cfg.regime = args.regime;
    cfg.fixed_indices = args.indices;
    cfg.gray_prob = args.gray_prob;
    cfg.gray_scope = args.gray_scope;
    cfg.center_crop = args.center_crop;
    cfg.epoch = args.epoch;
    cfg.encoding = args.encoding;
    cfg.shard_size = args.shard_size;
    cfg.perm_file = args.perm_file.display().to_string();
    cfg.flags = std::env::args().skip(1).collect();
    cfg.png_debug = args.png_debug;

    let summary = build_dataset(&cfg, &entries, &set)?;
    info!("manifest written to {}", args.out.display());
    println!(
        "tuples {}  built {}  skipped {}  shards {}",
        summary.built + summary.skipped,
        summary.built,
        summary.skipped,
        summary.manifest.shards.len()
    );
    if summary.skipped_fraction() > args.max_skip {
        return Err(Failure::TooManySkips {
            skipped: summary.skipped,
            total: summary.built + summary.skipped,
            limit: args.max_skip,
        });
    }
    Ok(())
}

fn cmd_verify(out: &Path, perm_file: &Path) -> Result<(), Failure> {
    let set = read_existing_perms(perm_file)?;
    let summary = verify_dataset(out, &set)?;
    println!("ok: {} records in {} shards", summary.records, summary.shards);
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let (n_p, n_f) = (args.shape.np, args.shape.nf);
    let sp_space = space_size_spatial(n_p, n_f)?;
    let orig_space = space_size_unconstrained(n_p * n_f)?;
    if orig_space % sp_space == 0 {
        println!("space per step: spatial {sp_space}, unconstrained {orig_space}, ratio {}x", orig_space / sp_space);
    } else {
        println!(
            "space per step: spatial {sp_space}, unconstrained {orig_space}, ratio {:.3}x",
            orig_space as f64 / sp_space as f64
        );
    }

    println!(
        "{:>8} {:>20} {:>12} {:>16} {:>16} {:>10} {:>8} {:>10}",
        "seed", "mode", "wall_ms", "cand/step", "cand_total", "peak_rows", "min_ham", "mean_ham"
    );
    for &seed in &args.seeds {
        let orig = match (args.exact, args.budget) {
            (true, Some(budget)) => SamplerParams::exact(args.n, n_p, n_f, seed).with_budget(budget),
            _ => SamplerParams::pool(args.n, n_p, n_f, seed, args.pool_size),
        };
        for params in [SamplerParams::spatial(args.n, n_p, n_f, seed), orig] {
            let (set, report) = generate(&params)?;
            let stats = diversity(&set)?;
            let per_step = report.per_step_candidates.first().copied().unwrap_or(0);
            println!(
                "{:>8} {:>20} {:>12.3} {:>16} {:>16} {:>10} {:>8} {:>10.4}",
                seed,
                report.mode.as_str(),
                report.wall_time.as_secs_f64() * 1e3,
                per_step,
                report.candidates_evaluated,
                report.peak_candidate_memory_rows,
                stats.min_pairwise,
                stats.mean_as_f64()
            );
        }
    }
    Ok(())
}

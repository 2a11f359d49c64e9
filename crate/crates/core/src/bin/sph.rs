//! Command-line driver: compute, resume, inspect, plot, selfcheck.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};

use clap::{Args, Parser, Subcommand, ValueEnum};

use sph_core::checkpoint::{parse_checkpoint, CheckpointError};
use sph_core::cliques::RetentionPolicy;
use sph_core::edgefile::EdgeFileError;
use sph_core::intervals::{read_intervals, IntervalFileError};
use sph_core::plot::{render_svg, render_text, PlotOptions};
use sph_core::points::{DistanceMatrix, EdgeSource, InputError, PointCloud, PointMetric};
use sph_core::selfcheck;
use sph_core::session::{RunOutcome, Session, SessionConfig, SessionError, Summary};
use sph_core::{compute_edges, external_sort_edges};

const EXIT_SELFCHECK_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_CONTRACT: u8 = 4;
const EXIT_CHECKPOINT: u8 = 5;
const EXIT_INTERRUPTED: u8 = 130;

#[derive(Parser)]
#[command(
    name = "sph",
    version,
    about = "Streaming persistent homology of Vietoris-Rips filtrations",
    long_about = "Streaming persistent homology of Vietoris-Rips filtrations.\n\
                  Edges live in a sorted on-disk file and are consumed one at a \
                  time; closed intervals are spilled to disk as they finish; the \
                  whole state checkpoints and resumes deterministically.\n\n\
                  Exit codes:\n  \
                  0   success\n  \
                  1   selfcheck found a mismatch\n  \
                  2   input error\n  \
                  3   I/O error or corrupt data file\n  \
                  4   contract violation (internal invariant broke)\n  \
                  5   checkpoint mismatch (version or fingerprint)\n  \
                  130 interrupted (a final checkpoint is written first when \
                  --checkpoint is set)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: distances -> sorted edge file -> streamed
    /// cliques -> persistence -> interval file.
    Compute(ComputeArgs),
    /// Continue a checkpointed run against the same sorted edge file.
    Resume(ResumeArgs),
    /// Print what a checkpoint holds without resuming it.
    Inspect(InspectArgs),
    /// Render an interval file as text or SVG barcodes.
    Plot(PlotArgs),
    /// Run the randomized engine-vs-oracle equivalence suites.
    Selfcheck(SelfcheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    /// Euclidean distance over point rows.
    Euclidean,
    /// Manhattan distance over point rows.
    Manhattan,
    /// Input is already a lower-triangular distance matrix.
    Matrix,
}

#[derive(Args)]
struct ComputeArgs {
    /// Point file (CSV or whitespace-delimited), or a lower-triangular
    /// distance matrix with --metric matrix.
    #[arg(long)]
    input: PathBuf,
    /// Skip the first input line.
    #[arg(long)]
    has_header: bool,
    #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
    metric: MetricArg,
    /// Distance cutoff used when generating the edge file.
    #[arg(long)]
    max_epsilon: f64,
    /// Skeleton cap: simplices up to this dimension enter the stream.
    #[arg(long, default_value_t = 3)]
    max_dim: usize,
    /// Output path for the sorted edge file.
    #[arg(long)]
    edges: PathBuf,
    /// Output path for the interval file.
    #[arg(long)]
    intervals: PathBuf,
    /// Checkpoint file path; rewritten at every checkpoint.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Checkpoint after every N processed edges (requires --checkpoint).
    #[arg(long, requires = "checkpoint")]
    checkpoint_every: Option<u64>,
    /// Stop once the next edge is longer than this (defaults to
    /// --max-epsilon).
    #[arg(long)]
    stop_epsilon: Option<f64>,
    /// External-sort memory budget in bytes.
    #[arg(long, default_value_t = 64 * 1024 * 1024)]
    memory_budget: usize,
    /// Also write representative cycles to <intervals>.reps.
    #[arg(long)]
    representatives: bool,
}

#[derive(Args)]
struct ResumeArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// The same sorted edge file the checkpointed run used.
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    intervals: PathBuf,
    #[arg(long)]
    stop_epsilon: f64,
    /// Keep checkpointing every N edges while resumed.
    #[arg(long)]
    checkpoint_every: Option<u64>,
    #[arg(long)]
    representatives: bool,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    checkpoint: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotFormat {
    Txt,
    Svg,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    intervals: PathBuf,
    #[arg(long, value_enum, default_value_t = PlotFormat::Txt)]
    format: PlotFormat,
    /// Drop closed intervals shorter than this.
    #[arg(long, default_value_t = 0.0)]
    min_length: f64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelfcheckArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 25)]
    trials: u64,
}

#[derive(Debug)]
enum CliError {
    Input(InputError),
    EdgeFile(EdgeFileError),
    Intervals(IntervalFileError),
    Checkpoint(CheckpointError),
    Session(SessionError),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(e) => write!(f, "{e}"),
            CliError::EdgeFile(e) => write!(f, "{e}"),
            CliError::Intervals(e) => write!(f, "{e}"),
            CliError::Checkpoint(e) => write!(f, "{e}"),
            CliError::Session(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        CliError::Input(e)
    }
}
impl From<EdgeFileError> for CliError {
    fn from(e: EdgeFileError) -> Self {
        CliError::EdgeFile(e)
    }
}
impl From<IntervalFileError> for CliError {
    fn from(e: IntervalFileError) -> Self {
        CliError::Intervals(e)
    }
}
impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Checkpoint(e)
    }
}
impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        CliError::Session(e)
    }
}
impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn edge_file_exit(e: &EdgeFileError) -> u8 {
    match e {
        EdgeFileError::BudgetTooSmall { .. } => EXIT_INPUT,
        _ => EXIT_IO,
    }
}

fn checkpoint_exit(e: &CheckpointError) -> u8 {
    match e {
        CheckpointError::Io(_) => EXIT_IO,
        CheckpointError::EdgeFile(inner) => edge_file_exit(inner),
        _ => EXIT_CHECKPOINT,
    }
}

fn exit_code(e: &CliError) -> u8 {
    match e {
        CliError::Input(_) => EXIT_INPUT,
        CliError::EdgeFile(e) => edge_file_exit(e),
        CliError::Intervals(_) => EXIT_IO,
        CliError::Checkpoint(e) => checkpoint_exit(e),
        CliError::Io(_) => EXIT_IO,
        CliError::Session(e) => match e {
            SessionError::EdgeFile(e) => edge_file_exit(e),
            SessionError::Clique(_) | SessionError::Persistence(_) => EXIT_CONTRACT,
            SessionError::Intervals(_) => EXIT_IO,
            SessionError::Checkpoint(e) => checkpoint_exit(e),
            SessionError::Sidecar(_) => EXIT_IO,
            SessionError::AlreadyFinalized => EXIT_CONTRACT,
        },
    }
}

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

extern "C" fn on_sigint(_: libc::c_int) {
    INTERRUPTED.store(true, Ordering::Relaxed);
}

fn install_sigint_handler() {
    unsafe {
        libc::signal(
            libc::SIGINT,
            on_sigint as extern "C" fn(libc::c_int) as usize as libc::sighandler_t,
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compute(args) => cmd_compute(args),
        Command::Resume(args) => cmd_resume(args),
        Command::Inspect(args) => cmd_inspect(args),
        Command::Plot(args) => cmd_plot(args),
        Command::Selfcheck(args) => cmd_selfcheck(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("sph: error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_source(args: &ComputeArgs) -> Result<EdgeSource, CliError> {
    let text = std::fs::read_to_string(&args.input)?;
    let source = match args.metric {
        MetricArg::Matrix => EdgeSource::Matrix(DistanceMatrix::parse(&text, args.has_header)?),
        MetricArg::Euclidean => EdgeSource::Points {
            cloud: PointCloud::parse(&text, args.has_header)?,
            metric: PointMetric::Euclidean,
        },
        MetricArg::Manhattan => EdgeSource::Points {
            cloud: PointCloud::parse(&text, args.has_header)?,
            metric: PointMetric::Manhattan,
        },
    };
    Ok(source)
}

fn cmd_compute(args: ComputeArgs) -> Result<u8, CliError> {
    let source = load_source(&args)?;
    let n = source.vertex_count() as u32;

    let parent = args
        .edges
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let unsorted = tempfile::Builder::new()
        .prefix("edges-unsorted-")
        .tempfile_in(&parent)?;
    let unsorted_file = compute_edges(&source, args.max_epsilon, unsorted.path())?;
    let sort = external_sort_edges(&unsorted_file, &args.edges, args.memory_budget)?;
    drop(unsorted);
    println!(
        "edge file: {} records in {} sorted runs -> {}",
        sort.edge_file.record_count,
        sort.runs,
        args.edges.display()
    );

    let config = SessionConfig {
        checkpoint_path: args.checkpoint.clone(),
        checkpoint_every: args.checkpoint_every,
        keep_representatives: args.representatives,
    };
    let mut session = Session::start(&args.edges, n, args.max_dim, &args.intervals, config)?;
    install_sigint_handler();
    let stop = args.stop_epsilon.unwrap_or(args.max_epsilon);
    let outcome = session.run(stop, None, Some(&INTERRUPTED))?;
    if outcome == RunOutcome::Interrupted {
        eprintln!("interrupted; checkpoint written");
        return Ok(EXIT_INTERRUPTED);
    }
    let summary = session.finalize()?;
    print_summary(&summary);
    Ok(0)
}

fn cmd_resume(args: ResumeArgs) -> Result<u8, CliError> {
    let config = SessionConfig {
        checkpoint_path: Some(args.checkpoint.clone()),
        checkpoint_every: args.checkpoint_every,
        keep_representatives: args.representatives,
    };
    let mut session = Session::resume(&args.checkpoint, &args.edges, &args.intervals, config)?;
    install_sigint_handler();
    let outcome = session.run(args.stop_epsilon, None, Some(&INTERRUPTED))?;
    if outcome == RunOutcome::Interrupted {
        eprintln!("interrupted; checkpoint written");
        return Ok(EXIT_INTERRUPTED);
    }
    let summary = session.finalize()?;
    print_summary(&summary);
    Ok(0)
}

fn cmd_inspect(args: InspectArgs) -> Result<u8, CliError> {
    let ck = parse_checkpoint(&args.checkpoint)?;
    println!("checkpoint:        {}", args.checkpoint.display());
    println!("cursor offset:     {}", ck.cursor_offset);
    println!("epsilon reached:   {}", ck.last_epsilon);
    println!("edges processed:   {}", ck.edges_processed);
    println!("vertices:          {}", ck.registry.vertex_count());
    println!("max dimension:     {}", ck.state.max_dim());
    println!("maximal cliques:   {}", ck.registry.clique_count());
    println!("clique sizes:");
    for (size, count) in ck.registry.size_histogram() {
        println!("  {size:>4} vertices: {count}");
    }
    println!("closed intervals:  {}", ck.state.closed_count());
    let betti = ck.state.betti_numbers();
    for (dim, count) in betti.iter().enumerate() {
        println!("open H{dim}:           {count}");
    }
    println!("#: cursor_offset={}", ck.cursor_offset);
    println!("#: last_epsilon={}", ck.last_epsilon);
    println!("#: edges_processed={}", ck.edges_processed);
    println!("#: n={}", ck.registry.vertex_count());
    println!("#: registry_cliques={}", ck.registry.clique_count());
    println!("#: closed_count={}", ck.state.closed_count());
    for (dim, count) in betti.iter().enumerate() {
        println!("#: open_dim{dim}={count}");
    }
    Ok(0)
}

fn cmd_plot(args: PlotArgs) -> Result<u8, CliError> {
    let intervals = read_intervals(&args.intervals)?;
    let options = PlotOptions {
        min_length: args.min_length,
        ..PlotOptions::default()
    };
    let rendered = match args.format {
        PlotFormat::Txt => render_text(&intervals, &options),
        PlotFormat::Svg => render_svg(&intervals, &options),
    };
    match &args.out {
        Some(path) => std::fs::write(path, rendered)?,
        None => print!("{rendered}"),
    }
    Ok(0)
}

fn cmd_selfcheck(args: SelfcheckArgs) -> Result<u8, CliError> {
    println!("selfcheck seed={} trials={}", args.seed, args.trials);
    if args.trials == 0 {
        println!("warning: trials=0, nothing was checked (vacuous pass)");
        return Ok(0);
    }
    let mut failed = false;
    for result in [
        selfcheck::clique_suite(args.seed, args.trials, RetentionPolicy::SubsetOfNew),
        selfcheck::stream_suite(args.seed, args.trials),
        selfcheck::barcode_suite(args.seed, args.trials),
    ] {
        match &result.failure {
            None => println!("suite {:<8} PASS ({} trials)", result.name, result.trials),
            Some(dump) => {
                failed = true;
                println!("suite {:<8} FAIL", result.name);
                println!("--- counterexample ---");
                println!("{dump}");
            }
        }
    }
    Ok(if failed { EXIT_SELFCHECK_FAILED } else { 0 })
}

fn print_summary(s: &Summary) {
    println!("vertices:           {}", s.n);
    println!("max dimension:      {}", s.max_dim);
    println!("edges processed:    {}", s.edges_processed);
    println!("epsilon reached:    {}", s.last_epsilon);
    println!("simplices consumed: {}", s.simplices_consumed);
    println!(
        "intervals:          {} closed ({} zero-length), {} open, {} records written",
        s.closed_count,
        s.zero_length_closed,
        s.open_by_dim.iter().sum::<usize>(),
        s.interval_records
    );
    for dim in 0..s.max_dim {
        let longest = match &s.longest_by_dim[dim] {
            Some(iv) if iv.is_open() => format!("longest [{}, inf)", iv.birth),
            Some(iv) => format!("longest [{}, {}]", iv.birth, iv.death),
            None => "no intervals".to_string(),
        };
        println!(
            "  H{dim}: {} closed, {} open, {longest}",
            s.closed_by_dim[dim], s.open_by_dim[dim]
        );
    }
    println!(
        "registry:           {} maximal cliques now, peak {}",
        s.registry_cliques, s.peak_registry
    );
    println!(
        "streaming:          max batch {}, peak live entries outside state {}",
        s.max_batch, s.peak_live_entries
    );
    println!(
        "cascades:           {} stored, max len {}, mean len {:.3}",
        s.cascade_stats.count,
        s.cascade_stats.max_len,
        s.cascade_stats.mean_len()
    );

    println!("#: n={}", s.n);
    println!("#: max_dim={}", s.max_dim);
    println!("#: edges_processed={}", s.edges_processed);
    println!("#: last_epsilon={}", s.last_epsilon);
    println!("#: simplices_consumed={}", s.simplices_consumed);
    println!("#: closed_count={}", s.closed_count);
    println!("#: zero_length_closed={}", s.zero_length_closed);
    println!("#: interval_records={}", s.interval_records);
    for dim in 0..s.max_dim {
        println!("#: closed_dim{dim}={}", s.closed_by_dim[dim]);
        println!("#: open_dim{dim}={}", s.open_by_dim[dim]);
        if let Some(iv) = &s.longest_by_dim[dim] {
            println!("#: longest_dim{dim}_birth={}", iv.birth);
            println!("#: longest_dim{dim}_death={}", iv.death);
        }
    }
    println!("#: registry_cliques={}", s.registry_cliques);
    println!("#: peak_registry={}", s.peak_registry);
    println!("#: max_batch={}", s.max_batch);
    println!("#: peak_live_entries={}", s.peak_live_entries);
    println!("#: cascades={}", s.cascade_stats.count);
    println!("#: cascade_max={}", s.cascade_stats.max_len);
    println!("#: cascade_mean={}", s.cascade_stats.mean_len());
}

//! Command-line front end: `synth`, `dimest`, `build` and `run`.
//!
//! Exit codes: 0 on success, 2 for usage, configuration or input-data
//! errors, 1 when results cannot be written or an internal error occurs.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::covdim::{dimension_profiles, write_profiles_csv, ProfileConfig, DEFAULT_CENTER_CAP, DEFAULT_NUM_RADII};
use crate::dataset::PointSet;
use crate::error::Error;
use crate::harness::{level_profile, run_experiment};
use crate::synth;
use crate::trees::{BuildConfig, PartitionTree, SplitRule, DEFAULT_MAX_DEPTH, DEFAULT_OUTLIER_RATIO};

pub const OUTPUT_DIR_ENV: &str = "SPATREE_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "spatree", version, about = "Spatial partition trees and intrinsic-dimension diagnostics")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Directory for outputs that are not given an explicit path.
    #[arg(long, global = true, env = OUTPUT_DIR_ENV)]
    pub output_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic data set as CSV plus a metadata sidecar.
    Synth(SynthArgs),
    /// Local covariance dimension profile of a data set.
    Dimest(DimestArgs),
    /// Build one tree, save it as JSON lines and print its level profile.
    Build(BuildArgs),
    /// Run an experiment from a config file or a built-in preset.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Sinusoid,
    Swissroll,
    Affine,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub generator: Generator,
    #[arg(long, default_value_t = synth::SINUSOID_DEFAULT_N)]
    pub n: usize,
    /// Ambient dimension (sinusoid, affine).
    #[arg(long = "D", visible_alias = "dim", default_value_t = 10)]
    pub dim: usize,
    /// Subspace dimension (affine).
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Noise standard deviation (swissroll).
    #[arg(long, default_value_t = synth::SWISSROLL_DEFAULT_NOISE)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path (default: `<output-dir>/<generator>.csv`).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DimestArgs {
    /// Input CSV.
    pub input: PathBuf,
    #[arg(long, num_args = 1.., default_values_t = [0.1, 0.01])]
    pub epsilon: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_NUM_RADII)]
    pub num_radii: usize,
    /// Maximum number of ball centers.
    #[arg(long, default_value_t = DEFAULT_CENTER_CAP)]
    pub centers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path (default: `<output-dir>/dimest.csv`).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Input CSV.
    pub input: PathBuf,
    /// One of dyadic, kd, rp, pd, 2m.
    #[arg(long, default_value = "rp")]
    pub rule: String,
    #[arg(long, default_value_t = 1)]
    pub min_size: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    pub max_depth: usize,
    /// Outlier ratio for the distance split.
    #[arg(long, default_value_t = DEFAULT_OUTLIER_RATIO)]
    pub c: f64,
    #[arg(long)]
    pub no_distance_split: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path (default: `<output-dir>/tree.jsonl`).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Config file (JSON).
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in preset: fig4_dimest, fig5_slopes or swissroll_dimest.
    #[arg(long)]
    pub preset: Option<String>,
}

/// A failed command: the error and the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

impl Failure {
    fn input(error: Error) -> Self {
        Failure { code: 2, error }
    }

    fn output(error: Error) -> Self {
        Failure { code: 1, error }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn out_dir(cli_dir: &Option<PathBuf>) -> PathBuf {
    cli_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn ensure_parent(path: &Path) -> std::result::Result<(), Failure> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => {
            std::fs::create_dir_all(p).map_err(|e| Failure::output(Error::io(p, e)))
        }
        _ => Ok(()),
    }
}

fn cmd_synth(args: &SynthArgs, dir: &Option<PathBuf>) -> CmdResult {
    let data = match args.generator {
        Generator::Sinusoid => synth::sinusoid_manifold(args.n, args.dim, args.seed),
        Generator::Swissroll => synth::noisy_swissroll(args.n, args.noise, args.seed),
        Generator::Affine => synth::affine_cloud(args.n, args.dim, args.d, args.seed),
    }
    .map_err(Failure::input)?;
    let name = args.generator.to_possible_value().expect("no skipped variants").get_name().to_string();
    let path = args.out.clone().unwrap_or_else(|| out_dir(dir).join(format!("{name}.csv")));
    ensure_parent(&path)?;
    data.save(&path).map_err(Failure::output)?;
    println!("wrote {} ({} x {})", path.display(), data.len(), data.dim());
    Ok(())
}

fn cmd_dimest(args: &DimestArgs, dir: &Option<PathBuf>) -> CmdResult {
    let data = PointSet::load(&args.input).map_err(Failure::input)?;
    let config = ProfileConfig {
        num_radii: args.num_radii,
        epsilons: args.epsilon.clone(),
        center_cap: args.centers,
    };
    let profiles = dimension_profiles(&data, &config, args.seed).map_err(Failure::input)?;
    let path = args.out.clone().unwrap_or_else(|| out_dir(dir).join("dimest.csv"));
    ensure_parent(&path)?;
    let mut buf = Vec::new();
    write_profiles_csv(&profiles, &mut buf).expect("writing to memory");
    std::fs::write(&path, buf).map_err(|e| Failure::output(Error::io(&path, e)))?;
    println!("wrote {} ({} profiles)", path.display(), profiles.len());
    Ok(())
}

fn cmd_build(args: &BuildArgs, dir: &Option<PathBuf>) -> CmdResult {
    let data = PointSet::load(&args.input).map_err(Failure::input)?;
    let rule: SplitRule = args.rule.parse().map_err(Failure::input)?;
    let config = BuildConfig::new(rule)
        .with_min_size(args.min_size)
        .with_max_depth(args.max_depth)
        .with_outlier_ratio(args.c)
        .with_distance_split(!args.no_distance_split)
        .with_seed(args.seed);
    let tree = PartitionTree::build(&data, &config).map_err(Failure::input)?;
    let path = args.out.clone().unwrap_or_else(|| out_dir(dir).join("tree.jsonl"));
    ensure_parent(&path)?;
    let mut buf = Vec::new();
    tree.write_jsonl(&mut buf).map_err(Failure::output)?;
    std::fs::write(&path, buf).map_err(|e| Failure::output(Error::io(&path, e)))?;

    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    let io = |e| Failure::output(Error::io("<stdout>", e));
    writeln!(w, "level,max_diam_sq,avg_diam_sq,cells,dist_splits").map_err(io)?;
    for s in level_profile(&tree).levels {
        writeln!(w, "{},{},{},{},{}", s.level, s.max_diam_sq, s.avg_diam_sq, s.cells, s.dist_splits).map_err(io)?;
    }
    eprintln!("wrote {} ({} nodes)", path.display(), tree.nodes().len());
    Ok(())
}

fn cmd_run(args: &RunArgs, dir: &Option<PathBuf>) -> CmdResult {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), _) => RunConfig::load(path),
        (None, Some(name)) => RunConfig::preset(name),
        (None, None) => unreachable!("clap requires one of them"),
    }
    .map_err(Failure::input)?;
    if let Some(d) = dir {
        config.output_dir = d.clone();
    }
    let report = run_experiment(&config).map_err(Failure::input)?;
    report.write_to(&config.output_dir).map_err(Failure::output)?;
    println!("wrote results to {}", config.output_dir.display());
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let pool = match cli.workers {
        Some(0) => {
            eprintln!("error: --workers must be at least 1");
            return 2;
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 1;
        }
    };
    let dir = cli.output_dir.clone();
    let result = pool.install(|| match &cli.command {
        Command::Synth(a) => cmd_synth(a, &dir),
        Command::Dimest(a) => cmd_dimest(a, &dir),
        Command::Build(a) => cmd_build(a, &dir),
        Command::Run(a) => cmd_run(a, &dir),
    });
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.error);
            f.code
        }
    }
}

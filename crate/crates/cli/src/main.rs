use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use rsma_dfrc::harness::{self, RecordStatus, RunManifest, SweepPlan};
use rsma_dfrc::radar::write_beampattern_csv;
use rsma_dfrc::scenario::{validate, AccessMode, ConfigError, RawConfig, ValidatedScenario};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "dfrc", version, about = "RSMA/SDMA/NOMA DFRC precoder optimization and link-level simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// EWSR vs. beampattern RMSE sweep over λ, modes and mobility profiles.
    Tradeoff(SweepArgs),
    /// Weighted throughput of the optimized precoders in link-level simulation.
    Lls(SweepArgs),
    /// Transmit beampattern of one solved point.
    Beampattern(BeampatternArgs),
    /// Check a configuration file and print the resolved configuration.
    ValidateConfig(CommonArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML configuration; defaults apply to anything not set.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Channel realizations per point.
    #[arg(long)]
    realizations: Option<usize>,
    /// Comma-separated access modes (rsma, sdma, noma).
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<String>>,
    /// Comma-separated mobility profiles.
    #[arg(long, value_delimiter = ',')]
    profiles: Option<Vec<String>>,
    /// Comma-separated λ values.
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Run only realizations START..END of the sweep.
    #[arg(long, value_name = "START:END")]
    shard: Option<String>,
}

#[derive(Args)]
struct BeampatternArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value = "rsma")]
    mode: String,
    #[arg(long, default_value = "high-mobility")]
    profile: String,
    #[arg(long, default_value_t = 0)]
    realization: usize,
}

enum Failure {
    Config(String),
    Solver(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn config_failure(e: ConfigError) -> Failure {
    Failure::Config(e.to_string())
}

fn parse_mode(s: &str) -> Result<AccessMode, Failure> {
    AccessMode::parse(s).ok_or_else(|| Failure::Config(format!("unknown access mode {s:?}")))
}

fn load(args: &CommonArgs) -> Result<ValidatedScenario, Failure> {
    let mut raw = match &args.config {
        Some(path) => RawConfig::from_file(path).map_err(config_failure)?,
        None => RawConfig::default(),
    };
    if let Some(seed) = args.seed {
        raw.solver.rng_seed = Some(seed);
    }
    if let Some(n) = args.realizations {
        raw.sweep.realizations = Some(n);
    }
    if let Some(modes) = &args.modes {
        raw.sweep.modes = Some(modes.iter().map(|m| parse_mode(m)).collect::<Result<_, _>>()?);
    }
    if let Some(p) = &args.profiles {
        raw.sweep.profiles = Some(p.clone());
    }
    if let Some(l) = &args.lambdas {
        raw.sweep.lambdas = Some(l.clone());
    }
    validate(&raw).map_err(config_failure)
}

fn parse_shard(s: &str) -> Result<std::ops::Range<usize>, Failure> {
    let bad = || Failure::Config(format!("--shard expects START:END, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    if a >= b {
        return Err(bad());
    }
    Ok(a..b)
}

fn sweep_plan(s: &ValidatedScenario, shard: &Option<String>) -> Result<SweepPlan, Failure> {
    let plan = SweepPlan::from_scenario(s);
    match shard {
        Some(text) => Ok(plan.shard(parse_shard(text)?)),
        None => Ok(plan),
    }
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn finish(records: &[harness::RealizationRecord], manifest: RunManifest, out: &Path) -> Result<(), Failure> {
    let path = manifest.write(out).context("writing manifest")?;
    println!("wrote {}", path.display());
    let failed = records.iter().filter(|r| r.status == RecordStatus::SolverFailure).count();
    if failed > 0 {
        return Err(Failure::Solver(format!("{failed} solves failed; see {}", path.display())));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::ValidateConfig(args) => {
            let s = load(&args)?;
            print!("{}", s.to_raw().to_toml());
            Ok(())
        }
        Command::Tradeoff(args) => {
            let s = load(&args.common)?;
            let plan = sweep_plan(&s, &args.shard)?;
            let started = harness::unix_now();
            let (points, records) = harness::run_tradeoff(&s, &plan).map_err(|e| Failure::Config(e.to_string()))?;
            report(&harness::emit_tradeoff(&points, Some(&records), &args.common.out_dir).context("writing results")?);
            finish(&records, RunManifest::new(&s, &plan, &records, started), &args.common.out_dir)
        }
        Command::Lls(args) => {
            let s = load(&args.common)?;
            let plan = sweep_plan(&s, &args.shard)?;
            let started = harness::unix_now();
            let (points, records) = harness::run_lls(&s, &plan).map_err(|e| Failure::Config(e.to_string()))?;
            report(&harness::emit_lls(&points, &args.common.out_dir).context("writing results")?);
            finish(&records, RunManifest::new(&s, &plan, &records, started), &args.common.out_dir)
        }
        Command::Beampattern(args) => {
            let s = load(&args.common)?;
            let mode = parse_mode(&args.mode)?;
            let dump = harness::beampattern_point(&s, &args.profile, mode, args.lambda, args.realization, s.solver.rng_seed)
                .map_err(|e| Failure::Config(e.to_string()))?
                .map_err(|e| Failure::Solver(e.to_string()))?;
            let out = &args.common.out_dir;
            std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
            let stem = format!("{}_{}_{}", args.profile, args.mode.to_ascii_lowercase(), args.lambda);
            let mut written = Vec::new();
            for (prefix, gains) in [("beampattern", &dump.gains), ("desired", &dump.desired)] {
                let path = out.join(format!("{prefix}_{stem}.csv"));
                let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                write_beampattern_csv(&dump.angles, gains, std::io::BufWriter::new(file)).with_context(|| format!("writing {}", path.display()))?;
                written.push(path);
            }
            report(&written);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("solver failure: {m}");
            ExitCode::from(EXIT_SOLVER)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wedgetri::BinConfig;
use wedgetri_cli::{
    cmd_analyze, cmd_exact, cmd_generate, cmd_ksamples, cmd_tristats, GenerateConfig, Model, RunConfig,
    TriStatsConfig,
};

#[derive(Parser)]
#[command(name = "wedgetri", version, about = "Wedge-sampling clustering coefficients and triangle counts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate binned clustering coefficients by wedge sampling.
    Analyze(AnalyzeArgs),
    /// Exact counts by triangle enumeration, in the summary format.
    Exact(ExactArgs),
    /// Degree assortativity of uniformly sampled triangles.
    Tristats(TriStatsArgs),
    /// Samples per bin for a target error and confidence.
    Ksamples(KArgs),
    /// Write a synthetic edge list.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct BinArgs {
    #[arg(long, default_value_t = 2)]
    tau: u64,
    #[arg(long, default_value_t = 2.0)]
    omega: f64,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    bins: BinArgs,
    /// Samples per bin; overridden by --eps and --delta when both are given.
    #[arg(long, default_value_t = 10_000)]
    k: u64,
    #[arg(long, requires = "delta")]
    eps: Option<f64>,
    #[arg(long, requires = "eps")]
    delta: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    reducers: usize,
    #[arg(long, default_value_t = 16)]
    splits: usize,
    #[arg(long)]
    skip_2b: bool,
    #[arg(long)]
    skip_3a: bool,
    #[arg(long)]
    keep_intermediates: bool,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    bins: BinArgs,
}

#[derive(Args)]
struct TriStatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    k: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    reducers: usize,
    #[arg(long, default_value_t = 16)]
    splits: usize,
    /// Use every wedge instead of k samples.
    #[arg(long)]
    exhaustive: bool,
    #[arg(long)]
    keep_intermediates: bool,
}

#[derive(Args)]
struct KArgs {
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Skg,
    Er,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Skg)]
    model: ModelArg,
    #[arg(long, default_value_t = 16)]
    scale: u32,
    #[arg(long, default_value_t = 16)]
    edge_factor: u64,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Analyze(a) => {
            let k = match (a.eps, a.delta) {
                (Some(eps), Some(delta)) => cmd_ksamples(eps, delta)?,
                _ => a.k,
            };
            let cfg = RunConfig {
                input: a.input,
                out: a.out,
                tau: a.bins.tau,
                omega: a.bins.omega,
                k,
                seed: a.seed,
                reducers: a.reducers,
                splits: a.splits,
                skip_2b: a.skip_2b,
                skip_3a: a.skip_3a,
                keep_intermediates: a.keep_intermediates,
            };
            let report = cmd_analyze(&cfg)?;
            let g = report.run.global;
            println!("c\t{}\nt\t{}\np\t{}", g.c, g.t, g.p);
        }
        Command::Exact(a) => {
            let bins = BinConfig::new(a.bins.tau, a.bins.omega)?;
            let stats = cmd_exact(&a.input, &a.out, &bins)?;
            let c = stats.cc.map_or(0.0, |c| *c.numer() as f64 / *c.denom() as f64);
            println!("c\t{}\nt\t{}\np\t{}", c, stats.t, stats.p);
        }
        Command::Tristats(a) => {
            let report = cmd_tristats(&TriStatsConfig {
                input: a.input,
                out: a.out,
                k: a.k,
                seed: a.seed,
                reducers: a.reducers,
                splits: a.splits,
                exhaustive: a.exhaustive,
                keep_intermediates: a.keep_intermediates,
            })?;
            println!("triangles sampled\t{}", report.samples.len());
        }
        Command::Ksamples(a) => println!("{}", cmd_ksamples(a.eps, a.delta)?),
        Command::Generate(a) => {
            let report = cmd_generate(&GenerateConfig {
                model: match a.model {
                    ModelArg::Skg => Model::Skg,
                    ModelArg::Er => Model::Er,
                },
                scale: a.scale,
                edge_factor: a.edge_factor,
                noise: a.noise,
                seed: a.seed,
                out: a.out,
            })?;
            println!("candidates\t{}\nedges\t{}", report.candidates, report.edges);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mcca::baselines::Method;
use mcca::metrics::parse_ranks;
use mcca::mcca::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use mcca::synth::SynthConfig;
use mcca::Result;
use mcca_cli::{
    cmd_alpha_scan, cmd_fit, cmd_info, cmd_rer_curve, cmd_synth, exit_code, ExperimentSpec, RankGrid, SynthSpec,
};

/// Multilinear common component analysis experiments.
///
/// Set MCCA_LOG (error, warn, info, debug) to control logging.
#[derive(Parser)]
#[command(name = "mcca", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one method at one rank tuple; writes model.mcca, report.csv, summary.csv.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Ranks per mode, e.g. 8,8 (a single value for pca/cca).
        #[arg(long)]
        ranks: String,
    },
    /// Contraction ratios over a rank grid; writes alpha_scan.csv.
    AlphaScan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// RER against CR for each method over a rank grid; writes rer_curve.csv.
    RerCurve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        /// Ranks for pca/cca, e.g. 1-50:5 (default: product of each grid point).
        #[arg(long)]
        vector_grid: Option<String>,
    },
    /// Generate a seeded synthetic grouped dataset.
    Synth {
        /// Sample shape, e.g. 20,20.
        #[arg(long)]
        shape: String,
        /// Planted subspace ranks per mode.
        #[arg(long)]
        ranks: String,
        #[arg(long, default_value_t = 5)]
        groups: usize,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Standard deviation of additive noise (signal has unit mean square).
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Describe a manifest (.toml) or a model file.
    Info { path: PathBuf },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated: mcca, mpca, pca, cca.
    #[arg(long, default_value = "mcca")]
    methods: String,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write SVG line charts.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct GridArgs {
    /// Per-mode rank lists separated by ';', e.g. "1-20;1,5,10".
    #[arg(long)]
    grid: String,
    /// Use the first list for both of the first two modes.
    #[arg(long)]
    tie: bool,
}

fn spec(common: Common, grid: RankGrid) -> Result<ExperimentSpec> {
    let methods = common
        .methods
        .split(',')
        .filter(|m| !m.trim().is_empty())
        .map(str::parse::<Method>)
        .collect::<Result<Vec<_>>>()?;
    let mut spec = ExperimentSpec::new(common.manifest, grid, common.out);
    spec.methods = methods;
    spec.tol = common.tol;
    spec.max_iter = common.max_iter;
    spec.svg = common.svg;
    Ok(spec)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { common, ranks } => {
            let spec = spec(common, RankGrid::single(parse_ranks(&ranks)?))?;
            let out = cmd_fit(&spec)?;
            println!(
                "{} ranks {}: {} iterations{}, rer {:.6e}, cr {:.6e}, {} parameters",
                out.record.method,
                out.record.ranks_label(),
                out.iterations,
                if out.converged { "" } else { " (not converged)" },
                out.record.rer,
                out.record.cr,
                out.record.params
            );
            println!("wrote {} and {}", out.model_path.display(), out.report_path.display());
        }
        Command::AlphaScan { common, grid } => {
            let spec = spec(common, RankGrid::parse(&grid.grid, grid.tie)?)?;
            let scan = cmd_alpha_scan(&spec)?;
            for (k, ok) in scan.monotone.iter().enumerate() {
                println!(
                    "alpha_{} non-decreasing in R{}: {}",
                    k + 1,
                    k + 1,
                    if *ok { "yes" } else { "no" }
                );
            }
            println!("wrote {} rows to {}", scan.rows.len(), scan.csv_path.display());
        }
        Command::RerCurve {
            common,
            grid,
            vector_grid,
        } => {
            let mut spec = spec(common, RankGrid::parse(&grid.grid, grid.tie)?)?;
            if let Some(v) = vector_grid {
                spec.vector_ranks = Some(RankGrid::parse(&v, false)?.points().iter().map(|p| p[0]).collect());
            }
            let records = cmd_rer_curve(&spec)?;
            for r in &records {
                let flag = if r.cr > 1.0 { "  (CR > 1)" } else { "" };
                println!("{:<5} {:>10}  cr {:.5}  rer {:.6}{flag}", r.method, r.ranks_label(), r.cr, r.rer);
            }
        }
        Command::Synth {
            shape,
            ranks,
            groups,
            samples,
            noise,
            seed,
            out,
        } => {
            let spec = SynthSpec {
                config: SynthConfig {
                    shape: parse_ranks(&shape)?,
                    ranks: parse_ranks(&ranks)?,
                    groups,
                    samples_per_group: samples,
                    noise,
                    seed,
                },
                out,
            };
            let manifest = cmd_synth(&spec)?;
            println!("wrote {}", manifest.display());
        }
        Command::Info { path } => print!("{}", cmd_info(&path)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MCCA_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

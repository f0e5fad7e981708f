use std::path::PathBuf;
use std::process::ExitCode;

use bathyinv::config::{parse_config, RunConfig};
use bathyinv::run::{run_compare, run_forward, run_generate, run_reconstruct};
use bathyinv::{Error, Result};
use clap::{Args, Parser, Subcommand};

/// Reconstruct a moving channel bottom from surface observations.
#[derive(Parser)]
#[command(name = "bathyinv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize target surface and velocity from a benchmark bottom.
    Generate(RunArgs),
    /// Single forward solve over a benchmark bottom.
    Forward(RunArgs),
    /// Full gradient-descent reconstruction.
    Reconstruct(RunArgs),
    /// Ratio table of the sup-norm of the gradient between two runs.
    Compare { a: PathBuf, b: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// key = value file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    length: Option<String>,
    #[arg(long)]
    cells: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    tmax: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<String>,
    #[arg(long)]
    alpha_f: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    v0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    zeta0: Option<String>,
    #[arg(long)]
    lambda_b: Option<String>,
    #[arg(long)]
    iters: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b_init: Option<String>,
    #[arg(long)]
    bc: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Comma-separated iteration indices to snapshot.
    #[arg(long)]
    snapshot_iterations: Option<String>,
    /// Comma-separated times to snapshot.
    #[arg(long)]
    snapshot_times: Option<String>,
    #[arg(long)]
    pin_endpoints: bool,
    #[arg(long)]
    printed_aplus_form: bool,
    #[arg(long)]
    constant_zeta_bar: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                parse_config(&text)?
            }
            None => RunConfig::default(),
        };
        let overrides = [
            ("profile", &self.profile),
            ("scheme", &self.scheme),
            ("length", &self.length),
            ("cells", &self.cells),
            ("dt", &self.dt),
            ("tmax", &self.tmax),
            ("epsilon", &self.epsilon),
            ("alpha_f", &self.alpha_f),
            ("v0", &self.v0),
            ("zeta0", &self.zeta0),
            ("lambda_b", &self.lambda_b),
            ("iters", &self.iters),
            ("tol", &self.tol),
            ("b_init", &self.b_init),
            ("bc", &self.bc),
            ("out", &self.out),
            ("snapshot_iterations", &self.snapshot_iterations),
            ("snapshot_times", &self.snapshot_times),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.pin_endpoints |= self.pin_endpoints;
        cfg.printed_aplus_form |= self.printed_aplus_form;
        cfg.constant_zeta_bar |= self.constant_zeta_bar;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => {
            for f in run_generate(&args.resolve()?)? {
                println!("{}", f.display());
            }
        }
        Command::Forward(args) => {
            for f in run_forward(&args.resolve()?)? {
                println!("{}", f.display());
            }
        }
        Command::Reconstruct(args) => {
            let (rec, _) = run_reconstruct(&args.resolve()?)?;
            println!("iteration,sup_norm_gradJ,cost_J");
            for r in &rec.history.records {
                println!("{},{:e},{:e}", r.iteration, r.sup_norm, r.cost);
            }
            if rec.history.converged {
                println!("converged");
            }
        }
        Command::Compare { a, b } => print!("{}", run_compare(&a, &b)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use smgauge_cli::config::RunConfig;
use smgauge_cli::verify::{self, Options, Size};
use smgauge_cli::CliError;

#[derive(Parser)]
#[command(name = "smgauge", version, about = "Equivariant Schrödinger maps into H² in the Coulomb gauge")]
struct Cli {
    /// Output directory; overrides `outputs.dir` of a run config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the initial data of a JSON config and write diagnostics.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the verification suites and print a pass/fail table.
    Verify {
        /// Suite name (repeatable, or comma separated). Default: all.
        #[arg(long = "suite", num_args = 0..)]
        suites: Option<Vec<String>>,
        #[arg(long, value_enum, default_value_t = SizeArg::Full)]
        size: SizeArg,
        /// Multiplies every upper-bound threshold.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SizeArg {
    Small,
    Full,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::load(&config)?;
            let summary = smgauge_cli::run::run(&cfg, cli.out.as_deref())?;
            log::info!("wrote {} rows and {} snapshots", summary.rows, summary.snapshots);
            Ok(())
        }
        Command::Verify { suites, size, tolerance_scale, seed } => {
            if !(tolerance_scale.is_finite() && tolerance_scale > 0.0) {
                return Err(CliError::Usage("--tolerance-scale must be positive".into()));
            }
            let selected = verify::select(suites.as_deref())?;
            let size = match size {
                SizeArg::Small => Size::Small,
                SizeArg::Full => Size::Full,
            };
            let opts = Options { size, tolerance_scale, seed, ..Options::default() };
            let reports = verify::run_suites(&selected, &opts);
            let table = verify::render(&reports);
            print!("{table}");
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("verify.txt"), &table)?;
            }
            let failed: usize = reports.iter().map(|r| r.failures()).sum();
            if failed > 0 {
                return Err(CliError::VerifyFailed { failed });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("smgauge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

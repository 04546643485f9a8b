use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use derham::app::{self, exit, DumpFormat, FaultInjection, RunConfig};
use derham::Result;

#[derive(Parser)]
#[command(name = "derham", version, about = "Compatible finite element shallow water and Euler solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file and write diagnostics.csv.
    Run {
        config: PathBuf,
        /// Output directory; overrides DERHAM_OUTPUT_DIR and the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run the built-in invariant checks on the 8², 16², 32² meshes.
    Verify {
        /// Deliberately break an operator to exercise the failure path.
        #[arg(long, value_enum)]
        inject_fault: Option<Fault>,
    },
    /// Print the discrete dispersion relation as kx,ky,omega1,omega2,omega3.
    Dispersion {
        config: PathBuf,
        /// Write to a file instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Dump the initial fields of a config.
    Dump {
        config: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Fault {
    Div,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Vtk,
}

fn resolve_dir(config: &RunConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| {
        let env = std::env::var_os(app::OUTPUT_DIR_ENV).map(PathBuf::from);
        app::output_dir(config, env.as_deref())
    })
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run { config, output_dir } => {
            let config = RunConfig::load(&config)?;
            let dir = resolve_dir(&config, output_dir);
            let summary = app::run(&config, &dir)?;
            println!(
                "wrote {} ({} rows)",
                summary.diagnostics.display(),
                summary.records.len()
            );
            Ok(exit::SUCCESS)
        }
        Command::Verify { inject_fault } => {
            let faults = FaultInjection {
                perturb_div: matches!(inject_fault, Some(Fault::Div)),
            };
            let report = app::verify(faults)?;
            print!("{report}");
            if report.all_passed() {
                println!("all checks passed");
                Ok(exit::SUCCESS)
            } else {
                eprintln!("verification failed");
                Ok(exit::VERIFY_FAILED)
            }
        }
        Command::Dispersion { config, output } => {
            let config = RunConfig::load(&config)?;
            let csv = app::dispersion_csv(&config)?;
            match output {
                Some(path) => std::fs::write(&path, csv).map_err(|e| derham::Error::Io { path, source: e })?,
                None => print!("{csv}"),
            }
            Ok(exit::SUCCESS)
        }
        Command::Dump {
            config,
            format,
            output_dir,
        } => {
            let mut config = RunConfig::load(&config)?;
            if let Some(f) = format {
                config.dump_format = match f {
                    Format::Text => DumpFormat::Text,
                    Format::Vtk => DumpFormat::Vtk,
                };
            }
            let dir = resolve_dir(&config, output_dir);
            for p in app::dump_initial(&config, &dir)? {
                println!("{}", p.display());
            }
            Ok(exit::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            app::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}

use clap::{Parser, Subcommand};
use npvq_cli::{load_config, run_scenario};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "npvq", about = "Design and evaluate quantizers for Neyman-Pearson detection")]
struct Cli {
    /// Worker thread cap; results do not depend on it.
    #[arg(long, global = true, env = "NPVQ_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a configuration file.
    Run { config: PathBuf },
    /// Check a configuration file without running it.
    Validate { config: PathBuf },
    /// Print the library version.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    match cli.command {
        Command::Version => {
            println!("npvq {}", npvq::VERSION);
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load_config(&config) {
            Ok(v) => {
                println!("ok");
                for (k, val) in &v.defaults {
                    println!("default {k} = {val}");
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Run { config } => {
            let v = match load_config(&config) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match run_scenario(&v.config) {
                Ok(r) => {
                    println!("wrote {} file(s) to {}", r.files.len(), v.config.output_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
    }
}

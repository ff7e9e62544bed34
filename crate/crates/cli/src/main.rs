use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lpconv::{listing, run_config, RunOptions};

#[derive(Parser)]
#[command(name = "lpconv", version, about = "Run l^p convolution operator norm experiments")]
struct Cli {
    /// Override every block's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for reports; output prefixes are relative to it.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Largest ball radius any group may enumerate.
    #[arg(long, global = true)]
    max_radius: Option<usize>,
    /// Largest finite group handled by the dense oracles.
    #[arg(long, global = true, default_value_t = 64)]
    dense_limit: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment block of a TOML config.
    Run { config: PathBuf },
    /// Print the experiment registry.
    List,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LPCONV_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("lpconv: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match cli.command {
        Command::List => {
            print!("{}", listing());
            ExitCode::SUCCESS
        }
        Command::Run { config } => {
            let opts = RunOptions { seed: cli.seed, out_dir: cli.out, max_radius: cli.max_radius, dense_limit: cli.dense_limit };
            match run_config(&config, &opts) {
                Ok(s) => {
                    for b in &s.blocks {
                        println!("{:<14} {:<4} {:>6} rows  {}", b.name, b.verdict.as_str(), b.rows, b.prefix.display());
                    }
                    println!("verdict: {}", s.verdict.as_str());
                    ExitCode::from(s.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("lpconv: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}

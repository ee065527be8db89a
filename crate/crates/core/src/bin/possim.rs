use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use possim::cli::{exit_code, run, RunConfig};

/// Batch runner for possibilistic inference.
#[derive(Parser, Debug)]
#[command(name = "possim", version)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving the CSV artifact.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    env_logger::Builder::new()
        .filter_level(if args.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Warn })
        .parse_default_env()
        .init();
    if let Some(k) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = RunConfig::from_path(&args.config).and_then(|mut cfg| {
        cfg.apply_env()?;
        run(&cfg, &args.out)
    });
    match result {
        Ok(path) => {
            log::info!("wrote {}", path.display());
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

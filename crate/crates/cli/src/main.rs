use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use spam_forge::{run, ConfigError, RawConfig, RunError};

/// Run a reproducible experiment on the spatial preferential attachment model.
#[derive(Debug, Parser)]
#[command(name = "spam-forge", version)]
struct Cli {
    /// Experiment kind: build, degrees, distances, percolation, layers,
    /// truncation, census, modulus, two-connection or sweep.
    kind: String,
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: PathBuf,
    /// Override a configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "SPAM_FORGE_WORKERS")]
    workers: Option<usize>,
}

fn load(cli: &Cli) -> Result<RawConfig, RunError> {
    let text = std::fs::read_to_string(&cli.config).map_err(|source| ConfigError::Read {
        path: cli.config.clone(),
        source,
    })?;
    let mut raw = RawConfig::parse(&text)?;
    for s in &cli.set {
        raw.set(s)?;
    }
    Ok(raw)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let workers = cli.workers.unwrap_or_else(spam_forge::default_workers);
    let result = load(&cli).and_then(|raw| run(&cli.kind, &raw, cli.out.as_deref(), workers));
    match result {
        Ok(s) => {
            println!("{} cell(s), {} row(s) written to {}", s.cells, s.rows, s.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use liqlab::{apply_override, parse_config, run_experiment, Config, RunError, MANIFEST_FILE};

/// Run a liqlab experiment and write its CSVs and manifest.
#[derive(Debug, Parser)]
#[command(name = "liqlab", version)]
struct Cli {
    /// fbm-gen, impact-curve, impact-verify, cpmm-compare, cycle-run,
    /// catbond-optimize or catbond-sensitivity.
    experiment: String,
    /// Flat key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config value; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn load(cli: &Cli) -> Result<Config, RunError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| RunError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
            parse_config(&text)?
        }
        None => Config::new(),
    };
    for assignment in &cli.overrides {
        apply_override(&mut config, assignment)?;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = load(&cli).and_then(|config| run_experiment(&cli.experiment, &config, cli.seed, &cli.out));
    match outcome {
        Ok(manifest) => {
            for file in &manifest.outputs {
                println!("{}", cli.out.join(&file.name).display());
            }
            println!("{}", cli.out.join(MANIFEST_FILE).display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("liqlab: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

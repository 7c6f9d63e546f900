//! Experiment runner: configs in, CSV artifacts and a manifest out.

pub mod config;
pub mod experiments;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{apply_override, parse_config, Config, ConfigError, Value};
pub use experiments::EXPERIMENTS;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Model(#[from] liqlab_core::Error),
    #[error("i/o error on {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl RunError {
    /// 2 for bad input, 3 for numerical failure, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Model(liqlab_core::Error::Domain(_)) => 2,
            RunError::Model(_) => 3,
            RunError::Io { .. } => 4,
        }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        RunError::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub experiment: String,
    /// Every schema key with its effective value.
    pub config: Config,
    pub base_seed: u64,
    pub methods: Vec<(String, String)>,
    pub tool_version: String,
    pub outputs: Vec<OutputFile>,
    pub results: Vec<(String, String)>,
    pub duration: Duration,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("experiment={}", self.experiment),
            format!("tool_version={}", self.tool_version),
            format!("base_seed={}", self.base_seed),
        ];
        lines.extend(self.methods.iter().map(|(k, v)| format!("method.{k}={v}")));
        lines.extend(self.config.iter().map(|(k, v)| format!("config.{k}={v}")));
        lines.extend(self.results.iter().map(|(k, v)| format!("result.{k}={v}")));
        lines.push(format!("output_count={}", self.outputs.len()));
        for (i, f) in self.outputs.iter().enumerate() {
            lines.push(format!("output.{i}.file={}", f.name));
            lines.push(format!("output.{i}.bytes={}", f.bytes));
            lines.push(format!("output.{i}.sha256={}", f.sha256));
        }
        lines.push(format!("duration_seconds={:.6}", self.duration.as_secs_f64()));
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }

    pub fn result(&self, key: &str) -> Option<&str> {
        self.results.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Validates `config` against the experiment's schema without running it.
pub fn validate(experiment: &str, config: &Config) -> Result<config::Resolved, ConfigError> {
    config::Resolved::new(experiment, experiments::schema(experiment)?, config)
}

/// Runs one experiment and writes its CSVs plus `manifest.txt` into `out_dir`.
pub fn run_experiment(experiment: &str, config: &Config, seed: u64, out_dir: &Path) -> Result<RunManifest, RunError> {
    let started = Instant::now();
    let resolved = validate(experiment, config)?;
    let produced = experiments::execute(experiment, &resolved, seed)?;
    fs::create_dir_all(out_dir).map_err(|e| RunError::io(out_dir, e))?;
    let mut outputs = Vec::with_capacity(produced.files.len());
    for (name, contents) in &produced.files {
        let path = out_dir.join(name);
        fs::write(&path, contents).map_err(|e| RunError::io(&path, e))?;
        outputs.push(OutputFile {
            name: name.clone(),
            bytes: contents.len(),
            sha256: format!("{:x}", Sha256::digest(contents.as_bytes())),
        });
    }
    let manifest = RunManifest {
        experiment: experiment.to_string(),
        config: resolved.values().clone(),
        base_seed: seed,
        methods: produced.methods,
        tool_version: TOOL_VERSION.to_string(),
        outputs,
        results: produced.results,
        duration: started.elapsed(),
    };
    let path = out_dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_text()).map_err(|e| RunError::io(&path, e))?;
    Ok(manifest)
}

//! Scenario runner for `copycat-core`: JSON configs, figure presets, CSV and
//! SVG output, and the validation suites behind `copycat validate`.

pub mod config;
pub mod output;
pub mod presets;
pub mod scenario;
pub mod validate;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown preset `{0}` (known: fig2-entropy, fig3-sx, fig4-eightcat)")]
    UnknownPreset(String),
    #[error("bad COPYCAT_THREADS value `{0}`")]
    Threads(String),
    #[error(transparent)]
    Core(#[from] copycat_core::Error),
    #[error("writing {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl CliError {
    pub fn config(path: &str, message: String) -> Self {
        let path = if path.is_empty() { "<root>" } else { path };
        CliError::Config {
            path: path.to_string(),
            message,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit status: 2 for bad input, 3 for filesystem trouble, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::UnknownPreset(_) | CliError::Threads(_) => 2,
            CliError::Io { .. } | CliError::Output { .. } => 3,
            CliError::Core(_) => 1,
        }
    }
}

/// Caps the global rayon pool from `COPYCAT_THREADS` if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("COPYCAT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Threads(raw.clone()))?;
    // A second call in the same process is harmless; keep the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

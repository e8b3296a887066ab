use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sigenhance::experiment::{REPORT_COLUMNS, REPORT_SCHEMA_VERSION};
use sigenhance::PipelineConfig;

use crate::args::Command;

/// Everything needed to re-run a command. Holds no timestamps so that a
/// replay rewrites an identical manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// The parsed command with config-file values and defaults applied.
    pub command: Command,
    /// Resolved enhancement chain, when the command runs one.
    pub pipeline: Option<PipelineConfig>,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub report_schema_version: u32,
    pub report_columns: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &Command) -> Self {
        Self {
            tool: "sigenhance".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: command.name().to_string(),
            command: command.clone(),
            pipeline: None,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            report_schema_version: REPORT_SCHEMA_VERSION,
            report_columns: REPORT_COLUMNS.iter().map(|c| c.to_string()).collect(),
        }
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")
            .with_context(|| format!("cannot write manifest {}", path.display()))
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read manifest {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("malformed manifest {}", path.display()))
    }
}

/// `<file>.manifest.json` beside an output file.
pub fn beside(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

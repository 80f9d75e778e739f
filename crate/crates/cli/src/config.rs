use std::path::Path;

use invivo_core::SimConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Optional `[sweep]` table of a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Option<String>,
    pub range: Option<String>,
    pub mcs: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ConfigFile {
    pub sim: SimConfig,
    pub sweep: SweepSection,
}

/// Reads a TOML config. Touchstone paths are resolved relative to the file.
pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg = parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    if let Some(dir) = path.parent() {
        cfg.sim.channel.rebase(dir);
    }
    Ok(cfg)
}

pub fn parse(text: &str) -> Result<ConfigFile, String> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
    let sweep = match table.remove("sweep") {
        Some(v) => v
            .try_into::<SweepSection>()
            .map_err(|e| format!("[sweep]: {e}"))?,
        None => SweepSection::default(),
    };
    let sim: SimConfig = table.try_into().map_err(|e| e.to_string())?;
    Ok(ConfigFile { sim, sweep })
}

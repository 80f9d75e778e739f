use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use invivo_core::{SimConfig, SimResult};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CSV_HEADER: &str = "mode,mcs,rate_mbps,bandwidth_mhz,gi_ns,distance_mm,tx_power_dbm,\
noise_dbm,frames,bits,bit_errors,ber,ber_ci_low,ber_ci_high,frame_errors,fer,seed";

pub fn csv_row(r: &SimResult) -> String {
    let distance = r.distance_mm.map(|d| d.to_string()).unwrap_or_default();
    let mut s = String::new();
    let _ = write!(
        s,
        "{},{},{:.1},{},{},{},{},{},{},{},{},{:e},{:e},{:e},{},{:e},{}",
        r.mode,
        r.mcs,
        r.rate_mbps,
        r.bandwidth_mhz,
        r.gi_ns,
        distance,
        r.tx_power_dbm,
        r.noise_dbm,
        r.frames_sent,
        r.bits_sent,
        r.bit_errors,
        r.ber,
        r.ber_ci_low,
        r.ber_ci_high,
        r.frame_errors,
        r.fer,
        r.seed
    );
    s
}

pub fn csv_text(rows: &[SimResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

/// One simulated row as recorded in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_mm: Option<f64>,
    pub config: SimConfig,
}

/// Sidecar written next to every CSV. Replaying its rows regenerates the
/// CSV byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub created_unix_s: u64,
    pub command: String,
    pub master_seed: u64,
    pub csv: PathBuf,
    #[serde(default)]
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn new(command: &str, master_seed: u64, csv: &Path) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            command: command.to_string(),
            master_seed,
            csv: csv.to_path_buf(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, r: &SimResult) {
        self.rows.push(ManifestRow {
            distance_mm: r.distance_mm,
            config: r.config.clone(),
        });
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read manifest {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self)
            .map_err(|e| CliError::usage(format!("cannot serialize manifest: {e}")))
    }
}

pub fn manifest_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.toml");
    csv.with_file_name(name)
}

/// Writes `contents` to `path` via a temporary file in the same directory
/// and an atomic rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
    let io_err = |e: std::io::Error| CliError::io(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Appends rows to a CSV, writing the header if the file is new.
pub fn append_csv(path: &Path, rows: &[SimResult]) -> Result<(), CliError> {
    let mut text = match std::fs::read_to_string(path) {
        Ok(existing) => {
            if existing.lines().next() != Some(CSV_HEADER) {
                return Err(CliError::refused(format!(
                    "{} exists but does not have the expected CSV header",
                    path.display()
                )));
            }
            existing
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => format!("{CSV_HEADER}\n"),
        Err(e) => return Err(CliError::io(format!("cannot read {}: {e}", path.display()))),
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    for r in rows {
        text.push_str(&csv_row(r));
        text.push('\n');
    }
    write_atomic(path, &text)
}

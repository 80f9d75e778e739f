//! `invivo-sim`: runs link simulations and writes BER tables.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
//! 3 refused to overwrite an existing output.

mod config;
mod output;
mod range;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use invivo_core::channel::read_touchstone;
use invivo_core::{
    data_rate, mcs_lookup, run_link, sweep_distance, sweep_mcs, Bandwidth, Error, GuardInterval,
    LinkMode, PortMap, SimConfig, SimResult,
};

use output::{Manifest, ManifestRow};

/// Default directory for outputs when `--out` is not given.
const OUT_DIR_ENV: &str = "INVIVO_SIM_OUT_DIR";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Refused(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }
    pub fn refused(msg: impl Into<String>) -> Self {
        CliError::Refused(msg.into())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Refused(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Refused(m) => m,
        }
    }
}

fn is_io(e: &Error) -> bool {
    match e {
        Error::Io { .. } => true,
        Error::Frame { source, .. } => is_io(source),
        _ => false,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if is_io(&e) {
            CliError::Io(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "invivo-sim",
    version,
    about = "HT MIMO-OFDM link simulator for in-vivo channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Default)]
struct Overrides {
    /// Number of frames per row.
    #[arg(long)]
    frames: Option<u64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// PSDU length in bytes.
    #[arg(long)]
    psdu_bytes: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut SimConfig) {
        if let Some(v) = self.frames {
            cfg.frames = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.psdu_bytes {
            cfg.psdu_bytes = v;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Axis {
    Mcs,
    Distance,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the HT MCS rate table.
    Rates {
        #[arg(long, default_value = "20", value_parser = ["20", "40"])]
        bandwidth: String,
        /// Guard interval in ns.
        #[arg(long, default_value = "800", value_parser = ["800", "400"])]
        gi: String,
    },
    /// Simulate one configuration and append a row to a CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        mcs: Option<u8>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Sweep MCS or antenna distance and write a new CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Option<Axis>,
        /// Values along the axis: `8..15`, `70..130:10` or `2,10`.
        #[arg(long)]
        range: Option<String>,
        /// MCS list for distance sweeps.
        #[arg(long)]
        mcs: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overwrite an existing output file.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Re-run every row recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Summarize a Touchstone file.
    Touchstone {
        path: PathBuf,
        /// Port count, if the extension does not give it.
        #[arg(long)]
        ports: Option<usize>,
        /// Frequency at which to report |S|, in GHz.
        #[arg(long, default_value_t = 2.4)]
        at_ghz: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Rates { bandwidth, gi } => rates(&bandwidth, &gi),
        Command::Run {
            config,
            mcs,
            out,
            overrides,
        } => run(&config, mcs, out, &overrides),
        Command::Sweep {
            config,
            axis,
            range,
            mcs,
            out,
            force,
            overrides,
        } => sweep(&config, axis, range, mcs, out, force, &overrides),
        Command::Replay {
            manifest,
            out,
            force,
        } => replay(&manifest, &out, force),
        Command::Touchstone {
            path,
            ports,
            at_ghz,
        } => touchstone(&path, ports, at_ghz),
    }
}

fn rates(bandwidth: &str, gi: &str) -> Result<(), CliError> {
    let bw = Bandwidth::try_from(bandwidth.parse::<u32>().unwrap_or(0))?;
    let gi = GuardInterval::try_from(gi.parse::<u32>().unwrap_or(0))?;
    println!(
        "{:>3}  {:>7}  {:<10}  {:>4}  {:>6}",
        "mcs", "streams", "modulation", "rate", "mbps"
    );
    for idx in 0..16 {
        let e = mcs_lookup(idx, bw)?;
        println!(
            "{:>3}  {:>7}  {:<10}  {:>4}  {:>6.1}",
            e.index,
            e.n_ss,
            e.modulation.to_string(),
            e.code_rate.to_string(),
            data_rate(&e, gi)
        );
    }
    Ok(())
}

fn default_out(name: &str) -> PathBuf {
    let dir = std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    dir.join(name)
}

fn report(r: &SimResult) {
    let distance = r
        .distance_mm
        .map(|d| format!(" d={d} mm"))
        .unwrap_or_default();
    eprintln!(
        "{} MCS {:>2} ({:.1} Mbps){distance}: BER {:.3e} [{:.2e}, {:.2e}]  FER {:.3e}  {} frames in {:.1} s",
        r.mode, r.mcs, r.rate_mbps, r.ber, r.ber_ci_low, r.ber_ci_high, r.fer, r.frames_sent, r.elapsed_s
    );
}

fn run(
    config: &Path,
    mcs: Option<u8>,
    out: Option<PathBuf>,
    ov: &Overrides,
) -> Result<(), CliError> {
    let mut cfg = config::load(config)?.sim;
    ov.apply(&mut cfg);
    if let Some(m) = mcs {
        cfg.mcs = m;
    }
    let out = out.unwrap_or_else(|| default_out("run.csv"));
    let result = run_link(&cfg)?;
    report(&result);
    output::append_csv(&out, std::slice::from_ref(&result))?;

    let mpath = output::manifest_path(&out);
    let mut manifest = if mpath.exists() {
        Manifest::load(&mpath)?
    } else {
        Manifest::new("run", cfg.seed, &out)
    };
    manifest.push(&result);
    output::write_atomic(&mpath, &manifest.to_toml()?)?;
    println!("{}", out.display());
    Ok(())
}

fn refuse_existing(out: &Path, force: bool) -> Result<(), CliError> {
    if out.exists() && !force {
        return Err(CliError::refused(format!(
            "{} already exists; pass --force to overwrite",
            out.display()
        )));
    }
    Ok(())
}

fn mode_of(mcs: u8) -> LinkMode {
    if mcs <= 7 {
        LinkMode::Siso
    } else {
        LinkMode::Mimo
    }
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    config: &Path,
    axis: Option<Axis>,
    range: Option<String>,
    mcs: Option<String>,
    out: Option<PathBuf>,
    force: bool,
    ov: &Overrides,
) -> Result<(), CliError> {
    let file = config::load(config)?;
    let mut cfg = file.sim;
    ov.apply(&mut cfg);

    let axis = match axis {
        Some(a) => a,
        None => match file.sweep.axis.as_deref() {
            Some(s) => Axis::from_str(s, true)
                .map_err(|_| CliError::usage(format!("unknown sweep axis {s:?}")))?,
            None => return Err(CliError::usage("no sweep axis given (--axis mcs|distance)")),
        },
    };
    let range = range
        .or(file.sweep.range)
        .ok_or_else(|| CliError::usage("no sweep range given (--range)"))?;
    let name = match axis {
        Axis::Mcs => "sweep_mcs.csv",
        Axis::Distance => "sweep_distance.csv",
    };
    let out = out.unwrap_or_else(|| default_out(name));
    refuse_existing(&out, force)?;

    let rows = match axis {
        Axis::Mcs => {
            let list = range::parse_mcs(&range).map_err(CliError::usage)?;
            let mut rows = Vec::with_capacity(list.len());
            for m in list {
                let r = sweep_mcs(&cfg, &[m], mode_of(m))?.remove(0);
                report(&r);
                rows.push(r);
            }
            rows
        }
        Axis::Distance => {
            let distances = range::parse_values(&range).map_err(CliError::usage)?;
            let list = match mcs.or(file.sweep.mcs) {
                Some(s) => range::parse_mcs(&s).map_err(CliError::usage)?,
                None => vec![cfg.mcs],
            };
            let mut rows = Vec::with_capacity(distances.len() * list.len());
            for d in distances {
                for r in sweep_distance(&cfg, &[d], &list)? {
                    report(&r);
                    rows.push(r);
                }
            }
            rows
        }
    };

    let mut manifest = Manifest::new("sweep", cfg.seed, &out);
    rows.iter().for_each(|r| manifest.push(r));
    output::write_atomic(&out, &output::csv_text(&rows))?;
    output::write_atomic(&output::manifest_path(&out), &manifest.to_toml()?)?;
    println!("{}", out.display());
    Ok(())
}

fn replay(manifest: &Path, out: &Path, force: bool) -> Result<(), CliError> {
    let m = Manifest::load(manifest)?;
    refuse_existing(out, force)?;
    let mut rows = Vec::with_capacity(m.rows.len());
    for ManifestRow {
        distance_mm,
        config,
    } in &m.rows
    {
        let mut r = run_link(config)?;
        r.distance_mm = *distance_mm;
        report(&r);
        rows.push(r);
    }
    output::write_atomic(out, &output::csv_text(&rows))?;
    println!("{}", out.display());
    Ok(())
}

fn touchstone(path: &Path, ports: Option<usize>, at_ghz: f64) -> Result<(), CliError> {
    let net = read_touchstone(path, ports)?;
    println!("{}", path.display());
    println!(
        "{} ports, {:.3}\u{2013}{:.3} GHz, {} points, Z0 {} ohm",
        net.n_ports,
        net.min_freq() / 1e9,
        net.max_freq() / 1e9,
        net.freqs_hz.len(),
        net.z0_ohms
    );
    let map = PortMap::default_for(net.n_ports).ok();
    let h_mode = match &map {
        Some(pm) if pm.tx.len() == 1 => "siso",
        Some(_) => "mimo",
        None => "none",
    };
    match &map {
        Some(pm) => {
            let mode = if pm.tx.len() == 1 { "SISO" } else { "MIMO" };
            let list = |v: &[usize]| {
                v.iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            println!(
                "H mode: {mode} {}x{} (TX {} / RX {})",
                pm.rx.len(),
                pm.tx.len(),
                list(&pm.tx),
                list(&pm.rx)
            );
        }
        None => println!("H mode: none (odd port count, give an explicit port map)"),
    }
    match net.interpolate(at_ghz * 1e9) {
        Ok(s) => {
            println!("|S| at {at_ghz:.3} GHz:");
            for r in 0..net.n_ports {
                let row: Vec<String> = (0..net.n_ports)
                    .map(|c| format!("{:>10.3e}", s[(r, c)].norm()))
                    .collect();
                println!("  {}", row.join(" "));
            }
        }
        Err(_) => println!("{at_ghz:.3} GHz is outside the file's band"),
    }
    println!(
        "ports={} fmin_hz={:e} fmax_hz={:e} points={} h_mode={h_mode}",
        net.n_ports,
        net.min_freq(),
        net.max_freq(),
        net.freqs_hz.len()
    );
    Ok(())
}

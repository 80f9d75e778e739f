//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use invivo_core::channel::{
    apply_channel, parse_touchstone, synthetic_channel, write_touchstone, ChannelResponse,
    LinkBudget, SParamNetwork, SyntheticParams,
};
use invivo_core::coding::{bcc_encode, viterbi_decode, viterbi_decode_hard, Termination};
use invivo_core::harness::{Coding, Decoding};
use invivo_core::{
    run_link, sweep_distance, sweep_mcs, Bandwidth, ChannelSource, Complex, Detector,
    FrequencyGrid, LinkMode, Numerology, Regeneration, SimConfig, SimResult,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::{erfc, erfc_inv};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_invivo-sim")
}

fn cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(bin())
        .args(args)
        .output()
        .map_err(|e| format!("cannot start {}: {e}", bin()))?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Non-decreasing, treating overlapping confidence intervals as ties.
fn non_decreasing(rows: &[SimResult]) -> Result<(), String> {
    for w in rows.windows(2) {
        if w[1].ber < w[0].ber && !w[0].ci_overlaps(&w[1]) {
            return Err(format!(
                "BER drops from {:.3e} (MCS {}, {:?} mm) to {:.3e} (MCS {}, {:?} mm)",
                w[0].ber, w[0].mcs, w[0].distance_mm, w[1].ber, w[1].mcs, w[1].distance_mm
            ));
        }
    }
    Ok(())
}

fn q(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn identity_cfg(mcs: u8, frames: u64, budget: LinkBudget) -> SimConfig {
    SimConfig {
        mcs,
        frames,
        budget,
        channel: ChannelSource::Identity { gain_db: 0.0 },
        ..Default::default()
    }
}

/// 0.412 mW / -101 dBm budget over the default synthetic channel, held fixed.
fn fixed_synthetic(frames: u64) -> SimConfig {
    SimConfig {
        frames,
        regeneration: Some(Regeneration::Fixed),
        budget: LinkBudget::default(),
        channel: ChannelSource::Synthetic(SyntheticParams::default()),
        ..Default::default()
    }
}

fn c1_rates() -> Outcome {
    let start = Instant::now();
    let text = cli(&["rates"])?;
    let elapsed = start.elapsed();
    let rows: Vec<(u8, usize, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[4].parse().unwrap(),
            )
        })
        .collect();
    check(rows.len() == 16, || format!("{} rows", rows.len()))?;
    for (mcs, want) in [
        (2, 19.5),
        (10, 39.0),
        (11, 52.0),
        (12, 78.0),
        (13, 104.0),
        (14, 117.0),
    ] {
        let got = rows[mcs].2;
        check(got == want, || format!("MCS {mcs}: {got} != {want}"))?;
    }
    for k in 0..8 {
        check(rows[k + 8].2 == 2.0 * rows[k].2, || {
            format!("MCS {} is not twice MCS {k}", k + 8)
        })?;
    }
    check(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "six quoted rates exact, 2x doubling for k<=7, {elapsed:.2?}"
    ))
}

fn c2_noiseless() -> Outcome {
    let start = Instant::now();
    for det in [Detector::Zf, Detector::Mmse] {
        for mcs in 0..16 {
            let cfg = SimConfig {
                detector: det,
                ..identity_cfg(mcs, 100, LinkBudget::noiseless(0.412))
            };
            let r = run_link(&cfg).map_err(|e| e.to_string())?;
            check(
                r.bit_errors == 0 && r.frame_errors == 0 && r.frames_sent == 100,
                || {
                    format!(
                        "MCS {mcs} {det:?}: {} bit errors, {} frame errors",
                        r.bit_errors, r.frame_errors
                    )
                },
            )?;
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(120), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "BER = FER = 0 for MCS 0-15, ZF and MMSE, 100 frames each, {elapsed:.1?}"
    ))
}

/// Budget giving per-subcarrier Es/N0 = `snr` on a unit channel.
fn budget_for_snr(snr: f64) -> LinkBudget {
    let base = LinkBudget::default();
    LinkBudget {
        noise_dbm: base.tx_power_dbm() - 10.0 * snr.log10(),
        ..base
    }
}

fn uncoded_bpsk(snr: f64, frames: u64, coding: Coding) -> Result<SimResult, String> {
    run_link(&SimConfig {
        coding,
        ..identity_cfg(0, frames, budget_for_snr(snr))
    })
    .map_err(|e| e.to_string())
}

fn c3_awgn() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    for target in [1e-2, 1e-3] {
        // Q(sqrt(2 snr)) = target
        let snr = erfc_inv(2.0 * target).powi(2);
        let r = uncoded_bpsk(snr, 150, Coding::Uncoded)?;
        let theory = q((2.0 * snr).sqrt());
        let rel = (r.ber - theory).abs() / theory;
        check(r.bits_sent >= 1_000_000, || {
            format!("only {} bits", r.bits_sent)
        })?;
        check(rel <= 0.10, || {
            format!(
                "BER {:.4e} vs theory {theory:.4e} ({:.1}%)",
                r.ber,
                rel * 100.0
            )
        })?;
        notes.push(format!("{:.3e} vs {theory:.3e}", r.ber));
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(120), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("{} ({elapsed:.1?})", notes.join(", ")))
}

fn pack(bits: &[u8]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

fn c4_fec() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    // (a) single LLR sign flips
    for trial in 0..1000 {
        let mut msg: Vec<u8> = (0..200).map(|_| rng.random_range(0..2)).collect();
        msg.extend([0; 6]);
        let mut llrs: Vec<f64> = bcc_encode(&msg)
            .iter()
            .map(|&b| if b == 0 { 1.0 } else { -1.0 })
            .collect();
        let pos = rng.random_range(0..llrs.len());
        llrs[pos] = -llrs[pos];
        let dec = viterbi_decode(&llrs, Termination::Zero).map_err(|e| e.to_string())?;
        check(dec == msg, || {
            format!("trial {trial}: flip at {pos} not corrected")
        })?;
    }

    // (b) hard Viterbi vs exhaustive ML, k = 12
    const K: usize = 12;
    let codewords: Vec<u64> = (0..1u32 << K)
        .map(|m| {
            let mut bits: Vec<u8> = (0..K).rev().map(|i| ((m >> i) & 1) as u8).collect();
            bits.extend([0; 6]);
            pack(&bcc_encode(&bits))
        })
        .collect();
    let n_coded = 2 * (K + 6);
    for (m, &cw) in codewords.iter().enumerate() {
        let noise = (0..n_coded).fold(0u64, |acc, _| (acc << 1) | u64::from(rng.random_bool(0.12)));
        let received = cw ^ noise;
        let rx_bits: Vec<u8> = (0..n_coded)
            .rev()
            .map(|i| ((received >> i) & 1) as u8)
            .collect();
        let dec = viterbi_decode_hard(&rx_bits, Termination::Zero).map_err(|e| e.to_string())?;
        check(dec[K..].iter().all(|&b| b == 0), || {
            format!("message {m}: tail not zero")
        })?;
        let dec_word = codewords[pack(&dec[..K]) as usize];
        let best = codewords
            .iter()
            .map(|c| (c ^ received).count_ones())
            .min()
            .unwrap();
        let got = (dec_word ^ received).count_ones();
        check(got == best, || {
            format!("message {m}: Viterbi distance {got}, ML distance {best}")
        })?;
    }

    // (c) soft-decoded vs uncoded BPSK at paired seeds
    let mut compared = 0;
    for snr_db in [2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0] {
        let snr = 10f64.powf(snr_db / 10.0);
        let unc = uncoded_bpsk(snr, 150, Coding::Uncoded)?;
        if unc.ber > 1e-2 {
            continue;
        }
        let coded = uncoded_bpsk(snr, 150, Coding::Bcc)?;
        check(coded.config.decoding == Decoding::Soft, || {
            "decoding is not soft".into()
        })?;
        check(coded.ber < unc.ber, || {
            format!(
                "{snr_db} dB: coded {:.3e} >= uncoded {:.3e}",
                coded.ber, unc.ber
            )
        })?;
        compared += 1;
    }
    check(compared >= 3, || {
        format!("only {compared} SNR points had uncoded BER <= 1e-2")
    })?;
    Ok(format!(
        "1000/1000 flips corrected, ML-equal on {} messages, coded < uncoded at {compared} SNRs",
        codewords.len()
    ))
}

fn c5_fixed_channel_sweeps(dir: &Path) -> Outcome {
    // (a) MCS ordering within each stream class
    let base = fixed_synthetic(200);
    for (mode, list) in [
        (LinkMode::Siso, (0..8).collect::<Vec<u8>>()),
        (LinkMode::Mimo, (8..16).collect()),
    ] {
        let rows = sweep_mcs(&base, &list, mode).map_err(|e| e.to_string())?;
        non_decreasing(&rows).map_err(|e| format!("(a) {mode}: {e}"))?;
    }

    // (b) distance ordering for MCS 11-14
    let distances: Vec<f64> = (0..7).map(|i| 70.0 + 10.0 * i as f64).collect();
    let rows = sweep_distance(&base, &distances, &[11, 12, 13, 14]).map_err(|e| e.to_string())?;
    let mut any_errors = false;
    for mcs in 11..=14 {
        let per: Vec<SimResult> = rows.iter().filter(|r| r.mcs == mcs).cloned().collect();
        non_decreasing(&per).map_err(|e| format!("(b) MCS {mcs}: {e}"))?;
        any_errors |= per.iter().any(|r| r.bit_errors > 0);
    }
    check(any_errors, || {
        "(b) no bit errors anywhere in 70-130 mm; ordering is vacuous".into()
    })?;

    // (c) 10^4-frame paired SISO MCS 2 / MIMO MCS 10 run through the CLI
    let cfg_path = dir.join("paired.toml");
    let cfg = fixed_synthetic(10_000);
    std::fs::write(&cfg_path, toml::to_string(&cfg).unwrap()).map_err(|e| e.to_string())?;
    let csv = dir.join("paired.csv");
    let start = Instant::now();
    cli(&[
        "sweep",
        "--config",
        cfg_path.to_str().unwrap(),
        "--axis",
        "mcs",
        "--range",
        "2,10",
        "--out",
        csv.to_str().unwrap(),
    ])?;
    let paired = start.elapsed();
    let text = std::fs::read_to_string(&csv).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<String>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    check(rows.len() == 2, || format!("{} rows", rows.len()))?;
    check(rows[0][0] == "siso" && rows[1][0] == "mimo", || {
        "modes".into()
    })?;
    check(rows.iter().all(|r| r[8] == "10000"), || {
        "frame count".into()
    })?;
    let (r0, r1): (f64, f64) = (rows[0][2].parse().unwrap(), rows[1][2].parse().unwrap());
    check(r0 == 19.5 && r1 == 39.0 && r1 / r0 == 2.0, || {
        format!("rates {r0}, {r1}")
    })?;

    // runtime: MCS 13, 1000 frames, 1000-byte PSDU on one worker
    let start = Instant::now();
    run_link(&SimConfig {
        mcs: 13,
        frames: 1000,
        workers: 1,
        ..fixed_synthetic(1000)
    })
    .map_err(|e| e.to_string())?;
    let one = start.elapsed();
    check(one < Duration::from_secs(60), || {
        format!("MCS 13 / 1000 frames took {one:?}")
    })?;
    check(paired < Duration::from_secs(600), || {
        format!("paired run took {paired:?}")
    })?;
    Ok(format!(
        "MCS and distance orderings hold, paired rates 19.5/39.0, MCS 13 x1000 in {one:.1?}, paired 10^4 run in {paired:.1?}"
    ))
}

fn c6_channel_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let freqs: Vec<f64> = (0..21).map(|i| 1e9 + i as f64 * 1e8).collect();
    let s: Vec<DMatrix<Complex>> = freqs
        .iter()
        .map(|_| {
            DMatrix::from_fn(4, 4, |_, _| {
                Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            })
        })
        .collect();
    let net = SParamNetwork::new(4, freqs, s, 50.0).map_err(|e| e.to_string())?;
    let back = parse_touchstone(&write_touchstone(&net), 4).map_err(|e| e.to_string())?;
    check(back == net, || "RI round trip changed values".into())?;

    let num = Numerology::new(Bandwidth::Mhz20);
    let params = SyntheticParams::default();
    let n = 10_000;
    let mean: f64 = (0..n)
        .map(|seed| synthetic_channel(&params, &num, 2, 2, seed).map(|h| h.mean_power_gain()))
        .sum::<Result<f64, _>>()
        .map_err(|e| e.to_string())?
        / n as f64;
    let gain_err = (mean / params.mean_gain() - 1.0).abs();
    check(gain_err < 0.03, || {
        format!("mean gain off by {:.2}%", gain_err * 100.0)
    })?;

    let budget = LinkBudget::default();
    let n_sym = 1_000_000usize.div_ceil(num.n_used());
    let grid = FrequencyGrid::zeros(num.clone(), n_sym, 1);
    let chan = ChannelResponse::identity(&num, 1, 1.0);
    let out = apply_channel(&grid, &chan, &budget, 99).map_err(|e| e.to_string())?;
    let draws = out.grid.data.len() + out.grid.pilots.len();
    let power: f64 = out
        .grid
        .data
        .iter()
        .chain(&out.grid.pilots)
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        / draws as f64
        * num.n_used() as f64;
    let noise_err = (power / 7.943e-14 - 1.0).abs();
    check(draws >= 1_000_000, || format!("{draws} draws"))?;
    check(noise_err < 0.02, || format!("noise power {power:.4e} W"))?;
    Ok(format!(
        "RI round trip exact, mean gain within {:.2}%, noise {power:.4e} W over {draws} draws",
        gain_err * 100.0
    ))
}

fn c7_determinism(dir: &Path) -> Outcome {
    let cfg_path = dir.join("det.toml");
    let cfg = SimConfig {
        frames: 300,
        psdu_bytes: 500,
        ..Default::default()
    };
    std::fs::write(&cfg_path, toml::to_string(&cfg).unwrap()).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for workers in ["1", "8"] {
        let csv = dir.join(format!("det_{workers}.csv"));
        cli(&[
            "sweep",
            "--config",
            cfg_path.to_str().unwrap(),
            "--axis",
            "mcs",
            "--range",
            "12..14",
            "--workers",
            workers,
            "--out",
            csv.to_str().unwrap(),
        ])?;
        outputs.push((csv.clone(), std::fs::read(&csv).map_err(|e| e.to_string())?));
    }
    check(outputs[0].1 == outputs[1].1, || {
        "1 vs 8 workers differ".into()
    })?;
    let text = String::from_utf8_lossy(&outputs[0].1).into_owned();
    check(text.lines().skip(1).any(|l| !l.contains(",0,0e0,")), || {
        "no errors to compare".into()
    })?;

    let replayed = dir.join("det_replay.csv");
    let manifest: PathBuf = {
        let mut p = outputs[0].0.clone().into_os_string();
        p.push(".manifest.toml");
        p.into()
    };
    cli(&[
        "replay",
        manifest.to_str().unwrap(),
        "--out",
        replayed.to_str().unwrap(),
    ])?;
    check(
        std::fs::read(&replayed).map_err(|e| e.to_string())? == outputs[0].1,
        || "replay from manifest differs".into(),
    )?;
    Ok("CSV rows byte-identical for 1 and 8 workers and after manifest replay".into())
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<Criterion> = vec![
        ("1 rate table", Box::new(c1_rates)),
        ("2 noiseless integrity", Box::new(c2_noiseless)),
        ("3 AWGN vs closed form", Box::new(c3_awgn)),
        ("4 FEC behavior", Box::new(c4_fec)),
        (
            "5 fixed-channel sweeps",
            Box::new(|| c5_fixed_channel_sweeps(dir.path())),
        ),
        ("6 channel oracles", Box::new(c6_channel_oracles)),
        ("7 determinism", Box::new(|| c7_determinism(dir.path()))),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        match f() {
            Ok(msg) => println!("PASS  criterion {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  criterion {name}: {msg}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

//! `align-bench` command-line front end.
//!
//! Exit codes: 0 success, 2 usage or malformed input, 3 numerical or
//! construction failure, 4 verification failure.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use align_bench::beamformer::{self, DesignBuilder};
use align_bench::channel::{self, DEFAULT_H_MAX, DEFAULT_H_MIN};
use align_bench::dof::{self, GainPoint};
use align_bench::numerics::DEFAULT_RANK_TOL;
use align_bench::verifier::{self, DEFAULT_VERIFY_TOL};
use align_bench::{fileio, linksim, Error};
use anyhow::Context;
use clap::{Parser, Subcommand};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_VERIFY_FAILED: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "align-bench", version, about = "Interference-alignment beamforming workbench")]
struct Cli {
    /// Numerical tolerance (rank and residual thresholds)
    #[arg(long, global = true, env = "ALIGN_BENCH_TOL")]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Emit exact multiplexing gains of the proposed and original schemes as CSV
    Gains {
        /// Number of users
        #[arg(short = 'K', long = "users")]
        users: usize,
        /// Largest channel-use count to tabulate
        #[arg(long = "max-uses", default_value_t = 1000)]
        max_uses: u64,
        /// Emit only the proposed point for this n*
        #[arg(long)]
        nstar: Option<u64>,
        /// Emit only the original-scheme point for this m
        #[arg(long)]
        m: Option<u64>,
        /// Output CSV path (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate channels sized for the design and build the beamformers
    Build {
        #[arg(short = 'K', long = "users")]
        users: usize,
        #[arg(long)]
        nstar: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_H_MIN)]
        hmin: f64,
        #[arg(long, default_value_t = DEFAULT_H_MAX)]
        hmax: f64,
        /// Where to write the channel file
        #[arg(long)]
        channels: PathBuf,
        /// Where to write the design file
        #[arg(long)]
        design: PathBuf,
    },
    /// Check a design against every alignment and rank condition
    Verify {
        #[arg(long)]
        channels: PathBuf,
        #[arg(long)]
        design: PathBuf,
    },
    /// Sweep sum rate over SNR with zero-forcing receivers and estimate the slope
    Simulate {
        #[arg(long)]
        channels: PathBuf,
        #[arg(long)]
        design: PathBuf,
        #[arg(long = "snr-lo-db", default_value_t = 40.0)]
        snr_lo_db: f64,
        #[arg(long = "snr-hi-db", default_value_t = 60.0)]
        snr_hi_db: f64,
        #[arg(long, default_value_t = 11)]
        steps: usize,
        /// Output CSV path (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure carrying the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE };
        Failure {
            code,
            error: e.into(),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        error: anyhow::anyhow!(msg.into()),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fileio::write_atomic(path, text.as_bytes()).map_err(Failure::from),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .context("writing to stdout")
                .map_err(|error| Failure { code: EXIT_USAGE, error })
        }
    }
}

fn gain_row(out: &mut String, p: &GainPoint) {
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{}",
        p.scheme,
        p.param,
        p.channel_uses,
        p.streams_total,
        p.gain.numer(),
        p.gain.denom(),
        p.gain_f64()
    );
}

const GAINS_HEADER: &str = "scheme,param,channel_uses,streams_total,gain_num,gain_den,gain_real\n";

fn cmd_gains(users: usize, max_uses: u64, nstar: Option<u64>, m: Option<u64>, out: Option<&Path>) -> Result<(), Failure> {
    dof::generator_count(users)?;
    let mut csv = String::from(GAINS_HEADER);
    if nstar.is_some() || m.is_some() {
        if let Some(m) = m {
            gain_row(&mut csv, &dof::original_gain(users, m)?);
        }
        if let Some(n) = nstar {
            gain_row(&mut csv, &dof::proposed_point(users, n)?);
        }
    } else {
        let table = dof::gain_table(users, max_uses)?;
        for p in table.rows() {
            gain_row(&mut csv, p);
        }
    }
    emit(out, &csv)
}

#[allow(clippy::too_many_arguments)]
fn cmd_build(
    users: usize,
    nstar: u32,
    seed: u64,
    hmin: f64,
    hmax: f64,
    channels_out: &Path,
    design_out: &Path,
    tol: Option<f64>,
) -> Result<(), Failure> {
    let m = beamformer::required_realizations(users, nstar)?;
    let cs = channel::generate_channels(users, m, seed, hmin, hmax)?;
    let design = DesignBuilder::new(nstar)
        .rank_tol(tol.unwrap_or(DEFAULT_RANK_TOL))
        .build(&cs)?;
    channel::save_channels(&cs, channels_out)?;
    beamformer::save_design(&design, design_out)?;
    let d: Vec<String> = design.stream_vector().iter().map(usize::to_string).collect();
    println!("M={m}");
    println!("d=({})", d.join(","));
    Ok(())
}

fn load_pair(channels: &Path, design: &Path) -> Result<(channel::ChannelSet, beamformer::BeamformingDesign), Failure> {
    let cs = channel::load_channels(channels)?;
    let d = beamformer::load_design(design)?;
    if cs.users() != d.users() || cs.realizations() != d.realizations() {
        return Err(usage(format!(
            "channel file has K={}, M={} but design file has K={}, M={}",
            cs.users(),
            cs.realizations(),
            d.users(),
            d.realizations()
        )));
    }
    Ok((cs, d))
}

fn cmd_verify(channels: &Path, design: &Path, tol: Option<f64>) -> Result<ExitCode, Failure> {
    let (cs, d) = load_pair(channels, design)?;
    let report = verifier::verify_design(&cs, &d, tol.unwrap_or(DEFAULT_VERIFY_TOL))?;
    emit(None, &report.to_records())?;
    if report.overall() {
        eprintln!("verification passed");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("verification FAILED: {}", report.failed_checks().join(", "));
        Ok(ExitCode::from(EXIT_VERIFY_FAILED))
    }
}

fn cmd_simulate(
    channels: &Path,
    design: &Path,
    snr_lo_db: f64,
    snr_hi_db: f64,
    steps: usize,
    out: Option<&Path>,
) -> Result<(), Failure> {
    if snr_hi_db.partial_cmp(&snr_lo_db) != Some(std::cmp::Ordering::Greater) {
        return Err(usage(format!(
            "--snr-hi-db ({snr_hi_db}) must exceed --snr-lo-db ({snr_lo_db})"
        )));
    }
    let (cs, d) = load_pair(channels, design)?;
    let report = linksim::sweep(&cs, &d, snr_lo_db, snr_hi_db, steps)?;
    emit(out, &report.to_csv())?;
    let summary = format!(
        "normalized_slope={}\ntarget_gain={} ({})\nrelative_deviation={}\n",
        report.normalized_slope,
        report.target_gain,
        report.target_gain_f64(),
        report.relative_deviation
    );
    if out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(usage(format!("--tol must be positive, got {t}")));
        }
    }
    match cli.command {
        Command::Gains {
            users,
            max_uses,
            nstar,
            m,
            out,
        } => cmd_gains(users, max_uses, nstar, m, out.as_deref()).map(|_| ExitCode::SUCCESS),
        Command::Build {
            users,
            nstar,
            seed,
            hmin,
            hmax,
            channels,
            design,
        } => cmd_build(users, nstar, seed, hmin, hmax, &channels, &design, cli.tol).map(|_| ExitCode::SUCCESS),
        Command::Verify { channels, design } => cmd_verify(&channels, &design, cli.tol),
        Command::Simulate {
            channels,
            design,
            snr_lo_db,
            snr_hi_db,
            steps,
            out,
        } => cmd_simulate(&channels, &design, snr_lo_db, snr_hi_db, steps, out.as_deref()).map(|_| ExitCode::SUCCESS),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            if f.code == EXIT_USAGE {
                eprintln!("see `align-bench --help` for usage");
            }
            ExitCode::from(f.code)
        }
    }
}

//! Zero-forcing link simulation.
//!
//! Beams are scaled to unit norm and every stream gets an equal share of the
//! total transmit power. Receivers invert their square effective channel,
//! which nulls the aligned interference exactly, so each stream's SINR is
//! `p / ||w_i||^2` in closed form and no Monte Carlo averaging is needed.

use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::beamformer::BeamformingDesign;
use crate::channel::ChannelSet;
use crate::dof;
use crate::error::{Error, Result};
use crate::numerics::{diag_apply, invert, DenseMatrix, C64};
use crate::verifier::receiver_blocks;

/// Relative pivot threshold for inverting effective channels.
pub const DEFAULT_SOLVE_TOL: f64 = 1e-12;
/// Lowest SNR (dB) accepted as the low end of a slope window.
pub const MIN_SLOPE_SNR_DB: f64 = 20.0;

/// Square effective channel of one receiver with unit-norm columns.
#[derive(Clone, Debug)]
pub struct EffectiveChannel {
    pub receiver: usize,
    /// `[desired | interference]`, each column scaled to unit norm.
    pub matrix: DenseMatrix,
    /// Norms the columns had before scaling (with unit-norm beams).
    pub scales: Vec<f64>,
    /// Number of leading desired columns.
    pub desired: usize,
}

fn unit_beams(design: &BeamformingDesign) -> Result<BeamformingDesign> {
    let v = (1..=design.users())
        .map(|u| design.v(u).normalized_columns().0)
        .collect();
    BeamformingDesign::new(design.users(), design.realizations(), design.n_star(), v)
}

pub fn effective_channel(cs: &ChannelSet, design: &BeamformingDesign, k: usize) -> Result<EffectiveChannel> {
    let beams = unit_beams(design)?;
    effective_channel_unit(cs, &beams, k)
}

fn effective_channel_unit(cs: &ChannelSet, beams: &BeamformingDesign, k: usize) -> Result<EffectiveChannel> {
    let (desired, interference) = receiver_blocks(cs, beams, k)?;
    let raw = desired.hstack(&interference)?;
    if raw.cols() != raw.rows() {
        return Err(Error::DimensionMismatch {
            context: "effective channel must be square",
            expected: raw.rows(),
            found: raw.cols(),
        });
    }
    let (matrix, scales) = raw.normalized_columns();
    Ok(EffectiveChannel {
        receiver: k,
        matrix,
        scales,
        desired: desired.cols(),
    })
}

/// ZF rows `w_i` for receiver `k`: `w_i` times the desired column `j`
/// (unit-norm beams, no extra scaling) is `δ_ij`, and `w_i` annihilates the
/// interference basis.
pub fn zf_filters(cs: &ChannelSet, design: &BeamformingDesign, k: usize) -> Result<DenseMatrix> {
    zf_filters_with(cs, design, k, DEFAULT_SOLVE_TOL)
}

pub fn zf_filters_with(cs: &ChannelSet, design: &BeamformingDesign, k: usize, tol: f64) -> Result<DenseMatrix> {
    let beams = unit_beams(design)?;
    filters_from(&effective_channel_unit(cs, &beams, k)?, tol)
}

fn filters_from(eff: &EffectiveChannel, tol: f64) -> Result<DenseMatrix> {
    let inv = invert(&eff.matrix, tol)?;
    let mut rows = Vec::with_capacity(eff.desired);
    for i in 0..eff.desired {
        let s = C64::new(1.0 / eff.scales[i], 0.0);
        rows.extend(inv.row(i).iter().map(|z| z * s));
    }
    DenseMatrix::new(eff.desired, eff.matrix.cols(), rows)
}

/// `||w_i||^2` for every stream of every receiver, receiver-major.
fn filter_energies(cs: &ChannelSet, design: &BeamformingDesign, tol: f64) -> Result<Vec<f64>> {
    let beams = unit_beams(design)?;
    let mut out = Vec::with_capacity(design.total_streams());
    for k in 1..=cs.users() {
        let w = filters_from(&effective_channel_unit(cs, &beams, k)?, tol)?;
        for i in 0..w.rows() {
            out.push(w.row(i).iter().map(|z| z.norm_sqr()).sum());
        }
    }
    Ok(out)
}

fn rate_from_energies(energies: &[f64], snr: f64) -> f64 {
    let p = snr / energies.len() as f64;
    energies.iter().map(|e| (1.0 + p / e).log2()).sum()
}

/// Sum rate in bits per `M` channel uses at linear total SNR `snr`.
pub fn sum_rate(cs: &ChannelSet, design: &BeamformingDesign, snr: f64) -> Result<f64> {
    if !(snr > 0.0) {
        return Err(Error::Parameter(format!("SNR must be positive, got {snr}")));
    }
    Ok(rate_from_energies(&filter_energies(cs, design, DEFAULT_SOLVE_TOL)?, snr))
}

/// Largest ratio, over receivers, streams and interfering users, of leaked
/// interference power after ZF to the desired power of the stream.
pub fn interference_leakage(cs: &ChannelSet, design: &BeamformingDesign) -> Result<f64> {
    let beams = unit_beams(design)?;
    let mut worst: f64 = 0.0;
    for k in 1..=cs.users() {
        let eff = effective_channel_unit(cs, &beams, k)?;
        let w = filters_from(&eff, DEFAULT_SOLVE_TOL)?;
        let desired = diag_apply(cs.h(k, k), beams.v(k))?;
        let wd = w.matmul(&desired)?;
        for l in (1..=cs.users()).filter(|&l| l != k) {
            let seen = diag_apply(cs.h(k, l), beams.v(l))?;
            let wi = w.matmul(&seen)?;
            for i in 0..w.rows() {
                let leak: f64 = wi.row(i).iter().map(|z| z.norm_sqr()).sum();
                worst = worst.max(leak / wd[(i, i)].norm_sqr());
            }
        }
    }
    Ok(worst)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Clone, Debug)]
pub struct LinkReport {
    pub snr_grid_db: Vec<f64>,
    pub sum_rate_bits: Vec<f64>,
    /// Rate increase per doubling of SNR between the grid endpoints.
    pub slope_streams: f64,
    /// `slope_streams / M`.
    pub normalized_slope: f64,
    pub target_gain: BigRational,
    pub relative_deviation: f64,
}

impl LinkReport {
    pub fn target_gain_f64(&self) -> f64 {
        self.target_gain.to_f64().unwrap_or(f64::NAN)
    }

    /// `snr_db,sum_rate_bits` rows followed by `#`-prefixed summary rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("snr_db,sum_rate_bits\n");
        for (s, r) in self.snr_grid_db.iter().zip(&self.sum_rate_bits) {
            let _ = writeln!(out, "{s},{r:.17e}");
        }
        let _ = writeln!(out, "# slope_streams,{:.17e}", self.slope_streams);
        let _ = writeln!(out, "# normalized_slope,{:.17e}", self.normalized_slope);
        let _ = writeln!(out, "# target_gain,{}", self.target_gain);
        let _ = writeln!(out, "# relative_deviation,{:.17e}", self.relative_deviation);
        out
    }
}

/// Sum rate on `steps` evenly spaced points of `[snr_lo_db, snr_hi_db]` and
/// the slope between the endpoints.
pub fn sweep(
    cs: &ChannelSet,
    design: &BeamformingDesign,
    snr_lo_db: f64,
    snr_hi_db: f64,
    steps: usize,
) -> Result<LinkReport> {
    if !(snr_hi_db > snr_lo_db) {
        return Err(Error::Parameter(format!(
            "SNR window must be increasing, got [{snr_lo_db}, {snr_hi_db}] dB"
        )));
    }
    if !(snr_lo_db >= MIN_SLOPE_SNR_DB) {
        return Err(Error::Parameter(format!(
            "slope estimation needs snr_lo_db >= {MIN_SLOPE_SNR_DB}, got {snr_lo_db}"
        )));
    }
    if steps < 2 {
        return Err(Error::Parameter(format!("need at least 2 grid points, got {steps}")));
    }
    let energies = filter_energies(cs, design, DEFAULT_SOLVE_TOL)?;
    let snr_grid_db: Vec<f64> = (0..steps)
        .map(|i| snr_lo_db + (snr_hi_db - snr_lo_db) * i as f64 / (steps - 1) as f64)
        .collect();
    let sum_rate_bits: Vec<f64> = snr_grid_db
        .iter()
        .map(|&db| rate_from_energies(&energies, db_to_linear(db)))
        .collect();
    let r_lo = sum_rate_bits[0];
    let r_hi = sum_rate_bits[steps - 1];
    let log_span = (snr_hi_db - snr_lo_db) / 10.0 * 10f64.log2();
    let slope_streams = (r_hi - r_lo) / log_span;
    let normalized_slope = slope_streams / design.realizations() as f64;
    let target_gain = dof::proposed_gain(design.users(), u64::from(design.n_star()))?;
    let target = target_gain.to_f64().unwrap_or(f64::NAN);
    Ok(LinkReport {
        snr_grid_db,
        sum_rate_bits,
        slope_streams,
        normalized_slope,
        relative_deviation: (normalized_slope - target).abs() / target,
        target_gain,
    })
}

/// Two-point slope estimate over `[snr_lo_db, snr_hi_db]`.
pub fn estimate_slope(cs: &ChannelSet, design: &BeamformingDesign, snr_lo_db: f64, snr_hi_db: f64) -> Result<LinkReport> {
    sweep(cs, design, snr_lo_db, snr_hi_db, 2)
}

//! Random frequency-selective channel sets and their file format.
//!
//! A [`ChannelSet`] holds the `K x K` grid of diagonal channel operators
//! `H[k][l]` (receiver `k`, transmitter `l`), each of length `M`. Users are
//! indexed from 1 in the public API.

use std::f64::consts::TAU;
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fileio;
use crate::numerics::{DiagonalOperator, C64};

pub const CHANNEL_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_H_MIN: f64 = 0.5;
pub const DEFAULT_H_MAX: f64 = 2.0;
/// Relative rounding allowance on the magnitude band (polar construction is
/// not exact to the last bit).
const BOUND_SLACK: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    k: usize,
    m: usize,
    h: Vec<DiagonalOperator>,
    seed: Option<u64>,
    h_min: f64,
    h_max: f64,
}

fn check_bounds(h_min: f64, h_max: f64) -> Result<()> {
    if !(h_min > 0.0 && h_min <= h_max && h_max.is_finite()) {
        return Err(Error::Parameter(format!(
            "magnitude bounds must satisfy 0 < h_min <= h_max < inf, got [{h_min}, {h_max}]"
        )));
    }
    Ok(())
}

fn check_users(k: usize) -> Result<()> {
    if k < 3 {
        return Err(Error::Parameter(format!("need K >= 3 users, got K = {k}")));
    }
    Ok(())
}

impl ChannelSet {
    /// Assembles a channel set from a row-major list of `K*K` operators
    /// (`h[(k-1)*K + (l-1)]` is `H[k][l]`) and checks every invariant.
    pub fn new(
        k: usize,
        m: usize,
        h: Vec<DiagonalOperator>,
        seed: Option<u64>,
        h_min: f64,
        h_max: f64,
    ) -> Result<Self> {
        check_users(k)?;
        if m == 0 {
            return Err(Error::Parameter("need M >= 1 channel realizations".into()));
        }
        check_bounds(h_min, h_max)?;
        if h.len() != k * k {
            return Err(Error::DimensionMismatch {
                context: "channel grid",
                expected: k * k,
                found: h.len(),
            });
        }
        for (idx, op) in h.iter().enumerate() {
            if op.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "channel operator length",
                    expected: m,
                    found: op.len(),
                });
            }
            for (i, z) in op.entries().iter().enumerate() {
                let mag = z.norm();
                if !(mag >= h_min * (1.0 - BOUND_SLACK) && mag <= h_max * (1.0 + BOUND_SLACK)) {
                    return Err(Error::Invariant(format!(
                        "H[{}][{}] entry {} has magnitude {mag:e}, outside [{h_min}, {h_max}]",
                        idx / k + 1,
                        idx % k + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(Self {
            k,
            m,
            h,
            seed,
            h_min,
            h_max,
        })
    }

    /// Every operator is the identity; the degenerate fixture on which the
    /// construction collapses.
    pub fn identity(k: usize, m: usize) -> Result<Self> {
        Self::new(k, m, vec![DiagonalOperator::identity(m); k * k], None, 1.0, 1.0)
    }

    pub fn users(&self) -> usize {
        self.k
    }

    pub fn realizations(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.h_min, self.h_max)
    }

    /// `H[rx][tx]`, 1-based. Panics on out-of-range indices.
    pub fn h(&self, rx: usize, tx: usize) -> &DiagonalOperator {
        assert!(
            (1..=self.k).contains(&rx) && (1..=self.k).contains(&tx),
            "user index out of range: ({rx}, {tx}) with K = {}",
            self.k
        );
        &self.h[(rx - 1) * self.k + (tx - 1)]
    }

    pub fn operators(&self) -> impl Iterator<Item = &DiagonalOperator> {
        self.h.iter()
    }

    pub fn to_json(&self) -> String {
        let file = ChannelFile {
            format_version: CHANNEL_FORMAT_VERSION,
            k: self.k,
            m: self.m,
            seed: self.seed,
            h_min: self.h_min,
            h_max: self.h_max,
            h: (0..self.k)
                .map(|r| {
                    (0..self.k)
                        .map(|c| {
                            self.h[r * self.k + c]
                                .entries()
                                .iter()
                                .map(|z| [z.re, z.im])
                                .collect()
                        })
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("channel file serializes")
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let malformed = |reason: String| Error::Format {
            path: origin.to_path_buf(),
            reason,
        };
        let file: ChannelFile = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
        if file.format_version != CHANNEL_FORMAT_VERSION {
            return Err(malformed(format!(
                "unsupported format_version {}",
                file.format_version
            )));
        }
        check_users(file.k)?;
        if file.h.len() != file.k || file.h.iter().any(|row| row.len() != file.k) {
            return Err(malformed(format!("H must be a {0}x{0} grid", file.k)));
        }
        let mut ops = Vec::with_capacity(file.k * file.k);
        for row in &file.h {
            for entry in row {
                if entry.len() != file.m {
                    return Err(malformed(format!(
                        "every H entry must have M = {} values, found {}",
                        file.m,
                        entry.len()
                    )));
                }
                let op = DiagonalOperator::new(entry.iter().map(|[re, im]| C64::new(*re, *im)).collect())?;
                ops.push(op);
            }
        }
        Self::new(file.k, file.m, ops, file.seed, file.h_min, file.h_max)
    }
}

#[derive(Serialize, Deserialize)]
struct ChannelFile {
    format_version: u32,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "M")]
    m: usize,
    seed: Option<u64>,
    h_min: f64,
    h_max: f64,
    #[serde(rename = "H")]
    h: Vec<Vec<Vec<[f64; 2]>>>,
}

/// Draws each entry with magnitude uniform on `[h_min, h_max]` and phase
/// uniform on `[0, 2π)`, independently over `(k, l, i)`.
pub fn generate_channels(k: usize, m: usize, seed: u64, h_min: f64, h_max: f64) -> Result<ChannelSet> {
    check_users(k)?;
    check_bounds(h_min, h_max)?;
    if m == 0 {
        return Err(Error::Parameter("need M >= 1 channel realizations".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let magnitude = Uniform::new_inclusive(h_min, h_max);
    let phase = Uniform::new(0.0, TAU);
    let mut ops = Vec::with_capacity(k * k);
    for _ in 0..k * k {
        let entries = (0..m)
            .map(|_| C64::from_polar(magnitude.sample(&mut rng), phase.sample(&mut rng)))
            .collect();
        ops.push(DiagonalOperator::new(entries)?);
    }
    ChannelSet::new(k, m, ops, Some(seed), h_min, h_max)
}

pub fn save_channels(cs: &ChannelSet, path: &Path) -> Result<()> {
    fileio::write_atomic(path, cs.to_json().as_bytes())
}

pub fn load_channels(path: &Path) -> Result<ChannelSet> {
    ChannelSet::from_json(&fileio::read_to_string(path)?, path)
}

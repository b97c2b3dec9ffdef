//! Certification of a design against the alignment conditions.
//!
//! Receiver 1 must see all interference aligned exactly (checked as an
//! entrywise residual). Every other receiver needs each `T_l^[k] V3` inside
//! the span of `V1` (checked as subspace inclusion), and every receiver
//! needs its desired and interference directions to be linearly independent
//! so zero forcing can separate them.

use serde::Serialize;

use crate::beamformer::{compute_t, BeamformingDesign};
use crate::channel::ChannelSet;
use crate::dof;
use crate::error::{Error, Result};
use crate::numerics::{diag_apply, inclusion_witness, rank_revealing, DenseMatrix};

/// Default threshold for [`verify_design`].
pub const DEFAULT_VERIFY_TOL: f64 = 1e-8;
/// Default threshold for the receiver-1 residual on its own.
pub const DEFAULT_ALIGNMENT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlignmentResidual {
    pub user: usize,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InclusionCheck {
    /// Receiver `k` of `T_l^[k]`.
    pub rx: usize,
    /// Transmitter `l` of `T_l^[k]`.
    pub tx: usize,
    pub rank_v1: usize,
    pub rank_joint: usize,
    pub included: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EffectiveRankCheck {
    pub receiver: usize,
    pub rank: usize,
    /// Column count of the effective matrix; full column rank is required.
    pub required: usize,
    pub condition_indicator: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ColumnRankCheck {
    pub user: usize,
    pub rank: usize,
    pub columns: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StreamCountCheck {
    pub n_star: u32,
    pub expected_d3: String,
    pub expected_d1: String,
    pub d: Vec<usize>,
    pub m: usize,
    pub d1_ok: bool,
    pub d3_ok: bool,
    pub m_ok: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlignmentReport {
    pub tol: f64,
    pub rx1_alignment: Vec<AlignmentResidual>,
    pub table1_inclusions: Vec<InclusionCheck>,
    pub effective_ranks: Vec<EffectiveRankCheck>,
    pub column_ranks: Vec<ColumnRankCheck>,
    pub stream_counts: StreamCountCheck,
}

/// Names of the individual checks, as used in reports and by the CLI.
pub const CHECK_NAMES: [&str; 5] = [
    "rx1_alignment",
    "table1_inclusions",
    "effective_rank",
    "column_rank",
    "stream_counts",
];

impl AlignmentReport {
    pub fn alignment_pass(&self) -> bool {
        self.rx1_alignment.iter().all(|r| r.pass)
    }

    pub fn inclusions_pass(&self) -> bool {
        self.table1_inclusions.iter().all(|r| r.included)
    }

    pub fn effective_rank_pass(&self) -> bool {
        self.effective_ranks.iter().all(|r| r.pass)
    }

    pub fn column_rank_pass(&self) -> bool {
        self.column_ranks.iter().all(|r| r.pass)
    }

    pub fn stream_counts_pass(&self) -> bool {
        self.stream_counts.pass
    }

    fn verdicts(&self) -> [bool; 5] {
        [
            self.alignment_pass(),
            self.inclusions_pass(),
            self.effective_rank_pass(),
            self.column_rank_pass(),
            self.stream_counts_pass(),
        ]
    }

    pub fn overall(&self) -> bool {
        self.verdicts().iter().all(|&v| v)
    }

    pub fn failed_checks(&self) -> Vec<&'static str> {
        CHECK_NAMES
            .iter()
            .zip(self.verdicts())
            .filter(|(_, ok)| !ok)
            .map(|(name, _)| *name)
            .collect()
    }

    /// One JSON object per line: a record per individual check, then a
    /// summary record.
    pub fn to_records(&self) -> String {
        #[derive(Serialize)]
        #[serde(tag = "check", rename_all = "snake_case")]
        enum Record<'a> {
            Rx1Alignment(&'a AlignmentResidual),
            Table1Inclusions(&'a InclusionCheck),
            EffectiveRank(&'a EffectiveRankCheck),
            ColumnRank(&'a ColumnRankCheck),
            StreamCounts(&'a StreamCountCheck),
            Overall { tol: f64, pass: bool, failed: Vec<&'static str> },
        }
        let mut records: Vec<Record> = Vec::new();
        records.extend(self.rx1_alignment.iter().map(Record::Rx1Alignment));
        records.extend(self.table1_inclusions.iter().map(Record::Table1Inclusions));
        records.extend(self.effective_ranks.iter().map(Record::EffectiveRank));
        records.extend(self.column_ranks.iter().map(Record::ColumnRank));
        records.push(Record::StreamCounts(&self.stream_counts));
        records.push(Record::Overall {
            tol: self.tol,
            pass: self.overall(),
            failed: self.failed_checks(),
        });
        let mut out = String::new();
        for r in &records {
            out.push_str(&serde_json::to_string(r).expect("report record serializes"));
            out.push('\n');
        }
        out
    }
}

fn check_consistent(cs: &ChannelSet, design: &BeamformingDesign) -> Result<()> {
    if cs.users() != design.users() {
        return Err(Error::DimensionMismatch {
            context: "user count of channels vs design",
            expected: cs.users(),
            found: design.users(),
        });
    }
    if cs.realizations() != design.realizations() {
        return Err(Error::DimensionMismatch {
            context: "realizations of channels vs design",
            expected: cs.realizations(),
            found: design.realizations(),
        });
    }
    Ok(())
}

/// Desired block and interference basis seen by receiver `k`:
/// `(H^[11] V1, H^[13] V3)` at `k = 1`, `(H^[kk] Vk, H^[k1] V1)` otherwise.
pub fn receiver_blocks(cs: &ChannelSet, design: &BeamformingDesign, k: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    check_consistent(cs, design)?;
    if k == 0 || k > cs.users() {
        return Err(Error::Parameter(format!("receiver {k} out of range 1..={}", cs.users())));
    }
    let desired = diag_apply(cs.h(k, k), design.v(k))?;
    let interference = if k == 1 {
        diag_apply(cs.h(1, 3), design.v(3))?
    } else {
        diag_apply(cs.h(k, 1), design.v(1))?
    };
    Ok((desired, interference))
}

/// `[desired | interference]` for receiver `k`, unnormalized.
pub fn effective_matrix(cs: &ChannelSet, design: &BeamformingDesign, k: usize) -> Result<DenseMatrix> {
    let (desired, interference) = receiver_blocks(cs, design, k)?;
    desired.hstack(&interference)
}

/// `||H^[1i] V^[i] - H^[13] V^[3]|| / ||H^[13] V^[3]||` for each `i` outside `{1, 3}`.
pub fn check_alignment_rx1(cs: &ChannelSet, design: &BeamformingDesign, tol: f64) -> Result<Vec<AlignmentResidual>> {
    check_consistent(cs, design)?;
    let reference = diag_apply(cs.h(1, 3), design.v(3))?;
    let ref_norm = reference.frobenius_norm();
    let mut out = Vec::new();
    for user in (2..=cs.users()).filter(|&u| u != 3) {
        let seen = diag_apply(cs.h(1, user), design.v(user))?;
        let residual = if seen.cols() != reference.cols() {
            f64::INFINITY
        } else if ref_norm > 0.0 {
            seen.sub(&reference)?.frobenius_norm() / ref_norm
        } else {
            seen.frobenius_norm()
        };
        out.push(AlignmentResidual {
            user,
            residual,
            pass: residual <= tol,
        });
    }
    Ok(out)
}

/// `span(T_l^[k] V3) ⊆ span(V1)` for every ordered pair `k != l` in `{2..K}`.
pub fn check_table1_inclusions(cs: &ChannelSet, design: &BeamformingDesign, tol: f64) -> Result<Vec<InclusionCheck>> {
    check_consistent(cs, design)?;
    let t = compute_t(cs)?;
    let v1 = design.v(1);
    let v3 = design.v(3);
    let mut out = Vec::new();
    for (&(rx, tx), op) in t.iter() {
        let w = inclusion_witness(&diag_apply(op, v3)?, v1, tol)?;
        out.push(InclusionCheck {
            rx,
            tx,
            rank_v1: w.rank_container,
            rank_joint: w.rank_joint,
            included: w.included(),
        });
    }
    Ok(out)
}

/// Full column rank of every receiver's `[desired | interference]` matrix.
pub fn check_effective_rank(cs: &ChannelSet, design: &BeamformingDesign, tol: f64) -> Result<Vec<EffectiveRankCheck>> {
    check_consistent(cs, design)?;
    (1..=cs.users())
        .map(|k| {
            let eff = effective_matrix(cs, design, k)?;
            let info = rank_revealing(&eff, tol);
            Ok(EffectiveRankCheck {
                receiver: k,
                rank: info.rank,
                required: eff.cols(),
                condition_indicator: info.condition_indicator(),
                pass: info.rank == eff.cols(),
            })
        })
        .collect()
}

pub fn check_column_ranks(cs: &ChannelSet, design: &BeamformingDesign, tol: f64) -> Result<Vec<ColumnRankCheck>> {
    check_consistent(cs, design)?;
    Ok((1..=design.users())
        .map(|user| {
            let v = design.v(user);
            let rank = rank_revealing(v, tol).rank;
            ColumnRankCheck {
                user,
                rank,
                columns: v.cols(),
                pass: rank == v.cols(),
            }
        })
        .collect())
}

/// Compares the design's stream counts and `M` against the binomial counts
/// for its declared `n*`.
pub fn check_stream_counts(design: &BeamformingDesign) -> Result<StreamCountCheck> {
    let sc = dof::stream_counts(design.users(), u64::from(design.n_star()))?;
    let d = design.stream_vector();
    let d1_ok = sc.d1 == d[0].into();
    let d3_ok = d[1..].iter().all(|&x| sc.d3 == x.into());
    let m_ok = sc.channel_uses() == design.realizations().into();
    Ok(StreamCountCheck {
        n_star: design.n_star(),
        expected_d3: sc.d3.to_string(),
        expected_d1: sc.d1.to_string(),
        d,
        m: design.realizations(),
        d1_ok,
        d3_ok,
        m_ok,
        pass: d1_ok && d3_ok && m_ok,
    })
}

/// Runs every check at threshold `tol`. Failing checks are report entries;
/// only inconsistent inputs or singular channels produce an `Err`.
pub fn verify_design(cs: &ChannelSet, design: &BeamformingDesign, tol: f64) -> Result<AlignmentReport> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    check_consistent(cs, design)?;
    Ok(AlignmentReport {
        tol,
        rx1_alignment: check_alignment_rx1(cs, design, tol)?,
        table1_inclusions: check_table1_inclusions(cs, design, tol)?,
        effective_ranks: check_effective_rank(cs, design, tol)?,
        column_ranks: check_column_ranks(cs, design, tol)?,
        stream_counts: check_stream_counts(design)?,
    })
}

//! Exact stream counts and multiplexing-gain formulas.
//!
//! The proposed construction takes every generator monomial whose exponent
//! vector has coordinate sum at most `n*` (for `V3`) or `n* + 1` (for `V1`),
//! so the stream counts are simplex lattice-point counts, i.e. binomials.
//! The original scheme bounds every coordinate separately, giving box counts
//! `(m+1)^N` and `(m+2)^N`. All arithmetic here is arbitrary precision.

use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Nonnegative generator exponents `n_kl` in canonical generator order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExponentVector(pub Vec<u32>);

impl ExponentVector {
    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&e| u64::from(e)).sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The vector with one unit removed from its first nonzero coordinate,
    /// together with that coordinate. `None` for the zero vector.
    pub fn parent(&self) -> Option<(usize, ExponentVector)> {
        let g = self.0.iter().position(|&e| e > 0)?;
        let mut p = self.0.clone();
        p[g] -= 1;
        Some((g, ExponentVector(p)))
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

fn check_users(k: usize) -> Result<()> {
    if k < 3 {
        return Err(Error::Parameter(format!("need K >= 3 users, got K = {k}")));
    }
    Ok(())
}

/// Number of generators `N = (K-1)(K-2) - 1`.
pub fn generator_count(k: usize) -> Result<usize> {
    check_users(k)?;
    Ok((k - 1) * (k - 2) - 1)
}

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc = acc * BigUint::from(n - k + i) / BigUint::from(i);
    }
    acc
}

/// Compositions of exactly `total` into `n` ordered nonnegative parts,
/// lexicographically ascending.
fn compositions(n: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<ExponentVector>) {
    if prefix.len() + 1 == n {
        prefix.push(total);
        out.push(ExponentVector(prefix.clone()));
        prefix.pop();
        return;
    }
    for first in 0..=total {
        prefix.push(first);
        compositions(n, total - first, prefix, out);
        prefix.pop();
    }
}

/// All exponent vectors of length `n` with coordinate sum `<= budget`, in
/// graded-lexicographic order (by degree, then lexicographically ascending).
pub fn enumerate_exponents(n: usize, budget: u32) -> Vec<ExponentVector> {
    let mut out = Vec::new();
    if n == 0 {
        out.push(ExponentVector(Vec::new()));
        return out;
    }
    let mut prefix = Vec::with_capacity(n);
    for degree in 0..=budget {
        compositions(n, degree, &mut prefix, &mut out);
    }
    out
}

/// Position of each exponent vector in an enumeration.
pub fn exponent_index(list: &[ExponentVector]) -> HashMap<&ExponentVector, usize> {
    list.iter().enumerate().map(|(i, e)| (e, i)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamCounts {
    /// Streams of every user other than user 1.
    pub d3: BigUint,
    /// Streams of user 1.
    pub d1: BigUint,
}

impl StreamCounts {
    pub fn channel_uses(&self) -> BigUint {
        &self.d3 + &self.d1
    }

    pub fn streams_total(&self, k: usize) -> BigUint {
        BigUint::from(k - 1) * &self.d3 + &self.d1
    }

    /// `(d3, d1)` as machine integers, for building matrices.
    pub fn to_usize(&self) -> Option<(usize, usize)> {
        Some((self.d3.to_usize()?, self.d1.to_usize()?))
    }
}

/// `d3 = C(n*+N, N)` and `d1 = C(n*+N+1, N)`.
pub fn stream_counts(k: usize, n_star: u64) -> Result<StreamCounts> {
    let n = generator_count(k)? as u64;
    Ok(StreamCounts {
        d3: binomial(n_star + n, n),
        d1: binomial(n_star + n + 1, n),
    })
}

/// Channel uses the proposed construction occupies, `d3 + d1`.
pub fn proposed_channel_uses(k: usize, n_star: u64) -> Result<BigUint> {
    Ok(stream_counts(k, n_star)?.channel_uses())
}

fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Gain of an aligned design from its stream counts:
/// `((K-1) d3 + d1) / (d3 + d1)`.
pub fn gain_from_streams(k: usize, d3: &BigUint, d1: &BigUint) -> BigRational {
    ratio(BigUint::from(k - 1) * d3 + d1, d3 + d1)
}

/// `((K-1)(n*+1) + n* + N + 1) / (2n* + N + 2)`.
pub fn proposed_gain(k: usize, n_star: u64) -> Result<BigRational> {
    let n = BigUint::from(generator_count(k)?);
    let ns = BigUint::from(n_star);
    let one = BigUint::one();
    let num = BigUint::from(k - 1) * (&ns + &one) + &ns + &n + &one;
    let den = BigUint::from(2u32) * &ns + &n + BigUint::from(2u32);
    Ok(ratio(num, den))
}

/// Gain for `K` users with `M_ant` antennas each, treated as a
/// `K*M_ant`-user single-antenna channel.
pub fn mimo_gain(k: usize, m_ant: usize, n_star: u64) -> Result<BigRational> {
    check_users(k)?;
    if m_ant == 0 {
        return Err(Error::Parameter("need at least one antenna per node".into()));
    }
    proposed_gain(k * m_ant, n_star)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Original,
    Proposed,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Proposed => "proposed",
            Scheme::Original => "original",
        })
    }
}

/// One operating point of a scheme.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GainPoint {
    pub scheme: Scheme,
    /// `n*` for the proposed scheme, `m` for the original one.
    pub param: u64,
    pub channel_uses: BigUint,
    pub streams_total: BigUint,
    pub gain: BigRational,
}

impl GainPoint {
    pub fn gain_f64(&self) -> f64 {
        let num = self.gain.numer().to_f64().unwrap_or(f64::NAN);
        let den = self.gain.denom().to_f64().unwrap_or(f64::NAN);
        num / den
    }
}

pub fn proposed_point(k: usize, n_star: u64) -> Result<GainPoint> {
    let sc = stream_counts(k, n_star)?;
    Ok(GainPoint {
        scheme: Scheme::Proposed,
        param: n_star,
        gain: gain_from_streams(k, &sc.d3, &sc.d1),
        channel_uses: sc.channel_uses(),
        streams_total: sc.streams_total(k),
    })
}

/// Comparator point of the original scheme at parameter `m`:
/// `d3 = (m+1)^N`, `d1 = (m+2)^N`.
pub fn original_gain(k: usize, m: u64) -> Result<GainPoint> {
    let n = generator_count(k)?;
    let d3 = num_traits::pow(BigUint::from(m + 1), n);
    let d1 = num_traits::pow(BigUint::from(m + 2), n);
    Ok(GainPoint {
        scheme: Scheme::Original,
        param: m,
        gain: gain_from_streams(k, &d3, &d1),
        channel_uses: &d3 + &d1,
        streams_total: BigUint::from(k - 1) * &d3 + &d1,
    })
}

/// Operating points of both schemes up to a channel-use budget.
#[derive(Clone, Debug)]
pub struct GainTable {
    pub users: usize,
    pub max_channel_uses: u64,
    /// Proposed points, `n*` ascending (hence channel uses ascending).
    pub proposed: Vec<GainPoint>,
    /// Original points, `m` ascending.
    pub original: Vec<GainPoint>,
}

impl GainTable {
    pub fn points(&self, scheme: Scheme) -> &[GainPoint] {
        match scheme {
            Scheme::Proposed => &self.proposed,
            Scheme::Original => &self.original,
        }
    }

    /// Best gain among the scheme's points that fit in `budget` channel uses.
    pub fn envelope(&self, scheme: Scheme, budget: u64) -> Option<BigRational> {
        let budget = BigUint::from(budget);
        self.points(scheme)
            .iter()
            .filter(|p| p.channel_uses <= budget)
            .map(|p| p.gain.clone())
            .max()
    }

    /// Running best gain along the scheme's points, as `(channel_uses, best)`.
    pub fn running_envelope(&self, scheme: Scheme) -> Vec<(BigUint, BigRational)> {
        let mut best: Option<BigRational> = None;
        self.points(scheme)
            .iter()
            .map(|p| {
                let b = match best.take() {
                    Some(b) if b >= p.gain => b,
                    _ => p.gain.clone(),
                };
                best = Some(b.clone());
                (p.channel_uses.clone(), b)
            })
            .collect()
    }

    /// `envelope(scheme, b)` for every `b` in `0..=max_channel_uses`, in one
    /// sweep over the points.
    pub fn envelope_by_budget(&self, scheme: Scheme) -> Vec<Option<BigRational>> {
        let steps = self.running_envelope(scheme);
        let mut out = Vec::with_capacity(self.max_channel_uses as usize + 1);
        let mut next = 0;
        let mut best: Option<BigRational> = None;
        for b in 0..=self.max_channel_uses {
            let b = BigUint::from(b);
            while next < steps.len() && steps[next].0 <= b {
                best = Some(steps[next].1.clone());
                next += 1;
            }
            out.push(best.clone());
        }
        out
    }

    /// All rows sorted by (scheme name, channel uses).
    pub fn rows(&self) -> Vec<&GainPoint> {
        let mut rows: Vec<&GainPoint> = self.original.iter().chain(&self.proposed).collect();
        rows.sort_by(|a, b| {
            (a.scheme.to_string(), &a.channel_uses).cmp(&(b.scheme.to_string(), &b.channel_uses))
        });
        rows
    }
}

pub fn gain_table(k: usize, max_channel_uses: u64) -> Result<GainTable> {
    check_users(k)?;
    if max_channel_uses < 3 {
        return Err(Error::Parameter(format!(
            "max channel uses must be at least 3, got {max_channel_uses}"
        )));
    }
    let cap = BigUint::from(max_channel_uses);
    let collect = |make: &dyn Fn(u64) -> Result<GainPoint>| -> Result<Vec<GainPoint>> {
        let mut out = Vec::new();
        for param in 0.. {
            let p = make(param)?;
            if p.channel_uses > cap {
                break;
            }
            out.push(p);
        }
        Ok(out)
    };
    Ok(GainTable {
        users: k,
        max_channel_uses,
        proposed: collect(&|n| proposed_point(k, n))?,
        original: collect(&|m| original_gain(k, m))?,
    })
}

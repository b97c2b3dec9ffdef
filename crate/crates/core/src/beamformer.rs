//! Construction of the aligned transmit beamformers.
//!
//! Every beam column is a monomial in the diagonal generators
//! `G_kl = (T_3^[2])^-1 T_l^[k]` applied to a seed vector (all ones by
//! default). `V1` takes all monomials of total degree `<= n* + 1`; `V3` takes
//! the monomials of degree `<= n*`, premultiplied by `(T_3^[2])^-1`. Every
//! other user `i` reuses `V3` through `(H^[1i])^-1 H^[13]`, which aligns all
//! interference at receiver 1 exactly.

use std::collections::BTreeMap;
use std::path::Path;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::dof::{self, exponent_index, ExponentVector};
use crate::error::{Error, Result};
use crate::fileio;
use crate::numerics::{diag_apply, rank_revealing, DenseMatrix, DiagonalOperator, C64, DEFAULT_INV_EPS, DEFAULT_RANK_TOL};

pub const DESIGN_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_MAX_N_STAR: u32 = 6;
/// Estimated column dynamic range above which construction logs a warning.
pub const DYNAMIC_RANGE_WARN: f64 = 1e12;

/// Composite channels `T_j^[k] = (H^[k1])^-1 H^[kj] (H^[1j])^-1 H^[13]` for
/// `j, k` in `{2..K}`, `j != k`.
#[derive(Clone, Debug)]
pub struct TMatrices {
    users: usize,
    map: BTreeMap<(usize, usize), DiagonalOperator>,
}

impl TMatrices {
    /// `T_j^[k]`, where `rx` is the superscript `k` and `tx` the subscript `j`.
    pub fn get(&self, rx: usize, tx: usize) -> Option<&DiagonalOperator> {
        self.map.get(&(rx, tx))
    }

    pub fn users(&self) -> usize {
        self.users
    }

    /// Iterates `((rx, tx), T_tx^[rx])` in lexicographic `(rx, tx)` order.
    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &DiagonalOperator)> {
        self.map.iter()
    }
}

pub fn compute_t(cs: &ChannelSet) -> Result<TMatrices> {
    compute_t_with(cs, DEFAULT_INV_EPS)
}

pub fn compute_t_with(cs: &ChannelSet, inv_eps: f64) -> Result<TMatrices> {
    let k_users = cs.users();
    let h13 = cs.h(1, 3);
    let mut map = BTreeMap::new();
    for k in 2..=k_users {
        let h_k1_inv = cs.h(k, 1).inverse(inv_eps)?;
        for j in (2..=k_users).filter(|&j| j != k) {
            let t = h_k1_inv
                .compose(cs.h(k, j))?
                .compose(&cs.h(1, j).inverse(inv_eps)?)?
                .compose(h13)?;
            map.insert((k, j), t);
        }
    }
    Ok(TMatrices { users: k_users, map })
}

/// The `N` diagonal generators and the `V3` prefactor.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    /// `(T_3^[2])^-1`.
    pub base_inverse: DiagonalOperator,
    /// `(T_3^[2])^-1 T_l^[k]`, in the order of `index_map`.
    pub generators: Vec<DiagonalOperator>,
    /// The `(k, l)` pair behind each generator.
    pub index_map: Vec<(usize, usize)>,
}

impl GeneratorSet {
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Same generators in the order `perm` (a permutation of `0..N`).
    pub fn permuted(&self, perm: &[usize]) -> GeneratorSet {
        GeneratorSet {
            base_inverse: self.base_inverse.clone(),
            generators: perm.iter().map(|&i| self.generators[i].clone()).collect(),
            index_map: perm.iter().map(|&i| self.index_map[i]).collect(),
        }
    }

    /// Columns `prod_g G_g^{e_g} seed` for every exponent vector of degree
    /// `<= budget`, in graded-lex order. Each column is its parent column
    /// times a single generator.
    pub fn family(&self, budget: u32, seed: &[C64]) -> Result<DenseMatrix> {
        let exps = dof::enumerate_exponents(self.len(), budget);
        let index = exponent_index(&exps);
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(exps.len());
        for e in &exps {
            let col = match e.parent() {
                None => seed.to_vec(),
                Some((g, parent)) => self.generators[g].apply_vec(&cols[index[&parent]])?,
            };
            cols.push(col);
        }
        DenseMatrix::from_columns(seed.len(), &cols)
    }

    /// One column evaluated directly as a product of generator powers,
    /// multiplying generators in the order given by `order`.
    pub fn monomial(&self, e: &ExponentVector, seed: &[C64], order: &[usize]) -> Result<Vec<C64>> {
        let mut col = seed.to_vec();
        for &g in order {
            for _ in 0..e.0[g] {
                col = self.generators[g].apply_vec(&col)?;
            }
        }
        Ok(col)
    }

    /// Worst-case ratio of largest to smallest generator entry magnitude.
    fn spread(&self) -> f64 {
        let hi = self.generators.iter().map(DiagonalOperator::max_abs).fold(1.0, f64::max);
        let lo = self.generators.iter().map(DiagonalOperator::min_abs).fold(1.0, f64::min);
        hi / lo
    }
}

pub fn build_generator_set(cs: &ChannelSet) -> Result<GeneratorSet> {
    build_generator_set_from(&compute_t(cs)?, DEFAULT_INV_EPS)
}

fn build_generator_set_from(t: &TMatrices, inv_eps: f64) -> Result<GeneratorSet> {
    let base = t.get(2, 3).expect("T_3^[2] exists for K >= 3");
    let base_inverse = base.inverse(inv_eps)?;
    let mut generators = Vec::new();
    let mut index_map = Vec::new();
    for (&(k, l), op) in t.iter() {
        if (k, l) == (2, 3) {
            continue;
        }
        generators.push(base_inverse.compose(op)?);
        index_map.push((k, l));
    }
    Ok(GeneratorSet {
        base_inverse,
        generators,
        index_map,
    })
}

/// Per-user beamformers and stream counts. `v[0]` belongs to user 1.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamformingDesign {
    k: usize,
    m: usize,
    n_star: u32,
    v: Vec<DenseMatrix>,
}

impl BeamformingDesign {
    /// Checks only the structure (K users, M rows each); the alignment
    /// properties are the verifier's job.
    pub fn new(k: usize, m: usize, n_star: u32, v: Vec<DenseMatrix>) -> Result<Self> {
        if k < 3 {
            return Err(Error::Parameter(format!("need K >= 3 users, got K = {k}")));
        }
        if v.len() != k {
            return Err(Error::DimensionMismatch {
                context: "beamformer count",
                expected: k,
                found: v.len(),
            });
        }
        for vk in &v {
            if vk.rows() != m {
                return Err(Error::DimensionMismatch {
                    context: "beamformer rows",
                    expected: m,
                    found: vk.rows(),
                });
            }
        }
        Ok(Self { k, m, n_star, v })
    }

    pub fn users(&self) -> usize {
        self.k
    }

    pub fn realizations(&self) -> usize {
        self.m
    }

    pub fn n_star(&self) -> u32 {
        self.n_star
    }

    /// `V^[user]`, 1-based.
    pub fn v(&self, user: usize) -> &DenseMatrix {
        &self.v[user - 1]
    }

    /// Swaps in a different beamformer for `user`; rows must still be `M`.
    pub fn replace_v(&mut self, user: usize, v: DenseMatrix) -> Result<()> {
        if v.rows() != self.m {
            return Err(Error::DimensionMismatch {
                context: "beamformer rows",
                expected: self.m,
                found: v.rows(),
            });
        }
        self.v[user - 1] = v;
        Ok(())
    }

    /// Stream count of `user`, 1-based.
    pub fn d(&self, user: usize) -> usize {
        self.v[user - 1].cols()
    }

    pub fn stream_vector(&self) -> Vec<usize> {
        self.v.iter().map(DenseMatrix::cols).collect()
    }

    pub fn total_streams(&self) -> usize {
        self.v.iter().map(DenseMatrix::cols).sum()
    }

    pub fn to_json(&self) -> String {
        let file = DesignFile {
            format_version: DESIGN_FORMAT_VERSION,
            k: self.k,
            m: self.m,
            n_star: self.n_star,
            d: self.stream_vector(),
            v: self
                .v
                .iter()
                .map(|vk| {
                    vk.columns()
                        .into_iter()
                        .map(|col| col.iter().map(|z| [z.re, z.im]).collect())
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("design file serializes")
    }

    /// Parses a design file. Stream counts are taken from the stored
    /// columns; a disagreeing `d` field is logged and ignored.
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let malformed = |reason: String| Error::Format {
            path: origin.to_path_buf(),
            reason,
        };
        let file: DesignFile = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
        if file.format_version != DESIGN_FORMAT_VERSION {
            return Err(malformed(format!(
                "unsupported format_version {}",
                file.format_version
            )));
        }
        if file.v.len() != file.k {
            return Err(malformed(format!(
                "expected {} beamformers, found {}",
                file.k,
                file.v.len()
            )));
        }
        let mut v = Vec::with_capacity(file.k);
        for (u, cols) in file.v.iter().enumerate() {
            let cols: Vec<Vec<C64>> = cols
                .iter()
                .map(|col| col.iter().map(|[re, im]| C64::new(*re, *im)).collect())
                .collect();
            if let Some(bad) = cols.iter().find(|c| c.len() != file.m) {
                return Err(malformed(format!(
                    "V[{}] has a column of length {}, expected M = {}",
                    u + 1,
                    bad.len(),
                    file.m
                )));
            }
            v.push(DenseMatrix::from_columns(file.m, &cols)?);
        }
        let design = Self::new(file.k, file.m, file.n_star, v)?;
        if design.stream_vector() != file.d {
            log::warn!(
                "{}: stored d = {:?} disagrees with column counts {:?}",
                origin.display(),
                file.d,
                design.stream_vector()
            );
        }
        Ok(design)
    }
}

#[derive(Serialize, Deserialize)]
struct DesignFile {
    format_version: u32,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "M")]
    m: usize,
    n_star: u32,
    d: Vec<usize>,
    /// Per user, per column, per entry `[re, im]`.
    #[serde(rename = "V")]
    v: Vec<Vec<Vec<[f64; 2]>>>,
}

pub fn save_design(design: &BeamformingDesign, path: &Path) -> Result<()> {
    fileio::write_atomic(path, design.to_json().as_bytes())
}

pub fn load_design(path: &Path) -> Result<BeamformingDesign> {
    BeamformingDesign::from_json(&fileio::read_to_string(path)?, path)
}

/// Knobs for the construction.
#[derive(Clone, Debug)]
pub struct DesignBuilder {
    n_star: u32,
    seed_vector: Option<Vec<C64>>,
    rank_tol: f64,
    inv_eps: f64,
    max_n_star: u32,
}

impl DesignBuilder {
    pub fn new(n_star: u32) -> Self {
        Self {
            n_star,
            seed_vector: None,
            rank_tol: DEFAULT_RANK_TOL,
            inv_eps: DEFAULT_INV_EPS,
            max_n_star: DEFAULT_MAX_N_STAR,
        }
    }

    /// Replaces the all-ones seed vector.
    pub fn seed_vector(mut self, seed: Vec<C64>) -> Self {
        self.seed_vector = Some(seed);
        self
    }

    pub fn rank_tol(mut self, tol: f64) -> Self {
        self.rank_tol = tol;
        self
    }

    pub fn inv_eps(mut self, eps: f64) -> Self {
        self.inv_eps = eps;
        self
    }

    pub fn max_n_star(mut self, cap: u32) -> Self {
        self.max_n_star = cap;
        self
    }

    fn prepare(&self, cs: &ChannelSet) -> Result<(GeneratorSet, Vec<C64>)> {
        if self.n_star > self.max_n_star {
            return Err(Error::Parameter(format!(
                "n* = {} exceeds the configured cap of {}",
                self.n_star, self.max_n_star
            )));
        }
        let required = required_realizations(cs.users(), self.n_star)?;
        if cs.realizations() != required {
            return Err(Error::DimensionBudget {
                required,
                found: cs.realizations(),
            });
        }
        let seed = match &self.seed_vector {
            Some(s) if s.len() != required => {
                return Err(Error::DimensionMismatch {
                    context: "seed vector",
                    expected: required,
                    found: s.len(),
                })
            }
            Some(s) => s.clone(),
            None => vec![C64::new(1.0, 0.0); required],
        };
        let gens = build_generator_set_from(&compute_t_with(cs, self.inv_eps)?, self.inv_eps)?;
        let range = gens.spread().powf(f64::from(self.n_star) + 1.0);
        if range > DYNAMIC_RANGE_WARN {
            log::warn!(
                "estimated beam dynamic range {range:.2e} exceeds {DYNAMIC_RANGE_WARN:.0e} at n* = {}; rank decisions may be unreliable",
                self.n_star
            );
        }
        Ok((gens, seed))
    }

    fn v3_from(&self, gens: &GeneratorSet, seed: &[C64]) -> Result<DenseMatrix> {
        diag_apply(&gens.base_inverse, &gens.family(self.n_star, seed)?)
    }

    fn v1_from(&self, gens: &GeneratorSet, seed: &[C64]) -> Result<DenseMatrix> {
        gens.family(self.n_star + 1, seed)
    }

    pub fn build_v3(&self, cs: &ChannelSet) -> Result<DenseMatrix> {
        let (gens, seed) = self.prepare(cs)?;
        self.v3_from(&gens, &seed)
    }

    pub fn build_v1(&self, cs: &ChannelSet) -> Result<DenseMatrix> {
        let (gens, seed) = self.prepare(cs)?;
        self.v1_from(&gens, &seed)
    }

    /// Assembles all `K` beamformers and checks each has full column rank.
    pub fn build(&self, cs: &ChannelSet) -> Result<BeamformingDesign> {
        let (gens, seed) = self.prepare(cs)?;
        let v3 = self.v3_from(&gens, &seed)?;
        let v1 = self.v1_from(&gens, &seed)?;
        let mut v = Vec::with_capacity(cs.users());
        for user in 1..=cs.users() {
            v.push(match user {
                1 => v1.clone(),
                3 => v3.clone(),
                i => derive_vi_with(cs, &v3, i, self.inv_eps)?,
            });
        }
        for (u, vk) in v.iter().enumerate() {
            let info = rank_revealing(vk, self.rank_tol);
            if info.rank < vk.cols() {
                return Err(Error::Degenerate {
                    what: format!("V[{}]", u + 1),
                    rank: info.rank,
                    required: vk.cols(),
                });
            }
        }
        BeamformingDesign::new(cs.users(), cs.realizations(), self.n_star, v)
    }
}

/// `M` the construction needs: `d3 + d1`.
pub fn required_realizations(k: usize, n_star: u32) -> Result<usize> {
    dof::proposed_channel_uses(k, u64::from(n_star))?
        .to_usize()
        .ok_or_else(|| Error::Parameter(format!("design for K = {k}, n* = {n_star} does not fit in memory")))
}

pub fn build_v3(cs: &ChannelSet, n_star: u32) -> Result<DenseMatrix> {
    DesignBuilder::new(n_star).build_v3(cs)
}

pub fn build_v1(cs: &ChannelSet, n_star: u32) -> Result<DenseMatrix> {
    DesignBuilder::new(n_star).build_v1(cs)
}

pub fn build_design(cs: &ChannelSet, n_star: u32) -> Result<BeamformingDesign> {
    DesignBuilder::new(n_star).build(cs)
}

/// `(H^[1i])^-1 H^[13] V3` for `i` outside `{1, 3}`.
pub fn derive_vi(cs: &ChannelSet, v3: &DenseMatrix, i: usize) -> Result<DenseMatrix> {
    derive_vi_with(cs, v3, i, DEFAULT_INV_EPS)
}

fn derive_vi_with(cs: &ChannelSet, v3: &DenseMatrix, i: usize, inv_eps: f64) -> Result<DenseMatrix> {
    if i == 1 || i == 3 || i == 0 || i > cs.users() {
        return Err(Error::Parameter(format!(
            "derived beamformers exist for users in 2..={} other than 3, got {i}",
            cs.users()
        )));
    }
    let map = cs.h(1, i).inverse(inv_eps)?.compose(cs.h(1, 3))?;
    diag_apply(&map, v3)
}

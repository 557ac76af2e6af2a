//! Finite-depth realizations of `E = ∩ E_i`, where
//! `E_i = {x ∈ [0,1] : dist(x, G_i) <= r_i}` and `G_i = 2^{-e_i} ℤ ∩ [0,1]`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::{dec, dec_signed};
use crate::scale_chain::{ChainError, RegimeTag, ScaleChain};
use crate::sparse_dyadic::{DyadicError, SparseDyadic};

/// Default limit on intervals produced by [`enumerate_window`].
pub const DEFAULT_WINDOW_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FalconerError {
    #[error(transparent)]
    Dyadic(#[from] DyadicError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("regime violation at level {level}: {detail}")]
    RegimeViolation { level: usize, detail: String },
    #[error("chain too shallow: {0}")]
    ChainTooShallow(String),
    #[error("tree condition {condition} fails at level {level}")]
    ConditionFailure { level: usize, condition: TreeCondition },
    #[error("window enumeration exceeded cap {cap} at level {level} ({count} intervals)")]
    CapExceeded { level: usize, count: u128, cap: usize },
    #[error("precondition failed: {0}")]
    PreconditionFailure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// The surviving piece of `F_n` near the lattice point `k · 2^{-e_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeInterval {
    pub level: usize,
    #[serde(with = "dec")]
    pub center_numerator: BigUint,
    #[serde(with = "dec")]
    pub radius_exponent: BigUint,
}

impl LatticeInterval {
    pub fn center(&self, chain: &ScaleChain) -> Result<SparseDyadic, FalconerError> {
        Ok(SparseDyadic::lattice_point(&self.center_numerator, chain.e(self.level)?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelVerdict {
    pub level: usize,
    pub distance: SparseDyadic,
    #[serde(with = "dec")]
    pub radius_exponent: BigUint,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    pub first_failure: Option<usize>,
    pub trace: Vec<LevelVerdict>,
}

/// Checks `x ∈ F_n`, recording the distance to each `G_j`.
pub fn member_depth(chain: &ScaleChain, x: &SparseDyadic, n: usize) -> Result<Membership, FalconerError> {
    if n > chain.radius_depth() {
        return Err(ChainError::LevelOutOfRange { level: n, available: chain.radius_depth() }.into());
    }
    if !x.in_unit_interval() {
        return Err(DyadicError::OutOfUnitInterval.into());
    }
    let mut trace = Vec::with_capacity(n);
    for j in 1..=n {
        let distance = x.dist_to_lattice(chain.e(j)?)?;
        let within = distance.compare(&chain.radius(j)?) != Ordering::Greater;
        trace.push(LevelVerdict { level: j, distance, radius_exponent: chain.rho(j)?.clone(), within });
    }
    let first_failure = trace.iter().find(|v| !v.within).map(|v| v.level);
    Ok(Membership { member: first_failure.is_none(), first_failure, trace })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RapidReason {
    /// `a_i ∈ G_n` for `n >= i`.
    LatticePoint,
    /// `a_i = 2^{-e_i} < r_n` for `n < i`.
    BelowRadius,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RapidTerm {
    pub index: usize,
    pub value: SparseDyadic,
    pub reasons: Vec<(usize, RapidReason)>,
    pub membership: Membership,
}

/// `a_i = 2^{-e_i}` with a certificate that it lies in `F_d` for every
/// level `d` that carries a radius.
pub fn rapid_sequence(chain: &ScaleChain, i: usize) -> Result<RapidTerm, FalconerError> {
    let ei = chain.e(i)?.clone();
    for n in 1..i {
        if !chain.is_branching_at(n)? {
            return Err(FalconerError::RegimeViolation { level: n, detail: "φ_n >= M_n - 1".into() });
        }
    }
    let value = SparseDyadic::pow2_neg(ei.clone());
    let mut reasons = Vec::new();
    for n in 1..=chain.radius_depth() {
        if n >= i {
            reasons.push((n, RapidReason::LatticePoint));
        } else {
            if &ei <= chain.rho(n)? {
                return Err(FalconerError::RegimeViolation { level: n, detail: format!("2^-e_{i} >= r_{n}") });
            }
            reasons.push((n, RapidReason::BelowRadius));
        }
    }
    let membership = member_depth(chain, &value, chain.radius_depth())?;
    debug_assert!(membership.member);
    Ok(RapidTerm { index: i, value, reasons, membership })
}

/// Exponent `x` with `a_{i+1} / a_i = 2^{-x}`, computed from the stored `e`
/// values and from `e_i (M_i - 1)`; both are returned.
pub fn rapid_ratio_exponents(chain: &ScaleChain, i: usize) -> Result<(BigUint, BigUint), FalconerError> {
    let observed = chain.e(i + 1)? - chain.e(i)?;
    let law = chain.e(i)? * BigUint::from(chain.m(i)? - 1);
    Ok((observed, law))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleSumFamily {
    pub indices: Vec<usize>,
    pub elements: Vec<SparseDyadic>,
}

impl TripleSumFamily {
    /// Family with `a_k = 2^{-e_{N_k}}` and no admissibility check.
    pub fn from_indices(chain: &ScaleChain, indices: &[usize]) -> Result<Self, FalconerError> {
        let elements = indices
            .iter()
            .map(|&n| Ok(SparseDyadic::pow2_neg(chain.e(n)?.clone())))
            .collect::<Result<Vec<_>, FalconerError>>()?;
        Ok(Self { indices: indices.to_vec(), elements })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Lists every violated family condition; empty means admissible.
    pub fn invariant_failures(&self, chain: &ScaleChain) -> Vec<String> {
        let mut out = Vec::new();
        for (k, &n) in self.indices.iter().enumerate() {
            if n < 2 {
                out.push(format!("N_{} = {n} < 2", k + 1));
                continue;
            }
            if k > 0 && n <= self.indices[k - 1] {
                out.push(format!("N_{} not increasing", k + 1));
            }
            let factor = if k == 0 { 3 } else { 6 };
            match admissible(chain, n, factor) {
                Ok(true) => {}
                Ok(false) => out.push(format!("{factor}·a_{} > r_m for some m < {n}", k + 1)),
                Err(e) => out.push(format!("a_{}: {e}", k + 1)),
            }
            if k > 0 {
                let half_prev = self.elements[k - 1].mul_pow2(&BigInt::from(-1)).expect("single shift");
                if self.elements[k].compare(&half_prev) == Ordering::Greater {
                    out.push(format!("a_{} > a_{}/2", k + 1, k));
                }
            }
        }
        out
    }
}

/// `factor · 2^{-e_N} <= r_m` for every `m < N`.
fn admissible(chain: &ScaleChain, n: usize, factor: u32) -> Result<bool, FalconerError> {
    let a = SparseDyadic::term(chain.e(n)?.clone(), BigInt::from(factor));
    for m in 1..n {
        if a.compare(&chain.radius(m)?) == Ordering::Greater {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Greedy-minimal indices `N_1 < N_2 < …` with `N_1 >= 2`.
pub fn select_triple_indices(chain: &ScaleChain, k_max: usize) -> Result<TripleSumFamily, FalconerError> {
    let regime = chain.classify_regime();
    if regime.tag != RegimeTag::Branching {
        return Err(FalconerError::RegimeViolation {
            level: regime.witness_level.unwrap_or(1),
            detail: format!("{:?} chain", regime.tag),
        });
    }
    let last = chain.depth().min(chain.radius_depth() + 1);
    let mut indices: Vec<usize> = Vec::new();
    let mut next = 2;
    while indices.len() < k_max {
        let factor = if indices.is_empty() { 3 } else { 6 };
        let found = (next..=last).find(|&n| {
            let halved = match indices.last() {
                Some(&p) => chain.e(n).ok().zip(chain.e(p).ok()).is_some_and(|(a, b)| a > b),
                None => true,
            };
            halved && admissible(chain, n, factor).unwrap_or(false)
        });
        match found {
            Some(n) => {
                indices.push(n);
                next = n + 1;
            }
            None => {
                return Err(FalconerError::ChainTooShallow(format!(
                    "found {} of {k_max} indices within levels 2..={last}",
                    indices.len()
                )))
            }
        }
    }
    TripleSumFamily::from_indices(chain, &indices)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleVerdict {
    pub indices: Vec<usize>,
    pub sum: SparseDyadic,
    pub pass: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleReport {
    pub k: usize,
    pub depth: usize,
    pub singletons: Vec<TripleVerdict>,
    pub triples: Vec<TripleVerdict>,
    pub membership_pass: bool,
    pub invariant_pass: bool,
    pub invariant_failures: Vec<String>,
}

impl TripleReport {
    pub fn passed(&self) -> usize {
        self.triples.iter().filter(|t| t.pass).count()
    }
}

fn verdict(chain: &ScaleChain, indices: Vec<usize>, sum: SparseDyadic, depth: usize) -> Result<TripleVerdict, FalconerError> {
    match member_depth(chain, &sum, depth) {
        Ok(m) => Ok(TripleVerdict {
            indices,
            sum,
            pass: m.member,
            failure: m.first_failure.map(|l| format!("outside E_{l}")),
        }),
        Err(FalconerError::Dyadic(DyadicError::OutOfUnitInterval)) => {
            Ok(TripleVerdict { indices, sum, pass: false, failure: Some("outside [0, 1]".into()) })
        }
        Err(e) => Err(e),
    }
}

/// Checks `a_i + a_j + a_k ∈ F_depth` for all `K^3` ordered triples drawn
/// from the first `K` elements, and `a_i ∈ F_depth` for each of them.
pub fn verify_triple_sum(
    chain: &ScaleChain,
    family: &TripleSumFamily,
    k: usize,
    depth: usize,
) -> Result<TripleReport, FalconerError> {
    if k > family.len() {
        return Err(FalconerError::InvalidArgument(format!("K = {k} exceeds family size {}", family.len())));
    }
    if depth > chain.radius_depth() {
        return Err(ChainError::LevelOutOfRange { level: depth, available: chain.radius_depth() }.into());
    }
    let el = &family.elements[..k];
    let mut singletons = Vec::with_capacity(k);
    for (i, a) in el.iter().enumerate() {
        singletons.push(verdict(chain, vec![i + 1], a.clone(), depth)?);
    }
    let mut triples = Vec::with_capacity(k * k * k);
    for (i, a) in el.iter().enumerate() {
        for (j, b) in el.iter().enumerate() {
            let ij = a.add(b)?;
            for (l, c) in el.iter().enumerate() {
                let sum = ij.add(c)?;
                triples.push(verdict(chain, vec![i + 1, j + 1, l + 1], sum, depth)?);
            }
        }
    }
    let membership_pass = singletons.iter().chain(&triples).all(|t| t.pass);
    let mut invariant_failures = family.invariant_failures(chain);
    if family.indices.len() > k {
        let trimmed = TripleSumFamily { indices: family.indices[..k].to_vec(), elements: el.to_vec() };
        invariant_failures = trimmed.invariant_failures(chain);
    }
    Ok(TripleReport {
        k,
        depth,
        singletons,
        triples,
        membership_pass,
        invariant_pass: invariant_failures.is_empty(),
        invariant_failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreeCondition {
    /// `(r_i - r_{i+1}) q_{i+1} > 3`
    RoomForTwo,
    /// `2 r_{i+1} < 1/q_{i+1}`
    SiblingGap,
    Containment,
    Disjointness,
}

impl std::fmt::Display for TreeCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::RoomForTwo => "(r_i - r_{i+1}) q_{i+1} > 3",
            Self::SiblingGap => "2 r_{i+1} < 1/q_{i+1}",
            Self::Containment => "child inside parent",
            Self::Disjointness => "siblings disjoint",
        })
    }
}

/// `J = [left, left + 2^{-ρ_level}]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeInterval {
    pub level: usize,
    pub left: SparseDyadic,
    #[serde(with = "dec")]
    pub radius_exponent: BigUint,
}

impl TreeInterval {
    pub fn right(&self) -> SparseDyadic {
        self.left.add(&SparseDyadic::pow2_neg(self.radius_exponent.clone())).expect("within cap")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStep {
    pub level: usize,
    pub bit: bool,
    pub contained: bool,
    pub siblings_disjoint: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreePath {
    pub i0: usize,
    pub bits: String,
    pub intervals: Vec<TreeInterval>,
    pub steps: Vec<TreeStep>,
    pub representative: SparseDyadic,
}

fn tree_conditions(chain: &ScaleChain, i: usize) -> Result<Option<TreeCondition>, FalconerError> {
    let e_next = chain.e(i + 1)?;
    let gap = chain.radius(i)?.sub(&chain.radius(i + 1)?)?;
    let scaled = gap.mul_pow2(&BigInt::from(e_next.clone()))?;
    if scaled.compare(&SparseDyadic::term(BigUint::zero(), 3)) != Ordering::Greater {
        return Ok(Some(TreeCondition::RoomForTwo));
    }
    // 2 r_{i+1} < 2^{-e_{i+1}}  ⟺  ρ_{i+1} - 1 > e_{i+1}
    if chain.rho(i + 1)? <= &(e_next + 1u32) {
        return Ok(Some(TreeCondition::SiblingGap));
    }
    Ok(None)
}

/// Follows the word `bits` down the binary tree of nested intervals.
pub fn binary_tree_point(chain: &ScaleChain, bits: &[bool], start_hint: Option<usize>) -> Result<TreePath, FalconerError> {
    let len = bits.len();
    let start = start_hint.unwrap_or(1).max(1);
    let mut first_failure: Option<(usize, TreeCondition)> = None;
    let mut i0 = None;
    let mut cand = start;
    while cand + len <= chain.radius_depth() {
        let mut bad = None;
        for lvl in cand..cand + len {
            if let Some(c) = tree_conditions(chain, lvl)? {
                bad = Some((lvl, c));
                break;
            }
        }
        match bad {
            None => {
                i0 = Some(cand);
                break;
            }
            Some(f) => {
                first_failure.get_or_insert(f);
            }
        }
        cand += 1;
    }
    let Some(i0) = i0 else {
        return Err(match first_failure {
            Some((level, condition)) => FalconerError::ConditionFailure { level, condition },
            None => FalconerError::ChainTooShallow(format!(
                "a word of length {len} from level {start} needs radii through level {}",
                start + len
            )),
        });
    };
    let mut intervals =
        vec![TreeInterval { level: i0, left: SparseDyadic::zero(), radius_exponent: chain.rho(i0)?.clone() }];
    let mut steps = Vec::with_capacity(len);
    for (s, &bit) in bits.iter().enumerate() {
        let n = i0 + s;
        let parent = intervals.last().expect("nonempty").clone();
        let step = SparseDyadic::pow2_neg(chain.e(n + 1)?.clone());
        let rho_next = chain.rho(n + 1)?.clone();
        let kids: Vec<TreeInterval> = [parent.left.clone(), parent.left.add(&step)?]
            .into_iter()
            .map(|left| TreeInterval { level: n + 1, left, radius_exponent: rho_next.clone() })
            .collect();
        let parent_right = parent.right();
        let contained = kids.iter().all(|k| {
            k.left.compare(&parent.left) != Ordering::Less && k.right().compare(&parent_right) != Ordering::Greater
        });
        let siblings_disjoint = kids[0].right().compare(&kids[1].left) == Ordering::Less;
        steps.push(TreeStep { level: n + 1, bit, contained, siblings_disjoint });
        if !contained {
            return Err(FalconerError::ConditionFailure { level: n, condition: TreeCondition::Containment });
        }
        if !siblings_disjoint {
            return Err(FalconerError::ConditionFailure { level: n, condition: TreeCondition::Disjointness });
        }
        intervals.push(kids[bit as usize].clone());
    }
    let representative = intervals.last().expect("nonempty").left.clone();
    Ok(TreePath {
        i0,
        bits: bits.iter().map(|&b| if b { '1' } else { '0' }).collect(),
        intervals,
        steps,
        representative,
    })
}

/// Parses a word such as `"0110"`.
pub fn parse_bits(s: &str) -> Result<Vec<bool>, FalconerError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(FalconerError::InvalidArgument(format!("bit '{other}' is not 0 or 1"))),
        })
        .collect()
}

/// A closed interval with rational endpoints.
pub type Piece = (BigRational, BigRational);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowEnumeration {
    pub depth: usize,
    /// Number of lattice points with a nonempty piece, for levels `1..=depth`.
    pub level_counts: Vec<usize>,
    pub intervals: Vec<LatticeInterval>,
    /// `F_depth ∩ window`, as the pieces of each center (merged when they
    /// overlap) in increasing order.
    pub pieces: Vec<Piece>,
}

fn pow2r(k: &BigUint) -> Result<BigRational, FalconerError> {
    let k = k
        .to_u64()
        .filter(|&k| k <= crate::sparse_dyadic::RATIONAL_EXPONENT_BUDGET)
        .ok_or_else(|| DyadicError::ExponentBudget {
            exponent: k.clone(),
            budget: crate::sparse_dyadic::RATIONAL_EXPONENT_BUDGET,
        })?;
    Ok(BigRational::from_integer(BigInt::one() << k as usize))
}

/// Exact recursive refinement of `F_n ∩ [lo, hi]`.
///
/// A level-`j` piece around center `c ∈ G_j` is the part of a level-`(j-1)`
/// piece that lies within `r_j` of `c`. Pieces from different parents that
/// share a center are merged when they overlap.
pub fn enumerate_window(
    chain: &ScaleChain,
    n: usize,
    lo: &SparseDyadic,
    hi: &SparseDyadic,
    cap: usize,
) -> Result<WindowEnumeration, FalconerError> {
    if n == 0 || n > chain.radius_depth() {
        return Err(ChainError::LevelOutOfRange { level: n, available: chain.radius_depth() }.into());
    }
    if lo.sign() < 0 || hi.compare(&SparseDyadic::one()) == Ordering::Greater || lo.compare(hi) != Ordering::Less {
        return Err(FalconerError::InvalidArgument("window must satisfy 0 <= lo < hi <= 1".into()));
    }
    let mut pieces: Vec<Piece> = vec![(lo.to_rational()?, hi.to_rational()?)];
    let mut level_counts = Vec::with_capacity(n);
    let mut centers: Vec<BigInt> = Vec::new();
    let zero = BigRational::zero();
    for j in 1..=n {
        let scale = pow2r(chain.e(j)?)?;
        let top = scale.to_integer();
        let r = pow2r(chain.rho(j)?)?.recip();
        // budget check on the number of (parent, center) pairs before building them
        let mut ranges = Vec::with_capacity(pieces.len());
        let mut total: u128 = 0;
        for (a, b) in &pieces {
            let kmin = ((a - &r) * &scale).ceil().to_integer().max(BigInt::zero());
            let kmax = ((b + &r) * &scale).floor().to_integer().min(top.clone());
            if kmax >= kmin {
                let span = (&kmax - &kmin + 1u32).to_u128().unwrap_or(u128::MAX);
                total = total.saturating_add(span);
            }
            ranges.push((kmin, kmax));
            if total > cap as u128 {
                return Err(FalconerError::CapExceeded { level: j, count: total, cap });
            }
        }
        let mut by_center: BTreeMap<BigInt, Vec<Piece>> = BTreeMap::new();
        for ((a, b), (kmin, kmax)) in pieces.iter().zip(ranges) {
            let mut k = kmin;
            while k <= kmax {
                let c = BigRational::from_integer(k.clone()) / &scale;
                let pa = (&c - &r).max(a.clone()).max(zero.clone());
                let pb = (&c + &r).min(b.clone());
                if pa <= pb {
                    by_center.entry(k.clone()).or_default().push((pa, pb));
                }
                k += 1u32;
            }
        }
        let mut next = Vec::new();
        centers.clear();
        for (k, mut ps) in by_center {
            ps.sort();
            for p in merge_pieces(ps) {
                next.push(p);
            }
            centers.push(k);
        }
        if centers.len() > cap {
            return Err(FalconerError::CapExceeded { level: j, count: centers.len() as u128, cap });
        }
        level_counts.push(centers.len());
        pieces = next;
    }
    pieces.sort();
    let rho = chain.rho(n)?.clone();
    let intervals = centers
        .iter()
        .map(|k| LatticeInterval {
            level: n,
            center_numerator: k.to_biguint().expect("nonnegative"),
            radius_exponent: rho.clone(),
        })
        .collect();
    Ok(WindowEnumeration { depth: n, level_counts, intervals, pieces })
}

/// Merges sorted closed intervals that overlap or touch.
pub fn merge_pieces(sorted: Vec<Piece>) -> Vec<Piece> {
    let mut out: Vec<Piece> = Vec::with_capacity(sorted.len());
    for (a, b) in sorted {
        match out.last_mut() {
            Some(last) if a <= last.1 => {
                if b > last.1 {
                    last.1 = b;
                }
            }
            _ => out.push((a, b)),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub level: usize,
    #[serde(with = "dec")]
    pub g_numerator: BigUint,
    pub depth: usize,
    pub pass: bool,
    pub pieces_checked: usize,
    /// Largest distance from `g` over the pieces found in the window.
    pub max_distance: SparseDyadic,
    #[serde(with = "dec")]
    pub radius_exponent: BigUint,
}

/// Checks that `F_n` meets `[g - 1/(2q_i), g + 1/(2q_i)]` only inside
/// `[g - r_i, g + r_i]`. Requires `r_i < 1/(4 q_i)`.
pub fn localization_check(
    chain: &ScaleChain,
    i: usize,
    g_numerator: &BigUint,
    n: usize,
    cap: usize,
) -> Result<LocalizationReport, FalconerError> {
    let ei = chain.e(i)?.clone();
    let rho = chain.rho(i)?.clone();
    if rho <= &ei + 2u32 {
        return Err(FalconerError::PreconditionFailure(format!("r_{i} >= 1/(4 q_{i})")));
    }
    if n < i {
        return Err(FalconerError::InvalidArgument(format!("depth {n} below level {i}")));
    }
    let g = SparseDyadic::lattice_point(g_numerator, &ei);
    if !g.in_unit_interval() {
        return Err(DyadicError::OutOfUnitInterval.into());
    }
    let half = SparseDyadic::pow2_neg(&ei + 1u32);
    let mut lo = g.sub(&half)?;
    if lo.sign() < 0 {
        lo = SparseDyadic::zero();
    }
    let mut hi = g.add(&half)?;
    if hi.compare(&SparseDyadic::one()) == Ordering::Greater {
        hi = SparseDyadic::one();
    }
    let win = enumerate_window(chain, n, &lo, &hi, cap)?;
    let gq = g.to_rational()?;
    let r = pow2r(&rho)?.recip();
    let mut max_d = BigRational::zero();
    let mut pass = true;
    for (a, b) in &win.pieces {
        let d = (a - &gq).abs().max((b - &gq).abs());
        if d > r {
            pass = false;
        }
        if d > max_d {
            max_d = d;
        }
    }
    let max_distance = SparseDyadic::from_rational(&max_d).expect("dyadic endpoints");
    Ok(LocalizationReport {
        level: i,
        g_numerator: g_numerator.clone(),
        depth: n,
        pass,
        pieces_checked: win.pieces.len(),
        max_distance,
        radius_exponent: rho,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioBound {
    pub level: usize,
    /// `8 q_i r_i = 2^{exponent}`.
    #[serde(with = "dec_signed")]
    pub exponent: BigInt,
}

/// The sequence `8 q_i r_i = 2^{3 + e_i - ρ_i}` and whether it strictly
/// decreases.
pub fn ratio_bound_sequence(chain: &ScaleChain) -> Result<(Vec<RatioBound>, bool), FalconerError> {
    let mut out = Vec::new();
    for i in 1..=chain.radius_depth() {
        let exponent = BigInt::from(3) + BigInt::from(chain.e(i)?.clone()) - BigInt::from(chain.rho(i)?.clone());
        out.push(RatioBound { level: i, exponent });
    }
    let decreasing = out.windows(2).all(|w| w[1].exponent < w[0].exponent);
    Ok((out, decreasing))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub depth: usize,
    pub counts: Vec<usize>,
    /// First level with `r_i < 1/q_{i+1}`.
    pub isolating_level: Option<usize>,
    pub non_increasing: bool,
    /// Value the counts settle on after `isolating_level`.
    pub stable_count: Option<usize>,
}

/// Per-level window counts for a chain in the collapse regime.
pub fn dichotomy_probe(
    chain: &ScaleChain,
    n: usize,
    lo: &SparseDyadic,
    hi: &SparseDyadic,
    cap: usize,
) -> Result<DichotomyReport, FalconerError> {
    let regime = chain.classify_regime();
    if regime.tag != RegimeTag::Collapse {
        return Err(FalconerError::RegimeViolation {
            level: regime.witness_level.unwrap_or(1),
            detail: format!("probe needs a Collapse chain, got {:?}", regime.tag),
        });
    }
    let win = enumerate_window(chain, n, lo, hi, cap)?;
    let mut isolating_level = None;
    for i in 1..=n {
        if let (Ok(rho), Ok(next)) = (chain.rho(i), chain.e_next(i)) {
            if rho > &next {
                isolating_level = Some(i);
                break;
            }
        }
    }
    let from = isolating_level.unwrap_or(n + 1);
    let tail = if from <= n { &win.level_counts[from - 1..] } else { &[][..] };
    let non_increasing = tail.windows(2).all(|w| w[1] <= w[0]);
    let stable_count = tail.last().copied();
    Ok(DichotomyReport { depth: n, counts: win.level_counts, isolating_level, non_increasing, stable_count })
}

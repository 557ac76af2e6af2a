//! Covering and packing counts of finite unions of closed intervals, and the
//! logarithmic gauge diagnostics built on them.
//!
//! Every mesh is dyadic, `δ = 2^{-d}`. The gauge is `h_s(r) = (log 1/r)^{-s}`
//! with the natural logarithm.

use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digit_cantor::{DigitError, DigitSpec};
use crate::falconer_set::{enumerate_window, FalconerError, Piece};
use crate::interval::{self, decide, format_rational, Bracket, IntervalError, Precision};
use crate::registry::Registry;
use crate::report::{ratio, Table};
use crate::scale_chain::{ChainError, LogConvention, ScaleChain};
use crate::sparse_dyadic::SparseDyadic;

/// Largest total exponent allowed when materializing a product bound.
pub const PRODUCT_BIT_BUDGET: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimensionError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Falconer(#[from] FalconerError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error(transparent)]
    Digit(#[from] DigitError),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Segment {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Segment {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi, "segment with lo > hi");
        Self { lo, hi }
    }

    pub fn point(x: BigRational) -> Self {
        Self { lo: x.clone(), hi: x }
    }

    pub fn len(&self) -> BigRational {
        &self.hi - &self.lo
    }
}

impl From<&Piece> for Segment {
    fn from(p: &Piece) -> Self {
        Self::new(p.0.clone(), p.1.clone())
    }
}

pub fn segments(pieces: &[Piece]) -> Vec<Segment> {
    pieces.iter().map(Segment::from).collect()
}

/// Sorted connected components of the union.
pub fn components(set: &[Segment]) -> Vec<Segment> {
    let mut v = set.to_vec();
    v.sort();
    let mut out: Vec<Segment> = Vec::with_capacity(v.len());
    for s in v {
        match out.last_mut() {
            Some(last) if s.lo <= last.hi => {
                if s.hi > last.hi {
                    last.hi = s.hi;
                }
            }
            _ => out.push(s),
        }
    }
    out
}

/// `2^{-d}` as a rational.
pub fn dyadic(d: i64) -> BigRational {
    let p = BigInt::one() << d.unsigned_abs() as usize;
    if d >= 0 {
        BigRational::new(BigInt::one(), p)
    } else {
        BigRational::from_integer(p)
    }
}

fn ceil_ratio(x: &BigRational, step: &BigRational) -> BigUint {
    (x / step).ceil().to_integer().to_biguint().unwrap_or_default()
}

/// A counting rule for a set at dyadic scale.
pub trait SetCounter: Send + Sync {
    fn name(&self) -> &str;
    fn count(&self, set: &[Segment], d: i64) -> BigUint;
}

/// Least number of closed intervals of length `2^{-d}` covering the set.
/// Each new interval starts at the leftmost uncovered point.
pub struct GreedyCovering;

impl SetCounter for GreedyCovering {
    fn name(&self) -> &str {
        "covering"
    }

    fn count(&self, set: &[Segment], d: i64) -> BigUint {
        let delta = dyadic(d);
        let mut total = BigUint::zero();
        let mut covered: Option<BigRational> = None;
        for c in components(set) {
            let start = match &covered {
                Some(end) if &c.hi <= end => continue,
                Some(end) if &c.lo <= end => end.clone(),
                _ => c.lo.clone(),
            };
            let k = ceil_ratio(&(&c.hi - &start), &delta).max(BigUint::one());
            covered = Some(&start + &delta * BigRational::from_integer(BigInt::from(k.clone())));
            total += k;
        }
        total
    }
}

/// Largest number of pairwise disjoint closed balls of radius `2^{-d}`
/// centred in the set, i.e. centres more than `2^{1-d}` apart.
///
/// Placement is greedy from the left. The frontier is open: after a centre
/// at `x` the next one must lie strictly beyond `x + 2δ`.
pub struct GreedyPacking;

impl SetCounter for GreedyPacking {
    fn name(&self) -> &str {
        "packing"
    }

    fn count(&self, set: &[Segment], d: i64) -> BigUint {
        let gap = dyadic(d) * BigRational::from_integer(BigInt::from(2));
        let mut total = BigUint::zero();
        let mut frontier: Option<BigRational> = None;
        for c in components(set) {
            let start = match &frontier {
                Some(f) if &c.hi <= f => continue,
                Some(f) if &c.lo <= f => f.clone(),
                _ => c.lo.clone(),
            };
            let span = &c.hi - &start;
            let k = if span.is_zero() { BigUint::one() } else { ceil_ratio(&span, &gap) };
            frontier = Some(&start + &gap * BigRational::from_integer(BigInt::from(k.clone())));
            total += k;
        }
        total
    }
}

/// Registry holding `"covering"` and `"packing"`.
pub fn counter_registry() -> Registry<dyn SetCounter> {
    let mut r: Registry<dyn SetCounter> = Registry::new("set counter");
    r.register("covering", Arc::new(GreedyCovering));
    r.register("packing", Arc::new(GreedyPacking));
    r
}

pub fn covering_number(set: &[Segment], d: i64) -> BigUint {
    GreedyCovering.count(set, d)
}

pub fn packing_number(set: &[Segment], d: i64) -> BigUint {
    GreedyPacking.count(set, d)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackingCoveringRow {
    pub d: i64,
    pub packing: String,
    pub covering_double: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackingCoveringReport {
    pub pass: bool,
    pub rows: Vec<PackingCoveringRow>,
}

/// Checks `P_{2^{-d}} <= N_{2^{1-d}}` for each `d` in the grid.
pub fn packing_vs_covering_check(set: &[Segment], grid: &[i64]) -> PackingCoveringReport {
    packing_vs_covering_with(&GreedyPacking, &GreedyCovering, set, grid)
}

pub fn packing_vs_covering_with(
    packing: &dyn SetCounter,
    covering: &dyn SetCounter,
    set: &[Segment],
    grid: &[i64],
) -> PackingCoveringReport {
    let rows: Vec<PackingCoveringRow> = grid
        .iter()
        .map(|&d| {
            let p = packing.count(set, d);
            let n = covering.count(set, d - 1);
            PackingCoveringRow { d, holds: p <= n, packing: p.to_string(), covering_double: n.to_string() }
        })
        .collect();
    PackingCoveringReport { pass: rows.iter().all(|r| r.holds), rows }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaugeParams {
    #[serde(with = "ratio")]
    pub s: BigRational,
    #[serde(with = "ratio")]
    pub epsilon: BigRational,
    #[serde(rename = "C", with = "ratio")]
    pub c: BigRational,
}

impl GaugeParams {
    pub fn new(s: BigRational, epsilon: BigRational, c: BigRational) -> Result<Self, DimensionError> {
        let two = BigRational::from_integer(BigInt::from(2));
        if !s.is_positive() {
            return Err(DimensionError::InvalidParameters("s must be positive".into()));
        }
        if !epsilon.is_positive() || epsilon >= two {
            return Err(DimensionError::InvalidParameters("epsilon must lie in (0, 2)".into()));
        }
        if !c.is_positive() {
            return Err(DimensionError::InvalidParameters("C must be positive".into()));
        }
        Ok(Self { s, epsilon, c })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExponentMode {
    /// `C (φ(q_{n-1}) log q_{n-1})^{2-ε}`
    Packing2,
    /// `C (φ(q_n) log q_n)^{1-ε}`
    Hausdorff1,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductBoundReport {
    pub n: usize,
    pub mode: ExponentMode,
    /// `∏_{j<n} (1 + q_j^{M_j - φ_j})`, exact.
    pub lhs: String,
    pub rhs_lo: String,
    pub rhs_hi: String,
    pub verdict: bool,
    /// `rhs - lhs`, midpoint of the bracket.
    pub margin: String,
    pub bits_used: u64,
}

/// Exact `∏_{j=1}^{n-1} (1 + 2^{e_j M_j - ρ_j})`.
pub fn product_lhs(chain: &ScaleChain, n: usize) -> Result<BigRational, DimensionError> {
    let mut acc = BigRational::one();
    let mut bits: u64 = 0;
    for j in 1..n {
        let x = BigInt::from(chain.e_next(j)?) - BigInt::from(chain.rho(j)?.clone());
        let mag = x.magnitude().to_u64().unwrap_or(u64::MAX);
        bits = bits.saturating_add(mag + 1);
        if bits > PRODUCT_BIT_BUDGET {
            return Err(DimensionError::InvalidParameters(format!(
                "product needs more than {PRODUCT_BIT_BUDGET} bits"
            )));
        }
        let p = BigRational::from_integer(BigInt::one() << mag as usize);
        let term = if x.is_negative() { p.recip() } else { p };
        acc *= BigRational::one() + term;
    }
    Ok(acc)
}

/// Compares the product against `C (φ(q_k) log q_k)^a` with
/// `φ(q_k) log q_k = ρ_k · log 2`.
pub fn product_bound(
    chain: &ScaleChain,
    n: usize,
    params: &GaugeParams,
    mode: ExponentMode,
    conv: LogConvention,
    prec: Precision,
) -> Result<ProductBoundReport, DimensionError> {
    let (k, a) = match mode {
        ExponentMode::Packing2 => (n.checked_sub(1).filter(|&k| k >= 1), BigRational::from_integer(2.into()) - &params.epsilon),
        ExponentMode::Hausdorff1 => (Some(n).filter(|&k| k >= 1), BigRational::one() - &params.epsilon),
    };
    let k = k.ok_or_else(|| DimensionError::InvalidParameters(format!("level {n} too small for {mode:?}")))?;
    let rho_k = BigRational::from_integer(BigInt::from(chain.rho(k)?.clone()));
    let lhs = product_lhs(chain, n)?;
    let mut used = 0;
    let rhs = decide(prec, |bits| {
        used = bits;
        let base = conv.log2_bracket(bits).scale(&rho_k);
        let rhs = base.powr(&a, bits)?.scale(&params.c);
        let decided = &lhs <= rhs.lo() || &lhs > rhs.hi();
        Ok(decided.then_some(rhs))
    })?;
    let verdict = &lhs <= rhs.lo();
    let margin = rhs.sub(&Bracket::exact(lhs.clone()));
    Ok(ProductBoundReport {
        n,
        mode,
        lhs: render_exact(&lhs),
        rhs_lo: interval::decimal(rhs.lo(), 12),
        rhs_hi: interval::decimal(rhs.hi(), 12),
        verdict,
        margin: interval::decimal(&margin.midpoint(), 12),
        bits_used: used,
    })
}

fn render_exact(q: &BigRational) -> String {
    if q.is_integer() {
        q.to_integer().to_string()
    } else {
        format_rational(q)
    }
}

/// A bracketed decimal: `value ± err`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Approx {
    pub value: String,
    pub err: String,
}

impl Approx {
    pub fn from_bracket(b: &Bracket, digits: usize) -> Self {
        let (value, err) = b.to_decimal(digits);
        Self { value, err }
    }
}

/// `count · (d ln 2)^{-s}`, the `h_s`-cost of `count` sets of diameter
/// `2^{-d}`. Requires `d >= 2`.
pub fn hs_cover_cost_bracket(count: &BigUint, d: &BigUint, s: &BigRational, bits: u64) -> Result<Bracket, DimensionError> {
    if d < &BigUint::from(2u32) {
        return Err(DimensionError::InvalidParameters("diameter exponent must be at least 2".into()));
    }
    if !s.is_positive() {
        return Err(DimensionError::InvalidParameters("s must be positive".into()));
    }
    let log_inv = interval::ln2(bits).scale(&BigRational::from_integer(BigInt::from(d.clone())));
    let gauge = log_inv.powr(&-s, bits)?;
    Ok(gauge.scale(&BigRational::from_integer(BigInt::from(count.clone()))))
}

pub fn hs_cover_cost(count: &BigUint, d: &BigUint, s: &BigRational, bits: u64) -> Result<Approx, DimensionError> {
    Ok(Approx::from_bracket(&hs_cover_cost_bracket(count, d, s, bits)?, 12))
}

/// `log N / log(d ln 2)` for the mesh `δ = 2^{-d}`, `d >= 2`.
pub fn box_estimate(count: &BigUint, d: u64, bits: u64) -> Result<Bracket, DimensionError> {
    if d < 2 {
        return Err(DimensionError::InvalidParameters("box estimate needs d >= 2".into()));
    }
    if count.is_zero() {
        return Err(DimensionError::InvalidParameters("empty set".into()));
    }
    let num = Bracket::exact(BigRational::from_integer(BigInt::from(count.clone()))).ln(bits)?;
    let den = interval::ln2(bits).scale(&BigRational::from_integer(BigInt::from(d))).ln(bits)?;
    Ok(num.div(&den)?)
}

/// Smallest `C_1` with `N_n <= C_1^n ∏_{j<n}(1 + q_j^{M_j - φ_j})` on the
/// supplied `(n, N_n)` pairs, as an upper bracket endpoint.
pub fn fitted_c1(chain: &ScaleChain, observed: &[(usize, BigUint)], bits: u64) -> Result<Option<Bracket>, DimensionError> {
    let mut best: Option<Bracket> = None;
    for (n, count) in observed {
        if *n == 0 {
            continue;
        }
        let ratio = BigRational::from_integer(BigInt::from(count.clone())) / product_lhs(chain, *n)?;
        if ratio.is_zero() {
            continue;
        }
        let root = Bracket::exact(ratio).powr(&BigRational::new(BigInt::one(), BigInt::from(*n)), bits)?;
        best = Some(match best {
            Some(b) if b.hi() >= root.hi() => b,
            _ => root,
        });
    }
    Ok(best)
}

/// Where the rows of a dimension report come from.
pub enum DimensionSource<'a> {
    /// Windows of `F_n` over `[0, 1]`, measured at `δ = 4 r_n`.
    Chain { chain: &'a ScaleChain, params: &'a GaugeParams, conv: LogConvention, cap: usize },
    /// The `2^n` level-`n` cylinders, each of diameter below `2^{1-g(n+1)}`.
    Digit { spec: &'a DigitSpec },
}

pub fn hs_column(s: &BigRational) -> String {
    format!("hs_cost(s={})", if s.is_integer() { s.to_integer().to_string() } else { format_rational(s) })
}

/// One row per `n` with counts, box estimate, gauge costs over `s_grid` and
/// the product-bound verdict.
pub fn dimension_report(
    source: &DimensionSource<'_>,
    s_grid: &[BigRational],
    n_range: &[usize],
    prec: Precision,
) -> Result<Table, DimensionError> {
    let mut cols: Vec<String> =
        ["n", "delta_exponent", "covering", "packing", "box_estimate", "box_err"].iter().map(|s| s.to_string()).collect();
    cols.extend(s_grid.iter().map(hs_column));
    cols.push("product_verdict".into());
    let mut table = Table::new(cols);
    let bits = prec.bits;
    for &n in n_range {
        let (d, covering, packing, verdict) = match source {
            DimensionSource::Chain { chain, params, conv, cap } => {
                let win = enumerate_window(chain, n, &SparseDyadic::zero(), &SparseDyadic::one(), *cap)?;
                let set = segments(&win.pieces);
                let rho = chain.rho(n)?.to_i64().ok_or_else(|| {
                    DimensionError::InvalidParameters(format!("ρ_{n} too large for a mesh exponent"))
                })?;
                let d = BigInt::from(rho - 2);
                let cov = covering_number(&set, rho - 2);
                let pack = packing_number(&set, rho - 2).to_string();
                let verdict = if n >= 2 {
                    match product_bound(chain, n, params, ExponentMode::Packing2, *conv, prec) {
                        Ok(r) => r.verdict.to_string(),
                        Err(DimensionError::Interval(e)) => return Err(e.into()),
                        Err(e) => format!("n/a ({e})"),
                    }
                } else {
                    "n/a".to_string()
                };
                (d, cov, pack, verdict)
            }
            DimensionSource::Digit { spec } => {
                let tb = spec.tau_bound(n)?;
                (BigInt::from(tb.upper_exponent), BigUint::one() << n, "n/a".to_string(), "n/a".to_string())
            }
        };
        let (box_est, box_err) = match d.to_u64() {
            Some(dd) if dd >= 2 => {
                let b = box_estimate(&covering, dd, bits)?;
                let a = Approx::from_bracket(&b, 12);
                (a.value, a.err)
            }
            _ => ("n/a".to_string(), "n/a".to_string()),
        };
        let mut row = vec![n.to_string(), d.to_string(), covering.to_string(), packing, box_est, box_err];
        for s in s_grid {
            row.push(if d >= BigInt::from(2) {
                hs_cover_cost(&covering, d.magnitude(), s, bits)?.value
            } else {
                "n/a".into()
            });
        }
        row.push(verdict);
        table.push(row);
    }
    Ok(table)
}

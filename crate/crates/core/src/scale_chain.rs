//! Scale chains: `q_1 = 2`, `q_{i+1} = q_i^{M_i}`, gauge values `φ_i` and
//! radii `r_i = 2^{-ρ_i}` with `ρ_i = e_i φ_i`.
//!
//! Only exponents are stored. `e_i` and `ρ_i` are arbitrary-precision
//! integers, so a chain whose `q_3` has tens of billions of digits is still a
//! handful of small numbers.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::interval::{self, decide, format_rational, parse_rational, Bracket, IntervalError, Precision};
use crate::sparse_dyadic::SparseDyadic;

/// Bits allowed for the exact products inside [`build_explicit_chain`].
pub const EXPLICIT_BIT_BUDGET: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("e_{level}·φ_{level} = {value} is not an integer")]
    NonIntegerRadiusExponent { level: usize, value: String },
    #[error("{sequence} is not strictly increasing at level {level}")]
    MonotonicityViolation { sequence: &'static str, level: usize },
    #[error("level {level} out of range (chain has {available} usable levels)")]
    LevelOutOfRange { level: usize, available: usize },
    #[error("depth {depth} needs about {bits} bits, over the budget of {budget}")]
    DepthTooLarge { depth: usize, bits: u64, budget: u64 },
    #[error("invalid chain parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

/// Which logarithm the explicit chain formulas use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogConvention {
    #[default]
    Natural,
    Base2,
}

impl FromStr for LogConvention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "natural" | "ln" => Ok(Self::Natural),
            "base2" | "log2" => Ok(Self::Base2),
            other => Err(format!("unknown log convention '{other}' (natural|base2)")),
        }
    }
}

impl fmt::Display for LogConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Natural => "natural",
            Self::Base2 => "base2",
        })
    }
}

impl LogConvention {
    /// Bracket for `log 2` in this convention.
    pub fn log2_bracket(self, bits: u64) -> Bracket {
        match self {
            Self::Natural => interval::ln2(bits),
            Self::Base2 => Bracket::from_int(1),
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct ScaleChain {
    depth: usize,
    e: Vec<BigUint>,
    m: Vec<u64>,
    phi: Vec<BigRational>,
    rho: Vec<BigUint>,
}

impl fmt::Debug for ScaleChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScaleChain")
            .field("depth", &self.depth)
            .field("M", &self.m)
            .field("phi", &self.phi.iter().map(format_rational).collect::<Vec<_>>())
            .field("e", &self.e.iter().map(|v| v.to_string()).collect::<Vec<_>>())
            .field("rho", &self.rho.iter().map(|v| v.to_string()).collect::<Vec<_>>())
            .finish()
    }
}

/// Builds and validates a chain from multipliers and gauge values.
///
/// `m` needs at least `depth - 1` entries. `phi` may be shorter than
/// `depth`; levels past its end have a lattice but no radius.
pub fn build_custom_chain(m: &[u64], phi: &[BigRational], depth: usize) -> Result<ScaleChain, ChainError> {
    if depth == 0 {
        return Err(ChainError::InvalidParameters("depth must be positive".into()));
    }
    if m.len() + 1 < depth {
        return Err(ChainError::InvalidParameters(format!(
            "depth {depth} needs {} multipliers, got {}",
            depth - 1,
            m.len()
        )));
    }
    if phi.is_empty() {
        return Err(ChainError::InvalidParameters("phi is empty".into()));
    }
    if let Some(i) = m.iter().position(|&v| v == 0) {
        return Err(ChainError::InvalidParameters(format!("M_{} must be positive", i + 1)));
    }
    for i in 1..m.len() {
        if m[i] <= m[i - 1] {
            return Err(ChainError::MonotonicityViolation { sequence: "M", level: i + 1 });
        }
    }
    if let Some(i) = phi.iter().position(|p| !p.is_positive()) {
        return Err(ChainError::InvalidParameters(format!("φ_{} must be positive", i + 1)));
    }
    for i in 1..phi.len() {
        if phi[i] <= phi[i - 1] {
            return Err(ChainError::MonotonicityViolation { sequence: "phi", level: i + 1 });
        }
    }
    let mut e = vec![BigUint::one()];
    for i in 1..depth {
        let next = &e[i - 1] * BigUint::from(m[i - 1]);
        e.push(next);
    }
    let mut rho = Vec::new();
    for (i, p) in phi.iter().enumerate().take(depth) {
        let v = BigRational::from_integer(BigInt::from(e[i].clone())) * p;
        if !v.is_integer() {
            return Err(ChainError::NonIntegerRadiusExponent { level: i + 1, value: format_rational(&v) });
        }
        let r = v.to_integer().to_biguint().expect("positive");
        if let Some(prev) = rho.last() {
            if &r <= prev {
                return Err(ChainError::MonotonicityViolation { sequence: "rho", level: i + 1 });
            }
        }
        rho.push(r);
    }
    Ok(ScaleChain { depth, e, m: m.to_vec(), phi: phi.to_vec(), rho })
}

/// Desk-scale chain used throughout the tests: `M = [3,4,5,6,7]`,
/// `φ_i = M_i - 2`, depth 5.
pub fn desk_chain() -> ScaleChain {
    let m = [3u64, 4, 5, 6, 7];
    let phi: Vec<BigRational> = m.iter().map(|&v| BigRational::from_integer(BigInt::from(v - 2))).collect();
    build_custom_chain(&m, &phi, 5).expect("desk chain is valid")
}

pub fn build_explicit_chain(depth: usize, conv: LogConvention) -> Result<ScaleChain, ChainError> {
    build_explicit_chain_with(depth, conv, Precision::default())
}

/// Chain with `M_n` the least value allowed by
/// `M_n >= (2 / log q_n) ∏_{j<=n} (1 + q_j^2) + 2` (and `M_1 >= 4`,
/// `M_n > M_{n-1}`), `φ_n = M_n - 2`.
///
/// Ceilings of irrational quantities are decided from outward-rounded
/// brackets at increasing precision.
pub fn build_explicit_chain_with(depth: usize, conv: LogConvention, prec: Precision) -> Result<ScaleChain, ChainError> {
    if depth == 0 {
        return Err(ChainError::InvalidParameters("depth must be positive".into()));
    }
    let mut e: Vec<BigUint> = vec![BigUint::one()];
    let mut m: Vec<u64> = Vec::new();
    let mut product_bits: u64 = 0;
    let mut product = BigUint::one();
    for n in 1..=depth {
        if n > 1 {
            let next = &e[n - 2] * BigUint::from(m[n - 2]);
            e.push(next);
        }
        let en = &e[n - 1];
        let two_e = en.to_u64().and_then(|v| v.checked_mul(2));
        let bits = two_e.and_then(|b| b.checked_add(product_bits + 1));
        match bits {
            Some(b) if b <= EXPLICIT_BIT_BUDGET => product_bits = b,
            _ => {
                return Err(ChainError::DepthTooLarge {
                    depth,
                    bits: bits.unwrap_or(u64::MAX),
                    budget: EXPLICIT_BIT_BUDGET,
                })
            }
        }
        let q_sq = BigUint::one() << (two_e.expect("checked") as usize);
        product *= q_sq + 1u32;
        let ceil = ceil_core(&product, en, conv, prec)?;
        let candidate = ceil + 2u32;
        let floor = if n == 1 { BigUint::from(4u32) } else { BigUint::from(m[n - 2] + 1) };
        let mn = candidate.max(floor);
        let mn = mn.to_u64().ok_or(ChainError::DepthTooLarge { depth, bits: mn.bits(), budget: 64 })?;
        m.push(mn);
    }
    let phi: Vec<BigRational> = m.iter().map(|&v| BigRational::from_integer(BigInt::from(v - 2))).collect();
    build_custom_chain(&m, &phi, depth)
}

/// `⌈2P / (e · log 2)⌉` under the given convention.
fn ceil_core(p: &BigUint, e: &BigUint, conv: LogConvention, prec: Precision) -> Result<BigUint, ChainError> {
    let num = BigRational::from_integer(BigInt::from(p.clone()) * 2);
    let en = BigRational::from_integer(BigInt::from(e.clone()));
    let out = decide(prec, |bits| {
        let l = conv.log2_bracket(bits);
        let denom = l.scale(&en);
        let value = Bracket::exact(num.clone()).div(&denom)?;
        let lo = value.lo().ceil();
        let hi = value.hi().ceil();
        Ok((lo == hi).then(|| lo.to_integer()))
    })?;
    Ok(out.to_biguint().expect("positive"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    Branching,
    Collapse,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub witness_level: Option<usize>,
}

/// Count `scale · 2^exponent + 1`, kept symbolic because the exponent can be
/// astronomically large.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeCount {
    pub scale: u8,
    pub exponent: BigUint,
}

impl LatticeCount {
    pub fn single() -> Self {
        Self { scale: 0, exponent: BigUint::zero() }
    }

    /// Exact value when `exponent <= max_bits`.
    pub fn value(&self, max_bits: u64) -> Option<BigUint> {
        if self.scale == 0 {
            return Some(BigUint::one());
        }
        let x = self.exponent.to_u64().filter(|&x| x <= max_bits)?;
        Some((BigUint::from(self.scale) << x as usize) + 1u32)
    }
}

impl fmt::Display for LatticeCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.scale, self.value(64)) {
            (0, _) => write!(f, "1"),
            (_, Some(v)) => write!(f, "{v}"),
            (s, None) => write!(f, "{s}·2^{}+1", self.exponent),
        }
    }
}

impl ScaleChain {
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of leading levels that carry a radius.
    pub fn radius_depth(&self) -> usize {
        self.rho.len()
    }

    pub fn e_values(&self) -> &[BigUint] {
        &self.e
    }

    pub fn m_values(&self) -> &[u64] {
        &self.m
    }

    pub fn phi_values(&self) -> &[BigRational] {
        &self.phi
    }

    pub fn rho_values(&self) -> &[BigUint] {
        &self.rho
    }

    fn out_of_range(&self, level: usize, available: usize) -> ChainError {
        ChainError::LevelOutOfRange { level, available }
    }

    /// `e_i` (1-based).
    pub fn e(&self, i: usize) -> Result<&BigUint, ChainError> {
        if i == 0 {
            return Err(self.out_of_range(i, self.depth));
        }
        self.e.get(i - 1).ok_or_else(|| self.out_of_range(i, self.depth))
    }

    /// `ρ_i` (1-based).
    pub fn rho(&self, i: usize) -> Result<&BigUint, ChainError> {
        if i == 0 {
            return Err(self.out_of_range(i, self.rho.len()));
        }
        self.rho.get(i - 1).ok_or_else(|| self.out_of_range(i, self.rho.len()))
    }

    pub fn m(&self, i: usize) -> Result<u64, ChainError> {
        if i == 0 {
            return Err(self.out_of_range(i, self.m.len()));
        }
        self.m.get(i - 1).copied().ok_or_else(|| self.out_of_range(i, self.m.len()))
    }

    pub fn phi(&self, i: usize) -> Result<&BigRational, ChainError> {
        if i == 0 {
            return Err(self.out_of_range(i, self.phi.len()));
        }
        self.phi.get(i - 1).ok_or_else(|| self.out_of_range(i, self.phi.len()))
    }

    /// `M_i e_i`, the exponent of `q_{i+1}`, even past the chain depth.
    pub fn e_next(&self, i: usize) -> Result<BigUint, ChainError> {
        Ok(self.e(i)? * BigUint::from(self.m(i)?))
    }

    /// `r_i = 2^{-ρ_i}`.
    pub fn radius(&self, i: usize) -> Result<SparseDyadic, ChainError> {
        Ok(SparseDyadic::pow2_neg(self.rho(i)?.clone()))
    }

    /// `1/q_i = 2^{-e_i}`.
    pub fn spacing(&self, i: usize) -> Result<SparseDyadic, ChainError> {
        Ok(SparseDyadic::pow2_neg(self.e(i)?.clone()))
    }

    /// Levels at which both `M_i` and `φ_i` are known.
    fn regime_levels(&self) -> usize {
        self.m.len().min(self.phi.len())
    }

    fn level_class(&self, i: usize) -> RegimeTag {
        let m = BigRational::from_integer(BigInt::from(self.m[i - 1]));
        let p = &self.phi[i - 1];
        if p < &(&m - BigRational::one()) {
            RegimeTag::Branching
        } else if p > &m {
            RegimeTag::Collapse
        } else {
            RegimeTag::Indeterminate
        }
    }

    /// Whether `φ_i < M_i - 1`.
    pub fn is_branching_at(&self, i: usize) -> Result<bool, ChainError> {
        self.m(i)?;
        self.phi(i)?;
        Ok(self.level_class(i) == RegimeTag::Branching)
    }

    pub fn classify_regime(&self) -> Regime {
        let n = self.regime_levels();
        let classes: Vec<RegimeTag> = (1..=n).map(|i| self.level_class(i)).collect();
        if n > 0 && classes.iter().all(|&c| c == RegimeTag::Branching) {
            return Regime { tag: RegimeTag::Branching, witness_level: None };
        }
        if n > 0 && classes.iter().all(|&c| c == RegimeTag::Collapse) {
            return Regime { tag: RegimeTag::Collapse, witness_level: None };
        }
        let witness = classes
            .iter()
            .position(|&c| c == RegimeTag::Indeterminate)
            .or_else(|| classes.iter().position(|&c| c != classes[0]))
            .map(|p| p + 1);
        Regime { tag: RegimeTag::Indeterminate, witness_level: witness }
    }

    /// Number of points of `G_{i+1}` in `[g - r_i, g + r_i] ∩ [0, 1]` with
    /// `g = g_numerator · 2^{-e_i}`.
    ///
    /// With `x = e_{i+1} - ρ_i >= 0` this is `2·2^x + 1` for interior `g` and
    /// `2^x + 1` at `g ∈ {0, 1}`. If `ρ_i > e_{i+1}` only `g` itself remains.
    pub fn branching_count(&self, i: usize, g_numerator: &BigUint) -> Result<LatticeCount, ChainError> {
        if i >= self.depth {
            return Err(self.out_of_range(i, self.depth - 1));
        }
        let ei = self.e(i)?;
        let rho = self.rho(i)?;
        let e_next = self.e_next(i)?;
        let top = ei.to_u64().filter(|&v| v <= 1 << 24).map(|v| BigUint::one() << v as usize);
        let at_top = match &top {
            Some(t) => {
                if g_numerator > t {
                    return Err(ChainError::InvalidParameters(format!("g numerator exceeds 2^{ei}")));
                }
                g_numerator == t
            }
            None => false,
        };
        if rho > &e_next {
            return Ok(LatticeCount::single());
        }
        let x = &e_next - rho;
        // ρ_i >= e_i (φ_1 >= 1 and φ increasing), so the interval never
        // reaches past a neighbouring lattice point of G_i and clipping only
        // happens at the endpoints.
        let boundary = g_numerator.is_zero() || at_top;
        Ok(LatticeCount { scale: if boundary { 1 } else { 2 }, exponent: x })
    }

    /// `e_i (M_i - φ_i)` as a rational; the exponent in the lower bound
    /// `2 q_i^{M_i - φ_i} - 1`.
    pub fn branching_bound_exponent(&self, i: usize) -> Result<BigRational, ChainError> {
        let ei = BigRational::from_integer(BigInt::from(self.e(i)?.clone()));
        let m = BigRational::from_integer(BigInt::from(self.m(i)?));
        Ok(ei * (m - self.phi(i)?))
    }

    pub fn to_doc(&self) -> ChainDoc {
        ChainDoc {
            depth: self.depth,
            m: self.m.clone(),
            phi: self.phi.iter().map(format_rational).collect(),
            e: self.e.iter().map(|v| v.to_string()).collect(),
            rho: self.rho.iter().map(|v| v.to_string()).collect(),
        }
    }
}

/// Wire form of a chain. `e` and `rho` are optional on input and checked
/// against the recomputed values when present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainDoc {
    pub depth: usize,
    #[serde(rename = "M")]
    pub m: Vec<u64>,
    pub phi: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub e: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rho: Vec<String>,
}

impl ChainDoc {
    pub fn build(&self) -> Result<ScaleChain, ChainError> {
        let phi = self
            .phi
            .iter()
            .map(|s| parse_rational(s).ok_or_else(|| ChainError::InvalidParameters(format!("bad rational '{s}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        let chain = build_custom_chain(&self.m, &phi, self.depth)?;
        let doc = chain.to_doc();
        if !self.e.is_empty() && self.e != doc.e {
            return Err(ChainError::InvalidParameters("supplied e does not match the recurrence".into()));
        }
        if !self.rho.is_empty() && self.rho != doc.rho {
            return Err(ChainError::InvalidParameters("supplied rho does not match e·phi".into()));
        }
        Ok(chain)
    }
}

impl Serialize for ScaleChain {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ScaleChain {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = ChainDoc::deserialize(d)?;
        doc.build().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rats(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect()
    }

    fn nums(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn custom_chain_recurrence() {
        let c = build_custom_chain(&[3, 4, 5, 6], &rats(&[1, 2, 3, 4]), 5).unwrap();
        assert_eq!(c.e_values(), nums(&[1, 3, 12, 60, 360]).as_slice());
        assert_eq!(c.rho_values(), nums(&[1, 6, 36, 240]).as_slice());
        assert!(matches!(c.rho(5), Err(ChainError::LevelOutOfRange { level: 5, available: 4 })));
    }

    #[test]
    fn custom_chain_errors() {
        let half = vec![BigRational::new(1.into(), 2.into()), BigRational::one()];
        assert!(matches!(
            build_custom_chain(&[2, 3], &half, 2),
            Err(ChainError::NonIntegerRadiusExponent { level: 1, .. })
        ));
        assert!(matches!(
            build_custom_chain(&[3, 3], &rats(&[1, 2]), 2),
            Err(ChainError::MonotonicityViolation { sequence: "M", .. })
        ));
        assert!(matches!(
            build_custom_chain(&[3, 4], &rats(&[2, 2]), 2),
            Err(ChainError::MonotonicityViolation { sequence: "phi", .. })
        ));
    }

    #[test]
    fn desk_chain_values() {
        let c = desk_chain();
        assert_eq!(c.e_values(), nums(&[1, 3, 12, 60, 360]).as_slice());
        assert_eq!(c.rho_values(), nums(&[1, 6, 36, 240, 1800]).as_slice());
        assert_eq!(c.classify_regime(), Regime { tag: RegimeTag::Branching, witness_level: None });
    }

    #[test]
    fn regimes() {
        let collapse = build_custom_chain(&[3, 4, 5], &rats(&[4, 5, 6]), 3).unwrap();
        assert_eq!(collapse.classify_regime().tag, RegimeTag::Collapse);
        let band = build_custom_chain(&[3, 4, 5], &rats(&[2, 3, 4]), 3).unwrap();
        assert_eq!(band.classify_regime(), Regime { tag: RegimeTag::Indeterminate, witness_level: Some(1) });
        let mixed = build_custom_chain(&[3, 40], &rats(&[1, 41]), 2).unwrap();
        assert_eq!(mixed.classify_regime(), Regime { tag: RegimeTag::Indeterminate, witness_level: Some(2) });
    }

    #[test]
    fn branching_counts_desk() {
        let c = desk_chain();
        let half = c.branching_count(1, &BigUint::from(1u32)).unwrap();
        assert_eq!(half.value(64), Some(BigUint::from(9u32)));
        let zero = c.branching_count(1, &BigUint::zero()).unwrap();
        assert_eq!(zero.value(64), Some(BigUint::from(5u32)));
        let one = c.branching_count(1, &BigUint::from(2u32)).unwrap();
        assert_eq!(one.value(64), Some(BigUint::from(5u32)));
        assert!(c.branching_count(1, &BigUint::from(3u32)).is_err());
        assert!(c.branching_count(5, &BigUint::zero()).is_err());
        let deep = c.branching_count(4, &BigUint::from(7u32)).unwrap();
        assert_eq!(deep.exponent, BigUint::from(120u32));
        assert_eq!(deep.to_string(), "2·2^120+1");
    }

    #[test]
    fn collapse_counts_are_single() {
        let c = build_custom_chain(&[3, 4, 5], &rats(&[4, 5, 6]), 3).unwrap();
        for i in 1..3 {
            assert_eq!(c.branching_count(i, &BigUint::one()).unwrap(), LatticeCount::single());
        }
    }

    #[test]
    fn explicit_chain_first_multiplier() {
        let nat = build_explicit_chain(1, LogConvention::Natural).unwrap();
        assert_eq!(nat.m_values(), &[17]);
        let b2 = build_explicit_chain(1, LogConvention::Base2).unwrap();
        assert_eq!(b2.m_values(), &[12]);
    }

    #[test]
    fn explicit_chain_depth_three_is_too_large() {
        assert!(matches!(
            build_explicit_chain(3, LogConvention::Natural),
            Err(ChainError::DepthTooLarge { .. })
        ));
    }

    #[test]
    fn chain_json_round_trip() {
        let c = desk_chain();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(
            s,
            r#"{"depth":5,"M":[3,4,5,6,7],"phi":["1/1","2/1","3/1","4/1","5/1"],"e":["1","3","12","60","360"],"rho":["1","6","36","240","1800"]}"#
        );
        let back: ScaleChain = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let bad = s.replace("\"1800\"", "\"1801\"");
        assert!(serde_json::from_str::<ScaleChain>(&bad).is_err());
    }
}

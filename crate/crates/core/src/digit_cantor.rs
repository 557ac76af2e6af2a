//! Digit Cantor sets `K = {Σ ε_n a_n : ε_n ∈ {0, 1}}` with `a_n = 2^{-g(n)}`.
//!
//! The exponent schedule `g` is picked by name from a registry of
//! [`ExponentSchedule`] objects or given as an explicit table. Separation
//! past the tabulated range relies on a declared growth property, parsed
//! from strings such as `"g(n+1)>=g(n)+1"` or `"g(n+1)>=2*g(n)"`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dimension::{hs_cover_cost_bracket, DimensionError};
use crate::interval::{self, format_rational, Precision};
use crate::registry::{Registry, UnknownStrategy};
use crate::report::{dec, Table};
use crate::sparse_dyadic::{DyadicError, SparseDyadic};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DigitError {
    #[error("no growth property declared; separation beyond the table cannot be certified")]
    GrowthPropertyMissing,
    #[error("unrecognized growth declaration '{0}'")]
    BadGrowth(String),
    #[error("invalid digit spec: {0}")]
    InvalidSpec(String),
    #[error("index {index} is assigned to more than one class")]
    PartitionOverlap { index: usize },
    #[error("class {class} has no index up to {limit}")]
    EmptyClass { class: u8, limit: usize },
    #[error("value has exponent {exponent} beyond g(N_max) = {limit}")]
    UniverseExceeded { exponent: BigUint, limit: BigUint },
    #[error("value is negative")]
    Negative,
    #[error("schedule is not strictly increasing at n = {0}")]
    NotIncreasing(usize),
    #[error("schedule does not define g({0})")]
    Undefined(usize),
    #[error("index {index} outside 1..={n_max}")]
    IndexOutOfRange { index: usize, n_max: usize },
    #[error(transparent)]
    Unknown(#[from] UnknownStrategy),
    #[error(transparent)]
    Dyadic(#[from] DyadicError),
    #[error("gauge evaluation failed: {0}")]
    Gauge(String),
}

/// `n ↦ g(n)` for `n >= 1`; `None` past the end of a finite table.
pub trait ExponentSchedule: Send + Sync {
    fn name(&self) -> &str;
    fn g(&self, n: usize) -> Option<BigUint>;
}

struct Linear;
impl ExponentSchedule for Linear {
    fn name(&self) -> &str {
        "linear"
    }
    fn g(&self, n: usize) -> Option<BigUint> {
        Some(BigUint::from(n))
    }
}

struct Doubling;
impl ExponentSchedule for Doubling {
    fn name(&self) -> &str {
        "doubling"
    }
    fn g(&self, n: usize) -> Option<BigUint> {
        Some(BigUint::one() << n)
    }
}

/// `2^{n^2}`
struct SquareDoubling;
impl ExponentSchedule for SquareDoubling {
    fn name(&self) -> &str {
        "square-doubling"
    }
    fn g(&self, n: usize) -> Option<BigUint> {
        Some(BigUint::one() << n.checked_mul(n)?)
    }
}

/// `2^{2^n}`; defined while `2^n` fits in memory-sized shifts.
struct Tower;
impl ExponentSchedule for Tower {
    fn name(&self) -> &str {
        "tower"
    }
    fn g(&self, n: usize) -> Option<BigUint> {
        if n > 24 {
            return None;
        }
        Some(BigUint::one() << (1usize << n))
    }
}

pub struct Table1Based(pub Vec<BigUint>);
impl ExponentSchedule for Table1Based {
    fn name(&self) -> &str {
        "table"
    }
    fn g(&self, n: usize) -> Option<BigUint> {
        n.checked_sub(1).and_then(|i| self.0.get(i).cloned())
    }
}

/// Built-in schedules by name.
pub fn schedule_registry() -> Registry<dyn ExponentSchedule> {
    let mut r: Registry<dyn ExponentSchedule> = Registry::new("exponent schedule");
    r.register("linear", Arc::new(Linear));
    r.register("doubling", Arc::new(Doubling));
    r.register("square-doubling", Arc::new(SquareDoubling));
    r.register("tower", Arc::new(Tower));
    r
}

/// Declared growth of `g` beyond the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    /// `g(n+1) >= g(n) + k`, `k >= 1`
    Additive(u64),
    /// `g(n+1) >= 2 g(n)`
    Doubling,
}

impl Growth {
    pub fn parse(s: &str) -> Result<Self, DigitError> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || DigitError::BadGrowth(s.to_string());
        let rhs = t.strip_prefix("g(n+1)>=").ok_or_else(bad)?;
        if rhs == "2*g(n)" || rhs == "2g(n)" {
            return Ok(Self::Doubling);
        }
        let k = rhs.strip_prefix("g(n)+").ok_or_else(bad)?;
        let k: u64 = k.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        Ok(Self::Additive(k))
    }

    /// Smallest `g(n+1)` the declaration allows after `g(n) = v`.
    pub fn next_lower_bound(&self, v: &BigUint) -> BigUint {
        match self {
            Self::Additive(k) => v + BigUint::from(*k),
            Self::Doubling => (v * 2u32).max(v + 1u32),
        }
    }

    pub fn holds(&self, prev: &BigUint, next: &BigUint) -> bool {
        next >= &self.next_lower_bound(prev)
    }
}

impl fmt::Display for Growth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Additive(k) => write!(f, "g(n+1)>=g(n)+{k}"),
            Self::Doubling => f.write_str("g(n+1)>=2*g(n)"),
        }
    }
}

/// Assignment of indices to the three classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Partition {
    /// class 1: n ≡ 1, class 2: n ≡ 2, class 3: n ≡ 0 (mod 3)
    Mod3,
    Explicit([Vec<usize>; 3]),
}

impl Partition {
    /// Indices of class `c ∈ {1,2,3}` up to `limit`, ascending.
    pub fn members(&self, class: u8, limit: usize) -> Vec<usize> {
        match self {
            Self::Mod3 => {
                let r = (class % 3) as usize;
                (1..=limit).filter(|n| n % 3 == r).collect()
            }
            Self::Explicit(lists) => {
                let mut v: Vec<usize> = lists[(class - 1) as usize].iter().copied().filter(|&n| n <= limit).collect();
                v.sort_unstable();
                v.dedup();
                v
            }
        }
    }

    /// Fails with the first index placed in two classes.
    pub fn check_disjoint(&self) -> Result<(), DigitError> {
        if let Self::Explicit(lists) = self {
            let mut seen = std::collections::BTreeMap::new();
            for (c, list) in lists.iter().enumerate() {
                for &n in list {
                    if let Some(&other) = seen.get(&n) {
                        if other != c {
                            return Err(DigitError::PartitionOverlap { index: n });
                        }
                    }
                    seen.insert(n, c);
                }
            }
        }
        Ok(())
    }
}

pub struct DigitSpec {
    schedule: Arc<dyn ExponentSchedule>,
    n_max: usize,
    growth: Option<Growth>,
    partition: Partition,
    g_table: Vec<BigUint>,
}

impl fmt::Debug for DigitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DigitSpec")
            .field("schedule", &self.schedule.name())
            .field("n_max", &self.n_max)
            .field("growth", &self.growth)
            .field("partition", &self.partition)
            .finish()
    }
}

impl DigitSpec {
    /// Tabulates `g(1..=n_max)` and checks strict increase and class
    /// nonemptiness. The growth declaration is checked only where used.
    pub fn new(
        schedule: Arc<dyn ExponentSchedule>,
        n_max: usize,
        growth: Option<Growth>,
        partition: Partition,
    ) -> Result<Self, DigitError> {
        let mut g_table = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            let v = schedule.g(n).ok_or(DigitError::Undefined(n))?;
            if v.is_zero() {
                return Err(DigitError::NotIncreasing(n));
            }
            if let Some(prev) = g_table.last() {
                if &v <= prev {
                    return Err(DigitError::NotIncreasing(n));
                }
            }
            g_table.push(v);
        }
        partition.check_disjoint()?;
        for class in 1..=3u8 {
            if partition.members(class, n_max).is_empty() {
                return Err(DigitError::EmptyClass { class, limit: n_max });
            }
        }
        Ok(Self { schedule, n_max, growth, partition, g_table })
    }

    /// Looks up a built-in schedule by name.
    pub fn named(name: &str, n_max: usize, growth: Option<Growth>, partition: Partition) -> Result<Self, DigitError> {
        let schedule = schedule_registry().get(name)?;
        Self::new(schedule, n_max, growth, partition)
    }

    pub fn schedule_name(&self) -> &str {
        self.schedule.name()
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn growth(&self) -> Option<Growth> {
        self.growth
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// `g(n)` for `1 <= n <= n_max`.
    pub fn g(&self, n: usize) -> Result<&BigUint, DigitError> {
        n.checked_sub(1)
            .and_then(|i| self.g_table.get(i))
            .ok_or(DigitError::IndexOutOfRange { index: n, n_max: self.n_max })
    }

    pub fn a(&self, n: usize) -> Result<SparseDyadic, DigitError> {
        Ok(SparseDyadic::pow2_neg(self.g(n)?.clone()))
    }

    /// `g(n_max + 1)` from the schedule when it is defined there, otherwise
    /// the least value the growth declaration permits.
    fn g_beyond(&self) -> Result<BigUint, DigitError> {
        let growth = self.growth.ok_or(DigitError::GrowthPropertyMissing)?;
        let last = self.g(self.n_max)?;
        Ok(match self.schedule.g(self.n_max + 1) {
            Some(v) if growth.holds(last, &v) => v,
            _ => growth.next_lower_bound(last),
        })
    }

    /// `Σ_{n < m <= n_max} a_m`.
    pub fn truncated_tail(&self, n: usize) -> Result<SparseDyadic, DigitError> {
        let terms = (n + 1..=self.n_max).map(|m| (self.g_table[m - 1].clone(), BigInt::one()));
        Ok(SparseDyadic::from_terms(terms)?)
    }

    /// Bound `2^{1 - g(n_max+1)}` on `Σ_{m > n_max} a_m`.
    pub fn beyond_bound(&self) -> Result<SparseDyadic, DigitError> {
        let g = self.g_beyond()?;
        Ok(SparseDyadic::pow2_neg(g - 1u32))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationRow {
    pub n: usize,
    #[serde(with = "dec")]
    pub g: BigUint,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub growth: String,
    pub declaration_holds_on_table: bool,
    pub rows: Vec<SeparationRow>,
    pub pass: bool,
}

/// Checks `a_n > Σ_{n<m<=n_max} a_m + 2^{1-g(n_max+1)}` for `n <= depth`.
pub fn separation_check(spec: &DigitSpec, depth: usize) -> Result<SeparationReport, DigitError> {
    let growth = spec.growth.ok_or(DigitError::GrowthPropertyMissing)?;
    if depth > spec.n_max {
        return Err(DigitError::IndexOutOfRange { index: depth, n_max: spec.n_max });
    }
    let declaration_holds_on_table = spec.g_table.windows(2).all(|w| growth.holds(&w[0], &w[1]));
    let beyond = spec.beyond_bound()?;
    let mut rows = Vec::with_capacity(depth);
    for n in 1..=depth {
        let tail = spec.truncated_tail(n)?.add(&beyond)?;
        let pass = spec.a(n)?.compare(&tail) == Ordering::Greater;
        rows.push(SeparationRow { n, g: spec.g(n)?.clone(), pass });
    }
    let pass = declaration_holds_on_table && rows.iter().all(|r| r.pass);
    Ok(SeparationReport { growth: growth.to_string(), declaration_holds_on_table, rows, pass })
}

/// `τ_n ∈ [2^{-lower_exponent}, 2^{-upper_exponent})`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TauBound {
    pub n: usize,
    #[serde(with = "dec")]
    pub lower_exponent: BigUint,
    #[serde(with = "dec")]
    pub upper_exponent: BigUint,
    /// Whether the bracket holds the exact tail truncated at `n_max`.
    pub contains_truncated_tail: bool,
}

impl DigitSpec {
    pub fn tau_bound(&self, n: usize) -> Result<TauBound, DigitError> {
        if n == 0 || n >= self.n_max {
            return Err(DigitError::IndexOutOfRange { index: n, n_max: self.n_max - 1 });
        }
        let g_next = self.g(n + 1)?.clone();
        let upper_exponent = &g_next - 1u32;
        let tail = self.truncated_tail(n)?;
        let contains_truncated_tail = tail.compare(&SparseDyadic::pow2_neg(g_next.clone())) != Ordering::Less
            && tail.compare(&SparseDyadic::pow2_neg(upper_exponent.clone())) == Ordering::Less;
        Ok(TauBound { n, lower_exponent: g_next, upper_exponent, contains_truncated_tail })
    }
}

pub fn tau_bound(spec: &DigitSpec, n: usize) -> Result<TauBound, DigitError> {
    spec.tau_bound(n)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitMembership {
    pub member: bool,
    /// Indices `n` with `ε_n = 1`, when a member.
    pub digits: Vec<usize>,
}

/// Decides `x ∈ K` (truncated at `n_max`) and returns the digit set.
pub fn member_k(spec: &DigitSpec, x: &SparseDyadic) -> Result<DigitMembership, DigitError> {
    if x.sign() < 0 {
        return Err(DigitError::Negative);
    }
    let limit = spec.g(spec.n_max)?;
    if let Some(top) = x.max_exponent() {
        if top > limit {
            return Err(DigitError::UniverseExceeded { exponent: top.clone(), limit: limit.clone() });
        }
    }
    // fast path: already a sum of distinct a_n
    if x.terms().all(|(_, c)| c.is_one()) {
        let digits: Option<Vec<usize>> = x.terms().map(|(f, _)| spec.g_table.binary_search(f).ok().map(|i| i + 1)).collect();
        if let Some(digits) = digits {
            return Ok(DigitMembership { member: true, digits });
        }
    }
    // greedy extraction; by separation each digit is forced
    let mut rest = x.clone();
    let mut digits = Vec::new();
    for n in 1..=spec.n_max {
        let a = spec.a(n)?;
        if rest.compare(&a) != Ordering::Less {
            rest = rest.sub(&a)?;
            digits.push(n);
        }
    }
    if rest.is_zero() || rest.sign() == 0 {
        Ok(DigitMembership { member: true, digits })
    } else {
        Ok(DigitMembership { member: false, digits: Vec::new() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetSum {
    pub indices: Vec<usize>,
    pub value: SparseDyadic,
}

/// Sums `Σ_{n ∈ F} a_n` over subsets `F` of class `class` restricted to
/// indices `<= index_cap`, in bitmask order, at most `count_cap` of them.
pub fn subset_sums(spec: &DigitSpec, class: u8, index_cap: usize, count_cap: usize) -> Result<Vec<SubsetSum>, DigitError> {
    if !(1..=3).contains(&class) {
        return Err(DigitError::IndexOutOfRange { index: class as usize, n_max: 3 });
    }
    if index_cap > spec.n_max {
        return Err(DigitError::IndexOutOfRange { index: index_cap, n_max: spec.n_max });
    }
    let idx = spec.partition.members(class, index_cap);
    if idx.len() >= 63 {
        return Err(DigitError::IndexOutOfRange { index: idx.len(), n_max: 62 });
    }
    let total = 1u64 << idx.len();
    let mut out = Vec::new();
    for mask in 0..total {
        if out.len() >= count_cap {
            break;
        }
        let indices: Vec<usize> = idx.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, &n)| n).collect();
        let value = SparseDyadic::from_terms(indices.iter().map(|&n| (spec.g_table[n - 1].clone(), BigInt::one())))?;
        out.push(SubsetSum { indices, value });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SumsetFailure {
    pub parts: [Vec<usize>; 3],
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SumsetReport {
    pub index_cap: usize,
    pub class_sizes: [usize; 3],
    pub checked: usize,
    pub passed: usize,
    pub failures: Vec<SumsetFailure>,
    pub pass: bool,
}

/// Exhaustive `S_1 + S_2 + S_3 ⊂ K` over indices `<= index_cap`; each sum's
/// digit set must be the disjoint union of the three parts.
pub fn verify_triple_sumset(spec: &DigitSpec, index_cap: usize) -> Result<SumsetReport, DigitError> {
    spec.partition.check_disjoint()?;
    let s: Vec<Vec<SubsetSum>> =
        (1..=3u8).map(|c| subset_sums(spec, c, index_cap, usize::MAX)).collect::<Result<_, _>>()?;
    let mut checked = 0;
    let mut passed = 0;
    let mut failures = Vec::new();
    for x1 in &s[0] {
        for x2 in &s[1] {
            let x12 = x1.value.add(&x2.value)?;
            for x3 in &s[2] {
                checked += 1;
                let sum = x12.add(&x3.value)?;
                let m = member_k(spec, &sum)?;
                let mut expect: Vec<usize> = x1.indices.iter().chain(&x2.indices).chain(&x3.indices).copied().collect();
                expect.sort_unstable();
                let reason = if !m.member {
                    Some("sum not in K".to_string())
                } else if m.digits != expect {
                    Some(format!("digits {:?} differ from union {:?}", m.digits, expect))
                } else {
                    None
                };
                match reason {
                    None => passed += 1,
                    Some(reason) => failures.push(SumsetFailure {
                        parts: [x1.indices.clone(), x2.indices.clone(), x3.indices.clone()],
                        reason,
                    }),
                }
            }
        }
    }
    Ok(SumsetReport {
        index_cap,
        class_sizes: [s[0].len(), s[1].len(), s[2].len()],
        checked,
        passed,
        pass: failures.is_empty(),
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub n: usize,
    pub s: String,
    pub lower: String,
    pub upper: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticTable {
    pub rows: Vec<DiagnosticRow>,
    /// Per `s`: whether every consecutive pair is certified to decrease.
    pub decreasing: Vec<(String, bool)>,
}

impl DiagnosticTable {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(vec!["n".into(), "s".into(), "lower".into(), "upper".into()]);
        for r in &self.rows {
            t.push(vec![r.n.to_string(), r.s.clone(), r.lower.clone(), r.upper.clone()]);
        }
        t
    }
}

/// Brackets `2^n (log 1/τ_n)^{-s}` using `τ_n ∈ [2^{-g(n+1)}, 2^{1-g(n+1)})`.
/// A decrease from `n` to `n+1` is certified when the upper end at `n+1`
/// lies below the lower end at `n`.
pub fn dimension_zero_diagnostic(
    spec: &DigitSpec,
    s_grid: &[BigRational],
    n_range: &[usize],
    prec: Precision,
) -> Result<DiagnosticTable, DigitError> {
    let gauge = |e: DimensionError| DigitError::Gauge(e.to_string());
    let mut rows = Vec::new();
    let mut decreasing = Vec::new();
    for s in s_grid {
        let label = format_rational(s);
        let mut prev_lo: Option<BigRational> = None;
        let mut ok = true;
        for &n in n_range {
            let tb = spec.tau_bound(n)?;
            let count = BigUint::one() << n;
            let lo = hs_cover_cost_bracket(&count, &tb.lower_exponent, s, prec.bits).map_err(gauge)?;
            let hi = if tb.upper_exponent >= BigUint::from(2u32) {
                hs_cover_cost_bracket(&count, &tb.upper_exponent, s, prec.bits).map_err(gauge)?.hi().clone()
            } else {
                // log(1/τ_n) may be below 1; no finite upper bound from this bracket
                BigRational::from_integer(BigInt::from(u64::MAX))
            };
            if let Some(p) = &prev_lo {
                if &hi >= p {
                    ok = false;
                }
            }
            prev_lo = Some(lo.lo().clone());
            rows.push(DiagnosticRow {
                n,
                s: label.clone(),
                lower: interval::decimal(lo.lo(), 12),
                upper: interval::decimal(&hi, 12),
            });
        }
        decreasing.push((label, ok));
    }
    Ok(DiagnosticTable { rows, decreasing })
}

/// Wire form of a digit spec.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DigitSpecDoc {
    pub g: ScheduleDoc,
    #[serde(default)]
    pub growth: Option<String>,
    pub partition: PartitionDoc,
    #[serde(rename = "N_max")]
    pub n_max: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleDoc {
    Named(String),
    Table(Vec<serde_json::Value>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartitionDoc {
    Named(String),
    Explicit(Vec<Vec<usize>>),
}

impl DigitSpecDoc {
    pub fn build(&self) -> Result<DigitSpec, DigitError> {
        let schedule: Arc<dyn ExponentSchedule> = match &self.g {
            ScheduleDoc::Named(name) => schedule_registry().get(name)?,
            ScheduleDoc::Table(vals) => {
                let mut table = Vec::with_capacity(vals.len());
                for v in vals {
                    let parsed = match v {
                        serde_json::Value::Number(n) => n.as_u64().map(BigUint::from),
                        serde_json::Value::String(s) => s.parse().ok(),
                        _ => None,
                    };
                    table.push(parsed.ok_or_else(|| DigitError::InvalidSpec(format!("bad table entry {v}")))?);
                }
                Arc::new(Table1Based(table))
            }
        };
        let growth = self.growth.as_deref().map(Growth::parse).transpose()?;
        let partition = match &self.partition {
            PartitionDoc::Named(s) if s == "mod3" => Partition::Mod3,
            PartitionDoc::Named(s) => return Err(DigitError::InvalidSpec(format!("unknown partition '{s}'"))),
            PartitionDoc::Explicit(lists) if lists.len() == 3 => {
                Partition::Explicit([lists[0].clone(), lists[1].clone(), lists[2].clone()])
            }
            PartitionDoc::Explicit(lists) => {
                return Err(DigitError::InvalidSpec(format!("partition needs 3 classes, got {}", lists.len())))
            }
        };
        DigitSpec::new(schedule, self.n_max, growth, partition)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn spec(name: &str, n_max: usize) -> DigitSpec {
        DigitSpec::named(name, n_max, Some(Growth::Additive(1)), Partition::Mod3).unwrap()
    }

    fn sd(terms: &[(u64, i64)]) -> SparseDyadic {
        SparseDyadic::from_terms(terms.iter().map(|&(f, c)| (BigUint::from(f), BigInt::from(c)))).unwrap()
    }

    #[test]
    fn growth_parsing() {
        assert_eq!(Growth::parse("g(n+1)>=g(n)+1").unwrap(), Growth::Additive(1));
        assert_eq!(Growth::parse(" g(n+1) >= 2*g(n) ").unwrap(), Growth::Doubling);
        assert!(Growth::parse("g(n+1)>=g(n)+0").is_err());
        assert!(Growth::parse("fast").is_err());
    }

    #[test]
    fn separation_examples() {
        assert!(separation_check(&spec("doubling", 6), 4).unwrap().pass);
        assert!(!separation_check(&spec("linear", 6), 3).unwrap().pass);
        assert!(separation_check(&spec("square-doubling", 5), 3).unwrap().pass);
        let bare = DigitSpec::named("doubling", 6, None, Partition::Mod3).unwrap();
        assert_eq!(separation_check(&bare, 3), Err(DigitError::GrowthPropertyMissing));
    }

    #[test]
    fn tau_examples() {
        let s = spec("doubling", 6);
        let t = s.tau_bound(2).unwrap();
        assert_eq!((t.lower_exponent, t.upper_exponent), (BigUint::from(8u32), BigUint::from(7u32)));
        assert!(t.contains_truncated_tail);
        assert!(s.tau_bound(5).unwrap().contains_truncated_tail);
        assert!(s.tau_bound(6).is_err());
    }

    #[test]
    fn membership_examples() {
        let s = spec("doubling", 6);
        let m = member_k(&s, &sd(&[(4, 1), (16, 1)])).unwrap();
        assert_eq!(m, DigitMembership { member: true, digits: vec![2, 4] });
        assert!(!member_k(&s, &sd(&[(4, 2)])).unwrap().member);
        assert_eq!(member_k(&s, &SparseDyadic::zero()).unwrap().digits, Vec::<usize>::new());
        // 2^-2 + 2^-4 written as 2^-1 - 2^-2 + 2^-4
        let m = member_k(&s, &sd(&[(1, 1), (2, -1), (4, 1)])).unwrap();
        assert_eq!(m.digits, vec![1, 2]);
        assert!(matches!(member_k(&s, &sd(&[(65, 1)])), Err(DigitError::UniverseExceeded { .. })));
    }

    #[test]
    fn subset_sum_examples() {
        let s = spec("doubling", 6);
        let v = subset_sums(&s, 1, 4, 100).unwrap();
        let expect = [sd(&[]), sd(&[(2, 1)]), sd(&[(16, 1)]), sd(&[(2, 1), (16, 1)])];
        assert_eq!(v.len(), 4);
        for (a, b) in v.iter().zip(&expect) {
            assert!(a.value.value_eq(b));
        }
        assert_eq!(subset_sums(&s, 3, 2, 100).unwrap().len(), 1);
        assert_eq!(subset_sums(&s, 1, 6, 2).unwrap().len(), 2);
    }

    #[test]
    fn sumset_examples() {
        let s = spec("doubling", 6);
        let r = verify_triple_sumset(&s, 6).unwrap();
        assert!(r.pass);
        assert_eq!(r.checked, 64);
        let r3 = verify_triple_sumset(&s, 3).unwrap();
        assert_eq!((r3.checked, r3.passed), (8, 8));
        let overlap = Partition::Explicit([vec![1, 4], vec![2, 4], vec![3, 6]]);
        assert_eq!(
            DigitSpec::named("doubling", 6, Some(Growth::Additive(1)), overlap).err(),
            Some(DigitError::PartitionOverlap { index: 4 })
        );
    }

    #[test]
    fn diagnostic_examples() {
        let s = spec("square-doubling", 5);
        let t = dimension_zero_diagnostic(&s, &[q(1, 2), q(1, 1), q(2, 1)], &[1, 2, 3, 4], Precision::default()).unwrap();
        assert!(t.decreasing.iter().all(|(_, ok)| *ok), "{:?}", t.decreasing);
        let d = spec("doubling", 7);
        let t = dimension_zero_diagnostic(&d, &[q(3, 1)], &[1, 2, 3, 4, 5, 6], Precision::default()).unwrap();
        assert!(t.decreasing[0].1);
        assert_eq!(t.to_table().rows.len(), 6);
    }

    #[test]
    fn spec_doc_parsing() {
        let doc: DigitSpecDoc =
            serde_json::from_str(r#"{"g":"doubling","growth":"g(n+1)>=g(n)+1","partition":"mod3","N_max":6}"#).unwrap();
        assert_eq!(doc.build().unwrap().n_max(), 6);
        let doc: DigitSpecDoc =
            serde_json::from_str(r#"{"g":[2,4,8,16,32,64],"growth":"g(n+1)>=2*g(n)","partition":[[1,4],[2,5],[3,6]],"N_max":6}"#)
                .unwrap();
        let s = doc.build().unwrap();
        assert!(separation_check(&s, 6).unwrap().pass);
        assert!(serde_json::from_str::<DigitSpecDoc>(r#"{"g":"doubling","partition":"mod3","N_max":6,"x":1}"#).is_err());
    }
}

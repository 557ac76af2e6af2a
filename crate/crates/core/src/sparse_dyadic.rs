//! Exact signed sums of negative powers of two with arbitrary-precision
//! exponents.
//!
//! A [`SparseDyadic`] stores `Σ c_j · 2^{-f_j}` as a sorted map from the
//! exponent `f_j` to a nonzero coefficient `c_j`. Nothing here ever expands a
//! value into its binary digits, so exponents in the billions cost the same as
//! exponents below a hundred.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{CheckedSub, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Default limit on the number of stored terms.
pub const DEFAULT_TERM_CAP: usize = 4096;

/// Largest exponent accepted when materializing a value as a rational.
pub const RATIONAL_EXPONENT_BUDGET: u64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DyadicError {
    #[error("term cap exceeded: {terms} terms > cap {cap}")]
    TermCapExceeded { terms: usize, cap: usize },
    #[error("value lies outside [0, 1]")]
    OutOfUnitInterval,
    #[error("head exponent {exponent} does not conform to lattice scale {scale}")]
    NonconformingHead { exponent: BigUint, scale: BigUint },
    #[error("exponent {exponent} exceeds the materialization budget of {budget} bits")]
    ExponentBudget { exponent: BigUint, budget: u64 },
    #[error("malformed sparse dyadic: {0}")]
    Parse(String),
}

/// Exact value `Σ c · 2^{-f}`.
///
/// Equality (`==`) is structural. Two representations of the same real value
/// (for example `{3 ↦ 2}` and `{2 ↦ 1}`) compare unequal with `==` but
/// `Ordering::Equal` with [`SparseDyadic::compare`].
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct SparseDyadic {
    terms: BTreeMap<BigUint, BigInt>,
}

/// Diagnostics from one run of the sign procedure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignTrace {
    pub sign: i8,
    pub steps: usize,
    pub peak_coefficient: BigUint,
    pub coefficient_bound: BigUint,
}

impl SparseDyadic {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::term(BigUint::zero(), BigInt::one())
    }

    /// `2^{-f}`.
    pub fn pow2_neg(f: impl Into<BigUint>) -> Self {
        Self::term(f.into(), BigInt::one())
    }

    /// `c · 2^{-f}`; zero coefficients give zero.
    pub fn term(f: impl Into<BigUint>, c: impl Into<BigInt>) -> Self {
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(f.into(), c);
        }
        Self { terms }
    }

    /// Builds a canonical value from arbitrary `(exponent, coefficient)`
    /// pairs, merging repeated exponents and dropping zeros.
    pub fn from_terms<I, F, C>(pairs: I) -> Result<Self, DyadicError>
    where
        I: IntoIterator<Item = (F, C)>,
        F: Into<BigUint>,
        C: Into<BigInt>,
    {
        Self::from_terms_capped(pairs, DEFAULT_TERM_CAP)
    }

    pub fn from_terms_capped<I, F, C>(pairs: I, cap: usize) -> Result<Self, DyadicError>
    where
        I: IntoIterator<Item = (F, C)>,
        F: Into<BigUint>,
        C: Into<BigInt>,
    {
        let mut terms: BTreeMap<BigUint, BigInt> = BTreeMap::new();
        for (f, c) in pairs {
            let c = c.into();
            if c.is_zero() {
                continue;
            }
            let f = f.into();
            let slot = terms.entry(f.clone()).or_insert_with(BigInt::zero);
            *slot += c;
            if slot.is_zero() {
                terms.remove(&f);
            }
        }
        let out = Self { terms };
        out.check_cap(cap)?;
        Ok(out)
    }

    /// The lattice point `k · 2^{-e}` as a single term.
    pub fn lattice_point(k: &BigUint, e: &BigUint) -> Self {
        Self::term(e.clone(), BigInt::from(k.clone()))
    }

    fn check_cap(&self, cap: usize) -> Result<(), DyadicError> {
        if self.terms.len() > cap {
            return Err(DyadicError::TermCapExceeded { terms: self.terms.len(), cap });
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&BigUint, &BigInt)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, f: &BigUint) -> Option<&BigInt> {
        self.terms.get(f)
    }

    pub fn max_exponent(&self) -> Option<&BigUint> {
        self.terms.keys().next_back()
    }

    pub fn min_exponent(&self) -> Option<&BigUint> {
        self.terms.keys().next()
    }

    pub fn max_abs_coefficient(&self) -> BigUint {
        self.terms.values().map(|c| c.magnitude().clone()).max().unwrap_or_default()
    }

    pub fn add(&self, other: &Self) -> Result<Self, DyadicError> {
        self.add_capped(other, DEFAULT_TERM_CAP)
    }

    pub fn add_capped(&self, other: &Self, cap: usize) -> Result<Self, DyadicError> {
        let (big, small) = if self.terms.len() >= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut terms = big.terms.clone();
        for (f, c) in &small.terms {
            match terms.get_mut(f) {
                Some(slot) => {
                    *slot += c;
                    if slot.is_zero() {
                        terms.remove(f);
                    }
                }
                None => {
                    terms.insert(f.clone(), c.clone());
                }
            }
        }
        let out = Self { terms };
        out.check_cap(cap)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, DyadicError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(f, c)| (f.clone(), -c)).collect(),
        }
    }

    /// Multiplies every coefficient by an integer.
    pub fn mul_int(&self, k: &BigInt) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(f, c)| (f.clone(), c * k)).collect(),
        }
    }

    /// Multiplies by `2^k` for a signed shift `k`. Terms that would get a
    /// negative exponent are folded into exponent 0 with a scaled coefficient.
    pub fn mul_pow2(&self, k: &BigInt) -> Result<Self, DyadicError> {
        let mut pairs = Vec::with_capacity(self.terms.len());
        for (f, c) in &self.terms {
            let shifted = BigInt::from(f.clone()) - k;
            if shifted.sign() == Sign::Minus {
                let lift = shifted.magnitude().to_usize().ok_or_else(|| DyadicError::ExponentBudget {
                    exponent: shifted.magnitude().clone(),
                    budget: RATIONAL_EXPONENT_BUDGET,
                })?;
                pairs.push((BigUint::zero(), c.clone() << lift));
            } else {
                pairs.push((shifted.magnitude().clone(), c.clone()));
            }
        }
        Self::from_terms(pairs)
    }

    /// Sign of the real value.
    pub fn sign(&self) -> i8 {
        self.sign_trace().sign
    }

    /// Sign by leading-term dominance, merging the leading coefficient into
    /// the next scale whenever dominance cannot be certified.
    ///
    /// With `R` the largest remaining coefficient magnitude and `f2` the next
    /// exponent, the remaining terms sum to less than `2R · 2^{-f2}`. The
    /// merged coefficient never exceeds `3R`, and the run asserts the looser
    /// `3 · n · max|c|` envelope on every step.
    pub fn sign_trace(&self) -> SignTrace {
        let entries: Vec<(&BigUint, &BigInt)> = self.terms.iter().collect();
        let n = entries.len();
        let max_c = self.max_abs_coefficient();
        let bound = BigUint::from(3u32) * BigUint::from(n.max(1)) * &max_c;
        if n == 0 {
            return SignTrace {
                sign: 0,
                steps: 0,
                peak_coefficient: BigUint::zero(),
                coefficient_bound: bound,
            };
        }
        // suffix_max[i] = max |c_j| for j >= i
        let mut suffix_max = vec![BigUint::zero(); n + 1];
        for i in (0..n).rev() {
            let m = entries[i].1.magnitude();
            suffix_max[i] = if m > &suffix_max[i + 1] { m.clone() } else { suffix_max[i + 1].clone() };
        }

        let mut lead_c = entries[0].1.clone();
        let mut lead_f = entries[0].0.clone();
        let mut idx = 1;
        let mut steps = 0;
        let mut peak = lead_c.magnitude().clone();
        loop {
            steps += 1;
            if lead_c.is_zero() {
                if idx == n {
                    return SignTrace { sign: 0, steps, peak_coefficient: peak, coefficient_bound: bound };
                }
                lead_c = entries[idx].1.clone();
                lead_f = entries[idx].0.clone();
                idx += 1;
                continue;
            }
            if idx == n {
                return SignTrace {
                    sign: sign_of(&lead_c),
                    steps,
                    peak_coefficient: peak,
                    coefficient_bound: bound,
                };
            }
            let twice_rest = &suffix_max[idx] << 1u32;
            let next_f = entries[idx].0;
            let gap = next_f - &lead_f;
            if dominates(lead_c.magnitude(), &gap, &twice_rest) {
                return SignTrace {
                    sign: sign_of(&lead_c),
                    steps,
                    peak_coefficient: peak,
                    coefficient_bound: bound,
                };
            }
            // Not dominant, so |lead_c| · 2^gap <= 2R and the gap is small.
            let shift = gap.to_usize().expect("non-dominant gap fits in usize");
            lead_c = (lead_c << shift) + entries[idx].1;
            lead_f = next_f.clone();
            idx += 1;
            if lead_c.magnitude() > &peak {
                peak = lead_c.magnitude().clone();
            }
            assert!(
                peak <= bound,
                "sign(): merged coefficient {peak} exceeds 3·n·max|c| = {bound}"
            );
        }
    }

    /// Exact three-way comparison of real values.
    pub fn compare(&self, other: &Self) -> Ordering {
        let mut diff = self.terms.clone();
        for (f, c) in &other.terms {
            match diff.get_mut(f) {
                Some(slot) => {
                    *slot -= c;
                    if slot.is_zero() {
                        diff.remove(f);
                    }
                }
                None => {
                    diff.insert(f.clone(), -c);
                }
            }
        }
        match (Self { terms: diff }).sign() {
            -1 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }

    pub fn value_eq(&self, other: &Self) -> bool {
        self.compare(other) == Ordering::Equal
    }

    /// Checks `0 <= self <= 1`.
    pub fn in_unit_interval(&self) -> bool {
        self.sign() >= 0 && self.compare(&Self::one()) != Ordering::Greater
    }

    /// Distance from `self` to the lattice `2^{-e} ℤ ∩ [0, 1]`.
    ///
    /// Terms with exponent at most `e` are already lattice multiples; the
    /// remaining tail is reduced modulo `2^{-e}` by a binary search on the
    /// integer quotient, which lies in `[-max|c|, max|c|)`.
    pub fn dist_to_lattice(&self, e: &BigUint) -> Result<Self, DyadicError> {
        if !self.in_unit_interval() {
            return Err(DyadicError::OutOfUnitInterval);
        }
        // Head terms (f <= e) are multiples of 2^{-e} since 2^{-f} = 2^{e-f} · 2^{-e}.
        let mut tail = BTreeMap::new();
        for (f, c) in &self.terms {
            if f > e {
                tail.insert(f.clone(), c.clone());
            } else if e.checked_sub(f).is_none() {
                return Err(DyadicError::NonconformingHead { exponent: f.clone(), scale: e.clone() });
            }
        }
        let tail = Self { terms: tail };
        if tail.is_zero() {
            return Ok(Self::zero());
        }
        let max_c = BigInt::from(tail.max_abs_coefficient());
        // largest q with q · 2^{-e} <= tail
        let mut lo = -max_c.clone();
        let mut hi = max_c;
        while &hi - &lo > BigInt::one() {
            let mid: BigInt = (&lo + &hi) >> 1u32;
            let probe = Self::term(e.clone(), mid.clone());
            if probe.compare(&tail) != Ordering::Greater {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let reduced = tail.add(&Self::term(e.clone(), -lo))?;
        let complement = Self::pow2_neg(e.clone()).sub(&reduced)?;
        debug_assert!(reduced.sign() >= 0 && complement.sign() > 0);
        if complement.compare(&reduced) == Ordering::Less {
            Ok(complement)
        } else {
            Ok(reduced)
        }
    }

    /// Materializes the value as a rational; fails when an exponent exceeds
    /// [`RATIONAL_EXPONENT_BUDGET`].
    pub fn to_rational(&self) -> Result<BigRational, DyadicError> {
        let Some(max_f) = self.max_exponent() else {
            return Ok(BigRational::zero());
        };
        let top = max_f.to_u64().filter(|&f| f <= RATIONAL_EXPONENT_BUDGET).ok_or_else(|| {
            DyadicError::ExponentBudget { exponent: max_f.clone(), budget: RATIONAL_EXPONENT_BUDGET }
        })?;
        let mut numer = BigInt::zero();
        for (f, c) in &self.terms {
            let f = f.to_u64().expect("bounded by max exponent");
            numer += c << (top - f) as usize;
        }
        Ok(BigRational::new(numer, BigInt::one() << top as usize))
    }

    /// Exact conversion from a rational whose denominator is a power of two.
    pub fn from_rational(q: &BigRational) -> Option<Self> {
        let denom = q.denom().magnitude();
        if denom.count_ones() != 1 {
            return None;
        }
        let e = denom.bits() - 1;
        Some(Self::term(BigUint::from(e), q.numer().clone()))
    }

    /// Decimal rendering with `digits` fractional digits, rounded to nearest.
    ///
    /// Terms too small to affect the shown digits are listed as annotations
    /// instead of being expanded.
    pub fn approx_decimal(&self, digits: usize) -> DecimalApprox {
        if self.is_zero() {
            return DecimalApprox { text: "0".into(), annotations: Vec::new(), digits };
        }
        let cutoff = BigUint::from(digits as u64 * 4 + 64);
        let mut visible = BTreeMap::new();
        let mut annotations = Vec::new();
        for (f, c) in &self.terms {
            if f > &(&cutoff + BigUint::from(c.magnitude().bits())) {
                annotations.push(format_term(f, c));
            } else {
                visible.insert(f.clone(), c.clone());
            }
        }
        let visible = Self { terms: visible };
        let q = visible.to_rational().expect("visible exponents are below the cutoff");
        let scale = BigInt::from(10u32).pow(digits as u32);
        let scaled = q * BigRational::from_integer(scale.clone());
        let rounded = round_half_away(&scaled);
        let negative = rounded.sign() == Sign::Minus;
        let mag = rounded.magnitude().clone();
        let scale_u = scale.magnitude().clone();
        let int_part = &mag / &scale_u;
        let frac_part = &mag % &scale_u;
        let mut text = String::new();
        if negative {
            text.push('-');
        }
        text.push_str(&int_part.to_string());
        if digits > 0 {
            text.push('.');
            text.push_str(&format!("{:0>width$}", frac_part.to_string(), width = digits));
        }
        DecimalApprox { text, annotations, digits }
    }
}

fn sign_of(c: &BigInt) -> i8 {
    match c.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

/// Whether `c · 2^gap > bound` for `c >= 1`.
fn dominates(c: &BigUint, gap: &BigUint, bound: &BigUint) -> bool {
    let bound_bits = bound.bits();
    if gap >= &BigUint::from(bound_bits) {
        // c · 2^gap >= 2^gap >= 2^{bits(bound)} > bound
        return true;
    }
    let g = gap.to_usize().expect("gap below bit length");
    (c << g) > *bound
}

fn round_half_away(q: &BigRational) -> BigInt {
    let two = BigInt::from(2);
    let n = q.numer();
    let d = q.denom();
    let doubled = (n * &two).abs() + d;
    let mag = doubled / (d * &two);
    if n.sign() == Sign::Minus {
        -mag
    } else {
        mag
    }
}

fn format_term(f: &BigUint, c: &BigInt) -> String {
    let sign = if c.sign() == Sign::Minus { '-' } else { '+' };
    let mag = c.magnitude();
    if mag.is_one() {
        format!("{sign}2^-{f}")
    } else {
        format!("{sign}{mag}*2^-{f}")
    }
}

/// Decimal rendering produced by [`SparseDyadic::approx_decimal`]; the shown
/// digits are within one unit in the last place of the full value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecimalApprox {
    pub text: String,
    pub annotations: Vec<String>,
    pub digits: usize,
}

impl fmt::Display for DecimalApprox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)?;
        for a in &self.annotations {
            write!(f, " ({a})")?;
        }
        Ok(())
    }
}

impl fmt::Debug for SparseDyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for SparseDyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            let s = format_term(e, c);
            if i == 0 && s.starts_with('+') {
                f.write_str(&s[1..])?;
            } else {
                f.write_str(&s)?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct Wire {
    terms: Vec<(String, String)>,
}

impl Serialize for SparseDyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        Wire {
            terms: self.terms.iter().map(|(f, c)| (f.to_string(), c.to_string())).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SparseDyadic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let wire = Wire::deserialize(deserializer)?;
        let mut pairs = Vec::with_capacity(wire.terms.len());
        for (f, c) in wire.terms {
            let f: BigUint = f.parse().map_err(|_| D::Error::custom(format!("bad exponent {f:?}")))?;
            let c: BigInt = c.parse().map_err(|_| D::Error::custom(format!("bad coefficient {c:?}")))?;
            pairs.push((f, c));
        }
        SparseDyadic::from_terms(pairs).map_err(D::Error::custom)
    }
}

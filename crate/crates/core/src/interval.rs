//! Outward-rounded rational brackets for the few transcendental quantities
//! the constructions need (`ln`, `exp`, real powers).
//!
//! A [`Bracket`] is a closed interval with exact rational endpoints. Every
//! operation rounds its lower end down and its upper end up, so the true value
//! of any expression built from brackets always lies inside the result.
//! Decisions that depend on a bracket go through [`decide`], which doubles the
//! working precision until the bracket separates or the budget runs out.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntervalError {
    #[error("precision exhausted at {bits} bits without separating the bracket")]
    PrecisionExhausted { bits: u64 },
    #[error("logarithm of a bracket that is not strictly positive: [{lo}, {hi}]")]
    NonPositiveLog { lo: String, hi: String },
    #[error("division by a bracket containing zero")]
    DivisionByZero,
}

/// Working precision in bits plus the ceiling used when widening.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Precision {
    pub bits: u64,
    pub max_bits: u64,
}

impl Default for Precision {
    fn default() -> Self {
        Self { bits: 128, max_bits: 8192 }
    }
}

impl Precision {
    pub fn new(bits: u64) -> Self {
        Self { bits, max_bits: (bits * 64).max(8192) }
    }
}

/// Runs `attempt` at increasing precision until it returns `Some`.
pub fn decide<T, F>(prec: Precision, mut attempt: F) -> Result<T, IntervalError>
where
    F: FnMut(u64) -> Result<Option<T>, IntervalError>,
{
    let mut bits = prec.bits.max(16);
    loop {
        if let Some(v) = attempt(bits)? {
            return Ok(v);
        }
        if bits >= prec.max_bits {
            return Err(IntervalError::PrecisionExhausted { bits });
        }
        bits = (bits * 2).min(prec.max_bits);
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Bracket {
    lo: BigRational,
    hi: BigRational,
}

impl Bracket {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi, "bracket with lo > hi");
        Self { lo, hi }
    }

    pub fn exact(q: BigRational) -> Self {
        Self { lo: q.clone(), hi: q }
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Self::exact(BigRational::from_integer(n.into()))
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2))
    }

    pub fn contains(&self, q: &BigRational) -> bool {
        &self.lo <= q && q <= &self.hi
    }

    /// Certified ordering against another bracket, if one exists.
    pub fn compare(&self, other: &Self) -> Option<Ordering> {
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if self.lo > other.hi {
            Some(Ordering::Greater)
        } else if self.is_exact() && other.is_exact() && self.lo == other.lo {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Certified `self <= other`, `None` when undecided.
    pub fn le(&self, other: &Self) -> Option<bool> {
        if self.hi <= other.lo {
            Some(true)
        } else if self.lo > other.hi {
            Some(false)
        } else {
            None
        }
    }

    pub fn round_out(&self, bits: u64) -> Self {
        Self { lo: round_down(&self.lo, bits), hi: round_up(&self.hi, bits) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { lo: &self.lo + &other.lo, hi: &self.hi + &other.hi }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { lo: &self.lo - &other.hi, hi: &self.hi - &other.lo }
    }

    pub fn neg(&self) -> Self {
        Self { lo: -&self.hi, hi: -&self.lo }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let c = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = c.iter().min().expect("four products").clone();
        let hi = c.iter().max().expect("four products").clone();
        Self { lo, hi }
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        self.mul(&Self::exact(k.clone()))
    }

    pub fn recip(&self) -> Result<Self, IntervalError> {
        if self.lo.is_zero() || self.hi.is_zero() || (self.lo.is_negative() != self.hi.is_negative()) {
            return Err(IntervalError::DivisionByZero);
        }
        Ok(Self { lo: self.hi.recip(), hi: self.lo.recip() })
    }

    pub fn div(&self, other: &Self) -> Result<Self, IntervalError> {
        Ok(self.mul(&other.recip()?))
    }

    /// Natural logarithm of a strictly positive bracket.
    pub fn ln(&self, bits: u64) -> Result<Self, IntervalError> {
        if !self.lo.is_positive() {
            return Err(IntervalError::NonPositiveLog { lo: self.lo.to_string(), hi: self.hi.to_string() });
        }
        let lo = ln_point(&self.lo, bits).lo;
        let hi = ln_point(&self.hi, bits).hi;
        Ok(Self { lo, hi })
    }

    pub fn exp(&self, bits: u64) -> Self {
        let lo = exp_point(&self.lo, bits).lo;
        let hi = exp_point(&self.hi, bits).hi;
        Self { lo, hi }
    }

    /// `self^s` for a strictly positive bracket and rational exponent.
    /// Integer exponents are evaluated by exact repeated multiplication.
    pub fn powr(&self, s: &BigRational, bits: u64) -> Result<Self, IntervalError> {
        if !self.lo.is_positive() {
            return Err(IntervalError::NonPositiveLog { lo: self.lo.to_string(), hi: self.hi.to_string() });
        }
        if s.is_integer() {
            if let Some(k) = s.to_integer().to_i64() {
                if k.unsigned_abs() <= 64 {
                    let mut acc = Self::from_int(1);
                    for _ in 0..k.unsigned_abs() {
                        acc = acc.mul(self).round_out(bits + 32);
                    }
                    return if k < 0 { acc.recip() } else { Ok(acc) };
                }
            }
        }
        let log = self.ln(bits + 32)?;
        Ok(log.scale(s).exp(bits + 32).round_out(bits + 16))
    }

    /// Midpoint rendered with `digits` fractional digits plus the half-width
    /// rounded up to one significant digit.
    pub fn to_decimal(&self, digits: usize) -> (String, String) {
        (decimal(&self.midpoint(), digits), decimal_up(&(self.width() / BigRational::from_integer(2.into())), digits))
    }

    pub fn to_f64(&self) -> f64 {
        self.midpoint().to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Debug for Bracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (m, r) = self.to_decimal(12);
        write!(f, "{m} ± {r}")
    }
}

impl fmt::Display for Bracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

fn pow2(k: u64) -> BigInt {
    BigInt::one() << k as usize
}

/// `floor(log2 |x|)` for nonzero `x`.
pub fn floor_log2(x: &BigRational) -> i64 {
    let n = x.numer().magnitude();
    let d = x.denom().magnitude();
    let mut k = n.bits() as i64 - d.bits() as i64;
    // 2^k <= n/d < 2^{k+1} after correction
    loop {
        let (num, den) = if k >= 0 { (n.clone(), d << k as usize) } else { (n << (-k) as usize, d.clone()) };
        if num < den {
            k -= 1;
            continue;
        }
        if num >= (den << 1u32) {
            k += 1;
            continue;
        }
        return k;
    }
}

/// Rounds toward −∞ keeping about `bits` significant bits.
pub fn round_down(x: &BigRational, bits: u64) -> BigRational {
    round_rel(x, bits, false)
}

/// Rounds toward +∞ keeping about `bits` significant bits.
pub fn round_up(x: &BigRational, bits: u64) -> BigRational {
    round_rel(x, bits, true)
}

fn round_rel(x: &BigRational, bits: u64, up: bool) -> BigRational {
    if x.is_zero() || x.denom().is_one() && x.numer().bits() <= bits {
        return x.clone();
    }
    let shift = bits as i64 - floor_log2(x);
    let scaled = if shift >= 0 {
        x * BigRational::from_integer(pow2(shift as u64))
    } else {
        x / BigRational::from_integer(pow2((-shift) as u64))
    };
    let m = if up { scaled.ceil() } else { scaled.floor() };
    if shift >= 0 {
        m / BigRational::from_integer(pow2(shift as u64))
    } else {
        m * BigRational::from_integer(pow2((-shift) as u64))
    }
}

fn fixed(num: BigInt, bits: u64) -> BigRational {
    BigRational::new(num, pow2(bits))
}

fn floor_scaled(x: &BigRational, bits: u64) -> BigInt {
    (x * BigRational::from_integer(pow2(bits))).floor().to_integer()
}

fn ceil_scaled(x: &BigRational, bits: u64) -> BigInt {
    (x * BigRational::from_integer(pow2(bits))).ceil().to_integer()
}

fn guard(bits: u64) -> u64 {
    bits + 24 + 64 - (bits.leading_zeros() as u64)
}

/// Bracket for `ln 2` from `Σ_{k≥1} 1/(k·2^k)` with the tail bounded by
/// `1/((N+1)·2^N)`.
pub fn ln2(bits: u64) -> Bracket {
    let p = guard(bits);
    let mut lo = BigInt::zero();
    let mut hi = BigInt::zero();
    for k in 1..=p {
        let num = pow2(p - k);
        let (q, r) = num.div_rem(&BigInt::from(k));
        hi += if r.is_zero() { q.clone() } else { &q + 1 };
        lo += q;
    }
    // tail < 2^{-p}, one unit
    hi += 1;
    Bracket { lo: fixed(lo, p), hi: fixed(hi, p) }
}

/// Bracket for `ln x`, `x > 0`, via `ln x = k ln 2 + 2 atanh((y-1)/(y+1))`
/// with `y = x / 2^k ∈ [1, 2)`.
pub fn ln_point(x: &BigRational, bits: u64) -> Bracket {
    assert!(x.is_positive(), "ln of non-positive value");
    let p = guard(bits);
    let k = floor_log2(x);
    let y = if k >= 0 {
        x / BigRational::from_integer(pow2(k as u64))
    } else {
        x * BigRational::from_integer(pow2((-k) as u64))
    };
    let one = BigRational::one();
    let z = (&y - &one) / (&y + &one);
    let (mut sum_lo, mut sum_hi) = (BigInt::zero(), BigInt::zero());
    if !z.is_zero() {
        let zz = &z * &z;
        let zz_lo = floor_scaled(&zz, p);
        let zz_hi = ceil_scaled(&zz, p);
        let mut pw_lo = floor_scaled(&z, p);
        let mut pw_hi = ceil_scaled(&z, p);
        let unit = pow2(p);
        let mut j: u64 = 0;
        loop {
            let d = BigInt::from(2 * j + 1);
            sum_lo += pw_lo.div_floor(&d);
            sum_hi += ceil_div(&pw_hi, &d);
            pw_lo = (&pw_lo * &zz_lo).div_floor(&unit);
            pw_hi = ceil_div(&(&pw_hi * &zz_hi), &unit);
            j += 1;
            if pw_hi <= BigInt::one() {
                // remaining terms: z^{2j+1}/(2j+1) · 1/(1-z²) with z² < 1/9
                sum_hi += ceil_div(&(&pw_hi * 9), &BigInt::from(8)) + 1;
                break;
            }
        }
    }
    let atanh = Bracket { lo: fixed(sum_lo * 2, p), hi: fixed(sum_hi * 2, p) };
    let l2 = ln2(bits);
    let kk = BigRational::from_integer(BigInt::from(k));
    let base = l2.scale(&kk);
    base.add(&atanh).round_out(bits + 16)
}

/// Bracket for `exp x` using `exp(x) = exp(x/2^m)^{2^m}` and a Taylor series
/// with `|x/2^m| <= 1/2`.
pub fn exp_point(x: &BigRational, bits: u64) -> Bracket {
    if x.is_negative() {
        let pos = exp_point(&-x, bits);
        return Bracket { lo: pos.hi.recip(), hi: pos.lo.recip() }.round_out(bits + 16);
    }
    if x.is_zero() {
        return Bracket::from_int(1);
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut m: u64 = 0;
    let mut t = x.clone();
    while t > half {
        t /= BigRational::from_integer(BigInt::from(2));
        m += 1;
    }
    let p = guard(bits) + m;
    let unit = pow2(p);
    let t_lo = floor_scaled(&t, p);
    let t_hi = ceil_scaled(&t, p);
    let (mut term_lo, mut term_hi) = (unit.clone(), unit.clone());
    let (mut sum_lo, mut sum_hi) = (unit.clone(), unit.clone());
    let mut j: u64 = 1;
    loop {
        let d = &unit * BigInt::from(j);
        term_lo = (&term_lo * &t_lo).div_floor(&d);
        term_hi = ceil_div(&(&term_hi * &t_hi), &d);
        sum_lo += &term_lo;
        sum_hi += &term_hi;
        j += 1;
        if term_hi <= BigInt::one() {
            // geometric tail with ratio <= t/j <= 1/4
            sum_hi += 2;
            break;
        }
    }
    let mut lo = fixed(sum_lo, p);
    let mut hi = fixed(sum_hi, p);
    for _ in 0..m {
        lo = round_down(&(&lo * &lo), p);
        hi = round_up(&(&hi * &hi), p);
    }
    Bracket { lo, hi }.round_out(bits + 16)
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_ceil(b)
}

/// Nearest-rounded decimal with `digits` fractional digits.
pub fn decimal(q: &BigRational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = q * BigRational::from_integer(scale.clone());
    let r = scaled.round().to_integer();
    render(&r, &scale, digits)
}

fn decimal_up(q: &BigRational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = q * BigRational::from_integer(scale.clone());
    let r = scaled.ceil().to_integer();
    render(&r, &scale, digits)
}

fn render(r: &BigInt, scale: &BigInt, digits: usize) -> String {
    let negative = r.sign() == Sign::Minus;
    let mag: BigUint = r.magnitude().clone();
    let s = scale.magnitude();
    let ip = &mag / s;
    let fp = &mag % s;
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    out.push_str(&ip.to_string());
    if digits > 0 {
        out.push('.');
        out.push_str(&format!("{:0>w$}", fp.to_string(), w = digits));
    }
    out
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(BigRational::new(p, q))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

/// Renders as `"p/q"` (always with a denominator).
pub fn format_rational(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

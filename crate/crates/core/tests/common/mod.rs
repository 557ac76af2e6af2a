//! Independent oracles shared by the integration tests. Everything here is
//! computed from first principles over exact rationals, without calling the
//! algorithm under test.
#![allow(dead_code)]

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thinset_core::dimension::Segment;
use thinset_core::scale_chain::build_custom_chain;
use thinset_core::{ScaleChain, SparseDyadic};

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn pow2(k: u64) -> BigRational {
    BigRational::from_integer(BigInt::one() << k as usize)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `Σ c · 2^{-f}` summed term by term.
pub fn value(x: &SparseDyadic) -> BigRational {
    x.terms().map(|(f, c)| BigRational::from_integer(c.clone()) / pow2(f.to_u64().unwrap())).sum()
}

pub fn dyadic_from(terms: &[(u64, i64)]) -> SparseDyadic {
    SparseDyadic::from_terms(terms.iter().map(|&(f, c)| (BigUint::from(f), BigInt::from(c)))).unwrap()
}

/// `min_k |x - k 2^{-e}|` over integers `k`, for `x ∈ [0, 1]`.
pub fn lattice_distance(x: &BigRational, e: u64) -> BigRational {
    let scaled = x * pow2(e);
    let down = scaled.floor();
    let up = scaled.ceil();
    let d = (&scaled - down).min(up - &scaled);
    d / pow2(e)
}

/// Random chain with `φ_i < M_i - 1` at every level.
pub fn random_branching_chain(r: &mut ChaCha8Rng) -> ScaleChain {
    loop {
        let depth = r.gen_range(4..=5usize);
        let mut m = Vec::new();
        let mut cur = r.gen_range(3..=5u64);
        for _ in 0..depth {
            m.push(cur);
            cur += r.gen_range(1..=2);
        }
        let mut phi = Vec::new();
        let mut prev = 0u64;
        let mut ok = true;
        for &mi in &m {
            let lo = prev + 1;
            let hi = mi - 2;
            if lo > hi {
                ok = false;
                break;
            }
            let v = r.gen_range(lo..=hi);
            phi.push(BigRational::from_integer(BigInt::from(v)));
            prev = v;
        }
        if !ok {
            continue;
        }
        if let Ok(c) = build_custom_chain(&m, &phi, depth) {
            return c;
        }
    }
}

/// Lattice points of `G_{i+1}` in `[g - r_i, g + r_i] ∩ [0, 1]` by floor and
/// ceiling arithmetic on the scaled endpoints.
pub fn lattice_count(chain: &ScaleChain, i: usize, g_num: &BigUint) -> BigUint {
    let ei = chain.e(i).unwrap().to_u64().unwrap();
    let en = chain.e_next(i).unwrap().to_u64().unwrap();
    let rho = chain.rho(i).unwrap().to_u64().unwrap();
    let g = BigRational::from_integer(BigInt::from(g_num.clone())) / pow2(ei);
    let r = pow2(rho).recip();
    let lo = (&g - &r).max(BigRational::zero()) * pow2(en);
    let hi = (&g + &r).min(BigRational::one()) * pow2(en);
    let count: BigInt = hi.floor().to_integer() - lo.ceil().to_integer() + 1;
    count.to_biguint().unwrap_or_default()
}

/// Minimum number of closed intervals of length `2^{-d}` covering the union,
/// by memoized search over every cover start of the form `lo_i + kδ` or
/// `hi_i - (k+1)δ`. Some optimal cover uses only such starts, since shifting
/// each interval right until it meets the leftmost uncovered point lands on
/// one of them.
pub fn covering_oracle(set: &[Segment], d: i64) -> usize {
    let delta = thinset_core::dimension::dyadic(d);
    let mut comps: Vec<(BigRational, BigRational)> = set.iter().map(|s| (s.lo.clone(), s.hi.clone())).collect();
    comps.sort();
    let mut merged: Vec<(BigRational, BigRational)> = Vec::new();
    for (a, b) in comps {
        match merged.last_mut() {
            Some(last) if a <= last.1 => {
                if b > last.1 {
                    last.1 = b;
                }
            }
            _ => merged.push((a, b)),
        }
    }
    if merged.is_empty() {
        return 0;
    }
    let top = merged.last().unwrap().1.clone();
    let bottom = merged[0].0.clone();
    let mut cands = Vec::new();
    for (a, b) in &merged {
        let mut k = 0i64;
        loop {
            let c = a + &delta * BigRational::from_integer(k.into());
            if c > top {
                break;
            }
            cands.push(c);
            k += 1;
        }
        let mut k = 1i64;
        loop {
            let c = b - &delta * BigRational::from_integer(k.into());
            if &c + &delta < bottom {
                break;
            }
            cands.push(c);
            k += 1;
        }
    }
    cands.sort();
    cands.dedup();

    // f(frontier) = least covers for the part of the set right of the
    // frontier. `None` means nothing is covered yet.
    fn solve(
        frontier: Option<&BigRational>,
        merged: &[(BigRational, BigRational)],
        cands: &[BigRational],
        delta: &BigRational,
        memo: &mut HashMap<Option<BigRational>, usize>,
    ) -> usize {
        let key = frontier.cloned();
        if let Some(&v) = memo.get(&key) {
            return v;
        }
        // leftmost uncovered point p; `open` when only points above p remain
        let mut next: Option<(BigRational, bool)> = None;
        for (a, b) in merged {
            match frontier {
                None => {
                    next = Some((a.clone(), false));
                    break;
                }
                Some(f) if b <= f => continue,
                Some(f) if a <= f => {
                    next = Some((f.clone(), true));
                    break;
                }
                Some(_) => {
                    next = Some((a.clone(), false));
                    break;
                }
            }
        }
        let best = match next {
            None => 0,
            Some((p, open)) => {
                let mut best = usize::MAX;
                for c in cands {
                    let end = c + delta;
                    let covers = c <= &p && if open { end > p } else { end >= p };
                    if covers {
                        let v = 1 + solve(Some(&end), merged, cands, delta, memo);
                        best = best.min(v);
                    }
                }
                best
            }
        };
        memo.insert(key, best);
        best
    }
    let mut memo = HashMap::new();
    solve(None, &merged, &cands, &delta, &mut memo)
}

/// Whether some four distinct points satisfy `p + s = q + r`, over all
/// 4-subsets and all three pairings.
pub fn has_quadruple(points: &[BigRational]) -> bool {
    let n = points.len();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    let (w, x, y, z) = (&points[a], &points[b], &points[c], &points[d]);
                    if w + x == y + z || w + y == x + z || w + z == x + y {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Random rational with a power-of-two or small odd denominator.
pub fn random_rational(r: &mut ChaCha8Rng, den_bits: u32) -> BigRational {
    let den = BigInt::one() << r.gen_range(0..=den_bits) as usize;
    let num = BigInt::from(r.gen_range(0..(1u64 << den_bits.min(40))));
    let odd = BigInt::from(2 * r.gen_range(0..4) + 1);
    BigRational::new(num, den * odd)
}

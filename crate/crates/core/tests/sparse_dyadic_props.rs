mod common;

use std::cmp::Ordering;

use common::{lattice_distance, pow2, value};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use thinset_core::SparseDyadic;

fn dyadic() -> impl Strategy<Value = SparseDyadic> {
    prop::collection::vec((0u64..=64, -40i64..=40), 0..7).prop_map(|terms| {
        SparseDyadic::from_terms(terms.into_iter().map(|(f, c)| (BigUint::from(f), BigInt::from(c)))).unwrap()
    })
}

/// Values in `[0, 1]`: nonnegative coefficients on exponents `>= 1`, scaled
/// down when the sum would exceed one.
fn unit_dyadic() -> impl Strategy<Value = SparseDyadic> {
    prop::collection::vec((1u64..=64, 0i64..=1, -3i64..=3), 0..7).prop_map(|terms| {
        let x = SparseDyadic::from_terms(
            terms.into_iter().map(|(f, base, wiggle)| (BigUint::from(f), BigInt::from(base * 2 + wiggle))),
        )
        .unwrap();
        let v = value(&x);
        if v < BigRational::zero() {
            x.neg()
        } else {
            x
        }
    })
    .prop_filter("within [0, 1]", |x| {
        let v = value(x);
        v >= BigRational::zero() && v <= BigRational::one()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn compare_and_sign_match_rationals(a in dyadic(), b in dyadic()) {
        let (va, vb) = (value(&a), value(&b));
        prop_assert_eq!(a.compare(&b), va.cmp(&vb));
        let expected = match va.cmp(&BigRational::zero()) {
            Ordering::Less => -1,
            Ordering::Equal => 0,
            Ordering::Greater => 1,
        };
        let trace = a.sign_trace();
        prop_assert_eq!(trace.sign, expected);
        prop_assert!(trace.peak_coefficient <= trace.coefficient_bound);
    }

    #[test]
    fn add_and_sub_match_rationals(a in dyadic(), b in dyadic()) {
        prop_assert_eq!(value(&a.add(&b).unwrap()), value(&a) + value(&b));
        prop_assert_eq!(value(&a.sub(&b).unwrap()), value(&a) - value(&b));
    }

    #[test]
    fn dist_to_lattice_matches_rationals(x in unit_dyadic(), e in 0u64..=64) {
        let d = x.dist_to_lattice(&BigUint::from(e)).unwrap();
        let expected = lattice_distance(&value(&x), e);
        prop_assert_eq!(value(&d), expected.clone());
        let half_step = pow2(e + 1).recip();
        prop_assert!(expected <= half_step);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn add_is_commutative_and_associative(a in dyadic(), b in dyadic(), c in dyadic()) {
        prop_assert_eq!(a.add(&b).unwrap().compare(&b.add(&a).unwrap()), Ordering::Equal);
        let left = a.add(&b).unwrap().add(&c).unwrap();
        let right = a.add(&b.add(&c).unwrap()).unwrap();
        prop_assert!(left.value_eq(&right));
    }

    /// Equality with the half step happens only at midpoints of the lattice.
    #[test]
    fn half_step_only_at_midpoints(k in 0u64..64, e in 1u64..=40) {
        let k = k % (1 << e.min(6));
        let mid = SparseDyadic::from_terms([(BigUint::from(e), BigInt::from(k)), (BigUint::from(e + 1), BigInt::one())]).unwrap();
        let d = mid.dist_to_lattice(&BigUint::from(e)).unwrap();
        prop_assert_eq!(value(&d), pow2(e + 1).recip());
    }

    /// Tower-scale gaps: a huge exponent never flips the sign of a leading term.
    #[test]
    fn sign_across_huge_gaps(c1 in 1i64..50, c2 in -1000i64..1000, gap in 1_000u64..1_000_000) {
        let x = SparseDyadic::from_terms([(BigUint::from(3u32), BigInt::from(c1)), (BigUint::from(3 + gap), BigInt::from(c2))]).unwrap();
        prop_assert_eq!(x.sign(), 1);
        prop_assert_eq!(x.neg().sign(), -1);
    }
}

#[test]
fn sign_bound_on_cancelling_sums() {
    // 2^{-1} - 2^{-2} - ... - 2^{-k} = 2^{-k}: the slowest-resolving chain
    for k in 2..60u64 {
        let mut terms = vec![(BigUint::one(), BigInt::one())];
        terms.extend((2..=k).map(|f| (BigUint::from(f), BigInt::from(-1))));
        let x = SparseDyadic::from_terms(terms).unwrap();
        let t = x.sign_trace();
        assert_eq!(t.sign, 1);
        assert!(t.peak_coefficient <= t.coefficient_bound);
    }
}

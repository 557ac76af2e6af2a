mod common;

use common::{covering_oracle, pow2, q};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use thinset_core::dimension::{
    covering_number, hs_cover_cost_bracket, packing_number, packing_vs_covering_check, segments, Segment,
};
use thinset_core::falconer_set::enumerate_window;
use thinset_core::scale_chain::desk_chain;
use thinset_core::SparseDyadic;

/// Up to 12 segments with endpoints on the grid `2^{-(d+s)}`, `d + s <= 32`,
/// spread over about 16 mesh lengths.
fn family() -> impl Strategy<Value = (Vec<Segment>, i64)> {
    (1i64..=32).prop_flat_map(|d| {
        let s = (32 - d).min(6) as u64;
        let unit = 1u64 << s;
        (prop::collection::vec((0..16 * unit, 0..3 * unit), 1..=12), Just(d), Just(s))
    })
    .prop_map(|(raw, d, s)| {
        let step = pow2(d as u64 + s).recip();
        let segs = raw
            .into_iter()
            .map(|(a, len)| {
                let lo = &step * BigRational::from_integer(a.into());
                let hi = &lo + &step * BigRational::from_integer(len.into());
                Segment::new(lo, hi)
            })
            .collect();
        (segs, d)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn greedy_covering_is_optimal((set, d) in family()) {
        let got = covering_number(&set, d).to_usize().unwrap();
        prop_assert_eq!(got, covering_oracle(&set, d));
    }

    #[test]
    fn packing_at_most_double_scale_covering((set, d) in family()) {
        let grid: Vec<i64> = (d.saturating_sub(3).max(1)..=d + 3).collect();
        prop_assert!(packing_vs_covering_check(&set, &grid).pass);
        prop_assert!(packing_number(&set, d) >= BigUint::from(1u32));
    }
}

#[test]
fn desk_windows_satisfy_packing_bound() {
    let chain = desk_chain();
    for n in 1..=3 {
        let win = enumerate_window(&chain, n, &SparseDyadic::zero(), &SparseDyadic::one(), 100_000).unwrap();
        let set = segments(&win.pieces);
        let grid: Vec<i64> = (0..=30).collect();
        let report = packing_vs_covering_check(&set, &grid);
        assert!(report.pass, "F_{n}: {:?}", report.rows.iter().find(|r| !r.holds));
    }
}

#[test]
fn hs_cost_monotone_on_grid() {
    let s_grid = [q(1, 4), q(1, 2), q(1, 1), q(3, 2), q(2, 1)];
    let d_grid = [2u32, 4, 8, 16, 32].map(BigUint::from);
    let count = BigUint::from(7u32);
    let cost = |c: &BigUint, d: &BigUint, s: &BigRational| hs_cover_cost_bracket(c, d, s, 128).unwrap();
    for d in &d_grid {
        for w in s_grid.windows(2) {
            assert!(cost(&count, d, &w[1]).hi() < cost(&count, d, &w[0]).lo(), "s order at d={d}");
        }
    }
    for s in &s_grid {
        for w in d_grid.windows(2) {
            assert!(cost(&count, &w[1], s).hi() < cost(&count, &w[0], s).lo(), "d order at s={s}");
        }
        for d in &d_grid {
            assert!(cost(&count, d, s).hi() < cost(&(&count + 1u32), d, s).lo());
        }
    }
}

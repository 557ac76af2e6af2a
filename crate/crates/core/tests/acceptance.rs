//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Built with `harness = false` so the lines always print.

mod common;

use std::time::{Duration, Instant};

use common::{covering_oracle, lattice_count, lattice_distance, pow2, q, random_branching_chain, rng, value};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use thinset_core::digit_cantor::{dimension_zero_diagnostic, separation_check, verify_triple_sumset, DigitSpec, Growth, Partition};
use thinset_core::dimension::{
    covering_number, hs_cover_cost_bracket, packing_vs_covering_check, product_bound, segments, ExponentMode, GaugeParams,
    Segment,
};
use thinset_core::falconer_set::{
    binary_tree_point, dichotomy_probe, enumerate_window, localization_check, member_depth, rapid_ratio_exponents,
    rapid_sequence, ratio_bound_sequence, select_triple_indices, verify_triple_sum,
};
use thinset_core::independent_cantor::{
    all_forms, build_independent_tree, quadruple_scan, relation_scan, verify_tree, FormSchedule,
};
use thinset_core::interval::Precision;
use thinset_core::scale_chain::{build_custom_chain, build_explicit_chain_with, desk_chain};
use thinset_core::{LogConvention, RegimeTag, SparseDyadic};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn ints(v: &[i64]) -> Vec<BigRational> {
    v.iter().map(|&x| BigRational::from_integer(x.into())).collect()
}

fn triple_sumset() -> Outcome {
    let desk = desk_chain();
    let start = Instant::now();
    let fam = select_triple_indices(&desk, 3).map_err(|e| e.to_string())?;
    let report = verify_triple_sum(&desk, &fam, 3, 4).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(fam.indices == [2, 3, 4], format!("desk indices {:?}", fam.indices))?;
    check(report.passed() == 27 && report.triples.len() == 27, format!("{} of 27 triples", report.passed()))?;
    check(elapsed < Duration::from_secs(1), format!("desk run took {elapsed:?}"))?;
    let mut r = rng(0xA1);
    let mut others = 0;
    let mut failures = 0;
    for _ in 0..4 {
        let chain = random_branching_chain(&mut r);
        let fam = select_triple_indices(&chain, 3).map_err(|e| e.to_string())?;
        let rep = verify_triple_sum(&chain, &fam, 3, chain.radius_depth()).map_err(|e| e.to_string())?;
        failures += rep.triples.len() - rep.passed();
        others += 1;
    }
    check(failures == 0, format!("{failures} failing triples on random chains"))?;
    Ok(format!("desk N=[2,3,4], 27/27 triples in {elapsed:.2?}; {others} random chains, 0 failures"))
}

fn branching_counts() -> Outcome {
    let mut r = rng(0xB2);
    let mut levels = 0;
    for c in 0..10 {
        let chain = random_branching_chain(&mut r);
        for i in 1..chain.depth().min(chain.radius_depth() + 1) {
            let ei = chain.e(i).unwrap().to_u64().unwrap();
            let x = chain.e_next(i).unwrap() - chain.rho(i).unwrap();
            let x = x.to_usize().unwrap();
            let formula = (BigUint::from(2u32) << x) + 1u32;
            let interior_g = BigUint::one() << (ei as usize - 1);
            let interior = chain.branching_count(i, &interior_g).map_err(|e| e.to_string())?;
            let exact = lattice_count(&chain, i, &interior_g);
            check(interior.value(1 << 24) == Some(exact.clone()), format!("chain {c} level {i}: count mismatch"))?;
            check(exact == formula, format!("chain {c} level {i}: {exact} != 2·2^{x}+1"))?;
            let b = chain.branching_bound_exponent(i).unwrap();
            check(b.is_integer(), "bound exponent not integral")?;
            let b = b.to_integer().to_usize().unwrap();
            let lower = (BigUint::from(2u32) << b) - 1u32;
            check(exact >= lower, format!("chain {c} level {i}: below 2·2^{b}-1"))?;
            for g in [BigUint::zero(), BigUint::one() << ei as usize] {
                let got = chain.branching_count(i, &g).map_err(|e| e.to_string())?.value(1 << 24).unwrap();
                check(got == lattice_count(&chain, i, &g), format!("chain {c} level {i}: boundary mismatch"))?;
                check(got > (BigUint::one() << b), format!("chain {c} level {i}: boundary below 2^{b}+1"))?;
            }
            levels += 1;
        }
    }
    Ok(format!("10 chains, {levels} levels: interior = 2·2^(e_(i+1)-rho_i)+1 >= bound, boundary >= 2^(..)+1"))
}

fn dichotomy() -> Outcome {
    let start = Instant::now();
    let collapse = build_custom_chain(&[3, 4, 5], &ints(&[4, 5, 6]), 3).map_err(|e| e.to_string())?;
    let (zero, one) = (SparseDyadic::zero(), SparseDyadic::one());
    let probe = dichotomy_probe(&collapse, 3, &zero, &one, 100_000).map_err(|e| e.to_string())?;
    check(collapse.classify_regime().tag == RegimeTag::Collapse, "collapse chain misclassified")?;
    check(probe.non_increasing && probe.stable_count.is_some(), format!("collapse counts {:?}", probe.counts))?;
    let desk = desk_chain();
    let win = enumerate_window(&desk, 3, &zero, &one, 100_000).map_err(|e| e.to_string())?;
    let increases = win.level_counts.windows(2).filter(|w| w[1] > w[0]).count();
    check(increases >= 2, format!("branching counts {:?}", win.level_counts))?;
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(5), format!("took {elapsed:?}"))?;
    Ok(format!(
        "collapse counts {:?} stable at {:?}; branching counts {:?}; {elapsed:.2?}",
        probe.counts,
        probe.stable_count.unwrap(),
        win.level_counts
    ))
}

fn rapid_vs_slow() -> Outcome {
    let desk = desk_chain();
    for i in 1..desk.depth() {
        let (observed, law) = rapid_ratio_exponents(&desk, i).map_err(|e| e.to_string())?;
        check(observed == law, format!("level {i}: ratio exponent {observed} vs {law}"))?;
        let a = value(&rapid_sequence(&desk, i).map_err(|e| e.to_string())?.value);
        let b = value(&rapid_sequence(&desk, i + 1).map_err(|e| e.to_string())?.value);
        let k = desk.e(i).unwrap().to_u64().unwrap() * (desk.m(i).unwrap() - 1);
        check(b / a == pow2(k).recip(), format!("level {i}: exact ratio"))?;
    }
    let mut checked = 0;
    for i in 2..=desk.radius_depth() {
        let ei = desk.e(i).unwrap().to_usize().unwrap();
        for g in [BigUint::zero(), BigUint::one(), BigUint::one() << (ei - 1), BigUint::one() << ei] {
            let rep = localization_check(&desk, i, &g, i, 100_000).map_err(|e| e.to_string())?;
            check(rep.pass, format!("localization at level {i}, g numerator {g}"))?;
            checked += 1;
        }
    }
    let deeper = localization_check(&desk, 2, &BigUint::one(), 3, 100_000).map_err(|e| e.to_string())?;
    check(deeper.pass, "localization at level 2, depth 3")?;
    let (seq, decreasing) = ratio_bound_sequence(&desk).map_err(|e| e.to_string())?;
    check(decreasing, "8 q_i r_i not strictly decreasing")?;
    let exps: Vec<String> = seq.iter().map(|r| r.exponent.to_string()).collect();
    Ok(format!("ratios exact at levels 1..4; {} localization checks pass; 8q_i r_i = 2^[{}]", checked + 1, exps.join(", ")))
}

fn uncountability_skeleton() -> Outcome {
    let desk = desk_chain();
    let mut deepest = Vec::new();
    for m in 0..16u32 {
        let bits: Vec<bool> = (0..4).map(|j| m >> (3 - j) & 1 == 1).collect();
        let path = binary_tree_point(&desk, &bits, None).map_err(|e| e.to_string())?;
        check(path.steps.iter().all(|s| s.contained && s.siblings_disjoint), format!("word {m:04b}: step check"))?;
        let member = member_depth(&desk, &path.representative, path.i0 + 4).map_err(|e| e.to_string())?;
        check(member.member, format!("word {m:04b}: representative not a member"))?;
        let last = path.intervals.last().unwrap();
        deepest.push((value(&last.left), value(&last.right())));
    }
    deepest.sort();
    check(deepest.windows(2).all(|w| w[0].1 < w[1].0), "deepest intervals overlap")?;
    Ok("16 words of length 4: valid paths, disjoint deepest intervals, members".into())
}

fn explicit_chain() -> Outcome {
    let fixed = Precision { bits: 128, max_bits: 128 };
    let natural = build_explicit_chain_with(2, LogConvention::Natural, fixed).map_err(|e| e.to_string())?;
    let base2 = build_explicit_chain_with(2, LogConvention::Base2, fixed).map_err(|e| e.to_string())?;
    check(natural.m(1).unwrap() == 17, format!("natural M_1 = {}", natural.m(1).unwrap()))?;
    check(base2.m(1).unwrap() == 12, format!("base-2 M_1 = {}", base2.m(1).unwrap()))?;
    let params = GaugeParams::new(q(1, 1), q(1, 1), q(1, 2)).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for (chain, conv) in [(&natural, LogConvention::Natural), (&base2, LogConvention::Base2)] {
        for n in [2, 3] {
            let rep = product_bound(chain, n, &params, ExponentMode::Packing2, conv, fixed).map_err(|e| e.to_string())?;
            check(rep.verdict, format!("{conv} n={n}: {} > {}", rep.lhs, rep.rhs_lo))?;
            lines.push(format!("{conv} n={n} ok"));
        }
    }
    Ok(format!("M_1 = 17 (natural), 12 (base2); product bound holds for {} at 128 bits", lines.join(", ")))
}

fn random_family(r: &mut impl Rng) -> (Vec<Segment>, i64) {
    let d = r.gen_range(1..=32i64);
    let s = (32 - d).min(6) as u64;
    let unit = 1u64 << s;
    let step = pow2(d as u64 + s).recip();
    let n = r.gen_range(1..=12);
    let set = (0..n)
        .map(|_| {
            let lo = &step * BigRational::from_integer(r.gen_range(0..16 * unit).into());
            let hi = &lo + &step * BigRational::from_integer(r.gen_range(0..3 * unit).into());
            Segment::new(lo, hi)
        })
        .collect();
    (set, d)
}

fn dimension_mechanics() -> Outcome {
    let mut r = rng(0xC7);
    let mut families = 0;
    for _ in 0..40 {
        let (set, d) = random_family(&mut r);
        let grid: Vec<i64> = (1..=d + 4).collect();
        check(packing_vs_covering_check(&set, &grid).pass, "random family fails packing bound")?;
        families += 1;
    }
    let desk = desk_chain();
    for n in 1..=3 {
        let win = enumerate_window(&desk, n, &SparseDyadic::zero(), &SparseDyadic::one(), 100_000).map_err(|e| e.to_string())?;
        let grid: Vec<i64> = (0..=30).collect();
        check(packing_vs_covering_check(&segments(&win.pieces), &grid).pass, format!("desk F_{n} fails packing bound"))?;
        families += 1;
    }
    let mut oracle_cases = 0;
    for _ in 0..200 {
        let (set, d) = random_family(&mut r);
        let got = covering_number(&set, d).to_usize().unwrap();
        let best = covering_oracle(&set, d);
        check(got == best, format!("greedy {got} vs optimum {best}"))?;
        oracle_cases += 1;
    }
    let s_grid = [q(1, 4), q(1, 2), q(1, 1), q(3, 2), q(2, 1)];
    let d_grid = [2u32, 4, 8, 16, 32].map(BigUint::from);
    let count = BigUint::from(5u32);
    let cost = |c: &BigUint, d: &BigUint, s: &BigRational| hs_cover_cost_bracket(c, d, s, 128).unwrap();
    let mut comparisons = 0;
    for d in &d_grid {
        for s in &s_grid {
            check(cost(&count, d, s).hi() < cost(&(&count + 1u32), d, s).lo(), "not increasing in count")?;
            comparisons += 1;
        }
        for w in s_grid.windows(2) {
            check(cost(&count, d, &w[1]).hi() < cost(&count, d, &w[0]).lo(), "not decreasing in s")?;
            comparisons += 1;
        }
    }
    for s in &s_grid {
        for w in d_grid.windows(2) {
            check(cost(&count, &w[1], s).hi() < cost(&count, &w[0], s).lo(), "not decreasing in d")?;
            comparisons += 1;
        }
    }
    Ok(format!(
        "{families} families pass P <= N; greedy = optimum on {oracle_cases} cases; {comparisons} monotonicity checks on 5x5 grid"
    ))
}

fn independent_tree() -> Outcome {
    let forms = all_forms(2, 3);
    let tree =
        build_independent_tree(2, &[q(1, 100), q(1, 1001)], &forms, FormSchedule::All).map_err(|e| e.to_string())?;
    let v = verify_tree(&tree, &forms);
    check(v.pass, format!("tree failures: {:?}", v.failures))?;
    let leaves = tree.leaf_centers();
    check(relation_scan(&leaves, 2, 3).map_err(|e| e.to_string())?.relation.is_none(), "relation on leaves")?;
    check(quadruple_scan(&leaves).map_err(|e| e.to_string())?.is_none(), "quadruple on leaves")?;
    let mut r = rng(0xD8);
    let mut found = 0;
    for _ in 0..100 {
        let a1 = BigRational::new(BigInt::from(r.gen_range(1..1000)), BigInt::one() << r.gen_range(1..40usize));
        let a2 = BigRational::new(BigInt::from(r.gen_range(1..1000)), BigInt::one() << r.gen_range(1..40usize));
        let b = BigRational::new(BigInt::from(r.gen_range(0..1000)), BigInt::from(1000));
        let mut pts = vec![b.clone(), &b + &a1, &b + &a2, &b + &a1 + &a2];
        let noise = r.gen_range(0..5);
        for _ in 0..noise {
            pts.push(BigRational::new(BigInt::from(r.gen_range(0..1_000_000)), BigInt::from(999_983)));
        }
        pts.sort();
        pts.dedup();
        if pts.len() < 4 || a1 == a2 {
            // degenerate draw: the forced quadruple collapses
            let a2 = &a1 * BigRational::from_integer(3.into());
            pts = vec![b.clone(), &b + &a1, &b + &a2, &b + &a1 + &a2];
        }
        if quadruple_scan(&pts).map_err(|e| e.to_string())?.is_some() {
            found += 1;
        }
    }
    check(found == 100, format!("forced quadruple found in {found}/100"))?;
    Ok(format!(
        "{} form tuples verified, no relation or quadruple on leaves; forced quadruple found 100/100",
        v.tuples_checked
    ))
}

fn digit_cantor() -> Outcome {
    let spec = DigitSpec::named("square-doubling", 7, Some(Growth::Doubling), Partition::Mod3).map_err(|e| e.to_string())?;
    let sep = separation_check(&spec, 7).map_err(|e| e.to_string())?;
    check(sep.pass, "separation fails for 2^(n^2)")?;
    let sumset = verify_triple_sumset(&spec, 6).map_err(|e| e.to_string())?;
    check(sumset.pass && sumset.checked <= 729, format!("{} of {} sums", sumset.passed, sumset.checked))?;
    let s_grid = [q(1, 2), q(1, 1), q(2, 1)];
    let diag = dimension_zero_diagnostic(&spec, &s_grid, &[1, 2, 3, 4, 5, 6], Precision::default()).map_err(|e| e.to_string())?;
    check(diag.decreasing.iter().all(|(_, ok)| *ok), format!("diagnostic {:?}", diag.decreasing))?;
    let linear = DigitSpec::named("linear", 7, Some(Growth::Additive(1)), Partition::Mod3).map_err(|e| e.to_string())?;
    let lin = separation_check(&linear, 6).map_err(|e| e.to_string())?;
    check(!lin.pass, "separation should fail for g(n) = n")?;
    Ok(format!(
        "2^(n^2): separation holds, {}/{} triple sums in K, diagnostic decreasing for s in {{1/2, 1, 2}}; g(n)=n fails separation",
        sumset.passed, sumset.checked
    ))
}

fn arithmetic_core() -> Outcome {
    let mut r = rng(0xE9);
    let random = |r: &mut rand_chacha::ChaCha8Rng| {
        let n = r.gen_range(0..7);
        let terms: Vec<(u64, i64)> = (0..n).map(|_| (r.gen_range(0..=64), r.gen_range(-40..=40))).collect();
        common::dyadic_from(&terms)
    };
    let mut dist_cases = 0;
    for case in 0..10_000 {
        let a = random(&mut r);
        let b = random(&mut r);
        let (va, vb) = (value(&a), value(&b));
        check(a.compare(&b) == va.cmp(&vb), format!("case {case}: compare"))?;
        let t = a.sign_trace();
        check(t.sign as i32 == va.cmp(&BigRational::zero()) as i32, format!("case {case}: sign"))?;
        check(t.peak_coefficient <= t.coefficient_bound, format!("case {case}: coefficient bound"))?;
        if va >= BigRational::zero() && va <= BigRational::one() {
            let e = r.gen_range(0..=64u64);
            let d = a.dist_to_lattice(&BigUint::from(e)).map_err(|e| e.to_string())?;
            check(value(&d) == lattice_distance(&va, e), format!("case {case}: dist_to_lattice"))?;
            dist_cases += 1;
        }
    }
    // dist_to_lattice on guaranteed unit-interval inputs
    while dist_cases < 10_000 {
        let k = r.gen_range(0..=1u64 << 40);
        let f = r.gen_range(40..=64u64);
        let x = common::dyadic_from(&[(f, k as i64)]);
        let e = r.gen_range(0..=64u64);
        let d = x.dist_to_lattice(&BigUint::from(e)).map_err(|e| e.to_string())?;
        check(value(&d) == lattice_distance(&value(&x), e), "dist_to_lattice")?;
        dist_cases += 1;
    }
    Ok("10000 compare/sign cases and 10000 dist_to_lattice cases agree with rationals; 3·n·max|c| never exceeded".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("triple sumset on branching chains", triple_sumset),
        ("branching counts", branching_counts),
        ("dichotomy", dichotomy),
        ("rapid vs slow decay", rapid_vs_slow),
        ("uncountability skeleton", uncountability_skeleton),
        ("explicit chain", explicit_chain),
        ("dimension mechanics", dimension_mechanics),
        ("independent Cantor tree", independent_tree),
        ("digit Cantor set", digit_cantor),
        ("arithmetic core", arithmetic_core),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

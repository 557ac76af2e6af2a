//! Cantor trees in `(1, 2)` whose level-`n` intervals avoid the zero sets of
//! a list of rational linear forms, plus scans for additive quadruples and
//! small rational relations.
//!
//! Children of a node with centre `x` and half-width `ε` sit at
//! `x ∓ ε/2 + ε/(4p)` for fresh primes `p > H`. The prime `p` appears in the
//! denominator of that centre only, so a form with coefficients of height at
//! most `H` evaluated at distinct centres has `p`-adic valuation `-1` and
//! cannot vanish. Half-widths are dyadic and found by descent.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::format_rational;
use crate::report::{ratio, ratio_vec};
use crate::sparse_dyadic::SparseDyadic;

pub const MAX_TREE_DEPTH: usize = 4;
pub const MAX_TREE_ARITY: usize = 3;
pub const MAX_SCAN_POINTS: usize = 8;
pub const MAX_SCAN_HEIGHT: u64 = 4;
pub const MAX_SCAN_ARITY: usize = 4;
/// Largest `t` tried when searching for `ε_n = 2^{-t}`.
const MAX_DESCENT: u64 = 4096;
const MAX_RETRIES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndependentError {
    #[error("only {available} forms exist with height <= {height} and arity <= {arity}")]
    ExhaustedUniverse { available: usize, height: u64, arity: usize },
    #[error("precondition failed: {0}")]
    PreconditionFailure(String),
    #[error("no admissible choice at level {level}: {detail}")]
    ChoiceFailure { level: usize, detail: String },
    #[error("duplicate input point {0}")]
    DuplicateInput(String),
    #[error("search space too large: {0}")]
    SearchSpaceTooLarge(String),
    #[error("point {0} is not an exact rational")]
    NotRational(String),
}

/// `max(|p|, q)` for `p/q` in lowest terms.
pub fn height(q: &BigRational) -> BigUint {
    q.numer().magnitude().max(q.denom().magnitude()).clone()
}

/// Sort key `(height, denominator, |numerator|, sign)`, positive first.
fn coefficient_key(q: &BigRational) -> (BigUint, BigUint, BigUint, bool) {
    (height(q), q.denom().magnitude().clone(), q.numer().magnitude().clone(), q.is_negative())
}

/// Nonzero rationals of height at most `h`, in key order.
pub fn coefficients(h: u64) -> Vec<BigRational> {
    let mut out = Vec::new();
    for den in 1..=h {
        for num in 1..=h {
            if num.gcd(&den) == 1 {
                for sign in [1i64, -1] {
                    out.push(BigRational::new(BigInt::from(sign * num as i64), BigInt::from(den)));
                }
            }
        }
    }
    out.sort_by_key(coefficient_key);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalForm {
    #[serde(with = "ratio_vec")]
    pub coefficients: Vec<BigRational>,
}

impl RationalForm {
    pub fn arity(&self) -> usize {
        self.coefficients.len()
    }

    pub fn height(&self) -> BigUint {
        self.coefficients.iter().map(height).max().unwrap_or_default()
    }

    pub fn eval(&self, xs: &[&BigRational]) -> BigRational {
        self.coefficients.iter().zip(xs).map(|(q, x)| q * *x).sum()
    }

    pub fn abs_sum(&self) -> BigRational {
        self.coefficients.iter().map(|q| q.abs()).sum()
    }
}

impl std::fmt::Display for RationalForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> =
            self.coefficients.iter().enumerate().map(|(i, q)| format!("({})·x{}", format_rational(q), i + 1)).collect();
        f.write_str(&parts.join(" + "))
    }
}

/// All forms with height at most `h_max` and arity at most `m_max`,
/// ordered by (form height, arity, coefficient keys lexicographically).
pub fn all_forms(h_max: u64, m_max: usize) -> Vec<RationalForm> {
    let mut out = Vec::new();
    for h in 1..=h_max {
        let pool = coefficients(h);
        let hb = BigUint::from(h);
        for m in 1..=m_max {
            let mut idx = vec![0usize; m];
            loop {
                let coeffs: Vec<BigRational> = idx.iter().map(|&i| pool[i].clone()).collect();
                if coeffs.iter().any(|q| height(q) == hb) {
                    out.push(RationalForm { coefficients: coeffs });
                }
                // odometer over pool^m, last position fastest
                let mut pos = m;
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    idx[pos] += 1;
                    if idx[pos] < pool.len() {
                        break;
                    }
                    idx[pos] = 0;
                }
                if idx.iter().all(|&i| i == 0) {
                    break;
                }
            }
        }
    }
    out
}

/// The first `count` forms of [`all_forms`].
pub fn enumerate_forms(h_max: u64, m_max: usize, count: usize) -> Result<Vec<RationalForm>, IndependentError> {
    let mut all = all_forms(h_max, m_max);
    if all.len() < count {
        return Err(IndependentError::ExhaustedUniverse { available: all.len(), height: h_max, arity: m_max });
    }
    all.truncate(count);
    Ok(all)
}

/// Which forms each level must avoid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormSchedule {
    /// Every supplied form at every level.
    #[default]
    All,
    /// Forms `1..=n` at level `n`.
    Cumulative,
}

impl FormSchedule {
    fn active<'a>(&self, forms: &'a [RationalForm], level: usize) -> &'a [RationalForm] {
        match self {
            Self::All => forms,
            Self::Cumulative => &forms[..level.min(forms.len())],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub word: String,
    #[serde(with = "ratio")]
    pub center: BigRational,
    #[serde(with = "ratio")]
    pub lo: BigRational,
    #[serde(with = "ratio")]
    pub hi: BigRational,
    /// Prime used to place the centre; absent at the root.
    pub prime: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CantorTree {
    pub depth: usize,
    #[serde(with = "ratio_vec")]
    pub rho: Vec<BigRational>,
    /// `ε_n`, the half-width at level `n` (index 0 is the root).
    #[serde(with = "ratio_vec")]
    pub epsilon: Vec<BigRational>,
    pub schedule: FormSchedule,
    /// Nodes grouped by level, words in lexicographic order.
    pub levels: Vec<Vec<TreeNode>>,
}

impl CantorTree {
    pub fn leaves(&self) -> &[TreeNode] {
        self.levels.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn leaf_centers(&self) -> Vec<BigRational> {
        self.leaves().iter().map(|n| n.center.clone()).collect()
    }
}

fn primes_above(floor: u64) -> impl Iterator<Item = u64> {
    (floor.max(2) + 1..).filter(|&n| n > 1 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0))
}

/// Visits every ordered tuple of `m` pairwise distinct indices below `n`.
fn for_each_distinct_tuple(n: usize, m: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn rec(n: usize, m: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == m {
            return f(cur);
        }
        for i in 0..n {
            if !cur.contains(&i) {
                cur.push(i);
                if !rec(n, m, cur, f) {
                    return false;
                }
                cur.pop();
            }
        }
        true
    }
    rec(n, m, &mut Vec::with_capacity(m), f)
}

fn pow2_neg(t: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << t as usize)
}

/// Builds the tree level by level. `rho[n-1]` bounds the diameter at level
/// `n`; it must drop by more than a factor 10 per level.
pub fn build_independent_tree(
    n_max: usize,
    rho: &[BigRational],
    forms: &[RationalForm],
    schedule: FormSchedule,
) -> Result<CantorTree, IndependentError> {
    if n_max > MAX_TREE_DEPTH {
        return Err(IndependentError::PreconditionFailure(format!("depth {n_max} > {MAX_TREE_DEPTH}")));
    }
    if rho.len() < n_max {
        return Err(IndependentError::PreconditionFailure(format!("need {n_max} diameter bounds, got {}", rho.len())));
    }
    if rho.iter().any(|r| !r.is_positive()) {
        return Err(IndependentError::PreconditionFailure("diameter bounds must be positive".into()));
    }
    let ten = BigRational::from_integer(BigInt::from(10));
    for n in 1..n_max {
        if rho[n] >= &rho[n - 1] / &ten {
            return Err(IndependentError::PreconditionFailure(format!("rho_{} >= rho_{}/10", n + 1, n)));
        }
    }
    if let Some(f) = forms.iter().find(|f| f.arity() > MAX_TREE_ARITY || f.arity() == 0) {
        return Err(IndependentError::PreconditionFailure(format!("form arity {} outside 1..={MAX_TREE_ARITY}", f.arity())));
    }
    let h_max = forms.iter().map(|f| f.height()).max().unwrap_or_else(BigUint::one);
    let h_max = h_max.to_u64().unwrap_or(u64::MAX);

    let root_center = BigRational::new(3.into(), 2.into());
    let root_eps = BigRational::new(1.into(), 4.into());
    let root = TreeNode {
        word: String::new(),
        lo: &root_center - &root_eps,
        hi: &root_center + &root_eps,
        center: root_center,
        prime: None,
    };
    let mut levels = vec![vec![root]];
    let mut epsilon = vec![root_eps];
    let mut primes = primes_above(h_max);
    for level in 1..=n_max {
        let parent_eps = epsilon[level - 1].clone();
        let active = schedule.active(forms, level);
        let mut attempt = 0;
        let (nodes, eps) = loop {
            attempt += 1;
            let mut centers = Vec::new();
            for parent in &levels[level - 1] {
                for (bit, sign) in [('0', -1i64), ('1', 1)] {
                    let p = primes.next().expect("infinitely many primes");
                    let shift = &parent_eps / BigRational::from_integer(BigInt::from(2 * sign))
                        + &parent_eps / BigRational::from_integer(BigInt::from(4 * p));
                    centers.push((format!("{}{bit}", parent.word), &parent.center + shift, p, parent.clone()));
                }
            }
            let xs: Vec<BigRational> = centers.iter().map(|c| c.1.clone()).collect();
            match choose_epsilon(&xs, &centers.iter().map(|c| c.3.clone()).collect::<Vec<_>>(), &rho[level - 1], active, &parent_eps) {
                Ok(t) => {
                    let eps = pow2_neg(t);
                    let nodes = centers
                        .into_iter()
                        .map(|(word, center, p, _)| TreeNode {
                            word,
                            lo: &center - &eps,
                            hi: &center + &eps,
                            center,
                            prime: Some(p),
                        })
                        .collect::<Vec<_>>();
                    break (nodes, eps);
                }
                Err(_) if attempt < MAX_RETRIES => continue,
                Err(detail) => return Err(IndependentError::ChoiceFailure { level, detail }),
            }
        };
        levels.push(nodes);
        epsilon.push(eps);
    }
    Ok(CantorTree { depth: n_max, rho: rho[..n_max].to_vec(), epsilon, schedule, levels })
}

/// Smallest `t` such that `ε = 2^{-t}` satisfies: distinct centres more than
/// `4ε` apart, each interval inside its parent's interior, `2ε <= ρ`, and
/// `|L(x)| > ε Σ|q_i|` for every active form on distinct centres.
fn choose_epsilon(
    xs: &[BigRational],
    parents: &[TreeNode],
    rho: &BigRational,
    forms: &[RationalForm],
    parent_eps: &BigRational,
) -> Result<u64, String> {
    // the form condition needs min |L(x)| / Σ|q_i| over all tuples
    let mut min_ratio: Option<BigRational> = None;
    let mut zero = None;
    for form in forms {
        let s = form.abs_sum();
        for_each_distinct_tuple(xs.len(), form.arity(), &mut |t| {
            let args: Vec<&BigRational> = t.iter().map(|&i| &xs[i]).collect();
            let v = form.eval(&args).abs();
            if v.is_zero() {
                zero = Some(format!("{form} vanishes at {t:?}"));
                return false;
            }
            let r = v / &s;
            if min_ratio.as_ref().is_none_or(|m| &r < m) {
                min_ratio = Some(r);
            }
            true
        });
        if let Some(z) = zero.take() {
            return Err(z);
        }
    }
    let mut sorted = xs.to_vec();
    sorted.sort();
    let min_gap = sorted.windows(2).map(|w| &w[1] - &w[0]).min();
    let four = BigRational::from_integer(BigInt::from(4));
    let two = BigRational::from_integer(BigInt::from(2));
    let start = (parent_eps.recip().to_integer().bits()).max(1);
    for t in start..=MAX_DESCENT {
        let eps = pow2_neg(t);
        if let Some(g) = &min_gap {
            if g <= &(&four * &eps) {
                continue;
            }
        }
        if &two * &eps > *rho {
            continue;
        }
        if let Some(m) = &min_ratio {
            if m <= &eps {
                continue;
            }
        }
        let inside = xs.iter().zip(parents).all(|(x, p)| x - &eps > p.lo && x + &eps < p.hi);
        if !inside {
            continue;
        }
        return Ok(t);
    }
    Err(format!("no ε = 2^-t with t <= {MAX_DESCENT}"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeVerification {
    pub containment: bool,
    pub disjoint: bool,
    pub diameters: bool,
    pub forms_nonvanishing: bool,
    pub tuples_checked: u64,
    pub failures: Vec<String>,
    pub pass: bool,
}

/// Re-checks every tree invariant from the stored endpoints; form
/// nonvanishing is decided by interval evaluation over the boxes.
pub fn verify_tree(tree: &CantorTree, forms: &[RationalForm]) -> TreeVerification {
    let mut failures = Vec::new();
    let one = BigRational::one();
    let two = BigRational::from_integer(BigInt::from(2));
    let root = &tree.levels[0][0];
    let mut containment = root.lo > one && root.hi < two;
    let mut disjoint = true;
    let mut diameters = true;
    for level in 1..tree.levels.len() {
        let parents: BTreeMap<&str, &TreeNode> = tree.levels[level - 1].iter().map(|n| (n.word.as_str(), n)).collect();
        for node in &tree.levels[level] {
            let parent = parents[&node.word[..node.word.len() - 1]];
            if !(node.lo > parent.lo && node.hi < parent.hi) {
                containment = false;
                failures.push(format!("I_{} not inside I_{}", node.word, parent.word));
            }
            if &node.hi - &node.lo > tree.rho[level - 1] {
                diameters = false;
                failures.push(format!("diam I_{} > rho_{level}", node.word));
            }
        }
        let mut sorted: Vec<&TreeNode> = tree.levels[level].iter().collect();
        sorted.sort_by(|a, b| a.lo.cmp(&b.lo));
        for w in sorted.windows(2) {
            if w[0].hi >= w[1].lo {
                disjoint = false;
                failures.push(format!("I_{} meets I_{}", w[0].word, w[1].word));
            }
        }
    }
    let mut forms_nonvanishing = true;
    let mut tuples_checked = 0u64;
    for level in 1..tree.levels.len() {
        let nodes = &tree.levels[level];
        for form in tree.schedule.active(forms, level) {
            for_each_distinct_tuple(nodes.len(), form.arity(), &mut |t| {
                tuples_checked += 1;
                let (mut lo, mut hi) = (BigRational::zero(), BigRational::zero());
                for (q, &i) in form.coefficients.iter().zip(t) {
                    let (a, b) = (q * &nodes[i].lo, q * &nodes[i].hi);
                    if a <= b {
                        lo += a;
                        hi += b;
                    } else {
                        lo += b;
                        hi += a;
                    }
                }
                if !lo.is_positive() && !hi.is_negative() {
                    forms_nonvanishing = false;
                    let words: Vec<&str> = t.iter().map(|&i| nodes[i].word.as_str()).collect();
                    failures.push(format!("0 ∈ ({form})({words:?})"));
                }
                true
            });
        }
    }
    let pass = containment && disjoint && diameters && forms_nonvanishing;
    TreeVerification { containment, disjoint, diameters, forms_nonvanishing, tuples_checked, failures, pass }
}

/// Finds distinct `p < q < r < s` with `p + s = q + r`, the first in
/// lexicographic order, by grouping pair sums.
pub fn quadruple_scan(points: &[BigRational]) -> Result<Option<[BigRational; 4]>, IndependentError> {
    let mut sorted = points.to_vec();
    sorted.sort();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(IndependentError::DuplicateInput(format_rational(&w[0])));
        }
    }
    let n = sorted.len();
    let mut by_sum: HashMap<BigRational, Vec<(usize, usize)>> = HashMap::new();
    for i in 0..n {
        for j in i + 1..n {
            by_sum.entry(&sorted[i] + &sorted[j]).or_default().push((i, j));
        }
    }
    let mut best: Option<[usize; 4]> = None;
    for pairs in by_sum.values() {
        for a in 0..pairs.len() {
            for b in a + 1..pairs.len() {
                let (i, j) = pairs[a];
                let (k, l) = pairs[b];
                // the outer pair has the smallest element
                let cand = if i < k { [i, k, l, j] } else { [k, i, j, l] };
                if best.is_none_or(|b| cand < b) {
                    best = Some(cand);
                }
            }
        }
    }
    Ok(best.map(|b| b.map(|i| sorted[i].clone())))
}

/// [`quadruple_scan`] on dyadic inputs.
pub fn quadruple_scan_dyadic(points: &[SparseDyadic]) -> Result<Option<[BigRational; 4]>, IndependentError> {
    let qs = points
        .iter()
        .map(|p| p.to_rational().map_err(|_| IndependentError::NotRational(p.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    quadruple_scan(&qs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub indices: Vec<usize>,
    #[serde(with = "ratio_vec")]
    pub coefficients: Vec<BigRational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationScan {
    pub relation: Option<Relation>,
    /// Number of (point subset, leading coefficients) combinations examined.
    pub tuples_checked: u64,
}

/// Searches for `Σ q_i y_i = 0` with nonzero `q_i` of height at most `h_max`
/// over subsets of at most `m_max` distinct points. The last coefficient is
/// solved for rather than enumerated. A found relation is rescaled to
/// coprime integers when that keeps the height within bounds.
pub fn relation_scan(points: &[BigRational], h_max: u64, m_max: usize) -> Result<RelationScan, IndependentError> {
    if points.len() > MAX_SCAN_POINTS || h_max > MAX_SCAN_HEIGHT || m_max > MAX_SCAN_ARITY {
        return Err(IndependentError::SearchSpaceTooLarge(format!(
            "{} points, height {h_max}, arity {m_max} (limits {MAX_SCAN_POINTS}, {MAX_SCAN_HEIGHT}, {MAX_SCAN_ARITY})",
            points.len()
        )));
    }
    let mut sorted = points.to_vec();
    sorted.sort();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(IndependentError::DuplicateInput(format_rational(&w[0])));
    }
    let pool = coefficients(h_max);
    let hb = BigUint::from(h_max);
    let mut checked = 0u64;
    for m in 1..=m_max.min(points.len()) {
        for subset in combinations(points.len(), m) {
            let last = &points[subset[m - 1]];
            let mut idx = vec![0usize; m - 1];
            loop {
                checked += 1;
                let partial: BigRational = idx.iter().zip(&subset).map(|(&c, &p)| &pool[c] * &points[p]).sum();
                let found = if last.is_zero() {
                    partial.is_zero().then(BigRational::one)
                } else {
                    let q = -partial / last;
                    (!q.is_zero() && height(&q) <= hb).then_some(q)
                };
                if let Some(q) = found {
                    let mut coeffs: Vec<BigRational> = idx.iter().map(|&c| pool[c].clone()).collect();
                    coeffs.push(q);
                    let relation = Relation { indices: subset.clone(), coefficients: normalize(coeffs, &hb) };
                    return Ok(RelationScan { relation: Some(relation), tuples_checked: checked });
                }
                if !advance(&mut idx, pool.len()) {
                    break;
                }
            }
        }
    }
    Ok(RelationScan { relation: None, tuples_checked: checked })
}

fn advance(idx: &mut [usize], base: usize) -> bool {
    for pos in (0..idx.len()).rev() {
        idx[pos] += 1;
        if idx[pos] < base {
            return true;
        }
        idx[pos] = 0;
    }
    false
}

fn combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..m).collect();
    if m > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = m;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - m + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..m {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Scales to coprime integers with a positive first entry, if the height
/// stays within `h`.
fn normalize(coeffs: Vec<BigRational>, h: &BigUint) -> Vec<BigRational> {
    let l = coeffs.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = coeffs.iter().map(|q| (q * BigRational::from_integer(l.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    let sign = if ints[0].is_negative() { -BigInt::one() } else { BigInt::one() };
    let scaled: Vec<BigInt> = ints.iter().map(|v| v / &g * &sign).collect();
    if scaled.iter().all(|v| v.magnitude() <= h) {
        scaled.into_iter().map(BigRational::from_integer).collect()
    } else {
        coeffs
    }
}

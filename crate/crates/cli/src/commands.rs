//! One function per subcommand. Each returns the verdict, the JSON result
//! and any CSV tables to write next to it.

use num_bigint::BigUint;
use num_rational::BigRational;
use serde_json::{json, Value};
use thinset_core::digit_cantor::{dimension_zero_diagnostic, separation_check, tau_bound, verify_triple_sumset, DigitSpec};
use thinset_core::dimension::{dimension_report, hs_cover_cost, product_bound, DimensionSource, ExponentMode, GaugeParams};
use thinset_core::falconer_set::{
    binary_tree_point, dichotomy_probe, enumerate_window, member_depth, parse_bits, select_triple_indices,
    verify_triple_sum, TripleSumFamily,
};
use thinset_core::independent_cantor::{
    build_independent_tree, enumerate_forms, all_forms, quadruple_scan, relation_scan, verify_tree, MAX_SCAN_ARITY,
    MAX_SCAN_HEIGHT, MAX_SCAN_POINTS,
};
use thinset_core::interval::{format_rational, Precision};
use thinset_core::report::Table;
use thinset_core::scale_chain::build_explicit_chain_with;
use thinset_core::{LogConvention, ScaleChain, SparseDyadic};

use crate::config::{point, rational, rationals, ExperimentConfig, Kind, WindowDoc};
use crate::CliError;

pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub prec: Precision,
    pub cap: usize,
    pub conv: LogConvention,
}

pub struct Outcome {
    pub pass: bool,
    pub result: Value,
    /// `(file stem suffix, csv text)`
    pub tables: Vec<(String, String)>,
}

fn err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn to_json(v: &impl serde::Serialize) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

impl Ctx {
    fn chain(&self) -> Result<ScaleChain, CliError> {
        match self.cfg.kind {
            Kind::Falconer => {
                let doc = self.cfg.chain.as_ref().ok_or_else(|| err("falconer config needs a 'chain' section"))?;
                doc.build().map_err(err)
            }
            Kind::Explicit => {
                let depth = self.cfg.explicit.as_ref().ok_or_else(|| err("explicit config needs an 'explicit' section"))?.depth;
                build_explicit_chain_with(depth, self.conv, self.prec).map_err(err)
            }
            k => Err(err(format!("this command needs a falconer or explicit config, got '{}'", k.name()))),
        }
    }

    fn digit(&self) -> Result<DigitSpec, CliError> {
        match (&self.cfg.kind, &self.cfg.digit) {
            (Kind::Digit, Some(doc)) => doc.build().map_err(err),
            (Kind::Digit, None) => Err(err("digit config needs a 'digit' section")),
            (k, _) => Err(err(format!("this command needs a digit config, got '{}'", k.name()))),
        }
    }

    fn window(&self, doc: Option<&WindowDoc>, default_n: usize) -> Result<(usize, SparseDyadic, SparseDyadic), CliError> {
        let doc = doc.cloned().unwrap_or_default();
        let lo = point(doc.lo.as_deref().unwrap_or("0"))?;
        let hi = point(doc.hi.as_deref().unwrap_or("1"))?;
        Ok((doc.n.unwrap_or(default_n), lo, hi))
    }
}

pub fn chain(ctx: &Ctx) -> Result<Outcome, CliError> {
    let chain = ctx.chain()?;
    let mut levels = Vec::new();
    for i in 1..=chain.depth() {
        let mut row = json!({ "level": i, "e": chain.e(i).map_err(err)?.to_string() });
        if let Ok(rho) = chain.rho(i) {
            row["rho"] = json!(rho.to_string());
            row["phi"] = json!(format_rational(chain.phi(i).map_err(err)?));
        }
        if let Ok(m) = chain.m(i) {
            row["M"] = json!(m);
        }
        if i < chain.depth() && chain.rho(i).is_ok() {
            row["branching_interior"] = json!(chain.branching_count(i, &BigUint::from(1u32)).map_err(err)?.to_string());
            row["branching_boundary"] = json!(chain.branching_count(i, &BigUint::from(0u32)).map_err(err)?.to_string());
            row["bound_exponent"] = json!(format_rational(&chain.branching_bound_exponent(i).map_err(err)?));
        }
        levels.push(row);
    }
    let mut result = json!({
        "chain": to_json(&chain),
        "regime": to_json(&chain.classify_regime()),
        "levels": levels,
    });
    let mut pass = true;
    if ctx.cfg.kind == Kind::Explicit {
        let params = GaugeParams::new(rational("1")?, rational("1")?, rational("1/2")?).map_err(err)?;
        let mut rows = Vec::new();
        for n in 2..=chain.depth() + 1 {
            let r = product_bound(&chain, n, &params, ExponentMode::Packing2, ctx.conv, ctx.prec).map_err(err)?;
            pass &= r.verdict;
            rows.push(to_json(&r));
        }
        result["product_bound"] = json!(rows);
    }
    Ok(Outcome { pass, result, tables: vec![] })
}

pub fn member(ctx: &Ctx) -> Result<Outcome, CliError> {
    let chain = ctx.chain()?;
    let doc = ctx.cfg.member.as_ref().ok_or_else(|| err("member needs a 'member' section with 'x'"))?;
    let x = point(&doc.x)?;
    let n = doc.n.unwrap_or(chain.radius_depth());
    let m = member_depth(&chain, &x, n).map_err(err)?;
    Ok(Outcome { pass: m.member, result: json!({ "x": to_json(&x), "n": n, "membership": to_json(&m) }), tables: vec![] })
}

pub fn triple(ctx: &Ctx) -> Result<Outcome, CliError> {
    let chain = ctx.chain()?;
    let doc = ctx.cfg.triple.clone().unwrap_or_default();
    let k = doc.k.unwrap_or(3);
    let family = match &doc.indices {
        Some(idx) => TripleSumFamily::from_indices(&chain, idx).map_err(err)?,
        None => select_triple_indices(&chain, k).map_err(err)?,
    };
    let depth = doc.depth.unwrap_or(chain.radius_depth());
    let report = verify_triple_sum(&chain, &family, k, depth).map_err(err)?;
    let pass = report.membership_pass && report.invariant_pass;
    let result = json!({
        "indices": family.indices,
        "elements": to_json(&family.elements),
        "passed": report.passed(),
        "total": report.triples.len(),
        "report": to_json(&report),
    });
    Ok(Outcome { pass, result, tables: vec![] })
}

pub fn tree(ctx: &Ctx) -> Result<Outcome, CliError> {
    let chain = ctx.chain()?;
    let doc = ctx.cfg.tree.as_ref().ok_or_else(|| err("tree needs a 'tree' section with 'bits'"))?;
    let bits = parse_bits(&doc.bits).map_err(err)?;
    let path = binary_tree_point(&chain, &bits, doc.start).map_err(err)?;
    let pass = path.steps.iter().all(|s| s.contained && s.siblings_disjoint);
    Ok(Outcome { pass, result: to_json(&path), tables: vec![] })
}

fn pieces_table(pieces: &[(BigRational, BigRational)]) -> Table {
    let mut t = Table::new(vec!["lo".into(), "hi".into()]);
    for (a, b) in pieces {
        t.push(vec![format_rational(a), format_rational(b)]);
    }
    t
}

pub fn window(ctx: &Ctx) -> Result<Outcome, CliError> {
    let chain = ctx.chain()?;
    let (n, lo, hi) = ctx.window(ctx.cfg.window.as_ref(), chain.radius_depth().min(2))?;
    let win = enumerate_window(&chain, n, &lo, &hi, ctx.cap).map_err(err)?;
    let table = pieces_table(&win.pieces);
    let result = json!({
        "depth": win.depth,
        "level_counts": win.level_counts,
        "intervals": to_json(&win.intervals),
        "pieces": table.to_json(),
    });
    Ok(Outcome { pass: true, result, tables: vec![("pieces".into(), table.to_csv())] })
}

pub fn dichotomy(ctx: &Ctx) -> Result<Outcome, CliError> {
    let chain = ctx.chain()?;
    let (n, lo, hi) = ctx.window(ctx.cfg.dichotomy.as_ref(), chain.radius_depth().min(3))?;
    let r = dichotomy_probe(&chain, n, &lo, &hi, ctx.cap).map_err(err)?;
    Ok(Outcome { pass: r.non_increasing, result: to_json(&r), tables: vec![] })
}

fn s_grid(v: &Option<Vec<String>>) -> Result<Vec<BigRational>, CliError> {
    match v {
        Some(v) => rationals(v),
        None => rationals(&["1/2".into(), "1".into(), "2".into()]),
    }
}

pub fn dim(ctx: &Ctx) -> Result<Outcome, CliError> {
    let doc = ctx.cfg.dim.clone().unwrap_or_default();
    let s = s_grid(&doc.s)?;
    let table = match ctx.cfg.kind {
        Kind::Digit => {
            let spec = ctx.digit()?;
            let n = doc.n.unwrap_or_else(|| (1..spec.n_max().min(7)).collect());
            dimension_report(&DimensionSource::Digit { spec: &spec }, &s, &n, ctx.prec).map_err(err)?
        }
        _ => {
            let chain = ctx.chain()?;
            let params = match &doc.gauge {
                Some(g) => GaugeParams::new(rational(&g.s)?, rational(&g.epsilon)?, rational(&g.c)?).map_err(err)?,
                None => GaugeParams::new(rational("1")?, rational("1/2")?, rational("1")?).map_err(err)?,
            };
            let n = doc.n.unwrap_or_else(|| (1..=chain.radius_depth().min(3)).collect());
            let source = DimensionSource::Chain { chain: &chain, params: &params, conv: ctx.conv, cap: ctx.cap };
            dimension_report(&source, &s, &n, ctx.prec).map_err(err)?
        }
    };
    Ok(Outcome { pass: true, result: table.to_json(), tables: vec![("table".into(), table.to_csv())] })
}

pub fn cantor_indep(ctx: &Ctx) -> Result<Outcome, CliError> {
    if ctx.cfg.kind != Kind::Independent {
        return Err(err(format!("cantor-indep needs an independent config, got '{}'", ctx.cfg.kind.name())));
    }
    let doc = ctx.cfg.independent.as_ref().ok_or_else(|| err("independent config needs an 'independent' section"))?;
    let forms = match doc.forms {
        Some(count) => enumerate_forms(doc.height, doc.m_max, count).map_err(err)?,
        None => all_forms(doc.height, doc.m_max),
    };
    let rho = rationals(&doc.rho)?;
    let tree = build_independent_tree(doc.n_max, &rho, &forms, doc.schedule).map_err(err)?;
    let verification = verify_tree(&tree, &forms);
    let leaves = tree.leaf_centers();
    let quad = quadruple_scan(&leaves).map_err(err)?;
    let (h, m) = (doc.height.min(MAX_SCAN_HEIGHT), doc.m_max.min(MAX_SCAN_ARITY));
    let relation = if leaves.len() <= MAX_SCAN_POINTS {
        Some(relation_scan(&leaves, h, m).map_err(err)?)
    } else {
        None
    };
    let mut gauge = Vec::new();
    for (n, eps) in tree.epsilon.iter().enumerate().skip(1) {
        // level-n intervals have diameter 2ε_n = 2^{-d}
        let d = BigUint::from(eps.denom().bits() - 2);
        if d < BigUint::from(2u32) {
            continue;
        }
        for s in [rational("1/2")?, rational("1")?, rational("2")?] {
            let cost = hs_cover_cost(&(BigUint::from(1u32) << n), &d, &s, ctx.prec.bits).map_err(err)?;
            gauge.push(json!({ "n": n, "s": format_rational(&s), "cost": to_json(&cost) }));
        }
    }
    let mut result = json!({
        "forms": forms.len(),
        "tree": to_json(&tree),
        "verification": to_json(&verification),
        "leaf_quadruple": quad.as_ref().map(|q| q.iter().map(format_rational).collect::<Vec<_>>()),
        "leaf_relation_scan": relation.as_ref().map(to_json),
        "gauge_costs": gauge,
    });
    if relation.is_none() {
        result["leaf_relation_scan_skipped"] = json!(format!("{} leaves exceed the {MAX_SCAN_POINTS}-point limit", leaves.len()));
    }
    if !doc.scan_points.is_empty() {
        let pts = rationals(&doc.scan_points)?;
        let quad = quadruple_scan(&pts).map_err(err)?;
        let rel = relation_scan(&pts, h, m).map_err(err)?;
        result["scan"] = json!({
            "quadruple": quad.map(|q| q.iter().map(format_rational).collect::<Vec<_>>()),
            "relation": to_json(&rel),
        });
    }
    let pass = verification.pass && quad.is_none() && relation.is_none_or(|r| r.relation.is_none());
    Ok(Outcome { pass, result, tables: vec![] })
}

pub fn cantor_digit(ctx: &Ctx) -> Result<Outcome, CliError> {
    let spec = ctx.digit()?;
    let doc = ctx.cfg.cantor_digit.clone().unwrap_or_default();
    let sep = separation_check(&spec, doc.separation_depth.unwrap_or(spec.n_max())).map_err(err)?;
    let sumset = verify_triple_sumset(&spec, doc.index_cap.unwrap_or(spec.n_max().min(9))).map_err(err)?;
    let s = s_grid(&doc.s)?;
    let n = doc.n.unwrap_or_else(|| (1..spec.n_max().min(9)).collect());
    let diag = dimension_zero_diagnostic(&spec, &s, &n, ctx.prec).map_err(err)?;
    let taus = (1..spec.n_max()).map(|k| tau_bound(&spec, k).map(|t| to_json(&t))).collect::<Result<Vec<_>, _>>().map_err(err)?;
    let pass = sep.pass && sumset.pass;
    let result = json!({
        "schedule": spec.schedule_name(),
        "N_max": spec.n_max(),
        "separation": to_json(&sep),
        "sumset": to_json(&sumset),
        "tau_bounds": taus,
        "diagnostic": to_json(&diag),
    });
    Ok(Outcome { pass, result, tables: vec![("diagnostic".into(), diag.to_table().to_csv())] })
}

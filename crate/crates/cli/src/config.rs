//! Experiment configuration files.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde::Deserialize;
use thinset_core::digit_cantor::DigitSpecDoc;
use thinset_core::independent_cantor::FormSchedule;
use thinset_core::interval::parse_rational;
use thinset_core::scale_chain::ChainDoc;
use thinset_core::{LogConvention, SparseDyadic};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Falconer,
    Explicit,
    Digit,
    Independent,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Falconer => "falconer",
            Self::Explicit => "explicit",
            Self::Digit => "digit",
            Self::Independent => "independent",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub chain: Option<ChainDoc>,
    pub explicit: Option<ExplicitDoc>,
    pub digit: Option<DigitSpecDoc>,
    pub independent: Option<IndependentDoc>,
    pub member: Option<MemberDoc>,
    pub triple: Option<TripleDoc>,
    pub tree: Option<TreeDoc>,
    pub window: Option<WindowDoc>,
    pub dichotomy: Option<WindowDoc>,
    pub dim: Option<DimDoc>,
    pub cantor_digit: Option<CantorDigitDoc>,
    pub precision_bits: Option<u64>,
    pub cap: Option<usize>,
    pub log_convention: Option<LogConvention>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitDoc {
    pub depth: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndependentDoc {
    pub n_max: usize,
    pub rho: Vec<String>,
    #[serde(rename = "H")]
    pub height: u64,
    pub m_max: usize,
    /// Use only the first `forms` forms of the enumeration.
    pub forms: Option<usize>,
    #[serde(default)]
    pub schedule: FormSchedule,
    /// Extra points to scan for quadruples and relations.
    #[serde(default)]
    pub scan_points: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberDoc {
    pub x: String,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleDoc {
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub depth: Option<usize>,
    /// Explicit indices instead of the greedy selection.
    pub indices: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDoc {
    pub bits: String,
    pub start: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowDoc {
    pub n: Option<usize>,
    pub lo: Option<String>,
    pub hi: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimDoc {
    pub s: Option<Vec<String>>,
    pub n: Option<Vec<usize>>,
    pub gauge: Option<GaugeDoc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeDoc {
    pub s: String,
    pub epsilon: String,
    #[serde(rename = "C")]
    pub c: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CantorDigitDoc {
    pub separation_depth: Option<usize>,
    pub index_cap: Option<usize>,
    pub s: Option<Vec<String>>,
    pub n: Option<Vec<usize>>,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
}

pub fn rational(s: &str) -> Result<BigRational, CliError> {
    parse_rational(s.trim()).ok_or_else(|| CliError::Config(format!("bad rational '{s}'")))
}

pub fn rationals(v: &[String]) -> Result<Vec<BigRational>, CliError> {
    v.iter().map(|s| rational(s)).collect()
}

/// Parses a point such as `2^-3 + 2^-12 - 5*2^-70`, `3/8` or `1`.
pub fn point(s: &str) -> Result<SparseDyadic, CliError> {
    let bad = || CliError::Config(format!("bad point '{s}'"));
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(bad());
    }
    if !compact.contains('^') {
        let q = rational(&compact)?;
        return SparseDyadic::from_rational(&q).ok_or_else(bad);
    }
    // split before every sign that is not part of an exponent
    let mut terms = Vec::new();
    let mut cur = String::new();
    for (i, ch) in compact.char_indices() {
        let after_caret = compact[..i].ends_with('^');
        if (ch == '+' || ch == '-') && i > 0 && !after_caret {
            terms.push(std::mem::take(&mut cur));
        }
        cur.push(ch);
    }
    terms.push(cur);
    let mut acc = SparseDyadic::zero();
    for t in terms {
        let (sign, body) = match t.strip_prefix('-') {
            Some(rest) => (-1, rest.to_string()),
            None => (1, t.trim_start_matches('+').to_string()),
        };
        let (coef, power) = match body.split_once('*') {
            Some((c, p)) => (c.parse::<BigInt>().map_err(|_| bad())?, p.to_string()),
            None if body.starts_with("2^") => (BigInt::from(1), body),
            None => (body.parse::<BigInt>().map_err(|_| bad())?, "2^-0".to_string()),
        };
        let f: BigUint = power.strip_prefix("2^-").ok_or_else(bad)?.parse().map_err(|_| bad())?;
        acc = acc.add(&SparseDyadic::term(f, coef * sign)).map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_syntax() {
        let x = point("2^-3 + 2^-12 - 5*2^-70").unwrap();
        assert_eq!(x.len(), 3);
        assert_eq!(point("3/8").unwrap().compare(&point("3*2^-3").unwrap()), std::cmp::Ordering::Equal);
        assert!(point("1/3").is_err());
        assert!(point("2^3").is_err());
        assert!(point("").is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(parse_config(r#"{"kind":"falconer","bogus":1}"#).is_err());
        let c = parse_config(r#"{"kind":"explicit","explicit":{"depth":2}}"#).unwrap();
        assert_eq!(c.kind, Kind::Explicit);
    }
}

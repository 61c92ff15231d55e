//! TOML files for laws, couplings, divisor test sets and query batches.
//!
//! ```toml
//! v0 = 0
//! span = 1
//! probs = [[0, "1/2"], [1, "3/10"], [2, "1/5"]]
//! ```
//!
//! A coupling file adds `mu` and `tau` lists of the same shape.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::coupling::{CouplingSpec, MuSequence, TauSequence};
use crate::divisorsets::{DivisorTestSet, TestSetKind};
use crate::lattice::{LatticeLaw, Precision};
use crate::rational::{parse_rational, to_f64};
use crate::{DivisibilityQuery, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LawFile {
    v0: i64,
    span: u64,
    /// `"float"` marks probabilities that are exact binary `f64` values and
    /// sum to one only within the float tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    precision: Option<String>,
    probs: Vec<(i64, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingFile {
    v0: i64,
    span: u64,
    probs: Vec<(i64, String)>,
    mu: Vec<(i64, String)>,
    tau: Vec<(i64, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryFile {
    queries: Vec<(u64, u64, u64)>,
}

fn de<T: for<'a> Deserialize<'a>>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn ser<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("plain tables always serialize")
}

fn parse_entries(entries: &[(i64, String)]) -> Result<Vec<(i64, BigRational)>> {
    entries
        .iter()
        .map(|(k, s)| Ok((*k, parse_rational(s)?)))
        .collect()
}

fn render_entries<'a>(entries: impl Iterator<Item = (i64, &'a BigRational)>) -> Vec<(i64, String)> {
    entries.map(|(k, p)| (k, p.to_string())).collect()
}

/// Parses a law; the probabilities must sum to one exactly.
pub fn parse_law(text: &str) -> Result<LatticeLaw> {
    let file: LawFile = de(text)?;
    let probs = parse_entries(&file.probs)?;
    match file.precision.as_deref() {
        None | Some("exact") => LatticeLaw::new(file.v0, file.span, probs),
        Some("float") => {
            let floats: Vec<(i64, f64)> = probs.iter().map(|(k, p)| (*k, to_f64(p))).collect();
            LatticeLaw::from_f64(file.v0, file.span, &floats)
        }
        Some(other) => Err(Error::Parse(format!(
            "precision must be \"exact\" or \"float\", got {other:?}"
        ))),
    }
}

pub fn law_to_toml(law: &LatticeLaw) -> String {
    ser(&LawFile {
        v0: law.v0(),
        span: law.span(),
        precision: (law.precision() == Precision::Float).then(|| "float".to_string()),
        probs: render_entries(law.probs().iter().map(|(k, p)| (*k, p))),
    })
}

/// Parses a coupling and re-validates it against its law.
pub fn parse_coupling(text: &str) -> Result<CouplingSpec> {
    let file: CouplingFile = de(text)?;
    let law = LatticeLaw::new(file.v0, file.span, parse_entries(&file.probs)?)?;
    let mu = MuSequence::new_relaxed(&law, parse_entries(&file.mu)?)?;
    let tau = TauSequence::new(parse_entries(&file.tau)?)?;
    CouplingSpec::build(&law, tau, mu)
}

pub fn coupling_to_toml(spec: &CouplingSpec) -> String {
    let law = spec.base();
    ser(&CouplingFile {
        v0: law.v0(),
        span: law.span(),
        probs: render_entries(law.probs().iter().map(|(k, p)| (*k, p))),
        mu: render_entries(spec.mu().entries().iter().map(|(k, m)| (*k, m))),
        tau: render_entries(spec.tau().nonzero()),
    })
}

pub fn parse_test_set(text: &str) -> Result<DivisorTestSet> {
    let kind: TestSetKind = de(text)?;
    DivisorTestSet::from_kind(kind)
}

pub fn test_set_to_toml(ts: &DivisorTestSet) -> String {
    ser(ts.kind())
}

pub fn parse_queries(text: &str) -> Result<Vec<DivisibilityQuery>> {
    let file: QueryFile = de(text)?;
    file.queries
        .into_iter()
        .map(|(n, d, u)| DivisibilityQuery::new(n, d, u))
        .collect()
}

pub fn queries_to_toml(queries: &[DivisibilityQuery]) -> String {
    ser(&QueryFile {
        queries: queries.iter().map(|q| (q.n(), q.d(), q.u())).collect(),
    })
}

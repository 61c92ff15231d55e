use std::fs;
use std::path::Path;

use serde::Serialize;

use semilocal_core::bounds::{smallcase_regimes, solve_theta, verify_regime, Regime, RegimeReport};
use semilocal_core::coupling::{sample_coupled_paths, CouplingSpec, MuSequence, GENERATOR};
use semilocal_core::divisorsets::{remark52_sum, series_bound_rhs, series_of_sups, DivisorTestSet};
use semilocal_core::exactprob::{evaluate, llt_gaussian_pointmass, Method, SumDistribution};
use semilocal_core::format::{parse_law, parse_queries, parse_test_set};
use semilocal_core::lattice::LatticeLaw;
use semilocal_core::rational::parse_rational;
use semilocal_core::semilocal::{discrepancy_scan, BoundShape};
use semilocal_core::theta::bernoulli_theta_discrepancy;
use semilocal_core::{DivisibilityQuery, Error, Exec};

use crate::output::Sink;
use crate::{CliError, Common};

const DEFAULT_EXACT_TOL: f64 = 1e-11;
const DOUBLING_NS: [u64; 6] = [64, 128, 256, 512, 1024, 2048];
const DRIFTS: [u64; 4] = [0, 1, 7, 1_000_000];

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// Comma-separated integers, with `a..b` for inclusive ranges.
pub fn parse_set(flag: &str, text: &str) -> Result<Vec<u64>, CliError> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| invalid(format!("--{flag}: {s:?} is not a non-negative integer")))
        };
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(invalid(format!("--{flag}: empty range {part}")));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err(invalid(format!("--{flag} is empty")));
    }
    Ok(out)
}

fn set_or(flag: &str, text: Option<&str>, default: &[u64]) -> Result<Vec<u64>, CliError> {
    match text {
        Some(t) => parse_set(flag, t),
        None => Ok(default.to_vec()),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn with_path(path: &Path, e: Error) -> CliError {
    match CliError::from(e) {
        CliError::Validation(m) => invalid(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn load_law(c: &Common) -> Result<Option<LatticeLaw>, CliError> {
    match &c.law {
        Some(p) => parse_law(&read(p)?).map(Some).map_err(|e| with_path(p, e)),
        None => Ok(None),
    }
}

fn exec(c: &Common) -> Exec {
    if c.workers == 1 {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

fn sink(c: &Common, command: &str) -> Sink {
    Sink::resolve(c.out.as_deref(), c.out_dir.as_deref(), command, c.format)
}

/// `--theta` or `--mu`, exactly one.
fn coupling(c: &Common, law: &LatticeLaw) -> Result<CouplingSpec, CliError> {
    match (&c.theta, &c.mu) {
        (Some(_), Some(_)) => Err(invalid("give either --theta or --mu, not both")),
        (None, None) => Err(invalid("a coupling needs --theta or --mu")),
        (Some(t), None) => {
            let mass = parse_rational(t).map_err(|e| invalid(format!("--theta: {e}")))?;
            Ok(CouplingSpec::from_mass(law, &mass)?)
        }
        (None, Some(m)) => {
            let mut entries = Vec::new();
            for part in m.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                let (k, p) = part
                    .split_once('=')
                    .ok_or_else(|| invalid(format!("--mu: expected index=p/q, got {part:?}")))?;
                let k: i64 = k.trim().parse().map_err(|_| invalid(format!("--mu: bad index in {part:?}")))?;
                let p = parse_rational(p).map_err(|e| invalid(format!("--mu: {e}")))?;
                entries.push((k, p));
            }
            let mu = MuSequence::new(law, entries)?;
            Ok(CouplingSpec::from_mu(law, mu)?)
        }
    }
}

#[derive(Serialize)]
struct ExactRow {
    n: u64,
    d: u64,
    u: u64,
    method: &'static str,
    probability: f64,
}

#[derive(Serialize)]
struct ExactReport {
    queries: usize,
    rows: usize,
    tolerance: f64,
    max_disagreement: f64,
}

pub fn exact(c: &Common, queries: Option<&Path>, d_set: Option<&str>) -> Result<(), CliError> {
    let law = load_law(c)?.unwrap_or_else(LatticeLaw::bernoulli);
    let tol = c.tol.unwrap_or(DEFAULT_EXACT_TOL);
    let qs = match queries {
        Some(p) => parse_queries(&read(p)?).map_err(|e| with_path(p, e))?,
        None => {
            let ns = parse_set(
                "n-set",
                c.n_set
                    .as_deref()
                    .ok_or_else(|| invalid("exact needs --n-set or --queries"))?,
            )?;
            let ds = match d_set {
                Some(t) => parse_set("d-set", t)?,
                None => (2..=c.d_max.unwrap_or(10)).collect(),
            };
            let us = set_or("u-set", c.u_set.as_deref(), &[0])?;
            let mut qs = Vec::new();
            for &n in &ns {
                for &d in &ds {
                    for &u in &us {
                        qs.push(DivisibilityQuery::new(n, d, u)?);
                    }
                }
            }
            qs
        }
    };

    let mut methods = vec![Method::Convolution, Method::Charsum, Method::Enumeration];
    if law == LatticeLaw::bernoulli() {
        methods.push(Method::ClosedForm);
    }
    let per_query = exec(c).try_map(&qs, |q| -> Result<Vec<ExactRow>, Error> {
        let mut rows = Vec::new();
        for &m in &methods {
            let p = match evaluate(&law, q, m) {
                Ok(p) => p,
                Err(Error::CapExceeded { .. }) => continue,
                Err(e) => return Err(e),
            };
            rows.push(ExactRow { n: q.n(), d: q.d(), u: q.u(), method: m.as_str(), probability: p });
        }
        Ok(rows)
    })?;

    let mut worst = 0.0f64;
    let mut mismatch = None;
    for rows in &per_query {
        let base = rows[0].probability;
        for r in &rows[1..] {
            let diff = (r.probability - base).abs();
            worst = worst.max(diff);
            if diff > tol && mismatch.is_none() {
                mismatch = Some(format!(
                    "n = {}, d = {}, u = {}: {} gives {:e}, convolution gives {:e}",
                    r.n, r.d, r.u, r.method, r.probability, base
                ));
            }
        }
    }
    let rows: Vec<ExactRow> = per_query.into_iter().flatten().collect();
    let out = sink(c, "exact");
    out.write_rows(&rows)?;
    out.write_report(&ExactReport {
        queries: qs.len(),
        rows: rows.len(),
        tolerance: tol,
        max_disagreement: worst,
    })?;
    match mismatch {
        Some(m) => Err(CliError::Mismatch(m)),
        None => Ok(()),
    }
}

fn log_scale(n: u64) -> f64 {
    let nf = n as f64;
    nf.ln().powf(2.5) / nf.powf(1.5)
}

#[derive(Serialize)]
struct DecayRow {
    n: u64,
    u: u64,
    e_u: f64,
    argmax_d: u64,
    e_u_scaled: f64,
    ratio_prev: Option<f64>,
}

#[derive(Serialize)]
struct DecayReport {
    /// `max_n E_u(n) n^{3/2} / (log n)^{5/2}` per drift, in `--u-set` order.
    c_emp: Vec<f64>,
    c_emp_spread: f64,
    /// `max_n max_u E_u(n) / E_0(n)`, when 0 is among the drifts.
    drift_ratio: Option<f64>,
}

/// Runs the fair Bernoulli theta scan for every `n`; rows are `(n, u)`.
fn bernoulli_scan(c: &Common, ns: &[u64], us: &[u64]) -> Result<Vec<Vec<(f64, u64)>>, CliError> {
    let mut table = Vec::with_capacity(ns.len());
    for &n in ns {
        if n < 2 {
            return Err(invalid(format!("--n-set: n = {n} must be at least 2")));
        }
        let d_max = c.d_max.unwrap_or(n).min(n).max(2);
        let row = bernoulli_theta_discrepancy(n, d_max, us, exec(c))?;
        table.push(row.iter().map(|r| (r.sup, r.argmax_d)).collect());
    }
    Ok(table)
}

pub fn theorem11(c: &Common) -> Result<(), CliError> {
    if c.law.is_some() {
        eprintln!("warning: theorem11 always uses the fair Bernoulli law; --law is ignored");
    }
    let ns = set_or("n-set", c.n_set.as_deref(), &DOUBLING_NS)?;
    let us = set_or("u-set", c.u_set.as_deref(), &DRIFTS)?;
    let table = bernoulli_scan(c, &ns, &us)?;

    let mut rows = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        for (j, &u) in us.iter().enumerate() {
            let (e, d) = table[i][j];
            rows.push(DecayRow {
                n,
                u,
                e_u: e,
                argmax_d: d,
                e_u_scaled: e / log_scale(n),
                ratio_prev: (i > 0).then(|| e / table[i - 1][j].0),
            });
        }
    }
    let c_emp: Vec<f64> = (0..us.len())
        .map(|j| {
            ns.iter()
                .zip(&table)
                .map(|(&n, row)| row[j].0 / log_scale(n))
                .fold(0.0, f64::max)
        })
        .collect();
    let spread = c_emp.iter().cloned().fold(0.0, f64::max) / c_emp.iter().cloned().fold(f64::INFINITY, f64::min);
    let drift_ratio = us.iter().position(|&u| u == 0).map(|z| {
        table
            .iter()
            .map(|row| row.iter().map(|r| r.0).fold(0.0, f64::max) / row[z].0)
            .fold(0.0, f64::max)
    });
    let out = sink(c, "theorem11");
    out.write_rows(&rows)?;
    out.write_report(&DecayReport { c_emp, c_emp_spread: spread, drift_ratio })
}

#[derive(Serialize)]
struct SeriesBlock {
    n0: u64,
    n_max: u64,
    partial_sum: f64,
    bound_total: f64,
    c1: f64,
    c2: f64,
    smooth_term: f64,
    local_term: f64,
    chernoff_term: f64,
    holds: bool,
}

#[derive(Serialize)]
struct ApproximantReport {
    vartheta: String,
    vartheta_x: String,
    theta_chernoff: f64,
    rho: f64,
    c_emp: f64,
    mu: Vec<(i64, String)>,
    tau: Vec<(i64, String)>,
    sup_by_n: Vec<(u64, f64)>,
    series: SeriesBlock,
}

pub fn theorem21(c: &Common, rho: f64, test_set: Option<&Path>) -> Result<(), CliError> {
    let law = load_law(c)?.ok_or_else(|| invalid("theorem21 needs --law"))?;
    let spec = coupling(c, &law)?;
    let ns = set_or("n-set", c.n_set.as_deref(), &[100, 200, 400, 800])?;
    let us = set_or("u-set", c.u_set.as_deref(), &[0, 3])?;
    let phis = set_or("phi-set", c.phi_set.as_deref(), &[10, 20, 40])?;
    let ts = match test_set {
        Some(p) => parse_test_set(&read(p)?).map_err(|e| with_path(p, e))?,
        None => DivisorTestSet::range(2, c.d_max.unwrap_or(40))?,
    };
    if ns.contains(&0) {
        return Err(invalid("--n-set: n must be at least 1"));
    }

    let vartheta = spec.mass_f64();
    let theta = solve_theta(vartheta, rho)?;
    let shape = BoundShape { c: 1.0, theta, rho };
    let scan = discrepancy_scan(&spec, &ns, ts.members(), &us, &shape, exec(c))?;

    let n0 = *ns.iter().min().expect("non-empty");
    let n_max = *ns.iter().max().expect("non-empty");
    let series = series_of_sups(&law, &ts, n0, n_max, &us, &phis, exec(c))?;
    let rhs = series_bound_rhs(vartheta, theta, rho, scan.c_emp, n0)?;

    let out = sink(c, "theorem21");
    out.write_rows(&scan.records)?;
    out.write_report(&ApproximantReport {
        vartheta: spec.mass().to_string(),
        vartheta_x: law.theta_characteristic().to_string(),
        theta_chernoff: theta,
        rho,
        c_emp: scan.c_emp,
        mu: spec.mu().entries().iter().map(|(k, m)| (*k, m.to_string())).collect(),
        tau: spec.tau().nonzero().map(|(k, t)| (k, t.to_string())).collect(),
        sup_by_n: scan.sup_by_n.clone(),
        series: SeriesBlock {
            n0,
            n_max,
            partial_sum: series.partial_sum,
            bound_total: rhs.total,
            c1: rhs.c1,
            c2: rhs.c2,
            smooth_term: rhs.smooth_term,
            local_term: rhs.local_term,
            chernoff_term: rhs.chernoff_term,
            holds: series.partial_sum < rhs.total,
        },
    })
}

#[derive(Serialize)]
struct LltRow {
    n: u64,
    u: u64,
    discrepancy: f64,
    argmax_d: u64,
    llt_envelope: f64,
    theta_envelope: f64,
    fitted_theta_envelope: f64,
    point_llt_error: f64,
}

#[derive(Serialize)]
struct LltReport {
    /// `max E_u(n) / ((log n)^{5/2} n^{-3/2})` over the grid.
    fitted_constant: f64,
    /// `n` in the grid where `(log n)^{5/2} n^{-3/2} <= sqrt(log n) / n`.
    ordering_holds_at: Vec<u64>,
    /// Same with the theta envelope scaled by the fitted constant.
    fitted_ordering_holds_at: Vec<u64>,
}

pub fn compare_llt(c: &Common) -> Result<(), CliError> {
    if c.law.is_some() {
        return Err(invalid("compare-llt works on the fair Bernoulli law only; drop --law"));
    }
    let ns = set_or("n-set", c.n_set.as_deref(), &DOUBLING_NS)?;
    let us = set_or("u-set", c.u_set.as_deref(), &DRIFTS)?;
    let table = bernoulli_scan(c, &ns, &us)?;

    let fitted = ns
        .iter()
        .zip(&table)
        .flat_map(|(&n, row)| row.iter().map(move |r| r.0 / log_scale(n)))
        .fold(0.0, f64::max);
    let mut rows = Vec::new();
    let mut ordering = Vec::new();
    let mut fitted_ordering = Vec::new();
    for (&n, row) in ns.iter().zip(&table) {
        let nf = n as f64;
        let llt = nf.ln().sqrt() / nf;
        let theta_env = log_scale(n);
        let dist = SumDistribution::of(&LatticeLaw::bernoulli(), n);
        let point = dist
            .iter()
            .map(|(z, p)| (p - llt_gaussian_pointmass(n, z)).abs())
            .fold(0.0, f64::max);
        if theta_env <= llt {
            ordering.push(n);
        }
        if fitted * theta_env <= llt {
            fitted_ordering.push(n);
        }
        for (&u, &(e, d)) in us.iter().zip(row) {
            rows.push(LltRow {
                n,
                u,
                discrepancy: e,
                argmax_d: d,
                llt_envelope: llt,
                theta_envelope: theta_env,
                fitted_theta_envelope: fitted * theta_env,
                point_llt_error: point,
            });
        }
    }
    let out = sink(c, "compare-llt");
    out.write_rows(&rows)?;
    out.write_report(&LltReport {
        fitted_constant: fitted,
        ordering_holds_at: ordering,
        fitted_ordering_holds_at: fitted_ordering,
    })
}

#[derive(Serialize)]
struct RegimeRow {
    n: u64,
    regime: Regime,
    applicable: bool,
    d_max: u64,
    sup_deviation: f64,
    argmax_d: u64,
    argmax_u: u64,
    bound: f64,
    holds: bool,
}

#[derive(Serialize)]
struct RegimesReport {
    regimes: Vec<RegimeReport>,
}

pub fn regimes(c: &Common, alpha: f64, alpha_p: f64, rho: f64, eps: f64) -> Result<(), CliError> {
    let ns = set_or("n-set", c.n_set.as_deref(), &[10_000])?;
    let us = set_or("u-set", c.u_set.as_deref(), &[0, 5])?;
    let reports = ns
        .iter()
        .map(|&n| smallcase_regimes(n, alpha, alpha_p, rho, eps))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for r in &reports {
        for regime in [Regime::Logarithmic, Regime::Power] {
            let k = verify_regime(r, regime, &us)?;
            rows.push(RegimeRow {
                n: r.n,
                regime: k.regime,
                applicable: k.applicable,
                d_max: k.d_max,
                sup_deviation: k.sup_deviation,
                argmax_d: k.argmax_d,
                argmax_u: k.argmax_u,
                bound: k.bound,
                holds: k.holds,
            });
        }
    }
    let out = sink(c, "regimes");
    out.write_rows(&rows)?;
    out.write_report(&RegimesReport { regimes: reports })
}

#[derive(Serialize)]
struct DoubleSumRow {
    m: u64,
    phi: u64,
    value: f64,
    value_sqrt_m: f64,
    ratio_to_first: f64,
}

#[derive(Serialize)]
struct DoubleSumReport {
    /// Largest `ratio_to_first` over the grid.
    max_ratio: f64,
}

pub fn remark52(c: &Common, m_set: &str) -> Result<(), CliError> {
    let ms = parse_set("m-set", m_set)?;
    let phis = set_or("phi-set", c.phi_set.as_deref(), &[10, 50, 200])?;
    let mut rows = Vec::new();
    for &phi in &phis {
        let mut first = None;
        for &m in &ms {
            let value = remark52_sum(m, phi)?;
            let scaled = value * (m as f64).sqrt();
            let base = *first.get_or_insert(scaled);
            rows.push(DoubleSumRow { m, phi, value, value_sqrt_m: scaled, ratio_to_first: scaled / base });
        }
    }
    let max_ratio = rows.iter().map(|r| r.ratio_to_first).fold(0.0, f64::max);
    let out = sink(c, "remark52");
    out.write_rows(&rows)?;
    out.write_report(&DoubleSumReport { max_ratio })
}

#[derive(Serialize)]
struct SampleRow {
    n: u64,
    value: i64,
    count: u64,
    empirical: f64,
    exact: f64,
}

#[derive(Serialize)]
struct SampleBlock {
    n: u64,
    mean_b: f64,
    mean_b_expected: f64,
    b_std_error: f64,
    chi_square: Option<f64>,
    chi_square_dof: Option<usize>,
}

#[derive(Serialize)]
struct SampleReport {
    generator: &'static str,
    seed: u64,
    count: u64,
    runs: Vec<SampleBlock>,
}

pub fn sample(c: &Common, count: u64) -> Result<(), CliError> {
    let law = load_law(c)?.ok_or_else(|| invalid("sample needs --law"))?;
    let spec = coupling(c, &law)?;
    let ns = set_or("n-set", c.n_set.as_deref(), &[10])?;
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for &n in &ns {
        let summary = sample_coupled_paths(&spec, n, count, c.seed, exec(c))?;
        let dist = SumDistribution::of(&law, n);
        for (&value, &k) in &summary.sum_counts {
            rows.push(SampleRow {
                n,
                value,
                count: k,
                empirical: k as f64 / count as f64,
                exact: dist.prob(value),
            });
        }
        runs.push(SampleBlock {
            n,
            mean_b: summary.mean_b(),
            mean_b_expected: n as f64 * spec.mass_f64(),
            b_std_error: summary.b_std_error(),
            chi_square: summary.chi_square.as_ref().map(|x| x.statistic),
            chi_square_dof: summary.chi_square.as_ref().map(|x| x.dof),
        });
    }
    let out = sink(c, "sample");
    out.write_rows(&rows)?;
    out.write_report(&SampleReport { generator: GENERATOR, seed: c.seed, count, runs })
}

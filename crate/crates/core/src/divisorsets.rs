//! Test sets of divisors, averaged discrepancies over their sections and the
//! series constants they are compared with.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};

use crate::exactprob::{prob_divisible_convolution, residue_vector};
use crate::lattice::LatticeLaw;
use crate::{DivisibilityQuery, Error, Exec, Result};

/// How a test set was generated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TestSetKind {
    List { members: Vec<u64> },
    Primes { bound: u64 },
    Range {
        #[serde(default = "two")]
        min: u64,
        max: u64,
    },
}

fn two() -> u64 {
    2
}

/// A sorted, deduplicated set of moduli `>= 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisorTestSet {
    members: Vec<u64>,
    kind: TestSetKind,
}

impl DivisorTestSet {
    pub fn from_kind(kind: TestSetKind) -> Result<Self> {
        let mut members = match &kind {
            TestSetKind::List { members } => {
                if let Some(bad) = members.iter().find(|&&d| d < 2) {
                    return Err(Error::domain("test set", format!("member {bad} is below 2")));
                }
                members.clone()
            }
            TestSetKind::Primes { bound } => primes_up_to(*bound),
            TestSetKind::Range { min, max } => {
                if *min < 2 {
                    return Err(Error::domain("test set", format!("range start {min} is below 2")));
                }
                (*min..=*max).collect()
            }
        };
        members.sort_unstable();
        members.dedup();
        Ok(DivisorTestSet { members, kind })
    }

    pub fn list(members: &[u64]) -> Result<Self> {
        Self::from_kind(TestSetKind::List { members: members.to_vec() })
    }

    pub fn primes(bound: u64) -> Self {
        Self::from_kind(TestSetKind::Primes { bound }).expect("primes are at least 2")
    }

    pub fn range(min: u64, max: u64) -> Result<Self> {
        Self::from_kind(TestSetKind::Range { min, max })
    }

    pub fn members(&self) -> &[u64] {
        &self.members
    }

    pub fn kind(&self) -> &TestSetKind {
        &self.kind
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `{d in D : d <= phi}`; may be empty.
    pub fn section(&self, phi: u64) -> Result<DivisorTestSet> {
        if phi < 2 {
            return Err(Error::domain("phi", format!("{phi} must be at least 2")));
        }
        let members: Vec<u64> = self.members.iter().copied().filter(|&d| d <= phi).collect();
        Ok(DivisorTestSet {
            kind: TestSetKind::List { members: members.clone() },
            members,
        })
    }
}

fn primes_up_to(bound: u64) -> Vec<u64> {
    if bound < 2 {
        return Vec::new();
    }
    let b = bound as usize;
    let mut sieve = vec![true; b + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= b {
        if sieve[i] {
            for j in (i * i..=b).step_by(i) {
                sieve[j] = false;
            }
        }
        i += 1;
    }
    (2..=b).filter(|&i| sieve[i]).map(|i| i as u64).collect()
}

/// `(1/|D_phi|) sum_{d in D_phi} |P{d | S_n + u} - 1/d|`.
pub fn averaged_discrepancy(
    law: &LatticeLaw,
    n: u64,
    ts: &DivisorTestSet,
    phi: u64,
    u: u64,
) -> Result<f64> {
    let section = ts.section(phi)?;
    if section.is_empty() {
        return Err(Error::EmptySection { phi });
    }
    let mut total = 0.0;
    for &d in section.members() {
        let q = DivisibilityQuery::new(n, d, u)?;
        total += (prob_divisible_convolution(law, &q) - 1.0 / d as f64).abs();
    }
    Ok(total / section.members().len() as f64)
}

/// `2 e^{pi^2/4} / (1 - e^{-pi^2/16})`.
pub fn c1() -> f64 {
    2.0 * (PI * PI / 4.0).exp() / -(-PI * PI / 16.0).exp_m1()
}

/// Value of `sum_{n >= n0} (log n)^{5/2} n^{-3/2}` with a certified bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// Terms summed directly before the tail estimate takes over.
    pub direct_terms: u64,
}

const SERIES_CUT: u64 = 1 << 20;

fn series_term(x: f64) -> f64 {
    x.ln().powf(2.5) * x.powf(-1.5)
}

/// Direct summation up to `M = max(2^20, n0)`, then
/// `int_M^inf = 2^{7/2} Gamma(7/2, ln(M)/2)` with an Euler-Maclaurin
/// correction. The terms decrease past `e^{5/3}`, so the bracket
/// `[S + I, S + I + g(M)]` holds.
pub fn log_power_series(n0: u64) -> SeriesValue {
    let n0 = n0.max(2);
    let m = SERIES_CUT.max(n0);
    // Neumaier summation
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for n in n0..m {
        let t = series_term(n as f64);
        let s = sum + t;
        comp += if sum.abs() >= t.abs() { (sum - s) + t } else { (t - s) + sum };
        sum = s;
    }
    let direct = sum + comp;
    let mf = m as f64;
    let integral = 2f64.powf(3.5) * gamma(3.5) * gamma_ur(3.5, mf.ln() / 2.0);
    let g = series_term(mf);
    let g_prime = g * (2.5 / (mf * mf.ln()) - 1.5 / mf);
    SeriesValue {
        estimate: direct + integral + g / 2.0 - g_prime / 12.0,
        lower: direct + integral,
        upper: direct + integral + g,
        direct_terms: m - n0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesBound {
    pub c1: f64,
    /// `c_emp * sum_{n >= N} (log n)^{5/2} n^{-3/2}`.
    pub c2: f64,
    pub series: SeriesValue,
    /// `C_1 / vartheta`.
    pub smooth_term: f64,
    /// `C_2 / theta^{3/2}`.
    pub local_term: f64,
    /// `2 rho^2 / (1 - rho)`.
    pub chernoff_term: f64,
    pub total: f64,
}

/// `C_1 / vartheta + C_2 / theta^{3/2} + 2 rho^2 / (1 - rho)`.
pub fn series_bound_rhs(vartheta: f64, theta: f64, rho: f64, c_emp: f64, n0: u64) -> Result<SeriesBound> {
    if !(vartheta > 0.0 && vartheta <= 1.0) {
        return Err(Error::domain("vartheta", format!("{vartheta} must lie in (0, 1]")));
    }
    if theta.is_nan() || theta <= 0.0 {
        return Err(Error::domain("theta", format!("{theta} must be positive")));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::domain("rho", format!("{rho} must lie in (0, 1)")));
    }
    if c_emp.is_nan() || c_emp < 0.0 {
        return Err(Error::domain("c_emp", format!("{c_emp} must be non-negative")));
    }
    let c1 = c1();
    let series = log_power_series(n0);
    let c2 = c_emp * series.estimate;
    let smooth_term = c1 / vartheta;
    let local_term = c2 / theta.powf(1.5);
    let chernoff_term = 2.0 * rho * rho / (1.0 - rho);
    Ok(SeriesBound {
        c1,
        c2,
        series,
        smooth_term,
        local_term,
        chernoff_term,
        total: smooth_term + local_term + chernoff_term,
    })
}

/// `(1/phi) sum_{2 <= d < phi} (1/d) sum_{1 <= l < d} e^{-m pi^2 l^2 / (2 d^2)}`.
pub fn remark52_sum(m: u64, phi: u64) -> Result<f64> {
    if m < 1 {
        return Err(Error::domain("m", "must be at least 1"));
    }
    if phi < 2 {
        return Err(Error::domain("phi", format!("{phi} must be at least 2")));
    }
    let mut outer = 0.0;
    for d in 2..phi {
        let df = d as f64;
        let inner: f64 = (1..d)
            .map(|l| (-(m as f64) * PI * PI * (l as f64).powi(2) / (2.0 * df * df)).exp())
            .sum();
        outer += inner / df;
    }
    Ok(outer / phi as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesTerm {
    pub n: u64,
    /// `max over u and phi of averaged_discrepancy`.
    pub sup: f64,
    pub argmax_u: u64,
    pub argmax_phi: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesOfSups {
    pub terms: Vec<SeriesTerm>,
    pub partial_sum: f64,
}

/// `sum_{n = n0}^{n_max} max_{u, phi} averaged_discrepancy(n, phi, u)`.
///
/// Each modulus advances its residue law one step at a time, so the whole
/// range of `n` costs one pass per modulus. Moduli are spread over `exec`.
/// Heights with an empty section are skipped; if all are empty the section
/// error is returned.
pub fn series_of_sups(
    law: &LatticeLaw,
    ts: &DivisorTestSet,
    n0: u64,
    n_max: u64,
    u_set: &[u64],
    phi_set: &[u64],
    exec: Exec,
) -> Result<SeriesOfSups> {
    if n0 < 1 || n_max < n0 {
        return Err(Error::domain("n range", format!("need 1 <= n0 <= n_max, got {n0}..{n_max}")));
    }
    if u_set.is_empty() {
        return Err(Error::domain("u_set", "must not be empty"));
    }
    let mut sections = Vec::new();
    for &phi in phi_set {
        let s = ts.section(phi)?;
        if !s.is_empty() {
            sections.push((phi, s));
        }
    }
    let Some(phi_top) = sections.iter().map(|(phi, _)| *phi).max() else {
        return Err(Error::EmptySection {
            phi: phi_set.iter().copied().max().unwrap_or(0),
        });
    };
    let moduli = ts.section(phi_top)?.members().to_vec();
    let count = (n_max - n0 + 1) as usize;

    // deviations[m][i][j] = |P{d_m | S_{n0+i} + u_j} - 1/d_m|
    let deviations = exec.map(&moduli, |&d| {
        let step = residue_vector::<f64>(law, d);
        let du = d as usize;
        let mut cur = vec![0.0; du];
        cur[0] = 1.0;
        let mut out = Vec::with_capacity(count);
        for n in 1..=n_max {
            let mut next = vec![0.0; du];
            for (r, &p) in cur.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (s, &w) in step.iter().enumerate() {
                    let t = if r + s >= du { r + s - du } else { r + s };
                    next[t] += p * w;
                }
            }
            cur = next;
            if n >= n0 {
                out.push(
                    u_set
                        .iter()
                        .map(|&u| {
                            let target = ((d - u % d) % d) as usize;
                            (cur[target] - 1.0 / d as f64).abs()
                        })
                        .collect::<Vec<_>>(),
                );
            }
        }
        out
    });

    let mut terms = Vec::with_capacity(count);
    for i in 0..count {
        let mut best = SeriesTerm { n: n0 + i as u64, sup: -1.0, argmax_u: 0, argmax_phi: 0 };
        for (phi, section) in &sections {
            let size = section.members().len();
            for (j, &u) in u_set.iter().enumerate() {
                let avg = deviations[..size].iter().map(|dev| dev[i][j]).sum::<f64>() / size as f64;
                if avg > best.sup {
                    best.sup = avg;
                    best.argmax_u = u;
                    best.argmax_phi = *phi;
                }
            }
        }
        terms.push(best);
    }
    let partial_sum = terms.iter().map(|t| t.sup).sum();
    Ok(SeriesOfSups { terms, partial_sum })
}

/// `sum_{v=0}^{V} C(v+z, z) x^v`.
pub fn binomial_series_partial(x: f64, z: u64, v_max: u64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for v in 0..v_max {
        term *= x * (v + 1 + z) as f64 / (v + 1) as f64;
        sum += term;
    }
    sum
}

/// `(1 - x)^{-(z+1)}`, the limit of [`binomial_series_partial`] for `|x| < 1`.
pub fn binomial_series_limit(x: f64, z: u64) -> f64 {
    (1.0 - x).powi(-(z as i32 + 1))
}

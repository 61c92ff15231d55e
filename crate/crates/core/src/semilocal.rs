//! The approximant
//!
//! ```text
//! (1/d) sum_{|l| < d} e^{2 i pi u l / d} a(l/d)^n,
//! a(t) = vartheta e^{i pi t - pi^2 t^2 / 2} E e^{2 i pi t X~} + s(t),
//! s(t) = sum_k mu_k e^{2 i pi v_k t},
//! ```
//!
//! for `P{d | S_n + u}`, and scans of its discrepancy against exact values.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::coupling::{CouplingSpec, MuSequence};
use crate::exactprob::SumDistribution;
use crate::lattice::{frac_phase, LatticeLaw};
use crate::rational::to_f64;
use crate::theta::{gaussian_tail_majorant, theta_u_partial};
use crate::{DivisibilityQuery, Error, Exec, Result};

/// Largest tolerated imaginary part of an approximant.
pub const APPROXIMANT_IMAG_TOLERANCE: f64 = 1e-10;

/// `s(t) = sum_k mu_k e^{2 i pi v_k t}`.
pub fn s_of_t(mu: &MuSequence, t: f64) -> Complex64 {
    mu.entries()
        .iter()
        .map(|(k, m)| {
            let phase = (mu.value(*k) as f64 * t).rem_euclid(1.0);
            Complex64::from_polar(to_f64(m), 2.0 * PI * phase)
        })
        .sum()
}

/// `a(t)`, with `a(0) = 1` exactly.
pub fn per_factor_symbol(spec: &CouplingSpec, t: f64) -> Complex64 {
    if t == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let gauss = Complex64::from_polar((-PI * PI * t * t / 2.0).exp(), PI * t);
    spec.mass_f64() * gauss * spec.tilde().char_function(t) + s_of_t(spec.mu(), t)
}

/// Float snapshot of a coupling for repeated approximant evaluation.
#[derive(Debug, Clone)]
pub struct Approximant {
    mass: f64,
    tilde: Vec<(i64, f64)>,
    mu: Vec<(i64, f64)>,
}

impl Approximant {
    pub fn new(spec: &CouplingSpec) -> Self {
        let mu = spec.mu();
        Approximant {
            mass: spec.mass_f64(),
            tilde: spec.tilde().values_f64().collect(),
            mu: mu
                .entries()
                .iter()
                .map(|(k, m)| (mu.value(*k), to_f64(m)))
                .collect(),
        }
    }

    /// `a(l/d)` with every phase reduced exactly.
    pub fn symbol(&self, l: i64, d: u64) -> Complex64 {
        if l == 0 {
            return Complex64::new(1.0, 0.0);
        }
        let t = l as f64 / d as f64;
        let half_turn = (l as i128).rem_euclid(2 * d as i128) as f64 / (2 * d) as f64;
        let gauss = Complex64::from_polar((-PI * PI * t * t / 2.0).exp(), 2.0 * PI * half_turn);
        let tilde: Complex64 = self
            .tilde
            .iter()
            .map(|&(v, p)| Complex64::from_polar(p, 2.0 * PI * frac_phase(v, l, d)))
            .sum();
        let s: Complex64 = self
            .mu
            .iter()
            .map(|&(v, m)| Complex64::from_polar(m, 2.0 * PI * frac_phase(v, l, d)))
            .sum();
        self.mass * gauss * tilde + s
    }

    pub fn evaluate(&self, q: &DivisibilityQuery) -> Result<f64> {
        let d = q.d();
        let u = q.u_mod();
        let n = u32::try_from(q.n())
            .map_err(|_| Error::domain("n", format!("{} exceeds the supported range", q.n())))?;
        let mut sum = Complex64::new(0.0, 0.0);
        for l in (1..d as i64).rev() {
            for l in [l, -l] {
                let ul = (u as i128 * l as i128).rem_euclid(d as i128) as f64 / d as f64;
                sum += Complex64::from_polar(1.0, 2.0 * PI * ul) * self.symbol(l, d).powu(n);
            }
        }
        let value = (sum + 1.0) / d as f64;
        if value.im.abs() > APPROXIMANT_IMAG_TOLERANCE {
            return Err(Error::NumericIntegrity {
                what: "approximant",
                residue: value.im.abs(),
                tolerance: APPROXIMANT_IMAG_TOLERANCE,
            });
        }
        Ok(value.re)
    }
}

/// The approximant of `P{d | S_n + u}` for the coupling `spec`.
pub fn approximant(spec: &CouplingSpec, q: &DivisibilityQuery) -> Result<f64> {
    Approximant::new(spec).evaluate(q)
}

/// Constants for the reported bound columns:
/// `bound_smooth = c theta^{-3/2} (log n)^{5/2} n^{-3/2}`, `bound_chernoff = 2 rho^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundShape {
    pub c: f64,
    pub theta: f64,
    pub rho: f64,
}

impl BoundShape {
    pub fn smooth(&self, n: u64) -> f64 {
        let n = n as f64;
        self.c * self.theta.powf(-1.5) * n.ln().powf(2.5) * n.powf(-1.5)
    }

    pub fn chernoff(&self, n: u64) -> f64 {
        2.0 * self.rho.powf(n as f64)
    }

    /// `error * theta^{3/2} n^{3/2} / (log n)^{5/2}`.
    pub fn scaled(&self, n: u64, error: f64) -> f64 {
        let nf = n as f64;
        error * self.theta.powf(1.5) * nf.powf(1.5) / nf.ln().powf(2.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyRecord {
    pub n: u64,
    pub d: u64,
    pub u: u64,
    pub exact: f64,
    pub approx: f64,
    pub abs_error: f64,
    pub bound_smooth: f64,
    pub bound_chernoff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    /// Ordered by `(n, d, u)` as given.
    pub records: Vec<DiscrepancyRecord>,
    /// `(n, sup over (d, u) of abs_error)`.
    pub sup_by_n: Vec<(u64, f64)>,
    /// `max_n sup_error(n) theta^{3/2} n^{3/2} / (log n)^{5/2}`, over `n >= 2`.
    pub c_emp: f64,
}

/// Exact values (full law of `S_n` folded onto residues) against the
/// approximant over `n_set x d_range x u_set`. Work is split by `n`.
pub fn discrepancy_scan(
    spec: &CouplingSpec,
    n_set: &[u64],
    d_range: &[u64],
    u_set: &[u64],
    shape: &BoundShape,
    exec: Exec,
) -> Result<ScanReport> {
    for &d in d_range {
        if d < 2 {
            return Err(Error::domain("d", format!("{d} must be at least 2")));
        }
    }
    let model = Approximant::new(spec);
    let law = spec.base();
    let per_n = exec.try_map(n_set, |&n| -> Result<Vec<DiscrepancyRecord>> {
        if d_range.is_empty() || u_set.is_empty() {
            return Ok(Vec::new());
        }
        let dist = SumDistribution::of(law, n);
        let mut rows = Vec::with_capacity(d_range.len() * u_set.len());
        for &d in d_range {
            for &u in u_set {
                let q = DivisibilityQuery::new(n, d, u)?;
                let exact = dist.prob_divisible(d, u);
                let approx = model.evaluate(&q)?;
                rows.push(DiscrepancyRecord {
                    n,
                    d,
                    u,
                    exact,
                    approx,
                    abs_error: (exact - approx).abs(),
                    bound_smooth: shape.smooth(n),
                    bound_chernoff: shape.chernoff(n),
                });
            }
        }
        Ok(rows)
    })?;

    let mut sup_by_n = Vec::new();
    let mut c_emp: f64 = 0.0;
    for (rows, &n) in per_n.iter().zip(n_set) {
        if rows.is_empty() {
            continue;
        }
        let sup = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
        sup_by_n.push((n, sup));
        if n >= 2 {
            c_emp = c_emp.max(shape.scaled(n, sup));
        }
    }
    Ok(ScanReport {
        records: per_n.into_iter().flatten().collect(),
        sup_by_n,
        c_emp,
    })
}

/// The fair Bernoulli law with `mu = 0`, so `vartheta = tau_0 = 1`. Outside
/// the strict coupling conditions but well defined; its approximant is the
/// theta sum truncated to `|l| < d`.
pub fn bernoulli_limit_spec() -> CouplingSpec {
    let law = LatticeLaw::bernoulli();
    let mu = MuSequence::new_relaxed(&law, std::iter::empty()).expect("zero mu is admissible");
    CouplingSpec::from_mu(&law, mu).expect("tau_0 = 1 solves the coupling equations")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliLimitCheck {
    pub approximant: f64,
    /// `Theta_u(d, n) / d` truncated to `|l| < d`.
    pub theta_over_d: f64,
    /// Bound on `|approximant - Theta_u(d, n) / d|`: the omitted theta tail
    /// over `d` plus float rounding.
    pub allowance: f64,
    pub holds: bool,
}

/// Compares the approximant of [`bernoulli_limit_spec`] with the theta sum.
pub fn bernoulli_limit_check(n: u64, d: u64, u: u64) -> Result<BernoulliLimitCheck> {
    let q = DivisibilityQuery::new(n, d, u)?;
    let approx = approximant(&bernoulli_limit_spec(), &q)?;
    let theta = theta_u_partial(d, n, u, d - 1).re / d as f64;
    let c = n as f64 * PI * PI / (2.0 * (d as f64).powi(2));
    let allowance = gaussian_tail_majorant(c, d - 1) / d as f64 + 1e-12;
    Ok(BernoulliLimitCheck {
        approximant: approx,
        theta_over_d: theta,
        allowance,
        holds: (approx - theta).abs() <= allowance,
    })
}

//! Chernoff bounds for Bernoulli counts, the small-modulus regimes for
//! Bernoulli sums and a Hölder power inequality.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::exactprob::bernoulli_deviation;
use crate::rational::to_f64;
use crate::{DivisibilityQuery, Error, Result};

/// Target accuracy of [`solve_theta`].
pub const THETA_ROOT_TOLERANCE: f64 = 1e-12;

/// `psi(theta) = ((1 - vartheta)/(1 - theta))^{1 - theta} (vartheta/theta)^theta`.
pub fn psi(vartheta: f64, theta: f64) -> Result<f64> {
    if !(vartheta > 0.0 && vartheta < 1.0) {
        return Err(Error::domain("vartheta", format!("{vartheta} must lie in (0, 1)")));
    }
    if !(theta > 0.0 && theta <= vartheta) {
        return Err(Error::domain(
            "theta",
            format!("{theta} must lie in (0, vartheta = {vartheta}]"),
        ));
    }
    let log = (1.0 - theta) * ((1.0 - vartheta).ln() - (-theta).ln_1p()) + theta * (vartheta / theta).ln();
    Ok(log.exp())
}

/// The `theta` in `(0, vartheta]` with `psi(theta) = rho`, by bisection.
pub fn solve_theta(vartheta: f64, rho: f64) -> Result<f64> {
    if !(vartheta > 0.0 && vartheta < 1.0) {
        return Err(Error::domain("vartheta", format!("{vartheta} must lie in (0, 1)")));
    }
    if !(rho > 1.0 - vartheta && rho < 1.0) {
        return Err(Error::domain(
            "rho",
            format!("{rho} must lie in (1 - vartheta, 1) = ({}, 1)", 1.0 - vartheta),
        ));
    }
    let (mut lo, mut hi) = (0.0f64, vartheta);
    let mut best = hi;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = psi(vartheta, mid)?;
        best = mid;
        if (v - rho).abs() <= THETA_ROOT_TOLERANCE / 4.0 {
            break;
        }
        if v < rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// `P{B_n <= k_max}` for `B_n ~ Binomial(n, vartheta)`, exactly.
pub fn binomial_tail_exact(vartheta: &BigRational, n: u64, k_max: u64) -> BigRational {
    let q = BigRational::one() - vartheta;
    let mut binom = BigInt::one();
    let mut total = BigRational::zero();
    for k in 0..=k_max.min(n) {
        if k > 0 {
            binom = binom * BigInt::from(n - k + 1) / BigInt::from(k);
        }
        let term = BigRational::from_integer(binom.clone())
            * num_traits::pow(vartheta.clone(), k as usize)
            * num_traits::pow(q.clone(), (n - k) as usize);
        total += term;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChernoffCheck {
    pub n: u64,
    /// `psi(theta)^n`.
    pub bound: f64,
    /// `P{B_n <= floor(theta n)}`.
    pub exact_tail: f64,
    pub holds: bool,
}

/// `P{B_n <= theta n}` against `psi(theta)^n`; `vartheta` enters the exact
/// tail with its exact binary value.
pub fn chernoff_vs_exact(vartheta: f64, theta: f64, n: u64) -> Result<ChernoffCheck> {
    let bound = psi(vartheta, theta)?.powf(n as f64);
    let k_max = (theta * n as f64).floor() as u64;
    let exact = BigRational::from_float(vartheta)
        .ok_or_else(|| Error::domain("vartheta", "not finite"))?;
    let exact_tail = to_f64(&binomial_tail_exact(&exact, n, k_max));
    Ok(ChernoffCheck {
        n,
        bound,
        exact_tail,
        holds: exact_tail <= bound,
    })
}

/// Quantities of the two small-modulus regimes for `P{d | B_n + u}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub n: u64,
    pub alpha: f64,
    pub alpha_p: f64,
    pub rho: f64,
    pub eps: f64,
    /// `sqrt(2 alpha log n / n)`.
    pub phi_n: f64,
    /// `sin(phi_n / 2) / (phi_n / 2)`.
    pub tau_n: f64,
    /// `sqrt(alpha' / alpha)`.
    pub tau_threshold: f64,
    pub regime_i_applicable: bool,
    /// Admissible moduli are `d < d_max_i = pi sqrt(n / (2 alpha log n))`.
    pub d_max_i: f64,
    /// `n^{-alpha'}`.
    pub bound_i: f64,
    /// `sqrt(2 n^rho / n)`.
    pub psi_n: f64,
    /// `sin(psi_n / 2) / (psi_n / 2)`.
    pub tau_tilde_n: f64,
    /// `sqrt(1 - eps)`.
    pub tau_tilde_threshold: f64,
    pub regime_ii_applicable: bool,
    /// `d < d_max_ii = (pi / sqrt 2) n^{(1 - rho)/2}`.
    pub d_max_ii: f64,
    /// `e^{-(1 - eps) n^rho}`.
    pub bound_ii: f64,
}

fn sinc_half(x: f64) -> f64 {
    (x / 2.0).sin() / (x / 2.0)
}

/// Evaluates both regimes. Unmet hypotheses are reported, not raised.
pub fn smallcase_regimes(n: u64, alpha: f64, alpha_p: f64, rho: f64, eps: f64) -> Result<RegimeReport> {
    if n < 2 {
        return Err(Error::domain("n", format!("{n} must be at least 2")));
    }
    if !(alpha > alpha_p && alpha_p > 0.0) {
        return Err(Error::domain("alpha", format!("need alpha > alpha' > 0, got {alpha}, {alpha_p}")));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::domain("rho", format!("{rho} must lie in (0, 1)")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain("eps", format!("{eps} must lie in (0, 1)")));
    }
    let nf = n as f64;
    let log_n = nf.ln();
    let phi_n = (2.0 * alpha * log_n / nf).sqrt();
    let tau_n = sinc_half(phi_n);
    let tau_threshold = (alpha_p / alpha).sqrt();
    let psi_n = (2.0 * nf.powf(rho) / nf).sqrt();
    let tau_tilde_n = sinc_half(psi_n);
    let tau_tilde_threshold = (1.0 - eps).sqrt();
    Ok(RegimeReport {
        n,
        alpha,
        alpha_p,
        rho,
        eps,
        phi_n,
        tau_n,
        tau_threshold,
        regime_i_applicable: tau_n >= tau_threshold,
        d_max_i: PI * (nf / (2.0 * alpha * log_n)).sqrt(),
        bound_i: nf.powf(-alpha_p),
        psi_n,
        tau_tilde_n,
        tau_tilde_threshold,
        regime_ii_applicable: tau_tilde_n >= tau_tilde_threshold,
        d_max_ii: PI / 2f64.sqrt() * nf.powf((1.0 - rho) / 2.0),
        bound_ii: (-(1.0 - eps) * nf.powf(rho)).exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Logarithmic,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeCheck {
    pub regime: Regime,
    pub applicable: bool,
    /// Largest admissible modulus.
    pub d_max: u64,
    /// `sup |P{d | B_n + u} - 1/d|` over `2 <= d <= d_max` and the drifts.
    pub sup_deviation: f64,
    pub argmax_d: u64,
    pub argmax_u: u64,
    pub bound: f64,
    pub holds: bool,
}

fn largest_below(x: f64) -> u64 {
    let c = x.ceil() as u64;
    if (c as f64) < x { c } else { c.saturating_sub(1) }
}

/// Checks a regime against exact Bernoulli deviations over all admissible
/// moduli and the given drifts.
pub fn verify_regime(report: &RegimeReport, regime: Regime, u_set: &[u64]) -> Result<RegimeCheck> {
    let (applicable, d_max, bound) = match regime {
        Regime::Logarithmic => (report.regime_i_applicable, largest_below(report.d_max_i), report.bound_i),
        Regime::Power => (report.regime_ii_applicable, largest_below(report.d_max_ii), report.bound_ii),
    };
    let mut sup = 0.0f64;
    let (mut argmax_d, mut argmax_u) = (0, 0);
    for d in 2..=d_max {
        for &u in u_set {
            let dev = bernoulli_deviation(&DivisibilityQuery::new(report.n, d, u)?).abs();
            if dev > sup {
                sup = dev;
                argmax_d = d;
                argmax_u = u;
            }
        }
    }
    Ok(RegimeCheck {
        regime,
        applicable,
        d_max,
        sup_deviation: sup,
        argmax_d,
        argmax_u,
        bound,
        holds: sup <= bound,
    })
}

/// `lhs = (e^{-pi^2 l^2/(2 d^2)} vartheta + 1 - vartheta)^{n p}`,
/// `rhs = (e^{-pi^2 p l^2/(2 d^2)} vartheta + 1 - vartheta)^n`.
pub fn holder_power_check(vartheta: f64, ell: u64, d: u64, n: u64, p: u64) -> (f64, f64) {
    let x = PI * PI * (ell as f64).powi(2) / (2.0 * (d as f64).powi(2));
    let lhs = ((-x).exp() * vartheta + 1.0 - vartheta).powf((n * p) as f64);
    let rhs = ((-(p as f64) * x).exp() * vartheta + 1.0 - vartheta).powf(n as f64);
    (lhs, rhs)
}

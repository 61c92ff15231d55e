//! Drifted theta sums `Theta_u(d, n) = sum_l e^{i pi (2u+n) l / d} e^{-n pi^2 l^2 / (2 d^2)}`,
//! their Gaussian residue-sum counterpart, Poisson summation and the tail
//! beyond `|l| >= d/2`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::exactprob::SumDistribution;
use crate::lattice::LatticeLaw;
use crate::{Error, Exec, Result};

/// Largest tolerated imaginary part of a symmetric theta sum.
pub const THETA_IMAG_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaValue {
    pub value: f64,
    /// The sum runs over `|l| <= truncation_radius`.
    pub truncation_radius: u64,
    /// Certified bound on the omitted terms.
    pub tail_bound: f64,
    pub drift: u64,
    pub imag_residue: f64,
}

fn gaussian_rate(d: u64, n: u64) -> f64 {
    n as f64 * PI * PI / (2.0 * (d as f64).powi(2))
}

/// `sum_{|l| > radius} e^{-c l^2} <= 2 e^{-c (L+1)^2} / (1 - e^{-c (L+1)})`,
/// from `l^2 >= (L+1) l` for `l > L`.
pub fn gaussian_tail_majorant(c: f64, radius: u64) -> f64 {
    let m = radius as f64 + 1.0;
    2.0 * (-c * m * m).exp() / -(-c * m).exp_m1()
}

fn check_args(d: u64, n: u64) -> Result<()> {
    if d < 2 {
        return Err(Error::domain("d", format!("{d} must be at least 2")));
    }
    if n < 1 {
        return Err(Error::domain("n", format!("{n} must be at least 1")));
    }
    Ok(())
}

/// `Theta_u(d, n)` truncated so that the certified tail is below `tol`.
pub fn theta_u(d: u64, n: u64, u: u64, tol: f64) -> Result<ThetaValue> {
    check_args(d, n)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::domain("tol", format!("{tol} must be positive")));
    }
    let c = gaussian_rate(d, n);
    let mut radius = 1u64;
    while gaussian_tail_majorant(c, radius) >= tol {
        radius += 1;
    }
    let sum = theta_u_partial(d, n, u, radius);
    if sum.im.abs() > THETA_IMAG_TOLERANCE {
        return Err(Error::NumericIntegrity {
            what: "theta sum",
            residue: sum.im.abs(),
            tolerance: THETA_IMAG_TOLERANCE,
        });
    }
    Ok(ThetaValue {
        value: sum.re,
        truncation_radius: radius,
        tail_bound: gaussian_tail_majorant(c, radius),
        drift: u,
        imag_residue: sum.im.abs(),
    })
}

/// `sum_{|l| <= radius} e^{i pi (2u+n) l / d} e^{-n pi^2 l^2 / (2 d^2)}` with
/// phases reduced exactly mod `2d`. Terms are added in `(l, -l)` pairs.
pub fn theta_u_partial(d: u64, n: u64, u: u64, radius: u64) -> Complex64 {
    let c = gaussian_rate(d, n);
    let two_d = 2 * d as u128;
    let m = (2 * (u % d) as u128 + n as u128 % two_d) % two_d;
    let mut re = 0.0;
    let mut im = 0.0;
    // small terms first
    for l in (1..=radius as u128).rev() {
        let w = (-c * (l as f64).powi(2)).exp();
        let plus = ((m * l) % two_d) as f64;
        let minus = ((two_d - (m * l) % two_d) % two_d) as f64;
        let a = PI * plus / d as f64;
        let b = PI * minus / d as f64;
        re += w * (a.cos() + b.cos());
        im += w * (a.sin() + b.sin());
    }
    Complex64::new(1.0 + re, im)
}

/// `sqrt(2/(pi n)) sum_{z = -u mod d} e^{-(2z-n)^2/(2n)}` over all integers
/// `z`, stopping once terms fall below `1e-18` of the running sum.
pub fn gaussian_residue_sum(d: u64, n: u64, u: u64) -> Result<f64> {
    check_args(d, n)?;
    let (di, ni) = (d as i128, n as i128);
    let r = (di - (u % d) as i128) % di;
    // the representative of r mod d closest to n/2
    let base = r + ((ni / 2 - r).div_euclid(di)) * di;
    let term = |z: i128| {
        let x = (2 * z - ni) as f64;
        (-x * x / (2.0 * n as f64)).exp()
    };
    let mut up = Vec::new();
    let mut z = base;
    loop {
        let t = term(z);
        up.push(t);
        if 2 * z > ni && t < 1e-18 * up.iter().sum::<f64>().max(f64::MIN_POSITIVE) {
            break;
        }
        z += di;
    }
    let mut down = Vec::new();
    let mut z = base - di;
    loop {
        let t = term(z);
        down.push(t);
        if 2 * z < ni && t < 1e-18 * (up[0] + down.iter().sum::<f64>()) {
            break;
        }
        z -= di;
    }
    let sum: f64 = up.iter().rev().chain(down.iter().rev()).sum();
    Ok((2.0 / (PI * n as f64)).sqrt() * sum)
}

/// Both sides of `sum_l e^{-(l+delta)^2 pi / x} = sqrt(x) sum_l e^{2 i pi l delta - l^2 pi x}`.
pub fn poisson_check(x: f64, delta: f64) -> Result<(f64, f64)> {
    if x <= 0.0 || !x.is_finite() {
        return Err(Error::domain("x", format!("{x} must be positive")));
    }
    // e^{-40} < 5e-18 bounds every omitted term, and the tails decay faster
    // than geometrically beyond the cut
    let cut = |scale: f64| (40.0 * scale / PI).sqrt().ceil() as i64 + 2;
    let lcut = cut(x);
    let lhs: f64 = (-lcut..=lcut)
        .map(|l| (-(l as f64 + delta).powi(2) * PI / x).exp())
        .sum();
    let rcut = cut(1.0 / x);
    let mut rhs = 1.0;
    for l in 1..=rcut {
        let w = (-(l as f64).powi(2) * PI * x).exp();
        rhs += 2.0 * w * (2.0 * PI * l as f64 * delta).cos();
    }
    Ok((lhs, x.sqrt() * rhs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailReport {
    /// `r = sum_{j >= d/2} e^{-n pi^2 j^2 / (2 d^2)}`.
    pub remainder: f64,
    /// `e^{-pi^2 n / 72}`.
    pub reference: f64,
    /// `remainder / reference`.
    pub ratio: f64,
}

/// The theta tail from `j = ceil(d/2)` on, summed until terms drop below
/// `1e-18` of the total.
pub fn theta_tail_bound(d: u64, n: u64) -> Result<TailReport> {
    check_args(d, n)?;
    if n < 2 {
        return Err(Error::domain("n", format!("{n} must be at least 2")));
    }
    let c = gaussian_rate(d, n);
    let mut j = d.div_ceil(2) as f64;
    let first = (-c * j * j).exp();
    let mut remainder = first;
    loop {
        j += 1.0;
        let t = (-c * j * j).exp();
        remainder += t;
        if t < 1e-18 * remainder || t == 0.0 {
            break;
        }
    }
    let reference = (-PI * PI * n as f64 / 72.0).exp();
    Ok(TailReport {
        remainder,
        reference,
        ratio: remainder / reference,
    })
}

/// `E_u(n) = sup_{2 <= d <= d_max} |P{d | B_n + u} - Theta_u(d, n) / d|` for
/// one drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaDiscrepancy {
    pub n: u64,
    pub u: u64,
    pub sup: f64,
    pub argmax_d: u64,
}

/// Truncation tolerance used for theta sums in discrepancy scans.
pub const SCAN_THETA_TOLERANCE: f64 = 1e-17;

/// Fair Bernoulli sums against `Theta_u(d, n) / d` over all `2 <= d <= d_max`,
/// one result per drift. Exact values come from the full law of `B_n`.
pub fn bernoulli_theta_discrepancy(
    n: u64,
    d_max: u64,
    u_set: &[u64],
    exec: Exec,
) -> Result<Vec<ThetaDiscrepancy>> {
    check_args(2, n)?;
    let dist = SumDistribution::of(&LatticeLaw::bernoulli(), n);
    let moduli: Vec<u64> = (2..=d_max).collect();
    let per_d = exec.try_map(&moduli, |&d| -> Result<Vec<f64>> {
        u_set
            .iter()
            .map(|&u| {
                let theta = theta_u(d, n, u, SCAN_THETA_TOLERANCE)?;
                Ok((dist.prob_divisible(d, u) - theta.value / d as f64).abs())
            })
            .collect()
    })?;
    Ok(u_set
        .iter()
        .enumerate()
        .map(|(j, &u)| {
            let mut best = ThetaDiscrepancy { n, u, sup: 0.0, argmax_d: 0 };
            for (errs, &d) in per_d.iter().zip(&moduli) {
                if errs[j] > best.sup {
                    best.sup = errs[j];
                    best.argmax_d = d;
                }
            }
            best
        })
        .collect())
}

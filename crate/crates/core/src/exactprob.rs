//! Exact divisibility probabilities `P{d | S_n + u}` by independent routes,
//! plus the Gaussian local-limit comparator for Bernoulli sums.

use std::f64::consts::PI;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::lattice::LatticeLaw;
use crate::rational::to_f64;
use crate::{Error, Result};

/// Default bound on `|support|^n` for [`enumerate_oracle`].
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Tolerance on the imaginary part and on the `[0, 1]` overshoot of the
/// character-sum route.
pub const CHARSUM_TOLERANCE: f64 = 1e-12;

/// A query `d | S_n + u`. The drift is kept as given and reduced mod `d` where
/// it is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DivisibilityQuery {
    n: u64,
    d: u64,
    u: u64,
}

impl DivisibilityQuery {
    pub fn new(n: u64, d: u64, u: u64) -> Result<Self> {
        if n < 1 {
            return Err(Error::domain("n", format!("{n} must be at least 1")));
        }
        if d < 2 {
            return Err(Error::domain("d", format!("{d} must be at least 2")));
        }
        Ok(DivisibilityQuery { n, d, u })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn u(&self) -> u64 {
        self.u
    }

    /// `u mod d`.
    pub fn u_mod(&self) -> u64 {
        self.u % self.d
    }

    /// Residue `r` with `d | r + u`.
    pub fn target_residue(&self) -> usize {
        ((self.d - self.u_mod()) % self.d) as usize
    }
}

/// Semiring of weights the convolution route works over.
pub trait Weight: Clone + Send + Sync {
    fn zero() -> Self;
    fn from_prob(p: &BigRational, float: f64) -> Self;
    fn add_assign(acc: &mut Self, a: &Self);
    fn mul_add(acc: &mut Self, a: &Self, b: &Self);
}

impl Weight for f64 {
    fn zero() -> Self {
        0.0
    }

    fn from_prob(_: &BigRational, float: f64) -> Self {
        float
    }

    fn add_assign(acc: &mut Self, a: &Self) {
        *acc += a;
    }

    fn mul_add(acc: &mut Self, a: &Self, b: &Self) {
        *acc += a * b;
    }
}

impl Weight for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }

    fn from_prob(p: &BigRational, _: f64) -> Self {
        p.clone()
    }

    fn add_assign(acc: &mut Self, a: &Self) {
        *acc += a;
    }

    fn mul_add(acc: &mut Self, a: &Self, b: &Self) {
        if !a.is_zero() && !b.is_zero() {
            *acc += a * b;
        }
    }
}

/// Law of `X mod d` as a vector indexed by residue.
pub fn residue_vector<W: Weight>(law: &LatticeLaw, d: u64) -> Vec<W> {
    let mut out = vec![W::zero(); d as usize];
    for ((k, p), (_, pf)) in law.probs().iter().zip(law.values_f64()) {
        let r = law.value(*k).rem_euclid(d as i64) as usize;
        W::add_assign(&mut out[r], &W::from_prob(p, pf));
    }
    out
}

/// Cyclic convolution of two residue vectors of equal length.
pub fn cyclic_convolve<W: Weight>(a: &[W], b: &[W]) -> Vec<W> {
    let d = a.len();
    let mut out = vec![W::zero(); d];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            let r = (i + j) % d;
            W::mul_add(&mut out[r], x, y);
        }
    }
    out
}

/// Law of `S_n mod d` by square-and-multiply on the residue vector of `X`.
pub fn residue_distribution<W: Weight>(law: &LatticeLaw, n: u64, d: u64) -> Vec<W> {
    let mut base = residue_vector::<W>(law, d);
    let mut acc: Option<Vec<W>> = None;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => cyclic_convolve(&a, &base),
            });
        }
        e >>= 1;
        if e > 0 {
            base = cyclic_convolve(&base, &base);
        }
    }
    acc.unwrap_or_else(|| {
        let mut v = vec![W::zero(); d as usize];
        v[0] = W::from_prob(&BigRational::one(), 1.0);
        v
    })
}

/// `P{d | S_n + u}` by the convolution route in `f64`.
pub fn prob_divisible_convolution(law: &LatticeLaw, q: &DivisibilityQuery) -> f64 {
    residue_distribution::<f64>(law, q.n, q.d)[q.target_residue()]
}

/// `P{d | S_n + u}` by the convolution route in exact rationals.
pub fn prob_divisible_convolution_exact(law: &LatticeLaw, q: &DivisibilityQuery) -> BigRational {
    residue_distribution::<BigRational>(law, q.n, q.d)
        .swap_remove(q.target_residue())
}

/// `(1/d) sum_{j<d} e^{2 i pi j u / d} phi(j/d)^n`, with the imaginary residue
/// checked against [`CHARSUM_TOLERANCE`].
pub fn prob_divisible_charsum(law: &LatticeLaw, q: &DivisibilityQuery) -> Result<f64> {
    let d = q.d;
    let u = q.u_mod();
    let n = exponent(q.n)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..d {
        let phase = ((j as u128 * u as u128) % d as u128) as f64 / d as f64;
        let phi = law.char_function_frac(j as i64, d);
        sum += Complex64::from_polar(1.0, 2.0 * PI * phase) * phi.powu(n);
    }
    let value = sum / d as f64;
    if value.im.abs() > CHARSUM_TOLERANCE {
        return Err(Error::NumericIntegrity {
            what: "character sum",
            residue: value.im.abs(),
            tolerance: CHARSUM_TOLERANCE,
        });
    }
    clamp_probability(value.re, "character sum")
}

fn exponent(n: u64) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::domain("n", format!("{n} exceeds the supported range")))
}

fn clamp_probability(p: f64, what: &'static str) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else if (-CHARSUM_TOLERANCE..=1.0 + CHARSUM_TOLERANCE).contains(&p) {
        Ok(p.clamp(0.0, 1.0))
    } else {
        Err(Error::NumericIntegrity {
            what,
            residue: if p < 0.0 { -p } else { p - 1.0 },
            tolerance: CHARSUM_TOLERANCE,
        })
    }
}

/// Closed form for fair Bernoulli sums:
/// `1/d + (2/d) sum_{1<=j<d/2} cos(pi (2u+n) j / d) cos(pi j / d)^n`.
pub fn bernoulli_closed_form(q: &DivisibilityQuery) -> f64 {
    1.0 / q.d as f64 + bernoulli_deviation(q)
}

/// `P{d | B_n + u} - 1/d` for fair Bernoulli sums, summed directly so that
/// deviations far below `1/d` keep their relative accuracy.
pub fn bernoulli_deviation(q: &DivisibilityQuery) -> f64 {
    let d = q.d as u128;
    let two_d = 2 * d;
    let m = (2 * q.u_mod() as u128 + q.n as u128 % two_d) % two_d;
    let n = q.n as f64;
    let mut sum = 0.0;
    let mut j = 1u128;
    while 2 * j < d {
        let phase = ((m * j) % two_d) as f64 / d as f64;
        let c = (PI * j as f64 / d as f64).cos();
        let term = (PI * phase).cos() * (n * c.ln()).exp();
        sum += term;
        j += 1;
    }
    2.0 * sum / d as f64
}

/// Exact `P{d | S_n + u}` by walking all `|support|^n` paths.
pub fn enumerate_oracle(law: &LatticeLaw, q: &DivisibilityQuery, cap: u128) -> Result<BigRational> {
    let paths = (law.len() as u128).checked_pow(exponent(q.n)?).unwrap_or(u128::MAX);
    if paths > cap {
        return Err(Error::CapExceeded { paths, cap });
    }
    let denom = law
        .probs()
        .iter()
        .fold(num_bigint::BigInt::one(), |l, (_, p)| l.lcm(p.denom()));
    let d = q.d;
    let atoms: Vec<(u64, BigUint)> = law
        .probs()
        .iter()
        .map(|(k, p)| {
            let w = (p * BigRational::from_integer(denom.clone())).to_integer();
            let r = law.value(*k).rem_euclid(d as i64) as u64;
            (r, w.to_biguint().expect("probabilities are non-negative"))
        })
        .collect();

    let n = q.n as usize;
    let target = q.target_residue() as u64;
    // prefix_weight[i] / prefix_res[i] describe the first i steps
    let mut prefix_weight = vec![BigUint::one(); n + 1];
    let mut prefix_res = vec![0u64; n + 1];
    let mut digits = vec![0usize; n];
    let mut hit = BigUint::zero();
    let mut depth = 0;
    loop {
        if depth == n {
            if prefix_res[n] == target {
                hit += &prefix_weight[n];
            }
            // odometer: advance the deepest digit that can move
            loop {
                if depth == 0 {
                    let total = num_traits::pow(denom.to_biguint().expect("positive"), n);
                    return Ok(BigRational::new(hit.into(), total.into()));
                }
                depth -= 1;
                digits[depth] += 1;
                if digits[depth] < atoms.len() {
                    break;
                }
                digits[depth] = 0;
            }
        }
        let (r, w) = &atoms[digits[depth]];
        prefix_weight[depth + 1] = &prefix_weight[depth] * w;
        prefix_res[depth + 1] = (prefix_res[depth] + r) % d;
        depth += 1;
    }
}

/// Gaussian approximation `sqrt(2/(pi n)) exp(-(2z-n)^2/(2n))` of
/// `P{B_n = z}`.
pub fn llt_gaussian_pointmass(n: u64, z: i64) -> f64 {
    let n = n as f64;
    let x = 2.0 * z as f64 - n;
    (2.0 / (PI * n)).sqrt() * (-x * x / (2.0 * n)).exp()
}

/// Full law of `S_n` in `f64`, on the values
/// `first_value + span * i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SumDistribution {
    first_value: i64,
    span: u64,
    probs: Vec<f64>,
}

impl SumDistribution {
    /// The law of `S_0 = 0`.
    pub fn zero(law: &LatticeLaw) -> Self {
        SumDistribution {
            first_value: 0,
            span: law.span(),
            probs: vec![1.0],
        }
    }

    pub fn of(law: &LatticeLaw, n: u64) -> Self {
        let mut s = Self::zero(law);
        for _ in 0..n {
            s.add_step(law);
        }
        s
    }

    /// Replaces the law of `S_n` by that of `S_{n+1}`.
    pub fn add_step(&mut self, law: &LatticeLaw) {
        let kmin = law.min_index();
        let width = (law.max_index() - kmin) as usize + 1;
        let mut base = vec![0.0; width];
        for (k, _) in law.probs() {
            base[(k - kmin) as usize] = law.prob_f64(*k);
        }
        let mut out = vec![0.0; self.probs.len() + width - 1];
        for (i, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (j, &b) in base.iter().enumerate() {
                out[i + j] += p * b;
            }
        }
        self.first_value += law.value(kmin);
        self.probs = out;
    }

    /// `(value, probability)` pairs, zeros included.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (self.first_value + self.span as i64 * i as i64, p))
    }

    pub fn prob(&self, value: i64) -> f64 {
        let off = value - self.first_value;
        if off < 0 || off % self.span as i64 != 0 {
            return 0.0;
        }
        self.probs
            .get((off / self.span as i64) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    /// `P{d | S + u}` by folding the law onto residues.
    pub fn prob_divisible(&self, d: u64, u: u64) -> f64 {
        let d = d as i128;
        let u = u as i128;
        self.iter()
            .filter(|(v, _)| (*v as i128 + u).rem_euclid(d) == 0)
            .map(|(_, p)| p)
            .sum()
    }
}

/// Routes for computing `P{d | S_n + u}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Convolution,
    Charsum,
    Enumeration,
    ClosedForm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Convolution => "convolution",
            Method::Charsum => "charsum",
            Method::Enumeration => "enumerate",
            Method::ClosedForm => "closed_form",
        }
    }
}

/// Evaluates one route, in `f64`. Enumeration uses [`DEFAULT_ENUMERATION_CAP`];
/// the closed form is only defined for the fair Bernoulli law.
pub fn evaluate(law: &LatticeLaw, q: &DivisibilityQuery, method: Method) -> Result<f64> {
    match method {
        Method::Convolution => Ok(prob_divisible_convolution(law, q)),
        Method::Charsum => prob_divisible_charsum(law, q),
        Method::Enumeration => {
            enumerate_oracle(law, q, DEFAULT_ENUMERATION_CAP).map(|p| to_f64(&p))
        }
        Method::ClosedForm => {
            if *law != LatticeLaw::bernoulli() {
                return Err(Error::domain("method", "closed form needs the fair Bernoulli law"));
            }
            Ok(bernoulli_closed_form(q))
        }
    }
}

//! Finitely supported laws on a lattice `v0 + span * Z`, their structural
//! characteristic, smoothness characteristic and reduction to unit span.

use std::f64::consts::TAU;

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::rational::{self, to_f64};
use crate::{Error, Result};

/// Tolerance on the total mass of a law built from floats.
pub const FLOAT_MASS_TOLERANCE: f64 = 1e-15;

/// How the probabilities of a [`LatticeLaw`] were supplied.
///
/// Exact laws sum to one exactly and support exact identities (coupling,
/// residue distributions). Float laws are stored as the exact binary values of
/// their `f64` inputs and sum to one only within [`FLOAT_MASS_TOLERANCE`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Exact,
    Float,
}

/// A probability law on `{v0 + span * k : k in Z}` with finite support.
///
/// Indices `k` address lattice points, values `v_k = v0 + span * k` are the
/// integers the random variable actually takes.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeLaw {
    v0: i64,
    span: u64,
    probs: Vec<(i64, BigRational)>,
    floats: Vec<f64>,
    precision: Precision,
}

impl LatticeLaw {
    /// Builds an exact law. Zero entries are dropped; negative entries,
    /// duplicate indices, an empty support or a total mass other than one are
    /// rejected.
    pub fn new(
        v0: i64,
        span: u64,
        probs: impl IntoIterator<Item = (i64, BigRational)>,
    ) -> Result<Self> {
        let probs = Self::collect_probs(span, probs)?;
        let total: BigRational = probs.iter().map(|(_, p)| p).sum();
        if !total.is_one() {
            return Err(Error::InvalidLaw(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let floats = probs.iter().map(|(_, p)| to_f64(p)).collect();
        Ok(LatticeLaw {
            v0,
            span,
            probs,
            floats,
            precision: Precision::Exact,
        })
    }

    /// Builds a float-mode law; the mass must be one within
    /// [`FLOAT_MASS_TOLERANCE`].
    pub fn from_f64(v0: i64, span: u64, probs: &[(i64, f64)]) -> Result<Self> {
        let mut exact = Vec::with_capacity(probs.len());
        for &(k, p) in probs {
            let r = BigRational::from_float(p)
                .ok_or_else(|| Error::InvalidLaw(format!("non-finite probability at index {k}")))?;
            exact.push((k, r));
        }
        let probs = Self::collect_probs(span, exact)?;
        let floats: Vec<f64> = probs.iter().map(|(_, p)| to_f64(p)).collect();
        let total: f64 = floats.iter().sum();
        if (total - 1.0).abs() > FLOAT_MASS_TOLERANCE {
            return Err(Error::InvalidLaw(format!(
                "probabilities sum to {total}, not 1 within {FLOAT_MASS_TOLERANCE:e}"
            )));
        }
        Ok(LatticeLaw {
            v0,
            span,
            probs,
            floats,
            precision: Precision::Float,
        })
    }

    fn collect_probs(
        span: u64,
        probs: impl IntoIterator<Item = (i64, BigRational)>,
    ) -> Result<Vec<(i64, BigRational)>> {
        if span == 0 {
            return Err(Error::InvalidLaw("span must be positive".into()));
        }
        let mut out: Vec<(i64, BigRational)> = Vec::new();
        for (k, p) in probs {
            if p.is_negative() {
                return Err(Error::InvalidLaw(format!(
                    "negative probability {p} at index {k}"
                )));
            }
            if !p.is_zero() {
                out.push((k, p));
            }
        }
        out.sort_by_key(|(k, _)| *k);
        if let Some(w) = out.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidLaw(format!("duplicate index {}", w[0].0)));
        }
        if out.is_empty() {
            return Err(Error::InvalidLaw("empty support".into()));
        }
        Ok(out)
    }

    /// Assembles a law from already sorted, strictly positive entries without
    /// re-checking the total mass.
    pub(crate) fn from_sorted_unchecked(
        v0: i64,
        span: u64,
        probs: Vec<(i64, BigRational)>,
        precision: Precision,
    ) -> Self {
        let floats = probs.iter().map(|(_, p)| to_f64(p)).collect();
        LatticeLaw {
            v0,
            span,
            probs,
            floats,
            precision,
        }
    }

    /// The fair Bernoulli law on `{0, 1}`.
    pub fn bernoulli() -> Self {
        let half = rational::ratio(1, 2);
        LatticeLaw::new(0, 1, [(0, half.clone()), (1, half)]).expect("valid law")
    }

    /// Uniform law on the given indices of `v0 + span * Z`.
    pub fn uniform(v0: i64, span: u64, indices: &[i64]) -> Result<Self> {
        let p = rational::ratio(1, indices.len().max(1) as i64);
        LatticeLaw::new(v0, span, indices.iter().map(|&k| (k, p.clone())))
    }

    pub fn v0(&self) -> i64 {
        self.v0
    }

    pub fn span(&self) -> u64 {
        self.span
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// Number of support points.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        self.probs.len() == 1
    }

    /// `(index, probability)` pairs in increasing index order.
    pub fn probs(&self) -> &[(i64, BigRational)] {
        &self.probs
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.probs.iter().map(|(k, _)| *k)
    }

    pub fn min_index(&self) -> i64 {
        self.probs[0].0
    }

    pub fn max_index(&self) -> i64 {
        self.probs[self.probs.len() - 1].0
    }

    /// `f(k)`, zero off the support.
    pub fn prob(&self, k: i64) -> BigRational {
        match self.probs.binary_search_by_key(&k, |(i, _)| *i) {
            Ok(pos) => self.probs[pos].1.clone(),
            Err(_) => BigRational::zero(),
        }
    }

    pub fn prob_f64(&self, k: i64) -> f64 {
        match self.probs.binary_search_by_key(&k, |(i, _)| *i) {
            Ok(pos) => self.floats[pos],
            Err(_) => 0.0,
        }
    }

    /// The lattice point `v_k = v0 + span * k`.
    pub fn value(&self, k: i64) -> i64 {
        self.v0 + self.span as i64 * k
    }

    /// `(v_k, f(k))` over the support, probabilities as `f64`.
    pub fn values_f64(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .zip(&self.floats)
            .map(|((k, _), p)| (self.value(*k), *p))
    }

    /// `(v_k, f(k))` over the support, exact probabilities.
    pub fn values(&self) -> impl Iterator<Item = (i64, &BigRational)> + '_ {
        self.probs.iter().map(|(k, p)| (self.value(*k), p))
    }

    /// gcd of pairwise differences of support indices; zero for a point mass.
    pub fn index_gcd(&self) -> u64 {
        let k0 = self.min_index();
        self.support()
            .fold(0u64, |g, k| g.gcd(&((k - k0).unsigned_abs())))
    }

    /// The same law with every index translated by `shift`.
    pub fn shifted(&self, shift: i64) -> Self {
        LatticeLaw {
            v0: self.v0,
            span: self.span,
            probs: self.probs.iter().map(|(k, p)| (k + shift, p.clone())).collect(),
            floats: self.floats.clone(),
            precision: self.precision,
        }
    }

    /// Law of `(X - v_min) / D'` where `v_min` is the smallest support value
    /// and `D'` the maximal span. The result lives on `0 + 1 * Z` and keeps the
    /// probabilities index for index.
    pub fn reduce_to_unit_span(&self) -> Result<Reduction> {
        if self.is_degenerate() {
            return Err(Error::DegenerateLaw {
                value: self.value(self.min_index()),
            });
        }
        let g = self.index_gcd();
        let k0 = self.min_index();
        let probs = self
            .probs
            .iter()
            .map(|(k, p)| ((k - k0) / g as i64, p.clone()))
            .collect();
        Ok(Reduction {
            law: LatticeLaw {
                v0: 0,
                span: 1,
                probs,
                floats: self.floats.clone(),
                precision: self.precision,
            },
            offset: self.value(k0),
            span_found: self.span * g,
        })
    }

    /// `vartheta_X = sum_k f(k) ∧ f(k+1)` over lattice indices.
    pub fn theta_characteristic(&self) -> BigRational {
        self.probs
            .windows(2)
            .filter(|w| w[1].0 == w[0].0 + 1)
            .map(|w| rational::min(&w[0].1, &w[1].1))
            .sum()
    }

    pub fn theta_characteristic_f64(&self) -> f64 {
        to_f64(&self.theta_characteristic())
    }

    /// `delta_X = sum_m |f(m) - f(m-1)|`, evaluated directly.
    pub fn delta_characteristic(&self) -> BigRational {
        let mut points: Vec<i64> = self.support().flat_map(|k| [k, k + 1]).collect();
        points.sort_unstable();
        points.dedup();
        points
            .into_iter()
            .map(|m| rational::abs(&(self.prob(m) - self.prob(m - 1))))
            .sum()
    }

    pub fn smoothness(&self) -> SmoothnessReport {
        let g = self.index_gcd();
        SmoothnessReport {
            theta_x: self.theta_characteristic(),
            delta_x: self.delta_characteristic(),
            maximal_span: g == 1,
            span_found: if g == 0 { self.span } else { self.span * g },
        }
    }

    /// `E exp(2 i pi t X) = sum_k f(k) exp(2 i pi v_k t)`.
    pub fn char_function(&self, t: f64) -> Complex64 {
        self.values_f64()
            .map(|(v, p)| {
                let phase = (v as f64 * t).rem_euclid(1.0);
                Complex64::from_polar(p, TAU * phase)
            })
            .sum()
    }

    /// `E exp(2 i pi j X / d)` with the phase `v_k * j mod d` reduced exactly
    /// in integers.
    pub fn char_function_frac(&self, j: i64, d: u64) -> Complex64 {
        self.values_f64()
            .map(|(v, p)| Complex64::from_polar(p, TAU * frac_phase(v, j, d)))
            .sum()
    }
}

/// `(v * j mod d) / d` in `[0, 1)`.
pub(crate) fn frac_phase(v: i64, j: i64, d: u64) -> f64 {
    let r = (v as i128 * j as i128).rem_euclid(d as i128);
    r as f64 / d as f64
}

/// Result of [`LatticeLaw::reduce_to_unit_span`].
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub law: LatticeLaw,
    /// Smallest support value of the original law.
    pub offset: i64,
    /// Maximal span of the original law, in value units.
    pub span_found: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessReport {
    pub theta_x: BigRational,
    pub delta_x: BigRational,
    pub maximal_span: bool,
    pub span_found: u64,
}

impl SmoothnessReport {
    pub fn theta_x_f64(&self) -> f64 {
        to_f64(&self.theta_x)
    }

    pub fn delta_x_f64(&self) -> f64 {
        to_f64(&self.delta_x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use proptest::prelude::*;

    fn law_t() -> LatticeLaw {
        LatticeLaw::new(0, 1, [(0, ratio(1, 2)), (1, ratio(3, 10)), (2, ratio(1, 5))]).unwrap()
    }

    #[test]
    fn reduce_even_support() {
        let law =
            LatticeLaw::new(0, 1, [(0, ratio(1, 2)), (2, ratio(1, 4)), (4, ratio(1, 4))]).unwrap();
        let red = law.reduce_to_unit_span().unwrap();
        assert_eq!(red.span_found, 2);
        assert_eq!(red.offset, 0);
        let expect =
            LatticeLaw::new(0, 1, [(0, ratio(1, 2)), (1, ratio(1, 4)), (2, ratio(1, 4))]).unwrap();
        assert_eq!(red.law, expect);
    }

    #[test]
    fn reduce_bernoulli_is_identity() {
        let b = LatticeLaw::bernoulli();
        let red = b.reduce_to_unit_span().unwrap();
        assert_eq!(red.law, b);
        assert_eq!((red.offset, red.span_found), (0, 1));
    }

    #[test]
    fn reduce_offset_support() {
        // values {3, 5, 9} written as v0 = 3, span = 1, indices {0, 2, 6}
        let third = ratio(1, 3);
        let law = LatticeLaw::new(3, 1, [(0, third.clone()), (2, third.clone()), (6, third.clone())])
            .unwrap();
        let red = law.reduce_to_unit_span().unwrap();
        assert_eq!(red.span_found, 2);
        assert_eq!(red.offset, 3);
        let got: Vec<i64> = red.law.support().collect();
        assert_eq!(got, vec![0, 1, 3]);
        assert_eq!(red.law.v0(), 0);
        assert_eq!(red.law.span(), 1);
    }

    #[test]
    fn reduce_point_mass_is_degenerate() {
        let law = LatticeLaw::new(7, 1, [(0, ratio(1, 1))]).unwrap();
        assert!(matches!(
            law.reduce_to_unit_span(),
            Err(Error::DegenerateLaw { value: 7 })
        ));
    }

    #[test]
    fn theta_examples() {
        assert_eq!(LatticeLaw::bernoulli().theta_characteristic(), ratio(1, 2));
        let unif = LatticeLaw::uniform(0, 1, &[0, 1, 2]).unwrap();
        assert_eq!(unif.theta_characteristic(), ratio(2, 3));
        assert_eq!(law_t().theta_characteristic(), ratio(1, 2));
    }

    #[test]
    fn delta_examples() {
        let b = LatticeLaw::bernoulli().smoothness();
        assert_eq!(b.delta_x, ratio(1, 1));
        assert!(b.maximal_span);
        let t = law_t().smoothness();
        assert_eq!(t.delta_x, ratio(1, 1));
        let point = LatticeLaw::new(0, 1, [(0, ratio(1, 1))]).unwrap().smoothness();
        assert_eq!(point.delta_x, ratio(2, 1));
        assert_eq!(point.theta_x, ratio(0, 1));
    }

    #[test]
    fn char_function_examples() {
        let b = LatticeLaw::bernoulli();
        for &t in &[0.1, 0.25, 0.37, 0.9] {
            let expect = Complex64::from_polar(1.0, std::f64::consts::PI * t)
                * (std::f64::consts::PI * t).cos();
            assert!((b.char_function(t) - expect).norm() < 1e-15);
        }
        assert_eq!(law_t().char_function(0.0), Complex64::new(1.0, 0.0));
        let half = law_t().char_function(0.5);
        assert!((half - Complex64::new(0.4, 0.0)).norm() < 1e-15);
        assert!((law_t().char_function_frac(1, 2) - half).norm() < 1e-15);
    }

    #[test]
    fn construction_errors() {
        assert!(LatticeLaw::new(0, 1, [(0, ratio(1, 2))]).is_err());
        assert!(LatticeLaw::new(0, 0, [(0, ratio(1, 1))]).is_err());
        assert!(LatticeLaw::new(0, 1, [(0, ratio(3, 2)), (1, ratio(-1, 2))]).is_err());
        assert!(LatticeLaw::new(0, 1, [(0, ratio(1, 2)), (0, ratio(1, 2))]).is_err());
        assert!(LatticeLaw::new(0, 1, std::iter::empty()).is_err());
        // zeros are dropped
        let l = LatticeLaw::new(0, 1, [(0, ratio(1, 1)), (5, ratio(0, 1))]).unwrap();
        assert_eq!(l.len(), 1);
    }

    #[test]
    fn float_mode() {
        let l = LatticeLaw::from_f64(0, 1, &[(0, 0.5), (1, 0.3), (2, 0.2)]).unwrap();
        assert_eq!(l.precision(), Precision::Float);
        assert!((l.theta_characteristic_f64() - 0.5).abs() < 1e-15);
        assert!(LatticeLaw::from_f64(0, 1, &[(0, 0.5), (1, 0.4)]).is_err());
    }

    prop_compose! {
        fn arb_law()(weights in prop::collection::vec(0u32..20, 1..7), start in -5i64..5)
            -> LatticeLaw {
            let mut weights = weights;
            if weights.iter().all(|&w| w == 0) { weights[0] = 1; }
            let total: u32 = weights.iter().sum();
            LatticeLaw::new(0, 1, weights.iter().enumerate()
                .map(|(i, &w)| (start + i as i64, ratio(w as i64, total as i64)))).unwrap()
        }
    }

    proptest! {
        #[test]
        fn delta_is_twice_one_minus_theta(law in arb_law()) {
            let r = law.smoothness();
            prop_assert_eq!(r.delta_x.clone(), (ratio(1, 1) - r.theta_x.clone()) * ratio(2, 1));
            prop_assert_eq!(r.theta_x > ratio(0, 1), r.delta_x < ratio(2, 1));
        }

        #[test]
        fn theta_shift_invariant(law in arb_law(), c in -100i64..100) {
            prop_assert_eq!(law.theta_characteristic(), law.shifted(c).theta_characteristic());
        }

        #[test]
        fn char_function_bounded_and_periodic(law in arb_law(), t in -3.0f64..3.0) {
            let z = law.char_function(t);
            prop_assert!(z.norm() <= 1.0 + 1e-14);
            let w = law.char_function(t + 1.0);
            prop_assert!((z - w).norm() < 1e-12);
        }

        #[test]
        fn reduction_idempotent(law in arb_law()) {
            prop_assume!(!law.is_degenerate());
            let once = law.reduce_to_unit_span().unwrap();
            let twice = once.law.reduce_to_unit_span().unwrap();
            prop_assert_eq!(&twice.law, &once.law);
            prop_assert_eq!(twice.span_found, 1);
            prop_assert_eq!(twice.offset, 0);
        }
    }
}

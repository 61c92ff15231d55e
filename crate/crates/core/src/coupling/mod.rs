//! Bernoulli-part extraction.
//!
//! A law `f` on `v0 + D * Z` is split as `X = V + eps * D * L`, where `L` is a
//! fair Bernoulli variable independent of the pair `(V, eps)`:
//!
//! ```text
//! P{(V, eps) = (v_k, 1)} = tau_k
//! P{(V, eps) = (v_k, 0)} = f(k) - (tau_{k-1} + tau_k) / 2 = mu_k
//! ```
//!
//! The sequences are tied together by `(tau_{k-1} + tau_k) / 2 = f(k) - mu_k`
//! and the Bernoulli mass is `vartheta = sum tau_k = 1 - sum mu_k`. Everything
//! here is exact rational arithmetic; only [`CouplingSpec::joint_mgf`] and the
//! sampler work in floating point.

mod sampler;

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::lattice::LatticeLaw;
use crate::rational::{self, to_f64};
use crate::{Error, InfeasibleReason, Result};

pub use sampler::{sample_coupled_paths, ChiSquare, PathSummary, GENERATOR, PATHS_PER_STREAM};

/// Non-negative weights `mu_k` attached to the support of a law.
#[derive(Debug, Clone, PartialEq)]
pub struct MuSequence {
    v0: i64,
    span: u64,
    mu: Vec<(i64, BigRational)>,
    total: BigRational,
}

impl MuSequence {
    /// Validates `0 < mu_k < f(k)` on the support, `mu_k = 0` off it, and
    /// `1 - mu < vartheta_X`.
    pub fn new(law: &LatticeLaw, mu: impl IntoIterator<Item = (i64, BigRational)>) -> Result<Self> {
        let seq = Self::assemble(law, mu)?;
        for (k, m) in &seq.mu {
            let f = law.prob(*k);
            if !(m.is_positive() && *m < f) {
                return Err(Error::domain(
                    "mu",
                    format!("mu_{k} = {m} must lie strictly between 0 and f({k}) = {f}"),
                ));
            }
        }
        let vartheta_x = law.theta_characteristic();
        let mass = BigRational::one() - &seq.total;
        if mass >= vartheta_x {
            return Err(Error::domain(
                "mu",
                format!("1 - mu = {mass} must be below vartheta_X = {vartheta_x}"),
            ));
        }
        Ok(seq)
    }

    /// Only requires `0 <= mu_k <= f(k)`. Admits boundary cases such as
    /// `mu = 0` for the fair Bernoulli law, which makes `V = 0, eps = 1`.
    pub fn new_relaxed(
        law: &LatticeLaw,
        mu: impl IntoIterator<Item = (i64, BigRational)>,
    ) -> Result<Self> {
        let seq = Self::assemble(law, mu)?;
        for (k, m) in &seq.mu {
            let f = law.prob(*k);
            if m.is_negative() || *m > f {
                return Err(Error::domain(
                    "mu",
                    format!("mu_{k} = {m} must lie in [0, f({k}) = {f}]"),
                ));
            }
        }
        Ok(seq)
    }

    fn assemble(law: &LatticeLaw, mu: impl IntoIterator<Item = (i64, BigRational)>) -> Result<Self> {
        let mut given: BTreeMap<i64, BigRational> = BTreeMap::new();
        for (k, m) in mu {
            if given.insert(k, m).is_some() {
                return Err(Error::domain("mu", format!("duplicate index {k}")));
            }
        }
        let mut entries = Vec::with_capacity(law.len());
        for k in law.support() {
            entries.push((k, given.remove(&k).unwrap_or_else(BigRational::zero)));
        }
        if let Some((k, m)) = given.into_iter().find(|(_, m)| !m.is_zero()) {
            return Err(Error::domain(
                "mu",
                format!("mu_{k} = {m} but f({k}) = 0"),
            ));
        }
        let total = entries.iter().map(|(_, m)| m).sum();
        Ok(MuSequence {
            v0: law.v0(),
            span: law.span(),
            mu: entries,
            total,
        })
    }

    /// The default construction: `tau_k = (mass / vartheta_X) (f(k) ∧ f(k+1))`,
    /// then `mu_k = f(k) - (tau_{k-1} + tau_k) / 2`. Needs
    /// `0 < mass < vartheta_X`.
    pub fn default_for(law: &LatticeLaw, mass: &BigRational) -> Result<Self> {
        if law.is_degenerate() {
            return Err(Error::DegenerateLaw {
                value: law.value(law.min_index()),
            });
        }
        if !mass.is_positive() {
            return Err(Error::domain("mass", format!("{mass} must be positive")));
        }
        let vartheta_x = law.theta_characteristic();
        if *mass >= vartheta_x {
            return Err(Error::Strictness {
                mass: mass.to_string(),
                vartheta_x: vartheta_x.to_string(),
            });
        }
        let scale = mass / &vartheta_x;
        let tau = |k: i64| scale.clone() * rational::min(&law.prob(k), &law.prob(k + 1));
        let half = rational::ratio(1, 2);
        let mu = law
            .probs()
            .iter()
            .map(|(k, f)| (*k, f - (tau(k - 1) + tau(*k)) * &half))
            .collect::<Vec<_>>();
        MuSequence::new(law, mu)
    }

    pub fn get(&self, k: i64) -> BigRational {
        self.mu
            .binary_search_by_key(&k, |(i, _)| *i)
            .map(|pos| self.mu[pos].1.clone())
            .unwrap_or_else(|_| BigRational::zero())
    }

    /// `(index, mu_k)` over the support of the law it was built for.
    pub fn entries(&self) -> &[(i64, BigRational)] {
        &self.mu
    }

    pub fn total(&self) -> &BigRational {
        &self.total
    }

    pub fn v0(&self) -> i64 {
        self.v0
    }

    pub fn span(&self) -> u64 {
        self.span
    }

    pub fn value(&self, k: i64) -> i64 {
        self.v0 + self.span as i64 * k
    }
}

/// Non-negative `tau_k` on a contiguous index range.
#[derive(Debug, Clone, PartialEq)]
pub struct TauSequence {
    first: i64,
    tau: Vec<BigRational>,
    mass: BigRational,
}

impl TauSequence {
    /// Any non-negative sequence; whether it fits a law is checked by
    /// [`CouplingSpec::build`].
    pub fn new(entries: impl IntoIterator<Item = (i64, BigRational)>) -> Result<Self> {
        let map: BTreeMap<i64, BigRational> = entries.into_iter().collect();
        if let Some((k, t)) = map.iter().find(|(_, t)| t.is_negative()) {
            return Err(Error::domain("tau", format!("tau_{k} = {t} is negative")));
        }
        let first = map.keys().next().copied().unwrap_or(0);
        let last = map.keys().next_back().copied().unwrap_or(-1);
        let len = (last - first + 1).max(0) as usize;
        let mut tau = vec![BigRational::zero(); len];
        for (k, t) in map {
            tau[(k - first) as usize] = t;
        }
        Ok(TauSequence::from_dense(first, tau))
    }

    fn from_dense(first: i64, tau: Vec<BigRational>) -> Self {
        let mass = tau.iter().sum();
        TauSequence { first, tau, mass }
    }

    pub fn get(&self, k: i64) -> BigRational {
        let i = k - self.first;
        if i < 0 || i as usize >= self.tau.len() {
            BigRational::zero()
        } else {
            self.tau[i as usize].clone()
        }
    }

    /// `sum_k tau_k`.
    pub fn mass(&self) -> &BigRational {
        &self.mass
    }

    /// Nonzero `(index, tau_k)` pairs.
    pub fn nonzero(&self) -> impl Iterator<Item = (i64, &BigRational)> + '_ {
        self.tau
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.is_zero())
            .map(move |(i, t)| (self.first + i as i64, t))
    }

    fn index_range(&self) -> Option<(i64, i64)> {
        let mut it = self.nonzero().map(|(k, _)| k);
        let lo = it.next()?;
        Some((lo, it.last().unwrap_or(lo)))
    }
}

/// Solves `(tau_{k-1} + tau_k) / 2 = f(k) - mu_k` by the forward recursion
/// `tau_k = x_k - tau_{k-1}` with `x_k = 2 (f(k) - mu_k)` and `tau = 0` below
/// the support. The sequence must stay non-negative and vanish at the right
/// edge of the support.
pub fn solve_tau(law: &LatticeLaw, mu: &MuSequence) -> Result<TauSequence> {
    let two = rational::int(2);
    let (kmin, kmax) = (law.min_index(), law.max_index());
    let support: Vec<i64> = law.support().collect();
    let mut tau = Vec::new();
    let mut prev = BigRational::zero();
    let mut k = kmin;
    while k <= kmax {
        let x = (law.prob(k) - mu.get(k)) * &two;
        let t = x - &prev;
        if k == kmax {
            if !t.is_zero() {
                return Err(Error::InfeasibleMu {
                    index: k,
                    reason: InfeasibleReason::RightEdgeResidual(t.to_string()),
                });
            }
            break;
        }
        if t.is_negative() {
            return Err(Error::InfeasibleMu {
                index: k,
                reason: InfeasibleReason::NegativeTau(t.to_string()),
            });
        }
        tau.push(t.clone());
        prev = t;
        k += 1;
        // Inside a gap of the support with tau back at zero nothing changes
        // until the next support point.
        if prev.is_zero() && law.prob(k).is_zero() {
            let next = support[support.partition_point(|&s| s < k)];
            tau.resize(tau.len() + (next - k) as usize, BigRational::zero());
            k = next;
        }
    }
    Ok(TauSequence::from_dense(kmin, tau))
}

/// One atom of the joint law of `(V, eps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAtom {
    pub index: i64,
    pub eps: bool,
    pub prob: BigRational,
}

/// The full decomposition of a law: `mu`, `tau`, the joint law of `(V, eps)`
/// and the auxiliary law `P{X~ = v_k} = tau_k / vartheta`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpec {
    base: LatticeLaw,
    mu: MuSequence,
    tau: TauSequence,
    joint: Vec<JointAtom>,
    tilde: LatticeLaw,
}

impl CouplingSpec {
    /// `default_mu`, then `solve_tau`, then `build`.
    pub fn from_mass(law: &LatticeLaw, mass: &BigRational) -> Result<Self> {
        let mu = MuSequence::default_for(law, mass)?;
        Self::from_mu(law, mu)
    }

    pub fn from_mu(law: &LatticeLaw, mu: MuSequence) -> Result<Self> {
        let tau = solve_tau(law, &mu)?;
        Self::build(law, tau, mu)
    }

    /// Starts from a `tau` satisfying `tau_{k-1} + tau_k <= 2 f(k)` and derives
    /// `mu_k = f(k) - (tau_{k-1} + tau_k) / 2`.
    pub fn from_tau(law: &LatticeLaw, tau: TauSequence) -> Result<Self> {
        let half = rational::ratio(1, 2);
        let mu: Vec<_> = law
            .probs()
            .iter()
            .map(|(k, f)| (*k, f - (tau.get(k - 1) + tau.get(*k)) * &half))
            .collect();
        let mu = MuSequence::new_relaxed(law, mu).map_err(|e| {
            Error::InconsistentCoupling(format!("tau violates tau_(k-1) + tau_k <= 2 f(k): {e}"))
        })?;
        Self::build(law, tau, mu)
    }

    /// Checks `(tau_{k-1} + tau_k) / 2 = f(k) - mu_k` everywhere, assembles the
    /// joint table and verifies its marginals.
    pub fn build(law: &LatticeLaw, tau: TauSequence, mu: MuSequence) -> Result<Self> {
        if mu.v0 != law.v0() || mu.span != law.span() {
            return Err(Error::InconsistentCoupling(
                "mu was built for a different lattice".into(),
            ));
        }
        let Some((tlo, thi)) = tau.index_range() else {
            return Err(Error::InconsistentCoupling(
                "tau vanishes identically; the Bernoulli mass must be positive".into(),
            ));
        };
        let half = rational::ratio(1, 2);
        let lo = law.min_index().min(tlo);
        let hi = law.max_index().max(thi + 1);
        // only indices where f, mu or tau can be nonzero need checking
        let mut checks: Vec<i64> = law
            .support()
            .chain(tau.nonzero().flat_map(|(k, _)| [k, k + 1]))
            .filter(|k| (lo..=hi).contains(k))
            .collect();
        checks.sort_unstable();
        checks.dedup();
        for &k in &checks {
            let lhs = (tau.get(k - 1) + tau.get(k)) * &half;
            let rhs = law.prob(k) - mu.get(k);
            if lhs != rhs {
                return Err(Error::InconsistentCoupling(format!(
                    "at index {k}: (tau_(k-1) + tau_k)/2 = {lhs} but f(k) - mu_k = {rhs}"
                )));
            }
        }

        let mut joint = Vec::new();
        for &k in &checks {
            let t = tau.get(k);
            if !t.is_zero() {
                joint.push(JointAtom { index: k, eps: true, prob: t });
            }
            let m = law.prob(k) - (tau.get(k - 1) + tau.get(k)) * &half;
            if m.is_negative() {
                return Err(Error::InconsistentCoupling(format!(
                    "P{{(V, eps) = (v_{k}, 0)}} = {m} is negative"
                )));
            }
            if !m.is_zero() {
                joint.push(JointAtom { index: k, eps: false, prob: m });
            }
        }
        joint.sort_by_key(|a| (a.index, a.eps));

        let mass = tau.mass().clone();
        let total: BigRational = joint.iter().map(|a| &a.prob).sum();
        let eps_mass: BigRational = joint.iter().filter(|a| a.eps).map(|a| &a.prob).sum();
        if total != law.probs().iter().map(|(_, p)| p).sum::<BigRational>() || eps_mass != mass {
            return Err(Error::InconsistentCoupling(format!(
                "joint mass {total}, P{{eps = 1}} = {eps_mass}, vartheta = {mass}"
            )));
        }
        for &k in &checks {
            let v: BigRational = joint
                .iter()
                .filter(|a| a.index == k)
                .map(|a| &a.prob)
                .sum();
            let expect = law.prob(k) + (tau.get(k) - tau.get(k - 1)) * &half;
            if v != expect {
                return Err(Error::InconsistentCoupling(format!(
                    "P{{V = v_{k}}} = {v}, expected {expect}"
                )));
            }
        }

        let tilde = LatticeLaw::from_sorted_unchecked(
            law.v0(),
            law.span(),
            tau.nonzero().map(|(k, t)| (k, t / &mass)).collect(),
            law.precision(),
        );
        Ok(CouplingSpec {
            base: law.clone(),
            mu,
            tau,
            joint,
            tilde,
        })
    }

    pub fn base(&self) -> &LatticeLaw {
        &self.base
    }

    pub fn mu(&self) -> &MuSequence {
        &self.mu
    }

    pub fn tau(&self) -> &TauSequence {
        &self.tau
    }

    /// Nonzero atoms of the joint law, ordered by `(index, eps)`.
    pub fn joint(&self) -> &[JointAtom] {
        &self.joint
    }

    pub fn joint_prob(&self, k: i64, eps: bool) -> BigRational {
        self.joint
            .iter()
            .find(|a| a.index == k && a.eps == eps)
            .map(|a| a.prob.clone())
            .unwrap_or_else(BigRational::zero)
    }

    /// Law of `X~`.
    pub fn tilde(&self) -> &LatticeLaw {
        &self.tilde
    }

    /// The Bernoulli mass `vartheta = sum tau_k = P{eps = 1}`.
    pub fn mass(&self) -> &BigRational {
        self.tau.mass()
    }

    pub fn mass_f64(&self) -> f64 {
        to_f64(self.mass())
    }

    /// Marginal law of `V`.
    pub fn v_marginal(&self) -> LatticeLaw {
        let mut acc: BTreeMap<i64, BigRational> = BTreeMap::new();
        for a in &self.joint {
            *acc.entry(a.index).or_insert_with(BigRational::zero) += &a.prob;
        }
        LatticeLaw::from_sorted_unchecked(
            self.base.v0(),
            self.base.span(),
            acc.into_iter().filter(|(_, p)| !p.is_zero()).collect(),
            self.base.precision(),
        )
    }

    /// Law of `Z = V + eps * D * L` with `L` an independent fair Bernoulli
    /// variable, assembled atom by atom from the joint table. Equals the base
    /// law exactly for a valid coupling.
    pub fn verify_coupling_identity(&self) -> LatticeLaw {
        let half = rational::ratio(1, 2);
        let mut acc: BTreeMap<i64, BigRational> = BTreeMap::new();
        for a in &self.joint {
            for l in [false, true] {
                let target = a.index + i64::from(a.eps && l);
                *acc.entry(target).or_insert_with(BigRational::zero) += &a.prob * &half;
            }
        }
        LatticeLaw::from_sorted_unchecked(
            self.base.v0(),
            self.base.span(),
            acc.into_iter().filter(|(_, p)| !p.is_zero()).collect(),
            self.base.precision(),
        )
    }

    /// `E exp(a V + b eps) = sum_k tau_k e^{a v_k + b} + mu_k e^{a v_k}`.
    pub fn joint_mgf(&self, a: Complex64, b: Complex64) -> Complex64 {
        self.joint
            .iter()
            .map(|atom| {
                let v = self.base.value(atom.index) as f64;
                let exponent = a * v + if atom.eps { b } else { Complex64::new(0.0, 0.0) };
                to_f64(&atom.prob) * exponent.exp()
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn law_t() -> LatticeLaw {
        LatticeLaw::new(0, 1, [(0, ratio(1, 2)), (1, ratio(3, 10)), (2, ratio(1, 5))]).unwrap()
    }

    #[test]
    fn default_mu_for_t() {
        let mu = MuSequence::default_for(&law_t(), &ratio(2, 5)).unwrap();
        assert_eq!(mu.get(0), ratio(19, 50));
        assert_eq!(mu.get(1), ratio(1, 10));
        assert_eq!(mu.get(2), ratio(3, 25));
        assert_eq!(*mu.total(), ratio(3, 5));
    }

    #[test]
    fn default_mu_for_bernoulli() {
        let mu = MuSequence::default_for(&LatticeLaw::bernoulli(), &ratio(2, 5)).unwrap();
        assert_eq!(mu.get(0), ratio(3, 10));
        assert_eq!(mu.get(1), ratio(3, 10));
    }

    #[test]
    fn default_mu_domain_errors() {
        let t = law_t();
        assert!(matches!(
            MuSequence::default_for(&t, &ratio(1, 2)),
            Err(Error::Strictness { .. })
        ));
        assert!(matches!(
            MuSequence::default_for(&t, &ratio(0, 1)),
            Err(Error::Domain { .. })
        ));
        let point = LatticeLaw::new(0, 1, [(0, ratio(1, 1))]).unwrap();
        assert!(matches!(
            MuSequence::default_for(&point, &ratio(1, 10)),
            Err(Error::DegenerateLaw { .. })
        ));
    }

    #[test]
    fn solve_tau_for_t() {
        let t = law_t();
        let mu = MuSequence::new(&t, [(0, ratio(19, 50)), (1, ratio(1, 10)), (2, ratio(3, 25))])
            .unwrap();
        let tau = solve_tau(&t, &mu).unwrap();
        assert_eq!(tau.get(0), ratio(6, 25));
        assert_eq!(tau.get(1), ratio(4, 25));
        assert_eq!(tau.get(2), ratio(0, 1));
        assert_eq!(*tau.mass(), ratio(2, 5));
    }

    #[test]
    fn solve_tau_for_bernoulli() {
        let b = LatticeLaw::bernoulli();
        let mu = MuSequence::new(&b, [(0, ratio(3, 10)), (1, ratio(3, 10))]).unwrap();
        let tau = solve_tau(&b, &mu).unwrap();
        assert_eq!(tau.get(0), ratio(2, 5));
        assert_eq!(tau.nonzero().count(), 1);
    }

    #[test]
    fn solve_tau_rejects_infeasible_mu() {
        let b = LatticeLaw::bernoulli();
        let mu = MuSequence::new_relaxed(&b, [(0, ratio(1, 5)), (1, ratio(3, 10))]).unwrap();
        let err = solve_tau(&b, &mu).unwrap_err();
        assert!(matches!(
            err,
            Error::InfeasibleMu { index: 1, reason: InfeasibleReason::RightEdgeResidual(_) }
        ));
        // a negative tau strictly inside the support
        let u = LatticeLaw::uniform(0, 1, &[0, 1, 2]).unwrap();
        let mu = MuSequence::new_relaxed(&u, [(1, ratio(1, 3))]).unwrap();
        let err = solve_tau(&u, &mu).unwrap_err();
        assert!(matches!(
            err,
            Error::InfeasibleMu { index: 1, reason: InfeasibleReason::NegativeTau(_) }
        ));
    }

    #[test]
    fn mu_validation() {
        let t = law_t();
        // mu_k must be strictly below f(k)
        assert!(MuSequence::new(&t, [(0, ratio(1, 2)), (1, ratio(1, 10)), (2, ratio(1, 10))]).is_err());
        // off-support weight
        assert!(MuSequence::new(&t, [(0, ratio(1, 4)), (1, ratio(1, 10)), (2, ratio(1, 10)), (5, ratio(1, 100))]).is_err());
        // 1 - mu >= vartheta_X
        assert!(MuSequence::new(&t, [(0, ratio(1, 10)), (1, ratio(1, 10)), (2, ratio(1, 10))]).is_err());
    }

    #[test]
    fn bernoulli_joint_table() {
        let spec = CouplingSpec::from_mass(&LatticeLaw::bernoulli(), &ratio(2, 5)).unwrap();
        let atoms: Vec<_> = spec.joint().iter().map(|a| (a.index, a.eps, a.prob.clone())).collect();
        assert_eq!(
            atoms,
            vec![
                (0, false, ratio(3, 10)),
                (0, true, ratio(2, 5)),
                (1, false, ratio(3, 10)),
            ]
        );
        assert_eq!(spec.verify_coupling_identity(), LatticeLaw::bernoulli());
    }

    #[test]
    fn t_tilde_law() {
        let spec = CouplingSpec::from_mass(&law_t(), &ratio(2, 5)).unwrap();
        let expect = LatticeLaw::new(0, 1, [(0, ratio(3, 5)), (1, ratio(2, 5))]).unwrap();
        assert_eq!(spec.tilde(), &expect);
        assert_eq!(spec.verify_coupling_identity(), law_t());
        let eps: BigRational = spec.joint().iter().filter(|a| a.eps).map(|a| &a.prob).sum();
        assert_eq!(&eps, spec.mass());
    }

    #[test]
    fn zero_tau_rejected() {
        let b = LatticeLaw::bernoulli();
        let tau = TauSequence::new(std::iter::empty()).unwrap();
        assert!(matches!(
            CouplingSpec::from_tau(&b, tau),
            Err(Error::InconsistentCoupling(_))
        ));
    }

    #[test]
    fn bernoulli_boundary_coupling() {
        let b = LatticeLaw::bernoulli();
        let mu = MuSequence::new_relaxed(&b, std::iter::empty()).unwrap();
        let spec = CouplingSpec::from_mu(&b, mu).unwrap();
        assert_eq!(*spec.mass(), ratio(1, 1));
        assert_eq!(spec.joint().len(), 1);
        assert_eq!(spec.verify_coupling_identity(), b);
    }

    #[test]
    fn build_rejects_mismatched_tau() {
        let t = law_t();
        let mu = MuSequence::default_for(&t, &ratio(2, 5)).unwrap();
        let tau = TauSequence::new([(0, ratio(1, 5)), (1, ratio(1, 5))]).unwrap();
        assert!(matches!(
            CouplingSpec::build(&t, tau, mu),
            Err(Error::InconsistentCoupling(_))
        ));
    }

    #[test]
    fn joint_mgf_examples() {
        let spec = CouplingSpec::from_mass(&law_t(), &ratio(2, 5)).unwrap();
        let zero = Complex64::new(0.0, 0.0);
        assert!((spec.joint_mgf(zero, zero) - 1.0).norm() < 1e-15);

        let bern = CouplingSpec::from_mass(&LatticeLaw::bernoulli(), &ratio(2, 5)).unwrap();
        for (a, b) in [(0.3, -0.2), (-1.0, 0.7)] {
            let a = Complex64::new(a, 0.4);
            let b = Complex64::new(b, -0.1);
            let expect = 0.4 * b.exp() + 0.3 * (1.0 + a.exp());
            assert!((bern.joint_mgf(a, b) - expect).norm() < 1e-14);
        }

        let vm = spec.v_marginal();
        for &t in &[0.1, 0.33, 0.5, 0.8] {
            let a = Complex64::new(0.0, 2.0 * PI * t);
            assert!((spec.joint_mgf(a, zero) - vm.char_function(t)).norm() < 1e-14);
        }
    }

    /// (5.6): tau_{2j} = sum_{l<=j} (x_{2l} - x_{2l-1}), tau_{2j+1} =
    /// sum_{l<=j} (x_{2l+1} - x_{2l}), x_u = 2 (f(u) - mu_u).
    fn alternating_solution(law: &LatticeLaw, mu: &MuSequence, m: i64) -> BigRational {
        let x = |u: i64| (law.prob(u) - mu.get(u)) * rational::int(2);
        let lo = law.min_index() - 2;
        let mut acc = BigRational::zero();
        if m.rem_euclid(2) == 0 {
            let j = m.div_euclid(2);
            for l in lo.div_euclid(2)..=j {
                acc += x(2 * l) - x(2 * l - 1);
            }
        } else {
            let j = (m - 1).div_euclid(2);
            for l in lo.div_euclid(2)..=j {
                acc += x(2 * l + 1) - x(2 * l);
            }
        }
        acc
    }

    prop_compose! {
        fn arb_law()(weights in prop::collection::vec(1u32..20, 2..7), start in -4i64..4)
            -> LatticeLaw {
            let total: u32 = weights.iter().sum();
            LatticeLaw::new(0, 1, weights.iter().enumerate()
                .map(|(i, &w)| (start + i as i64, ratio(w as i64, total as i64)))).unwrap()
        }
    }

    proptest! {
        #[test]
        fn coupling_identity_is_exact(law in arb_law(), frac in 1u32..99) {
            let mass = law.theta_characteristic() * ratio(frac as i64, 100);
            let spec = CouplingSpec::from_mass(&law, &mass).unwrap();
            prop_assert_eq!(spec.verify_coupling_identity(), law.clone());
            prop_assert_eq!(spec.mass() + spec.mu().total(), ratio(1, 1));
            for (k, f) in law.probs() {
                prop_assert!(spec.tau().get(k - 1) + spec.tau().get(*k) <= f * rational::int(2));
            }
        }

        #[test]
        fn default_mu_reproduces_tau(law in arb_law(), frac in 1u32..99) {
            let mass = law.theta_characteristic() * ratio(frac as i64, 100);
            let mu = MuSequence::default_for(&law, &mass).unwrap();
            let tau = solve_tau(&law, &mu).unwrap();
            let scale = &mass / law.theta_characteristic();
            for k in law.min_index() - 1..=law.max_index() + 1 {
                let expect = &scale * rational::min(&law.prob(k), &law.prob(k + 1));
                prop_assert_eq!(tau.get(k), expect);
                prop_assert_eq!(tau.get(k), alternating_solution(&law, &mu, k));
            }
        }
    }
}

//! Monte Carlo paths of the coupled representation
//! `S_n = W_n + D * M_n`, `W_n = sum V_j`, `B_n = sum eps_j`, `M_n = sum eps_j L_j`.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CouplingSpec;
use crate::exactprob::SumDistribution;
use crate::rational::to_f64;
use crate::{Error, Exec, Result};

/// Generator identifier recorded in every [`PathSummary`].
pub const GENERATOR: &str = "chacha8 (rand_chacha 0.9), seed_from_u64(seed), stream = block index";

/// Paths drawn from one ChaCha stream. Block `b` always uses stream `b`, so
/// the summary does not depend on how blocks are spread over threads.
pub const PATHS_PER_STREAM: u64 = 4096;

/// Largest `n * (support width)` for which the exact law of `S_n` is
/// assembled for the chi-square statistic.
const CHI_SQUARE_WIDTH_LIMIT: u64 = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    /// Cells after pooling those with expected count below 5.
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSummary {
    pub n: u64,
    pub count: u64,
    pub seed: u64,
    pub generator: &'static str,
    /// Observed values of `S_n` and their counts.
    pub sum_counts: BTreeMap<i64, u64>,
    /// `bernoulli_counts[b]` paths had `B_n = b`.
    pub bernoulli_counts: Vec<u64>,
    /// Goodness of fit of `S_n` against its exact law, when that law is small
    /// enough to assemble.
    pub chi_square: Option<ChiSquare>,
}

impl PathSummary {
    pub fn mean_b(&self) -> f64 {
        let total: f64 = self
            .bernoulli_counts
            .iter()
            .enumerate()
            .map(|(b, &c)| b as f64 * c as f64)
            .sum();
        total / self.count as f64
    }

    /// Standard error of [`PathSummary::mean_b`].
    pub fn b_std_error(&self) -> f64 {
        let mean = self.mean_b();
        let ss: f64 = self
            .bernoulli_counts
            .iter()
            .enumerate()
            .map(|(b, &c)| c as f64 * (b as f64 - mean).powi(2))
            .sum();
        let var = ss / (self.count.max(2) - 1) as f64;
        (var / self.count as f64).sqrt()
    }

    /// Empirical `P{d | S_n + u}`.
    pub fn frequency_divisible(&self, d: u64, u: u64) -> f64 {
        let hits: u64 = self
            .sum_counts
            .iter()
            .filter(|(&s, _)| (s as i128 + u as i128).rem_euclid(d as i128) == 0)
            .map(|(_, &c)| c)
            .sum();
        hits as f64 / self.count as f64
    }
}

struct Block {
    sums: BTreeMap<i64, u64>,
    bernoulli: Vec<u64>,
}

/// Draws `count` independent paths of `(V_j, eps_j, L_j)_{j <= n}`.
/// Deterministic in `(seed, count)` whatever the execution strategy.
pub fn sample_coupled_paths(
    spec: &CouplingSpec,
    n: u64,
    count: u64,
    seed: u64,
    exec: Exec,
) -> Result<PathSummary> {
    if n == 0 {
        return Err(Error::domain("n", "must be at least 1"));
    }
    if count == 0 {
        return Err(Error::domain("count", "must be at least 1"));
    }
    let law = spec.base();
    let atoms = spec.joint();
    let weights: Vec<f64> = atoms.iter().map(|a| to_f64(&a.prob)).collect();
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| Error::InconsistentCoupling(format!("joint table not samplable: {e}")))?;
    let steps: Vec<(i64, bool)> = atoms.iter().map(|a| (law.value(a.index), a.eps)).collect();
    let span = law.span() as i64;

    let blocks: Vec<u64> = (0..count.div_ceil(PATHS_PER_STREAM)).collect();
    let parts = exec.map(&blocks, |&b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b);
        let paths = PATHS_PER_STREAM.min(count - b * PATHS_PER_STREAM);
        let mut block = Block {
            sums: BTreeMap::new(),
            bernoulli: vec![0; n as usize + 1],
        };
        for _ in 0..paths {
            let (mut s, mut bn) = (0i64, 0usize);
            for _ in 0..n {
                let (v, eps) = steps[dist.sample(&mut rng)];
                let l: bool = rng.random();
                s += v;
                if eps {
                    bn += 1;
                    if l {
                        s += span;
                    }
                }
            }
            *block.sums.entry(s).or_insert(0) += 1;
            block.bernoulli[bn] += 1;
        }
        block
    });

    let mut sum_counts = BTreeMap::new();
    let mut bernoulli_counts = vec![0u64; n as usize + 1];
    for part in parts {
        for (s, c) in part.sums {
            *sum_counts.entry(s).or_insert(0) += c;
        }
        for (acc, c) in bernoulli_counts.iter_mut().zip(part.bernoulli) {
            *acc += c;
        }
    }

    let width = (law.max_index() - law.min_index()) as u64 + 1;
    let chi_square = (n.saturating_mul(width) <= CHI_SQUARE_WIDTH_LIMIT)
        .then(|| chi_square(&SumDistribution::of(law, n), &sum_counts, count));

    Ok(PathSummary {
        n,
        count,
        seed,
        generator: GENERATOR,
        sum_counts,
        bernoulli_counts,
        chi_square,
    })
}

fn chi_square(exact: &SumDistribution, observed: &BTreeMap<i64, u64>, count: u64) -> ChiSquare {
    let total = count as f64;
    let (mut statistic, mut cells) = (0.0, 0usize);
    let (mut pooled_e, mut pooled_o) = (0.0, 0.0);
    for (value, p) in exact.iter() {
        let e = p * total;
        let o = observed.get(&value).copied().unwrap_or(0) as f64;
        if e < 5.0 {
            pooled_e += e;
            pooled_o += o;
        } else {
            statistic += (o - e).powi(2) / e;
            cells += 1;
        }
    }
    // values outside the exact support (there should be none) land in the pool
    let in_support: u64 = exact
        .iter()
        .filter_map(|(v, _)| observed.get(&v).copied())
        .sum();
    pooled_o += (count - in_support) as f64;
    if pooled_e > 0.0 {
        statistic += (pooled_o - pooled_e).powi(2) / pooled_e;
        cells += 1;
    }
    ChiSquare {
        statistic,
        dof: cells.saturating_sub(1),
        cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeLaw;
    use crate::rational::ratio;

    fn bernoulli_spec() -> CouplingSpec {
        CouplingSpec::from_mass(&LatticeLaw::bernoulli(), &ratio(2, 5)).unwrap()
    }

    #[test]
    fn reproducible_across_strategies() {
        let spec = bernoulli_spec();
        let a = sample_coupled_paths(&spec, 7, 10_000, 42, Exec::Sequential).unwrap();
        let b = sample_coupled_paths(&spec, 7, 10_000, 42, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        let c = sample_coupled_paths(&spec, 7, 10_000, 43, Exec::Parallel).unwrap();
        assert_ne!(a.sum_counts, c.sum_counts);
    }

    #[test]
    fn even_sums_have_frequency_one_half() {
        let s = sample_coupled_paths(&bernoulli_spec(), 10, 100_000, 7, Exec::Parallel).unwrap();
        assert!((s.frequency_divisible(2, 0) - 0.5).abs() < 0.01);
        let expect = 10.0 * 0.4;
        assert!((s.mean_b() - expect).abs() < 4.0 * s.b_std_error());
    }

    #[test]
    fn single_step_matches_base_law() {
        let t = LatticeLaw::new(0, 1, [(0, ratio(1, 2)), (1, ratio(3, 10)), (2, ratio(1, 5))])
            .unwrap();
        let spec = CouplingSpec::from_mass(&t, &ratio(2, 5)).unwrap();
        let s = sample_coupled_paths(&spec, 1, 50_000, 1, Exec::Parallel).unwrap();
        let chi = s.chi_square.unwrap();
        assert_eq!(chi.dof, 2);
        // 99.9% quantile of chi-square with 2 degrees of freedom
        assert!(chi.statistic < 13.82, "{chi:?}");
    }

    #[test]
    fn rejects_empty_requests() {
        let spec = bernoulli_spec();
        assert!(sample_coupled_paths(&spec, 0, 10, 1, Exec::Sequential).is_err());
        assert!(sample_coupled_paths(&spec, 3, 0, 1, Exec::Sequential).is_err());
    }
}

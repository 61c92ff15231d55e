//! Acceptance suite. Prints one `[PASS]` / `[FAIL]` line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semilocal_core::bounds::{
    chernoff_vs_exact, holder_power_check, psi, smallcase_regimes, solve_theta, verify_regime,
    Regime, THETA_ROOT_TOLERANCE,
};
use semilocal_core::coupling::CouplingSpec;
use semilocal_core::divisorsets::{
    binomial_series_limit, binomial_series_partial, c1, remark52_sum, series_bound_rhs,
    series_of_sups, DivisorTestSet,
};
use semilocal_core::exactprob::{
    bernoulli_closed_form, enumerate_oracle, prob_divisible_charsum, prob_divisible_convolution,
    prob_divisible_convolution_exact, DEFAULT_ENUMERATION_CAP,
};
use semilocal_core::lattice::LatticeLaw;
use semilocal_core::rational::{ratio, to_f64};
use semilocal_core::semilocal::{bernoulli_limit_check, discrepancy_scan, BoundShape};
use semilocal_core::theta::{
    bernoulli_theta_discrepancy, gaussian_residue_sum, theta_tail_bound, theta_u,
};
use semilocal_core::{DivisibilityQuery, Exec};

struct Outcome {
    pass: bool,
    summary: String,
}

type Check = Result<Outcome, String>;

fn outcome(pass: bool, summary: impl Into<String>) -> Check {
    Ok(Outcome {
        pass,
        summary: summary.into(),
    })
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn q(n: u64, d: u64, u: u64) -> DivisibilityQuery {
    DivisibilityQuery::new(n, d, u).expect("valid query")
}

fn law_t() -> LatticeLaw {
    LatticeLaw::new(0, 1, [(0, ratio(1, 2)), (1, ratio(3, 10)), (2, ratio(1, 5))]).unwrap()
}

fn random_law(rng: &mut ChaCha8Rng, max_support: usize, unit_span: bool) -> LatticeLaw {
    let k = rng.random_range(1..=max_support);
    let weights: Vec<i64> = (0..k).map(|_| rng.random_range(1..=20)).collect();
    let total: i64 = weights.iter().sum();
    let (v0, span) = if unit_span {
        (0, 1)
    } else {
        (rng.random_range(-3..=3), rng.random_range(1..=3))
    };
    let first = rng.random_range(-2..=2);
    LatticeLaw::new(
        v0,
        span,
        weights
            .iter()
            .enumerate()
            .map(|(i, &w)| (first + i as i64, ratio(w, total))),
    )
    .unwrap()
}

fn oracle_triple() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_101);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let law = random_law(&mut rng, 5, false);
        // keep |support|^n at or below 1e5
        let n_cap = if law.len() == 1 {
            12
        } else {
            (1e5f64.ln() / (law.len() as f64).ln()).floor() as u64
        };
        let n = rng.random_range(1..=n_cap.min(12));
        let d = rng.random_range(2..=20);
        let u = rng.random_range(0..=10);
        let query = q(n, d, u);
        let exact = prob_divisible_convolution_exact(&law, &query);
        let enumerated = enumerate_oracle(&law, &query, DEFAULT_ENUMERATION_CAP).map_err(err)?;
        if enumerated != exact {
            return outcome(
                false,
                format!("instance {i}: enumeration {enumerated} != convolution {exact}"),
            );
        }
        let c = prob_divisible_charsum(&law, &query).map_err(err)?;
        worst = worst.max((c - to_f64(&exact)).abs());
    }
    outcome(
        worst <= 1e-11,
        format!("200 instances, enumeration = convolution exactly, max |charsum - convolution| = {worst:.2e}"),
    )
}

fn closed_form() -> Check {
    let coin = LatticeLaw::bernoulli();
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in 1..=64 {
        for d in 2..=40 {
            for u in [0, 1, 7, 1_000_000] {
                let query = q(n, d, u);
                let diff = (bernoulli_closed_form(&query)
                    - prob_divisible_convolution(&coin, &query))
                .abs();
                worst = worst.max(diff);
                count += 1;
            }
        }
    }
    outcome(worst <= 1e-11, format!("{count} queries, max difference {worst:.2e}"))
}

fn theta_bridge() -> Check {
    let mut ns: Vec<u64> = (0..25)
        .map(|i| (2.0 * 250f64.powf(i as f64 / 24.0)).round() as u64)
        .collect();
    ns.dedup();
    let mut worst = 0.0f64;
    let mut count = 0;
    for d in 2..=60 {
        for &n in &ns {
            for u in [0, 1, 7] {
                let t = theta_u(d, n, u, 1e-17).map_err(err)?;
                let g = gaussian_residue_sum(d, n, u).map_err(err)?;
                worst = worst.max((t.value / d as f64 - g).abs());
                count += 1;
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!("{count} points, max |theta/d - residue sum| = {worst:.2e}"),
    )
}

fn bernoulli_decay() -> Check {
    let ns = [64u64, 128, 256, 512, 1024, 2048];
    let us = [0u64, 1, 7, 1_000_000];
    let mut table = Vec::new();
    for &n in &ns {
        let row = bernoulli_theta_discrepancy(n, n, &us, Exec::Parallel).map_err(err)?;
        table.push(row.iter().map(|r| r.sup).collect::<Vec<_>>());
    }
    let mut ok = true;
    let mut worst_ratio = 0.0f64;
    for pair in table[1..].windows(2) {
        for (next, prev) in pair[1].iter().zip(&pair[0]) {
            let r = next / prev;
            worst_ratio = worst_ratio.max(r);
            ok &= r <= 0.6;
        }
    }
    let mut worst_drift = 0.0f64;
    for row in &table {
        let m = row.iter().cloned().fold(0.0, f64::max);
        worst_drift = worst_drift.max(m / row[0]);
        ok &= m <= 3.0 * row[0];
    }
    let scaled = |n: u64, e: f64| {
        let nf = n as f64;
        e * nf.powf(1.5) / nf.ln().powf(2.5)
    };
    let c_emp: Vec<f64> = (0..us.len())
        .map(|j| {
            ns.iter()
                .zip(&table)
                .map(|(&n, row)| scaled(n, row[j]))
                .fold(0.0, f64::max)
        })
        .collect();
    let spread = c_emp.iter().cloned().fold(0.0, f64::max)
        / c_emp.iter().cloned().fold(f64::INFINITY, f64::min);
    ok &= spread < 2.0;
    for (i, &n) in ns.iter().enumerate() {
        let e0 = table[i][0];
        println!(
            "    n = {n:>4}: E_0 = {e0:.3e}, max_u E_u = {:.3e}, E_0 n^1.5 = {:.4}, E_0 n^1.5 / (log n)^2.5 = {:.5}",
            table[i].iter().cloned().fold(0.0, f64::max),
            e0 * (n as f64).powf(1.5),
            scaled(n, e0)
        );
    }
    outcome(
        ok,
        format!(
            "max E(2n)/E(n) = {worst_ratio:.3}, max_u E_u / E_0 = {worst_drift:.3}, C_emp by u = [{}], spread {spread:.3}",
            c_emp.iter().map(|c| format!("{c:.5}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn small_modulus() -> Check {
    let report = smallcase_regimes(10_000, 2.0, 1.8, 0.5, 0.5).map_err(err)?;
    let check = verify_regime(&report, Regime::Logarithmic, &[0, 5]).map_err(err)?;
    // second route at the worst modulus
    let coin = LatticeLaw::bernoulli();
    let conv = (prob_divisible_convolution(&coin, &q(10_000, check.argmax_d, check.argmax_u))
        - 1.0 / check.argmax_d as f64)
        .abs();
    let agree = (conv - check.sup_deviation).abs() <= 1e-15;
    outcome(
        report.regime_i_applicable && check.holds && agree,
        format!(
            "tau_n = {:.8} >= {:.5}, d <= {}, sup deviation {:.3e} at d = {} (convolution {:.3e}) vs n^-1.8 = {:.3e}",
            report.tau_n,
            report.tau_threshold,
            check.d_max,
            check.sup_deviation,
            check.argmax_d,
            conv,
            check.bound
        ),
    )
}

fn coupling_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut done = 0;
    while done < 100 {
        let law = random_law(&mut rng, 6, true);
        if law.theta_characteristic().is_zero() {
            continue;
        }
        let mass = law.theta_characteristic() * ratio(rng.random_range(1..=99), 100);
        let spec = CouplingSpec::from_mass(&law, &mass).map_err(err)?;
        if spec.verify_coupling_identity() != law {
            return outcome(false, format!("pair {done}: reassembled law differs"));
        }
        done += 1;
    }
    outcome(true, "100 random feasible pairs reassemble exactly")
}

fn chernoff() -> Check {
    let mut ok = true;
    let mut slack = f64::INFINITY;
    for v in [0.3, 0.5, 0.7] {
        for f in [0.25, 0.5, 0.75] {
            for n in [10, 50, 200] {
                let c = chernoff_vs_exact(v, v * f, n).map_err(err)?;
                ok &= c.holds;
                slack = slack.min(c.bound - c.exact_tail);
            }
        }
    }
    let mut worst_root = 0.0f64;
    for v in [0.1, 0.3, 0.5, 0.7, 0.9] {
        for s in [0.05, 0.3, 0.6, 0.9, 0.999] {
            let rho = 1.0 - v + s * v;
            let t = solve_theta(v, rho).map_err(err)?;
            worst_root = worst_root.max((psi(v, t).map_err(err)? - rho).abs());
        }
    }
    ok &= worst_root <= THETA_ROOT_TOLERANCE;
    let hand = psi(0.5, 0.25).map_err(err)?;
    ok &= (hand - 0.87738).abs() <= 1e-4;
    outcome(
        ok,
        format!("27 exact tails below psi^n (min slack {slack:.2e}), max |psi(theta) - rho| = {worst_root:.1e}, psi(0.5, 0.25) = {hand:.6}"),
    )
}

struct LatticeRun {
    c_emp: f64,
    theta: f64,
}

fn lattice_decay() -> Result<(Outcome, LatticeRun), String> {
    let spec = CouplingSpec::from_mass(&law_t(), &ratio(2, 5)).map_err(err)?;
    let theta = solve_theta(0.4, 0.9).map_err(err)?;
    let shape = BoundShape {
        c: 1.0,
        theta,
        rho: 0.9,
    };
    let ds: Vec<u64> = (2..=40).collect();
    let scan = discrepancy_scan(&spec, &[100, 200, 400, 800], &ds, &[0, 3], &shape, Exec::Parallel)
        .map_err(err)?;
    let sups: Vec<f64> = scan.sup_by_n.iter().map(|(_, s)| *s).collect();
    let ratios: Vec<f64> = sups.windows(2).map(|w| w[1] / w[0]).collect();
    let mut ok = ratios.iter().all(|&r| r <= 0.6);
    let mut limit_ok = true;
    for n in [10, 100, 400, 800] {
        for d in [2, 3, 7, 20, 40] {
            for u in [0, 3] {
                limit_ok &= bernoulli_limit_check(n, d, u).map_err(err)?.holds;
            }
        }
    }
    ok &= limit_ok;
    let summary = format!(
        "D(n) = [{}], ratios [{}], Bernoulli limit check {}, C_emp = {:.3e} (theta = {theta:.6})",
        sups.iter().map(|s| format!("{s:.3e}")).collect::<Vec<_>>().join(", "),
        ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", "),
        if limit_ok { "ok" } else { "failed" },
        scan.c_emp
    );
    Ok((
        Outcome { pass: ok, summary },
        LatticeRun {
            c_emp: scan.c_emp,
            theta,
        },
    ))
}

fn series(run: &LatticeRun) -> Check {
    let ts = DivisorTestSet::range(2, 40).map_err(err)?;
    let s = series_of_sups(&law_t(), &ts, 100, 800, &[0, 3], &[10, 20, 40], Exec::Parallel)
        .map_err(err)?;
    let rhs = series_bound_rhs(0.4, run.theta, 0.9, run.c_emp, 100).map_err(err)?;
    let c1 = c1();
    let ok = s.partial_sum.is_finite()
        && s.partial_sum < rhs.total
        && (c1 - 51.23).abs() <= 1e-2;
    outcome(
        ok,
        format!(
            "partial sum {:.4e} < bound {:.4} (C_1/vartheta {:.3}, C_2/theta^1.5 {:.3e}, chernoff {:.1}); C_1 = {c1:.5}",
            s.partial_sum, rhs.total, rhs.smooth_term, rhs.local_term, rhs.chernoff_term
        ),
    )
}

fn double_sum() -> Check {
    let mut worst = 0.0f64;
    for phi in [10, 50, 200] {
        let base = remark52_sum(4, phi).map_err(err)? * 2.0;
        for m in [4u64, 16, 64, 256, 1024] {
            let v = remark52_sum(m, phi).map_err(err)? * (m as f64).sqrt();
            worst = worst.max(v / base);
        }
    }
    outcome(
        worst <= 2.0,
        format!("max value(m) sqrt(m) / (2 value(4)) = {worst:.4}"),
    )
}

fn holder_and_binomial() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut margin = f64::INFINITY;
    for _ in 0..100 {
        let v: f64 = rng.random_range(0.0..=1.0);
        let d = rng.random_range(2..=60);
        let ell = rng.random_range(1..d);
        let n = rng.random_range(1..=80);
        let p = rng.random_range(2..=6);
        let (l, r) = holder_power_check(v, ell, d, n, p);
        margin = margin.min(r - l);
    }
    let mut worst = 0.0f64;
    for x in [0.3, 0.7] {
        for z in [0, 3, 10] {
            let c = binomial_series_limit(x, z);
            worst = worst.max((binomial_series_partial(x, z, 2000) - c).abs() / c);
        }
    }
    outcome(
        margin >= -1e-15 && worst <= 1e-10,
        format!("min Hölder margin {margin:.2e}, max relative binomial-series gap {worst:.1e}"),
    )
}

fn theta_tail() -> Check {
    let mut worst = (0.0f64, 0, 0);
    let mut violations = 0;
    for d in 2..=100 {
        for n in 8..=400 {
            let r = theta_tail_bound(d, n).map_err(err)?;
            if r.ratio > worst.0 {
                worst = (r.ratio, d, n);
            }
            if r.ratio > 10.0 {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!(
            "max r e^(pi^2 n/72) = {:.3e} at (d, n) = ({}, {}), {violations} violations",
            worst.0, worst.1, worst.2
        ),
    )
}

fn report(id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    let (pass, summary) = match result {
        Ok(o) => (o.pass, o.summary),
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = elapsed <= budget;
    let tag = if pass && in_time { "PASS" } else { "FAIL" };
    let timing = if in_time {
        format!("{:.2}s", elapsed.as_secs_f64())
    } else {
        format!(
            "{:.2}s, over budget {:.0}s",
            elapsed.as_secs_f64(),
            budget.as_secs_f64()
        )
    };
    println!("[{tag}] criterion {id:>2} {name}: {summary} ({timing})");
    pass && in_time
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut all = true;
    all &= report(1, "oracle triple agreement", secs(60), oracle_triple);
    all &= report(2, "Bernoulli closed form", secs(60), closed_form);
    all &= report(3, "theta / Gaussian residue bridge", secs(60), theta_bridge);
    all &= report(4, "Bernoulli theta decay", secs(300), bernoulli_decay);
    all &= report(5, "small-modulus regime", secs(60), small_modulus);
    all &= report(6, "coupling identity", secs(10), coupling_identity);
    all &= report(7, "Chernoff tail", secs(10), chernoff);

    let mut run = None;
    all &= report(8, "lattice approximant decay", secs(300), || {
        let (o, r) = lattice_decay()?;
        run = Some(r);
        Ok(o)
    });
    all &= report(9, "averaged series bound", secs(600), || match &run {
        Some(r) => series(r),
        None => Err("criterion 8 produced no C_emp".into()),
    });
    all &= report(10, "double-sum scaling", secs(10), double_sum);
    all &= report(11, "Hölder and binomial series", secs(10), holder_and_binomial);
    all &= report(12, "theta tail", secs(10), theta_tail);

    if all {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria failed");
        ExitCode::FAILURE
    }
}

//! Invariant batteries run by `lottery verify`. Each returns a report with a
//! pass flag and the failing cases.

use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::analysis::hitting::{hitting_time_table, random_sizes};
use crate::analysis::threshold::{conjecture_probe, enumerate_b, enumerate_br, BR_SIZE_LIMIT};
use crate::error::Result;
use crate::instance::{generate_random, Instance, KRule, SizeLaw};
use crate::mechanisms::{coupled_outcome, sample_coupled_triple, weighted_order_probability};
use crate::rng::{replica_seed, replica_stream, stream};

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: Option<u64>,
    pub checks: u64,
    pub failures: Vec<String>,
    pub passed: bool,
}

impl SuiteReport {
    fn new(suite: &str, seed: Option<u64>, checks: u64, failures: Vec<String>) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            seed,
            checks,
            passed: failures.is_empty(),
            failures,
        }
    }
}

/// Random instance with 2..=`max_groups` groups of size 1..=`max_size` and
/// `k = floor(alpha n)` for a random `alpha`; redrawn until `0 < k < n`.
pub fn random_instance(seed: u64, max_groups: usize, max_size: usize) -> Instance {
    for attempt in 0.. {
        let s = replica_seed(seed, attempt);
        let mut rng = stream(s);
        let groups = rng.random_range(2..=max_groups);
        let alpha = rng.random_range(0.15..0.85);
        if let Ok(inst) = generate_random(
            groups,
            &SizeLaw::uniform(1, max_size),
            KRule::Alpha(alpha),
            s,
        ) {
            return inst;
        }
    }
    unreachable!()
}

/// Coupled GLR, IW and GL outcomes on random instances; any group with
/// `glr > iw` or `iw > gl` in any sample is a failure.
pub fn dominance(instances: usize, samples: u64, seed: u64) -> SuiteReport {
    let mut failures = Vec::new();
    let mut checks = 0;
    for j in 0..instances {
        let inst = random_instance(replica_seed(seed, j as u64), 10, 4);
        let mut rng = replica_stream(seed ^ 0xD0D0, j as u64);
        for t in 0..samples {
            let triple = sample_coupled_triple(&inst, &mut rng);
            let out = coupled_outcome(&inst, &triple);
            checks += inst.m() as u64;
            let bad = out.violations();
            if !bad.is_empty() && failures.len() < 20 {
                failures.push(format!(
                    "instance k={} sizes={:?} sample {t}: groups {bad:?}",
                    inst.k(),
                    inst.group_sizes()
                ));
            }
        }
    }
    SuiteReport::new("dominance", Some(seed), checks, failures)
}

/// Exact hitting-time bounds and subadditivity on random size vectors with
/// at most 12 entries of size at most 4, for every valid budget.
pub fn hitting(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut failures = Vec::new();
    let mut checks = 0;
    for c in 0..cases {
        let s = replica_seed(seed, c as u64);
        let len = stream(s).random_range(1..=12);
        let sizes = random_sizes(len, 4, s);
        for row in hitting_time_table(&sizes)? {
            checks += 1 + row.subadditivity.len() as u64;
            if !row.within {
                failures.push(format!(
                    "{sizes:?} k={}: E[tau]={} not in [{}, {}]",
                    row.k, row.e_tau, row.lower, row.upper
                ));
            }
            for p in row.subadditivity.iter().filter(|p| !p.holds) {
                failures.push(format!(
                    "{sizes:?} k={} k'={}: {} < {}",
                    p.k1, p.k2, p.lhs, p.rhs
                ));
            }
        }
    }
    Ok(SuiteReport::new("hitting", Some(seed), checks, failures))
}

/// Reciprocal-sum bound for every enumerated `B_r` strategy.
pub fn br() -> Result<SuiteReport> {
    let mut failures = Vec::new();
    let mut checks = 0;
    for s in 1..=BR_SIZE_LIMIT {
        for r in 0..s {
            for b in enumerate_br(s, r)? {
                checks += 1;
                if !b.reciprocal_bound_holds() {
                    failures.push(format!(
                        "s={s} r={r} {:?}: sum 1/a = {}",
                        b.requests,
                        b.reciprocal_sum()
                    ));
                }
            }
        }
    }
    Ok(SuiteReport::new("br", None, checks, failures))
}

pub const CONJECTURE_T: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// For `T` in [`CONJECTURE_T`] and every `B` strategy with `s <= max_s`, the
/// sampled success must not exceed `1 - e^{-T} + 3 SE`.
pub fn conjecture(max_s: usize, replicas: u64, seed: u64) -> Result<SuiteReport> {
    let mut failures = Vec::new();
    let mut checks = 0;
    let mut case = 0u64;
    for s in 1..=max_s {
        for b in enumerate_b(s)? {
            for &t in &CONJECTURE_T {
                let p = conjecture_probe(&b.requests, t, replicas, replica_seed(seed, case))?;
                case += 1;
                checks += 1;
                if p.p_success > p.p_group_request + 3.0 * p.se {
                    failures.push(format!(
                        "{:?} T={t}: {} > {} + 3*{}",
                        b.requests, p.p_success, p.p_group_request, p.se
                    ));
                }
            }
        }
    }
    Ok(SuiteReport::new("conjecture", Some(seed), checks, failures))
}

/// Upper-tail p-value of Pearson's statistic against `expected` probabilities.
pub fn chi_square_p<K: std::hash::Hash + Eq>(
    counts: &HashMap<K, u64>,
    expected: &HashMap<K, f64>,
    total: u64,
) -> f64 {
    let stat: f64 = expected
        .iter()
        .map(|(key, p)| {
            let e = p * total as f64;
            let o = *counts.get(key).unwrap_or(&0) as f64;
            (o - e).powi(2) / e
        })
        .sum();
    let outside: u64 = counts
        .iter()
        .filter(|(k, _)| !expected.contains_key(*k))
        .map(|(_, &c)| c)
        .sum();
    if outside > 0 {
        return 0.0;
    }
    let dof = expected.len().saturating_sub(1).max(1) as f64;
    1.0 - ChiSquared::new(dof).expect("positive dof").cdf(stat)
}

pub const DISTRIBUTION_ALPHA: f64 = 1e-3;

/// Laws of the coupled orders on the instance with groups `{0,1}, {2}, {3}`:
/// the deduplicated group order must be uniform and the deduplicated agent
/// order must follow the weighted law with group-size requests.
pub fn distribution(samples: u64, seed: u64) -> Result<SuiteReport> {
    let inst = Instance::new(2, vec![2, 1, 1])?;
    let mut rng = stream(seed);
    let mut gl_counts: HashMap<Vec<usize>, u64> = HashMap::new();
    let mut iw_counts: HashMap<Vec<usize>, u64> = HashMap::new();
    for _ in 0..samples {
        let t = sample_coupled_triple(&inst, &mut rng);
        *gl_counts.entry(t.sigma_gl).or_insert(0) += 1;
        *iw_counts.entry(t.sigma_iw).or_insert(0) += 1;
    }
    use itertools::Itertools;
    let gl_expected: HashMap<Vec<usize>, f64> =
        (0..3).permutations(3).map(|p| (p, 1.0 / 6.0)).collect();
    let requests = [2, 2, 1, 1];
    let iw_expected: HashMap<Vec<usize>, f64> = (0..4)
        .permutations(4)
        .map(|p| {
            let q = weighted_order_probability(&requests, &p);
            (p, q)
        })
        .collect();
    let p_gl = chi_square_p(&gl_counts, &gl_expected, samples);
    let p_iw = chi_square_p(&iw_counts, &iw_expected, samples);
    let mut failures = Vec::new();
    if p_gl <= DISTRIBUTION_ALPHA {
        failures.push(format!("group order not uniform: p = {p_gl}"));
    }
    if p_iw <= DISTRIBUTION_ALPHA {
        failures.push(format!(
            "agent order does not follow the weighted law: p = {p_iw}"
        ));
    }
    Ok(SuiteReport::new("distribution", Some(seed), 2, failures))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_instances_are_valid() {
        for s in 0..50 {
            let inst = random_instance(s, 6, 3);
            assert!(inst.n() > inst.k() && inst.m() >= 2);
        }
    }

    #[test]
    fn small_suites_pass() {
        assert!(dominance(3, 500, 1).passed);
        assert!(hitting(30, 2).unwrap().passed);
        assert!(br().unwrap().passed);
        assert!(distribution(20_000, 4).unwrap().passed);
    }
}

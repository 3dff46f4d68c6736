use itertools::Itertools;
use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanisms::cmp_score;
use crate::rng::replica_stream;

/// Score cutoff imposed on a group by the outsiders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Threshold {
    /// Outsiders never request more than `k - |G|`; every member is reached.
    Infinite,
    /// Members with score below the value are reached.
    At(f64),
    /// `k < |G|`: the group cannot succeed.
    Impossible,
}

impl Threshold {
    pub fn admits(&self, score: f64) -> bool {
        match self {
            Threshold::Infinite => true,
            Threshold::At(t) => score < *t,
            Threshold::Impossible => false,
        }
    }
}

/// `T = inf { t : sum_{j outside G} a_j 1(score_j < t) > k - |G| }`.
///
/// `outsiders` holds `(a_j, score_j)`.
pub fn threshold_t(k: usize, group_size: usize, outsiders: &[(usize, f64)]) -> Threshold {
    if k < group_size {
        return Threshold::Impossible;
    }
    let cap = k - group_size;
    let mut sorted: Vec<(usize, f64, usize)> = outsiders
        .iter()
        .enumerate()
        .map(|(j, &(a, s))| (a, s, j))
        .collect();
    sorted.sort_by(|x, y| cmp_score((x.1, x.2), (y.1, y.2)));
    let mut acc = 0usize;
    for (a, score, _) in sorted {
        acc += a;
        if acc > cap {
            return Threshold::At(score);
        }
    }
    Threshold::Infinite
}

/// The group succeeds iff `sum_{i in G} a_i 1(score_i < T) >= |G|`.
pub fn succeeds_at_threshold(members: &[(usize, f64)], threshold: Threshold) -> bool {
    let got: usize = members
        .iter()
        .filter(|(_, s)| threshold.admits(*s))
        .map(|&(a, _)| a)
        .sum();
    got >= members.len()
}

/// A request vector (ascending) in `B_r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BrStrategy {
    pub s: usize,
    pub r: usize,
    pub requests: Vec<usize>,
}

impl BrStrategy {
    pub fn reciprocal_sum(&self) -> f64 {
        self.requests.iter().map(|&a| 1.0 / a as f64).sum()
    }

    /// `sum 1/a_i <= r + 1`, checked in exact integer arithmetic.
    pub fn reciprocal_bound_holds(&self) -> bool {
        let lcm = self
            .requests
            .iter()
            .fold(1u128, |l, &a| num_integer_lcm(l, a as u128));
        let num: u128 = self.requests.iter().map(|&a| lcm / a as u128).sum();
        num <= (self.r as u128 + 1) * lcm
    }
}

fn num_integer_lcm(a: u128, b: u128) -> u128 {
    fn gcd(a: u128, b: u128) -> u128 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

pub const BR_SIZE_LIMIT: usize = 6;

/// Whether ascending `requests` lie in `B_r`: any `r` requests sum below `s`
/// and any `r + 1` requests reach `s`.
pub fn in_br(requests_ascending: &[usize], r: usize) -> bool {
    let s = requests_ascending.len();
    if r >= s {
        return false;
    }
    let largest_r: usize = requests_ascending[s - r..].iter().sum();
    let smallest_r1: usize = requests_ascending[..=r].iter().sum();
    largest_r < s && smallest_r1 >= s
}

/// All request multisets over `{1..s}` in `B_r`, ascending, deduplicated.
pub fn enumerate_br(s: usize, r: usize) -> Result<Vec<BrStrategy>> {
    if s == 0 {
        return Err(Error::Nonpositive("group size"));
    }
    if s > BR_SIZE_LIMIT {
        return Err(Error::TooLarge {
            what: "group size",
            size: s,
            limit: BR_SIZE_LIMIT,
        });
    }
    if r >= s {
        return Err(Error::ParamViolation(format!(
            "class index r = {r} must be below s = {s}"
        )));
    }
    Ok((1..=s)
        .combinations_with_replacement(s)
        .filter(|v| in_br(v, r))
        .map(|requests| BrStrategy { s, r, requests })
        .collect())
}

/// Every strategy in `B = B_0 ∪ ... ∪ B_{s-1}`.
pub fn enumerate_b(s: usize) -> Result<Vec<BrStrategy>> {
    let mut out = Vec::new();
    for r in 0..s {
        out.extend(enumerate_br(s, r)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureProbe {
    pub s: usize,
    pub requests: Vec<usize>,
    pub t: f64,
    pub replicas: u64,
    pub p_success: f64,
    pub se: f64,
    /// `1 - e^{-T}`
    pub p_group_request: f64,
    /// Success probability computed from the independent member indicators.
    pub p_exact: f64,
}

/// Monte Carlo estimate of `P(sum a_i 1(a_i X_i < T) >= s)` with i.i.d.
/// `X_i ~ Exp(1)`; replica `r` uses `replica_stream(seed, r)`.
pub fn conjecture_probe(
    requests: &[usize],
    t: f64,
    replicas: u64,
    seed: u64,
) -> Result<ConjectureProbe> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!(
            "threshold T = {t} must be finite and nonnegative"
        )));
    }
    if replicas == 0 {
        return Err(Error::Nonpositive("replicas"));
    }
    let s = requests.len();
    let mut hits = 0u64;
    for r in 0..replicas {
        let mut rng = replica_stream(seed, r);
        let got: usize = requests
            .iter()
            .filter(|&&a| {
                let x: f64 = rng.sample(Exp1);
                (a as f64) * x < t
            })
            .sum();
        if got >= s {
            hits += 1;
        }
    }
    let p = hits as f64 / replicas as f64;
    Ok(ConjectureProbe {
        s,
        requests: requests.to_vec(),
        t,
        replicas,
        p_success: p,
        se: (p * (1.0 - p) / replicas as f64).sqrt(),
        p_group_request: -(-t).exp_m1(),
        p_exact: exact_success(requests, t),
    })
}

/// Sum over member subsets of independent `Bernoulli(1 - e^{-T/a_i})` outcomes.
pub fn exact_success(requests: &[usize], t: f64) -> f64 {
    let s = requests.len();
    let q: Vec<f64> = requests
        .iter()
        .map(|&a| -(-t / a as f64).exp_m1())
        .collect();
    let mut total = 0.0;
    for mask in 0u32..(1 << s) {
        let got: usize = (0..s)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| requests[i])
            .sum();
        if got >= s {
            total += (0..s)
                .map(|i| if mask >> i & 1 == 1 { q[i] } else { 1.0 - q[i] })
                .product::<f64>();
        }
    }
    total
}

/// `1 - e^{-λ/x}`, an upper bound on `P(Poisson(λ) >= x)` for `x >= λ`.
pub fn poisson_tail_bound(lambda: f64, x: f64) -> Result<f64> {
    if !(lambda >= 0.0 && x > 0.0 && x >= lambda) {
        return Err(Error::Domain(format!(
            "need x >= lambda >= 0 and x > 0, got lambda = {lambda}, x = {x}"
        )));
    }
    Ok(-(-lambda / x).exp_m1())
}

/// `P(Poisson(λ) >= x)` by summing the series below `x`.
pub fn poisson_tail_exact(lambda: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let below = x.ceil() as u64;
    let mut term = (-lambda).exp();
    let mut cdf = 0.0;
    for j in 0..below {
        cdf += term;
        term *= lambda / (j + 1) as f64;
    }
    (1.0 - cdf).max(0.0)
}

use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanisms::tau;
use crate::rng::{replica_stream, stream};

/// Cap on the number of states a dynamic program may visit.
pub const DP_STATE_LIMIT: u128 = 10_000_000;

/// Upper bound on the live states of [`expected_tau_clamped`]: a class of size
/// `s` can contribute at most `(c-1)/s` draws before the sum reaches `c`.
pub fn dp_state_bound(c: usize, classes: &[(usize, usize)]) -> u128 {
    if c == 0 {
        return 1;
    }
    classes
        .iter()
        .map(|&(s, cnt)| (cnt.min((c - 1) / s) + 1) as u128)
        .product()
}

/// `sum_{t=0}^{M-1} P(S_t < c)` for a uniform order over the multiset
/// `classes = [(size, count)]` with `M` elements in total. Equals `E[tau(c)]`
/// when the total reaches `c`, and `E[min(tau, M)]` with `tau = M` otherwise.
pub fn expected_tau_clamped(c: usize, classes: &[(usize, usize)]) -> Result<f64> {
    let states = dp_state_bound(c, classes);
    if states > DP_STATE_LIMIT {
        return Err(Error::StateSpaceTooLarge {
            states,
            limit: DP_STATE_LIMIT,
        });
    }
    let total: usize = classes.iter().map(|&(_, n)| n).sum();
    if c == 0 {
        return Ok(0.0);
    }
    let mut expected = 0.0;
    let mut layer: HashMap<Vec<u32>, f64> = HashMap::from([(vec![0; classes.len()], 1.0)]);
    for t in 0..total {
        // Every state kept in `layer` has S_t < c.
        expected += layer.values().sum::<f64>();
        let left = (total - t) as f64;
        let mut next = HashMap::with_capacity(layer.len() * 2);
        for (drawn, p) in layer {
            let sum: usize = drawn
                .iter()
                .zip(classes)
                .map(|(&d, &(s, _))| d as usize * s)
                .sum();
            for (j, &(s, cnt)) in classes.iter().enumerate() {
                let avail = cnt - drawn[j] as usize;
                if avail == 0 || sum + s >= c {
                    continue;
                }
                let mut d = drawn.clone();
                d[j] += 1;
                *next.entry(d).or_insert(0.0) += p * avail as f64 / left;
            }
        }
        if next.is_empty() {
            break;
        }
        layer = next;
    }
    Ok(expected)
}

/// `E[tau(k)]` for a uniform order over `sizes`.
pub fn expected_tau(k: usize, sizes: &[usize]) -> Result<f64> {
    let total: usize = sizes.iter().sum();
    if k == 0 {
        return Err(Error::Nonpositive("k"));
    }
    if k > total {
        return Err(Error::InsufficientTotal { budget: k, total });
    }
    expected_tau_clamped(k, &classes_of(sizes))
}

pub(crate) fn classes_of(sizes: &[usize]) -> Vec<(usize, usize)> {
    let mut map = std::collections::BTreeMap::new();
    for &s in sizes {
        *map.entry(s).or_insert(0usize) += 1;
    }
    map.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HittingMethod {
    Exact,
    MonteCarlo { replicas: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subadditivity {
    pub k1: usize,
    pub k2: usize,
    /// `E[tau(k1)] + E[tau(k2)]`
    pub lhs: f64,
    /// `E[tau(k1 + k2)]`
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingCheck {
    pub k: usize,
    pub mu: f64,
    pub a_bar: usize,
    pub e_tau: f64,
    /// Monte Carlo standard error; zero for exact evaluation.
    pub se: f64,
    /// `1 + (k - a_bar)/mu`
    pub lower: f64,
    /// `(k + a_bar - 1)/mu`
    pub upper: f64,
    pub within: bool,
    pub subadditivity: Vec<Subadditivity>,
}

impl HittingCheck {
    pub fn passed(&self) -> bool {
        self.within && self.subadditivity.iter().all(|s| s.holds)
    }
}

const SLACK: f64 = 1e-9;

fn estimate(k: usize, sizes: &[usize], method: HittingMethod) -> Result<(f64, f64)> {
    match method {
        HittingMethod::Exact => Ok((expected_tau(k, sizes)?, 0.0)),
        HittingMethod::MonteCarlo { replicas, seed } => {
            tau(k, sizes)?;
            let mut sum = 0.0;
            let mut sq = 0.0;
            for r in 0..replicas {
                let mut rng = replica_stream(seed, r);
                let mut order = sizes.to_vec();
                order.shuffle(&mut rng);
                let t = tau(k, &order)? as f64;
                sum += t;
                sq += t * t;
            }
            let n = replicas.max(1) as f64;
            let mean = sum / n;
            let var = if replicas > 1 {
                (sq / n - mean * mean).max(0.0) * n / (n - 1.0)
            } else {
                0.0
            };
            Ok((mean, (var / n).sqrt()))
        }
    }
}

/// Checks `1 + (k - a_bar)/mu <= E[tau(k)] <= (k + a_bar - 1)/mu` and
/// `E[tau(k1)] + E[tau(k2)] >= E[tau(k1 + k2)]` for the given pairs. Monte
/// Carlo estimates are allowed three standard errors.
pub fn hitting_time_check(
    sizes: &[usize],
    k: usize,
    method: HittingMethod,
    pairs: &[(usize, usize)],
) -> Result<HittingCheck> {
    if sizes.is_empty() {
        return Err(Error::EmptyGroups);
    }
    let total: usize = sizes.iter().sum();
    let mu = total as f64 / sizes.len() as f64;
    let a_bar = *sizes.iter().max().expect("nonempty");
    let (e_tau, se) = estimate(k, sizes, method)?;
    let lower = 1.0 + (k as f64 - a_bar as f64) / mu;
    let upper = (k + a_bar - 1) as f64 / mu;
    let slack = SLACK + 3.0 * se;
    let within = e_tau >= lower - slack && e_tau <= upper + slack;
    let mut subadditivity = Vec::with_capacity(pairs.len());
    for &(k1, k2) in pairs {
        if k1 + k2 > total {
            return Err(Error::InsufficientTotal {
                budget: k1 + k2,
                total,
            });
        }
        let (a, sa) = estimate(k1, sizes, method)?;
        let (b, sb) = estimate(k2, sizes, method)?;
        let (c, sc) = estimate(k1 + k2, sizes, method)?;
        let slack = SLACK + 3.0 * (sa * sa + sb * sb + sc * sc).sqrt();
        subadditivity.push(Subadditivity {
            k1,
            k2,
            lhs: a + b,
            rhs: c,
            holds: a + b >= c - slack,
        });
    }
    Ok(HittingCheck {
        k,
        mu,
        a_bar,
        e_tau,
        se,
        lower,
        upper,
        within,
        subadditivity,
    })
}

/// Every valid `k` and every valid `(k, k')` pair, exactly.
pub fn hitting_time_table(sizes: &[usize]) -> Result<Vec<HittingCheck>> {
    let total: usize = sizes.iter().sum();
    let taus: Vec<f64> = (1..=total)
        .map(|k| expected_tau(k, sizes))
        .collect::<Result<_>>()?;
    let at = |k: usize| taus[k - 1];
    let mu = total as f64 / sizes.len() as f64;
    let a_bar = *sizes.iter().max().ok_or(Error::EmptyGroups)?;
    Ok((1..=total)
        .map(|k| {
            let lower = 1.0 + (k as f64 - a_bar as f64) / mu;
            let upper = (k + a_bar - 1) as f64 / mu;
            let e = at(k);
            let subadditivity = (1..=total - k)
                .map(|k2| Subadditivity {
                    k1: k,
                    k2,
                    lhs: e + at(k2),
                    rhs: at(k + k2),
                    holds: e + at(k2) >= at(k + k2) - SLACK,
                })
                .collect();
            HittingCheck {
                k,
                mu,
                a_bar,
                e_tau: e,
                se: 0.0,
                lower,
                upper,
                within: e >= lower - SLACK && e <= upper + SLACK,
                subadditivity,
            }
        })
        .collect())
}

/// Random size vector with `len` entries in `1..=max_size`, from `seed`.
pub fn random_sizes(len: usize, max_size: usize, seed: u64) -> Vec<usize> {
    use rand::Rng;
    let mut rng = stream(seed);
    (0..len).map(|_| rng.random_range(1..=max_size)).collect()
}

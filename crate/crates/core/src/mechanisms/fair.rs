use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::instance::Instance;

/// A lottery over feasible sets of groups in which every group is selected
/// with the same probability `u* = (k - s_max + 1) / n`.
#[derive(Debug, Clone)]
pub struct FairLottery {
    /// `(group indices, weight)`; the empty set may appear.
    pub support: Vec<(Vec<usize>, BigRational)>,
    pub u_star: BigRational,
}

impl FairLottery {
    pub fn weights(&self) -> Vec<f64> {
        self.support.iter().map(|(_, w)| to_f64(w)).collect()
    }

    pub fn marginals_exact(&self, m: usize) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); m];
        for (set, w) in &self.support {
            for &g in set {
                out[g] += w;
            }
        }
        out
    }

    pub fn marginals(&self, m: usize) -> Vec<f64> {
        self.marginals_exact(m).iter().map(to_f64).collect()
    }
}

pub(crate) fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn build_fair_lottery(inst: &Instance) -> Result<FairLottery> {
    build_fair_lottery_for_sizes(inst.group_sizes(), inst.k())
}

/// Greedy decomposition of the constant marginal vector `u*`.
///
/// Each step packs positive-residual groups in descending residual order
/// (ties by index) while they fit, and gives the packing the largest weight
/// that keeps every residual nonnegative and no larger than the weight still
/// unassigned. Leftover weight goes to the empty set.
pub fn build_fair_lottery_for_sizes(sizes: &[usize], k: usize) -> Result<FairLottery> {
    let m = sizes.len();
    let n: usize = sizes.iter().sum();
    let s_max = sizes.iter().copied().max().unwrap_or(0);
    if m == 0 {
        return Err(Error::EmptyGroups);
    }
    if k < s_max {
        return Err(Error::Domain(format!(
            "benchmark u* = (k - s_max + 1)/n is not positive (k = {k}, s_max = {s_max})"
        )));
    }
    let ratio = |a: usize, b: usize| BigRational::new(BigInt::from(a), BigInt::from(b));
    let u_star = if n <= k {
        BigRational::one()
    } else {
        ratio(k - s_max + 1, n)
    };

    let mut residual = vec![u_star.clone(); m];
    let mut unassigned = BigRational::one();
    let mut support = Vec::new();
    let step_limit = 2 * m + 1;

    while residual.iter().any(|r| r.is_positive()) {
        if support.len() >= step_limit {
            return Err(failed(&residual));
        }
        let mut candidates: Vec<usize> = (0..m).filter(|&g| residual[g].is_positive()).collect();
        candidates.sort_by(|&a, &b| residual[b].cmp(&residual[a]).then(a.cmp(&b)));
        let mut load = 0usize;
        let mut chosen = Vec::new();
        for g in candidates {
            if load + sizes[g] <= k {
                load += sizes[g];
                chosen.push(g);
            }
        }
        let mut in_set = vec![false; m];
        for &g in &chosen {
            in_set[g] = true;
        }
        let min_inside = chosen.iter().map(|&g| residual[g].clone()).min();
        let max_outside = (0..m)
            .filter(|&g| !in_set[g])
            .map(|g| residual[g].clone())
            .max()
            .unwrap_or_else(BigRational::zero);
        let Some(min_inside) = min_inside else {
            return Err(failed(&residual));
        };
        let w = min_inside.min(&unassigned - max_outside);
        if !w.is_positive() {
            return Err(failed(&residual));
        }
        for &g in &chosen {
            residual[g] -= &w;
        }
        unassigned -= &w;
        chosen.sort_unstable();
        support.push((chosen, w));
    }
    if unassigned.is_negative() {
        return Err(failed(&residual));
    }
    if unassigned.is_positive() {
        support.push((Vec::new(), unassigned));
    }
    Ok(FairLottery { support, u_star })
}

fn failed(residual: &[BigRational]) -> Error {
    Error::DecompositionFailed {
        residuals: residual.iter().map(to_f64).collect(),
    }
}

use std::collections::HashMap;

use itertools::Itertools;
use serde::Serialize;

use crate::analysis::hitting::{dp_state_bound, expected_tau_clamped, DP_STATE_LIMIT};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::mechanisms::{
    allocate_group_lottery, allocate_individual, valid_groups, weighted_order_probability,
    ActionProfile, Allocation, Mechanism, MechanismKind,
};

/// Largest number of orderable elements for brute-force enumeration.
pub const ENUM_LIMIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    ExactEnum,
    ExactDp,
    MonteCarlo,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::ExactEnum => "EXACT_ENUM",
            Method::ExactDp => "EXACT_DP",
            Method::MonteCarlo => "MONTE_CARLO",
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Method::MonteCarlo)
    }
}

/// Success probability of every group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityVector {
    pub u: Vec<f64>,
    pub method: Method,
    /// Per-group `sqrt(p(1-p)/R)`, Monte Carlo only.
    pub se: Option<Vec<f64>>,
    pub replicas: Option<u64>,
    pub seed: Option<u64>,
}

impl UtilityVector {
    pub fn exact(u: Vec<f64>, method: Method) -> Self {
        UtilityVector {
            u,
            method,
            se: None,
            replicas: None,
            seed: None,
        }
    }
}

fn add_success(acc: &mut [f64], alloc: &Allocation, inst: &Instance, weight: f64) {
    for (g, ok) in alloc.group_success(inst).into_iter().enumerate() {
        if ok {
            acc[g] += weight;
        }
    }
}

fn too_large(what: &'static str, size: usize) -> Error {
    Error::TooLarge {
        what,
        size,
        limit: ENUM_LIMIT,
    }
}

/// Exact success probabilities by enumerating every order (GL, IL, IW), every
/// draw sequence (GLR) or the lottery support (FAIR_GL).
pub fn exact_enumerate(
    kind: MechanismKind,
    inst: &Instance,
    profile: &ActionProfile,
) -> Result<UtilityVector> {
    profile.validate(kind, inst)?;
    let (k, n, m) = (inst.k(), inst.n(), inst.m());
    let mut acc = vec![0.0; m];
    match (kind, profile) {
        (MechanismKind::Gl, ActionProfile::GroupDeclaration(d)) => {
            let units = valid_groups(d);
            if units.len() > ENUM_LIMIT {
                return Err(too_large("valid groups", units.len()));
            }
            let count = units.len();
            let weight = 1.0 / (1..=count).map(|x| x as f64).product::<f64>();
            for perm in (0..count).permutations(count) {
                let ordered: Vec<Vec<usize>> = perm.iter().map(|&u| units[u].clone()).collect();
                add_success(
                    &mut acc,
                    &allocate_group_lottery(&ordered, k, n),
                    inst,
                    weight,
                );
            }
        }
        (MechanismKind::Glr, ActionProfile::GroupDeclaration(d)) => {
            let units = valid_groups(d);
            if units.len() > ENUM_LIMIT {
                return Err(too_large("valid groups", units.len()));
            }
            acc = glr_sequences(inst, &units)?;
        }
        (MechanismKind::FairGl, ActionProfile::GroupDeclaration(_)) => {
            let mech = Mechanism::new(kind, inst, profile)?;
            for (alloc, w) in mech.fair_outcomes() {
                add_success(&mut acc, &alloc, inst, w);
            }
        }
        (_, ActionProfile::TicketRequest(reqs)) => {
            if n > ENUM_LIMIT {
                return Err(too_large("agents", n));
            }
            let uniform = 1.0 / (1..=n).map(|x| x as f64).product::<f64>();
            let mut total = 0.0;
            for perm in (0..n).permutations(n) {
                let weight = if kind == MechanismKind::Iw {
                    weighted_order_probability(reqs, &perm)
                } else {
                    uniform
                };
                total += weight;
                let seq: Vec<(usize, usize)> = perm.iter().map(|&i| (i, reqs[i])).collect();
                add_success(&mut acc, &allocate_individual(&seq, k, n), inst, weight);
            }
            debug_assert!((total - 1.0).abs() < 1e-12);
        }
        _ => unreachable!("validate checks the action kind"),
    }
    Ok(UtilityVector::exact(acc, Method::ExactEnum))
}

/// Forward recursion over draw-count vectors of GLR: each step draws a valid
/// group uniformly; the process stops at the first group that does not fit.
fn glr_sequences(inst: &Instance, units: &[Vec<usize>]) -> Result<Vec<f64>> {
    let m = inst.m();
    if units.is_empty() {
        return Ok(vec![0.0; m]);
    }
    let group_of = inst.group_of_agents();
    let sizes: Vec<usize> = units.iter().map(Vec::len).collect();
    let bound: u128 = sizes.iter().map(|&s| (inst.k() / s + 1) as u128).product();
    if bound > DP_STATE_LIMIT {
        return Err(Error::StateSpaceTooLarge {
            states: bound,
            limit: DP_STATE_LIMIT,
        });
    }
    let p = 1.0 / units.len() as f64;
    let mut acc = vec![0.0; m];
    let mut layer: HashMap<Vec<u32>, f64> = HashMap::from([(vec![0; units.len()], 1.0)]);
    while !layer.is_empty() {
        let mut next: HashMap<Vec<u32>, f64> = HashMap::new();
        for (counts, prob) in layer {
            let used: usize = counts
                .iter()
                .zip(&sizes)
                .map(|(&c, &s)| c as usize * s)
                .sum();
            let remaining = inst.k() - used;
            let mut stop = 0.0;
            for (u, &s) in sizes.iter().enumerate() {
                if s <= remaining {
                    let mut c = counts.clone();
                    c[u] += 1;
                    *next.entry(c).or_insert(0.0) += prob * p;
                } else {
                    stop += prob * p;
                }
            }
            if stop > 0.0 {
                let mut tickets = vec![0usize; m];
                for (u, &c) in counts.iter().enumerate() {
                    for &i in &units[u] {
                        tickets[group_of[i]] += c as usize;
                    }
                }
                for g in 0..m {
                    if tickets[g] >= inst.group_size(g) {
                        acc[g] += stop;
                    }
                }
            }
        }
        layer = next;
    }
    Ok(acc)
}

/// Class multiset of the other groups when one group of size `s` is removed.
fn others(classes: &[(usize, usize)], s: usize) -> Vec<(usize, usize)> {
    classes
        .iter()
        .map(|&(size, count)| (size, if size == s { count - 1 } else { count }))
        .filter(|&(_, c)| c > 0)
        .collect()
}

fn spread(inst: &Instance, per_class: &HashMap<usize, f64>) -> Vec<f64> {
    inst.group_sizes().iter().map(|s| per_class[s]).collect()
}

/// GL under group request: `u_G = E[tau(k - |G| + 1, order over the others)] / m`,
/// with `tau` taken as `m` when the others cannot reach the budget.
pub fn exact_gl_dp(inst: &Instance) -> Result<UtilityVector> {
    let classes = inst.size_classes();
    let m = inst.m() as f64;
    let mut per_class = HashMap::new();
    for &(s, _) in &classes {
        let u = if s > inst.k() {
            0.0
        } else {
            expected_tau_clamped(inst.k() - s + 1, &others(&classes, s))? / m
        };
        per_class.insert(s, u);
    }
    Ok(UtilityVector::exact(
        spread(inst, &per_class),
        Method::ExactDp,
    ))
}

/// GLR under group request. With `f(b)` the chance the target is served
/// before stopping from budget `b`:
/// `f(b) = (1/m) [s <= b] + sum over other H with |H| <= b of (1/m) f(b - |H|)`.
pub fn exact_glr_dp(inst: &Instance) -> Result<UtilityVector> {
    let classes = inst.size_classes();
    let m = inst.m() as f64;
    let k = inst.k();
    let mut per_class = HashMap::new();
    for &(s, _) in &classes {
        let rest = others(&classes, s);
        let mut f = vec![0.0; k + 1];
        for b in 1..=k {
            let mut v = if s <= b { 1.0 } else { 0.0 };
            for &(h, c) in &rest {
                if h <= b {
                    v += c as f64 * f[b - h];
                }
            }
            f[b] = v / m;
        }
        per_class.insert(s, f[k]);
    }
    Ok(UtilityVector::exact(
        spread(inst, &per_class),
        Method::ExactDp,
    ))
}

/// Exact success probability of one group under IL, IL_LIMIT or IW with an
/// arbitrary request profile, by a forward recursion over
/// (draws per outsider request value, set of drawn target members).
pub fn exact_target_dp(
    kind: MechanismKind,
    inst: &Instance,
    profile: &ActionProfile,
    target: usize,
) -> Result<f64> {
    profile.validate(kind, inst)?;
    let Some(reqs) = profile.requests() else {
        return Err(Error::ProfileMismatch(format!(
            "{kind} has no request recursion"
        )));
    };
    let k = inst.k();
    let members: Vec<usize> = inst.members(target).collect();
    let size = members.len();
    if size > 16 {
        return Err(Error::TooLarge {
            what: "target group size",
            size,
            limit: 16,
        });
    }
    let own: Vec<usize> = members.iter().map(|&i| reqs[i]).collect();
    let mut outsider_counts: Vec<(usize, usize)> = Vec::new();
    for (i, &a) in reqs.iter().enumerate() {
        if inst.members(target).contains(&i) {
            continue;
        }
        match outsider_counts.binary_search_by_key(&a, |&(v, _)| v) {
            Ok(p) => outsider_counts[p].1 += 1,
            Err(p) => outsider_counts.insert(p, (a, 1)),
        }
    }
    let bound: u128 = outsider_counts
        .iter()
        .map(|&(a, c)| (c.min(k.div_ceil(a)) + 1) as u128)
        .product::<u128>()
        << size;
    if bound > DP_STATE_LIMIT {
        return Err(Error::StateSpaceTooLarge {
            states: bound,
            limit: DP_STATE_LIMIT,
        });
    }
    let weight = |a: usize| {
        if kind == MechanismKind::Iw {
            1.0 / a as f64
        } else {
            1.0
        }
    };
    let full = (1u32 << size) - 1;
    let mut success = 0.0;
    let mut layer: HashMap<(Vec<u32>, u32), f64> =
        HashMap::from([((vec![0; outsider_counts.len()], 0), 1.0)]);
    while !layer.is_empty() {
        let mut next: HashMap<(Vec<u32>, u32), f64> = HashMap::new();
        for ((drawn, mask), prob) in layer {
            let requested: usize = drawn
                .iter()
                .zip(&outsider_counts)
                .map(|(&d, &(a, _))| d as usize * a)
                .sum::<usize>()
                + (0..size)
                    .filter(|&j| mask >> j & 1 == 1)
                    .map(|j| own[j])
                    .sum::<usize>();
            let remaining = k - requested;
            let mut total_w = 0.0;
            for (c, &(a, cnt)) in outsider_counts.iter().enumerate() {
                total_w += (cnt - drawn[c] as usize) as f64 * weight(a);
            }
            for (j, &a) in own.iter().enumerate() {
                if mask >> j & 1 == 0 {
                    total_w += weight(a);
                }
            }
            for (c, &(a, cnt)) in outsider_counts.iter().enumerate() {
                let left = cnt - drawn[c] as usize;
                if left == 0 {
                    continue;
                }
                let p = prob * left as f64 * weight(a) / total_w;
                if a >= remaining {
                    // Budget exhausted before the target collected enough.
                    continue;
                }
                let mut d = drawn.clone();
                d[c] += 1;
                *next.entry((d, mask)).or_insert(0.0) += p;
            }
            let got: usize = (0..size)
                .filter(|&j| mask >> j & 1 == 1)
                .map(|j| own[j])
                .sum();
            for (j, &a) in own.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    continue;
                }
                let p = prob * weight(a) / total_w;
                let new_got = got + a.min(remaining);
                if new_got >= size {
                    success += p;
                } else if a < remaining && mask | (1 << j) != full {
                    *next.entry((drawn.clone(), mask | (1 << j))).or_insert(0.0) += p;
                }
            }
        }
        layer = next;
    }
    Ok(success)
}

/// IL, IL_LIMIT or IW utilities of every group via [`exact_target_dp`],
/// computed once per distinct (group size, member requests) pattern.
pub fn exact_individual_dp(
    kind: MechanismKind,
    inst: &Instance,
    profile: &ActionProfile,
) -> Result<UtilityVector> {
    let Some(reqs) = profile.requests() else {
        return Err(Error::ProfileMismatch(format!(
            "{kind} has no request recursion"
        )));
    };
    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut u = Vec::with_capacity(inst.m());
    for g in 0..inst.m() {
        let mut key: Vec<usize> = inst.members(g).map(|i| reqs[i]).collect();
        key.sort_unstable();
        key.push(usize::MAX - inst.group_size(g));
        let v = match cache.get(&key) {
            Some(&v) => v,
            None => {
                let v = exact_target_dp(kind, inst, profile, g)?;
                cache.insert(key, v);
                v
            }
        };
        u.push(v);
    }
    Ok(UtilityVector::exact(u, Method::ExactDp))
}

/// Rough state count of [`exact_gl_dp`], for method selection.
pub fn gl_dp_states(inst: &Instance) -> u128 {
    let classes = inst.size_classes();
    classes
        .iter()
        .filter(|&&(s, _)| s <= inst.k())
        .map(|&(s, _)| dp_state_bound(inst.k() - s + 1, &others(&classes, s)))
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_named, NamedConstruction};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn gl_tight_2_3() -> Instance {
        generate_named(&NamedConstruction::GlTight { r: 2, m: 3 }).unwrap()
    }

    #[test]
    fn gl_tight_exact_values() {
        let inst = gl_tight_2_3();
        let p = ActionProfile::group_declarations(&inst);
        let e = exact_enumerate(MechanismKind::Gl, &inst, &p).unwrap();
        assert!(close(&e.u, &[2.0 / 3.0, 0.5, 0.5], 1e-12));
        let d = exact_gl_dp(&inst).unwrap();
        assert!(close(&d.u, &e.u, 1e-12));
    }

    #[test]
    fn iw_single_and_pair() {
        let inst = Instance::new(2, vec![1, 2]).unwrap();
        let p = ActionProfile::group_request(MechanismKind::Iw, &inst);
        let e = exact_enumerate(MechanismKind::Iw, &inst, &p).unwrap();
        assert!(close(&e.u, &[0.5, 0.5], 1e-12));
        let d = exact_individual_dp(MechanismKind::Iw, &inst, &p).unwrap();
        assert!(close(&d.u, &e.u, 1e-12));
    }

    #[test]
    fn il_two_singletons() {
        let inst = Instance::new(1, vec![1, 1]).unwrap();
        let p = ActionProfile::group_request(MechanismKind::Il, &inst);
        let e = exact_enumerate(MechanismKind::Il, &inst, &p).unwrap();
        assert!(close(&e.u, &[0.5, 0.5], 1e-12));
    }

    #[test]
    fn everyone_fits() {
        // n > k always, so the closest case is one group left out by one seat.
        let inst = Instance::new(4, vec![1, 1, 1, 2]).unwrap();
        let d = exact_gl_dp(&inst).unwrap();
        let e = exact_enumerate(
            MechanismKind::Gl,
            &inst,
            &ActionProfile::group_declarations(&inst),
        )
        .unwrap();
        assert!(close(&d.u, &e.u, 1e-12));
    }

    #[test]
    fn dp_paths_match_enumeration() {
        for (k, sizes) in [
            (3, vec![1, 2, 2]),
            (4, vec![3, 1, 2, 1]),
            (5, vec![2, 2, 2, 1]),
            (2, vec![1, 1, 1, 1, 3]),
            (6, vec![4, 1, 1, 2]),
            (1, vec![2, 1, 1]),
        ] {
            let inst = Instance::new(k, sizes).unwrap();
            let gp = ActionProfile::group_declarations(&inst);
            let e = exact_enumerate(MechanismKind::Gl, &inst, &gp).unwrap();
            assert!(close(&exact_gl_dp(&inst).unwrap().u, &e.u, 1e-12));
            let e = exact_enumerate(MechanismKind::Glr, &inst, &gp).unwrap();
            assert!(close(&exact_glr_dp(&inst).unwrap().u, &e.u, 1e-12));
            for kind in [MechanismKind::Il, MechanismKind::Iw] {
                let p = ActionProfile::group_request(kind, &inst);
                let e = exact_enumerate(kind, &inst, &p).unwrap();
                assert!(
                    close(
                        &exact_individual_dp(kind, &inst, &p).unwrap().u,
                        &e.u,
                        1e-12
                    ),
                    "{kind}"
                );
            }
        }
    }

    #[test]
    fn target_dp_handles_mixed_requests() {
        let inst = Instance::new(4, vec![3, 2, 1]).unwrap();
        let p = ActionProfile::TicketRequest(vec![1, 2, 4, 1, 3, 1]);
        for kind in [MechanismKind::Il, MechanismKind::Iw] {
            let e = exact_enumerate(kind, &inst, &p).unwrap();
            for g in 0..3 {
                assert!((exact_target_dp(kind, &inst, &p, g).unwrap() - e.u[g]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fair_gl_exact() {
        let inst = Instance::new(2, vec![1, 2]).unwrap();
        let e = exact_enumerate(
            MechanismKind::FairGl,
            &inst,
            &ActionProfile::group_declarations(&inst),
        )
        .unwrap();
        assert!(close(&e.u, &[1.0 / 3.0, 1.0 / 3.0], 1e-12));
    }

    #[test]
    fn too_large_is_reported() {
        let inst = Instance::new(3, vec![1; 9]).unwrap();
        let p = ActionProfile::group_request(MechanismKind::Il, &inst);
        assert!(matches!(
            exact_enumerate(MechanismKind::Il, &inst, &p),
            Err(Error::TooLarge {
                limit: 8,
                size: 9,
                ..
            })
        ));
    }

    #[test]
    fn hamilton_scale_dp_runs() {
        let inst = generate_named(&NamedConstruction::HamiltonLike {
            n: 10_000,
            k: 21,
            couples: 3000,
        })
        .unwrap();
        let d = exact_gl_dp(&inst).unwrap();
        assert!(d.u.iter().all(|&u| u > 0.0 && u < 0.01));
    }
}

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use rand_distr::Exp1;

use super::allocate::{allocate_group_lottery, allocate_individual, Allocation};
use super::fair::{build_fair_lottery_for_sizes, to_f64, FairLottery};
use super::order::{sample_uniform_order, sample_weighted_order};
use super::profile::{valid_groups, ActionProfile, MechanismKind};
use crate::error::Result;
use crate::instance::Instance;

/// A valid group together with the true groups its members belong to.
#[derive(Debug, Clone)]
struct Unit {
    members: Vec<usize>,
    hits: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
enum Plan {
    Groups(Vec<Unit>),
    Individual {
        requests: Vec<usize>,
        weighted: bool,
    },
    Fair {
        units: Vec<Unit>,
        lottery: FairLottery,
        picker: Option<WeightedIndex<f64>>,
    },
}

/// A mechanism bound to an instance and an action profile, ready to sample.
#[derive(Debug, Clone)]
pub struct Mechanism<'a> {
    kind: MechanismKind,
    inst: &'a Instance,
    group_of: Vec<usize>,
    plan: Plan,
}

/// Reusable per-worker buffers for [`Mechanism::sample_tickets`].
#[derive(Debug, Default)]
pub struct Scratch {
    perm: Vec<usize>,
    swaps: Vec<(usize, usize)>,
    heap: Vec<Reverse<Key>>,
    /// Tickets received by each true group in the last sample.
    pub tickets: Vec<usize>,
    /// Groups with nonzero tickets in the last sample.
    pub touched: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        super::order::cmp_score((self.0, self.1), (other.0, other.1))
    }
}

impl Scratch {
    fn reset(&mut self, m: usize) {
        if self.tickets.len() != m {
            self.tickets = vec![0; m];
            self.touched.clear();
        }
        for &g in &self.touched {
            self.tickets[g] = 0;
        }
        self.touched.clear();
    }

    fn give(&mut self, group: usize, count: usize) {
        if count == 0 {
            return;
        }
        if self.tickets[group] == 0 {
            self.touched.push(group);
        }
        self.tickets[group] += count;
    }

    /// Draws the next element of a uniform permutation of `0..len`, lazily.
    fn next_uniform<R: Rng + ?Sized>(&mut self, len: usize, rng: &mut R) -> Option<usize> {
        let t = self.swaps.len();
        if t >= len {
            return None;
        }
        let j = rng.random_range(t..len);
        self.perm.swap(t, j);
        self.swaps.push((t, j));
        Some(self.perm[t])
    }

    fn begin_uniform(&mut self, len: usize) {
        if self.perm.len() != len {
            self.perm = (0..len).collect();
            self.swaps.clear();
        }
    }

    fn end_uniform(&mut self) {
        while let Some((t, j)) = self.swaps.pop() {
            self.perm.swap(t, j);
        }
    }
}

fn units_from(group_of: &[usize], groups: Vec<Vec<usize>>) -> Vec<Unit> {
    groups
        .into_iter()
        .map(|members| {
            let mut hits: Vec<(usize, usize)> = Vec::new();
            for &i in &members {
                let g = group_of[i];
                match hits.iter_mut().find(|(h, _)| *h == g) {
                    Some(h) => h.1 += 1,
                    None => hits.push((g, 1)),
                }
            }
            Unit { members, hits }
        })
        .collect()
}

impl<'a> Mechanism<'a> {
    pub fn new(kind: MechanismKind, inst: &'a Instance, profile: &ActionProfile) -> Result<Self> {
        profile.validate(kind, inst)?;
        let group_of = inst.group_of_agents();
        let plan = match (kind, profile) {
            (MechanismKind::Gl | MechanismKind::Glr, ActionProfile::GroupDeclaration(d)) => {
                Plan::Groups(units_from(&group_of, valid_groups(d)))
            }
            (MechanismKind::FairGl, ActionProfile::GroupDeclaration(d)) => {
                let units = units_from(&group_of, valid_groups(d));
                if units.is_empty() {
                    Plan::Groups(units)
                } else {
                    let sizes: Vec<usize> = units.iter().map(|u| u.members.len()).collect();
                    let lottery = build_fair_lottery_for_sizes(&sizes, inst.k())?;
                    let weights: Vec<f64> =
                        lottery.support.iter().map(|(_, w)| to_f64(w)).collect();
                    let picker = WeightedIndex::new(&weights).ok();
                    Plan::Fair {
                        units,
                        lottery,
                        picker,
                    }
                }
            }
            (_, ActionProfile::TicketRequest(r)) => Plan::Individual {
                requests: r.clone(),
                weighted: kind == MechanismKind::Iw,
            },
            _ => unreachable!("validate checks the action kind"),
        };
        Ok(Mechanism {
            kind,
            inst,
            group_of,
            plan,
        })
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn instance(&self) -> &Instance {
        self.inst
    }

    pub fn fair_lottery(&self) -> Option<&FairLottery> {
        match &self.plan {
            Plan::Fair { lottery, .. } => Some(lottery),
            _ => None,
        }
    }

    /// Every support set of the fair lottery as an allocation, with its weight.
    pub fn fair_outcomes(&self) -> Vec<(Allocation, f64)> {
        let (k, n) = (self.inst.k(), self.inst.n());
        match &self.plan {
            Plan::Fair { units, lottery, .. } => lottery
                .support
                .iter()
                .map(|(set, w)| {
                    let mut alloc = Allocation::empty(k, n);
                    for &u in set {
                        for &i in &units[u].members {
                            alloc.x[i] = 1;
                        }
                    }
                    (alloc, to_f64(w))
                })
                .collect(),
            _ => vec![(Allocation::empty(k, n), 1.0)],
        }
    }

    /// One outcome, built from an explicit full order and the allocation rule.
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Allocation {
        let (k, n) = (self.inst.k(), self.inst.n());
        match &self.plan {
            Plan::Groups(units) if units.is_empty() => Allocation::empty(k, n),
            Plan::Groups(units) if self.kind == MechanismKind::Glr => {
                let mut alloc = Allocation::empty(k, n);
                let mut remaining = k;
                loop {
                    let u = &units[rng.random_range(0..units.len())];
                    if u.members.len() > remaining {
                        break;
                    }
                    remaining -= u.members.len();
                    for &i in &u.members {
                        alloc.x[i] += 1;
                    }
                }
                alloc
            }
            Plan::Groups(units) => {
                let ids: Vec<usize> = (0..units.len()).collect();
                let order = sample_uniform_order(&ids, rng);
                let ordered: Vec<Vec<usize>> = order
                    .elements
                    .iter()
                    .map(|&u| units[u].members.clone())
                    .collect();
                allocate_group_lottery(&ordered, k, n)
            }
            Plan::Individual { requests, weighted } => {
                let order = if *weighted {
                    sample_weighted_order(requests, rng)
                } else {
                    let ids: Vec<usize> = (0..n).collect();
                    sample_uniform_order(&ids, rng)
                };
                let seq: Vec<(usize, usize)> =
                    order.elements.iter().map(|&i| (i, requests[i])).collect();
                allocate_individual(&seq, k, n)
            }
            Plan::Fair {
                units,
                lottery,
                picker,
            } => {
                let mut alloc = Allocation::empty(k, n);
                let pick = picker.as_ref().map_or(0, |p| p.sample(rng));
                for &u in &lottery.support[pick].0 {
                    for &i in &units[u].members {
                        alloc.x[i] = 1;
                    }
                }
                alloc
            }
        }
    }

    /// One outcome summarized as tickets per true group, drawing only as much
    /// of the order as the allocation consumes. Same law as [`Self::run`].
    pub fn sample_tickets<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Scratch) {
        let k = self.inst.k();
        scratch.reset(self.inst.m());
        match &self.plan {
            Plan::Groups(units) if units.is_empty() => {}
            Plan::Groups(units) if self.kind == MechanismKind::Glr => {
                let mut remaining = k;
                loop {
                    let u = &units[rng.random_range(0..units.len())];
                    if u.members.len() > remaining {
                        break;
                    }
                    remaining -= u.members.len();
                    for &(g, c) in &u.hits {
                        scratch.give(g, c);
                    }
                }
            }
            Plan::Groups(units) => {
                scratch.begin_uniform(units.len());
                let mut remaining = k;
                while remaining > 0 {
                    let Some(u) = scratch.next_uniform(units.len(), rng) else {
                        break;
                    };
                    let u = &units[u];
                    if u.members.len() > remaining {
                        break;
                    }
                    remaining -= u.members.len();
                    for &(g, c) in &u.hits {
                        scratch.give(g, c);
                    }
                }
                scratch.end_uniform();
            }
            Plan::Individual {
                requests,
                weighted: false,
            } => {
                let n = requests.len();
                scratch.begin_uniform(n);
                let mut remaining = k;
                while remaining > 0 {
                    let Some(i) = scratch.next_uniform(n, rng) else {
                        break;
                    };
                    let x = requests[i].min(remaining);
                    remaining -= x;
                    scratch.give(self.group_of[i], x);
                }
                scratch.end_uniform();
            }
            Plan::Individual {
                requests,
                weighted: true,
            } => {
                let mut keys = std::mem::take(&mut scratch.heap);
                keys.clear();
                keys.extend(requests.iter().enumerate().map(|(i, &a)| {
                    let x: f64 = rng.sample(Exp1);
                    Reverse(Key(a as f64 * x, i))
                }));
                let mut heap = BinaryHeap::from(keys);
                let mut remaining = k;
                while remaining > 0 {
                    let Some(Reverse(Key(_, i))) = heap.pop() else {
                        break;
                    };
                    let x = requests[i].min(remaining);
                    remaining -= x;
                    scratch.give(self.group_of[i], x);
                }
                scratch.heap = heap.into_vec();
            }
            Plan::Fair {
                units,
                lottery,
                picker,
            } => {
                let pick = picker.as_ref().map_or(0, |p| p.sample(rng));
                for &u in &lottery.support[pick].0 {
                    for &(g, c) in &units[u].hits {
                        scratch.give(g, c);
                    }
                }
            }
        }
    }
}

/// Validates the profile and samples one allocation.
pub fn run_mechanism<R: Rng + ?Sized>(
    kind: MechanismKind,
    inst: &Instance,
    profile: &ActionProfile,
    rng: &mut R,
) -> Result<Allocation> {
    Ok(Mechanism::new(kind, inst, profile)?.run(rng))
}

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Smallest 1-based `T` with `sizes[0] + ... + sizes[T-1] >= c`.
pub fn tau(c: usize, sizes_in_order: &[usize]) -> Result<usize> {
    if c == 0 {
        return Err(Error::Nonpositive("budget c"));
    }
    let mut acc = 0usize;
    for (t, &s) in sizes_in_order.iter().enumerate() {
        acc += s;
        if acc >= c {
            return Ok(t + 1);
        }
    }
    Err(Error::InsufficientTotal {
        budget: c,
        total: acc,
    })
}

/// Per-agent ticket counts of one lottery outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Allocation {
    pub k: usize,
    pub x: Vec<usize>,
}

impl Allocation {
    pub fn empty(k: usize, n: usize) -> Self {
        Allocation { k, x: vec![0; n] }
    }

    pub fn total(&self) -> usize {
        self.x.iter().sum()
    }

    pub fn group_tickets(&self, inst: &Instance) -> Vec<usize> {
        (0..inst.m())
            .map(|g| inst.members(g).map(|i| self.x[i]).sum())
            .collect()
    }

    pub fn group_success(&self, inst: &Instance) -> Vec<bool> {
        self.group_tickets(inst)
            .iter()
            .zip(inst.group_sizes())
            .map(|(&t, &s)| t >= s)
            .collect()
    }

    pub fn successful_agents(&self, inst: &Instance) -> usize {
        self.group_success(inst)
            .iter()
            .zip(inst.group_sizes())
            .filter(|(ok, _)| **ok)
            .map(|(_, &s)| s)
            .sum()
    }

    /// Tickets not held by members of successful groups.
    pub fn wasted(&self, inst: &Instance) -> usize {
        let tickets = self.group_tickets(inst);
        let used: usize = tickets
            .iter()
            .zip(inst.group_sizes())
            .filter(|(&t, &s)| t >= s)
            .map(|(&t, _)| t)
            .sum();
        self.k - used
    }
}

/// Serves valid groups in the given order, one ticket per member, until the
/// next group no longer fits. Exactly the first `tau(k+1) - 1` groups succeed.
pub fn allocate_group_lottery(valid_in_order: &[Vec<usize>], k: usize, n: usize) -> Allocation {
    let mut alloc = Allocation::empty(k, n);
    let mut remaining = k;
    for group in valid_in_order {
        if group.len() > remaining {
            break;
        }
        remaining -= group.len();
        for &i in group {
            alloc.x[i] = 1;
        }
    }
    alloc
}

/// `x_t = min(a_t, max(k - sum of earlier requests, 0))` over `(agent, request)`
/// pairs in processing order.
pub fn allocate_individual(requests_in_order: &[(usize, usize)], k: usize, n: usize) -> Allocation {
    let mut alloc = Allocation::empty(k, n);
    let mut requested_before = 0usize;
    for &(agent, a) in requests_in_order {
        alloc.x[agent] = a.min(k.saturating_sub(requested_before));
        requested_before = requested_before.saturating_add(a);
    }
    alloc
}

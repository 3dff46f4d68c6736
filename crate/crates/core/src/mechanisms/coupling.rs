use rand::Rng;
use serde::Serialize;

use super::allocate::{allocate_group_lottery, allocate_individual};
use crate::instance::Instance;

/// One draw of the master agent sequence and the three orders derived from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoupledTriple {
    /// Agents drawn i.i.d. with `P(i) ∝ 1/|G_i|` until every agent appeared.
    pub master: Vec<usize>,
    /// Group of each master element.
    pub sigma_gr: Vec<usize>,
    /// Master sequence with repeated agents removed.
    pub sigma_iw: Vec<usize>,
    /// Group sequence with repeated groups removed.
    pub sigma_gl: Vec<usize>,
}

pub fn sample_coupled_triple<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> CoupledTriple {
    let n = inst.n();
    let mut seen_agent = vec![false; n];
    let mut seen_group = vec![false; inst.m()];
    let mut remaining = n;
    let mut t = CoupledTriple {
        master: Vec::new(),
        sigma_gr: Vec::new(),
        sigma_iw: Vec::with_capacity(n),
        sigma_gl: Vec::with_capacity(inst.m()),
    };
    while remaining > 0 {
        // Uniform group, then uniform member: weight 1/|G| per agent.
        let g = rng.random_range(0..inst.m());
        let i = inst.agent(g, rng.random_range(0..inst.group_size(g)));
        t.master.push(i);
        t.sigma_gr.push(g);
        if !seen_agent[i] {
            seen_agent[i] = true;
            remaining -= 1;
            t.sigma_iw.push(i);
        }
        if !seen_group[g] {
            seen_group[g] = true;
            t.sigma_gl.push(g);
        }
    }
    t
}

/// Per-group success of GLR, IW and GL driven by one coupled triple, all under
/// group request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledOutcome {
    pub glr: Vec<bool>,
    pub iw: Vec<bool>,
    pub gl: Vec<bool>,
}

impl CoupledOutcome {
    /// Groups where `glr <= iw <= gl` fails.
    pub fn violations(&self) -> Vec<usize> {
        (0..self.gl.len())
            .filter(|&g| (self.glr[g] && !self.iw[g]) || (self.iw[g] && !self.gl[g]))
            .collect()
    }
}

pub fn coupled_outcome(inst: &Instance, triple: &CoupledTriple) -> CoupledOutcome {
    let k = inst.k();
    let mut glr = vec![false; inst.m()];
    let mut remaining = k;
    for &g in &triple.sigma_gr {
        let s = inst.group_size(g);
        if s > remaining {
            break;
        }
        remaining -= s;
        glr[g] = true;
    }

    let group_of = inst.group_of_agents();
    let requests: Vec<(usize, usize)> = triple
        .sigma_iw
        .iter()
        .map(|&i| (i, inst.group_size(group_of[i])))
        .collect();
    let iw = allocate_individual(&requests, k, inst.n()).group_success(inst);

    let ordered: Vec<Vec<usize>> = triple
        .sigma_gl
        .iter()
        .map(|&g| inst.members(g).collect())
        .collect();
    let gl = allocate_group_lottery(&ordered, k, inst.n()).group_success(inst);

    CoupledOutcome { glr, iw, gl }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn derived_sequences_follow_definitions() {
        let inst = Instance::new(1, vec![2, 1]).unwrap();
        let mut rng = stream(5);
        for _ in 0..200 {
            let t = sample_coupled_triple(&inst, &mut rng);
            let mut iw = t.sigma_iw.clone();
            iw.sort_unstable();
            assert_eq!(iw, vec![0, 1, 2]);
            let mut gl = t.sigma_gl.clone();
            gl.sort_unstable();
            assert_eq!(gl, vec![0, 1]);
            assert_eq!(t.sigma_gr.len(), t.master.len());
            assert_eq!(t.sigma_gr[0], t.sigma_gl[0]);
            assert_eq!(t.master[0], t.sigma_iw[0]);
            assert!(coupled_outcome(&inst, &t).violations().is_empty());
        }
    }

    #[test]
    fn singletons_collapse() {
        let inst = Instance::new(2, vec![1, 1, 1, 1]).unwrap();
        let mut rng = stream(6);
        let t = sample_coupled_triple(&inst, &mut rng);
        assert_eq!(t.sigma_iw, t.sigma_gl);
    }
}

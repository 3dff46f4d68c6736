use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluation::{exact_enumerate, exact_target_dp, ENUM_LIMIT};
use crate::instance::Instance;
use crate::mechanisms::{ActionKind, ActionProfile, MechanismKind};

/// Joint action of the target group's members, in member order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupAction {
    Declarations(Vec<Vec<usize>>),
    Requests(Vec<usize>),
}

/// Candidate joint actions for the target group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionUniverse {
    /// GL family: every partition of the group, each block declaring itself,
    /// plus the whole group declaring itself with one outsider added.
    /// Individual lotteries: every request multiset over `1..=cap`, assigned
    /// in ascending order.
    Default,
    Explicit(Vec<GroupAction>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestResponse {
    pub target_group: usize,
    pub best_actions: Vec<GroupAction>,
    pub best_utility: f64,
    pub group_request_utility: f64,
    pub evaluated: usize,
}

const UNIVERSE_LIMIT: usize = 20_000;
const TIE: f64 = 1e-12;

/// Restricted-growth encodings of all set partitions of `0..len`.
fn set_partitions(len: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, len: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == len {
            out.push(prefix.clone());
            return;
        }
        let next = prefix.iter().copied().max().map_or(0, |b| b + 1);
        for b in 0..=next {
            prefix.push(b);
            rec(prefix, len, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), len, &mut out);
    out
}

fn default_universe(
    kind: MechanismKind,
    inst: &Instance,
    target: usize,
) -> Result<Vec<GroupAction>> {
    let members: Vec<usize> = inst.members(target).collect();
    let s = members.len();
    match kind.action_kind() {
        ActionKind::GroupDeclaration => {
            if s > ENUM_LIMIT {
                return Err(Error::TooLarge {
                    what: "target group size",
                    size: s,
                    limit: ENUM_LIMIT,
                });
            }
            let mut out: Vec<GroupAction> = set_partitions(s)
                .into_iter()
                .map(|labels| {
                    let decls = labels
                        .iter()
                        .map(|&b| {
                            (0..s)
                                .filter(|&j| labels[j] == b)
                                .map(|j| members[j])
                                .collect()
                        })
                        .collect();
                    GroupAction::Declarations(decls)
                })
                .collect();
            for outsider in (0..inst.n()).filter(|i| !members.contains(i)) {
                let mut set = members.clone();
                set.push(outsider);
                set.sort_unstable();
                out.push(GroupAction::Declarations(vec![set; s]));
            }
            Ok(out)
        }
        ActionKind::TicketRequest => {
            let cap = kind.request_cap(inst.k());
            let count = (1..=cap)
                .combinations_with_replacement(s)
                .take(UNIVERSE_LIMIT + 1)
                .count();
            if count > UNIVERSE_LIMIT {
                return Err(Error::TooLarge {
                    what: "request universe",
                    size: count,
                    limit: UNIVERSE_LIMIT,
                });
            }
            Ok((1..=cap)
                .combinations_with_replacement(s)
                .map(GroupAction::Requests)
                .collect())
        }
    }
}

fn with_action(
    opponents: &ActionProfile,
    inst: &Instance,
    target: usize,
    action: &GroupAction,
) -> Result<ActionProfile> {
    let members = inst.members(target);
    match (opponents, action) {
        (ActionProfile::GroupDeclaration(d), GroupAction::Declarations(a))
            if a.len() == members.len() =>
        {
            let mut d = d.clone();
            for (i, decl) in members.zip(a) {
                d[i] = decl.clone();
            }
            Ok(ActionProfile::GroupDeclaration(d))
        }
        (ActionProfile::TicketRequest(r), GroupAction::Requests(a)) if a.len() == members.len() => {
            let mut r = r.clone();
            for (i, &x) in members.zip(a) {
                r[i] = x;
            }
            Ok(ActionProfile::TicketRequest(r))
        }
        _ => Err(Error::ProfileMismatch(
            "group action does not match the profile".into(),
        )),
    }
}

/// Exact utility of `target` under `profile`: full enumeration where it fits,
/// otherwise the single-group recursion for request mechanisms.
pub fn target_utility(
    kind: MechanismKind,
    inst: &Instance,
    profile: &ActionProfile,
    target: usize,
) -> Result<f64> {
    match exact_enumerate(kind, inst, profile) {
        Ok(u) => Ok(u.u[target]),
        Err(Error::TooLarge { .. }) if kind.action_kind() == ActionKind::TicketRequest => {
            exact_target_dp(kind, inst, profile, target)
        }
        Err(e) => Err(e),
    }
}

/// Exhaustive search for the target group's best joint action with the
/// opponents' actions fixed.
pub fn best_response_search(
    kind: MechanismKind,
    inst: &Instance,
    target: usize,
    opponents: &ActionProfile,
    universe: &ActionUniverse,
) -> Result<BestResponse> {
    if target >= inst.m() {
        return Err(Error::Invalid(format!(
            "target group {target} out of range"
        )));
    }
    opponents.validate(kind, inst)?;
    let actions = match universe {
        ActionUniverse::Default => default_universe(kind, inst, target)?,
        ActionUniverse::Explicit(a) => a.clone(),
    };
    let truthful = ActionProfile::group_request(kind, inst);
    let truthful_action = match &truthful {
        ActionProfile::GroupDeclaration(d) => {
            GroupAction::Declarations(inst.members(target).map(|i| d[i].clone()).collect())
        }
        ActionProfile::TicketRequest(r) => {
            GroupAction::Requests(inst.members(target).map(|i| r[i]).collect())
        }
    };
    let gr_profile = with_action(opponents, inst, target, &truthful_action)?;
    let group_request_utility = target_utility(kind, inst, &gr_profile, target)?;

    let mut best_utility = f64::NEG_INFINITY;
    let mut best_actions = Vec::new();
    for action in &actions {
        let profile = with_action(opponents, inst, target, action)?;
        let u = target_utility(kind, inst, &profile, target)?;
        if u > best_utility + TIE {
            best_utility = u;
            best_actions = vec![action.clone()];
        } else if (u - best_utility).abs() <= TIE {
            best_actions.push(action.clone());
        }
    }
    Ok(BestResponse {
        target_group: target,
        best_actions,
        best_utility,
        group_request_utility,
        evaluated: actions.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_named, NamedConstruction};

    #[test]
    fn partitions_are_bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52, 203];
        for (n, &b) in bell.iter().enumerate() {
            assert_eq!(set_partitions(n).len(), b);
        }
    }

    #[test]
    fn gl_group_request_beats_splitting() {
        let inst = Instance::new(2, vec![2, 1]).unwrap();
        let opp = ActionProfile::group_declarations(&inst);
        let split = GroupAction::Declarations(vec![vec![0], vec![1]]);
        let u_split = target_utility(
            MechanismKind::Gl,
            &inst,
            &with_action(&opp, &inst, 0, &split).unwrap(),
            0,
        )
        .unwrap();
        assert!((u_split - 1.0 / 3.0).abs() < 1e-12);
        let br = best_response_search(MechanismKind::Gl, &inst, 0, &opp, &ActionUniverse::Default)
            .unwrap();
        assert!((br.group_request_utility - 0.5).abs() < 1e-12);
        assert_eq!(
            br.best_actions,
            vec![GroupAction::Declarations(vec![vec![0, 1], vec![0, 1]])]
        );
    }

    #[test]
    fn il_requests_at_least_group_size_are_optimal() {
        let inst = Instance::new(3, vec![2, 2, 1]).unwrap();
        let opp = ActionProfile::group_request(MechanismKind::Il, &inst);
        let br = best_response_search(MechanismKind::Il, &inst, 0, &opp, &ActionUniverse::Default)
            .unwrap();
        assert!((br.best_utility - br.group_request_utility).abs() < 1e-12);
        for a in &br.best_actions {
            let GroupAction::Requests(r) = a else {
                unreachable!()
            };
            assert!(r.iter().all(|&x| x >= 2), "{r:?}");
        }
        let low = with_action(&opp, &inst, 0, &GroupAction::Requests(vec![1, 2])).unwrap();
        assert!(
            target_utility(MechanismKind::Il, &inst, &low, 0).unwrap() < br.best_utility - 1e-9
        );
    }

    #[test]
    fn iw_twos_beat_group_request_at_seventeen() {
        let inst = generate_named(&NamedConstruction::SplExample { n: 17 }).unwrap();
        let opp = ActionProfile::group_request(MechanismKind::Iw, &inst);
        let g = (0..inst.m()).find(|&g| inst.group_size(g) == 4).unwrap();
        let twos = with_action(&opp, &inst, g, &GroupAction::Requests(vec![2; 4])).unwrap();
        let u_twos = target_utility(MechanismKind::Iw, &inst, &twos, g).unwrap();
        let u_gr = target_utility(MechanismKind::Iw, &inst, &opp, g).unwrap();
        assert!(u_twos > u_gr);
        let br = best_response_search(
            MechanismKind::Iw,
            &inst,
            g,
            &opp,
            &ActionUniverse::Explicit(vec![
                GroupAction::Requests(vec![4; 4]),
                GroupAction::Requests(vec![2; 4]),
            ]),
        )
        .unwrap();
        assert_eq!(br.best_actions, vec![GroupAction::Requests(vec![2; 4])]);
    }
}

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Which mechanism is being run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    /// Group Lottery: uniform order over valid groups, whole groups served.
    Gl,
    /// Individual Lottery: uniform order over agents.
    Il,
    /// Individual Lottery where requests are capped at `ell`.
    IlLimit(usize),
    /// Weighted Individual Lottery: order biased by `1/a_i`.
    Iw,
    /// Group Lottery with Replacement.
    Glr,
    /// Lottery over feasible group subsets with equal marginals.
    FairGl,
}

impl MechanismKind {
    pub fn action_kind(&self) -> ActionKind {
        match self {
            MechanismKind::Gl | MechanismKind::Glr | MechanismKind::FairGl => {
                ActionKind::GroupDeclaration
            }
            MechanismKind::Il | MechanismKind::IlLimit(_) | MechanismKind::Iw => {
                ActionKind::TicketRequest
            }
        }
    }

    /// Largest admissible request under this mechanism.
    pub fn request_cap(&self, k: usize) -> usize {
        match self {
            MechanismKind::IlLimit(ell) => (*ell).min(k),
            _ => k,
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MechanismKind::Gl => f.write_str("gl"),
            MechanismKind::Il => f.write_str("il"),
            MechanismKind::IlLimit(ell) => write!(f, "il_limit:{ell}"),
            MechanismKind::Iw => f.write_str("iw"),
            MechanismKind::Glr => f.write_str("glr"),
            MechanismKind::FairGl => f.write_str("fair_gl"),
        }
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if let Some(ell) = lower
            .strip_prefix("il_limit:")
            .or_else(|| lower.strip_prefix("il:"))
            .or_else(|| lower.strip_prefix("il_limit"))
        {
            let ell: usize = ell
                .trim_start_matches([':', '='])
                .parse()
                .map_err(|_| Error::Invalid(format!("bad limit in mechanism '{s}'")))?;
            if ell == 0 {
                return Err(Error::Nonpositive("limit"));
            }
            return Ok(MechanismKind::IlLimit(ell));
        }
        match lower.as_str() {
            "gl" => Ok(MechanismKind::Gl),
            "il" => Ok(MechanismKind::Il),
            "iw" | "wil" => Ok(MechanismKind::Iw),
            "glr" | "gr" => Ok(MechanismKind::Glr),
            "fair_gl" | "fairgl" | "fair" => Ok(MechanismKind::FairGl),
            _ => Err(Error::Invalid(format!("unknown mechanism '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    GroupDeclaration,
    TicketRequest,
}

/// Per-agent actions, indexed by global agent id.
///
/// File form: `{ "kind": "group_declaration", "actions": [[0,1],[0,1],[2]] }`
/// or `{ "kind": "ticket_request", "actions": [2,2,1] }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    content = "actions",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum ActionProfile {
    GroupDeclaration(Vec<Vec<usize>>),
    TicketRequest(Vec<usize>),
}

impl ActionProfile {
    /// Every agent declares exactly its own group.
    pub fn group_declarations(inst: &Instance) -> Self {
        let mut decls = Vec::with_capacity(inst.n());
        for g in 0..inst.m() {
            let group: Vec<usize> = inst.members(g).collect();
            for _ in inst.members(g) {
                decls.push(group.clone());
            }
        }
        ActionProfile::GroupDeclaration(decls)
    }

    /// Every agent requests its group size, capped at `cap`.
    pub fn group_requests(inst: &Instance, cap: usize) -> Self {
        let mut reqs = Vec::with_capacity(inst.n());
        for &s in inst.group_sizes() {
            reqs.extend(std::iter::repeat_n(s.min(cap), s));
        }
        ActionProfile::TicketRequest(reqs)
    }

    /// The truthful profile for `kind`.
    pub fn group_request(kind: MechanismKind, inst: &Instance) -> Self {
        match kind.action_kind() {
            ActionKind::GroupDeclaration => Self::group_declarations(inst),
            ActionKind::TicketRequest => Self::group_requests(inst, kind.request_cap(inst.k())),
        }
    }

    pub fn kind(&self) -> ActionKind {
        match self {
            ActionProfile::GroupDeclaration(_) => ActionKind::GroupDeclaration,
            ActionProfile::TicketRequest(_) => ActionKind::TicketRequest,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ActionProfile::GroupDeclaration(d) => d.len(),
            ActionProfile::TicketRequest(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks length, agent ids and the admissible request range for `kind`.
    pub fn validate(&self, kind: MechanismKind, inst: &Instance) -> Result<()> {
        if self.kind() != kind.action_kind() {
            return Err(Error::ProfileMismatch(format!(
                "{kind} expects {:?} actions",
                kind.action_kind()
            )));
        }
        if self.len() != inst.n() {
            return Err(Error::ProfileMismatch(format!(
                "profile has {} actions for {} agents",
                self.len(),
                inst.n()
            )));
        }
        match self {
            ActionProfile::GroupDeclaration(decls) => {
                for (agent, decl) in decls.iter().enumerate() {
                    if let Some(&bad) = decl.iter().find(|&&j| j >= inst.n()) {
                        return Err(Error::ActionOutOfRange {
                            agent,
                            detail: format!("declared unknown agent {bad}"),
                        });
                    }
                }
            }
            ActionProfile::TicketRequest(reqs) => {
                let cap = kind.request_cap(inst.k());
                for (agent, &a) in reqs.iter().enumerate() {
                    if a == 0 || a > cap {
                        return Err(Error::ActionOutOfRange {
                            agent,
                            detail: format!("request {a} outside 1..={cap}"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn requests(&self) -> Option<&[usize]> {
        match self {
            ActionProfile::TicketRequest(r) => Some(r),
            ActionProfile::GroupDeclaration(_) => None,
        }
    }
}

/// Sets `S` such that every member of `S` declared exactly `S`, ordered by
/// smallest member. Declarations are compared as sets.
pub fn valid_groups(declarations: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let normalized: Vec<BTreeSet<usize>> = declarations
        .iter()
        .map(|d| d.iter().copied().collect())
        .collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (agent, decl) in normalized.iter().enumerate() {
        if !decl.contains(&agent) || seen.contains(&agent) {
            continue;
        }
        let valid = decl
            .iter()
            .all(|&j| j < normalized.len() && normalized[j] == *decl);
        if valid {
            seen.extend(decl.iter().copied());
            out.push(decl.iter().copied().collect());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_groups_by_definition() {
        assert_eq!(valid_groups(&[vec![0, 1], vec![0, 1]]), vec![vec![0, 1]]);
        assert_eq!(valid_groups(&[vec![0, 1], vec![1]]), vec![vec![1]]);
        assert_eq!(valid_groups(&[vec![1], vec![0]]), Vec::<Vec<usize>>::new());
        let inst = Instance::new(3, vec![1, 2, 2]).unwrap();
        let ActionProfile::GroupDeclaration(d) = ActionProfile::group_declarations(&inst) else {
            unreachable!()
        };
        assert_eq!(valid_groups(&d), vec![vec![0], vec![1, 2], vec![3, 4]]);
    }

    #[test]
    fn declaration_order_is_irrelevant() {
        assert_eq!(valid_groups(&[vec![1, 0], vec![0, 1, 1]]), vec![vec![0, 1]]);
    }

    #[test]
    fn kind_parsing_round_trips() {
        for kind in [
            MechanismKind::Gl,
            MechanismKind::Il,
            MechanismKind::IlLimit(3),
            MechanismKind::Iw,
            MechanismKind::Glr,
            MechanismKind::FairGl,
        ] {
            assert_eq!(kind.to_string().parse::<MechanismKind>().unwrap(), kind);
        }
        assert!("xyz".parse::<MechanismKind>().is_err());
        assert_eq!(
            "IL:2".parse::<MechanismKind>().unwrap(),
            MechanismKind::IlLimit(2)
        );
    }

    #[test]
    fn validation_catches_out_of_range_requests() {
        let inst = Instance::new(3, vec![1, 2, 2]).unwrap();
        let p = ActionProfile::TicketRequest(vec![1, 2, 2, 4, 2]);
        assert!(matches!(
            p.validate(MechanismKind::Il, &inst),
            Err(Error::ActionOutOfRange { agent: 3, .. })
        ));
        let p = ActionProfile::TicketRequest(vec![1, 2, 2, 2, 2]);
        assert!(p.validate(MechanismKind::Il, &inst).is_ok());
        assert!(p.validate(MechanismKind::IlLimit(1), &inst).is_err());
        assert!(p.validate(MechanismKind::Gl, &inst).is_err());
    }

    #[test]
    fn profile_file_format() {
        let p: ActionProfile =
            serde_json::from_str(r#"{"kind":"ticket_request","actions":[2,2,1]}"#).unwrap();
        assert_eq!(p, ActionProfile::TicketRequest(vec![2, 2, 1]));
        let d: ActionProfile =
            serde_json::from_str(r#"{"kind":"group_declaration","actions":[[0,1],[0,1]]}"#)
                .unwrap();
        assert_eq!(
            d,
            ActionProfile::GroupDeclaration(vec![vec![0, 1], vec![0, 1]])
        );
        assert!(serde_json::from_str::<ActionProfile>(
            r#"{"kind":"ticket_request","actions":[1],"x":0}"#
        )
        .is_err());
    }
}

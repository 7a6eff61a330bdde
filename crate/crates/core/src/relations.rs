//! The SD relation and the fairness / efficiency verifiers.
//!
//! Every verifier returns a [`PropertyReport`]; a failing report carries a
//! [`Witness`] that re-validates against the property it violates.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::Result;
use crate::model::{Allocation, Instance, WeakOrder};
use crate::oracle;

/// Which clause of extended-setting stability was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClause {
    JustifiedEnvy,
    IndividualRationality,
    Wastefulness,
}

/// A counterexample to a property. Participants and teams are zero-based
/// indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `envious` envies the team of `envied`.
    Envy { envious: usize, envied: usize },
    /// `team` fails the SD-EF1 comparison toward `other`.
    TeamEnvy { team: usize, other: usize },
    Imbalance { larger: usize, smaller: usize },
    /// Exchanging `first` and `second` is a beneficial swap.
    Swap { first: usize, second: usize },
    /// Each participant moves into the team of the next one (cyclically).
    ParetoCycle { cycle: Vec<usize> },
    ParetoImprovement { bundles: Vec<Vec<usize>> },
    Unstable {
        clause: StabilityClause,
        participant: usize,
        /// Team involved; `None` stands for unassigned.
        team: Option<usize>,
        other: Option<usize>,
    },
}

impl Witness {
    /// Human-readable rendering with participant names and one-based teams.
    pub fn describe(&self, names: &[String]) -> String {
        let team = |t: Option<usize>| t.map_or_else(|| "unassigned".to_string(), |t| format!("team {}", t + 1));
        match self {
            Witness::Envy { envious, envied } => {
                format!("{} envies {}", names[*envious], names[*envied])
            }
            Witness::TeamEnvy { team: i, other } => {
                format!("team {} toward team {}", i + 1, other + 1)
            }
            Witness::Imbalance { larger, smaller } => {
                format!("team {} and team {} differ by more than one", larger + 1, smaller + 1)
            }
            Witness::Swap { first, second } => {
                format!("beneficial swap between {} and {}", names[*first], names[*second])
            }
            Witness::ParetoCycle { cycle } => {
                let parts: Vec<&str> = cycle.iter().map(|&p| names[p].as_str()).collect();
                format!("Pareto improvement cycle ({})", parts.join(", "))
            }
            Witness::ParetoImprovement { bundles } => {
                let parts: Vec<String> = bundles
                    .iter()
                    .map(|b| format!("{{{}}}", b.iter().map(|&p| names[p].as_str()).collect::<Vec<_>>().join(",")))
                    .collect();
                format!("Pareto improvement ({})", parts.join(", "))
            }
            Witness::Unstable { clause, participant, team: t, other } => {
                let what = match clause {
                    StabilityClause::JustifiedEnvy => "justified envy",
                    StabilityClause::IndividualRationality => "not individually rational",
                    StabilityClause::Wastefulness => "wasteful",
                };
                let mut s = format!("{what}: {} at {}", names[*participant], team(*t));
                if let Some(o) = other {
                    match clause {
                        StabilityClause::JustifiedEnvy => s.push_str(&format!(" toward {}", names[*o])),
                        _ => s.push_str(&format!(" (team {})", o + 1)),
                    }
                }
                s
            }
        }
    }
}

/// Result of a verifier: the witness is present iff the property fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyReport {
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl PropertyReport {
    pub fn pass() -> Self {
        Self { holds: true, witness: None }
    }

    pub fn fail(witness: Witness) -> Self {
        Self { holds: false, witness: Some(witness) }
    }

    fn from_witness(witness: Option<Witness>) -> Self {
        witness.map_or_else(Self::pass, Self::fail)
    }
}

/// `Q ≿SD R` under `order`: some `|R|`-subset of `Q` maps bijectively onto
/// `R` with every element weakly preferred to its image.
///
/// Greedy: sort both sides best-first and compare the top `|R|` of `Q`
/// element-wise with `R`.
pub fn sd_dominates(order: &WeakOrder, q: &[usize], r: &[usize]) -> bool {
    if q.len() < r.len() {
        return false;
    }
    let mut qt: Vec<usize> = q.iter().map(|&p| order.tier_of(p)).collect();
    let mut rt: Vec<usize> = r.iter().map(|&p| order.tier_of(p)).collect();
    qt.sort_unstable();
    rt.sort_unstable();
    qt.iter().zip(&rt).all(|(a, b)| a <= b)
}

/// `Q ≻SD R`: `Q ≿SD R` and not `R ≿SD Q`.
pub fn sd_strictly_dominates(order: &WeakOrder, q: &[usize], r: &[usize]) -> bool {
    sd_dominates(order, q, r) && !sd_dominates(order, r, q)
}

/// `A_i ≿SD (B \ X)` for some `|X| <= 1`.
pub(crate) fn sd_dominates_up_to_one(order: &WeakOrder, a: &[usize], b: &[usize]) -> bool {
    if sd_dominates(order, a, b) {
        return true;
    }
    let mut rest = Vec::with_capacity(b.len());
    (0..b.len()).any(|skip| {
        rest.clear();
        rest.extend(b.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &p)| p));
        sd_dominates(order, a, &rest)
    })
}

/// Participant-EF (`justified = false`) or participant-justified EF.
/// Witness: `(p, p')` where `p` envies `p'`.
pub fn check_participant_ef(inst: &Instance, alloc: &Allocation, justified: bool) -> PropertyReport {
    let assignment = alloc.assignment(inst.participant_count());
    for (p, own) in assignment.iter().enumerate() {
        let Some(i) = *own else { continue };
        let pref = inst.participant_pref(p);
        for (q, other) in assignment.iter().enumerate() {
            let Some(j) = *other else { continue };
            if i == j || !pref.prefers(j, i) {
                continue;
            }
            if !justified || inst.team_pref(j).prefers(p, q) {
                return PropertyReport::fail(Witness::Envy { envious: p, envied: q });
            }
        }
    }
    PropertyReport::pass()
}

/// Team-SD-EF1 (`justified = false`) or team-justified SD-EF1.
/// Witness: the ordered team pair `(i, j)` that fails.
pub fn check_team_sd_ef1(inst: &Instance, alloc: &Allocation, justified: bool) -> PropertyReport {
    let n = alloc.team_count();
    for i in 0..n {
        let order = inst.team_pref(i);
        for j in (0..n).filter(|&j| j != i) {
            let target: Vec<usize> = alloc
                .bundle(j)
                .iter()
                .copied()
                .filter(|&p| !justified || inst.participant_pref(p).weakly_prefers(i, j))
                .collect();
            if !sd_dominates_up_to_one(order, alloc.bundle(i), &target) {
                return PropertyReport::fail(Witness::TeamEnvy { team: i, other: j });
            }
        }
    }
    PropertyReport::pass()
}

/// Bundle sizes differ pairwise by at most one.
pub fn check_balanced(alloc: &Allocation) -> PropertyReport {
    let sizes = alloc.sizes();
    let larger = (0..sizes.len()).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i)));
    let smaller = (0..sizes.len()).min_by_key(|&i| (sizes[i], i));
    match (larger, smaller) {
        (Some(l), Some(s)) if sizes[l] > sizes[s] + 1 => {
            PropertyReport::fail(Witness::Imbalance { larger: l, smaller: s })
        }
        _ => PropertyReport::pass(),
    }
}

/// Whether exchanging `p` (in team `i`) and `q` (in team `j`) leaves all four
/// parties weakly better and one strictly better. For a one-for-one
/// exchange the SD comparison of a team's bundles reduces to comparing the
/// incoming and outgoing participant.
pub(crate) fn is_beneficial_swap(inst: &Instance, p: usize, i: usize, q: usize, j: usize) -> bool {
    let changes = [
        inst.participant_pref(p).cmp(j, i),
        inst.participant_pref(q).cmp(i, j),
        inst.team_pref(i).cmp(q, p),
        inst.team_pref(j).cmp(p, q),
    ];
    changes.iter().all(|c| c.is_weakly_better()) && changes.contains(&crate::model::Comparison::Better)
}

pub fn check_swap_stable(inst: &Instance, alloc: &Allocation) -> PropertyReport {
    let assignment = alloc.assignment(inst.participant_count());
    for p in 0..assignment.len() {
        let Some(i) = assignment[p] else { continue };
        for q in p + 1..assignment.len() {
            let Some(j) = assignment[q] else { continue };
            if i != j && is_beneficial_swap(inst, p, i, q, j) {
                return PropertyReport::fail(Witness::Swap { first: p, second: q });
            }
        }
    }
    PropertyReport::pass()
}

/// Finds a Pareto improvement cycle `p_1, ..., p_k` (each moves into the
/// next one's team, cyclically), or `None`.
///
/// The edge `u -> v` exists when `u` weakly prefers `v`'s team to their own
/// and `v`'s team weakly prefers `u` to `v`; it is strict if either
/// preference is strict. A cycle exists iff some strict edge `u -> v` has
/// `u` reachable from `v`.
pub fn find_pareto_improvement_cycle(inst: &Instance, alloc: &Allocation) -> Option<Vec<usize>> {
    let m = inst.participant_count();
    let team = alloc.assignment(m);
    let mut adj = vec![Vec::new(); m];
    let mut strict = Vec::new();
    for u in 0..m {
        let Some(a) = team[u] else { continue };
        for v in (0..m).filter(|&v| v != u) {
            let Some(b) = team[v] else { continue };
            let (pu, tb) = (inst.participant_pref(u), inst.team_pref(b));
            if pu.weakly_prefers(b, a) && tb.weakly_prefers(u, v) {
                adj[u].push(v);
                if pu.prefers(b, a) || tb.prefers(u, v) {
                    strict.push((u, v));
                }
            }
        }
    }
    for (u, v) in strict {
        if let Some(path) = bfs_path(&adj, v, u) {
            let mut cycle = Vec::with_capacity(path.len());
            cycle.push(u);
            cycle.extend(&path[..path.len() - 1]);
            return Some(cycle);
        }
    }
    None
}

/// Shortest path `from -> to` (inclusive of both ends).
fn bfs_path(adj: &[Vec<usize>], from: usize, to: usize) -> Option<Vec<usize>> {
    let mut parent = vec![usize::MAX; adj.len()];
    parent[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = parent[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &v in &adj[u] {
            if parent[v] == usize::MAX {
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    None
}

/// PO judged only through Pareto improvement cycles. Exact for
/// participant-justified EF allocations.
pub fn check_po_by_cycles(inst: &Instance, alloc: &Allocation) -> PropertyReport {
    PropertyReport::from_witness(
        find_pareto_improvement_cycle(inst, alloc).map(|cycle| Witness::ParetoCycle { cycle }),
    )
}

/// Whether `new` Pareto dominates `old`: every participant weakly prefers
/// their team in `new`, every team's new bundle SD-dominates its old one,
/// and some party is strictly better off. Incomparable bundles are not
/// weakly better.
pub fn pareto_dominates(inst: &Instance, new: &Allocation, old: &Allocation) -> bool {
    let m = inst.participant_count();
    let (tn, to) = (new.assignment(m), old.assignment(m));
    let mut strict = false;
    for p in 0..m {
        let (Some(a), Some(b)) = (tn[p], to[p]) else { return false };
        match inst.participant_pref(p).cmp(a, b) {
            crate::model::Comparison::Worse => return false,
            crate::model::Comparison::Better => strict = true,
            crate::model::Comparison::Equal => {}
        }
    }
    for i in 0..inst.team_count() {
        let order = inst.team_pref(i);
        let (nb, ob) = (new.bundle(i), old.bundle(i));
        if !sd_dominates(order, nb, ob) {
            return false;
        }
        if !strict && !sd_dominates(order, ob, nb) {
            strict = true;
        }
    }
    strict
}

/// Pareto optimality. Participant-justified EF allocations are decided by
/// the cycle criterion; anything else falls back to brute-force search
/// over all allocations, bounded by `cap`.
pub fn check_po(inst: &Instance, alloc: &Allocation, cap: u64) -> Result<PropertyReport> {
    if check_participant_ef(inst, alloc, true).holds {
        return Ok(check_po_by_cycles(inst, alloc));
    }
    oracle::check_po_brute_force(inst, alloc, cap)
}

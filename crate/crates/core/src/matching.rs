//! Constrained bipartite matching between participants and team-slots, and
//! the lexicographic optimizer used in every iteration of the main
//! algorithm.
//!
//! The optimizer runs three stages of feasibility probes:
//!
//! 1. slot values, slot by slot in round-robin order, best value first
//!    (an unmatched slot counts as `-inf`);
//! 2. participant outcomes in index order, where being matched to any
//!    eligible tier beats being unmatched;
//! 3. a greedy pass over a total order on participant-slot pairs, forcing
//!    every pair that keeps all earlier fixings feasible.
//!
//! Each probe is a [`max_matching`] call under [`LexConstraints`].

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EligibilitySets, Instance, SlotLayout, SlotMatching};

/// Value fixed for a slot during stage 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SlotValue {
    Undecided,
    Fixed(i64),
    MinusInfinity,
}

impl SlotValue {
    /// Ordering key with `Undecided` treated as `-inf`.
    pub fn as_key(self) -> Option<i64> {
        match self {
            SlotValue::Fixed(v) => Some(v),
            _ => None,
        }
    }
}

/// Outcome fixed for a participant during stage 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ParticipantOutcome {
    Undecided,
    /// Matched to some team in this tier of their own order.
    Tier(usize),
    Unmatched,
}

/// Permitted participant-slot edges together with the slot's value for the
/// participant and the participant's tier for the slot's team.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EligibilityGraph {
    participants: usize,
    slots: usize,
    adj: Vec<Vec<usize>>,
    value: Vec<i64>,
    tier: Vec<usize>,
}

impl EligibilityGraph {
    /// Graph from explicit `(participant, slot, slot_value, participant_tier)`
    /// edges.
    pub fn from_edges(participants: usize, slots: usize, edges: &[(usize, usize, i64, usize)]) -> Self {
        let mut g = Self {
            participants,
            slots,
            adj: vec![Vec::new(); participants],
            value: vec![0; participants * slots],
            tier: vec![0; participants * slots],
        };
        for &(p, x, v, t) in edges {
            g.adj[p].push(x);
            g.value[p * slots + x] = v;
            g.tier[p * slots + x] = t;
        }
        for a in &mut g.adj {
            a.sort_unstable();
            a.dedup();
        }
        g
    }

    /// Edges `(p, x)` with `x`'s team in `E_p`. A slot's value for `p` is
    /// `tiers - tier(p)` under its team's order, so all slots of a team
    /// share values and better tiers are worth more.
    pub fn build(inst: &Instance, layout: &SlotLayout, elig: &EligibilitySets) -> Self {
        let (m, l) = (inst.participant_count(), layout.len());
        let mut edges = Vec::new();
        for p in 0..m {
            for x in 0..l {
                let team = layout.team_of(x);
                if elig.contains(p, team) {
                    let order = inst.team_pref(team);
                    let value = (order.tier_count() - order.tier_of(p)) as i64;
                    edges.push((p, x, value, inst.participant_pref(p).tier_of(team)));
                }
            }
        }
        Self::from_edges(m, l, &edges)
    }

    pub fn participant_count(&self) -> usize {
        self.participants
    }

    pub fn slot_count(&self) -> usize {
        self.slots
    }

    pub fn neighbors(&self, participant: usize) -> &[usize] {
        &self.adj[participant]
    }

    pub fn has_edge(&self, participant: usize, slot: usize) -> bool {
        self.adj[participant].binary_search(&slot).is_ok()
    }

    /// Slot `slot`'s value for `participant`. Meaningful only on edges.
    pub fn value(&self, participant: usize, slot: usize) -> i64 {
        self.value[participant * self.slots + slot]
    }

    /// Participant's tier for the slot's team. Meaningful only on edges.
    pub fn participant_tier(&self, participant: usize, slot: usize) -> usize {
        self.tier[participant * self.slots + slot]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(p, xs)| xs.iter().map(move |&x| (p, x)))
    }
}

/// Fixings accumulated by the lexicographic optimizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexConstraints {
    pub slot_values: Vec<SlotValue>,
    pub participant_outcomes: Vec<ParticipantOutcome>,
    pub forced_pairs: Vec<(usize, usize)>,
}

impl LexConstraints {
    pub fn unconstrained(participants: usize, slots: usize) -> Self {
        Self {
            slot_values: vec![SlotValue::Undecided; slots],
            participant_outcomes: vec![ParticipantOutcome::Undecided; participants],
            forced_pairs: Vec::new(),
        }
    }

    fn edge_allowed(&self, graph: &EligibilityGraph, p: usize, x: usize) -> bool {
        let slot_ok = match self.slot_values[x] {
            SlotValue::Undecided => true,
            SlotValue::Fixed(v) => graph.value(p, x) == v,
            SlotValue::MinusInfinity => false,
        };
        let participant_ok = match self.participant_outcomes[p] {
            ParticipantOutcome::Undecided => true,
            ParticipantOutcome::Tier(t) => graph.participant_tier(p, x) == t,
            ParticipantOutcome::Unmatched => false,
        };
        slot_ok && participant_ok
    }
}

struct Workspace {
    adj: Vec<Vec<usize>>,
    rev: Vec<Vec<usize>>,
    slot_of: Vec<Option<usize>>,
    participant_of: Vec<Option<usize>>,
    required_slot: Vec<bool>,
}

impl Workspace {
    fn new(graph: &EligibilityGraph, c: &LexConstraints) -> Result<Self> {
        let (m, l) = (graph.participant_count(), graph.slot_count());
        let mut forced_slot = vec![None; m];
        let mut forced_participant = vec![None; l];
        for &(p, x) in &c.forced_pairs {
            if p >= m || x >= l {
                return Err(Error::Infeasible(format!("forced pair ({p}, {x}) out of range")));
            }
            if forced_slot[p].replace(x).is_some() || forced_participant[x].replace(p).is_some() {
                return Err(Error::Infeasible(format!("forced pair ({p}, {x}) is not one-to-one")));
            }
            if !graph.has_edge(p, x) || !c.edge_allowed(graph, p, x) {
                return Err(Error::Infeasible(format!("forced pair ({p}, {x}) is not a permitted edge")));
            }
        }
        let mut adj = vec![Vec::new(); m];
        let mut rev = vec![Vec::new(); l];
        for (p, x) in graph.edges() {
            if !c.edge_allowed(graph, p, x) {
                continue;
            }
            if forced_slot[p].is_some_and(|fx| fx != x) || forced_participant[x].is_some_and(|fp| fp != p) {
                continue;
            }
            adj[p].push(x);
            rev[x].push(p);
        }
        let required_slot = (0..l)
            .map(|x| matches!(c.slot_values[x], SlotValue::Fixed(_)) || forced_participant[x].is_some())
            .collect();
        Ok(Self { adj, rev, slot_of: vec![None; m], participant_of: vec![None; l], required_slot })
    }

    fn augment_from(&mut self, p: usize, visited: &mut [bool]) -> bool {
        for k in 0..self.adj[p].len() {
            let x = self.adj[p][k];
            if std::mem::replace(&mut visited[x], true) {
                continue;
            }
            let free = match self.participant_of[x] {
                None => true,
                Some(q) => self.augment_from(q, visited),
            };
            if free {
                self.participant_of[x] = Some(p);
                self.slot_of[p] = Some(x);
                return true;
            }
        }
        false
    }

    /// Covers the unmatched slot `y` without uncovering any participant or
    /// any required slot: walks an alternating path from `y` that ends at a
    /// free participant or at a non-required slot which gets dropped.
    fn cover_slot(&mut self, y: usize) -> bool {
        let l = self.participant_of.len();
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; l];
        let mut seen = vec![false; l];
        seen[y] = true;
        let mut queue = VecDeque::from([y]);
        while let Some(s) = queue.pop_front() {
            for k in 0..self.rev[s].len() {
                let p = self.rev[s][k];
                if self.participant_of[s] == Some(p) {
                    continue;
                }
                let terminal = match self.slot_of[p] {
                    None => true,
                    Some(next) if seen[next] => continue,
                    Some(next) if !self.required_slot[next] => true,
                    Some(next) => {
                        seen[next] = true;
                        parent[next] = Some((s, p));
                        queue.push_back(next);
                        false
                    }
                };
                if terminal {
                    self.shift_chain(y, s, p, &parent);
                    return true;
                }
            }
        }
        false
    }

    fn shift_chain(&mut self, root: usize, mut s: usize, mut p: usize, parent: &[Option<(usize, usize)>]) {
        loop {
            if let Some(old) = self.slot_of[p] {
                if self.participant_of[old] == Some(p) {
                    self.participant_of[old] = None;
                }
            }
            self.slot_of[p] = Some(s);
            self.participant_of[s] = Some(p);
            if s == root {
                break;
            }
            let (prev_slot, occupant) = parent[s].expect("chain reaches the root");
            s = prev_slot;
            p = occupant;
        }
    }
}

/// Maximum-cardinality matching among those that use only edges consistent
/// with the fixings, contain every forced pair, cover every slot with a
/// fixed finite value and cover every participant with a fixed tier.
/// Deterministic for a given input.
pub fn max_matching(graph: &EligibilityGraph, constraints: &LexConstraints) -> Result<SlotMatching> {
    let (m, l) = (graph.participant_count(), graph.slot_count());
    let mut ws = Workspace::new(graph, constraints)?;
    let forced_participant: Vec<bool> = {
        let mut f = vec![false; m];
        for &(p, _) in &constraints.forced_pairs {
            f[p] = true;
        }
        f
    };
    let mut visited = vec![false; l];
    for p in 0..m {
        let required =
            matches!(constraints.participant_outcomes[p], ParticipantOutcome::Tier(_)) || forced_participant[p];
        if required {
            visited.iter_mut().for_each(|v| *v = false);
            if !ws.augment_from(p, &mut visited) {
                return Err(Error::Infeasible(format!("participant {p} cannot be covered")));
            }
        }
    }
    for x in 0..l {
        if ws.required_slot[x] && ws.participant_of[x].is_none() && !ws.cover_slot(x) {
            return Err(Error::Infeasible(format!("slot {x} cannot be covered")));
        }
    }
    for p in 0..m {
        if ws.slot_of[p].is_none() {
            visited.iter_mut().for_each(|v| *v = false);
            ws.augment_from(p, &mut visited);
        }
    }
    let mut out = SlotMatching::empty(m, l);
    for (p, x) in ws.slot_of.iter().enumerate() {
        if let Some(x) = x {
            out.insert(p, *x).expect("workspace matching is one-to-one");
        }
    }
    Ok(out)
}

/// Total order on participant-slot pairs used for the final tie-break.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairOrder {
    /// Ascending participant index, then round-robin slot order.
    ParticipantMajor,
    /// A pseudo-random permutation of all pairs.
    Seeded(u64),
    /// Pairs in the given order; pairs not listed follow in
    /// participant-major order.
    Explicit(Vec<(usize, usize)>),
}

impl Default for PairOrder {
    fn default() -> Self {
        PairOrder::ParticipantMajor
    }
}

impl PairOrder {
    pub fn pairs(&self, participants: usize, slots: usize) -> Vec<(usize, usize)> {
        let all = || (0..participants).flat_map(move |p| (0..slots).map(move |x| (p, x)));
        match self {
            PairOrder::ParticipantMajor => all().collect(),
            PairOrder::Seeded(seed) => {
                let mut pairs: Vec<_> = all().collect();
                pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
                pairs
            }
            PairOrder::Explicit(listed) => {
                let mut seen = vec![false; participants * slots];
                let mut pairs = Vec::with_capacity(participants * slots);
                for &(p, x) in listed.iter().chain(&all().collect::<Vec<_>>()) {
                    if p < participants && x < slots && !std::mem::replace(&mut seen[p * slots + x], true) {
                        pairs.push((p, x));
                    }
                }
                pairs
            }
        }
    }
}

/// Result of [`lexopt_matching`] with the fixings of stages 1 and 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexOutcome {
    pub matching: SlotMatching,
    pub slot_values: Vec<SlotValue>,
    pub participant_outcomes: Vec<ParticipantOutcome>,
}

/// The unique matching that lexicographically maximizes slot values in
/// round-robin order, then participant outcomes in index order, then the
/// characteristic vector of pairs under `pair_order`.
pub fn lexopt_matching(
    inst: &Instance,
    layout: &SlotLayout,
    elig: &EligibilitySets,
    pair_order: &PairOrder,
) -> LexOutcome {
    let graph = EligibilityGraph::build(inst, layout, elig);
    lexopt_on_graph(&graph, pair_order)
}

pub fn lexopt_on_graph(graph: &EligibilityGraph, pair_order: &PairOrder) -> LexOutcome {
    let (m, l) = (graph.participant_count(), graph.slot_count());
    let mut c = LexConstraints::unconstrained(m, l);
    let feasible = |c: &LexConstraints| max_matching(graph, c).is_ok();

    for x in 0..l {
        let mut candidates: Vec<i64> = (0..m).filter(|&p| graph.has_edge(p, x)).map(|p| graph.value(p, x)).collect();
        candidates.sort_unstable_by(|a, b| b.cmp(a));
        candidates.dedup();
        c.slot_values[x] = SlotValue::MinusInfinity;
        for v in candidates {
            c.slot_values[x] = SlotValue::Fixed(v);
            if feasible(&c) {
                break;
            }
            c.slot_values[x] = SlotValue::MinusInfinity;
        }
    }

    for p in 0..m {
        let mut tiers: Vec<usize> = graph.neighbors(p).iter().map(|&x| graph.participant_tier(p, x)).collect();
        tiers.sort_unstable();
        tiers.dedup();
        c.participant_outcomes[p] = ParticipantOutcome::Unmatched;
        for t in tiers {
            c.participant_outcomes[p] = ParticipantOutcome::Tier(t);
            if feasible(&c) {
                break;
            }
            c.participant_outcomes[p] = ParticipantOutcome::Unmatched;
        }
    }

    let target = c.slot_values.iter().filter(|v| matches!(v, SlotValue::Fixed(_))).count();
    let mut participant_forced = vec![false; m];
    let mut slot_forced = vec![false; l];
    for (p, x) in pair_order.pairs(m, l) {
        if c.forced_pairs.len() == target {
            break;
        }
        if participant_forced[p] || slot_forced[x] || !graph.has_edge(p, x) || !c.edge_allowed(graph, p, x) {
            continue;
        }
        c.forced_pairs.push((p, x));
        if feasible(&c) {
            participant_forced[p] = true;
            slot_forced[x] = true;
        } else {
            c.forced_pairs.pop();
        }
    }

    let matching = SlotMatching::from_pairs(m, l, &c.forced_pairs).expect("forced pairs are one-to-one");
    debug_assert_eq!(max_matching(graph, &c).as_ref(), Ok(&matching));
    LexOutcome { matching, slot_values: c.slot_values, participant_outcomes: c.participant_outcomes }
}

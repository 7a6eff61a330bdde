//! Domain types: weak orders, instances, team-slots, slot matchings,
//! allocations, eligibility sets and the extended (quota) instance.
//!
//! Participants and teams are addressed by zero-based indices. Participant
//! order is the order of appearance in the instance and is the index order
//! used by every tie-breaking rule. Teams are displayed one-based.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Reserved token for the "unassigned" option of the extended setting.
pub const UNASSIGNED: &str = "UNASSIGNED";

/// Outcome of comparing two alternatives under a weak order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Comparison {
    Better,
    Equal,
    Worse,
}

impl Comparison {
    pub fn is_weakly_better(self) -> bool {
        self != Comparison::Worse
    }

    pub fn reverse(self) -> Self {
        match self {
            Comparison::Better => Comparison::Worse,
            Comparison::Equal => Comparison::Equal,
            Comparison::Worse => Comparison::Better,
        }
    }
}

/// A complete, transitive preference with indifferences, stored as ordered
/// tiers (tier 0 is the most preferred).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeakOrder {
    tiers: Vec<Vec<usize>>,
    rank: Vec<usize>,
}

impl WeakOrder {
    /// Builds an order over the universe `0..universe`. Tiers must be
    /// non-empty, pairwise disjoint and jointly cover the universe.
    pub fn new(universe: usize, tiers: Vec<Vec<usize>>) -> Result<Self> {
        let mut rank = vec![usize::MAX; universe];
        let mut sorted_tiers = Vec::with_capacity(tiers.len());
        for (t, mut tier) in tiers.into_iter().enumerate() {
            if tier.is_empty() {
                return Err(Error::Domain(format!("tier {t} is empty")));
            }
            for &a in &tier {
                if a >= universe {
                    return Err(Error::UnknownAlternative { alternative: a, universe });
                }
                if rank[a] != usize::MAX {
                    return Err(Error::Domain(format!("alternative {a} appears twice")));
                }
                rank[a] = t;
            }
            tier.sort_unstable();
            sorted_tiers.push(tier);
        }
        if let Some(missing) = rank.iter().position(|&r| r == usize::MAX) {
            return Err(Error::Domain(format!("alternative {missing} is not ranked")));
        }
        Ok(Self { tiers: sorted_tiers, rank })
    }

    /// A strict order listing the alternatives best-first.
    pub fn strict(order: &[usize]) -> Result<Self> {
        Self::new(order.len(), order.iter().map(|&a| vec![a]).collect())
    }

    /// Complete indifference over `0..universe`.
    pub fn indifferent(universe: usize) -> Self {
        Self::new(universe, vec![(0..universe).collect()]).expect("single tier is valid")
    }

    pub fn universe(&self) -> usize {
        self.rank.len()
    }

    pub fn tiers(&self) -> &[Vec<usize>] {
        &self.tiers
    }

    pub fn tier_count(&self) -> usize {
        self.tiers.len()
    }

    /// Tier index of `a`. Panics if `a` is outside the universe.
    #[inline]
    pub fn tier_of(&self, a: usize) -> usize {
        self.rank[a]
    }

    pub fn try_tier_of(&self, a: usize) -> Result<usize> {
        self.rank
            .get(a)
            .copied()
            .ok_or(Error::UnknownAlternative { alternative: a, universe: self.universe() })
    }

    pub fn compare(&self, a: usize, b: usize) -> Result<Comparison> {
        let (ta, tb) = (self.try_tier_of(a)?, self.try_tier_of(b)?);
        Ok(compare_tiers(ta, tb))
    }

    /// Unchecked comparison for indices known to be in range.
    #[inline]
    pub fn cmp(&self, a: usize, b: usize) -> Comparison {
        compare_tiers(self.rank[a], self.rank[b])
    }

    #[inline]
    pub fn prefers(&self, a: usize, b: usize) -> bool {
        self.rank[a] < self.rank[b]
    }

    #[inline]
    pub fn weakly_prefers(&self, a: usize, b: usize) -> bool {
        self.rank[a] <= self.rank[b]
    }

    #[inline]
    pub fn indifferent_between(&self, a: usize, b: usize) -> bool {
        self.rank[a] == self.rank[b]
    }

    pub fn is_strict(&self) -> bool {
        self.tiers.iter().all(|t| t.len() == 1)
    }

    /// Alternatives ordered best-first, ties by ascending index.
    pub fn linear_extension(&self) -> Vec<usize> {
        self.tiers.iter().flatten().copied().collect()
    }
}

#[inline]
fn compare_tiers(ta: usize, tb: usize) -> Comparison {
    match ta.cmp(&tb) {
        std::cmp::Ordering::Less => Comparison::Better,
        std::cmp::Ordering::Equal => Comparison::Equal,
        std::cmp::Ordering::Greater => Comparison::Worse,
    }
}

fn validate_names(names: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for name in names {
        if name.is_empty() {
            return Err(Error::Domain("participant names must be non-empty".into()));
        }
        if name == UNASSIGNED {
            return Err(Error::Domain(format!("`{UNASSIGNED}` is reserved")));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::Domain(format!("duplicate participant `{name}`")));
        }
    }
    Ok(())
}

/// Default participant names `p1..pm`.
pub fn default_names(m: usize) -> Vec<String> {
    (1..=m).map(|j| format!("p{j}")).collect()
}

/// A base-setting instance: `n` teams, `m` participants and both sides'
/// weak orders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    team_count: usize,
    participants: Vec<String>,
    team_prefs: Vec<WeakOrder>,
    participant_prefs: Vec<WeakOrder>,
}

impl Instance {
    pub fn new(
        team_count: usize,
        participants: Vec<String>,
        team_prefs: Vec<WeakOrder>,
        participant_prefs: Vec<WeakOrder>,
    ) -> Result<Self> {
        let m = participants.len();
        if team_count == 0 {
            return Err(Error::Domain("an instance needs at least one team".into()));
        }
        if m == 0 {
            return Err(Error::Domain("an instance needs at least one participant".into()));
        }
        validate_names(&participants)?;
        if team_prefs.len() != team_count {
            return Err(Error::Domain(format!(
                "expected {team_count} team preferences, got {}",
                team_prefs.len()
            )));
        }
        if participant_prefs.len() != m {
            return Err(Error::Domain(format!(
                "expected {m} participant preferences, got {}",
                participant_prefs.len()
            )));
        }
        for (i, order) in team_prefs.iter().enumerate() {
            if order.universe() != m {
                return Err(Error::Domain(format!("team {} does not rank exactly the participants", i + 1)));
            }
        }
        for (j, order) in participant_prefs.iter().enumerate() {
            if order.universe() != team_count {
                return Err(Error::Domain(format!("{} does not rank exactly the teams", participants[j])));
            }
        }
        Ok(Self { team_count, participants, team_prefs, participant_prefs })
    }

    /// Same as [`Instance::new`] with participants named `p1..pm`.
    pub fn with_default_names(
        team_count: usize,
        team_prefs: Vec<WeakOrder>,
        participant_prefs: Vec<WeakOrder>,
    ) -> Result<Self> {
        let names = default_names(participant_prefs.len());
        Self::new(team_count, names, team_prefs, participant_prefs)
    }

    pub fn team_count(&self) -> usize {
        self.team_count
    }

    pub fn participant_count(&self) -> usize {
        self.participants.len()
    }

    pub fn participants(&self) -> &[String] {
        &self.participants
    }

    pub fn name(&self, participant: usize) -> &str {
        &self.participants[participant]
    }

    pub fn team_pref(&self, team: usize) -> &WeakOrder {
        &self.team_prefs[team]
    }

    pub fn team_prefs(&self) -> &[WeakOrder] {
        &self.team_prefs
    }

    pub fn participant_pref(&self, participant: usize) -> &WeakOrder {
        &self.participant_prefs[participant]
    }

    pub fn participant_prefs(&self) -> &[WeakOrder] {
        &self.participant_prefs
    }

    /// Copy of the instance with one participant's preference replaced.
    pub fn with_participant_pref(&self, participant: usize, order: WeakOrder) -> Result<Self> {
        if order.universe() != self.team_count {
            return Err(Error::Domain("replacement order must rank exactly the teams".into()));
        }
        let mut next = self.clone();
        next.participant_prefs[participant] = order;
        Ok(next)
    }

    pub fn is_strict(&self) -> bool {
        self.team_prefs.iter().chain(&self.participant_prefs).all(WeakOrder::is_strict)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.participants.iter().position(|p| p == name)
    }
}

/// Slot counts per team in the base setting: with `k = m / n` and
/// `r = m - k n`, the first `r` teams get `k + 1` slots, the rest `k`.
pub fn slot_layout(n: usize, m: usize) -> Vec<usize> {
    assert!(n >= 1, "slot_layout needs at least one team");
    let k = m / n;
    let r = m - k * n;
    (0..n).map(|i| if i < r { k + 1 } else { k }).collect()
}

/// A unit of team capacity. `index` is one-based (`i_1, i_2, ...`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Slot {
    pub team: usize,
    pub index: usize,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.team + 1, self.index)
    }
}

/// All team-slots, identified by their position in round-robin priority
/// order `1_1, 2_1, ..., n_1, 1_2, ...`; teams with fewer slots are skipped
/// in later rounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotLayout {
    counts: Vec<usize>,
    slots: Vec<Slot>,
    by_team: Vec<Vec<usize>>,
}

impl SlotLayout {
    pub fn from_counts(counts: Vec<usize>) -> Self {
        let rounds = counts.iter().copied().max().unwrap_or(0);
        let mut slots = Vec::with_capacity(counts.iter().sum());
        let mut by_team = vec![Vec::new(); counts.len()];
        for index in 1..=rounds {
            for (team, &c) in counts.iter().enumerate() {
                if c >= index {
                    by_team[team].push(slots.len());
                    slots.push(Slot { team, index });
                }
            }
        }
        Self { counts, slots, by_team }
    }

    pub fn balanced(n: usize, m: usize) -> Self {
        Self::from_counts(slot_layout(n, m))
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot(&self, id: usize) -> Slot {
        self.slots[id]
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn team_of(&self, id: usize) -> usize {
        self.slots[id].team
    }

    /// Slot ids of `team` in index order.
    pub fn slots_of_team(&self, team: usize) -> &[usize] {
        &self.by_team[team]
    }

    pub fn team_count(&self) -> usize {
        self.counts.len()
    }

    pub fn id_of(&self, slot: Slot) -> Option<usize> {
        self.by_team.get(slot.team)?.get(slot.index.checked_sub(1)?).copied()
    }
}

/// A one-to-one matching between participants and slot ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SlotMatching {
    slot_of: Vec<Option<usize>>,
    participant_of: Vec<Option<usize>>,
}

impl SlotMatching {
    pub fn empty(participants: usize, slots: usize) -> Self {
        Self { slot_of: vec![None; participants], participant_of: vec![None; slots] }
    }

    pub fn from_pairs(participants: usize, slots: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut s = Self::empty(participants, slots);
        for &(p, x) in pairs {
            s.insert(p, x)?;
        }
        Ok(s)
    }

    /// Adds `(participant, slot)`; both must be unmatched.
    pub fn insert(&mut self, participant: usize, slot: usize) -> Result<()> {
        if participant >= self.slot_of.len() || slot >= self.participant_of.len() {
            return Err(Error::Domain(format!("pair ({participant}, {slot}) out of range")));
        }
        if self.slot_of[participant].is_some() {
            return Err(Error::Domain(format!("participant {participant} is already matched")));
        }
        if self.participant_of[slot].is_some() {
            return Err(Error::Domain(format!("slot {slot} is already matched")));
        }
        self.slot_of[participant] = Some(slot);
        self.participant_of[slot] = Some(participant);
        Ok(())
    }

    /// Removes the pair covering `participant`, returning its slot.
    pub fn remove_participant(&mut self, participant: usize) -> Option<usize> {
        let slot = self.slot_of.get_mut(participant)?.take()?;
        self.participant_of[slot] = None;
        Some(slot)
    }

    pub fn slot_of(&self, participant: usize) -> Option<usize> {
        self.slot_of[participant]
    }

    pub fn participant_of(&self, slot: usize) -> Option<usize> {
        self.participant_of[slot]
    }

    pub fn contains(&self, participant: usize, slot: usize) -> bool {
        self.slot_of[participant] == Some(slot)
    }

    pub fn participant_count(&self) -> usize {
        self.slot_of.len()
    }

    pub fn slot_count(&self) -> usize {
        self.participant_of.len()
    }

    /// Matched pairs ordered by participant.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.slot_of.iter().enumerate().filter_map(|(p, s)| s.map(|s| (p, s)))
    }

    pub fn len(&self) -> usize {
        self.slot_of.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every participant and every slot is matched.
    pub fn is_complete(&self) -> bool {
        self.slot_of.iter().all(Option::is_some) && self.participant_of.iter().all(Option::is_some)
    }

    /// Collapses slots to their teams.
    pub fn fold(&self, layout: &SlotLayout) -> Allocation {
        let mut bundles = vec![Vec::new(); layout.team_count()];
        for (p, x) in self.pairs() {
            bundles[layout.team_of(x)].push(p);
        }
        Allocation::from_sorted_bundles(bundles)
    }
}

/// Bundles of participants per team. In the base setting every participant
/// is in exactly one bundle; in the extended setting participants in no
/// bundle are unassigned.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Allocation {
    bundles: Vec<Vec<usize>>,
}

impl Allocation {
    /// Validates disjointness and range; bundles are stored sorted.
    pub fn new(participants: usize, bundles: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; participants];
        for (i, bundle) in bundles.iter().enumerate() {
            for &p in bundle {
                if p >= participants {
                    return Err(Error::Domain(format!("participant {p} out of range in bundle {}", i + 1)));
                }
                if std::mem::replace(&mut seen[p], true) {
                    return Err(Error::Domain(format!("participant {p} appears in two bundles")));
                }
            }
        }
        let bundles = bundles
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        Ok(Self { bundles })
    }

    fn from_sorted_bundles(mut bundles: Vec<Vec<usize>>) -> Self {
        for b in &mut bundles {
            b.sort_unstable();
        }
        Self { bundles }
    }

    /// Builds bundles from a per-participant team assignment.
    pub fn from_assignment(team_count: usize, assignment: &[Option<usize>]) -> Self {
        let mut bundles = vec![Vec::new(); team_count];
        for (p, team) in assignment.iter().enumerate() {
            if let Some(t) = team {
                bundles[*t].push(p);
            }
        }
        Self { bundles }
    }

    pub fn bundles(&self) -> &[Vec<usize>] {
        &self.bundles
    }

    pub fn bundle(&self, team: usize) -> &[usize] {
        &self.bundles[team]
    }

    pub fn team_count(&self) -> usize {
        self.bundles.len()
    }

    /// Team of each participant in `0..participants`, `None` if unassigned.
    pub fn assignment(&self, participants: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; participants];
        for (i, bundle) in self.bundles.iter().enumerate() {
            for &p in bundle {
                out[p] = Some(i);
            }
        }
        out
    }

    pub fn assigned_count(&self) -> usize {
        self.bundles.iter().map(Vec::len).sum()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.bundles.iter().map(Vec::len).collect()
    }
}

/// Per-participant sets of teams it may currently be matched to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EligibilitySets {
    sets: Vec<BTreeSet<usize>>,
}

impl EligibilitySets {
    pub fn empty(participants: usize) -> Self {
        Self { sets: vec![BTreeSet::new(); participants] }
    }

    pub fn from_sets(sets: Vec<BTreeSet<usize>>) -> Self {
        Self { sets }
    }

    pub fn contains(&self, participant: usize, team: usize) -> bool {
        self.sets[participant].contains(&team)
    }

    pub fn set(&self, participant: usize) -> &BTreeSet<usize> {
        &self.sets[participant]
    }

    pub fn sets(&self) -> &[BTreeSet<usize>] {
        &self.sets
    }

    /// Adds the most preferred tier of teams that still contains an
    /// ineligible team. Returns whether anything was added.
    pub fn expand(&mut self, participant: usize, pref: &WeakOrder) -> bool {
        let set = &mut self.sets[participant];
        for tier in pref.tiers() {
            if tier.iter().any(|t| !set.contains(t)) {
                set.extend(tier.iter().copied());
                return true;
            }
        }
        false
    }

    pub fn is_superset_of(&self, other: &EligibilitySets) -> bool {
        self.sets.len() == other.sets.len()
            && self.sets.iter().zip(&other.sets).all(|(a, b)| a.is_superset(b))
    }
}

/// Instance of the extended setting: team quotas, and an `UNASSIGNED`
/// option ranked by everyone. Team orders range over `0..=m` where `m`
/// stands for unassigned; participant orders range over `0..=n` where `n`
/// stands for unassigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedInstance {
    team_count: usize,
    participants: Vec<String>,
    team_prefs: Vec<WeakOrder>,
    participant_prefs: Vec<WeakOrder>,
    quotas: Vec<usize>,
}

impl ExtendedInstance {
    pub fn new(
        team_count: usize,
        participants: Vec<String>,
        team_prefs: Vec<WeakOrder>,
        participant_prefs: Vec<WeakOrder>,
        quotas: Vec<usize>,
    ) -> Result<Self> {
        let m = participants.len();
        if team_count == 0 || m == 0 {
            return Err(Error::Domain("an instance needs at least one team and one participant".into()));
        }
        validate_names(&participants)?;
        if team_prefs.len() != team_count || quotas.len() != team_count {
            return Err(Error::Domain("one preference and one quota per team required".into()));
        }
        if participant_prefs.len() != m {
            return Err(Error::Domain("one preference per participant required".into()));
        }
        if let Some(i) = team_prefs.iter().position(|o| o.universe() != m + 1) {
            return Err(Error::Domain(format!(
                "team {} must rank every participant and {UNASSIGNED} exactly once",
                i + 1
            )));
        }
        if let Some(j) = participant_prefs.iter().position(|o| o.universe() != team_count + 1) {
            return Err(Error::Domain(format!(
                "{} must rank every team and {UNASSIGNED} exactly once",
                participants[j]
            )));
        }
        if let Some(i) = quotas.iter().position(|&q| q == 0 || q > m) {
            return Err(Error::Domain(format!("quota of team {} must lie in 1..={m}", i + 1)));
        }
        Ok(Self { team_count, participants, team_prefs, participant_prefs, quotas })
    }

    pub fn team_count(&self) -> usize {
        self.team_count
    }

    pub fn participant_count(&self) -> usize {
        self.participants.len()
    }

    pub fn participants(&self) -> &[String] {
        &self.participants
    }

    pub fn name(&self, participant: usize) -> &str {
        &self.participants[participant]
    }

    /// Alternative index standing for "unassigned" in team orders.
    pub fn unassigned_participant(&self) -> usize {
        self.participants.len()
    }

    /// Alternative index standing for "unassigned" in participant orders.
    pub fn unassigned_team(&self) -> usize {
        self.team_count
    }

    pub fn team_pref(&self, team: usize) -> &WeakOrder {
        &self.team_prefs[team]
    }

    pub fn team_prefs(&self) -> &[WeakOrder] {
        &self.team_prefs
    }

    pub fn participant_pref(&self, participant: usize) -> &WeakOrder {
        &self.participant_prefs[participant]
    }

    pub fn participant_prefs(&self) -> &[WeakOrder] {
        &self.participant_prefs
    }

    pub fn quotas(&self) -> &[usize] {
        &self.quotas
    }

    pub fn quota(&self, team: usize) -> usize {
        self.quotas[team]
    }

    /// Sum of quotas.
    pub fn total_quota(&self) -> usize {
        self.quotas.iter().sum()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.participants.iter().position(|p| p == name)
    }
}

/// Alternating sequence `(p_{j_1}, x_1, ..., p_{j_h}, x_h)` of participants
/// and slot ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct BlockingPath {
    pub steps: Vec<(usize, usize)>,
}

impl BlockingPath {
    pub fn start(&self) -> usize {
        self.steps[0].0
    }

    pub fn end_slot(&self) -> usize {
        self.steps[self.steps.len() - 1].1
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

//! Allocation algorithms: round-robin over top-ranking participants, the
//! auxiliary-instance approach, the main eligibility-expansion algorithm,
//! and the plain round-robin / deferred-acceptance references.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matching::{lexopt_matching, PairOrder, SlotValue};
use crate::model::{Allocation, EligibilitySets, Instance, SlotLayout, SlotMatching};

/// Teams take turns `1..n`; each picks its most preferred remaining
/// participant among those ranking it first, skipping empty turns. Ties go
/// to the lower participant index.
pub fn round_robin_top(inst: &Instance) -> Allocation {
    let (n, m) = (inst.team_count(), inst.participant_count());
    let top: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..m).filter(|&p| inst.participant_pref(p).tier_of(i) == 0).collect())
        .collect();
    let mut assignment = vec![None; m];
    let mut left = m;
    while left > 0 {
        for i in 0..n {
            let order = inst.team_pref(i);
            let pick = top[i].iter().copied().filter(|&p| assignment[p].is_none()).min_by_key(|&p| (order.tier_of(p), p));
            if let Some(p) = pick {
                assignment[p] = Some(i);
                left -= 1;
            }
        }
    }
    Allocation::from_assignment(n, &assignment)
}

/// Teams pick in order `1..n` cyclically, each taking its most preferred
/// remaining participant (lower index on ties).
pub fn round_robin_reference(inst: &Instance) -> Allocation {
    let (n, m) = (inst.team_count(), inst.participant_count());
    let mut assignment = vec![None; m];
    for turn in 0..m {
        let i = turn % n;
        let order = inst.team_pref(i);
        let p = (0..m).filter(|&p| assignment[p].is_none()).min_by_key(|&p| (order.tier_of(p), p)).expect("turns equal participants");
        assignment[p] = Some(i);
    }
    Allocation::from_assignment(n, &assignment)
}

/// Strict tie-breaking rule applied to team preferences in the auxiliary
/// instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Lower participant index first.
    #[default]
    ParticipantIndex,
    /// An independent pseudo-random permutation per team.
    Seeded(u64),
}

/// Participant-proposing deferred acceptance with strict preferences.
/// `proposals[p]` lists receivers best-first; `rank(r, p)` is receiver
/// `r`'s rank of `p` (lower is better, distinct per receiver). Returns each
/// proposer's receiver.
fn deferred_acceptance(
    proposals: &[Vec<usize>],
    capacities: &[usize],
    rank: impl Fn(usize, usize) -> usize,
) -> Vec<Option<usize>> {
    let m = proposals.len();
    let mut next = vec![0usize; m];
    let mut held: Vec<Vec<usize>> = vec![Vec::new(); capacities.len()];
    let mut matched = vec![None; m];
    let mut free: VecDeque<usize> = (0..m).collect();
    while let Some(p) = free.pop_front() {
        let Some(&r) = proposals[p].get(next[p]) else { continue };
        next[p] += 1;
        held[r].push(p);
        matched[p] = Some(r);
        if held[r].len() > capacities[r] {
            let (worst_at, &worst) =
                held[r].iter().enumerate().max_by_key(|&(_, &q)| rank(r, q)).expect("non-empty");
            held[r].swap_remove(worst_at);
            matched[worst] = None;
            free.push_back(worst);
        }
    }
    matched
}

/// Auxiliary-instance approach: one-to-one strict instance over balanced
/// team-slots, team ties broken by `tie_break`, participant ties between
/// teams interleaved (`i_l` before `j_l'` when `l <= l'`, lower team first
/// at equal index), solved by participant-proposing deferred acceptance.
pub fn auxiliary_gale_shapley(inst: &Instance, tie_break: TieBreak) -> Allocation {
    let (n, m) = (inst.team_count(), inst.participant_count());
    let layout = SlotLayout::balanced(n, m);
    let secondary: Vec<Vec<usize>> = match tie_break {
        TieBreak::ParticipantIndex => vec![(0..m).collect(); n],
        TieBreak::Seeded(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|_| {
                    let mut perm: Vec<usize> = (0..m).collect();
                    perm.shuffle(&mut rng);
                    let mut pos = vec![0; m];
                    for (k, &p) in perm.iter().enumerate() {
                        pos[p] = k;
                    }
                    pos
                })
                .collect()
        }
    };
    let proposals: Vec<Vec<usize>> = (0..m).map(|p| interleaved_slot_order(inst, &layout, p)).collect();
    let rank = |x: usize, p: usize| {
        let team = layout.team_of(x);
        inst.team_pref(team).tier_of(p) * m + secondary[team][p]
    };
    let matched = deferred_acceptance(&proposals, &vec![1; layout.len()], rank);
    let mut s = SlotMatching::empty(m, layout.len());
    for (p, x) in matched.iter().enumerate() {
        if let Some(x) = x {
            s.insert(p, *x).expect("deferred acceptance is one-to-one");
        }
    }
    s.fold(&layout)
}

/// Participant `p`'s strict order over slot ids in the auxiliary instance.
pub fn interleaved_slot_order(inst: &Instance, layout: &SlotLayout, p: usize) -> Vec<usize> {
    let pref = inst.participant_pref(p);
    let mut slots: Vec<usize> = (0..layout.len()).collect();
    slots.sort_by_key(|&x| {
        let s = layout.slot(x);
        (pref.tier_of(s.team), s.index, s.team)
    });
    slots
}

/// Classic participant-proposing deferred acceptance with per-team
/// capacities. Each team's accepted participants fill its slots best-first.
pub fn gale_shapley_reference(inst: &Instance, capacities: &[usize]) -> Result<SlotMatching> {
    if !inst.is_strict() {
        return Err(Error::Domain("deferred acceptance reference requires strict preferences".into()));
    }
    if capacities.len() != inst.team_count() {
        return Err(Error::Domain("one capacity per team required".into()));
    }
    let m = inst.participant_count();
    let proposals: Vec<Vec<usize>> = (0..m).map(|p| inst.participant_pref(p).linear_extension()).collect();
    let matched = deferred_acceptance(&proposals, capacities, |i, p| inst.team_pref(i).tier_of(p));
    let layout = SlotLayout::from_counts(capacities.to_vec());
    let mut s = SlotMatching::empty(m, layout.len());
    for i in 0..inst.team_count() {
        let mut members: Vec<usize> = (0..m).filter(|&p| matched[p] == Some(i)).collect();
        members.sort_by_key(|&p| inst.team_pref(i).tier_of(p));
        for (&p, &x) in members.iter().zip(layout.slots_of_team(i)) {
            s.insert(p, x)?;
        }
    }
    Ok(s)
}

/// State of one while-loop iteration: eligibility after expansion and the
/// matching computed from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub eligibility: EligibilitySets,
    pub matching: SlotMatching,
    pub slot_values: Vec<SlotValue>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MainOutcome {
    pub allocation: Allocation,
    pub matching: SlotMatching,
    pub layout: SlotLayout,
    pub trace: Vec<TraceStep>,
}

/// The main algorithm on the balanced slot layout.
pub fn main_algorithm(inst: &Instance, pair_order: &PairOrder) -> MainOutcome {
    let layout = SlotLayout::balanced(inst.team_count(), inst.participant_count());
    main_algorithm_with_layout(inst, layout, pair_order)
}

/// The main algorithm on an arbitrary slot layout with as many slots as
/// participants.
///
/// Eligibility starts empty. Each iteration, every unmatched participant
/// adds its best tier of still-ineligible teams, then the lexicographically
/// optimal eligible matching is recomputed. Stops once the matching is
/// complete.
pub fn main_algorithm_with_layout(inst: &Instance, layout: SlotLayout, pair_order: &PairOrder) -> MainOutcome {
    let m = inst.participant_count();
    assert_eq!(layout.len(), m, "the layout must provide one slot per participant");
    let mut matching = SlotMatching::empty(m, layout.len());
    let mut elig = EligibilitySets::empty(m);
    let mut trace: Vec<TraceStep> = Vec::new();
    while !matching.is_complete() {
        let mut grew = false;
        for p in 0..m {
            if matching.slot_of(p).is_none() {
                grew |= elig.expand(p, inst.participant_pref(p));
            }
        }
        assert!(grew, "incomplete matching with no eligibility left to expand");
        let out = lexopt_matching(inst, &layout, &elig, pair_order);
        if let Some(prev) = trace.last() {
            debug_assert!(
                prev.slot_values.iter().zip(&out.slot_values).all(|(a, b)| a.as_key() <= b.as_key()),
                "slot values decreased between iterations"
            );
        }
        matching = out.matching.clone();
        trace.push(TraceStep { eligibility: elig.clone(), matching: out.matching, slot_values: out.slot_values });
    }
    MainOutcome { allocation: matching.fold(&layout), matching, layout, trace }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::WeakOrder;

    fn bundles(a: &Allocation) -> Vec<Vec<usize>> {
        a.bundles().to_vec()
    }

    #[test]
    fn top_choice_with_unanimous_favourite() {
        let inst = Instance::with_default_names(
            2,
            vec![WeakOrder::indifferent(4); 2],
            vec![WeakOrder::strict(&[0, 1]).unwrap(); 4],
        )
        .unwrap();
        assert_eq!(bundles(&round_robin_top(&inst)), vec![vec![0, 1, 2, 3], vec![]]);
    }

    #[test]
    fn top_choice_fully_indifferent_is_round_robin() {
        let inst = Instance::with_default_names(
            3,
            vec![WeakOrder::strict(&[4, 3, 2, 1, 0]).unwrap(); 3],
            vec![WeakOrder::indifferent(3); 5],
        )
        .unwrap();
        assert_eq!(round_robin_top(&inst), round_robin_reference(&inst));
        assert_eq!(bundles(&round_robin_top(&inst)), vec![vec![1, 4], vec![0, 3], vec![2]]);
    }

    #[test]
    fn auxiliary_worked_example() {
        let inst = fixtures::auxiliary_instance();
        let a = auxiliary_gale_shapley(&inst, TieBreak::ParticipantIndex);
        assert_eq!(bundles(&a), vec![vec![0, 3], vec![1, 4], vec![2, 5]]);
    }

    #[test]
    fn interleaving_of_tied_teams() {
        // (1,2) > (3,4), three slots per team
        let pref = WeakOrder::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let inst = Instance::with_default_names(4, vec![WeakOrder::indifferent(12); 4], vec![pref; 12]).unwrap();
        let layout = SlotLayout::balanced(4, 12);
        let names: Vec<String> =
            interleaved_slot_order(&inst, &layout, 0).iter().map(|&x| layout.slot(x).to_string()).collect();
        assert_eq!(names, ["1_1", "2_1", "1_2", "2_2", "1_3", "2_3", "3_1", "4_1", "3_2", "4_2", "3_3", "4_3"]);
    }

    #[test]
    fn auxiliary_single_team() {
        let inst = Instance::with_default_names(1, vec![WeakOrder::indifferent(3)], vec![WeakOrder::indifferent(1); 3])
            .unwrap();
        assert_eq!(bundles(&auxiliary_gale_shapley(&inst, TieBreak::Seeded(3))), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn main_walkthrough() {
        let inst = fixtures::walkthrough_instance();
        let out = main_algorithm(&inst, &PairOrder::default());
        assert_eq!(bundles(&out.allocation), vec![vec![0, 1], vec![2, 3], vec![4, 5]]);
        assert_eq!(out.trace.len(), 3);
        let sets: Vec<Vec<usize>> = out.trace[0].eligibility.sets().iter().map(|s| s.iter().copied().collect()).collect();
        assert_eq!(sets, vec![vec![0, 1], vec![0, 1], vec![1], vec![1], vec![1], vec![1]]);
        assert_eq!(out.trace[1].matching, out.trace[0].matching);
        assert_eq!(out.trace[2].eligibility.set(4).len(), 3);
    }

    #[test]
    fn round_robin_with_shared_strict_order() {
        let inst = Instance::with_default_names(
            2,
            vec![WeakOrder::strict(&[0, 1, 2, 3]).unwrap(); 2],
            vec![WeakOrder::indifferent(2); 4],
        )
        .unwrap();
        assert_eq!(bundles(&round_robin_reference(&inst)), vec![vec![0, 2], vec![1, 3]]);
        assert_eq!(main_algorithm(&inst, &PairOrder::default()).allocation, round_robin_reference(&inst));
    }

    #[test]
    fn deferred_acceptance_single_pair() {
        let inst =
            Instance::with_default_names(1, vec![WeakOrder::indifferent(1)], vec![WeakOrder::indifferent(1)]).unwrap();
        let s = gale_shapley_reference(&inst, &[1]).unwrap();
        assert!(s.contains(0, 0));
    }

    #[test]
    fn deferred_acceptance_rejects_ties() {
        let inst =
            Instance::with_default_names(1, vec![WeakOrder::indifferent(2)], vec![WeakOrder::indifferent(1); 2]).unwrap();
        assert!(matches!(gale_shapley_reference(&inst, &[2]), Err(Error::Domain(_))));
    }

    #[test]
    fn deferred_acceptance_textbook() {
        // Men-proposing textbook instance: proposers a,b,c; receivers X,Y,Z.
        // a: X>Y>Z, b: Y>X>Z, c: X>Y>Z; X: b>a>c, Y: a>b>c, Z: a>b>c.
        let inst = Instance::with_default_names(
            3,
            vec![
                WeakOrder::strict(&[1, 0, 2]).unwrap(),
                WeakOrder::strict(&[0, 1, 2]).unwrap(),
                WeakOrder::strict(&[0, 1, 2]).unwrap(),
            ],
            vec![
                WeakOrder::strict(&[0, 1, 2]).unwrap(),
                WeakOrder::strict(&[1, 0, 2]).unwrap(),
                WeakOrder::strict(&[0, 1, 2]).unwrap(),
            ],
        )
        .unwrap();
        let s = gale_shapley_reference(&inst, &[1, 1, 1]).unwrap();
        let layout = SlotLayout::from_counts(vec![1, 1, 1]);
        let a = s.fold(&layout);
        assert_eq!(bundles(&a), vec![vec![0], vec![1], vec![2]]);
        // stable: no blocking pair
        for p in 0..3 {
            for i in 0..3 {
                let own = a.assignment(3)[p].unwrap();
                let holder = a.bundle(i)[0];
                assert!(!(inst.participant_pref(p).prefers(i, own) && inst.team_pref(i).prefers(p, holder)));
            }
        }
        assert_eq!(main_algorithm(&inst, &PairOrder::default()).allocation, a);
    }
}

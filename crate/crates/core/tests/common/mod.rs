#![allow(dead_code)]

use std::collections::BTreeSet;

use fairmatch::matching::{EligibilityGraph, PairOrder};
use fairmatch::model::{EligibilitySets, Instance, SlotMatching, WeakOrder};
use rand::Rng;

/// Same team orders, every participant indifferent between all teams.
pub fn with_indifferent_participants(inst: &Instance) -> Instance {
    let n = inst.team_count();
    Instance::new(
        n,
        inst.participants().to_vec(),
        inst.team_prefs().to_vec(),
        vec![WeakOrder::indifferent(n); inst.participant_count()],
    )
    .unwrap()
}

pub fn random_eligibility(n: usize, m: usize, density: f64, rng: &mut impl Rng) -> EligibilitySets {
    EligibilitySets::from_sets(
        (0..m).map(|_| (0..n).filter(|_| rng.gen_bool(density)).collect::<BTreeSet<usize>>()).collect(),
    )
}

fn all_matchings(graph: &EligibilityGraph) -> Vec<SlotMatching> {
    fn rec(graph: &EligibilityGraph, p: usize, cur: &mut SlotMatching, out: &mut Vec<SlotMatching>) {
        if p == graph.participant_count() {
            out.push(cur.clone());
            return;
        }
        rec(graph, p + 1, cur, out);
        for &x in graph.neighbors(p) {
            if cur.participant_of(x).is_none() {
                cur.insert(p, x).unwrap();
                rec(graph, p + 1, cur, out);
                cur.remove_participant(p);
            }
        }
    }
    let mut out = Vec::new();
    rec(graph, 0, &mut SlotMatching::empty(graph.participant_count(), graph.slot_count()), &mut out);
    out
}

/// The matching maximizing, lexicographically, the slot values in slot
/// order (unmatched lowest), then the participant outcomes in index order
/// (better tier first, unmatched lowest), then the characteristic vector
/// of pairs under `pair_order`, found by enumerating every matching.
pub fn lexopt_brute_force(graph: &EligibilityGraph, pair_order: &PairOrder) -> SlotMatching {
    let pairs = pair_order.pairs(graph.participant_count(), graph.slot_count());
    let key = |s: &SlotMatching| {
        let slots: Vec<Option<i64>> =
            (0..graph.slot_count()).map(|x| s.participant_of(x).map(|p| graph.value(p, x))).collect();
        let parts: Vec<i64> = (0..graph.participant_count())
            .map(|p| s.slot_of(p).map_or(i64::MIN, |x| -(graph.participant_tier(p, x) as i64)))
            .collect();
        let chars: Vec<bool> = pairs.iter().map(|&(p, x)| s.contains(p, x)).collect();
        (slots, parts, chars)
    };
    all_matchings(graph).into_iter().max_by_key(|s| key(s)).unwrap()
}

/// Shuffle, then merge adjacent alternatives with probability `tie`.
pub fn random_order(universe: usize, tie: f64, rng: &mut impl Rng) -> WeakOrder {
    use rand::seq::SliceRandom;
    let mut alts: Vec<usize> = (0..universe).collect();
    alts.shuffle(rng);
    let mut tiers: Vec<Vec<usize>> = Vec::new();
    for a in alts {
        match tiers.last_mut() {
            Some(t) if rng.gen_bool(tie) => t.push(a),
            _ => tiers.push(vec![a]),
        }
    }
    WeakOrder::new(universe, tiers).unwrap()
}

/// Every allocation round-robin can produce when a team may take any of
/// its most preferred remaining participants.
pub fn round_robin_outcomes(inst: &Instance) -> BTreeSet<fairmatch::model::Allocation> {
    fn rec(inst: &Instance, turn: usize, asg: &mut Vec<Option<usize>>, out: &mut BTreeSet<fairmatch::model::Allocation>) {
        let (n, m) = (inst.team_count(), inst.participant_count());
        if turn == m {
            out.insert(fairmatch::model::Allocation::from_assignment(n, asg));
            return;
        }
        let order = inst.team_pref(turn % n);
        let best = (0..m).filter(|&p| asg[p].is_none()).map(|p| order.tier_of(p)).min().unwrap();
        for p in 0..m {
            if asg[p].is_none() && order.tier_of(p) == best {
                asg[p] = Some(turn % n);
                rec(inst, turn + 1, asg, out);
                asg[p] = None;
            }
        }
    }
    let mut out = BTreeSet::new();
    rec(inst, 0, &mut vec![None; inst.participant_count()], &mut out);
    out
}

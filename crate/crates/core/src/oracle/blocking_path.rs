use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::{BlockingPath, EligibilitySets, Instance, SlotLayout, SlotMatching};

fn ensure_eligible(layout: &SlotLayout, s: &SlotMatching, elig: &EligibilitySets) -> Result<()> {
    for (p, x) in s.pairs() {
        if !elig.contains(p, layout.team_of(x)) {
            return Err(Error::Domain(format!("pair ({p}, {}) is not eligible", layout.slot(x))));
        }
    }
    Ok(())
}

/// Checks `path` against the definition clause by clause.
pub fn validate_blocking_path(
    inst: &Instance,
    layout: &SlotLayout,
    s: &SlotMatching,
    elig: &EligibilitySets,
    path: &BlockingPath,
) -> bool {
    let steps = &path.steps;
    let Some(&(first, x1)) = steps.first() else { return false };
    let team = |x: usize| layout.team_of(x);
    let (ps, xs): (Vec<usize>, Vec<usize>) = steps.iter().copied().unzip();
    let distinct = |v: &[usize]| v.iter().enumerate().all(|(k, a)| !v[..k].contains(a));
    if !distinct(&ps) || !distinct(&xs) {
        return false;
    }
    for (l, &(p, x)) in steps.iter().enumerate() {
        if s.contains(p, x) || (l > 0 && !s.contains(p, steps[l - 1].1)) {
            return false;
        }
    }
    let start_ok = match s.slot_of(first) {
        None => elig.contains(first, team(x1)),
        Some(own) => inst.participant_pref(first).prefers(team(x1), team(own)),
    };
    if !start_ok {
        return false;
    }
    for l in 0..steps.len() - 1 {
        let x = steps[l].1;
        if !inst.team_pref(team(x)).indifferent_between(steps[l].0, steps[l + 1].0) {
            return false;
        }
    }
    for l in 1..steps.len() {
        let p = steps[l].0;
        if !inst.participant_pref(p).indifferent_between(team(steps[l - 1].1), team(steps[l].1)) {
            return false;
        }
    }
    let (last_p, last_x) = steps[steps.len() - 1];
    match s.participant_of(last_x) {
        None => true,
        Some(holder) => {
            let order = inst.team_pref(team(last_x));
            order.prefers(last_p, holder) || (order.indifferent_between(last_p, holder) && holder > first)
        }
    }
}

/// A blocking path for `s` within `elig`, or `None`.
///
/// For a fixed start, a slot is entered either by a participant its team
/// strictly prefers to the holder (the path ends there), or by one it
/// finds equal to the holder (the path may continue through the holder),
/// so a breadth-first search over slots suffices.
pub fn find_blocking_path(
    inst: &Instance,
    layout: &SlotLayout,
    s: &SlotMatching,
    elig: &EligibilitySets,
) -> Result<Option<BlockingPath>> {
    ensure_eligible(layout, s, elig)?;
    let l = layout.len();
    for start in 0..inst.participant_count() {
        let own = s.slot_of(start);
        let pref = inst.participant_pref(start);
        let mut parent: Vec<Option<usize>> = vec![None; l];
        let mut seen = vec![false; l];
        let chain = |parent: &[Option<usize>], x: usize| {
            let mut slots = vec![x];
            let mut cur = x;
            while let Some(prev) = parent[cur] {
                slots.push(prev);
                cur = prev;
            }
            slots.reverse();
            slots
        };
        let path_of = |slots: &[usize]| {
            let mut steps = Vec::with_capacity(slots.len());
            steps.push((start, slots[0]));
            for w in slots.windows(2) {
                steps.push((s.participant_of(w[0]).expect("interior slots are matched"), w[1]));
            }
            BlockingPath { steps }
        };
        let mut queue = VecDeque::new();
        let first: Vec<usize> = (0..l)
            .filter(|&x| match own {
                None => elig.contains(start, layout.team_of(x)),
                Some(o) => pref.prefers(layout.team_of(x), layout.team_of(o)),
            })
            .collect();
        // (slot, participant entering it, slots before it)
        let mut entries: Vec<(usize, usize, Vec<usize>)> = first.into_iter().map(|x| (x, start, Vec::new())).collect();
        loop {
            for (x, entering, before) in entries.drain(..) {
                let mut slots = before;
                slots.push(x);
                let Some(holder) = s.participant_of(x) else { return Ok(Some(path_of(&slots))) };
                let order = inst.team_pref(layout.team_of(x));
                if order.prefers(entering, holder) {
                    return Ok(Some(path_of(&slots)));
                }
                if order.indifferent_between(entering, holder) {
                    if holder > start {
                        return Ok(Some(path_of(&slots)));
                    }
                    if !seen[x] {
                        seen[x] = true;
                        parent[x] = slots.len().checked_sub(2).map(|k| slots[k]);
                        queue.push_back(x);
                    }
                }
            }
            let Some(x) = queue.pop_front() else { break };
            let holder = s.participant_of(x).expect("queued slots are matched");
            let hp = inst.participant_pref(holder);
            let before = chain(&parent, x);
            for y in 0..l {
                if Some(y) != own && !before.contains(&y) && hp.indifferent_between(layout.team_of(x), layout.team_of(y)) {
                    entries.push((y, holder, before.clone()));
                }
            }
        }
    }
    Ok(None)
}

/// A matched participant not at a least-preferred team of its eligibility
/// set, if any.
pub fn least_preferred_violation(
    inst: &Instance,
    layout: &SlotLayout,
    s: &SlotMatching,
    elig: &EligibilitySets,
) -> Option<usize> {
    s.pairs().map(|(p, x)| (p, layout.team_of(x))).find(|&(p, team)| {
        let pref = inst.participant_pref(p);
        !elig.contains(p, team) || elig.set(p).iter().any(|&other| pref.prefers(team, other))
    })
    .map(|(p, _)| p)
}

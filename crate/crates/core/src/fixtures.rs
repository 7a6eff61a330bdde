//! Small named instances used throughout the tests and the CLI docs.
//! Teams are zero-based here; comments use one-based names.

use crate::model::{Instance, WeakOrder};

fn order(universe: usize, tiers: &[&[usize]]) -> WeakOrder {
    WeakOrder::new(universe, tiers.iter().map(|t| t.to_vec()).collect()).expect("fixture tiers are valid")
}

/// Three teams, six participants. Team 1: (p3,p4) > (p1,p2,p5,p6); teams 2
/// and 3 indifferent. p1,p2: (1,2) > 3; p3,p4: 2 > 3 > 1; p5,p6: 2 > 1 > 3.
/// The main algorithm returns ({p1,p2},{p3,p4},{p5,p6}) in three
/// iterations.
pub fn walkthrough_instance() -> Instance {
    let p12 = order(3, &[&[0, 1], &[2]]);
    let p34 = order(3, &[&[1], &[2], &[0]]);
    let p56 = order(3, &[&[1], &[0], &[2]]);
    Instance::with_default_names(
        3,
        vec![order(6, &[&[2, 3], &[0, 1, 4, 5]]), WeakOrder::indifferent(6), WeakOrder::indifferent(6)],
        vec![p12.clone(), p12, p34.clone(), p34, p56.clone(), p56],
    )
    .expect("fixture is valid")
}

/// Two teams, four participants. Additive values 3,3,2,2 (team 1) and
/// 1,1,0,0 (team 2) induce (p1,p2) > (p3,p4) for both teams; everyone
/// prefers team 1. No allocation is both team-SD-EF1 and
/// participant-justified EF.
pub fn incompatibility_instance() -> Instance {
    let team = order(4, &[&[0, 1], &[2, 3]]);
    Instance::with_default_names(2, vec![team.clone(), team], vec![order(2, &[&[0], &[1]]); 4])
        .expect("fixture is valid")
}

/// Two teams, four participants. Team 1: p1 > p2 > p3 > p4; team 2:
/// (p2,p3) > (p1,p4). p1 prefers team 1, p4 team 2, p2 and p3 are
/// indifferent. ({p1,p3},{p2,p4}) admits the beneficial swap p2/p3.
pub fn swap_instance() -> Instance {
    Instance::with_default_names(
        2,
        vec![order(4, &[&[0], &[1], &[2], &[3]]), order(4, &[&[1, 2], &[0, 3]])],
        vec![order(2, &[&[0], &[1]]), WeakOrder::indifferent(2), WeakOrder::indifferent(2), order(2, &[&[1], &[0]])],
    )
    .expect("fixture is valid")
}

/// Three teams, six participants. Teams 1, 2 indifferent; team 3:
/// (p1,p2) > (p3,...,p6). p5: 1 > (2,3); everyone else indifferent. With
/// index tie-breaking the auxiliary-instance approach yields
/// ({p1,p4},{p2,p5},{p3,p6}); after the beneficial swap p1/p5, team 3 is no
/// longer team-justified SD-EF1 toward team 2.
pub fn auxiliary_instance() -> Instance {
    Instance::with_default_names(
        3,
        vec![WeakOrder::indifferent(6), WeakOrder::indifferent(6), order(6, &[&[0, 1], &[2, 3, 4, 5]])],
        (0..6).map(|j| if j == 4 { order(3, &[&[0], &[1, 2]]) } else { WeakOrder::indifferent(3) }).collect(),
    )
    .expect("fixture is valid")
}

//! Quotas and the unassigned option: reduction to the base setting through
//! dummy participants and a dummy team, plus the extended verifiers.

use crate::engines::main_algorithm_with_layout;
use crate::error::{Error, Result};
use crate::matching::PairOrder;
use crate::model::{Allocation, ExtendedInstance, Instance, SlotLayout, WeakOrder};
use crate::relations::{sd_dominates_up_to_one, PropertyReport, StabilityClause, Witness};

/// What an augmented participant or team stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Real(usize),
    Unassigned,
}

/// Base-setting instance with `z` dummy participants and one dummy team.
/// Participants `0..m` and teams `0..n` keep their original indices.
#[derive(Debug, Clone)]
pub struct AugmentedInstance {
    pub instance: Instance,
    pub layout: SlotLayout,
    pub participant_origin: Vec<Origin>,
    pub team_origin: Vec<Origin>,
}

impl AugmentedInstance {
    /// Drops the dummy team and dummy participants.
    pub fn strip(&self, alloc: &Allocation) -> Allocation {
        let bundles = alloc
            .bundles()
            .iter()
            .zip(&self.team_origin)
            .filter(|(_, o)| matches!(o, Origin::Real(_)))
            .map(|(b, _)| b.iter().copied().filter(|&p| matches!(self.participant_origin[p], Origin::Real(_))).collect())
            .collect();
        let real = self.participant_origin.iter().filter(|o| matches!(o, Origin::Real(_))).count();
        Allocation::new(real, bundles).expect("stripping keeps bundles disjoint")
    }
}

fn fresh_name(taken: &[String], k: usize) -> String {
    let mut name = format!("dummy{}", k + 1);
    while taken.contains(&name) {
        name.push('_');
    }
    name
}

pub fn augment_instance(ext: &ExtendedInstance) -> AugmentedInstance {
    let (n, m, z) = (ext.team_count(), ext.participant_count(), ext.total_quota());
    let total = m + z;
    let team_prefs: Vec<WeakOrder> = ext
        .team_prefs()
        .iter()
        .map(|o| {
            let tiers = o
                .tiers()
                .iter()
                .map(|t| t.iter().flat_map(|&a| if a == m { (m..total).collect() } else { vec![a] }).collect())
                .collect();
            WeakOrder::new(total, tiers).expect("dummies replace the unassigned option")
        })
        .chain(std::iter::once(WeakOrder::indifferent(total)))
        .collect();
    let participant_prefs: Vec<WeakOrder> = ext
        .participant_prefs()
        .iter()
        .cloned()
        .chain(std::iter::repeat(WeakOrder::indifferent(n + 1)).take(z))
        .collect();
    let mut names = ext.participants().to_vec();
    for k in 0..z {
        let name = fresh_name(&names, k);
        names.push(name);
    }
    let instance = Instance::new(n + 1, names, team_prefs, participant_prefs).expect("augmented instance is valid");
    let mut counts = ext.quotas().to_vec();
    counts.push(m);
    AugmentedInstance {
        instance,
        layout: SlotLayout::from_counts(counts),
        participant_origin: (0..total).map(|p| if p < m { Origin::Real(p) } else { Origin::Unassigned }).collect(),
        team_origin: (0..=n).map(|i| if i < n { Origin::Real(i) } else { Origin::Unassigned }).collect(),
    }
}

/// Runs the main algorithm on the augmented instance and strips the
/// dummies. Participants in no bundle are unassigned.
pub fn solve_extended(ext: &ExtendedInstance, pair_order: &PairOrder) -> Allocation {
    let aug = augment_instance(ext);
    let out = main_algorithm_with_layout(&aug.instance, aug.layout.clone(), pair_order);
    aug.strip(&out.allocation)
}

/// `|A_i| <= q_i` for every team, and one bundle per team.
pub fn check_quotas(ext: &ExtendedInstance, alloc: &Allocation) -> Result<()> {
    if alloc.team_count() != ext.team_count() {
        return Err(Error::Domain(format!(
            "allocation has {} bundles but the instance has {} teams",
            alloc.team_count(),
            ext.team_count()
        )));
    }
    if let Some(p) = alloc.bundles().iter().flatten().find(|&&p| p >= ext.participant_count()) {
        return Err(Error::Domain(format!("participant {p} out of range")));
    }
    for (i, b) in alloc.bundles().iter().enumerate() {
        if b.len() > ext.quota(i) {
            return Err(Error::QuotaViolation { team: i + 1, size: b.len(), quota: ext.quota(i) });
        }
    }
    Ok(())
}

/// Weak stability: no justified envy (unassigned participants included),
/// individual rationality on both sides, and no participant preferring a
/// team with a free seat that finds it acceptable.
pub fn check_stability(ext: &ExtendedInstance, alloc: &Allocation) -> Result<PropertyReport> {
    check_quotas(ext, alloc)?;
    let (n, m) = (ext.team_count(), ext.participant_count());
    let (none_p, none_t) = (ext.unassigned_participant(), ext.unassigned_team());
    let assignment = alloc.assignment(m);
    let own = |p: usize| assignment[p].unwrap_or(none_t);
    let unstable = |clause, participant, team: Option<usize>, other| {
        Ok(PropertyReport::fail(Witness::Unstable { clause, participant, team, other }))
    };

    for p in 0..m {
        let Some(i) = assignment[p] else { continue };
        if ext.participant_pref(p).prefers(none_t, i) || ext.team_pref(i).prefers(none_p, p) {
            return unstable(StabilityClause::IndividualRationality, p, Some(i), None);
        }
    }
    for p in 0..m {
        let pref = ext.participant_pref(p);
        for q in 0..m {
            let Some(j) = assignment[q] else { continue };
            if own(p) != j && pref.prefers(j, own(p)) && ext.team_pref(j).prefers(p, q) {
                return unstable(StabilityClause::JustifiedEnvy, p, assignment[p], Some(q));
            }
        }
    }
    for p in 0..m {
        let pref = ext.participant_pref(p);
        for i in 0..n {
            if alloc.bundle(i).len() < ext.quota(i)
                && pref.prefers(i, own(p))
                && ext.team_pref(i).weakly_prefers(p, none_p)
            {
                return unstable(StabilityClause::Wastefulness, p, assignment[p], Some(i));
            }
        }
    }
    Ok(PropertyReport::pass())
}

/// Members of `A_j` weakly preferring `i` to `j` and strictly acceptable
/// to `i`.
pub fn justified_targets(ext: &ExtendedInstance, alloc: &Allocation, i: usize, j: usize) -> Vec<usize> {
    let none_p = ext.unassigned_participant();
    alloc
        .bundle(j)
        .iter()
        .copied()
        .filter(|&p| ext.participant_pref(p).weakly_prefers(i, j) && ext.team_pref(i).prefers(p, none_p))
        .collect()
}

/// Extended team-justified SD-EF1. Only the `q_i` members of the target
/// set best for team `i` are compared: every other admissible subset is
/// SD-dominated by them.
pub fn check_extended_team_justified_sd_ef1(ext: &ExtendedInstance, alloc: &Allocation) -> Result<PropertyReport> {
    check_quotas(ext, alloc)?;
    let n = ext.team_count();
    for i in 0..n {
        let order = ext.team_pref(i);
        for j in (0..n).filter(|&j| j != i) {
            let mut target = justified_targets(ext, alloc, i, j);
            target.sort_by_key(|&p| order.tier_of(p));
            target.truncate(ext.quota(i));
            if !sd_dominates_up_to_one(order, alloc.bundle(i), &target) {
                return Ok(PropertyReport::fail(Witness::TeamEnvy { team: i, other: j }));
            }
        }
    }
    Ok(PropertyReport::pass())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::main_algorithm;
    use crate::model::default_names;

    fn acceptable_everywhere(n: usize, m: usize, quotas: Vec<usize>) -> ExtendedInstance {
        let team = WeakOrder::new(m + 1, vec![(0..m).collect(), vec![m]]).unwrap();
        let part = WeakOrder::new(n + 1, vec![(0..n).collect(), vec![n]]).unwrap();
        ExtendedInstance::new(n, default_names(m), vec![team; n], vec![part; m], quotas).unwrap()
    }

    #[test]
    fn augmentation_sizes() {
        let ext = acceptable_everywhere(2, 4, vec![2, 3]);
        let aug = augment_instance(&ext);
        assert_eq!(aug.instance.participant_count(), 9);
        assert_eq!(aug.layout.len(), 9);
        assert_eq!(aug.layout.counts(), &[2, 3, 4]);
    }

    #[test]
    fn dummies_share_the_unassigned_tier() {
        let ext = acceptable_everywhere(2, 2, vec![1, 1]);
        let aug = augment_instance(&ext);
        assert_eq!(aug.instance.team_pref(0).tiers(), &[vec![0, 1], vec![2, 3]]);
        assert_eq!(aug.instance.participant_pref(0).tiers(), &[vec![0, 1], vec![2]]);
    }

    #[test]
    fn single_team_takes_everyone() {
        let ext = acceptable_everywhere(1, 3, vec![3]);
        let a = solve_extended(&ext, &PairOrder::default());
        assert_eq!(a.bundles(), &[vec![0, 1, 2]]);
    }

    #[test]
    fn refusing_participant_stays_unassigned() {
        let mut prefs = vec![WeakOrder::new(3, vec![vec![0, 1], vec![2]]).unwrap(); 3];
        prefs[1] = WeakOrder::new(3, vec![vec![2], vec![0, 1]]).unwrap();
        let team = WeakOrder::new(4, vec![vec![0, 1, 2], vec![3]]).unwrap();
        let ext = ExtendedInstance::new(2, default_names(3), vec![team; 2], prefs, vec![2, 2]).unwrap();
        let a = solve_extended(&ext, &PairOrder::default());
        assert_eq!(a.assignment(3)[1], None);
        assert!(check_stability(&ext, &a).unwrap().holds);
    }

    #[test]
    fn base_quotas_reproduce_main_algorithm() {
        let inst = crate::fixtures::walkthrough_instance();
        let (n, m) = (3, 6);
        let team_prefs = inst
            .team_prefs()
            .iter()
            .map(|o| {
                let mut t = o.tiers().to_vec();
                t.push(vec![m]);
                WeakOrder::new(m + 1, t).unwrap()
            })
            .collect();
        let part_prefs = inst
            .participant_prefs()
            .iter()
            .map(|o| {
                let mut t = o.tiers().to_vec();
                t.push(vec![n]);
                WeakOrder::new(n + 1, t).unwrap()
            })
            .collect();
        let ext = ExtendedInstance::new(n, default_names(m), team_prefs, part_prefs, vec![2, 2, 2]).unwrap();
        let expected = main_algorithm(&inst, &PairOrder::default()).allocation;
        assert_eq!(solve_extended(&ext, &PairOrder::default()), expected);
    }

    #[test]
    fn individual_rationality_violation() {
        let team = WeakOrder::new(2, vec![vec![0], vec![1]]).unwrap();
        let part = WeakOrder::new(3, vec![vec![2], vec![0, 1]]).unwrap();
        let ext = ExtendedInstance::new(2, default_names(1), vec![team; 2], vec![part], vec![1, 1]).unwrap();
        let a = Allocation::new(1, vec![vec![0], vec![]]).unwrap();
        let r = check_stability(&ext, &a).unwrap();
        assert!(matches!(
            r.witness,
            Some(Witness::Unstable { clause: StabilityClause::IndividualRationality, participant: 0, .. })
        ));
    }

    #[test]
    fn wasteful_when_a_free_seat_is_preferred() {
        let ext = acceptable_everywhere(2, 2, vec![1, 1]);
        let a = Allocation::new(2, vec![vec![0], vec![]]).unwrap();
        let r = check_stability(&ext, &a).unwrap();
        assert!(matches!(
            r.witness,
            Some(Witness::Unstable { clause: StabilityClause::Wastefulness, participant: 1, team: None, other: Some(1) })
        ));
        let full = Allocation::new(2, vec![vec![0], vec![1]]).unwrap();
        assert!(check_stability(&ext, &full).unwrap().holds);
    }

    #[test]
    fn quota_violation_is_an_error() {
        let ext = acceptable_everywhere(2, 3, vec![1, 2]);
        let a = Allocation::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        assert!(matches!(check_stability(&ext, &a), Err(Error::QuotaViolation { team: 1, size: 2, quota: 1 })));
    }

    #[test]
    fn empty_targets_pass() {
        let ext = acceptable_everywhere(2, 2, vec![2, 2]);
        let a = Allocation::new(2, vec![vec![], vec![]]).unwrap();
        assert!(check_extended_team_justified_sd_ef1(&ext, &a).unwrap().holds);
    }

    #[test]
    fn lopsided_extended_allocation_fails() {
        let ext = acceptable_everywhere(2, 4, vec![4, 4]);
        let a = Allocation::new(4, vec![vec![], vec![0, 1, 2, 3]]).unwrap();
        let r = check_extended_team_justified_sd_ef1(&ext, &a).unwrap();
        assert_eq!(r.witness, Some(Witness::TeamEnvy { team: 0, other: 1 }));
    }
}

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engines::main_algorithm;
use crate::error::{Error, Result};
use crate::matching::PairOrder;
use crate::model::{Comparison, Instance, WeakOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FuzzMode {
    /// Every weak order as a misreport for every single participant.
    SingletonExhaustive,
    /// Random coalitions of two or three with random misreports.
    GroupRandom,
}

/// One tested deviation. Teams are zero-based; `misreports[k]` is the
/// reported tier list of `coalition[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manipulation {
    pub trial: u64,
    pub coalition: Vec<usize>,
    pub misreports: Vec<Vec<Vec<usize>>>,
    pub truthful_teams: Vec<usize>,
    pub deviated_teams: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FuzzReport {
    pub mode: FuzzMode,
    pub seed: u64,
    pub trials: u64,
    /// Deviations leaving every coalition member strictly better off.
    pub successes: Vec<Manipulation>,
    /// Deviations leaving nobody worse off and someone better off.
    pub weak_manipulations: u64,
}

/// Number of weak orders over `n` alternatives (ordered set partitions).
fn weak_order_count(n: usize) -> u128 {
    let mut a = vec![1u128; n + 1];
    let mut binom = vec![vec![0u128; n + 1]; n + 1];
    for i in 0..=n {
        binom[i][0] = 1;
        for k in 1..=i {
            binom[i][k] = binom[i - 1][k - 1] + if k < i { binom[i - 1][k] } else { 0 };
        }
    }
    for k in 1..=n {
        a[k] = (1..=k).map(|j| binom[k][j].saturating_mul(a[k - j])).fold(0u128, u128::saturating_add);
    }
    a[n]
}

/// All weak orders over `0..n`, as ordered set partitions.
pub fn all_weak_orders(n: usize) -> Vec<WeakOrder> {
    fn rec(rest: &[usize], tiers: &mut Vec<Vec<usize>>, universe: usize, out: &mut Vec<WeakOrder>) {
        if rest.is_empty() {
            out.push(WeakOrder::new(universe, tiers.clone()).expect("ordered partition"));
            return;
        }
        for mask in 1u32..(1 << rest.len()) {
            let (tier, left): (Vec<usize>, Vec<usize>) = {
                let mut t = Vec::new();
                let mut l = Vec::new();
                for (k, &a) in rest.iter().enumerate() {
                    if mask >> k & 1 == 1 {
                        t.push(a);
                    } else {
                        l.push(a);
                    }
                }
                (t, l)
            };
            tiers.push(tier);
            rec(&left, tiers, universe, out);
            tiers.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(&(0..n).collect::<Vec<_>>(), &mut Vec::new(), n, &mut out);
    }
    out
}

fn random_weak_order(n: usize, rng: &mut ChaCha8Rng) -> WeakOrder {
    let mut alts: Vec<usize> = (0..n).collect();
    alts.shuffle(rng);
    let merge = rng.gen::<f64>();
    let mut tiers: Vec<Vec<usize>> = Vec::new();
    for a in alts {
        match tiers.last_mut() {
            Some(t) if rng.gen_bool(merge) => t.push(a),
            _ => tiers.push(vec![a]),
        }
    }
    WeakOrder::new(n, tiers).expect("shuffled partition")
}

fn teams_of(inst: &Instance) -> Vec<usize> {
    main_algorithm(inst, &PairOrder::default())
        .allocation
        .assignment(inst.participant_count())
        .into_iter()
        .map(|t| t.expect("the main algorithm assigns everyone"))
        .collect()
}

/// Runs the main algorithm on truthful and misreported profiles and
/// records every deviation that makes all deviators strictly better off
/// under their true preferences. In exhaustive mode `trials` is ignored
/// and `cap` bounds the number of deviations.
pub fn strategyproofness_fuzz(inst: &Instance, mode: FuzzMode, trials: u64, seed: u64, cap: u64) -> Result<FuzzReport> {
    let (n, m) = (inst.team_count(), inst.participant_count());
    let truthful = teams_of(inst);
    let mut report = FuzzReport { mode, seed, trials: 0, successes: Vec::new(), weak_manipulations: 0 };
    let mut judge = |trial: u64, coalition: Vec<usize>, orders: Vec<WeakOrder>| -> Result<()> {
        let mut deviated = inst.clone();
        for (&p, o) in coalition.iter().zip(&orders) {
            deviated = deviated.with_participant_pref(p, o.clone())?;
        }
        let outcome = teams_of(&deviated);
        let changes: Vec<Comparison> =
            (0..m).map(|p| inst.participant_pref(p).cmp(outcome[p], truthful[p])).collect();
        let members: Vec<Comparison> = coalition.iter().map(|&p| changes[p]).collect();
        if members.iter().all(|&c| c == Comparison::Better) {
            report.successes.push(Manipulation {
                trial,
                coalition: coalition.clone(),
                misreports: orders.iter().map(|o| o.tiers().to_vec()).collect(),
                truthful_teams: coalition.iter().map(|&p| truthful[p]).collect(),
                deviated_teams: coalition.iter().map(|&p| outcome[p]).collect(),
            });
        }
        if members.iter().all(|c| c.is_weakly_better()) && members.contains(&Comparison::Better) {
            report.weak_manipulations += 1;
        }
        report.trials += 1;
        Ok(())
    };
    match mode {
        FuzzMode::SingletonExhaustive => {
            let required = weak_order_count(n).saturating_mul(m as u128);
            if required > u128::from(cap) {
                return Err(Error::Capacity { cap, required });
            }
            let orders = all_weak_orders(n);
            let mut trial = 0;
            for p in 0..m {
                for o in &orders {
                    judge(trial, vec![p], vec![o.clone()])?;
                    trial += 1;
                }
            }
        }
        FuzzMode::GroupRandom => {
            for trial in 0..trials {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(trial);
                let size = if m >= 3 { rng.gen_range(2..=3) } else { m };
                let mut coalition = index::sample(&mut rng, m, size).into_vec();
                coalition.sort_unstable();
                let orders = coalition.iter().map(|_| random_weak_order(n, &mut rng)).collect();
                judge(trial, coalition, orders)?;
            }
        }
    }
    Ok(report)
}

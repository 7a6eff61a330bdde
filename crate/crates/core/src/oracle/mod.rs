//! Brute-force ground truth: allocation enumeration, blocking paths and the
//! strategyproofness fuzzer.

mod blocking_path;
mod fuzz;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::extended::{check_quotas, justified_targets};
use crate::model::{Allocation, ExtendedInstance, Instance};
use crate::relations::{self, PropertyReport, Witness};

pub use blocking_path::{find_blocking_path, least_preferred_violation, validate_blocking_path};
pub use fuzz::{all_weak_orders, strategyproofness_fuzz, FuzzMode, FuzzReport, Manipulation};

pub const DEFAULT_ENUM_CAP: u64 = 2_000_000;
pub const ENUM_CAP_VAR: &str = "FAIRMATCH_ENUM_CAP";

/// The enumeration cap: `FAIRMATCH_ENUM_CAP` if set and valid, else the
/// default.
pub fn enum_cap() -> u64 {
    std::env::var(ENUM_CAP_VAR).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_ENUM_CAP)
}

fn ensure_within_cap(required: u128, cap: u64) -> Result<()> {
    if required > u128::from(cap) {
        return Err(Error::Capacity { cap, required });
    }
    Ok(())
}

/// `n^m`, saturating.
fn allocation_count(n: usize, m: usize) -> u128 {
    (0..m).fold(1u128, |acc, _| acc.saturating_mul(n as u128))
}

/// Every allocation of the instance in odometer order over the
/// assignment vector (participant 1 varies fastest).
pub struct Allocations {
    n: usize,
    digits: Vec<usize>,
    balanced_only: bool,
    done: bool,
}

impl Iterator for Allocations {
    type Item = Allocation;

    fn next(&mut self) -> Option<Allocation> {
        while !self.done {
            let assignment: Vec<Option<usize>> = self.digits.iter().map(|&d| Some(d)).collect();
            let mut k = 0;
            loop {
                if k == self.digits.len() {
                    self.done = true;
                    break;
                }
                self.digits[k] += 1;
                if self.digits[k] < self.n {
                    break;
                }
                self.digits[k] = 0;
                k += 1;
            }
            let alloc = Allocation::from_assignment(self.n, &assignment);
            if !self.balanced_only || relations::check_balanced(&alloc).holds {
                return Some(alloc);
            }
        }
        None
    }
}

pub fn enumerate_allocations(inst: &Instance, balanced_only: bool, cap: u64) -> Result<Allocations> {
    let (n, m) = (inst.team_count(), inst.participant_count());
    ensure_within_cap(allocation_count(n, m), cap)?;
    Ok(Allocations { n, digits: vec![0; m], balanced_only, done: false })
}

/// A base-setting property checkable on an allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Property {
    TeamSdEf1,
    TeamJustifiedSdEf1,
    ParticipantEf,
    ParticipantJustifiedEf,
    Balanced,
    SwapStable,
    Po,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::TeamSdEf1,
        Property::TeamJustifiedSdEf1,
        Property::ParticipantEf,
        Property::ParticipantJustifiedEf,
        Property::Balanced,
        Property::SwapStable,
        Property::Po,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::TeamSdEf1 => "team-sd-ef1",
            Property::TeamJustifiedSdEf1 => "team-justified-sd-ef1",
            Property::ParticipantEf => "participant-ef",
            Property::ParticipantJustifiedEf => "participant-justified-ef",
            Property::Balanced => "balanced",
            Property::SwapStable => "swap-stable",
            Property::Po => "po",
        }
    }

    pub fn check(self, inst: &Instance, alloc: &Allocation, cap: u64) -> Result<PropertyReport> {
        Ok(match self {
            Property::TeamSdEf1 => relations::check_team_sd_ef1(inst, alloc, false),
            Property::TeamJustifiedSdEf1 => relations::check_team_sd_ef1(inst, alloc, true),
            Property::ParticipantEf => relations::check_participant_ef(inst, alloc, false),
            Property::ParticipantJustifiedEf => relations::check_participant_ef(inst, alloc, true),
            Property::Balanced => relations::check_balanced(alloc),
            Property::SwapStable => relations::check_swap_stable(inst, alloc),
            Property::Po => relations::check_po(inst, alloc, cap)?,
        })
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Property::ALL.into_iter().find(|p| p.name() == s.trim()).ok_or_else(|| {
            let known: Vec<&str> = Property::ALL.iter().map(|p| p.name()).collect();
            Error::Domain(format!("unknown property `{s}` (expected one of {})", known.join(", ")))
        })
    }
}

/// First enumerated allocation satisfying every property, or `None`.
pub fn exists_allocation_satisfying(inst: &Instance, props: &[Property], cap: u64) -> Result<Option<Allocation>> {
    let balanced_only = props.contains(&Property::Balanced);
    for alloc in enumerate_allocations(inst, balanced_only, cap)? {
        let mut ok = true;
        for p in props {
            if !p.check(inst, &alloc, cap)?.holds {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(Some(alloc));
        }
    }
    Ok(None)
}

/// PO by searching every allocation for a Pareto improvement.
pub fn check_po_brute_force(inst: &Instance, alloc: &Allocation, cap: u64) -> Result<PropertyReport> {
    for other in enumerate_allocations(inst, false, cap)? {
        if relations::pareto_dominates(inst, &other, alloc) {
            return Ok(PropertyReport::fail(Witness::ParetoImprovement { bundles: other.bundles().to_vec() }));
        }
    }
    Ok(PropertyReport::pass())
}

/// `Q ≿SD R` by trying every `|R|`-subset of `Q` and every bijection.
pub fn sd_dominates_brute_force(order: &crate::model::WeakOrder, q: &[usize], r: &[usize]) -> bool {
    fn assign(order: &crate::model::WeakOrder, q: &[usize], used: &mut [bool], r: &[usize]) -> bool {
        let Some((&first, rest)) = r.split_first() else { return true };
        for k in 0..q.len() {
            if !used[k] && order.weakly_prefers(q[k], first) {
                used[k] = true;
                if assign(order, q, used, rest) {
                    return true;
                }
                used[k] = false;
            }
        }
        false
    }
    q.len() >= r.len() && assign(order, q, &mut vec![false; q.len()], r)
}

/// Extended team-justified SD-EF1 by enumerating every subset `C` of each
/// target set with `|C| <= q_i`. Target sets larger than 20 are refused.
pub fn extended_sd_ef1_by_subsets(ext: &ExtendedInstance, alloc: &Allocation) -> Result<PropertyReport> {
    check_quotas(ext, alloc)?;
    let n = ext.team_count();
    for i in 0..n {
        let order = ext.team_pref(i);
        for j in (0..n).filter(|&j| j != i) {
            let b = justified_targets(ext, alloc, i, j);
            ensure_within_cap(1u128 << b.len().min(127), 1 << 20)?;
            for mask in 0u64..(1 << b.len()) {
                if mask.count_ones() as usize > ext.quota(i) {
                    continue;
                }
                let c: Vec<usize> = (0..b.len()).filter(|k| mask >> k & 1 == 1).map(|k| b[k]).collect();
                let ok = relations::sd_dominates(order, alloc.bundle(i), &c)
                    || (0..c.len()).any(|skip| {
                        let rest: Vec<usize> =
                            c.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &p)| p).collect();
                        relations::sd_dominates(order, alloc.bundle(i), &rest)
                    });
                if !ok {
                    return Ok(PropertyReport::fail(Witness::TeamEnvy { team: i, other: j }));
                }
            }
        }
    }
    Ok(PropertyReport::pass())
}

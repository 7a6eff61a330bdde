//! JSON instance and allocation documents, and seeded instance generation.
//!
//! ```json
//! {
//!   "teams": 2,
//!   "participants": ["p1", "p2", "p3", "p4"],
//!   "team_prefs": [[["p1", "p2"], ["p3", "p4"]], [["p1", "p2"], ["p3", "p4"]]],
//!   "participant_prefs": [[[1], [2]], [[1], [2]], [[1], [2]], [[1], [2]]]
//! }
//! ```
//!
//! Teams are referred to by one-based number. With `quotas` present the
//! document is an extended instance and every preference must also rank
//! the token `"UNASSIGNED"`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, Result};
use crate::model::{default_names, Allocation, ExtendedInstance, Instance, WeakOrder, UNASSIGNED};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TeamRef {
    Number(u64),
    Token(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub teams: usize,
    pub participants: Vec<String>,
    pub team_prefs: Vec<Vec<Vec<String>>>,
    pub participant_prefs: Vec<Vec<Vec<TeamRef>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quotas: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedInstance {
    Base(Instance),
    Extended(ExtendedInstance),
}

impl ParsedInstance {
    pub fn participants(&self) -> &[String] {
        match self {
            ParsedInstance::Base(i) => i.participants(),
            ParsedInstance::Extended(e) => e.participants(),
        }
    }
}

fn perr(path: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Parse(ParseError::new(path, reason))
}

fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| perr(format!("line {} column {}", e.line(), e.column()), e.to_string()))
}

/// Tiers of alternative indices, checked for emptiness and duplicates;
/// coverage is left to [`WeakOrder::new`].
fn order_from(
    path: &str,
    universe: usize,
    tiers: Vec<Vec<usize>>,
) -> Result<WeakOrder> {
    let mut seen = vec![false; universe];
    for (t, tier) in tiers.iter().enumerate() {
        if tier.is_empty() {
            return Err(perr(format!("{path}[{t}]"), "empty tier"));
        }
        for (k, &a) in tier.iter().enumerate() {
            if std::mem::replace(&mut seen[a], true) {
                return Err(perr(format!("{path}[{t}][{k}]"), "alternative ranked twice"));
            }
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(perr(path, format!("alternative #{} is not ranked", missing + 1)));
    }
    WeakOrder::new(universe, tiers).map_err(|e| perr(path, e.to_string()))
}

impl InstanceDocument {
    pub fn parse(text: &str) -> Result<ParsedInstance> {
        from_json::<InstanceDocument>(text)?.into_instance()
    }

    pub fn into_instance(self) -> Result<ParsedInstance> {
        let (n, m) = (self.teams, self.participants.len());
        let extended = self.quotas.is_some();
        if n == 0 {
            return Err(perr("teams", "at least one team is required"));
        }
        if m == 0 {
            return Err(perr("participants", "at least one participant is required"));
        }
        for (k, name) in self.participants.iter().enumerate() {
            if name == UNASSIGNED || name.is_empty() {
                return Err(perr(format!("participants[{k}]"), format!("`{name}` is not a valid name")));
            }
            if self.participants[..k].contains(name) {
                return Err(perr(format!("participants[{k}]"), format!("duplicate participant `{name}`")));
            }
        }
        if self.team_prefs.len() != n {
            return Err(perr("team_prefs", format!("expected {n} preference lists, found {}", self.team_prefs.len())));
        }
        if self.participant_prefs.len() != m {
            return Err(perr(
                "participant_prefs",
                format!("expected {m} preference lists, found {}", self.participant_prefs.len()),
            ));
        }
        let extra = usize::from(extended);
        let mut team_prefs = Vec::with_capacity(n);
        for (i, tiers) in self.team_prefs.into_iter().enumerate() {
            let path = format!("team_prefs[{i}]");
            let mut ids = Vec::with_capacity(tiers.len());
            for (t, tier) in tiers.into_iter().enumerate() {
                let mut out = Vec::with_capacity(tier.len());
                for (k, name) in tier.iter().enumerate() {
                    let id = if extended && name == UNASSIGNED {
                        m
                    } else {
                        self.participants
                            .iter()
                            .position(|p| p == name)
                            .ok_or_else(|| perr(format!("{path}[{t}][{k}]"), format!("unknown participant `{name}`")))?
                    };
                    out.push(id);
                }
                ids.push(out);
            }
            team_prefs.push(order_from(&path, m + extra, ids)?);
        }
        let mut participant_prefs = Vec::with_capacity(m);
        for (j, tiers) in self.participant_prefs.into_iter().enumerate() {
            let path = format!("participant_prefs[{j}]");
            let mut ids = Vec::with_capacity(tiers.len());
            for (t, tier) in tiers.into_iter().enumerate() {
                let mut out = Vec::with_capacity(tier.len());
                for (k, r) in tier.iter().enumerate() {
                    let id = match r {
                        TeamRef::Number(x) if *x >= 1 && *x as usize <= n => *x as usize - 1,
                        TeamRef::Token(s) if extended && s == UNASSIGNED => n,
                        other => {
                            return Err(perr(format!("{path}[{t}][{k}]"), format!("unknown team {}", show(other))));
                        }
                    };
                    out.push(id);
                }
                ids.push(out);
            }
            participant_prefs.push(order_from(&path, n + extra, ids)?);
        }
        match self.quotas {
            None => Ok(ParsedInstance::Base(
                Instance::new(n, self.participants, team_prefs, participant_prefs).map_err(|e| perr("$", e.to_string()))?,
            )),
            Some(quotas) => {
                if quotas.len() != n {
                    return Err(perr("quotas", format!("expected {n} quotas, found {}", quotas.len())));
                }
                if let Some(i) = quotas.iter().position(|&q| q == 0 || q > m) {
                    return Err(perr(format!("quotas[{i}]"), format!("quota must lie in 1..={m}")));
                }
                Ok(ParsedInstance::Extended(
                    ExtendedInstance::new(n, self.participants, team_prefs, participant_prefs, quotas)
                        .map_err(|e| perr("$", e.to_string()))?,
                ))
            }
        }
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let names = inst.participants();
        Self {
            teams: inst.team_count(),
            participants: names.to_vec(),
            team_prefs: inst.team_prefs().iter().map(|o| name_tiers(o, names)).collect(),
            participant_prefs: inst.participant_prefs().iter().map(|o| team_tiers(o, usize::MAX)).collect(),
            quotas: None,
        }
    }

    pub fn from_extended(ext: &ExtendedInstance) -> Self {
        let mut names = ext.participants().to_vec();
        names.push(UNASSIGNED.to_string());
        Self {
            teams: ext.team_count(),
            participants: ext.participants().to_vec(),
            team_prefs: ext.team_prefs().iter().map(|o| name_tiers(o, &names)).collect(),
            participant_prefs: ext.participant_prefs().iter().map(|o| team_tiers(o, ext.team_count())).collect(),
            quotas: Some(ext.quotas().to_vec()),
        }
    }

    pub fn from_parsed(parsed: &ParsedInstance) -> Self {
        match parsed {
            ParsedInstance::Base(i) => Self::from_instance(i),
            ParsedInstance::Extended(e) => Self::from_extended(e),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }
}

fn show(r: &TeamRef) -> String {
    match r {
        TeamRef::Number(x) => x.to_string(),
        TeamRef::Token(s) => format!("`{s}`"),
    }
}

fn name_tiers(order: &WeakOrder, names: &[String]) -> Vec<Vec<String>> {
    order.tiers().iter().map(|t| t.iter().map(|&p| names[p].clone()).collect()).collect()
}

fn team_tiers(order: &WeakOrder, unassigned: usize) -> Vec<Vec<TeamRef>> {
    order
        .tiers()
        .iter()
        .map(|t| {
            t.iter()
                .map(|&i| if i == unassigned { TeamRef::Token(UNASSIGNED.into()) } else { TeamRef::Number(i as u64 + 1) })
                .collect()
        })
        .collect()
}

/// `{"bundles": [[names of team 1], [names of team 2], ...]}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationDocument {
    pub bundles: Vec<Vec<String>>,
}

impl AllocationDocument {
    pub fn from_allocation(alloc: &Allocation, names: &[String]) -> Self {
        Self { bundles: alloc.bundles().iter().map(|b| b.iter().map(|&p| names[p].clone()).collect()).collect() }
    }

    pub fn parse(text: &str, names: &[String], teams: usize) -> Result<Allocation> {
        from_json::<AllocationDocument>(text)?.into_allocation(names, teams)
    }

    pub fn into_allocation(self, names: &[String], teams: usize) -> Result<Allocation> {
        if self.bundles.len() != teams {
            return Err(perr("bundles", format!("expected {teams} bundles, found {}", self.bundles.len())));
        }
        let mut seen = vec![false; names.len()];
        let mut bundles = Vec::with_capacity(teams);
        for (i, b) in self.bundles.iter().enumerate() {
            let mut ids = Vec::with_capacity(b.len());
            for (k, name) in b.iter().enumerate() {
                let path = format!("bundles[{i}][{k}]");
                let id = names.iter().position(|p| p == name).ok_or_else(|| perr(&path, format!("unknown participant `{name}`")))?;
                if std::mem::replace(&mut seen[id], true) {
                    return Err(perr(path, format!("`{name}` appears twice")));
                }
                ids.push(id);
            }
            bundles.push(ids);
        }
        Allocation::new(names.len(), bundles)
    }
}

fn random_order(universe: usize, tie_prob: f64, rng: &mut ChaCha8Rng) -> WeakOrder {
    let mut alts: Vec<usize> = (0..universe).collect();
    alts.shuffle(rng);
    let mut tiers: Vec<Vec<usize>> = Vec::new();
    for a in alts {
        match tiers.last_mut() {
            Some(t) if rng.gen_bool(tie_prob) => t.push(a),
            _ => tiers.push(vec![a]),
        }
    }
    WeakOrder::new(universe, tiers).expect("shuffled partition")
}

/// Random instance: every preference is a shuffle whose adjacent
/// alternatives are merged into one tier with probability `tie_prob`.
pub fn generate(n: usize, m: usize, tie_prob: f64, seed: u64) -> Instance {
    assert!(n >= 1 && m >= 1, "generate needs at least one team and one participant");
    assert!((0.0..=1.0).contains(&tie_prob), "tie probability must lie in [0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let team_prefs = (0..n).map(|_| random_order(m, tie_prob, &mut rng)).collect();
    let participant_prefs = (0..m).map(|_| random_order(n, tie_prob, &mut rng)).collect();
    Instance::new(n, default_names(m), team_prefs, participant_prefs).expect("generated instance is valid")
}

/// Inserts `extra` below each bottom tier with probability
/// `unacceptable_prob`, stopping at the first miss; it joins the tier just
/// above with probability `tie_prob`, else forms its own tier.
fn with_unassigned(
    order: WeakOrder,
    extra: usize,
    tie_prob: f64,
    unacceptable_prob: f64,
    rng: &mut ChaCha8Rng,
) -> WeakOrder {
    let mut tiers = order.tiers().to_vec();
    let mut below = 0;
    while below < tiers.len() && rng.gen_bool(unacceptable_prob) {
        below += 1;
    }
    let at = tiers.len() - below;
    if at > 0 && rng.gen_bool(tie_prob) {
        tiers[at - 1].push(extra);
    } else {
        tiers.insert(at, vec![extra]);
    }
    WeakOrder::new(extra + 1, tiers).expect("one extra alternative")
}

/// Random extended instance with quotas in `1..=min(max_quota, m)`.
pub fn generate_extended(
    n: usize,
    m: usize,
    tie_prob: f64,
    max_quota: usize,
    unacceptable_prob: f64,
    seed: u64,
) -> ExtendedInstance {
    assert!(max_quota >= 1, "quotas are positive");
    assert!((0.0..=1.0).contains(&unacceptable_prob), "unacceptability probability must lie in [0, 1]");
    let base = generate(n, m, tie_prob, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let team_prefs = base.team_prefs().iter().map(|o| with_unassigned(o.clone(), m, tie_prob, unacceptable_prob, &mut rng)).collect();
    let participant_prefs =
        base.participant_prefs().iter().map(|o| with_unassigned(o.clone(), n, tie_prob, unacceptable_prob, &mut rng)).collect();
    let quotas = (0..n).map(|_| rng.gen_range(1..=max_quota.min(m))).collect();
    ExtendedInstance::new(n, default_names(m), team_prefs, participant_prefs, quotas).expect("generated instance is valid")
}

//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if
//! any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use fairmatch::engines::{self, TieBreak};
use fairmatch::extended;
use fairmatch::fixtures;
use fairmatch::io::{self, InstanceDocument};
use fairmatch::matching::{EligibilityGraph, PairOrder};
use fairmatch::model::{slot_layout, Allocation, Instance, SlotLayout};
use fairmatch::oracle::{self, FuzzMode, Property};
use fairmatch::relations::{self, Witness};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const TIE_PROBS: [f64; 4] = [0.0, 0.3, 0.7, 1.0];
const CAP: u64 = oracle::DEFAULT_ENUM_CAP;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    ensure(start.elapsed() <= limit, || format!("took {:.2?}, limit {limit:?}", start.elapsed()))
}

/// `count` seeded instances with `n` and `m` drawn from the given ranges.
fn instances(
    count: u64,
    salt: u64,
    n: std::ops::RangeInclusive<usize>,
    m: std::ops::RangeInclusive<usize>,
) -> Vec<(u64, Instance)> {
    (0..count)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt.rotate_left(32));
            let (n, m) = (rng.gen_range(n.clone()), rng.gen_range(m.clone()));
            let tie = *TIE_PROBS.choose(&mut rng).unwrap();
            (seed, io::generate(n, m, tie, seed.wrapping_add(salt)))
        })
        .collect()
}

fn main_suite() -> Vec<(u64, Instance)> {
    instances(500, 0, 1..=4, 1..=8)
}

fn workdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fairmatch-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_instance(dir: &Path, name: &str, doc: &InstanceDocument) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, doc.to_json()).unwrap();
    path
}

fn cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_fairmatch")).args(args).output().expect("the CLI runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn cli_json(args: &[&str]) -> (i32, Value) {
    let (code, stdout) = cli(args);
    (code, serde_json::from_slice(&stdout).unwrap_or(Value::Null))
}

fn names(bundles: &[Vec<&str>]) -> Value {
    serde_json::json!(bundles)
}

fn golden_walkthrough() -> Check {
    let start = Instant::now();
    let dir = workdir();
    let file = write_instance(&dir, "walkthrough.json", &InstanceDocument::from_instance(&fixtures::walkthrough_instance()));
    let (code, out) = cli_json(&["solve", "--alg", "main", "--trace", file.to_str().unwrap()]);
    ensure(code == 0, || format!("exit code {code}"))?;
    let expected = names(&[vec!["p1", "p2"], vec!["p3", "p4"], vec!["p5", "p6"]]);
    ensure(out["bundles"] == expected, || format!("bundles {}", out["bundles"]))?;
    let iterations = out["trace"].as_array().map_or(0, Vec::len);
    ensure(iterations == 3, || format!("{iterations} iterations"))?;
    within(Duration::from_secs(1), start)?;
    Ok(format!("({{p1,p2}},{{p3,p4}},{{p5,p6}}) in {iterations} iterations, {:.0?}", start.elapsed()))
}

fn incompatibility() -> Check {
    let start = Instant::now();
    let dir = workdir();
    let file = write_instance(&dir, "incompat.json", &InstanceDocument::from_instance(&fixtures::incompatibility_instance()));
    let file = file.to_str().unwrap();
    let (code, out) = cli_json(&["oracle", "exists", "--props", "team-sd-ef1,participant-justified-ef", file]);
    ensure(code == 1 && out["found"].is_null(), || format!("unexpected witness {} (exit {code})", out["found"]))?;
    let (code, out) = cli_json(&["oracle", "exists", "--props", "team-justified-sd-ef1,participant-justified-ef", file]);
    ensure(code == 0 && !out["found"].is_null(), || format!("no witness found (exit {code})"))?;
    within(Duration::from_secs(1), start)?;
    let witness = serde_json::to_string(&out["found"]).unwrap();
    Ok(format!("none with team-SD-EF1; witness {witness} with the justified variant"))
}

fn main_properties() -> Check {
    let start = Instant::now();
    let suite = main_suite();
    for (seed, inst) in &suite {
        let a = engines::main_algorithm(inst, &PairOrder::default()).allocation;
        for p in [Property::TeamJustifiedSdEf1, Property::ParticipantJustifiedEf, Property::Balanced] {
            let r = p.check(inst, &a, CAP).map_err(|e| e.to_string())?;
            ensure(r.holds, || format!("seed {seed}: {p} fails: {}", r.witness.unwrap().describe(inst.participants())))?;
        }
        let po = if inst.participant_count() <= 6 {
            let brute = oracle::check_po_brute_force(inst, &a, CAP).map_err(|e| e.to_string())?;
            let cycles = relations::check_po_by_cycles(inst, &a);
            ensure(brute.holds == cycles.holds, || format!("seed {seed}: cycle and brute-force PO disagree"))?;
            brute
        } else {
            relations::check_po_by_cycles(inst, &a)
        };
        ensure(po.holds, || format!("seed {seed}: not PO"))?;
    }
    within(Duration::from_secs(120), start)?;
    Ok(format!("{} instances, zero failures, {:.1?}", suite.len(), start.elapsed()))
}

fn trace_blocking_paths() -> Check {
    let suite = main_suite();
    let mut iterations = 0;
    for (seed, inst) in &suite {
        let out = engines::main_algorithm(inst, &PairOrder::default());
        for (k, step) in out.trace.iter().enumerate() {
            iterations += 1;
            let path = oracle::find_blocking_path(inst, &out.layout, &step.matching, &step.eligibility)
                .map_err(|e| e.to_string())?;
            ensure(path.is_none(), || format!("seed {seed}, iteration {}: blocking path {path:?}", k + 1))?;
            let bad = oracle::least_preferred_violation(inst, &out.layout, &step.matching, &step.eligibility);
            ensure(bad.is_none(), || format!("seed {seed}, iteration {}: participant {bad:?} above their worst eligible team", k + 1))?;
        }
    }
    Ok(format!("{iterations} iterations over {} instances, zero failures", suite.len()))
}

fn weakly_increasing_values() -> Check {
    let suite = main_suite();
    for (seed, inst) in &suite {
        let out = engines::main_algorithm(inst, &PairOrder::default());
        for w in out.trace.windows(2) {
            for (x, (a, b)) in w[0].slot_values.iter().zip(&w[1].slot_values).enumerate() {
                ensure(a.as_key() <= b.as_key(), || format!("seed {seed}: slot {} went from {a:?} to {b:?}", out.layout.slot(x)))?;
            }
        }
    }
    Ok(format!("{} instances, every slot non-decreasing", suite.len()))
}

fn reductions() -> Check {
    for (seed, inst) in instances(200, 6, 1..=4, 1..=8) {
        let strict_teams = io::generate(inst.team_count(), inst.participant_count(), 0.0, seed);
        let inst = common::with_indifferent_participants(&strict_teams);
        let main = engines::main_algorithm(&inst, &PairOrder::default()).allocation;
        let rr = engines::round_robin_reference(&inst);
        ensure(main == rr, || format!("seed {seed}: main {:?} vs round-robin {:?}", main.bundles(), rr.bundles()))?;
        let tied = common::with_indifferent_participants(&io::generate(inst.team_count(), inst.participant_count().min(7), 0.5, seed));
        let main = engines::main_algorithm(&tied, &PairOrder::default()).allocation;
        ensure(common::round_robin_outcomes(&tied).contains(&main), || format!("seed {seed}: not a round-robin outcome under tied team orders"))?;
    }
    for (seed, inst) in instances(200, 66, 1..=4, 1..=8) {
        let (n, m) = (inst.team_count(), inst.participant_count());
        let inst = io::generate(n, m, 0.0, seed);
        let caps = slot_layout(n, m);
        let gs = engines::gale_shapley_reference(&inst, &caps).map_err(|e| e.to_string())?;
        let gs = gs.fold(&SlotLayout::from_counts(caps));
        let main = engines::main_algorithm(&inst, &PairOrder::default()).allocation;
        ensure(main == gs, || format!("seed {seed}: main {:?} vs deferred acceptance {:?}", main.bundles(), gs.bundles()))?;
    }
    Ok("200 indifferent-participant and 200 strict instances, exact equality; tied team orders give a round-robin outcome".into())
}

fn strategyproofness() -> Check {
    let start = Instant::now();
    let mut tested = 0;
    for (seed, inst) in instances(50, 7, 1..=3, 1..=5) {
        let r = oracle::strategyproofness_fuzz(&inst, FuzzMode::SingletonExhaustive, 0, seed, CAP)
            .map_err(|e| e.to_string())?;
        tested += r.trials;
        ensure(r.successes.is_empty(), || format!("seed {seed}: manipulation {:?}", r.successes[0]))?;
    }
    let mut trials = 0;
    for (seed, inst) in instances(100, 77, 1..=3, 2..=6) {
        let r = oracle::strategyproofness_fuzz(&inst, FuzzMode::GroupRandom, 100, seed, CAP).map_err(|e| e.to_string())?;
        trials += r.trials;
        ensure(r.successes.is_empty(), || format!("seed {seed}: group manipulation {:?}", r.successes[0]))?;
    }
    within(Duration::from_secs(600), start)?;
    Ok(format!("{tested} single misreports, {trials} group trials, zero successes, {:.1?}", start.elapsed()))
}

fn earlier_algorithms() -> Check {
    for (seed, inst) in instances(200, 8, 1..=4, 1..=8) {
        let a = engines::round_robin_top(&inst);
        for p in [Property::TeamJustifiedSdEf1, Property::ParticipantEf] {
            ensure(p.check(&inst, &a, CAP).unwrap().holds, || format!("seed {seed}: top-choice round-robin fails {p}"))?;
        }
        let tb = if seed % 2 == 0 { TieBreak::ParticipantIndex } else { TieBreak::Seeded(seed) };
        let a = engines::auxiliary_gale_shapley(&inst, tb);
        for p in [Property::TeamJustifiedSdEf1, Property::ParticipantJustifiedEf, Property::Balanced] {
            ensure(p.check(&inst, &a, CAP).unwrap().holds, || format!("seed {seed}: auxiliary approach fails {p}"))?;
        }
    }
    let aux = fixtures::auxiliary_instance();
    let a = engines::auxiliary_gale_shapley(&aux, TieBreak::ParticipantIndex);
    ensure(a.bundles() == [vec![0, 3], vec![1, 4], vec![2, 5]], || format!("auxiliary golden {:?}", a.bundles()))?;
    let swapped = Allocation::new(6, vec![vec![3, 4], vec![0, 1], vec![2, 5]]).unwrap();
    let r = relations::check_team_sd_ef1(&aux, &swapped, true);
    ensure(r.witness == Some(Witness::TeamEnvy { team: 2, other: 1 }), || format!("post-swap witness {:?}", r.witness))?;
    let swap = fixtures::swap_instance();
    let crossed = Allocation::new(4, vec![vec![0, 2], vec![1, 3]]).unwrap();
    let r = relations::check_swap_stable(&swap, &crossed);
    ensure(r.witness == Some(Witness::Swap { first: 1, second: 2 }), || format!("swap witness {:?}", r.witness))?;
    Ok("200 instances each; golden examples reproduce".into())
}

fn random_partial(ext: &fairmatch::model::ExtendedInstance, rng: &mut ChaCha8Rng) -> Allocation {
    let n = ext.team_count();
    let mut bundles = vec![Vec::new(); n];
    for p in 0..ext.participant_count() {
        let i = rng.gen_range(0..=n);
        if i < n && bundles[i].len() < ext.quota(i) {
            bundles[i].push(p);
        }
    }
    Allocation::new(ext.participant_count(), bundles).unwrap()
}

fn extended_setting() -> Check {
    let mut compared = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9);
        let (n, m) = (rng.gen_range(1..=4), rng.gen_range(1..=7));
        let tie = *TIE_PROBS.choose(&mut rng).unwrap();
        let ext = io::generate_extended(n, m, tie, 3, 0.2, seed);
        let a = extended::solve_extended(&ext, &PairOrder::default());
        extended::check_quotas(&ext, &a).map_err(|e| format!("seed {seed}: {e}"))?;
        let st = extended::check_stability(&ext, &a).unwrap();
        ensure(st.holds, || format!("seed {seed}: unstable, {}", st.witness.unwrap().describe(ext.participants())))?;
        let ef = extended::check_extended_team_justified_sd_ef1(&ext, &a).unwrap();
        ensure(ef.holds, || format!("seed {seed}: extended SD-EF1 fails, {:?}", ef.witness))?;
        let mut candidates = vec![a];
        candidates.extend((0..5).map(|_| random_partial(&ext, &mut rng)));
        for c in candidates {
            let small = (0..n).all(|i| (0..n).all(|j| i == j || extended::justified_targets(&ext, &c, i, j).len() <= 6));
            if small {
                compared += 1;
                let fast = extended::check_extended_team_justified_sd_ef1(&ext, &c).unwrap().holds;
                let slow = oracle::extended_sd_ef1_by_subsets(&ext, &c).unwrap().holds;
                ensure(fast == slow, || format!("seed {seed}: shortcut {fast} vs subsets {slow} on {:?}", c.bundles()))?;
            }
        }
    }
    Ok(format!("200 instances pass; shortcut matches subset enumeration on {compared} allocations"))
}

fn determinism() -> Check {
    let dir = workdir();
    let base = write_instance(&dir, "det.json", &InstanceDocument::from_instance(&io::generate(3, 6, 0.3, 5)));
    let ext = write_instance(&dir, "det-ext.json", &InstanceDocument::from_extended(&io::generate_extended(3, 6, 0.3, 3, 0.2, 5)));
    let alloc = dir.join("det-alloc.json");
    std::fs::write(&alloc, r#"{"bundles": [["p1", "p2"], ["p3", "p4"], ["p5", "p6"]]}"#).unwrap();
    let (b, e, a) = (base.to_str().unwrap(), ext.to_str().unwrap(), alloc.to_str().unwrap());
    let commands: Vec<Vec<&str>> = vec![
        vec!["generate", "--n", "3", "--m", "7", "--tie-prob", "0.4", "--seed", "11"],
        vec!["generate", "--n", "3", "--m", "7", "--tie-prob", "0.4", "--seed", "11", "--max-quota", "3", "--unacceptable-prob", "0.2"],
        vec!["solve", "--alg", "main", "--trace", b],
        vec!["solve", "--alg", "main", "--pair-order", "seeded:5", b],
        vec!["solve", "--alg", "rr-top", b],
        vec!["solve", "--alg", "auxiliary", "--tie-break", "seeded:3", b],
        vec!["solve", "--alg", "extended", e],
        vec!["verify", "--props", "team-sd-ef1,po,swap-stable", "--allocation", a, b],
        vec!["oracle", "exists", "--props", "team-justified-sd-ef1,participant-justified-ef,po", b],
        vec!["fuzz", "sp", "--mode", "singleton", b],
        vec!["fuzz", "sp", "--mode", "group", "--trials", "200", "--seed", "7", b],
    ];
    for args in &commands {
        let first = cli(args);
        let second = cli(args);
        ensure(first == second, || format!("`{}` differs between runs", args.join(" ")))?;
        ensure(!first.1.is_empty(), || format!("`{}` printed nothing", args.join(" ")))?;
    }
    Ok(format!("{} commands byte-identical across two runs", commands.len()))
}

fn oracle_consistency() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..10_000 {
        let u = rng.gen_range(1..=7);
        let order = common::random_order(u, rng.gen(), &mut rng);
        let q: Vec<usize> = (0..u).filter(|_| rng.gen_bool(0.5)).collect();
        let r: Vec<usize> = (0..u).filter(|_| rng.gen_bool(0.5)).collect();
        let (fast, slow) = (relations::sd_dominates(&order, &q, &r), oracle::sd_dominates_brute_force(&order, &q, &r));
        ensure(fast == slow, || format!("trial {trial}: {q:?} vs {r:?} under {:?}", order.tiers()))?;
    }
    for seed in 0..100u64 {
        let (n, m) = (rng.gen_range(1..=3), rng.gen_range(1..=5));
        let inst = io::generate(n, m, *TIE_PROBS.choose(&mut rng).unwrap(), seed);
        let layout = SlotLayout::balanced(n, m);
        let elig = common::random_eligibility(n, m, 0.6, &mut rng);
        let order = if seed % 2 == 0 { PairOrder::ParticipantMajor } else { PairOrder::Seeded(seed) };
        let fast = fairmatch::matching::lexopt_matching(&inst, &layout, &elig, &order).matching;
        let slow = common::lexopt_brute_force(&EligibilityGraph::build(&inst, &layout, &elig), &order);
        ensure(fast == slow, || format!("seed {seed}: lexicographic optimum differs"))?;
    }
    Ok("10000 SD triples and 100 lexicographic matchings agree with enumeration".into())
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("golden walkthrough instance", golden_walkthrough),
        ("incompatibility of team-SD-EF1 and participant-justified EF", incompatibility),
        ("main algorithm fairness, balance and PO", main_properties),
        ("no blocking path in any iteration", trace_blocking_paths),
        ("slot values weakly increase", weakly_increasing_values),
        ("round-robin and deferred-acceptance reductions", reductions),
        ("strategyproofness for participants", strategyproofness),
        ("top-choice round-robin and auxiliary-instance guarantees", earlier_algorithms),
        ("extended setting", extended_setting),
        ("CLI determinism", determinism),
        ("oracle self-consistency", oracle_consistency),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2}: PASS  {name}: {detail} [{secs:.2}s]", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name}: {why} [{secs:.2}s]", k + 1);
            }
        }
    }
    let _ = std::fs::remove_dir_all(workdir());
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}


use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use fairmatch::engines::{self, TieBreak};
use fairmatch::extended;
use fairmatch::io::{self, AllocationDocument, InstanceDocument, ParsedInstance};
use fairmatch::matching::{PairOrder, SlotValue};
use fairmatch::model::{Allocation, ExtendedInstance, Instance, SlotLayout};
use fairmatch::oracle::{self, FuzzMode, Property};
use fairmatch::relations::PropertyReport;
use fairmatch::{Error, Result};

#[derive(Parser)]
#[command(name = "fairmatch", version, about = "Fair many-to-one matching under weak preferences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an allocation and check the properties the algorithm guarantees.
    Solve {
        #[arg(long, value_enum, default_value_t = Alg::Main)]
        alg: Alg,
        /// Include the per-iteration eligibility sets and matchings.
        #[arg(long)]
        trace: bool,
        /// `default` or `seeded:<seed>`.
        #[arg(long, default_value = "default")]
        pair_order: String,
        /// Team tie-break for the auxiliary algorithm: `index` or `seeded:<seed>`.
        #[arg(long, default_value = "index")]
        tie_break: String,
        file: PathBuf,
    },
    /// Check properties of a given allocation.
    Verify {
        #[arg(long, value_delimiter = ',', required = true)]
        props: Vec<String>,
        #[arg(long)]
        allocation: PathBuf,
        instance: PathBuf,
    },
    /// Print a random instance.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0.0)]
        tie_prob: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Produce an extended instance with quotas up to this value.
        #[arg(long)]
        max_quota: Option<usize>,
        #[arg(long, default_value_t = 0.0, requires = "max_quota")]
        unacceptable_prob: f64,
    },
    /// Brute-force queries.
    Oracle {
        #[command(subcommand)]
        query: OracleQuery,
    },
    /// Manipulation search.
    Fuzz {
        #[command(subcommand)]
        target: FuzzTarget,
    },
}

#[derive(Subcommand)]
enum OracleQuery {
    /// Find an allocation satisfying every listed property.
    Exists {
        #[arg(long, value_delimiter = ',', required = true)]
        props: Vec<String>,
        file: PathBuf,
    },
}

#[derive(Subcommand)]
enum FuzzTarget {
    /// Strategyproofness of the main algorithm for participants.
    Sp {
        #[arg(long, value_enum, default_value_t = Mode::Singleton)]
        mode: Mode,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        file: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Alg {
    RrTop,
    Auxiliary,
    Main,
    Extended,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Singleton,
    Group,
}

fn read_instance(path: &Path) -> Result<ParsedInstance> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))?;
    InstanceDocument::parse(&text)
}

fn base(parsed: ParsedInstance, what: &str) -> Result<Instance> {
    match parsed {
        ParsedInstance::Base(i) => Ok(i),
        ParsedInstance::Extended(_) => Err(Error::Domain(format!("{what} needs an instance without quotas"))),
    }
}

fn seeded(spec: &str, default_name: &str) -> Result<Option<u64>> {
    if spec == default_name {
        return Ok(None);
    }
    spec.strip_prefix("seeded:")
        .and_then(|s| s.parse().ok())
        .map(Some)
        .ok_or_else(|| Error::Domain(format!("expected `{default_name}` or `seeded:<seed>`, got `{spec}`")))
}

fn pair_order(spec: &str) -> Result<PairOrder> {
    Ok(seeded(spec, "default")?.map_or(PairOrder::ParticipantMajor, PairOrder::Seeded))
}

fn report_json(name: &str, r: &PropertyReport, names: &[String]) -> Value {
    json!({
        "property": name,
        "holds": r.holds,
        "witness": r.witness.as_ref().map(|w| json!({ "data": w, "description": w.describe(names) })),
    })
}

fn bundles_json(alloc: &Allocation, names: &[String]) -> Value {
    json!(AllocationDocument::from_allocation(alloc, names).bundles)
}

fn emit(text: &str) {
    // a closed pipe is not an error for a printing tool
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print(v: &impl Serialize) {
    emit(&serde_json::to_string_pretty(v).expect("output serializes"));
}

fn check_all(props: &[Property], inst: &Instance, alloc: &Allocation) -> Result<Vec<(String, PropertyReport)>> {
    let cap = oracle::enum_cap();
    props.iter().map(|p| Ok((p.name().to_string(), p.check(inst, alloc, cap)?))).collect()
}

fn extended_reports(ext: &ExtendedInstance, alloc: &Allocation, names: &[String]) -> Result<Vec<(String, PropertyReport)>> {
    let mut out = Vec::new();
    for name in names {
        let r = match name.as_str() {
            "stability" => extended::check_stability(ext, alloc)?,
            "extended-team-justified-sd-ef1" => extended::check_extended_team_justified_sd_ef1(ext, alloc)?,
            "quotas" => {
                extended::check_quotas(ext, alloc)?;
                PropertyReport::pass()
            }
            other => {
                return Err(Error::Domain(format!(
                    "unknown property `{other}` for an extended instance (expected stability, extended-team-justified-sd-ef1, quotas)"
                )))
            }
        };
        out.push((name.clone(), r));
    }
    Ok(out)
}

fn trace_json(out: &engines::MainOutcome, names: &[String]) -> Value {
    let layout: &SlotLayout = &out.layout;
    let steps: Vec<Value> = out
        .trace
        .iter()
        .enumerate()
        .map(|(k, step)| {
            let eligibility: Vec<Value> = step
                .eligibility
                .sets()
                .iter()
                .enumerate()
                .map(|(p, set)| json!({ "participant": names[p], "teams": set.iter().map(|t| t + 1).collect::<Vec<_>>() }))
                .collect();
            let matching: Vec<Value> = step
                .matching
                .pairs()
                .map(|(p, x)| json!({ "participant": names[p], "slot": layout.slot(x).to_string() }))
                .collect();
            let values: Vec<Value> = step
                .slot_values
                .iter()
                .enumerate()
                .map(|(x, v)| {
                    let v = match v {
                        SlotValue::Fixed(v) => json!(v),
                        _ => json!("-inf"),
                    };
                    json!({ "slot": layout.slot(x).to_string(), "value": v })
                })
                .collect();
            json!({ "iteration": k + 1, "eligibility": eligibility, "matching": matching, "slot_values": values })
        })
        .collect();
    json!(steps)
}

fn summarize(reports: &[(String, PropertyReport)], names: &[String]) -> (Vec<Value>, bool) {
    let ok = reports.iter().all(|(_, r)| r.holds);
    (reports.iter().map(|(n, r)| report_json(n, r, names)).collect(), ok)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve { alg, trace, pair_order: po, tie_break, file } => {
            let parsed = read_instance(&file)?;
            let po = pair_order(&po)?;
            let names = parsed.participants().to_vec();
            let mut out = serde_json::Map::new();
            let reports;
            match alg {
                Alg::Extended => {
                    let ParsedInstance::Extended(ext) = parsed else {
                        return Err(Error::Domain("--alg extended needs an instance with quotas".into()));
                    };
                    let alloc = extended::solve_extended(&ext, &po);
                    let assignment = alloc.assignment(ext.participant_count());
                    let unassigned: Vec<&String> = (0..names.len()).filter(|&p| assignment[p].is_none()).map(|p| &names[p]).collect();
                    out.insert("bundles".into(), bundles_json(&alloc, &names));
                    out.insert("unassigned".into(), json!(unassigned));
                    let props = ["quotas", "stability", "extended-team-justified-sd-ef1"].map(String::from);
                    reports = extended_reports(&ext, &alloc, &props)?;
                }
                Alg::RrTop | Alg::Auxiliary | Alg::Main => {
                    let inst = base(parsed, "this algorithm")?;
                    let (alloc, props) = match alg {
                        Alg::RrTop => (
                            engines::round_robin_top(&inst),
                            vec![Property::TeamJustifiedSdEf1, Property::ParticipantEf],
                        ),
                        Alg::Auxiliary => {
                            let tb = seeded(&tie_break, "index")?.map_or(TieBreak::ParticipantIndex, TieBreak::Seeded);
                            (
                                engines::auxiliary_gale_shapley(&inst, tb),
                                vec![Property::TeamJustifiedSdEf1, Property::ParticipantJustifiedEf, Property::Balanced],
                            )
                        }
                        _ => {
                            let result = engines::main_algorithm(&inst, &po);
                            if trace {
                                out.insert("trace".into(), trace_json(&result, &names));
                            }
                            (
                                result.allocation,
                                vec![
                                    Property::TeamJustifiedSdEf1,
                                    Property::ParticipantJustifiedEf,
                                    Property::Balanced,
                                    Property::Po,
                                ],
                            )
                        }
                    };
                    out.insert("bundles".into(), bundles_json(&alloc, &names));
                    reports = check_all(&props, &inst, &alloc)?;
                }
            }
            let (props, ok) = summarize(&reports, &names);
            out.insert("properties".into(), json!(props));
            print(&Value::Object(out));
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Verify { props, allocation, instance } => {
            let parsed = read_instance(&instance)?;
            let names = parsed.participants().to_vec();
            let text = std::fs::read_to_string(&allocation)
                .map_err(|e| Error::Domain(format!("cannot read {}: {e}", allocation.display())))?;
            let reports = match &parsed {
                ParsedInstance::Base(inst) => {
                    let alloc = AllocationDocument::parse(&text, &names, inst.team_count())?;
                    let props = props.iter().map(|p| p.parse()).collect::<Result<Vec<Property>>>()?;
                    check_all(&props, inst, &alloc)?
                }
                ParsedInstance::Extended(ext) => {
                    let alloc = AllocationDocument::parse(&text, &names, ext.team_count())?;
                    extended_reports(ext, &alloc, &props)?
                }
            };
            let (out, ok) = summarize(&reports, &names);
            print(&json!({ "properties": out }));
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Generate { n, m, tie_prob, seed, max_quota, unacceptable_prob } => {
            if n == 0 || m == 0 {
                return Err(Error::Domain("--n and --m must be positive".into()));
            }
            if !(0.0..=1.0).contains(&tie_prob) || !(0.0..=1.0).contains(&unacceptable_prob) {
                return Err(Error::Domain("probabilities must lie in [0, 1]".into()));
            }
            let doc = match max_quota {
                None => InstanceDocument::from_instance(&io::generate(n, m, tie_prob, seed)),
                Some(0) => return Err(Error::Domain("--max-quota must be positive".into())),
                Some(q) => {
                    InstanceDocument::from_extended(&io::generate_extended(n, m, tie_prob, q, unacceptable_prob, seed))
                }
            };
            emit(&doc.to_json());
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { query: OracleQuery::Exists { props, file } } => {
            let inst = base(read_instance(&file)?, "oracle exists")?;
            let props = props.iter().map(|p| p.parse()).collect::<Result<Vec<Property>>>()?;
            let found = oracle::exists_allocation_satisfying(&inst, &props, oracle::enum_cap())?;
            let names = inst.participants();
            print(&json!({
                "properties": props.iter().map(|p| p.name()).collect::<Vec<_>>(),
                "found": found.as_ref().map(|a| bundles_json(a, names)),
            }));
            Ok(if found.is_some() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Fuzz { target: FuzzTarget::Sp { mode, trials, seed, file } } => {
            let inst = base(read_instance(&file)?, "fuzz sp")?;
            let mode = match mode {
                Mode::Singleton => FuzzMode::SingletonExhaustive,
                Mode::Group => FuzzMode::GroupRandom,
            };
            let report = oracle::strategyproofness_fuzz(&inst, mode, trials, seed, oracle::enum_cap())?;
            print(&report);
            Ok(if report.successes.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

//! Command-line front end: solve instances, validate schedules, run the
//! brute-force oracles, and generate gadget or random instances.
//!
//! Reports are JSON on stdout with numeric fields rounded to 12 significant
//! digits so diffs across runs stay stable. Exit codes: 0 success, 1 failed
//! validation or runtime error, 2 usage error.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use drone_delivery::generators::eop::{gen_eop, EopInput};
use drone_delivery::generators::random::{gen_random, Family, RandomParams};
use drone_delivery::generators::three_dm::{gen_3dm_ddc, gen_3dm_ddt, ThreeDm};
use drone_delivery::generators::GadgetCertificate;
use drone_delivery::instance::Handover;
use drone_delivery::oracle::{exact_multi_copy_paths, exact_single_copy, edge_handover_subdivision, OracleGuard};
use drone_delivery::schedule::{check_feasible, evaluate};
use drone_delivery::{ddc, ddt, CopyMode, Instance, Objective, Schedule};

#[derive(Parser)]
#[command(name = "drone-delivery", version, about = "Collaborative delivery with range-restricted agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Problem {
    Ddt,
    Ddc,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Multi,
    Single,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HandoverArg {
    Node,
    Edge,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Want {
    Yes,
    No,
    Any,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance for delivery time or energy.
    Solve {
        #[arg(long, value_enum)]
        problem: Problem,
        /// multi: optimal with agent copies; single: compacted one-copy schedule.
        #[arg(long, value_enum, default_value = "single")]
        mode: Mode,
        #[arg(long = "in")]
        input: PathBuf,
        /// Write the solved schedule here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the instance's handover manner.
        #[arg(long, value_enum)]
        handover: Option<HandoverArg>,
    },
    /// Check a schedule file against an instance.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long, value_enum, default_value = "single")]
        copy_mode: Mode,
    },
    /// Run the guarded brute-force oracles.
    Oracle {
        #[arg(long, value_enum)]
        problem: Problem,
        #[arg(long = "in")]
        input: PathBuf,
        /// Lift the size guards (exponential searches!).
        #[arg(long)]
        guard_override: bool,
        /// Also run the interior-handover subdivision oracle with this many
        /// parts per edge.
        #[arg(long)]
        subdivide: Option<usize>,
    },
    /// Generate an instance (and certificate schedule when one is known).
    #[command(subcommand)]
    Gen(GenCommand),
    /// Solve with every applicable method and report all values.
    Compare {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        guard_override: bool,
    },
}

#[derive(Args)]
struct GenOut {
    /// Instance output path; a known solution goes to `<stem>.cert.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Delivery-time gadget from a 3-dimensional matching input.
    #[command(name = "3dm-ddt")]
    ThreeDmDdt {
        #[arg(long)]
        n: usize,
        /// Explicit triples like "1,1,1;2,2,2" (1-based element indices).
        #[arg(long)]
        triples: Option<String>,
        /// With --want: number of random triples to draw.
        #[arg(long)]
        m: Option<usize>,
        /// Draw random triple sets until the label matches (needs tiny n).
        #[arg(long, value_enum)]
        want: Option<Want>,
        /// Number of concatenated gadget copies.
        #[arg(long, default_value_t = 1)]
        q: usize,
        /// Length of the approach (outer) edges.
        #[arg(long, default_value_t = 1.0)]
        outer_len: f64,
        /// Length of the lane (inner) edges, normally zero.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: GenOut,
    },
    /// Energy gadget from a 3-dimensional matching input.
    #[command(name = "3dm-ddc")]
    ThreeDmDdc {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        triples: Option<String>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, value_enum)]
        want: Option<Want>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: GenOut,
    },
    /// Path gadget from an even-odd partition input.
    Eop {
        /// The 2n positive integers, comma separated.
        #[arg(long)]
        values: String,
        #[command(flatten)]
        out: GenOut,
    },
    /// Seeded random instance.
    Random {
        #[arg(long, default_value_t = 8)]
        nodes: usize,
        #[arg(long, default_value_t = 4)]
        agents: usize,
        /// path | tree | general
        #[arg(long, default_value = "general")]
        family: String,
        /// Comma-separated speed choices; one value gives equal speeds.
        #[arg(long)]
        speeds: Option<String>,
        #[arg(long)]
        rates: Option<String>,
        #[arg(long, value_enum, default_value = "node")]
        handover: HandoverArg,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: GenOut,
    },
}

/// Round to 12 significant digits for stable report diffs.
fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let exp = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(11 - exp);
    (x * scale).round() / scale
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    instance_digest: String,
    objective: String,
    handover: String,
    multi_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    single_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_single: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_multi_paths: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
    ratio_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    wall_ms: u128,
}

fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Instance::parse(&text).with_context(|| format!("loading {}", path.display()))
}

fn env_seed() -> Option<u64> {
    std::env::var("DD_SEED").ok().and_then(|s| s.parse().ok())
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|part| part.trim().parse::<T>().map_err(|_| anyhow!("invalid {what} entry {part:?}")))
        .collect()
}

fn parse_triples(text: &str) -> Result<Vec<[usize; 3]>> {
    text.split(';')
        .map(|t| {
            let parts: Vec<usize> = parse_list(t, "triple")?;
            if parts.len() != 3 {
                return Err(anyhow!("triple {t:?} does not have three entries"));
            }
            Ok([parts[0], parts[1], parts[2]])
        })
        .collect()
}

fn solve_value(inst: &Instance, problem: Problem) -> (Schedule, f64) {
    match problem {
        Problem::Ddt => {
            let sol = ddt::solve_ddt_multi(inst);
            (sol.schedule, sol.time)
        }
        Problem::Ddc => {
            let sol = ddc::solve_ddc_multi(inst);
            (sol.schedule, sol.energy)
        }
    }
}

fn compact_value(inst: &Instance, problem: Problem, multi: &Schedule) -> Result<(Schedule, f64)> {
    match problem {
        Problem::Ddt => {
            let sol = ddt::compact_ddt(inst, multi)?;
            Ok((sol.schedule, sol.time))
        }
        Problem::Ddc => {
            let sol = ddc::compact_ddc(inst, multi)?;
            Ok((sol.schedule, sol.energy))
        }
    }
}

fn ratio_bound(inst: &Instance, problem: Problem) -> f64 {
    match problem {
        Problem::Ddt => ddt::compaction_ratio_bound(inst),
        Problem::Ddc => 2.0,
    }
}

fn objective_of(problem: Problem) -> Objective {
    match problem {
        Problem::Ddt => Objective::Time,
        Problem::Ddc => Objective::Energy,
    }
}

fn handover_name(h: Handover) -> &'static str {
    match h {
        Handover::Node => "node",
        Handover::Edge => "edge",
    }
}

fn report_for(
    inst: &Instance,
    problem: Problem,
    command: String,
    mode: Mode,
    guard: Option<OracleGuard>,
) -> Result<(RunReport, Schedule)> {
    let start = Instant::now();
    let (multi_schedule, multi_value) = solve_value(inst, problem);
    let (emitted, single_value) = match mode {
        Mode::Multi => (multi_schedule, None),
        Mode::Single => {
            let (schedule, value) = compact_value(inst, problem, &multi_schedule)?;
            (schedule, Some(value))
        }
    };
    let objective = objective_of(problem);
    let (oracle_single, oracle_multi_paths) = match guard {
        None => (None, None),
        Some(guard) => (
            exact_single_copy(inst, objective, guard).ok().map(|r| r.value),
            exact_multi_copy_paths(inst, objective, guard).ok().map(|r| r.value),
        ),
    };
    let report = RunReport {
        command,
        instance_digest: inst.digest(),
        objective: objective.to_string(),
        handover: handover_name(inst.handover()).to_string(),
        multi_value: sig12(multi_value),
        single_value: single_value.map(sig12),
        oracle_single: oracle_single.map(sig12),
        oracle_multi_paths: oracle_multi_paths.map(sig12),
        ratio: single_value.map(|s| sig12(s / multi_value)),
        ratio_bound: sig12(ratio_bound(inst, problem)),
        seed: None,
        wall_ms: start.elapsed().as_millis(),
    };
    Ok((report, emitted))
}

fn write_certificate(inst: &Instance, cert: &Option<GadgetCertificate>, out: &Path) -> Result<Option<PathBuf>> {
    let Some(cert) = cert else { return Ok(None) };
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
    let path = out.with_file_name(format!("{stem}.cert.json"));
    std::fs::write(&path, cert.schedule.to_json(inst)).with_context(|| format!("writing {}", path.display()))?;
    Ok(Some(path))
}

#[derive(Serialize)]
struct GenReport {
    instance: String,
    digest: String,
    nodes: usize,
    edges: usize,
    agents: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

fn emit_generated(
    inst: &Instance,
    cert: &Option<GadgetCertificate>,
    out: &Path,
    seed: Option<u64>,
) -> Result<()> {
    std::fs::write(out, inst.to_json()).with_context(|| format!("writing {}", out.display()))?;
    let cert_path = write_certificate(inst, cert, out)?;
    let report = GenReport {
        instance: out.display().to_string(),
        digest: inst.digest(),
        nodes: inst.node_count(),
        edges: inst.edge_count(),
        agents: inst.agent_count(),
        certificate: cert_path.map(|p| p.display().to_string()),
        certificate_value: cert.as_ref().map(|c| sig12(c.value)),
        seed,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

/// Draw random triple sets until the matching label asked for comes up.
fn random_three_dm(n: usize, m: usize, want: Want, seed: u64) -> Result<ThreeDm> {
    if n > 4 && want != Want::Any {
        return Err(anyhow!("certified yes/no labeling is limited to n <= 4"));
    }
    // Small deterministic linear congruential stream; good enough to vary
    // the candidate triple sets.
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = |bound: usize| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 33) as usize) % bound
    };
    for _ in 0..10_000 {
        let triples: Vec<[usize; 3]> = (0..m).map(|_| [next(n) + 1, next(n) + 1, next(n) + 1]).collect();
        let Ok(dm) = ThreeDm::new(n, triples) else { continue };
        let ok = match want {
            Want::Any => true,
            Want::Yes => dm.is_yes_instance(),
            Want::No => !dm.is_yes_instance(),
        };
        if ok {
            return Ok(dm);
        }
    }
    Err(anyhow!("no {}-instance found after 10000 draws; adjust n/m", match want {
        Want::Yes => "yes",
        Want::No => "no",
        Want::Any => "any",
    }))
}

fn build_three_dm(
    n: usize,
    triples: &Option<String>,
    m: Option<usize>,
    want: Option<Want>,
    seed: Option<u64>,
) -> Result<(ThreeDm, Option<u64>)> {
    match (triples, want) {
        (Some(text), None) => Ok((ThreeDm::new(n, parse_triples(text)?)?, None)),
        (None, Some(want)) => {
            let seed = seed.or_else(env_seed).unwrap_or(0);
            let m = m.unwrap_or(2 * n);
            Ok((random_three_dm(n, m, want, seed)?, Some(seed)))
        }
        _ => Err(anyhow!("pass either --triples or --want (with optional --m/--seed)")),
    }
}

fn run() -> Result<i32> {
    let cli = Cli::parse();
    let command_echo = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    match cli.command {
        Command::Solve { problem, mode, input, out, handover } => {
            let mut inst = load_instance(&input)?;
            if let Some(h) = handover {
                inst = inst.with_handover(match h {
                    HandoverArg::Node => Handover::Node,
                    HandoverArg::Edge => Handover::Edge,
                });
            }
            let (report, schedule) = report_for(&inst, problem, command_echo, mode, None)?;
            if let Some(out) = out {
                std::fs::write(&out, schedule.to_json(&inst)).with_context(|| format!("writing {}", out.display()))?;
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(0)
        }
        Command::Validate { input, schedule, copy_mode } => {
            let inst = load_instance(&input)?;
            let text = std::fs::read_to_string(&schedule).with_context(|| format!("reading {}", schedule.display()))?;
            let sched = Schedule::parse(&inst, &text).with_context(|| format!("parsing {}", schedule.display()))?;
            let mode = match copy_mode {
                Mode::Multi => CopyMode::Multi,
                Mode::Single => CopyMode::Single,
            };
            let report = check_feasible(&inst, &sched, mode);
            #[derive(Serialize)]
            struct ValidateReport<'a> {
                feasible: bool,
                violations: &'a [drone_delivery::schedule::Violation],
                #[serde(skip_serializing_if = "Option::is_none")]
                evaluation: Option<drone_delivery::Evaluation>,
            }
            let evaluation = if report.feasible { evaluate(&inst, &sched).ok() } else { None };
            let out = ValidateReport { feasible: report.feasible, violations: &report.violations, evaluation };
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(if report.feasible { 0 } else { 1 })
        }
        Command::Oracle { problem, input, guard_override, subdivide } => {
            let inst = load_instance(&input)?;
            let guard = if guard_override { OracleGuard::unlimited() } else { OracleGuard::default() };
            let objective = objective_of(problem);
            #[derive(Serialize)]
            struct OracleReport {
                value: f64,
                explored: usize,
                expanded: usize,
            }
            #[derive(Serialize)]
            struct Out {
                instance_digest: String,
                objective: String,
                single_copy: OracleReport,
                multi_copy_paths: OracleReport,
                #[serde(skip_serializing_if = "Option::is_none")]
                subdivision: Option<OracleReport>,
            }
            let single = exact_single_copy(&inst, objective, guard)?;
            let multi = exact_multi_copy_paths(&inst, objective, guard)?;
            let subdivision = match subdivide {
                None => None,
                Some(q) => {
                    let sub = edge_handover_subdivision(&inst, q, objective, guard)?;
                    Some(OracleReport {
                        value: sig12(sub.result.value),
                        explored: sub.result.explored,
                        expanded: sub.result.expanded,
                    })
                }
            };
            let out = Out {
                instance_digest: inst.digest(),
                objective: objective.to_string(),
                single_copy: OracleReport { value: sig12(single.value), explored: single.explored, expanded: single.expanded },
                multi_copy_paths: OracleReport { value: sig12(multi.value), explored: multi.explored, expanded: multi.expanded },
                subdivision,
            };
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(0)
        }
        Command::Gen(what) => {
            match what {
                GenCommand::ThreeDmDdt { n, triples, m, want, q, outer_len, epsilon, seed, out } => {
                    let (dm, used_seed) = build_three_dm(n, &triples, m, want, seed)?;
                    let g = gen_3dm_ddt(&dm, q, outer_len, epsilon)?;
                    emit_generated(&g.instance, &g.certificate, &out.out, used_seed)?;
                }
                GenCommand::ThreeDmDdc { n, triples, m, want, seed, out } => {
                    let (dm, used_seed) = build_three_dm(n, &triples, m, want, seed)?;
                    let g = gen_3dm_ddc(&dm)?;
                    emit_generated(&g.instance, &g.certificate, &out.out, used_seed)?;
                }
                GenCommand::Eop { values, out } => {
                    let input = EopInput::new(parse_list(&values, "value")?)?;
                    let g = gen_eop(&input)?;
                    emit_generated(&g.instance, &g.certificate, &out.out, None)?;
                }
                GenCommand::Random { nodes, agents, family, speeds, rates, handover, seed, out } => {
                    let mut params = RandomParams {
                        nodes,
                        agents,
                        family: family.parse::<Family>().map_err(|e| anyhow!(e))?,
                        handover: match handover {
                            HandoverArg::Node => Handover::Node,
                            HandoverArg::Edge => Handover::Edge,
                        },
                        ..RandomParams::default()
                    };
                    if let Some(s) = speeds {
                        params.speed_choices = parse_list(&s, "speed")?;
                    }
                    if let Some(r) = rates {
                        params.rate_choices = parse_list(&r, "rate")?;
                    }
                    let seed = seed.or_else(env_seed).unwrap_or(0);
                    let inst = gen_random(&params, seed)?;
                    emit_generated(&inst, &None, &out.out, Some(seed))?;
                }
            }
            Ok(0)
        }
        Command::Compare { input, guard_override } => {
            let inst = load_instance(&input)?;
            let guard = if guard_override {
                Some(OracleGuard::unlimited())
            } else {
                Some(OracleGuard::default())
            };
            let (ddt_report, _) = report_for(&inst, Problem::Ddt, command_echo.clone(), Mode::Single, guard)?;
            let (ddc_report, _) = report_for(&inst, Problem::Ddc, command_echo, Mode::Single, guard)?;
            #[derive(Serialize)]
            struct CompareReport {
                ddt: RunReport,
                ddc: RunReport,
            }
            println!("{}", serde_json::to_string_pretty(&CompareReport { ddt: ddt_report, ddc: ddc_report })?);
            Ok(0)
        }
    }
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}

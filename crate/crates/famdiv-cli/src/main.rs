//! The `famdiv` command: check divisions, run the solvers, consult the
//! adversary, certify lower bounds, and draw allocations.
//!
//! Subcommands:
//!
//! * `check` — judge an allocation file against a fairness criterion;
//!   exit 0 iff satisfied.
//! * `solve` — run the protocol for a criterion and write the division,
//!   a re-checked fairness report, and a summary.
//! * `exact` — exact division (or, with `--epsilon`, consensus
//!   splitting) of an instance's measures, families ignored.
//! * `adversary` — replay a scripted or random protocol against the
//!   adversarial oracle and emit its safety certificate.
//! * `lower-bound` — exhaustively certify the component lower bound at
//!   a desk-scale shape.
//! * `render` — draw an allocation as a deterministic SVG strip chart.
//!
//! Artifacts go to `--output-dir` (or `$FAMDIV_OUTPUT_DIR`, or `.`).
//! Every number in every document is an exact rational — an integer
//! where possible, a `"p/q"` string otherwise. Exit status is decided
//! by re-checking outputs, never by trusting a solver: 0 means
//! verified satisfied, 1 means verified unsatisfied, 2 means the
//! command could not run.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use famdiv::exact::{
    solve_consensus_split, solve_exact, verify_exact, ExactDivisionProblem, ExactReport,
};
use famdiv::fairness::{
    check_average_ef_within, check_democratic_ef, check_proportional, check_unanimous_ef,
    Criterion, FairnessReport, ProportionalVariant,
};
use famdiv::hardness::{verify_component_bound, BoundCheck, HardnessError};
use famdiv::instance::{Allocation, Instance};
use famdiv::io;
use famdiv::measure::StepMeasure;
use famdiv::protocols::{
    average_ef_connected, democratic_general, democratic_two_families, unanimous_ef_divide,
};
use famdiv::query::{
    run_protocol, transcript_consistent, AdversaryOracle, Answer, Query, RandomProtocol,
    ScriptedProtocol, Transcript,
};
use famdiv::rational::{int, parse_rational, rat, Rational};
use famdiv::render::render_allocation;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "famdiv", version, about = "Fair division among families", long_about = None)]
struct Cli {
    /// Seed for randomized runs; recorded in every summary document.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for output artifacts (default: $FAMDIV_OUTPUT_DIR, then ".").
    #[arg(long, global = true, value_name = "DIR")]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an allocation against a fairness criterion.
    Check(CheckArgs),
    /// Run the protocol for a criterion and write the verified division.
    Solve(SolveArgs),
    /// Exact division or consensus splitting (families ignored).
    Exact(ExactArgs),
    /// Run a protocol against the adversarial oracle.
    Adversary(AdversaryArgs),
    /// Certify a component lower bound by exhaustive search.
    LowerBound(LowerBoundArgs),
    /// Draw an allocation as an SVG strip chart.
    Render(RenderArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Instance file (JSON).
    #[arg(long, value_name = "FILE")]
    instance: PathBuf,
    /// Allocation file (JSON).
    #[arg(long, value_name = "FILE")]
    allocation: PathBuf,
    /// One of: average-envy-free, democratic-envy-free,
    /// unanimous-envy-free, average-proportional,
    /// democratic-proportional, unanimous-proportional
    /// (or the shorthands average, democratic, unanimous).
    #[arg(long, value_name = "NAME")]
    criterion: String,
    /// Rescale every member to total value 1 before averaging.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file (JSON).
    #[arg(long, value_name = "FILE")]
    instance: PathBuf,
    /// Which guarantee to aim for.
    #[arg(long, value_enum)]
    criterion: SolveCriterion,
    /// Tolerance for the connected average solver (default 1/100).
    #[arg(long, value_name = "P/Q")]
    epsilon: Option<String>,
    /// Average over normalized member measures.
    #[arg(long)]
    normalize: bool,
    /// Also write an SVG strip chart of the division.
    #[arg(long)]
    svg: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolveCriterion {
    Average,
    Democratic,
    Unanimous,
}

#[derive(Args)]
struct ExactArgs {
    /// Instance file (JSON); each agent's measure is a constraint.
    #[arg(long, value_name = "FILE")]
    instance: PathBuf,
    /// Number of pieces.
    #[arg(long, value_name = "K")]
    pieces: usize,
    /// Cap on total interval components (error if infeasible).
    #[arg(long, value_name = "C")]
    budget: Option<usize>,
    /// Switch to consensus splitting at this tolerance (pieces must be 2).
    #[arg(long, value_name = "P/Q")]
    epsilon: Option<String>,
}

#[derive(Args)]
struct AdversaryArgs {
    /// Number of random queries (ignored when --script is given).
    #[arg(long, default_value_t = 20, value_name = "M")]
    steps: usize,
    /// JSON script of queries to replay instead of the random protocol.
    #[arg(long, value_name = "FILE")]
    script: Option<PathBuf>,
    /// Brute-force the subset sums when at most this many cells exist.
    #[arg(long, default_value_t = 16, value_name = "N")]
    enumeration_cap: usize,
}

#[derive(Args)]
struct LowerBoundArgs {
    /// Number of families.
    #[arg(long)]
    k: usize,
    /// Members per family.
    #[arg(long)]
    m: usize,
    /// How many members of each family must receive positive value.
    #[arg(long)]
    q: usize,
    /// Raise the exhaustive-search cell cap (hard ceiling 16).
    #[arg(long, value_name = "N")]
    exhaustive_limit: Option<usize>,
}

#[derive(Args)]
struct RenderArgs {
    /// Instance file (JSON).
    #[arg(long, value_name = "FILE")]
    instance: PathBuf,
    /// Allocation file (JSON).
    #[arg(long, value_name = "FILE")]
    allocation: PathBuf,
    /// Output path (default: <output-dir>/render.svg).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let out_dir = cli
        .output_dir
        .clone()
        .or_else(|| std::env::var_os("FAMDIV_OUTPUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    match &cli.command {
        Command::Check(args) => cmd_check(args, &out_dir, cli.seed),
        Command::Solve(args) => cmd_solve(args, &out_dir, cli.seed),
        Command::Exact(args) => cmd_exact(args, &out_dir, cli.seed),
        Command::Adversary(args) => cmd_adversary(args, &out_dir, cli.seed),
        Command::LowerBound(args) => cmd_lower_bound(args, &out_dir, cli.seed),
        Command::Render(args) => cmd_render(args, &out_dir),
    }
}

// ---------------------------------------------------------------- check

fn cmd_check(args: &CheckArgs, out_dir: &Path, _seed: u64) -> Result<bool> {
    let instance = load_instance(&args.instance)?;
    let allocation = load_allocation(&args.allocation, &instance)?;
    let criterion = criterion_by_name(&args.criterion)?;
    if args.normalize
        && matches!(
            criterion,
            Criterion::DemocraticEnvyFree | Criterion::UnanimousEnvyFree
        )
    {
        bail!(
            "the {criterion} check compares each member's own values; --normalize does not apply"
        );
    }
    let report = run_checker(&instance, &allocation, criterion, args.normalize)?;
    let path = write_artifact(out_dir, "check-report.json", &io::serialize_report(&report))?;
    describe_report(&report);
    println!("report: {}", path.display());
    Ok(report.satisfied)
}

fn criterion_by_name(name: &str) -> Result<Criterion> {
    Ok(match name {
        "average-envy-free" | "average" => Criterion::AverageEnvyFree,
        "democratic-envy-free" | "democratic" => Criterion::DemocraticEnvyFree,
        "unanimous-envy-free" | "unanimous" => Criterion::UnanimousEnvyFree,
        "average-proportional" => Criterion::AverageProportional,
        "democratic-proportional" => Criterion::DemocraticProportional,
        "unanimous-proportional" => Criterion::UnanimousProportional,
        other => bail!(
            "unknown criterion {other:?}; expected one of average-envy-free, \
             democratic-envy-free, unanimous-envy-free, average-proportional, \
             democratic-proportional, unanimous-proportional"
        ),
    })
}

fn run_checker(
    instance: &Instance,
    allocation: &Allocation,
    criterion: Criterion,
    normalize: bool,
) -> Result<FairnessReport> {
    let report = match criterion {
        Criterion::AverageEnvyFree => {
            check_average_ef_within(instance, allocation, normalize, int(0))?
        }
        Criterion::DemocraticEnvyFree => check_democratic_ef(instance, allocation)?,
        Criterion::UnanimousEnvyFree => check_unanimous_ef(instance, allocation)?,
        Criterion::AverageProportional => check_proportional(
            instance,
            allocation,
            ProportionalVariant::Average,
            normalize,
        )?,
        Criterion::DemocraticProportional => check_proportional(
            instance,
            allocation,
            ProportionalVariant::Democratic,
            normalize,
        )?,
        Criterion::UnanimousProportional => check_proportional(
            instance,
            allocation,
            ProportionalVariant::Unanimous,
            normalize,
        )?,
    };
    Ok(report)
}

fn describe_report(report: &FairnessReport) {
    if report.satisfied {
        println!("{}: satisfied", report.criterion);
    } else {
        let objectors: Vec<&str> = report
            .dissatisfied_agents()
            .map(|v| v.agent_id.as_str())
            .collect();
        let families: Vec<&str> = report
            .families
            .iter()
            .filter(|f| !f.satisfied)
            .map(|f| f.family_id.as_str())
            .collect();
        println!(
            "{}: violated (families: {}; dissatisfied members: {})",
            report.criterion,
            families.join(", "),
            if objectors.is_empty() {
                "none".to_owned()
            } else {
                objectors.join(", ")
            }
        );
    }
}

// ---------------------------------------------------------------- solve

fn cmd_solve(args: &SolveArgs, out_dir: &Path, seed: u64) -> Result<bool> {
    let instance = load_instance(&args.instance)?;
    if args.epsilon.is_some() && args.criterion != SolveCriterion::Average {
        bail!("--epsilon only applies to --criterion average");
    }
    if args.normalize && args.criterion != SolveCriterion::Average {
        bail!("--normalize only applies to --criterion average");
    }

    let (allocation, report, mut summary) = match args.criterion {
        SolveCriterion::Average => {
            let epsilon = match &args.epsilon {
                Some(text) => {
                    parse_rational(text).with_context(|| format!("parsing --epsilon {text:?}"))?
                }
                None => rat(1, 100),
            };
            // The solver always targets raw averages; normalization is a
            // change of input, so hand it a rescaled copy of the instance.
            let solving = if args.normalize {
                normalized_copy(&instance)?
            } else {
                instance.clone()
            };
            let division = average_ef_connected(&solving, &epsilon)?;
            let report = check_average_ef_within(
                &instance,
                &division.allocation,
                args.normalize,
                epsilon.clone(),
            )?;
            let summary = json!({
                "criterion": "average-envy-free",
                "epsilon": json_rat(&epsilon),
                "normalize": args.normalize,
                "cuts": rats(&division.cuts),
            });
            (division.allocation, report, summary)
        }
        SolveCriterion::Democratic => {
            if instance.family_count() == 2 {
                let split = democratic_two_families(&instance)?;
                let report = check_democratic_ef(&instance, &split.allocation)?;
                let summary = json!({
                    "criterion": "democratic-envy-free",
                    "protocol": "two-families",
                    "medians": [json_rat(&split.medians[0]), json_rat(&split.medians[1])],
                    "midpoint": json_rat(&split.midpoint),
                    "queries": split.queries,
                });
                (split.allocation, report, summary)
            } else {
                let division = democratic_general(&instance)?;
                let report = check_democratic_ef(&instance, &division.allocation)?;
                let summary = json!({
                    "criterion": "democratic-envy-free",
                    "protocol": "general",
                    "selected": division.selected,
                    "chooser": division.chooser,
                });
                (division.allocation, report, summary)
            }
        }
        SolveCriterion::Unanimous => {
            let division = unanimous_ef_divide(&instance)?;
            let report = check_unanimous_ef(&instance, &division.allocation)?;
            let summary = json!({
                "criterion": "unanimous-envy-free",
                "chooser": division.chooser,
            });
            (division.allocation, report, summary)
        }
    };

    let doc = summary.as_object_mut().expect("summary is an object");
    doc.insert("command".into(), json!("solve"));
    doc.insert("seed".into(), json!(seed));
    doc.insert("components".into(), json!(allocation.component_count()));
    doc.insert("satisfied".into(), json!(report.satisfied));

    let alloc_path = write_artifact(
        out_dir,
        "solve-allocation.json",
        &io::serialize_allocation(&allocation),
    )?;
    let report_path = write_artifact(out_dir, "solve-report.json", &io::serialize_report(&report))?;
    let summary_path = write_artifact(out_dir, "solve-summary.json", &pretty(&summary))?;
    describe_report(&report);
    println!("components: {}", allocation.component_count());
    println!("allocation: {}", alloc_path.display());
    println!("report: {}", report_path.display());
    println!("summary: {}", summary_path.display());
    if args.svg {
        let svg = render_allocation(&instance, &allocation);
        let svg_path = write_artifact(out_dir, "solve-allocation.svg", &svg)?;
        println!("svg: {}", svg_path.display());
    }
    Ok(report.satisfied)
}

/// The same agents and families with every measure rescaled to total 1.
fn normalized_copy(instance: &Instance) -> Result<Instance> {
    let mut rows = Vec::with_capacity(instance.agent_count());
    for (i, agent) in instance.agents().iter().enumerate() {
        let family = instance.families()[instance.family_of(i)].id.clone();
        let measure = agent.measure.normalized().with_context(|| {
            format!(
                "agent {:?} values the whole cake at zero; --normalize needs positive totals",
                agent.id
            )
        })?;
        rows.push((agent.id.clone(), family, measure));
    }
    Ok(Instance::from_rows(instance.cake().clone(), rows)?)
}

// ---------------------------------------------------------------- exact

fn cmd_exact(args: &ExactArgs, out_dir: &Path, seed: u64) -> Result<bool> {
    let instance = load_instance(&args.instance)?;
    let measures: Vec<StepMeasure> = instance
        .agents()
        .iter()
        .map(|a| a.measure.clone())
        .collect();
    let problem = ExactDivisionProblem {
        cake: instance.cake().clone(),
        measures,
        pieces: args.pieces,
        max_components: args.budget,
    };

    if let Some(text) = &args.epsilon {
        if args.pieces != 2 {
            bail!("consensus splitting always makes 2 pieces; drop --epsilon or set --pieces 2");
        }
        if args.budget.is_some() {
            bail!("--budget only applies to exact division, not consensus splitting");
        }
        let epsilon =
            parse_rational(text).with_context(|| format!("parsing --epsilon {text:?}"))?;
        let split = solve_consensus_split(&problem.cake, &problem.measures, &epsilon)?;
        // Re-check the contract from scratch: the audit recomputes the
        // piece values, and the normalized deviation must be within
        // epsilon for every agent with a nonzero total.
        let audit = verify_exact(&problem, &split.allocation)?;
        let (worst, satisfied) = consensus_deviation(&problem.measures, &audit, &epsilon);
        let summary = json!({
            "command": "exact",
            "mode": "consensus",
            "seed": seed,
            "epsilon": json_rat(&epsilon),
            "pieces": 2,
            "chunk_count": split.chunk_count,
            "max_normalized_deviation": json_rat(&worst),
            "satisfied": satisfied,
        });
        let alloc_path = write_artifact(
            out_dir,
            "exact-allocation.json",
            &io::serialize_allocation(&split.allocation),
        )?;
        let summary_path = write_artifact(out_dir, "exact-summary.json", &pretty(&summary))?;
        println!(
            "consensus split: max normalized deviation {worst} {} {epsilon}",
            if satisfied { "<=" } else { ">" }
        );
        println!("allocation: {}", alloc_path.display());
        println!("summary: {}", summary_path.display());
        return Ok(satisfied);
    }

    let solution = solve_exact(&problem)?;
    let report = verify_exact(&problem, &solution.allocation)?;
    let summary = json!({
        "command": "exact",
        "mode": "exact",
        "seed": seed,
        "pieces": args.pieces,
        "cuts": rats(&solution.cuts),
        "labels": solution.labels,
        "components": solution.components,
        "effective_measures": solution.effective_measures,
        "piece_values": report.piece_values.iter().map(|row| rats(row)).collect::<Vec<_>>(),
        "targets": rats(&report.targets),
        "exact": report.exact,
    });
    let alloc_path = write_artifact(
        out_dir,
        "exact-allocation.json",
        &io::serialize_allocation(&solution.allocation),
    )?;
    let summary_path = write_artifact(out_dir, "exact-summary.json", &pretty(&summary))?;
    println!(
        "exact division: {} pieces, {} components, audit {}",
        args.pieces,
        solution.components,
        if report.exact { "exact" } else { "INEXACT" }
    );
    println!("allocation: {}", alloc_path.display());
    println!("summary: {}", summary_path.display());
    Ok(report.exact)
}

/// Largest `|value/total - 1/2|` over piece 0, and whether all stay
/// within epsilon.
fn consensus_deviation(
    measures: &[StepMeasure],
    audit: &ExactReport,
    epsilon: &Rational,
) -> (Rational, bool) {
    let half = rat(1, 2);
    let mut worst = int(0);
    for (m, values) in measures.iter().zip(&audit.piece_values) {
        let total = m.total();
        if total == int(0) {
            continue;
        }
        let mut deviation = &values[0] / &total - &half;
        if deviation < int(0) {
            deviation = -deviation;
        }
        if deviation > worst {
            worst = deviation;
        }
    }
    let satisfied = worst <= *epsilon;
    (worst, satisfied)
}

// ------------------------------------------------------------ adversary

fn cmd_adversary(args: &AdversaryArgs, out_dir: &Path, seed: u64) -> Result<bool> {
    let mut adversary = AdversaryOracle::new();
    let (transcript, scripted) = match &args.script {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let queries =
                parse_script(&text).with_context(|| format!("parsing {}", path.display()))?;
            let protocol = ScriptedProtocol { queries };
            let (_, transcript) = run_protocol(&protocol, &mut adversary, None)?;
            (transcript, true)
        }
        None => {
            let protocol = RandomProtocol {
                queries: args.steps,
                seed,
            };
            let (_, transcript) = run_protocol(&protocol, &mut adversary, Some(args.steps))?;
            (transcript, false)
        }
    };

    let certificate = adversary.certify(args.enumeration_cap);
    let measures = adversary.materialize();
    let consistent = transcript_consistent(&measures, &transcript);
    let safe = certificate.safe && consistent;

    let mut doc = json!({
        "command": "adversary",
        "seed": seed,
        "scripted": scripted,
        "queries": transcript.query_count(),
        "cells": certificate.cells,
        "unit": json_rat(&certificate.unit),
        "exponent": certificate.exponent,
        "weight_multiples": certificate
            .weight_multiples
            .iter()
            .map(|m| json_rat(&Rational::from_integer(m.clone())))
            .collect::<Vec<_>>(),
        "lattice_valid": certificate.lattice_valid,
        "enumerated": certificate.enumerated,
        "transcript_consistent": consistent,
        "safe": safe,
    });
    if certificate.cells <= args.enumeration_cap {
        let sums = reachable_sums(&certificate);
        let one = int(1);
        let below = sums.iter().filter(|s| **s < one).next_back();
        let above = sums.iter().find(|s| **s > one);
        let object = doc.as_object_mut().expect("doc is an object");
        object.insert("one_reachable".into(), json!(sums.contains(&one)));
        object.insert(
            "nearest_sum_below_one".into(),
            below.map(json_rat).unwrap_or(Value::Null),
        );
        object.insert(
            "nearest_sum_above_one".into(),
            above.map(json_rat).unwrap_or(Value::Null),
        );
        if certificate.cells <= 12 {
            object.insert(
                "reachable_sums".into(),
                Value::Array(sums.iter().map(json_rat).collect()),
            );
        }
    }

    let transcript_path = write_artifact(
        out_dir,
        "adversary-transcript.json",
        &pretty(&transcript_doc(&transcript)),
    )?;
    let cert_path = write_artifact(out_dir, "adversary-certificate.json", &pretty(&doc))?;
    println!(
        "adversary: {} queries, {} cells, unit 2/3^{} = {}",
        transcript.query_count(),
        certificate.cells,
        certificate.exponent,
        certificate.unit,
    );
    println!(
        "certificate: {}; transcript {}",
        if certificate.safe { "safe" } else { "UNSAFE" },
        if consistent {
            "reproducible from honest measures"
        } else {
            "NOT reproducible"
        }
    );
    println!("certificate: {}", cert_path.display());
    println!("transcript: {}", transcript_path.display());
    Ok(safe)
}

/// All subset sums of the committed cell weights, sorted.
fn reachable_sums(certificate: &famdiv::query::SafetyCertificate) -> Vec<Rational> {
    let mut sums = std::collections::BTreeSet::from([int(0)]);
    for multiple in &certificate.weight_multiples {
        let weight = Rational::from_integer(multiple.clone()) * &certificate.unit;
        let extended: Vec<Rational> = sums.iter().map(|s| s + &weight).collect();
        sums.extend(extended);
    }
    sums.into_iter().collect()
}

fn parse_script(text: &str) -> Result<Vec<Query>> {
    let doc: Value = serde_json::from_str(text).map_err(|e| anyhow::anyhow!("{e}"))?;
    let steps = match &doc {
        Value::Array(steps) => steps,
        Value::Object(map) => map
            .get("steps")
            .and_then(Value::as_array)
            .context("expected a JSON array of queries (or an object with a \"steps\" array)")?,
        _ => bail!("expected a JSON array of queries"),
    };
    let mut queries = Vec::with_capacity(steps.len());
    for (index, step) in steps.iter().enumerate() {
        let op = step
            .get("op")
            .and_then(Value::as_str)
            .with_context(|| format!("query {index}: missing \"op\""))?;
        let agent = step
            .get("agent")
            .and_then(Value::as_u64)
            .with_context(|| format!("query {index}: missing integer \"agent\""))?
            as usize;
        let query = match op {
            "eval" => Query::Eval {
                agent,
                left: field_rational(step, "left", index)?,
                right: field_rational(step, "right", index)?,
            },
            "mark" => Query::Mark {
                agent,
                start: field_rational(step, "start", index)?,
                target: field_rational(step, "target", index)?,
            },
            other => bail!("query {index}: unknown op {other:?} (expected \"eval\" or \"mark\")"),
        };
        queries.push(query);
    }
    Ok(queries)
}

fn field_rational(step: &Value, key: &str, index: usize) -> Result<Rational> {
    let value = step
        .get(key)
        .with_context(|| format!("query {index}: missing \"{key}\""))?;
    rational_from_value(value).with_context(|| format!("query {index}, field \"{key}\""))
}

fn rational_from_value(value: &Value) -> Result<Rational> {
    match value {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(int(i))
            } else {
                bail!("floating point is not exact; write {n} as a \"p/q\" string")
            }
        }
        Value::String(s) => parse_rational(s).map_err(|e| anyhow::anyhow!("{e}")),
        other => bail!("expected an integer or a \"p/q\" string, got {other}"),
    }
}

/// A replayable transcript: the same shape `--script` accepts, plus the
/// answers the adversary committed to.
fn transcript_doc(transcript: &Transcript) -> Value {
    let steps: Vec<Value> = transcript
        .steps()
        .iter()
        .map(|step| {
            let answer = match &step.answer {
                Answer::Value(v) => json_rat(v),
                Answer::Point(p) => json_rat(p),
            };
            match &step.query {
                Query::Eval { agent, left, right } => json!({
                    "op": "eval",
                    "agent": agent,
                    "left": json_rat(left),
                    "right": json_rat(right),
                    "answer": answer,
                }),
                Query::Mark {
                    agent,
                    start,
                    target,
                } => json!({
                    "op": "mark",
                    "agent": agent,
                    "start": json_rat(start),
                    "target": json_rat(target),
                    "answer": answer,
                }),
            }
        })
        .collect();
    json!({
        "cake": [json_rat(transcript.cake().left()), json_rat(transcript.cake().right())],
        "agents": transcript.agents(),
        "steps": steps,
    })
}

// ---------------------------------------------------------- lower-bound

fn cmd_lower_bound(args: &LowerBoundArgs, out_dir: &Path, seed: u64) -> Result<bool> {
    match verify_component_bound(args.k, args.m, args.q, args.exhaustive_limit) {
        Ok(certificate) => {
            let witness_allocation: Value =
                serde_json::from_str(&io::serialize_allocation(&certificate.witness.allocation))
                    .expect("serialized allocations are valid JSON");
            let doc = json!({
                "command": "lower-bound",
                "seed": seed,
                "k": certificate.k,
                "m": certificate.m,
                "cells": certificate.cells,
                "cut_granularity": json_rat(&certificate.cut_granularity),
                "checks": {
                    "requested": bound_check_doc(&certificate.requested),
                    "majority": bound_check_doc(&certificate.majority),
                    "unanimous": bound_check_doc(&certificate.unanimous),
                },
                "witness": {
                    "labels": certificate.witness.pattern.labels,
                    "cuts": rats(&certificate.witness.cuts),
                    "tally": certificate.witness.tally,
                    "allocation": witness_allocation,
                },
            });
            let path = write_artifact(out_dir, "lower-bound-certificate.json", &pretty(&doc))?;
            println!(
                "lower bound (k={}, m={}) at quota {}: formula {}, search {} — certified",
                certificate.k,
                certificate.m,
                certificate.requested.quota,
                certificate.requested.formula_value,
                certificate.requested.search_value,
            );
            println!("certificate: {}", path.display());
            Ok(true)
        }
        Err(HardnessError::BoundViolated { formula, found }) => {
            let doc = json!({
                "command": "lower-bound",
                "seed": seed,
                "k": args.k,
                "m": args.m,
                "q": args.q,
                "violated": true,
                "formula_value": formula,
                "search_value": found,
            });
            let path = write_artifact(out_dir, "lower-bound-certificate.json", &pretty(&doc))?;
            eprintln!(
                "lower bound VIOLATED: formula requires {formula}, exhaustive search found {found}"
            );
            eprintln!("trace: {}", path.display());
            Ok(false)
        }
        Err(other) => Err(other.into()),
    }
}

fn bound_check_doc(check: &BoundCheck) -> Value {
    json!({
        "quota": check.quota,
        "formula_value": check.formula_value,
        "search_value": check.search_value,
    })
}

// --------------------------------------------------------------- render

fn cmd_render(args: &RenderArgs, out_dir: &Path) -> Result<bool> {
    let instance = load_instance(&args.instance)?;
    let allocation = load_allocation(&args.allocation, &instance)?;
    let svg = render_allocation(&instance, &allocation);
    let path = match &args.out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))?;
            }
            std::fs::write(path, &svg).with_context(|| format!("writing {}", path.display()))?;
            path.clone()
        }
        None => write_artifact(out_dir, "render.svg", &svg)?,
    };
    println!("svg: {}", path.display());
    Ok(true)
}

// -------------------------------------------------------------- helpers

fn load_instance(path: &Path) -> Result<Instance> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    io::parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_allocation(path: &Path, instance: &Instance) -> Result<Allocation> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    io::parse_allocation(&text, instance.family_count())
        .with_context(|| format!("parsing {}", path.display()))
}

fn write_artifact(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// An exact rational as JSON: a bare integer when possible, `"p/q"`
/// otherwise — the same convention the document formats use.
fn json_rat(r: &Rational) -> Value {
    if r.is_integer() {
        if let Ok(n) = i64::try_from(r.numer().clone()) {
            return json!(n);
        }
    }
    json!(r.to_string())
}

fn rats(values: &[Rational]) -> Vec<Value> {
    values.iter().map(json_rat).collect()
}

fn pretty(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON documents serialize");
    text.push('\n');
    text
}

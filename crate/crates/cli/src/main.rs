//! Command-line front end: parse PEM1 instances, run any pipeline and
//! emit JSON reports with scriptable exit codes.
//!
//! Exit codes: 0 success/verified, 1 refuted or not found, 2 input
//! error, 3 precondition violation.

use std::collections::BTreeSet;
use std::io::Read;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use pem_core::energy::{Autarky, DomainConstraint, EnergyFunction, Labeling, Strength};
use pem_core::expansion::{run_expansion, verify_fixed_point_dominance, TruncationRule};
use pem_core::flow::{minimize_submodular, FlowError};
use pem_core::io::{
    format_rational, parse, parse_rational, random_labeling, AutarkyReport, Report,
};
use pem_core::kovtun::{
    combine_one_vs_all_runs, one_vs_all, one_vs_all_ordering, sequential_all_labels,
    sequential_kovtun, OneVsAllOutcome, OneVsAllRun,
};
use pem_core::lp::{optimal_support, solve_lp, verify_strong_lp_autarky, verify_weak_lp_autarky};
use pem_core::oracle::{
    check_autarky_definition, check_persistency, enumerate_minimizers, AutarkyVerdict,
};
use pem_core::Rational;

#[derive(Parser)]
#[command(
    name = "pem",
    about = "Pairwise energy minimization with provably optimal partial assignments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Emit a machine-readable JSON report on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for independent per-label runs.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Budget (in labelings) for exhaustive verification.
    #[arg(long, global = true, default_value_t = pem_core::oracle::DEFAULT_BUDGET)]
    oracle_budget: u64,
    /// Seed for randomized starting points (0 keeps deterministic defaults).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the instance energy.
    Solve {
        #[arg(long, value_enum)]
        method: SolveMethod,
        /// Starting labeling for the expansion method, comma-separated.
        #[arg(long)]
        x0: Option<String>,
        /// Truncation parameter alpha (rational).
        #[arg(long, default_value = "0")]
        alpha: String,
        /// Truncation parameter beta (rational).
        #[arg(long, default_value = "1")]
        beta: String,
        #[arg(long, default_value_t = 100)]
        max_sweeps: usize,
        /// PEM1 file path, or `-` for standard input.
        instance: String,
    },
    /// Derive optimal partial assignments from auxiliary problems.
    Kovtun {
        #[arg(long, value_enum, default_value_t = KovtunMethod::OneVsAll)]
        method: KovtunMethod,
        /// Run a single target label instead of all of them.
        #[arg(long)]
        target: Option<usize>,
        #[arg(long, value_enum, default_value_t = VerifyMode::Auto)]
        verify: VerifyMode,
        instance: String,
    },
    /// Solve the linear relaxation over the local polytope.
    Lp {
        /// Probe which labels carry weight in some optimal solution.
        #[arg(long)]
        support: bool,
        instance: String,
    },
    /// Verify a claimed autarky pair through the relaxation.
    VerifyAutarky {
        /// Lower bounds, comma-separated labels.
        #[arg(long)]
        x_min: String,
        /// Upper bounds, comma-separated labels.
        #[arg(long)]
        x_max: String,
        /// Additionally require the strong property.
        #[arg(long)]
        strong: bool,
        instance: String,
    },
    /// Run the expansion-move sweep to a fixed point.
    Expand {
        #[arg(long)]
        x0: Option<String>,
        #[arg(long, default_value = "0")]
        alpha: String,
        #[arg(long, default_value = "1")]
        beta: String,
        #[arg(long, default_value_t = 100)]
        max_sweeps: usize,
        /// Check the fixed point against the one-vs-all bounds.
        #[arg(long)]
        against_kovtun: bool,
        instance: String,
    },
    /// Exhaustively enumerate all global minimizers.
    Oracle { instance: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMethod {
    Bruteforce,
    SubmodularCut,
    Lp,
    Expansion,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KovtunMethod {
    OneVsAll,
    Sequential,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VerifyMode {
    Auto,
    On,
    Off,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn precondition(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();
    let code = match dispatch(&cli, started) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    };
    std::process::exit(code);
}

fn read_instance(path: &str) -> Result<EnergyFunction, Failure> {
    let text = if path == "-" {
        let mut buffer = String::new();
        std::io::stdin()
            .read_to_string(&mut buffer)
            .map_err(|e| Failure::input(format!("reading standard input: {e}")))?;
        buffer
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("reading {path}: {e}")))?
    };
    parse(&text).map_err(|e| Failure::input(format!("{path}: {e}")))
}

fn parse_labeling_arg(text: &str, f: &EnergyFunction, what: &str) -> Result<Labeling, Failure> {
    let values: Result<Vec<usize>, _> = text
        .split(',')
        .map(|tok| tok.trim().parse::<usize>())
        .collect();
    let values = values.map_err(|_| Failure::input(format!("{what}: malformed labeling `{text}`")))?;
    let labeling = Labeling(values);
    labeling
        .valid_for(f.space())
        .map_err(|e| Failure::input(format!("{what}: {e}")))?;
    Ok(labeling)
}

fn parse_rational_arg(text: &str, what: &str) -> Result<Rational, Failure> {
    parse_rational(text).ok_or_else(|| Failure::input(format!("{what}: malformed rational `{text}`")))
}

fn constraint_lists(constraint: &DomainConstraint) -> Vec<Vec<usize>> {
    constraint
        .allowed
        .iter()
        .map(|set| set.iter().copied().collect())
        .collect()
}

fn emit(report: &Report, json: bool, human: &[String]) {
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(report).expect("report serializes")
        );
    } else {
        for line in human {
            println!("{line}");
        }
    }
}

fn within_budget(f: &EnergyFunction, budget: u64) -> bool {
    u32::try_from(f.space().node_count())
        .ok()
        .and_then(|nodes| (f.space().label_count() as u64).checked_pow(nodes))
        .is_some_and(|needed| needed <= budget)
}

fn starting_point(
    x0: &Option<String>,
    f: &EnergyFunction,
    seed: u64,
) -> Result<Labeling, Failure> {
    match x0 {
        Some(text) => parse_labeling_arg(text, f, "--x0"),
        None if seed != 0 => Ok(random_labeling(f.space(), seed)),
        None => Ok(Labeling::constant(f.space().node_count(), 0)),
    }
}

fn run_one_vs_all_threaded(
    f: &EnergyFunction,
    threads: usize,
) -> Result<OneVsAllOutcome, Failure> {
    let labels: Vec<usize> = f.space().labels().collect();
    let mut runs: Vec<OneVsAllRun> = Vec::with_capacity(labels.len());
    if threads <= 1 {
        for &target in &labels {
            runs.push(one_vs_all(f, target).map_err(|e| Failure::precondition(e.to_string()))?);
        }
    } else {
        for batch in labels.chunks(threads) {
            let results: Vec<_> = std::thread::scope(|scope| {
                let handles: Vec<_> = batch
                    .iter()
                    .map(|&target| scope.spawn(move || one_vs_all(f, target)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("worker does not panic"))
                    .collect()
            });
            for result in results {
                runs.push(result.map_err(|e| Failure::precondition(e.to_string()))?);
            }
        }
    }
    combine_one_vs_all_runs(f.space(), runs).map_err(|e| Failure::precondition(e.to_string()))
}

fn dispatch(cli: &Cli, started: Instant) -> Result<i32, Failure> {
    match &cli.command {
        Command::Solve {
            method,
            x0,
            alpha,
            beta,
            max_sweeps,
            instance,
        } => cmd_solve(cli, started, *method, x0, alpha, beta, *max_sweeps, instance),
        Command::Kovtun {
            method,
            target,
            verify,
            instance,
        } => cmd_kovtun(cli, started, *method, *target, *verify, instance),
        Command::Lp { support, instance } => cmd_lp(cli, started, *support, instance),
        Command::VerifyAutarky {
            x_min,
            x_max,
            strong,
            instance,
        } => cmd_verify_autarky(cli, started, x_min, x_max, *strong, instance),
        Command::Expand {
            x0,
            alpha,
            beta,
            max_sweeps,
            against_kovtun,
            instance,
        } => cmd_expand(
            cli,
            started,
            x0,
            alpha,
            beta,
            *max_sweeps,
            *against_kovtun,
            instance,
        ),
        Command::Oracle { instance } => cmd_oracle(cli, started, instance),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    cli: &Cli,
    started: Instant,
    method: SolveMethod,
    x0: &Option<String>,
    alpha: &str,
    beta: &str,
    max_sweeps: usize,
    instance: &str,
) -> Result<i32, Failure> {
    let f = read_instance(instance)?;
    let mut report = Report {
        instance: Some(instance.to_string()),
        ..Report::default()
    };
    let mut human = Vec::new();
    match method {
        SolveMethod::Bruteforce => {
            report.method = Some("bruteforce".into());
            let set = enumerate_minimizers(&f, cli.oracle_budget)
                .map_err(|e| Failure::precondition(e.to_string()))?;
            human.push(format!("value: {}", format_rational(&set.value)));
            human.push(format!("labeling: {}", set.meet));
            human.push(format!("minimizers: {}", set.minimizers.len()));
            report.energy_value = Some(format_rational(&set.value));
            report.labeling = Some(set.meet.0.clone());
            report.oracle_verdict = Some(format!("minimizers={}", set.minimizers.len()));
        }
        SolveMethod::SubmodularCut => {
            report.method = Some("submodular-cut".into());
            let minimum = minimize_submodular(&f).map_err(|e| match e {
                FlowError::NotSubmodular(w) => Failure::precondition(format!(
                    "instance is not submodular: edge {} violates the exchange inequality \
                     at {:?} vs {:?}",
                    w.edge, w.x, w.y
                )),
                other => Failure::precondition(other.to_string()),
            })?;
            human.push(format!("value: {}", format_rational(&minimum.value)));
            human.push(format!("lowest minimizer: {}", minimum.lowest));
            human.push(format!("highest minimizer: {}", minimum.highest));
            report.energy_value = Some(format_rational(&minimum.value));
            report.labeling = Some(minimum.lowest.0.clone());
        }
        SolveMethod::Lp => {
            report.method = Some("lp".into());
            let solution = solve_lp(&f).map_err(|e| Failure::precondition(e.to_string()))?;
            human.push(format!("lp value: {}", format_rational(&solution.value)));
            report.lp_value = Some(format_rational(&solution.value));
        }
        SolveMethod::Expansion => {
            report.method = Some("expansion".into());
            let x_start = starting_point(x0, &f, cli.seed)?;
            let rule = TruncationRule::uniform(
                parse_rational_arg(alpha, "--alpha")?,
                parse_rational_arg(beta, "--beta")?,
            )
            .map_err(|e| Failure::input(e.to_string()))?;
            let outcome = run_expansion(&f, &x_start, &rule, max_sweeps)
                .map_err(|e| Failure::precondition(e.to_string()))?;
            let value = outcome.trace.last().expect("trace is nonempty");
            human.push(format!("value: {}", format_rational(value)));
            human.push(format!("labeling: {}", outcome.labeling));
            human.push(format!("fixed point: {}", outcome.fixed_point));
            report.energy_value = Some(format_rational(value));
            report.labeling = Some(outcome.labeling.0.clone());
            report.fixed_point = Some(outcome.fixed_point);
            report.trace = Some(outcome.trace.iter().map(format_rational).collect());
        }
    }
    report.wall_time_ms = started.elapsed().as_millis() as u64;
    emit(&report, cli.json, &human);
    Ok(0)
}

fn cmd_kovtun(
    cli: &Cli,
    started: Instant,
    method: KovtunMethod,
    target: Option<usize>,
    verify: VerifyMode,
    instance: &str,
) -> Result<i32, Failure> {
    let f = read_instance(instance)?;
    if let Some(k) = target {
        if k >= f.space().label_count() {
            return Err(Failure::input(format!(
                "--target {k} out of range for {} labels",
                f.space().label_count()
            )));
        }
    }
    let mut report = Report {
        instance: Some(instance.to_string()),
        ..Report::default()
    };
    let mut human = Vec::new();

    let (constraint, combined, per_label_lines) = match method {
        KovtunMethod::OneVsAll => {
            report.method = Some("kovtun/one-vs-all".into());
            let outcome = match target {
                Some(k) => {
                    let run =
                        one_vs_all(&f, k).map_err(|e| Failure::precondition(e.to_string()))?;
                    combine_one_vs_all_runs(f.space(), vec![run])
                        .map_err(|e| Failure::precondition(e.to_string()))?
                }
                None => run_one_vs_all_threaded(&f, cli.threads)?,
            };
            let lines: Vec<String> = outcome
                .runs
                .iter()
                .map(|run| {
                    format!(
                        "target {}: x_min {} fixes {:?}",
                        run.target, run.autarky.x_min, run.fixed_nodes
                    )
                })
                .collect();
            let combined = outcome.combined_autarky(f.space());
            (outcome.constraint, combined, lines)
        }
        KovtunMethod::Sequential => {
            report.method = Some("kovtun/sequential".into());
            match target {
                Some(k) => {
                    let ordering = one_vs_all_ordering(&f, k);
                    let outcome = sequential_kovtun(&f, &ordering)
                        .map_err(|e| Failure::precondition(e.to_string()))?;
                    let top = f.space().top_label();
                    let fixed: Vec<usize> = (0..f.space().node_count())
                        .filter(|&s| !outcome.aborted && outcome.autarky.x_min.get(s) == top)
                        .collect();
                    let allowed = (0..f.space().node_count())
                        .map(|s| {
                            if fixed.contains(&s) {
                                BTreeSet::from([k])
                            } else {
                                f.space().labels().collect()
                            }
                        })
                        .collect();
                    let constraint = DomainConstraint {
                        allowed,
                        strength: Strength::Strong,
                    };
                    let mut x_min = Labeling::constant(f.space().node_count(), 0);
                    let mut x_max =
                        Labeling::constant(f.space().node_count(), f.space().top_label());
                    for &s in &fixed {
                        x_min.0[s] = k;
                        x_max.0[s] = k;
                    }
                    let strength = if fixed.is_empty() {
                        Strength::Weak
                    } else {
                        Strength::Strong
                    };
                    let combined = Autarky::new(x_min, x_max, strength, "sequential-combined")
                        .expect("degenerate intervals are ordered");
                    let line = format!(
                        "target {k}: x_min {} fixes {:?} (iterations {})",
                        outcome.autarky.x_min, fixed, outcome.iterations
                    );
                    (constraint, combined, vec![line])
                }
                None => {
                    let all = sequential_all_labels(&f)
                        .map_err(|e| Failure::precondition(e.to_string()))?;
                    let lines: Vec<String> = all
                        .runs
                        .iter()
                        .map(|(target, _, outcome)| {
                            format!(
                                "target {target}: x_min {} (iterations {}{})",
                                outcome.autarky.x_min,
                                outcome.iterations,
                                if outcome.aborted { ", aborted" } else { "" }
                            )
                        })
                        .collect();
                    let combined = combined_from_constraint(&all.constraint, &f);
                    (all.constraint, combined, lines)
                }
            }
        }
    };

    human.extend(per_label_lines);
    let fixed_count = constraint
        .allowed
        .iter()
        .filter(|set| set.len() == 1)
        .count();
    human.push(format!(
        "fixed {fixed_count} of {} nodes",
        f.space().node_count()
    ));
    for (s, set) in constraint.allowed.iter().enumerate() {
        if set.len() == 1 {
            human.push(format!("  node {s} = {}", set.iter().next().unwrap()));
        }
    }

    let should_verify = match verify {
        VerifyMode::On => true,
        VerifyMode::Off => false,
        VerifyMode::Auto => within_budget(&f, cli.oracle_budget),
    };
    if should_verify {
        let mut verdicts = Vec::new();
        match check_persistency(&f, &constraint, cli.oracle_budget) {
            Ok(verdict) => verdicts.push(format!("persistency={verdict}")),
            Err(e) => verdicts.push(format!("persistency=skipped({e})")),
        }
        let weak = verify_weak_lp_autarky(&f, &combined)
            .map_err(|e| Failure::precondition(e.to_string()))?;
        verdicts.push(format!(
            "lp-weak-autarky={}",
            if weak.holds { "verified" } else { "refuted" }
        ));
        let verdict_line = verdicts.join(" ");
        human.push(format!("verification: {verdict_line}"));
        report.oracle_verdict = Some(verdict_line);
    }

    report.derived_constraint = Some(constraint_lists(&constraint));
    report.autarky = Some(AutarkyReport::from_autarky(&combined));
    report.wall_time_ms = started.elapsed().as_millis() as u64;
    emit(&report, cli.json, &human);
    Ok(0)
}

fn combined_from_constraint(constraint: &DomainConstraint, f: &EnergyFunction) -> Autarky {
    let mut x_min = Labeling::constant(f.space().node_count(), 0);
    let mut x_max = Labeling::constant(f.space().node_count(), f.space().top_label());
    let mut any_fixed = false;
    for (s, set) in constraint.allowed.iter().enumerate() {
        if set.len() == 1 {
            let k = *set.iter().next().unwrap();
            x_min.0[s] = k;
            x_max.0[s] = k;
            any_fixed = true;
        }
    }
    let strength = if any_fixed {
        Strength::Strong
    } else {
        Strength::Weak
    };
    Autarky::new(x_min, x_max, strength, "sequential-combined")
        .expect("degenerate intervals are ordered")
}

fn cmd_lp(cli: &Cli, started: Instant, support: bool, instance: &str) -> Result<i32, Failure> {
    let f = read_instance(instance)?;
    let mut report = Report {
        instance: Some(instance.to_string()),
        method: Some("lp".into()),
        ..Report::default()
    };
    let mut human = Vec::new();
    let solution = solve_lp(&f).map_err(|e| Failure::precondition(e.to_string()))?;
    human.push(format!("lp value: {}", format_rational(&solution.value)));
    report.lp_value = Some(format_rational(&solution.value));
    if support {
        let sets = optimal_support(&f).map_err(|e| Failure::precondition(e.to_string()))?;
        let lists: Vec<Vec<usize>> = sets
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter_map(|(i, &on)| on.then_some(i))
                    .collect()
            })
            .collect();
        for (s, labels) in lists.iter().enumerate() {
            human.push(format!("support node {s}: {labels:?}"));
        }
        report.derived_constraint = Some(lists);
    }
    report.wall_time_ms = started.elapsed().as_millis() as u64;
    emit(&report, cli.json, &human);
    Ok(0)
}

fn cmd_verify_autarky(
    cli: &Cli,
    started: Instant,
    x_min_text: &str,
    x_max_text: &str,
    strong: bool,
    instance: &str,
) -> Result<i32, Failure> {
    let f = read_instance(instance)?;
    let x_min = parse_labeling_arg(x_min_text, &f, "--x-min")?;
    let x_max = parse_labeling_arg(x_max_text, &f, "--x-max")?;
    let autarky = Autarky::new(x_min, x_max, Strength::Weak, "claimed")
        .map_err(|e| Failure::input(e.to_string()))?;

    let mut report = Report {
        instance: Some(instance.to_string()),
        method: Some(if strong {
            "verify-autarky/strong".into()
        } else {
            "verify-autarky/weak".into()
        }),
        autarky: Some(AutarkyReport::from_autarky(&autarky)),
        ..Report::default()
    };
    let mut human = Vec::new();
    let mut verdicts = Vec::new();

    let weak = verify_weak_lp_autarky(&f, &autarky)
        .map_err(|e| Failure::precondition(e.to_string()))?;
    verdicts.push(format!(
        "lp-weak={} (optimum {})",
        if weak.holds { "verified" } else { "refuted" },
        format_rational(&weak.optimum)
    ));
    let mut verified = weak.holds;
    if !weak.holds {
        // Summarize the refuting relaxed labeling by its heaviest labels.
        let summary: Vec<usize> = weak
            .certificate
            .node
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .max_by(|(_, a), (_, b)| a.cmp(b))
                    .map(|(i, _)| i)
                    .unwrap_or(0)
            })
            .collect();
        report.labeling = Some(summary);
    }
    if strong && weak.holds {
        let is_strong = verify_strong_lp_autarky(&f, &autarky)
            .map_err(|e| Failure::precondition(e.to_string()))?;
        verdicts.push(format!(
            "lp-strong={}",
            if is_strong { "verified" } else { "refuted" }
        ));
        verified = is_strong;
    }
    if within_budget(&f, cli.oracle_budget) {
        match check_autarky_definition(&f, &autarky, cli.oracle_budget) {
            Ok(check) => {
                verdicts.push(format!("oracle={}", check.verdict));
                if check.verdict == AutarkyVerdict::NotAutarky {
                    if let Some(witness) = &check.violation {
                        report.labeling = Some(witness.0.clone());
                    }
                }
            }
            Err(e) => verdicts.push(format!("oracle=skipped({e})")),
        }
    }

    let verdict_line = verdicts.join(" ");
    human.push(format!("verification: {verdict_line}"));
    human.push(format!(
        "result: {}",
        if verified { "verified" } else { "refuted" }
    ));
    report.oracle_verdict = Some(verdict_line);
    report.wall_time_ms = started.elapsed().as_millis() as u64;
    emit(&report, cli.json, &human);
    Ok(if verified { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_expand(
    cli: &Cli,
    started: Instant,
    x0: &Option<String>,
    alpha: &str,
    beta: &str,
    max_sweeps: usize,
    against_kovtun: bool,
    instance: &str,
) -> Result<i32, Failure> {
    let f = read_instance(instance)?;
    let x_start = starting_point(x0, &f, cli.seed)?;
    let rule = TruncationRule::uniform(
        parse_rational_arg(alpha, "--alpha")?,
        parse_rational_arg(beta, "--beta")?,
    )
    .map_err(|e| Failure::input(e.to_string()))?;
    if max_sweeps == 0 {
        return Err(Failure::input("--max-sweeps must be at least 1"));
    }
    let outcome = run_expansion(&f, &x_start, &rule, max_sweeps)
        .map_err(|e| Failure::precondition(e.to_string()))?;

    let mut report = Report {
        instance: Some(instance.to_string()),
        method: Some("expand".into()),
        ..Report::default()
    };
    let mut human = Vec::new();
    let value = outcome.trace.last().expect("trace is nonempty");
    human.push(format!(
        "trace: {}",
        outcome
            .trace
            .iter()
            .map(format_rational)
            .collect::<Vec<_>>()
            .join(" -> ")
    ));
    human.push(format!("final labeling: {}", outcome.labeling));
    human.push(format!("energy: {}", format_rational(value)));
    human.push(format!("fixed point: {}", outcome.fixed_point));
    report.trace = Some(outcome.trace.iter().map(format_rational).collect());
    report.labeling = Some(outcome.labeling.0.clone());
    report.energy_value = Some(format_rational(value));
    report.fixed_point = Some(outcome.fixed_point);

    if against_kovtun {
        let runs = run_one_vs_all_threaded(&f, cli.threads)?;
        let mut dominated = true;
        let mut details = Vec::new();
        for run in &runs.runs {
            match verify_fixed_point_dominance(&outcome.labeling, run)
                .map_err(|e| Failure::precondition(e.to_string()))?
            {
                None => {}
                Some(violation) => {
                    dominated = false;
                    details.push(format!(
                        "target {} node {} sits below the bound ({} < {})",
                        run.target, violation.node, violation.position, violation.required
                    ));
                }
            }
        }
        let verdict = format!(
            "dominates-kovtun={}{}",
            dominated,
            if details.is_empty() {
                String::new()
            } else {
                format!(" [{}]", details.join("; "))
            }
        );
        human.push(format!("dominance: {verdict}"));
        report.oracle_verdict = Some(verdict);
    }

    report.wall_time_ms = started.elapsed().as_millis() as u64;
    emit(&report, cli.json, &human);
    Ok(0)
}

fn cmd_oracle(cli: &Cli, started: Instant, instance: &str) -> Result<i32, Failure> {
    let f = read_instance(instance)?;
    let set = enumerate_minimizers(&f, cli.oracle_budget)
        .map_err(|e| Failure::precondition(e.to_string()))?;
    let mut report = Report {
        instance: Some(instance.to_string()),
        method: Some("oracle".into()),
        ..Report::default()
    };
    let human = vec![
        format!("value: {}", format_rational(&set.value)),
        format!("minimizers: {}", set.minimizers.len()),
        format!("meet: {}", set.meet),
        format!("join: {}", set.join),
    ];
    report.energy_value = Some(format_rational(&set.value));
    report.labeling = Some(set.meet.0.clone());
    report.oracle_verdict = Some(format!("minimizers={}", set.minimizers.len()));
    report.wall_time_ms = started.elapsed().as_millis() as u64;
    emit(&report, cli.json, &human);
    Ok(0)
}

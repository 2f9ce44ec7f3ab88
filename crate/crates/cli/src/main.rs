//! `ocp`: check CTL on one-counter processes, generate reduction gadgets,
//! analyse one-counter MDPs and rerun the self-test suites.
//!
//! Exit codes: 0 true (or success), 1 false (or a failed self-test), 2 input
//! or structural error, 3 indeterminate.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use num_traits::{Num, One, ToPrimitive};
use thiserror::Error;

use onecounter::arith::primes_first;
use onecounter::checker::{
    evaluate_capped, evaluate_periodic_with, evaluate_three_valued, period_params, BoundedOracle,
    CheckError, CheckOptions, OracleSource, DEFAULT_BUDGET,
};
use onecounter::ctl::{self, Ctl};
use onecounter::gadgets::{
    circuit, crr, fig7, formula, qbf, serial, wagner, GadgetError, SerialVariant,
};
use onecounter::ocmdp::{
    almost_sure_reach, approximate_max_reach_values, bellman_residual,
    exact_max_reach_values_with, induced_finite_mdp, parse_ocmdp, Frontier, MdpError,
    DEFAULT_VERTEX_BUDGET,
};
use onecounter::ocp::{LocId, Ocp};
use onecounter::suites;
use onecounter::text::{self, TextError};

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("formula: {0}")]
    Formula(#[from] ctl::ParseError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Ocp(#[from] onecounter::ocp::OcpError),
}

type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Parser)]
#[command(name = "ocp", version, about = "Model checking for one-counter processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a configuration satisfies a CTL formula.
    Check(CheckArgs),
    /// Write one of the reduction gadgets.
    #[command(subcommand)]
    Gadget(GadgetCmd),
    /// Analyse a one-counter MDP on a finite truncation.
    Mdp(MdpArgs),
    /// Rerun the cross-validation suites.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Process in the `ocp` text format.
    #[arg(long)]
    ocp: PathBuf,
    /// CTL formula, e.g. `E[p U q]`.
    #[arg(long, conflicts_with = "formula_file", required_unless_present = "formula_file")]
    formula: Option<String>,
    /// Read the formula from a file; `#` lines are ignored.
    #[arg(long)]
    formula_file: Option<PathBuf>,
    /// Configuration `LOCATION:COUNTER`, counter in decimal or `0b` binary.
    #[arg(long)]
    at: String,
    /// `periodic`, `capped:B`, `tv:B` or `auto`.
    #[arg(long, default_value = "auto")]
    engine: String,
    /// Largest wrapped window the periodic engine may build.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Print a `key=value` record without timings.
    #[arg(long)]
    record: bool,
}

#[derive(Args)]
struct Output {
    /// Write `PREFIX.ocp` and `PREFIX.ctl` instead of printing.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GadgetCmd {
    /// The fixed divisibility net.
    Fig7(Output),
    /// The formula testing divisibility by `2^I`.
    Phidiv {
        i: u32,
        #[command(flatten)]
        out: Output,
    },
    /// The formula testing bit `I`.
    Psibit {
        i: u32,
        #[command(flatten)]
        out: Output,
    },
    /// QBF validity as a formula on the fixed net.
    Qbf {
        file: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Net and path formula for a residue formula over the first M primes.
    Prop1 {
        #[arg(long)]
        crr: PathBuf,
        #[arg(long = "primes")]
        m: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Net and EF formula for a layered circuit.
    Circuit {
        file: PathBuf,
        /// Number of primes; defaults to the largest index used.
        #[arg(long = "primes")]
        m: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// NFA acceptance of a leaf string, as EU or (with --eg) EG.
    Serial {
        #[arg(long)]
        nfa: PathBuf,
        /// Truth table: `2^m` characters 0/1, whitespace ignored.
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        eg: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Lex-max parity of a DIMACS CNF as an EF formula.
    Wagner {
        file: PathBuf,
        /// Defaults to the variable count of the header.
        #[arg(long)]
        m: Option<u32>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MdpQuery {
    Value,
    Asure,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FrontierArg {
    Opt,
    Pess,
    Both,
}

#[derive(Args)]
struct MdpArgs {
    query: MdpQuery,
    /// OC-MDP in the `ocmdp` text format, with `target` lines.
    #[arg(long)]
    mdp: PathBuf,
    /// Start configuration `LOCATION:COUNTER`.
    #[arg(long)]
    at: String,
    /// Largest counter value kept in the truncation.
    #[arg(long)]
    bound: usize,
    #[arg(long, value_enum, default_value = "both")]
    frontier: FrontierArg,
    /// Also print a floating-point preview after this many value-iteration
    /// sweeps. Approximate; not used for any verdict.
    #[arg(long)]
    approx: Option<usize>,
    /// Largest truncation, in vertices.
    #[arg(long, default_value_t = DEFAULT_VERTEX_BUDGET)]
    budget: usize,
}

#[derive(Args)]
struct SelftestArgs {
    /// Suite names, or `all`.
    #[arg(default_value = "all")]
    suites: Vec<String>,
    /// Replacement for the fixed divisibility net.
    #[arg(long)]
    ocp: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Decimal or `0b` binary.
fn parse_counter(s: &str) -> Result<BigUint> {
    let parsed = match s.strip_prefix("0b") {
        Some(bits) => BigUint::from_str_radix(bits, 2),
        None => BigUint::from_str_radix(s, 10),
    };
    parsed.map_err(|_| CliError::Usage(format!("`{s}` is not a counter value")))
}

fn parse_at(ocp: &Ocp, at: &str) -> Result<(LocId, BigUint)> {
    let (q, n) = at
        .rsplit_once(':')
        .ok_or_else(|| CliError::Usage(format!("expected LOCATION:COUNTER, got `{at}`")))?;
    Ok((ocp.loc(q)?, parse_counter(n)?))
}

/// Formula files may contain `#` comments.
fn strip_comments(text: &str) -> String {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Answer {
    True,
    False,
    Indeterminate,
}

impl Answer {
    fn of(b: bool) -> Self {
        if b {
            Answer::True
        } else {
            Answer::False
        }
    }

    fn name(self) -> &'static str {
        match self {
            Answer::True => "true",
            Answer::False => "false",
            Answer::Indeterminate => "indeterminate",
        }
    }

    fn exit(self) -> ExitCode {
        ExitCode::from(match self {
            Answer::True => 0,
            Answer::False => 1,
            Answer::Indeterminate => 3,
        })
    }
}

struct Verdict {
    answer: Answer,
    engine: String,
    fields: Vec<(&'static str, String)>,
    /// Escalation steps of the `auto` engine, in order.
    steps: Vec<String>,
}

impl Verdict {
    fn new(engine: impl Into<String>) -> Self {
        Verdict {
            answer: Answer::Indeterminate,
            engine: engine.into(),
            fields: Vec::new(),
            steps: Vec::new(),
        }
    }

    fn field(&mut self, key: &'static str, value: impl ToString) {
        self.fields.push((key, value.to_string()));
    }

    fn render(&self, record: bool, elapsed_ms: u128) -> String {
        let sep = if record { "=" } else { ": " };
        let mut out = String::new();
        let _ = writeln!(out, "answer{sep}{}", self.answer.name());
        let _ = writeln!(out, "engine{sep}{}", self.engine);
        for (k, v) in &self.fields {
            let _ = writeln!(out, "{k}{sep}{v}");
        }
        for (i, step) in self.steps.iter().enumerate() {
            let _ = writeln!(out, "step{}{sep}{step}", i + 1);
        }
        if !record {
            let _ = writeln!(out, "time: {elapsed_ms} ms");
        }
        out
    }
}

fn small_counter(n: &BigUint, bound: usize) -> Result<usize> {
    n.to_usize()
        .filter(|&n| n <= bound)
        .ok_or_else(|| CliError::Usage(format!("counter {n} exceeds the bound {bound}")))
}

fn parse_bound(engine: &str, spec: &str) -> Result<usize> {
    spec.parse()
        .map_err(|_| CliError::Usage(format!("engine `{engine}`: `{spec}` is not a bound")))
}

/// Largest counter handed to the bounded oracle by the `auto` engine.
const AUTO_ORACLE_LIMIT: usize = 1 << 16;

fn run_check(args: &CheckArgs) -> Result<ExitCode> {
    let start = Instant::now();
    let ocp = text::parse_ocp(&read(&args.ocp)?)?;
    let source = match (&args.formula, &args.formula_file) {
        (Some(f), _) => f.clone(),
        (None, Some(path)) => strip_comments(&read(path)?),
        (None, None) => return Err(CliError::Usage("no formula given".into())),
    };
    let phi = ctl::parse(&source)?;
    let (q, n) = parse_at(&ocp, &args.at)?;
    let opts = CheckOptions {
        budget: args.budget,
    };

    let engine = args.engine.as_str();
    let verdict = match engine.split_once(':') {
        None if engine == "periodic" => {
            let table = evaluate_periodic_with(&ocp, &phi, &opts)?;
            let mut v = Verdict::new("periodic");
            let p = table.params();
            v.field("threshold", p.threshold());
            v.field("period", p.period());
            v.field("domain", p.domain_size());
            v.field("representative", p.representative(&n));
            v.answer = Answer::of(table.holds(q, &n));
            v
        }
        None if engine == "auto" => auto(&ocp, &phi, q, &n, &opts),
        Some(("capped", b)) => {
            let bound = parse_bound(engine, b)?;
            let n = small_counter(&n, bound)?;
            let mut v = Verdict::new(engine);
            v.field("bound", bound);
            v.answer = Answer::of(evaluate_capped(&ocp, &phi, bound).holds(q, n));
            v
        }
        Some(("tv", b)) => {
            let bound = parse_bound(engine, b)?;
            let n = small_counter(&n, bound)?;
            let mut v = Verdict::new(engine);
            v.field("bound", bound);
            v.answer = match evaluate_three_valued(&ocp, &phi, bound).value(q, n).definite() {
                Some(b) => Answer::of(b),
                None => Answer::Indeterminate,
            };
            v
        }
        _ => return Err(CliError::Usage(format!("unknown engine `{engine}`"))),
    };
    print!("{}", verdict.render(args.record, start.elapsed().as_millis()));
    Ok(verdict.answer.exit())
}

/// Periodic when the window fits, otherwise the bounded oracle at the
/// representative counter value.
fn auto(ocp: &Ocp, phi: &Ctl, q: LocId, n: &BigUint, opts: &CheckOptions) -> Verdict {
    let params = period_params(ocp, phi);
    let rep = params.representative(n);
    let mut v = Verdict::new("auto");
    v.field("threshold", params.threshold());
    v.field("period", params.period());
    v.field("domain", params.domain_size());
    v.field("representative", &rep);
    match evaluate_periodic_with(ocp, phi, opts) {
        Ok(table) => {
            v.steps.push("periodic".into());
            v.answer = Answer::of(table.holds(q, n));
            return v;
        }
        Err(e) => v.steps.push(format!("periodic skipped: {e}")),
    }
    let Some(m) = rep.to_usize().filter(|&m| m <= AUTO_ORACLE_LIMIT) else {
        v.steps.push(format!("oracle skipped: representative above {AUTO_ORACLE_LIMIT}"));
        return v;
    };
    let mut oracle = BoundedOracle::new(ocp, phi, m.max(64));
    let outcome = oracle.query(q, m);
    let tried: Vec<String> = outcome.bounds.iter().map(usize::to_string).collect();
    v.field("bounds", tried.join(","));
    v.steps.push(
        match outcome.source {
            OracleSource::ThreeValued(b) => format!("three-valued definite at {b}"),
            OracleSource::CappedAgreement(a, b) => format!("capped agreement at {a} and {b}"),
            OracleSource::Unresolved => "oracle unresolved".to_string(),
        },
    );
    v.answer = match outcome.verdict.definite() {
        Some(b) => Answer::of(b),
        None => Answer::Indeterminate,
    };
    v
}

fn emit(out: &Output, ocp: Option<&Ocp>, phi: &Ctl, start: Option<String>) -> Result<()> {
    let ocp_text = ocp.map(text::write_ocp);
    let mut ctl_text = String::new();
    if let Some(s) = &start {
        let _ = writeln!(ctl_text, "# at {s}");
    }
    let _ = writeln!(ctl_text, "{phi}");
    match &out.out {
        Some(prefix) => {
            let with = |ext: &str| {
                let mut p = prefix.clone().into_os_string();
                p.push(ext);
                PathBuf::from(p)
            };
            if let Some(t) = &ocp_text {
                write(&with(".ocp"), t)?;
                println!("wrote {}", with(".ocp").display());
            }
            write(&with(".ctl"), &ctl_text)?;
            println!("wrote {}", with(".ctl").display());
        }
        None => {
            if let Some(t) = &ocp_text {
                print!("{t}");
            }
            let formula_line = ctl_text.lines().map(|l| {
                if ocp_text.is_some() && !l.starts_with('#') {
                    format!("# formula {l}\n")
                } else {
                    format!("{l}\n")
                }
            });
            print!("{}", formula_line.collect::<String>());
        }
    }
    Ok(())
}

fn only_ocp(out: &Output, ocp: &Ocp) -> Result<()> {
    let t = text::write_ocp(ocp);
    match &out.out {
        Some(prefix) => {
            let mut p = prefix.clone().into_os_string();
            p.push(".ocp");
            let p = PathBuf::from(p);
            write(&p, &t)?;
            println!("wrote {}", p.display());
        }
        None => print!("{t}"),
    }
    Ok(())
}

fn parse_truth_table(text: &str, m: u32) -> Result<Vec<bool>> {
    let bits: Vec<bool> = strip_comments(text)
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            c => Err(CliError::Usage(format!("truth table: unexpected `{c}`"))),
        })
        .collect::<Result<_>>()?;
    if bits.len() != 1usize << m {
        return Err(GadgetError::TruthTableLength {
            expected: 1usize << m,
            found: bits.len(),
        }
        .into());
    }
    Ok(bits)
}

fn run_gadget(cmd: &GadgetCmd) -> Result<ExitCode> {
    match cmd {
        GadgetCmd::Fig7(out) => only_ocp(out, &fig7::figure7())?,
        GadgetCmd::Phidiv { i, out } | GadgetCmd::Psibit { i, out } => {
            if *i == 0 {
                return Err(CliError::Usage("the index starts at 1".into()));
            }
            let phi = match cmd {
                GadgetCmd::Phidiv { .. } => fig7::phi_div(*i),
                _ => fig7::psi_bit(*i),
            };
            emit(out, None, &phi, None)?;
        }
        GadgetCmd::Qbf { file, out } => {
            let alpha = qbf::parse_qbf(&read(file)?)?;
            let theta = qbf::qbf_reduce(&alpha)?;
            emit(out, Some(&fig7::figure7()), &theta, Some("tb:0".into()))?;
        }
        GadgetCmd::Prop1 { crr: path, m, out } => {
            let f = formula::parse_crr_formula(&strip_comments(&read(path)?))?;
            let primes = primes_first(*m);
            let g = crr::ocn_of_crr_formula(&f, &primes)?;
            let (ocp, goal) = crr::exit_goal(&g)?;
            let at = format!("{}:M", ocp.name(g.input));
            emit(out, Some(&ocp), &goal, Some(at))?;
        }
        GadgetCmd::Circuit { file, m, out } => {
            let c = circuit::parse_circuit(&read(file)?)?;
            let used = c.inputs().iter().map(|v| v.i).max().unwrap_or(1);
            let primes = primes_first(m.unwrap_or(used));
            let g = circuit::ocn_of_circuit(&c, &primes)?;
            let at = format!("{}:M", g.ocp.name(g.input));
            emit(out, Some(&g.ocp), &circuit::ef_of_circuit(&c), Some(at))?;
        }
        GadgetCmd::Serial {
            nfa,
            pred,
            m,
            eg,
            out,
        } => {
            let a = text::parse_nfa(&read(nfa)?)?;
            let truth = parse_truth_table(&read(pred)?, *m)?;
            let primes = primes_first((*m as usize).max(2));
            let f = crr::crr_formula_of_predicate(&truth, &primes, *m)?;
            let g = crr::crr_equals_formula(&primes, &(BigUint::one() << *m));
            let variant = if *eg {
                SerialVariant::Globally
            } else {
                SerialVariant::Until
            };
            let inst = serial::serial_compose(&a, &f, &g, &primes, variant)?;
            let at = format!("{}:0", inst.ocp.name(inst.start));
            emit(out, Some(&inst.ocp), &inst.goal, Some(at))?;
        }
        GadgetCmd::Wagner { file, m, out } => {
            let (psi, declared) = wagner::parse_dimacs(&read(file)?)?;
            let w = wagner::wagner_reduce(&psi, m.unwrap_or(declared))?;
            let at = format!("{}:0", w.ocp.name(w.start));
            emit(out, Some(&w.ocp), &w.goal, Some(at))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_mdp(args: &MdpArgs) -> Result<ExitCode> {
    let (a, targets) = parse_ocmdp(&read(&args.mdp)?)?;
    let (q, n) = parse_at(a.ocp(), &args.at)?;
    let n = small_counter(&n, args.bound)?;
    if targets.is_empty() {
        return Err(CliError::Usage("the MDP file has no `target` line".into()));
    }
    let frontiers: &[Frontier] = match args.frontier {
        FrontierArg::Opt => &[Frontier::Optimistic],
        FrontierArg::Pess => &[Frontier::Pessimistic],
        FrontierArg::Both => &[Frontier::Pessimistic, Frontier::Optimistic],
    };
    println!("bound: {}", args.bound);
    let mut values = Vec::new();
    let mut all_member = true;
    for &frontier in frontiers {
        let name = match frontier {
            Frontier::Optimistic => "optimistic",
            Frontier::Pessimistic => "pessimistic",
        };
        let fin = induced_finite_mdp(&a, (q, n), args.bound, frontier)?;
        let t = fin.targets(&targets);
        let v = fin.vertex(q, n).expect("start configuration is kept");
        println!("{name}.vertices: {}", fin.num_vertices());
        match args.query {
            MdpQuery::Asure => {
                let member = almost_sure_reach(&fin, &t).contains(v);
                all_member &= member;
                println!("{name}.almost_sure: {member}");
            }
            MdpQuery::Value => {
                let table = exact_max_reach_values_with(&fin, &t, args.budget)?;
                let residual = bellman_residual(&fin, &t, &table);
                println!("{name}.value: {}", table.value(v));
                println!("{name}.bellman_residual: {residual}");
                values.push(table.value(v).clone());
            }
        }
        if let Some(iterations) = args.approx {
            let approx = approximate_max_reach_values(&fin, &t, iterations);
            println!("{name}.approximate_value: {:.6} (preview, {iterations} sweeps)", approx[v]);
        }
    }
    if let [pess, opt] = values.as_slice() {
        let ok = pess <= opt;
        println!(
            "sandwich: pessimistic {pess} <= optimistic {opt}: {}",
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            return Ok(ExitCode::from(1));
        }
    }
    Ok(if all_member {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run_selftest(args: &SelftestArgs) -> Result<ExitCode> {
    let fig = match &args.ocp {
        Some(path) => Some(text::parse_ocp(&read(path)?)?),
        None => None,
    };
    let mut names: Vec<&str> = Vec::new();
    for s in &args.suites {
        if s == "all" {
            names.extend(suites::SUITES);
        } else if let Some(&known) = suites::SUITES.iter().find(|&&k| k == s) {
            names.push(known);
        } else {
            return Err(CliError::Usage(format!(
                "unknown suite `{s}`; known: {}, all",
                suites::SUITES.join(", ")
            )));
        }
    }
    let mut failed = 0;
    for name in names {
        let report = suites::run(name, fig.as_ref()).expect("name checked above");
        println!("{report}");
        failed += usize::from(!report.ok());
    }
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Check(args) => run_check(args),
        Command::Gadget(cmd) => run_gadget(cmd),
        Command::Mdp(args) => run_mdp(args),
        Command::Selftest(args) => run_selftest(args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counters() {
        assert_eq!(parse_counter("0b101").unwrap(), BigUint::from(5u32));
        assert_eq!(parse_counter("12").unwrap(), BigUint::from(12u32));
        assert!(parse_counter("0x1").is_err());
        assert!(parse_counter("-1").is_err());
    }

    #[test]
    fn truth_tables() {
        assert_eq!(parse_truth_table("10 01\n", 2).unwrap(), [true, false, false, true]);
        assert!(parse_truth_table("101", 2).is_err());
        assert!(parse_truth_table("10x1", 2).is_err());
    }

    #[test]
    fn verdict_record_has_no_time() {
        let mut v = Verdict::new("periodic");
        v.answer = Answer::True;
        v.field("period", 12);
        assert_eq!(v.render(true, 5), "answer=true\nengine=periodic\nperiod=12\n");
        assert!(v.render(false, 5).ends_with("time: 5 ms\n"));
    }
}

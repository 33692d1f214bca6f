//! `twf`: check, transform and export temporal workflows.
//!
//! Exit status: 0 for a positive verdict or success, 1 for a negative
//! verdict (unsatisfiable, inconsistent, subsumption unknown), 2 for usage,
//! parse and budget errors.

mod report;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use twf_core::allen::{composition_table, render_table, verify_composition_table};
use twf_core::dsl::{self, Document};
use twf_core::extended::{self, sequence_free, subsumes_sufficient, ExtendedError, ExtendedWorkflow};
use twf_core::oracle::{check_model, hull, theta_of_source, Model, OracleError, DEFAULT_ATOM_BUDGET};
use twf_core::qcn::{find_scenario, Schedule};
use twf_core::workflow::{normalize, quote_name, Kind, SubsumptionVerdict};

use report::{Interval, Verdict, VerdictValue};

#[derive(Parser)]
#[command(name = "twf", version, about = "Workflows with Allen interval constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bounded satisfiability, with a witness schedule when one exists.
    Check {
        file: PathBuf,
        /// Maximum number of iterations explored per loop.
        #[arg(long, default_value_t = 3)]
        unroll_bound: u32,
        /// Skip resolutions that execute more atoms than this.
        #[arg(long, default_value_t = DEFAULT_ATOM_BUDGET)]
        atom_budget: usize,
        #[arg(long)]
        json: bool,
    },
    /// Consistency of the network of the sequence-free form.
    StrongCheck {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// One scenario of the sequence-free network and a schedule realizing it.
    Scenario { file: PathBuf },
    /// Print the canonical form.
    Normalize { file: PathBuf },
    /// Print the sequence-free form.
    Seqfree { file: PathBuf },
    /// Sufficient test for FILE1 ⊑ FILE2.
    Subsumes { file1: PathBuf, file2: PathBuf },
    /// Graphviz export.
    Dot {
        file: PathBuf,
        /// Output file; standard output when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// The 13×13 composition table.
    Table {
        /// Regenerate the table from interval endpoints and compare.
        #[arg(long)]
        verify: bool,
    },
    /// Cross-check the constraint solver against brute-force enumeration.
    OracleVerify {
        #[arg(long, default_value_t = 500)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

/// An error that ends the run with status 2.
struct Fatal(String);

impl From<ExtendedError> for Fatal {
    fn from(e: ExtendedError) -> Self {
        Fatal(e.to_string())
    }
}

fn load(path: &Path) -> Result<Document, Fatal> {
    let text = fs::read_to_string(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
    dsl::parse(&text).map_err(|diags| {
        let lines: Vec<String> = diags.iter().map(|d| format!("{}:{d}", path.display())).collect();
        Fatal(lines.join("\n"))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Fatal(msg)) => {
            eprintln!("twf: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<u8, Fatal> {
    match command {
        Command::Check { file, unroll_bound, atom_budget, json } => check(&file, unroll_bound, atom_budget, json),
        Command::StrongCheck { file, json } => strong_check(&file, json),
        Command::Scenario { file } => scenario(&file),
        Command::Normalize { file } => {
            let doc = load(&file)?;
            let ew = ExtendedWorkflow::new(normalize(&doc.ext.workflow), doc.ext.network.clone())?;
            print!("{}", dsl::print(&doc.name, &ew));
            Ok(0)
        }
        Command::Seqfree { file } => {
            let doc = load(&file)?;
            print!("{}", dsl::print(&doc.name, &sequence_free(&doc.ext)));
            Ok(0)
        }
        Command::Subsumes { file1, file2 } => {
            let (d1, d2) = (load(&file1)?, load(&file2)?);
            let v = subsumes_sufficient(&d1.ext, &d2.ext)?;
            println!("{}", if v == SubsumptionVerdict::Holds { "holds" } else { "unknown" });
            Ok(if v.holds() { 0 } else { 1 })
        }
        Command::Dot { file, output } => {
            let doc = load(&file)?;
            let dot = dsl::export_dot(&doc.name, &doc.ext);
            match output {
                Some(out) => fs::write(&out, dot).map_err(|e| Fatal(format!("{}: {e}", out.display())))?,
                None => print!("{dot}"),
            }
            Ok(0)
        }
        Command::Table { verify } => {
            print!("{}", render_table(&composition_table()));
            if verify {
                let matching = verify_composition_table();
                println!("{matching}/169 entries match");
                return Ok(if matching == 169 { 0 } else { 1 });
            }
            Ok(0)
        }
        Command::OracleVerify { instances, seed, json } => Ok(verify::run(instances, seed, json)),
    }
}

fn has_loop(ew: &ExtendedWorkflow) -> bool {
    ew.workflow.count_nodes(|k| matches!(k, Kind::Loop(_))) > 0
}

/// Hull of every constrained node, one line per executed instance.
fn variable_hulls(ew: &ExtendedWorkflow, model: &Model) -> Vec<(String, Vec<u32>, Interval)> {
    let mut out = Vec::new();
    for (var, path) in &ew.r_map {
        let Ok(runs) = theta_of_source(model, path) else { continue };
        for (iterations, parts) in runs {
            if let Some(h) = hull(&parts) {
                out.push((var.clone(), iterations, Interval::from(&h)));
            }
        }
    }
    out
}

fn check(file: &Path, bound: u32, budget: usize, json: bool) -> Result<u8, Fatal> {
    if bound == 0 {
        return Err(Fatal("--unroll-bound must be at least 1".into()));
    }
    let doc = load(file)?;
    let ew = &doc.ext;
    let mut v = Verdict::new("check", file);
    v.unroll_bound = Some(bound);
    v.bounded = has_loop(ew);
    let model = match extended::find_model(ew, bound, budget) {
        Ok(m) => m,
        Err(ExtendedError::Oracle(OracleError::BudgetExceeded { atoms, budget })) => {
            return Err(Fatal(format!(
                "undecided: a resolution executes {atoms} atoms, above the budget of {budget} (raise --atom-budget or lower --unroll-bound)"
            )));
        }
        Err(e) => return Err(e.into()),
    };
    let code = match model {
        Some(m) => {
            let ok = check_model(&ew.workflow, &m.resolved, &m.assignment, &ew.network, &ew.r_map)
                .map_err(|e| Fatal(e.to_string()))?;
            if !ok {
                return Err(Fatal("internal error: witness failed re-verification".into()));
            }
            v.verdict = VerdictValue::Bool(true);
            v.witness = Some(report::Witness::from_model(&m, variable_hulls(ew, &m)));
            0
        }
        None => {
            v.verdict = VerdictValue::Bool(false);
            1
        }
    };
    v.emit(json, if code == 0 { "satisfiable" } else { "unsatisfiable" });
    Ok(code)
}

/// Re-checks a schedule against the network it came from before it is shown.
fn checked(schedule: Schedule, ew: &ExtendedWorkflow) -> Result<Schedule, Fatal> {
    if schedule.satisfies(&ew.network) {
        Ok(schedule)
    } else {
        Err(Fatal("internal error: schedule failed re-verification".into()))
    }
}

fn strong_check(file: &Path, json: bool) -> Result<u8, Fatal> {
    let doc = load(file)?;
    let sf = sequence_free(&doc.ext);
    let mut v = Verdict::new("strong-check", file);
    let code = match find_scenario(&sf.network) {
        Some((_, schedule)) => {
            v.verdict = VerdictValue::Bool(true);
            v.witness = Some(report::Witness::from_schedule(&checked(schedule, &sf)?));
            0
        }
        None => {
            v.verdict = VerdictValue::Bool(false);
            1
        }
    };
    v.emit(json, if code == 0 { "strongly satisfiable" } else { "not strongly satisfiable" });
    Ok(code)
}

fn scenario(file: &Path) -> Result<u8, Fatal> {
    let doc = load(file)?;
    let sf = sequence_free(&doc.ext);
    let Some((sc, schedule)) = find_scenario(&sf.network) else {
        println!("no scenario: the sequence-free network is inconsistent");
        return Ok(1);
    };
    let schedule = checked(schedule, &sf)?;
    let vars = sf.network.variables();
    println!("scenario:");
    for i in 0..vars.len() {
        for j in i + 1..vars.len() {
            println!("  {} {{{}}} {};", quote_name(&vars[i]), sc.relation(i, j).symbol(), quote_name(&vars[j]));
        }
    }
    println!("schedule:");
    for line in schedule.to_string().lines() {
        println!("  {line}");
    }
    Ok(0)
}

// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

//! The `patchverify` command line.
//!
//! [`run`] performs a command and returns what the process should print and
//! its exit status, so it can be driven without spawning a process. Exit
//! codes: [`EXIT_OK`], [`EXIT_REFUTED`] for a semantic refutation (a
//! divergence or a refuted goal), [`EXIT_ERROR`] for malformed input, a
//! failed update rule or an unsupported transformation.

use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::bytecode::{parse_method, serialize_method, ClassHierarchy, MethodMap};
use crate::patch::{apply_patch, parse_patch, Patch, PatchError};
use crate::predicate::{parse_spec, Atom, Bound, PredError, Spec};
use crate::triple::{
    chain_obligations, check_obligations, emit_obligations, implication_obligations, transform_triple, GoalVerdict,
    Obligation, ObligationSet, Triple, TripleError, TripleKind,
};
use crate::verifier::{
    apply_patch_incremental, check_equivalence, render_vsem, verify_method, vsem_json, Configuration, TypeState,
    VerifyError,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_REFUTED: u8 = 1;
pub const EXIT_ERROR: u8 = 2;

/// Version of the JSON report layout.
pub const SCHEMA: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "patchverify",
    version,
    about = "Verify bytecode patches and carry specifications through them"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply a patch and print the patched method with an edit listing.
    Apply(ApplyArgs),
    /// Apply a patch incrementally and compare the result with a reference version.
    Verify(VerifyArgs),
    /// Carry a specification through an insertion patch and check it.
    Triple(TripleArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    #[value(alias = "structured")]
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Class hierarchy file with `B extends A` lines.
    #[arg(long, value_name = "PATH")]
    pub hierarchy: Option<PathBuf>,
    /// Output format; `structured` is accepted for `json`
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    /// Method before the patch
    #[arg(long, value_name = "PATH")]
    pub v1: PathBuf,
    /// Patch file with one `add`, `del` or `mod` item per line
    #[arg(long, value_name = "PATH")]
    pub patch: PathBuf,
    /// Write the patched method here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Method before the patch
    #[arg(long, value_name = "PATH")]
    pub v1: PathBuf,
    /// Patch file with one `add`, `del` or `mod` item per line
    #[arg(long, value_name = "PATH")]
    pub patch: PathBuf,
    /// Reference version the patched method is compared with
    #[arg(long, value_name = "PATH")]
    pub v2: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TripleArgs {
    /// Method before the patch
    #[arg(long, value_name = "PATH")]
    pub v1: PathBuf,
    /// Specification of the first version (`pre:` and `post:` sections).
    #[arg(long, value_name = "PATH")]
    pub spec: PathBuf,
    /// Patch file with one `add`, `del` or `mod` item per line
    #[arg(long, value_name = "PATH")]
    pub patch: PathBuf,
    /// Specification the patched method should meet.
    #[arg(long, value_name = "PATH")]
    pub target_spec: Option<PathBuf>,
    /// Bounded domain radius: values range over [-N, N-1].
    #[arg(long, value_name = "N", env = "PATCHVERIFY_BOUND", default_value_t = 8,
          value_parser = clap::value_parser!(i64).range(1..=1_000_000))]
    pub bound: i64,
    /// Largest number of atoms a bounded check may enumerate.
    #[arg(long, value_name = "N", default_value_t = 8)]
    pub atom_budget: usize,
    /// Write the proof obligations as an SMT-LIB 2 script.
    #[arg(long, value_name = "PATH")]
    pub emit_obligations: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {reason}")]
    Input { path: String, reason: String },
    #[error(transparent)]
    Patch(#[from] PatchError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Triple(#[from] TripleError),
    #[error(transparent)]
    Pred(#[from] PredError),
}

/// What the process prints and how it exits.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn error(e: &CliError) -> Outcome {
        Outcome {
            code: EXIT_ERROR,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn input<T, E: std::fmt::Display>(path: &Path, parsed: Result<T, E>) -> Result<T, CliError> {
    parsed.map_err(|e| CliError::Input {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

fn load_method(path: &Path) -> Result<MethodMap, CliError> {
    input(path, parse_method(&read(path)?))
}

fn load_patch(path: &Path) -> Result<Patch, CliError> {
    input(path, parse_patch(&read(path)?))
}

fn load_spec(path: &Path) -> Result<Spec, CliError> {
    input(path, parse_spec(&read(path)?))
}

fn load_hierarchy(path: Option<&Path>) -> Result<ClassHierarchy, CliError> {
    match path {
        Some(p) => input(p, ClassHierarchy::parse(&read(p)?)),
        None => Ok(ClassHierarchy::flat()),
    }
}

fn json_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Parses `args` (program name first) and runs the command. Usage errors
/// are reported like any other input error.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                Outcome {
                    code: EXIT_ERROR,
                    stderr: text,
                    ..Outcome::default()
                }
            } else {
                Outcome {
                    code: EXIT_OK,
                    stdout: text,
                    ..Outcome::default()
                }
            }
        }
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let result = match &cli.command {
        Command::Apply(a) => cmd_apply(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Triple(a) => cmd_triple(a),
    };
    result.unwrap_or_else(|e| Outcome::error(&e))
}

pub fn cmd_apply(args: &ApplyArgs) -> Result<Outcome, CliError> {
    let m = load_method(&args.v1)?;
    let patch = load_patch(&args.patch)?;
    let hier = load_hierarchy(args.common.hierarchy.as_deref())?;
    let patched = apply_patch(&m, &patch)?;
    let mut text = serialize_method(&patched.base);
    if !text.is_empty() {
        text.push('\n');
    }
    let typing = verify_method(&patched.base, &TypeState::entry(&patched.base), &hier);
    if let Some(out) = &args.out {
        write_file(out, &text)?;
    }

    let mut outcome = Outcome::default();
    match args.common.format {
        Format::Text => {
            let mut listing = patched.listing();
            match &typing {
                Ok(v) => {
                    listing.push_str("# types\n");
                    listing.push_str(&render_vsem(v));
                }
                Err(e) => {
                    let _ = writeln!(listing, "# types: rejected: {e}");
                }
            }
            if args.out.is_some() {
                outcome.stdout = listing;
            } else {
                outcome.stdout = text;
                outcome.stderr = listing;
            }
        }
        Format::Json => {
            let edits: Vec<Value> = patched
                .annotations
                .iter()
                .map(|a| {
                    json!({
                        "index": a.index,
                        "item": a.item.to_string(),
                        "line": a.line,
                        "final_line": a.final_line,
                        "replaced": a.replaced.as_ref().map(ToString::to_string),
                    })
                })
                .collect();
            let (types, rejected) = match &typing {
                Ok(v) => (vsem_json(v), Value::Null),
                Err(e) => (Value::Null, Value::String(e.to_string())),
            };
            outcome.stdout = json_text(&json!({
                "schema": SCHEMA,
                "command": "apply",
                "method": text,
                "edits": edits,
                "types": types,
                "type_error": rejected,
            }));
        }
    }
    Ok(outcome)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<Outcome, CliError> {
    let v1 = load_method(&args.v1)?;
    let patch = load_patch(&args.patch)?;
    let v2 = load_method(&args.v2)?;
    let hier = load_hierarchy(args.common.hierarchy.as_deref())?;

    let start = Configuration::verify(&v1, &TypeState::entry(&v1), &hier)?;
    let patched = apply_patch_incremental(&start, &patch, &hier)?;
    let reference = verify_method(&v2, &TypeState::entry(&v2), &hier)?;
    let (left, right) = (patched.vsem(), reference);
    let verdict = check_equivalence(&left, &right);

    let code = if verdict.is_equivalent() { EXIT_OK } else { EXIT_REFUTED };
    let stdout = match args.common.format {
        Format::Text => {
            let mut s = format!("{verdict}\n");
            if !verdict.is_equivalent() {
                let _ = write!(
                    s,
                    "# patched\n{}# reference\n{}",
                    render_vsem(&left),
                    render_vsem(&right)
                );
            }
            s
        }
        Format::Json => {
            let mut v = json!({
                "schema": SCHEMA,
                "command": "verify",
                "patched": vsem_json(&left),
                "reference": vsem_json(&right),
            });
            let verdict_value = serde_json::to_value(&verdict).expect("verdicts serialize");
            v["result"] = verdict_value;
            json_text(&v)
        }
    };
    Ok(Outcome {
        code,
        stdout,
        stderr: String::new(),
    })
}

fn witness_json(v: &GoalVerdict) -> Value {
    match v {
        GoalVerdict::Proved => json!({ "verdict": "proved" }),
        GoalVerdict::Refuted(cx) => {
            let cx: serde_json::Map<String, Value> = cx
                .iter()
                .map(|(a, v): (&Atom, &i64)| (a.to_string(), json!(v)))
                .collect();
            json!({ "verdict": "refuted", "counterexample": cx })
        }
    }
}

fn goal_json(ob: &Obligation, v: &GoalVerdict) -> Value {
    let mut out = witness_json(v);
    out["name"] = json!(ob.name);
    out["hypothesis"] = json!(ob.hyp.to_string());
    out["conclusion"] = json!(ob.concl.to_string());
    out
}

pub fn cmd_triple(args: &TripleArgs) -> Result<Outcome, CliError> {
    let m1 = load_method(&args.v1)?;
    let spec = load_spec(&args.spec)?;
    let patch = load_patch(&args.patch)?;
    let target = args.target_spec.as_deref().map(load_spec).transpose()?;
    let hier = load_hierarchy(args.common.hierarchy.as_deref())?;
    let bound = Bound {
        radius: args.bound,
        max_atoms: args.atom_budget,
    };

    let calc = transform_triple(&spec.pre, &spec.post, &m1, &patch, &hier, &bound)?;
    let chains = chain_obligations(&spec.pre, &spec.post, &calc)?;
    let chain_verdicts = check_obligations(&chains, &bound)?;
    let goals = match &target {
        Some(t) => {
            let t = Triple::new(t.pre.clone(), calc.method.clone(), t.post.clone(), TripleKind::Target);
            implication_obligations(&calc, &t)?
        }
        None => ObligationSet::default(),
    };
    let goal_verdicts = check_obligations(&goals, &bound)?;

    if let Some(path) = &args.emit_obligations {
        let all = ObligationSet {
            goals: chains.goals.iter().chain(&goals.goals).cloned().collect(),
        };
        write_file(path, &emit_obligations(&all))?;
    }

    // The third chain goal is advisory: it does not affect the exit status.
    let refuted = chain_verdicts[..2].iter().chain(&goal_verdicts).any(|v| !v.is_proved());
    let code = if refuted { EXIT_REFUTED } else { EXIT_OK };
    let stdout = match args.common.format {
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "bound: [{}, {}], atom budget {}",
                -bound.radius,
                bound.radius - 1,
                bound.max_atoms
            );
            let _ = writeln!(s, "calculated: {calc}");
            let _ = writeln!(s, "pre: {}", calc.pre);
            let _ = writeln!(s, "post: {}", calc.post);
            for (ob, v) in chains.goals.iter().zip(&chain_verdicts) {
                if ob.name == "triple" {
                    if !v.is_proved() {
                        let _ = writeln!(s, "warning: pre does not guarantee post on the patched method ({v})");
                    }
                } else {
                    let _ = writeln!(s, "chain {}: {v}", ob.name);
                }
            }
            for (ob, v) in goals.goals.iter().zip(&goal_verdicts) {
                let _ = writeln!(s, "goal {} ({} => {}): {v}", ob.name, ob.hyp, ob.concl);
            }
            s
        }
        Format::Json => {
            let instrs: Vec<String> = calc.method.instructions().map(ToString::to_string).collect();
            let chain_json: Vec<Value> = chains
                .goals
                .iter()
                .zip(&chain_verdicts)
                .map(|(o, v)| goal_json(o, v))
                .collect();
            let goal_json: Vec<Value> = goals
                .goals
                .iter()
                .zip(&goal_verdicts)
                .map(|(o, v)| goal_json(o, v))
                .collect();
            json_text(&json!({
                "schema": SCHEMA,
                "command": "triple",
                "bound": bound.radius,
                "atom_budget": bound.max_atoms,
                "calculated": { "pre": calc.pre.to_string(), "post": calc.post.to_string(), "method": instrs },
                "chains": chain_json,
                "goals": goal_json,
            }))
        }
    };
    Ok(Outcome {
        code,
        stdout,
        stderr: String::new(),
    })
}

// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

//! SMT-LIB 2 export of implication goals. Each goal is checked in its own
//! `push`/`pop` scope as `(assert (not (=> H C)))`, so `unsat` means the
//! goal is valid.

use std::collections::BTreeSet;
use std::fmt::Write;

use super::ObligationSet;
use crate::predicate::{simplify, CmpOp, Formula, Term};

fn is_simple_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
}

fn symbol(name: &str) -> String {
    if is_simple_symbol(name) {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

fn term_symbol(t: &Term) -> Option<String> {
    match t {
        Term::Var(v) => Some(symbol(v)),
        Term::Slot(k) => Some(format!("s{k}")),
        Term::FieldOf { .. } => Some(format!("|{t}|")),
        _ => None,
    }
}

fn term(t: &Term, out: &mut String) {
    match t {
        Term::Int(k) if *k < 0 => {
            let _ = write!(out, "(- {})", k.unsigned_abs());
        }
        Term::Int(k) => {
            let _ = write!(out, "{k}");
        }
        Term::Plus(a, b) => {
            out.push_str("(+ ");
            term(a, out);
            out.push(' ');
            term(b, out);
            out.push(')');
        }
        other => out.push_str(&term_symbol(other).expect("atomic term")),
    }
}

fn symbols(f: &Formula, fresh_only: Option<bool>, out: &mut BTreeSet<String>) {
    fn walk(t: &Term, fresh_only: Option<bool>, out: &mut BTreeSet<String>) {
        match t {
            Term::Plus(a, b) => {
                walk(a, fresh_only, out);
                walk(b, fresh_only, out);
            }
            Term::Int(_) => {}
            other => {
                let fresh = matches!(other, Term::Var(v) if v.contains('\''));
                if fresh_only.is_none_or(|want| want == fresh) {
                    out.insert(term_symbol(other).expect("atomic term"));
                }
            }
        }
    }
    match f {
        Formula::True | Formula::False => {}
        Formula::Cmp(a, _, b) => {
            walk(a, fresh_only, out);
            walk(b, fresh_only, out);
        }
        Formula::Not(g) => symbols(g, fresh_only, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            symbols(a, fresh_only, out);
            symbols(b, fresh_only, out);
        }
    }
}

fn formula(f: &Formula, out: &mut String) {
    let binary = |op: &str, a: &Formula, b: &Formula, out: &mut String| {
        let _ = write!(out, "({op} ");
        formula(a, out);
        out.push(' ');
        formula(b, out);
        out.push(')');
    };
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Cmp(a, CmpOp::Ne, b) => {
            out.push_str("(not (= ");
            term(a, out);
            out.push(' ');
            term(b, out);
            out.push_str("))");
        }
        Formula::Cmp(a, op, b) => {
            let _ = write!(out, "({} ", op.symbol());
            term(a, out);
            out.push(' ');
            term(b, out);
            out.push(')');
        }
        Formula::Not(g) => {
            out.push_str("(not ");
            formula(g, out);
            out.push(')');
        }
        Formula::And(a, b) => binary("and", a, b, out),
        Formula::Or(a, b) => binary("or", a, b, out),
        Formula::Implies(a, b) => binary("=>", a, b, out),
    }
}

/// SMT-LIB 2 script for the goals.
///
/// Fresh variables of a hypothesis are declared as constants. Fresh
/// variables left in a conclusion after simplification are bound by
/// `exists`, and the script then declares the `LIA` logic instead of
/// `QF_LIA`.
pub fn emit_obligations(obs: &ObligationSet) -> String {
    let goals: Vec<(String, Formula, Formula)> = obs
        .goals
        .iter()
        .map(|g| (g.name.clone(), simplify(&g.hyp), simplify(&g.concl)))
        .collect();
    let mut declared = BTreeSet::new();
    let mut quantified = false;
    for (_, h, c) in &goals {
        symbols(h, None, &mut declared);
        symbols(c, Some(false), &mut declared);
        let mut bound_in_c = BTreeSet::new();
        symbols(c, Some(true), &mut bound_in_c);
        quantified |= !bound_in_c.is_empty();
    }
    let mut out = String::new();
    let _ = writeln!(out, "(set-logic {})", if quantified { "LIA" } else { "QF_LIA" });
    for s in &declared {
        let _ = writeln!(out, "(declare-const {s} Int)");
    }
    for (name, h, c) in &goals {
        let _ = writeln!(out, "; goal {name}");
        out.push_str("(push 1)\n(assert (not (=> ");
        formula(h, &mut out);
        out.push(' ');
        let mut exists = BTreeSet::new();
        symbols(c, Some(true), &mut exists);
        if exists.is_empty() {
            formula(c, &mut out);
        } else {
            out.push_str("(exists (");
            let binders: Vec<String> = exists.iter().map(|s| format!("({s} Int)")).collect();
            out.push_str(&binders.join(" "));
            out.push_str(") ");
            formula(c, &mut out);
            out.push(')');
        }
        out.push_str(")))\n(check-sat)\n(pop 1)\n");
    }
    out
}

// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

//! Quantifier-free assertions over locals and operand stack slots, with
//! weakest-precondition and strongest-postcondition transformers for
//! straight-line code.
//!
//! `s0` is the top of the operand stack, `s1` the entry below it, and so on.
//! Names containing `'` are fresh variables introduced by [`sp_segment`]
//! for values the code overwrote; they are implicitly existential.

mod bounded;
mod calc;
mod parse;
mod simplify;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::bytecode::{Instruction, Line};

pub use bounded::{counterexample, equivalent, eval, implies, Bound};
pub use calc::{fresh_name, sp_instr, sp_segment, wp_instr, wp_segment};
pub use parse::{parse_formula, parse_spec, Spec};
pub use simplify::simplify;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PredError {
    #[error("`{instr}` is outside the supported wp/sp fragment")]
    UnsupportedInstruction { instr: Box<Instruction> },
    #[error("line {line}: segment is not straight-line")]
    NotStraightLine { line: Line },
    #[error("line {line}: stack shape: {reason}")]
    StackShapeError { line: Line, reason: String },
    #[error("{atoms} free atoms exceed the budget of {budget}")]
    AtomBudgetExceeded { atoms: usize, budget: usize },
    #[error("field access `{0}` cannot be evaluated")]
    FieldAccess(String),
    #[error("no value for `{0}`")]
    Unbound(String),
    #[error("line {line}, column {column}: {reason}")]
    Parse { line: usize, column: usize, reason: String },
    #[error("spec: {0}")]
    Spec(String),
}

/// A variable or a stack slot: the things a formula can be evaluated over.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Var(String),
    Slot(u32),
}

impl Atom {
    pub fn is_fresh(&self) -> bool {
        matches!(self, Atom::Var(v) if v.contains('\''))
    }

    pub fn term(&self) -> Term {
        match self {
            Atom::Var(v) => Term::Var(v.clone()),
            Atom::Slot(k) => Term::Slot(*k),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Var(v) => f.write_str(v),
            Atom::Slot(k) => write!(f, "s{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Int(i64),
    Var(String),
    Slot(u32),
    Plus(Box<Term>, Box<Term>),
    FieldOf {
        base: Box<Term>,
        class: String,
        field: String,
    },
}

impl Term {
    pub fn var(x: &str) -> Term {
        Term::Var(x.to_string())
    }

    pub fn plus(a: Term, b: Term) -> Term {
        Term::Plus(Box::new(a), Box::new(b))
    }

    fn atom(&self) -> Option<Atom> {
        match self {
            Term::Var(v) => Some(Atom::Var(v.clone())),
            Term::Slot(k) => Some(Atom::Slot(*k)),
            _ => None,
        }
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Atom>) {
        match self {
            Term::Int(_) => {}
            Term::Var(_) | Term::Slot(_) => {
                out.insert(self.atom().expect("atomic term"));
            }
            Term::Plus(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Term::FieldOf { base, .. } => base.collect_atoms(out),
        }
    }

    fn has_field(&self) -> bool {
        match self {
            Term::FieldOf { .. } => true,
            Term::Plus(a, b) => a.has_field() || b.has_field(),
            _ => false,
        }
    }

    fn substitute(&self, bindings: &BTreeMap<Atom, Term>) -> Term {
        match self {
            Term::Int(_) => self.clone(),
            Term::Var(_) | Term::Slot(_) => bindings
                .get(&self.atom().expect("atomic term"))
                .cloned()
                .unwrap_or_else(|| self.clone()),
            Term::Plus(a, b) => Term::plus(a.substitute(bindings), b.substitute(bindings)),
            Term::FieldOf { base, class, field } => Term::FieldOf {
                base: Box::new(base.substitute(bindings)),
                class: class.clone(),
                field: field.clone(),
            },
        }
    }
}

impl From<i64> for Term {
    fn from(k: i64) -> Term {
        Term::Int(k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// `a op b` iff `!(a negate(op) b)`.
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    /// `a op b` iff `b flip(op) a`.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            other => other,
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Cmp(Term, CmpOp, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn cmp(a: impl Into<Term>, op: CmpOp, b: impl Into<Term>) -> Formula {
        Formula::Cmp(a.into(), op, b.into())
    }

    pub fn eq(a: impl Into<Term>, b: impl Into<Term>) -> Formula {
        Formula::cmp(a, CmpOp::Eq, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Left-nested conjunction; `True` when empty.
    pub fn conj(parts: impl IntoIterator<Item = Formula>) -> Formula {
        parts.into_iter().reduce(Formula::and).unwrap_or(Formula::True)
    }

    /// Top-level conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(a, b) => {
                let mut out = a.conjuncts();
                out.extend(b.conjuncts());
                out
            }
            other => vec![other],
        }
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Atom>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(a, _, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Formula::Not(f) => f.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Largest slot index mentioned, if any.
    pub fn max_slot(&self) -> Option<u32> {
        self.atoms()
            .into_iter()
            .filter_map(|a| match a {
                Atom::Slot(k) => Some(k),
                Atom::Var(_) => None,
            })
            .max()
    }

    pub fn has_field(&self) -> bool {
        match self {
            Formula::True | Formula::False => false,
            Formula::Cmp(a, _, b) => a.has_field() || b.has_field(),
            Formula::Not(f) => f.has_field(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => a.has_field() || b.has_field(),
        }
    }

    /// Simultaneous substitution: every binding reads the original formula.
    pub fn substitute(&self, bindings: &BTreeMap<Atom, Term>) -> Formula {
        if bindings.is_empty() {
            return self.clone();
        }
        let sub = |f: &Formula| Box::new(f.substitute(bindings));
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Cmp(a, op, b) => Formula::Cmp(a.substitute(bindings), *op, b.substitute(bindings)),
            Formula::Not(f) => Formula::Not(sub(f)),
            Formula::And(a, b) => Formula::And(sub(a), sub(b)),
            Formula::Or(a, b) => Formula::Or(sub(a), sub(b)),
            Formula::Implies(a, b) => Formula::Implies(sub(a), sub(b)),
        }
    }
}

fn term_prec(t: &Term) -> u8 {
    match t {
        Term::Plus(..) => 0,
        Term::Int(k) if *k < 0 => 1,
        _ => 2,
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(k) => write!(f, "{k}"),
            Term::Var(v) => f.write_str(v),
            Term::Slot(k) => write!(f, "s{k}"),
            Term::Plus(a, b) => {
                write!(f, "{a} + ")?;
                if term_prec(b) == 0 {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Term::FieldOf { base, class, field } => {
                if term_prec(base) < 2 {
                    write!(f, "({base}).{class}.{field}")
                } else {
                    write!(f, "{base}.{class}.{field}")
                }
            }
        }
    }
}

/// Binding strength; larger binds tighter.
fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Implies(..) => 0,
        Formula::Or(..) => 1,
        Formula::And(..) => 2,
        Formula::Not(_) => 3,
        _ => 4,
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, g: &Formula, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({g})")
    } else {
        write!(f, "{g}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = prec(self);
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Cmp(a, op, b) => write!(f, "{a} {} {b}", op.symbol()),
            Formula::Not(g) => {
                f.write_str("!")?;
                write_operand(f, g, prec(g) < p)
            }
            // `&&` and `||` associate to the left, `->` to the right.
            Formula::And(a, b) | Formula::Or(a, b) => {
                write_operand(f, a, prec(a) < p)?;
                f.write_str(if p == 2 { " && " } else { " || " })?;
                write_operand(f, b, prec(b) <= p)
            }
            Formula::Implies(a, b) => {
                write_operand(f, a, prec(a) <= p)?;
                f.write_str(" -> ")?;
                write_operand(f, b, prec(b) < p)
            }
        }
    }
}

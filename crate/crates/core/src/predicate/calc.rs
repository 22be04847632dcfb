// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use super::{Atom, Formula, PredError, Term};
use crate::bytecode::{Instruction, Line, MethodMap};

fn unsupported(instr: &Instruction) -> PredError {
    PredError::UnsupportedInstruction {
        instr: Box::new(instr.clone()),
    }
}

/// Bindings `s_k := s_{k+delta}` for every slot `k >= from` occurring in `f`.
fn shift_slots(f: &Formula, from: u32, delta: i64) -> BTreeMap<Atom, Term> {
    f.atoms()
        .into_iter()
        .filter_map(|a| match a {
            Atom::Slot(k) if k >= from => Some((Atom::Slot(k), Term::Slot((k as i64 + delta) as u32))),
            _ => None,
        })
        .collect()
}

fn slot(k: u32) -> Term {
    Term::Slot(k)
}

/// Weakest precondition of one instruction, without shape checks.
///
/// `goto` is treated as a fall-through; [`wp_segment`] rejects other gotos.
pub fn wp_instr(instr: &Instruction, q: &Formula) -> Result<Formula, PredError> {
    let bindings = match instr {
        Instruction::Inc => [(Atom::Slot(0), Term::plus(slot(0), 1.into()))].into(),
        Instruction::Add => {
            let mut b = shift_slots(q, 1, 1);
            b.insert(Atom::Slot(0), Term::plus(slot(1), slot(0)));
            b
        }
        Instruction::Pop => shift_slots(q, 0, 1),
        Instruction::Load(x) => {
            let mut b = shift_slots(q, 1, -1);
            b.insert(Atom::Slot(0), Term::var(x));
            b
        }
        Instruction::Store(x) => {
            let mut b = shift_slots(q, 0, 1);
            b.insert(Atom::Var(x.clone()), slot(0));
            b
        }
        Instruction::Goto(_) => BTreeMap::new(),
        other => return Err(unsupported(other)),
    };
    Ok(q.substitute(&bindings))
}

/// Name of the fresh variable holding `atom`'s value just before `line`.
/// Primes are appended until the name is unused in `f`.
pub fn fresh_name(atom: &Atom, line: Option<Line>, f: &Formula) -> String {
    let used = f.atoms();
    let mut name = format!("{atom}'{}", line.map(|l| l.to_string()).unwrap_or_default());
    while used.contains(&Atom::Var(name.clone())) {
        name.push('\'');
    }
    name
}

fn underflow(line: Line, instr: &Instruction, depth: usize) -> PredError {
    PredError::StackShapeError {
        line,
        reason: format!(
            "`{instr}` needs {} operand(s), the stack holds {depth}",
            instr.stack_inputs()
        ),
    }
}

fn supported(instr: &Instruction) -> bool {
    matches!(
        instr,
        Instruction::Inc
            | Instruction::Add
            | Instruction::Pop
            | Instruction::Load(_)
            | Instruction::Store(_)
            | Instruction::Goto(_)
    )
}

fn sp_at(p: &Formula, instr: &Instruction, depth: usize, line: Option<Line>) -> Result<Formula, PredError> {
    if !supported(instr) {
        return Err(unsupported(instr));
    }
    if instr.stack_inputs() > depth {
        return Err(underflow(line.unwrap_or(0), instr, depth));
    }
    let fresh = |atom: Atom| Term::Var(fresh_name(&atom, line, p));
    Ok(match instr {
        Instruction::Load(x) => Formula::and(p.substitute(&shift_slots(p, 0, 1)), Formula::eq(slot(0), Term::var(x))),
        Instruction::Store(x) => {
            let mut b = shift_slots(p, 1, -1);
            b.insert(Atom::Var(x.clone()), fresh(Atom::Var(x.clone())));
            b.insert(Atom::Slot(0), Term::var(x));
            p.substitute(&b)
        }
        Instruction::Inc => {
            let old = fresh(Atom::Slot(0));
            let b = [(Atom::Slot(0), old.clone())].into();
            Formula::and(p.substitute(&b), Formula::eq(slot(0), Term::plus(old, 1.into())))
        }
        Instruction::Add => {
            let (a, b_old) = (fresh(Atom::Slot(0)), fresh(Atom::Slot(1)));
            let mut b = shift_slots(p, 2, -1);
            b.insert(Atom::Slot(0), a.clone());
            b.insert(Atom::Slot(1), b_old.clone());
            Formula::and(p.substitute(&b), Formula::eq(slot(0), Term::plus(b_old, a)))
        }
        Instruction::Pop => {
            let mut b = shift_slots(p, 1, -1);
            b.insert(Atom::Slot(0), fresh(Atom::Slot(0)));
            p.substitute(&b)
        }
        _ => p.clone(),
    })
}

/// Strongest postcondition of one instruction executed on a stack of
/// `depth` entries.
pub fn sp_instr(p: &Formula, instr: &Instruction, depth: usize) -> Result<Formula, PredError> {
    sp_at(p, instr, depth, None)
}

/// A line, its instruction and the stack depth in front of it.
type ShapedLine<'a> = (Line, &'a Instruction, usize);

/// Checks that `from..=to` is a straight-line range of `m` and returns the
/// stack depth in front of every line plus the depth after `to`.
fn shape(m: &MethodMap, from: Line, to: Line, depth: usize) -> Result<(Vec<ShapedLine<'_>>, usize), PredError> {
    let mut lines = Vec::new();
    let mut d = depth;
    if from > to {
        return Ok((lines, d));
    }
    for line in from..=to {
        let instr = m.get(line).ok_or(PredError::NotStraightLine { line })?;
        match instr {
            Instruction::If(_) => return Err(PredError::NotStraightLine { line }),
            Instruction::Goto(t) if Some(*t) != m.next_line(line) => return Err(PredError::NotStraightLine { line }),
            _ => {}
        }
        if instr.stack_inputs() > d {
            return Err(underflow(line, instr, d));
        }
        lines.push((line, instr, d));
        d = (d as i64 + instr.stack_delta()) as usize;
    }
    Ok((lines, d))
}

fn check_slots(f: &Formula, depth: usize, line: Line, which: &str) -> Result<(), PredError> {
    match f.max_slot() {
        Some(k) if k as usize >= depth => Err(PredError::StackShapeError {
            line,
            reason: format!("{which} mentions s{k}, the stack holds {depth}"),
        }),
        _ => Ok(()),
    }
}

/// `wp(m[from..=to], q)`, folding [`wp_instr`] from `to` down to `from`.
///
/// `depth` is the stack depth in front of `from`. An empty range (`from >
/// to`) returns `q`.
pub fn wp_segment(m: &MethodMap, from: Line, to: Line, depth: usize, q: &Formula) -> Result<Formula, PredError> {
    let (lines, end) = shape(m, from, to, depth)?;
    check_slots(q, end, to.max(from), "the postcondition")?;
    lines
        .iter()
        .rev()
        .try_fold(q.clone(), |acc, (_, instr, _)| wp_instr(instr, &acc))
}

/// `sp(p, m[from..=to])`, folding [`sp_instr`] forward. Fresh variables are
/// named after the line they were introduced at (see [`fresh_name`]).
pub fn sp_segment(p: &Formula, m: &MethodMap, from: Line, to: Line, depth: usize) -> Result<Formula, PredError> {
    let (lines, _) = shape(m, from, to, depth)?;
    check_slots(p, depth, from, "the precondition")?;
    lines
        .iter()
        .try_fold(p.clone(), |acc, (line, instr, d)| sp_at(&acc, instr, *d, Some(*line)))
}

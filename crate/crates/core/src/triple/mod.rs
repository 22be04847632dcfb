// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

//! Hoare triples carried through insertion patches.
//!
//! Given `{p1} m1 {q1}` and a patch of insertions, [`transform_triple`]
//! computes a new precondition backwards from `q1` and a new postcondition
//! forwards from `p1`, one inserted instruction at a time. The two are
//! anchored at different ends, so the result is checked as two separate
//! chains ([`chain_obligations`]) rather than as one triple.

mod smt;

use std::collections::BTreeMap;
use std::fmt;

use crate::bytecode::{ClassHierarchy, Instruction, Line, MethodMap};
use crate::patch::{apply_add, Patch, PatchError, UpdateInstr};
use crate::predicate::{counterexample, equivalent, simplify, sp_segment, wp_segment, Atom, Bound, Formula, PredError};
use crate::verifier::{verify_method, TypeState, VSem, VerifyError};

pub use smt::emit_obligations;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TripleError {
    #[error("consistency check `{step}` failed: {detail}")]
    TransformException { step: &'static str, detail: String },
    #[error("patch item {}: only insertions can be carried through a triple", .index + 1)]
    DeletionNotSupported { index: usize },
    #[error("the calculated and target methods differ at line {line}")]
    MethodMismatch { line: Line },
    #[error(transparent)]
    Pred(#[from] PredError),
    #[error(transparent)]
    Patch(#[from] PatchError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TripleKind {
    Initial,
    Target,
    Calculated,
    Intermediate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triple {
    pub pre: Formula,
    pub method: MethodMap,
    pub post: Formula,
    pub kind: TripleKind,
}

impl Triple {
    pub fn new(pre: Formula, method: MethodMap, post: Formula, kind: TripleKind) -> Self {
        Triple {
            pre,
            method,
            post,
            kind,
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}} [", self.pre)?;
        for (i, instr) in self.method.instructions().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{instr}")?;
        }
        write!(f, "] {{{}}}", self.post)
    }
}

/// Insertion step used by [`transform_triple_using`].
pub type AddFn<'a> = &'a dyn Fn(&MethodMap, &Instruction, Line) -> Result<MethodMap, PatchError>;

/// Stack depth in front of each line, and at the end (index `len`).
struct Depths(Vec<usize>);

impl Depths {
    fn of(m: &MethodMap, hier: &ClassHierarchy) -> Result<Depths, TripleError> {
        let v: VSem = verify_method(m, &TypeState::entry(m), hier)?;
        let mut out: Vec<usize> = v
            .lines
            .iter()
            .map(|l| l.state.as_ref().map_or(0, TypeState::depth))
            .collect();
        out.push(v.exit.as_ref().map_or(0, TypeState::depth));
        Ok(Depths(out))
    }

    /// Depth in front of `line` (`len + 1` is the end).
    fn at(&self, line: Line) -> usize {
        self.0[(line as usize).saturating_sub(1).min(self.0.len() - 1)]
    }
}

/// Runs the transformation with the default insertion.
pub fn transform_triple(
    p1: &Formula,
    q1: &Formula,
    m1: &MethodMap,
    patch: &Patch,
    hier: &ClassHierarchy,
    bound: &Bound,
) -> Result<Triple, TripleError> {
    transform_triple_using(p1, q1, m1, patch, hier, bound, &apply_add)
}

/// [`transform_triple`] with a replaceable insertion step; a faulty `add`
/// is caught by the two consistency checks.
pub fn transform_triple_using(
    p1: &Formula,
    q1: &Formula,
    m1: &MethodMap,
    patch: &Patch,
    hier: &ClassHierarchy,
    bound: &Bound,
    add: AddFn<'_>,
) -> Result<Triple, TripleError> {
    for (index, item) in patch.items.iter().enumerate() {
        if !matches!(item, UpdateInstr::Add { .. }) {
            return Err(TripleError::DeletionNotSupported { index });
        }
    }
    let mut cur = Triple::new(p1.clone(), m1.clone(), q1.clone(), TripleKind::Initial);
    for item in &patch.items {
        let UpdateInstr::Add { instr, at } = item else {
            unreachable!("checked above")
        };
        cur = step(&cur, instr, *at, hier, bound, add)?;
    }
    cur.kind = TripleKind::Calculated;
    Ok(cur)
}

fn step(
    cur: &Triple,
    x: &Instruction,
    i: Line,
    hier: &ClassHierarchy,
    bound: &Bound,
    add: AddFn<'_>,
) -> Result<Triple, TripleError> {
    let (p1, q1, m1) = (&cur.pre, &cur.post, &cur.method);
    let n = m1.last_line().unwrap_or(0);
    let d1 = Depths::of(m1, hier)?;
    let m2 = add(m1, x, i)?;
    let last2 = m2.last_line().unwrap_or(0);
    let d2 = Depths::of(&m2, hier)?;

    let wp1 = wp_segment(m1, i, n, d1.at(i), q1)?;
    let shifted = wp_segment(&m2, i + 1, last2, d2.at(i + 1), q1)?;
    if !equivalent(&wp1, &shifted, bound)? {
        return Err(TripleError::TransformException {
            step: "suffix",
            detail: format!("wp of the old suffix is `{wp1}`, of the shifted suffix `{shifted}`"),
        });
    }
    let p2 = simplify(&wp_segment(&m2, 1, i, 0, &wp1)?);

    let sp1 = sp_segment(p1, m1, 1, i - 1, 0)?;
    let kept = sp_segment(p1, &m2, 1, i - 1, 0)?;
    if !equivalent(&sp1, &kept, bound)? {
        return Err(TripleError::TransformException {
            step: "prefix",
            detail: format!("sp over the old prefix is `{sp1}`, over the new prefix `{kept}`"),
        });
    }
    let q2 = simplify(&sp_segment(&simplify(&sp1), &m2, i, last2, d2.at(i))?);
    Ok(Triple::new(p2, m2, q2, TripleKind::Intermediate))
}

/// Named implication goal `hyp ⇒ concl`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obligation {
    pub name: String,
    pub hyp: Formula,
    pub concl: Formula,
}

impl Obligation {
    pub fn new(name: &str, hyp: Formula, concl: Formula) -> Self {
        Obligation {
            name: name.to_string(),
            hyp,
            concl,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ObligationSet {
    pub goals: Vec<Obligation>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GoalVerdict {
    /// Valid over the bounded domain.
    Proved,
    /// An assignment where the hypothesis holds and the conclusion fails.
    Refuted(BTreeMap<Atom, i64>),
}

impl GoalVerdict {
    pub fn is_proved(&self) -> bool {
        matches!(self, GoalVerdict::Proved)
    }
}

impl fmt::Display for GoalVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoalVerdict::Proved => f.write_str("proved (bounded)"),
            GoalVerdict::Refuted(cx) => {
                f.write_str("refuted:")?;
                for (a, v) in cx {
                    write!(f, " {a}={v}")?;
                }
                Ok(())
            }
        }
    }
}

pub fn check_obligation(ob: &Obligation, bound: &Bound) -> Result<GoalVerdict, PredError> {
    Ok(match counterexample(&ob.hyp, &ob.concl, bound)? {
        None => GoalVerdict::Proved,
        Some(cx) => GoalVerdict::Refuted(cx),
    })
}

pub fn check_obligations(set: &ObligationSet, bound: &Bound) -> Result<Vec<GoalVerdict>, PredError> {
    set.goals.iter().map(|g| check_obligation(g, bound)).collect()
}

/// The validity conditions of a calculated triple against the initial one:
/// `p2 ⇒ wp(m2, q1)` (backward chain) and `sp(p1, m2) ⇒ q2` (forward
/// chain). The third goal `p2 ⇒ wp(m2, q2)` asks whether the pair is a
/// valid triple by itself; it is advisory.
pub fn chain_obligations(p1: &Formula, q1: &Formula, calculated: &Triple) -> Result<ObligationSet, TripleError> {
    let m2 = &calculated.method;
    let last = m2.last_line().unwrap_or(0);
    let wp_q1 = simplify(&wp_segment(m2, 1, last, 0, q1)?);
    let sp_p1 = simplify(&sp_segment(p1, m2, 1, last, 0)?);
    let wp_q2 = simplify(&wp_segment(m2, 1, last, 0, &calculated.post)?);
    Ok(ObligationSet {
        goals: vec![
            Obligation::new("backward", calculated.pre.clone(), wp_q1),
            Obligation::new("forward", sp_p1, calculated.post.clone()),
            Obligation::new("triple", calculated.pre.clone(), wp_q2),
        ],
    })
}

/// The two goals comparing a calculated triple with the programmer's
/// target: `calculated.post ⇒ target.post` and `target.pre ⇒
/// calculated.pre`.
pub fn implication_obligations(calculated: &Triple, target: &Triple) -> Result<ObligationSet, TripleError> {
    let a: Vec<&Instruction> = calculated.method.instructions().collect();
    let b: Vec<&Instruction> = target.method.instructions().collect();
    if let Some(pos) = (0..a.len().max(b.len())).find(|k| a.get(*k) != b.get(*k)) {
        return Err(TripleError::MethodMismatch { line: pos as Line + 1 });
    }
    Ok(ObligationSet {
        goals: vec![
            Obligation::new("post", calculated.post.clone(), target.post.clone()),
            Obligation::new("pre", target.pre.clone(), calculated.pre.clone()),
        ],
    })
}

/// Both goals of [`implication_obligations`] with verdicts.
pub fn check_implication(
    calculated: &Triple,
    target: &Triple,
    bound: &Bound,
) -> Result<Vec<(Obligation, GoalVerdict)>, TripleError> {
    let set = implication_obligations(calculated, target)?;
    let verdicts = check_obligations(&set, bound)?;
    Ok(set.goals.into_iter().zip(verdicts).collect())
}

// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

//! Static type-state verification of methods and of update instructions.
//!
//! Every program point carries a [`TypeState`]: the types of the local
//! variables (`F`), the types on the operand stack (`S`) and the stack depth
//! (`SD`). [`verify_method`] computes the table for a whole method with a
//! forward worklist; the `transfer_update_*` functions in
//! [`incremental`](self) rewrite an already verified [`Configuration`]
//! through one update instruction, checking that update's rule and
//! recomputing only the program points the edit can influence.

mod equivalence;
mod incremental;
mod report;
mod solve;

use std::collections::BTreeMap;
use std::fmt;

use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::bytecode::{ClassHierarchy, Instruction, Line, MethodMap, TypeDesc};
use crate::patch::PatchError;

pub use equivalence::{check_equivalence, Divergence, DivergenceKind, Verdict};
pub use incremental::{
    add_rule, apply_patch_incremental, effects, transfer_update, transfer_update_add, transfer_update_delete,
    transfer_update_modify, Configuration, RuleConclusion,
};
pub use report::{render_vsem, vsem_json};
pub use solve::{verify_method, VSem, VSemLine};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("line {line}: operand stack underflow")]
    StackUnderflow { line: Line },
    #[error("line {line}: expected {expected}, found {found}")]
    TypeMismatch {
        line: Line,
        expected: TypeDesc,
        found: TypeDesc,
    },
    #[error("line {line}: unknown variable `{var}`")]
    UnknownVariable { line: Line, var: String },
    #[error("line {line}: predecessors disagree on stack depth ({left} vs {right})")]
    DepthMismatch { line: Line, left: usize, right: usize },
    #[error("rule {rule} rejected the update at line {line}: {reason}")]
    RulePreconditionFailed {
        rule: &'static str,
        line: Line,
        reason: String,
    },
    #[error(transparent)]
    Patch(#[from] PatchError),
    #[error("patch item {}: {source}", .index + 1)]
    AtItem {
        index: usize,
        #[source]
        source: Box<VerifyError>,
    },
}

/// Coarse classification used when comparing two verification routes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorClass {
    /// The edit itself is malformed (bad line, dangling jump, ...).
    Structural,
    /// The code is ill-typed.
    Typing,
}

impl VerifyError {
    pub fn class(&self) -> ErrorClass {
        match self {
            VerifyError::Patch(_) => ErrorClass::Structural,
            VerifyError::AtItem { source, .. } => source.class(),
            _ => ErrorClass::Typing,
        }
    }
}

/// Typing of one program point.
///
/// The stack is kept with its top as the last element; constructors and
/// [`TypeState::stack_top_first`] use the conventional `t.S0` order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeState {
    pub locals: BTreeMap<String, TypeDesc>,
    stack: Vec<TypeDesc>,
}

impl TypeState {
    pub fn new(locals: BTreeMap<String, TypeDesc>, stack_top_first: Vec<TypeDesc>) -> Self {
        let mut stack = stack_top_first;
        stack.reverse();
        TypeState { locals, stack }
    }

    /// Method entry: parameters typed as declared, empty stack.
    pub fn entry(m: &MethodMap) -> Self {
        TypeState::new(m.params().iter().cloned().collect(), Vec::new())
    }

    /// `SD`.
    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    pub fn stack_top_first(&self) -> Vec<TypeDesc> {
        self.stack.iter().rev().cloned().collect()
    }

    pub fn top(&self) -> Option<&TypeDesc> {
        self.stack.last()
    }

    pub fn push(&mut self, t: TypeDesc) {
        self.stack.push(t);
    }

    fn pop(&mut self, line: Line) -> Result<TypeDesc, VerifyError> {
        self.stack.pop().ok_or(VerifyError::StackUnderflow { line })
    }

    fn pop_expect(&mut self, line: Line, expected: &TypeDesc, hier: &ClassHierarchy) -> Result<TypeDesc, VerifyError> {
        let found = self.pop(line)?;
        expect(line, &found, expected, hier)?;
        Ok(found)
    }

    /// Pointwise least upper bound. A variable typed on one side only
    /// becomes `Top`.
    pub fn join(&self, other: &TypeState, line: Line, hier: &ClassHierarchy) -> Result<TypeState, VerifyError> {
        if self.depth() != other.depth() {
            return Err(VerifyError::DepthMismatch {
                line,
                left: self.depth(),
                right: other.depth(),
            });
        }
        let stack = self
            .stack
            .iter()
            .zip(&other.stack)
            .map(|(a, b)| hier.lub(a, b))
            .collect();
        let mut locals = self.locals.clone();
        for (x, t) in &other.locals {
            locals
                .entry(x.clone())
                .and_modify(|mine| *mine = hier.lub(mine, t))
                .or_insert(TypeDesc::Top);
        }
        for (x, t) in locals.iter_mut() {
            if !other.locals.contains_key(x) {
                *t = TypeDesc::Top;
            }
        }
        Ok(TypeState { locals, stack })
    }
}

impl fmt::Display for TypeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("F={")?;
        for (i, (x, t)) in self.locals.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}:{t}")?;
        }
        f.write_str("} S=[")?;
        for (i, t) in self.stack.iter().rev().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, "] SD={}", self.depth())
    }
}

impl Serialize for TypeState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("TypeState", 3)?;
        s.serialize_field("F", &self.locals)?;
        s.serialize_field("S", &self.stack_top_first())?;
        s.serialize_field("SD", &self.depth())?;
        s.end()
    }
}

fn expect(line: Line, found: &TypeDesc, expected: &TypeDesc, hier: &ClassHierarchy) -> Result<(), VerifyError> {
    if hier.is_subtype(found, expected) {
        Ok(())
    } else {
        Err(VerifyError::TypeMismatch {
            line,
            expected: expected.clone(),
            found: found.clone(),
        })
    }
}

/// Typing rule of an ordinary instruction: the state after `instr` given
/// the state before it. Branches leave the same state on both successors.
pub fn transfer(
    line: Line,
    instr: &Instruction,
    st: &TypeState,
    hier: &ClassHierarchy,
) -> Result<TypeState, VerifyError> {
    let mut out = st.clone();
    match instr {
        Instruction::Pop => {
            out.pop(line)?;
        }
        Instruction::If(_) => {
            out.pop_expect(line, &TypeDesc::Int, hier)?;
        }
        Instruction::Store(x) => {
            let t = out.pop(line)?;
            out.locals.insert(x.clone(), t);
        }
        Instruction::Load(x) => {
            let t = st
                .locals
                .get(x)
                .cloned()
                .ok_or_else(|| VerifyError::UnknownVariable { line, var: x.clone() })?;
            out.push(t);
        }
        Instruction::New(class) => out.push(TypeDesc::Class(class.clone())),
        Instruction::Goto(_) => {}
        Instruction::Inc => {
            let top = out.top().ok_or(VerifyError::StackUnderflow { line })?;
            expect(line, top, &TypeDesc::Int, hier)?;
        }
        Instruction::Add => {
            out.pop_expect(line, &TypeDesc::Int, hier)?;
            out.pop_expect(line, &TypeDesc::Int, hier)?;
            out.push(TypeDesc::Int);
        }
        Instruction::InvokeVirtual { class, sig, .. } => {
            for arg in sig.args.iter().rev() {
                out.pop_expect(line, arg, hier)?;
            }
            out.pop_expect(line, &TypeDesc::Class(class.clone()), hier)?;
        }
        Instruction::GetField { class, ty, .. } => {
            out.pop_expect(line, &TypeDesc::Class(class.clone()), hier)?;
            out.push(ty.clone());
        }
        Instruction::PutField { class, ty, .. } => {
            out.pop_expect(line, ty, hier)?;
            out.pop_expect(line, &TypeDesc::Class(class.clone()), hier)?;
        }
    }
    Ok(out)
}

/// Where control goes after a line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Flow {
    Line(Line),
    Exit,
}

pub(crate) fn successors(m: &MethodMap, line: Line, instr: &Instruction) -> Vec<Flow> {
    let fall = || m.next_line(line).map_or(Flow::Exit, Flow::Line);
    match instr {
        Instruction::Goto(t) => vec![Flow::Line(*t)],
        Instruction::If(t) => {
            let f = fall();
            if f == Flow::Line(*t) {
                vec![f]
            } else {
                vec![f, Flow::Line(*t)]
            }
        }
        _ => vec![fall()],
    }
}

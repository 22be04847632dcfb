// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

//! The bytecode subset: types, instructions, methods and a reference
//! interpreter.
//!
//! The instruction set has exactly eleven forms. A method is a mapping from
//! line numbers (1-based instruction indices) to instructions; jump targets
//! are line numbers, not byte offsets. Byte-length accounting is kept
//! separately in [`MethodMap::pc_max`].

mod interp;
mod method;
mod text;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

pub use interp::{run_segment, step, ExecError, MachineState, Object, Value};
pub use method::MethodMap;
pub use text::{parse_method, serialize_method, ParseError};

/// Instruction index inside a method, starting at 1.
pub type Line = u32;

/// Static type of a local variable or operand stack entry.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(into = "String")]
pub enum TypeDesc {
    Int,
    Class(String),
    /// Unusable value, the result of merging incompatible types.
    Top,
}

impl From<TypeDesc> for String {
    fn from(t: TypeDesc) -> String {
        t.to_string()
    }
}

impl fmt::Display for TypeDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeDesc::Int => f.write_str("int"),
            TypeDesc::Class(name) => f.write_str(name),
            TypeDesc::Top => f.write_str("top"),
        }
    }
}

/// Single-inheritance class hierarchy used for subtyping and merges.
///
/// Without any declared edges the hierarchy is flat: two distinct classes
/// are unrelated and merge to [`TypeDesc::Top`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassHierarchy {
    parents: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HierarchyError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("class {0} has more than one superclass")]
    MultipleParents(String),
    #[error("inheritance cycle through class {0}")]
    Cycle(String),
}

impl ClassHierarchy {
    pub fn flat() -> Self {
        Self::default()
    }

    /// Parses `B extends A` lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, HierarchyError> {
        let mut hierarchy = ClassHierarchy::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                [child, "extends", parent] if is_class_name(child) && is_class_name(parent) => {
                    hierarchy.declare(child, parent)?;
                }
                _ => {
                    return Err(HierarchyError::Parse {
                        line: idx + 1,
                        reason: format!("expected `B extends A`, found `{line}`"),
                    })
                }
            }
        }
        Ok(hierarchy)
    }

    pub fn declare(&mut self, child: &str, parent: &str) -> Result<(), HierarchyError> {
        if self.parents.contains_key(child) {
            return Err(HierarchyError::MultipleParents(child.to_string()));
        }
        // Walking up from the parent must never reach the child.
        if self.ancestors(parent).any(|c| c == child) {
            return Err(HierarchyError::Cycle(child.to_string()));
        }
        self.parents.insert(child.to_string(), parent.to_string());
        Ok(())
    }

    fn ancestors<'a>(&'a self, class: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        let mut cur = Some(class);
        std::iter::from_fn(move || {
            let out = cur?;
            cur = self.parents.get(out).map(String::as_str);
            Some(out)
        })
    }

    /// `sub ≤ sup` in the class hierarchy (reflexive).
    pub fn is_subclass(&self, sub: &str, sup: &str) -> bool {
        self.ancestors(sub).any(|c| c == sup)
    }

    /// Subtyping on [`TypeDesc`]: reflexive, `Top` is the greatest element.
    pub fn is_subtype(&self, sub: &TypeDesc, sup: &TypeDesc) -> bool {
        match (sub, sup) {
            (_, TypeDesc::Top) => true,
            (TypeDesc::Int, TypeDesc::Int) => true,
            (TypeDesc::Class(a), TypeDesc::Class(b)) => self.is_subclass(a, b),
            _ => false,
        }
    }

    /// Least upper bound. Classes merge to their least common ancestor.
    pub fn lub(&self, a: &TypeDesc, b: &TypeDesc) -> TypeDesc {
        match (a, b) {
            (TypeDesc::Int, TypeDesc::Int) => TypeDesc::Int,
            (TypeDesc::Class(x), TypeDesc::Class(y)) => self
                .ancestors(x)
                .find(|anc| self.is_subclass(y, anc))
                .map(|anc| TypeDesc::Class(anc.to_string()))
                .unwrap_or(TypeDesc::Top),
            _ => TypeDesc::Top,
        }
    }
}

/// Method signature: argument types and an optional return type.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodSig {
    pub args: Vec<TypeDesc>,
    pub ret: Option<TypeDesc>,
}

impl fmt::Display for MethodSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, arg) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{arg}")?;
        }
        f.write_str(")->")?;
        match &self.ret {
            Some(t) => write!(f, "{t}"),
            None => f.write_str("void"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Instruction {
    Pop,
    If(Line),
    Store(String),
    Load(String),
    New(String),
    Goto(Line),
    Inc,
    Add,
    InvokeVirtual {
        class: String,
        method: String,
        sig: MethodSig,
    },
    GetField {
        class: String,
        field: String,
        ty: TypeDesc,
    },
    PutField {
        class: String,
        field: String,
        ty: TypeDesc,
    },
}

impl Instruction {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Instruction::Pop => "pop",
            Instruction::If(_) => "if",
            Instruction::Store(_) => "store",
            Instruction::Load(_) => "load",
            Instruction::New(_) => "new",
            Instruction::Goto(_) => "goto",
            Instruction::Inc => "inc",
            Instruction::Add => "add",
            Instruction::InvokeVirtual { .. } => "invokevirtual",
            Instruction::GetField { .. } => "getfield",
            Instruction::PutField { .. } => "putfield",
        }
    }

    /// Target line of a `goto` or `if`.
    pub fn jump_target(&self) -> Option<Line> {
        match self {
            Instruction::Goto(l) | Instruction::If(l) => Some(*l),
            _ => None,
        }
    }

    pub fn is_jump(&self) -> bool {
        self.jump_target().is_some()
    }

    /// Same instruction with its jump target replaced. Non-jumps are returned
    /// unchanged.
    pub fn with_target(&self, target: Line) -> Instruction {
        match self {
            Instruction::Goto(_) => Instruction::Goto(target),
            Instruction::If(_) => Instruction::If(target),
            other => other.clone(),
        }
    }

    /// Local variable read or written by this instruction.
    pub fn variable(&self) -> Option<&str> {
        match self {
            Instruction::Load(x) | Instruction::Store(x) => Some(x),
            _ => None,
        }
    }

    /// Net change in operand stack depth.
    pub fn stack_delta(&self) -> i64 {
        match self {
            Instruction::Pop | Instruction::If(_) | Instruction::Store(_) | Instruction::Add => -1,
            Instruction::Load(_) | Instruction::New(_) => 1,
            Instruction::Goto(_) | Instruction::Inc | Instruction::GetField { .. } => 0,
            Instruction::PutField { .. } => -2,
            Instruction::InvokeVirtual { sig, .. } => -(sig.args.len() as i64 + 1),
        }
    }

    /// Number of operands the instruction consumes from the stack.
    pub fn stack_inputs(&self) -> usize {
        match self {
            Instruction::Pop
            | Instruction::If(_)
            | Instruction::Store(_)
            | Instruction::Inc
            | Instruction::GetField { .. } => 1,
            Instruction::Add | Instruction::PutField { .. } => 2,
            Instruction::Load(_) | Instruction::New(_) | Instruction::Goto(_) => 0,
            Instruction::InvokeVirtual { sig, .. } => sig.args.len() + 1,
        }
    }
}

/// Encoded byte length, used for `PC_MAX` accounting.
///
/// Instructions carrying a constant-pool reference take three bytes,
/// everything else one.
pub fn instr_length(instr: &Instruction) -> u32 {
    match instr {
        Instruction::PutField { .. } | Instruction::GetField { .. } | Instruction::InvokeVirtual { .. } => 3,
        _ => 1,
    }
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(idx) => &line[..idx],
        None => line,
    }
}

pub(crate) fn is_var_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn is_class_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '$')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '$' | '/' | '.'))
}

// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

//! Concrete small-step semantics.
//!
//! The interpreter is the ground truth the predicate transformers and the
//! static verifier are tested against. Integers are 32-bit two's complement
//! with wraparound.

use std::collections::BTreeMap;

use super::{Instruction, Line, MethodMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i32),
    Ref(u32),
    Null,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Object {
    pub class: String,
    pub fields: BTreeMap<String, Value>,
}

/// Machine state. The operand stack grows to the right: the top is the last
/// element. `pc == None` means the method has halted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MachineState {
    pub locals: BTreeMap<String, Value>,
    pub stack: Vec<Value>,
    pub pc: Option<Line>,
    pub heap: BTreeMap<u32, Object>,
    /// Instructions executed so far.
    pub steps: u64,
}

impl MachineState {
    pub fn new(locals: BTreeMap<String, Value>, stack: Vec<Value>) -> Self {
        MachineState {
            locals,
            stack,
            ..Default::default()
        }
    }

    /// Stack entry `k` counted from the top (0 = top).
    pub fn slot(&self, k: usize) -> Option<Value> {
        self.stack.len().checked_sub(k + 1).map(|i| self.stack[i])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("stack underflow at line {line}")]
    StackUnderflow { line: Line },
    #[error("type fault at line {line}: {reason}")]
    TypeFault { line: Line, reason: String },
    #[error("line {line}: local `{var}` is unbound")]
    UnboundLocal { line: Line, var: String },
    #[error("pc {0} is not a line of the method")]
    InvalidPc(Line),
    #[error("fuel exhausted")]
    FuelExhausted,
}

fn pop(stack: &mut Vec<Value>, line: Line) -> Result<Value, ExecError> {
    stack.pop().ok_or(ExecError::StackUnderflow { line })
}

fn pop_int(stack: &mut Vec<Value>, line: Line, what: &str) -> Result<i32, ExecError> {
    match pop(stack, line)? {
        Value::Int(v) => Ok(v),
        other => Err(ExecError::TypeFault {
            line,
            reason: format!("{what} expects an integer, found {other:?}"),
        }),
    }
}

fn pop_ref(stack: &mut Vec<Value>, line: Line, what: &str) -> Result<u32, ExecError> {
    match pop(stack, line)? {
        Value::Ref(r) => Ok(r),
        other => Err(ExecError::TypeFault {
            line,
            reason: format!("{what} expects an object reference, found {other:?}"),
        }),
    }
}

/// Executes the instruction at `s.pc`.
///
/// A halted state is returned unchanged.
pub fn step(m: &MethodMap, s: &MachineState) -> Result<MachineState, ExecError> {
    let Some(line) = s.pc else {
        return Ok(s.clone());
    };
    let instr = m.get(line).ok_or(ExecError::InvalidPc(line))?;
    let mut next = s.clone();
    next.steps += 1;
    next.pc = m.next_line(line);
    let stack = &mut next.stack;
    match instr {
        Instruction::Pop => {
            pop(stack, line)?;
        }
        Instruction::Inc => {
            let v = pop_int(stack, line, "inc")?;
            stack.push(Value::Int(v.wrapping_add(1)));
        }
        Instruction::Add => {
            let b = pop_int(stack, line, "add")?;
            let a = pop_int(stack, line, "add")?;
            stack.push(Value::Int(a.wrapping_add(b)));
        }
        Instruction::Load(x) => {
            let v = *s
                .locals
                .get(x)
                .ok_or_else(|| ExecError::UnboundLocal { line, var: x.clone() })?;
            stack.push(v);
        }
        Instruction::Store(x) => {
            let v = pop(stack, line)?;
            next.locals.insert(x.clone(), v);
        }
        Instruction::Goto(target) => next.pc = Some(*target),
        Instruction::If(target) => {
            if pop_int(stack, line, "if")? != 0 {
                next.pc = Some(*target);
            }
        }
        Instruction::New(class) => {
            let r = next.heap.keys().next_back().map_or(0, |r| r + 1);
            next.heap.insert(
                r,
                Object {
                    class: class.clone(),
                    fields: BTreeMap::new(),
                },
            );
            stack.push(Value::Ref(r));
        }
        Instruction::GetField { field, ty, .. } => {
            let r = pop_ref(stack, line, "getfield")?;
            let obj = &next.heap[&r];
            let v = obj.fields.get(field).copied().unwrap_or(match ty {
                super::TypeDesc::Int => Value::Int(0),
                _ => Value::Null,
            });
            stack.push(v);
        }
        Instruction::PutField { field, .. } => {
            let v = pop(stack, line)?;
            let r = pop_ref(stack, line, "putfield")?;
            next.heap
                .get_mut(&r)
                .expect("references always point into the heap")
                .fields
                .insert(field.clone(), v);
        }
        Instruction::InvokeVirtual { sig, .. } => {
            for _ in &sig.args {
                pop(stack, line)?;
            }
            pop_ref(stack, line, "invokevirtual")?;
        }
    }
    Ok(next)
}

/// Runs from `from` while the pc stays within `[from, to]`.
///
/// Each executed instruction costs one unit of fuel. A segment with
/// `from > to` is empty and returns the state unchanged.
pub fn run_segment(
    m: &MethodMap,
    s: &MachineState,
    from: Line,
    to: Line,
    fuel: u64,
) -> Result<MachineState, ExecError> {
    if from > to {
        return Ok(s.clone());
    }
    if !m.contains(from) {
        return Err(ExecError::InvalidPc(from));
    }
    let mut state = s.clone();
    state.pc = Some(from);
    let mut fuel = fuel;
    while let Some(pc) = state.pc.filter(|pc| (from..=to).contains(pc)) {
        if fuel == 0 {
            return Err(ExecError::FuelExhausted);
        }
        fuel -= 1;
        state = step(m, &state).map_err(|e| match e {
            ExecError::InvalidPc(_) => ExecError::InvalidPc(pc),
            e => e,
        })?;
    }
    Ok(state)
}

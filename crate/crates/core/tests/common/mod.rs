// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

//! Generators and independent oracles shared by the integration tests and
//! the acceptance harness.

#![allow(dead_code)]

pub mod oracles;
pub mod smt;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use patchverify::bytecode::{ClassHierarchy, Instruction, Line, MethodMap, MethodSig, TypeDesc};
use patchverify::patch::{Patch, Patcher, UpdateInstr};
use patchverify::predicate::{Atom, CmpOp, Formula, Term};
use patchverify::verifier::{verify_method, TypeState};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/corpus")
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn hierarchy() -> ClassHierarchy {
    ClassHierarchy::parse("B extends A\n").expect("fixed hierarchy")
}

// ---------------------------------------------------------------------------
// Random methods and patches
// ---------------------------------------------------------------------------

const INT_VARS: [&str; 3] = ["x", "y", "z"];

fn int() -> TypeDesc {
    TypeDesc::Int
}

fn getfield() -> Instruction {
    Instruction::GetField {
        class: "A".into(),
        field: "f".into(),
        ty: int(),
    }
}

fn putfield() -> Instruction {
    Instruction::PutField {
        class: "A".into(),
        field: "f".into(),
        ty: int(),
    }
}

fn call(args: usize) -> Instruction {
    Instruction::InvokeVirtual {
        class: "A".into(),
        method: "m".into(),
        sig: MethodSig {
            args: vec![int(); args],
            ret: None,
        },
    }
}

/// Any instruction over the fixed vocabulary, typing ignored. Jump targets
/// fall in `1..=lines`.
pub fn any_instruction(rng: &mut StdRng, lines: Line) -> Instruction {
    let target = rng.gen_range(1..=lines.max(1));
    match rng.gen_range(0..13) {
        0 => Instruction::Pop,
        1 => Instruction::If(target),
        2 => Instruction::Goto(target),
        3 => Instruction::Store(INT_VARS.choose(rng).unwrap().to_string()),
        4 => Instruction::Load(["x", "y", "z", "r"].choose(rng).unwrap().to_string()),
        5 => Instruction::New(["A", "B"].choose(rng).unwrap().to_string()),
        6 => Instruction::Inc,
        7 => Instruction::Add,
        8 => getfield(),
        9 => putfield(),
        10 => call(rng.gen_range(0..=1)),
        11 => Instruction::Store("r".into()),
        _ => Instruction::Load("x".into()),
    }
}

/// An instruction that is well typed on top of `stack` (top last), chosen
/// at random; falls back to a push when nothing else fits.
pub fn typed_instruction(rng: &mut StdRng, stack: &[TypeDesc], lines: Line) -> Instruction {
    let top = stack.last();
    let below = stack.len().checked_sub(2).map(|i| &stack[i]);
    let is_int = |t: Option<&TypeDesc>| t == Some(&TypeDesc::Int);
    let is_ref = |t: Option<&TypeDesc>| matches!(t, Some(TypeDesc::Class(_)));
    let target = rng.gen_range(1..=lines.max(1));
    let mut options: Vec<Instruction> = vec![
        Instruction::Load(["x", "y"].choose(rng).unwrap().to_string()),
        Instruction::Load("r".into()),
        Instruction::New(["A", "B"].choose(rng).unwrap().to_string()),
        Instruction::Goto(target),
    ];
    if top.is_some() {
        options.push(Instruction::Pop);
    }
    if is_int(top) {
        options.extend([
            Instruction::Inc,
            Instruction::Store(INT_VARS.choose(rng).unwrap().to_string()),
            Instruction::If(target),
        ]);
        if is_int(below) {
            options.push(Instruction::Add);
        }
        if is_ref(below) {
            options.extend([putfield(), call(1)]);
        }
    }
    if is_ref(top) {
        options.extend([getfield(), call(0), Instruction::Store("r".into())]);
    }
    options.choose(rng).unwrap().clone()
}

pub fn params() -> Vec<(String, TypeDesc)> {
    vec![
        ("x".into(), int()),
        ("y".into(), int()),
        ("r".into(), TypeDesc::Class("A".into())),
    ]
}

/// A method of `1..=max_len` instructions, mostly well typed along the
/// fall-through path. Branches may join states of different depths, so
/// some methods are rejected.
pub fn random_method(rng: &mut StdRng, max_len: usize) -> MethodMap {
    let len = rng.gen_range(1..=max_len);
    let mut stack: Vec<TypeDesc> = Vec::new();
    let mut instrs = Vec::with_capacity(len);
    for _ in 0..len {
        let x = if rng.gen_bool(0.9) {
            typed_instruction(rng, &stack, len as Line)
        } else {
            any_instruction(rng, len as Line)
        };
        simulate(&mut stack, &x);
        instrs.push(x);
    }
    MethodMap::from_instructions(instrs)
        .with_params(params())
        .with_vars(["z"])
}

/// Abstract effect on a list of types, used only to steer generation.
fn simulate(stack: &mut Vec<TypeDesc>, x: &Instruction) {
    let pops = x.stack_inputs().min(stack.len());
    stack.truncate(stack.len() - pops);
    match x {
        Instruction::Load(v) if v == "r" => stack.push(TypeDesc::Class("A".into())),
        Instruction::Load(_) | Instruction::Inc | Instruction::Add | Instruction::GetField { .. } => stack.push(int()),
        Instruction::New(c) => stack.push(TypeDesc::Class(c.clone())),
        _ => {}
    }
}

/// A patch of `1..=max_items` items whose lines are valid when each item
/// is applied. Inserted instructions are typed against the state the
/// verifier computes at the insertion point most of the time.
pub fn random_patch(rng: &mut StdRng, m: &MethodMap, max_items: usize) -> Patch {
    let n = rng.gen_range(1..=max_items);
    let mut cur = m.clone();
    let mut items = Vec::new();
    let patcher = Patcher::default();
    for _ in 0..n {
        let len = cur.len() as Line;
        let kind = if len == 0 { 0 } else { rng.gen_range(0..5) };
        let item = match kind {
            0..=2 => {
                let at = rng.gen_range(1..=len + 1);
                let x = instruction_for(rng, &cur, at, len + 1);
                UpdateInstr::Add { instr: x, at }
            }
            3 => UpdateInstr::Delete {
                at: rng.gen_range(1..=len),
                expect: None,
            },
            _ => {
                let at = rng.gen_range(1..=len);
                let x = instruction_for(rng, &cur, at, len);
                UpdateInstr::Modify { instr: x, at }
            }
        };
        if let Ok((next, _)) = patcher.apply_item(&cur, &item) {
            cur = next;
        }
        items.push(item);
    }
    Patch::new(items)
}

fn instruction_for(rng: &mut StdRng, m: &MethodMap, at: Line, lines: Line) -> Instruction {
    if rng.gen_bool(0.2) {
        return any_instruction(rng, lines);
    }
    let state = verify_method(m, &TypeState::entry(m), &hierarchy()).ok().and_then(|v| {
        if at as usize > v.lines.len() {
            v.exit.clone()
        } else {
            v.state(at).cloned()
        }
    });
    let mut stack = state.map(|s| s.stack_top_first()).unwrap_or_default();
    stack.reverse();
    typed_instruction(rng, &stack, lines)
}

/// A structural patch of add and delete items only.
pub fn random_add_delete(rng: &mut StdRng, m: &MethodMap, max_items: usize) -> Patch {
    let n = rng.gen_range(1..=max_items);
    let mut len = m.len() as Line;
    let mut items = Vec::new();
    for _ in 0..n {
        if len > 1 && rng.gen_bool(0.4) {
            items.push(UpdateInstr::Delete {
                at: rng.gen_range(1..=len),
                expect: None,
            });
            len -= 1;
        } else {
            let at = rng.gen_range(1..=len + 1);
            items.push(UpdateInstr::Add {
                instr: any_instruction(rng, len + 1),
                at,
            });
            len += 1;
        }
    }
    Patch::new(items)
}

// ---------------------------------------------------------------------------
// Control-flow graphs over instruction identities
// ---------------------------------------------------------------------------

/// Instruction with its jump target replaced by the identity of the target
/// node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: usize,
    pub instr: Instruction,
    pub target: Option<usize>,
}

/// A method as a sequence of identified nodes; positions are lines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdMethod {
    pub nodes: Vec<Node>,
    next_id: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Succ {
    Node(usize),
    Exit,
}

#[derive(Debug, PartialEq, Eq)]
pub enum ModelError {
    /// A jump targets the node being deleted.
    DeletedTarget,
    /// A position outside the method.
    BadLine,
}

impl IdMethod {
    /// Identities are the original line numbers. The method must be
    /// contiguous with valid targets.
    pub fn of(m: &MethodMap) -> IdMethod {
        let nodes = m
            .entries()
            .map(|(line, instr)| Node {
                id: line as usize,
                instr: instr.clone(),
                target: instr.jump_target().map(|t| t as usize),
            })
            .collect();
        IdMethod {
            nodes,
            next_id: m.len() + 1,
        }
    }

    fn id_at(&self, line: Line) -> Option<usize> {
        self.nodes.get((line as usize).checked_sub(1)?).map(|n| n.id)
    }

    fn position(&self, id: usize) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Applies an item. Returns the identity of the new node, if any.
    pub fn apply(&mut self, item: &UpdateInstr) -> Result<Option<usize>, ModelError> {
        match item {
            UpdateInstr::Add { instr, at } => {
                let at = *at as usize;
                if at == 0 || at > self.nodes.len() + 1 {
                    return Err(ModelError::BadLine);
                }
                let id = self.next_id;
                self.next_id += 1;
                self.nodes.insert(
                    at - 1,
                    Node {
                        id,
                        instr: instr.clone(),
                        target: None,
                    },
                );
                // The new instruction's own target is read in the new numbering.
                let target = instr
                    .jump_target()
                    .map(|t| self.id_at(t).ok_or(ModelError::BadLine))
                    .transpose();
                match target {
                    Ok(t) => self.nodes[at - 1].target = t,
                    Err(e) => {
                        self.nodes.remove(at - 1);
                        return Err(e);
                    }
                }
                Ok(Some(id))
            }
            UpdateInstr::Delete { at, .. } => {
                let id = self.id_at(*at).ok_or(ModelError::BadLine)?;
                if self.nodes.iter().any(|n| n.id != id && n.target == Some(id)) {
                    return Err(ModelError::DeletedTarget);
                }
                self.nodes.retain(|n| n.id != id);
                Ok(None)
            }
            UpdateInstr::Modify { instr, at } => {
                let pos = (*at as usize)
                    .checked_sub(1)
                    .filter(|p| *p < self.nodes.len())
                    .ok_or(ModelError::BadLine)?;
                let target = instr
                    .jump_target()
                    .map(|t| self.id_at(t).ok_or(ModelError::BadLine))
                    .transpose()?;
                let id = self.next_id;
                self.next_id += 1;
                self.nodes[pos] = Node {
                    id,
                    instr: instr.clone(),
                    target,
                };
                Ok(Some(id))
            }
        }
    }

    /// Edges `(from, to)` between identities.
    pub fn edges(&self) -> BTreeSet<(usize, Succ)> {
        let mut out = BTreeSet::new();
        for (pos, n) in self.nodes.iter().enumerate() {
            if let Some(t) = n.target {
                out.insert((n.id, Succ::Node(t)));
            }
            if !matches!(n.instr, Instruction::Goto(_)) {
                let next = self.nodes.get(pos + 1).map_or(Succ::Exit, |m| Succ::Node(m.id));
                out.insert((n.id, next));
            }
        }
        out
    }

    /// Edges of an actual method, with lines mapped to this model's
    /// identities by position. `None` if the shapes differ.
    pub fn edges_of(&self, m: &MethodMap) -> Option<BTreeSet<(usize, Succ)>> {
        if m.len() != self.nodes.len() || !m.is_contiguous() {
            return None;
        }
        let mut out = BTreeSet::new();
        for ((line, instr), node) in m.entries().zip(&self.nodes) {
            if instr.with_target(0) != node.instr.with_target(0) {
                return None;
            }
            let id = node.id;
            if let Some(t) = instr.jump_target() {
                out.insert((id, Succ::Node(self.id_at(t)?)));
            }
            if !matches!(instr, Instruction::Goto(_)) {
                let next = self.id_at(line + 1).map_or(Succ::Exit, Succ::Node);
                out.insert((id, next));
            }
        }
        Some(out)
    }

    /// Identity of the node in front of `id`.
    pub fn predecessor(&self, id: usize) -> Option<usize> {
        let pos = self.position(id)?;
        pos.checked_sub(1).map(|p| self.nodes[p].id)
    }
}

// ---------------------------------------------------------------------------
// Predicates
// ---------------------------------------------------------------------------

fn eval_term(t: &Term, env: &BTreeMap<Atom, i64>) -> Option<i64> {
    Some(match t {
        Term::Int(k) => *k,
        Term::Var(v) => *env.get(&Atom::Var(v.clone()))?,
        Term::Slot(k) => *env.get(&Atom::Slot(*k))?,
        Term::Plus(a, b) => eval_term(a, env)? + eval_term(b, env)?,
        Term::FieldOf { .. } => return None,
    })
}

/// Direct recursive evaluation, independent of the library's evaluator.
/// `None` when an atom is unbound.
pub fn holds(f: &Formula, env: &BTreeMap<Atom, i64>) -> Option<bool> {
    Some(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Cmp(a, op, b) => {
            let (a, b) = (eval_term(a, env)?, eval_term(b, env)?);
            match op {
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
            }
        }
        Formula::Not(g) => !holds(g, env)?,
        Formula::And(a, b) => holds(a, env)? && holds(b, env)?,
        Formula::Or(a, b) => holds(a, env)? || holds(b, env)?,
        Formula::Implies(a, b) => !holds(a, env)? || holds(b, env)?,
    })
}

fn random_term(rng: &mut StdRng, atoms: &[Term]) -> Term {
    let atom = atoms.choose(rng).cloned().unwrap_or(Term::Int(0));
    match rng.gen_range(0..4) {
        0 => Term::Int(rng.gen_range(-8..8)),
        1 => Term::plus(atom, Term::Int(rng.gen_range(-3..4))),
        2 => Term::plus(atom, atoms.choose(rng).cloned().unwrap_or(Term::Int(1))),
        _ => atom,
    }
}

/// A random formula over `atoms` with constants in `[-8, 7]`.
pub fn random_formula(rng: &mut StdRng, atoms: &[Term], depth: u32) -> Formula {
    const OPS: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
    if depth == 0 || rng.gen_bool(0.4) {
        if atoms.is_empty() {
            return if rng.gen_bool(0.5) {
                Formula::True
            } else {
                Formula::False
            };
        }
        let lhs = atoms.choose(rng).unwrap().clone();
        return Formula::Cmp(lhs, *OPS.choose(rng).unwrap(), random_term(rng, atoms));
    }
    let (a, b) = (
        random_formula(rng, atoms, depth - 1),
        random_formula(rng, atoms, depth - 1),
    );
    match rng.gen_range(0..4) {
        0 => Formula::not(a),
        1 => Formula::and(a, b),
        2 => Formula::or(a, b),
        _ => Formula::implies(a, b),
    }
}

/// Every assignment of `atoms` over `lo..hi`.
pub fn assignments(atoms: &[Atom], lo: i64, hi: i64) -> Vec<BTreeMap<Atom, i64>> {
    let mut out = vec![BTreeMap::new()];
    for a in atoms {
        out = out
            .into_iter()
            .flat_map(|env| {
                (lo..hi).map(move |v| {
                    let mut e = env.clone();
                    e.insert(a.clone(), v);
                    e
                })
            })
            .collect();
    }
    out
}

/// A straight-line segment of `1..=max_len` instructions from the
/// predicate fragment, never underflowing its stack. Variables are drawn
/// from `vars`; a `goto` always targets the next line.
pub fn random_segment(rng: &mut StdRng, max_len: usize, vars: &[&str]) -> MethodMap {
    let len = rng.gen_range(1..=max_len);
    let mut depth = 0usize;
    let mut instrs = Vec::with_capacity(len);
    for line in 1..=len {
        let mut options = vec![
            Instruction::Load(vars.choose(rng).unwrap().to_string()),
            Instruction::Goto(line as Line + 1),
        ];
        if depth >= 1 {
            options.extend([
                Instruction::Inc,
                Instruction::Pop,
                Instruction::Store(vars.choose(rng).unwrap().to_string()),
            ]);
        }
        if depth >= 2 {
            options.push(Instruction::Add);
        }
        // A trailing goto would leave the method.
        if line == len {
            options.remove(1);
        }
        let x = options.choose(rng).unwrap().clone();
        depth = (depth as i64 + x.stack_delta()) as usize;
        instrs.push(x);
    }
    MethodMap::from_instructions(instrs)
}

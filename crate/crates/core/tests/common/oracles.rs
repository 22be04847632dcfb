// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

//! Property checks with independent ground truth. Each returns `Err` with a
//! description of the first violation.

use std::collections::{BTreeMap, BTreeSet};

use patchverify::bytecode::{run_segment, ClassHierarchy, Instruction, Line, MachineState, MethodMap, Value};
use patchverify::patch::{Patch, PatchError, Patcher, UpdateInstr};
use patchverify::predicate::{fresh_name, simplify, sp_segment, wp_segment, Atom, Formula};
use patchverify::verifier::{
    apply_patch_incremental, verify_method, Configuration, ErrorClass, TypeState, VerifyError,
};

use super::{holds, IdMethod, ModelError, Succ};

/// How the incremental and the full route ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Agreement {
    /// Both accepted and the tables match at every line.
    Accepted,
    /// Both rejected with the same error class.
    Rejected(ErrorClass),
    /// The unpatched method does not verify, so there is nothing to update.
    BaseRejected,
}

fn full_route(m: &MethodMap, patch: &Patch, upto: usize, hier: &ClassHierarchy) -> Result<(), ErrorClass> {
    let prefix = Patch::new(patch.items[..upto].to_vec());
    let patched = Patcher::default()
        .apply(m, &prefix)
        .map_err(|_| ErrorClass::Structural)?
        .base;
    verify_method(&patched, &TypeState::entry(&patched), hier)
        .map(|_| ())
        .map_err(|e| e.class())
}

/// Folds the patch through the update rules and compares with verifying
/// the patched method from scratch. When the fold stops at item `k`, the
/// full route must reject the first `k + 1` items with the same class.
pub fn incremental_vs_full(m: &MethodMap, patch: &Patch, hier: &ClassHierarchy) -> Result<Agreement, String> {
    let Ok(start) = Configuration::verify(m, &TypeState::entry(m), hier) else {
        return Ok(Agreement::BaseRejected);
    };
    match apply_patch_incremental(&start, patch, hier) {
        Ok(cfg) => {
            let patched = Patcher::default()
                .apply(m, patch)
                .map_err(|e| format!("incremental accepted, patching failed: {e}"))?
                .base;
            if cfg.m != patched {
                return Err("incremental method differs from the patched method".into());
            }
            let full = verify_method(&patched, &TypeState::entry(&patched), hier)
                .map_err(|e| format!("incremental accepted, full verification rejected: {e}"))?;
            if cfg.vsem() != full {
                return Err(format!("tables differ:\nincremental {:?}\nfull {:?}", cfg.vsem(), full));
            }
            Ok(Agreement::Accepted)
        }
        Err(e) => {
            let VerifyError::AtItem { index, .. } = &e else {
                return Err(format!("error without an item index: {e}"));
            };
            match full_route(m, patch, index + 1, hier) {
                Ok(()) => Err(format!("incremental rejected ({e}), full verification accepted")),
                Err(class) if class == e.class() => Ok(Agreement::Rejected(class)),
                Err(class) => Err(format!(
                    "incremental rejected as {:?} ({e}), full as {class:?}",
                    e.class()
                )),
            }
        }
    }
}

/// Applies the patch item by item with `patcher` and compares the CFG over
/// instruction identities with the list model. Also checks that every edge
/// that changed touches the patched node or the fall-through into it.
pub fn cfg_isomorphism(patcher: &Patcher, m: &MethodMap, patch: &Patch) -> Result<usize, String> {
    let mut model = IdMethod::of(m);
    let mut cur = m.clone();
    let mut checked = 0;
    for item in &patch.items {
        let before = model.clone();
        let mut after = model.clone();
        let expected = after.apply(item);
        let actual = patcher.apply_item(&cur, item);
        let new_id = match (expected, actual) {
            (Ok(id), Ok((next, _))) => {
                cur = next;
                id
            }
            (Err(ModelError::DeletedTarget), Err(PatchError::JumpIntoDeleted { .. })) => return Ok(checked),
            (Err(ModelError::BadLine), Err(PatchError::InvalidLine { .. } | PatchError::DanglingTarget { .. })) => {
                return Ok(checked)
            }
            (Err(e), Ok(_)) => return Err(format!("{item}: model rejects ({e:?}), patcher accepts")),
            (Ok(_), Err(e)) => return Err(format!("{item}: model accepts, patcher rejects: {e}")),
            (Err(e), Err(p)) => return Err(format!("{item}: model error {e:?}, patcher error {p}")),
        };
        let actual_edges = after
            .edges_of(&cur)
            .ok_or_else(|| format!("{item}: instruction sequence differs"))?;
        let expected_edges = after.edges();
        if actual_edges != expected_edges {
            return Err(format!(
                "{item}: edges differ\nexpected {expected_edges:?}\nactual   {actual_edges:?}"
            ));
        }
        // Locality of the change.
        let old = before.edges();
        let patched_id = match item {
            UpdateInstr::Delete { at, .. } => before.nodes[*at as usize - 1].id,
            _ => new_id.expect("add and modify create a node"),
        };
        let neighbours = if matches!(item, UpdateInstr::Delete { .. }) {
            &before
        } else {
            &after
        };
        let pred = neighbours.predecessor(patched_id);
        let replaced_id = match item {
            UpdateInstr::Modify { at, .. } => Some(before.nodes[*at as usize - 1].id),
            _ => None,
        };
        for (from, to) in old.symmetric_difference(&expected_edges) {
            let touches = |id: usize| *from == id || *to == Succ::Node(id);
            let local = touches(patched_id) || replaced_id.is_some_and(touches) || Some(*from) == pred;
            if !local {
                return Err(format!("{item}: edge {from} -> {to:?} changed away from the patch"));
            }
        }
        model = after;
        checked += 1;
    }
    Ok(checked)
}

fn int_state(vars: &BTreeMap<Atom, i64>, stack: &[i64]) -> MachineState {
    let locals = vars
        .iter()
        .filter_map(|(a, v)| match a {
            Atom::Var(x) => Some((x.clone(), Value::Int(*v as i32))),
            Atom::Slot(_) => None,
        })
        .collect();
    MachineState::new(locals, stack.iter().map(|v| Value::Int(*v as i32)).collect())
}

/// Atom valuation of a machine state: every local plus the stack slots.
fn valuation(s: &MachineState) -> BTreeMap<Atom, i64> {
    let mut env = BTreeMap::new();
    for (x, v) in &s.locals {
        if let Value::Int(k) = v {
            env.insert(Atom::Var(x.clone()), *k as i64);
        }
    }
    for k in 0..s.stack.len() {
        if let Some(Value::Int(v)) = s.slot(k) {
            env.insert(Atom::Slot(k as u32), v as i64);
        }
    }
    env
}

/// Counts of the three properties checked by [`wp_sp_soundness`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WpSpCounts {
    pub wp_holds: usize,
    pub wp_fails: usize,
    pub sp_holds: usize,
}

/// Exhaustive check of a straight-line segment starting on an empty stack:
/// for every assignment of `vars` over `[-8, 7]`, the state satisfies
/// `wp(q)` exactly when the final state satisfies `q`, and every state
/// satisfying `p` ends in a state satisfying `sp(p)` with the fresh
/// variables bound to the values recorded along the run.
pub fn wp_sp_soundness(m: &MethodMap, vars: &[&str], p: &Formula, q: &Formula) -> Result<WpSpCounts, String> {
    let last = m.last_line().unwrap_or(0);
    let wp = wp_segment(m, 1, last, 0, q).map_err(|e| format!("wp: {e}"))?;
    let sp = sp_segment(p, m, 1, last, 0).map_err(|e| format!("sp: {e}"))?;
    let sp_simple = simplify(&sp);
    let atoms: Vec<Atom> = vars.iter().map(|v| Atom::Var(v.to_string())).collect();
    let mut counts = WpSpCounts::default();
    for env in super::assignments(&atoms, -8, 8) {
        // Record the state in front of every line for the sp witnesses.
        let mut trace: Vec<MachineState> = Vec::new();
        let mut s = int_state(&env, &[]);
        for line in 1..=last {
            trace.push(s.clone());
            s = run_segment(m, &s, line, line, 1).map_err(|e| format!("interpreter: {e}"))?;
        }
        let end = valuation(&s);
        let before = holds(&wp, &env).ok_or("wp mentions an unbound atom")?;
        let after = holds(q, &end).ok_or("q mentions an unbound atom")?;
        if before != after {
            return Err(format!(
                "wp {wp} is {before} at {env:?}, q {q} is {after} after the run"
            ));
        }
        if before {
            counts.wp_holds += 1;
        } else {
            counts.wp_fails += 1;
        }
        if holds(p, &env) == Some(true) {
            let mut witness = end.clone();
            for (idx, state) in trace.iter().enumerate() {
                let line = idx as Line + 1;
                for (atom, value) in valuation(state) {
                    witness
                        .entry(Atom::Var(fresh_name(&atom, Some(line), p)))
                        .or_insert(value);
                }
            }
            for f in [&sp, &sp_simple] {
                if holds(f, &witness) != Some(true) {
                    return Err(format!("sp {f} fails at {witness:?} (p {p} held at {env:?})"));
                }
            }
            counts.sp_holds += 1;
        }
    }
    Ok(counts)
}

/// The atoms a segment can mention at its end: the variables plus the
/// slots left on the stack.
pub fn end_atoms(m: &MethodMap, vars: &[&str]) -> Vec<patchverify::predicate::Term> {
    let depth: i64 = m.instructions().map(Instruction::stack_delta).sum();
    let mut out: Vec<_> = vars.iter().map(|v| patchverify::predicate::Term::var(v)).collect();
    out.extend((0..depth.max(0) as u32).map(patchverify::predicate::Term::Slot));
    out
}

/// Set of variable names a segment stores to or loads from.
pub fn segment_vars(m: &MethodMap) -> BTreeSet<String> {
    m.instructions()
        .filter_map(|i| i.variable().map(str::to_string))
        .collect()
}

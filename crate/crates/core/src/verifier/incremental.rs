// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use super::solve::{reach, solve, VSem};
use super::{successors, transfer, Flow, TypeState, VerifyError};
use crate::bytecode::{ClassHierarchy, Instruction, Line, MethodMap, TypeDesc};
use crate::patch::{apply_add, apply_delete, apply_modify, check_expected, Patch, PatchError, UpdateInstr};

/// A verified method together with its per-line typing and a cursor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub m: MethodMap,
    /// In-state of every reachable line.
    pub states: BTreeMap<Line, TypeState>,
    /// State when control leaves the method.
    pub exit: Option<TypeState>,
    /// Line following the most recent edit.
    pub cursor: Line,
    pub entry: TypeState,
}

impl Configuration {
    /// Full verification; the starting point for incremental updates.
    pub fn verify(m: &MethodMap, entry: &TypeState, hier: &ClassHierarchy) -> Result<Self, VerifyError> {
        if let Some((line, target)) = m.dangling_target() {
            return Err(PatchError::DanglingTarget { line, target }.into());
        }
        let region = m.dom().collect();
        let sol = solve(m, entry, hier, BTreeMap::new(), &region, None)?;
        Ok(Configuration {
            m: m.clone(),
            states: sol.states,
            exit: sol.exit,
            cursor: m.first_line().unwrap_or(1),
            entry: entry.clone(),
        })
    }

    pub fn vsem(&self) -> VSem {
        VSem::build(&self.m, &self.states, self.exit.clone())
    }
}

/// The state produced by an update rule and the rule's name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleConclusion {
    pub rule: &'static str,
    pub state: TypeState,
}

fn rule_name(x: &Instruction) -> &'static str {
    match x {
        Instruction::Pop => "add-pop",
        Instruction::If(_) => "add-if",
        Instruction::Store(_) => "add-store",
        Instruction::Load(_) => "add-load",
        Instruction::New(_) => "add-new",
        Instruction::Goto(_) => "add-goto",
        Instruction::Inc => "add-inc",
        Instruction::Add => "add-add",
        Instruction::InvokeVirtual { .. } => "add-invokevirtual",
        Instruction::GetField { .. } => "add-getfield",
        Instruction::PutField { .. } => "add-putfield",
    }
}

/// Conclusion of the addition rule for `x` given the premise state
/// in front of the inserted line.
///
/// `vars` is the variable set of the method being patched. Any violated side
/// condition is reported as [`VerifyError::RulePreconditionFailed`].
pub fn add_rule(
    x: &Instruction,
    premise: &TypeState,
    line: Line,
    vars: &BTreeSet<String>,
    hier: &ClassHierarchy,
) -> Result<RuleConclusion, VerifyError> {
    let rule = rule_name(x);
    let fail = |reason: String| VerifyError::RulePreconditionFailed { rule, line, reason };
    let state = match x {
        Instruction::Goto(_) => premise.clone(),
        Instruction::Pop => {
            let mut out = premise.clone();
            out.pop(line)
                .map_err(|_| fail("the stack in front of the line is empty".into()))?;
            out
        }
        Instruction::Store(v) => {
            if !vars.contains(v) {
                return Err(fail(format!("`{v}` is not a variable of the method")));
            }
            let mut out = premise.clone();
            let t = out
                .pop(line)
                .map_err(|_| fail("the stack in front of the line is empty".into()))?;
            out.locals.insert(v.clone(), t);
            out
        }
        Instruction::New(class) => {
            let mut out = premise.clone();
            out.push(TypeDesc::Class(class.clone()));
            out
        }
        _ => transfer(line, x, premise, hier).map_err(|e| fail(e.to_string()))?,
    };
    Ok(RuleConclusion { rule, state })
}

/// Effect of `instr` on the depth, the stack and the locals of a prior state,
/// taken together.
pub fn effects(
    line: Line,
    instr: &Instruction,
    prior: &TypeState,
    hier: &ClassHierarchy,
) -> Result<TypeState, VerifyError> {
    transfer(line, instr, prior, hier)
}

fn remap(states: &BTreeMap<Line, TypeState>, f: impl Fn(Line) -> Option<Line>) -> BTreeMap<Line, TypeState> {
    states.iter().filter_map(|(l, st)| Some((f(*l)?, st.clone()))).collect()
}

fn old_successors(m: &MethodMap, line: Line) -> Vec<Line> {
    let instr = m.get(line).expect("caller checked the line");
    successors(m, line, instr)
        .into_iter()
        .filter_map(|f| match f {
            Flow::Line(l) => Some(l),
            Flow::Exit => None,
        })
        .collect()
}

/// Re-solves the lines of `region` in `m2`, keeping every other state as in
/// `moved`, with `x`'s rule at `rule_at`.
fn resolve(
    cfg: &Configuration,
    m2: MethodMap,
    moved: BTreeMap<Line, TypeState>,
    region: BTreeSet<Line>,
    rule_at: Option<(Line, &Instruction)>,
    cursor: Line,
    hier: &ClassHierarchy,
) -> Result<Configuration, VerifyError> {
    let fixed = moved.into_iter().filter(|(l, _)| !region.contains(l)).collect();
    let vars = cfg.m.vars().clone();
    let sol = match rule_at {
        Some((at, x)) => {
            let f = |st: &TypeState| add_rule(x, st, at, &vars, hier).map(|c| c.state);
            solve(&m2, &cfg.entry, hier, fixed, &region, Some((at, &f)))?
        }
        None => solve(&m2, &cfg.entry, hier, fixed, &region, None)?,
    };
    Ok(Configuration {
        m: m2,
        states: sol.states,
        exit: sol.exit,
        cursor,
        entry: cfg.entry.clone(),
    })
}

/// Inserts `x` at `at` and retypes the lines the insertion can reach.
pub fn transfer_update_add(
    cfg: &Configuration,
    x: &Instruction,
    at: Line,
    hier: &ClassHierarchy,
) -> Result<Configuration, VerifyError> {
    let m2 = apply_add(&cfg.m, x, at)?;
    let shift = |l: Line| if l >= at { l + 1 } else { l };
    let moved = remap(&cfg.states, |l| Some(shift(l)));
    let mut region = reach(&m2, [at]);
    if cfg.m.contains(at) {
        region.extend(reach(&cfg.m, [at]).into_iter().map(shift));
    }
    resolve(cfg, m2, moved, region, Some((at, x)), at + 1, hier)
}

/// Removes the line at `at`; the instruction that slides into its place is
/// applied to the prior state through [`effects`].
pub fn transfer_update_delete(
    cfg: &Configuration,
    at: Line,
    hier: &ClassHierarchy,
) -> Result<Configuration, VerifyError> {
    let m2 = apply_delete(&cfg.m, at)?;
    let moved = remap(&cfg.states, |l| match l.cmp(&at) {
        std::cmp::Ordering::Less => Some(l),
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Greater => Some(l - 1),
    });
    let mut region = reach(&m2, [at]);
    let after: Vec<Line> = old_successors(&cfg.m, at).into_iter().filter(|l| *l != at).collect();
    region.extend(
        reach(&cfg.m, after)
            .into_iter()
            .filter(|l| *l != at)
            .map(|l| if l > at { l - 1 } else { l }),
    );
    resolve(cfg, m2, moved, region, None, at, hier)
}

/// Replaces the instruction at `at`: deletion followed by addition at the
/// same line, with no renumbering in between.
pub fn transfer_update_modify(
    cfg: &Configuration,
    x: &Instruction,
    at: Line,
    hier: &ClassHierarchy,
) -> Result<Configuration, VerifyError> {
    let m2 = apply_modify(&cfg.m, x, at)?;
    let mut region = reach(&m2, [at]);
    region.extend(reach(&cfg.m, [at]));
    resolve(cfg, m2, cfg.states.clone(), region, Some((at, x)), at + 1, hier)
}

pub fn transfer_update(
    cfg: &Configuration,
    item: &UpdateInstr,
    hier: &ClassHierarchy,
) -> Result<Configuration, VerifyError> {
    match item {
        UpdateInstr::Add { instr, at } => transfer_update_add(cfg, instr, *at, hier),
        UpdateInstr::Delete { at, expect } => {
            let found = cfg.m.get(*at).ok_or(PatchError::InvalidLine { line: *at })?;
            check_expected(*at, expect.as_ref(), found)?;
            transfer_update_delete(cfg, *at, hier)
        }
        UpdateInstr::Modify { instr, at } => transfer_update_modify(cfg, instr, *at, hier),
    }
}

/// Folds [`transfer_update`] over the patch. A failing item is reported
/// inside [`VerifyError::AtItem`].
pub fn apply_patch_incremental(
    cfg: &Configuration,
    patch: &Patch,
    hier: &ClassHierarchy,
) -> Result<Configuration, VerifyError> {
    let mut cur = cfg.clone();
    for (index, item) in patch.items.iter().enumerate() {
        cur = transfer_update(&cur, item, hier).map_err(|e| VerifyError::AtItem {
            index,
            source: Box::new(e),
        })?;
    }
    Ok(cur)
}

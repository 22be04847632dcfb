// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{successors, transfer, Flow, TypeState, VerifyError};
use crate::bytecode::{ClassHierarchy, Instruction, Line, MethodMap};
use crate::patch::PatchError;

/// Transfer used in place of [`transfer`] at one distinguished line.
pub(crate) type Override<'a> = (Line, &'a dyn Fn(&TypeState) -> Result<TypeState, VerifyError>);

pub(crate) struct Solution {
    pub states: BTreeMap<Line, TypeState>,
    pub exit: Option<TypeState>,
}

fn merge_into(
    slot: &mut Option<TypeState>,
    incoming: &TypeState,
    line: Line,
    hier: &ClassHierarchy,
) -> Result<bool, VerifyError> {
    match slot {
        None => {
            *slot = Some(incoming.clone());
            Ok(true)
        }
        Some(old) => {
            let joined = old.join(incoming, line, hier)?;
            let changed = joined != *old;
            *old = joined;
            Ok(changed)
        }
    }
}

/// Forward dataflow over the lines in `region`.
///
/// `fixed` holds the in-states of lines outside the region; they are taken
/// as final. The region must be closed under successors, so nothing flows
/// from it back into a fixed line. The worklist always takes the lowest
/// pending line.
pub(crate) fn solve(
    m: &MethodMap,
    entry: &TypeState,
    hier: &ClassHierarchy,
    fixed: BTreeMap<Line, TypeState>,
    region: &BTreeSet<Line>,
    over: Option<Override<'_>>,
) -> Result<Solution, VerifyError> {
    let step = |line: Line, instr: &Instruction, st: &TypeState| match over {
        Some((at, f)) if at == line => f(st),
        _ => transfer(line, instr, st, hier),
    };

    let mut pending: BTreeMap<Line, TypeState> = BTreeMap::new();
    let mut work = BTreeSet::new();
    let mut seed = |line: Line, st: &TypeState, work: &mut BTreeSet<Line>| -> Result<(), VerifyError> {
        let mut slot = pending.remove(&line);
        merge_into(&mut slot, st, line, hier)?;
        pending.insert(line, slot.expect("just merged"));
        work.insert(line);
        Ok(())
    };

    if let Some(first) = m.first_line().filter(|l| region.contains(l)) {
        seed(first, entry, &mut work)?;
    }
    for (line, st) in &fixed {
        let instr = m.get(*line).expect("fixed states name lines of the method");
        let out = step(*line, instr, st)?;
        for flow in successors(m, *line, instr) {
            if let Flow::Line(s) = flow {
                if region.contains(&s) {
                    seed(s, &out, &mut work)?;
                }
            }
        }
    }

    let mut states = pending;
    while let Some(line) = work.pop_first() {
        let instr = m.get(line).expect("worklist holds lines of the method");
        let out = step(line, instr, &states[&line])?;
        for flow in successors(m, line, instr) {
            if let Flow::Line(s) = flow {
                debug_assert!(region.contains(&s), "region must be closed under successors");
                let mut slot = states.remove(&s);
                let changed = merge_into(&mut slot, &out, s, hier)?;
                states.insert(s, slot.expect("just merged"));
                if changed {
                    work.insert(s);
                }
            }
        }
    }

    states.extend(fixed);
    let mut exit = None;
    for (line, st) in &states {
        let instr = m.get(*line).expect("states name lines of the method");
        if successors(m, *line, instr).contains(&Flow::Exit) {
            let out = step(*line, instr, st)?;
            merge_into(&mut exit, &out, *line, hier)?;
        }
    }
    Ok(Solution { states, exit })
}

/// Lines reachable from `roots` (roots included).
pub(crate) fn reach(m: &MethodMap, roots: impl IntoIterator<Item = Line>) -> BTreeSet<Line> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<Line> = roots.into_iter().filter(|l| m.contains(*l)).collect();
    while let Some(line) = stack.pop() {
        if !seen.insert(line) {
            continue;
        }
        let instr = m.get(line).expect("reach only visits lines of the method");
        for flow in successors(m, line, instr) {
            if let Flow::Line(s) = flow {
                if m.contains(s) && !seen.contains(&s) {
                    stack.push(s);
                }
            }
        }
    }
    seen
}

/// One line of a verified method table, renumbered canonically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VSemLine {
    pub line: Line,
    #[serde(serialize_with = "crate::verifier::report::display_str")]
    pub instr: Instruction,
    /// `None` when the line is unreachable.
    pub state: Option<TypeState>,
}

/// The verified semantics of a method: its instruction sequence and the
/// type state before every line, numbered `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VSem {
    pub lines: Vec<VSemLine>,
    /// State when control falls off the end of the method.
    pub exit: Option<TypeState>,
}

impl VSem {
    pub(crate) fn build(m: &MethodMap, states: &BTreeMap<Line, TypeState>, exit: Option<TypeState>) -> VSem {
        let canon: BTreeMap<Line, Line> = m.dom().zip(1..).collect();
        let lines = m
            .entries()
            .map(|(line, instr)| {
                let instr = match instr.jump_target() {
                    Some(t) => instr.with_target(canon[&t]),
                    None => instr.clone(),
                };
                VSemLine {
                    line: canon[&line],
                    instr,
                    state: states.get(&line).cloned(),
                }
            })
            .collect();
        VSem { lines, exit }
    }

    pub fn state(&self, line: Line) -> Option<&TypeState> {
        self.lines.get(line.checked_sub(1)? as usize)?.state.as_ref()
    }

    pub fn unreachable(&self) -> Vec<Line> {
        self.lines
            .iter()
            .filter(|l| l.state.is_none())
            .map(|l| l.line)
            .collect()
    }
}

/// Full verification of a method from the given entry state.
pub fn verify_method(m: &MethodMap, entry: &TypeState, hier: &ClassHierarchy) -> Result<VSem, VerifyError> {
    if let Some((line, target)) = m.dangling_target() {
        return Err(PatchError::DanglingTarget { line, target }.into());
    }
    let region: BTreeSet<Line> = m.dom().collect();
    let sol = solve(m, entry, hier, BTreeMap::new(), &region, None)?;
    Ok(VSem::build(m, &sol.states, sol.exit))
}

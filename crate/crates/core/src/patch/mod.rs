// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

//! Update instructions and the mapping operations that apply them.
//!
//! A patch is an ordered list of `add`, `del` and `mod` items. Every item
//! addresses lines of the method as already rewritten by the items before
//! it. Inserting or removing a line renumbers everything after it, so the
//! engine shifts the tail of the mapping ([`shift`]) and retargets the jumps
//! that pointed past the edit ([`look_for_jumps`], [`update_jumps`]).

mod dsl;

use std::fmt;

use crate::bytecode::{Instruction, Line, MethodMap};

pub use dsl::parse_patch;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatchError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("inverted range [{from}, {to}]")]
    InvertedRange { from: Line, to: Line },
    #[error("shifted entry lands on occupied line {line}")]
    Collision { line: Line },
    #[error("line {line} is not a valid position")]
    InvalidLine { line: Line },
    #[error("line {line} does not hold a jump")]
    NotAJump { line: Line },
    #[error("jump at line {line} targets {target}, which is not in the method")]
    DanglingTarget { line: Line, target: Line },
    #[error("cannot delete line {line}: the jump at line {jump} targets it")]
    JumpIntoDeleted { line: Line, jump: Line },
    #[error("line {line} holds `{found}`, but the patch deletes `{expected}`")]
    MismatchedDelete {
        line: Line,
        expected: Box<Instruction>,
        found: Box<Instruction>,
    },
    #[error("patch item {}: {source}", .index + 1)]
    Item {
        index: usize,
        #[source]
        source: Box<PatchError>,
    },
}

impl PatchError {
    /// Strips the [`PatchError::Item`] wrapper.
    pub fn root(&self) -> &PatchError {
        match self {
            PatchError::Item { source, .. } => source.root(),
            other => other,
        }
    }
}

/// One update directive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UpdateInstr {
    Add {
        instr: Instruction,
        at: Line,
    },
    /// `expect`, when present, must match the instruction being removed.
    Delete {
        at: Line,
        expect: Option<Instruction>,
    },
    Modify {
        instr: Instruction,
        at: Line,
    },
}

impl UpdateInstr {
    pub fn at(&self) -> Line {
        match self {
            UpdateInstr::Add { at, .. } | UpdateInstr::Delete { at, .. } | UpdateInstr::Modify { at, .. } => *at,
        }
    }
}

impl fmt::Display for UpdateInstr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UpdateInstr::Add { instr, at } => write!(f, "add %{at} {instr}"),
            UpdateInstr::Delete { at, expect: None } => write!(f, "del %{at}"),
            UpdateInstr::Delete { at, expect: Some(i) } => write!(f, "del %{at} {i}"),
            UpdateInstr::Modify { instr, at } => write!(f, "mod %{at} {instr}"),
        }
    }
}

/// An ordered list of update instructions with optional version labels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Patch {
    pub items: Vec<UpdateInstr>,
    pub source: Option<String>,
    pub target: Option<String>,
}

impl Patch {
    pub fn new(items: Vec<UpdateInstr>) -> Self {
        Patch {
            items,
            ..Default::default()
        }
    }
}

impl fmt::Display for Patch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(s) = &self.source {
            writeln!(f, "# source: {s}")?;
        }
        if let Some(t) = &self.target {
            writeln!(f, "# target: {t}")?;
        }
        for item in &self.items {
            writeln!(f, "{item}")?;
        }
        Ok(())
    }
}

/// Record of one applied item.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annotation {
    pub index: usize,
    pub item: UpdateInstr,
    /// Line the item addressed when it was applied.
    pub line: Line,
    /// Where the touched line ended up after the whole patch, if it survived.
    pub final_line: Option<Line>,
    /// Instruction removed or replaced by the item.
    pub replaced: Option<Instruction>,
}

/// Result of [`apply_patch`]: the patched method plus the edit log.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedMethod {
    pub base: MethodMap,
    pub annotations: Vec<Annotation>,
}

impl AnnotatedMethod {
    /// Listing of the patched code with `+` marking inserted lines and `~`
    /// modified ones; deletions are listed in the header.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        for a in &self.annotations {
            out.push_str(&format!("# [{}] {}", a.index + 1, a.item));
            match (&a.item, a.final_line, &a.replaced) {
                (UpdateInstr::Delete { .. }, _, Some(old)) => out.push_str(&format!("  (removed `{old}`)")),
                (_, Some(l), _) => out.push_str(&format!("  -> line {l}")),
                (_, None, _) => out.push_str("  (later removed)"),
            }
            out.push('\n');
        }
        for (line, instr) in self.base.entries() {
            let marker = self
                .annotations
                .iter()
                .rev()
                .find(|a| a.final_line == Some(line))
                .map_or(' ', |a| match a.item {
                    UpdateInstr::Add { .. } => '+',
                    _ => '~',
                });
            out.push_str(&format!("{marker} {line}: {instr}\n"));
        }
        out
    }
}

/// `range(m, n, hi)`: the entries with `n <= line <= hi`, lines preserved.
pub fn range(m: &MethodMap, n: Line, hi: Line) -> Result<MethodMap, PatchError> {
    if n > hi {
        return Err(PatchError::InvertedRange { from: n, to: hi });
    }
    let mut out = m.empty_like();
    for (line, instr) in m.entries.range(n..=hi) {
        out.put(*line, instr.clone());
    }
    Ok(out)
}

/// `shift(m, n, hi, p)`: moves every entry in `[n, hi]` by `p` lines.
///
/// Jump targets are left alone. Fails when a moved entry would land on an
/// entry outside the range, or below line 1.
pub fn shift(m: &MethodMap, n: Line, hi: Line, p: i64) -> Result<MethodMap, PatchError> {
    if n > hi {
        return Err(PatchError::InvertedRange { from: n, to: hi });
    }
    if p == 0 {
        return Ok(m.clone());
    }
    let mut out = m.empty_like();
    let mut moved = Vec::new();
    for (line, instr) in m.entries() {
        if (n..=hi).contains(&line) {
            let to = line as i64 + p;
            if to < 1 || to > Line::MAX as i64 {
                return Err(PatchError::InvalidLine { line });
            }
            moved.push((to as Line, instr.clone()));
        } else {
            out.put(line, instr.clone());
        }
    }
    for (line, instr) in moved {
        if out.contains(line) {
            return Err(PatchError::Collision { line });
        }
        out.put(line, instr);
    }
    Ok(out)
}

/// Lines holding a `goto` or `if`, ascending.
pub fn look_for_jumps(m: &MethodMap) -> Vec<Line> {
    m.entries().filter(|(_, i)| i.is_jump()).map(|(l, _)| l).collect()
}

/// Adds `delta` to the target of each listed jump whose target is at or
/// after `pivot`. Instruction positions are not touched.
pub fn update_jumps(m: &MethodMap, jumps: &[Line], pivot: Line, delta: i64) -> Result<MethodMap, PatchError> {
    let mut out = m.clone();
    if delta == 0 {
        return Ok(out);
    }
    for &line in jumps {
        let instr = m.get(line).ok_or(PatchError::InvalidLine { line })?;
        let target = instr.jump_target().ok_or(PatchError::NotAJump { line })?;
        if target < pivot {
            continue;
        }
        let moved = target as i64 + delta;
        if moved < 1 || moved > Line::MAX as i64 {
            return Err(PatchError::InvalidLine { line: target });
        }
        out.put(line, instr.with_target(moved as Line));
    }
    Ok(out)
}

/// Signature of the jump-retargeting step used by [`Patcher`].
pub type RetargetFn = fn(&MethodMap, &[Line], Line, i64) -> Result<MethodMap, PatchError>;

/// The composite rewrites behind `add`, `del` and `mod`.
///
/// The default patcher uses [`update_jumps`]. A different retargeting step
/// can be plugged in with [`Patcher::with_retarget`], which is how the test
/// suites check that the CFG oracles notice a broken one.
#[derive(Clone, Copy, Debug)]
pub struct Patcher {
    retarget: RetargetFn,
}

impl Default for Patcher {
    fn default() -> Self {
        Patcher { retarget: update_jumps }
    }
}

impl Patcher {
    pub fn with_retarget(retarget: RetargetFn) -> Self {
        Patcher { retarget }
    }

    /// Inserts `x` before the instruction currently at `at` (or appends it
    /// when `at` is one past the last line).
    pub fn add(&self, m: &MethodMap, x: &Instruction, at: Line) -> Result<MethodMap, PatchError> {
        let last = m.last_line().unwrap_or(0);
        if at == 0 || (at <= last && !m.contains(at)) || at > last + 1 {
            return Err(PatchError::InvalidLine { line: at });
        }
        let shifted = if at <= last { shift(m, at, last, 1)? } else { m.clone() };
        let mut out = (self.retarget)(&shifted, &look_for_jumps(&shifted), at, 1)?;
        out.put(at, x.clone());
        check_targets(&out)?;
        Ok(out)
    }

    /// Removes the instruction at `at` and closes the gap.
    pub fn delete(&self, m: &MethodMap, at: Line) -> Result<MethodMap, PatchError> {
        if !m.contains(at) {
            return Err(PatchError::InvalidLine { line: at });
        }
        if let Some(jump) = m
            .entries()
            .find(|(l, i)| *l != at && i.jump_target() == Some(at))
            .map(|(l, _)| l)
        {
            return Err(PatchError::JumpIntoDeleted { line: at, jump });
        }
        let mut removed = m.clone();
        removed.take(at);
        let last = m.last_line().unwrap_or(0);
        let shifted = if at < last {
            shift(&removed, at + 1, last, -1)?
        } else {
            removed
        };
        let out = (self.retarget)(&shifted, &look_for_jumps(&shifted), at + 1, -1)?;
        check_targets(&out)?;
        Ok(out)
    }

    /// Replaces the instruction at `at`; no line moves.
    pub fn modify(&self, m: &MethodMap, x: &Instruction, at: Line) -> Result<MethodMap, PatchError> {
        if !m.contains(at) {
            return Err(PatchError::InvalidLine { line: at });
        }
        let mut out = m.clone();
        out.put(at, x.clone());
        check_targets(&out)?;
        Ok(out)
    }

    /// Applies one item. Returns the new method and the instruction the item
    /// removed or replaced.
    pub fn apply_item(
        &self,
        m: &MethodMap,
        item: &UpdateInstr,
    ) -> Result<(MethodMap, Option<Instruction>), PatchError> {
        match item {
            UpdateInstr::Add { instr, at } => Ok((self.add(m, instr, *at)?, None)),
            UpdateInstr::Delete { at, expect } => {
                let found = m.get(*at).cloned().ok_or(PatchError::InvalidLine { line: *at })?;
                check_expected(*at, expect.as_ref(), &found)?;
                Ok((self.delete(m, *at)?, Some(found)))
            }
            UpdateInstr::Modify { instr, at } => {
                let old = m.get(*at).cloned();
                Ok((self.modify(m, instr, *at)?, old))
            }
        }
    }

    pub fn apply(&self, m: &MethodMap, patch: &Patch) -> Result<AnnotatedMethod, PatchError> {
        let mut base = m.clone();
        let mut annotations: Vec<Annotation> = Vec::new();
        for (index, item) in patch.items.iter().enumerate() {
            let (next, replaced) = self.apply_item(&base, item).map_err(|e| PatchError::Item {
                index,
                source: Box::new(e),
            })?;
            for a in &mut annotations {
                a.final_line = a.final_line.and_then(|l| follow_line(item, l));
            }
            let line = item.at();
            annotations.push(Annotation {
                index,
                item: item.clone(),
                line,
                final_line: match item {
                    UpdateInstr::Delete { .. } => None,
                    _ => Some(line),
                },
                replaced,
            });
            base = next;
        }
        Ok(AnnotatedMethod { base, annotations })
    }
}

/// Where a line that existed before `item` sits afterwards.
fn follow_line(item: &UpdateInstr, line: Line) -> Option<Line> {
    match item {
        UpdateInstr::Add { at, .. } if line >= *at => Some(line + 1),
        UpdateInstr::Delete { at, .. } if line == *at => None,
        UpdateInstr::Delete { at, .. } if line > *at => Some(line - 1),
        _ => Some(line),
    }
}

pub(crate) fn check_expected(at: Line, expect: Option<&Instruction>, found: &Instruction) -> Result<(), PatchError> {
    match expect {
        Some(expected) if expected != found => Err(PatchError::MismatchedDelete {
            line: at,
            expected: Box::new(expected.clone()),
            found: Box::new(found.clone()),
        }),
        _ => Ok(()),
    }
}

fn check_targets(m: &MethodMap) -> Result<(), PatchError> {
    match m.dangling_target() {
        Some((line, target)) => Err(PatchError::DanglingTarget { line, target }),
        None => Ok(()),
    }
}

/// `m ⊕ (x, at)` with the default patcher.
pub fn apply_add(m: &MethodMap, x: &Instruction, at: Line) -> Result<MethodMap, PatchError> {
    Patcher::default().add(m, x, at)
}

pub fn apply_delete(m: &MethodMap, at: Line) -> Result<MethodMap, PatchError> {
    Patcher::default().delete(m, at)
}

pub fn apply_modify(m: &MethodMap, x: &Instruction, at: Line) -> Result<MethodMap, PatchError> {
    Patcher::default().modify(m, x, at)
}

/// Folds the patch items over `m` in order. The first failing item aborts
/// with [`PatchError::Item`].
pub fn apply_patch(m: &MethodMap, patch: &Patch) -> Result<AnnotatedMethod, PatchError> {
    Patcher::default().apply(m, patch)
}

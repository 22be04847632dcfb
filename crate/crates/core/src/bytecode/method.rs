// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use super::{instr_length, Instruction, Line, TypeDesc};

/// A method body: the mapping from line numbers to instructions.
///
/// Besides the entries the map carries the declared parameters (which fix
/// the entry typing), the variable set and `pc_max`, the encoded
/// size of the body in bytes. `pc_max` always equals the sum of
/// [`instr_length`] over the entries; patch operations keep it in step
/// incrementally.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MethodMap {
    pub(crate) entries: BTreeMap<Line, Instruction>,
    pub(crate) pc_max: u32,
    pub(crate) vars: BTreeSet<String>,
    pub(crate) params: Vec<(String, TypeDesc)>,
}

impl MethodMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a method with lines `1..=n` in iteration order.
    pub fn from_instructions<I>(instrs: I) -> Self
    where
        I: IntoIterator<Item = Instruction>,
    {
        Self::from_entries((1..).zip(instrs))
    }

    /// Builds a method from explicit `(line, instruction)` pairs. Gaps are
    /// allowed; later duplicates replace earlier ones.
    pub fn from_entries<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (Line, Instruction)>,
    {
        let mut m = MethodMap::default();
        for (line, instr) in entries {
            m.put(line, instr);
        }
        m
    }

    pub fn with_params(mut self, params: Vec<(String, TypeDesc)>) -> Self {
        for (name, _) in &params {
            self.vars.insert(name.clone());
        }
        self.params = params;
        self
    }

    /// Adds variables to the variable set without referencing them in code.
    pub fn with_vars<I, S>(mut self, vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.vars.extend(vars.into_iter().map(Into::into));
        self
    }

    pub(crate) fn put(&mut self, line: Line, instr: Instruction) -> Option<Instruction> {
        if let Some(x) = instr.variable() {
            self.vars.insert(x.to_string());
        }
        self.pc_max += instr_length(&instr);
        let old = self.entries.insert(line, instr);
        if let Some(old) = &old {
            self.pc_max -= instr_length(old);
        }
        old
    }

    pub(crate) fn take(&mut self, line: Line) -> Option<Instruction> {
        let old = self.entries.remove(&line)?;
        self.pc_max -= instr_length(&old);
        Some(old)
    }

    /// Same method metadata with no entries.
    pub(crate) fn empty_like(&self) -> MethodMap {
        MethodMap {
            entries: BTreeMap::new(),
            pc_max: 0,
            vars: self.vars.clone(),
            params: self.params.clone(),
        }
    }

    pub fn get(&self, line: Line) -> Option<&Instruction> {
        self.entries.get(&line)
    }

    pub fn contains(&self, line: Line) -> bool {
        self.entries.contains_key(&line)
    }

    pub fn entries(&self) -> impl DoubleEndedIterator<Item = (Line, &Instruction)> + '_ {
        self.entries.iter().map(|(l, i)| (*l, i))
    }

    pub fn instructions(&self) -> impl DoubleEndedIterator<Item = &Instruction> + '_ {
        self.entries.values()
    }

    /// `DOM(BC)`: the lines in use, ascending.
    pub fn dom(&self) -> impl DoubleEndedIterator<Item = Line> + '_ {
        self.entries.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn first_line(&self) -> Option<Line> {
        self.entries.keys().next().copied()
    }

    /// Highest line in use (`last_line` in the triple calculus).
    pub fn last_line(&self) -> Option<Line> {
        self.entries.keys().next_back().copied()
    }

    /// Next line in `DOM` order after `line`.
    pub fn next_line(&self, line: Line) -> Option<Line> {
        self.entries.range(line.saturating_add(1)..).next().map(|(l, _)| *l)
    }

    /// Encoded size in bytes.
    pub fn pc_max(&self) -> u32 {
        self.pc_max
    }

    /// Parameters, declared variables and every variable the code names.
    pub fn vars(&self) -> &BTreeSet<String> {
        &self.vars
    }

    pub fn params(&self) -> &[(String, TypeDesc)] {
        &self.params
    }

    /// True when the lines are exactly `1..=len`.
    pub fn is_contiguous(&self) -> bool {
        self.entries.keys().copied().eq(1..=self.entries.len() as Line)
    }

    /// First jump whose target is not in `DOM`, as `(line, target)`.
    pub fn dangling_target(&self) -> Option<(Line, Line)> {
        self.entries.iter().find_map(|(line, instr)| {
            instr
                .jump_target()
                .filter(|t| !self.entries.contains_key(t))
                .map(|t| (*line, t))
        })
    }
}

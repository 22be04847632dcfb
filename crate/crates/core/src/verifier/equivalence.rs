// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::Serialize;

use super::solve::VSem;
use super::TypeState;
use crate::bytecode::Line;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    /// The methods have different numbers of lines.
    Length,
    Instruction,
    /// One side reaches the line, the other does not.
    Reachability,
    Depth,
    Stack,
    /// A variable typed on both sides has different types.
    Local,
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DivergenceKind::Length => "length",
            DivergenceKind::Instruction => "instruction",
            DivergenceKind::Reachability => "reachability",
            DivergenceKind::Depth => "SD",
            DivergenceKind::Stack => "S",
            DivergenceKind::Local => "F",
        })
    }
}

/// First point where two tables differ. `line` is `None` for a mismatch at
/// method exit or in length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub line: Option<Line>,
    pub kind: DivergenceKind,
    pub left: String,
    pub right: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Equivalent,
    Divergent(Divergence),
}

impl Verdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Verdict::Equivalent)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Equivalent => f.write_str("equivalent"),
            Verdict::Divergent(d) => {
                match d.line {
                    Some(l) => write!(f, "divergent at line {l} ({})", d.kind)?,
                    None if d.kind == DivergenceKind::Length => write!(f, "divergent ({})", d.kind)?,
                    None => write!(f, "divergent at exit ({})", d.kind)?,
                }
                write!(f, ": {} vs {}", d.left, d.right)
            }
        }
    }
}

fn show(st: Option<&TypeState>) -> String {
    st.map_or_else(|| "unreachable".to_string(), ToString::to_string)
}

fn compare_states(line: Option<Line>, a: Option<&TypeState>, b: Option<&TypeState>) -> Option<Divergence> {
    let div = |kind, left: String, right: String| Divergence {
        line,
        kind,
        left,
        right,
    };
    let (a, b) = match (a, b) {
        (Some(a), Some(b)) => (a, b),
        (None, None) => return None,
        _ => return Some(div(DivergenceKind::Reachability, show(a), show(b))),
    };
    if a.depth() != b.depth() {
        return Some(div(DivergenceKind::Depth, a.depth().to_string(), b.depth().to_string()));
    }
    if a.stack_top_first() != b.stack_top_first() {
        return Some(div(DivergenceKind::Stack, a.to_string(), b.to_string()));
    }
    for (x, ta) in &a.locals {
        if let Some(tb) = b.locals.get(x) {
            if ta != tb {
                return Some(div(DivergenceKind::Local, format!("{x}:{ta}"), format!("{x}:{tb}")));
            }
        }
    }
    None
}

/// Compares the patched version's table against the reference version's.
///
/// Equivalent iff the canonical instruction sequences are identical and, at
/// every line and at exit, the depths and stacks agree and the locals agree
/// wherever both sides type them.
pub fn check_equivalence(v12: &VSem, v2: &VSem) -> Verdict {
    for (a, b) in v12.lines.iter().zip(&v2.lines) {
        if a.instr != b.instr {
            return Verdict::Divergent(Divergence {
                line: Some(a.line),
                kind: DivergenceKind::Instruction,
                left: a.instr.to_string(),
                right: b.instr.to_string(),
            });
        }
    }
    if v12.lines.len() != v2.lines.len() {
        return Verdict::Divergent(Divergence {
            line: None,
            kind: DivergenceKind::Length,
            left: v12.lines.len().to_string(),
            right: v2.lines.len().to_string(),
        });
    }
    for (a, b) in v12.lines.iter().zip(&v2.lines) {
        if let Some(d) = compare_states(Some(a.line), a.state.as_ref(), b.state.as_ref()) {
            return Verdict::Divergent(d);
        }
    }
    match compare_states(None, v12.exit.as_ref(), v2.exit.as_ref()) {
        Some(d) => Verdict::Divergent(d),
        None => Verdict::Equivalent,
    }
}

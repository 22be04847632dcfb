// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

//! The `.diff` update language.
//!
//! ```text
//! # source: V1
//! # target: V2
//! del %2
//! add %6 inc
//! mod %3 load x
//! ```

use super::{Patch, PatchError, UpdateInstr};
use crate::bytecode::{strip_comment, Line};

fn parse_error(line: usize, reason: impl Into<String>) -> PatchError {
    PatchError::Parse {
        line,
        reason: reason.into(),
    }
}

fn label(text: &str, key: &str) -> Option<String> {
    let rest = text.trim_start_matches('#').trim_start();
    let value = rest.strip_prefix(key)?.trim_start().strip_prefix(':')?.trim();
    (!value.is_empty()).then(|| value.to_string())
}

pub fn parse_patch(text: &str) -> Result<Patch, PatchError> {
    let mut patch = Patch::default();
    for (idx, raw) in text.lines().enumerate() {
        let src = idx + 1;
        let trimmed = raw.trim();
        if trimmed.starts_with('#') {
            if let Some(s) = label(trimmed, "source") {
                patch.source = Some(s);
            } else if let Some(t) = label(trimmed, "target") {
                patch.target = Some(t);
            }
            continue;
        }
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        let (keyword, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let rest = rest.trim_start();
        let (pc, instr_text) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
        let at: Line = pc
            .strip_prefix('%')
            .and_then(|n| n.parse().ok())
            .filter(|n| *n >= 1)
            .ok_or_else(|| parse_error(src, format!("expected `%PC` with PC >= 1, found `{pc}`")))?;
        let instr_text = instr_text.trim();
        let instr = || {
            if instr_text.is_empty() {
                Err(parse_error(src, format!("`{keyword}` needs an instruction")))
            } else {
                instr_text.parse().map_err(|e| parse_error(src, e))
            }
        };
        let item = match keyword.to_ascii_lowercase().as_str() {
            "add" => UpdateInstr::Add { instr: instr()?, at },
            "mod" => UpdateInstr::Modify { instr: instr()?, at },
            "del" => UpdateInstr::Delete {
                at,
                expect: if instr_text.is_empty() { None } else { Some(instr()?) },
            },
            other => return Err(parse_error(src, format!("unknown update keyword `{other}`"))),
        };
        patch.items.push(item);
    }
    Ok(patch)
}

// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

use std::fmt::Display;

use serde::Serializer;

use super::solve::VSem;

pub(crate) fn display_str<T: Display, S: Serializer>(value: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(value)
}

/// Human-readable table: one line per instruction with its in-state.
pub fn render_vsem(v: &VSem) -> String {
    let width = v.lines.iter().map(|l| l.instr.to_string().len()).max().unwrap_or(0);
    let mut out = String::new();
    for l in &v.lines {
        let state = l
            .state
            .as_ref()
            .map_or_else(|| "unreachable".to_string(), ToString::to_string);
        out.push_str(&format!("{:>3}: {:<width$}  {state}\n", l.line, l.instr.to_string()));
    }
    match &v.exit {
        Some(st) => out.push_str(&format!("exit: {st}\n")),
        None => out.push_str("exit: unreachable\n"),
    }
    out
}

/// JSON form of the table. Keys are sorted, so the output is stable.
pub fn vsem_json(v: &VSem) -> serde_json::Value {
    let mut value = serde_json::to_value(v).expect("tables serialize");
    if let serde_json::Value::Object(map) = &mut value {
        map.insert("schema".into(), 1.into());
    }
    value
}

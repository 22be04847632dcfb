// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

//! The `.bc` method text format.
//!
//! ```text
//! # params x:int, r:A
//! # vars y
//! 1: load x
//! 2: inc
//! 3: store y
//! ```
//!
//! Labels must run `1, 2, 3, ...` in file order. `#` starts a comment, except
//! for the two header directives `# params` and `# vars`.

use std::fmt;
use std::str::FromStr;

use super::{is_class_name, is_var_name, strip_comment, Instruction, Line, MethodMap, MethodSig, TypeDesc};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    /// `line` is the 1-based line of the source text.
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    /// `line` is the instruction label holding the jump.
    #[error("jump at line {line} targets {target}, which is not in the method")]
    DanglingTarget { line: Line, target: Line },
}

fn syntax(line: usize, reason: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        reason: reason.into(),
    }
}

impl FromStr for TypeDesc {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "int" => Ok(TypeDesc::Int),
            "top" => Ok(TypeDesc::Top),
            _ if is_class_name(s) => Ok(TypeDesc::Class(s.to_string())),
            _ => Err(format!("invalid type `{s}`")),
        }
    }
}

impl FromStr for MethodSig {
    type Err = String;

    /// Parses `(int,A)->void`. Whitespace is ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || format!("invalid signature `{s}`, expected `(t1,...,tn)->t`");
        let rest = compact.strip_prefix('(').ok_or_else(bad)?;
        let (args, ret) = rest.split_once(")->").ok_or_else(bad)?;
        let args = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',').map(TypeDesc::from_str).collect::<Result<Vec<_>, _>>()?
        };
        let ret = match ret {
            "void" => None,
            t => Some(t.parse()?),
        };
        Ok(MethodSig { args, ret })
    }
}

impl FromStr for Instruction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let words: Vec<&str> = s.split_whitespace().collect();
        let Some((&mnemonic, args)) = words.split_first() else {
            return Err("missing instruction".to_string());
        };
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(format!("`{mnemonic}` takes {n} operand(s), found {}", args.len()))
            }
        };
        let line = |s: &str| {
            s.parse::<Line>()
                .ok()
                .filter(|l| *l >= 1)
                .ok_or_else(|| format!("invalid line number `{s}`"))
        };
        let var = |s: &str| {
            if is_var_name(s) {
                Ok(s.to_string())
            } else {
                Err(format!("invalid variable name `{s}`"))
            }
        };
        let class = |s: &str| {
            if is_class_name(s) {
                Ok(s.to_string())
            } else {
                Err(format!("invalid class name `{s}`"))
            }
        };
        let instr = match mnemonic {
            "pop" => arity(0).map(|_| Instruction::Pop)?,
            "inc" => arity(0).map(|_| Instruction::Inc)?,
            "add" => arity(0).map(|_| Instruction::Add)?,
            "if" => {
                arity(1)?;
                Instruction::If(line(args[0])?)
            }
            "goto" => {
                arity(1)?;
                Instruction::Goto(line(args[0])?)
            }
            "store" => {
                arity(1)?;
                Instruction::Store(var(args[0])?)
            }
            "load" => {
                arity(1)?;
                Instruction::Load(var(args[0])?)
            }
            "new" => {
                arity(1)?;
                Instruction::New(class(args[0])?)
            }
            "getfield" | "putfield" => {
                arity(3)?;
                let class = class(args[0])?;
                let field = var(args[1])?;
                let ty = args[2].parse()?;
                if mnemonic == "getfield" {
                    Instruction::GetField { class, field, ty }
                } else {
                    Instruction::PutField { class, field, ty }
                }
            }
            "invokevirtual" => {
                if args.len() < 3 {
                    return Err("`invokevirtual` expects `A m (t1,...)->t`".to_string());
                }
                Instruction::InvokeVirtual {
                    class: class(args[0])?,
                    method: var(args[1])?,
                    sig: args[2..].concat().parse()?,
                }
            }
            other => return Err(format!("unknown mnemonic `{other}`")),
        };
        Ok(instr)
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Pop | Instruction::Inc | Instruction::Add => f.write_str(self.mnemonic()),
            Instruction::If(l) | Instruction::Goto(l) => write!(f, "{} {l}", self.mnemonic()),
            Instruction::Store(x) | Instruction::Load(x) => write!(f, "{} {x}", self.mnemonic()),
            Instruction::New(a) => write!(f, "new {a}"),
            Instruction::InvokeVirtual { class, method, sig } => {
                write!(f, "invokevirtual {class} {method} {sig}")
            }
            Instruction::GetField { class, field, ty } | Instruction::PutField { class, field, ty } => {
                write!(f, "{} {class} {field} {ty}", self.mnemonic())
            }
        }
    }
}

fn parse_params(text: &str, line: usize) -> Result<Vec<(String, TypeDesc)>, ParseError> {
    let mut params = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, ty) = item
            .split_once(':')
            .ok_or_else(|| syntax(line, format!("parameter `{item}` needs a type, as in `x:int`")))?;
        let name = name.trim();
        if !is_var_name(name) {
            return Err(syntax(line, format!("invalid parameter name `{name}`")));
        }
        if params.iter().any(|(n, _)| n == name) {
            return Err(syntax(line, format!("duplicate parameter `{name}`")));
        }
        let ty = ty.trim().parse().map_err(|e| syntax(line, e))?;
        params.push((name.to_string(), ty));
    }
    Ok(params)
}

/// Parses a method file.
pub fn parse_method(text: &str) -> Result<MethodMap, ParseError> {
    let mut method = MethodMap::new();
    let mut params = None;
    let mut declared = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let src_line = idx + 1;
        let trimmed = raw.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim_start();
            if let Some(list) = rest.strip_prefix("params ").or(rest.strip_prefix("params\t")) {
                if params.is_some() {
                    return Err(syntax(src_line, "duplicate `# params` header"));
                }
                params = Some(parse_params(list, src_line)?);
            } else if let Some(list) = rest.strip_prefix("vars ").or(rest.strip_prefix("vars\t")) {
                for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    if !is_var_name(name) {
                        return Err(syntax(src_line, format!("invalid variable name `{name}`")));
                    }
                    declared.push(name.to_string());
                }
            }
            continue;
        }
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        let (label, instr) = body
            .split_once(':')
            .ok_or_else(|| syntax(src_line, "expected `LINE: instruction`"))?;
        let label: Line = label
            .trim()
            .parse()
            .map_err(|_| syntax(src_line, format!("invalid line label `{}`", label.trim())))?;
        let expected = method.len() as Line + 1;
        if label != expected {
            return Err(syntax(
                src_line,
                format!("expected line label {expected}, found {label}"),
            ));
        }
        let instr: Instruction = instr.parse().map_err(|e| syntax(src_line, e))?;
        method.put(label, instr);
    }
    if let Some((line, target)) = method.dangling_target() {
        return Err(ParseError::DanglingTarget { line, target });
    }
    Ok(method.with_params(params.unwrap_or_default()).with_vars(declared))
}

/// Canonical text of a method. Lines are separated by `\n` with no trailing
/// newline; the empty method serializes to the empty string.
pub fn serialize_method(m: &MethodMap) -> String {
    let mut lines = Vec::new();
    if !m.params().is_empty() {
        let params: Vec<String> = m.params().iter().map(|(n, t)| format!("{n}:{t}")).collect();
        lines.push(format!("# params {}", params.join(", ")));
    }
    let extra: Vec<&str> = m
        .vars()
        .iter()
        .filter(|v| {
            !m.params().iter().any(|(p, _)| p == *v) && !m.instructions().any(|i| i.variable() == Some(v.as_str()))
        })
        .map(String::as_str)
        .collect();
    if !extra.is_empty() {
        lines.push(format!("# vars {}", extra.join(", ")));
    }
    for (line, instr) in m.entries() {
        lines.push(format!("{line}: {instr}"));
    }
    lines.join("\n")
}

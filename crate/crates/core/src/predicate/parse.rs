// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

//! Infix formula syntax and `.spec` files.
//!
//! Precedence from loosest to tightest: `->` (right associative), `||`,
//! `&&`, `!`, comparisons, `+`, field access `t.Class.field`.

use super::{CmpOp, Formula, PredError, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(i64),
    Ident(String),
    Sym(&'static str),
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

const SYMBOLS: [&str; 15] = [
    "->", "&&", "||", "!=", "<=", ">=", "(", ")", "+", "-", ".", "!", "=", "<", ">",
];

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '$' | '\'')
}

fn tokenize(text: &str, first_line: usize) -> Result<Vec<Spanned>, PredError> {
    let mut out = Vec::new();
    for (i, line_text) in text.lines().enumerate() {
        let line = first_line + i;
        let chars: Vec<char> = line_text.chars().collect();
        let mut pos = 0;
        while pos < chars.len() {
            let c = chars[pos];
            let column = pos + 1;
            if c.is_whitespace() {
                pos += 1;
                continue;
            }
            if c.is_ascii_digit() {
                let start = pos;
                while pos < chars.len() && chars[pos].is_ascii_digit() {
                    pos += 1;
                }
                let digits: String = chars[start..pos].iter().collect();
                let value = digits.parse().map_err(|_| PredError::Parse {
                    line,
                    column,
                    reason: format!("integer `{digits}` is out of range"),
                })?;
                out.push(Spanned {
                    tok: Tok::Int(value),
                    line,
                    column,
                });
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = pos;
                while pos < chars.len() && is_ident_char(chars[pos]) {
                    pos += 1;
                }
                let ident = chars[start..pos].iter().collect();
                out.push(Spanned {
                    tok: Tok::Ident(ident),
                    line,
                    column,
                });
                continue;
            }
            let rest: String = chars[pos..chars.len().min(pos + 2)].iter().collect();
            let sym = SYMBOLS
                .iter()
                .find(|s| rest.starts_with(**s))
                .ok_or_else(|| PredError::Parse {
                    line,
                    column,
                    reason: format!("unexpected character `{c}`"),
                })?;
            out.push(Spanned {
                tok: Tok::Sym(sym),
                line,
                column,
            });
            pos += sym.len();
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

type PResult<T> = Result<T, PredError>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn error(&self, reason: impl Into<String>) -> PredError {
        let (line, column) = self.toks.get(self.pos).map_or(self.end, |t| (t.line, t.column));
        PredError::Parse {
            line,
            column,
            reason: reason.into(),
        }
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> PResult<()> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{sym}`")))
        }
    }

    fn formula(&mut self) -> PResult<Formula> {
        let lhs = self.disjunction()?;
        if self.eat("->") {
            Ok(Formula::implies(lhs, self.formula()?))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self) -> PResult<Formula> {
        let mut f = self.conjunction()?;
        while self.eat("||") {
            f = Formula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let mut f = self.unary()?;
        while self.eat("&&") {
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> PResult<Formula> {
        if self.eat("!") {
            return Ok(Formula::not(self.unary()?));
        }
        match self.peek() {
            Some(Tok::Ident(id)) if id == "true" => {
                self.pos += 1;
                return Ok(Formula::True);
            }
            Some(Tok::Ident(id)) if id == "false" => {
                self.pos += 1;
                return Ok(Formula::False);
            }
            _ => {}
        }
        let start = self.pos;
        match self.comparison() {
            Ok(f) => Ok(f),
            Err(cmp_err) => {
                // `(` opens either a term or a nested formula.
                self.pos = start;
                if self.eat("(") {
                    if let Ok(f) = self.formula().and_then(|f| self.expect(")").map(|_| f)) {
                        return Ok(f);
                    }
                }
                self.pos = start;
                Err(cmp_err)
            }
        }
    }

    fn comparison(&mut self) -> PResult<Formula> {
        let a = self.term()?;
        let op = match self.peek() {
            Some(Tok::Sym("=")) => CmpOp::Eq,
            Some(Tok::Sym("!=")) => CmpOp::Ne,
            Some(Tok::Sym("<")) => CmpOp::Lt,
            Some(Tok::Sym("<=")) => CmpOp::Le,
            Some(Tok::Sym(">")) => CmpOp::Gt,
            Some(Tok::Sym(">=")) => CmpOp::Ge,
            _ => return Err(self.error("expected a comparison operator")),
        };
        self.pos += 1;
        Ok(Formula::Cmp(a, op, self.term()?))
    }

    fn term(&mut self) -> PResult<Term> {
        let mut t = self.postfix()?;
        while self.eat("+") {
            t = Term::plus(t, self.postfix()?);
        }
        Ok(t)
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(id)) => {
                let id = id.clone();
                self.pos += 1;
                Ok(id)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn postfix(&mut self) -> PResult<Term> {
        let mut t = self.primary()?;
        while self.eat(".") {
            let class = self.ident("a class name")?;
            self.expect(".")?;
            let field = self.ident("a field name")?;
            t = Term::FieldOf {
                base: Box::new(t),
                class,
                field,
            };
        }
        Ok(t)
    }

    fn primary(&mut self) -> PResult<Term> {
        match self.peek().cloned() {
            Some(Tok::Int(k)) => {
                self.pos += 1;
                Ok(Term::Int(k))
            }
            Some(Tok::Sym("-")) => {
                self.pos += 1;
                match self.peek() {
                    Some(Tok::Int(k)) => {
                        let k = -*k;
                        self.pos += 1;
                        Ok(Term::Int(k))
                    }
                    _ => Err(self.error("expected an integer after `-`")),
                }
            }
            Some(Tok::Ident(id)) => {
                if id == "true" || id == "false" {
                    return Err(self.error(format!("`{id}` is not a term")));
                }
                self.pos += 1;
                Ok(slot_index(&id).map_or(Term::Var(id), Term::Slot))
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let t = self.term()?;
                self.expect(")")?;
                Ok(t)
            }
            _ => Err(self.error("expected a term")),
        }
    }
}

/// `s<digits>` names a stack slot; every other identifier is a variable.
fn slot_index(id: &str) -> Option<u32> {
    let digits = id.strip_prefix('s')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn parse_at(text: &str, first_line: usize) -> Result<Formula, PredError> {
    let toks = tokenize(text, first_line)?;
    let last = text.lines().count().max(1);
    let end = (
        first_line + last - 1,
        text.lines().last().map_or(0, |l| l.chars().count()) + 1,
    );
    let mut p = Parser { toks, pos: 0, end };
    let f = p.formula()?;
    if p.pos < p.toks.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(f)
}

pub fn parse_formula(text: &str) -> Result<Formula, PredError> {
    parse_at(text, 1)
}

/// Pre- and postcondition of a method.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spec {
    pub pre: Formula,
    pub post: Formula,
}

impl Spec {
    pub fn new(pre: Formula, post: Formula) -> Self {
        Spec { pre, post }
    }
}

impl std::fmt::Display for Spec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "pre: {}", self.pre)?;
        writeln!(f, "post: {}", self.post)
    }
}

/// Parses a `.spec` file: a `pre:` section and a `post:` section, each a
/// formula that may span several lines. A missing section means `true`.
/// `#` starts a comment.
pub fn parse_spec(text: &str) -> Result<Spec, PredError> {
    // (first line, text) of each section.
    let mut pre: Option<(usize, String)> = None;
    let mut post: Option<(usize, String)> = None;
    // Continuation lines belong to the most recently opened section.
    let mut in_post = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = crate::bytecode::strip_comment(raw);
        let trimmed = body.trim_start();
        let indent = body.len() - trimmed.len();
        let header = [("pre:", &mut pre, false), ("post:", &mut post, true)]
            .into_iter()
            .find_map(|(key, slot, is_post)| trimmed.strip_prefix(key).map(|rest| (key, rest, slot, is_post)));
        if let Some((key, rest, slot, is_post)) = header {
            if slot.is_some() {
                return Err(PredError::Spec(format!("line {line}: duplicate `{key}` section")));
            }
            // Pad so that columns in errors match the file.
            *slot = Some((line, format!("{}{rest}", " ".repeat(indent + key.len()))));
            in_post = Some(is_post);
            continue;
        }
        let open = match in_post {
            Some(true) => post.as_mut(),
            Some(false) => pre.as_mut(),
            None => None,
        };
        match open {
            Some(section) => {
                section.1.push('\n');
                section.1.push_str(body);
            }
            None if trimmed.is_empty() => {}
            None => {
                return Err(PredError::Spec(format!(
                    "line {line}: text outside a `pre:` or `post:` section"
                )))
            }
        }
    }
    let section = |s: Option<(usize, String)>| match s {
        Some((line, text)) if !text.trim().is_empty() => parse_at(&text, line),
        Some((line, _)) => Err(PredError::Spec(format!("line {line}: empty section"))),
        None => Ok(Formula::True),
    };
    let pre = section(pre)?;
    let post = section(post)?;
    if pre.max_slot().is_some() {
        return Err(PredError::Spec("the precondition may not mention stack slots".into()));
    }
    Ok(Spec { pre, post })
}

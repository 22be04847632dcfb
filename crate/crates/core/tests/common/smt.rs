// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

//! A checker for the SMT-LIB 2 subset the exporter emits, with a brute-force
//! model search over a bounded domain.
//!
//! Accepted commands: `set-logic`, `declare-const <sym> Int`, `push`, `pop`,
//! `assert`, `check-sat`. Terms are linear integer arithmetic with the core
//! Boolean connectives and `exists` over `Int`.

use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            ';' => while chars.next_if(|c| *c != '\n').is_some() {},
            '(' | ')' => {
                out.push(c.to_string());
                chars.next();
            }
            '|' => {
                chars.next();
                let mut sym = String::from("|");
                loop {
                    match chars.next() {
                        Some('|') => break,
                        Some('\\') => return Err("backslash in quoted symbol".into()),
                        Some(c) => sym.push(c),
                        None => return Err("unterminated quoted symbol".into()),
                    }
                }
                sym.push('|');
                out.push(sym);
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut tok = String::new();
                while let Some(c) = chars.next_if(|c| !c.is_whitespace() && !"();|".contains(*c)) {
                    tok.push(c);
                }
                out.push(tok);
            }
        }
    }
    Ok(out)
}

pub fn parse_sexps(text: &str) -> Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    for tok in tokenize(text)? {
        match tok.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                let list = stack.pop().filter(|_| !stack.is_empty()).ok_or("unbalanced `)`")?;
                stack.last_mut().ok_or("unbalanced `)`")?.push(Sexp::List(list));
            }
            _ => stack.last_mut().unwrap().push(Sexp::Atom(tok)),
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".into());
    }
    Ok(stack.pop().unwrap())
}

fn is_symbol(s: &str) -> bool {
    if s.len() >= 2 && s.starts_with('|') && s.ends_with('|') {
        return true;
    }
    let mut chars = s.chars();
    let simple_extra = "~!@$%^&*_-+=<>.?/";
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || simple_extra.contains(c))
        && chars.all(|c| c.is_ascii_alphanumeric() || simple_extra.contains(c))
}

fn is_numeral(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) && (s == "0" || !s.starts_with('0'))
}

/// Typed term of the accepted fragment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum T {
    Num(i64),
    Sym(String),
    Add(Vec<T>),
    Neg(Box<T>),
    Sub(Vec<T>),
    Bool(bool),
    Cmp(String, Box<T>, Box<T>),
    Not(Box<T>),
    And(Vec<T>),
    Or(Vec<T>),
    Imp(Box<T>, Box<T>),
    Exists(Vec<String>, Box<T>),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Sort {
    Int,
    Bool,
}

struct Checker<'a> {
    declared: &'a BTreeSet<String>,
    quantifiers: bool,
}

impl Checker<'_> {
    fn term(&self, e: &Sexp, bound: &BTreeSet<String>) -> Result<(T, Sort), String> {
        match e {
            Sexp::Atom(a) if is_numeral(a) => Ok((T::Num(a.parse().map_err(|_| "numeral overflow")?), Sort::Int)),
            Sexp::Atom(a) if a == "true" || a == "false" => Ok((T::Bool(a == "true"), Sort::Bool)),
            Sexp::Atom(a) if is_symbol(a) => {
                if self.declared.contains(a) || bound.contains(a) {
                    Ok((T::Sym(a.clone()), Sort::Int))
                } else {
                    Err(format!("undeclared symbol `{a}`"))
                }
            }
            Sexp::Atom(a) => Err(format!("bad token `{a}`")),
            Sexp::List(items) => {
                let (head, args) = match items.split_first() {
                    Some((Sexp::Atom(h), rest)) => (h.as_str(), rest),
                    _ => return Err("application without an operator".into()),
                };
                let sub = |s: &Sexp, want: Sort| -> Result<T, String> {
                    let (t, got) = self.term(s, bound)?;
                    if got != want {
                        return Err(format!("`{head}` expects {want:?}, found {got:?}"));
                    }
                    Ok(t)
                };
                let all = |want: Sort, min: usize| -> Result<Vec<T>, String> {
                    if args.len() < min {
                        return Err(format!("`{head}` needs at least {min} arguments"));
                    }
                    args.iter().map(|a| sub(a, want)).collect()
                };
                match head {
                    "+" => Ok((T::Add(all(Sort::Int, 2)?), Sort::Int)),
                    "-" if args.len() == 1 => Ok((T::Neg(Box::new(sub(&args[0], Sort::Int)?)), Sort::Int)),
                    "-" => Ok((T::Sub(all(Sort::Int, 2)?), Sort::Int)),
                    "=" | "<" | "<=" | ">" | ">=" => {
                        if args.len() != 2 {
                            return Err(format!("`{head}` is binary here"));
                        }
                        let (a, b) = (sub(&args[0], Sort::Int)?, sub(&args[1], Sort::Int)?);
                        Ok((T::Cmp(head.to_string(), Box::new(a), Box::new(b)), Sort::Bool))
                    }
                    "not" if args.len() == 1 => Ok((T::Not(Box::new(sub(&args[0], Sort::Bool)?)), Sort::Bool)),
                    "and" => Ok((T::And(all(Sort::Bool, 2)?), Sort::Bool)),
                    "or" => Ok((T::Or(all(Sort::Bool, 2)?), Sort::Bool)),
                    "=>" if args.len() == 2 => Ok((
                        T::Imp(
                            Box::new(sub(&args[0], Sort::Bool)?),
                            Box::new(sub(&args[1], Sort::Bool)?),
                        ),
                        Sort::Bool,
                    )),
                    "exists" if self.quantifiers && args.len() == 2 => {
                        let Sexp::List(binders) = &args[0] else {
                            return Err("bad binder list".into());
                        };
                        if binders.is_empty() {
                            return Err("empty binder list".into());
                        }
                        let mut names = Vec::new();
                        let mut inner = bound.clone();
                        for b in binders {
                            match b {
                                Sexp::List(pair) if pair.len() == 2 && pair[1] == Sexp::Atom("Int".into()) => {
                                    let Sexp::Atom(name) = &pair[0] else {
                                        return Err("bad binder".into());
                                    };
                                    if !is_symbol(name) {
                                        return Err(format!("bad binder `{name}`"));
                                    }
                                    names.push(name.clone());
                                    inner.insert(name.clone());
                                }
                                _ => return Err("bad binder".into()),
                            }
                        }
                        let (body, sort) = self.term(&args[1], &inner)?;
                        if sort != Sort::Bool {
                            return Err("quantifier body is not Boolean".into());
                        }
                        Ok((T::Exists(names, Box::new(body)), Sort::Bool))
                    }
                    "exists" => Err("quantifier outside a quantified logic".into()),
                    _ => Err(format!("unknown operator `{head}` with {} arguments", args.len())),
                }
            }
        }
    }
}

/// A validated script: the logic, the declared constants and the asserted
/// formula of each `check-sat`.
#[derive(Debug)]
pub struct Script {
    pub logic: String,
    pub declared: BTreeSet<String>,
    pub queries: Vec<T>,
}

pub fn check_script(text: &str) -> Result<Script, String> {
    if !text.ends_with('\n') {
        return Err("script is not newline-terminated".into());
    }
    let commands = parse_sexps(text)?;
    let mut logic = None;
    let mut declared = BTreeSet::new();
    // Assertions per open scope.
    let mut scopes: Vec<Vec<T>> = vec![Vec::new()];
    let mut queries = Vec::new();
    for (i, cmd) in commands.iter().enumerate() {
        let Sexp::List(items) = cmd else {
            return Err(format!("command {i} is not a list"));
        };
        let name = match items.first() {
            Some(Sexp::Atom(n)) => n.as_str(),
            _ => return Err(format!("command {i} has no name")),
        };
        if i == 0 && name != "set-logic" {
            return Err("the script must start with set-logic".into());
        }
        match (name, &items[1..]) {
            ("set-logic", [Sexp::Atom(l)]) if i == 0 => {
                if l != "QF_LIA" && l != "LIA" {
                    return Err(format!("unexpected logic {l}"));
                }
                logic = Some(l.clone());
            }
            ("declare-const", [Sexp::Atom(sym), Sexp::Atom(sort)]) => {
                if !is_symbol(sym) || sort != "Int" {
                    return Err(format!("bad declaration of `{sym}`"));
                }
                if !declared.insert(sym.clone()) {
                    return Err(format!("`{sym}` declared twice"));
                }
            }
            ("push", [Sexp::Atom(n)]) if n == "1" => scopes.push(Vec::new()),
            ("pop", [Sexp::Atom(n)]) if n == "1" => {
                if scopes.len() == 1 {
                    return Err("pop without push".into());
                }
                scopes.pop();
            }
            ("assert", [t]) => {
                let checker = Checker {
                    declared: &declared,
                    quantifiers: logic.as_deref() == Some("LIA"),
                };
                let (t, sort) = checker.term(t, &BTreeSet::new())?;
                if sort != Sort::Bool {
                    return Err("assertion is not Boolean".into());
                }
                scopes.last_mut().unwrap().push(t);
            }
            ("check-sat", []) => queries.push(T::And(
                scopes.iter().flatten().cloned().chain([T::Bool(true)]).collect(),
            )),
            _ => return Err(format!("malformed command `{name}`")),
        }
    }
    if scopes.len() != 1 {
        return Err("unbalanced push".into());
    }
    Ok(Script {
        logic: logic.ok_or("empty script")?,
        declared,
        queries,
    })
}

fn int(t: &T, env: &BTreeMap<String, i64>) -> i64 {
    match t {
        T::Num(k) => *k,
        T::Sym(s) => env[s],
        T::Add(xs) => xs.iter().map(|x| int(x, env)).sum(),
        T::Neg(x) => -int(x, env),
        T::Sub(xs) => {
            let first = int(&xs[0], env);
            xs[1..].iter().fold(first, |acc, x| acc - int(x, env))
        }
        _ => unreachable!("checked sort"),
    }
}

fn truth(t: &T, env: &mut BTreeMap<String, i64>, radius: i64) -> bool {
    match t {
        T::Bool(b) => *b,
        T::Cmp(op, a, b) => {
            let (a, b) = (int(a, env), int(b, env));
            match op.as_str() {
                "=" => a == b,
                "<" => a < b,
                "<=" => a <= b,
                ">" => a > b,
                _ => a >= b,
            }
        }
        T::Not(x) => !truth(x, env, radius),
        T::And(xs) => xs.iter().all(|x| truth(x, env, radius)),
        T::Or(xs) => xs.iter().any(|x| truth(x, env, radius)),
        T::Imp(a, b) => !truth(a, env, radius) || truth(b, env, radius),
        T::Exists(names, body) => exists(names, body, env, radius),
        _ => unreachable!("checked sort"),
    }
}

fn exists(names: &[String], body: &T, env: &mut BTreeMap<String, i64>, radius: i64) -> bool {
    match names.split_first() {
        None => truth(body, env, radius),
        Some((n, rest)) => {
            let saved = env.get(n).copied();
            let found = (-radius..radius).any(|v| {
                env.insert(n.clone(), v);
                exists(rest, body, env, radius)
            });
            match saved {
                Some(v) => env.insert(n.clone(), v),
                None => env.remove(n),
            };
            found
        }
    }
}

fn symbols(t: &T, out: &mut BTreeSet<String>) {
    match t {
        T::Sym(s) => {
            out.insert(s.clone());
        }
        T::Add(xs) | T::Sub(xs) | T::And(xs) | T::Or(xs) => xs.iter().for_each(|x| symbols(x, out)),
        T::Neg(x) | T::Not(x) => symbols(x, out),
        T::Cmp(_, a, b) | T::Imp(a, b) => {
            symbols(a, out);
            symbols(b, out);
        }
        T::Exists(names, body) => {
            let mut inner = BTreeSet::new();
            symbols(body, &mut inner);
            out.extend(inner.into_iter().filter(|s| !names.contains(s)));
        }
        T::Num(_) | T::Bool(_) => {}
    }
}

/// A model of `query` with every free constant in `[-radius, radius-1]`.
pub fn bounded_model(query: &T, radius: i64) -> Option<BTreeMap<String, i64>> {
    let mut free = BTreeSet::new();
    symbols(query, &mut free);
    let names: Vec<String> = free.into_iter().collect();
    let mut env = BTreeMap::new();
    fn search(i: usize, names: &[String], q: &T, env: &mut BTreeMap<String, i64>, r: i64) -> bool {
        if i == names.len() {
            return truth(q, env, r);
        }
        (-r..r).any(|v| {
            env.insert(names[i].clone(), v);
            search(i + 1, names, q, env, r)
        })
    }
    search(0, &names, query, &mut env, radius).then_some(env)
}

// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

//! Exhaustive checking over a bounded integer domain.
//!
//! Every free variable and slot ranges over `[-B, B-1]`. Fresh variables
//! (names containing `'`) are existential and range over the same domain.

use std::collections::{BTreeMap, BTreeSet};

use super::simplify::{simplify, Linear};
use super::{Atom, CmpOp, Formula, PredError};

/// Domain radius `B` and the largest number of atoms a check may enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bound {
    pub radius: i64,
    pub max_atoms: usize,
}

impl Default for Bound {
    fn default() -> Self {
        Bound {
            radius: 8,
            max_atoms: 8,
        }
    }
}

impl Bound {
    pub fn new(radius: i64) -> Self {
        Bound {
            radius,
            ..Bound::default()
        }
    }

    fn values(&self) -> std::ops::Range<i64> {
        -self.radius..self.radius
    }
}

enum Compiled {
    Const(bool),
    Cmp {
        coefs: Vec<(usize, i64)>,
        k: i64,
        op: CmpOp,
    },
    Not(Box<Compiled>),
    And(Box<Compiled>, Box<Compiled>),
    Or(Box<Compiled>, Box<Compiled>),
    Implies(Box<Compiled>, Box<Compiled>),
}

impl Compiled {
    fn new(f: &Formula, index: &BTreeMap<Atom, usize>) -> Result<Compiled, PredError> {
        let sub = |g: &Formula| Compiled::new(g, index).map(Box::new);
        Ok(match f {
            Formula::True => Compiled::Const(true),
            Formula::False => Compiled::Const(false),
            Formula::Cmp(a, op, b) => {
                let lin = Linear::difference(a, b).ok_or_else(|| PredError::FieldAccess(f.to_string()))?;
                Compiled::Cmp {
                    coefs: lin.coefs.iter().map(|(a, c)| (index[a], *c)).collect(),
                    k: lin.k,
                    op: *op,
                }
            }
            Formula::Not(g) => Compiled::Not(sub(g)?),
            Formula::And(a, b) => Compiled::And(sub(a)?, sub(b)?),
            Formula::Or(a, b) => Compiled::Or(sub(a)?, sub(b)?),
            Formula::Implies(a, b) => Compiled::Implies(sub(a)?, sub(b)?),
        })
    }

    fn eval(&self, env: &[i64]) -> bool {
        match self {
            Compiled::Const(b) => *b,
            Compiled::Cmp { coefs, k, op } => {
                let sum = coefs.iter().fold(*k, |acc, (i, c)| acc + c * env[*i]);
                op.holds(sum, 0)
            }
            Compiled::Not(g) => !g.eval(env),
            Compiled::And(a, b) => a.eval(env) && b.eval(env),
            Compiled::Or(a, b) => a.eval(env) || b.eval(env),
            Compiled::Implies(a, b) => !a.eval(env) || b.eval(env),
        }
    }
}

/// Truth of `f` under a total assignment (fresh variables included).
pub fn eval(f: &Formula, env: &BTreeMap<Atom, i64>) -> Result<bool, PredError> {
    let atoms: Vec<Atom> = f.atoms().into_iter().collect();
    let index = atoms.iter().cloned().zip(0..).collect();
    let values = atoms
        .iter()
        .map(|a| env.get(a).copied().ok_or_else(|| PredError::Unbound(a.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Compiled::new(f, &index)?.eval(&values))
}

/// Whether some assignment of the fresh slots `fresh` makes `f` true.
fn exists(f: &Compiled, env: &mut [i64], fresh: &[usize], bound: &Bound) -> bool {
    match fresh.split_first() {
        None => f.eval(env),
        Some((i, rest)) => bound.values().any(|v| {
            env[*i] = v;
            exists(f, env, rest, bound)
        }),
    }
}

/// Visits every assignment of `slots`; stops early when `visit` returns
/// `false`.
fn for_all(env: &mut [i64], slots: &[usize], bound: &Bound, visit: &mut dyn FnMut(&mut [i64]) -> bool) -> bool {
    match slots.split_first() {
        None => visit(env),
        Some((i, rest)) => {
            for v in bound.values() {
                env[*i] = v;
                if !for_all(env, rest, bound, visit) {
                    return false;
                }
            }
            true
        }
    }
}

/// An assignment of the universal atoms under which `hyp` holds and
/// `concl` fails, or `None` when `hyp ⇒ concl` is valid over the bound.
pub fn counterexample(hyp: &Formula, concl: &Formula, bound: &Bound) -> Result<Option<BTreeMap<Atom, i64>>, PredError> {
    if hyp == concl {
        return Ok(None);
    }
    let (hyp, concl) = (simplify(hyp), simplify(concl));
    if hyp == concl || hyp == Formula::False || concl == Formula::True {
        return Ok(None);
    }
    let (h_atoms, c_atoms) = (hyp.atoms(), concl.atoms());
    let universal: BTreeSet<Atom> = h_atoms
        .iter()
        .chain(&c_atoms)
        .filter(|a| !a.is_fresh())
        .cloned()
        .collect();
    let fresh: BTreeSet<Atom> = h_atoms
        .iter()
        .chain(&c_atoms)
        .filter(|a| a.is_fresh())
        .cloned()
        .collect();
    let total = universal.len() + fresh.len();
    if total > bound.max_atoms {
        return Err(PredError::AtomBudgetExceeded {
            atoms: total,
            budget: bound.max_atoms,
        });
    }
    let order: Vec<Atom> = universal.iter().chain(&fresh).cloned().collect();
    let index: BTreeMap<Atom, usize> = order.iter().cloned().zip(0..).collect();
    let (h, c) = (Compiled::new(&hyp, &index)?, Compiled::new(&concl, &index)?);
    let slots = |atoms: &BTreeSet<Atom>| {
        atoms
            .iter()
            .filter(|a| a.is_fresh())
            .map(|a| index[a])
            .collect::<Vec<_>>()
    };
    let (h_fresh, c_fresh) = (slots(&h_atoms), slots(&c_atoms));
    let u_slots: Vec<usize> = (0..universal.len()).collect();

    let mut env = vec![0; order.len()];
    let mut witness = None;
    for_all(&mut env, &u_slots, bound, &mut |env| {
        if exists(&h, env, &h_fresh, bound) && !exists(&c, env, &c_fresh, bound) {
            witness = Some(universal.iter().cloned().zip(env.iter().copied()).collect());
            false
        } else {
            true
        }
    });
    Ok(witness)
}

/// Bounded validity of `hyp ⇒ concl`.
pub fn implies(hyp: &Formula, concl: &Formula, bound: &Bound) -> Result<bool, PredError> {
    Ok(counterexample(hyp, concl, bound)?.is_none())
}

/// Bounded logical equivalence.
pub fn equivalent(f: &Formula, g: &Formula, bound: &Bound) -> Result<bool, PredError> {
    if f == g {
        return Ok(true);
    }
    Ok(implies(f, g, bound)? && implies(g, f, bound)?)
}

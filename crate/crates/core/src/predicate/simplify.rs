// Copyright 2026 the patchverify Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use super::{Atom, CmpOp, Formula, Term};

/// `Σ coef·atom + k`, with no zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct Linear {
    pub coefs: BTreeMap<Atom, i64>,
    pub k: i64,
}

impl Linear {
    fn add_term(&mut self, t: &Term, sign: i64) -> Option<()> {
        match t {
            Term::Int(k) => self.k = self.k.checked_add(sign.checked_mul(*k)?)?,
            Term::Var(_) | Term::Slot(_) => {
                let atom = t.atom().expect("atomic term");
                let c = self.coefs.entry(atom.clone()).or_insert(0);
                *c += sign;
                if *c == 0 {
                    self.coefs.remove(&atom);
                }
            }
            Term::Plus(a, b) => {
                self.add_term(a, sign)?;
                self.add_term(b, sign)?;
            }
            Term::FieldOf { .. } => return None,
        }
        Some(())
    }

    /// `a - b`, or `None` for terms outside linear arithmetic.
    pub(crate) fn difference(a: &Term, b: &Term) -> Option<Linear> {
        let mut out = Linear::default();
        out.add_term(a, 1)?;
        out.add_term(b, -1)?;
        Some(out)
    }

    fn negated(&self) -> Linear {
        Linear {
            coefs: self.coefs.iter().map(|(a, c)| (a.clone(), -c)).collect(),
            k: -self.k,
        }
    }
}

/// Sum of atoms with positive multiplicities plus a constant; `None` for
/// the empty sum with `k = 0`.
fn build_sum(atoms: &[(Atom, i64)], k: i64) -> Option<Term> {
    let mut parts = Vec::new();
    for (a, c) in atoms {
        for _ in 0..*c {
            parts.push(a.term());
        }
    }
    if k != 0 {
        parts.push(Term::Int(k));
    }
    parts.into_iter().reduce(Term::plus)
}

/// Canonical comparison `lin op 0`: positive-coefficient atoms on the left,
/// negative ones on the right, and the constant placed so it is not
/// subtracted.
fn normal_cmp(lin: Linear, op: CmpOp) -> Formula {
    if lin.coefs.is_empty() {
        return if op.holds(lin.k, 0) {
            Formula::True
        } else {
            Formula::False
        };
    }
    let (lin, op) = if lin.coefs.values().all(|c| *c < 0) {
        (lin.negated(), op.flip())
    } else {
        (lin, op)
    };
    let pos: Vec<(Atom, i64)> = lin
        .coefs
        .iter()
        .filter(|(_, c)| **c > 0)
        .map(|(a, c)| (a.clone(), *c))
        .collect();
    let neg: Vec<(Atom, i64)> = lin
        .coefs
        .iter()
        .filter(|(_, c)| **c < 0)
        .map(|(a, c)| (a.clone(), -c))
        .collect();
    let (lhs, rhs) = if neg.is_empty() {
        (build_sum(&pos, 0), Some(Term::Int(-lin.k)))
    } else if lin.k >= 0 {
        (build_sum(&pos, lin.k), build_sum(&neg, 0))
    } else {
        (build_sum(&pos, 0), build_sum(&neg, -lin.k))
    };
    Formula::Cmp(lhs.expect("non-empty side"), op, rhs.unwrap_or(Term::Int(0)))
}

fn simplify_cmp(a: &Term, op: CmpOp, b: &Term) -> Formula {
    match Linear::difference(a, b) {
        Some(lin) => normal_cmp(lin, op),
        None => Formula::Cmp(a.clone(), op, b.clone()),
    }
}

fn negate(f: Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Cmp(a, op, b) => Formula::Cmp(a, op.negate(), b),
        Formula::Not(g) => *g,
        Formula::And(a, b) => or_of(vec![negate(*a), negate(*b)]),
        Formula::Or(a, b) => and_of(vec![negate(*a), negate(*b)]),
        Formula::Implies(a, b) => and_of(vec![*a, negate(*b)]),
    }
}

fn flatten(f: Formula, is_and: bool, out: &mut Vec<Formula>) {
    match f {
        Formula::And(a, b) if is_and => {
            flatten(*a, true, out);
            flatten(*b, true, out);
        }
        Formula::Or(a, b) if !is_and => {
            flatten(*a, false, out);
            flatten(*b, false, out);
        }
        other => out.push(other),
    }
}

fn and_of(parts: Vec<Formula>) -> Formula {
    let mut flat = Vec::new();
    for p in parts {
        flatten(p, true, &mut flat);
    }
    if flat.contains(&Formula::False) {
        return Formula::False;
    }
    let set: BTreeSet<Formula> = flat.into_iter().filter(|f| *f != Formula::True).collect();
    if set.iter().any(|f| set.contains(&negate(f.clone()))) {
        return Formula::False;
    }
    Formula::conj(set)
}

fn or_of(parts: Vec<Formula>) -> Formula {
    let mut flat = Vec::new();
    for p in parts {
        flatten(p, false, &mut flat);
    }
    if flat.contains(&Formula::True) {
        return Formula::True;
    }
    let set: BTreeSet<Formula> = flat.into_iter().filter(|f| *f != Formula::False).collect();
    if set.iter().any(|f| set.contains(&negate(f.clone()))) {
        return Formula::True;
    }
    set.into_iter().reduce(Formula::or).unwrap_or(Formula::False)
}

fn local(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Cmp(a, op, b) => simplify_cmp(a, *op, b),
        Formula::Not(g) => negate(local(g)),
        Formula::And(a, b) => and_of(vec![local(a), local(b)]),
        Formula::Or(a, b) => or_of(vec![local(a), local(b)]),
        Formula::Implies(a, b) => {
            let (a, b) = (local(a), local(b));
            match (&a, &b) {
                (Formula::True, _) => b,
                (Formula::False, _) | (_, Formula::True) => Formula::True,
                (_, Formula::False) => negate(a),
                _ if a == b => Formula::True,
                _ => Formula::implies(a, b),
            }
        }
    }
}

/// `v = k` for a single atom.
fn constant_binding(f: &Formula) -> Option<(Atom, i64)> {
    let Formula::Cmp(a, CmpOp::Eq, b) = f else { return None };
    let lin = Linear::difference(a, b)?;
    let mut it = lin.coefs.iter();
    let (atom, c) = it.next()?;
    if it.next().is_some() || c.abs() != 1 {
        return None;
    }
    Some((atom.clone(), -lin.k * c))
}

/// Solves an equation for a fresh variable when the solution is a sum with
/// positive coefficients.
fn fresh_solution(f: &Formula) -> Option<(Atom, Term)> {
    let Formula::Cmp(a, CmpOp::Eq, b) = f else { return None };
    let lin = Linear::difference(a, b)?;
    for (v, c) in &lin.coefs {
        if !v.is_fresh() || c.abs() != 1 {
            continue;
        }
        // c·v + Σ c_a·a + k = 0  =>  v = Σ (-c_a/c)·a - k/c
        let rest: Vec<(Atom, i64)> = lin
            .coefs
            .iter()
            .filter(|(a, _)| *a != v)
            .map(|(a, ca)| (a.clone(), -ca * c))
            .collect();
        if rest.iter().all(|(_, s)| *s > 0) {
            let value = build_sum(&rest, -lin.k * c).unwrap_or(Term::Int(0));
            return Some((v.clone(), value));
        }
    }
    None
}

/// One round of propagation over a conjunction. Returns `None` when nothing
/// changed.
fn propagate(parts: &[Formula]) -> Option<Vec<Formula>> {
    for (i, part) in parts.iter().enumerate() {
        let (atom, value, drop) = if let Some((atom, k)) = constant_binding(part) {
            let drop = atom.is_fresh();
            (atom, Term::Int(k), drop)
        } else if let Some((atom, value)) = fresh_solution(part) {
            (atom, value, true)
        } else {
            continue;
        };
        let mentions = parts
            .iter()
            .enumerate()
            .any(|(j, p)| j != i && p.atoms().contains(&atom));
        if !mentions && !drop {
            continue;
        }
        let bindings = [(atom, value)].into();
        let out = parts
            .iter()
            .enumerate()
            .filter(|(j, _)| !(drop && *j == i))
            .map(|(j, p)| {
                if j == i {
                    p.clone()
                } else {
                    local(&p.substitute(&bindings))
                }
            })
            .collect();
        return Some(out);
    }
    None
}

/// Normalizes `f` to an equivalent, usually smaller formula.
///
/// Comparisons become linear normal forms and fold when ground; `!` is
/// pushed into comparisons; conjunctions and disjunctions are flattened,
/// deduplicated and sorted. At the top level, `v = k` is propagated into the
/// other conjuncts and fresh variables defined by an equation are
/// eliminated.
pub fn simplify(f: &Formula) -> Formula {
    let mut current = local(f);
    // Each round removes a conjunct or a variable occurrence.
    for _ in 0..64 {
        let parts: Vec<Formula> = current.conjuncts().into_iter().cloned().collect();
        match propagate(&parts) {
            Some(next) => {
                let next = and_of(next);
                if next == current {
                    break;
                }
                current = next;
            }
            None => break,
        }
    }
    current
}

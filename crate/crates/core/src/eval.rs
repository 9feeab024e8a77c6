//! Tarskian evaluation of terms and formulas in a finite structure.
//!
//! Quantifiers are evaluated by exhaustive enumeration of the universe.
//! Term evaluation memoizes on node identity, so evaluating a register term
//! built by loop substitution costs the shared DAG size, not the written-out
//! tree size.

use std::collections::HashMap;

use thiserror::Error;

use crate::formula::{Formula, FormulaKind};
use crate::structure::{Elem, Structure};
use crate::term::{Term, TermKind, TermPtrMap};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("variable x{0} is not assigned")]
    UnassignedVariable(usize),
    #[error("unknown symbol '{0}'")]
    UnknownSymbol(String),
    #[error("symbol '{symbol}' applied to {given} arguments, structure table expects {expected}")]
    ArityMismatch { symbol: String, expected: usize, given: usize },
}

/// A finite assignment of universe elements to variable indices. Backed by
/// a sorted vector: assignments stay small (inputs, a few registers, the
/// live quantifier bindings) and lookups are on the hottest path of
/// quantifier enumeration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    entries: Vec<(usize, Elem)>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    /// Assign `x_i := tuple[i]` for every position of the input tuple.
    pub fn from_tuple(tuple: &[Elem]) -> Self {
        Assignment { entries: tuple.iter().enumerate().map(|(i, e)| (i, *e)).collect() }
    }

    pub fn get(&self, index: usize) -> Option<Elem> {
        self.entries.binary_search_by_key(&index, |(i, _)| *i).ok().map(|pos| self.entries[pos].1)
    }

    pub fn set(&mut self, index: usize, value: Elem) -> Option<Elem> {
        match self.entries.binary_search_by_key(&index, |(i, _)| *i) {
            Ok(pos) => Some(std::mem::replace(&mut self.entries[pos].1, value)),
            Err(pos) => {
                self.entries.insert(pos, (index, value));
                None
            }
        }
    }

    pub fn with(mut self, index: usize, value: Elem) -> Self {
        self.set(index, value);
        self
    }

    fn restore(&mut self, index: usize, previous: Option<Elem>) {
        match previous {
            Some(e) => {
                self.set(index, e);
            }
            None => {
                if let Ok(pos) = self.entries.binary_search_by_key(&index, |(i, _)| *i) {
                    self.entries.remove(pos);
                }
            }
        }
    }
}

impl FromIterator<(usize, Elem)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (usize, Elem)>>(iter: T) -> Self {
        let mut entries: Vec<(usize, Elem)> = iter.into_iter().collect();
        entries.sort_by_key(|(i, _)| *i);
        entries.dedup_by_key(|(i, _)| *i);
        Assignment { entries }
    }
}

/// Terms up to this written-out size are evaluated by plain traversal;
/// larger (loop-built, structurally shared) terms go through the DAG-
/// memoized path.
const DIRECT_EVAL_SIZE: u64 = 64;

/// Evaluate a term. Every variable of the term must be assigned.
pub fn eval_term(
    term: &Term,
    structure: &Structure,
    assignment: &Assignment,
) -> Result<Elem, EvalError> {
    if term.tree_size() <= DIRECT_EVAL_SIZE {
        return eval_term_direct(term, structure, assignment);
    }
    let mut memo: TermPtrMap<Elem> = HashMap::new();
    eval_term_memo(term, structure, assignment, &mut memo)
}

fn eval_term_direct(
    term: &Term,
    structure: &Structure,
    assignment: &Assignment,
) -> Result<Elem, EvalError> {
    match term.kind() {
        TermKind::Var(i) => assignment.get(*i).ok_or(EvalError::UnassignedVariable(*i)),
        TermKind::Const(c) => {
            structure.constant_value(c).ok_or_else(|| EvalError::UnknownSymbol(c.clone()))
        }
        TermKind::App(f, args) => {
            let mut values = Vec::with_capacity(args.len());
            for a in args {
                values.push(eval_term_direct(a, structure, assignment)?);
            }
            structure.apply_function(f, &values).ok_or_else(|| {
                match structure.signature().function_arity(f) {
                    Some(expected) => EvalError::ArityMismatch {
                        symbol: f.clone(),
                        expected,
                        given: values.len(),
                    },
                    None => EvalError::UnknownSymbol(f.clone()),
                }
            })
        }
    }
}

/// Iterative post-order evaluation over the shared term DAG. Each node is
/// computed once per call; neither the recursion depth nor the cost depends
/// on the written-out tree size.
fn eval_term_memo(
    term: &Term,
    structure: &Structure,
    assignment: &Assignment,
    memo: &mut TermPtrMap<Elem>,
) -> Result<Elem, EvalError> {
    let mut stack: Vec<Term> = vec![term.clone()];
    while let Some(current) = stack.last().cloned() {
        if memo.contains_key(&current.node_ptr()) {
            stack.pop();
            continue;
        }
        let value = match current.kind() {
            TermKind::Var(i) => assignment.get(*i).ok_or(EvalError::UnassignedVariable(*i))?,
            TermKind::Const(c) => {
                structure.constant_value(c).ok_or_else(|| EvalError::UnknownSymbol(c.clone()))?
            }
            TermKind::App(f, args) => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    match memo.get(&a.node_ptr()) {
                        Some(v) => values.push(*v),
                        None => break,
                    }
                }
                if values.len() < args.len() {
                    stack
                        .extend(args.iter().filter(|a| !memo.contains_key(&a.node_ptr())).cloned());
                    continue;
                }
                structure.apply_function(f, &values).ok_or_else(|| {
                    match structure.signature().function_arity(f) {
                        Some(expected) => EvalError::ArityMismatch {
                            symbol: f.clone(),
                            expected,
                            given: values.len(),
                        },
                        None => EvalError::UnknownSymbol(f.clone()),
                    }
                })?
            }
        };
        memo.insert(current.node_ptr(), value);
        stack.pop();
    }
    Ok(memo[&term.node_ptr()])
}

/// Evaluate a formula. Every free variable must be assigned; `forall` is the
/// conjunction over all universe elements.
pub fn eval_formula(
    formula: &Formula,
    structure: &Structure,
    assignment: &Assignment,
) -> Result<bool, EvalError> {
    let mut scratch = assignment.clone();
    eval_formula_rec(formula, structure, &mut scratch)
}

fn eval_formula_rec(
    formula: &Formula,
    structure: &Structure,
    assignment: &mut Assignment,
) -> Result<bool, EvalError> {
    match formula.kind() {
        FormulaKind::Equal(a, b) => {
            Ok(eval_term(a, structure, assignment)? == eval_term(b, structure, assignment)?)
        }
        FormulaKind::Atom(p, args) => {
            let mut values = Vec::with_capacity(args.len());
            for a in args {
                values.push(eval_term(a, structure, assignment)?);
            }
            structure.test_predicate(p, &values).ok_or_else(|| {
                match structure.signature().predicate_arity(p) {
                    Some(expected) => EvalError::ArityMismatch {
                        symbol: p.clone(),
                        expected,
                        given: values.len(),
                    },
                    None => EvalError::UnknownSymbol(p.clone()),
                }
            })
        }
        FormulaKind::Not(f) => Ok(!eval_formula_rec(f, structure, assignment)?),
        FormulaKind::And(a, b) => Ok(eval_formula_rec(a, structure, assignment)?
            && eval_formula_rec(b, structure, assignment)?),
        FormulaKind::ForAll(i, body) => {
            for e in structure.elements() {
                let previous = assignment.set(*i, e);
                let holds = eval_formula_rec(body, structure, assignment);
                assignment.restore(*i, previous);
                if !holds? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

//! Symbolic semantics: register terms along a path, the accumulated path
//! condition, and path isomorphism (finite and eventually periodic).
//!
//! At step `i` of a path, each used register holds a term over the input
//! variables `x_0..x_{n-1}` describing its concrete value on every input.
//! Predicate nodes contribute the label formula with register terms
//! substituted in (negated when the 0-edge is taken); the ordered list of
//! those formulas is the path condition.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use thiserror::Error;

use crate::exec::{self, ExecError, Outcome, TraceStep};
use crate::formula::Formula;
use crate::scheme::{Node, NodeId, Scheme};
use crate::structure::Structure;
use crate::term::{Subst, Term};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SymError {
    #[error("symbolic step applied to a terminal node")]
    TerminalNode,
    #[error("edge label does not match node kind")]
    EdgeMismatch,
    #[error(transparent)]
    Exec(#[from] ExecError),
}

/// Register contents as terms over the input variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicState {
    arity: usize,
    slots: BTreeMap<usize, Term>,
}

impl SymbolicState {
    /// The initial state: `x_i` for input registers, `x_{n-1}` for every
    /// other used register.
    pub fn initial(arity: usize, used_registers: &BTreeSet<usize>) -> Self {
        let slots = used_registers
            .iter()
            .map(|&i| (i, if i < arity { Term::var(i) } else { Term::var(arity - 1) }))
            .collect();
        SymbolicState { arity, slots }
    }

    /// The term held by a register. Registers outside the tracked domain
    /// still have their defined default.
    pub fn slot(&self, register: usize) -> Term {
        self.slots.get(&register).cloned().unwrap_or_else(|| {
            if register < self.arity {
                Term::var(register)
            } else {
                Term::var(self.arity - 1)
            }
        })
    }

    pub fn slots(&self) -> impl Iterator<Item = (usize, &Term)> {
        self.slots.iter().map(|(i, t)| (*i, t))
    }

    /// Substitution sending each listed variable to its current slot term.
    fn subst_for(&self, free_vars: &[usize]) -> Subst {
        free_vars.iter().map(|&v| (v, self.slot(v))).collect()
    }
}

/// Apply one node to the symbolic state. A function node rewrites one slot
/// (and emits nothing); a predicate node leaves the state unchanged and
/// emits its label with slot terms substituted in, negated on the 0-edge.
pub fn symbolic_step(
    state: &SymbolicState,
    node: &Node,
    edge: Option<bool>,
) -> Result<(SymbolicState, Option<Formula>), SymError> {
    match (node, edge) {
        (Node::Function { register, term }, None) => {
            let new_term = term.substitute(&state.subst_for(term.free_vars()));
            let mut next = state.clone();
            next.slots.insert(*register, new_term);
            Ok((next, None))
        }
        (Node::Predicate { formula }, Some(branch)) => {
            let substituted = formula.substitute(&state.subst_for(formula.free_vars()));
            let emitted = if branch { substituted } else { Formula::not(substituted) };
            Ok((state.clone(), Some(emitted)))
        }
        (Node::Terminal { .. }, _) => Err(SymError::TerminalNode),
        _ => Err(SymError::EdgeMismatch),
    }
}

/// One step of a path record: the node, a snapshot of its label, and the
/// edge taken (`None` for function edges and for the final terminal).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathStep {
    pub node: NodeId,
    pub label: Node,
    pub edge: Option<bool>,
}

/// A complete path, either finite (ending at a terminal step) or eventually
/// periodic (`steps[lasso_start..]` repeats forever). `pi` is the path
/// condition in emission order, restricted to the recorded steps; duplicates
/// are retained for trace fidelity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathRecord {
    pub steps: Vec<PathStep>,
    pub pi: Vec<Formula>,
    pub lasso_start: Option<usize>,
}

impl PathRecord {
    pub fn is_finite(&self) -> bool {
        self.lasso_start.is_none()
    }

    pub fn terminal_value(&self) -> Option<&BigUint> {
        match self.steps.last().map(|s| &s.label) {
            Some(Node::Terminal { value }) if self.is_finite() => Some(value),
            _ => None,
        }
    }
}

/// Replay a run symbolically: execute `(scheme, structure)` on the input and
/// thread the symbolic state along the trace. For divergent runs the record
/// covers the prefix plus one pass through the lasso.
pub fn path_of_run(
    scheme: &Scheme,
    structure: &Structure,
    input: &[crate::structure::Elem],
) -> Result<PathRecord, SymError> {
    let outcome = exec::run(scheme, structure, input)?;
    let used = scheme.used_registers();
    let mut state = SymbolicState::initial(scheme.arity(), &used);
    let mut pi = Vec::new();
    let mut record_steps = Vec::new();

    let mut thread = |steps: &[TraceStep], state: &mut SymbolicState| -> Result<(), SymError> {
        for TraceStep { node, edge } in steps {
            let label = scheme.node(node).clone();
            let (next, emitted) = symbolic_step(state, &label, *edge)?;
            record_steps.push(PathStep { node: node.clone(), label, edge: *edge });
            if let Some(f) = emitted {
                pi.push(f);
            }
            *state = next;
        }
        Ok(())
    };

    match outcome {
        Outcome::Output { steps, terminal, .. } => {
            thread(&steps, &mut state)?;
            record_steps.push(PathStep {
                node: terminal.clone(),
                label: scheme.node(&terminal).clone(),
                edge: None,
            });
            Ok(PathRecord { steps: record_steps, pi, lasso_start: None })
        }
        Outcome::Diverges { prefix, lasso } => {
            let lasso_start = prefix.len();
            thread(&prefix, &mut state)?;
            thread(&lasso, &mut state)?;
            Ok(PathRecord { steps: record_steps, pi, lasso_start: Some(lasso_start) })
        }
    }
}

/// What path isomorphism compares at each position: the label expression and
/// the edge taken. Node ids do not participate.
type LabelStep = (Node, Option<bool>);

fn label_steps(record: &PathRecord) -> Vec<LabelStep> {
    record.steps.iter().map(|s| (s.label.clone(), s.edge)).collect()
}

/// Minimal period of the infinite repetition of `v`: the smallest divisor
/// `d` of `|v|` such that `v` is the `d`-prefix repeated.
fn minimal_period(v: &[LabelStep]) -> usize {
    for d in 1..=v.len() {
        if v.len().is_multiple_of(d) && v.chunks(d).all(|c| c == &v[..d]) {
            return d;
        }
    }
    v.len()
}

/// Normal form of the eventually periodic label sequence `u v^ω`: minimal
/// period, then shortest prefix (absorbing shared tail symbols into a
/// rotation of the period).
fn normalize_lasso(mut u: Vec<LabelStep>, v: &[LabelStep]) -> (Vec<LabelStep>, Vec<LabelStep>) {
    let d = minimal_period(v);
    let mut v: Vec<LabelStep> = v[..d].to_vec();
    while let Some(last) = u.last() {
        if last == v.last().expect("period is nonempty") {
            let rotated = v.pop().expect("period is nonempty");
            v.insert(0, rotated);
            u.pop();
        } else {
            break;
        }
    }
    (u, v)
}

/// Decide path isomorphism: same length and position-wise identical label
/// expressions and edge labels. Divergent records are compared on the
/// normal forms of their eventually periodic label sequences.
pub fn paths_isomorphic(p: &PathRecord, q: &PathRecord) -> bool {
    match (p.lasso_start, q.lasso_start) {
        (None, None) => label_steps(p) == label_steps(q),
        (Some(i), Some(j)) => {
            let (pl, ql) = (label_steps(p), label_steps(q));
            let (pu, pv) = normalize_lasso(pl[..i].to_vec(), &pl[i..]);
            let (qu, qv) = normalize_lasso(ql[..j].to_vec(), &ql[j..]);
            pu == qu && pv == qv
        }
        _ => false,
    }
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

/// Position of the first label mismatch between two paths, comparing the
/// (possibly infinite) label streams element by element. `None` means the
/// paths are isomorphic. When one path is a proper prefix of the other, the
/// mismatch position is the shorter length.
pub fn first_mismatch(p: &PathRecord, q: &PathRecord) -> Option<usize> {
    let (pl, ql) = (label_steps(p), label_steps(q));
    let at = |labels: &[LabelStep], lasso: Option<usize>, i: usize| -> Option<LabelStep> {
        match lasso {
            _ if i < labels.len() => Some(labels[i].clone()),
            None => None,
            Some(start) => {
                let period = labels.len() - start;
                Some(labels[start + (i - start) % period].clone())
            }
        }
    };
    // Two eventually periodic streams agreeing beyond both prefixes for a
    // full least-common-multiple of their periods agree everywhere.
    let bound = match (p.lasso_start, q.lasso_start) {
        (None, None) => pl.len().max(ql.len()),
        (None, Some(_)) => pl.len() + 1,
        (Some(_), None) => ql.len() + 1,
        (Some(i), Some(j)) => i.max(j) + lcm(pl.len() - i, ql.len() - j),
    };
    for pos in 0..=bound {
        match (at(&pl, p.lasso_start, pos), at(&ql, q.lasso_start, pos)) {
            (None, None) => return None,
            (Some(a), Some(b)) if a == b => continue,
            _ => return Some(pos),
        }
    }
    None
}

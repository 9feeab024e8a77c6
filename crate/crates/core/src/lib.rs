//! Engine for program schemes over finite first-order structures.
//!
//! A scheme is a directed graph of function nodes (`x_j <= t`), predicate
//! nodes (branching on a formula) and terminal nodes (numeric outputs).
//! Paired with a finite structure it becomes a program computing a partial
//! function of its input tuple. This crate provides:
//!
//! - terms, formulas and finite structures with Tarskian evaluation
//!   ([`term`], [`formula`], [`structure`], [`eval`]);
//! - the scheme graph model with validation, classification and DOT export
//!   ([`scheme`], [`dot`]);
//! - concrete execution with divergence (lasso) detection and totality
//!   checking ([`exec`]);
//! - symbolic execution: register terms and path conditions along a path,
//!   and path isomorphism ([`sym`]);
//! - satisfiability oracles over structures, finite classes and bounded
//!   families ([`oracle`]);
//! - unrolling a cyclic scheme into a tree and pruning it against a class
//!   to a strongly equivalent finite tree-scheme ([`treeify`]);
//! - strong-equivalence and same-function checks ([`equiv`]).

pub mod dot;
pub mod equiv;
pub mod eval;
pub mod exec;
pub mod formula;
pub mod oracle;
pub mod scheme;
pub mod sexpr;
pub mod signature;
pub mod structure;
pub mod sym;
pub mod term;
pub mod treeify;

pub use eval::{eval_formula, eval_term, Assignment, EvalError};
pub use formula::Formula;
pub use scheme::{Node, NodeId, Scheme, SchemeClass, TreeScheme};
pub use signature::Signature;
pub use structure::{Elem, Structure};
pub use term::{Subst, Term};

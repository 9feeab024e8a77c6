//! Strong equivalence of schemes relative to a finite class of finite
//! structures, and the weaker output-only comparison of the implemented
//! functions.

use num_bigint::BigUint;

use crate::exec::{implemented_function, ExecError};
use crate::scheme::Scheme;
use crate::structure::Structure;
use crate::sym::{first_mismatch, path_of_run, PathRecord, SymError};

/// Verdict of a strong-equivalence check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivVerdict {
    Equivalent,
    ArityMismatch {
        left: usize,
        right: usize,
    },
    /// The satisfiable paths on this structure and tuple are not isomorphic.
    NotEquivalent {
        structure: String,
        tuple: Vec<String>,
        /// Position of the first label mismatch in the two paths.
        position: usize,
        left: PathRecord,
        right: PathRecord,
    },
}

impl EquivVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, EquivVerdict::Equivalent)
    }
}

/// Two schemes are strongly equivalent relative to a class when they have
/// the same arity and, on every structure of the class and every input
/// tuple, their satisfiable complete paths are isomorphic. The executed
/// trace is that path (in lasso form for divergent runs), so the check
/// replays both schemes on every tuple.
pub fn strongly_equivalent(
    left: &Scheme,
    right: &Scheme,
    class: &[Structure],
) -> Result<EquivVerdict, SymError> {
    if left.arity() != right.arity() {
        return Ok(EquivVerdict::ArityMismatch { left: left.arity(), right: right.arity() });
    }
    for structure in class {
        for tuple in structure.tuples(left.arity()) {
            let p = path_of_run(left, structure, &tuple)?;
            let q = path_of_run(right, structure, &tuple)?;
            if let Some(position) = first_mismatch(&p, &q) {
                return Ok(EquivVerdict::NotEquivalent {
                    structure: structure.name().to_string(),
                    tuple: structure.tuple_names(&tuple),
                    position,
                    left: p,
                    right: q,
                });
            }
        }
    }
    Ok(EquivVerdict::Equivalent)
}

/// Result of comparing the implemented functions pointwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunctionComparison {
    Same,
    Different {
        structure: String,
        tuple: Vec<String>,
        left: Option<BigUint>,
        right: Option<BigUint>,
    },
}

impl FunctionComparison {
    pub fn is_same(&self) -> bool {
        matches!(self, FunctionComparison::Same)
    }
}

/// Output-only comparison: the schemes implement the same partial function
/// on every structure of the class (agreeing on undefinedness too).
pub fn same_function(
    left: &Scheme,
    right: &Scheme,
    class: &[Structure],
) -> Result<FunctionComparison, ExecError> {
    for structure in class {
        let lt = implemented_function(left, structure)?;
        let rt = implemented_function(right, structure)?;
        for ((tuple, lv), (_, rv)) in lt.rows.iter().zip(&rt.rows) {
            if lv != rv {
                return Ok(FunctionComparison::Different {
                    structure: structure.name().to_string(),
                    tuple: structure.tuple_names(tuple),
                    left: lv.clone(),
                    right: rv.clone(),
                });
            }
        }
    }
    Ok(FunctionComparison::Same)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::PathSatOracle;
    use crate::scheme::parse_scheme;
    use crate::structure::{cyclic_group, cyclic_signature};
    use crate::treeify::{treeify, TreeifyLimits};
    use std::sync::Arc;

    fn resolve(_: &str) -> Result<Arc<crate::signature::Signature>, String> {
        Ok(cyclic_signature())
    }

    const GUARDED: &str = "\
scheme guarded arity 2 signature cyclic.sig
node g predicate (= x1 zero)
node gz terminal 0
node p predicate (= x0 zero)
node f function x0 <= (add x0 x1)
node t terminal 1
edge g -> gz label 1
edge g -> p label 0
edge p -> t label 1
edge p -> f label 0
edge f -> p
initial g
";

    fn z(k: usize) -> Structure {
        cyclic_group(k).unwrap()
    }

    #[test]
    fn reflexive() {
        let s = parse_scheme(GUARDED, resolve).unwrap();
        let class = [z(2), z(3)];
        assert_eq!(strongly_equivalent(&s, &s, &class).unwrap(), EquivVerdict::Equivalent);
    }

    #[test]
    fn treeified_scheme_is_strongly_equivalent() {
        let s = parse_scheme(GUARDED, resolve).unwrap();
        let class = vec![z(2), z(3)];
        let oracle = PathSatOracle::for_class(class.clone()).unwrap();
        let tree = treeify(&s, &oracle, TreeifyLimits::default()).unwrap().result.unwrap();
        assert_eq!(
            strongly_equivalent(&s, tree.as_scheme(), &class).unwrap(),
            EquivVerdict::Equivalent
        );
        assert!(same_function(&s, tree.as_scheme(), &class).unwrap().is_same());
    }

    #[test]
    fn relabeled_terminal_is_detected() {
        let s = parse_scheme(GUARDED, resolve).unwrap();
        let other =
            parse_scheme(&GUARDED.replace("node t terminal 1", "node t terminal 2"), resolve)
                .unwrap();
        let class = [z(2)];
        match strongly_equivalent(&s, &other, &class).unwrap() {
            EquivVerdict::NotEquivalent { position, left, right, tuple, .. } => {
                // The mismatch is at the terminal step of the finite paths.
                assert_eq!(position, left.steps.len() - 1);
                assert_eq!(left.steps.len(), right.steps.len());
                // Replaying the evidence reproduces the mismatch.
                assert!(!crate::sym::paths_isomorphic(&left, &right));
                assert!(!tuple.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn arity_mismatch() {
        let s = parse_scheme(GUARDED, resolve).unwrap();
        let tiny = parse_scheme(
            "scheme tiny arity 1 signature cyclic.sig\nnode t terminal 0\ninitial t\n",
            resolve,
        )
        .unwrap();
        assert_eq!(
            strongly_equivalent(&s, &tiny, &[z(2)]).unwrap(),
            EquivVerdict::ArityMismatch { left: 2, right: 1 }
        );
    }

    #[test]
    fn same_function_is_weaker_than_strong_equivalence() {
        // Two schemes computing the constant 0 with different shapes.
        let direct = parse_scheme(
            "scheme direct arity 1 signature cyclic.sig\nnode t terminal 0\ninitial t\n",
            resolve,
        )
        .unwrap();
        let indirect = parse_scheme(
            "scheme indirect arity 1 signature cyclic.sig\n\
             node f function x0 <= zero\n\
             node t terminal 0\n\
             edge f -> t\n\
             initial f\n",
            resolve,
        )
        .unwrap();
        let class = [z(2)];
        assert!(same_function(&direct, &indirect, &class).unwrap().is_same());
        match strongly_equivalent(&direct, &indirect, &class).unwrap() {
            EquivVerdict::NotEquivalent { position, .. } => assert_eq!(position, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn divergence_differences_show_in_same_function() {
        let total = parse_scheme(
            "scheme total arity 2 signature cyclic.sig\nnode t terminal 1\ninitial t\n",
            resolve,
        )
        .unwrap();
        let looping = parse_scheme(
            "scheme looping arity 2 signature cyclic.sig\n\
             node p predicate (= x0 zero)\n\
             node f function x0 <= (add x0 x1)\n\
             node t terminal 1\n\
             edge p -> t label 1\n\
             edge p -> f label 0\n\
             edge f -> p\n\
             initial p\n",
            resolve,
        )
        .unwrap();
        let class = [z(3)];
        match same_function(&total, &looping, &class).unwrap() {
            FunctionComparison::Different { left, right, .. } => {
                // One side outputs where the other diverges or differs.
                assert!(left != right);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

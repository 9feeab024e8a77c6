//! Satisfiability oracles: is a set of formulas with free variables among
//! the inputs satisfiable in a structure, in a finite class, or in a lazily
//! generated family of structures?
//!
//! All backends work by enumeration over finite universes. The family
//! backend explores generated structures up to a bound and therefore never
//! answers `Unsat`: an unexplored member might still satisfy the query.

use std::sync::Arc;

use thiserror::Error;

use crate::eval::{eval_formula, Assignment, EvalError};
use crate::formula::Formula;
use crate::structure::{cyclic_group, Elem, Structure, StructureError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("formula {formula} has free variable x{var}, query arity is {arity}")]
    FreeVariableOutOfRange { formula: String, var: usize, arity: usize },
    #[error("query arity must be at least 1")]
    ZeroArity,
    #[error("class is empty")]
    EmptyClass,
    #[error("family bound must be at least 1")]
    ZeroBound,
    #[error("family generator failed at index {index}: {message}")]
    Generator { index: usize, message: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A deduplicated list of formulas with free variables among `x_0..x_{n-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatQuery {
    arity: usize,
    formulas: Vec<Formula>,
}

impl SatQuery {
    /// Build a query, deduplicating structurally equal formulas while
    /// preserving first-occurrence order.
    pub fn new(
        arity: usize,
        formulas: impl IntoIterator<Item = Formula>,
    ) -> Result<Self, OracleError> {
        if arity == 0 {
            return Err(OracleError::ZeroArity);
        }
        let mut deduped: Vec<Formula> = Vec::new();
        for f in formulas {
            if let Some(&v) = f.free_vars().iter().find(|&&v| v >= arity) {
                return Err(OracleError::FreeVariableOutOfRange {
                    formula: f.to_string(),
                    var: v,
                    arity,
                });
            }
            if !deduped.contains(&f) {
                deduped.push(f);
            }
        }
        Ok(SatQuery { arity, formulas: deduped })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }
}

/// Verdict of a satisfiability check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatVerdict {
    /// Some structure satisfies every formula on the witness tuple
    /// (element names of the named structure).
    Sat { structure: String, witness: Vec<String> },
    /// No structure in the queried (finite, fully explored) scope does.
    Unsat,
    /// The family backend explored only finitely many members.
    Unknown { bound: usize },
}

impl SatVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatVerdict::Sat { .. })
    }
}

fn tuple_satisfies(
    query: &SatQuery,
    structure: &Structure,
    tuple: &[Elem],
) -> Result<bool, OracleError> {
    let assignment = Assignment::from_tuple(tuple);
    for f in &query.formulas {
        if !eval_formula(f, structure, &assignment)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Exhaustive scan of all tuples in lexicographic order; the first satisfying
/// tuple is the witness. Never answers `Unknown`.
pub fn check_sat_structure(
    query: &SatQuery,
    structure: &Structure,
) -> Result<SatVerdict, OracleError> {
    for tuple in structure.tuples(query.arity) {
        if tuple_satisfies(query, structure, &tuple)? {
            return Ok(SatVerdict::Sat {
                structure: structure.name().to_string(),
                witness: structure.tuple_names(&tuple),
            });
        }
    }
    Ok(SatVerdict::Unsat)
}

/// Disjunction over the class in the given order; `Sat` names the first
/// witnessing structure.
pub fn check_sat_class(query: &SatQuery, class: &[Structure]) -> Result<SatVerdict, OracleError> {
    if class.is_empty() {
        return Err(OracleError::EmptyClass);
    }
    for structure in class {
        if let v @ SatVerdict::Sat { .. } = check_sat_structure(query, structure)? {
            return Ok(v);
        }
    }
    Ok(SatVerdict::Unsat)
}

/// A generator of structures indexed from 1.
pub trait StructureFamily {
    fn name(&self) -> &str;
    fn generate(&self, index: usize) -> Result<Structure, String>;
}

/// The cyclic groups Z_1, Z_2, ...
#[derive(Debug, Clone, Copy, Default)]
pub struct CyclicFamily;

impl StructureFamily for CyclicFamily {
    fn name(&self) -> &str {
        "cyclic"
    }

    fn generate(&self, index: usize) -> Result<Structure, String> {
        cyclic_group(index).map_err(|e: StructureError| e.to_string())
    }
}

/// Check satisfiability over family members `1..=bound`. Sound for `Sat`
/// only: a negative scan yields `Unknown`, never `Unsat`.
pub fn check_sat_family(
    query: &SatQuery,
    family: &dyn StructureFamily,
    bound: usize,
) -> Result<SatVerdict, OracleError> {
    if bound == 0 {
        return Err(OracleError::ZeroBound);
    }
    for index in 1..=bound {
        let structure =
            family.generate(index).map_err(|message| OracleError::Generator { index, message })?;
        if let v @ SatVerdict::Sat { .. } = check_sat_structure(query, &structure)? {
            return Ok(v);
        }
    }
    Ok(SatVerdict::Unknown { bound })
}

/// Surviving witness tuples per structure, refined as a branch accumulates
/// path-condition formulas. Refinement only ever shrinks the sets, so a
/// branch query costs the survivors of its parent, not a full rescan.
#[derive(Debug, Clone)]
pub struct BranchWitnesses {
    per_structure: Vec<Vec<Vec<Elem>>>,
}

impl BranchWitnesses {
    pub fn is_empty(&self) -> bool {
        self.per_structure.iter().all(|s| s.is_empty())
    }
}

/// Incremental satisfiability oracle for branch-by-branch pruning: holds the
/// structures of the target class (or the explored members of a family) and
/// refines witness sets formula by formula.
#[derive(Debug, Clone)]
pub struct PathSatOracle {
    structures: Arc<Vec<Structure>>,
    /// `None`: the scope is exhaustive and empty survivors mean `Unsat`.
    /// `Some(bound)`: family mode; empty survivors only mean `Unknown`.
    family_bound: Option<usize>,
}

impl PathSatOracle {
    /// Exact oracle over a finite class of finite structures.
    pub fn for_class(class: Vec<Structure>) -> Result<Self, OracleError> {
        if class.is_empty() {
            return Err(OracleError::EmptyClass);
        }
        Ok(PathSatOracle { structures: Arc::new(class), family_bound: None })
    }

    /// Bounded family oracle over members `1..=bound` of a generator.
    pub fn for_family(family: &dyn StructureFamily, bound: usize) -> Result<Self, OracleError> {
        if bound == 0 {
            return Err(OracleError::ZeroBound);
        }
        let structures: Vec<Structure> = (1..=bound)
            .map(|index| {
                family.generate(index).map_err(|message| OracleError::Generator { index, message })
            })
            .collect::<Result<_, _>>()?;
        Ok(PathSatOracle { structures: Arc::new(structures), family_bound: Some(bound) })
    }

    pub fn structures(&self) -> &[Structure] {
        &self.structures
    }

    pub fn is_exhaustive(&self) -> bool {
        self.family_bound.is_none()
    }

    /// The root branch: every tuple of every structure survives the empty
    /// path condition.
    pub fn root(&self, arity: usize) -> Result<BranchWitnesses, OracleError> {
        if arity == 0 {
            return Err(OracleError::ZeroArity);
        }
        Ok(BranchWitnesses {
            per_structure: self.structures.iter().map(|s| s.tuples(arity).collect()).collect(),
        })
    }

    /// Intersect every survivor set with one more formula.
    pub fn refine(
        &self,
        parent: &BranchWitnesses,
        formula: &Formula,
    ) -> Result<BranchWitnesses, OracleError> {
        let mut per_structure = Vec::with_capacity(parent.per_structure.len());
        for (structure, survivors) in self.structures.iter().zip(&parent.per_structure) {
            let mut kept = Vec::new();
            for tuple in survivors {
                let assignment = Assignment::from_tuple(tuple);
                if eval_formula(formula, structure, &assignment)? {
                    kept.push(tuple.clone());
                }
            }
            per_structure.push(kept);
        }
        Ok(BranchWitnesses { per_structure })
    }

    /// Verdict for a branch: `Sat` with the first surviving witness in class
    /// order, otherwise `Unsat` for exhaustive scopes and `Unknown` for
    /// bounded families.
    pub fn verdict(&self, branch: &BranchWitnesses) -> SatVerdict {
        for (structure, survivors) in self.structures.iter().zip(&branch.per_structure) {
            if let Some(tuple) = survivors.first() {
                return SatVerdict::Sat {
                    structure: structure.name().to_string(),
                    witness: structure.tuple_names(tuple),
                };
            }
        }
        match self.family_bound {
            None => SatVerdict::Unsat,
            Some(bound) => SatVerdict::Unknown { bound },
        }
    }
}

/// "There are at least `k` pairwise distinct elements", as a sentence.
/// Bound variables start right above the input variables. The disequalities
/// for each bound variable sit directly under its quantifier, so exhaustive
/// evaluation backtracks at the first clash instead of enumerating all
/// assignments.
pub fn distinct_elements_formula(k: usize, arity: usize) -> Formula {
    use crate::term::Term;
    let k = k.max(1);
    let var = |i: usize| Term::var(arity + i);
    // Innermost level first: exists y_j (y_0 != y_j and ... and rest).
    let mut rest: Option<Formula> = None;
    for level in (0..k).rev() {
        let mut body: Option<Formula> = None;
        for earlier in 0..level {
            let diff = Formula::not(Formula::equal(var(earlier), var(level)));
            body = Some(match body {
                None => diff,
                Some(b) => Formula::and(b, diff),
            });
        }
        let body = match (body, rest.take()) {
            (Some(b), Some(r)) => Formula::and(b, r),
            (Some(b), None) => b,
            (None, Some(r)) => r,
            // k = 1: assert only that some element exists.
            (None, None) => Formula::equal(var(level), var(level)),
        };
        rest = Some(Formula::exists(arity + level, body));
    }
    rest.expect("k >= 1")
}

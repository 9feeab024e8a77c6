//! Concrete operational semantics: register-machine execution of a program
//! `(S, U)`, divergence detection by state repetition, totality checking and
//! the implemented-function table.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use thiserror::Error;

use crate::eval::{eval_formula, eval_term, Assignment, EvalError};
use crate::scheme::{Node, NodeId, Scheme, Successors};
use crate::structure::{Elem, Structure};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExecError {
    #[error("input tuple has {given} elements, scheme arity is {expected}")]
    InputArity { expected: usize, given: usize },
    #[error("scheme signature '{scheme_sig}' is not interpreted by structure '{structure}'")]
    IncompatibleSignature { scheme_sig: String, structure: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A machine state: current node plus the contents of the used registers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExecState {
    pub node: NodeId,
    /// Values aligned with the sorted used-register index list.
    pub registers: Vec<Elem>,
}

/// Register index layout shared by all states of one run.
#[derive(Debug, Clone)]
pub struct RegisterLayout {
    indices: Vec<usize>,
}

impl RegisterLayout {
    pub fn for_scheme(scheme: &Scheme) -> Self {
        RegisterLayout { indices: scheme.used_registers().into_iter().collect() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Initial register contents: `x_i = a_i` for `i < n`, and `a_{n-1}` for
    /// every used register at or beyond `n`.
    pub fn initial_values(&self, input: &[Elem]) -> Vec<Elem> {
        let last = *input.last().expect("arity >= 1");
        self.indices.iter().map(|&i| if i < input.len() { input[i] } else { last }).collect()
    }

    pub fn assignment(&self, values: &[Elem]) -> Assignment {
        self.indices.iter().copied().zip(values.iter().copied()).collect()
    }

    pub fn position(&self, register: usize) -> Option<usize> {
        self.indices.binary_search(&register).ok()
    }
}

/// One trace entry: a node visited and the edge taken out of it
/// (`Some(true|false)` for the labeled predicate edges, `None` for the
/// unlabeled function edge).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub node: NodeId,
    pub edge: Option<bool>,
}

/// Outcome of running a program on one input tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// The run reached a terminal. The trace lists the nodes left along the
    /// way; the terminal itself appears only as `terminal`, having no
    /// outgoing edge.
    Output { value: BigUint, steps: Vec<TraceStep>, terminal: NodeId },
    /// The run repeats a machine state: `prefix` then `lasso` forever.
    Diverges { prefix: Vec<TraceStep>, lasso: Vec<TraceStep> },
}

impl Outcome {
    pub fn value(&self) -> Option<&BigUint> {
        match self {
            Outcome::Output { value, .. } => Some(value),
            Outcome::Diverges { .. } => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Output { value, .. } => write!(f, "output {value}"),
            Outcome::Diverges { .. } => write!(f, "diverges"),
        }
    }
}

/// Result of one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// Moved to a new state along the given edge.
    Moved { state: ExecState, edge: Option<bool> },
    /// The current node is a terminal with this value.
    Finished { value: BigUint },
}

fn check_compatible(scheme: &Scheme, structure: &Structure) -> Result<(), ExecError> {
    if scheme.signature().sub_signature_of(structure.signature()) {
        Ok(())
    } else {
        Err(ExecError::IncompatibleSignature {
            scheme_sig: scheme.signature().name().to_string(),
            structure: structure.name().to_string(),
        })
    }
}

/// The initial state for an input tuple.
pub fn initial_state(
    scheme: &Scheme,
    structure: &Structure,
    layout: &RegisterLayout,
    input: &[Elem],
) -> Result<ExecState, ExecError> {
    check_compatible(scheme, structure)?;
    if input.len() != scheme.arity() {
        return Err(ExecError::InputArity { expected: scheme.arity(), given: input.len() });
    }
    Ok(ExecState { node: scheme.initial().clone(), registers: layout.initial_values(input) })
}

/// Execute one node: update a register and follow the unlabeled edge, branch
/// on a predicate, or finish at a terminal.
pub fn step(
    scheme: &Scheme,
    structure: &Structure,
    layout: &RegisterLayout,
    state: &ExecState,
) -> Result<Step, ExecError> {
    match (scheme.node(&state.node), scheme.successors(&state.node)) {
        (Node::Function { register, term }, Successors::Function(to)) => {
            let assignment = layout.assignment(&state.registers);
            let value = eval_term(term, structure, &assignment)?;
            let mut registers = state.registers.clone();
            let pos =
                layout.position(*register).expect("function target register is in used_registers");
            registers[pos] = value;
            Ok(Step::Moved { state: ExecState { node: to.clone(), registers }, edge: None })
        }
        (Node::Predicate { formula }, Successors::Predicate { on_true, on_false }) => {
            let assignment = layout.assignment(&state.registers);
            let holds = eval_formula(formula, structure, &assignment)?;
            let to = if holds { on_true } else { on_false };
            Ok(Step::Moved {
                state: ExecState { node: to.clone(), registers: state.registers.clone() },
                edge: Some(holds),
            })
        }
        (Node::Terminal { value }, Successors::Terminal) => {
            Ok(Step::Finished { value: value.clone() })
        }
        _ => unreachable!("validated scheme: node kind matches successors"),
    }
}

/// The pigeonhole bound on distinct machine states: a run that has not
/// reached a terminal within this many steps has necessarily repeated a
/// state.
pub fn divergence_bound(scheme: &Scheme, structure: &Structure) -> usize {
    let registers = scheme.used_registers().len() as u32;
    structure
        .size()
        .checked_pow(registers)
        .and_then(|s| s.checked_mul(scheme.node_count()))
        .unwrap_or(usize::MAX)
}

/// Run the program `(scheme, structure)` on an input tuple until it outputs
/// or a machine state repeats.
pub fn run(scheme: &Scheme, structure: &Structure, input: &[Elem]) -> Result<Outcome, ExecError> {
    let layout = RegisterLayout::for_scheme(scheme);
    let mut state = initial_state(scheme, structure, &layout, input)?;
    let mut seen: HashMap<ExecState, usize> = HashMap::new();
    let mut steps: Vec<TraceStep> = Vec::new();
    let bound = divergence_bound(scheme, structure);

    loop {
        if let Some(&first) = seen.get(&state) {
            let lasso = steps.split_off(first);
            debug_assert!(!lasso.is_empty());
            return Ok(Outcome::Diverges { prefix: steps, lasso });
        }
        seen.insert(state.clone(), steps.len());
        match step(scheme, structure, &layout, &state)? {
            Step::Finished { value } => {
                return Ok(Outcome::Output { value, steps, terminal: state.node });
            }
            Step::Moved { state: next, edge } => {
                steps.push(TraceStep { node: state.node.clone(), edge });
                state = next;
            }
        }
        debug_assert!(steps.len() <= bound + 1, "pigeonhole divergence bound exceeded");
    }
}

/// Totality verdict for one structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Totality {
    Total,
    NotTotal { witness: Vec<Elem>, outcome: Outcome },
}

/// Check whether the program `(scheme, structure)` is everywhere defined,
/// enumerating input tuples in lexicographic order.
pub fn check_totality(scheme: &Scheme, structure: &Structure) -> Result<Totality, ExecError> {
    for tuple in structure.tuples(scheme.arity()) {
        let outcome = run(scheme, structure, &tuple)?;
        if matches!(outcome, Outcome::Diverges { .. }) {
            return Ok(Totality::NotTotal { witness: tuple, outcome });
        }
    }
    Ok(Totality::Total)
}

/// Totality verdict over a class of structures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassTotality {
    Total,
    NotTotal { structure: String, witness: Vec<Elem>, outcome: Outcome },
}

/// Check totality relative to a finite class, in the given structure order.
pub fn check_totality_class(
    scheme: &Scheme,
    class: &[Structure],
) -> Result<ClassTotality, ExecError> {
    for structure in class {
        if let Totality::NotTotal { witness, outcome } = check_totality(scheme, structure)? {
            return Ok(ClassTotality::NotTotal {
                structure: structure.name().to_string(),
                witness,
                outcome,
            });
        }
    }
    Ok(ClassTotality::Total)
}

/// The full graph of the implemented partial function, as `(tuple, value)`
/// rows in lexicographic tuple order; `None` marks undefined entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionTable {
    pub rows: Vec<(Vec<Elem>, Option<BigUint>)>,
}

impl FunctionTable {
    /// TSV rendering: tuple, tab, value or `⊥`.
    pub fn to_tsv(&self, structure: &Structure) -> String {
        let mut out = String::new();
        for (tuple, value) in &self.rows {
            let names = structure.tuple_names(tuple).join(",");
            match value {
                Some(v) => out.push_str(&format!("{names}\t{v}\n")),
                None => out.push_str(&format!("{names}\t⊥\n")),
            }
        }
        out
    }
}

pub fn implemented_function(
    scheme: &Scheme,
    structure: &Structure,
) -> Result<FunctionTable, ExecError> {
    let mut rows = Vec::new();
    for tuple in structure.tuples(scheme.arity()) {
        let value = run(scheme, structure, &tuple)?.value().cloned();
        rows.push((tuple, value));
    }
    Ok(FunctionTable { rows })
}

//! Shared test fixtures: the scheme corpus, reference structures, and
//! independent brute-force oracles used by the acceptance suite.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use treeprog_core::eval::{eval_formula, Assignment};
use treeprog_core::exec;
use treeprog_core::formula::Formula;
use treeprog_core::scheme::{parse_scheme, Node, NodeId, Scheme, SchemeParts, Successors};
use treeprog_core::signature::{parse_signature, Signature};
use treeprog_core::structure::{cyclic_group, cyclic_signature, Elem, Structure};
use treeprog_core::term::{Subst, Term};

pub fn arith_signature() -> Arc<Signature> {
    Arc::new(
        parse_signature(
            "signature arith\nconstant zero\nconstant one\nfunction add/2\nfunction mul/2\n",
        )
        .unwrap(),
    )
}

pub fn gf(p: usize) -> Structure {
    Structure::builder(format!("GF{p}"), arith_signature())
        .elements((0..p).map(|i| i.to_string()))
        .constant("zero", "0")
        .constant("one", "1")
        .function_by("add", 2, |t| (t[0] + t[1]) % p)
        .function_by("mul", 2, |t| (t[0] * t[1]) % p)
        .build()
        .unwrap()
}

pub fn z4() -> Structure {
    cyclic_group(4).unwrap()
}

/// The three reference structures of the acceptance corpus.
pub fn reference_structures() -> Vec<Structure> {
    vec![gf(2), gf(3), z4()]
}

/// The reference structures a scheme can run on (signature reduct rule).
pub fn structures_for(scheme: &Scheme) -> Vec<Structure> {
    reference_structures()
        .into_iter()
        .filter(|u| scheme.signature().sub_signature_of(u.signature()))
        .collect()
}

fn resolve(path: &str) -> Result<Arc<Signature>, String> {
    match path {
        "cyclic.sig" => Ok(cyclic_signature()),
        "arith.sig" => Ok(arith_signature()),
        other => Err(format!("unknown signature file '{other}'")),
    }
}

pub fn scheme_from(text: &str) -> Scheme {
    parse_scheme(text, resolve).unwrap()
}

pub const LOOP: &str = "\
scheme loop arity 2 signature cyclic.sig
node p predicate (= x0 zero)
node f function x0 <= (add x0 x1)
node t terminal 1
edge p -> t label 1
edge p -> f label 0
edge f -> p
initial p
";

pub const GUARDED: &str = "\
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

pub const SELF_LOOP: &str = "\
scheme selfloop arity 1 signature cyclic.sig
node p predicate (= x0 x0)
node t terminal 0
edge p -> p label 1
edge p -> t label 0
initial p
";

pub const CONTRADICTION_FIRST: &str = "\
scheme contra arity 1 signature cyclic.sig
node p predicate (not (= x0 x0))
node a terminal 7
node b terminal 1
edge p -> a label 1
edge p -> b label 0
initial p
";

/// Hand-written corpus schemes.
pub fn hand_written() -> Vec<Scheme> {
    let texts = [
        "scheme tiny1 arity 1 signature cyclic.sig\nnode t terminal 0\ninitial t\n",
        "scheme tiny2 arity 2 signature cyclic.sig\nnode t terminal 3\ninitial t\n",
        LOOP,
        GUARDED,
        SELF_LOOP,
        CONTRADICTION_FIRST,
        // Predicate with both edges into the same function node.
        "scheme diamond arity 1 signature cyclic.sig\n\
         node q predicate (= x0 zero)\n\
         node f function x0 <= (add x0 x0)\n\
         node t terminal 0\n\
         edge q -> f label 1\n\
         edge q -> f label 0\n\
         edge f -> t\n\
         initial q\n",
        // Computation schemes (primitive labels only).
        "scheme comp_chain arity 2 signature cyclic.sig\n\
         node q predicate (= x0 x1)\n\
         node g function x0 <= (add x0 x1)\n\
         node t0 terminal 0\n\
         node t1 terminal 1\n\
         edge q -> g label 1\n\
         edge q -> t0 label 0\n\
         edge g -> t1\n\
         initial q\n",
        "scheme comp_copy arity 1 signature cyclic.sig\n\
         node f function x2 <= x0\n\
         node q predicate (= x0 x2)\n\
         node t0 terminal 0\n\
         node t1 terminal 1\n\
         edge f -> q\n\
         edge q -> t1 label 1\n\
         edge q -> t0 label 0\n\
         initial f\n",
        "scheme comp_branch arity 2 signature cyclic.sig\n\
         node q predicate (= x0 x1)\n\
         node t0 terminal 0\n\
         node t1 terminal 1\n\
         edge q -> t1 label 1\n\
         edge q -> t0 label 0\n\
         initial q\n",
        // A quantified predicate: forall y (x0 + y = y) holds exactly at zero.
        "scheme quantified arity 1 signature cyclic.sig\n\
         node p predicate (forall x5 (= (add x0 x5) x5))\n\
         node t0 terminal 0\n\
         node t1 terminal 1\n\
         edge p -> t1 label 1\n\
         edge p -> t0 label 0\n\
         initial p\n",
        // Forces a binder rename: after x0 <= add(x0,x1), the predicate's
        // bound x1 clashes with the free x1 of the slot term.
        "scheme capture arity 2 signature cyclic.sig\n\
         node f function x0 <= (add x0 x1)\n\
         node p predicate (exists x1 (= (add x0 x1) zero))\n\
         node t0 terminal 0\n\
         node t1 terminal 1\n\
         edge f -> p\n\
         edge p -> t1 label 1\n\
         edge p -> t0 label 0\n\
         initial f\n",
        // Arithmetic schemes over the field signature.
        "scheme squares arity 1 signature arith.sig\n\
         node f function x0 <= (mul x0 x0)\n\
         node p predicate (= x0 one)\n\
         node t terminal 1\n\
         edge f -> p\n\
         edge p -> t label 1\n\
         edge p -> f label 0\n\
         initial f\n",
        "scheme arith_total arity 2 signature arith.sig\n\
         node q predicate (= (mul x0 x1) zero)\n\
         node t0 terminal 0\n\
         node t1 terminal 1\n\
         edge q -> t0 label 1\n\
         edge q -> t1 label 0\n\
         initial q\n",
    ];
    texts.iter().map(|t| scheme_from(t)).collect()
}

/// Deterministic pseudo-random corpus: small valid schemes of arity 1 or 2
/// with at most 8 nodes.
pub fn generated(count: usize, seed: u64) -> Vec<Scheme> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        assert!(attempts < 100_000, "scheme generator stalled");
        if let Some(s) = try_generate(&mut rng, out.len()) {
            out.push(s);
        }
    }
    out
}

fn try_generate(rng: &mut ChaCha8Rng, index: usize) -> Option<Scheme> {
    let arity = 1 + rng.gen_range(0..2usize);
    let computation = rng.gen_bool(0.4);
    let arith = !computation && rng.gen_bool(0.35);
    let signature = if arith { arith_signature() } else { cyclic_signature() };
    let node_count = rng.gen_range(1..=8usize);

    let mut registers = (0..arity).collect::<Vec<usize>>();
    if arity == 1 && rng.gen_bool(0.3) {
        registers.push(2);
    }
    let var = |rng: &mut ChaCha8Rng, registers: &[usize]| {
        Term::var(registers[rng.gen_range(0..registers.len())])
    };

    let mut nodes: BTreeMap<NodeId, Node> = BTreeMap::new();
    let mut edges: Vec<(NodeId, NodeId, Option<bool>)> = Vec::new();
    let id = |i: usize| format!("n{i}");
    let target = |rng: &mut ChaCha8Rng, i: usize| {
        if rng.gen_bool(0.6) && i + 1 < node_count {
            id(i + 1)
        } else {
            id(rng.gen_range(0..node_count))
        }
    };

    for i in 0..node_count {
        let kind = rng.gen_range(0..100);
        if kind < 30 {
            nodes.insert(id(i), Node::Terminal { value: rng.gen_range(0..4u32).into() });
        } else if kind < 65 {
            let register = registers[rng.gen_range(0..registers.len())];
            let term = if computation {
                match rng.gen_range(0..2) {
                    0 => var(rng, &registers),
                    _ => Term::apply("add", vec![var(rng, &registers), var(rng, &registers)]),
                }
            } else {
                match rng.gen_range(0..4) {
                    0 => var(rng, &registers),
                    1 => Term::constant("zero"),
                    2 => Term::apply("add", vec![var(rng, &registers), var(rng, &registers)]),
                    _ if arith => {
                        Term::apply("mul", vec![var(rng, &registers), var(rng, &registers)])
                    }
                    _ => Term::apply("add", vec![var(rng, &registers), Term::constant("zero")]),
                }
            };
            nodes.insert(id(i), Node::Function { register, term });
            edges.push((id(i), target(rng, i), None));
        } else {
            let formula = if computation {
                Formula::equal(var(rng, &registers), var(rng, &registers))
            } else {
                match rng.gen_range(0..4) {
                    0 => Formula::equal(var(rng, &registers), var(rng, &registers)),
                    1 => Formula::equal(var(rng, &registers), Term::constant("zero")),
                    2 => Formula::equal(
                        Term::apply("add", vec![var(rng, &registers), var(rng, &registers)]),
                        Term::constant("zero"),
                    ),
                    _ if arith => Formula::equal(
                        Term::apply("mul", vec![var(rng, &registers), var(rng, &registers)]),
                        Term::constant("one"),
                    ),
                    _ => Formula::forall(
                        9,
                        Formula::equal(
                            Term::apply("add", vec![var(rng, &registers), Term::var(9)]),
                            Term::var(9),
                        ),
                    ),
                }
            };
            nodes.insert(id(i), Node::Predicate { formula });
            edges.push((id(i), target(rng, i), Some(true)));
            edges.push((id(i), target(rng, i), Some(false)));
        }
    }

    Scheme::from_parts(SchemeParts {
        name: format!("gen{index:02}"),
        arity,
        signature,
        nodes,
        edges,
        initial: Some(id(0)),
    })
    .ok()
}

/// The full acceptance corpus.
pub fn corpus() -> Vec<Scheme> {
    let mut all = hand_written();
    all.extend(generated(45, 0xC0FFEE));
    all
}

/// A path found by brute-force enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumeratedPath {
    /// Nodes left along the path with the edge taken.
    pub steps: Vec<(NodeId, Option<bool>)>,
    pub terminal: Option<NodeId>,
    /// The path reached the step bound without terminating.
    pub truncated: bool,
}

fn initial_slots(scheme: &Scheme) -> BTreeMap<usize, Term> {
    scheme
        .used_registers()
        .into_iter()
        .map(|i| (i, if i < scheme.arity() { Term::var(i) } else { Term::var(scheme.arity() - 1) }))
        .collect()
}

fn substituted(formula: &Formula, slots: &BTreeMap<usize, Term>) -> Formula {
    let s: Subst = formula.free_vars().iter().map(|&v| (v, slots[&v].clone())).collect();
    formula.substitute(&s)
}

/// Independent oracle for the unique-satisfiable-path property: explore all
/// complete paths of the scheme up to `bound` steps, keeping a branch only
/// while every path-condition formula evaluates true on the input. At each
/// predicate, assert that exactly one branch direction is true. Returns the
/// surviving complete (or bound-truncated) paths; there must be exactly one.
pub fn enumerate_true_paths(
    scheme: &Scheme,
    structure: &Structure,
    input: &[Elem],
    bound: usize,
) -> Vec<EnumeratedPath> {
    let assignment = Assignment::from_tuple(input);
    let mut results = Vec::new();
    let mut stack = vec![(scheme.initial().clone(), initial_slots(scheme), Vec::new())];
    while let Some((node_id, slots, steps)) = stack.pop() {
        match (scheme.node(&node_id), scheme.successors(&node_id)) {
            (Node::Terminal { .. }, _) => {
                results.push(EnumeratedPath { steps, terminal: Some(node_id), truncated: false });
            }
            _ if steps.len() >= bound => {
                results.push(EnumeratedPath { steps, terminal: None, truncated: true });
            }
            (Node::Function { register, term }, Successors::Function(to)) => {
                let s: Subst = term.free_vars().iter().map(|&v| (v, slots[&v].clone())).collect();
                let mut slots = slots;
                slots.insert(*register, term.substitute(&s));
                let mut steps = steps;
                steps.push((node_id, None));
                stack.push((to.clone(), slots, steps));
            }
            (Node::Predicate { formula }, Successors::Predicate { on_true, on_false }) => {
                let positive = substituted(formula, &slots);
                let negative = Formula::not(positive.clone());
                let pos_true = eval_formula(&positive, structure, &assignment).unwrap();
                let neg_true = eval_formula(&negative, structure, &assignment).unwrap();
                assert_ne!(pos_true, neg_true, "exactly one branch formula holds");
                // A branch whose emitted formula is false can never become
                // fully true again; only the true side is explored.
                let (to, edge) = if pos_true { (on_true, true) } else { (on_false, false) };
                let mut steps = steps;
                steps.push((node_id, Some(edge)));
                stack.push((to.clone(), slots, steps));
            }
            _ => unreachable!("validated scheme"),
        }
    }
    results
}

/// Every complete path of the scheme up to `bound` steps, with its path
/// condition, found by unpruned structural enumeration. Exponential in the
/// number of predicates along a path; for small schemes only.
pub fn enumerate_all_paths(scheme: &Scheme, bound: usize) -> Vec<(EnumeratedPath, Vec<Formula>)> {
    let mut results = Vec::new();
    let mut stack = vec![(scheme.initial().clone(), initial_slots(scheme), Vec::new(), Vec::new())];
    while let Some((node_id, slots, steps, pi)) = stack.pop() {
        match (scheme.node(&node_id), scheme.successors(&node_id)) {
            (Node::Terminal { .. }, _) => {
                results.push((
                    EnumeratedPath { steps, terminal: Some(node_id), truncated: false },
                    pi,
                ));
            }
            _ if steps.len() >= bound => {
                results.push((EnumeratedPath { steps, terminal: None, truncated: true }, pi));
            }
            (Node::Function { register, term }, Successors::Function(to)) => {
                let s: Subst = term.free_vars().iter().map(|&v| (v, slots[&v].clone())).collect();
                let mut slots = slots;
                slots.insert(*register, term.substitute(&s));
                let mut steps = steps;
                steps.push((node_id, None));
                stack.push((to.clone(), slots, steps, pi));
            }
            (Node::Predicate { formula }, Successors::Predicate { on_true, on_false }) => {
                let positive = substituted(formula, &slots);
                for (to, edge, emitted) in
                    [(on_true, true, positive.clone()), (on_false, false, Formula::not(positive))]
                {
                    let mut steps = steps.clone();
                    steps.push((node_id.clone(), Some(edge)));
                    let mut pi = pi.clone();
                    pi.push(emitted);
                    stack.push((to.clone(), slots.clone(), steps, pi));
                }
            }
            _ => unreachable!("validated scheme"),
        }
    }
    results
}

/// The interpreter's trace as a `(node, edge)` list, unrolled to exactly
/// `len` steps for divergent runs.
pub fn interpreter_steps(
    outcome: &exec::Outcome,
    len: usize,
) -> (Vec<(NodeId, Option<bool>)>, Option<NodeId>) {
    match outcome {
        exec::Outcome::Output { steps, terminal, .. } => {
            (steps.iter().map(|s| (s.node.clone(), s.edge)).collect(), Some(terminal.clone()))
        }
        exec::Outcome::Diverges { prefix, lasso } => {
            let mut out: Vec<(NodeId, Option<bool>)> =
                prefix.iter().map(|s| (s.node.clone(), s.edge)).collect();
            let mut i = 0;
            while out.len() < len {
                let s = &lasso[i % lasso.len()];
                out.push((s.node.clone(), s.edge));
                i += 1;
            }
            (out, None)
        }
    }
}

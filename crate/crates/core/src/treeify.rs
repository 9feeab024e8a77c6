//! Unrolling a scheme into a tree and pruning it against a class into a
//! strongly equivalent finite tree-scheme.
//!
//! The unrolled tree has one node per path-from-the-root of the scheme, so
//! its complete paths correspond one-to-one, label-isomorphically, to the
//! complete paths of the scheme. Pruning keeps a branch only while its
//! accumulated path condition is satisfiable in the target class; a
//! predicate node left with a single surviving edge gets a new terminal
//! child labeled 0 on the missing side. Expansion is breadth-first, so one
//! infinite branch cannot starve finite ones.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use thiserror::Error;

use crate::formula::Formula;
use crate::oracle::{BranchWitnesses, OracleError, PathSatOracle};
use crate::scheme::{Node, NodeId, Scheme, SchemeParts, SchemeViolations, TreeScheme};
use crate::signature::Signature;
use crate::sym::{symbolic_step, SymbolicState};

/// Accumulated path condition of a branch, shared structurally between a
/// node and its children (a child extends its parent by at most one
/// formula).
#[derive(Debug, Clone, Default)]
pub struct PiPrefix(Option<Arc<PiCell>>);

#[derive(Debug)]
struct PiCell {
    formula: Formula,
    parent: PiPrefix,
}

impl Drop for PiPrefix {
    /// Path conditions grow one cell per predicate along a branch; unlink
    /// iteratively so dropping a deep chain does not recurse.
    fn drop(&mut self) {
        let mut current = self.0.take();
        while let Some(arc) = current {
            match Arc::try_unwrap(arc) {
                Ok(mut cell) => current = cell.parent.0.take(),
                Err(_) => break,
            }
        }
    }
}

impl PiPrefix {
    pub fn empty() -> Self {
        PiPrefix(None)
    }

    pub fn push(&self, formula: Formula) -> Self {
        PiPrefix(Some(Arc::new(PiCell { formula, parent: self.clone() })))
    }

    pub fn len(&self) -> usize {
        let mut n = 0;
        let mut cur = &self.0;
        while let Some(cell) = cur {
            n += 1;
            cur = &cell.parent.0;
        }
        n
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    /// Formulas in path order (root first).
    pub fn to_vec(&self) -> Vec<Formula> {
        let mut out = Vec::new();
        let mut cur = &self.0;
        while let Some(cell) = cur {
            out.push(cell.formula.clone());
            cur = &cell.parent.0;
        }
        out.reverse();
        out
    }
}

/// Status of a node of the unrolled tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    /// Materialized, not yet expanded.
    Open,
    /// Children generated (or none to generate: a terminal leaf).
    Expanded,
    /// Branch condition unsatisfiable; removed from the result.
    Pruned,
    /// Terminal added by the completion rule for a missing edge.
    CompletionTerminal,
}

/// One node of the unrolled tree: a scheme node reached along a particular
/// path, with the symbolic register state and path condition of that path.
#[derive(Debug, Clone)]
pub struct UnrollNode {
    pub id: usize,
    /// Parent unroll node and the edge label leading here.
    pub parent: Option<(usize, Option<bool>)>,
    pub scheme_node: NodeId,
    pub state: SymbolicState,
    pub pi: PiPrefix,
    pub depth: usize,
    pub status: NodeStatus,
}

/// Lazy breadth-first stream of the unrolled tree of a scheme. Infinite for
/// cyclic schemes; the consumer bounds it.
pub struct Unroller<'a> {
    scheme: &'a Scheme,
    queue: VecDeque<UnrollNode>,
    next_id: usize,
}

pub fn unroll(scheme: &Scheme) -> Unroller<'_> {
    let root = UnrollNode {
        id: 0,
        parent: None,
        scheme_node: scheme.initial().clone(),
        state: SymbolicState::initial(scheme.arity(), &scheme.used_registers()),
        pi: PiPrefix::empty(),
        depth: 0,
        status: NodeStatus::Open,
    };
    Unroller { scheme, queue: VecDeque::from([root]), next_id: 1 }
}

impl Iterator for Unroller<'_> {
    type Item = UnrollNode;

    fn next(&mut self) -> Option<UnrollNode> {
        let mut node = self.queue.pop_front()?;
        node.status = NodeStatus::Expanded;
        let mut enqueue =
            |scheme: &Scheme, target: &NodeId, edge: Option<bool>, from: &UnrollNode| {
                let (state, emitted) =
                    symbolic_step(&from.state, scheme.node(&from.scheme_node), edge)
                        .expect("non-terminal node of a validated scheme");
                let pi = match emitted {
                    Some(f) => from.pi.push(f),
                    None => from.pi.clone(),
                };
                let child = UnrollNode {
                    id: self.next_id,
                    parent: Some((from.id, edge)),
                    scheme_node: target.clone(),
                    state,
                    pi,
                    depth: from.depth + 1,
                    status: NodeStatus::Open,
                };
                self.next_id += 1;
                self.queue.push_back(child);
            };
        match self.scheme.successors(&node.scheme_node) {
            crate::scheme::Successors::Terminal => {}
            crate::scheme::Successors::Function(to) => enqueue(self.scheme, to, None, &node),
            crate::scheme::Successors::Predicate { on_true, on_false } => {
                enqueue(self.scheme, on_true, Some(true), &node);
                enqueue(self.scheme, on_false, Some(false), &node);
            }
        }
        // Yielded nodes have had their children enqueued.
        Some(node)
    }
}

/// Expansion limits for [`treeify`].
#[derive(Debug, Clone, Copy)]
pub struct TreeifyLimits {
    pub max_nodes: usize,
    pub max_depth: usize,
}

impl Default for TreeifyLimits {
    fn default() -> Self {
        TreeifyLimits { max_nodes: 100_000, max_depth: 10_000 }
    }
}

/// Why treeification did not produce a tree. A limits failure is a
/// diagnostic, not a verdict: the scheme may be non-total relative to the
/// class, the class non-compact, or the limits too small.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeifyFailure {
    LimitsExceeded {
        open_branches: usize,
        deepest_depth: usize,
        /// Path condition of the deepest open branch.
        deepest_pi: Vec<Formula>,
    },
    /// Family-oracle branches whose satisfiability stayed unknown reached
    /// leaves; the result would not be certified strongly equivalent.
    UnresolvedBranches { count: usize },
}

impl fmt::Display for TreeifyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeifyFailure::LimitsExceeded { open_branches, deepest_depth, .. } => write!(
                f,
                "limits exceeded with {open_branches} open branches (deepest at depth {deepest_depth})"
            ),
            TreeifyFailure::UnresolvedBranches { count } => {
                write!(f, "{count} unresolved branches (family oracle answered Unknown)")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum TreeifyError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("scheme signature '{scheme_sig}' is not interpreted by structure '{structure}'")]
    IncompatibleSignature { scheme_sig: String, structure: String },
    #[error("treeify produced an invalid scheme: {0}")]
    Internal(SchemeViolations),
}

/// Result of treeification plus expansion statistics.
#[derive(Debug)]
pub struct TreeifyReport {
    pub result: Result<TreeScheme, TreeifyFailure>,
    /// Unroll nodes materialized, including the heads of pruned branches.
    pub nodes_explored: usize,
    pub leaves: usize,
    pub max_depth: usize,
    pub unresolved_branches: usize,
    /// Branch heads whose path condition was unsatisfiable in the class.
    pub pruned_branches: usize,
    /// Ids (in the result tree) of terminals added by the completion rule.
    pub completions: Vec<NodeId>,
}

impl TreeifyReport {
    /// The report file rendering: key:value lines.
    pub fn render(&self) -> String {
        let result = match &self.result {
            Ok(_) => "success".to_string(),
            Err(failure) => format!("failure ({failure})"),
        };
        format!(
            "result: {result}\nnodes_explored: {}\nleaves: {}\nmax_depth: {}\nunresolved: {}\n",
            self.nodes_explored, self.leaves, self.max_depth, self.unresolved_branches
        )
    }
}

struct BuildNode {
    /// `None` for completion terminals, which have no scheme counterpart.
    scheme_node: Option<NodeId>,
    label: Node,
    state: Option<SymbolicState>,
    witnesses: Option<Arc<BranchWitnesses>>,
    unresolved: bool,
    pi: PiPrefix,
    depth: usize,
    children: Vec<(usize, Option<bool>)>,
    status: NodeStatus,
}

impl BuildNode {
    fn kept(&self) -> bool {
        self.status != NodeStatus::Pruned
    }

    fn is_leaf(&self) -> bool {
        self.kept() && matches!(self.label, Node::Terminal { .. })
    }
}

/// Unroll `scheme` breadth-first, keeping each branch only while the oracle
/// finds its path condition satisfiable, and completing predicate nodes that
/// lost one side with a terminal labeled 0.
pub fn treeify(
    scheme: &Scheme,
    oracle: &PathSatOracle,
    limits: TreeifyLimits,
) -> Result<TreeifyReport, TreeifyError> {
    for structure in oracle.structures() {
        if !scheme.signature().sub_signature_of(structure.signature()) {
            return Err(TreeifyError::IncompatibleSignature {
                scheme_sig: scheme.signature().name().to_string(),
                structure: structure.name().to_string(),
            });
        }
    }

    let mut arena: Vec<BuildNode> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();

    let root_witnesses = Arc::new(oracle.root(scheme.arity())?);
    let root_unresolved = !oracle.verdict(&root_witnesses).is_sat();
    arena.push(BuildNode {
        scheme_node: Some(scheme.initial().clone()),
        label: scheme.node(scheme.initial()).clone(),
        state: Some(SymbolicState::initial(scheme.arity(), &scheme.used_registers())),
        witnesses: Some(root_witnesses),
        unresolved: root_unresolved,
        pi: PiPrefix::empty(),
        depth: 0,
        children: Vec::new(),
        status: NodeStatus::Open,
    });
    queue.push_back(0);

    let mut limits_hit = false;
    while let Some(index) = queue.pop_front() {
        let (scheme_node, depth) = {
            let n = &arena[index];
            (n.scheme_node.clone().expect("queued nodes come from the scheme"), n.depth)
        };
        let successors = scheme.successors(&scheme_node).clone();
        if matches!(successors, crate::scheme::Successors::Terminal) {
            arena[index].status = NodeStatus::Expanded;
            continue;
        }
        if arena.len() >= limits.max_nodes || depth >= limits.max_depth {
            queue.push_front(index);
            limits_hit = true;
            break;
        }
        arena[index].status = NodeStatus::Expanded;
        match successors {
            crate::scheme::Successors::Terminal => unreachable!(),
            crate::scheme::Successors::Function(to) => {
                let parent = &arena[index];
                let (state, emitted) =
                    symbolic_step(parent.state.as_ref().unwrap(), &parent.label, None)
                        .expect("function node");
                debug_assert!(emitted.is_none());
                let child = BuildNode {
                    scheme_node: Some(to.clone()),
                    label: scheme.node(&to).clone(),
                    state: Some(state),
                    witnesses: parent.witnesses.clone(),
                    unresolved: parent.unresolved,
                    pi: parent.pi.clone(),
                    depth: depth + 1,
                    children: Vec::new(),
                    status: NodeStatus::Open,
                };
                let child_index = arena.len();
                arena.push(child);
                arena[index].children.push((child_index, None));
                queue.push_back(child_index);
            }
            crate::scheme::Successors::Predicate { on_true, on_false } => {
                let mut kept: Vec<(bool, NodeId)> = Vec::new();
                for (branch, target) in [(true, on_true), (false, on_false)] {
                    let parent = &arena[index];
                    let (state, emitted) =
                        symbolic_step(parent.state.as_ref().unwrap(), &parent.label, Some(branch))
                            .expect("predicate node");
                    let formula = emitted.expect("predicate emits a formula");
                    debug_assert!(
                        formula.free_vars().iter().all(|&v| v < scheme.arity()),
                        "path-condition formulas range over the input variables"
                    );
                    let witnesses =
                        Arc::new(oracle.refine(parent.witnesses.as_ref().unwrap(), &formula)?);
                    let verdict = oracle.verdict(&witnesses);
                    let pruned = oracle.is_exhaustive() && !verdict.is_sat();
                    let unresolved = !pruned && !verdict.is_sat();
                    let child = BuildNode {
                        scheme_node: Some(target.clone()),
                        label: scheme.node(&target).clone(),
                        state: Some(state),
                        witnesses: Some(witnesses),
                        unresolved,
                        pi: arena[index].pi.push(formula),
                        depth: depth + 1,
                        children: Vec::new(),
                        status: if pruned { NodeStatus::Pruned } else { NodeStatus::Open },
                    };
                    let child_index = arena.len();
                    arena.push(child);
                    if pruned {
                        // Materialized for accounting only: no expansion, no
                        // edge in the result tree.
                        continue;
                    }
                    arena[index].children.push((child_index, Some(branch)));
                    queue.push_back(child_index);
                    kept.push((branch, target.clone()));
                }
                match kept.len() {
                    2 => {}
                    1 => {
                        // Completion rule: a new terminal labeled 0 on the
                        // missing edge.
                        let missing = !kept[0].0;
                        let child = BuildNode {
                            scheme_node: None,
                            label: Node::Terminal { value: BigUint::from(0u32) },
                            state: None,
                            witnesses: None,
                            unresolved: false,
                            pi: arena[index].pi.clone(),
                            depth: depth + 1,
                            children: Vec::new(),
                            status: NodeStatus::CompletionTerminal,
                        };
                        let child_index = arena.len();
                        arena.push(child);
                        arena[index].children.push((child_index, Some(missing)));
                    }
                    _ => unreachable!(
                        "a satisfiable branch stays satisfiable on one side of every predicate"
                    ),
                }
            }
        }
    }

    let nodes_explored = arena.len();
    let max_depth = arena.iter().map(|n| n.depth).max().unwrap_or(0);
    let leaves = arena.iter().filter(|n| n.is_leaf()).count();
    let pruned_branches = arena.iter().filter(|n| !n.kept()).count();
    let unresolved_branches = arena.iter().filter(|n| n.is_leaf() && n.unresolved).count();

    // Result-tree ids number the kept nodes in creation (breadth-first)
    // order; pruned nodes have no id.
    let mut tree_ids: Vec<Option<NodeId>> = Vec::with_capacity(arena.len());
    let mut next = 0usize;
    for node in &arena {
        if node.kept() {
            tree_ids.push(Some(format!("t{next:06}")));
            next += 1;
        } else {
            tree_ids.push(None);
        }
    }
    let id_of = |index: usize| tree_ids[index].clone().expect("kept node has an id");
    let completions: Vec<NodeId> = arena
        .iter()
        .enumerate()
        .filter(|(_, n)| n.status == NodeStatus::CompletionTerminal)
        .map(|(i, _)| id_of(i))
        .collect();

    let result = if limits_hit {
        let open: Vec<&usize> = queue.iter().collect();
        let deepest =
            open.iter().max_by_key(|&&&i| arena[i].depth).expect("limits hit with an open branch");
        Err(TreeifyFailure::LimitsExceeded {
            open_branches: open.len(),
            deepest_depth: arena[**deepest].depth,
            deepest_pi: arena[**deepest].pi.to_vec(),
        })
    } else if unresolved_branches > 0 {
        Err(TreeifyFailure::UnresolvedBranches { count: unresolved_branches })
    } else {
        let nodes = arena
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kept())
            .map(|(i, n)| (id_of(i), n.label.clone()))
            .collect();
        let edges = arena
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kept())
            .flat_map(|(i, n)| n.children.iter().map(move |(c, edge)| (id_of(i), id_of(*c), *edge)))
            .collect();
        let tree = Scheme::from_parts(SchemeParts {
            name: format!("{}_tree", scheme.name()),
            arity: scheme.arity(),
            signature: scheme.signature().clone(),
            nodes,
            edges,
            initial: Some(id_of(0)),
        })
        .map_err(TreeifyError::Internal)?;
        Ok(TreeScheme::try_new(tree).expect("breadth-first unrolling builds a tree"))
    };

    Ok(TreeifyReport {
        result,
        nodes_explored,
        leaves,
        max_depth,
        unresolved_branches,
        pruned_branches,
        completions,
    })
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CounterexampleError {
    #[error("prefix length must be at least 1")]
    EmptyPrefix,
    #[error("formula {index} has free variable x{var}, input arity is {arity}")]
    FreeVariableOutOfRange { index: usize, var: usize, arity: usize },
    #[error("formula {index} is not well-formed over '{signature}': {message}")]
    BadFormula { index: usize, signature: String, message: String },
}

/// The finite prefix of the chain scheme witnessing non-compactness: the
/// predicates `formula_at(1) .. formula_at(prefix_len)` linked by their
/// 1-edges, each 0-edge going to its own terminal labeled 0, and the last
/// 1-edge going to a terminal labeled 0 marking the truncation. Over a class
/// where the whole formula family is finitely satisfiable but unsatisfiable,
/// deeper prefixes keep more satisfiable paths, so no fixed finite tree is
/// strongly equivalent to every prefix.
pub fn counterexample_scheme(
    formula_at: impl Fn(usize) -> Formula,
    prefix_len: usize,
    arity: usize,
    signature: Arc<Signature>,
    name: impl Into<String>,
) -> Result<Scheme, CounterexampleError> {
    if prefix_len == 0 {
        return Err(CounterexampleError::EmptyPrefix);
    }
    let mut nodes = std::collections::BTreeMap::new();
    let mut edges = Vec::new();
    let pid = |i: usize| format!("p{i:06}");
    let zid = |i: usize| format!("z{i:06}");
    for i in 1..=prefix_len {
        let formula = formula_at(i);
        if let Some(&v) = formula.free_vars().iter().find(|&&v| v >= arity) {
            return Err(CounterexampleError::FreeVariableOutOfRange { index: i, var: v, arity });
        }
        if let Err(message) = formula.check(&signature) {
            return Err(CounterexampleError::BadFormula {
                index: i,
                signature: signature.name().to_string(),
                message,
            });
        }
        nodes.insert(pid(i), Node::Predicate { formula });
        nodes.insert(zid(i), Node::Terminal { value: BigUint::from(0u32) });
        edges.push((pid(i), zid(i), Some(false)));
        if i < prefix_len {
            edges.push((pid(i), pid(i + 1), Some(true)));
        }
    }
    nodes.insert("zend".to_string(), Node::Terminal { value: BigUint::from(0u32) });
    edges.push((pid(prefix_len), "zend".to_string(), Some(true)));

    Scheme::from_parts(SchemeParts {
        name: name.into(),
        arity,
        signature,
        nodes,
        edges,
        initial: Some(pid(1)),
    })
    .map_err(|v| unreachable!("chain construction is well-formed: {v}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{distinct_elements_formula, CyclicFamily};
    use crate::scheme::parse_scheme;
    use crate::structure::{cyclic_group, cyclic_signature, Structure};

    fn resolve(_: &str) -> Result<Arc<Signature>, String> {
        Ok(cyclic_signature())
    }

    fn z(k: usize) -> Structure {
        cyclic_group(k).unwrap()
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

    #[test]
    fn unroll_terminal_only_scheme() {
        let text = "\
scheme tiny arity 1 signature cyclic.sig
node t terminal 0
initial t
";
        let s = parse_scheme(text, resolve).unwrap();
        let nodes: Vec<UnrollNode> = unroll(&s).collect();
        assert_eq!(nodes.len(), 1);
        assert_eq!(nodes[0].depth, 0);
        assert!(nodes[0].pi.is_empty());
    }

    #[test]
    fn unroll_self_loop_depths() {
        let text = "\
scheme selfloop arity 1 signature cyclic.sig
node p predicate (= x0 x0)
node t terminal 0
edge p -> p label 1
edge p -> t label 0
initial p
";
        let s = parse_scheme(text, resolve).unwrap();
        let depths: Vec<usize> = unroll(&s).take(7).map(|n| n.depth).collect();
        assert_eq!(depths, vec![0, 1, 1, 2, 2, 3, 3]);
    }

    #[test]
    fn unroll_diamond_counts_root_paths() {
        // Predicate with both edges into the same function node: the DAG has
        // 3 nodes but 5 paths from the root, and the unrolled tree has one
        // node per root path.
        let text = "\
scheme diamond arity 1 signature cyclic.sig
node q predicate (= x0 zero)
node f function x0 <= x0
node t terminal 0
edge q -> f label 1
edge q -> f label 0
edge f -> t
initial q
";
        let s = parse_scheme(text, resolve).unwrap();
        let nodes: Vec<UnrollNode> = unroll(&s).collect();
        assert_eq!(nodes.len(), 5);
    }

    #[test]
    fn treeify_guarded_loop_succeeds() {
        let s = parse_scheme(GUARDED, resolve).unwrap();
        let oracle = PathSatOracle::for_class(vec![z(2), z(3)]).unwrap();
        let report = treeify(&s, &oracle, TreeifyLimits::default()).unwrap();
        let tree = report.result.expect("guarded loop is total over {Z2, Z3}");
        let class = tree.classify();
        assert!(class.is_tree && class.is_finite_tree);
        assert_eq!(report.unresolved_branches, 0);
        assert_eq!(report.nodes_explored, tree.node_count() + report.pruned_branches);
        // The path condition of each surviving leaf is satisfiable, so the
        // deepest loop unrolling stops at x0 + 2*x1 over Z3.
        assert!(report.max_depth <= 12);
    }

    #[test]
    fn contradiction_branch_gets_completion_terminal() {
        let text = "\
scheme contra arity 1 signature cyclic.sig
node p predicate (not (= x0 x0))
node a terminal 7
node b terminal 1
edge p -> a label 1
edge p -> b label 0
initial p
";
        let s = parse_scheme(text, resolve).unwrap();
        let oracle = PathSatOracle::for_class(vec![z(2), z(3)]).unwrap();
        let report = treeify(&s, &oracle, TreeifyLimits::default()).unwrap();
        let tree = report.result.unwrap();
        assert_eq!(report.completions.len(), 1);
        let completion = &report.completions[0];
        // The completion terminal hangs off the root's 1-edge and is labeled 0.
        match tree.successors(tree.initial()) {
            crate::scheme::Successors::Predicate { on_true, .. } => {
                assert_eq!(on_true, completion);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(tree.node(completion), &Node::Terminal { value: 0u32.into() });
    }

    #[test]
    fn self_loop_fails_at_depth_limit() {
        let text = "\
scheme selfloop arity 1 signature cyclic.sig
node p predicate (= x0 x0)
node t terminal 0
edge p -> p label 1
edge p -> t label 0
initial p
";
        let s = parse_scheme(text, resolve).unwrap();
        let oracle = PathSatOracle::for_class(vec![z(2)]).unwrap();
        let limits = TreeifyLimits { max_nodes: 100_000, max_depth: 40 };
        let report = treeify(&s, &oracle, limits).unwrap();
        match report.result {
            Err(TreeifyFailure::LimitsExceeded { deepest_depth, deepest_pi, .. }) => {
                assert_eq!(deepest_depth, 40);
                assert!(!deepest_pi.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn treeify_preserves_computation_schemes() {
        let text = "\
scheme comp arity 2 signature cyclic.sig
node q predicate (= x0 x1)
node g function x0 <= (add x0 x1)
node t0 terminal 0
node t1 terminal 1
edge q -> g label 1
edge q -> t0 label 0
edge g -> t1
initial q
";
        let s = parse_scheme(text, resolve).unwrap();
        assert!(s.classify().is_computation);
        let oracle = PathSatOracle::for_class(vec![z(2), z(3)]).unwrap();
        let report = treeify(&s, &oracle, TreeifyLimits::default()).unwrap();
        let tree = report.result.unwrap();
        let class = tree.classify();
        assert!(class.is_computation && class.is_finite_tree);
    }

    #[test]
    fn family_oracle_keeps_unknown_branches_and_reports_them() {
        let text = "\
scheme contra arity 1 signature cyclic.sig
node p predicate (not (= x0 x0))
node a terminal 7
node b terminal 1
edge p -> a label 1
edge p -> b label 0
initial p
";
        let s = parse_scheme(text, resolve).unwrap();
        let oracle = PathSatOracle::for_family(&CyclicFamily, 3).unwrap();
        let report = treeify(&s, &oracle, TreeifyLimits::default()).unwrap();
        // The 1-branch is a contradiction, but the family oracle cannot rule
        // it out, so the branch reaches its terminal unresolved.
        assert_eq!(report.unresolved_branches, 1);
        assert!(matches!(report.result, Err(TreeifyFailure::UnresolvedBranches { count: 1 })));
    }

    #[test]
    fn counterexample_chain_shape() {
        let chain = counterexample_scheme(
            |k| distinct_elements_formula(k, 1),
            1,
            1,
            cyclic_signature(),
            "chain",
        )
        .unwrap();
        // One predicate and two terminals.
        assert_eq!(chain.node_count(), 3);
        assert!(chain.classify().is_tree);

        assert_eq!(
            counterexample_scheme(
                |k| distinct_elements_formula(k, 1),
                0,
                1,
                cyclic_signature(),
                "chain"
            )
            .unwrap_err(),
            CounterexampleError::EmptyPrefix
        );

        let err = counterexample_scheme(
            |_| Formula::equal(crate::term::Term::var(3), crate::term::Term::var(0)),
            2,
            1,
            cyclic_signature(),
            "bad",
        )
        .unwrap_err();
        assert!(matches!(err, CounterexampleError::FreeVariableOutOfRange { var: 3, .. }));
    }

    #[test]
    fn chain_leaf_counts_grow_with_class_bound() {
        // Over K_M = {Z_1..Z_M} the chain of length M keeps one more leaf
        // per extra structure.
        let mut previous = None;
        for m in 2..=5 {
            let chain = counterexample_scheme(
                |k| distinct_elements_formula(k, 1),
                m,
                1,
                cyclic_signature(),
                format!("chain{m}"),
            )
            .unwrap();
            let class: Vec<Structure> = (1..=m).map(z).collect();
            let oracle = PathSatOracle::for_class(class).unwrap();
            let report = treeify(&chain, &oracle, TreeifyLimits::default()).unwrap();
            report.result.as_ref().expect("chain is a finite tree, treeify succeeds");
            assert_eq!(report.leaves, m + 1, "leaves over K_{m}");
            if let Some(p) = previous {
                assert!(report.leaves > p);
            }
            previous = Some(report.leaves);
        }
    }

    #[test]
    fn output_paths_correspond_to_scheme_paths() {
        // Every complete path of the result tree, except the ones ending at
        // completion terminals, replays in the original scheme with
        // identical labels and edges.
        let s = parse_scheme(GUARDED, resolve).unwrap();
        let oracle = PathSatOracle::for_class(vec![z(2), z(3)]).unwrap();
        let report = treeify(&s, &oracle, TreeifyLimits::default()).unwrap();
        let tree = report.result.unwrap();

        let mut stack = vec![(tree.initial().clone(), s.initial().clone())];
        let mut checked = 0usize;
        while let Some((tree_node, scheme_node)) = stack.pop() {
            if report.completions.contains(&tree_node) {
                continue;
            }
            assert_eq!(tree.node(&tree_node), s.node(&scheme_node), "label at {tree_node}");
            checked += 1;
            match (tree.successors(&tree_node), s.successors(&scheme_node)) {
                (crate::scheme::Successors::Terminal, crate::scheme::Successors::Terminal) => {}
                (
                    crate::scheme::Successors::Function(tn),
                    crate::scheme::Successors::Function(sn),
                ) => stack.push((tn.clone(), sn.clone())),
                (
                    crate::scheme::Successors::Predicate { on_true: tt, on_false: tf },
                    crate::scheme::Successors::Predicate { on_true: st, on_false: sf },
                ) => {
                    stack.push((tt.clone(), st.clone()));
                    stack.push((tf.clone(), sf.clone()));
                }
                other => panic!("successor shape mismatch at {tree_node}: {other:?}"),
            }
        }
        assert_eq!(checked + report.completions.len(), tree.node_count());
    }

    #[test]
    fn chain_over_compact_class_stabilizes() {
        // Over {Z3} the formulas "at least k distinct" are false from k = 4
        // on, so every prefix of length >= 4 treeifies to the same tree.
        let tree_for = |len: usize| {
            let chain = counterexample_scheme(
                |k| distinct_elements_formula(k, 1),
                len,
                1,
                cyclic_signature(),
                "chain",
            )
            .unwrap();
            let oracle = PathSatOracle::for_class(vec![z(3)]).unwrap();
            let report = treeify(&chain, &oracle, TreeifyLimits::default()).unwrap();
            report.result.unwrap().into_scheme()
        };
        let four = tree_for(4);
        for len in 5..=8 {
            assert_eq!(tree_for(len), four, "prefix {len}");
        }
        // The length-3 prefix differs: its truncation terminal survives
        // where longer prefixes carry a fourth predicate.
        assert_ne!(tree_for(3), four);
    }
}

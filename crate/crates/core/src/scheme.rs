//! The graph model of program schemes: function, predicate and terminal
//! nodes with an initial node, plus validation, classification and the
//! scheme text format.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use num_bigint::BigUint;
use thiserror::Error;

use crate::formula::{parse_formula, parse_term, Formula};
use crate::signature::{content_lines, ParseError, Signature};
use crate::term::Term;

pub type NodeId = String;

/// A scheme node label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    /// `x_register <= term`: update one register, follow the unlabeled edge.
    Function { register: usize, term: Term },
    /// Branch on a formula: edge 1 if true, edge 0 if false.
    Predicate { formula: Formula },
    /// Emit a number and stop.
    Terminal { value: BigUint },
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Function { register, term } => write!(f, "function x{register} <= {term}"),
            Node::Predicate { formula } => write!(f, "predicate {formula}"),
            Node::Terminal { value } => write!(f, "terminal {value}"),
        }
    }
}

/// Canonical outgoing edges of a validated node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Successors {
    Function(NodeId),
    Predicate { on_true: NodeId, on_false: NodeId },
    Terminal,
}

/// One well-formedness violation, naming the offending node where one exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub node: Option<NodeId>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Some(n) => write!(f, "node {n}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub struct SchemeViolations {
    pub violations: Vec<Violation>,
}

impl fmt::Display for SchemeViolations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Unvalidated scheme pieces, as read from a document or built in code.
#[derive(Debug, Clone)]
pub struct SchemeParts {
    pub name: String,
    pub arity: usize,
    pub signature: Arc<Signature>,
    pub nodes: BTreeMap<NodeId, Node>,
    /// Raw edges in document order: (from, to, label).
    pub edges: Vec<(NodeId, NodeId, Option<bool>)>,
    pub initial: Option<NodeId>,
}

/// A validated scheme of programs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheme {
    name: String,
    arity: usize,
    signature: Arc<Signature>,
    nodes: BTreeMap<NodeId, Node>,
    succ: BTreeMap<NodeId, Successors>,
    initial: NodeId,
}

/// Classification of a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeClass {
    /// Every function label uses a primitive term and every predicate label
    /// a primitive formula.
    pub is_computation: bool,
    /// The graph is a tree rooted at the initial node.
    pub is_tree: bool,
    /// A tree with finitely many nodes (always equal to `is_tree` here:
    /// schemes in this engine are stored as finite graphs).
    pub is_finite_tree: bool,
}

fn violate(violations: &mut Vec<Violation>, node: Option<&NodeId>, message: String) {
    violations.push(Violation { node: node.cloned(), message });
}

impl Scheme {
    /// Validate raw parts into a scheme, collecting all violations.
    pub fn from_parts(parts: SchemeParts) -> Result<Scheme, SchemeViolations> {
        let mut violations: Vec<Violation> = Vec::new();

        if parts.arity == 0 {
            violate(&mut violations, None, "arity must be at least 1".into());
        }
        if parts.nodes.is_empty() {
            violate(&mut violations, None, "scheme has no nodes".into());
        }

        // Label symbols must come from the signature.
        for (id, node) in &parts.nodes {
            let check = match node {
                Node::Function { term, .. } => term.check(&parts.signature),
                Node::Predicate { formula } => formula.check(&parts.signature),
                Node::Terminal { .. } => Ok(()),
            };
            if let Err(msg) = check {
                violate(&mut violations, Some(id), msg);
            }
        }

        // Group edges by source, rejecting references to unknown nodes.
        let mut outgoing: BTreeMap<&NodeId, Vec<(&NodeId, Option<bool>)>> = BTreeMap::new();
        for (from, to, label) in &parts.edges {
            if !parts.nodes.contains_key(from) {
                violate(&mut violations, Some(from), "edge from unknown node".into());
                continue;
            }
            if !parts.nodes.contains_key(to) {
                violate(&mut violations, Some(from), format!("edge to unknown node '{to}'"));
                continue;
            }
            outgoing.entry(from).or_default().push((to, *label));
        }

        let mut succ: BTreeMap<NodeId, Successors> = BTreeMap::new();
        for (id, node) in &parts.nodes {
            let edges = outgoing.get(id).map(Vec::as_slice).unwrap_or(&[]);
            match node {
                Node::Function { .. } => {
                    if edges.len() != 1 {
                        violate(
                            &mut violations,
                            Some(id),
                            format!("function node must have out-degree 1, has {}", edges.len()),
                        );
                        continue;
                    }
                    let (to, label) = edges[0];
                    if label.is_some() {
                        violate(
                            &mut violations,
                            Some(id),
                            "the edge leaving a function node is not labeled".into(),
                        );
                        continue;
                    }
                    succ.insert(id.clone(), Successors::Function(to.clone()));
                }
                Node::Predicate { .. } => {
                    if edges.len() != 2 {
                        violate(
                            &mut violations,
                            Some(id),
                            format!("predicate node must have out-degree 2, has {}", edges.len()),
                        );
                        continue;
                    }
                    let mut on_true = None;
                    let mut on_false = None;
                    let mut ok = true;
                    for (to, label) in edges {
                        let slot = match label {
                            Some(true) => &mut on_true,
                            Some(false) => &mut on_false,
                            None => {
                                violate(
                                    &mut violations,
                                    Some(id),
                                    "missing edge label on a predicate edge".into(),
                                );
                                ok = false;
                                continue;
                            }
                        };
                        if slot.is_some() {
                            violate(
                                &mut violations,
                                Some(id),
                                format!(
                                    "duplicate edge label {}",
                                    if label == &Some(true) { 1 } else { 0 }
                                ),
                            );
                            ok = false;
                        } else {
                            *slot = Some((*to).clone());
                        }
                    }
                    if let (true, Some(on_true), Some(on_false)) = (ok, on_true, on_false) {
                        succ.insert(id.clone(), Successors::Predicate { on_true, on_false });
                    }
                }
                Node::Terminal { .. } => {
                    if !edges.is_empty() {
                        violate(
                            &mut violations,
                            Some(id),
                            format!("terminal node must have out-degree 0, has {}", edges.len()),
                        );
                        continue;
                    }
                    succ.insert(id.clone(), Successors::Terminal);
                }
            }
        }

        let initial = match &parts.initial {
            Some(id) if parts.nodes.contains_key(id) => Some(id.clone()),
            Some(id) => {
                violate(&mut violations, Some(id), "initial node is not declared".into());
                None
            }
            None => {
                violate(&mut violations, None, "no initial node".into());
                None
            }
        };

        // Reachability from the initial node; unreachable nodes are rejected.
        let clean_so_far = violations.is_empty();
        if let Some(init) = &initial {
            if clean_so_far {
                let mut seen: BTreeSet<&NodeId> = BTreeSet::new();
                let mut queue = VecDeque::from([init]);
                while let Some(id) = queue.pop_front() {
                    if !seen.insert(id) {
                        continue;
                    }
                    match &succ[id] {
                        Successors::Function(to) => queue.push_back(to),
                        Successors::Predicate { on_true, on_false } => {
                            queue.push_back(on_true);
                            queue.push_back(on_false);
                        }
                        Successors::Terminal => {}
                    }
                }
                for id in parts.nodes.keys() {
                    if !seen.contains(id) {
                        violate(
                            &mut violations,
                            Some(id),
                            "unreachable from the initial node".into(),
                        );
                    }
                }
            }
        }

        if !violations.is_empty() {
            return Err(SchemeViolations { violations });
        }
        Ok(Scheme {
            name: parts.name,
            arity: parts.arity,
            signature: parts.signature,
            nodes: parts.nodes,
            succ,
            initial: initial.expect("validated above"),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.signature
    }

    pub fn initial(&self) -> &NodeId {
        &self.initial
    }

    pub fn node(&self, id: &str) -> &Node {
        &self.nodes[id]
    }

    pub fn successors(&self, id: &str) -> &Successors {
        &self.succ[id]
    }

    /// Nodes in id order.
    pub fn nodes(&self) -> impl Iterator<Item = (&NodeId, &Node)> {
        self.nodes.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// All register indices a run of this scheme can touch: every variable
    /// occurring in a label (free variables only; bound variables never read
    /// registers) plus the inputs `x_0..x_{n-1}`.
    pub fn used_registers(&self) -> BTreeSet<usize> {
        let mut used: BTreeSet<usize> = (0..self.arity).collect();
        for node in self.nodes.values() {
            match node {
                Node::Function { register, term } => {
                    used.insert(*register);
                    used.extend(term.free_vars());
                }
                Node::Predicate { formula } => {
                    used.extend(formula.free_vars());
                }
                Node::Terminal { .. } => {}
            }
        }
        used
    }

    pub fn classify(&self) -> SchemeClass {
        let is_computation = self.nodes.values().all(|n| match n {
            Node::Function { term, .. } => term.is_primitive(),
            Node::Predicate { formula } => formula.is_primitive(),
            Node::Terminal { .. } => true,
        });
        // All nodes are reachable from the initial node (validated), so the
        // graph is a tree exactly when the root has in-degree 0 and every
        // other node in-degree 1.
        let mut indegree: BTreeMap<&NodeId, usize> = self.nodes.keys().map(|k| (k, 0)).collect();
        for s in self.succ.values() {
            match s {
                Successors::Function(to) => *indegree.get_mut(to).unwrap() += 1,
                Successors::Predicate { on_true, on_false } => {
                    *indegree.get_mut(on_true).unwrap() += 1;
                    *indegree.get_mut(on_false).unwrap() += 1;
                }
                Successors::Terminal => {}
            }
        }
        let is_tree =
            indegree.iter().all(|(id, d)| if **id == self.initial { *d == 0 } else { *d == 1 });
        SchemeClass { is_computation, is_tree, is_finite_tree: is_tree }
    }
}

impl fmt::Display for Scheme {
    /// The scheme file format. The signature reference is emitted as
    /// `<name>.sig`; loaders resolve it against their root.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "scheme {} arity {} signature {}.sig",
            self.name,
            self.arity,
            self.signature.name()
        )?;
        for (id, node) in &self.nodes {
            writeln!(f, "node {id} {node}")?;
        }
        for (id, s) in &self.succ {
            match s {
                Successors::Function(to) => writeln!(f, "edge {id} -> {to}")?,
                Successors::Predicate { on_true, on_false } => {
                    writeln!(f, "edge {id} -> {on_true} label 1")?;
                    writeln!(f, "edge {id} -> {on_false} label 0")?;
                }
                Successors::Terminal => {}
            }
        }
        writeln!(f, "initial {}", self.initial)
    }
}

/// Parse and validate a scheme document. The `signature <path>` reference in
/// the header is resolved through the given callback.
pub fn parse_scheme(
    text: &str,
    mut resolve_signature: impl FnMut(&str) -> Result<Arc<Signature>, String>,
) -> Result<Scheme, SchemeLoadError> {
    let mut header: Option<(String, usize, Arc<Signature>)> = None;
    let mut nodes: BTreeMap<NodeId, Node> = BTreeMap::new();
    let mut edges: Vec<(NodeId, NodeId, Option<bool>)> = Vec::new();
    let mut initial: Option<NodeId> = None;

    for (line, content) in content_lines(text) {
        let mut words = content.split_whitespace();
        let keyword = words.next().unwrap();
        match keyword {
            "scheme" => {
                if header.is_some() {
                    return Err(ParseError::new(line, "duplicate 'scheme' header").into());
                }
                let rest: Vec<&str> = words.collect();
                if rest.len() != 5 || rest[1] != "arity" || rest[3] != "signature" {
                    return Err(ParseError::new(
                        line,
                        "expected: scheme <name> arity <n> signature <path>",
                    )
                    .into());
                }
                let arity: usize = rest[2]
                    .parse()
                    .map_err(|_| ParseError::new(line, format!("bad arity '{}'", rest[2])))?;
                let sig = resolve_signature(rest[4]).map_err(|e| ParseError::new(line, e))?;
                header = Some((rest[0].to_string(), arity, sig));
            }
            "node" => {
                let sig = match &header {
                    Some((_, _, sig)) => sig.clone(),
                    None => return Err(ParseError::new(line, "node before 'scheme' header").into()),
                };
                let id = words
                    .next()
                    .ok_or_else(|| ParseError::new(line, "expected: node <id> <kind> ..."))?
                    .to_string();
                let kind =
                    words.next().ok_or_else(|| ParseError::new(line, "missing node kind"))?;
                let rest = words.collect::<Vec<&str>>().join(" ");
                let node = match kind {
                    "function" => {
                        let (lhs, term_text) = rest.split_once("<=").ok_or_else(|| {
                            ParseError::new(line, "expected: node <id> function x<j> <= <term>")
                        })?;
                        let lhs = lhs.trim();
                        let register: usize =
                            lhs.strip_prefix('x').and_then(|s| s.parse().ok()).ok_or_else(
                                || ParseError::new(line, format!("bad register '{lhs}'")),
                            )?;
                        let term = parse_term(term_text.trim(), &sig)
                            .map_err(|e| ParseError::new(line, e))?;
                        Node::Function { register, term }
                    }
                    "predicate" => {
                        let formula = parse_formula(rest.trim(), &sig)
                            .map_err(|e| ParseError::new(line, e))?;
                        Node::Predicate { formula }
                    }
                    "terminal" => {
                        let value = rest.trim().parse::<BigUint>().map_err(|_| {
                            ParseError::new(line, format!("bad terminal value '{}'", rest.trim()))
                        })?;
                        Node::Terminal { value }
                    }
                    other => {
                        return Err(
                            ParseError::new(line, format!("unknown node kind '{other}'")).into()
                        )
                    }
                };
                if nodes.insert(id.clone(), node).is_some() {
                    return Err(ParseError::new(line, format!("duplicate node id '{id}'")).into());
                }
            }
            "edge" => {
                let rest: Vec<&str> = words.collect();
                let ok = rest.len() == 3 && rest[1] == "->"
                    || rest.len() == 5 && rest[1] == "->" && rest[3] == "label";
                if !ok {
                    return Err(
                        ParseError::new(line, "expected: edge <from> -> <to> [label 1|0]").into()
                    );
                }
                let label = if rest.len() == 5 {
                    match rest[4] {
                        "1" => Some(true),
                        "0" => Some(false),
                        other => {
                            return Err(
                                ParseError::new(line, format!("bad edge label '{other}'")).into()
                            )
                        }
                    }
                } else {
                    None
                };
                edges.push((rest[0].to_string(), rest[2].to_string(), label));
            }
            "initial" => {
                let rest: Vec<&str> = words.collect();
                if rest.len() != 1 {
                    return Err(ParseError::new(line, "expected: initial <id>").into());
                }
                if initial.is_some() {
                    return Err(ParseError::new(line, "duplicate 'initial' line").into());
                }
                initial = Some(rest[0].to_string());
            }
            other => {
                return Err(ParseError::new(
                    line,
                    format!("unexpected keyword '{other}' in scheme file"),
                )
                .into())
            }
        }
    }

    let (name, arity, signature) =
        header.ok_or_else(|| ParseError::new(1, "missing 'scheme' header"))?;
    Scheme::from_parts(SchemeParts { name, arity, signature, nodes, edges, initial })
        .map_err(SchemeLoadError::Invalid)
}

#[derive(Debug, Error)]
pub enum SchemeLoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid scheme:\n{0}")]
    Invalid(SchemeViolations),
}

/// A scheme whose graph is a tree rooted at the initial node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeScheme(Scheme);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("scheme '{0}' is not a tree")]
pub struct NotATree(pub String);

impl TreeScheme {
    pub fn try_new(scheme: Scheme) -> Result<TreeScheme, NotATree> {
        if scheme.classify().is_tree {
            Ok(TreeScheme(scheme))
        } else {
            Err(NotATree(scheme.name().to_string()))
        }
    }

    pub fn as_scheme(&self) -> &Scheme {
        &self.0
    }

    pub fn into_scheme(self) -> Scheme {
        self.0
    }
}

impl Deref for TreeScheme {
    type Target = Scheme;

    fn deref(&self) -> &Scheme {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::cyclic_signature;

    fn resolve(_: &str) -> Result<Arc<Signature>, String> {
        Ok(cyclic_signature())
    }

    const LOOP: &str = "\
scheme loop arity 2 signature cyclic.sig
node p predicate (= x0 zero)
node f function x0 <= (add x0 x1)
node t terminal 1
edge p -> t label 1
edge p -> f label 0
edge f -> p
initial p
";

    #[test]
    fn parse_and_round_trip() {
        let s = parse_scheme(LOOP, resolve).unwrap();
        assert_eq!(s.arity(), 2);
        assert_eq!(s.initial(), "p");
        let again = parse_scheme(&s.to_string(), resolve).unwrap();
        assert_eq!(s, again);
        // Serialization is deterministic.
        assert_eq!(s.to_string(), again.to_string());
    }

    #[test]
    fn smallest_scheme_is_a_single_terminal() {
        let s = Scheme::from_parts(SchemeParts {
            name: "tiny".into(),
            arity: 1,
            signature: cyclic_signature(),
            nodes: [("t".to_string(), Node::Terminal { value: 0u32.into() })].into(),
            edges: vec![],
            initial: Some("t".into()),
        })
        .unwrap();
        let class = s.classify();
        assert!(class.is_computation && class.is_tree && class.is_finite_tree);
        assert_eq!(s.used_registers(), [0].into());
    }

    #[test]
    fn duplicate_edge_label_rejected() {
        let text = LOOP.replace("edge p -> f label 0", "edge p -> f label 1");
        let err = parse_scheme(&text, resolve).unwrap_err();
        match err {
            SchemeLoadError::Invalid(v) => {
                assert!(
                    v.violations.iter().any(|v| v.message.contains("duplicate edge label")),
                    "{v}"
                );
            }
            other => panic!("expected violations, got {other:?}"),
        }
    }

    #[test]
    fn function_out_degree_enforced() {
        let text = format!("{LOOP}edge f -> t\n");
        let err = parse_scheme(&text, resolve).unwrap_err();
        match err {
            SchemeLoadError::Invalid(v) => {
                assert!(v.violations.iter().any(|v| v.message.contains("out-degree 1")), "{v}");
            }
            other => panic!("expected violations, got {other:?}"),
        }
    }

    #[test]
    fn terminal_with_edge_and_unreachable_rejected() {
        let text = format!("{LOOP}node u terminal 0\nedge t -> u\n");
        let err = parse_scheme(&text, resolve).unwrap_err();
        match err {
            SchemeLoadError::Invalid(v) => {
                assert!(v.violations.iter().any(|v| v.message.contains("out-degree 0")), "{v}");
            }
            other => panic!("expected violations, got {other:?}"),
        }

        let text = format!("{LOOP}node u terminal 0\n");
        let err = parse_scheme(&text, resolve).unwrap_err();
        match err {
            SchemeLoadError::Invalid(v) => {
                assert!(v.violations.iter().any(|v| v.message.contains("unreachable")), "{v}");
            }
            other => panic!("expected violations, got {other:?}"),
        }
    }

    #[test]
    fn missing_initial_rejected() {
        let text = LOOP.replace("initial p\n", "");
        let err = parse_scheme(&text, resolve).unwrap_err();
        match err {
            SchemeLoadError::Invalid(v) => {
                assert!(v.violations.iter().any(|v| v.message.contains("no initial")), "{v}");
            }
            other => panic!("expected violations, got {other:?}"),
        }
    }

    #[test]
    fn symbol_not_in_signature_rejected() {
        let text = LOOP.replace("(add x0 x1)", "(mul x0 x1)");
        let err = parse_scheme(&text, resolve).unwrap_err();
        // Caught at term parse time against the signature.
        assert!(matches!(err, SchemeLoadError::Parse(_)));
    }

    #[test]
    fn classify_loop_and_cycles() {
        let s = parse_scheme(LOOP, resolve).unwrap();
        let class = s.classify();
        assert!(!class.is_tree);
        // (= x0 zero) uses a constant argument, not a variable.
        assert!(!class.is_computation);

        let comp = "\
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
        let s = parse_scheme(comp, resolve).unwrap();
        let class = s.classify();
        assert!(class.is_computation && class.is_tree);
    }

    #[test]
    fn used_registers_excludes_bound_variables() {
        let text = "\
scheme q arity 1 signature cyclic.sig
node p predicate (forall x5 (= (add x2 x5) x5))
node a terminal 0
node b terminal 1
edge p -> a label 1
edge p -> b label 0
initial p
";
        let s = parse_scheme(text, resolve).unwrap();
        assert_eq!(s.used_registers(), [0, 2].into());
    }

    #[test]
    fn two_cycle_is_not_a_tree() {
        let text = "\
scheme c arity 1 signature cyclic.sig
node a function x0 <= x0
node b function x0 <= x0
edge a -> b
edge b -> a
initial a
";
        let s = parse_scheme(text, resolve).unwrap();
        assert!(!s.classify().is_tree);
        assert!(TreeScheme::try_new(s).is_err());
    }
}

//! Deterministic DOT export of schemes.

use std::fmt::Write;

use crate::scheme::{Node, Scheme, Successors};

fn escape(label: &str) -> String {
    label.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Render a scheme as a DOT digraph. Nodes are emitted in id order: function
/// nodes as boxes, predicate nodes as diamonds, terminals as double circles.
/// The initial node's label carries the `*` marking. Computation schemes get
/// the graph attribute `comment="computation"`.
pub fn export_dot(scheme: &Scheme) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(scheme.name())).unwrap();
    if scheme.classify().is_computation {
        writeln!(out, "  comment=\"computation\";").unwrap();
    }
    for (id, node) in scheme.nodes() {
        let (shape, text) = match node {
            Node::Function { register, term } => ("box", format!("x{register} <= {term}")),
            Node::Predicate { formula } => ("diamond", formula.to_string()),
            Node::Terminal { value } => ("doublecircle", value.to_string()),
        };
        let text = if id == scheme.initial() { format!("{text} *") } else { text };
        writeln!(out, "  \"{}\" [shape={shape}, label=\"{}\"];", escape(id), escape(&text))
            .unwrap();
    }
    for (id, _) in scheme.nodes() {
        match scheme.successors(id) {
            Successors::Function(to) => {
                writeln!(out, "  \"{}\" -> \"{}\";", escape(id), escape(to)).unwrap();
            }
            Successors::Predicate { on_true, on_false } => {
                writeln!(out, "  \"{}\" -> \"{}\" [label=\"1\"];", escape(id), escape(on_true))
                    .unwrap();
                writeln!(out, "  \"{}\" -> \"{}\" [label=\"0\"];", escape(id), escape(on_false))
                    .unwrap();
            }
            Successors::Terminal => {}
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{Node, Scheme, SchemeParts};
    use crate::structure::cyclic_signature;

    #[test]
    fn terminal_only_scheme() {
        let s = Scheme::from_parts(SchemeParts {
            name: "tiny".into(),
            arity: 1,
            signature: cyclic_signature(),
            nodes: [("t".to_string(), Node::Terminal { value: 0u32.into() })].into(),
            edges: vec![],
            initial: Some("t".into()),
        })
        .unwrap();
        let dot = export_dot(&s);
        assert!(dot.contains("\"t\" [shape=doublecircle, label=\"0 *\"];"), "{dot}");
        // A single terminal is a computation scheme.
        assert!(dot.contains("comment=\"computation\";"), "{dot}");
    }

    #[test]
    fn export_is_deterministic() {
        let text = "\
scheme loop arity 2 signature cyclic.sig
node p predicate (= x0 zero)
node f function x0 <= (add x0 x1)
node t terminal 1
edge p -> t label 1
edge p -> f label 0
edge f -> p
initial p
";
        let s = crate::scheme::parse_scheme(text, |_| Ok(cyclic_signature())).unwrap();
        assert_eq!(export_dot(&s), export_dot(&s));
        assert!(!export_dot(&s).contains("comment"));
    }

    #[test]
    fn loop_scheme_matches_golden_file() {
        let text = "\
scheme loop arity 2 signature cyclic.sig
node p predicate (= x0 zero)
node f function x0 <= (add x0 x1)
node t terminal 1
edge p -> t label 1
edge p -> f label 0
edge f -> p
initial p
";
        let s = crate::scheme::parse_scheme(text, |_| Ok(cyclic_signature())).unwrap();
        assert_eq!(export_dot(&s), include_str!("../tests/data/loop.dot"));
    }
}

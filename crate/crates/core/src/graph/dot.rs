use std::collections::HashMap;
use std::fmt::Write;

use super::query::{EdgeRole, NodeRole, Subgraph};

const CENTER_COLOR: &str = "#d62728";
const ENTITY_COLOR: &str = "#1f77b4";
const HIERARCHICAL_COLOR: &str = "#2ca02c";
const NON_HIERARCHICAL_COLOR: &str = "#ff7f0e";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out
}

/// Render a subgraph as a Graphviz digraph.
///
/// Nodes carry `class="center"` or `class="entity"`; edges carry
/// `class="hierarchical"` or `class="non-hierarchical"` with matching colors.
/// Inferred edges are dashed.
pub fn export_dot(sub: &Subgraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "// neighbourhood of \"{}\"", escape(&sub.center));
    let _ = writeln!(
        out,
        "// found={} depth={} facts={} truncated={}",
        sub.found,
        sub.depth_reached,
        sub.facts.len(),
        sub.truncated
    );
    if sub.nodes.is_empty() {
        out.push_str("digraph {}\n");
        return out;
    }

    out.push_str("digraph {\n");
    out.push_str("  node [shape=box, style=filled, fontcolor=white];\n");
    for (i, node) in sub.nodes.iter().enumerate() {
        let (class, color) = match node.role {
            NodeRole::Center => ("center", CENTER_COLOR),
            NodeRole::Entity => ("entity", ENTITY_COLOR),
        };
        let _ = writeln!(
            out,
            "  n{i} [label=\"{}\", class=\"{class}\", fillcolor=\"{color}\"];",
            escape(&node.name)
        );
    }
    let ids: HashMap<&str, usize> = sub
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.name.as_str(), i))
        .collect();
    let index_of = |name: &str| ids[name];
    for fact in &sub.facts {
        let class = if fact.kind.is_hierarchical() {
            "hierarchical"
        } else {
            "non-hierarchical"
        };
        let color = if fact.kind.is_hierarchical() {
            HIERARCHICAL_COLOR
        } else {
            NON_HIERARCHICAL_COLOR
        };
        let style = if fact.role == EdgeRole::Inferred {
            ", style=dashed"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "  n{} -> n{} [label=\"{}\", class=\"{class}\", color=\"{color}\"{style}];",
            index_of(&fact.head),
            index_of(&fact.tail),
            escape(&fact.relation)
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fact::RelationKind;
    use crate::graph::query::{SubgraphFact, SubgraphNode};

    fn sub(facts: Vec<SubgraphFact>) -> Subgraph {
        Subgraph {
            center: "hair dryer".into(),
            found: true,
            depth_reached: 1,
            truncated: false,
            nodes: vec![
                SubgraphNode {
                    name: "hair dryer".into(),
                    role: NodeRole::Center,
                },
                SubgraphNode {
                    name: "drying \"housing\"".into(),
                    role: NodeRole::Entity,
                },
            ],
            facts,
        }
    }

    #[test]
    fn empty_subgraph() {
        let mut s = sub(vec![]);
        s.nodes.clear();
        s.found = false;
        let dot = export_dot(&s);
        assert!(dot.ends_with("digraph {}\n"));
        assert!(dot.lines().take(2).all(|l| l.starts_with("//")));
    }

    #[test]
    fn roles_and_escaping() {
        let dot = export_dot(&sub(vec![SubgraphFact {
            head: "hair dryer".into(),
            relation: "includes".into(),
            tail: "drying \"housing\"".into(),
            kind: RelationKind::Hierarchical,
            inferred: false,
            role: EdgeRole::Hierarchical,
        }]));
        let edges: Vec<&str> = dot.lines().filter(|l| l.contains("->")).collect();
        assert_eq!(edges.len(), 1);
        assert!(edges[0].contains("class=\"hierarchical\""));
        assert!(!edges[0].contains("dashed"));
        assert!(dot.contains("n0 [label=\"hair dryer\", class=\"center\""));
        assert!(dot.contains("label=\"drying \\\"housing\\\"\""));
    }

    #[test]
    fn inferred_edges_are_dashed() {
        let dot = export_dot(&sub(vec![SubgraphFact {
            head: "hair dryer".into(),
            relation: "comprises".into(),
            tail: "drying \"housing\"".into(),
            kind: RelationKind::Hierarchical,
            inferred: true,
            role: EdgeRole::Inferred,
        }]));
        assert!(dot.contains("style=dashed"));
        assert_eq!(dot, export_dot(&sub(vec![SubgraphFact {
            head: "hair dryer".into(),
            relation: "comprises".into(),
            tail: "drying \"housing\"".into(),
            kind: RelationKind::Hierarchical,
            inferred: true,
            role: EdgeRole::Inferred,
        }])));
    }
}

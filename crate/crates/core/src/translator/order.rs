//! Bottom-up ordering of object sets along references.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::model::MdmScheme;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SetOrder {
    /// All sets, referenced ones before those referencing them.
    pub order: Vec<String>,
    /// Strongly connected components in `order`, members in declaration order.
    pub components: Vec<Vec<String>>,
}

impl SetOrder {
    /// Components with more than one set.
    pub fn scc_groups(&self) -> Vec<&[String]> {
        self.components
            .iter()
            .filter(|c| c.len() > 1)
            .map(|c| c.as_slice())
            .collect()
    }

    pub fn position(&self, set: &str) -> Option<usize> {
        self.order.iter().position(|s| s == set)
    }
}

/// Topological order of the condensation of the graph with an edge from
/// each set to every set it references through a function. Ready
/// components are taken by smallest declaration index.
pub fn order_sets(scheme: &MdmScheme) -> SetOrder {
    let mut g = DiGraph::<usize, ()>::with_capacity(scheme.sets.len(), scheme.mappings.len());
    let mut node = HashMap::with_capacity(scheme.sets.len());
    for (i, s) in scheme.sets.iter().enumerate() {
        node.entry(s.name.as_str()).or_insert_with(|| g.add_node(i));
    }
    for m in &scheme.mappings {
        let Some(target) = m.codomain_set() else {
            continue;
        };
        if let (Some(&a), Some(&b)) = (node.get(m.domain.as_str()), node.get(target)) {
            if a != b {
                g.update_edge(a, b, ());
            }
        }
    }

    let sccs = tarjan_scc(&g);
    let mut comp_of = vec![0; g.node_count()];
    let mut members: Vec<Vec<usize>> = Vec::with_capacity(sccs.len());
    for (c, scc) in sccs.iter().enumerate() {
        let mut decl: Vec<usize> = scc.iter().map(|&n| g[n]).collect();
        decl.sort_unstable();
        for &n in scc {
            comp_of[n.index()] = c;
        }
        members.push(decl);
    }

    // pending[c]: number of distinct components c still waits for
    let mut pending = vec![0usize; sccs.len()];
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); sccs.len()];
    let mut seen = std::collections::HashSet::new();
    for e in g.raw_edges() {
        let (from, to) = (comp_of[e.source().index()], comp_of[e.target().index()]);
        if from != to && seen.insert((from, to)) {
            pending[from] += 1;
            dependents[to].push(from);
        }
    }
    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..sccs.len())
        .filter(|&c| pending[c] == 0)
        .map(|c| Reverse((members[c][0], c)))
        .collect();

    let mut out = SetOrder::default();
    while let Some(Reverse((_, c))) = ready.pop() {
        let names: Vec<String> = members[c]
            .iter()
            .map(|&i| scheme.sets[i].name.clone())
            .collect();
        out.order.extend(names.iter().cloned());
        out.components.push(names);
        for &d in &dependents[c] {
            pending[d] -= 1;
            if pending[d] == 0 {
                ready.push(Reverse((members[d][0], d)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_scheme;

    fn order(src: &str) -> SetOrder {
        order_sets(&parse_scheme(src).unwrap())
    }

    #[test]
    fn single_set() {
        let o = order("set A entity;");
        assert_eq!(o.order, ["A"]);
        assert!(o.scc_groups().is_empty());
    }

    #[test]
    fn two_cycle_is_one_component_in_declaration_order() {
        let o = order("set B entity; set A entity; fun f: B -> A; fun g: A -> B;");
        assert_eq!(o.order, ["B", "A"]);
        assert_eq!(o.scc_groups(), vec![&["B".to_string(), "A".to_string()][..]]);
    }

    #[test]
    fn referenced_sets_come_first() {
        let o = order("set A entity; set B entity; set C entity; fun f: A -> C; fun g: B -> A;");
        assert_eq!(o.order, ["C", "A", "B"]);
    }

    #[test]
    fn self_reference_is_not_a_group() {
        let o = order("set A entity; fun p: A -> A;");
        assert_eq!(o.order, ["A"]);
        assert!(o.scc_groups().is_empty());
    }
}

//! Process graph, process cycles and the uni-directional links that start
//! them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::Serialize;

use crate::ast::{is_reverse_pair, ConceptId, Scene};
use crate::dot::{quote, PALETTE};
use crate::forest::{OccId, OccurrenceForest};

/// Upper bound on enumerated simple cycles; the report says when it is hit.
pub const MAX_CYCLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// Source to effector to output along a rule's chain.
    Flow,
    /// A self-loop rule's edge on its own concept.
    SelfLoop,
    /// From a concept nested under a self-looping concept back to it.
    Return,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ProcessEdge {
    pub from: ConceptId,
    pub to: ConceptId,
    pub rule: usize,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProcessGraph {
    pub nodes: Vec<ConceptId>,
    pub edges: Vec<ProcessEdge>,
}

impl ProcessGraph {
    /// Flow edges `S -> ... -> F -> O` for every output and chain, plus a
    /// self edge and return edges for each self-loop rule.
    pub fn build(scene: &Scene, forest: &OccurrenceForest) -> Self {
        let nodes = scene.rule_concepts();
        let mut edges = BTreeSet::new();
        for (ri, rule) in scene.rules.iter().enumerate() {
            if rule.self_loop {
                let c = &rule.outputs[0];
                edges.insert(ProcessEdge {
                    from: c.clone(),
                    to: c.clone(),
                    rule: ri,
                    kind: EdgeKind::SelfLoop,
                });
                for occ in forest.occurrences_of(c) {
                    for &child in &forest.get(occ).children {
                        edges.insert(ProcessEdge {
                            from: forest.get(child).concept.clone(),
                            to: c.clone(),
                            rule: ri,
                            kind: EdgeKind::Return,
                        });
                    }
                }
                continue;
            }
            for output in &rule.outputs {
                for chain in &rule.inputs {
                    let path: Vec<&ConceptId> = chain
                        .elements
                        .iter()
                        .chain(std::iter::once(output))
                        .collect();
                    for w in path.windows(2) {
                        edges.insert(ProcessEdge {
                            from: w[0].clone(),
                            to: w[1].clone(),
                            rule: ri,
                            kind: EdgeKind::Flow,
                        });
                    }
                }
            }
        }
        ProcessGraph {
            nodes,
            edges: edges.into_iter().collect(),
        }
    }

    fn edges_between<'a>(
        &'a self,
        from: &'a ConceptId,
        to: &'a ConceptId,
    ) -> impl Iterator<Item = &'a ProcessEdge> + 'a {
        self.edges
            .iter()
            .filter(move |e| &e.from == from && &e.to == to)
    }

    /// Simple cycles (no repeated concept), each listed once starting from
    /// its lowest-index concept. Self edges are excluded here.
    fn simple_cycles(&self, limit: usize) -> (Vec<Vec<usize>>, bool) {
        let n = self.nodes.len();
        let index: BTreeMap<&ConceptId, usize> =
            self.nodes.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for e in &self.edges {
            if let (Some(&a), Some(&b)) = (index.get(&e.from), index.get(&e.to)) {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
        let mut cycles = Vec::new();
        let mut truncated = false;
        for start in 0..n {
            let mut path = vec![start];
            let mut on_path = vec![false; n];
            on_path[start] = true;
            let mut iters: Vec<Vec<usize>> = vec![adj[start].iter().copied().collect()];
            while let Some(frontier) = iters.last_mut() {
                match frontier.pop() {
                    Some(next) if next == start => {
                        if cycles.len() >= limit {
                            truncated = true;
                            break;
                        }
                        cycles.push(path.clone());
                    }
                    Some(next) if next > start && !on_path[next] => {
                        on_path[next] = true;
                        path.push(next);
                        iters.push(adj[next].iter().copied().collect());
                    }
                    Some(_) => {}
                    None => {
                        iters.pop();
                        if let Some(v) = path.pop() {
                            on_path[v] = false;
                        }
                    }
                }
            }
            if truncated {
                break;
            }
        }
        cycles.sort();
        (cycles, truncated)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Enabler {
    SelfLoop { rule: String },
    ReversePair { first: String, second: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProcessCycle {
    /// Closed walk: the first concept is repeated at the end.
    pub concepts: Vec<ConceptId>,
    /// Rules providing each step of the walk.
    pub steps: Vec<Vec<String>>,
    pub enabled_by: Vec<Enabler>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UniLinkKind {
    /// Between two occurrences of one concept in different trees.
    CrossTree,
    /// From the base of a tree to the concept where a cycle starts.
    Entry,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct UniLink {
    pub kind: UniLinkKind,
    pub from: Vec<ConceptId>,
    pub to: Vec<ConceptId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleReport {
    pub uni_links: Vec<UniLink>,
    pub cycles: Vec<ProcessCycle>,
    /// Set when enumeration stopped at [`MAX_CYCLES`].
    pub truncated: bool,
}

/// Cycles are the simple closed walks of the process graph that use a
/// self-loop rule's edges, or use edges of both rules of a reverse pair.
/// Each cycle is rotated to start at its anchor: the self-looping concept,
/// else the output of one of the pair's rules.
///
/// Uni-links come from forest cross-links (from the non-home occurrence,
/// reached from the nearest cycle anchor above it or else from the top of
/// its tree, over to the home occurrence and up its tree) and from entry
/// paths leading to each anchor's home occurrence.
pub fn extract_cycles(scene: &Scene, forest: &OccurrenceForest) -> CycleReport {
    let graph = ProcessGraph::build(scene, forest);
    let reverse_pairs: Vec<(usize, usize)> = (0..scene.rules.len())
        .flat_map(|a| (a + 1..scene.rules.len()).map(move |b| (a, b)))
        .filter(|&(a, b)| is_reverse_pair(&scene.rules[a], &scene.rules[b]))
        .collect();

    let mut cycles = Vec::new();
    for (ri, rule) in scene.rules.iter().enumerate() {
        if rule.self_loop {
            let c = rule.outputs[0].clone();
            cycles.push(ProcessCycle {
                concepts: vec![c.clone(), c],
                steps: vec![vec![scene.rule_ref(ri)]],
                enabled_by: vec![Enabler::SelfLoop {
                    rule: scene.rule_ref(ri),
                }],
            });
        }
    }

    let (raw, truncated) = graph.simple_cycles(MAX_CYCLES);
    for walk in raw {
        let k = walk.len();
        let step_edges: Vec<Vec<&ProcessEdge>> = (0..k)
            .map(|i| {
                graph
                    .edges_between(&graph.nodes[walk[i]], &graph.nodes[walk[(i + 1) % k]])
                    .collect()
            })
            .collect();

        let mut enabled_by = BTreeSet::new();
        let mut self_loop_owners = BTreeSet::new();
        let mut pair_outputs = BTreeSet::new();
        for edges in &step_edges {
            for e in edges.iter().filter(|e| e.kind == EdgeKind::Return) {
                enabled_by.insert(Enabler::SelfLoop {
                    rule: scene.rule_ref(e.rule),
                });
                self_loop_owners.insert(e.to.clone());
            }
        }
        for &(a, b) in &reverse_pairs {
            let steps_with = |r: usize| -> BTreeSet<usize> {
                (0..k)
                    .filter(|&i| {
                        step_edges[i]
                            .iter()
                            .any(|e| e.rule == r && e.kind == EdgeKind::Flow)
                    })
                    .collect()
            };
            let (sa, sb) = (steps_with(a), steps_with(b));
            let distinct = sa.iter().any(|i| sb.iter().any(|j| i != j));
            if distinct {
                enabled_by.insert(Enabler::ReversePair {
                    first: scene.rule_ref(a),
                    second: scene.rule_ref(b),
                });
                pair_outputs.insert(scene.rules[a].outputs[0].clone());
                pair_outputs.insert(scene.rules[b].outputs[0].clone());
            }
        }
        if enabled_by.is_empty() {
            continue;
        }

        let concept = |i: usize| &graph.nodes[walk[i]];
        let anchor = (0..k)
            .find(|&i| self_loop_owners.contains(concept(i)))
            .or_else(|| (0..k).find(|&i| pair_outputs.contains(concept(i))))
            .unwrap_or(0);
        let order: Vec<usize> = (0..k).map(|i| (anchor + i) % k).collect();
        let mut concepts: Vec<ConceptId> = order.iter().map(|&i| concept(i).clone()).collect();
        concepts.push(concepts[0].clone());
        let steps = order
            .iter()
            .map(|&i| {
                let rules: BTreeSet<usize> = step_edges[i].iter().map(|e| e.rule).collect();
                rules.into_iter().map(|r| scene.rule_ref(r)).collect()
            })
            .collect();
        cycles.push(ProcessCycle {
            concepts,
            steps,
            enabled_by: enabled_by.into_iter().collect(),
        });
    }

    let anchors: Vec<ConceptId> = {
        let mut seen = Vec::new();
        for c in &cycles {
            if !seen.contains(&c.concepts[0]) {
                seen.push(c.concepts[0].clone());
            }
        }
        seen
    };
    let uni_links = uni_links(scene, forest, &anchors);

    CycleReport {
        uni_links,
        cycles,
        truncated,
    }
}

fn uni_links(scene: &Scene, forest: &OccurrenceForest, anchors: &[ConceptId]) -> Vec<UniLink> {
    let is_scene_root = |id: OccId| {
        let occ = forest.get(id);
        occ.parent.is_none() && Some(&occ.concept) == scene.root.as_ref()
    };
    let upward = |id: OccId| -> Vec<ConceptId> {
        let mut path = forest.path_from_root(id);
        path.reverse();
        if path.len() > 1 && is_scene_root(*path.last().unwrap()) {
            path.pop();
        }
        forest.concepts(&path)
    };

    let mut out: Vec<UniLink> = Vec::new();
    let mut push = |link: UniLink| {
        if !out.contains(&link) {
            out.push(link);
        }
    };
    for (x, y) in forest.cross_links() {
        let (from_occ, to_occ) = match (forest.get(x).home, forest.get(y).home) {
            (true, false) => (y, x),
            (false, true) => (x, y),
            _ => (y, x),
        };
        let path = forest.path_from_root(from_occ);
        let start = path[..path.len() - 1]
            .iter()
            .rposition(|&o| anchors.contains(&forest.get(o).concept))
            .unwrap_or(0);
        push(UniLink {
            kind: UniLinkKind::CrossTree,
            from: forest.concepts(&path[start..]),
            to: upward(to_occ),
        });
    }
    for anchor in anchors {
        for occ in forest.occurrences_of(anchor) {
            if forest.get(occ).home && forest.get(occ).parent.is_some() {
                push(UniLink {
                    kind: UniLinkKind::Entry,
                    from: forest.concepts(&forest.path_from_root(occ)),
                    to: vec![anchor.clone()],
                });
            }
        }
    }
    out
}

impl CycleReport {
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("cycle report serializes");
        v.as_object_mut()
            .expect("object")
            .insert("format_version".into(), 1.into());
        v
    }

    /// Human-readable listing.
    pub fn to_text(&self) -> String {
        let join = |cs: &[ConceptId]| cs.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", ");
        let mut out = String::from("uni-directional links:\n");
        for l in &self.uni_links {
            let kind = match l.kind {
                UniLinkKind::CrossTree => "cross-tree",
                UniLinkKind::Entry => "entry",
            };
            let _ = writeln!(out, "  {} to {} ({kind})", join(&l.from), join(&l.to));
        }
        out.push_str("process cycles:\n");
        for c in &self.cycles {
            let enablers: Vec<String> = c
                .enabled_by
                .iter()
                .map(|e| match e {
                    Enabler::SelfLoop { rule } => format!("self-loop {rule}"),
                    Enabler::ReversePair { first, second } => {
                        format!("reverse pair {first}/{second}")
                    }
                })
                .collect();
            let walk = c
                .concepts
                .iter()
                .map(|x| x.as_str())
                .collect::<Vec<_>>()
                .join(" -> ");
            let _ = writeln!(out, "  {walk} [{}]", enablers.join("; "));
        }
        if self.truncated {
            let _ = writeln!(out, "  (stopped after {MAX_CYCLES} cycles)");
        }
        out
    }

    /// Process graph with each cycle's edges drawn in its own color.
    pub fn to_dot(&self, graph: &ProcessGraph) -> String {
        let mut out = String::from("digraph cycles {\n");
        for n in &graph.nodes {
            let _ = writeln!(out, "  {};", quote(n.as_str()));
        }
        let mut seen = BTreeSet::new();
        for e in &graph.edges {
            if seen.insert((&e.from, &e.to)) {
                let _ = writeln!(
                    out,
                    "  {} -> {} [color=gray];",
                    quote(e.from.as_str()),
                    quote(e.to.as_str())
                );
            }
        }
        for (i, c) in self.cycles.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            for w in c.concepts.windows(2) {
                let _ = writeln!(
                    out,
                    "  {} -> {} [color={color}, penwidth=2, label=\"c{}\"];",
                    quote(w[0].as_str()),
                    quote(w[1].as_str()),
                    i + 1
                );
            }
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Chain, Entity, Rule};
    use crate::forest::build_forest;
    use crate::parser::parse_scene;

    fn names(cs: &[ConceptId]) -> Vec<&str> {
        cs.iter().map(|c| c.as_str()).collect()
    }

    fn cooking_report() -> CycleReport {
        let scene = parse_scene(crate::COOKING_SCENE).unwrap();
        extract_cycles(&scene, &build_forest(&scene))
    }

    #[test]
    fn cooking_cycles() {
        let report = cooking_report();
        let walks: Vec<Vec<&str>> = report.cycles.iter().map(|c| names(&c.concepts)).collect();
        for expected in [
            vec!["Pot", "Heat", "Pot"],
            vec!["Hob", "Heat", "Hob"],
            vec!["Pot", "Water", "Egg", "Pot"],
            vec!["Pot", "Heat", "Egg", "Pot"],
        ] {
            assert!(walks.contains(&expected), "{expected:?} not in {walks:?}");
        }
        let hob = report
            .cycles
            .iter()
            .find(|c| names(&c.concepts) == ["Hob", "Heat", "Hob"])
            .unwrap();
        assert_eq!(
            hob.enabled_by,
            vec![Enabler::ReversePair {
                first: "r5".into(),
                second: "r7".into()
            }]
        );
    }

    #[test]
    fn cooking_uni_links() {
        let report = cooking_report();
        let links: Vec<(Vec<&str>, Vec<&str>)> = report
            .uni_links
            .iter()
            .map(|l| (names(&l.from), names(&l.to)))
            .collect();
        assert!(links.contains(&(vec!["Kitchen", "Cupboard", "Pot"], vec!["Pot"])));
        assert!(links.contains(&(vec!["Kitchen", "Cooker", "Hob"], vec!["Hob"])));
        assert!(links.contains(&(vec!["Pot", "Water"], vec!["Water", "Tap"])));
    }

    #[test]
    fn no_enablers_no_cycles() {
        let mut scene = Scene::new(
            "S",
            ["A", "B", "C"].iter().map(|n| Entity::new(n)).collect(),
        );
        scene
            .rules
            .push(Rule::triple(None, &["A"], vec![Chain::new(&["B", "C"])]));
        scene
            .rules
            .push(Rule::triple(None, &["B"], vec![Chain::new(&["A", "C"])]));
        scene
            .rules
            .push(Rule::triple(None, &["C"], vec![Chain::new(&["A", "B"])]));
        // r1/r2 swap A and B over C: a reverse pair.
        let report = extract_cycles(&scene, &build_forest(&scene));
        assert!(!report.cycles.is_empty());
        scene.rules.remove(1);
        let report = extract_cycles(&scene, &build_forest(&scene));
        assert!(report.cycles.is_empty(), "{:?}", report.cycles);
    }

    #[test]
    fn every_cycle_closed_and_enabled() {
        let report = cooking_report();
        for c in &report.cycles {
            assert_eq!(c.concepts.first(), c.concepts.last());
            assert!(!c.enabled_by.is_empty());
            assert_eq!(c.steps.len(), c.concepts.len() - 1);
        }
    }

    #[test]
    fn graph_edges_cite_rules() {
        let scene = parse_scene(crate::COOKING_SCENE).unwrap();
        let g = ProcessGraph::build(&scene, &build_forest(&scene));
        assert!(g.edges.iter().all(|e| e.rule < scene.rules.len()));
        assert!(g.edges.contains(&ProcessEdge {
            from: "Cupboard".into(),
            to: "Pot".into(),
            rule: 0,
            kind: EdgeKind::Flow,
        }));
    }
}

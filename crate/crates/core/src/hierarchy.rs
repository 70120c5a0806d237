//! The ensemble (one weighted node per concept) and the process hierarchy
//! grown from it, rooted at the most used concept.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{derive_result, is_reverse_pair, ConceptId, Scene};
use crate::dot::quote;
use crate::grid::{build_grid, FrequencyGrid};

/// Fully connected weighted graph; weights are the frequency grid counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ensemble {
    grid: FrequencyGrid,
}

impl Ensemble {
    pub fn concepts(&self) -> &[ConceptId] {
        &self.grid.concepts
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn weight(&self, a: &str, b: &str) -> u32 {
        self.grid.count(a, b)
    }

    pub fn strength(&self, c: &ConceptId) -> u32 {
        self.grid.index_of(c).map_or(0, |i| self.grid.strength(i))
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }
}

pub fn build_ensemble(scene: &Scene) -> Ensemble {
    Ensemble {
        grid: build_grid(scene),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HierarchyError {
    #[error("empty ensemble: the scene has no rules")]
    EmptyEnsemble,
    #[error("rules never connect to the hierarchy rooted at {root}: {}", rules.join(", "))]
    Stranded { root: ConceptId, rules: Vec<String> },
}

/// Highest strength wins; ties go to the smaller name.
pub fn select_root(ensemble: &Ensemble) -> Result<ConceptId, HierarchyError> {
    ensemble
        .concepts()
        .iter()
        .max_by(|a, b| {
            ensemble
                .strength(a)
                .cmp(&ensemble.strength(b))
                .then_with(|| b.cmp(a))
        })
        .cloned()
        .ok_or(HierarchyError::EmptyEnsemble)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    EnsembleNode {
        concept: ConceptId,
        rule: String,
    },
    EnsembleLink {
        a: ConceptId,
        b: ConceptId,
        weight: u32,
        rule: String,
    },
    HierarchyNode {
        concept: ConceptId,
        rule: String,
    },
    HierarchyEdge {
        parent: ConceptId,
        child: ConceptId,
        rule: String,
    },
    /// A reverse pair's second rule or a self-loop: nothing new.
    Skipped {
        rule: String,
        reason: String,
    },
    Deferred {
        rule: String,
    },
}

impl TraceEvent {
    pub fn is_ensemble(&self) -> bool {
        matches!(
            self,
            TraceEvent::EnsembleNode { .. } | TraceEvent::EnsembleLink { .. }
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConstructionTrace {
    pub events: Vec<TraceEvent>,
}

impl ConstructionTrace {
    /// Every hierarchy edge comes after a weight update for its pair.
    pub fn ensemble_first(&self) -> bool {
        let mut linked: BTreeSet<(&ConceptId, &ConceptId)> = BTreeSet::new();
        for e in &self.events {
            match e {
                TraceEvent::EnsembleLink { a, b, .. } => {
                    linked.insert((a.min(b), a.max(b)));
                }
                TraceEvent::HierarchyEdge { parent, child, .. }
                    if !linked.contains(&(parent.min(child), parent.max(child))) =>
                {
                    return false;
                }
                _ => {}
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hierarchy {
    pub root: ConceptId,
    /// Creation order.
    pub nodes: Vec<ConceptId>,
    /// Parent to child, in creation order.
    pub edges: Vec<(ConceptId, ConceptId)>,
}

impl Hierarchy {
    fn new(root: ConceptId) -> Self {
        Hierarchy {
            nodes: vec![root.clone()],
            root,
            edges: Vec::new(),
        }
    }

    pub fn contains(&self, c: &ConceptId) -> bool {
        self.nodes.contains(c)
    }

    pub fn has_edge(&self, parent: &str, child: &str) -> bool {
        self.edges
            .iter()
            .any(|(p, c)| p.as_str() == parent && c.as_str() == child)
    }

    pub fn parents(&self, c: &str) -> Vec<&ConceptId> {
        self.edges
            .iter()
            .filter(|(_, ch)| ch.as_str() == c)
            .map(|(p, _)| p)
            .collect()
    }

    pub fn children(&self, c: &str) -> Vec<&ConceptId> {
        self.edges
            .iter()
            .filter(|(p, _)| p.as_str() == c)
            .map(|(_, ch)| ch)
            .collect()
    }

    /// Shortest edge count from the root to every reachable node.
    pub fn depths(&self) -> BTreeMap<&ConceptId, usize> {
        let mut depth = BTreeMap::new();
        depth.insert(&self.root, 0);
        let mut queue = VecDeque::from([&self.root]);
        while let Some(n) = queue.pop_front() {
            let d = depth[n];
            for ch in self.children(n.as_str()) {
                if !depth.contains_key(ch) {
                    depth.insert(ch, d + 1);
                    queue.push_back(ch);
                }
            }
        }
        depth
    }

    fn reaches(&self, from: &ConceptId, to: &ConceptId) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            if seen.insert(n) {
                stack.extend(self.children(n.as_str()));
            }
        }
        false
    }

    pub fn is_acyclic(&self) -> bool {
        let mut indegree: BTreeMap<&ConceptId, usize> = self.nodes.iter().map(|n| (n, 0)).collect();
        for (_, c) in &self.edges {
            *indegree.entry(c).or_default() += 1;
        }
        let mut ready: Vec<&ConceptId> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(n, _)| *n)
            .collect();
        let mut visited = 0;
        while let Some(n) = ready.pop() {
            visited += 1;
            for ch in self.children(n.as_str()) {
                let d = indegree.get_mut(ch).expect("edge target is a node");
                *d -= 1;
                if *d == 0 {
                    ready.push(ch);
                }
            }
        }
        visited == indegree.len()
    }

    /// Rank direction bottom-to-top puts the root at the bottom.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph hierarchy {\n  rankdir=BT;\n");
        for n in &self.nodes {
            let shape = if *n == self.root {
                "doublecircle"
            } else {
                "ellipse"
            };
            let _ = writeln!(out, "  {} [shape={shape}];", quote(n.as_str()));
        }
        for (p, c) in &self.edges {
            let _ = writeln!(out, "  {} -> {};", quote(p.as_str()), quote(c.as_str()));
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self, trace: &ConstructionTrace) -> serde_json::Value {
        serde_json::json!({
            "format_version": 1,
            "root": self.root,
            "nodes": self.nodes,
            "edges": self.edges.iter().map(|(p, c)| serde_json::json!({"parent": p, "child": c})).collect::<Vec<_>>(),
            "trace": trace.events,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("root: {}\n", self.root);
        for (p, c) in &self.edges {
            let _ = writeln!(out, "{p} -> {c}");
        }
        out
    }

    /// Insert the path, oriented so its shallowest existing node comes
    /// first and growing outward from it. Returns false when no node of the
    /// path exists yet.
    fn attach(&mut self, path: &[ConceptId], rule: &str, trace: &mut ConstructionTrace) -> bool {
        let depths = self.depths();
        let Some(anchor) = (0..path.len())
            .filter(|&i| depths.contains_key(&path[i]))
            .min_by_key(|&i| depths[&path[i]])
        else {
            return false;
        };
        let outward = (anchor + 1..path.len())
            .map(|j| (j - 1, j))
            .chain((0..anchor).rev().map(|j| (j + 1, j)));
        for (p, c) in outward.collect::<Vec<_>>() {
            let (parent, child) = (&path[p], &path[c]);
            if parent == child || self.has_edge(parent.as_str(), child.as_str()) {
                continue;
            }
            if self.contains(child) && self.reaches(child, parent) {
                continue;
            }
            if !self.contains(child) {
                self.nodes.push(child.clone());
                trace.events.push(TraceEvent::HierarchyNode {
                    concept: child.clone(),
                    rule: rule.to_string(),
                });
            }
            self.edges.push((parent.clone(), child.clone()));
            trace.events.push(TraceEvent::HierarchyEdge {
                parent: parent.clone(),
                child: child.clone(),
                rule: rule.to_string(),
            });
        }
        true
    }
}

/// Grow the hierarchy rule by rule. Each rule first updates the ensemble
/// (logged), then each derived path `O.F...S` is attached at its node
/// nearest the root. Self-loops and the second rule of a reverse pair add
/// nothing. Paths that touch no existing node wait until one does.
pub fn build_hierarchy(
    scene: &Scene,
    ensemble: &Ensemble,
) -> Result<(Hierarchy, ConstructionTrace), HierarchyError> {
    let root = select_root(ensemble)?;
    let mut hierarchy = Hierarchy::new(root.clone());
    let mut trace = ConstructionTrace::default();
    let mut seen: BTreeSet<ConceptId> = BTreeSet::new();
    let mut weights: BTreeMap<(ConceptId, ConceptId), u32> = BTreeMap::new();
    let mut root_logged = false;
    let mut pending: Vec<(usize, Vec<ConceptId>)> = Vec::new();

    for (ri, rule) in scene.rules.iter().enumerate() {
        let label = scene.rule_ref(ri);
        let lhs = rule.lhs_concepts();
        for c in &lhs {
            if seen.insert(c.clone()) {
                trace.events.push(TraceEvent::EnsembleNode {
                    concept: c.clone(),
                    rule: label.clone(),
                });
            }
        }
        for (k, a) in lhs.iter().enumerate() {
            for b in &lhs[k + 1..] {
                let key = (a.min(b).clone(), a.max(b).clone());
                let w = weights.entry(key).or_default();
                *w += 1;
                trace.events.push(TraceEvent::EnsembleLink {
                    a: a.clone(),
                    b: b.clone(),
                    weight: *w,
                    rule: label.clone(),
                });
            }
        }
        if !root_logged && seen.contains(&root) {
            root_logged = true;
            trace.events.push(TraceEvent::HierarchyNode {
                concept: root.clone(),
                rule: label.clone(),
            });
        }

        if rule.self_loop {
            trace.events.push(TraceEvent::Skipped {
                rule: label,
                reason: "self-loop".into(),
            });
            continue;
        }
        if let Some(first) = (0..ri).find(|&e| is_reverse_pair(&scene.rules[e], rule)) {
            trace.events.push(TraceEvent::Skipped {
                rule: label,
                reason: format!("reverses {}", scene.rule_ref(first)),
            });
            continue;
        }

        let mut deferred = false;
        let mut attached = false;
        for path in derive_result(&rule.outputs, &rule.inputs) {
            if hierarchy.attach(&path, &label, &mut trace) {
                attached = true;
            } else {
                pending.push((ri, path));
                deferred = true;
            }
        }
        if deferred {
            trace.events.push(TraceEvent::Deferred { rule: label });
        }
        if attached {
            retry_pending(scene, &mut hierarchy, &mut pending, &mut trace);
        }
    }

    if !pending.is_empty() {
        let rules: BTreeSet<usize> = pending.iter().map(|(r, _)| *r).collect();
        return Err(HierarchyError::Stranded {
            root,
            rules: rules.into_iter().map(|r| scene.rule_ref(r)).collect(),
        });
    }
    Ok((hierarchy, trace))
}

fn retry_pending(
    scene: &Scene,
    hierarchy: &mut Hierarchy,
    pending: &mut Vec<(usize, Vec<ConceptId>)>,
    trace: &mut ConstructionTrace,
) {
    loop {
        let Some(pos) = pending
            .iter()
            .position(|(_, path)| path.iter().any(|c| hierarchy.contains(c)))
        else {
            return;
        };
        let (ri, path) = pending.remove(pos);
        hierarchy.attach(&path, &scene.rule_ref(ri), trace);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Chain, Entity, Rule};
    use crate::parser::parse_scene;

    fn cooking() -> (Hierarchy, ConstructionTrace) {
        let scene = parse_scene(crate::COOKING_SCENE).unwrap();
        build_hierarchy(&scene, &build_ensemble(&scene)).unwrap()
    }

    #[test]
    fn cooking_ensemble() {
        let scene = parse_scene(crate::COOKING_SCENE).unwrap();
        let e = build_ensemble(&scene);
        assert_eq!(e.len(), 9);
        assert!(!e.concepts().contains(&ConceptId::new("Gas")));
        assert_eq!(e.weight("Pot", "Heat"), 3);
        assert_eq!(e.strength(&"Pot".into()), 12);
        assert_eq!(select_root(&e).unwrap(), ConceptId::new("Pot"));
    }

    #[test]
    fn cooking_edges() {
        let (h, trace) = cooking();
        assert_eq!(h.root.as_str(), "Pot");
        for (p, c) in [
            ("Pot", "Water"),
            ("Pot", "Heat"),
            ("Water", "Egg"),
            ("Heat", "Egg"),
            ("Water", "Tap"),
            ("Heat", "Hob"),
            ("Hob", "Cooker"),
            ("Pot", "Cupboard"),
            ("Cupboard", "Kitchen"),
        ] {
            assert!(h.has_edge(p, c), "missing {p} -> {c}");
        }
        assert_eq!(h.edges.len(), 9);
        let mut egg: Vec<&str> = h.parents("Egg").iter().map(|c| c.as_str()).collect();
        egg.sort();
        assert_eq!(egg, ["Heat", "Water"]);
        for leaf in ["Kitchen", "Tap", "Cooker", "Egg"] {
            assert!(h.children(leaf).is_empty(), "{leaf}");
        }
        assert!(h.is_acyclic());
        assert_eq!(h.depths().len(), h.nodes.len());
        assert!(trace.ensemble_first());
    }

    #[test]
    fn reverse_rule_adds_nothing() {
        let mut scene = parse_scene(crate::COOKING_SCENE).unwrap();
        let (with, _) = build_hierarchy(&scene, &build_ensemble(&scene)).unwrap();
        scene.rules.remove(6);
        let (without, _) = build_hierarchy(&scene, &build_ensemble(&scene)).unwrap();
        assert_eq!(with.edges, without.edges);
    }

    #[test]
    fn single_rule_chain() {
        let mut scene = Scene::new(
            "S",
            ["A", "B", "C"].iter().map(|n| Entity::new(n)).collect(),
        );
        scene
            .rules
            .push(Rule::triple(None, &["A"], vec![Chain::new(&["B", "C"])]));
        let (h, _) = build_hierarchy(&scene, &build_ensemble(&scene)).unwrap();
        assert_eq!(h.root.as_str(), "A");
        assert!(h.has_edge("A", "C") && h.has_edge("C", "B"));
        assert_eq!(h.edges.len(), 2);
    }

    #[test]
    fn root_tie_is_lexicographic() {
        let mut scene = Scene::new("S", ["B", "A"].iter().map(|n| Entity::new(n)).collect());
        scene.rules.push(Rule::self_loop(None, "B"));
        scene.rules.push(Rule::self_loop(None, "A"));
        assert_eq!(select_root(&build_ensemble(&scene)).unwrap().as_str(), "A");
    }

    #[test]
    fn empty_scene_has_no_root() {
        let scene = Scene::new("S", vec![Entity::new("A")]);
        let e = build_ensemble(&scene);
        assert!(e.is_empty());
        assert_eq!(select_root(&e), Err(HierarchyError::EmptyEnsemble));
    }

    #[test]
    fn disconnected_rules_are_named() {
        let names = ["A", "B", "C", "D", "E", "F", "G"];
        let mut scene = Scene::new("S", names.iter().map(|n| Entity::new(n)).collect());
        scene.rules.push(Rule::triple(
            Some("one"),
            &["A"],
            vec![Chain::new(&["B", "C"])],
        ));
        scene.rules.push(Rule::triple(
            Some("two"),
            &["A"],
            vec![Chain::new(&["D", "C"])],
        ));
        scene.rules.push(Rule::triple(
            Some("far"),
            &["E"],
            vec![Chain::new(&["F", "G"])],
        ));
        let err = build_hierarchy(&scene, &build_ensemble(&scene)).unwrap_err();
        assert_eq!(
            err,
            HierarchyError::Stranded {
                root: "A".into(),
                rules: vec!["far".into()]
            }
        );
    }

    #[test]
    fn deferred_rule_attaches_later() {
        let names = ["A", "B", "C", "D", "E", "F", "G"];
        let mut scene = Scene::new("S", names.iter().map(|n| Entity::new(n)).collect());
        scene.rules.push(Rule::triple(
            Some("early"),
            &["E"],
            vec![Chain::new(&["F", "G"])],
        ));
        scene
            .rules
            .push(Rule::triple(None, &["A"], vec![Chain::new(&["B", "C"])]));
        scene
            .rules
            .push(Rule::triple(None, &["A"], vec![Chain::new(&["B", "D"])]));
        scene
            .rules
            .push(Rule::triple(None, &["A"], vec![Chain::new(&["C", "E"])]));
        let (h, trace) = build_hierarchy(&scene, &build_ensemble(&scene)).unwrap();
        assert!(h.is_acyclic());
        assert_eq!(h.nodes.len(), 7);
        assert!(h.has_edge("E", "G") && h.has_edge("G", "F"));
        assert!(trace.events.contains(&TraceEvent::Deferred {
            rule: "early".into()
        }));
        assert!(trace.ensemble_first());
    }

    #[test]
    fn dot_puts_root_at_bottom() {
        let (h, _) = cooking();
        let dot = h.to_dot();
        assert!(dot.contains("rankdir=BT"));
        assert_eq!(dot.matches(" -> ").count(), 9);
    }
}

//! Concept-tree forest with repeated occurrences (the nested object set).

use std::collections::BTreeSet;
use std::fmt::Write;

use serde::Serialize;

use crate::ast::{ConceptId, RelationKind, Scene};
use crate::check::RelationStore;

pub type OccId = usize;

/// Why an occurrence sits where it does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Origin {
    /// `X < Y` in the given rule.
    SubConcept { rule: usize },
    /// `X in Y` in the given rule.
    ContainedIn { rule: usize },
    /// The rule's output took an effector nested in the chain source.
    Output { rule: usize },
    /// No placement of its own; hung under the scene root.
    SceneRoot,
    /// A forest root.
    Top,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occurrence {
    pub concept: ConceptId,
    pub parent: Option<OccId>,
    pub origin: Origin,
    pub children: Vec<OccId>,
    /// The occurrence that carries the concept's own children. Other
    /// occurrences of the concept are leaves.
    pub home: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OccurrenceForest {
    pub occurrences: Vec<Occurrence>,
    pub roots: Vec<OccId>,
}

struct Placement {
    child: ConceptId,
    parent: ConceptId,
    origin: Origin,
}

/// Build the forest.
///
/// Rules are visited in order. Each `X < Y` places X under Y and each
/// `X in Y` places X inside Y. A rule output with no sub-concept placement
/// of its own is placed under a chain source when the chain's effector is a
/// sub-concept of that source and the output is not associated with it.
/// Concepts left unplaced go under the scene root, or become forest roots
/// when there is none.
///
/// Only concepts mentioned by rules appear; with no rules every declared
/// entity is an isolated root.
pub fn build_forest(scene: &Scene) -> OccurrenceForest {
    let store = RelationStore::from_scene(scene);
    let mut scope: Vec<ConceptId> = Vec::new();
    if let Some(root) = &scene.root {
        scope.push(root.clone());
    }
    let mentioned = if scene.rules.is_empty() {
        scene.entities.iter().map(|e| e.name.clone()).collect()
    } else {
        scene.rule_concepts()
    };
    for c in mentioned {
        if !scope.contains(&c) {
            scope.push(c);
        }
    }

    let mut placements: Vec<Placement> = Vec::new();
    for (ri, rule) in scene.rules.iter().enumerate() {
        if rule.self_loop {
            continue;
        }
        for rel in &rule.relations {
            if rel.kind == RelationKind::SubConcept {
                place(
                    &mut placements,
                    &rel.left,
                    &rel.right,
                    Origin::SubConcept { rule: ri },
                );
            }
        }
        for rel in &rule.relations {
            if rel.kind == RelationKind::ContainedIn {
                place(
                    &mut placements,
                    &rel.left,
                    &rel.right,
                    Origin::ContainedIn { rule: ri },
                );
            }
        }
        for output in &rule.outputs {
            let nested_here = rule
                .relations
                .iter()
                .any(|r| r.kind == RelationKind::SubConcept && &r.left == output);
            if nested_here {
                continue;
            }
            for chain in &rule.inputs {
                let source = chain.source();
                if store.is_sub(chain.effector(), source) && !store.associated(output, source) {
                    place(&mut placements, output, source, Origin::Output { rule: ri });
                }
            }
        }
    }

    let mut top_level = Vec::new();
    for c in &scope {
        if Some(c) == scene.root.as_ref() || placements.iter().any(|p| &p.child == c) {
            continue;
        }
        match &scene.root {
            Some(root) => place(&mut placements, c, root, Origin::SceneRoot),
            None => top_level.push(c.clone()),
        }
    }

    let home_of = |c: &ConceptId| -> Option<usize> {
        let mut mine = placements.iter().enumerate().filter(|(_, p)| &p.child == c);
        let all: Vec<(usize, &Placement)> = mine.by_ref().collect();
        all.iter()
            .find(|(_, p)| !matches!(p.origin, Origin::ContainedIn { .. }))
            .or_else(|| all.first())
            .map(|(i, _)| *i)
    };
    let homes: Vec<Option<usize>> = placements.iter().map(|p| home_of(&p.child)).collect();

    let mut builder = Builder {
        forest: OccurrenceForest::default(),
        expanded: BTreeSet::new(),
        placements: &placements,
        homes: &homes,
    };
    let roots: Vec<ConceptId> = match &scene.root {
        Some(root) => vec![root.clone()],
        None => top_level,
    };
    for r in roots {
        builder.add_root(&r);
    }
    for c in &scope {
        if !builder.expanded.contains(c) {
            builder.add_root(c);
        }
    }
    builder.forest
}

fn place(placements: &mut Vec<Placement>, child: &ConceptId, parent: &ConceptId, origin: Origin) {
    if !placements
        .iter()
        .any(|p| &p.child == child && &p.parent == parent)
    {
        placements.push(Placement {
            child: child.clone(),
            parent: parent.clone(),
            origin,
        });
    }
}

struct Builder<'a> {
    forest: OccurrenceForest,
    expanded: BTreeSet<ConceptId>,
    placements: &'a [Placement],
    homes: &'a [Option<usize>],
}

impl Builder<'_> {
    fn push(
        &mut self,
        concept: ConceptId,
        parent: Option<OccId>,
        origin: Origin,
        home: bool,
    ) -> OccId {
        let id = self.forest.occurrences.len();
        self.forest.occurrences.push(Occurrence {
            concept,
            parent,
            origin,
            children: Vec::new(),
            home,
        });
        if let Some(p) = parent {
            self.forest.occurrences[p].children.push(id);
        }
        id
    }

    fn add_root(&mut self, c: &ConceptId) {
        let id = self.push(c.clone(), None, Origin::Top, true);
        self.forest.roots.push(id);
        self.expand(id);
    }

    fn expand(&mut self, occ: OccId) {
        let concept = self.forest.occurrences[occ].concept.clone();
        if !self.expanded.insert(concept.clone()) {
            self.forest.occurrences[occ].home = false;
            return;
        }
        for (i, p) in self.placements.iter().enumerate() {
            if p.parent != concept {
                continue;
            }
            let home = self.homes[i] == Some(i) && !self.expanded.contains(&p.child);
            let child = self.push(p.child.clone(), Some(occ), p.origin, home);
            if home {
                self.expand(child);
            }
        }
    }
}

impl OccurrenceForest {
    pub fn get(&self, id: OccId) -> &Occurrence {
        &self.occurrences[id]
    }

    pub fn occurrences_of<'a>(&'a self, c: &'a ConceptId) -> impl Iterator<Item = OccId> + 'a {
        (0..self.occurrences.len()).filter(move |&i| &self.occurrences[i].concept == c)
    }

    pub fn parent_concept(&self, id: OccId) -> Option<&ConceptId> {
        self.occurrences[id]
            .parent
            .map(|p| &self.occurrences[p].concept)
    }

    /// Occurrences from the forest root down to `id`, inclusive.
    pub fn path_from_root(&self, id: OccId) -> Vec<OccId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.occurrences[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    pub fn concepts(&self, ids: &[OccId]) -> Vec<ConceptId> {
        ids.iter()
            .map(|&i| self.occurrences[i].concept.clone())
            .collect()
    }

    /// `Kitchen(Cupboard(Pot), ...)`. Children follow placement order, or
    /// name order when `sorted`.
    pub fn nested_notation(&self, sorted: bool) -> String {
        let mut roots: Vec<String> = self.roots.iter().map(|&r| self.render(r, sorted)).collect();
        if sorted {
            roots.sort();
        }
        roots.join(", ")
    }

    fn render(&self, id: OccId, sorted: bool) -> String {
        let occ = &self.occurrences[id];
        if occ.children.is_empty() {
            return occ.concept.to_string();
        }
        let mut kids: Vec<String> = occ
            .children
            .iter()
            .map(|&c| self.render(c, sorted))
            .collect();
        if sorted {
            kids.sort();
        }
        format!("{}({})", occ.concept, kids.join(", "))
    }

    /// Pairs of occurrences of one concept under different parent concepts.
    pub fn cross_links(&self) -> Vec<(OccId, OccId)> {
        let mut out = Vec::new();
        for a in 0..self.occurrences.len() {
            for b in a + 1..self.occurrences.len() {
                if self.occurrences[a].concept == self.occurrences[b].concept
                    && self.parent_concept(a) != self.parent_concept(b)
                {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// One cluster subgraph per root; cross-links drawn dashed.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph forest {\n  node [shape=box];\n");
        for (n, &root) in self.roots.iter().enumerate() {
            let _ = writeln!(out, "  subgraph cluster_{n} {{");
            let _ = writeln!(
                out,
                "    label={};",
                crate::dot::quote(self.occurrences[root].concept.as_str())
            );
            let mut stack = vec![root];
            let mut members = Vec::new();
            while let Some(id) = stack.pop() {
                members.push(id);
                stack.extend(self.occurrences[id].children.iter().rev());
            }
            for &id in &members {
                let _ = writeln!(
                    out,
                    "    o{id} [label={}];",
                    crate::dot::quote(self.occurrences[id].concept.as_str())
                );
            }
            for &id in &members {
                for &c in &self.occurrences[id].children {
                    let _ = writeln!(out, "    o{id} -> o{c};");
                }
            }
            out.push_str("  }\n");
        }
        for (a, b) in self.cross_links() {
            let _ = writeln!(
                out,
                "  o{a} -> o{b} [style=dashed, dir=none, constraint=false];"
            );
        }
        out.push_str("}\n");
        out
    }
}

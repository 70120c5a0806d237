//! Rule-level validation against the derivation algebra, and scene-level
//! cross-rule consistency.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::ast::{derive_result, ConceptId, Relation, RelationKind, Rule, Scene};
use crate::diag::Diagnostic;

type Pair = (ConceptId, ConceptId);

/// Every relation in a scene, merged, with the rules that state it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelationStore {
    /// (child, parent)
    pub sub_edges: BTreeMap<Pair, BTreeSet<usize>>,
    /// Unordered; stored with the smaller name first.
    pub assoc_edges: BTreeMap<Pair, BTreeSet<usize>>,
    /// (inner, outer)
    pub contained_edges: BTreeMap<Pair, BTreeSet<usize>>,
}

fn unordered(a: &ConceptId, b: &ConceptId) -> Pair {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

impl RelationStore {
    pub fn from_scene(scene: &Scene) -> Self {
        let mut store = RelationStore::default();
        for (i, rule) in scene.rules.iter().enumerate() {
            for rel in &rule.relations {
                store.insert(rel, i);
            }
        }
        store
    }

    pub fn insert(&mut self, rel: &Relation, rule: usize) {
        let (map, key) = match rel.kind {
            RelationKind::SubConcept => {
                (&mut self.sub_edges, (rel.left.clone(), rel.right.clone()))
            }
            RelationKind::Association => (&mut self.assoc_edges, unordered(&rel.left, &rel.right)),
            RelationKind::ContainedIn => (
                &mut self.contained_edges,
                (rel.left.clone(), rel.right.clone()),
            ),
        };
        map.entry(key).or_default().insert(rule);
    }

    pub fn associated(&self, a: &ConceptId, b: &ConceptId) -> bool {
        self.assoc_edges.contains_key(&unordered(a, b))
    }

    /// `child < parent`, directly or through intermediate sub-concepts.
    pub fn is_sub(&self, child: &ConceptId, parent: &ConceptId) -> bool {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([child]);
        while let Some(c) = queue.pop_front() {
            for ((from, to), _) in self.sub_edges.range((c.clone(), ConceptId::new(""))..) {
                if from != c {
                    break;
                }
                if to == parent {
                    return true;
                }
                if seen.insert(to) {
                    queue.push_back(to);
                }
            }
        }
        false
    }
}

fn refs(scene: &Scene, rules: &BTreeSet<usize>) -> String {
    rules
        .iter()
        .map(|i| scene.rule_ref(*i))
        .collect::<Vec<_>>()
        .join(", ")
}

fn term_text(t: &[ConceptId]) -> String {
    t.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(".")
}

/// Check one rule: shape, declared results against the derived ones, and
/// conservation of any numeric quantities.
pub fn validate_rule(rule: &Rule) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if rule.self_loop {
        if rule.outputs.len() != 1
            || !rule.inputs.is_empty()
            || !rule.declared_results.is_empty()
            || !rule.relations.is_empty()
        {
            out.push(Diagnostic::error(
                "self-loop rule must name exactly one concept and nothing else",
            ));
        }
        return out;
    }
    if rule.outputs.is_empty() || rule.inputs.is_empty() {
        out.push(Diagnostic::error(
            "rule needs at least one output and one input chain",
        ));
        return out;
    }
    for chain in &rule.inputs {
        if chain.elements.len() < 2 {
            out.push(Diagnostic::error(
                "input chain needs a source and an effector",
            ));
            return out;
        }
    }

    let expected = derive_result(&rule.outputs, &rule.inputs);
    let mut missing: Vec<Vec<ConceptId>> = expected.clone();
    let mut extra = Vec::new();
    for term in &rule.declared_results {
        let concepts = term.concepts();
        match missing.iter().position(|m| *m == concepts) {
            Some(i) => {
                missing.remove(i);
            }
            None => extra.push(concepts),
        }
    }
    let mut extra = extra.into_iter();
    for m in &missing {
        match extra.next() {
            Some(x) => out.push(Diagnostic::error(format!(
                "result {} does not follow from the inputs; expected {}",
                term_text(&x),
                term_text(m)
            ))),
            None => out.push(Diagnostic::error(format!(
                "missing result term; expected {}",
                term_text(m)
            ))),
        }
    }
    for x in extra {
        out.push(Diagnostic::error(format!(
            "result {} does not follow from the inputs",
            term_text(&x)
        )));
    }

    for term in &rule.declared_results {
        let n = term.elements.len();
        for (i, e) in term.elements.iter().enumerate() {
            if e.amount.is_some() && i != 1 && i != n - 1 {
                out.push(Diagnostic::error(format!(
                    "quantity on {} in {}: amounts belong on the effector (taken) or the source (remainder)",
                    e.concept,
                    term_text(&term.concepts())
                )));
            }
        }
        let taken = term.elements.get(1).and_then(|e| e.amount.as_ref());
        let remainder = term.elements.last().and_then(|e| e.amount.as_ref());
        if taken.is_some() != remainder.is_some() {
            out.push(Diagnostic::error(format!(
                "incomplete quantity in {}: both the taken and the remaining amount are required",
                term_text(&term.concepts())
            )));
        }
        if taken.is_some() || remainder.is_some() {
            let concepts = term.concepts();
            let has_total = rule.inputs.iter().any(|c| {
                c.quantity.is_some()
                    && rule.outputs.iter().any(|o| {
                        derive_result(std::slice::from_ref(o), std::slice::from_ref(c))[0]
                            == concepts
                    })
            });
            if !has_total {
                out.push(Diagnostic::error(format!(
                    "quantity in {} has no total on its input chain",
                    term_text(&concepts)
                )));
            }
        }
    }
    for q in rule.quantities() {
        if let Err(e) = q.check() {
            out.push(Diagnostic::error(format!("conservation violated: {e}")));
        }
    }
    out
}

/// Cross-rule consistency: reversed sub-concepts, sub-concept plus
/// association on one pair, and sub-concept or containment cycles. Also
/// reports references to undeclared concepts and repeated labels.
pub fn check_scene(scene: &Scene) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let declared: BTreeSet<&ConceptId> = scene.entities.iter().map(|e| &e.name).collect();
    if let Some(root) = &scene.root {
        if !declared.contains(root) {
            out.push(Diagnostic::error(format!("root {root} is not declared")));
        }
    }
    let mut labels = BTreeMap::new();
    for (i, rule) in scene.rules.iter().enumerate() {
        for c in rule.mentioned_concepts() {
            if !declared.contains(&c) {
                out.push(
                    Diagnostic::error(format!("{} uses undeclared concept {c}", scene.rule_ref(i)))
                        .citing(vec![i]),
                );
            }
        }
        for d in validate_rule(rule) {
            let message = format!("{}: {}", scene.rule_ref(i), d.message);
            out.push(Diagnostic { message, ..d }.citing(vec![i]));
        }
        if let Some(l) = &rule.label {
            if let Some(prev) = labels.insert(l, i) {
                out.push(
                    Diagnostic::error(format!("duplicate rule label {l}")).citing(vec![prev, i]),
                );
            }
        }
    }

    let store = RelationStore::from_scene(scene);
    for ((child, parent), rules) in &store.sub_edges {
        if let Some(back) = store.sub_edges.get(&(parent.clone(), child.clone())) {
            if child < parent {
                out.push(
                    Diagnostic::error(format!(
                        "sub-concept contradiction: {child} < {parent} ({}) and {parent} < {child} ({})",
                        refs(scene, rules),
                        refs(scene, back)
                    ))
                    .citing(rules.union(back).copied().collect()),
                );
            }
        }
        if let Some(assoc) = store.assoc_edges.get(&unordered(child, parent)) {
            out.push(
                Diagnostic::error(format!(
                    "{child} < {parent} ({}) contradicts the association {child} - {parent} ({}): \
                     an associated concept is separate, not nested",
                    refs(scene, rules),
                    refs(scene, assoc)
                ))
                .citing(rules.union(assoc).copied().collect()),
            );
        }
    }
    out.extend(cycle_diagnostics(
        scene,
        &store.sub_edges,
        "sub-concept",
        "<",
    ));
    for ((inner, outer), rules) in &store.contained_edges {
        if let Some(back) = store.contained_edges.get(&(outer.clone(), inner.clone())) {
            if inner < outer {
                out.push(
                    Diagnostic::error(format!(
                        "containment contradiction: {inner} in {outer} ({}) and {outer} in {inner} ({})",
                        refs(scene, rules),
                        refs(scene, back)
                    ))
                    .citing(rules.union(back).copied().collect()),
                );
            }
        }
    }
    out.extend(cycle_diagnostics(
        scene,
        &store.contained_edges,
        "containment",
        "in",
    ));
    out.sort();
    out.dedup();
    out
}

/// One diagnostic per strongly connected component of three or more
/// concepts. Two-concept loops are reported as direct contradictions.
fn cycle_diagnostics(
    scene: &Scene,
    edges: &BTreeMap<Pair, BTreeSet<usize>>,
    what: &str,
    op: &str,
) -> Vec<Diagnostic> {
    let mut adj: BTreeMap<&ConceptId, Vec<&ConceptId>> = BTreeMap::new();
    for (from, to) in edges.keys() {
        adj.entry(from).or_default().push(to);
        adj.entry(to).or_default();
    }
    let mut out = Vec::new();
    for component in strongly_connected(&adj) {
        if component.len() < 3 {
            continue;
        }
        let Some(cycle) = shortest_cycle(&adj, &component) else {
            continue;
        };
        let mut cited = BTreeSet::new();
        for w in cycle.windows(2) {
            if let Some(r) = edges.get(&(w[0].clone(), w[1].clone())) {
                cited.extend(r.iter().copied());
            }
        }
        let path = cycle
            .iter()
            .map(|c| c.as_str())
            .collect::<Vec<_>>()
            .join(&format!(" {op} "));
        out.push(
            Diagnostic::error(format!("{what} cycle: {path} ({})", refs(scene, &cited)))
                .citing(cited.into_iter().collect()),
        );
    }
    out
}

/// Tarjan's algorithm over a name-ordered adjacency map.
fn strongly_connected<'a>(
    adj: &BTreeMap<&'a ConceptId, Vec<&'a ConceptId>>,
) -> Vec<BTreeSet<&'a ConceptId>> {
    struct State<'a> {
        index: BTreeMap<&'a ConceptId, usize>,
        low: BTreeMap<&'a ConceptId, usize>,
        stack: Vec<&'a ConceptId>,
        on_stack: BTreeSet<&'a ConceptId>,
        next: usize,
        out: Vec<BTreeSet<&'a ConceptId>>,
    }
    fn visit<'a>(
        v: &'a ConceptId,
        adj: &BTreeMap<&'a ConceptId, Vec<&'a ConceptId>>,
        st: &mut State<'a>,
    ) {
        st.index.insert(v, st.next);
        st.low.insert(v, st.next);
        st.next += 1;
        st.stack.push(v);
        st.on_stack.insert(v);
        for &w in adj.get(v).map(Vec::as_slice).unwrap_or(&[]) {
            if !st.index.contains_key(w) {
                visit(w, adj, st);
                let lw = st.low[w];
                let lv = st.low.get_mut(v).unwrap();
                *lv = (*lv).min(lw);
            } else if st.on_stack.contains(w) {
                let iw = st.index[w];
                let lv = st.low.get_mut(v).unwrap();
                *lv = (*lv).min(iw);
            }
        }
        if st.low[v] == st.index[v] {
            let mut comp = BTreeSet::new();
            while let Some(w) = st.stack.pop() {
                st.on_stack.remove(w);
                comp.insert(w);
                if w == v {
                    break;
                }
            }
            st.out.push(comp);
        }
    }
    let mut st = State {
        index: BTreeMap::new(),
        low: BTreeMap::new(),
        stack: Vec::new(),
        on_stack: BTreeSet::new(),
        next: 0,
        out: Vec::new(),
    };
    for &v in adj.keys() {
        if !st.index.contains_key(v) {
            visit(v, adj, &mut st);
        }
    }
    st.out
}

/// Shortest cycle through the component's smallest concept, preferring
/// cycles of length three or more.
fn shortest_cycle(
    adj: &BTreeMap<&ConceptId, Vec<&ConceptId>>,
    component: &BTreeSet<&ConceptId>,
) -> Option<Vec<ConceptId>> {
    for &start in component {
        let mut prev: BTreeMap<&ConceptId, &ConceptId> = BTreeMap::new();
        let mut queue = VecDeque::from([start]);
        let mut found = None;
        'bfs: while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !component.contains(w) {
                    continue;
                }
                if w == start {
                    // Skip immediate back-edges; those are two-concept loops.
                    if prev.contains_key(v) && prev[v] != start {
                        found = Some(v);
                        break 'bfs;
                    }
                    continue;
                }
                if w != start && !prev.contains_key(w) {
                    prev.insert(w, v);
                    queue.push_back(w);
                }
            }
        }
        if let Some(last) = found {
            let mut path = vec![last.clone()];
            let mut cur = last;
            while let Some(&p) = prev.get(cur) {
                path.push(p.clone());
                cur = p;
            }
            path.reverse();
            path.push(start.clone());
            return Some(path);
        }
    }
    None
}

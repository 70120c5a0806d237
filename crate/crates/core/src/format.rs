use std::fmt::Write;

use crate::ast::{Amount, ConceptId, Rule, Scene};

/// Canonical text for a scene. Rules refer to entities by alias when one is
/// declared; relations are written in stored form (`>` becomes `<`).
pub fn format_scene(scene: &Scene) -> String {
    let name = |id: &ConceptId| -> String {
        scene
            .entity(id)
            .map(|e| e.script_name().to_string())
            .unwrap_or_else(|| id.to_string())
    };

    let mut out = String::new();
    let _ = writeln!(out, "scene {} {{", scene.name);
    out.push_str("  entities {\n");
    for e in &scene.entities {
        match &e.abbrev {
            Some(a) => {
                let _ = writeln!(out, "    {} as {};", e.name, a);
            }
            None => {
                let _ = writeln!(out, "    {};", e.name);
            }
        }
    }
    out.push_str("  }\n");
    if let Some(root) = &scene.root {
        let _ = writeln!(out, "  root {};", name(root));
    }
    out.push_str("  rules {\n");
    for rule in &scene.rules {
        let _ = writeln!(out, "    {}", format_rule(rule, &name));
    }
    out.push_str("  }\n}\n");
    out
}

fn amount(a: &Option<Amount>) -> String {
    a.as_ref().map(|a| format!("({a})")).unwrap_or_default()
}

fn format_rule(rule: &Rule, name: &dyn Fn(&ConceptId) -> String) -> String {
    let mut s = String::new();
    if let Some(label) = &rule.label {
        let _ = write!(s, "{label}: ");
    }
    if rule.self_loop {
        let n = name(&rule.outputs[0]);
        let _ = write!(s, "{n} -> {n};");
        return s;
    }
    let outputs: Vec<String> = rule.outputs.iter().map(name).collect();
    let chains: Vec<String> = rule
        .inputs
        .iter()
        .map(|c| {
            let els: Vec<String> = c.elements.iter().map(name).collect();
            format!("{}{}", els.join("."), amount(&c.quantity))
        })
        .collect();
    let terms: Vec<String> = rule
        .declared_results
        .iter()
        .map(|t| {
            t.elements
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    if i == 0 {
                        name(&e.concept)
                    } else {
                        format!("{}{}", name(&e.concept), amount(&e.amount))
                    }
                })
                .collect::<Vec<_>>()
                .join(".")
        })
        .collect();
    let _ = write!(
        s,
        "{} + {} -> {}",
        outputs.join(" ^ "),
        chains.join(" ^ "),
        terms.join(" ^ ")
    );
    if !rule.relations.is_empty() {
        let rels: Vec<String> = rule
            .relations
            .iter()
            .map(|r| format!("{} {} {}", name(&r.left), r.op().symbol(), name(&r.right)))
            .collect();
        let _ = write!(s, " where {}", rels.join(", "));
    }
    s.push(';');
    s
}

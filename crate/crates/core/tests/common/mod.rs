#![allow(dead_code)]

use cpl_core::{
    derive_result, Amount, Chain, ConceptId, Entity, Operand, Relation, Rule, Scene, Term,
    TermElement,
};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture_path(name: &str) -> String {
    format!("{}/examples/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).expect("fixture exists")
}

/// A rule over distinct concepts drawn from `pool` (at least three): up to
/// three outputs and three chains of two to four elements. Results are
/// derived.
pub fn random_rule<R: Rng>(rng: &mut R, pool: &[String], label: Option<&str>) -> Rule {
    let (n_out, lens) = loop {
        let n_out = rng.gen_range(1..=3);
        let n_chains = rng.gen_range(1..=3);
        let lens: Vec<usize> = (0..n_chains).map(|_| rng.gen_range(2..=4)).collect();
        if n_out + lens.iter().sum::<usize>() <= pool.len() {
            break (n_out, lens);
        }
    };
    let needed = n_out + lens.iter().sum::<usize>();
    let mut picked: Vec<&String> = pool.choose_multiple(rng, needed).collect();
    picked.shuffle(rng);
    let mut it = picked.into_iter().map(|s| s.as_str());
    let outputs: Vec<&str> = it.by_ref().take(n_out).collect();
    let chains: Vec<Chain> = lens
        .iter()
        .map(|&l| Chain::new(&it.by_ref().take(l).collect::<Vec<_>>()))
        .collect();
    Rule::triple(label, &outputs, chains)
}

/// Alter declared results so they no longer match the derivation.
pub fn corrupt<R: Rng>(rng: &mut R, rule: &mut Rule, pool: &[String]) {
    let t = rng.gen_range(0..rule.declared_results.len());
    match rng.gen_range(0..3) {
        0 if rule.declared_results.len() > 1 => {
            rule.declared_results.remove(t);
        }
        1 => {
            let els = &mut rule.declared_results[t].elements;
            let last = els.len() - 1;
            els.swap(1, last);
        }
        _ => {
            let used = rule.mentioned_concepts();
            let fresh = pool
                .iter()
                .find(|c| !used.contains(&ConceptId::new(c.as_str())))
                .expect("pool larger than any rule");
            let els = &mut rule.declared_results[t].elements;
            let i = rng.gen_range(0..els.len());
            els[i].concept = ConceptId::new(fresh.as_str());
        }
    }
}

fn random_operand<R: Rng>(rng: &mut R, allow_negative: bool) -> Operand {
    if rng.gen_bool(0.5) {
        let lo = if allow_negative { -5 } else { 0 };
        Operand::Number(rng.gen_range(lo..=9))
    } else {
        Operand::Symbol(["x", "y", "r", "qty"].choose(rng).unwrap().to_string())
    }
}

fn random_amount<R: Rng>(rng: &mut R) -> Amount {
    if rng.gen_bool(0.7) {
        Amount::Single(random_operand(rng, true))
    } else {
        Amount::Difference(random_operand(rng, false), random_operand(rng, false))
    }
}

/// A syntactically valid scene. Rules need not be consistent.
pub fn random_scene<R: Rng>(rng: &mut R, id: usize) -> Scene {
    let n = rng.gen_range(1..=16);
    let entities: Vec<Entity> = (0..n)
        .map(|i| {
            let name = format!("C{i}n{}", rng.gen_range(0..100));
            if rng.gen_bool(0.5) {
                Entity::with_abbrev(&name, &format!("e{i}"))
            } else {
                Entity::new(&name)
            }
        })
        .collect();
    let names: Vec<String> = entities.iter().map(|e| e.name.to_string()).collect();
    let mut scene = Scene::new(&format!("Scene{id}"), entities);
    if rng.gen_bool(0.5) {
        scene.root = Some(ConceptId::new(names.choose(rng).unwrap().as_str()));
    }
    let n_rules = rng.gen_range(0..=6);
    for r in 0..n_rules {
        let label = rng.gen_bool(0.6).then(|| format!("r{r}"));
        let label = label.as_deref();
        if n < 3 || rng.gen_bool(0.15) {
            scene
                .rules
                .push(Rule::self_loop(label, names.choose(rng).unwrap()));
            continue;
        }
        let mut rule = random_rule(rng, &names, label);
        if rng.gen_bool(0.3) {
            annotate_quantity(rng, &mut rule);
        }
        let k = rng.gen_range(0..=3);
        for _ in 0..k {
            let pair: Vec<&String> = names.choose_multiple(rng, 2).collect();
            if pair.len() < 2 {
                break;
            }
            let (a, b) = (pair[0].as_str(), pair[1].as_str());
            rule.relations.push(match rng.gen_range(0..3) {
                0 => Relation::sub(a, b),
                1 => Relation::assoc(a, b),
                _ => Relation::contained(a, b),
            });
        }
        scene.rules.push(rule);
    }
    scene
}

/// Put a total on the first chain and amounts on its derived terms.
fn annotate_quantity<R: Rng>(rng: &mut R, rule: &mut Rule) {
    rule.inputs[0].quantity = Some(random_amount(rng));
    let derived = derive_result(&rule.outputs, &rule.inputs);
    rule.declared_results = derived
        .into_iter()
        .enumerate()
        .map(|(i, concepts)| {
            let from_first_chain = i % rule.inputs.len() == 0;
            let last = concepts.len() - 1;
            Term {
                elements: concepts
                    .into_iter()
                    .enumerate()
                    .map(|(j, concept)| TermElement {
                        amount: (from_first_chain && (j == 1 || j == last))
                            .then(|| random_amount(rng)),
                        concept,
                    })
                    .collect(),
            }
        })
        .collect();
}

/// Re-sort a nested-set string such as `A(C, B(D))` so siblings are in
/// name order.
pub fn canonical_nested(s: &str) -> String {
    fn parse(chars: &[char], pos: &mut usize) -> Vec<String> {
        let mut items = Vec::new();
        loop {
            while *pos < chars.len() && (chars[*pos] == ' ' || chars[*pos] == ',') {
                *pos += 1;
            }
            if *pos >= chars.len() || chars[*pos] == ')' {
                return items;
            }
            let start = *pos;
            while *pos < chars.len() && chars[*pos].is_alphanumeric() {
                *pos += 1;
            }
            let name: String = chars[start..*pos].iter().collect();
            if *pos < chars.len() && chars[*pos] == '(' {
                *pos += 1;
                let mut kids = parse(chars, pos);
                *pos += 1;
                kids.sort();
                items.push(format!("{name}({})", kids.join(", ")));
            } else {
                items.push(name);
            }
        }
    }
    let chars: Vec<char> = s.chars().collect();
    let mut items = parse(&chars, &mut 0);
    items.sort();
    items.join(", ")
}

/// Rotate a closed walk so it starts at its smallest concept, and pick the
/// smaller of the two directions.
pub fn canonical_cycle(walk: &[&str]) -> Vec<String> {
    let open: Vec<&str> = walk[..walk.len() - 1].to_vec();
    let rotate = |v: &[&str]| -> Vec<String> {
        let k = (0..v.len()).min_by_key(|&i| v[i]).unwrap_or(0);
        (0..v.len())
            .map(|i| v[(k + i) % v.len()].to_string())
            .collect()
    };
    let forward = rotate(&open);
    let mut rev = open.clone();
    rev.reverse();
    forward.min(rotate(&rev))
}

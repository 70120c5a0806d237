//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic;
use std::process::ExitCode;

use common::{
    canonical_cycle, canonical_nested, corrupt, fixture, fixture_path, random_rule, random_scene,
};
use cpl_core::cli::run;
use cpl_core::{
    build_ensemble, build_forest, build_grid, build_hierarchy, check_scene, cluster, derive_result,
    extract_cycles, format_scene, parse_scene, validate_rule, ConceptId, MemoryStore, Scene,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn cooking() -> Scene {
    parse_scene(&fixture("cooking.cpl")).expect("cooking fixture parses")
}

fn golden_grid() -> Outcome {
    let grid = build_grid(&cooking());
    let expected: BTreeMap<(&str, &str), u32> = [
        (("Pot", "Kitchen"), 1),
        (("Pot", "Cupboard"), 1),
        (("Kitchen", "Cupboard"), 1),
        (("Pot", "Tap"), 1),
        (("Pot", "Water"), 2),
        (("Tap", "Water"), 1),
        (("Heat", "Cooker"), 1),
        (("Heat", "Hob"), 3),
        (("Cooker", "Hob"), 1),
        (("Egg", "Pot"), 2),
        (("Egg", "Water"), 1),
        (("Pot", "Hob"), 2),
        (("Pot", "Heat"), 3),
        (("Egg", "Heat"), 1),
    ]
    .into();
    ensure!(grid.len() == 9, "grid has {} concepts", grid.len());
    let mut nonzero = 0;
    for a in &grid.concepts {
        for b in &grid.concepts {
            let got = grid.count(a.as_str(), b.as_str());
            let want = expected
                .get(&(a.as_str(), b.as_str()))
                .or_else(|| expected.get(&(b.as_str(), a.as_str())))
                .copied()
                .unwrap_or(0);
            ensure!(got == want, "count({a},{b}) = {got}, expected {want}");
            nonzero += usize::from(got > 0);
        }
    }
    ensure!(nonzero == 28, "{nonzero} nonzero cells");
    ensure!(grid.total() == 42, "total {}", grid.total());
    let csv = grid.to_csv();
    for (i, line) in csv.lines().skip(1).enumerate() {
        let cell = line.split(',').nth(i + 1);
        ensure!(cell == Some(""), "diagonal cell {i} is {cell:?}");
    }
    Ok(())
}

fn golden_clustering() -> Outcome {
    let clustering = cluster(&build_grid(&cooking()));
    let got: BTreeSet<BTreeSet<&str>> = clustering
        .clusters
        .iter()
        .map(|c| c.iter().map(|x| x.as_str()).collect())
        .collect();
    let want: BTreeSet<BTreeSet<&str>> = [
        vec!["Pot", "Water", "Egg"],
        vec!["Heat", "Hob"],
        vec!["Kitchen", "Cupboard"],
        vec!["Tap"],
        vec!["Cooker"],
    ]
    .into_iter()
    .map(|c| c.into_iter().collect())
    .collect();
    ensure!(got == want, "clusters {got:?}");
    let links: BTreeSet<BTreeSet<&str>> = clustering
        .secondary_links
        .iter()
        .map(|l| [l.a.as_str(), l.b.as_str()].into())
        .collect();
    for pair in [
        ["Cooker", "Hob"],
        ["Cooker", "Heat"],
        ["Cupboard", "Pot"],
        ["Tap", "Water"],
        ["Pot", "Hob"],
    ] {
        ensure!(links.contains(&pair.into()), "missing link {pair:?}");
    }
    Ok(())
}

fn golden_nested_set() -> Outcome {
    let forest = build_forest(&cooking());
    let want = canonical_nested(
        "Kitchen(Cupboard(Pot), Cooker(Hob(Heat)), Pot(Water, Egg, Heat), Tap(Water))",
    );
    let got = forest.nested_notation(true);
    ensure!(got == want, "got {got}, expected {want}");
    Ok(())
}

fn cycle_report() -> Outcome {
    let scene = cooking();
    let report = extract_cycles(&scene, &build_forest(&scene));
    let names = |v: &[ConceptId]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>();
    let links: Vec<(Vec<String>, Vec<String>)> = report
        .uni_links
        .iter()
        .map(|l| (names(&l.from), names(&l.to)))
        .collect();
    for (from, to) in [
        (vec!["Kitchen", "Cupboard", "Pot"], vec!["Pot"]),
        (vec!["Pot", "Water"], vec!["Water", "Tap"]),
        (vec!["Kitchen", "Cooker", "Hob"], vec!["Hob"]),
    ] {
        let want = (
            from.iter().map(|s| s.to_string()).collect(),
            to.iter().map(|s| s.to_string()).collect(),
        );
        ensure!(links.contains(&want), "missing uni-link {from:?} to {to:?}");
    }
    let cycles: BTreeSet<Vec<String>> = report
        .cycles
        .iter()
        .map(|c| canonical_cycle(&c.concepts.iter().map(|x| x.as_str()).collect::<Vec<_>>()))
        .collect();
    for walk in [
        ["Pot", "Water", "Egg", "Pot"].as_slice(),
        &["Pot", "Heat", "Egg", "Pot"],
        &["Pot", "Heat", "Pot"],
        &["Hob", "Heat", "Hob"],
    ] {
        ensure!(
            cycles.contains(&canonical_cycle(walk)),
            "missing cycle {walk:?}"
        );
    }
    Ok(())
}

fn hierarchy() -> Outcome {
    let scene = cooking();
    let (h, trace) = build_hierarchy(&scene, &build_ensemble(&scene)).map_err(|e| e.to_string())?;
    ensure!(h.root.as_str() == "Pot", "root {}", h.root);
    for (p, c) in [
        ("Pot", "Water"),
        ("Pot", "Heat"),
        ("Water", "Egg"),
        ("Heat", "Egg"),
    ] {
        ensure!(h.has_edge(p, c), "missing edge {p} -> {c}");
    }
    let egg: BTreeSet<&str> = h.parents("Egg").iter().map(|c| c.as_str()).collect();
    ensure!(egg == ["Water", "Heat"].into(), "Egg parents {egg:?}");
    ensure!(h.is_acyclic(), "hierarchy has a cycle");
    let unique: BTreeSet<&ConceptId> = h.nodes.iter().collect();
    ensure!(unique.len() == h.nodes.len(), "repeated node");
    ensure!(h.depths().len() == h.nodes.len(), "unreachable node");
    ensure!(trace.ensemble_first(), "edge before its ensemble link");
    Ok(())
}

fn consistency() -> Outcome {
    let clean = run(["cpl", "check", &fixture_path("cooking.cpl")]);
    ensure!(
        clean.code == 0,
        "cooking check exit {}: {}",
        clean.code,
        clean.stdout
    );
    ensure!(
        check_scene(&cooking()).is_empty(),
        "cooking has diagnostics"
    );
    for (file, cited) in [
        ("inconsistent.cpl", vec!["r1", "r9"]),
        ("sub_and_assoc.cpl", vec!["r4", "r9"]),
        ("subconcept_cycle.cpl", vec!["a", "b", "c"]),
    ] {
        let r = run(["cpl", "check", &fixture_path(file)]);
        ensure!(r.code == 1, "{file}: exit {}", r.code);
        let line = r.stdout.lines().next().unwrap_or_default();
        for rule in &cited {
            let needle = *rule;
            ensure!(
                line.contains(&format!("({needle})"))
                    || line.contains(&format!("({needle},"))
                    || line.contains(&format!(" {needle},"))
                    || line.contains(&format!(" {needle})")),
                "{file}: {rule} not cited in {line:?}"
            );
        }
    }
    Ok(())
}

fn derivation_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pool: Vec<String> = ('A'..='Z').map(String::from).collect();
    for i in 0..1000 {
        let mut rule = random_rule(&mut rng, &pool, None);
        let faithful = rng.gen_bool(0.5);
        if !faithful {
            corrupt(&mut rng, &mut rule, &pool);
        }
        let declared: Vec<Vec<ConceptId>> =
            rule.declared_results.iter().map(|t| t.concepts()).collect();
        let derived = derive_result(&rule.outputs, &rule.inputs);
        ensure!(
            (declared == derived) == faithful,
            "rule {i}: equality is not {faithful}"
        );
        let diags = validate_rule(&rule);
        ensure!(
            diags.is_empty() == faithful,
            "rule {i}: validation {diags:?}"
        );
    }
    let gas = parse_scene(&fixture("gas.cpl")).map_err(|d| format!("{d:?}"))?;
    let rule = &gas.rules[0];
    let derived = derive_result(&rule.outputs, &rule.inputs);
    let want: Vec<ConceptId> = ["Heat", "Gas", "Hob", "Cooker"]
        .map(ConceptId::new)
        .to_vec();
    ensure!(derived == vec![want], "gas rule derives {derived:?}");
    ensure!(validate_rule(rule).is_empty(), "gas rule does not validate");
    Ok(())
}

fn quantity_conservation() -> Outcome {
    for (file, code) in [
        ("quantity_ok.cpl", 0),
        ("quantity_overdraw.cpl", 1),
        ("quantity_negative.cpl", 1),
    ] {
        let r = run(["cpl", "check", &fixture_path(file)]);
        ensure!(
            r.code == code,
            "{file}: exit {} ({})",
            r.code,
            r.stdout.trim()
        );
        if code == 1 {
            ensure!(r.stdout.contains("conservation"), "{file}: {}", r.stdout);
        }
    }
    Ok(())
}

fn parser_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut scenes: Vec<Scene> = (0..500).map(|i| random_scene(&mut rng, i)).collect();
    scenes.push(cooking());
    for (i, generated) in scenes.iter().enumerate() {
        let text = format_scene(generated);
        let once = parse_scene(&text).map_err(|d| format!("scene {i}: {d:?}\n{text}"))?;
        let twice = parse_scene(&format_scene(&once)).map_err(|d| format!("scene {i}: {d:?}"))?;
        ensure!(once == twice, "scene {i} changed on round trip\n{text}");
        ensure!(
            &once == generated,
            "scene {i} differs from its source\n{text}"
        );
    }
    Ok(())
}

fn prediction_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let features: Vec<String> = (0..40).map(|i| format!("f{i:02}")).collect();
    for s in 0..200 {
        let size = rng.gen_range(0..=1000);
        let mut store = MemoryStore::new();
        let mut entries: Vec<BTreeSet<String>> = Vec::new();
        for e in 0..size {
            let n = rng.gen_range(1..=20);
            let set: BTreeSet<String> = features.choose_multiple(&mut rng, n).cloned().collect();
            store
                .store_scene(&format!("s{e}"), set.iter().cloned())
                .map_err(|e| e.to_string())?;
            entries.push(set);
        }
        for _ in 0..3 {
            let n = rng.gen_range(0..=5);
            let input: Vec<String> = features.choose_multiple(&mut rng, n).cloned().collect();
            let mut oracle: BTreeMap<String, u64> = BTreeMap::new();
            for entry in &entries {
                let hits = input.iter().filter(|f| entry.contains(*f)).count() as u64;
                if hits > 0 {
                    for f in entry {
                        *oracle.entry(f.clone()).or_default() += hits;
                    }
                }
            }
            let votes = store.cross_reference(&input);
            ensure!(votes == oracle, "store {s}: votes differ for {input:?}");

            let legal: Option<BTreeSet<String>> = rng.gen_bool(0.5).then(|| {
                let n = rng.gen_range(0..=15);
                features.choose_multiple(&mut rng, n).cloned().collect()
            });
            let k = rng.gen_range(1..=10);
            let mut want: Vec<(String, u64)> = oracle
                .iter()
                .filter(|(f, _)| match &legal {
                    Some(l) => l.contains(*f),
                    None => !input.contains(f),
                })
                .map(|(f, v)| (f.clone(), *v))
                .collect();
            want.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            want.truncate(k);
            let got: Vec<(String, u64)> = store
                .predict(&input, legal.as_ref(), k)
                .ranked
                .into_iter()
                .map(|r| (r.feature, r.votes))
                .collect();
            ensure!(got == want, "store {s}: ranking differs for {input:?}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("golden frequency grid", golden_grid),
        ("golden clustering", golden_clustering),
        ("golden nested set", golden_nested_set),
        ("cycle report containment", cycle_report),
        ("ensemble hierarchy", hierarchy),
        ("consistency diagnostics", consistency),
        ("derivation algebra", derivation_algebra),
        ("quantity conservation", quantity_conservation),
        ("parser round trip", parser_round_trip),
        ("prediction oracle", prediction_oracle),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(()) => println!("PASS {:>2} {name}", n + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", n + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

mod common;

use std::collections::BTreeSet;

use common::random_scene;
use cpl_core::{
    build_ensemble, build_forest, build_grid, build_hierarchy, extract_cycles, HierarchyError,
    MemoryStore, Scene,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scenes(n: usize, seed: u64) -> Vec<Scene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| random_scene(&mut rng, i)).collect()
}

#[test]
fn hierarchy_invariants_on_random_scenes() {
    let mut built = 0;
    for scene in scenes(300, 21) {
        let ensemble = build_ensemble(&scene);
        let grid = build_grid(&scene);
        for a in &grid.concepts {
            for b in &grid.concepts {
                assert_eq!(
                    ensemble.weight(a.as_str(), b.as_str()),
                    grid.count(a.as_str(), b.as_str())
                );
                assert_eq!(
                    grid.count(a.as_str(), b.as_str()),
                    grid.count(b.as_str(), a.as_str())
                );
            }
        }
        match build_hierarchy(&scene, &ensemble) {
            Ok((h, trace)) => {
                built += 1;
                assert!(h.is_acyclic());
                assert_eq!(h.depths().len(), h.nodes.len());
                let unique: BTreeSet<_> = h.nodes.iter().collect();
                assert_eq!(unique.len(), h.nodes.len());
                assert!(trace.ensemble_first());
                let again = build_hierarchy(&scene, &ensemble).unwrap();
                assert_eq!(again.0, h);
            }
            Err(HierarchyError::EmptyEnsemble) => assert!(scene.rules.is_empty()),
            Err(HierarchyError::Stranded { rules, .. }) => assert!(!rules.is_empty()),
        }
    }
    assert!(built > 100, "only {built} hierarchies built");
}

#[test]
fn forest_and_cycles_on_random_scenes() {
    for scene in scenes(300, 22) {
        let forest = build_forest(&scene);
        for (id, occ) in forest.occurrences.iter().enumerate() {
            let path = forest.path_from_root(id);
            assert_eq!(path.last(), Some(&id));
            assert!(forest.roots.contains(&path[0]));
            if let Some(p) = occ.parent {
                assert!(forest.get(p).children.contains(&id));
            }
        }
        let report = extract_cycles(&scene, &forest);
        for c in &report.cycles {
            assert_eq!(c.concepts.first(), c.concepts.last());
            assert!(!c.enabled_by.is_empty());
            let inner: BTreeSet<_> = c.concepts[..c.concepts.len() - 1].iter().collect();
            assert_eq!(inner.len(), c.concepts.len() - 1, "cycle repeats a concept");
        }
    }
}

fn feature() -> impl Strategy<Value = String> {
    (0u8..12).prop_map(|i| format!("f{i}"))
}

proptest! {
    #[test]
    fn adding_an_entry_never_lowers_votes(
        entries in prop::collection::vec(prop::collection::btree_set(feature(), 1..6), 0..30),
        extra in prop::collection::btree_set(feature(), 1..6),
        input in prop::collection::vec(feature(), 0..4),
    ) {
        let mut store = MemoryStore::new();
        for (i, e) in entries.iter().enumerate() {
            store.store_scene(&format!("s{i}"), e.iter().cloned()).unwrap();
        }
        let before = store.cross_reference(&input);
        store.store_scene("extra", extra.iter().cloned()).unwrap();
        let after = store.cross_reference(&input);
        for (f, v) in &before {
            prop_assert!(after[f] >= *v);
        }
    }

    #[test]
    fn predictions_stay_legal(
        entries in prop::collection::vec(prop::collection::btree_set(feature(), 1..6), 1..20),
        legal in prop::collection::btree_set(feature(), 0..6),
        input in prop::collection::vec(feature(), 1..4),
        k in 1usize..8,
    ) {
        let mut store = MemoryStore::new();
        for (i, e) in entries.iter().enumerate() {
            store.store_scene(&format!("s{i}"), e.iter().cloned()).unwrap();
        }
        let p = store.predict(&input, Some(&legal), k);
        prop_assert!(p.ranked.len() <= k);
        for r in &p.ranked {
            prop_assert!(legal.contains(&r.feature));
            prop_assert_eq!(r.future, !input.contains(&r.feature));
        }
        for w in p.ranked.windows(2) {
            prop_assert!(w[0].votes >= w[1].votes);
        }
    }
}

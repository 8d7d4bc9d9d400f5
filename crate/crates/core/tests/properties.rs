use std::collections::HashMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nodemind_core::outline::{fragment_to_tree, parse_outline, serialize_outline, validate_initial_map};
use nodemind_core::redundancy::{repetition_rate, tokenize};
use nodemind_core::store::MapDocument;
use nodemind_core::testkit::{random_command, random_map, random_outline_tree};
use nodemind_core::OutlineLimits;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn outline_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_outline_tree(&mut rng, 6, 60);
        let frag = parse_outline(&serialize_outline(&tree)).unwrap();
        prop_assert!(frag.warnings.is_empty());
        prop_assert_eq!(&frag.entries, &tree.entries(1));
        prop_assert_eq!(fragment_to_tree(&frag).unwrap(), tree);
    }

    #[test]
    fn parsed_depth_is_hash_count_and_never_jumps(lines in prop::collection::vec((1usize..8, "[a-z ]{0,12}[a-z]"), 1..30)) {
        let text: String = lines.iter().map(|(d, t)| format!("{} {}\n", "#".repeat(*d), t)).collect();
        let frag = parse_outline(&text).unwrap();
        prop_assert_eq!(frag.entries.len(), lines.len());
        prop_assert_eq!(frag.entries[0].depth as usize, lines[0].0);
        for pair in frag.entries.windows(2) {
            prop_assert!(pair[1].depth <= pair[0].depth + 1);
        }
        // Without any clamping, depth equals the raw '#' count.
        let jumps = lines.windows(2).any(|w| w[1].0 > w[0].0 + 1);
        if !jumps {
            for (e, (d, _)) in frag.entries.iter().zip(&lines) {
                prop_assert_eq!(e.depth as usize, *d);
            }
        }
    }

    #[test]
    fn validation_is_pure(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_outline_tree(&mut rng, 6, 40);
        let copy = tree.clone();
        let a = validate_initial_map(&tree, &OutlineLimits::default());
        let b = validate_initial_map(&tree, &OutlineLimits::default());
        prop_assert_eq!(a, b);
        prop_assert_eq!(tree, copy);
    }

    #[test]
    fn repetition_rate_matches_counting(cand in prop::collection::vec(0u8..12, 1..20), refs in prop::collection::vec(prop::collection::vec(0u8..12, 0..10), 0..4)) {
        let word = |i: &u8| format!("w{i}");
        let candidate = cand.iter().map(word).collect::<Vec<_>>().join(" ");
        let references: Vec<String> = refs.iter().map(|r| r.iter().map(word).collect::<Vec<_>>().join(" ")).collect();
        let expected = if references.is_empty() {
            0.0
        } else {
            let hits = cand.iter().filter(|c| refs.iter().any(|r| r.contains(c))).count();
            hits as f64 / cand.len() as f64
        };
        prop_assert_eq!(repetition_rate(&candidate, &references), expected);
    }
}

#[test]
fn undo_inverse_and_redo_identity() {
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut map = random_map(&mut rng, 4, 20);
        let initial = map.clone();
        let k = (seed % 30 + 1) as usize;
        let mut snapshots = vec![map.clone()];
        for _ in 0..k {
            let cmd = random_command(&mut rng, &map);
            map.apply(cmd.clone()).unwrap_or_else(|e| panic!("seed {seed}: {cmd:?}: {e}"));
            map.check_invariants().unwrap();
            snapshots.push(map.clone());
        }
        // Step back through every intermediate state, checking undo∘redo.
        for i in (0..k).rev() {
            map.undo().unwrap();
            assert!(map.same_structure(&snapshots[i]), "seed {seed} undo to {i}");
            map.redo().unwrap();
            assert!(map.same_structure(&snapshots[i + 1]), "seed {seed} redo to {}", i + 1);
            map.undo().unwrap();
        }
        assert!(map.same_structure(&initial), "seed {seed}");
        assert!(map.undo().is_err());
    }
}

#[test]
fn apply_after_undo_clears_redo() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let mut map = random_map(&mut rng, 4, 15);
        let cmd = random_command(&mut rng, &map);
        map.apply(cmd).unwrap();
        map.undo().unwrap();
        assert!(map.history().can_redo());
        let cmd = random_command(&mut rng, &map);
        map.apply(cmd).unwrap();
        assert!(!map.history().can_redo());
    }
}

#[test]
fn document_round_trip() {
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = random_map(&mut rng, 5, 40);
        let meta = nodemind_core::store::DocumentMeta {
            map_id: format!("m{seed}"),
            created: "2026-01-01T00:00:00Z".into(),
            modified: "2026-01-02T00:00:00Z".into(),
        };
        let json = MapDocument::from_map(&map, &meta).to_json();
        let back = MapDocument::from_json(&json).unwrap();
        assert_eq!(back.meta(), meta);
        assert!(back.to_map().unwrap().same_structure(&map), "seed {seed}");
    }
}

#[test]
fn tokenizer_splits_on_word_boundaries() {
    assert_eq!(tokenize("Dalí's melting-clocks, 1931!"), vec!["dalí's", "melting", "clocks", "1931"]);
    let mut counts = HashMap::new();
    for t in tokenize("a A a") {
        *counts.entry(t).or_insert(0) += 1;
    }
    assert_eq!(counts["a"], 3);
}

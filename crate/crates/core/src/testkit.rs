//! Random generators for property and acceptance tests.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::map::{EditCommand, MindMap, NodeId, NodeOrigin};
use crate::outline::OutlineTree;

const WORDS: &[&str] = &[
    "surrealism", "dream", "automatism", "Breton", "Dalí", "Ernst", "manifesto", "collage", "frottage",
    "unconscious", "Paris", "1924", "painting", "poetry", "chance", "超现实", "梦境", "#tag", "C++", "a/b",
    "don't", "x", "Ω", "naïve", "film", "objects", "memory", "clocks", "melting", "desert",
];

/// A random single-line text of 1..=max_words words.
pub fn random_text<R: Rng>(rng: &mut R, max_words: usize) -> String {
    let n = rng.gen_range(1..=max_words.max(1));
    (0..n).map(|_| *WORDS.choose(rng).expect("non-empty word list")).collect::<Vec<_>>().join(" ")
}

/// A random outline tree with at most `max_nodes` nodes and depth at most
/// `max_depth` (root at depth 1).
pub fn random_outline_tree<R: Rng>(rng: &mut R, max_depth: u32, max_nodes: usize) -> OutlineTree {
    let target = rng.gen_range(1..=max_nodes.max(1));
    // Flat (depth, parent path) construction: each new node picks a random
    // existing node with room below it.
    let mut nodes: Vec<(u32, Option<usize>, String)> = vec![(1, None, random_text(rng, 6))];
    while nodes.len() < target {
        let candidates: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].0 < max_depth).collect();
        let Some(&parent) = candidates.choose(rng) else { break };
        let depth = nodes[parent].0 + 1;
        nodes.push((depth, Some(parent), random_text(rng, 6)));
    }
    fn build(nodes: &[(u32, Option<usize>, String)], idx: usize) -> OutlineTree {
        let children = (0..nodes.len()).filter(|&i| nodes[i].1 == Some(idx)).map(|i| build(nodes, i)).collect();
        OutlineTree { text: nodes[idx].2.clone(), children }
    }
    build(&nodes, 0)
}

const ORIGINS: &[NodeOrigin] = &[
    NodeOrigin::Generated,
    NodeOrigin::Explanation,
    NodeOrigin::Example,
    NodeOrigin::Exploration,
    NodeOrigin::UserAdded,
];

/// A random map with random origins and collapse flags. History is cleared
/// and the revision reset.
pub fn random_map<R: Rng>(rng: &mut R, max_depth: u32, max_nodes: usize) -> MindMap {
    let tree = random_outline_tree(rng, max_depth, max_nodes);
    let mut map = MindMap::new(&tree.text).expect("non-empty root text");
    let mut stack: Vec<(NodeId, &OutlineTree)> = tree.children.iter().rev().map(|c| (map.root(), c)).collect();
    while let Some((parent, node)) = stack.pop() {
        let origin = *ORIGINS.choose(rng).expect("origins");
        let id = map
            .apply(EditCommand::AddChild { parent, text: node.text.clone(), origin, position: None })
            .expect("valid add")
            .created
            .expect("created id");
        if rng.gen_bool(0.15) {
            map.set_collapsed(id, true).expect("node exists");
        }
        stack.extend(node.children.iter().rev().map(|c| (id, c)));
    }
    map.reset_history();
    map
}

/// A random command that is valid for `map`.
pub fn random_command<R: Rng>(rng: &mut R, map: &MindMap) -> EditCommand {
    let ids: Vec<NodeId> = map.preorder();
    let non_root: Vec<NodeId> = ids[1..].to_vec();
    let pick = |rng: &mut R, from: &[NodeId]| *from.choose(rng).expect("non-empty");
    loop {
        match rng.gen_range(0..5) {
            0 => {
                let parent = pick(rng, &ids);
                let len = map.node(parent).expect("node").children.len();
                let position = if rng.gen_bool(0.5) { Some(rng.gen_range(0..=len + 1)) } else { None };
                let origin = *ORIGINS.choose(rng).expect("origins");
                return EditCommand::AddChild { parent, text: random_text(rng, 4), origin, position };
            }
            1 if !non_root.is_empty() && map.len() > 3 => {
                return EditCommand::DeleteSubtree { node: pick(rng, &non_root) };
            }
            2 => {
                return EditCommand::EditText { node: pick(rng, &ids), new_text: random_text(rng, 4) };
            }
            3 if !non_root.is_empty() => {
                let node = pick(rng, &non_root);
                let targets: Vec<NodeId> = ids.iter().copied().filter(|&t| !map.is_descendant_or_self(t, node)).collect();
                let new_parent = pick(rng, &targets);
                let position = if rng.gen_bool(0.5) { Some(rng.gen_range(0..=4)) } else { None };
                return EditCommand::MoveSubtree { node, new_parent, position };
            }
            4 => {
                return EditCommand::SetCollapsed { node: pick(rng, &ids), flag: rng.gen_bool(0.5) };
            }
            _ => continue,
        }
    }
}

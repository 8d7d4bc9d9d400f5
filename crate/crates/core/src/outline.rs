//! The `#`-level outline format.
//!
//! Every LLM response is expected to be a list of heading lines where the
//! number of leading `#` characters is the depth of the entry:
//!
//! ```text
//! # Surrealism
//! ## Key figures
//! ### André Breton wrote the first manifesto in 1924.
//! ```
//!
//! Parsing is lenient: lines without a leading `#` are folded into the
//! previous entry and depth jumps of more than one level are clamped. Both are
//! reported as warnings rather than errors.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutlineEntry {
    pub depth: u32,
    pub text: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutlineFragment {
    pub entries: Vec<OutlineEntry>,
    pub warnings: Vec<Violation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    MaxDepthExceeded,
    LeafWithoutSibling,
    LeafTooShort,
    TotalLengthExceeded,
    DepthJumpClamped,
    LooseLineJoined,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// An advisory problem found in an outline. `location` is the entry index,
/// which for trees is the node's position in pre-order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: usize,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\tentry {}\t{}", self.kind, self.location, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OutlineError {
    #[error("outline text is empty")]
    EmptyInput,
    #[error("no heading lines found (a heading line starts with '#')")]
    NoHeadings,
    #[error("outline has no entries")]
    EmptyFragment,
    #[error("outline has more than one top-level entry (second at entry {0})")]
    MultipleRoots(usize),
    #[error("first entry has depth {0}; a standalone outline must start at depth 1")]
    OrphanEntry(u32),
}

/// A node of a parsed outline. Depth is implied by nesting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutlineTree {
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<OutlineTree>,
}

impl OutlineTree {
    pub fn leaf(text: impl Into<String>) -> Self {
        Self { text: text.into(), children: Vec::new() }
    }

    pub fn with_children(text: impl Into<String>, children: Vec<OutlineTree>) -> Self {
        Self { text: text.into(), children }
    }

    /// `(depth, text)` pairs in pre-order with this node at `base_depth`.
    pub fn entries(&self, base_depth: u32) -> Vec<OutlineEntry> {
        let mut out = Vec::new();
        let mut stack = vec![(self, base_depth)];
        while let Some((node, depth)) = stack.pop() {
            out.push(OutlineEntry { depth, text: node.text.clone() });
            stack.extend(node.children.iter().rev().map(|c| (c, depth + 1)));
        }
        out
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(OutlineTree::node_count).sum::<usize>()
    }
}

/// Structural limits the initial map generation is asked to respect.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutlineLimits {
    pub max_depth: u32,
    /// Leaf texts must be longer than this many characters.
    pub min_leaf_chars: usize,
    /// The summed text length must stay below this many characters.
    pub max_total_chars: usize,
}

impl Default for OutlineLimits {
    fn default() -> Self {
        Self { max_depth: 4, min_leaf_chars: 15, max_total_chars: 1000 }
    }
}

/// Character count in Unicode scalar values.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

pub fn parse_outline(text: &str) -> Result<OutlineFragment, OutlineError> {
    if text.trim().is_empty() {
        return Err(OutlineError::EmptyInput);
    }
    let mut frag = OutlineFragment::default();
    let mut saw_heading = false;
    let mut dropped_preamble = false;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let hashes = line.bytes().take_while(|&b| b == b'#').count();
        if hashes == 0 {
            match frag.entries.last_mut() {
                Some(last) => {
                    last.text.push(' ');
                    last.text.push_str(line);
                    let location = frag.entries.len() - 1;
                    frag.warnings.push(Violation {
                        kind: ViolationKind::LooseLineJoined,
                        location,
                        detail: format!("joined non-heading line: {line}"),
                    });
                }
                None => dropped_preamble = true,
            }
            continue;
        }
        saw_heading = true;
        let body = line[hashes..].trim();
        if body.is_empty() {
            continue;
        }
        let mut depth = hashes as u32;
        if let Some(prev) = frag.entries.last() {
            if depth > prev.depth + 1 {
                frag.warnings.push(Violation {
                    kind: ViolationKind::DepthJumpClamped,
                    location: frag.entries.len(),
                    detail: format!("depth {depth} after depth {} clamped to {}", prev.depth, prev.depth + 1),
                });
                depth = prev.depth + 1;
            }
        }
        frag.entries.push(OutlineEntry { depth, text: body.to_owned() });
    }
    if !saw_heading {
        return Err(OutlineError::NoHeadings);
    }
    if dropped_preamble {
        frag.warnings.insert(
            0,
            Violation {
                kind: ViolationKind::LooseLineJoined,
                location: 0,
                detail: "dropped text before the first heading".into(),
            },
        );
    }
    Ok(frag)
}

/// Builds the single tree of a standalone outline: exactly one depth-1 entry,
/// which must come first.
pub fn fragment_to_tree(frag: &OutlineFragment) -> Result<OutlineTree, OutlineError> {
    let first = frag.entries.first().ok_or(OutlineError::EmptyFragment)?;
    if first.depth != 1 {
        return Err(OutlineError::OrphanEntry(first.depth));
    }
    if let Some(pos) = frag.entries.iter().skip(1).position(|e| e.depth == 1) {
        return Err(OutlineError::MultipleRoots(pos + 1));
    }
    let mut forest = build_forest(frag.entries.iter().map(|e| (e.depth - 1, e.text.as_str())));
    Ok(forest.remove(0))
}

/// Builds the subtrees a fragment contributes when attached under an
/// existing node. Absolute depths are ignored: the first entry defines the
/// top level and later entries keep their depth relative to it. Entries
/// shallower than the first are lifted to the top level.
pub fn fragment_to_forest(frag: &OutlineFragment) -> Vec<OutlineTree> {
    let Some(first) = frag.entries.first() else {
        return Vec::new();
    };
    let base = first.depth;
    build_forest(frag.entries.iter().map(|e| (e.depth.saturating_sub(base), e.text.as_str())))
}

/// Stack-based reconstruction from `(relative depth, text)` pairs. Each entry
/// becomes a child of the nearest preceding entry one level up; jumps larger
/// than one level attach to the deepest open entry.
fn build_forest<'a>(entries: impl Iterator<Item = (u32, &'a str)>) -> Vec<OutlineTree> {
    let mut roots: Vec<OutlineTree> = Vec::new();
    // Path of child indices from a root down to the most recent entry.
    let mut path: Vec<usize> = Vec::new();
    for (depth, text) in entries {
        let depth = (depth as usize).min(path.len());
        path.truncate(depth);
        let node = OutlineTree::leaf(text);
        if depth == 0 {
            roots.push(node);
            path.push(roots.len() - 1);
        } else {
            let mut cur = &mut roots[path[0]];
            for &i in &path[1..] {
                cur = &mut cur.children[i];
            }
            cur.children.push(node);
            path.push(cur.children.len() - 1);
        }
    }
    roots
}

/// Pre-order emission, one `#`-prefixed line per node, root at depth 1.
pub fn serialize_outline(tree: &OutlineTree) -> String {
    tree.entries(1)
        .iter()
        .map(|e| format!("{} {}", "#".repeat(e.depth as usize), e.text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Checks an initial map against the generation constraints. Never fails;
/// the result is advisory. The root counts toward depth and total length
/// but is not treated as a leaf.
pub fn validate_initial_map(tree: &OutlineTree, limits: &OutlineLimits) -> Vec<Violation> {
    struct Walk<'a> {
        limits: &'a OutlineLimits,
        out: Vec<Violation>,
        total: usize,
        index: usize,
    }

    fn visit(w: &mut Walk<'_>, node: &OutlineTree, depth: u32, sibling_count: Option<usize>) {
        let location = w.index;
        w.index += 1;
        let len = char_len(&node.text);
        w.total += len;
        if depth > w.limits.max_depth {
            w.out.push(Violation {
                kind: ViolationKind::MaxDepthExceeded,
                location,
                detail: format!("depth {depth} exceeds maximum of {}", w.limits.max_depth),
            });
        }
        if let (true, Some(count)) = (node.children.is_empty(), sibling_count) {
            if count == 1 {
                w.out.push(Violation {
                    kind: ViolationKind::LeafWithoutSibling,
                    location,
                    detail: "leaf is an only child".into(),
                });
            }
            if len <= w.limits.min_leaf_chars {
                w.out.push(Violation {
                    kind: ViolationKind::LeafTooShort,
                    location,
                    detail: format!("leaf has {len} characters; needs more than {}", w.limits.min_leaf_chars),
                });
            }
        }
        for child in &node.children {
            visit(w, child, depth + 1, Some(node.children.len()));
        }
    }

    let mut walk = Walk { limits, out: Vec::new(), total: 0, index: 0 };
    visit(&mut walk, tree, 1, None);
    if walk.total >= limits.max_total_chars {
        walk.out.push(Violation {
            kind: ViolationKind::TotalLengthExceeded,
            location: 0,
            detail: format!("{} characters in total; limit is below {}", walk.total, limits.max_total_chars),
        });
    }
    walk.out
}

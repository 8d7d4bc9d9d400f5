//! The mind-map document model.
//!
//! A [`MindMap`] is a rooted, ordered tree. All mutations go through
//! [`MindMap::apply`] (or the enrichment batch entry point) so that each one is
//! recorded in the [`History`] and can be undone.

mod command;
mod history;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::outline::OutlineTree;

pub use command::EditCommand;
pub(crate) use command::Change;
pub use history::History;

/// Identifier of a node, unique within one map and never reused.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::str::FromStr for NodeId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim().parse().map(NodeId)
    }
}

/// Which action created a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeOrigin {
    Root,
    Generated,
    Explanation,
    Example,
    Exploration,
    UserAdded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub text: String,
    pub depth: u32,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub collapsed: bool,
    pub color_index: u32,
    pub origin: NodeOrigin,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("topic text is empty")]
    EmptyTopic,
    #[error("node text is empty")]
    EmptyText,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("the root node cannot be deleted")]
    CannotDeleteRoot,
    #[error("cannot move node {node} under {new_parent}: target is the node itself or one of its descendants")]
    CycleError { node: NodeId, new_parent: NodeId },
    #[error("only the root node may have origin `root`")]
    InvalidOrigin,
    #[error("nothing to {0}")]
    NoHistory(&'static str),
}

/// A broken structural invariant, reported by [`MindMap::check_invariants`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct InvariantViolation(pub String);

/// Outcome of a successfully applied command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Applied {
    pub revision: u64,
    /// The node created by an `AddChild` command.
    pub created: Option<NodeId>,
}

/// Trims surrounding whitespace and folds line breaks into spaces so every
/// node text fits on a single outline line.
pub fn normalize_text(text: &str) -> String {
    let trimmed = text.trim();
    if !trimmed.contains(['\n', '\r']) {
        return trimmed.to_owned();
    }
    trimmed
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Clone, Debug)]
pub struct MindMap {
    root: NodeId,
    nodes: BTreeMap<NodeId, Node>,
    next_id: u64,
    revision: u64,
    history: History,
}

impl MindMap {
    /// Creates a map holding only a root node for `topic`.
    pub fn new(topic: &str) -> Result<Self, MapError> {
        let text = normalize_text(topic);
        if text.is_empty() {
            return Err(MapError::EmptyTopic);
        }
        let root = NodeId(0);
        let mut nodes = BTreeMap::new();
        nodes.insert(
            root,
            Node {
                id: root,
                text,
                depth: 1,
                parent: None,
                children: Vec::new(),
                collapsed: false,
                color_index: 0,
                origin: NodeOrigin::Root,
            },
        );
        Ok(Self { root, nodes, next_id: 1, revision: 0, history: History::default() })
    }

    /// Builds a map from a parsed outline. The outline root becomes the map
    /// root; every other node gets `origin`. History starts empty.
    pub fn from_outline(tree: &OutlineTree, origin: NodeOrigin) -> Result<Self, MapError> {
        if origin == NodeOrigin::Root {
            return Err(MapError::InvalidOrigin);
        }
        let mut map = Self::new(&tree.text)?;
        let root = map.root;
        for child in &tree.children {
            let nodes = map.build_subtree(root, child, origin)?;
            let index = map.nodes[&root].children.len();
            map.attach(root, index, nodes);
        }
        map.assign_colors();
        Ok(map)
    }

    /// Reassembles a map from stored nodes, validating every invariant.
    /// Depths and colors must already be consistent.
    pub fn from_parts(root: NodeId, nodes: BTreeMap<NodeId, Node>) -> Result<Self, InvariantViolation> {
        let next_id = nodes.keys().next_back().map_or(0, |id| id.0 + 1);
        let map = Self { root, nodes, next_id, revision: 0, history: History::default() };
        map.check_invariants()?;
        Ok(map)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn root_node(&self) -> &Node {
        &self.nodes[&self.root]
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn get(&self, id: NodeId) -> Result<&Node, MapError> {
        self.nodes.get(&id).ok_or(MapError::UnknownNode(id))
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    /// Drops undo/redo state and resets the revision counter, as for a map
    /// freshly loaded from disk.
    pub fn reset_history(&mut self) {
        self.history = History::default();
        self.revision = 0;
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn max_depth(&self) -> u32 {
        self.nodes.values().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Node ids in pre-order, starting at the root.
    pub fn preorder(&self) -> Vec<NodeId> {
        self.preorder_from(self.root)
    }

    pub fn preorder_from(&self, start: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        if !self.nodes.contains_key(&start) {
            return out;
        }
        let mut stack = vec![start];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[&id].children.iter().rev().copied());
        }
        out
    }

    /// Ancestors of `id` ordered from the root down to its parent.
    pub fn ancestors(&self, id: NodeId) -> Result<Vec<NodeId>, MapError> {
        let mut chain = Vec::new();
        let mut cur = self.get(id)?.parent;
        while let Some(p) = cur {
            chain.push(p);
            cur = self.nodes[&p].parent;
        }
        chain.reverse();
        Ok(chain)
    }

    /// True if `candidate` is `ancestor` or lies below it.
    pub fn is_descendant_or_self(&self, candidate: NodeId, ancestor: NodeId) -> bool {
        let mut cur = Some(candidate);
        while let Some(id) = cur {
            if id == ancestor {
                return true;
            }
            cur = self.nodes.get(&id).and_then(|n| n.parent);
        }
        false
    }

    /// Number of nodes strictly below `id`.
    pub fn descendant_count(&self, id: NodeId) -> usize {
        self.preorder_from(id).len().saturating_sub(1)
    }

    /// Structural equality: same root and the same nodes with the same
    /// fields. Revision, history and the id counter are ignored.
    pub fn same_structure(&self, other: &MindMap) -> bool {
        self.root == other.root && self.nodes == other.nodes
    }

    /// Recomputes branch colors: the root's children get 0..n in sibling
    /// order and every deeper node inherits its depth-2 ancestor's index.
    pub fn assign_colors(&mut self) {
        let root = self.root;
        if let Some(r) = self.nodes.get_mut(&root) {
            r.color_index = 0;
        }
        let branches = self.nodes[&root].children.clone();
        for (index, branch) in branches.into_iter().enumerate() {
            for id in self.preorder_from(branch) {
                if let Some(n) = self.nodes.get_mut(&id) {
                    n.color_index = index as u32;
                }
            }
        }
    }

    /// Applies one edit and records it for undo. Clears the redo stack.
    pub fn apply(&mut self, cmd: EditCommand) -> Result<Applied, MapError> {
        let (change, created) = self.prepare(&cmd)?;
        self.perform(&change);
        self.history.record(change);
        self.revision += 1;
        Ok(Applied { revision: self.revision, created })
    }

    /// Convenience wrapper around [`EditCommand::SetCollapsed`].
    pub fn set_collapsed(&mut self, node: NodeId, flag: bool) -> Result<Applied, MapError> {
        self.apply(EditCommand::SetCollapsed { node, flag })
    }

    /// Attaches several outline subtrees under `parent` as a single history
    /// entry, so one undo removes all of them. Returns the ids of the
    /// top-level attached nodes in order.
    pub fn attach_batch(
        &mut self,
        parent: NodeId,
        subtrees: &[OutlineTree],
        origin: NodeOrigin,
    ) -> Result<Vec<NodeId>, MapError> {
        if origin == NodeOrigin::Root {
            return Err(MapError::InvalidOrigin);
        }
        self.get(parent)?;
        let start = self.nodes[&parent].children.len();
        let mut changes = Vec::with_capacity(subtrees.len());
        let mut created = Vec::with_capacity(subtrees.len());
        for (offset, tree) in subtrees.iter().enumerate() {
            let nodes = self.build_subtree(parent, tree, origin)?;
            created.push(nodes[0].id);
            changes.push(Change::Attach { parent, index: start + offset, nodes });
        }
        let change = Change::Batch(changes);
        self.perform(&change);
        self.history.record(change);
        self.revision += 1;
        Ok(created)
    }

    pub fn undo(&mut self) -> Result<u64, MapError> {
        let change = self.history.pop_undo().ok_or(MapError::NoHistory("undo"))?;
        let inverse = change.inverse();
        self.perform(&inverse);
        self.history.push_redo(change);
        self.revision += 1;
        Ok(self.revision)
    }

    pub fn redo(&mut self) -> Result<u64, MapError> {
        let change = self.history.pop_redo().ok_or(MapError::NoHistory("redo"))?;
        self.perform(&change);
        self.history.push_undo(change);
        self.revision += 1;
        Ok(self.revision)
    }

    /// Verifies the tree, depth and color laws plus origin and text rules.
    pub fn check_invariants(&self) -> Result<(), InvariantViolation> {
        let fail = |msg: String| Err(InvariantViolation(msg));
        let Some(root) = self.nodes.get(&self.root) else {
            return fail(format!("root {} missing", self.root));
        };
        if root.parent.is_some() || root.depth != 1 || root.origin != NodeOrigin::Root {
            return fail("root must have no parent, depth 1 and origin root".into());
        }
        if root.color_index != 0 {
            return fail("root color index must be 0".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut stack = vec![(self.root, None::<u32>)];
        while let Some((id, branch)) = stack.pop() {
            if !seen.insert(id) {
                return fail(format!("node {id} reachable twice"));
            }
            let Some(node) = self.nodes.get(&id) else {
                return fail(format!("dangling child reference {id}"));
            };
            if node.id != id {
                return fail(format!("node stored under {id} claims id {}", node.id));
            }
            if node.text.is_empty() || node.text.trim() != node.text || node.text.contains('\n') {
                return fail(format!("node {id} has invalid text"));
            }
            if id != self.root && node.origin == NodeOrigin::Root {
                return fail(format!("non-root node {id} has origin root"));
            }
            if let Some(b) = branch {
                if node.color_index != b {
                    return fail(format!("node {id} color {} differs from branch {b}", node.color_index));
                }
            }
            for (i, &child_id) in node.children.iter().enumerate() {
                let Some(child) = self.nodes.get(&child_id) else {
                    return fail(format!("dangling child reference {child_id}"));
                };
                if child.parent != Some(id) {
                    return fail(format!("node {child_id} parent pointer does not match"));
                }
                if child.depth != node.depth + 1 {
                    return fail(format!("node {child_id} depth {} under depth {}", child.depth, node.depth));
                }
                let child_branch = if id == self.root { i as u32 } else { branch.unwrap_or(0) };
                stack.push((child_id, Some(child_branch)));
            }
        }
        if seen.len() != self.nodes.len() {
            return fail(format!("{} nodes unreachable from root", self.nodes.len() - seen.len()));
        }
        Ok(())
    }

    fn alloc_id(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Allocates ids for an outline subtree destined for `parent`, returning
    /// detached nodes in pre-order. Depths are provisional until attached.
    fn build_subtree(
        &mut self,
        parent: NodeId,
        tree: &OutlineTree,
        origin: NodeOrigin,
    ) -> Result<Vec<Node>, MapError> {
        let text = normalize_text(&tree.text);
        if text.is_empty() {
            return Err(MapError::EmptyText);
        }
        let id = self.alloc_id();
        let mut out = vec![Node {
            id,
            text,
            depth: 0,
            parent: Some(parent),
            children: Vec::new(),
            collapsed: false,
            color_index: 0,
            origin,
        }];
        for child in &tree.children {
            let sub = self.build_subtree(id, child, origin)?;
            out[0].children.push(sub[0].id);
            out.extend(sub);
        }
        Ok(out)
    }

    fn attach(&mut self, parent: NodeId, index: usize, nodes: Vec<Node>) {
        let top = nodes[0].id;
        for mut node in nodes {
            if node.id == top {
                node.parent = Some(parent);
            }
            self.nodes.insert(node.id, node);
        }
        let siblings = &mut self.nodes.get_mut(&parent).expect("attach parent exists").children;
        let index = index.min(siblings.len());
        siblings.insert(index, top);
        self.recompute_depths(top);
    }

    fn detach(&mut self, node: NodeId) -> (NodeId, usize, Vec<Node>) {
        let parent = self.nodes[&node].parent.expect("detach target has a parent");
        let siblings = &mut self.nodes.get_mut(&parent).expect("parent exists").children;
        let index = siblings.iter().position(|&c| c == node).expect("child listed under parent");
        siblings.remove(index);
        let ids = self.preorder_from(node);
        let nodes = ids.iter().map(|id| self.nodes.remove(id).expect("subtree node exists")).collect();
        (parent, index, nodes)
    }

    fn recompute_depths(&mut self, top: NodeId) {
        let parent_depth = self.nodes[&top].parent.map_or(0, |p| self.nodes[&p].depth);
        let mut stack = vec![(top, parent_depth + 1)];
        while let Some((id, depth)) = stack.pop() {
            let node = self.nodes.get_mut(&id).expect("node exists");
            node.depth = depth;
            stack.extend(node.children.iter().map(|&c| (c, depth + 1)));
        }
    }
}

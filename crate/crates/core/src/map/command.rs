use serde::{Deserialize, Serialize};

use super::{normalize_text, MapError, MindMap, Node, NodeId, NodeOrigin};

/// A user-level edit request.
///
/// Positions are insertion indices into the parent's child list, clamped to
/// `[0, len]`; `None` appends.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditCommand {
    AddChild {
        parent: NodeId,
        text: String,
        #[serde(default = "user_added")]
        origin: NodeOrigin,
        #[serde(default)]
        position: Option<usize>,
    },
    DeleteSubtree {
        node: NodeId,
    },
    EditText {
        node: NodeId,
        new_text: String,
    },
    MoveSubtree {
        node: NodeId,
        new_parent: NodeId,
        #[serde(default)]
        position: Option<usize>,
    },
    SetCollapsed {
        node: NodeId,
        flag: bool,
    },
}

fn user_added() -> NodeOrigin {
    NodeOrigin::UserAdded
}

/// An applied mutation with all the state needed to invert it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Change {
    /// Insert a detached subtree (pre-order, first node is its top).
    Attach { parent: NodeId, index: usize, nodes: Vec<Node> },
    Detach { parent: NodeId, index: usize, nodes: Vec<Node> },
    SetText { node: NodeId, before: String, after: String },
    Move { node: NodeId, from: (NodeId, usize), to: (NodeId, usize) },
    SetCollapsed { node: NodeId, before: bool, after: bool },
    Batch(Vec<Change>),
}

impl Change {
    pub(crate) fn inverse(&self) -> Change {
        match self {
            Change::Attach { parent, index, nodes } => {
                Change::Detach { parent: *parent, index: *index, nodes: nodes.clone() }
            }
            Change::Detach { parent, index, nodes } => {
                Change::Attach { parent: *parent, index: *index, nodes: nodes.clone() }
            }
            Change::SetText { node, before, after } => {
                Change::SetText { node: *node, before: after.clone(), after: before.clone() }
            }
            Change::Move { node, from, to } => Change::Move { node: *node, from: *to, to: *from },
            Change::SetCollapsed { node, before, after } => {
                Change::SetCollapsed { node: *node, before: *after, after: *before }
            }
            Change::Batch(changes) => Change::Batch(changes.iter().rev().map(Change::inverse).collect()),
        }
    }
}

impl MindMap {
    /// Validates `cmd` against the current state and captures what is needed
    /// to apply and later invert it. Does not mutate the tree.
    pub(super) fn prepare(&mut self, cmd: &EditCommand) -> Result<(Change, Option<NodeId>), MapError> {
        match cmd {
            EditCommand::AddChild { parent, text, origin, position } => {
                let parent_node = self.get(*parent)?;
                let len = parent_node.children.len();
                if *origin == NodeOrigin::Root {
                    return Err(MapError::InvalidOrigin);
                }
                let text = normalize_text(text);
                if text.is_empty() {
                    return Err(MapError::EmptyText);
                }
                let index = position.map_or(len, |p| p.min(len));
                let id = self.alloc_id();
                let node = Node {
                    id,
                    text,
                    depth: 0,
                    parent: Some(*parent),
                    children: Vec::new(),
                    collapsed: false,
                    color_index: 0,
                    origin: *origin,
                };
                Ok((Change::Attach { parent: *parent, index, nodes: vec![node] }, Some(id)))
            }
            EditCommand::DeleteSubtree { node } => {
                let target = self.get(*node)?;
                let Some(parent) = target.parent else {
                    return Err(MapError::CannotDeleteRoot);
                };
                let index = self.nodes[&parent]
                    .children
                    .iter()
                    .position(|c| c == node)
                    .expect("child listed under parent");
                let nodes = self.preorder_from(*node).iter().map(|id| self.nodes[id].clone()).collect();
                Ok((Change::Detach { parent, index, nodes }, None))
            }
            EditCommand::EditText { node, new_text } => {
                let before = self.get(*node)?.text.clone();
                let after = normalize_text(new_text);
                if after.is_empty() {
                    return Err(MapError::EmptyText);
                }
                Ok((Change::SetText { node: *node, before, after }, None))
            }
            EditCommand::MoveSubtree { node, new_parent, position } => {
                let target = self.get(*node)?;
                self.get(*new_parent)?;
                let Some(old_parent) = target.parent else {
                    // The root has no parent to leave; any destination is inside it.
                    return Err(MapError::CycleError { node: *node, new_parent: *new_parent });
                };
                if self.is_descendant_or_self(*new_parent, *node) {
                    return Err(MapError::CycleError { node: *node, new_parent: *new_parent });
                }
                let from_index = self.nodes[&old_parent]
                    .children
                    .iter()
                    .position(|c| c == node)
                    .expect("child listed under parent");
                let mut len = self.nodes[new_parent].children.len();
                if *new_parent == old_parent {
                    len -= 1;
                }
                let to_index = position.map_or(len, |p| p.min(len));
                Ok((Change::Move { node: *node, from: (old_parent, from_index), to: (*new_parent, to_index) }, None))
            }
            EditCommand::SetCollapsed { node, flag } => {
                let before = self.get(*node)?.collapsed;
                Ok((Change::SetCollapsed { node: *node, before, after: *flag }, None))
            }
        }
    }

    /// Executes a prepared change. Changes come from `prepare` or from the
    /// history, so they always match the current state.
    pub(crate) fn perform(&mut self, change: &Change) {
        self.perform_inner(change);
        self.assign_colors();
    }

    fn perform_inner(&mut self, change: &Change) {
        match change {
            Change::Attach { parent, index, nodes } => self.attach(*parent, *index, nodes.clone()),
            Change::Detach { nodes, .. } => {
                self.detach(nodes[0].id);
            }
            Change::SetText { node, after, .. } => {
                self.nodes.get_mut(node).expect("node exists").text = after.clone();
            }
            Change::Move { node, to: (new_parent, index), .. } => {
                let (_, _, nodes) = self.detach(*node);
                self.attach(*new_parent, *index, nodes);
            }
            Change::SetCollapsed { node, after, .. } => {
                self.nodes.get_mut(node).expect("node exists").collapsed = *after;
            }
            Change::Batch(changes) => {
                for c in changes {
                    self.perform_inner(c);
                }
            }
        }
    }
}

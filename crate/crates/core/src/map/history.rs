use super::Change;

/// Undo and redo stacks. Recording a new change clears the redo stack.
#[derive(Clone, Debug, Default)]
pub struct History {
    undo: Vec<Change>,
    redo: Vec<Change>,
}

impl History {
    pub fn can_undo(&self) -> bool {
        !self.undo.is_empty()
    }

    pub fn can_redo(&self) -> bool {
        !self.redo.is_empty()
    }

    pub fn undo_len(&self) -> usize {
        self.undo.len()
    }

    pub fn redo_len(&self) -> usize {
        self.redo.len()
    }

    pub(crate) fn record(&mut self, change: Change) {
        self.undo.push(change);
        self.redo.clear();
    }

    pub(crate) fn pop_undo(&mut self) -> Option<Change> {
        self.undo.pop()
    }

    pub(crate) fn pop_redo(&mut self) -> Option<Change> {
        self.redo.pop()
    }

    pub(crate) fn push_undo(&mut self, change: Change) {
        self.undo.push(change);
    }

    pub(crate) fn push_redo(&mut self, change: Change) {
        self.redo.push(change);
    }
}

//! Versioned map documents on disk and outline export.
//!
//! A document is pretty-printed JSON with a fixed field order, so saving the
//! same map with the same metadata always produces the same bytes. Undo
//! history is not persisted.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::{MindMap, Node, NodeId, NodeOrigin};
use crate::outline::{serialize_outline, OutlineTree};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported document format version {0}")]
    Version(u64),
    #[error("corrupt document: {0}")]
    Corrupt(String),
}

/// Source of timestamps, injectable so tests get stable output.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FixedClock(pub DateTime<Utc>);

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Identity and timestamps stored alongside a map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DocumentMeta {
    pub map_id: String,
    pub created: String,
    pub modified: String,
}

impl DocumentMeta {
    pub fn new(map_id: impl Into<String>, clock: &dyn Clock) -> Self {
        let now = timestamp(clock.now());
        Self { map_id: map_id.into(), created: now.clone(), modified: now }
    }

    pub fn touch(&mut self, clock: &dyn Clock) {
        self.modified = timestamp(clock.now());
    }
}

/// One node with its subtree, as stored on disk and returned by the API.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub text: String,
    pub depth: u32,
    pub collapsed: bool,
    pub color_index: u32,
    pub origin: NodeOrigin,
    pub children: Vec<NodeRecord>,
}

impl NodeRecord {
    /// Record for `id` and its whole subtree. Panics if `id` is not in `map`.
    pub fn from_map(map: &MindMap, id: NodeId) -> Self {
        let node = map.node(id).expect("record for a node in the map");
        Self {
            id,
            text: node.text.clone(),
            depth: node.depth,
            collapsed: node.collapsed,
            color_index: node.color_index,
            origin: node.origin,
            children: node.children.iter().map(|&c| Self::from_map(map, c)).collect(),
        }
    }

    pub fn count(&self) -> usize {
        1 + self.children.iter().map(NodeRecord::count).sum::<usize>()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapDocument {
    pub format_version: u32,
    pub map_id: String,
    pub created: String,
    pub modified: String,
    pub root: NodeRecord,
}

impl MapDocument {
    pub fn from_map(map: &MindMap, meta: &DocumentMeta) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            map_id: meta.map_id.clone(),
            created: meta.created.clone(),
            modified: meta.modified.clone(),
            root: NodeRecord::from_map(map, map.root()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    /// Parses and validates a document. The version is checked before the
    /// rest of the shape so future formats fail with `Version`.
    pub fn from_json(text: &str) -> Result<Self, StoreError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| StoreError::Corrupt(e.to_string()))?;
        match value.get("format_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => return Err(StoreError::Version(v)),
            None => return Err(StoreError::Corrupt("missing format_version".into())),
        }
        let doc: MapDocument = serde_json::from_value(value).map_err(|e| StoreError::Corrupt(e.to_string()))?;
        for (name, ts) in [("created", &doc.created), ("modified", &doc.modified)] {
            DateTime::parse_from_rfc3339(ts).map_err(|e| StoreError::Corrupt(format!("{name} timestamp: {e}")))?;
        }
        Ok(doc)
    }

    pub fn meta(&self) -> DocumentMeta {
        DocumentMeta { map_id: self.map_id.clone(), created: self.created.clone(), modified: self.modified.clone() }
    }

    /// Rebuilds the map, rejecting any invariant violation.
    pub fn to_map(&self) -> Result<MindMap, StoreError> {
        let mut nodes = BTreeMap::new();
        let mut stack = vec![(&self.root, None)];
        while let Some((rec, parent)) = stack.pop() {
            let node = Node {
                id: rec.id,
                text: rec.text.clone(),
                depth: rec.depth,
                parent,
                children: rec.children.iter().map(|c| c.id).collect(),
                collapsed: rec.collapsed,
                color_index: rec.color_index,
                origin: rec.origin,
            };
            if nodes.insert(rec.id, node).is_some() {
                return Err(StoreError::Corrupt(format!("duplicate node id {}", rec.id)));
            }
            stack.extend(rec.children.iter().map(|c| (c, Some(rec.id))));
        }
        MindMap::from_parts(self.root.id, nodes).map_err(|e| StoreError::Corrupt(e.0))
    }
}

/// Writes the document atomically: a temporary sibling file is written,
/// synced and renamed over `path`.
pub fn save(map: &MindMap, meta: &DocumentMeta, path: &Path) -> Result<(), StoreError> {
    let io = |source| StoreError::Io { path: path.to_owned(), source };
    let data = MapDocument::from_map(map, meta).to_json();
    let file_name = path.file_name().ok_or_else(|| {
        io(std::io::Error::new(std::io::ErrorKind::InvalidInput, "path has no file name"))
    })?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(data.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

pub fn load(path: &Path) -> Result<(MindMap, DocumentMeta), StoreError> {
    let text = fs::read_to_string(path).map_err(|source| StoreError::Io { path: path.to_owned(), source })?;
    let doc = MapDocument::from_json(&text)?;
    Ok((doc.to_map()?, doc.meta()))
}

/// The map as an outline tree. Descendants of collapsed nodes are left out
/// unless `include_collapsed` is set.
pub fn outline_tree(map: &MindMap, include_collapsed: bool) -> OutlineTree {
    fn build(map: &MindMap, id: NodeId, include_collapsed: bool) -> OutlineTree {
        let node = map.node(id).expect("node in map");
        let children = if node.collapsed && !include_collapsed {
            Vec::new()
        } else {
            node.children.iter().map(|&c| build(map, c, include_collapsed)).collect()
        };
        OutlineTree { text: node.text.clone(), children }
    }
    build(map, map.root(), include_collapsed)
}

pub fn export_outline(map: &MindMap, include_collapsed: bool) -> String {
    serialize_outline(&outline_tree(map, include_collapsed))
}

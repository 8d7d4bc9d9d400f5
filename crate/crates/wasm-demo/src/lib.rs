//! Browser bindings for three offline operations: outline preview with
//! branch colors and a tiered layout, repetition scoring, and prompt
//! routing. Every function takes plain strings and returns a JSON string so
//! the page needs no bundler.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use nodemind_core::outline::{fragment_to_tree, parse_outline, validate_initial_map};
use nodemind_core::redundancy::{is_redundant, repetition_rate, tokenize};
use nodemind_core::{MindMap, NodeId, NodeOrigin, OutlineLimits, PromptConfig};

/// Horizontal distance between depth columns, in layout units.
pub const COLUMN_WIDTH: f64 = 220.0;
/// Vertical distance between adjacent leaves.
pub const ROW_HEIGHT: f64 = 44.0;

/// Node positions: depth picks the column, leaves are stacked in order and
/// every parent is centred on its children.
pub fn tiered_layout(map: &MindMap) -> Vec<(NodeId, f64, f64)> {
    fn place(map: &MindMap, id: NodeId, row: &mut f64, out: &mut Vec<(NodeId, f64, f64)>) -> f64 {
        let node = map.node(id).expect("node in map");
        let x = f64::from(node.depth - 1) * COLUMN_WIDTH;
        let slot = out.len();
        out.push((id, x, 0.0));
        let y = if node.children.is_empty() || node.collapsed {
            let y = *row * ROW_HEIGHT;
            *row += 1.0;
            y
        } else {
            let ys: Vec<f64> = node.children.iter().map(|&c| place(map, c, row, out)).collect();
            (ys[0] + ys[ys.len() - 1]) / 2.0
        };
        out[slot].2 = y;
        y
    }
    let mut out = Vec::with_capacity(map.len());
    place(map, map.root(), &mut 0.0, &mut out);
    out
}

pub fn outline_preview_value(text: &str) -> Value {
    let frag = match parse_outline(text) {
        Ok(f) => f,
        Err(e) => return json!({ "error": e.to_string() }),
    };
    let tree = match fragment_to_tree(&frag) {
        Ok(t) => t,
        Err(e) => return json!({ "error": e.to_string() }),
    };
    let map = match MindMap::from_outline(&tree, NodeOrigin::Generated) {
        Ok(m) => m,
        Err(e) => return json!({ "error": e.to_string() }),
    };
    let mut violations = frag.warnings;
    violations.extend(validate_initial_map(&tree, &OutlineLimits::default()));
    let nodes: Vec<Value> = tiered_layout(&map)
        .into_iter()
        .map(|(id, x, y)| {
            let n = map.node(id).expect("laid out node");
            json!({
                "id": id, "text": n.text, "depth": n.depth, "color_index": n.color_index,
                "parent": n.parent, "x": x, "y": y,
            })
        })
        .collect();
    json!({
        "nodes": nodes,
        "violations": violations.iter().map(|v| json!({
            "kind": v.kind.to_string(), "location": v.location, "detail": v.detail,
        })).collect::<Vec<_>>(),
    })
}

pub fn repetition_report_value(candidate: &str, references: &str, threshold: f64) -> Value {
    let refs: Vec<&str> = references.lines().filter(|l| !l.trim().is_empty()).collect();
    let known: std::collections::HashSet<String> = refs.iter().flat_map(|r| tokenize(r)).collect();
    let rate = repetition_rate(candidate, &refs);
    let tokens: Vec<Value> =
        tokenize(candidate).into_iter().map(|t| json!({ "repeated": known.contains(&t), "token": t })).collect();
    json!({ "rate": rate, "redundant": is_redundant(candidate, &refs, threshold), "tokens": tokens })
}

pub fn route_preview_value(query: &str) -> Value {
    match PromptConfig::default().build_generate_prompt(query) {
        Ok(bundle) => json!({ "category": bundle.category, "system": bundle.system }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

/// Parses an outline and returns nodes with colors and positions, plus any
/// format violations.
#[wasm_bindgen]
pub fn outline_preview(text: &str) -> String {
    outline_preview_value(text).to_string()
}

/// Scores `candidate` against newline-separated reference texts.
#[wasm_bindgen]
pub fn repetition_report(candidate: &str, references: &str, threshold: f64) -> String {
    repetition_report_value(candidate, references, threshold).to_string()
}

/// Shows which template a query is routed to and the system prompt it gets.
#[wasm_bindgen]
pub fn route_preview(query: &str) -> String {
    route_preview_value(query).to_string()
}

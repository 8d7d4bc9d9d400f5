use nodemind_wasm_demo::{outline_preview, outline_preview_value, repetition_report_value, route_preview_value, COLUMN_WIDTH, ROW_HEIGHT};
use serde_json::Value;

const OUTLINE: &str = "# Surrealism\n## Major artists\n### Salvador Dali\n### Max Ernst\n## Core ideas\n### Automatism\n### Dreams";

#[test]
fn preview_places_nodes_in_depth_columns() {
    let v = outline_preview_value(OUTLINE);
    let nodes = v["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 7);
    for n in nodes {
        assert_eq!(n["x"].as_f64().unwrap(), (n["depth"].as_f64().unwrap() - 1.0) * COLUMN_WIDTH);
    }
    let y = |text: &str| nodes.iter().find(|n| n["text"] == text).unwrap()["y"].as_f64().unwrap();
    let leaves = ["Salvador Dali", "Max Ernst", "Automatism", "Dreams"];
    for (i, leaf) in leaves.iter().enumerate() {
        assert_eq!(y(leaf), i as f64 * ROW_HEIGHT);
    }
    assert_eq!(y("Major artists"), (y("Salvador Dali") + y("Max Ernst")) / 2.0);
    assert_eq!(y("Surrealism"), (y("Major artists") + y("Core ideas")) / 2.0);
}

#[test]
fn preview_reports_colors_and_violations() {
    let v = outline_preview_value(OUTLINE);
    let color = |text: &str| v["nodes"].as_array().unwrap().iter().find(|n| n["text"] == text).unwrap()["color_index"].clone();
    assert_eq!(color("Max Ernst"), color("Major artists"));
    assert_ne!(color("Automatism"), color("Max Ernst"));
    let kinds: Vec<&str> = v["violations"].as_array().unwrap().iter().map(|x| x["kind"].as_str().unwrap()).collect();
    assert!(kinds.contains(&"LeafTooShort"), "{kinds:?}");
}

#[test]
fn preview_errors_are_reported_in_json() {
    let v: Value = serde_json::from_str(&outline_preview("just prose")).unwrap();
    assert!(v["error"].is_string());
    let v = outline_preview_value("# One\n# Two");
    assert!(v["error"].as_str().unwrap().contains("top-level"), "{v}");
}

#[test]
fn repetition_marks_shared_tokens() {
    let v = repetition_report_value("Melting clocks in the desert", "The desert at dawn\nClocks everywhere", 0.5);
    assert_eq!(v["rate"], 0.6);
    assert_eq!(v["redundant"], true);
    let marks: Vec<bool> = v["tokens"].as_array().unwrap().iter().map(|t| t["repeated"].as_bool().unwrap()).collect();
    assert_eq!(marks, vec![false, true, false, true, true]);
    let v = repetition_report_value("Entirely new words", "", 0.5);
    assert_eq!((v["rate"].as_f64(), v["redundant"].as_bool()), (Some(0.0), Some(false)));
}

#[test]
fn routing_preview_shows_category_and_prompt() {
    let v = route_preview_value("Recommend an app for focus");
    assert_eq!(v["category"], "app_recommendation");
    assert!(v["system"].as_str().unwrap().contains("Recommend an app for focus"));
    assert_eq!(route_preview_value("how to train a parrot")["category"], "fallback");
    assert!(route_preview_value("  ")["error"].is_string());
}

use chrono::{DateTime, Utc};
use nodemind_core::store::{self, DocumentMeta, FixedClock, StoreError};
use nodemind_core::{EditCommand, MindMap, NodeOrigin};

fn clock() -> FixedClock {
    FixedClock(DateTime::parse_from_rfc3339("2026-10-15T12:00:00Z").unwrap().with_timezone(&Utc))
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("nodemind-store-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn sample() -> MindMap {
    let mut m = MindMap::new("Surrealism").unwrap();
    let root = m.root();
    for text in ["Key figures", "Core ideas", "Legacy"] {
        m.apply(EditCommand::AddChild { parent: root, text: text.into(), origin: NodeOrigin::Generated, position: None })
            .unwrap();
    }
    m
}

#[test]
fn double_save_is_byte_identical() {
    let dir = scratch("double");
    let map = sample();
    let meta = DocumentMeta::new("map-1", &clock());
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    store::save(&map, &meta, &a).unwrap();
    let first = std::fs::read(&a).unwrap();
    store::save(&map, &meta, &a).unwrap();
    assert_eq!(first, std::fs::read(&a).unwrap());
    store::save(&map, &meta, &b).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());
    // No temporary files left behind.
    let names: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 2, "{names:?}");
}

#[test]
fn save_load_fixpoint() {
    let dir = scratch("fixpoint");
    let path = dir.join("m.json");
    let map = sample();
    store::save(&map, &DocumentMeta::new("m", &clock()), &path).unwrap();
    let bytes1 = std::fs::read(&path).unwrap();
    let (loaded, meta) = store::load(&path).unwrap();
    assert!(loaded.same_structure(&map));
    assert!(!loaded.history().can_undo());
    store::save(&loaded, &meta, &path).unwrap();
    assert_eq!(bytes1, std::fs::read(&path).unwrap());
}

#[test]
fn unwritable_location_is_io_error() {
    let dir = scratch("ro");
    let blocker = dir.join("not-a-dir");
    std::fs::write(&blocker, "x").unwrap();
    let err = store::save(&sample(), &DocumentMeta::new("m", &clock()), &blocker.join("m.json")).unwrap_err();
    assert!(matches!(err, StoreError::Io { .. }), "{err}");
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(store::load(std::path::Path::new("/nonexistent/map.json")), Err(StoreError::Io { .. })));
}

#[test]
fn touch_changes_only_modified() {
    let mut meta = DocumentMeta::new("m", &clock());
    let later = FixedClock(DateTime::parse_from_rfc3339("2026-10-16T08:00:00Z").unwrap().with_timezone(&Utc));
    meta.touch(&later);
    assert_eq!(meta.created, "2026-10-15T12:00:00Z");
    assert_eq!(meta.modified, "2026-10-16T08:00:00Z");
}

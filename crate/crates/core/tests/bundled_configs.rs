use std::fs;
use std::path::PathBuf;

use vzsim::config::load_config;

fn bundled() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
}

#[test]
fn bundled_configs_validate_and_are_canonical() {
    let paths = bundled();
    assert_eq!(paths.len(), 3);
    for path in paths {
        let cfg = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate().unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(cfg.to_json(), text, "{} is not in canonical form", path.display());
    }
}

#![allow(dead_code)]

use std::path::PathBuf;

use invlab::document::{load_validate, parse_table, set_path, validate_table};
use invlab::Scenario;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.scenario"))
}

pub fn load(name: &str) -> Scenario {
    load_validate(scenario_path(name)).unwrap().build().unwrap()
}

/// Loads a fixture with some keys replaced, each value given as TOML text.
pub fn load_with(name: &str, edits: &[(&str, &str)]) -> Scenario {
    let text = std::fs::read_to_string(scenario_path(name)).unwrap();
    let mut table = parse_table(&text).unwrap();
    for (path, value) in edits {
        set_path(&mut table, path, invlab::document::parse_value(value).unwrap()).unwrap();
    }
    validate_table(table).unwrap().build().unwrap()
}

#![allow(dead_code)]

use std::path::PathBuf;

use dioc::ast::{annotate, DiocProcess, GlobalState, UpdateSet};
use dioc::dioc_sem::{DiocSystem, HostEnv};
use dioc::parser::{parse_dioc, parse_update, SourceFile};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn program(name: &str) -> DiocProcess {
    let src = SourceFile::read(&fixtures().join("corpus").join(name)).unwrap();
    annotate(&parse_dioc(&src).unwrap())
}

pub fn update(name: &str) -> (String, DiocProcess) {
    let src = SourceFile::read(&fixtures().join("updates").join(name)).unwrap();
    parse_update(&src).unwrap()
}

pub fn all_updates() -> UpdateSet {
    let mut names: Vec<String> = std::fs::read_dir(fixtures().join("updates"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".upd"))
        .collect();
    names.sort();
    UpdateSet::new(names.iter().map(|n| update(n)).collect())
}

pub fn corpus() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(fixtures().join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".dioc"))
        .collect();
    names.sort();
    names
}

pub fn host() -> HostEnv {
    let f = std::fs::read_to_string(fixtures().join("host.json")).unwrap();
    let i = std::fs::read_to_string(fixtures().join("inputs.json")).unwrap();
    HostEnv { functions: HostEnv::functions_from_json(&f).unwrap(), inputs: HostEnv::inputs_from_json(&i).unwrap() }
}

pub fn system(name: &str, updates: UpdateSet) -> DiocSystem {
    DiocSystem::new(program(name), GlobalState::default(), updates)
}

use std::path::PathBuf;

use pydioc::{Choreography, Network};

fn fixture(rel: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel);
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn choreography_wrapper_checks_and_projects() {
    let c = Choreography::parse(&fixture("corpus/buying.dioc")).unwrap();
    assert_eq!(c.roles(), ["bank", "buyer", "seller"]);
    assert!(c.is_connected());
    let n = c.project();
    assert_eq!(n.roles(), ["bank", "buyer", "seller"]);
    assert!(n.processes()["bank"].starts_with("o*_12 : x_12 from buyer"));
    assert!(n.annotation_violations().is_empty());
}

#[test]
fn disconnected_program_lists_violations() {
    let c = Choreography::parse(&fixture("bad/seq_violation.dioc")).unwrap();
    assert!(!c.is_connected());
    assert_eq!(c.violations().len(), 1);
    assert!(c.violations()[0].contains("SEQ-CONN"));
}

#[test]
fn network_wrapper_parses_endpoint_text() {
    let n = Network::parse(&fixture("bad/lone_receive.dpoc")).unwrap();
    assert_eq!(n.roles(), ["a", "b"]);
}

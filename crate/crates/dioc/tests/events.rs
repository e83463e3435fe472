mod common;

use common::{corpus, program};
use dioc::ast::GlobalState;
use dioc::events::{check_projection_events, check_well_annotated_dpoc, events_dioc, events_dpoc, leq_dioc, leq_dpoc, Condition};
use dioc::parser::parse_dpoc_network;
use dioc::projection::proj;

#[test]
fn every_choreography_event_survives_projection() {
    for name in corpus() {
        let p = program(&name);
        let net = proj(&p, &GlobalState::default());
        let dpoc = events_dpoc(&net);
        for e in events_dioc(&p) {
            assert!(dpoc.contains(&e), "{name}: {e} missing");
        }
    }
}

#[test]
fn choreography_order_is_kept_up_to_partners() {
    for name in corpus() {
        let p = program(&name);
        let net = proj(&p, &GlobalState::default());
        let d = leq_dioc(&p);
        let n = leq_dpoc(&net);
        for (a, b) in d.pairs() {
            let kept = n.leq(&a, &b) || n.partners(&b).iter().any(|bb| n.leq(&a, bb));
            assert!(kept, "{name}: {a} <= {b} lost");
        }
        assert!(check_projection_events(&p, &net).is_ok());
    }
}

#[test]
fn repeated_unordered_sends_break_send_order() {
    let net = parse_dpoc_network(
        "role a { { go : 1 to b | go : 2 to b } }\nrole b { go : x from a; go : y from a }",
    )
    .unwrap();
    let report = check_well_annotated_dpoc(&net);
    assert!(report.violations.iter().any(|v| v.condition == Condition::SendOrder), "{}", report.to_json());
}

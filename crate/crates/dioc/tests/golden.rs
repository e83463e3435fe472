mod common;

use std::path::Path;

use common::{fixtures, host, program, update};
use dioc::ast::{DpocProcess, GlobalState, LocalState, Role, UpdateSet};
use dioc::dioc_sem::{dioc_enabled, DiocSystem, Label};
use dioc::dpoc_sem::{system_enabled, DpocSystem};
use dioc::parser::{parse_dioc, parse_dpoc_process, SourceFile};
use dioc::projection::{proj, Network};
use dioc::verify::{canonical_text, simplify_network, unprefix_network, upd_normalize};

fn golden(rel: &str) -> DpocProcess {
    let path = fixtures().join("golden").join(rel);
    let text = std::fs::read_to_string(&path).unwrap();
    parse_dpoc_process(&text).unwrap_or_else(|d| panic!("{}: {d:?}", path.display()))
}

fn role_text(net: &Network, role: &str) -> String {
    canonical_text(net.proc(&Role::new(role)).expect("role present"))
}

fn price_scope() -> DiocSystem {
    let src = SourceFile::read(Path::new(&fixtures().join("programs/price_scope.dioc"))).unwrap();
    let p = parse_dioc(&src).unwrap();
    assert!(p.is_well_annotated());
    DiocSystem::new(p, GlobalState::default(), UpdateSet::new(vec![update("fidelity_card.upd")]))
}

fn projected(sys: &DiocSystem) -> DpocSystem {
    DpocSystem::new(proj(&sys.proc, &sys.state), sys.updates.clone()).with_allocator(sys.next_index)
}

fn step(sys: &DpocSystem, pick: impl Fn(&Label) -> bool) -> DpocSystem {
    let next: Vec<_> = system_enabled(sys, &host()).into_iter().filter(|(l, _)| pick(l)).collect();
    assert_eq!(next.len(), 1, "expected exactly one matching transition");
    next.into_iter().next().unwrap().1
}

fn is_update(l: &Label) -> bool {
    matches!(l, Label::AppliedUpdate { name } if name.as_ref() == "fidelity_card")
}

fn is_ho(l: &Label) -> bool {
    matches!(l, Label::HigherOrder { .. })
}

fn network_of(pairs: &[(&str, DpocProcess)]) -> Network {
    let mut n = Network::default();
    for (r, p) in pairs {
        n.insert(Role::new(r), p.clone(), LocalState::default());
    }
    n
}

#[test]
fn buying_projection_matches_golden_files() {
    let net = proj(&program("buying.dioc"), &GlobalState::default());
    assert_eq!(net.roles.len(), 3);
    for role in ["buyer", "seller", "bank"] {
        let expected = canonical_text(&golden(&format!("buying/{role}.dpoc")));
        assert_eq!(role_text(&net, role), expected, "role {role}");
    }
}

#[test]
fn golden_files_reject_a_wrong_projection() {
    let net = proj(&program("buying.dioc"), &GlobalState::default());
    assert_ne!(role_text(&net, "buyer"), canonical_text(&golden("buying/seller.dpoc")));
}

#[test]
fn lead_up_produces_the_shipping_coordinator() {
    let after = step(&projected(&price_scope()), is_update);
    let plain = unprefix_network(&after.network);
    assert_eq!(role_text(&plain, "seller"), canonical_text(&golden("update/seller_update.dpoc")));
}

#[test]
fn lead_up_prefixes_the_coordinator_code() {
    let after = step(&projected(&price_scope()), is_update);
    let text = canonical_text(after.network.proc(&Role::new("seller")).unwrap());
    assert!(text.contains("6.cardReq"), "{text}");
}

#[test]
fn synch_up_installs_the_shipped_code() {
    let after = step(&step(&projected(&price_scope()), is_update), is_ho);
    let plain = unprefix_network(&after.network);
    assert_eq!(role_text(&plain, "buyer"), canonical_text(&golden("update/buyer_update.dpoc")));
}

#[test]
fn normalised_update_state_matches_golden_files() {
    let after = step(&projected(&price_scope()), is_update);
    let got = upd_normalize(&after.network);
    let expected = upd_normalize(&network_of(&[
        ("seller", golden("update/seller_update.dpoc")),
        ("buyer", golden("update/buyer_before.dpoc")),
    ]));
    for role in ["seller", "buyer"] {
        assert_eq!(role_text(&got, role), role_text(&expected, role), "role {role}");
    }
    assert!(role_text(&got, "buyer").contains("cardRes : card_id to seller"));
}

#[test]
fn normalised_update_state_is_the_projection_of_the_updated_choreography() {
    let dioc = price_scope();
    let after = step(&projected(&dioc), is_update);
    let (_, updated) = dioc_enabled(&dioc, &host()).into_iter().find(|(l, _)| is_update(l)).unwrap();
    let expected = simplify_network(&proj(&updated.proc, &updated.state));
    let got = upd_normalize(&after.network);
    for role in ["seller", "buyer"] {
        assert_eq!(role_text(&got, role), role_text(&expected, role), "role {role}");
    }
}

#[test]
fn no_update_branch_matches_golden_files() {
    let after = step(&projected(&price_scope()), |l| matches!(l, Label::NoUp));
    assert_eq!(role_text(&after.network, "seller"), canonical_text(&golden("update/seller_noup.dpoc")));
    let delivered = step(&after, is_ho);
    assert_eq!(role_text(&delivered.network, "buyer"), canonical_text(&golden("update/buyer_noup.dpoc")));
    let got = upd_normalize(&after.network);
    let expected = upd_normalize(&network_of(&[
        ("seller", golden("update/seller_noup.dpoc")),
        ("buyer", golden("update/buyer_before.dpoc")),
    ]));
    for role in ["seller", "buyer"] {
        assert_eq!(role_text(&got, role), role_text(&expected, role), "role {role}");
    }
}

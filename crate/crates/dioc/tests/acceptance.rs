//! Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::{all_updates, corpus, fixtures, host, program, system, update};
use dioc::ast::{DpocProcess, GlobalState, Role, UpdateSet};
use dioc::connectedness::{check_connected, naive_connected, pair_cover_check, PairSet};
use dioc::dioc_sem::{dioc_enabled, DiocSystem, Label};
use dioc::dpoc_sem::{system_enabled, DpocSystem};
use dioc::events::{check_minimal_transitions, check_projection_events, check_well_annotated_dpoc};
use dioc::gen::{random_pair_set, random_program, synthetic_program};
use dioc::parser::{parse_dioc, parse_dpoc_process, SourceFile};
use dioc::projection::{proj, Network, ProjectionMutation};
use dioc::verify::{canonical_text, check_equiv, check_freedom, simplify_network, unprefix_network, upd_normalize, ExploreOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden(rel: &str) -> DpocProcess {
    let text = std::fs::read_to_string(fixtures().join("golden").join(rel)).unwrap();
    parse_dpoc_process(&text).unwrap()
}

fn role_text(net: &Network, role: &str) -> String {
    canonical_text(net.proc(&Role::new(role)).expect("role present"))
}

fn update_sets() -> Vec<(&'static str, UpdateSet)> {
    vec![("no updates", UpdateSet::empty()), ("all updates", all_updates())]
}

fn golden_projection() -> Outcome {
    let start = Instant::now();
    let net = proj(&program("buying.dioc"), &GlobalState::default());
    ensure(net.roles.len() == 3, || format!("{} roles", net.roles.len()))?;
    for role in ["buyer", "seller", "bank"] {
        let expected = canonical_text(&golden(&format!("buying/{role}.dpoc")));
        ensure(role_text(&net, role) == expected, || format!("{role} differs from its golden file"))?;
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(1), || format!("took {t:?}"))?;
    Ok(format!("3 roles match in {t:?}"))
}

fn bounded_equivalence() -> Outcome {
    let start = Instant::now();
    let names = corpus();
    ensure(names.len() >= 10, || format!("only {} corpus programs", names.len()))?;
    let mut runs = 0;
    let mut sets = update_sets();
    sets.push(("fidelity card", UpdateSet::new(vec![update("fidelity_card.upd")])));
    for name in &names {
        for (label, upd) in &sets {
            let sys = system(name, upd.clone());
            let r = check_equiv(&sys, &host(), &ExploreOptions::default(), None).map_err(|e| format!("{name}: {e}"))?;
            ensure(r.is_equivalent(), || format!("{name} with {label}: {}", r.to_json()))?;
            runs += 1;
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(30), || format!("took {t:?}"))?;
    Ok(format!("{} programs, {runs} comparisons equal in {t:?}", names.len()))
}

fn mutation_sensitivity() -> Outcome {
    let mut caught = Vec::new();
    for m in ProjectionMutation::ALL {
        let mut hit = None;
        'search: for name in corpus() {
            for (label, upd) in update_sets() {
                let sys = system(&name, upd);
                let r = check_equiv(&sys, &host(), &ExploreOptions::default(), Some(m)).map_err(|e| e.to_string())?;
                if !r.is_equivalent() && !r.to_json()["counterexample"].is_null() {
                    hit = Some(format!("{m:?} on {name} ({label})"));
                    break 'search;
                }
            }
        }
        caught.push(hit.ok_or_else(|| format!("{m:?} is not detected"))?);
    }
    Ok(caught.join("; "))
}

fn naive_cover(s: &PairSet, t: &PairSet) -> bool {
    s.iter().all(|x| t.iter().all(|y| x.a == y.a || x.a == y.b || x.b == y.a || x.b == y.b))
}

fn oracle_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut disagree, mut connected) = (0, 0);
    for _ in 0..1000 {
        let size = rng.gen_range(1..=200);
        let roles = rng.gen_range(2..=5);
        let p = random_program(&mut rng, size, roles, 4);
        let fast = check_connected(&p).connected;
        connected += usize::from(fast);
        disagree += usize::from(fast != naive_connected(&p));
    }
    let mut pair_disagree = 0;
    for _ in 0..1000 {
        let roles = rng.gen_range(2..=14);
        let s = random_pair_set(&mut rng, roles, 24);
        let t = random_pair_set(&mut rng, roles, 24);
        pair_disagree += usize::from(pair_cover_check(&s, &t) != naive_cover(&s, &t));
    }
    ensure(disagree == 0 && pair_disagree == 0, || format!("{disagree} program and {pair_disagree} pair-set disagreements"))?;
    Ok(format!("1000 programs ({connected} connected) and 1000 set pairs, no disagreement"))
}

fn time_check(n: usize) -> Duration {
    let p = synthetic_program(n);
    let mut samples: Vec<Duration> = (0..5)
        .map(|_| {
            let start = Instant::now();
            assert!(check_connected(&p).connected);
            start.elapsed()
        })
        .collect();
    samples.sort();
    samples[2]
}

fn scaling() -> Outcome {
    let sizes = [2_000, 4_000, 8_000, 16_000];
    let times: Vec<Duration> = sizes.iter().map(|&n| time_check(n)).collect();
    let ratios: Vec<f64> = times.windows(2).map(|w| w[1].as_secs_f64() / w[0].as_secs_f64()).collect();
    let shown = format!("times {times:?}, ratios {ratios:.2?}");
    ensure(ratios.iter().all(|&r| r <= 4.4), || shown.clone())?;
    ensure(times[3] < Duration::from_secs(10), || shown.clone())?;
    Ok(shown)
}

fn freedom() -> Outcome {
    let mut states = 0;
    for name in corpus() {
        for (label, upd) in update_sets() {
            let d = system(&name, upd);
            let net = proj(&d.proc, &d.state);
            let sys = DpocSystem::new(net, d.updates.clone()).with_allocator(d.next_index);
            let r = check_freedom(&sys, &host(), &ExploreOptions::default());
            ensure(r.all_pass() && !r.partial, || format!("{name} with {label}: {}", r.to_json()))?;
            states += r.states;
        }
    }
    Ok(format!("deadlock, race and orphan free over {states} states"))
}

fn price_scope() -> DiocSystem {
    let src = SourceFile::read(Path::new(&fixtures().join("programs/price_scope.dioc"))).unwrap();
    let p = parse_dioc(&src).unwrap();
    DiocSystem::new(p, GlobalState::default(), UpdateSet::new(vec![update("fidelity_card.upd")]))
}

fn step(sys: &DpocSystem, pick: impl Fn(&Label) -> bool) -> Result<DpocSystem, String> {
    let mut next: Vec<_> = system_enabled(sys, &host()).into_iter().filter(|(l, _)| pick(l)).collect();
    ensure(next.len() == 1, || format!("{} matching transitions", next.len()))?;
    Ok(next.remove(0).1)
}

fn network_of(pairs: &[(&str, DpocProcess)]) -> Network {
    let mut n = Network::default();
    for (r, p) in pairs {
        n.insert(Role::new(r), p.clone(), Default::default());
    }
    n
}

fn running_update() -> Outcome {
    let dioc = price_scope();
    let start = DpocSystem::new(proj(&dioc.proc, &dioc.state), dioc.updates.clone()).with_allocator(dioc.next_index);
    let branches: [(&str, &str, fn(&Label) -> bool); 2] = [
        ("update", "seller_update.dpoc", |l| matches!(l, Label::AppliedUpdate { .. })),
        ("no update", "seller_noup.dpoc", |l| matches!(l, Label::NoUp)),
    ];
    for (what, seller_file, pick) in branches {
        let after = step(&start, pick)?;
        let seller = golden(&format!("update/{seller_file}"));
        ensure(role_text(&unprefix_network(&after.network), "seller") == canonical_text(&seller), || {
            format!("{what}: seller after the coordinator's decision differs")
        })?;
        let got = upd_normalize(&after.network);
        let expected = upd_normalize(&network_of(&[("seller", seller), ("buyer", golden("update/buyer_before.dpoc"))]));
        for role in ["seller", "buyer"] {
            ensure(role_text(&got, role) == role_text(&expected, role), || format!("{what}: normalised {role} differs"))?;
        }
        let (_, reduced) = dioc_enabled(&dioc, &host()).into_iter().find(|(l, _)| pick(l)).ok_or("no choreography step")?;
        let reference = simplify_network(&proj(&reduced.proc, &reduced.state));
        for role in ["seller", "buyer"] {
            ensure(role_text(&got, role) == role_text(&reference, role), || {
                format!("{what}: normalised {role} is not the projection of the reduced choreography")
            })?;
        }
    }
    Ok("update and no-update branches match after normalisation".into())
}

fn event_structures() -> Outcome {
    let mut states = 0;
    let mut events = 0;
    for name in corpus() {
        let p = program(&name);
        let net = proj(&p, &GlobalState::default());
        let pe = check_projection_events(&p, &net);
        ensure(pe.missing.is_empty(), || format!("{name}: missing events {:?}", pe.missing))?;
        ensure(pe.unordered.is_empty(), || format!("{name}: order lost {:?}", pe.unordered))?;
        let wa = check_well_annotated_dpoc(&net);
        ensure(wa.is_ok(), || format!("{name}: {}", wa.to_json()))?;
        events += wa.events;
        for (label, upd) in update_sets() {
            let sys = DpocSystem::new(net.clone(), upd).with_allocator(p.max_index() + 1);
            let dy = check_minimal_transitions(&sys, &host(), &ExploreOptions::default());
            ensure(dy.is_ok(), || format!("{name} with {label}: {:?}", dy.violations.first().map(|v| v.to_string())))?;
            states += dy.states_checked;
        }
    }
    Ok(format!("{events} projected events well annotated, {states} states with minimal enabled events"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("golden projection", golden_projection),
        ("bounded weak-trace equivalence", bounded_equivalence),
        ("mutation sensitivity", mutation_sensitivity),
        ("connectedness oracle agreement", oracle_agreement),
        ("connectedness check scaling", scaling),
        ("deadlock, race and orphan freedom", freedom),
        ("running update example", running_update),
        ("event-structure properties", event_structures),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Bounded verification.
//!
//! Weak traces hide τ steps and communications on private operations, and
//! strip scope prefixes from operations. Two systems are compared by
//! exploring their determinized weak transition structures in lockstep: a
//! *macro-state* is the set of concrete states reachable through silent
//! steps, and at each depth both sides must offer the same visible labels.
//! This is exactly equality of the prefix-closed weak trace sets up to the
//! depth bound.
//!
//! The freedom checks explore the concrete state space of an endpoint
//! system and report deadlocks, races and orphan messages with a witness
//! trace.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::hash::Hash;
use std::sync::Arc;

use serde_json::{json, Value as Json};

use crate::ast::{
    DpocProcess as P, Expr, HoPayload, Role, UpdateSet, Value, AUX_VAR_PREFIX,
    DISCARD_VAR, OK_TOKEN,
};
use crate::connectedness::check_connected;
use crate::dioc_sem::{dioc_step, DiocSystem, HostEnv, Label, Schedule, Step};
use crate::dpoc_sem::{combine, dpoc_step, network_offers, DpocSystem, Offer};
use crate::parser::{pretty_dpoc, Diagnostic};
use crate::projection::{proj_with, Network, ProjectionMutation};
use crate::term::leaves;

/// Strip scope prefixes from the operation of a label.
pub fn strip_label(l: &Label) -> Label {
    match l {
        Label::Interaction { op, from, value, to, var } => Label::Interaction {
            op: op.unprefixed(),
            from: from.clone(),
            value: value.clone(),
            to: to.clone(),
            var: var.clone(),
        },
        Label::HigherOrder { op, from, to, payload } => {
            Label::HigherOrder { op: op.unprefixed(), from: from.clone(), to: to.clone(), payload: *payload }
        }
        other => other.clone(),
    }
}

/// The weak trace of a trace.
pub fn weaken(t: &[Label]) -> Vec<Label> {
    t.iter().filter(|l| !l.is_silent()).map(strip_label).collect()
}

// ---------------------------------------------------------------------------
// Normal forms of endpoint processes

/// Remove neutral `1`s from sequences and parallel compositions.
pub fn simplify(p: &P) -> P {
    match p {
        P::Seq(a, b) => match (simplify(a), simplify(b)) {
            (P::One, q) | (q, P::One) => q,
            (x, y) => P::seq(x, y),
        },
        P::Par(a, b) => match (simplify(a), simplify(b)) {
            (P::One, q) | (q, P::One) => q,
            (x, y) => P::par(x, y),
        },
        P::If { index, guard, then, els } => P::If {
            index: *index,
            guard: guard.clone(),
            then: Arc::new(simplify(then)),
            els: Arc::new(simplify(els)),
        },
        P::While { index, guard, body } => P::While { index: *index, guard: guard.clone(), body: Arc::new(simplify(body)) },
        P::ScopeLead { index, coordinator, body, roles, name } => P::ScopeLead {
            index: *index,
            coordinator: coordinator.clone(),
            body: Arc::new(simplify(body)),
            roles: roles.clone(),
            name: name.clone(),
        },
        P::ScopePlain { index, coordinator, body, name } => P::ScopePlain {
            index: *index,
            coordinator: coordinator.clone(),
            body: Arc::new(simplify(body)),
            name: name.clone(),
        },
        P::SendHo { index, op, payload: HoPayload::Code(c), to, ack } => P::SendHo {
            index: *index,
            op: op.clone(),
            payload: HoPayload::Code(Arc::new(simplify(c))),
            to: to.clone(),
            ack: *ack,
        },
        other => other.clone(),
    }
}

fn seq_items(p: &P, out: &mut Vec<P>) {
    match p {
        P::Seq(a, b) => {
            seq_items(a, out);
            seq_items(b, out);
        }
        other => out.push(other.clone()),
    }
}

fn par_items(p: &P, out: &mut Vec<P>) {
    match p {
        P::Par(a, b) => {
            par_items(a, out);
            par_items(b, out);
        }
        other => out.push(other.clone()),
    }
}

/// Canonical shape for structural comparison: neutral `1`s removed,
/// sequences right-nested, parallel components sorted by their text.
pub fn canonical(p: &P) -> P {
    fn go(p: &P) -> P {
        match p {
            P::Seq(..) => {
                let mut items = Vec::new();
                seq_items(p, &mut items);
                P::seq_all(items.iter().map(go).collect())
            }
            P::Par(..) => {
                let mut items = Vec::new();
                par_items(p, &mut items);
                let mut items: Vec<(String, P)> = items
                    .iter()
                    .map(go)
                    .map(|q| (pretty_dpoc(&q), q))
                    .collect();
                items.sort_by(|a, b| a.0.cmp(&b.0));
                P::par_all(items.into_iter().map(|(_, q)| q).collect())
            }
            P::If { index, guard, then, els } => {
                P::If { index: *index, guard: guard.clone(), then: Arc::new(go(then)), els: Arc::new(go(els)) }
            }
            P::While { index, guard, body } => P::While { index: *index, guard: guard.clone(), body: Arc::new(go(body)) },
            P::ScopeLead { index, coordinator, body, roles, name } => P::ScopeLead {
                index: *index,
                coordinator: coordinator.clone(),
                body: Arc::new(go(body)),
                roles: roles.clone(),
                name: name.clone(),
            },
            P::ScopePlain { index, coordinator, body, name } => P::ScopePlain {
                index: *index,
                coordinator: coordinator.clone(),
                body: Arc::new(go(body)),
                name: name.clone(),
            },
            P::SendHo { index, op, payload: HoPayload::Code(c), to, ack } => P::SendHo {
                index: *index,
                op: op.clone(),
                payload: HoPayload::Code(Arc::new(go(c))),
                to: to.clone(),
                ack: *ack,
            },
            other => other.clone(),
        }
    }
    go(&simplify(p))
}

/// Text of the canonical shape; indexes other than scope indexes are not
/// printed, so two processes with the same text are structurally equal.
pub fn canonical_text(p: &P) -> String {
    pretty_dpoc(&canonical(p))
}

fn map_process(p: &P, f: &dyn Fn(&P) -> Option<P>, into_whiles: bool) -> (P, bool) {
    if let Some(q) = f(p) {
        return (q, true);
    }
    let sub = |q: &Arc<P>| map_process(q, f, into_whiles);
    match p {
        P::Seq(a, b) | P::Par(a, b) => {
            let (x, cx) = sub(a);
            let (y, cy) = sub(b);
            if !(cx || cy) {
                return (p.clone(), false);
            }
            if matches!(p, P::Seq(..)) {
                (P::seq(x, y), true)
            } else {
                (P::par(x, y), true)
            }
        }
        P::If { index, guard, then, els } => {
            let (x, cx) = sub(then);
            let (y, cy) = sub(els);
            if !(cx || cy) {
                return (p.clone(), false);
            }
            (P::If { index: *index, guard: guard.clone(), then: Arc::new(x), els: Arc::new(y) }, true)
        }
        P::While { index, guard, body } if into_whiles => {
            let (x, c) = sub(body);
            if !c {
                return (p.clone(), false);
            }
            (P::While { index: *index, guard: guard.clone(), body: Arc::new(x) }, true)
        }
        P::ScopeLead { index, coordinator, body, roles, name } => {
            let (x, c) = sub(body);
            if !c {
                return (p.clone(), false);
            }
            (
                P::ScopeLead {
                    index: *index,
                    coordinator: coordinator.clone(),
                    body: Arc::new(x),
                    roles: roles.clone(),
                    name: name.clone(),
                },
                true,
            )
        }
        P::ScopePlain { index, coordinator, body, name } => {
            let (x, c) = sub(body);
            if !c {
                return (p.clone(), false);
            }
            (P::ScopePlain { index: *index, coordinator: coordinator.clone(), body: Arc::new(x), name: name.clone() }, true)
        }
        P::SendHo { index, op, payload: HoPayload::Code(code), to, ack } if into_whiles => {
            let (x, c) = sub(code);
            if !c {
                return (p.clone(), false);
            }
            (P::SendHo { index: *index, op: op.clone(), payload: HoPayload::Code(Arc::new(x)), to: to.clone(), ack: *ack }, true)
        }
        _ => (p.clone(), false),
    }
}

fn is_aux_var(x: &str) -> bool {
    x.strip_prefix(AUX_VAR_PREFIX).is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
}

fn aux_guard(e: &Expr) -> Option<&str> {
    match e {
        Expr::Var(x) if is_aux_var(x) => Some(x),
        _ => None,
    }
}

/// Resolve, inside `p` and outside loops, the guard receive on `op` from
/// `from` followed by its conditional or loop, as if `b` had been received.
fn resolve_guard(p: &P, op: &crate::ast::Operation, from: &Role, b: bool) -> (P, bool) {
    let f = |q: &P| -> Option<P> {
        let P::Seq(..) = q else { return None };
        let mut items = Vec::new();
        seq_items(q, &mut items);
        let pos = items.windows(2).position(|w| match (&w[0], &w[1]) {
            (P::Recv { op: o, from: r, var, .. }, P::If { guard, .. } | P::While { guard, .. }) => {
                o == op && r == from && aux_guard(guard) == Some(var.as_ref())
            }
            _ => false,
        })?;
        let repl = match &items[pos + 1] {
            P::If { then, els, .. } => if b { then.as_ref().clone() } else { els.as_ref().clone() },
            w @ P::While { body, .. } => {
                if b {
                    P::seq(body.as_ref().clone(), w.clone())
                } else {
                    P::One
                }
            }
            _ => unreachable!("matched above"),
        };
        items.splice(pos..pos + 2, [repl]);
        Some(P::seq_all(items))
    };
    map_process(p, &f, false)
}

fn deliver(p: &P, n: u32, from: &Role, payload: &HoPayload) -> (P, bool) {
    let f = |q: &P| match q {
        P::ScopePlain { index, coordinator, body, .. } if index.base == n && coordinator == from => Some(match payload {
            HoPayload::Code(c) => c.as_ref().clone(),
            HoPayload::No => body.as_ref().clone(),
        }),
        _ => None,
    };
    map_process(p, &f, false)
}

fn prop_once(net: &mut Network) -> bool {
    let roles: Vec<Role> = net.roles.keys().cloned().collect();
    for r in &roles {
        let (proc, local) = net.roles[r].clone();
        for (path, leaf) in leaves(&proc) {
            match leaf {
                P::Send { op, expr: Expr::Lit(Value::Bool(b)), to, .. } if op.is_private() => {
                    let Some((target, tl)) = net.roles.get(to).cloned() else { continue };
                    let (np, changed) = resolve_guard(&target, op, r, *b);
                    if changed {
                        net.insert(to.clone(), np, tl);
                        net.insert(r.clone(), crate::term::apply(&proc, &path, P::One), local);
                        return true;
                    }
                }
                P::SendHo { op, payload, to, .. } => {
                    let Some((target, tl)) = net.roles.get(to).cloned() else { continue };
                    let n = op.name.strip_prefix(crate::ast::AUX_OP_PREFIX).and_then(|s| s.parse::<u32>().ok());
                    let Some(n) = n else { continue };
                    let (np, changed) = deliver(&target, n, r, payload);
                    if changed {
                        net.insert(to.clone(), np, tl);
                        net.insert(r.clone(), crate::term::apply(&proc, &path, P::One), local);
                        return true;
                    }
                }
                P::If { guard, then, els, .. } => {
                    if let Some(Value::Bool(b)) = aux_guard(guard).and_then(|x| local.get(x)) {
                        let branch = if *b { then } else { els };
                        net.insert(r.clone(), crate::term::apply(&proc, &path, branch.as_ref().clone()), local);
                        return true;
                    }
                }
                w @ P::While { guard, body, .. } => {
                    if let Some(Value::Bool(b)) = aux_guard(guard).and_then(|x| local.get(x)) {
                        let repl = if *b { P::seq(body.as_ref().clone(), w.clone()) } else { P::One };
                        net.insert(r.clone(), crate::term::apply(&proc, &path, repl), local);
                        return true;
                    }
                }
                P::Assign { var, expr: Expr::Lit(v), .. } if is_aux_var(var) => {
                    let mut l = local.clone();
                    l.set(var, v.clone());
                    net.insert(r.clone(), crate::term::apply(&proc, &path, P::One), l);
                    return true;
                }
                _ => {}
            }
        }
    }
    false
}

/// Complete auxiliary protocols that have already started.
pub fn prop(net: &Network) -> Network {
    let mut n = net.clone();
    while prop_once(&mut n) {}
    n
}

fn unprefix(p: &P) -> P {
    let f = |q: &P| -> Option<P> {
        match q {
            P::Send { index, op, expr, to } if !op.prefix.is_empty() => {
                Some(P::Send { index: *index, op: op.unprefixed(), expr: expr.clone(), to: to.clone() })
            }
            P::Recv { index, op, var, from } if !op.prefix.is_empty() => {
                Some(P::Recv { index: *index, op: op.unprefixed(), var: var.clone(), from: from.clone() })
            }
            P::SendHo { index, op, payload, to, ack } => {
                let payload = match payload {
                    HoPayload::Code(c) => HoPayload::Code(Arc::new(unprefix(c))),
                    HoPayload::No => HoPayload::No,
                };
                Some(P::SendHo { index: *index, op: op.unprefixed(), payload, to: to.clone(), ack: *ack })
            }
            _ => None,
        }
    };
    map_process(p, &f, true).0
}

/// Remove scope prefixes from every operation of a network.
pub fn unprefix_network(net: &Network) -> Network {
    let mut out = Network::default();
    for (r, (p, l)) in &net.roles {
        out.insert(r.clone(), unprefix(p), l.clone());
    }
    out
}

/// Erase closing acknowledgements outside loops, strip prefixes and drop
/// neutral `1`s.
pub fn ssim(net: &Network) -> Network {
    let erase = |q: &P| -> Option<P> {
        match q {
            P::Send { op, expr: Expr::Lit(Value::Str(s)), .. } if op.is_private() && s.as_ref() == OK_TOKEN => Some(P::One),
            P::Recv { op, var, .. } if op.is_private() && var.as_ref() == DISCARD_VAR => Some(P::One),
            _ => None,
        }
    };
    let mut out = Network::default();
    for (r, (p, l)) in &net.roles {
        let q = map_process(p, &erase, false).0;
        out.insert(r.clone(), simplify(&unprefix(&q)), l.clone());
    }
    out
}

/// `ssim ∘ prop`, iterated until nothing changes.
pub fn upd_normalize(net: &Network) -> Network {
    let mut cur = net.clone();
    loop {
        let next = ssim(&prop(&cur));
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Drop neutral `1`s in every role of a network.
pub fn simplify_network(net: &Network) -> Network {
    let mut out = Network::default();
    for (r, (p, l)) in &net.roles {
        out.insert(r.clone(), simplify(p), l.clone());
    }
    out
}

// ---------------------------------------------------------------------------
// Exploration

/// Bounds and resources of an exploration.
#[derive(Clone, Debug)]
pub struct ExploreOptions {
    /// Maximum number of weak labels along a path.
    pub bound: usize,
    /// Maximum number of unfoldings of each loop.
    pub loop_bound: u32,
    pub schedule: Schedule,
    /// Maximum number of concrete states visited.
    pub budget: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions { bound: 40, loop_bound: 2, schedule: Schedule::none(), budget: 2_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("state budget of {budget} exceeded after {states} states")]
    BudgetExceeded { budget: usize, states: usize },
    #[error("{}", .0.message)]
    Refused(Diagnostic),
}

/// A labelled transition system the explorer can drive.
pub trait Lts {
    type State: Clone + Eq + Hash + Ord;
    fn step(&self, s: &Self::State, loop_bound: u32) -> Step<Self::State>;
    fn set_updates(&self, s: &Self::State, u: &UpdateSet) -> Self::State;
}

pub struct DiocLts<'a> {
    pub host: &'a HostEnv,
}

impl Lts for DiocLts<'_> {
    type State = DiocSystem;
    fn step(&self, s: &DiocSystem, loop_bound: u32) -> Step<DiocSystem> {
        dioc_step(s, self.host, Some(loop_bound))
    }
    fn set_updates(&self, s: &DiocSystem, u: &UpdateSet) -> DiocSystem {
        let mut n = s.clone();
        n.updates = u.clone();
        n
    }
}

pub struct DpocLts<'a> {
    pub host: &'a HostEnv,
}

impl Lts for DpocLts<'_> {
    type State = DpocSystem;
    fn step(&self, s: &DpocSystem, loop_bound: u32) -> Step<DpocSystem> {
        dpoc_step(s, self.host, Some(loop_bound))
    }
    fn set_updates(&self, s: &DpocSystem, u: &UpdateSet) -> DpocSystem {
        let mut n = s.clone();
        n.updates = u.clone();
        n
    }
}

struct Macro<S> {
    visible: BTreeMap<Label, BTreeSet<S>>,
    suppressed: bool,
}

struct Counter {
    states: usize,
    budget: usize,
}

impl Counter {
    fn tick(&mut self) -> Result<(), VerifyError> {
        self.states += 1;
        if self.states > self.budget {
            Err(VerifyError::BudgetExceeded { budget: self.budget, states: self.states })
        } else {
            Ok(())
        }
    }
}

fn close<L: Lts>(lts: &L, seeds: &BTreeSet<L::State>, loop_bound: u32, counter: &mut Counter) -> Result<Macro<L::State>, VerifyError> {
    let mut seen: HashSet<L::State> = HashSet::new();
    let mut todo: Vec<L::State> = Vec::new();
    for s in seeds {
        if seen.insert(s.clone()) {
            todo.push(s.clone());
        }
    }
    let mut m = Macro { visible: BTreeMap::new(), suppressed: false };
    while let Some(s) = todo.pop() {
        counter.tick()?;
        let st = lts.step(&s, loop_bound);
        m.suppressed |= st.suppressed;
        for (l, n) in st.transitions {
            if l.is_silent() {
                if seen.insert(n.clone()) {
                    todo.push(n);
                }
            } else {
                m.visible.entry(strip_label(&l)).or_default().insert(n);
            }
        }
    }
    Ok(m)
}

fn apply_schedule<L: Lts>(lts: &L, seeds: BTreeSet<L::State>, schedule: &Schedule, depth: usize) -> (BTreeSet<L::State>, Option<Label>) {
    match schedule.change_at(depth) {
        Some(c) => (
            seeds.iter().map(|s| lts.set_updates(s, &c.updates)).collect(),
            Some(Label::UpdateSetChange { names: c.updates.names() }),
        ),
        None => (seeds, None),
    }
}

/// A bounded, prefix-closed set of weak traces.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TraceSet {
    pub traces: BTreeSet<Vec<Label>>,
    /// Traces cut by the depth bound or by a withheld loop unfolding.
    pub truncated: BTreeSet<Vec<Label>>,
    pub states: usize,
}

/// Enumerate the weak traces of `init` up to the bounds.
pub fn trace_set<L: Lts>(lts: &L, init: &L::State, opts: &ExploreOptions) -> Result<TraceSet, VerifyError> {
    let mut counter = Counter { states: 0, budget: opts.budget };
    let mut out = TraceSet::default();
    let mut stack: Vec<(Vec<Label>, usize, BTreeSet<L::State>)> = vec![(Vec::new(), 0, BTreeSet::from([init.clone()]))];
    while let Some((mut trace, depth, seeds)) = stack.pop() {
        let (seeds, change) = apply_schedule(lts, seeds, &opts.schedule, depth);
        if let Some(c) = change {
            trace.push(c);
        }
        out.traces.insert(trace.clone());
        if depth >= opts.bound {
            out.truncated.insert(trace);
            continue;
        }
        let m = close(lts, &seeds, opts.loop_bound, &mut counter)?;
        if m.suppressed {
            out.truncated.insert(trace.clone());
        }
        for (l, next) in m.visible {
            let mut t = trace.clone();
            t.push(l);
            stack.push((t, depth + 1, next));
        }
    }
    out.states = counter.states;
    Ok(out)
}

/// Which level exhibits a trace the other lacks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Dioc,
    Dpoc,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Dioc => "dioc",
            Side::Dpoc => "dpoc",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    /// `trace` is a weak trace of `side` only.
    Counterexample { trace: Vec<Label>, side: Side },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivReport {
    pub verdict: Verdict,
    pub bound: usize,
    pub loop_bound: u32,
    pub states: usize,
    /// Some path was cut by a bound.
    pub truncated: bool,
}

impl EquivReport {
    pub fn is_equivalent(&self) -> bool {
        self.verdict == Verdict::Equivalent
    }

    pub fn to_json(&self) -> Json {
        let mut j = json!({
            "verdict": if self.is_equivalent() { "equivalent" } else { "counterexample" },
            "bound": self.bound,
            "loopBound": self.loop_bound,
            "states": self.states,
            "truncated": self.truncated,
        });
        if let Verdict::Counterexample { trace, side } = &self.verdict {
            j["counterexample"] = json!({
                "side": side.as_str(),
                "trace": trace.iter().map(Label::to_json).collect::<Vec<_>>(),
            });
        }
        j
    }
}

/// Compare two systems' weak traces in lockstep.
pub fn compare<A: Lts, B: Lts>(a: &A, ia: &A::State, b: &B, ib: &B::State, opts: &ExploreOptions) -> Result<EquivReport, VerifyError> {
    let mut counter = Counter { states: 0, budget: opts.budget };
    let mut truncated = false;
    let last_change = opts.schedule.changes.iter().map(|c| c.after_weak_label).max();
    let mut seen: HashSet<(usize, BTreeSet<A::State>, BTreeSet<B::State>)> = HashSet::new();
    let mut queue = VecDeque::from([(Vec::<Label>::new(), 0usize, BTreeSet::from([ia.clone()]), BTreeSet::from([ib.clone()]))]);
    while let Some((mut trace, depth, sa, sb)) = queue.pop_front() {
        let (sa, change) = apply_schedule(a, sa, &opts.schedule, depth);
        let (sb, _) = apply_schedule(b, sb, &opts.schedule, depth);
        if let Some(c) = change {
            trace.push(c);
        }
        let phase = if last_change.is_some_and(|m| depth <= m) { depth } else { usize::MAX };
        if !seen.insert((phase, sa.clone(), sb.clone())) {
            continue;
        }
        if depth >= opts.bound {
            truncated = true;
            continue;
        }
        let ma = close(a, &sa, opts.loop_bound, &mut counter)?;
        let mb = close(b, &sb, opts.loop_bound, &mut counter)?;
        truncated |= ma.suppressed || mb.suppressed;
        let la: BTreeSet<&Label> = ma.visible.keys().collect();
        let lb: BTreeSet<&Label> = mb.visible.keys().collect();
        if la != lb {
            let (l, side) = match la.difference(&lb).next() {
                Some(l) => (*l, Side::Dioc),
                None => (*lb.difference(&la).next().expect("sets differ"), Side::Dpoc),
            };
            trace.push(l.clone());
            return Ok(EquivReport {
                verdict: Verdict::Counterexample { trace, side },
                bound: opts.bound,
                loop_bound: opts.loop_bound,
                states: counter.states,
                truncated,
            });
        }
        let mut mb = mb.visible;
        for (l, na) in ma.visible {
            let nb = mb.remove(&l).expect("same labels");
            let mut t = trace.clone();
            t.push(l);
            queue.push_back((t, depth + 1, na, nb));
        }
    }
    Ok(EquivReport { verdict: Verdict::Equivalent, bound: opts.bound, loop_bound: opts.loop_bound, states: counter.states, truncated })
}

/// Project `dioc` and compare the weak traces of both levels.
pub fn check_equiv(
    dioc: &DiocSystem,
    host: &HostEnv,
    opts: &ExploreOptions,
    mutation: Option<ProjectionMutation>,
) -> Result<EquivReport, VerifyError> {
    let p = dioc.proc.as_ref();
    if !p.is_initial() || !p.is_well_annotated() {
        return Err(VerifyError::Refused(
            Diagnostic::error(p.span(), "the program must be initial and well annotated").with_code("NOT-INITIAL"),
        ));
    }
    let report = check_connected(p);
    if let Some(v) = report.violations.first() {
        return Err(VerifyError::Refused(v.to_diagnostic()));
    }
    let net = proj_with(p, &dioc.state, mutation);
    let dpoc = DpocSystem::new(net, dioc.updates.clone()).with_allocator(dioc.next_index).with_mutation(mutation);
    compare(&DiocLts { host }, dioc, &DpocLts { host }, &dpoc, opts)
}

// ---------------------------------------------------------------------------
// Freedom properties

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Property {
    Pass,
    Fail { witness: Vec<Label>, reason: String },
}

impl Property {
    pub fn passed(&self) -> bool {
        *self == Property::Pass
    }

    fn to_json(&self) -> Json {
        match self {
            Property::Pass => json!("pass"),
            Property::Fail { witness, reason } => json!({
                "verdict": "fail",
                "reason": reason,
                "witness": witness.iter().map(Label::to_json).collect::<Vec<_>>(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreedomReport {
    pub deadlock: Property,
    pub race: Property,
    pub orphan: Property,
    pub states: usize,
    pub truncated: bool,
    /// The budget ran out; verdicts cover only the explored part.
    pub partial: bool,
}

impl FreedomReport {
    pub fn all_pass(&self) -> bool {
        self.deadlock.passed() && self.race.passed() && self.orphan.passed()
    }

    pub fn to_json(&self) -> Json {
        json!({
            "deadlock": self.deadlock.to_json(),
            "race": self.race.to_json(),
            "orphan": self.orphan.to_json(),
            "states": self.states,
            "truncated": self.truncated,
            "partial": self.partial,
        })
    }
}

fn race_in(offers: &BTreeMap<Role, Vec<Offer>>) -> Option<String> {
    for (r, os) in offers {
        for o in os {
            match o {
                Offer::Recv { op, from, .. } => {
                    let n = offers.get(from).map_or(0, |ps| {
                        ps.iter().filter(|p| matches!(p, Offer::Send { op: q, to, .. } if q == op && to == r)).count()
                    });
                    if n > 1 {
                        return Some(format!("{n} sends on {op} from {from} compete for one receive at {r}"));
                    }
                }
                Offer::Send { op, to, .. } => {
                    let n = offers.get(to).map_or(0, |ps| {
                        ps.iter().filter(|p| matches!(p, Offer::Recv { op: q, from, .. } if q == op && from == r)).count()
                    });
                    if n > 1 {
                        return Some(format!("{n} receives on {op} at {to} compete for one send from {r}"));
                    }
                }
                Offer::SendHo { op, to, .. } => {
                    let n = offers.get(to).map_or(0, |ps| {
                        ps.iter()
                            .filter(|p| matches!(p, Offer::ScopeWait { index, coordinator, .. }
                                if coordinator == r && crate::ast::Operation::aux(index.base) == *op))
                            .count()
                    });
                    if n > 1 {
                        return Some(format!("{n} scopes at {to} compete for one update message from {r}"));
                    }
                }
                Offer::ScopeWait { index, coordinator, .. } => {
                    let op = crate::ast::Operation::aux(index.base);
                    let n = offers.get(coordinator).map_or(0, |ps| {
                        ps.iter().filter(|p| matches!(p, Offer::SendHo { op: q, to, .. } if *q == op && to == r)).count()
                    });
                    if n > 1 {
                        return Some(format!("{n} update messages from {coordinator} compete for one scope at {r}"));
                    }
                }
                _ => {}
            }
        }
    }
    None
}

fn has_send_offer(offers: &BTreeMap<Role, Vec<Offer>>) -> bool {
    offers.values().flatten().any(|o| matches!(o, Offer::Send { .. } | Offer::SendHo { .. }))
}

struct Node {
    parent: usize,
    label: Option<Label>,
}

fn witness(nodes: &[Node], mut i: usize) -> Vec<Label> {
    let mut out = Vec::new();
    while let Some(l) = &nodes[i].label {
        out.push(l.clone());
        i = nodes[i].parent;
    }
    out.reverse();
    out
}

/// Hook called on every explored transition: the source state, the role
/// offers there, and the chosen label and target.
pub type TransitionHook<'a> = dyn FnMut(&DpocSystem, &Label, &DpocSystem) + 'a;

/// Explore an endpoint system and check deadlock, race and orphan freedom.
pub fn check_freedom(dpoc: &DpocSystem, host: &HostEnv, opts: &ExploreOptions) -> FreedomReport {
    check_freedom_with(dpoc, host, opts, &mut |_, _, _| {})
}

/// [`check_freedom`] with a hook observing every explored transition.
pub fn check_freedom_with(dpoc: &DpocSystem, host: &HostEnv, opts: &ExploreOptions, hook: &mut TransitionHook<'_>) -> FreedomReport {
    let mut report = FreedomReport {
        deadlock: Property::Pass,
        race: Property::Pass,
        orphan: Property::Pass,
        states: 0,
        truncated: false,
        partial: false,
    };
    let mut nodes = vec![Node { parent: 0, label: None }];
    let mut index: HashMap<DpocSystem, usize> = HashMap::from([(dpoc.clone(), 0)]);
    let mut queue: VecDeque<(DpocSystem, usize, usize)> = VecDeque::from([(dpoc.clone(), 0, 0)]);
    let fail = |p: &mut Property, nodes: &[Node], i: usize, reason: String| {
        if p.passed() {
            *p = Property::Fail { witness: witness(nodes, i), reason };
        }
    };
    while let Some((s, id, depth)) = queue.pop_front() {
        if report.states >= opts.budget {
            report.partial = true;
            break;
        }
        report.states += 1;
        let (offers, suppressed) = network_offers(&s, host, Some(opts.loop_bound));
        report.truncated |= suppressed;
        if let Some(reason) = race_in(&offers) {
            fail(&mut report.race, &nodes, id, reason);
        }
        if s.terminated && has_send_offer(&offers) {
            fail(&mut report.orphan, &nodes, id, "a send remains after termination".into());
        }
        let transitions = combine(&s, &offers);
        if transitions.iter().any(|(l, _)| *l == Label::Tick) {
            if let Some((r, _)) = s.network.roles.iter().find(|(_, (p, _))| p.contains_send()) {
                fail(&mut report.orphan, &nodes, id, format!("{r} still holds a send when the system terminates"));
            }
        }
        if transitions.is_empty() && !s.terminated && !suppressed {
            let stuck: Vec<String> = s
                .network
                .roles
                .iter()
                .filter(|(_, (p, _))| *p != P::Zero && *p != P::One)
                .map(|(r, (p, _))| format!("{r}: {}", pretty_dpoc(p)))
                .collect();
            fail(&mut report.deadlock, &nodes, id, format!("no transition is enabled; stuck roles: {}", stuck.join(" || ")));
        }
        if depth >= opts.bound {
            report.truncated |= !transitions.is_empty();
            continue;
        }
        for (l, n) in transitions {
            hook(&s, &l, &n);
            let d = depth + usize::from(!l.is_silent());
            if let Entry::Vacant(e) = index.entry(n.clone()) {
                nodes.push(Node { parent: id, label: Some(l) });
                e.insert(nodes.len() - 1);
                queue.push_back((n, nodes.len() - 1, d));
            }
        }
    }
    report
}

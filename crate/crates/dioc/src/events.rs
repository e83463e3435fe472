//! Event structures and causality.
//!
//! Every construct of an annotated choreography or network gives rise to
//! events named by their global index. The causality relation is kept as a
//! graph of the generating clauses and answered by reachability; sequential
//! composition goes through an intermediate hub node so the graph stays
//! linear in the size of the term.
//!
//! On networks, a send and a receive whose global indexes match are treated
//! as one synchronisation: each reaches the other. When a receive could
//! match several sends (a loop coordinator's `(i,true)` and `(i,false)`
//! broadcasts after an unfolding, for instance), only the earliest candidate
//! in its role is paired with it.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};

use fixedbitset::FixedBitSet;
use serde_json::{json, Value as Json};

use crate::ast::{roles_of, DiocProcess as D, DpocProcess as P, GlobalIndex, IndexTag, Operation, Role};
use crate::dioc_sem::HostEnv;
use crate::dpoc_sem::{matching_indexes, DpocSystem};
use crate::projection::{proj, Network};
use crate::term::leaves;
use crate::verify::{check_freedom_with, ExploreOptions, FreedomReport};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum EventKind {
    Sending,
    Receiving,
    Assign,
    ScopeInit,
    ScopeTerm,
    GuardIf,
    GuardWhile,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Sending => "send",
            EventKind::Receiving => "receive",
            EventKind::Assign => "assign",
            EventKind::ScopeInit => "scope-init",
            EventKind::ScopeTerm => "scope-term",
            EventKind::GuardIf => "guard-if",
            EventKind::GuardWhile => "guard-while",
        }
    }

    pub fn is_communication(self) -> bool {
        matches!(self, EventKind::Sending | EventKind::Receiving)
    }
}

/// An event. Scope events belong to every role of the scope; all others
/// belong to exactly one role. Communication events also record the
/// operation and the partner role.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Event {
    pub kind: EventKind,
    pub gidx: GlobalIndex,
    pub roles: BTreeSet<Role>,
    pub op: Option<Operation>,
    pub peer: Option<Role>,
}

impl Event {
    fn local(kind: EventKind, gidx: GlobalIndex, role: &Role) -> Self {
        Event { kind, gidx, roles: BTreeSet::from([role.clone()]), op: None, peer: None }
    }

    fn comm(kind: EventKind, gidx: GlobalIndex, role: &Role, op: &Operation, peer: &Role) -> Self {
        Event { kind, gidx, roles: BTreeSet::from([role.clone()]), op: Some(op.clone()), peer: Some(peer.clone()) }
    }

    /// The single owning role of a non-scope event.
    pub fn role(&self) -> Option<&Role> {
        if self.roles.len() == 1 {
            self.roles.iter().next()
        } else {
            None
        }
    }

    pub fn to_json(&self) -> Json {
        json!({
            "kind": self.kind.as_str(),
            "gidx": self.gidx.to_string(),
            "roles": self.roles.iter().map(|r| r.as_str()).collect::<Vec<_>>(),
            "op": self.op.as_ref().map(|o| o.to_string()),
            "peer": self.peer.as_ref().map(|r| r.as_str()),
        })
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let roles: Vec<&str> = self.roles.iter().map(|r| r.as_str()).collect();
        write!(f, "{}[{}]@{}", self.kind.as_str(), self.gidx, roles.join(","))?;
        if let (Some(op), Some(peer)) = (&self.op, &self.peer) {
            let arrow = if self.kind == EventKind::Sending { "->" } else { "<-" };
            write!(f, " {op} {arrow} {peer}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
struct Context {
    whiles: Vec<IndexTag>,
    branches: Vec<(usize, bool)>,
    scope: Option<GlobalIndex>,
}

impl Context {
    fn gidx(&self, tag: IndexTag) -> GlobalIndex {
        GlobalIndex(self.whiles.clone()).extend(tag)
    }
}

#[derive(Clone, Debug, Default)]
struct Placement {
    branches: Vec<(usize, bool)>,
    scope: Option<GlobalIndex>,
}

#[derive(Default)]
struct Builder {
    /// `None` marks an auxiliary hub node.
    nodes: Vec<Option<Event>>,
    placement: Vec<Placement>,
    edges: Vec<Vec<usize>>,
    scopes: HashMap<(EventKind, GlobalIndex), usize>,
}

impl Builder {
    fn node(&mut self, ev: Option<Event>, ctx: &Context) -> usize {
        self.nodes.push(ev);
        self.placement.push(Placement { branches: ctx.branches.clone(), scope: ctx.scope.clone() });
        self.edges.push(Vec::new());
        self.nodes.len() - 1
    }

    fn event(&mut self, ev: Event, ctx: &Context) -> usize {
        self.node(Some(ev), ctx)
    }

    fn scope_event(&mut self, kind: EventKind, gidx: GlobalIndex, roles: &BTreeSet<Role>, ctx: &Context) -> usize {
        let id = match self.scopes.get(&(kind, gidx.clone())) {
            Some(&id) => id,
            None => {
                let ev = Event { kind, gidx: gidx.clone(), roles: BTreeSet::new(), op: None, peer: None };
                let id = self.node(Some(ev), ctx);
                self.scopes.insert((kind, gidx), id);
                id
            }
        };
        if let Some(ev) = &mut self.nodes[id] {
            ev.roles.extend(roles.iter().cloned());
        }
        id
    }

    fn edge(&mut self, a: usize, b: usize) {
        self.edges[a].push(b);
    }

    fn seq(&mut self, first: &[usize], then: &[usize]) {
        if first.is_empty() || then.is_empty() {
            return;
        }
        let hub = self.node(None, &Context::default());
        for &a in first {
            self.edge(a, hub);
        }
        for &b in then {
            self.edge(hub, b);
        }
    }

    fn guard(&mut self, g: usize, body: &[usize]) {
        for &b in body {
            self.edge(g, b);
        }
    }

    fn enclose(&mut self, up: usize, down: usize, body: &[usize]) {
        self.edge(up, down);
        for &b in body {
            self.edge(up, b);
            self.edge(b, down);
        }
    }

    fn dioc(&mut self, p: &D, ctx: &Context) -> Vec<usize> {
        let own = |index: &Option<u32>| ctx.gidx(IndexTag::plain(index.expect("annotated choreography")));
        match p {
            D::Interaction { index, op, sender, receiver, .. } => {
                let g = own(index);
                let f = self.event(Event::comm(EventKind::Sending, g.clone(), sender, op, receiver), ctx);
                let t = self.event(Event::comm(EventKind::Receiving, g, receiver, op, sender), ctx);
                self.edge(f, t);
                vec![f, t]
            }
            D::Assign { index, role, .. } => vec![self.event(Event::local(EventKind::Assign, own(index), role), ctx)],
            D::Seq { left, right, .. } => {
                let mut a = self.dioc(left, ctx);
                let b = self.dioc(right, ctx);
                self.seq(&a, &b);
                a.extend(b);
                a
            }
            D::Par { left, right, .. } => {
                let mut a = self.dioc(left, ctx);
                a.extend(self.dioc(right, ctx));
                a
            }
            D::One | D::Zero => Vec::new(),
            D::If { index, role, then, els, .. } => {
                let g = self.event(Event::local(EventKind::GuardIf, own(index), role), ctx);
                let mut out = vec![g];
                for (branch, body) in [(true, then), (false, els)] {
                    let mut inner = ctx.clone();
                    inner.branches.push((g, branch));
                    let evs = self.dioc(body, &inner);
                    self.guard(g, &evs);
                    out.extend(evs);
                }
                out
            }
            D::While { index, role, body, .. } => {
                let gidx = own(index);
                let g = self.event(Event::local(EventKind::GuardWhile, gidx.clone(), role), ctx);
                let mut inner = ctx.clone();
                inner.whiles = gidx.0;
                let evs = self.dioc(body, &inner);
                self.guard(g, &evs);
                let mut out = vec![g];
                out.extend(evs);
                out
            }
            D::Scope { index, coordinator, body, .. } => {
                let gidx = own(index);
                let mut roles = roles_of(body);
                roles.insert(coordinator.clone());
                let up = self.scope_event(EventKind::ScopeInit, gidx.clone(), &roles, ctx);
                let down = self.scope_event(EventKind::ScopeTerm, gidx.clone(), &roles, ctx);
                let mut inner = ctx.clone();
                inner.scope = Some(gidx);
                let evs = self.dioc(body, &inner);
                self.enclose(up, down, &evs);
                let mut out = vec![up, down];
                out.extend(evs);
                out
            }
        }
    }

    fn dpoc(&mut self, p: &P, me: &Role, ctx: &Context) -> Vec<usize> {
        match p {
            P::Send { index, op, to, .. } | P::SendHo { index, op, to, .. } => {
                vec![self.event(Event::comm(EventKind::Sending, ctx.gidx(*index), me, op, to), ctx)]
            }
            P::Recv { index, op, from, .. } => {
                vec![self.event(Event::comm(EventKind::Receiving, ctx.gidx(*index), me, op, from), ctx)]
            }
            P::Assign { index, .. } => vec![self.event(Event::local(EventKind::Assign, ctx.gidx(*index), me), ctx)],
            P::Seq(a, b) => {
                let mut first = self.dpoc(a, me, ctx);
                let then = self.dpoc(b, me, ctx);
                self.seq(&first, &then);
                first.extend(then);
                first
            }
            P::Par(a, b) => {
                let mut out = self.dpoc(a, me, ctx);
                out.extend(self.dpoc(b, me, ctx));
                out
            }
            P::One | P::Zero => Vec::new(),
            P::If { index, then, els, .. } => {
                let g = self.event(Event::local(EventKind::GuardIf, ctx.gidx(*index), me), ctx);
                let mut out = vec![g];
                for (branch, body) in [(true, then), (false, els)] {
                    let mut inner = ctx.clone();
                    inner.branches.push((g, branch));
                    let evs = self.dpoc(body, me, &inner);
                    self.guard(g, &evs);
                    out.extend(evs);
                }
                out
            }
            P::While { index, body, .. } => {
                let gidx = ctx.gidx(*index);
                let g = self.event(Event::local(EventKind::GuardWhile, gidx.clone(), me), ctx);
                let mut inner = ctx.clone();
                inner.whiles = gidx.0;
                let evs = self.dpoc(body, me, &inner);
                self.guard(g, &evs);
                let mut out = vec![g];
                out.extend(evs);
                out
            }
            P::ScopeLead { index, coordinator, body, roles, .. } => {
                let mut all = roles.clone();
                all.insert(coordinator.clone());
                all.insert(me.clone());
                self.dpoc_scope(*index, &all, body, me, ctx)
            }
            P::ScopePlain { index, coordinator, body, .. } => {
                let all = BTreeSet::from([coordinator.clone(), me.clone()]);
                self.dpoc_scope(*index, &all, body, me, ctx)
            }
        }
    }

    fn dpoc_scope(&mut self, index: IndexTag, roles: &BTreeSet<Role>, body: &P, me: &Role, ctx: &Context) -> Vec<usize> {
        let gidx = ctx.gidx(index);
        let up = self.scope_event(EventKind::ScopeInit, gidx.clone(), roles, ctx);
        let down = self.scope_event(EventKind::ScopeTerm, gidx.clone(), roles, ctx);
        let mut inner = ctx.clone();
        inner.scope = Some(gidx);
        let evs = self.dpoc(body, me, &inner);
        self.enclose(up, down, &evs);
        let mut out = vec![up, down];
        out.extend(evs);
        out
    }

    fn reach_from(&self, start: usize) -> FixedBitSet {
        let mut seen = FixedBitSet::with_capacity(self.nodes.len());
        let mut queue = VecDeque::from([start]);
        seen.insert(start);
        while let Some(n) = queue.pop_front() {
            for &m in &self.edges[n] {
                if !seen.put(m) {
                    queue.push_back(m);
                }
            }
        }
        seen
    }

    /// Pair matching sends and receives and make each reach the other.
    fn synchronise(&mut self) -> Vec<(usize, usize)> {
        let mut buckets: HashMap<(Vec<IndexTag>, u32), (Vec<usize>, Vec<usize>)> = HashMap::new();
        for (id, ev) in self.nodes.iter().enumerate() {
            let Some(ev) = ev else { continue };
            if !ev.kind.is_communication() {
                continue;
            }
            let n = ev.gidx.0.len();
            let key = (ev.gidx.0[..n - 1].to_vec(), ev.gidx.last().base);
            let slot = buckets.entry(key).or_default();
            if ev.kind == EventKind::Sending {
                slot.0.push(id);
            } else {
                slot.1.push(id);
            }
        }
        let mut candidates: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (sends, recvs) in buckets.values() {
            for &s in sends {
                for &r in recvs {
                    if self.gidx(s).matches(self.gidx(r)) {
                        candidates.entry(s).or_default().push(r);
                        candidates.entry(r).or_default().push(s);
                    }
                }
            }
        }
        let mut reach: HashMap<usize, FixedBitSet> = HashMap::new();
        let mut below = |b: &Builder, a: usize, c: usize| -> bool {
            a != c && reach.entry(a).or_insert_with(|| b.reach_from(a)).contains(c)
        };
        let earliest = |b: &Builder, below: &mut dyn FnMut(&Builder, usize, usize) -> bool, of: usize, pick: usize| {
            candidates[&of].iter().all(|&other| !below(b, other, pick))
        };
        let mut pairs = Vec::new();
        for (&s, rs) in &candidates {
            if self.nodes[s].as_ref().map(|e| e.kind) != Some(EventKind::Sending) {
                continue;
            }
            for &r in rs {
                if earliest(self, &mut below, r, s) && earliest(self, &mut below, s, r) {
                    pairs.push((s, r));
                }
            }
        }
        for &(s, r) in &pairs {
            self.edge(s, r);
            self.edge(r, s);
        }
        pairs
    }

    fn gidx(&self, id: usize) -> &GlobalIndex {
        &self.nodes[id].as_ref().expect("event node").gidx
    }

    fn finish(self, pairs: Vec<(usize, usize)>) -> CausalityRelation {
        let mut event_of_node = vec![usize::MAX; self.nodes.len()];
        let mut events = Vec::new();
        let mut placement = Vec::new();
        let mut node_of = Vec::new();
        for (id, ev) in self.nodes.iter().enumerate() {
            if let Some(ev) = ev {
                event_of_node[id] = events.len();
                events.push(ev.clone());
                placement.push(self.placement[id].clone());
                node_of.push(id);
            }
        }
        let reach = node_of
            .iter()
            .map(|&n| {
                let nodes = self.reach_from(n);
                let mut evs = FixedBitSet::with_capacity(events.len());
                for m in nodes.ones() {
                    if event_of_node[m] != usize::MAX {
                        evs.insert(event_of_node[m]);
                    }
                }
                evs
            })
            .collect();
        let mut partners = vec![Vec::new(); events.len()];
        for (s, r) in pairs {
            let (s, r) = (event_of_node[s], event_of_node[r]);
            partners[s].push(r);
            partners[r].push(s);
        }
        let mut ids = HashMap::new();
        for (i, ev) in events.iter().enumerate() {
            ids.entry(ev.clone()).or_insert(i);
        }
        let branch_owner = placement
            .iter()
            .map(|p| p.branches.iter().map(|&(g, b)| (event_of_node[g], b)).collect())
            .collect();
        CausalityRelation { events, ids, reach, partners, placement, branch_owner }
    }
}

/// A causality relation over a fixed event set, answered by reachability.
#[derive(Clone, Debug)]
pub struct CausalityRelation {
    events: Vec<Event>,
    ids: HashMap<Event, usize>,
    reach: Vec<FixedBitSet>,
    partners: Vec<Vec<usize>>,
    placement: Vec<Placement>,
    branch_owner: Vec<Vec<(usize, bool)>>,
}

impl CausalityRelation {
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event_set(&self) -> BTreeSet<Event> {
        self.events.iter().cloned().collect()
    }

    pub fn contains(&self, e: &Event) -> bool {
        self.ids.contains_key(e)
    }

    fn id(&self, e: &Event) -> Option<usize> {
        self.ids.get(e).copied()
    }

    fn leq_ids(&self, a: usize, b: usize) -> bool {
        self.reach[a].contains(b)
    }

    /// `a ≤ b`; false when either event is unknown.
    pub fn leq(&self, a: &Event, b: &Event) -> bool {
        match (self.id(a), self.id(b)) {
            (Some(a), Some(b)) => self.leq_ids(a, b),
            _ => false,
        }
    }

    /// Every related pair of distinct events.
    pub fn pairs(&self) -> Vec<(Event, Event)> {
        let mut out = Vec::new();
        for (a, r) in self.reach.iter().enumerate() {
            for b in r.ones() {
                if a != b {
                    out.push((self.events[a].clone(), self.events[b].clone()));
                }
            }
        }
        out
    }

    /// Events paired with `e` by synchronisation.
    pub fn partners(&self, e: &Event) -> Vec<Event> {
        self.id(e).map(|i| self.partners[i].iter().map(|&j| self.events[j].clone()).collect()).unwrap_or_default()
    }

    /// No event other than `e` and its synchronisation partners precedes it.
    pub fn is_minimal(&self, e: &Event) -> bool {
        self.blockers(e, None).is_empty()
    }

    /// Events other than `e` and its partners that precede `e`, optionally
    /// only those belonging to `within`.
    fn blockers(&self, e: &Event, within: Option<&Role>) -> Vec<Event> {
        let Some(i) = self.id(e) else { return Vec::new() };
        (0..self.events.len())
            .filter(|&j| j != i && !self.partners[i].contains(&j) && self.leq_ids(j, i))
            .filter(|&j| within.is_none_or(|r| self.events[j].roles.contains(r)))
            .map(|j| self.events[j].clone())
            .collect()
    }

    /// Do the two events lie in different branches of the same conditional?
    pub fn conflicting(&self, a: &Event, b: &Event) -> bool {
        match (self.id(a), self.id(b)) {
            (Some(a), Some(b)) => self.conflicting_ids(a, b),
            _ => false,
        }
    }

    fn conflicting_ids(&self, a: usize, b: usize) -> bool {
        self.branch_owner[a]
            .iter()
            .any(|&(g, x)| self.branch_owner[b].iter().any(|&(h, y)| g == h && x != y))
    }

    fn scope_of(&self, i: usize) -> Option<&GlobalIndex> {
        self.placement[i].scope.as_ref()
    }
}

/// Events of an annotated choreography.
pub fn events_dioc(p: &D) -> BTreeSet<Event> {
    leq_dioc(p).event_set()
}

/// Causality relation of an annotated choreography.
pub fn leq_dioc(p: &D) -> CausalityRelation {
    let mut b = Builder::default();
    b.dioc(p, &Context::default());
    b.finish(Vec::new())
}

/// Events of an annotated network.
pub fn events_dpoc(n: &Network) -> BTreeSet<Event> {
    leq_dpoc(n).event_set()
}

/// Causality relation of an annotated network.
pub fn leq_dpoc(n: &Network) -> CausalityRelation {
    let mut b = Builder::default();
    for (role, (proc, _)) in &n.roles {
        b.dpoc(proc, role, &Context::default());
    }
    let pairs = b.synchronise();
    b.finish(pairs)
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Condition {
    /// At most two communication events per global index, and then matching.
    CommunicationPairs,
    /// Enabled transitions correspond to minimal events.
    Minimality,
    /// Unconflicting sends on one operation to one target are ordered.
    SendOrder,
    /// Unconflicting receives on one operation from one sender are ordered.
    ReceiveOrder,
    /// Matching events sit in scopes with the same global index.
    ScopeAlignment,
    /// A repeated index comes from a loop body and its copy before the loop.
    LoopIndexes,
    /// A synchronisation that can fire joins non-matching events.
    Matching,
}

impl Condition {
    pub fn code(self) -> &'static str {
        match self {
            Condition::CommunicationPairs => "C1",
            Condition::Minimality => "C2",
            Condition::SendOrder => "C3",
            Condition::ReceiveOrder => "C4",
            Condition::ScopeAlignment => "C5",
            Condition::LoopIndexes => "C6",
            Condition::Matching => "matching",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub condition: Condition,
    pub events: Vec<Event>,
    pub message: String,
}

impl Violation {
    pub fn to_json(&self) -> Json {
        json!({
            "condition": self.condition.code(),
            "message": self.message,
            "events": self.events.iter().map(Event::to_json).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let evs: Vec<String> = self.events.iter().map(|e| e.to_string()).collect();
        write!(f, "{}: {} ({})", self.condition.code(), self.message, evs.join("; "))
    }
}

#[derive(Clone, Debug, Default)]
pub struct WellAnnotatedReport {
    pub events: usize,
    pub violations: Vec<Violation>,
}

impl WellAnnotatedReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> Json {
        json!({
            "events": self.events,
            "ok": self.is_ok(),
            "violations": self.violations.iter().map(Violation::to_json).collect::<Vec<_>>(),
        })
    }
}

/// Check the static well-annotatedness conditions of a network.
pub fn check_well_annotated_dpoc(n: &Network) -> WellAnnotatedReport {
    let rel = leq_dpoc(n);
    let mut out = Vec::new();
    let ev = &rel.events;
    let violation = |condition, ids: &[usize], message: String| Violation {
        condition,
        events: ids.iter().map(|&i| ev[i].clone()).collect(),
        message,
    };

    let mut by_gidx: BTreeMap<&GlobalIndex, Vec<usize>> = BTreeMap::new();
    for (i, e) in ev.iter().enumerate() {
        if e.kind.is_communication() {
            by_gidx.entry(&e.gidx).or_default().push(i);
        }
    }
    for (g, ids) in &by_gidx {
        if ids.len() > 2 {
            out.push(violation(Condition::CommunicationPairs, ids, format!("{} communication events share {g}", ids.len())));
        } else if ids.len() == 2 && ev[ids[0]].kind == ev[ids[1]].kind {
            out.push(violation(Condition::CommunicationPairs, ids, format!("two {} events share {g}", ev[ids[0]].kind.as_str())));
        }
    }

    let mut channels: BTreeMap<(EventKind, &Role, &Operation, &Role), Vec<usize>> = BTreeMap::new();
    for (i, e) in ev.iter().enumerate() {
        if let (true, Some(role), Some(op), Some(peer)) = (e.kind.is_communication(), e.role(), &e.op, &e.peer) {
            channels.entry((e.kind, role, op, peer)).or_default().push(i);
        }
    }
    for ((kind, ..), ids) in &channels {
        for (x, &a) in ids.iter().enumerate() {
            for &b in &ids[x + 1..] {
                if ev[a].gidx == ev[b].gidx || rel.conflicting_ids(a, b) {
                    continue;
                }
                if !rel.leq_ids(a, b) && !rel.leq_ids(b, a) {
                    let cond = if *kind == EventKind::Sending { Condition::SendOrder } else { Condition::ReceiveOrder };
                    out.push(violation(cond, &[a, b], "unordered events on the same channel".into()));
                }
            }
        }
    }

    for (i, ps) in rel.partners.iter().enumerate() {
        for &j in ps {
            if i < j && rel.scope_of(i) != rel.scope_of(j) {
                out.push(violation(Condition::ScopeAlignment, &[i, j], "matching events in different scopes".into()));
            }
        }
    }

    let mut by_tag: BTreeMap<IndexTag, Vec<usize>> = BTreeMap::new();
    for (i, e) in ev.iter().enumerate() {
        by_tag.entry(e.gidx.last()).or_default().push(i);
    }
    let guards: HashMap<&GlobalIndex, Vec<usize>> = ev.iter().enumerate().filter(|(_, e)| e.kind == EventKind::GuardWhile).fold(
        HashMap::new(),
        |mut m, (i, e)| {
            m.entry(&e.gidx).or_default().push(i);
            m
        },
    );
    for ids in by_tag.values() {
        for (x, &a) in ids.iter().enumerate() {
            for &b in &ids[x + 1..] {
                if ev[a].gidx == ev[b].gidx {
                    continue;
                }
                let (wa, wb) = (&ev[a].gidx.0[..ev[a].gidx.0.len() - 1], &ev[b].gidx.0[..ev[b].gidx.0.len() - 1]);
                let (inner, outer, w) = if wa.len() > wb.len() && wa.starts_with(wb) {
                    (a, b, &wa[..wb.len() + 1])
                } else if wb.len() > wa.len() && wb.starts_with(wa) {
                    (b, a, &wb[..wa.len() + 1])
                } else {
                    out.push(violation(Condition::LoopIndexes, &[a, b], "repeated index outside a common loop".into()));
                    continue;
                };
                let loop_gidx = GlobalIndex(w.to_vec());
                let ordered = guards.get(&loop_gidx).is_some_and(|gs| gs.iter().any(|&g| rel.leq_ids(outer, g)));
                if !ordered {
                    out.push(violation(
                        Condition::LoopIndexes,
                        &[outer, inner],
                        format!("copy of a loop event does not precede the guard of {loop_gidx}"),
                    ));
                }
            }
        }
    }

    WellAnnotatedReport { events: ev.len(), violations: out }
}

/// Check that every transition enabled in `n` corresponds to a minimal
/// event, and that every synchronisation that can fire joins matching
/// events.
pub fn enabled_violations(n: &Network) -> Vec<Violation> {
    let rel = leq_dpoc(n);
    let mut out = Vec::new();
    let front: BTreeMap<&Role, Vec<&P>> =
        n.roles.iter().map(|(r, (p, _))| (r, leaves(p).into_iter().map(|(_, l)| l).collect())).collect();
    let top = |tag: IndexTag| GlobalIndex(vec![tag]);
    let mut check_in = |e: Event, within: Option<&Role>| {
        let blockers = rel.blockers(&e, within);
        if !blockers.is_empty() {
            let mut events = vec![e];
            events.extend(blockers);
            out.push(Violation { condition: Condition::Minimality, events, message: "enabled event is not minimal".into() });
        }
    };
    let mut mismatched = Vec::new();
    for (&me, procs) in &front {
        for leaf in procs {
            match leaf {
                P::Assign { index, .. } => check_in(Event::local(EventKind::Assign, top(*index), me), None),
                P::If { index, .. } => check_in(Event::local(EventKind::GuardIf, top(*index), me), None),
                P::While { index, .. } => check_in(Event::local(EventKind::GuardWhile, top(*index), me), None),
                P::ScopeLead { index, .. } => {
                    if let Some(e) = rel.scope_init(&top(*index)) {
                        check_in(e.clone(), Some(me));
                    }
                }
                P::Send { index, op, to, .. } => {
                    let partners: Vec<IndexTag> = front
                        .get(to)
                        .into_iter()
                        .flatten()
                        .filter_map(|l| match l {
                            P::Recv { index: ri, op: ro, from, .. } if ro == op && from == me => Some(*ri),
                            _ => None,
                        })
                        .collect();
                    if !partners.is_empty() {
                        check_in(Event::comm(EventKind::Sending, top(*index), me, op, to), None);
                    }
                    for ri in partners {
                        check_in(Event::comm(EventKind::Receiving, top(ri), to, op, me), None);
                        if !matching_indexes(*index, ri) {
                            mismatched.push(vec![
                                Event::comm(EventKind::Sending, top(*index), me, op, to),
                                Event::comm(EventKind::Receiving, top(ri), to, op, me),
                            ]);
                        }
                    }
                }
                P::SendHo { index, op, to, .. } => {
                    let ready = front
                        .get(to)
                        .into_iter()
                        .flatten()
                        .any(|l| matches!(l, P::ScopePlain { coordinator, .. } if coordinator == me));
                    if ready {
                        check_in(Event::comm(EventKind::Sending, top(*index), me, op, to), None);
                    }
                }
                P::Recv { .. } | P::ScopePlain { .. } => {}
                P::Seq(..) | P::Par(..) | P::One | P::Zero => {}
            }
        }
    }
    for events in mismatched {
        out.push(Violation { condition: Condition::Matching, events, message: "synchronisation of non-matching events".into() });
    }
    out
}

impl CausalityRelation {
    fn scope_init(&self, gidx: &GlobalIndex) -> Option<&Event> {
        self.events.iter().find(|e| e.kind == EventKind::ScopeInit && &e.gidx == gidx)
    }
}

/// Result of checking transitions during exploration.
#[derive(Clone, Debug)]
pub struct DynamicReport {
    pub freedom: FreedomReport,
    pub states_checked: usize,
    pub violations: Vec<Violation>,
}

impl DynamicReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Explore `sys` and check [`enabled_violations`] in every visited state.
pub fn check_minimal_transitions(sys: &DpocSystem, host: &HostEnv, opts: &ExploreOptions) -> DynamicReport {
    let mut seen: HashSet<u64> = HashSet::new();
    let mut violations: Vec<Violation> = Vec::new();
    let mut visit = |s: &DpocSystem| {
        let mut h = DefaultHasher::new();
        s.network.hash(&mut h);
        if seen.insert(h.finish()) {
            for v in enabled_violations(&s.network) {
                if !violations.contains(&v) {
                    violations.push(v);
                }
            }
        }
    };
    visit(sys);
    let freedom = check_freedom_with(sys, host, opts, &mut |_, _, dst| visit(dst));
    DynamicReport { freedom, states_checked: seen.len(), violations }
}

/// How the events of a choreography relate to those of its projection.
#[derive(Clone, Debug, Default)]
pub struct ProjectionEventReport {
    /// Choreography events absent from the projection.
    pub missing: Vec<Event>,
    /// Ordered choreography events whose order the projection loses.
    pub unordered: Vec<(Event, Event)>,
    pub dioc_events: usize,
    pub dpoc_events: usize,
}

impl ProjectionEventReport {
    pub fn is_ok(&self) -> bool {
        self.missing.is_empty() && self.unordered.is_empty()
    }
}

/// Compare the event structure of `p` with that of its projection.
pub fn check_projection_events(p: &D, n: &Network) -> ProjectionEventReport {
    let dioc = leq_dioc(p);
    let dpoc = leq_dpoc(n);
    let missing = dioc.events.iter().filter(|e| !dpoc.contains(e)).cloned().collect();
    let mut unordered = Vec::new();
    for (a, b) in dioc.pairs() {
        if !(dpoc.leq(&a, &b) || dpoc.partners(&b).iter().any(|bb| dpoc.leq(&a, bb))) {
            unordered.push((a, b));
        }
    }
    ProjectionEventReport { missing, unordered, dioc_events: dioc.events.len(), dpoc_events: dpoc.events.len() }
}

/// [`check_projection_events`] on `proj(p, Σ)` for the empty state.
pub fn check_projection_events_default(p: &D) -> ProjectionEventReport {
    check_projection_events(p, &proj(p, &Default::default()))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::ast::{annotate, Expr};
    use crate::parser::parse_dioc_str;

    fn prog(src: &str) -> D {
        annotate(&parse_dioc_str(src).unwrap())
    }

    fn g(tags: &[u32]) -> GlobalIndex {
        GlobalIndex(tags.iter().map(|&t| IndexTag::plain(t)).collect())
    }

    fn r(name: &str) -> Role {
        Role::new(name)
    }

    fn send(i: u32, op: &str, to: &str) -> P {
        P::Send { index: IndexTag::plain(i), op: Operation::public(op), expr: Expr::int(1), to: r(to) }
    }

    fn recv(i: u32, op: &str, from: &str) -> P {
        P::Recv { index: IndexTag::plain(i), op: Operation::public(op), var: Arc::from("x"), from: r(from) }
    }

    fn net(roles: Vec<(&str, P)>) -> Network {
        let mut n = Network::default();
        for (name, p) in roles {
            n.insert(r(name), p, Default::default());
        }
        n
    }

    fn f(i: &[u32], at: &str, op: &str, to: &str) -> Event {
        Event::comm(EventKind::Sending, g(i), &r(at), &Operation::public(op), &r(to))
    }

    fn t(i: &[u32], at: &str, op: &str, from: &str) -> Event {
        Event::comm(EventKind::Receiving, g(i), &r(at), &Operation::public(op), &r(from))
    }

    #[test]
    fn single_interaction_has_a_send_and_a_receive() {
        let p = prog("o : a( 1 ) -> b( x )");
        let evs = events_dioc(&p);
        assert_eq!(evs, BTreeSet::from([f(&[1], "a", "o", "b"), t(&[1], "b", "o", "a")]));
        assert!(leq_dioc(&p).leq(&f(&[1], "a", "o", "b"), &t(&[1], "b", "o", "a")));
    }

    #[test]
    fn inaction_has_no_events() {
        assert!(events_dioc(&D::One).is_empty());
    }

    #[test]
    fn scope_brackets_its_body() {
        let p = prog("scope @a { x@a = 1 }");
        let rel = leq_dioc(&p);
        let kinds: Vec<EventKind> = rel.events().iter().map(|e| e.kind).collect();
        assert_eq!(kinds.len(), 3);
        let up = rel.events().iter().find(|e| e.kind == EventKind::ScopeInit).unwrap();
        let down = rel.events().iter().find(|e| e.kind == EventKind::ScopeTerm).unwrap();
        let body = rel.events().iter().find(|e| e.kind == EventKind::Assign).unwrap();
        assert!(rel.leq(up, body) && rel.leq(body, down));
        assert!(!rel.leq(down, up));
    }

    #[test]
    fn sequence_orders_both_roles() {
        let p = prog("o : a( 1 ) -> b( x ); p : b( x ) -> c( y )");
        let rel = leq_dioc(&p);
        let (fa, ta) = (f(&[1], "a", "o", "b"), t(&[1], "b", "o", "a"));
        let (fb, tb) = (f(&[2], "b", "p", "c"), t(&[2], "c", "p", "b"));
        for a in [&fa, &ta] {
            for b in [&fb, &tb] {
                assert!(rel.leq(a, b), "{a} <= {b}");
                assert!(!rel.leq(b, a));
            }
        }
    }

    #[test]
    fn guard_precedes_both_branches() {
        let p = prog("if c @a { o : a( 1 ) -> b( x ) } else { p : a( 2 ) -> b( x ) }");
        let rel = leq_dioc(&p);
        let guard = rel.events().iter().find(|e| e.kind == EventKind::GuardIf).unwrap().clone();
        for e in rel.events().iter().filter(|e| e.kind.is_communication()) {
            assert!(rel.leq(&guard, e));
        }
        let fo = rel.events().iter().find(|e| e.op == Some(Operation::public("o")) && e.kind == EventKind::Sending).unwrap();
        let fp = rel.events().iter().find(|e| e.op == Some(Operation::public("p")) && e.kind == EventKind::Sending).unwrap();
        assert!(rel.conflicting(fo, fp));
    }

    #[test]
    fn while_events_carry_the_loop_index() {
        let p = prog("while c @a { o : a( 1 ) -> b( x ) }");
        let evs = events_dioc(&p);
        assert!(evs.contains(&f(&[1, 2], "a", "o", "b")));
    }

    #[test]
    fn projection_keeps_send_before_receive() {
        let p = prog("o : a( 1 ) -> b( x )");
        let rel = leq_dpoc(&proj(&p, &Default::default()));
        assert!(rel.leq(&f(&[1], "a", "o", "b"), &t(&[1], "b", "o", "a")));
    }

    #[test]
    fn lead_body_sits_between_scope_events() {
        let p = prog("scope @a { o : a( 1 ) -> b( x ) }");
        let rel = leq_dpoc(&proj(&p, &Default::default()));
        let up = rel.events().iter().find(|e| e.kind == EventKind::ScopeInit).unwrap();
        let down = rel.events().iter().find(|e| e.kind == EventKind::ScopeTerm).unwrap();
        assert_eq!(up.roles, BTreeSet::from([r("a"), r("b")]));
        let body = f(&[2], "a", "o", "b");
        assert!(rel.leq(up, &body) && rel.leq(&body, down));
    }

    #[test]
    fn parallel_sends_are_unordered() {
        let n = net(vec![("a", P::par(send(1, "o", "b"), send(2, "p", "b")))]);
        let rel = leq_dpoc(&n);
        let (x, y) = (f(&[1], "a", "o", "b"), f(&[2], "a", "p", "b"));
        assert!(!rel.leq(&x, &y) && !rel.leq(&y, &x));
    }

    #[test]
    fn unordered_sends_on_one_channel_violate_send_order() {
        let n = net(vec![("a", P::par(send(1, "o", "b"), send(2, "o", "b")))]);
        let report = check_well_annotated_dpoc(&n);
        assert!(report.violations.iter().any(|v| v.condition == Condition::SendOrder));
    }

    #[test]
    fn conflicting_sends_are_exempt() {
        let branchy = P::If {
            index: IndexTag::plain(3),
            guard: Expr::bool(true),
            then: Arc::new(send(1, "o", "b")),
            els: Arc::new(send(2, "o", "b")),
        };
        let report = check_well_annotated_dpoc(&net(vec![("a", branchy)]));
        assert!(report.is_ok(), "{:?}", report.violations);
    }

    #[test]
    fn three_events_on_one_index_violate_pairing() {
        let n = net(vec![("a", P::seq(send(1, "o", "b"), send(1, "p", "c"))), ("b", recv(1, "o", "a"))]);
        let report = check_well_annotated_dpoc(&n);
        assert!(report.violations.iter().any(|v| v.condition == Condition::CommunicationPairs));
    }

    #[test]
    fn repeated_index_after_a_loop_is_rejected() {
        let body = P::While { index: IndexTag::plain(4), guard: Expr::bool(true), body: Arc::new(recv(5, "o", "a")) };
        let ok = net(vec![("b", P::seq(recv(5, "o", "a"), body.clone()))]);
        assert!(!check_well_annotated_dpoc(&ok).violations.iter().any(|v| v.condition == Condition::LoopIndexes));
        let bad = net(vec![("b", P::seq(body, recv(5, "o", "a")))]);
        assert!(check_well_annotated_dpoc(&bad).violations.iter().any(|v| v.condition == Condition::LoopIndexes));
    }

    #[test]
    fn projections_are_well_annotated() {
        let p = prog(
            "o : a( 1 ) -> b( x ); if x @b { p : b( x ) -> c( y ) } else { q : b( 0 ) -> c( y ) }; \
             while y < 3 @c { r : c( y ) -> a( z ); y@c = y + 1 }",
        );
        let n = proj(&p, &Default::default());
        let report = check_well_annotated_dpoc(&n);
        assert!(report.is_ok(), "{:?}", report.violations);
        assert!(check_projection_events(&p, &n).is_ok());
    }

    #[test]
    fn enabled_event_behind_another_is_reported() {
        let n = net(vec![
            ("a", P::par(send(1, "o", "b"), send(2, "o", "b"))),
            ("b", P::seq(recv(1, "o", "a"), recv(2, "o", "a"))),
        ]);
        let v = enabled_violations(&n);
        assert!(v.iter().any(|v| v.condition == Condition::Minimality));
        assert!(v.iter().any(|v| v.condition == Condition::Matching));
    }

    #[test]
    fn enabled_events_of_a_projection_are_minimal() {
        let p = prog("o : a( 1 ) -> b( x ); p : b( x ) -> a( y )");
        assert!(enabled_violations(&proj(&p, &Default::default())).is_empty());
    }
}

//! Operational semantics of endpoint networks.
//!
//! Each role contributes *offers*: local steps it can take alone, and
//! communication actions that need a partner. Receives are offered without a
//! value and are concretized when a matching send is found, so the value
//! domain never has to be enumerated. The system level combines offers into
//! synchronizations, lifts local steps and fires the global termination step
//! when every role can terminate.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::ast::{
    roles_of, DpocProcess as P, Expr, HoPayload, IndexTag, LocalState, Name, Operation, Role, UpdateSet, Value,
    DISCARD_VAR, OK_TOKEN,
};
use crate::connectedness::is_connected;
use crate::dioc_sem::{drive, eval_expr, eval_guard, HostEnv, Label, PayloadKind, Policy, Schedule, Step, TraceError};
use crate::projection::{fresh_indexes, pi_with, AuxNamer, Network, ProjectionMutation};
use crate::term::{apply, can_tick, leaves, Path};

/// An endpoint system: available updates, the network, the next unused
/// index, and per-role loop counters.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DpocSystem {
    pub updates: UpdateSet,
    pub network: Network,
    pub allocator: u32,
    pub unfolds: BTreeMap<(Role, u32), u32>,
    /// Set once the global termination step has fired.
    pub terminated: bool,
    /// Fault injected into code produced at run time by scope coordinators.
    pub mutation: Option<ProjectionMutation>,
}

impl DpocSystem {
    pub fn new(network: Network, updates: UpdateSet) -> Self {
        let allocator = network.max_index() + 1;
        DpocSystem { updates, network, allocator, unfolds: BTreeMap::new(), terminated: false, mutation: None }
    }

    pub fn with_allocator(mut self, n: u32) -> Self {
        self.allocator = self.allocator.max(n);
        self
    }

    pub fn with_mutation(mut self, m: Option<ProjectionMutation>) -> Self {
        self.mutation = m;
        self
    }
}

/// What a single role can do in its current state.
#[derive(Clone, Debug)]
pub enum Offer {
    /// A step the role takes alone: assignment, guard evaluation, or a
    /// coordinator's update decision (which may consume fresh indexes).
    Local { label: Label, proc: P, local: LocalState, unfold: Option<u32>, allocator: Option<u32> },
    Tick,
    Send { index: IndexTag, op: Operation, value: Value, to: Role, proc: P, local: LocalState },
    Recv { index: IndexTag, op: Operation, var: Name, from: Role, path: Path },
    SendHo { index: IndexTag, op: Operation, payload: HoPayload, to: Role, ack: IndexTag, proc: P },
    ScopeWait { index: IndexTag, coordinator: Role, body: Arc<P>, path: Path },
}

impl Offer {
    /// Role-level label of the offer.
    pub fn label(&self, at_role: &Role) -> Label {
        match self {
            Offer::Local { label, .. } => label.clone(),
            Offer::Tick => Label::Tick,
            Offer::Send { op, value, to, .. } => {
                Label::Send { op: op.clone(), value: value.clone(), to: to.clone(), at: at_role.clone() }
            }
            Offer::Recv { op, var, from, .. } => Label::Recv {
                op: op.clone(),
                var: var.clone(),
                value: Value::Null,
                from: from.clone(),
                at: at_role.clone(),
            },
            Offer::SendHo { op, payload, to, .. } => Label::SendHo {
                op: op.clone(),
                payload: payload_kind(payload),
                to: to.clone(),
                at: at_role.clone(),
            },
            Offer::ScopeWait { index, coordinator, .. } => Label::Recv {
                op: Operation::aux(index.base),
                var: Arc::from(DISCARD_VAR),
                value: Value::Null,
                from: coordinator.clone(),
                at: at_role.clone(),
            },
        }
    }
}

fn payload_kind(p: &HoPayload) -> PayloadKind {
    match p {
        HoPayload::No => PayloadKind::No,
        HoPayload::Code(_) => PayloadKind::Code,
    }
}

/// The offers of role `me` running `proc` in `local`.
pub fn role_enabled(
    proc: &P,
    local: &LocalState,
    me: &Role,
    sys: &DpocSystem,
    host: &HostEnv,
    loop_bound: Option<u32>,
) -> (Vec<Offer>, bool) {
    let mut out = Vec::new();
    let mut suppressed = false;
    if can_tick(proc) {
        out.push(Offer::Tick);
    }
    for (path, leaf) in leaves(proc) {
        let replace = |repl: P| apply(proc, &path, repl);
        match leaf {
            P::Assign { var, expr, .. } => {
                let mut l = local.clone();
                let v = eval_expr(expr, &mut l, me, host);
                l.set(var, v);
                out.push(Offer::Local { label: Label::Tau, proc: replace(P::One), local: l, unfold: None, allocator: None });
            }
            P::If { guard, then, els, .. } => {
                let mut l = local.clone();
                let b = eval_guard(guard, &mut l, me, host);
                let branch = if b { then } else { els };
                out.push(Offer::Local {
                    label: Label::Tau,
                    proc: replace(branch.as_ref().clone()),
                    local: l,
                    unfold: None,
                    allocator: None,
                });
            }
            P::While { index, guard, body } => {
                let mut l = local.clone();
                if eval_guard(guard, &mut l, me, host) {
                    let count = sys.unfolds.get(&(me.clone(), index.base)).copied().unwrap_or(0);
                    if loop_bound.is_some_and(|b| count >= b) {
                        suppressed = true;
                        continue;
                    }
                    out.push(Offer::Local {
                        label: Label::Tau,
                        proc: replace(P::seq(body.as_ref().clone(), leaf.clone())),
                        local: l,
                        unfold: Some(index.base),
                        allocator: None,
                    });
                } else {
                    out.push(Offer::Local { label: Label::Tau, proc: replace(P::One), local: l, unfold: None, allocator: None });
                }
            }
            P::Send { index, op, expr, to } => {
                let mut l = local.clone();
                let value = eval_expr(expr, &mut l, me, host);
                out.push(Offer::Send { index: *index, op: op.clone(), value, to: to.clone(), proc: replace(P::One), local: l });
            }
            P::Recv { index, op, var, from } => {
                out.push(Offer::Recv { index: *index, op: op.clone(), var: var.clone(), from: from.clone(), path: path.clone() });
            }
            P::SendHo { index, op, payload, to, ack } => out.push(Offer::SendHo {
                index: *index,
                op: op.clone(),
                payload: payload.clone(),
                to: to.clone(),
                ack: *ack,
                proc: replace(P::One),
            }),
            P::ScopePlain { index, coordinator, body, .. } => out.push(Offer::ScopeWait {
                index: *index,
                coordinator: coordinator.clone(),
                body: body.clone(),
                path: path.clone(),
            }),
            P::ScopeLead { index, body, roles, .. } => {
                lead_offers(index.base, me, body, roles, sys, &replace, local, &mut out);
            }
            P::Seq(..) | P::Par(..) | P::One | P::Zero => unreachable!("not a leaf"),
        }
    }
    (out, suppressed)
}

#[allow(clippy::too_many_arguments)]
fn lead_offers(
    n: u32,
    me: &Role,
    body: &Arc<P>,
    roles: &BTreeSet<Role>,
    sys: &DpocSystem,
    replace: &dyn Fn(P) -> P,
    local: &LocalState,
    out: &mut Vec<Offer>,
) {
    let others: Vec<Role> = roles.iter().filter(|r| *r != me).cloned().collect();
    let reorder = sys.mutation == Some(ProjectionMutation::ReorderScopeBroadcasts);
    let assemble = |sends: Vec<P>, mine: P, acks: Vec<P>| {
        if reorder {
            P::seq(P::seq(P::par_all(sends), P::par_all(acks)), mine)
        } else {
            P::seq(P::seq(P::par_all(sends), mine), P::par_all(acks))
        }
    };
    let handshake = |alloc: &mut u32, payload: &dyn Fn(&Role) -> HoPayload| {
        let mut sends = Vec::new();
        let mut acks = Vec::new();
        for r in &others {
            let a = IndexTag::plain(*alloc);
            let b = IndexTag::plain(*alloc + 1);
            *alloc += 2;
            sends.push(P::SendHo { index: a, op: Operation::aux(n), payload: payload(r), to: r.clone(), ack: b });
            acks.push(P::Recv { index: b, op: Operation::aux(n), var: Arc::from(DISCARD_VAR), from: r.clone() });
        }
        (sends, acks)
    };

    for upd in &sys.updates.updates {
        if !roles_of(&upd.body).is_subset(roles) || !is_connected(&upd.body) {
            continue;
        }
        let mut alloc = sys.allocator;
        let fresh = fresh_indexes(&upd.body, n, &mut alloc);
        let namer = AuxNamer::new(&fresh, alloc);
        alloc = namer.next;
        let shipped = if sys.mutation == Some(ProjectionMutation::Misprefix) {
            fresh.map_operations(&|o| o.unprefixed())
        } else {
            fresh.clone()
        };
        let (sends, acks) = handshake(&mut alloc, &|r: &Role| {
            HoPayload::Code(Arc::new(pi_with(&shipped, r, &namer, sys.mutation)))
        });
        let mine = pi_with(&fresh, me, &namer, sys.mutation);
        out.push(Offer::Local {
            label: Label::AppliedUpdate { name: upd.name.clone() },
            proc: replace(assemble(sends, mine, acks)),
            local: local.clone(),
            unfold: None,
            allocator: Some(alloc),
        });
    }

    let mut alloc = sys.allocator;
    let (sends, acks) = handshake(&mut alloc, &|_: &Role| HoPayload::No);
    out.push(Offer::Local {
        label: Label::NoUp,
        proc: replace(assemble(sends, body.as_ref().clone(), acks)),
        local: local.clone(),
        unfold: None,
        allocator: Some(alloc),
    });
}

/// Do a send index and a receive index belong to matching events?
pub fn matching_indexes(send: IndexTag, recv: IndexTag) -> bool {
    send.base == recv.base
}

/// All system transitions, with no loop bound.
pub fn system_enabled(sys: &DpocSystem, host: &HostEnv) -> Vec<(Label, DpocSystem)> {
    dpoc_step(sys, host, None).transitions
}

/// Offers of every role.
pub fn network_offers(sys: &DpocSystem, host: &HostEnv, loop_bound: Option<u32>) -> (BTreeMap<Role, Vec<Offer>>, bool) {
    let mut suppressed = false;
    let mut offers = BTreeMap::new();
    for (r, (proc, local)) in &sys.network.roles {
        let (o, s) = role_enabled(proc, local, r, sys, host, loop_bound);
        suppressed |= s;
        offers.insert(r.clone(), o);
    }
    (offers, suppressed)
}

/// All system transitions; a loop unfolding beyond `loop_bound` is withheld.
pub fn dpoc_step(sys: &DpocSystem, host: &HostEnv, loop_bound: Option<u32>) -> Step<DpocSystem> {
    let (offers, suppressed) = network_offers(sys, host, loop_bound);
    Step { transitions: combine(sys, &offers), suppressed }
}

/// Combine role offers into system transitions.
pub fn combine(sys: &DpocSystem, offers: &BTreeMap<Role, Vec<Offer>>) -> Vec<(Label, DpocSystem)> {
    let mut out = Vec::new();
    if !sys.terminated && offers.values().all(|o| o.iter().any(|x| matches!(x, Offer::Tick))) {
        let mut next = sys.clone();
        for (proc, _) in next.network.roles.values_mut() {
            *proc = P::Zero;
        }
        next.terminated = true;
        out.push((Label::Tick, next));
    }
    for (r, os) in offers {
        for o in os {
            match o {
                Offer::Local { label, proc, local, unfold, allocator } => {
                    let mut next = sys.clone();
                    next.network.insert(r.clone(), proc.clone(), local.clone());
                    if let Some(k) = unfold {
                        *next.unfolds.entry((r.clone(), *k)).or_insert(0) += 1;
                    }
                    if let Some(a) = allocator {
                        next.allocator = *a;
                    }
                    out.push((label.clone(), next));
                }
                Offer::Send { op, value, to, proc, local, .. } => {
                    if to == r {
                        continue;
                    }
                    let Some(peer) = offers.get(to) else { continue };
                    for p in peer {
                        let Offer::Recv { index: ri, op: rop, var, from, path } = p else { continue };
                        if rop != op || from != r {
                            continue;
                        }
                        let mut next = sys.clone();
                        next.network.insert(r.clone(), proc.clone(), local.clone());
                        let (rproc, rlocal) = &sys.network.roles[to];
                        let assign = P::Assign { index: *ri, var: var.clone(), expr: Expr::Lit(value.clone()) };
                        next.network.insert(to.clone(), apply(rproc, path, assign), rlocal.clone());
                        let label = Label::Interaction {
                            op: op.clone(),
                            from: r.clone(),
                            value: value.clone(),
                            to: to.clone(),
                            var: var.clone(),
                        };
                        out.push((label, next));
                    }
                }
                Offer::SendHo { op, payload, to, ack, proc, .. } => {
                    if to == r {
                        continue;
                    }
                    let Some(peer) = offers.get(to) else { continue };
                    for p in peer {
                        let Offer::ScopeWait { index, coordinator, body, path } = p else { continue };
                        if coordinator != r || Operation::aux(index.base) != *op {
                            continue;
                        }
                        let code = match payload {
                            HoPayload::Code(c) => c.as_ref().clone(),
                            HoPayload::No => body.as_ref().clone(),
                        };
                        let reply = P::Send {
                            index: *ack,
                            op: op.clone(),
                            expr: Expr::Lit(Value::str(OK_TOKEN)),
                            to: r.clone(),
                        };
                        let mut next = sys.clone();
                        let slocal = &sys.network.roles[r].1;
                        next.network.insert(r.clone(), proc.clone(), slocal.clone());
                        let (rproc, rlocal) = &sys.network.roles[to];
                        next.network.insert(to.clone(), apply(rproc, path, P::seq(code, reply)), rlocal.clone());
                        let label =
                            Label::HigherOrder { op: op.clone(), from: r.clone(), to: to.clone(), payload: payload_kind(payload) };
                        out.push((label, next));
                    }
                }
                Offer::Tick | Offer::Recv { .. } | Offer::ScopeWait { .. } => {}
            }
        }
    }
    out
}

/// Run an endpoint system for at most `max_steps` transitions.
pub fn dpoc_trace(
    sys: &DpocSystem,
    host: &HostEnv,
    policy: &Policy,
    max_steps: usize,
    schedule: &Schedule,
) -> Result<Vec<Label>, TraceError> {
    drive(
        sys.clone(),
        |s| system_enabled(s, host),
        |s, u| {
            let mut n = s.clone();
            n.updates = u.clone();
            n
        },
        policy,
        max_steps,
        schedule,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{annotate, GlobalState};
    use crate::parser::{parse_dioc_str, parse_dpoc_network};
    use crate::projection::proj;

    fn net(src: &str) -> DpocSystem {
        DpocSystem::new(parse_dpoc_network(src).unwrap(), UpdateSet::empty())
    }

    #[test]
    fn lone_one_ticks_once() {
        let s = net("role a { 1 }");
        let t = system_enabled(&s, &HostEnv::default());
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].0, Label::Tick);
        assert!(system_enabled(&t[0].1, &HostEnv::default()).is_empty());
    }

    #[test]
    fn empty_network_ticks_once() {
        let s = DpocSystem::new(Network::default(), UpdateSet::empty());
        let t = dpoc_trace(&s, &HostEnv::default(), &Policy::FirstEnabled, 10, &Schedule::none()).unwrap();
        assert_eq!(t, vec![Label::Tick]);
    }

    #[test]
    fn send_meets_receive() {
        let s = net("role a { o : 5 to b } role b { o : x from a }");
        let t = system_enabled(&s, &HostEnv::default());
        assert_eq!(t.len(), 1);
        assert!(matches!(&t[0].0, Label::Interaction { value: Value::Int(5), .. }));
    }

    #[test]
    fn unmatched_send_is_stuck() {
        let s = net("role a { o : 5 to b }");
        assert!(system_enabled(&s, &HostEnv::default()).is_empty());
    }

    #[test]
    fn projected_interaction_trace() {
        let p = annotate(&parse_dioc_str("o : a( 5 ) -> b( x )").unwrap());
        let s = DpocSystem::new(proj(&p, &GlobalState::default()), UpdateSet::empty());
        let t = dpoc_trace(&s, &HostEnv::default(), &Policy::FirstEnabled, 10, &Schedule::none()).unwrap();
        assert_eq!(t.len(), 3);
        assert!(matches!(t[0], Label::Interaction { .. }));
        assert_eq!(t[1..], [Label::Tau, Label::Tick]);
    }

    #[test]
    fn lead_without_updates_offers_no_up_only() {
        let p = annotate(&parse_dioc_str("scope @a { o : a( 1 ) -> b( x ) }").unwrap());
        let s = DpocSystem::new(proj(&p, &GlobalState::default()), UpdateSet::empty());
        let t = system_enabled(&s, &HostEnv::default());
        assert_eq!(t.iter().map(|(l, _)| l.clone()).collect::<Vec<_>>(), vec![Label::NoUp]);
    }
}

//! Endpoint projection.
//!
//! [`pi`] extracts the behaviour of one role from an annotated
//! choreography. Conditionals and loops are coordinated with auxiliary
//! private operations `o*_n`, where `n` is the index of the construct; their
//! endpoints carry extra indexes chosen by an [`AuxNamer`]. [`proj`] builds a
//! whole network, and [`fresh_indexes`] prepares an update for shipping at
//! run time.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::ast::{
    annotate_from, roles_of, DiocProcess as D, DpocProcess as P, Expr, GlobalState, IndexTag, LocalState,
    Operation, Role, Value, AUX_VAR_PREFIX, DISCARD_VAR, OK_TOKEN,
};

/// Endpoint processes with their local states, keyed by role name.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Network {
    pub roles: BTreeMap<Role, (P, LocalState)>,
}

impl Network {
    pub fn insert(&mut self, role: Role, proc: P, local: LocalState) {
        self.roles.insert(role, (proc, local));
    }

    pub fn proc(&self, role: &Role) -> Option<&P> {
        self.roles.get(role).map(|(p, _)| p)
    }

    pub fn max_index(&self) -> u32 {
        self.roles.values().map(|(p, _)| p.max_index()).max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }
}

/// Deliberate faults used to show that the equivalence check is sensitive
/// to each part of the coordination protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProjectionMutation {
    /// Participants of a conditional or loop skip the first guard receive.
    DropAuxRecv,
    /// The coordinator of a conditional broadcasts the negated guard.
    SwapBroadcast,
    /// Code shipped by an update keeps the original operation names while
    /// the coordinator uses prefixed ones.
    Misprefix,
    /// Loop participants never acknowledge an iteration.
    DropAck,
    /// The scope coordinator collects acknowledgements before running its body.
    ReorderScopeBroadcasts,
}

impl ProjectionMutation {
    pub const ALL: [ProjectionMutation; 5] = [
        ProjectionMutation::DropAuxRecv,
        ProjectionMutation::SwapBroadcast,
        ProjectionMutation::Misprefix,
        ProjectionMutation::DropAck,
        ProjectionMutation::ReorderScopeBroadcasts,
    ];
}

/// Fresh indexes for auxiliary communications: for each conditional or loop
/// and each participant, an index `i` for guard messages and, for loops, an
/// index `j` for acknowledgements.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuxNamer {
    pub next: u32,
    pub assignments: BTreeMap<(u32, Role), (u32, Option<u32>)>,
}

fn participants(p: &D) -> Vec<Role> {
    match p {
        D::If { role, then, els, .. } => {
            let mut rs = roles_of(then);
            rs.extend(roles_of(els));
            rs.remove(role);
            rs.into_iter().collect()
        }
        D::While { role, body, .. } => {
            let mut rs = roles_of(body);
            rs.remove(role);
            rs.into_iter().collect()
        }
        _ => Vec::new(),
    }
}

impl AuxNamer {
    /// Allocate in preorder, starting at `first`.
    pub fn new(p: &D, first: u32) -> Self {
        let mut namer = AuxNamer { next: first, assignments: BTreeMap::new() };
        let mut stack = vec![p];
        while let Some(node) = stack.pop() {
            let is_while = matches!(node, D::While { .. });
            if let (Some(n), true) = (node.index(), matches!(node, D::If { .. } | D::While { .. })) {
                for s in participants(node) {
                    let i = namer.fresh();
                    let j = if is_while { Some(namer.fresh()) } else { None };
                    namer.assignments.insert((n, s), (i, j));
                }
            }
            for c in node.children().into_iter().rev() {
                stack.push(c);
            }
        }
        namer
    }

    /// Starting just above the largest index of `p`.
    pub fn for_program(p: &D) -> Self {
        AuxNamer::new(p, p.max_index() + 1)
    }

    fn fresh(&mut self) -> u32 {
        let i = self.next;
        self.next += 1;
        i
    }

    fn get(&self, n: u32, s: &Role) -> (u32, Option<u32>) {
        *self.assignments.get(&(n, s.clone())).expect("auxiliary index allocated for every participant")
    }
}

fn aux_var(n: u32) -> Arc<str> {
    Arc::from(format!("{AUX_VAR_PREFIX}{n}").as_str())
}

fn broadcast(n: u32, namer: &AuxNamer, to: &[Role], value: bool, tag: bool) -> P {
    P::par_all(
        to.iter()
            .map(|r| P::Send {
                index: IndexTag::branch(namer.get(n, r).0, tag),
                op: Operation::aux(n),
                expr: Expr::Lit(Value::Bool(value)),
                to: r.clone(),
            })
            .collect(),
    )
}

struct Projector<'a> {
    namer: &'a AuxNamer,
    mutation: Option<ProjectionMutation>,
}

impl Projector<'_> {
    fn pi(&self, p: &D, s: &Role) -> P {
        match p {
            D::Interaction { index, op, sender, expr, receiver, var, .. } => {
                let index = IndexTag::plain(index.expect("annotated"));
                if s == sender {
                    P::Send { index, op: op.clone(), expr: expr.clone(), to: receiver.clone() }
                } else if s == receiver {
                    P::Recv { index, op: op.clone(), var: var.clone(), from: sender.clone() }
                } else {
                    P::One
                }
            }
            D::Assign { index, var, role, expr, .. } => {
                if s == role {
                    P::Assign { index: IndexTag::plain(index.expect("annotated")), var: var.clone(), expr: expr.clone() }
                } else {
                    P::One
                }
            }
            D::Seq { left, right, .. } => P::seq(self.pi(left, s), self.pi(right, s)),
            D::Par { left, right, .. } => P::par(self.pi(left, s), self.pi(right, s)),
            D::One => P::One,
            D::Zero => P::Zero,
            D::If { index, guard, role, then, els, .. } => {
                let n = index.expect("annotated");
                let parts = participants(p);
                if s == role {
                    let swap = self.mutation == Some(ProjectionMutation::SwapBroadcast);
                    P::If {
                        index: IndexTag::plain(n),
                        guard: guard.clone(),
                        then: Arc::new(P::seq(broadcast(n, self.namer, &parts, !swap, true), self.pi(then, s))),
                        els: Arc::new(P::seq(broadcast(n, self.namer, &parts, swap, false), self.pi(els, s))),
                    }
                } else if parts.contains(s) {
                    let (i, _) = self.namer.get(n, s);
                    let recv = P::Recv { index: IndexTag::plain(i), op: Operation::aux(n), var: aux_var(n), from: role.clone() };
                    let recv = if self.mutation == Some(ProjectionMutation::DropAuxRecv) { P::One } else { recv };
                    P::seq(
                        recv,
                        P::If {
                            index: IndexTag::plain(n),
                            guard: Expr::Var(aux_var(n)),
                            then: Arc::new(self.pi(then, s)),
                            els: Arc::new(self.pi(els, s)),
                        },
                    )
                } else {
                    P::One
                }
            }
            D::While { index, guard, role, body, .. } => {
                let n = index.expect("annotated");
                let parts = participants(p);
                if s == role {
                    let acks = P::par_all(
                        parts
                            .iter()
                            .map(|r| P::Recv {
                                index: IndexTag::plain(self.namer.get(n, r).1.expect("loop ack index")),
                                op: Operation::aux(n),
                                var: Arc::from(DISCARD_VAR),
                                from: r.clone(),
                            })
                            .collect(),
                    );
                    let iteration = P::seq(P::seq(broadcast(n, self.namer, &parts, true, true), self.pi(body, s)), acks);
                    P::seq(
                        P::While { index: IndexTag::plain(n), guard: guard.clone(), body: Arc::new(iteration) },
                        broadcast(n, self.namer, &parts, false, false),
                    )
                } else if parts.contains(s) {
                    let (i, j) = self.namer.get(n, s);
                    let recv = || P::Recv { index: IndexTag::plain(i), op: Operation::aux(n), var: aux_var(n), from: role.clone() };
                    let ack = P::Send {
                        index: IndexTag::plain(j.expect("loop ack index")),
                        op: Operation::aux(n),
                        expr: Expr::Lit(Value::str(OK_TOKEN)),
                        to: role.clone(),
                    };
                    let ack = if self.mutation == Some(ProjectionMutation::DropAck) { P::One } else { ack };
                    let first = if self.mutation == Some(ProjectionMutation::DropAuxRecv) { P::One } else { recv() };
                    P::seq(
                        first,
                        P::While {
                            index: IndexTag::plain(n),
                            guard: Expr::Var(aux_var(n)),
                            body: Arc::new(P::seq(P::seq(self.pi(body, s), ack), recv())),
                        },
                    )
                } else {
                    P::One
                }
            }
            D::Scope { index, coordinator, body, name, .. } => {
                let index = IndexTag::plain(index.expect("annotated"));
                let roles = roles_of(body);
                if s == coordinator {
                    P::ScopeLead {
                        index,
                        coordinator: coordinator.clone(),
                        body: Arc::new(self.pi(body, s)),
                        roles,
                        name: name.clone(),
                    }
                } else if roles.contains(s) {
                    P::ScopePlain { index, coordinator: coordinator.clone(), body: Arc::new(self.pi(body, s)), name: name.clone() }
                } else {
                    P::One
                }
            }
        }
    }
}

/// Project an annotated choreography on role `s`, with auxiliary indexes
/// starting just above the program's largest index.
pub fn pi(p: &D, s: &Role) -> P {
    pi_with(p, s, &AuxNamer::for_program(p), None)
}

/// Project with a given auxiliary namer and optional fault.
pub fn pi_with(p: &D, s: &Role, namer: &AuxNamer, mutation: Option<ProjectionMutation>) -> P {
    Projector { namer, mutation }.pi(p, s)
}

/// Project on every role of `p`, giving each role its slice of `sigma`.
pub fn proj(p: &D, sigma: &GlobalState) -> Network {
    proj_with(p, sigma, None)
}

pub fn proj_with(p: &D, sigma: &GlobalState, mutation: Option<ProjectionMutation>) -> Network {
    let namer = AuxNamer::for_program(p);
    let mut net = Network::default();
    for r in roles_of(p) {
        let proc = pi_with(p, &r, &namer, mutation);
        let local = sigma.local(&r);
        net.insert(r, proc, local);
    }
    net
}

/// Copy of an update with fresh construct indexes drawn from `alloc` and
/// every operation prefixed by the scope index `n`.
pub fn fresh_indexes(upd: &D, n: u32, alloc: &mut u32) -> D {
    let fresh = annotate_from(upd, *alloc);
    *alloc += fresh.indexes().len() as u32;
    fresh.map_operations(&|o| o.with_prefix(n))
}

/// Roles involved in a scope body, as recorded by the coordinator.
pub fn scope_roles(body: &D) -> BTreeSet<Role> {
    roles_of(body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{annotate, HoPayload};
    use crate::parser::parse_dioc_str;

    fn prog(src: &str) -> D {
        annotate(&parse_dioc_str(src).unwrap())
    }

    #[test]
    fn interaction_projects_to_send_recv_one() {
        let p = prog("o : r1( e ) -> r2( x )");
        assert!(matches!(pi(&p, &"r1".into()), P::Send { .. }));
        assert!(matches!(pi(&p, &"r2".into()), P::Recv { .. }));
        assert_eq!(pi(&p, &"r3".into()), P::One);
        assert_eq!(pi(&prog("x@r = 1"), &"s".into()), P::One);
    }

    #[test]
    fn proj_builds_one_role_per_participant() {
        assert!(proj(&D::One, &GlobalState::default()).is_empty());
        let n = proj(&prog("o : a( 5 ) -> b( x )"), &GlobalState::default());
        assert_eq!(n.roles.len(), 2);
    }

    #[test]
    fn conditional_indexes_follow_the_scheme() {
        let p = prog("if ( true )@a { o : a( 1 ) -> b( x ) } else { q : a( 2 ) -> c( y ) }");
        let namer = AuxNamer::for_program(&p);
        assert_eq!(namer.assignments.len(), 2);
        let (ib, _) = namer.get(1, &"b".into());
        let P::If { then, .. } = pi(&p, &"a".into()) else { panic!() };
        let P::Seq(bc, _) = then.as_ref() else { panic!() };
        let P::Par(first, _) = bc.as_ref() else { panic!() };
        assert!(matches!(first.as_ref(), P::Send { index, .. } if *index == IndexTag::branch(ib, true)));
        let P::Seq(recv, _) = pi(&p, &"b".into()) else { panic!() };
        assert!(matches!(recv.as_ref(), P::Recv { index, .. } if *index == IndexTag::plain(ib)));
    }

    #[test]
    fn fresh_indexes_prefix_operations() {
        let u = parse_dioc_str("cardReq : seller( null ) -> buyer( _ ); x@buyer = 1").unwrap();
        let mut alloc = 21;
        let f = fresh_indexes(&u, 6, &mut alloc);
        assert_eq!(f.indexes(), vec![21, 22]);
        assert_eq!(alloc, 23);
        let D::Seq { left, .. } = &f else { panic!() };
        assert!(matches!(left.as_ref(), D::Interaction { op, .. } if op.to_string() == "6.cardReq"));
        let _ = HoPayload::No;
    }
}

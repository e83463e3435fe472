//! Connectedness of choreographies.
//!
//! `trans_i` and `trans_f` over-approximate the role pairs involved in the
//! first and last actions of a term. A sequence `I; I'` is connected when
//! every final pair of `I` shares a role with every initial pair of `I'`; a
//! parallel composition is connected when its branches use disjoint
//! interaction signatures. [`check_connected`] decides both conditions for
//! every subterm in a single bottom-up pass. [`naive_connected`] recomputes
//! everything from scratch at each node and serves as a reference.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;

use crate::ast::{operations_of, roles_of, DiocProcess as D, Role, RolePair, Signature, Span};
use crate::parser::Diagnostic;

pub type PairSet = BTreeSet<RolePair>;

/// Initial role pairs of a term.
pub fn trans_i(p: &D) -> PairSet {
    match p {
        D::Interaction { sender, receiver, .. } => [RolePair::new(sender.clone(), receiver.clone())].into(),
        D::Assign { role, .. } => [RolePair::new(role.clone(), role.clone())].into(),
        D::One | D::Zero => PairSet::new(),
        D::Par { left, right, .. } => trans_i(left).union(&trans_i(right)).cloned().collect(),
        D::Seq { left, right, .. } => {
            let l = trans_i(left);
            if l.is_empty() {
                trans_i(right)
            } else {
                l
            }
        }
        D::If { role, .. } | D::While { role, .. } => [RolePair::new(role.clone(), role.clone())].into(),
        D::Scope { coordinator, .. } => [RolePair::new(coordinator.clone(), coordinator.clone())].into(),
    }
}

/// Final role pairs of a term.
pub fn trans_f(p: &D) -> PairSet {
    match p {
        D::Interaction { .. } | D::Assign { .. } | D::One | D::Zero => trans_i(p),
        D::Par { left, right, .. } => trans_f(left).union(&trans_f(right)).cloned().collect(),
        D::Seq { left, right, .. } => {
            let r = trans_f(right);
            if r.is_empty() {
                trans_f(left)
            } else {
                r
            }
        }
        D::If { role, then, els, .. } => {
            let s: PairSet = trans_f(then).union(&trans_f(els)).cloned().collect();
            if s.is_empty() {
                [RolePair::new(role.clone(), role.clone())].into()
            } else {
                s
            }
        }
        D::While { role, body, .. } => {
            let s = trans_f(body);
            if s.is_empty() {
                [RolePair::new(role.clone(), role.clone())].into()
            } else {
                s
            }
        }
        D::Scope { coordinator, body, .. } => scope_final(coordinator, &roles_of(body)),
    }
}

fn scope_final(r: &Role, body_roles: &BTreeSet<Role>) -> PairSet {
    let others: PairSet =
        body_roles.iter().filter(|s| *s != r).map(|s| RolePair::new(s.clone(), r.clone())).collect();
    if others.is_empty() {
        [RolePair::new(r.clone(), r.clone())].into()
    } else {
        others
    }
}

fn brute_cover(s: &PairSet, t: &PairSet) -> bool {
    s.iter().all(|a| t.iter().all(|b| a.intersects(b)))
}

/// Does every pair of `s` share a role with every pair of `t`?
///
/// When both sets hold more than nine pairs the condition can only hold if a
/// single role occurs in all of them, so only the two roles of one pair need
/// testing; otherwise the smaller set is at most nine pairs and a direct
/// check is linear.
pub fn pair_cover_check(s: &PairSet, t: &PairSet) -> bool {
    if s.is_empty() || t.is_empty() {
        return true;
    }
    if s.len().min(t.len()) <= 9 {
        return brute_cover(s, t);
    }
    let first = s.iter().next().expect("non-empty");
    [&first.a, &first.b]
        .into_iter()
        .any(|c| s.iter().all(|p| p.contains(c)) && t.iter().all(|p| p.contains(c)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    SeqConn,
    ParConn,
}

impl ViolationKind {
    pub fn code(self) -> &'static str {
        match self {
            ViolationKind::SeqConn => "SEQ-CONN",
            ViolationKind::ParConn => "PAR-CONN",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub span: Span,
    /// For sequences: final pairs of the left side that miss some initial
    /// pair of the right side, together with that pair.
    pub pairs: Vec<(RolePair, RolePair)>,
    /// For parallel compositions: signatures used by both branches.
    pub signatures: Vec<Signature>,
}

impl Violation {
    pub fn message(&self) -> String {
        match self.kind {
            ViolationKind::SeqConn => {
                let shown: Vec<String> = self.pairs.iter().take(4).map(|(f, i)| format!("{f} vs {i}")).collect();
                format!("sequence is not connected: no shared role in {}", shown.join(", "))
            }
            ViolationKind::ParConn => {
                let shown: Vec<String> =
                    self.signatures.iter().take(4).map(|(o, a, b)| format!("({o}, {a}, {b})")).collect();
                format!("parallel branches share interaction signatures {}", shown.join(", "))
            }
        }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic::error(self.span, &self.message()).with_code(self.kind.code())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnReport {
    pub connected: bool,
    pub violations: Vec<Violation>,
}

const MAX_REPORTED: usize = 16;

type Shared<T> = Arc<BTreeSet<T>>;

#[derive(Clone)]
struct Info {
    ti: Shared<RolePair>,
    tf: Shared<RolePair>,
    ops: Shared<Signature>,
    roles: Shared<Role>,
}

fn union<T: Ord + Clone>(a: Shared<T>, b: Shared<T>) -> Shared<T> {
    let (mut big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if small.is_empty() || Arc::ptr_eq(&big, &small) {
        return big;
    }
    Arc::make_mut(&mut big).extend(small.iter().cloned());
    big
}

fn single(r: &Role) -> Shared<RolePair> {
    Arc::new([RolePair::new(r.clone(), r.clone())].into())
}

fn seq_violation(tf: &PairSet, ti: &PairSet, span: Span) -> Violation {
    let mut pairs = Vec::new();
    'outer: for f in tf {
        for i in ti {
            if !f.intersects(i) {
                pairs.push((f.clone(), i.clone()));
                if pairs.len() >= MAX_REPORTED {
                    break 'outer;
                }
            }
        }
    }
    Violation { kind: ViolationKind::SeqConn, span, pairs, signatures: Vec::new() }
}

fn shared_signatures(a: &Shared<Signature>, b: &Shared<Signature>) -> Vec<Signature> {
    let (small, big) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().filter(|s| big.contains(*s)).take(MAX_REPORTED).cloned().collect()
}

/// Check both connectedness conditions on every subterm.
///
/// The traversal is iterative, so arbitrarily deep terms are fine. Sets are
/// merged smaller-into-larger and shared where a node's set equals a child's.
pub fn check_connected(p: &D) -> ConnReport {
    let empty_pairs: Shared<RolePair> = Arc::new(BTreeSet::new());
    let empty_ops: Shared<Signature> = Arc::new(BTreeSet::new());
    let empty_roles: Shared<Role> = Arc::new(BTreeSet::new());
    let mut violations = Vec::new();
    let mut results: Vec<Info> = Vec::new();
    let mut stack: Vec<(&D, bool)> = vec![(p, false)];
    while let Some((node, expanded)) = stack.pop() {
        if !expanded {
            stack.push((node, true));
            for c in node.children().into_iter().rev() {
                stack.push((c, false));
            }
            continue;
        }
        let arity = node.children().len();
        let kids: Vec<Info> = results.split_off(results.len() - arity);
        let info = match node {
            D::Interaction { op, sender, receiver, .. } => {
                let pair = RolePair::new(sender.clone(), receiver.clone());
                Info {
                    ti: Arc::new([pair.clone()].into()),
                    tf: Arc::new([pair].into()),
                    ops: Arc::new([(op.clone(), sender.clone(), receiver.clone())].into()),
                    roles: Arc::new([sender.clone(), receiver.clone()].into()),
                }
            }
            D::Assign { role, .. } => Info {
                ti: single(role),
                tf: single(role),
                ops: empty_ops.clone(),
                roles: Arc::new([role.clone()].into()),
            },
            D::One | D::Zero => Info {
                ti: empty_pairs.clone(),
                tf: empty_pairs.clone(),
                ops: empty_ops.clone(),
                roles: empty_roles.clone(),
            },
            D::Seq { span, .. } => {
                let mut it = kids.into_iter();
                let (l, r) = (it.next().expect("left"), it.next().expect("right"));
                if !pair_cover_check(&l.tf, &r.ti) {
                    violations.push(seq_violation(&l.tf, &r.ti, *span));
                }
                Info {
                    ti: if l.ti.is_empty() { r.ti } else { l.ti },
                    tf: if r.tf.is_empty() { l.tf } else { r.tf },
                    ops: union(l.ops, r.ops),
                    roles: union(l.roles, r.roles),
                }
            }
            D::Par { span, .. } => {
                let mut it = kids.into_iter();
                let (l, r) = (it.next().expect("left"), it.next().expect("right"));
                let shared = shared_signatures(&l.ops, &r.ops);
                if !shared.is_empty() {
                    violations.push(Violation {
                        kind: ViolationKind::ParConn,
                        span: *span,
                        pairs: Vec::new(),
                        signatures: shared,
                    });
                }
                Info {
                    ti: union(l.ti, r.ti),
                    tf: union(l.tf, r.tf),
                    ops: union(l.ops, r.ops),
                    roles: union(l.roles, r.roles),
                }
            }
            D::If { role, .. } => {
                let mut it = kids.into_iter();
                let (t, e) = (it.next().expect("then"), it.next().expect("else"));
                let tf = union(t.tf, e.tf);
                Info {
                    ti: single(role),
                    tf: if tf.is_empty() { single(role) } else { tf },
                    ops: union(t.ops, e.ops),
                    roles: union(union(t.roles, e.roles), Arc::new([role.clone()].into())),
                }
            }
            D::While { role, .. } => {
                let b = kids.into_iter().next().expect("body");
                Info {
                    ti: single(role),
                    tf: if b.tf.is_empty() { single(role) } else { b.tf },
                    ops: b.ops,
                    roles: union(b.roles, Arc::new([role.clone()].into())),
                }
            }
            D::Scope { coordinator, .. } => {
                let b = kids.into_iter().next().expect("body");
                Info {
                    ti: single(coordinator),
                    tf: Arc::new(scope_final(coordinator, &b.roles)),
                    ops: b.ops,
                    roles: union(b.roles, Arc::new([coordinator.clone()].into())),
                }
            }
        };
        results.push(info);
    }
    violations.reverse();
    ConnReport { connected: violations.is_empty(), violations }
}

pub fn is_connected(p: &D) -> bool {
    check_connected(p).connected
}

/// Reference checker: recomputes `trans_i`, `trans_f` and the signature
/// sets of both sides at every composition node, and compares pairs
/// exhaustively.
pub fn naive_connected(p: &D) -> bool {
    let here = match p {
        D::Seq { left, right, .. } => brute_cover(&trans_f(left), &trans_i(right)),
        D::Par { left, right, .. } => operations_of(left).is_disjoint(&operations_of(right)),
        _ => true,
    };
    here && p.children().iter().all(|c| naive_connected(c))
}

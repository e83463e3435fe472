//! Abstract syntax for choreographies (DIOC) and endpoint processes (DPOC),
//! together with values, local/global states, index tags and the structural
//! helpers `roles_of`, `operations_of`, `annotate` and `global_indexes`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use ordered_float::OrderedFloat;

/// Shared immutable identifier.
pub type Name = Arc<str>;

/// A participant of a choreography.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Role(Name);

impl Role {
    pub fn new(name: &str) -> Self {
        Role(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for Role {
    fn from(s: &str) -> Self {
        Role::new(s)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Visibility {
    Public,
    Private,
}

/// Prefix of auxiliary operation names introduced by projection.
pub const AUX_OP_PREFIX: &str = "o*_";
/// Prefix of auxiliary variables introduced by projection.
pub const AUX_VAR_PREFIX: &str = "x_";
/// Throwaway receive variable.
pub const DISCARD_VAR: &str = "_";
/// Token carried by acknowledgement sends.
pub const OK_TOKEN: &str = "ok";

/// An operation name, possibly extended with scope prefixes `n.o`.
///
/// `prefix` lists the stacked scope indexes with the most recently applied
/// one first, so `[7, 6]` renders as `7.6.o`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Operation {
    pub name: Name,
    pub visibility: Visibility,
    pub prefix: Vec<u32>,
}

impl Operation {
    pub fn public(name: &str) -> Self {
        Operation { name: Arc::from(name), visibility: Visibility::Public, prefix: Vec::new() }
    }

    /// The auxiliary operation `o*_n` of construct `n`.
    pub fn aux(n: u32) -> Self {
        Operation {
            name: Arc::from(format!("{AUX_OP_PREFIX}{n}").as_str()),
            visibility: Visibility::Private,
            prefix: Vec::new(),
        }
    }

    pub fn is_private(&self) -> bool {
        self.visibility == Visibility::Private
    }

    pub fn with_prefix(&self, n: u32) -> Self {
        let mut prefix = Vec::with_capacity(self.prefix.len() + 1);
        prefix.push(n);
        prefix.extend_from_slice(&self.prefix);
        Operation { name: self.name.clone(), visibility: self.visibility, prefix }
    }

    pub fn unprefixed(&self) -> Self {
        Operation { name: self.name.clone(), visibility: self.visibility, prefix: Vec::new() }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.prefix {
            write!(f, "{p}.")?;
        }
        f.write_str(&self.name)
    }
}

impl fmt::Debug for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Runtime values. `Error` absorbs every operator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Value {
    Int(i64),
    Float(OrderedFloat<f64>),
    Bool(bool),
    Str(Name),
    Null,
    Error,
}

impl Value {
    pub fn str(s: &str) -> Self {
        Value::Str(Arc::from(s))
    }

    pub fn float(x: f64) -> Self {
        Value::Float(OrderedFloat(x))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{:?}", x.0),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Value::Null => f.write_str("null"),
            Value::Error => f.write_str("error"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    And,
    Or,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Concat,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Concat => "++",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub | BinOp::Concat => 4,
            BinOp::Mul | BinOp::Div => 5,
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Expr {
    Lit(Value),
    Var(Name),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Name, Vec<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Self {
        Expr::Var(Arc::from(name))
    }

    pub fn int(i: i64) -> Self {
        Expr::Lit(Value::Int(i))
    }

    pub fn bool(b: bool) -> Self {
        Expr::Lit(Value::Bool(b))
    }

    pub fn str(s: &str) -> Self {
        Expr::Lit(Value::str(s))
    }

    pub fn call(name: &str, args: Vec<Expr>) -> Self {
        Expr::Call(Arc::from(name), args)
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Self {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn not(e: Expr) -> Self {
        Expr::Unary(UnOp::Not, Box::new(e))
    }
}

/// Source location. Spans never take part in equality or hashing, so two
/// terms parsed from differently formatted text compare equal.
#[derive(Clone, Copy, Default, Debug, serde::Serialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
    pub len: u32,
}

impl Span {
    pub fn new(line: u32, col: u32, len: u32) -> Self {
        Span { line, col, len }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl PartialOrd for Span {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Span {
    fn cmp(&self, _: &Self) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}

/// A choreography term.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum DiocProcess {
    Interaction {
        index: Option<u32>,
        op: Operation,
        sender: Role,
        expr: Expr,
        receiver: Role,
        var: Name,
        span: Span,
    },
    Seq {
        left: Arc<DiocProcess>,
        right: Arc<DiocProcess>,
        span: Span,
    },
    Par {
        left: Arc<DiocProcess>,
        right: Arc<DiocProcess>,
        span: Span,
    },
    Assign {
        index: Option<u32>,
        var: Name,
        role: Role,
        expr: Expr,
        span: Span,
    },
    One,
    Zero,
    If {
        index: Option<u32>,
        guard: Expr,
        role: Role,
        then: Arc<DiocProcess>,
        els: Arc<DiocProcess>,
        span: Span,
    },
    While {
        index: Option<u32>,
        guard: Expr,
        role: Role,
        body: Arc<DiocProcess>,
        span: Span,
    },
    Scope {
        index: Option<u32>,
        coordinator: Role,
        body: Arc<DiocProcess>,
        name: Option<Name>,
        span: Span,
    },
}

/// Signature `(o, r1, r2)` of an interaction.
pub type Signature = (Operation, Role, Role);

impl DiocProcess {
    pub fn seq(left: DiocProcess, right: DiocProcess) -> Self {
        DiocProcess::Seq { left: Arc::new(left), right: Arc::new(right), span: Span::default() }
    }

    pub fn par(left: DiocProcess, right: DiocProcess) -> Self {
        DiocProcess::Par { left: Arc::new(left), right: Arc::new(right), span: Span::default() }
    }

    /// Right-nested sequence of the given statements; `One` when empty.
    pub fn seq_all(items: Vec<DiocProcess>) -> Self {
        let mut it = items.into_iter().rev();
        let Some(mut acc) = it.next() else { return DiocProcess::One };
        for p in it {
            acc = DiocProcess::seq(p, acc);
        }
        acc
    }

    pub fn interaction(op: &str, sender: &str, expr: Expr, receiver: &str, var: &str) -> Self {
        DiocProcess::Interaction {
            index: None,
            op: Operation::public(op),
            sender: Role::new(sender),
            expr,
            receiver: Role::new(receiver),
            var: Arc::from(var),
            span: Span::default(),
        }
    }

    pub fn assign(var: &str, role: &str, expr: Expr) -> Self {
        DiocProcess::Assign {
            index: None,
            var: Arc::from(var),
            role: Role::new(role),
            expr,
            span: Span::default(),
        }
    }

    pub fn if_(guard: Expr, role: &str, then: DiocProcess, els: DiocProcess) -> Self {
        DiocProcess::If {
            index: None,
            guard,
            role: Role::new(role),
            then: Arc::new(then),
            els: Arc::new(els),
            span: Span::default(),
        }
    }

    pub fn while_(guard: Expr, role: &str, body: DiocProcess) -> Self {
        DiocProcess::While {
            index: None,
            guard,
            role: Role::new(role),
            body: Arc::new(body),
            span: Span::default(),
        }
    }

    pub fn scope(coordinator: &str, body: DiocProcess) -> Self {
        DiocProcess::Scope {
            index: None,
            coordinator: Role::new(coordinator),
            body: Arc::new(body),
            name: None,
            span: Span::default(),
        }
    }

    pub fn index(&self) -> Option<u32> {
        match self {
            DiocProcess::Interaction { index, .. }
            | DiocProcess::Assign { index, .. }
            | DiocProcess::If { index, .. }
            | DiocProcess::While { index, .. }
            | DiocProcess::Scope { index, .. } => *index,
            _ => None,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            DiocProcess::Interaction { span, .. }
            | DiocProcess::Seq { span, .. }
            | DiocProcess::Par { span, .. }
            | DiocProcess::Assign { span, .. }
            | DiocProcess::If { span, .. }
            | DiocProcess::While { span, .. }
            | DiocProcess::Scope { span, .. } => *span,
            DiocProcess::One | DiocProcess::Zero => Span::default(),
        }
    }

    /// Direct subterms, left to right.
    pub fn children(&self) -> Vec<&Arc<DiocProcess>> {
        match self {
            DiocProcess::Seq { left, right, .. } | DiocProcess::Par { left, right, .. } => {
                vec![left, right]
            }
            DiocProcess::If { then, els, .. } => vec![then, els],
            DiocProcess::While { body, .. } | DiocProcess::Scope { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        let mut count = 0;
        let mut stack = vec![self];
        while let Some(p) = stack.pop() {
            count += 1;
            stack.extend(p.children().into_iter().map(|c| c.as_ref()));
        }
        count
    }

    /// True iff no `Zero` occurs.
    pub fn is_initial(&self) -> bool {
        let mut stack = vec![self];
        while let Some(p) = stack.pop() {
            if matches!(p, DiocProcess::Zero) {
                return false;
            }
            stack.extend(p.children().into_iter().map(|c| c.as_ref()));
        }
        true
    }

    /// Largest index occurring in the term.
    pub fn max_index(&self) -> u32 {
        let mut best = 0;
        let mut stack = vec![self];
        while let Some(p) = stack.pop() {
            if let Some(i) = p.index() {
                best = best.max(i);
            }
            stack.extend(p.children().into_iter().map(|c| c.as_ref()));
        }
        best
    }

    /// Indexes in preorder (missing indexes are skipped).
    pub fn indexes(&self) -> Vec<u32> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(p) = stack.pop() {
            if let Some(i) = p.index() {
                out.push(i);
            }
            let mut ch = p.children();
            ch.reverse();
            stack.extend(ch.into_iter().map(|c| c.as_ref()));
        }
        out
    }

    /// Every indexable node carries an index and all indexes are distinct.
    pub fn is_well_annotated(&self) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(p) = stack.pop() {
            match p {
                DiocProcess::Seq { .. } | DiocProcess::Par { .. } => {}
                DiocProcess::One | DiocProcess::Zero => {}
                _ => match p.index() {
                    Some(i) if seen.insert(i) => {}
                    _ => return false,
                },
            }
            stack.extend(p.children().into_iter().map(|c| c.as_ref()));
        }
        true
    }

    /// Copy with every index removed.
    pub fn strip_indexes(&self) -> DiocProcess {
        self.reindex(&mut |_| None)
    }

    /// Rebuild the term, replacing the index of each indexable node (visited
    /// in preorder) with the result of `f` applied to the old index.
    pub fn reindex(&self, f: &mut dyn FnMut(Option<u32>) -> Option<u32>) -> DiocProcess {
        match self {
            DiocProcess::Interaction { index, op, sender, expr, receiver, var, span } => {
                DiocProcess::Interaction {
                    index: f(*index),
                    op: op.clone(),
                    sender: sender.clone(),
                    expr: expr.clone(),
                    receiver: receiver.clone(),
                    var: var.clone(),
                    span: *span,
                }
            }
            DiocProcess::Seq { left, right, span } => {
                let l = left.reindex(f);
                let r = right.reindex(f);
                DiocProcess::Seq { left: Arc::new(l), right: Arc::new(r), span: *span }
            }
            DiocProcess::Par { left, right, span } => {
                let l = left.reindex(f);
                let r = right.reindex(f);
                DiocProcess::Par { left: Arc::new(l), right: Arc::new(r), span: *span }
            }
            DiocProcess::Assign { index, var, role, expr, span } => DiocProcess::Assign {
                index: f(*index),
                var: var.clone(),
                role: role.clone(),
                expr: expr.clone(),
                span: *span,
            },
            DiocProcess::One => DiocProcess::One,
            DiocProcess::Zero => DiocProcess::Zero,
            DiocProcess::If { index, guard, role, then, els, span } => {
                let index = f(*index);
                let t = then.reindex(f);
                let e = els.reindex(f);
                DiocProcess::If {
                    index,
                    guard: guard.clone(),
                    role: role.clone(),
                    then: Arc::new(t),
                    els: Arc::new(e),
                    span: *span,
                }
            }
            DiocProcess::While { index, guard, role, body, span } => {
                let index = f(*index);
                let b = body.reindex(f);
                DiocProcess::While {
                    index,
                    guard: guard.clone(),
                    role: role.clone(),
                    body: Arc::new(b),
                    span: *span,
                }
            }
            DiocProcess::Scope { index, coordinator, body, name, span } => {
                let index = f(*index);
                let b = body.reindex(f);
                DiocProcess::Scope {
                    index,
                    coordinator: coordinator.clone(),
                    body: Arc::new(b),
                    name: name.clone(),
                    span: *span,
                }
            }
        }
    }

    /// Copy with every operation passed through `f`.
    pub fn map_operations(&self, f: &dyn Fn(&Operation) -> Operation) -> DiocProcess {
        match self {
            DiocProcess::Interaction { index, op, sender, expr, receiver, var, span } => {
                DiocProcess::Interaction {
                    index: *index,
                    op: f(op),
                    sender: sender.clone(),
                    expr: expr.clone(),
                    receiver: receiver.clone(),
                    var: var.clone(),
                    span: *span,
                }
            }
            DiocProcess::Seq { left, right, span } => DiocProcess::Seq {
                left: Arc::new(left.map_operations(f)),
                right: Arc::new(right.map_operations(f)),
                span: *span,
            },
            DiocProcess::Par { left, right, span } => DiocProcess::Par {
                left: Arc::new(left.map_operations(f)),
                right: Arc::new(right.map_operations(f)),
                span: *span,
            },
            DiocProcess::If { index, guard, role, then, els, span } => DiocProcess::If {
                index: *index,
                guard: guard.clone(),
                role: role.clone(),
                then: Arc::new(then.map_operations(f)),
                els: Arc::new(els.map_operations(f)),
                span: *span,
            },
            DiocProcess::While { index, guard, role, body, span } => DiocProcess::While {
                index: *index,
                guard: guard.clone(),
                role: role.clone(),
                body: Arc::new(body.map_operations(f)),
                span: *span,
            },
            DiocProcess::Scope { index, coordinator, body, name, span } => DiocProcess::Scope {
                index: *index,
                coordinator: coordinator.clone(),
                body: Arc::new(body.map_operations(f)),
                name: name.clone(),
                span: *span,
            },
            other => other.clone(),
        }
    }
}

/// Roles mentioned by a choreography; if/while/scope contribute their
/// coordinating role.
pub fn roles_of(p: &DiocProcess) -> BTreeSet<Role> {
    let mut out = BTreeSet::new();
    let mut stack = vec![p];
    while let Some(p) = stack.pop() {
        match p {
            DiocProcess::Interaction { sender, receiver, .. } => {
                out.insert(sender.clone());
                out.insert(receiver.clone());
            }
            DiocProcess::Assign { role, .. }
            | DiocProcess::If { role, .. }
            | DiocProcess::While { role, .. } => {
                out.insert(role.clone());
            }
            DiocProcess::Scope { coordinator, .. } => {
                out.insert(coordinator.clone());
            }
            _ => {}
        }
        stack.extend(p.children().into_iter().map(|c| c.as_ref()));
    }
    out
}

/// Signatures of all interactions occurring in `p`.
pub fn operations_of(p: &DiocProcess) -> BTreeSet<Signature> {
    let mut out = BTreeSet::new();
    let mut stack = vec![p];
    while let Some(p) = stack.pop() {
        if let DiocProcess::Interaction { op, sender, receiver, .. } = p {
            out.insert((op.clone(), sender.clone(), receiver.clone()));
        }
        stack.extend(p.children().into_iter().map(|c| c.as_ref()));
    }
    out
}

/// Assign indexes 1, 2, ... in preorder, discarding any existing ones.
pub fn annotate(p: &DiocProcess) -> DiocProcess {
    annotate_from(p, 1)
}

/// Like [`annotate`] but counting from `first`.
pub fn annotate_from(p: &DiocProcess, first: u32) -> DiocProcess {
    let mut next = first;
    p.reindex(&mut |_| {
        let i = next;
        next += 1;
        Some(i)
    })
}

/// Index annotation of a DPOC construct: a natural, optionally tagged with
/// a boolean for the coordinator's auxiliary broadcasts.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexTag {
    pub base: u32,
    pub branch: Option<bool>,
}

impl IndexTag {
    pub fn plain(base: u32) -> Self {
        IndexTag { base, branch: None }
    }

    pub fn branch(base: u32, b: bool) -> Self {
        IndexTag { base, branch: Some(b) }
    }
}

impl fmt::Display for IndexTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.branch {
            None => write!(f, "{}", self.base),
            Some(b) => write!(f, "({},{})", self.base, b),
        }
    }
}

impl fmt::Debug for IndexTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Path of enclosing while indexes followed by the construct's own index.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GlobalIndex(pub Vec<IndexTag>);

impl GlobalIndex {
    pub fn last(&self) -> IndexTag {
        *self.0.last().expect("global index is never empty")
    }

    pub fn extend(&self, tag: IndexTag) -> GlobalIndex {
        let mut v = self.0.clone();
        v.push(tag);
        GlobalIndex(v)
    }

    /// Equal, or differing only in the final tag by an added boolean.
    pub fn matches(&self, other: &GlobalIndex) -> bool {
        if self.0.len() != other.0.len() {
            return false;
        }
        let n = self.0.len();
        if self.0[..n - 1] != other.0[..n - 1] {
            return false;
        }
        let (a, b) = (self.0[n - 1], other.0[n - 1]);
        a.base == b.base && (a.branch == b.branch || a.branch.is_none() || b.branch.is_none())
    }
}

impl fmt::Display for GlobalIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|t| t.to_string()).collect();
        f.write_str(&parts.join(":"))
    }
}

impl fmt::Debug for GlobalIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotationError {
    #[error("construct without index")]
    Missing,
    #[error("index {0} occurs more than once")]
    Duplicate(u32),
}

/// Global index of every indexed construct of a well-annotated choreography,
/// keyed by the construct's own index.
pub fn global_indexes(p: &DiocProcess) -> Result<BTreeMap<u32, GlobalIndex>, AnnotationError> {
    let mut out = BTreeMap::new();
    let mut stack: Vec<(&DiocProcess, Vec<IndexTag>)> = vec![(p, Vec::new())];
    while let Some((p, path)) = stack.pop() {
        let mut inner = path.clone();
        match p {
            DiocProcess::Seq { .. } | DiocProcess::Par { .. } => {}
            DiocProcess::One | DiocProcess::Zero => {}
            _ => {
                let i = p.index().ok_or(AnnotationError::Missing)?;
                let mut g = path.clone();
                g.push(IndexTag::plain(i));
                if out.insert(i, GlobalIndex(g)).is_some() {
                    return Err(AnnotationError::Duplicate(i));
                }
                if matches!(p, DiocProcess::While { .. }) {
                    inner.push(IndexTag::plain(i));
                }
            }
        }
        for c in p.children().into_iter().rev() {
            stack.push((c, inner.clone()));
        }
    }
    Ok(out)
}

/// Payload of a higher-order send.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum HoPayload {
    No,
    Code(Arc<DpocProcess>),
}

/// An endpoint process.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum DpocProcess {
    Recv { index: IndexTag, op: Operation, var: Name, from: Role },
    Send { index: IndexTag, op: Operation, expr: Expr, to: Role },
    /// Higher-order send; `ack` is the index the receiver's closing
    /// acknowledgement will carry.
    SendHo { index: IndexTag, op: Operation, payload: HoPayload, to: Role, ack: IndexTag },
    Seq(Arc<DpocProcess>, Arc<DpocProcess>),
    Par(Arc<DpocProcess>, Arc<DpocProcess>),
    Assign { index: IndexTag, var: Name, expr: Expr },
    One,
    Zero,
    If { index: IndexTag, guard: Expr, then: Arc<DpocProcess>, els: Arc<DpocProcess> },
    While { index: IndexTag, guard: Expr, body: Arc<DpocProcess> },
    ScopeLead {
        index: IndexTag,
        coordinator: Role,
        body: Arc<DpocProcess>,
        roles: BTreeSet<Role>,
        name: Option<Name>,
    },
    ScopePlain { index: IndexTag, coordinator: Role, body: Arc<DpocProcess>, name: Option<Name> },
}

impl DpocProcess {
    pub fn seq(a: DpocProcess, b: DpocProcess) -> Self {
        DpocProcess::Seq(Arc::new(a), Arc::new(b))
    }

    pub fn par(a: DpocProcess, b: DpocProcess) -> Self {
        DpocProcess::Par(Arc::new(a), Arc::new(b))
    }

    /// Right-nested parallel composition; `One` when empty.
    pub fn par_all(items: Vec<DpocProcess>) -> Self {
        let mut it = items.into_iter().rev();
        let Some(mut acc) = it.next() else { return DpocProcess::One };
        for p in it {
            acc = DpocProcess::par(p, acc);
        }
        acc
    }

    /// Right-nested sequential composition; `One` when empty.
    pub fn seq_all(items: Vec<DpocProcess>) -> Self {
        let mut it = items.into_iter().rev();
        let Some(mut acc) = it.next() else { return DpocProcess::One };
        for p in it {
            acc = DpocProcess::seq(p, acc);
        }
        acc
    }

    pub fn index(&self) -> Option<IndexTag> {
        match self {
            DpocProcess::Recv { index, .. }
            | DpocProcess::Send { index, .. }
            | DpocProcess::SendHo { index, .. }
            | DpocProcess::Assign { index, .. }
            | DpocProcess::If { index, .. }
            | DpocProcess::While { index, .. }
            | DpocProcess::ScopeLead { index, .. }
            | DpocProcess::ScopePlain { index, .. } => Some(*index),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&Arc<DpocProcess>> {
        match self {
            DpocProcess::Seq(a, b) | DpocProcess::Par(a, b) => vec![a, b],
            DpocProcess::If { then, els, .. } => vec![then, els],
            DpocProcess::While { body, .. }
            | DpocProcess::ScopeLead { body, .. }
            | DpocProcess::ScopePlain { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }

    /// Does any send (first- or higher-order) occur syntactically?
    pub fn contains_send(&self) -> bool {
        match self {
            DpocProcess::Send { .. } | DpocProcess::SendHo { .. } => true,
            other => other.children().iter().any(|c| c.contains_send()),
        }
    }

    pub fn max_index(&self) -> u32 {
        let own = self.index().map(|t| t.base).unwrap_or(0);
        let payload = match self {
            DpocProcess::SendHo { payload: HoPayload::Code(p), ack, .. } => p.max_index().max(ack.base),
            DpocProcess::SendHo { ack, .. } => ack.base,
            _ => 0,
        };
        self.children().iter().map(|c| c.max_index()).fold(own.max(payload), u32::max)
    }
}

/// Variable store of one role. `inputs_read` counts values consumed from the
/// role's host input queue.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct LocalState {
    pub vars: BTreeMap<Name, Value>,
    pub inputs_read: u32,
}

impl LocalState {
    pub fn get(&self, x: &str) -> Option<&Value> {
        self.vars.get(x)
    }

    /// Bind `x` to `v`; the throwaway variable `_` is never stored.
    pub fn set(&mut self, x: &Name, v: Value) {
        if &**x != DISCARD_VAR {
            self.vars.insert(x.clone(), v);
        }
    }
}

/// Map from roles to their local states.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct GlobalState(pub BTreeMap<Role, LocalState>);

impl GlobalState {
    pub fn local(&self, r: &Role) -> LocalState {
        self.0.get(r).cloned().unwrap_or_default()
    }

    pub fn get(&self, r: &Role, x: &str) -> Option<&Value> {
        self.0.get(r).and_then(|l| l.get(x))
    }

    pub fn set_local(&mut self, r: &Role, l: LocalState) {
        self.0.insert(r.clone(), l);
    }
}

/// A named update available to scopes.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Update {
    pub name: Name,
    pub body: Arc<DiocProcess>,
}

/// The ordered collection of currently available updates.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct UpdateSet {
    pub updates: Vec<Update>,
}

impl UpdateSet {
    pub fn new(updates: Vec<(String, DiocProcess)>) -> Self {
        UpdateSet {
            updates: updates
                .into_iter()
                .map(|(n, b)| Update { name: Arc::from(n.as_str()), body: Arc::new(b.strip_indexes()) })
                .collect(),
        }
    }

    pub fn empty() -> Self {
        UpdateSet::default()
    }

    pub fn names(&self) -> Vec<Name> {
        self.updates.iter().map(|u| u.name.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.updates.is_empty()
    }
}

/// Unordered pair of roles, stored with `a <= b`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RolePair {
    pub a: Role,
    pub b: Role,
}

impl RolePair {
    pub fn new(x: Role, y: Role) -> Self {
        if x <= y {
            RolePair { a: x, b: y }
        } else {
            RolePair { a: y, b: x }
        }
    }

    pub fn contains(&self, r: &Role) -> bool {
        &self.a == r || &self.b == r
    }

    pub fn intersects(&self, other: &RolePair) -> bool {
        other.contains(&self.a) || other.contains(&self.b)
    }
}

impl fmt::Debug for RolePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.a, self.b)
    }
}

impl fmt::Display for RolePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.a, self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ia(op: &str, a: &str, b: &str) -> DiocProcess {
        DiocProcess::interaction(op, a, Expr::int(1), b, "x")
    }

    #[test]
    fn roles_of_basic_cases() {
        assert!(roles_of(&DiocProcess::One).is_empty());
        let r = roles_of(&ia("o", "buyer", "seller"));
        assert_eq!(r, [Role::new("buyer"), Role::new("seller")].into_iter().collect());
        let s = DiocProcess::scope("bank", DiocProcess::assign("y", "bank", Expr::int(1)));
        assert_eq!(roles_of(&s), [Role::new("bank")].into_iter().collect());
        let w = DiocProcess::while_(Expr::bool(true), "c", DiocProcess::One);
        assert_eq!(roles_of(&w), [Role::new("c")].into_iter().collect());
    }

    #[test]
    fn operations_of_basic_cases() {
        assert!(operations_of(&DiocProcess::assign("x", "r", Expr::int(0))).is_empty());
        let p = ia("pay", "buyer", "bank");
        let sig = (Operation::public("pay"), Role::new("buyer"), Role::new("bank"));
        assert_eq!(operations_of(&p), [sig.clone()].into_iter().collect());
        let q = ia("ack", "bank", "buyer");
        let both = operations_of(&DiocProcess::par(p.clone(), q.clone()));
        let union: BTreeSet<_> = operations_of(&p).union(&operations_of(&q)).cloned().collect();
        assert_eq!(both, union);
    }

    #[test]
    fn annotate_preorder() {
        let a = annotate(&DiocProcess::assign("x", "r", Expr::int(1)));
        assert_eq!(a.index(), Some(1));
        let p = DiocProcess::seq(
            DiocProcess::assign("x", "r", Expr::int(1)),
            DiocProcess::if_(Expr::bool(true), "r", ia("o", "r", "s"), ia("p", "r", "s")),
        );
        let ap = annotate(&p);
        assert_eq!(ap.indexes(), vec![1, 2, 3, 4]);
        assert!(ap.is_well_annotated());
        assert_eq!(annotate(&ap), ap);
        assert!(!p.is_well_annotated());
    }

    #[test]
    fn global_indexes_follow_whiles() {
        let inner = DiocProcess::while_(Expr::bool(true), "r", DiocProcess::assign("y", "r", Expr::int(2)));
        let outer = DiocProcess::seq(
            DiocProcess::assign("x", "r", Expr::int(1)),
            DiocProcess::while_(Expr::bool(true), "r", inner),
        );
        let p = annotate(&outer);
        let g = global_indexes(&p).unwrap();
        assert_eq!(g[&1], GlobalIndex(vec![IndexTag::plain(1)]));
        assert_eq!(g[&2], GlobalIndex(vec![IndexTag::plain(2)]));
        assert_eq!(g[&3], GlobalIndex(vec![IndexTag::plain(2), IndexTag::plain(3)]));
        assert_eq!(
            g[&4],
            GlobalIndex(vec![IndexTag::plain(2), IndexTag::plain(3), IndexTag::plain(4)])
        );
        let dup = DiocProcess::seq(p.clone(), p);
        assert_eq!(global_indexes(&dup), Err(AnnotationError::Duplicate(1)));
    }

    #[test]
    fn global_index_matching() {
        let a = GlobalIndex(vec![IndexTag::plain(3), IndexTag::plain(9)]);
        let b = GlobalIndex(vec![IndexTag::plain(3), IndexTag::branch(9, true)]);
        let c = GlobalIndex(vec![IndexTag::plain(3), IndexTag::branch(9, false)]);
        assert!(a.matches(&b) && b.matches(&a) && a.matches(&c));
        assert!(!b.matches(&c));
        assert!(!a.matches(&GlobalIndex(vec![IndexTag::plain(9)])));
    }

    #[test]
    fn spans_do_not_affect_equality() {
        let mut a = ia("o", "a", "b");
        if let DiocProcess::Interaction { span, .. } = &mut a {
            *span = Span::new(3, 4, 5);
        }
        assert_eq!(a, ia("o", "a", "b"));
    }

    #[test]
    fn operation_prefixes_stack() {
        let o = Operation::public("offer").with_prefix(6).with_prefix(30);
        assert_eq!(o.to_string(), "30.6.offer");
        assert_eq!(o.unprefixed(), Operation::public("offer"));
        assert_eq!(Operation::aux(12).to_string(), "o*_12");
        assert!(Operation::aux(12).is_private());
    }

    #[test]
    fn discard_variable_is_not_stored() {
        let mut l = LocalState::default();
        l.set(&Arc::from("_"), Value::Int(3));
        assert!(l.vars.is_empty());
        l.set(&Arc::from("x"), Value::Int(3));
        assert_eq!(l.get("x"), Some(&Value::Int(3)));
    }
}

//! Operational semantics of choreography systems `⟨Σ, 𝐈, I⟩`, together with
//! the pieces shared with the endpoint level: expression evaluation, the
//! host environment, transition labels and run policies.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};

use crate::ast::{
    annotate_from, roles_of, BinOp, DiocProcess as D, Expr, GlobalState, LocalState, Name, Operation, Role, UnOp,
    UpdateSet, Value,
};
use crate::connectedness::is_connected;
use crate::term::{apply, can_tick, leaves};

/// A deterministic built-in a host function name can be bound to.
#[derive(Clone, Debug, PartialEq)]
pub enum HostFn {
    /// Ignores its arguments.
    Const(Value),
    /// Multiplies its single numeric argument.
    Mult(Value),
    /// Prepends a string to the rendering of its argument.
    Concat(String),
    Identity,
    /// `true` exactly when the argument equals the value.
    Eq(Value),
}

/// Host functions and per-role input queues consumed by `getInput()`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HostEnv {
    pub functions: BTreeMap<String, HostFn>,
    pub inputs: BTreeMap<Role, Vec<Value>>,
}

#[derive(Debug, thiserror::Error)]
pub enum HostError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Shape(String),
}

/// Convert a JSON scalar to a runtime value.
pub fn value_from_json(j: &Json) -> Result<Value, HostError> {
    Ok(match j {
        Json::Null => Value::Null,
        Json::Bool(b) => Value::Bool(*b),
        Json::String(s) => Value::str(s),
        Json::Number(n) => match n.as_i64() {
            Some(i) => Value::Int(i),
            None => Value::float(n.as_f64().ok_or_else(|| HostError::Shape(format!("bad number {n}")))?),
        },
        other => return Err(HostError::Shape(format!("expected a scalar, found {other}"))),
    })
}

/// Render a runtime value as JSON.
pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Int(i) => json!(i),
        Value::Float(x) => json!(x.0),
        Value::Bool(b) => json!(b),
        Value::Str(s) => json!(s.as_ref()),
        Value::Null => Json::Null,
        Value::Error => json!({ "error": true }),
    }
}

impl HostEnv {
    /// Parse a function table such as
    /// `{"getPrice":{"const":20},"payDesc":"identity","payAuth":{"concat":"auth:"}}`.
    pub fn functions_from_json(text: &str) -> Result<BTreeMap<String, HostFn>, HostError> {
        let j: Json = serde_json::from_str(text)?;
        let obj = j.as_object().ok_or_else(|| HostError::Shape("host table must be an object".into()))?;
        let mut out = BTreeMap::new();
        for (name, entry) in obj {
            let f = match entry {
                Json::String(s) if s == "identity" => HostFn::Identity,
                Json::Object(m) if m.len() == 1 => {
                    let (k, v) = m.iter().next().expect("one entry");
                    match k.as_str() {
                        "const" => HostFn::Const(value_from_json(v)?),
                        "mult" => HostFn::Mult(value_from_json(v)?),
                        "eq" => HostFn::Eq(value_from_json(v)?),
                        "concat" => HostFn::Concat(
                            v.as_str().ok_or_else(|| HostError::Shape("concat expects a string".into()))?.to_string(),
                        ),
                        other => return Err(HostError::Shape(format!("unknown built-in `{other}` for `{name}`"))),
                    }
                }
                other => return Err(HostError::Shape(format!("cannot read host function `{name}` from {other}"))),
            };
            out.insert(name.clone(), f);
        }
        Ok(out)
    }

    /// Parse per-role input queues such as `{"buyer":["book",true]}`.
    pub fn inputs_from_json(text: &str) -> Result<BTreeMap<Role, Vec<Value>>, HostError> {
        let j: Json = serde_json::from_str(text)?;
        let obj = j.as_object().ok_or_else(|| HostError::Shape("inputs must be an object".into()))?;
        let mut out = BTreeMap::new();
        for (role, q) in obj {
            let arr = q.as_array().ok_or_else(|| HostError::Shape(format!("inputs of `{role}` must be a list")))?;
            out.insert(Role::new(role), arr.iter().map(value_from_json).collect::<Result<_, _>>()?);
        }
        Ok(out)
    }

    pub fn with_function(mut self, name: &str, f: HostFn) -> Self {
        self.functions.insert(name.to_string(), f);
        self
    }

    pub fn with_inputs(mut self, role: &str, values: Vec<Value>) -> Self {
        self.inputs.insert(Role::new(role), values);
        self
    }

    fn call(&self, name: &str, args: &[Value], local: &mut LocalState, role: &Role) -> Value {
        if name == "getInput" {
            if !args.is_empty() {
                return Value::Error;
            }
            let i = local.inputs_read as usize;
            let v = self.inputs.get(role).and_then(|q| q.get(i)).cloned().unwrap_or(Value::Error);
            local.inputs_read += 1;
            return v;
        }
        if args.contains(&Value::Error) {
            return Value::Error;
        }
        match (self.functions.get(name), args) {
            (Some(HostFn::Const(v)), _) => v.clone(),
            (Some(HostFn::Identity), [a]) => a.clone(),
            (Some(HostFn::Mult(k)), [a]) => arith(BinOp::Mul, a, k),
            (Some(HostFn::Concat(p)), [a]) => {
                let s = match a {
                    Value::Str(s) => s.to_string(),
                    other => other.to_string(),
                };
                Value::str(&format!("{p}{s}"))
            }
            (Some(HostFn::Eq(v)), [a]) => Value::Bool(values_equal(a, v)),
            _ => Value::Error,
        }
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Float(x) => Some(x.0),
        _ => None,
    }
}

fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(_), Value::Float(_)) | (Value::Float(_), Value::Int(_)) => as_f64(a) == as_f64(b),
        _ => a == b,
    }
}

fn arith(op: BinOp, a: &Value, b: &Value) -> Value {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => {
            let r = match op {
                BinOp::Add => x.checked_add(*y),
                BinOp::Sub => x.checked_sub(*y),
                BinOp::Mul => x.checked_mul(*y),
                BinOp::Div => x.checked_div(*y),
                _ => None,
            };
            r.map(Value::Int).unwrap_or(Value::Error)
        }
        _ => match (as_f64(a), as_f64(b)) {
            (Some(x), Some(y)) => {
                let r = match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div if y != 0.0 => x / y,
                    _ => return Value::Error,
                };
                if r.is_finite() {
                    Value::float(r)
                } else {
                    Value::Error
                }
            }
            _ => Value::Error,
        },
    }
}

fn compare(op: BinOp, a: &Value, b: &Value) -> Value {
    use std::cmp::Ordering;
    let ord = match (a, b) {
        (Value::Str(x), Value::Str(y)) => Some(x.cmp(y)),
        _ => match (as_f64(a), as_f64(b)) {
            (Some(x), Some(y)) => x.partial_cmp(&y),
            _ => None,
        },
    };
    let Some(o) = ord else { return Value::Error };
    Value::Bool(match op {
        BinOp::Lt => o == Ordering::Less,
        BinOp::Le => o != Ordering::Greater,
        BinOp::Gt => o == Ordering::Greater,
        BinOp::Ge => o != Ordering::Less,
        _ => unreachable!("comparison operator"),
    })
}

/// Evaluate `e` as role `role` in its local state. Evaluation is total:
/// unbound variables, ill-typed operands, overflow and unknown functions all
/// give `Value::Error`, which every operator propagates. `getInput()` pops
/// the next value of the role's input queue, so the local state is updated.
pub fn eval_expr(e: &Expr, local: &mut LocalState, role: &Role, host: &HostEnv) -> Value {
    match e {
        Expr::Lit(v) => v.clone(),
        Expr::Var(x) => local.get(x).cloned().unwrap_or(Value::Error),
        Expr::Unary(op, inner) => match (op, eval_expr(inner, local, role, host)) {
            (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
            (UnOp::Neg, Value::Int(i)) => i.checked_neg().map(Value::Int).unwrap_or(Value::Error),
            (UnOp::Neg, Value::Float(x)) => Value::float(-x.0),
            _ => Value::Error,
        },
        Expr::Binary(op @ (BinOp::And | BinOp::Or), l, r) => match eval_expr(l, local, role, host) {
            Value::Bool(b) if (*op == BinOp::And) != b => Value::Bool(b),
            Value::Bool(_) => match eval_expr(r, local, role, host) {
                Value::Bool(c) => Value::Bool(c),
                _ => Value::Error,
            },
            _ => Value::Error,
        },
        Expr::Binary(op, l, r) => {
            let a = eval_expr(l, local, role, host);
            let b = eval_expr(r, local, role, host);
            if a == Value::Error || b == Value::Error {
                return Value::Error;
            }
            match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => arith(*op, &a, &b),
                BinOp::Eq => Value::Bool(values_equal(&a, &b)),
                BinOp::Ne => Value::Bool(!values_equal(&a, &b)),
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => compare(*op, &a, &b),
                BinOp::Concat => match (&a, &b) {
                    (Value::Str(x), Value::Str(y)) => Value::str(&format!("{x}{y}")),
                    _ => Value::Error,
                },
                BinOp::And | BinOp::Or => unreachable!("handled above"),
            }
        }
        Expr::Call(f, args) => {
            let vals: Vec<Value> = args.iter().map(|a| eval_expr(a, local, role, host)).collect();
            host.call(f, &vals, local, role)
        }
    }
}

/// Evaluate a guard; anything other than a boolean counts as `false`.
pub fn eval_guard(e: &Expr, local: &mut LocalState, role: &Role, host: &HostEnv) -> bool {
    match eval_expr(e, local, role, host) {
        Value::Bool(b) => b,
        other => {
            log::warn!("guard `{e}` at {role} evaluated to {other}; taking it as false");
            false
        }
    }
}

/// What a higher-order message carried.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PayloadKind {
    Code,
    No,
}

/// Transition labels of both levels.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Interaction { op: Operation, from: Role, value: Value, to: Role, var: Name },
    HigherOrder { op: Operation, from: Role, to: Role, payload: PayloadKind },
    Tau,
    Tick,
    AppliedUpdate { name: Name },
    NoUp,
    UpdateSetChange { names: Vec<Name> },
    Send { op: Operation, value: Value, to: Role, at: Role },
    Recv { op: Operation, var: Name, value: Value, from: Role, at: Role },
    SendHo { op: Operation, payload: PayloadKind, to: Role, at: Role },
}

impl Label {
    /// Silent at system level: τ and every communication on a private
    /// operation.
    pub fn is_silent(&self) -> bool {
        match self {
            Label::Tau => true,
            Label::Interaction { op, .. } | Label::HigherOrder { op, .. } => op.is_private(),
            _ => false,
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Label::Interaction { op, from, value, to, var } => json!({
                "kind": "interaction", "op": op.to_string(), "from": from.as_str(), "to": to.as_str(),
                "value": value_to_json(value), "var": var.as_ref()
            }),
            Label::HigherOrder { op, from, to, payload } => json!({
                "kind": "higher-order", "op": op.to_string(), "from": from.as_str(), "to": to.as_str(),
                "payload": match payload { PayloadKind::Code => "code", PayloadKind::No => "no" }
            }),
            Label::Tau => json!({ "kind": "tau" }),
            Label::Tick => json!({ "kind": "tick" }),
            Label::AppliedUpdate { name } => json!({ "kind": "update", "name": name.as_ref() }),
            Label::NoUp => json!({ "kind": "noup" }),
            Label::UpdateSetChange { names } => {
                let ns: Vec<&str> = names.iter().map(|n| n.as_ref()).collect();
                json!({ "kind": "updates-changed", "updates": ns })
            }
            Label::Send { op, value, to, at } => json!({
                "kind": "send", "op": op.to_string(), "value": value_to_json(value), "to": to.as_str(), "at": at.as_str()
            }),
            Label::Recv { op, var, value, from, at } => json!({
                "kind": "recv", "op": op.to_string(), "var": var.as_ref(), "value": value_to_json(value),
                "from": from.as_str(), "at": at.as_str()
            }),
            Label::SendHo { op, payload, to, at } => json!({
                "kind": "send-ho", "op": op.to_string(), "to": to.as_str(), "at": at.as_str(),
                "payload": match payload { PayloadKind::Code => "code", PayloadKind::No => "no" }
            }),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Interaction { op, from, value, to, var } => write!(f, "{op} : {from}({value}) -> {to}({var})"),
            Label::HigherOrder { op, from, to, payload } => {
                let p = if *payload == PayloadKind::Code { "<code>" } else { "no" };
                write!(f, "{op} : {from}({p}) -> {to}(_)")
            }
            Label::Tau => f.write_str("tau"),
            Label::Tick => f.write_str("tick"),
            Label::AppliedUpdate { name } => write!(f, "update {name}"),
            Label::NoUp => f.write_str("no-up"),
            Label::UpdateSetChange { names } => {
                let ns: Vec<&str> = names.iter().map(|n| n.as_ref()).collect();
                write!(f, "updates := {{{}}}", ns.join(", "))
            }
            Label::Send { op, value, to, at } => write!(f, "{at}: {op} ! {value} to {to}"),
            Label::Recv { op, var, value, from, at } => write!(f, "{at}: {op} ? {var}={value} from {from}"),
            Label::SendHo { op, to, at, .. } => write!(f, "{at}: {op} !! to {to}"),
        }
    }
}

/// A choreography system: global state, available updates, the annotated
/// program, the next unused index, and per-while unfolding counters.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiocSystem {
    pub state: GlobalState,
    pub updates: UpdateSet,
    pub proc: Arc<D>,
    pub next_index: u32,
    pub unfolds: BTreeMap<u32, u32>,
}

impl DiocSystem {
    pub fn new(proc: D, state: GlobalState, updates: UpdateSet) -> Self {
        let next_index = proc.max_index() + 1;
        DiocSystem { state, updates, proc: Arc::new(proc), next_index, unfolds: BTreeMap::new() }
    }

    pub fn with_next_index(mut self, n: u32) -> Self {
        self.next_index = self.next_index.max(n);
        self
    }
}

/// Transitions out of one state. `suppressed` records that a loop unfolding
/// beyond the loop bound was withheld.
#[derive(Clone, Debug)]
pub struct Step<S> {
    pub transitions: Vec<(Label, S)>,
    pub suppressed: bool,
}

/// Premise of rule Up: the update's roles lie within the scope body's roles
/// and the update is connected.
pub fn dioc_apply_update_rule_check(scope_body: &D, upd: &D) -> bool {
    roles_of(upd).is_subset(&roles_of(scope_body)) && is_connected(upd)
}

/// All transitions of a system, with no loop bound.
pub fn dioc_enabled(sys: &DiocSystem, host: &HostEnv) -> Vec<(Label, DiocSystem)> {
    dioc_step(sys, host, None).transitions
}

/// All transitions of a system; the `bound + 1`-th unfolding of any while
/// index is withheld when a bound is given.
pub fn dioc_step(sys: &DiocSystem, host: &HostEnv, loop_bound: Option<u32>) -> Step<DiocSystem> {
    let mut out = Vec::new();
    let mut suppressed = false;
    if can_tick(sys.proc.as_ref()) {
        let mut next = sys.clone();
        next.proc = Arc::new(D::Zero);
        out.push((Label::Tick, next));
    }
    for (path, leaf) in leaves(sys.proc.as_ref()) {
        let mut go = |label: Label, repl: D, state: Option<GlobalState>, f: &dyn Fn(&mut DiocSystem)| {
            let mut next = sys.clone();
            next.proc = Arc::new(apply(sys.proc.as_ref(), &path, repl));
            if let Some(s) = state {
                next.state = s;
            }
            f(&mut next);
            out.push((label, next));
        };
        match leaf {
            D::Interaction { index, op, sender, expr, receiver, var, span } => {
                let mut local = sys.state.local(sender);
                let v = eval_expr(expr, &mut local, sender, host);
                let mut st = sys.state.clone();
                st.set_local(sender, local);
                let label =
                    Label::Interaction { op: op.clone(), from: sender.clone(), value: v.clone(), to: receiver.clone(), var: var.clone() };
                let repl = D::Assign { index: *index, var: var.clone(), role: receiver.clone(), expr: Expr::Lit(v), span: *span };
                go(label, repl, Some(st), &|_| {});
            }
            D::Assign { var, role, expr, .. } => {
                let mut local = sys.state.local(role);
                let v = eval_expr(expr, &mut local, role, host);
                local.set(var, v);
                let mut st = sys.state.clone();
                st.set_local(role, local);
                go(Label::Tau, D::One, Some(st), &|_| {});
            }
            D::If { guard, role, then, els, .. } => {
                let mut local = sys.state.local(role);
                let b = eval_guard(guard, &mut local, role, host);
                let mut st = sys.state.clone();
                st.set_local(role, local);
                let branch = if b { then } else { els };
                go(Label::Tau, branch.as_ref().clone(), Some(st), &|_| {});
            }
            D::While { index, guard, role, body, .. } => {
                let mut local = sys.state.local(role);
                let b = eval_guard(guard, &mut local, role, host);
                let mut st = sys.state.clone();
                st.set_local(role, local);
                if b {
                    let key = index.unwrap_or(0);
                    let count = sys.unfolds.get(&key).copied().unwrap_or(0);
                    if loop_bound.is_some_and(|bound| count >= bound) {
                        suppressed = true;
                        continue;
                    }
                    let repl = D::seq(body.as_ref().clone(), leaf.clone());
                    go(Label::Tau, repl, Some(st), &|s| {
                        s.unfolds.insert(key, count + 1);
                    });
                } else {
                    go(Label::Tau, D::One, Some(st), &|_| {});
                }
            }
            D::Scope { body, .. } => {
                for upd in &sys.updates.updates {
                    if !dioc_apply_update_rule_check(body, &upd.body) {
                        continue;
                    }
                    let first = sys.next_index;
                    let fresh = annotate_from(&upd.body, first);
                    let used = fresh.indexes().len() as u32;
                    go(Label::AppliedUpdate { name: upd.name.clone() }, fresh, None, &|s| {
                        s.next_index = first + used;
                    });
                }
                go(Label::NoUp, body.as_ref().clone(), None, &|_| {});
            }
            D::Seq { .. } | D::Par { .. } | D::One | D::Zero => unreachable!("not a leaf"),
        }
    }
    Step { transitions: out, suppressed }
}

/// How a run resolves nondeterminism.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Policy {
    /// Uniform choice from a seeded generator.
    Seeded(u64),
    /// Choice index per step; unlisted steps take the first transition.
    Scripted(BTreeMap<usize, usize>),
    FirstEnabled,
}

/// A change of the available updates, applied once `after_weak_label`
/// observable labels have been produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduledChange {
    pub after_weak_label: usize,
    pub updates: UpdateSet,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schedule {
    pub changes: Vec<ScheduledChange>,
}

impl Schedule {
    pub fn none() -> Self {
        Schedule::default()
    }

    /// The change to apply when exactly `weak` observable labels have been seen.
    pub fn change_at(&self, weak: usize) -> Option<&ScheduledChange> {
        self.changes.iter().find(|c| c.after_weak_label == weak)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("invalid schedule: step {step} asks for choice {choice} but only {available} transitions are enabled")]
    InvalidSchedule { step: usize, choice: usize, available: usize },
}

/// Run a system under a policy, shared by both levels.
pub(crate) fn drive<S: Clone>(
    init: S,
    mut step: impl FnMut(&S) -> Vec<(Label, S)>,
    set_updates: impl Fn(&S, &UpdateSet) -> S,
    policy: &Policy,
    max_steps: usize,
    schedule: &Schedule,
) -> Result<Vec<Label>, TraceError> {
    let mut rng = match policy {
        Policy::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
        _ => None,
    };
    let mut trace = Vec::new();
    let mut cur = init;
    let mut weak = 0usize;
    let mut applied_at = None;
    for n in 0..max_steps {
        if applied_at != Some(weak) {
            if let Some(c) = schedule.change_at(weak) {
                cur = set_updates(&cur, &c.updates);
                trace.push(Label::UpdateSetChange { names: c.updates.names() });
                applied_at = Some(weak);
            }
        }
        let mut options = step(&cur);
        if options.is_empty() {
            break;
        }
        let choice = match policy {
            Policy::FirstEnabled => 0,
            Policy::Seeded(_) => rng.as_mut().expect("seeded").gen_range(0..options.len()),
            Policy::Scripted(m) => m.get(&n).copied().unwrap_or(0),
        };
        if choice >= options.len() {
            return Err(TraceError::InvalidSchedule { step: n, choice, available: options.len() });
        }
        let (label, next) = options.swap_remove(choice);
        if !label.is_silent() {
            weak += 1;
        }
        trace.push(label);
        cur = next;
    }
    Ok(trace)
}

/// Run a choreography system for at most `max_steps` transitions.
pub fn dioc_trace(
    sys: &DiocSystem,
    host: &HostEnv,
    policy: &Policy,
    max_steps: usize,
    schedule: &Schedule,
) -> Result<Vec<Label>, TraceError> {
    drive(
        sys.clone(),
        |s| dioc_enabled(s, host),
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
    use crate::ast::annotate;
    use crate::parser::parse_dioc_str;

    fn sys(src: &str) -> DiocSystem {
        DiocSystem::new(annotate(&parse_dioc_str(src).unwrap()), GlobalState::default(), UpdateSet::empty())
    }

    #[test]
    fn evaluation_is_total() {
        let host = HostEnv::default().with_function("getPrice", HostFn::Const(Value::Int(20)));
        let mut l = LocalState::default();
        let r = Role::new("a");
        let e = parse_dioc_str("x@a = 3 + 4").unwrap();
        let D::Assign { expr, .. } = e else { panic!() };
        assert_eq!(eval_expr(&expr, &mut l, &r, &host), Value::Int(7));
        assert_eq!(eval_expr(&Expr::var("x"), &mut l, &r, &host), Value::Error);
        assert_eq!(eval_expr(&Expr::call("getPrice", vec![Expr::str("book")]), &mut l, &r, &host), Value::Int(20));
        assert_eq!(eval_expr(&Expr::binary(BinOp::Div, Expr::int(1), Expr::int(0)), &mut l, &r, &host), Value::Error);
        assert_eq!(eval_expr(&Expr::call("nope", vec![]), &mut l, &r, &host), Value::Error);
    }

    #[test]
    fn get_input_consumes_and_exhausts() {
        let host = HostEnv::default().with_inputs("a", vec![Value::Int(1)]);
        let mut l = LocalState::default();
        let r = Role::new("a");
        let g = Expr::call("getInput", vec![]);
        assert_eq!(eval_expr(&g, &mut l, &r, &host), Value::Int(1));
        assert_eq!(eval_expr(&g, &mut l, &r, &host), Value::Error);
    }

    #[test]
    fn one_ticks_to_zero() {
        let s = DiocSystem::new(D::One, GlobalState::default(), UpdateSet::empty());
        let t = dioc_enabled(&s, &HostEnv::default());
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].0, Label::Tick);
        assert_eq!(*t[0].1.proc, D::Zero);
        assert!(dioc_enabled(&t[0].1, &HostEnv::default()).is_empty());
    }

    #[test]
    fn interaction_reduces_to_assignment() {
        let s = sys("o : a( 5 ) -> b( x )");
        let t = dioc_enabled(&s, &HostEnv::default());
        assert_eq!(t.len(), 1);
        assert!(matches!(&t[0].0, Label::Interaction { value: Value::Int(5), .. }));
        assert!(matches!(t[0].1.proc.as_ref(), D::Assign { expr: Expr::Lit(Value::Int(5)), .. }));
    }

    #[test]
    fn while_false_exits() {
        let s = sys("while ( false )@r { x@r = 1 }");
        let t = dioc_enabled(&s, &HostEnv::default());
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].0, Label::Tau);
        assert_eq!(*t[0].1.proc, D::One);
    }

    #[test]
    fn loop_bound_withholds_unfolding() {
        let s = sys("while ( true )@r { x@r = 1 }");
        let st = dioc_step(&s, &HostEnv::default(), Some(0));
        assert!(st.transitions.is_empty());
        assert!(st.suppressed);
    }

    #[test]
    fn assign_then_one_gives_tau_tick() {
        let s = sys("x@a = 1; 1");
        let t = dioc_trace(&s, &HostEnv::default(), &Policy::FirstEnabled, 10, &Schedule::none()).unwrap();
        assert_eq!(t, vec![Label::Tau, Label::Tick]);
    }

    #[test]
    fn scripted_out_of_range_is_an_error() {
        let s = sys("x@a = 1");
        let p = Policy::Scripted([(0, 3)].into());
        assert!(matches!(
            dioc_trace(&s, &HostEnv::default(), &p, 10, &Schedule::none()),
            Err(TraceError::InvalidSchedule { .. })
        ));
    }
}

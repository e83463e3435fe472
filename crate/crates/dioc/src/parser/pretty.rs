use std::fmt;

use crate::ast::{DiocProcess as D, DpocProcess as P, Expr, HoPayload, UnOp, Value, OK_TOKEN};
use crate::projection::Network;

const INDENT: &str = "  ";

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, ..) => op.precedence(),
        _ => u8::MAX,
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Lit(v) => out.push_str(&v.to_string()),
        Expr::Var(x) => out.push_str(x),
        Expr::Unary(op, inner) => {
            out.push_str(match op {
                UnOp::Not => "!",
                UnOp::Neg => "-",
            });
            let wrap = matches!(inner.as_ref(), Expr::Binary(..))
                || (*op == UnOp::Neg && matches!(inner.as_ref(), Expr::Lit(Value::Int(_) | Value::Float(_))));
            if wrap {
                out.push('(');
                write_expr(inner, out);
                out.push(')');
            } else {
                write_expr(inner, out);
            }
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            let wrap_l = expr_prec(l) < p;
            let wrap_r = expr_prec(r) <= p;
            write_sub(l, wrap_l, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_sub(r, wrap_r, out);
        }
        Expr::Call(f, args) => {
            out.push_str(f);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(a, out);
            }
            out.push(')');
        }
    }
}

fn write_sub(e: &Expr, wrap: bool, out: &mut String) {
    if wrap {
        out.push('(');
    }
    write_expr(e, out);
    if wrap {
        out.push(')');
    }
}

/// Render an expression with the minimum parentheses needed to re-parse it.
pub fn pretty_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(e, &mut s);
    s
}

fn indent(lines: Vec<String>) -> impl Iterator<Item = String> {
    lines.into_iter().map(|l| format!("{INDENT}{l}"))
}

fn block(header: String, body: Vec<String>) -> Vec<String> {
    if body.len() == 1 {
        return vec![format!("{header}{{ {} }}", body[0])];
    }
    let mut out = vec![format!("{header}{{")];
    out.extend(indent(body));
    out.push("}".to_string());
    out
}

fn glue(mut first: Vec<String>, sep: &str, second: Vec<String>) -> Vec<String> {
    let mut it = second.into_iter();
    if let (Some(last), Some(head)) = (first.last_mut(), it.next()) {
        last.push_str(sep);
        last.push_str(&head);
    }
    first.extend(it);
    first
}

fn par_block(branches: Vec<Vec<String>>) -> Vec<String> {
    if branches.iter().all(|b| b.len() == 1) {
        let parts: Vec<&str> = branches.iter().map(|b| b[0].as_str()).collect();
        return vec![format!("{{ {} }}", parts.join(" | "))];
    }
    let mut out = vec!["{".to_string()];
    for (i, b) in branches.into_iter().enumerate() {
        if i > 0 {
            out.push("|".to_string());
        }
        out.extend(indent(b));
    }
    out.push("}".to_string());
    out
}

fn sequence(items: Vec<Vec<String>>) -> Vec<String> {
    let n = items.len();
    let mut out = Vec::new();
    for (i, mut item) in items.into_iter().enumerate() {
        if i + 1 < n {
            if let Some(l) = item.last_mut() {
                l.push(';');
            }
        }
        out.extend(item);
    }
    out
}

struct DiocPrinter {
    annotated: bool,
}

impl DiocPrinter {
    fn program(&self, p: &D) -> Vec<String> {
        let mut items = Vec::new();
        let mut cur = p;
        while let D::Seq { left, right, .. } = cur {
            items.push(self.stmt(left));
            cur = right;
        }
        items.push(self.stmt(cur));
        sequence(items)
    }

    fn idx(&self, i: Option<u32>) -> String {
        match (self.annotated, i) {
            (true, Some(n)) => format!("{n} : "),
            _ => String::new(),
        }
    }

    fn stmt(&self, p: &D) -> Vec<String> {
        match p {
            D::One => vec!["1".into()],
            D::Zero => vec!["0".into()],
            D::Seq { .. } => block(String::new(), self.program(p)),
            D::Par { .. } => {
                let mut branches = Vec::new();
                let mut cur = p;
                while let D::Par { left, right, .. } = cur {
                    branches.push(self.branch(left));
                    cur = right;
                }
                branches.push(self.branch(cur));
                par_block(branches)
            }
            D::Interaction { index, op, sender, expr, receiver, var, .. } => vec![format!(
                "{}{op} : {sender}( {} ) -> {receiver}( {var} )",
                self.idx(*index),
                pretty_expr(expr)
            )],
            D::Assign { index, var, role, expr, .. } => {
                vec![format!("{}{var}@{role} = {}", self.idx(*index), pretty_expr(expr))]
            }
            D::If { index, guard, role, then, els, .. } => {
                let head = block(format!("{}if ( {} )@{role} ", self.idx(*index), pretty_expr(guard)), self.program(then));
                if matches!(els.as_ref(), D::One) {
                    head
                } else {
                    glue(head, " else ", block(String::new(), self.program(els)))
                }
            }
            D::While { index, guard, role, body, .. } => {
                block(format!("{}while ( {} )@{role} ", self.idx(*index), pretty_expr(guard)), self.program(body))
            }
            D::Scope { index, coordinator, body, name, .. } => {
                let name = name.as_ref().map(|n| format!("{n} ")).unwrap_or_default();
                block(format!("{}scope {name}@{coordinator} ", self.idx(*index)), self.program(body))
            }
        }
    }

    fn branch(&self, p: &D) -> Vec<String> {
        match p {
            D::Par { .. } => self.stmt(p),
            _ => self.program(p),
        }
    }
}

/// Render a choreography in the concrete syntax accepted by the parser.
pub fn pretty_dioc(p: &D) -> String {
    DiocPrinter { annotated: false }.program(p).join("\n")
}

/// Like [`pretty_dioc`], with each indexed statement prefixed by `n : `.
pub fn pretty_dioc_annotated(p: &D) -> String {
    DiocPrinter { annotated: true }.program(p).join("\n")
}

fn dpoc_program(p: &P) -> Vec<String> {
    let mut items = Vec::new();
    let mut cur = p;
    while let P::Seq(l, r) = cur {
        items.push(dpoc_stmt(l));
        cur = r;
    }
    items.push(dpoc_stmt(cur));
    sequence(items)
}

fn dpoc_branch(p: &P) -> Vec<String> {
    match p {
        P::Par(..) => dpoc_stmt(p),
        _ => dpoc_program(p),
    }
}

fn payload_expr(op: &crate::ast::Operation, e: &Expr) -> String {
    match e {
        Expr::Lit(Value::Str(s)) if op.is_private() && s.as_ref() == OK_TOKEN => OK_TOKEN.to_string(),
        _ => pretty_expr(e),
    }
}

fn dpoc_stmt(p: &P) -> Vec<String> {
    match p {
        P::One => vec!["1".into()],
        P::Zero => vec!["0".into()],
        P::Seq(..) => block(String::new(), dpoc_program(p)),
        P::Par(..) => {
            let mut branches = Vec::new();
            let mut cur = p;
            while let P::Par(l, r) = cur {
                branches.push(dpoc_branch(l));
                cur = r;
            }
            branches.push(dpoc_branch(cur));
            par_block(branches)
        }
        P::Send { op, expr, to, .. } => vec![format!("{op} : {} to {to}", payload_expr(op, expr))],
        P::Recv { op, var, from, .. } => vec![format!("{op} : {var} from {from}")],
        P::SendHo { op, payload: HoPayload::No, to, .. } => vec![format!("{op} : no to {to}")],
        P::SendHo { op, payload: HoPayload::Code(code), to, .. } => {
            let mut lines = block(format!("{op} : "), dpoc_program(code));
            if let Some(l) = lines.last_mut() {
                l.push_str(&format!(" to {to}"));
            }
            lines
        }
        P::Assign { var, expr, .. } => vec![format!("{var} = {}", pretty_expr(expr))],
        P::If { guard, then, els, .. } => {
            let head = block(format!("if ( {} ) ", pretty_expr(guard)), dpoc_program(then));
            if matches!(els.as_ref(), P::One) {
                head
            } else {
                glue(head, " else ", block(String::new(), dpoc_program(els)))
            }
        }
        P::While { guard, body, .. } => block(format!("while ( {} ) ", pretty_expr(guard)), dpoc_program(body)),
        P::ScopeLead { index, coordinator, body, roles, name } => {
            let name = name.as_ref().map(|n| format!("{n} ")).unwrap_or_default();
            let mut lines = block(format!("{} : scope {name}@{coordinator} ", index.base), dpoc_program(body));
            let rs: Vec<&str> = roles.iter().map(|r| r.as_str()).collect();
            if let Some(l) = lines.last_mut() {
                l.push_str(&format!(" roles {{ {} }}", rs.join(", ")));
            }
            lines
        }
        P::ScopePlain { index, coordinator, body, name } => {
            let name = name.as_ref().map(|n| format!("{n} ")).unwrap_or_default();
            block(format!("{} : scope {name}@{coordinator} ", index.base), dpoc_program(body))
        }
    }
}

/// Render an endpoint process one statement per line.
pub fn pretty_dpoc(p: &P) -> String {
    dpoc_program(p).join("\n")
}

/// Render a network as a sequence of `role NAME { ... }` blocks.
pub fn pretty_network(n: &Network) -> String {
    let mut out = String::new();
    for (role, (proc, _)) in &n.roles {
        for l in block(format!("role {role} "), dpoc_program(proc)) {
            out.push_str(&l);
            out.push('\n');
        }
    }
    out
}

impl fmt::Display for D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_dioc(self))
    }
}

impl fmt::Display for P {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_dpoc(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_expr(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{BinOp, IndexTag, Operation};
    use crate::parser::{parse_dioc_str, parse_dpoc_process};

    #[test]
    fn send_uses_to_keyword() {
        let s = P::Send { index: IndexTag::plain(8), op: Operation::public("offer"), expr: Expr::var("s_price"), to: "buyer".into() };
        assert_eq!(pretty_dpoc(&s), "offer : s_price to buyer");
        assert_eq!(pretty_dpoc(&P::One), "1");
        assert_eq!(pretty_dioc(&D::One), "1");
    }

    #[test]
    fn ok_token_prints_bare_on_aux_ops() {
        let s = P::Send { index: IndexTag::plain(1), op: Operation::aux(3), expr: Expr::str(OK_TOKEN), to: "buyer".into() };
        assert_eq!(pretty_dpoc(&s), "o*_3 : ok to buyer");
        let parsed = parse_dpoc_process("o*_3 : ok to buyer").unwrap();
        assert!(matches!(parsed, P::Send { ref expr, .. } if *expr == Expr::str(OK_TOKEN)));
    }

    #[test]
    fn expressions_keep_their_shape() {
        let cases = [
            Expr::binary(BinOp::Sub, Expr::int(1), Expr::binary(BinOp::Sub, Expr::int(2), Expr::int(3))),
            Expr::binary(BinOp::Mul, Expr::binary(BinOp::Add, Expr::int(1), Expr::int(2)), Expr::int(3)),
            Expr::Unary(UnOp::Neg, Box::new(Expr::int(4))),
            Expr::not(Expr::binary(BinOp::And, Expr::var("a"), Expr::var("b"))),
        ];
        for e in cases {
            let src = format!("x@a = {}", pretty_expr(&e));
            let D::Assign { expr, .. } = parse_dioc_str(&src).unwrap() else { panic!() };
            assert_eq!(expr, e, "{src}");
        }
    }

    #[test]
    fn nested_sequences_and_pars_round_trip() {
        let a = D::assign("x", "a", Expr::int(1));
        let b = D::assign("y", "a", Expr::int(2));
        let c = D::assign("z", "a", Expr::int(3));
        let cases = [
            D::seq(D::seq(a.clone(), b.clone()), c.clone()),
            D::par(D::par(a.clone(), b.clone()), c.clone()),
            D::par(D::seq(a.clone(), b.clone()), c.clone()),
            D::if_(Expr::bool(true), "a", D::One, D::seq(a.clone(), D::par(b, c))),
        ];
        for p in cases {
            assert_eq!(parse_dioc_str(&pretty_dioc(&p)).unwrap(), p, "{}", pretty_dioc(&p));
        }
    }
}

//! Endpoint-process syntax, as printed by [`super::pretty_dpoc`]:
//!
//! ```text
//! proc   := pstmt (';' pstmt)* [';']
//! pstmt  := '1' | '0' | block
//!         | op ':' expr 'to' ID            send
//!         | op ':' ID 'from' ID            receive
//!         | op ':' ('no' | block) 'to' ID  higher-order send
//!         | ID '=' expr
//!         | 'if' expr block ['else' block]
//!         | 'while' expr block
//!         | [INT ':'] 'scope' [ID] '@' ID block ['roles' '{' ID (',' ID)* '}']
//! op     := (INT '.')* (ID | 'o*_' INT)
//! network := ('role' ID '{' proc '}')*
//! ```
//!
//! Only scope indexes are written in the text; every other construct receives
//! a fresh index after parsing.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::lexer::Tok;
use super::{Cursor, Diagnostic, PResult};
use crate::ast::{DpocProcess as P, Expr, HoPayload, IndexTag, Operation, Role, Value, OK_TOKEN};
use crate::projection::Network;

struct DpocParser {
    cur: Cursor,
}

const UNSET: IndexTag = IndexTag { base: 0, branch: None };

impl DpocParser {
    fn proc(&mut self) -> PResult<P> {
        let mut items = vec![self.stmt()?];
        while self.cur.eat(&Tok::Semi) {
            if matches!(self.cur.peek(), Tok::RBrace | Tok::Bar | Tok::Eof) {
                break;
            }
            items.push(self.stmt()?);
        }
        Ok(P::seq_all(items))
    }

    fn block(&mut self) -> PResult<P> {
        self.cur.expect(&Tok::LBrace, "`{`")?;
        if self.cur.eat(&Tok::RBrace) {
            return Ok(P::One);
        }
        let mut branches = vec![self.proc()?];
        while self.cur.eat(&Tok::Bar) {
            branches.push(self.proc()?);
        }
        self.cur.expect(&Tok::RBrace, "`}`")?;
        Ok(P::par_all(branches))
    }

    fn role(&mut self) -> PResult<Role> {
        let (r, _) = self.cur.ident("role name")?;
        Ok(Role::new(&r))
    }

    fn operation(&mut self) -> PResult<Operation> {
        let mut prefix = Vec::new();
        while let (Tok::Int(n), Tok::Dot) = (self.cur.peek().clone(), self.cur.peek_at(1)) {
            if n < 0 || n > u32::MAX as i128 {
                return Err(Diagnostic::error(self.cur.span(), "prefix out of range"));
            }
            prefix.push(n as u32);
            self.cur.bump();
            self.cur.bump();
        }
        let mut op = match self.cur.peek().clone() {
            Tok::AuxOp(n) => {
                self.cur.bump();
                Operation::aux(n)
            }
            _ => {
                let (name, _) = self.cur.ident("operation name")?;
                Operation::public(&name)
            }
        };
        op.prefix = prefix;
        Ok(op)
    }

    fn communication(&mut self) -> PResult<P> {
        let op = self.operation()?;
        self.cur.expect(&Tok::Colon, "`:`")?;
        if self.cur.at_kw("no") && matches!(self.cur.peek_at(1), Tok::Ident(s) if s == "to") {
            self.cur.bump();
            self.cur.expect_kw("to")?;
            let to = self.role()?;
            return Ok(P::SendHo { index: UNSET, op, payload: HoPayload::No, to, ack: UNSET });
        }
        if self.cur.at(&Tok::LBrace) {
            let code = self.block()?;
            self.cur.expect_kw("to")?;
            let to = self.role()?;
            return Ok(P::SendHo { index: UNSET, op, payload: HoPayload::Code(Arc::new(code)), to, ack: UNSET });
        }
        let sp = self.cur.span();
        let mut expr = self.cur.expr()?;
        if self.cur.at_kw("to") {
            if op.is_private() && matches!(&expr, Expr::Var(x) if x.as_ref() == OK_TOKEN) {
                expr = Expr::Lit(Value::str(OK_TOKEN));
            }
            self.cur.bump();
            let to = self.role()?;
            Ok(P::Send { index: UNSET, op, expr, to })
        } else if self.cur.at_kw("from") {
            self.cur.bump();
            let from = self.role()?;
            match expr {
                Expr::Var(var) => Ok(P::Recv { index: UNSET, op, var, from }),
                _ => Err(Diagnostic::error(sp, "a receive must bind a variable")),
            }
        } else {
            Err(self.cur.unexpected("`to` or `from`"))
        }
    }

    fn scope(&mut self, index: IndexTag) -> PResult<P> {
        self.cur.expect_kw("scope")?;
        let mut name = None;
        if matches!(self.cur.peek(), Tok::Ident(_)) {
            let (n, _) = self.cur.ident("scope name")?;
            name = Some(Arc::from(n.as_str()));
        }
        self.cur.expect(&Tok::At, "`@` and the coordinating role")?;
        let coordinator = self.role()?;
        let body = Arc::new(self.block()?);
        if self.cur.at_kw("roles") {
            self.cur.bump();
            self.cur.expect(&Tok::LBrace, "`{`")?;
            let mut roles = BTreeSet::new();
            if !self.cur.at(&Tok::RBrace) {
                loop {
                    roles.insert(self.role()?);
                    if !self.cur.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            self.cur.expect(&Tok::RBrace, "`}`")?;
            Ok(P::ScopeLead { index, coordinator, body, roles, name })
        } else {
            Ok(P::ScopePlain { index, coordinator, body, name })
        }
    }

    fn stmt(&mut self) -> PResult<P> {
        match self.cur.peek().clone() {
            Tok::Int(n) if matches!(self.cur.peek_at(1), Tok::Colon) => {
                if n <= 0 || n > u32::MAX as i128 {
                    return Err(Diagnostic::error(self.cur.span(), "scope index out of range"));
                }
                self.cur.bump();
                self.cur.bump();
                self.scope(IndexTag::plain(n as u32))
            }
            Tok::Int(_) if matches!(self.cur.peek_at(1), Tok::Dot) => self.communication(),
            Tok::Int(1) => {
                self.cur.bump();
                Ok(P::One)
            }
            Tok::Int(0) => {
                self.cur.bump();
                Ok(P::Zero)
            }
            Tok::LBrace => self.block(),
            Tok::AuxOp(_) => self.communication(),
            Tok::Ident(kw) if kw == "if" => {
                self.cur.bump();
                let guard = self.cur.expr()?;
                let then = Arc::new(self.block()?);
                let els = if self.cur.at_kw("else") {
                    self.cur.bump();
                    Arc::new(self.block()?)
                } else {
                    Arc::new(P::One)
                };
                Ok(P::If { index: UNSET, guard, then, els })
            }
            Tok::Ident(kw) if kw == "while" => {
                self.cur.bump();
                let guard = self.cur.expr()?;
                let body = Arc::new(self.block()?);
                Ok(P::While { index: UNSET, guard, body })
            }
            Tok::Ident(kw) if kw == "scope" => self.scope(UNSET),
            Tok::Ident(_) => match self.cur.peek_at(1) {
                Tok::Assign => {
                    let (var, _) = self.cur.ident("variable")?;
                    self.cur.bump();
                    let expr = self.cur.expr()?;
                    Ok(P::Assign { index: UNSET, var: Arc::from(var.as_str()), expr })
                }
                Tok::Colon => self.communication(),
                _ => {
                    self.cur.bump();
                    Err(self.cur.unexpected("`=` or `:`"))
                }
            },
            _ => Err(self.cur.unexpected("statement")),
        }
    }
}

fn explicit_max(p: &P) -> u32 {
    let own = match p {
        P::ScopeLead { index, .. } | P::ScopePlain { index, .. } => index.base,
        P::Send { op, .. } | P::Recv { op, .. } | P::SendHo { op, .. } => {
            op.name.strip_prefix(crate::ast::AUX_OP_PREFIX).and_then(|d| d.parse().ok()).unwrap_or(0)
        }
        _ => 0,
    };
    let payload = match p {
        P::SendHo { payload: HoPayload::Code(c), .. } => explicit_max(c),
        _ => 0,
    };
    p.children().iter().map(|c| explicit_max(c)).fold(own.max(payload), u32::max)
}

fn fill(p: &P, next: &mut u32) -> P {
    let mut fresh = |t: IndexTag| {
        if t == UNSET {
            let i = *next;
            *next += 1;
            IndexTag::plain(i)
        } else {
            t
        }
    };
    match p {
        P::Recv { index, op, var, from } => {
            P::Recv { index: fresh(*index), op: op.clone(), var: var.clone(), from: from.clone() }
        }
        P::Send { index, op, expr, to } => {
            P::Send { index: fresh(*index), op: op.clone(), expr: expr.clone(), to: to.clone() }
        }
        P::SendHo { index, op, payload, to, ack } => {
            let index = fresh(*index);
            let ack = fresh(*ack);
            let payload = match payload {
                HoPayload::No => HoPayload::No,
                HoPayload::Code(c) => HoPayload::Code(Arc::new(fill(c, next))),
            };
            P::SendHo { index, op: op.clone(), payload, to: to.clone(), ack }
        }
        P::Assign { index, var, expr } => P::Assign { index: fresh(*index), var: var.clone(), expr: expr.clone() },
        P::Seq(a, b) => {
            let a = fill(a, next);
            P::seq(a, fill(b, next))
        }
        P::Par(a, b) => {
            let a = fill(a, next);
            P::par(a, fill(b, next))
        }
        P::One => P::One,
        P::Zero => P::Zero,
        P::If { index, guard, then, els } => {
            let index = fresh(*index);
            let then = Arc::new(fill(then, next));
            let els = Arc::new(fill(els, next));
            P::If { index, guard: guard.clone(), then, els }
        }
        P::While { index, guard, body } => {
            let index = fresh(*index);
            P::While { index, guard: guard.clone(), body: Arc::new(fill(body, next)) }
        }
        P::ScopeLead { index, coordinator, body, roles, name } => {
            let index = fresh(*index);
            P::ScopeLead {
                index,
                coordinator: coordinator.clone(),
                body: Arc::new(fill(body, next)),
                roles: roles.clone(),
                name: name.clone(),
            }
        }
        P::ScopePlain { index, coordinator, body, name } => {
            let index = fresh(*index);
            P::ScopePlain { index, coordinator: coordinator.clone(), body: Arc::new(fill(body, next)), name: name.clone() }
        }
    }
}

/// Parse a single endpoint process.
pub fn parse_dpoc_process(text: &str) -> Result<P, Vec<Diagnostic>> {
    let cur = Cursor::new(text).map_err(|d| vec![d])?;
    let mut p = DpocParser { cur };
    if p.cur.at(&Tok::Eof) {
        return Err(vec![Diagnostic::error(p.cur.span(), "empty process")]);
    }
    let proc = p.proc().map_err(|d| vec![d])?;
    if !p.cur.at(&Tok::Eof) {
        return Err(vec![p.cur.unexpected("`;` or end of input")]);
    }
    let mut next = explicit_max(&proc) + 1;
    Ok(fill(&proc, &mut next))
}

/// Parse a network written as a list of `role NAME { process }` blocks.
pub fn parse_dpoc_network(text: &str) -> Result<Network, Vec<Diagnostic>> {
    let cur = Cursor::new(text).map_err(|d| vec![d])?;
    let mut p = DpocParser { cur };
    let mut raw = Vec::new();
    while !p.cur.at(&Tok::Eof) {
        let sp = p.cur.span();
        p.cur.expect_kw("role").map_err(|d| vec![d])?;
        let role = p.role().map_err(|d| vec![d])?;
        let body = p.block().map_err(|d| vec![d])?;
        if raw.iter().any(|(r, _): &(Role, P)| r == &role) {
            return Err(vec![Diagnostic::error(sp, &format!("role `{role}` declared twice"))]);
        }
        raw.push((role, body));
    }
    let mut next = raw.iter().map(|(_, b)| explicit_max(b)).max().unwrap_or(0) + 1;
    let mut net = Network::default();
    for (role, body) in raw {
        let filled = fill(&body, &mut next);
        net.insert(role, filled, Default::default());
    }
    Ok(net)
}

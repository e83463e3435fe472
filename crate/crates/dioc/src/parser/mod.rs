//! Concrete syntax: a recursive-descent parser for choreographies (`.dioc`),
//! updates (`.upd`) and endpoint processes (`.dpoc`), and the matching
//! pretty-printers.
//!
//! Choreography grammar:
//!
//! ```text
//! program   := stmt (';' stmt)* [';']
//! stmt      := [INT ':'] ( assign | interaction | if | while | scope | block | '1' | '0' )
//! assign    := ID '@' ID '=' expr
//! interaction := ID ':' ID '(' expr ')' ('->' | '→') ID '(' ID ')'
//! if        := 'if' expr '@' ID block ['else' block]
//! while     := 'while' expr '@' ID block
//! scope     := 'scope' [ID] '@' ID block
//! block     := '{' program ('|' program)* '}'
//! ```
//!
//! A block with several branches is a parallel composition; a single-branch
//! block only groups. Guards are ordinary expressions, so both
//! `if (b)@r` and `if isValid(x)@r` are accepted. Operator precedence from
//! loosest to tightest: `or`, `and`, comparisons, `+ - ++`, `* /`, unary
//! `! not -`.

mod dpoc;
mod lexer;
mod pretty;

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::ast::{BinOp, DiocProcess, Expr, Operation, Role, Span, UnOp, Value, AUX_VAR_PREFIX};
use lexer::{Tok, Token};

pub use dpoc::{parse_dpoc_network, parse_dpoc_process};
pub use pretty::{pretty_dioc, pretty_dioc_annotated, pretty_dpoc, pretty_expr, pretty_network};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Severity {
    Error,
    Warning,
}

/// A located message about a source text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Span,
    pub message: String,
    pub code: String,
}

impl Diagnostic {
    pub fn error(span: Span, message: &str) -> Self {
        Diagnostic { severity: Severity::Error, span, message: message.to_string(), code: "PARSE".into() }
    }

    pub fn with_code(mut self, code: &str) -> Self {
        self.code = code.to_string();
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {}[{}]: {}", self.span.line, self.span.col, sev, self.code, self.message)
    }
}

/// A named source text.
#[derive(Clone, Debug)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
}

impl SourceFile {
    pub fn new(path: &str, text: &str) -> Self {
        SourceFile { path: path.to_string(), text: text.to_string() }
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        Ok(SourceFile { path: path.display().to_string(), text: std::fs::read_to_string(path)? })
    }

    /// File name without directory and extension.
    pub fn stem(&self) -> String {
        Path::new(&self.path)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.path.clone())
    }
}

const KEYWORDS: &[&str] = &[
    "if", "else", "while", "scope", "true", "false", "null", "and", "or", "not", "roles", "role", "to", "from",
    "no",
];

pub(crate) fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

fn is_aux_var(s: &str) -> bool {
    s.strip_prefix(AUX_VAR_PREFIX).map(|d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit())).unwrap_or(false)
}

pub(crate) struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Cursor {
    pub(crate) fn new(text: &str) -> PResult<Self> {
        Ok(Cursor { toks: lexer::lex(text)?, pos: 0 })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub(crate) fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    pub(crate) fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn unexpected(&self, wanted: &str) -> Diagnostic {
        Diagnostic::error(self.span(), &format!("expected {wanted}, found {}", self.peek().describe()))
    }

    pub(crate) fn expect(&mut self, t: &Tok, wanted: &str) -> PResult<Span> {
        if self.at(t) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(wanted))
        }
    }

    pub(crate) fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.at_kw(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    /// A non-keyword identifier.
    pub(crate) fn ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                let sp = self.bump().span;
                Ok((s, sp))
            }
            Tok::Ident(s) => Err(Diagnostic::error(self.span(), &format!("`{s}` is a reserved word"))),
            _ => Err(self.unexpected(what)),
        }
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        self.expr_or()
    }

    fn expr_or(&mut self) -> PResult<Expr> {
        let mut l = self.expr_and()?;
        while self.at_kw("or") || self.at(&Tok::OrOr) {
            self.bump();
            let r = self.expr_and()?;
            l = Expr::binary(BinOp::Or, l, r);
        }
        Ok(l)
    }

    fn expr_and(&mut self) -> PResult<Expr> {
        let mut l = self.expr_cmp()?;
        while self.at_kw("and") || self.at(&Tok::AndAnd) {
            self.bump();
            let r = self.expr_cmp()?;
            l = Expr::binary(BinOp::And, l, r);
        }
        Ok(l)
    }

    fn expr_cmp(&mut self) -> PResult<Expr> {
        let mut l = self.expr_add()?;
        loop {
            let op = match self.peek() {
                Tok::EqEq => BinOp::Eq,
                Tok::NotEq => BinOp::Ne,
                Tok::Lt => BinOp::Lt,
                Tok::Le => BinOp::Le,
                Tok::Gt => BinOp::Gt,
                Tok::Ge => BinOp::Ge,
                _ => return Ok(l),
            };
            self.bump();
            let r = self.expr_add()?;
            l = Expr::binary(op, l, r);
        }
    }

    fn expr_add(&mut self) -> PResult<Expr> {
        let mut l = self.expr_mul()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                Tok::PlusPlus => BinOp::Concat,
                _ => return Ok(l),
            };
            self.bump();
            let r = self.expr_mul()?;
            l = Expr::binary(op, l, r);
        }
    }

    fn expr_mul(&mut self) -> PResult<Expr> {
        let mut l = self.expr_unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(l),
            };
            self.bump();
            let r = self.expr_unary()?;
            l = Expr::binary(op, l, r);
        }
    }

    fn expr_unary(&mut self) -> PResult<Expr> {
        if self.at(&Tok::Bang) || self.at_kw("not") {
            self.bump();
            let e = self.expr_unary()?;
            return Ok(Expr::Unary(UnOp::Not, Box::new(e)));
        }
        if self.at(&Tok::Minus) {
            self.bump();
            match self.peek().clone() {
                Tok::Int(n) => {
                    self.bump();
                    return Ok(Expr::Lit(Value::Int((-n) as i64)));
                }
                Tok::Float(x) => {
                    self.bump();
                    return Ok(Expr::Lit(Value::float(-x)));
                }
                _ => {}
            }
            let e = self.expr_unary()?;
            return Ok(Expr::Unary(UnOp::Neg, Box::new(e)));
        }
        self.expr_primary()
    }

    fn expr_primary(&mut self) -> PResult<Expr> {
        let sp = self.span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                if n > i64::MAX as i128 {
                    return Err(Diagnostic::error(sp, "integer literal out of range"));
                }
                Ok(Expr::Lit(Value::Int(n as i64)))
            }
            Tok::Float(x) => {
                self.bump();
                Ok(Expr::Lit(Value::float(x)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Lit(Value::str(&s)))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(s) => match s.as_str() {
                "true" => {
                    self.bump();
                    Ok(Expr::Lit(Value::Bool(true)))
                }
                "false" => {
                    self.bump();
                    Ok(Expr::Lit(Value::Bool(false)))
                }
                "null" => {
                    self.bump();
                    Ok(Expr::Lit(Value::Null))
                }
                _ => {
                    let (name, _) = self.ident("expression")?;
                    if self.eat(&Tok::LParen) {
                        let mut args = Vec::new();
                        if !self.at(&Tok::RParen) {
                            loop {
                                args.push(self.expr()?);
                                if !self.eat(&Tok::Comma) {
                                    break;
                                }
                            }
                        }
                        self.expect(&Tok::RParen, "`)` closing the argument list")?;
                        Ok(Expr::call(&name, args))
                    } else {
                        Ok(Expr::var(&name))
                    }
                }
            },
            _ => Err(self.unexpected("expression")),
        }
    }
}

struct DiocParser {
    cur: Cursor,
}

impl DiocParser {
    fn program(&mut self) -> PResult<DiocProcess> {
        let mut stmts = vec![self.stmt()?];
        let mut seps = Vec::new();
        while self.cur.at(&Tok::Semi) {
            let sp = self.cur.bump().span;
            if matches!(self.cur.peek(), Tok::RBrace | Tok::Bar | Tok::Eof) {
                break;
            }
            seps.push(sp);
            stmts.push(self.stmt()?);
        }
        let mut acc = stmts.pop().expect("at least one statement");
        while let Some(s) = stmts.pop() {
            let span = seps.pop().unwrap_or_default();
            acc = DiocProcess::Seq { left: Arc::new(s), right: Arc::new(acc), span };
        }
        Ok(acc)
    }

    fn block(&mut self) -> PResult<DiocProcess> {
        let open = self.cur.expect(&Tok::LBrace, "`{`")?;
        if self.cur.eat(&Tok::RBrace) {
            return Ok(DiocProcess::One);
        }
        let mut branches = vec![self.program()?];
        let mut bars = Vec::new();
        while self.cur.at(&Tok::Bar) {
            bars.push(self.cur.bump().span);
            branches.push(self.program()?);
        }
        self.cur.expect(&Tok::RBrace, "`}`")?;
        let mut acc = branches.pop().expect("at least one branch");
        while let Some(b) = branches.pop() {
            let span = bars.pop().unwrap_or(open);
            acc = DiocProcess::Par { left: Arc::new(b), right: Arc::new(acc), span };
        }
        Ok(acc)
    }

    fn role(&mut self) -> PResult<Role> {
        let (r, _) = self.cur.ident("role name")?;
        Ok(Role::new(&r))
    }

    fn variable(&mut self) -> PResult<(String, Span)> {
        let (x, sp) = self.cur.ident("variable name")?;
        if is_aux_var(&x) {
            return Err(Diagnostic::error(sp, &format!("variable name `{x}` is reserved for projection")));
        }
        Ok((x, sp))
    }

    fn stmt(&mut self) -> PResult<DiocProcess> {
        let start = self.cur.span();
        let mut index = None;
        if let (Tok::Int(n), Tok::Colon) = (self.cur.peek().clone(), self.cur.peek_at(1)) {
            if n < 0 || n > u32::MAX as i128 {
                return Err(Diagnostic::error(start, "index out of range"));
            }
            index = Some(n as u32);
            self.cur.bump();
            self.cur.bump();
        }
        let sp = self.cur.span();
        let indexed_only = |what: &str| {
            Diagnostic::error(start, &format!("{what} cannot carry an index"))
        };
        match self.cur.peek().clone() {
            Tok::Int(1) => {
                if index.is_some() {
                    return Err(indexed_only("`1`"));
                }
                self.cur.bump();
                Ok(DiocProcess::One)
            }
            Tok::Int(0) => {
                if index.is_some() {
                    return Err(indexed_only("`0`"));
                }
                self.cur.bump();
                Ok(DiocProcess::Zero)
            }
            Tok::LBrace => {
                if index.is_some() {
                    return Err(indexed_only("a block"));
                }
                self.block()
            }
            Tok::AuxOp(_) => Err(Diagnostic::error(sp, "operation names starting with `o*_` are reserved")),
            Tok::Ident(kw) if kw == "if" => {
                self.cur.bump();
                let guard = self.cur.expr()?;
                self.cur.expect(&Tok::At, "`@` and the role evaluating the guard")?;
                let role = self.role()?;
                let then = self.block()?;
                let els = if self.cur.at_kw("else") {
                    self.cur.bump();
                    self.block()?
                } else {
                    DiocProcess::One
                };
                Ok(DiocProcess::If { index, guard, role, then: Arc::new(then), els: Arc::new(els), span: sp })
            }
            Tok::Ident(kw) if kw == "while" => {
                self.cur.bump();
                let guard = self.cur.expr()?;
                self.cur.expect(&Tok::At, "`@` and the role evaluating the guard")?;
                let role = self.role()?;
                let body = self.block()?;
                Ok(DiocProcess::While { index, guard, role, body: Arc::new(body), span: sp })
            }
            Tok::Ident(kw) if kw == "scope" => {
                self.cur.bump();
                let mut name = None;
                if matches!(self.cur.peek(), Tok::Ident(_)) {
                    let (n, _) = self.cur.ident("scope name")?;
                    name = Some(Arc::from(n.as_str()));
                }
                self.cur.expect(&Tok::At, "`@` and the coordinating role")?;
                let coordinator = self.role()?;
                let body = self.block()?;
                Ok(DiocProcess::Scope { index, coordinator, body: Arc::new(body), name, span: sp })
            }
            Tok::Ident(_) => match self.cur.peek_at(1).clone() {
                Tok::At => {
                    let (var, _) = self.variable()?;
                    self.cur.bump();
                    let role = self.role()?;
                    self.cur.expect(&Tok::Assign, "`=`")?;
                    let expr = self.cur.expr()?;
                    Ok(DiocProcess::Assign { index, var: Arc::from(var.as_str()), role, expr, span: sp })
                }
                Tok::Colon => {
                    let (op, _) = self.cur.ident("operation name")?;
                    self.cur.bump();
                    let sender = self.role()?;
                    self.cur.expect(&Tok::LParen, "`(`")?;
                    let expr = self.cur.expr()?;
                    self.cur.expect(&Tok::RParen, "`)`")?;
                    self.cur.expect(&Tok::Arrow, "`->`")?;
                    let receiver = self.role()?;
                    self.cur.expect(&Tok::LParen, "`(`")?;
                    let (var, _) = self.variable()?;
                    self.cur.expect(&Tok::RParen, "`)`")?;
                    if sender == receiver {
                        return Err(Diagnostic::error(sp, "interaction sender and receiver must differ"));
                    }
                    Ok(DiocProcess::Interaction {
                        index,
                        op: Operation::public(&op),
                        sender,
                        expr,
                        receiver,
                        var: Arc::from(var.as_str()),
                        span: sp,
                    })
                }
                _ => {
                    self.cur.bump();
                    Err(self.cur.unexpected("`@` (assignment) or `:` (interaction)"))
                }
            },
            _ => Err(self.cur.unexpected("statement")),
        }
    }
}

/// Parse a choreography program.
pub fn parse_dioc(src: &SourceFile) -> Result<DiocProcess, Vec<Diagnostic>> {
    parse_dioc_str(&src.text)
}

/// Parse a choreography from text.
pub fn parse_dioc_str(text: &str) -> Result<DiocProcess, Vec<Diagnostic>> {
    let cur = Cursor::new(text).map_err(|d| vec![d])?;
    let mut p = DiocParser { cur };
    if p.cur.at(&Tok::Eof) {
        return Err(vec![Diagnostic::error(p.cur.span().max_len(1), "empty program")]);
    }
    let prog = p.program().map_err(|d| vec![d])?;
    if !p.cur.at(&Tok::Eof) {
        return Err(vec![p.cur.unexpected("`;` or end of input")]);
    }
    Ok(prog)
}

/// Parse an update file; the update is named after the file stem.
pub fn parse_update(src: &SourceFile) -> Result<(String, DiocProcess), Vec<Diagnostic>> {
    let body = parse_dioc(src)?;
    if !body.is_initial() {
        return Err(vec![Diagnostic::error(Span::new(1, 1, 1), "updates must be initial (no `0`)")
            .with_code("UPDATE-INITIAL")]);
    }
    Ok((src.stem(), body))
}

impl Span {
    fn max_len(mut self, n: u32) -> Span {
        self.len = self.len.max(n);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{annotate, DiocProcess as D};

    const FIDELITY_CARD: &str = "cardReq : seller( null ) → buyer( _ );
card_id@buyer = getInput();
cardRes : buyer( card_id ) → seller( buyer_id );
if isValid( buyer_id )@seller {
 s_price@seller = getPrice( s_prod ) * 0.9
} else { s_price@seller = getPrice( s_prod ) };
offer : seller( s_price ) → buyer( b_price )";

    #[test]
    fn parses_interaction() {
        let p = parse_dioc_str("priceReq : buyer( b_prod ) -> seller( s_prod )").unwrap();
        assert_eq!(p, D::interaction("priceReq", "buyer", Expr::var("b_prod"), "seller", "s_prod"));
    }

    #[test]
    fn parses_assignment() {
        let p = parse_dioc_str("price_ok@buyer = false").unwrap();
        assert_eq!(p, D::assign("price_ok", "buyer", Expr::bool(false)));
    }

    #[test]
    fn empty_file_is_a_parse_error_at_origin() {
        let d = parse_dioc_str("").unwrap_err();
        assert_eq!(d[0].code, "PARSE");
        assert_eq!((d[0].span.line, d[0].span.col), (1, 1));
        let d = parse_dioc_str("// only a comment\n").unwrap_err();
        assert_eq!(d[0].code, "PARSE");
    }

    #[test]
    fn parses_fidelity_card_update() {
        let (name, body) = parse_update(&SourceFile::new("updates/fidelity_card.upd", FIDELITY_CARD)).unwrap();
        assert_eq!(name, "fidelity_card");
        let mut items = Vec::new();
        let mut cur = &body;
        while let D::Seq { left, right, .. } = cur {
            items.push(left.as_ref().clone());
            cur = right;
        }
        items.push(cur.clone());
        assert_eq!(items.len(), 5);
        assert_eq!(items[0], D::interaction("cardReq", "seller", Expr::Lit(Value::Null), "buyer", "_"));
        assert_eq!(annotate(&body).indexes().len(), 7);
        match &items[3] {
            D::If { guard, role, then, .. } => {
                assert_eq!(guard, &Expr::call("isValid", vec![Expr::var("buyer_id")]));
                assert_eq!(role.as_str(), "seller");
                let expect = D::assign(
                    "s_price",
                    "seller",
                    Expr::binary(BinOp::Mul, Expr::call("getPrice", vec![Expr::var("s_prod")]), Expr::Lit(Value::float(0.9))),
                );
                assert_eq!(then.as_ref(), &expect);
            }
            other => panic!("expected if, got {other:?}"),
        }
    }

    #[test]
    fn update_rejects_zero() {
        let d = parse_update(&SourceFile::new("u.upd", "x@a = 1; 0")).unwrap_err();
        assert!(d[0].message.contains("updates must be initial"));
        let (_, b) = parse_update(&SourceFile::new("u.upd", "x@a = 1")).unwrap();
        assert!(matches!(b, D::Assign { .. }));
    }

    #[test]
    fn precedence_not_binds_tightest() {
        let p = parse_dioc_str("while ( !price_ok and continue )@buyer { 1 }").unwrap();
        let D::While { guard, .. } = p else { panic!() };
        assert_eq!(guard, Expr::binary(BinOp::And, Expr::not(Expr::var("price_ok")), Expr::var("continue")));
        let p = parse_dioc_str("x@a = 1 + 2 * 3 < 4 or b").unwrap();
        let D::Assign { expr, .. } = p else { panic!() };
        let sum = Expr::binary(BinOp::Add, Expr::int(1), Expr::binary(BinOp::Mul, Expr::int(2), Expr::int(3)));
        assert_eq!(expr, Expr::binary(BinOp::Or, Expr::binary(BinOp::Lt, sum, Expr::int(4)), Expr::var("b")));
    }

    #[test]
    fn sequencing_binds_looser_than_parallel() {
        let p = parse_dioc_str("{ a : r(1) -> s(x) | b : s(2) -> r(y) }; c : r(3) -> s(z)").unwrap();
        assert!(matches!(&p, D::Seq { left, .. } if matches!(left.as_ref(), D::Par { .. })));
        let q = parse_dioc_str("if (true)@r { a : r(1) -> s(x) | b : r(2) -> s(y) }").unwrap();
        let D::If { then, .. } = q else { panic!() };
        assert!(matches!(then.as_ref(), D::Par { .. }));
    }

    #[test]
    fn rejects_reserved_names_and_self_interaction() {
        assert!(parse_dioc_str("o*_3 : a(1) -> b(x)").is_err());
        assert!(parse_dioc_str("o : a(1) -> a(x)").is_err());
        assert!(parse_dioc_str("x_3@a = 1").is_err());
        assert!(parse_dioc_str("if@a = 1").is_err());
    }

    #[test]
    fn diagnostics_point_into_source() {
        let src = "x@a = 1;\ny@b = ;";
        let d = parse_dioc_str(src).unwrap_err();
        assert_eq!((d[0].span.line, d[0].span.col), (2, 7));
    }

    #[test]
    fn explicit_indexes_are_kept() {
        let p = parse_dioc_str("1 : x@a = 1; 7 : scope @a { 3 : y@a = 2 }").unwrap();
        assert_eq!(p.indexes(), vec![1, 7, 3]);
    }

    #[test]
    fn negative_literals_fold() {
        let p = parse_dioc_str("x@a = -3 - -(4)").unwrap();
        let D::Assign { expr, .. } = p else { panic!() };
        assert_eq!(
            expr,
            Expr::binary(BinOp::Sub, Expr::int(-3), Expr::Unary(UnOp::Neg, Box::new(Expr::int(4))))
        );
    }
}

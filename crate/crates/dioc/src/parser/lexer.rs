use super::Diagnostic;
use crate::ast::Span;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i128),
    Float(f64),
    Str(String),
    /// `o*_n`
    AuxOp(u32),
    Semi,
    Bar,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Colon,
    At,
    Dot,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    PlusPlus,
    Minus,
    Star,
    Slash,
    Bang,
    AndAnd,
    OrOr,
    Arrow,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(i) => format!("number `{i}`"),
            Tok::Float(x) => format!("number `{x}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::AuxOp(n) => format!("`o*_{n}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::Semi => ";",
            Tok::Bar => "|",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::At => "@",
            Tok::Dot => ".",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::PlusPlus => "++",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Bang => "!",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Arrow => "->",
            _ => "?",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! advance {
        ($n:expr) => {{
            for _ in 0..$n {
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let start = (line, col);
        let peek = |k: usize| chars.get(i + k).copied();
        if c.is_whitespace() {
            advance!(1);
            continue;
        }
        if c == '/' && peek(1) == Some('/') {
            while i < chars.len() && chars[i] != '\n' {
                advance!(1);
            }
            continue;
        }
        let mut push = |tok: Tok, len: u32| {
            out.push(Token { tok, span: Span::new(start.0, start.1, len) });
        };
        if c == 'o' && peek(1) == Some('*') && peek(2) == Some('_') {
            let mut j = i + 3;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let trailing = chars.get(j).copied().map(is_ident_char).unwrap_or(false);
            if j > i + 3 && !trailing {
                let digits: String = chars[i + 3..j].iter().collect();
                let n: u32 = digits.parse().map_err(|_| {
                    Diagnostic::error(Span::new(start.0, start.1, (j - i) as u32), "auxiliary index out of range")
                })?;
                let len = (j - i) as u32;
                push(Tok::AuxOp(n), len);
                advance!(j - i);
                continue;
            }
        }
        if is_ident_start(c) {
            let mut j = i;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            let s: String = chars[i..j].iter().collect();
            push(Tok::Ident(s), (j - i) as u32);
            advance!(j - i);
            continue;
        }
        if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let is_float = chars.get(j) == Some(&'.') && chars.get(j + 1).map(|d| d.is_ascii_digit()).unwrap_or(false);
            if is_float {
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                let x: f64 = s.parse().map_err(|_| {
                    Diagnostic::error(Span::new(start.0, start.1, (j - i) as u32), "malformed number")
                })?;
                push(Tok::Float(x), (j - i) as u32);
            } else {
                let s: String = chars[i..j].iter().collect();
                let n: i128 = s.parse().map_err(|_| {
                    Diagnostic::error(Span::new(start.0, start.1, (j - i) as u32), "integer literal out of range")
                })?;
                if n > i64::MAX as i128 + 1 {
                    return Err(Diagnostic::error(
                        Span::new(start.0, start.1, (j - i) as u32),
                        "integer literal out of range",
                    ));
                }
                push(Tok::Int(n), (j - i) as u32);
            }
            advance!(j - i);
            continue;
        }
        if c == '"' {
            let mut j = i + 1;
            let mut s = String::new();
            loop {
                match chars.get(j) {
                    None | Some('\n') => {
                        return Err(Diagnostic::error(Span::new(start.0, start.1, 1), "unterminated string literal"));
                    }
                    Some('"') => break,
                    Some('\\') => {
                        let e = chars.get(j + 1).copied();
                        match e {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            _ => {
                                return Err(Diagnostic::error(
                                    Span::new(start.0, start.1 + (j - i) as u32, 2),
                                    "unknown escape sequence",
                                ))
                            }
                        }
                        j += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        j += 1;
                    }
                }
            }
            let len = (j + 1 - i) as u32;
            push(Tok::Str(s), len);
            advance!(j + 1 - i);
            continue;
        }
        if c == '→' {
            push(Tok::Arrow, 1);
            advance!(1);
            continue;
        }
        let two: Option<Tok> = match (c, peek(1)) {
            ('-', Some('>')) => Some(Tok::Arrow),
            ('=', Some('=')) => Some(Tok::EqEq),
            ('!', Some('=')) => Some(Tok::NotEq),
            ('<', Some('=')) => Some(Tok::Le),
            ('>', Some('=')) => Some(Tok::Ge),
            ('+', Some('+')) => Some(Tok::PlusPlus),
            ('&', Some('&')) => Some(Tok::AndAnd),
            ('|', Some('|')) => Some(Tok::OrOr),
            _ => None,
        };
        if let Some(t) = two {
            push(t, 2);
            advance!(2);
            continue;
        }
        let one = match c {
            ';' => Tok::Semi,
            '|' => Tok::Bar,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            '@' => Tok::At,
            '.' => Tok::Dot,
            '=' => Tok::Assign,
            '<' => Tok::Lt,
            '>' => Tok::Gt,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '!' => Tok::Bang,
            other => {
                return Err(Diagnostic::error(
                    Span::new(start.0, start.1, 1),
                    &format!("unexpected character `{other}`"),
                ))
            }
        };
        push(one, 1);
        advance!(1);
    }
    out.push(Token { tok: Tok::Eof, span: Span::new(line, col, 0) });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn lexes_interaction_with_unicode_arrow() {
        assert_eq!(
            toks("o : a(1) → b(x)"),
            vec![
                Tok::Ident("o".into()),
                Tok::Colon,
                Tok::Ident("a".into()),
                Tok::LParen,
                Tok::Int(1),
                Tok::RParen,
                Tok::Arrow,
                Tok::Ident("b".into()),
                Tok::LParen,
                Tok::Ident("x".into()),
                Tok::RParen,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn lexes_aux_ops_prefixes_and_floats() {
        assert_eq!(toks("o*_12"), vec![Tok::AuxOp(12), Tok::Eof]);
        assert_eq!(
            toks("6.offer"),
            vec![Tok::Int(6), Tok::Dot, Tok::Ident("offer".into()), Tok::Eof]
        );
        assert_eq!(toks("0.9"), vec![Tok::Float(0.9), Tok::Eof]);
        assert_eq!(toks("o*_x"), vec![Tok::Ident("o".into()), Tok::Star, Tok::Ident("_x".into()), Tok::Eof]);
    }

    #[test]
    fn comments_and_spans() {
        let t = lex("// hi\n  x").unwrap();
        assert_eq!(t[0].span.line, 2);
        assert_eq!(t[0].span.col, 3);
    }

    #[test]
    fn errors_carry_spans() {
        let e = lex("a\n  #").unwrap_err();
        assert_eq!((e.span.line, e.span.col), (2, 3));
        assert!(lex("\"abc").is_err());
    }
}

//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (("+"|"-") term)* ;
//! term   := factor (("*"|"/") factor)* ;
//! factor := ("-"|"+") factor | atom ("^" integer)? ;
//! atom   := number | symbol | func "(" expr ")" | "(" expr ")" ;
//! ```
//!
//! The result is the raw syntax tree: subtraction becomes a `Neg` term of a
//! `Sum`, division becomes a `Pow(_, -k)` factor of a `Product`.

use std::sync::Arc;

use thiserror::Error;

use super::{Chart, Expr, Func, Node, Number};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical(char),
    Syntax(String),
    UnknownSymbol(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{} at byte {offset}", describe(.kind))]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::Lexical(c) => format!("unexpected character {c:?}"),
        ParseErrorKind::Syntax(msg) => format!("syntax error: {msg}"),
        ParseErrorKind::UnknownSymbol(s) => format!("unknown symbol `{s}`"),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Number(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut chars = src.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            chars.next();
            out.push((tok, pos));
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let mut end = pos;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            // Optional exponent, only when followed by digits.
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut probe = end + 1;
                if probe < bytes.len() && (bytes[probe] == b'+' || bytes[probe] == b'-') {
                    probe += 1;
                }
                if probe < bytes.len() && bytes[probe].is_ascii_digit() {
                    end = probe;
                    while end < bytes.len() && bytes[end].is_ascii_digit() {
                        end += 1;
                    }
                }
            }
            let text = &src[pos..end];
            if text.matches('.').count() > 1 || text == "." {
                return Err(ParseError {
                    kind: ParseErrorKind::Lexical('.'),
                    offset: pos + text.rfind('.').unwrap_or(0),
                });
            }
            while chars.peek().is_some_and(|&(p, _)| p < end) {
                chars.next();
            }
            out.push((Tok::Number(text.to_string()), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut end = pos;
            while let Some(&(p, ch)) = chars.peek() {
                if ch.is_alphanumeric() || ch == '_' || ch == '\'' {
                    end = p + ch.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            out.push((Tok::Ident(src[pos..end].to_string()), pos));
            continue;
        }
        return Err(ParseError {
            kind: ParseErrorKind::Lexical(c),
            offset: pos,
        });
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    chart: &'a Chart,
    params: Vec<&'a str>,
}

/// A factor as parsed, remembering whether it was written `atom ^ k` so
/// that `a / b^k` becomes `Pow(b, -k)` while `a / (b^k)` stays grouped.
struct Factor {
    expr: Expr,
    bare_power: bool,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            kind: ParseErrorKind::Syntax(msg.into()),
            offset: self.offset(),
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    let t = self.term()?;
                    terms.push(Expr::raw(Node::Neg(t)));
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::raw(Node::Sum(terms))
        })
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.factor()?.expr];
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    factors.push(self.factor()?.expr);
                }
                Tok::Slash => {
                    self.bump();
                    let f = self.factor()?;
                    let inverted = match (f.bare_power, f.expr.node()) {
                        (true, Node::Pow(base, k)) if k.checked_neg().is_some() => {
                            Expr::raw(Node::Pow(base.clone(), -k))
                        }
                        _ => Expr::raw(Node::Pow(f.expr.clone(), -1)),
                    };
                    factors.push(inverted);
                }
                _ => break,
            }
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Expr::raw(Node::Product(factors))
        })
    }

    fn factor(&mut self) -> Result<Factor, ParseError> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                let inner = self.factor()?;
                Ok(Factor {
                    expr: Expr::raw(Node::Neg(inner.expr)),
                    bare_power: false,
                })
            }
            Tok::Plus => {
                self.bump();
                self.factor()
            }
            _ => {
                let base = self.atom()?;
                if *self.peek() != Tok::Caret {
                    return Ok(Factor {
                        expr: base,
                        bare_power: false,
                    });
                }
                self.bump();
                let exp = self.integer()?;
                Ok(Factor {
                    expr: Expr::raw(Node::Pow(base, exp)),
                    bare_power: true,
                })
            }
        }
    }

    fn integer(&mut self) -> Result<i32, ParseError> {
        let mut negative = false;
        loop {
            match self.peek() {
                Tok::Minus => {
                    negative = !negative;
                    self.bump();
                }
                Tok::Plus => {
                    self.bump();
                }
                _ => break,
            }
        }
        let offset = self.offset();
        match self.bump().0 {
            Tok::Number(text) if text.bytes().all(|b| b.is_ascii_digit()) => {
                let magnitude: i64 = text.parse().map_err(|_| ParseError {
                    kind: ParseErrorKind::Syntax("exponent out of range".into()),
                    offset,
                })?;
                let value = if negative { -magnitude } else { magnitude };
                i32::try_from(value).map_err(|_| ParseError {
                    kind: ParseErrorKind::Syntax("exponent out of range".into()),
                    offset,
                })
            }
            _ => Err(ParseError {
                kind: ParseErrorKind::Syntax("exponent must be an integer literal".into()),
                offset,
            }),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.bump().0 {
            Tok::Number(text) => match Number::from_literal(&text) {
                Some(n) => Ok(Expr::num(n)),
                None => Err(ParseError {
                    kind: ParseErrorKind::Syntax(format!("malformed number `{text}`")),
                    offset,
                }),
            },
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return self.syntax(format!("expected `(` after `{name}`"));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::raw(Node::Func(f, arg)));
                }
                if *self.peek() == Tok::LParen {
                    return Err(ParseError {
                        kind: ParseErrorKind::UnknownSymbol(name),
                        offset,
                    });
                }
                if let Some(i) = self.chart.index_of(&name) {
                    return Ok(Expr::coord(i));
                }
                if self.params.contains(&name.as_str()) {
                    return Ok(Expr::raw(Node::Param(Arc::from(name.as_str()))));
                }
                Err(ParseError {
                    kind: ParseErrorKind::UnknownSymbol(name),
                    offset,
                })
            }
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::End => Err(ParseError {
                kind: ParseErrorKind::Syntax("unexpected end of input".into()),
                offset,
            }),
            other => Err(ParseError {
                kind: ParseErrorKind::Syntax(format!("unexpected token {other:?}")),
                offset,
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            self.syntax("expected `)`")
        }
    }
}

/// Parses `source` over `chart` and the declared parameter names.
pub fn parse<S: AsRef<str>>(source: &str, chart: &Chart, params: &[S]) -> Result<Expr, ParseError> {
    let toks = lex(source)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        chart,
        params: params.iter().map(AsRef::as_ref).collect(),
    };
    let e = parser.expr()?;
    if *parser.peek() != Tok::End {
        return parser.syntax("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(src: &str) -> Result<Expr, ParseError> {
        parse(src, &Chart::standard(), &["c", "m0"])
    }

    #[test]
    fn top_level_sum() {
        let e = p("2*x0*x1 + sin(x2)").unwrap();
        match e.node() {
            Node::Sum(items) => {
                assert_eq!(items.len(), 2);
                assert!(matches!(items[0].node(), Node::Product(f) if f.len() == 3));
                assert!(matches!(items[1].node(), Node::Func(Func::Sin, _)));
            }
            other => panic!("expected sum, got {other:?}"),
        }
    }

    #[test]
    fn undeclared_symbol_reports_offset() {
        let err = p("x1 + x4").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownSymbol("x4".into()));
        assert_eq!(err.offset, 5);
        let err = p("foo(x1)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownSymbol("foo".into()));
    }

    #[test]
    fn lexical_and_syntax_errors() {
        let err = p("x1 $ 2").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Lexical('$'));
        assert_eq!(err.offset, 3);
        assert!(matches!(p("x1 +").unwrap_err().kind, ParseErrorKind::Syntax(_)));
        assert!(matches!(p("(x1").unwrap_err().kind, ParseErrorKind::Syntax(_)));
        assert!(matches!(p("x1^x2").unwrap_err().kind, ParseErrorKind::Syntax(_)));
        assert!(matches!(p("x1^0.5").unwrap_err().kind, ParseErrorKind::Syntax(_)));
        assert!(matches!(p("sin x1").unwrap_err().kind, ParseErrorKind::Syntax(_)));
        assert!(matches!(p("x1 x2").unwrap_err().kind, ParseErrorKind::Syntax(_)));
    }

    #[test]
    fn precedence() {
        // unary minus binds looser than ^
        let e = p("-x1^2").unwrap();
        assert!(matches!(e.node(), Node::Neg(inner) if matches!(inner.node(), Node::Pow(_, 2))));
        let e = p("x1^-2").unwrap();
        assert!(matches!(e.node(), Node::Pow(_, -2)));
        let e = p("x1/x2^3").unwrap();
        assert!(matches!(e.node(), Node::Product(f) if matches!(f[1].node(), Node::Pow(_, -3))));
        let e = p("x1/(x2^3)").unwrap();
        assert!(matches!(e.node(), Node::Product(f) if matches!(f[1].node(), Node::Pow(_, -1))));
    }

    #[test]
    fn parameters_and_numbers() {
        let e = p("c*0.5 + m0").unwrap();
        assert_eq!(e.param_names().len(), 2);
        let e = p("1e-3").unwrap();
        assert_eq!(e.as_number(), Some(Number::ratio(1, 1000)));
    }
}

use std::fmt::{self, Write};

use super::{Chart, Expr, Node, Number};

/// Precedence context of a subexpression.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    /// Operand of `+`/`-`.
    Sum,
    /// Operand of `*`/`/`.
    Term,
    /// Operand of unary minus, or `^` base.
    Factor,
}

/// Pretty-printer producing text in the input grammar.
///
/// For raw parse trees, `parse(print(parse(s)))` reproduces `parse(s)`
/// exactly. Simplified trees print to an equivalent expression.
pub struct Printer<'a> {
    expr: &'a Expr,
    chart: &'a Chart,
}

impl<'a> Printer<'a> {
    pub fn new(expr: &'a Expr, chart: &'a Chart) -> Self {
        Printer { expr, chart }
    }

    fn write(&self, e: &Expr, level: Level, out: &mut String) {
        match e.node() {
            Node::Num(n) => self.write_number(*n, level, out),
            Node::Coord(i) => out.push_str(self.chart.name(*i as usize)),
            Node::Param(p) => out.push_str(p),
            Node::Func(f, a) => {
                out.push_str(f.name());
                out.push('(');
                self.write(a, Level::Sum, out);
                out.push(')');
            }
            Node::Pow(b, k) => self.write_pow(b, *k, out),
            // Unary minus binds tighter than `*` and `/` in the grammar.
            Node::Neg(inner) => {
                out.push('-');
                self.write(inner, Level::Factor, out);
            }
            Node::Sum(items) => {
                let wrap = level > Level::Sum;
                if wrap {
                    out.push('(');
                }
                for (i, t) in items.iter().enumerate() {
                    if i == 0 {
                        self.write_term(t, out);
                        continue;
                    }
                    match self.negated(t) {
                        Some(pos) => {
                            out.push_str(" - ");
                            self.write(&pos, Level::Term, out);
                        }
                        None => {
                            out.push_str(" + ");
                            self.write_term(t, out);
                        }
                    }
                }
                if wrap {
                    out.push(')');
                }
            }
            Node::Product(items) => {
                let wrap = level > Level::Term;
                if wrap {
                    out.push('(');
                }
                self.write_product(items, out);
                if wrap {
                    out.push(')');
                }
            }
        }
    }

    /// First term of a sum, or any positive term.
    fn write_term(&self, t: &Expr, out: &mut String) {
        if let Node::Sum(_) = t.node() {
            out.push('(');
            self.write(t, Level::Sum, out);
            out.push(')');
        } else {
            self.write(t, Level::Term, out);
        }
    }

    /// If `t` prints naturally as `- something`, returns that something.
    fn negated(&self, t: &Expr) -> Option<Expr> {
        match t.node() {
            Node::Neg(inner) => Some(inner.clone()),
            // Simplified forms: negative coefficient.
            Node::Num(n) if n.is_negative() => Some(Expr::num(-*n)),
            Node::Product(items) => {
                let c = items.first()?.as_number()?;
                if !c.is_negative() {
                    return None;
                }
                let c = -c;
                let mut rest = items.clone();
                if c.is_one() {
                    rest.remove(0);
                } else {
                    rest[0] = Expr::num(c);
                }
                Some(if rest.len() == 1 {
                    rest.pop().unwrap()
                } else {
                    Expr::raw(Node::Product(rest))
                })
            }
            _ => None,
        }
    }

    fn write_product(&self, items: &[Expr], out: &mut String) {
        // Simplified products carry a leading coefficient; a negative one
        // prints as a sign and a non-decimal rational p/q as `p*.../q`.
        let mut denominator: Option<i64> = None;
        let mut start = 0;
        if let (Some(c), true) = (items.first().and_then(Expr::as_number), items.len() > 1) {
            let mut c = c;
            if c.is_negative() {
                out.push('-');
                c = -c;
                if c.is_one() {
                    start = 1;
                }
            }
            if start == 0 {
                match c {
                    Number::Rational(r) if decimal_digits(*r.denom()).is_none() => {
                        if *r.numer() != 1 {
                            let _ = write!(out, "{}*", r.numer());
                        }
                        denominator = Some(*r.denom());
                    }
                    _ => {
                        self.write_number(c, Level::Factor, out);
                        out.push('*');
                    }
                }
                start = 1;
            }
        }
        for (i, f) in items[start..].iter().enumerate() {
            let first = i == 0;
            match f.node() {
                Node::Pow(b, k) if *k < 0 && !first => {
                    out.push('/');
                    if *k == -1 {
                        // Keep `a / (b^j)` distinct from `a / b^j`.
                        if matches!(b.node(), Node::Pow(..)) {
                            out.push('(');
                            self.write(b, Level::Sum, out);
                            out.push(')');
                        } else {
                            self.write(b, Level::Factor, out);
                        }
                    } else {
                        self.write_pow(b, -k, out);
                    }
                }
                _ => {
                    if !first {
                        out.push('*');
                    }
                    self.write(f, Level::Factor, out);
                }
            }
        }
        if let Some(d) = denominator {
            let _ = write!(out, "/{d}");
        }
    }

    fn write_pow(&self, base: &Expr, k: i32, out: &mut String) {
        let atomic = match base.node() {
            Node::Coord(_) | Node::Param(_) | Node::Func(..) => true,
            Node::Num(n) => !n.is_negative() && plain_number(*n),
            _ => false,
        };
        if atomic {
            self.write(base, Level::Factor, out);
        } else {
            out.push('(');
            self.write(base, Level::Sum, out);
            out.push(')');
        }
        let _ = write!(out, "^{k}");
    }

    fn write_number(&self, n: Number, level: Level, out: &mut String) {
        let text = match n {
            Number::Rational(r) if r.is_integer() => r.numer().to_string(),
            Number::Rational(r) => match decimal_digits(*r.denom()) {
                Some(digits) => decimal_text(*r.numer(), *r.denom(), digits),
                None => format!("{}/{}", r.numer(), r.denom()),
            },
            // Non-finite values are not representable in the grammar; they
            // print for diagnostics only.
            Number::Float(x) => format!("{x:?}"),
        };
        let wrap = (n.is_negative() || !plain_number(n)) && level >= Level::Term;
        if wrap {
            out.push('(');
        }
        out.push_str(&text);
        if wrap {
            out.push(')');
        }
    }
}

/// Whether a number prints as a single literal token.
fn plain_number(n: Number) -> bool {
    match n {
        Number::Rational(r) => decimal_digits(*r.denom()).is_some(),
        Number::Float(x) => x.is_finite(),
    }
}

/// Number of fractional digits needed when `denom` divides a power of ten.
fn decimal_digits(denom: i64) -> Option<u32> {
    let mut d = denom;
    let (mut twos, mut fives) = (0u32, 0u32);
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    let digits = twos.max(fives);
    (d == 1 && digits <= 18).then_some(digits)
}

fn decimal_text(numer: i64, denom: i64, digits: u32) -> String {
    let scale = 10i128.pow(digits);
    let scaled = numer as i128 * (scale / denom as i128);
    let sign = if scaled < 0 { "-" } else { "" };
    let magnitude = scaled.unsigned_abs();
    let int_part = magnitude / scale as u128;
    let frac = magnitude % scale as u128;
    let frac = format!("{frac:0width$}", width = digits as usize);
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac}")
    }
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        self.write(self.expr, Level::Sum, &mut out);
        f.write_str(&out)
    }
}

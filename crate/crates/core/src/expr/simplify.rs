//! Light simplifier: constant folding, 0/1 elimination, flattening, and
//! collection of like terms and like factors by structural key.
//!
//! The constructors assume their inputs are already in simplified form; raw
//! parse trees go through [`Expr::simplify`] first.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::{Expr, Func, Node, Number};

/// Splits a simplified term into numeric coefficient and the remaining
/// factor list.
fn split_coefficient(term: &Expr) -> (Number, Vec<Expr>) {
    match term.node() {
        Node::Num(n) => (*n, Vec::new()),
        Node::Product(items) => match items.first().and_then(Expr::as_number) {
            Some(c) => (c, items[1..].to_vec()),
            None => (Number::ONE, items.clone()),
        },
        _ => (Number::ONE, vec![term.clone()]),
    }
}

fn rebuild_product(coefficient: Number, mut factors: Vec<Expr>) -> Expr {
    if coefficient.is_zero() {
        return Expr::zero();
    }
    if factors.is_empty() {
        return Expr::num(coefficient);
    }
    if coefficient.is_one() && factors.len() == 1 {
        return factors.pop().unwrap();
    }
    if !coefficient.is_one() {
        factors.insert(0, Expr::num(coefficient));
    }
    Expr::raw(Node::Product(factors))
}

impl Expr {
    /// Simplified n-ary sum.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut constant = Number::ZERO;
        let mut keys: Vec<Expr> = Vec::new();
        let mut coefficients: Vec<Number> = Vec::new();
        let mut index: HashMap<Expr, usize> = HashMap::new();

        let mut push = |term: &Expr| {
            let (c, factors) = split_coefficient(term);
            if factors.is_empty() {
                constant = constant + c;
                return;
            }
            let key = if factors.len() == 1 {
                factors[0].clone()
            } else if matches!(term.node(), Node::Product(items) if items.len() == factors.len()) {
                term.clone()
            } else {
                Expr::raw(Node::Product(factors))
            };
            match index.get(&key) {
                Some(&i) => coefficients[i] = coefficients[i] + c,
                None => {
                    index.insert(key.clone(), keys.len());
                    keys.push(key);
                    coefficients.push(c);
                }
            }
        };

        for term in &terms {
            match term.node() {
                Node::Sum(inner) => inner.iter().for_each(&mut push),
                _ => push(term),
            }
        }

        let mut collected: Vec<(Expr, Number)> = keys
            .into_iter()
            .zip(coefficients)
            .filter(|(_, c)| !c.is_zero())
            .collect();
        collected.sort_by(|a, b| a.0.structural_cmp(&b.0));

        let mut out: Vec<Expr> = collected
            .into_iter()
            .map(|(key, c)| {
                let factors = match key.node() {
                    Node::Product(items) => items.clone(),
                    _ => vec![key],
                };
                rebuild_product(c, factors)
            })
            .collect();
        if !constant.is_zero() {
            out.push(Expr::num(constant));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::raw(Node::Sum(out)),
        }
    }

    /// Simplified n-ary product.
    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut coefficient = Number::ONE;
        let mut bases: Vec<Expr> = Vec::new();
        let mut exponents: Vec<i32> = Vec::new();
        let mut index: HashMap<Expr, usize> = HashMap::new();
        // Unfoldable numeric powers (0^-k) are kept as opaque factors.
        let mut opaque: Vec<Expr> = Vec::new();

        let mut push = |factor: &Expr, coefficient: &mut Number| {
            let (base, exp) = match factor.node() {
                Node::Num(n) => {
                    *coefficient = *coefficient * *n;
                    return;
                }
                Node::Pow(b, _) if b.as_number().is_some() => {
                    opaque.push(factor.clone());
                    return;
                }
                Node::Pow(b, k) => (b.clone(), *k),
                _ => (factor.clone(), 1),
            };
            match index.get(&base) {
                Some(&i) => exponents[i] = exponents[i].saturating_add(exp),
                None => {
                    index.insert(base.clone(), bases.len());
                    bases.push(base);
                    exponents.push(exp);
                }
            }
        };

        for factor in &factors {
            match factor.node() {
                Node::Product(inner) => {
                    for f in inner {
                        push(f, &mut coefficient);
                    }
                }
                _ => push(factor, &mut coefficient),
            }
        }
        if coefficient.is_zero() {
            return Expr::zero();
        }

        let mut out: Vec<Expr> = Vec::with_capacity(bases.len() + opaque.len());
        for (base, exp) in bases.into_iter().zip(exponents) {
            match exp {
                0 => {}
                1 => out.push(base),
                k => out.push(Expr::raw(Node::Pow(base, k))),
            }
        }
        out.extend(opaque);
        out.sort_by(|a, b| a.structural_cmp(b));
        rebuild_product(coefficient, out)
    }

    /// Simplified integer power.
    pub fn powi(&self, exp: i32) -> Expr {
        match exp {
            0 => return Expr::one(),
            1 => return self.clone(),
            _ => {}
        }
        match self.node() {
            Node::Num(n) => match n.powi(exp) {
                Some(v) => Expr::num(v),
                None => Expr::raw(Node::Pow(self.clone(), exp)),
            },
            Node::Pow(base, k) => match k.checked_mul(exp) {
                Some(total) => base.powi(total),
                None => Expr::raw(Node::Pow(self.clone(), exp)),
            },
            Node::Product(items) => Expr::product(items.iter().map(|f| f.powi(exp)).collect()),
            _ => Expr::raw(Node::Pow(self.clone(), exp)),
        }
    }

    /// Function application with exact folding at the trivial points.
    pub fn func(f: Func, arg: Expr) -> Expr {
        if arg.is_zero() {
            match f {
                Func::Sin | Func::Tan | Func::Sinh | Func::Sqrt => return Expr::zero(),
                Func::Cos | Func::Cosh | Func::Exp => return Expr::one(),
                Func::Log => {}
            }
        }
        if arg.is_one() {
            match f {
                Func::Log => return Expr::zero(),
                Func::Sqrt => return Expr::one(),
                _ => {}
            }
        }
        Expr::raw(Node::Func(f, arg))
    }

    pub fn sin(self) -> Expr {
        Expr::func(Func::Sin, self)
    }
    pub fn cos(self) -> Expr {
        Expr::func(Func::Cos, self)
    }
    pub fn sinh(self) -> Expr {
        Expr::func(Func::Sinh, self)
    }
    pub fn cosh(self) -> Expr {
        Expr::func(Func::Cosh, self)
    }
    pub fn exp(self) -> Expr {
        Expr::func(Func::Exp, self)
    }
    pub fn ln(self) -> Expr {
        Expr::func(Func::Log, self)
    }
    pub fn sqrt(self) -> Expr {
        Expr::func(Func::Sqrt, self)
    }

    pub fn scale(&self, c: Number) -> Expr {
        Expr::product(vec![Expr::num(c), self.clone()])
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::product(vec![Expr::int(-1), self])
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, |$a:ident, $b:ident| $body:expr) => {
        impl $trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let ($a, $b) = (self, rhs);
                $body
            }
        }
        impl $trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let ($a, $b) = (self, rhs.clone());
                $body
            }
        }
        impl $trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let ($a, $b) = (self.clone(), rhs);
                $body
            }
        }
        impl $trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let ($a, $b) = (self.clone(), rhs.clone());
                $body
            }
        }
    };
}

binary_op!(Add, add, |a, b| Expr::sum(vec![a, b]));
binary_op!(Sub, sub, |a, b| Expr::sum(vec![a, -b]));
binary_op!(Mul, mul, |a, b| Expr::product(vec![a, b]));
binary_op!(Div, div, |a, b| Expr::product(vec![a, b.powi(-1)]));

//! Numeric evaluation through a flattened, hash-consed instruction tape.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use thiserror::Error;

use super::{Expr, Func, Node};

/// Coordinates and parameter values at which expressions are evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalPoint {
    pub coords: [f64; 4],
    pub params: BTreeMap<String, f64>,
}

impl EvalPoint {
    pub fn new(coords: [f64; 4], params: BTreeMap<String, f64>) -> Self {
        EvalPoint { coords, params }
    }

    pub fn origin() -> Self {
        EvalPoint {
            coords: [0.0; 4],
            params: BTreeMap::new(),
        }
    }

    pub fn at(coords: [f64; 4]) -> Self {
        EvalPoint {
            coords,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("logarithm of non-positive value in `{0}`")]
    LogDomain(String),
    #[error("square root of negative value in `{0}`")]
    SqrtDomain(String),
    #[error("non-finite value in `{0}`")]
    NonFinite(String),
    #[error("parameter `{0}` is not bound")]
    UnboundParameter(String),
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Const(f64),
    Coord(u8),
    Param(u32),
    Neg(u32),
    Sum(u32, u32),
    Product(u32, u32),
    Pow(u32, i32),
    Func(Func, u32),
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Key {
    Const(u64),
    Coord(u8),
    Param(Arc<str>),
    Neg(u32),
    Sum(Vec<u32>),
    Product(Vec<u32>),
    Pow(u32, i32),
    Func(Func, u32),
}

/// A batch of expressions compiled to a straight-line program.
///
/// Structurally equal subexpressions, within one expression or across the
/// batch, are evaluated once.
#[derive(Clone)]
pub struct Tape {
    ops: Vec<Op>,
    args: Vec<u32>,
    roots: Vec<u32>,
    params: Vec<Arc<str>>,
    sources: Vec<Expr>,
}

struct Compiler {
    tape: Tape,
    by_ptr: HashMap<*const (), u32>,
    by_key: HashMap<Key, u32>,
    param_slots: HashMap<Arc<str>, u32>,
    // Keeps every visited node alive so pointer keys stay unique.
    _pins: Vec<Expr>,
}

impl Compiler {
    fn emit(&mut self, key: Key, op: Op, source: &Expr) -> u32 {
        if let Some(&slot) = self.by_key.get(&key) {
            return slot;
        }
        let slot = self.tape.ops.len() as u32;
        self.tape.ops.push(op);
        self.tape.sources.push(source.clone());
        self.by_key.insert(key, slot);
        slot
    }

    fn compile(&mut self, e: &Expr) -> u32 {
        if let Some(&slot) = self.by_ptr.get(&e.ptr()) {
            return slot;
        }
        let slot = match e.node() {
            Node::Num(n) => {
                let v = n.to_f64();
                self.emit(Key::Const(v.to_bits()), Op::Const(v), e)
            }
            Node::Coord(i) => self.emit(Key::Coord(*i), Op::Coord(*i), e),
            Node::Param(p) => {
                let next = self.param_slots.len() as u32;
                let idx = *self.param_slots.entry(p.clone()).or_insert_with(|| {
                    self.tape.params.push(p.clone());
                    next
                });
                self.emit(Key::Param(p.clone()), Op::Param(idx), e)
            }
            Node::Neg(a) => {
                let a = self.compile(a);
                self.emit(Key::Neg(a), Op::Neg(a), e)
            }
            Node::Pow(b, k) => {
                let b = self.compile(b);
                self.emit(Key::Pow(b, *k), Op::Pow(b, *k), e)
            }
            Node::Func(f, a) => {
                let a = self.compile(a);
                self.emit(Key::Func(*f, a), Op::Func(*f, a), e)
            }
            Node::Sum(items) | Node::Product(items) => {
                let children: Vec<u32> = items.iter().map(|c| self.compile(c)).collect();
                let is_sum = matches!(e.node(), Node::Sum(_));
                let key = if is_sum {
                    Key::Sum(children.clone())
                } else {
                    Key::Product(children.clone())
                };
                if let Some(&slot) = self.by_key.get(&key) {
                    slot
                } else {
                    let start = self.tape.args.len() as u32;
                    let len = children.len() as u32;
                    self.tape.args.extend(children);
                    let op = if is_sum {
                        Op::Sum(start, len)
                    } else {
                        Op::Product(start, len)
                    };
                    self.emit(key, op, e)
                }
            }
        };
        self.by_ptr.insert(e.ptr(), slot);
        self._pins.push(e.clone());
        slot
    }
}

impl Tape {
    pub fn compile(exprs: &[Expr]) -> Tape {
        let mut c = Compiler {
            tape: Tape {
                ops: Vec::new(),
                args: Vec::new(),
                roots: Vec::new(),
                params: Vec::new(),
                sources: Vec::new(),
            },
            by_ptr: HashMap::new(),
            by_key: HashMap::new(),
            param_slots: HashMap::new(),
            _pins: Vec::new(),
        };
        for e in exprs {
            let slot = c.compile(e);
            c.tape.roots.push(slot);
        }
        c.tape
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn root_count(&self) -> usize {
        self.roots.len()
    }

    /// Parameter names in slot order.
    pub fn param_names(&self) -> &[Arc<str>] {
        &self.params
    }

    /// Resolves parameter values into slot order.
    pub fn bind_params(&self, values: &BTreeMap<String, f64>) -> Result<Vec<f64>, EvalError> {
        self.params
            .iter()
            .map(|p| {
                values
                    .get(p.as_ref())
                    .copied()
                    .ok_or_else(|| EvalError::UnboundParameter(p.to_string()))
            })
            .collect()
    }

    /// Evaluates every instruction into `scratch`; read results with [`Tape::root`].
    pub fn eval_into(
        &self,
        coords: &[f64; 4],
        params: &[f64],
        scratch: &mut Vec<f64>,
    ) -> Result<(), EvalError> {
        scratch.clear();
        scratch.reserve(self.ops.len());
        for (slot, op) in self.ops.iter().enumerate() {
            let v = match *op {
                Op::Const(v) => v,
                Op::Coord(i) => coords[i as usize],
                Op::Param(i) => params[i as usize],
                Op::Neg(a) => -scratch[a as usize],
                Op::Sum(start, len) => self.args[start as usize..(start + len) as usize]
                    .iter()
                    .map(|&a| scratch[a as usize])
                    .sum(),
                Op::Product(start, len) => self.args[start as usize..(start + len) as usize]
                    .iter()
                    .map(|&a| scratch[a as usize])
                    .product(),
                Op::Pow(b, k) => {
                    let base = scratch[b as usize];
                    if k < 0 && base == 0.0 {
                        return Err(EvalError::DivisionByZero(self.describe(slot)));
                    }
                    base.powi(k)
                }
                Op::Func(f, a) => {
                    let x = scratch[a as usize];
                    match f {
                        Func::Sin => x.sin(),
                        Func::Cos => x.cos(),
                        Func::Tan => x.tan(),
                        Func::Sinh => x.sinh(),
                        Func::Cosh => x.cosh(),
                        Func::Exp => x.exp(),
                        Func::Log => {
                            if x <= 0.0 {
                                return Err(EvalError::LogDomain(self.describe(slot)));
                            }
                            x.ln()
                        }
                        Func::Sqrt => {
                            if x < 0.0 {
                                return Err(EvalError::SqrtDomain(self.describe(slot)));
                            }
                            x.sqrt()
                        }
                    }
                }
            };
            if !v.is_finite() {
                return Err(EvalError::NonFinite(self.describe(slot)));
            }
            scratch.push(v);
        }
        Ok(())
    }

    pub fn root(&self, scratch: &[f64], index: usize) -> f64 {
        scratch[self.roots[index] as usize]
    }

    /// Evaluates all roots at a point.
    pub fn evaluate(&self, pt: &EvalPoint) -> Result<Vec<f64>, EvalError> {
        let params = self.bind_params(&pt.params)?;
        let mut scratch = Vec::new();
        self.eval_into(&pt.coords, &params, &mut scratch)?;
        Ok(self.roots.iter().map(|&r| scratch[r as usize]).collect())
    }

    fn describe(&self, slot: usize) -> String {
        let text = self.sources[slot].to_string();
        if text.len() > 200 {
            format!("{}...", &text[..text.floor_char_boundary(200)])
        } else {
            text
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, Chart};
    use super::*;

    fn p(src: &str) -> Expr {
        parse(src, &Chart::standard(), &["c"]).unwrap()
    }

    #[test]
    fn evaluates_examples() {
        let pt = EvalPoint::at([0.0, 0.0, 3.0, 0.0]);
        assert_eq!(p("2*x2").eval(&pt).unwrap(), 6.0);
        assert_eq!(p("exp(0)").eval(&EvalPoint::origin()).unwrap(), 1.0);
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let err = p("1/x0").eval(&EvalPoint::origin()).unwrap_err();
        assert!(matches!(err, EvalError::DivisionByZero(ref s) if s == "x0^-1"), "{err}");
        assert!(matches!(
            p("log(x1 - 1)").eval(&EvalPoint::origin()),
            Err(EvalError::LogDomain(_))
        ));
        assert!(matches!(
            p("sqrt(-1 + x1)").eval(&EvalPoint::origin()),
            Err(EvalError::SqrtDomain(_))
        ));
        assert_eq!(
            p("c*x1").eval(&EvalPoint::origin()),
            Err(EvalError::UnboundParameter("c".into()))
        );
    }

    #[test]
    fn shared_structure_is_interned() {
        let a = p("sin(x1*x2) + x3");
        let b = p("sin(x1*x2)*x0");
        let tape = Tape::compile(&[a, b]);
        // x1, x2, x1*x2, sin, x3, sum, x0, product
        assert_eq!(tape.len(), 8);
        let vals = tape
            .evaluate(&EvalPoint::at([2.0, 1.0, 0.5, 1.0]))
            .unwrap();
        assert!((vals[0] - (0.5f64.sin() + 1.0)).abs() < 1e-15);
        assert!((vals[1] - 2.0 * 0.5f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn parameters_bind_by_name() {
        let e = p("c*x1");
        let pt = EvalPoint::at([0.0, 2.0, 0.0, 0.0]).with_param("c", 1.5);
        assert_eq!(e.eval(&pt).unwrap(), 3.0);
    }
}

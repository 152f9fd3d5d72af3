use std::collections::HashMap;
use std::sync::Arc;

use super::{EvalError, EvalPoint, Expr, Func, Node, Number, Tape};

/// Differentiation variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    Coord(u8),
    Param(Arc<str>),
}

/// Symbolic differentiation with respect to one variable.
///
/// Results are memoized per node, so differentiating many expressions that
/// share subtrees (the components of a Christoffel array, say) with the same
/// `Differentiator` does the shared work once.
pub struct Differentiator {
    var: Var,
    memo: HashMap<Expr, Expr>,
}

impl Differentiator {
    pub fn new(var: Var) -> Self {
        Differentiator {
            var,
            memo: HashMap::new(),
        }
    }

    pub fn coord(index: usize) -> Self {
        Differentiator::new(Var::Coord(index as u8))
    }

    pub fn diff(&mut self, e: &Expr) -> Expr {
        if let Some(d) = self.memo.get(e) {
            return d.clone();
        }
        let d = self.rule(e);
        self.memo.insert(e.clone(), d.clone());
        d
    }

    fn rule(&mut self, e: &Expr) -> Expr {
        match e.node() {
            Node::Num(_) => Expr::zero(),
            Node::Coord(i) => match &self.var {
                Var::Coord(c) if c == i => Expr::one(),
                _ => Expr::zero(),
            },
            Node::Param(p) => match &self.var {
                Var::Param(q) if q == p => Expr::one(),
                _ => Expr::zero(),
            },
            Node::Neg(a) => -self.diff(a),
            Node::Sum(items) => Expr::sum(items.iter().map(|t| self.diff(t)).collect()),
            Node::Product(items) => {
                let mut terms = Vec::with_capacity(items.len());
                for (i, f) in items.iter().enumerate() {
                    let df = self.diff(f);
                    if df.is_zero() {
                        continue;
                    }
                    let mut factors: Vec<Expr> = Vec::with_capacity(items.len());
                    factors.extend(items[..i].iter().cloned());
                    factors.push(df);
                    factors.extend(items[i + 1..].iter().cloned());
                    terms.push(Expr::product(factors));
                }
                Expr::sum(terms)
            }
            Node::Pow(b, k) => {
                let db = self.diff(b);
                if db.is_zero() {
                    return Expr::zero();
                }
                Expr::product(vec![Expr::int(*k as i64), b.powi(k - 1), db])
            }
            Node::Func(f, a) => {
                let da = self.diff(a);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = match f {
                    Func::Sin => a.clone().cos(),
                    Func::Cos => -a.clone().sin(),
                    Func::Tan => a.clone().cos().powi(-2),
                    Func::Sinh => a.clone().cosh(),
                    Func::Cosh => a.clone().sinh(),
                    Func::Exp => e.clone(),
                    Func::Log => a.powi(-1),
                    Func::Sqrt => Expr::num(Number::ratio(1, 2)) * e.powi(-1),
                };
                outer * da
            }
        }
    }
}

/// Fourth-order central finite difference of `e` along `coord` at `pt`:
/// `(-f(+2h) + 8 f(+h) - 8 f(-h) + f(-2h)) / (12 h)`.
///
/// Evaluation only; independent of the symbolic differentiation path.
pub fn diff_fd_oracle(e: &Expr, coord: usize, pt: &EvalPoint, step: f64) -> Result<f64, EvalError> {
    let tape = Tape::compile(std::slice::from_ref(e));
    let params = tape.bind_params(&pt.params)?;
    let mut scratch = Vec::new();
    let mut at = |offset: f64| -> Result<f64, EvalError> {
        let mut coords = pt.coords;
        coords[coord] += offset;
        tape.eval_into(&coords, &params, &mut scratch)?;
        Ok(tape.root(&scratch, 0))
    };
    let fp2 = at(2.0 * step)?;
    let fp1 = at(step)?;
    let fm1 = at(-step)?;
    let fm2 = at(-2.0 * step)?;
    Ok((-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * step))
}

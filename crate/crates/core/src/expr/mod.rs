//! Expression language over a four-coordinate chart.
//!
//! An [`Expr`] is an immutable, reference-counted tree. Subtrees are shared
//! freely, so the results of differentiation form a DAG; evaluation goes
//! through [`Tape`], which interns structurally equal subtrees once.
//!
//! Two kinds of tree exist side by side. [`parse`] returns the raw syntax
//! tree (it keeps `Neg`, the source order, and the source grouping) so that
//! printing and re-parsing is stable. The arithmetic constructors
//! ([`Expr::sum`], [`Expr::product`], [`Expr::powi`], operators) return
//! lightly simplified trees: constants folded, 0/1 identities removed, nested
//! sums and products flattened, like terms and like factors collected.

mod diff;
mod eval;
pub mod gen;
mod number;
mod parse;
mod print;
mod sample;
mod simplify;

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

pub use diff::{diff_fd_oracle, Differentiator, Var};
pub use eval::{EvalError, EvalPoint, Tape};
pub use number::Number;
pub use parse::{parse, ParseError, ParseErrorKind};
pub use print::Printer;
pub use sample::{
    is_probably_zero, HalfSpace, Normalization, SampleBox, SampleBoxError, ZeroTest, DEFAULT_POINTS,
    DEFAULT_SEED, DEFAULT_TOL,
};

/// Elementary functions accepted by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Four coordinate names. Index `i` of the chart is the coordinate `x^i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chart {
    names: [String; 4],
}

impl Chart {
    pub fn new<S: Into<String>>(names: [S; 4]) -> Self {
        Chart {
            names: names.map(Into::into),
        }
    }

    /// The chart `x0, x1, x2, x3`.
    pub fn standard() -> Self {
        Chart::new(["x0", "x1", "x2", "x3"])
    }

    pub fn names(&self) -> &[String; 4] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

impl Default for Chart {
    fn default() -> Self {
        Chart::standard()
    }
}

/// Node of an expression tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Num(Number),
    /// Chart coordinate by index (0..4).
    Coord(u8),
    Param(Arc<str>),
    Neg(Expr),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Expr, i32),
    Func(Func, Expr),
}

struct Inner {
    hash: u64,
    node: Node,
}

/// Immutable shared expression.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

impl Expr {
    /// Wraps a node without any simplification.
    pub fn raw(node: Node) -> Expr {
        let mut hasher = DefaultHasher::new();
        node.hash(&mut hasher);
        Expr(Arc::new(Inner {
            hash: hasher.finish(),
            node,
        }))
    }

    pub fn num(n: Number) -> Expr {
        Expr::raw(Node::Num(n))
    }

    pub fn int(value: i64) -> Expr {
        Expr::num(Number::int(value))
    }

    pub fn ratio(numer: i64, denom: i64) -> Expr {
        Expr::num(Number::ratio(numer, denom))
    }

    pub fn float(value: f64) -> Expr {
        Expr::num(Number::Float(value))
    }

    pub fn zero() -> Expr {
        Expr::num(Number::ZERO)
    }

    pub fn one() -> Expr {
        Expr::num(Number::ONE)
    }

    pub fn coord(index: usize) -> Expr {
        assert!(index < 4, "coordinate index {index} out of range");
        Expr::raw(Node::Coord(index as u8))
    }

    pub fn param(name: &str) -> Expr {
        Expr::raw(Node::Param(Arc::from(name)))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub(crate) fn ptr(&self) -> *const () {
        Arc::as_ptr(&self.0) as *const ()
    }

    pub fn as_number(&self) -> Option<Number> {
        match self.node() {
            Node::Num(n) => Some(*n),
            _ => None,
        }
    }

    /// Structurally the constant zero.
    pub fn is_zero(&self) -> bool {
        self.as_number().is_some_and(Number::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.as_number().is_some_and(Number::is_one)
    }

    /// Children in order.
    pub fn children(&self) -> Vec<&Expr> {
        match self.node() {
            Node::Num(_) | Node::Coord(_) | Node::Param(_) => Vec::new(),
            Node::Neg(e) | Node::Pow(e, _) | Node::Func(_, e) => vec![e],
            Node::Sum(items) | Node::Product(items) => items.iter().collect(),
        }
    }

    /// Top-level additive terms (the expression itself when it is not a sum).
    pub fn additive_terms(&self) -> Vec<Expr> {
        match self.node() {
            Node::Sum(items) => items.clone(),
            _ => vec![self.clone()],
        }
    }

    /// Which chart coordinates occur anywhere in the tree.
    pub fn coord_mask(&self) -> [bool; 4] {
        let mut mask = [false; 4];
        let mut seen = std::collections::HashSet::new();
        self.visit(&mut seen, &mut |e| {
            if let Node::Coord(i) = e.node() {
                mask[*i as usize] = true;
            }
        });
        mask
    }

    pub fn depends_on(&self, coord: usize) -> bool {
        self.coord_mask()[coord]
    }

    /// Parameter names referenced anywhere in the tree, sorted.
    pub fn param_names(&self) -> BTreeSet<String> {
        let mut names = BTreeSet::new();
        let mut seen = std::collections::HashSet::new();
        self.visit(&mut seen, &mut |e| {
            if let Node::Param(p) = e.node() {
                names.insert(p.to_string());
            }
        });
        names
    }

    /// Number of distinct nodes in the DAG.
    pub fn dag_size(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        self.visit(&mut seen, &mut |_| {});
        seen.len()
    }

    fn visit(&self, seen: &mut std::collections::HashSet<*const ()>, f: &mut impl FnMut(&Expr)) {
        if !seen.insert(self.ptr()) {
            return;
        }
        f(self);
        for child in self.children() {
            child.visit(seen, f);
        }
    }

    /// Replaces every coordinate `x^i` by `images[i]` and simplifies.
    pub fn substitute_coords(&self, images: &[Expr; 4]) -> Expr {
        let mut memo = std::collections::HashMap::new();
        self.substitute_with(
            &|node| match node {
                Node::Coord(i) => Some(images[*i as usize].clone()),
                _ => None,
            },
            &mut memo,
        )
    }

    /// Replaces the parameter `name` by `value` and simplifies.
    pub fn substitute_param(&self, name: &str, value: &Expr) -> Expr {
        let mut memo = std::collections::HashMap::new();
        self.substitute_with(
            &|node| match node {
                Node::Param(p) if &**p == name => Some(value.clone()),
                _ => None,
            },
            &mut memo,
        )
    }

    fn substitute_with(
        &self,
        leaf: &dyn Fn(&Node) -> Option<Expr>,
        memo: &mut std::collections::HashMap<*const (), Expr>,
    ) -> Expr {
        if let Some(done) = memo.get(&self.ptr()) {
            return done.clone();
        }
        let out = match self.node() {
            node @ (Node::Num(_) | Node::Param(_) | Node::Coord(_)) => {
                leaf(node).unwrap_or_else(|| self.clone())
            }
            Node::Neg(e) => -e.substitute_with(leaf, memo),
            Node::Sum(items) => {
                Expr::sum(items.iter().map(|e| e.substitute_with(leaf, memo)).collect())
            }
            Node::Product(items) => {
                Expr::product(items.iter().map(|e| e.substitute_with(leaf, memo)).collect())
            }
            Node::Pow(b, k) => b.substitute_with(leaf, memo).powi(*k),
            Node::Func(f, a) => Expr::func(*f, a.substitute_with(leaf, memo)),
        };
        memo.insert(self.ptr(), out.clone());
        out
    }

    /// Rebuilds the tree through the simplifying constructors.
    pub fn simplify(&self) -> Expr {
        let mut memo = std::collections::HashMap::new();
        self.simplify_with(&mut memo)
    }

    fn simplify_with(&self, memo: &mut std::collections::HashMap<*const (), Expr>) -> Expr {
        if let Some(done) = memo.get(&self.ptr()) {
            return done.clone();
        }
        let out = match self.node() {
            Node::Num(_) | Node::Coord(_) | Node::Param(_) => self.clone(),
            Node::Neg(e) => -e.simplify_with(memo),
            Node::Sum(items) => Expr::sum(items.iter().map(|e| e.simplify_with(memo)).collect()),
            Node::Product(items) => {
                Expr::product(items.iter().map(|e| e.simplify_with(memo)).collect())
            }
            Node::Pow(b, k) => b.simplify_with(memo).powi(*k),
            Node::Func(f, a) => Expr::func(*f, a.simplify_with(memo)),
        };
        memo.insert(self.ptr(), out.clone());
        out
    }

    /// Evaluates at a point. Compiles a one-off [`Tape`]; use a tape directly
    /// for repeated evaluation.
    pub fn eval(&self, pt: &EvalPoint) -> Result<f64, EvalError> {
        let tape = Tape::compile(std::slice::from_ref(self));
        Ok(tape.evaluate(pt)?[0])
    }

    /// Exact partial derivative with respect to chart coordinate `coord`.
    pub fn diff(&self, coord: usize) -> Expr {
        Differentiator::new(Var::Coord(coord as u8)).diff(&self.simplify())
    }

    /// Displays with the chart's coordinate names.
    pub fn display<'a>(&'a self, chart: &'a Chart) -> Printer<'a> {
        Printer::new(self, chart)
    }

    fn kind_rank(&self) -> u8 {
        match self.node() {
            Node::Num(_) => 0,
            Node::Coord(_) => 1,
            Node::Param(_) => 2,
            Node::Pow(..) => 3,
            Node::Func(..) => 4,
            Node::Product(_) => 5,
            Node::Sum(_) => 6,
            Node::Neg(_) => 7,
        }
    }

    /// Deterministic structural total order used to canonicalize sums and
    /// products.
    pub fn structural_cmp(&self, other: &Expr) -> Ordering {
        if self.ptr_eq(other) {
            return Ordering::Equal;
        }
        let by_rank = self.kind_rank().cmp(&other.kind_rank());
        if by_rank != Ordering::Equal {
            return by_rank;
        }
        match (self.node(), other.node()) {
            (Node::Num(a), Node::Num(b)) => a.total_cmp(b),
            (Node::Coord(a), Node::Coord(b)) => a.cmp(b),
            (Node::Param(a), Node::Param(b)) => a.cmp(b),
            (Node::Pow(a, j), Node::Pow(b, k)) => a.structural_cmp(b).then(j.cmp(k)),
            (Node::Func(f, a), Node::Func(g, b)) => f.cmp(g).then_with(|| a.structural_cmp(b)),
            (Node::Neg(a), Node::Neg(b)) => a.structural_cmp(b),
            (Node::Sum(a), Node::Sum(b)) | (Node::Product(a), Node::Product(b)) => {
                for (x, y) in a.iter().zip(b) {
                    let c = x.structural_cmp(y);
                    if c != Ordering::Equal {
                        return c;
                    }
                }
                a.len().cmp(&b.len())
            }
            _ => unreachable!("kind ranks matched"),
        }
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.ptr_eq(other) || (self.0.hash == other.0.hash && self.0.node == other.0.node)
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let chart = Chart::standard();
        fmt::Display::fmt(&Printer::new(self, &chart), f)
    }
}

impl From<i64> for Expr {
    fn from(value: i64) -> Self {
        Expr::int(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_equality_ignores_sharing() {
        let a = Expr::coord(2) * Expr::coord(3);
        let b = Expr::coord(3) * Expr::coord(2);
        assert_eq!(a, b);
        assert!(!a.ptr_eq(&b));
    }

    #[test]
    fn masks_and_params() {
        let e = Expr::coord(1) * Expr::param("c") + Expr::func(Func::Sin, Expr::coord(3));
        assert_eq!(e.coord_mask(), [false, true, false, true]);
        assert_eq!(e.param_names().into_iter().collect::<Vec<_>>(), vec!["c"]);
    }

    #[test]
    fn substitution_simplifies() {
        let chart = Chart::standard();
        let e = parse("x0 + x1", &chart, &[] as &[&str]).unwrap();
        let images = [
            Expr::coord(1),
            -Expr::coord(1),
            Expr::coord(2),
            Expr::coord(3),
        ];
        assert!(e.substitute_coords(&images).is_zero());
    }
}

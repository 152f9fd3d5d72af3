//! Seeded random expressions for fuzzing and benchmarks.
//!
//! Generated expressions are finite everywhere on a box of moderate size:
//! `log` and `sqrt` only ever see `1 + u^2`, negative powers only see
//! `2 + sin(u)` or `1 + u^2`, and `exp` arguments are damped by `sin`.

use rand::Rng;

use super::{Expr, Func};

pub struct ExprGen<'r, R: Rng> {
    rng: &'r mut R,
    /// Coordinates the generator may use.
    pub coords: Vec<usize>,
    /// Parameters the generator may use.
    pub params: Vec<String>,
}

impl<'r, R: Rng> ExprGen<'r, R> {
    pub fn new(rng: &'r mut R) -> Self {
        ExprGen {
            rng,
            coords: vec![0, 1, 2, 3],
            params: Vec::new(),
        }
    }

    pub fn with_coords(mut self, coords: &[usize]) -> Self {
        self.coords = coords.to_vec();
        self
    }

    pub fn with_params(mut self, params: &[&str]) -> Self {
        self.params = params.iter().map(|p| p.to_string()).collect();
        self
    }

    fn leaf(&mut self) -> Expr {
        let roll = self.rng.gen_range(0..10);
        if roll < 2 {
            Expr::int(self.rng.gen_range(-3..=3))
        } else if roll < 3 && !self.params.is_empty() {
            let i = self.rng.gen_range(0..self.params.len());
            Expr::param(&self.params[i])
        } else {
            let i = self.rng.gen_range(0..self.coords.len());
            Expr::coord(self.coords[i])
        }
    }

    fn positive(&mut self, depth: u32) -> Expr {
        let u = self.expr(depth);
        if self.rng.gen_bool(0.5) {
            Expr::int(1) + u.powi(2)
        } else {
            Expr::int(2) + u.sin()
        }
    }

    /// A random expression of nesting depth at most `depth`.
    pub fn expr(&mut self, depth: u32) -> Expr {
        if depth == 0 {
            return self.leaf();
        }
        let d = depth - 1;
        match self.rng.gen_range(0..11) {
            0 => self.leaf(),
            1 | 2 => self.expr(d) + self.expr(d),
            3 => self.expr(d) - self.expr(d),
            4 | 5 => self.expr(d) * self.expr(d),
            6 => self.expr(d).powi(self.rng.gen_range(2..=3)),
            7 => self.expr(d) / self.positive(d),
            8 => {
                let f = [Func::Sin, Func::Cos, Func::Sinh, Func::Cosh][self.rng.gen_range(0..4)];
                let a = self.expr(d);
                match f {
                    // keep hyperbolic growth bounded
                    Func::Sinh | Func::Cosh => Expr::func(f, a.sin()),
                    _ => Expr::func(f, a),
                }
            }
            9 => self.expr(d).sin().exp(),
            _ => {
                let f = if self.rng.gen_bool(0.5) {
                    Func::Log
                } else {
                    Func::Sqrt
                };
                Expr::func(f, self.positive(d))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::super::EvalPoint;
    use super::*;

    #[test]
    fn generated_expressions_evaluate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let e = ExprGen::new(&mut rng).with_params(&["a"]).expr(4);
            let pt = EvalPoint::at([0.3, -0.7, 1.1, 0.0]).with_param("a", 0.5);
            assert!(e.eval(&pt).is_ok(), "{e}");
        }
    }

    #[test]
    fn generation_is_seeded() {
        let a = ExprGen::new(&mut ChaCha8Rng::seed_from_u64(9)).expr(4);
        let b = ExprGen::new(&mut ChaCha8Rng::seed_from_u64(9)).expr(4);
        assert_eq!(a, b);
    }
}

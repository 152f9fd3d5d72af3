use crate::expr::Expr;

use super::GeometryError;

/// Components of a tensor of valence `(upper, lower)` in row-major order,
/// contravariant indices first.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    upper: usize,
    lower: usize,
    comps: Vec<Expr>,
}

impl Tensor {
    pub fn new(upper: usize, lower: usize, comps: Vec<Expr>) -> Result<Self, GeometryError> {
        let expected = 4usize.pow((upper + lower) as u32);
        if comps.len() != expected {
            return Err(GeometryError::Shape {
                expected,
                got: comps.len(),
            });
        }
        Ok(Tensor {
            upper,
            lower,
            comps,
        })
    }

    pub fn zeros(upper: usize, lower: usize) -> Self {
        Tensor {
            upper,
            lower,
            comps: vec![Expr::zero(); 4usize.pow((upper + lower) as u32)],
        }
    }

    pub fn vector(comps: [Expr; 4]) -> Self {
        Tensor {
            upper: 1,
            lower: 0,
            comps: comps.to_vec(),
        }
    }

    pub fn covector(comps: [Expr; 4]) -> Self {
        Tensor {
            upper: 0,
            lower: 1,
            comps: comps.to_vec(),
        }
    }

    pub fn valence(&self) -> (usize, usize) {
        (self.upper, self.lower)
    }

    pub fn rank(&self) -> usize {
        self.upper + self.lower
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * 4 + i)
    }

    pub fn get(&self, idx: &[usize]) -> &Expr {
        &self.comps[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: Expr) {
        let at = self.offset(idx);
        self.comps[at] = value;
    }

    /// All index tuples in storage order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> {
        multi_indices(self.rank())
    }
}

pub fn multi_indices(rank: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..4usize.pow(rank as u32)).map(move |mut n| {
        let mut idx = vec![0; rank];
        for slot in idx.iter_mut().rev() {
            *slot = n % 4;
            n /= 4;
        }
        idx
    })
}

//! Scalar abstraction and dense elimination over a field.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::Num;

/// Coefficient field for polynomials and matrices.
///
/// Exact types test for zero exactly; floating types use a small absolute
/// tolerance during elimination.
pub trait Scalar: Num + Clone + Neg<Output = Self> + Debug + Display + PartialOrd {
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    /// Magnitude used to choose pivots; exact types may pick any nonzero.
    fn pivot_score(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            1.0
        }
    }

    fn from_i64(v: i64) -> Self;
}

impl Scalar for f64 {
    fn is_negligible(&self) -> bool {
        self.abs() < 1e-9
    }
    fn pivot_score(&self) -> f64 {
        self.abs()
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
}

impl Scalar for f32 {
    fn is_negligible(&self) -> bool {
        self.abs() < 1e-4
    }
    fn pivot_score(&self) -> f64 {
        self.abs() as f64
    }
    fn from_i64(v: i64) -> Self {
        v as f32
    }
}

impl Scalar for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
}

impl Scalar for Ratio<i64> {
    fn from_i64(v: i64) -> Self {
        Ratio::from_integer(v)
    }
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref<T: Scalar>(m: &mut [Vec<T>]) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let best = (r..rows)
            .filter(|&i| !m[i][c].is_negligible())
            .max_by(|&a, &b| m[a][c].pivot_score().total_cmp(&m[b][c].pivot_score()));
        let Some(pr) = best else { continue };
        m.swap(r, pr);
        let inv = T::one() / m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_negligible() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let v = m[r][j].clone() * f.clone();
                    m[i][j] = m[i][j].clone() - v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<T: Scalar>(m: &[Vec<T>]) -> usize {
    let mut work = m.to_vec();
    rref(&mut work).len()
}

/// Basis of `{x : m x = 0}`.
pub fn nullspace<T: Scalar>(m: &[Vec<T>], cols: usize) -> Vec<Vec<T>> {
    let mut work = m.to_vec();
    let pivots = rref(&mut work);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![T::zero(); cols];
            v[f] = T::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -work[r][f].clone();
            }
            v
        })
        .collect()
}

pub fn is_square_invertible<T: Scalar>(m: &[Vec<T>]) -> bool {
    let n = m.len();
    m.iter().all(|r| r.len() == n) && rank(m) == n
}

pub fn rational(n: i64) -> BigRational {
    BigRational::from_i64(n)
}

pub fn rational_frac(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn q(rows: &[&[i64]]) -> Vec<Vec<BigRational>> {
        rows.iter()
            .map(|r| r.iter().map(|&x| rational(x)).collect())
            .collect()
    }

    #[test]
    fn rank_exact() {
        assert_eq!(rank(&q(&[&[1, 2], &[2, 4]])), 1);
        assert_eq!(rank(&q(&[&[1, 2, 3], &[0, 1, 1], &[1, 3, 4]])), 2);
        assert_eq!(rank::<BigRational>(&[]), 0);
    }

    #[test]
    fn rank_float_agrees() {
        let m = vec![vec![1.0f64, 2.0], vec![2.0, 4.0 + 1e-12]];
        assert_eq!(rank(&m), 1);
        let m32 = vec![vec![1.0f32, 0.0], vec![0.0, 3.0]];
        assert_eq!(rank(&m32), 2);
    }

    #[test]
    fn nullspace_vectors_are_killed() {
        let m = q(&[&[1, 1, 0, -1], &[0, 2, 1, 1]]);
        let ns = nullspace(&m, 4);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            for row in &m {
                let dot: BigRational = row.iter().zip(v).map(|(a, b)| a * b).sum();
                assert!(dot.is_zero());
            }
        }
    }
}

//! Dense matrices of polynomials with graded row and column labels.
//!
//! Row `i` carries the `K`-exponent of its summand and the matrix as a whole
//! maps into the target twisted by `K^twist`. A nonzero entry `(i, j)` is
//! then a section of `K^(row_i + twist - col_j)` and must be homogeneous of
//! that weight.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::Scalar;
use crate::poly::{MPoly, Ring};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

#[derive(Clone, PartialEq)]
pub struct SymMatrix<C> {
    ring: Arc<Ring>,
    rows: usize,
    cols: usize,
    entries: Vec<MPoly<C>>,
    row_grades: Vec<i32>,
    col_grades: Vec<i32>,
    twist: i32,
}

impl<C: Scalar> SymMatrix<C> {
    pub fn zeros(ring: &Arc<Ring>, row_grades: Vec<i32>, col_grades: Vec<i32>, twist: i32) -> Self {
        let (rows, cols) = (row_grades.len(), col_grades.len());
        Self {
            ring: ring.clone(),
            rows,
            cols,
            entries: vec![MPoly::zero(ring); rows * cols],
            row_grades,
            col_grades,
            twist,
        }
    }

    /// An ungraded matrix (all grades zero).
    pub fn plain(ring: &Arc<Ring>, rows: usize, cols: usize) -> Self {
        Self::zeros(ring, vec![0; rows], vec![0; cols], 0)
    }

    pub fn from_fn(
        ring: &Arc<Ring>,
        row_grades: Vec<i32>,
        col_grades: Vec<i32>,
        twist: i32,
        mut f: impl FnMut(usize, usize) -> MPoly<C>,
    ) -> Self {
        let mut m = Self::zeros(ring, row_grades, col_grades, twist);
        for i in 0..m.rows {
            for j in 0..m.cols {
                m.entries[i * m.cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn identity(ring: &Arc<Ring>, grades: Vec<i32>) -> Self {
        Self::from_fn(ring, grades.clone(), grades, 0, |i, j| {
            if i == j {
                MPoly::one(ring)
            } else {
                MPoly::zero(ring)
            }
        })
    }

    pub fn diagonal(ring: &Arc<Ring>, grades: Vec<i32>, diag: Vec<MPoly<C>>) -> Self {
        assert_eq!(grades.len(), diag.len());
        Self::from_fn(ring, grades.clone(), grades, 0, |i, j| {
            if i == j {
                diag[i].clone()
            } else {
                MPoly::zero(ring)
            }
        })
    }

    /// Ones on the antidiagonal.
    pub fn antidiagonal(ring: &Arc<Ring>, n: usize) -> Self {
        let mut m = Self::plain(ring, n, n);
        for i in 0..n {
            m.set(i, n - 1 - i, MPoly::one(ring));
        }
        m
    }

    pub fn ring(&self) -> &Arc<Ring> {
        &self.ring
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn twist(&self) -> i32 {
        self.twist
    }

    pub fn row_grades(&self) -> &[i32] {
        &self.row_grades
    }

    pub fn col_grades(&self) -> &[i32] {
        &self.col_grades
    }

    pub fn get(&self, i: usize, j: usize) -> &MPoly<C> {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: MPoly<C>) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Each nonzero entry is homogeneous of the weight its position demands.
    pub fn graded_consistent(&self) -> bool {
        (0..self.rows).all(|i| {
            (0..self.cols).all(|j| {
                let w = self.row_grades[i] + self.twist - self.col_grades[j];
                self.get(i, j).is_homogeneous_of(w)
            })
        })
    }

    /// The transpose, viewed as a map between dual spaces.
    pub fn transpose(&self) -> Self {
        let neg = |g: &[i32]| g.iter().map(|x| -x).collect::<Vec<_>>();
        Self::from_fn(
            &self.ring,
            neg(&self.col_grades),
            neg(&self.row_grades),
            self.twist,
            |i, j| self.get(j, i).clone(),
        )
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self, MatrixError> {
        if self.cols != rhs.rows {
            return Err(MatrixError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(
            &self.ring,
            self.row_grades.clone(),
            rhs.col_grades.clone(),
            self.twist + rhs.twist,
        );
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let v = out.get(i, j) + &(a * b);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self, MatrixError> {
        self.combine(rhs, |a, b| a + b)
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self, MatrixError> {
        self.combine(rhs, |a, b| a - b)
    }

    fn combine(
        &self,
        rhs: &Self,
        f: impl Fn(&MPoly<C>, &MPoly<C>) -> MPoly<C>,
    ) -> Result<Self, MatrixError> {
        if (self.rows, self.cols) != (rhs.rows, rhs.cols) {
            return Err(MatrixError::DimensionMismatch(format!(
                "{}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = self.clone();
        for (o, r) in out.entries.iter_mut().zip(&rhs.entries) {
            *o = f(o, r);
        }
        Ok(out)
    }

    pub fn scale(&self, c: &MPoly<C>) -> Self {
        let mut out = self.clone();
        for e in out.entries.iter_mut() {
            *e = &*e * c;
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&MPoly::constant(&self.ring, -C::one()))
    }

    pub fn trace(&self) -> MPoly<C> {
        let mut t = MPoly::zero(&self.ring);
        for i in 0..self.rows.min(self.cols) {
            t = &t + self.get(i, i);
        }
        t
    }

    /// `[[a, b], [c, d]]`; row grades come from `a` and `c`, column grades
    /// from `a` and `b`.
    pub fn block(a: &Self, b: &Self, c: &Self, d: &Self, twist: i32) -> Result<Self, MatrixError> {
        if a.rows != b.rows || c.rows != d.rows || a.cols != c.cols || b.cols != d.cols {
            return Err(MatrixError::DimensionMismatch(
                "block shapes do not align".into(),
            ));
        }
        let mut rg = a.row_grades.clone();
        rg.extend_from_slice(&c.row_grades);
        let mut cg = a.col_grades.clone();
        cg.extend_from_slice(&b.col_grades);
        let (r0, c0) = (a.rows, a.cols);
        Ok(Self::from_fn(&a.ring, rg, cg, twist, |i, j| {
            let src = match (i < r0, j < c0) {
                (true, true) => a.get(i, j),
                (true, false) => b.get(i, j - c0),
                (false, true) => c.get(i - r0, j),
                (false, false) => d.get(i - r0, j - c0),
            };
            src.clone()
        }))
    }

    /// Replaces every entry through `f`, keeping shape and grades.
    pub fn map_entries(&self, ring: &Arc<Ring>, f: impl Fn(&MPoly<C>) -> MPoly<C>) -> Self {
        Self {
            ring: ring.clone(),
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(f).collect(),
            row_grades: self.row_grades.clone(),
            col_grades: self.col_grades.clone(),
            twist: self.twist,
        }
    }

    pub fn with_grades(mut self, row_grades: Vec<i32>, col_grades: Vec<i32>, twist: i32) -> Self {
        assert_eq!(row_grades.len(), self.rows);
        assert_eq!(col_grades.len(), self.cols);
        self.row_grades = row_grades;
        self.col_grades = col_grades;
        self.twist = twist;
        self
    }

    /// Rows as vectors of printed entries.
    pub fn to_strings(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).to_string()).collect())
            .collect()
    }
}

impl<C: Scalar> fmt::Debug for SymMatrix<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl<C: Scalar> fmt::Display for SymMatrix<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.to_strings() {
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rational;
    use num_rational::BigRational;

    type M = SymMatrix<BigRational>;

    #[test]
    fn product_and_trace() {
        let r = Ring::new(&[("x", 1)]);
        let x = MPoly::var(&r, "x");
        let a = M::from_fn(&r, vec![0, 0], vec![0, 0], 0, |i, j| {
            if i == j {
                x.clone()
            } else {
                MPoly::constant(&r, rational(1))
            }
        });
        let a2 = a.try_mul(&a).unwrap();
        assert_eq!(a2.trace().to_string(), "2*x^2 + 2");
        assert_eq!(a.transpose().transpose(), a);
        assert!(M::plain(&r, 2, 3).try_mul(&M::plain(&r, 2, 3)).is_err());
    }

    #[test]
    fn grading_check() {
        let r = Ring::new(&[("q2", 2)]);
        let q2 = MPoly::<BigRational>::var(&r, "q2");
        let mut m = M::zeros(&r, vec![1, -1], vec![0], 1);
        m.set(0, 0, q2.clone());
        m.set(1, 0, MPoly::one(&r));
        assert!(m.graded_consistent());
        m.set(1, 0, q2);
        assert!(!m.graded_consistent());
    }
}

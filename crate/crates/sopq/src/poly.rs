//! Sparse Laurent polynomials in named, weighted variables.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::linalg::Scalar;

/// Variable names and grading weights shared by a family of polynomials.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ring {
    names: Vec<String>,
    weights: Vec<i32>,
}

impl Ring {
    pub fn new(vars: &[(&str, i32)]) -> Arc<Ring> {
        Arc::new(Ring {
            names: vars.iter().map(|(n, _)| n.to_string()).collect(),
            weights: vars.iter().map(|(_, w)| *w).collect(),
        })
    }

    /// `q2, q4, ..., q_{2p-2}` with their natural weights.
    pub fn differentials(p: u32) -> Arc<Ring> {
        let vars: Vec<(String, i32)> = (1..p as i32)
            .map(|j| (format!("q{}", 2 * j), 2 * j))
            .collect();
        let refs: Vec<(&str, i32)> = vars.iter().map(|(n, w)| (n.as_str(), *w)).collect();
        Ring::new(&refs)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn weight(&self, i: usize) -> i32 {
        self.weights[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn monomial_weight(&self, exps: &[i32]) -> i32 {
        exps.iter().zip(&self.weights).map(|(e, w)| e * w).sum()
    }
}

#[derive(Clone, PartialEq)]
pub struct MPoly<C> {
    ring: Arc<Ring>,
    terms: BTreeMap<Vec<i32>, C>,
}

impl<C: Scalar> MPoly<C> {
    pub fn zero(ring: &Arc<Ring>) -> Self {
        Self {
            ring: ring.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ring: &Arc<Ring>, c: C) -> Self {
        let mut p = Self::zero(ring);
        p.add_term(vec![0; ring.len()], c);
        p
    }

    pub fn one(ring: &Arc<Ring>) -> Self {
        Self::constant(ring, C::one())
    }

    pub fn var(ring: &Arc<Ring>, name: &str) -> Self {
        let i = ring
            .index_of(name)
            .unwrap_or_else(|| panic!("variable {name} not in ring"));
        Self::var_index(ring, i)
    }

    pub fn var_index(ring: &Arc<Ring>, i: usize) -> Self {
        let mut e = vec![0; ring.len()];
        e[i] = 1;
        let mut p = Self::zero(ring);
        p.add_term(e, C::one());
        p
    }

    pub fn monomial(ring: &Arc<Ring>, exps: Vec<i32>, c: C) -> Self {
        assert_eq!(exps.len(), ring.len(), "exponent vector length");
        let mut p = Self::zero(ring);
        p.add_term(exps, c);
        p
    }

    pub fn ring(&self) -> &Arc<Ring> {
        &self.ring
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, exps: Vec<i32>, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exps) {
            Some(v) => {
                *v = v.clone() + c;
                if v.is_zero() {
                    self.terms.remove(&exps);
                }
            }
            None => {
                self.terms.insert(exps, c);
            }
        }
    }

    pub fn coeff(&self, exps: &[i32]) -> C {
        self.terms.get(exps).cloned().unwrap_or_else(C::zero)
    }

    /// Terms in output order: decreasing weight, then decreasing exponents.
    pub fn terms(&self) -> Vec<(&[i32], &C)> {
        let mut t: Vec<(&[i32], &C)> = self.terms.iter().map(|(e, c)| (e.as_slice(), c)).collect();
        t.sort_by(|a, b| self.term_cmp(b.0, a.0));
        t
    }

    fn term_cmp(&self, a: &[i32], b: &[i32]) -> Ordering {
        self.ring
            .monomial_weight(a)
            .cmp(&self.ring.monomial_weight(b))
            .then_with(|| a.cmp(b))
    }

    /// The common weight of all terms, if the polynomial is homogeneous.
    /// The zero polynomial is homogeneous of every weight and yields `None`.
    pub fn homogeneous_weight(&self) -> Option<i32> {
        let mut it = self.terms.keys().map(|e| self.ring.monomial_weight(e));
        let first = it.next()?;
        it.all(|w| w == first).then_some(first)
    }

    pub fn is_homogeneous_of(&self, w: i32) -> bool {
        self.terms.keys().all(|e| self.ring.monomial_weight(e) == w)
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = Self::zero(&self.ring);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(&self.ring);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Evaluates at a point; negative exponents divide.
    pub fn eval(&self, point: &[C]) -> C {
        assert_eq!(point.len(), self.ring.len(), "evaluation point length");
        let mut total = C::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (x, &k) in point.iter().zip(e) {
                let xp = int_pow(x, k.unsigned_abs());
                m = if k >= 0 { m * xp } else { m / xp };
            }
            total = total + m;
        }
        total
    }

    /// Replaces each variable by a polynomial in a (possibly different) ring.
    /// Variables with negative exponents must map to monomials.
    pub fn substitute(&self, target: &Arc<Ring>, images: &[MPoly<C>]) -> MPoly<C> {
        assert_eq!(images.len(), self.ring.len(), "one image per variable");
        let mut out = MPoly::zero(target);
        for (e, c) in &self.terms {
            let mut m = MPoly::constant(target, c.clone());
            for (img, &k) in images.iter().zip(e) {
                let f = if k >= 0 {
                    img.pow(k as u32)
                } else {
                    img.monomial_inverse().pow(k.unsigned_abs())
                };
                m = &m * &f;
            }
            out = &out + &m;
        }
        out
    }

    /// Inverse of a single-term polynomial.
    pub fn monomial_inverse(&self) -> MPoly<C> {
        assert_eq!(self.terms.len(), 1, "only monomials are invertible");
        let (e, c) = self.terms.iter().next().unwrap();
        MPoly::monomial(
            &self.ring,
            e.iter().map(|x| -x).collect(),
            C::one() / c.clone(),
        )
    }

    /// Maps coefficients into another scalar type.
    pub fn map_coeffs<D: Scalar>(&self, f: impl Fn(&C) -> D) -> MPoly<D> {
        let mut out = MPoly::zero(&self.ring);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    fn check_ring(&self, other: &Self) {
        assert!(
            Arc::ptr_eq(&self.ring, &other.ring) || self.ring == other.ring,
            "polynomials from different rings"
        );
    }
}

fn int_pow<C: Scalar>(x: &C, n: u32) -> C {
    let mut acc = C::one();
    for _ in 0..n {
        acc = acc * x.clone();
    }
    acc
}

impl<C: Scalar> Add for &MPoly<C> {
    type Output = MPoly<C>;
    fn add(self, rhs: &MPoly<C>) -> MPoly<C> {
        self.check_ring(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl<C: Scalar> Sub for &MPoly<C> {
    type Output = MPoly<C>;
    fn sub(self, rhs: &MPoly<C>) -> MPoly<C> {
        self.check_ring(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }
}

impl<C: Scalar> Mul for &MPoly<C> {
    type Output = MPoly<C>;
    fn mul(self, rhs: &MPoly<C>) -> MPoly<C> {
        self.check_ring(rhs);
        let mut out = MPoly::zero(&self.ring);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(e, ca.clone() * cb.clone());
            }
        }
        out
    }
}

impl<C: Scalar> Neg for &MPoly<C> {
    type Output = MPoly<C>;
    fn neg(self) -> MPoly<C> {
        self.scale(&-C::one())
    }
}

macro_rules! owned_binop {
    ($tr:ident, $m:ident) => {
        impl<C: Scalar> $tr for MPoly<C> {
            type Output = MPoly<C>;
            fn $m(self, rhs: MPoly<C>) -> MPoly<C> {
                (&self).$m(&rhs)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);

impl<C: Scalar> Neg for MPoly<C> {
    type Output = MPoly<C>;
    fn neg(self) -> MPoly<C> {
        -&self
    }
}

impl<C: Scalar> fmt::Display for MPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms().into_iter().enumerate() {
            let mut mono = Vec::new();
            for (i, &x) in e.iter().enumerate() {
                match x {
                    0 => {}
                    1 => mono.push(self.ring.name(i).to_string()),
                    _ => mono.push(format!("{}^{}", self.ring.name(i), x)),
                }
            }
            let neg = *c < C::zero();
            let mag = if neg { -c.clone() } else { c.clone() };
            let coef = mag.to_string();
            let body = if mono.is_empty() {
                coef
            } else if mag.is_one() {
                mono.join("*")
            } else {
                format!("{}*{}", coef, mono.join("*"))
            };
            match (k, neg) {
                (0, true) => write!(f, "-{body}")?,
                (0, false) => write!(f, "{body}")?,
                (_, true) => write!(f, " - {body}")?,
                (_, false) => write!(f, " + {body}")?,
            }
        }
        Ok(())
    }
}

impl<C: Scalar> fmt::Debug for MPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MPoly({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rational;
    use num_rational::BigRational;
    use proptest::prelude::*;

    type Q = MPoly<BigRational>;

    fn ring() -> Arc<Ring> {
        Ring::new(&[("q2", 2), ("q4", 4), ("l", 0)])
    }

    #[test]
    fn display_is_canonical() {
        let r = ring();
        let q2 = Q::var(&r, "q2");
        let q4 = Q::var(&r, "q4");
        let p = &(&q4.scale(&rational(8)) + &q2.pow(2).scale(&rational(20))) + &Q::zero(&r);
        assert_eq!(p.to_string(), "20*q2^2 + 8*q4");
        let m = &Q::one(&r) - &q2;
        assert_eq!(m.to_string(), "-q2 + 1");
        assert_eq!(Q::zero(&r).to_string(), "0");
    }

    #[test]
    fn laurent_inverse() {
        let r = ring();
        let l = Q::var(&r, "l");
        let inv = l.monomial_inverse();
        assert_eq!(&l * &inv, Q::one(&r));
        assert_eq!(inv.to_string(), "l^-1");
    }

    #[test]
    fn homogeneity() {
        let r = ring();
        let q2 = Q::var(&r, "q2");
        let q4 = Q::var(&r, "q4");
        assert_eq!((&q2.pow(2) + &q4).homogeneous_weight(), Some(4));
        assert_eq!((&q2 + &q4).homogeneous_weight(), None);
    }

    #[test]
    fn float_coefficients() {
        let r = ring();
        let x = MPoly::<f64>::var(&r, "q2");
        let p = &x.pow(2) + &MPoly::constant(&r, 0.5);
        assert!((p.eval(&[2.0, 0.0, 1.0]) - 4.5).abs() < 1e-12);
    }

    fn arb_poly() -> impl Strategy<Value = Q> {
        prop::collection::vec(((0i32..3, 0i32..3, -2i32..3), -5i64..6), 0..5).prop_map(|ts| {
            let r = ring();
            let mut p = Q::zero(&r);
            for ((a, b, c), k) in ts {
                p = &p + &Q::monomial(&r, vec![a, b, c], rational(k));
            }
            p
        })
    }

    proptest! {
        #[test]
        fn ring_laws(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert!((&a - &a).is_zero());
        }

        #[test]
        fn canonical_form_has_no_zero_terms(a in arb_poly(), b in arb_poly()) {
            let s = &a + &b;
            prop_assert!(s.terms().iter().all(|(_, c)| **c != rational(0)));
            prop_assert_eq!(&(&s - &b) + &b, s.clone());
        }

        #[test]
        fn eval_is_a_homomorphism(a in arb_poly(), b in arb_poly(), x in -3i64..4, y in -3i64..4, z in 1i64..4) {
            let pt = [rational(x), rational(y), rational(z)];
            prop_assert_eq!((&a * &b).eval(&pt), a.eval(&pt) * b.eval(&pt));
            prop_assert_eq!((&a + &b).eval(&pt), a.eval(&pt) + b.eval(&pt));
        }
    }
}

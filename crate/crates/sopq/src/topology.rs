//! Stiefel-Whitney invariants of minima and the closed-form component counts.

use serde::Serialize;
use thiserror::Error;

use crate::chain::{torsion_determinant, Atom, FixedPointChain, Payload, Side};
use crate::minima::{classify_minimum, FamilyParams, MinimaError, MinimumKind};
use crate::poly::{MPoly, Ring};
use crate::{QPoly, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("cannot read off topological invariants: {0}")]
    Unclassified(String),
    #[error(transparent)]
    Minima(#[from] MinimaError),
}

/// `(a, b, c) ∈ H¹(X, Z₂) × H²(X, Z₂) × H²(X, Z₂)` and, for `p = 2` with
/// `a = 0`, the absolute Toledo invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopoInvariants {
    pub a: Vec<u8>,
    pub b: u8,
    pub c: u8,
    pub toledo: Option<i64>,
}

impl TopoInvariants {
    pub fn a_is_zero(&self) -> bool {
        self.a.iter().all(|&x| x == 0)
    }
}

/// A fixed class in `H¹(X, Z₂)` for each named 2-torsion atom: FNV-1a of the
/// name, folded into a nonzero vector of length `2g`.
pub fn atom_class(atom: &Atom, g: i64) -> Vec<u8> {
    let len = (2 * g) as usize;
    if atom.is_trivial() {
        return vec![0; len];
    }
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in atom.name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    let mut v: Vec<u8> = (0..len).map(|i| ((h >> (i % 64)) & 1) as u8).collect();
    if v.iter().all(|&x| x == 0) {
        v[0] = 1;
    }
    v
}

fn class_of_side(c: &FixedPointChain, side: Side) -> Vec<u8> {
    let names = torsion_determinant(c.nodes(), side);
    let mut a = vec![0u8; (2 * c.g()) as usize];
    for name in names {
        let atom = Atom::two_torsion(name);
        for (x, y) in a.iter_mut().zip(atom_class(&atom, c.g())) {
            *x ^= y;
        }
    }
    a
}

/// `sw2` of one side from its summands: slot flags plus `deg L mod 2` for
/// each pair `L ⊕ L^{-1}`. Cup products of first classes are not modelled,
/// so two summands with nonzero `sw1` make the answer unknown.
fn declared_sw2(c: &FixedPointChain, side: Side) -> Result<u8, TopologyError> {
    let mut sw2 = 0u8;
    let mut odd_w1 = 0;
    for (i, n) in c.nodes().iter().enumerate().filter(|(_, n)| n.side == side) {
        match &n.payload {
            Payload::Slot(s) => {
                sw2 ^= s.sw2;
                if !s.det_atom.is_trivial() {
                    odd_w1 += 1;
                }
            }
            Payload::Line(l) if c.is_self_paired(i) => {
                if l.torsion_part().is_some() {
                    odd_w1 += 1;
                }
            }
            Payload::Line(_) | Payload::Bundle(_) => {
                // Count each dual pair once, from its negative-weight member.
                let partner = c.partner(i);
                if n.weight < c.node(partner).weight
                    || (n.weight == c.node(partner).weight && i < partner)
                {
                    sw2 ^= (c.degree(i).rem_euclid(2)) as u8;
                }
            }
        }
    }
    if odd_w1 > 1 {
        return Err(TopologyError::Unclassified(format!(
            "{} has several summands with nonzero sw1",
            side.as_str()
        )));
    }
    Ok(sw2)
}

fn toledo(c: &FixedPointChain) -> i64 {
    c.nodes()
        .iter()
        .enumerate()
        .filter(|(_, n)| n.side == Side::V && n.weight < 0)
        .map(|(i, _)| c.degree(i))
        .sum::<i64>()
        .abs()
}

pub fn stiefel_whitney(c: &FixedPointChain) -> Result<TopoInvariants, TopologyError> {
    let v = classify_minimum(c)?;
    let g = c.g();
    let zero = vec![0u8; (2 * g) as usize];
    let p_even = c.p().is_multiple_of(2);
    let torsion_class = |name: &str| {
        if name == "O" || p_even {
            zero.clone()
        } else {
            atom_class(&Atom::two_torsion(name), g)
        }
    };
    let (a, b, cc) = match (&v.kind, &v.parameters) {
        (
            MinimumKind::Type2,
            FamilyParams::Type2 {
                torsion, w0_prime, ..
            },
        ) => {
            if w0_prime.iter().filter(|s| s.det_atom != "O").count() > 1 {
                return Err(TopologyError::Unclassified(
                    "W_0' has several summands with nonzero sw1".into(),
                ));
            }
            (
                torsion_class(torsion),
                0,
                w0_prime.iter().fold(0, |x, s| x ^ s.sw2),
            )
        }
        (MinimumKind::Type3, FamilyParams::Type3 { torsion }) => (torsion_class(torsion), 0, 0),
        (MinimumKind::Type4, FamilyParams::Type4 { deg_w_minus_p }) => {
            (zero.clone(), 0, deg_w_minus_p.rem_euclid(2) as u8)
        }
        (MinimumKind::ZeroField | MinimumKind::Type1, _) => (
            class_of_side(c, Side::W),
            declared_sw2(c, Side::V)?,
            declared_sw2(c, Side::W)?,
        ),
        (kind, _) => {
            return Err(TopologyError::Unclassified(format!(
                "chain is {}",
                kind.as_str()
            )))
        }
    };
    let toledo = (c.p() == 2 && a.iter().all(|&x| x == 0)).then(|| toledo(c));
    Ok(TopoInvariants {
        a,
        b,
        c: cc,
        toledo,
    })
}

/// An exact count, or a lower bound conjectured to be exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentCount {
    Exact(u64),
    LowerBound(u64),
}

impl ComponentCount {
    pub fn value(&self) -> u64 {
        match self {
            ComponentCount::Exact(n) | ComponentCount::LowerBound(n) => *n,
        }
    }
}

fn check(p: u32, q: u32, g: i64) -> Result<(u64, u64, u64), TopologyError> {
    if p == 0 || p > q {
        return Err(TopologyError::OutOfRange(format!(
            "need 1 ≤ p ≤ q, got ({p}, {q})"
        )));
    }
    if !(2..=30).contains(&g) {
        return Err(TopologyError::OutOfRange(format!(
            "genus must lie in 2..=30, got {g}"
        )));
    }
    Ok((p as u64, q as u64, g as u64))
}

fn pow2(e: u64) -> u64 {
    1u64 << e
}

/// Components of `M_{K^p}(SO(1, q))`.
pub fn count_so1q_kp(p: u32, q: u32, g: i64) -> Result<u64, TopologyError> {
    if p == 0 || q == 0 {
        return Err(TopologyError::OutOfRange(format!(
            "need p, q ≥ 1, got ({p}, {q})"
        )));
    }
    let (_, _, g) = check(1, 1, g)?;
    let p = p as u64;
    Ok(match q {
        1 => pow2(2 * g),
        2 => pow2(2 * g + 1) - 1 + p * (2 * g - 2),
        _ => pow2(2 * g + 1),
    })
}

/// Components of `M(SO(p, q))`.
pub fn count_components(p: u32, q: u32, g: i64) -> Result<ComponentCount, TopologyError> {
    let (pu, qu, gu) = check(p, q, g)?;
    let e = 2 * gu;
    Ok(match (p, q) {
        (1, _) => ComponentCount::Exact(count_so1q_kp(1, q, g)?),
        (2, 2) => ComponentCount::Exact(3 * (pow2(e + 1) - 1) + 2 * gu * (2 * gu - 3)),
        (2, 3) => ComponentCount::Exact(3 * pow2(e + 1) + 8 * gu - 13),
        (2, _) => ComponentCount::LowerBound(pow2(e + 2) - 4 + 4 * (gu - 1) + pow2(e + 1)),
        _ if qu == pu + 1 => {
            ComponentCount::Exact(pow2(e + 2) + pow2(e + 1) - 1 + 2 * pu * (gu - 1))
        }
        _ => ComponentCount::Exact(pow2(e + 2) + pow2(e + 1)),
    })
}

/// Components of `M^{a,b,c}(SO(p, q))` for `2 < p ≤ q`; `a` enters only
/// through whether it vanishes.
pub fn count_components_abc(
    p: u32,
    q: u32,
    g: i64,
    a_is_zero: bool,
    b: u8,
    c: u8,
) -> Result<u64, TopologyError> {
    let (pu, qu, gu) = check(p, q, g)?;
    if p <= 2 {
        return Err(TopologyError::OutOfRange(format!(
            "per-class counts need p > 2, got {p}"
        )));
    }
    if b > 1 || c > 1 {
        return Err(TopologyError::OutOfRange("b and c are bits".into()));
    }
    let odd = pu % 2 == 1;
    let (b0, c0) = (b == 0, c == 0);
    let hitchin = pu * (gu - 1);
    let tw = pow2(2 * gu);
    Ok(if qu > pu + 1 {
        match () {
            _ if odd && b0 => 2,
            _ if !odd && a_is_zero && b0 => tw + 1,
            _ => 1,
        }
    } else if qu == pu + 1 {
        match () {
            _ if odd && b0 && !a_is_zero => 2,
            _ if odd && a_is_zero && b0 && c0 => 2 + hitchin,
            _ if odd && a_is_zero && b0 => 1 + hitchin,
            _ if !odd && a_is_zero && b0 && c0 => 1 + tw + hitchin,
            _ if !odd && a_is_zero && b0 => tw + hitchin,
            _ => 1,
        }
    } else {
        match () {
            _ if odd && b0 && c0 => 3,
            _ if !odd && a_is_zero && b0 && c0 => 2 * tw + 1,
            _ => 1,
        }
    })
}

/// `Σ_{a,b,c} count_components_abc`, weighting the `a ≠ 0` classes by their
/// number `2^{2g} - 1`.
pub fn abc_total(p: u32, q: u32, g: i64) -> Result<u64, TopologyError> {
    let nonzero = pow2(2 * g as u64) - 1;
    let mut total = 0;
    for a_is_zero in [true, false] {
        for b in 0..2 {
            for c in 0..2 {
                let n = count_components_abc(p, q, g, a_is_zero, b, c)?;
                total += if a_is_zero { n } else { n * nonzero };
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    SOpq(u32, u32),
    SO1n(u32),
}

fn so_dim(n: i64) -> i64 {
    n * (n - 1) / 2
}

/// `dim(h)(g-1) + dim(m)(deg L + 1 - g)`.
pub fn expected_dim(group: Group, twist_deg: i64, g: i64) -> i64 {
    let (h, m) = match group {
        Group::SOpq(p, q) => (so_dim(p as i64) + so_dim(q as i64), p as i64 * q as i64),
        Group::SO1n(n) => (so_dim(n as i64), n as i64),
    };
    h * (g - 1) + m * (twist_deg + 1 - g)
}

/// `dim M_{K^p}(SO(1, q-p+1)) + Σ_{j<p} h⁰(K^{2j}) = dim M(SO(p, q))`.
pub fn psi_dim_check(p: u32, q: u32, g: i64) -> bool {
    if p == 0 || p > q {
        return false;
    }
    let pi = p as i64;
    let diffs: i64 = (1..pi).map(|j| (4 * j - 1) * (g - 1)).sum();
    expected_dim(Group::SO1n(q - p + 1), pi * (2 * g - 2), g) + diffs
        == expected_dim(Group::SOpq(p, q), 2 * g - 2, g)
}

/// Both sides of [`psi_dim_check`] as polynomials in `g` and `q` for a fixed
/// `p`.
pub fn psi_dim_polys(p: u32) -> (QPoly, QPoly) {
    let ring = Ring::new(&[("g", 1), ("q", 1)]);
    let c = |v: i64| MPoly::constant(&ring, Rational::from_integer(v.into()));
    let half = MPoly::constant(&ring, Rational::new(1.into(), 2.into()));
    let (g, q) = (MPoly::var(&ring, "g"), MPoly::var(&ring, "q"));
    let pi = p as i64;
    let so = |n: &QPoly| &(n * &(n - &c(1))) * &half;
    let g1 = &g - &c(1);
    let n = &(&q - &c(pi)) + &c(1);
    let lhs_so1n = &(&so(&n) * &g1) + &(&n * &(&(&c(pi) * &(&(&c(2) * &g) - &c(2))) - &g1));
    let diffs = (1..pi).fold(c(0), |acc, j| &acc + &(&c(4 * j - 1) * &g1));
    let lhs = &lhs_so1n + &diffs;
    let rhs = &(&(&so(&c(pi)) + &so(&q)) * &g1) + &(&(&c(pi) * &q) * &g1);
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_the_formulas() {
        assert_eq!(
            count_components(3, 5, 2).unwrap(),
            ComponentCount::Exact(96)
        );
        assert_eq!(
            count_components(3, 4, 2).unwrap(),
            ComponentCount::Exact(101)
        );
        assert_eq!(
            count_components(2, 3, 2).unwrap(),
            ComponentCount::Exact(99)
        );
        assert_eq!(
            count_components(2, 2, 2).unwrap(),
            ComponentCount::Exact(97)
        );
        assert_eq!(
            count_components(2, 5, 2).unwrap(),
            ComponentCount::LowerBound(96)
        );
        assert_eq!(
            count_components(1, 4, 2).unwrap(),
            ComponentCount::Exact(32)
        );
        assert!(count_components(4, 3, 2).is_err());
    }

    #[test]
    fn so1q_counts() {
        assert_eq!(count_so1q_kp(2, 2, 2).unwrap(), 35);
        assert_eq!(count_so1q_kp(5, 1, 2).unwrap(), 16);
        assert_eq!(count_so1q_kp(3, 7, 2).unwrap(), 32);
    }

    #[test]
    fn abc_sums_to_total() {
        for p in 3..=6 {
            for q in p..=8 {
                for g in 2..=4 {
                    assert_eq!(
                        abc_total(p, q, g).unwrap(),
                        count_components(p, q, g).unwrap().value(),
                        "({p},{q},{g})"
                    );
                }
            }
        }
    }

    #[test]
    fn dimensions() {
        assert_eq!(expected_dim(Group::SOpq(2, 3), 2, 2), 10);
        assert_eq!(expected_dim(Group::SO1n(2), 4, 2), 7);
        assert!(psi_dim_check(2, 3, 2));
        for p in 1..=5 {
            let (l, r) = psi_dim_polys(p);
            assert_eq!(l, r, "p = {p}");
        }
    }

    #[test]
    fn atom_classes_are_nonzero() {
        assert!(atom_class(&Atom::trivial(), 2).iter().all(|&x| x == 0));
        for name in ["I", "J", "I2"] {
            assert!(atom_class(&Atom::two_torsion(name), 3).contains(&1));
        }
    }
}

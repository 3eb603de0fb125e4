//! The Hitchin section, its invariant traces, the map Ψ and the C*-scaling
//! identity, all as exact symbolic computations.

use std::sync::Arc;

use thiserror::Error;

use crate::chain::{
    Atom, ChainBuilder, ChainError, FixedPointChain, LineClass, NodeRef, NodeSpec, Payload, Side,
};
use crate::linalg::{self, Scalar};
use crate::matrix::{MatrixError, SymMatrix};
use crate::poly::{MPoly, Ring};
use crate::{QMatrix, QPoly, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HitchinError {
    #[error("expected {expected} differentials for p = {p}, got {got}")]
    BadArity { p: u32, expected: usize, got: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// `K`-exponents `n, n-2, ..., -n`.
pub fn graded_k(n: i32) -> Vec<i32> {
    (0..=n).map(|i| n - 2 * i).collect()
}

/// The `p × (p-1)` band matrix `η(q_2, ..., q_{2p-2})` from
/// `I ⊗ (K^{p-2} ⊕ ... ⊕ K^{2-p})` to `I ⊗ (K^{p-1} ⊕ ... ⊕ K^{1-p}) ⊗ K`.
pub fn hitchin_eta<C: Scalar>(p: u32, coeffs: &[MPoly<C>]) -> Result<SymMatrix<C>, HitchinError> {
    let expected = p.saturating_sub(1) as usize;
    if p < 2 || coeffs.len() != expected {
        return Err(HitchinError::BadArity {
            p,
            expected,
            got: coeffs.len(),
        });
    }
    let ring = coeffs[0].ring().clone();
    let p = p as i32;
    Ok(SymMatrix::from_fn(
        &ring,
        graded_k(p - 1),
        graded_k(p - 2),
        1,
        |i, j| {
            if i == j + 1 {
                MPoly::one(&ring)
            } else if j >= i {
                coeffs[j - i].clone()
            } else {
                MPoly::zero(&ring)
            }
        },
    ))
}

/// Generic differentials `q2, ..., q_{2p-2}` in their own ring.
pub fn generic_coeffs(p: u32) -> Vec<QPoly> {
    let ring = Ring::differentials(p);
    (0..ring.len())
        .map(|i| MPoly::var_index(&ring, i))
        .collect()
}

fn constant_inverse<C: Scalar>(m: &SymMatrix<C>) -> Result<SymMatrix<C>, HitchinError> {
    let n = m.rows();
    if !m.is_square() {
        return Err(MatrixError::DimensionMismatch("form is not square".into()).into());
    }
    let zero_pt = vec![C::zero(); m.ring().len()];
    let mut aug: Vec<Vec<C>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(2 * n);
        for j in 0..n {
            let e = m.get(i, j);
            if e.num_terms() > 1 || e.homogeneous_weight().is_some_and(|w| w != 0) {
                return Err(HitchinError::ShapeMismatch(
                    "quadratic form must be constant".into(),
                ));
            }
            row.push(e.eval(&zero_pt));
        }
        row.extend((0..n).map(|j| if i == j { C::one() } else { C::zero() }));
        aug.push(row);
    }
    let pivots = linalg::rref(&mut aug);
    if pivots.len() < n || pivots.iter().any(|&c| c >= n) {
        return Err(HitchinError::ShapeMismatch(
            "quadratic form is degenerate".into(),
        ));
    }
    let ring = m.ring().clone();
    Ok(SymMatrix::from_fn(
        &ring,
        m.col_grades().to_vec(),
        m.row_grades().to_vec(),
        0,
        |i, j| MPoly::constant(&ring, aug[i][n + j].clone()),
    ))
}

/// `η* = Q_W^{-1} ηᵀ Q_V`.
pub fn eta_star<C: Scalar>(
    eta: &SymMatrix<C>,
    q_v: &SymMatrix<C>,
    q_w: &SymMatrix<C>,
) -> Result<SymMatrix<C>, HitchinError> {
    if q_v.rows() != eta.rows() || q_w.rows() != eta.cols() {
        return Err(MatrixError::DimensionMismatch(format!(
            "η is {}x{} but the forms have sizes {} and {}",
            eta.rows(),
            eta.cols(),
            q_v.rows(),
            q_w.rows()
        ))
        .into());
    }
    let m = constant_inverse(q_w)?
        .try_mul(&eta.transpose())?
        .try_mul(q_v)?;
    Ok(m.with_grades(
        eta.col_grades().to_vec(),
        eta.row_grades().to_vec(),
        eta.twist(),
    ))
}

/// The split forms used for the Hitchin section.
pub fn standard_forms<C: Scalar>(
    ring: &Arc<Ring>,
    p: usize,
    q: usize,
) -> (SymMatrix<C>, SymMatrix<C>) {
    (
        SymMatrix::antidiagonal(ring, p),
        SymMatrix::antidiagonal(ring, q),
    )
}

/// `Q = Q_V ⊕ -Q_W`.
pub fn total_form<C: Scalar>(
    q_v: &SymMatrix<C>,
    q_w: &SymMatrix<C>,
) -> Result<SymMatrix<C>, HitchinError> {
    let ring = q_v.ring();
    let zvw = SymMatrix::plain(ring, q_v.rows(), q_w.cols());
    let zwv = SymMatrix::plain(ring, q_w.rows(), q_v.cols());
    Ok(SymMatrix::block(q_v, &zvw, &zwv, &q_w.neg(), 0)?)
}

/// `Φ = [[0, η], [η*, 0]]` with the standard forms.
pub fn build_phi<C: Scalar>(eta: &SymMatrix<C>) -> Result<SymMatrix<C>, HitchinError> {
    let ring = eta.ring().clone();
    let (q_v, q_w) = standard_forms(&ring, eta.rows(), eta.cols());
    let star = eta_star(eta, &q_v, &q_w)?;
    let zv = SymMatrix::zeros(
        &ring,
        eta.row_grades().to_vec(),
        eta.row_grades().to_vec(),
        1,
    );
    let zw = SymMatrix::zeros(
        &ring,
        eta.col_grades().to_vec(),
        eta.col_grades().to_vec(),
        1,
    );
    Ok(SymMatrix::block(&zv, eta, &star, &zw, 1)?)
}

/// `ΦᵀQ + QΦ = 0` for `Q = Q_V ⊕ -Q_W`.
pub fn is_skew_adjoint<C: Scalar>(
    phi: &SymMatrix<C>,
    q: &SymMatrix<C>,
) -> Result<bool, HitchinError> {
    let lhs = phi.transpose().try_mul(q)?.try_add(&q.try_mul(phi)?)?;
    Ok(lhs.is_zero())
}

pub fn tr_power<C: Scalar>(phi: &SymMatrix<C>, k: u32) -> Result<MPoly<C>, HitchinError> {
    if !phi.is_square() {
        return Err(MatrixError::DimensionMismatch("trace of a non-square matrix".into()).into());
    }
    if k == 0 {
        return Ok(MPoly::constant(phi.ring(), C::from_i64(phi.rows() as i64)));
    }
    let mut acc = phi.clone();
    for _ in 1..k {
        acc = acc.try_mul(phi)?;
    }
    Ok(acc.trace())
}

/// `p₁ = ⅛ tr Φ²` and `p₂ = ⅛ [tr Φ⁴ - (20/64)(tr Φ²)²]`; for `p = 3` these
/// return `q₂` and `q₄`.
pub fn invariant_basis(phi: &QMatrix) -> Result<(QPoly, QPoly), HitchinError> {
    let t2 = tr_power(phi, 2)?;
    let t4 = tr_power(phi, 4)?;
    let eighth = linalg::rational_frac(1, 8);
    let p1 = t2.scale(&eighth);
    let p2 = (&t4 - &t2.pow(2).scale(&linalg::rational_frac(20, 64))).scale(&eighth);
    Ok((p1, p2))
}

/// The Higgs field `(η_Ŵ | η(q))` of Ψ̃ with `η̂ = (h_1, ..., h_n)` in the
/// top row of `η_Ŵ`.
pub fn psi_eta<C: Scalar>(
    p: u32,
    hat_eta: &[MPoly<C>],
    coeffs: &[MPoly<C>],
) -> Result<SymMatrix<C>, HitchinError> {
    let pi = p as i32;
    let ring = hat_eta
        .first()
        .or(coeffs.first())
        .map(|x| x.ring().clone())
        .ok_or_else(|| HitchinError::ShapeMismatch("empty Higgs data".into()))?;
    let n = hat_eta.len();
    let v_grades = graded_k(pi - 1);
    let mut w_grades = vec![0; n];
    if p >= 2 {
        w_grades.extend(graded_k(pi - 2));
    }
    let eta = if p >= 2 {
        Some(hitchin_eta(p, coeffs)?)
    } else {
        None
    };
    Ok(SymMatrix::from_fn(&ring, v_grades, w_grades, 1, |i, j| {
        if j < n {
            if i == 0 {
                hat_eta[j].clone()
            } else {
                MPoly::zero(&ring)
            }
        } else {
            eta.as_ref().unwrap().get(i, j - n).clone()
        }
    }))
}

/// Checks `g_V^{-1} (λη) g_W = Ψ̃(λ^p η̂, λ² q₂, ..., λ^{2p-2} q_{2p-2})` as a
/// polynomial identity. With `values`, the differentials are fixed to those
/// constants first.
pub fn gauge_scale_check(
    p: u32,
    q: u32,
    values: Option<&[Rational]>,
) -> Result<bool, HitchinError> {
    if p < 2 || q + 1 < p {
        return Err(HitchinError::ShapeMismatch(format!(
            "need 2 ≤ p ≤ q + 1, got ({p}, {q})"
        )));
    }
    let n = (q + 1 - p) as usize;
    let pi = p as i32;
    let mut vars: Vec<(String, i32)> = (1..pi).map(|j| (format!("q{}", 2 * j), 2 * j)).collect();
    vars.extend((1..=n).map(|i| (format!("h{i}"), pi)));
    vars.push(("lambda".into(), 0));
    let refs: Vec<(&str, i32)> = vars.iter().map(|(s, w)| (s.as_str(), *w)).collect();
    let ring = Ring::new(&refs);
    let nq = (p - 1) as usize;
    let lam = QPoly::var(&ring, "lambda");
    let mut qs: Vec<QPoly> = (0..nq).map(|i| QPoly::var_index(&ring, i)).collect();
    if let Some(vals) = values {
        if vals.len() != nq {
            return Err(HitchinError::BadArity {
                p,
                expected: nq,
                got: vals.len(),
            });
        }
        qs = vals
            .iter()
            .map(|v| QPoly::constant(&ring, v.clone()))
            .collect();
    }
    let hs: Vec<QPoly> = (0..n).map(|i| QPoly::var_index(&ring, nq + i)).collect();

    let eta = psi_eta(p, &hs, &qs)?;
    let lam_pow = |e: i32| {
        let mut ex = vec![0; ring.len()];
        ex[ring.len() - 1] = e;
        QPoly::monomial(&ring, ex, Rational::from_i64(1))
    };
    let gv_inv = SymMatrix::diagonal(
        &ring,
        eta.row_grades().to_vec(),
        (0..pi).map(|i| lam_pow(-(1 - pi + 2 * i))).collect(),
    );
    let mut gw_diag: Vec<QPoly> = (0..n).map(|_| QPoly::one(&ring)).collect();
    gw_diag.extend((0..pi - 1).map(|i| lam_pow(2 - pi + 2 * i)));
    let gw = SymMatrix::diagonal(&ring, eta.col_grades().to_vec(), gw_diag);
    let lhs = gv_inv.try_mul(&eta.scale(&lam))?.try_mul(&gw)?;

    let scaled_q: Vec<QPoly> = qs
        .iter()
        .enumerate()
        .map(|(j, x)| x * &lam_pow(2 * (j as i32 + 1)))
        .collect();
    let scaled_h: Vec<QPoly> = hs.iter().map(|h| h * &lam_pow(pi)).collect();
    let rhs = psi_eta(p, &scaled_h, &scaled_q)?;
    Ok(lhs.try_sub(&rhs)?.is_zero())
}

/// Chain data in the image of Ψ̃: summands of `V` and `W` together with the
/// symbolic Higgs field between them.
#[derive(Debug, Clone)]
pub struct PsiDatum {
    pub p: u32,
    pub q: u32,
    pub v: Vec<Payload>,
    pub w: Vec<Payload>,
    pub eta: QMatrix,
}

fn so1n_line(so1n: &FixedPointChain) -> Result<LineClass, HitchinError> {
    if so1n.p() != 1 {
        return Err(HitchinError::ShapeMismatch(format!(
            "expected an SO(1,n) chain, got p = {}",
            so1n.p()
        )));
    }
    let v = so1n
        .nodes()
        .iter()
        .find(|n| n.side == Side::V)
        .ok_or_else(|| HitchinError::ShapeMismatch("SO(1,n) chain without V".into()))?;
    match &v.payload {
        Payload::Line(l) if l.is_self_dual() => Ok(l.clone()),
        Payload::Slot(s) if s.rank == 1 => Ok(LineClass::new(s.det_atom.clone(), 1, 0)),
        _ => Err(HitchinError::ShapeMismatch(
            "V of an SO(1,n) chain must be a self-dual line".into(),
        )),
    }
}

fn check_so1n(p: u32, q: u32, so1n: &FixedPointChain) -> Result<LineClass, HitchinError> {
    if p == 0 || p > q {
        return Err(HitchinError::ShapeMismatch(format!(
            "need 1 ≤ p ≤ q, got ({p}, {q})"
        )));
    }
    if so1n.q() != q + 1 - p {
        return Err(HitchinError::ShapeMismatch(format!(
            "SO(1,{}) data does not fit SO({p},{q})",
            so1n.q()
        )));
    }
    if so1n.twist() != p as i64 {
        return Err(HitchinError::ShapeMismatch(format!(
            "SO(1,n) data must be K^{p}-twisted, got K^{}",
            so1n.twist()
        )));
    }
    so1n_line(so1n)
}

/// Assembles `(I ⊗ 𝒦_{p-1}, Ŵ ⊕ I ⊗ 𝒦_{p-2}, (η_Ŵ η(q)))`. The entries of
/// `η̂` are the variables `h1, ..., hn`.
pub fn psi_build(
    p: u32,
    q: u32,
    so1n: &FixedPointChain,
    coeffs: &[QPoly],
) -> Result<PsiDatum, HitchinError> {
    let i_line = check_so1n(p, q, so1n)?;
    let n = (q + 1 - p) as usize;
    let expected = (p - 1) as usize;
    if coeffs.len() != expected {
        return Err(HitchinError::BadArity {
            p,
            expected,
            got: coeffs.len(),
        });
    }
    let pi = p as i64;
    let v: Vec<Payload> = (0..pi)
        .map(|i| Payload::Line(i_line.twist(pi - 1 - 2 * i)))
        .collect();
    let mut w: Vec<Payload> = so1n
        .nodes()
        .iter()
        .filter(|n| n.side == Side::W)
        .map(|n| n.payload.clone())
        .collect();
    w.extend((0..pi - 1).map(|i| Payload::Line(i_line.twist(pi - 2 - 2 * i))));

    let mut names: Vec<(String, i32)> = coeffs
        .first()
        .map(|c| {
            (0..c.ring().len())
                .map(|i| (c.ring().name(i).to_string(), c.ring().weight(i)))
                .collect()
        })
        .unwrap_or_default();
    let base = names.len();
    names.extend((1..=n).map(|i| (format!("h{i}"), p as i32)));
    let refs: Vec<(&str, i32)> = names.iter().map(|(s, x)| (s.as_str(), *x)).collect();
    let ring = Ring::new(&refs);
    let embed: Vec<QPoly> = (0..base).map(|i| QPoly::var_index(&ring, i)).collect();
    let lifted: Vec<QPoly> = coeffs.iter().map(|c| c.substitute(&ring, &embed)).collect();
    let hs: Vec<QPoly> = (0..n).map(|i| QPoly::var_index(&ring, base + i)).collect();
    let eta = psi_eta(p, &hs, &lifted)?;
    Ok(PsiDatum { p, q, v, w, eta })
}

/// The C*-fixed point `Ψ̃((I, Ŵ, η̂), 0, ..., 0)` for a fixed point of the
/// `K^p`-twisted SO(1, q-p+1) moduli, as a chain
/// `W_{-p} → IK^{p-1} → IK^{p-2} → ... → IK^{1-p} → W_p` plus `W_0'`.
pub fn psi_fixed_point(
    p: u32,
    q: u32,
    so1n: &FixedPointChain,
) -> Result<FixedPointChain, HitchinError> {
    let i_line = check_so1n(p, q, so1n)?;
    let pi = p as i64;
    let mut b = ChainBuilder::new(p, q, so1n.g());
    for j in (1 - pi..=pi - 1).step_by(2) {
        b = b.node(NodeSpec::line(Side::V, j, i_line.twist(-j)));
    }
    for j in (2 - pi..=pi - 2).step_by(2) {
        b = b.node(NodeSpec::line(Side::W, j, i_line.twist(-j)));
    }
    let mut has_tail = false;
    for n in so1n.nodes().iter().filter(|n| n.side == Side::W) {
        match n.weight {
            0 => {
                b = b.node(NodeSpec::new(Side::W, 0, n.payload.clone()));
            }
            w if w.abs() == 1 => {
                has_tail = true;
                b = b.node(NodeSpec::new(Side::W, w * pi, n.payload.clone()));
            }
            w => {
                return Err(HitchinError::ShapeMismatch(format!(
                    "SO(1,n) fixed point has a summand at weight {w}"
                )))
            }
        }
    }
    // Unit arrows along the Hitchin part; at W weight 0 the Hitchin line
    // precedes the slots.
    for j in (1 - pi..pi - 1).step_by(2) {
        b = b.arrow(NodeRef::new(Side::V, j), NodeRef::new(Side::W, j + 1));
        b = b.arrow(NodeRef::new(Side::W, j + 1), NodeRef::new(Side::V, j + 2));
    }
    if has_tail {
        b = b.arrow(NodeRef::new(Side::W, -pi), NodeRef::new(Side::V, 1 - pi));
    }
    Ok(b.build()?)
}

/// `true` when an `SO(1,n)` chain is in the form expected by
/// [`psi_fixed_point`].
pub fn is_so1n_fixed_point(c: &FixedPointChain) -> bool {
    c.p() == 1 && so1n_line(c).is_ok() && c.nodes().iter().all(|n| n.weight.abs() <= 1)
}

/// The K^p-twisted SO(1,n) fixed point `W_{-1} → I → W_1` with
/// `deg W_{-1} = d`, plus a rank `n - 2` orthogonal slot.
pub fn so1n_tail_chain(
    n: u32,
    p: u32,
    g: i64,
    i_atom: Atom,
    d: i64,
    slot: Option<crate::chain::OrthoSlot>,
) -> Result<FixedPointChain, HitchinError> {
    let i_line = LineClass::new(i_atom, 1, 0);
    let ctx = crate::chain::GenusCtx::new(g)?;
    // At the top degree the map W_{-1} -> I ⊗ K^p is an isomorphism.
    let m = if d == p as i64 * ctx.deg_k() {
        i_line.twist(p as i64)
    } else {
        LineClass::new(Atom::free("M", d), 1, 0)
    };
    let mut b = ChainBuilder::new(1, n, g)
        .twist(p as i64)
        .node(NodeSpec::line(Side::V, 0, i_line))
        .node(NodeSpec::line(Side::W, -1, m.clone()))
        .node(NodeSpec::line(Side::W, 1, m.dual()))
        .arrow(NodeRef::new(Side::W, -1), NodeRef::new(Side::V, 0));
    if let Some(s) = slot {
        b = b.node(NodeSpec::new(Side::W, 0, Payload::Slot(s)));
    }
    Ok(b.build()?)
}

/// `tr Φ^k` for the Hitchin section of SO(p, p-1) with generic differentials.
pub fn hitchin_traces(p: u32, k_max: u32) -> Result<Vec<(u32, QPoly)>, HitchinError> {
    let phi = build_phi(&hitchin_eta(p, &generic_coeffs(p))?)?;
    (1..=k_max).map(|k| Ok((k, tr_power(&phi, k)?))).collect()
}

impl PsiDatum {
    pub fn is_graded(&self) -> bool {
        self.eta.graded_consistent()
    }

    pub fn rank_v(&self) -> u32 {
        self.v.iter().map(|x| x.rank()).sum()
    }

    pub fn rank_w(&self) -> u32 {
        self.w.iter().map(|x| x.rank()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{OrthoSlot, SlotStability};
    use crate::linalg::rational;

    #[test]
    fn eta_p3_matches_band_pattern() {
        let eta = hitchin_eta(3, &generic_coeffs(3)).unwrap();
        assert_eq!(
            eta.to_strings(),
            vec![vec!["q2", "q4"], vec!["1", "q2"], vec!["0", "1"]]
        );
        assert!(eta.graded_consistent());
    }

    #[test]
    fn eta_p2_is_a_column() {
        let eta = hitchin_eta(2, &generic_coeffs(2)).unwrap();
        assert_eq!(eta.to_strings(), vec![vec!["q2"], vec!["1"]]);
        let phi = build_phi(&eta).unwrap();
        let star: Vec<String> = (0..2).map(|j| phi.get(2, j).to_string()).collect();
        assert_eq!(star, vec!["1", "q2"]);
    }

    #[test]
    fn bad_arity() {
        let c = generic_coeffs(3);
        assert!(matches!(
            hitchin_eta(4, &c),
            Err(HitchinError::BadArity { .. })
        ));
    }

    #[test]
    fn traces_p3() {
        let phi = build_phi(&hitchin_eta(3, &generic_coeffs(3)).unwrap()).unwrap();
        assert_eq!(tr_power(&phi, 2).unwrap().to_string(), "8*q2");
        assert_eq!(tr_power(&phi, 4).unwrap().to_string(), "20*q2^2 + 8*q4");
        assert!(tr_power(&phi, 1).unwrap().is_zero());
        assert!(tr_power(&phi, 3).unwrap().is_zero());
        let (p1, p2) = invariant_basis(&phi).unwrap();
        assert_eq!((p1.to_string(), p2.to_string()), ("q2".into(), "q4".into()));
    }

    #[test]
    fn zero_differentials_give_a_nilpotent_field() {
        let ring = Ring::differentials(4);
        let zeros = vec![QPoly::zero(&ring); 3];
        let phi = build_phi(&hitchin_eta(4, &zeros).unwrap()).unwrap();
        let mut acc = phi.clone();
        for _ in 0..7 {
            acc = acc.try_mul(&phi).unwrap();
        }
        assert!(acc.is_zero());
    }

    #[test]
    fn gauge_identity_small_cases() {
        for (p, q) in [(2, 3), (3, 4), (4, 4)] {
            assert!(gauge_scale_check(p, q, None).unwrap(), "({p},{q})");
        }
        let vals = [rational(2), rational(-1)];
        assert!(gauge_scale_check(3, 4, Some(&vals)).unwrap());
    }

    #[test]
    fn psi_fixed_point_so23() {
        let so12 = so1n_tail_chain(2, 2, 2, Atom::trivial(), 3, None).unwrap();
        let c = psi_fixed_point(2, 3, &so12).unwrap();
        assert_eq!(c.nodes().len(), 5);
        assert_eq!(c.arrows().len(), 4);
    }

    #[test]
    fn psi_build_shapes() {
        let slot = OrthoSlot {
            rank: 2,
            det_atom: Atom::trivial(),
            sw2: 0,
            stability: SlotStability::Stable,
        };
        let so14 = so1n_tail_chain(4, 3, 2, Atom::trivial(), 1, Some(slot)).unwrap();
        let d = psi_build(3, 6, &so14, &generic_coeffs(3)).unwrap();
        assert_eq!((d.rank_v(), d.rank_w()), (3, 6));
        assert_eq!((d.eta.rows(), d.eta.cols()), (3, 6));
        assert!(d.is_graded());
    }
}

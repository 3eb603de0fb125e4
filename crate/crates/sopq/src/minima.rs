//! Local minima of the Hitchin function among C*-fixed points.
//!
//! A fixed point with nonzero Higgs field is a minimum exactly when it is one
//! of four chain shapes. Each shape has a matcher here; chains matching none
//! are rejected with the most specific reason available: the first positive
//! weight at which `ad_η` fails to be an isomorphism, a nonvanishing `H²`, or
//! the template condition that fails.

use serde::Serialize;
use thiserror::Error;

use crate::chain::{
    torsion_determinant, Atom, ChainBuilder, ChainError, ChainKind, ChainNode, FixedPointChain,
    LineClass, NodeRef, NodeSpec, OrthoSlot, Payload, Side, SlotStability,
};
use crate::grading::{ad_eta, hyper_dims, sheaf_iso_verdict, weight_range, Genericity};
use crate::hitchin::{psi_fixed_point, so1n_tail_chain, HitchinError};
use crate::stability::{polystable_decompose, stability_status, StabilityError, StabilityStatus};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MinimaError {
    #[error("not a C*-fixed point: {0}")]
    NotAFixedPoint(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("split-isotropic chain with a rank-one block; give it as an integral chain")]
    NeedsIntegralPresentation,
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Hitchin(#[from] HitchinError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum MinimumKind {
    ZeroField,
    Type1,
    Type2,
    Type3,
    Type4,
    NotMinimum,
}

impl MinimumKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MinimumKind::ZeroField => "ZeroField",
            MinimumKind::Type1 => "Type1",
            MinimumKind::Type2 => "Type2",
            MinimumKind::Type3 => "Type3",
            MinimumKind::Type4 => "Type4",
            MinimumKind::NotMinimum => "NotMinimum",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SlotSummary {
    pub rank: u32,
    pub det_atom: String,
    pub sw2: u8,
    pub stability: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "family", rename_all = "camelCase")]
pub enum FamilyParams {
    None,
    #[serde(rename_all = "camelCase")]
    Type1 {
        deg_v_minus1: Option<i64>,
    },
    #[serde(rename_all = "camelCase")]
    Type2 {
        torsion: String,
        w0_prime: Vec<SlotSummary>,
        polystable_only: bool,
    },
    Type3 {
        torsion: String,
    },
    #[serde(rename_all = "camelCase")]
    Type4 {
        deg_w_minus_p: i64,
    },
}

/// Agreement between the template verdict and the weight sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CriterionCheck {
    pub sweep_all_iso: bool,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MinimumVerdict {
    pub kind: MinimumKind,
    pub parameters: FamilyParams,
    pub reason: String,
    /// Present for stable chains with `p ≠ 2` whose `H²` vanishes.
    pub criterion_check: Option<CriterionCheck>,
}

/// The nodes of an alternating string `lo -> lo+1 -> ... -> hi` whose line
/// at weight `j` satisfies `expect(j, line)`.
fn find_string(
    c: &FixedPointChain,
    first: Side,
    lo: i64,
    hi: i64,
    expect: &dyn Fn(i64, &LineClass) -> bool,
) -> Result<Vec<usize>, String> {
    let mut out: Vec<usize> = Vec::new();
    let mut side = first;
    for j in lo..=hi {
        let found = c.nodes_at(side, j).into_iter().find(|&i| {
            let ok_line = c.node(i).payload.as_line().is_some_and(|l| expect(j, l));
            let linked = out
                .last()
                .is_none_or(|&prev| c.arrows().iter().any(|a| a.from == prev && a.to == i));
            ok_line && linked
        });
        match found {
            Some(i) => out.push(i),
            None => {
                return Err(format!(
                    "no suitable line {}[{j}] in the string",
                    side.as_str()
                ))
            }
        }
        side = side.other();
    }
    Ok(out)
}

/// The string's own arrows are the only arrows of the chain.
fn only_string_arrows(c: &FixedPointChain, s: &[usize]) -> Result<(), String> {
    let extra = c
        .arrows()
        .iter()
        .find(|a| !s.windows(2).any(|w| w[0] == a.from && w[1] == a.to));
    match extra {
        Some(a) => Err(format!(
            "extra arrow {}[{}] -> {}[{}]",
            c.node(a.from).side.as_str(),
            c.node(a.from).weight,
            c.node(a.to).side.as_str(),
            c.node(a.to).weight
        )),
        None => Ok(()),
    }
}

fn torsion_name(l: &LineClass) -> String {
    l.torsion_part()
        .map(|a| a.name.clone())
        .unwrap_or_else(|| "O".into())
}

fn complement(c: &FixedPointChain, s: &[usize]) -> Vec<usize> {
    (0..c.nodes().len()).filter(|i| !s.contains(i)).collect()
}

/// `I` from the line `I ⊗ K^{-j}` at weight `j`, when `I` is 2-torsion.
fn torsion_from(j: i64, l: &LineClass) -> Option<LineClass> {
    let i = l.twist(j);
    i.is_self_dual().then_some(i)
}

fn candidates(c: &FixedPointChain, side: Side, j: i64) -> Vec<LineClass> {
    c.nodes_at(side, j)
        .into_iter()
        .filter_map(|i| c.node(i).payload.as_line().and_then(|l| torsion_from(j, l)))
        .collect()
}

fn match_type1(c: &FixedPointChain) -> Result<FamilyParams, String> {
    if c.p() != 2 {
        return Err("Type1 needs p = 2".into());
    }
    let (lo, hi) = (c.nodes_at(Side::V, -1), c.nodes_at(Side::V, 1));
    let (Some(&a), Some(&b)) = (lo.first(), hi.first()) else {
        return Err("Type1 needs V = V_{-1} ⊕ V_1".into());
    };
    if lo.len() != 1
        || c.node(a).payload.as_line().is_none()
        || c.node(b).payload.as_line().is_none()
    {
        return Err("Type1 needs line bundles V_{±1}".into());
    }
    if let Some(n) = c
        .nodes()
        .iter()
        .find(|n| n.side == Side::W && n.weight != 0)
    {
        return Err(format!("Type1 needs W = W_0, found W[{}]", n.weight));
    }
    if !c.arrows().iter().any(|x| x.from == a) {
        return Err("Type1 needs η_0 ≠ 0".into());
    }
    let d = c.degree(a);
    if d <= 0 || d >= c.ctx().deg_k() {
        return Err(format!("Type1 needs 0 < deg V_{{-1}} < 2g-2, got {d}"));
    }
    Ok(FamilyParams::Type1 {
        deg_v_minus1: Some(d),
    })
}

fn slot_summary(n: &ChainNode) -> SlotSummary {
    match &n.payload {
        Payload::Slot(s) => SlotSummary {
            rank: s.rank,
            det_atom: s.det_atom.name.clone(),
            sw2: s.sw2,
            stability: s.stability.as_str().into(),
        },
        Payload::Line(l) => SlotSummary {
            rank: 1,
            det_atom: torsion_name(l),
            sw2: 0,
            stability: "stable".into(),
        },
        Payload::Bundle(b) => SlotSummary {
            rank: b.rank,
            det_atom: "?".into(),
            sw2: 0,
            stability: "?".into(),
        },
    }
}

fn match_type2(c: &FixedPointChain) -> Result<FamilyParams, String> {
    let p = c.p() as i64;
    let (lo, hi) = (1 - p, p - 1);
    let mut last = String::from("Type2 needs V_{1-p} = I K^{p-1} with I 2-torsion");
    for i_line in candidates(c, Side::V, lo) {
        let s = match find_string(c, Side::V, lo, hi, &|j, l| *l == i_line.twist(-j)) {
            Ok(s) => s,
            Err(e) => {
                last = format!("Type2: {e}");
                continue;
            }
        };
        only_string_arrows(c, &s).map_err(|e| format!("Type2: {e}"))?;
        let rest = complement(c, &s);
        let extras: Vec<ChainNode> = rest.iter().map(|&i| c.node(i).clone()).collect();
        if let Some(n) = extras.iter().find(|n| n.side != Side::W || n.weight != 0) {
            return Err(format!(
                "Type2: unexpected summand {}[{}]",
                n.side.as_str(),
                n.weight
            ));
        }
        if extras.iter().any(|n| !n.payload.is_self_dual()) {
            return Err("Type2: W_0' must be orthogonal".into());
        }
        let want: Vec<String> = i_line
            .torsion_part()
            .map(|a| vec![a.name.clone()])
            .unwrap_or_default();
        if torsion_determinant(&extras, Side::W) != want {
            return Err(format!("Type2: det W_0' must be {}", torsion_name(&i_line)));
        }
        let stable = extras.len() == 1
            && match &extras[0].payload {
                Payload::Slot(s) => s.stability == SlotStability::Stable,
                _ => true,
            };
        return Ok(FamilyParams::Type2 {
            torsion: torsion_name(&i_line),
            w0_prime: extras.iter().map(slot_summary).collect(),
            polystable_only: !stable,
        });
    }
    Err(last)
}

fn match_type3(c: &FixedPointChain) -> Result<FamilyParams, String> {
    let p = c.p() as i64;
    if c.p() != c.q() {
        return Err("Type3 needs p = q".into());
    }
    let (lo, hi) = (1 - p, p - 1);
    let mut last = String::from("Type3 needs W_{1-p} = I K^{p-1} with I 2-torsion");
    for i_line in candidates(c, Side::W, lo) {
        let s = match find_string(c, Side::W, lo, hi, &|j, l| *l == i_line.twist(-j)) {
            Ok(s) => s,
            Err(e) => {
                last = format!("Type3: {e}");
                continue;
            }
        };
        only_string_arrows(c, &s).map_err(|e| format!("Type3: {e}"))?;
        let rest = complement(c, &s);
        let ok = rest.len() == 1 && {
            let n = c.node(rest[0]);
            n.side == Side::V && n.weight == 0 && n.payload.as_line() == Some(&i_line)
        };
        if !ok {
            return Err(format!(
                "Type3: the extra summand must be V_0 = {}",
                torsion_name(&i_line)
            ));
        }
        return Ok(FamilyParams::Type3 {
            torsion: torsion_name(&i_line),
        });
    }
    Err(last)
}

fn match_type4(c: &FixedPointChain) -> Result<FamilyParams, String> {
    let p = c.p() as i64;
    if c.q() != c.p() + 1 {
        return Err("Type4 needs q = p + 1".into());
    }
    let ctx = c.ctx();
    let top = p * ctx.deg_k();
    let s = find_string(c, Side::W, -p, p, &|j, l| {
        j.abs() == p || *l == LineClass::k_power(-j)
    })
    .map_err(|e| format!("Type4: {e}"))?;
    only_string_arrows(c, &s).map_err(|e| format!("Type4: {e}"))?;
    if s.len() != c.nodes().len() {
        return Err("Type4: extra summands".into());
    }
    let d = c.degree(s[0]);
    if d <= 0 || d > top {
        return Err(format!(
            "Type4 needs 0 < deg W_{{-p}} ≤ p(2g-2) = {top}, got {d}"
        ));
    }
    Ok(FamilyParams::Type4 { deg_w_minus_p: d })
}

type Matcher = fn(&FixedPointChain) -> Result<FamilyParams, String>;

const TEMPLATES: [(MinimumKind, Matcher); 4] = [
    (MinimumKind::Type1, match_type1),
    (MinimumKind::Type2, match_type2),
    (MinimumKind::Type3, match_type3),
    (MinimumKind::Type4, match_type4),
];

/// Every template the chain matches, with the mismatch reasons of the rest.
pub fn template_matches(c: &FixedPointChain) -> (Vec<(MinimumKind, FamilyParams)>, Vec<String>) {
    let mut hits = Vec::new();
    let mut misses = Vec::new();
    for (kind, m) in TEMPLATES {
        match m(c) {
            Ok(params) => hits.push((kind, params)),
            Err(e) => misses.push(e),
        }
    }
    (hits, misses)
}

/// First positive weight at which `ad_η` is not an isomorphism of sheaves.
pub fn first_non_iso_weight(c: &FixedPointChain) -> Option<(i64, String)> {
    (1..=*weight_range(c).end()).find_map(|k| {
        let (ok, why) = sheaf_iso_verdict(&ad_eta(c, k));
        (!ok).then_some((k, why))
    })
}

/// `Some(true)` if `H²` certainly vanishes, `Some(false)` with the weight if
/// it certainly does not, `None` when the bookkeeping cannot decide.
fn h2_vanishes(c: &FixedPointChain) -> Result<Option<(bool, i64)>, MinimaError> {
    let mut undecided = false;
    for k in weight_range(c) {
        let h = hyper_dims(c, k, Genericity::Special)
            .map_err(|e| MinimaError::NotAFixedPoint(e.to_string()))?;
        if h.h2.lo > 0 {
            return Ok(Some((false, k)));
        }
        if !h.h2.is_zero() {
            undecided = true;
        }
    }
    Ok(if undecided { None } else { Some((true, 0)) })
}

fn verdict(
    kind: MinimumKind,
    parameters: FamilyParams,
    reason: impl Into<String>,
) -> MinimumVerdict {
    MinimumVerdict {
        kind,
        parameters,
        reason: reason.into(),
        criterion_check: None,
    }
}

pub fn classify_minimum(c: &FixedPointChain) -> Result<MinimumVerdict, MinimaError> {
    let status = stability_status(c)?;
    if !status.is_polystable() {
        return Err(MinimaError::NotAFixedPoint(format!(
            "chain is {status}, not polystable"
        )));
    }
    if !c.has_arrows() {
        return Ok(verdict(MinimumKind::ZeroField, FamilyParams::None, "η = 0"));
    }
    let so22 = c.p() == 2 && c.q() == 2;
    if c.kind() == ChainKind::SplitIsotropic {
        if so22 {
            return Ok(verdict(
                MinimumKind::Type1,
                FamilyParams::Type1 { deg_v_minus1: None },
                "every fixed point of M(SO(2,2)) is a local minimum",
            ));
        }
        let side_rank = |side| {
            c.nodes()
                .iter()
                .filter(|n| n.side == side && n.sub == 0)
                .map(|n| n.payload.rank())
                .sum::<u32>()
        };
        let (p1, q1) = (side_rank(Side::V), side_rank(Side::W));
        if p1 > 1 && q1 > 1 {
            return Ok(verdict(
                MinimumKind::NotMinimum,
                FamilyParams::None,
                format!("U({p1},{q1})-type block with p1, q1 > 1 and nonzero Higgs field"),
            ));
        }
        return Err(MinimaError::NeedsIntegralPresentation);
    }

    let (hits, misses) = template_matches(c);
    let matched = hits.first().cloned();
    let mut out = match matched {
        Some((kind, params)) => verdict(
            kind,
            params,
            format!("matches the {} template", kind.as_str()),
        ),
        None if so22 => verdict(
            MinimumKind::Type1,
            FamilyParams::Type1 {
                deg_v_minus1: c.nodes_at(Side::V, -1).first().map(|&i| c.degree(i)),
            },
            "every fixed point of M(SO(2,2)) is a local minimum",
        ),
        None => {
            let reason = if let Some((k, why)) = first_non_iso_weight(c) {
                format!("ad_eta is not an isomorphism at weight {k}: {why}")
            } else if let Some((false, k)) = h2_vanishes(c)? {
                format!("H^2 of the deformation complex is nonzero at weight {k}")
            } else if status == StabilityStatus::StrictlyPolystable {
                let d = polystable_decompose(c)?;
                let blocks: Vec<String> = d
                    .upq_parts
                    .iter()
                    .map(|u| format!("U({},{})", u.p1(c), u.q1(c)))
                    .collect();
                format!(
                    "strictly polystable with summands [{}] besides a nonzero Higgs field; {}",
                    blocks.join(", "),
                    misses.join("; ")
                )
            } else {
                format!("no template matches: {}", misses.join("; "))
            };
            verdict(MinimumKind::NotMinimum, FamilyParams::None, reason)
        }
    };

    if status == StabilityStatus::Stable && c.p() != 2 {
        if let Some((true, _)) = h2_vanishes(c)? {
            let sweep_all_iso = first_non_iso_weight(c).is_none();
            let is_min = out.kind != MinimumKind::NotMinimum;
            out.criterion_check = Some(CriterionCheck {
                sweep_all_iso,
                agrees: sweep_all_iso == is_min,
            });
        }
    }
    Ok(out)
}

/// A connected family of minima, with the topological class it lies in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MinimaFamily {
    pub kind: MinimumKind,
    pub descriptor: String,
    /// Whether `sw1(W)` vanishes on this family.
    pub a_is_zero: bool,
    pub b: u8,
    pub c: u8,
    /// Number of components this family accounts for.
    pub count: u64,
    #[serde(skip)]
    pub representative: Option<FixedPointChain>,
}

fn pow2(e: i64) -> u64 {
    1u64 << e
}

fn torsion_atom(zero: bool) -> Atom {
    if zero {
        Atom::trivial()
    } else {
        Atom::two_torsion("I")
    }
}

fn zero_field_rep(
    p: u32,
    q: u32,
    g: i64,
    a_zero: bool,
    b: u8,
    c: u8,
) -> Result<FixedPointChain, ChainError> {
    let det = torsion_atom(a_zero);
    let slot = |rank, sw2| {
        Payload::Slot(OrthoSlot {
            rank,
            det_atom: det.clone(),
            sw2,
            stability: SlotStability::Stable,
        })
    };
    ChainBuilder::new(p, q, g)
        .node(NodeSpec::new(Side::V, 0, slot(p, b)))
        .node(NodeSpec::new(Side::W, 0, slot(q, c)))
        .build()
}

fn so1n_slot_chain(
    n: u32,
    p: u32,
    g: i64,
    i_atom: Atom,
    slot: OrthoSlot,
) -> Result<FixedPointChain, ChainError> {
    ChainBuilder::new(1, n, g)
        .twist(p as i64)
        .node(NodeSpec::line(Side::V, 0, LineClass::new(i_atom, 1, 0)))
        .node(NodeSpec::new(Side::W, 0, Payload::Slot(slot)))
        .build()
}

fn type3_rep(p: u32, g: i64, i_atom: Atom) -> Result<FixedPointChain, ChainError> {
    let pi = p as i64;
    let i_line = LineClass::new(i_atom, 1, 0);
    let mut b = ChainBuilder::new(p, p, g);
    for j in (1 - pi..=pi - 1).step_by(2) {
        b = b.node(NodeSpec::line(Side::W, j, i_line.twist(-j)));
    }
    for j in (2 - pi..=pi - 2).step_by(2) {
        b = b.node(NodeSpec::line(Side::V, j, i_line.twist(-j)));
    }
    // The isolated copy of I goes after the string node at V_0.
    b = b.node(NodeSpec::line(Side::V, 0, i_line));
    for j in 1 - pi..pi - 1 {
        let side = if (j - (1 - pi)) % 2 == 0 {
            Side::W
        } else {
            Side::V
        };
        b = b.arrow(NodeRef::new(side, j), NodeRef::new(side.other(), j + 1));
    }
    b.build()
}

/// The minima families of `SO(p, q)` for `2 < p ≤ q`, one entry per
/// topological class of each type.
pub fn enumerate_minima_families(p: u32, q: u32, g: i64) -> Result<Vec<MinimaFamily>, MinimaError> {
    if p <= 2 || p > q {
        return Err(MinimaError::OutOfRange(format!(
            "need 2 < p ≤ q, got ({p}, {q})"
        )));
    }
    if g < 2 {
        return Err(MinimaError::OutOfRange(format!(
            "genus must be at least 2, got {g}"
        )));
    }
    let nonzero = pow2(2 * g) - 1;
    let class_count = |a_zero: bool| if a_zero { 1 } else { nonzero };
    let mut out = Vec::new();

    for a_zero in [true, false] {
        for b in 0..2u8 {
            for c in 0..2u8 {
                out.push(MinimaFamily {
                    kind: MinimumKind::ZeroField,
                    descriptor: format!(
                        "η = 0, sw1 {}, sw2(V) {b}, sw2(W) {c}",
                        if a_zero { "0" } else { "≠ 0" }
                    ),
                    a_is_zero: a_zero,
                    b,
                    c,
                    count: class_count(a_zero),
                    representative: Some(zero_field_rep(p, q, g, a_zero, b, c)?),
                });
            }
        }
    }

    let n = q - p + 1;
    let p_even = p.is_multiple_of(2);
    for i_zero in [true, false] {
        for sw2 in 0..2u8 {
            // O(1) bundles have no sw2; an O(2) bundle with sw1 = 0 is
            // L ⊕ L^{-1} with deg L = 0.
            if sw2 == 1 && (n == 1 || (n == 2 && i_zero)) {
                continue;
            }
            let stability = if n == 2 && i_zero {
                SlotStability::Polystable
            } else {
                SlotStability::Stable
            };
            let slot = OrthoSlot {
                rank: n,
                det_atom: torsion_atom(i_zero),
                sw2,
                stability,
            };
            let so1n = so1n_slot_chain(n, p, g, torsion_atom(i_zero), slot)?;
            out.push(MinimaFamily {
                kind: MinimumKind::Type2,
                descriptor: format!(
                    "W_0' in O({n}) with det {}, sw2 {sw2}",
                    if i_zero { "O" } else { "I ≠ O" }
                ),
                a_is_zero: p_even || i_zero,
                b: 0,
                c: sw2,
                count: class_count(i_zero),
                representative: Some(psi_fixed_point(p, q, &so1n)?),
            });
        }
    }

    if p == q {
        for i_zero in [true, false] {
            out.push(MinimaFamily {
                kind: MinimumKind::Type3,
                descriptor: format!("V_0 = I ⊕ I with I {}", if i_zero { "= O" } else { "≠ O" }),
                a_is_zero: p_even || i_zero,
                b: 0,
                c: 0,
                count: class_count(i_zero),
                representative: Some(type3_rep(p, g, torsion_atom(i_zero))?),
            });
        }
    }

    if q == p + 1 {
        let top = p as i64 * (2 * g - 2);
        for d in 1..=top {
            let so1n = so1n_tail_chain(2, p, g, Atom::trivial(), d, None)?;
            out.push(MinimaFamily {
                kind: MinimumKind::Type4,
                descriptor: format!("deg W_{{-p}} = {d}"),
                a_is_zero: true,
                b: 0,
                c: (d % 2) as u8,
                count: 1,
                representative: Some(psi_fixed_point(p, q, &so1n)?),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_chain;

    fn stable_slot(rank: u32, det: Atom) -> Payload {
        Payload::Slot(OrthoSlot {
            rank,
            det_atom: det,
            sw2: 0,
            stability: SlotStability::Stable,
        })
    }

    fn type1(d: i64, q: u32) -> FixedPointChain {
        let l = Atom::free("L", d);
        build_chain(
            2,
            q,
            2,
            &[
                NodeSpec::line(Side::V, -1, LineClass::new(l.clone(), 1, 0)),
                NodeSpec::new(Side::W, 0, stable_slot(q, Atom::trivial())),
                NodeSpec::line(Side::V, 1, LineClass::new(l, -1, 0)),
            ],
            &[(NodeRef::new(Side::V, -1), NodeRef::new(Side::W, 0))],
        )
        .unwrap()
    }

    #[test]
    fn zero_field_and_type1() {
        let v = classify_minimum(&type1(1, 3)).unwrap();
        assert_eq!(v.kind, MinimumKind::Type1);
        assert_eq!(
            v.parameters,
            FamilyParams::Type1 {
                deg_v_minus1: Some(1)
            }
        );
        let r = zero_field_rep(3, 5, 2, true, 0, 1).unwrap();
        assert_eq!(classify_minimum(&r).unwrap().kind, MinimumKind::ZeroField);
    }

    #[test]
    fn type1_degree_bound() {
        let v = classify_minimum(&type1(2, 3)).unwrap();
        assert_eq!(v.kind, MinimumKind::NotMinimum);
        assert!(v.reason.contains("0 < deg V_{-1} < 2g-2"), "{}", v.reason);
    }

    #[test]
    fn type1_shape_inside_p3_fails_at_weight_one() {
        let l = Atom::free("L", 2);
        let c = build_chain(
            3,
            4,
            2,
            &[
                NodeSpec::line(Side::V, -1, LineClass::new(l.clone(), 1, 0)),
                NodeSpec::line(Side::V, 0, LineClass::k_power(0)),
                NodeSpec::new(Side::W, 0, stable_slot(4, Atom::trivial())),
                NodeSpec::line(Side::V, 1, LineClass::new(l, -1, 0)),
            ],
            &[(NodeRef::new(Side::V, -1), NodeRef::new(Side::W, 0))],
        )
        .unwrap();
        let v = classify_minimum(&c).unwrap();
        assert_eq!(v.kind, MinimumKind::NotMinimum);
        assert!(v.reason.contains("weight 1"), "{}", v.reason);
    }

    #[test]
    fn family_representatives_reclassify() {
        for (p, q) in [(3, 5), (3, 4), (4, 5), (3, 3), (4, 4)] {
            for f in enumerate_minima_families(p, q, 2).unwrap() {
                let rep = f.representative.as_ref().unwrap();
                let v = classify_minimum(rep).unwrap();
                assert_eq!(v.kind, f.kind, "({p},{q}) {}: {}", f.descriptor, v.reason);
                if let Some(cc) = &v.criterion_check {
                    assert!(cc.agrees, "({p},{q}) {}", f.descriptor);
                }
            }
        }
    }

    #[test]
    fn family_totals() {
        let total = |p, q| {
            enumerate_minima_families(p, q, 2)
                .unwrap()
                .iter()
                .map(|f| f.count)
                .sum::<u64>()
        };
        assert_eq!(total(3, 5), 96);
        assert_eq!(total(3, 4), 101);
        assert_eq!(total(3, 3), 96);
        assert!(enumerate_minima_families(2, 4, 2).is_err());
    }

    #[test]
    fn templates_are_exclusive() {
        for (p, q) in [(3, 4), (4, 4), (4, 5)] {
            for f in enumerate_minima_families(p, q, 2).unwrap() {
                let (hits, _) = template_matches(f.representative.as_ref().unwrap());
                assert!(hits.len() <= 1, "{}", f.descriptor);
            }
        }
    }
}

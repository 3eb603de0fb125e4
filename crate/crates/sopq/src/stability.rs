//! Stability of fixed-point chains through summand-generated isotropic,
//! Higgs-invariant pairs `(V_1, W_1)`.
//!
//! A pair is a set `S` of nodes closed under every arrow, containing no node
//! together with its dual and no self-paired node. Orthogonal slots enter
//! only as whole summands; their own subbundles are represented by their
//! declared stability flag.

use std::fmt;

use thiserror::Error;

use crate::chain::{ChainError, FixedPointChain, Payload, Side, SlotStability};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StabilityStatus {
    Stable,
    StrictlyPolystable,
    SemistableNotPolystable,
    Unstable,
}

impl StabilityStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            StabilityStatus::Stable => "stable",
            StabilityStatus::StrictlyPolystable => "strictly_polystable",
            StabilityStatus::SemistableNotPolystable => "semistable_not_polystable",
            StabilityStatus::Unstable => "unstable",
        }
    }

    pub fn is_semistable(&self) -> bool {
        !matches!(self, StabilityStatus::Unstable)
    }

    pub fn is_polystable(&self) -> bool {
        matches!(
            self,
            StabilityStatus::Stable | StabilityStatus::StrictlyPolystable
        )
    }
}

impl fmt::Display for StabilityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StabilityError {
    #[error("stability depends on the unspecified orthogonal slot {0}")]
    UnspecifiedSlotStability(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("chain is not strictly polystable ({0})")]
    NotStrictlyPolystable(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsotropicPair {
    pub v_nodes: Vec<usize>,
    pub w_nodes: Vec<usize>,
    pub total_degree: i64,
}

impl IsotropicPair {
    fn from_mask(c: &FixedPointChain, mask: &[bool]) -> Self {
        let mut v_nodes = Vec::new();
        let mut w_nodes = Vec::new();
        let mut total_degree = 0;
        for (i, &m) in mask.iter().enumerate() {
            if m {
                total_degree += c.degree(i);
                match c.node(i).side {
                    Side::V => v_nodes.push(i),
                    Side::W => w_nodes.push(i),
                }
            }
        }
        Self {
            v_nodes,
            w_nodes,
            total_degree,
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.v_nodes.iter().chain(self.w_nodes.iter()).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.v_nodes.is_empty() && self.w_nodes.is_empty()
    }

    /// Pairs built from an isotropic line in a rank-2 side (and nothing on
    /// the other side) do not count as proper.
    pub fn is_proper(&self, c: &FixedPointChain) -> bool {
        let small = |nodes: &[usize], side: Side| {
            let r: u32 = nodes.iter().map(|&i| c.rank(i)).sum();
            r == 0 || (c.side_rank(side) == 2 && r == 1)
        };
        !(small(&self.v_nodes, Side::V) && small(&self.w_nodes, Side::W))
    }
}

/// Depth-first enumeration of closed isotropic node sets.
struct PairSearch<'a> {
    c: &'a FixedPointChain,
    state: Vec<Option<bool>>,
    trail: Vec<usize>,
}

impl<'a> PairSearch<'a> {
    fn new(c: &'a FixedPointChain) -> Option<Self> {
        let mut s = Self {
            c,
            state: vec![None; c.nodes().len()],
            trail: Vec::new(),
        };
        for i in 0..c.nodes().len() {
            if c.is_self_paired(i) && !s.assign(i, false) {
                return None;
            }
        }
        s.trail.clear();
        Some(s)
    }

    /// Sets `i` and propagates; returns false on conflict.
    fn assign(&mut self, i: usize, value: bool) -> bool {
        let mut stack = vec![(i, value)];
        while let Some((j, v)) = stack.pop() {
            match self.state[j] {
                Some(x) if x == v => continue,
                Some(_) => return false,
                None => {}
            }
            if v && self.c.is_self_paired(j) {
                return false;
            }
            self.state[j] = Some(v);
            self.trail.push(j);
            if v {
                stack.push((self.c.partner(j), false));
                stack.extend(self.c.out_arrows(j).map(|a| (a.to, true)));
            } else {
                stack.extend(self.c.in_arrows(j).map(|a| (a.from, false)));
            }
        }
        true
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let j = self.trail.pop().unwrap();
            self.state[j] = None;
        }
    }

    fn run(&mut self, visit: &mut dyn FnMut(&[bool])) {
        match self.state.iter().position(|s| s.is_none()) {
            None => {
                let mask: Vec<bool> = self.state.iter().map(|s| s == &Some(true)).collect();
                visit(&mask);
            }
            Some(i) => {
                for v in [true, false] {
                    let mark = self.trail.len();
                    if self.assign(i, v) {
                        self.run(visit);
                    }
                    self.undo(mark);
                }
            }
        }
    }
}

fn for_each_pair(c: &FixedPointChain, mut visit: impl FnMut(&[bool])) {
    if let Some(mut s) = PairSearch::new(c) {
        s.run(&mut visit);
    }
}

/// All nonempty closed isotropic pairs, each with its total degree.
pub fn enumerate_invariant_isotropic_pairs(c: &FixedPointChain) -> Vec<IsotropicPair> {
    let mut out = Vec::new();
    for_each_pair(c, |mask| {
        if mask.iter().any(|&b| b) {
            out.push(IsotropicPair::from_mask(c, mask));
        }
    });
    out
}

/// Whether the nodes outside `mask` are themselves closed under arrows, so
/// that the pair splits off as a direct summand.
fn complement_closed(c: &FixedPointChain, mask: &[bool]) -> bool {
    c.arrows().iter().all(|a| mask[a.from] || !mask[a.to])
}

fn isolated(c: &FixedPointChain, i: usize) -> bool {
    c.out_arrows(i).next().is_none() && c.in_arrows(i).next().is_none()
}

/// Isolated, equal, self-paired line summands `I ⊕ I` at one position. Their
/// sum carries the isotropic line `I·(1, √-1)` of degree 0, which splits off.
/// The flag records whether that line is proper.
fn virtual_pairs(c: &FixedPointChain, alive: &[bool]) -> Vec<(usize, usize, bool)> {
    let n = c.nodes().len();
    let mut used = vec![false; n];
    let mut out = Vec::new();
    let eligible = |i: usize| {
        alive[i]
            && c.is_self_paired(i)
            && isolated(c, i)
            && matches!(c.node(i).payload, Payload::Line(_))
    };
    for i in 0..n {
        if used[i] || !eligible(i) {
            continue;
        }
        let mate = (i + 1..n).find(|&j| {
            !used[j]
                && eligible(j)
                && c.node(j).side == c.node(i).side
                && c.node(j).payload == c.node(i).payload
        });
        if let Some(j) = mate {
            used[i] = true;
            used[j] = true;
            out.push((i, j, c.side_rank(c.node(i).side) != 2));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilityReport {
    pub status: StabilityStatus,
    /// A pair of positive degree when unstable; a degree-0 pair that fails
    /// to split off when semistable but not polystable.
    pub witness: Option<IsotropicPair>,
    pub reason: String,
}

#[derive(Default)]
struct Tally {
    max_pos: Option<IsotropicPair>,
    proper_zero: usize,
    zero_not_split: Option<IsotropicPair>,
    proper_nonneg: bool,
}

fn tally(c: &FixedPointChain, visit_all: &mut dyn FnMut(&mut dyn FnMut(&[bool]))) -> Tally {
    let mut t = Tally::default();
    visit_all(&mut |mask: &[bool]| {
        if !mask.iter().any(|&b| b) {
            return;
        }
        let pair = IsotropicPair::from_mask(c, mask);
        let d = pair.total_degree;
        if d > 0 {
            if t.max_pos.as_ref().is_none_or(|w| d > w.total_degree) {
                t.max_pos = Some(pair);
            }
            return;
        }
        if d == 0 && pair.is_proper(c) {
            t.proper_nonneg = true;
            t.proper_zero += 1;
            if t.zero_not_split.is_none() && !complement_closed(c, mask) {
                t.zero_not_split = Some(pair);
            }
        }
    });
    t
}

fn verdict(c: &FixedPointChain, t: Tally) -> Result<StabilityReport, StabilityError> {
    if let Some(w) = t.max_pos {
        let reason = format!("isotropic invariant pair of degree {} > 0", w.total_degree);
        return Ok(StabilityReport {
            status: StabilityStatus::Unstable,
            witness: Some(w),
            reason,
        });
    }
    if let Some(w) = t.zero_not_split {
        return Ok(StabilityReport {
            status: StabilityStatus::SemistableNotPolystable,
            witness: Some(w),
            reason: "a degree-0 invariant pair does not split off".into(),
        });
    }
    let slots: Vec<(usize, SlotStability)> = (0..c.nodes().len())
        .filter(|&i| isolated(c, i))
        .filter_map(|i| match &c.node(i).payload {
            Payload::Slot(s) if s.rank >= 2 => Some((i, s.stability)),
            _ => None,
        })
        .collect();
    if !t.proper_nonneg {
        if virtual_pairs(c, &vec![true; c.nodes().len()])
            .iter()
            .any(|v| v.2)
        {
            return Ok(StabilityReport {
                status: StabilityStatus::StrictlyPolystable,
                witness: None,
                reason: "two equal self-dual summands contain a degree-0 isotropic line".into(),
            });
        }
        if let Some(&(i, _)) = slots.iter().find(|(_, s)| *s == SlotStability::Unspecified) {
            return Err(StabilityError::UnspecifiedSlotStability(format!(
                "{}[{}]",
                c.node(i).side.as_str(),
                c.node(i).weight
            )));
        }
        if slots.iter().any(|(_, s)| *s == SlotStability::Polystable) {
            return Ok(StabilityReport {
                status: StabilityStatus::StrictlyPolystable,
                witness: None,
                reason: "an isolated orthogonal summand is strictly polystable".into(),
            });
        }
        return Ok(StabilityReport {
            status: StabilityStatus::Stable,
            witness: None,
            reason: "every proper invariant isotropic pair has negative degree".into(),
        });
    }
    Ok(StabilityReport {
        status: StabilityStatus::StrictlyPolystable,
        witness: None,
        reason: format!(
            "{} degree-0 invariant pair(s), each splitting off",
            t.proper_zero
        ),
    })
}

/// Stability verdict with a witness.
pub fn stability_report(c: &FixedPointChain) -> Result<StabilityReport, StabilityError> {
    let t = tally(c, &mut |f| for_each_pair(c, |m| f(m)));
    verdict(c, t)
}

pub fn stability_status(c: &FixedPointChain) -> Result<StabilityStatus, StabilityError> {
    Ok(stability_report(c)?.status)
}

/// Reference implementation scanning every node subset; used to cross-check
/// the pruned search. Chains with more than 24 nodes are rejected.
pub fn exhaustive_status(c: &FixedPointChain) -> Result<StabilityStatus, StabilityError> {
    let n = c.nodes().len();
    if n > 24 {
        return Err(StabilityError::NotApplicable(format!(
            "{n} nodes is too many for a full scan"
        )));
    }
    let t = tally(c, &mut |f| {
        for bits in 0u32..(1u32 << n) {
            let mask: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
            let iso = (0..n).all(|i| !mask[i] || (!c.is_self_paired(i) && !mask[c.partner(i)]));
            let closed = c.arrows().iter().all(|a| !mask[a.from] || mask[a.to]);
            if iso && closed {
                f(&mask);
            }
        }
    });
    Ok(verdict(c, t)?.status)
}

/// `|deg N| ≤ 2g - 2` for `V = N ⊕ N^{-1}` in an SO(2,q) chain.
pub fn milnor_wood_check(c: &FixedPointChain) -> Result<bool, StabilityError> {
    if c.p() != 2 {
        return Err(StabilityError::NotApplicable(format!(
            "p = {} is not 2",
            c.p()
        )));
    }
    let v: Vec<usize> = (0..c.nodes().len())
        .filter(|&i| c.node(i).side == Side::V)
        .collect();
    let lines = v.len() == 2
        && v.iter()
            .all(|&i| matches!(c.node(i).payload, Payload::Line(_)));
    if !lines || c.is_self_paired(v[0]) || c.partner(v[0]) != v[1] {
        return Err(StabilityError::NotApplicable(
            "V is not of the form N ⊕ N^{-1} (sw1(V) must vanish)".into(),
        ));
    }
    Ok(c.degree(v[0]).abs() <= c.ctx().deg_k())
}

/// A degree-zero block `E ⊕ E*` in `V` and `F ⊕ F*` in `W` carrying the
/// U(p1, q1)-Higgs datum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpqPart {
    pub e_nodes: Vec<usize>,
    pub f_nodes: Vec<usize>,
    /// Nodes carrying `E* ⊕ F*`.
    pub dual_nodes: Vec<usize>,
    pub deg_e: i64,
    pub deg_f: i64,
}

impl UpqPart {
    pub fn p1(&self, c: &FixedPointChain) -> u32 {
        self.e_nodes.iter().map(|&i| c.rank(i)).sum()
    }

    pub fn q1(&self, c: &FixedPointChain) -> u32 {
        self.f_nodes.iter().map(|&i| c.rank(i)).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Indices refer to the input chain.
    pub upq_parts: Vec<UpqPart>,
    /// Stable remainder, absent when everything splits off.
    pub stable_part: Option<FixedPointChain>,
    /// Isolated orthogonal summands whose own polystable splitting is
    /// carried by their flag.
    pub slot_splits: Vec<usize>,
}

pub fn polystable_decompose(c: &FixedPointChain) -> Result<Decomposition, StabilityError> {
    let status = stability_status(c)?;
    if status != StabilityStatus::StrictlyPolystable {
        return Err(StabilityError::NotStrictlyPolystable(
            status.as_str().into(),
        ));
    }
    let n = c.nodes().len();
    let mut alive: Vec<bool> = vec![true; n];
    let mut upq_parts = Vec::new();
    loop {
        let keep: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
        if keep.is_empty() {
            break;
        }
        let sub = c.restrict(&keep)?;
        let pair = enumerate_invariant_isotropic_pairs(&sub)
            .into_iter()
            .find(|p| p.total_degree == 0 && p.is_proper(&sub));
        let Some(pair) = pair else { break };
        let back = |j: usize| keep[j];
        let e_nodes: Vec<usize> = pair.v_nodes.iter().map(|&j| back(j)).collect();
        let f_nodes: Vec<usize> = pair.w_nodes.iter().map(|&j| back(j)).collect();
        let deg_e = e_nodes.iter().map(|&i| c.degree(i)).sum();
        let deg_f = f_nodes.iter().map(|&i| c.degree(i)).sum();
        let dual_nodes: Vec<usize> = e_nodes
            .iter()
            .chain(&f_nodes)
            .map(|&i| c.partner(i))
            .collect();
        for &i in e_nodes.iter().chain(&f_nodes).chain(&dual_nodes) {
            alive[i] = false;
        }
        upq_parts.push(UpqPart {
            e_nodes,
            f_nodes,
            dual_nodes,
            deg_e,
            deg_f,
        });
    }
    for (i, j, proper) in virtual_pairs(c, &alive) {
        if !proper {
            continue;
        }
        let (e_nodes, f_nodes) = match c.node(i).side {
            Side::V => (vec![i], vec![]),
            Side::W => (vec![], vec![i]),
        };
        alive[i] = false;
        alive[j] = false;
        upq_parts.push(UpqPart {
            e_nodes,
            f_nodes,
            dual_nodes: vec![j],
            deg_e: 0,
            deg_f: 0,
        });
    }
    let keep: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    let stable_part = if keep.is_empty() {
        None
    } else {
        Some(c.restrict(&keep)?)
    };
    let slot_splits = keep
        .iter()
        .copied()
        .filter(|&i| {
            isolated(c, i)
                && matches!(&c.node(i).payload, Payload::Slot(s) if s.stability == SlotStability::Polystable)
        })
        .collect();
    if let Some(rest) = &stable_part {
        let s = stability_status(rest)?;
        // Any polystability left over comes from flagged slots.
        if !s.is_polystable() {
            return Err(StabilityError::NotStrictlyPolystable(format!(
                "remainder is {s}"
            )));
        }
    }
    Ok(Decomposition {
        upq_parts,
        stable_part,
        slot_splits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_chain, Atom, LineClass, NodeRef, NodeSpec, OrthoSlot};

    fn slot(rank: u32, stability: SlotStability) -> Payload {
        Payload::Slot(OrthoSlot {
            rank,
            det_atom: Atom::trivial(),
            sw2: 0,
            stability,
        })
    }

    fn type1(d: i64) -> FixedPointChain {
        let l = Atom::free("L", d);
        build_chain(
            2,
            3,
            2,
            &[
                NodeSpec::line(Side::V, -1, LineClass::new(l.clone(), 1, 0)),
                NodeSpec::line(Side::V, 1, LineClass::new(l, -1, 0)),
                NodeSpec::new(Side::W, 0, slot(3, SlotStability::Stable)),
            ],
            &[(NodeRef::new(Side::V, -1), NodeRef::new(Side::W, 0))],
        )
        .unwrap()
    }

    #[test]
    fn type1_chain_is_stable() {
        let c = type1(1);
        assert_eq!(stability_status(&c).unwrap(), StabilityStatus::Stable);
        let pairs = enumerate_invariant_isotropic_pairs(&c);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].total_degree, -1);
        assert!(milnor_wood_check(&c).unwrap());
    }

    #[test]
    fn zero_field_torsion_lines() {
        let n = vec![
            NodeSpec::line(Side::V, 0, LineClass::k_power(0)),
            NodeSpec::line(Side::W, 0, LineClass::k_power(0)),
            NodeSpec::line(Side::W, 0, LineClass::new(Atom::two_torsion("I"), 1, 0)),
            NodeSpec::line(Side::W, 0, LineClass::new(Atom::two_torsion("I"), 1, 0)),
        ];
        let c = build_chain(1, 3, 2, &n, &[]).unwrap();
        assert!(enumerate_invariant_isotropic_pairs(&c).is_empty());
        // I ⊕ I contains a degree-0 isotropic line.
        assert_eq!(
            stability_status(&c).unwrap(),
            StabilityStatus::StrictlyPolystable
        );
        let d = polystable_decompose(&c).unwrap();
        assert_eq!(d.upq_parts[0].q1(&c), 1);
    }

    #[test]
    fn milnor_wood_violation_is_unstable() {
        let n_atom = Atom::free("N", 3);
        let c = build_chain(
            2,
            2,
            2,
            &[
                NodeSpec::line(Side::V, 0, LineClass::new(n_atom.clone(), 1, 0)),
                NodeSpec::line(Side::V, 0, LineClass::new(n_atom, -1, 0)),
                NodeSpec::new(Side::W, 0, slot(2, SlotStability::Stable)),
            ],
            &[],
        )
        .unwrap();
        assert!(!milnor_wood_check(&c).unwrap());
        let r = stability_report(&c).unwrap();
        assert_eq!(r.status, StabilityStatus::Unstable);
        assert_eq!(r.witness.unwrap().total_degree, 3);
    }

    #[test]
    fn unspecified_isolated_slot_is_an_error() {
        let c = build_chain(
            1,
            3,
            2,
            &[
                NodeSpec::line(Side::V, 0, LineClass::k_power(0)),
                NodeSpec::new(Side::W, 0, slot(3, SlotStability::Unspecified)),
            ],
            &[],
        )
        .unwrap();
        assert!(matches!(
            stability_status(&c),
            Err(StabilityError::UnspecifiedSlotStability(_))
        ));
    }

    #[test]
    fn polystable_slot_splits() {
        let c = build_chain(
            1,
            3,
            2,
            &[
                NodeSpec::line(Side::V, 0, LineClass::k_power(0)),
                NodeSpec::new(Side::W, 0, slot(3, SlotStability::Polystable)),
            ],
            &[],
        )
        .unwrap();
        assert_eq!(
            stability_status(&c).unwrap(),
            StabilityStatus::StrictlyPolystable
        );
        let d = polystable_decompose(&c).unwrap();
        assert!(d.upq_parts.is_empty());
        assert_eq!(d.slot_splits.len(), 1);
    }

    #[test]
    fn duplicated_torsion_lines_split_off() {
        let i_line = LineClass::new(Atom::two_torsion("I"), 1, 0);
        let c = build_chain(
            3,
            3,
            2,
            &[
                NodeSpec::line(Side::V, 0, i_line.clone()),
                NodeSpec::line(Side::V, 0, i_line),
                NodeSpec::line(Side::V, 0, LineClass::k_power(0)),
                NodeSpec::new(Side::W, 0, slot(3, SlotStability::Stable)),
            ],
            &[],
        )
        .unwrap();
        assert_eq!(
            stability_status(&c).unwrap(),
            StabilityStatus::StrictlyPolystable
        );
        let d = polystable_decompose(&c).unwrap();
        assert_eq!(d.upq_parts.len(), 1);
        assert_eq!(d.upq_parts[0].p1(&c), 1);
        assert_eq!(d.upq_parts[0].deg_e + d.upq_parts[0].deg_f, 0);
        let rest = d.stable_part.unwrap();
        assert_eq!((rest.p(), rest.q()), (1, 3));
        assert_eq!(stability_status(&rest).unwrap(), StabilityStatus::Stable);
    }

    #[test]
    fn improper_line_keeps_so2_stable() {
        let u = Atom::free("U", 0);
        let c = build_chain(
            2,
            3,
            2,
            &[
                NodeSpec::line(Side::V, 0, LineClass::new(u.clone(), 1, 0)),
                NodeSpec::line(Side::V, 0, LineClass::new(u, -1, 0)),
                NodeSpec::new(Side::W, 0, slot(3, SlotStability::Stable)),
            ],
            &[],
        )
        .unwrap();
        assert_eq!(stability_status(&c).unwrap(), StabilityStatus::Stable);
        assert!(polystable_decompose(&c).is_err());
    }
}

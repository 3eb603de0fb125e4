//! Formal line bundles, orthogonal slots and C*-fixed-point chains.
//!
//! A chain is a finite set of weighted summands on the two sides `V` and `W`
//! of an SO(p,q)-Higgs bundle, together with the nonzero components of the
//! Higgs field. Every arrow raises the weight by one step and flips side.
//! The quadratic forms pair the summand at `(side, w)` with a dual summand at
//! `(side, -w)`; summands at weight zero may pair with themselves.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub mod json;

/// Genus of the base curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GenusCtx {
    g: i64,
}

impl GenusCtx {
    pub fn new(g: i64) -> Result<Self, ChainError> {
        if g < 2 {
            return Err(ChainError::InvalidGenus(g));
        }
        Ok(Self { g })
    }

    pub fn g(&self) -> i64 {
        self.g
    }

    /// Degree of the canonical bundle, `2g - 2`.
    pub fn deg_k(&self) -> i64 {
        2 * self.g - 2
    }
}

/// A named building block for line bundles.
///
/// `torsion_order` is 0 for a free atom of arbitrary degree, 1 for the
/// trivial bundle and 2 for a 2-torsion bundle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub name: String,
    pub degree: i64,
    pub torsion_order: u8,
    pub sw1_nonzero: bool,
}

impl Atom {
    pub fn trivial() -> Self {
        Self {
            name: "O".into(),
            degree: 0,
            torsion_order: 1,
            sw1_nonzero: false,
        }
    }

    pub fn two_torsion(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            degree: 0,
            torsion_order: 2,
            sw1_nonzero: true,
        }
    }

    pub fn free(name: impl Into<String>, degree: i64) -> Self {
        Self {
            name: name.into(),
            degree,
            torsion_order: 0,
            sw1_nonzero: false,
        }
    }

    /// True when the atom is isomorphic to the trivial bundle.
    pub fn is_trivial(&self) -> bool {
        self.torsion_order == 1 || (self.torsion_order == 2 && !self.sw1_nonzero)
    }

    pub fn is_torsion(&self) -> bool {
        self.torsion_order >= 1
    }

    fn validate(&self) -> Result<(), ChainError> {
        if self.torsion_order > 2 {
            return Err(ChainError::Schema(format!(
                "atom {} has torsion order {}",
                self.name, self.torsion_order
            )));
        }
        if self.torsion_order >= 1 && self.degree != 0 {
            return Err(ChainError::Schema(format!(
                "torsion atom {} must have degree 0",
                self.name
            )));
        }
        Ok(())
    }
}

/// `atom^power ⊗ K^k_exp`, kept in a normal form so that equal classes
/// compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LineClass {
    pub atom: Atom,
    pub atom_power: i64,
    pub k_exp: i64,
}

impl LineClass {
    pub fn new(atom: Atom, atom_power: i64, k_exp: i64) -> Self {
        let mut line = Self {
            atom,
            atom_power,
            k_exp,
        };
        line.normalize();
        line
    }

    /// `K^k`.
    pub fn k_power(k_exp: i64) -> Self {
        Self::new(Atom::trivial(), 0, k_exp)
    }

    fn normalize(&mut self) {
        match self.atom.torsion_order {
            1 => self.atom_power = 0,
            2 => self.atom_power = self.atom_power.rem_euclid(2),
            _ => {}
        }
        if self.atom_power == 0 || self.atom.is_trivial() {
            self.atom = Atom::trivial();
            self.atom_power = 0;
        }
    }

    pub fn degree(&self, ctx: GenusCtx) -> i64 {
        self.atom_power * self.atom.degree + self.k_exp * ctx.deg_k()
    }

    pub fn dual(&self) -> Self {
        Self::new(self.atom.clone(), -self.atom_power, -self.k_exp)
    }

    pub fn twist(&self, k: i64) -> Self {
        Self::new(self.atom.clone(), self.atom_power, self.k_exp + k)
    }

    pub fn is_self_dual(&self) -> bool {
        self.k_exp == 0 && (self.atom_power == 0 || self.atom.is_torsion())
    }

    /// The 2-torsion atom carried by this line, if it is nontrivial.
    pub fn torsion_part(&self) -> Option<&Atom> {
        (self.atom.torsion_order == 2 && self.atom_power == 1).then_some(&self.atom)
    }
}

impl fmt::Display for LineClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.atom_power != 0 {
            if self.atom_power == 1 {
                parts.push(self.atom.name.clone());
            } else {
                parts.push(format!("{}^{}", self.atom.name, self.atom_power));
            }
        }
        if self.k_exp != 0 {
            if self.k_exp == 1 {
                parts.push("K".into());
            } else {
                parts.push(format!("K^{}", self.k_exp));
            }
        }
        if parts.is_empty() {
            write!(f, "O")
        } else {
            write!(f, "{}", parts.join(""))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlotStability {
    Stable,
    Polystable,
    Unspecified,
}

impl SlotStability {
    pub fn as_str(&self) -> &'static str {
        match self {
            SlotStability::Stable => "stable",
            SlotStability::Polystable => "polystable",
            SlotStability::Unspecified => "unspecified",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stable" => Some(SlotStability::Stable),
            "polystable" => Some(SlotStability::Polystable),
            "unspecified" => Some(SlotStability::Unspecified),
            _ => None,
        }
    }
}

/// A degree-zero orthogonal bundle treated as a single summand.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrthoSlot {
    pub rank: u32,
    pub det_atom: Atom,
    pub sw2: u8,
    pub stability: SlotStability,
}

/// A vector bundle known only through rank and degree, assumed semistable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BundleClass {
    pub rank: u32,
    pub degree: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Payload {
    Line(LineClass),
    Slot(OrthoSlot),
    Bundle(BundleClass),
}

impl Payload {
    pub fn rank(&self) -> u32 {
        match self {
            Payload::Line(_) => 1,
            Payload::Slot(s) => s.rank,
            Payload::Bundle(b) => b.rank,
        }
    }

    pub fn degree(&self, ctx: GenusCtx) -> i64 {
        match self {
            Payload::Line(l) => l.degree(ctx),
            Payload::Slot(_) => 0,
            Payload::Bundle(b) => b.degree,
        }
    }

    pub fn dual(&self) -> Payload {
        match self {
            Payload::Line(l) => Payload::Line(l.dual()),
            Payload::Slot(s) => Payload::Slot(s.clone()),
            Payload::Bundle(b) => Payload::Bundle(BundleClass {
                rank: b.rank,
                degree: -b.degree,
            }),
        }
    }

    /// Payloads that carry their own orthogonal structure at weight zero.
    pub fn is_self_dual(&self) -> bool {
        match self {
            Payload::Line(l) => l.is_self_dual(),
            Payload::Slot(_) => true,
            Payload::Bundle(_) => false,
        }
    }

    pub fn as_line(&self) -> Option<&LineClass> {
        match self {
            Payload::Line(l) => Some(l),
            _ => None,
        }
    }

    pub fn as_slot(&self) -> Option<&OrthoSlot> {
        match self {
            Payload::Slot(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Line(l) => write!(f, "{l}"),
            Payload::Slot(s) => write!(f, "O({})[det {}, sw2 {}]", s.rank, s.det_atom.name, s.sw2),
            Payload::Bundle(b) => write!(f, "E(rk {}, deg {})", b.rank, b.degree),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    V,
    W,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::V => Side::W,
            Side::W => Side::V,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::V => "V",
            Side::W => "W",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainKind {
    /// Integer weights, each summand dual to the one at the negated weight.
    Integral,
    /// Two mutually dual sub-chains; weights are stored doubled and each pair
    /// of sub-chains is centred at zero.
    SplitIsotropic,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChainNode {
    pub side: Side,
    pub weight: i64,
    /// Sub-chain label, always 0 for integral chains.
    pub sub: u8,
    pub payload: Payload,
}

/// Whether an arrow is forced to be an isomorphism onto its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArrowKind {
    Unit,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Arrow {
    pub from: usize,
    pub to: usize,
    pub kind: ArrowKind,
}

/// Input description of a node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub side: Side,
    pub weight: i64,
    pub sub: u8,
    pub payload: Payload,
}

impl NodeSpec {
    pub fn new(side: Side, weight: i64, payload: Payload) -> Self {
        Self {
            side,
            weight,
            sub: 0,
            payload,
        }
    }

    pub fn line(side: Side, weight: i64, line: LineClass) -> Self {
        Self::new(side, weight, Payload::Line(line))
    }

    pub fn in_sub(mut self, sub: u8) -> Self {
        self.sub = sub;
        self
    }
}

/// Reference to the `index`-th input node at `(side, weight, sub)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef {
    pub side: Side,
    pub weight: i64,
    pub index: usize,
    pub sub: u8,
}

impl NodeRef {
    pub fn new(side: Side, weight: i64) -> Self {
        Self {
            side,
            weight,
            index: 0,
            sub: 0,
        }
    }

    pub fn at(side: Side, weight: i64, index: usize) -> Self {
        Self {
            side,
            weight,
            index,
            sub: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("genus must be at least 2, got {0}")]
    InvalidGenus(i64),
    #[error("duality violation: {0}")]
    DualityViolation(String),
    #[error("rank mismatch: {0}")]
    RankMismatch(String),
    #[error("determinant mismatch: {0}")]
    DeterminantMismatch(String),
    #[error("bad arrow: {0}")]
    BadArrow(String),
    #[error("schema error: {0}")]
    Schema(String),
}

impl ChainError {
    pub fn name(&self) -> &'static str {
        match self {
            ChainError::InvalidGenus(_) => "InvalidGenus",
            ChainError::DualityViolation(_) => "DualityViolation",
            ChainError::RankMismatch(_) => "RankMismatch",
            ChainError::DeterminantMismatch(_) => "DeterminantMismatch",
            ChainError::BadArrow(_) => "BadArrow",
            ChainError::Schema(_) => "Schema",
        }
    }
}

/// A validated C*-fixed-point chain of an L-twisted SO(p,q)-Higgs bundle with
/// `L = K^twist`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedPointChain {
    p: u32,
    q: u32,
    ctx: GenusCtx,
    twist: i64,
    kind: ChainKind,
    nodes: Vec<ChainNode>,
    partner: Vec<usize>,
    arrows: Vec<Arrow>,
}

/// Builder entry point with the default twist `L = K`.
pub fn build_chain(
    p: u32,
    q: u32,
    g: i64,
    node_spec: &[NodeSpec],
    arrow_spec: &[(NodeRef, NodeRef)],
) -> Result<FixedPointChain, ChainError> {
    ChainBuilder::new(p, q, g)
        .nodes(node_spec.to_vec())
        .arrows(arrow_spec.to_vec())
        .build()
}

/// Full set of construction options.
#[derive(Debug, Clone)]
pub struct ChainBuilder {
    pub p: u32,
    pub q: u32,
    pub g: i64,
    pub twist: i64,
    pub kind: ChainKind,
    pub nodes: Vec<NodeSpec>,
    pub arrows: Vec<(NodeRef, NodeRef)>,
    /// Skip the `p <= q` requirement; used for summands of a decomposition.
    pub allow_p_gt_q: bool,
}

impl ChainBuilder {
    pub fn new(p: u32, q: u32, g: i64) -> Self {
        Self {
            p,
            q,
            g,
            twist: 1,
            kind: ChainKind::Integral,
            nodes: Vec::new(),
            arrows: Vec::new(),
            allow_p_gt_q: false,
        }
    }

    pub fn twist(mut self, twist: i64) -> Self {
        self.twist = twist;
        self
    }

    pub fn kind(mut self, kind: ChainKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn nodes(mut self, nodes: Vec<NodeSpec>) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn node(mut self, node: NodeSpec) -> Self {
        self.nodes.push(node);
        self
    }

    pub fn arrows(mut self, arrows: Vec<(NodeRef, NodeRef)>) -> Self {
        self.arrows = arrows;
        self
    }

    pub fn arrow(mut self, from: NodeRef, to: NodeRef) -> Self {
        self.arrows.push((from, to));
        self
    }

    pub fn build(self) -> Result<FixedPointChain, ChainError> {
        FixedPointChain::assemble(self)
    }
}

impl FixedPointChain {
    fn assemble(b: ChainBuilder) -> Result<Self, ChainError> {
        let ctx = GenusCtx::new(b.g)?;
        if b.p > b.q && !b.allow_p_gt_q {
            return Err(ChainError::RankMismatch(format!(
                "p = {} exceeds q = {}",
                b.p, b.q
            )));
        }
        if b.p + b.q == 0 {
            return Err(ChainError::RankMismatch("empty chain".into()));
        }
        if b.twist < 0 {
            return Err(ChainError::Schema(format!(
                "twist must be non-negative, got {}",
                b.twist
            )));
        }
        for n in &b.nodes {
            match &n.payload {
                Payload::Line(l) => l.atom.validate()?,
                Payload::Slot(s) => {
                    s.det_atom.validate()?;
                    if s.rank == 0 {
                        return Err(ChainError::RankMismatch("orthogonal slot of rank 0".into()));
                    }
                    if s.det_atom.torsion_order == 0 {
                        return Err(ChainError::DeterminantMismatch(format!(
                            "slot determinant {} is not a torsion atom",
                            s.det_atom.name
                        )));
                    }
                    if s.sw2 > 1 {
                        return Err(ChainError::Schema("sw2 must be 0 or 1".into()));
                    }
                }
                Payload::Bundle(bc) => {
                    if bc.rank == 0 {
                        return Err(ChainError::RankMismatch("bundle of rank 0".into()));
                    }
                }
            }
            if b.kind == ChainKind::Integral && n.sub != 0 {
                return Err(ChainError::Schema(
                    "sub-chain labels need a split-isotropic chain".into(),
                ));
            }
            if n.sub > 1 {
                return Err(ChainError::Schema("sub-chain label must be 0 or 1".into()));
            }
        }

        // Resolve arrow references against the input order before any
        // weight normalisation.
        let mut group_pos: BTreeMap<(Side, i64, u8), Vec<usize>> = BTreeMap::new();
        for (i, n) in b.nodes.iter().enumerate() {
            group_pos
                .entry((n.side, n.weight, n.sub))
                .or_default()
                .push(i);
        }
        let resolve = |r: &NodeRef| -> Result<usize, ChainError> {
            group_pos
                .get(&(r.side, r.weight, r.sub))
                .and_then(|v| v.get(r.index).copied())
                .ok_or_else(|| {
                    ChainError::BadArrow(format!(
                        "no node {}[{}] #{} (sub {})",
                        r.side.as_str(),
                        r.weight,
                        r.index,
                        r.sub
                    ))
                })
        };
        let mut raw_arrows = Vec::with_capacity(b.arrows.len());
        for (from, to) in &b.arrows {
            raw_arrows.push((resolve(from)?, resolve(to)?));
        }

        let mut specs = b.nodes.clone();
        let step = match b.kind {
            ChainKind::Integral => 1,
            ChainKind::SplitIsotropic => {
                normalize_split(&mut specs)?;
                2
            }
        };

        // Canonical order: (side, weight, sub), stable within a group.
        let mut order: Vec<usize> = (0..specs.len()).collect();
        order.sort_by_key(|&i| (specs[i].side, specs[i].weight, specs[i].sub));
        let mut new_index = vec![0usize; specs.len()];
        for (pos, &i) in order.iter().enumerate() {
            new_index[i] = pos;
        }
        let nodes: Vec<ChainNode> = order
            .iter()
            .map(|&i| ChainNode {
                side: specs[i].side,
                weight: specs[i].weight,
                sub: specs[i].sub,
                payload: specs[i].payload.clone(),
            })
            .collect();

        let rank_v: u32 = nodes
            .iter()
            .filter(|n| n.side == Side::V)
            .map(|n| n.payload.rank())
            .sum();
        let rank_w: u32 = nodes
            .iter()
            .filter(|n| n.side == Side::W)
            .map(|n| n.payload.rank())
            .sum();
        if rank_v != b.p || rank_w != b.q {
            return Err(ChainError::RankMismatch(format!(
                "ranks (V, W) = ({rank_v}, {rank_w}) but (p, q) = ({}, {})",
                b.p, b.q
            )));
        }

        for side in [Side::V, Side::W] {
            let deg: i64 = nodes
                .iter()
                .filter(|n| n.side == side)
                .map(|n| n.payload.degree(ctx))
                .sum();
            if deg != 0 {
                return Err(ChainError::DeterminantMismatch(format!(
                    "total degree of {} is {deg}, expected 0",
                    side.as_str()
                )));
            }
        }
        let tv = torsion_determinant(&nodes, Side::V);
        let tw = torsion_determinant(&nodes, Side::W);
        if tv != tw {
            return Err(ChainError::DeterminantMismatch(format!(
                "torsion part of det V is {{{}}} but det W is {{{}}}",
                tv.join(","),
                tw.join(",")
            )));
        }

        let partner = pair_nodes(&nodes, b.kind)?;

        let mut arrows = Vec::new();
        for (f, t) in raw_arrows {
            let (f, t) = (new_index[f], new_index[t]);
            let kind = check_arrow(&nodes, f, t, step, ctx, b.twist)?;
            arrows.push(Arrow {
                from: f,
                to: t,
                kind,
            });
            // The adjoint component of the Higgs field.
            let (df, dt) = (partner[t], partner[f]);
            let dkind = check_arrow(&nodes, df, dt, step, ctx, b.twist)?;
            arrows.push(Arrow {
                from: df,
                to: dt,
                kind: dkind,
            });
        }
        arrows.sort();
        arrows.dedup();

        Ok(Self {
            p: b.p,
            q: b.q,
            ctx,
            twist: b.twist,
            kind: b.kind,
            nodes,
            partner,
            arrows,
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn ctx(&self) -> GenusCtx {
        self.ctx
    }

    pub fn g(&self) -> i64 {
        self.ctx.g()
    }

    /// Exponent `t` of the twisting bundle `L = K^t`.
    pub fn twist(&self) -> i64 {
        self.twist
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    pub fn nodes(&self) -> &[ChainNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &ChainNode {
        &self.nodes[i]
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    /// Index of the node paired with `i` by the quadratic form.
    pub fn partner(&self, i: usize) -> usize {
        self.partner[i]
    }

    pub fn is_self_paired(&self, i: usize) -> bool {
        self.partner[i] == i
    }

    /// Weight increment carried by one arrow (1, or 2 with doubled weights).
    pub fn step(&self) -> i64 {
        match self.kind {
            ChainKind::Integral => 1,
            ChainKind::SplitIsotropic => 2,
        }
    }

    pub fn rank(&self, i: usize) -> u32 {
        self.nodes[i].payload.rank()
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.nodes[i].payload.degree(self.ctx)
    }

    pub fn side_rank(&self, side: Side) -> u32 {
        match side {
            Side::V => self.p,
            Side::W => self.q,
        }
    }

    pub fn has_arrows(&self) -> bool {
        !self.arrows.is_empty()
    }

    /// Arrows `W -> V`, the components of `η`.
    pub fn eta_arrows(&self) -> impl Iterator<Item = &Arrow> {
        self.arrows
            .iter()
            .filter(|a| self.nodes[a.from].side == Side::W)
    }

    pub fn out_arrows(&self, i: usize) -> impl Iterator<Item = &Arrow> {
        self.arrows.iter().filter(move |a| a.from == i)
    }

    pub fn in_arrows(&self, i: usize) -> impl Iterator<Item = &Arrow> {
        self.arrows.iter().filter(move |a| a.to == i)
    }

    pub fn max_abs_weight(&self) -> i64 {
        self.nodes.iter().map(|n| n.weight.abs()).max().unwrap_or(0)
    }

    /// Position of node `i` within its `(side, weight, sub)` group.
    pub fn group_index(&self, i: usize) -> usize {
        let n = &self.nodes[i];
        self.nodes[..i]
            .iter()
            .filter(|m| m.side == n.side && m.weight == n.weight && m.sub == n.sub)
            .count()
    }

    pub fn node_ref(&self, i: usize) -> NodeRef {
        let n = &self.nodes[i];
        NodeRef {
            side: n.side,
            weight: n.weight,
            index: self.group_index(i),
            sub: n.sub,
        }
    }

    /// First node at `(side, weight)`, if any.
    pub fn find(&self, side: Side, weight: i64) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| n.side == side && n.weight == weight)
    }

    pub fn nodes_at(&self, side: Side, weight: i64) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].side == side && self.nodes[i].weight == weight)
            .collect()
    }

    /// Re-expresses the chain as builder input; `build` on the result
    /// reproduces the chain.
    pub fn to_builder(&self) -> ChainBuilder {
        let nodes = self
            .nodes
            .iter()
            .map(|n| NodeSpec {
                side: n.side,
                weight: n.weight,
                sub: n.sub,
                payload: n.payload.clone(),
            })
            .collect();
        let arrows = self
            .arrows
            .iter()
            .map(|a| (self.node_ref(a.from), self.node_ref(a.to)))
            .collect();
        ChainBuilder {
            p: self.p,
            q: self.q,
            g: self.ctx.g(),
            twist: self.twist,
            kind: self.kind,
            nodes,
            arrows,
            allow_p_gt_q: self.p > self.q,
        }
    }

    /// The sub-chain on a node subset closed under pairing and arrows in both
    /// directions. Ranks on each side are recomputed.
    pub fn restrict(&self, keep: &[usize]) -> Result<FixedPointChain, ChainError> {
        let mut mask = vec![false; self.nodes.len()];
        for &i in keep {
            mask[i] = true;
            mask[self.partner[i]] = true;
        }
        let mut b = self.to_builder();
        let idx: Vec<usize> = (0..self.nodes.len()).filter(|&i| mask[i]).collect();
        b.nodes = idx
            .iter()
            .map(|&i| {
                let n = &self.nodes[i];
                NodeSpec {
                    side: n.side,
                    weight: n.weight,
                    sub: n.sub,
                    payload: n.payload.clone(),
                }
            })
            .collect();
        // Indices inside groups shift when nodes are dropped.
        let local_ref = |i: usize| {
            let n = &self.nodes[i];
            let index = idx
                .iter()
                .take_while(|&&j| j < i)
                .filter(|&&j| {
                    let m = &self.nodes[j];
                    m.side == n.side && m.weight == n.weight && m.sub == n.sub
                })
                .count();
            NodeRef {
                side: n.side,
                weight: n.weight,
                index,
                sub: n.sub,
            }
        };
        b.arrows = self
            .arrows
            .iter()
            .filter(|a| mask[a.from] && mask[a.to])
            .map(|a| (local_ref(a.from), local_ref(a.to)))
            .collect();
        b.p = idx
            .iter()
            .filter(|&&i| self.nodes[i].side == Side::V)
            .map(|&i| self.rank(i))
            .sum();
        b.q = idx
            .iter()
            .filter(|&&i| self.nodes[i].side == Side::W)
            .map(|&i| self.rank(i))
            .sum();
        b.allow_p_gt_q = true;
        if self.kind == ChainKind::SplitIsotropic && b.nodes.iter().all(|n| n.sub == 0) {
            b.kind = ChainKind::Integral;
        }
        b.build()
    }
}

/// Reads the 2-torsion part of `Λ^top` of one side as a sorted list of atom
/// names with odd multiplicity.
pub fn torsion_determinant(nodes: &[ChainNode], side: Side) -> Vec<String> {
    let mut odd: BTreeMap<String, bool> = BTreeMap::new();
    let mut flip = |a: &Atom| {
        if a.torsion_order == 2 && !a.is_trivial() {
            let e = odd.entry(a.name.clone()).or_insert(false);
            *e = !*e;
        }
    };
    for n in nodes.iter().filter(|n| n.side == side) {
        match &n.payload {
            Payload::Line(l) => {
                if let Some(a) = l.torsion_part() {
                    flip(a)
                }
            }
            Payload::Slot(s) => flip(&s.det_atom),
            Payload::Bundle(_) => {}
        }
    }
    odd.into_iter()
        .filter(|(_, v)| *v)
        .map(|(k, _)| k)
        .collect()
}

fn normalize_split(specs: &mut [NodeSpec]) -> Result<(), ChainError> {
    let w0: Vec<i64> = specs
        .iter()
        .filter(|n| n.sub == 0)
        .map(|n| n.weight)
        .collect();
    if w0.is_empty() || specs.iter().all(|n| n.sub == 0) {
        return Err(ChainError::DualityViolation(
            "a split-isotropic chain needs two non-empty dual sub-chains".into(),
        ));
    }
    let (lo, hi) = (*w0.iter().min().unwrap(), *w0.iter().max().unwrap());
    if (lo + hi) % 2 != 0 {
        return Err(ChainError::Schema(
            "doubled weights of a sub-chain must have an even span".into(),
        ));
    }
    let c = (lo + hi) / 2;
    // The dual sub-chain is anchored at the negated weights.
    let w1: Vec<i64> = specs
        .iter()
        .filter(|n| n.sub == 1)
        .map(|n| n.weight)
        .collect();
    let (lo1, hi1) = (*w1.iter().min().unwrap(), *w1.iter().max().unwrap());
    if (lo1 + hi1) % 2 != 0 {
        return Err(ChainError::Schema(
            "doubled weights of a sub-chain must have an even span".into(),
        ));
    }
    let c1 = (lo1 + hi1) / 2;
    for n in specs.iter_mut() {
        n.weight -= if n.sub == 0 { c } else { c1 };
    }
    Ok(())
}

fn pair_nodes(nodes: &[ChainNode], kind: ChainKind) -> Result<Vec<usize>, ChainError> {
    let n = nodes.len();
    let mut partner = vec![usize::MAX; n];
    let mut groups: BTreeMap<(Side, i64, u8), Vec<usize>> = BTreeMap::new();
    for (i, node) in nodes.iter().enumerate() {
        groups
            .entry((node.side, node.weight, node.sub))
            .or_default()
            .push(i);
    }
    let describe = |i: usize| {
        let m = &nodes[i];
        format!("{}[{}] = {}", m.side.as_str(), m.weight, m.payload)
    };
    match kind {
        ChainKind::Integral => {
            for ((side, w, _), members) in &groups {
                if *w > 0 {
                    let dual = groups.get(&(*side, -*w, 0)).cloned().unwrap_or_default();
                    if dual.len() != members.len() {
                        return Err(ChainError::DualityViolation(format!(
                            "{} has {} summands at weight {w} but {} at weight {}",
                            side.as_str(),
                            members.len(),
                            dual.len(),
                            -w
                        )));
                    }
                    for (&a, &b) in members.iter().zip(dual.iter()) {
                        if nodes[a].payload.dual() != nodes[b].payload {
                            return Err(ChainError::DualityViolation(format!(
                                "{} is not dual to {}",
                                describe(a),
                                describe(b)
                            )));
                        }
                        partner[a] = b;
                        partner[b] = a;
                    }
                } else if *w == 0 {
                    for (pos, &a) in members.iter().enumerate() {
                        if partner[a] != usize::MAX {
                            continue;
                        }
                        if nodes[a].payload.is_self_dual() {
                            partner[a] = a;
                            continue;
                        }
                        let want = nodes[a].payload.dual();
                        let mate = members[pos + 1..]
                            .iter()
                            .copied()
                            .find(|&b| partner[b] == usize::MAX && nodes[b].payload == want);
                        match mate {
                            Some(b) => {
                                partner[a] = b;
                                partner[b] = a;
                            }
                            None => {
                                return Err(ChainError::DualityViolation(format!(
                                    "{} has no dual summand at weight 0",
                                    describe(a)
                                )))
                            }
                        }
                    }
                }
            }
        }
        ChainKind::SplitIsotropic => {
            for ((side, w, sub), members) in &groups {
                if *sub != 0 {
                    continue;
                }
                let dual = groups.get(&(*side, -*w, 1)).cloned().unwrap_or_default();
                if dual.len() != members.len() {
                    return Err(ChainError::DualityViolation(format!(
                        "sub-chains do not match at {}[{w}]",
                        side.as_str()
                    )));
                }
                for (&a, &b) in members.iter().zip(dual.iter()) {
                    if nodes[a].payload.dual() != nodes[b].payload {
                        return Err(ChainError::DualityViolation(format!(
                            "{} is not dual to {}",
                            describe(a),
                            describe(b)
                        )));
                    }
                    if matches!(nodes[a].payload, Payload::Slot(_)) {
                        return Err(ChainError::DualityViolation(
                            "orthogonal slots cannot lie in an isotropic sub-chain".into(),
                        ));
                    }
                    partner[a] = b;
                    partner[b] = a;
                }
            }
        }
    }
    if let Some(i) = (0..n).find(|&i| partner[i] == usize::MAX) {
        return Err(ChainError::DualityViolation(format!(
            "{} has no dual summand",
            describe(i)
        )));
    }
    for i in 0..n {
        if matches!(nodes[i].payload, Payload::Slot(_)) && partner[i] != i {
            return Err(ChainError::DualityViolation(format!(
                "orthogonal slot {} must sit at weight 0",
                describe(i)
            )));
        }
    }
    Ok(partner)
}

/// Decides whether a nonzero map `from -> to ⊗ K^twist` can exist, and
/// whether it must be an isomorphism.
fn check_arrow(
    nodes: &[ChainNode],
    from: usize,
    to: usize,
    step: i64,
    ctx: GenusCtx,
    twist: i64,
) -> Result<ArrowKind, ChainError> {
    let (a, b) = (&nodes[from], &nodes[to]);
    let tag = |n: &ChainNode| format!("{}[{}]", n.side.as_str(), n.weight);
    if a.side == b.side {
        return Err(ChainError::BadArrow(format!(
            "{} -> {} does not change side",
            tag(a),
            tag(b)
        )));
    }
    if b.weight - a.weight != step {
        return Err(ChainError::BadArrow(format!(
            "{} -> {} does not raise the weight by one step",
            tag(a),
            tag(b)
        )));
    }
    if a.sub != b.sub {
        return Err(ChainError::BadArrow(format!(
            "{} -> {} joins different sub-chains",
            tag(a),
            tag(b)
        )));
    }
    let shift = twist * ctx.deg_k();
    match (&a.payload, &b.payload) {
        (Payload::Line(la), Payload::Line(lb)) => {
            let d = lb.degree(ctx) + shift - la.degree(ctx);
            if d < 0 {
                return Err(ChainError::BadArrow(format!(
                    "Hom({}, {}) has negative degree {d}",
                    tag(a),
                    tag(b)
                )));
            }
            if d == 0 {
                if lb.twist(twist) != *la {
                    return Err(ChainError::BadArrow(format!(
                        "degree-0 map {} -> {} between non-isomorphic line bundles",
                        tag(a),
                        tag(b)
                    )));
                }
                return Ok(ArrowKind::Unit);
            }
            Ok(ArrowKind::Generic)
        }
        (pa, pb) => {
            // Slope of Hom(a, b ⊗ L) for semistable summands.
            let (ra, rb) = (pa.rank() as i64, pb.rank() as i64);
            let num = pb.degree(ctx) * ra - pa.degree(ctx) * rb + shift * ra * rb;
            if num < 0 {
                return Err(ChainError::BadArrow(format!(
                    "Hom({}, {}) has negative slope",
                    tag(a),
                    tag(b)
                )));
            }
            Ok(ArrowKind::Generic)
        }
    }
}

/// Which component of `Φ` an arrow represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhiBlock {
    Eta,
    EtaStar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhiArrow {
    pub from: usize,
    pub to: usize,
    pub block: PhiBlock,
}

/// The SO(p+q, C)-Higgs bundle `(V ⊕ W, Q_V ⊕ -Q_W, Φ)` with
/// `Φ = [[0, η], [η*, 0]]`, in chain form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexHiggs {
    pub rank: u32,
    pub degree: i64,
    pub nodes: Vec<ChainNode>,
    pub arrows: Vec<PhiArrow>,
}

pub fn to_complex_higgs(c: &FixedPointChain) -> ComplexHiggs {
    let arrows = c
        .arrows()
        .iter()
        .map(|a| PhiArrow {
            from: a.from,
            to: a.to,
            block: if c.node(a.from).side == Side::W {
                PhiBlock::Eta
            } else {
                PhiBlock::EtaStar
            },
        })
        .collect();
    let degree = (0..c.nodes().len()).map(|i| c.degree(i)).sum();
    ComplexHiggs {
        rank: c.p() + c.q(),
        degree,
        nodes: c.nodes().to_vec(),
        arrows,
    }
}

/// Dual of a line class.
pub fn dual(l: &LineClass) -> LineClass {
    l.dual()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn so23(deg_l: i64) -> Result<FixedPointChain, ChainError> {
        let l = Atom::free("L", deg_l);
        let nodes = vec![
            NodeSpec::line(Side::V, 1, LineClass::new(l.clone(), 1, 0)),
            NodeSpec::line(Side::V, -1, LineClass::new(l, -1, 0)),
            NodeSpec::new(
                Side::W,
                0,
                Payload::Slot(OrthoSlot {
                    rank: 3,
                    det_atom: Atom::trivial(),
                    sw2: 0,
                    stability: SlotStability::Stable,
                }),
            ),
        ];
        let arrows = vec![
            (NodeRef::new(Side::W, 0), NodeRef::new(Side::V, 1)),
            (NodeRef::new(Side::V, -1), NodeRef::new(Side::W, 0)),
        ];
        build_chain(2, 3, 2, &nodes, &arrows)
    }

    #[test]
    fn so23_special_chain_is_valid() {
        let c = so23(-1).unwrap();
        assert_eq!(c.nodes().len(), 3);
        assert_eq!(c.arrows().len(), 2);
        let v1 = c.find(Side::V, 1).unwrap();
        assert_eq!(c.degree(v1), -1);
        assert_eq!(c.degree(c.partner(v1)), 1);
    }

    #[test]
    fn zero_field_so11() {
        let nodes = vec![
            NodeSpec::line(Side::V, 0, LineClass::k_power(0)),
            NodeSpec::line(Side::W, 0, LineClass::k_power(0)),
        ];
        let c = build_chain(1, 1, 2, &nodes, &[]).unwrap();
        assert!(!c.has_arrows());
        assert!(c.is_self_paired(0));
    }

    #[test]
    fn unbalanced_degree_is_rejected() {
        let nodes = vec![
            NodeSpec::line(Side::V, 0, LineClass::new(Atom::free("L", 1), 1, 0)),
            NodeSpec::line(Side::V, 0, LineClass::k_power(0)),
            NodeSpec::line(Side::W, 0, LineClass::k_power(0)),
            NodeSpec::line(Side::W, 0, LineClass::k_power(0)),
        ];
        let err = build_chain(2, 2, 2, &nodes, &[]).unwrap_err();
        assert_eq!(err.name(), "DeterminantMismatch");
    }

    #[test]
    fn missing_dual_is_rejected() {
        let nodes = vec![
            NodeSpec::line(Side::V, 1, LineClass::new(Atom::free("L", 1), 1, 0)),
            NodeSpec::line(Side::V, -1, LineClass::new(Atom::free("M", -1), 1, 0)),
            NodeSpec::line(Side::W, 0, LineClass::k_power(0)),
            NodeSpec::line(Side::W, 0, LineClass::k_power(0)),
        ];
        assert_eq!(
            build_chain(2, 2, 2, &nodes, &[]).unwrap_err().name(),
            "DualityViolation"
        );
    }

    #[test]
    fn p_above_q_is_rejected() {
        let nodes = vec![
            NodeSpec::line(Side::V, 0, LineClass::k_power(0)),
            NodeSpec::line(Side::V, 0, LineClass::k_power(0)),
            NodeSpec::line(Side::W, 0, LineClass::k_power(0)),
        ];
        assert_eq!(
            build_chain(2, 1, 2, &nodes, &[]).unwrap_err().name(),
            "RankMismatch"
        );
    }

    #[test]
    fn arrows_must_flip_side_and_raise_weight() {
        let nodes = vec![
            NodeSpec::line(Side::V, 1, LineClass::k_power(-1)),
            NodeSpec::line(Side::V, -1, LineClass::k_power(1)),
            NodeSpec::line(Side::W, 0, LineClass::k_power(0)),
            NodeSpec::line(Side::W, 0, LineClass::k_power(0)),
        ];
        let same_side = [(NodeRef::new(Side::V, -1), NodeRef::new(Side::V, 1))];
        assert_eq!(
            build_chain(2, 2, 2, &nodes, &same_side).unwrap_err().name(),
            "BadArrow"
        );
        let wrong_step = [(NodeRef::new(Side::W, 0), NodeRef::new(Side::V, -1))];
        assert_eq!(
            build_chain(2, 2, 2, &nodes, &wrong_step)
                .unwrap_err()
                .name(),
            "BadArrow"
        );
        let ok = [(NodeRef::new(Side::W, 0), NodeRef::new(Side::V, 1))];
        let c = build_chain(2, 2, 2, &nodes, &ok).unwrap();
        assert_eq!(c.arrows().len(), 2);
        assert!(c.arrows().iter().all(|a| a.kind == ArrowKind::Unit));
    }

    #[test]
    fn milnor_wood_excess_blocks_the_arrow() {
        assert!(so23(-2).is_ok());
        assert_eq!(so23(-3).unwrap_err().name(), "BadArrow");
    }

    #[test]
    fn dual_examples() {
        let ctx = GenusCtx::new(2).unwrap();
        let ik3 = LineClass::new(Atom::two_torsion("I"), 1, 3);
        assert_eq!(ik3.dual(), LineClass::new(Atom::two_torsion("I"), 1, -3));
        let l = LineClass::new(Atom::free("L", -1), 1, 0);
        assert_eq!(l.dual().degree(ctx), 1);
        assert_eq!(LineClass::k_power(0).dual(), LineClass::k_power(0));
        assert_eq!(dual(&dual(&l)), l);
    }

    #[test]
    fn complex_higgs_preserves_rank() {
        let c = so23(-1).unwrap();
        let h = to_complex_higgs(&c);
        assert_eq!(h.rank, 5);
        assert_eq!(h.degree, 0);
        assert_eq!(
            h.arrows.iter().filter(|a| a.block == PhiBlock::Eta).count(),
            1
        );
        assert_eq!(
            h.arrows
                .iter()
                .filter(|a| a.block == PhiBlock::EtaStar)
                .count(),
            1
        );
    }

    #[test]
    fn split_chain_is_centred() {
        let l = Atom::free("L", 1);
        let b = ChainBuilder::new(1, 1, 2)
            .kind(ChainKind::SplitIsotropic)
            .node(NodeSpec::line(Side::V, 5, LineClass::new(l.clone(), 1, 0)))
            .node(NodeSpec::line(Side::W, 7, LineClass::k_power(0)))
            .node(NodeSpec::line(Side::V, -5, LineClass::new(l, -1, 0)).in_sub(1))
            .node(NodeSpec::line(Side::W, -7, LineClass::k_power(0)).in_sub(1))
            .arrow(NodeRef::new(Side::V, 5), NodeRef::new(Side::W, 7));
        // Ranks: two V lines and two W lines.
        let mut b = b;
        b.p = 2;
        b.q = 2;
        let c = b.build().unwrap();
        let weights: Vec<i64> = c.nodes().iter().map(|n| n.weight).collect();
        assert!(weights.iter().all(|w| w.abs() == 1));
        assert_eq!(c.arrows().len(), 2);
    }
}

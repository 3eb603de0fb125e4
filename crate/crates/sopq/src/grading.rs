//! Weight-graded pieces of the deformation complex
//! `C•_k : so_k(V) ⊕ so_k(W) → Hom_{k+1}(W, V) ⊗ L` at a fixed point, the
//! map `ad_η(α, β) = η β − α η`, and its cohomology.
//!
//! Everything is computed at the level of chain summands. The fibre of the
//! map is evaluated exactly with unit arrows set to the identity and generic
//! arrows set to pseudo-random integers from a fixed seed.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::chain::{ArrowKind, ChainKind, FixedPointChain, GenusCtx, Payload, Side, SlotStability};
use crate::linalg::{self, Scalar};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GradingError {
    #[error(
        "ad_eta at weight {weight} is not square: domain rank {domain}, codomain rank {codomain}"
    )]
    NonSquare {
        weight: i64,
        domain: u32,
        codomain: u32,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symmetry {
    /// A full `Hom(a, b)` standing for a pair of τ-exchanged blocks.
    Full,
    /// The skew part of `Hom(a, σa)`, i.e. `Λ²` of a summand.
    Skew,
}

impl Symmetry {
    pub fn as_str(&self) -> &'static str {
        match self {
            Symmetry::Full => "full",
            Symmetry::Skew => "skew",
        }
    }
}

/// `Hom(source, target)` (twisted by `L` in the codomain), or its skew part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomFactor {
    pub source: usize,
    pub target: usize,
    pub symmetry: Symmetry,
    pub rank: u32,
    pub degree: i64,
    /// Power of `L` the factor is twisted by (0 or 1).
    pub twist: u8,
}

impl HomFactor {
    pub fn euler_char(&self, ctx: GenusCtx) -> i64 {
        self.degree + self.rank as i64 * (1 - ctx.g())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GradedPiece {
    pub weight: i64,
    pub factors: Vec<HomFactor>,
}

impl GradedPiece {
    pub fn rank(&self) -> u32 {
        self.factors.iter().map(|f| f.rank).sum()
    }

    pub fn degree(&self) -> i64 {
        self.factors.iter().map(|f| f.degree).sum()
    }

    pub fn euler_char(&self, ctx: GenusCtx) -> i64 {
        self.factors.iter().map(|f| f.euler_char(ctx)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedPieces {
    pub so_v: GradedPiece,
    pub so_w: GradedPiece,
    pub hom: GradedPiece,
}

fn so_piece(c: &FixedPointChain, side: Side, k: i64) -> GradedPiece {
    let n = c.nodes().len();
    let nodes: Vec<usize> = (0..n).filter(|&i| c.node(i).side == side).collect();
    let mut factors = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for &a in &nodes {
        for &b in &nodes {
            if c.node(b).weight - c.node(a).weight != k {
                continue;
            }
            let image = (c.partner(b), c.partner(a));
            if seen.contains(&(a, b)) {
                continue;
            }
            seen.insert((a, b));
            seen.insert(image);
            let (ra, rb) = (c.rank(a) as i64, c.rank(b) as i64);
            if image == (a, b) {
                if ra >= 2 {
                    let deg = if c.is_self_paired(a) {
                        0
                    } else {
                        -(ra - 1) * c.degree(a)
                    };
                    factors.push(HomFactor {
                        source: a,
                        target: b,
                        symmetry: Symmetry::Skew,
                        rank: (ra * (ra - 1) / 2) as u32,
                        degree: deg,
                        twist: 0,
                    });
                }
            } else {
                factors.push(HomFactor {
                    source: a,
                    target: b,
                    symmetry: Symmetry::Full,
                    rank: (ra * rb) as u32,
                    degree: ra * c.degree(b) - rb * c.degree(a),
                    twist: 0,
                });
            }
        }
    }
    GradedPiece { weight: k, factors }
}

fn hom_piece(c: &FixedPointChain, k: i64) -> GradedPiece {
    let n = c.nodes().len();
    let shift = c.twist() * c.ctx().deg_k();
    let mut factors = Vec::new();
    for x in (0..n).filter(|&i| c.node(i).side == Side::W) {
        for y in (0..n).filter(|&i| c.node(i).side == Side::V) {
            if c.node(y).weight - c.node(x).weight != k + c.step() {
                continue;
            }
            let (rx, ry) = (c.rank(x) as i64, c.rank(y) as i64);
            factors.push(HomFactor {
                source: x,
                target: y,
                symmetry: Symmetry::Full,
                rank: (rx * ry) as u32,
                degree: rx * c.degree(y) - ry * c.degree(x) + rx * ry * shift,
                twist: 1,
            });
        }
    }
    GradedPiece {
        weight: k + c.step(),
        factors,
    }
}

/// `so_k(V)`, `so_k(W)` and `Hom_{k+1}(W, V) ⊗ L`.
pub fn graded_pieces(c: &FixedPointChain, k: i64) -> GradedPieces {
    GradedPieces {
        so_v: so_piece(c, Side::V, k),
        so_w: so_piece(c, Side::W, k),
        hom: hom_piece(c, k),
    }
}

/// Weights at which some piece may be nonzero.
pub fn weight_range(c: &FixedPointChain) -> std::ops::RangeInclusive<i64> {
    let m = c.max_abs_weight();
    (-2 * m - c.step())..=(2 * m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Composition {
    /// `η_arrow ∘ X`.
    Post,
    /// `X ∘ η_arrow`.
    Pre,
}

/// One summand of a block of `ad_η`: `sign · (η_arrow ∘ Y)` or
/// `sign · (Y ∘ η_arrow)`, with `Y` the domain element or its transpose.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockTerm {
    pub sign: i8,
    pub composition: Composition,
    pub arrow: usize,
    pub unit: bool,
    pub transposed: bool,
}

impl fmt::Display for BlockTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sign < 0 { "-" } else { "+" };
        let y = if self.transposed { "Yᵀ" } else { "Y" };
        let a = if self.unit {
            "1".to_string()
        } else {
            format!("η{}", self.arrow)
        };
        match self.composition {
            Composition::Post => write!(f, "{s}{a}∘{y}"),
            Composition::Pre => write!(f, "{s}{y}∘{a}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdEtaMap {
    pub weight: i64,
    /// `so_k(V)` factors followed by `so_k(W)` factors.
    pub domain: Vec<HomFactor>,
    pub codomain: Vec<HomFactor>,
    /// `blocks[i][j]`: terms sending domain factor `j` to codomain factor `i`.
    pub blocks: Vec<Vec<Vec<BlockTerm>>>,
    /// The generic fibre, rows indexed by codomain coordinates.
    pub fiber: Vec<Vec<Rational>>,
    domain_offsets: Vec<usize>,
    codomain_offsets: Vec<usize>,
    domain_degree: i64,
    codomain_degree: i64,
}

impl AdEtaMap {
    pub fn domain_rank(&self) -> u32 {
        self.domain.iter().map(|f| f.rank).sum()
    }

    pub fn codomain_rank(&self) -> u32 {
        self.codomain.iter().map(|f| f.rank).sum()
    }

    pub fn domain_degree(&self) -> i64 {
        self.domain_degree
    }

    pub fn codomain_degree(&self) -> i64 {
        self.codomain_degree
    }

    pub fn is_zero_map(&self) -> bool {
        self.blocks.iter().all(|r| r.iter().all(|b| b.is_empty()))
    }

    pub fn fiber_rank(&self) -> usize {
        linalg::rank(&self.fiber)
    }

    fn sub_fiber(&self, dom: &[usize], cod: &[usize]) -> Vec<Vec<Rational>> {
        let cols: Vec<usize> = dom
            .iter()
            .flat_map(|&j| {
                self.domain_offsets[j]..self.domain_offsets[j] + self.domain[j].rank as usize
            })
            .collect();
        cod.iter()
            .flat_map(|&i| {
                self.codomain_offsets[i]..self.codomain_offsets[i] + self.codomain[i].rank as usize
            })
            .map(|r| cols.iter().map(|&c| self.fiber[r][c].clone()).collect())
            .collect()
    }

    /// Bipartite connected components of the block pattern, as
    /// `(domain factors, codomain factors)`.
    pub fn components(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let (nd, nc) = (self.domain.len(), self.codomain.len());
        let mut parent: Vec<usize> = (0..nd + nc).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let nx = p[y];
                p[y] = r;
                y = nx;
            }
            r
        }
        for i in 0..nc {
            for j in 0..nd {
                if !self.blocks[i][j].is_empty() {
                    let (a, b) = (find(&mut parent, j), find(&mut parent, nd + i));
                    parent[a] = b;
                }
            }
        }
        let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for j in 0..nd {
            if self.domain[j].rank > 0 {
                let r = find(&mut parent, j);
                groups.entry(r).or_default().0.push(j);
            }
        }
        for i in 0..nc {
            if self.codomain[i].rank > 0 {
                let r = find(&mut parent, nd + i);
                groups.entry(r).or_default().1.push(i);
            }
        }
        groups.into_values().collect()
    }
}

/// Deterministic fibre value of every arrow.
fn arrow_fibers(c: &FixedPointChain) -> Vec<Vec<Vec<Rational>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0fe7a);
    c.arrows()
        .iter()
        .map(|a| {
            let (rf, rt) = (c.rank(a.from) as usize, c.rank(a.to) as usize);
            (0..rt)
                .map(|i| {
                    (0..rf)
                        .map(|j| {
                            if a.kind == ArrowKind::Unit && rf == rt {
                                Rational::from_i64(i64::from(i == j))
                            } else {
                                let mut v = 0;
                                while v == 0 {
                                    v = rng.random_range(-9i64..=9);
                                }
                                Rational::from_i64(v)
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

type Mat = Vec<Vec<Rational>>;

fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let (n, m, p) = (a.len(), b.len(), b.first().map_or(0, |r| r.len()));
    (0..n)
        .map(|i| {
            (0..p)
                .map(|j| {
                    let mut s = Rational::zero();
                    for k in 0..m {
                        s += &a[i][k] * &b[k][j];
                    }
                    s
                })
                .collect()
        })
        .collect()
}

fn transpose(a: &Mat, rows: usize, cols: usize) -> Mat {
    (0..cols)
        .map(|j| (0..rows).map(|i| a[i][j].clone()).collect())
        .collect()
}

/// Basis of the domain factor as matrices `rank(target) × rank(source)`.
fn domain_basis(c: &FixedPointChain, f: &HomFactor) -> Vec<Mat> {
    let (rs, rt) = (c.rank(f.source) as usize, c.rank(f.target) as usize);
    let unit = |i: usize, j: usize, s: i64| {
        let mut m = vec![vec![Rational::zero(); rs]; rt];
        m[i][j] += Rational::from_i64(s);
        m
    };
    match f.symmetry {
        Symmetry::Full => (0..rt)
            .flat_map(|i| (0..rs).map(move |j| (i, j)))
            .map(|(i, j)| unit(i, j, 1))
            .collect(),
        Symmetry::Skew => {
            let mut out = Vec::new();
            for i in 0..rt {
                for j in i + 1..rs {
                    let mut m = unit(i, j, 1);
                    m[j][i] -= Rational::from_i64(1);
                    out.push(m);
                }
            }
            out
        }
    }
}

/// Assembles `ad_η` at weight `k`.
pub fn ad_eta(c: &FixedPointChain, k: i64) -> AdEtaMap {
    let pieces = graded_pieces(c, k);
    let mut domain = pieces.so_v.factors.clone();
    domain.extend(pieces.so_w.factors.iter().cloned());
    let codomain = pieces.hom.factors.clone();
    let cod_index: BTreeMap<(usize, usize), usize> = codomain
        .iter()
        .enumerate()
        .map(|(i, f)| ((f.source, f.target), i))
        .collect();
    let eta: Vec<(usize, usize, usize)> = c
        .arrows()
        .iter()
        .enumerate()
        .filter(|(_, a)| c.node(a.from).side == Side::W)
        .map(|(id, a)| (id, a.from, a.to))
        .collect();

    let mut blocks = vec![vec![Vec::new(); domain.len()]; codomain.len()];
    for (j, f) in domain.iter().enumerate() {
        let (a, b) = (f.source, f.target);
        let fixed = f.symmetry == Symmetry::Skew;
        let unit = |id: usize| c.arrows()[id].kind == ArrowKind::Unit;
        let mut push = |cod: Option<&usize>, t: BlockTerm| {
            if let Some(&i) = cod {
                blocks[i][j].push(t);
            }
        };
        match c.node(a).side {
            Side::V => {
                // -α ∘ η on the block itself and -(-αᵀ) ∘ η on its τ-image.
                for &(id, x, y) in &eta {
                    if y == a {
                        push(
                            cod_index.get(&(x, b)),
                            BlockTerm {
                                sign: -1,
                                composition: Composition::Pre,
                                arrow: id,
                                unit: unit(id),
                                transposed: false,
                            },
                        );
                    }
                    if !fixed && y == c.partner(b) {
                        push(
                            cod_index.get(&(x, c.partner(a))),
                            BlockTerm {
                                sign: 1,
                                composition: Composition::Pre,
                                arrow: id,
                                unit: unit(id),
                                transposed: true,
                            },
                        );
                    }
                }
            }
            Side::W => {
                for &(id, x, y) in &eta {
                    if x == b {
                        push(
                            cod_index.get(&(a, y)),
                            BlockTerm {
                                sign: 1,
                                composition: Composition::Post,
                                arrow: id,
                                unit: unit(id),
                                transposed: false,
                            },
                        );
                    }
                    if !fixed && x == c.partner(a) {
                        push(
                            cod_index.get(&(c.partner(b), y)),
                            BlockTerm {
                                sign: -1,
                                composition: Composition::Post,
                                arrow: id,
                                unit: unit(id),
                                transposed: true,
                            },
                        );
                    }
                }
            }
        }
    }

    // Fibre evaluation.
    let fibers = arrow_fibers(c);
    let mut domain_offsets = Vec::with_capacity(domain.len());
    let mut acc = 0;
    for f in &domain {
        domain_offsets.push(acc);
        acc += f.rank as usize;
    }
    let dom_dim = acc;
    let mut codomain_offsets = Vec::with_capacity(codomain.len());
    acc = 0;
    for f in &codomain {
        codomain_offsets.push(acc);
        acc += f.rank as usize;
    }
    let cod_dim = acc;
    let mut fiber = vec![vec![Rational::zero(); dom_dim]; cod_dim];
    for (j, f) in domain.iter().enumerate() {
        let (rs, rt) = (c.rank(f.source) as usize, c.rank(f.target) as usize);
        for (col, x) in domain_basis(c, f).into_iter().enumerate() {
            let xt = transpose(&x, rt, rs);
            for (i, row_terms) in blocks.iter().enumerate() {
                for t in &row_terms[j] {
                    let y = if t.transposed { &xt } else { &x };
                    let arrow = &fibers[t.arrow];
                    let img = match t.composition {
                        Composition::Post => mat_mul(arrow, y),
                        Composition::Pre => mat_mul(y, arrow),
                    };
                    let cf = &codomain[i];
                    let cols = c.rank(cf.source) as usize;
                    for (r, row) in img.iter().enumerate() {
                        for (s, v) in row.iter().enumerate() {
                            let coord = codomain_offsets[i] + r * cols + s;
                            let term = v * Rational::from_i64(t.sign as i64);
                            fiber[coord][domain_offsets[j] + col] += term;
                        }
                    }
                }
            }
        }
    }
    let domain_degree = domain.iter().map(|f| f.degree).sum();
    let codomain_degree = codomain.iter().map(|f| f.degree).sum();
    AdEtaMap {
        weight: k,
        domain,
        codomain,
        blocks,
        fiber,
        domain_offsets,
        codomain_offsets,
        domain_degree,
        codomain_degree,
    }
}

/// Whether `ad_η` is an isomorphism of sheaves: equal rank and degree and a
/// generically invertible fibre.
pub fn is_sheaf_iso(m: &AdEtaMap) -> Result<bool, GradingError> {
    let (d, e) = (m.domain_rank(), m.codomain_rank());
    if d != e {
        return Err(GradingError::NonSquare {
            weight: m.weight,
            domain: d,
            codomain: e,
        });
    }
    if d == 0 {
        return Ok(true);
    }
    Ok(m.domain_degree == m.codomain_degree && linalg::is_square_invertible(&m.fiber))
}

/// [`is_sheaf_iso`] with non-square maps folded into `false`.
pub fn sheaf_iso_verdict(m: &AdEtaMap) -> (bool, String) {
    match is_sheaf_iso(m) {
        Ok(true) => (true, "isomorphism".into()),
        Ok(false) if m.domain_degree != m.codomain_degree => (
            false,
            format!(
                "degrees differ: {} vs {}",
                m.domain_degree, m.codomain_degree
            ),
        ),
        Ok(false) => (false, "generic fibre is singular".into()),
        Err(e) => (false, e.to_string()),
    }
}

pub fn euler_char(c: &FixedPointChain, k: i64) -> i64 {
    let p = graded_pieces(c, k);
    let ctx = c.ctx();
    p.so_v.euler_char(ctx) + p.so_w.euler_char(ctx) - p.hom.euler_char(ctx)
}

/// `χ(C•)` of the ungraded complex `so(V) ⊕ so(W) → Hom(W, V) ⊗ L`.
pub fn total_euler_char(p: u32, q: u32, g: i64, twist: i64) -> i64 {
    let (p, q) = (p as i64, q as i64);
    (1 - g) * (p * (p - 1) / 2 + q * (q - 1) / 2) - p * q * (twist * (2 * g - 2) + 1 - g)
}

/// Closed integer interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dim {
    pub lo: i64,
    pub hi: i64,
}

impl Dim {
    pub fn exact(v: i64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn between(lo: i64, hi: i64) -> Self {
        Self { lo: lo.min(hi), hi }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn value(&self) -> Option<i64> {
        self.is_exact().then_some(self.lo)
    }

    pub fn is_zero(&self) -> bool {
        self.lo == 0 && self.hi == 0
    }
}

impl std::ops::Add for Dim {
    type Output = Dim;
    fn add(self, o: Dim) -> Dim {
        Dim {
            lo: self.lo + o.lo,
            hi: self.hi + o.hi,
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Genericity {
    /// Line bundles that are not forced to be special have the
    /// Riemann-Roch minimum of sections.
    Generic,
    /// Any value allowed by Clifford's bound.
    Special,
}

fn line_h0(
    ctx: GenusCtx,
    k_exp: i64,
    torsion: bool,
    trivial: bool,
    degree: i64,
    gen: Genericity,
) -> Dim {
    let g = ctx.g();
    if trivial {
        return Dim::exact(match k_exp {
            m if m < 0 => 0,
            0 => 1,
            1 => g,
            m => (2 * m - 1) * (g - 1),
        });
    }
    if torsion {
        return Dim::exact(match k_exp {
            m if m <= 0 => 0,
            1 => g - 1,
            m => (2 * m - 1) * (g - 1),
        });
    }
    general_h0(ctx, 1, degree, gen)
}

/// `h⁰` of a semistable bundle of the given rank and degree.
fn general_h0(ctx: GenusCtx, rank: i64, degree: i64, gen: Genericity) -> Dim {
    let g = ctx.g();
    let chi = degree + rank * (1 - g);
    if degree < 0 {
        return Dim::exact(0);
    }
    if degree > rank * ctx.deg_k() {
        return Dim::exact(chi);
    }
    match gen {
        Genericity::Generic => Dim::exact(chi.max(0)),
        Genericity::Special => Dim::between(chi.max(0), rank + degree.div_euclid(2)),
    }
}

/// `(h⁰, h¹)` of one factor.
fn factor_cohomology(c: &FixedPointChain, f: &HomFactor, gen: Genericity) -> (Dim, Dim) {
    let ctx = c.ctx();
    let chi = f.euler_char(ctx);
    if f.rank == 0 {
        return (Dim::exact(0), Dim::exact(0));
    }
    let h0 = match f.symmetry {
        Symmetry::Skew => match &c.node(f.source).payload {
            Payload::Slot(s) => match s.stability {
                SlotStability::Stable => Dim::exact(0),
                _ => Dim::between(0, f.rank as i64),
            },
            _ => general_h0(ctx, f.rank as i64, f.degree, gen),
        },
        Symmetry::Full => {
            let (ps, pt) = (&c.node(f.source).payload, &c.node(f.target).payload);
            match (ps, pt) {
                (Payload::Line(a), Payload::Line(b)) => {
                    let mut atoms: BTreeMap<(String, i64, u8), i64> = BTreeMap::new();
                    for (l, s) in [(b, 1), (a, -1)] {
                        if l.atom_power != 0 {
                            *atoms
                                .entry((l.atom.name.clone(), l.atom.degree, l.atom.torsion_order))
                                .or_default() += s * l.atom_power;
                        }
                    }
                    atoms.retain(|(_, _, t), v| {
                        if *t == 2 {
                            *v = v.rem_euclid(2);
                        }
                        *v != 0
                    });
                    let k_exp = b.k_exp - a.k_exp + c.twist() * f.twist as i64;
                    let trivial = atoms.is_empty();
                    let torsion = atoms.len() == 1 && atoms.keys().all(|(_, _, t)| *t == 2);
                    line_h0(ctx, k_exp, torsion, trivial, f.degree, gen)
                }
                _ => general_h0(ctx, f.rank as i64, f.degree, gen),
            }
        }
    };
    // A factor containing a component of η has that section.
    let carries_eta = f.twist == 1
        && c.arrows()
            .iter()
            .any(|a| a.from == f.source && a.to == f.target);
    let h0 = if carries_eta {
        Dim {
            lo: h0.lo.max(1),
            hi: h0.hi.max(1),
        }
    } else {
        h0
    };
    let h1 = Dim {
        lo: h0.lo - chi,
        hi: h0.hi - chi,
    };
    (h0, h1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HyperDims {
    pub h0: Dim,
    pub h1: Dim,
    pub h2: Dim,
    pub euler_char: i64,
}

/// Hypercohomology dimensions of `C•_k`.
pub fn hyper_dims(c: &FixedPointChain, k: i64, gen: Genericity) -> Result<HyperDims, GradingError> {
    if c.kind() == ChainKind::SplitIsotropic {
        return Err(GradingError::ShapeMismatch(
            "hypercohomology is only modelled for integral chains".into(),
        ));
    }
    let m = ad_eta(c, k);
    let ctx = c.ctx();
    let (mut h0, mut h1, mut h2) = (Dim::exact(0), Dim::exact(0), Dim::exact(0));
    for (dom, cod) in m.components() {
        let sum = |fs: &[usize], list: &[HomFactor]| {
            fs.iter()
                .fold((Dim::exact(0), Dim::exact(0), 0i64), |(a, b, x), &i| {
                    let (u, v) = factor_cohomology(c, &list[i], gen);
                    (a + u, b + v, x + list[i].euler_char(ctx))
                })
        };
        let (h0d, h1d, chid) = sum(&dom, &m.domain);
        let (h0e, h1e, chie) = sum(&cod, &m.codomain);
        if cod.is_empty() {
            h0 = h0 + h0d;
            h1 = h1 + h1d;
            continue;
        }
        if dom.is_empty() {
            h1 = h1 + h0e;
            h2 = h2 + h1e;
            continue;
        }
        // Only factors with sections (resp. first cohomology) matter for
        // injectivity on H⁰ (resp. surjectivity on H¹).
        let dom_live: Vec<usize> = dom
            .iter()
            .copied()
            .filter(|&j| factor_cohomology(c, &m.domain[j], gen).0.hi > 0)
            .collect();
        let cod_live: Vec<usize> = cod
            .iter()
            .copied()
            .filter(|&i| factor_cohomology(c, &m.codomain[i], gen).1.hi > 0)
            .collect();
        let injective = {
            let sub = m.sub_fiber(&dom_live, &cod);
            let n: usize = dom_live.iter().map(|&j| m.domain[j].rank as usize).sum();
            linalg::rank(&sub) == n
        };
        let surjective = {
            let sub = m.sub_fiber(&dom, &cod_live);
            linalg::rank(&sub) == sub.len()
        };
        let c0 = if injective {
            Dim::exact(0)
        } else {
            Dim::between((h0d.lo - h0e.hi).max(0), h0d.hi)
        };
        let c2 = if surjective || h1e.is_zero() {
            Dim::exact(0)
        } else {
            Dim::between((h1e.lo - h1d.hi).max(0), h1e.hi)
        };
        let chi = chid - chie;
        let c1 = Dim {
            lo: (c0.lo + c2.lo - chi).max(0),
            hi: c0.hi + c2.hi - chi,
        };
        h0 = h0 + c0;
        h1 = h1 + c1;
        h2 = h2 + c2;
    }
    Ok(HyperDims {
        h0,
        h1,
        h2,
        euler_char: euler_char(c, k),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_chain, Atom, LineClass, NodeRef, NodeSpec, OrthoSlot};

    fn type1(d: i64) -> FixedPointChain {
        let l = Atom::free("L", d);
        build_chain(
            2,
            3,
            2,
            &[
                NodeSpec::line(Side::V, -1, LineClass::new(l.clone(), 1, 0)),
                NodeSpec::line(Side::V, 1, LineClass::new(l, -1, 0)),
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
            ],
            &[(NodeRef::new(Side::V, -1), NodeRef::new(Side::W, 0))],
        )
        .unwrap()
    }

    #[test]
    fn lambda_two_of_lines_vanishes() {
        let c = type1(1);
        let p = graded_pieces(&c, 2);
        assert_eq!(p.so_v.rank() + p.so_w.rank(), 0);
        assert_eq!(p.hom.rank(), 0);
        assert!(is_sheaf_iso(&ad_eta(&c, 2)).unwrap());
    }

    #[test]
    fn type1_weight_zero() {
        let c = type1(1);
        let m = ad_eta(&c, 0);
        assert_eq!((m.domain_rank(), m.codomain_rank()), (4, 3));
        assert!(matches!(
            is_sheaf_iso(&m),
            Err(GradingError::NonSquare { .. })
        ));
        let h = hyper_dims(&c, 0, Genericity::Generic).unwrap();
        assert_eq!((h.h0, h.h2), (Dim::exact(0), Dim::exact(0)));
        assert_eq!(h.h1, Dim::exact(4));
        assert_eq!(h.euler_char, -4);
    }

    #[test]
    fn far_weights_are_empty() {
        let c = type1(1);
        let p = graded_pieces(&c, 7);
        assert_eq!(p.so_v.rank() + p.so_w.rank() + p.hom.rank(), 0);
    }

    #[test]
    fn rank_totals() {
        let c = type1(1);
        let (mut v, mut w, mut h) = (0, 0, 0);
        let mut chi = 0;
        for k in weight_range(&c) {
            let p = graded_pieces(&c, k);
            v += p.so_v.rank();
            w += p.so_w.rank();
            h += p.hom.rank();
            chi += euler_char(&c, k);
        }
        assert_eq!((v, w, h), (1, 3, 6));
        assert_eq!(chi, total_euler_char(2, 3, 2, 1));
    }

    #[test]
    fn k_powers_follow_riemann_roch() {
        let ctx = GenusCtx::new(3).unwrap();
        let h = |m| line_h0(ctx, m, false, true, m * 4, Genericity::Generic).lo;
        assert_eq!((h(-1), h(0), h(1), h(2), h(3)), (0, 1, 3, 6, 10));
    }
}

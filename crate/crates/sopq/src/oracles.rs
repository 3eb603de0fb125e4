//! Brute-force reference computations used to cross-check the structured
//! algorithms, plus a generator of random valid chains.

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::{
    Atom, BundleClass, ChainBuilder, FixedPointChain, LineClass, NodeRef, NodeSpec, OrthoSlot,
    Payload, Side, SlotStability,
};
use crate::linalg::{self, rational};
use crate::Rational;

/// Coordinates of each node of one side inside the fibre of that side.
fn layout(c: &FixedPointChain, side: Side) -> (Vec<Option<usize>>, usize) {
    let mut off = vec![None; c.nodes().len()];
    let mut n = 0;
    for (i, node) in c.nodes().iter().enumerate() {
        if node.side == side {
            off[i] = Some(n);
            n += node.payload.rank() as usize;
        }
    }
    (off, n)
}

/// The fibre of the orthogonal form on one side: each node pairs its basis
/// with the same basis of its partner.
fn form(c: &FixedPointChain, side: Side) -> Vec<Vec<Rational>> {
    let (off, n) = layout(c, side);
    let mut q = vec![vec![Rational::zero(); n]; n];
    for (i, node) in c.nodes().iter().enumerate().filter(|(_, x)| x.side == side) {
        let (a, b) = (off[i].unwrap(), off[c.partner(i)].unwrap());
        for t in 0..node.payload.rank() as usize {
            q[a + t][b + t] = Rational::one();
        }
    }
    q
}

/// Basis of `{α : α raises weight by k, αᵀQ + Qα = 0}` as dense matrices.
fn so_basis(c: &FixedPointChain, side: Side, k: i64) -> Vec<Vec<Vec<Rational>>> {
    let (off, n) = layout(c, side);
    let q = form(c, side);
    let mut vars: Vec<(usize, usize)> = Vec::new();
    for (a, na) in c.nodes().iter().enumerate().filter(|(_, x)| x.side == side) {
        for (b, nb) in c.nodes().iter().enumerate().filter(|(_, x)| x.side == side) {
            if nb.weight == na.weight + k {
                for r in 0..nb.payload.rank() as usize {
                    for s in 0..na.payload.rank() as usize {
                        vars.push((off[b].unwrap() + r, off[a].unwrap() + s));
                    }
                }
            }
        }
    }
    // (αᵀQ + Qα)_{ij} = Σ_l α_{li} Q_{lj} + Q_{il} α_{lj}.
    let mut rows = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let row: Vec<Rational> = vars
                .iter()
                .map(|&(r, s)| {
                    let mut v = Rational::zero();
                    if s == i {
                        v += q[r][j].clone();
                    }
                    if s == j {
                        v += q[i][r].clone();
                    }
                    v
                })
                .collect();
            rows.push(row);
        }
    }
    linalg::nullspace(&rows, vars.len())
        .into_iter()
        .map(|x| {
            let mut m = vec![vec![Rational::zero(); n]; n];
            for (&(r, s), v) in vars.iter().zip(x) {
                m[r][s] = v;
            }
            m
        })
        .collect()
}

fn mat_mul(
    a: &[Vec<Rational>],
    b: &[Vec<Rational>],
    inner: usize,
    cols: usize,
) -> Vec<Vec<Rational>> {
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    (0..inner).fold(Rational::zero(), |acc, l| {
                        acc + row[l].clone() * b[l][j].clone()
                    })
                })
                .collect()
        })
        .collect()
}

/// A random fibre of `η : W → V`; the `V → W` arrows are its adjoint and
/// carry no independent data.
fn random_eta(c: &FixedPointChain, seed: u64) -> Vec<Vec<Rational>> {
    let (ov, p) = layout(c, Side::V);
    let (ow, q) = layout(c, Side::W);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eta = vec![vec![Rational::zero(); q]; p];
    for a in c.arrows().iter().filter(|a| c.node(a.from).side == Side::W) {
        let (w0, v0) = (ow[a.from].unwrap(), ov[a.to].unwrap());
        for r in 0..c.rank(a.to) as usize {
            for s in 0..c.rank(a.from) as usize {
                let x: i64 = rng.random_range(1..=9) * if rng.random_bool(0.5) { 1 } else { -1 };
                eta[v0 + r][w0 + s] = rational(x);
            }
        }
    }
    eta
}

/// `(dim so_k(V) + dim so_k(W), dim Hom_{k+step}(W, V), rank of ad_η)` at
/// a random point of the fibre.
pub fn fibre_block_ranks(c: &FixedPointChain, k: i64, seed: u64) -> (usize, usize, usize) {
    let (ov, p) = layout(c, Side::V);
    let (ow, q) = layout(c, Side::W);
    let eta = random_eta(c, seed);
    let sv = so_basis(c, Side::V, k);
    let sw = so_basis(c, Side::W, k);

    let mut positions = Vec::new();
    for (a, na) in c
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, x)| x.side == Side::W)
    {
        for (b, nb) in c
            .nodes()
            .iter()
            .enumerate()
            .filter(|(_, x)| x.side == Side::V)
        {
            if nb.weight == na.weight + k + c.step() {
                for r in 0..nb.payload.rank() as usize {
                    for s in 0..na.payload.rank() as usize {
                        positions.push((ov[b].unwrap() + r, ow[a].unwrap() + s));
                    }
                }
            }
        }
    }
    let mut image: Vec<Vec<Rational>> = Vec::new();
    for alpha in &sv {
        let m = mat_mul(alpha, &eta, p, q);
        image.push(positions.iter().map(|&(r, s)| -m[r][s].clone()).collect());
    }
    for beta in &sw {
        let m = mat_mul(&eta, beta, q, q);
        image.push(positions.iter().map(|&(r, s)| m[r][s].clone()).collect());
    }
    let rank = if positions.is_empty() {
        0
    } else {
        linalg::rank(&image)
    };
    (sv.len() + sw.len(), positions.len(), rank)
}

fn random_payload_half(rng: &mut ChaCha8Rng, idx: usize) -> Payload {
    if rng.random_bool(0.75) {
        let atom = Atom::free(format!("L{idx}"), rng.random_range(-3..=3));
        Payload::Line(LineClass::new(atom, 1, rng.random_range(-1..=1)))
    } else {
        Payload::Bundle(BundleClass {
            rank: 2,
            degree: rng.random_range(-3..=3),
        })
    }
}

fn torsion_atom(rng: &mut ChaCha8Rng) -> Atom {
    if rng.random_bool(0.5) {
        Atom::trivial()
    } else {
        Atom::two_torsion("I")
    }
}

fn random_payload_zero(rng: &mut ChaCha8Rng) -> Payload {
    if rng.random_bool(0.5) {
        let rank = rng.random_range(1..=3);
        Payload::Slot(OrthoSlot {
            rank,
            det_atom: torsion_atom(rng),
            sw2: if rank == 1 {
                0
            } else {
                rng.random_range(0..=1)
            },
            stability: if rng.random_bool(0.7) {
                SlotStability::Stable
            } else {
                SlotStability::Polystable
            },
        })
    } else {
        Payload::Line(LineClass::new(torsion_atom(rng), 1, 0))
    }
}

fn odd_torsion(p: &Payload) -> bool {
    match p {
        Payload::Slot(s) => !s.det_atom.is_trivial(),
        Payload::Line(l) => l.torsion_part().is_some(),
        Payload::Bundle(_) => false,
    }
}

fn refs(nodes: &[NodeSpec]) -> Vec<NodeRef> {
    nodes
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let index = nodes[..i]
                .iter()
                .filter(|m| m.side == n.side && m.weight == n.weight)
                .count();
            NodeRef::at(n.side, n.weight, index)
        })
        .collect()
}

/// A random valid integral chain with at most `max_nodes` nodes, built from
/// dual pairs of lines and rank-2 bundles plus weight-zero orthogonal pieces.
/// Arrows are added one at a time and kept when the chain stays valid.
pub fn random_chain(rng: &mut ChaCha8Rng, g: i64, max_nodes: usize) -> FixedPointChain {
    loop {
        let m = rng.random_range(1..=3i64);
        let half = rng.random_range(1..=(max_nodes - 1) / 2);
        let zero = rng.random_range(0..=(max_nodes - 2 * half).min(2));
        let mut nodes: Vec<NodeSpec> = Vec::new();
        for i in 0..half {
            let side = if rng.random_bool(0.5) {
                Side::V
            } else {
                Side::W
            };
            let w = -rng.random_range(1..=m);
            let payload = random_payload_half(rng, i);
            nodes.push(NodeSpec::new(side, -w, payload.dual()));
            nodes.push(NodeSpec::new(side, w, payload));
        }
        for _ in 0..zero {
            let side = if rng.random_bool(0.5) {
                Side::V
            } else {
                Side::W
            };
            nodes.push(NodeSpec::new(side, 0, random_payload_zero(rng)));
        }
        let parity = |side| {
            nodes
                .iter()
                .filter(|n| n.side == side && odd_torsion(&n.payload))
                .count()
                % 2
        };
        if parity(Side::V) != parity(Side::W) {
            if nodes.len() == max_nodes {
                continue;
            }
            nodes.push(NodeSpec::line(
                Side::W,
                0,
                LineClass::new(Atom::two_torsion("I"), 1, 0),
            ));
        }
        let rank = |side| {
            nodes
                .iter()
                .filter(|n| n.side == side)
                .map(|n| n.payload.rank())
                .sum::<u32>()
        };
        let (mut p, mut q) = (rank(Side::V), rank(Side::W));
        if p > q {
            for n in nodes.iter_mut() {
                n.side = n.side.other();
            }
            std::mem::swap(&mut p, &mut q);
        }
        if p == 0 {
            continue;
        }
        let r = refs(&nodes);
        let base = ChainBuilder::new(p, q, g).nodes(nodes.clone());
        if base.clone().build().is_err() {
            continue;
        }
        let mut arrows: Vec<(NodeRef, NodeRef)> = Vec::new();
        for a in 0..nodes.len() {
            for b in 0..nodes.len() {
                let ok = nodes[a].side != nodes[b].side && nodes[b].weight == nodes[a].weight + 1;
                if ok && rng.random_bool(0.5) {
                    arrows.push((r[a], r[b]));
                    if base.clone().arrows(arrows.clone()).build().is_err() {
                        arrows.pop();
                    }
                }
            }
        }
        return base
            .arrows(arrows)
            .build()
            .expect("arrows were checked one by one");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grading::ad_eta;

    #[test]
    fn random_chains_are_small_and_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let c = random_chain(&mut rng, 2, 12);
            assert!(c.nodes().len() <= 12);
            assert!(c.p() <= c.q());
        }
    }

    #[test]
    fn block_ranks_agree_with_ad_eta_on_random_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut nontrivial = 0;
        for _ in 0..40 {
            let c = random_chain(&mut rng, 2, 10);
            for k in 1..=2 * c.max_abs_weight() {
                let m = ad_eta(&c, k);
                let (d, e, r) = fibre_block_ranks(&c, k, 99);
                assert_eq!(
                    (d, e),
                    (m.domain_rank() as usize, m.codomain_rank() as usize)
                );
                assert_eq!(r, m.fiber_rank(), "k = {k}");
                nontrivial += usize::from(r > 0);
            }
        }
        assert!(nontrivial > 10, "only {nontrivial} nonzero maps");
    }
}

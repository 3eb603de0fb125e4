//! The acceptance suite, runnable from the library, the CLI and the test
//! harness alike. Each criterion returns a one-line detail on success and a
//! description of the first discrepancy on failure.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chain::json::{emit_chain, parse_chain};
use crate::chain::{
    Atom, BundleClass, ChainBuilder, FixedPointChain, LineClass, NodeRef, NodeSpec, OrthoSlot,
    Payload, Side, SlotStability,
};
use crate::grading::{
    ad_eta, euler_char, graded_pieces, hyper_dims, is_sheaf_iso, total_euler_char, weight_range,
    Genericity,
};
use crate::hitchin::{
    build_phi, gauge_scale_check, generic_coeffs, hitchin_eta, is_skew_adjoint, psi_fixed_point,
    so1n_tail_chain, standard_forms, total_form, tr_power,
};
use crate::minima::{classify_minimum, enumerate_minima_families, MinimumKind};
use crate::oracles::{fibre_block_ranks, random_chain};
use crate::stability::{exhaustive_status, milnor_wood_check, stability_status};
use crate::topology::{
    abc_total, count_components, count_components_abc, count_so1q_kp, psi_dim_check, psi_dim_polys,
    ComponentCount,
};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriterionResult {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub type Outcome = Result<String, String>;

fn err(e: impl Into<Error>) -> String {
    let e = e.into();
    format!("{}: {e}", e.kind())
}

fn expect<T: PartialEq + std::fmt::Debug>(what: &str, got: T, want: T) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got:?}, expected {want:?}"))
    }
}

fn timed<T>(limit: Duration, what: &str, f: impl FnOnce() -> T) -> Result<T, String> {
    let start = Instant::now();
    let out = f();
    let t = start.elapsed();
    if t > limit {
        return Err(format!("{what} took {t:?}, limit {limit:?}"));
    }
    Ok(out)
}

fn counts() -> Outcome {
    use ComponentCount::*;
    let cases = [
        ((3, 5, 2), Exact(96)),
        ((3, 4, 2), Exact(101)),
        ((4, 4, 2), Exact(96)),
        ((2, 3, 2), Exact(99)),
        ((2, 2, 2), Exact(97)),
        ((1, 4, 2), Exact(32)),
        ((2, 5, 2), LowerBound(96)),
    ];
    for ((p, q, g), want) in cases {
        let got = timed(Duration::from_secs(1), "count", || {
            count_components(p, q, g)
        })?
        .map_err(err)?;
        expect(&format!("count({p},{q},{g})"), got, want)?;
    }
    Ok(format!("{} counts", cases.len()))
}

/// Genus-3 spot values 1536 and 1547. The closed formula gives 384 and 395
/// here, so this check is expected to fail.
fn genus3_spot_values() -> Outcome {
    let mut bad = Vec::new();
    for ((p, q), want) in [((3, 5), 1536), ((3, 4), 1547)] {
        let got = count_components(p, q, 3).map_err(err)?.value();
        if got != want {
            bad.push(format!("count({p},{q},3) = {got}, stated {want}"));
        }
    }
    if bad.is_empty() {
        Ok("2 counts".into())
    } else {
        Err(bad.join("; "))
    }
}

fn abc_counts() -> Outcome {
    let cases = [
        ((3, 5, 2, false, 0, 0), 2),
        ((3, 5, 2, true, 0, 1), 2),
        ((4, 6, 2, true, 0, 0), 17),
        ((3, 4, 2, true, 0, 0), 5),
        ((4, 4, 2, true, 0, 0), 33),
    ];
    for ((p, q, g, a0, b, c), want) in cases {
        let got = count_components_abc(p, q, g, a0, b, c).map_err(err)?;
        expect(&format!("abc({p},{q},{g},a0={a0},b={b},c={c})"), got, want)?;
    }
    let mut sums = 0;
    for g in 2..=3 {
        for p in 3..=6 {
            for q in p..=6 {
                let total = count_components(p, q, g).map_err(err)?.value();
                expect(
                    &format!("Σ abc at ({p},{q},{g})"),
                    abc_total(p, q, g).map_err(err)?,
                    total,
                )?;
                sums += 1;
            }
        }
    }
    Ok(format!("{} values, {sums} consistency sums", cases.len()))
}

fn so1q_counts() -> Outcome {
    expect("(p=2,q=2,g=2)", count_so1q_kp(2, 2, 2).map_err(err)?, 35)?;
    expect("(p=5,q=1,g=2)", count_so1q_kp(5, 1, 2).map_err(err)?, 16)?;
    expect("(p=2,q=3,g=2)", count_so1q_kp(2, 3, 2).map_err(err)?, 32)?;
    expect("(p=3,q=7,g=2)", count_so1q_kp(3, 7, 2).map_err(err)?, 32)?;
    Ok("4 counts".into())
}

fn traces() -> Outcome {
    let phi3 = build_phi(&hitchin_eta(3, &generic_coeffs(3)).map_err(err)?).map_err(err)?;
    expect(
        "tr Φ² (p=3)",
        tr_power(&phi3, 2).map_err(err)?.to_string(),
        "8*q2".into(),
    )?;
    expect(
        "tr Φ⁴ (p=3)",
        tr_power(&phi3, 4).map_err(err)?.to_string(),
        "20*q2^2 + 8*q4".into(),
    )?;
    timed(
        Duration::from_secs(5),
        "p = 2..6 identities",
        || -> Result<(), String> {
            for p in 2..=6u32 {
                let eta = hitchin_eta(p, &generic_coeffs(p)).map_err(err)?;
                let phi = build_phi(&eta).map_err(err)?;
                let (qv, qw) = standard_forms(phi.ring(), p as usize, p as usize - 1);
                let q = total_form(&qv, &qw).map_err(err)?;
                if !is_skew_adjoint(&phi, &q).map_err(err)? {
                    return Err(format!("Φ is not skew-adjoint for p = {p}"));
                }
                for k in (1..2 * p).step_by(2) {
                    if !tr_power(&phi, k).map_err(err)?.is_zero() {
                        return Err(format!("tr Φ^{k} ≠ 0 for p = {p}"));
                    }
                }
            }
            Ok(())
        },
    )??;
    Ok("p=3 traces, p=2..6 odd traces and skew-adjointness".into())
}

fn gauge() -> Outcome {
    for (p, q) in [(2, 3), (3, 4), (3, 5), (4, 4), (4, 6)] {
        if !gauge_scale_check(p, q, None).map_err(err)? {
            return Err(format!("gauge identity fails for ({p},{q})"));
        }
    }
    Ok("p = 2, 3, 4".into())
}

fn dims() -> Outcome {
    let mut n = 0;
    for g in 2..=4 {
        for p in 1..=8 {
            for q in p..=8 {
                if !psi_dim_check(p, q, g) {
                    return Err(format!("psi_dim_check({p},{q},{g}) is false"));
                }
                n += 1;
            }
        }
    }
    for p in 1..=4 {
        let (l, r) = psi_dim_polys(p);
        if l != r {
            return Err(format!("p = {p}: {l} ≠ {r}"));
        }
    }
    Ok(format!("{n} numeric cases, symbolic in (g, q) for p ≤ 4"))
}

fn slot(rank: u32, det: Atom, stability: SlotStability) -> OrthoSlot {
    OrthoSlot {
        rank,
        det_atom: det,
        sw2: 0,
        stability,
    }
}

/// The type-(2) minimum at `(p, q)` over `W_0'` stable with trivial
/// determinant.
pub fn type2_representative(p: u32, q: u32, g: i64) -> Result<FixedPointChain, Error> {
    let n = q - p + 1;
    let so1n = ChainBuilder::new(1, n, g)
        .twist(p as i64)
        .node(NodeSpec::line(Side::V, 0, LineClass::k_power(0)))
        .node(NodeSpec::new(
            Side::W,
            0,
            Payload::Slot(slot(n, Atom::trivial(), SlotStability::Stable)),
        ))
        .build()?;
    Ok(psi_fixed_point(p, q, &so1n)?)
}

/// The type-(4) minimum of `SO(p, p+1)` with `deg W_{-p} = d`.
pub fn type4_representative(p: u32, g: i64, d: i64) -> Result<FixedPointChain, Error> {
    let so1n = so1n_tail_chain(2, p, g, Atom::trivial(), d, None)?;
    Ok(psi_fixed_point(p, p + 1, &so1n)?)
}

/// Chains of minimum shape with one end pair inflated to rank 2, together
/// with the top weight `2r`, where `Λ²` of the end is nonzero while
/// `Hom_{2r+1}` vanishes.
pub fn rank_inflated_counterexamples(g: i64) -> Result<Vec<(String, FixedPointChain, i64)>, Error> {
    let kl = LineClass::k_power;
    let bundle = |d| Payload::Bundle(BundleClass { rank: 2, degree: d });
    let mut out = Vec::new();

    let a = ChainBuilder::new(4, 4, g)
        .node(NodeSpec::new(Side::V, -1, bundle(1)))
        .node(NodeSpec::new(
            Side::W,
            0,
            Payload::Slot(slot(4, Atom::trivial(), SlotStability::Stable)),
        ))
        .node(NodeSpec::new(Side::V, 1, bundle(-1)))
        .arrow(NodeRef::new(Side::V, -1), NodeRef::new(Side::W, 0))
        .build()?;
    out.push(("SO(4,4): rank-2 V_{±1} around W_0".to_string(), a, 2));

    let b = ChainBuilder::new(5, 5, g)
        .node(NodeSpec::new(Side::V, -2, bundle(3)))
        .node(NodeSpec::line(Side::W, -1, kl(1)))
        .node(NodeSpec::line(Side::V, 0, kl(0)))
        .node(NodeSpec::line(Side::W, 1, kl(-1)))
        .node(NodeSpec::new(Side::V, 2, bundle(-3)))
        .node(NodeSpec::new(
            Side::W,
            0,
            Payload::Slot(slot(3, Atom::trivial(), SlotStability::Stable)),
        ))
        .arrow(NodeRef::new(Side::V, -2), NodeRef::new(Side::W, -1))
        .arrow(NodeRef::new(Side::W, -1), NodeRef::new(Side::V, 0))
        .build()?;
    out.push((
        "SO(5,5): type-(2) shape with rank-2 V_{±2}".to_string(),
        b,
        4,
    ));

    let c = ChainBuilder::new(3, 6, g)
        .node(NodeSpec::new(Side::W, -3, bundle(5)))
        .node(NodeSpec::line(Side::V, -2, kl(2)))
        .node(NodeSpec::line(Side::W, -1, kl(1)))
        .node(NodeSpec::line(Side::V, 0, kl(0)))
        .node(NodeSpec::line(Side::W, 1, kl(-1)))
        .node(NodeSpec::line(Side::V, 2, kl(-2)))
        .node(NodeSpec::new(Side::W, 3, bundle(-5)))
        .arrow(NodeRef::new(Side::W, -3), NodeRef::new(Side::V, -2))
        .arrow(NodeRef::new(Side::V, -2), NodeRef::new(Side::W, -1))
        .arrow(NodeRef::new(Side::W, -1), NodeRef::new(Side::V, 0))
        .build()?;
    out.push((
        "SO(3,6): type-(4) shape with rank-2 W_{±3}".to_string(),
        c,
        6,
    ));
    Ok(out)
}

/// Compares `ad_η` with the brute-force oracle at every positive weight.
fn oracle_agrees(c: &FixedPointChain) -> Result<(), String> {
    for k in 1..=*weight_range(c).end() {
        let m = ad_eta(c, k);
        let (d, e, r) = fibre_block_ranks(c, k, 0xb10c);
        let ours = (
            m.domain_rank() as usize,
            m.codomain_rank() as usize,
            m.fiber_rank(),
        );
        if ours != (d, e, r) {
            return Err(format!(
                "weight {k}: ad_eta gives {ours:?}, oracle gives {:?}",
                (d, e, r)
            ));
        }
    }
    Ok(())
}

fn minima_criterion() -> Outcome {
    let g = 2;
    let reps = [
        (
            "type-(2) (3,5)",
            type2_representative(3, 5, g).map_err(err)?,
        ),
        (
            "type-(4) (3,4)",
            type4_representative(3, g, 3).map_err(err)?,
        ),
    ];
    for (name, c) in &reps {
        for k in weight_range(c) {
            let h = hyper_dims(c, k, Genericity::Special).map_err(err)?;
            if !h.h2.is_zero() {
                return Err(format!("{name}: h² = {} at weight {k}", h.h2));
            }
            if k > 0 && is_sheaf_iso(&ad_eta(c, k)) != Ok(true) {
                return Err(format!("{name}: not an isomorphism at weight {k}"));
            }
        }
        oracle_agrees(c).map_err(|e| format!("{name}: {e}"))?;
    }
    let bad = rank_inflated_counterexamples(g).map_err(err)?;
    for (name, c, k) in &bad {
        if c.nodes().len() > 12 {
            return Err(format!("{name} has more than 12 nodes"));
        }
        if matches!(is_sheaf_iso(&ad_eta(c, *k)), Ok(true)) {
            return Err(format!("{name}: unexpectedly an isomorphism at weight {k}"));
        }
        let (d, e, r) = fibre_block_ranks(c, *k, 0xb10c);
        if d == e && r == d {
            return Err(format!(
                "{name}: oracle finds an isomorphic fibre at weight {k}"
            ));
        }
        oracle_agrees(c).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(format!("2 minima, {} counterexamples", bad.len()))
}

/// Fixed points in the image of Ψ used by the grading totals.
pub fn psi_image_fixed_points(p: u32, q: u32, g: i64) -> Result<Vec<FixedPointChain>, Error> {
    let n = q - p + 1;
    let mut out = Vec::new();
    for det in [Atom::trivial(), Atom::two_torsion("I")] {
        let w0 = Payload::Slot(slot(n, det.clone(), SlotStability::Stable));
        let so1n = ChainBuilder::new(1, n, g)
            .twist(p as i64)
            .node(NodeSpec::line(
                Side::V,
                0,
                LineClass::new(det.clone(), 1, 0),
            ))
            .node(NodeSpec::new(Side::W, 0, w0))
            .build()?;
        out.push(psi_fixed_point(p, q, &so1n)?);
    }
    if n >= 2 {
        let rest = (n > 2).then(|| slot(n - 2, Atom::trivial(), SlotStability::Stable));
        for d in [1, p as i64 * (2 * g - 2)] {
            let so1n = so1n_tail_chain(n, p, g, Atom::trivial(), d, rest.clone())?;
            out.push(psi_fixed_point(p, q, &so1n)?);
        }
    }
    Ok(out)
}

fn grading_totals() -> Outcome {
    let g = 2;
    let mut checked = 0;
    for p in 1..=5u32 {
        for q in p..=8u32 {
            for c in psi_image_fixed_points(p, q, g).map_err(err)? {
                let (mut sv, mut sw, mut hom, mut chi) = (0, 0, 0, 0);
                for k in weight_range(&c) {
                    let pieces = graded_pieces(&c, k);
                    sv += pieces.so_v.rank();
                    sw += pieces.so_w.rank();
                    hom += pieces.hom.rank();
                    chi += euler_char(&c, k);
                }
                let tag = format!("({p},{q})");
                expect(&format!("{tag} Σ so_k(V)"), sv, p * (p - 1) / 2)?;
                expect(&format!("{tag} Σ so_k(W)"), sw, q * (q - 1) / 2)?;
                expect(&format!("{tag} Σ Hom_k"), hom, p * q)?;
                expect(
                    &format!("{tag} Σ χ"),
                    chi,
                    total_euler_char(p, q, g, c.twist()),
                )?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} fixed points"))
}

fn milnor_wood_case(g: i64, d: i64) -> Result<bool, Error> {
    let n = Atom::free("N", d);
    let c = ChainBuilder::new(2, 3, g)
        .node(NodeSpec::line(Side::V, -1, LineClass::new(n.clone(), 1, 0)))
        .node(NodeSpec::line(Side::V, 1, LineClass::new(n, -1, 0)))
        .node(NodeSpec::new(
            Side::W,
            0,
            Payload::Slot(slot(3, Atom::trivial(), SlotStability::Stable)),
        ))
        .build()?;
    Ok(milnor_wood_check(&c)?)
}

fn stability_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x57ab);
    let total = 250;
    let mut with_arrows = 0;
    for i in 0..total {
        let c = random_chain(&mut rng, 2, 12);
        with_arrows += usize::from(c.has_arrows());
        let fast = stability_status(&c).map_err(err)?;
        let slow = exhaustive_status(&c).map_err(err)?;
        if fast != slow {
            return Err(format!(
                "chain #{i}: search says {fast}, oracle says {slow}: {}",
                emit_chain(&c)
            ));
        }
    }
    for g in 2..=4 {
        expect(
            &format!("Milnor-Wood g={g} deg 2g-2"),
            milnor_wood_case(g, 2 * g - 2).map_err(err)?,
            true,
        )?;
        expect(
            &format!("Milnor-Wood g={g} deg 2g-1"),
            milnor_wood_case(g, 2 * g - 1).map_err(err)?,
            false,
        )?;
    }
    Ok(format!(
        "{total} random chains ({with_arrows} with arrows), Milnor-Wood boundaries"
    ))
}

fn round_trip() -> Outcome {
    let mut n = 0;
    for (p, q) in [(3, 3), (3, 4), (3, 5), (4, 4), (4, 5), (4, 6), (5, 6)] {
        for f in enumerate_minima_families(p, q, 2).map_err(err)? {
            let Some(rep) = &f.representative else {
                continue;
            };
            let v = classify_minimum(rep).map_err(err)?;
            if v.kind != f.kind {
                return Err(format!(
                    "({p},{q}) {}: classified as {}",
                    f.descriptor,
                    v.kind.as_str()
                ));
            }
            if v.kind != MinimumKind::ZeroField
                && v.criterion_check.as_ref().is_some_and(|c| !c.agrees)
            {
                return Err(format!(
                    "({p},{q}) {}: criterion sweep disagrees",
                    f.descriptor
                ));
            }
            let text = emit_chain(rep);
            let back = parse_chain(&text).map_err(err)?;
            if back != *rep || emit_chain(&back) != text {
                return Err(format!(
                    "({p},{q}) {}: JSON round trip changed the chain",
                    f.descriptor
                ));
            }
            n += 1;
        }
    }
    Ok(format!("{n} representatives"))
}

/// `(id, title, check)`.
pub type Criterion = (&'static str, &'static str, fn() -> Outcome);

pub const CRITERIA: [Criterion; 11] = [
    ("1", "component counts", counts),
    ("1g3", "genus-3 spot values", genus3_spot_values),
    ("2", "per-invariant counts", abc_counts),
    ("3", "K^p-twisted SO(1,q) counts", so1q_counts),
    ("4", "trace identities", traces),
    ("5", "scaling gauge identity", gauge),
    ("6", "dimension consistency", dims),
    ("7", "minima criterion", minima_criterion),
    ("8", "grading totals", grading_totals),
    ("9", "stability oracle", stability_oracle),
    ("10", "round trips", round_trip),
];

pub fn run_criterion(id: &str) -> Option<CriterionResult> {
    let (id, title, f) = CRITERIA.iter().find(|(i, _, _)| *i == id).copied()?;
    let (passed, detail) = match f() {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    Some(CriterionResult {
        id,
        title,
        passed,
        detail,
    })
}

/// Criteria whose stated targets contradict the closed formulas.
pub const KNOWN_UNATTAINABLE: [&str; 1] = ["1g3"];

pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .filter_map(|(id, _, _)| run_criterion(id))
        .collect()
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} [{:>3}] {}: {}", self.id, self.title, self.detail)
    }
}

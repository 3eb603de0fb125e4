use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sopq::chain::json::{emit_chain, parse_chain};
use sopq::grading::{ad_eta, euler_char, total_euler_char, weight_range};
use sopq::hitchin::gauge_scale_check;
use sopq::minima::{enumerate_minima_families, MinimumKind};
use sopq::oracles::{fibre_block_ranks, random_chain};
use sopq::stability::{exhaustive_status, stability_status};
use sopq::topology::{count_components, stiefel_whitney};
use sopq::Rational;

fn chain_from(seed: u64) -> sopq::chain::FixedPointChain {
    random_chain(&mut ChaCha8Rng::seed_from_u64(seed), 2, 12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn stability_search_matches_exhaustive_oracle(seed in any::<u64>()) {
        let c = chain_from(seed);
        prop_assert_eq!(stability_status(&c), exhaustive_status(&c), "{}", emit_chain(&c));
    }

    #[test]
    fn ad_eta_rank_matches_dense_fibre(seed in any::<u64>(), eta_seed in any::<u64>()) {
        let c = chain_from(seed);
        for k in 1..=*weight_range(&c).end() {
            let m = ad_eta(&c, k);
            // A single random point can be degenerate; the generic rank is
            // the largest rank seen.
            let mut best = 0;
            for s in 0..3 {
                let (d, e, r) = fibre_block_ranks(&c, k, eta_seed.wrapping_add(s));
                prop_assert_eq!((m.domain_rank() as usize, m.codomain_rank() as usize), (d, e));
                prop_assert!(r <= m.fiber_rank(), "weight {}: oracle rank {} above generic {}", k, r, m.fiber_rank());
                best = best.max(r);
            }
            prop_assert_eq!(m.fiber_rank(), best, "weight {}", k);
        }
    }

    #[test]
    fn euler_characteristics_sum_to_the_total(seed in any::<u64>()) {
        let c = chain_from(seed);
        let chi: i64 = weight_range(&c).map(|k| euler_char(&c, k)).sum();
        prop_assert_eq!(chi, total_euler_char(c.p(), c.q(), c.g(), c.twist()));
    }

    #[test]
    fn chains_survive_json(seed in any::<u64>()) {
        let c = chain_from(seed);
        let text = emit_chain(&c);
        let back = parse_chain(&text);
        prop_assert_eq!(back.as_ref(), Ok(&c));
    }

    #[test]
    fn gauge_identity_holds_at_rational_points(
        p in 2u32..=4,
        extra in 0u32..=1,
        nums in proptest::collection::vec(-7i64..=7, 8),
    ) {
        let values: Vec<Rational> = nums[..p as usize - 1].iter().map(|&n| Rational::from_integer(n.into())).collect();
        prop_assert_eq!(gauge_scale_check(p, p + extra, Some(&values)), Ok(true));
    }
}

#[test]
fn family_counts_add_up_to_component_counts() {
    for g in 2..=4 {
        for p in 3..=6 {
            for q in p..=9 {
                let fams = enumerate_minima_families(p, q, g).unwrap();
                let sum: u64 = fams.iter().map(|f| f.count).sum();
                assert_eq!(
                    sum,
                    count_components(p, q, g).unwrap().value(),
                    "({p},{q},{g})"
                );
                let zero: u64 = fams
                    .iter()
                    .filter(|f| f.kind == MinimumKind::ZeroField)
                    .map(|f| f.count)
                    .sum();
                assert_eq!(zero, 1 << (2 * g + 2));
            }
        }
    }
}

#[test]
fn representatives_carry_their_family_invariants() {
    for (p, q) in [(3, 3), (3, 4), (3, 6), (4, 4), (4, 5), (5, 7)] {
        for f in enumerate_minima_families(p, q, 2).unwrap() {
            let Some(rep) = &f.representative else {
                continue;
            };
            let inv = stiefel_whitney(rep).unwrap();
            assert_eq!(inv.a_is_zero(), f.a_is_zero, "({p},{q}) {}", f.descriptor);
            assert_eq!((inv.b, inv.c), (f.b, f.c), "({p},{q}) {}", f.descriptor);
        }
    }
}

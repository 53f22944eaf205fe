mod common;

use std::collections::BTreeSet;

use num_bigint::BigInt;
use proptest::prelude::*;

use ssk3::ade::AdeType;
use ssk3::discform::{
    direct_sum, fqm_of_type, invariant_factors, orthogonal_complement, prime_factors, prime_part, span,
    FiniteQuadraticModule, FqmElement,
};
use ssk3::elliptic::{combine_groups, format_mw, parse_mw};
use ssk3::rdp::ade_types_of_rank;
use ssk3::tables::{decode_code, encode_code, CODE_BITS};

use common::*;

fn small_matrix(max_dim: usize, range: i64) -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(move |(r, c)| prop::collection::vec(prop::collection::vec(-range..=range, c), r))
}

fn square_matrix(max_dim: usize, range: i64) -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1..=max_dim).prop_flat_map(move |n| prop::collection::vec(prop::collection::vec(-range..=range, n), n))
}

fn small_type() -> impl Strategy<Value = AdeType> {
    let all: Vec<AdeType> = (1..=8).flat_map(ade_types_of_rank).collect();
    prop::sample::select(all)
}

fn element_of(g: &FiniteQuadraticModule, seed: &[u64]) -> FqmElement {
    FqmElement(g.divisors().iter().zip(seed.iter().cycle()).map(|(&d, &s)| s % d).collect())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn snf_is_exact(m in small_matrix(5, 12)) {
        prop_assert_eq!(check_snf(&m), Ok(()));
    }

    #[test]
    fn det_and_inverse_are_exact(m in square_matrix(5, 9)) {
        prop_assert_eq!(check_det_inverse(&m), Ok(()));
    }

    #[test]
    fn hnf_recovers_hermite_form(
        raw in prop::collection::vec(prop::collection::vec(-20i64..=20, 5), 4),
        cols in prop::sample::subsequence(vec![0usize, 1, 2, 3, 4], 0..=4),
        extra in 0usize..3,
        ops in prop::collection::vec((0usize..8, 0usize..8, -3i64..=3), 0..12),
    ) {
        let h0 = hermite_shape(&raw, &cols);
        let u = unimodular(h0.len() + extra, &ops);
        prop_assert_eq!(check_hnf(&h0, &u), Ok(()));
    }

    #[test]
    fn ade_type_round_trips(r in small_type()) {
        let back: AdeType = r.to_string().parse().unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn codec_round_trips(code in 0u64..(1 << CODE_BITS)) {
        let bits = decode_code(code).unwrap();
        prop_assert_eq!(bits.len(), CODE_BITS);
        prop_assert_eq!(encode_code(&bits).unwrap(), code);
    }

    #[test]
    fn codec_rejects_out_of_range(code in (1u64 << CODE_BITS)..u64::MAX) {
        prop_assert!(decode_code(code).is_err());
    }

    #[test]
    fn mw_strings_round_trip(raw in prop::collection::vec(2u64..40, 0..4)) {
        let mw = combine_groups(&[&raw]);
        prop_assert_eq!(parse_mw(&format_mw(&mw)).unwrap(), mw);
    }

    #[test]
    fn combine_groups_matches_snf(
        a in prop::collection::vec(2u64..30, 0..4),
        b in prop::collection::vec(2u64..30, 0..4),
    ) {
        let got = combine_groups(&[&a, &b]);
        let all: Vec<BigInt> = a.iter().chain(&b).map(|&d| BigInt::from(d)).collect();
        let want: Vec<u64> = invariant_factors(&all).into_iter().map(|d| u64::try_from(d).unwrap()).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn polarization_holds(r in small_type(), s1 in prop::collection::vec(0u64..1000, 8), s2 in prop::collection::vec(0u64..1000, 8)) {
        let g = fqm_of_type(&r);
        let (x, y) = (element_of(&g, &s1), element_of(&g, &s2));
        let lhs = ssk3::discform::mod2(g.q_value(&g.add(&x, &y)) - g.q_value(&x) - g.q_value(&y));
        let rhs = ssk3::discform::mod2(g.b_value(&x, &y) * num_rational::Rational64::from_integer(2));
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(g.b_value(&x, &y), g.b_value(&y, &x));
    }

    #[test]
    fn double_complement_is_identity(r in small_type(), seeds in prop::collection::vec(prop::collection::vec(0u64..1000, 8), 0..3)) {
        let g = fqm_of_type(&r);
        let gens: Vec<FqmElement> = seeds.iter().map(|s| element_of(&g, s)).collect();
        let s = span(&g, &gens);
        let perp = orthogonal_complement(&g, &gens);
        let back = span(&g, &orthogonal_complement(&g, &perp));
        prop_assert_eq!(back, s);
    }

    #[test]
    fn prime_parts_reassemble(r in small_type()) {
        let g = fqm_of_type(&r);
        let mut parts = Vec::new();
        let mut sum = FiniteQuadraticModule::trivial();
        for l in prime_factors(g.order()) {
            let (gl, embed) = prime_part(&g, l);
            for (i, e) in embed.iter().enumerate() {
                prop_assert_eq!(g.q_value(e), gl.q_value(&gl.generator(i)));
            }
            parts.push(embed);
            sum = direct_sum(&sum, &gl);
        }
        prop_assert_eq!(sum.order(), g.order());
        let all: Vec<FqmElement> = parts.concat();
        prop_assert_eq!(span(&g, &all).len() as u64, g.order());
    }
}

#[test]
fn nikulin_laws_small_corpus() {
    let n = suite_nikulin(16).unwrap();
    assert!(n > 50, "only {n} subgroups checked");
}

#[test]
fn rho_matches_roots_low_rank() {
    let n = suite_rho(6).unwrap();
    assert!(n > 40, "only {n} subgroups checked");
}

#[test]
fn reduction_matches_brute_force_small_corpus() {
    assert!(suite_reduction(16).unwrap() > 0);
}

#[test]
fn algorithms_agree_on_small_candidates() {
    let cands = sample_candidates(64, 2);
    assert_eq!(cands.len(), 2);
    for c in cands {
        assert!(check_algorithms_agree(&c.r, c.n, 64).unwrap().0 >= 1);
    }
}

#[test]
fn spec_example_isotropic_subgroups() {
    // G_{A1,2}: {0} and the diagonal.
    let r: AdeType = "A1".parse().unwrap();
    let g = ssk3::discform::fqm_of(&r, 2);
    let subs: BTreeSet<Vec<FqmElement>> = isotropic_subgroups(&g).into_iter().collect();
    assert_eq!(subs.len(), 2);
    assert!(subs.contains(&span(&g, &[FqmElement(vec![1, 1])])));
}

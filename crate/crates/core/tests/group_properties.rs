use proptest::prelude::*;

use subres_core::graded::{GradedDims, GroupElement, GroupTag, Monomial, PolyMap};
use subres_core::scalar::{rat, Rational};
use subres_core::spectrum::{degree_bound, ClassSet, SpectrumSpec, TypeClass};
use subres_core::verify::check_flag_preservation;

fn setting(k: usize) -> (SpectrumSpec, GradedDims) {
    match k {
        0 => (SpectrumSpec::new(vec![rat(-2, 1), rat(-1, 1)], rat(1, 5)).unwrap(), GradedDims::new(vec![1, 1]).unwrap()),
        1 => (SpectrumSpec::new(vec![rat(-3, 1), rat(-1, 1)], rat(1, 10)).unwrap(), GradedDims::new(vec![1, 2]).unwrap()),
        _ => (
            SpectrumSpec::new(vec![rat(-3, 1), rat(-2, 1), rat(-1, 1)], rat(1, 20)).unwrap(),
            GradedDims::new(vec![1, 1, 1]).unwrap(),
        ),
    }
}

/// Sub-resonance (or resonance) terms of degree 1..=d besides the diagonal.
fn slots(spec: &SpectrumSpec, dims: &GradedDims, classes: ClassSet) -> Vec<(usize, Monomial)> {
    let probe = PolyMap::<Rational>::zero(dims.clone(), dims.clone(), degree_bound(spec));
    let mut out = Vec::new();
    for n in 1..=degree_bound(spec) {
        for m in Monomial::all_of_degree(dims.total(), n) {
            for c in 0..dims.total() {
                // Linear terms inside a block would make the linear part
                // non-triangular; keep only cross-block ones.
                let same_block = n == 1 && dims.block_degrees(&m)[dims.block_of(c)] == 1;
                if !same_block && classes.contains(probe.class_of(spec, c, &m)) {
                    out.push((c, m.clone()));
                }
            }
        }
    }
    out
}

fn element(k: usize, coeffs: &[i64], diag: &[i64], tag: GroupTag) -> (SpectrumSpec, GroupElement<Rational>) {
    let (spec, dims) = setting(k);
    let d = degree_bound(&spec);
    let mut p = PolyMap::zero(dims.clone(), dims.clone(), d);
    for c in 0..dims.total() {
        p.add_term(c, Monomial::var(dims.total(), c), rat(diag[c % diag.len()], 3)).unwrap();
    }
    for ((c, m), v) in slots(&spec, &dims, tag.classes()).into_iter().zip(coeffs.iter().cycle()) {
        if *v != 0 {
            p.add_term(c, m, rat(*v, 2)).unwrap();
        }
    }
    let g = GroupElement::new(p, &spec, tag, 0.0).unwrap();
    (spec, g)
}

fn nonzero() -> impl Strategy<Value = i64> {
    prop_oneof![-3i64..=-1, 1i64..=3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sub_resonance_group_is_closed(
        k in 0usize..3,
        a in proptest::collection::vec(-2i64..=2, 12),
        b in proptest::collection::vec(-2i64..=2, 12),
        da in proptest::collection::vec(nonzero(), 3),
        db in proptest::collection::vec(nonzero(), 3),
    ) {
        let (spec, g) = element(k, &a, &da, GroupTag::SubResonance);
        let (_, h) = element(k, &b, &db, GroupTag::SubResonance);
        let gh = g.compose(&h, &spec, 0.0).unwrap();
        prop_assert!(gh.map().is_in_class(&spec, ClassSet::SUB_RESONANCE, 0.0));
        let gi = g.invert(&spec, 0.0).unwrap();
        let id = gi.compose(&g, &spec, 0.0).unwrap();
        prop_assert_eq!(id.map(), &PolyMap::identity(g.map().source(), degree_bound(&spec)));
        prop_assert!(check_flag_preservation(gh.map(), 0.0));
        prop_assert!(check_flag_preservation(gi.map(), 0.0));
    }

    #[test]
    fn resonance_group_is_closed(
        k in 0usize..3,
        a in proptest::collection::vec(-2i64..=2, 12),
        b in proptest::collection::vec(-2i64..=2, 12),
        da in proptest::collection::vec(nonzero(), 3),
    ) {
        let (spec, g) = element(k, &a, &da, GroupTag::Resonance);
        let (_, h) = element(k, &b, &da, GroupTag::Resonance);
        let gh = g.compose(&h, &spec, 0.0).unwrap();
        prop_assert_eq!(gh.tag(), GroupTag::Resonance);
        let gi = g.invert(&spec, 0.0).unwrap();
        prop_assert!(gi.map().is_in_class(&spec, ClassSet::RESONANCE, 0.0));
    }

    #[test]
    fn composition_is_associative(
        k in 0usize..3,
        a in proptest::collection::vec(-2i64..=2, 12),
        b in proptest::collection::vec(-2i64..=2, 12),
        c in proptest::collection::vec(-2i64..=2, 12),
        da in proptest::collection::vec(nonzero(), 3),
    ) {
        let (spec, g) = element(k, &a, &da, GroupTag::SubResonance);
        let (_, h) = element(k, &b, &da, GroupTag::SubResonance);
        let (_, j) = element(k, &c, &da, GroupTag::SubResonance);
        let left = g.compose(&h, &spec, 0.0).unwrap().compose(&j, &spec, 0.0).unwrap();
        let right = g.compose(&h.compose(&j, &spec, 0.0).unwrap(), &spec, 0.0).unwrap();
        prop_assert_eq!(left, right);
    }
}

#[test]
fn sub_resonance_terms_avoid_faster_blocks() {
    for k in 0..3 {
        let (spec, dims) = setting(k);
        let probe = PolyMap::<Rational>::zero(dims.clone(), dims.clone(), 1);
        for (c, m) in slots(&spec, &dims, ClassSet::SUB_RESONANCE) {
            assert_ne!(probe.class_of(&spec, c, &m), TypeClass::NonSubResonance);
            let i = dims.block_of(c);
            assert!(dims.block_degrees(&m)[..i].iter().all(|&s| s == 0));
        }
    }
}

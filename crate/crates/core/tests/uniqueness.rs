use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use subres_core::evaluator::{certified_rate, empirical_rate, sample_ball, EvalConfig, Evaluator};
use subres_core::graded::{GroupTag, PolyMap};
use subres_core::normal_form::{
    build_taylor, perturb_lift, resonance_reduce, BuildOptions, LiftStrategy, NormalFormResult,
};
use subres_core::samples::{power, random_single_block, worked, worked_float, worked_rational, Instance, RandomParams};
use subres_core::scalar::{rat, Rational, Scalar};
use subres_core::spectrum::{degree_bound, ClassSet};
use subres_core::verify::{
    check_centralizer, check_linearization, check_resonance_uniqueness, check_uniqueness, pinned_reproduces,
    transition_witness, VerifyError,
};

fn build<S: Scalar>(inst: &Instance<S>, lift: &LiftStrategy<S>) -> NormalFormResult<S> {
    build_taylor(&inst.ext, &inst.spec, inst.n, &inst.alpha, lift, BuildOptions::default()).unwrap()
}

#[test]
fn perturbed_lifts_differ_by_sub_resonance_maps() {
    let inst = worked_rational(3);
    let nf = build(&inst, &LiftStrategy::Complement);
    let mut moved = 0;
    for seed in 0..20 {
        let other = perturb_lift(&inst.ext, &nf, seed, &rat(1, 2), BuildOptions::default()).unwrap();
        let w = check_uniqueness(&other, &nf, 0.0).unwrap();
        assert!(w.verdict(), "seed {seed}");
        assert_eq!(w.is_identity(0.0), other.h == nf.h, "seed {seed}");
        moved += usize::from(other.h != nf.h);
        assert!(pinned_reproduces(&inst.ext, &other, BuildOptions::default()).unwrap());
    }
    assert!(moved >= 10);
}

#[test]
fn transitions_form_a_cocycle() {
    let inst = worked_rational(3);
    let a = build(&inst, &LiftStrategy::Complement);
    let b = perturb_lift(&inst.ext, &a, 1, &rat(1, 1), BuildOptions::default()).unwrap();
    let c = perturb_lift(&inst.ext, &a, 2, &rat(1, 3), BuildOptions::default()).unwrap();
    let d = degree_bound(&inst.spec);
    let ab = check_uniqueness(&a, &b, 0.0).unwrap();
    let bc = check_uniqueness(&b, &c, 0.0).unwrap();
    let ac = check_uniqueness(&a, &c, 0.0).unwrap();
    for x in 0..inst.ext.base().points() {
        let lhs = ab.entries[x].g.compose(&bc.entries[x].g, d).unwrap();
        assert_eq!(lhs, ac.entries[x].g);
    }
}

#[test]
fn seeded_lifts_are_reproducible() {
    let inst = worked_rational(3);
    let lift = LiftStrategy::Seeded { seed: 9, scale: rat(1, 4) };
    let a = build(&inst, &lift);
    let b = build(&inst, &lift);
    assert_eq!(a.h, b.h);
    assert_eq!(a.p, b.p);
    let w = check_uniqueness(&a, &build(&inst, &LiftStrategy::Complement), 0.0).unwrap();
    assert!(w.verdict());
}

#[test]
fn resonance_coordinates_differ_by_resonance_maps() {
    let inst = worked_rational(3);
    let a = build(&inst, &LiftStrategy::Complement);
    let b = perturb_lift(&inst.ext, &a, 5, &rat(1, 2), BuildOptions::default()).unwrap();
    let ra = resonance_reduce(&a, &LiftStrategy::Complement, BuildOptions::default()).unwrap();
    let rb = resonance_reduce(&b, &LiftStrategy::Seeded { seed: 3, scale: rat(1, 2) }, BuildOptions::default())
        .unwrap();
    let w = check_resonance_uniqueness(&inst.spec, &ra, &rb, 0.0).unwrap();
    assert!(w.verdict());
    assert_eq!(w.tag, GroupTag::Resonance);
}

#[test]
fn single_block_normal_form_is_linear_and_unique() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..10 {
        let inst = random_single_block(&mut rng, RandomParams::default());
        let a = build(&inst, &LiftStrategy::Complement);
        assert!(check_linearization(&inst.ext, &a, 0.0).verdict());
        let b = build(&inst, &LiftStrategy::Seeded { seed: 4, scale: rat(1, 1) });
        assert_eq!(a.h, b.h);
        let c = perturb_lift(&inst.ext, &a, 8, &rat(1, 1), BuildOptions::default()).unwrap();
        assert!(check_uniqueness(&a, &c, 0.0).unwrap().is_identity(0.0));
    }
}

#[test]
fn square_of_the_extension_commutes() {
    let inst = worked_rational(3);
    let nf = build(&inst, &LiftStrategy::Complement);
    let g = power(&inst.ext, 2);
    let reduced = resonance_reduce(&nf, &LiftStrategy::Complement, BuildOptions::default()).unwrap();
    let report = check_centralizer(&inst.ext, &nf, &g, nf.n, &nf.alpha, Some(&reduced), 0.0).unwrap();
    assert!(report.verdict());
    let d = nf.d;
    for x in 0..inst.ext.base().points() {
        let fx = inst.ext.base().f(x);
        let expected = nf.p[fx].map().compose(nf.p[x].map(), d).unwrap();
        assert_eq!(report.sub_resonance.entries[x].g, expected);
        let pt = &reduced.p_tilde;
        let expected = pt[fx].map().compose(pt[x].map(), d).unwrap();
        assert_eq!(report.resonance.as_ref().unwrap().entries[x].g, expected);
    }
}

#[test]
fn non_commuting_extension_is_rejected() {
    let inst = worked_rational(3);
    let nf = build(&inst, &LiftStrategy::Complement);
    let other = worked::<Rational>(rat(27, 200), rat(1, 3), 3);
    let err = check_centralizer(&inst.ext, &nf, &other.ext, 3, &rat(1, 1), None, 0.0).unwrap_err();
    assert!(matches!(err, VerifyError::NotCommuting { point: 0, .. }), "{err:?}");
}

#[test]
fn perturbation_classes_are_sub_resonance_in_float() {
    let inst = worked_float(3);
    let nf = build(&inst, &LiftStrategy::Complement);
    let other = perturb_lift(&inst.ext, &nf, 2, &rat(1, 2), BuildOptions::default()).unwrap();
    let w = transition_witness(&inst.spec, &other.h, &nf.h, GroupTag::SubResonance, 1e-12).unwrap();
    assert!(w.entries.iter().all(|e| e.g.is_in_class(&inst.spec, ClassSet::SUB_RESONANCE, 1e-12)));
    assert!(!w.is_identity(1e-12));
}

#[test]
fn increments_contract_at_the_certified_rate() {
    let inst = worked_float(2);
    let nf = build(&inst, &LiftStrategy::Complement);
    let ev = Evaluator::new(&nf, &inst.ext, EvalConfig::default()).unwrap();
    let bound = certified_rate(&nf);
    assert!(bound < 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let t = sample_ball(&mut rng, 2, 0.05);
        let out = ev.eval_h(0, &t).unwrap();
        if let Some(rate) = empirical_rate(&out.increments, 1e-15, ev.period(0)) {
            assert!(rate <= 2.0 * bound, "{rate} vs {bound}");
        }
    }
}

#[test]
fn identity_jets_are_not_a_normal_form_of_a_nonlinear_map() {
    let inst = worked_rational(2);
    let id = vec![PolyMap::identity(inst.ext.dims(), 2)];
    assert!(build(&inst, &LiftStrategy::Pinned(id.clone())).h != id);
}

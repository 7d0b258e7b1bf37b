use subres_core::base::FiniteBase;
use subres_core::graded::{GradedDims, GroupElement, GroupTag, Monomial, PolyMap};
use subres_core::normal_form::{build_taylor, reduce_polynomials, BuildOptions, LiftStrategy};
use subres_core::samples::{linear, scalar_quadratic, worked, worked_float, worked_rational};
use subres_core::scalar::{rat, Rational, Scalar};
use subres_core::spectrum::SpectrumSpec;

fn m(e: &[u8]) -> Monomial {
    Monomial::new(e)
}

fn dims11() -> GradedDims {
    GradedDims::new(vec![1, 1]).unwrap()
}

fn coeff<S: Scalar>(p: &PolyMap<S>, c: usize, e: &[u8]) -> S {
    p.coeff(c, &m(e)).cloned().unwrap_or_else(S::zero)
}

/// Degree-2 matching of `H ∘ F = P ∘ H` in block 2, monomial `t1 t2`:
/// `h a b + 1 = b h`.
fn worked_h_oracle<S: Scalar>(a: S, b: S) -> S {
    let lhs = a * b.clone() - b;
    -S::one() / lhs
}

#[test]
fn worked_h_rational() {
    let (a, b) = (rat(27, 200), rat(46, 125));
    let inst = worked_rational(2);
    let nf = build_taylor(&inst.ext, &inst.spec, 2, &inst.alpha, &LiftStrategy::Complement, BuildOptions::default())
        .unwrap();
    assert_eq!(coeff(&nf.h[0], 1, &[1, 1]), worked_h_oracle(a.clone(), b.clone()));
    let p = nf.p[0].map();
    assert_eq!(coeff(p, 0, &[1, 0]), a);
    assert_eq!(coeff(p, 0, &[0, 2]), rat(1, 1));
    assert_eq!(coeff(p, 1, &[0, 1]), b);
    assert_eq!(p.len(), 3);
}

#[test]
fn worked_h_float() {
    let inst = worked_float(2);
    let nf = build_taylor(&inst.ext, &inst.spec, 2, &inst.alpha, &LiftStrategy::Complement, BuildOptions::default())
        .unwrap();
    let h = coeff(&nf.h[0], 1, &[1, 1]);
    let expected = worked_h_oracle(libm::exp(-2.0), libm::exp(-1.0));
    assert!((h - expected).abs() < 1e-10);
    assert!((h - 3.14375).abs() < 1e-5);
}

fn coupled<S: Scalar>(a: S, b: S, u: S) -> (SpectrumSpec, FiniteBase, Vec<GroupElement<S>>) {
    let spec = SpectrumSpec::new(vec![rat(-2, 1), rat(-1, 1)], rat(1, 5)).unwrap();
    let p = PolyMap::from_terms(dims11(), dims11(), 1, [(0, m(&[1, 0]), a), (0, m(&[0, 1]), u), (1, m(&[0, 1]), b)])
        .unwrap();
    let g = GroupElement::new(p, &spec, GroupTag::SubResonance, 0.0).unwrap();
    (spec, FiniteBase::new(vec![0]).unwrap(), vec![g])
}

/// Degree-1 matching, entry (1, 2): `g b + u = a g`.
fn coupling_oracle<S: Scalar>(a: S, b: S, u: S) -> S {
    u / (a - b)
}

#[test]
fn linear_coupling_rational() {
    let (a, b, u) = (rat(27, 200), rat(46, 125), rat(1, 1));
    let (spec, base, ps) = coupled(a.clone(), b.clone(), u.clone());
    let r = reduce_polynomials(&base, &spec, &ps, &LiftStrategy::Complement, BuildOptions::default()).unwrap();
    assert_eq!(coeff(r.h_prime[0].map(), 0, &[0, 1]), coupling_oracle(a.clone(), b.clone(), u));
    let pt = r.p_tilde[0].map();
    assert_eq!(pt.len(), 2);
    assert_eq!(coeff(pt, 0, &[1, 0]), a);
    assert_eq!(coeff(pt, 1, &[0, 1]), b);
}

#[test]
fn linear_coupling_float() {
    let (a, b) = (libm::exp(-2.0), libm::exp(-1.0));
    let (spec, base, ps) = coupled(a, b, 1.0);
    let r = reduce_polynomials(&base, &spec, &ps, &LiftStrategy::Complement, BuildOptions::default()).unwrap();
    let g = coeff(r.h_prime[0].map(), 0, &[0, 1]);
    assert!((g - coupling_oracle(a, b, 1.0)).abs() < 1e-10);
    assert!((g + 4.30026).abs() < 1e-5);
}

#[test]
fn strict_sub_resonance_quadratic() {
    // chi = (-5/2, -1): t2^2 in block 1 is strict sub-resonance.
    let spec = SpectrumSpec::new(vec![rat(-5, 2), rat(-1, 1)], rat(1, 10)).unwrap();
    let (a, b, c) = (libm::exp(-2.5), libm::exp(-1.0), 0.75);
    let p = PolyMap::from_terms(dims11(), dims11(), 2, [(0, m(&[1, 0]), a), (0, m(&[0, 2]), c), (1, m(&[0, 1]), b)])
        .unwrap();
    let g = GroupElement::new(p.clone(), &spec, GroupTag::SubResonance, 0.0).unwrap();
    let base = FiniteBase::new(vec![0]).unwrap();
    let r = reduce_polynomials(&base, &spec, &[g], &LiftStrategy::Complement, BuildOptions::default()).unwrap();
    let hp = r.h_prime[0].map();
    // H'(P(t)) = P~(H'(t)) in block 1, monomial t2^2: c + g b^2 = a g.
    let expected = c / (a - b * b);
    assert!((coeff(hp, 0, &[0, 2]) - expected).abs() < 1e-12);
    let pt = r.p_tilde[0].map();
    assert_eq!(pt.len(), 2);
    // Composing back.
    let lhs = hp.compose(&p, 2).unwrap();
    let rhs = pt.compose(hp, 2).unwrap();
    assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
}

#[test]
fn scalar_quadratic_linearizes() {
    let a = rat(3, 8);
    let inst = scalar_quadratic(a.clone(), 2);
    let nf = build_taylor(&inst.ext, &inst.spec, 2, &inst.alpha, &LiftStrategy::Complement, BuildOptions::default())
        .unwrap();
    // h (a^2 - a) = -1
    let h = coeff(&nf.h[0], 0, &[2]);
    assert_eq!(h * (a.clone() * a.clone() - a.clone()), rat(-1, 1));
    assert_eq!(nf.p[0].map().len(), 1);
    assert_eq!(coeff(nf.p[0].map(), 0, &[1]), a);
}

#[test]
fn linear_input_is_its_own_normal_form() {
    let inst = linear(rat(27, 200), rat(46, 125), 3);
    let nf = build_taylor(&inst.ext, &inst.spec, 3, &inst.alpha, &LiftStrategy::Complement, BuildOptions::default())
        .unwrap();
    assert_eq!(nf.h[0], PolyMap::identity(&dims11(), 3));
    assert_eq!(nf.p[0].map(), &inst.ext.fiber(0).with_cap(2));
}

#[test]
fn already_resonant_input_is_unchanged() {
    let inst = worked::<Rational>(rat(27, 200), rat(46, 125), 2);
    let nf = build_taylor(&inst.ext, &inst.spec, 2, &inst.alpha, &LiftStrategy::Complement, BuildOptions::default())
        .unwrap();
    let r = reduce_polynomials(&nf.base, &nf.spec, &nf.p, &LiftStrategy::Complement, BuildOptions::default()).unwrap();
    assert_eq!(r.h_prime[0].map(), &PolyMap::identity(&dims11(), 2));
    assert_eq!(r.p_tilde[0].map(), nf.p[0].map());
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use subres_core::base::Extension;
use subres_core::graded::{GradedDims, PolyMap};
use subres_core::linalg::Matrix;
use subres_core::normal_form::{build_taylor, resonance_reduce, BuildOptions, LiftStrategy, NormalFormResult};
use subres_core::samples::{random_instance, Instance, RandomParams};
use subres_core::scalar::{Rational, Scalar};
use subres_core::spectrum::{degree_bound, max_forward_bound, ClassSet};

fn instances(count: usize, seed: u64) -> Vec<Instance<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng, RandomParams::default())).collect()
}

fn build<S: Scalar>(inst: &Instance<S>) -> NormalFormResult<S> {
    build_taylor(&inst.ext, &inst.spec, inst.n, &inst.alpha, &LiftStrategy::Complement, BuildOptions::default())
        .unwrap()
}

fn below<S: Scalar>(p: &PolyMap<S>, n: u32) -> PolyMap<S> {
    p.filter(|m, _| m.degree() < n)
}

/// Degree-`n` inhomogeneity rebuilt from the lower-degree data of `nf`.
fn inhomogeneity<S: Scalar>(ext: &Extension<S>, nf: &NormalFormResult<S>, n: u32, x: usize) -> PolyMap<S> {
    let fx = ext.base().f(x);
    let lhs = below(&nf.h[fx], n).compose(ext.fiber(x), n).unwrap().homogeneous_part(n);
    let rhs = below(nf.p[x].map(), n).compose(&below(&nf.h[x], n), n).unwrap().homogeneous_part(n);
    let inv = ext.linear(x).inverse().unwrap();
    lhs.sub(&rhs).unwrap().left_linear(&inv, &nf.dims).unwrap()
}

/// `(L^k_x)^{-1} ∘ R ∘ L^k_x`, with the inverse accumulated step by step.
struct Transfer<S> {
    lk: Matrix<S>,
    lk_inv: Matrix<S>,
}

impl<S: Scalar> Transfer<S> {
    fn new(m: usize) -> Self {
        Self { lk: Matrix::identity(m), lk_inv: Matrix::identity(m) }
    }

    fn apply(&self, r: &PolyMap<S>, dims: &GradedDims) -> PolyMap<S> {
        r.right_linear(&self.lk, dims).unwrap().left_linear(&self.lk_inv, dims).unwrap()
    }

    fn step(&mut self, a: &Matrix<S>) {
        self.lk = a.mul(&self.lk).unwrap();
        self.lk_inv = self.lk_inv.mul(&a.inverse().unwrap()).unwrap();
    }
}

#[test]
fn jet_conjugacy_is_exact_on_random_instances() {
    for inst in instances(20, 2024) {
        let nf = build(&inst);
        let d = degree_bound(&inst.spec);
        for x in 0..inst.ext.base().points() {
            let fx = inst.ext.base().f(x);
            let lhs = nf.h[fx].compose(inst.ext.fiber(x), inst.n).unwrap();
            let rhs = nf.p[x].map().compose(&nf.h[x], inst.n).unwrap();
            let diff = lhs.sub(&rhs).unwrap();
            assert!(diff.is_empty(), "{diff:?}");
            assert!(nf.p[x].map().is_in_class(&inst.spec, ClassSet::SUB_RESONANCE, 0.0));
            assert!(nf.p[x].map().degree() <= d);
        }
        let r = resonance_reduce(&nf, &LiftStrategy::Complement, BuildOptions::default()).unwrap();
        for x in 0..inst.ext.base().points() {
            let fx = inst.ext.base().f(x);
            let lhs = r.h_prime[fx].map().compose(nf.p[x].map(), d).unwrap();
            let rhs = r.p_tilde[x].map().compose(r.h_prime[x].map(), d).unwrap();
            assert!(lhs.sub(&rhs).unwrap().is_empty());
            assert!(r.p_tilde[x].map().is_in_class(&inst.spec, ClassSet::RESONANCE, 0.0));
        }
    }
}

#[test]
fn cycle_solve_matches_closed_series_exactly() {
    for inst in instances(10, 77) {
        let nf = build(&inst);
        let ext = &inst.ext;
        let base = ext.base();
        for n in 2..=inst.n {
            for x in 0..base.points() {
                let q = base.cycles().iter().find(|c| c.contains(&x)).unwrap().len();
                let hbar = |y: usize| nf.h[y].homogeneous_part(n).project(&inst.spec, ClassSet::NON_SUB);
                // H̄_x = Σ_{k<q} Φ^(k) Q̄_{f^k x} + Φ^(q) H̄_{f^q x}
                let mut acc = PolyMap::zero(nf.dims.clone(), nf.dims.clone(), inst.n);
                let mut tr = Transfer::new(nf.dims.total());
                let mut y = x;
                for _ in 0..q {
                    let qbar = inhomogeneity(ext, &nf, n, y).project(&inst.spec, ClassSet::NON_SUB);
                    acc = acc.add(&tr.apply(&qbar, &nf.dims)).unwrap();
                    tr.step(&ext.linear(y));
                    y = base.f(y);
                }
                assert_eq!(y, x);
                acc = acc.add(&tr.apply(&hbar(x), &nf.dims)).unwrap();
                assert!(acc.sub(&hbar(x)).unwrap().is_empty(), "degree {n}, point {x}");
            }
        }
    }
}

#[test]
fn cycle_solve_matches_truncated_series_in_float() {
    for inst in instances(10, 78) {
        let inst = inst.to_f64();
        let nf = build(&inst);
        let ext = &inst.ext;
        let base = ext.base();
        for n in 2..=inst.n {
            let Some(exponent) = max_forward_bound(&inst.spec, n) else { continue };
            let factor = subres_core::spectrum::exp_of(&exponent);
            let terms = (libm::log(1e-16) / libm::log(factor)).ceil() as usize + 1;
            for x in 0..base.points() {
                let mut acc = PolyMap::zero(nf.dims.clone(), nf.dims.clone(), inst.n);
                let mut tr = Transfer::new(nf.dims.total());
                let mut y = x;
                for _ in 0..terms {
                    let qbar = inhomogeneity(ext, &nf, n, y).project(&inst.spec, ClassSet::NON_SUB);
                    acc = acc.add(&tr.apply(&qbar, &nf.dims)).unwrap();
                    tr.step(&ext.linear(y));
                    y = base.f(y);
                }
                let hbar = nf.h[x].homogeneous_part(n).project(&inst.spec, ClassSet::NON_SUB);
                let err = acc.sub(&hbar).unwrap().max_abs();
                assert!(err <= 1e-12 * (1.0 + hbar.max_abs()), "degree {n}, point {x}: {err:e}");
            }
        }
    }
}

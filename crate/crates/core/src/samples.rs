//! Reference instances and a seeded generator of random validated ones.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::base::{validate_extension, Extension, FiniteBase};
use crate::graded::{GradedDims, Monomial, PolyMap};
use crate::linalg::Matrix;
use crate::scalar::{rat, rational_to_f64, Rational, Scalar};
use crate::spectrum::{criticality, degree_bound, spectral_constants, SpectrumSpec};

/// An extension together with its spectrum and regularity.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<S> {
    pub ext: Extension<S>,
    pub spec: SpectrumSpec,
    pub n: u32,
    pub alpha: Rational,
}

impl<S: Scalar> Instance<S> {
    pub fn to_f64(&self) -> Instance<f64> {
        Instance { ext: self.ext.to_f64(), spec: self.spec.clone(), n: self.n, alpha: self.alpha.clone() }
    }
}

fn dims(d: &[usize]) -> GradedDims {
    GradedDims::new(d.to_vec()).expect("positive block sizes")
}

fn mono(e: &[u8]) -> Monomial {
    Monomial::new(e)
}

fn fixed_point() -> FiniteBase {
    FiniteBase::new(vec![0]).expect("identity")
}

/// `F(t) = (a t1 + t2^2, b t2 + t1 t2)` over a fixed point with
/// `chi = (-2, -1)`, `eps = 1/5`.
pub fn worked<S: Scalar>(a: S, b: S, n: u32) -> Instance<S> {
    let g = dims(&[1, 1]);
    let f = PolyMap::from_terms(
        g.clone(),
        g.clone(),
        2,
        [
            (0, mono(&[1, 0]), a),
            (0, mono(&[0, 2]), S::one()),
            (1, mono(&[0, 1]), b),
            (1, mono(&[1, 1]), S::one()),
        ],
    )
    .expect("well-formed");
    let ext = Extension::new(fixed_point(), g, vec![f], 0.25, 0.9).expect("valid constants");
    let spec = SpectrumSpec::new(vec![rat(-2, 1), rat(-1, 1)], rat(1, 5)).expect("valid spectrum");
    Instance { ext, spec, n, alpha: rat(1, 1) }
}

/// The worked instance with `a = e^-2`, `b = e^-1`.
pub fn worked_float(n: u32) -> Instance<f64> {
    worked(libm::exp(-2.0), libm::exp(-1.0), n)
}

/// The worked instance with rational `a = 27/200`, `b = 46/125` near
/// `e^-2`, `e^-1`.
pub fn worked_rational(n: u32) -> Instance<Rational> {
    worked(rat(27, 200), rat(46, 125), n)
}

/// Scalar `F(t) = a t + t^2` over a fixed point, `chi = (-1)`.
pub fn scalar_quadratic<S: Scalar>(a: S, n: u32) -> Instance<S> {
    let g = dims(&[1]);
    let f = PolyMap::from_terms(g.clone(), g.clone(), 2, [(0, mono(&[1]), a), (0, mono(&[2]), S::one())])
        .expect("well-formed");
    let ext = Extension::new(fixed_point(), g, vec![f], 0.25, 0.9).expect("valid constants");
    let spec = SpectrumSpec::new(vec![rat(-1, 1)], rat(1, 10)).expect("valid spectrum");
    Instance { ext, spec, n, alpha: rat(1, 1) }
}

/// Diagonal linear `F = diag(a, b)` with the worked spectrum.
pub fn linear<S: Scalar>(a: S, b: S, n: u32) -> Instance<S> {
    let g = dims(&[1, 1]);
    let f = PolyMap::from_terms(g.clone(), g.clone(), 1, [(0, mono(&[1, 0]), a), (1, mono(&[0, 1]), b)])
        .expect("well-formed");
    let ext = Extension::new(fixed_point(), g, vec![f], 0.25, 0.9).expect("valid constants");
    let spec = SpectrumSpec::new(vec![rat(-2, 1), rat(-1, 1)], rat(1, 5)).expect("valid spectrum");
    Instance { ext, spec, n, alpha: rat(1, 1) }
}

/// `G = F^k` as an extension over `f^k`.
pub fn power<S: Scalar>(ext: &Extension<S>, k: usize) -> Extension<S> {
    let base = ext.base();
    let perm: Vec<usize> = (0..base.points()).map(|x| base.iterate(x, k)).collect();
    let cap = ext.degree().max(1).pow(k as u32);
    let fibers = (0..base.points())
        .map(|x| crate::base::orbit_compose(ext, x, k, cap).expect("same fiber"))
        .collect();
    let sigma = ext.sigma();
    let xi = libm::pow(ext.xi(), k as f64);
    Extension::new(FiniteBase::new(perm).expect("power of a permutation"), ext.dims().clone(), fibers, sigma, xi)
        .expect("power of a valid extension")
}

/// Size limits of random instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomParams {
    pub max_points: usize,
    pub max_blocks: usize,
    /// Bound on the total fiber dimension.
    pub max_dim: usize,
    pub max_n: u32,
}

impl Default for RandomParams {
    fn default() -> Self {
        Self { max_points: 6, max_blocks: 3, max_dim: 4, max_n: 5 }
    }
}

/// Simplest rational `p/q` (`q <= 40`) strictly inside `(lo, hi)` nearest `target`.
fn rational_near(target: f64, lo: f64, hi: f64) -> Rational {
    let mut best: Option<(f64, Rational)> = None;
    for q in 1..=40i64 {
        let p = libm::round(target * q as f64) as i64;
        let v = p as f64 / q as f64;
        if v > lo && v < hi && p != 0 {
            let err = libm::fabs(v - target);
            if best.as_ref().is_none_or(|(e, _)| err < *e) {
                best = Some((err, rat(p, q)));
            }
        }
    }
    best.map(|(_, r)| r).expect("window contains a rational with small denominator")
}

fn random_spectrum<R: Rng + ?Sized>(rng: &mut R, ell: usize, n: u32, alpha: &Rational) -> Option<SpectrumSpec> {
    let mut pool: Vec<Rational> = vec![rat(-3, 2), rat(-2, 1), rat(-5, 2), rat(-3, 1)];
    pool.shuffle(rng);
    let mut chi: Vec<Rational> = pool.into_iter().take(ell - 1).collect();
    chi.push(rat(-1, 1));
    chi.sort();
    let probe = SpectrumSpec::new(chi.clone(), rat(1, 1000)).ok()?;
    let eps0 = spectral_constants(&probe).epsilon0;
    let crit = criticality(&probe, n, alpha).ok()?;
    if !crit.ok {
        return None;
    }
    let bound = if crit.epsilon_bound < eps0 { crit.epsilon_bound } else { eps0 };
    let bound = bound.min(rat(1, 4));
    // Largest 1/k strictly below the bound.
    let k = (rat(1, 1) / bound).floor().to_integer() + BigInt::from(1);
    SpectrumSpec::new(chi, Rational::new(BigInt::from(1), k)).ok()
}

fn random_linear_block<R: Rng + ?Sized>(rng: &mut R, m: usize, chi: f64, eps: f64) -> Matrix<Rational> {
    let lo = libm::exp(chi - eps) * (1.0 + 1e-9);
    let hi = libm::exp(chi + eps) * (1.0 - 1e-9);
    let rotate = m == 2 && rng.random_bool(0.5);
    let mut pick = || {
        let delta: f64 = rng.random_range(-0.5..0.5) * eps;
        let r = rational_near(libm::exp(chi + delta), lo, hi);
        if rng.random_bool(0.3) {
            -r
        } else {
            r
        }
    };
    let mut out = Matrix::zeros(m, m);
    if rotate {
        let lam = pick();
        let (c, s) = (rat(3, 5), rat(4, 5));
        out[(0, 0)] = lam.clone() * c.clone();
        out[(0, 1)] = -(lam.clone() * s.clone());
        out[(1, 0)] = lam.clone() * s;
        out[(1, 1)] = lam * c;
    } else {
        for i in 0..m {
            out[(i, i)] = pick();
        }
    }
    out
}

/// Draws a validated random rational instance. Retries until validation
/// passes.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, params: RandomParams) -> Instance<Rational> {
    loop {
        if let Some(inst) = try_random_instance(rng, params, None) {
            return inst;
        }
    }
}

/// Random validated instance with a single block.
pub fn random_single_block<R: Rng + ?Sized>(rng: &mut R, params: RandomParams) -> Instance<Rational> {
    loop {
        if let Some(inst) = try_random_instance(rng, params, Some(1)) {
            return inst;
        }
    }
}

fn try_random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    params: RandomParams,
    ell: Option<usize>,
) -> Option<Instance<Rational>> {
    let p = rng.random_range(1..=params.max_points);
    let ell = ell.unwrap_or_else(|| rng.random_range(1..=params.max_blocks.min(params.max_dim)));
    let m_total = rng.random_range(ell..=params.max_dim);
    let mut block_dims = vec![1usize; ell];
    for _ in ell..m_total {
        let b = rng.random_range(0..ell);
        block_dims[b] += 1;
    }
    let alpha = rat(1, 1);
    let n = rng.random_range(1..=params.max_n);
    let spec = random_spectrum(rng, ell, n, &alpha)?;
    let d = degree_bound(&spec);
    if n < d {
        return None;
    }
    let g = dims(&block_dims);
    let eps = rational_to_f64(spec.epsilon());

    let mut perm: Vec<usize> = (0..p).collect();
    perm.shuffle(rng);
    let base = FiniteBase::new(perm).ok()?;

    let mut fibers = Vec::with_capacity(p);
    let mut lin_norm: f64 = 0.0;
    let mut nonlinear: f64 = 0.0;
    for _ in 0..p {
        let mut a = Matrix::zeros(g.total(), g.total());
        for (b, &mb) in block_dims.iter().enumerate() {
            let blk = random_linear_block(rng, mb, rational_to_f64(&spec.chi()[b]), eps);
            let r0 = g.block_range(b).start;
            for i in 0..mb {
                for j in 0..mb {
                    a[(r0 + i, r0 + j)] = blk[(i, j)].clone();
                }
            }
        }
        let mut f = PolyMap::from_matrix(&g, &g, &a, 3).ok()?;
        let mut per_coord = vec![0.0f64; g.total()];
        for _ in 0..rng.random_range(1..=4) {
            let deg = rng.random_range(2..=3u32);
            let monos = Monomial::all_of_degree(g.total(), deg);
            let mo = monos[rng.random_range(0..monos.len())].clone();
            let c = rng.random_range(0..g.total());
            let v = rat(rng.random_range(1..=3), 2) * if rng.random_bool(0.5) { rat(1, 1) } else { rat(-1, 1) };
            per_coord[c] += rational_to_f64(&v).abs();
            f.add_term(c, mo, v).ok()?;
        }
        lin_norm = lin_norm.max(f.linear_part().singular_values()[0]);
        nonlinear = nonlinear.max(libm::sqrt(per_coord.iter().map(|v| v * v).sum()));
        fibers.push(f);
    }
    let xi = 0.5 * (1.0 + lin_norm);
    let sigma = (0.5 * (xi - lin_norm) / nonlinear).min(0.25);
    let ext = Extension::new(base, g, fibers, sigma, xi).ok()?;
    if !validate_extension(&ext, &spec, n, &alpha).is_ok() {
        return None;
    }
    Some(Instance { ext, spec, n, alpha })
}

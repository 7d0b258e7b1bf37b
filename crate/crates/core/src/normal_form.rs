//! Sub-resonance normal forms of a contracting extension, built degree by
//! degree, and the further reduction of a sub-resonance form to a resonance
//! form.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::base::{Extension, FiniteBase};
use crate::graded::{GradedDims, GroupElement, GroupTag, PolyError, PolyMap};
use crate::linalg::Matrix;
use crate::scalar::{Rational, Scalar};
use crate::section::{solve_sections, Basis, Transfer};
use crate::spectrum::{
    check_narrowness, classify_type, criticality, degree_bound, exp_of, max_backward_bound, max_forward_bound,
    spectral_constants, ClassSet, HomogeneousType, SpectrumError, SpectrumSpec,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormalFormError {
    #[error("spectrum is not narrow: epsilon = {epsilon} is not below epsilon0 = {epsilon0}")]
    NotNarrow { epsilon: Rational, epsilon0: Rational },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("fiber has {dims} blocks but the spectrum has {spectrum}")]
    BlockCount { dims: usize, spectrum: usize },
    #[error("point {point}: constant term in coordinate {coordinate}")]
    ConstantTerm { point: usize, coordinate: usize },
    #[error("point {point}: linear part is not block diagonal at ({row}, {col})")]
    OffBlock { point: usize, row: usize, col: usize },
    #[error("point {point}: linear part has a non-sub-resonance entry at ({row}, {col})")]
    LowerLinear { point: usize, row: usize, col: usize },
    #[error("point {0}: linear part is singular")]
    Singular(usize),
    #[error("degree {degree}: coefficient equation on cycle {cycle} is singular")]
    SingularCycle { degree: u32, cycle: usize },
    #[error("degree {degree}, point {point}: residual {class} term of {ty} with magnitude {magnitude:e}")]
    Residue { degree: u32, point: usize, ty: HomogeneousType, class: &'static str, magnitude: f64 },
    #[error("pinned lift needs one jet per base point on the common fiber")]
    LiftShape,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// How the free sub-resonance (or resonance) component of each degree is
/// chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum LiftStrategy<S> {
    /// Zero free component.
    Complement,
    /// Free component read off the given jets, one per base point.
    Pinned(Vec<PolyMap<S>>),
    /// Coefficients `scale * k / 4`, `k` uniform in `-4..=4`, from a seeded
    /// generator.
    Seeded { seed: u64, scale: Rational },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Build even when narrowness or criticality fails. The result is then
    /// marked uncertified.
    pub force: bool,
    /// Float mode: relative tolerance for class checks. Ignored for rationals.
    pub tol: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { force: false, tol: 1e-9 }
    }
}

/// Free component chosen at one degree and point.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftRecord<S> {
    pub degree: u32,
    pub point: usize,
    pub delta: PolyMap<S>,
}

/// Contraction exponent of the coefficient transfer at one degree and the
/// factor `e^exponent`. `None` when the solved graded piece is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeCertificate {
    pub degree: u32,
    pub exponent: Option<Rational>,
    pub factor: Option<f64>,
}

impl DegreeCertificate {
    fn new(degree: u32, exponent: Option<Rational>) -> Self {
        let factor = exponent.as_ref().map(exp_of);
        Self { degree, exponent, factor }
    }

    /// The transfer contracts (`factor < 1`) or there is nothing to solve.
    pub fn contracts(&self) -> bool {
        self.exponent.as_ref().is_none_or(|e| *e < Rational::from_integer(BigInt::from(0)))
    }
}

/// Taylor jets `H_x` (linear part `Id`) conjugating the extension to the
/// sub-resonance polynomial maps `P_x`: `H_{f(x)} ∘ F_x = P_x ∘ H_x` up to
/// degree `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormResult<S> {
    pub spec: SpectrumSpec,
    pub base: FiniteBase,
    pub dims: GradedDims,
    pub n: u32,
    pub alpha: Rational,
    pub d: u32,
    pub h: Vec<PolyMap<S>>,
    pub p: Vec<GroupElement<S>>,
    pub lifts: Vec<LiftRecord<S>>,
    pub certificates: Vec<DegreeCertificate>,
    /// False when built with `force` past a failed hypothesis.
    pub certified: bool,
    /// Float mode: largest off-class magnitude discarded from `P`.
    pub dropped_residue: f64,
}

impl<S: Scalar> NormalFormResult<S> {
    pub fn to_f64(&self) -> NormalFormResult<f64> {
        NormalFormResult {
            spec: self.spec.clone(),
            base: self.base.clone(),
            dims: self.dims.clone(),
            n: self.n,
            alpha: self.alpha.clone(),
            d: self.d,
            h: self.h.iter().map(PolyMap::to_f64).collect(),
            p: self
                .p
                .iter()
                .map(|g| {
                    GroupElement::new(g.map().to_f64(), &self.spec, g.tag(), 0.0)
                        .expect("conversion keeps group membership")
                })
                .collect(),
            lifts: self
                .lifts
                .iter()
                .map(|l| LiftRecord { degree: l.degree, point: l.point, delta: l.delta.to_f64() })
                .collect(),
            certificates: self.certificates.clone(),
            certified: self.certified,
            dropped_residue: self.dropped_residue,
        }
    }

    /// Sum of the recorded free components at each point.
    pub fn lift_jets(&self) -> Vec<PolyMap<S>> {
        let mut jets: Vec<PolyMap<S>> =
            (0..self.base.points()).map(|_| PolyMap::zero(self.dims.clone(), self.dims.clone(), self.n)).collect();
        for l in &self.lifts {
            jets[l.point] = jets[l.point].add(&l.delta).expect("same fiber");
        }
        jets
    }
}

fn scaled_tol<S: Scalar>(tol: f64, scale: f64) -> f64 {
    if S::EXACT {
        0.0
    } else {
        tol * (1.0 + scale)
    }
}

fn check_hypotheses<S: Scalar>(
    ext: &Extension<S>,
    spec: &SpectrumSpec,
    n: u32,
    alpha: &Rational,
    force: bool,
) -> Result<bool, NormalFormError> {
    let dims = ext.dims();
    if dims.ell() != spec.ell() {
        return Err(NormalFormError::BlockCount { dims: dims.ell(), spectrum: spec.ell() });
    }
    if let Some(&(point, coordinate)) = ext.constant_terms().first() {
        return Err(NormalFormError::ConstantTerm { point, coordinate });
    }
    for x in 0..ext.base().points() {
        if let Some((row, col)) = ext.off_block_entry(x) {
            return Err(NormalFormError::OffBlock { point: x, row, col });
        }
    }
    let constants = spectral_constants(spec);
    let mut certified = true;
    if !check_narrowness(spec, &constants) {
        if !force {
            return Err(NormalFormError::NotNarrow {
                epsilon: spec.epsilon().clone(),
                epsilon0: constants.epsilon0,
            });
        }
        certified = false;
    }
    let crit = criticality(spec, n, alpha)?;
    if let Err(e) = crit.require(spec) {
        if !force {
            return Err(e.into());
        }
        certified = false;
    }
    Ok(certified)
}

fn random_section<S: Scalar>(
    dims: &GradedDims,
    spec: &SpectrumSpec,
    n: u32,
    cap: u32,
    classes: ClassSet,
    rng: &mut ChaCha8Rng,
    scale: &Rational,
) -> PolyMap<S> {
    let basis = Basis::new(dims, spec, n, classes);
    let v: Vec<S> = (0..basis.len())
        .map(|_| {
            let k: i64 = rng.random_range(-4..=4);
            S::from_rational(&(scale.clone() * Rational::new(BigInt::from(k), BigInt::from(4))))
        })
        .collect();
    basis.to_map(dims, cap, &v)
}

/// Produces the free component of degree `n` at each point.
struct Lifter<'a, S> {
    strategy: &'a LiftStrategy<S>,
    rng: Option<ChaCha8Rng>,
    classes: ClassSet,
}

impl<'a, S: Scalar> Lifter<'a, S> {
    fn new(strategy: &'a LiftStrategy<S>, classes: ClassSet, points: usize, dims: &GradedDims) -> Result<Self, NormalFormError> {
        if let LiftStrategy::Pinned(jets) = strategy {
            if jets.len() != points || jets.iter().any(|j| j.source() != dims || j.target() != dims) {
                return Err(NormalFormError::LiftShape);
            }
        }
        let rng = match strategy {
            LiftStrategy::Seeded { seed, .. } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        Ok(Self { strategy, rng, classes })
    }

    fn lift(&mut self, dims: &GradedDims, spec: &SpectrumSpec, n: u32, cap: u32, x: usize) -> PolyMap<S> {
        match self.strategy {
            LiftStrategy::Complement => PolyMap::zero(dims.clone(), dims.clone(), cap),
            LiftStrategy::Pinned(jets) => jets[x].homogeneous_part(n).project(spec, self.classes).with_cap(cap),
            LiftStrategy::Seeded { scale, .. } => {
                let rng = self.rng.as_mut().expect("seeded");
                random_section(dims, spec, n, cap, self.classes, rng, scale)
            }
        }
    }
}

fn residue_check<S: Scalar>(
    map: &PolyMap<S>,
    spec: &SpectrumSpec,
    classes: ClassSet,
    tol: f64,
    degree: u32,
    point: usize,
) -> Result<f64, NormalFormError> {
    match map.max_off_class(spec, classes) {
        Some((ty, magnitude)) if S::EXACT && magnitude > 0.0 || !S::EXACT && magnitude > tol => {
            let class = classify_type(spec, &ty).name();
            Err(NormalFormError::Residue { degree, point, ty, class, magnitude })
        }
        Some((_, magnitude)) => Ok(magnitude),
        None => Ok(0.0),
    }
}

/// Builds the degree-`n` Taylor jets of the sub-resonance normal form.
///
/// At each degree the non-sub-resonance part of `H` is the unique solution of
/// the twisted cohomological equation, the sub-resonance part is chosen by
/// `lift`, and `P` collects what remains.
pub fn build_taylor<S: Scalar>(
    ext: &Extension<S>,
    spec: &SpectrumSpec,
    n: u32,
    alpha: &Rational,
    lift: &LiftStrategy<S>,
    opts: BuildOptions,
) -> Result<NormalFormResult<S>, NormalFormError> {
    let certified = check_hypotheses(ext, spec, n, alpha, opts.force)?;
    let d = degree_bound(spec);
    let dims = ext.dims().clone();
    let base = ext.base().clone();
    let pts = base.points();
    let n = n.max(1);

    let lin: Vec<Matrix<S>> = (0..pts).map(|x| ext.linear(x)).collect();
    let lin_inv = lin
        .iter()
        .enumerate()
        .map(|(x, a)| a.inverse().map_err(|_| NormalFormError::Singular(x)))
        .collect::<Result<Vec<_>, _>>()?;
    let fibers: Vec<PolyMap<S>> = ext.fibers().iter().map(|f| f.with_cap(n)).collect();

    let mut h: Vec<PolyMap<S>> = (0..pts).map(|_| PolyMap::identity(&dims, n)).collect();
    let mut p: Vec<PolyMap<S>> =
        lin.iter().map(|a| PolyMap::from_matrix(&dims, &dims, a, d.max(1))).collect::<Result<_, _>>()?;
    let mut lifter = Lifter::new(lift, ClassSet::SUB_RESONANCE, pts, &dims)?;
    let mut lifts = Vec::new();
    let mut certificates = Vec::new();
    let mut dropped: f64 = 0.0;

    for deg in 2..=n {
        let mut q = Vec::with_capacity(pts);
        for x in 0..pts {
            let fx = base.f(x);
            let lhs = h[fx].compose(&fibers[x], deg)?.homogeneous_part(deg);
            let rhs = p[x].compose(&h[x], deg)?.homogeneous_part(deg);
            q.push(lhs.sub(&rhs)?.left_linear(&lin_inv[x], &dims)?);
        }

        let basis = Basis::new(&dims, spec, deg, ClassSet::NON_SUB);
        let mut hn: Vec<PolyMap<S>> = if basis.is_empty() {
            (0..pts).map(|_| PolyMap::zero(dims.clone(), dims.clone(), n)).collect()
        } else {
            let ops = (0..pts)
                .map(|x| basis.operator(&dims, &lin_inv[x], &lin[x]))
                .collect::<Result<Vec<_>, _>>()?;
            let rhs: Vec<Vec<S>> = q.iter().map(|qx| basis.to_vec(qx)).collect();
            let sol = solve_sections(&base, basis.len(), &ops, &rhs, Transfer::PullBack)
                .map_err(|cycle| NormalFormError::SingularCycle { degree: deg, cycle })?;
            sol.iter().map(|u| basis.to_map(&dims, n, u)).collect()
        };
        certificates.push(DegreeCertificate::new(deg, max_forward_bound(spec, deg)));

        for (x, hx) in hn.iter_mut().enumerate() {
            let delta = lifter.lift(&dims, spec, deg, n, x);
            if deg <= d {
                lifts.push(LiftRecord { degree: deg, point: x, delta: delta.clone() });
            }
            *hx = hx.add(&delta)?;
        }

        for x in 0..pts {
            let fx = base.f(x);
            let phi = hn[fx].right_linear(&lin[x], &dims)?.left_linear(&lin_inv[x], &dims)?;
            let inner = q[x].sub(&hn[x])?.add(&phi)?;
            let full = inner.left_linear(&lin[x], &dims)?;
            let tol = scaled_tol::<S>(opts.tol, q[x].max_abs().max(hn[x].max_abs()));
            let residue = residue_check(&full, spec, ClassSet::SUB_RESONANCE, tol, deg, x)?;
            dropped = dropped.max(residue);
            let mut pn = full.project(spec, ClassSet::SUB_RESONANCE).with_cap(d.max(1));
            pn.prune(if S::EXACT { 0.0 } else { tol * 1e-3 });
            if deg <= d {
                p[x] = p[x].add(&pn)?;
            }
        }
        for (hx, dx) in h.iter_mut().zip(&hn) {
            *hx = hx.add(dx)?;
        }
    }

    let gtol = scaled_tol::<S>(opts.tol, 0.0);
    let p = p
        .into_iter()
        .map(|m| GroupElement::new(m, spec, GroupTag::SubResonance, gtol))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(NormalFormResult {
        spec: spec.clone(),
        base,
        dims,
        n,
        alpha: alpha.clone(),
        d,
        h,
        p,
        lifts,
        certificates,
        certified,
        dropped_residue: dropped,
    })
}

/// Rebuilds `nf` with its recorded lifts offset by seeded random
/// sub-resonance terms of size `scale`. A zero scale reproduces `nf`.
pub fn perturb_lift<S: Scalar>(
    ext: &Extension<S>,
    nf: &NormalFormResult<S>,
    seed: u64,
    scale: &Rational,
    opts: BuildOptions,
) -> Result<NormalFormResult<S>, NormalFormError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jets = nf.lift_jets();
    for deg in 2..=nf.d.min(nf.n) {
        for jet in jets.iter_mut() {
            let r = random_section(&nf.dims, &nf.spec, deg, nf.n, ClassSet::SUB_RESONANCE, &mut rng, scale);
            *jet = jet.add(&r)?;
        }
    }
    let opts = BuildOptions { force: opts.force || !nf.certified, ..opts };
    build_taylor(ext, &nf.spec, nf.n, &nf.alpha, &LiftStrategy::Pinned(jets), opts)
}

/// Coordinate change `H'_x` in the sub-resonance group and resonance
/// polynomials `P~_x` with `H'_{f(x)} ∘ P_x = P~_x ∘ H'_x` (jets of degree
/// `d`).
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceResult<S> {
    pub h_prime: Vec<GroupElement<S>>,
    pub p_tilde: Vec<GroupElement<S>>,
    pub lifts: Vec<LiftRecord<S>>,
    pub certificates: Vec<DegreeCertificate>,
    /// `H'_x ∘ H_x` up to the Taylor degree, when reduced from a Taylor build.
    pub h_total: Option<Vec<PolyMap<S>>>,
}

fn block_diagonal_part<S: Scalar>(a: &Matrix<S>, dims: &GradedDims) -> Matrix<S> {
    let mut out = Matrix::zeros(a.rows(), a.cols());
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            if dims.block_of(r) == dims.block_of(c) {
                out[(r, c)] = a[(r, c)].clone();
            }
        }
    }
    out
}

/// Strictly block-upper `K_x` with `K_{f(x)} L_x - F_x K_x = -U_x`, where
/// `L_x = F_x + U_x` splits into block-diagonal and strictly upper parts.
fn normalize_linear<S: Scalar>(
    base: &FiniteBase,
    dims: &GradedDims,
    lin: &[Matrix<S>],
    diag: &[Matrix<S>],
) -> Result<Vec<Matrix<S>>, NormalFormError> {
    let m = dims.total();
    let mut out: Vec<Matrix<S>> = (0..base.points()).map(|_| Matrix::zeros(m, m)).collect();
    let upper: Vec<(usize, usize)> = (0..m)
        .flat_map(|r| (0..m).map(move |c| (r, c)))
        .filter(|&(r, c)| dims.block_of(r) < dims.block_of(c))
        .collect();
    if upper.is_empty() {
        return Ok(out);
    }
    let e = upper.len();
    let slot = |r: usize, c: usize| upper.iter().position(|&rc| rc == (r, c));
    for (ci, cycle) in base.cycles().iter().enumerate() {
        let q = cycle.len();
        let mut sys = Matrix::zeros(q * e, q * e);
        let mut rhs = vec![S::zero(); q * e];
        for (k, &x) in cycle.iter().enumerate() {
            let kn = (k + 1) % q;
            for (row_slot, &(r, c)) in upper.iter().enumerate() {
                let eq = k * e + row_slot;
                rhs[eq] = -(lin[x][(r, c)].clone() - diag[x][(r, c)].clone());
                for j in 0..m {
                    if let Some(s) = slot(r, j) {
                        sys[(eq, kn * e + s)] += lin[x][(j, c)].clone();
                    }
                    if let Some(s) = slot(j, c) {
                        sys[(eq, k * e + s)] -= diag[x][(r, j)].clone();
                    }
                }
            }
        }
        let sol = sys.solve_vec(&rhs).map_err(|_| NormalFormError::SingularCycle { degree: 1, cycle: ci })?;
        for (k, &x) in cycle.iter().enumerate() {
            for (s, &(r, c)) in upper.iter().enumerate() {
                out[x][(r, c)] = sol[k * e + s].clone();
            }
        }
    }
    Ok(out)
}

/// Reduces sub-resonance polynomials `P_x` over `base` to resonance form.
pub fn reduce_polynomials<S: Scalar>(
    base: &FiniteBase,
    spec: &SpectrumSpec,
    p: &[GroupElement<S>],
    lift: &LiftStrategy<S>,
    opts: BuildOptions,
) -> Result<ResonanceResult<S>, NormalFormError> {
    let pts = base.points();
    if p.len() != pts {
        return Err(NormalFormError::LiftShape);
    }
    let dims = p.first().map(|g| g.map().source().clone()).ok_or(NormalFormError::LiftShape)?;
    if dims.ell() != spec.ell() {
        return Err(NormalFormError::BlockCount { dims: dims.ell(), spectrum: spec.ell() });
    }
    let d = degree_bound(spec);
    let cap = d.max(1);
    let tol0 = scaled_tol::<S>(opts.tol, 0.0);

    let lin: Vec<Matrix<S>> = p.iter().map(|g| g.map().linear_part()).collect();
    for (x, a) in lin.iter().enumerate() {
        for r in 0..a.rows() {
            for c in 0..a.cols() {
                if dims.block_of(r) > dims.block_of(c) && !a[(r, c)].is_negligible(tol0) {
                    return Err(NormalFormError::LowerLinear { point: x, row: r, col: c });
                }
            }
        }
    }
    let diag: Vec<Matrix<S>> = lin.iter().map(|a| block_diagonal_part(a, &dims)).collect();
    let diag_inv = diag
        .iter()
        .enumerate()
        .map(|(x, a)| a.inverse().map_err(|_| NormalFormError::Singular(x)))
        .collect::<Result<Vec<_>, _>>()?;

    let k = normalize_linear(base, &dims, &lin, &diag)?;
    let h1: Vec<PolyMap<S>> = k
        .iter()
        .map(|kx| PolyMap::from_matrix(&dims, &dims, &Matrix::identity(dims.total()).sub(&kx.map(|v| -v.clone())), cap))
        .collect::<Result<_, _>>()?;
    let mut p_hat = Vec::with_capacity(pts);
    for x in 0..pts {
        let h1_inv = h1[x].invert(cap)?;
        let mut m = h1[base.f(x)].compose(&p[x].map().compose(&h1_inv, cap)?, cap)?;
        // The linear part is F_x by construction.
        m = m.filter(|mono, _| mono.degree() >= 2).add(&PolyMap::from_matrix(&dims, &dims, &diag[x], cap)?)?;
        p_hat.push(m);
    }

    let mut h: Vec<PolyMap<S>> = (0..pts).map(|_| PolyMap::identity(&dims, cap)).collect();
    let mut pt: Vec<PolyMap<S>> =
        diag.iter().map(|a| PolyMap::from_matrix(&dims, &dims, a, cap)).collect::<Result<_, _>>()?;
    let mut lifter = Lifter::new(lift, ClassSet::RESONANCE, pts, &dims)?;
    let mut lifts = Vec::new();
    let mut certificates = vec![DegreeCertificate::new(1, max_backward_bound(spec, 1))];

    for deg in 2..=d {
        let mut q = Vec::with_capacity(pts);
        for x in 0..pts {
            let fx = base.f(x);
            let lhs = h[fx].compose(&p_hat[x], deg)?.homogeneous_part(deg);
            let rhs = pt[x].compose(&h[x], deg)?.homogeneous_part(deg);
            let qx = lhs.sub(&rhs)?.right_linear(&diag_inv[x], &dims)?;
            let tol = scaled_tol::<S>(opts.tol, qx.max_abs());
            residue_check(&qx, spec, ClassSet::SUB_RESONANCE, tol, deg, x)?;
            q.push(qx.project(spec, ClassSet::SUB_RESONANCE));
        }

        let basis = Basis::new(&dims, spec, deg, ClassSet::STRICT_SUB);
        let mut hn: Vec<PolyMap<S>> = if basis.is_empty() {
            (0..pts).map(|_| PolyMap::zero(dims.clone(), dims.clone(), cap)).collect()
        } else {
            let ops = (0..pts)
                .map(|x| basis.operator(&dims, &diag[x], &diag_inv[x]))
                .collect::<Result<Vec<_>, _>>()?;
            let rhs: Vec<Vec<S>> =
                q.iter().map(|qx| basis.to_vec(qx).into_iter().map(|v| -v).collect()).collect();
            let sol = solve_sections(base, basis.len(), &ops, &rhs, Transfer::PushForward)
                .map_err(|cycle| NormalFormError::SingularCycle { degree: deg, cycle })?;
            sol.iter().map(|u| basis.to_map(&dims, cap, u)).collect()
        };
        certificates.push(DegreeCertificate::new(deg, max_backward_bound(spec, deg)));

        for (x, hx) in hn.iter_mut().enumerate() {
            let delta = lifter.lift(&dims, spec, deg, cap, x);
            lifts.push(LiftRecord { degree: deg, point: x, delta: delta.clone() });
            *hx = hx.add(&delta)?;
        }

        for x in 0..pts {
            let fx = base.f(x);
            let conj = hn[x].right_linear(&diag_inv[x], &dims)?.left_linear(&diag[x], &dims)?;
            let inner = hn[fx].sub(&conj)?.add(&q[x])?;
            let mut pn = inner.right_linear(&diag[x], &dims)?;
            let tol = scaled_tol::<S>(opts.tol, q[x].max_abs().max(hn[x].max_abs()));
            residue_check(&pn, spec, ClassSet::RESONANCE, tol, deg, x)?;
            pn = pn.project(spec, ClassSet::RESONANCE);
            pn.prune(if S::EXACT { 0.0 } else { tol * 1e-3 });
            pt[x] = pt[x].add(&pn)?;
        }
        for (hx, dx) in h.iter_mut().zip(&hn) {
            *hx = hx.add(dx)?;
        }
    }

    let h_prime = (0..pts)
        .map(|x| {
            let m = h[x].compose(&h1[x], cap)?;
            Ok(GroupElement::new(m, spec, GroupTag::SubResonance, tol0)?)
        })
        .collect::<Result<Vec<_>, NormalFormError>>()?;
    let p_tilde = pt
        .into_iter()
        .map(|m| GroupElement::new(m, spec, GroupTag::Resonance, tol0))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ResonanceResult { h_prime, p_tilde, lifts, certificates, h_total: None })
}

/// Reduces a Taylor build to resonance form and records the total
/// coordinate change `H'_x ∘ H_x`.
pub fn resonance_reduce<S: Scalar>(
    nf: &NormalFormResult<S>,
    lift: &LiftStrategy<S>,
    opts: BuildOptions,
) -> Result<ResonanceResult<S>, NormalFormError> {
    let mut out = reduce_polynomials(&nf.base, &nf.spec, &nf.p, lift, opts)?;
    let total = out
        .h_prime
        .iter()
        .zip(&nf.h)
        .map(|(hp, hx)| hp.map().compose(hx, nf.n))
        .collect::<Result<Vec<_>, _>>()?;
    out.h_total = Some(total);
    Ok(out)
}

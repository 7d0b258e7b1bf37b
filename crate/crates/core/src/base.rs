//! Finite dynamical base with a polynomial contracting extension over it.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::graded::{GradedDims, PolyError, PolyMap};
use crate::linalg::Matrix;
use crate::scalar::{Rational, Scalar};
use crate::spectrum::{
    check_narrowness, criticality, exp_of, spectral_constants, Criticality, SpectrumError, SpectrumSpec,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaseError {
    #[error("base map is not a permutation of 0..{0}")]
    NotPermutation(usize),
    #[error("expected {expected} fiber maps, got {got}")]
    FiberCount { expected: usize, got: usize },
    #[error("fiber map at point {0} does not act on the common graded fiber")]
    FiberShape(usize),
    #[error("sigma and xi must satisfy sigma > 0 and 0 < xi < 1")]
    BadConstants,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// A bijection `f` of `{0, .., p-1}` with its cycle decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteBase {
    perm: Vec<usize>,
    inv: Vec<usize>,
    cycles: Vec<Vec<usize>>,
}

impl FiniteBase {
    pub fn new(perm: Vec<usize>) -> Result<Self, BaseError> {
        let p = perm.len();
        let mut inv = vec![usize::MAX; p];
        for (x, &y) in perm.iter().enumerate() {
            if y >= p || inv[y] != usize::MAX {
                return Err(BaseError::NotPermutation(p));
            }
            inv[y] = x;
        }
        if p == 0 {
            return Err(BaseError::NotPermutation(0));
        }
        let mut seen = vec![false; p];
        let mut cycles = Vec::new();
        for start in 0..p {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                cycle.push(x);
                x = perm[x];
            }
            cycles.push(cycle);
        }
        Ok(Self { perm, inv, cycles })
    }

    pub fn points(&self) -> usize {
        self.perm.len()
    }

    pub fn f(&self, x: usize) -> usize {
        self.perm[x]
    }

    pub fn f_inv(&self, x: usize) -> usize {
        self.inv[x]
    }

    /// `f^k(x)`
    pub fn iterate(&self, x: usize, k: usize) -> usize {
        (0..k).fold(x, |y, _| self.perm[y])
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Cycles listed from their smallest point, each in the order `x, f(x), ...`.
    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    pub fn commutes_with(&self, other: &FiniteBase) -> bool {
        self.points() == other.points()
            && (0..self.points()).all(|x| self.f(other.f(x)) == other.f(self.f(x)))
    }
}

/// Polynomial fiber maps `F_x : E_x -> E_{f(x)}` over a finite base. Linear
/// parts are expected block-diagonal (adapted coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct Extension<S> {
    base: FiniteBase,
    dims: GradedDims,
    fibers: Vec<PolyMap<S>>,
    sigma: f64,
    xi: f64,
    constant_terms: Vec<(usize, usize)>,
}

impl<S: Scalar> Extension<S> {
    pub fn new(
        base: FiniteBase,
        dims: GradedDims,
        fibers: Vec<PolyMap<S>>,
        sigma: f64,
        xi: f64,
    ) -> Result<Self, BaseError> {
        if fibers.len() != base.points() {
            return Err(BaseError::FiberCount { expected: base.points(), got: fibers.len() });
        }
        for (x, fx) in fibers.iter().enumerate() {
            if fx.source() != &dims || fx.target() != &dims {
                return Err(BaseError::FiberShape(x));
            }
        }
        if !(sigma > 0.0 && xi > 0.0 && xi < 1.0) {
            return Err(BaseError::BadConstants);
        }
        Ok(Self { base, dims, fibers, sigma, xi, constant_terms: Vec::new() })
    }

    /// Records constant terms `(point, coordinate)` found in the input. They
    /// cannot be represented in a [`PolyMap`]; validation reports them.
    pub fn with_constant_terms(mut self, terms: Vec<(usize, usize)>) -> Self {
        self.constant_terms = terms;
        self
    }

    pub fn constant_terms(&self) -> &[(usize, usize)] {
        &self.constant_terms
    }

    pub fn base(&self) -> &FiniteBase {
        &self.base
    }

    pub fn dims(&self) -> &GradedDims {
        &self.dims
    }

    pub fn fiber(&self, x: usize) -> &PolyMap<S> {
        &self.fibers[x]
    }

    pub fn fibers(&self) -> &[PolyMap<S>] {
        &self.fibers
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Linear part `F_x = D_0 F_x`.
    pub fn linear(&self, x: usize) -> Matrix<S> {
        self.fibers[x].linear_part()
    }

    /// Largest degree among the fiber maps.
    pub fn degree(&self) -> u32 {
        self.fibers.iter().map(PolyMap::degree).max().unwrap_or(0)
    }

    pub fn map_scalars<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> Extension<T> {
        Extension {
            base: self.base.clone(),
            dims: self.dims.clone(),
            fibers: self.fibers.iter().map(|p| p.map_scalars(f)).collect(),
            sigma: self.sigma,
            xi: self.xi,
            constant_terms: self.constant_terms.clone(),
        }
    }

    pub fn to_f64(&self) -> Extension<f64> {
        self.map_scalars(Scalar::to_f64)
    }

    /// First off-block-diagonal linear coefficient, if any.
    pub fn off_block_entry(&self, x: usize) -> Option<(usize, usize)> {
        let a = self.linear(x);
        for r in 0..a.rows() {
            for c in 0..a.cols() {
                if self.dims.block_of(r) != self.dims.block_of(c) && !a[(r, c)].is_zero() {
                    return Some((r, c));
                }
            }
        }
        None
    }

    /// Restriction of the linear part at `x` to block `b`.
    pub fn linear_block(&self, x: usize, b: usize) -> Matrix<S> {
        let a = self.linear(x);
        let range = self.dims.block_range(b);
        let mut out = Matrix::zeros(range.len(), range.len());
        for (i, r) in range.clone().enumerate() {
            for (j, c) in range.clone().enumerate() {
                out[(i, j)] = a[(r, c)].clone();
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationFailure {
    ZeroSection { point: usize, coordinate: usize },
    BlockCount { dims: usize, spectrum: usize },
    OffBlock { point: usize, row: usize, col: usize },
    BlockSpectrum { point: usize, block: usize, sigma_min: f64, sigma_max: f64, lower: f64, upper: f64 },
    CoefficientBound { point: usize, bound: f64, xi: f64 },
    SampledContraction { point: usize, ratio: f64, xi: f64 },
    NotNarrow { epsilon: Rational, epsilon0: Rational },
    Criticality(SpectrumError),
}

impl fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ZeroSection { point, coordinate } => {
                write!(f, "point {point}: constant term in coordinate {coordinate} (zero section not preserved)")
            }
            Self::BlockCount { dims, spectrum } => {
                write!(f, "fiber has {dims} blocks but the spectrum has {spectrum} exponents")
            }
            Self::OffBlock { point, row, col } => {
                write!(f, "point {point}: linear part has off-block entry ({row}, {col})")
            }
            Self::BlockSpectrum { point, block, sigma_min, sigma_max, lower, upper } => write!(
                f,
                "point {point} block {block}: singular values [{sigma_min}, {sigma_max}] not within [{lower}, {upper}]"
            ),
            Self::CoefficientBound { point, bound, xi } => {
                write!(f, "point {point}: contraction bound {bound} exceeds xi = {xi}")
            }
            Self::SampledContraction { point, ratio, xi } => {
                write!(f, "point {point}: sampled |F(t)|/|t| = {ratio} exceeds xi = {xi}")
            }
            Self::NotNarrow { epsilon, epsilon0 } => {
                write!(f, "spectrum not narrow: epsilon = {epsilon} >= epsilon0 = {epsilon0}")
            }
            Self::Criticality(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockBound {
    pub point: usize,
    pub block: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionBound {
    pub point: usize,
    /// `|F_x| + sqrt(sum_c (sum_{deg >= 2} |coef| sigma^(deg-1))^2)`
    pub coefficient_bound: f64,
    /// Largest `|F_x(t)| / |t|` over the sample grid.
    pub sampled_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub blocks: Vec<BlockBound>,
    pub contraction: Vec<ContractionBound>,
    pub epsilon0: Rational,
    pub narrow: bool,
    pub criticality: Option<Criticality>,
    pub failures: Vec<ValidationFailure>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Relative slack for the float comparisons of singular values against
/// `e^{chi_i +- epsilon}`.
const SPECTRUM_SLACK: f64 = 1e-12;

/// Deterministic sample points on spheres of radius `r` in `R^m`.
fn sample_grid(m: usize, sigma: f64) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for k in 0..m {
        for sgn in [1.0, -1.0] {
            let mut v = vec![0.0; m];
            v[k] = sgn;
            dirs.push(v);
        }
    }
    if m <= 10 {
        let norm = libm::sqrt(m as f64);
        for mask in 0..(1u32 << m) {
            dirs.push((0..m).map(|k| if mask & (1 << k) != 0 { -1.0 / norm } else { 1.0 / norm }).collect());
        }
    }
    let mut out = Vec::new();
    for frac in [0.25, 0.5, 0.75, 1.0] {
        for d in &dirs {
            out.push(d.iter().map(|x| x * frac * sigma).collect());
        }
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

pub fn validate_extension<S: Scalar>(
    ext: &Extension<S>,
    spec: &SpectrumSpec,
    n: u32,
    alpha: &Rational,
) -> ValidationReport {
    let mut failures = Vec::new();
    for &(point, coordinate) in ext.constant_terms() {
        failures.push(ValidationFailure::ZeroSection { point, coordinate });
    }
    let dims = ext.dims();
    let block_count_ok = dims.ell() == spec.ell();
    if !block_count_ok {
        failures.push(ValidationFailure::BlockCount { dims: dims.ell(), spectrum: spec.ell() });
    }

    let mut blocks = Vec::new();
    let mut contraction = Vec::new();
    for x in 0..ext.base().points() {
        if let Some((row, col)) = ext.off_block_entry(x) {
            failures.push(ValidationFailure::OffBlock { point: x, row, col });
        }
        if block_count_ok {
            for b in 0..dims.ell() {
                let sv = ext.linear_block(x, b).singular_values();
                let sigma_max = sv.first().copied().unwrap_or(0.0);
                let sigma_min = sv.last().copied().unwrap_or(0.0);
                let lower = exp_of(&(spec.chi()[b].clone() - spec.epsilon().clone()));
                let upper = exp_of(&(spec.chi()[b].clone() + spec.epsilon().clone()));
                if sigma_min < lower * (1.0 - SPECTRUM_SLACK) || sigma_max > upper * (1.0 + SPECTRUM_SLACK) {
                    failures.push(ValidationFailure::BlockSpectrum {
                        point: x,
                        block: b,
                        sigma_min,
                        sigma_max,
                        lower,
                        upper,
                    });
                }
                blocks.push(BlockBound { point: x, block: b, sigma_min, sigma_max, lower, upper });
            }
        }

        let fx = ext.fiber(x).to_f64();
        let lin_norm = fx.linear_part().singular_values().first().copied().unwrap_or(0.0);
        let mut per_coord = vec![0.0f64; dims.total()];
        for (c, mono, v) in fx.terms() {
            let deg = mono.degree();
            if deg >= 2 {
                per_coord[c] += v.abs() * libm::pow(ext.sigma(), f64::from(deg - 1));
            }
        }
        let coefficient_bound = lin_norm + norm(&per_coord);
        if coefficient_bound > ext.xi() {
            failures.push(ValidationFailure::CoefficientBound { point: x, bound: coefficient_bound, xi: ext.xi() });
        }
        let mut sampled_ratio: f64 = 0.0;
        for t in sample_grid(dims.total(), ext.sigma()) {
            let r = norm(&fx.eval(&t)) / norm(&t);
            sampled_ratio = sampled_ratio.max(r);
        }
        if sampled_ratio > ext.xi() {
            failures.push(ValidationFailure::SampledContraction { point: x, ratio: sampled_ratio, xi: ext.xi() });
        }
        contraction.push(ContractionBound { point: x, coefficient_bound, sampled_ratio });
    }

    let constants = spectral_constants(spec);
    let narrow = check_narrowness(spec, &constants);
    if !narrow {
        failures.push(ValidationFailure::NotNarrow {
            epsilon: spec.epsilon().clone(),
            epsilon0: constants.epsilon0.clone(),
        });
    }
    let crit = match criticality(spec, n, alpha) {
        Ok(c) => {
            if let Err(e) = c.require(spec) {
                failures.push(ValidationFailure::Criticality(e));
            }
            Some(c)
        }
        Err(e) => {
            failures.push(ValidationFailure::Criticality(e));
            None
        }
    };

    ValidationReport { blocks, contraction, epsilon0: constants.epsilon0, narrow, criticality: crit, failures }
}

/// `F^k_x = F_{f^{k-1} x} ∘ ... ∘ F_x`, truncated at `cap`.
pub fn orbit_compose<S: Scalar>(ext: &Extension<S>, x: usize, k: usize, cap: u32) -> Result<PolyMap<S>, PolyError> {
    let mut acc = PolyMap::identity(ext.dims(), cap);
    let mut y = x;
    for _ in 0..k {
        acc = ext.fiber(y).compose(&acc, cap)?;
        y = ext.base().f(y);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::Monomial;
    use crate::scalar::rat;

    fn scalar_dims() -> GradedDims {
        GradedDims::new(vec![1]).unwrap()
    }

    #[test]
    fn rejects_non_permutations() {
        assert!(FiniteBase::new(vec![0, 0]).is_err());
        assert!(FiniteBase::new(vec![1, 2]).is_err());
        let b = FiniteBase::new(vec![1, 0, 2]).unwrap();
        assert_eq!(b.cycles(), &[vec![0, 1], vec![2]]);
        assert_eq!(b.f_inv(1), 0);
    }

    #[test]
    fn period_two_orbit_product() {
        let d = scalar_dims();
        let f0 = PolyMap::from_terms(d.clone(), d.clone(), 1, [(0, Monomial::new(&[1]), rat(1, 3))]).unwrap();
        let f1 = PolyMap::from_terms(d.clone(), d.clone(), 1, [(0, Monomial::new(&[1]), rat(2, 5))]).unwrap();
        let ext = Extension::new(FiniteBase::new(vec![1, 0]).unwrap(), d.clone(), vec![f0, f1], 0.5, 0.9).unwrap();
        let k0 = orbit_compose(&ext, 0, 0, 2).unwrap();
        assert_eq!(k0, PolyMap::identity(&d, 2));
        let k2 = orbit_compose(&ext, 0, 2, 2).unwrap();
        assert_eq!(k2.coeff(0, &Monomial::new(&[1])), Some(&rat(2, 15)));
        assert_eq!(k2.len(), 1);
    }

    #[test]
    fn off_block_entry_is_found() {
        let d = GradedDims::new(vec![1, 1]).unwrap();
        let f = PolyMap::from_terms(
            d.clone(),
            d.clone(),
            1,
            [
                (0, Monomial::new(&[1, 0]), rat(1, 8)),
                (0, Monomial::new(&[0, 1]), rat(1, 100)),
                (1, Monomial::new(&[0, 1]), rat(1, 3)),
            ],
        )
        .unwrap();
        let ext = Extension::new(FiniteBase::new(vec![0]).unwrap(), d, vec![f], 0.25, 0.95).unwrap();
        let spec = SpectrumSpec::new(vec![rat(-2, 1), rat(-1, 1)], rat(1, 5)).unwrap();
        let rep = validate_extension(&ext, &spec, 3, &rat(0, 1));
        assert!(rep.failures.iter().any(|f| matches!(f, ValidationFailure::OffBlock { point: 0, row: 0, col: 1 })));
    }
}

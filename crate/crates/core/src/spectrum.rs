//! Exponent arithmetic: homogeneous types, their (sub-)resonance class, and
//! the narrow-spectrum constants derived from a Lyapunov exponent vector.
//!
//! Blocks are indexed from zero. Block 0 is the fastest contracting one
//! (most negative exponent).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::scalar::{rational_to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpectrumError {
    #[error("exponent vector is empty")]
    Empty,
    #[error("exponents must be strictly increasing (violated at index {0})")]
    NotIncreasing(usize),
    #[error("exponents must all be negative (largest is {0})")]
    NotContracting(Rational),
    #[error("epsilon must be positive, got {0}")]
    EpsilonNotPositive(Rational),
    #[error("type targets block {block} but the spectrum has {ell} blocks")]
    BlockOutOfRange { block: usize, ell: usize },
    #[error("type has {got} block degrees, expected {ell}")]
    WrongArity { got: usize, ell: usize },
    #[error("homogeneous types must have degree at least 1")]
    ZeroDegree,
    #[error("regularity is at or below critical: nu = {0}")]
    BelowCritical(Rational),
    #[error("epsilon = {epsilon} is not below the criticality bound {bound}")]
    CriticalityEpsilon { epsilon: Rational, bound: Rational },
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(Rational),
}

/// Lyapunov exponents `chi` (natural-log units) with spectral gap `epsilon`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectrumSpec {
    chi: Vec<Rational>,
    epsilon: Rational,
}

impl SpectrumSpec {
    pub fn new(chi: Vec<Rational>, epsilon: Rational) -> Result<Self, SpectrumError> {
        if chi.is_empty() {
            return Err(SpectrumError::Empty);
        }
        for k in 1..chi.len() {
            if chi[k - 1] >= chi[k] {
                return Err(SpectrumError::NotIncreasing(k));
            }
        }
        let last = chi[chi.len() - 1].clone();
        if !last.is_negative() {
            return Err(SpectrumError::NotContracting(last));
        }
        if !epsilon.is_positive() {
            return Err(SpectrumError::EpsilonNotPositive(epsilon));
        }
        Ok(Self { chi, epsilon })
    }

    pub fn chi(&self) -> &[Rational] {
        &self.chi
    }

    pub fn epsilon(&self) -> &Rational {
        &self.epsilon
    }

    pub fn ell(&self) -> usize {
        self.chi.len()
    }

    /// Same exponents with a different gap.
    pub fn with_epsilon(&self, epsilon: Rational) -> Result<Self, SpectrumError> {
        Self::new(self.chi.clone(), epsilon)
    }

    fn fastest(&self) -> &Rational {
        &self.chi[0]
    }

    fn slowest(&self) -> &Rational {
        &self.chi[self.chi.len() - 1]
    }

    /// `sum_j s_j chi_j`
    pub fn weight(&self, s: &[u32]) -> Rational {
        let mut acc = Rational::zero();
        for (sj, cj) in s.iter().zip(&self.chi) {
            if *sj != 0 {
                acc += cj * Rational::from_integer(BigInt::from(*sj));
            }
        }
        acc
    }
}

/// Target block together with per-block degrees of a monomial map component.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HomogeneousType {
    pub block: usize,
    pub s: Vec<u32>,
}

impl HomogeneousType {
    pub fn new(block: usize, s: Vec<u32>) -> Self {
        Self { block, s }
    }

    pub fn degree(&self) -> u32 {
        self.s.iter().sum()
    }

    pub fn validate(&self, ell: usize) -> Result<(), SpectrumError> {
        if self.block >= ell {
            return Err(SpectrumError::BlockOutOfRange { block: self.block, ell });
        }
        if self.s.len() != ell {
            return Err(SpectrumError::WrongArity { got: self.s.len(), ell });
        }
        if self.degree() == 0 {
            return Err(SpectrumError::ZeroDegree);
        }
        Ok(())
    }
}

impl fmt::Display for HomogeneousType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "block {} s=(", self.block)?;
        for (k, v) in self.s.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeClass {
    /// `chi_i == sum s_j chi_j`
    Resonance,
    /// `chi_i < sum s_j chi_j`
    StrictSubResonance,
    /// `chi_i > sum s_j chi_j`
    NonSubResonance,
}

impl TypeClass {
    pub const ALL: [TypeClass; 3] = [
        TypeClass::Resonance,
        TypeClass::StrictSubResonance,
        TypeClass::NonSubResonance,
    ];

    pub fn is_sub_resonance(self) -> bool {
        !matches!(self, TypeClass::NonSubResonance)
    }

    pub fn name(self) -> &'static str {
        match self {
            TypeClass::Resonance => "resonance",
            TypeClass::StrictSubResonance => "strict-sub-resonance",
            TypeClass::NonSubResonance => "non-sub-resonance",
        }
    }
}

/// A set of type classes, used to select graded pieces of a polynomial map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassSet {
    pub resonance: bool,
    pub strict_sub: bool,
    pub non_sub: bool,
}

impl ClassSet {
    pub const NONE: ClassSet = ClassSet { resonance: false, strict_sub: false, non_sub: false };
    pub const RESONANCE: ClassSet = ClassSet { resonance: true, strict_sub: false, non_sub: false };
    pub const STRICT_SUB: ClassSet = ClassSet { resonance: false, strict_sub: true, non_sub: false };
    pub const SUB_RESONANCE: ClassSet = ClassSet { resonance: true, strict_sub: true, non_sub: false };
    pub const NON_SUB: ClassSet = ClassSet { resonance: false, strict_sub: false, non_sub: true };
    pub const ALL: ClassSet = ClassSet { resonance: true, strict_sub: true, non_sub: true };

    pub fn contains(self, class: TypeClass) -> bool {
        match class {
            TypeClass::Resonance => self.resonance,
            TypeClass::StrictSubResonance => self.strict_sub,
            TypeClass::NonSubResonance => self.non_sub,
        }
    }
}

/// Narrowness and criticality constants of a spectrum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectralConstants {
    /// Maximal degree of a sub-resonance type.
    pub d: u32,
    pub lambda_tilde: Rational,
    pub lambda: Rational,
    /// `None` when no strict sub-resonance type exists; the corresponding
    /// term is then left out of `epsilon0`.
    pub mu: Option<Rational>,
    pub epsilon0: Rational,
}

/// `floor(chi_1 / chi_ell)`
pub fn degree_bound(spec: &SpectrumSpec) -> u32 {
    let q = spec.fastest() / spec.slowest();
    let fl = q.numer().div_floor(q.denom());
    fl.to_u32().expect("degree bound fits in u32")
}

pub fn classify_type(spec: &SpectrumSpec, t: &HomogeneousType) -> TypeClass {
    let w = spec.weight(&t.s);
    let ci = &spec.chi[t.block];
    match ci.cmp(&w) {
        core::cmp::Ordering::Equal => TypeClass::Resonance,
        core::cmp::Ordering::Less => TypeClass::StrictSubResonance,
        core::cmp::Ordering::Greater => TypeClass::NonSubResonance,
    }
}

/// All degree vectors over `ell` blocks with total `n`, in descending
/// lexicographic order (`(n,0,..)` first).
pub fn degree_vectors(ell: usize, n: u32) -> Vec<Vec<u32>> {
    fn rec(ell: usize, pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos + 1 == ell {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for v in (0..=left).rev() {
            cur[pos] = v;
            rec(ell, pos + 1, left - v, cur, out);
        }
    }
    let mut out = Vec::new();
    if ell == 0 {
        return out;
    }
    let mut cur = vec![0; ell];
    rec(ell, 0, n, &mut cur, &mut out);
    out
}

pub fn enumerate_types(
    spec: &SpectrumSpec,
    n: u32,
    block: usize,
) -> Vec<(HomogeneousType, TypeClass)> {
    degree_vectors(spec.ell(), n)
        .into_iter()
        .map(|s| {
            let t = HomogeneousType::new(block, s);
            let c = classify_type(spec, &t);
            (t, c)
        })
        .collect()
}

pub fn spectral_constants(spec: &SpectrumSpec) -> SpectralConstants {
    let d = degree_bound(spec);
    let ell = spec.ell();
    let chi1 = spec.fastest().clone();
    let chil = spec.slowest().clone();
    let int = |v: u32| Rational::from_integer(BigInt::from(v));

    // -chi_1 + (d+1) chi_ell is itself attained (block 0, all degree on the
    // slowest block) and is negative by the choice of d.
    let baseline = -chi1.clone() + int(d + 1) * chil.clone();
    let mut lambda_tilde = baseline.clone();
    // Every value at degree n is at most -chi_1 + n chi_ell, so no degree
    // beyond floor((chi_1 + best)/chi_ell) can improve the maximum.
    let n_max = {
        let q = (chi1.clone() + lambda_tilde.clone()) / chil.clone();
        q.numer().div_floor(q.denom()).to_u32().unwrap_or(d + 1)
    };
    for n in 1..=n_max {
        for s in degree_vectors(ell, n) {
            let w = spec.weight(&s);
            for i in 0..ell {
                let v = -spec.chi[i].clone() + w.clone();
                if v.is_negative() && v > lambda_tilde {
                    lambda_tilde = v;
                }
            }
        }
    }
    let lambda = if lambda_tilde > baseline { lambda_tilde.clone() } else { baseline };

    let mut mu: Option<Rational> = None;
    for n in 1..=d {
        for s in degree_vectors(ell, n) {
            let w = spec.weight(&s);
            for i in 0..ell {
                let v = spec.chi[i].clone() - w.clone();
                if v.is_negative() && mu.as_ref().is_none_or(|m| v > *m) {
                    mu = Some(v);
                }
            }
        }
    }

    let mut epsilon0 = -chil;
    let lam_term = -lambda.clone() / int(d + 2);
    if lam_term < epsilon0 {
        epsilon0 = lam_term;
    }
    if let Some(m) = &mu {
        let mu_term = -m.clone() / int(d + 1);
        if mu_term < epsilon0 {
            epsilon0 = mu_term;
        }
    }

    SpectralConstants { d, lambda_tilde, lambda, mu, epsilon0 }
}

/// `epsilon < epsilon0`, strictly.
pub fn check_narrowness(spec: &SpectrumSpec, constants: &SpectralConstants) -> bool {
    *spec.epsilon() < constants.epsilon0
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Criticality {
    /// `chi_1 - (N + alpha) chi_ell`
    pub nu: Rational,
    /// `nu / (N + alpha + 1)`; epsilon must lie strictly below it.
    pub epsilon_bound: Rational,
    pub ok: bool,
}

impl Criticality {
    pub fn require(&self, spec: &SpectrumSpec) -> Result<(), SpectrumError> {
        if !self.nu.is_positive() {
            return Err(SpectrumError::BelowCritical(self.nu.clone()));
        }
        if !self.ok {
            return Err(SpectrumError::CriticalityEpsilon {
                epsilon: spec.epsilon().clone(),
                bound: self.epsilon_bound.clone(),
            });
        }
        Ok(())
    }
}

pub fn criticality(
    spec: &SpectrumSpec,
    n: u32,
    alpha: &Rational,
) -> Result<Criticality, SpectrumError> {
    if alpha.is_negative() || *alpha > Rational::from_integer(BigInt::from(1)) {
        return Err(SpectrumError::AlphaOutOfRange(alpha.clone()));
    }
    let reg = Rational::from_integer(BigInt::from(n)) + alpha.clone();
    let nu = spec.fastest().clone() - reg.clone() * spec.slowest().clone();
    let epsilon_bound = nu.clone() / (reg + Rational::from_integer(BigInt::from(1)));
    let ok = nu.is_positive() && *spec.epsilon() < epsilon_bound;
    Ok(Criticality { nu, epsilon_bound, ok })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Bound for `R -> F^{-1} R F` (pull back along the base map).
    Forward,
    /// Bound for `R -> F R F^{-1}` (push forward along the base map).
    Backward,
}

/// Exponent of the growth bound of the coefficient transfer on one type:
/// forward `-chi_i + sum s_j chi_j + (n+1) eps`, backward
/// `chi_i - sum s_j chi_j + (n+1) eps`.
pub fn phi_contraction_bound(
    spec: &SpectrumSpec,
    t: &HomogeneousType,
    direction: Direction,
) -> Rational {
    let w = spec.weight(&t.s);
    let ci = spec.chi[t.block].clone();
    let slack = Rational::from_integer(BigInt::from(t.degree() + 1)) * spec.epsilon().clone();
    match direction {
        Direction::Forward => -ci + w + slack,
        Direction::Backward => ci - w + slack,
    }
}

/// Largest forward bound over the non-sub-resonance types of degree `n`.
/// `None` when there are no such types.
pub fn max_forward_bound(spec: &SpectrumSpec, n: u32) -> Option<Rational> {
    let mut best: Option<Rational> = None;
    for i in 0..spec.ell() {
        for (t, c) in enumerate_types(spec, n, i) {
            if c == TypeClass::NonSubResonance {
                let v = phi_contraction_bound(spec, &t, Direction::Forward);
                if best.as_ref().is_none_or(|b| v > *b) {
                    best = Some(v);
                }
            }
        }
    }
    best
}

/// Largest backward bound over the strict sub-resonance types of degree `n`.
pub fn max_backward_bound(spec: &SpectrumSpec, n: u32) -> Option<Rational> {
    let mut best: Option<Rational> = None;
    for i in 0..spec.ell() {
        for (t, c) in enumerate_types(spec, n, i) {
            if c == TypeClass::StrictSubResonance {
                let v = phi_contraction_bound(spec, &t, Direction::Backward);
                if best.as_ref().is_none_or(|b| v > *b) {
                    best = Some(v);
                }
            }
        }
    }
    best
}

/// `e^r` for an exact exponent, in binary64.
pub fn exp_of(r: &Rational) -> f64 {
    libm::exp(rational_to_f64(r))
}

//! Truncated polynomial maps between graded fibers.
//!
//! A fiber is `R^m` split into `ell` consecutive coordinate blocks. A
//! [`PolyMap`] stores a sparse table from (monomial, target coordinate) to
//! coefficient, with no constant terms and an explicit degree cap. Every
//! monomial in a component of target block `i` has a homogeneous type
//! `(i, s)` where `s_j` is its total degree in the coordinates of block `j`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::Range;

use smallvec::SmallVec;
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix};
use crate::scalar::Scalar;
use crate::spectrum::{classify_type, degree_bound, ClassSet, HomogeneousType, SpectrumSpec, TypeClass};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("block dimensions must be positive")]
    EmptyBlock,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("monomial has {got} exponents, fiber has {expected} coordinates")]
    Arity { got: usize, expected: usize },
    #[error("target coordinate {coord} out of range (fiber dimension {dim})")]
    CoordinateOutOfRange { coord: usize, dim: usize },
    #[error("monomial degree {degree} outside 1..={cap}")]
    DegreeOutOfRange { degree: u32, cap: u32 },
    #[error("linear part is singular")]
    Singular,
    #[error("map has a {class} term of {ty} (coefficient magnitude {magnitude:e})")]
    NotInClass { ty: HomogeneousType, class: &'static str, magnitude: f64 },
    #[error("inverse has a nonzero term of degree {0} beyond the group degree bound")]
    InverseNotPolynomial(u32),
}

impl From<LinalgError> for PolyError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular => PolyError::Singular,
            LinalgError::Shape(..) => PolyError::DimensionMismatch("matrix shape"),
        }
    }
}

/// Block dimensions `m_1..m_ell` of a graded fiber.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GradedDims {
    dims: Vec<usize>,
    block_of: Vec<usize>,
    offsets: Vec<usize>,
}

impl GradedDims {
    pub fn new(dims: Vec<usize>) -> Result<Self, PolyError> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(PolyError::EmptyBlock);
        }
        let mut block_of = Vec::new();
        let mut offsets = Vec::with_capacity(dims.len() + 1);
        let mut off = 0;
        for (b, &m) in dims.iter().enumerate() {
            offsets.push(off);
            block_of.extend(core::iter::repeat_n(b, m));
            off += m;
        }
        offsets.push(off);
        Ok(Self { dims, block_of, offsets })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ell(&self) -> usize {
        self.dims.len()
    }

    pub fn total(&self) -> usize {
        self.block_of.len()
    }

    pub fn block_of(&self, coord: usize) -> usize {
        self.block_of[coord]
    }

    pub fn block_range(&self, block: usize) -> Range<usize> {
        self.offsets[block]..self.offsets[block + 1]
    }

    /// Per-block degrees of a monomial on this fiber.
    pub fn block_degrees(&self, mono: &Monomial) -> Vec<u32> {
        let mut s = vec![0u32; self.ell()];
        for (k, &e) in mono.exps().iter().enumerate() {
            s[self.block_of[k]] += u32::from(e);
        }
        s
    }
}

/// Exponent vector. Ordered graded-lexicographically: lower total degree
/// first, then larger exponents on earlier coordinates first.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    exps: SmallVec<[u8; 8]>,
}

impl Monomial {
    pub fn new(exps: &[u8]) -> Self {
        Self { exps: SmallVec::from_slice(exps) }
    }

    pub fn one(vars: usize) -> Self {
        Self { exps: SmallVec::from_elem(0, vars) }
    }

    pub fn var(vars: usize, k: usize) -> Self {
        let mut m = Self::one(vars);
        m.exps[k] = 1;
        m
    }

    pub fn exps(&self) -> &[u8] {
        &self.exps
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().map(|&e| u32::from(e)).sum()
    }

    pub fn vars(&self) -> usize {
        self.exps.len()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let exps = self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect();
        Monomial { exps }
    }

    pub fn eval<S: Scalar>(&self, t: &[S]) -> S {
        let mut acc = S::one();
        for (x, &e) in t.iter().zip(self.exps.iter()) {
            for _ in 0..e {
                acc = acc.mul_ref(x);
            }
        }
        acc
    }

    /// All monomials in `vars` variables of total degree `n`, ascending.
    pub fn all_of_degree(vars: usize, n: u32) -> Vec<Monomial> {
        fn rec(pos: usize, left: u32, cur: &mut SmallVec<[u8; 8]>, out: &mut Vec<Monomial>) {
            if pos + 1 == cur.len() {
                cur[pos] = left as u8;
                out.push(Monomial { exps: cur.clone() });
                return;
            }
            for v in (0..=left).rev() {
                cur[pos] = v as u8;
                rec(pos + 1, left - v, cur, out);
            }
        }
        let mut out = Vec::new();
        if vars == 0 {
            return out;
        }
        let mut cur = SmallVec::from_elem(0, vars);
        rec(0, n, &mut cur, &mut out);
        out
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.exps.cmp(&self.exps))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, &e) in self.exps.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "t{}", k + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

type Series<S> = BTreeMap<Monomial, S>;

fn series_mul<S: Scalar>(a: &Series<S>, b: &Series<S>, cap: u32) -> Series<S> {
    let mut out: Series<S> = BTreeMap::new();
    for (ma, ca) in a {
        let da = ma.degree();
        if da > cap {
            break;
        }
        for (mb, cb) in b {
            if da + mb.degree() > cap {
                break;
            }
            let key = ma.mul(mb);
            match out.get_mut(&key) {
                Some(v) => v.add_product(ca, cb),
                None => {
                    out.insert(key, ca.mul_ref(cb));
                }
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// Polynomial map between graded fibers, truncated at `cap`, preserving zero.
#[derive(Clone, PartialEq)]
pub struct PolyMap<S> {
    source: GradedDims,
    target: GradedDims,
    cap: u32,
    terms: BTreeMap<(Monomial, usize), S>,
}

impl<S: fmt::Debug> fmt::Debug for PolyMap<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyMap[cap {}]{{", self.cap)?;
        for ((m, c), v) in &self.terms {
            write!(f, " [{c}] {v:?}*{m:?};")?;
        }
        write!(f, " }}")
    }
}

impl<S: Scalar> PolyMap<S> {
    pub fn zero(source: GradedDims, target: GradedDims, cap: u32) -> Self {
        Self { source, target, cap, terms: BTreeMap::new() }
    }

    pub fn identity(dims: &GradedDims, cap: u32) -> Self {
        let mut p = Self::zero(dims.clone(), dims.clone(), cap.max(1));
        let m = dims.total();
        for k in 0..m {
            p.terms.insert((Monomial::var(m, k), k), S::one());
        }
        p
    }

    /// The linear map `t -> A t`.
    pub fn from_matrix(
        source: &GradedDims,
        target: &GradedDims,
        a: &Matrix<S>,
        cap: u32,
    ) -> Result<Self, PolyError> {
        if a.rows() != target.total() || a.cols() != source.total() {
            return Err(PolyError::DimensionMismatch("matrix does not match fiber dimensions"));
        }
        let mut p = Self::zero(source.clone(), target.clone(), cap.max(1));
        let m = source.total();
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                if !a[(i, j)].is_zero() {
                    p.terms.insert((Monomial::var(m, j), i), a[(i, j)].clone());
                }
            }
        }
        Ok(p)
    }

    pub fn from_terms(
        source: GradedDims,
        target: GradedDims,
        cap: u32,
        terms: impl IntoIterator<Item = (usize, Monomial, S)>,
    ) -> Result<Self, PolyError> {
        let mut p = Self::zero(source, target, cap);
        for (c, m, v) in terms {
            p.add_term(c, m, v)?;
        }
        Ok(p)
    }

    pub fn source(&self) -> &GradedDims {
        &self.source
    }

    pub fn target(&self) -> &GradedDims {
        &self.target
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn is_endomorphism_shaped(&self) -> bool {
        self.source == self.target
    }

    /// Adds `value * mono` to component `target`; the entry is dropped if it
    /// sums to zero.
    pub fn add_term(&mut self, target: usize, mono: Monomial, value: S) -> Result<(), PolyError> {
        if mono.vars() != self.source.total() {
            return Err(PolyError::Arity { got: mono.vars(), expected: self.source.total() });
        }
        if target >= self.target.total() {
            return Err(PolyError::CoordinateOutOfRange { coord: target, dim: self.target.total() });
        }
        let degree = mono.degree();
        if degree == 0 || degree > self.cap {
            return Err(PolyError::DegreeOutOfRange { degree, cap: self.cap });
        }
        self.accumulate(mono, target, value);
        Ok(())
    }

    fn accumulate(&mut self, mono: Monomial, target: usize, value: S) {
        if value.is_zero() {
            return;
        }
        let key = (mono, target);
        match self.terms.get_mut(&key) {
            Some(v) => {
                *v += value;
                if v.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, value);
            }
        }
    }

    pub fn coeff(&self, target: usize, mono: &Monomial) -> Option<&S> {
        self.terms.get(&(mono.clone(), target))
    }

    /// Terms in graded-lexicographic monomial order, then by target.
    pub fn terms(&self) -> impl Iterator<Item = (usize, &Monomial, &S)> {
        self.terms.iter().map(|((m, c), v)| (*c, m, v))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest degree carrying a nonzero coefficient (0 for the zero map).
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    /// Homogeneous type of the term `mono` in component `target`.
    pub fn term_type(&self, target: usize, mono: &Monomial) -> HomogeneousType {
        HomogeneousType::new(self.target.block_of(target), self.source.block_degrees(mono))
    }

    pub fn with_cap(&self, cap: u32) -> Self {
        let mut p = self.clone();
        p.cap = cap;
        p.terms.retain(|(m, _), _| m.degree() <= cap);
        p
    }

    pub fn homogeneous_part(&self, n: u32) -> Self {
        self.filter(|m, _| m.degree() == n)
    }

    pub fn filter(&self, mut keep: impl FnMut(&Monomial, usize) -> bool) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|((m, c), _)| keep(m, *c))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Self { source: self.source.clone(), target: self.target.clone(), cap: self.cap, terms }
    }

    pub fn linear_part(&self) -> Matrix<S> {
        let mut a = Matrix::zeros(self.target.total(), self.source.total());
        for ((m, c), v) in self.terms.range(..) {
            if m.degree() != 1 {
                if m.degree() > 1 {
                    break;
                }
                continue;
            }
            let j = m.exps().iter().position(|&e| e == 1).expect("linear monomial");
            a[(*c, j)] = v.clone();
        }
        a
    }

    /// `self + other`; the result carries the larger cap.
    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        out.cap = self.cap.max(other.cap);
        for ((m, c), v) in &other.terms {
            out.accumulate(m.clone(), *c, v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        out.cap = self.cap.max(other.cap);
        for ((m, c), v) in &other.terms {
            out.accumulate(m.clone(), *c, -v.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, k: &S) -> Self {
        if k.is_zero() {
            return Self::zero(self.source.clone(), self.target.clone(), self.cap);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = v.mul_ref(k);
        }
        out
    }

    fn check_same_shape(&self, other: &Self) -> Result<(), PolyError> {
        if self.source != other.source || self.target != other.target {
            return Err(PolyError::DimensionMismatch("operands live on different fibers"));
        }
        Ok(())
    }

    /// `A ∘ self` for a linear map `A` on the target.
    pub fn left_linear(&self, a: &Matrix<S>, new_target: &GradedDims) -> Result<Self, PolyError> {
        if a.cols() != self.target.total() || a.rows() != new_target.total() {
            return Err(PolyError::DimensionMismatch("left factor does not match target"));
        }
        let mut out = Self::zero(self.source.clone(), new_target.clone(), self.cap);
        for ((m, c), v) in &self.terms {
            for r in 0..a.rows() {
                let arc = &a[(r, *c)];
                if !arc.is_zero() {
                    out.accumulate(m.clone(), r, arc.mul_ref(v));
                }
            }
        }
        Ok(out)
    }

    /// `self ∘ A` for a linear map `A` into the source.
    pub fn right_linear(&self, a: &Matrix<S>, new_source: &GradedDims) -> Result<Self, PolyError> {
        let lin = PolyMap::from_matrix(new_source, &self.source, a, 1)?;
        self.compose(&lin, self.cap)
    }

    /// Taylor expansion of `self ∘ inner`, truncated at degree `cap`.
    pub fn compose(&self, inner: &Self, cap: u32) -> Result<Self, PolyError> {
        if inner.target != self.source {
            return Err(PolyError::DimensionMismatch("inner target differs from outer source"));
        }
        let m = self.source.total();
        let vars = inner.source.total();
        // Components of the inner map as scalar series.
        let mut comps: Vec<Series<S>> = vec![BTreeMap::new(); m];
        for ((mono, c), v) in &inner.terms {
            if mono.degree() <= cap {
                comps[*c].insert(mono.clone(), v.clone());
            }
        }
        let max_exp: Vec<u8> = (0..m)
            .map(|k| {
                self.terms
                    .keys()
                    .filter(|(mono, _)| mono.degree() <= cap)
                    .map(|(mono, _)| mono.exps()[k])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut one: Series<S> = BTreeMap::new();
        one.insert(Monomial::one(vars), S::one());
        // powers[k][e] = comps[k]^e truncated at cap
        let mut powers: Vec<Vec<Series<S>>> = Vec::with_capacity(m);
        for k in 0..m {
            let mut pk = vec![one.clone()];
            for e in 1..=usize::from(max_exp[k]) {
                let next = series_mul(&pk[e - 1], &comps[k], cap);
                pk.push(next);
            }
            powers.push(pk);
        }

        let mut out = Self::zero(inner.source.clone(), self.target.clone(), cap);
        for ((mono, c), v) in &self.terms {
            if mono.degree() > cap {
                continue;
            }
            let mut prod: Option<Series<S>> = None;
            for (k, &e) in mono.exps().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let factor = &powers[k][usize::from(e)];
                prod = Some(match prod {
                    None => factor.clone(),
                    Some(p) => series_mul(&p, factor, cap),
                });
            }
            if let Some(p) = prod {
                for (pm, pv) in p {
                    if pm.degree() >= 1 {
                        out.accumulate(pm, *c, pv.mul_ref(v));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Formal inverse up to degree `cap`: `self ∘ inv = Id` modulo terms of
    /// degree above `cap`.
    pub fn invert(&self, cap: u32) -> Result<Self, PolyError> {
        if !self.is_endomorphism_shaped() {
            return Err(PolyError::DimensionMismatch("inverse of a non-endomorphism"));
        }
        let lin = self.linear_part();
        let lin_inv = lin.inverse()?;
        let dims = self.source.clone();
        let mut inv = PolyMap::from_matrix(&dims, &dims, &lin_inv, cap)?;
        inv.cap = cap;
        let nonlinear = self.filter(|m, _| m.degree() >= 2);
        if nonlinear.is_empty() {
            return Ok(inv);
        }
        for n in 2..=cap {
            let t = nonlinear.compose(&inv, n)?.homogeneous_part(n);
            let g = t.left_linear(&lin_inv, &dims)?;
            for ((m, c), v) in g.terms {
                inv.accumulate(m, c, -v);
            }
        }
        Ok(inv)
    }

    pub fn eval(&self, t: &[S]) -> Vec<S> {
        assert_eq!(t.len(), self.source.total(), "point has wrong dimension");
        let mut out = vec![S::zero(); self.target.total()];
        for ((m, c), v) in &self.terms {
            let mv = m.eval(t);
            out[*c].add_product(v, &mv);
        }
        out
    }

    pub fn class_of(&self, spec: &SpectrumSpec, target: usize, mono: &Monomial) -> TypeClass {
        classify_type(spec, &self.term_type(target, mono))
    }

    /// Keeps exactly the terms whose type falls in `classes`.
    pub fn project(&self, spec: &SpectrumSpec, classes: ClassSet) -> Self {
        self.filter(|m, c| classes.contains(self.class_of(spec, c, m)))
    }

    /// Largest coefficient magnitude outside `classes`, with its type.
    pub fn max_off_class(&self, spec: &SpectrumSpec, classes: ClassSet) -> Option<(HomogeneousType, f64)> {
        let mut worst: Option<(HomogeneousType, f64)> = None;
        for ((m, c), v) in &self.terms {
            let ty = self.term_type(*c, m);
            if !classes.contains(classify_type(spec, &ty)) {
                let mag = v.magnitude();
                if worst.as_ref().is_none_or(|(_, w)| mag > *w) {
                    worst = Some((ty, mag));
                }
            }
        }
        worst
    }

    /// Every coefficient outside `classes` is negligible (exactly zero in
    /// rational mode).
    pub fn is_in_class(&self, spec: &SpectrumSpec, classes: ClassSet, tol: f64) -> bool {
        self.terms.iter().all(|((m, c), v)| {
            classes.contains(self.class_of(spec, *c, m)) || v.is_negligible(tol)
        })
    }

    pub fn require_class(&self, spec: &SpectrumSpec, classes: ClassSet, tol: f64) -> Result<(), PolyError> {
        for ((m, c), v) in &self.terms {
            let ty = self.term_type(*c, m);
            let class = classify_type(spec, &ty);
            if !classes.contains(class) && !v.is_negligible(tol) {
                return Err(PolyError::NotInClass { ty, class: class.name(), magnitude: v.magnitude() });
            }
        }
        Ok(())
    }

    /// Drops coefficients with `|c| <= tol` (exact zeros only in rational mode).
    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, v| !v.is_negligible(tol));
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(Scalar::magnitude).fold(0.0, f64::max)
    }

    pub fn map_scalars<T: Scalar>(&self, f: impl Fn(&S) -> T) -> PolyMap<T> {
        let mut terms = BTreeMap::new();
        for ((m, c), v) in &self.terms {
            let w = f(v);
            if !w.is_zero() {
                terms.insert((m.clone(), *c), w);
            }
        }
        PolyMap { source: self.source.clone(), target: self.target.clone(), cap: self.cap, terms }
    }

    pub fn to_f64(&self) -> PolyMap<f64> {
        self.map_scalars(Scalar::to_f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupTag {
    SubResonance,
    Resonance,
}

impl GroupTag {
    pub fn classes(self) -> ClassSet {
        match self {
            GroupTag::SubResonance => ClassSet::SUB_RESONANCE,
            GroupTag::Resonance => ClassSet::RESONANCE,
        }
    }
}

/// Member of the sub-resonance or resonance group of a fiber: a polynomial
/// self-map of degree at most `d` with invertible linear part and only terms
/// of the tagged class.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement<S> {
    map: PolyMap<S>,
    tag: GroupTag,
}

impl<S: Scalar> GroupElement<S> {
    pub fn new(map: PolyMap<S>, spec: &SpectrumSpec, tag: GroupTag, tol: f64) -> Result<Self, PolyError> {
        if !map.is_endomorphism_shaped() {
            return Err(PolyError::DimensionMismatch("group elements are self-maps"));
        }
        if map.source.ell() != spec.ell() {
            return Err(PolyError::DimensionMismatch("block count differs from the spectrum"));
        }
        map.require_class(spec, tag.classes(), tol)?;
        let d = degree_bound(spec);
        let deg = map.degree();
        if deg > d {
            return Err(PolyError::DegreeOutOfRange { degree: deg, cap: d });
        }
        map.linear_part().inverse()?;
        let mut map = map.with_cap(d);
        map.prune(tol);
        Ok(Self { map, tag })
    }

    pub fn map(&self) -> &PolyMap<S> {
        &self.map
    }

    pub fn into_map(self) -> PolyMap<S> {
        self.map
    }

    pub fn tag(&self) -> GroupTag {
        self.tag
    }

    /// `self ∘ other`. Group closure is asserted, not assumed: no term of
    /// degree `d+1` may appear and every term must be of the tagged class.
    pub fn compose(&self, other: &Self, spec: &SpectrumSpec, tol: f64) -> Result<Self, PolyError> {
        let d = degree_bound(spec);
        let full = self.map.compose(&other.map, d + 1)?;
        let tail = full.homogeneous_part(d + 1);
        if !tail.terms.values().all(|v| v.is_negligible(tol)) {
            return Err(PolyError::InverseNotPolynomial(d + 1));
        }
        let tag = if self.tag == other.tag { self.tag } else { GroupTag::SubResonance };
        Self::new(full.with_cap(d), spec, tag, tol)
    }

    /// Exact group inverse; fails if the formal inverse leaves the group.
    pub fn invert(&self, spec: &SpectrumSpec, tol: f64) -> Result<Self, PolyError> {
        let d = degree_bound(spec);
        let full = self.map.invert(d + 1)?;
        let tail = full.homogeneous_part(d + 1);
        if !tail.terms.values().all(|v| v.is_negligible(tol)) {
            return Err(PolyError::InverseNotPolynomial(d + 1));
        }
        Self::new(full.with_cap(d), spec, self.tag, tol)
    }

    pub fn eval(&self, t: &[S]) -> Vec<S> {
        self.map.eval(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};

    fn dims11() -> GradedDims {
        GradedDims::new(vec![1, 1]).unwrap()
    }

    fn mono(e: &[u8]) -> Monomial {
        Monomial::new(e)
    }

    fn worked_p() -> PolyMap<Rational> {
        // (a t1 + t2^2 + t1 t2, b t2)
        PolyMap::from_terms(
            dims11(),
            dims11(),
            2,
            [
                (0, mono(&[1, 0]), rat(1, 8)),
                (0, mono(&[0, 2]), rat(1, 1)),
                (0, mono(&[1, 1]), rat(1, 1)),
                (1, mono(&[0, 1]), rat(1, 3)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn graded_lex_order() {
        let mut v = Monomial::all_of_degree(2, 2);
        v.sort();
        assert_eq!(v, vec![mono(&[2, 0]), mono(&[1, 1]), mono(&[0, 2])]);
        assert!(mono(&[0, 1]) < mono(&[2, 0]));
    }

    #[test]
    fn homogeneous_parts() {
        let p = worked_p();
        let p2 = p.homogeneous_part(2);
        assert_eq!(p2.len(), 2);
        assert_eq!(p.homogeneous_part(1).len(), 2);
        let p2_2 = p2.homogeneous_part(2);
        assert_eq!(p2_2, p2);
        assert!(p2.homogeneous_part(1).is_empty());
        let sum = p.homogeneous_part(1).add(&p.homogeneous_part(2)).unwrap();
        assert_eq!(sum.with_cap(2), p);
    }

    #[test]
    fn compose_scalar_example() {
        let d = GradedDims::new(vec![1]).unwrap();
        let p = PolyMap::from_terms(
            d.clone(),
            d.clone(),
            2,
            [(0, mono(&[1]), rat(1, 1)), (0, mono(&[2]), rat(1, 1))],
        )
        .unwrap();
        let c = p.compose(&p, 2).unwrap();
        assert_eq!(c.coeff(0, &mono(&[1])), Some(&rat(1, 1)));
        assert_eq!(c.coeff(0, &mono(&[2])), Some(&rat(2, 1)));
        assert_eq!(c.len(), 2);
        assert_eq!(c.cap(), 2);
    }

    #[test]
    fn compose_identity_and_linear() {
        let p = worked_p();
        let id = PolyMap::identity(&dims11(), 2);
        assert_eq!(id.compose(&p, 2).unwrap(), p);
        let a = Matrix::from_rows(vec![vec![rat(1, 1), rat(2, 1)], vec![rat(0, 1), rat(3, 1)]]);
        let b = Matrix::from_rows(vec![vec![rat(5, 1), rat(0, 1)], vec![rat(1, 1), rat(1, 1)]]);
        let pa = PolyMap::from_matrix(&dims11(), &dims11(), &a, 1).unwrap();
        let pb = PolyMap::from_matrix(&dims11(), &dims11(), &b, 1).unwrap();
        assert_eq!(pa.compose(&pb, 1).unwrap().linear_part(), a.mul(&b).unwrap());
    }

    #[test]
    fn invert_examples() {
        let id = PolyMap::<Rational>::identity(&dims11(), 3);
        assert_eq!(id.invert(3).unwrap(), id);
        let d = GradedDims::new(vec![1]).unwrap();
        let a = PolyMap::from_terms(d.clone(), d.clone(), 1, [(0, mono(&[1]), rat(3, 7))]).unwrap();
        assert_eq!(a.invert(1).unwrap().coeff(0, &mono(&[1])), Some(&rat(7, 3)));
        let p = PolyMap::from_terms(
            dims11(),
            dims11(),
            2,
            [(0, mono(&[1, 0]), rat(1, 1)), (0, mono(&[0, 2]), rat(1, 1)), (1, mono(&[0, 1]), rat(1, 1))],
        )
        .unwrap();
        let inv = p.invert(2).unwrap();
        assert_eq!(inv.coeff(0, &mono(&[0, 2])), Some(&rat(-1, 1)));
        assert_eq!(p.compose(&inv, 2).unwrap(), PolyMap::identity(&dims11(), 2));
    }

    #[test]
    fn singular_inverse_is_an_error() {
        let d = GradedDims::new(vec![1]).unwrap();
        let p = PolyMap::from_terms(d.clone(), d, 2, [(0, mono(&[2]), rat(1, 1))]).unwrap();
        assert_eq!(p.invert(2).unwrap_err(), PolyError::Singular);
    }

    #[test]
    fn projections() {
        let spec = SpectrumSpec::new(vec![rat(-2, 1), rat(-1, 1)], rat(1, 5)).unwrap();
        let p = worked_p();
        let sub = p.project(&spec, ClassSet::SUB_RESONANCE);
        assert_eq!(sub.len(), 3);
        assert!(sub.coeff(0, &mono(&[1, 1])).is_none());
        let parts = TypeClass::ALL.map(|c| {
            p.project(&spec, ClassSet { resonance: c == TypeClass::Resonance, strict_sub: c == TypeClass::StrictSubResonance, non_sub: c == TypeClass::NonSubResonance })
        });
        let total = parts[0].add(&parts[1]).unwrap().add(&parts[2]).unwrap();
        assert_eq!(total, p);
        assert!(p.project(&spec, ClassSet::NONE).is_empty());
        let lin = p.homogeneous_part(1);
        assert_eq!(lin.project(&spec, ClassSet::RESONANCE), lin);
    }

    #[test]
    fn class_membership() {
        let spec = SpectrumSpec::new(vec![rat(-2, 1), rat(-1, 1)], rat(1, 5)).unwrap();
        // upper triangular in the flag: block 0 may see block 1 linearly
        let upper = PolyMap::from_terms(
            dims11(),
            dims11(),
            1,
            [(0, mono(&[1, 0]), rat(1, 1)), (0, mono(&[0, 1]), rat(4, 1)), (1, mono(&[0, 1]), rat(1, 1))],
        )
        .unwrap();
        assert!(upper.is_in_class(&spec, ClassSet::SUB_RESONANCE, 0.0));
        assert!(!upper.is_in_class(&spec, ClassSet::RESONANCE, 0.0));
        let p = worked_p().to_f64();
        assert!(!p.is_in_class(&spec, ClassSet::SUB_RESONANCE, 1e-12));
    }

    #[test]
    fn group_inverse_stays_in_group() {
        let spec = SpectrumSpec::new(vec![rat(-2, 1), rat(-1, 1)], rat(1, 5)).unwrap();
        let p = worked_p().project(&spec, ClassSet::SUB_RESONANCE);
        let g = GroupElement::new(p, &spec, GroupTag::SubResonance, 0.0).unwrap();
        let inv = g.invert(&spec, 0.0).unwrap();
        let id = g.compose(&inv, &spec, 0.0).unwrap();
        assert_eq!(id.map(), &PolyMap::identity(&dims11(), 2));
        assert!(GroupElement::new(worked_p(), &spec, GroupTag::SubResonance, 0.0).is_err());
    }
}

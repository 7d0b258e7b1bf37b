//! Invariant sections of coefficient bundles over the cycles of a finite base.
//!
//! At a fixed degree the unknown coefficient vectors `u_x` (one per base
//! point) satisfy a twisted relation along the base map, either pulled back
//! (`u_x = A_x u_{f(x)} + b_x`) or pushed forward (`u_{f(x)} = A_x u_x + b_x`).
//! When the transfer maps contract, the relation has exactly one solution;
//! on a cycle of period `q` it reduces to one linear solve with
//! `Id - A^{(q)}` followed by back substitution.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::base::FiniteBase;
use crate::graded::{GradedDims, Monomial, PolyError, PolyMap};
use crate::linalg::{LinalgError, Matrix};
use crate::scalar::Scalar;
use crate::spectrum::{ClassSet, SpectrumSpec};

/// Coordinates `(target, monomial)` of a homogeneous graded piece.
#[derive(Debug, Clone)]
pub(crate) struct Basis {
    elems: Vec<(usize, Monomial)>,
    index: BTreeMap<(Monomial, usize), usize>,
}

impl Basis {
    /// Degree-`n` terms of `dims -> dims` whose type lies in `classes`.
    pub(crate) fn new(dims: &GradedDims, spec: &SpectrumSpec, n: u32, classes: ClassSet) -> Self {
        let probe = PolyMap::<crate::scalar::Rational>::zero(dims.clone(), dims.clone(), n);
        let mut elems = Vec::new();
        let mut index = BTreeMap::new();
        for mono in Monomial::all_of_degree(dims.total(), n) {
            for c in 0..dims.total() {
                if classes.contains(probe.class_of(spec, c, &mono)) {
                    index.insert((mono.clone(), c), elems.len());
                    elems.push((c, mono.clone()));
                }
            }
        }
        Self { elems, index }
    }

    pub(crate) fn len(&self) -> usize {
        self.elems.len()
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub(crate) fn to_vec<S: Scalar>(&self, p: &PolyMap<S>) -> Vec<S> {
        let mut v = vec![S::zero(); self.len()];
        for (c, m, x) in p.terms() {
            if let Some(&k) = self.index.get(&(m.clone(), c)) {
                v[k] = x.clone();
            }
        }
        v
    }

    pub(crate) fn to_map<S: Scalar>(&self, dims: &GradedDims, cap: u32, v: &[S]) -> PolyMap<S> {
        let mut p = PolyMap::zero(dims.clone(), dims.clone(), cap);
        for ((c, m), x) in self.elems.iter().zip(v) {
            if !x.is_zero() {
                p.add_term(*c, m.clone(), x.clone()).expect("basis term fits the fiber");
            }
        }
        p
    }

    /// Sparse columns of `R -> left ∘ R ∘ right` restricted to this basis.
    /// The operator must preserve the span (true for block-diagonal
    /// `left`/`right`, which preserve homogeneous types).
    pub(crate) fn operator<S: Scalar>(
        &self,
        dims: &GradedDims,
        left: &Matrix<S>,
        right: &Matrix<S>,
    ) -> Result<Vec<Vec<(usize, S)>>, PolyError> {
        let scalar = GradedDims::new(vec![1]).expect("nonempty");
        let right_map = PolyMap::from_matrix(dims, dims, right, 1)?;
        let mut pulled: BTreeMap<Monomial, PolyMap<S>> = BTreeMap::new();
        let mut cols = Vec::with_capacity(self.len());
        for (c, mono) in &self.elems {
            if !pulled.contains_key(mono) {
                let n = mono.degree();
                let single = PolyMap::from_terms(dims.clone(), scalar.clone(), n, [(0, mono.clone(), S::one())])?;
                pulled.insert(mono.clone(), single.compose(&right_map, n)?);
            }
            let sub = &pulled[mono];
            let mut col = Vec::new();
            for r in 0..dims.total() {
                let lrc = &left[(r, *c)];
                if lrc.is_zero() {
                    continue;
                }
                for (_, m2, v) in sub.terms() {
                    let k = *self
                        .index
                        .get(&(m2.clone(), r))
                        .ok_or(PolyError::DimensionMismatch("operator leaves the graded piece"))?;
                    col.push((k, lrc.mul_ref(v)));
                }
            }
            cols.push(col);
        }
        Ok(cols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Transfer {
    /// `u_x = A_x u_{f(x)} + b_x`
    PullBack,
    /// `u_{f(x)} = A_x u_x + b_x`
    PushForward,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Solves `u_k = A_k u_{k+1 mod q} + b_k` around one cycle with dense
/// matrices: `(Id - A_0 ... A_{q-1}) u_0 = b_0 + A_0 (b_1 + A_1 (...))`.
pub fn solve_cycle<S: Scalar>(a: &[Matrix<S>], b: &[Vec<S>]) -> Result<Vec<Vec<S>>, LinalgError> {
    let q = a.len();
    assert_eq!(q, b.len());
    assert!(q > 0);
    let dim = b[0].len();
    let mut rhs = b[q - 1].clone();
    for k in (0..q - 1).rev() {
        let av = a[k].mul_vec(&rhs);
        rhs = b[k].iter().zip(av).map(|(x, y)| x.clone() + y).collect();
    }
    let mut monodromy = a[q - 1].clone();
    for k in (0..q - 1).rev() {
        monodromy = a[k].mul(&monodromy)?;
    }
    let system = Matrix::identity(dim).sub(&monodromy);
    let u0 = system.solve_vec(&rhs)?;
    let mut out = vec![Vec::new(); q];
    out[0] = u0;
    for k in (1..q).rev() {
        let next = if k + 1 == q { &out[0] } else { &out[k + 1] };
        let av = a[k].mul_vec(next);
        out[k] = b[k].iter().zip(av).map(|(x, y)| x.clone() + y).collect();
    }
    Ok(out)
}

/// Solves the transfer relation on every cycle of `base`. `ops[x]` are sparse
/// columns of `A_x`, `rhs[x]` the inhomogeneity `b_x`. Returns `u_x` for all
/// points, or the index of the cycle whose system was singular.
pub(crate) fn solve_sections<S: Scalar>(
    base: &FiniteBase,
    dim: usize,
    ops: &[Vec<Vec<(usize, S)>>],
    rhs: &[Vec<S>],
    transfer: Transfer,
) -> Result<Vec<Vec<S>>, usize> {
    let mut out = vec![Vec::new(); base.points()];
    if dim == 0 {
        return Ok(out);
    }
    for (ci, cycle) in base.cycles().iter().enumerate() {
        // Reorder so that u_k = A'_k u_{k+1} + b'_k.
        let q = cycle.len();
        let (order, op_at): (Vec<usize>, Vec<usize>) = match transfer {
            Transfer::PullBack => (cycle.clone(), cycle.clone()),
            Transfer::PushForward => {
                // w_j = u_{c_{-j}}, w_j = A_{c_{-j-1}} w_{j+1} + b_{c_{-j-1}}
                let order = (0..q).map(|j| cycle[(q - j) % q]).collect();
                let op_at = (0..q).map(|j| cycle[(2 * q - j - 1) % q]).collect();
                (order, op_at)
            }
        };

        let mut uf = UnionFind((0..dim).collect());
        for &x in &op_at {
            for (j, col) in ops[x].iter().enumerate() {
                for (i, _) in col {
                    uf.union(*i, j);
                }
            }
        }
        let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for k in 0..dim {
            let r = uf.find(k);
            components.entry(r).or_default().push(k);
        }

        let mut solution: Vec<Vec<S>> = vec![vec![S::zero(); dim]; q];
        for comp in components.values() {
            let local: BTreeMap<usize, usize> = comp.iter().enumerate().map(|(l, &g)| (g, l)).collect();
            let mats: Vec<Matrix<S>> = op_at
                .iter()
                .map(|&x| {
                    let mut m = Matrix::zeros(comp.len(), comp.len());
                    for (lj, &gj) in comp.iter().enumerate() {
                        for (gi, v) in &ops[x][gj] {
                            m[(local[gi], lj)] += v.clone();
                        }
                    }
                    m
                })
                .collect();
            let bs: Vec<Vec<S>> = op_at.iter().map(|&x| comp.iter().map(|&g| rhs[x][g].clone()).collect()).collect();
            if bs.iter().all(|b| b.iter().all(|v| v.is_zero())) {
                continue;
            }
            let sol = solve_cycle(&mats, &bs).map_err(|_| ci)?;
            for (k, s) in sol.into_iter().enumerate() {
                for (l, v) in s.into_iter().enumerate() {
                    solution[k][comp[l]] = v;
                }
            }
        }
        for (k, &x) in order.iter().enumerate() {
            out[x] = core::mem::take(&mut solution[k]);
        }
    }
    Ok(out)
}

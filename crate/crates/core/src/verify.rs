//! Checks of the structural statements about normal forms: uniqueness up to
//! sub-resonance (or resonance) transitions, polynomiality of commuting
//! extensions in normal-form coordinates, flag preservation, and the
//! single-block linearization.

use alloc::vec::Vec;

use thiserror::Error;

use crate::base::Extension;
use crate::evaluator::{norm, EvalError, Evaluator};
use crate::graded::{GroupTag, PolyError, PolyMap};
use crate::normal_form::{build_taylor, BuildOptions, LiftStrategy, NormalFormError, NormalFormResult, ResonanceResult};
use crate::scalar::{Rational, Scalar};
use crate::spectrum::{criticality, degree_bound, HomogeneousType, SpectrumError, SpectrumSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("results were built from different instances: {0}")]
    Mismatched(&'static str),
    #[error("base maps do not commute")]
    BaseNotCommuting,
    #[error("extensions do not commute at point {point}: {ty} coefficient differs by {magnitude:e}")]
    NotCommuting { point: usize, ty: HomogeneousType, magnitude: f64 },
    #[error("criticality fails for the commuting extension: {0}")]
    Criticality(SpectrumError),
    #[error("resonance result carries no total coordinate change")]
    MissingTotal,
    #[error(transparent)]
    Build(#[from] NormalFormError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Transition jet at one point with its class verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessEntry<S> {
    pub point: usize,
    pub g: PolyMap<S>,
    pub in_class: bool,
    /// Largest off-class coefficient, if any.
    pub worst: Option<(HomogeneousType, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionWitness<S> {
    pub tag: GroupTag,
    pub entries: Vec<WitnessEntry<S>>,
}

impl<S: Scalar> TransitionWitness<S> {
    pub fn verdict(&self) -> bool {
        self.entries.iter().all(|e| e.in_class)
    }

    /// Every transition jet is the identity up to `tol`.
    pub fn is_identity(&self, tol: f64) -> bool {
        self.entries.iter().all(|e| {
            let id = PolyMap::identity(e.g.source(), e.g.cap());
            let mut diff = e.g.sub(&id).expect("same fiber");
            diff.prune(tol);
            diff.is_empty()
        })
    }
}

fn witness<S: Scalar>(
    spec: &SpectrumSpec,
    jets: Vec<PolyMap<S>>,
    tag: GroupTag,
    tol: f64,
) -> TransitionWitness<S> {
    let entries = jets
        .into_iter()
        .enumerate()
        .map(|(point, g)| {
            let worst = g.max_off_class(spec, tag.classes());
            let in_class = g.is_in_class(spec, tag.classes(), tol);
            WitnessEntry { point, g, in_class, worst }
        })
        .collect();
    TransitionWitness { tag, entries }
}

/// Degree-`d` jets of `a_x ∘ b_x^{-1}` for each point.
pub fn transition_witness<S: Scalar>(
    spec: &SpectrumSpec,
    a: &[PolyMap<S>],
    b: &[PolyMap<S>],
    tag: GroupTag,
    tol: f64,
) -> Result<TransitionWitness<S>, VerifyError> {
    if a.len() != b.len() {
        return Err(VerifyError::Mismatched("point counts differ"));
    }
    let d = degree_bound(spec);
    let jets = a
        .iter()
        .zip(b)
        .map(|(ha, hb)| {
            let inv = hb.invert(d)?;
            ha.compose(&inv, d)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(witness(spec, jets, tag, tol))
}

fn same_instance<S: Scalar>(a: &NormalFormResult<S>, b: &NormalFormResult<S>) -> Result<(), VerifyError> {
    if a.spec != b.spec {
        return Err(VerifyError::Mismatched("spectra differ"));
    }
    if a.base != b.base || a.dims != b.dims {
        return Err(VerifyError::Mismatched("bases or fibers differ"));
    }
    Ok(())
}

/// Transition between two Taylor builds of the same extension. All jets
/// should be sub-resonance.
pub fn check_uniqueness<S: Scalar>(
    a: &NormalFormResult<S>,
    b: &NormalFormResult<S>,
    tol: f64,
) -> Result<TransitionWitness<S>, VerifyError> {
    same_instance(a, b)?;
    transition_witness(&a.spec, &a.h, &b.h, GroupTag::SubResonance, tol)
}

/// Transition between two resonance reductions, through the total
/// coordinate changes. All jets should be resonance.
pub fn check_resonance_uniqueness<S: Scalar>(
    spec: &SpectrumSpec,
    a: &ResonanceResult<S>,
    b: &ResonanceResult<S>,
    tol: f64,
) -> Result<TransitionWitness<S>, VerifyError> {
    let ha = a.h_total.as_ref().ok_or(VerifyError::MissingTotal)?;
    let hb = b.h_total.as_ref().ok_or(VerifyError::MissingTotal)?;
    transition_witness(spec, ha, hb, GroupTag::Resonance, tol)
}

/// Rebuilds `nf` with its own jets pinned and reports whether the result is
/// identical.
pub fn pinned_reproduces<S: Scalar>(
    ext: &Extension<S>,
    nf: &NormalFormResult<S>,
    opts: BuildOptions,
) -> Result<bool, VerifyError> {
    let opts = BuildOptions { force: opts.force || !nf.certified, ..opts };
    let again = build_taylor(ext, &nf.spec, nf.n, &nf.alpha, &LiftStrategy::Pinned(nf.h.clone()), opts)?;
    Ok(again.h == nf.h && again.p == nf.p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralizerReport<S> {
    /// Linear parts of the commuting extension are block diagonal.
    pub gamma_block_diagonal: bool,
    /// Degree-`d` jets of `H_{g(x)} ∘ G_x ∘ H_x^{-1}`.
    pub sub_resonance: TransitionWitness<S>,
    /// Same through the total resonance coordinate change, when given.
    pub resonance: Option<TransitionWitness<S>>,
}

impl<S: Scalar> CentralizerReport<S> {
    pub fn verdict(&self) -> bool {
        self.gamma_block_diagonal
            && self.sub_resonance.verdict()
            && self.resonance.as_ref().is_none_or(TransitionWitness::verdict)
    }
}

/// Verifies that `G` commutes with `F` as an extension (base maps and
/// jets up to the build degree), then classifies `G` in normal-form
/// coordinates.
#[allow(clippy::too_many_arguments)]
pub fn check_centralizer<S: Scalar>(
    ext_f: &Extension<S>,
    nf: &NormalFormResult<S>,
    ext_g: &Extension<S>,
    n_g: u32,
    alpha_g: &Rational,
    reduced: Option<&ResonanceResult<S>>,
    tol: f64,
) -> Result<CentralizerReport<S>, VerifyError> {
    let spec = &nf.spec;
    if ext_f.dims() != ext_g.dims() || ext_f.base().points() != ext_g.base().points() {
        return Err(VerifyError::Mismatched("extensions live on different bundles"));
    }
    if !ext_f.base().commutes_with(ext_g.base()) {
        return Err(VerifyError::BaseNotCommuting);
    }
    let cap = nf.n;
    for x in 0..ext_f.base().points() {
        let fx = ext_f.base().f(x);
        let gx = ext_g.base().f(x);
        let lhs = ext_g.fiber(fx).compose(ext_f.fiber(x), cap)?;
        let rhs = ext_f.fiber(gx).compose(ext_g.fiber(x), cap)?;
        let diff = lhs.sub(&rhs)?;
        let worst = diff
            .terms()
            .map(|(c, m, v)| (diff.term_type(c, m), v.magnitude()))
            .fold(None::<(HomogeneousType, f64)>, |acc, (ty, mag)| match acc {
                Some((_, w)) if w >= mag => acc,
                _ => Some((ty, mag)),
            });
        if let Some((ty, magnitude)) = worst {
            if (S::EXACT && magnitude > 0.0) || magnitude > tol {
                return Err(VerifyError::NotCommuting { point: x, ty, magnitude });
            }
        }
    }
    criticality(spec, n_g, alpha_g)
        .and_then(|c| c.require(spec))
        .map_err(VerifyError::Criticality)?;

    let gamma_block_diagonal = (0..ext_g.base().points()).all(|x| {
        let a = ext_g.linear(x);
        (0..a.rows()).all(|r| {
            (0..a.cols()).all(|c| ext_g.dims().block_of(r) == ext_g.dims().block_of(c) || a[(r, c)].is_negligible(tol))
        })
    });

    let sub_resonance = witness(spec, conjugated_jets(ext_g, &nf.h, degree_bound(spec))?, GroupTag::SubResonance, tol);
    let resonance = match reduced {
        Some(r) => {
            let total = r.h_total.as_ref().ok_or(VerifyError::MissingTotal)?;
            Some(witness(spec, conjugated_jets(ext_g, total, degree_bound(spec))?, GroupTag::Resonance, tol))
        }
        None => None,
    };
    Ok(CentralizerReport { gamma_block_diagonal, sub_resonance, resonance })
}

/// Degree-`d` jets of `h_{g(x)} ∘ G_x ∘ h_x^{-1}`.
pub fn conjugated_jets<S: Scalar>(ext_g: &Extension<S>, h: &[PolyMap<S>], d: u32) -> Result<Vec<PolyMap<S>>, VerifyError> {
    (0..ext_g.base().points())
        .map(|x| {
            let gx = ext_g.base().f(x);
            let inner = ext_g.fiber(x).compose(&h[x].invert(d)?, d)?;
            Ok(h[gx].compose(&inner, d)?)
        })
        .collect()
}

/// Largest discrepancy between `H_{g(x)}(G_x(t))` and `Q_x(H_x(t))` over the
/// given samples, with `H` evaluated by invariance.
pub fn centralizer_pointwise(
    ev: &Evaluator<'_>,
    ext_g: &Extension<f64>,
    q: &[PolyMap<f64>],
    samples: &[(usize, Vec<f64>)],
) -> Result<f64, VerifyError> {
    let mut worst: f64 = 0.0;
    for (x, t) in samples {
        let gx = ext_g.base().f(*x);
        let gt = ext_g.fiber(*x).eval(t);
        let lhs = ev.eval_h(gx, &gt)?.value;
        let rhs = q[*x].eval(&ev.eval_h(*x, t)?.value);
        let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        worst = worst.max(norm(&diff));
    }
    Ok(worst)
}

/// Every term in a block-`i` component avoids the faster blocks `j < i`
/// (`s_j = 0`), which makes each fast flag space invariant.
pub fn check_flag_preservation<S: Scalar>(p: &PolyMap<S>, tol: f64) -> bool {
    p.terms().all(|(c, m, v)| {
        if v.is_negligible(tol) {
            return true;
        }
        let i = p.target().block_of(c);
        p.source().block_degrees(m)[..i].iter().all(|&s| s == 0)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearizationReport {
    pub single_block: bool,
    pub degree_one: bool,
    /// Every `P_x` equals the linear part of `F_x`.
    pub linear: bool,
}

impl LinearizationReport {
    pub fn verdict(&self) -> bool {
        self.single_block && self.degree_one && self.linear
    }
}

pub fn check_linearization<S: Scalar>(ext: &Extension<S>, nf: &NormalFormResult<S>, tol: f64) -> LinearizationReport {
    let single_block = nf.spec.ell() == 1;
    let degree_one = degree_bound(&nf.spec) == 1;
    let linear = nf.p.iter().enumerate().all(|(x, g)| {
        let lin = PolyMap::from_matrix(&nf.dims, &nf.dims, &ext.linear(x), g.map().cap()).expect("fiber shape");
        let mut diff = g.map().sub(&lin).expect("fiber shape");
        diff.prune(if S::EXACT { 0.0 } else { tol });
        diff.is_empty()
    });
    LinearizationReport { single_block, degree_one, linear }
}

//! Pointwise evaluation of the full coordinate change by invariance:
//! `H_x(t) = lim_k (P^k_x)^{-1}(H_{f^k x}(F^k_x(t)))`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::base::Extension;
use crate::graded::{PolyError, PolyMap};
use crate::normal_form::NormalFormResult;
use crate::spectrum::exp_of;
use crate::scalar::Rational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("invalid evaluator configuration: {0}")]
    Config(&'static str),
    #[error("point has norm {norm:e}, outside the sample radius {radius:e}")]
    OutsideRadius { norm: f64, radius: f64 },
    #[error("no convergence within {k_max} iterations (last increment {last_increment:e})")]
    NotConverged { k_max: usize, last_increment: f64 },
    #[error("iteration produced a non-finite value at step {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    /// Stop once successive iterates differ by less than this.
    pub tol: f64,
    pub k_max: usize,
    /// Largest admissible `|t|`; at most the extension's `sigma`.
    pub radius: f64,
}

impl EvalConfig {
    pub fn new(tol: f64, k_max: usize, radius: f64) -> Self {
        Self { tol, k_max, radius }
    }

    pub fn validate(&self, sigma: f64) -> Result<(), EvalError> {
        if !(self.tol > 0.0) {
            return Err(EvalError::Config("tol must be positive"));
        }
        if self.k_max == 0 {
            return Err(EvalError::Config("k_max must be at least 1"));
        }
        if !(self.radius > 0.0 && self.radius <= sigma) {
            return Err(EvalError::Config("radius must lie in (0, sigma]"));
        }
        Ok(())
    }

    /// Iterations a trajectory contracting at rate `xi` needs to fall from
    /// `radius` below `tol`: `log(tol / radius) / log(xi)`.
    pub fn sizing(&self, xi: f64) -> f64 {
        libm::log(self.tol / self.radius) / libm::log(xi)
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { tol: 1e-12, k_max: 200, radius: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub value: Vec<f64>,
    /// Last step taken; `value` is `v_{k+1}`. The final increments, as many
    /// as the cycle length of the starting point and at least two, are all
    /// below `tol`.
    pub k: usize,
    pub last_increment: f64,
    pub increments: Vec<f64>,
}

/// Least-squares fit of `log |H_x(r u) - H^N_x(r u)|` against `log r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactFit {
    pub samples: Vec<(f64, f64)>,
    /// `None` when fewer than two differences rise above the noise floor.
    pub slope: Option<f64>,
}

impl ContactFit {
    pub fn is_degenerate(&self) -> bool {
        self.slope.is_none()
    }
}

pub fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Per-step growth bound of the iterate increments:
/// `e^{-chi_1 + (N+1) chi_ell + (N+2) eps}`.
pub fn certified_rate(nf: &NormalFormResult<f64>) -> f64 {
    let spec = &nf.spec;
    let n = Rational::from_integer(nf.n.into());
    let one = Rational::from_integer(1.into());
    let e = -spec.chi()[0].clone()
        + (n.clone() + one.clone()) * spec.chi()[spec.ell() - 1].clone()
        + (n + one.clone() + one) * spec.epsilon().clone();
    exp_of(&e)
}

/// Geometric mean ratio of successive increments, from the largest increment
/// above `floor` to the last one, over a whole number of `period` steps.
/// The window is stretched forward to a period boundary when the sequence
/// allows it.
pub fn empirical_rate(increments: &[f64], floor: f64, period: usize) -> Option<f64> {
    let period = period.max(1);
    let kept: Vec<(usize, f64)> = increments.iter().copied().enumerate().filter(|&(_, v)| v > floor).collect();
    let &(i0, v0) = kept.iter().max_by(|a, b| a.1.total_cmp(&b.1))?;
    let &(i1, _) = kept.last()?;
    let span = i1 - i0;
    if span == 0 {
        return None;
    }
    let up = span.div_ceil(period) * period;
    let span = match increments.get(i0 + up) {
        Some(&v) if v > 0.0 => up,
        _ => span / period * period,
    };
    if span == 0 {
        return None;
    }
    Some(libm::pow(increments[i0 + span] / v0, 1.0 / span as f64))
}

/// Evaluates the coordinate change of a float-mode build.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    nf: &'a NormalFormResult<f64>,
    ext: &'a Extension<f64>,
    p_inv: Vec<PolyMap<f64>>,
    period: Vec<usize>,
    cfg: EvalConfig,
}

impl<'a> Evaluator<'a> {
    pub fn new(nf: &'a NormalFormResult<f64>, ext: &'a Extension<f64>, cfg: EvalConfig) -> Result<Self, EvalError> {
        cfg.validate(ext.sigma())?;
        let p_inv = nf
            .p
            .iter()
            .map(|g| {
                let tol = 1e-9 * (1.0 + g.map().max_abs());
                g.invert(&nf.spec, tol).map(|i| i.into_map())
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut period = vec![1; ext.base().points()];
        for c in ext.base().cycles() {
            for &x in c {
                period[x] = c.len();
            }
        }
        Ok(Self { nf, ext, p_inv, period, cfg })
    }

    /// Length of the base cycle through `x`.
    pub fn period(&self, x: usize) -> usize {
        self.period[x]
    }

    pub fn config(&self) -> &EvalConfig {
        &self.cfg
    }

    /// Degree-`N` jet `H^N_x(t)`.
    pub fn taylor(&self, x: usize, t: &[f64]) -> Vec<f64> {
        self.nf.h[x].eval(t)
    }

    /// `P_x^{-1}` applied pointwise.
    pub fn p_inverse(&self, x: usize, t: &[f64]) -> Vec<f64> {
        self.p_inv[x].eval(t)
    }

    pub fn eval_h(&self, x: usize, t: &[f64]) -> Result<EvalOutcome, EvalError> {
        let n0 = norm(t);
        if n0 > self.cfg.radius {
            return Err(EvalError::OutsideRadius { norm: n0, radius: self.cfg.radius });
        }
        let base = self.ext.base();
        let mut orbit = vec![x];
        let mut y = t.to_vec();
        let mut prev = self.taylor(x, t);
        let mut increments = Vec::new();
        let mut below = 0;
        for k in 0..self.cfg.k_max {
            let here = orbit[k];
            y = self.ext.fiber(here).eval(&y);
            let next = base.f(here);
            orbit.push(next);
            let mut w = self.taylor(next, &y);
            for j in (0..=k).rev() {
                w = self.p_inverse(orbit[j], &w);
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(EvalError::NonFinite(k + 1));
            }
            let inc = dist(&w, &prev);
            increments.push(inc);
            below = if inc < self.cfg.tol { below + 1 } else { 0 };
            if below >= self.period[x].max(2) {
                return Ok(EvalOutcome { value: w, k, last_increment: inc, increments });
            }
            prev = w;
        }
        Err(EvalError::NotConverged {
            k_max: self.cfg.k_max,
            last_increment: increments.last().copied().unwrap_or(f64::NAN),
        })
    }

    /// `|H_{f(x)}(F_x(t)) - P_x(H_x(t))|`.
    pub fn residual(&self, x: usize, t: &[f64]) -> Result<f64, EvalError> {
        let fx = self.ext.base().f(x);
        let ft = self.ext.fiber(x).eval(t);
        let lhs = self.eval_h(fx, &ft)?.value;
        let hx = self.eval_h(x, t)?.value;
        let rhs = self.nf.p[x].eval(&hx);
        Ok(dist(&lhs, &rhs))
    }

    /// Fits the contact order of `H_x` with its jet along direction `u`.
    /// Differences at or below `100 * tol` are treated as noise.
    pub fn order_of_contact(&self, x: usize, u: &[f64], radii: &[f64]) -> Result<ContactFit, EvalError> {
        let un = norm(u);
        if !(un > 0.0) {
            return Err(EvalError::Config("direction must be nonzero"));
        }
        let mut samples = Vec::with_capacity(radii.len());
        for &r in radii {
            let t: Vec<f64> = u.iter().map(|v| v * r / un).collect();
            let full = self.eval_h(x, &t)?.value;
            samples.push((r, dist(&full, &self.taylor(x, &t))));
        }
        let floor = 100.0 * self.cfg.tol;
        let pts: Vec<(f64, f64)> =
            samples.iter().filter(|(_, d)| *d > floor).map(|&(r, d)| (libm::log(r), libm::log(d))).collect();
        let slope = if pts.len() < 2 {
            None
        } else {
            let k = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            if sxx > 0.0 {
                Some(sxy / sxx)
            } else {
                None
            }
        };
        Ok(ContactFit { samples, slope })
    }
}

/// Point drawn uniformly from the closed ball of radius `r` in `R^m`.
pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, m: usize, r: f64) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let gn = norm(&g);
        if gn > 0.0 {
            let u: f64 = rng.random();
            let scale = r * libm::pow(u, 1.0 / m as f64) / gn;
            return g.into_iter().map(|v| v * scale).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::FiniteBase;
    use crate::graded::{GradedDims, Monomial};
    use crate::normal_form::{build_taylor, BuildOptions, LiftStrategy};
    use crate::scalar::rat;
    use crate::spectrum::SpectrumSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn worked(n: u32) -> (Extension<f64>, NormalFormResult<f64>) {
        let dims = GradedDims::new(vec![1, 1]).unwrap();
        let (a, b) = (libm::exp(-2.0), libm::exp(-1.0));
        let f = PolyMap::from_terms(
            dims.clone(),
            dims.clone(),
            2,
            [
                (0, Monomial::new(&[1, 0]), a),
                (0, Monomial::new(&[0, 2]), 1.0),
                (1, Monomial::new(&[0, 1]), b),
                (1, Monomial::new(&[1, 1]), 1.0),
            ],
        )
        .unwrap();
        let ext = Extension::new(FiniteBase::new(vec![0]).unwrap(), dims, vec![f], 0.25, 0.9).unwrap();
        let spec = SpectrumSpec::new(vec![rat(-2, 1), rat(-1, 1)], rat(1, 5)).unwrap();
        let nf = build_taylor(&ext, &spec, n, &rat(1, 1), &LiftStrategy::Complement, BuildOptions::default()).unwrap();
        (ext, nf)
    }

    #[test]
    fn zero_is_fixed_immediately() {
        let (ext, nf) = worked(2);
        let ev = Evaluator::new(&nf, &ext, EvalConfig::default()).unwrap();
        let out = ev.eval_h(0, &[0.0, 0.0]).unwrap();
        assert_eq!(out.value, vec![0.0, 0.0]);
        assert_eq!(out.k, 1);
        assert_eq!(out.increments, vec![0.0, 0.0]);
    }

    #[test]
    fn rate_is_measured_from_the_peak() {
        let inc = [1e-9, 1e-6, 1e-7, 1e-8, 1e-13];
        assert!((empirical_rate(&inc, 1e-12, 1).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(empirical_rate(&[1e-3], 0.0, 1), None);
        assert_eq!(empirical_rate(&[1e-3, 1e-2], 0.0, 1), None);
    }

    #[test]
    fn rate_spans_whole_periods() {
        let inc = [1e-8, 0.9e-8, 1e-12, 0.9e-12, 1e-16];
        assert!((empirical_rate(&inc, 1e-9, 2).unwrap() - 1e-2).abs() < 1e-12);
        assert!((empirical_rate(&inc[..4], 1e-13, 2).unwrap() - 1e-2).abs() < 1e-12);
        assert!((empirical_rate(&inc[..4], 1e-9, 1).unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(empirical_rate(&inc[..2], 1e-9, 2), None);
    }

    #[test]
    fn residual_is_at_stopping_precision() {
        let (ext, nf) = worked(2);
        let ev = Evaluator::new(&nf, &ext, EvalConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let t = sample_ball(&mut rng, 2, 0.05);
            assert!(ev.residual(0, &t).unwrap() <= 1e-11);
        }
    }

    #[test]
    fn contact_order_matches_jet_degree() {
        for n in [2u32, 3] {
            let (ext, nf) = worked(n);
            let ev = Evaluator::new(&nf, &ext, EvalConfig { radius: 0.25, ..EvalConfig::default() }).unwrap();
            let fit = ev.order_of_contact(0, &[1.0, 1.0], &[0.2, 0.1, 0.05, 0.025]).unwrap();
            let s = fit.slope.unwrap();
            assert!((s - f64::from(n + 1)).abs() < 0.5, "n = {n}, slope {s}");
        }
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(EvalConfig::new(0.0, 10, 0.1).validate(1.0).is_err());
        assert!(EvalConfig::new(1e-12, 0, 0.1).validate(1.0).is_err());
        assert!(EvalConfig::new(1e-12, 10, 2.0).validate(1.0).is_err());
        assert!(EvalConfig::default().validate(0.05).is_ok());
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            assert!(norm(&sample_ball(&mut rng, 5, 0.3)) <= 0.3);
        }
    }
}

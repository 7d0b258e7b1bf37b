//! validate, build, reduce, evaluate and verify one instance.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use subres_core::base::validate_extension;
use subres_core::evaluator::{certified_rate, empirical_rate, norm, sample_ball, EvalConfig, Evaluator};
use subres_core::graded::{GroupElement, GroupTag, PolyMap};
use subres_core::normal_form::{
    build_taylor, perturb_lift, reduce_polynomials, resonance_reduce, BuildOptions, LiftStrategy, NormalFormResult,
    ResonanceResult,
};
use subres_core::scalar::{Rational, Scalar};
use subres_core::spectrum::{check_narrowness, criticality, degree_bound, spectral_constants, ClassSet};
use subres_core::verify::{
    centralizer_pointwise, check_centralizer, check_flag_preservation, check_linearization,
    check_resonance_uniqueness, check_uniqueness, pinned_reproduces, TransitionWitness,
};

use crate::instance::{parse_instance, Coefficient, InstanceFile, LiftChoice, Mode, ParseError, Problem, RationalRecord};
use crate::report::{
    certificate_rows, lift_rows, tables, Bound, CentralizerSection, ConstantsSection, ContactRow, ContractionRow,
    DefectCheck, EvaluationSection, Failure, InstanceEcho, LinearizationSection, RateCheck, Report, ResonanceSection,
    Settings, TaylorSection, Tool, TransitionRow, TypeRow, UniquenessSection, ValidationSection, VerificationSection,
    BlockRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Constants,
    Validate,
    Build,
    Reduce,
    Eval,
    Verify,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Constants => "constants",
            Self::Validate => "validate",
            Self::Build => "build",
            Self::Reduce => "reduce",
            Self::Eval => "eval",
            Self::Verify => "verify",
            Self::All => "all",
        }
    }
}

/// Outcome class of a run, ordered by the stage that failed first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Validation,
    Build,
    Verification,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Self::Pass => 0,
            Self::Validation => 2,
            Self::Build => 3,
            Self::Verification => 4,
        }
    }
}

/// Exit code for unreadable or malformed input.
pub const PARSE_EXIT: u8 = 5;

/// Command-line values that take precedence over the instance options.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub lift: Option<LiftChoice>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub k_max: Option<usize>,
    pub samples: Option<usize>,
    pub radius: Option<f64>,
    pub force: bool,
    pub timings: bool,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub status: Status,
}

fn positive(v: f64, path: &str) -> Result<f64, ParseError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ParseError { path: path.into(), position: None, message: format!("expected a positive number, found {v}") })
    }
}

fn resolve(file: &InstanceFile, ov: &Overrides) -> Result<(Settings, u64), ParseError> {
    let o = &file.options;
    let sigma = file.sigma;
    let one = RationalRecord::from_rational(&Rational::from_integer(1.into()));
    let half = RationalRecord::from_rational(&Rational::new(1.into(), 2.into()));
    let lift_scale = o.lift_scale.clone().unwrap_or(one);
    lift_scale.to_rational("options.lift_scale")?;
    let perturbation_scale = o.perturbation_scale.clone().unwrap_or(half);
    perturbation_scale.to_rational("options.perturbation_scale")?;
    let radius = positive(ov.radius.or(o.radius).unwrap_or(0.05), "options.radius")?;
    if radius > sigma {
        return Err(ParseError {
            path: "options.radius".into(),
            position: None,
            message: format!("radius {radius} exceeds sigma = {sigma}"),
        });
    }
    let radii = match &o.radii {
        Some(r) => r.clone(),
        None => [0.8, 0.4, 0.2, 0.1].iter().map(|f| f * sigma).collect(),
    };
    for (i, r) in radii.iter().enumerate() {
        let path = format!("options.radii[{i}]");
        if positive(*r, &path)? > sigma {
            return Err(ParseError { path, position: None, message: format!("radius {r} exceeds sigma = {sigma}") });
        }
    }
    let k_max = ov.k_max.or(o.k_max).unwrap_or(200);
    if k_max == 0 {
        return Err(ParseError { path: "options.k_max".into(), position: None, message: "k_max must be at least 1".into() });
    }
    let build_tol = o.build_tol.unwrap_or(1e-9);
    if !(build_tol.is_finite() && build_tol >= 0.0) {
        return Err(ParseError { path: "options.build_tol".into(), position: None, message: "expected a non-negative number".into() });
    }
    let settings = Settings {
        mode: ov.mode.unwrap_or(file.mode()),
        lift: ov.lift.or(o.lift).unwrap_or(LiftChoice::Complement),
        lift_scale,
        tol: positive(ov.tol.or(o.tol).unwrap_or(1e-12), "options.tol")?,
        k_max,
        samples: ov.samples.or(o.samples).unwrap_or(1000),
        radius,
        radii,
        perturbations: o.perturbations.unwrap_or(20),
        perturbation_scale,
        centralizer_samples: o.centralizer_samples.unwrap_or(100),
        build_tol,
        force: ov.force || o.force.unwrap_or(false),
    };
    Ok((settings, ov.seed.or(o.seed).unwrap_or(0)))
}

/// Runs `command` on the instance text.
pub fn run(command: Command, text: &str, ov: &Overrides) -> Result<Outcome, ParseError> {
    let file = parse_instance(text)?;
    let (settings, seed) = resolve(&file, ov)?;
    let digest: String = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    let echo = InstanceEcho {
        name: file.name.clone(),
        digest,
        mode: settings.mode,
        p: file.base.p,
        permutation: file.base.permutation.clone(),
        dims: file.dims.clone(),
        chi: file.spectrum.chi.clone(),
        epsilon: file.spectrum.epsilon.clone(),
        n: file.regularity.n,
        alpha: file.regularity.alpha.clone(),
        sigma: file.sigma,
        xi: file.xi,
        commuting: file.commuting.is_some(),
    };
    let report = Report {
        tool: Tool { name: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION") },
        command: command.name(),
        instance: echo,
        seed,
        options: settings.clone(),
        constants: None,
        validation: None,
        taylor: None,
        resonance: None,
        evaluation: None,
        verification: None,
        verdicts: BTreeMap::new(),
        failure: None,
        timings: ov.timings.then(BTreeMap::new),
    };
    Ok(match settings.mode {
        Mode::Rational => Driver::<Rational>::new(file.problem()?, settings, seed, report).run(command),
        Mode::Float => Driver::<f64>::new(file.problem()?, settings, seed, report).run(command),
    })
}

struct Driver<S> {
    problem: Problem<S>,
    settings: Settings,
    seed: u64,
    report: Report,
    status: Status,
}

fn max_defect<S: Scalar>(diffs: impl IntoIterator<Item = PolyMap<S>>, tol: f64) -> DefectCheck {
    let mut worst = 0.0;
    let mut point = None;
    let mut empty = true;
    for (x, d) in diffs.into_iter().enumerate() {
        let m = d.max_abs();
        empty &= d.is_empty();
        if m > worst {
            worst = m;
            point = Some(x);
        }
    }
    let verdict = if S::EXACT { empty } else { worst <= tol };
    DefectCheck { worst, point, verdict }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d)
}

fn worst_entry<S>(w: &TransitionWitness<S>) -> Option<TypeRow> {
    w.entries
        .iter()
        .filter(|e| !e.in_class)
        .filter_map(|e| e.worst.as_ref())
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(ty, m)| TypeRow::new(ty, *m))
}

impl<S: Coefficient> Driver<S> {
    fn new(problem: Problem<S>, settings: Settings, seed: u64, report: Report) -> Self {
        Self { problem, settings, seed, report, status: Status::Pass }
    }

    fn fail(&mut self, s: Status) {
        if self.status == Status::Pass {
            self.status = s;
        }
    }

    fn abort(&mut self, stage: &'static str, s: Status, message: String) {
        if self.report.failure.is_none() {
            self.report.failure = Some(Failure { stage, message });
        }
        self.report.verdicts.insert(stage, false);
        self.fail(s);
    }

    fn timed<T>(&mut self, stage: &'static str, f: impl FnOnce(&mut Self) -> T) -> T {
        let start = Instant::now();
        let out = f(self);
        if let Some(t) = self.report.timings.as_mut() {
            t.insert(stage, start.elapsed().as_secs_f64());
        }
        out
    }

    fn class_tol(&self) -> f64 {
        if S::EXACT {
            0.0
        } else {
            self.settings.build_tol
        }
    }

    fn opts(&self) -> BuildOptions {
        BuildOptions { force: self.settings.force, tol: self.settings.build_tol }
    }

    fn lift(&self) -> LiftStrategy<S> {
        match self.settings.lift {
            LiftChoice::Complement => LiftStrategy::Complement,
            LiftChoice::Seeded => LiftStrategy::Seeded {
                seed: self.seed,
                scale: self.settings.lift_scale.to_rational("").expect("checked when resolving"),
            },
        }
    }

    fn finish(mut self) -> Outcome {
        let overall = self.status == Status::Pass && self.report.verdicts.values().all(|&v| v);
        self.report.verdicts.insert("overall", overall);
        Outcome { report: self.report, status: self.status }
    }

    fn run(mut self, command: Command) -> Outcome {
        let ok = self.timed("constants", Self::constants);
        if command == Command::Constants {
            if !ok {
                self.fail(Status::Validation);
            }
            return self.finish();
        }
        if command == Command::Reduce {
            self.timed("reduce", Self::reduce_direct);
            return self.finish();
        }
        let ok = self.timed("validation", Self::validate);
        if !ok {
            self.fail(Status::Validation);
            if command == Command::Validate || !self.settings.force {
                return self.finish();
            }
        }
        if command == Command::Validate {
            return self.finish();
        }
        let Some(nf) = self.timed("taylor", Self::taylor) else { return self.finish() };
        let Some(reduced) = self.timed("resonance", |d| d.resonance(&nf)) else { return self.finish() };
        if matches!(command, Command::Eval | Command::All) {
            self.timed("evaluation", |d| d.evaluate(&nf));
        }
        if matches!(command, Command::Verify | Command::All) {
            self.timed("verification", |d| d.verify(&nf, &reduced));
        }
        self.finish()
    }

    fn constants(&mut self) -> bool {
        let spec = &self.problem.spec;
        let k = spectral_constants(spec);
        let narrow = check_narrowness(spec, &k);
        let crit = criticality(spec, self.problem.n, &self.problem.alpha);
        let (nu, bound, crit_ok, crit_err) = match &crit {
            Ok(c) => {
                let err = c.require(spec).err().map(|e| e.to_string());
                (Some(&c.nu), Some(&c.epsilon_bound), c.ok, err)
            }
            Err(e) => (None, None, false, Some(e.to_string())),
        };
        let verdict = narrow && crit_ok;
        self.report.constants = Some(ConstantsSection {
            d: k.d,
            lambda_tilde: RationalRecord::from_rational(&k.lambda_tilde),
            lambda: RationalRecord::from_rational(&k.lambda),
            mu: k.mu.as_ref().map(RationalRecord::from_rational),
            epsilon0: RationalRecord::from_rational(&k.epsilon0),
            epsilon: RationalRecord::from_rational(spec.epsilon()),
            narrow,
            nu: nu.map(RationalRecord::from_rational),
            criticality_bound: bound.map(RationalRecord::from_rational),
            criticality: crit_ok,
            criticality_error: crit_err,
            verdict,
        });
        self.report.verdicts.insert("constants", verdict);
        verdict
    }

    fn validate(&mut self) -> bool {
        let p = &self.problem;
        let v = validate_extension(&p.ext, &p.spec, p.n, &p.alpha);
        let verdict = v.is_ok();
        self.report.validation = Some(ValidationSection {
            blocks: v
                .blocks
                .iter()
                .map(|b| BlockRow {
                    point: b.point,
                    block: b.block,
                    sigma_min: b.sigma_min,
                    sigma_max: b.sigma_max,
                    lower: b.lower,
                    upper: b.upper,
                })
                .collect(),
            contraction: v
                .contraction
                .iter()
                .map(|c| ContractionRow {
                    point: c.point,
                    coefficient_bound: c.coefficient_bound,
                    sampled_ratio: c.sampled_ratio,
                })
                .collect(),
            failures: v.failures.iter().map(ToString::to_string).collect(),
            verdict,
        });
        self.report.verdicts.insert("validation", verdict);
        verdict
    }

    fn taylor(&mut self) -> Option<NormalFormResult<S>> {
        let p = &self.problem;
        let nf = match build_taylor(&p.ext, &p.spec, p.n, &p.alpha, &self.lift(), self.opts()) {
            Ok(nf) => nf,
            Err(e) => {
                self.abort("taylor", Status::Build, e.to_string());
                return None;
            }
        };
        let base = p.ext.base();
        let diffs = (0..base.points()).map(|x| {
            let lhs = nf.h[base.f(x)].compose(p.ext.fiber(x), nf.n).expect("common fiber");
            let rhs = nf.p[x].map().compose(&nf.h[x], nf.n).expect("common fiber");
            lhs.sub(&rhs).expect("common fiber")
        });
        let conjugacy = max_defect(diffs, self.settings.build_tol);
        let tol = self.class_tol();
        let p_sub_resonance = nf.p.iter().all(|g| g.map().is_in_class(&p.spec, ClassSet::SUB_RESONANCE, tol));
        let p_degree_at_most_d = nf.p.iter().all(|g| g.map().degree() <= nf.d);
        let verdict = conjugacy.verdict && p_sub_resonance && p_degree_at_most_d;
        self.report.taylor = Some(TaylorSection {
            n: nf.n,
            d: nf.d,
            lift: self.settings.lift,
            h: tables(&nf.h),
            p: tables(nf.p.iter().map(GroupElement::map)),
            lifts: lift_rows(&nf.lifts),
            certificates: certificate_rows(&nf.certificates),
            certified: nf.certified,
            dropped_residue: nf.dropped_residue,
            conjugacy,
            p_sub_resonance,
            p_degree_at_most_d,
            verdict,
        });
        self.report.verdicts.insert("taylor", verdict);
        if !verdict {
            self.fail(Status::Build);
        }
        Some(nf)
    }

    fn resonance_section(&mut self, p: &[GroupElement<S>], r: &ResonanceResult<S>, input_ok: bool) -> bool {
        let spec = &self.problem.spec;
        let base = self.problem.ext.base();
        let d = degree_bound(spec);
        let diffs = (0..base.points()).map(|x| {
            let lhs = r.h_prime[base.f(x)].map().compose(p[x].map(), d).expect("common fiber");
            let rhs = r.p_tilde[x].map().compose(r.h_prime[x].map(), d).expect("common fiber");
            lhs.sub(&rhs).expect("common fiber")
        });
        let conjugacy = max_defect(diffs, self.settings.build_tol);
        let tol = self.class_tol();
        let p_tilde_resonance = r.p_tilde.iter().all(|g| g.map().is_in_class(spec, ClassSet::RESONANCE, tol));
        let verdict = input_ok && conjugacy.verdict && p_tilde_resonance;
        self.report.resonance = Some(ResonanceSection {
            input_sub_resonance: input_ok,
            h_prime: tables(r.h_prime.iter().map(GroupElement::map)),
            p_tilde: tables(r.p_tilde.iter().map(GroupElement::map)),
            lifts: lift_rows(&r.lifts),
            certificates: certificate_rows(&r.certificates),
            conjugacy,
            p_tilde_resonance,
            verdict,
        });
        self.report.verdicts.insert("resonance", verdict);
        verdict
    }

    fn resonance(&mut self, nf: &NormalFormResult<S>) -> Option<ResonanceResult<S>> {
        match resonance_reduce(nf, &self.lift(), self.opts()) {
            Ok(r) => {
                if !self.resonance_section(&nf.p, &r, true) {
                    self.fail(Status::Build);
                }
                Some(r)
            }
            Err(e) => {
                self.abort("resonance", Status::Build, e.to_string());
                None
            }
        }
    }

    /// Treats the fiber polynomials as sub-resonance normal forms and
    /// reduces them directly.
    fn reduce_direct(&mut self) {
        let spec = self.problem.spec.clone();
        let d = degree_bound(&spec);
        let tol = self.class_tol();
        let elements: Result<Vec<_>, _> = self
            .problem
            .ext
            .fibers()
            .iter()
            .map(|f| {
                if f.degree() > d {
                    return Err(format!("polynomial of degree {} exceeds d = {d}", f.degree()));
                }
                GroupElement::new(f.with_cap(d), &spec, GroupTag::SubResonance, tol).map_err(|e| e.to_string())
            })
            .collect();
        let p = match elements {
            Ok(p) if self.problem.ext.constant_terms().is_empty() => p,
            Ok(_) => {
                self.abort("resonance", Status::Validation, "constant term in the input polynomials".into());
                return;
            }
            Err(e) => {
                self.abort("resonance", Status::Validation, format!("input is not sub-resonance: {e}"));
                return;
            }
        };
        match reduce_polynomials(self.problem.ext.base(), &spec, &p, &self.lift(), self.opts()) {
            Ok(r) => {
                if !self.resonance_section(&p, &r, true) {
                    self.fail(Status::Build);
                }
            }
            Err(e) => self.abort("resonance", Status::Build, e.to_string()),
        }
    }

    fn evaluate(&mut self, nf: &NormalFormResult<S>) {
        let nf64 = nf.to_f64();
        let ext64 = self.problem.ext.to_f64();
        let st = &self.settings;
        let cfg = EvalConfig::new(st.tol, st.k_max, st.radius);
        let ev = match Evaluator::new(&nf64, &ext64, cfg) {
            Ok(ev) => ev,
            Err(e) => {
                self.abort("evaluation", Status::Verification, e.to_string());
                return;
            }
        };
        let wide_radius = st.radii.iter().copied().fold(st.radius, f64::max);
        let wide = Evaluator::new(&nf64, &ext64, EvalConfig::new(st.tol, st.k_max, wide_radius))
            .expect("radii checked against sigma");
        let m = ext64.dims().total();
        let base = ext64.base();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let bound = 10.0 * st.tol;
        let floor = 100.0 * st.tol;
        let (mut res_max, mut res_sum, mut step_max, mut step_sum, mut count) = (0.0f64, 0.0, 0.0f64, 0.0, 0usize);
        let mut max_iterations = 0;
        let mut worst_rate: Option<f64> = None;
        let mut errors = Vec::new();
        for x in 0..base.points() {
            let fx = base.f(x);
            for _ in 0..st.samples {
                let t = sample_ball(&mut rng, m, st.radius);
                let at = |x: usize, t: &[f64]| ev.eval_h(x, t).map_err(|e| format!("point {x}: {e}"));
                let (hx, hfx) = match at(x, &t).and_then(|hx| Ok((hx, at(fx, &ext64.fiber(x).eval(&t))?))) {
                    Ok(v) => v,
                    Err(e) => {
                        if errors.len() < 10 {
                            errors.push(e);
                        }
                        continue;
                    }
                };
                let residual = dist(&hfx.value, &nf64.p[x].eval(&hx.value));
                let step = dist(&hx.value, &ev.p_inverse(x, &hfx.value));
                res_max = res_max.max(residual);
                res_sum += residual;
                step_max = step_max.max(step);
                step_sum += step;
                count += 1;
                max_iterations = max_iterations.max(hx.k).max(hfx.k);
                if let Some(r) = empirical_rate(&hx.increments, floor, ev.period(x)) {
                    worst_rate = Some(worst_rate.map_or(r, |w| w.max(r)));
                }
            }
        }
        let mean = |s: f64| if count > 0 { s / count as f64 } else { 0.0 };
        let residual = Bound { max: res_max, mean: Some(mean(res_sum)), bound, verdict: errors.is_empty() && res_max <= bound };
        let one_step = Bound { max: step_max, mean: Some(mean(step_sum)), bound, verdict: errors.is_empty() && step_max <= bound };

        let expected = nf.n + 1;
        let mut contact = Vec::new();
        for x in 0..base.points() {
            let u = sample_ball(&mut rng, m, 1.0);
            let un = norm(&u);
            let u: Vec<f64> = u.iter().map(|v| v / un).collect();
            match wide.order_of_contact(x, &u, &st.radii) {
                Ok(fit) => {
                    let degenerate = fit.is_degenerate();
                    let verdict = fit.slope.is_none_or(|s| s >= f64::from(expected) - 0.5);
                    contact.push(ContactRow {
                        point: x,
                        direction: u,
                        samples: fit.samples.iter().map(|&(r, d)| [r, d]).collect(),
                        slope: fit.slope,
                        expected,
                        degenerate,
                        verdict,
                    });
                }
                Err(e) => errors.push(format!("contact at point {x}: {e}")),
            }
        }
        let certified = certified_rate(&nf64);
        let allowed = 2.0 * certified;
        let rate = RateCheck { certified, allowed, worst: worst_rate, verdict: worst_rate.is_none_or(|w| w <= allowed) };
        let verdict = errors.is_empty()
            && residual.verdict
            && one_step.verdict
            && contact.iter().all(|c| c.verdict)
            && rate.verdict;
        self.report.evaluation = Some(EvaluationSection {
            generator: "ChaCha8",
            seed: self.seed,
            tol: st.tol,
            k_max: st.k_max,
            radius: st.radius,
            sizing: cfg.sizing(ext64.xi()),
            samples_per_point: st.samples,
            max_iterations,
            residual,
            one_step,
            contact,
            rate,
            errors,
            verdict,
        });
        self.report.verdicts.insert("evaluation", verdict);
        if !verdict {
            self.fail(Status::Verification);
        }
    }

    fn verify(&mut self, nf: &NormalFormResult<S>, reduced: &ResonanceResult<S>) {
        let tol = self.class_tol();
        let opts = self.opts();
        let ext = &self.problem.ext;
        let spec = &self.problem.spec;
        let scale = self.settings.perturbation_scale.to_rational("").expect("checked when resolving");
        let mut transitions = Vec::new();
        let mut first = None;
        let mut errors = Vec::new();
        for i in 0..self.settings.perturbations {
            let seed = self.seed.wrapping_add(i as u64 + 1);
            let outcome = perturb_lift(ext, nf, seed, &scale, opts)
                .map_err(|e| e.to_string())
                .and_then(|other| {
                    let w = check_uniqueness(&other, nf, tol).map_err(|e| e.to_string())?;
                    let pinned = pinned_reproduces(ext, &other, opts).map_err(|e| e.to_string())?;
                    Ok((other, w, pinned))
                });
            match outcome {
                Ok((other, w, pinned)) => {
                    let in_class = w.verdict();
                    let g = (i == 0 || !in_class).then(|| tables(w.entries.iter().map(|e| &e.g)));
                    transitions.push(TransitionRow {
                        seed,
                        identity: w.is_identity(tol),
                        in_class,
                        pinned_reproduces: pinned,
                        worst: worst_entry(&w),
                        g,
                    });
                    if first.is_none() {
                        first = Some(other);
                    }
                }
                Err(e) => errors.push(format!("perturbation seed {seed}: {e}")),
            }
        }
        let other = first.unwrap_or_else(|| nf.clone());
        let resonance_seed = LiftStrategy::Seeded { seed: self.seed, scale: scale.clone() };
        let resonance_in_class = resonance_reduce(&other, &resonance_seed, opts)
            .map_err(|e| e.to_string())
            .and_then(|r| check_resonance_uniqueness(spec, reduced, &r, tol).map_err(|e| e.to_string()))
            .map(|w| w.verdict())
            .unwrap_or_else(|e| {
                errors.push(format!("resonance uniqueness: {e}"));
                false
            });
        let uniqueness_ok = errors.is_empty()
            && resonance_in_class
            && transitions.iter().all(|t| t.in_class && t.pinned_reproduces);
        let uniqueness = UniquenessSection {
            perturbations: self.settings.perturbations,
            scale: RationalRecord::from_rational(&scale),
            transitions,
            resonance_in_class,
            verdict: uniqueness_ok,
        };
        let flag_preservation = nf
            .p
            .iter()
            .chain(&reduced.p_tilde)
            .all(|g| check_flag_preservation(g.map(), tol));
        let linearization = (spec.ell() == 1).then(|| {
            let l = check_linearization(ext, nf, tol);
            LinearizationSection {
                single_block: l.single_block,
                degree_one: l.degree_one,
                linear: l.linear,
                verdict: l.verdict(),
            }
        });
        let centralizer = self.problem.commuting.as_ref().map(|g| {
            let regularity = "not applicable: polynomial fiber data";
            match check_centralizer(ext, nf, &g.ext, g.n, &g.alpha, Some(reduced), tol) {
                Err(e) => CentralizerSection {
                    commutes: false,
                    error: Some(e.to_string()),
                    gamma_block_diagonal: None,
                    q: None,
                    q_sub_resonance: None,
                    q_tilde: None,
                    q_tilde_resonance: None,
                    pointwise: None,
                    regularity,
                    verdict: false,
                },
                Ok(rep) => {
                    let q: Vec<PolyMap<S>> = rep.sub_resonance.entries.iter().map(|e| e.g.clone()).collect();
                    let pointwise = (self.settings.centralizer_samples > 0).then(|| {
                        centralizer_check(nf, ext, &g.ext, &q, &self.settings, self.seed)
                    });
                    let q_tilde_resonance = rep.resonance.as_ref().map(TransitionWitness::verdict);
                    let verdict = rep.verdict() && pointwise.as_ref().is_none_or(|b| b.verdict);
                    CentralizerSection {
                        commutes: true,
                        error: None,
                        gamma_block_diagonal: Some(rep.gamma_block_diagonal),
                        q: Some(tables(&q)),
                        q_sub_resonance: Some(rep.sub_resonance.verdict()),
                        q_tilde: rep.resonance.as_ref().map(|w| tables(w.entries.iter().map(|e| &e.g))),
                        q_tilde_resonance,
                        pointwise,
                        regularity,
                        verdict,
                    }
                }
            }
        });
        let verdict = uniqueness_ok
            && flag_preservation
            && linearization.as_ref().is_none_or(|l| l.verdict)
            && centralizer.as_ref().is_none_or(|c| c.verdict);
        let commutation_error = centralizer.as_ref().and_then(|c| c.error.clone());
        self.report.verification = Some(VerificationSection {
            uniqueness,
            flag_preservation,
            linearization,
            centralizer,
            verdict,
        });
        self.report.verdicts.insert("verification", verdict);
        if let Some(e) = commutation_error {
            self.report.failure.get_or_insert(Failure { stage: "verification", message: format!("commutation: {e}") });
        } else if let Some(e) = errors.first() {
            self.report.failure.get_or_insert(Failure { stage: "verification", message: e.clone() });
        }
        if !verdict {
            self.fail(Status::Verification);
        }
    }
}

/// Compares the jet route for `Q_x` with pointwise evaluation of
/// `H_{g(x)} ∘ G_x` against `Q_x ∘ H_x`.
fn centralizer_check<S: Scalar>(
    nf: &NormalFormResult<S>,
    ext: &subres_core::base::Extension<S>,
    g: &subres_core::base::Extension<S>,
    q: &[PolyMap<S>],
    st: &Settings,
    seed: u64,
) -> Bound {
    let nf64 = nf.to_f64();
    let ext64 = ext.to_f64();
    let g64 = g.to_f64();
    let q64: Vec<PolyMap<f64>> = q.iter().map(PolyMap::to_f64).collect();
    let bound = 10.0 * st.tol;
    let ev = match Evaluator::new(&nf64, &ext64, EvalConfig::new(st.tol, st.k_max, st.radius)) {
        Ok(ev) => ev,
        Err(_) => return Bound { max: f64::INFINITY, mean: None, bound, verdict: false },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let m = ext64.dims().total();
    let mut samples = Vec::new();
    for x in 0..ext64.base().points() {
        for _ in 0..st.centralizer_samples {
            samples.push((x, sample_ball(&mut rng, m, st.radius)));
        }
    }
    match centralizer_pointwise(&ev, &g64, &q64, &samples) {
        Ok(max) => Bound { max, mean: None, bound, verdict: max <= bound },
        Err(_) => Bound { max: f64::INFINITY, mean: None, bound, verdict: false },
    }
}

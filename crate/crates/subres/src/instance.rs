//! Instance files.
//!
//! An instance is a JSON document describing the spectrum, the finite base,
//! the fiber polynomials of the extension and optionally a second extension
//! expected to commute with it. Rationals are written `{"num": n, "den": d}`
//! and polynomial terms as records
//! `{point, target_coordinate, exponents, numerator, denominator}` or
//! `{point, target_coordinate, exponents, float}`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Number;

use subres_core::base::{Extension, FiniteBase};
use subres_core::graded::{GradedDims, Monomial, PolyMap};
use subres_core::scalar::{Rational, Scalar};
use subres_core::spectrum::SpectrumSpec;

/// Input that could not be turned into an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// JSON path of the offending value, e.g. `fibers[3].exponents`.
    pub path: String,
    /// 1-based line and column, when the JSON reader knows them.
    pub position: Option<(usize, usize)>,
    pub message: String,
}

impl ParseError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), position: None, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((line, col)) = self.position {
            write!(f, "line {line}, column {col}: ")?;
        }
        if !self.path.is_empty() && self.path != "." {
            write!(f, "at `{}`: ", self.path)?;
        }
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalRecord {
    pub num: Number,
    pub den: Number,
}

impl RationalRecord {
    pub fn from_rational(r: &Rational) -> Self {
        Self { num: big_number(&r.numer().to_string()), den: big_number(&r.denom().to_string()) }
    }

    pub fn to_rational(&self, path: &str) -> Result<Rational, ParseError> {
        ratio(&self.num, &self.den, path)
    }
}

fn big_number(digits: &str) -> Number {
    Number::from_str(digits).expect("integer digits form a JSON number")
}

fn integer(n: &Number, path: &str) -> Result<String, ParseError> {
    let s = n.to_string();
    let body = s.strip_prefix('-').unwrap_or(&s);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseError::at(path, format!("expected an integer, found {s}")));
    }
    Ok(s)
}

fn ratio(num: &Number, den: &Number, path: &str) -> Result<Rational, ParseError> {
    let n = integer(num, path)?;
    let d = integer(den, path)?;
    if d.trim_start_matches('-').trim_start_matches('0').is_empty() {
        return Err(ParseError::at(path, "zero denominator"));
    }
    Rational::from_str(&format!("{n}/{d}")).map_err(|e| ParseError::at(path, e.to_string()))
}

/// One monomial term of a fiber polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<usize>,
    pub target_coordinate: usize,
    pub exponents: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerator: Option<Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denominator: Option<Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub float: Option<f64>,
}

/// Scalars that can be read from and written to term records.
pub trait Coefficient: Scalar {
    fn read(rec: &TermRecord, path: &str) -> Result<Self, ParseError>;
    fn write(&self, rec: &mut TermRecord);
}

fn exact(rec: &TermRecord, path: &str) -> Result<Option<Rational>, ParseError> {
    match (&rec.numerator, &rec.denominator, rec.float) {
        (Some(_), _, Some(_)) | (None, Some(_), Some(_)) => {
            Err(ParseError::at(path, "give either numerator/denominator or float, not both"))
        }
        (Some(n), d, None) => {
            let one = Number::from(1u8);
            Ok(Some(ratio(n, d.as_ref().unwrap_or(&one), path)?))
        }
        (None, Some(_), None) => Err(ParseError::at(path, "denominator without numerator")),
        (None, None, Some(_)) => Ok(None),
        (None, None, None) => Err(ParseError::at(path, "missing coefficient")),
    }
}

impl Coefficient for Rational {
    fn read(rec: &TermRecord, path: &str) -> Result<Self, ParseError> {
        exact(rec, path)?.ok_or_else(|| ParseError::at(path, "float coefficient in rational mode"))
    }

    fn write(&self, rec: &mut TermRecord) {
        let r = RationalRecord::from_rational(self);
        rec.numerator = Some(r.num);
        rec.denominator = Some(r.den);
    }
}

impl Coefficient for f64 {
    fn read(rec: &TermRecord, path: &str) -> Result<Self, ParseError> {
        let v = match exact(rec, path)? {
            Some(r) => f64::from_rational(&r),
            None => rec.float.expect("checked by exact"),
        };
        if !v.is_finite() {
            return Err(ParseError::at(path, "coefficient is not finite"));
        }
        Ok(v)
    }

    fn write(&self, rec: &mut TermRecord) {
        rec.float = Some(*self);
    }
}

/// Term records of `p`, in the map's monomial order.
pub fn poly_records<S: Coefficient>(p: &PolyMap<S>) -> Vec<TermRecord> {
    p.terms()
        .map(|(c, m, v)| {
            let mut rec = TermRecord {
                point: None,
                target_coordinate: c,
                exponents: m.exps().to_vec(),
                numerator: None,
                denominator: None,
                float: None,
            };
            v.write(&mut rec);
            rec
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumRecord {
    pub chi: Vec<RationalRecord>,
    pub epsilon: RationalRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityRecord {
    #[serde(rename = "N")]
    pub n: u32,
    pub alpha: RationalRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseRecord {
    pub p: usize,
    pub permutation: Vec<usize>,
}

/// A second extension over the same bundle, checked for commutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutingRecord {
    pub base: BaseRecord,
    pub regularity: RegularityRecord,
    #[serde(default)]
    pub sigma: Option<f64>,
    pub xi: f64,
    pub fibers: Vec<TermRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LiftChoice {
    /// Zero sub-resonance component.
    Complement,
    /// Seeded random sub-resonance component.
    Seeded,
}

/// Run options; every field may be overridden on the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsRecord {
    pub mode: Option<Mode>,
    pub lift: Option<LiftChoice>,
    pub seed: Option<u64>,
    pub lift_scale: Option<RationalRecord>,
    pub tol: Option<f64>,
    pub k_max: Option<usize>,
    pub samples: Option<usize>,
    pub radius: Option<f64>,
    pub radii: Option<Vec<f64>>,
    pub perturbations: Option<usize>,
    pub perturbation_scale: Option<RationalRecord>,
    pub centralizer_samples: Option<usize>,
    pub build_tol: Option<f64>,
    pub force: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default)]
    pub name: Option<String>,
    pub spectrum: SpectrumRecord,
    pub regularity: RegularityRecord,
    pub base: BaseRecord,
    pub dims: Vec<usize>,
    pub sigma: f64,
    pub xi: f64,
    pub fibers: Vec<TermRecord>,
    #[serde(default)]
    pub commuting: Option<CommutingRecord>,
    #[serde(default)]
    pub options: OptionsRecord,
}

/// Reads an instance, reporting the line, column and path of the first
/// problem.
pub fn parse_instance(text: &str) -> Result<InstanceFile, ParseError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let file: InstanceFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ParseError { path, position: Some((inner.line(), inner.column())), message: inner.to_string() }
    })?;
    de.end().map_err(|e| ParseError { path: String::new(), position: Some((e.line(), e.column())), message: e.to_string() })?;
    Ok(file)
}

/// Typed contents of an instance in one scalar mode.
#[derive(Debug, Clone)]
pub struct Problem<S> {
    pub spec: SpectrumSpec,
    pub n: u32,
    pub alpha: Rational,
    pub ext: Extension<S>,
    pub commuting: Option<Commuting<S>>,
}

#[derive(Debug, Clone)]
pub struct Commuting<S> {
    pub ext: Extension<S>,
    pub n: u32,
    pub alpha: Rational,
}

fn base(rec: &BaseRecord, path: &str) -> Result<FiniteBase, ParseError> {
    if rec.permutation.len() != rec.p {
        return Err(ParseError::at(
            format!("{path}.permutation"),
            format!("expected {} entries, found {}", rec.p, rec.permutation.len()),
        ));
    }
    FiniteBase::new(rec.permutation.clone()).map_err(|e| ParseError::at(format!("{path}.permutation"), e.to_string()))
}

fn fibers<S: Coefficient>(
    records: &[TermRecord],
    points: usize,
    dims: &GradedDims,
    path: &str,
) -> Result<(Vec<PolyMap<S>>, Vec<(usize, usize)>), ParseError> {
    let m = dims.total();
    let cap = records.iter().map(|r| r.exponents.iter().map(|&e| u32::from(e)).sum::<u32>()).max().unwrap_or(1).max(1);
    let mut maps: Vec<PolyMap<S>> = (0..points).map(|_| PolyMap::zero(dims.clone(), dims.clone(), cap)).collect();
    let mut constants = BTreeSet::new();
    let mut seen = BTreeSet::new();
    for (i, rec) in records.iter().enumerate() {
        let here = format!("{path}[{i}]");
        let point = rec.point.ok_or_else(|| ParseError::at(&here, "missing point"))?;
        if point >= points {
            return Err(ParseError::at(format!("{here}.point"), format!("point {point} outside the base of size {points}")));
        }
        if rec.target_coordinate >= m {
            return Err(ParseError::at(
                format!("{here}.target_coordinate"),
                format!("coordinate {} outside the fiber of dimension {m}", rec.target_coordinate),
            ));
        }
        if rec.exponents.len() != m {
            return Err(ParseError::at(
                format!("{here}.exponents"),
                format!("expected {m} exponents, found {}", rec.exponents.len()),
            ));
        }
        if !seen.insert((point, rec.target_coordinate, rec.exponents.clone())) {
            return Err(ParseError::at(&here, "duplicate term"));
        }
        let value = S::read(rec, &here)?;
        if rec.exponents.iter().all(|&e| e == 0) {
            if !value.is_zero() {
                constants.insert((point, rec.target_coordinate));
            }
            continue;
        }
        maps[point]
            .add_term(rec.target_coordinate, Monomial::new(&rec.exponents), value)
            .map_err(|e| ParseError::at(&here, e.to_string()))?;
    }
    Ok((maps, constants.into_iter().collect()))
}

impl InstanceFile {
    pub fn mode(&self) -> Mode {
        self.options.mode.unwrap_or(Mode::Rational)
    }

    pub fn spectrum(&self) -> Result<SpectrumSpec, ParseError> {
        let chi = self
            .spectrum
            .chi
            .iter()
            .enumerate()
            .map(|(i, r)| r.to_rational(&format!("spectrum.chi[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let eps = self.spectrum.epsilon.to_rational("spectrum.epsilon")?;
        SpectrumSpec::new(chi, eps).map_err(|e| ParseError::at("spectrum", e.to_string()))
    }

    pub fn problem<S: Coefficient>(&self) -> Result<Problem<S>, ParseError> {
        let spec = self.spectrum()?;
        let alpha = self.regularity.alpha.to_rational("regularity.alpha")?;
        let dims = GradedDims::new(self.dims.clone()).map_err(|e| ParseError::at("dims", e.to_string()))?;
        let b = base(&self.base, "base")?;
        let (maps, constants) = fibers::<S>(&self.fibers, b.points(), &dims, "fibers")?;
        let ext = Extension::new(b, dims.clone(), maps, self.sigma, self.xi)
            .map_err(|e| ParseError::at("", e.to_string()))?
            .with_constant_terms(constants);
        let commuting = match &self.commuting {
            None => None,
            Some(c) => {
                let gb = base(&c.base, "commuting.base")?;
                if gb.points() != ext.base().points() {
                    return Err(ParseError::at("commuting.base.p", "commuting extension lives on a different base"));
                }
                let (maps, constants) = fibers::<S>(&c.fibers, gb.points(), &dims, "commuting.fibers")?;
                if let Some(&(point, coordinate)) = constants.first() {
                    return Err(ParseError::at(
                        "commuting.fibers",
                        format!("constant term at point {point}, coordinate {coordinate}"),
                    ));
                }
                let ext = Extension::new(gb, dims, maps, c.sigma.unwrap_or(self.sigma), c.xi)
                    .map_err(|e| ParseError::at("commuting", e.to_string()))?;
                let alpha = c.regularity.alpha.to_rational("commuting.regularity.alpha")?;
                Some(Commuting { ext, n: c.regularity.n, alpha })
            }
        };
        Ok(Problem { spec, n: self.regularity.n, alpha, ext, commuting })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use subres_core::scalar::rat;

    const WORKED: &str = r#"{
  "spectrum": {"chi": [{"num": -2, "den": 1}, {"num": -1, "den": 1}], "epsilon": {"num": 1, "den": 5}},
  "regularity": {"N": 2, "alpha": {"num": 1, "den": 1}},
  "base": {"p": 1, "permutation": [0]},
  "dims": [1, 1],
  "sigma": 0.25,
  "xi": 0.9,
  "fibers": [
    {"point": 0, "target_coordinate": 0, "exponents": [1, 0], "numerator": 27, "denominator": 200},
    {"point": 0, "target_coordinate": 0, "exponents": [0, 2], "numerator": 1},
    {"point": 0, "target_coordinate": 1, "exponents": [0, 1], "numerator": 46, "denominator": 125},
    {"point": 0, "target_coordinate": 1, "exponents": [1, 1], "numerator": 1, "denominator": 1}
  ]
}"#;

    #[test]
    fn reads_rational_instance() {
        let file = parse_instance(WORKED).unwrap();
        let p = file.problem::<Rational>().unwrap();
        assert_eq!(p.spec.chi(), &[rat(-2, 1), rat(-1, 1)]);
        assert_eq!(p.ext.fiber(0).coeff(0, &Monomial::new(&[1, 0])), Some(&rat(27, 200)));
        assert_eq!(p.ext.fiber(0).len(), 4);
        assert_eq!(p.n, 2);
    }

    #[test]
    fn float_records_need_float_mode() {
        let text = WORKED.replace(r#""numerator": 27, "denominator": 200"#, r#""float": 0.135"#);
        let file = parse_instance(&text).unwrap();
        let err = file.problem::<Rational>().unwrap_err();
        assert_eq!(err.path, "fibers[0]");
        let p = file.problem::<f64>().unwrap();
        assert_eq!(p.ext.fiber(0).coeff(0, &Monomial::new(&[1, 0])), Some(&0.135));
    }

    #[test]
    fn syntax_errors_carry_line_and_path() {
        let text = WORKED.replace(r#""exponents": [0, 2]"#, r#""exponents": [0, "two"]"#);
        let err = parse_instance(&text).unwrap_err();
        assert_eq!(err.position.map(|p| p.0), Some(10));
        assert!(err.path.starts_with("fibers[1].exponents"), "{}", err.path);
    }

    #[test]
    fn float_chi_is_rejected() {
        let text = WORKED.replace(r#""chi": [{"num": -2, "den": 1}"#, r#""chi": [{"num": -2.5, "den": 1}"#);
        let err = parse_instance(&text).unwrap().spectrum().unwrap_err();
        assert_eq!(err.path, "spectrum.chi[0]");
    }

    #[test]
    fn shape_errors_point_at_the_record() {
        let text = WORKED.replace(r#""exponents": [1, 1]"#, r#""exponents": [1, 1, 0]"#);
        let err = parse_instance(&text).unwrap().problem::<Rational>().unwrap_err();
        assert_eq!(err.path, "fibers[3].exponents");
        let text = WORKED.replace(r#""permutation": [0]"#, r#""permutation": [1]"#);
        assert!(parse_instance(&text).unwrap().problem::<Rational>().is_err());
    }

    #[test]
    fn constant_terms_are_recorded() {
        let text = WORKED.replace(r#""exponents": [1, 1]"#, r#""exponents": [0, 0]"#);
        let p = parse_instance(&text).unwrap().problem::<Rational>().unwrap();
        assert_eq!(p.ext.constant_terms(), &[(0, 1)]);
    }

    #[test]
    fn records_round_trip() {
        let p = parse_instance(WORKED).unwrap().problem::<Rational>().unwrap();
        let recs = poly_records(p.ext.fiber(0));
        let back: Vec<Rational> = recs.iter().map(|r| Rational::read(r, "").unwrap()).collect();
        let orig: Vec<Rational> = p.ext.fiber(0).terms().map(|(_, _, v)| v.clone()).collect();
        assert_eq!(back, orig);
        let big = rat(i64::MAX, 3) * rat(i64::MAX, 7);
        let r = RationalRecord::from_rational(&big);
        assert_eq!(r.to_rational("").unwrap(), big);
    }
}

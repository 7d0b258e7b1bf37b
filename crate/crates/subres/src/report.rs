//! Machine-readable report and its one-line-per-stage text summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use subres_core::graded::PolyMap;
use subres_core::normal_form::{DegreeCertificate, LiftRecord};
use subres_core::spectrum::HomogeneousType;

use crate::instance::{poly_records, Coefficient, LiftChoice, Mode, RationalRecord, TermRecord};

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: Tool,
    pub command: &'static str,
    pub instance: InstanceEcho,
    pub seed: u64,
    pub options: Settings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taylor: Option<TaylorSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resonance: Option<ResonanceSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvaluationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationSection>,
    pub verdicts: BTreeMap<&'static str, bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<&'static str, f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// SHA-256 of the instance file bytes.
    pub digest: String,
    pub mode: Mode,
    pub p: usize,
    pub permutation: Vec<usize>,
    pub dims: Vec<usize>,
    pub chi: Vec<RationalRecord>,
    pub epsilon: RationalRecord,
    #[serde(rename = "N")]
    pub n: u32,
    pub alpha: RationalRecord,
    pub sigma: f64,
    pub xi: f64,
    pub commuting: bool,
}

/// Options after applying file values, command-line overrides and defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub mode: Mode,
    pub lift: LiftChoice,
    pub lift_scale: RationalRecord,
    pub tol: f64,
    pub k_max: usize,
    pub samples: usize,
    pub radius: f64,
    pub radii: Vec<f64>,
    pub perturbations: usize,
    pub perturbation_scale: RationalRecord,
    pub centralizer_samples: usize,
    pub build_tol: f64,
    pub force: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub stage: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsSection {
    pub d: u32,
    pub lambda_tilde: RationalRecord,
    pub lambda: RationalRecord,
    pub mu: Option<RationalRecord>,
    pub epsilon0: RationalRecord,
    pub epsilon: RationalRecord,
    pub narrow: bool,
    pub nu: Option<RationalRecord>,
    pub criticality_bound: Option<RationalRecord>,
    pub criticality: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criticality_error: Option<String>,
    pub verdict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockRow {
    pub point: usize,
    pub block: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionRow {
    pub point: usize,
    pub coefficient_bound: f64,
    pub sampled_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationSection {
    pub blocks: Vec<BlockRow>,
    pub contraction: Vec<ContractionRow>,
    pub failures: Vec<String>,
    pub verdict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointTable {
    pub point: usize,
    pub terms: Vec<TermRecord>,
}

pub fn tables<'a, S: Coefficient + 'a>(maps: impl IntoIterator<Item = &'a PolyMap<S>>) -> Vec<PointTable> {
    maps.into_iter().enumerate().map(|(point, m)| PointTable { point, terms: poly_records(m) }).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftRow {
    pub degree: u32,
    pub point: usize,
    pub terms: Vec<TermRecord>,
}

pub fn lift_rows<S: Coefficient>(lifts: &[LiftRecord<S>]) -> Vec<LiftRow> {
    lifts.iter().map(|l| LiftRow { degree: l.degree, point: l.point, terms: poly_records(&l.delta) }).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateRow {
    pub degree: u32,
    /// Exponent `e` of the contraction factor `exp(e)`.
    pub exponent: Option<RationalRecord>,
    pub factor: Option<f64>,
    pub contracts: bool,
}

pub fn certificate_rows(certs: &[DegreeCertificate]) -> Vec<CertificateRow> {
    certs
        .iter()
        .map(|c| CertificateRow {
            degree: c.degree,
            exponent: c.exponent.as_ref().map(RationalRecord::from_rational),
            factor: c.factor,
            contracts: c.contracts(),
        })
        .collect()
}

/// Largest coefficient of a conjugacy defect.
#[derive(Debug, Clone, Serialize)]
pub struct DefectCheck {
    pub worst: f64,
    pub point: Option<usize>,
    pub verdict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TypeRow {
    pub block: usize,
    pub s: Vec<u32>,
    pub magnitude: f64,
}

impl TypeRow {
    pub fn new(ty: &HomogeneousType, magnitude: f64) -> Self {
        Self { block: ty.block, s: ty.s.clone(), magnitude }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TaylorSection {
    #[serde(rename = "N")]
    pub n: u32,
    pub d: u32,
    pub lift: LiftChoice,
    pub h: Vec<PointTable>,
    pub p: Vec<PointTable>,
    pub lifts: Vec<LiftRow>,
    pub certificates: Vec<CertificateRow>,
    pub certified: bool,
    pub dropped_residue: f64,
    pub conjugacy: DefectCheck,
    pub p_sub_resonance: bool,
    pub p_degree_at_most_d: bool,
    pub verdict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResonanceSection {
    pub input_sub_resonance: bool,
    pub h_prime: Vec<PointTable>,
    pub p_tilde: Vec<PointTable>,
    pub lifts: Vec<LiftRow>,
    pub certificates: Vec<CertificateRow>,
    pub conjugacy: DefectCheck,
    pub p_tilde_resonance: bool,
    pub verdict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Bound {
    pub max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    pub bound: f64,
    pub verdict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContactRow {
    pub point: usize,
    pub direction: Vec<f64>,
    pub samples: Vec<[f64; 2]>,
    pub slope: Option<f64>,
    pub expected: u32,
    pub degenerate: bool,
    pub verdict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateCheck {
    pub certified: f64,
    pub allowed: f64,
    pub worst: Option<f64>,
    pub verdict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluationSection {
    pub generator: &'static str,
    pub seed: u64,
    pub tol: f64,
    pub k_max: usize,
    pub radius: f64,
    /// `log(tol / radius) / log(xi)`
    pub sizing: f64,
    pub samples_per_point: usize,
    pub max_iterations: usize,
    pub residual: Bound,
    pub one_step: Bound,
    pub contact: Vec<ContactRow>,
    pub rate: RateCheck,
    pub errors: Vec<String>,
    pub verdict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionRow {
    pub seed: u64,
    pub identity: bool,
    pub in_class: bool,
    pub pinned_reproduces: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst: Option<TypeRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<PointTable>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessSection {
    pub perturbations: usize,
    pub scale: RationalRecord,
    pub transitions: Vec<TransitionRow>,
    pub resonance_in_class: bool,
    pub verdict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearizationSection {
    pub single_block: bool,
    pub degree_one: bool,
    pub linear: bool,
    pub verdict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CentralizerSection {
    pub commutes: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_block_diagonal: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<PointTable>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_sub_resonance: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_tilde: Option<Vec<PointTable>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_tilde_resonance: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pointwise: Option<Bound>,
    pub regularity: &'static str,
    pub verdict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationSection {
    pub uniqueness: UniquenessSection,
    pub flag_preservation: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linearization: Option<LinearizationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centralizer: Option<CentralizerSection>,
    pub verdict: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One line per stage verdict.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for (stage, ok) in &self.verdicts {
            let _ = writeln!(out, "{stage:<14}{}", if *ok { "pass" } else { "FAIL" });
        }
        if let Some(f) = &self.failure {
            let _ = writeln!(out, "{}: {}", f.stage, f.message);
        }
        out
    }
}

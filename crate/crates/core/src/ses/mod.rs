//! Scientific execution suite: claim extraction, the twelve atomic checks, and
//! aggregation into the trinary verification vector.
//!
//! Math checks (`M1`–`M4`) feed `Corr`, physics checks (`P1`–`P8`) feed `Phys`.
//! Within a dimension any failure dominates, then any pass; otherwise the
//! indicator is 0. `Inst` has no formal check and is always 0.

mod checks;
pub mod claims;
pub mod operator;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use claims::{
    extract_claims, AnnotationExtractor, Assignments, Claim, ClaimBody, ClaimBundle, ClaimExtractor, ClaimKind,
    MatrixKind, NumberDomain, Operand, ParseIssue, Span, SystemKind,
};

use crate::pipeline::SampleRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EvalDimension {
    Corr,
    Phys,
    Inst,
}

impl EvalDimension {
    pub const ALL: [EvalDimension; 3] = [EvalDimension::Corr, EvalDimension::Phys, EvalDimension::Inst];

    /// Whether a deterministic solver exists for this dimension.
    pub fn verifiable(self) -> bool {
        !matches!(self, EvalDimension::Inst)
    }

    pub fn name(self) -> &'static str {
        match self {
            EvalDimension::Corr => "Corr",
            EvalDimension::Phys => "Phys",
            EvalDimension::Inst => "Inst",
        }
    }
}

impl fmt::Display for EvalDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One value per evaluation dimension; serializes as `{"Corr":…,"Phys":…,"Inst":…}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerDim<T> {
    #[serde(rename = "Corr")]
    pub corr: T,
    #[serde(rename = "Phys")]
    pub phys: T,
    #[serde(rename = "Inst")]
    pub inst: T,
}

impl<T> PerDim<T> {
    pub fn new(corr: T, phys: T, inst: T) -> Self {
        Self { corr, phys, inst }
    }

    pub fn from_fn(mut f: impl FnMut(EvalDimension) -> T) -> Self {
        Self {
            corr: f(EvalDimension::Corr),
            phys: f(EvalDimension::Phys),
            inst: f(EvalDimension::Inst),
        }
    }

    pub fn get(&self, dim: EvalDimension) -> &T {
        match dim {
            EvalDimension::Corr => &self.corr,
            EvalDimension::Phys => &self.phys,
            EvalDimension::Inst => &self.inst,
        }
    }

    pub fn get_mut(&mut self, dim: EvalDimension) -> &mut T {
        match dim {
            EvalDimension::Corr => &mut self.corr,
            EvalDimension::Phys => &mut self.phys,
            EvalDimension::Inst => &mut self.inst,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(EvalDimension, &T) -> U) -> PerDim<U> {
        PerDim::from_fn(|d| f(d, self.get(d)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (EvalDimension, &T)> {
        EvalDimension::ALL.into_iter().map(move |d| (d, self.get(d)))
    }
}

impl<T: Copy> PerDim<T> {
    pub fn splat(value: T) -> Self {
        Self::new(value, value, value)
    }

    pub fn to_array(&self) -> [T; 3] {
        [self.corr, self.phys, self.inst]
    }
}

/// Trinary verification outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Indicator {
    /// Constraint satisfied.
    Pass,
    /// Execution unavailable.
    #[default]
    Unavailable,
    /// Violation detected.
    Fail,
}

impl Indicator {
    pub fn value(self) -> i8 {
        match self {
            Indicator::Pass => 1,
            Indicator::Unavailable => 0,
            Indicator::Fail => -1,
        }
    }

    pub fn from_value(v: i64) -> Option<Self> {
        match v {
            1 => Some(Indicator::Pass),
            0 => Some(Indicator::Unavailable),
            -1 => Some(Indicator::Fail),
            _ => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }
}

impl Serialize for Indicator {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for Indicator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Indicator::from_value(v).ok_or_else(|| serde::de::Error::custom(format!("indicator must be -1, 0 or 1, got {v}")))
    }
}

pub type VerificationVector = PerDim<Indicator>;

impl VerificationVector {
    pub fn unavailable() -> Self {
        Self::splat(Indicator::Unavailable)
    }

    pub fn as_reals(&self) -> [f64; 3] {
        [self.corr.as_f64(), self.phys.as_f64(), self.inst.as_f64()]
    }
}

/// Registered checks, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CheckId {
    M1,
    M2,
    M3,
    M4,
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
}

impl CheckId {
    pub const ALL: [CheckId; 12] = [
        CheckId::M1,
        CheckId::M2,
        CheckId::M3,
        CheckId::M4,
        CheckId::P1,
        CheckId::P2,
        CheckId::P3,
        CheckId::P4,
        CheckId::P5,
        CheckId::P6,
        CheckId::P7,
        CheckId::P8,
    ];

    pub fn dimension(self) -> EvalDimension {
        match self {
            CheckId::M1 | CheckId::M2 | CheckId::M3 | CheckId::M4 => EvalDimension::Corr,
            _ => EvalDimension::Phys,
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            CheckId::M1 => "Symbolic Equivalence Check",
            CheckId::M2 => "Numeric Equality Check",
            CheckId::M3 => "Dimensional Homogeneity Check",
            CheckId::M4 => "Domain Constraint Check",
            CheckId::P1 => "Unitarity Check",
            CheckId::P2 => "Observable Hermiticity Check",
            CheckId::P3 => "Density Matrix Validity Check",
            CheckId::P4 => "State Normalization Check",
            CheckId::P5 => "Commutator Check",
            CheckId::P6 => "Probability Completeness Check",
            CheckId::P7 => "Zero-Point Energy Check",
            CheckId::P8 => "Spectrum Reality Check",
        }
    }

    pub fn consumes(self) -> &'static [ClaimKind] {
        checks::consumes(self)
    }

    fn consumes_label(self) -> String {
        self.consumes().iter().map(|k| k.name()).collect::<Vec<_>>().join("/")
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Serializes as `{"check":"P7","status":-1,"message":…,"residual":…}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: CheckId,
    pub status: Indicator,
    pub message: String,
    pub residual: Option<f64>,
}

impl CheckReport {
    pub fn unavailable(check: CheckId, message: impl Into<String>) -> Self {
        Self {
            check,
            status: Indicator::Unavailable,
            message: message.into(),
            residual: None,
        }
    }
}

/// Tolerances and seeds for the check suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SesConfig {
    pub probe_trials: usize,
    pub probe_tol: f64,
    /// M2 relative tolerance.
    pub numeric_tol: f64,
    /// P1–P6 matrix tolerance.
    pub matrix_tol: f64,
    /// P8 eigenvalue agreement.
    pub spectrum_tol: f64,
    /// Fock-space truncation for ladder operators.
    pub fock_dim: usize,
    /// Random instantiations of free scalar symbols in commutator claims.
    pub operator_probes: usize,
    pub seed: u64,
}

impl Default for SesConfig {
    fn default() -> Self {
        Self {
            probe_trials: 16,
            probe_tol: 1e-9,
            numeric_tol: 1e-9,
            matrix_tol: 1e-8,
            spectrum_tol: 1e-6,
            fock_dim: 16,
            operator_probes: 3,
            seed: 7,
        }
    }
}

/// Result of verifying one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub v: VerificationVector,
    pub reports: Vec<CheckReport>,
    pub claim_count: usize,
    pub unparsable: bool,
}

/// The check suite with a pluggable claim extractor.
#[derive(Clone)]
pub struct Ses {
    pub config: SesConfig,
    extractor: Arc<dyn ClaimExtractor>,
}

impl Default for Ses {
    fn default() -> Self {
        Self::new(SesConfig::default())
    }
}

impl fmt::Debug for Ses {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ses").field("config", &self.config).finish_non_exhaustive()
    }
}

impl Ses {
    pub fn new(config: SesConfig) -> Self {
        Self::with_extractor(config, Arc::new(AnnotationExtractor))
    }

    pub fn with_extractor(config: SesConfig, extractor: Arc<dyn ClaimExtractor>) -> Self {
        Self { config, extractor }
    }

    /// Same suite with a different probing seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        out.config.seed = seed;
        out
    }

    pub fn extract(&self, answer: &str) -> ClaimBundle {
        self.extractor.extract(answer)
    }

    pub fn run_check(&self, id: CheckId, claims: &ClaimBundle, sample: &SampleRecord) -> CheckReport {
        let reference = self.reference_claims(sample);
        let ctx = checks::CheckContext {
            config: &self.config,
            reference: &reference,
        };
        checks::run(id, claims, &ctx)
    }

    fn reference_claims(&self, sample: &SampleRecord) -> ClaimBundle {
        sample
            .reference_answer
            .as_deref()
            .map(|r| self.extractor.extract(r))
            .unwrap_or_default()
    }

    pub fn verify(&self, sample: &SampleRecord) -> Verification {
        let claims = self.extract(&sample.answer);
        let reference = self.reference_claims(sample);
        let ctx = checks::CheckContext {
            config: &self.config,
            reference: &reference,
        };
        let reports: Vec<CheckReport> = CheckId::ALL.iter().map(|id| checks::run(*id, &claims, &ctx)).collect();
        Verification {
            v: aggregate(&reports),
            reports,
            claim_count: claims.len(),
            unparsable: claims.is_unparsable(),
        }
    }
}

/// Per-dimension fold: any −1 ⇒ −1, else any +1 ⇒ +1, else 0. `Inst` stays 0.
pub fn aggregate(reports: &[CheckReport]) -> VerificationVector {
    let fold = |dim: EvalDimension| {
        let statuses = reports.iter().filter(|r| r.check.dimension() == dim).map(|r| r.status);
        let mut out = Indicator::Unavailable;
        for s in statuses {
            match s {
                Indicator::Fail => return Indicator::Fail,
                Indicator::Pass => out = Indicator::Pass,
                Indicator::Unavailable => {}
            }
        }
        out
    };
    PerDim::new(fold(EvalDimension::Corr), fold(EvalDimension::Phys), Indicator::Unavailable)
}

/// Verifies with the default configuration.
pub fn verify(sample: &SampleRecord) -> Verification {
    Ses::default().verify(sample)
}

//! `@claim{…}` annotation grammar (see `docs/claims.md`).
//!
//! Extraction never fails: malformed blocks are recorded as [`ParseIssue`]s and
//! the bundle is flagged unparsable.

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::expr::{eval_expr, format_complex, parse_expr, Bindings, ComplexMatrix, Dimension, Expr};

const OPEN: &str = "@claim{";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimKind {
    FinalExpression,
    Numeric,
    UnitaryEvolution,
    Observable,
    DensityMatrix,
    StateVector,
    Commutator,
    Probabilities,
    Energy,
    Eigenvalues,
    QuantumNumber,
}

impl ClaimKind {
    pub const ALL: [ClaimKind; 11] = [
        ClaimKind::FinalExpression,
        ClaimKind::Numeric,
        ClaimKind::UnitaryEvolution,
        ClaimKind::Observable,
        ClaimKind::DensityMatrix,
        ClaimKind::StateVector,
        ClaimKind::Commutator,
        ClaimKind::Probabilities,
        ClaimKind::Energy,
        ClaimKind::Eigenvalues,
        ClaimKind::QuantumNumber,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClaimKind::FinalExpression => "final_expression",
            ClaimKind::Numeric => "numeric",
            ClaimKind::UnitaryEvolution => "unitary_evolution",
            ClaimKind::Observable => "observable",
            ClaimKind::DensityMatrix => "density_matrix",
            ClaimKind::StateVector => "state_vector",
            ClaimKind::Commutator => "commutator",
            ClaimKind::Probabilities => "probabilities",
            ClaimKind::Energy => "energy",
            ClaimKind::Eigenvalues => "eigenvalues",
            ClaimKind::QuantumNumber => "quantum_number",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ClaimKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    UnitaryEvolution,
    Observable,
    DensityMatrix,
    StateVector,
}

impl MatrixKind {
    pub fn claim_kind(self) -> ClaimKind {
        match self {
            MatrixKind::UnitaryEvolution => ClaimKind::UnitaryEvolution,
            MatrixKind::Observable => ClaimKind::Observable,
            MatrixKind::DensityMatrix => ClaimKind::DensityMatrix,
            MatrixKind::StateVector => ClaimKind::StateVector,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    BoundState,
    Free,
}

impl SystemKind {
    fn name(self) -> &'static str {
        match self {
            SystemKind::BoundState => "bound_state",
            SystemKind::Free => "free",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumberDomain {
    PositiveInteger,
    NonnegativeInteger,
    Integer,
    HalfInteger,
    Positive,
    Nonnegative,
}

impl NumberDomain {
    pub const ALL: [NumberDomain; 6] = [
        NumberDomain::PositiveInteger,
        NumberDomain::NonnegativeInteger,
        NumberDomain::Integer,
        NumberDomain::HalfInteger,
        NumberDomain::Positive,
        NumberDomain::Nonnegative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NumberDomain::PositiveInteger => "positive_integer",
            NumberDomain::NonnegativeInteger => "nonnegative_integer",
            NumberDomain::Integer => "integer",
            NumberDomain::HalfInteger => "half_integer",
            NumberDomain::Positive => "positive",
            NumberDomain::Nonnegative => "nonnegative",
        }
    }

    pub fn contains(self, x: f64) -> bool {
        let integral = x.fract() == 0.0;
        match self {
            NumberDomain::PositiveInteger => integral && x >= 1.0,
            NumberDomain::NonnegativeInteger => integral && x >= 0.0,
            NumberDomain::Integer => integral,
            NumberDomain::HalfInteger => (2.0 * x).fract() == 0.0,
            NumberDomain::Positive => x > 0.0,
            NumberDomain::Nonnegative => x >= 0.0,
        }
    }
}

/// Operand of a commutator claim: a literal matrix or an operator expression over
/// `a`, `adag`, `num` and `Id`.
#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Matrix(ComplexMatrix),
    Expr(Expr),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Matrix(m) => write!(f, "{m}"),
            Operand::Expr(e) => write!(f, "{e}"),
        }
    }
}

/// Ordered symbol assignments written `n=0; m=1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignments(pub Vec<(String, Expr)>);

impl Assignments {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Evaluates each right-hand side with the assignments made so far.
    pub fn to_bindings(&self) -> Result<Bindings, crate::expr::ExprError> {
        let mut out = Bindings::new();
        for (name, expr) in &self.0 {
            let v = eval_expr(expr, &out)?;
            out.insert(name.clone(), v);
        }
        Ok(out)
    }

    fn parse(text: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| format!("assignment `{part}` lacks `=`"))?;
            let name = name.trim();
            if !is_ident(name) {
                return Err(format!("bad symbol name `{name}`"));
            }
            let expr = parse_expr(value).map_err(|e| e.to_string())?;
            out.push((name.to_string(), expr));
        }
        Ok(Self(out))
    }
}

impl fmt::Display for Assignments {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, expr)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{name}={expr}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClaimBody {
    FinalExpression {
        expr: Expr,
        reference: Option<Expr>,
        /// Declared symbol dimensions, kept in declaration order.
        dims: Vec<(String, Dimension)>,
        target: Option<Dimension>,
    },
    NumericValue {
        value: Expr,
        reference: Option<Expr>,
        at: Assignments,
        units: Option<Dimension>,
    },
    Matrix {
        kind: MatrixKind,
        matrix: ComplexMatrix,
    },
    Commutator {
        a: Operand,
        b: Operand,
        result: Operand,
        at: Assignments,
    },
    Probabilities(Vec<f64>),
    Energy {
        value: Expr,
        quantum_number: Option<f64>,
        system: SystemKind,
        at: Assignments,
    },
    Eigenvalues {
        matrix: Option<ComplexMatrix>,
        values: Vec<Complex64>,
    },
    QuantumNumber {
        name: String,
        value: f64,
        domain: NumberDomain,
    },
}

impl ClaimBody {
    pub fn kind(&self) -> ClaimKind {
        match self {
            ClaimBody::FinalExpression { .. } => ClaimKind::FinalExpression,
            ClaimBody::NumericValue { .. } => ClaimKind::Numeric,
            ClaimBody::Matrix { kind, .. } => kind.claim_kind(),
            ClaimBody::Commutator { .. } => ClaimKind::Commutator,
            ClaimBody::Probabilities(_) => ClaimKind::Probabilities,
            ClaimBody::Energy { .. } => ClaimKind::Energy,
            ClaimBody::Eigenvalues { .. } => ClaimKind::Eigenvalues,
            ClaimBody::QuantumNumber { .. } => ClaimKind::QuantumNumber,
        }
    }

    pub fn dims_map(dims: &[(String, Dimension)]) -> HashMap<String, Dimension> {
        dims.iter().cloned().collect()
    }
}

fn list_literal(values: impl IntoIterator<Item = String>) -> String {
    format!("[{}]", values.into_iter().collect::<Vec<_>>().join(","))
}

/// Renders the canonical annotation block, which [`extract_claims`] reads back.
impl fmt::Display for ClaimBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{OPEN}kind={}", self.kind().name())?;
        match self {
            ClaimBody::FinalExpression { expr, reference, dims, target } => {
                write!(f, ", expr={expr}")?;
                if let Some(r) = reference {
                    write!(f, ", reference={r}")?;
                }
                if !dims.is_empty() {
                    let parts: Vec<String> = dims.iter().map(|(s, d)| format!("{s}:{d}")).collect();
                    write!(f, ", dims={}", parts.join("; "))?;
                }
                if let Some(t) = target {
                    write!(f, ", target={t}")?;
                }
            }
            ClaimBody::NumericValue { value, reference, at, units } => {
                write!(f, ", value={value}")?;
                if let Some(r) = reference {
                    write!(f, ", reference={r}")?;
                }
                if !at.is_empty() {
                    write!(f, ", at={at}")?;
                }
                if let Some(u) = units {
                    write!(f, ", units={u}")?;
                }
            }
            ClaimBody::Matrix { matrix, .. } => write!(f, ", m={matrix}")?,
            ClaimBody::Commutator { a, b, result, at } => {
                write!(f, ", A={a}, B={b}, result={result}")?;
                if !at.is_empty() {
                    write!(f, ", at={at}")?;
                }
            }
            ClaimBody::Probabilities(values) => {
                write!(f, ", values={}", list_literal(values.iter().map(|v| format!("{v}"))))?
            }
            ClaimBody::Energy { value, quantum_number, system, at } => {
                write!(f, ", value={value}")?;
                if let Some(n) = quantum_number {
                    write!(f, ", n={n}")?;
                }
                write!(f, ", system={}", system.name())?;
                if !at.is_empty() {
                    write!(f, ", at={at}")?;
                }
            }
            ClaimBody::Eigenvalues { matrix, values } => {
                if let Some(m) = matrix {
                    write!(f, ", m={m}")?;
                }
                write!(f, ", values={}", list_literal(values.iter().map(|z| format_complex(*z))))?;
            }
            ClaimBody::QuantumNumber { name, value, domain } => {
                write!(f, ", name={name}, value={value}, domain={}", domain.name())?
            }
        }
        f.write_str("}")
    }
}

/// Byte range `[start, end)` of a claim block in the answer text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Claim {
    pub span: Span,
    pub body: ClaimBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseIssue {
    pub span: Span,
    /// Kind named by the block, when it could be read.
    pub kind: Option<ClaimKind>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClaimBundle {
    pub claims: Vec<Claim>,
    pub issues: Vec<ParseIssue>,
}

impl ClaimBundle {
    pub fn is_unparsable(&self) -> bool {
        !self.issues.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.claims.is_empty()
    }

    pub fn len(&self) -> usize {
        self.claims.len()
    }

    pub fn of_kind(&self, kind: ClaimKind) -> impl Iterator<Item = &Claim> {
        self.claims.iter().filter(move |c| c.body.kind() == kind)
    }

    /// True when a malformed block may have hidden a claim of `kind`.
    pub fn kind_compromised(&self, kind: ClaimKind) -> bool {
        self.issues.iter().any(|i| i.kind.is_none() || i.kind == Some(kind))
    }
}

/// Stage-1 claim extraction. The annotation grammar is the built-in implementation;
/// other extractors (e.g. model-backed) plug in behind this trait.
pub trait ClaimExtractor: Send + Sync {
    fn extract(&self, answer: &str) -> ClaimBundle;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AnnotationExtractor;

impl ClaimExtractor for AnnotationExtractor {
    fn extract(&self, answer: &str) -> ClaimBundle {
        extract_claims(answer)
    }
}

pub fn extract_claims(answer: &str) -> ClaimBundle {
    let mut bundle = ClaimBundle::default();
    let mut cursor = 0;
    while let Some(found) = answer[cursor..].find(OPEN) {
        let start = cursor + found;
        let body_start = start + OPEN.len();
        match split_fields(answer, body_start) {
            Ok((fields, end)) => {
                let span = Span { start, end };
                let kind = fields
                    .iter()
                    .find(|(k, _)| k == "kind")
                    .and_then(|(_, v)| ClaimKind::from_name(v.trim()));
                match build_claim(&fields) {
                    Ok(body) => bundle.claims.push(Claim { span, body }),
                    Err(message) => bundle.issues.push(ParseIssue { span, kind, message }),
                }
                cursor = end;
            }
            Err(message) => {
                bundle.issues.push(ParseIssue {
                    span: Span { start, end: answer.len() },
                    kind: None,
                    message,
                });
                break;
            }
        }
    }
    bundle
}

/// Splits `key=value` fields up to the closing brace; returns the fields and the
/// byte offset just past the brace.
fn split_fields(text: &str, from: usize) -> Result<(Vec<(String, String)>, usize), String> {
    let mut fields = Vec::new();
    let mut depth = 0i32;
    let mut in_quotes = false;
    let mut field_start = from;
    let mut iter = text[from..].char_indices().map(|(i, c)| (i + from, c));
    while let Some((i, c)) = iter.next() {
        if in_quotes {
            if c == '"' {
                in_quotes = false;
            }
            continue;
        }
        match c {
            '"' => in_quotes = true,
            '[' | '(' => depth += 1,
            ']' | ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(format!("unbalanced `{c}` at byte {i}"));
                }
            }
            ',' | '}' if depth == 0 => {
                let raw = text[field_start..i].trim();
                if !raw.is_empty() {
                    fields.push(split_key_value(raw)?);
                } else if c == ',' {
                    return Err(format!("empty field at byte {i}"));
                }
                if c == '}' {
                    return Ok((fields, i + 1));
                }
                field_start = i + 1;
            }
            _ => {}
        }
    }
    Err("claim block is not closed".into())
}

fn split_key_value(raw: &str) -> Result<(String, String), String> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| format!("field `{raw}` lacks `=`"))?;
    let key = key.trim();
    if !is_ident(key) {
        return Err(format!("bad field name `{key}`"));
    }
    let mut value = value.trim();
    if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
        value = &value[1..value.len() - 1];
    }
    Ok((key.to_string(), value.to_string()))
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

struct Fields<'a> {
    map: HashMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn required(&self, key: &str) -> Result<&'a str, String> {
        self.map.get(key).copied().ok_or_else(|| format!("missing field `{key}`"))
    }

    fn optional(&self, key: &str) -> Option<&'a str> {
        self.map.get(key).copied()
    }

    fn expr(&self, key: &str) -> Result<Expr, String> {
        parse_field_expr(key, self.required(key)?)
    }

    fn optional_expr(&self, key: &str) -> Result<Option<Expr>, String> {
        self.optional(key).map(|v| parse_field_expr(key, v)).transpose()
    }

    fn assignments(&self) -> Result<Assignments, String> {
        self.optional("at")
            .map(Assignments::parse)
            .transpose()
            .map(Option::unwrap_or_default)
    }

    fn dimension(&self, key: &str) -> Result<Option<Dimension>, String> {
        self.optional(key)
            .map(|v| Dimension::parse(v).map_err(|e| format!("field `{key}`: {e}")))
            .transpose()
    }
}

fn parse_field_expr(key: &str, text: &str) -> Result<Expr, String> {
    parse_expr(text).map_err(|e| format!("field `{key}`: {e}"))
}

fn build_claim(raw: &[(String, String)]) -> Result<ClaimBody, String> {
    let mut map = HashMap::new();
    for (k, v) in raw {
        if map.insert(k.as_str(), v.as_str()).is_some() {
            return Err(format!("duplicate field `{k}`"));
        }
    }
    let fields = Fields { map };
    let kind_name = fields.required("kind")?.trim();
    let kind = ClaimKind::from_name(kind_name).ok_or_else(|| format!("unknown claim kind `{kind_name}`"))?;
    let matrix_kind = |kind| -> Result<ClaimBody, String> {
        let matrix = parse_matrix(fields.required("m")?)?;
        Ok(ClaimBody::Matrix { kind, matrix })
    };
    match kind {
        ClaimKind::FinalExpression => {
            let dims = match fields.optional("dims") {
                Some(text) => parse_dims(text)?,
                None => Vec::new(),
            };
            Ok(ClaimBody::FinalExpression {
                expr: fields.expr("expr")?,
                reference: fields.optional_expr("reference")?,
                dims,
                target: fields.dimension("target")?,
            })
        }
        ClaimKind::Numeric => Ok(ClaimBody::NumericValue {
            value: fields.expr("value")?,
            reference: fields.optional_expr("reference")?,
            at: fields.assignments()?,
            units: fields.dimension("units")?,
        }),
        ClaimKind::UnitaryEvolution => matrix_kind(MatrixKind::UnitaryEvolution),
        ClaimKind::Observable => matrix_kind(MatrixKind::Observable),
        ClaimKind::DensityMatrix => matrix_kind(MatrixKind::DensityMatrix),
        ClaimKind::StateVector => {
            let text = fields.required("m")?;
            let matrix = match parse_matrix(text) {
                Ok(m) => m,
                Err(_) => column(parse_list(text)?)?,
            };
            Ok(ClaimBody::Matrix { kind: MatrixKind::StateVector, matrix })
        }
        ClaimKind::Commutator => Ok(ClaimBody::Commutator {
            a: parse_operand("A", fields.required("A")?)?,
            b: parse_operand("B", fields.required("B")?)?,
            result: parse_operand("result", fields.required("result")?)?,
            at: fields.assignments()?,
        }),
        ClaimKind::Probabilities => {
            let values = parse_list(fields.required("values")?)?;
            let reals = values
                .into_iter()
                .map(|z| if z.im == 0.0 { Ok(z.re) } else { Err("probabilities must be real".to_string()) })
                .collect::<Result<_, _>>()?;
            Ok(ClaimBody::Probabilities(reals))
        }
        ClaimKind::Energy => {
            let value = match (fields.optional("value"), fields.optional("expr")) {
                (Some(v), _) => parse_field_expr("value", v)?,
                (None, Some(e)) => parse_field_expr("expr", e)?,
                (None, None) => return Err("energy claim needs `value` or `expr`".into()),
            };
            let quantum_number = fields
                .optional("n")
                .map(|v| constant_real("n", v))
                .transpose()?;
            let system = match fields.optional("system").map(str::trim) {
                None | Some("bound_state") => SystemKind::BoundState,
                Some("free") => SystemKind::Free,
                Some(other) => return Err(format!("unknown system `{other}`")),
            };
            Ok(ClaimBody::Energy { value, quantum_number, system, at: fields.assignments()? })
        }
        ClaimKind::Eigenvalues => Ok(ClaimBody::Eigenvalues {
            matrix: fields.optional("m").map(parse_matrix).transpose()?,
            values: parse_list(fields.required("values")?)?,
        }),
        ClaimKind::QuantumNumber => {
            let name = fields.required("name")?.trim();
            if !is_ident(name) {
                return Err(format!("bad quantum number name `{name}`"));
            }
            let domain_name = fields.optional("domain").unwrap_or("positive_integer").trim();
            let domain = NumberDomain::ALL
                .into_iter()
                .find(|d| d.name() == domain_name)
                .ok_or_else(|| format!("unknown domain `{domain_name}`"))?;
            Ok(ClaimBody::QuantumNumber {
                name: name.to_string(),
                value: constant_real("value", fields.required("value")?)?,
                domain,
            })
        }
    }
}

fn constant_value(text: &str) -> Result<Complex64, String> {
    let expr = parse_expr(text).map_err(|e| e.to_string())?;
    eval_expr(&expr, &Bindings::new()).map_err(|e| format!("`{}`: {e}", text.trim()))
}

fn constant_real(key: &str, text: &str) -> Result<f64, String> {
    let z = constant_value(text).map_err(|e| format!("field `{key}`: {e}"))?;
    if z.im != 0.0 {
        return Err(format!("field `{key}` must be real"));
    }
    Ok(z.re)
}

fn parse_dims(text: &str) -> Result<Vec<(String, Dimension)>, String> {
    text.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|part| {
            let (sym, dim) = part
                .split_once(':')
                .ok_or_else(|| format!("dimension entry `{part}` lacks `:`"))?;
            let sym = sym.trim();
            if !is_ident(sym) {
                return Err(format!("bad symbol `{sym}`"));
            }
            let d = Dimension::parse(dim).map_err(|e| e.to_string())?;
            Ok((sym.to_string(), d))
        })
        .collect()
}

fn parse_operand(key: &str, text: &str) -> Result<Operand, String> {
    if text.trim_start().starts_with('[') {
        Ok(Operand::Matrix(parse_matrix(text)?))
    } else {
        Ok(Operand::Expr(parse_field_expr(key, text)?))
    }
}

/// Splits the inside of `[ … ]` on top-level commas.
fn split_bracketed(text: &str) -> Result<Vec<&str>, String> {
    let t = text.trim();
    if !(t.starts_with('[') && t.ends_with(']')) {
        return Err(format!("expected a bracketed list, got `{t}`"));
    }
    let inner = &t[1..t.len() - 1];
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in inner.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(inner[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = inner[start..].trim();
    if !last.is_empty() || !parts.is_empty() {
        parts.push(last);
    }
    if parts.iter().any(|p| p.is_empty()) {
        return Err("empty list element".into());
    }
    Ok(parts)
}

fn parse_list(text: &str) -> Result<Vec<Complex64>, String> {
    let parts = split_bracketed(text)?;
    if parts.is_empty() {
        return Err("empty list".into());
    }
    if parts.iter().any(|p| p.starts_with('[')) {
        return Err("nested list where a flat list was expected".into());
    }
    parts.into_iter().map(constant_value).collect()
}

fn parse_matrix(text: &str) -> Result<ComplexMatrix, String> {
    let rows = split_bracketed(text)?;
    if rows.is_empty() || !rows.iter().all(|r| r.starts_with('[')) {
        return Err(format!("expected a nested matrix literal, got `{}`", text.trim()));
    }
    let rows = rows.into_iter().map(parse_list).collect::<Result<Vec<_>, _>>()?;
    ComplexMatrix::from_rows(rows).map_err(|e| e.to_string())
}

fn column(values: Vec<Complex64>) -> Result<ComplexMatrix, String> {
    ComplexMatrix::new(values.len(), 1, values).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_no_blocks_gives_empty_bundle() {
        let b = extract_claims("The energy is positive, as expected.");
        assert!(b.is_empty());
        assert!(!b.is_unparsable());
    }

    #[test]
    fn test_density_matrix_block() {
        let text = "so @claim{kind=density_matrix, m=[[0.6,0.5],[0.5,0.4]]} holds";
        let b = extract_claims(text);
        assert_eq!(b.len(), 1);
        let claim = &b.claims[0];
        assert_eq!(&text[claim.span.start..claim.span.end], "@claim{kind=density_matrix, m=[[0.6,0.5],[0.5,0.4]]}");
        match &claim.body {
            ClaimBody::Matrix { kind: MatrixKind::DensityMatrix, matrix } => {
                assert_eq!(matrix.get(0, 1), Complex64::new(0.5, 0.0));
            }
            other => panic!("unexpected {other:?}"),
        }
        // canonical rendering reads back to the same claim
        let again = extract_claims(&claim.body.to_string());
        assert_eq!(again.claims[0].body, claim.body);
    }

    #[test]
    fn test_commutator_block() {
        let b = extract_claims(
            "@claim{kind=commutator, A=a*exp(-I*omega*t), B=adag*exp(I*omega*t), result=1}",
        );
        assert_eq!(b.len(), 1);
        assert!(matches!(b.claims[0].body, ClaimBody::Commutator { .. }));
    }

    #[test]
    fn test_malformed_blocks_flag_unparsable() {
        let b = extract_claims("@claim{kind=density_matrix, m=[[0.6,0.5],[0.5]]}");
        assert!(b.is_unparsable());
        assert_eq!(b.issues[0].kind, Some(ClaimKind::DensityMatrix));
        assert!(b.kind_compromised(ClaimKind::DensityMatrix));
        assert!(!b.kind_compromised(ClaimKind::Energy));

        let b = extract_claims("@claim{kind=energy, value=1");
        assert!(b.is_unparsable());
        assert!(b.kind_compromised(ClaimKind::Energy));

        let b = extract_claims("@claim{kind=wavefunction, psi=1}");
        assert_eq!(b.issues[0].kind, None);

        let b = extract_claims("@claim{kind=numeric, value=1+*2}");
        assert!(b.is_unparsable());
    }

    #[test]
    fn test_quoted_values_and_assignments() {
        let b = extract_claims(
            r#"@claim{kind=numeric, value=0, reference="n^2*pi^2*hbar^2/(2*m*L^2)", at=n=0; m=1; L=1}"#,
        );
        match &b.claims[0].body {
            ClaimBody::NumericValue { at, reference, .. } => {
                assert_eq!(at.0.len(), 3);
                assert!(reference.is_some());
                let bind = at.to_bindings().unwrap();
                assert_eq!(bind["L"], Complex64::new(1.0, 0.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn test_state_vector_flat_list() {
        let b = extract_claims("@claim{kind=state_vector, m=[1/sqrt(2), I/sqrt(2)]}");
        match &b.claims[0].body {
            ClaimBody::Matrix { kind: MatrixKind::StateVector, matrix } => {
                assert_eq!((matrix.rows(), matrix.cols()), (2, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn test_render_round_trip_all_kinds() {
        let text = concat!(
            "@claim{kind=final_expression, expr=n^2*pi^2*hbar^2/(2*m*L^2), dims=n:1; m:M; L:L, target=energy}\n",
            "@claim{kind=numeric, value=0.5, reference=1/2, at=x=2}\n",
            "@claim{kind=unitary_evolution, m=[[0,1],[1,0]]}\n",
            "@claim{kind=observable, m=[[1,I],[-I,2]]}\n",
            "@claim{kind=state_vector, m=[[0.6],[0.8]]}\n",
            "@claim{kind=commutator, A=[[0,1],[1,0]], B=[[1,0],[0,-1]], result=[[0,-2],[2,0]]}\n",
            "@claim{kind=probabilities, values=[0.25,0.75]}\n",
            "@claim{kind=energy, value=pi^2/2, n=1, system=bound_state}\n",
            "@claim{kind=eigenvalues, m=[[0,1],[1,0]], values=[-1,1]}\n",
            "@claim{kind=quantum_number, name=n, value=2, domain=positive_integer}\n",
        );
        let b = extract_claims(text);
        assert!(!b.is_unparsable(), "{:?}", b.issues);
        assert_eq!(b.len(), 10);
        let rendered: String = b.claims.iter().map(|c| format!("{}\n", c.body)).collect();
        let again = extract_claims(&rendered);
        let bodies: Vec<_> = b.claims.iter().map(|c| &c.body).collect();
        let bodies_again: Vec<_> = again.claims.iter().map(|c| &c.body).collect();
        assert_eq!(bodies, bodies_again);
    }
}

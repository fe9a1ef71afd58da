//! The twelve atomic checks. Each one looks only at claims of the kinds it
//! consumes and reports +1 / −1, or 0 when nothing checkable was extracted.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::claims::{ClaimBody, ClaimBundle, ClaimKind, MatrixKind, Operand, SystemKind};
use super::operator::{eval_operator, reduce_commutator, uses_ladder, uses_operators, OperatorError};
use super::{CheckId, CheckReport, Indicator, SesConfig};
use crate::expr::{
    equiv_probe, eval_expr, hermitian_eigenvalues, infer_dimension, Bindings, ComplexMatrix, Expr, ProbeConfig,
};

pub(crate) struct CheckContext<'a> {
    pub config: &'a SesConfig,
    /// Claims extracted from the sample's reference answer, if any.
    pub reference: &'a ClaimBundle,
}

enum Outcome {
    Pass { residual: Option<f64>, note: String },
    Fail { residual: Option<f64>, note: String },
    Unavailable(String),
}

fn pass(residual: f64, note: impl Into<String>) -> Outcome {
    Outcome::Pass { residual: Some(residual), note: note.into() }
}

fn fail(residual: f64, note: impl Into<String>) -> Outcome {
    Outcome::Fail { residual: Some(residual), note: note.into() }
}

fn judged(ok: bool, residual: f64, note: impl Into<String>) -> Outcome {
    if ok {
        pass(residual, note)
    } else {
        fail(residual, note)
    }
}

/// Folds per-claim outcomes: any failure dominates, then any pass, else unavailable.
fn summarize(id: CheckId, outcomes: Vec<Outcome>) -> CheckReport {
    if outcomes.is_empty() {
        return CheckReport::unavailable(id, format!("no {} claim extracted", id.consumes_label()));
    }
    let worst = |acc: Option<f64>, r: Option<f64>| match (acc, r) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    };
    let mut failures = Vec::new();
    let mut passes = Vec::new();
    let mut skipped = Vec::new();
    let mut fail_residual = None;
    let mut pass_residual = None;
    for o in outcomes {
        match o {
            Outcome::Fail { residual, note } => {
                fail_residual = worst(fail_residual, residual);
                failures.push(note);
            }
            Outcome::Pass { residual, note } => {
                pass_residual = worst(pass_residual, residual);
                passes.push(note);
            }
            Outcome::Unavailable(why) => skipped.push(why),
        }
    }
    if !failures.is_empty() {
        CheckReport {
            check: id,
            status: Indicator::Fail,
            message: format!("{} failed: {}", id.title(), failures.join("; ")),
            residual: fail_residual,
        }
    } else if !passes.is_empty() {
        CheckReport {
            check: id,
            status: Indicator::Pass,
            message: format!("{} passed: {}", id.title(), passes.join("; ")),
            residual: pass_residual,
        }
    } else {
        CheckReport::unavailable(id, skipped.join("; "))
    }
}

pub(crate) fn run(id: CheckId, claims: &ClaimBundle, ctx: &CheckContext<'_>) -> CheckReport {
    if let Some(kind) = id.consumes().iter().find(|k| claims.kind_compromised(**k)) {
        return CheckReport::unavailable(id, format!("unparsable {} claim block", kind.name()));
    }
    let bodies = claims
        .claims
        .iter()
        .map(|c| &c.body)
        .filter(|b| id.consumes().contains(&b.kind()));
    let outcomes: Vec<Outcome> = bodies.filter_map(|b| check_one(id, b, ctx)).collect();
    summarize(id, outcomes)
}

fn seeded(ctx: &CheckContext<'_>, id: CheckId) -> u64 {
    ctx.config.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(id as u64 + 1))
}

fn probe_config(ctx: &CheckContext<'_>, id: CheckId) -> ProbeConfig {
    ProbeConfig {
        trials: ctx.config.probe_trials,
        tol: ctx.config.probe_tol,
        seed: seeded(ctx, id),
        ..ProbeConfig::default()
    }
}

/// Returns `None` when the claim carries nothing this check can look at.
fn check_one(id: CheckId, body: &ClaimBody, ctx: &CheckContext<'_>) -> Option<Outcome> {
    let cfg = ctx.config;
    match (id, body) {
        (CheckId::M1, ClaimBody::FinalExpression { expr, reference, .. }) => {
            let reference = reference.clone().or_else(|| reference_expression(ctx))?;
            Some(match equiv_probe(expr, &reference, &probe_config(ctx, id)) {
                Ok(ok) => judged(ok, 0.0, format!("`{expr}` vs `{reference}`")),
                Err(e) => Outcome::Unavailable(format!("probe failed: {e}")),
            })
        }
        (CheckId::M1, ClaimBody::Commutator { a: Operand::Expr(a), b: Operand::Expr(b), result, .. }) => {
            let Operand::Expr(result) = result else { return None };
            if uses_operators(result) {
                return None;
            }
            let reduced = reduce_commutator(a, b)?;
            Some(match equiv_probe(&reduced, result, &probe_config(ctx, id)) {
                Ok(ok) => judged(ok, 0.0, format!("[{a}, {b}] reduces to `{reduced}`, claimed `{result}`")),
                Err(e) => Outcome::Unavailable(format!("probe failed: {e}")),
            })
        }
        (CheckId::M2, ClaimBody::NumericValue { value, reference, at, .. }) => {
            let reference = reference.clone().or_else(|| reference_numeric(ctx))?;
            let bindings = match at.to_bindings() {
                Ok(b) => b,
                Err(e) => return Some(Outcome::Unavailable(format!("bad assignment: {e}"))),
            };
            Some(match (eval_expr(value, &bindings), eval_expr(&reference, &bindings)) {
                (Ok(c), Ok(r)) => {
                    let diff = (c - r).norm();
                    judged(
                        diff <= cfg.numeric_tol * (1.0 + r.norm()),
                        diff,
                        format!("claimed {} vs reference {}", c, r),
                    )
                }
                (Err(e), _) | (_, Err(e)) => Outcome::Unavailable(format!("evaluation failed: {e}")),
            })
        }
        (CheckId::M3, ClaimBody::FinalExpression { expr, dims, target, .. }) => {
            let target = (*target)?;
            if dims.is_empty() {
                return None;
            }
            let map = ClaimBody::dims_map(dims);
            Some(match infer_dimension(expr, &map) {
                Ok(d) => judged(d == target, 0.0, format!("`{expr}` has dimension {d}, declared {target}")),
                Err(e) => fail(1.0, e.to_string()),
            })
        }
        (CheckId::M4, ClaimBody::QuantumNumber { name, value, domain }) => Some(judged(
            domain.contains(*value),
            0.0,
            format!("{name} = {value} in {}", domain.name()),
        )),
        (CheckId::P1, ClaimBody::Matrix { kind: MatrixKind::UnitaryEvolution, matrix }) => {
            if !matrix.is_square() {
                return Some(fail(f64::INFINITY, "evolution operator is not square"));
            }
            let distance = matrix
                .dagger()
                .matmul(matrix)
                .and_then(|p| p.identity_distance())
                .expect("square");
            Some(judged(distance <= cfg.matrix_tol, distance, format!("‖U†U − I‖_F = {distance:e}")))
        }
        (CheckId::P2, ClaimBody::Matrix { kind: MatrixKind::Observable, matrix }) => {
            let Ok(residual) = matrix.hermiticity_residual() else {
                return Some(fail(f64::INFINITY, "observable is not square"));
            };
            let bound = cfg.matrix_tol * matrix.frobenius_norm();
            Some(judged(residual <= bound, residual, format!("‖A − A†‖_F = {residual:e}")))
        }
        (CheckId::P3, ClaimBody::Matrix { kind: MatrixKind::DensityMatrix, matrix }) => Some(check_density(matrix, cfg)),
        (CheckId::P4, ClaimBody::Matrix { kind: MatrixKind::StateVector, matrix }) => {
            if matrix.rows() != 1 && matrix.cols() != 1 {
                return Some(fail(f64::INFINITY, "state is not a vector"));
            }
            let norm_sq: f64 = matrix.data().iter().map(|z| z.norm_sqr()).sum();
            let dev = (norm_sq - 1.0).abs();
            Some(judged(dev <= cfg.matrix_tol, dev, format!("⟨ψ|ψ⟩ = {norm_sq}")))
        }
        (CheckId::P5, ClaimBody::Commutator { a, b, result, at }) => Some(check_commutator(a, b, result, at, ctx)),
        (CheckId::P6, ClaimBody::Probabilities(values)) => {
            let total: f64 = values.iter().sum();
            let dev = (total - 1.0).abs();
            if let Some(bad) = values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Some(fail(dev, format!("probability {bad} outside [0, 1]")));
            }
            Some(judged(dev <= cfg.matrix_tol, dev, format!("Σp = {total}")))
        }
        (CheckId::P7, ClaimBody::Energy { value, quantum_number, system, at }) => {
            if *system != SystemKind::BoundState {
                return None;
            }
            let energy = match at.to_bindings().and_then(|b| eval_expr(value, &b)) {
                Ok(e) => e,
                Err(e) => return Some(Outcome::Unavailable(format!("energy not numeric: {e}"))),
            };
            if energy.im.abs() > cfg.numeric_tol * (1.0 + energy.re.abs()) {
                return Some(fail(energy.im.abs(), format!("complex bound-state energy {energy}")));
            }
            if let Some(n) = quantum_number {
                if *n < 1.0 {
                    return Some(fail(
                        energy.re,
                        format!("bound state with quantum number {n}; minimum is 1 and E_1 > 0"),
                    ));
                }
            }
            Some(judged(
                energy.re > 0.0,
                energy.re,
                format!("bound-state energy {} must be strictly positive", energy.re),
            ))
        }
        (CheckId::P8, ClaimBody::Eigenvalues { matrix, values }) => Some(check_spectrum(matrix.as_ref(), values, cfg)),
        _ => None,
    }
}

fn reference_expression(ctx: &CheckContext<'_>) -> Option<Expr> {
    ctx.reference.claims.iter().find_map(|c| match &c.body {
        ClaimBody::FinalExpression { expr, .. } => Some(expr.clone()),
        _ => None,
    })
}

fn reference_numeric(ctx: &CheckContext<'_>) -> Option<Expr> {
    ctx.reference.claims.iter().find_map(|c| match &c.body {
        ClaimBody::NumericValue { value, .. } => Some(value.clone()),
        _ => None,
    })
}

fn check_density(rho: &ComplexMatrix, cfg: &SesConfig) -> Outcome {
    if !rho.is_square() {
        return fail(f64::INFINITY, "density matrix is not square");
    }
    let herm = rho.hermiticity_residual().expect("square");
    let herm_bound = cfg.matrix_tol * rho.frobenius_norm().max(1.0);
    if herm > herm_bound {
        return fail(herm, format!("not Hermitian (‖ρ − ρ†‖_F = {herm:e})"));
    }
    let trace = rho.trace().expect("square");
    let trace_dev = (trace - Complex64::new(1.0, 0.0)).norm();
    if trace_dev > cfg.matrix_tol {
        return fail(trace_dev, format!("trace {trace} ≠ 1"));
    }
    match hermitian_eigenvalues(rho, herm_bound) {
        Ok(values) => {
            let min = values[0];
            judged(min >= -cfg.matrix_tol, (-min).max(0.0), format!("minimum eigenvalue {min:e}"))
        }
        Err(e) => Outcome::Unavailable(format!("eigen-solver failed: {e}")),
    }
}

fn check_spectrum(matrix: Option<&ComplexMatrix>, values: &[Complex64], cfg: &SesConfig) -> Outcome {
    let tol = cfg.spectrum_tol;
    if let Some(z) = values.iter().find(|z| z.im.abs() > tol) {
        return fail(z.im.abs(), format!("eigenvalue {z} is not real"));
    }
    let reals: Vec<f64> = values.iter().map(|z| z.re).collect();
    if reals.windows(2).any(|w| w[0] > w[1]) {
        return fail(0.0, "eigenvalues not reported in ascending order");
    }
    let Some(m) = matrix else {
        return pass(0.0, "real and ascending");
    };
    let expected = match hermitian_eigenvalues(m, cfg.matrix_tol * m.frobenius_norm().max(1.0)) {
        Ok(v) => v,
        Err(e) => return fail(f64::INFINITY, format!("matrix has no real spectrum: {e}")),
    };
    if expected.len() != reals.len() {
        return fail(f64::INFINITY, format!("{} eigenvalues claimed, {} expected", reals.len(), expected.len()));
    }
    let dev = expected.iter().zip(&reals).map(|(e, r)| (e - r).abs()).fold(0.0, f64::max);
    judged(dev <= tol, dev, format!("max deviation {dev:e} from computed spectrum"))
}

fn check_commutator(
    a: &Operand,
    b: &Operand,
    result: &Operand,
    at: &super::claims::Assignments,
    ctx: &CheckContext<'_>,
) -> Outcome {
    let cfg = ctx.config;
    let literal_dim = [a, b, result].iter().find_map(|o| match o {
        Operand::Matrix(m) => Some(m.rows()),
        Operand::Expr(_) => None,
    });
    let ladder = [a, b, result]
        .iter()
        .any(|o| matches!(o, Operand::Expr(e) if uses_ladder(e)));
    let dim = literal_dim.unwrap_or(cfg.fock_dim);
    // [a, a†] = 1 holds only away from the truncation edge
    let compare = if ladder { dim.saturating_sub(1) } else { dim };
    if compare == 0 {
        return Outcome::Unavailable("truncation too small".into());
    }

    let fixed = match at.to_bindings() {
        Ok(b) => b,
        Err(e) => return Outcome::Unavailable(format!("bad assignment: {e}")),
    };
    let mut free: Vec<String> = [a, b, result]
        .iter()
        .filter_map(|o| match o {
            Operand::Expr(e) => Some(e.free_symbols()),
            Operand::Matrix(_) => None,
        })
        .flatten()
        .filter(|s| !super::operator::is_operator_symbol(s) && !fixed.contains_key(s))
        .collect();
    free.sort();
    free.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(seeded(ctx, CheckId::P5));
    let probes = if free.is_empty() { 1 } else { cfg.operator_probes.max(1) };
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let mut bindings: Bindings = fixed.clone();
        for s in &free {
            bindings.insert(s.clone(), Complex64::new(rng.random_range(0.1..2.0), 0.0));
        }
        let eval = |o: &Operand| -> Result<ComplexMatrix, OperatorError> {
            match o {
                Operand::Matrix(m) => Ok(m.clone()),
                Operand::Expr(e) => Ok(eval_operator(e, dim, &bindings)?.into_matrix(dim)),
            }
        };
        let residual = (|| -> Result<f64, OperatorError> {
            let lhs = eval(a)?.commutator(&eval(b)?)?;
            let diff = lhs.sub(&eval(result)?)?;
            Ok(diff.leading_block(compare)?.frobenius_norm())
        })();
        match residual {
            Ok(r) => worst = worst.max(r),
            Err(e) => return Outcome::Unavailable(format!("numeric instantiation failed: {e}")),
        }
    }
    judged(
        worst <= cfg.matrix_tol,
        worst,
        format!("‖[A,B] − C‖ = {worst:e} on a {compare}-level block"),
    )
}

pub(crate) fn consumes(id: CheckId) -> &'static [ClaimKind] {
    match id {
        CheckId::M1 => &[ClaimKind::FinalExpression, ClaimKind::Commutator],
        CheckId::M2 => &[ClaimKind::Numeric],
        CheckId::M3 => &[ClaimKind::FinalExpression],
        CheckId::M4 => &[ClaimKind::QuantumNumber],
        CheckId::P1 => &[ClaimKind::UnitaryEvolution],
        CheckId::P2 => &[ClaimKind::Observable],
        CheckId::P3 => &[ClaimKind::DensityMatrix],
        CheckId::P4 => &[ClaimKind::StateVector],
        CheckId::P5 => &[ClaimKind::Commutator],
        CheckId::P6 => &[ClaimKind::Probabilities],
        CheckId::P7 => &[ClaimKind::Energy],
        CheckId::P8 => &[ClaimKind::Eigenvalues],
    }
}

//! Operator-valued evaluation of expressions on a truncated Fock space.
//!
//! Operator symbols: `a` (annihilation), `adag` (creation), `num` (a†a) and `Id`.
//! Every other symbol is a scalar and must be bound.

use num_complex::Complex64;

use crate::expr::{eval_expr, BinOp, Bindings, ComplexMatrix, Expr, ExprError, LinalgError};

pub const LADDER_SYMBOLS: [&str; 3] = ["a", "adag", "num"];
pub const OPERATOR_SYMBOLS: [&str; 4] = ["a", "adag", "num", "Id"];

pub fn is_operator_symbol(name: &str) -> bool {
    OPERATOR_SYMBOLS.contains(&name)
}

pub fn uses_ladder(expr: &Expr) -> bool {
    expr.free_symbols().iter().any(|s| LADDER_SYMBOLS.contains(&s.as_str()))
}

pub fn uses_operators(expr: &Expr) -> bool {
    expr.free_symbols().iter().any(|s| is_operator_symbol(s))
}

/// Annihilation operator truncated to `dim` levels: `a|n⟩ = √n |n−1⟩`.
pub fn annihilation(dim: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    for n in 1..dim {
        m.set(n - 1, n, Complex64::new((n as f64).sqrt(), 0.0));
    }
    m
}

pub fn creation(dim: usize) -> ComplexMatrix {
    annihilation(dim).dagger()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OperatorError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("unsupported operator expression: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum OpValue {
    Scalar(Complex64),
    Op(ComplexMatrix),
}

impl OpValue {
    /// Scalars become multiples of the identity.
    pub fn into_matrix(self, dim: usize) -> ComplexMatrix {
        match self {
            OpValue::Scalar(z) => ComplexMatrix::identity(dim).scale(z),
            OpValue::Op(m) => m,
        }
    }
}

pub fn eval_operator(expr: &Expr, dim: usize, bindings: &Bindings) -> Result<OpValue, OperatorError> {
    use OpValue::{Op, Scalar};
    if !uses_operators(expr) {
        return Ok(Scalar(eval_expr(expr, bindings)?));
    }
    Ok(match expr {
        Expr::Sym(name) => Op(match name.as_str() {
            "a" => annihilation(dim),
            "adag" => creation(dim),
            "num" => creation(dim).matmul(&annihilation(dim))?,
            "Id" => ComplexMatrix::identity(dim),
            _ => unreachable!("operator symbol checked above"),
        }),
        Expr::Neg(inner) => match eval_operator(inner, dim, bindings)? {
            Scalar(z) => Scalar(-z),
            Op(m) => Op(m.scale(Complex64::new(-1.0, 0.0))),
        },
        Expr::Binary(op, lhs, rhs) => {
            let l = eval_operator(lhs, dim, bindings)?;
            let r = eval_operator(rhs, dim, bindings)?;
            match (op, l, r) {
                (BinOp::Add, l, r) => Op(l.into_matrix(dim).add(&r.into_matrix(dim))?),
                (BinOp::Sub, l, r) => Op(l.into_matrix(dim).sub(&r.into_matrix(dim))?),
                (BinOp::Mul, Scalar(z), Op(m)) | (BinOp::Mul, Op(m), Scalar(z)) => Op(m.scale(z)),
                (BinOp::Mul, Op(x), Op(y)) => Op(x.matmul(&y)?),
                (BinOp::Div, Op(m), Scalar(z)) => {
                    if z == Complex64::new(0.0, 0.0) {
                        return Err(ExprError::DivisionByZero.into());
                    }
                    Op(m.scale(z.inv()))
                }
                (BinOp::Pow, Op(m), Scalar(z)) if z.im == 0.0 && z.re.fract() == 0.0 && z.re >= 0.0 => {
                    let mut acc = ComplexMatrix::identity(dim);
                    for _ in 0..(z.re as usize) {
                        acc = acc.matmul(&m)?;
                    }
                    Op(acc)
                }
                _ => return Err(OperatorError::Unsupported(expr.to_string())),
            }
        }
        Expr::Call(..) => return Err(OperatorError::Unsupported(expr.to_string())),
        Expr::Num(_) | Expr::Const(_) => unreachable!("no operator symbols"),
    })
}

/// Canonical commutators of the ladder basis: `[a, a†] = 1`.
fn canonical_commutator(x: &str, y: &str) -> Option<f64> {
    match (x, y) {
        ("a", "adag") => Some(1.0),
        ("adag", "a") => Some(-1.0),
        ("a", "a") | ("adag", "adag") => Some(0.0),
        _ => None,
    }
}

/// Splits `expr` as `scalar · X` with `X ∈ {a, adag}` appearing exactly once as a
/// multiplicative factor.
fn split_monomial(expr: &Expr) -> Option<(Expr, &'static str)> {
    match expr {
        Expr::Sym(name) if name == "a" => Some((Expr::num(1.0), "a")),
        Expr::Sym(name) if name == "adag" => Some((Expr::num(1.0), "adag")),
        Expr::Neg(inner) => split_monomial(inner).map(|(c, x)| (Expr::neg(c), x)),
        Expr::Binary(BinOp::Mul, lhs, rhs) => match (uses_operators(lhs), uses_operators(rhs)) {
            (true, false) => split_monomial(lhs).map(|(c, x)| (Expr::binary(BinOp::Mul, c, (**rhs).clone()), x)),
            (false, true) => split_monomial(rhs).map(|(c, x)| (Expr::binary(BinOp::Mul, (**lhs).clone(), c), x)),
            _ => None,
        },
        Expr::Binary(BinOp::Div, lhs, rhs) if !uses_operators(rhs) => {
            split_monomial(lhs).map(|(c, x)| (Expr::binary(BinOp::Div, c, (**rhs).clone()), x))
        }
        _ => None,
    }
}

/// Symbolic value of `[A, B]` for monomials `A = f·X`, `B = g·Y` in the ladder
/// operators: `f·g·[X, Y]`. `None` when either side is not such a monomial.
pub fn reduce_commutator(a: &Expr, b: &Expr) -> Option<Expr> {
    let (f, x) = split_monomial(a)?;
    let (g, y) = split_monomial(b)?;
    let k = canonical_commutator(x, y)?;
    Some(Expr::binary(BinOp::Mul, Expr::binary(BinOp::Mul, f, g), Expr::num(k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{equiv_probe, parse_expr, ProbeConfig};

    #[test]
    fn test_truncated_canonical_commutator() {
        for d in [8, 16, 24] {
            let a = annihilation(d);
            let c = a.commutator(&creation(d)).unwrap();
            let block = c.leading_block(d - 1).unwrap();
            assert!(block.identity_distance().unwrap() <= 1e-10, "d = {d}");
            // truncation artifact sits in the last diagonal entry
            assert!((c.get(d - 1, d - 1) - Complex64::new(-((d - 1) as f64), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn test_eval_operator_products() {
        let b = Bindings::new();
        let n = eval_operator(&parse_expr("adag*a").unwrap(), 5, &b).unwrap().into_matrix(5);
        for k in 0..5 {
            assert!((n.get(k, k).re - k as f64).abs() < 1e-12);
        }
        let num = eval_operator(&parse_expr("num").unwrap(), 5, &b).unwrap().into_matrix(5);
        assert!(num.sub(&n).unwrap().frobenius_norm() < 1e-12);
        let scalar = eval_operator(&parse_expr("2*3").unwrap(), 5, &b).unwrap();
        assert_eq!(scalar, OpValue::Scalar(Complex64::new(6.0, 0.0)));
        assert!(eval_operator(&parse_expr("exp(a)").unwrap(), 5, &b).is_err());
    }

    #[test]
    fn test_reduce_commutator_phases() {
        let a = parse_expr("a*exp(-I*omega*t)").unwrap();
        let b = parse_expr("adag*exp(I*omega*t)").unwrap();
        let reduced = reduce_commutator(&a, &b).unwrap();
        let one = parse_expr("1").unwrap();
        assert!(equiv_probe(&reduced, &one, &ProbeConfig::default()).unwrap());
        let wrong = parse_expr("exp(-I*omega*t)").unwrap();
        assert!(!equiv_probe(&reduced, &wrong, &ProbeConfig::default()).unwrap());
        assert!(reduce_commutator(&parse_expr("a+adag").unwrap(), &b).is_none());
    }
}

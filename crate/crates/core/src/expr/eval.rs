use std::collections::{BTreeSet, HashMap};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ast::{BinOp, Constant, Expr, Func};
use super::ExprError;

pub type Bindings = HashMap<String, Complex64>;

/// Binding key that overrides the numeric value of `hbar` (natural units otherwise).
pub const HBAR_KEY: &str = "hbar";

/// Largest integer exponent evaluated by repeated multiplication.
const MAX_INT_POWER: f64 = 1024.0;

pub fn eval_expr(expr: &Expr, bindings: &Bindings) -> Result<Complex64, ExprError> {
    let value = match expr {
        Expr::Num(v) => Complex64::new(*v, 0.0),
        Expr::Sym(name) => *bindings
            .get(name)
            .ok_or_else(|| ExprError::UnboundSymbol(name.clone()))?,
        Expr::Const(Constant::Pi) => Complex64::new(std::f64::consts::PI, 0.0),
        Expr::Const(Constant::I) => Complex64::i(),
        Expr::Const(Constant::Hbar) => bindings
            .get(HBAR_KEY)
            .copied()
            .unwrap_or(Complex64::new(1.0, 0.0)),
        // subtract from +0 so that -4 is (-4, +0) and stays on the principal branch
        Expr::Neg(inner) => Complex64::new(0.0, 0.0) - eval_expr(inner, bindings)?,
        Expr::Call(func, arg) => {
            let x = eval_expr(arg, bindings)?;
            match func {
                Func::Exp => x.exp(),
                Func::Sqrt => x.sqrt(),
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Conj => x.conj(),
                Func::Abs => Complex64::new(x.norm(), 0.0),
            }
        }
        Expr::Binary(op, lhs, rhs) => {
            let a = eval_expr(lhs, bindings)?;
            let b = eval_expr(rhs, bindings)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == Complex64::new(0.0, 0.0) {
                        return Err(ExprError::DivisionByZero);
                    }
                    a / b
                }
                BinOp::Pow => complex_pow(a, b)?,
            }
        }
    };
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(ExprError::Domain(format!("non-finite value from `{expr}`")));
    }
    Ok(value)
}

fn complex_pow(base: Complex64, exponent: Complex64) -> Result<Complex64, ExprError> {
    let zero = Complex64::new(0.0, 0.0);
    if exponent.im == 0.0 && exponent.re.fract() == 0.0 && exponent.re.abs() <= MAX_INT_POWER {
        let k = exponent.re as i32;
        if base == zero && k < 0 {
            return Err(ExprError::DivisionByZero);
        }
        return Ok(base.powi(k));
    }
    if base == zero {
        return if exponent.re > 0.0 {
            Ok(zero)
        } else {
            Err(ExprError::DivisionByZero)
        };
    }
    // principal branch
    Ok(base.powc(exponent))
}

/// Settings for randomized equivalence probing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
    /// Half-width of the square in the complex plane that probe points are drawn from.
    pub radius: f64,
    /// Probe points closer than this to the origin are redrawn.
    pub min_modulus: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            trials: 16,
            tol: 1e-9,
            seed: 0x5e5_0001,
            radius: 2.0,
            min_modulus: 1e-3,
        }
    }
}

const MAX_PROBE_RETRIES: usize = 10;

/// Decides `a ≡ b` by evaluating both at seeded random complex points.
///
/// Symbols present in only one side are still bound, so `x - x` and `0` compare equal.
pub fn equiv_probe(a: &Expr, b: &Expr, cfg: &ProbeConfig) -> Result<bool, ExprError> {
    let mut symbols: BTreeSet<String> = a.free_symbols();
    symbols.extend(b.free_symbols());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    for _ in 0..cfg.trials.max(1) {
        let mut attempt = 0;
        loop {
            let bindings = sample_point(&symbols, cfg, &mut rng);
            match (eval_expr(a, &bindings), eval_expr(b, &bindings)) {
                (Ok(x), Ok(y)) => {
                    let scale = 1.0 + x.norm().max(y.norm());
                    if (x - y).norm() > cfg.tol * scale {
                        return Ok(false);
                    }
                    break;
                }
                (Err(e), _) | (_, Err(e)) => {
                    attempt += 1;
                    if attempt > MAX_PROBE_RETRIES {
                        return Err(e);
                    }
                }
            }
        }
    }
    Ok(true)
}

fn sample_point(symbols: &BTreeSet<String>, cfg: &ProbeConfig, rng: &mut ChaCha8Rng) -> Bindings {
    symbols
        .iter()
        .map(|name| {
            let z = loop {
                let z = Complex64::new(
                    rng.random_range(-cfg.radius..cfg.radius),
                    rng.random_range(-cfg.radius..cfg.radius),
                );
                if z.norm() >= cfg.min_modulus {
                    break z;
                }
            };
            (name.clone(), z)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn eval_str(text: &str, bindings: &[(&str, Complex64)]) -> Result<Complex64, ExprError> {
        let map = bindings.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        eval_expr(&parse_expr(text).unwrap(), &map)
    }

    fn re(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn test_box_energy_at_ground_zero() {
        let v = eval_str(
            "n^2*pi^2*hbar^2/(2*m*L^2)",
            &[("n", re(0.0)), ("m", re(1.7)), ("L", re(0.3))],
        )
        .unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn test_conjugate_sum() {
        let v = eval_str("x+conj(x)", &[("x", Complex64::new(2.0, 3.0))]).unwrap();
        assert_eq!(v, Complex64::new(4.0, 0.0));
    }

    #[test]
    fn test_euler_identity() {
        let v = eval_str("exp(-I*pi)", &[]).unwrap();
        assert!((v - re(-1.0)).norm() < 1e-12);
    }

    #[test]
    fn test_hbar_override() {
        assert_eq!(eval_str("hbar", &[]).unwrap(), re(1.0));
        assert_eq!(eval_str("2*hbar", &[(HBAR_KEY, re(1.5))]).unwrap(), re(3.0));
    }

    #[test]
    fn test_errors() {
        assert_eq!(eval_str("x+1", &[]), Err(ExprError::UnboundSymbol("x".into())));
        assert_eq!(eval_str("1/(x-x)", &[("x", re(2.0))]), Err(ExprError::DivisionByZero));
        assert_eq!(eval_str("0^-1", &[]), Err(ExprError::DivisionByZero));
        // principal branch, never a domain error
        let v = eval_str("sqrt(-4)", &[]).unwrap();
        assert!((v - Complex64::new(0.0, 2.0)).norm() < 1e-15);
        assert!(matches!(eval_str("exp(1000)", &[]), Err(ExprError::Domain(_))));
    }

    #[test]
    fn test_zero_to_positive_powers() {
        assert_eq!(eval_str("0^2", &[]).unwrap(), re(0.0));
        assert_eq!(eval_str("0^0.5", &[]).unwrap(), re(0.0));
        assert_eq!(eval_str("0^0", &[]).unwrap(), re(1.0));
    }

    fn probe(a: &str, b: &str) -> bool {
        equiv_probe(&parse_expr(a).unwrap(), &parse_expr(b).unwrap(), &ProbeConfig::default())
            .unwrap()
    }

    #[test]
    fn test_equiv_examples() {
        assert!(probe("(x+1)^2", "x^2+2*x+1"));
        assert!(!probe("n^2", "n^3"));
        assert!(probe("exp(I*t)*exp(-I*t)", "1"));
        assert!(probe("x-x", "0"));
        assert!(!probe("sqrt(x^2)", "x"));
    }

    #[test]
    fn test_equiv_propagates_persistent_errors() {
        let a = parse_expr("1/(x-x)").unwrap();
        let b = parse_expr("1").unwrap();
        assert_eq!(
            equiv_probe(&a, &b, &ProbeConfig::default()),
            Err(ExprError::DivisionByZero)
        );
    }
}

//! Dimensional analysis over the seven SI base quantities.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_rational::Rational64;
use thiserror::Error;

use super::ast::{BinOp, Constant, Expr, Func};
use super::eval::{eval_expr, Bindings};
use super::parse::parse_expr;

/// Largest denominator accepted when reading a numeric exponent as a rational.
const MAX_EXPONENT_DENOMINATOR: i64 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseQuantity {
    Mass,
    Length,
    Time,
    Current,
    Temperature,
    Amount,
    Luminosity,
}

impl BaseQuantity {
    pub const ALL: [BaseQuantity; 7] = [
        BaseQuantity::Mass,
        BaseQuantity::Length,
        BaseQuantity::Time,
        BaseQuantity::Current,
        BaseQuantity::Temperature,
        BaseQuantity::Amount,
        BaseQuantity::Luminosity,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BaseQuantity::Mass => "M",
            BaseQuantity::Length => "L",
            BaseQuantity::Time => "T",
            BaseQuantity::Current => "A",
            BaseQuantity::Temperature => "K",
            BaseQuantity::Amount => "mol",
            BaseQuantity::Luminosity => "cd",
        }
    }
}

/// Rational exponents over the SI base quantities; all-zero is dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Dimension([Rational64; 7]);

impl Dimension {
    pub fn dimensionless() -> Self {
        Self::default()
    }

    pub fn base(q: BaseQuantity) -> Self {
        Self::default().with(q, 1)
    }

    pub fn with(mut self, q: BaseQuantity, power: i64) -> Self {
        self.0[q as usize] = Rational64::from_integer(power);
        self
    }

    pub fn exponent(&self, q: BaseQuantity) -> Rational64 {
        self.0[q as usize]
    }

    pub fn is_dimensionless(&self) -> bool {
        self.0.iter().all(|e| *e == Rational64::from_integer(0))
    }

    pub fn pow(&self, power: Rational64) -> Self {
        Self(self.0.map(|e| e * power))
    }

    pub fn mass() -> Self {
        Self::base(BaseQuantity::Mass)
    }

    pub fn length() -> Self {
        Self::base(BaseQuantity::Length)
    }

    pub fn time() -> Self {
        Self::base(BaseQuantity::Time)
    }

    /// M·L²·T⁻²
    pub fn energy() -> Self {
        Self::default()
            .with(BaseQuantity::Mass, 1)
            .with(BaseQuantity::Length, 2)
            .with(BaseQuantity::Time, -2)
    }

    /// M·L²·T⁻¹, the dimension carried by `hbar`.
    pub fn action() -> Self {
        Self::default()
            .with(BaseQuantity::Mass, 1)
            .with(BaseQuantity::Length, 2)
            .with(BaseQuantity::Time, -1)
    }

    /// Parses a dimension written as a product of base symbols, e.g. `M*L^2*T^-2`.
    ///
    /// Besides the base symbols (`M L T A K mol cd`) the names `energy`, `action`,
    /// `frequency`, `momentum`, `velocity` and `dimensionless` are accepted.
    pub fn parse(text: &str) -> Result<Self, DimensionError> {
        let trimmed = text.trim();
        if trimmed == "1" || trimmed == "dimensionless" {
            return Ok(Self::dimensionless());
        }
        let expr = parse_expr(trimmed).map_err(|e| DimensionError::Parse(e.to_string()))?;
        let mut names: HashMap<String, Dimension> = BaseQuantity::ALL
            .into_iter()
            .map(|q| (q.symbol().to_string(), Self::base(q)))
            .collect();
        let frequency = Self::default().with(BaseQuantity::Time, -1);
        let velocity = Self::length().add(frequency);
        names.insert("energy".into(), Self::energy());
        names.insert("action".into(), Self::action());
        names.insert("frequency".into(), frequency);
        names.insert("velocity".into(), velocity);
        names.insert("momentum".into(), Self::mass().add(velocity));
        names.insert("dimensionless".into(), Self::dimensionless());
        infer_dimension(&expr, &names)
    }
}

impl Add for Dimension {
    type Output = Dimension;
    fn add(self, rhs: Self) -> Self {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0) {
            *o += r;
        }
        Self(out)
    }
}

impl Sub for Dimension {
    type Output = Dimension;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for Dimension {
    type Output = Dimension;
    fn neg(self) -> Self {
        Self(self.0.map(|e| -e))
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_dimensionless() {
            return f.write_str("1");
        }
        let mut first = true;
        for q in BaseQuantity::ALL {
            let e = self.exponent(q);
            if e == Rational64::from_integer(0) {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            f.write_str(q.symbol())?;
            if e != Rational64::from_integer(1) {
                if e.is_integer() {
                    write!(f, "^{}", e.numer())?;
                } else {
                    write!(f, "^({}/{})", e.numer(), e.denom())?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DimensionError {
    #[error("dimension mismatch at `{node}`: {left} vs {right}")]
    Mismatch {
        node: String,
        left: Dimension,
        right: Dimension,
    },
    #[error("exponent in `{node}` is not a rational constant")]
    NonRationalExponent { node: String },
    #[error("symbol `{0}` has no declared dimension")]
    UndeclaredSymbol(String),
    #[error("cannot parse dimension: {0}")]
    Parse(String),
}

/// Infers the dimension of `expr`; `hbar` is always M·L²·T⁻¹.
pub fn infer_dimension(
    expr: &Expr,
    symbol_dims: &HashMap<String, Dimension>,
) -> Result<Dimension, DimensionError> {
    let dimensionless = Dimension::dimensionless();
    match expr {
        Expr::Num(_) | Expr::Const(Constant::Pi) | Expr::Const(Constant::I) => Ok(dimensionless),
        Expr::Const(Constant::Hbar) => Ok(Dimension::action()),
        Expr::Sym(name) => symbol_dims
            .get(name)
            .copied()
            .ok_or_else(|| DimensionError::UndeclaredSymbol(name.clone())),
        Expr::Neg(inner) => infer_dimension(inner, symbol_dims),
        Expr::Call(func, arg) => {
            let d = infer_dimension(arg, symbol_dims)?;
            match func {
                Func::Conj | Func::Abs => Ok(d),
                Func::Sqrt => Ok(d.pow(Rational64::new(1, 2))),
                Func::Exp | Func::Sin | Func::Cos => {
                    if d.is_dimensionless() {
                        Ok(dimensionless)
                    } else {
                        Err(DimensionError::Mismatch {
                            node: expr.to_string(),
                            left: d,
                            right: dimensionless,
                        })
                    }
                }
            }
        }
        Expr::Binary(op, lhs, rhs) => {
            let a = infer_dimension(lhs, symbol_dims)?;
            match op {
                BinOp::Add | BinOp::Sub => {
                    let b = infer_dimension(rhs, symbol_dims)?;
                    if a == b {
                        Ok(a)
                    } else {
                        Err(DimensionError::Mismatch {
                            node: expr.to_string(),
                            left: a,
                            right: b,
                        })
                    }
                }
                BinOp::Mul => Ok(a + infer_dimension(rhs, symbol_dims)?),
                BinOp::Div => Ok(a - infer_dimension(rhs, symbol_dims)?),
                BinOp::Pow => {
                    let e = infer_dimension(rhs, symbol_dims)?;
                    if !e.is_dimensionless() {
                        return Err(DimensionError::Mismatch {
                            node: expr.to_string(),
                            left: e,
                            right: dimensionless,
                        });
                    }
                    if a.is_dimensionless() {
                        return Ok(dimensionless);
                    }
                    let power = constant_rational(rhs).ok_or_else(|| {
                        DimensionError::NonRationalExponent {
                            node: expr.to_string(),
                        }
                    })?;
                    Ok(a.pow(power))
                }
            }
        }
    }
}

fn constant_rational(expr: &Expr) -> Option<Rational64> {
    if !expr.free_symbols().is_empty() {
        return None;
    }
    let value = eval_expr(expr, &Bindings::new()).ok()?;
    if value.im.abs() > 1e-12 {
        return None;
    }
    let x = value.re;
    (1..=MAX_EXPONENT_DENOMINATOR).find_map(|q| {
        let p = (x * q as f64).round();
        ((x - p / q as f64).abs() < 1e-9).then(|| Rational64::new(p as i64, q))
    })
}

use std::collections::BTreeSet;
use std::fmt;

/// Named constants recognised by the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constant {
    Pi,
    Hbar,
    /// Imaginary unit.
    I,
}

impl Constant {
    pub fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::Hbar => "hbar",
            Constant::I => "I",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "pi" | "π" => Some(Constant::Pi),
            "hbar" | "ħ" => Some(Constant::Hbar),
            "I" => Some(Constant::I),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => PREC_SUM,
            BinOp::Mul | BinOp::Div => PREC_PRODUCT,
            BinOp::Pow => PREC_POWER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Sqrt,
    Sin,
    Cos,
    Conj,
    Abs,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Exp, Func::Sqrt, Func::Sin, Func::Cos, Func::Conj, Func::Abs];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Conj => "conj",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

pub(crate) const PREC_SUM: u8 = 1;
pub(crate) const PREC_PRODUCT: u8 = 2;
pub(crate) const PREC_UNARY: u8 = 3;
pub(crate) const PREC_POWER: u8 = 4;
pub(crate) const PREC_ATOM: u8 = 5;

/// Scalar expression tree.
///
/// Numeric literals produced by the parser are always non-negative; a leading
/// minus sign becomes a [`Expr::Neg`] node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Sym(String),
    Const(Constant),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(value: f64) -> Self {
        Expr::Num(value)
    }

    pub fn sym(name: impl Into<String>) -> Self {
        Expr::Sym(name.into())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn call(func: Func, arg: Expr) -> Self {
        Expr::Call(func, Box::new(arg))
    }

    pub fn neg(inner: Expr) -> Self {
        Expr::Neg(Box::new(inner))
    }

    /// Total number of nodes in the tree, leaves included.
    pub fn node_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Sym(_) | Expr::Const(_) => 1,
            Expr::Neg(inner) | Expr::Call(_, inner) => 1 + inner.node_count(),
            Expr::Binary(_, lhs, rhs) => 1 + lhs.node_count() + rhs.node_count(),
        }
    }

    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Sym(name) => {
                out.insert(name.clone());
            }
            Expr::Num(_) | Expr::Const(_) => {}
            Expr::Neg(inner) | Expr::Call(_, inner) => inner.collect_symbols(out),
            Expr::Binary(_, lhs, rhs) => {
                lhs.collect_symbols(out);
                rhs.collect_symbols(out);
            }
        }
    }

    /// Replaces every occurrence of symbol `name` with `value`.
    pub fn substitute(&self, name: &str, value: &Expr) -> Expr {
        match self {
            Expr::Sym(s) if s == name => value.clone(),
            Expr::Num(_) | Expr::Sym(_) | Expr::Const(_) => self.clone(),
            Expr::Neg(inner) => Expr::neg(inner.substitute(name, value)),
            Expr::Call(f, inner) => Expr::call(*f, inner.substitute(name, value)),
            Expr::Binary(op, lhs, rhs) => {
                Expr::binary(*op, lhs.substitute(name, value), rhs.substitute(name, value))
            }
        }
    }

    pub(crate) fn precedence(&self) -> u8 {
        match self {
            Expr::Num(_) | Expr::Sym(_) | Expr::Const(_) | Expr::Call(..) => PREC_ATOM,
            Expr::Neg(_) => PREC_UNARY,
            Expr::Binary(op, ..) => op.precedence(),
        }
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, expr: &Expr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({expr})")
    } else {
        write!(f, "{expr}")
    }
}

/// Prints with the minimum parentheses needed for the parser to rebuild the
/// identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Sym(name) => f.write_str(name),
            Expr::Const(c) => f.write_str(c.name()),
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                write_wrapped(f, inner, inner.precedence() < PREC_UNARY)
            }
            Expr::Binary(BinOp::Pow, base, exponent) => {
                write_wrapped(f, base, base.precedence() <= PREC_POWER)?;
                f.write_str("^")?;
                write_wrapped(f, exponent, exponent.precedence() < PREC_UNARY)
            }
            Expr::Binary(op, lhs, rhs) => {
                let prec = op.precedence();
                write_wrapped(f, lhs, lhs.precedence() < prec)?;
                write!(f, "{}", op.symbol())?;
                write_wrapped(f, rhs, rhs.precedence() <= prec)
            }
        }
    }
}

use std::fmt;

/// Byte range `[start, end)` in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Const(f64),
    /// The constant `pi`, kept distinct so printing round-trips by name.
    Pi,
    /// Zero-based parameter index.
    Var(usize),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Integer power with a literal exponent.
    Pow(Box<Expr>, i32),
}

/// Expression node with the source span it was parsed from.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Self { kind, span }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(ExprKind::Const(c), Span::default())
    }

    pub fn var(i: usize) -> Self {
        Self::new(ExprKind::Var(i), Span::default())
    }

    pub fn neg(e: Expr) -> Self {
        Self::new(ExprKind::Neg(Box::new(e)), Span::default())
    }

    pub fn call(f: Func, e: Expr) -> Self {
        Self::new(ExprKind::Call(f, Box::new(e)), Span::default())
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Self {
        Self::new(ExprKind::Binary(op, Box::new(a), Box::new(b)), Span::default())
    }

    pub fn pow(e: Expr, k: i32) -> Self {
        Self::new(ExprKind::Pow(Box::new(e), k), Span::default())
    }

    /// Structural equality ignoring spans; constants compare bitwise.
    pub fn same_structure(&self, other: &Expr) -> bool {
        use ExprKind::*;
        match (&self.kind, &other.kind) {
            (Const(a), Const(b)) => a.to_bits() == b.to_bits(),
            (Pi, Pi) => true,
            (Var(a), Var(b)) => a == b,
            (Neg(a), Neg(b)) => a.same_structure(b),
            (Call(f, a), Call(g, b)) => f == g && a.same_structure(b),
            (Binary(o, a1, a2), Binary(p, b1, b2)) => {
                o == p && a1.same_structure(b1) && a2.same_structure(b2)
            }
            (Pow(a, k), Pow(b, l)) => k == l && a.same_structure(b),
            _ => false,
        }
    }

    /// Largest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        use ExprKind::*;
        match &self.kind {
            Const(_) | Pi => None,
            Var(i) => Some(*i),
            Neg(e) | Call(_, e) | Pow(e, _) => e.max_var(),
            Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    pub fn depth(&self) -> usize {
        use ExprKind::*;
        match &self.kind {
            Const(_) | Pi | Var(_) => 1,
            Neg(e) | Call(_, e) | Pow(e, _) => 1 + e.depth(),
            Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    // Binding strength used by the printer: 1 = +-, 2 = */, 3 = unary minus,
    // 4 = power, 5 = atoms and calls.
    fn strength(&self) -> u8 {
        match &self.kind {
            ExprKind::Binary(op, ..) => op.precedence(),
            ExprKind::Neg(_) => 3,
            ExprKind::Pow(..) => 4,
            _ => 5,
        }
    }
}

/// Variable name used by the printer: `u1`, `u2`, ...
pub fn var_name(i: usize) -> String {
    format!("u{}", i + 1)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match &self.kind {
            ExprKind::Const(c) => write!(f, "{c:?}"),
            ExprKind::Pi => f.write_str("pi"),
            ExprKind::Var(i) => f.write_str(&var_name(*i)),
            ExprKind::Neg(e) => {
                f.write_str("-")?;
                wrap(f, e, e.strength() < 3)
            }
            ExprKind::Call(func, e) => write!(f, "{}({e})", func.name()),
            ExprKind::Binary(op, a, b) => {
                let p = op.precedence();
                wrap(f, a, a.strength() < p)?;
                write!(f, " {} ", op.symbol())?;
                // left-associative: an equal-precedence right operand needs parens
                wrap(f, b, b.strength() <= p)
            }
            ExprKind::Pow(e, k) => {
                wrap(f, e, e.strength() < 5)?;
                if *k < 0 {
                    write!(f, "^({k})")
                } else {
                    write!(f, "^{k}")
                }
            }
        }
    }
}

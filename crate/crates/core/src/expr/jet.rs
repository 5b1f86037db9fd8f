//! Second-order forward-mode jets.

use super::ast::{BinOp, Expr, ExprKind, Func, Span};
use super::ExprError;

/// Value, gradient and dense symmetric Hessian of a scalar function of n
/// parameters. The Hessian is stored row-major and only ever written
/// through [`Jet2::set_hess`], which mirrors entries, so it is bitwise
/// symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    hess: Vec<f64>,
}

impl Jet2 {
    pub fn constant(value: f64, n: usize) -> Self {
        Self { value, grad: vec![0.0; n], hess: vec![0.0; n * n] }
    }

    pub fn variable(value: f64, index: usize, n: usize) -> Self {
        let mut j = Self::constant(value, n);
        j.grad[index] = 1.0;
        j
    }

    pub fn n(&self) -> usize {
        self.grad.len()
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.n() + j]
    }

    pub fn hessian(&self) -> &[f64] {
        &self.hess
    }

    fn set_hess(&mut self, i: usize, j: usize, v: f64) {
        let n = self.n();
        self.hess[i * n + j] = v;
        self.hess[j * n + i] = v;
    }

    /// f(self) given f(x), f'(x), f''(x) at x = self.value.
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let n = self.n();
        let mut out = Self::constant(f0, n);
        for i in 0..n {
            out.grad[i] = f1 * self.grad[i];
        }
        for i in 0..n {
            for j in i..n {
                out.set_hess(i, j, f1 * self.hess(i, j) + f2 * self.grad[i] * self.grad[j]);
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let n = self.n();
        let mut out = Self::constant(self.value + rhs.value, n);
        for i in 0..n {
            out.grad[i] = self.grad[i] + rhs.grad[i];
            for j in i..n {
                out.set_hess(i, j, self.hess(i, j) + rhs.hess(i, j));
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let n = self.n();
        let mut out = Self::constant(self.value - rhs.value, n);
        for i in 0..n {
            out.grad[i] = self.grad[i] - rhs.grad[i];
            for j in i..n {
                out.set_hess(i, j, self.hess(i, j) - rhs.hess(i, j));
            }
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.chain(-self.value, -1.0, 0.0)
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let (a, b) = (self, rhs);
        let n = a.n();
        let mut out = Self::constant(a.value * b.value, n);
        for i in 0..n {
            out.grad[i] = a.grad[i] * b.value + a.value * b.grad[i];
            for j in i..n {
                let h = a.hess(i, j) * b.value
                    + a.value * b.hess(i, j)
                    + a.grad[i] * b.grad[j]
                    + a.grad[j] * b.grad[i];
                out.set_hess(i, j, h);
            }
        }
        out
    }

    /// `None` when the divisor is zero.
    pub fn div(&self, rhs: &Self) -> Option<Self> {
        if rhs.value == 0.0 {
            return None;
        }
        let inv = rhs.value;
        Some(self.mul(&rhs.chain(1.0 / inv, -1.0 / (inv * inv), 2.0 / (inv * inv * inv))))
    }

    /// `None` for a negative power of zero.
    pub fn powi(&self, k: i32) -> Option<Self> {
        let x = self.value;
        if k == 0 {
            return Some(Self::constant(1.0, self.n()));
        }
        if k < 0 && x == 0.0 {
            return None;
        }
        let kf = k as f64;
        let f2 = if k == 1 { 0.0 } else { kf * (kf - 1.0) * x.powi(k - 2) };
        Some(self.chain(x.powi(k), kf * x.powi(k - 1), f2))
    }

    /// Applies `func`; `Err` carries a domain message.
    pub fn apply(&self, func: Func) -> Result<Self, String> {
        let x = self.value;
        Ok(match func {
            Func::Sin => self.chain(x.sin(), x.cos(), -x.sin()),
            Func::Cos => self.chain(x.cos(), -x.sin(), -x.cos()),
            Func::Sinh => self.chain(x.sinh(), x.cosh(), x.sinh()),
            Func::Cosh => self.chain(x.cosh(), x.sinh(), x.cosh()),
            Func::Tanh => {
                let t = x.tanh();
                let s = 1.0 - t * t;
                self.chain(t, s, -2.0 * t * s)
            }
            Func::Exp => {
                let e = x.exp();
                self.chain(e, e, e)
            }
            Func::Log => {
                if x <= 0.0 {
                    return Err(format!("log of non-positive value {x}"));
                }
                self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
            }
            Func::Sqrt => {
                if x <= 0.0 {
                    return Err(format!("sqrt is not differentiable at {x}"));
                }
                let s = x.sqrt();
                self.chain(s, 0.5 / s, -0.25 / (s * x))
            }
        })
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }
}

fn domain_error(span: Span, message: impl Into<String>) -> ExprError {
    ExprError::Domain { message: message.into(), span }
}

/// Propagates value, gradient and Hessian through every node of `ast`.
pub fn eval_jet2(ast: &Expr, u: &[f64]) -> Result<Jet2, ExprError> {
    let n = u.len();
    let out = match &ast.kind {
        ExprKind::Const(c) => Jet2::constant(*c, n),
        ExprKind::Pi => Jet2::constant(std::f64::consts::PI, n),
        ExprKind::Var(i) => {
            if *i >= n {
                return Err(ExprError::Unbound { index: *i, span: ast.span });
            }
            Jet2::variable(u[*i], *i, n)
        }
        ExprKind::Neg(e) => eval_jet2(e, u)?.neg(),
        ExprKind::Call(f, e) => {
            let inner = eval_jet2(e, u)?;
            inner.apply(*f).map_err(|m| domain_error(ast.span, m))?
        }
        ExprKind::Binary(op, a, b) => {
            let a = eval_jet2(a, u)?;
            let b = eval_jet2(b, u)?;
            match op {
                BinOp::Add => a.add(&b),
                BinOp::Sub => a.sub(&b),
                BinOp::Mul => a.mul(&b),
                BinOp::Div => a.div(&b).ok_or_else(|| domain_error(ast.span, "division by zero"))?,
            }
        }
        ExprKind::Pow(e, k) => eval_jet2(e, u)?
            .powi(*k)
            .ok_or_else(|| domain_error(ast.span, "negative power of zero"))?,
    };
    if !out.is_finite() {
        return Err(domain_error(ast.span, "non-finite result"));
    }
    Ok(out)
}

/// Value-only evaluation with the same domain checks.
pub fn eval_value(ast: &Expr, u: &[f64]) -> Result<f64, ExprError> {
    let v = match &ast.kind {
        ExprKind::Const(c) => *c,
        ExprKind::Pi => std::f64::consts::PI,
        ExprKind::Var(i) => *u.get(*i).ok_or(ExprError::Unbound { index: *i, span: ast.span })?,
        ExprKind::Neg(e) => -eval_value(e, u)?,
        ExprKind::Call(f, e) => {
            let x = eval_value(e, u)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Sinh => x.sinh(),
                Func::Cosh => x.cosh(),
                Func::Tanh => x.tanh(),
                Func::Exp => x.exp(),
                Func::Log if x <= 0.0 => {
                    return Err(domain_error(ast.span, format!("log of non-positive value {x}")))
                }
                Func::Log => x.ln(),
                Func::Sqrt if x <= 0.0 => {
                    return Err(domain_error(ast.span, format!("sqrt is not differentiable at {x}")))
                }
                Func::Sqrt => x.sqrt(),
            }
        }
        ExprKind::Binary(op, a, b) => {
            let (a, b) = (eval_value(a, u)?, eval_value(b, u)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div if b == 0.0 => return Err(domain_error(ast.span, "division by zero")),
                BinOp::Div => a / b,
            }
        }
        ExprKind::Pow(e, k) => {
            let x = eval_value(e, u)?;
            if *k < 0 && x == 0.0 {
                return Err(domain_error(ast.span, "negative power of zero"));
            }
            x.powi(*k)
        }
    };
    if !v.is_finite() {
        return Err(domain_error(ast.span, "non-finite result"));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_expr;
    use super::*;

    fn jet(src: &str, u: &[f64]) -> Jet2 {
        eval_jet2(&parse_expr(src, u.len()).unwrap(), u).unwrap()
    }

    #[test]
    fn bilinear() {
        let j = jet("u*v", &[2.0, 3.0]);
        assert_eq!(j.value, 6.0);
        assert_eq!(j.grad, vec![3.0, 2.0]);
        assert_eq!(j.hessian(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn cosh_cos_at_origin() {
        let j = jet("cosh(v)*cos(u)", &[0.0, 0.0]);
        assert_eq!(j.value, 1.0);
        assert_eq!(j.grad, vec![0.0, 0.0]);
        assert_eq!(j.hessian(), &[-1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn exp_sin_matches_finite_differences() {
        let src = "exp(sin(u)+v^2)";
        let ast = parse_expr(src, 2).unwrap();
        let u = [0.5, -0.3];
        let j = eval_jet2(&ast, &u).unwrap();
        let f = |x: f64, y: f64| eval_value(&ast, &[x, y]).unwrap();
        let h = 1e-4;
        let gx = (f(u[0] + h, u[1]) - f(u[0] - h, u[1])) / (2.0 * h);
        let gy = (f(u[0], u[1] + h) - f(u[0], u[1] - h)) / (2.0 * h);
        let hxx = (f(u[0] + h, u[1]) - 2.0 * j.value + f(u[0] - h, u[1])) / (h * h);
        let hyy = (f(u[0], u[1] + h) - 2.0 * j.value + f(u[0], u[1] - h)) / (h * h);
        let hxy = (f(u[0] + h, u[1] + h) - f(u[0] + h, u[1] - h) - f(u[0] - h, u[1] + h)
            + f(u[0] - h, u[1] - h))
            / (4.0 * h * h);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-12);
        assert!(rel(j.grad[0], gx) < 1e-6);
        assert!(rel(j.grad[1], gy) < 1e-6);
        assert!(rel(j.hess(0, 0), hxx) < 1e-6);
        assert!(rel(j.hess(1, 1), hyy) < 1e-6);
        assert!(rel(j.hess(0, 1), hxy) < 1e-6);
    }

    #[test]
    fn domain_errors_carry_spans() {
        let ast = parse_expr("u + log(v)", 2).unwrap();
        match eval_jet2(&ast, &[1.0, -1.0]).unwrap_err() {
            ExprError::Domain { span, message } => {
                assert_eq!(span, Span::new(4, 10));
                assert!(message.contains("log"));
            }
            other => panic!("{other:?}"),
        }
        let ast = parse_expr("1/(u - v)", 2).unwrap();
        assert!(matches!(eval_jet2(&ast, &[1.0, 1.0]), Err(ExprError::Domain { .. })));
        assert!(matches!(eval_value(&ast, &[1.0, 1.0]), Err(ExprError::Domain { .. })));
        let ast = parse_expr("sqrt(u)", 1).unwrap();
        assert!(eval_jet2(&ast, &[0.0]).is_err());
        let ast = parse_expr("exp(exp(u))", 1).unwrap();
        assert!(eval_jet2(&ast, &[10.0]).is_err());
    }

    #[test]
    fn powers() {
        let j = jet("u^3", &[2.0]);
        assert_eq!((j.value, j.grad[0], j.hess(0, 0)), (8.0, 12.0, 12.0));
        let j = jet("u^(-1)", &[2.0]);
        assert_eq!((j.value, j.grad[0], j.hess(0, 0)), (0.5, -0.25, 0.25));
        let j = jet("u^0", &[0.0]);
        assert_eq!(j.value, 1.0);
        assert!(eval_jet2(&parse_expr("u^-2", 1).unwrap(), &[0.0]).is_err());
    }
}

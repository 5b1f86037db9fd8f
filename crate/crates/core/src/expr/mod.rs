//! User-defined immersions: a small expression language evaluated with
//! second-order forward-mode differentiation.

mod ast;
mod jet;
mod parser;

use std::sync::Arc;

use thiserror::Error;

pub use ast::{var_name, BinOp, Expr, ExprKind, Func, Span};
pub use jet::{eval_jet2, eval_value, Jet2};
pub use parser::{parse_expr, parse_immersion};

use crate::geom::{ChartJet, ChartMap, GeomError, ImmersionChart, ParamDomain};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("lexer error at {span}: {message}")]
    Lex { message: String, span: Span },
    #[error("parse error at {span}: {message}")]
    Parse { message: String, span: Span },
    #[error("expected {expected} coordinate expressions, found {got}")]
    Count { expected: usize, got: usize, span: Span },
    #[error("domain error at {span}: {message}")]
    Domain { message: String, span: Span },
    #[error("variable u{} is not bound", index + 1)]
    Unbound { index: usize, span: Span },
    #[error("{0}")]
    Chart(String),
}

impl ExprError {
    pub fn span(&self) -> Option<Span> {
        match self {
            ExprError::Lex { span, .. }
            | ExprError::Parse { span, .. }
            | ExprError::Count { span, .. }
            | ExprError::Domain { span, .. }
            | ExprError::Unbound { span, .. } => Some(*span),
            ExprError::Chart(_) => None,
        }
    }

    /// Multi-line diagnostic with the offending source span underlined.
    pub fn render(&self, source: &str) -> String {
        let mut out = format!("error: {self}\n");
        if let Some(span) = self.span() {
            let start = span.start.min(source.len());
            let end = span.end.clamp(start, source.len());
            out.push_str(&format!("  | {source}\n  | "));
            out.push_str(&" ".repeat(source[..start].chars().count()));
            let width = source[start..end].chars().count().max(1);
            out.push_str(&"^".repeat(width));
            out.push('\n');
        }
        out
    }
}

/// An immersion whose coordinates are expression trees.
#[derive(Debug, Clone)]
pub struct ExprMap {
    coords: Vec<Expr>,
    n: usize,
}

impl ExprMap {
    pub fn new(coords: Vec<Expr>, n: usize) -> Result<Self, ExprError> {
        if coords.is_empty() {
            return Err(ExprError::Chart("no coordinate expressions".into()));
        }
        for e in &coords {
            if let Some(i) = e.max_var() {
                if i >= n {
                    return Err(ExprError::Unbound { index: i, span: e.span });
                }
            }
        }
        Ok(Self { coords, n })
    }

    pub fn coords(&self) -> &[Expr] {
        &self.coords
    }
}

impl ChartMap for ExprMap {
    fn dim(&self) -> usize {
        self.n
    }

    fn ambient_dim(&self) -> usize {
        self.coords.len()
    }

    fn jet(&self, u: &[f64]) -> Result<ChartJet, String> {
        let n = self.n;
        let mut out = ChartJet::zeros(n, self.coords.len());
        for (i, e) in self.coords.iter().enumerate() {
            let j = eval_jet2(e, u).map_err(|e| e.to_string())?;
            out.point[i] = j.value;
            out.jacobian[i * n..(i + 1) * n].copy_from_slice(&j.grad);
            out.hessian[i * n * n..(i + 1) * n * n].copy_from_slice(j.hessian());
        }
        Ok(out)
    }

    fn point(&self, u: &[f64]) -> Result<Vec<f64>, String> {
        self.coords
            .iter()
            .map(|e| eval_value(e, u).map_err(|e| e.to_string()))
            .collect()
    }
}

/// Wraps parsed coordinate expressions into a chart over `domain`.
pub fn chart_from_expressions(
    label: impl Into<String>,
    asts: Vec<Expr>,
    domain: ParamDomain,
) -> Result<ImmersionChart, ExprError> {
    let n = domain.dim();
    let map = ExprMap::new(asts, n)?;
    ImmersionChart::new(label, domain, Arc::new(map)).map_err(|e: GeomError| ExprError::Chart(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{gram_area_element, ParamAxis};

    #[test]
    fn plane_expression_has_unit_area_element() {
        let asts = parse_immersion("u; v; 0", 2, 3).unwrap();
        let domain = ParamDomain::new(vec![ParamAxis::real_line(); 2]).unwrap();
        let chart = chart_from_expressions("plane", asts, domain).unwrap();
        for u in [[0.0, 0.0], [3.0, -7.5], [1e3, 2.0]] {
            assert_eq!(gram_area_element(&chart, &u).unwrap(), 1.0);
        }
    }

    #[test]
    fn render_underlines_span() {
        let src = "u+*v";
        let err = parse_expr(src, 2).unwrap_err();
        let text = err.render(src);
        assert!(text.contains("  | u+*v\n  |   ^\n"), "{text}");
    }

    #[test]
    fn evaluation_errors_surface_through_the_chart() {
        let asts = parse_immersion("u; v; log(u)", 2, 3).unwrap();
        let domain = ParamDomain::new(vec![ParamAxis::real_line(); 2]).unwrap();
        let chart = chart_from_expressions("bad", asts, domain).unwrap();
        assert!(matches!(
            chart.jet(&[-1.0, 0.0]),
            Err(GeomError::Evaluation { .. })
        ));
    }
}

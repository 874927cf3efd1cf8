//! Abstract syntax of the source language.
//!
//! A program is a sequence of node declarations. Imported nodes declare an
//! external computation with a wcet bound; defined nodes carry equations.
//! The last defined node is the default main node.
//!
//! The pretty printer produces canonical source text: parsing its output
//! and printing again reproduces the same text, which the parser tests use
//! as the round-trip fixpoint.

use std::fmt;

use num_rational::Rational64;

use crate::diag::Span;

/// An identifier with its source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

/// Ground types; tuples arise structurally from expression shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Int,
    Bool,
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Int => write!(f, "int"),
            Ty::Bool => write!(f, "bool"),
        }
    }
}

/// A literal constant. `fby` initializers are restricted to this type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lit {
    Int(i64),
    Bool(bool),
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lit::Int(v) => write!(f, "{v}"),
            Lit::Bool(v) => write!(f, "{v}"),
        }
    }
}

/// A declared rate annotation `rate(n, p)`: period `n` time units, phase
/// `p * n` time units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateSpec {
    pub period: i64,
    pub phase: Rational64,
}

/// One declared parameter, input or output. Grouped declarations
/// (`a, b: int`) are flattened; each name keeps the group's annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: Option<Ty>,
    pub rate: Option<RateSpec>,
    pub due: Option<i64>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinOp::Add => write!(f, "+"),
            BinOp::Sub => write!(f, "-"),
            BinOp::Mul => write!(f, "*"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Lit(Lit),
    Var(String),
    Tuple(Vec<Expr>),
    /// `cst fby e`: the initializer, then `e` delayed by one period.
    Fby(Lit, Box<Expr>),
    /// Node application. Multiple arguments are positional.
    App(String, Vec<Expr>),
    /// `e /^ k`: keep the first value out of each `k`.
    Under(Box<Expr>, i64),
    /// `e *^ k`: repeat each value `k` times, `k` times faster.
    Over(Box<Expr>, i64),
    /// `e ~> q`: shift tags by `q` periods.
    Offset(Box<Expr>, Rational64),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    /// One name, or several for a multi-output application.
    pub lhs: Vec<Ident>,
    pub rhs: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportedNode {
    pub name: String,
    pub params: Vec<Param>,
    pub returns: Vec<Param>,
    pub wcet: i64,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefinedNode {
    pub name: String,
    pub params: Vec<Param>,
    pub returns: Vec<Param>,
    pub locals: Vec<Ident>,
    pub equations: Vec<Equation>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decl {
    Imported(ImportedNode),
    Defined(DefinedNode),
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::Imported(n) => &n.name,
            Decl::Defined(n) => &n.name,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Decl::Imported(n) => n.span,
            Decl::Defined(n) => n.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub decls: Vec<Decl>,
}

impl Program {
    /// The default main node: the last defined node of the file.
    pub fn default_main(&self) -> Option<&DefinedNode> {
        self.decls.iter().rev().find_map(|d| match d {
            Decl::Defined(n) => Some(n),
            Decl::Imported(_) => None,
        })
    }

    pub fn defined(&self, name: &str) -> Option<&DefinedNode> {
        self.decls.iter().find_map(|d| match d {
            Decl::Defined(n) if n.name == name => Some(n),
            _ => None,
        })
    }

    pub fn imported(&self, name: &str) -> Option<&ImportedNode> {
        self.decls.iter().find_map(|d| match d {
            Decl::Imported(n) if n.name == name => Some(n),
            _ => None,
        })
    }
}

/// Binding strength, used to decide where the printer needs parentheses.
/// `fby` binds loosest and the postfix clock operators bind tightest, so
/// `(0 fby x)*^3` keeps its parentheses while `0 fby x*^3` does not.
fn precedence(kind: &ExprKind) -> u8 {
    match kind {
        ExprKind::Fby(..) => 1,
        ExprKind::Binary(BinOp::Add | BinOp::Sub, ..) => 2,
        ExprKind::Binary(BinOp::Mul, ..) => 3,
        ExprKind::Neg(..) => 4,
        ExprKind::Under(..) | ExprKind::Over(..) | ExprKind::Offset(..) => 5,
        ExprKind::Lit(_) | ExprKind::Var(_) | ExprKind::Tuple(_) | ExprKind::App(..) => 6,
    }
}

fn fmt_rational(q: Rational64) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn fmt_expr(e: &Expr, out: &mut String, min_prec: u8) {
    let prec = precedence(&e.kind);
    let parens = prec < min_prec;
    if parens {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Lit(l) => out.push_str(&l.to_string()),
        ExprKind::Var(x) => out.push_str(x),
        ExprKind::Tuple(es) => {
            out.push('(');
            for (i, e) in es.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                fmt_expr(e, out, 0);
            }
            out.push(')');
        }
        ExprKind::Fby(c, e) => {
            out.push_str(&c.to_string());
            out.push_str(" fby ");
            // Right operand at the same level: fby extends maximally right.
            fmt_expr(e, out, 1);
        }
        ExprKind::App(n, args) => {
            out.push_str(n);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                fmt_expr(a, out, 0);
            }
            out.push(')');
        }
        ExprKind::Under(e, k) => {
            fmt_expr(e, out, 5);
            out.push_str(&format!(" /^ {k}"));
        }
        ExprKind::Over(e, k) => {
            fmt_expr(e, out, 5);
            out.push_str(&format!(" *^ {k}"));
        }
        ExprKind::Offset(e, q) => {
            fmt_expr(e, out, 5);
            out.push_str(&format!(" ~> {}", fmt_rational(*q)));
        }
        ExprKind::Binary(op, l, r) => {
            // Left associative: the right operand needs one level more.
            fmt_expr(l, out, prec);
            out.push_str(&format!(" {op} "));
            fmt_expr(r, out, prec + 1);
        }
        ExprKind::Neg(e) => {
            out.push('-');
            fmt_expr(e, out, 4);
        }
    }
    if parens {
        out.push(')');
    }
}

fn fmt_param(p: &Param, out: &mut String) {
    out.push_str(&p.name);
    let has_ann = p.ty.is_some() || p.rate.is_some() || p.due.is_some();
    if has_ann {
        out.push(':');
        if let Some(ty) = p.ty {
            out.push_str(&format!(" {ty}"));
        }
        if let Some(r) = p.rate {
            out.push_str(&format!(" rate({}, {})", r.period, fmt_rational(r.phase)));
        }
        if let Some(d) = p.due {
            out.push_str(&format!(" due {d}"));
        }
    }
}

fn fmt_params(ps: &[Param], out: &mut String) {
    out.push('(');
    for (i, p) in ps.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        fmt_param(p, out);
    }
    out.push(')');
}

/// Renders a program as canonical source text. Parsing the result yields a
/// structurally equal program, and printing again yields the same text.
pub fn pretty(p: &Program) -> String {
    let mut out = String::new();
    for (i, decl) in p.decls.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match decl {
            Decl::Imported(n) => {
                out.push_str(&format!("imported node {}", n.name));
                fmt_params(&n.params, &mut out);
                out.push_str(" returns ");
                fmt_params(&n.returns, &mut out);
                out.push_str(&format!(" wcet {};\n", n.wcet));
            }
            Decl::Defined(n) => {
                out.push_str(&format!("node {}", n.name));
                fmt_params(&n.params, &mut out);
                out.push_str(" returns ");
                fmt_params(&n.returns, &mut out);
                out.push('\n');
                if !n.locals.is_empty() {
                    let names: Vec<&str> = n.locals.iter().map(|l| l.name.as_str()).collect();
                    out.push_str(&format!("var {};\n", names.join(", ")));
                }
                out.push_str("let\n");
                for eq in &n.equations {
                    out.push_str("  ");
                    if eq.lhs.len() > 1 {
                        let names: Vec<&str> = eq.lhs.iter().map(|l| l.name.as_str()).collect();
                        out.push_str(&format!("({})", names.join(", ")));
                    } else {
                        out.push_str(&eq.lhs[0].name);
                    }
                    out.push_str(" = ");
                    fmt_expr(&eq.rhs, &mut out, 0);
                    out.push_str(";\n");
                }
                out.push_str("tel\n");
            }
        }
    }
    out
}

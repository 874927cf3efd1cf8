//! Recursive-descent parser producing a validated [`Program`].
//!
//! Operator binding, loosest to tightest: `fby`, then `+`/`-`, then `*`,
//! then unary `-`, then the postfix rate operators `/^k`, `*^k`, `~>q`.
//! `(0 fby x) *^ 3` therefore needs its parentheses, while the delayed
//! argument of `fby` extends maximally to the right.

use std::collections::HashSet;

use num_rational::Rational64;

use crate::ast::*;
use crate::diag::{Error, ErrorKind, Result, Span};
use crate::lexer::{lex, Tok, Token};

pub fn parse(src: &str) -> Result<Program> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let program = p.program()?;
    validate(&program)?;
    Ok(program)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<Token> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            Err(Error::new(
                ErrorKind::Parse,
                self.peek_span(),
                format!("expected {}, found {}", tok.describe(), self.peek().describe()),
            ))
        }
    }

    fn eat(&mut self, tok: Tok) -> bool {
        if *self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<Ident> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.peek_span();
                self.bump();
                Ok(Ident { name, span })
            }
            other => Err(Error::new(
                ErrorKind::Parse,
                self.peek_span(),
                format!("expected identifier, found {}", other.describe()),
            )),
        }
    }

    fn int(&mut self) -> Result<(i64, Span)> {
        match *self.peek() {
            Tok::Int(v) => {
                let span = self.peek_span();
                self.bump();
                Ok((v, span))
            }
            ref other => Err(Error::new(
                ErrorKind::Parse,
                self.peek_span(),
                format!("expected integer, found {}", other.describe()),
            )),
        }
    }

    /// `a`, `a/b`, or with a leading minus. Callers reject negatives where
    /// the grammar requires nonnegative values.
    fn rational(&mut self) -> Result<(Rational64, Span)> {
        let start = self.peek_span();
        let neg = self.eat(Tok::Minus);
        let (numer, _) = self.int()?;
        let mut denom = 1;
        if self.eat(Tok::Slash) {
            let (d, dspan) = self.int()?;
            if d == 0 {
                return Err(Error::new(ErrorKind::Parse, dspan, "zero denominator"));
            }
            denom = d;
        }
        let q = Rational64::new(if neg { -numer } else { numer }, denom);
        Ok((q, start))
    }

    fn program(&mut self) -> Result<Program> {
        let mut decls = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Imported => decls.push(Decl::Imported(self.imported_node()?)),
                Tok::Node => decls.push(Decl::Defined(self.defined_node()?)),
                other => {
                    return Err(Error::new(
                        ErrorKind::Parse,
                        self.peek_span(),
                        format!(
                            "expected `node` or `imported node`, found {}",
                            other.describe()
                        ),
                    ));
                }
            }
        }
        Ok(Program { decls })
    }

    fn imported_node(&mut self) -> Result<ImportedNode> {
        let start = self.peek_span();
        self.expect(Tok::Imported)?;
        self.expect(Tok::Node)?;
        let name = self.ident()?;
        let params = self.param_list()?;
        self.expect(Tok::Returns)?;
        let returns = self.param_list()?;
        self.expect(Tok::Wcet)?;
        let (wcet, wspan) = self.int()?;
        if wcet < 0 {
            return Err(Error::new(ErrorKind::Parse, wspan, "wcet must be nonnegative"));
        }
        self.expect(Tok::Semi)?;
        Ok(ImportedNode {
            name: name.name,
            params,
            returns,
            wcet,
            span: start,
        })
    }

    fn defined_node(&mut self) -> Result<DefinedNode> {
        let start = self.peek_span();
        self.expect(Tok::Node)?;
        let name = self.ident()?;
        let params = self.param_list()?;
        self.expect(Tok::Returns)?;
        let returns = self.param_list()?;
        let mut locals = Vec::new();
        if self.eat(Tok::Var) {
            loop {
                locals.push(self.ident()?);
                if !self.eat(Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::Semi)?;
        }
        self.expect(Tok::Let)?;
        let mut equations = Vec::new();
        while !self.eat(Tok::Tel) {
            equations.push(self.equation()?);
        }
        if equations.is_empty() {
            return Err(Error::new(
                ErrorKind::Parse,
                start,
                format!("node `{}` defines no equation", name.name),
            ));
        }
        Ok(DefinedNode {
            name: name.name,
            params,
            returns,
            locals,
            equations,
            span: start,
        })
    }

    /// `(a, b: int rate(10, 0); c: bool due 5)` — groups share annotations.
    fn param_list(&mut self) -> Result<Vec<Param>> {
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if self.eat(Tok::RParen) {
            return Ok(params);
        }
        loop {
            let mut group = vec![self.ident()?];
            while self.eat(Tok::Comma) {
                group.push(self.ident()?);
            }
            let mut ty = None;
            let mut rate = None;
            let mut due = None;
            if self.eat(Tok::Colon) {
                match self.peek() {
                    Tok::TyInt => {
                        self.bump();
                        ty = Some(Ty::Int);
                    }
                    Tok::TyBool => {
                        self.bump();
                        ty = Some(Ty::Bool);
                    }
                    _ => {}
                }
                if self.eat(Tok::Rate) {
                    self.expect(Tok::LParen)?;
                    let (period, pspan) = self.int()?;
                    if period <= 0 {
                        return Err(Error::new(
                            ErrorKind::Parse,
                            pspan,
                            "rate period must be positive",
                        ));
                    }
                    self.expect(Tok::Comma)?;
                    let (phase, phspan) = self.rational()?;
                    if phase < Rational64::new(0, 1) {
                        return Err(Error::new(
                            ErrorKind::Parse,
                            phspan,
                            "rate phase must be nonnegative",
                        ));
                    }
                    self.expect(Tok::RParen)?;
                    rate = Some(RateSpec { period, phase });
                }
                if self.eat(Tok::Due) {
                    let (d, dspan) = self.int()?;
                    if d < 0 {
                        return Err(Error::new(
                            ErrorKind::Parse,
                            dspan,
                            "deadline must be nonnegative",
                        ));
                    }
                    if let Some(r) = rate {
                        if d >= r.period {
                            return Err(Error::new(
                                ErrorKind::Parse,
                                dspan,
                                format!("deadline {d} must be less than the period {}", r.period),
                            ));
                        }
                    }
                    due = Some(d);
                }
                if ty.is_none() && rate.is_none() && due.is_none() {
                    return Err(Error::new(
                        ErrorKind::Parse,
                        self.peek_span(),
                        format!(
                            "expected a type, `rate`, or `due` after `:`, found {}",
                            self.peek().describe()
                        ),
                    ));
                }
            }
            for id in group {
                params.push(Param {
                    name: id.name,
                    ty,
                    rate,
                    due,
                    span: id.span,
                });
            }
            if self.eat(Tok::Semi) {
                continue;
            }
            self.expect(Tok::RParen)?;
            break;
        }
        Ok(params)
    }

    fn equation(&mut self) -> Result<Equation> {
        let start = self.peek_span();
        let lhs = if self.eat(Tok::LParen) {
            let mut ids = vec![self.ident()?];
            while self.eat(Tok::Comma) {
                ids.push(self.ident()?);
            }
            self.expect(Tok::RParen)?;
            ids
        } else {
            vec![self.ident()?]
        };
        self.expect(Tok::Equal)?;
        let rhs = self.expr()?;
        self.expect(Tok::Semi)?;
        Ok(Equation { lhs, rhs, span: start })
    }

    fn expr(&mut self) -> Result<Expr> {
        let lhs = self.additive()?;
        if *self.peek() == Tok::Fby {
            let fby_span = self.peek_span();
            self.bump();
            let init = literal_of(&lhs).ok_or_else(|| {
                Error::new(
                    ErrorKind::Parse,
                    lhs.span,
                    "`fby` initializer must be a literal constant",
                )
            })?;
            let rhs = self.expr()?;
            return Ok(Expr::new(ExprKind::Fby(init, Box::new(rhs)), fby_span));
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            let span = self.peek_span();
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Star {
            let span = self.peek_span();
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::new(
                ExprKind::Binary(BinOp::Mul, Box::new(lhs), Box::new(rhs)),
                span,
            );
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            let span = self.peek_span();
            self.bump();
            let e = self.unary()?;
            // A negated literal is a literal; `fby` initializers rely on it.
            if let ExprKind::Lit(Lit::Int(v)) = e.kind {
                return Ok(Expr::new(ExprKind::Lit(Lit::Int(-v)), span));
            }
            return Ok(Expr::new(ExprKind::Neg(Box::new(e)), span));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr> {
        let mut e = self.atom()?;
        loop {
            match self.peek() {
                Tok::UnderOp => {
                    let span = self.peek_span();
                    self.bump();
                    let (k, kspan) = self.int()?;
                    if k < 1 {
                        return Err(Error::new(ErrorKind::Parse, kspan, "`/^` factor must be >= 1"));
                    }
                    e = Expr::new(ExprKind::Under(Box::new(e), k), span);
                }
                Tok::OverOp => {
                    let span = self.peek_span();
                    self.bump();
                    let (k, kspan) = self.int()?;
                    if k < 1 {
                        return Err(Error::new(ErrorKind::Parse, kspan, "`*^` factor must be >= 1"));
                    }
                    e = Expr::new(ExprKind::Over(Box::new(e), k), span);
                }
                Tok::OffsetOp => {
                    let span = self.peek_span();
                    self.bump();
                    let (q, qspan) = self.rational()?;
                    if q < Rational64::new(0, 1) {
                        return Err(Error::new(
                            ErrorKind::Parse,
                            qspan,
                            "`~>` offset must be nonnegative",
                        ));
                    }
                    e = Expr::new(ExprKind::Offset(Box::new(e), q), span);
                }
                _ => break,
            }
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr> {
        let span = self.peek_span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::new(ExprKind::Lit(Lit::Int(v)), span))
            }
            Tok::True => {
                self.bump();
                Ok(Expr::new(ExprKind::Lit(Lit::Bool(true)), span))
            }
            Tok::False => {
                self.bump();
                Ok(Expr::new(ExprKind::Lit(Lit::Bool(false)), span))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.eat(Tok::LParen) {
                    let mut args = Vec::new();
                    if !self.eat(Tok::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(Tok::Comma) {
                                continue;
                            }
                            self.expect(Tok::RParen)?;
                            break;
                        }
                    }
                    Ok(Expr::new(ExprKind::App(name, args), span))
                } else {
                    Ok(Expr::new(ExprKind::Var(name), span))
                }
            }
            Tok::LParen => {
                self.bump();
                let first = self.expr()?;
                if self.eat(Tok::RParen) {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat(Tok::Comma) {
                    items.push(self.expr()?);
                }
                self.expect(Tok::RParen)?;
                Ok(Expr::new(ExprKind::Tuple(items), span))
            }
            other => Err(Error::new(
                ErrorKind::Parse,
                span,
                format!("expected an expression, found {}", other.describe()),
            )),
        }
    }
}

fn literal_of(e: &Expr) -> Option<Lit> {
    match e.kind {
        ExprKind::Lit(l) => Some(l),
        _ => None,
    }
}

/// Structural checks that need no inference: unique node names, every
/// output and local defined exactly once, all referenced names in scope,
/// applications target declared nodes, multi-output bindings target
/// applications.
fn validate(p: &Program) -> Result<()> {
    let mut names = HashSet::new();
    for decl in &p.decls {
        if !names.insert(decl.name().to_string()) {
            return Err(Error::new(
                ErrorKind::Name,
                decl.span(),
                format!("duplicate node name `{}`", decl.name()),
            ));
        }
    }
    if p.default_main().is_none() {
        return Err(Error::spanless(ErrorKind::Name, "main node not found"));
    }

    for decl in &p.decls {
        let node = match decl {
            Decl::Defined(n) => n,
            Decl::Imported(_) => continue,
        };
        let mut scope: HashSet<&str> = HashSet::new();
        for par in node.params.iter().chain(node.returns.iter()) {
            if !scope.insert(&par.name) {
                return Err(Error::new(
                    ErrorKind::Name,
                    par.span,
                    format!("duplicate parameter `{}` in node `{}`", par.name, node.name),
                ));
            }
        }
        for l in &node.locals {
            if !scope.insert(&l.name) {
                return Err(Error::new(
                    ErrorKind::Name,
                    l.span,
                    format!("duplicate local `{}` in node `{}`", l.name, node.name),
                ));
            }
        }

        let inputs: HashSet<&str> = node.params.iter().map(|p| p.name.as_str()).collect();
        let mut defined: HashSet<&str> = HashSet::new();
        for eq in &node.equations {
            for id in &eq.lhs {
                if inputs.contains(id.name.as_str()) {
                    return Err(Error::new(
                        ErrorKind::Name,
                        id.span,
                        format!("equation target `{}` is an input", id.name),
                    ));
                }
                if !scope.contains(id.name.as_str()) {
                    return Err(Error::new(
                        ErrorKind::Name,
                        id.span,
                        format!("equation target `{}` is not declared", id.name),
                    ));
                }
                if !defined.insert(&id.name) {
                    return Err(Error::new(
                        ErrorKind::Name,
                        id.span,
                        format!("duplicate equation target `{}`", id.name),
                    ));
                }
            }
            if eq.lhs.len() > 1 && !matches!(eq.rhs.kind, ExprKind::App(..)) {
                return Err(Error::new(
                    ErrorKind::Name,
                    eq.span,
                    "multi-output binding requires a node application",
                ));
            }
            check_expr_names(&eq.rhs, &scope, p, node)?;
        }
        for out in node.returns.iter().map(|p| &p.name) {
            if !defined.contains(out.as_str()) {
                return Err(Error::new(
                    ErrorKind::Name,
                    node.span,
                    format!("output `{out}` of node `{}` is never defined", node.name),
                ));
            }
        }
        for l in &node.locals {
            if !defined.contains(l.name.as_str()) {
                return Err(Error::new(
                    ErrorKind::Name,
                    l.span,
                    format!("local `{}` of node `{}` is never defined", l.name, node.name),
                ));
            }
        }
    }
    Ok(())
}

fn check_expr_names(
    e: &Expr,
    scope: &HashSet<&str>,
    p: &Program,
    node: &DefinedNode,
) -> Result<()> {
    match &e.kind {
        ExprKind::Lit(_) => Ok(()),
        ExprKind::Var(x) => {
            if scope.contains(x.as_str()) {
                Ok(())
            } else {
                Err(Error::new(
                    ErrorKind::Name,
                    e.span,
                    format!("unknown variable `{x}` in node `{}`", node.name),
                ))
            }
        }
        ExprKind::App(callee, args) => {
            if p.defined(callee).is_none() && p.imported(callee).is_none() {
                return Err(Error::new(
                    ErrorKind::Name,
                    e.span,
                    format!("unknown node `{callee}`"),
                ));
            }
            for a in args {
                check_expr_names(a, scope, p, node)?;
            }
            Ok(())
        }
        ExprKind::Tuple(es) => {
            for x in es {
                check_expr_names(x, scope, p, node)?;
            }
            Ok(())
        }
        ExprKind::Fby(_, x) | ExprKind::Under(x, _) | ExprKind::Over(x, _)
        | ExprKind::Offset(x, _) | ExprKind::Neg(x) => check_expr_names(x, scope, p, node),
        ExprKind::Binary(_, l, r) => {
            check_expr_names(l, scope, p, node)?;
            check_expr_names(r, scope, p, node)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::pretty;

    const FCS_MAIN: &str = "\
imported node PA(i: int) returns (o: int) wcet 1;
node FCS (pos_r: rate (120, 0); angle) returns (order: due 15)
var pos_i;
let
  pos_i = PA(pos_r /^ 12);
  order = PA(angle ~> 1/2);
tel
";

    #[test]
    fn parses_imported_node_declaration() {
        let p = parse("imported node PA(i: int) returns (o: int) wcet 1;\nnode M(x) returns (y)\nlet y = PA(x); tel").unwrap();
        let pa = p.imported("PA").unwrap();
        assert_eq!(pa.wcet, 1);
        assert_eq!(pa.params.len(), 1);
        assert_eq!(pa.params[0].ty, Some(Ty::Int));
        assert_eq!(pa.returns[0].name, "o");
    }

    #[test]
    fn parses_rate_and_due_annotations() {
        let p = parse(FCS_MAIN).unwrap();
        let fcs = p.defined("FCS").unwrap();
        let rate = fcs.params[0].rate.unwrap();
        assert_eq!(rate.period, 120);
        assert_eq!(rate.phase, Rational64::new(0, 1));
        assert_eq!(fcs.returns[0].due, Some(15));
    }

    #[test]
    fn fby_binds_loosest_and_postfix_tightest() {
        let p = parse(
            "node M(x) returns (y)\nvar z;\nlet\n  z = (0 fby x) *^ 3;\n  y = 1 fby x /^ 2;\ntel",
        )
        .unwrap();
        let m = p.defined("M").unwrap();
        assert!(matches!(m.equations[0].rhs.kind, ExprKind::Over(..)));
        assert!(matches!(m.equations[1].rhs.kind, ExprKind::Fby(..)));
    }

    #[test]
    fn fby_initializer_must_be_literal() {
        let err =
            parse("node M(x) returns (y)\nlet y = x fby x; tel").unwrap_err();
        assert!(err.to_string().contains("initializer"));
    }

    #[test]
    fn negative_offset_is_rejected() {
        let err = parse("node M(x) returns (y)\nlet y = x ~> -1/2; tel").unwrap_err();
        assert!(err.to_string().contains("nonnegative"));
    }

    #[test]
    fn negative_fby_initializer_parses() {
        let p = parse("node M(x) returns (y)\nlet y = -1 fby x; tel").unwrap();
        let m = p.defined("M").unwrap();
        assert!(matches!(
            m.equations[0].rhs.kind,
            ExprKind::Fby(Lit::Int(-1), _)
        ));
    }

    #[test]
    fn empty_body_is_rejected() {
        let err = parse("node M(x) returns (y)\nlet tel").unwrap_err();
        assert!(err.to_string().contains("defines no equation"));
    }

    #[test]
    fn duplicate_targets_are_rejected() {
        let err = parse("node M(x) returns (y)\nlet y = x; y = x; tel").unwrap_err();
        assert!(err.to_string().contains("duplicate equation target"));
    }

    #[test]
    fn unknown_variable_carries_its_span() {
        let err = parse("node M(x) returns (y)\nlet y = zz; tel").unwrap_err();
        let span = err.span.unwrap();
        assert_eq!(span.line, 2);
        assert_eq!(span.col, 9);
    }

    #[test]
    fn undefined_output_is_rejected() {
        let err = parse("node M(x) returns (y; z)\nlet y = x; tel").unwrap_err();
        assert!(err.to_string().contains("never defined"));
    }

    #[test]
    fn multi_output_binding_requires_application() {
        let err = parse("node M(x) returns (a; b)\nlet (a, b) = x; tel").unwrap_err();
        assert!(err.to_string().contains("node application"));
    }

    #[test]
    fn pretty_print_round_trip_is_a_fixpoint() {
        let p1 = parse(FCS_MAIN).unwrap();
        let s1 = pretty(&p1);
        let p2 = parse(&s1).unwrap();
        let s2 = pretty(&p2);
        assert_eq!(s1, s2);
    }
}

//! Node inlining.
//!
//! Replaces every application of a defined node by the callee's
//! equations, recursively, until the main node contains only imported
//! node applications, rate operators, delays and arithmetic. The result
//! is a program with a single defined node, which is what task graph
//! extraction consumes.
//!
//! Parameters are substituted by their argument expressions in a single
//! pass, so a callee parameter that shadows a caller variable cannot
//! capture it. An argument that contains a node application and is read
//! more than once in the callee body is first bound to a fresh local:
//! substituting it twice would duplicate the application, and every
//! application occurrence becomes one task later on. Callee locals are
//! renamed `{callee}_{instance}_{local}`; callee returns are renamed to
//! the caller's binding targets directly, so no copy equations appear.
//! All spans are carried over unchanged, keeping diagnostics on the
//! original source.
//!
//! Callers must have run the causality check first: it rejects recursive
//! node instantiation, which is what bounds the expansion.

use std::collections::{HashMap, HashSet};

use crate::ast::*;
use crate::diag::{Error, ErrorKind, Result};

const MAX_DEPTH: usize = 64;

/// The flattened program plus the deadline annotations that inlining
/// moved off inner node interfaces. A `due` on the output of an inlined
/// node constrains the flow now bound to a caller variable; the entry
/// maps that variable to the annotation value.
#[derive(Debug)]
pub struct Inlined {
    pub program: Program,
    pub dues: Vec<(String, i64)>,
}

pub fn inline(p: &Program, main: &str) -> Result<Inlined> {
    let node = p
        .defined(main)
        .ok_or_else(|| Error::spanless(ErrorKind::Name, format!("main node `{main}` not found")))?;

    let mut fl = Flattener {
        program: p,
        locals: node.locals.clone(),
        equations: Vec::new(),
        used: HashSet::new(),
        instances: HashMap::new(),
        dues: Vec::new(),
        depth: 0,
    };
    for par in node.params.iter().chain(node.returns.iter()) {
        fl.used.insert(par.name.clone());
    }
    for l in &node.locals {
        fl.used.insert(l.name.clone());
    }
    for eq in &node.equations {
        fl.expand_equation(eq.clone())?;
    }

    let flat = DefinedNode {
        name: node.name.clone(),
        params: node.params.clone(),
        returns: node.returns.clone(),
        locals: fl.locals,
        equations: fl.equations,
        span: node.span,
    };
    let mut decls: Vec<Decl> = p
        .decls
        .iter()
        .filter(|d| matches!(d, Decl::Imported(_)))
        .cloned()
        .collect();
    decls.push(Decl::Defined(flat));
    Ok(Inlined {
        program: Program { decls },
        dues: fl.dues,
    })
}

/// How one callee name rewrites during substitution.
enum Subst {
    /// Parameters become their argument expression, inserted verbatim.
    Replace(Expr),
    /// Returns and locals become another variable.
    Rename(String),
}

struct Flattener<'a> {
    program: &'a Program,
    locals: Vec<Ident>,
    equations: Vec<Equation>,
    used: HashSet<String>,
    instances: HashMap<String, usize>,
    dues: Vec<(String, i64)>,
    depth: usize,
}

impl Flattener<'_> {
    fn fresh(&mut self, base: String, span: crate::diag::Span) -> Ident {
        let mut name = base.clone();
        let mut n = 1;
        while !self.used.insert(name.clone()) {
            n += 1;
            name = format!("{base}_{n}");
        }
        let id = Ident { name, span };
        self.locals.push(id.clone());
        id
    }

    fn expand_equation(&mut self, eq: Equation) -> Result<()> {
        if let ExprKind::App(callee, args) = &eq.rhs.kind {
            if self.program.defined(callee).is_some() {
                let args = args
                    .iter()
                    .map(|a| self.expand_expr(a))
                    .collect::<Result<Vec<_>>>()?;
                return self.inline_call(callee, args, &eq.lhs);
            }
        }
        let rhs = self.expand_expr(&eq.rhs)?;
        self.equations.push(Equation {
            lhs: eq.lhs,
            rhs,
            span: eq.span,
        });
        Ok(())
    }

    /// Rewrites an expression, lifting any defined-node application in it
    /// to a fresh local bound by its own (inlined) equations.
    fn expand_expr(&mut self, e: &Expr) -> Result<Expr> {
        let kind = match &e.kind {
            ExprKind::Lit(_) | ExprKind::Var(_) => e.kind.clone(),
            ExprKind::Tuple(es) => ExprKind::Tuple(
                es.iter()
                    .map(|x| self.expand_expr(x))
                    .collect::<Result<Vec<_>>>()?,
            ),
            ExprKind::Fby(c, x) => ExprKind::Fby(*c, Box::new(self.expand_expr(x)?)),
            ExprKind::Under(x, k) => ExprKind::Under(Box::new(self.expand_expr(x)?), *k),
            ExprKind::Over(x, k) => ExprKind::Over(Box::new(self.expand_expr(x)?), *k),
            ExprKind::Offset(x, q) => ExprKind::Offset(Box::new(self.expand_expr(x)?), *q),
            ExprKind::Neg(x) => ExprKind::Neg(Box::new(self.expand_expr(x)?)),
            ExprKind::Binary(op, l, r) => ExprKind::Binary(
                *op,
                Box::new(self.expand_expr(l)?),
                Box::new(self.expand_expr(r)?),
            ),
            ExprKind::App(callee, args) => {
                let args = args
                    .iter()
                    .map(|a| self.expand_expr(a))
                    .collect::<Result<Vec<_>>>()?;
                match self.program.defined(callee) {
                    None => ExprKind::App(callee.clone(), args),
                    Some(node) => {
                        if node.returns.len() != 1 {
                            return Err(Error::new(
                                ErrorKind::Internal,
                                e.span,
                                "multi-output application in scalar position survived type checking",
                            ));
                        }
                        let k = *self.instances.get(callee.as_str()).unwrap_or(&0) + 1;
                        let out = self.fresh(
                            format!("{}_{}_{}", callee, k, node.returns[0].name),
                            e.span,
                        );
                        let callee = callee.clone();
                        self.inline_call(&callee, args, std::slice::from_ref(&out))?;
                        ExprKind::Var(out.name)
                    }
                }
            }
        };
        Ok(Expr::new(kind, e.span))
    }

    /// Splices one application of a defined node in place, binding its
    /// returns to `targets`. Arguments must already be expanded.
    fn inline_call(&mut self, callee: &str, args: Vec<Expr>, targets: &[Ident]) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(Error::spanless(
                ErrorKind::Internal,
                format!("inlining of node `{callee}` exceeds depth {MAX_DEPTH}"),
            ));
        }
        let node = self.program.defined(callee).expect("checked by callers");
        let k = self.instances.entry(callee.to_string()).or_insert(0);
        *k += 1;
        let k = *k;

        let mut map: HashMap<String, Subst> = HashMap::new();
        for (par, arg) in node.params.iter().zip(args) {
            if par.due.is_some() {
                return Err(Error::new(
                    ErrorKind::Extraction,
                    par.span,
                    format!(
                        "`due` on input `{}` of inlined node `{}` is not supported",
                        par.name, callee
                    ),
                ));
            }
            let uses: usize = node
                .equations
                .iter()
                .map(|eq| count_uses(&eq.rhs, &par.name))
                .sum();
            if uses >= 2 && contains_app(&arg) {
                let span = arg.span;
                let h = self.fresh(format!("{}_{}_{}", callee, k, par.name), span);
                self.equations.push(Equation {
                    lhs: vec![h.clone()],
                    rhs: arg,
                    span,
                });
                map.insert(par.name.clone(), Subst::Rename(h.name));
            } else {
                map.insert(par.name.clone(), Subst::Replace(arg));
            }
        }
        for (ret, tgt) in node.returns.iter().zip(targets) {
            if let Some(due) = ret.due {
                self.dues.push((tgt.name.clone(), due));
            }
            map.insert(ret.name.clone(), Subst::Rename(tgt.name.clone()));
        }
        for l in &node.locals {
            let id = self.fresh(format!("{}_{}_{}", callee, k, l.name), l.span);
            map.insert(l.name.clone(), Subst::Rename(id.name));
        }

        for eq in &node.equations {
            let lhs = eq
                .lhs
                .iter()
                .map(|id| {
                    let name = match map.get(&id.name) {
                        Some(Subst::Rename(n)) => n.clone(),
                        _ => id.name.clone(),
                    };
                    Ident {
                        name,
                        span: id.span,
                    }
                })
                .collect();
            let rhs = subst(&eq.rhs, &map);
            self.expand_equation(Equation {
                lhs,
                rhs,
                span: eq.span,
            })?;
        }
        self.depth -= 1;
        Ok(())
    }
}

/// One-pass substitution: replacements are inserted verbatim, never
/// re-traversed.
fn subst(e: &Expr, map: &HashMap<String, Subst>) -> Expr {
    let kind = match &e.kind {
        ExprKind::Var(x) => match map.get(x) {
            Some(Subst::Replace(arg)) => return arg.clone(),
            Some(Subst::Rename(n)) => ExprKind::Var(n.clone()),
            None => ExprKind::Var(x.clone()),
        },
        ExprKind::Lit(_) => e.kind.clone(),
        ExprKind::Tuple(es) => ExprKind::Tuple(es.iter().map(|x| subst(x, map)).collect()),
        ExprKind::Fby(c, x) => ExprKind::Fby(*c, Box::new(subst(x, map))),
        ExprKind::Under(x, k) => ExprKind::Under(Box::new(subst(x, map)), *k),
        ExprKind::Over(x, k) => ExprKind::Over(Box::new(subst(x, map)), *k),
        ExprKind::Offset(x, q) => ExprKind::Offset(Box::new(subst(x, map)), *q),
        ExprKind::Neg(x) => ExprKind::Neg(Box::new(subst(x, map))),
        ExprKind::Binary(op, l, r) => {
            ExprKind::Binary(*op, Box::new(subst(l, map)), Box::new(subst(r, map)))
        }
        ExprKind::App(f, args) => {
            ExprKind::App(f.clone(), args.iter().map(|x| subst(x, map)).collect())
        }
    };
    Expr::new(kind, e.span)
}

fn count_uses(e: &Expr, name: &str) -> usize {
    match &e.kind {
        ExprKind::Var(x) => usize::from(x == name),
        ExprKind::Lit(_) => 0,
        ExprKind::Tuple(es) => es.iter().map(|x| count_uses(x, name)).sum(),
        ExprKind::Fby(_, x)
        | ExprKind::Under(x, _)
        | ExprKind::Over(x, _)
        | ExprKind::Offset(x, _)
        | ExprKind::Neg(x) => count_uses(x, name),
        ExprKind::Binary(_, l, r) => count_uses(l, name) + count_uses(r, name),
        ExprKind::App(_, args) => args.iter().map(|x| count_uses(x, name)).sum(),
    }
}

fn contains_app(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::App(..) => true,
        ExprKind::Var(_) | ExprKind::Lit(_) => false,
        ExprKind::Tuple(es) => es.iter().any(contains_app),
        ExprKind::Fby(_, x)
        | ExprKind::Under(x, _)
        | ExprKind::Over(x, _)
        | ExprKind::Offset(x, _)
        | ExprKind::Neg(x) => contains_app(x),
        ExprKind::Binary(_, l, r) => contains_app(l) || contains_app(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causality::causality_check;
    use crate::clock::{clock_calculus, render_sig};
    use crate::parser::parse;
    use crate::types::type_check;

    const FCS: &str = include_str!("../tests/fixtures/fcs.mps");

    fn apps_in_order(node: &DefinedNode) -> Vec<String> {
        let mut out = Vec::new();
        for eq in &node.equations {
            collect(&eq.rhs, &mut out);
        }
        return out;

        fn collect(e: &Expr, out: &mut Vec<String>) {
            if let ExprKind::App(f, args) = &e.kind {
                out.push(f.clone());
                args.iter().for_each(|a| collect(a, out));
            } else {
                match &e.kind {
                    ExprKind::Tuple(es) => es.iter().for_each(|x| collect(x, out)),
                    ExprKind::Fby(_, x)
                    | ExprKind::Under(x, _)
                    | ExprKind::Over(x, _)
                    | ExprKind::Offset(x, _)
                    | ExprKind::Neg(x) => collect(x, out),
                    ExprKind::Binary(_, l, r) => {
                        collect(l, out);
                        collect(r, out);
                    }
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn flight_control_flattens_to_seven_applications() {
        let p = parse(FCS).unwrap();
        let flat = inline(&p, "FCS").unwrap().program;
        let defined_count = flat
            .decls
            .iter()
            .filter(|d| matches!(d, Decl::Defined(_)))
            .count();
        assert_eq!(defined_count, 1);
        let main = flat.defined("FCS").unwrap();
        assert_eq!(main.equations.len(), 7);
        assert_eq!(
            apps_in_order(main),
            ["NF", "NL", "PF", "PL", "PA", "AA", "FL"]
        );
        let names: Vec<&str> = main.locals.iter().map(|l| l.name.as_str()).collect();
        assert!(names.contains(&"navigation_1_pos_o"));
        assert!(names.contains(&"piloting_1_acc_o"));
    }

    #[test]
    fn flat_flight_control_still_analyses() {
        let p = parse(FCS).unwrap();
        let flat = inline(&p, "FCS").unwrap().program;
        type_check(&flat).unwrap();
        causality_check(&flat).unwrap();
        let clocks = clock_calculus(&flat, "FCS").unwrap();
        let (params, returns) = clocks.sig_of("FCS").unwrap();
        assert_eq!(
            render_sig(params, returns),
            "((120,0)*(10,0)*(10,0)*(10,0))->(40,0)"
        );
    }

    #[test]
    fn repeated_instantiations_get_disjoint_locals() {
        let p = parse(
            "imported node N(i: int) returns (o: int) wcet 1;\n\
             node W(x) returns (y)\nvar t;\nlet t = N(x); y = N(t); tel\n\
             node M(a: rate(10, 0)) returns (b, c)\nlet b = W(a); c = W(a); tel",
        )
        .unwrap();
        let flat = inline(&p, "M").unwrap().program;
        let main = flat.defined("M").unwrap();
        let names: Vec<&str> = main.locals.iter().map(|l| l.name.as_str()).collect();
        assert!(names.contains(&"W_1_t"));
        assert!(names.contains(&"W_2_t"));
        assert_eq!(main.equations.len(), 4);
    }

    #[test]
    fn programs_without_defined_calls_are_untouched() {
        let src = "imported node N(i: int) returns (o: int) wcet 1;\n\
                   node M(x: rate(8, 0)) returns (y)\nlet y = N(0 fby x); tel";
        let p = parse(src).unwrap();
        let flat = inline(&p, "M").unwrap().program;
        assert_eq!(crate::ast::pretty(&flat), crate::ast::pretty(&p));
    }

    #[test]
    fn application_arguments_read_twice_are_bound_once() {
        let p = parse(
            "imported node N(i: int) returns (o: int) wcet 1;\n\
             imported node M(i: int) returns (o: int) wcet 1;\n\
             node W(x) returns (y)\nvar t;\nlet t = M(x); y = M(t + x); tel\n\
             node Top(a: rate(10, 0)) returns (b)\nlet b = W(N(a)); tel",
        )
        .unwrap();
        let flat = inline(&p, "Top").unwrap().program;
        let main = flat.defined("Top").unwrap();
        let apps = apps_in_order(main);
        assert_eq!(apps.iter().filter(|n| *n == "N").count(), 1);
        assert!(main.locals.iter().any(|l| l.name == "W_1_x"));
    }

    #[test]
    fn inner_output_deadlines_move_to_the_binding() {
        let p = parse(
            "imported node N(i: int) returns (o: int) wcet 1;\n\
             node F(x) returns (o: due 5)\nlet o = N(x); tel\n\
             node M(a: rate(10, 0)) returns (b)\nvar v;\nlet v = F(a); b = N(v); tel",
        )
        .unwrap();
        let out = inline(&p, "M").unwrap();
        assert_eq!(out.dues, vec![("v".to_string(), 5)]);
    }

    #[test]
    fn inner_input_deadlines_are_rejected() {
        let p = parse(
            "imported node N(i: int) returns (o: int) wcet 1;\n\
             node F(x: due 5) returns (o)\nlet o = N(x); tel\n\
             node M(a: rate(10, 0)) returns (b)\nlet b = F(a); tel",
        )
        .unwrap();
        let err = inline(&p, "M").unwrap_err();
        assert!(err.to_string().contains("due"));
        assert!(err.to_string().contains("inlined"));
    }

    #[test]
    fn defined_application_under_an_operator_is_lifted() {
        let p = parse(
            "imported node N(i: int) returns (o: int) wcet 1;\n\
             node F(x) returns (o)\nlet o = N(x); tel\n\
             node M(a: rate(10, 0)) returns (b)\nlet b = F(a) /^ 2; tel",
        )
        .unwrap();
        let flat = inline(&p, "M").unwrap().program;
        let main = flat.defined("M").unwrap();
        assert_eq!(main.equations.len(), 2);
        assert!(main.locals.iter().any(|l| l.name == "F_1_o"));
        let last = &main.equations[1];
        assert!(matches!(last.rhs.kind, ExprKind::Under(..)));
    }
}

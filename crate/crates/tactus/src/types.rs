//! Type checking. The ground types are `int` and `bool`; tuples arise
//! structurally from multi-output applications and tuple expressions, so
//! every named variable has a scalar type.
//!
//! Inference is whole-program unification: each defined node gets one
//! monomorphic signature. Imported-node signatures come from their
//! declarations (unannotated imported parameters default to `int`).
//! Variables left unconstrained after solving also default to `int`.

use std::collections::BTreeMap;
use std::collections::HashMap;

use crate::ast::*;
use crate::diag::{Error, ErrorKind, Result, Span};

/// A node signature over scalar types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeSig {
    pub params: Vec<Ty>,
    pub returns: Vec<Ty>,
}

impl TypeSig {
    /// Paper-style rendering: `(int*int)->int`, single types unparenthesized.
    pub fn render(&self) -> String {
        fn side(tys: &[Ty]) -> String {
            if tys.len() == 1 {
                tys[0].to_string()
            } else {
                format!(
                    "({})",
                    tys.iter().map(|t| t.to_string()).collect::<Vec<_>>().join("*")
                )
            }
        }
        format!("{}->{}", side(&self.params), side(&self.returns))
    }
}

/// Checks the whole program and returns each node's signature.
pub fn type_check(p: &Program) -> Result<BTreeMap<String, TypeSig>> {
    let mut solver = Solver::default();

    // One variable per named flow of each defined node; declared types pin.
    let mut vars: HashMap<(String, String), usize> = HashMap::new();
    for decl in &p.decls {
        if let Decl::Defined(node) = decl {
            for par in node.params.iter().chain(node.returns.iter()) {
                let v = solver.fresh();
                if let Some(ty) = par.ty {
                    solver.set(v, ty, par.span)?;
                }
                vars.insert((node.name.clone(), par.name.clone()), v);
            }
            for l in &node.locals {
                let v = solver.fresh();
                vars.insert((node.name.clone(), l.name.clone()), v);
            }
        }
    }

    for decl in &p.decls {
        let node = match decl {
            Decl::Defined(n) => n,
            Decl::Imported(_) => continue,
        };
        for eq in &node.equations {
            let shape = infer_expr(&eq.rhs, node, p, &mut solver, &vars)?;
            bind_lhs(eq, &shape, node, &mut solver, &vars)?;
        }
    }

    let mut sigs = BTreeMap::new();
    for decl in &p.decls {
        match decl {
            Decl::Imported(n) => {
                sigs.insert(
                    n.name.clone(),
                    TypeSig {
                        params: n.params.iter().map(declared_ty).collect(),
                        returns: n.returns.iter().map(declared_ty).collect(),
                    },
                );
            }
            Decl::Defined(n) => {
                let mut tys = |ps: &[Param]| {
                    ps.iter()
                        .map(|par| solver.resolve(vars[&(n.name.clone(), par.name.clone())]))
                        .collect()
                };
                sigs.insert(
                    n.name.clone(),
                    TypeSig {
                        params: tys(&n.params),
                        returns: tys(&n.returns),
                    },
                );
            }
        }
    }
    Ok(sigs)
}

fn declared_ty(p: &Param) -> Ty {
    p.ty.unwrap_or(Ty::Int)
}

/// Type shape of an expression: scalar flows or a product of them.
enum Shape {
    Scalar(usize),
    Prod(Vec<usize>),
}

fn bind_lhs(
    eq: &Equation,
    shape: &Shape,
    node: &DefinedNode,
    solver: &mut Solver,
    vars: &HashMap<(String, String), usize>,
) -> Result<()> {
    let lhs_vars: Vec<usize> = eq
        .lhs
        .iter()
        .map(|id| vars[&(node.name.clone(), id.name.clone())])
        .collect();
    match shape {
        Shape::Scalar(v) => {
            if lhs_vars.len() != 1 {
                return Err(Error::new(
                    ErrorKind::Type,
                    eq.span,
                    format!("expected {} values, the expression produces 1", lhs_vars.len()),
                ));
            }
            solver.unify(lhs_vars[0], *v, eq.span)
        }
        Shape::Prod(vs) => {
            if lhs_vars.len() != vs.len() {
                return Err(Error::new(
                    ErrorKind::Type,
                    eq.span,
                    format!(
                        "expected {} values, the expression produces {}",
                        lhs_vars.len(),
                        vs.len()
                    ),
                ));
            }
            for (l, r) in lhs_vars.iter().zip(vs) {
                solver.unify(*l, *r, eq.span)?;
            }
            Ok(())
        }
    }
}

fn infer_expr(
    e: &Expr,
    node: &DefinedNode,
    p: &Program,
    solver: &mut Solver,
    vars: &HashMap<(String, String), usize>,
) -> Result<Shape> {
    let scalar = |e: &Expr, node, p, solver: &mut Solver, vars| -> Result<usize> {
        match infer_expr(e, node, p, solver, vars)? {
            Shape::Scalar(v) => Ok(v),
            Shape::Prod(_) => Err(Error::new(
                ErrorKind::Type,
                e.span,
                "a tuple cannot be used as a scalar value",
            )),
        }
    };
    match &e.kind {
        ExprKind::Lit(l) => {
            let v = solver.fresh();
            solver.set(v, lit_ty(*l), e.span)?;
            Ok(Shape::Scalar(v))
        }
        ExprKind::Var(x) => Ok(Shape::Scalar(vars[&(node.name.clone(), x.clone())])),
        ExprKind::Tuple(es) => {
            let mut out = Vec::new();
            for item in es {
                out.push(scalar(item, node, p, solver, vars)?);
            }
            Ok(Shape::Prod(out))
        }
        ExprKind::Fby(init, rest) => {
            let v = scalar(rest, node, p, solver, vars)?;
            solver.set(v, lit_ty(*init), e.span)?;
            Ok(Shape::Scalar(v))
        }
        ExprKind::Under(inner, _) | ExprKind::Over(inner, _) | ExprKind::Offset(inner, _) => {
            Ok(Shape::Scalar(scalar(inner, node, p, solver, vars)?))
        }
        ExprKind::Neg(inner) => {
            let v = scalar(inner, node, p, solver, vars)?;
            solver.set(v, Ty::Int, e.span)?;
            Ok(Shape::Scalar(v))
        }
        ExprKind::Binary(_, l, r) => {
            // +, - and * are integer operators.
            let lv = scalar(l, node, p, solver, vars)?;
            let rv = scalar(r, node, p, solver, vars)?;
            solver.set(lv, Ty::Int, l.span)?;
            solver.set(rv, Ty::Int, r.span)?;
            let v = solver.fresh();
            solver.set(v, Ty::Int, e.span)?;
            Ok(Shape::Scalar(v))
        }
        ExprKind::App(callee, args) => {
            let (param_vars, return_vars) = callee_vars(callee, p, solver, vars, e.span)?;
            if args.len() != param_vars.len() {
                return Err(Error::new(
                    ErrorKind::Type,
                    e.span,
                    format!(
                        "node `{callee}` expects {} arguments, got {}",
                        param_vars.len(),
                        args.len()
                    ),
                ));
            }
            for (arg, pv) in args.iter().zip(&param_vars) {
                let av = scalar(arg, node, p, solver, vars)?;
                solver.unify(av, *pv, arg.span)?;
            }
            if return_vars.len() == 1 {
                Ok(Shape::Scalar(return_vars[0]))
            } else {
                Ok(Shape::Prod(return_vars))
            }
        }
    }
}

/// Parameter and return variables of a callee. Imported nodes contribute
/// fresh pinned variables per call site; defined nodes contribute their
/// monomorphic signature variables.
fn callee_vars(
    callee: &str,
    p: &Program,
    solver: &mut Solver,
    vars: &HashMap<(String, String), usize>,
    span: Span,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if let Some(n) = p.imported(callee) {
        let pin = |ps: &[Param], solver: &mut Solver| -> Result<Vec<usize>> {
            ps.iter()
                .map(|par| {
                    let v = solver.fresh();
                    solver.set(v, declared_ty(par), par.span)?;
                    Ok(v)
                })
                .collect()
        };
        return Ok((pin(&n.params, solver)?, pin(&n.returns, solver)?));
    }
    if let Some(n) = p.defined(callee) {
        let get = |ps: &[Param]| {
            ps.iter()
                .map(|par| vars[&(n.name.clone(), par.name.clone())])
                .collect()
        };
        return Ok((get(&n.params), get(&n.returns)));
    }
    Err(Error::new(
        ErrorKind::Name,
        span,
        format!("unknown node `{callee}`"),
    ))
}

fn lit_ty(l: Lit) -> Ty {
    match l {
        Lit::Int(_) => Ty::Int,
        Lit::Bool(_) => Ty::Bool,
    }
}

/// Union-find over type variables with an optional resolved ground type.
#[derive(Default)]
struct Solver {
    parent: Vec<usize>,
    value: Vec<Option<Ty>>,
}

impl Solver {
    fn fresh(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.value.push(None);
        self.parent.len() - 1
    }

    fn find(&mut self, v: usize) -> usize {
        if self.parent[v] != v {
            let root = self.find(self.parent[v]);
            self.parent[v] = root;
        }
        self.parent[v]
    }

    fn set(&mut self, v: usize, ty: Ty, span: Span) -> Result<()> {
        let r = self.find(v);
        match self.value[r] {
            None => {
                self.value[r] = Some(ty);
                Ok(())
            }
            Some(old) if old == ty => Ok(()),
            Some(old) => Err(Error::new(
                ErrorKind::Type,
                span,
                format!("type mismatch: expected {old}, found {ty}"),
            )),
        }
    }

    fn unify(&mut self, a: usize, b: usize, span: Span) -> Result<()> {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return Ok(());
        }
        match (self.value[ra], self.value[rb]) {
            (Some(x), Some(y)) if x != y => {
                return Err(Error::new(
                    ErrorKind::Type,
                    span,
                    format!("type mismatch: expected {x}, found {y}"),
                ));
            }
            (None, Some(y)) => self.value[ra] = Some(y),
            _ => {}
        }
        self.parent[rb] = ra;
        Ok(())
    }

    /// Unconstrained variables default to `int`.
    fn resolve(&mut self, v: usize) -> Ty {
        let r = self.find(v);
        self.value[r].unwrap_or(Ty::Int)
    }
}

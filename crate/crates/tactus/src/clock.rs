//! Clock calculus over strictly periodic clocks.
//!
//! A clock `(n, p)` activates at `t_i = p*n + i*n`: period `n`, phase
//! `p*n` time units, both exact rationals. The rate operators transform
//! clocks deterministically: `/^k` multiplies the period, `*^k` divides
//! it, `~>q` adds `q*period` to the phase.
//!
//! Inference is unification with clock constants. Imported nodes are
//! applied point-wisely, so each application site introduces one clock
//! variable shared by all of its arguments and outputs; defined nodes get
//! one monomorphic signature. A transform constraint is evaluated once
//! its operand resolves, or inverted once its result resolves; programs
//! with constraints left over after the fixpoint are underconstrained and
//! rejected. Both directions matter in practice: a single `rate`
//! annotation on one flow typically determines every clock of a program
//! by flowing forwards and backwards through the rate operators.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_rational::Rational64;

use crate::ast::*;
use crate::diag::{Error, ErrorKind, Result, Span};
use crate::ratio::{radd, rdiv, rmul, rsub, show};

/// A strictly periodic clock. `phase` is in time units (already scaled by
/// the period), unlike the surface notation `(n, p)` where the phase is
/// `p * n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PClock {
    pub period: Rational64,
    pub phase: Rational64,
}

impl PClock {
    pub fn new(period: Rational64, phase: Rational64) -> Self {
        debug_assert!(period > Rational64::new(0, 1));
        debug_assert!(phase >= Rational64::new(0, 1));
        PClock { period, phase }
    }

    /// Renders in the surface `(period, phase/period)` notation.
    pub fn render(&self) -> String {
        let p = rdiv(self.phase, self.period).expect("phase/period fits");
        format!("({},{})", show(self.period), show(p))
    }
}

/// A clock transformation, the analysis-level image of `/^`, `*^`, `~>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockOp {
    Each(i64),
    Times(i64),
    Phase(Rational64),
}

/// Applies a transformation to a known clock.
pub fn apply_transform(c: PClock, op: ClockOp) -> Result<PClock> {
    let q = |v: i64| Rational64::new(v, 1);
    match op {
        ClockOp::Each(k) => Ok(PClock::new(rmul(c.period, q(k))?, c.phase)),
        ClockOp::Times(k) => Ok(PClock::new(rdiv(c.period, q(k))?, c.phase)),
        ClockOp::Phase(s) => Ok(PClock::new(c.period, radd(c.phase, rmul(s, c.period)?)?)),
    }
}

/// Recovers the operand clock from the result of a transformation.
pub fn invert_transform(result: PClock, op: ClockOp, span: Span) -> Result<PClock> {
    let q = |v: i64| Rational64::new(v, 1);
    match op {
        ClockOp::Each(k) => Ok(PClock::new(rdiv(result.period, q(k))?, result.phase)),
        ClockOp::Times(k) => Ok(PClock::new(rmul(result.period, q(k))?, result.phase)),
        ClockOp::Phase(s) => {
            let phase = rsub(result.phase, rmul(s, result.period)?)?;
            if phase < Rational64::new(0, 1) {
                return Err(Error::new(
                    ErrorKind::Clock,
                    span,
                    format!(
                        "offset `~> {}` would give its operand a negative phase",
                        show(s)
                    ),
                ));
            }
            Ok(PClock::new(result.period, phase))
        }
    }
}

/// Clocks of one expression: one entry per produced value (several only
/// for tuples and multi-output applications), and the children's clocks
/// in syntactic order.
#[derive(Debug, Clone)]
pub struct ExprClocks {
    pub clocks: Vec<PClock>,
    pub kids: Vec<ExprClocks>,
}

impl ExprClocks {
    pub fn single(&self) -> PClock {
        debug_assert_eq!(self.clocks.len(), 1);
        self.clocks[0]
    }
}

#[derive(Debug)]
pub struct ClockSolution {
    /// Signatures of the main node and every defined node it reaches,
    /// in declaration order.
    pub sigs: Vec<(String, Vec<PClock>, Vec<PClock>)>,
    /// Per reachable defined node: the clock tree of each equation's RHS.
    pub equations: BTreeMap<String, Vec<ExprClocks>>,
}

impl ClockSolution {
    pub fn sig_of(&self, node: &str) -> Option<(&[PClock], &[PClock])> {
        self.sigs
            .iter()
            .find(|(n, _, _)| n == node)
            .map(|(_, p, r)| (p.as_slice(), r.as_slice()))
    }
}

/// Paper-style signature rendering: `((120,0)*(10,0))->(40,0)`.
pub fn render_sig(params: &[PClock], returns: &[PClock]) -> String {
    fn side(cs: &[PClock]) -> String {
        if cs.len() == 1 {
            cs[0].render()
        } else {
            format!(
                "({})",
                cs.iter().map(|c| c.render()).collect::<Vec<_>>().join("*")
            )
        }
    }
    format!("{}->{}", side(params), side(returns))
}

pub fn clock_calculus(p: &Program, main: &str) -> Result<ClockSolution> {
    let reachable = reachable_defined(p, main);
    let mut solver = Solver::default();
    let mut vars: HashMap<(String, String), usize> = HashMap::new();

    for decl in &p.decls {
        let node = match decl {
            Decl::Defined(n) if reachable.contains(&n.name) => n,
            _ => continue,
        };
        for par in node.params.iter().chain(node.returns.iter()) {
            let v = solver.fresh();
            if let Some(r) = par.rate {
                let period = Rational64::new(r.period, 1);
                let clock = PClock::new(period, rmul(r.phase, period)?);
                solver.set(v, clock, par.span)?;
            }
            vars.insert((node.name.clone(), par.name.clone()), v);
        }
        for l in &node.locals {
            let v = solver.fresh();
            vars.insert((node.name.clone(), l.name.clone()), v);
        }
    }

    // Trees are collected per node in equation order.
    let mut trees: BTreeMap<String, Vec<VarTree>> = BTreeMap::new();
    for decl in &p.decls {
        let node = match decl {
            Decl::Defined(n) if reachable.contains(&n.name) => n,
            _ => continue,
        };
        let mut node_trees = Vec::new();
        for eq in &node.equations {
            let tree = gen_expr(&eq.rhs, node, p, &mut solver, &vars)?;
            let lhs_vars: Vec<usize> = eq
                .lhs
                .iter()
                .map(|id| vars[&(node.name.clone(), id.name.clone())])
                .collect();
            if lhs_vars.len() != tree.vars.len() {
                return Err(Error::new(
                    ErrorKind::Internal,
                    eq.span,
                    "equation arity survived type checking but not clocking",
                ));
            }
            for (l, r) in lhs_vars.iter().zip(&tree.vars) {
                solver.unify(*l, *r, eq.span)?;
            }
            node_trees.push(tree);
        }
        trees.insert(node.name.clone(), node_trees);
    }

    solver.solve()?;

    let mut sigs = Vec::new();
    for decl in &p.decls {
        let node = match decl {
            Decl::Defined(n) if reachable.contains(&n.name) => n,
            _ => continue,
        };
        let clocks_of = |ps: &[Param], solver: &mut Solver| -> Result<Vec<PClock>> {
            ps.iter()
                .map(|par| {
                    solver.resolved(vars[&(node.name.clone(), par.name.clone())], || {
                        Error::new(
                            ErrorKind::Clock,
                            par.span,
                            format!(
                                "clock of `{}` in node `{}` is underconstrained; add a rate annotation",
                                par.name, node.name
                            ),
                        )
                    })
                })
                .collect()
        };
        let params = clocks_of(&node.params, &mut solver)?;
        let returns = clocks_of(&node.returns, &mut solver)?;
        sigs.push((node.name.clone(), params, returns));
    }

    let mut equations = BTreeMap::new();
    for (name, node_trees) in trees {
        let mut eqs = Vec::new();
        for tree in node_trees {
            eqs.push(resolve_tree(&tree, &mut solver)?);
        }
        equations.insert(name, eqs);
    }

    Ok(ClockSolution { sigs, equations })
}

fn reachable_defined(p: &Program, main: &str) -> HashSet<String> {
    let mut seen = HashSet::new();
    let mut work = vec![main.to_string()];
    while let Some(name) = work.pop() {
        if !seen.insert(name.clone()) {
            continue;
        }
        if let Some(node) = p.defined(&name) {
            for eq in &node.equations {
                collect_callees(&eq.rhs, &mut |callee| {
                    if p.defined(callee).is_some() {
                        work.push(callee.to_string());
                    }
                });
            }
        }
    }
    seen
}

fn collect_callees(e: &Expr, f: &mut impl FnMut(&str)) {
    match &e.kind {
        ExprKind::App(name, args) => {
            f(name);
            for a in args {
                collect_callees(a, f);
            }
        }
        ExprKind::Tuple(es) => es.iter().for_each(|x| collect_callees(x, f)),
        ExprKind::Fby(_, x)
        | ExprKind::Under(x, _)
        | ExprKind::Over(x, _)
        | ExprKind::Offset(x, _)
        | ExprKind::Neg(x) => collect_callees(x, f),
        ExprKind::Binary(_, l, r) => {
            collect_callees(l, f);
            collect_callees(r, f);
        }
        ExprKind::Lit(_) | ExprKind::Var(_) => {}
    }
}

struct VarTree {
    vars: Vec<usize>,
    kids: Vec<VarTree>,
    span: Span,
}

fn gen_expr(
    e: &Expr,
    node: &DefinedNode,
    p: &Program,
    solver: &mut Solver,
    vars: &HashMap<(String, String), usize>,
) -> Result<VarTree> {
    let scalar_of = |t: &VarTree| -> Result<usize> {
        if t.vars.len() == 1 {
            Ok(t.vars[0])
        } else {
            Err(Error::new(
                ErrorKind::Internal,
                t.span,
                "tuple in scalar position survived type checking",
            ))
        }
    };
    match &e.kind {
        ExprKind::Lit(_) => Ok(VarTree {
            vars: vec![solver.fresh()],
            kids: vec![],
            span: e.span,
        }),
        ExprKind::Var(x) => Ok(VarTree {
            vars: vec![vars[&(node.name.clone(), x.clone())]],
            kids: vec![],
            span: e.span,
        }),
        ExprKind::Tuple(es) => {
            let mut kids = Vec::new();
            let mut out = Vec::new();
            for item in es {
                let t = gen_expr(item, node, p, solver, vars)?;
                out.push(scalar_of(&t)?);
                kids.push(t);
            }
            Ok(VarTree {
                vars: out,
                kids,
                span: e.span,
            })
        }
        ExprKind::Fby(_, rest) => {
            // The initializer adopts the clock of the delayed flow.
            let t = gen_expr(rest, node, p, solver, vars)?;
            let v = scalar_of(&t)?;
            Ok(VarTree {
                vars: vec![v],
                kids: vec![t],
                span: e.span,
            })
        }
        ExprKind::Under(inner, k) => gen_transform(inner, ClockOp::Each(*k), e.span, node, p, solver, vars),
        ExprKind::Over(inner, k) => gen_transform(inner, ClockOp::Times(*k), e.span, node, p, solver, vars),
        ExprKind::Offset(inner, q) => gen_transform(inner, ClockOp::Phase(*q), e.span, node, p, solver, vars),
        ExprKind::Neg(inner) => {
            let t = gen_expr(inner, node, p, solver, vars)?;
            let v = scalar_of(&t)?;
            Ok(VarTree {
                vars: vec![v],
                kids: vec![t],
                span: e.span,
            })
        }
        ExprKind::Binary(_, l, r) => {
            let lt = gen_expr(l, node, p, solver, vars)?;
            let rt = gen_expr(r, node, p, solver, vars)?;
            let lv = scalar_of(&lt)?;
            let rv = scalar_of(&rt)?;
            solver.unify(lv, rv, e.span)?;
            Ok(VarTree {
                vars: vec![lv],
                kids: vec![lt, rt],
                span: e.span,
            })
        }
        ExprKind::App(callee, args) => {
            let mut kids = Vec::new();
            let mut arg_vars = Vec::new();
            for a in args {
                let t = gen_expr(a, node, p, solver, vars)?;
                arg_vars.push(scalar_of(&t)?);
                kids.push(t);
            }
            if let Some(imp) = p.imported(callee) {
                // Point-wise application: one clock for the whole site.
                let site = solver.fresh();
                for (av, a) in arg_vars.iter().zip(args) {
                    solver.unify(*av, site, a.span)?;
                }
                Ok(VarTree {
                    vars: vec![site; imp.returns.len()],
                    kids,
                    span: e.span,
                })
            } else {
                let callee_node = p.defined(callee).expect("validated callee");
                for (av, par) in arg_vars.iter().zip(&callee_node.params) {
                    let pv = vars[&(callee_node.name.clone(), par.name.clone())];
                    solver.unify(*av, pv, e.span)?;
                }
                let rets: Vec<usize> = callee_node
                    .returns
                    .iter()
                    .map(|par| vars[&(callee_node.name.clone(), par.name.clone())])
                    .collect();
                Ok(VarTree {
                    vars: rets,
                    kids,
                    span: e.span,
                })
            }
        }
    }
}

fn gen_transform(
    inner: &Expr,
    op: ClockOp,
    span: Span,
    node: &DefinedNode,
    p: &Program,
    solver: &mut Solver,
    vars: &HashMap<(String, String), usize>,
) -> Result<VarTree> {
    let t = gen_expr(inner, node, p, solver, vars)?;
    if t.vars.len() != 1 {
        return Err(Error::new(
            ErrorKind::Internal,
            span,
            "tuple in scalar position survived type checking",
        ));
    }
    let operand = t.vars[0];
    let result = solver.fresh();
    solver.pending.push(Pending {
        result,
        op,
        operand,
        span,
    });
    Ok(VarTree {
        vars: vec![result],
        kids: vec![t],
        span,
    })
}

fn resolve_tree(t: &VarTree, solver: &mut Solver) -> Result<ExprClocks> {
    let clocks = t
        .vars
        .iter()
        .map(|&v| {
            solver.resolved(v, || {
                Error::new(
                    ErrorKind::Clock,
                    t.span,
                    "clock of this expression is underconstrained; add a rate annotation",
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let kids = t
        .kids
        .iter()
        .map(|k| resolve_tree(k, solver))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExprClocks { clocks, kids })
}

struct Pending {
    result: usize,
    op: ClockOp,
    operand: usize,
    span: Span,
}

#[derive(Default)]
struct Solver {
    parent: Vec<usize>,
    value: Vec<Option<PClock>>,
    pending: Vec<Pending>,
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

    fn set(&mut self, v: usize, clock: PClock, span: Span) -> Result<()> {
        let r = self.find(v);
        match self.value[r] {
            None => {
                self.value[r] = Some(clock);
                Ok(())
            }
            Some(old) if old == clock => Ok(()),
            Some(old) => Err(Error::new(
                ErrorKind::Clock,
                span,
                format!("clock mismatch: {} vs {}", old.render(), clock.render()),
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
                    ErrorKind::Clock,
                    span,
                    format!("clock mismatch: {} vs {}", x.render(), y.render()),
                ));
            }
            (None, Some(y)) => self.value[ra] = Some(y),
            _ => {}
        }
        self.parent[rb] = ra;
        Ok(())
    }

    /// Runs transform constraints to a fixpoint. Each pass evaluates any
    /// constraint whose operand is known and inverts any whose result is
    /// known; constraints that never fire leave the program rejected as
    /// underconstrained at resolution time.
    fn solve(&mut self) -> Result<()> {
        loop {
            let mut progressed = false;
            let mut remaining = Vec::new();
            for c in std::mem::take(&mut self.pending) {
                let op_val = {
                    let r = self.find(c.operand);
                    self.value[r]
                };
                let res_val = {
                    let r = self.find(c.result);
                    self.value[r]
                };
                match (op_val, res_val) {
                    (Some(operand), _) => {
                        let clock = apply_transform(operand, c.op)?;
                        self.set(c.result, clock, c.span)?;
                        progressed = true;
                    }
                    (None, Some(result)) => {
                        let clock = invert_transform(result, c.op, c.span)?;
                        self.set(c.operand, clock, c.span)?;
                        progressed = true;
                    }
                    (None, None) => remaining.push(c),
                }
            }
            self.pending = remaining;
            if self.pending.is_empty() || !progressed {
                return Ok(());
            }
        }
    }

    fn resolved(&mut self, v: usize, err: impl FnOnce() -> Error) -> Result<PClock> {
        let r = self.find(v);
        self.value[r].ok_or_else(err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn q(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn ck(period: i64, phase: i64) -> PClock {
        PClock::new(q(period, 1), q(phase, 1))
    }

    #[test]
    fn transforms_follow_the_definitions() {
        assert_eq!(
            apply_transform(ck(10, 0), ClockOp::Each(12)).unwrap(),
            ck(120, 0)
        );
        assert_eq!(
            apply_transform(ck(120, 0), ClockOp::Times(3)).unwrap(),
            ck(40, 0)
        );
        assert_eq!(
            apply_transform(ck(120, 0), ClockOp::Phase(q(1, 2))).unwrap(),
            ck(120, 60)
        );
        assert_eq!(
            apply_transform(ck(10, 0), ClockOp::Times(1)).unwrap(),
            ck(10, 0)
        );
    }

    #[test]
    fn times_then_each_restores_the_clock() {
        let c = PClock::new(q(10, 1), q(5, 2));
        for k in 1..=6 {
            let down = apply_transform(c, ClockOp::Times(k)).unwrap();
            assert_eq!(apply_transform(down, ClockOp::Each(k)).unwrap(), c);
        }
    }

    #[test]
    fn inversion_round_trips() {
        let span = Span::new(1, 1, 1);
        let c = ck(40, 10);
        for op in [ClockOp::Each(4), ClockOp::Times(2), ClockOp::Phase(q(1, 4))] {
            let r = apply_transform(c, op).unwrap();
            assert_eq!(invert_transform(r, op, span).unwrap(), c);
        }
    }

    #[test]
    fn rendering_uses_phase_over_period() {
        assert_eq!(ck(120, 0).render(), "(120,0)");
        assert_eq!(ck(10, 5).render(), "(10,1/2)");
        assert_eq!(PClock::new(q(10, 3), q(0, 1)).render(), "(10/3,0)");
    }

    #[test]
    fn one_annotation_determines_the_program() {
        let p = parse(
            "imported node N(i: int) returns (o: int) wcet 1;\n\
             node M(x: rate(40, 0)) returns (y)\nvar a;\nlet\n  a = N(x *^ 4);\n  y = N(a /^ 2);\ntel",
        )
        .unwrap();
        let s = clock_calculus(&p, "M").unwrap();
        let (params, returns) = s.sig_of("M").unwrap();
        assert_eq!(params[0], ck(40, 0));
        assert_eq!(returns[0], ck(20, 0));
        assert_eq!(render_sig(params, returns), "(40,0)->(20,0)");
    }

    #[test]
    fn backward_inference_through_a_transform() {
        // The annotation sits on the result of /^, not the operand.
        let p = parse(
            "imported node N(i: int) returns (o: int) wcet 1;\n\
             node M(x) returns (y: rate(120, 0))\nlet y = N(x /^ 12); tel",
        )
        .unwrap();
        let s = clock_calculus(&p, "M").unwrap();
        let (params, _) = s.sig_of("M").unwrap();
        assert_eq!(params[0], ck(10, 0));
    }

    #[test]
    fn mixing_rates_is_rejected() {
        let p = parse(
            "node M(a: rate(10, 0); b: rate(20, 0)) returns (y)\nlet y = a + b; tel",
        )
        .unwrap();
        let err = clock_calculus(&p, "M").unwrap_err();
        assert!(err.to_string().contains("clock mismatch"));
        assert!(err.to_string().contains("(10,0)"));
        assert!(err.to_string().contains("(20,0)"));
    }

    #[test]
    fn unconstrained_programs_are_rejected() {
        let p = parse("node M(x) returns (y)\nlet y = x; tel").unwrap();
        let err = clock_calculus(&p, "M").unwrap_err();
        assert!(err.to_string().contains("underconstrained"));
    }

    #[test]
    fn phase_annotation_scales_by_period() {
        let p = parse(
            "imported node N(i: int) returns (o: int) wcet 1;\n\
             node M(x: rate(10, 1/2)) returns (y)\nlet y = N(x); tel",
        )
        .unwrap();
        let s = clock_calculus(&p, "M").unwrap();
        let (params, _) = s.sig_of("M").unwrap();
        assert_eq!(params[0], PClock::new(q(10, 1), q(5, 1)));
    }

    #[test]
    fn fcs_shape_signature() {
        let src = "\
imported node PA(i: int) returns (o: int) wcet 1;
imported node AA(i: int) returns (o: int) wcet 1;
imported node FL(i: int) returns (o: int) wcet 3;
imported node PF(i: int) returns (o: int) wcet 4;
imported node PL(i1: int; i2: int; i3: int) returns (o: int) wcet 6;
imported node NF(i: int) returns (o: int) wcet 5;
imported node NL(i1: int; i2: int) returns (o: int) wcet 20;
node FCS (pos_r: rate (120, 0); angle, pos, acc) returns (order: due 15)
var acc_i, acc_r, angle_r, pos_i, pos_o, acc_o;
let
  pos_o = NF(pos_i /^ 12);
  acc_r = NL(pos_o, pos_r);
  acc_o = PF(acc_i /^ 4);
  order = PL(angle_r /^ 4, acc_o, (0 fby acc_r) *^ 3);
  pos_i = PA(pos);
  acc_i = AA(acc);
  angle_r = FL(angle);
tel
";
        let p = parse(src).unwrap();
        let s = clock_calculus(&p, "FCS").unwrap();
        let (params, returns) = s.sig_of("FCS").unwrap();
        assert_eq!(
            render_sig(params, returns),
            "((120,0)*(10,0)*(10,0)*(10,0))->(40,0)"
        );
    }
}

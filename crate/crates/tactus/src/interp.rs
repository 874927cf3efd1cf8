//! Reference interpreter of the synchronous semantics.
//!
//! The interpreter is the functional oracle the simulator is checked
//! against: it evaluates the flattened main node over symbolic values, one
//! value per (flow, instance). Imported nodes are never executed; the
//! application of node `N` at its `i`-th firing produces the opaque term
//! `N<i>(args)`. Two flows agree exactly when these terms are structurally
//! equal, which makes the comparison total and independent of what the
//! imported code would compute.
//!
//! Evaluation is demand driven and memoized per (expression occurrence,
//! instance index), so `fby` self references cost linear work in the
//! length of the evaluated prefix instead of re-running the history.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

use num_rational::Rational64;

use crate::ast::{BinOp, Expr, ExprKind, Lit, Program};
use crate::clock::{ClockSolution, PClock};
use crate::diag::{Error, ErrorKind, Result, Span};
use crate::ratio::exact_div;

/// A value of the synchronous semantics: a literal, or an opaque term
/// standing for one firing of an imported node or one sensor sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymValue {
    Lit(Lit),
    Node {
        /// Imported node or main input the value comes from.
        node: String,
        /// Which firing produced it.
        idx: i64,
        /// Which output of the node, 0 for single-output nodes.
        out: usize,
        /// The values the firing consumed, in argument order.
        args: Vec<Rc<SymValue>>,
    },
}

impl SymValue {
    pub fn lit(l: Lit) -> Rc<SymValue> {
        Rc::new(SymValue::Lit(l))
    }
}

impl fmt::Display for SymValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymValue::Lit(l) => write!(f, "{l}"),
            SymValue::Node {
                node,
                idx,
                out,
                args,
            } => {
                write!(f, "{node}<{idx}>")?;
                if *out > 0 {
                    write!(f, ".{out}")?;
                }
                write!(f, "(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A finite prefix of one flow: its clock in ticks and every (tag, value)
/// pair with tag below the requested horizon.
#[derive(Debug, Clone)]
pub struct Flow {
    /// Period in ticks.
    pub period: i64,
    /// Tag of instance 0, in ticks.
    pub phase: i64,
    pub rows: Vec<(i64, Rc<SymValue>)>,
}

/// One expression occurrence of the flattened program. The arena copies
/// the AST shape so evaluation can key its memo table by plain indices.
#[derive(Debug, Clone)]
struct ANode {
    kind: AKind,
    kids: Vec<usize>,
    span: Span,
}

#[derive(Debug, Clone)]
enum AKind {
    Lit(Lit),
    Var(String),
    Fby(Lit),
    App(String),
    Under(i64),
    Over(i64),
    Offset,
    Bin(BinOp),
    Neg,
    Tuple,
}

/// How a flow variable gets its values.
#[derive(Debug, Clone)]
enum Def {
    /// Input of the main node: a sensor stream of opaque samples.
    Input,
    /// Defined by a single-binding equation with this arena root.
    Rhs(usize),
    /// One output of a multi-binding application.
    AppOut { app: usize, pos: usize },
}

pub struct Interp {
    nodes: Vec<ANode>,
    /// Arena root of each equation's right-hand side.
    roots: Vec<usize>,
    defs: HashMap<String, Def>,
    /// Clock of each flow variable as (period, first tag), in ticks.
    var_clocks: HashMap<String, (i64, i64)>,
    hyperperiod: i64,
    memo: HashMap<(usize, i64), Rc<SymValue>>,
    /// Evaluations currently on the stack, to fail fast instead of
    /// overflowing if an instantaneous cycle ever reaches evaluation.
    running: HashSet<(usize, i64)>,
}

impl Interp {
    /// Prepares the flattened main node for evaluation. `tick` converts
    /// the solved clocks into integer ticks and `hyperperiod` (in ticks)
    /// bounds the horizons [`Interp::flow`] accepts.
    pub fn new(
        flat: &Program,
        main: &str,
        clocks: &ClockSolution,
        tick: Rational64,
        hyperperiod: i64,
    ) -> Result<Interp> {
        let node = flat
            .defined(main)
            .ok_or_else(|| Error::spanless(ErrorKind::Name, format!("main node `{main}` not found")))?;
        let (param_clocks, _) = clocks
            .sig_of(main)
            .ok_or_else(|| Error::internal("missing clock signature for the main node"))?;
        let eq_clocks = clocks
            .equations
            .get(main)
            .ok_or_else(|| Error::internal("missing equation clocks for the main node"))?;

        let scale = |c: &PClock| -> Result<(i64, i64)> {
            Ok((exact_div(c.period, tick)?, exact_div(c.phase, tick)?))
        };

        let mut interp = Interp {
            nodes: Vec::new(),
            roots: Vec::new(),
            defs: HashMap::new(),
            var_clocks: HashMap::new(),
            hyperperiod,
            memo: HashMap::new(),
            running: HashSet::new(),
        };

        for (par, clock) in node.params.iter().zip(param_clocks) {
            interp.defs.insert(par.name.clone(), Def::Input);
            interp.var_clocks.insert(par.name.clone(), scale(clock)?);
        }
        for (i, eq) in node.equations.iter().enumerate() {
            let root = interp.intern(&eq.rhs);
            interp.roots.push(root);
            let root_clocks = &eq_clocks[i].clocks;
            if eq.lhs.len() == 1 {
                interp.defs.insert(eq.lhs[0].name.clone(), Def::Rhs(root));
                interp
                    .var_clocks
                    .insert(eq.lhs[0].name.clone(), scale(&root_clocks[0])?);
            } else {
                for (pos, id) in eq.lhs.iter().enumerate() {
                    interp
                        .defs
                        .insert(id.name.clone(), Def::AppOut { app: root, pos });
                    interp
                        .var_clocks
                        .insert(id.name.clone(), scale(&root_clocks[pos])?);
                }
            }
        }
        Ok(interp)
    }

    fn intern(&mut self, e: &Expr) -> usize {
        let (kind, kid_exprs): (AKind, Vec<&Expr>) = match &e.kind {
            ExprKind::Lit(l) => (AKind::Lit(*l), vec![]),
            ExprKind::Var(x) => (AKind::Var(x.clone()), vec![]),
            ExprKind::Tuple(es) => (AKind::Tuple, es.iter().collect()),
            ExprKind::Fby(c, x) => (AKind::Fby(*c), vec![x]),
            ExprKind::App(n, args) => (AKind::App(n.clone()), args.iter().collect()),
            ExprKind::Under(x, k) => (AKind::Under(*k), vec![x]),
            ExprKind::Over(x, k) => (AKind::Over(*k), vec![x]),
            ExprKind::Offset(x, _) => (AKind::Offset, vec![x]),
            ExprKind::Binary(op, l, r) => (AKind::Bin(*op), vec![l, r]),
            ExprKind::Neg(x) => (AKind::Neg, vec![x]),
        };
        let kids = kid_exprs.into_iter().map(|k| self.intern(k)).collect();
        self.nodes.push(ANode {
            kind,
            kids,
            span: e.span,
        });
        self.nodes.len() - 1
    }

    pub fn hyperperiod(&self) -> i64 {
        self.hyperperiod
    }

    /// The value of flow variable `var` at instance `idx`.
    pub fn value_of(&mut self, var: &str, idx: i64) -> Result<Rc<SymValue>> {
        let def = self
            .defs
            .get(var)
            .cloned()
            .ok_or_else(|| Error::spanless(ErrorKind::Name, format!("unknown flow `{var}`")))?;
        self.eval_def(var, &def, idx)
    }

    /// The value at instance `idx` of the expression occurrence reached
    /// from equation `eq` by following `path` through child positions,
    /// the same addressing the task graph records for applications.
    pub fn value_at(&mut self, eq: usize, path: &[usize], idx: i64) -> Result<Rc<SymValue>> {
        let mut id = *self
            .roots
            .get(eq)
            .ok_or_else(|| Error::internal("equation index out of range"))?;
        for &step in path {
            id = *self
                .nodes[id]
                .kids
                .get(step)
                .ok_or_else(|| Error::internal("expression path out of range"))?;
        }
        self.eval(id, idx)
    }

    /// The prefix of flow `var` whose tags lie below `horizon` ticks.
    pub fn flow(&mut self, var: &str, horizon: i64) -> Result<Flow> {
        if horizon <= 0 {
            return Err(Error::spanless(
                ErrorKind::Usage,
                format!("horizon {horizon} is not positive"),
            ));
        }
        let (period, phase) = *self
            .var_clocks
            .get(var)
            .ok_or_else(|| Error::spanless(ErrorKind::Name, format!("unknown flow `{var}`")))?;
        let mut rows = Vec::new();
        let mut idx = 0i64;
        while phase + idx * period < horizon {
            rows.push((phase + idx * period, self.value_of(var, idx)?));
            idx += 1;
        }
        Ok(Flow {
            period,
            phase,
            rows,
        })
    }

    fn eval_def(&mut self, var: &str, def: &Def, idx: i64) -> Result<Rc<SymValue>> {
        match def {
            Def::Input => Ok(Rc::new(SymValue::Node {
                node: var.to_string(),
                idx,
                out: 0,
                args: Vec::new(),
            })),
            Def::Rhs(root) => self.eval(*root, idx),
            Def::AppOut { app, pos } => {
                let (name, kids) = match &self.nodes[*app].kind {
                    AKind::App(n) => (n.clone(), self.nodes[*app].kids.clone()),
                    _ => return Err(Error::internal("multi-binding over a non-application")),
                };
                let args = kids
                    .into_iter()
                    .map(|k| self.eval(k, idx))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Rc::new(SymValue::Node {
                    node: name,
                    idx,
                    out: *pos,
                    args,
                }))
            }
        }
    }

    fn eval(&mut self, id: usize, idx: i64) -> Result<Rc<SymValue>> {
        debug_assert!(idx >= 0, "flow instances are indexed from 0");
        if let Some(v) = self.memo.get(&(id, idx)) {
            return Ok(v.clone());
        }
        if !self.running.insert((id, idx)) {
            return Err(Error::internal(
                "instantaneous dependency cycle reached evaluation",
            ));
        }
        let out = self.eval_uncached(id, idx);
        self.running.remove(&(id, idx));
        let v = out?;
        self.memo.insert((id, idx), v.clone());
        Ok(v)
    }

    fn eval_uncached(&mut self, id: usize, idx: i64) -> Result<Rc<SymValue>> {
        let node = self.nodes[id].clone();
        match &node.kind {
            AKind::Lit(l) => Ok(SymValue::lit(*l)),
            AKind::Var(x) => {
                let def = self.defs.get(x).cloned().ok_or_else(|| {
                    Error::new(ErrorKind::Internal, node.span, "unresolved flow variable")
                })?;
                self.eval_def(x, &def, idx)
            }
            AKind::Fby(c) => {
                if idx == 0 {
                    Ok(SymValue::lit(*c))
                } else {
                    self.eval(node.kids[0], idx - 1)
                }
            }
            AKind::App(name) => {
                let args = node
                    .kids
                    .iter()
                    .map(|&k| self.eval(k, idx))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Rc::new(SymValue::Node {
                    node: name.clone(),
                    idx,
                    out: 0,
                    args,
                }))
            }
            AKind::Under(k) => {
                let inner = idx.checked_mul(*k).ok_or_else(|| {
                    Error::new(ErrorKind::Overflow, node.span, "flow instance index overflow")
                })?;
                self.eval(node.kids[0], inner)
            }
            AKind::Over(k) => self.eval(node.kids[0], idx / k),
            AKind::Offset => self.eval(node.kids[0], idx),
            AKind::Bin(op) => {
                let l = self.eval(node.kids[0], idx)?;
                let r = self.eval(node.kids[1], idx)?;
                match (&*l, &*r) {
                    (SymValue::Lit(Lit::Int(a)), SymValue::Lit(Lit::Int(b))) => {
                        let v = match op {
                            BinOp::Add => a.checked_add(*b),
                            BinOp::Sub => a.checked_sub(*b),
                            BinOp::Mul => a.checked_mul(*b),
                        }
                        .ok_or_else(|| {
                            Error::new(
                                ErrorKind::Overflow,
                                node.span,
                                "constant arithmetic overflows",
                            )
                        })?;
                        Ok(SymValue::lit(Lit::Int(v)))
                    }
                    _ => Err(Error::new(
                        ErrorKind::Extraction,
                        node.span,
                        "arithmetic between tasks is not supported; move it into an imported node",
                    )),
                }
            }
            AKind::Neg => {
                let v = self.eval(node.kids[0], idx)?;
                match &*v {
                    SymValue::Lit(Lit::Int(a)) => Ok(SymValue::lit(Lit::Int(-a))),
                    _ => Err(Error::new(
                        ErrorKind::Extraction,
                        node.span,
                        "arithmetic between tasks is not supported; move it into an imported node",
                    )),
                }
            }
            AKind::Tuple => Err(Error::new(
                ErrorKind::Internal,
                node.span,
                "tuple in scalar position survived type checking",
            )),
        }
    }
}

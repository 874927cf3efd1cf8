//! Task graph extraction.
//!
//! Turns a flattened program into a set of periodic tasks connected by
//! precedence edges. Every imported node application becomes one
//! computation task, every main input a sensor task, every main output
//! an actuator task, and every literal that feeds an application a
//! constant source task. Edges carry the list of rate operators found on
//! the path from the producing application to the consuming argument,
//! nearest the producer first, so `(0 fby acc_r) *^ 3` yields the
//! operator list `[fby, *^3]`.
//!
//! Extraction also normalizes time. The tick is the largest rational, at
//! most one source time unit, that divides every period, phase, wcet and
//! deadline annotation; capping it at one unit keeps programs written in
//! integer units in those units. All task attributes are integers in
//! ticks from here on.
//!
//! Task indices are deterministic: sensors in input order, then constant
//! sources, then computations in a topological order of the delay-free
//! precedence graph (ties broken by appearance order in the equations),
//! then actuators in output order. Later stages rely on this order to
//! break deadline ties, so it is part of the crate's contract.

use std::collections::HashMap;

use num_rational::Rational64;
use num_traits::Zero;

use crate::ast::*;
use crate::clock::{ClockSolution, ExprClocks, PClock};
use crate::diag::{Error, ErrorKind, Result, Span};
use crate::ops::{g_ops, over_before_delay, pword, PrecOp};
use crate::ratio::{exact_div, lcm_i64, rgcd, show};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Sensor,
    Constant,
    Computation,
    Actuator,
}

impl TaskKind {
    pub fn label(&self) -> &'static str {
        match self {
            TaskKind::Sensor => "sensor",
            TaskKind::Constant => "constant",
            TaskKind::Computation => "computation",
            TaskKind::Actuator => "actuator",
        }
    }
}

/// Where a task came from in the flat program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskOrigin {
    /// Index into the main node's parameters.
    Sensor(usize),
    /// The literal the task repeats forever.
    Constant(Lit),
    /// The application occurrence: equation index and child path from the
    /// equation's right-hand side root.
    Computation { eq: usize, path: Vec<usize> },
    /// Index into the main node's returns.
    Actuator(usize),
}

#[derive(Debug, Clone)]
pub struct Task {
    pub name: String,
    pub kind: TaskKind,
    pub origin: TaskOrigin,
    /// Imported node implementing this task (computations only).
    pub node: Option<String>,
    /// Clock in source time units.
    pub clock: PClock,
    /// Period in ticks.
    pub period: i64,
    /// First release in ticks.
    pub release: i64,
    /// Execution demand per instance in ticks.
    pub wcet: i64,
    /// Relative deadline bound from a `due` annotation, in ticks.
    pub due: Option<i64>,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub src: usize,
    /// Which output of the producer flows here.
    pub src_out: usize,
    pub dst: usize,
    /// Which argument of the consumer reads it.
    pub dst_port: usize,
    /// Rate operators on the path, nearest the producer first.
    pub ops: Vec<PrecOp>,
    /// `fby` initializers met on the path, outermost first.
    pub inits: Vec<Lit>,
    pub span: Span,
}

#[derive(Debug)]
pub struct TaskGraph {
    pub tasks: Vec<Task>,
    pub edges: Vec<Edge>,
    /// Source time units per tick.
    pub tick: Rational64,
    /// In ticks.
    pub hyperperiod: i64,
    pub utilization: Rational64,
}

impl TaskGraph {
    pub fn task(&self, name: &str) -> Option<(usize, &Task)> {
        self.tasks
            .iter()
            .enumerate()
            .find(|(_, t)| t.name == name)
    }

    /// Latest first release over all tasks, in ticks.
    pub fn max_release(&self) -> i64 {
        self.tasks.iter().map(|t| t.release).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    /// Demand of sensor tasks, in source time units.
    pub sensor_wcet: i64,
    /// Demand of actuator tasks, in source time units.
    pub actuator_wcet: i64,
    /// Upper bound on any period or release after normalization.
    pub tick_limit: i64,
    /// Deadline annotations recovered from inlined node outputs,
    /// keyed by flat variable name.
    pub inner_dues: Vec<(String, i64)>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            sensor_wcet: 0,
            actuator_wcet: 0,
            tick_limit: 10_000_000,
            inner_dues: Vec::new(),
        }
    }
}

pub fn extract(
    flat: &Program,
    main: &str,
    clocks: &ClockSolution,
    opts: &ExtractOptions,
) -> Result<TaskGraph> {
    let node = flat
        .defined(main)
        .ok_or_else(|| Error::spanless(ErrorKind::Name, format!("main node `{main}` not found")))?;
    let (param_clocks, return_clocks) = clocks
        .sig_of(main)
        .ok_or_else(|| Error::spanless(ErrorKind::Internal, "missing clock signature"))?;
    let eq_clocks = &clocks.equations[main];

    let mut ex = Extractor {
        program: flat,
        node,
        eq_clocks,
        tasks: Vec::new(),
        edges: Vec::new(),
        used_names: HashMap::new(),
        apps: HashMap::new(),
        constants: HashMap::new(),
        defs: HashMap::new(),
    };

    for (i, (par, clock)) in node.params.iter().zip(param_clocks).enumerate() {
        let name = ex.claim(&par.name);
        ex.tasks.push(ProtoTask {
            name,
            kind: TaskKind::Sensor,
            origin: TaskOrigin::Sensor(i),
            node: None,
            clock: *clock,
            wcet: Rational64::new(opts.sensor_wcet, 1),
            due: par.due,
        });
    }
    for (i, eq) in node.equations.iter().enumerate() {
        ex.register_apps(&eq.rhs, &eq_clocks[i], i, Vec::new())?;
        for id in &eq.lhs {
            ex.defs.insert(id.name.clone(), i);
        }
    }
    let first_actuator = ex.tasks.len();
    for (i, (ret, clock)) in node.returns.iter().zip(return_clocks).enumerate() {
        let name = ex.claim(&ret.name);
        ex.tasks.push(ProtoTask {
            name,
            kind: TaskKind::Actuator,
            origin: TaskOrigin::Actuator(i),
            node: None,
            clock: *clock,
            wcet: Rational64::new(opts.actuator_wcet, 1),
            due: ret.due,
        });
    }

    // Edges: one per consuming argument of each application, one per
    // actuator.
    let app_keys: Vec<(usize, Vec<usize>)> = {
        let mut ks: Vec<_> = ex.apps.iter().map(|(k, v)| (k.clone(), *v)).collect();
        ks.sort_by_key(|(_, idx)| *idx);
        ks.into_iter().map(|(k, _)| k).collect()
    };
    for key in app_keys {
        let task = ex.apps[&key];
        let (eq, path) = key;
        let (expr, ec) = locate(&ex.node.equations[eq].rhs, &ex.eq_clocks[eq], &path);
        let args = match &expr.kind {
            ExprKind::App(_, args) => args,
            _ => unreachable!("registered application"),
        };
        for (port, (arg, ac)) in args.iter().zip(&ec.kids).enumerate() {
            let (src, src_out, ops, inits) = ex.trace(arg, ac, Vec::new(), Vec::new())?;
            ex.push_edge(src, src_out, task, port, ops, inits, arg.span)?;
        }
    }
    for (i, ret) in node.returns.iter().enumerate() {
        let eq = *ex.defs.get(&ret.name).ok_or_else(|| {
            Error::spanless(ErrorKind::Internal, "undefined output survived validation")
        })?;
        let (src, src_out, ops, inits) =
            ex.trace_var(&ret.name, eq, Vec::new(), Vec::new(), ret.span)?;
        ex.push_edge(
            src,
            src_out,
            first_actuator + i,
            0,
            ops,
            inits,
            ret.span,
        )?;
    }

    // `due` annotations recovered from inlined nodes constrain the task
    // producing the named flow.
    let mut proto_dues: HashMap<usize, i64> = HashMap::new();
    for (name, due) in &opts.inner_dues {
        let eq = *ex.defs.get(name).ok_or_else(|| {
            Error::spanless(ErrorKind::Internal, "inlined deadline names unknown flow")
        })?;
        let rhs = &ex.node.equations[eq].rhs;
        if !matches!(rhs.kind, ExprKind::App(..)) {
            return Err(Error::new(
                ErrorKind::Extraction,
                rhs.span,
                format!("`due` annotation on re-sampled flow `{name}` is not supported"),
            ));
        }
        let task = ex.apps[&(eq, Vec::new())];
        let d = proto_dues.get(&task).copied().unwrap_or(i64::MAX).min(*due);
        proto_dues.insert(task, d);
    }
    let mut tasks = ex.tasks;
    for (task, due) in proto_dues {
        let d = tasks[task].due.map_or(due, |old| old.min(due));
        tasks[task].due = Some(d);
    }
    let edges = ex.edges;

    finish(tasks, edges, opts)
}

/// A task before tick normalization: wcet still rational source units.
struct ProtoTask {
    name: String,
    kind: TaskKind,
    origin: TaskOrigin,
    node: Option<String>,
    clock: PClock,
    wcet: Rational64,
    due: Option<i64>,
}

struct ProtoEdge {
    src: usize,
    src_out: usize,
    dst: usize,
    dst_port: usize,
    ops: Vec<PrecOp>,
    inits: Vec<Lit>,
    span: Span,
}

struct Extractor<'a> {
    program: &'a Program,
    node: &'a DefinedNode,
    eq_clocks: &'a [ExprClocks],
    tasks: Vec<ProtoTask>,
    edges: Vec<ProtoEdge>,
    used_names: HashMap<String, usize>,
    /// Application occurrence (equation, path) to task index.
    apps: HashMap<(usize, Vec<usize>), usize>,
    /// Constant source per (literal, clock).
    constants: HashMap<(Lit, PClock), usize>,
    /// Defining equation of each flow variable.
    defs: HashMap<String, usize>,
}

impl Extractor<'_> {
    fn claim(&mut self, base: &str) -> String {
        match self.used_names.get_mut(base) {
            None => {
                self.used_names.insert(base.to_string(), 1);
                base.to_string()
            }
            Some(n) => {
                *n += 1;
                let name = format!("{}_{}", base, n);
                self.claim(&name)
            }
        }
    }

    fn register_apps(
        &mut self,
        e: &Expr,
        ec: &ExprClocks,
        eq: usize,
        path: Vec<usize>,
    ) -> Result<()> {
        if let ExprKind::App(callee, _) = &e.kind {
            let imp = self.program.imported(callee).ok_or_else(|| {
                Error::new(
                    ErrorKind::Internal,
                    e.span,
                    "defined node application survived inlining",
                )
            })?;
            let name = self.claim(callee);
            let wcet = Rational64::new(imp.wcet, 1);
            self.apps.insert((eq, path.clone()), self.tasks.len());
            self.tasks.push(ProtoTask {
                name,
                kind: TaskKind::Computation,
                origin: TaskOrigin::Computation {
                    eq,
                    path: path.clone(),
                },
                node: Some(callee.clone()),
                clock: ec.clocks[0],
                wcet,
                due: None,
            });
        }
        for (i, (kid, kc)) in kids_of(e).into_iter().zip(&ec.kids).enumerate() {
            let mut p = path.clone();
            p.push(i);
            self.register_apps(kid, kc, eq, p)?;
        }
        Ok(())
    }

    /// Follows a consumer argument inward to the producing task,
    /// collecting the rate operators met on the way. `ops` accumulates
    /// with the operator nearest the producer at the head.
    fn trace(
        &mut self,
        e: &Expr,
        ec: &ExprClocks,
        ops: Vec<PrecOp>,
        visited: Vec<String>,
    ) -> Result<(usize, usize, Vec<PrecOp>, Vec<Lit>)> {
        match &e.kind {
            ExprKind::Var(x) => {
                if let Some(par) = self.node.params.iter().position(|p| &p.name == x) {
                    return Ok((par, 0, ops, Vec::new()));
                }
                let eq = *self.defs.get(x).ok_or_else(|| {
                    Error::new(ErrorKind::Internal, e.span, "unresolved flow variable")
                })?;
                self.trace_var(x, eq, ops, visited, e.span)
            }
            ExprKind::Lit(l) => {
                let clock = ec.clocks[0];
                let key = (*l, clock);
                let task = match self.constants.get(&key) {
                    Some(t) => *t,
                    None => {
                        let name = self.claim(&format!("const_{}", render_lit(l)));
                        let t = self.tasks.len();
                        self.tasks.push(ProtoTask {
                            name,
                            kind: TaskKind::Constant,
                            origin: TaskOrigin::Constant(*l),
                            node: None,
                            clock,
                            wcet: Rational64::zero(),
                            due: None,
                        });
                        self.constants.insert(key, t);
                        t
                    }
                };
                Ok((task, 0, ops, Vec::new()))
            }
            ExprKind::App(..) => {
                // Registered in the first pass; find its occurrence key by
                // pointer-free lookup: the occurrence is identified when the
                // caller walks paths, so recover it from the registry.
                let task = self
                    .apps
                    .iter()
                    .find(|(key, _)| {
                        let (root, _) =
                            locate(&self.node.equations[key.0].rhs, &self.eq_clocks[key.0], &key.1);
                        std::ptr::eq(root, e)
                    })
                    .map(|(_, t)| *t)
                    .ok_or_else(|| {
                        Error::new(ErrorKind::Internal, e.span, "unregistered application")
                    })?;
                Ok((task, 0, ops, Vec::new()))
            }
            ExprKind::Fby(init, inner) => {
                let mut ops2 = Vec::with_capacity(ops.len() + 1);
                ops2.push(PrecOp::Delay);
                ops2.extend(ops);
                let (src, out, ops3, mut inits) =
                    self.trace(inner, &ec.kids[0], ops2, visited)?;
                inits.insert(0, *init);
                Ok((src, out, ops3, inits))
            }
            ExprKind::Under(inner, k) => {
                let mut ops2 = Vec::with_capacity(ops.len() + 1);
                ops2.push(PrecOp::Under(*k));
                ops2.extend(ops);
                self.trace(inner, &ec.kids[0], ops2, visited)
            }
            ExprKind::Over(inner, k) => {
                let mut ops2 = Vec::with_capacity(ops.len() + 1);
                ops2.push(PrecOp::Over(*k));
                ops2.extend(ops);
                self.trace(inner, &ec.kids[0], ops2, visited)
            }
            ExprKind::Offset(inner, q) => {
                let mut ops2 = Vec::with_capacity(ops.len() + 1);
                ops2.push(PrecOp::Offset(*q));
                ops2.extend(ops);
                self.trace(inner, &ec.kids[0], ops2, visited)
            }
            ExprKind::Binary(..) | ExprKind::Neg(_) => Err(Error::new(
                ErrorKind::Extraction,
                e.span,
                "arithmetic between tasks is not supported; move it into an imported node",
            )),
            ExprKind::Tuple(_) => Err(Error::new(
                ErrorKind::Internal,
                e.span,
                "tuple in scalar position survived type checking",
            )),
        }
    }

    fn trace_var(
        &mut self,
        x: &str,
        eq: usize,
        ops: Vec<PrecOp>,
        mut visited: Vec<String>,
        span: Span,
    ) -> Result<(usize, usize, Vec<PrecOp>, Vec<Lit>)> {
        if visited.iter().any(|v| v == x) {
            return Err(Error::new(
                ErrorKind::Extraction,
                span,
                format!("flow `{x}` is not produced by any node application"),
            ));
        }
        visited.push(x.to_string());
        let equation = &self.node.equations[eq];
        if equation.lhs.len() > 1 {
            // Validation only admits applications on multi-bindings.
            let out = equation
                .lhs
                .iter()
                .position(|id| id.name == x)
                .expect("defs maps lhs names");
            let task = self.apps[&(eq, Vec::new())];
            return Ok((task, out, ops, Vec::new()));
        }
        self.trace(&equation.rhs, &self.eq_clocks[eq], ops, visited)
    }

    #[allow(clippy::too_many_arguments)]
    fn push_edge(
        &mut self,
        src: usize,
        src_out: usize,
        dst: usize,
        dst_port: usize,
        ops: Vec<PrecOp>,
        inits: Vec<Lit>,
        span: Span,
    ) -> Result<()> {
        if over_before_delay(&ops) {
            return Err(Error::new(
                ErrorKind::Extraction,
                span,
                "`fby` applied to an over-sampled flow is not supported; apply `*^` after the delay",
            ));
        }
        self.edges.push(ProtoEdge {
            src,
            src_out,
            dst,
            dst_port,
            ops,
            inits,
            span,
        });
        Ok(())
    }
}

fn kids_of(e: &Expr) -> Vec<&Expr> {
    match &e.kind {
        ExprKind::Lit(_) | ExprKind::Var(_) => vec![],
        ExprKind::Tuple(es) => es.iter().collect(),
        ExprKind::Fby(_, x)
        | ExprKind::Under(x, _)
        | ExprKind::Over(x, _)
        | ExprKind::Offset(x, _)
        | ExprKind::Neg(x) => vec![x],
        ExprKind::Binary(_, l, r) => vec![l, r],
        ExprKind::App(_, args) => args.iter().collect(),
    }
}

fn locate<'a>(e: &'a Expr, ec: &'a ExprClocks, path: &[usize]) -> (&'a Expr, &'a ExprClocks) {
    let mut cur = (e, ec);
    for &i in path {
        cur = (kids_of(cur.0)[i], &cur.1.kids[i]);
    }
    cur
}

fn render_lit(l: &Lit) -> String {
    match l {
        Lit::Int(v) => v.to_string(),
        Lit::Bool(b) => b.to_string(),
    }
}

/// Normalizes time and orders tasks.
fn finish(protos: Vec<ProtoTask>, edges: Vec<ProtoEdge>, opts: &ExtractOptions) -> Result<TaskGraph> {
    let one = Rational64::new(1, 1);
    let mut tick = Rational64::zero();
    for t in &protos {
        tick = rgcd(tick, t.clock.period)?;
        if !t.clock.phase.is_zero() {
            tick = rgcd(tick, t.clock.phase)?;
        }
        if !t.wcet.is_zero() {
            tick = rgcd(tick, t.wcet)?;
        }
        if let Some(d) = t.due {
            tick = rgcd(tick, Rational64::new(d, 1))?;
        }
    }
    if tick.is_zero() || tick > one {
        tick = one;
    }

    let mut tasks = Vec::with_capacity(protos.len());
    for p in protos {
        let period = exact_div(p.clock.period, tick)?;
        let release = exact_div(p.clock.phase, tick)?;
        if period > opts.tick_limit || release > opts.tick_limit {
            return Err(Error::spanless(
                ErrorKind::Overflow,
                format!(
                    "period of task `{}` is {} ticks at tick {}, above the limit {}",
                    p.name,
                    period.max(release),
                    show(tick),
                    opts.tick_limit
                ),
            ));
        }
        tasks.push(Task {
            name: p.name,
            kind: p.kind,
            origin: p.origin,
            node: p.node,
            clock: p.clock,
            period,
            release,
            wcet: exact_div(p.wcet, tick)?,
            due: p.due.map(|d| exact_div(Rational64::new(d, 1), tick)).transpose()?,
        });
    }

    validate_edges(&tasks, &edges)?;
    let order = schedule_order(&tasks, &edges);
    let mut place = vec![0usize; order.len()];
    for (new, &old) in order.iter().enumerate() {
        place[old] = new;
    }
    let mut ordered: Vec<Option<Task>> = tasks.into_iter().map(Some).collect();
    let tasks: Vec<Task> = order
        .iter()
        .map(|&old| ordered[old].take().expect("permutation"))
        .collect();
    let edges: Vec<Edge> = edges
        .into_iter()
        .map(|e| Edge {
            src: place[e.src],
            src_out: e.src_out,
            dst: place[e.dst],
            dst_port: e.dst_port,
            ops: e.ops,
            inits: e.inits,
            span: e.span,
        })
        .collect();

    let mut hyperperiod = 1i64;
    let mut utilization = Rational64::zero();
    for t in &tasks {
        hyperperiod = lcm_i64(hyperperiod, t.period)?;
        utilization += Rational64::new(t.wcet, t.period);
    }
    if utilization > one {
        return Err(Error::spanless(
            ErrorKind::Infeasible,
            format!(
                "task set utilization {} exceeds 1; no schedule exists",
                show(utilization)
            ),
        ));
    }

    Ok(TaskGraph {
        tasks,
        edges,
        tick,
        hyperperiod,
        utilization,
    })
}

/// Consistency of each edge with the clocks of its endpoints: the
/// operator list must transform the producer period into the consumer
/// period, and no consumer instance may be released before the producer
/// instance it reads. Both hold by clock inference; violations are bugs.
fn validate_edges(tasks: &[Task], edges: &[ProtoEdge]) -> Result<()> {
    for e in edges {
        let src = &tasks[e.src];
        let dst = &tasks[e.dst];
        let mut period = Rational64::new(src.period, 1);
        for op in &e.ops {
            match op {
                PrecOp::Under(k) => period *= Rational64::new(*k, 1),
                PrecOp::Over(k) => period /= Rational64::new(*k, 1),
                PrecOp::Offset(_) | PrecOp::Delay => {}
            }
        }
        if period != Rational64::new(dst.period, 1) {
            return Err(Error::new(
                ErrorKind::Internal,
                e.span,
                "edge operators disagree with inferred periods",
            ));
        }
        let horizon = 3 * pword(&crate::ops::strip_delays(&e.ops)).max(1) + 3;
        for n in 0..=horizon {
            let produced = src.release + n * src.period;
            let consumed = dst.release + g_ops(&e.ops, n) * dst.period;
            if produced > consumed {
                return Err(Error::new(
                    ErrorKind::Internal,
                    e.span,
                    "consumer instance released before its producer",
                ));
            }
        }
    }
    Ok(())
}

/// Sensors, then constants, then computations in a topological order of
/// the delay-free computation graph (ties by appearance), then actuators.
fn schedule_order(tasks: &[Task], edges: &[ProtoEdge]) -> Vec<usize> {
    let mut order: Vec<usize> = Vec::with_capacity(tasks.len());
    let is = |k: TaskKind| {
        move |t: &(usize, &Task)| t.1.kind == k
    };
    order.extend(tasks.iter().enumerate().filter(is(TaskKind::Sensor)).map(|(i, _)| i));
    order.extend(tasks.iter().enumerate().filter(is(TaskKind::Constant)).map(|(i, _)| i));

    let comps: Vec<usize> = tasks
        .iter()
        .enumerate()
        .filter(is(TaskKind::Computation))
        .map(|(i, _)| i)
        .collect();
    let mut preds: HashMap<usize, Vec<usize>> = comps.iter().map(|&c| (c, Vec::new())).collect();
    for e in edges {
        if tasks[e.src].kind == TaskKind::Computation
            && tasks[e.dst].kind == TaskKind::Computation
            && !e.ops.contains(&PrecOp::Delay)
        {
            preds.get_mut(&e.dst).expect("computation").push(e.src);
        }
    }
    let mut placed: Vec<bool> = vec![false; tasks.len()];
    let mut remaining = comps.clone();
    while !remaining.is_empty() {
        let next = remaining
            .iter()
            .position(|&c| preds[&c].iter().all(|&p| placed[p]))
            .expect("delay-free computation graph is acyclic");
        let c = remaining.remove(next);
        placed[c] = true;
        order.push(c);
    }

    order.extend(tasks.iter().enumerate().filter(is(TaskKind::Actuator)).map(|(i, _)| i));
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::clock_calculus;
    use crate::inline::inline;
    use crate::parser::parse;

    fn build(src: &str) -> Result<TaskGraph> {
        let p = parse(src)?;
        let main = p.default_main().unwrap().name.clone();
        let inlined = inline(&p, &main)?;
        let clocks = clock_calculus(&inlined.program, &main)?;
        let opts = ExtractOptions {
            inner_dues: inlined.dues,
            ..ExtractOptions::default()
        };
        extract(&inlined.program, &main, &clocks, &opts)
    }

    fn summary(g: &TaskGraph) -> Vec<(String, &'static str, i64, i64, i64)> {
        g.tasks
            .iter()
            .map(|t| (t.name.clone(), t.kind.label(), t.period, t.wcet, t.release))
            .collect()
    }

    #[test]
    fn flight_control_tasks_and_edges() {
        let g = build(include_str!("../tests/fixtures/fcs.mps")).unwrap();
        let names: Vec<&str> = g.tasks.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(
            names,
            ["pos_r", "angle", "pos", "acc", "PA", "NF", "NL", "AA", "PF", "FL", "PL", "order"]
        );
        assert_eq!(g.tick, Rational64::new(1, 1));
        assert_eq!(g.hyperperiod, 120);
        assert_eq!(g.utilization, Rational64::new(23, 24));
        let expect: &[(&str, &str, i64, i64)] = &[
            ("pos_r", "sensor", 120, 0),
            ("angle", "sensor", 10, 0),
            ("pos", "sensor", 10, 0),
            ("acc", "sensor", 10, 0),
            ("PA", "computation", 10, 1),
            ("NF", "computation", 120, 5),
            ("NL", "computation", 120, 20),
            ("AA", "computation", 10, 1),
            ("PF", "computation", 40, 4),
            ("FL", "computation", 10, 3),
            ("PL", "computation", 40, 6),
            ("order", "actuator", 40, 0),
        ];
        for ((name, kind, period, wcet), got) in expect.iter().zip(summary(&g)) {
            assert_eq!((got.0.as_str(), got.1, got.2, got.3, got.4), (*name, *kind, *period, *wcet, 0));
        }
        assert_eq!(g.task("order").unwrap().1.due, Some(15));

        let mut edges: Vec<(String, String, String)> = g
            .edges
            .iter()
            .map(|e| {
                (
                    g.tasks[e.src].name.clone(),
                    g.tasks[e.dst].name.clone(),
                    crate::ops::ops_to_string(&e.ops),
                )
            })
            .collect();
        edges.sort();
        let expect: &[(&str, &str, &str)] = &[
            ("AA", "PF", "/^4"),
            ("FL", "PL", "/^4"),
            ("NF", "NL", ""),
            ("NL", "PL", "fby *^3"),
            ("PA", "NF", "/^12"),
            ("PF", "PL", ""),
            ("PL", "order", ""),
            ("acc", "AA", ""),
            ("angle", "FL", ""),
            ("pos", "PA", ""),
            ("pos_r", "NL", ""),
        ];
        let got: Vec<(&str, &str, &str)> = edges
            .iter()
            .map(|(a, b, c)| (a.as_str(), b.as_str(), c.as_str()))
            .collect();
        assert_eq!(got, expect);

        let delayed = g
            .edges
            .iter()
            .find(|e| e.ops.contains(&PrecOp::Delay))
            .unwrap();
        assert_eq!(delayed.inits, vec![Lit::Int(0)]);
    }

    #[test]
    fn two_stage_chain_tasks() {
        let g = build(include_str!("../tests/fixtures/dw.mps")).unwrap();
        let names: Vec<&str> = g.tasks.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, ["i", "A", "B", "o"]);
        assert_eq!(
            summary(&g),
            [
                ("i".into(), "sensor", 4, 0, 0),
                ("A".into(), "computation", 4, 2, 0),
                ("B".into(), "computation", 8, 4, 0),
                ("o".into(), "actuator", 8, 0, 0),
            ]
        );
        assert_eq!(g.utilization, Rational64::new(1, 1));
        assert_eq!(g.task("o").unwrap().1.due, Some(6));
        assert_eq!(g.tick, Rational64::new(1, 1));
    }

    #[test]
    fn fractional_offsets_refine_the_tick() {
        let g = build(
            "imported node N(i: int) returns (o: int) wcet 1;\n\
             node M(x: rate(10, 0)) returns (y)\nlet y = N(x ~> 1/3); tel",
        )
        .unwrap();
        assert_eq!(g.tick, Rational64::new(1, 3));
        let (_, x) = g.task("x").unwrap();
        let (_, n) = g.task("N").unwrap();
        assert_eq!((x.period, x.release), (30, 0));
        assert_eq!((n.period, n.release, n.wcet), (30, 10, 3));
    }

    #[test]
    fn literal_arguments_become_constant_sources() {
        let g = build(
            "imported node N(i1: int; i2: int) returns (o: int) wcet 1;\n\
             node M(x: rate(4, 0)) returns (y)\nlet y = N(5, x); tel",
        )
        .unwrap();
        let names: Vec<&str> = g.tasks.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, ["x", "const_5", "N", "y"]);
        let (idx, c) = g.task("const_5").unwrap();
        assert_eq!((c.kind, c.period, c.wcet), (TaskKind::Constant, 4, 0));
        let edge = g.edges.iter().find(|e| e.src == idx).unwrap();
        assert_eq!((edge.dst_port, edge.ops.as_slice()), (0, &[][..]));
    }

    #[test]
    fn arithmetic_between_tasks_is_rejected() {
        let err = build(
            "imported node N(i: int) returns (o: int) wcet 1;\n\
             node M(a: rate(4, 0); b) returns (y)\nlet y = N(a + b); tel",
        )
        .unwrap_err();
        assert!(err.to_string().contains("arithmetic between tasks"));
    }

    #[test]
    fn oversampling_a_flow_before_its_delay_is_rejected() {
        let err = build(
            "imported node N(i: int) returns (o: int) wcet 1;\n\
             node M(x: rate(4, 0)) returns (y)\nlet y = N(0 fby (x *^ 2)); tel",
        )
        .unwrap_err();
        assert!(err.to_string().contains("over-sampled"));
    }

    #[test]
    fn repeated_applications_get_numbered_names() {
        let g = build(
            "imported node N(i: int) returns (o: int) wcet 1;\n\
             node M(x: rate(4, 0)) returns (y)\nvar t;\nlet t = N(x); y = N(t); tel",
        )
        .unwrap();
        let names: Vec<&str> = g.tasks.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, ["x", "N", "N_2", "y"]);
    }

    #[test]
    fn copy_equations_compose_onto_the_edge() {
        let g = build(
            "imported node A(i: int) returns (o: int) wcet 1;\n\
             imported node B(i: int) returns (o: int) wcet 1;\n\
             node M(x: rate(4, 0)) returns (y)\nvar v;\nlet\n  v = A(x) /^ 2;\n  y = B(v ~> 1);\ntel",
        )
        .unwrap();
        let (a, _) = g.task("A").unwrap();
        let (b, _) = g.task("B").unwrap();
        let edge = g.edges.iter().find(|e| e.src == a && e.dst == b).unwrap();
        assert_eq!(crate::ops::ops_to_string(&edge.ops), "/^2 ~>1");
        assert_eq!(g.task("B").unwrap().1.release, 8);
    }

    #[test]
    fn flows_without_a_producer_are_rejected() {
        let err = build(
            "imported node N(i1: int; i2: int) returns (o: int) wcet 1;\n\
             node M(a: rate(4, 0)) returns (y)\nvar x;\nlet x = 0 fby x; y = N(a, x); tel",
        )
        .unwrap_err();
        assert!(err.to_string().contains("not produced by any node application"));
    }

    #[test]
    fn overutilization_is_rejected() {
        let err = build(
            "imported node N(i: int) returns (o: int) wcet 5;\n\
             node M(x: rate(4, 0)) returns (y)\nlet y = N(x); tel",
        )
        .unwrap_err();
        assert!(err.to_string().contains("utilization 5/4 exceeds 1"));
    }
}

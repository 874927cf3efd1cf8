//! Deterministic discrete-time preemptive EDF simulator.
//!
//! The simulator runs an encoded task set tick by tick on one processor.
//! Every instance carries its own absolute deadline from the task's
//! deadline word, the ready instance with the smallest deadline runs, and
//! ties fall back to the task order, which lists producers before their
//! delay-free consumers. That order matters: instances with zero demand
//! complete the moment they become the most urgent ready work, so at equal
//! deadlines a zero-demand consumer must come after the producer whose
//! value it reads.
//!
//! Each boundary `t` processes, in this order: the completion of the
//! instance that just finished its last tick, the releases due at `t`,
//! the zero-demand drain, the deadline check, and finally the choice of
//! which instance occupies the tick `[t, t+1)`. Buffer cells are written
//! at completion and read at first start, so within one boundary a
//! consumer always sees the completions of the same boundary.
//!
//! Deadline misses do not stop the run: the late instance keeps executing
//! and later instances queue up behind it, so one simulation collects
//! every miss in the window. Instances still incomplete at the horizon
//! get a truncation marker instead.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::rc::Rc;

use num_rational::Rational64;

use crate::ast::{Lit, Program};
use crate::buffer::BufferPlan;
use crate::diag::{Error, ErrorKind, Result};
use crate::dword::DWord;
use crate::graph::{TaskGraph, TaskKind, TaskOrigin};
use crate::interp::{Interp, SymValue};
use crate::ops::{consumed_instance, PrecOp};
use crate::ratio::lcm_i64;

/// What a task publishes when an instance completes.
#[derive(Debug, Clone)]
pub enum Produces {
    /// Opaque samples `name<n>(values read at start)`.
    Symbol(String),
    /// The same literal at every instance.
    Literal(Lit),
}

#[derive(Debug, Clone)]
pub struct SimTask {
    pub name: String,
    pub kind: TaskKind,
    /// Period in ticks.
    pub period: i64,
    /// Demand per instance in ticks.
    pub wcet: i64,
    /// First release in ticks.
    pub release: i64,
    pub dword: DWord,
    pub produces: Produces,
}

#[derive(Debug, Clone)]
pub struct SimEdge {
    pub src: usize,
    pub src_out: usize,
    pub dst: usize,
    pub dst_port: usize,
    pub ops: Vec<PrecOp>,
}

/// Everything the simulator needs: tasks in scheduling order, the data
/// edges, and one buffer plan per edge.
#[derive(Debug, Clone)]
pub struct SimSet {
    pub tasks: Vec<SimTask>,
    pub edges: Vec<SimEdge>,
    pub buffers: Vec<BufferPlan>,
}

impl SimSet {
    /// Assembles the simulator input from the compiler's products.
    pub fn from_graph(graph: &TaskGraph, words: &crate::deadline::DeadlineWords, plans: &[BufferPlan]) -> SimSet {
        let tasks = graph
            .tasks
            .iter()
            .enumerate()
            .map(|(i, t)| SimTask {
                name: t.name.clone(),
                kind: t.kind,
                period: t.period,
                wcet: t.wcet,
                release: t.release,
                dword: words.word(i).clone(),
                produces: match (&t.kind, &t.origin) {
                    (TaskKind::Constant, TaskOrigin::Constant(l)) => Produces::Literal(*l),
                    _ => Produces::Symbol(t.node.clone().unwrap_or_else(|| t.name.clone())),
                },
            })
            .collect();
        let edges = graph
            .edges
            .iter()
            .map(|e| SimEdge {
                src: e.src,
                src_out: e.src_out,
                dst: e.dst,
                dst_port: e.dst_port,
                ops: e.ops.clone(),
            })
            .collect();
        SimSet {
            tasks,
            edges,
            buffers: plans.to_vec(),
        }
    }

    /// Total demand per time: sum of C/T over all tasks.
    pub fn utilization(&self) -> Rational64 {
        self.tasks
            .iter()
            .map(|t| Rational64::new(t.wcet, t.period))
            .fold(Rational64::new(0, 1), |a, b| a + b)
    }

    /// Least common multiple of all task periods, in ticks.
    pub fn hyperperiod(&self) -> Result<i64> {
        let mut h = 1i64;
        for t in &self.tasks {
            h = lcm_i64(h, t.period)?;
        }
        Ok(h)
    }

    pub fn max_release(&self) -> i64 {
        self.tasks.iter().map(|t| t.release).max().unwrap_or(0)
    }

    /// The default observation window: every release pattern has stabilized
    /// and two whole hyperperiods follow.
    pub fn default_horizon(&self) -> Result<i64> {
        Ok(self.max_release() + 2 * self.hyperperiod()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Per-instance deadlines from the deadline word.
    EdfDword,
    /// One relative deadline per task: the minimum of its word. The foil
    /// that shows why instance deadlines are needed.
    EdfUniform,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Ticks to simulate; releases strictly before the horizon enter the run.
    pub horizon: i64,
    pub policy: Policy,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Release { task: usize, n: i64, deadline: i64 },
    Start { task: usize, n: i64 },
    Preempt { task: usize, n: i64 },
    Resume { task: usize, n: i64 },
    Complete { task: usize, n: i64 },
    BufferWrite { buffer: usize, task: usize, n: i64, cell: u8, value: Rc<SymValue> },
    /// `value` is `None` when the cell has never been written, which only
    /// happens when the write pattern has been corrupted on purpose.
    BufferRead { buffer: usize, task: usize, n: i64, cell: u8, value: Option<Rc<SymValue>> },
    DeadlineMiss { task: usize, n: i64 },
    /// Released before the horizon but still incomplete at it.
    Truncated { task: usize, n: i64 },
}

#[derive(Debug)]
pub struct SimTrace {
    pub events: Vec<(i64, Event)>,
    pub horizon: i64,
    pub policy: Policy,
    /// Task names in scheduling order, so the trace renders on its own.
    pub task_names: Vec<String>,
    pub buffer_names: Vec<String>,
    /// One row per task, one byte per tick: '#' running, '.' ready,
    /// ' ' absent, '!' deadline missed at that tick.
    rows: Vec<Vec<u8>>,
    pub misses: usize,
    pub truncated: usize,
}

impl SimTrace {
    /// The tick at which instance `n` of a task completed.
    pub fn completion(&self, task: usize, n: i64) -> Option<i64> {
        self.events.iter().find_map(|(t, e)| match e {
            Event::Complete { task: tk, n: m } if *tk == task && *m == n => Some(*t),
            _ => None,
        })
    }

    /// The half-open intervals during which instance `n` of a task
    /// occupied the processor, in order. Zero-demand instances yield an
    /// empty list.
    pub fn executions(&self, task: usize, n: i64) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        let mut open: Option<i64> = None;
        for (t, e) in &self.events {
            match e {
                Event::Start { task: tk, n: m } | Event::Resume { task: tk, n: m }
                    if *tk == task && *m == n =>
                {
                    open = Some(*t);
                }
                Event::Preempt { task: tk, n: m } | Event::Complete { task: tk, n: m }
                    if *tk == task && *m == n =>
                {
                    if let Some(s) = open.take() {
                        if *t > s {
                            out.push((s, *t));
                        }
                    }
                }
                _ => {}
            }
        }
        if let Some(s) = open {
            if self.horizon > s {
                out.push((s, self.horizon));
            }
        }
        out
    }

    pub fn deadline_misses(&self) -> Vec<(i64, usize, i64)> {
        self.events
            .iter()
            .filter_map(|(t, e)| match e {
                Event::DeadlineMiss { task, n } => Some((*t, *task, *n)),
                _ => None,
            })
            .collect()
    }

    /// ASCII Gantt chart: one row per task, one column per tick.
    pub fn gantt(&self) -> String {
        let width = self.task_names.iter().map(|n| n.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (name, row) in self.task_names.iter().zip(&self.rows) {
            let cells = std::str::from_utf8(row).expect("gantt rows are ASCII");
            let _ = writeln!(out, "{name:width$} |{cells}|");
        }
        out
    }

    /// One JSON object per event, in trace order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (t, e) in &self.events {
            let obj = match e {
                Event::Release { task, n, deadline } => serde_json::json!({
                    "t": t, "ev": "release", "task": self.task_names[*task], "n": n, "d": deadline,
                }),
                Event::Start { task, n } => serde_json::json!({
                    "t": t, "ev": "start", "task": self.task_names[*task], "n": n,
                }),
                Event::Preempt { task, n } => serde_json::json!({
                    "t": t, "ev": "preempt", "task": self.task_names[*task], "n": n,
                }),
                Event::Resume { task, n } => serde_json::json!({
                    "t": t, "ev": "resume", "task": self.task_names[*task], "n": n,
                }),
                Event::Complete { task, n } => serde_json::json!({
                    "t": t, "ev": "complete", "task": self.task_names[*task], "n": n,
                }),
                Event::BufferWrite { buffer, task, n, cell, value } => serde_json::json!({
                    "t": t, "ev": "buffer_write", "task": self.task_names[*task], "n": n,
                    "buffer": self.buffer_names[*buffer], "cell": cell, "value": value.to_string(),
                }),
                Event::BufferRead { buffer, task, n, cell, value } => serde_json::json!({
                    "t": t, "ev": "buffer_read", "task": self.task_names[*task], "n": n,
                    "buffer": self.buffer_names[*buffer], "cell": cell,
                    "value": value.as_ref().map(|v| v.to_string()),
                }),
                Event::DeadlineMiss { task, n } => serde_json::json!({
                    "t": t, "ev": "deadline_miss", "task": self.task_names[*task], "n": n,
                }),
                Event::Truncated { task, n } => serde_json::json!({
                    "t": t, "ev": "truncated", "task": self.task_names[*task], "n": n,
                }),
            };
            out.push_str(&obj.to_string());
            out.push('\n');
        }
        out
    }
}

/// A released task instance and its run-time bookkeeping.
#[derive(Debug)]
struct Instance {
    task: usize,
    n: i64,
    deadline: i64,
    remaining: i64,
    started: bool,
    completed: bool,
    missed: bool,
    /// Values read at start, one slot per argument port.
    reads: Vec<Option<Rc<SymValue>>>,
}

struct Sim<'s> {
    set: &'s SimSet,
    horizon: i64,
    /// Effective deadline words under the configured policy.
    words: Vec<DWord>,
    /// Buffer indices feeding each task, in argument-port order.
    in_buffers: Vec<Vec<usize>>,
    /// Buffer indices each task writes.
    out_buffers: Vec<Vec<usize>>,
    /// Current cell contents of every buffer.
    cells: Vec<Vec<Option<Rc<SymValue>>>>,
    instances: Vec<Instance>,
    events: Vec<(i64, Event)>,
    rows: Vec<Vec<u8>>,
}

pub fn simulate(set: &SimSet, cfg: &SimConfig) -> Result<SimTrace> {
    if cfg.horizon < 1 {
        return Err(Error::spanless(
            ErrorKind::Usage,
            format!("horizon must be at least 1 tick, got {}", cfg.horizon),
        ));
    }
    let words = set
        .tasks
        .iter()
        .map(|t| match cfg.policy {
            Policy::EdfDword => t.dword.clone(),
            Policy::EdfUniform => DWord::constant(t.dword.min_entry()),
        })
        .collect();

    let mut in_buffers = vec![Vec::new(); set.tasks.len()];
    let mut out_buffers = vec![Vec::new(); set.tasks.len()];
    for (b, plan) in set.buffers.iter().enumerate() {
        in_buffers[plan.consumer].push(b);
        out_buffers[plan.producer].push(b);
    }
    for (task, bufs) in in_buffers.iter_mut().enumerate() {
        bufs.sort_by_key(|&b| set.edges[set.buffers[b].edge].dst_port);
        debug_assert!(
            bufs.iter()
                .enumerate()
                .all(|(i, &b)| set.edges[set.buffers[b].edge].dst_port == i),
            "task {task} has one buffer per argument port"
        );
    }
    let cells = set
        .buffers
        .iter()
        .map(|plan| {
            let mut cs: Vec<Option<Rc<SymValue>>> = vec![None; plan.size as usize];
            if let Some(init) = plan.init {
                cs[1] = Some(SymValue::lit(init));
            }
            cs
        })
        .collect();

    let mut sim = Sim {
        set,
        horizon: cfg.horizon,
        words,
        in_buffers,
        out_buffers,
        cells,
        instances: Vec::new(),
        events: Vec::new(),
        rows: vec![vec![b' '; cfg.horizon as usize]; set.tasks.len()],
    };
    sim.run();

    let misses = sim
        .events
        .iter()
        .filter(|(_, e)| matches!(e, Event::DeadlineMiss { .. }))
        .count();
    let truncated = sim
        .events
        .iter()
        .filter(|(_, e)| matches!(e, Event::Truncated { .. }))
        .count();
    Ok(SimTrace {
        events: sim.events,
        horizon: cfg.horizon,
        policy: cfg.policy,
        task_names: set.tasks.iter().map(|t| t.name.clone()).collect(),
        buffer_names: set.buffers.iter().map(|b| b.name.clone()).collect(),
        rows: sim.rows,
        misses,
        truncated,
    })
}

impl Sim<'_> {
    fn run(&mut self) {
        // Index of the instance that occupied the previous tick, if it is
        // still incomplete; distinguishes Preempt/Resume from Start.
        let mut running: Option<usize> = None;

        for t in 0..=self.horizon {
            // Completion of the instance that just used its last tick.
            if let Some(i) = running {
                if self.instances[i].remaining == 0 {
                    self.complete(i, t);
                    running = None;
                }
            }

            if t == self.horizon {
                self.finish_window(t);
                break;
            }

            self.release_due(t);
            self.drain_zero_demand(t);

            // An incomplete instance whose absolute deadline is now has
            // missed: completions for this boundary are already processed.
            for i in 0..self.instances.len() {
                let inst = &mut self.instances[i];
                if !inst.completed && !inst.missed && inst.deadline == t {
                    inst.missed = true;
                    let (task, n) = (inst.task, inst.n);
                    self.events.push((t, Event::DeadlineMiss { task, n }));
                }
            }

            // EDF: the ready instance with the smallest deadline gets the
            // tick; ties go to the earlier task, then the earlier instance.
            let chosen = self.most_urgent();
            if let Some(c) = chosen {
                if let Some(prev) = running {
                    if prev != c {
                        let (task, n) = (self.instances[prev].task, self.instances[prev].n);
                        self.events.push((t, Event::Preempt { task, n }));
                    }
                }
                let first = !self.instances[c].started;
                if first {
                    self.start(c, t);
                } else if running != Some(c) {
                    let (task, n) = (self.instances[c].task, self.instances[c].n);
                    self.events.push((t, Event::Resume { task, n }));
                }
                self.instances[c].remaining -= 1;
                self.rows[self.instances[c].task][t as usize] = b'#';
                running = Some(c);
            } else {
                running = None;
            }
            // Everything else released and incomplete waits.
            for (i, inst) in self.instances.iter().enumerate() {
                if !inst.completed && Some(i) != running {
                    self.rows[inst.task][t as usize] = b'.';
                }
            }
        }

        // Deadline marks paint over the run history.
        for (_, e) in &self.events {
            if let Event::DeadlineMiss { task, n } = e {
                let inst = self
                    .instances
                    .iter()
                    .find(|i| i.task == *task && i.n == *n)
                    .expect("missed instances were released");
                if inst.deadline < self.horizon {
                    self.rows[*task][inst.deadline as usize] = b'!';
                }
            }
        }
    }

    fn release_due(&mut self, t: i64) {
        for (task, st) in self.set.tasks.iter().enumerate() {
            if t < st.release || (t - st.release) % st.period != 0 {
                continue;
            }
            let n = (t - st.release) / st.period;
            let deadline = t + self.words[task].index(n);
            let ports = self.in_buffers[task].len();
            self.instances.push(Instance {
                task,
                n,
                deadline,
                remaining: st.wcet,
                started: false,
                completed: false,
                missed: false,
                reads: vec![None; ports],
            });
            self.events.push((t, Event::Release { task, n, deadline }));
        }
    }

    /// Priority order of a ready instance.
    fn key(&self, i: usize) -> (i64, usize, i64) {
        let inst = &self.instances[i];
        (inst.deadline, inst.task, inst.n)
    }

    fn most_urgent(&self) -> Option<usize> {
        (0..self.instances.len())
            .filter(|&i| !self.instances[i].completed)
            .min_by_key(|&i| self.key(i))
    }

    /// Completes, in deadline order, every most-urgent instance with no
    /// demand left. Running after releases and before the deadline check
    /// lets zero-demand work released at its own deadline still meet it,
    /// and the deadline order guarantees a zero-demand consumer drains
    /// after the producer completing at the same boundary has written.
    fn drain_zero_demand(&mut self, t: i64) {
        while let Some(i) = self.most_urgent() {
            if self.instances[i].remaining != 0 {
                break;
            }
            if !self.instances[i].started {
                self.start(i, t);
            }
            self.complete(i, t);
        }
    }

    /// First start: record the instance's reads, cell by cell.
    fn start(&mut self, i: usize, t: i64) {
        let (task, n) = (self.instances[i].task, self.instances[i].n);
        self.instances[i].started = true;
        self.events.push((t, Event::Start { task, n }));
        for &b in &self.in_buffers[task].clone() {
            let plan = &self.set.buffers[b];
            let consumed = consumed_instance(&self.set.edges[plan.edge].ops, n);
            let cell = plan.read_cell(consumed);
            let value = self.cells[b][cell as usize].clone();
            self.instances[i].reads[self.set.edges[plan.edge].dst_port] = value.clone();
            self.events.push((
                t,
                Event::BufferRead {
                    buffer: b,
                    task,
                    n,
                    cell,
                    value,
                },
            ));
        }
    }

    /// Completion: publish one value per outgoing buffer whose write
    /// pattern includes this instance.
    fn complete(&mut self, i: usize, t: i64) {
        let (task, n) = (self.instances[i].task, self.instances[i].n);
        self.instances[i].completed = true;
        self.events.push((t, Event::Complete { task, n }));

        let args: Vec<Rc<SymValue>> = self.instances[i]
            .reads
            .iter()
            .map(|r| r.clone().unwrap_or_else(undefined_value))
            .collect();
        for &b in &self.out_buffers[task].clone() {
            let plan = &self.set.buffers[b];
            let Some(cell) = plan.write_cell(n) else {
                continue;
            };
            let value = match &self.set.tasks[task].produces {
                Produces::Literal(l) => SymValue::lit(*l),
                Produces::Symbol(name) => Rc::new(SymValue::Node {
                    node: name.clone(),
                    idx: n,
                    out: self.set.edges[plan.edge].src_out,
                    args: args.clone(),
                }),
            };
            self.cells[b][cell as usize] = Some(value.clone());
            self.events.push((
                t,
                Event::BufferWrite {
                    buffer: b,
                    task,
                    n,
                    cell,
                    value,
                },
            ));
        }
    }

    /// At the horizon: late instances may still miss provably, and
    /// whatever is incomplete gets a truncation marker.
    fn finish_window(&mut self, t: i64) {
        for i in 0..self.instances.len() {
            let inst = &mut self.instances[i];
            if !inst.completed && !inst.missed && inst.deadline <= t {
                inst.missed = true;
                let (task, n) = (inst.task, inst.n);
                self.events.push((t, Event::DeadlineMiss { task, n }));
            }
        }
        for inst in &self.instances {
            if !inst.completed {
                self.events
                    .push((t, Event::Truncated { task: inst.task, n: inst.n }));
            }
        }
    }
}

/// The stand-in for a value read from a never-written cell. It compares
/// unequal to every oracle value, so corrupt runs stay visibly corrupt.
fn undefined_value() -> Rc<SymValue> {
    Rc::new(SymValue::Node {
        node: "undefined".to_string(),
        idx: -1,
        out: 0,
        args: Vec::new(),
    })
}

/// One disagreement between a simulated read and the reference value.
#[derive(Debug, Clone)]
pub struct Mismatch {
    pub task: String,
    pub n: i64,
    pub buffer: String,
    pub expected: String,
    pub got: String,
}

/// Compares every buffer read in the trace against the reference
/// interpreter: consumer instance m must have read exactly the value of
/// its argument expression at index m. Meaningful on miss-free traces;
/// with misses, stale reads are expected and the report is not evidence
/// of an encoding fault.
pub fn check_semantics(
    trace: &SimTrace,
    set: &SimSet,
    graph: &TaskGraph,
    flat: &Program,
    main: &str,
    interp: &mut Interp,
) -> Result<Vec<Mismatch>> {
    let node = flat
        .defined(main)
        .ok_or_else(|| Error::spanless(ErrorKind::Name, format!("main node `{main}` not found")))?;
    let mut out = Vec::new();
    for (_, e) in &trace.events {
        let Event::BufferRead { buffer, task, n, value, .. } = e else {
            continue;
        };
        let plan = &set.buffers[*buffer];
        let port = set.edges[plan.edge].dst_port;
        let expected = match &graph.tasks[*task].origin {
            TaskOrigin::Computation { eq, path } => {
                let mut arg = path.clone();
                arg.push(port);
                interp.value_at(*eq, &arg, *n)?
            }
            TaskOrigin::Actuator(ret) => interp.value_of(&node.returns[*ret].name, *n)?,
            origin => {
                return Err(Error::internal(format!(
                    "task of kind {origin:?} consumed a buffer"
                )))
            }
        };
        let matches = value.as_ref().is_some_and(|v| **v == *expected);
        if !matches {
            out.push(Mismatch {
                task: trace.task_names[*task].clone(),
                n: *n,
                buffer: trace.buffer_names[*buffer].clone(),
                expected: expected.to_string(),
                got: value
                    .as_ref()
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "undefined".to_string()),
            });
        }
    }
    Ok(out)
}

#[derive(Debug)]
pub struct FeasibilityReport {
    pub horizon: i64,
    pub misses: usize,
    pub schedulable: bool,
}

/// Simulates the whole stabilized window under per-instance deadlines and
/// reports schedulability: no instance missed over [0, max release + 2H).
pub fn feasibility_scan(set: &SimSet) -> Result<FeasibilityReport> {
    let horizon = set.default_horizon()?;
    let trace = simulate(
        set,
        &SimConfig {
            horizon,
            policy: Policy::EdfDword,
        },
    )?;
    Ok(FeasibilityReport {
        horizon,
        misses: trace.misses,
        schedulable: trace.misses == 0,
    })
}

/// Every trace invariant the scheduler promises, checked directly on a
/// finished trace. Used by the property tests and the acceptance suite.
pub fn assert_trace_invariants(trace: &SimTrace, set: &SimSet) {
    // Releases are strictly periodic.
    let mut next = HashMap::new();
    for (t, e) in &trace.events {
        if let Event::Release { task, n, .. } = e {
            let expect = set.tasks[*task].release + n * set.tasks[*task].period;
            assert_eq!(*t, expect, "release {} of {} off schedule", n, trace.task_names[*task]);
            let slot = next.entry(*task).or_insert(0i64);
            assert_eq!(*n, *slot, "releases come in instance order");
            *slot += 1;
        }
    }
    // Cumulative execution equals demand for completed instances, and at
    // most one instance runs per tick.
    let mut busy: Vec<Option<(usize, i64)>> = vec![None; trace.horizon as usize];
    for (t, e) in &trace.events {
        match e {
            Event::Complete { task, n } => {
                let execs = trace.executions(*task, *n);
                let total: i64 = execs.iter().map(|(s, e)| e - s).sum();
                assert_eq!(
                    total, set.tasks[*task].wcet,
                    "instance {} of {} ran {} ticks for demand {}",
                    n, trace.task_names[*task], total, set.tasks[*task].wcet
                );
                for (s, end) in execs {
                    for tick in s..end {
                        assert!(
                            busy[tick as usize].is_none(),
                            "two instances share tick {tick}"
                        );
                        busy[tick as usize] = Some((*task, *n));
                    }
                }
                assert!(*t <= trace.horizon);
            }
            Event::BufferRead { task, n, .. } => {
                // Reads happen at the instance's start event.
                let started = trace.events.iter().any(|(ts, ev)| {
                    matches!(ev, Event::Start { task: tk, n: m } if tk == task && m == n && ts == t)
                });
                assert!(started, "read outside the start boundary");
            }
            _ => {}
        }
    }
}

//! On-disk task set format.
//!
//! A compiled program is saved as one JSON document holding the tasks in
//! scheduling order, the data edges, and one buffer per edge, paired by
//! position: `buffers[i]` implements `edges[i]`. Within the edge list the
//! i-th edge naming a given consumer feeds that consumer's i-th argument
//! port, and a producer output other than the first is written as
//! `name.k`. Serialization is canonical: fixed key order, deadline words
//! in their shortest repeating pattern, the tick as a `"num/den"` string,
//! pretty-printed with a trailing newline. Loading a file the compiler
//! wrote and saving it again reproduces the bytes exactly.
//!
//! A loaded task set is enough to simulate and schedule, but not to check
//! functional semantics: the source program is gone, so tasks produce
//! opaque samples named after themselves.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::ast::Lit;
use crate::buffer::{BufferPlan, ReadRule};
use crate::diag::{Error, ErrorKind, Result};
use crate::dword::DWord;
use crate::graph::TaskKind;
use crate::ops::PrecOp;
use crate::sim::{Produces, SimEdge, SimSet, SimTask};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskSetFile {
    pub version: u32,
    /// Length of one tick, in the source time unit, as `"num/den"`.
    pub tick: String,
    pub tasks: Vec<TaskEntry>,
    pub buffers: Vec<BufferEntry>,
    pub edges: Vec<EdgeEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskEntry {
    pub name: String,
    /// One of `sensor`, `constant`, `computation`, `actuator`.
    pub kind: String,
    #[serde(rename = "T")]
    pub period: i64,
    #[serde(rename = "C")]
    pub wcet: i64,
    #[serde(rename = "r")]
    pub release: i64,
    pub dword: Vec<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BufferEntry {
    pub name: String,
    pub producer: String,
    pub consumer: String,
    pub size: u8,
    pub init: Option<LitEntry>,
    pub write_mask: Vec<bool>,
    pub read_rule: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeEntry {
    pub src: String,
    pub dst: String,
    pub ops: Vec<String>,
}

/// A literal constant, stored as the bare JSON value.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LitEntry {
    Int(i64),
    Bool(bool),
}

impl From<Lit> for LitEntry {
    fn from(l: Lit) -> LitEntry {
        match l {
            Lit::Int(v) => LitEntry::Int(v),
            Lit::Bool(v) => LitEntry::Bool(v),
        }
    }
}

impl From<LitEntry> for Lit {
    fn from(l: LitEntry) -> Lit {
        match l {
            LitEntry::Int(v) => Lit::Int(v),
            LitEntry::Bool(v) => Lit::Bool(v),
        }
    }
}

/// Builds the document for a simulator input and its tick length.
pub fn to_file(set: &SimSet, tick: Rational64) -> TaskSetFile {
    let tasks = set
        .tasks
        .iter()
        .map(|t| TaskEntry {
            name: t.name.clone(),
            kind: t.kind.label().to_string(),
            period: t.period,
            wcet: t.wcet,
            release: t.release,
            dword: t.dword.pattern().to_vec(),
        })
        .collect();
    let buffers = set
        .buffers
        .iter()
        .map(|b| BufferEntry {
            name: b.name.clone(),
            producer: set.tasks[b.producer].name.clone(),
            consumer: set.tasks[b.consumer].name.clone(),
            size: b.size,
            init: b.init.map(LitEntry::from),
            write_mask: b.write_mask.clone(),
            read_rule: b.read_rule.label().to_string(),
        })
        .collect();
    let edges = set
        .edges
        .iter()
        .map(|e| EdgeEntry {
            src: if e.src_out == 0 {
                set.tasks[e.src].name.clone()
            } else {
                format!("{}.{}", set.tasks[e.src].name, e.src_out)
            },
            dst: set.tasks[e.dst].name.clone(),
            ops: e.ops.iter().map(|op| op.to_string()).collect(),
        })
        .collect();
    TaskSetFile {
        version: FORMAT_VERSION,
        tick: format!("{}/{}", tick.numer(), tick.denom()),
        tasks,
        buffers,
        edges,
    }
}

/// Canonical text of a document.
pub fn render(file: &TaskSetFile) -> String {
    let mut out = serde_json::to_string_pretty(file).expect("task sets serialize");
    out.push('\n');
    out
}

/// Parses document text. Malformed JSON or a wrong shape is a usage error.
pub fn parse_file(text: &str) -> Result<TaskSetFile> {
    serde_json::from_str(text)
        .map_err(|e| Error::spanless(ErrorKind::Usage, format!("task set file does not parse: {e}")))
}

fn parse_tick(s: &str) -> Result<Rational64> {
    let bad = || Error::spanless(ErrorKind::Usage, format!("tick must be `num/den`, got `{s}`"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: i64 = n.trim().parse().map_err(|_| bad())?;
    let d: i64 = d.trim().parse().map_err(|_| bad())?;
    if d <= 0 || n <= 0 {
        return Err(bad());
    }
    Ok(Rational64::new(n, d))
}

fn parse_kind(s: &str) -> Result<TaskKind> {
    match s {
        "sensor" => Ok(TaskKind::Sensor),
        "constant" => Ok(TaskKind::Constant),
        "computation" => Ok(TaskKind::Computation),
        "actuator" => Ok(TaskKind::Actuator),
        other => Err(Error::spanless(
            ErrorKind::Usage,
            format!("unknown task kind `{other}`"),
        )),
    }
}

fn parse_read_rule(s: &str) -> Result<ReadRule> {
    match s {
        "same" => Ok(ReadRule::Same),
        "consumed_instance_mod2" => Ok(ReadRule::ConsumedInstanceMod2),
        other => Err(Error::spanless(
            ErrorKind::Usage,
            format!("unknown read rule `{other}`"),
        )),
    }
}

fn parse_op(s: &str) -> Result<PrecOp> {
    let bad = || {
        Error::spanless(
            ErrorKind::Usage,
            format!("unrecognized rate operator `{s}` in an edge"),
        )
    };
    if s == "fby" {
        return Ok(PrecOp::Delay);
    }
    if let Some(k) = s.strip_prefix("/^") {
        let k: i64 = k.parse().map_err(|_| bad())?;
        if k < 1 {
            return Err(bad());
        }
        return Ok(PrecOp::Under(k));
    }
    if let Some(k) = s.strip_prefix("*^") {
        let k: i64 = k.parse().map_err(|_| bad())?;
        if k < 1 {
            return Err(bad());
        }
        return Ok(PrecOp::Over(k));
    }
    if let Some(q) = s.strip_prefix("~>") {
        let (n, d) = match q.split_once('/') {
            Some((n, d)) => (n, d),
            None => (q, "1"),
        };
        let n: i64 = n.parse().map_err(|_| bad())?;
        let d: i64 = d.parse().map_err(|_| bad())?;
        if d <= 0 {
            return Err(bad());
        }
        return Ok(PrecOp::Offset(Rational64::new(n, d)));
    }
    Err(bad())
}

/// Splits an edge endpoint into a task name and an output index:
/// `name` or `name.k`.
fn parse_endpoint(s: &str) -> (&str, usize) {
    match s.rsplit_once('.') {
        Some((name, out)) => match out.parse() {
            Ok(k) => (name, k),
            Err(_) => (s, 0),
        },
        None => (s, 0),
    }
}

/// Rebuilds a simulator input from a document.
pub fn to_sim_set(file: &TaskSetFile) -> Result<(SimSet, Rational64)> {
    if file.version != FORMAT_VERSION {
        return Err(Error::spanless(
            ErrorKind::Usage,
            format!(
                "unsupported task set version {} (this build reads version {FORMAT_VERSION})",
                file.version
            ),
        ));
    }
    let tick = parse_tick(&file.tick)?;

    let mut tasks = Vec::with_capacity(file.tasks.len());
    for t in &file.tasks {
        if t.period < 1 || t.wcet < 0 || t.release < 0 {
            return Err(Error::spanless(
                ErrorKind::Usage,
                format!("task `{}` needs T >= 1, C >= 0 and r >= 0", t.name),
            ));
        }
        if t.dword.is_empty() {
            return Err(Error::spanless(
                ErrorKind::Usage,
                format!("task `{}` has an empty deadline word", t.name),
            ));
        }
        tasks.push(SimTask {
            name: t.name.clone(),
            kind: parse_kind(&t.kind)?,
            period: t.period,
            wcet: t.wcet,
            release: t.release,
            dword: DWord::new(t.dword.clone()),
            produces: Produces::Symbol(t.name.clone()),
        });
    }
    let index_of = |name: &str, place: &str| -> Result<usize> {
        tasks
            .iter()
            .position(|t: &SimTask| t.name == name)
            .ok_or_else(|| {
                Error::spanless(ErrorKind::Usage, format!("unknown task `{name}` in {place}"))
            })
    };

    if file.buffers.len() != file.edges.len() {
        return Err(Error::spanless(
            ErrorKind::Usage,
            format!(
                "{} buffers for {} edges; each edge needs exactly one buffer",
                file.buffers.len(),
                file.edges.len()
            ),
        ));
    }

    let mut edges = Vec::with_capacity(file.edges.len());
    let mut ports_used = vec![0usize; tasks.len()];
    for e in &file.edges {
        let (src_name, src_out) = parse_endpoint(&e.src);
        let src = index_of(src_name, "an edge")?;
        let dst = index_of(&e.dst, "an edge")?;
        let ops = e.ops.iter().map(|s| parse_op(s)).collect::<Result<Vec<_>>>()?;
        let dst_port = ports_used[dst];
        ports_used[dst] += 1;
        edges.push(SimEdge {
            src,
            src_out,
            dst,
            dst_port,
            ops,
        });
    }

    let mut buffers = Vec::with_capacity(file.buffers.len());
    for (i, b) in file.buffers.iter().enumerate() {
        let producer = index_of(&b.producer, &format!("buffer `{}`", b.name))?;
        let consumer = index_of(&b.consumer, &format!("buffer `{}`", b.name))?;
        if producer != edges[i].src || consumer != edges[i].dst {
            return Err(Error::spanless(
                ErrorKind::Usage,
                format!("buffer `{}` does not connect the endpoints of edge {i}", b.name),
            ));
        }
        if !(1..=2).contains(&b.size) {
            return Err(Error::spanless(
                ErrorKind::Usage,
                format!("buffer `{}` needs size 1 or 2, got {}", b.name, b.size),
            ));
        }
        if b.init.is_some() && b.size != 2 {
            return Err(Error::spanless(
                ErrorKind::Usage,
                format!("buffer `{}` has an initial value but only one cell", b.name),
            ));
        }
        if b.write_mask.is_empty() {
            return Err(Error::spanless(
                ErrorKind::Usage,
                format!("buffer `{}` has an empty write mask", b.name),
            ));
        }
        buffers.push(BufferPlan {
            name: b.name.clone(),
            edge: i,
            producer,
            consumer,
            size: b.size,
            init: b.init.map(Lit::from),
            write_mask: b.write_mask.clone(),
            read_rule: parse_read_rule(&b.read_rule)?,
        });
    }

    Ok((SimSet { tasks, edges, buffers }, tick))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causality::causality_check;
    use crate::clock::clock_calculus;
    use crate::deadline::deadline_calculus;
    use crate::graph::{extract, ExtractOptions};
    use crate::inline::inline;
    use crate::parser::parse;
    use crate::sim::{simulate, Policy, SimConfig};
    use crate::types::type_check;

    fn compile(src: &str) -> (SimSet, Rational64) {
        let program = parse(src).expect("parse");
        let main = program.default_main().expect("main").name.clone();
        type_check(&program).expect("types");
        causality_check(&program).expect("causality");
        clock_calculus(&program, &main).expect("clocks");
        let flat = inline(&program, &main).expect("inline");
        let clocks = clock_calculus(&flat.program, &main).expect("flat clocks");
        let opts = ExtractOptions {
            inner_dues: flat.dues.clone(),
            ..ExtractOptions::default()
        };
        let graph = extract(&flat.program, &main, &clocks, &opts).expect("extract");
        let words = deadline_calculus(&graph).expect("deadlines");
        let plans = crate::buffer::plan_buffers(&graph, &flat.program).expect("buffers");
        (SimSet::from_graph(&graph, &words, &plans), graph.tick)
    }

    fn fcs() -> (SimSet, Rational64) {
        let src = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/tests/fixtures/fcs.mps"
        ))
        .unwrap();
        compile(&src)
    }

    #[test]
    fn reload_then_save_is_byte_identical() {
        let (set, tick) = fcs();
        let text = render(&to_file(&set, tick));
        let file = parse_file(&text).unwrap();
        let (reloaded, tick2) = to_sim_set(&file).unwrap();
        assert_eq!(tick2, tick);
        assert_eq!(render(&to_file(&reloaded, tick2)), text);
    }

    #[test]
    fn loaded_sets_schedule_like_the_originals() {
        let (set, tick) = fcs();
        let file = parse_file(&render(&to_file(&set, tick))).unwrap();
        let (reloaded, _) = to_sim_set(&file).unwrap();
        let horizon = set.default_horizon().unwrap();
        let a = simulate(&set, &SimConfig { horizon, policy: Policy::EdfDword }).unwrap();
        let b = simulate(&reloaded, &SimConfig { horizon, policy: Policy::EdfDword }).unwrap();
        assert_eq!(a.misses, b.misses);
        // Scheduling events agree exactly; only produced values differ.
        let sched = |tr: &crate::sim::SimTrace| {
            tr.events
                .iter()
                .filter(|(_, e)| {
                    !matches!(
                        e,
                        crate::sim::Event::BufferWrite { .. } | crate::sim::Event::BufferRead { .. }
                    )
                })
                .cloned()
                .collect::<Vec<_>>()
        };
        assert_eq!(sched(&a), sched(&b));
    }

    #[test]
    fn canonical_form_is_stable_and_ordered() {
        let (set, tick) = fcs();
        let text = render(&to_file(&set, tick));
        assert!(text.starts_with("{\n  \"version\": 1,\n  \"tick\": \"1/1\","));
        assert!(text.ends_with("\n"));
        let tasks = text.find("\"tasks\"").unwrap();
        let buffers = text.find("\"buffers\"").unwrap();
        let edges = text.find("\"edges\"").unwrap();
        assert!(tasks < buffers && buffers < edges);
    }

    #[test]
    fn malformed_documents_are_usage_errors() {
        let cases: Vec<(&str, String)> = vec![
            ("not json", "{".to_string()),
            ("bad version", {
                let (set, tick) = fcs();
                let mut f = to_file(&set, tick);
                f.version = 9;
                render(&f)
            }),
            ("bad kind", {
                let (set, tick) = fcs();
                let mut f = to_file(&set, tick);
                f.tasks[0].kind = "widget".to_string();
                render(&f)
            }),
            ("bad op", {
                let (set, tick) = fcs();
                let mut f = to_file(&set, tick);
                f.edges[0].ops = vec!["^^3".to_string()];
                render(&f)
            }),
            ("unknown producer", {
                let (set, tick) = fcs();
                let mut f = to_file(&set, tick);
                f.buffers[0].producer = "ghost".to_string();
                render(&f)
            }),
            ("empty dword", {
                let (set, tick) = fcs();
                let mut f = to_file(&set, tick);
                f.tasks[0].dword.clear();
                render(&f)
            }),
        ];
        for (label, text) in cases {
            let err = parse_file(&text).and_then(|f| to_sim_set(&f).map(|_| ()));
            let err = err.expect_err(label);
            assert_eq!(err.kind, ErrorKind::Usage, "{label}: {err}");
        }
    }

    #[test]
    fn ops_strings_round_trip() {
        let ops = vec![
            PrecOp::Under(2),
            PrecOp::Over(3),
            PrecOp::Offset(Rational64::new(1, 2)),
            PrecOp::Offset(Rational64::new(3, 1)),
            PrecOp::Delay,
        ];
        for op in ops {
            assert_eq!(parse_op(&op.to_string()).unwrap(), op);
        }
    }
}

//! Deadline word calculus.
//!
//! Encodes the precedences of the task graph into per-task deadline
//! words, so that plain EDF on the resulting independent task set never
//! schedules a consumer instance before the producer instance it reads.
//! The deadline of instance n of task i is
//!
//! ```text
//! D_i(n) = r_i + n*T_i + w_i[n mod |w_i|]
//! ```
//!
//! where w_i is the task's deadline word. Words start at the `due`
//! annotation when one is present, at the period otherwise, and are
//! tightened backwards from the consumers: for an edge i -> j with
//! operator list ops and instance mapping g, instance n of i must
//! complete early enough for instance g(n) of j to still fit its own
//! work before its deadline, giving the constraint word
//!
//! ```text
//! cstr[n] = w_j[g(n)] + g(n)*T_j - n*T_i - C_j + r_j - r_i
//! ```
//!
//! which is periodic; w_i becomes min(w_i, cstr) pointwise. Edges whose
//! operators include a delay impose no constraint: the consumer reads the
//! previous instance, which the release times already order. Processing
//! tasks in reverse topological order makes one pass sufficient.
//!
//! A word entry smaller than the task's demand means some instance
//! cannot finish by its deadline even alone on the processor; the
//! program is rejected. Zero-demand tasks may have zero entries: such
//! instances are dispatched instantaneously at their release.

use crate::diag::{Error, ErrorKind, Result};
use crate::dword::DWord;
use crate::graph::{Task, TaskGraph};
use crate::ops::{constraint_word, PrecOp};

/// Deadline words, indexed like `graph.tasks`.
#[derive(Debug, Clone)]
pub struct DeadlineWords {
    pub words: Vec<DWord>,
}

/// One tightening step, recorded for inspection: the consumer whose word
/// was propagated, the producer it constrained, and the constraint word.
#[derive(Debug, Clone)]
pub struct PropagationStep {
    pub consumer: usize,
    pub producer: usize,
    pub constraint: DWord,
}

impl DeadlineWords {
    pub fn word(&self, task: usize) -> &DWord {
        &self.words[task]
    }

    /// Absolute deadline of instance n of a task, in ticks.
    pub fn deadline(&self, graph: &TaskGraph, task: usize, n: i64) -> i64 {
        let t = &graph.tasks[task];
        t.release + n * t.period + self.words[task].index(n)
    }

    /// Collapses each word to its minimum entry, the uniform
    /// deadline-per-task encoding this crate's scheduler is compared
    /// against.
    pub fn uniform(&self) -> DeadlineWords {
        DeadlineWords {
            words: self
                .words
                .iter()
                .map(|w| DWord::constant(w.min_entry()))
                .collect(),
        }
    }
}

pub fn deadline_calculus(graph: &TaskGraph) -> Result<DeadlineWords> {
    Ok(run(graph)?.0)
}

/// Like [`deadline_calculus`], also returning every propagation step in
/// processing order.
pub fn deadline_calculus_trace(graph: &TaskGraph) -> Result<(DeadlineWords, Vec<PropagationStep>)> {
    run(graph)
}

fn run(graph: &TaskGraph) -> Result<(DeadlineWords, Vec<PropagationStep>)> {
    let n = graph.tasks.len();
    let mut words: Vec<DWord> = graph
        .tasks
        .iter()
        .map(|t| DWord::constant(t.due.unwrap_or(t.period)))
        .collect();
    for (task, word) in graph.tasks.iter().zip(&words) {
        check_feasible(task, word)?;
    }

    // Delayed edges impose no precedence between same-index instances.
    let edges: Vec<&crate::graph::Edge> = graph
        .edges
        .iter()
        .filter(|e| !e.ops.contains(&PrecOp::Delay))
        .collect();

    let mut outdeg = vec![0usize; n];
    for e in &edges {
        outdeg[e.src] += 1;
    }

    let mut steps = Vec::new();
    let mut done = vec![false; n];
    for _ in 0..n {
        // Smallest-index task whose consumers are all processed.
        let j = (0..n)
            .find(|&j| !done[j] && outdeg[j] == 0)
            .expect("delay-free task graph is acyclic");
        done[j] = true;
        for e in edges.iter().filter(|e| e.dst == j) {
            let i = e.src;
            let src = &graph.tasks[i];
            let dst = &graph.tasks[j];
            let cstr = constraint_word(
                &e.ops,
                &words[j],
                src.period,
                dst.period,
                dst.wcet,
                src.release,
                dst.release,
            );
            steps.push(PropagationStep {
                consumer: j,
                producer: i,
                constraint: cstr.clone(),
            });
            words[i] = words[i].min(&cstr);
            // Erroring as soon as a word tightens below the demand points
            // the diagnostic at the task closest to the cause.
            check_feasible(src, &words[i])?;
            outdeg[i] -= 1;
        }
    }
    Ok((DeadlineWords { words }, steps))
}

fn check_feasible(task: &Task, word: &DWord) -> Result<()> {
    for (k, &d) in word.pattern().iter().enumerate() {
        if d < 0 {
            return Err(Error::spanless(
                ErrorKind::Infeasible,
                format!(
                    "deadline of task `{}` instance {} is negative ({})",
                    task.name, k, d
                ),
            ));
        }
        if d < task.wcet {
            return Err(Error::spanless(
                ErrorKind::Infeasible,
                format!(
                    "deadline of task `{}` instance {} is {} ticks, below its demand {}",
                    task.name, k, d, task.wcet
                ),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::clock_calculus;
    use crate::graph::{extract, ExtractOptions};
    use crate::inline::inline;
    use crate::parser::parse;

    fn build(src: &str) -> (TaskGraph, DeadlineWords, Vec<PropagationStep>) {
        let p = parse(src).unwrap();
        let main = p.default_main().unwrap().name.clone();
        let inlined = inline(&p, &main).unwrap();
        let clocks = clock_calculus(&inlined.program, &main).unwrap();
        let opts = ExtractOptions {
            inner_dues: inlined.dues,
            ..ExtractOptions::default()
        };
        let graph = extract(&inlined.program, &main, &clocks, &opts).unwrap();
        let (words, steps) = deadline_calculus_trace(&graph).unwrap();
        (graph, words, steps)
    }

    fn word_of<'a>(g: &TaskGraph, w: &'a DeadlineWords, name: &str) -> &'a [i64] {
        let (i, _) = g.task(name).unwrap();
        w.words[i].pattern()
    }

    #[test]
    fn flight_control_words() {
        let (g, w, _) = build(include_str!("../tests/fixtures/fcs.mps"));
        assert_eq!(word_of(&g, &w, "PA"), [10]);
        assert_eq!(word_of(&g, &w, "AA"), [5, 10, 10, 10]);
        assert_eq!(word_of(&g, &w, "FL"), [9, 10, 10, 10]);
        assert_eq!(word_of(&g, &w, "PF"), [9]);
        assert_eq!(word_of(&g, &w, "PL"), [15]);
        assert_eq!(word_of(&g, &w, "NL"), [120]);
        assert_eq!(word_of(&g, &w, "NF"), [100]);
        assert_eq!(word_of(&g, &w, "order"), [15]);
        assert_eq!(word_of(&g, &w, "pos"), [9]);
        assert_eq!(word_of(&g, &w, "pos_r"), [100]);
        assert_eq!(word_of(&g, &w, "acc"), [4, 9, 9, 9]);
        assert_eq!(word_of(&g, &w, "angle"), [6, 7, 7, 7]);
    }

    #[test]
    fn two_stage_chain_words() {
        let (g, w, _) = build(include_str!("../tests/fixtures/dw.mps"));
        assert_eq!(word_of(&g, &w, "o"), [6]);
        assert_eq!(word_of(&g, &w, "B"), [6]);
        assert_eq!(word_of(&g, &w, "A"), [2, 4]);
        assert_eq!(word_of(&g, &w, "i"), [0, 2]);
    }

    #[test]
    fn forked_unit_words_and_constraints() {
        let (g, w, steps) = build(include_str!("../tests/fixtures/msu.mps"));
        assert_eq!(word_of(&g, &w, "toEnv"), [100]);
        assert_eq!(word_of(&g, &w, "applyCmd"), [95]);
        assert_eq!(word_of(&g, &w, "basicOp"), [75]);
        assert_eq!(word_of(&g, &w, "B"), [470]);
        assert_eq!(word_of(&g, &w, "A"), [500]);
        assert_eq!(word_of(&g, &w, "C"), [420]);
        assert_eq!(word_of(&g, &w, "F"), [450]);
        assert_eq!(word_of(&g, &w, "E"), [460]);
        assert_eq!(word_of(&g, &w, "D"), [500]);
        assert_eq!(word_of(&g, &w, "fromEnv"), [35]);
        assert_eq!(word_of(&g, &w, "env"), [30]);
        assert_eq!(word_of(&g, &w, "cmd"), [100]);

        // The nine constraints among computations, by (consumer, producer).
        let name = |i: usize| g.tasks[i].name.as_str();
        let comp_steps: Vec<(&str, &str, i64)> = steps
            .iter()
            .filter(|s| {
                g.tasks[s.consumer].kind == crate::graph::TaskKind::Computation
                    && g.tasks[s.producer].kind == crate::graph::TaskKind::Computation
            })
            .map(|s| {
                assert_eq!(s.constraint.pattern().len(), 1);
                (name(s.consumer), name(s.producer), s.constraint.pattern()[0])
            })
            .collect();
        let mut sorted = comp_steps.clone();
        sorted.sort();
        assert_eq!(
            sorted,
            [
                ("A", "B", 470),
                ("B", "basicOp", 460),
                ("C", "basicOp", 400),
                ("D", "E", 460),
                ("E", "F", 450),
                ("F", "C", 420),
                ("applyCmd", "basicOp", 75),
                ("basicOp", "fromEnv", 35),
                ("toEnv", "applyCmd", 95),
            ]
        );
    }

    #[test]
    fn infeasible_deadlines_name_the_task_and_instance() {
        // A 4-tick computation squeezed to 3 ticks by the actuator's due.
        let err_graph = build_err(
            "imported node N(i: int) returns (o: int) wcet 4;\n\
             node M(x: rate(10, 0)) returns (y: due 3)\nlet y = N(x); tel",
        );
        let msg = err_graph.to_string();
        assert!(msg.contains("task `N`"), "{msg}");
        assert!(msg.contains("instance 0"), "{msg}");
        assert!(msg.contains("below its demand 4"), "{msg}");
    }

    fn build_err(src: &str) -> Error {
        let p = parse(src).unwrap();
        let main = p.default_main().unwrap().name.clone();
        let inlined = inline(&p, &main).unwrap();
        let clocks = clock_calculus(&inlined.program, &main).unwrap();
        let graph = extract(
            &inlined.program,
            &main,
            &clocks,
            &ExtractOptions::default(),
        )
        .unwrap();
        deadline_calculus(&graph).unwrap_err()
    }

    #[test]
    fn zero_demand_tasks_may_sit_on_their_release() {
        // The sensor word of the two-stage chain contains a zero entry;
        // it is accepted because sensors cost nothing.
        let (g, w, _) = build(include_str!("../tests/fixtures/dw.mps"));
        assert_eq!(word_of(&g, &w, "i")[0], 0);
    }

    #[test]
    fn uniform_words_take_the_minimum() {
        let (g, w, _) = build(include_str!("../tests/fixtures/dw.mps"));
        let u = w.uniform();
        assert_eq!(word_of(&g, &u, "A"), [2]);
        assert_eq!(word_of(&g, &u, "B"), [6]);
    }

    #[test]
    fn dynamic_deadlines_follow_release_period_and_word() {
        let (g, w, _) = build(include_str!("../tests/fixtures/dw.mps"));
        let (a, _) = g.task("A").unwrap();
        assert_eq!(w.deadline(&g, a, 0), 2);
        assert_eq!(w.deadline(&g, a, 1), 8);
        assert_eq!(w.deadline(&g, a, 2), 10);
        assert_eq!(w.deadline(&g, a, 3), 16);
    }
}

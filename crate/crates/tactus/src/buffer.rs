//! Communication buffer planning.
//!
//! Each edge of the task graph gets one lock-free buffer written only by
//! its producer. The retention requirement: a value must stay readable
//! until the deadline of the last instance that consumes it, yet the
//! producer may publish its next value as early as that value's release.
//! For a plain or uniformly scaled edge one cell is enough: the write
//! mask skips unconsumed instances, and the next kept write is released
//! no earlier than the deadline of every reader of the current one. A
//! delay, a phase offset, or a mixed scaling (`*^` and `/^` on one edge)
//! breaks that alignment, so those edges get two cells written
//! alternately. The producer writes instance n only when g(n) differs
//! from g(n+1), that is, when some consumer instance actually reads the
//! value; the cell is chosen by the parity of the write count so far,
//! and the consumer derives the same parity from the instance it
//! consumes. A delayed edge seeds cell 1 with the `fby` initializer, and
//! the first write lands in cell 0, away from it.
//!
//! The alignment argument depends on the deadline words, so after the
//! calculus has run, [`verify_depths`] replays the worst case of every
//! edge: the latest read each consumer instance may perform against the
//! earliest writes that could land on its cell. Exotic combinations that
//! would need a third cell are rejected there.
//!
//! Buffers are named `producer_output_consumer_input`, with the output
//! and input parts dropped for sensors, constants and actuators, which
//! have no named ports.

use crate::ast::{Lit, Program};
use crate::diag::{Error, ErrorKind, Result};
use crate::graph::{TaskGraph, TaskKind};
use crate::ops::{self, has_delay, has_offset, PrecOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadRule {
    /// Single cell: reads and writes meet in cell 0.
    Same,
    /// Double buffer: instance m reads the cell its consumed instance was
    /// written to.
    ConsumedInstanceMod2,
}

impl ReadRule {
    pub fn label(&self) -> &'static str {
        match self {
            ReadRule::Same => "same",
            ReadRule::ConsumedInstanceMod2 => "consumed_instance_mod2",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BufferPlan {
    pub name: String,
    /// Index into `graph.edges`.
    pub edge: usize,
    pub producer: usize,
    pub consumer: usize,
    pub size: u8,
    /// Seed value of cell 1 on delayed edges.
    pub init: Option<Lit>,
    /// Periodic over producer instances; length is the pattern period of
    /// the delay-stripped operator list.
    pub write_mask: Vec<bool>,
    pub read_rule: ReadRule,
}

impl BufferPlan {
    /// Cell written by producer instance n, given how many writes
    /// preceded it; `None` when the mask skips the instance.
    pub fn write_cell(&self, n: i64) -> Option<u8> {
        let mask = &self.write_mask;
        if !mask[(n % mask.len() as i64) as usize] {
            return None;
        }
        if self.size == 1 {
            return Some(0);
        }
        Some((self.write_rank(n) % 2) as u8)
    }

    /// Number of writes before instance n.
    fn write_rank(&self, n: i64) -> i64 {
        let len = self.write_mask.len() as i64;
        let per_period: i64 = self.write_mask.iter().map(|&b| i64::from(b)).sum();
        let full = n.div_euclid(len);
        let rest = (0..n.rem_euclid(len))
            .filter(|&k| self.write_mask[k as usize])
            .count() as i64;
        full * per_period + rest
    }

    /// Cell read by consumer instance m; `consumed` is the producer
    /// instance it reads, -1 for the initializer.
    ///
    /// Plans produced by [`plan_buffers`] write every consumed instance,
    /// so the designated cell holds exactly that value. The lookup stays
    /// total on masks that break the invariant (a corrupted or hand-built
    /// task-set file): the consumer then reads whatever the cell last
    /// held, and the semantics check reports the stale value.
    pub fn read_cell(&self, consumed: i64) -> u8 {
        if self.size == 1 {
            return 0;
        }
        if consumed < 0 {
            return 1;
        }
        (self.write_rank(consumed) % 2) as u8
    }
}

pub fn plan_buffers(graph: &TaskGraph, program: &Program) -> Result<Vec<BufferPlan>> {
    let mut used = std::collections::HashSet::new();
    let mut plans = Vec::with_capacity(graph.edges.len());
    for (idx, edge) in graph.edges.iter().enumerate() {
        let delays = edge.ops.iter().filter(|o| **o == PrecOp::Delay).count();
        if delays > 1 {
            return Err(Error::new(
                ErrorKind::Extraction,
                edge.span,
                "chained `fby` would need a deeper buffer and is not supported",
            ));
        }
        let src = &graph.tasks[edge.src];
        let dst = &graph.tasks[edge.dst];
        let producer_part = match src.kind {
            TaskKind::Computation => {
                let node = program
                    .imported(src.node.as_deref().expect("computations are imported"))
                    .expect("imported node exists");
                format!("{}_{}", src.name, node.returns[edge.src_out].name)
            }
            _ => src.name.clone(),
        };
        let consumer_part = match dst.kind {
            TaskKind::Computation => {
                let node = program
                    .imported(dst.node.as_deref().expect("computations are imported"))
                    .expect("imported node exists");
                format!("{}_{}", dst.name, node.params[edge.dst_port].name)
            }
            _ => dst.name.clone(),
        };
        let mut name = format!("{producer_part}_{consumer_part}");
        let mut k = 1;
        while !used.insert(name.clone()) {
            k += 1;
            name = format!("{producer_part}_{consumer_part}_{k}");
        }

        let mixed = edge.ops.iter().any(|o| matches!(o, PrecOp::Over(_)))
            && edge.ops.iter().any(|o| matches!(o, PrecOp::Under(_)));
        let double = has_delay(&edge.ops) || has_offset(&edge.ops) || mixed;
        plans.push(BufferPlan {
            name,
            edge: idx,
            producer: edge.src,
            consumer: edge.dst,
            size: if double { 2 } else { 1 },
            init: if delays == 1 {
                Some(edge.inits[0])
            } else {
                None
            },
            write_mask: ops::write_mask(&edge.ops),
            read_rule: if double {
                ReadRule::ConsumedInstanceMod2
            } else {
                ReadRule::Same
            },
        });
    }
    Ok(plans)
}

/// Confirms that two cells are enough on every edge, given the deadline
/// words: between a consumer instance's value being written and the
/// latest tick that instance may read, fewer writes than the buffer has
/// cells can occur. Reads happen at a task's first execution tick, no
/// later than its deadline minus its execution time; writes happen at
/// completion, no earlier than release plus execution time. A write and
/// a read meeting at one tick boundary resolve in write-first order
/// except between two zero-cost tasks, which complete in deadline order
/// with the task order breaking ties. Assumes deadlines are met; a run
/// with misses is reported by the scheduler itself.
pub fn verify_depths(
    graph: &TaskGraph,
    words: &crate::deadline::DeadlineWords,
    plans: &[BufferPlan],
) -> Result<()> {
    let bound = graph.max_release() + 2 * graph.hyperperiod;
    for plan in plans {
        let edge = &graph.edges[plan.edge];
        let prod = &graph.tasks[plan.producer];
        let cons = &graph.tasks[plan.consumer];
        let masked = |n: i64| plan.write_mask[(n as usize) % plan.write_mask.len()];
        let mut m = 0i64;
        while cons.release + m * cons.period < bound {
            let d_cons = words.deadline(graph, plan.consumer, m);
            let read_latest = d_cons - cons.wcet;
            let mut overwrites = 0i64;
            let mut n = ops::consumed_instance(&edge.ops, m) + 1;
            loop {
                let write_earliest = prod.release + n * prod.period + prod.wcet;
                if write_earliest > read_latest {
                    break;
                }
                let clobbers = write_earliest < read_latest
                    || prod.wcet >= 1
                    || cons.wcet >= 1
                    || {
                        let d_prod = words.deadline(graph, plan.producer, n);
                        (d_prod, plan.producer) < (d_cons, plan.consumer)
                    };
                if masked(n) && clobbers {
                    overwrites += 1;
                }
                n += 1;
            }
            if overwrites >= plan.size as i64 {
                return Err(Error::new(
                    ErrorKind::Extraction,
                    edge.span,
                    format!(
                        "the transition from `{}` to `{}` would need a buffer of {} cells; \
                         only single and double buffers are supported",
                        prod.name,
                        cons.name,
                        overwrites + 1
                    ),
                ));
            }
            m += 1;
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

    fn build(src: &str) -> Result<(TaskGraph, Vec<BufferPlan>)> {
        let p = parse(src)?;
        let main = p.default_main().unwrap().name.clone();
        let inlined = inline(&p, &main)?;
        let clocks = clock_calculus(&inlined.program, &main)?;
        let opts = ExtractOptions {
            inner_dues: inlined.dues,
            ..ExtractOptions::default()
        };
        let graph = extract(&inlined.program, &main, &clocks, &opts)?;
        let plans = plan_buffers(&graph, &inlined.program)?;
        Ok((graph, plans))
    }

    fn plan<'a>(plans: &'a [BufferPlan], name: &str) -> &'a BufferPlan {
        plans
            .iter()
            .find(|p| p.name == name)
            .unwrap_or_else(|| panic!("no buffer {name}"))
    }

    #[test]
    fn mixed_scaling_needs_both_cells() {
        // The consumer runs at 3/4 of the sensor rate: instance 1 still
        // reads sensor instance 0, but sensor instance 1 is released (and
        // may complete) well before instance 1's deadline. One cell would
        // let that release overwrite the value mid-flight.
        let src = "\
imported node N(i: int) returns (o: int) wcet 1;
node M(x: int rate(8, 0)) returns (y)
let
  y = N(x *^ 4 /^ 3);
tel
";
        let (graph, plans) = build(src).unwrap();
        let p = plan(&plans, "x_N_i");
        assert_eq!(p.size, 2);
        assert_eq!(p.read_rule, ReadRule::ConsumedInstanceMod2);
        assert_eq!(p.init, None);
        let words = crate::deadline::deadline_calculus(&graph).unwrap();
        verify_depths(&graph, &words, &plans).unwrap();
    }

    #[test]
    fn fixture_plans_pass_depth_verification() {
        for src in [
            include_str!("../tests/fixtures/fcs.mps"),
            include_str!("../tests/fixtures/dw.mps"),
            include_str!("../tests/fixtures/msu.mps"),
        ] {
            let (graph, plans) = build(src).unwrap();
            let words = crate::deadline::deadline_calculus(&graph).unwrap();
            verify_depths(&graph, &words, &plans).unwrap();
        }
    }

    #[test]
    fn reaching_far_into_the_past_is_rejected() {
        // A three-period offset asks for the value of three instances
        // ago; by then the double buffer has wrapped.
        let src = "\
imported node N(i: int) returns (o: int) wcet 1;
node M(x: int rate(8, 0)) returns (y)
var v;
let
  v = N(x);
  y = v ~> 3;
tel
";
        let (graph, plans) = build(src).unwrap();
        let words = crate::deadline::deadline_calculus(&graph).unwrap();
        let err = verify_depths(&graph, &words, &plans).unwrap_err();
        assert!(err.message.contains("cells"), "{err}");
        assert_eq!(err.kind, ErrorKind::Extraction);
    }

    #[test]
    fn flight_control_buffers() {
        let (_, plans) = build(include_str!("../tests/fixtures/fcs.mps")).unwrap();
        let names: Vec<&str> = plans.iter().map(|p| p.name.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort_unstable();
        assert_eq!(
            sorted,
            [
                "AA_o_PF_i",
                "FL_o_PL_i1",
                "NF_o_NL_i1",
                "NL_o_PL_i3",
                "PA_o_NF_i",
                "PF_o_PL_i2",
                "PL_o_order",
                "acc_AA_i",
                "angle_FL_i",
                "pos_PA_i",
                "pos_r_NL_i2",
            ]
        );

        let fl = plan(&plans, "FL_o_PL_i1");
        assert_eq!(fl.size, 1);
        assert_eq!(fl.write_mask, [true, false, false, false]);
        assert_eq!(fl.read_rule, ReadRule::Same);

        let pa = plan(&plans, "PA_o_NF_i");
        assert_eq!(pa.write_mask.len(), 12);
        assert!(pa.write_mask[0]);
        assert_eq!(pa.write_mask.iter().filter(|&&b| b).count(), 1);

        let nl = plan(&plans, "NL_o_PL_i3");
        assert_eq!(nl.size, 2);
        assert_eq!(nl.init, Some(Lit::Int(0)));
        assert_eq!(nl.write_mask, [true]);
        assert_eq!(nl.read_rule, ReadRule::ConsumedInstanceMod2);
    }

    #[test]
    fn alternating_cells_on_a_delayed_edge() {
        let (_, plans) = build(include_str!("../tests/fixtures/fcs.mps")).unwrap();
        let nl = plan(&plans, "NL_o_PL_i3");
        // Every instance writes; parity alternates, first write in cell 0.
        assert_eq!(nl.write_cell(0), Some(0));
        assert_eq!(nl.write_cell(1), Some(1));
        assert_eq!(nl.write_cell(2), Some(0));
        // g(n) = 3n + 3 for [fby, *^3], so p(0..3) = -1 and p(3) = 0.
        assert_eq!(nl.read_cell(-1), 1);
        assert_eq!(nl.read_cell(0), 0);
        assert_eq!(nl.read_cell(1), 1);
    }

    #[test]
    fn sparse_writes_still_alternate_by_write_count() {
        // 0 fby (x /^ 2): only every other producer instance writes, yet
        // consecutive written values go to different cells.
        let (graph, plans) = build(
            "imported node N(i: int) returns (o: int) wcet 1;\n\
             imported node M(i: int) returns (o: int) wcet 1;\n\
             node T(x: rate(4, 0)) returns (y)\nvar v;\nlet v = N(x); y = M(0 fby (v /^ 2)); tel",
        )
        .unwrap();
        let p = plans
            .iter()
            .find(|p| graph.tasks[p.producer].name == "N")
            .unwrap();
        assert_eq!(p.size, 2);
        assert_eq!(p.write_mask, [true, false]);
        assert_eq!(p.write_cell(0), Some(0));
        assert_eq!(p.write_cell(1), None);
        assert_eq!(p.write_cell(2), Some(1));
        assert_eq!(p.write_cell(4), Some(0));
        // Consumer m reads producer instance 2m - 2; m = 0 reads the seed.
        assert_eq!(p.read_cell(-1), 1);
        assert_eq!(p.read_cell(0), 0);
        assert_eq!(p.read_cell(2), 1);
    }

    #[test]
    fn offset_edges_double_buffer_without_init() {
        let (_, plans) = build(
            "imported node N(i: int) returns (o: int) wcet 1;\n\
             imported node M(i: int) returns (o: int) wcet 1;\n\
             node T(x: rate(4, 0)) returns (y)\nvar v;\nlet v = N(x); y = M(v ~> 1/2); tel",
        )
        .unwrap();
        let p = plans.iter().find(|p| p.size == 2).unwrap();
        assert_eq!(p.init, None);
        assert_eq!(p.read_rule, ReadRule::ConsumedInstanceMod2);
    }

    #[test]
    fn chained_delays_are_rejected() {
        let err = build(
            "imported node N(i: int) returns (o: int) wcet 1;\n\
             node T(x: rate(4, 0)) returns (y)\nlet y = N(0 fby (1 fby x)); tel",
        )
        .unwrap_err();
        assert!(err.to_string().contains("chained `fby`"));
    }

    #[test]
    fn two_stage_chain_buffers() {
        let (_, plans) = build(include_str!("../tests/fixtures/dw.mps")).unwrap();
        let names: Vec<&str> = plans.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["i_A_i", "A_o_B_i", "B_o_o"]);
        assert_eq!(plan(&plans, "A_o_B_i").write_mask, [true, false]);
    }
}

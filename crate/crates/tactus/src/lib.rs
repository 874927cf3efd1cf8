//! Compiler and schedule simulator for a multi-periodic synchronous
//! dataflow language.
//!
//! Programs are networks of imported nodes (opaque computations with a
//! worst-case execution time) wired together by flows. Every flow has a
//! strictly periodic clock; rate operators move flows between rates:
//! `x /^ k` keeps every k-th sample, `x *^ k` repeats each sample `k`
//! times, `x ~> q` delays a flow by `q` periods, and `c fby x` delays by
//! one instant with initial value `c`. The compiler turns such a program
//! into a set of periodic real-time tasks that communicate through
//! wait-free buffers and are scheduled by EDF — with one crucial twist:
//! a task does not get a single relative deadline but a *deadline word*,
//! a repeating pattern assigning each instance its own deadline so that
//! every producer instance provably completes before every consumer
//! instance that reads it. Precedences are thereby encoded entirely in
//! deadlines; the runtime needs no synchronization beyond EDF itself.
//!
//! # Pipeline
//!
//! [`pipeline::compile_source`] runs the stages in order and returns a
//! [`pipeline::Compiled`] holding every intermediate product:
//!
//! 1. **Parse** ([`parser`], [`ast`]) and **type-check** ([`types`]).
//! 2. **Causality** ([`causality`]): every dependency cycle must pass
//!    through a delay.
//! 3. **Clock inference** ([`clock`]): solves every flow's
//!    `(period, phase)` against the rate annotations and operators.
//! 4. **Inlining** ([`inline`]): expands defined nodes into the main
//!    node, leaving a flat network of imported-node applications.
//! 5. **Task extraction** ([`graph`]): one task per sensor, constant,
//!    application, and actuator; periods, releases, and demands are
//!    normalized to integer ticks; rate-operator chains become edges.
//! 6. **Deadline calculus** ([`deadline`], [`dword`], [`ops`]):
//!    propagates deadline words backwards along delay-free edges so the
//!    precedence inequality holds for every instance pair.
//! 7. **Buffer planning** ([`buffer`]): sizes each edge's buffer (one or
//!    two cells), masks writes nobody reads, and fixes each consumer
//!    instance's read cell; a replay then verifies the depths against
//!    the computed words.
//!
//! [`sim`] schedules the result with EDF over any horizon and replays
//! reads and writes through the planned buffers; [`interp`] runs the
//! program symbolically as the semantic reference, and
//! [`sim::check_semantics`] compares every value the schedule read
//! against the interpreter's flows. [`taskset`] round-trips the compiled
//! set through a canonical JSON file; [`gen`] draws random compiling
//! programs for the randomized test suites; [`pipeline::check_compiled`]
//! bundles the whole audit.
//!
//! # Examples
//!
//! Each major capability has a runnable tour under `examples/`:
//!
//! - `compile_pipeline` — every stage's products for a four-sensor
//!   flight controller.
//! - `clock_inference` — multi-rate clock solving and a rate mismatch
//!   rejection.
//! - `deadline_words` — the word calculus step by step.
//! - `buffer_protocol` — cells, write masks, seeds, and read rules per
//!   edge shape.
//! - `reference_interpreter` — symbolic tagged flows, delays included.
//! - `edf_schedule` — a Gantt chart plus the interpreter cross-check.
//! - `instance_deadlines_vs_uniform` — why per-instance words beat one
//!   deadline per task.
//! - `task_set_file` — the canonical JSON interchange format.
//! - `random_program_audit` — bulk-checking generated programs.
//!
//! The `tactus` binary wraps the same pipeline as a CLI with `compile`,
//! `simulate`, and `check` subcommands.

pub mod ast;
pub mod buffer;
pub mod causality;
pub mod clock;
pub mod deadline;
pub mod diag;
pub mod dword;
pub mod gen;
pub mod graph;
pub mod inline;
pub mod interp;
pub mod lexer;
pub mod ops;
pub mod parser;
pub mod pipeline;
pub mod ratio;
pub mod sim;
pub mod taskset;
pub mod types;

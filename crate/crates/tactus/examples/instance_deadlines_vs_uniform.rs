//! Why deadlines are per-instance words, not one number per task.
//!
//! In a two-stage chain where B reads every other output of A, only
//! A's even instances feed B immediately — the odd ones have a full
//! period of slack. A word gives A the deadlines (2.4)^w. Collapsing
//! the word to its minimum — a classic single relative deadline of 2 —
//! overconstrains the odd instances and makes the set unschedulable,
//! even though the word-based schedule meets every deadline.
//!
//! Run with: `cargo run --example instance_deadlines_vs_uniform`

use tactus::pipeline::{compile_source, simulate_compiled, CompileOptions};
use tactus::sim::Policy;

const TWO_STAGE: &str = r#"
imported node A(i: int) returns (o: int) wcet 2;
imported node B(i: int) returns (o: int) wcet 4;

node dw(i: rate(4, 0)) returns (o: due 6)
var x;
let
  x = A(i);
  o = B(x /^ 2);
tel
"#;

fn main() {
    let c = compile_source(TWO_STAGE, &CompileOptions::default()).expect("compiles");

    println!("deadline words:");
    print!("{}", c.render_dwords());

    for (policy, label) in [
        (Policy::EdfDword, "per-instance deadline words"),
        (Policy::EdfUniform, "uniform deadlines (word minimum)"),
    ] {
        let out = simulate_compiled(&c, Some(16), policy).expect("simulates");
        println!("\n== EDF with {label} ==");
        println!("{}", out.trace.gantt());
        println!("misses: {}", out.trace.misses);
        for (t, task, n) in out.trace.deadline_misses() {
            println!("  instance {} of {} missed at tick {}", n, out.trace.task_names[task], t);
        }
    }

    println!("\nThe words keep utilization-1 load schedulable; the uniform");
    println!("collapse wastes the odd A instances' slack, and B — plus the");
    println!("actuator waiting on it — pays for it.");
}

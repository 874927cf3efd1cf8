//! The task-set interchange file.
//!
//! A compiled program exports to a canonical JSON task set — periods,
//! releases, demands, deadline words, edges, and buffer plans — that
//! the simulator can load and run without the source. The rendering is
//! byte-stable across save/load cycles, so files diff cleanly.
//!
//! Run with: `cargo run --example task_set_file`

use tactus::pipeline::{compile_source, CompileOptions};
use tactus::sim::{simulate, Policy, SimConfig};
use tactus::taskset;

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
    let file = taskset::to_file(&c.sim_set(), c.graph.tick);
    let text = taskset::render(&file);

    println!("== exported task set ======================================");
    println!("{text}");

    // Load it back as a standalone scheduling problem and run it.
    let parsed = taskset::parse_file(&text).expect("parses");
    assert_eq!(taskset::render(&parsed), text, "rendering is canonical");
    let (set, _tick) = taskset::to_sim_set(&parsed).expect("loads");
    let horizon = set.default_horizon().expect("horizon");
    let trace = simulate(&set, &SimConfig { horizon, policy: Policy::EdfDword })
        .expect("simulates");

    println!("== schedule replayed from the file ========================");
    println!("{}", trace.gantt());
    println!("misses: {}", trace.misses);
}

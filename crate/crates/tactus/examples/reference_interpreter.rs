//! The synchronous reference interpreter.
//!
//! Imported nodes have no implementation, so the interpreter runs
//! programs symbolically: the k-th firing of node `N` on arguments
//! `a, b` yields the term `N<k>(a, b)`. Each flow is an infinite
//! sequence of tagged values; tags are the ticks of the flow's clock.
//! The simulator's semantics check compares every buffer read against
//! these terms.
//!
//! Run with: `cargo run --example reference_interpreter`

use tactus::pipeline::{compile_source, CompileOptions};

const PROGRAM: &str = r#"
imported node A(i: int) returns (o: int) wcet 2;
imported node Fold(new: int; prev: int) returns (o: int) wcet 4;

node two_stage(i: rate(4, 0)) returns (o: due 6)
var x, acc;
let
  x = A(i);
  acc = Fold(x /^ 2, 0 fby acc);
  o = acc;
tel
"#;

fn main() {
    let c = compile_source(PROGRAM, &CompileOptions::default()).expect("compiles");
    let mut interp = c.interp().expect("interpretable");

    for var in ["i", "x", "acc"] {
        let flow = interp.flow(var, 25).expect("flow exists");
        println!(
            "{var}: period {} phase {} (ticks)",
            flow.period, flow.phase
        );
        for (tag, value) in &flow.rows {
            println!("  @{tag:<3} {value}");
        }
        println!();
    }

    println!("The delayed feedback shows up as nesting: each Fold firing");
    println!("folds the previous accumulator value into its new argument.");
}

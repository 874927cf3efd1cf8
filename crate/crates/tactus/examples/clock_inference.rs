//! Clock inference over rate operators.
//!
//! Every flow has a strictly periodic clock `(period, phase)`. Rate
//! annotations pin sensor clocks; `/^ k` divides a rate, `*^ k`
//! multiplies it, and `~> q` shifts a phase. The calculus infers every
//! other clock and rejects programs whose rates cannot agree.
//!
//! Run with: `cargo run --example clock_inference`

use tactus::pipeline::{compile_source, CompileOptions};

const MULTI_RATE: &str = r#"
imported node Blend(a: int; b: int) returns (o: int) wcet 1;
imported node Trim(i: int) returns (o: int) wcet 1;

node mix(fast: rate(4, 0); slow: rate(12, 1)) returns (o)
var f, s;
let
  f = Trim(fast /^ 3);     -- 4-unit flow sampled down to 12 units
  s = Blend(f ~> 1, slow); -- shift f so both flows sit at phase 1
  o = s *^ 2;              -- actuate twice per blend, every 6 units
tel
"#;

const MISMATCHED: &str = r#"
imported node Blend(a: int; b: int) returns (o: int) wcet 1;

node broken(x: rate(8, 0); y: rate(4, 0)) returns (o)
let
  o = Blend(x, y);  -- 8-unit and 4-unit flows cannot meet unsampled
tel
"#;

fn main() {
    let c = compile_source(MULTI_RATE, &CompileOptions::default())
        .expect("the multi-rate program compiles");

    println!("== inferred clock signatures ===============================");
    print!("{}", c.render_clocks());
    println!("\nPhases count in periods: the output clock (6,2) first fires");
    println!("at tick 12, two 6-unit periods in — one 12-unit period after");
    println!("the blended flows start at phase 1.");
    println!("\ntick = {} time units; in ticks the sensor 'fast' runs at", c.graph.tick);
    let (_, fast) = c.graph.task("fast").expect("fast is a task");
    println!(
        "period {} with first release {} (phase carried into releases).",
        fast.period, fast.release
    );

    println!("\n== a rate mismatch is rejected =============================");
    match compile_source(MISMATCHED, &CompileOptions::default()) {
        Ok(_) => unreachable!("the mismatched program must not compile"),
        Err(e) => println!("{e}"),
    }
}

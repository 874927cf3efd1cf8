//! End-to-end compilation of a multi-rate program.
//!
//! Walks the whole pipeline on a four-sensor flight controller: parsing,
//! type checking, clock inference, task extraction, deadline-word
//! calculus, and buffer planning — then prints what each stage produced.
//!
//! Run with: `cargo run --example compile_pipeline`

use tactus::pipeline::{compile_source, CompileOptions};

const FLIGHT_CONTROLLER: &str = r#"
imported node PA(i: int) returns (o: int) wcet 1;
imported node AA(i: int) returns (o: int) wcet 1;
imported node FL(i: int) returns (o: int) wcet 3;
imported node PF(i: int) returns (o: int) wcet 4;
imported node PL(i1: int; i2: int; i3: int) returns (o: int) wcet 6;
imported node NF(i: int) returns (o: int) wcet 5;
imported node NL(i1: int; i2: int) returns (o: int) wcet 20;

node acquisition(angle, pos, acc) returns (pos_i, acc_i, angle_r)
let
  pos_i = PA(pos);
  acc_i = AA(acc);
  angle_r = FL(angle);
tel

node piloting(angle_r, acc_i, acc_r) returns (order)
var acc_o;
let
  acc_o = PF(acc_i);
  order = PL(angle_r, acc_o, acc_r);
tel

node navigation(pos_i, pos_r) returns (acc_r)
var pos_o;
let
  pos_o = NF(pos_i);
  acc_r = NL(pos_o, pos_r);
tel

node FCS(pos_r: rate(120, 0); angle, pos, acc) returns (order: due 15)
var acc_i, acc_r, angle_r, pos_i;
let
  acc_r = navigation(pos_i /^ 12, pos_r);
  order = piloting(angle_r /^ 4, acc_i /^ 4, (0 fby acc_r) *^ 3);
  (pos_i, acc_i, angle_r) = acquisition(angle, pos, acc);
tel
"#;

fn main() {
    let c = compile_source(FLIGHT_CONTROLLER, &CompileOptions::default())
        .expect("the flight controller compiles");

    println!("== node types =============================================");
    print!("{}", c.render_types());

    println!("\n== clock signatures (periods and phases in time units) ===");
    print!("{}", c.render_clocks());

    println!("\n== task set ===============================================");
    println!(
        "tick = {} time units, hyperperiod = {} ticks, utilization = {}",
        c.graph.tick, c.graph.hyperperiod, c.graph.utilization
    );
    println!(
        "{:<10} {:<12} {:>6} {:>6} {:>5}  deadline word",
        "task", "kind", "T", "r", "C"
    );
    for (i, t) in c.graph.tasks.iter().enumerate() {
        println!(
            "{:<10} {:<12} {:>6} {:>6} {:>5}  {}",
            t.name,
            t.kind.label(),
            t.period,
            t.release,
            t.wcet,
            c.words.word(i)
        );
    }

    println!("\n== communication buffers ==================================");
    for plan in &c.buffers {
        let cells = if plan.size == 1 { "1 cell " } else { "2 cells" };
        let mask: String = plan
            .write_mask
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        println!("{:<24} {}  write mask {}", plan.name, cells, mask);
    }
}

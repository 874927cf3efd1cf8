//! How per-instance deadline words are computed.
//!
//! A task's deadline word assigns each of its instances a relative
//! deadline; words are propagated backwards from actuator deadlines so
//! that every producer instance completes early enough for every
//! consumer instance that reads it. This example prints the base
//! deadline of each task, every propagation step (which consumer
//! constrained which producer, and with what constraint word), and the
//! final words.
//!
//! Run with: `cargo run --example deadline_words`

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

    println!("== base deadlines (due annotation, or the period) =========");
    for t in &c.graph.tasks {
        match t.due {
            Some(d) => println!("{:<10} due {} of period {}", t.name, d, t.period),
            None => println!("{:<10} period {}", t.name, t.period),
        }
    }

    println!("\n== constraint propagation, in reverse topological order ===");
    for step in &c.steps {
        let consumer = &c.graph.tasks[step.consumer].name;
        let producer = &c.graph.tasks[step.producer].name;
        println!(
            "{:<10} <- {:<10} constrains it to {}",
            producer, consumer, step.constraint
        );
    }

    println!("\n== final deadline words ====================================");
    print!("{}", c.render_dwords());

    println!("\nReading: FL's word (9.10.10.10)^w — every fourth FL instance");
    println!("feeds the next PL firing, whose due 15 minus PL's demand 6");
    println!("leaves 9 ticks; the other three instances feed only later");
    println!("firings and keep their full period of 10.");
}

//! Wait-free communication buffers between tasks.
//!
//! Each data edge gets a one- or two-cell buffer, a periodic write mask
//! (producer instances nobody reads are never published), and a read
//! rule that tells each consumer instance which cell to take. Deadline
//! words make the protocol safe without locks: the producer's deadline
//! precedes every reader, so a value is complete before anyone looks.
//!
//! Run with: `cargo run --example buffer_protocol`

use tactus::ops::consumed_instance;
use tactus::pipeline::{compile_source, CompileOptions};

const PROGRAM: &str = r#"
imported node Scale(i: int) returns (o: int) wcet 1;
imported node Fuse(a: int; b: int) returns (o: int) wcet 1;
imported node Track(i: int) returns (o: int) wcet 2;

node buffers(s: rate(4, 0)) returns (o: due 10; t)
var v, fb;
let
  v = Scale(s);              -- same rate: single cell
  fb = Fuse(v, 0 fby fb);    -- delayed self loop: double buffer, seeded
  o = Track(fb /^ 3);        -- undersampled: mask skips unread writes
  t = (v *^ 4) /^ 3;         -- mixed scaling: double buffer again
tel
"#;

fn main() {
    let c = compile_source(PROGRAM, &CompileOptions::default()).expect("compiles");

    for plan in &c.buffers {
        let edge = &c.graph.edges[plan.edge];
        println!("buffer {}", plan.name);
        println!("  cells      {}", plan.size);
        match &plan.init {
            Some(lit) => println!("  seeded     cell 1 starts as {lit}"),
            None => println!("  seeded     no"),
        }
        let bits: String = plan
            .write_mask
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        println!("  write mask {bits} (producer instances, repeating)");

        // Replay the first few consumer instances against the plan.
        print!("  reads      ");
        for m in 0..4 {
            let n = consumed_instance(&edge.ops, m);
            if n < 0 {
                print!("m{m}<-seed  ");
            } else {
                print!("m{m}<-n{n}@cell{}  ", plan.read_cell(n));
            }
        }
        println!("\n");
    }
}

//! Bulk-checking randomly generated programs.
//!
//! Draws compiling programs from the seeded generator and audits each
//! one: word shapes, the producer-consumer deadline inequality, a full
//! EDF simulation, the interpreter cross-check, and the task-set file
//! round trip. Overloaded draws (deadline misses under EDF) are
//! reported as such — a miss is a capacity fact, not a defect.
//!
//! Run with: `cargo run --example random_program_audit [first_seed [count]]`

use tactus::gen::random_program;
use tactus::pipeline::check_compiled;

fn main() {
    let mut args = std::env::args().skip(1);
    let first: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0);
    let count: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(25);

    println!(
        "{:>5} {:>6} {:>5} {:>6} {:>9} {:>7}  verdict",
        "seed", "tasks", "H", "U", "|w| max", "draws"
    );

    let mut clean = 0usize;
    let mut overloaded = 0usize;
    for seed in first..first + count {
        let g = random_program(seed);
        let c = &g.compiled;
        let report = check_compiled(c).expect("checkable");
        let wmax = (0..c.graph.tasks.len())
            .map(|i| c.words.word(i).len())
            .max()
            .unwrap_or(0);

        let verdict = if report.ok() {
            clean += 1;
            "ok".to_string()
        } else if report.misses > 0 && report.mismatches == 0 && report.soundness_violations == 0 {
            overloaded += 1;
            format!("overloaded ({} misses)", report.misses)
        } else {
            format!(
                "BROKEN ({} mismatches, {} precedence violations)",
                report.mismatches, report.soundness_violations
            )
        };

        println!(
            "{:>5} {:>6} {:>5} {:>6} {:>9} {:>7}  {}",
            seed,
            c.graph.tasks.len(),
            c.graph.hyperperiod,
            c.graph.utilization.to_string(),
            wmax,
            g.attempts,
            verdict
        );
    }

    println!("\n{clean} clean, {overloaded} overloaded, out of {count}");
}

//! Seeded random program generator for the property suites.
//!
//! Draws small well-formed programs: a handful of imported nodes, sensors
//! on declared rates, a chain of applications connected by rate
//! transitions of at most two operators per argument, at most one delayed
//! feedback loop, and aliased actuators with optional deadline
//! annotations and phase offsets. Draws that the compiler rejects (an
//! overloaded rate, an infeasible deadline) are discarded and redrawn, so
//! every returned program compiles; the draw sequence depends only on the
//! seed.
//!
//! The bounds keep hyperperiods small enough that a whole suite of a few
//! hundred programs compiles, schedules and cross-checks in seconds.

use num_integer::Integer;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::pipeline::{compile_source, CompileOptions, Compiled};

/// Periods drawn for sensors and equations; lcm 24 bounds the hyperperiod.
pub const PERIODS: [i64; 7] = [1, 2, 4, 8, 3, 6, 12];

const MAX_IMPORTED: usize = 5;
const MAX_SENSORS: usize = 3;
const MAX_EQUATIONS: usize = 5;
const MAX_ARITY: usize = 3;

/// A compiling program drawn from the seed, plus how many draws it took.
pub struct Generated {
    pub source: String,
    pub seed: u64,
    pub attempts: u32,
    pub compiled: Compiled,
}

/// Draws candidates from the seeded stream until one compiles.
pub fn random_program(seed: u64) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=1000 {
        let source = draw(&mut rng);
        if let Ok(compiled) = compile_source(&source, &CompileOptions::default()) {
            return Generated {
                source,
                seed,
                attempts: attempt,
                compiled,
            };
        }
    }
    unreachable!("a thousand draws without one compiling program");
}

/// One flow available as an argument: its name and period.
struct Avail {
    name: String,
    period: i64,
}

fn draw(rng: &mut ChaCha8Rng) -> String {
    let n_imported = rng.gen_range(1..=MAX_IMPORTED);
    let n_sensors = rng.gen_range(1..=MAX_SENSORS);
    let n_eqs = rng.gen_range(1..=MAX_EQUATIONS);

    let mut out = String::new();
    let mut arities = Vec::new();
    for k in 0..n_imported {
        let arity = rng.gen_range(1..=MAX_ARITY);
        let wcet = rng.gen_range(1..=2);
        let params = (0..arity)
            .map(|i| format!("a{i}: int"))
            .collect::<Vec<_>>()
            .join("; ");
        out.push_str(&format!(
            "imported node N{k}({params}) returns (o: int) wcet {wcet};\n"
        ));
        arities.push(arity);
    }
    out.push('\n');

    let mut pool = Vec::new();
    let mut sensors = Vec::new();
    for s in 0..n_sensors {
        let period = PERIODS[rng.gen_range(0..PERIODS.len())];
        sensors.push(format!("s{s}: int rate({period}, 0)"));
        pool.push(Avail {
            name: format!("s{s}"),
            period,
        });
    }

    // Equations first, so the feedback rewrite can see every period.
    let mut eq_nodes = Vec::new();
    let mut eq_periods = Vec::new();
    for _ in 0..n_eqs {
        let node = rng.gen_range(0..n_imported);
        // Tiny periods overload easily; lean on the larger ones.
        let period = PERIODS[rng.gen_range(2..PERIODS.len())];
        eq_nodes.push(node);
        eq_periods.push(period);
    }

    let mut eqs = Vec::new();
    for (e, &node) in eq_nodes.iter().enumerate() {
        let target = eq_periods[e];
        let args = (0..arities[node])
            .map(|_| {
                if rng.gen_bool(0.15) {
                    return format!("{}", rng.gen_range(0..10));
                }
                let src = &pool[rng.gen_range(0..pool.len())];
                argument(rng, &src.name, src.period, target)
            })
            .collect::<Vec<_>>()
            .join(", ");
        eqs.push(format!("v{e} = N{node}({args});"));
        pool.push(Avail {
            name: format!("v{e}"),
            period: target,
        });
    }

    // At most one delayed feedback loop: one argument of one equation is
    // replaced by the delayed value of a later (or the same) equation on
    // the same clock.
    if rng.gen_bool(0.4) {
        let e = rng.gen_range(0..n_eqs);
        let peers: Vec<usize> = (0..n_eqs).filter(|&k| eq_periods[k] == eq_periods[e]).collect();
        if !peers.is_empty() {
            let k = peers[rng.gen_range(0..peers.len())];
            let arity = arities[eq_nodes[e]];
            let port = rng.gen_range(0..arity);
            let init = rng.gen_range(0..3);
            let (head, rest) = eqs[e].split_once('(').expect("equations apply a node");
            let mut args = split_args(rest.trim_end_matches(");"));
            args[port] = format!("({init} fby v{k})");
            eqs[e] = format!("{head}({});", args.join(", "));
        }
    }

    // Returns alias equation outputs, sometimes behind a phase offset.
    let n_returns = rng.gen_range(1..=2.min(n_eqs));
    let mut returns = Vec::new();
    for r in 0..n_returns {
        let v = rng.gen_range(0..n_eqs);
        let period = eq_periods[v];
        let rhs = if rng.gen_bool(0.25) {
            let q = ["1/2", "1"][rng.gen_range(0..2)];
            format!("v{v} ~> {q}")
        } else {
            format!("v{v}")
        };
        eqs.push(format!("y{r} = {rhs};"));
        let decl = if rng.gen_bool(0.5) {
            let due = rng.gen_range((period / 2).max(1)..=period);
            format!("y{r}: due {due}")
        } else {
            format!("y{r}")
        };
        returns.push(decl);
    }

    let locals = (0..n_eqs).map(|e| format!("v{e}")).collect::<Vec<_>>().join(", ");
    out.push_str(&format!(
        "node gen({}) returns ({})\nvar {locals};\nlet\n",
        sensors.join("; "),
        returns.join(", ")
    ));
    for eq in &eqs {
        out.push_str("  ");
        out.push_str(eq);
        out.push('\n');
    }
    out.push_str("tel\n");
    out
}

/// Splits a rendered argument list at top-level commas.
fn split_args(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' => {
                depth += 1;
                cur.push(c);
            }
            ')' => {
                depth -= 1;
                cur.push(c);
            }
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur = String::new();
            }
            _ => cur.push(c),
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

/// Renders one argument: the source flow carried from its period to the
/// target period by at most two rate operators, optionally behind a unit
/// delay when one scaling operator suffices.
fn argument(rng: &mut ChaCha8Rng, name: &str, from: i64, to: i64) -> String {
    let g = from.gcd(&to);
    let (slow, fast) = (to / g, from / g);
    let delayed = |rng: &mut ChaCha8Rng, body: String| {
        if rng.gen_bool(0.3) {
            let init = rng.gen_range(0..3);
            format!("({init} fby {body})")
        } else {
            body
        }
    };
    match (slow, fast) {
        (1, 1) => delayed(rng, name.to_string()),
        (a, 1) => format!("{} /^ {a}", delayed(rng, name.to_string())),
        (1, b) => format!("{} *^ {b}", delayed(rng, name.to_string())),
        (a, b) => format!("{name} *^ {b} /^ {a}"),
    }
}

//! Causality analysis: no variable may depend instantaneously on itself.
//!
//! Dependencies flow through every construct except the delayed argument
//! of `fby`. The rate operators do not break instantaneous dependence:
//! the first value of `x /^ 2` is the first value of `x`, so `a = b;
//! b = a /^ 2;` deadlocks and is rejected.
//!
//! Calls to defined nodes use a per-callee summary (which outputs depend
//! instantaneously on which inputs) so that hierarchies are checked
//! without inlining. Recursive node instantiation is rejected here, since
//! a summary for a recursive node would be self-referential.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::ast::*;
use crate::diag::{Error, ErrorKind, Result};

pub fn causality_check(p: &Program) -> Result<()> {
    let mut summaries: HashMap<String, Summary> = HashMap::new();
    for decl in &p.decls {
        if let Decl::Defined(node) = decl {
            summary_of(&node.name, p, &mut summaries, &mut Vec::new())?;
        }
    }
    Ok(())
}

/// For each return index, the set of parameter indices it depends on
/// instantaneously.
type Summary = Vec<BTreeSet<usize>>;

fn summary_of(
    name: &str,
    p: &Program,
    summaries: &mut HashMap<String, Summary>,
    in_progress: &mut Vec<String>,
) -> Result<Summary> {
    if let Some(s) = summaries.get(name) {
        return Ok(s.clone());
    }
    if let Some(n) = p.imported(name) {
        // External code: assume every output reads every input.
        let all: BTreeSet<usize> = (0..n.params.len()).collect();
        let s: Summary = vec![all; n.returns.len()];
        summaries.insert(name.to_string(), s.clone());
        return Ok(s);
    }
    let node = p.defined(name).expect("callee resolved during validation");
    if in_progress.iter().any(|n| n == name) {
        return Err(Error::new(
            ErrorKind::Causality,
            node.span,
            format!("recursive instantiation of node `{name}`"),
        ));
    }
    in_progress.push(name.to_string());
    let s = check_node(node, p, summaries, in_progress)?;
    in_progress.pop();
    summaries.insert(name.to_string(), s.clone());
    Ok(s)
}

fn check_node(
    node: &DefinedNode,
    p: &Program,
    summaries: &mut HashMap<String, Summary>,
    in_progress: &mut Vec<String>,
) -> Result<Summary> {
    // Variable universe in a stable order: params, returns, locals.
    let mut order: Vec<&str> = Vec::new();
    for par in node.params.iter().chain(node.returns.iter()) {
        order.push(&par.name);
    }
    for l in &node.locals {
        order.push(&l.name);
    }
    let index: HashMap<&str, usize> = order.iter().enumerate().map(|(i, &n)| (n, i)).collect();

    // reads[v] = variables v reads instantaneously.
    let mut reads: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); order.len()];
    for eq in &node.equations {
        if eq.lhs.len() > 1 {
            // Multi-output application: each target depends on the
            // arguments its output column depends on per the summary.
            let (callee, args) = match &eq.rhs.kind {
                ExprKind::App(c, a) => (c, a),
                _ => unreachable!("validated: multi-output binding is an application"),
            };
            let summary = summary_of(callee, p, summaries, in_progress)?;
            for (out_idx, id) in eq.lhs.iter().enumerate() {
                let target = index[id.name.as_str()];
                for &param_idx in &summary[out_idx] {
                    instant_vars(
                        &args[param_idx],
                        p,
                        summaries,
                        in_progress,
                        &index,
                        &mut reads[target],
                    )?;
                }
            }
        } else {
            let target = index[eq.lhs[0].name.as_str()];
            let mut set = BTreeSet::new();
            instant_vars(&eq.rhs, p, summaries, in_progress, &index, &mut set)?;
            reads[target] = set;
        }
    }

    // Cycle detection over the variable graph, deterministic order.
    let mut state = vec![Mark::White; order.len()];
    for v in 0..order.len() {
        if state[v] == Mark::White {
            let mut stack = Vec::new();
            if let Some(cycle) = dfs(v, &reads, &mut state, &mut stack) {
                let names: Vec<&str> = cycle.iter().map(|&i| order[i]).collect();
                let span = node
                    .equations
                    .iter()
                    .find(|eq| eq.lhs.iter().any(|l| l.name == names[0]))
                    .map(|eq| eq.span)
                    .unwrap_or(node.span);
                return Err(Error::new(
                    ErrorKind::Causality,
                    span,
                    format!("causality cycle: {}", names.join(", ")),
                ));
            }
        }
    }

    // Transitive closure from each return to the parameters.
    let nparams = node.params.len();
    let mut summary = Vec::new();
    for (ri, _) in node.returns.iter().enumerate() {
        let start = nparams + ri;
        let mut seen = HashSet::new();
        let mut work = vec![start];
        let mut deps = BTreeSet::new();
        while let Some(v) = work.pop() {
            if !seen.insert(v) {
                continue;
            }
            if v < nparams {
                deps.insert(v);
            }
            for &w in &reads[v] {
                work.push(w);
            }
        }
        summary.push(deps);
    }
    Ok(summary)
}

#[derive(Clone, Copy, PartialEq)]
enum Mark {
    White,
    Gray,
    Black,
}

/// Returns the cycle as a variable list when one is reachable from `v`.
fn dfs(v: usize, reads: &[BTreeSet<usize>], state: &mut [Mark], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
    state[v] = Mark::Gray;
    stack.push(v);
    for &w in &reads[v] {
        match state[w] {
            Mark::Gray => {
                let pos = stack.iter().position(|&x| x == w).unwrap();
                return Some(stack[pos..].to_vec());
            }
            Mark::White => {
                if let Some(c) = dfs(w, reads, state, stack) {
                    return Some(c);
                }
            }
            Mark::Black => {}
        }
    }
    stack.pop();
    state[v] = Mark::Black;
    None
}

/// Accumulates the variables read instantaneously by `e` into `out`.
fn instant_vars(
    e: &Expr,
    p: &Program,
    summaries: &mut HashMap<String, Summary>,
    in_progress: &mut Vec<String>,
    index: &HashMap<&str, usize>,
    out: &mut BTreeSet<usize>,
) -> Result<()> {
    match &e.kind {
        ExprKind::Lit(_) => Ok(()),
        ExprKind::Var(x) => {
            out.insert(index[x.as_str()]);
            Ok(())
        }
        ExprKind::Fby(..) => Ok(()), // the delay breaks the dependency
        ExprKind::Under(inner, _) | ExprKind::Over(inner, _) | ExprKind::Offset(inner, _)
        | ExprKind::Neg(inner) => instant_vars(inner, p, summaries, in_progress, index, out),
        ExprKind::Binary(_, l, r) => {
            instant_vars(l, p, summaries, in_progress, index, out)?;
            instant_vars(r, p, summaries, in_progress, index, out)
        }
        ExprKind::Tuple(es) => {
            for item in es {
                instant_vars(item, p, summaries, in_progress, index, out)?;
            }
            Ok(())
        }
        ExprKind::App(callee, args) => {
            let summary = summary_of(callee, p, summaries, in_progress)?;
            // A single-value application reads through its only output.
            for &param_idx in summary.first().into_iter().flatten() {
                instant_vars(&args[param_idx], p, summaries, in_progress, index, out)?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn check(src: &str) -> Result<()> {
        causality_check(&parse(src).unwrap())
    }

    #[test]
    fn direct_self_reference_is_a_cycle() {
        let err = check("node M(i) returns (x)\nlet x = x + 1; tel").unwrap_err();
        assert!(err.to_string().contains("causality cycle: x"));
    }

    #[test]
    fn fby_breaks_the_cycle() {
        assert!(check("node M(i) returns (x)\nlet x = 0 fby x; tel").is_ok());
    }

    #[test]
    fn rate_operators_are_instantaneous() {
        let err = check("node M(i) returns (a)\nvar b;\nlet a = b; b = a /^ 2; tel").unwrap_err();
        assert!(err.to_string().contains("causality cycle: a, b"));
    }

    #[test]
    fn cycle_through_a_defined_node_is_found() {
        let err = check(
            "node Id(i) returns (o)\nlet o = i; tel\n\
             node M(i) returns (x)\nlet x = Id(x); tel",
        )
        .unwrap_err();
        assert!(err.to_string().contains("causality cycle: x"));
    }

    #[test]
    fn delayed_feedback_through_a_node_is_fine() {
        assert!(check(
            "node Id(i) returns (o)\nlet o = 0 fby i; tel\n\
             node M(i) returns (x)\nlet x = Id(x); tel"
        )
        .is_ok());
    }

    #[test]
    fn recursion_is_rejected() {
        let err = check(
            "node A(i) returns (o)\nlet o = B(i); tel\n\
             node B(i) returns (o)\nlet o = A(i); tel",
        )
        .unwrap_err();
        assert!(err.to_string().contains("recursive instantiation"));
    }

    #[test]
    fn imported_outputs_depend_on_all_inputs() {
        let err = check(
            "imported node N(a: int; b: int) returns (o: int) wcet 1;\n\
             node M(i) returns (x)\nlet x = N(i, x); tel",
        )
        .unwrap_err();
        assert!(err.to_string().contains("causality cycle: x"));
    }
}

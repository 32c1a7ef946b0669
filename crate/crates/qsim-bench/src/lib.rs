//! Shared fixtures for the criterion benchmarks.

use qsim_core::calculus::Calculus;
use qsim_core::csp::{Constraint, Network};
use qsim_core::engine::{Problem, SimOptions};
use qsim_core::ltl::{parse, Vocab};

/// A propagation-heavy rcc8 network: a clique of `n` regions with full
/// domains and all composition constraints, plus one fixed edge.
pub fn rcc8_clique(n: usize) -> Network {
    let cal = Calculus::builtin("rcc8").unwrap();
    let full = cal.full_set().0 as u64;
    let mut net = Network::new();
    let mut vars = vec![vec![0; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                vars[a][b] = net.new_var(full);
            }
        }
    }
    let tuples: Vec<Vec<u8>> = cal
        .triples()
        .iter()
        .map(|&(r, s, t)| vec![r, s, t])
        .collect();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if a != b && b != c && a != c {
                    net.post(Constraint::Table {
                        scope: vec![vars[a][b], vars[b][c], vars[a][c]],
                        tuples: tuples.clone(),
                    });
                }
            }
        }
    }
    let inside = cal.relation_id("inside").unwrap();
    net.assign(vars[0][1], inside).unwrap();
    net
}

/// A small but non-trivial simulation problem: two regions forced through a
/// separation/overlap cycle.
pub fn small_problem() -> Problem {
    let mut vocab = Vocab::new();
    vocab.add_aspect("Q", Calculus::builtin("rcc8").unwrap());
    vocab.add_set("O", vec!["x".into(), "y".into()]);
    let texts = [
        "G (Q[x,y] = disjoint -> F Q[x,y] = overlap)",
        "G (Q[x,y] = overlap -> F Q[x,y] = disjoint)",
        "Q[x,y] = disjoint",
    ];
    let formulas = texts.iter().map(|t| parse(t, &vocab).unwrap()).collect();
    Problem {
        vocab,
        links: vec![],
        initial: vec![],
        formulas,
        options: SimOptions::default(),
    }
}

//! End-to-end acceptance checks.  Each test prints a single PASS/FAIL line
//! for its criterion, so `cargo test --test acceptance -- --nocapture` gives
//! a one-line verdict per criterion.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use qsim_cli::spec;
use qsim_core::calculus::{Calculus, RelId, RelSet};
use qsim_core::csp::{
    solve_all, Constraint, Network, SolveLimits, SplitStrategy, VarId,
};
use qsim_core::engine::{
    simulate, verify_trace, Problem, SimOptions, SimulationTrace, Translation,
};
use qsim_core::ltl::{evaluate_on_lasso, Atom, Formula, LassoPath, Vocab};
use qsim_core::translate::{build_stages, require};

fn criterion(name: &str, budget_secs: u64, f: impl FnOnce()) {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let elapsed = start.elapsed();
    match result {
        Ok(()) => {
            println!("PASS {name} ({elapsed:.1?})");
            assert!(
                elapsed.as_secs() < budget_secs,
                "{name} exceeded its {budget_secs}s budget ({elapsed:?})"
            );
        }
        Err(e) => {
            println!("FAIL {name} ({elapsed:.1?})");
            resume_unwind(e);
        }
    }
}

fn spec_path(name: &str) -> String {
    format!("{}/specs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn load_spec(name: &str) -> Problem {
    let text = std::fs::read_to_string(spec_path(name)).expect("bundled spec exists");
    let doc = spec::parse(&text).expect("bundled spec parses");
    let mut problem = doc.problem;
    doc.options.apply(&mut problem.options);
    problem
}

/// The relation of `a` at `(state, a, b)` in a trace aspect, by name.
fn trace_rel<'t>(t: &'t SimulationTrace, aspect: &str, state: usize, a: &str, b: &str) -> &'t str {
    let asp = t.aspects.iter().find(|x| x.name == aspect).unwrap();
    let n = asp.objects.len();
    let ia = asp.objects.iter().position(|o| o == a).unwrap();
    let ib = asp.objects.iter().position(|o| o == b).unwrap();
    &asp.states[state - 1][ia * n + ib]
}

#[test]
fn calculus_laws() {
    criterion("calculus laws (rcc8 tables)", 1, || {
        let cal = Calculus::builtin("rcc8").unwrap();
        assert!(cal.validate().is_empty(), "{:?}", cal.validate());
        assert_eq!(cal.triples().len(), 193);
        assert_eq!(cal.neighbour_pair_count(), 22);
    });
}

#[test]
fn direction_composition_oracle() {
    criterion("direction composition vs. grid oracle", 30, || {
        let cal = Calculus::builtin("dir9").unwrap();
        let dir = |dx: i32, dy: i32| -> RelId {
            let name = match (dx.signum(), dy.signum()) {
                (0, 1) => "north",
                (1, 1) => "northeast",
                (1, 0) => "east",
                (1, -1) => "southeast",
                (0, -1) => "south",
                (-1, -1) => "southwest",
                (-1, 0) => "west",
                (-1, 1) => "northwest",
                _ => "samepoint",
            };
            cal.relation_id(name).unwrap()
        };
        // Every triple of points on a 9x9 grid realizes a composition triple
        // that the table must contain.
        let coords: Vec<(i32, i32)> = (0..9).flat_map(|x| (0..9).map(move |y| (x, y))).collect();
        let mut checked = 0u64;
        for &a in &coords {
            for &b in &coords {
                let rab = dir(a.0 - b.0, a.1 - b.1);
                for &c in &coords {
                    let rbc = dir(b.0 - c.0, b.1 - c.1);
                    let rac = dir(a.0 - c.0, a.1 - c.1);
                    assert!(
                        cal.composition_contains(rab, rbc, rac),
                        "grid counterexample at {a:?} {b:?} {c:?}"
                    );
                    checked += 1;
                }
            }
        }
        assert_eq!(checked, 81 * 81 * 81);
    });
}

/// Support-pruning fixpoint over table constraints, written independently of
/// the production propagator.
fn oracle_fixpoint(domains: &mut [u64], constraints: &[(Vec<VarId>, Vec<Vec<u8>>)]) -> bool {
    loop {
        let mut changed = false;
        for (scope, tuples) in constraints {
            for (pos, &var) in scope.iter().enumerate() {
                let mut supported = 0u64;
                for tuple in tuples {
                    if tuple
                        .iter()
                        .zip(scope.iter())
                        .all(|(&v, &x)| domains[x] >> v & 1 == 1)
                    {
                        supported |= 1 << tuple[pos];
                    }
                }
                let pruned = domains[var] & supported;
                if pruned != domains[var] {
                    domains[var] = pruned;
                    changed = true;
                }
                if pruned == 0 {
                    return false;
                }
            }
        }
        if !changed {
            return true;
        }
    }
}

#[test]
fn propagation_oracle() {
    criterion("propagation vs. brute-force supports", 30, || {
        let mut rng = StdRng::seed_from_u64(0xACCE97);
        for round in 0..500 {
            let num_vars = rng.gen_range(1..=4usize);
            let num_vals = rng.gen_range(2..=6u8);
            let mut net = Network::new();
            let mut domains = Vec::new();
            for _ in 0..num_vars {
                let dom = rng.gen_range(1..(1u64 << num_vals));
                net.new_var(dom);
                domains.push(dom);
            }
            let mut constraints = Vec::new();
            for _ in 0..rng.gen_range(1..=3) {
                let width = rng.gen_range(1..=num_vars.min(3));
                let mut scope: Vec<VarId> = (0..num_vars).collect();
                for i in (1..scope.len()).rev() {
                    scope.swap(i, rng.gen_range(0..=i));
                }
                scope.truncate(width);
                let mut tuples = Vec::new();
                let mut tuple = vec![0u8; width];
                loop {
                    if rng.gen_bool(0.6) {
                        tuples.push(tuple.clone());
                    }
                    let mut pos = 0;
                    loop {
                        if pos == width {
                            break;
                        }
                        tuple[pos] += 1;
                        if tuple[pos] < num_vals {
                            break;
                        }
                        tuple[pos] = 0;
                        pos += 1;
                    }
                    if pos == width {
                        break;
                    }
                }
                net.post(Constraint::Table {
                    scope: scope.clone(),
                    tuples: tuples.clone(),
                });
                constraints.push((scope, tuples));
            }
            let ok = oracle_fixpoint(&mut domains, &constraints);
            let status = net.propagate();
            use qsim_core::csp::PropagationStatus;
            if ok {
                assert_eq!(status, PropagationStatus::Stable, "round {round}");
                for (x, &dom) in domains.iter().enumerate() {
                    assert_eq!(net.domain(x), dom, "round {round}, variable {x}");
                }
            } else {
                assert_eq!(status, PropagationStatus::Failed, "round {round}");
            }
        }
    });
}

// ---- criterion 4: translation equivalence --------------------------------

fn pair_atom(rels: &[RelId], alphabet: u8) -> Formula {
    let mut set = RelSet::EMPTY;
    for &r in rels {
        set.insert(r);
    }
    Formula::Atom(Atom {
        aspect: "Q".into(),
        a: "o1".into(),
        b: "o2".into(),
        rels: set,
        alphabet,
    })
}

/// Every formula over the fixed atoms with at most `nodes` operators.
fn formula_family(alphabet: u8, nodes: usize) -> Vec<Formula> {
    let mut atoms: Vec<Formula> = vec![Formula::True, Formula::False];
    for bits in 1..(1u32 << alphabet) - 1 {
        atoms.push(pair_atom(
            &(0..alphabet)
                .filter(|r| bits & (1 << r) != 0)
                .collect::<Vec<_>>(),
            alphabet,
        ));
    }
    let mut layers: Vec<Vec<Formula>> = vec![atoms];
    for depth in 1..=nodes {
        let mut layer = Vec::new();
        for f in &layers[depth - 1] {
            layer.push(Formula::not(f.clone()));
            layer.push(Formula::next(f.clone()));
            layer.push(Formula::eventually(f.clone()));
            layer.push(Formula::always(f.clone()));
        }
        for left in 0..depth {
            for a in &layers[left] {
                for b in &layers[depth - 1 - left] {
                    layer.push(Formula::and(vec![a.clone(), b.clone()]));
                    layer.push(Formula::or(vec![a.clone(), b.clone()]));
                    layer.push(Formula::until(a.clone(), b.clone()));
                }
            }
        }
        layers.push(layer);
    }
    layers.concat()
}

fn two_object_problem(cal: Calculus) -> Problem {
    let mut vocab = Vocab::new();
    vocab.add_aspect("Q", cal);
    vocab.add_set("O", vec!["o1".into(), "o2".into()]);
    Problem {
        vocab,
        links: vec![],
        initial: vec![],
        formulas: vec![],
        options: SimOptions::default(),
    }
}

fn enumerate_lassos(cal: &Calculus, k: usize) -> Vec<(Vec<RelId>, usize)> {
    let m = cal.alphabet_size();
    let mut out = Vec::new();
    let mut rels = vec![0 as RelId; k];
    loop {
        if (1..k).all(|t| cal.neighbours(rels[t - 1]).contains(rels[t])) {
            for l in 1..=k {
                if cal.neighbours(rels[k - 1]).contains(rels[l - 1]) {
                    out.push((rels.clone(), l));
                }
            }
        }
        let mut pos = 0;
        loop {
            if pos == k {
                return out;
            }
            rels[pos] += 1;
            if (rels[pos] as usize) < m {
                break;
            }
            rels[pos] = 0;
            pos += 1;
        }
    }
}

fn check_equivalence(cal: &Calculus, f: &Formula, k: usize) {
    let p = two_object_problem(cal.clone());
    let mut expect = BTreeSet::new();
    for (rels, l) in enumerate_lassos(cal, k) {
        let mut path = LassoPath::new(k, Some(l));
        path.add_aspect("Q", cal.identity(), vec!["o1".into(), "o2".into()]);
        for (t, &r) in rels.iter().enumerate() {
            path.set("Q", t + 1, "o1", "o2", r);
            path.set("Q", t + 1, "o2", "o1", cal.converse(r));
        }
        if evaluate_on_lasso(f, &path, 1).unwrap() {
            expect.insert((rels, l));
        }
    }
    for mode in [Translation::Unravel, Translation::Array] {
        let mut plan = build_stages(&p, k).unwrap();
        let vars: Vec<VarId> = (1..=k)
            .map(|t| plan.stage_var("Q", "o1", "o2", t).unwrap())
            .collect();
        let loop_var = plan.loop_var;
        let mut got = BTreeSet::new();
        if require(&mut plan, f, mode).is_ok() {
            let done = solve_all(
                &mut plan.net,
                &SplitStrategy::FirstFail,
                SolveLimits::none(),
                |a| {
                    got.insert((
                        vars.iter().map(|&v| a[v] as RelId).collect::<Vec<_>>(),
                        a[loop_var] as usize,
                    ));
                    true
                },
            );
            assert!(done, "search not exhausted");
        }
        assert_eq!(got, expect, "solution lassos differ for {f} at k={k} ({mode:?})");
    }
}

#[test]
fn translation_equivalence() {
    criterion("translation equivalence (unravel = array = oracle)", 300, || {
        let free2 = Calculus::from_tables(
            "free2",
            vec!["same".into(), "diff".into()],
            0,
            vec![0, 1],
            &[],
            &[(0, 1), (1, 0)],
        );
        let chain3 = Calculus::from_tables(
            "chain3",
            vec!["lo".into(), "mid".into(), "hi".into()],
            1,
            vec![2, 1, 0],
            &[],
            &[(0, 1), (1, 0), (1, 2), (2, 1)],
        );
        // Exhaustive over every formula with at most two operators...
        for (cal, alphabet) in [(&free2, 2u8), (&chain3, 3u8)] {
            for f in formula_family(alphabet, 2) {
                for k in 1..=3 {
                    check_equivalence(cal, &f, k);
                }
            }
        }
        // ...and a fixed random sample of the depth-3 family, which is far
        // too large to sweep whole.
        let mut rng = StdRng::seed_from_u64(0x5EED4);
        for (cal, alphabet) in [(&free2, 2u8), (&chain3, 3u8)] {
            let family = formula_family(alphabet, 3);
            for _ in 0..120 {
                let f = &family[rng.gen_range(0..family.len())];
                check_equivalence(cal, f, rng.gen_range(1..=3));
            }
        }
    });
}

// ---- criteria 5-8: case studies ------------------------------------------

/// States on the loop (1-based), i.e. the part that repeats forever.
fn loop_states(t: &SimulationTrace) -> std::ops::RangeInclusive<usize> {
    t.loop_start.unwrap()..=t.k
}

#[test]
fn navigation_reproduction() {
    criterion("navigation: shortest cycle has 13 states", 300, || {
        let p = load_spec("navigation.qs");
        let t = simulate(&p).expect("navigation spec is satisfiable");
        assert_eq!(t.k, 13);
        assert_eq!(t.stats.unsat_below, 12, "every k < 13 must be unsat");
        assert!(verify_trace(&p, &t).passed());
        for (a, b, rel) in [
            ("ship", "buoy_a", "west"),
            ("ship", "buoy_b", "north"),
            ("ship", "buoy_c", "east"),
            ("ship", "buoy_c", "south"),
        ] {
            assert!(
                loop_states(&t).any(|s| trace_rel(&t, "Q", s, a, b) == rel),
                "waypoint Q[{a},{b}] = {rel} never holds on the loop"
            );
        }
    });
}

#[test]
fn two_ship_variant() {
    criterion("two ships: shortest cycle has 15 states", 900, || {
        let p = load_spec("two_ships.qs");
        let t = simulate(&p).expect("two-ship spec is satisfiable");
        assert_eq!(t.k, 15);
        assert!(verify_trace(&p, &t).passed());
    });
}

#[test]
fn juggling_reproduction() {
    criterion("juggling: 8 states, loop from state 3", 900, || {
        let p = load_spec("juggling.qs");
        let t = simulate(&p).expect("juggling spec is satisfiable");
        assert_eq!(t.k, 8);
        assert_eq!(t.loop_start, Some(3));
        let report = verify_trace(&p, &t);
        assert!(report.passed(), "{report}");
    });
}

#[test]
fn aspect_integration() {
    criterion("juggling with directions: link constraint holds", 1200, || {
        let p = load_spec("juggling_dir.qs");
        let t = simulate(&p).expect("juggling+directions spec is satisfiable");
        assert!(verify_trace(&p, &t).passed());
        let hands = ["lh", "rh"];
        let balls = ["b1", "b2", "b3"];
        let objects = ["lh", "rh", "b1", "b2", "b3"];
        for s in 1..=t.k {
            for a in objects {
                for b in objects {
                    if a == b {
                        continue;
                    }
                    let equal = trace_rel(&t, "Q", s, a, b) == "equal";
                    let samepoint = trace_rel(&t, "Dir", s, a, b) == "samepoint";
                    assert_eq!(equal, samepoint, "link broken at state {s} ({a},{b})");
                }
            }
            for b in balls {
                let held: Vec<_> = hands
                    .iter()
                    .filter(|h| trace_rel(&t, "Q", s, b, h) == "meet")
                    .collect();
                if held.is_empty() {
                    for h in hands {
                        assert_ne!(
                            trace_rel(&t, "Dir", s, b, h),
                            "north",
                            "airborne {b} is straight above {h} at state {s}"
                        );
                    }
                } else {
                    for h in &held {
                        assert_eq!(
                            trace_rel(&t, "Dir", s, b, h),
                            "north",
                            "held {b} is not above {h} at state {s}"
                        );
                    }
                }
            }
        }
        // Report (not assert) the direction pattern of each ball w.r.t. the
        // hands; trace selection is heuristic-dependent.
        for b in balls {
            let pattern: Vec<String> = (1..=t.k)
                .map(|s| format!("{}/{}", trace_rel(&t, "Dir", s, b, "lh"), trace_rel(&t, "Dir", s, b, "rh")))
                .collect();
            println!("  {b} direction to lh/rh: {}", pattern.join(" "));
        }
    });
}

#[test]
fn verification_rejects_mutants() {
    criterion("verification rejects 100 mutated traces", 60, || {
        let jug = load_spec("juggling.qs");
        let jug_trace = simulate(&jug).unwrap();
        let nav = load_spec("navigation.qs");
        let nav_trace = simulate(&nav).unwrap();
        let mut rng = StdRng::seed_from_u64(0xC0FFEE);
        for round in 0..100 {
            let (p, t) = if round % 2 == 0 {
                (&jug, &jug_trace)
            } else {
                (&nav, &nav_trace)
            };
            let mut mutant = t.clone();
            let ai = rng.gen_range(0..mutant.aspects.len());
            let cal = p.vocab.aspect(&mutant.aspects[ai].name).unwrap();
            let names: Vec<String> = cal.relations().map(|r| r.name.to_string()).collect();
            let n = mutant.aspects[ai].objects.len();
            let s = rng.gen_range(0..mutant.aspects[ai].states.len());
            // pick an off-diagonal cell and change it to a different relation
            let (a, b) = loop {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a != b {
                    break (a, b);
                }
            };
            let old = mutant.aspects[ai].states[s][a * n + b].clone();
            let new = loop {
                let cand = &names[rng.gen_range(0..names.len())];
                if *cand != old {
                    break cand.clone();
                }
            };
            mutant.aspects[ai].states[s][a * n + b] = new.clone();
            let report = verify_trace(p, &mutant);
            assert!(
                !report.passed(),
                "round {round}: mutation {old}->{new} at state {} not caught",
                s + 1
            );
        }
    });
}

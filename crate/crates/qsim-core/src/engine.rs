//! Top-level simulation driver: problem definition, iterative deepening over
//! the bound k, trace extraction, and independent trace verification.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::calculus::RelId;
use crate::csp::{self, SolveLimits, SolveStats, SplitStrategy};
use crate::ltl::{evaluate_on_lasso, expand_quantifiers, Atom, Formula, LassoPath, Vocab};
use crate::translate::{self, StagePlan};

/// Which temporal-formula translation the solver uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Translation {
    /// Unravel temporal operators through their recursive definitions.
    Unravel,
    /// Push disjunctive temporal information into index variables resolved
    /// by array-lookup constraints.
    Array,
}

/// Branching heuristic for the backtracking search.
#[derive(Clone, Debug)]
pub enum Heuristic {
    FirstFail,
    /// Split relation-variable domains against a family of relation sets
    /// (e.g. a tractable subclass of the calculus).
    Subclass { family: Vec<u64> },
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub k_min: usize,
    pub k_max: usize,
    pub translation: Translation,
    pub heuristic: Heuristic,
    /// Permit paths without a loop (the simulation then has a definite end).
    pub allow_finite_path: bool,
    pub max_nodes: Option<u64>,
    pub global_time_budget: Option<Duration>,
    pub per_k_time_budget: Option<Duration>,
}

impl Default for SimOptions {
    fn default() -> SimOptions {
        SimOptions {
            k_min: 1,
            k_max: 30,
            translation: Translation::Unravel,
            heuristic: Heuristic::FirstFail,
            allow_finite_path: false,
            max_nodes: None,
            global_time_budget: None,
            per_k_time_budget: None,
        }
    }
}

/// A cross-aspect link: the two aspects' relations on the same object pair
/// must form one of the listed combinations, at every stage.
#[derive(Clone, Debug)]
pub struct Link {
    pub left: String,
    pub right: String,
    pub pairs: Vec<(RelId, RelId)>,
}

/// A full simulation problem: vocabulary (objects, aspects with calculi),
/// link constraints, initial-state atoms, and temporal formulas.
#[derive(Clone, Debug)]
pub struct Problem {
    pub vocab: Vocab,
    pub links: Vec<Link>,
    pub initial: Vec<Atom>,
    pub formulas: Vec<Formula>,
    pub options: SimOptions,
}

/// A found simulation: k states per aspect plus the loop start, decodable to
/// a [`LassoPath`] for evaluation.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SimulationTrace {
    pub k: usize,
    /// 1-based loop start; `None` only when finite paths were allowed.
    pub loop_start: Option<usize>,
    pub aspects: Vec<TraceAspect>,
    pub stats: TraceStats,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TraceAspect {
    pub name: String,
    pub objects: Vec<String>,
    /// `states[t-1]` maps ordered object pairs (row-major over `objects`,
    /// diagonal included) to relation names.
    pub states: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct TraceStats {
    pub nodes: u64,
    pub failures: u64,
    pub elapsed_ms: u64,
    /// Bounds proven unsatisfiable before the reported k.
    pub unsat_below: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("problem is invalid: {0}")]
    Invalid(String),
    #[error("no simulation up to bound k_max = {k_max}")]
    UnsatUpTo { k_max: usize, stats: TraceStats },
    #[error("budget exceeded at bound k = {k}")]
    BudgetExceeded { k: usize, stats: TraceStats },
    #[error("internal defect: produced trace failed verification: {0}")]
    VerificationFailed(String),
}

impl Problem {
    /// Expands quantifiers in all temporal formulas and checks name
    /// resolution; returns the quantifier-free formula list.
    pub fn expanded_formulas(&self) -> Result<Vec<Formula>, SimError> {
        self.formulas
            .iter()
            .map(|f| {
                expand_quantifiers(f, &self.vocab).map_err(|e| SimError::Invalid(e.to_string()))
            })
            .collect()
    }
}

fn strategy_for(options: &SimOptions) -> SplitStrategy {
    match &options.heuristic {
        Heuristic::FirstFail => SplitStrategy::FirstFail,
        Heuristic::Subclass { family } => SplitStrategy::Subclass {
            family: family.clone(),
        },
    }
}

/// Searches for a lasso simulation with minimal bound k in
/// `[k_min, k_max]`, verifying the trace before returning it.
pub fn simulate(p: &Problem) -> Result<SimulationTrace, SimError> {
    let start = Instant::now();
    let formulas = p.expanded_formulas()?;
    let strategy = strategy_for(&p.options);
    let global_deadline = p.options.global_time_budget.map(|d| start + d);
    let mut total = TraceStats::default();

    // Next-free specifications are insensitive to stuttering, so once every
    // smaller bound is refuted any satisfiable bound admits a witness with
    // no repeated adjacent state; forbidding repeats prunes the search
    // without changing the minimal k.  A per-k budget that skips a bound
    // leaves smaller bounds unrefuted, which disables the optimisation.
    let next_free = formulas.iter().all(|f| !f.contains_next());
    let mut smaller_bounds_refuted = true;

    for k in p.options.k_min..=p.options.k_max {
        let mut plan = translate::build_stages(p, k)
            .map_err(|e| SimError::Invalid(e.to_string()))?;
        let mut infeasible = false;
        for f in &formulas {
            if translate::require(&mut plan, f, p.options.translation).is_err() {
                infeasible = true;
                break;
            }
        }
        if next_free && smaller_bounds_refuted && k > p.options.k_min {
            plan.forbid_stuttering();
        }

        let deadline = match (global_deadline, p.options.per_k_time_budget) {
            (Some(g), Some(d)) => Some(g.min(Instant::now() + d)),
            (Some(g), None) => Some(g),
            (None, Some(d)) => Some(Instant::now() + d),
            (None, None) => None,
        };
        let limits = SolveLimits {
            max_nodes: p.options.max_nodes,
            deadline,
        };

        let (outcome, stats) = if infeasible {
            (csp::SolveOutcome::Unsat, SolveStats::default())
        } else {
            csp::solve(&mut plan.net, &strategy, limits)
        };
        total.nodes += stats.nodes;
        total.failures += stats.failures;
        match outcome {
            csp::SolveOutcome::Sat(a) => {
                total.elapsed_ms = start.elapsed().as_millis() as u64;
                let mut trace = decode_trace(&plan, &a);
                trace.stats = total.clone();
                trace.stats.unsat_below = k - p.options.k_min;
                let report = verify_trace(p, &trace);
                if !report.passed() {
                    return Err(SimError::VerificationFailed(report.to_string()));
                }
                return Ok(trace);
            }
            csp::SolveOutcome::Unsat => {
                total.unsat_below += 1;
            }
            csp::SolveOutcome::LimitExceeded => {
                total.elapsed_ms = start.elapsed().as_millis() as u64;
                // A per-k deadline that ran out mid-k still counts against
                // the global budget check below.
                let global_out = global_deadline.map(|g| Instant::now() >= g).unwrap_or(false);
                let nodes_out = p
                    .options
                    .max_nodes
                    .map(|n| stats.nodes > n)
                    .unwrap_or(false);
                if global_out || nodes_out || p.options.per_k_time_budget.is_none() {
                    return Err(SimError::BudgetExceeded { k, stats: total });
                }
                // Per-k budget exhausted: treat as inconclusive for this k
                // and move on, like unsat but without the minimality claim.
                total.unsat_below += 1;
                smaller_bounds_refuted = false;
            }
        }
    }
    total.elapsed_ms = start.elapsed().as_millis() as u64;
    Err(SimError::UnsatUpTo {
        k_max: p.options.k_max,
        stats: total,
    })
}

fn decode_trace(plan: &StagePlan, assignment: &[u8]) -> SimulationTrace {
    let k = plan.k;
    let l = assignment[plan.loop_var] as usize;
    let loop_start = if l <= k { Some(l) } else { None };
    let mut aspects = Vec::new();
    for ap in plan.aspect_names() {
        let objects = plan.universe().to_vec();
        let n = objects.len();
        let cal = plan.calculus_of(&ap).unwrap();
        let mut states = Vec::with_capacity(k);
        for t in 1..=k {
            let mut row = Vec::with_capacity(n * n);
            for a in 0..n {
                for b in 0..n {
                    let rel = if a == b {
                        cal.identity()
                    } else {
                        let v = plan.stage_var(&ap, &objects[a], &objects[b], t).unwrap();
                        assignment[v] as RelId
                    };
                    row.push(cal.relation_name(rel).to_string());
                }
            }
            states.push(row);
        }
        aspects.push(TraceAspect {
            name: ap,
            objects,
            states,
        });
    }
    SimulationTrace {
        k,
        loop_start,
        aspects,
        stats: TraceStats::default(),
    }
}

impl SimulationTrace {
    /// Converts to the evaluator's path representation.
    pub fn to_lasso(&self, p: &Problem) -> Result<LassoPath, String> {
        let mut path = LassoPath::new(self.k, self.loop_start);
        for ta in &self.aspects {
            let cal = p
                .vocab
                .aspect(&ta.name)
                .ok_or_else(|| format!("unknown aspect '{}'", ta.name))?;
            path.add_aspect(&ta.name, cal.identity(), ta.objects.clone());
            let n = ta.objects.len();
            for (t, row) in ta.states.iter().enumerate() {
                if row.len() != n * n {
                    return Err(format!(
                        "aspect '{}' state {} has {} entries, expected {}",
                        ta.name,
                        t + 1,
                        row.len(),
                        n * n
                    ));
                }
                for a in 0..n {
                    for b in 0..n {
                        if a == b {
                            continue;
                        }
                        let name = &row[a * n + b];
                        let rel = cal
                            .relation_id(name)
                            .ok_or_else(|| format!("unknown relation '{name}'"))?;
                        path.set(&ta.name, t + 1, &ta.objects[a], &ta.objects[b], rel);
                    }
                }
            }
        }
        Ok(path)
    }
}

/// One failed verification check, with enough context to locate it.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckFailure {
    pub check: &'static str,
    pub witness: String,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub failures: Vec<CheckFailure>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn fail(&mut self, check: &'static str, witness: String) {
        self.failures.push(CheckFailure { check, witness });
    }
}

impl std::fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.passed() {
            write!(f, "all checks passed")
        } else {
            for (i, c) in self.failures.iter().enumerate() {
                if i > 0 {
                    writeln!(f)?;
                }
                write!(f, "{}: {}", c.check, c.witness)?;
            }
            Ok(())
        }
    }
}


/// Checks a trace against the problem independently of the solver: identity,
/// converse, composition, neighbourhood (including the loop-back step),
/// links, initial atoms, and every temporal formula at position 1.
pub fn verify_trace(p: &Problem, t: &SimulationTrace) -> VerifyReport {
    let mut report = VerifyReport::default();
    if t.loop_start.is_none() && !p.options.allow_finite_path {
        report.fail("loop", "trace has no loop but finite paths are disabled".into());
    }
    if let Some(l) = t.loop_start {
        if l < 1 || l > t.k {
            report.fail("loop", format!("loop start {l} outside 1..={}", t.k));
            return report;
        }
    }
    let path = match t.to_lasso(p) {
        Ok(path) => path,
        Err(e) => {
            report.fail("structure", e);
            return report;
        }
    };

    for ta in &t.aspects {
        let Some(cal) = p.vocab.aspect(&ta.name) else {
            continue; // reported by to_lasso
        };
        let n = ta.objects.len();
        let rel_of = |row: &Vec<String>, a: usize, b: usize| -> Option<RelId> {
            cal.relation_id(&row[a * n + b])
        };
        for (ti, row) in ta.states.iter().enumerate() {
            let stage = ti + 1;
            for a in 0..n {
                // identity on the diagonal
                if rel_of(row, a, a) != Some(cal.identity()) {
                    report.fail(
                        "identity",
                        format!(
                            "{}[{},{}] at stage {} is '{}', not the identity",
                            ta.name, ta.objects[a], ta.objects[a], stage, row[a * n + a]
                        ),
                    );
                }
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    let (Some(rab), Some(rba)) = (rel_of(row, a, b), rel_of(row, b, a)) else {
                        continue;
                    };
                    if cal.converse(rab) != rba {
                        report.fail(
                            "conv",
                            format!(
                                "stage {}: {}[{},{}] = {} but {}[{},{}] = {}",
                                stage,
                                ta.name,
                                ta.objects[a],
                                ta.objects[b],
                                cal.relation_name(rab),
                                ta.name,
                                ta.objects[b],
                                ta.objects[a],
                                cal.relation_name(rba)
                            ),
                        );
                    }
                    for c in 0..n {
                        if c == a || c == b {
                            continue;
                        }
                        let (Some(rbc), Some(rac)) = (rel_of(row, b, c), rel_of(row, a, c))
                        else {
                            continue;
                        };
                        if !cal.composition_contains(rab, rbc, rac) {
                            report.fail(
                                "comp",
                                format!(
                                    "stage {}: <{},{},{}> on ({},{},{}) violates the composition table",
                                    stage,
                                    cal.relation_name(rab),
                                    cal.relation_name(rbc),
                                    cal.relation_name(rac),
                                    ta.objects[a],
                                    ta.objects[b],
                                    ta.objects[c]
                                ),
                            );
                        }
                    }
                }
            }
        }
        // neighbourhood across consecutive stages and the loop-back step
        let mut steps: Vec<(usize, usize)> = (1..t.k).map(|s| (s, s + 1)).collect();
        if let Some(l) = t.loop_start {
            steps.push((t.k, l));
        }
        for (s, s2) in steps {
            for a in 0..n {
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    let (Some(r1), Some(r2)) = (
                        rel_of(&ta.states[s - 1], a, b),
                        rel_of(&ta.states[s2 - 1], a, b),
                    ) else {
                        continue;
                    };
                    if !cal.neighbours(r1).contains(r2) {
                        report.fail(
                            "neighbourhood",
                            format!(
                                "{}[{},{}]: {} -> {} between stages {} and {} is not a neighbourhood move",
                                ta.name,
                                ta.objects[a],
                                ta.objects[b],
                                cal.relation_name(r1),
                                cal.relation_name(r2),
                                s,
                                s2
                            ),
                        );
                    }
                }
            }
        }
    }

    // cross-aspect links
    for link in &p.links {
        let (Some(ca), Some(cb)) = (p.vocab.aspect(&link.left), p.vocab.aspect(&link.right))
        else {
            report.fail("link", format!("unknown aspect in link {}~{}", link.left, link.right));
            continue;
        };
        for s in 1..=t.k {
            for a in p.vocab.objects() {
                for b in p.vocab.objects() {
                    let (Some(ra), Some(rb)) = (
                        path.relation(&link.left, a, b, s),
                        path.relation(&link.right, a, b, s),
                    ) else {
                        continue;
                    };
                    if !link.pairs.contains(&(ra, rb)) {
                        report.fail(
                            "link",
                            format!(
                                "stage {s}: ({}, {}) on ({a},{b}) not allowed by link {}~{}",
                                ca.relation_name(ra),
                                cb.relation_name(rb),
                                link.left,
                                link.right
                            ),
                        );
                    }
                }
            }
        }
    }

    // initial-state atoms at stage 1
    for atom in &p.initial {
        match path.relation(&atom.aspect, &atom.a, &atom.b, 1) {
            Some(r) if atom.rels.contains(r) => {}
            Some(r) => {
                let name = p
                    .vocab
                    .aspect(&atom.aspect)
                    .map(|c| c.relation_name(r).to_string())
                    .unwrap_or_else(|| format!("#{r}"));
                report.fail(
                    "initial",
                    format!(
                        "{}[{},{}] at stage 1 is '{}', outside the initial constraint",
                        atom.aspect, atom.a, atom.b, name
                    ),
                );
            }
            None => report.fail(
                "initial",
                format!("unknown symbol in initial atom {}[{},{}]", atom.aspect, atom.a, atom.b),
            ),
        }
    }

    // temporal formulas at position 1
    match p.expanded_formulas() {
        Ok(formulas) => {
            for (fi, f) in formulas.iter().enumerate() {
                match evaluate_on_lasso(f, &path, 1) {
                    Ok(true) => {}
                    Ok(false) => report.fail(
                        "formula",
                        format!("formula #{} evaluates false at position 1: {f}", fi + 1),
                    ),
                    Err(e) => report.fail("formula", format!("formula #{}: {e}", fi + 1)),
                }
            }
        }
        Err(e) => report.fail("formula", e.to_string()),
    }
    report
}

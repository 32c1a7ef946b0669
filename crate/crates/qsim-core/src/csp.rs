//! Finite-domain constraint network with hyper-arc-consistency propagation
//! and backtracking search over domain partitions.
//!
//! Domains are bitmasks over small integers (relation ids, Booleans, stage
//! indices).  Propagation runs a constraint-oriented queue to a fixpoint in
//! which every value of every constrained variable has a supporting tuple;
//! search interleaves domain splitting with propagation and restores domains
//! exactly on backtracking via a trail.

use std::time::{Duration, Instant};

use thiserror::Error;

pub type VarId = usize;

/// Domain as a bitmask; value `v` present iff bit `v` is set.
pub type Domain = u64;

pub const BOOL_DOMAIN: Domain = 0b11;

pub fn singleton(v: u8) -> Domain {
    1u64 << v
}

pub fn range_domain(lo: u8, hi: u8) -> Domain {
    debug_assert!(lo <= hi && hi < 64);
    let width = hi - lo + 1;
    if width == 64 {
        u64::MAX
    } else {
        ((1u64 << width) - 1) << lo
    }
}

pub fn domain_min(d: Domain) -> u8 {
    debug_assert!(d != 0);
    d.trailing_zeros() as u8
}

pub fn domain_max(d: Domain) -> u8 {
    debug_assert!(d != 0);
    63 - d.leading_zeros() as u8
}

pub fn domain_values(d: Domain) -> impl Iterator<Item = u8> {
    (0..64u8).filter(move |v| d & (1 << v) != 0)
}

/// The constraint kinds the temporal translation emits.
#[derive(Clone, Debug)]
pub enum Constraint {
    /// Extensional table of allowed tuples; any arity, pairwise-distinct scope.
    Table { scope: Vec<VarId>, tuples: Vec<Vec<u8>> },
    /// b <=> (x in set)
    ReifiedMember { x: VarId, set: Domain, b: VarId },
    /// b <=> not x
    BoolNot { x: VarId, b: VarId },
    /// b <=> and(xs)
    BoolAnd { xs: Vec<VarId>, b: VarId },
    /// b <=> or(xs)
    BoolOr { xs: Vec<VarId>, b: VarId },
    /// or(pos) or or(not neg): at least one literal true (non-reified)
    Clause { pos: Vec<VarId>, neg: Vec<VarId> },
    /// (cond = value) => (x = y)
    CondEq { cond: VarId, value: u8, x: VarId, y: VarId },
    /// value = elems[index - offset]
    Lookup {
        index: VarId,
        offset: u8,
        value: VarId,
        elems: Vec<VarId>,
    },
    /// b <=> (x <= y)
    ReifiedLeq { x: VarId, y: VarId, b: VarId },
}

impl Constraint {
    fn scope_vars(&self) -> Vec<VarId> {
        match self {
            Constraint::Table { scope, .. } => scope.clone(),
            Constraint::ReifiedMember { x, b, .. } => vec![*x, *b],
            Constraint::BoolNot { x, b } => vec![*x, *b],
            Constraint::BoolAnd { xs, b } | Constraint::BoolOr { xs, b } => {
                let mut v = xs.clone();
                v.push(*b);
                v
            }
            Constraint::Clause { pos, neg } => {
                let mut v = pos.clone();
                v.extend_from_slice(neg);
                v
            }
            Constraint::CondEq { cond, x, y, .. } => vec![*cond, *x, *y],
            Constraint::Lookup {
                index,
                value,
                elems,
                ..
            } => {
                let mut v = vec![*index, *value];
                v.extend_from_slice(elems);
                v
            }
            Constraint::ReifiedLeq { x, y, b } => vec![*x, *y, *b],
        }
    }

    /// Direct evaluation under a total assignment, independent of the
    /// propagators.
    pub fn check(&self, a: &[u8]) -> bool {
        match self {
            Constraint::Table { scope, tuples } => tuples
                .iter()
                .any(|t| t.iter().zip(scope.iter()).all(|(v, &x)| a[x] == *v)),
            Constraint::ReifiedMember { x, set, b } => {
                (a[*b] == 1) == (set & singleton(a[*x]) != 0)
            }
            Constraint::BoolNot { x, b } => a[*b] == 1 - a[*x],
            Constraint::BoolAnd { xs, b } => (a[*b] == 1) == xs.iter().all(|&x| a[x] == 1),
            Constraint::BoolOr { xs, b } => (a[*b] == 1) == xs.iter().any(|&x| a[x] == 1),
            Constraint::Clause { pos, neg } => {
                pos.iter().any(|&x| a[x] == 1) || neg.iter().any(|&x| a[x] == 0)
            }
            Constraint::CondEq { cond, value, x, y } => a[*cond] != *value || a[*x] == a[*y],
            Constraint::Lookup {
                index,
                offset,
                value,
                elems,
            } => {
                let i = a[*index] as usize - *offset as usize;
                i < elems.len() && a[*value] == a[elems[i]]
            }
            Constraint::ReifiedLeq { x, y, b } => (a[*b] == 1) == (a[*x] <= a[*y]),
        }
    }
}

#[derive(Debug, Error)]
#[error("empty domain for variable {0}")]
pub struct EmptyDomain(pub VarId);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropagationStatus {
    Stable,
    Failed,
}

/// The constraint network: variables, constraints, and the backtracking trail.
#[derive(Clone, Default)]
pub struct Network {
    domains: Vec<Domain>,
    constraints: Vec<Constraint>,
    watchers: Vec<Vec<usize>>,
    trail: Vec<(VarId, Domain)>,
    marks: Vec<usize>,
    queue: Vec<usize>,
    in_queue: Vec<bool>,
    decisions: Vec<VarId>,
    branch_ceiling: Option<usize>,
    /// Conflict weight per constraint (wdeg), bumped on each wipe-out.
    weights: Vec<u32>,
    /// Per-variable sum of the weights of the constraints watching it,
    /// maintained incrementally; used to break first-fail ties.
    var_weight: Vec<u64>,
}

impl Network {
    pub fn new() -> Network {
        Network::default()
    }

    pub fn new_var(&mut self, domain: Domain) -> VarId {
        assert!(domain != 0, "variable created with empty domain");
        let id = self.domains.len();
        self.domains.push(domain);
        self.watchers.push(Vec::new());
        self.var_weight.push(0);
        id
    }

    pub fn new_bool(&mut self) -> VarId {
        self.new_var(BOOL_DOMAIN)
    }

    pub fn num_vars(&self) -> usize {
        self.domains.len()
    }

    /// Marks `v` as a decision variable.  When any decision variable is
    /// unfixed, splitting is confined to those; auxiliary variables are only
    /// branched on as a fallback.  With no marks, every variable qualifies.
    pub fn mark_decision(&mut self, v: VarId) {
        self.decisions.push(v);
    }

    pub fn decision_vars(&self) -> &[VarId] {
        &self.decisions
    }

    /// Demotes every variable created after this call: splitting prefers the
    /// existing variables and touches later ones only when nothing else is
    /// left.  Intended for redundant variables that propagation determines
    /// anyway, so that they never steal a branching choice.
    pub fn freeze_branching(&mut self) {
        self.branch_ceiling = Some(self.domains.len());
    }

    pub fn branch_ceiling(&self) -> usize {
        self.branch_ceiling.unwrap_or(self.domains.len())
    }

    /// Accumulated conflict weight of the constraints watching `v`.
    pub fn conflict_weight(&self, v: VarId) -> u64 {
        self.var_weight[v]
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn domain(&self, v: VarId) -> Domain {
        self.domains[v]
    }

    pub fn is_fixed(&self, v: VarId) -> bool {
        self.domains[v].count_ones() == 1
    }

    pub fn value(&self, v: VarId) -> u8 {
        debug_assert!(self.is_fixed(v));
        domain_min(self.domains[v])
    }

    pub fn post(&mut self, c: Constraint) {
        // Table propagation assumes positionally independent scope variables;
        // the other propagators treat each occurrence independently and stay
        // sound under repeats (e.g. one memoized Boolean at several Lookup
        // slots), so only Table enforces distinctness.
        if cfg!(debug_assertions) {
            if let Constraint::Table { scope, .. } = &c {
                let mut seen = std::collections::HashSet::new();
                for v in scope {
                    assert!(seen.insert(*v), "duplicate variable in table scope");
                }
            }
        }
        let id = self.constraints.len();
        for v in c.scope_vars() {
            self.watchers[v].push(id);
            self.var_weight[v] += 1;
        }
        self.weights.push(1);
        self.constraints.push(c);
        self.in_queue.push(true);
        self.queue.push(id);
    }

    /// Narrows a domain, recording the old value on the trail and waking the
    /// variable's watchers.  Returns Err on wipe-out.
    pub fn intersect(&mut self, v: VarId, mask: Domain) -> Result<(), EmptyDomain> {
        let old = self.domains[v];
        let new = old & mask;
        if new == old {
            return Ok(());
        }
        self.trail.push((v, old));
        self.domains[v] = new;
        if new == 0 {
            return Err(EmptyDomain(v));
        }
        for &c in &self.watchers[v] {
            if !self.in_queue[c] {
                self.in_queue[c] = true;
                self.queue.push(c);
            }
        }
        Ok(())
    }

    pub fn assign(&mut self, v: VarId, value: u8) -> Result<(), EmptyDomain> {
        self.intersect(v, singleton(value))
    }

    pub fn push_level(&mut self) {
        self.marks.push(self.trail.len());
    }

    pub fn pop_level(&mut self) {
        let mark = self.marks.pop().expect("pop_level without push_level");
        while self.trail.len() > mark {
            let (v, old) = self.trail.pop().unwrap();
            self.domains[v] = old;
        }
        self.drain_queue();
    }

    fn drain_queue(&mut self) {
        while let Some(c) = self.queue.pop() {
            self.in_queue[c] = false;
        }
    }

    /// Runs the constraint queue to a hyper-arc-consistent fixpoint.
    pub fn propagate(&mut self) -> PropagationStatus {
        // Constraints are moved out so propagators can narrow domains while
        // reading the constraint store.
        let constraints = std::mem::take(&mut self.constraints);
        let mut failed = None;
        while let Some(c) = self.queue.pop() {
            self.in_queue[c] = false;
            if self.propagate_one(&constraints[c]).is_err() {
                failed = Some(c);
                break;
            }
        }
        self.constraints = constraints;
        match failed {
            Some(c) => {
                // wdeg bookkeeping: remember which constraints keep failing
                // so that first-fail ties are broken towards the conflict.
                self.weights[c] += 1;
                for v in self.constraints[c].scope_vars() {
                    self.var_weight[v] += 1;
                }
                self.drain_queue();
                PropagationStatus::Failed
            }
            None => PropagationStatus::Stable,
        }
    }

    fn propagate_one(&mut self, c: &Constraint) -> Result<(), EmptyDomain> {
        match c {
            Constraint::Table { scope, tuples } => {
                let mut supported = vec![0u64; scope.len()];
                'tuples: for t in tuples {
                    for (p, &v) in t.iter().enumerate() {
                        if self.domains[scope[p]] & singleton(v) == 0 {
                            continue 'tuples;
                        }
                    }
                    for (p, &v) in t.iter().enumerate() {
                        supported[p] |= singleton(v);
                    }
                }
                for (p, &x) in scope.iter().enumerate() {
                    self.intersect(x, supported[p])?;
                }
                Ok(())
            }
            Constraint::ReifiedMember { x, set, b } => {
                let dx = self.domains[*x];
                match self.domains[*b] {
                    d if d == singleton(1) => self.intersect(*x, *set),
                    d if d == singleton(0) => self.intersect(*x, !*set),
                    _ => {
                        if dx & !set == 0 {
                            self.assign(*b, 1)
                        } else if dx & set == 0 {
                            self.assign(*b, 0)
                        } else {
                            Ok(())
                        }
                    }
                }
            }
            Constraint::BoolNot { x, b } => {
                if self.is_fixed(*x) {
                    self.assign(*b, 1 - self.value(*x))?;
                }
                if self.is_fixed(*b) {
                    self.assign(*x, 1 - self.value(*b))?;
                }
                Ok(())
            }
            Constraint::BoolAnd { xs, b } => {
                if self.domains[*b] == singleton(1) {
                    for &x in xs {
                        self.assign(x, 1)?;
                    }
                    return Ok(());
                }
                let any_false = xs.iter().any(|&x| self.domains[x] == singleton(0));
                if any_false {
                    return self.assign(*b, 0);
                }
                let unfixed: Vec<VarId> = xs
                    .iter()
                    .copied()
                    .filter(|&x| !self.is_fixed(x))
                    .collect();
                if unfixed.is_empty() {
                    return self.assign(*b, 1);
                }
                if self.domains[*b] == singleton(0) && unfixed.len() == 1 {
                    return self.assign(unfixed[0], 0);
                }
                Ok(())
            }
            Constraint::BoolOr { xs, b } => {
                if self.domains[*b] == singleton(0) {
                    for &x in xs {
                        self.assign(x, 0)?;
                    }
                    return Ok(());
                }
                let any_true = xs.iter().any(|&x| self.domains[x] == singleton(1));
                if any_true {
                    return self.assign(*b, 1);
                }
                let unfixed: Vec<VarId> = xs
                    .iter()
                    .copied()
                    .filter(|&x| !self.is_fixed(x))
                    .collect();
                if unfixed.is_empty() {
                    return self.assign(*b, 0);
                }
                if self.domains[*b] == singleton(1) && unfixed.len() == 1 {
                    return self.assign(unfixed[0], 1);
                }
                Ok(())
            }
            Constraint::Clause { pos, neg } => {
                let sat = pos.iter().any(|&x| self.domains[x] == singleton(1))
                    || neg.iter().any(|&x| self.domains[x] == singleton(0));
                if sat {
                    return Ok(());
                }
                let mut unfixed: Option<(VarId, u8)> = None;
                let mut count = 0;
                for &x in pos {
                    if !self.is_fixed(x) {
                        unfixed = Some((x, 1));
                        count += 1;
                    }
                }
                for &x in neg {
                    if !self.is_fixed(x) {
                        unfixed = Some((x, 0));
                        count += 1;
                    }
                }
                match (count, unfixed) {
                    (0, _) => {
                        // all literals false
                        let var = pos.first().or(neg.first()).copied().unwrap_or(0);
                        Err(EmptyDomain(var))
                    }
                    (1, Some((x, v))) => self.assign(x, v),
                    _ => Ok(()),
                }
            }
            Constraint::CondEq { cond, value, x, y } => {
                let dc = self.domains[*cond];
                if dc & singleton(*value) == 0 {
                    return Ok(()); // entailed
                }
                let both = self.domains[*x] & self.domains[*y];
                if dc == singleton(*value) {
                    self.intersect(*x, both)?;
                    self.intersect(*y, both)?;
                } else if both == 0 {
                    self.intersect(*cond, !singleton(*value))?;
                }
                Ok(())
            }
            Constraint::Lookup {
                index,
                offset,
                value,
                elems,
            } => {
                // index i supported iff dom(value) meets dom(elems[i])
                let mut idx_support = 0u64;
                let mut val_support = 0u64;
                for i in domain_values(self.domains[*index]) {
                    let pos = (i - offset) as usize;
                    if pos >= elems.len() {
                        continue;
                    }
                    let overlap = self.domains[*value] & self.domains[elems[pos]];
                    if overlap != 0 {
                        idx_support |= singleton(i);
                        val_support |= overlap;
                    }
                }
                self.intersect(*index, idx_support)?;
                self.intersect(*value, val_support)?;
                if self.domains[*index].count_ones() == 1 {
                    let pos = (domain_min(self.domains[*index]) - offset) as usize;
                    let both = self.domains[*value] & self.domains[elems[pos]];
                    self.intersect(*value, both)?;
                    self.intersect(elems[pos], both)?;
                }
                Ok(())
            }
            Constraint::ReifiedLeq { x, y, b } => {
                let (dx, dy) = (self.domains[*x], self.domains[*y]);
                match self.domains[*b] {
                    d if d == singleton(1) => {
                        self.intersect(*x, range_domain(0, domain_max(dy)))?;
                        self.intersect(*y, range_domain(domain_min(dx), 63))?;
                        Ok(())
                    }
                    d if d == singleton(0) => {
                        // x > y
                        if domain_min(dy) == 63 {
                            return Err(EmptyDomain(*x));
                        }
                        self.intersect(*x, range_domain(domain_min(dy) + 1, 63))?;
                        let dx = self.domains[*x];
                        if domain_max(dx) == 0 {
                            return Err(EmptyDomain(*y));
                        }
                        self.intersect(*y, range_domain(0, domain_max(dx) - 1))?;
                        Ok(())
                    }
                    _ => {
                        if domain_max(dx) <= domain_min(dy) {
                            self.assign(*b, 1)
                        } else if domain_min(dx) > domain_max(dy) {
                            self.assign(*b, 0)
                        } else {
                            Ok(())
                        }
                    }
                }
            }
        }
    }

    pub fn assignment(&self) -> Vec<u8> {
        self.domains.iter().map(|&d| domain_min(d)).collect()
    }

    pub fn check_assignment(&self, a: &[u8]) -> bool {
        self.constraints.iter().all(|c| c.check(a))
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }
}

/// Branching strategies over variable domain partitions.
#[derive(Clone, Debug)]
pub enum SplitStrategy {
    /// Smallest domain first, lowest variable id on ties; branch on the
    /// smallest value versus the rest.
    FirstFail,
    /// Like first-fail for variable selection, but partition the domain so
    /// the first branch is the largest family member that is a proper subset
    /// of the current domain.  Falls back to the first-fail split.
    Subclass { family: Vec<Domain> },
}

/// A branching decision: variable plus a two-way domain partition, first part
/// tried first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitDecision {
    pub var: VarId,
    pub first: Domain,
    pub rest: Domain,
}

impl SplitStrategy {
    /// Family file format: one relation-set per line, relation names separated
    /// by whitespace; `#` comments.
    pub fn subclass_from_file(
        text: &str,
        name_to_id: impl Fn(&str) -> Option<u8>,
    ) -> Result<SplitStrategy, String> {
        let mut family = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut set = 0u64;
            for tok in line.split_whitespace() {
                let id = name_to_id(tok)
                    .ok_or_else(|| format!("line {}: unknown relation '{tok}'", lineno + 1))?;
                set |= singleton(id);
            }
            if set != 0 {
                family.push(set);
            }
        }
        Ok(SplitStrategy::Subclass { family })
    }

    /// Returns `None` when every variable is a singleton.
    pub fn split(&self, net: &Network) -> Option<SplitDecision> {
        // First-fail with conflict-weighted tie-breaking: smallest domain
        // first, then the variable whose constraints have failed most often.
        let smallest = |vars: &mut dyn Iterator<Item = VarId>| {
            vars.filter(|&v| net.domain(v).count_ones() > 1)
                .min_by_key(|&v| {
                    // dom/wdeg: prefer small domains watched by constraints
                    // that fail often.  Integer score via cross-multiplied
                    // comparison is avoided by scaling the domain size.
                    let score = (net.domain(v).count_ones() as u64) * (1 << 20)
                        / net.conflict_weight(v).max(1);
                    (score, v)
                })
        };
        let var = smallest(&mut net.decision_vars().iter().copied())
            .or_else(|| smallest(&mut (0..net.branch_ceiling())))
            .or_else(|| smallest(&mut (0..net.num_vars())))?;
        let dom = net.domain(var);
        match self {
            SplitStrategy::FirstFail => {
                let first = singleton(domain_min(dom));
                Some(SplitDecision {
                    var,
                    first,
                    rest: dom & !first,
                })
            }
            SplitStrategy::Subclass { family } => {
                let best = family
                    .iter()
                    .copied()
                    .filter(|&s| s & !dom == 0 && s != dom && s != 0)
                    .max_by_key(|s| s.count_ones());
                let first = best.unwrap_or_else(|| singleton(domain_min(dom)));
                Some(SplitDecision {
                    var,
                    first,
                    rest: dom & !first,
                })
            }
        }
    }
}

/// Caller-supplied search budgets; `None` means unlimited.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolveLimits {
    pub max_nodes: Option<u64>,
    pub deadline: Option<Instant>,
}

impl SolveLimits {
    pub fn none() -> SolveLimits {
        SolveLimits::default()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveStats {
    pub nodes: u64,
    pub failures: u64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub enum SolveOutcome {
    Sat(Vec<u8>),
    Unsat,
    /// A node or time budget was exceeded; distinct from unsat.
    LimitExceeded,
}

enum Walk {
    Exhausted,
    Stop,
    Limit,
}

fn over_limit(limits: &SolveLimits, stats: &SolveStats) -> bool {
    if let Some(n) = limits.max_nodes {
        if stats.nodes > n {
            return true;
        }
    }
    if let Some(deadline) = limits.deadline {
        if stats.nodes % 512 == 0 && Instant::now() > deadline {
            return true;
        }
    }
    false
}

fn walk(
    net: &mut Network,
    strategy: &SplitStrategy,
    limits: &SolveLimits,
    stats: &mut SolveStats,
    on_solution: &mut dyn FnMut(&[u8]) -> bool,
) -> Walk {
    stats.nodes += 1;
    if over_limit(limits, stats) {
        return Walk::Limit;
    }
    let Some(decision) = strategy.split(net) else {
        let a = net.assignment();
        assert!(
            net.check_assignment(&a),
            "search produced an assignment violating a constraint"
        );
        return if on_solution(&a) {
            Walk::Exhausted
        } else {
            Walk::Stop
        };
    };
    for part in [decision.first, decision.rest] {
        net.push_level();
        let ok = net.intersect(decision.var, part).is_ok()
            && net.propagate() == PropagationStatus::Stable;
        if ok {
            match walk(net, strategy, limits, stats, on_solution) {
                Walk::Exhausted => {}
                other => {
                    net.pop_level();
                    return other;
                }
            }
        } else {
            stats.failures += 1;
        }
        net.pop_level();
    }
    Walk::Exhausted
}

/// Backtracking search for one solution.
pub fn solve(
    net: &mut Network,
    strategy: &SplitStrategy,
    limits: SolveLimits,
) -> (SolveOutcome, SolveStats) {
    let start = Instant::now();
    let mut stats = SolveStats::default();
    if net.propagate() == PropagationStatus::Failed {
        stats.elapsed = start.elapsed();
        return (SolveOutcome::Unsat, stats);
    }
    let mut found: Option<Vec<u8>> = None;
    let result = walk(net, strategy, &limits, &mut stats, &mut |a| {
        found = Some(a.to_vec());
        false
    });
    stats.elapsed = start.elapsed();
    let outcome = match result {
        Walk::Stop => SolveOutcome::Sat(found.unwrap()),
        Walk::Exhausted => SolveOutcome::Unsat,
        Walk::Limit => SolveOutcome::LimitExceeded,
    };
    (outcome, stats)
}

/// Enumerates every solution; the callback returns `false` to stop early.
/// Returns `true` if the search space was exhausted within the limits.
pub fn solve_all(
    net: &mut Network,
    strategy: &SplitStrategy,
    limits: SolveLimits,
    mut on_solution: impl FnMut(&[u8]) -> bool,
) -> bool {
    if net.propagate() == PropagationStatus::Failed {
        return true;
    }
    let mut stats = SolveStats::default();
    matches!(
        walk(net, strategy, &limits, &mut stats, &mut on_solution),
        Walk::Exhausted
    )
}

//! Assembly of the finite constraint network for a candidate bound k and the
//! translation of temporal formulas into constraints.
//!
//! A plan holds k + 1 stages of relation variables per aspect and ordered
//! object pair (the extra stage is a placeholder that the loop variable ℓ
//! equates with the loop-start stage), the integrity constraints of every
//! stage, the neighbourhood constraints between consecutive stages, and a
//! memo table so each (subformula, state index) pair is translated once.
//!
//! Temporal operators are translated by unravelling their recursive
//! definitions along the stages.  For each of ◇φ, □φ and χUψ, a suffix chain
//! `C_i` encodes the operator's value over stages i..k ignoring the loop, and
//! a single wrap variable — one application of the next-time rule, a
//! conjunction of implications (ℓ = j) ⟹ C_j — closes the recursion at stage
//! k.  The truth value at stage i is then, e.g. for ◇φ, `C_i ∨ wrap`: after
//! wrapping once, every reachable stage has been examined, so no second
//! unravelling past stage k is needed.  This realizes the unravelling depth
//! [`n_unravel`] without per-entry-point copies.  The alternative array
//! translation replaces the ◇ chains by a fresh index variable constrained to
//! the reachable stages and turns atoms under such an index into array
//! lookups on the stage variables.

use std::collections::HashMap;

use crate::calculus::{Calculus, RelId};
use crate::csp::{range_domain, singleton, Constraint, Network, VarId};
use crate::engine::{Problem, Translation};
use crate::ltl::Formula;

/// How many unravelling steps of ◇/□/U are needed past state `i` before every
/// reachable state has been examined: the steps to reach the loop plus the
/// loop length, pessimistically using the least possible loop start.
pub fn n_unravel(k: usize, l_min: usize, i: usize) -> usize {
    debug_assert!(1 <= i && i <= k);
    debug_assert!(1 <= l_min && l_min <= k + 1);
    k - l_min.min(i)
}

/// A state index in a translation: a concrete stage or an index variable
/// (array translation only).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IdxKey {
    Const(usize),
    Var(VarId),
}

/// Role of a cached Boolean: the formula's truth value at an index, a
/// no-wrap suffix-chain entry, or the operator's single wrap closure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Role {
    Value,
    Chain,
    Wrap,
}

type CacheKey = (Formula, IdxKey, Role);

struct PlanAspect {
    name: String,
    calculus: Calculus,
    /// vars[t-1][a*n + b] for stages 1..=k+1; diagonal slots unused.
    vars: Vec<Vec<VarId>>,
}

/// Per-category constraint counts from [`build_stages`], for budget checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildCounts {
    pub pair_vars_per_stage: usize,
    pub conv_per_stage: usize,
    pub comp_per_stage: usize,
    pub neighbourhood: usize,
    pub link: usize,
    pub cond_eq: usize,
}

pub struct StagePlan {
    pub net: Network,
    pub k: usize,
    /// ℓ with domain {1..k+1}; k+1 means no loop (finite path).
    pub loop_var: VarId,
    pub counts: BuildCounts,
    true_var: VarId,
    false_var: VarId,
    universe: Vec<String>,
    aspects: Vec<PlanAspect>,
    cache: HashMap<CacheKey, VarId>,
    not_cache: HashMap<VarId, VarId>,
    /// e_j ≡ (ℓ = j), indexed by j - 1, for j in 1..=k+1.
    loop_eq: Vec<Option<VarId>>,
    loop_leq_k: Option<VarId>,
    const_idx: HashMap<usize, VarId>,
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("unknown aspect '{0}'")]
    UnknownAspect(String),
    #[error("unknown object '{0}'")]
    UnknownObject(String),
    #[error("bound k = {0} out of supported range 1..=62")]
    BadBound(usize),
    #[error("link {left}~{right} lists relation id outside an alphabet")]
    BadLink { left: String, right: String },
}

impl StagePlan {
    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn aspect_names(&self) -> Vec<String> {
        self.aspects.iter().map(|a| a.name.clone()).collect()
    }

    pub fn calculus_of(&self, aspect: &str) -> Option<&Calculus> {
        self.aspects
            .iter()
            .find(|a| a.name == aspect)
            .map(|a| &a.calculus)
    }

    /// The relation variable of `aspect[a,b]` at stage `t` (1..=k+1);
    /// `None` for the diagonal or unknown names.
    pub fn stage_var(&self, aspect: &str, a: &str, b: &str, t: usize) -> Option<VarId> {
        let ap = self.aspects.iter().find(|x| x.name == aspect)?;
        let n = self.universe.len();
        let ia = self.universe.iter().position(|o| o == a)?;
        let ib = self.universe.iter().position(|o| o == b)?;
        if ia == ib || t < 1 || t > self.k + 1 {
            return None;
        }
        Some(ap.vars[t - 1][ia * n + ib])
    }

    /// Excludes stuttering witnesses: consecutive stages must differ in at
    /// least one relation, and the stage the loop edge returns to must
    /// differ from stage k unless the loop is a self-loop at k.
    ///
    /// Collapsing a repeated state turns a lasso of bound k into one of
    /// bound k - 1 with the same infinite behaviour up to stuttering, so
    /// this is sound for next-free specifications whenever every smaller
    /// bound has already been refuted.  Callers are responsible for both
    /// conditions; see [`crate::engine::simulate`].
    pub fn forbid_stuttering(&mut self) {
        // The difference bits below are determined by the stage variables;
        // keep them out of the branching pool.
        self.net.freeze_branching();
        let k = self.k;
        for t in 1..k {
            let diffs = self.stage_diff_bits(t, t + 1);
            self.net.post(Constraint::Clause {
                pos: diffs,
                neg: vec![],
            });
        }
        for j in 1..k {
            let diffs = self.stage_diff_bits(j, k);
            let e = self.loop_eq_var(j);
            self.net.post(Constraint::Clause {
                pos: diffs,
                neg: vec![e],
            });
        }
    }

    /// One Boolean per undirected pair and aspect, true iff the relation
    /// differs between stages `t1` and `t2`.  Converse closure makes the
    /// pairs with a > b redundant.
    fn stage_diff_bits(&mut self, t1: usize, t2: usize) -> Vec<VarId> {
        let n = self.universe.len();
        let mut bits = Vec::new();
        for ai in 0..self.aspects.len() {
            let m = self.aspects[ai].calculus.alphabet_size();
            let mut tuples = Vec::with_capacity(m * m);
            for r in 0..m {
                for s in 0..m {
                    tuples.push(vec![r as u8, s as u8, u8::from(r != s)]);
                }
            }
            for a in 0..n {
                for b in a + 1..n {
                    let x = self.aspects[ai].vars[t1 - 1][a * n + b];
                    let y = self.aspects[ai].vars[t2 - 1][a * n + b];
                    let d = self.net.new_bool();
                    self.net.post(Constraint::Table {
                        scope: vec![x, y, d],
                        tuples: tuples.clone(),
                    });
                    bits.push(d);
                }
            }
        }
        bits
    }

    fn post_false(&mut self) {
        let f = self.false_var;
        self.net.post(Constraint::Clause {
            pos: vec![f],
            neg: vec![],
        });
    }

    // ---- reified Boolean helpers (with constant folding) ----

    fn reify_not(&mut self, x: VarId) -> VarId {
        if x == self.true_var {
            return self.false_var;
        }
        if x == self.false_var {
            return self.true_var;
        }
        if let Some(&n) = self.not_cache.get(&x) {
            return n;
        }
        let b = self.net.new_bool();
        self.net.post(Constraint::BoolNot { x, b });
        self.not_cache.insert(x, b);
        self.not_cache.insert(b, x);
        b
    }

    fn reify_and(&mut self, xs: Vec<VarId>) -> VarId {
        let mut flat: Vec<VarId> = xs.into_iter().filter(|&x| x != self.true_var).collect();
        flat.sort_unstable();
        flat.dedup();
        if flat.contains(&self.false_var) {
            return self.false_var;
        }
        match flat.len() {
            0 => self.true_var,
            1 => flat[0],
            _ => {
                let b = self.net.new_bool();
                self.net.post(Constraint::BoolAnd { xs: flat, b });
                b
            }
        }
    }

    fn reify_or(&mut self, xs: Vec<VarId>) -> VarId {
        let mut flat: Vec<VarId> = xs.into_iter().filter(|&x| x != self.false_var).collect();
        flat.sort_unstable();
        flat.dedup();
        if flat.contains(&self.true_var) {
            return self.true_var;
        }
        match flat.len() {
            0 => self.false_var,
            1 => flat[0],
            _ => {
                let b = self.net.new_bool();
                self.net.post(Constraint::BoolOr { xs: flat, b });
                b
            }
        }
    }

    /// b ≡ (x → y)
    fn reify_implies(&mut self, x: VarId, y: VarId) -> VarId {
        if x == self.false_var || y == self.true_var || x == y {
            return self.true_var;
        }
        if x == self.true_var {
            return y;
        }
        if y == self.false_var {
            return self.reify_not(x);
        }
        let b = self.net.new_bool();
        self.net.post(Constraint::Table {
            scope: vec![x, y, b],
            tuples: vec![vec![0, 0, 1], vec![0, 1, 1], vec![1, 0, 0], vec![1, 1, 1]],
        });
        b
    }

    /// b ≡ (x ↔ y)
    fn reify_iff(&mut self, x: VarId, y: VarId) -> VarId {
        if x == y {
            return self.true_var;
        }
        if x == self.true_var {
            return y;
        }
        if y == self.true_var {
            return x;
        }
        if x == self.false_var {
            return self.reify_not(y);
        }
        if y == self.false_var {
            return self.reify_not(x);
        }
        let b = self.net.new_bool();
        self.net.post(Constraint::Table {
            scope: vec![x, y, b],
            tuples: vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0], vec![1, 1, 1]],
        });
        b
    }

    fn bool_const(&self, v: bool) -> VarId {
        if v {
            self.true_var
        } else {
            self.false_var
        }
    }

    /// e_j ≡ (ℓ = j)
    fn loop_eq_var(&mut self, j: usize) -> VarId {
        if let Some(v) = self.loop_eq[j - 1] {
            return v;
        }
        let b = self.net.new_bool();
        let l = self.loop_var;
        self.net.post(Constraint::ReifiedMember {
            x: l,
            set: singleton(j as u8),
            b,
        });
        self.loop_eq[j - 1] = Some(b);
        b
    }

    /// b ≡ (ℓ ≤ k), i.e. a loop exists.
    fn loop_leq_k_var(&mut self) -> VarId {
        if let Some(v) = self.loop_leq_k {
            return v;
        }
        let b = self.net.new_bool();
        let (l, k) = (self.loop_var, self.k);
        self.net.post(Constraint::ReifiedMember {
            x: l,
            set: range_domain(1, k as u8),
            b,
        });
        self.loop_leq_k = Some(b);
        b
    }

    /// A variable fixed to the stage index `i` (for reified comparisons).
    fn const_idx_var(&mut self, i: usize) -> VarId {
        if let Some(&v) = self.const_idx.get(&i) {
            return v;
        }
        let v = self.net.new_var(singleton(i as u8));
        self.const_idx.insert(i, v);
        v
    }
}

/// Builds the stage network for bound `k`: variables for stages 1..k+1,
/// integrity constraints (identity by constant-folding the diagonal, conv,
/// deduplicated comp) and links at stages 1..k, neighbourhood constraints
/// between consecutive stages and towards the placeholder stage k+1, the
/// loop variable with its conditional equalities, and the initial-state
/// atoms at stage 1.
pub fn build_stages(p: &Problem, k: usize) -> Result<StagePlan, BuildError> {
    if k < 1 || k > 62 {
        return Err(BuildError::BadBound(k));
    }
    let universe: Vec<String> = p.vocab.objects().to_vec();
    let n = universe.len();
    let mut net = Network::new();
    let true_var = net.new_var(singleton(1));
    let false_var = net.new_var(singleton(0));
    let loop_var = net.new_var(range_domain(1, (k + 1) as u8));
    if !p.options.allow_finite_path {
        net.intersect(loop_var, range_domain(1, k as u8))
            .expect("k >= 1 leaves the loop domain nonempty");
    }

    let mut aspects: Vec<PlanAspect> = p
        .vocab
        .aspects()
        .map(|(name, cal)| PlanAspect {
            name: name.to_string(),
            calculus: cal.clone(),
            vars: Vec::new(),
        })
        .collect();

    // The loop position is the only preferred decision variable: fixing ℓ
    // first collapses every conditional-equality channel and lets the usual
    // smallest-domain rule refute each loop shape independently, which is
    // dramatically cheaper than interleaving loop choices with stage search.
    net.mark_decision(loop_var);
    for _t in 1..=k + 1 {
        for ap in aspects.iter_mut() {
            let full = ap.calculus.full_set().0 as u64;
            let mut grid = vec![usize::MAX; n * n];
            for a in 0..n {
                for b in 0..n {
                    if a != b {
                        grid[a * n + b] = net.new_var(full);
                    }
                }
            }
            ap.vars.push(grid);
        }
    }
    let mut counts = BuildCounts {
        pair_vars_per_stage: n * (n.max(1) - 1) * aspects.len(),
        ..BuildCounts::default()
    };

    for ap in &aspects {
        let cal = &ap.calculus;
        let conv_tuples: Vec<Vec<u8>> = (0..cal.alphabet_size() as RelId)
            .map(|r| vec![r, cal.converse(r)])
            .collect();
        let comp_tuples: Vec<Vec<u8>> = cal
            .triples()
            .iter()
            .map(|&(r, s, t)| vec![r, s, t])
            .collect();
        let neigh_tuples: Vec<Vec<u8>> = (0..cal.alphabet_size() as RelId)
            .flat_map(|r| cal.neighbours(r).iter().map(move |s| vec![r, s]))
            .collect();
        for t in 1..=k {
            let grid = &ap.vars[t - 1];
            // conv: one table per unordered pair
            for a in 0..n {
                for b in a + 1..n {
                    net.post(Constraint::Table {
                        scope: vec![grid[a * n + b], grid[b * n + a]],
                        tuples: conv_tuples.clone(),
                    });
                    if t == 1 {
                        counts.conv_per_stage += 1;
                    }
                }
            }
            // comp: one representative ordered triple per unordered triple;
            // the remaining orderings follow from conv and the table laws
            for a in 0..n {
                for b in a + 1..n {
                    for c in b + 1..n {
                        net.post(Constraint::Table {
                            scope: vec![grid[a * n + b], grid[b * n + c], grid[a * n + c]],
                            tuples: comp_tuples.clone(),
                        });
                        if t == 1 {
                            counts.comp_per_stage += 1;
                        }
                    }
                }
            }
        }
        // neighbourhood between consecutive stages, including k -> k+1
        for t in 1..=k {
            let (cur, next) = (&ap.vars[t - 1], &ap.vars[t]);
            for a in 0..n {
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    net.post(Constraint::Table {
                        scope: vec![cur[a * n + b], next[a * n + b]],
                        tuples: neigh_tuples.clone(),
                    });
                    counts.neighbourhood += 1;
                }
            }
        }
    }

    // links between aspects, per stage and ordered pair
    let mut deferred_fail = false;
    for link in &p.links {
        let li = aspects
            .iter()
            .position(|a| a.name == link.left)
            .ok_or_else(|| BuildError::UnknownAspect(link.left.clone()))?;
        let ri = aspects
            .iter()
            .position(|a| a.name == link.right)
            .ok_or_else(|| BuildError::UnknownAspect(link.right.clone()))?;
        let (an, bn) = (
            aspects[li].calculus.alphabet_size() as RelId,
            aspects[ri].calculus.alphabet_size() as RelId,
        );
        if link.pairs.iter().any(|&(x, y)| x >= an || y >= bn) {
            return Err(BuildError::BadLink {
                left: link.left.clone(),
                right: link.right.clone(),
            });
        }
        let tuples: Vec<Vec<u8>> = link.pairs.iter().map(|&(x, y)| vec![x, y]).collect();
        let identities = (
            aspects[li].calculus.identity(),
            aspects[ri].calculus.identity(),
        );
        if !link.pairs.contains(&identities) {
            // the diagonal violates the link at every stage
            deferred_fail = true;
        }
        for t in 1..=k {
            for a in 0..n {
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    net.post(Constraint::Table {
                        scope: vec![
                            aspects[li].vars[t - 1][a * n + b],
                            aspects[ri].vars[t - 1][a * n + b],
                        ],
                        tuples: tuples.clone(),
                    });
                    counts.link += 1;
                }
            }
        }
    }

    // loop machinery: (ℓ = j) ⟹ (Q_j = Q_{k+1}) element-wise
    for j in 1..=k {
        for ap in &aspects {
            for a in 0..n {
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    net.post(Constraint::CondEq {
                        cond: loop_var,
                        value: j as u8,
                        x: ap.vars[j - 1][a * n + b],
                        y: ap.vars[k][a * n + b],
                    });
                    counts.cond_eq += 1;
                }
            }
        }
    }

    let mut plan = StagePlan {
        net,
        k,
        loop_var,
        counts,
        true_var,
        false_var,
        universe,
        aspects,
        cache: HashMap::new(),
        not_cache: HashMap::new(),
        loop_eq: vec![None; k + 1],
        loop_leq_k: None,
        const_idx: HashMap::new(),
    };
    if deferred_fail {
        plan.post_false();
    }

    // initial-state atoms restrict stage 1
    for atom in &p.initial {
        let ai = plan
            .aspects
            .iter()
            .position(|a| a.name == atom.aspect)
            .ok_or_else(|| BuildError::UnknownAspect(atom.aspect.clone()))?;
        for obj in [&atom.a, &atom.b] {
            if !plan.universe.iter().any(|o| o == obj) {
                return Err(BuildError::UnknownObject(obj.clone()));
            }
        }
        if atom.a == atom.b {
            if !atom.rels.contains(plan.aspects[ai].calculus.identity()) {
                plan.post_false();
            }
            continue;
        }
        let v = plan
            .stage_var(&atom.aspect, &atom.a, &atom.b, 1)
            .expect("checked above");
        if plan.net.intersect(v, atom.rels.0 as u64).is_err() {
            plan.post_false();
        }
    }
    Ok(plan)
}

/// Requires `f` to hold at position 1; convenience entry point for both
/// translations.  `Err` means the requirement is immediately contradictory.
pub fn require(
    plan: &mut StagePlan,
    f: &Formula,
    translation: Translation,
) -> Result<(), ()> {
    let v = match translation {
        Translation::Unravel => value_var(plan, f, IdxKey::Const(1), Mode::Unravel),
        Translation::Array => {
            let nnf = crate::ltl::to_nnf(f);
            value_var(plan, &nnf, IdxKey::Const(1), Mode::Array)
        }
    };
    if v == plan.false_var {
        return Err(());
    }
    if v != plan.true_var {
        plan.net.post(Constraint::Clause {
            pos: vec![v],
            neg: vec![],
        });
    }
    Ok(())
}

/// Unravelling translation: posts constraints forcing `b` to equal the truth
/// value of `f` at state `i`.
pub fn translate_unravel(f: &Formula, i: usize, b: VarId, plan: &mut StagePlan) {
    let v = value_var(plan, f, IdxKey::Const(i), Mode::Unravel);
    equate(plan, b, v);
}

/// Array translation: as [`translate_unravel`] but `f` must be in negation
/// normal form, and the state index may itself be a variable.
pub fn translate_array(f: &Formula, i: IdxKey, b: VarId, plan: &mut StagePlan) {
    let v = value_var(plan, f, i, Mode::Array);
    equate(plan, b, v);
}

fn equate(plan: &mut StagePlan, b: VarId, v: VarId) {
    if b == v {
        return;
    }
    plan.net.post(Constraint::Clause {
        pos: vec![v],
        neg: vec![b],
    });
    plan.net.post(Constraint::Clause {
        pos: vec![b],
        neg: vec![v],
    });
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Unravel,
    Array,
}

/// The Boolean holding the truth value of `f` at `idx`, translating on first
/// use.  Quantifiers must have been expanded away.
fn value_var(plan: &mut StagePlan, f: &Formula, idx: IdxKey, mode: Mode) -> VarId {
    let key = (f.clone(), idx, Role::Value);
    if let Some(&v) = plan.cache.get(&key) {
        return v;
    }
    let v = build_value(plan, f, idx, mode);
    plan.cache.insert(key, v);
    v
}

fn build_value(plan: &mut StagePlan, f: &Formula, idx: IdxKey, mode: Mode) -> VarId {
    match f {
        Formula::True => plan.true_var,
        Formula::False => plan.false_var,
        Formula::ObjCmp { equal, a, b } => plan.bool_const((a == b) == *equal),
        Formula::Atom(at) => {
            if at.a == at.b {
                let id = plan
                    .calculus_of(&at.aspect)
                    .map(|c| c.identity())
                    .unwrap_or(0);
                return plan.bool_const(at.rels.contains(id));
            }
            match idx {
                IdxKey::Const(i) => {
                    let x = plan
                        .stage_var(&at.aspect, &at.a, &at.b, i)
                        .expect("validated problem names");
                    let b = plan.net.new_bool();
                    plan.net.post(Constraint::ReifiedMember {
                        x,
                        set: at.rels.0 as u64,
                        b,
                    });
                    b
                }
                IdxKey::Var(iv) => {
                    // q = Q[a,b][i] by array lookup, then b ≡ (q ∈ R)
                    let elems: Vec<VarId> = (1..=plan.k)
                        .map(|t| {
                            plan.stage_var(&at.aspect, &at.a, &at.b, t)
                                .expect("validated problem names")
                        })
                        .collect();
                    let full = plan
                        .calculus_of(&at.aspect)
                        .map(|c| c.full_set().0 as u64)
                        .unwrap_or(u64::MAX);
                    let q = plan.net.new_var(full);
                    plan.net.post(Constraint::Lookup {
                        index: iv,
                        offset: 1,
                        value: q,
                        elems,
                    });
                    let b = plan.net.new_bool();
                    plan.net.post(Constraint::ReifiedMember {
                        x: q,
                        set: at.rels.0 as u64,
                        b,
                    });
                    b
                }
            }
        }
        Formula::Not(g) => match mode {
            Mode::Unravel => {
                let x = value_var(plan, g, idx, mode);
                plan.reify_not(x)
            }
            Mode::Array => {
                // NNF leaves negation on atoms only; fold it into the set.
                match &**g {
                    Formula::Atom(at) => {
                        let c = Formula::Atom(at.complemented());
                        value_var(plan, &c, idx, mode)
                    }
                    Formula::ObjCmp { equal, a, b } => {
                        plan.bool_const((a == b) != *equal)
                    }
                    _ => unreachable!("array translation requires NNF input"),
                }
            }
        },
        Formula::And(gs) => {
            let xs: Vec<VarId> = gs.iter().map(|g| value_var(plan, g, idx, mode)).collect();
            plan.reify_and(xs)
        }
        Formula::Or(gs) => {
            let xs: Vec<VarId> = gs.iter().map(|g| value_var(plan, g, idx, mode)).collect();
            plan.reify_or(xs)
        }
        Formula::Implies(a, b) => {
            let x = value_var(plan, a, idx, mode);
            let y = value_var(plan, b, idx, mode);
            let nx = plan.reify_not(x);
            plan.reify_or(vec![nx, y])
        }
        Formula::Equiv(a, b) => {
            let x = value_var(plan, a, idx, mode);
            let y = value_var(plan, b, idx, mode);
            plan.reify_iff(x, y)
        }
        Formula::Next(g) => build_next(plan, g, idx, mode),
        Formula::Eventually(g) => match mode {
            Mode::Unravel => {
                let c = chain_var(plan, f, index_of(idx), mode);
                let w = wrap_var(plan, f, mode);
                plan.reify_or(vec![c, w])
            }
            Mode::Array => build_eventually_array(plan, g, idx),
        },
        Formula::Always(_) | Formula::Until(..) => match idx {
            IdxKey::Const(i) => {
                let c = chain_var(plan, f, i, mode);
                let w = wrap_var(plan, f, mode);
                match f {
                    Formula::Always(_) => plan.reify_and(vec![c, w]),
                    Formula::Until(chi, _) => {
                        // value = chain ∨ (□-suffix of χ ∧ wrap)
                        let g = Formula::Always(chi.clone());
                        let gc = chain_var(plan, &g, i, mode);
                        let wrapped = plan.reify_and(vec![gc, w]);
                        plan.reify_or(vec![c, wrapped])
                    }
                    _ => unreachable!(),
                }
            }
            IdxKey::Var(iv) => lookup_value(plan, f, iv, mode),
        },
        Formula::Forall { .. } | Formula::Exists { .. } => {
            unreachable!("quantifiers must be expanded before translation")
        }
    }
}

fn index_of(idx: IdxKey) -> usize {
    match idx {
        IdxKey::Const(i) => i,
        IdxKey::Var(_) => unreachable!("unravelling needs a concrete index"),
    }
}

/// b = F[i], the per-stage value table of `f`, indexed by the variable `iv`.
fn lookup_value(plan: &mut StagePlan, f: &Formula, iv: VarId, mode: Mode) -> VarId {
    let elems: Vec<VarId> = (1..=plan.k)
        .map(|j| value_var(plan, f, IdxKey::Const(j), mode))
        .collect();
    let b = plan.net.new_bool();
    plan.net.post(Constraint::Lookup {
        index: iv,
        offset: 1,
        value: b,
        elems,
    });
    b
}

/// The no-wrap suffix chain of a temporal operator at stage `j`: the value
/// over stages j..k with the recursion closed at k by the operator's
/// fixpoint polarity (◇/U: false, □: true).
fn chain_var(plan: &mut StagePlan, f: &Formula, j: usize, mode: Mode) -> VarId {
    let key = (f.clone(), IdxKey::Const(j), Role::Chain);
    if let Some(&v) = plan.cache.get(&key) {
        return v;
    }
    let k = plan.k;
    let next = if j < k {
        Some(chain_var(plan, f, j + 1, mode))
    } else {
        None
    };
    let v = match f {
        Formula::Eventually(g) => {
            let now = value_var(plan, g, IdxKey::Const(j), mode);
            match next {
                Some(nx) => plan.reify_or(vec![now, nx]),
                None => now,
            }
        }
        Formula::Always(g) => {
            let now = value_var(plan, g, IdxKey::Const(j), mode);
            match next {
                Some(nx) => plan.reify_and(vec![now, nx]),
                None => now,
            }
        }
        Formula::Until(chi, psi) => {
            let now_psi = value_var(plan, psi, IdxKey::Const(j), mode);
            match next {
                Some(nx) => {
                    let now_chi = value_var(plan, chi, IdxKey::Const(j), mode);
                    let step = plan.reify_and(vec![now_chi, nx]);
                    plan.reify_or(vec![now_psi, step])
                }
                None => now_psi,
            }
        }
        _ => unreachable!("chains exist only for temporal operators"),
    };
    plan.cache.insert(key, v);
    v
}

/// One application of the next-time rule closing a temporal operator's
/// recursion at stage k: a conjunction of implications (ℓ = j) ⟹ chain_j,
/// guarded by (ℓ ≤ k) for the least-fixpoint operators (◇, U) so that a
/// finite path contributes nothing, and unguarded for □, which a finite
/// path satisfies trivially.
fn wrap_var(plan: &mut StagePlan, f: &Formula, mode: Mode) -> VarId {
    let key = (f.clone(), IdxKey::Const(0), Role::Wrap);
    if let Some(&v) = plan.cache.get(&key) {
        return v;
    }
    let k = plan.k;
    let mut parts = Vec::with_capacity(k + 1);
    if !matches!(f, Formula::Always(_)) {
        parts.push(plan.loop_leq_k_var());
    }
    for j in 1..=k {
        let e = plan.loop_eq_var(j);
        let c = chain_var(plan, f, j, mode);
        parts.push(plan.reify_implies(e, c));
    }
    let v = plan.reify_and(parts);
    plan.cache.insert(key, v);
    v
}

/// ○φ.  At a concrete stage below k this is φ at the following stage; at
/// stage k it consults ℓ: false on a finite path, otherwise φ at the loop
/// start.  Under a variable index both cases are combined with Boolean and
/// table constraints over a successor-index variable.
fn build_next(plan: &mut StagePlan, g: &Formula, idx: IdxKey, mode: Mode) -> VarId {
    let k = plan.k;
    match idx {
        IdxKey::Const(i) if i < k => value_var(plan, g, IdxKey::Const(i + 1), mode),
        IdxKey::Const(_) => {
            // stage k: b ≡ (ℓ ≤ k) ∧ ⋀_j (ℓ = j → φ@j)
            let mut parts = vec![plan.loop_leq_k_var()];
            for j in 1..=k {
                let e = plan.loop_eq_var(j);
                let c = value_var(plan, g, IdxKey::Const(j), mode);
                parts.push(plan.reify_implies(e, c));
            }
            plan.reify_and(parts)
        }
        IdxKey::Var(iv) => {
            // successor-index variable w: w = i+1 below k, w = ℓ at k
            let w = plan.net.new_var(range_domain(1, k as u8));
            let mut tuples = Vec::new();
            for m in 1..k {
                for l in 1..=k + 1 {
                    tuples.push(vec![m as u8, l as u8, (m + 1) as u8]);
                }
            }
            for l in 1..=k {
                tuples.push(vec![k as u8, l as u8, l as u8]);
            }
            // no successor exists for i = k on a finite path; w is then free
            for x in 1..=k {
                tuples.push(vec![k as u8, (k + 1) as u8, x as u8]);
            }
            let l = plan.loop_var;
            plan.net.post(Constraint::Table {
                scope: vec![iv, l, w],
                tuples,
            });
            // dead ≡ (i = k ∧ ℓ = k+1): the strong next-time is then false
            let at_k = plan.net.new_bool();
            plan.net.post(Constraint::ReifiedMember {
                x: iv,
                set: singleton(k as u8),
                b: at_k,
            });
            let no_loop = plan.loop_eq_var(k + 1);
            let dead = plan.reify_and(vec![at_k, no_loop]);
            let alive = plan.reify_not(dead);
            let c = value_var(plan, g, IdxKey::Var(w), mode);
            plan.reify_and(vec![alive, c])
        }
    }
}

/// ◇φ in the array translation: a fresh index j examines φ at one reachable
/// stage, where reachability from `idx` is (i ≤ j) ∨ (ℓ ≤ j).
fn build_eventually_array(plan: &mut StagePlan, g: &Formula, idx: IdxKey) -> VarId {
    let k = plan.k;
    let j = plan.net.new_var(range_domain(1, k as u8));
    let l = plan.loop_var;
    let b_loop = plan.net.new_bool();
    plan.net.post(Constraint::ReifiedLeq {
        x: l,
        y: j,
        b: b_loop,
    });
    let iv = match idx {
        IdxKey::Const(i) => plan.const_idx_var(i),
        IdxKey::Var(v) => v,
    };
    let b_fwd = plan.net.new_bool();
    plan.net.post(Constraint::ReifiedLeq {
        x: iv,
        y: j,
        b: b_fwd,
    });
    plan.net.post(Constraint::Clause {
        pos: vec![b_loop, b_fwd],
        neg: vec![],
    });
    value_var(plan, g, IdxKey::Var(j), Mode::Array)
}

#[cfg(test)]
mod tests;

//! The temporal specification language: formulas over qualitative atoms,
//! bounded-quantifier expansion, negation normal form, and a recursive
//! evaluator over lasso paths.
//!
//! The evaluator implements the path semantics directly (memoized on
//! subformula and effective state index) and is the oracle the constraint
//! translation is checked against, as well as the trace verifier's backend.

mod eval;
mod parser;

pub use eval::{evaluate_on_lasso, EvalError};
pub use parser::{parse, ParseError};

use std::collections::HashMap;
use std::fmt;

use crate::calculus::{Calculus, RelId, RelSet};

/// Names in scope for parsing and expansion: aspects with their calculi,
/// named object sets, and the object universe.
#[derive(Clone, Debug, Default)]
pub struct Vocab {
    aspects: Vec<(String, Calculus)>,
    sets: HashMap<String, Vec<String>>,
    objects: Vec<String>,
}

impl Vocab {
    pub fn new() -> Vocab {
        Vocab::default()
    }

    pub fn add_aspect(&mut self, name: &str, calculus: Calculus) {
        self.aspects.push((name.to_string(), calculus));
    }

    /// Declares a named set; members become part of the object universe.
    pub fn add_set(&mut self, name: &str, members: Vec<String>) {
        for m in &members {
            if !self.objects.contains(m) {
                self.objects.push(m.clone());
            }
        }
        self.sets.insert(name.to_string(), members);
    }

    pub fn aspect(&self, name: &str) -> Option<&Calculus> {
        self.aspects
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c)
    }

    pub fn aspects(&self) -> impl Iterator<Item = (&str, &Calculus)> {
        self.aspects.iter().map(|(n, c)| (n.as_str(), c))
    }

    pub fn set(&self, name: &str) -> Option<&[String]> {
        self.sets.get(name).map(|v| v.as_slice())
    }

    pub fn sets(&self) -> &HashMap<String, Vec<String>> {
        &self.sets
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn has_object(&self, name: &str) -> bool {
        self.objects.iter().any(|o| o == name)
    }
}

/// An atomic formula `A[a,b] in R`, with the three other atomic forms
/// normalized into set membership at parse time.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub aspect: String,
    pub a: String,
    pub b: String,
    pub rels: RelSet,
    /// Alphabet size of the aspect's calculus; fixes the complement.
    pub alphabet: u8,
}

impl Atom {
    pub fn complemented(&self) -> Atom {
        Atom {
            rels: self.rels.complement_in(self.alphabet as usize),
            ..self.clone()
        }
    }
}

/// A set expression under a quantifier: a declared set name or a literal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectSet {
    Named(String),
    Literal(Vec<String>),
}

/// Temporal formulas over qualitative atoms.  `ObjCmp` is the meta-level
/// object (in)equality guard used under bounded quantifiers; it constant-folds
/// away during quantifier expansion.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Atom),
    ObjCmp {
        equal: bool,
        a: String,
        b: String,
    },
    True,
    False,
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Equiv(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Forall {
        var: String,
        set: ObjectSet,
        body: Box<Formula>,
    },
    Exists {
        var: String,
        set: ObjectSet,
        body: Box<Formula>,
    },
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    /// N-ary conjunction, flattening nested conjunctions.
    pub fn and(fs: Vec<Formula>) -> Formula {
        let mut flat = Vec::with_capacity(fs.len());
        for f in fs {
            match f {
                Formula::And(gs) => flat.extend(gs),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Formula::True,
            1 => flat.into_iter().next().unwrap(),
            _ => Formula::And(flat),
        }
    }

    /// N-ary disjunction, flattening nested disjunctions.
    pub fn or(fs: Vec<Formula>) -> Formula {
        let mut flat = Vec::with_capacity(fs.len());
        for f in fs {
            match f {
                Formula::Or(gs) => flat.extend(gs),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Formula::False,
            1 => flat.into_iter().next().unwrap(),
            _ => Formula::Or(flat),
        }
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    pub fn eventually(f: Formula) -> Formula {
        Formula::Eventually(Box::new(f))
    }

    pub fn always(f: Formula) -> Formula {
        Formula::Always(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn contains_next(&self) -> bool {
        match self {
            Formula::Next(_) => true,
            _ => self.children().iter().any(|c| c.contains_next()),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Forall { .. } | Formula::Exists { .. } => false,
            _ => self.children().iter().all(|c| c.is_quantifier_free()),
        }
    }

    fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom(_) | Formula::ObjCmp { .. } | Formula::True | Formula::False => vec![],
            Formula::Not(f)
            | Formula::Next(f)
            | Formula::Eventually(f)
            | Formula::Always(f) => vec![f],
            Formula::And(fs) | Formula::Or(fs) => fs.iter().collect(),
            Formula::Implies(a, b) | Formula::Equiv(a, b) | Formula::Until(a, b) => {
                vec![a, b]
            }
            Formula::Forall { body, .. } | Formula::Exists { body, .. } => vec![body],
        }
    }

    /// Nesting depth, atoms at depth zero.
    pub fn depth(&self) -> usize {
        self.children()
            .iter()
            .map(|c| c.depth() + 1)
            .max()
            .unwrap_or(0)
    }

    /// Every atom in the formula.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        if let Formula::Atom(a) = self {
            out.push(a);
        }
        for c in self.children() {
            c.collect_atoms(out);
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExpandError {
    #[error("unknown object set '{0}'")]
    UnknownSet(String),
    #[error("unresolved object name '{0}' in expanded formula")]
    UnresolvedObject(String),
}

/// Replaces bounded quantifiers by finite conjunctions/disjunctions over the
/// members of their sets and constant-folds object (in)equality guards.
/// An empty set makes an existential false and a universal true.
pub fn expand_quantifiers(f: &Formula, vocab: &Vocab) -> Result<Formula, ExpandError> {
    let expanded = expand_rec(f, vocab, &HashMap::new())?;
    fold_guards(expanded, vocab)
}

fn expand_rec(
    f: &Formula,
    vocab: &Vocab,
    subst: &HashMap<String, String>,
) -> Result<Formula, ExpandError> {
    let lookup = |name: &str| -> String {
        subst.get(name).cloned().unwrap_or_else(|| name.to_string())
    };
    Ok(match f {
        Formula::Atom(a) => Formula::Atom(Atom {
            a: lookup(&a.a),
            b: lookup(&a.b),
            ..a.clone()
        }),
        Formula::ObjCmp { equal, a, b } => Formula::ObjCmp {
            equal: *equal,
            a: lookup(a),
            b: lookup(b),
        },
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Not(g) => Formula::not(expand_rec(g, vocab, subst)?),
        Formula::And(gs) => Formula::And(
            gs.iter()
                .map(|g| expand_rec(g, vocab, subst))
                .collect::<Result<_, _>>()?,
        ),
        Formula::Or(gs) => Formula::Or(
            gs.iter()
                .map(|g| expand_rec(g, vocab, subst))
                .collect::<Result<_, _>>()?,
        ),
        Formula::Implies(a, b) => Formula::implies(
            expand_rec(a, vocab, subst)?,
            expand_rec(b, vocab, subst)?,
        ),
        Formula::Equiv(a, b) => Formula::Equiv(
            Box::new(expand_rec(a, vocab, subst)?),
            Box::new(expand_rec(b, vocab, subst)?),
        ),
        Formula::Next(g) => Formula::next(expand_rec(g, vocab, subst)?),
        Formula::Eventually(g) => Formula::eventually(expand_rec(g, vocab, subst)?),
        Formula::Always(g) => Formula::always(expand_rec(g, vocab, subst)?),
        Formula::Until(a, b) => Formula::until(
            expand_rec(a, vocab, subst)?,
            expand_rec(b, vocab, subst)?,
        ),
        Formula::Forall { var, set, body } | Formula::Exists { var, set, body } => {
            let members: Vec<String> = match set {
                ObjectSet::Named(n) => vocab
                    .set(n)
                    .ok_or_else(|| ExpandError::UnknownSet(n.clone()))?
                    .to_vec(),
                ObjectSet::Literal(ms) => ms.clone(),
            };
            let mut parts = Vec::with_capacity(members.len());
            for m in members {
                let mut inner = subst.clone();
                inner.insert(var.clone(), m);
                parts.push(expand_rec(body, vocab, &inner)?);
            }
            if matches!(f, Formula::Forall { .. }) {
                Formula::and(parts)
            } else {
                Formula::or(parts)
            }
        }
    })
}

/// After expansion every object name is concrete; (in)equality guards become
/// constants and vanish through simplification.
fn fold_guards(f: Formula, vocab: &Vocab) -> Result<Formula, ExpandError> {
    Ok(match f {
        Formula::ObjCmp { equal, a, b } => {
            for name in [&a, &b] {
                if !vocab.has_object(name) {
                    return Err(ExpandError::UnresolvedObject(name.clone()));
                }
            }
            if (a == b) == equal {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::Atom(a) => {
            for name in [&a.a, &a.b] {
                if !vocab.has_object(name) {
                    return Err(ExpandError::UnresolvedObject(name.clone()));
                }
            }
            Formula::Atom(a)
        }
        Formula::Not(g) => match fold_guards(*g, vocab)? {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            g => Formula::not(g),
        },
        Formula::And(gs) => {
            let mut out = Vec::new();
            for g in gs {
                match fold_guards(g, vocab)? {
                    Formula::True => {}
                    Formula::False => return Ok(Formula::False),
                    g => out.push(g),
                }
            }
            Formula::and(out)
        }
        Formula::Or(gs) => {
            let mut out = Vec::new();
            for g in gs {
                match fold_guards(g, vocab)? {
                    Formula::False => {}
                    Formula::True => return Ok(Formula::True),
                    g => out.push(g),
                }
            }
            Formula::or(out)
        }
        Formula::Implies(a, b) => {
            match (fold_guards(*a, vocab)?, fold_guards(*b, vocab)?) {
                (Formula::False, _) => Formula::True,
                (Formula::True, b) => b,
                (_, Formula::True) => Formula::True,
                (a, Formula::False) => Formula::not(a),
                (a, b) => Formula::implies(a, b),
            }
        }
        Formula::Equiv(a, b) => {
            match (fold_guards(*a, vocab)?, fold_guards(*b, vocab)?) {
                (Formula::True, b) => b,
                (a, Formula::True) => a,
                (Formula::False, b) => Formula::not(b),
                (a, Formula::False) => Formula::not(a),
                (a, b) => Formula::Equiv(Box::new(a), Box::new(b)),
            }
        }
        Formula::Next(g) => match fold_guards(*g, vocab)? {
            g => Formula::next(g),
        },
        Formula::Eventually(g) => Formula::eventually(fold_guards(*g, vocab)?),
        Formula::Always(g) => Formula::always(fold_guards(*g, vocab)?),
        Formula::Until(a, b) => {
            Formula::until(fold_guards(*a, vocab)?, fold_guards(*b, vocab)?)
        }
        f @ (Formula::True | Formula::False) => f,
        Formula::Forall { .. } | Formula::Exists { .. } => {
            unreachable!("quantifiers removed by expansion")
        }
    })
}

/// Pushes negation to the atoms (complementing their relation sets) and
/// eliminates implication and equivalence.  Expects a quantifier-free input.
pub fn to_nnf(f: &Formula) -> Formula {
    nnf(f, false)
}

fn nnf(f: &Formula, negated: bool) -> Formula {
    match f {
        Formula::Atom(a) => {
            if negated {
                Formula::Atom(a.complemented())
            } else {
                Formula::Atom(a.clone())
            }
        }
        Formula::ObjCmp { equal, a, b } => Formula::ObjCmp {
            equal: *equal != negated,
            a: a.clone(),
            b: b.clone(),
        },
        Formula::True => {
            if negated {
                Formula::False
            } else {
                Formula::True
            }
        }
        Formula::False => {
            if negated {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::Not(g) => nnf(g, !negated),
        Formula::And(gs) => {
            let parts = gs.iter().map(|g| nnf(g, negated)).collect();
            if negated {
                Formula::or(parts)
            } else {
                Formula::and(parts)
            }
        }
        Formula::Or(gs) => {
            let parts = gs.iter().map(|g| nnf(g, negated)).collect();
            if negated {
                Formula::and(parts)
            } else {
                Formula::or(parts)
            }
        }
        Formula::Implies(a, b) => {
            if negated {
                // not (a -> b) = a and not b
                Formula::and(vec![nnf(a, false), nnf(b, true)])
            } else {
                Formula::or(vec![nnf(a, true), nnf(b, false)])
            }
        }
        Formula::Equiv(a, b) => {
            // (a and b) or (not a and not b); negation swaps one side
            let (pa, pb) = (nnf(a, false), nnf(b, negated));
            let (na, nb) = (nnf(a, true), nnf(b, !negated));
            Formula::or(vec![Formula::and(vec![pa, pb]), Formula::and(vec![na, nb])])
        }
        Formula::Next(g) => Formula::next(nnf(g, negated)),
        Formula::Eventually(g) => {
            if negated {
                Formula::always(nnf(g, true))
            } else {
                Formula::eventually(nnf(g, false))
            }
        }
        Formula::Always(g) => {
            if negated {
                Formula::eventually(nnf(g, true))
            } else {
                Formula::always(nnf(g, false))
            }
        }
        Formula::Until(chi, phi) => {
            if negated {
                // not (chi U phi) = (not phi) U (not chi and not phi)  or  G not phi
                let nphi = nnf(phi, true);
                let nchi = nnf(chi, true);
                Formula::or(vec![
                    Formula::until(nphi.clone(), Formula::and(vec![nchi, nphi.clone()])),
                    Formula::always(nphi),
                ])
            } else {
                Formula::until(nnf(chi, false), nnf(phi, false))
            }
        }
        Formula::Forall { var, set, body } => {
            let inner = Box::new(nnf(body, negated));
            if negated {
                Formula::Exists {
                    var: var.clone(),
                    set: set.clone(),
                    body: inner,
                }
            } else {
                Formula::Forall {
                    var: var.clone(),
                    set: set.clone(),
                    body: inner,
                }
            }
        }
        Formula::Exists { var, set, body } => {
            let inner = Box::new(nnf(body, negated));
            if negated {
                Formula::Forall {
                    var: var.clone(),
                    set: set.clone(),
                    body: inner,
                }
            } else {
                Formula::Exists {
                    var: var.clone(),
                    set: set.clone(),
                    body: inner,
                }
            }
        }
    }
}

/// Checks that negation occurs only on atoms and that implication,
/// equivalence, and quantifiers are gone.
pub fn is_nnf(f: &Formula) -> bool {
    match f {
        Formula::Not(_)
        | Formula::Implies(..)
        | Formula::Equiv(..)
        | Formula::Forall { .. }
        | Formula::Exists { .. } => false,
        _ => f.children().iter().all(|c| is_nnf(c)),
    }
}

/// A lasso path: states `Q_1..Q_k` per aspect, with an optional loop start
/// `l` representing the infinite path `(Q_1..Q_{l-1}) (Q_l..Q_k)^w`.
#[derive(Clone, Debug, PartialEq)]
pub struct LassoPath {
    k: usize,
    loop_start: Option<usize>,
    aspects: Vec<AspectPath>,
}

#[derive(Clone, Debug, PartialEq)]
struct AspectPath {
    name: String,
    identity: RelId,
    objects: Vec<String>,
    /// rel[state-1][a_idx * n + b_idx]
    rel: Vec<Vec<RelId>>,
}

impl LassoPath {
    pub fn new(k: usize, loop_start: Option<usize>) -> LassoPath {
        if let Some(l) = loop_start {
            assert!(1 <= l && l <= k, "loop start out of range");
        }
        LassoPath {
            k,
            loop_start,
            aspects: Vec::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn loop_start(&self) -> Option<usize> {
        self.loop_start
    }

    pub fn add_aspect(&mut self, name: &str, identity: RelId, objects: Vec<String>) {
        let n = objects.len();
        self.aspects.push(AspectPath {
            name: name.to_string(),
            identity,
            objects,
            rel: vec![vec![0; n * n]; self.k],
        });
    }

    pub fn set(&mut self, aspect: &str, state: usize, a: &str, b: &str, rel: RelId) {
        let ap = self
            .aspects
            .iter_mut()
            .find(|ap| ap.name == aspect)
            .expect("unknown aspect");
        let n = ap.objects.len();
        let ia = ap.objects.iter().position(|o| o == a).expect("unknown object");
        let ib = ap.objects.iter().position(|o| o == b).expect("unknown object");
        ap.rel[state - 1][ia * n + ib] = rel;
    }

    /// Relation at 1-based `state`; the diagonal is the identity.
    pub fn relation(&self, aspect: &str, a: &str, b: &str, state: usize) -> Option<RelId> {
        let ap = self.aspects.iter().find(|ap| ap.name == aspect)?;
        if a == b {
            return Some(ap.identity);
        }
        let n = ap.objects.len();
        let ia = ap.objects.iter().position(|o| o == a)?;
        let ib = ap.objects.iter().position(|o| o == b)?;
        Some(ap.rel[state - 1][ia * n + ib])
    }

    /// The state index following `i` along the path, if any.
    pub fn successor(&self, i: usize) -> Option<usize> {
        if i < self.k {
            Some(i + 1)
        } else {
            self.loop_start
        }
    }
}

// ---- pretty printing ----

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(self, f, 0)
    }
}

/// Binding strength used to minimize parentheses: higher binds tighter.
fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Forall { .. } | Formula::Exists { .. } => 0,
        Formula::Equiv(..) => 1,
        Formula::Implies(..) => 2,
        Formula::Until(..) => 3,
        Formula::Or(_) => 4,
        Formula::And(_) => 5,
        Formula::Not(_)
        | Formula::Next(_)
        | Formula::Eventually(_)
        | Formula::Always(_) => 6,
        _ => 7,
    }
}

fn write_child(
    child: &Formula,
    f: &mut fmt::Formatter<'_>,
    min_prec: u8,
) -> fmt::Result {
    if precedence(child) < min_prec {
        write!(f, "(")?;
        write_formula(child, f, 0)?;
        write!(f, ")")
    } else {
        write_formula(child, f, min_prec)
    }
}

fn write_formula(formula: &Formula, f: &mut fmt::Formatter<'_>, _ctx: u8) -> fmt::Result {
    match formula {
        Formula::Atom(a) => {
            let head = format!("{}[{},{}]", a.aspect, a.a, a.b);
            if a.rels.len() == 1 {
                write!(f, "{head} = #{}", a.rels.iter().next().unwrap())
            } else {
                let items: Vec<String> =
                    a.rels.iter().map(|r| format!("#{r}")).collect();
                write!(f, "{head} in {{{}}}", items.join(", "))
            }
        }
        Formula::ObjCmp { equal, a, b } => {
            write!(f, "{a} {} {b}", if *equal { "=" } else { "!=" })
        }
        Formula::True => write!(f, "true"),
        Formula::False => write!(f, "false"),
        Formula::Not(g) => {
            write!(f, "~")?;
            write_child(g, f, 6)
        }
        Formula::And(gs) => {
            for (i, g) in gs.iter().enumerate() {
                if i > 0 {
                    write!(f, " & ")?;
                }
                write_child(g, f, 6)?;
            }
            Ok(())
        }
        Formula::Or(gs) => {
            for (i, g) in gs.iter().enumerate() {
                if i > 0 {
                    write!(f, " | ")?;
                }
                write_child(g, f, 5)?;
            }
            Ok(())
        }
        Formula::Implies(a, b) => {
            write_child(a, f, 3)?;
            write!(f, " -> ")?;
            write_child(b, f, 2)
        }
        Formula::Equiv(a, b) => {
            write_child(a, f, 2)?;
            write!(f, " <-> ")?;
            write_child(b, f, 2)
        }
        Formula::Until(a, b) => {
            write_child(a, f, 4)?;
            write!(f, " U ")?;
            write_child(b, f, 4)
        }
        Formula::Next(g) => {
            write!(f, "X ")?;
            write_child(g, f, 6)
        }
        Formula::Eventually(g) => {
            write!(f, "F ")?;
            write_child(g, f, 6)
        }
        Formula::Always(g) => {
            write!(f, "G ")?;
            write_child(g, f, 6)
        }
        Formula::Forall { var, set, body } => {
            write!(f, "forall {var} in {} . ", set_text(set))?;
            write_formula(body, f, 0)
        }
        Formula::Exists { var, set, body } => {
            write!(f, "exists {var} in {} . ", set_text(set))?;
            write_formula(body, f, 0)
        }
    }
}

fn set_text(set: &ObjectSet) -> String {
    match set {
        ObjectSet::Named(n) => n.clone(),
        ObjectSet::Literal(ms) => format!("{{{}}}", ms.join(", ")),
    }
}

/// Renders a formula using relation names from the vocabulary; inverse of the
/// parser up to whitespace.
pub fn pretty(f: &Formula, vocab: &Vocab) -> String {
    let mut out = String::new();
    pretty_rec(f, vocab, &mut out, 0);
    out
}

fn pretty_child(f: &Formula, vocab: &Vocab, out: &mut String, min_prec: u8) {
    if precedence(f) < min_prec {
        out.push('(');
        pretty_rec(f, vocab, out, 0);
        out.push(')');
    } else {
        pretty_rec(f, vocab, out, min_prec);
    }
}

fn pretty_rec(f: &Formula, vocab: &Vocab, out: &mut String, _ctx: u8) {
    match f {
        Formula::Atom(a) => {
            let cal = vocab.aspect(&a.aspect);
            let name = |r: RelId| -> String {
                cal.map(|c| c.relation_name(r).to_string())
                    .unwrap_or_else(|| format!("#{r}"))
            };
            out.push_str(&format!("{}[{},{}]", a.aspect, a.a, a.b));
            if a.rels.len() == 1 {
                out.push_str(&format!(" = {}", name(a.rels.iter().next().unwrap())));
            } else if a.rels.len() + 1 == a.alphabet as usize
                && a.rels.complement_in(a.alphabet as usize).len() == 1
            {
                let r = a.rels.complement_in(a.alphabet as usize).iter().next().unwrap();
                out.push_str(&format!(" != {}", name(r)));
            } else {
                let items: Vec<String> = a.rels.iter().map(name).collect();
                out.push_str(&format!(" in {{{}}}", items.join(", ")));
            }
        }
        Formula::ObjCmp { equal, a, b } => {
            out.push_str(&format!("{a} {} {b}", if *equal { "=" } else { "!=" }));
        }
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Not(g) => {
            out.push('~');
            pretty_child(g, vocab, out, 6);
        }
        Formula::And(gs) => {
            for (i, g) in gs.iter().enumerate() {
                if i > 0 {
                    out.push_str(" & ");
                }
                pretty_child(g, vocab, out, 6);
            }
        }
        Formula::Or(gs) => {
            for (i, g) in gs.iter().enumerate() {
                if i > 0 {
                    out.push_str(" | ");
                }
                pretty_child(g, vocab, out, 5);
            }
        }
        Formula::Implies(a, b) => {
            pretty_child(a, vocab, out, 3);
            out.push_str(" -> ");
            pretty_child(b, vocab, out, 2);
        }
        Formula::Equiv(a, b) => {
            pretty_child(a, vocab, out, 2);
            out.push_str(" <-> ");
            pretty_child(b, vocab, out, 2);
        }
        Formula::Until(a, b) => {
            pretty_child(a, vocab, out, 4);
            out.push_str(" U ");
            pretty_child(b, vocab, out, 4);
        }
        Formula::Next(g) => {
            out.push_str("X ");
            pretty_child(g, vocab, out, 6);
        }
        Formula::Eventually(g) => {
            out.push_str("F ");
            pretty_child(g, vocab, out, 6);
        }
        Formula::Always(g) => {
            out.push_str("G ");
            pretty_child(g, vocab, out, 6);
        }
        Formula::Forall { var, set, body } => {
            out.push_str(&format!("forall {var} in {} . ", set_text(set)));
            pretty_rec(body, vocab, out, 0);
        }
        Formula::Exists { var, set, body } => {
            out.push_str(&format!("exists {var} in {} . ", set_text(set)));
            pretty_rec(body, vocab, out, 0);
        }
    }
}

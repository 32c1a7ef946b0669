//! Qualitative calculi: relation alphabets, composition and converse tables,
//! and the conceptual neighbourhood relation governing admissible atomic change.
//!
//! Calculi are loaded from a line-oriented text format with sections
//! `ALPHABET` / `IDENTITY` / `CONVERSE` / `COMPOSITION` / `NEIGHBOURHOOD`.
//! Relations omitted from `CONVERSE` are their own converse.  The
//! neighbourhood section lists directed non-reflexive pairs; reflexive pairs
//! are implicit everywhere (a relation may always persist across one step).

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Index of a relation within its calculus alphabet.
pub type RelId = u8;

/// A set of relations of one calculus, as a bitmask over relation ids.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RelSet(pub u32);

impl RelSet {
    pub const EMPTY: RelSet = RelSet(0);

    pub fn singleton(r: RelId) -> Self {
        RelSet(1 << r)
    }

    pub fn full(n: usize) -> Self {
        debug_assert!(n <= 32);
        if n == 32 {
            RelSet(u32::MAX)
        } else {
            RelSet((1u32 << n) - 1)
        }
    }

    pub fn contains(self, r: RelId) -> bool {
        self.0 & (1 << r) != 0
    }

    pub fn insert(&mut self, r: RelId) {
        self.0 |= 1 << r;
    }

    pub fn union(self, other: RelSet) -> RelSet {
        RelSet(self.0 | other.0)
    }

    pub fn intersect(self, other: RelSet) -> RelSet {
        RelSet(self.0 & other.0)
    }

    pub fn complement_in(self, n: usize) -> RelSet {
        RelSet(RelSet::full(n).0 & !self.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: RelSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = RelId> {
        (0..32u8).filter(move |r| self.contains(*r))
    }
}

impl fmt::Debug for RelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RelSet({:b})", self.0)
    }
}

/// One relation of a calculus: its alphabet index and symbolic name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub id: RelId,
    pub name: String,
}

/// A qualitative calculus: alphabet, identity, converse and composition
/// tables, and the conceptual neighbourhood relation.
#[derive(Clone, Debug)]
pub struct Calculus {
    pub name: String,
    relations: Vec<String>,
    rel_index: HashMap<String, RelId>,
    identity: RelId,
    converse: Vec<RelId>,
    /// composition[r][s] = { t | <r,s,t> in CT }
    composition: Vec<Vec<RelSet>>,
    /// neighbourhood[r] = directed non-reflexive neighbours of r
    neighbourhood: Vec<RelSet>,
}

#[derive(Debug, Error)]
pub enum CalculusError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("table law violated: {0}")]
    Validation(LawViolation),
    #[error("unknown built-in calculus '{0}'")]
    UnknownBuiltin(String),
}

/// A violated table law together with a witness.
#[derive(Debug, Clone)]
pub enum LawViolation {
    ConverseInvolution { r: String, via: String, back: String },
    ConverseIdentity { identity: String, converse: String },
    IdentityLaw { r: String, t: String, left_side: bool },
    ConverseComposition { r: String, s: String, t: String },
    NeighbourhoodSymmetry { r: String, s: String },
}

impl fmt::Display for LawViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawViolation::ConverseInvolution { r, via, back } => {
                write!(f, "converse not involutive: {r} -> {via} -> {back}")
            }
            LawViolation::ConverseIdentity { identity, converse } => {
                write!(f, "converse({identity}) = {converse}, expected identity")
            }
            LawViolation::IdentityLaw { r, t, left_side } => {
                if *left_side {
                    write!(f, "identity law: <id,{r},{t}> disagrees with t = r")
                } else {
                    write!(f, "identity law: <{r},id,{t}> disagrees with t = r")
                }
            }
            LawViolation::ConverseComposition { r, s, t } => {
                write!(f, "converse/composition coherence fails at <{r},{s},{t}>")
            }
            LawViolation::NeighbourhoodSymmetry { r, s } => {
                write!(f, "neighbourhood pair <{r},{s}> has no converse pair")
            }
        }
    }
}

impl Calculus {
    /// Assembles a calculus from its raw tables without validating the laws.
    /// `load` and the built-in constructors validate; tests building ad-hoc
    /// calculi go through here.
    pub fn from_tables(
        name: &str,
        relations: Vec<String>,
        identity: RelId,
        converse: Vec<RelId>,
        triples: &[(RelId, RelId, RelId)],
        neighbour_pairs: &[(RelId, RelId)],
    ) -> Calculus {
        let n = relations.len();
        let rel_index = relations
            .iter()
            .enumerate()
            .map(|(i, r)| (r.clone(), i as RelId))
            .collect();
        let mut composition = vec![vec![RelSet::EMPTY; n]; n];
        for &(r, s, t) in triples {
            composition[r as usize][s as usize].insert(t);
        }
        let mut neighbourhood = vec![RelSet::EMPTY; n];
        for &(r, s) in neighbour_pairs {
            if r != s {
                neighbourhood[r as usize].insert(s);
            }
        }
        Calculus {
            name: name.to_string(),
            relations,
            rel_index,
            identity,
            converse,
            composition,
            neighbourhood,
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.relations.len()
    }

    pub fn full_set(&self) -> RelSet {
        RelSet::full(self.alphabet_size())
    }

    pub fn identity(&self) -> RelId {
        self.identity
    }

    pub fn relation_name(&self, r: RelId) -> &str {
        &self.relations[r as usize]
    }

    pub fn relation_id(&self, name: &str) -> Option<RelId> {
        self.rel_index.get(name).copied()
    }

    pub fn relations(&self) -> impl Iterator<Item = Relation> + '_ {
        self.relations.iter().enumerate().map(|(i, n)| Relation {
            id: i as RelId,
            name: n.clone(),
        })
    }

    pub fn converse(&self, r: RelId) -> RelId {
        self.converse[r as usize]
    }

    /// Elementwise image of a relation set under the converse map.
    pub fn converse_of(&self, set: RelSet) -> RelSet {
        let mut out = RelSet::EMPTY;
        for r in set.iter() {
            out.insert(self.converse(r));
        }
        out
    }

    /// { t | exists r in `left`, s in `right` with <r,s,t> in CT }.
    pub fn compose(&self, left: RelSet, right: RelSet) -> RelSet {
        let mut out = RelSet::EMPTY;
        for r in left.iter() {
            for s in right.iter() {
                out = out.union(self.composition[r as usize][s as usize]);
            }
        }
        out
    }

    pub fn composition_contains(&self, r: RelId, s: RelId, t: RelId) -> bool {
        self.composition[r as usize][s as usize].contains(t)
    }

    /// Total number of triples in the composition table.
    pub fn triple_count(&self) -> usize {
        self.composition
            .iter()
            .flat_map(|row| row.iter())
            .map(|cell| cell.len())
            .sum()
    }

    /// Neighbours of `r` including `r` itself (persistence is always legal).
    pub fn neighbours(&self, r: RelId) -> RelSet {
        self.neighbourhood[r as usize].union(RelSet::singleton(r))
    }

    /// Directed non-reflexive neighbourhood pairs, the count the tables are
    /// checked against.
    pub fn neighbour_pair_count(&self) -> usize {
        self.neighbourhood.iter().map(|s| s.len()).sum()
    }

    /// All composition triples, in id order.
    pub fn triples(&self) -> Vec<(RelId, RelId, RelId)> {
        let mut out = Vec::new();
        for r in 0..self.alphabet_size() as RelId {
            for s in 0..self.alphabet_size() as RelId {
                for t in self.composition[r as usize][s as usize].iter() {
                    out.push((r, s, t));
                }
            }
        }
        out
    }

    /// Checks the table laws; an empty report means the calculus is sound.
    pub fn validate(&self) -> Vec<LawViolation> {
        let mut report = Vec::new();
        let n = self.alphabet_size() as RelId;
        for r in 0..n {
            let c = self.converse(r);
            let back = self.converse(c);
            if back != r {
                report.push(LawViolation::ConverseInvolution {
                    r: self.relation_name(r).into(),
                    via: self.relation_name(c).into(),
                    back: self.relation_name(back).into(),
                });
            }
        }
        if self.converse(self.identity) != self.identity {
            report.push(LawViolation::ConverseIdentity {
                identity: self.relation_name(self.identity).into(),
                converse: self.relation_name(self.converse(self.identity)).into(),
            });
        }
        let id = self.identity;
        for r in 0..n {
            for t in 0..n {
                if self.composition_contains(id, r, t) != (t == r) {
                    report.push(LawViolation::IdentityLaw {
                        r: self.relation_name(r).into(),
                        t: self.relation_name(t).into(),
                        left_side: true,
                    });
                }
                if self.composition_contains(r, id, t) != (t == r) {
                    report.push(LawViolation::IdentityLaw {
                        r: self.relation_name(r).into(),
                        t: self.relation_name(t).into(),
                        left_side: false,
                    });
                }
            }
        }
        for r in 0..n {
            for s in 0..n {
                for t in 0..n {
                    let direct = self.composition_contains(r, s, t);
                    let mirrored = self.composition_contains(
                        self.converse(s),
                        self.converse(r),
                        self.converse(t),
                    );
                    if direct != mirrored {
                        report.push(LawViolation::ConverseComposition {
                            r: self.relation_name(r).into(),
                            s: self.relation_name(s).into(),
                            t: self.relation_name(t).into(),
                        });
                    }
                }
            }
        }
        for r in 0..n {
            for s in self.neighbourhood[r as usize].iter() {
                if !self.neighbourhood[s as usize].contains(r) {
                    report.push(LawViolation::NeighbourhoodSymmetry {
                        r: self.relation_name(r).into(),
                        s: self.relation_name(s).into(),
                    });
                }
            }
        }
        report
    }

    /// Parses a calculus description document and validates the table laws.
    pub fn load(source: &str) -> Result<Calculus, CalculusError> {
        let parsed = parse_document(source)?;
        match parsed.validate().into_iter().next() {
            None => Ok(parsed),
            Some(v) => Err(CalculusError::Validation(v)),
        }
    }

    /// Built-in calculi by name: "rcc8", "dir9", "size3".
    pub fn builtin(name: &str) -> Result<Calculus, CalculusError> {
        match name {
            "rcc8" => Calculus::load(RCC8_SOURCE),
            "size3" => Calculus::load(SIZE3_SOURCE),
            "dir9" => Ok(dir9()),
            other => Err(CalculusError::UnknownBuiltin(other.to_string())),
        }
    }

    /// Removes the size-change neighbourhood pairs (equal with the four
    /// proper-part relations) for calculi over rigid objects.
    pub fn with_rigid_objects(mut self) -> Calculus {
        let candidates = ["coveredby", "covers", "inside", "contains"];
        if let Some(eq) = self.relation_id("equal") {
            for cand in candidates {
                if let Some(r) = self.relation_id(cand) {
                    self.neighbourhood[eq as usize].0 &= !(1 << r);
                    self.neighbourhood[r as usize].0 &= !(1 << eq);
                }
            }
        }
        self
    }
}

const RCC8_SOURCE: &str = include_str!("../data/rcc8.cal");
const SIZE3_SOURCE: &str = include_str!("../data/size3.cal");

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Converse,
    Composition,
    Neighbourhood,
}

fn parse_document(source: &str) -> Result<Calculus, CalculusError> {
    let err = |line: usize, message: &str| CalculusError::Parse {
        line,
        message: message.to_string(),
    };
    let mut name = String::new();
    let mut relations: Vec<String> = Vec::new();
    let mut rel_index: HashMap<String, RelId> = HashMap::new();
    let mut identity: Option<RelId> = None;
    let mut converse: Vec<Option<RelId>> = Vec::new();
    let mut triples: Vec<(RelId, RelId, RelId)> = Vec::new();
    let mut neighbour_pairs: Vec<(RelId, RelId)> = Vec::new();
    let mut section = Section::None;

    for (lineno, raw) in source.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lookup = |rel_index: &HashMap<String, RelId>, tok: &str| -> Result<RelId, CalculusError> {
            rel_index
                .get(tok)
                .copied()
                .ok_or_else(|| err(lineno, &format!("unknown relation '{tok}'")))
        };
        if let Some(rest) = line.strip_prefix("CALCULUS") {
            name = rest.trim().to_string();
            section = Section::None;
        } else if let Some(rest) = line.strip_prefix("ALPHABET") {
            for tok in rest.split_whitespace() {
                if rel_index.contains_key(tok) {
                    return Err(err(lineno, &format!("duplicate relation '{tok}'")));
                }
                rel_index.insert(tok.to_string(), relations.len() as RelId);
                relations.push(tok.to_string());
            }
            if relations.is_empty() {
                return Err(err(lineno, "empty alphabet"));
            }
            if relations.len() > 32 {
                return Err(err(lineno, "alphabet larger than 32 relations"));
            }
            converse = vec![None; relations.len()];
            section = Section::None;
        } else if let Some(rest) = line.strip_prefix("IDENTITY") {
            identity = Some(lookup(&rel_index, rest.trim())?);
            section = Section::None;
        } else if line == "CONVERSE" {
            section = Section::Converse;
        } else if line == "COMPOSITION" {
            section = Section::Composition;
        } else if line == "NEIGHBOURHOOD" {
            section = Section::Neighbourhood;
        } else {
            match section {
                Section::None => return Err(err(lineno, "content outside any section")),
                Section::Converse => {
                    let toks: Vec<&str> = line.split_whitespace().collect();
                    if toks.len() != 2 {
                        return Err(err(lineno, "expected 'relation relation'"));
                    }
                    let a = lookup(&rel_index, toks[0])?;
                    let b = lookup(&rel_index, toks[1])?;
                    converse[a as usize] = Some(b);
                    if converse[b as usize].is_none() {
                        converse[b as usize] = Some(a);
                    }
                }
                Section::Composition => {
                    let (head, tail) = line
                        .split_once(':')
                        .ok_or_else(|| err(lineno, "expected 'r s : t...'"))?;
                    let toks: Vec<&str> = head.split_whitespace().collect();
                    if toks.len() != 2 {
                        return Err(err(lineno, "expected two relations before ':'"));
                    }
                    let r = lookup(&rel_index, toks[0])?;
                    let s = lookup(&rel_index, toks[1])?;
                    for tok in tail.split_whitespace() {
                        triples.push((r, s, lookup(&rel_index, tok)?));
                    }
                }
                Section::Neighbourhood => {
                    let toks: Vec<&str> = line.split_whitespace().collect();
                    if toks.len() != 2 {
                        return Err(err(lineno, "expected 'relation relation'"));
                    }
                    let a = lookup(&rel_index, toks[0])?;
                    let b = lookup(&rel_index, toks[1])?;
                    neighbour_pairs.push((a, b));
                }
            }
        }
    }

    if relations.is_empty() {
        return Err(err(0, "missing ALPHABET section"));
    }
    let identity = identity.ok_or_else(|| err(0, "missing IDENTITY section"))?;
    // Unlisted relations are their own converse.
    let converse: Vec<RelId> = converse
        .into_iter()
        .enumerate()
        .map(|(i, c)| c.unwrap_or(i as RelId))
        .collect();
    Ok(Calculus::from_tables(
        &name,
        relations,
        identity,
        converse,
        &triples,
        &neighbour_pairs,
    ))
}

/// Cardinal directions as order-sign pairs (sgn dx, sgn dy), samepoint last.
const DIR_NAMES: [&str; 9] = [
    "north",
    "northeast",
    "east",
    "southeast",
    "south",
    "southwest",
    "west",
    "northwest",
    "samepoint",
];

const DIR_SIGNS: [(i8, i8); 9] = [
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 0),
];

fn dir_of_signs(sx: i8, sy: i8) -> RelId {
    DIR_SIGNS
        .iter()
        .position(|&(x, y)| x == sx && y == sy)
        .unwrap() as RelId
}

/// Possible signs of a + b when sgn(a), sgn(b) are known.
fn sum_signs(a: i8, b: i8) -> Vec<i8> {
    match (a, b) {
        (0, s) | (s, 0) => vec![s],
        (x, y) if x == y => vec![x],
        _ => vec![-1, 0, 1],
    }
}

/// Derives the cardinal-direction composition table from the vector-sum
/// semantics of direction signs, and the neighbourhood from continuous point
/// motion (axis directions border their adjacent quadrants; samepoint borders
/// everything).
pub fn derive_dir_tables() -> (Vec<(RelId, RelId, RelId)>, Vec<(RelId, RelId)>) {
    let mut triples = Vec::new();
    for r in 0..9u8 {
        for s in 0..9u8 {
            let (rx, ry) = DIR_SIGNS[r as usize];
            let (sx, sy) = DIR_SIGNS[s as usize];
            for tx in sum_signs(rx, sx) {
                for ty in sum_signs(ry, sy) {
                    triples.push((r, s, dir_of_signs(tx, ty)));
                }
            }
        }
    }
    let samepoint = dir_of_signs(0, 0);
    let mut pairs = Vec::new();
    for d in 0..8u8 {
        pairs.push((d, samepoint));
        pairs.push((samepoint, d));
        // Wind-rose ring: each direction borders its two ring neighbours.
        let next = (d + 1) % 8;
        pairs.push((d, next));
        pairs.push((next, d));
    }
    (triples, pairs)
}

/// The built-in cardinal-direction calculus.
pub fn dir9() -> Calculus {
    let (triples, pairs) = derive_dir_tables();
    let relations: Vec<String> = DIR_NAMES.iter().map(|s| s.to_string()).collect();
    let converse: Vec<RelId> = DIR_SIGNS
        .iter()
        .map(|&(x, y)| dir_of_signs(-x, -y))
        .collect();
    let cal = Calculus::from_tables(
        "dir9",
        relations,
        dir_of_signs(0, 0),
        converse,
        &triples,
        &pairs,
    );
    debug_assert!(cal.validate().is_empty());
    cal
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rcc8() -> Calculus {
        Calculus::builtin("rcc8").unwrap()
    }

    fn set(cal: &Calculus, names: &[&str]) -> RelSet {
        let mut s = RelSet::EMPTY;
        for n in names {
            s.insert(cal.relation_id(n).unwrap());
        }
        s
    }

    #[test]
    fn rcc8_shape() {
        let cal = rcc8();
        assert_eq!(cal.alphabet_size(), 8);
        assert_eq!(cal.triple_count(), 193);
        assert_eq!(cal.neighbour_pair_count(), 22);
        assert!(cal.validate().is_empty());
    }

    #[test]
    fn size3_shape() {
        let cal = Calculus::builtin("size3").unwrap();
        assert_eq!(cal.alphabet_size(), 3);
        assert_eq!(cal.relation_name(cal.identity()), "samesize");
        assert!(cal.validate().is_empty());
    }

    #[test]
    fn broken_converse_rejected() {
        // inside -> contains present but contains -> inside replaced by a
        // self-loop: involution fails.
        let src = "\
CALCULUS bad
ALPHABET inside contains
IDENTITY inside
CONVERSE
  inside contains
  contains contains
COMPOSITION
NEIGHBOURHOOD
";
        // Identity law will also be unhappy, but involution must be reported.
        let cal = parse_document(src).unwrap();
        let report = cal.validate();
        assert!(report
            .iter()
            .any(|v| matches!(v, LawViolation::ConverseInvolution { .. })));
        assert!(Calculus::load(src).is_err());
    }

    #[test]
    fn compose_rcc8() {
        let cal = rcc8();
        let meet = set(&cal, &["meet"]);
        assert!(cal
            .compose(meet, meet)
            .contains(cal.relation_id("meet").unwrap()));
        let inside = set(&cal, &["inside"]);
        assert!(!cal
            .compose(inside, inside)
            .contains(cal.relation_id("disjoint").unwrap()));
    }

    #[test]
    fn compose_size() {
        let cal = Calculus::builtin("size3").unwrap();
        let lt = set(&cal, &["smaller"]);
        assert_eq!(cal.compose(lt, lt), lt);
    }

    #[test]
    fn compose_monotone() {
        let cal = rcc8();
        let small = set(&cal, &["meet"]);
        let big = set(&cal, &["meet", "overlap"]);
        assert!(cal.compose(small, small).is_subset(cal.compose(big, big)));
    }

    #[test]
    fn converse_rcc8() {
        let cal = rcc8();
        assert_eq!(
            cal.converse_of(set(&cal, &["inside"])),
            set(&cal, &["contains"])
        );
        let sym = set(&cal, &["equal", "meet"]);
        assert_eq!(cal.converse_of(sym), sym);
        // involution on arbitrary sets
        for bits in 0..256u32 {
            let s = RelSet(bits);
            assert_eq!(cal.converse_of(cal.converse_of(s)), s);
        }
    }

    #[test]
    fn converse_dir() {
        let cal = dir9();
        assert_eq!(
            cal.converse_of(set(&cal, &["north"])),
            set(&cal, &["south"])
        );
    }

    #[test]
    fn neighbours_rcc8() {
        let cal = rcc8();
        let disjoint = cal.relation_id("disjoint").unwrap();
        let n = cal.neighbours(disjoint);
        assert!(n.contains(cal.relation_id("meet").unwrap()));
        assert!(!n.contains(cal.relation_id("overlap").unwrap()));
        assert!(n.contains(disjoint), "persistence");
        let equal = cal.relation_id("equal").unwrap();
        for r in ["coveredby", "covers", "inside", "contains"] {
            assert!(cal.neighbours(equal).contains(cal.relation_id(r).unwrap()));
        }
    }

    #[test]
    fn rigid_objects_removes_size_change_pairs() {
        let cal = rcc8().with_rigid_objects();
        let equal = cal.relation_id("equal").unwrap();
        for r in ["coveredby", "covers", "inside", "contains"] {
            assert!(!cal.neighbours(equal).contains(cal.relation_id(r).unwrap()));
        }
        assert_eq!(cal.neighbour_pair_count(), 14);
        assert!(cal.validate().is_empty());
    }

    #[test]
    fn dir_shape() {
        let cal = dir9();
        assert_eq!(cal.alphabet_size(), 9);
        assert!(cal.validate().is_empty());
        // 32 directed non-reflexive neighbourhood pairs: 8 ring edges plus
        // samepoint to each direction, both directions each.
        assert_eq!(cal.neighbour_pair_count(), 32);
        assert!(cal
            .neighbours(cal.relation_id("south").unwrap())
            .contains(cal.relation_id("southwest").unwrap()));
    }

    #[test]
    fn dir_composition_against_small_vector_oracle() {
        let cal = dir9();
        let north = cal.relation_id("north").unwrap();
        let south = cal.relation_id("south").unwrap();
        let same = cal.relation_id("samepoint").unwrap();

        // brute force over integer vectors in {-2..2}^2
        let mut seen = std::collections::HashSet::new();
        let range = -2i32..=2;
        for ux in range.clone() {
            for uy in range.clone() {
                for vx in range.clone() {
                    for vy in range.clone() {
                        let r = dir_of_signs(ux.signum() as i8, uy.signum() as i8);
                        let s = dir_of_signs(vx.signum() as i8, vy.signum() as i8);
                        let t = dir_of_signs(
                            (ux + vx).signum() as i8,
                            (uy + vy).signum() as i8,
                        );
                        seen.insert((r, s, t));
                    }
                }
            }
        }
        for &(r, s, t) in cal.triples().iter() {
            assert!(seen.contains(&(r, s, t)), "triple not realizable");
        }
        for &(r, s, t) in seen.iter() {
            assert!(cal.composition_contains(r, s, t), "realizable triple missing");
        }
        // the two examples, spelled out
        let t_nn: Vec<RelId> = cal
            .compose(RelSet::singleton(north), RelSet::singleton(north))
            .iter()
            .collect();
        assert_eq!(t_nn, vec![north]);
        let mut t_ns: Vec<RelId> = cal
            .compose(RelSet::singleton(north), RelSet::singleton(south))
            .iter()
            .collect();
        t_ns.sort_unstable();
        let mut expect = vec![north, south, same];
        expect.sort_unstable();
        assert_eq!(t_ns, expect);
    }
}

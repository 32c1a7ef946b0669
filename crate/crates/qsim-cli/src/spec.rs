//! Problem specification files: a section-oriented text format with the
//! temporal formula grammar embedded in the `temporal` section.
//!
//! A document is a sequence of `section { ... }` blocks; `#` starts a line
//! comment anywhere.  Recognized sections:
//!
//! * `objects` — one named object set per line, `Name = a, b, c`.
//! * `aspects` — one aspect per line, `Q : rcc8` (optionally `... rigid`).
//! * `links` — `Q ~ Dir : relset <-> relset` (or `->`); relation sets are
//!   names of the respective calculi joined with `+`.
//! * `init` — stage-1 atoms, one per line, in the atom syntax (`Q[a,b] = r`).
//! * `temporal` — `;`-separated formulas, possibly spanning lines.
//! * `options` — `key = value` lines (`k_min`, `k_max`, `translation`,
//!   `allow_finite_path`, `max_nodes`, `per_k_budget_ms`, `global_budget_ms`).

use std::collections::BTreeMap;
use std::time::Duration;

use qsim_core::calculus::Calculus;
use qsim_core::engine::{Link, Problem, SimOptions, Translation};
use qsim_core::ltl::{self, Formula, Vocab};

#[derive(Debug, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct SpecError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> SpecError {
    SpecError {
        line,
        message: message.into(),
    }
}

/// Options given in the spec file; command-line flags take precedence, and
/// anything left unset falls back to the engine defaults.
#[derive(Debug, Default)]
pub struct SpecOptions {
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub translation: Option<Translation>,
    pub allow_finite_path: Option<bool>,
    pub max_nodes: Option<u64>,
    pub per_k_budget_ms: Option<u64>,
    pub global_budget_ms: Option<u64>,
}

impl SpecOptions {
    pub fn apply(&self, opts: &mut SimOptions) {
        if let Some(v) = self.k_min {
            opts.k_min = v;
        }
        if let Some(v) = self.k_max {
            opts.k_max = v;
        }
        if let Some(v) = self.translation {
            opts.translation = v;
        }
        if let Some(v) = self.allow_finite_path {
            opts.allow_finite_path = v;
        }
        if let Some(v) = self.max_nodes {
            opts.max_nodes = Some(v);
        }
        if let Some(v) = self.per_k_budget_ms {
            opts.per_k_time_budget = Some(Duration::from_millis(v));
        }
        if let Some(v) = self.global_budget_ms {
            opts.global_time_budget = Some(Duration::from_millis(v));
        }
    }
}

/// A parsed specification document: the problem (with engine-default
/// options) plus the option overrides stated in the file.
pub struct SpecDocument {
    pub problem: Problem,
    pub options: SpecOptions,
}

struct Section {
    name: String,
    /// (1-based file line, raw text) for every line in the block.
    lines: Vec<(usize, String)>,
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn split_sections(text: &str) -> Result<Vec<Section>, SpecError> {
    let mut sections: Vec<Section> = Vec::new();
    let mut open: Option<Section> = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw).trim();
        match &mut open {
            None => {
                if line.is_empty() {
                    continue;
                }
                let Some(name) = line.strip_suffix('{') else {
                    return Err(err(lineno, format!("expected `section {{`, found '{line}'")));
                };
                let name = name.trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                {
                    return Err(err(lineno, format!("bad section name '{name}'")));
                }
                open = Some(Section {
                    name: name.to_string(),
                    lines: Vec::new(),
                });
            }
            Some(section) => {
                if line == "}" {
                    sections.push(open.take().unwrap());
                } else {
                    section.lines.push((lineno, strip_comment(raw).to_string()));
                }
            }
        }
    }
    if let Some(section) = open {
        return Err(err(
            text.lines().count(),
            format!("section '{}' is not closed", section.name),
        ));
    }
    Ok(sections)
}

/// Splits `line` at `sep` into exactly two non-empty trimmed halves.
fn split2<'a>(line: &'a str, sep: &str, lineno: usize) -> Result<(&'a str, &'a str), SpecError> {
    let mut it = line.splitn(2, sep);
    let a = it.next().unwrap_or("").trim();
    let b = it.next().unwrap_or("").trim();
    if b.is_empty() || a.is_empty() {
        return Err(err(lineno, format!("expected '<left> {sep} <right>'")));
    }
    Ok((a, b))
}

fn parse_objects(section: &Section, vocab: &mut Vocab) -> Result<(), SpecError> {
    for (lineno, line) in &section.lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (name, members) = split2(line, "=", *lineno)?;
        let members: Vec<String> = members
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|m| !m.is_empty())
            .map(String::from)
            .collect();
        if members.is_empty() {
            return Err(err(*lineno, format!("object set '{name}' is empty")));
        }
        vocab.add_set(name, members);
    }
    Ok(())
}

fn parse_aspects(section: &Section, vocab: &mut Vocab) -> Result<(), SpecError> {
    for (lineno, line) in &section.lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (name, rest) = split2(line, ":", *lineno)?;
        let mut words = rest.split_whitespace();
        let cal_name = words.next().unwrap();
        let mut cal = Calculus::builtin(cal_name)
            .map_err(|_| err(*lineno, format!("unknown calculus '{cal_name}'")))?;
        match words.next() {
            None => {}
            Some("rigid") => cal = cal.with_rigid_objects(),
            Some(w) => return Err(err(*lineno, format!("unexpected token '{w}'"))),
        }
        if words.next().is_some() {
            return Err(err(*lineno, "trailing tokens after calculus"));
        }
        vocab.add_aspect(name, cal);
    }
    Ok(())
}

/// Parses a relation-set expression `r1 + r2 + ...` against a calculus,
/// returning a bitmask over relation ids.
fn rel_set(expr: &str, cal: &Calculus, lineno: usize) -> Result<u32, SpecError> {
    let mut mask = 0u32;
    for name in expr.split('+').map(str::trim) {
        let id = cal
            .relation_id(name)
            .ok_or_else(|| err(lineno, format!("unknown relation '{name}'")))?;
        mask |= 1 << id;
    }
    Ok(mask)
}

fn parse_links(section: &Section, vocab: &Vocab) -> Result<Vec<Link>, SpecError> {
    // Several lines about the same aspect pair intersect; start from the
    // full product and cut it down with each stated rule.
    let mut allowed: BTreeMap<(String, String), Vec<(u8, u8)>> = BTreeMap::new();
    for (lineno, line) in &section.lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (pair, rule) = split2(line, ":", *lineno)?;
        let (left, right) = split2(pair, "~", *lineno)?;
        let left_cal = vocab
            .aspect(left)
            .ok_or_else(|| err(*lineno, format!("unknown aspect '{left}'")))?;
        let right_cal = vocab
            .aspect(right)
            .ok_or_else(|| err(*lineno, format!("unknown aspect '{right}'")))?;
        let (iff, sep) = if rule.contains("<->") {
            (true, "<->")
        } else if rule.contains("->") {
            (false, "->")
        } else {
            return Err(err(*lineno, "expected '<->' or '->' in link rule"));
        };
        let (lhs, rhs) = split2(rule, sep, *lineno)?;
        let lmask = rel_set(lhs, left_cal, *lineno)?;
        let rmask = rel_set(rhs, right_cal, *lineno)?;
        let pairs = allowed
            .entry((left.to_string(), right.to_string()))
            .or_insert_with(|| {
                let mut all = Vec::new();
                for q in 0..left_cal.alphabet_size() as u8 {
                    for d in 0..right_cal.alphabet_size() as u8 {
                        all.push((q, d));
                    }
                }
                all
            });
        pairs.retain(|&(q, d)| {
            let l = lmask >> q & 1 == 1;
            let r = rmask >> d & 1 == 1;
            if iff {
                l == r
            } else {
                !l || r
            }
        });
    }
    Ok(allowed
        .into_iter()
        .map(|((left, right), pairs)| Link { left, right, pairs })
        .collect())
}

fn parse_formula(text: &str, start_line: usize, vocab: &Vocab) -> Result<Formula, SpecError> {
    ltl::parse(text, vocab).map_err(|e| {
        // e.line is relative to the chunk we handed the parser.
        err(start_line + e.line - 1, e.message)
    })
}

fn parse_init(
    section: &Section,
    vocab: &Vocab,
) -> Result<Vec<qsim_core::ltl::Atom>, SpecError> {
    let mut atoms = Vec::new();
    for (lineno, line) in &section.lines {
        if line.trim().is_empty() {
            continue;
        }
        match parse_formula(line, *lineno, vocab)? {
            Formula::Atom(a) => atoms.push(a),
            _ => return Err(err(*lineno, "init lines must be single atoms")),
        }
    }
    Ok(atoms)
}

fn parse_temporal(section: &Section, vocab: &Vocab) -> Result<Vec<Formula>, SpecError> {
    // Re-join the block so formulas may span lines, then cut at ';'.
    // Line numbers are recovered by counting newlines.
    let mut text = String::new();
    let start = section.lines.first().map(|(n, _)| *n).unwrap_or(1);
    for (_, line) in &section.lines {
        text.push_str(line);
        text.push('\n');
    }
    let mut formulas = Vec::new();
    let mut offset = 0;
    for chunk in text.split(';') {
        let line = start + text[..offset].matches('\n').count();
        offset += chunk.len() + 1;
        if chunk.trim().is_empty() {
            continue;
        }
        formulas.push(parse_formula(chunk, line, vocab)?);
    }
    Ok(formulas)
}

fn parse_options(section: &Section) -> Result<SpecOptions, SpecError> {
    let mut opts = SpecOptions::default();
    for (lineno, line) in &section.lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = split2(line, "=", *lineno)?;
        let bad = |what: &str| err(*lineno, format!("bad {what} value '{value}'"));
        match key {
            "k_min" => opts.k_min = Some(value.parse().map_err(|_| bad("k_min"))?),
            "k_max" => opts.k_max = Some(value.parse().map_err(|_| bad("k_max"))?),
            "translation" => {
                opts.translation = Some(match value {
                    "unravel" => Translation::Unravel,
                    "array" => Translation::Array,
                    _ => return Err(bad("translation")),
                })
            }
            "allow_finite_path" => {
                opts.allow_finite_path =
                    Some(value.parse().map_err(|_| bad("allow_finite_path"))?)
            }
            "max_nodes" => opts.max_nodes = Some(value.parse().map_err(|_| bad("max_nodes"))?),
            "per_k_budget_ms" => {
                opts.per_k_budget_ms = Some(value.parse().map_err(|_| bad("per_k_budget_ms"))?)
            }
            "global_budget_ms" => {
                opts.global_budget_ms =
                    Some(value.parse().map_err(|_| bad("global_budget_ms"))?)
            }
            _ => return Err(err(*lineno, format!("unknown option '{key}'"))),
        }
    }
    Ok(opts)
}

pub fn parse(text: &str) -> Result<SpecDocument, SpecError> {
    let sections = split_sections(text)?;
    for s in &sections {
        if !matches!(
            s.name.as_str(),
            "objects" | "aspects" | "links" | "init" | "temporal" | "options"
        ) {
            let line = s.lines.first().map(|(n, _)| n.saturating_sub(1)).unwrap_or(1);
            return Err(err(line, format!("unknown section '{}'", s.name)));
        }
    }
    let of = |name: &'static str| sections.iter().filter(move |s| s.name == name);

    let mut vocab = Vocab::new();
    for s in of("objects") {
        parse_objects(s, &mut vocab)?;
    }
    for s in of("aspects") {
        parse_aspects(s, &mut vocab)?;
    }
    if vocab.aspects().next().is_none() {
        return Err(err(1, "no aspects declared"));
    }

    let mut links = Vec::new();
    for s in of("links") {
        links.extend(parse_links(s, &vocab)?);
    }
    let mut initial = Vec::new();
    for s in of("init") {
        initial.extend(parse_init(s, &vocab)?);
    }
    let mut formulas = Vec::new();
    for s in of("temporal") {
        formulas.extend(parse_temporal(s, &vocab)?);
    }
    let mut options = SpecOptions::default();
    for s in of("options") {
        // Later sections override earlier ones key by key.
        let o = parse_options(s)?;
        let merge = SpecOptions {
            k_min: o.k_min.or(options.k_min),
            k_max: o.k_max.or(options.k_max),
            translation: o.translation.or(options.translation),
            allow_finite_path: o.allow_finite_path.or(options.allow_finite_path),
            max_nodes: o.max_nodes.or(options.max_nodes),
            per_k_budget_ms: o.per_k_budget_ms.or(options.per_k_budget_ms),
            global_budget_ms: o.global_budget_ms.or(options.global_budget_ms),
        };
        options = merge;
    }

    Ok(SpecDocument {
        problem: Problem {
            vocab,
            links,
            initial,
            formulas,
            options: SimOptions::default(),
        },
        options,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
# sizes of two boxes
objects {
    Boxes = a, b
}
aspects {
    S : size3
}
init {
    S[a,b] = smaller
}
temporal {
    F S[a,b] = larger ;
    G (S[a,b] = samesize -> F S[a,b] = smaller)
}
options {
    k_max = 6
    translation = array
}
";

    #[test]
    fn parses_small_document() {
        let doc = parse(SMALL).unwrap();
        assert_eq!(doc.problem.vocab.objects(), ["a", "b"]);
        assert_eq!(doc.problem.initial.len(), 1);
        assert_eq!(doc.problem.formulas.len(), 2);
        assert_eq!(doc.options.k_max, Some(6));
        assert_eq!(doc.options.translation, Some(Translation::Array));
        assert_eq!(doc.options.k_min, None);

        let mut opts = SimOptions::default();
        doc.options.apply(&mut opts);
        assert_eq!(opts.k_max, 6);
        assert_eq!(opts.translation, Translation::Array);
    }

    #[test]
    fn rigid_marker_shrinks_neighbourhood() {
        let plain = parse("objects {\n O = x, y\n}\naspects {\n Q : rcc8\n}").unwrap();
        let rigid = parse("objects {\n O = x, y\n}\naspects {\n Q : rcc8 rigid\n}").unwrap();
        let count = |doc: &SpecDocument| {
            doc.problem.vocab.aspect("Q").unwrap().neighbour_pair_count()
        };
        assert_eq!(count(&plain), 22);
        assert_eq!(count(&rigid), 14);
    }

    const TWO_SIZES: &str = "objects {\n O = x, y\n}\naspects {\n S : size3\n T : size3\n}\n";

    fn with_links(rules: &str) -> SpecDocument {
        parse(&format!("{TWO_SIZES}links {{\n{rules}\n}}")).unwrap()
    }

    #[test]
    fn link_rules_compile_to_pair_tables() {
        let doc = with_links("S ~ T : samesize <-> samesize");
        assert_eq!(doc.problem.links.len(), 1);
        let link = &doc.problem.links[0];
        assert_eq!((link.left.as_str(), link.right.as_str()), ("S", "T"));
        // 3x3 product minus the four pairs where exactly one side matches.
        assert_eq!(link.pairs.len(), 5);

        let one_way = with_links("S ~ T : samesize -> samesize");
        assert_eq!(one_way.problem.links[0].pairs.len(), 7);
    }

    #[test]
    fn repeated_link_lines_intersect() {
        let doc = with_links("S ~ T : samesize -> samesize\nS ~ T : smaller -> smaller");
        assert_eq!(doc.problem.links[0].pairs.len(), 5);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let missing_close = "objects {\n  O = a, b\n";
        let e = parse(missing_close).err().unwrap();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("not closed"));

        let bad_calculus = "objects {\n  O = a, b\n}\naspects {\n  Q : euclid\n}";
        let e = parse(bad_calculus).err().unwrap();
        assert_eq!(e.line, 5);
        assert!(e.message.contains("euclid"));

        let bad_init =
            "objects {\n  O = a, b\n}\naspects {\n  Q : size3\n}\ninit {\n\n  F Q[a,b] = smaller\n}";
        let e = parse(bad_init).err().unwrap();
        assert_eq!(e.line, 9);
        assert!(e.message.contains("single atoms"));

        let bad_option = "objects {\n  O = a\n}\naspects {\n  Q : size3\n}\noptions {\n  fuel = 3\n}";
        let e = parse(bad_option).err().unwrap();
        assert_eq!(e.line, 8);
        assert!(e.message.contains("fuel"));

        let bad_section = "nav {\n  x = 1\n}";
        let e = parse(bad_section).err().unwrap();
        assert!(e.message.contains("unknown section 'nav'"));
    }

    #[test]
    fn temporal_parse_errors_point_into_the_file() {
        let text = "objects {\n  O = a, b\n}\naspects {\n  Q : size3\n}\n\
                    temporal {\n  F Q[a,b] = smaller ;\n  G (Q[a,b] = smaller\n}";
        let e = parse(text).err().unwrap();
        assert!(e.line >= 7, "line {} should be in the temporal block", e.line);
    }

    #[test]
    fn no_aspects_is_an_error() {
        let e = parse("objects {\n  O = a, b\n}").err().unwrap();
        assert!(e.message.contains("no aspects"));
    }

    #[test]
    fn later_options_sections_override() {
        let doc = parse(
            "objects {\n  O = a\n}\naspects {\n  Q : size3\n}\n\
             options {\n  k_max = 9\n}\noptions {\n  k_min = 2\n  k_max = 4\n}",
        )
        .unwrap();
        assert_eq!(doc.options.k_min, Some(2));
        assert_eq!(doc.options.k_max, Some(4));
    }
}

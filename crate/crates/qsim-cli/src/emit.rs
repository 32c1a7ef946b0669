//! Trace emission in text, JSON, and DOT form.

use std::fmt::Write as _;

use qsim_core::engine::SimulationTrace;
use serde::{Deserialize, Serialize};

/// Versioned on-disk wrapper for a trace.
#[derive(Serialize, Deserialize)]
pub struct TraceDocument {
    pub version: String,
    #[serde(flatten)]
    pub trace: SimulationTrace,
}

pub fn json(trace: &SimulationTrace) -> String {
    let doc = TraceDocument {
        version: "v1".to_string(),
        trace: trace.clone(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("trace serializes");
    out.push('\n');
    out
}

pub fn text(trace: &SimulationTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "k = {}", trace.k);
    match trace.loop_start {
        Some(l) => {
            let _ = writeln!(out, "loop: {}..{}", l, trace.k);
        }
        None => {
            let _ = writeln!(out, "loop: none (finite path)");
        }
    }
    for t in 1..=trace.k {
        let _ = writeln!(out, "state {t}:");
        for aspect in &trace.aspects {
            let _ = writeln!(out, "  {}:", aspect.name);
            let n = aspect.objects.len();
            for a in 0..n {
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    let _ = writeln!(
                        out,
                        "    {} {} {}",
                        aspect.objects[a],
                        aspect.objects[b],
                        aspect.states[t - 1][a * n + b]
                    );
                }
            }
        }
    }
    let s = &trace.stats;
    let _ = writeln!(
        out,
        "stats: nodes={} failures={} elapsed_ms={} unsat_below={}",
        s.nodes, s.failures, s.elapsed_ms, s.unsat_below
    );
    out
}

/// One node per state; the loop-closing edge is drawn bold.
pub fn dot(trace: &SimulationTrace) -> String {
    let mut out = String::new();
    out.push_str("digraph trace {\n  rankdir=LR;\n");
    for t in 1..=trace.k {
        let mut label = format!("state {t}");
        for aspect in &trace.aspects {
            let n = aspect.objects.len();
            for a in 0..n {
                for b in a + 1..n {
                    let _ = write!(
                        label,
                        "\\n{}[{},{}] = {}",
                        aspect.name,
                        aspect.objects[a],
                        aspect.objects[b],
                        aspect.states[t - 1][a * n + b]
                    );
                }
            }
        }
        let _ = writeln!(out, "  s{t} [shape=box, label=\"{label}\"];");
    }
    for t in 1..trace.k {
        let _ = writeln!(out, "  s{} -> s{};", t, t + 1);
    }
    if let Some(l) = trace.loop_start {
        let _ = writeln!(out, "  s{} -> s{} [style=bold, color=red];", trace.k, l);
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use qsim_core::engine::{TraceAspect, TraceStats};

    fn tiny_trace() -> SimulationTrace {
        SimulationTrace {
            k: 2,
            loop_start: Some(1),
            aspects: vec![TraceAspect {
                name: "S".to_string(),
                objects: vec!["a".to_string(), "b".to_string()],
                states: vec![
                    vec!["samesize".into(), "smaller".into(), "larger".into(), "samesize".into()],
                    vec!["samesize".into(); 4],
                ],
            }],
            stats: TraceStats {
                nodes: 3,
                failures: 1,
                elapsed_ms: 7,
                unsat_below: 1,
            },
        }
    }

    #[test]
    fn text_layout() {
        let out = text(&tiny_trace());
        let expected = "\
k = 2
loop: 1..2
state 1:
  S:
    a b smaller
    b a larger
state 2:
  S:
    a b samesize
    b a samesize
stats: nodes=3 failures=1 elapsed_ms=7 unsat_below=1
";
        assert_eq!(out, expected);
    }

    #[test]
    fn text_marks_finite_paths() {
        let mut t = tiny_trace();
        t.loop_start = None;
        assert!(text(&t).contains("loop: none (finite path)"));
    }

    // Byte-exact golden: the JSON schema and formatting are part of the
    // interface, so any change here must be deliberate.
    #[test]
    fn json_is_stable() {
        let out = json(&tiny_trace());
        let expected = r#"{
  "version": "v1",
  "k": 2,
  "loop_start": 1,
  "aspects": [
    {
      "name": "S",
      "objects": [
        "a",
        "b"
      ],
      "states": [
        [
          "samesize",
          "smaller",
          "larger",
          "samesize"
        ],
        [
          "samesize",
          "samesize",
          "samesize",
          "samesize"
        ]
      ]
    }
  ],
  "stats": {
    "nodes": 3,
    "failures": 1,
    "elapsed_ms": 7,
    "unsat_below": 1
  }
}
"#;
        assert_eq!(out, expected);
    }

    #[test]
    fn json_round_trips() {
        let out = json(&tiny_trace());
        let doc: TraceDocument = serde_json::from_str(&out).unwrap();
        assert_eq!(doc.version, "v1");
        assert_eq!(doc.trace, tiny_trace());
    }

    #[test]
    fn dot_shape() {
        let out = dot(&tiny_trace());
        assert!(out.contains("s1 [shape=box"));
        assert!(out.contains("S[a,b] = smaller"));
        assert!(out.contains("s1 -> s2;"));
        assert!(out.contains("s2 -> s1 [style=bold, color=red];"));
    }
}

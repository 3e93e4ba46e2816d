use std::fmt::Write;

use super::{ArgumentId, Qbaf, Role, StrengthMap};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Renders an evaluated framework as a Graphviz digraph.
///
/// Attacks are solid red, supports dashed green; edges leaving a
/// zero-strength argument are drawn black. Node labels carry the strength to
/// two decimals. With `omit_zero_cq`, critical-question arguments of
/// strength 0 are dropped together with their edges.
pub fn to_dot(qbaf: &Qbaf, strengths: &StrengthMap, omit_zero_cq: bool) -> String {
    let hidden = |id: ArgumentId| {
        omit_zero_cq
            && qbaf.argument(id).role == Role::CriticalQuestion
            && strengths.get(id) == 0.0
    };

    let mut out = String::from("digraph {\n");
    if qbaf.is_empty() {
        out.push_str("}\n");
        return out;
    }
    out.push_str("  rankdir=BT;\n  node [shape=box];\n");
    for id in qbaf.ids().filter(|&id| !hidden(id)) {
        let arg = qbaf.argument(id);
        let label = format!("{}\n{:.2}", arg.label, strengths.get(id));
        let shape = match arg.role {
            Role::CriticalQuestion => " shape=ellipse",
            Role::Plain => "",
        };
        let _ = writeln!(out, "  {} [label={}{}];", quote(&arg.key), quote(&label), shape);
    }
    let edges = qbaf
        .attacks()
        .iter()
        .map(|e| (e, "solid", "red"))
        .chain(qbaf.supports().iter().map(|e| (e, "dashed", "darkgreen")));
    for (&(from, to), style, color) in edges {
        if hidden(from) || hidden(to) {
            continue;
        }
        let color = if strengths.get(from) == 0.0 { "black" } else { color };
        let _ = writeln!(
            out,
            "  {} -> {} [style={style}, color={color}];",
            quote(&qbaf.argument(from).key),
            quote(&qbaf.argument(to).key)
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qbaf::{evaluate, SemanticsSpec};

    #[test]
    fn empty_framework() {
        let q = Qbaf::new();
        let s = evaluate(&q, SemanticsSpec::DF_QUAD).unwrap();
        let dot = to_dot(&q, &s, false);
        assert_eq!(dot.split_whitespace().collect::<String>(), "digraph{}");
    }

    #[test]
    fn local_framework_edge_styles() {
        let q = crate::bias::build_local(Some(0.47), Some(0.85)).unwrap();
        let s = evaluate(&q, SemanticsSpec::DF_QUAD).unwrap();
        let dot = to_dot(&q, &s, false);
        assert_eq!(dot.matches("[label=").count(), 4);
        assert_eq!(dot.matches("style=solid").count(), 2);
        assert_eq!(dot.matches("style=dashed").count(), 2);
        assert!(dot.contains("0.38"));
    }

    #[test]
    fn zero_strength_critical_questions_are_elided() {
        let scores = crate::bias::CqScores {
            significance: 0.0,
            objectivity: 0.0,
            diversity: 0.25,
        };
        let q = crate::bias::build_local_cq(Some(0.47), Some(0.85), scores).unwrap();
        let s = evaluate(&q, SemanticsSpec::DF_QUAD).unwrap();
        let kept = to_dot(&q, &s, true);
        assert!(!kept.contains("\"s\""));
        assert!(!kept.contains("\"o\""));
        assert!(kept.contains("\"d\""));
        let full = to_dot(&q, &s, false);
        assert!(full.contains("\"s\" [label="));
        assert!(full.contains("\"s\" -> \"Disadv_g\" [style=solid, color=black]"));
    }

    #[test]
    fn keys_are_escaped() {
        let mut q = Qbaf::new();
        q.add_argument("a\"b", "x\\y", 0.5).unwrap();
        let s = evaluate(&q, SemanticsSpec::DF_QUAD).unwrap();
        assert!(to_dot(&q, &s, false).contains("\"a\\\"b\""));
    }
}

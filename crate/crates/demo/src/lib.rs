//! WebAssembly bindings for the demo page. Each export takes plain numbers
//! or typed arrays and returns a JSON string; the pure functions behind them
//! are tested natively.

use argufair::audit::{explain, render_debate, AuditConfig};
use argufair::bias::{build_global, build_local_cq, CqScores, Significance, ADV, BIAS, DISADV};
use argufair::dataset::{ColumnData, Dataset};
use argufair::qbaf::{evaluate, to_dot, Qbaf, SemanticsSpec, StrengthMap};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Node {
    key: String,
    base: f64,
    strength: f64,
}

#[derive(Serialize)]
struct Edge {
    from: String,
    to: String,
    attack: bool,
}

#[derive(Serialize)]
pub struct LocalView {
    adv: f64,
    disadv: f64,
    bias: f64,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    dot: String,
}

fn graph(q: &Qbaf, s: &StrengthMap) -> (Vec<Node>, Vec<Edge>) {
    let nodes = q
        .ids()
        .map(|id| Node {
            key: q.argument(id).key.clone(),
            base: q.argument(id).base_score,
            strength: s.get(id),
        })
        .collect();
    let key = |id: argufair::qbaf::ArgumentId| q.argument(id).key.clone();
    let edges = q
        .attacks()
        .iter()
        .map(|&(a, b)| Edge { from: key(a), to: key(b), attack: true })
        .chain(q.supports().iter().map(|&(a, b)| Edge { from: key(a), to: key(b), attack: false }))
        .collect();
    (nodes, edges)
}

fn semantics(name: &str) -> Result<SemanticsSpec, String> {
    name.parse().map_err(|e: argufair::Error| e.to_string())
}

/// One neighbourhood's framework under a single global `bias_g`.
pub fn local_view(p_g: f64, p_not_g: f64, cq: CqScores, spec: &str) -> Result<LocalView, String> {
    let spec = semantics(spec)?;
    let local = build_local_cq(Some(p_g), Some(p_not_g), cq).map_err(|e| e.to_string())?;
    let global = build_global(&[("N1".to_string(), local)]).map_err(|e| e.to_string())?;
    let s = evaluate(&global, spec).map_err(|e| e.to_string())?;
    let get = |k: &str| global.strength_of(&s, k).unwrap_or(0.0);
    let (nodes, edges) = graph(&global, &s);
    Ok(LocalView {
        adv: get(&format!("N1/{ADV}")),
        disadv: get(&format!("N1/{DISADV}")),
        bias: get(BIAS),
        nodes,
        edges,
        dot: to_dot(&global, &s, true),
    })
}

/// σ(bias_g) on a `steps × steps` grid; row index is p_not_g, column p_g.
pub fn surface(steps: usize, cq: CqScores, spec: &str) -> Result<Vec<f64>, String> {
    if steps < 2 {
        return Err("need at least 2 steps".into());
    }
    let mut out = Vec::with_capacity(steps * steps);
    let at = |i: usize| i as f64 / (steps - 1) as f64;
    for row in 0..steps {
        for col in 0..steps {
            out.push(local_view(at(col), at(row), cq, spec)?.bias);
        }
    }
    Ok(out)
}

#[derive(Serialize)]
pub struct Exploration {
    neighbourhoods: Vec<ExploredNeighbourhood>,
    bias: f64,
    verdict: String,
    transcript: String,
}

#[derive(Serialize)]
struct ExploredNeighbourhood {
    label: String,
    k: usize,
    members: Vec<usize>,
    adv: f64,
    disadv: f64,
    cq: CqScores,
    p_g: Option<f64>,
    p_not_g: Option<f64>,
    entropy: f64,
}

/// Audits point `reference` of a 2-D population where `groups[i]` is 1 for
/// the protected group and `preds[i]` is the classifier output.
#[allow(clippy::too_many_arguments)]
pub fn explore(
    xs: &[f64],
    ys: &[f64],
    groups: &[u8],
    preds: &[u8],
    reference: usize,
    ks: &[usize],
    alpha: u32,
    spec: &str,
) -> Result<Exploration, String> {
    let n = xs.len();
    if ys.len() != n || groups.len() != n || preds.len() != n {
        return Err("coordinate, group and prediction arrays differ in length".into());
    }
    let group_names = groups.iter().map(|&g| if g == 1 { "g" } else { "other" }.to_string()).collect();
    let ds = Dataset::from_columns(
        vec![
            ("x".into(), ColumnData::Numeric(xs.to_vec())),
            ("y".into(), ColumnData::Numeric(ys.to_vec())),
            ("group".into(), ColumnData::Categorical(group_names)),
        ],
        "group",
        "prediction",
        preds.to_vec(),
    )
    .map_err(|e| e.to_string())?;
    let cfg = AuditConfig {
        protected_value: Some("g".into()),
        k: ks.to_vec(),
        alpha: Significance::Threshold(alpha.max(1)),
        semantics: semantics(spec)?,
        ..Default::default()
    };
    let a = explain(&ds, &cfg, reference).map_err(|e| e.to_string())?;
    let dist = argufair::neighbourhood::Distance::ignoring_protected(&ds, cfg.metric);
    let members = argufair::neighbourhood::knn_multi(&ds, reference, &cfg.k, &dist).map_err(|e| e.to_string())?;
    let neighbourhoods = a
        .report
        .neighbourhoods
        .iter()
        .zip(members)
        .map(|(e, m)| ExploredNeighbourhood {
            label: e.label.clone(),
            k: e.k.unwrap_or(0),
            members: m.members().to_vec(),
            adv: e.adv,
            disadv: e.disadv,
            cq: e.cq,
            p_g: e.stats.success_prob_g,
            p_not_g: e.stats.success_prob_not_g,
            entropy: e.stats.entropy,
        })
        .collect();
    Ok(Exploration {
        neighbourhoods,
        bias: a.report.bias_strength,
        verdict: a.report.verdict.to_string(),
        transcript: render_debate(&a.qbaf, &a.strengths, a.report.verdict),
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = localView)]
pub fn local_view_js(p_g: f64, p_not_g: f64, s: f64, o: f64, d: f64, spec: &str) -> Result<String, JsValue> {
    let cq = CqScores { significance: s, objectivity: o, diversity: d };
    to_js(local_view(p_g, p_not_g, cq, spec))
}

#[wasm_bindgen(js_name = strengthSurface)]
pub fn surface_js(steps: usize, s: f64, o: f64, d: f64, spec: &str) -> Result<Vec<f64>, JsValue> {
    let cq = CqScores { significance: s, objectivity: o, diversity: d };
    surface(steps, cq, spec).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = exploreNeighbourhood)]
#[allow(clippy::too_many_arguments)]
pub fn explore_js(
    xs: &[f64],
    ys: &[f64],
    groups: &[u8],
    preds: &[u8],
    reference: usize,
    ks: &[u32],
    alpha: u32,
    spec: &str,
) -> Result<String, JsValue> {
    let ks: Vec<usize> = ks.iter().map(|&k| k as usize).collect();
    to_js(explore(xs, ys, groups, preds, reference, &ks, alpha, spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_view_matches_closed_form() {
        let v = local_view(0.47, 0.85, CqScores::ZERO, "dfquad").unwrap();
        assert!((v.disadv - 0.38).abs() < 1e-12);
        assert_eq!(v.adv, 0.0);
        assert!((v.bias - 0.38).abs() < 1e-12);
        assert_eq!(v.nodes.len(), 8);
        assert_eq!(v.edges.len(), 12);
        assert!(!v.dot.contains("\"N1/s\""));
        assert!(local_view(0.5, 0.5, CqScores::ZERO, "nonsense").is_err());
        assert!(local_view(1.5, 0.5, CqScores::ZERO, "qe").is_err());
    }

    #[test]
    fn surface_is_zero_on_and_above_the_diagonal() {
        let steps = 5;
        let grid = surface(steps, CqScores::ZERO, "qe").unwrap();
        assert_eq!(grid.len(), 25);
        for row in 0..steps {
            for col in 0..steps {
                let v = grid[row * steps + col];
                if row <= col {
                    assert_eq!(v, 0.0);
                } else {
                    assert!(v > 0.0);
                }
            }
        }
        assert!(surface(1, CqScores::ZERO, "qe").is_err());
    }

    #[test]
    fn explorer_flags_a_disadvantaged_point() {
        // Two interleaved groups on a line; only the protected group is rejected.
        let n = 40;
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let ys = vec![0.0; n];
        let groups: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let preds: Vec<u8> = groups.iter().map(|&g| 1 - g).collect();
        let e = explore(&xs, &ys, &groups, &preds, 1, &[10, 20], 5, "qe").unwrap();
        assert_eq!(e.verdict, "Biased");
        assert_eq!(e.neighbourhoods.len(), 2);
        assert_eq!(e.neighbourhoods[0].members.len(), 11);
        assert!(e.transcript.contains("Proponent"));
        assert!(explore(&xs, &ys[..3], &groups, &preds, 1, &[10], 5, "qe").is_err());
    }
}

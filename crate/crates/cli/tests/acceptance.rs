//! Acceptance suite: one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use argufair::audit::{audit, explain, AuditConfig};
use argufair::bias::{build_global, build_local, build_local_cq, CqScores, Verdict, ADV, BIAS, DISADV};
use argufair::dataset::{write_dataset, ColumnData, Dataset};
use argufair::neighbourhood::{eps_ball, eps_bias, explicit_convexity, Distance, Metric, Neighbourhood, NeighbourhoodStats};
use argufair::props::{dominance, weakly_dominates, DominanceVerdict, StrengthMultiset};
use argufair::qbaf::{evaluate, Qbaf, SemanticsSpec};
use argufair::synthetic::{surrogate_population, ModelKind, PopulationConfig, SyntheticModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const BIN: &str = env!("CARGO_BIN_EXE_argufair");
const CANONICAL: [SemanticsSpec; 2] = [SemanticsSpec::DF_QUAD, SemanticsSpec::QUADRATIC_ENERGY];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(BIN).args(args).output().map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned()))
}

fn adv_disadv(q: &Qbaf, spec: SemanticsSpec) -> (f64, f64) {
    let s = evaluate(q, spec).unwrap();
    (q.strength_of(&s, ADV).unwrap(), q.strength_of(&s, DISADV).unwrap())
}

/// Probabilities with frequent exact ties and endpoints.
fn prob(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..4) {
        0 => 0.0,
        1 => 1.0,
        2 => rng.random_range(0..=20) as f64 / 20.0,
        _ => rng.random(),
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (code, out) = run(&["check-properties", "--semantics", "all", "--trials", "10000"])?;
    let secs = start.elapsed().as_secs_f64();
    ensure(code == 0, || format!("exit {code}:\n{out}"))?;
    ensure(out.lines().all(|l| !l.starts_with("FAIL")), || out.clone())?;
    ensure(secs < 10.0, || format!("took {secs:.1}s"))?;
    Ok(format!("10000 trials, zero violations of claimed properties, {secs:.2}s"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let (p_g, p_not_g) = (prob(&mut rng), prob(&mut rng));
        let (adv, disadv) = adv_disadv(&build_local(Some(p_g), Some(p_not_g)).unwrap(), SemanticsSpec::DF_QUAD);
        ensure((disadv - (p_not_g - p_g).max(0.0)).abs() <= 1e-12, || format!("Disadv at ({p_g}, {p_not_g}) = {disadv}"))?;
        ensure((adv - (p_g - p_not_g).max(0.0)).abs() <= 1e-12, || format!("Adv at ({p_g}, {p_not_g}) = {adv}"))?;
    }
    // Neighbourhoods drawn as data, so the probabilities are empirical.
    let mut checked = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..80);
        let groups: Vec<String> = (0..n).map(|_| if rng.random_bool(0.5) { "g" } else { "h" }.to_string()).collect();
        let preds: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
        let ds = Dataset::from_columns(vec![("grp".into(), ColumnData::Categorical(groups))], "grp", "p", preds).unwrap();
        let Ok(g) = ds.group_code("g") else { continue };
        let nb = Neighbourhood::explicit(0, (0..n).collect()).unwrap();
        let stats = NeighbourhoodStats::compute(&ds, &nb, g, &[]).unwrap();
        let (_, disadv) = adv_disadv(&build_local(stats.success_prob_g, stats.success_prob_not_g).unwrap(), SemanticsSpec::DF_QUAD);
        if let Some(e) = eps_bias(&ds, &nb, g).unwrap().filter(|&e| e > 0.0) {
            ensure((disadv - e).abs() <= 1e-12, || format!("σ(Disadv) {disadv} vs ε-bias {e}"))?;
            checked += 1;
        }
    }
    Ok(format!("1000 closed-form checks, {checked} positive ε-bias neighbourhoods matched"))
}

fn grid_multisets(max: usize) -> Vec<Vec<f64>> {
    const GRID: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
    fn go(start: usize, left: usize, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        out.push(cur.clone());
        if left > 0 {
            for i in start..GRID.len() {
                cur.push(GRID[i]);
                go(i, left - 1, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(0, max, &mut Vec::new(), &mut out);
    out
}

fn injection_oracle(s: &[f64], t: &[f64]) -> DominanceVerdict {
    fn go(s: &[f64], t: &[f64], used: &mut [bool], less: bool, found: &mut (bool, bool)) {
        let Some((&x, rest)) = t.split_first() else {
            found.0 = true;
            found.1 |= less || s.len() > used.iter().filter(|&&u| u).count();
            return;
        };
        for j in 0..s.len() {
            if !used[j] && x <= s[j] {
                used[j] = true;
                go(s, rest, used, less || x < s[j], found);
                used[j] = false;
            }
        }
    }
    let sorted = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    };
    if sorted(s) == sorted(t) {
        return DominanceVerdict::Balanced;
    }
    let mut found = (false, false);
    go(s, t, &mut vec![false; s.len()], false, &mut found);
    match found {
        (_, true) => DominanceVerdict::StrictlyDominates,
        (true, false) => DominanceVerdict::WeaklyDominates,
        _ => DominanceVerdict::None,
    }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let local = |g: f64, n: f64, spec| adv_disadv(&build_local(Some(g), Some(n)).unwrap(), spec);
    for i in 0..2000 {
        let (g, n) = (prob(&mut rng), prob(&mut rng));
        for spec in CANONICAL {
            let (adv, dis) = local(g, n, spec);
            ensure(adv == 0.0 || dis == 0.0, || format!("one-sided local impact, instance {i}"))?;
            ensure(g != n || (adv, dis) == (0.0, 0.0), || format!("equal rates give no impact, instance {i}"))?;
        }
        let (adv, dis) = local(g, n, SemanticsSpec::QUADRATIC_ENERGY);
        ensure(!(n > g) || dis > 0.0, || format!("lower group rate gives disadvantage, instance {i}"))?;
        ensure(!(n < g) || adv > 0.0, || format!("higher group rate gives advantage, instance {i}"))?;
    }
    for i in 0..2000 {
        let (g1, n1, g2, n2) = (prob(&mut rng), prob(&mut rng), prob(&mut rng), prob(&mut rng));
        for spec in CANONICAL {
            let (a1, d1) = local(g1, n1, spec);
            let (a2, d2) = local(g2, n2, spec);
            ensure(!(g1 == g2 && n1 == n2) || (a1, d1) == (a2, d2), || format!("equal inputs give equal strengths, instance {i}"))?;
            ensure(!(n1 >= n2 && g1 <= g2) || (a1 <= a2 && d1 >= d2), || format!("weakly worse off, instance {i}"))?;
            ensure(!(n1 <= n2 && g1 >= g2) || (a1 >= a2 && d1 <= d2), || format!("weakly better off, instance {i}"))?;
            if spec == SemanticsSpec::QUADRATIC_ENERGY {
                if n1 >= n2 && g1 <= g2 && (n1 > n2 || g1 < g2) {
                    ensure(d1 == 0.0 || d1 > d2, || format!("strictly worse off, instance {i}"))?;
                    ensure(a2 == 0.0 || a1 < a2, || format!("strictly worse off, instance {i}"))?;
                }
                if n1 <= n2 && g1 >= g2 && (n1 < n2 || g1 > g2) {
                    ensure(a1 == 0.0 || a1 > a2, || format!("strictly better off, instance {i}"))?;
                    ensure(d2 == 0.0 || d1 < d2, || format!("strictly better off, instance {i}"))?;
                }
            }
        }
    }
    for i in 0..2000 {
        let (p, q) = (prob(&mut rng), prob(&mut rng));
        let cq = CqScores {
            significance: prob(&mut rng),
            objectivity: f64::from(u8::from(rng.random_bool(0.3))),
            diversity: prob(&mut rng),
        };
        for spec in CANONICAL {
            let fwd = adv_disadv(&build_local_cq(Some(p), Some(q), cq).unwrap(), spec);
            let rev = adv_disadv(&build_local_cq(Some(q), Some(p), cq).unwrap(), spec);
            ensure(fwd == (rev.1, rev.0), || format!("swapped groups, instance {i}"))?;
        }
    }
    for i in 0..2000 {
        let m = rng.random_range(1..6);
        let locals: Vec<(String, Qbaf)> = (0..m)
            .map(|j| (format!("N{}", j + 1), build_local_cq(Some(prob(&mut rng)), Some(prob(&mut rng)), CqScores::ZERO).unwrap()))
            .collect();
        let global = build_global(&locals).unwrap();
        for spec in CANONICAL {
            let s = evaluate(&global, spec).unwrap();
            let pick = |key: &str| -> Vec<f64> {
                (1..=m)
                    .map(|j| global.strength_of(&s, &format!("N{j}/{key}")).unwrap())
                    .filter(|&v| v > 0.0)
                    .collect()
            };
            let (sd, sa) = (pick(DISADV), pick(ADV));
            let bias = global.strength_of(&s, BIAS).unwrap();
            ensure(!weakly_dominates(&sa, &sd) || bias == 0.0, || format!("advantage dominates but bias is positive, instance {i}"))?;
            ensure(!weakly_dominates(&sd, &sa) || bias >= 0.0, || format!("disadvantage dominates but bias is negative, instance {i}"))?;
        }
    }
    let all = grid_multisets(4);
    for s in &all {
        for t in &all {
            let got = dominance(&StrengthMultiset::new(s.clone()), &StrengthMultiset::new(t.clone()));
            ensure(got == injection_oracle(s, t), || format!("dominance {s:?} vs {t:?}: {got:?}"))?;
        }
    }
    Ok(format!("local impact, relative impact, equity and global direction on 2000 instances each; dominance agrees on {} pairs", all.len() * all.len()))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..500 {
        let n = rng.random_range(5..80);
        let mut xs: Vec<f64> = (0..n).map(|_| rng.random_range(0..=10) as f64).collect();
        let mut ys: Vec<f64> = (0..n).map(|_| rng.random_range(0..=10) as f64).collect();
        xs.extend([0.0, 10.0]);
        ys.extend([0.0, 10.0]);
        let rows = xs.len();
        let ds = Dataset::from_columns(
            vec![
                ("x".into(), ColumnData::Numeric(xs)),
                ("y".into(), ColumnData::Numeric(ys)),
                ("g".into(), ColumnData::Categorical(vec!["a".into(); rows])),
            ],
            "g",
            "p",
            vec![0; rows],
        )
        .unwrap();
        let metric = if rng.random_bool(0.5) { Metric::Euclidean } else { Metric::Manhattan };
        let dist = Distance::new(&ds, metric, None).unwrap();
        let reference = rng.random_range(0..rows);
        let nb = eps_ball(&ds, reference, rng.random_range(0.0..1.5), &dist).unwrap();
        let sample: Vec<usize> = (0..rows).collect();
        ensure(explicit_convexity(&ds, nb.members(), &sample), || format!("ball {i} ({metric}) failed the explicit test"))?;
    }
    Ok("500 random 2-D ε-balls pass the explicit convexity test".into())
}

fn eval_rows(args: &[&str]) -> Result<Vec<serde_json::Value>, String> {
    let mut full = vec!["eval-synthetic"];
    full.extend_from_slice(args);
    full.push("--json");
    let (code, out) = run(&full)?;
    ensure(code == 0, || format!("exit {code}"))?;
    serde_json::from_str(&out).map_err(|e| format!("{e}: {out}"))
}

fn metric(row: &serde_json::Value, name: &str) -> f64 {
    row["metrics"][name].as_f64().unwrap_or(f64::NAN)
}

fn all_near_one(row: &serde_json::Value) -> bool {
    ["accuracy", "precision", "recall", "f1"].iter().all(|m| (metric(row, m) - 1.0).abs() <= 0.02)
}

fn summary(row: &serde_json::Value) -> String {
    format!(
        "K={} acc {:.2} prec {:.2} rec {:.2} F1 {:.2}",
        row["k"].as_str().unwrap_or("?"),
        metric(row, "accuracy"),
        metric(row, "precision"),
        metric(row, "recall"),
        metric(row, "f1")
    )
}

fn criterion_5() -> Outcome {
    let rows = eval_rows(&["global1", "--k", "50,200", "--rows", "4000"])?;
    let (k50, k200) = (&rows[0], &rows[1]);
    ensure(all_near_one(k200), || summary(k200))?;
    ensure(metric(k50, "accuracy") >= 0.93, || summary(k50))?;
    Ok(format!("{}; {}", summary(k200), summary(k50)))
}

fn criterion_6() -> Outcome {
    let rows = eval_rows(&["global2", "--k", "200", "--rows", "4000"])?;
    ensure(all_near_one(&rows[0]), || summary(&rows[0]))?;
    Ok(summary(&rows[0]))
}

fn criterion_7() -> Outcome {
    let rows = eval_rows(&["local1", "--k", "50,100,200", "--joint", "--eps", "0.01", "--k-flip", "200", "--rows", "4000"])?;
    ensure(metric(&rows[0], "f1") >= 0.98, || summary(&rows[0]))?;
    Ok(summary(&rows[0]))
}

/// 200 rows on a line: 100 in group g with `pos_g` positives, 100 outside with `pos_other`.
fn worked_example(pos_g: usize, pos_other: usize) -> Dataset {
    let groups = (0..200).map(|i| if i < 100 { "g" } else { "h" }.to_string()).collect();
    // Row 0 (in g) is the negatively classified reference.
    let preds = (0..200)
        .map(|i| if i < 100 { u8::from(i >= 100 - pos_g) } else { u8::from(i - 100 < pos_other) })
        .collect();
    Dataset::from_columns(
        vec![
            ("x".into(), ColumnData::Numeric((0..200).map(|i| (i % 100) as f64).collect())),
            ("grp".into(), ColumnData::Categorical(groups)),
        ],
        "grp",
        "p",
        preds,
    )
    .unwrap()
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();
    for spec in CANONICAL {
        let cfg = AuditConfig {
            k: vec![199],
            semantics: spec,
            ..Default::default()
        };
        for (pos_g, pos_other, expected) in [(47, 85, Verdict::Biased), (61, 59, Verdict::NotBiased)] {
            let ds = worked_example(pos_g, pos_other);
            let a = explain(&ds, &cfg, 0).map_err(|e| e.to_string())?;
            let n = &a.report.neighbourhoods[0];
            ensure(n.stats.success_prob_g == Some(pos_g as f64 / 100.0), || format!("{:?}", n.stats))?;
            ensure(n.cq == CqScores::ZERO, || format!("critical questions not silent: {:?}", n.cq))?;
            ensure(a.report.verdict == expected, || {
                format!("{spec} ({pos_g}%, {pos_other}%): {} at {}", a.report.verdict, a.report.bias_strength)
            })?;
            notes.push(format!("{spec} {}={:.4}", a.report.verdict, a.report.bias_strength));
        }
    }
    Ok(notes.join(", "))
}

fn criterion_9() -> Outcome {
    let pop = surrogate_population(&PopulationConfig {
        rows: 30_000,
        seed: 9,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let out = SyntheticModel::new(ModelKind::Global1).apply(&pop, None).map_err(|e| e.to_string())?;
    let cfg = AuditConfig {
        sample: Some(1000),
        seed: 9,
        ..Default::default()
    };
    let start = Instant::now();
    let reports = audit(&out.dataset, &cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(reports.len() == 1000, || format!("{} reports", reports.len()))?;
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("1000 individuals x K in {{50,100,200}} on 30000 rows in {secs:.2}s"))
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let pop = surrogate_population(&PopulationConfig {
        rows: 1500,
        seed: 10,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let out = SyntheticModel::new(ModelKind::Global1).apply(&pop, None).map_err(|e| e.to_string())?;
    let csv = dir.path().join("data.csv");
    write_dataset(&out.dataset, std::fs::File::create(&csv).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let run_once = |name: &str, threads: &str| -> Result<Vec<u8>, String> {
        let path = dir.path().join(name);
        let status = Command::new(BIN)
            .env("ARGUFAIR_THREADS", threads)
            .args(["audit", "--data"])
            .arg(&csv)
            .args(["--protected", "gender", "--prediction", "label", "--sample", "300", "--seed", "42", "--out"])
            .arg(&path)
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || format!("audit exited with {status}"))?;
        std::fs::read(Path::new(&path)).map_err(|e| e.to_string())
    };
    let a = run_once("a.jsonl", "4")?;
    let b = run_once("b.jsonl", "1")?;
    ensure(!a.is_empty(), || "empty output".into())?;
    ensure(a == b, || "outputs differ".into())?;
    let lines = a.iter().filter(|&&c| c == b'\n').count();
    Ok(format!("{lines} reports byte-identical across runs (4 and 1 threads)"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("semantics property suite", criterion_1),
        ("DF-QuAD closed form and ε-bias equivalence", criterion_2),
        ("local/global bias property suites and dominance oracle", criterion_3),
        ("ε-balls are objective", criterion_4),
        ("Global 1 reproduction", criterion_5),
        ("Global 2 reproduction", criterion_6),
        ("Local 1 reproduction", criterion_7),
        ("worked-example verdicts", criterion_8),
        ("performance sanity", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS criterion {:>2}: {name}: {detail}", i + 1),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name}: {why}", i + 1);
            }
            Err(_) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name}: panicked", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

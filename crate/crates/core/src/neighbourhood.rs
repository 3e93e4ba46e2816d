//! Distances, neighbourhood construction and neighbourhood statistics.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, Dataset, Value};
use crate::error::{domain, Error, Result};

/// Numeric cells closer than this (after normalization) count as equal.
pub const EQ_TOL: f64 = 1e-12;
/// Residual below which a point counts as lying on a segment.
pub const COLLINEAR_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
    Hamming,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
            Metric::Hamming => "hamming",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Metric::Euclidean),
            "manhattan" => Ok(Metric::Manhattan),
            "hamming" => Ok(Metric::Hamming),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

/// A metric together with per-column weights.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distance {
    pub metric: Metric,
    weights: Vec<f64>,
    kinds: Vec<ColumnKind>,
}

impl Distance {
    /// `weights`, when given, must hold one nonnegative entry per feature column.
    pub fn new(ds: &Dataset, metric: Metric, weights: Option<&[f64]>) -> Result<Self> {
        let d = ds.n_columns();
        let weights = match weights {
            Some(w) if w.len() != d => {
                return Err(domain(format!("{} weights for {d} columns", w.len())))
            }
            Some(w) => {
                if let Some(x) = w.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
                    return Err(domain(format!("weight {x} is not a nonnegative number")));
                }
                w.to_vec()
            }
            None => vec![1.0; d],
        };
        let kinds = ds.schema().columns.iter().map(|c| c.kind).collect();
        Ok(Self {
            metric,
            weights,
            kinds,
        })
    }

    /// Unit weights except for the protected column, which gets weight 0.
    pub fn ignoring_protected(ds: &Dataset, metric: Metric) -> Self {
        let mut weights = vec![1.0; ds.n_columns()];
        weights[ds.schema().protected] = 0.0;
        Self::new(ds, metric, Some(&weights)).expect("unit weights are valid")
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn between(&self, ds: &Dataset, a: usize, b: usize) -> f64 {
        self.rows(ds.row(a), ds.row(b))
    }

    fn rows(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (j, kind) in self.kinds.iter().enumerate() {
            let w = self.weights[j];
            if w == 0.0 {
                continue;
            }
            let diff = match (kind, self.metric) {
                (ColumnKind::Categorical, _) => (x[j] != y[j]) as u8 as f64,
                (ColumnKind::Numeric, Metric::Hamming) => ((x[j] - y[j]).abs() > EQ_TOL) as u8 as f64,
                (ColumnKind::Numeric, _) => (x[j] - y[j]).abs(),
            };
            acc += match self.metric {
                Metric::Euclidean => w * diff * diff,
                Metric::Manhattan | Metric::Hamming => w * diff,
            };
        }
        match self.metric {
            Metric::Euclidean => acc.sqrt(),
            _ => acc,
        }
    }

    /// Euclidean and Manhattan (weighted, nonnegative weights) are induced by
    /// seminorms on the numeric part, so their balls are convex.
    fn is_seminorm_ball(&self) -> bool {
        matches!(self.metric, Metric::Euclidean | Metric::Manhattan)
    }
}

/// Distance between two rows of `ds`.
pub fn distance(
    ds: &Dataset,
    a: usize,
    b: usize,
    metric: Metric,
    weights: Option<&[f64]>,
) -> Result<f64> {
    Ok(Distance::new(ds, metric, weights)?.between(ds, a, b))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Knn { k: usize, distance: Distance },
    EpsBall { eps: f64, distance: Distance },
    Explicit,
}

/// A set of rows around a reference row.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighbourhood {
    members: Vec<usize>,
    reference: usize,
    provenance: Provenance,
}

impl Neighbourhood {
    pub fn explicit(reference: usize, members: Vec<usize>) -> Result<Self> {
        if !members.contains(&reference) {
            return Err(domain("reference row must be a member of its neighbourhood"));
        }
        let mut sorted = members.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(domain("neighbourhood members must be distinct"));
        }
        Ok(Self {
            members,
            reference,
            provenance: Provenance::Explicit,
        })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// The reference plus its `k` nearest other rows. Ties at the boundary go to
/// the smaller row index.
pub fn knn(ds: &Dataset, reference: usize, k: usize, dist: &Distance) -> Result<Neighbourhood> {
    Ok(knn_multi(ds, reference, &[k], dist)?.pop().expect("one size requested"))
}

/// Nested KNN neighbourhoods for several sizes from a single scan.
pub fn knn_multi(
    ds: &Dataset,
    reference: usize,
    ks: &[usize],
    dist: &Distance,
) -> Result<Vec<Neighbourhood>> {
    let n = ds.len();
    if reference >= n {
        return Err(domain(format!("reference row {reference} out of range")));
    }
    let Some(k_max) = ks.iter().copied().max() else {
        return Ok(Vec::new());
    };
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k >= n) {
        return Err(domain(format!("K = {k} outside 1..={}", n.saturating_sub(1))));
    }
    let mut scored: Vec<(f64, usize)> = (0..n)
        .filter(|&i| i != reference)
        .map(|i| (dist.between(ds, reference, i), i))
        .collect();
    if k_max < scored.len() {
        scored.select_nth_unstable_by(k_max - 1, by_distance_then_index);
        scored.truncate(k_max);
    }
    scored.sort_unstable_by(by_distance_then_index);
    Ok(ks
        .iter()
        .map(|&k| {
            let mut members = Vec::with_capacity(k + 1);
            members.push(reference);
            members.extend(scored[..k].iter().map(|&(_, i)| i));
            Neighbourhood {
                members,
                reference,
                provenance: Provenance::Knn {
                    k,
                    distance: dist.clone(),
                },
            }
        })
        .collect())
}

/// All rows within `eps` of the reference, inclusive.
pub fn eps_ball(ds: &Dataset, reference: usize, eps: f64, dist: &Distance) -> Result<Neighbourhood> {
    if !(eps >= 0.0) {
        return Err(domain(format!("eps = {eps} must be nonnegative")));
    }
    if reference >= ds.len() {
        return Err(domain(format!("reference row {reference} out of range")));
    }
    let mut members = vec![reference];
    members.extend(
        (0..ds.len()).filter(|&i| i != reference && dist.between(ds, reference, i) <= eps + EQ_TOL),
    );
    Ok(Neighbourhood {
        members,
        reference,
        provenance: Provenance::EpsBall {
            eps,
            distance: dist.clone(),
        },
    })
}

/// Equality or inequality constraint on one column.
#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub column: String,
    pub value: Value,
    pub negate: bool,
}

impl Condition {
    pub fn is(column: &str, value: impl Into<Value>) -> Self {
        Self {
            column: column.into(),
            value: value.into(),
            negate: false,
        }
    }

    pub fn is_not(column: &str, value: impl Into<Value>) -> Self {
        Self {
            negate: true,
            ..Self::is(column, value)
        }
    }
}

struct Resolved {
    col: usize,
    raw: Option<f64>,
    negate: bool,
}

fn resolve(ds: &Dataset, conditions: &[Condition]) -> Result<Vec<Resolved>> {
    conditions
        .iter()
        .map(|c| {
            let col = ds
                .schema()
                .column_index(&c.column)
                .ok_or_else(|| Error::Schema(format!("no column `{}`", c.column)))?;
            let column = &ds.schema().columns[col];
            let raw = match (&c.value, column.kind) {
                (Value::Cat(level), ColumnKind::Categorical) => column.level_code(level).map(|x| x as f64),
                (Value::Num(x), ColumnKind::Numeric) => Some(*x),
                _ => {
                    return Err(Error::Schema(format!(
                        "value {:?} does not fit column `{}`",
                        c.value, c.column
                    )))
                }
            };
            Ok(Resolved {
                col,
                raw,
                negate: c.negate,
            })
        })
        .collect()
}

fn matches(ds: &Dataset, row: usize, conds: &[Resolved]) -> bool {
    conds.iter().all(|c| {
        let hit = c.raw.is_some_and(|v| (ds.raw_row(row)[c.col] - v).abs() <= EQ_TOL);
        hit != c.negate
    })
}

fn require_members(n: &Neighbourhood) -> Result<()> {
    if n.is_empty() {
        Err(domain("empty neighbourhood"))
    } else {
        Ok(())
    }
}

/// Relative frequency of rows in `n` satisfying every condition.
pub fn local_prob(ds: &Dataset, n: &Neighbourhood, assignment: &[Condition]) -> Result<f64> {
    require_members(n)?;
    let conds = resolve(ds, assignment)?;
    let hits = n.members().iter().filter(|&&i| matches(ds, i, &conds)).count();
    Ok(hits as f64 / n.len() as f64)
}

/// Fraction of positively classified rows among those satisfying the
/// condition; `None` when no member satisfies it.
pub fn success_prob(ds: &Dataset, n: &Neighbourhood, condition: &[Condition]) -> Result<Option<f64>> {
    require_members(n)?;
    let conds = resolve(ds, condition)?;
    let (mut total, mut positive) = (0usize, 0usize);
    for &i in n.members() {
        if matches(ds, i, &conds) {
            total += 1;
            positive += ds.prediction(i) as usize;
        }
    }
    Ok((total > 0).then(|| positive as f64 / total as f64))
}

#[derive(Clone, Copy, Debug, Default)]
struct GroupCounts {
    in_group: usize,
    in_group_pos: usize,
    out_group: usize,
    out_group_pos: usize,
}

fn group_counts(ds: &Dataset, n: &Neighbourhood, group: usize) -> GroupCounts {
    let mut c = GroupCounts::default();
    for &i in n.members() {
        let pos = ds.prediction(i) as usize;
        if ds.protected_code(i) == group {
            c.in_group += 1;
            c.in_group_pos += pos;
        } else {
            c.out_group += 1;
            c.out_group_pos += pos;
        }
    }
    c
}

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    (term(p) + term(1.0 - p)).clamp(0.0, 1.0)
}

/// Entropy of the protected-group indicator within `n`.
pub fn entropy(ds: &Dataset, n: &Neighbourhood, group: usize) -> Result<f64> {
    require_members(n)?;
    let c = group_counts(ds, n, group);
    Ok(binary_entropy(c.in_group as f64 / n.len() as f64))
}

/// `P(c=1 | X_p != g) - P(c=1 | X_p = g)`; `None` if either group is absent.
/// Positive values mean the neighbourhood is biased against the group.
pub fn eps_bias(ds: &Dataset, n: &Neighbourhood, group: usize) -> Result<Option<f64>> {
    require_members(n)?;
    let c = group_counts(ds, n, group);
    if c.in_group == 0 || c.out_group == 0 {
        return Ok(None);
    }
    Ok(Some(
        c.out_group_pos as f64 / c.out_group as f64 - c.in_group_pos as f64 / c.in_group as f64,
    ))
}

/// Whether `n` is closed under convex combinations within `sample`.
///
/// Balls of seminorm-induced distances are convex, so KNN and ε-ball
/// neighbourhoods under Euclidean or Manhattan distance pass immediately
/// once the KNN set is confirmed to be a full ball. Everything else runs the
/// pairwise betweenness test.
pub fn is_objective(ds: &Dataset, n: &Neighbourhood, sample: &[usize]) -> bool {
    match n.provenance() {
        Provenance::EpsBall { distance, .. } if distance.is_seminorm_ball() => {
            // Members were chosen from the whole dataset, so any sample.
            return true;
        }
        Provenance::Knn { distance, .. } if distance.is_seminorm_ball() => {
            if is_full_ball(ds, n, sample, distance) {
                return true;
            }
        }
        _ => {}
    }
    explicit_convexity(ds, n.members(), sample)
}

fn is_full_ball(ds: &Dataset, n: &Neighbourhood, sample: &[usize], dist: &Distance) -> bool {
    let r = n.members().iter().map(|&i| dist.between(ds, n.reference(), i)).fold(0.0, f64::max);
    let mut member = vec![false; ds.len()];
    for &i in n.members() {
        member[i] = true;
    }
    sample
        .iter()
        .all(|&i| member[i] || dist.between(ds, n.reference(), i) > r)
}

/// Pairwise betweenness test over normalized numeric coordinates; the
/// categorical cells of all three rows must agree.
pub fn explicit_convexity(ds: &Dataset, members: &[usize], sample: &[usize]) -> bool {
    if members.len() <= 1 {
        return true;
    }
    let numeric: Vec<usize> = ds
        .schema()
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind == ColumnKind::Numeric)
        .map(|(j, _)| j)
        .collect();
    let categorical: Vec<usize> = (0..ds.n_columns()).filter(|j| !numeric.contains(j)).collect();
    let signature = |i: usize| -> Vec<u64> {
        categorical.iter().map(|&j| ds.row(i)[j] as u64).collect()
    };

    let mut lo = vec![f64::INFINITY; numeric.len()];
    let mut hi = vec![f64::NEG_INFINITY; numeric.len()];
    let mut groups: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    let mut is_member = vec![false; ds.len()];
    for &i in members {
        is_member[i] = true;
        for (k, &j) in numeric.iter().enumerate() {
            lo[k] = lo[k].min(ds.row(i)[j]);
            hi[k] = hi[k].max(ds.row(i)[j]);
        }
        groups.entry(signature(i)).or_default().push(i);
    }

    let point = |i: usize| -> Vec<f64> { numeric.iter().map(|&j| ds.row(i)[j]).collect() };
    for &x3 in sample {
        if is_member[x3] {
            continue;
        }
        let p3 = point(x3);
        let inside_box = p3
            .iter()
            .enumerate()
            .all(|(k, &v)| v >= lo[k] - COLLINEAR_TOL && v <= hi[k] + COLLINEAR_TOL);
        if !inside_box {
            continue;
        }
        let Some(group) = groups.get(&signature(x3)) else {
            continue;
        };
        let pts: Vec<Vec<f64>> = group.iter().map(|&i| point(i)).collect();
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                if between(&pts[a], &pts[b], &p3) {
                    return false;
                }
            }
        }
    }
    true
}

/// Is `p` = λ·`x1` + (1−λ)·`x2` for some λ ∈ (0,1)?
fn between(x1: &[f64], x2: &[f64], p: &[f64]) -> bool {
    let d: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b).collect();
    let norm2: f64 = d.iter().map(|v| v * v).sum();
    if norm2 <= COLLINEAR_TOL * COLLINEAR_TOL {
        return x1.iter().zip(p).all(|(a, b)| (a - b).abs() <= COLLINEAR_TOL);
    }
    let lambda: f64 = p.iter().zip(x2).zip(&d).map(|((pi, bi), di)| (pi - bi) * di).sum::<f64>() / norm2;
    if lambda <= COLLINEAR_TOL || lambda >= 1.0 - COLLINEAR_TOL {
        return false;
    }
    let residual: f64 = p
        .iter()
        .zip(x2)
        .zip(&d)
        .map(|((pi, bi), di)| {
            let r = pi - (bi + lambda * di);
            r * r
        })
        .sum::<f64>()
        .sqrt();
    residual < COLLINEAR_TOL
}

/// Summary of a neighbourhood relative to a protected group.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeighbourhoodStats {
    pub size: usize,
    pub success_prob_g: Option<f64>,
    pub success_prob_not_g: Option<f64>,
    pub entropy: f64,
    pub objective: bool,
    pub eps_bias: Option<f64>,
}

impl NeighbourhoodStats {
    pub fn compute(ds: &Dataset, n: &Neighbourhood, group: usize, sample: &[usize]) -> Result<Self> {
        require_members(n)?;
        let c = group_counts(ds, n, group);
        let p_g = (c.in_group > 0).then(|| c.in_group_pos as f64 / c.in_group as f64);
        let p_not_g = (c.out_group > 0).then(|| c.out_group_pos as f64 / c.out_group as f64);
        let eps_bias = match (p_g, p_not_g) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        };
        Ok(Self {
            size: n.len(),
            success_prob_g: p_g,
            success_prob_not_g: p_not_g,
            entropy: binary_entropy(c.in_group as f64 / n.len() as f64),
            objective: is_objective(ds, n, sample),
            eps_bias,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ColumnData;

    fn line(xs: &[f64]) -> Dataset {
        let groups = (0..xs.len()).map(|i| if i % 2 == 0 { "g" } else { "h" }.to_string()).collect();
        Dataset::from_columns(
            vec![
                ("x".into(), ColumnData::Numeric(xs.to_vec())),
                ("grp".into(), ColumnData::Categorical(groups)),
            ],
            "grp",
            "pred",
            vec![0; xs.len()],
        )
        .unwrap()
    }

    fn grouped(groups: &[&str], preds: &[u8]) -> Dataset {
        Dataset::from_columns(
            vec![
                ("x".into(), ColumnData::Numeric((0..groups.len()).map(|i| i as f64).collect())),
                ("grp".into(), ColumnData::Categorical(groups.iter().map(|s| s.to_string()).collect())),
            ],
            "grp",
            "pred",
            preds.to_vec(),
        )
        .unwrap()
    }

    fn all(ds: &Dataset) -> Vec<usize> {
        (0..ds.len()).collect()
    }

    #[test]
    fn identical_rows_have_zero_distance() {
        let ds = line(&[0.0, 3.0, 3.0]);
        for m in [Metric::Euclidean, Metric::Manhattan, Metric::Hamming] {
            assert_eq!(distance(&ds, 0, 0, m, None).unwrap(), 0.0);
        }
    }

    #[test]
    fn euclidean_on_normalized_coordinates() {
        let ds = Dataset::from_columns(
            vec![
                ("a".into(), ColumnData::Numeric(vec![0.0, 6.0, 10.0])),
                ("b".into(), ColumnData::Numeric(vec![0.0, 80.0, 100.0])),
                ("g".into(), ColumnData::Categorical(vec!["x".into(); 3])),
            ],
            "g",
            "p",
            vec![0; 3],
        )
        .unwrap();
        let d = distance(&ds, 0, 1, Metric::Euclidean, None).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        let d = distance(&ds, 0, 1, Metric::Manhattan, None).unwrap();
        assert!((d - 1.4).abs() < 1e-12);
    }

    #[test]
    fn hamming_counts_mismatches() {
        let cols = |vals: [&str; 5]| vals.iter().map(|s| vec![s.to_string()]).collect::<Vec<_>>();
        let a = cols(["a", "b", "c", "d", "e"]);
        let b = cols(["a", "x", "c", "y", "e"]);
        let columns = (0..5)
            .map(|j| {
                (
                    format!("c{j}"),
                    ColumnData::Categorical(vec![a[j][0].clone(), b[j][0].clone()]),
                )
            })
            .collect();
        let ds = Dataset::from_columns(columns, "c0", "p", vec![0, 1]).unwrap();
        assert_eq!(distance(&ds, 0, 1, Metric::Hamming, None).unwrap(), 2.0);
        let w = [1.0, 0.5, 1.0, 2.0, 1.0];
        assert_eq!(distance(&ds, 0, 1, Metric::Hamming, Some(&w)).unwrap(), 2.5);
        assert!(distance(&ds, 0, 1, Metric::Hamming, Some(&[1.0, -1.0, 1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn knn_examples() {
        let ds = line(&[0.0, 1.0, 2.0, 10.0]);
        let dist = Distance::ignoring_protected(&ds, Metric::Euclidean);
        assert_eq!(knn(&ds, 1, 2, &dist).unwrap().members(), &[1, 0, 2]);
        let mut every = knn(&ds, 2, 3, &dist).unwrap().members().to_vec();
        every.sort();
        assert_eq!(every, vec![0, 1, 2, 3]);
        assert!(knn(&ds, 0, 4, &dist).is_err());
        assert!(knn(&ds, 0, 0, &dist).is_err());
    }

    #[test]
    fn knn_ties_prefer_smaller_index() {
        let ds = line(&[0.0, -1.0, 1.0]);
        let dist = Distance::ignoring_protected(&ds, Metric::Euclidean);
        assert_eq!(knn(&ds, 0, 1, &dist).unwrap().members(), &[0, 1]);
    }

    #[test]
    fn knn_multi_is_nested() {
        let ds = line(&[0.0, 5.0, 1.0, 4.0, 2.0, 3.0]);
        let dist = Distance::new(&ds, Metric::Manhattan, None).unwrap();
        let ns = knn_multi(&ds, 0, &[1, 3, 5], &dist).unwrap();
        assert_eq!(ns[0].members(), &[0, 2]);
        assert_eq!(ns[1].members(), &[0, 2, 4, 5]);
        assert_eq!(ns[2].len(), 6);
    }

    #[test]
    fn eps_ball_examples() {
        let ds = line(&[0.0, 0.5, 2.0]);
        // Normalized coordinates are x / 2.
        let dist = Distance::ignoring_protected(&ds, Metric::Euclidean);
        assert_eq!(eps_ball(&ds, 0, 0.5, &dist).unwrap().members(), &[0, 1]);
        assert_eq!(eps_ball(&ds, 0, 0.0, &dist).unwrap().members(), &[0]);
        assert_eq!(eps_ball(&ds, 0, 1.0, &dist).unwrap().len(), 3);
        assert!(eps_ball(&ds, 0, -0.1, &dist).is_err());
        let dup = line(&[0.0, 0.0, 2.0]);
        let dist = Distance::ignoring_protected(&dup, Metric::Euclidean);
        assert_eq!(eps_ball(&dup, 0, 0.0, &dist).unwrap().members(), &[0, 1]);
    }

    #[test]
    fn local_probabilities() {
        let ds = grouped(&["g", "g", "h", "h"], &[1, 0, 1, 1]);
        let n = Neighbourhood::explicit(0, vec![0, 1, 2, 3]).unwrap();
        assert_eq!(local_prob(&ds, &n, &[]).unwrap(), 1.0);
        assert_eq!(local_prob(&ds, &n, &[Condition::is("grp", "g")]).unwrap(), 0.5);
        let two = [Condition::is("grp", "h"), Condition::is("x", 3.0)];
        assert_eq!(local_prob(&ds, &n, &two).unwrap(), 0.25);
        assert_eq!(local_prob(&ds, &n, &[Condition::is("grp", "zz")]).unwrap(), 0.0);
        assert!(local_prob(&ds, &n, &[Condition::is("nope", "g")]).is_err());
    }

    #[test]
    fn success_probability_examples() {
        let ds = grouped(&["g", "g", "h", "h"], &[1, 0, 1, 1]);
        let n = Neighbourhood::explicit(0, vec![0, 1, 2, 3]).unwrap();
        assert_eq!(success_prob(&ds, &n, &[Condition::is("grp", "h")]).unwrap(), Some(1.0));
        assert_eq!(success_prob(&ds, &n, &[Condition::is_not("grp", "h")]).unwrap(), Some(0.5));
        assert_eq!(success_prob(&ds, &n, &[Condition::is("grp", "k")]).unwrap(), None);
    }

    #[test]
    fn seventeen_member_group_success() {
        let mut groups = vec!["g"; 17];
        groups.extend(vec!["h"; 20]);
        let mut preds = vec![1u8; 8];
        preds.extend(vec![0u8; 9]);
        preds.extend(vec![1u8; 17]);
        preds.extend(vec![0u8; 3]);
        let ds = grouped(&groups, &preds);
        let n = Neighbourhood::explicit(0, all(&ds)).unwrap();
        let p = success_prob(&ds, &n, &[Condition::is("grp", "g")]).unwrap().unwrap();
        assert!((p - 8.0 / 17.0).abs() < 1e-12);
        assert_eq!(format!("{p:.2}"), "0.47");
        let q = success_prob(&ds, &n, &[Condition::is_not("grp", "g")]).unwrap().unwrap();
        assert_eq!(format!("{q:.2}"), "0.85");
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        let expected = -0.25 * 0.25f64.log2() - 0.75 * 0.75f64.log2();
        assert!((binary_entropy(0.25) - expected).abs() < 1e-12);
        assert!((binary_entropy(0.25) - 0.811_278).abs() < 1e-6);
    }

    #[test]
    fn eps_bias_values() {
        let ds = grouped(&["g", "g", "h", "h"], &[1, 0, 1, 0]);
        let n = Neighbourhood::explicit(0, all(&ds)).unwrap();
        let g = ds.group_code("g").unwrap();
        assert_eq!(eps_bias(&ds, &n, g).unwrap(), Some(0.0));
        let only_h = Neighbourhood::explicit(2, vec![2, 3]).unwrap();
        assert_eq!(eps_bias(&ds, &only_h, g).unwrap(), None);
    }

    #[test]
    fn objectivity_examples() {
        let ds = line(&[0.0, 1.0, 2.0]);
        let single = Neighbourhood::explicit(1, vec![1]).unwrap();
        assert!(is_objective(&ds, &single, &all(&ds)));
        let flat = Dataset::from_columns(
            vec![
                ("x".into(), ColumnData::Numeric(vec![0.0, 1.0, 2.0])),
                ("grp".into(), ColumnData::Categorical(vec!["g".into(); 3])),
            ],
            "grp",
            "pred",
            vec![0; 3],
        )
        .unwrap();
        let gap = Neighbourhood::explicit(0, vec![0, 2]).unwrap();
        assert!(!is_objective(&flat, &gap, &all(&flat)));
        let full = Neighbourhood::explicit(0, vec![0, 1, 2]).unwrap();
        assert!(is_objective(&flat, &full, &all(&flat)));
        // In `ds` the middle row belongs to another group, so it is not between.
        assert!(is_objective(&ds, &gap, &all(&ds)));
    }

    #[test]
    fn knn_with_excluded_tie_falls_back_to_explicit_test() {
        let flat = Dataset::from_columns(
            vec![
                ("x".into(), ColumnData::Numeric(vec![0.5, 0.0, 1.0, 0.75])),
                ("grp".into(), ColumnData::Categorical(vec!["g".into(); 4])),
            ],
            "grp",
            "pred",
            vec![0; 4],
        )
        .unwrap();
        let dist = Distance::new(&flat, Metric::Euclidean, None).unwrap();
        // Row 1 (x=0) and row 2 (x=1) tie at distance 0.5; row 1 wins the tie.
        let n = knn(&flat, 0, 2, &dist).unwrap();
        assert_eq!(n.members(), &[0, 3, 1]);
        // Not a full ball, but still convex along the line.
        assert!(is_objective(&flat, &n, &all(&flat)));
    }
}

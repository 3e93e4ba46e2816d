//! Multiset comparison relations and randomized checkers for the balance and
//! (strict) monotonicity properties of aggregation and influence functions.
//!
//! Dominance is decided on the cores (nonzero entries) of two multisets.
//! Sorting both cores in descending order and pairing them position by
//! position finds a dominating injection whenever one exists.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::qbaf::{AggregationRule, InfluenceRule};

/// A multiset of strengths. Order is irrelevant, duplicates count.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StrengthMultiset(Vec<f64>);

impl StrengthMultiset {
    pub fn new(values: impl Into<Vec<f64>>) -> Self {
        Self(values.into())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn core(&self) -> StrengthMultiset {
        core(self)
    }
}

impl From<Vec<f64>> for StrengthMultiset {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// The sub-multiset of nonzero entries.
pub fn core(s: &StrengthMultiset) -> StrengthMultiset {
    StrengthMultiset(s.0.iter().copied().filter(|&x| x != 0.0).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DominanceVerdict {
    StrictlyDominates,
    WeaklyDominates,
    Balanced,
    None,
}

fn sorted_core_desc(values: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = values.iter().copied().filter(|&x| x != 0.0).collect();
    c.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    c
}

/// Relation of `s` to `t`. `Balanced` takes precedence; it implies weak
/// dominance in both directions.
pub fn dominance(s: &StrengthMultiset, t: &StrengthMultiset) -> DominanceVerdict {
    let cs = sorted_core_desc(&s.0);
    let ct = sorted_core_desc(&t.0);
    if cs == ct {
        return DominanceVerdict::Balanced;
    }
    if cs.len() < ct.len() || cs.iter().zip(&ct).any(|(x, y)| x < y) {
        return DominanceVerdict::None;
    }
    if cs.len() > ct.len() || cs.iter().zip(&ct).any(|(x, y)| y < x) {
        DominanceVerdict::StrictlyDominates
    } else {
        DominanceVerdict::WeaklyDominates
    }
}

pub fn weakly_dominates(s: &[f64], t: &[f64]) -> bool {
    dominance(&StrengthMultiset::new(s), &StrengthMultiset::new(t)) != DominanceVerdict::None
}

pub fn strictly_dominates(s: &[f64], t: &[f64]) -> bool {
    dominance(&StrengthMultiset::new(s), &StrengthMultiset::new(t))
        == DominanceVerdict::StrictlyDominates
}

pub fn balanced(s: &[f64], t: &[f64]) -> bool {
    sorted_core_desc(s) == sorted_core_desc(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyKind {
    Balance,
    Monotonicity,
    StrictMonotonicity,
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub input: String,
    pub observed: String,
}

/// Outcome of one property clause over a batch of randomized trials.
#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    pub property_name: String,
    pub kind: PropertyKind,
    /// Number of generated instances the clause applied to.
    pub trials: usize,
    pub violation_count: usize,
    /// The first few counterexamples; empty iff `violation_count == 0`.
    pub violations: Vec<Counterexample>,
}

impl PropertyReport {
    const MAX_KEPT: usize = 5;

    fn new(name: &str, kind: PropertyKind) -> Self {
        Self {
            property_name: name.to_string(),
            kind,
            trials: 0,
            violation_count: 0,
            violations: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, input: impl FnOnce() -> String, observed: impl FnOnce() -> String) {
        self.trials += 1;
        if !ok {
            self.violation_count += 1;
            if self.violations.len() < Self::MAX_KEPT {
                self.violations.push(Counterexample {
                    input: input(),
                    observed: observed(),
                });
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

/// Slack for the non-strict comparisons; covers summation-order rounding.
const TOL: f64 = 1e-12;

const GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    // Grid draws produce the exact zeros and duplicates that continuous
    // sampling almost never hits.
    fn strength(&mut self) -> f64 {
        if self.rng.random_bool(0.5) {
            GRID[self.rng.random_range(0..GRID.len())]
        } else {
            self.rng.random::<f64>()
        }
    }

    fn multiset(&mut self) -> Vec<f64> {
        let n = self.rng.random_range(0..=6);
        (0..n).map(|_| self.strength()).collect()
    }

    fn shuffle_with_zeros(&mut self, mut v: Vec<f64>) -> Vec<f64> {
        for _ in 0..self.rng.random_range(0..=2) {
            v.push(0.0);
        }
        v.shuffle(&mut self.rng);
        v
    }

    fn balanced_copy(&mut self, s: &[f64]) -> Vec<f64> {
        let c: Vec<f64> = s.iter().copied().filter(|&x| x != 0.0).collect();
        self.shuffle_with_zeros(c)
    }

    /// A multiset that weakly dominates `t`; strictly when `strict` is set.
    fn dominating(&mut self, t: &[f64], strict: bool) -> Vec<f64> {
        let mut out = Vec::new();
        let mut raised = false;
        for &x in t.iter().filter(|&&x| x != 0.0) {
            if x < 1.0 && self.rng.random_bool(0.4) {
                let y = if self.rng.random_bool(0.5) {
                    GRID.iter().copied().find(|&g| g > x).unwrap_or(1.0)
                } else {
                    x + (1.0 - x) * self.rng.random_range(0.01..=1.0)
                };
                raised |= y > x;
                out.push(y);
            } else {
                out.push(x);
            }
        }
        let mut extra = self.rng.random_range(0..=2);
        if strict && !raised && extra == 0 {
            extra = 1;
        }
        for _ in 0..extra {
            let v = self.strength();
            out.push(if v == 0.0 { 0.5 } else { v });
        }
        self.shuffle_with_zeros(out)
    }

    fn base(&mut self) -> f64 {
        match self.rng.random_range(0..4) {
            0 => GRID[self.rng.random_range(0..GRID.len())],
            _ => self.rng.random::<f64>(),
        }
    }

    fn aggregate(&mut self) -> f64 {
        match self.rng.random_range(0..5) {
            0 => [-1.0, -0.5, 0.0, 0.5, 1.0][self.rng.random_range(0..5)],
            _ => self.rng.random_range(-1.0..=1.0),
        }
    }
}

fn fmt_pair(a: &[f64], s: &[f64]) -> String {
    format!("A={a:?} S={s:?}")
}

/// Randomized check of the balance, monotonicity and strict-monotonicity
/// clauses for an aggregation function. Every clause gets its own report;
/// strict clauses are reported, not asserted, because product aggregation
/// is not expected to satisfy them.
pub fn check_agg_properties<R: AggregationRule + ?Sized>(
    agg: &R,
    trials: usize,
    seed: u64,
) -> Result<Vec<PropertyReport>> {
    use PropertyKind::*;
    if trials == 0 {
        return Err(domain("trials must be positive"));
    }
    let mut gen = Gen::new(seed);
    let mut b1 = PropertyReport::new("agg.balance.1", Balance);
    let mut b2 = PropertyReport::new("agg.balance.2", Balance);
    let mut m = [1, 2, 3, 4].map(|i| PropertyReport::new(&format!("agg.monotonicity.{i}"), Monotonicity));
    let mut sm = [1, 2, 3, 4]
        .map(|i| PropertyReport::new(&format!("agg.strict_monotonicity.{i}"), StrictMonotonicity));

    for _ in 0..trials {
        // Balance: A ≅ S gives 0; balanced replacements leave the value unchanged.
        let a = gen.multiset();
        let s = gen.balanced_copy(&a);
        let v = agg.aggregate(&a, &s);
        b1.record(v.abs() <= TOL, || fmt_pair(&a, &s), || format!("agg={v}"));

        let s = gen.multiset();
        let (a2, s2) = (gen.balanced_copy(&a), gen.balanced_copy(&s));
        let (v, w) = (agg.aggregate(&a, &s), agg.aggregate(&a2, &s2));
        b2.record(
            (v - w).abs() <= TOL,
            || format!("{} A'={a2:?} S'={s2:?}", fmt_pair(&a, &s)),
            || format!("{v} vs {w}"),
        );

        // Clause 1: attackers dominate supporters. Constructed pairs plus an
        // unrelated random pair, each checked only where the relation holds.
        let strict = gen.rng.random_bool(0.5);
        let s = gen.multiset();
        let a = gen.dominating(&s, strict);
        let pairs = [(a, s), (gen.multiset(), gen.multiset())];
        for (a, s) in &pairs {
            let v = agg.aggregate(a, s);
            if weakly_dominates(a, s) {
                m[0].record(v <= TOL, || fmt_pair(a, s), || format!("agg={v}"));
            }
            if strictly_dominates(a, s) {
                sm[0].record(v < 0.0, || fmt_pair(a, s), || format!("agg={v}"));
            }
        }

        // Clause 2: supporters dominate attackers.
        let strict = gen.rng.random_bool(0.5);
        let a = gen.multiset();
        let s = gen.dominating(&a, strict);
        let pairs = [(a, s), (gen.multiset(), gen.multiset())];
        for (a, s) in &pairs {
            let v = agg.aggregate(a, s);
            if weakly_dominates(s, a) {
                m[1].record(v >= -TOL, || fmt_pair(a, s), || format!("agg={v}"));
            }
            if strictly_dominates(s, a) {
                sm[1].record(v > 0.0, || fmt_pair(a, s), || format!("agg={v}"));
            }
        }

        // Clause 3: stronger attackers never raise the aggregate.
        let strict = gen.rng.random_bool(0.5);
        let weaker = gen.multiset();
        let stronger = gen.dominating(&weaker, strict);
        let s = gen.multiset();
        let (v, w) = (agg.aggregate(&stronger, &s), agg.aggregate(&weaker, &s));
        let input = || format!("A={stronger:?} A'={weaker:?} S={s:?}");
        if weakly_dominates(&stronger, &weaker) {
            m[2].record(v <= w + TOL, input, || format!("{v} vs {w}"));
        }
        if strictly_dominates(&stronger, &weaker) {
            sm[2].record(v < w, input, || format!("{v} vs {w}"));
        }

        // Clause 4: stronger supporters never lower the aggregate.
        let strict = gen.rng.random_bool(0.5);
        let weaker = gen.multiset();
        let stronger = gen.dominating(&weaker, strict);
        let a = gen.multiset();
        let (v, w) = (agg.aggregate(&a, &stronger), agg.aggregate(&a, &weaker));
        let input = || format!("A={a:?} S={stronger:?} S'={weaker:?}");
        if weakly_dominates(&stronger, &weaker) {
            m[3].record(v >= w - TOL, input, || format!("{v} vs {w}"));
        }
        if strictly_dominates(&stronger, &weaker) {
            sm[3].record(v > w, input, || format!("{v} vs {w}"));
        }
    }

    let mut out = vec![b1, b2];
    out.extend(m);
    out.extend(sm);
    Ok(out)
}

/// Randomized check of influence balance, the four monotonicity clauses, and
/// the strict forms of clauses 1 (for `b != 0`) and 2 (for `b != 1`).
pub fn check_infl_properties<R: InfluenceRule + ?Sized>(
    infl: &R,
    trials: usize,
    seed: u64,
) -> Result<Vec<PropertyReport>> {
    use PropertyKind::*;
    if trials == 0 {
        return Err(domain("trials must be positive"));
    }
    let mut gen = Gen::new(seed);
    let mut bal = PropertyReport::new("infl.balance", Balance);
    let mut m = [1, 2, 3, 4].map(|i| PropertyReport::new(&format!("infl.monotonicity.{i}"), Monotonicity));
    let mut sm = [1, 2]
        .map(|i| PropertyReport::new(&format!("infl.strict_monotonicity.{i}"), StrictMonotonicity));

    for _ in 0..trials {
        let b = gen.base();
        let v = infl.influence(b, 0.0);
        bal.record((v - b).abs() <= TOL, || format!("b={b}"), || format!("infl={v}"));

        let a = gen.aggregate();
        let v = infl.influence(b, a);
        let input = || format!("b={b} a={a}");
        if a < 0.0 {
            m[0].record(v <= b + TOL, input, || format!("infl={v}"));
            if b != 0.0 {
                sm[0].record(v < b, input, || format!("infl={v}"));
            }
        }
        if a > 0.0 {
            m[1].record(v >= b - TOL, input, || format!("infl={v}"));
            if b != 1.0 {
                sm[1].record(v > b, input, || format!("infl={v}"));
            }
        }

        let (b1, b2) = (gen.base(), gen.base());
        if b1 != b2 {
            let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
            let (v, w) = (infl.influence(lo, a), infl.influence(hi, a));
            m[2].record(v <= w + TOL, || format!("b1={lo} b2={hi} a={a}"), || format!("{v} vs {w}"));
        }

        let (a1, a2) = (gen.aggregate(), gen.aggregate());
        if a1 != a2 {
            let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
            let (v, w) = (infl.influence(b, lo), infl.influence(b, hi));
            m[3].record(v <= w + TOL, || format!("b={b} a1={lo} a2={hi}"), || format!("{v} vs {w}"));
        }
    }

    let mut out = vec![bal];
    out.extend(m);
    out.extend(sm);
    Ok(out)
}

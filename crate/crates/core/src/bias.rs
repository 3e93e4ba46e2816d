//! Bias frameworks: the per-neighbourhood local bias-QBAF, its extension
//! with critical-question attackers, and the global framework that pools
//! local conclusions into a single `bias_g` argument.

use std::fmt;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::dataset::Dataset;
use crate::error::{domain, Error, Result};
use crate::neighbourhood::{is_objective, Neighbourhood, NeighbourhoodStats};
use crate::qbaf::{evaluate, Qbaf, Role, SemanticsSpec, StrengthMap};

pub const DISADV: &str = "Disadv_g";
pub const ADV: &str = "Adv_g";
pub const POS_G: &str = "Pos_g";
pub const POS_NOT_G: &str = "Pos_not_g";
pub const CQ_SIGNIFICANCE: &str = "s";
pub const CQ_OBJECTIVITY: &str = "o";
pub const CQ_DIVERSITY: &str = "d";
pub const BIAS: &str = "bias_g";

/// Minimum neighbourhood size below which the significance question attacks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Significance {
    Threshold(u32),
    Infinite,
}

impl Serialize for Significance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Significance::Threshold(n) => s.serialize_u32(*n),
            Significance::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for Significance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u32),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(n) => Ok(Significance::Threshold(n)),
            Raw::Text(t) if t.eq_ignore_ascii_case("infinite") || t == "inf" => Ok(Significance::Infinite),
            Raw::Text(t) => Err(de::Error::custom(format!("bad significance threshold `{t}`"))),
        }
    }
}

/// Parameters of the critical-question base-score functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CqConfig {
    pub alpha: Significance,
    /// Entropy at and above which the diversity question no longer attacks.
    pub beta: f64,
}

impl Default for CqConfig {
    fn default() -> Self {
        Self {
            alpha: Significance::Threshold(30),
            beta: 1.0,
        }
    }
}

impl CqConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha == Significance::Threshold(0) {
            return Err(Error::Config("alpha must be at least 1".into()));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::Config(format!("beta = {} outside (0,1]", self.beta)));
        }
        Ok(())
    }
}

/// Significance base score: `max{α − size, 0} / α`, or `1 / size` when α is infinite.
pub fn f_sig(size: usize, alpha: Significance) -> f64 {
    match alpha {
        Significance::Threshold(a) => {
            let a = a as f64;
            (a - size as f64).max(0.0) / a
        }
        Significance::Infinite => 1.0 / size.max(1) as f64,
    }
}

/// Diversity base score: `1 − min{entropy/β, 1}`.
///
/// The printed form `1 − max{x/β, 1}` is never positive and cannot meet
/// `f(0) = 1`, `f(β) = 0`; the `min` form is the linear function that does.
pub fn f_div(entropy: f64, beta: f64) -> f64 {
    1.0 - (entropy / beta).min(1.0)
}

/// Objectivity indicator: 1 when `n` is objective within `sample`.
pub fn f_obj(ds: &Dataset, n: &Neighbourhood, sample: &[usize]) -> f64 {
    if is_objective(ds, n, sample) {
        1.0
    } else {
        0.0
    }
}

/// Base scores of the three critical-question arguments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CqScores {
    pub significance: f64,
    /// `1 − f_obj`: the question attacks only when objectivity fails.
    pub objectivity: f64,
    pub diversity: f64,
}

impl CqScores {
    pub const ZERO: CqScores = CqScores {
        significance: 0.0,
        objectivity: 0.0,
        diversity: 0.0,
    };

    pub fn from_stats(stats: &NeighbourhoodStats, cfg: &CqConfig) -> Self {
        Self {
            significance: f_sig(stats.size, cfg.alpha),
            objectivity: if stats.objective { 0.0 } else { 1.0 },
            diversity: f_div(stats.entropy, cfg.beta),
        }
    }

    fn entries(&self) -> [(&'static str, f64); 3] {
        [
            (CQ_SIGNIFICANCE, self.significance),
            (CQ_OBJECTIVITY, self.objectivity),
            (CQ_DIVERSITY, self.diversity),
        ]
    }
}

/// The four-argument local bias framework. An undefined success
/// probability (group absent from the neighbourhood) becomes base score 0.
pub fn build_local(p_g: Option<f64>, p_not_g: Option<f64>) -> Result<Qbaf> {
    let mut q = Qbaf::new();
    let disadv = q.add_argument(DISADV, DISADV, 0.0)?;
    let adv = q.add_argument(ADV, ADV, 0.0)?;
    let pos_g = q.add_argument(POS_G, POS_G, p_g.unwrap_or(0.0))?;
    let pos_not_g = q.add_argument(POS_NOT_G, POS_NOT_G, p_not_g.unwrap_or(0.0))?;
    q.add_attack(pos_g, disadv)?;
    q.add_attack(pos_not_g, adv)?;
    q.add_support(pos_g, adv)?;
    q.add_support(pos_not_g, disadv)?;
    Ok(q)
}

pub fn build_local_from_stats(stats: &NeighbourhoodStats) -> Result<Qbaf> {
    build_local(stats.success_prob_g, stats.success_prob_not_g)
}

/// The local framework plus arguments `s`, `o`, `d`, each attacking both
/// `Adv_g` and `Disadv_g`.
pub fn build_local_cq(p_g: Option<f64>, p_not_g: Option<f64>, cq: CqScores) -> Result<Qbaf> {
    let mut q = build_local(p_g, p_not_g)?;
    let adv = q.id(ADV).expect("local framework has Adv_g");
    let disadv = q.id(DISADV).expect("local framework has Disadv_g");
    for (key, score) in cq.entries() {
        let id = q.add_argument_with_role(key, key, score, Role::CriticalQuestion)?;
        q.add_attack(id, adv)?;
        q.add_attack(id, disadv)?;
    }
    Ok(q)
}

/// Joins labelled local frameworks under one `bias_g` argument (base score 0):
/// every `Adv_g` attacks it, every `Disadv_g` supports it. Local keys are
/// namespaced as `<label>/<key>`.
pub fn build_global(locals: &[(String, Qbaf)]) -> Result<Qbaf> {
    if locals.is_empty() {
        return Err(domain("global framework needs at least one neighbourhood"));
    }
    let mut q = Qbaf::new();
    let bias = q.add_argument(BIAS, BIAS, 0.0)?;
    for (label, local) in locals {
        let key = |k: &str| format!("{label}/{k}");
        let mut ids = Vec::with_capacity(local.len());
        for arg in local.arguments() {
            ids.push(q.add_argument_with_role(key(&arg.key), key(&arg.key), arg.base_score, arg.role)?);
        }
        for &(a, b) in local.attacks() {
            q.add_attack(ids[a.index()], ids[b.index()])?;
        }
        for &(a, b) in local.supports() {
            q.add_support(ids[a.index()], ids[b.index()])?;
        }
        let adv = local
            .id(ADV)
            .ok_or_else(|| Error::InvalidQbaf(format!("`{label}` has no {ADV}")))?;
        let disadv = local
            .id(DISADV)
            .ok_or_else(|| Error::InvalidQbaf(format!("`{label}` has no {DISADV}")))?;
        q.add_attack(ids[adv.index()], bias)?;
        q.add_support(ids[disadv.index()], bias)?;
    }
    Ok(q)
}

/// Absolute slack when comparing the global strength to the threshold.
pub const VERDICT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Biased,
    NotBiased,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Biased => "Biased",
            Verdict::NotBiased => "Not Biased",
        })
    }
}

/// Biased iff `strength` exceeds `threshold` by more than [`VERDICT_TOL`].
pub fn verdict(strength: f64, threshold: f64) -> Verdict {
    if strength > threshold + VERDICT_TOL {
        Verdict::Biased
    } else {
        Verdict::NotBiased
    }
}

/// One neighbourhood's contribution to a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeighbourhoodEvidence {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub adv: f64,
    pub disadv: f64,
    pub cq: CqScores,
    pub stats: NeighbourhoodStats,
}

/// Audit outcome for one individual.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasReport {
    pub individual: usize,
    pub protected_value: String,
    pub semantics: SemanticsSpec,
    pub neighbourhoods: Vec<NeighbourhoodEvidence>,
    /// Labels of neighbourhoods whose `Disadv_g` has positive strength.
    pub disadvantage_evidence: Vec<String>,
    /// Labels of neighbourhoods whose `Adv_g` has positive strength.
    pub advantage_evidence: Vec<String>,
    pub bias_strength: f64,
    pub verdict: Verdict,
}

/// A neighbourhood ready to be argued about.
#[derive(Clone, Debug)]
pub struct LabelledStats {
    pub label: String,
    pub k: Option<usize>,
    pub eps: Option<f64>,
    pub stats: NeighbourhoodStats,
}

/// The evaluated global framework behind a report.
#[derive(Clone, Debug)]
pub struct Assessment {
    pub report: BiasReport,
    pub qbaf: Qbaf,
    pub strengths: StrengthMap,
}

/// Builds, evaluates and summarizes the global framework for one individual.
pub fn assess(
    individual: usize,
    protected_value: &str,
    neighbourhoods: Vec<LabelledStats>,
    cq: &CqConfig,
    semantics: SemanticsSpec,
    threshold: f64,
) -> Result<Assessment> {
    let mut locals = Vec::with_capacity(neighbourhoods.len());
    let mut scores = Vec::with_capacity(neighbourhoods.len());
    for n in &neighbourhoods {
        let s = CqScores::from_stats(&n.stats, cq);
        locals.push((
            n.label.clone(),
            build_local_cq(n.stats.success_prob_g, n.stats.success_prob_not_g, s)?,
        ));
        scores.push(s);
    }
    let qbaf = build_global(&locals)?;
    let strengths = evaluate(&qbaf, semantics)?;
    let get = |label: &str, key: &str| {
        qbaf.strength_of(&strengths, &format!("{label}/{key}"))
            .expect("namespaced argument exists")
    };

    let mut evidence = Vec::with_capacity(neighbourhoods.len());
    let (mut s_d, mut s_a) = (Vec::new(), Vec::new());
    for (n, cq) in neighbourhoods.into_iter().zip(scores) {
        let adv = get(&n.label, ADV);
        let disadv = get(&n.label, DISADV);
        if disadv > 0.0 {
            s_d.push(n.label.clone());
        }
        if adv > 0.0 {
            s_a.push(n.label.clone());
        }
        evidence.push(NeighbourhoodEvidence {
            label: n.label,
            k: n.k,
            eps: n.eps,
            adv,
            disadv,
            cq,
            stats: n.stats,
        });
    }
    let bias_strength = qbaf.strength_of(&strengths, BIAS).expect("global has bias_g");
    Ok(Assessment {
        report: BiasReport {
            individual,
            protected_value: protected_value.to_string(),
            semantics,
            neighbourhoods: evidence,
            disadvantage_evidence: s_d,
            advantage_evidence: s_a,
            bias_strength,
            verdict: verdict(bias_strength, threshold),
        },
        qbaf,
        strengths,
    })
}

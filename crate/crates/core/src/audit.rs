//! End-to-end audits: neighbourhoods around each negatively classified
//! individual, one global bias framework per individual, metrics against a
//! known ground truth, and a readable debate transcript.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bias::{
    assess, Assessment, BiasReport, CqConfig, LabelledStats, Verdict, ADV, BIAS, CQ_DIVERSITY,
    CQ_OBJECTIVITY, CQ_SIGNIFICANCE, DISADV, POS_G, POS_NOT_G, Significance,
};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::neighbourhood::{knn_multi, Distance, Metric, NeighbourhoodStats};
use crate::parallel;
use crate::qbaf::{Qbaf, SemanticsSpec, StrengthMap};
use crate::synthetic::{fit_base_model, GroundTruth, ModelKind, SyntheticModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    /// Group to audit against. `None` audits each individual against their
    /// own value of the protected feature.
    pub protected_value: Option<String>,
    pub k: Vec<usize>,
    pub metric: Metric,
    /// One weight per feature column, in file order.
    pub weights: Option<Vec<f64>>,
    /// Keep the protected column out of the distance. Ignored when
    /// `weights` is given.
    pub exclude_protected: bool,
    pub alpha: Significance,
    pub beta: f64,
    pub threshold: f64,
    pub semantics: SemanticsSpec,
    /// Significance level of the locally biased synthetic model.
    pub eps: f64,
    pub seed: u64,
    /// Audit a uniform sample of this many negatively classified rows.
    pub sample: Option<usize>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            protected_value: None,
            k: vec![50, 100, 200],
            metric: Metric::Euclidean,
            weights: None,
            exclude_protected: true,
            alpha: CqConfig::default().alpha,
            beta: CqConfig::default().beta,
            threshold: 0.0,
            semantics: SemanticsSpec::default(),
            eps: 0.01,
            seed: 0,
            sample: None,
        }
    }
}

impl AuditConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k.is_empty() {
            return Err(Error::Config("K list is empty".into()));
        }
        if self.k.windows(2).any(|w| w[0] >= w[1]) || self.k[0] == 0 {
            return Err(Error::Config(format!("K list {:?} must be positive and strictly increasing", self.k)));
        }
        if !self.threshold.is_finite() {
            return Err(Error::Config("threshold must be finite".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config(format!("eps = {} must be positive", self.eps)));
        }
        self.cq().validate()
    }

    pub fn cq(&self) -> CqConfig {
        CqConfig {
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    fn distance(&self, ds: &Dataset) -> Result<Distance> {
        match (&self.weights, self.exclude_protected) {
            (Some(w), _) => Distance::new(ds, self.metric, Some(w)),
            (None, true) => Ok(Distance::ignoring_protected(ds, self.metric)),
            (None, false) => Distance::new(ds, self.metric, None),
        }
    }

    fn check_against(&self, ds: &Dataset) -> Result<()> {
        self.validate()?;
        let k_max = *self.k.last().expect("validated non-empty");
        if k_max + 1 > ds.len() {
            return Err(Error::Config(format!(
                "K = {k_max} needs at least {} rows, dataset has {}",
                k_max + 1,
                ds.len()
            )));
        }
        if let Some(g) = &self.protected_value {
            ds.group_code(g)?;
        }
        Ok(())
    }
}

/// Rows an audit covers: every negatively classified row, or a seeded
/// uniform sample of them, in ascending order.
pub fn audit_population(ds: &Dataset, cfg: &AuditConfig) -> Result<Vec<usize>> {
    let group = cfg.protected_value.as_deref().map(|g| ds.group_code(g)).transpose()?;
    let negatives: Vec<usize> = (0..ds.len())
        .filter(|&i| ds.prediction(i) == 0 && group.is_none_or(|g| ds.protected_code(i) == g))
        .collect();
    Ok(match cfg.sample {
        Some(n) if n < negatives.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut picked: Vec<usize> = index::sample(&mut rng, negatives.len(), n)
                .into_iter()
                .map(|j| negatives[j])
                .collect();
            picked.sort_unstable();
            picked
        }
        _ => negatives,
    })
}

struct Prepared {
    distance: Distance,
    sample: Vec<usize>,
}

fn prepare(ds: &Dataset, cfg: &AuditConfig) -> Result<Prepared> {
    cfg.check_against(ds)?;
    Ok(Prepared {
        distance: cfg.distance(ds)?,
        sample: (0..ds.len()).collect(),
    })
}

fn assess_one(ds: &Dataset, cfg: &AuditConfig, prep: &Prepared, individual: usize) -> Result<Assessment> {
    let group_value = match &cfg.protected_value {
        Some(g) => g.clone(),
        None => ds.protected_value(individual).to_string(),
    };
    let group = ds.group_code(&group_value)?;
    let neighbourhoods = knn_multi(ds, individual, &cfg.k, &prep.distance)?;
    let labelled = neighbourhoods
        .iter()
        .zip(&cfg.k)
        .enumerate()
        .map(|(i, (n, &k))| {
            Ok(LabelledStats {
                label: format!("N{}", i + 1),
                k: Some(k),
                eps: None,
                stats: NeighbourhoodStats::compute(ds, n, group, &prep.sample)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    assess(individual, &group_value, labelled, &cfg.cq(), cfg.semantics, cfg.threshold)
}

/// Audits every row of [`audit_population`]; reports come back in row order.
pub fn audit(ds: &Dataset, cfg: &AuditConfig) -> Result<Vec<BiasReport>> {
    let prep = prepare(ds, cfg)?;
    let rows = audit_population(ds, cfg)?;
    parallel::map(&rows, |i| assess_one(ds, cfg, &prep, i).map(|a| a.report))
        .into_iter()
        .collect()
}

/// Full evaluated framework for one row, whatever its prediction.
pub fn explain(ds: &Dataset, cfg: &AuditConfig, individual: usize) -> Result<Assessment> {
    if individual >= ds.len() {
        return Err(Error::Config(format!(
            "individual {individual} out of range (dataset has {} rows)",
            ds.len()
        )));
    }
    let prep = prepare(ds, cfg)?;
    assess_one(ds, cfg, &prep, individual)
}

/// One JSON object per line.
pub fn write_jsonl<W: Write>(reports: &[BiasReport], mut out: W) -> Result<()> {
    for r in reports {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub seconds: f64,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl MetricsSummary {
    /// Metrics from a confusion matrix; every 0/0 is taken as 0.
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            precision,
            recall,
            f1,
            tp,
            fp,
            tn,
            fn_,
            seconds: 0.0,
        }
    }
}

/// Scores verdicts (Biased = positive) against the truth for the audited rows.
pub fn evaluate_metrics(reports: &[BiasReport], truth: &GroundTruth) -> Result<MetricsSummary> {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for r in reports {
        let actual = *truth.biased_against.get(r.individual).ok_or_else(|| {
            Error::Config(format!(
                "report for row {} but ground truth covers {} rows",
                r.individual,
                truth.len()
            ))
        })?;
        match (r.verdict == Verdict::Biased, actual) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(MetricsSummary::from_counts(tp, fp, tn, fn_))
}

/// Applies a synthetic model to `population`, audits the result and scores
/// verdicts against the model's ground truth. The locally biased model
/// transforms a logistic regression fitted to the population's labels.
pub fn evaluate_model(
    population: &Dataset,
    model: &SyntheticModel,
    cfg: &AuditConfig,
) -> Result<(MetricsSummary, Vec<BiasReport>)> {
    let start = Instant::now();
    let base = match model.kind {
        Some(ModelKind::Local1) => Some(fit_base_model(population)?),
        _ => None,
    };
    let mut model = model.clone();
    model.local1.eps = cfg.eps;
    let out = model.apply(population, base.as_deref())?;
    let reports = audit(&out.dataset, cfg)?;
    let mut metrics = evaluate_metrics(&reports, &out.truth)?;
    metrics.seconds = start.elapsed().as_secs_f64();
    Ok((metrics, reports))
}

struct Turn {
    strength: f64,
    label: String,
    text: String,
}

fn by_strength(a: &Turn, b: &Turn) -> Ordering {
    b.strength
        .partial_cmp(&a.strength)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.label.cmp(&b.label))
}

/// A proponent/opponent exchange over an evaluated global framework.
///
/// The proponent cites each neighbourhood whose disadvantage argument has
/// positive strength; the opponent answers with advantage arguments and
/// critical questions of positive strength. Turns alternate, strongest
/// first, and a closing line states the verdict.
pub fn render_debate(qbaf: &Qbaf, strengths: &StrengthMap, verdict: Verdict) -> String {
    let base = |label: &str, key: &str| {
        qbaf.id(&format!("{label}/{key}"))
            .map_or(0.0, |id| qbaf.argument(id).base_score)
    };
    let mut pro = Vec::new();
    let mut con = Vec::new();
    for id in qbaf.ids() {
        let strength = strengths.get(id);
        if strength <= 0.0 {
            continue;
        }
        let Some((label, key)) = qbaf.argument(id).key.split_once('/') else {
            continue;
        };
        let (p_g, p_not_g) = (base(label, POS_G), base(label, POS_NOT_G));
        let (side, text) = match key {
            DISADV => (
                &mut pro,
                format!(
                    "Proponent: in {label}, the group is positively classified at rate {p_g:.2} \
                     against {p_not_g:.2} for everyone else, so it is disadvantaged (strength {strength:.2})."
                ),
            ),
            ADV => (
                &mut con,
                format!(
                    "Opponent: in {label}, the group is positively classified at rate {p_g:.2} \
                     against {p_not_g:.2} for everyone else, so it is advantaged (strength {strength:.2})."
                ),
            ),
            CQ_SIGNIFICANCE => (
                &mut con,
                format!("Opponent: {label} is a neighbourhood too small to be significant (strength {strength:.2})."),
            ),
            CQ_OBJECTIVITY => (
                &mut con,
                format!("Opponent: {label} is not objective, it skips points lying between its members (strength {strength:.2})."),
            ),
            CQ_DIVERSITY => (
                &mut con,
                format!("Opponent: {label} is not diverse enough in the protected feature (strength {strength:.2})."),
            ),
            _ => continue,
        };
        side.push(Turn {
            strength,
            label: label.to_string(),
            text,
        });
    }
    pro.sort_by(by_strength);
    con.sort_by(by_strength);

    let mut out = String::new();
    if pro.is_empty() {
        out.push_str("Proponent: I have no evidence of bias against the group.\n");
    }
    let mut pro = pro.into_iter();
    let mut con = con.into_iter();
    loop {
        let p = pro.next();
        let c = con.next();
        if p.is_none() && c.is_none() {
            break;
        }
        for t in p.into_iter().chain(c) {
            out.push_str(&t.text);
            out.push('\n');
        }
    }
    let bias = qbaf.id(BIAS).map_or(0.0, |id| strengths.get(id));
    let _ = writeln!(out, "Verdict: {verdict} ({BIAS} = {bias:.4}).");
    out
}

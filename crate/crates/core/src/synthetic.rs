//! Synthetically biased classifiers with known ground truth, a surrogate
//! population to run them on, and a small logistic-regression fitter that
//! supplies the base model for the locally biased variant.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnData, ColumnKind, Dataset};
use crate::error::{Error, Result};
use crate::neighbourhood::{eps_bias, knn, Distance, Metric};
use crate::parallel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Global1,
    Global2,
    Local1,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Global1 => "global1",
            ModelKind::Global2 => "global2",
            ModelKind::Local1 => "local1",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "global1" => Ok(ModelKind::Global1),
            "global2" => Ok(ModelKind::Global2),
            "local1" => Ok(ModelKind::Local1),
            _ => Err(Error::Config(format!("unknown model `{s}` (global1, global2, local1)"))),
        }
    }
}

/// Column names and values the rules refer to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroupNames {
    pub gender: String,
    pub female: String,
    pub race: String,
    pub black: String,
}

impl Default for GroupNames {
    fn default() -> Self {
        Self {
            gender: "gender".into(),
            female: "female".into(),
            race: "race".into(),
            black: "black".into(),
        }
    }
}

/// Settings of the neighbourhood test inside the locally biased model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Local1Params {
    pub eps: f64,
    pub k: usize,
    pub metric: Metric,
    /// Leave the gender column out of the distance.
    pub exclude_protected: bool,
}

impl Default for Local1Params {
    fn default() -> Self {
        Self {
            eps: 0.01,
            k: 200,
            metric: Metric::Euclidean,
            exclude_protected: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SyntheticModel {
    pub kind: Option<ModelKind>,
    #[serde(default)]
    pub names: GroupNames,
    #[serde(default)]
    pub local1: Local1Params,
}

/// Per-row truth: the model's bias rule fired and the row ended up negative.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroundTruth {
    pub biased_against: Vec<bool>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.biased_against.len()
    }

    pub fn is_empty(&self) -> bool {
        self.biased_against.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.biased_against.iter().filter(|&&b| b).count()
    }
}

/// A model applied to a population.
#[derive(Clone, Debug)]
pub struct ModelOutput {
    /// Features with the model's predictions; its protected column is the
    /// attribute the bias is aimed at.
    pub dataset: Dataset,
    pub truth: GroundTruth,
    /// The disadvantaged value of the protected column.
    pub group: String,
}

fn category_column(ds: &Dataset, name: &str) -> Result<usize> {
    let j = ds
        .schema()
        .column_index(name)
        .ok_or_else(|| Error::Schema(format!("column `{name}` missing")))?;
    if ds.schema().columns[j].kind != ColumnKind::Categorical {
        return Err(Error::Schema(format!("column `{name}` must be categorical")));
    }
    Ok(j)
}

fn has_value(ds: &Dataset, col: usize, value: &str) -> Vec<bool> {
    (0..ds.len()).map(|i| ds.category(i, col) == value).collect()
}

/// 0 for every female row, 1 otherwise.
pub fn global1_predict(ds: &Dataset, names: &GroupNames) -> Result<Vec<u8>> {
    let g = category_column(ds, &names.gender)?;
    Ok(has_value(ds, g, &names.female).into_iter().map(|f| u8::from(!f)).collect())
}

/// 0 for every black female row, 1 otherwise.
pub fn global2_predict(ds: &Dataset, names: &GroupNames) -> Result<Vec<u8>> {
    let g = category_column(ds, &names.gender)?;
    let r = category_column(ds, &names.race)?;
    Ok((0..ds.len())
        .map(|i| u8::from(!(ds.category(i, g) == names.female && ds.category(i, r) == names.black)))
        .collect())
}

/// Outcome of the local rule: new predictions and the rows it fired on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Local1Outcome {
    pub predictions: Vec<u8>,
    pub fired: Vec<bool>,
}

/// Forces a female row to 0 when its `k`-nearest neighbourhood shows an
/// ε-bias of at least `eps` against females under the base predictions.
pub fn local1_transform(
    ds: &Dataset,
    base: &[u8],
    params: &Local1Params,
    names: &GroupNames,
) -> Result<Local1Outcome> {
    if !(params.eps > 0.0) {
        return Err(Error::Config(format!("eps = {} must be positive", params.eps)));
    }
    let base_ds = ds.with_predictions(base.to_vec())?.with_protected(&names.gender)?;
    let female = base_ds.group_code(&names.female)?;
    let dist = if params.exclude_protected {
        Distance::ignoring_protected(&base_ds, params.metric)
    } else {
        Distance::new(&base_ds, params.metric, None)?
    };
    let rows: Vec<usize> = (0..base_ds.len()).collect();
    let fired = parallel::map(&rows, |i| -> Result<bool> {
        if base_ds.protected_code(i) != female {
            return Ok(false);
        }
        let n = knn(&base_ds, i, params.k, &dist)?;
        Ok(eps_bias(&base_ds, &n, female)?.is_some_and(|b| b >= params.eps))
    })
    .into_iter()
    .collect::<Result<Vec<bool>>>()?;
    let predictions = base.iter().zip(&fired).map(|(&p, &f)| if f { 0 } else { p }).collect();
    Ok(Local1Outcome { predictions, fired })
}

impl SyntheticModel {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind: Some(kind),
            ..Default::default()
        }
    }

    /// Applies the model to `ds`. The locally biased model needs `base`
    /// predictions to transform.
    pub fn apply(&self, ds: &Dataset, base: Option<&[u8]>) -> Result<ModelOutput> {
        let kind = self.kind.ok_or_else(|| Error::Config("model kind not set".into()))?;
        let n = &self.names;
        let (predictions, fired, protected, group) = match kind {
            ModelKind::Global1 => {
                let p = global1_predict(ds, n)?;
                let fired = p.iter().map(|&x| x == 0).collect();
                (p, fired, &n.gender, &n.female)
            }
            ModelKind::Global2 => {
                let p = global2_predict(ds, n)?;
                let fired = p.iter().map(|&x| x == 0).collect();
                (p, fired, &n.race, &n.black)
            }
            ModelKind::Local1 => {
                let base = base.ok_or_else(|| {
                    Error::Config("local1 needs base predictions to transform".into())
                })?;
                let out = local1_transform(ds, base, &self.local1, n)?;
                (out.predictions, out.fired, &n.gender, &n.female)
            }
        };
        let biased_against = fired.iter().zip(&predictions).map(|(&f, &p)| f && p == 0).collect();
        Ok(ModelOutput {
            dataset: ds.with_predictions(predictions)?.with_protected(protected)?,
            truth: GroundTruth { biased_against },
            group: group.clone(),
        })
    }
}

/// Shape of the surrogate population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PopulationConfig {
    pub rows: usize,
    pub seed: u64,
    pub female_share: f64,
    pub black_share: f64,
    pub noise_features: usize,
    /// Log-odds penalty on a positive label for female rows.
    pub gender_effect: f64,
    /// Log-odds slope of the label along the first noise feature.
    pub signal: f64,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        Self {
            rows: 4000,
            seed: 7,
            female_share: 0.5,
            black_share: 0.4,
            noise_features: 5,
            gender_effect: 2.0,
            signal: 8.0,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// A population with `gender`, `race` and uniform features `x1..xN`.
///
/// The prediction column holds a ground label drawn from a logistic model in
/// `x1` with a penalty for female rows, for fitting a base classifier.
/// Gender is assigned to exactly `round(rows · female_share)` rows.
pub fn surrogate_population(cfg: &PopulationConfig) -> Result<Dataset> {
    if cfg.rows < 2 {
        return Err(Error::Config("population needs at least 2 rows".into()));
    }
    for (name, v) in [("female_share", cfg.female_share), ("black_share", cfg.black_share)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Config(format!("{name} = {v} outside [0,1]")));
        }
    }
    let names = GroupNames::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_female = (cfg.rows as f64 * cfg.female_share).round() as usize;
    let mut female: Vec<bool> = (0..cfg.rows).map(|i| i < n_female).collect();
    // Fisher-Yates keeps the count exact.
    for i in (1..cfg.rows).rev() {
        let j = rng.random_range(0..=i);
        female.swap(i, j);
    }
    let black: Vec<bool> = (0..cfg.rows).map(|_| rng.random_bool(cfg.black_share)).collect();
    let noise: Vec<Vec<f64>> = (0..cfg.noise_features)
        .map(|_| (0..cfg.rows).map(|_| rng.random::<f64>()).collect())
        .collect();
    let labels: Vec<u8> = (0..cfg.rows)
        .map(|i| {
            let x1 = noise.first().map_or(0.5, |c| c[i]);
            let z = cfg.signal * (x1 - 0.5) - if female[i] { cfg.gender_effect } else { 0.0 }
                + cfg.gender_effect / 2.0;
            u8::from(rng.random_bool(sigmoid(z)))
        })
        .collect();

    let pick = |flags: &[bool], yes: &str, no: &str| {
        ColumnData::Categorical(flags.iter().map(|&f| if f { yes } else { no }.to_string()).collect())
    };
    let mut columns = vec![
        (names.gender.clone(), pick(&female, &names.female, "male")),
        (names.race.clone(), pick(&black, &names.black, "white")),
    ];
    for (j, col) in noise.into_iter().enumerate() {
        columns.push((format!("x{}", j + 1), ColumnData::Numeric(col)));
    }
    Dataset::from_columns(columns, &names.gender, "label", labels)
}

/// Plain logistic regression on normalized numeric columns and one-hot
/// categorical levels, fitted by full-batch gradient descent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn design_row(ds: &Dataset, i: usize, out: &mut Vec<f64>) {
    out.clear();
    for (j, col) in ds.schema().columns.iter().enumerate() {
        match col.kind {
            ColumnKind::Numeric => out.push(ds.row(i)[j]),
            ColumnKind::Categorical => {
                let code = ds.row(i)[j] as usize;
                // First level is the reference.
                out.extend((1..col.levels.len()).map(|l| if l == code { 1.0 } else { 0.0 }));
            }
        }
    }
}

impl LogisticRegression {
    /// Fits to the dataset's prediction column.
    pub fn fit(ds: &Dataset, epochs: usize, learning_rate: f64, l2: f64) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::Config("cannot fit on an empty dataset".into()));
        }
        let mut x = Vec::new();
        let mut rows = Vec::with_capacity(ds.len());
        for i in 0..ds.len() {
            design_row(ds, i, &mut x);
            rows.push(x.clone());
        }
        let d = rows[0].len();
        let n = ds.len() as f64;
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut grad = vec![0.0; d];
        for _ in 0..epochs {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            for (row, &y) in rows.iter().zip(ds.predictions()) {
                let z = b + row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
                let err = sigmoid(z) - y as f64;
                grad_b += err;
                for (g, a) in grad.iter_mut().zip(row) {
                    *g += err * a;
                }
            }
            for (wj, g) in w.iter_mut().zip(&grad) {
                *wj -= learning_rate * (g / n + l2 * *wj);
            }
            b -= learning_rate * grad_b / n;
        }
        Ok(Self { weights: w, bias: b })
    }

    pub fn probability(&self, ds: &Dataset, i: usize) -> f64 {
        let mut x = Vec::with_capacity(self.weights.len());
        design_row(ds, i, &mut x);
        sigmoid(self.bias + x.iter().zip(&self.weights).map(|(a, c)| a * c).sum::<f64>())
    }

    pub fn predict(&self, ds: &Dataset) -> Vec<u8> {
        (0..ds.len()).map(|i| u8::from(self.probability(ds, i) >= 0.5)).collect()
    }
}

/// The default base classifier for the locally biased model.
pub fn fit_base_model(ds: &Dataset) -> Result<Vec<u8>> {
    Ok(LogisticRegression::fit(ds, 2000, 2.0, 0.0)?.predict(ds))
}

//! Tabular data with a protected column and a binary prediction column.
//!
//! Numeric columns are min-max normalized over the whole table when the
//! dataset is built; a column whose values are all equal normalizes to 0.
//! Categorical columns are stored as level codes.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    /// Categorical levels in order of first appearance; empty for numeric columns.
    pub levels: Vec<String>,
    /// Numeric bounds recorded at load; `(0, 0)` for categorical columns.
    pub min: f64,
    pub max: f64,
}

impl Column {
    pub fn level_code(&self, level: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == level)
    }
}

/// Column layout plus the protected and prediction column designations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureSchema {
    pub columns: Vec<Column>,
    pub protected: usize,
    pub prediction_name: String,
}

impl FeatureSchema {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn protected_column(&self) -> &Column {
        &self.columns[self.protected]
    }
}

/// Raw column values handed to [`Dataset::from_columns`].
#[derive(Clone, Debug)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl ColumnData {
    fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }
}

/// A feature value used in partial assignments.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Cat(String),
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Cat(s.to_string())
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    schema: FeatureSchema,
    n_rows: usize,
    /// Row-major; normalized value for numeric columns, level code for categorical ones.
    cells: Vec<f64>,
    /// Row-major raw numeric values (level codes again for categorical columns).
    raw: Vec<f64>,
    predictions: Vec<u8>,
}

impl Dataset {
    pub fn from_columns(
        columns: Vec<(String, ColumnData)>,
        protected: &str,
        prediction_name: &str,
        predictions: Vec<u8>,
    ) -> Result<Self> {
        let n_rows = predictions.len();
        if let Some((name, _)) = columns.iter().find(|(_, c)| c.len() != n_rows) {
            return Err(Error::Schema(format!(
                "column `{name}` length differs from {n_rows} predictions"
            )));
        }
        if let Some(p) = predictions.iter().find(|&&p| p > 1) {
            return Err(Error::Schema(format!("prediction value {p} is not 0 or 1")));
        }
        let protected_idx = columns
            .iter()
            .position(|(name, _)| name == protected)
            .ok_or_else(|| Error::Schema(format!("protected column `{protected}` missing")))?;
        if !matches!(columns[protected_idx].1, ColumnData::Categorical(_)) {
            return Err(Error::Schema(format!(
                "protected column `{protected}` must be categorical"
            )));
        }

        let d = columns.len();
        let mut cells = vec![0.0; n_rows * d];
        let mut raw = vec![0.0; n_rows * d];
        let mut schema_cols = Vec::with_capacity(d);
        for (j, (name, data)) in columns.into_iter().enumerate() {
            match data {
                ColumnData::Numeric(values) => {
                    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                        return Err(Error::Load {
                            row: i + 1,
                            column: name,
                            message: "non-finite numeric value".into(),
                        });
                    }
                    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let (min, max) = if values.is_empty() { (0.0, 0.0) } else { (min, max) };
                    let range = max - min;
                    for (i, v) in values.into_iter().enumerate() {
                        raw[i * d + j] = v;
                        cells[i * d + j] = if range > 0.0 { (v - min) / range } else { 0.0 };
                    }
                    schema_cols.push(Column {
                        name,
                        kind: ColumnKind::Numeric,
                        levels: Vec::new(),
                        min,
                        max,
                    });
                }
                ColumnData::Categorical(values) => {
                    let mut levels: Vec<String> = Vec::new();
                    let mut codes: HashMap<String, usize> = HashMap::new();
                    for (i, v) in values.into_iter().enumerate() {
                        let code = *codes.entry(v.clone()).or_insert_with(|| {
                            levels.push(v);
                            levels.len() - 1
                        });
                        cells[i * d + j] = code as f64;
                        raw[i * d + j] = code as f64;
                    }
                    schema_cols.push(Column {
                        name,
                        kind: ColumnKind::Categorical,
                        levels,
                        min: 0.0,
                        max: 0.0,
                    });
                }
            }
        }
        Ok(Self {
            schema: FeatureSchema {
                columns: schema_cols,
                protected: protected_idx,
                prediction_name: prediction_name.to_string(),
            },
            n_rows,
            cells,
            raw,
            predictions,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.n_rows
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0
    }

    pub fn n_columns(&self) -> usize {
        self.schema.columns.len()
    }

    /// Normalized row (level codes for categorical columns).
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_columns();
        &self.cells[i * d..(i + 1) * d]
    }

    pub fn raw_row(&self, i: usize) -> &[f64] {
        let d = self.n_columns();
        &self.raw[i * d..(i + 1) * d]
    }

    pub fn category(&self, row: usize, col: usize) -> &str {
        let code = self.row(row)[col] as usize;
        &self.schema.columns[col].levels[code]
    }

    pub fn protected_code(&self, row: usize) -> usize {
        self.row(row)[self.schema.protected] as usize
    }

    pub fn protected_value(&self, row: usize) -> &str {
        self.category(row, self.schema.protected)
    }

    /// Level code of `value` in the protected column.
    pub fn group_code(&self, value: &str) -> Result<usize> {
        self.schema.protected_column().level_code(value).ok_or_else(|| {
            Error::Config(format!(
                "value `{value}` does not occur in protected column `{}`",
                self.schema.protected_column().name
            ))
        })
    }

    pub fn predictions(&self) -> &[u8] {
        &self.predictions
    }

    pub fn prediction(&self, row: usize) -> u8 {
        self.predictions[row]
    }

    /// Same features with a different classifier output column.
    pub fn with_predictions(&self, predictions: Vec<u8>) -> Result<Self> {
        if predictions.len() != self.n_rows {
            return Err(Error::Schema(format!(
                "{} predictions for {} rows",
                predictions.len(),
                self.n_rows
            )));
        }
        if let Some(p) = predictions.iter().find(|&&p| p > 1) {
            return Err(Error::Schema(format!("prediction value {p} is not 0 or 1")));
        }
        Ok(Self {
            predictions,
            ..self.clone()
        })
    }

    /// Same data with another categorical column as the protected feature.
    pub fn with_protected(&self, name: &str) -> Result<Self> {
        let idx = self
            .schema
            .column_index(name)
            .ok_or_else(|| Error::Schema(format!("protected column `{name}` missing")))?;
        if self.schema.columns[idx].kind != ColumnKind::Categorical {
            return Err(Error::Schema(format!("protected column `{name}` must be categorical")));
        }
        let mut out = self.clone();
        out.schema.protected = idx;
        Ok(out)
    }

    /// Text of one cell as it would appear in a CSV file.
    pub fn cell_text(&self, row: usize, col: usize) -> String {
        match self.schema.columns[col].kind {
            ColumnKind::Numeric => self.raw_row(row)[col].to_string(),
            ColumnKind::Categorical => self.category(row, col).to_string(),
        }
    }
}

/// How to read a CSV file into a [`Dataset`].
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemaSpec {
    pub protected: String,
    pub prediction: String,
    /// Columns forced categorical. The protected column always is.
    pub categorical: Vec<String>,
    /// Columns forced numeric; a value that does not parse is a load error.
    pub numeric: Vec<String>,
    /// Columns dropped at load (ids, ground-truth labels, ...).
    pub ignore: Vec<String>,
}

impl SchemaSpec {
    pub fn new(protected: &str, prediction: &str) -> Self {
        Self {
            protected: protected.into(),
            prediction: prediction.into(),
            ..Self::default()
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>, spec: &SchemaSpec) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_dataset(file, spec)
}

fn parse_prediction(text: &str) -> Option<u8> {
    match text.trim() {
        "0" | "0.0" => Some(0),
        "1" | "1.0" => Some(1),
        _ => None,
    }
}

/// Reads comma-separated UTF-8 with a header row. Column kinds not forced by
/// `spec` are inferred: numeric when every value parses as a float.
pub fn read_dataset<R: Read>(reader: R, spec: &SchemaSpec) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let pred_idx = find(&spec.prediction)
        .ok_or_else(|| Error::Schema(format!("prediction column `{}` missing", spec.prediction)))?;
    if find(&spec.protected).is_none() {
        return Err(Error::Schema(format!("protected column `{}` missing", spec.protected)));
    }
    for name in spec.categorical.iter().chain(&spec.numeric).chain(&spec.ignore) {
        if find(name).is_none() {
            return Err(Error::Schema(format!("column `{name}` missing")));
        }
    }
    if spec.numeric.contains(&spec.protected) {
        return Err(Error::Schema(format!(
            "protected column `{}` cannot be numeric",
            spec.protected
        )));
    }

    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&j| j != pred_idx && !spec.ignore.contains(&headers[j]))
        .collect();
    let mut text: Vec<Vec<String>> = vec![Vec::new(); feature_idx.len()];
    let mut predictions = Vec::new();
    let mut lines = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let pred_text = record.get(pred_idx).unwrap_or("");
        let pred = parse_prediction(pred_text).ok_or_else(|| Error::Load {
            row: line,
            column: spec.prediction.clone(),
            message: format!("prediction `{pred_text}` is not 0 or 1"),
        })?;
        predictions.push(pred);
        for (k, &j) in feature_idx.iter().enumerate() {
            text[k].push(record.get(j).unwrap_or("").trim().to_string());
        }
        lines.push(line);
    }

    let mut columns = Vec::with_capacity(feature_idx.len());
    for (k, &j) in feature_idx.iter().enumerate() {
        let name = headers[j].clone();
        let values = std::mem::take(&mut text[k]);
        let forced_cat = name == spec.protected || spec.categorical.contains(&name);
        let forced_num = spec.numeric.contains(&name);
        let parsed: Vec<Option<f64>> = values.iter().map(|v| v.parse::<f64>().ok()).collect();
        let data = if forced_cat {
            ColumnData::Categorical(values)
        } else if forced_num {
            let mut nums = Vec::with_capacity(values.len());
            for (i, p) in parsed.into_iter().enumerate() {
                nums.push(p.ok_or_else(|| Error::Load {
                    row: lines[i],
                    column: name.clone(),
                    message: format!("`{}` is not a number", values[i]),
                })?);
            }
            ColumnData::Numeric(nums)
        } else if !values.is_empty() && parsed.iter().all(Option::is_some) {
            ColumnData::Numeric(parsed.into_iter().flatten().collect())
        } else {
            ColumnData::Categorical(values)
        };
        columns.push((name, data));
    }
    Dataset::from_columns(columns, &spec.protected, &spec.prediction, predictions)
}

/// Writes the features and the prediction column back out as CSV.
pub fn write_dataset<W: std::io::Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.schema.columns.iter().map(|c| c.name.as_str()).collect();
    header.push(&ds.schema.prediction_name);
    w.write_record(&header)?;
    for i in 0..ds.len() {
        let mut rec: Vec<String> = (0..ds.n_columns()).map(|j| ds.cell_text(i, j)).collect();
        rec.push(ds.prediction(i).to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

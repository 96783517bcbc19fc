//! Synthetic scenario generation, CSV ingestion, standardization,
//! response transforms, dummy coding, and train/test splitting.

use serde::{Deserialize, Serialize};

use crate::dist::{hyperbolic_sample, student_t_sample, ScaledTailParams};
use crate::error::{domain_err, Error, Result};
use crate::rng::RandomStream;

/// A plain design matrix (row-major) with its response vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub n: usize,
    pub p: usize,
}

impl Dataset {
    pub fn new(x: Vec<f64>, y: Vec<f64>, n: usize, p: usize) -> Result<Self> {
        if x.len() != n * p || y.len() != n {
            return Err(Error::Dimension(format!(
                "dataset shape mismatch: x={} y={} for n={n}, p={p}",
                x.len(),
                y.len()
            )));
        }
        Ok(Self { x, y, n, p })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }
}

/// Per-column centering/scaling recorded by `standardize`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scaling {
    pub x_mean: Vec<f64>,
    pub x_sd: Vec<f64>,
    pub y_mean: f64,
    pub y_sd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StandardizedData {
    pub data: Dataset,
    pub scaling: Scaling,
}

/// True error law of a synthetic scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ErrorLaw {
    Hyperbolic { eta: f64, rho2: f64 },
    Normal { var: f64 },
    StudentT { eta: f64, rho2: f64 },
}

/// The six synthetic scenarios: strong or mixed signals crossed with
/// hyperbolic, normal, and Student-t errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

impl ScenarioId {
    pub fn all() -> [ScenarioId; 6] {
        use ScenarioId::*;
        [I, II, III, IV, V, VI]
    }

    pub fn error_law(self) -> ErrorLaw {
        use ScenarioId::*;
        match self {
            I | IV => ErrorLaw::Hyperbolic { eta: 0.5, rho2: 2.0 },
            II | V => ErrorLaw::Normal { var: 2.0 },
            III | VI => ErrorLaw::StudentT { eta: 2.1, rho2: 1.0 },
        }
    }

    fn strong_signals(self) -> bool {
        use ScenarioId::*;
        matches!(self, I | II | III)
    }
}

impl std::str::FromStr for ScenarioId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        use ScenarioId::*;
        match s.to_uppercase().as_str() {
            "I" | "1" => Ok(I),
            "II" | "2" => Ok(II),
            "III" | "3" => Ok(III),
            "IV" | "4" => Ok(IV),
            "V" | "5" => Ok(V),
            "VI" | "6" => Ok(VI),
            other => Err(Error::Data(format!("unknown scenario '{other}'"))),
        }
    }
}

impl std::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        use ScenarioId::*;
        let s = match self {
            I => "I",
            II => "II",
            III => "III",
            IV => "IV",
            V => "V",
            VI => "VI",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    pub n: usize,
    pub p: usize,
}

impl ScenarioSpec {
    pub fn new(id: ScenarioId, n: usize, p: usize) -> Result<Self> {
        let min_p = if id.strong_signals() { 10 } else { 4 };
        if p < min_p {
            return Err(Error::Data(format!(
                "scenario {id} needs p >= {min_p}, got {p}"
            )));
        }
        if n < 2 {
            return Err(Error::Data(format!("scenario needs n >= 2, got {n}")));
        }
        Ok(Self { id, n, p })
    }

    /// Length p+1: intercept first, then the p slopes.
    pub fn beta_true(&self) -> Vec<f64> {
        let mut beta = vec![0.0; self.p + 1];
        beta[0] = 2.0;
        if self.id.strong_signals() {
            for j in [1, 2, 5, 7, 10] {
                beta[j] = 3.0;
            }
        } else {
            beta[1] = 0.5;
            beta[2] = 1.5;
            beta[3] = 2.0;
            beta[4] = -3.0;
        }
        beta
    }
}

/// Draw one synthetic replicate: covariates iid Uniform(-2, 2) and
/// y = beta_0 + X beta + eps with eps from the scenario's error law.
pub fn generate_scenario(
    spec: &ScenarioSpec,
    stream: &mut RandomStream,
) -> Result<(Dataset, Vec<f64>)> {
    let (n, p) = (spec.n, spec.p);
    let beta = spec.beta_true();
    let mut x = vec![0.0; n * p];
    for v in x.iter_mut() {
        *v = -2.0 + 4.0 * stream.uniform();
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut mu = beta[0];
        for j in 0..p {
            mu += beta[j + 1] * x[i * p + j];
        }
        y[i] = mu + sample_error(spec.id.error_law(), stream)?;
    }
    Ok((Dataset::new(x, y, n, p)?, beta))
}

pub fn sample_error(law: ErrorLaw, stream: &mut RandomStream) -> Result<f64> {
    match law {
        ErrorLaw::Hyperbolic { eta, rho2 } => {
            hyperbolic_sample(stream, &ScaledTailParams::new(eta, rho2)?)
        }
        ErrorLaw::Normal { var } => stream.normal(0.0, var),
        ErrorLaw::StudentT { eta, rho2 } => {
            student_t_sample(stream, &ScaledTailParams::new(eta, rho2)?)
        }
    }
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    // sample standard deviation (n-1 denominator)
    let ss = values.map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n as f64 - 1.0)).sqrt())
}

/// Center and scale every column of X and the response to mean 0, sd 1.
pub fn standardize(data: &Dataset) -> Result<StandardizedData> {
    if data.n < 2 {
        return Err(Error::Data("standardize needs n >= 2".into()));
    }
    let (n, p) = (data.n, data.p);
    let mut x_mean = vec![0.0; p];
    let mut x_sd = vec![0.0; p];
    let mut x = vec![0.0; n * p];
    for j in 0..p {
        let (m, s) = mean_sd((0..n).map(|i| data.x[i * p + j]), n);
        if s <= 0.0 || !s.is_finite() {
            return Err(Error::Data(format!("column {j} has zero variance")));
        }
        x_mean[j] = m;
        x_sd[j] = s;
        for i in 0..n {
            x[i * p + j] = (data.x[i * p + j] - m) / s;
        }
    }
    let (y_mean, y_sd) = mean_sd(data.y.iter().cloned(), n);
    if y_sd <= 0.0 || !y_sd.is_finite() {
        return Err(Error::Data("response has zero variance".into()));
    }
    let y = data.y.iter().map(|v| (v - y_mean) / y_sd).collect();
    Ok(StandardizedData {
        data: Dataset::new(x, y, n, p)?,
        scaling: Scaling {
            x_mean,
            x_sd,
            y_mean,
            y_sd,
        },
    })
}

/// Standardize fresh rows with scaling learned from training data.
pub fn apply_scaling(x_raw: &[f64], n: usize, scaling: &Scaling) -> Result<Vec<f64>> {
    let p = scaling.x_mean.len();
    if x_raw.len() != n * p {
        return Err(Error::Dimension(format!(
            "apply_scaling: got {} entries for n={n}, p={p}",
            x_raw.len()
        )));
    }
    let mut out = vec![0.0; n * p];
    for i in 0..n {
        for j in 0..p {
            out[i * p + j] = (x_raw[i * p + j] - scaling.x_mean[j]) / scaling.x_sd[j];
        }
    }
    Ok(out)
}

/// Map coefficients fitted on standardized data back to the raw scale,
/// reconstructing the implied intercept.
pub fn destandardize_coefficients(beta_std: &[f64], scaling: &Scaling) -> Result<(Vec<f64>, f64)> {
    let p = scaling.x_mean.len();
    if beta_std.len() != p {
        return Err(Error::Dimension(format!(
            "destandardize: beta length {} != {p}",
            beta_std.len()
        )));
    }
    let beta_raw: Vec<f64> = beta_std
        .iter()
        .zip(&scaling.x_sd)
        .map(|(b, sd)| b * scaling.y_sd / sd)
        .collect();
    let intercept = scaling.y_mean
        - beta_raw
            .iter()
            .zip(&scaling.x_mean)
            .map(|(b, m)| b * m)
            .sum::<f64>();
    Ok((beta_raw, intercept))
}

/// Convert a standardized-scale response value back to the raw scale.
pub fn destandardize_response(y_std: f64, scaling: &Scaling) -> f64 {
    y_std * scaling.y_sd + scaling.y_mean
}

/// Append k iid standard-normal noise columns.
pub fn add_noise_covariates(data: &Dataset, k: usize, stream: &mut RandomStream) -> Dataset {
    let (n, p) = (data.n, data.p);
    let pk = p + k;
    let mut x = vec![0.0; n * pk];
    for i in 0..n {
        x[i * pk..i * pk + p].copy_from_slice(data.row(i));
        for j in p..pk {
            x[i * pk + j] = stream.standard_normal();
        }
    }
    Dataset {
        x,
        y: data.y.clone(),
        n,
        p: pk,
    }
}

/// Elementwise response transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ResponseTransform {
    Log,
    Sqrt,
    Scale(f64),
}

pub fn transform_response(y: &[f64], kind: ResponseTransform) -> Result<Vec<f64>> {
    y.iter()
        .enumerate()
        .map(|(i, &v)| match kind {
            ResponseTransform::Log => {
                if v <= 0.0 {
                    Err(domain_err!("log transform needs positive values; index {i} is {v}"))
                } else {
                    Ok(v.ln())
                }
            }
            ResponseTransform::Sqrt => {
                if v < 0.0 {
                    Err(domain_err!("sqrt transform needs nonnegative values; index {i} is {v}"))
                } else {
                    Ok(v.sqrt())
                }
            }
            ResponseTransform::Scale(c) => Ok(v * c),
        })
        .collect()
}

/// Undo a pipeline of transforms that was applied front to back.
pub fn invert_transforms(y: f64, pipeline: &[ResponseTransform]) -> f64 {
    pipeline.iter().rev().fold(y, |v, t| match t {
        ResponseTransform::Log => v.exp(),
        ResponseTransform::Sqrt => v * v,
        ResponseTransform::Scale(c) => v / c,
    })
}

/// How to size the training partition.
#[derive(Debug, Clone, Copy)]
pub enum TrainSize {
    Fraction(f64),
    Count(usize),
}

/// Uniformly random partition of 0..n into (train, test) index sets.
pub fn train_test_split(
    n: usize,
    size: TrainSize,
    stream: &mut RandomStream,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let train_count = match size {
        TrainSize::Fraction(f) => {
            if !(0.0..1.0).contains(&f) || f <= 0.0 {
                return Err(Error::Data(format!("train fraction {f} outside (0, 1)")));
            }
            ((n as f64) * f).round() as usize
        }
        TrainSize::Count(c) => c,
    };
    if train_count == 0 || train_count >= n {
        return Err(Error::Data(format!(
            "infeasible train size {train_count} for n={n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = (stream.uniform() * (i + 1) as f64) as usize;
        idx.swap(i, j.min(i));
    }
    let test = idx.split_off(train_count);
    let mut train = idx;
    train.sort_unstable();
    let mut test = test;
    test.sort_unstable();
    Ok((train, test))
}

/// Select rows of a dataset by index.
pub fn subset(data: &Dataset, rows: &[usize]) -> Dataset {
    let p = data.p;
    let mut x = Vec::with_capacity(rows.len() * p);
    let mut y = Vec::with_capacity(rows.len());
    for &i in rows {
        x.extend_from_slice(data.row(i));
        y.push(data.y[i]);
    }
    Dataset {
        x,
        y,
        n: rows.len(),
        p,
    }
}

// ---------------------------------------------------------------------------
// Tabular ingestion

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<Column>,
    pub n_rows: usize,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }
}

/// Load a comma-delimited file with a header row; "NA" and empty fields
/// are treated as missing.
pub fn load_csv(path: &std::path::Path, schema: &[ColumnSchema]) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut positions = Vec::with_capacity(schema.len());
    for s in schema {
        let pos = headers
            .iter()
            .position(|h| h == &s.name)
            .ok_or_else(|| Error::Data(format!("missing column '{}'", s.name)))?;
        positions.push(pos);
    }
    let mut columns: Vec<Column> = schema
        .iter()
        .map(|s| Column {
            name: s.name.clone(),
            data: match s.kind {
                ColumnKind::Numeric => ColumnData::Numeric(Vec::new()),
                ColumnKind::Categorical => ColumnData::Categorical(Vec::new()),
            },
        })
        .collect();
    let mut n_rows = 0;
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        for (k, &pos) in positions.iter().enumerate() {
            let raw = record.get(pos).unwrap_or("").trim();
            let missing = raw.is_empty() || raw == "NA";
            let col_name = columns[k].name.clone();
            match &mut columns[k].data {
                ColumnData::Numeric(v) => {
                    if missing {
                        v.push(None);
                    } else {
                        let x = raw.parse::<f64>().map_err(|_| {
                            Error::Data(format!(
                                "row {} column '{col_name}': cannot parse '{raw}' as a number",
                                row_idx + 2,
                            ))
                        })?;
                        v.push(Some(x));
                    }
                }
                ColumnData::Categorical(v) => {
                    v.push(if missing { None } else { Some(raw.to_string()) });
                }
            }
        }
        n_rows = row_idx + 1;
    }
    Ok(Table { columns, n_rows })
}

/// Result of dummy coding: a numeric design with named columns and the
/// original row indices that survived.
#[derive(Debug, Clone)]
pub struct EncodedDesign {
    pub names: Vec<String>,
    pub x: Vec<f64>,
    pub n: usize,
    pub p: usize,
    pub kept_rows: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Expand categorical columns into indicator columns, keeping categories
/// with at least `min_count` observations and dropping one reference
/// category per variable. Rows with missing values or with a dropped
/// category are removed.
pub fn dummy_encode(table: &Table, min_count: usize) -> Result<EncodedDesign> {
    let mut warnings = Vec::new();
    // retained categories per categorical column, sorted; first is reference
    let mut retained: Vec<Option<Vec<String>>> = Vec::new();
    for col in &table.columns {
        match &col.data {
            ColumnData::Numeric(_) => retained.push(None),
            ColumnData::Categorical(vals) => {
                let mut counts = std::collections::BTreeMap::new();
                for v in vals.iter().flatten() {
                    *counts.entry(v.clone()).or_insert(0usize) += 1;
                }
                let keep: Vec<String> = counts
                    .into_iter()
                    .filter(|(_, c)| *c >= min_count)
                    .map(|(k, _)| k)
                    .collect();
                if keep.len() < 2 {
                    warnings.push(format!(
                        "categorical column '{}' has fewer than 2 retained categories; it contributes no design columns",
                        col.name
                    ));
                }
                retained.push(Some(keep));
            }
        }
    }
    let mut kept_rows = Vec::new();
    'rows: for i in 0..table.n_rows {
        for (col, keep) in table.columns.iter().zip(&retained) {
            match (&col.data, keep) {
                (ColumnData::Numeric(v), _) => {
                    if v[i].is_none() {
                        continue 'rows;
                    }
                }
                (ColumnData::Categorical(v), Some(keep)) => match &v[i] {
                    None => continue 'rows,
                    Some(cat) if !keep.contains(cat) => continue 'rows,
                    _ => {}
                },
                _ => unreachable!(),
            }
        }
        kept_rows.push(i);
    }
    let mut names = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for (col, keep) in table.columns.iter().zip(&retained) {
        match (&col.data, keep) {
            (ColumnData::Numeric(v), _) => {
                names.push(col.name.clone());
                cols.push(kept_rows.iter().map(|&i| v[i].unwrap()).collect());
            }
            (ColumnData::Categorical(v), Some(keep)) => {
                if keep.len() < 2 {
                    continue;
                }
                for cat in keep.iter().skip(1) {
                    names.push(format!("{}={cat}", col.name));
                    cols.push(
                        kept_rows
                            .iter()
                            .map(|&i| if v[i].as_deref() == Some(cat.as_str()) { 1.0 } else { 0.0 })
                            .collect(),
                    );
                }
            }
            _ => unreachable!(),
        }
    }
    let n = kept_rows.len();
    let p = cols.len();
    let mut x = vec![0.0; n * p];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            x[i * p + j] = col[i];
        }
    }
    Ok(EncodedDesign {
        names,
        x,
        n,
        p,
        kept_rows,
        warnings,
    })
}

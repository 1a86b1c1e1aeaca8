//! Datasets, CSV ingestion and covariate standardization.

use std::cmp::Ordering;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::FormulaSpec;
use crate::model::{ModelSpec, ResponseKind, ResponseSpec};

/// One response value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    /// 1-based category index.
    Ordinal(usize),
    Gaussian(f64),
    Missing,
}

impl Cell {
    pub fn is_observed(&self) -> bool {
        !matches!(self, Cell::Missing)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub n: usize,
    pub q: usize,
    pub p: usize,
    /// Response cells, row-major `n × q`.
    pub y: Vec<Cell>,
    /// Covariates, row-major `n × p`.
    pub x: Vec<f64>,
    pub unit_ids: Vec<String>,
    pub standardization: Option<Vec<ColumnScale>>,
}

impl Dataset {
    pub fn new(q: usize, p: usize, y: Vec<Cell>, x: Vec<f64>) -> Result<Self> {
        if q == 0 || !y.len().is_multiple_of(q) {
            return Err(Error::InvalidData(format!(
                "{} response cells do not form rows of {q}",
                y.len()
            )));
        }
        let n = y.len() / q;
        if x.len() != n * p {
            return Err(Error::DimensionMismatch {
                expected: n * p,
                found: x.len(),
            });
        }
        Ok(Self {
            n,
            q,
            p,
            y,
            x,
            unit_ids: (1..=n).map(|i| i.to_string()).collect(),
            standardization: None,
        })
    }

    pub fn cell(&self, i: usize, j: usize) -> Cell {
        self.y[i * self.q + j]
    }

    pub fn row_y(&self, i: usize) -> &[Cell] {
        &self.y[i * self.q..(i + 1) * self.q]
    }

    pub fn row_x(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn observed_mask(&self) -> Vec<bool> {
        self.y.iter().map(Cell::is_observed).collect()
    }

    /// Keeps only the listed units, in the given order.
    pub fn select(&self, units: &[usize]) -> Self {
        let mut y = Vec::with_capacity(units.len() * self.q);
        let mut x = Vec::with_capacity(units.len() * self.p);
        let mut ids = Vec::with_capacity(units.len());
        for &i in units {
            y.extend_from_slice(self.row_y(i));
            x.extend_from_slice(self.row_x(i));
            ids.push(self.unit_ids[i].clone());
        }
        Self {
            n: units.len(),
            q: self.q,
            p: self.p,
            y,
            x,
            unit_ids: ids,
            standardization: self.standardization.clone(),
        }
    }

    /// Checks cell types and category ranges against `spec`.
    pub fn check_against(&self, spec: &ModelSpec) -> Result<()> {
        if spec.q() != self.q {
            return Err(Error::DimensionMismatch {
                expected: spec.q(),
                found: self.q,
            });
        }
        if spec.p() != self.p {
            return Err(Error::DimensionMismatch {
                expected: spec.p(),
                found: self.p,
            });
        }
        for i in 0..self.n {
            for (j, r) in spec.responses.iter().enumerate() {
                match (self.cell(i, j), r.kind) {
                    (Cell::Missing, _) => {}
                    (Cell::Ordinal(c), ResponseKind::Ordinal { categories })
                        if (1..=categories).contains(&c) => {}
                    (Cell::Gaussian(v), ResponseKind::Gaussian) if v.is_finite() => {}
                    (cell, _) => {
                        return Err(Error::InvalidData(format!(
                            "unit {} response `{}`: {cell:?} is not valid here",
                            self.unit_ids[i], r.name
                        )))
                    }
                }
            }
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite covariate value".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NaPolicy {
    Fail,
    Pass,
}

impl FromStr for NaPolicy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fail" => Ok(NaPolicy::Fail),
            "pass" => Ok(NaPolicy::Pass),
            other => Err(format!(
                "unknown NA policy `{other}` (expected fail or pass)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseType {
    Ordinal,
    Gaussian,
}

impl FromStr for ResponseType {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "ordinal" => Ok(ResponseType::Ordinal),
            "gaussian" => Ok(ResponseType::Gaussian),
            other => Err(format!(
                "unknown response type `{other}` (expected ordinal or gaussian)"
            )),
        }
    }
}

/// Result of [`load_csv`]: the data, its model spec and any non-fatal warnings.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub data: Dataset,
    pub spec: ModelSpec,
    pub dropped_rows: usize,
    pub warnings: Vec<String>,
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f == "NA"
}

/// Sorted distinct labels: numerically if every label parses as a number, else lexicographically.
fn sort_labels(labels: &mut Vec<String>) {
    labels.sort();
    labels.dedup();
    let numeric: Option<Vec<f64>> = labels.iter().map(|l| l.parse::<f64>().ok()).collect();
    if let Some(values) = numeric {
        let mut paired: Vec<(f64, String)> = values.into_iter().zip(labels.drain(..)).collect();
        paired.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        labels.extend(paired.into_iter().map(|(_, l)| l));
    }
}

pub fn load_csv(
    path: impl AsRef<Path>,
    formula: &FormulaSpec,
    response_types: &[ResponseType],
    na_policy: NaPolicy,
) -> Result<Loaded> {
    let path = path.as_ref();
    let data_err = |message: String| Error::Data {
        path: path.to_path_buf(),
        message,
    };
    if response_types.len() != formula.response_names.len() {
        return Err(data_err(format!(
            "{} response types given for {} responses",
            response_types.len(),
            formula.response_names.len()
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => data_err(format!("{other:?}")),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| data_err(format!("cannot read header: {e}")))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data_err(format!("unknown column `{name}`")))
    };
    let ycols = formula
        .response_names
        .iter()
        .map(|n| column(n))
        .collect::<Result<Vec<_>>>()?;
    let xcols = formula
        .covariate_names
        .iter()
        .map(|n| column(n))
        .collect::<Result<Vec<_>>>()?;

    let q = ycols.len();
    let p = xcols.len();
    let mut raw_y: Vec<Option<String>> = Vec::new();
    let mut x = Vec::new();
    let mut ids = Vec::new();
    let mut dropped = 0;
    for (row, record) in reader.records().enumerate() {
        let row = row + 1;
        let record = record.map_err(|e| data_err(format!("row {row}: {e}")))?;
        let mut xrow = Vec::with_capacity(p);
        let mut missing_covariate = false;
        for (&c, name) in xcols.iter().zip(&formula.covariate_names) {
            let field = record.get(c).unwrap_or("");
            if is_missing(field) {
                missing_covariate = true;
                continue;
            }
            let v: f64 = field.parse().map_err(|_| {
                data_err(format!(
                    "row {row}, column `{name}`: cannot parse `{field}` as a number"
                ))
            })?;
            xrow.push(v);
        }
        if missing_covariate {
            dropped += 1;
            continue;
        }
        for (j, &c) in ycols.iter().enumerate() {
            let field = record.get(c).unwrap_or("");
            if is_missing(field) {
                if na_policy == NaPolicy::Fail {
                    return Err(data_err(format!(
                        "row {row}: missing value in response `{}` (use the pass NA policy to allow missing responses)",
                        formula.response_names[j]
                    )));
                }
                raw_y.push(None);
            } else {
                raw_y.push(Some(field.to_string()));
            }
        }
        x.extend(xrow);
        ids.push(row.to_string());
    }
    let n = ids.len();

    let mut responses = Vec::with_capacity(q);
    let mut y = vec![Cell::Missing; n * q];
    for j in 0..q {
        let name = &formula.response_names[j];
        match response_types[j] {
            ResponseType::Gaussian => {
                for i in 0..n {
                    if let Some(field) = &raw_y[i * q + j] {
                        let v: f64 = field.parse().map_err(|_| {
                            data_err(format!(
                                "row {}, column `{name}`: cannot parse `{field}` as a number",
                                ids[i]
                            ))
                        })?;
                        if !v.is_finite() {
                            return Err(data_err(format!(
                                "row {}, column `{name}`: non-finite value",
                                ids[i]
                            )));
                        }
                        y[i * q + j] = Cell::Gaussian(v);
                    }
                }
                responses.push(ResponseSpec::gaussian(name.clone()));
            }
            ResponseType::Ordinal => {
                let mut labels: Vec<String> =
                    (0..n).filter_map(|i| raw_y[i * q + j].clone()).collect();
                sort_labels(&mut labels);
                if labels.len() < 2 {
                    return Err(data_err(format!(
                        "ordinal column `{name}` has {} distinct observed value(s); at least 2 are required",
                        labels.len()
                    )));
                }
                for i in 0..n {
                    if let Some(field) = &raw_y[i * q + j] {
                        let c = labels
                            .iter()
                            .position(|l| l == field)
                            .expect("label collected above");
                        y[i * q + j] = Cell::Ordinal(c + 1);
                    }
                }
                responses.push(ResponseSpec {
                    name: name.clone(),
                    kind: ResponseKind::Ordinal {
                        categories: labels.len(),
                    },
                    category_labels: labels,
                });
            }
        }
    }

    let mut warnings = Vec::new();
    if dropped > 0 {
        warnings.push(format!("dropped {dropped} row(s) with missing covariates"));
    }
    let spec = ModelSpec::new(responses, formula.covariate_names.clone(), false)?;
    Ok(Loaded {
        data: Dataset {
            n,
            q,
            p,
            y,
            x,
            unit_ids: ids,
            standardization: None,
        },
        spec,
        dropped_rows: dropped,
        warnings,
    })
}

/// Writes the dataset as CSV: responses (category labels / shortest round-trip reals / `NA`), then covariates.
pub fn write_csv<W: Write>(data: &Dataset, spec: &ModelSpec, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> = spec
        .responses
        .iter()
        .map(|r| r.name.as_str())
        .chain(spec.covariates.iter().map(String::as_str))
        .collect();
    let io_err = |e: csv::Error| Error::InvalidData(format!("csv write failed: {e}"));
    w.write_record(&header).map_err(io_err)?;
    let mut record = Vec::with_capacity(header.len());
    for i in 0..data.n {
        record.clear();
        for (j, r) in spec.responses.iter().enumerate() {
            record.push(match data.cell(i, j) {
                Cell::Missing => "NA".to_string(),
                Cell::Ordinal(c) => r.label(c),
                Cell::Gaussian(v) => v.to_string(),
            });
        }
        record.extend(data.row_x(i).iter().map(f64::to_string));
        w.write_record(&record).map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidData(format!("csv write failed: {e}")))?;
    Ok(())
}

pub fn write_csv_file(data: &Dataset, spec: &ModelSpec, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(data, spec, std::io::BufWriter::new(f))
}

/// Centers and scales every covariate to mean 0 and sample sd 1 (n − 1 denominator).
pub fn standardize(data: &Dataset, covariate_names: &[String]) -> Result<Dataset> {
    if data.p == 0 {
        return Err(Error::InvalidData("no covariates to standardize".into()));
    }
    if data.n < 2 {
        return Err(Error::InvalidData(
            "standardization needs at least 2 units".into(),
        ));
    }
    let n = data.n as f64;
    let mut out = data.clone();
    let mut scales = Vec::with_capacity(data.p);
    for c in 0..data.p {
        let col = (0..data.n).map(|i| data.x[i * data.p + c]);
        let mean = col.clone().sum::<f64>() / n;
        let var = col.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        if !(sd > 0.0) || !sd.is_finite() {
            let name = covariate_names.get(c).map(String::as_str).unwrap_or("?");
            return Err(Error::InvalidData(format!(
                "covariate `{name}` has zero variance"
            )));
        }
        for i in 0..data.n {
            let v = &mut out.x[i * data.p + c];
            *v = (*v - mean) / sd;
        }
        scales.push(ColumnScale { mean, sd });
    }
    out.standardization = Some(match &data.standardization {
        // Compose with an earlier standardization so the record always maps back to raw units.
        Some(prev) => prev
            .iter()
            .zip(&scales)
            .map(|(a, b)| ColumnScale {
                mean: a.mean + a.sd * b.mean,
                sd: a.sd * b.sd,
            })
            .collect(),
        None => scales,
    });
    Ok(out)
}

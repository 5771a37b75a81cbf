//! Datasets, coefficient vectors and CSV ingestion.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which CSV column holds the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseColumn {
    Name(String),
    /// Zero-based column index.
    Index(usize),
}

impl From<&str> for ResponseColumn {
    /// A string that parses as an unsigned integer is read as an index.
    fn from(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => ResponseColumn::Index(i),
            Err(_) => ResponseColumn::Name(s.to_string()),
        }
    }
}

/// Centering and scaling constants applied by [`load_csv`] when standardizing.
///
/// Covariate `j` was transformed as `(x - means[j]) / scales[j]` and the
/// response was centered at `response_mean`, so a coefficient `b` on the
/// standardized scale is `b / scales[j]` on the original scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub columns: Vec<String>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub response_mean: f64,
}

impl Standardization {
    /// Maps a coefficient (or interval endpoint) for column `j` to the original scale.
    pub fn to_original_scale(&self, j: usize, value: f64) -> f64 {
        value / self.scales[j]
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path)?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }
}

/// An `n × p` design matrix with an `n`-vector response.
///
/// Rows of the design are the observations `Xᵢ`.
#[derive(Debug, Clone)]
pub struct Dataset {
    design: DMatrix<f64>,
    response: DVector<f64>,
    column_names: Option<Vec<String>>,
    standardization: Option<Standardization>,
}

impl Dataset {
    /// Validates and wraps a design matrix and response.
    pub fn new(design: DMatrix<f64>, response: DVector<f64>) -> Result<Self> {
        let (n, p) = design.shape();
        if n < 2 {
            return Err(Error::Data(format!("need at least 2 observations, got {n}")));
        }
        if p < 1 {
            return Err(Error::Data("need at least 1 covariate".into()));
        }
        if response.len() != n {
            return Err(Error::DimensionMismatch {
                what: "response length vs design rows",
                expected: n,
                got: response.len(),
            });
        }
        if let Some(k) = design.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite design entry at row {}, column {}",
                k % n,
                k / n
            )));
        }
        if let Some(i) = response.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite response at row {i}")));
        }
        Ok(Self {
            design,
            response,
            column_names: None,
            standardization: None,
        })
    }

    /// Builds a dataset from row-major observations.
    pub fn from_rows(rows: &[Vec<f64>], response: &[f64]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::Data(format!("ragged row {i}: expected {p} entries")));
        }
        let design = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Self::new(design, DVector::from_column_slice(response))
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::DimensionMismatch {
                what: "column names",
                expected: self.p(),
                got: names.len(),
            });
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn p(&self) -> usize {
        self.design.ncols()
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    /// Name of column `j`, falling back to `x{j+1}`.
    pub fn column_name(&self, j: usize) -> String {
        match &self.column_names {
            Some(names) => names[j].clone(),
            None => format!("x{}", j + 1),
        }
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    /// Residuals `y - Xβ`.
    pub fn residuals(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.response - &self.design * beta
    }

    /// Applies a row permutation to design and response together.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n() {
            return Err(Error::DimensionMismatch {
                what: "row permutation",
                expected: self.n(),
                got: perm.len(),
            });
        }
        let design = DMatrix::from_fn(self.n(), self.p(), |i, j| self.design[(perm[i], j)]);
        let response = DVector::from_fn(self.n(), |i, _| self.response[perm[i]]);
        let mut out = Self::new(design, response)?;
        out.column_names = self.column_names.clone();
        out.standardization = self.standardization.clone();
        Ok(out)
    }

    /// Centers every covariate, scales it to unit sample standard deviation,
    /// and centers the response.
    pub fn standardize(mut self) -> Result<Self> {
        let n = self.n();
        let mut means = Vec::with_capacity(self.p());
        let mut scales = Vec::with_capacity(self.p());
        for j in 0..self.p() {
            let mut col = self.design.column_mut(j);
            let mean = col.mean();
            let ss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
            let sd = (ss / (n - 1) as f64).sqrt();
            if !(sd > 0.0) {
                return Err(Error::Data(format!(
                    "column {} has zero variance and cannot be standardized",
                    self.column_names.as_ref().map_or_else(|| j.to_string(), |c| c[j].clone())
                )));
            }
            col.apply(|v| *v = (*v - mean) / sd);
            means.push(mean);
            scales.push(sd);
        }
        let response_mean = self.response.mean();
        self.response.apply(|v| *v -= response_mean);
        let columns = (0..self.p()).map(|j| self.column_name(j)).collect();
        self.standardization = Some(Standardization {
            columns,
            means,
            scales,
            response_mean,
        });
        Ok(self)
    }

    /// Writes the dataset as CSV with the response as the first column.
    ///
    /// Values use the shortest representation that parses back to the same
    /// `f64`, so a load/export cycle is bit-exact.
    pub fn write_csv(&self, path: impl AsRef<Path>, response_name: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec![response_name.to_string()];
        header.extend((0..self.p()).map(|j| self.column_name(j)));
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec = vec![self.response[i].to_string()];
            rec.extend((0..self.p()).map(|j| self.design[(i, j)].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads a rectangular numeric CSV with a header row.
pub fn load_csv(
    path: impl AsRef<Path>,
    response_column: impl Into<ResponseColumn>,
    standardize: bool,
) -> Result<Dataset> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::Data(format!("input file {} does not exist", path.display())));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let response_idx = match response_column.into() {
        ResponseColumn::Index(i) if i < headers.len() => i,
        ResponseColumn::Index(i) => {
            return Err(Error::Data(format!(
                "response column index {i} out of range ({} columns)",
                headers.len()
            )))
        }
        ResponseColumn::Name(name) => headers
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::Data(format!("response column {name:?} not found in header")))?,
    };

    let mut rows = Vec::new();
    let mut response = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::Data(format!(
                "ragged row {}: expected {expected_len} fields, found {len}",
                r + 1
            )),
            _ => Error::Csv(e),
        })?;
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (c, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                row: r + 1,
                column: headers[c].clone(),
                value: field.to_string(),
            })?;
            if c == response_idx {
                response.push(value);
            } else {
                row.push(value);
            }
        }
        rows.push(row);
    }
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(c, _)| *c != response_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let data = Dataset::from_rows(&rows, &response)?.with_column_names(names)?;
    if standardize {
        data.standardize()
    } else {
        Ok(data)
    }
}

/// `Ω̂ = XᵀX / n`, exactly symmetric.
pub fn gram_matrix(d: &Dataset) -> DMatrix<f64> {
    let mut g = d.design().tr_mul(d.design()) / d.n() as f64;
    g.fill_lower_triangle_with_upper_triangle();
    g
}

/// A coefficient vector `β ∈ ℝᵖ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector(pub DVector<f64>);

impl CoefficientVector {
    pub fn zeros(p: usize) -> Self {
        Self(DVector::zeros(p))
    }

    pub fn from_slice(values: &[f64]) -> Self {
        Self(DVector::from_column_slice(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of nonzero entries.
    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|v| **v != 0.0).count()
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

impl From<DVector<f64>> for CoefficientVector {
    fn from(v: DVector<f64>) -> Self {
        Self(v)
    }
}

impl std::ops::Index<usize> for CoefficientVector {
    type Output = f64;
    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

/// An equal-tailed interval for coefficient `coefficient_index`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CredibleInterval {
    pub lower: f64,
    pub upper: f64,
    /// Nominal level `1 - α`.
    pub level: f64,
    pub coefficient_index: usize,
}

impl CredibleInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

impl fmt::Display for CredibleInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "β[{}] ∈ [{:.4}, {:.4}] ({:.0}%)",
            self.coefficient_index,
            self.lower,
            self.upper,
            self.level * 100.0
        )
    }
}

/// Writes a JSON value to `path`, pretty-printed.
pub(crate) fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut file = File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

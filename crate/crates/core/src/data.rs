//! Dataset ingestion, response standardization and group re-indexing.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distributions::RngStream;
use crate::error::{Error, Result};

/// Affine map between raw and standardized response values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseTransform {
    pub center: f64,
    pub scale: f64,
}

impl ResponseTransform {
    pub const IDENTITY: Self = Self {
        center: 0.0,
        scale: 1.0,
    };

    pub fn apply(&self, raw: f64) -> f64 {
        (raw - self.center) / self.scale
    }

    pub fn invert(&self, scaled: f64) -> f64 {
        scaled * self.scale + self.center
    }
}

/// Z-score a vector using the population standard deviation (divisor `n`).
pub fn standardize(raw: &[f64], name: &str) -> Result<(Vec<f64>, ResponseTransform)> {
    if raw.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} has non-finite values")));
    }
    let n = raw.len() as f64;
    let center = raw.iter().sum::<f64>() / n;
    let var = raw.iter().map(|v| (v - center).powi(2)).sum::<f64>() / n;
    let scale = var.sqrt();
    if !(scale > 0.0) || scale <= center.abs() * 1e-14 {
        return Err(Error::Constant(name.to_string()));
    }
    let transform = ResponseTransform { center, scale };
    Ok((raw.iter().map(|&v| transform.apply(v)).collect(), transform))
}

/// Bidirectional map between raw group labels and dense indices `0..J`.
///
/// Indices are assigned in order of first appearance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelTable {
    labels: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl LabelTable {
    pub fn from_labels<S: AsRef<str>>(raw: &[S]) -> (Self, Vec<usize>) {
        let mut table = LabelTable::default();
        let dense = raw.iter().map(|s| table.intern(s.as_ref())).collect();
        (table, dense)
    }

    pub fn from_names(labels: Vec<String>) -> Self {
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Self { labels, index }
    }

    fn intern(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), i);
        i
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        if self.index.len() != self.labels.len() {
            // deserialized without the index
            return self.labels.iter().position(|l| l == label);
        }
        self.index.get(label).copied()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Rebuild the reverse index after deserialization.
    pub fn reindex(&mut self) {
        *self = Self::from_names(std::mem::take(&mut self.labels));
    }
}

/// Sorted distinct values of one covariate plus each row's rank among them.
#[derive(Clone, Debug)]
struct ColumnIndex {
    uniques: Vec<f64>,
    ranks: Vec<u32>,
}

impl ColumnIndex {
    fn build(column: &[f64]) -> Self {
        let mut uniques = column.to_vec();
        uniques.sort_by(f64::total_cmp);
        uniques.dedup();
        let ranks = column
            .iter()
            .map(|v| uniques.partition_point(|u| u < v) as u32)
            .collect();
        Self { uniques, ranks }
    }
}

/// Covariates, standardized response and dense group indices.
#[derive(Clone, Debug)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    covariate_names: Vec<String>,
    response: Vec<f64>,
    response_name: String,
    group: Vec<usize>,
    labels: LabelTable,
    transform: ResponseTransform,
    index: Vec<ColumnIndex>,
}

impl Dataset {
    /// Build from raw inputs, standardizing the response.
    ///
    /// `columns` is column-major: `columns[var][row]`.
    pub fn from_raw<S: AsRef<str>>(
        covariate_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        response_name: &str,
        raw_response: &[f64],
        group_labels: &[S],
    ) -> Result<Self> {
        let (response, transform) = standardize(raw_response, response_name)?;
        let (labels, group) = LabelTable::from_labels(group_labels);
        Self::from_parts(
            covariate_names,
            columns,
            response_name.to_string(),
            response,
            group,
            labels,
            transform,
        )
    }

    /// Build from an already-standardized response and dense groups.
    pub fn from_parts(
        covariate_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        response_name: String,
        response: Vec<f64>,
        group: Vec<usize>,
        labels: LabelTable,
        transform: ResponseTransform,
    ) -> Result<Self> {
        let n = response.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if columns.is_empty() {
            return Err(Error::Dimension("at least one covariate is required".into()));
        }
        if covariate_names.len() != columns.len() {
            return Err(Error::Dimension(format!(
                "{} covariate names for {} columns",
                covariate_names.len(),
                columns.len()
            )));
        }
        for (name, col) in covariate_names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::Dimension(format!(
                    "covariate `{name}` has {} rows, response has {n}",
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteCell {
                    row: row + 1,
                    column: name.clone(),
                });
            }
        }
        if let Some(row) = response.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCell {
                row: row + 1,
                column: response_name,
            });
        }
        if group.len() != n {
            return Err(Error::Dimension(format!(
                "group has {} rows, response has {n}",
                group.len()
            )));
        }
        if labels.is_empty() || group.iter().any(|&g| g >= labels.len()) {
            return Err(Error::Dimension("group index outside the label table".into()));
        }
        if !(transform.scale > 0.0) {
            return Err(Error::InvalidParameter("response scale must be positive".into()));
        }
        let index = columns.iter().map(|c| ColumnIndex::build(c)).collect();
        Ok(Self {
            columns,
            covariate_names,
            response,
            response_name,
            group,
            labels,
            transform,
            index,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.response.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.columns.len()
    }

    pub fn n_groups(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn value(&self, row: usize, var: usize) -> f64 {
        self.columns[var][row]
    }

    pub fn column(&self, var: usize) -> &[f64] {
        &self.columns[var]
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn raw_response(&self) -> Vec<f64> {
        self.response.iter().map(|&v| self.transform.invert(v)).collect()
    }

    pub fn groups(&self) -> &[usize] {
        &self.group
    }

    pub fn labels(&self) -> &LabelTable {
        &self.labels
    }

    pub fn transform(&self) -> ResponseTransform {
        self.transform
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn response_name(&self) -> &str {
        &self.response_name
    }

    /// `present[j]` is true when group `j` has at least one row.
    pub fn groups_present(&self) -> Vec<bool> {
        let mut present = vec![false; self.n_groups()];
        for &g in &self.group {
            present[g] = true;
        }
        present
    }

    /// Sorted distinct values of covariate `var` across all rows.
    pub fn unique_values(&self, var: usize) -> &[f64] {
        &self.index[var].uniques
    }

    /// Rank of `row`'s value among [`Self::unique_values`] of `var`.
    #[inline]
    pub fn rank(&self, row: usize, var: usize) -> u32 {
        self.index[var].ranks[row]
    }

    /// A new dataset holding `rows` in the given order. Labels and the
    /// response transform are kept, so indices stay comparable.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let pick = |v: &[f64]| rows.iter().map(|&r| v[r]).collect::<Vec<_>>();
        Self::from_parts(
            self.covariate_names.clone(),
            self.columns.iter().map(|c| pick(c)).collect(),
            self.response_name.clone(),
            pick(&self.response),
            rows.iter().map(|&r| self.group[r]).collect(),
            self.labels.clone(),
            self.transform,
        )
    }

    /// Write the dataset (raw response scale) with columns
    /// `response, covariates..., group`.
    pub fn write_csv(&self, path: &Path, group_name: &str) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header = vec![self.response_name.clone()];
        header.extend(self.covariate_names.iter().cloned());
        header.push(group_name.to_string());
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.n_rows() {
            let mut rec = vec![format!("{}", self.transform.invert(self.response[i]))];
            rec.extend(self.columns.iter().map(|c| format!("{}", c[i])));
            rec.push(self.labels.label(self.group[i]).to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// A header-plus-rows CSV held as strings.
#[derive(Clone, Debug)]
pub struct CsvTable {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let headers = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            rows.push(rec.map_err(csv_err)?.iter().map(str::to_string).collect());
        }
        Ok(Self { headers, rows })
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.headers.iter().any(|h| h == name)
    }

    fn position(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn strings(&self, name: &str) -> Result<Vec<String>> {
        let at = self.position(name)?;
        Ok(self.rows.iter().map(|r| r[at].clone()).collect())
    }

    /// Parse a column as finite reals; row numbers in errors are 1-based
    /// data rows (the header is row 0).
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let at = self.position(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let cell = &r[at];
                let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                    row: i + 1,
                    column: name.to_string(),
                    value: cell.clone(),
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFiniteCell {
                        row: i + 1,
                        column: name.to_string(),
                    })
                }
            })
            .collect()
    }
}

/// Read a CSV and build a [`Dataset`] with a standardized response.
pub fn ingest_csv<S: AsRef<str>>(
    path: &Path,
    response_col: &str,
    group_col: &str,
    covariate_cols: &[S],
) -> Result<Dataset> {
    let table = CsvTable::read(path)?;
    dataset_from_table(&table, response_col, group_col, covariate_cols)
}

pub fn dataset_from_table<S: AsRef<str>>(
    table: &CsvTable,
    response_col: &str,
    group_col: &str,
    covariate_cols: &[S],
) -> Result<Dataset> {
    let response = table.numbers(response_col)?;
    let groups = table.strings(group_col)?;
    let columns = covariate_cols
        .iter()
        .map(|c| table.numbers(c.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    if response.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::from_raw(
        covariate_cols.iter().map(|c| c.as_ref().to_string()).collect(),
        columns,
        response_col,
        &response,
        &groups,
    )
}

/// Split rows into training and test sets: every row of a held-out group
/// goes to test, then `fraction` of the remaining rows (rounded) is moved
/// to test by a seeded shuffle. Both returned lists are sorted.
pub fn holdout_split(
    dataset: &Dataset,
    holdout_groups: &[usize],
    fraction: f64,
    rng: &mut RngStream,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!(
            "holdout fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let (mut test, mut rest): (Vec<usize>, Vec<usize>) =
        (0..dataset.n_rows()).partition(|&i| holdout_groups.contains(&dataset.groups()[i]));
    shuffle(&mut rest, rng);
    let moved = (fraction * rest.len() as f64).round() as usize;
    test.extend(rest.drain(..moved));
    if rest.is_empty() {
        return Err(Error::InvalidParameter("holdout leaves no training rows".into()));
    }
    rest.sort_unstable();
    test.sort_unstable();
    Ok((rest, test))
}

/// Fisher-Yates shuffle driven by the crate's stream type.
pub fn shuffle<T>(items: &mut [T], rng: &mut RngStream) {
    for i in (1..items.len()).rev() {
        let j = crate::distributions::uniform_index(i + 1, rng);
        items.swap(i, j);
    }
}

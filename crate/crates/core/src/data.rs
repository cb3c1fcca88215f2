//! Raw regression data, CSV ingestion and unit-hypersphere standardization.
//!
//! Fitting always happens on a [`StandardizedDataset`]: every retained
//! predictor column is centred and scaled to unit Euclidean norm, and the
//! response is centred but not rescaled. [`StandardizedDataset::destandardize`]
//! maps fitted coefficients back to the original units together with an
//! intercept.

use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{PedError, Result};

/// Columns whose centred norm falls below this are treated as constant.
pub const ZERO_VARIANCE_NORM: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct RawDataset {
    x: Array2<f64>,
    y: Array1<f64>,
    column_names: Option<Vec<String>>,
}

impl RawDataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>, column_names: Option<Vec<String>>) -> Result<Self> {
        let (n, p) = x.dim();
        if n < 2 {
            return Err(PedError::InvalidData(format!("need at least 2 observations, got {n}")));
        }
        if p < 1 {
            return Err(PedError::InvalidData("need at least one predictor".into()));
        }
        if y.len() != n {
            return Err(PedError::DimensionMismatch { expected: n, found: y.len() });
        }
        if let Some(names) = &column_names {
            if names.len() != p {
                return Err(PedError::DimensionMismatch { expected: p, found: names.len() });
            }
        }
        if let Some(((i, j), _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(PedError::NonFinite(format!("X[{i}, {j}]")));
        }
        if let Some((i, _)) = y.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(PedError::NonFinite(format!("Y[{i}]")));
        }
        Ok(Self { x, y, column_names })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    /// Name of raw column `j`, falling back to `x{j}` when the data had no header.
    pub fn column_name(&self, j: usize) -> String {
        match &self.column_names {
            Some(names) => names[j].clone(),
            None => format!("x{j}"),
        }
    }

    /// Centre the response, centre every column and scale it to unit norm.
    ///
    /// Zero-variance columns are dropped and listed in `dropped_columns`.
    pub fn standardize(&self) -> Result<StandardizedDataset> {
        let (n, p) = self.x.dim();
        let mut retained = Vec::with_capacity(p);
        let mut dropped = Vec::new();
        let mut means = Vec::with_capacity(p);
        let mut scales = Vec::with_capacity(p);
        let mut columns: Vec<Array1<f64>> = Vec::with_capacity(p);

        for (j, col) in self.x.axis_iter(Axis(1)).enumerate() {
            let mean = col.sum() / n as f64;
            let centred = col.mapv(|v| v - mean);
            let norm = centred.dot(&centred).sqrt();
            if norm < ZERO_VARIANCE_NORM {
                dropped.push(j);
                continue;
            }
            retained.push(j);
            means.push(mean);
            scales.push(norm);
            columns.push(centred / norm);
        }
        if retained.is_empty() {
            return Err(PedError::EmptyDesign);
        }

        let mut x = Array2::zeros((n, retained.len()));
        for (k, col) in columns.into_iter().enumerate() {
            x.column_mut(k).assign(&col);
        }
        let y_mean = self.y.sum() / n as f64;
        let y = self.y.mapv(|v| v - y_mean);

        Ok(StandardizedDataset {
            x,
            y,
            col_means: Array1::from(means),
            col_scales: Array1::from(scales),
            y_mean,
            retained,
            dropped_columns: dropped,
            raw_p: p,
        })
    }
}

/// Design on the unit hypersphere plus the metadata needed to undo the transform.
#[derive(Debug, Clone)]
pub struct StandardizedDataset {
    x: Array2<f64>,
    y: Array1<f64>,
    col_means: Array1<f64>,
    col_scales: Array1<f64>,
    y_mean: f64,
    retained: Vec<usize>,
    dropped_columns: Vec<usize>,
    raw_p: usize,
}

impl StandardizedDataset {
    /// Wrap data that is already centred with unit-norm columns.
    ///
    /// Used by constructed test instances; the invariants are checked to 1e-8.
    pub fn from_standardized(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let (n, p) = x.dim();
        if y.len() != n {
            return Err(PedError::DimensionMismatch { expected: n, found: y.len() });
        }
        for (j, col) in x.axis_iter(Axis(1)).enumerate() {
            let norm = col.dot(&col).sqrt();
            if col.sum().abs() > 1e-8 || (norm - 1.0).abs() > 1e-8 {
                return Err(PedError::InvalidData(format!(
                    "column {j} is not centred with unit norm"
                )));
            }
        }
        if y.sum().abs() > 1e-8 * (1.0 + y.dot(&y).sqrt()) {
            return Err(PedError::InvalidData("response is not centred".into()));
        }
        Ok(Self {
            x,
            y,
            col_means: Array1::zeros(p),
            col_scales: Array1::ones(p),
            y_mean: 0.0,
            retained: (0..p).collect(),
            dropped_columns: Vec::new(),
            raw_p: p,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of retained (standardized) columns.
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Column count of the raw data, including dropped columns.
    pub fn raw_p(&self) -> usize {
        self.raw_p
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn col_means(&self) -> ArrayView1<'_, f64> {
        self.col_means.view()
    }

    pub fn col_scales(&self) -> ArrayView1<'_, f64> {
        self.col_scales.view()
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    /// Raw index of each standardized column.
    pub fn retained_columns(&self) -> &[usize] {
        &self.retained
    }

    pub fn dropped_columns(&self) -> &[usize] {
        &self.dropped_columns
    }

    pub fn problem(&self) -> Problem<'_> {
        Problem { x: self.x.view(), y: self.y.view() }
    }

    /// Map standardized coefficients to raw-scale coefficients (length `raw_p`) and an intercept.
    pub fn destandardize(&self, beta_std: ArrayView1<'_, f64>) -> Result<(Array1<f64>, f64)> {
        if beta_std.len() != self.p() {
            return Err(PedError::DimensionMismatch { expected: self.p(), found: beta_std.len() });
        }
        let mut beta_raw = Array1::zeros(self.raw_p);
        let mut intercept = self.y_mean;
        for (k, &raw_j) in self.retained.iter().enumerate() {
            let b = beta_std[k] / self.col_scales[k];
            beta_raw[raw_j] = b;
            intercept -= self.col_means[k] * b;
        }
        Ok((beta_raw, intercept))
    }
}

/// Borrowed view of a design matrix and response, the unit every solver works on.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub x: ArrayView2<'a, f64>,
    pub y: ArrayView1<'a, f64>,
}

impl<'a> Problem<'a> {
    pub fn new(x: ArrayView2<'a, f64>, y: ArrayView1<'a, f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(PedError::DimensionMismatch { expected: x.nrows(), found: y.len() });
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Column-wise inner products with the response, `x_jᵀY`.
    pub fn correlations(&self) -> Array1<f64> {
        self.x.t().dot(&self.y)
    }
}

/// Selects the response column of a CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResponseColumn {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for ResponseColumn {
    type Err = std::convert::Infallible;

    /// A bare non-negative integer is an index, anything else a name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ResponseColumn::Index(i),
            Err(_) => ResponseColumn::Name(s.to_string()),
        })
    }
}

impl std::fmt::Display for ResponseColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResponseColumn::Name(name) => write!(f, "{name}"),
            ResponseColumn::Index(i) => write!(f, "#{i}"),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, response: &ResponseColumn) -> Result<RawDataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, response)
}

/// Parse comma-separated data with a header row.
pub fn read_csv<R: Read>(reader: R, response: &ResponseColumn) -> Result<RawDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| PedError::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(PedError::Csv("file is empty or has no header".into()));
    }
    let response_idx = match response {
        ResponseColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PedError::ResponseNotFound(name.clone()))?,
        ResponseColumn::Index(i) if *i < headers.len() => *i,
        ResponseColumn::Index(i) => return Err(PedError::ResponseNotFound(format!("index {i}"))),
    };

    let width = headers.len();
    let mut values: Vec<f64> = Vec::new();
    let mut ys = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { pos, expected_len, len } => PedError::RaggedRow {
                line: pos.as_ref().map_or(0, |p| p.line()),
                expected: *expected_len as usize,
                found: *len as usize,
            },
            _ => PedError::Csv(e.to_string()),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        for (k, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| PedError::NonNumericCell {
                line,
                column: headers[k].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(PedError::NonFinite(format!("line {line}, column '{}'", headers[k])));
            }
            if k == response_idx {
                ys.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let n = ys.len();
    if n == 0 {
        return Err(PedError::Csv("no data rows".into()));
    }
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != response_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let x = Array2::from_shape_vec((n, width - 1), values)
        .map_err(|e| PedError::InvalidData(e.to_string()))?;
    RawDataset::new(x, Array1::from(ys), Some(names))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn standardizes_simple_column() {
        let raw = RawDataset::new(array![[1.0], [2.0], [3.0]], array![1.0, 2.0, 6.0], None).unwrap();
        let ds = raw.standardize().unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((ds.x()[[0, 0]] + s).abs() < 1e-15);
        assert!(ds.x()[[1, 0]].abs() < 1e-15);
        assert!((ds.x()[[2, 0]] - s).abs() < 1e-15);
        assert_eq!(ds.y().to_vec(), vec![-2.0, -1.0, 3.0]);
        assert_eq!(ds.y_mean(), 3.0);
    }

    #[test]
    fn drops_constant_column() {
        let raw = RawDataset::new(
            array![[5.0, 1.0], [5.0, 2.0], [5.0, 4.0]],
            array![1.0, 2.0, 3.0],
            None,
        )
        .unwrap();
        let ds = raw.standardize().unwrap();
        assert_eq!(ds.dropped_columns(), &[0]);
        assert_eq!(ds.retained_columns(), &[1]);
        assert_eq!(ds.p(), 1);
        assert_eq!(ds.raw_p(), 2);
    }

    #[test]
    fn all_constant_is_empty_design() {
        let raw = RawDataset::new(array![[5.0], [5.0]], array![1.0, 2.0], None).unwrap();
        assert!(matches!(raw.standardize(), Err(PedError::EmptyDesign)));
    }

    #[test]
    fn rejects_non_finite_and_short_data() {
        assert!(matches!(
            RawDataset::new(array![[1.0], [f64::NAN]], array![1.0, 2.0], None),
            Err(PedError::NonFinite(_))
        ));
        assert!(RawDataset::new(array![[1.0]], array![1.0], None).is_err());
        assert!(RawDataset::new(array![[1.0], [2.0]], array![1.0], None).is_err());
    }

    #[test]
    fn destandardize_zero_and_single_column() {
        let raw = RawDataset::new(array![[1.0], [2.0], [4.0]], array![1.0, 2.0, 6.0], None).unwrap();
        let ds = raw.standardize().unwrap();
        let (b, c) = ds.destandardize(array![0.0].view()).unwrap();
        assert_eq!(b[0], 0.0);
        assert_eq!(c, 3.0);
        let (b, _) = ds.destandardize(array![2.5].view()).unwrap();
        assert!((b[0] - 2.5 / ds.col_scales()[0]).abs() < 1e-15);
        assert!(ds.destandardize(array![1.0, 2.0].view()).is_err());
    }

    #[test]
    fn csv_parses_and_reports_errors() {
        let text = "a,y,b\n1,2,3\n4,5,6.5\n7,8,9\n";
        let raw = read_csv(text.as_bytes(), &ResponseColumn::Name("y".into())).unwrap();
        assert_eq!((raw.n(), raw.p()), (3, 2));
        assert_eq!(raw.column_names().unwrap(), &["a".to_string(), "b".to_string()]);
        assert_eq!(raw.y().to_vec(), vec![2.0, 5.0, 8.0]);
        assert_eq!(raw.x()[[1, 1]], 6.5);

        let by_index = read_csv(text.as_bytes(), &ResponseColumn::Index(0)).unwrap();
        assert_eq!(by_index.y().to_vec(), vec![1.0, 4.0, 7.0]);

        let na = "a,y\n1,2\nNA,3\n";
        match read_csv(na.as_bytes(), &ResponseColumn::Name("y".into())) {
            Err(PedError::NonNumericCell { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, "a");
            }
            other => panic!("unexpected {other:?}"),
        }

        let missing = read_csv(text.as_bytes(), &ResponseColumn::Name("z".into()));
        assert!(matches!(missing, Err(PedError::ResponseNotFound(_))));
        assert!(missing.unwrap_err().to_string().contains("response column not found"));

        let ragged = "a,y\n1,2\n3\n";
        assert!(matches!(
            read_csv(ragged.as_bytes(), &ResponseColumn::Name("y".into())),
            Err(PedError::RaggedRow { line: 3, .. })
        ));

        assert!(read_csv("".as_bytes(), &ResponseColumn::Index(0)).is_err());
    }

    #[test]
    fn response_column_from_str() {
        assert_eq!("3".parse::<ResponseColumn>().unwrap(), ResponseColumn::Index(3));
        assert_eq!("y".parse::<ResponseColumn>().unwrap(), ResponseColumn::Name("y".into()));
    }
}

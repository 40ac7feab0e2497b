//! Test-suite ingestion and the numeric primitives shared by every
//! downstream stage: min-max normalization and Pearson correlation.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("file '{0}' contains no data rows")]
    EmptyFile(String),
    #[error("outcome column '{0}' not found in header")]
    MissingOutcomeColumn(String),
    #[error("duplicate scenario id '{id}' at line {line}")]
    DuplicateScenarioId { id: String, line: u64 },
    #[error("non-numeric value '{value}' at line {line}, column '{column}'")]
    NonNumericCell {
        value: String,
        line: u64,
        column: String,
    },
    #[error("non-finite value at line {line}, column '{column}'")]
    NonFiniteCell { line: u64, column: String },
    #[error("unrecognized outcome value '{value}' at line {line} (expected a number, fail/unsafe or pass/safe)")]
    BadOutcome { value: String, line: u64 },
    #[error("header must contain an id column, at least one feature and the outcome column")]
    TooFewColumns,
    #[error("row at line {line} has {got} fields, expected {expected}")]
    RaggedRow { line: u64, got: usize, expected: usize },
    #[error("scenario count mismatch: {ids} ids, {rows} feature rows, {outcomes} outcomes")]
    LengthMismatch {
        ids: usize,
        rows: usize,
        outcomes: usize,
    },
    #[error("correlation requires at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("lower bound exceeds upper bound for feature index {0}")]
    InvalidBounds(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// An immutable test suite: one row per scenario, one column per feature,
/// plus a binary pass/fail outcome per scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSuite {
    scenario_ids: Vec<String>,
    features: DMatrix<f64>,
    outcomes: Vec<u8>,
    feature_names: Vec<String>,
}

impl TestSuite {
    pub fn new(
        scenario_ids: Vec<String>,
        features: DMatrix<f64>,
        outcomes: Vec<u8>,
        feature_names: Vec<String>,
    ) -> Result<Self, DatasetError> {
        if scenario_ids.len() != features.nrows() || scenario_ids.len() != outcomes.len() {
            return Err(DatasetError::LengthMismatch {
                ids: scenario_ids.len(),
                rows: features.nrows(),
                outcomes: outcomes.len(),
            });
        }
        let mut seen = HashSet::new();
        for (i, id) in scenario_ids.iter().enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(DatasetError::DuplicateScenarioId {
                    id: id.clone(),
                    line: i as u64 + 2,
                });
            }
        }
        for (r, row) in features.row_iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(DatasetError::NonFiniteCell {
                        line: r as u64 + 2,
                        column: feature_names
                            .get(c)
                            .cloned()
                            .unwrap_or_else(|| format!("#{c}")),
                    });
                }
            }
        }
        debug_assert!(outcomes.iter().all(|&y| y <= 1));
        debug_assert_eq!(feature_names.len(), features.ncols());
        Ok(Self {
            scenario_ids,
            features,
            outcomes,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.scenario_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenario_ids.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn scenario_ids(&self) -> &[String] {
        &self.scenario_ids
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn outcomes(&self) -> &[u8] {
        &self.outcomes
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn bug_count(&self) -> usize {
        self.outcomes.iter().filter(|&&y| y == 1).count()
    }

    /// One raw feature column as an owned vector.
    pub fn column(&self, idx: usize) -> Vec<f64> {
        self.features.column(idx).iter().copied().collect()
    }

    /// Sub-suite keeping only the given feature columns (same scenarios).
    pub fn select_features(&self, indices: &[usize]) -> TestSuite {
        let cols: Vec<f64> = indices
            .iter()
            .flat_map(|&c| self.features.column(c).iter().copied().collect::<Vec<_>>())
            .collect();
        let features = DMatrix::from_vec(self.len(), indices.len(), cols);
        TestSuite {
            scenario_ids: self.scenario_ids.clone(),
            features,
            outcomes: self.outcomes.clone(),
            feature_names: indices.iter().map(|&c| self.feature_names[c].clone()).collect(),
        }
    }

    /// Sub-suite keeping only the given scenario rows.
    pub fn select_rows(&self, indices: &[usize]) -> TestSuite {
        let mut data = Vec::with_capacity(indices.len() * self.n_features());
        for c in 0..self.n_features() {
            let col = self.features.column(c);
            data.extend(indices.iter().map(|&r| col[r]));
        }
        TestSuite {
            scenario_ids: indices.iter().map(|&r| self.scenario_ids[r].clone()).collect(),
            features: DMatrix::from_vec(indices.len(), self.n_features(), data),
            outcomes: indices.iter().map(|&r| self.outcomes[r]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// CSV serialization using shortest round-trip float formatting, so
    /// `load_suite` on the output reproduces feature values bit-exactly.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str("id");
        for name in &self.feature_names {
            out.push(',');
            out.push_str(name);
        }
        out.push_str(",outcome\n");
        for r in 0..self.len() {
            out.push_str(&self.scenario_ids[r]);
            for c in 0..self.n_features() {
                let _ = write!(out, ",{}", self.features[(r, c)]);
            }
            let _ = write!(out, ",{}\n", self.outcomes[r]);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), DatasetError> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Observed per-feature min/max, the default boundary bounds.
    pub fn observed_bounds(&self) -> FeatureBounds {
        let n = self.n_features();
        let mut lower = vec![f64::INFINITY; n];
        let mut upper = vec![f64::NEG_INFINITY; n];
        for c in 0..n {
            for v in self.features.column(c).iter() {
                lower[c] = lower[c].min(*v);
                upper[c] = upper[c].max(*v);
            }
        }
        FeatureBounds { lower, upper }
    }
}

/// Per-feature lower/upper bounds in raw feature units.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeatureBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl FeatureBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, DatasetError> {
        for i in 0..lower.len().min(upper.len()) {
            if lower[i] > upper[i] {
                return Err(DatasetError::InvalidBounds(i));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn n_features(&self) -> usize {
        self.lower.len()
    }
}

/// Symmetric matrix of pairwise Pearson coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    values: DMatrix<f64>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
}

/// Load a suite from CSV. The first column is the scenario id; the named
/// outcome column supplies pass/fail; every other column is a feature.
///
/// Outcome coercion: numeric values map to 1 when > 0, else 0; the literals
/// `fail`/`unsafe` map to 1 and `pass`/`safe` to 0, case-insensitively.
pub fn load_suite(path: &Path, outcome_column: &str) -> Result<TestSuite, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if headers.len() < 3 {
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Err(DatasetError::EmptyFile(path.display().to_string()));
        }
        return Err(DatasetError::TooFewColumns);
    }
    let outcome_idx = headers
        .iter()
        .position(|h| h == outcome_column)
        .ok_or_else(|| DatasetError::MissingOutcomeColumn(outcome_column.to_string()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != 0 && i != outcome_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&i| i != 0 && i != outcome_idx)
        .collect();

    let mut ids = Vec::new();
    let mut outcomes = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(DatasetError::RaggedRow {
                line,
                got: record.len(),
                expected: headers.len(),
            });
        }
        let id = record[0].trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(DatasetError::DuplicateScenarioId { id, line });
        }
        let mut row = Vec::with_capacity(feature_idx.len());
        for (&col, name) in feature_idx.iter().zip(&feature_names) {
            let cell = record[col].trim();
            let v: f64 = cell.parse().map_err(|_| DatasetError::NonNumericCell {
                value: cell.to_string(),
                line,
                column: name.clone(),
            })?;
            if !v.is_finite() {
                return Err(DatasetError::NonFiniteCell {
                    line,
                    column: name.clone(),
                });
            }
            row.push(v);
        }
        outcomes.push(coerce_outcome(record[outcome_idx].trim(), line)?);
        ids.push(id);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DatasetError::EmptyFile(path.display().to_string()));
    }
    let ncols = feature_idx.len();
    let nrows = rows.len();
    let mut data = Vec::with_capacity(nrows * ncols);
    for c in 0..ncols {
        data.extend(rows.iter().map(|r| r[c]));
    }
    TestSuite::new(ids, DMatrix::from_vec(nrows, ncols, data), outcomes, feature_names)
}

fn coerce_outcome(cell: &str, line: u64) -> Result<u8, DatasetError> {
    if let Ok(v) = cell.parse::<f64>() {
        return Ok(u8::from(v > 0.0));
    }
    match cell.to_ascii_lowercase().as_str() {
        "fail" | "unsafe" => Ok(1),
        "pass" | "safe" => Ok(0),
        _ => Err(DatasetError::BadOutcome {
            value: cell.to_string(),
            line,
        }),
    }
}

/// Rescale each column to [0, 1]; a constant column maps to all zeros.
pub fn minmax_normalize(matrix: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = matrix.clone();
    for mut col in out.column_iter_mut() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in col.iter() {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        let range = hi - lo;
        if range > 0.0 {
            for v in col.iter_mut() {
                *v = (*v - lo) / range;
            }
        } else {
            col.fill(0.0);
        }
    }
    out
}

/// Mean and population standard deviation of one column.
pub(crate) fn column_mean_std(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Pearson coefficient of two equal-length slices; 0 when either is constant.
pub(crate) fn pearson(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Pairwise Pearson correlation of all columns. Pairs involving a constant
/// column are defined as 0, which also zeroes that column's diagonal entry.
pub fn pearson_correlation(matrix: &DMatrix<f64>) -> Result<CorrelationMatrix, DatasetError> {
    if matrix.nrows() < 2 {
        return Err(DatasetError::TooFewRows(matrix.nrows()));
    }
    let m = matrix.ncols();
    let cols: Vec<Vec<f64>> = (0..m)
        .map(|c| matrix.column(c).iter().copied().collect())
        .collect();
    let constant: Vec<bool> = cols.iter().map(|c| column_mean_std(c).1 == 0.0).collect();
    let mut values = DMatrix::zeros(m, m);
    for i in 0..m {
        if !constant[i] {
            values[(i, i)] = 1.0;
        }
        for j in (i + 1)..m {
            let r = if constant[i] || constant[j] {
                0.0
            } else {
                pearson(&cols[i], &cols[j]).clamp(-1.0, 1.0)
            };
            values[(i, j)] = r;
            values[(j, i)] = r;
        }
    }
    Ok(CorrelationMatrix { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_basic_suite() {
        let f = write_temp("id,speed,angle,failed\ns1,10,0.5,0\ns2,20,1.5,1\ns3,30,2.5,fail\n");
        let suite = load_suite(f.path(), "failed").unwrap();
        assert_eq!(suite.len(), 3);
        assert_eq!(suite.n_features(), 2);
        assert_eq!(suite.feature_names(), &["speed", "angle"]);
        assert_eq!(suite.outcomes(), &[0, 1, 1]);
        assert_eq!(suite.features()[(2, 0)], 30.0);
    }

    #[test]
    fn duplicate_id_is_an_error() {
        let f = write_temp("id,a,b,y\ns1,1,2,0\ns1,3,4,1\n");
        let err = load_suite(f.path(), "y").unwrap_err();
        match err {
            DatasetError::DuplicateScenarioId { id, .. } => assert_eq!(id, "s1"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn missing_outcome_column_is_an_error() {
        let f = write_temp("id,a,b,y\ns1,1,2,0\n");
        let err = load_suite(f.path(), "outcome").unwrap_err();
        assert!(matches!(err, DatasetError::MissingOutcomeColumn(_)));
    }

    #[test]
    fn non_numeric_cell_reports_location() {
        let f = write_temp("id,a,b,y\ns1,1,2,0\ns2,oops,4,1\n");
        let err = load_suite(f.path(), "y").unwrap_err();
        match err {
            DatasetError::NonNumericCell { value, line, column } => {
                assert_eq!(value, "oops");
                assert_eq!(line, 3);
                assert_eq!(column, "a");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let f = write_temp("id,a,b,y\n");
        assert!(matches!(
            load_suite(f.path(), "y").unwrap_err(),
            DatasetError::EmptyFile(_)
        ));
    }

    #[test]
    fn outcome_literals_and_negatives() {
        let f = write_temp("id,a,b,y\ns1,1,2,UNSAFE\ns2,3,4,PASS\ns3,5,6,-2\ns4,7,8,0.5\n");
        let suite = load_suite(f.path(), "y").unwrap();
        assert_eq!(suite.outcomes(), &[1, 0, 0, 1]);
    }

    #[test]
    fn minmax_endpoints_and_constant() {
        let m = DMatrix::from_vec(3, 2, vec![0.0, 5.0, 10.0, 3.0, 3.0, 3.0]);
        let n = minmax_normalize(&m);
        assert_eq!(n.column(0).as_slice(), &[0.0, 0.5, 1.0]);
        assert_eq!(n.column(1).as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn minmax_single_row() {
        let m = DMatrix::from_vec(1, 2, vec![7.0, 2.0]);
        let n = minmax_normalize(&m);
        assert_eq!(n.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn minmax_is_idempotent() {
        let m = DMatrix::from_vec(4, 2, vec![1.0, -3.0, 9.5, 2.0, 0.0, 0.1, 0.7, 0.3]);
        let once = minmax_normalize(&m);
        let twice = minmax_normalize(&once);
        assert_eq!(once, twice);
    }

    #[test]
    fn pearson_known_values() {
        let m = DMatrix::from_vec(
            4,
            3,
            vec![
                1.0, 2.0, 3.0, 4.0, // x
                1.0, 3.0, 2.0, 4.0, // y
                -1.0, -2.0, -3.0, -4.0, // -x
            ],
        );
        let corr = pearson_correlation(&m).unwrap();
        assert_eq!(corr.get(0, 0), 1.0);
        assert!((corr.get(0, 1) - 0.8).abs() < 1e-12);
        assert!((corr.get(0, 2) + 1.0).abs() < 1e-12);
        // symmetric
        assert_eq!(corr.get(1, 0), corr.get(0, 1));
    }

    #[test]
    fn pearson_constant_column_is_zero() {
        let m = DMatrix::from_vec(3, 2, vec![1.0, 2.0, 3.0, 5.0, 5.0, 5.0]);
        let corr = pearson_correlation(&m).unwrap();
        assert_eq!(corr.get(0, 1), 0.0);
        assert_eq!(corr.get(1, 1), 0.0);
    }

    #[test]
    fn pearson_needs_two_rows() {
        let m = DMatrix::from_vec(1, 2, vec![1.0, 2.0]);
        assert!(pearson_correlation(&m).is_err());
    }

    #[test]
    fn correlation_affine_invariance() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x: Vec<f64> = (0..40).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..40).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let a = rng.gen_range(0.1..9.0);
            let b = rng.gen_range(-5.0..5.0);
            let xt: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            assert!((pearson(&x, &y) - pearson(&xt, &y)).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let f = write_temp("id,a,b,y\ns1,0.1,2.5e-3,0\ns2,-7.25,0.3333333333333333,1\n");
        let suite = load_suite(f.path(), "y").unwrap();
        let g = write_temp(&suite.to_csv_string());
        let reloaded = load_suite(g.path(), "outcome").unwrap();
        assert_eq!(suite.features(), reloaded.features());
        assert_eq!(suite.outcomes(), reloaded.outcomes());
        assert_eq!(suite.scenario_ids(), reloaded.scenario_ids());
    }
}

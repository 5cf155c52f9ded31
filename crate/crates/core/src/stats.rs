//! Distribution comparison and disentanglement statistics: the linear-time
//! MMD two-sample test, partial correlations between attributes and latent
//! codes, and the mutual information gap.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("table is invalid: {0}")]
    InvalidTable(String),
    #[error("need at least 4 paired samples, got {0}")]
    TooFewSamples(usize),
    #[error("column `{0}` has zero variance")]
    DegenerateColumn(String),
    #[error("column sets differ: {0:?} vs {1:?}")]
    ColumnMismatch(Vec<String>, Vec<String>),
    #[error("row counts differ: {0} vs {1}")]
    RowMismatch(usize, usize),
    #[error("covariance for attribute `{attribute}` is singular; near-collinear columns: {columns:?}")]
    SingularCovariance {
        attribute: String,
        columns: Vec<String>,
    },
    #[error("attribute `{0}` has zero entropy")]
    DegenerateAttribute(String),
}

/// `N x D` real-valued table stored by column.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeTable {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl AttributeTable {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        if names.len() != columns.len() {
            return Err(StatsError::InvalidTable(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if columns.is_empty() {
            return Err(StatsError::InvalidTable("no columns".into()));
        }
        let n = columns[0].len();
        if n < 2 {
            return Err(StatsError::InvalidTable(format!("need at least 2 rows, got {n}")));
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(StatsError::InvalidTable(format!(
                    "column `{name}` has {} rows, expected {n}",
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(StatsError::InvalidTable(format!(
                    "column `{name}` row {i} is not finite"
                )));
            }
        }
        Ok(Self { names, columns })
    }

    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self, StatsError> {
        let d = names.len();
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(StatsError::InvalidTable(format!("row {i} does not have {d} fields")));
        }
        let columns = (0..d).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Self::new(names, columns)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Keeps the first `n` rows.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c[..n.min(c.len())].to_vec()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeKind {
    Continuous,
    Categorical(usize),
    Binary,
}

/// Latent codes, each column tagged with its kind.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeTable {
    names: Vec<String>,
    kinds: Vec<CodeKind>,
    columns: Vec<Vec<f64>>,
}

impl CodeTable {
    pub fn new(names: Vec<String>, kinds: Vec<CodeKind>, columns: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        if names.len() != kinds.len() || names.len() != columns.len() {
            return Err(StatsError::InvalidTable("names, kinds and columns differ in length".into()));
        }
        let n = columns.first().map_or(0, Vec::len);
        for ((name, kind), col) in names.iter().zip(&kinds).zip(&columns) {
            if col.len() != n {
                return Err(StatsError::InvalidTable(format!("code `{name}` has {} rows, expected {n}", col.len())));
            }
            let ok = |v: f64| match *kind {
                CodeKind::Continuous => v.is_finite(),
                CodeKind::Categorical(k) => v >= 0.0 && v < k as f64 && v.fract() == 0.0,
                CodeKind::Binary => v == 0.0 || v == 1.0,
            };
            if let Some(i) = col.iter().position(|&v| !ok(v)) {
                return Err(StatsError::InvalidTable(format!(
                    "code `{name}` row {i} holds {} which is not valid for {kind:?}",
                    col[i]
                )));
            }
        }
        Ok(Self {
            names,
            kinds,
            columns,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kinds(&self) -> &[CodeKind] {
        &self.kinds
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation with the `N - 1` denominator.
fn sample_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Scott's rule per dimension: `N^(-1/(D+4)) * std_d`.
pub fn scott_bandwidths(table: &AttributeTable) -> Result<Vec<f64>, StatsError> {
    let n = table.n_rows() as f64;
    let factor = n.powf(-1.0 / (table.n_cols() as f64 + 4.0));
    table
        .names()
        .iter()
        .zip(table.columns())
        .map(|(name, col)| {
            let sd = sample_std(col);
            if sd > 0.0 {
                Ok(factor * sd)
            } else {
                Err(StatsError::DegenerateColumn(name.clone()))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MMDTestResult {
    /// Linear-time estimate of squared MMD.
    pub statistic: f64,
    pub std_error: f64,
    /// One-sided normal p-value for the alternative MMD² > 0.
    pub p_value: f64,
    /// Per-dimension kernel bandwidth `sqrt(σ_X² + σ_Y²)`.
    pub bandwidths: Vec<f64>,
    /// Samples used from each table.
    pub n: usize,
}

/// Linear-time MMD test with a Gaussian product kernel.
///
/// Both tables are truncated to the same even length `n`; consecutive rows
/// form disjoint pairs. Per pair,
/// `h = (k(x1, x2) + k(y1, y2)) - (k(x1, y2) + k(x2, y1))`, and the statistic
/// is the mean of `h` with its standard error from the sample variance. The
/// squared bandwidth of each dimension is the sum of the two tables' squared
/// Scott bandwidths.
pub fn mmd_linear_test(x: &AttributeTable, y: &AttributeTable) -> Result<MMDTestResult, StatsError> {
    if x.names() != y.names() {
        return Err(StatsError::ColumnMismatch(x.names().to_vec(), y.names().to_vec()));
    }
    let n = 2 * (x.n_rows().min(y.n_rows()) / 2);
    if n < 4 {
        return Err(StatsError::TooFewSamples(n));
    }
    let bx = scott_bandwidths(x)?;
    let by = scott_bandwidths(y)?;
    let inv_two_var: Vec<f64> = bx
        .iter()
        .zip(&by)
        .map(|(a, b)| 1.0 / (2.0 * (a * a + b * b)))
        .collect();
    let d = x.n_cols();
    let kernel = |ta: &AttributeTable, i: usize, tb: &AttributeTable, j: usize| {
        let mut e = 0.0;
        for k in 0..d {
            let diff = ta.column(k)[i] - tb.column(k)[j];
            e += diff * diff * inv_two_var[k];
        }
        (-e).exp()
    };
    let m = n / 2;
    let h: Vec<f64> = (0..m)
        .map(|i| {
            let (a, b) = (2 * i, 2 * i + 1);
            (kernel(x, a, x, b) + kernel(y, a, y, b)) - (kernel(x, a, y, b) + kernel(x, b, y, a))
        })
        .collect();
    let statistic = mean(&h);
    let std_error = sample_std(&h) / (m as f64).sqrt();
    let p_value = if std_error > 0.0 {
        0.5 * libm::erfc(statistic / std_error / std::f64::consts::SQRT_2)
    } else if statistic > 0.0 {
        0.0
    } else {
        1.0
    };
    Ok(MMDTestResult {
        statistic,
        std_error,
        p_value,
        bandwidths: bx.iter().zip(&by).map(|(a, b)| (a * a + b * b).sqrt()).collect(),
        n,
    })
}

/// Codes with categorical columns replaced by one-hot dummies.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedCodes {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    /// Index of the original code each expanded column came from.
    pub source: Vec<usize>,
    /// Whether each expanded column is a categorical dummy.
    pub is_dummy: Vec<bool>,
}

impl ExpandedCodes {
    /// Expanded column indices belonging to original code `code`.
    pub fn group(&self, code: usize) -> Vec<usize> {
        (0..self.names.len()).filter(|&j| self.source[j] == code).collect()
    }
}

/// Continuous and binary codes pass through; a categorical(K) code named
/// `c` becomes K indicator columns named `c=0` .. `c=K-1`.
pub fn dummy_expand(codes: &CodeTable) -> ExpandedCodes {
    let mut out = ExpandedCodes {
        names: Vec::new(),
        columns: Vec::new(),
        source: Vec::new(),
        is_dummy: Vec::new(),
    };
    for (j, (name, kind)) in codes.names().iter().zip(codes.kinds()).enumerate() {
        let col = codes.column(j);
        match *kind {
            CodeKind::Categorical(k) => {
                for level in 0..k {
                    out.names.push(format!("{name}={level}"));
                    out.columns.push(col.iter().map(|&v| f64::from(v == level as f64)).collect());
                    out.source.push(j);
                    out.is_dummy.push(true);
                }
            }
            CodeKind::Continuous | CodeKind::Binary => {
                out.names.push(name.clone());
                out.columns.push(col.to_vec());
                out.source.push(j);
                out.is_dummy.push(false);
            }
        }
    }
    out
}

/// Partial correlations, rows = attributes, columns = expanded codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialCorrTable {
    pub attributes: Vec<String>,
    pub codes: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl PartialCorrTable {
    pub fn get(&self, attribute: usize, code: usize) -> f64 {
        self.values[attribute][code]
    }
}

fn correlation_matrix(columns: &[&[f64]]) -> Vec<Vec<f64>> {
    let p = columns.len();
    let n = columns[0].len();
    let centred: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            let m = mean(c);
            c.iter().map(|v| v - m).collect()
        })
        .collect();
    let mut cov = vec![vec![0.0; p]; p];
    for a in 0..p {
        for b in a..p {
            let s: f64 = centred[a].iter().zip(&centred[b]).map(|(u, v)| u * v).sum();
            cov[a][b] = s / (n - 1) as f64;
            cov[b][a] = cov[a][b];
        }
    }
    let sd: Vec<f64> = (0..p).map(|a| cov[a][a].sqrt()).collect();
    for a in 0..p {
        for b in 0..p {
            cov[a][b] /= sd[a] * sd[b];
        }
    }
    cov
}

/// Pivot below which a correlation matrix is treated as singular.
const SINGULAR_PIVOT: f64 = 1e-10;

enum Cholesky {
    Factor(Vec<Vec<f64>>),
    /// Column `k` is (nearly) a linear combination of the earlier ones, with
    /// the listed nonzero coefficients.
    Singular { column: usize, partners: Vec<usize> },
}

fn cholesky(a: &[Vec<f64>]) -> Cholesky {
    let p = a.len();
    let mut l = vec![vec![0.0; p]; p];
    for k in 0..p {
        for i in 0..k {
            let s: f64 = (0..i).map(|t| l[k][t] * l[i][t]).sum();
            l[k][i] = (a[k][i] - s) / l[i][i];
        }
        let pivot = a[k][k] - (0..k).map(|t| l[k][t] * l[k][t]).sum::<f64>();
        if pivot < SINGULAR_PIVOT {
            // regression coefficients of column k on columns 0..k: solve L' b = L[k][..k]
            let mut beta = l[k][..k].to_vec();
            for i in (0..k).rev() {
                let s: f64 = (i + 1..k).map(|t| l[t][i] * beta[t]).sum();
                beta[i] = (beta[i] - s) / l[i][i];
            }
            let partners = (0..k).filter(|&i| beta[i].abs() > 1e-6).collect();
            return Cholesky::Singular { column: k, partners };
        }
        l[k][k] = pivot.sqrt();
    }
    Cholesky::Factor(l)
}

/// Entries `(0, 0)`, `(0, t)` and `(t, t)` of the inverse, from a Cholesky factor.
fn inverse_entries(l: &[Vec<f64>], t: usize) -> (f64, f64, f64) {
    let p = l.len();
    // column j of the inverse solves L L' x = e_j
    let solve = |j: usize| {
        let mut z = vec![0.0; p];
        for i in 0..p {
            let s: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
            z[i] = (f64::from(i == j) - s) / l[i][i];
        }
        let mut x = vec![0.0; p];
        for i in (0..p).rev() {
            let s: f64 = (i + 1..p).map(|k| l[k][i] * x[k]).sum();
            x[i] = (z[i] - s) / l[i][i];
        }
        x
    };
    let c0 = solve(0);
    let ct = solve(t);
    (c0[0], c0[t], ct[t])
}

/// Partial correlation of each attribute with each expanded code, holding the
/// remaining codes fixed.
///
/// Controls are every other code, with each categorical code represented by
/// all of its dummies but the last. For a dummy of categorical code `g`, the
/// other dummies of `g` are left out of the controls.
pub fn partial_correlations(y: &AttributeTable, codes: &CodeTable) -> Result<PartialCorrTable, StatsError> {
    if y.n_rows() != codes.n_rows() {
        return Err(StatsError::RowMismatch(y.n_rows(), codes.n_rows()));
    }
    let expanded = dummy_expand(codes);
    for (name, col) in expanded.names.iter().zip(&expanded.columns) {
        if sample_std(col) == 0.0 {
            return Err(StatsError::DegenerateColumn(name.clone()));
        }
    }
    for (name, col) in y.names().iter().zip(y.columns()) {
        if sample_std(col) == 0.0 {
            return Err(StatsError::DegenerateColumn(name.clone()));
        }
    }
    // variable 0.. are attributes, then expanded codes
    let a = y.n_cols();
    let mut all: Vec<&[f64]> = y.columns().iter().map(Vec::as_slice).collect();
    all.extend(expanded.columns.iter().map(Vec::as_slice));
    let corr = correlation_matrix(&all);
    let var_name = |v: usize| {
        if v < a {
            y.names()[v].clone()
        } else {
            expanded.names[v - a].clone()
        }
    };

    // the last dummy of each categorical code is the reference level
    let is_reference = |e: usize| {
        expanded.is_dummy[e]
            && (e + 1 == expanded.names.len() || expanded.source[e + 1] != expanded.source[e])
    };

    let mut values = vec![vec![0.0; expanded.names.len()]; a];
    for (j, row) in values.iter_mut().enumerate() {
        for (target, entry) in row.iter_mut().enumerate() {
            let controls = (0..expanded.names.len()).filter(|&e| {
                e != target
                    && if expanded.is_dummy[target] && expanded.source[e] == expanded.source[target] {
                        false
                    } else {
                        !is_reference(e)
                    }
            });
            let vars: Vec<usize> = [j, a + target]
                .into_iter()
                .chain(controls.map(|e| a + e))
                .collect();
            let sub: Vec<Vec<f64>> = vars
                .iter()
                .map(|&u| vars.iter().map(|&v| corr[u][v]).collect())
                .collect();
            match cholesky(&sub) {
                Cholesky::Factor(l) => {
                    let (p00, p0t, ptt) = inverse_entries(&l, 1);
                    *entry = (-p0t / (p00 * ptt).sqrt()).clamp(-1.0, 1.0);
                }
                Cholesky::Singular { column, partners } => {
                    let mut columns: Vec<String> = partners.iter().map(|&i| var_name(vars[i])).collect();
                    columns.push(var_name(vars[column]));
                    return Err(StatsError::SingularCovariance {
                        attribute: y.names()[j].clone(),
                        columns,
                    });
                }
            }
        }
    }
    Ok(PartialCorrTable {
        attributes: y.names().to_vec(),
        codes: expanded.names,
        values,
    })
}

/// Equal-frequency bin index of each value. Tied values share the bin of
/// their lowest rank, so the binning depends only on the ordering.
pub fn equal_frequency_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let bin = (start * bins / n).min(bins - 1);
        for &i in &order[start..end] {
            out[i] = bin;
        }
        start = end;
    }
    out
}

fn counts<T: Ord + Copy>(xs: impl Iterator<Item = T>) -> BTreeMap<T, u64> {
    let mut map = BTreeMap::new();
    for x in xs {
        *map.entry(x).or_insert(0) += 1;
    }
    map
}

/// Plug-in entropy in nats.
pub fn entropy(labels: &[usize]) -> f64 {
    let n = labels.len() as u64;
    counts(labels.iter().copied())
        .values()
        .map(|&c| c as f64 / n as f64 * (n as f64 / c as f64).ln())
        .sum()
}

/// Plug-in mutual information in nats between two discrete label sequences.
pub fn mutual_information(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as u64;
    let ca = counts(a.iter().copied());
    let cb = counts(b.iter().copied());
    let joint = counts(a.iter().copied().zip(b.iter().copied()));
    joint
        .iter()
        .map(|(&(u, v), &c)| {
            let num = (c * n) as f64;
            let den = (ca[&u] * cb[&v]) as f64;
            c as f64 / n as f64 * (num / den).ln()
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MIGReport {
    pub attributes: Vec<String>,
    pub codes: Vec<String>,
    pub per_attribute: Vec<f64>,
    pub overall: f64,
    /// `mutual_information[j][i]`: I(attribute j; code i) in nats.
    pub mutual_information: Vec<Vec<f64>>,
    pub entropies: Vec<f64>,
    pub bins: usize,
    pub binning: String,
}

fn discretise_code(codes: &CodeTable, i: usize, bins: usize) -> Vec<usize> {
    match codes.kinds()[i] {
        CodeKind::Continuous => equal_frequency_bins(codes.column(i), bins),
        CodeKind::Categorical(_) | CodeKind::Binary => {
            codes.column(i).iter().map(|&v| v as usize).collect()
        }
    }
}

/// Mutual information gap per attribute: the difference between the two
/// largest code informations divided by the attribute entropy, clipped to
/// `[0, 1]`. Attributes and continuous codes are binned by equal frequency.
pub fn mig(y: &AttributeTable, codes: &CodeTable, bins: usize) -> Result<MIGReport, StatsError> {
    if y.n_rows() != codes.n_rows() {
        return Err(StatsError::RowMismatch(y.n_rows(), codes.n_rows()));
    }
    if bins == 0 {
        return Err(StatsError::InvalidTable("bin count must be positive".into()));
    }
    let code_bins: Vec<Vec<usize>> = (0..codes.n_cols()).map(|i| discretise_code(codes, i, bins)).collect();
    let mut per_attribute = Vec::with_capacity(y.n_cols());
    let mut mi_matrix = Vec::with_capacity(y.n_cols());
    let mut entropies = Vec::with_capacity(y.n_cols());
    for (name, col) in y.names().iter().zip(y.columns()) {
        let yb = equal_frequency_bins(col, bins);
        let h = entropy(&yb);
        if h <= 0.0 {
            return Err(StatsError::DegenerateAttribute(name.clone()));
        }
        let mis: Vec<f64> = code_bins.iter().map(|cb| mutual_information(&yb, cb)).collect();
        let mut sorted = mis.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let first = sorted.first().copied().unwrap_or(0.0);
        let second = sorted.get(1).copied().unwrap_or(0.0);
        per_attribute.push(((first - second) / h).clamp(0.0, 1.0));
        mi_matrix.push(mis);
        entropies.push(h);
    }
    let overall = mean(&per_attribute);
    Ok(MIGReport {
        attributes: y.names().to_vec(),
        codes: codes.names().to_vec(),
        per_attribute,
        overall,
        mutual_information: mi_matrix,
        entropies,
        bins,
        binning: "equal-frequency, ties share the bin of their lowest rank".into(),
    })
}

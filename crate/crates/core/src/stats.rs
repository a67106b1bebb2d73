//! Nonparametric comparison of several algorithms over a common set of
//! problem instances: average ranks, the Friedman test with tie correction,
//! Nemenyi all-pairs comparisons and Bonferroni-adjusted Wilcoxon
//! signed-rank tests.

use std::fmt::{self, Write as _};
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("incomplete result matrix: {0}")]
    IncompleteMatrix(String),
    #[error("samples have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for StatsError {
    fn from(e: csv::Error) -> Self {
        StatsError::Csv(e.to_string())
    }
}

/// Which measurement a batch CSV column holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Ofv,
    Time,
}

impl Measure {
    pub fn suffix(self) -> &'static str {
        match self {
            Measure::Ofv => "_ofv",
            Measure::Time => "_time",
        }
    }
}

impl FromStr for Measure {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ofv" => Ok(Measure::Ofv),
            "time" => Ok(Measure::Time),
            _ => Err(StatsError::Csv(format!("unknown measure `{s}`"))),
        }
    }
}

/// Instances in rows, algorithms in columns. Lower is better.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultMatrix {
    ids: Vec<String>,
    labels: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl ResultMatrix {
    pub fn new(ids: Vec<String>, labels: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        if labels.len() < 2 {
            return Err(StatsError::IncompleteMatrix("need at least two columns".into()));
        }
        if values.len() < 2 {
            return Err(StatsError::IncompleteMatrix("need at least two rows".into()));
        }
        if ids.len() != values.len() {
            return Err(StatsError::IncompleteMatrix("row ids do not match rows".into()));
        }
        for (id, row) in ids.iter().zip(&values) {
            if row.len() != labels.len() {
                return Err(StatsError::IncompleteMatrix(format!("row `{id}` has {} cells", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(StatsError::IncompleteMatrix(format!("row `{id}` has a missing value")));
            }
        }
        Ok(Self { ids, labels, values })
    }

    /// Unnamed rows, for tests and programmatic use.
    pub fn from_rows(labels: &[&str], values: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        let ids = (1..=values.len()).map(|i| i.to_string()).collect();
        Self::new(ids, labels.iter().map(|s| s.to_string()).collect(), values)
    }

    /// Reads a CSV whose first column is the instance id.
    ///
    /// With `measure` set, only the columns whose header ends in `_ofv` or
    /// `_time` are kept (suffix stripped), which is the batch output layout.
    /// Without it, or when no column carries the suffix, every column after the
    /// id is used. Other columns such as `status` are ignored when a suffix
    /// matches.
    pub fn from_csv<R: Read>(reader: R, measure: Option<Measure>) -> Result<Self, StatsError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let mut columns: Vec<(usize, String)> = Vec::new();
        if let Some(m) = measure {
            for (i, h) in headers.iter().enumerate().skip(1) {
                if let Some(label) = h.strip_suffix(m.suffix()) {
                    columns.push((i, label.to_string()));
                }
            }
        }
        if columns.is_empty() {
            columns = headers.iter().enumerate().skip(1).map(|(i, h)| (i, h.to_string())).collect();
        }
        let mut ids = Vec::new();
        let mut values = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let id = record.get(0).unwrap_or_default().to_string();
            let mut row = Vec::with_capacity(columns.len());
            for (i, label) in &columns {
                let cell = record.get(*i).unwrap_or_default();
                let v: f64 = cell.parse().map_err(|_| {
                    StatsError::IncompleteMatrix(format!("row `{id}` column `{label}`: `{cell}` is not a number"))
                })?;
                row.push(v);
            }
            ids.push(id);
            values.push(row);
        }
        Self::new(ids, columns.into_iter().map(|(_, l)| l).collect(), values)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn num_rows(&self) -> usize {
        self.values.len()
    }

    pub fn num_cols(&self) -> usize {
        self.labels.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Reorders columns: new column `i` is old column `order[i]`.
    pub fn permute_columns(&self, order: &[usize]) -> Self {
        Self {
            ids: self.ids.clone(),
            labels: order.iter().map(|&j| self.labels[j].clone()).collect(),
            values: self.values.iter().map(|r| order.iter().map(|&j| r[j]).collect()).collect(),
        }
    }
}

/// Ranks 1..n ascending; tied values share the mean of their positions.
pub fn rank_with_ties(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = mean;
        }
        i = j + 1;
    }
    ranks
}

/// Sum of t^3 - t over the tie groups of `values`.
fn tie_term(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        total += t * t * t - t;
        i = j;
    }
    total
}

/// Within-row ranks.
pub fn average_ranks(matrix: &ResultMatrix) -> Vec<Vec<f64>> {
    matrix.values.iter().map(|r| rank_with_ties(r)).collect()
}

/// Column means of [`average_ranks`].
pub fn mean_ranks(matrix: &ResultMatrix) -> Vec<f64> {
    let ranks = average_ranks(matrix);
    let n = matrix.num_rows() as f64;
    (0..matrix.num_cols())
        .map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Friedman {
    pub chi2: f64,
    pub df: usize,
    pub p: f64,
}

/// Upper tail of the chi-squared distribution.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(df as f64 / 2.0, x / 2.0).clamp(0.0, 1.0)
}

pub fn friedman(matrix: &ResultMatrix) -> Friedman {
    let n = matrix.num_rows() as f64;
    let g = matrix.num_cols();
    let k = g as f64;
    let ranks = average_ranks(matrix);
    let sum_sq: f64 = (0..g)
        .map(|j| {
            let s: f64 = ranks.iter().map(|r| r[j]).sum();
            s * s
        })
        .sum();
    let ties: f64 = matrix.values.iter().map(|r| tie_term(r)).sum();
    let denom = 1.0 - ties / (n * k * (k * k - 1.0));
    let df = g - 1;
    if denom <= 1e-12 {
        return Friedman { chi2: 0.0, df, p: 1.0 };
    }
    let raw = 12.0 / (n * k * (k + 1.0)) * sum_sq - 3.0 * n * (k + 1.0);
    let chi2 = (raw / denom).max(0.0);
    Friedman {
        chi2,
        df,
        p: chi2_sf(chi2, df),
    }
}

fn upper_normal(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn lower_normal(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Probability mass of a standard normal on `[a, b]`.
fn normal_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        upper_normal(a) - upper_normal(b)
    } else if b <= 0.0 {
        lower_normal(b) - lower_normal(a)
    } else {
        1.0 - lower_normal(a) - upper_normal(b)
    }
}

/// `P(Q > q)` for the range of `k` independent standard normals (studentized
/// range with infinite degrees of freedom), by Simpson's rule.
pub fn studentized_range_sf(q: f64, k: usize) -> f64 {
    if q <= 0.0 || k < 2 {
        return 1.0;
    }
    let e = (k - 1) as i32;
    let integrand = |z: f64| {
        let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        phi * (lower_normal(z).powi(e) - normal_mass(z - q, z).powi(e))
    };
    let (a, b) = (-10.0, 10.0 + q);
    let steps = 4000;
    let h = (b - a) / steps as f64;
    let mut sum = integrand(a) + integrand(b);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * integrand(a + i as f64 * h);
    }
    (k as f64 * sum * h / 3.0).clamp(0.0, 1.0)
}

/// Critical value `q` with `P(Q > q) = alpha`.
pub fn studentized_range_quantile(alpha: f64, k: usize) -> f64 {
    let (mut lo, mut hi) = (0.0, 30.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if studentized_range_sf(mid, k) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Symmetric pairwise matrix; `None` on the diagonal.
pub type PairMatrix = Vec<Vec<Option<f64>>>;

fn pair_matrix(g: usize, mut f: impl FnMut(usize, usize) -> f64) -> PairMatrix {
    let mut m = vec![vec![None; g]; g];
    for i in 0..g {
        for j in i + 1..g {
            let p = f(i, j).clamp(0.0, 1.0);
            m[i][j] = Some(p);
            m[j][i] = Some(p);
        }
    }
    m
}

pub fn nemenyi(matrix: &ResultMatrix) -> PairMatrix {
    let g = matrix.num_cols();
    let n = matrix.num_rows() as f64;
    let k = g as f64;
    let r = mean_ranks(matrix);
    let se = (k * (k + 1.0) / (12.0 * n)).sqrt();
    pair_matrix(g, |i, j| studentized_range_sf((r[i] - r[j]).abs() / se, g))
}

/// Two-sided Wilcoxon signed-rank p-value for paired samples. Zero
/// differences are dropped; tied magnitudes share average ranks. Exact for up
/// to 25 nonzero differences, otherwise a normal approximation with tie
/// corrected variance and continuity correction.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(1.0);
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = rank_with_ties(&magnitudes);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    if n <= 25 {
        return Ok(exact_signed_rank_p(&ranks, w_plus));
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term(&magnitudes) / 48.0;
    if var <= 0.0 {
        return Ok(1.0);
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    Ok((2.0 * upper_normal(z)).min(1.0))
}

/// Exact null distribution of W+ over all sign patterns, using doubled ranks
/// so that average ranks stay integral.
fn exact_signed_rank_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    for &d in &doubled {
        for s in (d..=total).rev() {
            counts[s] += counts[s - d];
        }
    }
    let patterns = 2f64.powi(ranks.len() as i32);
    let w = (w_plus * 2.0).round() as usize;
    let lower: f64 = counts[..=w].iter().sum::<f64>() / patterns;
    let upper: f64 = counts[w..].iter().sum::<f64>() / patterns;
    (2.0 * lower.min(upper)).min(1.0)
}

/// Multiplies every p by `m`, capped at 1.
pub fn bonferroni_adjust(p: &PairMatrix, m: usize) -> PairMatrix {
    p.iter()
        .map(|row| row.iter().map(|v| v.map(|x| (x * m as f64).min(1.0))).collect())
        .collect()
}

/// Unadjusted pairwise Wilcoxon p-values between columns.
pub fn pairwise_wilcoxon(matrix: &ResultMatrix) -> PairMatrix {
    let cols: Vec<Vec<f64>> = (0..matrix.num_cols()).map(|j| matrix.column(j)).collect();
    pair_matrix(matrix.num_cols(), |i, j| {
        wilcoxon_signed_rank(&cols[i], &cols[j]).expect("columns have equal length")
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub labels: Vec<String>,
    pub row_ids: Vec<String>,
    pub ranks: Vec<Vec<f64>>,
    pub mean_ranks: Vec<f64>,
    pub friedman_chi2: f64,
    pub friedman_df: usize,
    pub friedman_p: f64,
    pub nemenyi_p: PairMatrix,
    pub wilcoxon_bonferroni_p: PairMatrix,
}

impl StatReport {
    pub fn compute(matrix: &ResultMatrix) -> Self {
        let g = matrix.num_cols();
        let f = friedman(matrix);
        Self {
            labels: matrix.labels.clone(),
            row_ids: matrix.ids.clone(),
            ranks: average_ranks(matrix),
            mean_ranks: mean_ranks(matrix),
            friedman_chi2: f.chi2,
            friedman_df: f.df,
            friedman_p: f.p,
            nemenyi_p: nemenyi(matrix),
            wilcoxon_bonferroni_p: bonferroni_adjust(&pairwise_wilcoxon(matrix), g * (g - 1) / 2),
        }
    }

    pub fn pair(&self, m: &PairMatrix, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        m[i][j]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    fn write_matrix(out: &mut String, labels: &[String], m: &PairMatrix) {
        let _ = write!(out, "{:>10}", "");
        for l in labels {
            let _ = write!(out, "{l:>12}");
        }
        out.push('\n');
        for (i, row) in m.iter().enumerate() {
            let _ = write!(out, "{:>10}", labels[i]);
            for v in row {
                match v {
                    Some(p) => {
                        let _ = write!(out, "{:>12}", format_p(*p));
                    }
                    None => {
                        let _ = write!(out, "{:>12}", "-");
                    }
                }
            }
            out.push('\n');
        }
    }
}

fn format_p(p: f64) -> String {
    if p == 0.0 || p >= 1e-3 {
        format!("{p:.3}")
    } else {
        format!("{p:.2e}")
    }
}

impl fmt::Display for StatReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "blocks (rows):        {}", self.row_ids.len());
        let _ = writeln!(out, "groups (columns):     {}", self.labels.len());
        let _ = writeln!(out, "Friedman chi-squared: {:.3}", self.friedman_chi2);
        let _ = writeln!(out, "df:                   {}", self.friedman_df);
        let _ = writeln!(out, "p-value:              {:.3e}", self.friedman_p);
        out.push_str("\nmean rank\n");
        for (l, r) in self.labels.iter().zip(&self.mean_ranks) {
            let _ = writeln!(out, "{l:>10}  {r:.4}");
        }
        out.push_str("\nNemenyi p-values\n");
        Self::write_matrix(&mut out, &self.labels, &self.nemenyi_p);
        out.push_str("\nWilcoxon signed-rank p-values (Bonferroni)\n");
        Self::write_matrix(&mut out, &self.labels, &self.wilcoxon_bonferroni_p);
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ABC: [&str; 3] = ["A", "B", "C"];

    #[test]
    fn ranks_with_ties() {
        assert_eq!(rank_with_ties(&[10.0, 20.0, 30.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(rank_with_ties(&[10.0, 10.0, 30.0]), vec![1.5, 1.5, 3.0]);
        assert_eq!(
            rank_with_ties(&[332321.0, 334136.0, 332321.0, 332321.0]),
            vec![2.0, 4.0, 2.0, 2.0]
        );
    }

    #[test]
    fn friedman_textbook() {
        let m = ResultMatrix::from_rows(&ABC, vec![vec![1.0, 2.0, 3.0]; 4]).unwrap();
        let f = friedman(&m);
        assert_eq!(f.chi2, 8.0);
        assert_eq!(f.df, 2);
        assert!((f.p - 0.01832).abs() < 1e-5);
    }

    #[test]
    fn friedman_all_tied() {
        let m = ResultMatrix::from_rows(&ABC, vec![vec![5.0; 3]; 3]).unwrap();
        assert_eq!(friedman(&m), Friedman { chi2: 0.0, df: 2, p: 1.0 });
    }

    #[test]
    fn identical_columns_give_unit_p() {
        let rows = vec![vec![1.0, 1.0, 4.0], vec![3.0, 3.0, 2.0], vec![7.0, 7.0, 1.0]];
        let m = ResultMatrix::from_rows(&ABC, rows).unwrap();
        assert_eq!(nemenyi(&m)[0][1], Some(1.0));
        assert_eq!(pairwise_wilcoxon(&m)[0][1], Some(1.0));
    }

    #[test]
    fn wilcoxon_exact_shift() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y: Vec<f64> = x.iter().map(|v| v + 10.0).collect();
        let p = wilcoxon_signed_rank(&x, &y).unwrap();
        assert!((p - 0.03125).abs() < 1e-15);
        assert_eq!(wilcoxon_signed_rank(&x, &x).unwrap(), 1.0);
        assert_eq!(
            wilcoxon_signed_rank(&x, &x[..3]),
            Err(StatsError::LengthMismatch(6, 3))
        );
    }

    #[test]
    fn wilcoxon_exact_with_ties() {
        // |d| = 1,1,2 with signs +,-,+ : doubled ranks 3,3,6, W+ = 4.5
        let p = wilcoxon_signed_rank(&[1.0, 0.0, 2.0], &[0.0, 1.0, 0.0]).unwrap();
        // W+ values over the 8 patterns: 0,1.5,1.5,3,3,4.5,4.5,6
        assert!((p - 2.0 * 3.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn wilcoxon_normal_branch() {
        let x: Vec<f64> = (0..40).map(f64::from).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v + if i % 3 == 0 { -1.0 } else { 2.0 }).collect();
        let p = wilcoxon_signed_rank(&x, &y).unwrap();
        assert!(p > 0.0 && p < 0.05);
    }

    #[test]
    fn bonferroni() {
        let m = vec![
            vec![None, Some(0.30), Some(0.001)],
            vec![Some(0.30), None, Some(1e-27)],
            vec![Some(0.001), Some(1e-27), None],
        ];
        let adj = bonferroni_adjust(&m, 6);
        assert_eq!(adj[0][1], Some(1.0));
        assert!((adj[0][2].unwrap() - 0.006).abs() < 1e-15);
        assert!((adj[1][2].unwrap() - 6e-27).abs() < 1e-40);
    }

    #[test]
    fn studentized_range_critical_values() {
        assert!((studentized_range_quantile(0.05, 4) - 3.633).abs() < 5e-4);
        assert!((studentized_range_quantile(0.05, 2) - 2.772).abs() < 5e-4);
        assert!((studentized_range_quantile(0.01, 3) - 4.120).abs() < 5e-4);
        assert_eq!(studentized_range_sf(0.0, 4), 1.0);
    }

    #[test]
    fn csv_layouts() {
        let plain = "id,A,B\nx,1,2\ny,3,1\n";
        let m = ResultMatrix::from_csv(plain.as_bytes(), Some(Measure::Ofv)).unwrap();
        assert_eq!(m.labels(), ["A", "B"]);
        let batch = "problem_id,A_ofv,B_ofv,A_time,B_time,status\nx,1,2,0.5,0.7,ok\ny,3,1,0.2,0.1,ok\n";
        let t = ResultMatrix::from_csv(batch.as_bytes(), Some(Measure::Time)).unwrap();
        assert_eq!(t.labels(), ["A", "B"]);
        assert_eq!(t.rows()[1], vec![0.2, 0.1]);
        let bad = "id,A,B\nx,1,\ny,3,1\n";
        assert!(matches!(
            ResultMatrix::from_csv(bad.as_bytes(), None),
            Err(StatsError::IncompleteMatrix(_))
        ));
    }

    #[test]
    fn report_json_round_trip() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![2.0, 1.0, 3.0], vec![1.0, 3.0, 2.0]];
        let m = ResultMatrix::from_rows(&ABC, rows).unwrap();
        let r = StatReport::compute(&m);
        let back = StatReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_string().contains("Nemenyi"));
    }

    fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (2usize..6, 2usize..12).prop_flat_map(|(g, n)| {
            prop::collection::vec(prop::collection::vec((0u8..6).prop_map(f64::from), g), n)
        })
    }

    proptest! {
        #[test]
        fn rank_rows_sum_to_triangle(rows in matrix_strategy()) {
            let g = rows[0].len();
            let labels: Vec<String> = (0..g).map(|j| format!("c{j}")).collect();
            let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
            let m = ResultMatrix::from_rows(&labels, rows).unwrap();
            for r in average_ranks(&m) {
                prop_assert_eq!(r.iter().sum::<f64>(), (g * (g + 1)) as f64 / 2.0);
            }
        }

        #[test]
        fn friedman_monotone_invariant(rows in matrix_strategy(), a in 0.1f64..5.0, b in -50.0f64..50.0) {
            let g = rows[0].len();
            let labels: Vec<String> = (0..g).map(|j| format!("c{j}")).collect();
            let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
            let mapped: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| a * v.powi(3) + b).collect()).collect();
            let m1 = ResultMatrix::from_rows(&labels, rows).unwrap();
            let m2 = ResultMatrix::from_rows(&labels, mapped).unwrap();
            prop_assert_eq!(friedman(&m1), friedman(&m2));
        }

        #[test]
        fn column_permutation_is_consistent(rows in matrix_strategy(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let g = rows[0].len();
            let labels: Vec<String> = (0..g).map(|j| format!("c{j}")).collect();
            let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
            let m = ResultMatrix::from_rows(&labels, rows).unwrap();
            let mut order: Vec<usize> = (0..g).collect();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let pm = m.permute_columns(&order);
            let (r, pr) = (StatReport::compute(&m), StatReport::compute(&pm));
            prop_assert!((r.friedman_chi2 - pr.friedman_chi2).abs() < 1e-9);
            for i in 0..g {
                for j in 0..g {
                    prop_assert_eq!(pr.nemenyi_p[i][j], r.nemenyi_p[order[i]][order[j]]);
                    prop_assert_eq!(pr.wilcoxon_bonferroni_p[i][j], r.wilcoxon_bonferroni_p[order[i]][order[j]]);
                    if let Some(p) = r.nemenyi_p[i][j] {
                        prop_assert!((0.0..=1.0).contains(&p));
                        prop_assert_eq!(r.nemenyi_p[j][i], Some(p));
                    }
                }
            }
        }
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::StatsError;

/// Series terms below this are dropped.
const SERIES_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d_stat: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Asymptotic Kolmogorov tail `Q(l) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 l^2)`,
/// clamped to [0, 1]. `Q(0) = 1`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    let mut k = 1.0f64;
    loop {
        let term = (-2.0 * k * k * lambda * lambda).exp();
        if term < SERIES_EPS {
            break;
        }
        sum += sign * term;
        sign = -sign;
        k += 1.0;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn sorted_finite(xs: &[f64]) -> Result<Vec<f64>, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if xs.iter().any(|x| x.is_nan()) {
        return Err(StatsError::NonFinite);
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, StatsError> {
    let a = sorted_finite(a)?;
    let b = sorted_finite(b)?;
    let (n1, n2) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    // Walk the merged support; both ECDFs are evaluated after all ties at v.
    while i < n1 && j < n2 {
        let v = a[i].min(b[j]);
        while i < n1 && a[i] <= v {
            i += 1;
        }
        while j < n2 && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let lambda = d * ((n1 * n2) as f64 / (n1 + n2) as f64).sqrt();
    Ok(KsResult {
        d_stat: d,
        p_value: kolmogorov_q(lambda),
        n1,
        n2,
    })
}

/// Rescales to [0, 1]; a constant series maps to all zeros.
pub fn min_max_scale(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 })
        .collect()
}

/// Pairwise tests; `cell(i, j)` is populated for `i < j` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsMatrix {
    pub names: Vec<String>,
    cells: Vec<Vec<Option<KsResult>>>,
}

impl KsMatrix {
    pub fn cell(&self, i: usize, j: usize) -> Option<&KsResult> {
        self.cells.get(i)?.get(j)?.as_ref()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Square p-value table, `---` on and below the diagonal.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (i, name) in self.names.iter().enumerate() {
            let mut row = vec![name.clone()];
            for j in 0..self.names.len() {
                row.push(match self.cell(i, j) {
                    Some(r) => format!("{:e}", r.p_value),
                    None => "---".to_string(),
                });
            }
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

pub fn ks_matrix(series: &[(String, Vec<f64>)]) -> Result<KsMatrix, StatsError> {
    let n = series.len();
    if n < 2 {
        return Err(StatsError::TooFewSeries(n));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let results = pairs
        .par_iter()
        .map(|&(i, j)| ks_two_sample(&series[i].1, &series[j].1))
        .collect::<Result<Vec<_>, _>>()?;
    let mut cells = vec![vec![None; n]; n];
    for ((i, j), r) in pairs.into_iter().zip(results) {
        cells[i][j] = Some(r);
    }
    Ok(KsMatrix {
        names: series.iter().map(|(name, _)| name.clone()).collect(),
        cells,
    })
}

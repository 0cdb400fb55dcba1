//! Power-law fitting with x-min selection by KS distance and a
//! loglikelihood-ratio comparison against a lognormal on the same tail.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::zeta::ln_hurwitz_zeta;
use super::StatsError;
use crate::specificity::Variant;

pub const MIN_SAMPLE: usize = 5;
const SIGMA_FLOOR: f64 = 1e-6;
const ALPHA_FLOOR: f64 = 1.0 + 1e-9;
const MIDPOINT_BIN_FROM: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub x_min: f64,
    /// Loglikelihood ratio, power law minus lognormal. Positive favours the power law.
    #[serde(rename = "R")]
    pub r: f64,
    /// Two-sided significance of the sign of `r`.
    pub p: f64,
    /// Observations at or above `x_min`; unknown for imported records.
    pub n_tail: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Support {
    Discrete,
    Continuous,
}

/// A tail `values[start..]` of the sorted sample with its fitted exponent.
struct Candidate {
    start: usize,
    alpha: f64,
    distance: f64,
}

pub fn fit_power_law(values: &[f64]) -> Result<PowerLawFit, StatsError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    if values.iter().any(|&v| v <= 0.0) {
        return Err(StatsError::NonPositive);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.len() < MIN_SAMPLE || sorted[0] == sorted[sorted.len() - 1] {
        return Err(StatsError::DegenerateSample);
    }
    let support = if sorted.iter().all(|v| v.fract() == 0.0) {
        Support::Discrete
    } else {
        Support::Continuous
    };

    // A tail with a single distinct value has no finite MLE.
    let last = sorted[sorted.len() - 1];
    let starts: Vec<usize> = (0..sorted.len())
        .filter(|&i| (i == 0 || sorted[i] != sorted[i - 1]) && sorted[i] < last)
        .collect();

    let best = starts
        .par_iter()
        .map(|&start| {
            let tail = &sorted[start..];
            let alpha = match support {
                Support::Discrete => discrete_alpha(tail),
                Support::Continuous => continuous_alpha(tail),
            };
            Candidate {
                start,
                alpha,
                distance: ks_distance(tail, alpha, support),
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .min_by(|a, b| {
            let key = |c: &Candidate| if c.distance.is_finite() { c.distance } else { f64::INFINITY };
            key(a)
                .total_cmp(&key(b))
                .then(a.start.cmp(&b.start))
        })
        .expect("at least one candidate tail");

    let tail = &sorted[best.start..];
    let (r, p) = compare_lognormal(tail, best.alpha, support);
    Ok(PowerLawFit {
        alpha: best.alpha,
        x_min: tail[0],
        r,
        p,
        n_tail: Some(tail.len()),
    })
}

/// Continuous MLE: `1 + n / sum ln(x / x_min)`.
pub fn continuous_alpha(tail: &[f64]) -> f64 {
    let x_min = tail[0];
    1.0 + tail.len() as f64 / grouped_log_sum(tail, x_min)
}

/// `sum ln(x / shift)` over a sorted sample, accumulated once per distinct
/// value. Repeating every observation k times scales the result by exactly k
/// for power-of-two k, which keeps fits invariant under duplication.
fn grouped_log_sum(sorted: &[f64], shift: f64) -> f64 {
    let mut sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        sum += (j - i) as f64 * (v / shift).ln();
        i = j;
    }
    sum
}

/// Per-observation loglikelihood of the discrete power law.
fn discrete_loglik(alpha: f64, mean_ln: f64, x_min: f64) -> f64 {
    -ln_hurwitz_zeta(alpha, x_min) - alpha * mean_ln
}

/// Discrete MLE, maximizing `-ln zeta(alpha, x_min) - alpha mean(ln x)`.
/// The objective is concave in alpha, so golden-section search is exact up to
/// its tolerance once the maximum is bracketed.
pub fn discrete_alpha(tail: &[f64]) -> f64 {
    let x_min = tail[0];
    let n = tail.len() as f64;
    let mean_ln = grouped_log_sum(tail, 1.0) / n;
    let f = |a: f64| discrete_loglik(a, mean_ln, x_min);

    // Start from the continuous approximation with half-integer correction.
    let denom = grouped_log_sum(tail, x_min - 0.5);
    let guess = (1.0 + n / denom).max(ALPHA_FLOOR + 0.01);
    let mut lo = (guess - 0.5).max(ALPHA_FLOOR);
    let mut hi = guess + 0.5;
    while lo > ALPHA_FLOOR && f(lo) > f(lo + 1e-6) {
        lo = (lo - 1.0).max(ALPHA_FLOOR);
    }
    while f(hi) > f(hi - 1e-6) && hi < 1e3 {
        hi += 1.0 + hi;
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > 1e-10 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Fitted CDF `P(X <= x)` for `x >= x_min`.
fn model_cdf(x: f64, x_min: f64, alpha: f64, support: Support, ln_zeta_min: f64) -> f64 {
    match support {
        Support::Discrete => -(ln_hurwitz_zeta(alpha, x + 1.0) - ln_zeta_min).exp_m1(),
        Support::Continuous => 1.0 - (x / x_min).powf(1.0 - alpha),
    }
}

/// Supremum over `x >= x_min` of |empirical CDF - fitted CDF|.
///
/// The empirical CDF is flat between consecutive distinct observations while
/// the model CDF rises, so the supremum on each flat stretch is attained at one
/// of its two ends.
pub fn ks_distance_for(tail: &[f64], alpha: f64, discrete: bool) -> f64 {
    let support = if discrete {
        Support::Discrete
    } else {
        Support::Continuous
    };
    ks_distance(tail, alpha, support)
}

fn ks_distance(tail: &[f64], alpha: f64, support: Support) -> f64 {
    let n = tail.len() as f64;
    let x_min = tail[0];
    let ln_zeta_min = match support {
        Support::Discrete => ln_hurwitz_zeta(alpha, x_min),
        Support::Continuous => 0.0,
    };
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < tail.len() {
        let v = tail[i];
        while i < tail.len() && tail[i] == v {
            i += 1;
        }
        let emp = i as f64 / n;
        d = d.max((emp - model_cdf(v, x_min, alpha, support, ln_zeta_min)).abs());
        if i < tail.len() {
            let before_next = match support {
                Support::Discrete => tail[i] - 1.0,
                Support::Continuous => tail[i],
            };
            d = d.max((emp - model_cdf(before_next, x_min, alpha, support, ln_zeta_min)).abs());
        }
    }
    d
}

/// Upper tail of the standard normal, `P(Z > z)`.
fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// `ln P(Z > z)`, with the asymptotic expansion where the tail underflows.
fn ln_normal_sf(z: f64) -> f64 {
    if z < 30.0 {
        return normal_sf(z).ln();
    }
    let z2 = z * z;
    -0.5 * z2 - (z * (2.0 * std::f64::consts::PI).sqrt()).ln() + (1.0 - 1.0 / z2 + 3.0 / (z2 * z2)).ln()
}

/// `P(a < Z <= b)` evaluated on the side that avoids cancellation.
fn normal_interval(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        normal_sf(a) - normal_sf(b)
    } else if b <= 0.0 {
        normal_sf(-b) - normal_sf(-a)
    } else {
        1.0 - normal_sf(b) - normal_sf(-a)
    }
}

fn compare_lognormal(tail: &[f64], alpha: f64, support: Support) -> (f64, f64) {
    let n = tail.len() as f64;
    let x_min = tail[0];
    let logs: Vec<f64> = tail.iter().map(|x| x.ln()).collect();
    let mu = logs.iter().sum::<f64>() / n;
    let sigma = (logs.iter().map(|l| (l - mu).powi(2)).sum::<f64>() / n)
        .sqrt()
        .max(SIGMA_FLOOR);
    let z = |x: f64| (x.ln() - mu) / sigma;

    let diffs: Vec<f64> = match support {
        Support::Discrete => {
            let log_zeta = ln_hurwitz_zeta(alpha, x_min);
            let log_norm = ln_normal_sf(z(x_min - 0.5));
            let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
            tail.iter()
                .zip(&logs)
                .map(|(&x, &lx)| {
                    let pl = -alpha * lx - log_zeta;
                    // Unit bins far out are too narrow to difference two CDFs;
                    // the midpoint density is exact to O(1/x^2) there.
                    let log_mass = if x >= MIDPOINT_BIN_FROM {
                        -lx - sigma.ln() - half_log_2pi - 0.5 * z(x).powi(2)
                    } else {
                        normal_interval(z(x - 0.5), z(x + 0.5)).max(f64::MIN_POSITIVE).ln()
                    };
                    pl - (log_mass - log_norm)
                })
                .collect()
        }
        Support::Continuous => {
            let log_norm = ln_normal_sf(z(x_min));
            let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
            tail.iter()
                .zip(&logs)
                .map(|(&x, &lx)| {
                    let pl = (alpha - 1.0).ln() - x_min.ln() - alpha * (x / x_min).ln();
                    let ln = -lx - sigma.ln() - half_log_2pi
                        - (lx - mu).powi(2) / (2.0 * sigma * sigma)
                        - log_norm;
                    pl - ln
                })
                .collect()
        }
    };

    let r: f64 = diffs.iter().sum();
    let mean = r / n;
    let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n).sqrt();
    let p = if sd > 0.0 {
        libm::erfc(r.abs() / ((2.0 * n).sqrt() * sd)).clamp(0.0, 1.0)
    } else {
        // No spread in the pointwise ratios: the direction cannot be tested.
        1.0
    };
    (r, p)
}

/// One row of the fit CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub corpus: String,
    pub variant: Variant,
    pub fit: PowerLawFit,
}

pub const FIT_CSV_HEADER: [&str; 7] = ["corpus", "variant", "alpha", "x_min", "R", "p", "n_tail"];

fn fixed6(v: f64) -> String {
    format!("{v:.6}")
}

pub fn write_fit_csv(records: &[FitRecord]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(FIT_CSV_HEADER).expect("in-memory write");
    for r in records {
        w.write_record([
            r.corpus.clone(),
            r.variant.to_string(),
            fixed6(r.fit.alpha),
            fixed6(r.fit.x_min),
            fixed6(r.fit.r),
            fixed6(r.fit.p),
            r.fit.n_tail.map(|n| n.to_string()).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn parse_fit_csv(text: &str) -> Result<Vec<FitRecord>, StatsError> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| StatsError::Csv(e.to_string()))?;
    if header.iter().ne(FIT_CSV_HEADER) {
        return Err(StatsError::Csv(format!(
            "expected header {}",
            FIT_CSV_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| StatsError::Csv(e.to_string()))?;
        let line = i + 2;
        let num = |k: usize| -> Result<f64, StatsError> {
            row[k]
                .parse::<f64>()
                .map_err(|e| StatsError::Csv(format!("line {line}, column {}: {e}", FIT_CSV_HEADER[k])))
        };
        let variant = row[1]
            .parse::<Variant>()
            .map_err(|e| StatsError::Csv(format!("line {line}: {e}")))?;
        let n_tail = match &row[6] {
            "" => None,
            s => Some(
                s.parse::<usize>()
                    .map_err(|e| StatsError::Csv(format!("line {line}, column n_tail: {e}")))?,
            ),
        };
        out.push(FitRecord {
            corpus: row[0].to_string(),
            variant,
            fit: PowerLawFit {
                alpha: num(2)?,
                x_min: num(3)?,
                r: num(4)?,
                p: num(5)?,
                n_tail,
            },
        });
    }
    Ok(out)
}

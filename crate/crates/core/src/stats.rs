//! Wilcoxon signed-rank test and regression metrics.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Largest sample size for which p-values are computed exactly.
pub const EXACT_MAX_N: usize = 20;

/// Largest sample size accepted by [`PValueMethod::Exact`].
pub const EXACT_LIMIT_N: usize = 24;

/// Minimum paired sample size considered meaningful.
pub const MIN_PAIRED_LEN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    TwoSided,
    /// `a` tends to be smaller than `b`.
    Less,
    /// `a` tends to be larger than `b`.
    Greater,
}

impl Alternative {
    pub fn name(self) -> &'static str {
        match self {
            Alternative::TwoSided => "two-sided",
            Alternative::Less => "less",
            Alternative::Greater => "greater",
        }
    }
}

/// How the p-value of [`wilcoxon_signed_rank_with`] is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PValueMethod {
    /// Exact up to [`EXACT_MAX_N`] non-zero differences, normal above.
    Auto,
    Exact,
    /// Normal approximation with tie and continuity correction.
    Normal,
}

/// Two matched samples, e.g. one metric of two models on the same folds.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSamples {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub label_a: String,
    pub label_b: String,
}

impl PairedSamples {
    pub fn new(a: Vec<f64>, b: Vec<f64>, label_a: impl Into<String>, label_b: impl Into<String>) -> Result<Self, Error> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch { what: "paired samples", expected: a.len(), got: b.len() });
        }
        Ok(Self { a, b, label_a: label_a.into(), label_b: label_b.into() })
    }

    /// Whether the sample is large enough for the test to be meaningful.
    pub fn is_adequate(&self) -> bool {
        self.a.len() >= MIN_PAIRED_LEN
    }

    pub fn wilcoxon(&self, alternative: Alternative) -> Result<WilcoxonResult, Error> {
        wilcoxon_signed_rank(&self.a, &self.b, alternative)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of the ranks of positive differences `a - b`.
    pub statistic: f64,
    /// Number of non-zero differences.
    pub n: usize,
    /// Zero differences dropped before ranking.
    pub zeros_dropped: usize,
    pub p_value: f64,
    pub exact: bool,
    pub alternative: Alternative,
}

/// Average ranks (1-based) of `|d|`, doubled so they are integers.
fn doubled_ranks(abs: &[f64]) -> Vec<u64> {
    let mut idx: Vec<usize> = (0..abs.len()).collect();
    idx.sort_by(|&i, &j| abs[i].total_cmp(&abs[j]));
    let mut ranks = vec![0u64; abs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && abs[idx[j + 1]] == abs[idx[i]] {
            j += 1;
        }
        // positions i..=j share the rank ((i+1) + (j+1)) / 2
        let doubled = (i + 1 + j + 1) as u64;
        for &k in &idx[i..=j] {
            ranks[k] = doubled;
        }
        i = j + 1;
    }
    ranks
}

/// Wilcoxon signed-rank test on the differences `a - b`.
///
/// Zero differences are dropped; ties share average ranks. With at most
/// [`EXACT_MAX_N`] non-zero differences the p-value is exact, obtained by
/// enumerating all sign assignments. Above, a normal approximation with tie
/// and continuity correction is used.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alternative: Alternative) -> Result<WilcoxonResult, Error> {
    wilcoxon_signed_rank_with(a, b, alternative, PValueMethod::Auto)
}

/// [`wilcoxon_signed_rank`] with an explicit p-value method.
pub fn wilcoxon_signed_rank_with(
    a: &[f64],
    b: &[f64],
    alternative: Alternative,
    method: PValueMethod,
) -> Result<WilcoxonResult, Error> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { what: "paired samples", expected: a.len(), got: b.len() });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let zeros_dropped = a.len() - diffs.len();
    if diffs.is_empty() {
        return Err(Error::UndefinedTest("all paired differences are zero".into()));
    }
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::UndefinedTest("non-finite paired difference".into()));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_ranks(&abs);
    let w2: u64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let n = diffs.len();
    let exact = match method {
        PValueMethod::Auto => n <= EXACT_MAX_N,
        PValueMethod::Exact if n > EXACT_LIMIT_N => {
            return Err(Error::UndefinedTest(format!("exact p-value limited to n ≤ {EXACT_LIMIT_N}, got {n}")));
        }
        PValueMethod::Exact => true,
        PValueMethod::Normal => false,
    };
    let (p_less, p_greater) = if exact {
        let counts = signed_rank_distribution(&ranks);
        let total = (1u64 << n) as f64;
        let le: u64 = counts[..=w2 as usize].iter().sum();
        let ge: u64 = counts[w2 as usize..].iter().sum();
        (le as f64 / total, ge as f64 / total)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut ties = 0.0;
        let mut sorted = ranks.clone();
        sorted.sort_unstable();
        for g in sorted.chunk_by(|x, y| x == y) {
            let t = g.len() as f64;
            ties += t * t * t - t;
        }
        let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0).sqrt();
        let w = w2 as f64 / 2.0;
        let p_less = normal_cdf((w - mean + 0.5) / sd);
        let p_greater = 1.0 - normal_cdf((w - mean - 0.5) / sd);
        (p_less, p_greater)
    };
    let p = match alternative {
        Alternative::Less => p_less,
        Alternative::Greater => p_greater,
        Alternative::TwoSided => (2.0 * p_less.min(p_greater)).min(1.0),
    };
    Ok(WilcoxonResult {
        statistic: w2 as f64 / 2.0,
        n,
        zeros_dropped,
        p_value: p,
        exact,
        alternative,
    })
}

/// Number of sign assignments producing each doubled rank sum, by walking
/// all `2^n` assignments in Gray-code order.
fn signed_rank_distribution(ranks: &[u64]) -> Vec<u64> {
    let max: u64 = ranks.iter().sum();
    let mut counts = vec![0u64; max as usize + 1];
    let n = ranks.len();
    let mut positive = vec![false; n];
    let mut w = 0u64;
    counts[0] += 1;
    for i in 1u64..(1u64 << n) {
        let bit = i.trailing_zeros() as usize;
        positive[bit] = !positive[bit];
        if positive[bit] {
            w += ranks[bit];
        } else {
            w -= ranks[bit];
        }
        counts[w as usize] += 1;
    }
    counts
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn check_lengths(pred: &[f64], target: &[f64]) -> Result<(), Error> {
    if pred.len() != target.len() {
        return Err(Error::DimensionMismatch { what: "predictions", expected: target.len(), got: pred.len() });
    }
    if target.len() < 2 {
        return Err(Error::UndefinedMetric("need at least two samples".into()));
    }
    Ok(())
}

pub fn rmse(pred: &[f64], target: &[f64]) -> Result<f64, Error> {
    check_lengths(pred, target)?;
    let s: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((s / pred.len() as f64).sqrt())
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r_squared(pred: &[f64], target: &[f64]) -> Result<f64, Error> {
    check_lengths(pred, target)?;
    let mean = target.iter().sum::<f64>() / target.len() as f64;
    let ss_tot: f64 = target.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot <= 0.0 {
        return Err(Error::UndefinedMetric("target variance is zero".into()));
    }
    let ss_res: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Absolute difference of two angles in degrees, on the circle: `[0, 180]`.
pub fn angle_error_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Mean absolute angular error in degrees; inputs in degrees.
pub fn mae_angle(pred: &[f64], target: &[f64]) -> Result<f64, Error> {
    check_lengths(pred, target)?;
    Ok(pred.iter().zip(target).map(|(p, t)| angle_error_deg(*p, *t)).sum::<f64>() / pred.len() as f64)
}

/// Median of a non-empty slice (mean of the middle pair for even length).
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

//! Descriptive statistics and the paired t and Wilcoxon signed-rank tests.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("need at least 2 values, got {0}")]
    TooFewSamples(usize),
    #[error("paired arms differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("differences are degenerate (zero variance or all zero)")]
    Degenerate,
}

/// Mean and Bessel-corrected standard deviation.
pub fn mean_sd(xs: &[f64]) -> Result<(f64, f64), StatsError> {
    let n = xs.len();
    if n < 2 {
        return Err(StatsError::TooFewSamples(n));
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    Ok((mean, (ss / (n - 1) as f64).sqrt()))
}

/// Two index-paired samples of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PairedSample {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self, StatsError> {
        if a.len() != b.len() {
            return Err(StatsError::LengthMismatch(a.len(), b.len()));
        }
        if a.len() < 2 {
            return Err(StatsError::TooFewSamples(a.len()));
        }
        Ok(PairedSample { a, b })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// a − b for each pair.
    pub fn differences(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(x, y)| x - y).collect()
    }

    pub fn swapped(&self) -> PairedSample {
        PairedSample {
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// two-sided
    pub p: f64,
}

/// Paired t test on a − b.
pub fn paired_t_test(s: &PairedSample) -> Result<TTest, StatsError> {
    let d = s.differences();
    let (mean, sd) = mean_sd(&d)?;
    if sd == 0.0 || !sd.is_finite() {
        return Err(StatsError::Degenerate);
    }
    let n = d.len() as f64;
    let t = mean / (sd / n.sqrt());
    let df = n - 1.0;
    let dist = StudentsT::new(0.0, 1.0, df).expect("df ≥ 1");
    let p = (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0);
    Ok(TTest { t, df, p })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wilcoxon {
    /// Sum of ranks of the positive differences.
    pub w_plus: f64,
    /// Number of nonzero differences.
    pub n: usize,
    pub z: f64,
    /// two-sided, normal approximation
    pub p: f64,
}

/// Ranks of `xs` (1-based), ties sharing their mean rank.
pub fn midranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Wilcoxon signed-rank test on a − b.
///
/// Zero differences are dropped, tied magnitudes get midranks, and z carries
/// the tie correction and a continuity correction of 0.5. Positive z means
/// arm a tends to exceed arm b.
pub fn wilcoxon_signed_rank(s: &PairedSample) -> Result<Wilcoxon, StatsError> {
    let d: Vec<f64> = s.differences().into_iter().filter(|&x| x != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Err(StatsError::Degenerate);
    }
    let mags: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let ranks = midranks(&mags);
    let w_plus: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(x, _)| **x > 0.0)
        .map(|(_, r)| r)
        .sum();

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0;
    let mut sorted = mags.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        var -= (t * t * t - t) / 48.0;
        i = j + 1;
    }
    if var <= 0.0 {
        return Err(StatsError::Degenerate);
    }
    let dev = w_plus - mean;
    let z = if dev.abs() <= 0.5 {
        0.0
    } else {
        (dev - 0.5 * dev.signum()) / var.sqrt()
    };
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let p = (2.0 * normal.cdf(-z.abs())).clamp(0.0, 1.0);
    Ok(Wilcoxon { w_plus, n, z, p })
}

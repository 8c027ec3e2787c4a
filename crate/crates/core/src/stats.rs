//! Small statistics toolkit: proportion intervals, histograms, distances
//! between binned laws and goodness-of-fit statistics.

use crate::error::{Error, Result};

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0).min(p) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0).max(p) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self { n, mean, variance }
    }

    pub fn stderr(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }
}

/// Empirical quantile by linear interpolation of the order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// `n_bins + 1` edges at equally spaced quantiles between `lo` and `hi`
/// of `values` (sorted in place).
pub fn quantile_edges(values: &mut [f64], n_bins: usize, lo: f64, hi: f64) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    linspace(lo, hi, n_bins)
        .into_iter()
        .map(|q| quantile(values, q))
        .collect()
}

fn locate(edges: &[f64], v: f64) -> Option<usize> {
    if !(v >= edges[0] && v < edges[edges.len() - 1]) {
        return None;
    }
    // partition_point gives the first edge > v.
    Some(edges.partition_point(|&e| e <= v) - 1)
}

fn check_edges(edges: &[f64], name: &'static str) -> Result<()> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain(
            name,
            "bin edges must be strictly increasing with at least one bin",
        ));
    }
    Ok(())
}

pub fn linspace(lo: f64, hi: f64, n_bins: usize) -> Vec<f64> {
    (0..=n_bins)
        .map(|i| lo + (hi - lo) * i as f64 / n_bins as f64)
        .collect()
}

pub fn logspace(lo: f64, hi: f64, n_bins: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n_bins).into_iter().map(f64::exp).collect()
}

/// Counts with an explicit out-of-range cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram1D {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub outside: u64,
}

impl Histogram1D {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        check_edges(&edges, "edges")?;
        let n = edges.len() - 1;
        Ok(Self {
            edges,
            counts: vec![0; n],
            outside: 0,
        })
    }

    pub fn add(&mut self, v: f64) {
        match locate(&self.edges, v) {
            Some(i) => self.counts[i] += 1,
            None => self.outside += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.outside
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.outside += other.outside;
    }

    /// Bin probabilities followed by the out-of-range probability.
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.total().max(1) as f64;
        self.counts
            .iter()
            .chain(std::iter::once(&self.outside))
            .map(|&c| c as f64 / n)
            .collect()
    }
}

/// Row-major 2-D counts (`rows` along the first coordinate).
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2D {
    pub row_edges: Vec<f64>,
    pub col_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub outside: u64,
}

impl Histogram2D {
    pub fn new(row_edges: Vec<f64>, col_edges: Vec<f64>) -> Result<Self> {
        check_edges(&row_edges, "row_edges")?;
        check_edges(&col_edges, "col_edges")?;
        let n = (row_edges.len() - 1) * (col_edges.len() - 1);
        Ok(Self {
            row_edges,
            col_edges,
            counts: vec![0; n],
            outside: 0,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.row_edges.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.col_edges.len() - 1
    }

    pub fn add(&mut self, row_value: f64, col_value: f64) {
        match (locate(&self.row_edges, row_value), locate(&self.col_edges, col_value)) {
            (Some(i), Some(j)) => {
                let nc = self.n_cols();
                self.counts[i * nc + j] += 1;
            }
            _ => self.outside += 1,
        }
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.n_cols() + j]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.outside
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.outside += other.outside;
    }

    /// Cell probabilities (row-major) followed by the out-of-range probability.
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.total().max(1) as f64;
        self.counts
            .iter()
            .chain(std::iter::once(&self.outside))
            .map(|&c| c as f64 / n)
            .collect()
    }
}

/// Total-variation distance `½ Σ |p_i − q_i|` between two binned laws given
/// on the same cells (including any out-of-range cell).
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "binned laws must share cells");
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the KS statistic `d` for sample size `n`
/// (Kolmogorov series with Stephens' small-sample correction).
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..200 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powi(k as i32 - 1) * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wilson_extremes() {
        let (lo, hi) = wilson(0, 1000, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi < 0.01 && hi > 0.0);
        let (lo, hi) = wilson(1000, 1000, Z95);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.99);
    }

    #[test]
    fn wilson_known_value() {
        // 20/100: centre (0.2 + 1.9208/100)/1.038415 etc.
        let (lo, hi) = wilson(20, 100, Z95);
        assert!((lo - 0.133_367).abs() < 1e-5, "{lo}");
        assert!((hi - 0.288_829).abs() < 1e-5, "{hi}");
    }

    #[test]
    fn histogram_binning() {
        let mut h = Histogram2D::new(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 1.0]).unwrap();
        h.add(0.5, 0.25);
        h.add(1.5, 0.75);
        h.add(2.0, 0.75);
        h.add(-1.0, 0.1);
        assert_eq!(h.count(0, 0), 1);
        assert_eq!(h.count(1, 1), 1);
        assert_eq!(h.outside, 2);
        let p = h.probabilities();
        assert_eq!(p.len(), 5);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(Histogram1D::new(vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn ks_uniform_sample_is_accepted() {
        let mut xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic(&mut xs, |x| x);
        assert!(d <= 0.0005 + 1e-12);
        assert!(ks_pvalue(d, 1000) > 0.99);
        assert!(ks_pvalue(0.1, 1000) < 1e-6);
    }

    proptest! {
        #[test]
        fn wilson_brackets_estimate(n in 1u64..100_000, frac in 0.0..=1.0f64) {
            let k = ((n as f64) * frac).round() as u64;
            let k = k.min(n);
            let (lo, hi) = wilson(k, n, Z95);
            let p = k as f64 / n as f64;
            prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
        }
    }
}

//! Ensemble statistics: the paper-style error estimator, normalized gap
//! histograms, and the reference level-spacing densities.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TsreError};

/// Mean and the ensemble-statistics error estimator
/// `sigma = sqrt((<A^2> - <A>^2) / N_r)` (population variance over the
/// realization count).
pub fn mean_se(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(TsreError::InsufficientData(format!(
            "need at least 2 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let second = values.iter().map(|v| v * v).sum::<f64>() / n;
    let var = (second - mean * mean).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

/// Unit-normalized histogram over uniform bins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Histogram {
    /// `n_bins + 1` bin edges, uniform spacing.
    pub edges: Vec<f64>,
    /// Probability density per bin; integrates to one.
    pub density: Vec<f64>,
    pub n_samples: usize,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }
}

/// Histogram of the normalized gap `g~ = g / <g>` for one `(N, lambda)`
/// group. The default domain is `[0, 4]` with `bins` uniform bins; when a
/// sample exceeds the domain, extra bins of the same width are appended so
/// the density still integrates to exactly one.
pub fn normalized_gap_histogram(gaps: &[f64], bins: usize) -> Result<Histogram> {
    if gaps.len() < 2 {
        return Err(TsreError::InsufficientData(
            "histogram needs at least 2 gap values".into(),
        ));
    }
    if bins == 0 {
        return Err(TsreError::Domain("histogram needs at least one bin".into()));
    }
    let (mean, _) = mean_se(gaps)?;
    if mean <= 0.0 {
        return Err(TsreError::Domain(format!(
            "mean gap must be positive, got {mean}"
        )));
    }
    let normalized: Vec<f64> = gaps.iter().map(|g| g / mean).collect();
    let width = 4.0 / bins as f64;
    let max = normalized.iter().cloned().fold(0.0f64, f64::max);
    let mut n_bins = bins;
    if max >= 4.0 {
        n_bins = ((max / width).floor() as usize + 1).max(bins);
    }
    let mut counts = vec![0usize; n_bins];
    for &g in &normalized {
        let idx = ((g / width) as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    let total = normalized.len() as f64;
    let density: Vec<f64> = counts.iter().map(|&c| c as f64 / (total * width)).collect();
    let edges: Vec<f64> = (0..=n_bins).map(|i| i as f64 * width).collect();
    Ok(Histogram {
        edges,
        density,
        n_samples: normalized.len(),
    })
}

/// Wigner surmise for the Gaussian unitary ensemble,
/// `P(s) = (32 / pi^2) s^2 exp(-4 s^2 / pi)`: unit norm and unit mean,
/// quadratic level repulsion at small spacing.
pub fn gue_surmise_density(s: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    let pi = std::f64::consts::PI;
    (32.0 / (pi * pi)) * s * s * (-4.0 * s * s / pi).exp()
}

/// Cumulative distribution of the GUE surmise:
/// `F(s) = erf(2 s / sqrt(pi)) - (4 s / pi) exp(-4 s^2 / pi)`.
pub fn gue_surmise_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let pi = std::f64::consts::PI;
    statrs::function::erf::erf(2.0 * s / pi.sqrt()) - (4.0 * s / pi) * (-4.0 * s * s / pi).exp()
}

/// Level-spacing density of an uncorrelated (Poissonian) spectrum.
pub fn poisson_density(s: f64) -> f64 {
    if s < 0.0 {
        0.0
    } else {
        (-s).exp()
    }
}

pub fn poisson_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        1.0 - (-s).exp()
    }
}

/// Kolmogorov-Smirnov distance between the empirical distribution of
/// `samples` and a reference CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(TsreError::InsufficientData("KS needs samples".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max((f - (i as f64 + 1.0) / n).abs());
    }
    Ok(d)
}

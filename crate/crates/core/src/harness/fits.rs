//! Least-squares fits for the scaling analyses: gap power law /
//! exponential decay, logarithmic entropy growth and saturation, and the
//! correlation-length divergences.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TsreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    PowerLaw,
    Exponential,
    LogLinear,
    LogLog,
    Plateau,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    /// Least-squares standard error on the stated range.
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub parameters: Vec<FitParameter>,
    /// x-range of the points used.
    pub range: (f64, f64),
    pub n_points: usize,
    /// Residual sum of squares in the fit's (possibly log) y-space.
    pub residual_sum_squares: f64,
    pub residuals: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl FitResult {
    pub fn parameter(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

struct Line {
    slope: f64,
    intercept: f64,
    se_slope: f64,
    se_intercept: f64,
    ssr: f64,
    residuals: Vec<f64>,
}

/// Unweighted least squares with the classic standard-error formulas
/// (`sigma^2 = SSR / (n - 2)`).
fn linear_fit(x: &[f64], y: &[f64]) -> Result<Line> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(TsreError::InsufficientData(format!(
            "linear fit needs >= 2 matched points, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return Err(TsreError::InsufficientData(
            "linear fit needs at least two distinct x values".into(),
        ));
    }
    let sxy: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x
        .iter()
        .zip(y.iter())
        .map(|(a, b)| b - (slope * a + intercept))
        .collect();
    let ssr: f64 = residuals.iter().map(|r| r * r).sum();
    let sigma2 = if n > 2 { ssr / (nf - 2.0) } else { 0.0 };
    Ok(Line {
        slope,
        intercept,
        se_slope: (sigma2 / sxx).sqrt(),
        se_intercept: (sigma2 * (1.0 / nf + mx * mx / sxx)).sqrt(),
        ssr,
        residuals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapScalingMode {
    /// `<g> ~ N^-eta`: log-log fit.
    PowerLaw,
    /// `<g> ~ exp(-xi N)`: log-linear fit.
    Exponential,
}

/// Fits the size scaling of the mean gap. Residual sums are comparable
/// between the two modes (both live in log-gap space).
pub fn fit_gap_scaling(sizes: &[f64], means: &[f64], mode: GapScalingMode) -> Result<FitResult> {
    if sizes.len() < 3 {
        return Err(TsreError::InsufficientData(format!(
            "gap scaling fit needs >= 3 sizes, got {}",
            sizes.len()
        )));
    }
    if means.iter().any(|&g| g <= 0.0) {
        return Err(TsreError::Domain("mean gaps must be positive".into()));
    }
    let logs: Vec<f64> = means.iter().map(|g| g.ln()).collect();
    match mode {
        GapScalingMode::PowerLaw => {
            let x: Vec<f64> = sizes.iter().map(|n| n.ln()).collect();
            let line = linear_fit(&x, &logs)?;
            Ok(FitResult {
                model: FitModel::PowerLaw,
                parameters: vec![
                    FitParameter {
                        name: "eta".into(),
                        value: -line.slope,
                        std_error: line.se_slope,
                    },
                    FitParameter {
                        name: "log_amplitude".into(),
                        value: line.intercept,
                        std_error: line.se_intercept,
                    },
                ],
                range: (sizes[0], sizes[sizes.len() - 1]),
                n_points: sizes.len(),
                residual_sum_squares: line.ssr,
                residuals: line.residuals,
                notes: None,
            })
        }
        GapScalingMode::Exponential => {
            let line = linear_fit(sizes, &logs)?;
            Ok(FitResult {
                model: FitModel::Exponential,
                parameters: vec![
                    FitParameter {
                        name: "xi".into(),
                        value: -line.slope,
                        std_error: line.se_slope,
                    },
                    FitParameter {
                        name: "log_amplitude".into(),
                        value: line.intercept,
                        std_error: line.se_intercept,
                    },
                ],
                range: (sizes[0], sizes[sizes.len() - 1]),
                n_points: sizes.len(),
                residual_sum_squares: line.ssr,
                residuals: line.residuals,
                notes: None,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntropyScalingMode {
    /// `S = c log2(N) + c'`.
    Logarithmic,
    /// Plateau estimate with backward detection at the given tolerance
    /// (bits); points within tolerance of the last value are averaged.
    Saturation { plateau_tol: f64 },
}

pub fn fit_entropy_scaling(
    sizes: &[f64],
    entropies: &[f64],
    mode: EntropyScalingMode,
) -> Result<FitResult> {
    if sizes.len() < 3 {
        return Err(TsreError::InsufficientData(format!(
            "entropy scaling fit needs >= 3 sizes, got {}",
            sizes.len()
        )));
    }
    match mode {
        EntropyScalingMode::Logarithmic => {
            let x: Vec<f64> = sizes.iter().map(|n| n.log2()).collect();
            let line = linear_fit(&x, entropies)?;
            Ok(FitResult {
                model: FitModel::LogLinear,
                parameters: vec![
                    FitParameter {
                        name: "c".into(),
                        value: line.slope,
                        std_error: line.se_slope,
                    },
                    FitParameter {
                        name: "c_prime".into(),
                        value: line.intercept,
                        std_error: line.se_intercept,
                    },
                ],
                range: (sizes[0], sizes[sizes.len() - 1]),
                n_points: sizes.len(),
                residual_sum_squares: line.ssr,
                residuals: line.residuals,
                notes: Some("x = log2(N)".into()),
            })
        }
        EntropyScalingMode::Saturation { plateau_tol } => {
            let last = *entropies.last().unwrap();
            let mut start = entropies.len() - 1;
            while start > 0 && (entropies[start - 1] - last).abs() <= plateau_tol {
                start -= 1;
            }
            let plateau = &entropies[start..];
            if plateau.len() < 2 {
                // plateau of one point: report it with zero spread
                return Ok(FitResult {
                    model: FitModel::Plateau,
                    parameters: vec![FitParameter {
                        name: "s_inf".into(),
                        value: last,
                        std_error: 0.0,
                    }],
                    range: (sizes[start], sizes[sizes.len() - 1]),
                    n_points: 1,
                    residual_sum_squares: 0.0,
                    residuals: vec![0.0],
                    notes: Some("single-point plateau".into()),
                });
            }
            let (mean, se) = super::stats::mean_se(plateau)?;
            let residuals: Vec<f64> = plateau.iter().map(|s| s - mean).collect();
            let ssr = residuals.iter().map(|r| r * r).sum();
            Ok(FitResult {
                model: FitModel::Plateau,
                parameters: vec![FitParameter {
                    name: "s_inf".into(),
                    value: mean,
                    std_error: se,
                }],
                range: (sizes[start], sizes[sizes.len() - 1]),
                n_points: plateau.len(),
                residual_sum_squares: ssr,
                residuals,
                notes: Some(format!("plateau detected over the last {} sizes", plateau.len())),
            })
        }
    }
}

/// Splits sizes by the parity of N/2 and fits each subsequence, for the
/// even-odd alternation of open-boundary entropies. Returns
/// `(even N/2, odd N/2)` fits.
pub fn fit_entropy_scaling_even_odd(
    sizes: &[f64],
    entropies: &[f64],
) -> Result<(FitResult, FitResult)> {
    let mut even = (Vec::new(), Vec::new());
    let mut odd = (Vec::new(), Vec::new());
    for (&n, &s) in sizes.iter().zip(entropies.iter()) {
        let half = (n / 2.0).round() as usize;
        if half % 2 == 0 {
            even.0.push(n);
            even.1.push(s);
        } else {
            odd.0.push(n);
            odd.1.push(s);
        }
    }
    Ok((
        fit_entropy_scaling(&even.0, &even.1, EntropyScalingMode::Logarithmic)?,
        fit_entropy_scaling(&odd.0, &odd.1, EntropyScalingMode::Logarithmic)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayBase {
    /// `C(r) = C0 2^(-r/xi)`: xi in base-2 units.
    Two,
    /// `C(r) = C0 exp(-r/xi)`.
    E,
}

/// Correlation length from a log-linear fit of `C(r)` over `r_range`
/// (inclusive indices into the profile's `r = 1..` support).
pub fn fit_correlation_length(
    rs: &[f64],
    cs: &[f64],
    base: DecayBase,
) -> Result<FitResult> {
    if rs.len() < 2 {
        return Err(TsreError::InsufficientData(
            "correlation-length fit needs >= 2 distances".into(),
        ));
    }
    if cs.iter().any(|&c| c <= 0.0) {
        return Err(TsreError::Domain(
            "correlation fluctuations must be positive on the fit range".into(),
        ));
    }
    let (logs, note): (Vec<f64>, &str) = match base {
        DecayBase::Two => (cs.iter().map(|c| c.log2()).collect(), "base-2: C = C0 2^(-r/xi)"),
        DecayBase::E => (cs.iter().map(|c| c.ln()).collect(), "base-e: C = C0 exp(-r/xi)"),
    };
    let line = linear_fit(rs, &logs)?;
    if line.slope >= 0.0 {
        return Err(TsreError::Domain(format!(
            "profile does not decay on the fit range (slope {})",
            line.slope
        )));
    }
    let xi = -1.0 / line.slope;
    // delta method: se(xi) = se(slope) / slope^2
    let se_xi = line.se_slope / (line.slope * line.slope);
    Ok(FitResult {
        model: FitModel::LogLinear,
        parameters: vec![
            FitParameter {
                name: "xi".into(),
                value: xi,
                std_error: se_xi,
            },
            FitParameter {
                name: "log_amplitude".into(),
                value: line.intercept,
                std_error: line.se_intercept,
            },
        ],
        range: (rs[0], rs[rs.len() - 1]),
        n_points: rs.len(),
        residual_sum_squares: line.ssr,
        residuals: line.residuals,
        notes: Some(note.into()),
    })
}

/// Fits `value = a (-log2 lambda) + b`, the logarithmic divergence form
/// used for the correlation length as the field is switched off.
pub fn fit_log_lambda_divergence(lambdas: &[f64], values: &[f64]) -> Result<FitResult> {
    if lambdas.len() < 3 {
        return Err(TsreError::InsufficientData(format!(
            "divergence fit needs >= 3 lambda points, got {}",
            lambdas.len()
        )));
    }
    if lambdas.iter().any(|&l| l <= 0.0) {
        return Err(TsreError::Domain("lambda values must be positive".into()));
    }
    let x: Vec<f64> = lambdas.iter().map(|l| -l.log2()).collect();
    let line = linear_fit(&x, values)?;
    Ok(FitResult {
        model: FitModel::LogLinear,
        parameters: vec![
            FitParameter {
                name: "xi0".into(),
                value: line.slope,
                std_error: line.se_slope,
            },
            FitParameter {
                name: "offset".into(),
                value: line.intercept,
                std_error: line.se_intercept,
            },
        ],
        range: (
            lambdas.iter().cloned().fold(f64::INFINITY, f64::min),
            lambdas.iter().cloned().fold(0.0, f64::max),
        ),
        n_points: lambdas.len(),
        residual_sum_squares: line.ssr,
        residuals: line.residuals,
        notes: Some("x = -log2(lambda)".into()),
    })
}

/// Both variants of the entropy-saturation divergence fit
/// `2^(k S_inf) = a log2(lambda*/lambda) + b`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaturationDivergenceFit {
    /// k and lambda* pinned to 4.0 and 4.
    pub fixed: FitResult,
    /// k from a one-dimensional R^2 search, lambda* from the intercept.
    pub free: FitResult,
}

pub fn fit_entropy_saturation_divergence(
    lambdas: &[f64],
    s_inf: &[f64],
) -> Result<SaturationDivergenceFit> {
    if lambdas.len() < 3 {
        return Err(TsreError::InsufficientData(format!(
            "saturation divergence fit needs >= 3 lambda points, got {}",
            lambdas.len()
        )));
    }
    if lambdas.iter().any(|&l| l <= 0.0) {
        return Err(TsreError::Domain("lambda values must be positive".into()));
    }

    // fixed: k = 4, lambda* = 4
    let (k_paper, lambda_star_paper) = (4.0, 4.0);
    let x_fixed: Vec<f64> = lambdas.iter().map(|l| (lambda_star_paper / l).log2()).collect();
    let y_fixed: Vec<f64> = s_inf.iter().map(|s| (k_paper * s).exp2()).collect();
    let line = linear_fit(&x_fixed, &y_fixed)?;
    let fixed = FitResult {
        model: FitModel::LogLinear,
        parameters: vec![
            FitParameter {
                name: "amplitude".into(),
                value: line.slope,
                std_error: line.se_slope,
            },
            FitParameter {
                name: "offset".into(),
                value: line.intercept,
                std_error: line.se_intercept,
            },
            FitParameter {
                name: "k".into(),
                value: k_paper,
                std_error: 0.0,
            },
            FitParameter {
                name: "lambda_star".into(),
                value: lambda_star_paper,
                std_error: 0.0,
            },
        ],
        range: (
            lambdas.iter().cloned().fold(f64::INFINITY, f64::min),
            lambdas.iter().cloned().fold(0.0, f64::max),
        ),
        n_points: lambdas.len(),
        residual_sum_squares: line.ssr,
        residuals: line.residuals,
        notes: Some("y = 2^(k S), x = log2(lambda*/lambda); k, lambda* fixed".into()),
    };

    // free: scan k for the most linear relation y_k = 2^(k S) vs -log2 lambda
    let x0: Vec<f64> = lambdas.iter().map(|l| -l.log2()).collect();
    let r_squared = |k: f64| -> f64 {
        let y: Vec<f64> = s_inf.iter().map(|s| (k * s).exp2()).collect();
        let Ok(l) = linear_fit(&x0, &y) else {
            return f64::NEG_INFINITY;
        };
        let my = y.iter().sum::<f64>() / y.len() as f64;
        let tss: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
        if tss <= 0.0 {
            return f64::NEG_INFINITY;
        }
        1.0 - l.ssr / tss
    };
    let mut best_k = 4.0;
    let mut best_r2 = f64::NEG_INFINITY;
    let mut k = 0.5;
    while k <= 10.0 {
        let r2 = r_squared(k);
        if r2 > best_r2 {
            best_r2 = r2;
            best_k = k;
        }
        k += 0.05;
    }
    let mut lo = best_k - 0.05;
    let mut hi = best_k + 0.05;
    for _ in 0..30 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if r_squared(m1) < r_squared(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let k_free = 0.5 * (lo + hi);
    let y_free: Vec<f64> = s_inf.iter().map(|s| (k_free * s).exp2()).collect();
    let line = linear_fit(&x0, &y_free)?;
    let lambda_star = if line.slope.abs() > 1e-12 {
        (line.intercept / line.slope).exp2()
    } else {
        f64::NAN
    };
    let free = FitResult {
        model: FitModel::LogLinear,
        parameters: vec![
            FitParameter {
                name: "k".into(),
                value: k_free,
                std_error: (hi - lo) * 0.5,
            },
            FitParameter {
                name: "amplitude".into(),
                value: line.slope,
                std_error: line.se_slope,
            },
            FitParameter {
                name: "lambda_star".into(),
                value: lambda_star,
                std_error: f64::NAN,
            },
        ],
        range: fixed.range,
        n_points: lambdas.len(),
        residual_sum_squares: line.ssr,
        residuals: line.residuals,
        notes: Some("y = 2^(k S), x = -log2(lambda); k from R^2 scan".into()),
    };

    Ok(SaturationDivergenceFit { fixed, free })
}

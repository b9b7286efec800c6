//! Record analyses: histograms, scaling fits, correlation profiles, and
//! the divergence fits, emitted as plain-text tables plus JSON fit
//! documents.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tsre_core::harness::{self, DecayBase, EnsembleRecord, EntropyScalingMode, GapScalingMode};

use crate::CodedError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "analysis", rename_all = "kebab-case")]
pub enum AnalysisSpec {
    /// Normalized gap histogram with GUE overlay for one (N, lambda) group.
    GapHistogram {
        n: usize,
        lambda: f64,
        #[serde(default = "default_bins")]
        bins: usize,
    },
    /// Mean gap vs N at fixed lambda, with power-law / exponential fits.
    GapScaling {
        lambda: f64,
        #[serde(default = "default_mode_both")]
        mode: GapFitMode,
    },
    /// Mean symmetric-cut entropy vs N at fixed lambda.
    EntropyScaling {
        lambda: f64,
        #[serde(default = "default_entropy_mode")]
        mode: EntropyFitMode,
        #[serde(default = "default_plateau_tol")]
        plateau_tol: f64,
    },
    /// Ring-averaged C(r) for one (N, lambda) group with a decay fit.
    Correlation {
        n: usize,
        lambda: f64,
        r_min: usize,
        r_max: usize,
        #[serde(default = "default_base")]
        base: BaseSpec,
    },
    /// xi(lambda) from per-lambda C(r) fits, plus the log-divergence fit.
    XiDivergence {
        n: usize,
        r_min: usize,
        r_max: usize,
        #[serde(default = "default_base")]
        base: BaseSpec,
        /// Only lambdas at or below this enter the divergence fit.
        #[serde(default = "default_lambda_max")]
        lambda_max: f64,
        /// Explicitly excluded lambda points (inaccurate at small sizes).
        #[serde(default)]
        exclude_lambdas: Vec<f64>,
    },
    /// S_inf(lambda) plateaus plus the 2^(kS) divergence fit.
    EntropySaturation {
        #[serde(default = "default_lambda_max")]
        lambda_max: f64,
        #[serde(default = "default_plateau_tol")]
        plateau_tol: f64,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapFitMode {
    PowerLaw,
    Exponential,
    Both,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyFitMode {
    Log,
    Saturation,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseSpec {
    Two,
    E,
}

impl BaseSpec {
    fn to_decay(self) -> DecayBase {
        match self {
            BaseSpec::Two => DecayBase::Two,
            BaseSpec::E => DecayBase::E,
        }
    }
}

fn default_bins() -> usize {
    40
}
fn default_mode_both() -> GapFitMode {
    GapFitMode::Both
}
fn default_entropy_mode() -> EntropyFitMode {
    EntropyFitMode::Log
}
fn default_plateau_tol() -> f64 {
    0.05
}
fn default_base() -> BaseSpec {
    BaseSpec::E
}
fn default_lambda_max() -> f64 {
    1.0
}

fn g12(v: f64) -> String {
    format!("{v:.11e}")
}

fn same_lambda(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300)
}

fn usable<'a>(records: &'a [EnsembleRecord]) -> Vec<&'a EnsembleRecord> {
    records
        .iter()
        .filter(|r| r.is_success() && !r.degenerate_flag)
        .collect()
}

fn write_table(path: &Path, header: &str, rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut f = std::fs::File::create(path).with_context(|| format!("creating {path:?}"))?;
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{}", row.join(" "))?;
    }
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)
        .with_context(|| format!("writing {path:?}"))?;
    Ok(())
}

pub fn run_analysis(
    spec: &AnalysisSpec,
    records: &[EnsembleRecord],
    out_dir: &Path,
) -> anyhow::Result<Vec<String>> {
    std::fs::create_dir_all(out_dir)?;
    match spec {
        AnalysisSpec::GapHistogram { n, lambda, bins } => {
            gap_histogram(records, *n, *lambda, *bins, out_dir)
        }
        AnalysisSpec::GapScaling { lambda, mode } => gap_scaling(records, *lambda, *mode, out_dir),
        AnalysisSpec::EntropyScaling {
            lambda,
            mode,
            plateau_tol,
        } => entropy_scaling(records, *lambda, *mode, *plateau_tol, out_dir),
        AnalysisSpec::Correlation {
            n,
            lambda,
            r_min,
            r_max,
            base,
        } => correlation(records, *n, *lambda, *r_min, *r_max, *base, out_dir),
        AnalysisSpec::XiDivergence {
            n,
            r_min,
            r_max,
            base,
            lambda_max,
            exclude_lambdas,
        } => xi_divergence(
            records,
            *n,
            *r_min,
            *r_max,
            *base,
            *lambda_max,
            exclude_lambdas,
            out_dir,
        ),
        AnalysisSpec::EntropySaturation {
            lambda_max,
            plateau_tol,
        } => entropy_saturation(records, *lambda_max, *plateau_tol, out_dir),
    }
}

fn group<'a>(
    records: &'a [EnsembleRecord],
    n: usize,
    lambda: f64,
) -> Vec<&'a EnsembleRecord> {
    records
        .iter()
        .filter(|r| r.n == n && same_lambda(r.lambda, lambda))
        .collect()
}

fn gap_histogram(
    records: &[EnsembleRecord],
    n: usize,
    lambda: f64,
    bins: usize,
    out_dir: &Path,
) -> anyhow::Result<Vec<String>> {
    let grp: Vec<EnsembleRecord> = group(records, n, lambda).into_iter().cloned().collect();
    let gaps: Vec<f64> = usable(&grp).iter().filter_map(|r| r.gap).collect();
    if gaps.len() < 2 {
        return Err(CodedError::config(format!(
            "no usable gap records for N={n}, lambda={lambda}"
        ))
        .into());
    }
    let hist = harness::gap_histogram(&grp, bins).map_err(CodedError::from_core)?;
    let (mean_gap, se_gap) = harness::mean_se(&gaps).map_err(CodedError::from_core)?;
    let normalized: Vec<f64> = gaps.iter().map(|g| g / mean_gap).collect();
    let ks_gue = harness::ks_distance(&normalized, harness::gue_surmise_cdf)
        .map_err(CodedError::from_core)?;
    let ks_poisson =
        harness::ks_distance(&normalized, harness::poisson_cdf).map_err(CodedError::from_core)?;

    let rows: Vec<Vec<String>> = hist
        .centers()
        .iter()
        .zip(hist.density.iter())
        .map(|(&c, &d)| vec![g12(c), g12(d), g12(harness::gue_surmise_density(c))])
        .collect();
    let table = out_dir.join("gap_histogram.txt");
    write_table(
        &table,
        "# normalized_gap empirical_density gue_density",
        &rows,
    )?;
    let stats = out_dir.join("gap_histogram.json");
    write_json(
        &stats,
        &json!({
            "n": n,
            "lambda": lambda,
            "samples": hist.n_samples,
            "mean_gap": mean_gap,
            "mean_gap_se": se_gap,
            "ks_distance_gue": ks_gue,
            "ks_distance_poisson": ks_poisson,
        }),
    )?;
    Ok(vec![
        table.display().to_string(),
        stats.display().to_string(),
    ])
}

fn per_n_means(
    records: &[EnsembleRecord],
    lambda: f64,
    value: impl Fn(&EnsembleRecord) -> Option<f64>,
) -> Vec<(usize, f64, f64, usize)> {
    let mut ns: Vec<usize> = records
        .iter()
        .filter(|r| same_lambda(r.lambda, lambda))
        .map(|r| r.n)
        .collect();
    ns.sort_unstable();
    ns.dedup();
    let mut out = Vec::new();
    for n in ns {
        let vals: Vec<f64> = group(records, n, lambda)
            .into_iter()
            .filter(|r| r.is_success() && !r.degenerate_flag)
            .filter_map(&value)
            .collect();
        if vals.len() >= 2 {
            let (m, se) = harness::mean_se(&vals).expect("len checked");
            out.push((n, m, se, vals.len()));
        }
    }
    out
}

fn gap_scaling(
    records: &[EnsembleRecord],
    lambda: f64,
    mode: GapFitMode,
    out_dir: &Path,
) -> anyhow::Result<Vec<String>> {
    let means = per_n_means(records, lambda, |r| r.gap);
    if means.len() < 3 {
        return Err(CodedError::config(format!(
            "gap scaling needs >= 3 sizes with usable gaps at lambda = {lambda}"
        ))
        .into());
    }
    let rows: Vec<Vec<String>> = means
        .iter()
        .map(|&(n, m, se, cnt)| vec![n.to_string(), g12(m), g12(se), cnt.to_string()])
        .collect();
    let table = out_dir.join("gap_scaling.txt");
    write_table(&table, "# n mean_gap se realizations", &rows)?;

    let sizes: Vec<f64> = means.iter().map(|&(n, ..)| n as f64).collect();
    let gaps: Vec<f64> = means.iter().map(|&(_, m, ..)| m).collect();
    let mut fits = serde_json::Map::new();
    if matches!(mode, GapFitMode::PowerLaw | GapFitMode::Both) {
        let fit = harness::fit_gap_scaling(&sizes, &gaps, GapScalingMode::PowerLaw)
            .map_err(CodedError::from_core)?;
        fits.insert("power_law".into(), serde_json::to_value(&fit)?);
    }
    if matches!(mode, GapFitMode::Exponential | GapFitMode::Both) {
        let fit = harness::fit_gap_scaling(&sizes, &gaps, GapScalingMode::Exponential)
            .map_err(CodedError::from_core)?;
        fits.insert("exponential".into(), serde_json::to_value(&fit)?);
    }
    let fit_path = out_dir.join("gap_scaling_fit.json");
    write_json(&fit_path, &serde_json::Value::Object(fits))?;
    Ok(vec![
        table.display().to_string(),
        fit_path.display().to_string(),
    ])
}

fn entropy_scaling(
    records: &[EnsembleRecord],
    lambda: f64,
    mode: EntropyFitMode,
    plateau_tol: f64,
    out_dir: &Path,
) -> anyhow::Result<Vec<String>> {
    let means = per_n_means(records, lambda, |r| r.entropy_bits);
    if means.len() < 3 {
        return Err(CodedError::config(format!(
            "entropy scaling needs >= 3 sizes with entropies at lambda = {lambda}"
        ))
        .into());
    }
    let rows: Vec<Vec<String>> = means
        .iter()
        .map(|&(n, m, se, cnt)| vec![n.to_string(), g12(m), g12(se), cnt.to_string()])
        .collect();
    let table = out_dir.join("entropy_scaling.txt");
    write_table(&table, "# n entropy_bits se realizations", &rows)?;

    let sizes: Vec<f64> = means.iter().map(|&(n, ..)| n as f64).collect();
    let entropies: Vec<f64> = means.iter().map(|&(_, m, ..)| m).collect();
    let mut doc = serde_json::Map::new();
    match mode {
        EntropyFitMode::Log => {
            let fit = harness::fit_entropy_scaling(
                &sizes,
                &entropies,
                EntropyScalingMode::Logarithmic,
            )
            .map_err(CodedError::from_core)?;
            doc.insert("log".into(), serde_json::to_value(&fit)?);
            if let Ok((even, odd)) =
                harness::fit_entropy_scaling_even_odd(&sizes, &entropies)
            {
                doc.insert("log_even_half".into(), serde_json::to_value(&even)?);
                doc.insert("log_odd_half".into(), serde_json::to_value(&odd)?);
            }
        }
        EntropyFitMode::Saturation => {
            let fit = harness::fit_entropy_scaling(
                &sizes,
                &entropies,
                EntropyScalingMode::Saturation { plateau_tol },
            )
            .map_err(CodedError::from_core)?;
            doc.insert("saturation".into(), serde_json::to_value(&fit)?);
        }
    }
    let fit_path = out_dir.join("entropy_scaling_fit.json");
    write_json(&fit_path, &serde_json::Value::Object(doc))?;
    Ok(vec![
        table.display().to_string(),
        fit_path.display().to_string(),
    ])
}

/// Ensemble-averaged C(r) with errors; rows are `r = 1..=N-1`.
fn averaged_profile(grp: &[&EnsembleRecord], n: usize) -> Option<Vec<(f64, f64)>> {
    let profiles: Vec<&Vec<f64>> = grp.iter().filter_map(|r| r.c_of_r.as_ref()).collect();
    if profiles.len() < 2 || profiles.iter().any(|p| p.len() != n - 1) {
        return None;
    }
    let mut out = Vec::with_capacity(n - 1);
    for r in 0..n - 1 {
        let vals: Vec<f64> = profiles.iter().map(|p| p[r]).collect();
        let (m, se) = harness::mean_se(&vals).ok()?;
        out.push((m, se));
    }
    Some(out)
}

fn correlation(
    records: &[EnsembleRecord],
    n: usize,
    lambda: f64,
    r_min: usize,
    r_max: usize,
    base: BaseSpec,
    out_dir: &Path,
) -> anyhow::Result<Vec<String>> {
    let grp = group(records, n, lambda);
    let grp = usable_refs(&grp);
    let profile = averaged_profile(&grp, n).ok_or_else(|| {
        CodedError::config(format!(
            "records carry no complete c_of_r profiles for N={n}, lambda={lambda} \
             (correlation analysis needs the JSONL record stream)"
        ))
    })?;
    let rows: Vec<Vec<String>> = profile
        .iter()
        .enumerate()
        .map(|(i, &(m, se))| vec![(i + 1).to_string(), g12(m), g12(se)])
        .collect();
    let table = out_dir.join(format!("correlation_profile_n{n}_l{}.txt", crate::manifest::lambda_tag(lambda)));
    write_table(&table, "# r c_of_r se", &rows)?;

    if r_min < 1 || r_max >= n || r_min >= r_max {
        return Err(CodedError::config(format!(
            "fit range {r_min}..={r_max} outside the profile support 1..={}",
            n - 1
        ))
        .into());
    }
    let rs: Vec<f64> = (r_min..=r_max).map(|r| r as f64).collect();
    let cs: Vec<f64> = (r_min..=r_max).map(|r| profile[r - 1].0).collect();
    let fit = harness::fit_correlation_length(&rs, &cs, base.to_decay())
        .map_err(CodedError::from_core)?;
    let fit_path = out_dir.join(format!(
        "correlation_fit_n{n}_l{}.json",
        crate::manifest::lambda_tag(lambda)
    ));
    write_json(&fit_path, &serde_json::to_value(&fit)?)?;
    Ok(vec![
        table.display().to_string(),
        fit_path.display().to_string(),
    ])
}

fn usable_refs<'a>(refs: &[&'a EnsembleRecord]) -> Vec<&'a EnsembleRecord> {
    refs.iter()
        .filter(|r| r.is_success() && !r.degenerate_flag)
        .copied()
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn xi_divergence(
    records: &[EnsembleRecord],
    n: usize,
    r_min: usize,
    r_max: usize,
    base: BaseSpec,
    lambda_max: f64,
    exclude: &[f64],
    out_dir: &Path,
) -> anyhow::Result<Vec<String>> {
    let mut lambdas: Vec<f64> = records
        .iter()
        .filter(|r| r.n == n)
        .map(|r| r.lambda)
        .collect();
    lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lambdas.dedup_by(|a, b| same_lambda(*a, *b));
    if lambdas.is_empty() {
        return Err(CodedError::config(format!("no records at N={n}")).into());
    }
    let mut rows = Vec::new();
    let mut fit_lambdas = Vec::new();
    let mut fit_xis = Vec::new();
    for &lambda in &lambdas {
        let grp = group(records, n, lambda);
        let grp = usable_refs(&grp);
        let Some(profile) = averaged_profile(&grp, n) else {
            continue;
        };
        let rs: Vec<f64> = (r_min..=r_max).map(|r| r as f64).collect();
        let cs: Vec<f64> = (r_min..=r_max).map(|r| profile[r - 1].0).collect();
        let Ok(fit) = harness::fit_correlation_length(&rs, &cs, base.to_decay()) else {
            continue;
        };
        let p = fit.parameter("xi").expect("fit carries xi");
        rows.push(vec![g12(lambda), g12(p.value), g12(p.std_error)]);
        let excluded = exclude.iter().any(|&x| same_lambda(x, lambda));
        if lambda <= lambda_max && !excluded {
            fit_lambdas.push(lambda);
            fit_xis.push(p.value);
        }
    }
    if rows.is_empty() {
        return Err(CodedError::config(
            "no profiles available for the xi divergence analysis".into(),
        )
        .into());
    }
    let table = out_dir.join("xi_divergence.txt");
    write_table(&table, "# lambda xi se", &rows)?;
    let fit = harness::fit_log_lambda_divergence(&fit_lambdas, &fit_xis)
        .map_err(CodedError::from_core)?;
    let fit_path = out_dir.join("xi_divergence_fit.json");
    write_json(&fit_path, &serde_json::to_value(&fit)?)?;
    Ok(vec![
        table.display().to_string(),
        fit_path.display().to_string(),
    ])
}

fn entropy_saturation(
    records: &[EnsembleRecord],
    lambda_max: f64,
    plateau_tol: f64,
    out_dir: &Path,
) -> anyhow::Result<Vec<String>> {
    let mut lambdas: Vec<f64> = records.iter().map(|r| r.lambda).collect();
    lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lambdas.dedup_by(|a, b| same_lambda(*a, *b));
    let mut rows = Vec::new();
    let mut fit_lambdas = Vec::new();
    let mut fit_s = Vec::new();
    for &lambda in &lambdas {
        let means = per_n_means(records, lambda, |r| r.entropy_bits);
        if means.len() < 3 {
            continue;
        }
        let sizes: Vec<f64> = means.iter().map(|&(n, ..)| n as f64).collect();
        let entropies: Vec<f64> = means.iter().map(|&(_, m, ..)| m).collect();
        let Ok(fit) = harness::fit_entropy_scaling(
            &sizes,
            &entropies,
            EntropyScalingMode::Saturation { plateau_tol },
        ) else {
            continue;
        };
        let p = fit.parameter("s_inf").expect("fit carries s_inf");
        rows.push(vec![g12(lambda), g12(p.value), g12(p.std_error)]);
        if lambda > 0.0 && lambda < lambda_max {
            fit_lambdas.push(lambda);
            fit_s.push(p.value);
        }
    }
    if rows.is_empty() {
        return Err(CodedError::config(
            "no entropy plateaus available for the saturation analysis".into(),
        )
        .into());
    }
    let table = out_dir.join("entropy_saturation.txt");
    write_table(&table, "# lambda s_inf se", &rows)?;
    let mut doc = serde_json::Map::new();
    match harness::fit_entropy_saturation_divergence(&fit_lambdas, &fit_s) {
        Ok(fit) => {
            doc.insert("divergence".into(), serde_json::to_value(&fit)?);
        }
        Err(e) => {
            doc.insert(
                "divergence_error".into(),
                serde_json::Value::String(e.to_string()),
            );
        }
    }
    let fit_path = out_dir.join("entropy_saturation_fit.json");
    write_json(&fit_path, &serde_json::Value::Object(doc))?;
    Ok(vec![
        table.display().to_string(),
        fit_path.display().to_string(),
    ])
}

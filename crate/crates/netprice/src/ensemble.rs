//! Seeded Monte Carlo ensembles, paired sweeps and concentration
//! diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::pipeline::{self, RunSpec, RunSummary};

/// Share of failed replications above which the whole ensemble fails.
pub const MAX_FAILURE_SHARE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub replications: usize,
    pub base_seed: u64,
    pub run: RunSpec,
    /// Horizons at which φ, ω, ψ are summarized.
    pub horizons: Vec<usize>,
}

/// Seed for replication r.
pub fn replication_seed(base: u64, r: usize) -> u64 {
    base ^ r as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concentration {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Correlation of sorted values with standard normal quantiles.
    pub quantile_correlation: f64,
    /// Fraction of draws more than two sample s.d. from the mean.
    pub chebyshev_exceedance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticSummary {
    pub statistic: String,
    pub horizon: Option<usize>,
    pub summary: Concentration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub replication: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub replications: usize,
    pub included: usize,
    pub excluded: usize,
    pub failures: Vec<Failure>,
    pub statistics: Vec<StatisticSummary>,
    /// Included replications in index order.
    pub runs: Vec<(usize, RunSummary)>,
}

fn moments(values: &[f64]) -> (f64, f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let var = if n > 1.0 { m2 * n / (n - 1.0) } else { 0.0 };
    let (skew, kurt) = if m2 > 0.0 { (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0) } else { (0.0, 0.0) };
    (mean, var, skew, kurt)
}

pub fn concentration_check(values: &[f64]) -> Concentration {
    let (mean, variance, skewness, excess_kurtosis) = moments(values);
    let sd = variance.sqrt();
    let count = values.len();
    let exceed = if sd > 0.0 {
        values.iter().filter(|v| (*v - mean).abs() > 2.0 * sd).count() as f64 / count as f64
    } else {
        0.0
    };
    let quantile_correlation = if sd > 0.0 {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let z = Normal::standard();
        let q: Vec<f64> = (0..count).map(|i| z.inverse_cdf((i as f64 + 0.625) / (count as f64 + 0.25))).collect();
        correlation(&sorted, &q)
    } else {
        1.0
    };
    Concentration { count, mean, variance, skewness, excess_kurtosis, quantile_correlation, chebyshev_exceedance: exceed }
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Least-squares slope of log variance on log n.
pub fn variance_scaling(ns: &[usize], variances: &[f64]) -> f64 {
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = variances.iter().map(|v| v.ln()).collect();
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Runs replications in parallel; results are ordered by replication index.
pub fn run_replications(spec: &EnsembleSpec) -> Result<(Vec<(usize, RunSummary)>, Vec<Failure>)> {
    if spec.replications < 2 {
        return Err(Error::Param("an ensemble needs at least 2 replications".into()));
    }
    spec.run.validate()?;
    let results: Vec<(usize, u64, Result<RunSummary>)> = (0..spec.replications)
        .into_par_iter()
        .map(|r| {
            let seed = replication_seed(spec.base_seed, r);
            let mut run = spec.run.clone();
            run.network.seed = seed;
            run.price_seed = seed;
            (r, seed, pipeline::run(&run).map(|o| o.summary()))
        })
        .collect();
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (r, seed, res) in results {
        match res {
            Ok(s) => ok.push((r, s)),
            Err(e) if e.is_numerical() => failures.push(Failure { replication: r, seed, error: e.to_string() }),
            Err(e) => return Err(e),
        }
    }
    if failures.len() as f64 > MAX_FAILURE_SHARE * spec.replications as f64 {
        return Err(Error::Ensemble(format!(
            "{} of {} replications failed; first: {}",
            failures.len(),
            spec.replications,
            failures[0].error
        )));
    }
    Ok((ok, failures))
}

pub fn run(spec: &EnsembleSpec) -> Result<EnsembleReport> {
    let (runs, failures) = run_replications(spec)?;
    let mut statistics = Vec::new();
    for &h in &spec.horizons {
        if h < 1 || h > spec.run.horizon {
            return Err(Error::Param(format!("summary horizon {h} outside 1..={}", spec.run.horizon)));
        }
        for (name, pick) in [
            ("phi", (|s: &RunSummary, h: usize| s.phi[h - 1]) as fn(&RunSummary, usize) -> f64),
            ("omega", |s, h| s.omega[h - 1]),
            ("psi", |s, h| s.psi[h - 1]),
        ] {
            let v: Vec<f64> = runs.iter().map(|(_, s)| pick(s, h)).collect();
            statistics.push(StatisticSummary { statistic: name.into(), horizon: Some(h), summary: concentration_check(&v) });
        }
    }
    for (name, pick) in [
        ("omega_bar", (|s: &RunSummary| s.omega_bar) as fn(&RunSummary) -> f64),
        ("psi_bar", |s| s.psi_bar),
        ("lambda2", |s| s.lambda2),
    ] {
        let v: Vec<f64> = runs.iter().map(|(_, s)| pick(s)).collect();
        statistics.push(StatisticSummary { statistic: name.into(), horizon: None, summary: concentration_check(&v) });
    }
    Ok(EnsembleReport {
        replications: spec.replications,
        included: runs.len(),
        excluded: failures.len(),
        failures,
        statistics,
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinComparison {
    pub bottom_mean: f64,
    pub top_mean: f64,
    /// Share of bootstrap resamples in which the top quartile's mean
    /// exceeds the bottom quartile's.
    pub bootstrap_share: f64,
    pub resamples: usize,
}

fn quartile_gap(points: &mut [(f64, f64)]) -> (f64, f64) {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let q = (points.len() / 4).max(1);
    let mean = |s: &[(f64, f64)]| s.iter().map(|p| p.1).sum::<f64>() / s.len() as f64;
    (mean(&points[..q]), mean(&points[points.len() - q..]))
}

/// Bins (λ2, statistic) pairs by λ2 quartile and bootstraps the
/// top-versus-bottom comparison.
pub fn lambda2_binning(points: &[(f64, f64)], resamples: usize, seed: u64) -> Result<BinComparison> {
    use rand::{Rng, SeedableRng};
    if points.len() < 8 {
        return Err(Error::Param("λ2 binning needs at least 8 draws".into()));
    }
    let (bottom_mean, top_mean) = quartile_gap(&mut points.to_vec());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut wins = 0;
    let mut sample = vec![(0.0, 0.0); points.len()];
    for _ in 0..resamples {
        for s in sample.iter_mut() {
            *s = points[rng.random_range(0..points.len())];
        }
        let (lo, hi) = quartile_gap(&mut sample);
        if hi > lo {
            wins += 1;
        }
    }
    Ok(BinComparison { bottom_mean, top_mean, bootstrap_share: wins as f64 / resamples.max(1) as f64, resamples })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Alpha,
    Nu,
    Theta,
    Pi,
    GScale,
}

impl SweepParameter {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "alpha" => SweepParameter::Alpha,
            "nu" => SweepParameter::Nu,
            "theta" => SweepParameter::Theta,
            "pi" => SweepParameter::Pi,
            "g_scale" => SweepParameter::GScale,
            other => {
                return Err(Error::Param(format!("unknown sweep parameter '{other}' (alpha, nu, theta, pi, g_scale)")))
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Alpha => "alpha",
            SweepParameter::Nu => "nu",
            SweepParameter::Theta => "theta",
            SweepParameter::Pi => "pi",
            SweepParameter::GScale => "g_scale",
        }
    }

    /// Predicted sign of d(ω, ψ)/d(parameter); None when no sign is claimed.
    pub fn expected_sign(self) -> Option<f64> {
        match self {
            SweepParameter::Alpha | SweepParameter::Theta => Some(-1.0),
            SweepParameter::Nu | SweepParameter::Pi => Some(1.0),
            SweepParameter::GScale => None,
        }
    }

    pub fn apply(self, spec: &mut RunSpec, value: f64) {
        match self {
            SweepParameter::Alpha => spec.network.alpha = value,
            SweepParameter::Nu => spec.network.nu = value,
            SweepParameter::Theta => spec.theta = value,
            SweepParameter::Pi => spec.pi = value,
            SweepParameter::GScale => {
                if let Some(h) = spec.hazard.as_mut() {
                    h.g_scale = value
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub from: f64,
    pub to: f64,
    pub statistic: String,
    pub expected_sign: Option<f64>,
    /// Paired differences (to − from), one per replication included on both arms.
    pub differences: Vec<f64>,
    pub agreement: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub parameter: String,
    pub values: Vec<f64>,
    /// Per value: replication index → (ω̄, ψ̄, M_T).
    pub arms: Vec<Vec<(usize, f64, f64, f64)>>,
    pub rows: Vec<SweepRow>,
    pub excluded: usize,
}

/// Evaluates every value with identical replication seeds and reports the
/// share of paired differences whose sign matches the prediction.
pub fn paired_sweep(spec: &EnsembleSpec, parameter: SweepParameter, values: &[f64]) -> Result<SweepTable> {
    if values.len() < 2 {
        return Err(Error::Param("a sweep needs at least two values".into()));
    }
    let mut arms = Vec::with_capacity(values.len());
    let mut excluded = 0;
    for &v in values {
        let mut s = spec.clone();
        parameter.apply(&mut s.run, v);
        let (runs, failures) = run_replications(&s)?;
        excluded += failures.len();
        arms.push(
            runs.into_iter()
                .map(|(r, x)| (r, x.omega_bar, x.psi_bar, x.final_mass))
                .collect::<Vec<_>>(),
        );
    }
    let sign = parameter.expected_sign();
    let mut rows = Vec::new();
    for w in 0..values.len() - 1 {
        for (stat, col) in [("omega_bar", 0usize), ("psi_bar", 1)] {
            let mut diffs = Vec::new();
            for a in &arms[w] {
                if let Some(b) = arms[w + 1].iter().find(|b| b.0 == a.0) {
                    let (x, y) = if col == 0 { (a.1, b.1) } else { (a.2, b.2) };
                    diffs.push(y - x);
                }
            }
            let agreement = sign.map(|s| diffs.iter().filter(|d| **d * s > 0.0).count() as f64 / diffs.len().max(1) as f64);
            rows.push(SweepRow {
                from: values[w],
                to: values[w + 1],
                statistic: stat.into(),
                expected_sign: sign,
                differences: diffs,
                agreement,
            });
        }
    }
    Ok(SweepTable { parameter: parameter.name().into(), values: values.to_vec(), arms, rows, excluded })
}

//! Distortion statistics: size of price changes (φ), relative price gap
//! (ω) and relative price entropy (ψ).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::{quantity, Economy};
use crate::pricing::PricePath;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionRecord {
    /// Horizons 1..=T.
    pub horizons: Vec<usize>,
    pub phi: Vec<f64>,
    pub omega: Vec<f64>,
    pub psi: Vec<f64>,
    pub zeta: f64,
    pub numeraire: usize,
    pub numeraire_rule: NumeraireRule,
    /// Inclusive averaging window [start, end].
    pub window: (usize, usize),
    /// (ω̄, ψ̄) over the window.
    pub time_averages: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NumeraireRule {
    /// The single firm picked by [`numeraire`].
    Firm,
    /// Geometric mean over every firm sharing that firm's degree.
    #[default]
    DegreeClass,
}

/// Firms used as the price reference under `rule`.
pub fn numeraire_set(degrees: &[usize], nu: f64, rule: NumeraireRule) -> Vec<usize> {
    let k = numeraire(degrees, nu);
    match rule {
        NumeraireRule::Firm => vec![k],
        NumeraireRule::DegreeClass => (0..degrees.len()).filter(|&i| degrees[i] == degrees[k]).collect(),
    }
}

fn geometric_mean(x: &[f64], set: &[usize]) -> f64 {
    (set.iter().map(|&i| x[i].ln()).sum::<f64>() / set.len() as f64).exp()
}

/// The firm whose d^{ν²} is closest to the cross-sectional mean; ties go
/// to the lowest index.
pub fn numeraire(degrees: &[usize], nu: f64) -> usize {
    let x: Vec<f64> = degrees.iter().map(|&d| (d as f64).powf(nu * nu)).collect();
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if (v - mean).abs() < (x[best] - mean).abs() {
            best = i;
        }
    }
    best
}

/// μ_i(ζ) = d_i^ζ / Σ d_j^ζ
pub fn degree_weights(degrees: &[usize], zeta: f64) -> Vec<f64> {
    let w: Vec<f64> = degrees.iter().map(|&d| (d as f64).powf(zeta)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn check_positive(p: &[f64]) -> Result<()> {
    match p.iter().position(|&x| !(x > 0.0)) {
        Some(i) => Err(Error::Domain(format!("nonpositive price for firm {i}"))),
        None => Ok(()),
    }
}

/// Σ μ_i(ζ) |log p_{i,T} − log p_{i,T−1}|
pub fn phi_t(prices: &[Vec<f64>], degrees: &[usize], zeta: f64, t: usize) -> Result<f64> {
    if t < 1 || t >= prices.len() {
        return Err(Error::Param(format!("horizon {t} outside 1..{}", prices.len())));
    }
    check_positive(&prices[t])?;
    check_positive(&prices[t - 1])?;
    let w = degree_weights(degrees, zeta);
    Ok(w.iter()
        .zip(&prices[t])
        .zip(&prices[t - 1])
        .map(|((w, a), b)| w * (a.ln() - b.ln()).abs())
        .sum())
}

/// r*_i = (v1_i/q_i) / (v1_k/q_k) from the stationary vector.
pub fn equilibrium_relative_prices(economy: &Economy, k: usize) -> Vec<f64> {
    let p: Vec<f64> = economy.stationary.iter().zip(&economy.quantities).map(|(v, q)| v / q).collect();
    p.iter().map(|x| x / p[k]).collect()
}

/// Degree-proxy benchmark r*_i = (μ_i/μ_k)(h(d_k)/h(d_i)) with μ ∝ d.
pub fn proxy_relative_prices(degrees: &[usize], k: usize) -> Vec<f64> {
    let dk = degrees[k] as f64;
    degrees
        .iter()
        .map(|&d| (d as f64 / dk) * (quantity(degrees[k]) / quantity(d)))
        .collect()
}

/// RMS of p_i/p_k − r*_i.
pub fn omega(prices: &[f64], rstar: &[f64], k: usize) -> Result<f64> {
    omega_against(prices, rstar, &[k])
}

/// RMS of r_i − r*_i where both are expressed relative to the geometric
/// mean over `set` (a single firm gives the plain numeraire form).
pub fn omega_against(prices: &[f64], rstar: &[f64], set: &[usize]) -> Result<f64> {
    check_positive(prices)?;
    if set.is_empty() {
        return Err(Error::Param("empty numeraire set".into()));
    }
    let pk = geometric_mean(prices, set);
    let rk = geometric_mean(rstar, set);
    let n = prices.len() as f64;
    Ok((prices.iter().zip(rstar).map(|(p, r)| (p / pk - r / rk).powi(2)).sum::<f64>() / n).sqrt())
}

/// KL divergence of normalized relative prices from the normalized benchmark.
/// The numeraire cancels in the normalization.
pub fn psi(prices: &[f64], rstar: &[f64]) -> Result<f64> {
    check_positive(prices)?;
    let sp: f64 = prices.iter().sum();
    let sr: f64 = rstar.iter().sum();
    let v: f64 = prices
        .iter()
        .zip(rstar)
        .map(|(p, r)| {
            let (a, b) = (p / sp, r / sr);
            a * (a / b).ln()
        })
        .sum();
    Ok(v.max(0.0))
}

pub fn distortion_record(
    economy: &Economy,
    path: &PricePath,
    zeta: f64,
    window: (usize, usize),
    rule: NumeraireRule,
) -> Result<DistortionRecord> {
    let t_max = path.horizon();
    if window.0 < 1 || window.0 > window.1 || window.1 > t_max {
        return Err(Error::Param(format!("window {window:?} outside 1..={t_max}")));
    }
    let k = numeraire(&economy.degrees, economy.params.nu);
    let set = numeraire_set(&economy.degrees, economy.params.nu, rule);
    let rstar = equilibrium_relative_prices(economy, k);
    let horizons: Vec<usize> = (1..=t_max).collect();
    let mut phi = Vec::with_capacity(t_max);
    let mut om = Vec::with_capacity(t_max);
    let mut ps = Vec::with_capacity(t_max);
    for &t in &horizons {
        phi.push(phi_t(&path.prices, &economy.degrees, zeta, t)?);
        om.push(omega_against(&path.prices[t], &rstar, &set)?);
        ps.push(psi(&path.prices[t], &rstar)?);
    }
    let len = (window.1 - window.0 + 1) as f64;
    let avg = |v: &[f64]| v[window.0 - 1..window.1].iter().sum::<f64>() / len;
    let time_averages = (avg(&om), avg(&ps));
    Ok(DistortionRecord { horizons, phi, omega: om, psi: ps, zeta, numeraire: k, numeraire_rule: rule, window, time_averages })
}

/// Central finite-difference elasticities d log S / d log π at `pi0` for
/// S = (φ, ω, ψ), with the runner evaluated at π0 ± h.
pub fn elasticities(runner: impl Fn(f64) -> Result<(f64, f64, f64)>, pi0: f64, h: f64) -> Result<(f64, f64, f64)> {
    if !(pi0 > h && h > 0.0) {
        return Err(Error::Param(format!("need pi0 > h > 0, got pi0={pi0} h={h}")));
    }
    let (lo, hi) = (runner(pi0 - h)?, runner(pi0 + h)?);
    let dlogpi = ((pi0 + h) / (pi0 - h)).ln();
    let el = |a: f64, b: f64, name: &str| {
        if a > 0.0 && b > 0.0 {
            Ok((b / a).ln() / dlogpi)
        } else {
            Err(Error::Domain(format!("{name} is not positive at both evaluation points")))
        }
    };
    Ok((el(lo.0, hi.0, "phi")?, el(lo.1, hi.1, "omega")?, el(lo.2, hi.2, "psi")?))
}

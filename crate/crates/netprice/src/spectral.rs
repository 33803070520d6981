//! Leading and subdominant eigenstructure of a column-stochastic matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::Economy;
use crate::sparse::CscMatrix;

pub const MAX_ITERS: usize = 10_000;
pub const STATIONARY_MAX_ITERS: usize = 100_000;
pub const TOL: f64 = 1e-10;
/// Rayleigh-quotient monitoring window for complex-pair detection.
pub const WINDOW: usize = 50;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub lambda2: f64,
    pub gap: f64,
    pub v1: Vec<f64>,
    /// Unit L2 norm, sign chosen so that v2·δ ≥ 0.
    pub v2: Vec<f64>,
    /// Unit L2 norm, sign chosen so that u2·(d^{-ν} − mean) ≥ 0.
    pub u2: Vec<f64>,
    pub relaxation_time: f64,
    pub iterations: usize,
}

impl SpectralSummary {
    /// Entry (i, j) of the rank-one projector v2 u2ᵀ / (u2ᵀ v2).
    pub fn projector_entry(&self, i: usize, j: usize) -> f64 {
        self.v2[i] * self.u2[j] / dot(&self.u2, &self.v2)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProxyVectors {
    pub delta: Vec<f64>,
    pub uproxy: Vec<f64>,
    /// None when a proxy (or eigenvector) has zero norm.
    pub alignment_v: Option<f64>,
    pub alignment_u: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TwoModeShock {
    pub permanent: Vec<f64>,
    /// Transitory component at lags 0..=horizon.
    pub transitory: Vec<Vec<f64>>,
    /// Exact A^τ · shock at lags 0..=horizon.
    pub exact: Vec<Vec<f64>>,
    /// L2 error of permanent + transitory against exact, per lag.
    pub error: Vec<f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn l1_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let (na, nb) = (norm2(a), norm2(b));
    if na < 1e-300 || nb < 1e-300 {
        None
    } else {
        Some(dot(a, b) / (na * nb))
    }
}

/// Perron vector of a column-stochastic matrix by power iteration from the
/// uniform vector, L1-normalized.
pub fn stationary_vector(a: &CscMatrix) -> Result<Vec<f64>> {
    let n = a.n;
    let mut v = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..STATIONARY_MAX_ITERS {
        let mut w = a.mul_vec(&v);
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        residual = l1_diff(&w, &v);
        v = w;
        if residual < TOL * 1e-2 {
            break;
        }
    }
    let check = l1_diff(&a.mul_vec(&v), &v);
    if check >= TOL {
        return Err(Error::NoConvergence { iters: STATIONARY_MAX_ITERS, residual: residual.max(check) });
    }
    Ok(v)
}

fn start_vector(n: usize, seed: u64, orth: &[f64]) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    // Remove the component along the deflated direction.
    let c = dot(&x, orth) / dot(orth, orth);
    x.iter_mut().zip(orth).for_each(|(xi, oi)| *xi -= c * oi);
    let nx = norm2(&x);
    x.iter_mut().for_each(|xi| *xi /= nx);
    x
}

/// Power iteration on a deflated operator, watching the Rayleigh quotient
/// for the persistent oscillation that signals a complex dominant pair.
fn deflated_power(apply: impl Fn(&[f64]) -> Vec<f64>, mut x: Vec<f64>) -> Result<(f64, Vec<f64>, usize)> {
    let mut rq = Vec::with_capacity(MAX_ITERS);
    let mut prev_spread = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut window_residual = f64::INFINITY;
    for it in 0..MAX_ITERS {
        let y = apply(&x);
        let rho = dot(&x, &y);
        residual = y.iter().zip(&x).map(|(yi, xi)| (yi - rho * xi).powi(2)).sum::<f64>().sqrt();
        rq.push(rho);
        let ny = norm2(&y);
        if ny < 1e-300 {
            return Ok((0.0, x, it + 1));
        }
        if residual < TOL * rho.abs().max(1e-3) {
            return Ok((rho, x, it + 1));
        }
        x = y.into_iter().map(|v| v / ny).collect();
        if (it + 1) % WINDOW == 0 {
            let w = &rq[rq.len() - WINDOW..];
            let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let spread = hi - lo;
            if spread > 1e-6 && spread > 0.9 * prev_spread {
                return Err(Error::Assumption(format!(
                    "deflated Rayleigh quotient oscillates in [{lo:.4}, {hi:.4}] after {} iterations; \
                     dominant subdominant eigenvalue is complex or sign-alternating",
                    it + 1
                )));
            }
            // A real isolated eigenvalue shrinks the residual geometrically.
            // A rotating complex pair keeps it flat even when the quotient
            // itself is constant (normal matrices).
            if residual > 1e-6 * rho.abs().max(1e-3) && residual > 0.99 * window_residual {
                return Err(Error::Assumption(format!(
                    "deflated residual stalls at {residual:.3e} after {} iterations; \
                     no isolated real subdominant eigenvalue",
                    it + 1
                )));
            }
            prev_spread = spread;
            window_residual = residual;
        }
    }
    Err(Error::NoConvergence { iters: MAX_ITERS, residual })
}

/// λ2 with right and left vectors (unnormalized signs) of a column-stochastic
/// matrix with known Perron vector v1.
pub fn subdominant_raw(a: &CscMatrix, v1: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>, usize)> {
    let n = a.n;
    let ones = vec![1.0; n];
    let right = |x: &[f64]| {
        let s: f64 = x.iter().sum();
        let mut y = a.mul_vec(x);
        y.iter_mut().zip(v1).for_each(|(yi, vi)| *yi -= vi * s);
        y
    };
    let (lambda2, v2, it_r) = deflated_power(right, start_vector(n, 0x5eed_0001, &ones))?;
    let left = |x: &[f64]| {
        let s = dot(v1, x);
        let mut y = a.tmul_vec(x);
        y.iter_mut().for_each(|yi| *yi -= s);
        y
    };
    let (mu2, u2, it_l) = deflated_power(left, start_vector(n, 0x5eed_0002, v1))?;
    if !(lambda2 > 0.0) {
        return Err(Error::Assumption(format!("subdominant eigenvalue {lambda2:.6} is not strictly positive")));
    }
    if (mu2 - lambda2).abs() > 1e-6 {
        return Err(Error::Assumption(format!(
            "left and right deflated iterations disagree ({mu2:.8} vs {lambda2:.8}); no isolated real λ2"
        )));
    }
    Ok((lambda2, v2, u2, it_r + it_l))
}

pub fn proxy_shapes(degrees: &[usize], nu: f64) -> (Vec<f64>, Vec<f64>) {
    let centered = |e: f64| {
        let x: Vec<f64> = degrees.iter().map(|&d| (d as f64).powf(e)).collect();
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.into_iter().map(|v| v - m).collect::<Vec<f64>>()
    };
    (centered(nu * nu), centered(-nu))
}

fn orient(v: &mut [f64], reference: &[f64]) {
    let s = dot(v, reference);
    let flip = if s.abs() > 1e-300 {
        s < 0.0
    } else {
        let k = (0..v.len()).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0);
        v.get(k).is_some_and(|x| *x < 0.0)
    };
    if flip {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn subdominant_pair(economy: &Economy) -> Result<SpectralSummary> {
    let v1 = economy.stationary.clone();
    let (lambda2, mut v2, mut u2, iterations) = subdominant_raw(&economy.adjacency, &v1)?;
    let (delta, uproxy) = proxy_shapes(&economy.degrees, economy.params.nu);
    orient(&mut v2, &delta);
    orient(&mut u2, &uproxy);
    let gap = 1.0 - lambda2;
    if !(gap > 0.0) {
        return Err(Error::Assumption(format!("λ2 = {lambda2} leaves no spectral gap")));
    }
    Ok(SpectralSummary { lambda2, gap, v1, v2, u2, relaxation_time: 1.0 / gap, iterations })
}

pub fn proxy_vectors(economy: &Economy, summary: &SpectralSummary) -> ProxyVectors {
    let (delta, uproxy) = proxy_shapes(&economy.degrees, economy.params.nu);
    let alignment_v = cosine(&summary.v2, &delta);
    let alignment_u = cosine(&summary.u2, &uproxy);
    ProxyVectors { delta, uproxy, alignment_v, alignment_u }
}

pub fn two_mode_shock(economy: &Economy, summary: &SpectralSummary, shock: &[f64], horizon: usize) -> TwoModeShock {
    let mass: f64 = shock.iter().sum();
    let permanent: Vec<f64> = summary.v1.iter().map(|v| v * mass).collect();
    let coef = dot(&summary.u2, shock) / dot(&summary.u2, &summary.v2);
    let mut transitory = Vec::with_capacity(horizon + 1);
    let mut exact = Vec::with_capacity(horizon + 1);
    let mut error = Vec::with_capacity(horizon + 1);
    let mut x = shock.to_vec();
    for tau in 0..=horizon {
        if tau > 0 {
            x = economy.adjacency.mul_vec(&x);
        }
        let scale = summary.lambda2.powi(tau as i32) * coef;
        let tr: Vec<f64> = summary.v2.iter().map(|v| v * scale).collect();
        let err = x
            .iter()
            .zip(&permanent)
            .zip(&tr)
            .map(|((e, p), t)| (e - p - t).powi(2))
            .sum::<f64>()
            .sqrt();
        transitory.push(tr);
        exact.push(x.clone());
        error.push(err);
    }
    TwoModeShock { permanent, transitory, exact, error }
}

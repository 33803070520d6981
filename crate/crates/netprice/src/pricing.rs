//! Flexible market-clearing prices and sticky prices under a separable
//! duration × exposure reset hazard.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monetary::MoneyTrajectory;
use crate::netgen::Economy;
use crate::spectral::proxy_shapes;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HazardDriver {
    /// g(π · age)
    #[default]
    Age,
    /// g(|log p_flex − log p_posted|)
    Gap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HazardSpec {
    pub g_scale: f64,
    pub epsilon_cap: f64,
    pub c0: f64,
    pub c1: f64,
    pub kappa_f: f64,
    #[serde(default)]
    pub driver: HazardDriver,
}

impl Default for HazardSpec {
    fn default() -> Self {
        HazardSpec { g_scale: 40.0, epsilon_cap: 0.01, c0: 0.05, c1: 0.3, kappa_f: 0.1, driver: HazardDriver::Age }
    }
}

impl HazardSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.g_scale > 0.0
            && self.epsilon_cap > 0.0
            && self.epsilon_cap < 1.0
            && 0.0 < self.c0
            && self.c0 < self.c1
            && self.c1 < 1.0
            && self.kappa_f > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Param(format!("invalid hazard spec {self:?}")))
        }
    }

    /// g(x) = 1 − exp(−x/s)
    pub fn g(&self, x: f64) -> f64 {
        1.0 - (-x / self.g_scale).exp()
    }

    /// Saturation point x̄ = −s ln ε, so that g(x̄) = 1 − ε.
    pub fn x_cap(&self) -> f64 {
        -self.g_scale * self.epsilon_cap.ln()
    }

    /// Age ū = x̄ / π beyond which the duration factor is 1.
    pub fn u_bar(&self, pi: f64) -> f64 {
        if pi > 0.0 {
            self.x_cap() / pi
        } else {
            f64::INFINITY
        }
    }

    /// Capped duration factor g̃.
    pub fn g_capped(&self, x: f64) -> f64 {
        if x >= self.x_cap() {
            1.0
        } else {
            self.g(x)
        }
    }

    /// f(δ) = c0 + (c1 − c0) δ² / (δ² + κ_f)
    pub fn f(&self, delta: f64) -> f64 {
        let d2 = delta * delta;
        self.c0 + (self.c1 - self.c0) * d2 / (d2 + self.kappa_f)
    }
}

/// η = g̃(π·age) f(δ). The cap is applied on age (age ≥ ū ⇒ g̃ = 1).
pub fn hazard(spec: &HazardSpec, pi: f64, age: usize, delta: f64) -> f64 {
    let u = age as f64;
    let g = if u >= spec.u_bar(pi) { 1.0 } else { spec.g(pi * u) };
    g * spec.f(delta)
}

/// Gap-driven variant η = g̃(|log gap|) f(δ).
pub fn hazard_gap(spec: &HazardSpec, log_gap: f64, delta: f64) -> f64 {
    spec.g_capped(log_gap.abs()) * spec.f(delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Flexible,
    Sticky,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePath {
    pub regime: Regime,
    /// Posted prices, t = 0..=T.
    pub prices: Vec<Vec<f64>>,
    pub market_clearing: Vec<Vec<f64>>,
    pub ages: Vec<Vec<usize>>,
    /// Last reset date per firm at the final period.
    pub last_reset: Vec<usize>,
    pub reset_events: Vec<(usize, usize)>,
    /// q_i − D_{i,t}/p_{i,t}: unsold output when positive, rationed demand
    /// when negative. Diagnostic only.
    pub excess_supply: Vec<Vec<f64>>,
}

impl PricePath {
    pub fn horizon(&self) -> usize {
        self.prices.len() - 1
    }

    /// Largest fraction of firms resetting in a single period.
    pub fn synchronization_index(&self) -> f64 {
        let n = self.prices[0].len() as f64;
        let mut counts = vec![0usize; self.prices.len()];
        for &(t, _) in &self.reset_events {
            counts[t] += 1;
        }
        counts.iter().map(|&c| c as f64 / n).fold(0.0, f64::max)
    }

    pub fn reset_frequency(&self) -> f64 {
        let n = self.prices[0].len();
        let periods = self.horizon().max(1);
        self.reset_events.len() as f64 / (n * periods) as f64
    }
}

fn excess(q: &[f64], demand: &[f64], prices: &[f64]) -> Vec<f64> {
    q.iter().zip(demand).zip(prices).map(|((q, d), p)| q - d / p).collect()
}

fn market_clearing(economy: &Economy, trajectory: &MoneyTrajectory) -> Result<Vec<Vec<f64>>> {
    trajectory
        .nominal_demand
        .iter()
        .enumerate()
        .map(|(t, d)| {
            let p: Vec<f64> = d.iter().zip(&economy.quantities).map(|(d, q)| d / q).collect();
            match p.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
                Some(i) => Err(Error::Domain(format!("nonpositive market-clearing price for firm {i} at t={t}"))),
                None => Ok(p),
            }
        })
        .collect()
}

pub fn flexible_prices(economy: &Economy, trajectory: &MoneyTrajectory) -> Result<PricePath> {
    let mc = market_clearing(economy, trajectory)?;
    let n = economy.n();
    let t_max = mc.len() - 1;
    let excess_supply = mc
        .iter()
        .zip(&trajectory.nominal_demand)
        .map(|(p, d)| excess(&economy.quantities, d, p))
        .collect();
    let reset_events = (1..=t_max).flat_map(|t| (0..n).map(move |i| (t, i))).collect();
    Ok(PricePath {
        regime: Regime::Flexible,
        prices: mc.clone(),
        market_clearing: mc,
        ages: vec![vec![0; n]; t_max + 1],
        last_reset: vec![t_max; n],
        reset_events,
        excess_supply,
    })
}

/// RNG stream `stream` of the base seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Starts at market-clearing prices at t = 0 with all ages zero. Each later
/// period a firm resets with the hazard probability, posting the current
/// market-clearing price; otherwise its price is carried.
pub fn sticky_prices(economy: &Economy, trajectory: &MoneyTrajectory, spec: &HazardSpec, seed: u64) -> Result<PricePath> {
    sticky_with_rng(economy, trajectory, spec, &mut stream_rng(seed, 0))
}

fn sticky_with_rng(
    economy: &Economy,
    trajectory: &MoneyTrajectory,
    spec: &HazardSpec,
    rng: &mut ChaCha8Rng,
) -> Result<PricePath> {
    spec.validate()?;
    let mc = market_clearing(economy, trajectory)?;
    let (delta, _) = proxy_shapes(&economy.degrees, economy.params.nu);
    let exposure: Vec<f64> = delta.iter().map(|&d| spec.f(d)).collect();
    let n = economy.n();
    let t_max = mc.len() - 1;
    let pi = trajectory.pi;
    let mut prices = Vec::with_capacity(t_max + 1);
    let mut ages = Vec::with_capacity(t_max + 1);
    let mut last_reset = vec![0usize; n];
    let mut reset_events = Vec::new();
    prices.push(mc[0].clone());
    ages.push(vec![0usize; n]);
    for t in 1..=t_max {
        let mut p = prices[t - 1].clone();
        let mut age: Vec<usize> = ages[t - 1].iter().map(|a| a + 1).collect();
        for i in 0..n {
            let eta = match spec.driver {
                HazardDriver::Age => hazard(spec, pi, age[i], delta[i]),
                HazardDriver::Gap => spec.g_capped((mc[t][i].ln() - p[i].ln()).abs()) * exposure[i],
            };
            if rng.random::<f64>() < eta {
                p[i] = mc[t][i];
                age[i] = 0;
                last_reset[i] = t;
                reset_events.push((t, i));
            }
        }
        prices.push(p);
        ages.push(age);
    }
    let excess_supply = prices
        .iter()
        .zip(&trajectory.nominal_demand)
        .map(|(p, d)| excess(&economy.quantities, d, p))
        .collect();
    Ok(PricePath { regime: Regime::Sticky, prices, market_clearing: mc, ages, last_reset, reset_events, excess_supply })
}

/// Independent sticky replications sharing one trajectory; replication r
/// uses RNG stream r of `seed`.
pub fn sticky_replications(
    economy: &Economy,
    trajectory: &MoneyTrajectory,
    spec: &HazardSpec,
    seed: u64,
    reps: usize,
) -> Result<Vec<PricePath>> {
    (0..reps)
        .into_par_iter()
        .map(|r| sticky_with_rng(economy, trajectory, spec, &mut stream_rng(seed, r as u64)))
        .collect()
}

/// Distribution over t = 0..=T of the vintage (last reset date) in force
/// for `firm` at date T, estimated across replications.
pub fn vintage_weights(paths: &[PricePath], firm: usize, t_end: usize) -> Vec<f64> {
    let mut w = vec![0.0; t_end + 1];
    if paths.is_empty() {
        return w;
    }
    for path in paths {
        let v = match path.regime {
            Regime::Flexible => t_end,
            Regime::Sticky => t_end - path.ages[t_end][firm],
        };
        w[v] += 1.0;
    }
    let r = paths.len() as f64;
    w.iter_mut().for_each(|x| *x /= r);
    w
}

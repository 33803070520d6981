//! Fixed-rate money injection: balance recursion, injection shares and
//! the misalignment scalar C_t.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::Economy;

/// Balances below this fraction of the mean are floored before the θ-power.
pub const BALANCE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UpdateForm {
    /// m_{t+1} = A (m_t + χ_{t+1} γ_t)
    #[default]
    Propagated,
    /// m_{t+1} = A m_t + π M_t γ_t
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonetaryParams {
    pub pi: f64,
    pub theta: f64,
    pub m0: Vec<f64>,
    pub horizon: usize,
    #[serde(default)]
    pub form: UpdateForm,
}

impl MonetaryParams {
    pub fn new(pi: f64, theta: f64, m0: Vec<f64>, horizon: usize) -> Self {
        MonetaryParams { pi, theta, m0, horizon, form: UpdateForm::Propagated }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pi >= 0.0) || !self.pi.is_finite() {
            return Err(Error::Param(format!("pi must be finite and nonnegative, got {}", self.pi)));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Param(format!("theta must lie in (0,1], got {}", self.theta)));
        }
        if self.horizon < 1 {
            return Err(Error::Param("horizon must be at least 1".into()));
        }
        if self.m0.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::Param("m0 must be finite and nonnegative".into()));
        }
        if !(self.m0.iter().sum::<f64>() > 0.0) {
            return Err(Error::Param("m0 must have positive total".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoneyTrajectory {
    /// m_t for t = 0..=T.
    pub balances: Vec<Vec<f64>>,
    /// γ_t computed from m_t, t = 0..=T.
    pub shares: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
    pub misalignment: Vec<f64>,
    /// D_t = A m_t.
    pub nominal_demand: Vec<Vec<f64>>,
    pub pi: f64,
}

impl MoneyTrajectory {
    pub fn horizon(&self) -> usize {
        self.balances.len() - 1
    }
}

/// γ = m^θ / Σ m^θ.
pub fn injection_shares(m: &[f64], theta: f64) -> Result<Vec<f64>> {
    let total: f64 = m.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain("money balances have zero total mass".into()));
    }
    let floor = BALANCE_FLOOR * total / m.len() as f64;
    let mut g: Vec<f64> = m.iter().map(|&x| x.max(floor).powf(theta)).collect();
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|x| *x /= s);
    Ok(g)
}

pub fn step(economy: &Economy, params: &MonetaryParams, m: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let gamma = injection_shares(m, params.theta)?;
    let mass: f64 = m.iter().sum();
    let chi = params.pi * mass;
    let a = &economy.adjacency;
    let next = match params.form {
        UpdateForm::Propagated => {
            let x: Vec<f64> = m.iter().zip(&gamma).map(|(mi, gi)| mi + chi * gi).collect();
            a.mul_vec(&x)
        }
        UpdateForm::Direct => {
            let mut y = a.mul_vec(m);
            y.iter_mut().zip(&gamma).for_each(|(yi, gi)| *yi += chi * gi);
            y
        }
    };
    Ok((next, gamma))
}

pub fn misalignment_ct(degrees: &[usize], gamma: &[f64], nu: f64) -> f64 {
    let w: Vec<f64> = degrees.iter().map(|&d| (d as f64).powf(-nu)).collect();
    let tilted: f64 = gamma.iter().zip(&w).map(|(g, x)| g * x).sum();
    tilted - w.iter().sum::<f64>() / w.len() as f64
}

pub fn simulate(economy: &Economy, params: &MonetaryParams) -> Result<MoneyTrajectory> {
    params.validate()?;
    if params.m0.len() != economy.n() {
        return Err(Error::Param(format!("m0 has length {}, economy has {} firms", params.m0.len(), economy.n())));
    }
    let nu = economy.params.nu;
    let t_max = params.horizon;
    let mut balances = Vec::with_capacity(t_max + 1);
    let mut shares = Vec::with_capacity(t_max + 1);
    let mut mass = Vec::with_capacity(t_max + 1);
    let mut misalignment = Vec::with_capacity(t_max + 1);
    let mut nominal_demand = Vec::with_capacity(t_max + 1);
    let mut m = params.m0.clone();
    for t in 0..=t_max {
        let (next, gamma) = if t < t_max {
            let (nx, g) = step(economy, params, &m)?;
            (Some(nx), g)
        } else {
            (None, injection_shares(&m, params.theta)?)
        };
        mass.push(m.iter().sum());
        misalignment.push(misalignment_ct(&economy.degrees, &gamma, nu));
        nominal_demand.push(economy.adjacency.mul_vec(&m));
        shares.push(gamma);
        balances.push(std::mem::take(&mut m));
        if let Some(nx) = next {
            m = nx;
        }
    }
    Ok(MoneyTrajectory { balances, shares, mass, misalignment, nominal_demand, pi: params.pi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSteady {
    pub gamma_ub: Vec<f64>,
    pub c_ub: f64,
    pub c_lb: f64,
}

/// (E[d^{e−ν}] − E[d^{−ν}] E[d^e]) / E[d^e] on the empirical degrees.
pub fn tilt_misalignment(degrees: &[usize], e: f64, nu: f64) -> f64 {
    let n = degrees.len() as f64;
    let mom = |s: f64| degrees.iter().map(|&d| (d as f64).powf(s)).sum::<f64>() / n;
    (mom(e - nu) - mom(-nu) * mom(e)) / mom(e)
}

/// Mean-field injection profile γ_ub ∝ d^{(1−ν)θ} and the bracketing
/// constants C_ub (exponent (1−ν)θ) and C_lb (exponent θ).
pub fn gamma_steady(economy: &Economy, theta: f64, nu: f64) -> GammaSteady {
    let e = (1.0 - nu) * theta;
    let mut g: Vec<f64> = economy.degrees.iter().map(|&d| (d as f64).powf(e)).collect();
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|x| *x /= s);
    GammaSteady {
        gamma_ub: g,
        c_ub: tilt_misalignment(&economy.degrees, e, nu),
        c_lb: tilt_misalignment(&economy.degrees, theta, nu),
    }
}

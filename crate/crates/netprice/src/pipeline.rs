//! One end-to-end run: generate → spectral → monetary → pricing → stats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monetary::{self, GammaSteady, MoneyTrajectory, MonetaryParams, UpdateForm};
use crate::netgen::{build_economy, Economy, NetworkParams};
use crate::pricing::{self, HazardSpec, PricePath};
use crate::spectral::{self, SpectralSummary};
use crate::stats::{self, DistortionRecord, NumeraireRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StartState {
    /// m0 = v1 (equilibrium balances, unit mass).
    #[default]
    Stationary,
    /// m0 uniform with unit mass.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub network: NetworkParams,
    pub pi: f64,
    pub theta: f64,
    pub horizon: usize,
    pub zeta: f64,
    pub form: UpdateForm,
    pub start: StartState,
    pub hazard: Option<HazardSpec>,
    /// Seed for the sticky-price draws.
    pub price_seed: u64,
    /// Steady averaging window, inclusive.
    pub window: (usize, usize),
    pub numeraire: NumeraireRule,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            network: NetworkParams::default(),
            pi: 0.02,
            theta: 0.5,
            horizon: 60,
            zeta: 0.25,
            form: UpdateForm::Propagated,
            start: StartState::Stationary,
            hazard: None,
            price_seed: 0,
            window: (40, 60),
            numeraire: NumeraireRule::DegreeClass,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub economy: Economy,
    pub spectral: SpectralSummary,
    pub trajectory: MoneyTrajectory,
    pub steady: GammaSteady,
    pub flexible: PricePath,
    pub sticky: Option<PricePath>,
    pub flexible_stats: DistortionRecord,
    pub sticky_stats: Option<DistortionRecord>,
}

/// Scalar summary of a run, used for ensembles and CSV rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub lambda2: f64,
    pub relaxation_time: f64,
    pub knn_slope: Option<f64>,
    pub c_ub: f64,
    pub c_lb: f64,
    pub phi: Vec<f64>,
    pub omega: Vec<f64>,
    pub psi: Vec<f64>,
    pub omega_bar: f64,
    pub psi_bar: f64,
    pub misalignment: Vec<f64>,
    /// Aggregate money mass at the final period.
    pub final_mass: f64,
    /// Last horizon of the transient window, ⌈5 τ⌉.
    pub transient_end: usize,
    pub sticky_omega: Option<Vec<f64>>,
    pub sticky_omega_bar: Option<f64>,
}

/// End of the transient window: five relaxation times, rounded up.
pub fn transient_end(relaxation_time: f64) -> usize {
    (5.0 * relaxation_time).ceil().max(1.0) as usize
}

/// Mean |φ_T − log(1+π)| over horizons a..=b (1-based).
pub fn transient_deviation(phi: &[f64], pi: f64, a: usize, b: usize) -> f64 {
    let target = pi.ln_1p();
    let b = b.min(phi.len());
    if a < 1 || a > b {
        return f64::NAN;
    }
    phi[a - 1..b].iter().map(|p| (p - target).abs()).sum::<f64>() / (b - a + 1) as f64
}

pub fn initial_balances(economy: &Economy, start: StartState) -> Vec<f64> {
    match start {
        StartState::Stationary => economy.stationary.clone(),
        StartState::Uniform => vec![1.0 / economy.n() as f64; economy.n()],
    }
}

impl RunSpec {
    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if self.window.0 < 1 || self.window.0 > self.window.1 || self.window.1 > self.horizon {
            return Err(Error::Param(format!("window {:?} must lie in 1..={}", self.window, self.horizon)));
        }
        if let Some(h) = &self.hazard {
            h.validate()?;
        }
        Ok(())
    }

    pub fn monetary(&self, economy: &Economy) -> MonetaryParams {
        MonetaryParams {
            pi: self.pi,
            theta: self.theta,
            m0: initial_balances(economy, self.start),
            horizon: self.horizon,
            form: self.form,
        }
    }
}

/// Runs money, prices and statistics on an existing economy.
pub fn run_on(economy: Economy, spec: &RunSpec) -> Result<RunOutput> {
    spec.validate()?;
    let summary = spectral::subdominant_pair(&economy)?;
    let trajectory = monetary::simulate(&economy, &spec.monetary(&economy))?;
    let steady = monetary::gamma_steady(&economy, spec.theta, economy.params.nu);
    let flexible = pricing::flexible_prices(&economy, &trajectory)?;
    let flexible_stats = stats::distortion_record(&economy, &flexible, spec.zeta, spec.window, spec.numeraire)?;
    let (sticky, sticky_stats) = match &spec.hazard {
        Some(h) => {
            let path = pricing::sticky_prices(&economy, &trajectory, h, spec.price_seed)?;
            let st = stats::distortion_record(&economy, &path, spec.zeta, spec.window, spec.numeraire)?;
            (Some(path), Some(st))
        }
        None => (None, None),
    };
    Ok(RunOutput { economy, spectral: summary, trajectory, steady, flexible, sticky, flexible_stats, sticky_stats })
}

pub fn run(spec: &RunSpec) -> Result<RunOutput> {
    spec.validate()?;
    run_on(build_economy(&spec.network)?, spec)
}

impl RunOutput {
    pub fn summary(&self) -> RunSummary {
        let f = &self.flexible_stats;
        RunSummary {
            seed: self.economy.params.seed,
            lambda2: self.spectral.lambda2,
            relaxation_time: self.spectral.relaxation_time,
            knn_slope: crate::netgen::knn_slope(&self.economy),
            c_ub: self.steady.c_ub,
            c_lb: self.steady.c_lb,
            phi: f.phi.clone(),
            omega: f.omega.clone(),
            psi: f.psi.clone(),
            omega_bar: f.time_averages.0,
            psi_bar: f.time_averages.1,
            misalignment: self.trajectory.misalignment.clone(),
            final_mass: *self.trajectory.mass.last().unwrap(),
            transient_end: transient_end(self.spectral.relaxation_time),
            sticky_omega: self.sticky_stats.as_ref().map(|s| s.omega.clone()),
            sticky_omega_bar: self.sticky_stats.as_ref().map(|s| s.time_averages.0),
        }
    }
}

/// Baseline settings for the theory report that are not part of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub calvo_eta: f64,
    /// (η₀, β, κ) of the menu-cost hazard.
    pub menu: (f64, f64, f64),
}

impl Default for BaselineSpec {
    fn default() -> Self {
        BaselineSpec { calvo_eta: 0.5, menu: (0.5, 1.0, 0.1) }
    }
}

impl RunOutput {
    /// Closed-form predictions evaluated on this run's realized degrees,
    /// λ2 and C_t series. R* is the normalized equilibrium price profile and
    /// z_i = δ_i/μ_i with μ normalized to unit mean (μ_i = d_i/mean(d)), so
    /// that z does not grow with n.
    pub fn theory(&self, spec: &RunSpec, base: &BaselineSpec) -> crate::theory::TheoryPrediction {
        let e = &self.economy;
        let moments = crate::moments::EmpiricalMoments::new(&e.degrees);
        let k = stats::numeraire(&e.degrees, e.params.nu);
        let r = stats::equilibrium_relative_prices(e, k);
        let rs: f64 = r.iter().sum();
        let rstar: Vec<f64> = r.iter().map(|x| x / rs).collect();
        let dsum: f64 = e.degrees.iter().map(|&d| d as f64).sum();
        let proxy = spectral::proxy_vectors(e, &self.spectral);
        let dmean = dsum / e.n() as f64;
        let z: Vec<f64> = proxy.delta.iter().zip(&e.degrees).map(|(dl, &d)| dl * dmean / d as f64).collect();
        crate::theory::predict(&crate::theory::TheoryInputs {
            moments: &moments,
            moments_label: "empirical",
            alpha: e.params.alpha,
            nu: e.params.nu,
            theta: spec.theta,
            pi: spec.pi,
            lambda2: self.spectral.lambda2,
            c_series: &self.trajectory.misalignment,
            m_tilde: self.trajectory.mass[0],
            rstar_weights: &rstar,
            z: &z,
            calvo_eta: base.calvo_eta,
            menu: base.menu,
            mu_numeraire: e.degrees[k] as f64 / dsum,
        })
    }
}

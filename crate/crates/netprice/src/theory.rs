//! Closed-form analytics: ζ*, transient kernels, distortion constants,
//! Calvo/menu-cost baselines, the Wronskian band and vintage sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::MomentProvider;

/// G(ζ) = E[d^{ζ−1+ν²}] − E[d^{ζ−1}] E[d^{ν²}]
pub fn g_of_zeta(m: &impl MomentProvider, zeta: f64, nu: f64) -> f64 {
    let nu2 = nu * nu;
    m.moment(zeta - 1.0 + nu2) - m.moment(zeta - 1.0) * m.moment(nu2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaStar {
    /// Bisection zero of G on [0, 2]; None if G does not change sign.
    pub root: Option<f64>,
    /// min(1, α − ν²)
    pub approximation: f64,
}

pub fn zeta_star(m: &impl MomentProvider, nu: f64, alpha: f64) -> ZetaStar {
    let approximation = 1f64.min(alpha - nu * nu);
    let g = |z: f64| g_of_zeta(m, z, nu);
    let (mut lo, mut hi) = (0.0, 2.0);
    let (glo, ghi) = (g(lo), g(hi));
    if glo.signum() == ghi.signum() {
        return ZetaStar { root: None, approximation };
    }
    let rising = glo < 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            return ZetaStar { root: Some(mid), approximation };
        }
        if (gm < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ZetaStar { root: Some(0.5 * (lo + hi)), approximation }
}

/// X_T = Σ_{t=1}^{T−1} C_t ϱ^{T−t} with ϱ = λ2/(1+π), and
/// ξ_T = π(1+π) X_T / m̃. `c_series[t]` is C_t.
pub fn transient_scale(lambda2: f64, pi: f64, c_series: &[f64], m_tilde: f64, t: usize) -> Result<(f64, f64)> {
    if t < 2 || t > c_series.len() {
        return Err(Error::Param(format!("horizon {t} needs 2 <= T <= {}", c_series.len())));
    }
    let rho = lambda2 / (1.0 + pi);
    let x: f64 = (1..t).map(|k| c_series[k] * rho.powi((t - k) as i32)).sum();
    Ok((x, pi * (1.0 + pi) * x / m_tilde))
}

/// Ĥ = C_ub λ2 / (1 + π − λ2)
pub fn steady_kernel(c_ub: f64, lambda2: f64, pi: f64) -> f64 {
    c_ub * lambda2 / (1.0 + pi - lambda2)
}

/// 𝒳₀ = C_ub λ2 / (1 − λ2)
pub fn zero_inflation_kernel(c_ub: f64, lambda2: f64) -> f64 {
    c_ub * lambda2 / (1.0 - lambda2)
}

/// Power-law closure α/(α+v) − (α−(1−v)θ)/(α−(1−v)θ+v) used with 𝒲_ω.
pub fn c_ub_closure(alpha: f64, v: f64, theta: f64) -> f64 {
    let a2 = alpha - (1.0 - v) * theta;
    alpha / (alpha + v) - a2 / (a2 + v)
}

/// The signed closure C̃_ub(θ) = (α−(1−v)θ)/(α−(1−v)θ+v) − α/(α+v) that the
/// θ comparative static differentiates. Equals −c_ub_closure.
pub fn c_ub_closure_signed(alpha: f64, v: f64, theta: f64) -> f64 {
    -c_ub_closure(alpha, v, theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaConstants {
    pub a: f64,
    pub b: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub q: f64,
    pub h: f64,
    pub c_ub: f64,
}

pub fn omega_constants(alpha: f64, nu: f64, theta: f64, v: f64, lambda2: f64) -> Result<OmegaConstants> {
    let nu2 = nu * nu;
    let dens = [alpha - 2.0, alpha - 1.0 - nu2, alpha + 2.0 - 2.0 * nu2, alpha + 2.0 - nu2, 1.0 - lambda2];
    if dens.iter().any(|&d| !(d > 0.0)) || !(lambda2 >= 0.0) {
        return Err(Error::Domain(format!(
            "W_omega needs alpha > 2, alpha > 1 + nu^2 and 0 <= lambda2 < 1 (alpha={alpha}, nu={nu}, lambda2={lambda2})"
        )));
    }
    let a = (alpha - 1.0) / (alpha - 2.0);
    let b = (alpha - 1.0) / (alpha - 1.0 - nu2);
    let (k1, k2, k3) = (1.0 / (alpha + 2.0 - 2.0 * nu2), 1.0 / (alpha + 2.0 - nu2), 1.0 / (alpha + 2.0));
    let q = k1 - 2.0 * b * k2 + b * b * k3;
    let c_ub = c_ub_closure(alpha, v, theta);
    let h = zero_inflation_kernel(c_ub, lambda2);
    Ok(OmegaConstants { a, b, k1, k2, k3, q, h, c_ub })
}

/// 𝒲_ω ≈ k 𝒜² H √Q
pub fn w_omega_closed(alpha: f64, nu: f64, theta: f64, v: f64, lambda2: f64, k: f64) -> Result<f64> {
    let c = omega_constants(alpha, nu, theta, v, lambda2)?;
    if c.q < 0.0 {
        return Err(Error::Domain(format!("Q = {} is negative", c.q)));
    }
    Ok(k * c.a * c.a * c.h * c.q.sqrt())
}

/// 𝒲_ψ = (𝒳₀²/2) Σ R*_i (z_i − Σ R*_j z_j)² with 𝒳₀ from the closure.
pub fn w_psi_closed(
    alpha: f64,
    _nu: f64,
    theta: f64,
    v: f64,
    lambda2: f64,
    rstar_weights: &[f64],
    z: &[f64],
) -> Result<f64> {
    if rstar_weights.len() != z.len() {
        return Err(Error::Param("weights and z differ in length".into()));
    }
    let s: f64 = rstar_weights.iter().sum();
    if rstar_weights.iter().any(|&w| w < 0.0) || (s - 1.0).abs() > 1e-9 {
        return Err(Error::Param("R* weights must lie on the simplex".into()));
    }
    let x0 = zero_inflation_kernel(c_ub_closure(alpha, v, theta), lambda2);
    Ok(0.5 * x0 * x0 * weighted_variance(rstar_weights, z))
}

pub fn weighted_variance(w: &[f64], z: &[f64]) -> f64 {
    let mean: f64 = w.iter().zip(z).map(|(w, z)| w * z).sum();
    w.iter().zip(z).map(|(w, z)| w * (z - mean).powi(2)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calvo {
    pub phi: f64,
    pub e_r: f64,
    pub e_r2: f64,
    pub omega: f64,
    pub omega_first_order: f64,
}

/// Baselines for a constant reset probability η ∈ (0, 1].
pub fn calvo_baselines(pi: f64, eta: f64) -> Result<Calvo> {
    if !(eta > 0.0 && eta <= 1.0) || !(pi >= 0.0) {
        return Err(Error::Domain(format!("need 0 < eta <= 1 and pi >= 0 (eta={eta}, pi={pi})")));
    }
    let g = 1.0 + pi;
    if (1.0 - eta) * g * g >= 1.0 {
        return Err(Error::Domain(format!("(1-eta)(1+pi)^2 >= 1: second moment of R_C diverges (eta={eta}, pi={pi})")));
    }
    let e_r = eta / (1.0 - (1.0 - eta) * g);
    let e_r2 = eta / (1.0 - (1.0 - eta) * g * g);
    Ok(Calvo {
        phi: pi / eta,
        e_r,
        e_r2,
        omega: (e_r2 + 1.0 - 2.0 * e_r).max(0.0).sqrt(),
        omega_first_order: pi * ((1.0 - eta) * (2.0 - eta)).sqrt() / eta,
    })
}

/// Reduced-form menu-cost hazard η = min(1, η₀ (1 + βπ) / (1 + κ)).
pub fn menu_cost_hazard(eta0: f64, beta: f64, kappa: f64, pi: f64) -> f64 {
    (eta0 * (1.0 + beta * pi) / (1.0 + kappa)).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MenuCost {
    pub eta: f64,
    pub phi: f64,
    pub omega: f64,
}

/// Menu-cost baselines: the Calvo formulas at the state-dependent η.
pub fn menu_cost_baselines(pi: f64, eta: impl Fn(f64) -> f64) -> Result<MenuCost> {
    let e = eta(pi);
    let c = calvo_baselines(pi, e)?;
    Ok(MenuCost { eta: e, phi: c.phi, omega: c.omega })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wronskian {
    pub t: usize,
    pub w: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Real roots of a δ² + b δ + c when the discriminant is positive.
    pub band: Option<(f64, f64)>,
}

/// 𝒲_T = R₂ᵀR₁^{T−1} − R₂^{T−1}R₁ᵀ for the phase sums R₁^k = Σ_{τ≤k} q_τ and
/// R₂^k = Σ_{τ≤k} α_τ q_τ. Expanding the last terms gives
/// q_T Σ_{τ<T} (α_T − α_τ) q_τ, which avoids the cancellation of the
/// difference of products when λ2^T is small.
fn phase_wronskian(lambda2: f64, pi: f64, t: usize) -> f64 {
    let q = |tau: usize| lambda2.powi(tau as i32) * (1.0 + pi).powi(tau as i32 - 1);
    let alpha = |tau: usize| 1.0 + pi * (tau as f64 - 1.0) / (1.0 + pi);
    q(t) * (1..t).map(|tau| (alpha(t) - alpha(tau)) * q(tau)).sum::<f64>()
}

/// Transitory demand S_k = Σ_{t<k} λ2^{k−t} π (1+π)^{t−1} and ∂S_k/∂π.
fn transitory(lambda2: f64, pi: f64, k: usize) -> (f64, f64) {
    let mut s = 0.0;
    let mut ds = 0.0;
    for t in 1..k {
        let l = lambda2.powi((k - t) as i32);
        let g = (1.0 + pi).powi(t as i32 - 1);
        s += l * pi * g;
        let dg = if t >= 2 { (t as f64 - 1.0) * (1.0 + pi).powi(t as i32 - 2) } else { 0.0 };
        ds += l * (g + pi * dg);
    }
    (s, ds)
}

pub fn wronskian_band(lambda2: f64, pi: f64, c_ub: f64, mu_i: f64, t: usize) -> Result<Wronskian> {
    if t < 2 {
        return Err(Error::Param("Wronskian needs T >= 2".into()));
    }
    let w = phase_wronskian(lambda2, pi, t);
    let a = c_ub * c_ub * w;
    let c = mu_i * mu_i * (1.0 + pi).powi(2 * t as i32 - 2);
    // Permanent component (1+π)^k and its π-derivative.
    let perm = |k: usize| ((1.0 + pi).powi(k as i32), k as f64 * (1.0 + pi).powi(k as i32 - 1));
    let ((pt, dpt), (pp, dpp)) = (perm(t), perm(t - 1));
    let ((st, dst), (sp, dsp)) = (transitory(lambda2, pi, t), transitory(lambda2, pi, t - 1));
    let b_sum = dpt * sp + dst * pp - dpp * st - dsp * pt;
    let b = mu_i * c_ub * b_sum;
    let disc = b * b - 4.0 * a * c;
    let band = if disc > 0.0 && a > 0.0 {
        // Stable root pair: no subtraction of nearly equal b and √disc.
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let (x1, x2) = (q / a, c / q);
        Some((x1.min(x2), x1.max(x2)))
    } else {
        None
    };
    Ok(Wronskian { t, w, a, b, c, band })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StickyWindow {
    pub under: f64,
    pub over: f64,
    pub v: f64,
}

/// Pre-reset and post-reset parts of Σ_{L=T̃}^{T} 𝒳_L for a general C
/// series (`c_series[k]` is C_k), plus the linear-in-u coefficient 𝒱.
pub fn sticky_window_series(
    lambda2: f64,
    pi: f64,
    c_series: &[f64],
    c_ub: f64,
    m_tilde: f64,
    t: usize,
    t_reset: usize,
) -> Result<StickyWindow> {
    if !(1 <= t_reset && t_reset < t) || c_series.len() < t {
        return Err(Error::Param(format!("need 1 <= T_reset < T <= len(C); got T_reset={t_reset}, T={t}")));
    }
    let rho = lambda2 / (1.0 + pi);
    let geo = |m: usize| -> f64 {
        // (1 − ϱ^m)/(1 − ϱ), with the ϱ = 1 limit.
        if (1.0 - rho).abs() < 1e-15 {
            m as f64
        } else {
            (1.0 - rho.powi(m as i32)) / (1.0 - rho)
        }
    };
    let under = geo(t - t_reset + 1)
        * (1..t_reset.saturating_sub(1))
            .map(|k| c_series[k] * rho.powi((t_reset - k) as i32))
            .sum::<f64>();
    let over = rho
        * (t_reset.saturating_sub(1).max(1)..t)
            .map(|k| c_series[k] * geo(t - k))
            .sum::<f64>();
    let v = (1.0 + pi).powi(2) * c_ub / (m_tilde * (1.0 + pi - lambda2));
    Ok(StickyWindow { under, over, v })
}

/// The constant-C exposition form (C_k = C_ub throughout).
pub fn sticky_window(lambda2: f64, pi: f64, c_ub: f64, m_tilde: f64, t: usize, t_reset: usize) -> Result<StickyWindow> {
    let c = vec![c_ub; t + 1];
    sticky_window_series(lambda2, pi, &c, c_ub, m_tilde, t, t_reset)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VintageMixture {
    pub i: f64,
    pub j: f64,
    pub x_bar: f64,
}

/// I = Σ w_t (1+π)^{t−1}, J = Σ w_t (1+π)^{t−1} X_t, X̄ = J/I, where index t
/// of `weights` and `x_series` is the vintage date.
pub fn vintage_mixture(weights: &[f64], pi: f64, x_series: &[f64]) -> Result<VintageMixture> {
    if weights.len() != x_series.len() {
        return Err(Error::Param("weights and X series differ in length".into()));
    }
    let s: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < 0.0) || (s - 1.0).abs() > 1e-9 {
        return Err(Error::Param("vintage weights must lie on the simplex".into()));
    }
    let mut i = 0.0;
    let mut j = 0.0;
    for (t, (w, x)) in weights.iter().zip(x_series).enumerate() {
        let g = (1.0 + pi).powi(t as i32 - 1);
        i += w * g;
        j += w * g * x;
    }
    Ok(VintageMixture { i, j, x_bar: j / i })
}

/// Flat report of the closed forms at one parameter point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryPrediction {
    pub alpha: f64,
    pub nu: f64,
    pub theta: f64,
    pub pi: f64,
    pub lambda2: f64,
    pub moments: String,
    pub zeta_star: ZetaStar,
    pub zeta_regime: String,
    pub g_grid: Vec<(f64, f64)>,
    pub x_t: Vec<f64>,
    pub xi_t: Vec<f64>,
    pub h_kernel: f64,
    pub x0_kernel: f64,
    pub w_omega: Option<f64>,
    pub w_psi: Option<f64>,
    pub c_lb: f64,
    pub c_ub: f64,
    pub c_ub_closure: f64,
    pub calvo: Option<Calvo>,
    pub menucost: Option<MenuCost>,
    pub wronskian: Vec<Wronskian>,
    pub v_sticky: f64,
}

/// Inputs for [`predict`]; the C series and R*/z vectors come from a
/// simulated economy.
pub struct TheoryInputs<'a, M: MomentProvider> {
    pub moments: &'a M,
    pub moments_label: &'a str,
    pub alpha: f64,
    pub nu: f64,
    pub theta: f64,
    pub pi: f64,
    pub lambda2: f64,
    pub c_series: &'a [f64],
    pub m_tilde: f64,
    pub rstar_weights: &'a [f64],
    pub z: &'a [f64],
    pub calvo_eta: f64,
    pub menu: (f64, f64, f64),
    pub mu_numeraire: f64,
}

pub fn predict<M: MomentProvider>(x: &TheoryInputs<'_, M>) -> TheoryPrediction {
    let nu = x.nu;
    let e = (1.0 - nu) * x.theta;
    let m = x.moments;
    let c_ub = (m.moment(e - nu) - m.moment(-nu) * m.moment(e)) / m.moment(e);
    let c_lb = (m.moment(x.theta - nu) - m.moment(-nu) * m.moment(x.theta)) / m.moment(x.theta);
    let zs = zeta_star(m, nu, x.alpha);
    let g_grid = (0..=20).map(|k| {
        let z = k as f64 * 0.1;
        (z, g_of_zeta(m, z, nu))
    });
    let horizons = x.c_series.len();
    let (mut x_t, mut xi_t) = (Vec::new(), Vec::new());
    for t in 2..=horizons {
        if let Ok((a, b)) = transient_scale(x.lambda2, x.pi, x.c_series, x.m_tilde, t) {
            x_t.push(a);
            xi_t.push(b);
        }
    }
    let closure = c_ub_closure(x.alpha, nu, x.theta);
    let wronskian = (2..=horizons.clamp(2, 12))
        .filter_map(|t| wronskian_band(x.lambda2, x.pi, closure, x.mu_numeraire, t).ok())
        .collect();
    let (eta0, beta, kappa) = x.menu;
    TheoryPrediction {
        alpha: x.alpha,
        nu,
        theta: x.theta,
        pi: x.pi,
        lambda2: x.lambda2,
        moments: x.moments_label.to_string(),
        zeta_star: zs,
        zeta_regime: if x.alpha - nu * nu < 1.0 { "heavy-tail closure".into() } else { "truncated".into() },
        g_grid: g_grid.collect(),
        x_t,
        xi_t,
        h_kernel: steady_kernel(c_ub, x.lambda2, x.pi),
        x0_kernel: zero_inflation_kernel(c_ub, x.lambda2),
        w_omega: w_omega_closed(x.alpha, nu, x.theta, nu, x.lambda2, 1.0).ok(),
        w_psi: w_psi_closed(x.alpha, nu, x.theta, nu, x.lambda2, x.rstar_weights, x.z).ok(),
        c_lb,
        c_ub,
        c_ub_closure: closure,
        calvo: calvo_baselines(x.pi, x.calvo_eta).ok(),
        menucost: menu_cost_baselines(x.pi, |p| menu_cost_hazard(eta0, beta, kappa, p)).ok(),
        wronskian,
        v_sticky: sticky_window(x.lambda2, x.pi, c_ub, x.m_tilde, 3, 1).map(|s| s.v).unwrap_or(f64::NAN),
    }
}

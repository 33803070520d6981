use netprice::moments::{EmpiricalMoments, TruncatedPareto};
use netprice::theory::{
    c_ub_closure, c_ub_closure_signed, calvo_baselines, g_of_zeta, menu_cost_baselines, menu_cost_hazard,
    omega_constants, steady_kernel, sticky_window, sticky_window_series, transient_scale, vintage_mixture,
    w_omega_closed, w_psi_closed, wronskian_band, zero_inflation_kernel, zeta_star,
};
use netprice::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
}

#[test]
fn g_examples() {
    let law = TruncatedPareto::new(2.5, 2.0, 100.0);
    let emp = EmpiricalMoments::new(&[2, 2, 3, 5, 8, 13, 40]);
    for nu in [0.3, 0.5, 0.7] {
        assert!(g_of_zeta(&law, 1.0, nu).abs() < 1e-14);
        assert!(g_of_zeta(&emp, 1.0, nu).abs() < 1e-14);
        assert!(g_of_zeta(&law, 0.0, nu) < 0.0);
    }
}

#[test]
fn g_increases_on_the_unit_scale() {
    // G picks up a factor d_min^{ζ−1+ν²} under rescaling, so monotonicity is a
    // statement about the unit-scale law. Heavy tails (α ≤ 2) leave the
    // moments undefined on part of [0, 2] and are excluded.
    for alpha in [2.5, 3.0, 3.5] {
        let law = TruncatedPareto::new(alpha, 1.0, 100.0);
        for nu in grid(0.1, 0.9, 9) {
            let g: Vec<f64> = grid(0.0, 2.0, 201).map(|z| g_of_zeta(&law, z, nu)).collect();
            assert!(g.windows(2).all(|w| w[1] > w[0]), "α={alpha} ν={nu}");
        }
    }
}

#[test]
fn wronskian_matches_phase_sum_products() {
    let (lambda2, pi) = (0.8f64, 0.03f64);
    let sums = |k: usize| {
        (1..=k).fold((0.0, 0.0), |(r1, r2), tau| {
            let q = lambda2.powi(tau as i32) * (1.0 + pi).powi(tau as i32 - 1);
            (r1 + q, r2 + (1.0 + pi * (tau as f64 - 1.0) / (1.0 + pi)) * q)
        })
    };
    for t in 2..20 {
        let ((r1t, r2t), (r1p, r2p)) = (sums(t), sums(t - 1));
        let w = wronskian_band(lambda2, pi, 0.05, 0.01, t).unwrap().w;
        assert!((w - (r2t * r1p - r2p * r1t)).abs() < 1e-13);
    }
}

#[test]
fn zeta_star_examples() {
    let law = TruncatedPareto::new(2.5, 2.0, 100.0);
    assert_eq!(zeta_star(&law, 0.5, 2.5).approximation, 1.0);
    assert!((zeta_star(&law, 0.5, 1.1).approximation - 0.85).abs() < 1e-15);
    for &(alpha, nu) in &[(2.5, 0.5), (1.5, 0.3), (3.5, 0.8), (2.1, 0.1)] {
        let law = TruncatedPareto::new(alpha, 2.0, 100.0);
        let root = zeta_star(&law, nu, alpha).root.unwrap();
        assert!((root - 1.0).abs() < 1e-6, "{alpha} {nu}: {root}");
    }
}

#[test]
fn transient_scale_examples() {
    let c = vec![0.0; 20];
    assert_eq!(transient_scale(0.8, 0.02, &c, 1.0, 10).unwrap(), (0.0, 0.0));
    let c = vec![0.3; 20];
    assert_eq!(transient_scale(0.0, 0.02, &c, 1.0, 10).unwrap().0, 0.0);
    assert!(matches!(transient_scale(0.8, 0.02, &c, 1.0, 1), Err(Error::Param(_))));
    assert!(transient_scale(0.8, 0.02, &c, 1.0, 21).is_err());
}

#[test]
fn transient_scale_matches_geometric_series() {
    let (lambda2, pi, cval, m) = (0.85, 0.03, -0.02, 2.0);
    let c = vec![cval; 60];
    let rho = lambda2 / (1.0 + pi);
    for t in 2..60 {
        let (x, xi) = transient_scale(lambda2, pi, &c, m, t).unwrap();
        let closed = cval * rho * (1.0 - rho.powi(t as i32 - 1)) / (1.0 - rho);
        assert!((x - closed).abs() < 1e-12);
        assert!((xi - pi * (1.0 + pi) * closed / m).abs() < 1e-12);
    }
}

#[test]
fn w_omega_examples() {
    assert_eq!(w_omega_closed(2.5, 0.5, 0.5, 0.5, 0.0, 1.0).unwrap(), 0.0);
    let small = w_omega_closed(2.5, 0.5, 0.5, 0.5, 1e-9, 1.0).unwrap();
    assert!(small > 0.0 && small < 1e-8);
    let a = w_omega_closed(2.5, 0.5, 0.5, 0.5, 0.9, 1.0).unwrap();
    let b = w_omega_closed(3.5, 0.5, 0.5, 0.5, 0.9, 1.0).unwrap();
    assert!(a > b);
    assert!(matches!(w_omega_closed(2.0, 0.5, 0.5, 0.5, 0.9, 1.0), Err(Error::Domain(_))));
    assert!(matches!(w_omega_closed(2.5, 0.5, 0.5, 0.5, 1.0, 1.0), Err(Error::Domain(_))));
}

#[test]
fn q_is_nonnegative_on_admissible_grid() {
    for alpha in grid(2.05, 6.0, 40) {
        for nu in grid(0.0, 0.99, 34) {
            let c = omega_constants(alpha, nu, 0.5, nu, 0.8).unwrap();
            assert!(c.q >= 0.0, "α={alpha} ν={nu}: Q={}", c.q);
        }
    }
}

#[test]
fn w_psi_examples() {
    let w = [0.25; 4];
    assert!(w_psi_closed(2.5, 0.5, 0.5, 0.5, 0.9, &w, &[1.3; 4]).unwrap().abs() < 1e-30);
    let a = 0.7;
    let x0 = zero_inflation_kernel(c_ub_closure(2.5, 0.5, 0.5), 0.9);
    let two = w_psi_closed(2.5, 0.5, 0.5, 0.5, 0.9, &[0.5, 0.5], &[a, -a]).unwrap();
    assert!((two - 0.5 * x0 * x0 * a * a).abs() < 1e-15);
    let z = [1.0, -0.5, 0.2, 0.9];
    let lo = w_psi_closed(2.5, 0.5, 0.5, 0.5, 0.8, &w, &z).unwrap();
    let hi = w_psi_closed(2.5, 0.5, 0.5, 0.5, 0.95, &w, &z).unwrap();
    assert!(hi > lo);
    assert!(w_psi_closed(2.5, 0.5, 0.5, 0.5, 0.9, &[0.6, 0.6], &[1.0, 0.0]).is_err());
}

#[test]
fn calvo_examples() {
    let c = calvo_baselines(0.04, 0.5).unwrap();
    assert!((c.phi - 0.08).abs() < 1e-15);
    let c = calvo_baselines(0.01, 0.5).unwrap();
    assert!((c.e_r - 0.5 / 0.495).abs() < 1e-14);
    let one = calvo_baselines(0.03, 1.0).unwrap();
    assert!((one.phi - 0.03).abs() < 1e-8);
    assert!(one.omega.abs() < 1e-8);
    assert!(one.omega_first_order.abs() < 1e-8);
    assert!(matches!(calvo_baselines(0.5, 0.2), Err(Error::Domain(_))));
    assert!(matches!(calvo_baselines(0.01, 0.0), Err(Error::Domain(_))));
}

#[test]
fn calvo_first_order_is_close_at_low_inflation() {
    for pi in grid(0.001, 0.01, 10) {
        for eta in grid(0.3, 0.99, 24) {
            let c = calvo_baselines(pi, eta).unwrap();
            assert!((c.omega_first_order / c.omega - 1.0).abs() < 0.05, "π={pi} η={eta}");
        }
    }
}

#[test]
fn calvo_mean_matches_geometric_monte_carlo() {
    // Age since reset is geometric on {0, 1, ...} with success probability η.
    let (pi, eta) = (0.01f64, 0.5);
    let geo = Geometric::new(eta).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 1_000_000;
    let mean = (0..n).map(|_| (1.0 + pi).powi(geo.sample(&mut rng) as i32)).sum::<f64>() / n as f64;
    let exact = calvo_baselines(pi, eta).unwrap().e_r;
    assert!((mean / exact - 1.0).abs() < 1e-3, "{mean} vs {exact}");
}

#[test]
fn menu_cost_limit() {
    let pi = 0.02;
    let m = menu_cost_baselines(pi, |_| 1.0 - 1e-8).unwrap();
    assert!((m.phi - pi).abs() < 1e-8);
    // ω vanishes like π √(2(1−η)), so at 1 − 1e-8 it is O(1e-4 π).
    assert!(m.omega < 2.0 * pi * 1e-4);
    let m = menu_cost_baselines(pi, |_| 1.0).unwrap();
    assert!(m.omega.abs() < 1e-8);
    assert!(menu_cost_hazard(0.3, 5.0, 0.2, 0.04) > menu_cost_hazard(0.3, 5.0, 0.2, 0.02));
    assert!(menu_cost_hazard(0.3, 5.0, 0.4, 0.02) < menu_cost_hazard(0.3, 5.0, 0.2, 0.02));
    assert_eq!(menu_cost_hazard(2.0, 5.0, 0.0, 0.02), 1.0);
}

#[test]
fn wronskian_coefficients_and_band_on_grid() {
    let mut bands = 0;
    for t in 2..=30 {
        for pi in grid(0.001, 0.1, 12) {
            for lambda2 in grid(0.05, 0.98, 12) {
                let w = wronskian_band(lambda2, pi, 0.05, 0.01, t).unwrap();
                assert!(w.a > 0.0 && w.c > 0.0, "T={t} π={pi} λ2={lambda2}: a={} c={}", w.a, w.c);
                if let Some((d1, d2)) = w.band {
                    bands += 1;
                    assert!(d1 < d2 && d2 < 0.0, "band ({d1}, {d2})");
                } else {
                    assert!(w.b * w.b - 4.0 * w.a * w.c <= 0.0);
                }
            }
        }
    }
    assert!(bands > 0);
    assert!(wronskian_band(0.8, 0.02, 0.05, 0.01, 1).is_err());
}

#[test]
fn wronskian_c_is_the_squared_permanent_term() {
    let w = wronskian_band(0.7, 0.03, 0.1, 0.2, 9).unwrap();
    assert!((w.c - 0.04 * 1.03f64.powi(16)).abs() < 1e-15);
}

/// Σ_{L=T̃}^{T} Σ_{k=1}^{L−1} C_k ϱ^{L−k}
fn brute_window(lambda2: f64, pi: f64, c: &[f64], t: usize, t_reset: usize) -> f64 {
    let rho = lambda2 / (1.0 + pi);
    let mut s = 0.0;
    for l in t_reset..=t {
        for k in 1..l {
            s += c[k] * rho.powi((l - k) as i32);
        }
    }
    s
}

#[test]
fn sticky_window_equals_double_sum() {
    let c_var: Vec<f64> = (0..60).map(|k| 0.03 * (k as f64 * 0.4).cos()).collect();
    for &(lambda2, pi) in &[(0.8, 0.02), (0.5, 0.1), (0.97, 0.001)] {
        for t in 2..40 {
            for t_reset in 1..t {
                let w = sticky_window(lambda2, pi, 0.05, 1.0, t, t_reset).unwrap();
                let brute = brute_window(lambda2, pi, &[0.05; 41], t, t_reset);
                assert!((w.under + w.over - brute).abs() < 1e-12, "T={t} T̃={t_reset}");
                let w = sticky_window_series(lambda2, pi, &c_var, 0.05, 1.0, t, t_reset).unwrap();
                let brute = brute_window(lambda2, pi, &c_var, t, t_reset);
                assert!((w.under + w.over - brute).abs() < 1e-12);
            }
        }
    }
    assert!(sticky_window(0.8, 0.02, 0.05, 1.0, 5, 5).is_err());
    assert!(sticky_window(0.8, 0.02, 0.05, 1.0, 5, 0).is_err());
}

#[test]
fn sticky_window_v_at_zero_lambda() {
    let w = sticky_window(0.0, 0.02, 0.05, 3.0, 10, 4).unwrap();
    assert!((w.v - 1.02 * 0.05 / 3.0).abs() < 1e-15);
}

#[test]
fn post_reset_part_grows_linearly() {
    let (lambda2, pi) = (0.8, 0.02);
    let over = |u: usize| sticky_window(lambda2, pi, 0.05, 1.0, 2 + u, 2).unwrap().over;
    let slopes: Vec<f64> = (20..80).map(|u| over(u + 1) - over(u)).collect();
    let last = *slopes.last().unwrap();
    assert!(slopes.iter().all(|s| (s / last - 1.0).abs() < 0.05));
}

#[test]
fn vintage_mixture_examples() {
    let pi = 0.02;
    let x: Vec<f64> = (0..=10).map(|t| 0.1 * (t as f64).sqrt()).collect();
    let mut w = vec![0.0; 11];
    w[10] = 1.0;
    let m = vintage_mixture(&w, pi, &x).unwrap();
    assert!((m.i - 1.02f64.powi(9)).abs() < 1e-15);
    assert!((m.x_bar - x[10]).abs() < 1e-15);
    let spread = vec![1.0 / 11.0; 11];
    let m = vintage_mixture(&spread, pi, &[0.4; 11]).unwrap();
    assert!((m.x_bar - 0.4).abs() < 1e-15);
    let m = vintage_mixture(&spread, pi, &x).unwrap();
    assert!(m.x_bar <= x[10]);
    assert!(vintage_mixture(&[0.5, 0.6], pi, &[1.0, 1.0]).is_err());
}

#[test]
fn kernel_derivative_matches_finite_differences() {
    let pi = 0.02;
    for lambda2 in grid(0.1, 0.95, 18) {
        let h = 1e-6;
        let fd = (steady_kernel(1.0, lambda2 + h, pi) - steady_kernel(1.0, lambda2 - h, pi)) / (2.0 * h);
        let exact = (1.0 + pi) / (1.0 + pi - lambda2).powi(2);
        assert!((fd - exact).abs() < 1e-6 * exact.max(1.0));
        assert!(exact > 0.0);
    }
}

#[test]
fn monotonicity_suite() {
    let z = [1.0, -0.5, 0.2, 0.9];
    let w = [0.1, 0.2, 0.3, 0.4];
    let wo = |a: f64, nu: f64, th: f64, v: f64, l: f64| w_omega_closed(a, nu, th, v, l, 1.0).unwrap();
    let wp = |a: f64, th: f64, v: f64, l: f64| w_psi_closed(a, 0.5, th, v, l, &w, &z).unwrap();
    let alphas: Vec<f64> = grid(2.1, 5.0, 15).collect();
    for nu in grid(0.1, 0.9, 9) {
        for theta in grid(0.1, 0.9, 5) {
            for lambda2 in grid(0.2, 0.95, 6) {
                for a in alphas.windows(2) {
                    assert!(wo(a[1], nu, theta, nu, lambda2) < wo(a[0], nu, theta, nu, lambda2));
                    assert!(wp(a[1], theta, nu, lambda2) < wp(a[0], theta, nu, lambda2));
                }
                // ν² leg with the closure argument v held fixed.
                let (a, v) = (2.6, 0.5);
                assert!(wo(a, nu + 0.05, theta, v, lambda2) > wo(a, nu, theta, v, lambda2));
                // θ leg on the signed closure.
                for a in &alphas {
                    assert!(c_ub_closure_signed(*a, nu, theta + 0.1) < c_ub_closure_signed(*a, nu, theta));
                }
                // λ2 leg.
                assert!(wo(2.6, nu, theta, nu, lambda2 + 0.02) > wo(2.6, nu, theta, nu, lambda2));
                assert!(wp(2.6, theta, nu, lambda2 + 0.02) > wp(2.6, theta, nu, lambda2));
            }
        }
    }
}

#[test]
fn run_theory_report_is_populated() {
    use netprice::netgen::NetworkParams;
    use netprice::pipeline::{run, BaselineSpec, RunSpec};
    let spec = RunSpec { network: NetworkParams { n: 300, ..NetworkParams::default() }, horizon: 20, window: (10, 20), ..RunSpec::default() };
    let out = run(&spec).unwrap();
    let p = out.theory(&spec, &BaselineSpec::default());
    assert_eq!(p.lambda2, out.spectral.lambda2);
    assert_eq!(p.x_t.len(), out.trajectory.misalignment.len() - 1);
    assert!(p.w_omega.unwrap() > 0.0 && p.w_psi.unwrap() > 0.0);
    assert!(p.calvo.is_some() && p.menucost.is_some());
    assert!(!p.wronskian.is_empty());
    let json = serde_json::to_value(&p).unwrap();
    assert!(json.get("zeta_star").is_some());
}

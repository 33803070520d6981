use netprice::monetary::{simulate, MonetaryParams, MoneyTrajectory};
use netprice::netgen::{build_economy, Economy, NetworkParams};
use netprice::pricing::{
    flexible_prices, hazard, hazard_gap, sticky_prices, sticky_replications, vintage_weights, HazardDriver, HazardSpec,
    Regime,
};
use netprice::sparse::CscMatrix;

fn draw(n: usize, seed: u64) -> Economy {
    build_economy(&NetworkParams { n, seed, ..NetworkParams::default() }).unwrap()
}

fn run(e: &Economy, pi: f64, m0: Vec<f64>, horizon: usize) -> MoneyTrajectory {
    simulate(e, &MonetaryParams::new(pi, 0.5, m0, horizon)).unwrap()
}

/// Three firms of equal degree, so every exposure δ is zero.
fn flat_economy() -> Economy {
    let a = CscMatrix::from_dense(&[vec![0.5, 0.3, 0.2], vec![0.2, 0.5, 0.3], vec![0.3, 0.2, 0.5]]);
    Economy::from_parts(NetworkParams::default(), vec![3; 3], vec![0; 3], 0.0, a).unwrap()
}

/// Hazard that is exactly c0 from age 1 on: saturation is reached at the
/// first period because g_scale is tiny.
fn constant_spec(eta: f64) -> HazardSpec {
    HazardSpec { g_scale: 1e-9, epsilon_cap: 0.5, c0: eta, c1: (eta + 1.0) / 2.0, ..HazardSpec::default() }
}

#[test]
fn hazard_examples() {
    let s = HazardSpec::default();
    assert_eq!(hazard(&s, 0.02, 0, 0.3), 0.0);
    let u_bar = s.u_bar(0.02).ceil() as usize;
    assert_eq!(hazard(&s, 0.02, u_bar, 0.3), s.f(0.3));
    assert_eq!(hazard(&s, 0.02, u_bar + 1000, 0.0), s.c0);
    assert!(s.g(s.x_cap()) >= 1.0 - s.epsilon_cap - 1e-15);
    assert_eq!(s.g(0.0), 0.0);
    assert_eq!(hazard(&s, 0.0, 10_000, 0.5), 0.0);
}

#[test]
fn exposure_factor_stays_between_bounds() {
    let s = HazardSpec::default();
    for k in 1..200 {
        let d = k as f64 * 0.05;
        let f = s.f(d);
        assert!(f > s.c0 && f < s.c1);
    }
    assert_eq!(s.f(0.0), s.c0);
}

#[test]
fn hazard_is_monotone_on_a_grid() {
    let s = HazardSpec { g_scale: 0.5, ..HazardSpec::default() };
    for &pi in &[0.005, 0.02, 0.1] {
        for age in 0..400 {
            for k in 0..20 {
                let d = k as f64 * 0.1;
                let h = hazard(&s, pi, age, d);
                assert!(hazard(&s, pi, age + 1, d) >= h);
                assert!(hazard(&s, pi, age, d + 0.1) >= h);
                assert!(hazard(&s, pi, age, -d - 0.1) >= h);
                assert!((0.0..=s.c1).contains(&h));
            }
        }
    }
}

#[test]
fn gap_hazard_vanishes_at_zero_gap() {
    let s = HazardSpec::default();
    assert_eq!(hazard_gap(&s, 0.0, 0.7), 0.0);
    assert!(hazard_gap(&s, 0.3, 0.7) > hazard_gap(&s, 0.1, 0.7));
}

#[test]
fn flexible_prices_clear_markets() {
    let e = draw(500, 1);
    let t = run(&e, 0.02, e.stationary.clone(), 30);
    let p = flexible_prices(&e, &t).unwrap();
    assert_eq!(p.regime, Regime::Flexible);
    assert_eq!(p.prices, p.market_clearing);
    for s in 0..=30 {
        for i in 0..e.n() {
            assert!((p.prices[s][i] * e.quantities[i] - t.nominal_demand[s][i]).abs() < 1e-15);
            assert!(p.excess_supply[s][i].abs() < 1e-9);
        }
    }
}

#[test]
fn flexible_prices_are_constant_at_rest() {
    let e = draw(500, 2);
    let t = run(&e, 0.0, e.stationary.clone(), 20);
    let p = flexible_prices(&e, &t).unwrap();
    for s in 1..=20 {
        for i in 0..e.n() {
            assert!((p.prices[s][i] / p.prices[0][i] - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn flexible_prices_are_homogeneous_in_money() {
    let e = draw(300, 3);
    let p1 = flexible_prices(&e, &run(&e, 0.02, e.stationary.clone(), 10)).unwrap();
    let doubled: Vec<f64> = e.stationary.iter().map(|x| 2.0 * x).collect();
    let p2 = flexible_prices(&e, &run(&e, 0.02, doubled, 10)).unwrap();
    for s in 0..=10 {
        for i in 0..e.n() {
            assert!((p2.prices[s][i] / p1.prices[s][i] - 2.0).abs() < 1e-12);
        }
    }
}

#[test]
fn all_prices_inflate_at_pi_after_convergence() {
    let e = draw(2000, 4);
    let t = run(&e, 0.02, e.stationary.clone(), 120);
    let p = flexible_prices(&e, &t).unwrap();
    for s in 100..=120 {
        for i in 0..e.n() {
            let g = (p.prices[s][i] / p.prices[s - 1][i]).ln();
            assert!((g - 1.02f64.ln()).abs() < 1e-4);
        }
    }
}

#[test]
fn always_reset_hazard_tracks_flexible_prices() {
    let e = draw(300, 5);
    let t = run(&e, 0.02, e.stationary.clone(), 20);
    let spec = HazardSpec { g_scale: 1e-12, epsilon_cap: 0.5, c0: 0.999_999_998, c1: 0.999_999_999, ..HazardSpec::default() };
    let s = sticky_prices(&e, &t, &spec, 1).unwrap();
    assert_eq!(s.prices[1..], s.market_clearing[1..]);
    let w = vintage_weights(&[s], 0, 20);
    assert_eq!(w[20], 1.0);
}

#[test]
fn equilibrium_prices_never_move_without_inflation() {
    let e = draw(500, 6);
    let t = run(&e, 0.0, e.stationary.clone(), 100);
    let s = sticky_prices(&e, &t, &HazardSpec::default(), 2).unwrap();
    assert!(s.reset_events.is_empty());
    assert!(s.prices.iter().all(|p| *p == s.prices[0]));
    let gap = HazardSpec { driver: HazardDriver::Gap, ..HazardSpec::default() };
    let s = sticky_prices(&e, &t, &gap, 2).unwrap();
    for p in &s.prices {
        for (a, b) in p.iter().zip(&s.prices[0]) {
            assert!((a / b - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn ages_and_resets_are_consistent() {
    let e = draw(300, 7);
    let t = run(&e, 0.05, e.stationary.clone(), 40);
    let spec = HazardSpec { g_scale: 0.5, c0: 0.2, c1: 0.6, ..HazardSpec::default() };
    let s = sticky_prices(&e, &t, &spec, 3).unwrap();
    let mut reset = vec![vec![false; e.n()]; 41];
    for &(k, i) in &s.reset_events {
        reset[k][i] = true;
    }
    for k in 1..=40 {
        for i in 0..e.n() {
            if reset[k][i] {
                assert_eq!(s.ages[k][i], 0);
                assert_eq!(s.prices[k][i], s.market_clearing[k][i]);
            } else {
                assert_eq!(s.ages[k][i], s.ages[k - 1][i] + 1);
                assert_eq!(s.prices[k][i], s.prices[k - 1][i]);
            }
            assert!(s.prices[k][i] > 0.0);
        }
    }
    for i in 0..e.n() {
        assert_eq!(s.last_reset[i], 40 - s.ages[40][i]);
    }
    assert!(s.synchronization_index() > 0.0 && s.synchronization_index() <= 1.0);
}

#[test]
fn resets_become_more_frequent_with_inflation() {
    let e = draw(1000, 8);
    let spec = HazardSpec::default();
    let slow = sticky_prices(&e, &run(&e, 0.02, e.stationary.clone(), 60), &spec, 4).unwrap();
    let fast = sticky_prices(&e, &run(&e, 0.04, e.stationary.clone(), 60), &spec, 4).unwrap();
    assert!(fast.reset_frequency() > slow.reset_frequency());
}

#[test]
fn sticky_paths_are_seeded() {
    let e = draw(300, 9);
    let t = run(&e, 0.02, e.stationary.clone(), 30);
    let spec = HazardSpec { g_scale: 0.5, ..HazardSpec::default() };
    assert_eq!(sticky_prices(&e, &t, &spec, 5).unwrap(), sticky_prices(&e, &t, &spec, 5).unwrap());
    assert_ne!(sticky_prices(&e, &t, &spec, 5).unwrap(), sticky_prices(&e, &t, &spec, 6).unwrap());
}

#[test]
fn flexible_vintage_is_a_point_mass() {
    let e = draw(200, 10);
    let p = flexible_prices(&e, &run(&e, 0.02, e.stationary.clone(), 12)).unwrap();
    let w = vintage_weights(&[p], 3, 12);
    assert_eq!(w[12], 1.0);
    assert_eq!(w.iter().sum::<f64>(), 1.0);
}

#[test]
fn constant_hazard_vintages_are_geometric() {
    let e = flat_economy();
    let eta = 0.3;
    let horizon = 10;
    let t = run(&e, 0.02, e.stationary.clone(), horizon);
    let paths = sticky_replications(&e, &t, &constant_spec(eta), 11, 100_000).unwrap();
    let w = vintage_weights(&paths, 1, horizon);
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    for k in 0..5 {
        let exact = eta * (1.0 - eta).powi(k);
        let se = (exact * (1.0 - exact) / 1e5).sqrt();
        assert!((w[horizon - k as usize] - exact).abs() < 4.0 * se, "lag {k}: {} vs {exact}", w[horizon - k as usize]);
    }
}

#[test]
fn constant_hazard_reset_rate_matches_eta() {
    let e = flat_economy();
    let eta = 0.25;
    let horizon = 400;
    let t = run(&e, 0.01, e.stationary.clone(), horizon);
    let paths = sticky_replications(&e, &t, &constant_spec(eta), 12, 200).unwrap();
    // Ages are at least one at every draw, so each firm-period is a Bernoulli(η) trial.
    let trials = (paths.len() * 3 * horizon) as f64;
    let resets = paths.iter().map(|p| p.reset_events.len()).sum::<usize>() as f64;
    let rate = resets / trials;
    let se = (eta * (1.0 - eta) / trials).sqrt();
    assert!((rate - eta).abs() < 4.0 * se, "rate {rate}");
}

use netprice::ensemble::{
    concentration_check, lambda2_binning, paired_sweep, replication_seed, run, run_replications, variance_scaling,
    EnsembleSpec, SweepParameter,
};
use netprice::netgen::NetworkParams;
use netprice::pipeline::{RunSpec, StartState};
use netprice::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn spec(n: usize, replications: usize) -> EnsembleSpec {
    EnsembleSpec {
        replications,
        base_seed: 17,
        run: RunSpec {
            network: NetworkParams { n, ..NetworkParams::default() },
            horizon: 30,
            window: (20, 30),
            ..RunSpec::default()
        },
        horizons: vec![2, 10, 30],
    }
}

#[test]
fn same_spec_gives_identical_report() {
    let s = spec(300, 2);
    let a = run(&s).unwrap();
    let b = run(&s).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.included + a.excluded, 2);
    assert_eq!(a.runs[0].1.seed, replication_seed(17, 0));
}

#[test]
fn replication_seeds_do_not_collide() {
    let seeds: std::collections::BTreeSet<u64> = (0..10_000).map(|r| replication_seed(0xdead_beef, r)).collect();
    assert_eq!(seeds.len(), 10_000);
}

#[test]
fn zero_inflation_ensemble_has_no_price_motion() {
    let mut s = spec(400, 4);
    s.run.pi = 0.0;
    let rep = run(&s).unwrap();
    for (_, r) in &rep.runs {
        assert!(r.phi[20..].iter().all(|&p| p < 1e-6));
    }
}

#[test]
fn zeta_never_touches_money_mass() {
    let mut a = spec(300, 3);
    a.run.zeta = 0.1;
    let mut b = a.clone();
    b.run.zeta = 0.9;
    let (ra, _) = run_replications(&a).unwrap();
    let (rb, _) = run_replications(&b).unwrap();
    for ((_, x), (_, y)) in ra.iter().zip(&rb) {
        assert_eq!(x.final_mass - y.final_mass, 0.0);
        assert_ne!(x.phi, y.phi);
    }
}

#[test]
fn theta_sweep_reuses_each_network() {
    let mut s = spec(300, 3);
    s.run.horizon = 20;
    s.run.window = (10, 20);
    let t = paired_sweep(&s, SweepParameter::Theta, &[0.3, 0.9]).unwrap();
    assert_eq!(t.arms[0].len(), 3);
    for (a, b) in t.arms[0].iter().zip(&t.arms[1]) {
        assert_eq!(a.0, b.0);
        assert!((a.3 / b.3 - 1.0).abs() < 1e-14);
    }
    let mut other = s.clone();
    other.run.theta = 0.9;
    let (x, _) = run_replications(&s).unwrap();
    let (y, _) = run_replications(&other).unwrap();
    for ((_, a), (_, b)) in x.iter().zip(&y) {
        assert_eq!(a.lambda2, b.lambda2);
        assert_eq!(a.knn_slope, b.knn_slope);
    }
    assert_eq!(t.rows.len(), 2);
    assert!(t.rows.iter().all(|r| r.differences.len() == 3 && r.agreement.is_some()));
}

#[test]
fn gaussian_input_has_linear_quantile_plot() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let c = concentration_check(&v);
    assert!(c.quantile_correlation > 0.99);
    assert!(c.skewness.abs() < 0.25 && c.excess_kurtosis.abs() < 0.5);
    assert!(c.chebyshev_exceedance <= 0.25);
}

#[test]
fn constant_input_is_degenerate() {
    let c = concentration_check(&[2.5; 40]);
    assert_eq!(c.variance, 0.0);
    assert_eq!(c.chebyshev_exceedance, 0.0);
    assert_eq!(c.mean, 2.5);
}

#[test]
fn variance_scaling_recovers_power_law() {
    let ns = [500, 1000, 2000, 4000];
    let v: Vec<f64> = ns.iter().map(|&n| 3.0 / n as f64).collect();
    assert!((variance_scaling(&ns, &v) + 1.0).abs() < 1e-12);
}

#[test]
fn lambda2_binning_on_synthetic_points() {
    let up: Vec<(f64, f64)> = (0..40).map(|i| (i as f64, i as f64 * 0.1)).collect();
    let b = lambda2_binning(&up, 200, 1).unwrap();
    assert!(b.top_mean > b.bottom_mean);
    assert!(b.bootstrap_share > 0.99);
    let down: Vec<(f64, f64)> = up.iter().map(|&(x, y)| (x, -y)).collect();
    assert!(lambda2_binning(&down, 200, 1).unwrap().bootstrap_share < 0.01);
    assert!(matches!(lambda2_binning(&up[..5], 10, 1), Err(Error::Param(_))));
}

#[test]
fn failures_are_counted_and_capped() {
    // A strongly coupled sector block has no isolated real λ2.
    let mut s = spec(300, 5);
    s.run.network.cross_share = 0.5;
    match run_replications(&s) {
        Err(Error::Ensemble(msg)) => assert!(msg.contains("of 5 replications failed")),
        Ok((ok, fail)) => assert_eq!(ok.len() + fail.len(), 5),
        Err(e) => panic!("unexpected error {e}"),
    }
    assert!(matches!(run_replications(&spec(300, 1)), Err(Error::Param(_))));
}

#[test]
fn sweep_parameter_names_round_trip() {
    for p in [SweepParameter::Alpha, SweepParameter::Nu, SweepParameter::Theta, SweepParameter::Pi, SweepParameter::GScale] {
        assert_eq!(SweepParameter::parse(p.name()).unwrap(), p);
    }
    assert!(SweepParameter::parse("lambda").is_err());
    assert!(paired_sweep(&spec(300, 2), SweepParameter::Pi, &[0.02]).is_err());
}

#[test]
fn uniform_start_runs() {
    let mut s = spec(300, 2);
    s.run.start = StartState::Uniform;
    let rep = run(&s).unwrap();
    assert!(rep.runs.iter().all(|(_, r)| r.omega[0] > r.omega[29]));
}

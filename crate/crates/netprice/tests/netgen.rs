use netprice::moments::{MomentProvider, TruncatedPareto};
use netprice::netgen::{self, build_economy, degree_moment, knn_profile, sample_degrees, Economy, NetworkParams};
use netprice::sparse::CscMatrix;
use netprice::Error;

fn params(n: usize, seed: u64) -> NetworkParams {
    NetworkParams { n, seed, ..NetworkParams::default() }
}

#[test]
fn degenerate_support_is_a_point_mass() {
    let p = NetworkParams { n: 1, d_min: 5, d_max: 5, ..NetworkParams::default() };
    assert_eq!(sample_degrees(&p).unwrap(), vec![5]);
    assert_eq!(degree_moment(&p, 1.7), 5f64.powf(1.7));
}

#[test]
fn steep_exponent_collapses_onto_d_min() {
    let p = NetworkParams { n: 10_000, alpha: 50.0, ..NetworkParams::default() };
    let d = sample_degrees(&p).unwrap();
    let mean = d.iter().sum::<usize>() as f64 / d.len() as f64;
    assert!((mean - 2.0).abs() < 0.1, "mean {mean}");
}

#[test]
fn sample_mean_matches_truncated_pareto_mean() {
    // The rounded draw is compared with its own exact law: P(round = k)
    // from the continuous CDF on [k − 1/2, k + 1/2] clipped to the support.
    let p = NetworkParams { n: 100_000, seed: 3, ..NetworkParams::default() };
    let law = p.law();
    let (lo, hi) = (p.d_min as f64, p.d_max as f64);
    let mut mean = 0.0;
    let mut second = 0.0;
    for k in p.d_min..=p.d_max {
        let a = (k as f64 - 0.5).max(lo);
        let b = (k as f64 + 0.5).min(hi);
        let w = law.cdf(b) - law.cdf(a);
        mean += w * k as f64;
        second += w * (k * k) as f64;
    }
    let se = ((second - mean * mean) / p.n as f64).sqrt();
    let d = sample_degrees(&p).unwrap();
    let sample = d.iter().sum::<usize>() as f64 / d.len() as f64;
    assert!((sample - mean).abs() < 3.0 * se, "sample {sample} exact {mean} se {se}");
    // The continuous mean differs from the rounded one by less than 1/2.
    assert!((law.moment(1.0) - mean).abs() < 0.5);
}

#[test]
fn degrees_stay_in_support_and_are_seeded() {
    let p = params(5000, 11);
    let a = sample_degrees(&p).unwrap();
    assert!(a.iter().all(|&d| (p.d_min..=p.d_max).contains(&d)));
    assert_eq!(a, sample_degrees(&p).unwrap());
    assert_ne!(a, sample_degrees(&params(5000, 12)).unwrap());
}

#[test]
fn bad_support_is_a_parameter_error() {
    let p = NetworkParams { d_min: 10, d_max: 5, ..NetworkParams::default() };
    assert!(matches!(sample_degrees(&p), Err(Error::Param(_))));
    let p = NetworkParams { d_max: 2000, n: 2000, ..NetworkParams::default() };
    assert!(matches!(build_economy(&p), Err(Error::Param(_))));
    let p = NetworkParams { nu: 1.0, ..NetworkParams::default() };
    assert!(matches!(build_economy(&p), Err(Error::Param(_))));
}

#[test]
fn moment_normalization_and_quadrature() {
    let p = NetworkParams::default();
    assert!((degree_moment(&p, 0.0) - 1.0).abs() < 1e-14);
    // Composite Simpson in log-space as an independent oracle.
    let law = TruncatedPareto::new(2.5, 2.0, 100.0);
    let c = 1.5 / (2f64.powf(-1.5) - 100f64.powf(-1.5));
    let (a, b) = (2f64.ln(), 100f64.ln());
    let m = 20_000;
    let h = (b - a) / m as f64;
    let f = |x: f64| c * x.exp().powf(1.0 - 2.5) * x.exp();
    let mut s = f(a) + f(b);
    for k in 1..m {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    let quad = s * h / 3.0;
    assert!((law.moment(1.0) - quad).abs() < 1e-8, "{} vs {quad}", law.moment(1.0));
    assert!((degree_moment(&p, 1.0) - quad).abs() < 1e-8);
}

#[test]
fn two_node_economy_normalizes_exactly() {
    let a = CscMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
    let e = Economy::from_parts(NetworkParams::default(), vec![1, 1], vec![0, 1], 0.0, a).unwrap();
    assert_eq!(e.adjacency.column_sums(), vec![1.0, 1.0]);
    assert!((e.stationary[0] - 0.5).abs() < 1e-12);
}

#[test]
fn non_stochastic_matrix_is_rejected() {
    let a = CscMatrix::from_dense(&[vec![0.5, 1.0], vec![0.4, 0.0]]);
    assert!(Economy::from_parts(NetworkParams::default(), vec![1, 1], vec![0, 0], 0.0, a).is_err());
}

#[test]
fn generated_economy_satisfies_standing_properties() {
    let e = build_economy(&params(800, 5)).unwrap();
    assert!(e.adjacency.stochasticity_error() < 1e-12);
    assert!(e.adjacency.is_strongly_connected());
    assert!(e.stationary.iter().all(|&v| v > 0.0));
    let av = e.adjacency.mul_vec(&e.stationary);
    let res: f64 = av.iter().zip(&e.stationary).map(|(x, y)| (x - y).abs()).sum();
    assert!(res < 1e-10, "residual {res}");
    for (q, d) in e.quantities.iter().zip(&e.degrees) {
        assert_eq!(*q, (*d * *d) as f64);
    }
    // Each buyer spends uniformly over its suppliers.
    for j in 0..e.n() {
        let col: Vec<f64> = e.adjacency.column(j).map(|(_, v)| v).filter(|&v| v > 1e-3).collect();
        let w = 1.0 / col.len() as f64;
        assert!(col.iter().all(|v| (v - w).abs() < 1e-5));
    }
}

#[test]
fn sectors_are_balanced_within_degree_classes() {
    let e = build_economy(&params(1000, 2)).unwrap();
    let mut by_degree = std::collections::BTreeMap::<usize, (i64, i64)>::new();
    for (d, s) in e.degrees.iter().zip(&e.sectors) {
        let c = by_degree.entry(*d).or_default();
        if *s == 0 {
            c.0 += 1
        } else {
            c.1 += 1
        }
    }
    let total: i64 = by_degree.values().map(|(a, b)| a - b).sum();
    assert!(total.abs() <= 1);
}

#[test]
fn same_seed_gives_identical_snapshot() {
    let a = build_economy(&params(600, 9)).unwrap();
    let b = build_economy(&params(600, 9)).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let back = Economy::from_json(&a.to_json().unwrap()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn knn_profile_of_regular_graph_is_flat() {
    // Directed ring with two suppliers per buyer, every degree 2.
    let n = 6;
    let cols = (0..n).map(|j| vec![((j + 1) % n, 0.5), ((j + 2) % n, 0.5)]).collect();
    let a = CscMatrix::from_columns(n, cols);
    let e = Economy::from_parts(NetworkParams::default(), vec![2; n], vec![0; n], 0.0, a).unwrap();
    assert_eq!(knn_profile(&e), vec![(2, 2.0)]);
    assert_eq!(netgen::knn_slope(&e), None);
}

#[test]
fn knn_profile_of_star_is_disassortative() {
    // Hub 0 (degree 4) buys from four leaves (degree 1); each leaf buys from
    // the hub. The hub's own-purchase makes the chain aperiodic and is
    // ignored by the profile.
    let n = 5;
    let mut cols = vec![(0..n).map(|i| (i, 0.2)).collect::<Vec<_>>()];
    cols.extend((1..n).map(|_| vec![(0, 1.0)]));
    let a = CscMatrix::from_columns(n, cols);
    let e = Economy::from_parts(NetworkParams::default(), vec![4, 1, 1, 1, 1], vec![0; n], 0.0, a).unwrap();
    let prof = knn_profile(&e);
    assert_eq!(prof, vec![(1, 4.0), (4, 1.0)]);
    assert!(prof[1].1 < prof[0].1);
}

#[test]
fn realized_knn_slope_matches_target() {
    let p = params(5000, 1);
    let e = build_economy(&p).unwrap();
    let s = netgen::knn_slope(&e).unwrap();
    assert!((s + p.nu).abs() < 0.15, "slope {s}");
}

#[test]
fn explicit_tilt_skips_calibration() {
    let p = NetworkParams { n: 400, tilt: Some(0.0), ..NetworkParams::default() };
    let e = build_economy(&p).unwrap();
    assert_eq!(e.tilt, 0.0);
}

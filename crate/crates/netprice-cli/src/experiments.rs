//! Named experiments. Each writes report.json with a PASS/FAIL verdict per
//! check plus the CSVs behind it. A FAIL verdict is a result, not an error:
//! the process still exits 0.

use std::cell::RefCell;
use std::io::Write;
use std::path::PathBuf;

use netprice::ensemble::{concentration_check, EnsembleSpec, lambda2_binning, run_replications, variance_scaling, SweepTable};
use netprice::export::{self, write_rows};
use netprice::netgen::build_economy;
use netprice::pipeline::{self, transient_deviation, transient_end, RunSummary};
use netprice::stats::{self, elasticities};
use netprice::theory::{
    c_ub_closure, calvo_baselines, menu_cost_baselines, menu_cost_hazard, sticky_window_series, w_omega_closed,
    wronskian_band, zeta_star,
};
use netprice::spectral;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::OutDir;
use crate::{at, CliError};

pub const NAMES: &[&str] = &["thm1", "cor1a", "cor1b", "thm2", "cor2a", "cor2b", "sec5-baselines", "concentration"];

/// Minimum share of paired differences with the predicted sign.
pub const SIGN_AGREEMENT: f64 = 0.8;

pub fn check_name(name: &str) -> Result<(), CliError> {
    if NAMES.contains(&name) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("unknown experiment `{name}`; valid names: {}", NAMES.join(", "))))
    }
}

#[derive(Serialize)]
struct Check {
    name: String,
    value: f64,
    requirement: String,
    pass: bool,
}

#[derive(Default)]
struct Report {
    checks: Vec<Check>,
    data: serde_json::Map<String, Value>,
}

impl Report {
    fn check(&mut self, name: &str, value: f64, requirement: &str, pass: bool) {
        self.checks.push(Check { name: name.into(), value, requirement: requirement.into(), pass });
    }

    fn put(&mut self, key: &str, value: impl Serialize) {
        self.data.insert(key.into(), serde_json::to_value(value).expect("serializable"));
    }
}

pub fn run(name: &str, cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let mut out = OutDir::create(cfg, cfg.ensemble.base_seed)?;
    let mut rep = Report::default();
    match name {
        "thm1" => thm1(cfg, &mut out, &mut rep)?,
        "cor1a" => cor1a(cfg, &mut out, &mut rep)?,
        "cor1b" => cor1b(cfg, &mut out, &mut rep)?,
        "thm2" => thm2(cfg, &mut out, &mut rep)?,
        "cor2a" => cor2a(cfg, &mut out, &mut rep)?,
        "cor2b" => cor2b(cfg, &mut out, &mut rep)?,
        "sec5-baselines" => baselines(cfg, &mut out, &mut rep)?,
        "concentration" => concentration(cfg, &mut out, &mut rep)?,
        _ => check_name(name)?,
    }
    let pass = rep.checks.iter().all(|c| c.pass);
    let verdict = if pass { "PASS" } else { "FAIL" };
    for c in &rep.checks {
        println!("  {} {} = {:.6e} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.requirement);
    }
    println!("experiment {name}: {verdict}");
    out.json("report.json", &json!({ "experiment": name, "verdict": verdict, "checks": rep.checks, "data": rep.data }))?;
    out.finish()
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn ensemble(spec: &EnsembleSpec, rep: &mut Report, key: &str) -> Result<Vec<(usize, RunSummary)>, CliError> {
    let (runs, failures) = at("ensemble", run_replications(spec))?;
    rep.put(&format!("{key}_excluded"), failures);
    Ok(runs)
}

fn thm1(cfg: &RunConfig, out: &mut OutDir, rep: &mut Report) -> Result<(), CliError> {
    let mut spec = cfg.ensemble_spec();
    spec.run.hazard = None;
    let runs = ensemble(&spec, rep, "flexible")?;
    let pi = spec.run.pi;
    let target = pi.ln_1p();
    let (mut bounded, mut converged) = (0, 0);
    for (_, r) in &runs {
        let end = r.transient_end.min(r.phi.len());
        bounded += r.phi[..end].iter().all(|&p| p <= target + 2e-3) as usize;
        converged += r.phi[end - 1..].iter().all(|&p| (p - target).abs() < 1e-3) as usize;
    }
    let n = runs.len() as f64;
    rep.check("share_bounded_over_transient", bounded as f64 / n, ">= 0.8 of draws keep phi_T <= log(1+pi) + 2e-3", bounded as f64 / n >= 0.8);
    rep.check("share_converged_after_5_tau", converged as f64 / n, "all draws within 1e-3 of log(1+pi)", converged == runs.len());

    let mut taus: Vec<f64> = runs.iter().map(|(_, r)| r.relaxation_time).collect();
    taus.sort_by(f64::total_cmp);
    let median = taus[taus.len() / 2];
    let (a, b) = (median.ceil() as usize, transient_end(median).min(spec.run.horizon));
    let points: Vec<(f64, f64)> = runs.iter().map(|(_, r)| (r.lambda2, transient_deviation(&r.phi, pi, a, b))).collect();
    let bins = at("ensemble", lambda2_binning(&points, cfg.ensemble.resamples, cfg.ensemble.base_seed))?;
    rep.check("lambda2_binning_share", bins.bootstrap_share, ">= 0.8 of resamples put the high-lambda2 quartile above", bins.bootstrap_share >= 0.8);
    rep.put("binning", &bins);
    rep.put("deviation_window", [a, b]);

    let law = cfg.network.law();
    let zs = zeta_star(&law, cfg.network.nu, cfg.network.alpha);
    rep.put("zeta", spec.run.zeta);
    rep.put("zeta_star", zs);
    rep.put("zeta_below_star", zs.root.map(|r| spec.run.zeta < r));
    out.csv("replications.csv", |w| export::write_summaries(w, &runs))?;
    out.csv("paths.csv", |w| export::write_summary_paths(w, &runs))?;
    Ok(())
}

fn cor1a(cfg: &RunConfig, out: &mut OutDir, rep: &mut Report) -> Result<(), CliError> {
    let economy = at("generate", build_economy(&cfg.network))?;
    let s = at("spectral", spectral::subdominant_pair(&economy))?;
    let k = stats::numeraire(&economy.degrees, cfg.network.nu);
    let mu = economy.degrees[k] as f64 / economy.degrees.iter().sum::<usize>() as f64;
    let c_ub = c_ub_closure(cfg.network.alpha, cfg.network.nu, cfg.monetary.theta);

    #[derive(Serialize)]
    struct Row {
        t: usize,
        pi: f64,
        lambda2: f64,
        a: f64,
        b: f64,
        c: f64,
        band_lo: Option<f64>,
        band_hi: Option<f64>,
    }
    let mut lambdas: Vec<f64> = (0..15).map(|j| 0.05 + 0.93 * j as f64 / 14.0).collect();
    lambdas.push(s.lambda2);
    let mut rows = Vec::new();
    let (mut coef_ok, mut band_ok) = (true, true);
    for t in 2..=40 {
        for i in 0..15 {
            let pi = 0.001 + 0.1 * i as f64 / 14.0;
            for &l2 in &lambdas {
                let w = at("theory", wronskian_band(l2, pi, c_ub, mu, t))?;
                coef_ok &= w.a > 0.0 && w.c > 0.0;
                if let Some((_, hi)) = w.band {
                    band_ok &= hi < 0.0;
                }
                rows.push(Row { t, pi, lambda2: l2, a: w.a, b: w.b, c: w.c, band_lo: w.band.map(|x| x.0), band_hi: w.band.map(|x| x.1) });
            }
        }
    }
    let bands = rows.iter().filter(|r| r.band_lo.is_some()).count();
    rep.check("quadratic_coefficients_positive", coef_ok as u8 as f64, "a_T > 0 and c_T > 0 on the grid", coef_ok);
    rep.check("bands_in_negative_delta", bands as f64, "every computed band lies in delta < 0", band_ok);
    let realized: Vec<_> = (2..=cfg.monetary.horizon.min(40))
        .filter_map(|t| wronskian_band(s.lambda2, cfg.monetary.pi, c_ub, mu, t).ok())
        .collect();
    rep.put("lambda2", s.lambda2);
    rep.put("c_ub", c_ub);
    rep.put("mu_numeraire", mu);
    rep.put("realized", realized);
    out.csv("wronskian.csv", |w| write_rows(w, rows))?;
    Ok(())
}

fn cor1b(cfg: &RunConfig, out: &mut OutDir, rep: &mut Report) -> Result<(), CliError> {
    let mut spec = cfg.run_spec();
    spec.hazard = None;
    let run = at("pipeline", pipeline::run(&spec))?;
    let (l2, pi) = (run.spectral.lambda2, spec.pi);
    let c = &run.trajectory.misalignment;
    let m_tilde = run.trajectory.mass[0];
    let rho = l2 / (1.0 + pi);

    #[derive(Serialize)]
    struct Row {
        t: usize,
        t_reset: usize,
        under: f64,
        over: f64,
        brute_force: f64,
    }
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for t in 2..=spec.horizon {
        for tr in 1..t {
            let w = at("theory", sticky_window_series(l2, pi, c, run.steady.c_ub, m_tilde, t, tr))?;
            let brute: f64 = (tr..=t).map(|l| (1..l).map(|k| c[k] * rho.powi((l - k) as i32)).sum::<f64>()).sum();
            worst = worst.max((w.under + w.over - brute).abs());
            rows.push(Row { t, t_reset: tr, under: w.under, over: w.over, brute_force: brute });
        }
    }
    rep.check("window_decomposition_error", worst, "< 1e-12 against the double sum", worst < 1e-12);
    let v = at("theory", sticky_window_series(l2, pi, c, run.steady.c_ub, m_tilde, 3, 1))?.v;
    rep.put("lambda2", l2);
    rep.put("v_linear_coefficient", v);
    out.csv("window.csv", |w| write_rows(w, rows))?;
    out.csv("series.csv", |w| export::write_series(w, &run.trajectory))?;
    Ok(())
}

fn thm2(cfg: &RunConfig, out: &mut OutDir, rep: &mut Report) -> Result<(), CliError> {
    let mut spec = cfg.ensemble_spec();
    spec.run.hazard = None;
    let pi = spec.run.pi;
    let runs = ensemble(&spec, rep, "inflation")?;
    let mut rest_spec = spec.clone();
    rest_spec.run.pi = 0.0;
    let rest = ensemble(&rest_spec, rep, "zero_inflation")?;
    let om = mean(runs.iter().map(|(_, r)| r.omega_bar));
    let om0 = mean(rest.iter().map(|(_, r)| r.omega_bar));
    let (a, b) = spec.run.window;
    let worst_phi = (a - 1..b)
        .map(|t| (mean(runs.iter().map(|(_, r)| r.phi[t])) - pi.ln_1p()).abs())
        .fold(0.0, f64::max);
    rep.check("omega_ratio_to_zero_inflation", om / om0, "> 10", om > 10.0 * om0);
    rep.check("phi_window_deviation", worst_phi, "< 1e-3", worst_phi < 1e-3);

    let l2 = mean(runs.iter().map(|(_, r)| r.lambda2));
    let n = cfg.network.nu;
    rep.put("omega_bar", om);
    rep.put("omega_bar_zero_inflation", om0);
    rep.put("psi_bar", mean(runs.iter().map(|(_, r)| r.psi_bar)));
    rep.put("first_order_omega", w_omega_closed(cfg.network.alpha, n, spec.run.theta, n, l2, 1.0).ok().map(|w| pi * w));
    let picks: [(&str, fn(&RunSummary) -> f64); 2] = [("omega_bar", |r| r.omega_bar), ("psi_bar", |r| r.psi_bar)];
    for (key, pick) in picks {
        let points: Vec<(f64, f64)> = runs.iter().map(|(_, r)| (r.lambda2, pick(r))).collect();
        if let Ok(b) = lambda2_binning(&points, cfg.ensemble.resamples, cfg.ensemble.base_seed) {
            rep.put(&format!("lambda2_binning_{key}"), b);
        }
    }
    out.csv("replications.csv", |w| export::write_summaries(w, &runs))?;
    out.csv("replications_zero_inflation.csv", |w| export::write_summaries(w, &rest))?;
    Ok(())
}

fn cor2a(cfg: &RunConfig, out: &mut OutDir, rep: &mut Report) -> Result<(), CliError> {
    let mut spec = cfg.ensemble_spec();
    spec.run.hazard = None;
    let pi0 = spec.run.pi;
    if !(pi0 > 0.0) {
        return Err(CliError::Usage("cor2a needs monetary.pi > 0".into()));
    }
    let h = pi0 / 10.0;
    let (a, b) = spec.run.window;

    #[derive(Serialize)]
    struct Arm {
        pi: f64,
        phi: f64,
        omega_bar: f64,
        psi_bar: f64,
        included: usize,
    }
    let arms = RefCell::new(Vec::new());
    let runner = |pi: f64| {
        let mut s = spec.clone();
        s.run.pi = pi;
        let (runs, _) = run_replications(&s)?;
        let phi = mean(runs.iter().map(|(_, r)| mean(r.phi[a - 1..b].iter().copied())));
        let om = mean(runs.iter().map(|(_, r)| r.omega_bar));
        let ps = mean(runs.iter().map(|(_, r)| r.psi_bar));
        arms.borrow_mut().push(Arm { pi, phi, omega_bar: om, psi_bar: ps, included: runs.len() });
        Ok((phi, om, ps))
    };
    let (lphi, lo, lp) = at("ensemble", elasticities(runner, pi0, h))?;
    rep.check("omega_elasticity", lo, "in [0.85, 1.15]", (0.85..=1.15).contains(&lo));
    rep.check("psi_elasticity", lp, "in [1.8, 2.2]", (1.8..=2.2).contains(&lp));
    rep.put("phi_elasticity", lphi);
    rep.put("step", h);
    out.csv("arms.csv", |w| write_rows(w, arms.into_inner()))?;
    Ok(())
}

fn cor2b(cfg: &RunConfig, out: &mut OutDir, rep: &mut Report) -> Result<(), CliError> {
    let mut spec = cfg.ensemble_spec();
    spec.run.hazard = Some(cfg.hazard_spec());
    let runs = ensemble(&spec, rep, "paired")?;

    #[derive(Serialize)]
    struct Row {
        replication: usize,
        seed: u64,
        relaxation_time: f64,
        flexible_early: f64,
        sticky_early: f64,
        flexible_steady: f64,
        sticky_steady: f64,
        crossover: bool,
    }
    let rows: Vec<Row> = runs
        .iter()
        .map(|(i, r)| {
            let sticky = r.sticky_omega.as_ref().expect("sticky regime configured");
            let early = (r.relaxation_time.ceil() as usize).clamp(1, r.omega.len());
            let fe = mean(r.omega[..early].iter().copied());
            let se = mean(sticky[..early].iter().copied());
            let ss = r.sticky_omega_bar.expect("sticky regime configured");
            Row {
                replication: *i,
                seed: r.seed,
                relaxation_time: r.relaxation_time,
                flexible_early: fe,
                sticky_early: se,
                flexible_steady: r.omega_bar,
                sticky_steady: ss,
                crossover: se < fe && ss > r.omega_bar,
            }
        })
        .collect();
    let share = rows.iter().filter(|r| r.crossover).count() as f64 / rows.len() as f64;
    rep.check("crossover_share", share, ">= 0.7 of paired seeds", share >= 0.7);

    #[derive(Serialize)]
    struct PathRow {
        horizon: usize,
        flexible_omega: f64,
        sticky_omega: f64,
    }
    let paths: Vec<PathRow> = (0..spec.run.horizon)
        .map(|t| PathRow {
            horizon: t + 1,
            flexible_omega: mean(runs.iter().map(|(_, r)| r.omega[t])),
            sticky_omega: mean(runs.iter().map(|(_, r)| r.sticky_omega.as_ref().unwrap()[t])),
        })
        .collect();
    out.csv("crossover.csv", |w| write_rows(w, rows))?;
    out.csv("omega_paths.csv", |w| write_rows(w, paths))?;
    Ok(())
}

/// Monte Carlo draws for the Calvo check.
const CALVO_DRAWS: usize = 1_000_000;

fn baselines(cfg: &RunConfig, out: &mut OutDir, rep: &mut Report) -> Result<(), CliError> {
    let (pi, eta) = (cfg.monetary.pi, cfg.hazard.calvo_eta);
    let exact = at("theory", calvo_baselines(pi, eta))?;
    if eta >= 1.0 {
        return Err(CliError::Usage("hazard.calvo_eta must be below 1 for the Monte Carlo check".into()));
    }
    // Geometric ages on {0, 1, ...} and spells on {1, 2, ...} by inversion
    // of stratified uniforms.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.ensemble.base_seed);
    let n = CALVO_DRAWS;
    let log_q = (1.0 - eta).ln();
    let (mut r1, mut r2, mut dev2, mut spell) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let u = (i as f64 + rng.random::<f64>()) / n as f64;
        let r = (1.0 + pi).powf(((1.0 - u).ln() / log_q).floor());
        r1 += r;
        r2 += r * r;
        dev2 += (r - 1.0) * (r - 1.0);
        let v = (i as f64 + rng.random::<f64>()) / n as f64;
        spell += ((1.0 - v).ln() / log_q).floor() + 1.0;
    }
    let nf = n as f64;

    #[derive(Serialize)]
    struct Row {
        quantity: &'static str,
        closed_form: f64,
        monte_carlo: f64,
        relative_error: f64,
    }
    let rows: Vec<Row> = [
        ("phi", exact.phi, pi * spell / nf),
        ("e_r", exact.e_r, r1 / nf),
        ("e_r2", exact.e_r2, r2 / nf),
        ("omega", exact.omega, (dev2 / nf).sqrt()),
    ]
    .into_iter()
    .map(|(q, c, m)| Row { quantity: q, closed_form: c, monte_carlo: m, relative_error: (m / c - 1.0).abs() })
    .collect();
    for r in &rows {
        rep.check(&format!("calvo_{}_relative_error", r.quantity), r.relative_error, "< 1e-3", r.relative_error < 1e-3);
    }
    let one = at("theory", calvo_baselines(pi, 1.0))?;
    let limit = (one.phi - pi).abs().max(one.omega).max((one.e_r - 1.0).abs()).max((one.e_r2 - 1.0).abs());
    rep.check("eta_one_limit_error", limit, "< 1e-8", limit < 1e-8);

    #[derive(Serialize)]
    struct MenuRow {
        pi: f64,
        eta: f64,
        phi: f64,
        omega: f64,
    }
    let (e0, beta, kappa) = (cfg.hazard.menu_eta0, cfg.hazard.menu_beta, cfg.hazard.menu_kappa);
    let mut menu = Vec::new();
    for k in 0..=20 {
        let p = 0.005 * k as f64;
        let m = at("theory", menu_cost_baselines(p, |x| menu_cost_hazard(e0, beta, kappa, x)))?;
        menu.push(MenuRow { pi: p, eta: m.eta, phi: m.phi, omega: m.omega });
    }
    rep.put("calvo", exact);
    rep.put("draws", n);
    out.csv("calvo.csv", |w| write_rows(w, rows))?;
    out.csv("menu_cost.csv", |w| write_rows(w, menu))?;
    Ok(())
}

fn concentration(cfg: &RunConfig, out: &mut OutDir, rep: &mut Report) -> Result<(), CliError> {
    let sizes = &cfg.ensemble.sizes;
    if sizes.len() < 2 {
        return Err(CliError::Usage("ensemble.sizes needs at least two network sizes".into()));
    }
    let t = cfg.ensemble.concentration_horizon;
    if t < 1 || t > cfg.monetary.horizon {
        return Err(CliError::Usage("ensemble.concentration_horizon must lie in 1..=monetary.horizon".into()));
    }
    let reference = if sizes.contains(&2000) { 2000 } else { *sizes.iter().max().unwrap() };

    #[derive(Serialize)]
    struct Draw {
        n: usize,
        replication: usize,
        phi: f64,
        omega: f64,
        psi: f64,
    }
    #[derive(Serialize)]
    struct Summary {
        n: usize,
        statistic: &'static str,
        variance: f64,
        quantile_correlation: f64,
        skewness: f64,
        excess_kurtosis: f64,
        chebyshev_exceedance: f64,
    }
    let names = ["phi", "omega", "psi"];
    let mut variances = [vec![], vec![], vec![]];
    let (mut draws, mut summaries) = (Vec::new(), Vec::new());
    for &n in sizes {
        let mut spec = cfg.ensemble_spec();
        spec.run.hazard = None;
        spec.run.network.n = n;
        let runs = ensemble(&spec, rep, &format!("n{n}"))?;
        let cols: [Vec<f64>; 3] = [
            runs.iter().map(|(_, r)| r.phi[t - 1]).collect(),
            runs.iter().map(|(_, r)| r.omega[t - 1]).collect(),
            runs.iter().map(|(_, r)| r.psi[t - 1]).collect(),
        ];
        for (i, (rep_idx, _)) in runs.iter().enumerate() {
            draws.push(Draw { n, replication: *rep_idx, phi: cols[0][i], omega: cols[1][i], psi: cols[2][i] });
        }
        for k in 0..3 {
            let c = concentration_check(&cols[k]);
            variances[k].push(c.variance);
            if n == reference {
                let qc = c.quantile_correlation;
                rep.check(&format!("{}_quantile_correlation_n{n}", names[k]), qc, ">= 0.95", qc >= 0.95);
                if k == 0 {
                    let ex = c.chebyshev_exceedance;
                    rep.check(&format!("phi_chebyshev_exceedance_n{n}"), ex, "<= 0.25 at 2 s.d.", ex <= 0.25);
                }
            }
            summaries.push(Summary {
                n,
                statistic: names[k],
                variance: c.variance,
                quantile_correlation: c.quantile_correlation,
                skewness: c.skewness,
                excess_kurtosis: c.excess_kurtosis,
                chebyshev_exceedance: c.chebyshev_exceedance,
            });
        }
    }
    for k in 0..3 {
        let slope = variance_scaling(sizes, &variances[k]);
        rep.check(&format!("{}_variance_slope", names[k]), slope, "in [-1.3, -0.7]", (-1.3..=-0.7).contains(&slope));
    }
    rep.put("horizon", t);
    out.csv("concentration.csv", |w| write_rows(w, summaries))?;
    out.csv("draws.csv", |w| write_rows(w, draws))?;
    Ok(())
}

pub fn write_sweep_rows<W: Write>(w: W, table: &SweepTable) -> netprice::Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        from: f64,
        to: f64,
        statistic: &'a str,
        expected_sign: Option<f64>,
        pairs: usize,
        agreement: Option<f64>,
        mean_difference: f64,
    }
    write_rows(
        w,
        table.rows.iter().map(|r| Row {
            from: r.from,
            to: r.to,
            statistic: &r.statistic,
            expected_sign: r.expected_sign,
            pairs: r.differences.len(),
            agreement: r.agreement,
            mean_difference: mean(r.differences.iter().copied()),
        }),
    )
}

pub fn write_sweep_arms<W: Write>(w: W, table: &SweepTable) -> netprice::Result<()> {
    #[derive(Serialize)]
    struct Row {
        value: f64,
        replication: usize,
        omega_bar: f64,
        psi_bar: f64,
        final_mass: f64,
    }
    write_rows(
        w,
        table.values.iter().zip(&table.arms).flat_map(|(&value, arm)| {
            arm.iter().map(move |&(replication, omega_bar, psi_bar, final_mass)| Row {
                value,
                replication,
                omega_bar,
                psi_bar,
                final_mass,
            })
        }),
    )
}

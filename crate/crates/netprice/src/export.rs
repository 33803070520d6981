//! Tidy CSV writers: comma separated, header row, shortest round-trip
//! float formatting with '.' decimals.

use std::collections::HashSet;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::monetary::MoneyTrajectory;
use crate::pipeline::RunSummary;
use crate::pricing::PricePath;
use crate::stats::DistortionRecord;

#[derive(Serialize)]
struct BalanceRow {
    t: usize,
    firm_id: usize,
    balance: f64,
    share: f64,
    nominal_demand: f64,
}

#[derive(Serialize)]
struct SeriesRow {
    t: usize,
    mass: f64,
    misalignment: f64,
}

#[derive(Serialize)]
struct PriceRow {
    t: usize,
    firm_id: usize,
    posted_price: f64,
    market_clearing_price: f64,
    age: usize,
    reset_flag: u8,
}

#[derive(Serialize)]
struct EventRow {
    t: usize,
    firm_id: usize,
}

#[derive(Serialize)]
struct DistortionRow {
    horizon: usize,
    phi: f64,
    omega: f64,
    psi: f64,
}

#[derive(Serialize)]
struct SummaryRow {
    replication: usize,
    seed: u64,
    lambda2: f64,
    relaxation_time: f64,
    knn_slope: Option<f64>,
    c_ub: f64,
    c_lb: f64,
    omega_bar: f64,
    psi_bar: f64,
    final_mass: f64,
    transient_end: usize,
    sticky_omega_bar: Option<f64>,
}

/// Serializes each row as one CSV record under a header taken from the field names.
pub fn write_rows<W: Write, R: Serialize>(w: W, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// One row per (t, firm): balance, injection share and nominal demand.
pub fn write_trajectory<W: Write>(w: W, traj: &MoneyTrajectory) -> Result<()> {
    let rows = (0..traj.balances.len()).flat_map(|t| {
        (0..traj.balances[t].len()).map(move |i| BalanceRow {
            t,
            firm_id: i,
            balance: traj.balances[t][i],
            share: traj.shares[t][i],
            nominal_demand: traj.nominal_demand[t][i],
        })
    });
    write_rows(w, rows)
}

/// Scalar series M_t and C_t keyed by t.
pub fn write_series<W: Write>(w: W, traj: &MoneyTrajectory) -> Result<()> {
    let rows = traj
        .mass
        .iter()
        .zip(&traj.misalignment)
        .enumerate()
        .map(|(t, (&mass, &misalignment))| SeriesRow { t, mass, misalignment });
    write_rows(w, rows)
}

pub fn write_price_path<W: Write>(w: W, path: &PricePath) -> Result<()> {
    let resets: HashSet<(usize, usize)> = path.reset_events.iter().copied().collect();
    let resets = &resets;
    let rows = (0..path.prices.len()).flat_map(|t| {
        (0..path.prices[t].len()).map(move |i| PriceRow {
            t,
            firm_id: i,
            posted_price: path.prices[t][i],
            market_clearing_price: path.market_clearing[t][i],
            age: path.ages[t][i],
            reset_flag: resets.contains(&(t, i)) as u8,
        })
    });
    write_rows(w, rows)
}

pub fn write_reset_events<W: Write>(w: W, path: &PricePath) -> Result<()> {
    write_rows(w, path.reset_events.iter().map(|&(t, firm_id)| EventRow { t, firm_id }))
}

pub fn write_distortions<W: Write>(w: W, rec: &DistortionRecord) -> Result<()> {
    let rows = (0..rec.horizons.len()).map(|k| DistortionRow {
        horizon: rec.horizons[k],
        phi: rec.phi[k],
        omega: rec.omega[k],
        psi: rec.psi[k],
    });
    write_rows(w, rows)
}

/// JSON header for a distortion CSV: everything except the per-horizon columns.
pub fn distortion_header(rec: &DistortionRecord) -> serde_json::Value {
    serde_json::json!({
        "zeta": rec.zeta,
        "numeraire": rec.numeraire,
        "numeraire_rule": rec.numeraire_rule,
        "window": [rec.window.0, rec.window.1],
        "omega_bar": rec.time_averages.0,
        "psi_bar": rec.time_averages.1,
    })
}

/// Scalar per-replication statistics.
pub fn write_summaries<W: Write>(w: W, runs: &[(usize, RunSummary)]) -> Result<()> {
    let rows = runs.iter().map(|(r, s)| SummaryRow {
        replication: *r,
        seed: s.seed,
        lambda2: s.lambda2,
        relaxation_time: s.relaxation_time,
        knn_slope: s.knn_slope,
        c_ub: s.c_ub,
        c_lb: s.c_lb,
        omega_bar: s.omega_bar,
        psi_bar: s.psi_bar,
        final_mass: s.final_mass,
        transient_end: s.transient_end,
        sticky_omega_bar: s.sticky_omega_bar,
    });
    write_rows(w, rows)
}

/// Per-horizon φ, ω, ψ for every replication, long format.
pub fn write_summary_paths<W: Write>(w: W, runs: &[(usize, RunSummary)]) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        replication: usize,
        horizon: usize,
        phi: f64,
        omega: f64,
        psi: f64,
    }
    let rows = runs.iter().flat_map(|(r, s)| {
        (0..s.phi.len()).map(move |k| Row { replication: *r, horizon: k + 1, phi: s.phi[k], omega: s.omega[k], psi: s.psi[k] })
    });
    write_rows(w, rows)
}
